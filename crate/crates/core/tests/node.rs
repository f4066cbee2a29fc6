use qpragma::elaborator::check_source;
use qpragma::node::{dump_trace, run, RunConfig, RunResult};

fn example(name: &str) -> String {
    let path = format!("{}/examples/{name}.qpc", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn run_with(src: &str, config: RunConfig) -> RunResult {
    let elab = check_source(src).unwrap_or_else(|d| panic!("{d:?}"));
    run(&elab, &config).unwrap_or_else(|e| panic!("{e}"))
}

fn run_src(src: &str) -> RunResult {
    run_with(src, RunConfig::default())
}

const QFT: &str = "
#pragma quantum routine
void qft<uint64 SIZE>(qbool qreg[SIZE]) {
    for (uint64 idx = 0UL; idx < SIZE; ++idx) {
        H(qreg[idx]);
        for (uint64 ctr = idx + 1; ctr < SIZE; ++ctr) {
            double angle = M_PI / (1 << (ctr - idx));
            PH(angle).ctrl(qreg[ctr], qreg[idx]);
        }
    }
}
";

#[test]
fn routine_calls_and_declarators_are_requests() {
    let r = run_src(&example("listing10_routine"));
    assert_eq!(r.stats.requests, 7);
}

#[test]
fn empty_main_issues_no_request() {
    let r = run_src("void main() { int x = 3; x += 1; }");
    assert_eq!(r.stats.requests, 0);
    assert_eq!(r.stats.gates, 0);
}

#[test]
fn scope_collapses_the_bell_loop() {
    assert_eq!(run_src(&example("listing06_scope")).stats.requests, 1);
    assert!(run_src(&example("listing06_noscope")).stats.requests > 100);
}

#[test]
fn qft_call_from_host_is_one_request_of_36_gates() {
    let src = format!("{QFT}\nvoid main() {{ qint<8> q; qft<8>(q); }}");
    let r = run_src(&src);
    // one allocation, one call
    assert_eq!(r.stats.requests, 2);
    assert_eq!(r.stats.gates, 36);

    let scoped = format!("{QFT}\nvoid main() {{ #pragma quantum scope\n {{ qint<8> q; qft<8>(q); }} }}");
    let r = run_src(&scoped);
    assert_eq!(r.stats.requests, 1);
    assert_eq!(r.stats.gates, 36);
}

#[test]
fn bell_pair_costs_two_gates() {
    let r = run_src(&example("bell"));
    assert_eq!(r.stats.gates, 2);
    let r = run_with(
        &example("bell"),
        RunConfig {
            shots: 400,
            seed: 3,
            ..RunConfig::default()
        },
    );
    let keys: Vec<&str> = r.histogram.keys().map(String::as_str).collect();
    assert_eq!(keys, ["00", "11"]);
}

#[test]
fn with_clause_transfers_replace_remote_accesses() {
    let with = run_src(&example("listing07_scope_with")).stats;
    assert_eq!(with.transfers, 2);
    assert_eq!(with.remote_reads + with.remote_writes, 0);
    let without = run_src(&example("listing07_no_with")).stats;
    assert_eq!(without.transfers, 0);
    assert!(without.remote_reads + without.remote_writes >= 1);
    assert_eq!(run_src(&example("listing08_move")).stats.transfers, 2);
}

#[test]
fn classical_initialiser_is_undone_at_scope_end() {
    let r = run_with(
        &example("listing01_uncompute"),
        RunConfig {
            check_uncompute: true,
            trace: true,
            ..RunConfig::default()
        },
    );
    assert_eq!(r.uncompute_overlaps.len(), 1);
    assert!((r.uncompute_overlaps[0] - 1.0).abs() < 1e-9);
    let ir = dump_trace(r.trace.as_ref().unwrap());
    let lines: Vec<&str> = ir.lines().collect();
    let free = lines.iter().position(|l| l.starts_with("FREE")).unwrap();
    assert_eq!(lines[free - 1], "GATE X q0");
}

#[test]
fn dirty_region_fails_the_uncompute_check() {
    let src = "void main() { { qbool a; H(a); } }";
    let elab = check_source(src).unwrap();
    let strict = RunConfig {
        check_uncompute: true,
        ..RunConfig::default()
    };
    let err = run(&elab, &strict).unwrap_err();
    assert!(err.message.contains("uncompute"), "{err}");
    assert!(err.span.is_some());
    let r = run(&elab, &RunConfig::default()).unwrap();
    assert!((r.uncompute_overlaps[0] - 0.5).abs() < 1e-9);
}

#[test]
fn measured_regions_are_released_without_uncompute() {
    let src = "void main() { { qbool a; H(a); measure(a); } qbool b; }";
    let r = run_with(
        src,
        RunConfig {
            check_uncompute: true,
            ..RunConfig::default()
        },
    );
    assert_eq!(r.stats.measurements, 1);
    assert!(r.uncompute_overlaps.len() == 1);
}

#[test]
fn quint_measures_its_initial_value() {
    let r = run_with(
        &example("listing02_quint"),
        RunConfig {
            shots: 1000,
            ..RunConfig::default()
        },
    );
    assert_eq!(r.histogram.len(), 1);
    assert_eq!(r.histogram["00001100"], 1000);
    assert!(r.shots.iter().all(|s| s.prints == ["12"]));
}

#[test]
fn plus_state_measures_true_half_the_time() {
    let src = "void main() { qbool q; H(q); bool b = measure_and_reset(q); print(b); }";
    let shots = 10_000;
    let r = run_with(
        src,
        RunConfig {
            shots,
            seed: 11,
            ..RunConfig::default()
        },
    );
    let ones = r.histogram.get("1").copied().unwrap_or(0);
    let freq = ones as f64 / shots as f64;
    assert!((freq - 0.5).abs() < 0.015, "frequency {freq}");
}

#[test]
fn equal_seeds_give_equal_results() {
    let src = example("uniform200");
    let config = |seed| RunConfig {
        shots: 50,
        seed,
        trace: true,
        ..RunConfig::default()
    };
    let a = run_with(&src, config(5));
    let b = run_with(&src, config(5));
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
    let c = run_with(&src, config(6));
    assert_ne!(a.histogram, c.histogram);
}

#[test]
fn json_keys_keep_their_order() {
    let json = run_src(&example("bell")).to_json();
    let order = ["requests", "remote_reads", "remote_writes", "transfers", "gates", "histogram"];
    let pos: Vec<usize> = order.iter().map(|k| json.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
}

#[test]
fn compute_blocks_are_exempt_from_control() {
    let r = run_with(
        &example("rzz"),
        RunConfig {
            trace: true,
            ..RunConfig::default()
        },
    );
    let ir = dump_trace(r.trace.as_ref().unwrap());
    let kinds: Vec<&str> = ir
        .lines()
        .filter_map(|l| l.trim().strip_prefix("GATE "))
        .map(|l| l.split([' ', '(']).next().unwrap())
        .collect();
    assert_eq!(kinds, ["CCNOT", "RZ", "CCNOT"]);
}

#[test]
fn prints_join_their_arguments() {
    let r = run_src("void main() { bool t = true; int n = -3; print(\"n=\", n, \" t=\", t); }");
    assert_eq!(r.shots[0].prints, ["n=-3 t=1"]);
}

#[test]
fn classical_control_flow_and_functions() {
    let src = "
int fib(int n) { if (n < 2) return n; return fib(n - 1) + fib(n - 2); }
void main() {
    int acc = 0;
    for (int i = 0; i < 10; ++i) { if (i % 2 == 0) continue; acc += i; }
    int j = 0;
    while (true) { j++; if (j == 4) break; }
    print(acc, \",\", j, \",\", fib(10));
}";
    assert_eq!(run_src(src).shots[0].prints, ["25,4,55"]);
}

#[test]
fn quantum_condition_controls_a_block() {
    let src = "
void main() {
    quint<3> a = 5;
    qbool hit;
    #pragma quantum ctrl (a == 5)
    X(hit);
    bool h = measure(hit);
    print(h);
}";
    let r = run_with(
        src,
        RunConfig {
            check_uncompute: true,
            ..RunConfig::default()
        },
    );
    assert_eq!(r.shots[0].prints, ["1"]);
}

#[test]
fn qubit_budget_is_enforced() {
    let src = "void main() { quint<8> a; quint<8> b; }";
    let elab = check_source(src).unwrap();
    let config = RunConfig {
        max_qubits: 10,
        ..RunConfig::default()
    };
    assert!(run(&elab, &config).is_err());
}

#[test]
fn snapshot_captures_variables() {
    let r = run_src("void main() { qbool a = true; qbool b; snapshot(); }");
    let s = r.state.unwrap();
    assert_eq!(s.variables.len(), 2);
    assert_eq!(s.variables[0].0, "a");
    // a sits at bit 0
    assert!((s.amplitudes[1].re - 1.0).abs() < 1e-12);
}
