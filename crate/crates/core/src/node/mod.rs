//! Hybrid node: a host CPU driving a simulated QPU through requests.

mod controller;
mod interp;
pub mod value;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::backend::{BackendError, DEFAULT_MAX_QUBITS};
use crate::diag::{Diagnostic, Span};
use crate::elaborator::Elaborated;
use crate::qir::{expand_compute, QInstr, QirError, Qubit, Scalar};
use crate::stdlib::{Ancillas, QuantumType, StdlibError};

pub use controller::{dump_trace, TraceEntry};
use controller::Controller;
use interp::Interp;
use value::{QView, Value};

/// Accounting of one shot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub requests: u64,
    pub remote_reads: u64,
    pub remote_writes: u64,
    pub transfers: u64,
    pub gates: u64,
    pub measurements: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunError {
    pub span: Option<Span>,
    pub message: String,
}

impl RunError {
    pub fn new(message: impl Into<String>) -> RunError {
        RunError {
            span: None,
            message: message.into(),
        }
    }

    /// Attaches a location unless a more precise one is already set.
    pub fn at(mut self, span: Span) -> RunError {
        self.span.get_or_insert(span);
        self
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.span.unwrap_or_default(), format!("runtime error: {}", self.message))
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for RunError {}

macro_rules! from_error {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> RunError {
                RunError::new(e.to_string())
            }
        }
    )*};
}

from_error!(QirError, BackendError, StdlibError);

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub shots: u64,
    pub seed: u64,
    pub max_qubits: usize,
    /// Fail when an unmeasured region does not return to |0…0⟩.
    pub check_uncompute: bool,
    /// Keep the request trace of the first shot.
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            shots: 1,
            seed: 0,
            max_qubits: DEFAULT_MAX_QUBITS,
            check_uncompute: false,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShotRecord {
    /// Outcome bit strings in program order, most significant bit first.
    pub measurements: Vec<String>,
    pub prints: Vec<String>,
}

impl ShotRecord {
    pub fn key(&self) -> String {
        self.measurements.concat()
    }
}

/// Live qubits and amplitudes; position `k` of `qubits` is bit `k` of the
/// amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDump {
    pub qubits: Vec<Qubit>,
    pub amplitudes: Vec<Complex64>,
    pub variables: Vec<(String, Vec<Qubit>)>,
}

impl StateDump {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, qs) in &self.variables {
            let list: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
            out.push_str(&format!("{name}: {}\n", list.join(" ")));
        }
        let n = self.qubits.len();
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() < 1e-12 {
                continue;
            }
            let bits: String = (0..n).rev().map(|k| if i >> k & 1 == 1 { '1' } else { '0' }).collect();
            out.push_str(&format!("|{bits}⟩ {:+.6}{:+.6}i\n", a.re, a.im));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Counters of the first shot.
    pub stats: Stats,
    pub histogram: BTreeMap<String, u64>,
    pub shots: Vec<ShotRecord>,
    pub state: Option<StateDump>,
    /// Overlap with |0…0⟩ of every uncomputed region of the first shot.
    pub uncompute_overlaps: Vec<f64>,
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Serialize)]
struct Summary<'a> {
    requests: u64,
    remote_reads: u64,
    remote_writes: u64,
    transfers: u64,
    gates: u64,
    histogram: &'a BTreeMap<String, u64>,
}

impl RunResult {
    pub fn to_json(&self) -> String {
        let s = Summary {
            requests: self.stats.requests,
            remote_reads: self.stats.remote_reads,
            remote_writes: self.stats.remote_writes,
            transfers: self.stats.transfers,
            gates: self.stats.gates,
            histogram: &self.histogram,
        };
        serde_json::to_string(&s).expect("summary serializes")
    }
}

/// Runs `main` once per shot. Every shot re-executes the whole program on a
/// fresh QPU; the random stream continues across shots.
pub fn run(elab: &Elaborated, config: &RunConfig) -> Result<RunResult, RunError> {
    let rng = ChaCha20Rng::seed_from_u64(config.seed);
    let ctl = Controller::new(config.max_qubits, config.check_uncompute, rng);
    let mut it = Interp::new(elab, ctl);
    let mut result = RunResult {
        stats: Stats::default(),
        histogram: BTreeMap::new(),
        shots: Vec::new(),
        state: None,
        uncompute_overlaps: Vec::new(),
        trace: None,
    };
    for shot in 0..config.shots.max(1) {
        let first = shot == 0;
        it.begin_shot(first && config.trace, first);
        it.run_shot()?;
        if first {
            result.stats = it.ctl.stats;
            result.trace = it.ctl.trace.take();
            result.state = it.snapshot.take();
            result.uncompute_overlaps = it.ctl.overlaps.clone();
        }
        let record = std::mem::take(&mut it.record);
        *result.histogram.entry(record.key()).or_insert(0) += 1;
        result.shots.push(record);
    }
    Ok(result)
}

/// A routine instance expanded over fresh registers.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    /// Argument qubits in parameter order.
    pub targets: Vec<Qubit>,
    pub ctrls: Vec<Qubit>,
    /// Flat sequence of gates, permutations and scratch regions.
    pub body: Vec<QInstr>,
}

impl Circuit {
    /// All qubits the circuit acts on, targets first.
    pub fn qubits(&self) -> Vec<Qubit> {
        self.targets.iter().chain(&self.ctrls).copied().collect()
    }
}

/// Expands `name<sizes>(bound)` over qubits `0..w`, with an extra control
/// qubit `w` when `controlled`.
pub fn routine_circuit(
    elab: &Elaborated,
    name: &str,
    sizes: &[u64],
    bound: &[Scalar],
    dagger: bool,
    controlled: bool,
) -> Result<Circuit, RunError> {
    let routine = elab
        .routine(name, sizes)
        .cloned()
        .ok_or_else(|| RunError::new(format!("routine `{name}` has no instance for {sizes:?}")))?;
    let width = routine
        .total_width()
        .ok_or_else(|| RunError::new(format!("`{name}` has no fixed width")))?;
    let mut ctl = Controller::new(DEFAULT_MAX_QUBITS, true, ChaCha20Rng::seed_from_u64(0));
    let (_, targets) = ctl.fresh(width);
    let ctrls = if controlled { ctl.fresh(1).1 } else { Vec::new() };
    let mut views = Vec::new();
    let mut rest = &targets[..];
    for (_, t) in &routine.params {
        let (head, tail) = rest.split_at(t.width as usize);
        views.push(QView {
            qubits: head.to_vec(),
            ty: *t,
        });
        rest = tail;
    }
    if views.is_empty() && width > 0 {
        views.push(QView {
            qubits: targets.clone(),
            ty: QuantumType::qarray(width as u32),
        });
    }
    let bound: Vec<Value> = bound.iter().map(|s| Value::from_scalar(*s)).collect();
    let mut it = Interp::new(elab, ctl);
    let seq = it.expand(&routine, &bound, &views, dagger, &ctrls)?;
    Ok(Circuit {
        targets,
        ctrls,
        body: expand_compute(&seq)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn innermost_span_wins() {
        let e = RunError::new("boom").at(Span::new(3, 4)).at(Span::new(1, 1));
        assert_eq!(e.span, Some(Span::new(3, 4)));
        assert!(e.to_diagnostic().message.starts_with("runtime error: boom"));
    }

    #[test]
    fn shot_key_concatenates_measurements() {
        let r = ShotRecord {
            measurements: vec!["01".into(), "1".into()],
            prints: Vec::new(),
        };
        assert_eq!(r.key(), "011");
        assert_eq!(ShotRecord::default().key(), "");
    }

    #[test]
    fn state_render_skips_zero_amplitudes() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateDump {
            qubits: vec![Qubit(0), Qubit(1)],
            amplitudes: vec![
                Complex64::new(h, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -h),
                Complex64::new(0.0, 0.0),
            ],
            variables: vec![("a".into(), vec![Qubit(0), Qubit(1)])],
        };
        assert_eq!(s.render(), "a: q0 q1\n|00⟩ +0.707107+0.000000i\n|10⟩ +0.000000-0.707107i\n");
    }

    #[test]
    fn default_config_is_a_single_lenient_shot() {
        let c = RunConfig::default();
        assert_eq!((c.shots, c.seed, c.check_uncompute, c.trace), (1, 0, false, false));
        assert_eq!(c.max_qubits, DEFAULT_MAX_QUBITS);
    }
}
