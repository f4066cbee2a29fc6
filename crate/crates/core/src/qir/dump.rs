//! Line-oriented textual form of instruction sequences.
//!
//! One instruction per line; nested bodies are indented by two spaces and
//! closed by `END`. Angles are printed with 10 decimal places.

use std::fmt::Write;

use super::{dagger, QInstr, Qubit};

fn addrs(qs: &[Qubit]) -> String {
    if qs.is_empty() {
        return "-".to_string();
    }
    qs.iter().map(Qubit::to_string).collect::<Vec<_>>().join(",")
}

fn modifiers(out: &mut String, ctrls: &[Qubit], dag: bool) {
    if !ctrls.is_empty() {
        let _ = write!(out, " ctrl {}", addrs(ctrls));
    }
    if dag {
        out.push_str(" dag");
    }
}

pub fn dump_ir(seq: &[QInstr]) -> String {
    let mut out = String::new();
    for instr in seq {
        write_instr(&mut out, instr, 0);
    }
    out
}

fn body(out: &mut String, seq: &[QInstr], indent: usize) {
    for i in seq {
        write_instr(out, i, indent + 1);
    }
    let _ = writeln!(out, "{:width$}END", "", width = indent * 2);
}

pub fn write_instr(out: &mut String, instr: &QInstr, indent: usize) {
    let pad = indent * 2;
    let _ = write!(out, "{:pad$}", "");
    match instr {
        QInstr::Gate(g) => {
            let _ = write!(out, "GATE {}", g.kind.name());
            if let Some(a) = g.angle {
                let _ = write!(out, "({a:.10})");
            }
            let _ = write!(out, " {}", addrs(&g.targets));
            modifiers(out, &g.ctrls, g.dagger);
            out.push('\n');
        }
        QInstr::Perm(p) => {
            let consts: Vec<String> = p.func.constants().iter().map(u64::to_string).collect();
            let _ = write!(
                out,
                "PERM {}({}) {}",
                p.func.name(),
                consts.join(","),
                addrs(&p.targets)
            );
            modifiers(out, &p.ctrls, p.dagger);
            out.push('\n');
        }
        QInstr::Call(c) => {
            let _ = write!(out, "CALL {}", c.name);
            if !c.size_args.is_empty() {
                let sizes: Vec<String> = c.size_args.iter().map(u64::to_string).collect();
                let _ = write!(out, "<{}>", sizes.join(","));
            }
            if !c.bound.is_empty() {
                let bound: Vec<String> = c.bound.iter().map(|b| b.to_string()).collect();
                let _ = write!(out, "({})", bound.join(","));
            }
            let _ = write!(out, " {}", addrs(&c.targets));
            modifiers(out, &c.ctrls, c.dagger);
            out.push('\n');
        }
        QInstr::Alloc {
            region,
            qubits,
            init,
        } => {
            let _ = write!(out, "ALLOC {region} {}", addrs(qubits));
            if init.is_empty() {
                out.push('\n');
            } else {
                out.push_str(" init\n");
                body(out, init, indent);
            }
        }
        QInstr::Free {
            region,
            qubits,
            init,
        } => {
            let _ = write!(out, "FREE {region} {}", addrs(qubits));
            if init.is_empty() {
                out.push('\n');
            } else {
                out.push_str(" undo\n");
                let undo = dagger(init).unwrap_or_else(|_| init.clone());
                body(out, &undo, indent);
            }
        }
        QInstr::Measure { targets, reset } => {
            let _ = write!(out, "MEASURE {}", addrs(targets));
            if *reset {
                out.push_str(" reset");
            }
            out.push('\n');
        }
        QInstr::Reset { targets } => {
            let _ = writeln!(out, "RESET {}", addrs(targets));
        }
        QInstr::Compute(b) => {
            out.push_str("COMPUTE\n");
            body(out, b, indent);
        }
        QInstr::Block(b) => {
            out.push_str("BLOCK\n");
            body(out, b, indent);
        }
        QInstr::Ctrl { ctrls, body: b } => {
            let _ = writeln!(out, "CTRL {}", addrs(ctrls));
            body(out, b, indent);
        }
        QInstr::ScopeBegin { with } => {
            if with.is_empty() {
                out.push_str("SCOPE_BEGIN\n");
            } else {
                let _ = writeln!(out, "SCOPE_BEGIN with {}", with.join(","));
            }
        }
        QInstr::ScopeEnd => out.push_str("SCOPE_END\n"),
        QInstr::Move { dir, var } => {
            let _ = writeln!(out, "MOVE {} {var}", dir.keyword());
        }
    }
}
