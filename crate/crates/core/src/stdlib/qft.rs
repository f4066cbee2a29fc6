//! Fourier transform and gate walls.

use std::f64::consts::PI;

use crate::qir::{Gate, GateKind, QInstr, Qubit};

use super::StdlibError;

/// For each index in ascending order: H on it, then PH(π/2^(ctr−idx))
/// controlled by every later qubit. No terminal swaps.
pub fn qft(q: &[Qubit]) -> Vec<QInstr> {
    let n = q.len();
    let mut out = Vec::with_capacity(n + n * n.saturating_sub(1) / 2);
    for idx in 0..n {
        out.push(QInstr::h(q[idx]));
        for ctr in idx + 1..n {
            let angle = PI / (1u64 << (ctr - idx).min(63)) as f64;
            let g = Gate::with_angle(GateKind::PH, angle, vec![q[idx]])
                .expect("one target")
                .controlled(&[q[ctr]]);
            out.push(QInstr::Gate(g));
        }
    }
    out
}

/// `kind` on each of the `k` least significant qubits.
pub fn wall(kind: GateKind, angle: Option<f64>, k: usize, q: &[Qubit]) -> Result<Vec<QInstr>, StdlibError> {
    if k > q.len() {
        return Err(StdlibError::WallTooWide { k, width: q.len() });
    }
    if kind.arity() != 1 {
        return Err(StdlibError::Unsupported(format!(
            "wall of the {}-qubit gate {}",
            kind.arity(),
            kind.name()
        )));
    }
    q[..k]
        .iter()
        .map(|t| {
            let g = match angle {
                Some(a) => Gate::with_angle(kind, a, vec![*t])?,
                None => Gate::new(kind, vec![*t])?,
            };
            Ok(QInstr::Gate(g))
        })
        .collect()
}
