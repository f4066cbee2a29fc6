//! Comparators writing a one-bit result into a target qubit.

use std::fmt;

use crate::qir::{Gate, GateKind, QInstr, Qubit};

use super::arith::{add_const, add_quantum, xor_extended, xor_quantum};
use super::{Ancillas, StdlibError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    /// The operator with its operands exchanged.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn eval(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A register operand of a comparison.
#[derive(Clone, Copy, Debug)]
pub struct Operand<'a> {
    pub qubits: &'a [Qubit],
    pub signed: bool,
}

fn check_target(region: &[Qubit], target: Qubit) -> Result<(), StdlibError> {
    if region.contains(&target) {
        Err(StdlibError::Overlap)
    } else {
        Ok(())
    }
}

/// X on `target` controlled by every qubit of `region` being |0⟩.
fn flip_if_zero(region: &[Qubit], target: Qubit) -> Vec<QInstr> {
    let mut body = vec![QInstr::Compute(region.iter().map(|q| QInstr::x(*q)).collect())];
    body.push(QInstr::Gate(Gate::one(GateKind::X, target).controlled(region)));
    vec![QInstr::Block(body)]
}

/// `target ^= (x op c)` where `x` is the value held by `region`.
pub fn compare_const(
    anc: &mut dyn Ancillas,
    region: &[Qubit],
    signed: bool,
    op: CmpOp,
    c: i128,
    target: Qubit,
) -> Result<Vec<QInstr>, StdlibError> {
    check_target(region, target)?;
    let n = region.len();
    if n == 0 || n > 120 {
        return Err(StdlibError::Unsupported(format!("comparison over {n} qubits")));
    }
    if signed {
        // flipping the sign bit maps x to x + 2^(n-1) monotonically
        let offset = 1i128 << (n - 1);
        let mut body = vec![QInstr::Compute(vec![QInstr::x(region[n - 1])])];
        body.extend(compare_unsigned(anc, region, op, c + offset, target));
        return Ok(vec![QInstr::Block(body)]);
    }
    Ok(compare_unsigned(anc, region, op, c, target))
}

fn compare_unsigned(
    anc: &mut dyn Ancillas,
    region: &[Qubit],
    op: CmpOp,
    c: i128,
    target: Qubit,
) -> Vec<QInstr> {
    let n = region.len();
    let hi = (1i128 << n) - 1;
    let (op, c) = match op {
        CmpOp::Gt => (CmpOp::Ge, c + 1),
        CmpOp::Le => (CmpOp::Lt, c + 1),
        other => (other, c),
    };
    let flip = vec![QInstr::x(target)];
    match op {
        CmpOp::Ge if c <= 0 => flip,
        CmpOp::Ge if c > hi => Vec::new(),
        CmpOp::Lt if c <= 0 => Vec::new(),
        CmpOp::Lt if c > hi => flip,
        CmpOp::Ge | CmpOp::Lt => {
            // the borrow out of x - c over n+1 bits is [x < c]
            let (r, a) = anc.fresh(1);
            let mut wide = region.to_vec();
            wide.push(a[0]);
            let mut compute = vec![QInstr::Alloc {
                region: r,
                qubits: a.clone(),
                init: Vec::new(),
            }];
            compute.extend(add_const(&wide, c as u64, true));
            let mut body = vec![QInstr::Compute(compute), QInstr::cnot(a[0], target)];
            if op == CmpOp::Ge {
                body.push(QInstr::x(target));
            }
            vec![QInstr::Block(body)]
        }
        CmpOp::Eq | CmpOp::Ne => {
            let mut out = Vec::new();
            if (0..=hi).contains(&c) {
                let zeros: Vec<QInstr> = region
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (c >> k) & 1 == 0)
                    .map(|(_, q)| QInstr::x(*q))
                    .collect();
                let ctrl = QInstr::Gate(Gate::one(GateKind::X, target).controlled(region));
                if zeros.is_empty() {
                    out.push(ctrl);
                } else {
                    out.push(QInstr::Block(vec![QInstr::Compute(zeros), ctrl]));
                }
            }
            if op == CmpOp::Ne {
                out.push(QInstr::x(target));
            }
            out
        }
        CmpOp::Gt | CmpOp::Le => unreachable!("rewritten above"),
    }
}

/// `target ^= (a op b)` for two registers.
pub fn compare_quantum(
    anc: &mut dyn Ancillas,
    a: Operand<'_>,
    b: Operand<'_>,
    op: CmpOp,
    target: Qubit,
) -> Result<Vec<QInstr>, StdlibError> {
    check_target(a.qubits, target)?;
    check_target(b.qubits, target)?;
    if a.qubits.iter().any(|q| b.qubits.contains(q)) {
        return Err(StdlibError::Overlap);
    }
    if matches!(op, CmpOp::Eq | CmpOp::Ne)
        && a.qubits.len() == b.qubits.len()
        && a.signed == b.signed
    {
        // b ^= a is zero exactly when the registers agree
        let mut body = vec![QInstr::Compute(xor_quantum(b.qubits, a.qubits)?)];
        body.extend(flip_if_zero(b.qubits, target));
        if op == CmpOp::Ne {
            body.push(QInstr::x(target));
        }
        return Ok(vec![QInstr::Block(body)]);
    }
    let (a, b, op) = match op {
        CmpOp::Gt | CmpOp::Le => (b, a, op.flip()),
        _ => (a, b, op),
    };
    // exact difference a - b in a register wide enough to hold its sign
    let widest = a.qubits.len().max(b.qubits.len());
    let w = widest + if a.signed == b.signed { 1 } else { 2 };
    let (ra, ta) = anc.fresh(w);
    let mut compute = vec![QInstr::Alloc {
        region: ra,
        qubits: ta.clone(),
        init: xor_extended(&ta, a.qubits, a.signed)?,
    }];
    if b.signed && b.qubits.len() < w {
        let (rb, tb) = anc.fresh(w);
        compute.push(QInstr::Alloc {
            region: rb,
            qubits: tb.clone(),
            init: xor_extended(&tb, b.qubits, true)?,
        });
        compute.extend(add_quantum(&ta, &tb, true)?);
    } else {
        compute.extend(add_quantum(&ta, b.qubits, true)?);
    }
    let sign = ta[w - 1];
    let mut body = vec![QInstr::Compute(compute)];
    match op {
        CmpOp::Lt => body.push(QInstr::cnot(sign, target)),
        CmpOp::Ge => {
            body.push(QInstr::cnot(sign, target));
            body.push(QInstr::x(target));
        }
        CmpOp::Eq => body.extend(flip_if_zero(&ta, target)),
        CmpOp::Ne => {
            body.extend(flip_if_zero(&ta, target));
            body.push(QInstr::x(target));
        }
        CmpOp::Gt | CmpOp::Le => unreachable!("flipped above"),
    }
    Ok(vec![QInstr::Block(body)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stdlib::testing::{basis_output, qs};
    use crate::stdlib::Counter;

    const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

    fn value(bits: u64, n: usize, signed: bool) -> i128 {
        if signed && (bits >> (n - 1)) & 1 == 1 {
            bits as i128 - (1i128 << n)
        } else {
            bits as i128
        }
    }

    #[test]
    fn constant_comparisons_are_exhaustive() {
        for n in 1..=3usize {
            for signed in [false, true] {
                for op in OPS {
                    for c in -10i128..=10 {
                        let mut anc = Counter::starting_at(100, 0);
                        let target = Qubit(n as u32);
                        let seq = compare_const(&mut anc, &qs(n as u32), signed, op, c, target).unwrap();
                        for x in 0..(1u64 << n) {
                            let expected = op.eval(value(x, n, signed), c) as u64;
                            let out = basis_output(&seq, n as u32 + 1, x);
                            assert_eq!(out, x | (expected << n), "n={n} s={signed} {op} c={c} x={x}");
                            // the target toggles rather than being overwritten
                            let out = basis_output(&seq, n as u32 + 1, x | (1 << n));
                            assert_eq!(out, x | ((1 - expected) << n));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn four_bit_unsigned_threshold() {
        let mut anc = Counter::starting_at(100, 0);
        let seq = compare_const(&mut anc, &qs(4), false, CmpOp::Ge, 11, Qubit(4)).unwrap();
        let hits: Vec<u64> = (0..16)
            .filter(|x| basis_output(&seq, 5, *x) >> 4 == 1)
            .collect();
        assert_eq!(hits, vec![11, 12, 13, 14, 15]);
    }

    #[test]
    fn target_inside_region_is_rejected() {
        let mut anc = Counter::starting_at(100, 0);
        assert_eq!(
            compare_const(&mut anc, &qs(3), false, CmpOp::Eq, 1, Qubit(2)),
            Err(StdlibError::Overlap)
        );
    }

    #[test]
    fn register_comparisons_are_exhaustive() {
        let shapes = [(2, false, 2, false), (2, true, 2, true), (2, false, 3, true), (3, true, 1, false)];
        for (na, sa, nb, sb) in shapes {
            let a: Vec<Qubit> = (0..na).map(Qubit).collect();
            let b: Vec<Qubit> = (na..na + nb).map(Qubit).collect();
            let target = Qubit(na + nb);
            for op in OPS {
                let mut anc = Counter::starting_at(100, 0);
                let seq = compare_quantum(
                    &mut anc,
                    Operand { qubits: &a, signed: sa },
                    Operand { qubits: &b, signed: sb },
                    op,
                    target,
                )
                .unwrap();
                for x in 0..(1u64 << na) {
                    for y in 0..(1u64 << nb) {
                        let input = x | (y << na);
                        let expected =
                            op.eval(value(x, na as usize, sa), value(y, nb as usize, sb)) as u64;
                        let out = basis_output(&seq, na + nb + 1, input);
                        assert_eq!(out, input | (expected << (na + nb)), "{op} x={x} y={y}");
                    }
                }
            }
        }
    }
}
