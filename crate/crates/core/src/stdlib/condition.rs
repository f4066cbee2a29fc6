//! Quantum expressions and their reversible evaluation.

use crate::qir::{Gate, GateKind, QInstr, Qubit, RegionId};

use super::arith::{add_const, add_quantum, xor_const, xor_extended};
use super::compare::{compare_const, compare_quantum, CmpOp, Operand};
use super::modexp::pow_mod;
use super::{Ancillas, StdlibError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QBinOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
}

/// Expression over quantum registers and classical constants.
#[derive(Clone, Debug, PartialEq)]
pub enum QExpr {
    Reg { qubits: Vec<Qubit>, signed: bool },
    Const(i128),
    /// Logical negation; yields one bit.
    Not(Box<QExpr>),
    BitNot(Box<QExpr>),
    Bin(QBinOp, Box<QExpr>, Box<QExpr>),
    Cmp(CmpOp, Box<QExpr>, Box<QExpr>),
    PowMod {
        base: u64,
        exp: Box<QExpr>,
        modulus: u64,
    },
}

impl QExpr {
    pub fn reg(qubits: Vec<Qubit>, signed: bool) -> QExpr {
        QExpr::Reg { qubits, signed }
    }

    pub fn bin(op: QBinOp, a: QExpr, b: QExpr) -> QExpr {
        QExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: QExpr, b: QExpr) -> QExpr {
        QExpr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn is_classical(&self) -> bool {
        match self {
            QExpr::Const(_) => true,
            QExpr::Reg { .. } | QExpr::PowMod { .. } => false,
            QExpr::Not(e) | QExpr::BitNot(e) => e.is_classical(),
            QExpr::Bin(_, a, b) | QExpr::Cmp(_, a, b) => a.is_classical() && b.is_classical(),
        }
    }

    /// Natural width; constants adapt to their partner and report 0.
    pub fn width(&self) -> usize {
        match self {
            QExpr::Reg { qubits, .. } => qubits.len(),
            QExpr::Const(_) => 0,
            QExpr::Not(_) | QExpr::Cmp(..) => 1,
            QExpr::BitNot(e) => e.width(),
            QExpr::Bin(_, a, b) => a.width().max(b.width()),
            QExpr::PowMod { modulus, .. } => (64 - modulus.saturating_sub(1).leading_zeros()).max(1) as usize,
        }
    }

    pub fn signed(&self) -> bool {
        match self {
            QExpr::Reg { signed, .. } => *signed,
            QExpr::Const(c) => *c < 0,
            QExpr::Not(_) | QExpr::Cmp(..) | QExpr::PowMod { .. } => false,
            QExpr::BitNot(e) => e.signed(),
            QExpr::Bin(_, a, b) => {
                (a.signed() && !matches!(**a, QExpr::Const(_)))
                    || (b.signed() && !matches!(**b, QExpr::Const(_)))
            }
        }
    }

    /// Folds fully classical expressions.
    pub fn fold(&self) -> Option<i128> {
        Some(match self {
            QExpr::Const(c) => *c,
            QExpr::Reg { .. } | QExpr::PowMod { .. } => return None,
            QExpr::Not(e) => (e.fold()? == 0) as i128,
            QExpr::BitNot(e) => !e.fold()?,
            QExpr::Bin(op, a, b) => {
                let (a, b) = (a.fold()?, b.fold()?);
                match op {
                    QBinOp::Add => a.wrapping_add(b),
                    QBinOp::Sub => a.wrapping_sub(b),
                    QBinOp::And => a & b,
                    QBinOp::Or => a | b,
                    QBinOp::Xor => a ^ b,
                }
            }
            QExpr::Cmp(op, a, b) => op.eval(a.fold()?, b.fold()?) as i128,
        })
    }

    fn collect_qubits(&self, out: &mut Vec<Qubit>) {
        match self {
            QExpr::Reg { qubits, .. } => out.extend_from_slice(qubits),
            QExpr::Const(_) => {}
            QExpr::Not(e) | QExpr::BitNot(e) => e.collect_qubits(out),
            QExpr::PowMod { exp, .. } => exp.collect_qubits(out),
            QExpr::Bin(_, a, b) | QExpr::Cmp(_, a, b) => {
                a.collect_qubits(out);
                b.collect_qubits(out);
            }
        }
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        let mut out = Vec::new();
        self.collect_qubits(&mut out);
        out
    }
}

fn alloc(region: RegionId, qubits: &[Qubit], init: Vec<QInstr>) -> QInstr {
    QInstr::Alloc {
        region,
        qubits: qubits.to_vec(),
        init,
    }
}

fn disjoint(e: &QExpr, qubits: &[Qubit]) -> bool {
    e.qubits().iter().all(|q| !qubits.contains(q))
}

fn const_bits(c: i128) -> u64 {
    c as u64
}

/// A register holding `e`: the register itself when `e` is one, otherwise a
/// scratch register filled inside `compute`.
fn operand(
    anc: &mut dyn Ancillas,
    e: &QExpr,
    width: usize,
    compute: &mut Vec<QInstr>,
) -> Result<(Vec<Qubit>, bool), StdlibError> {
    if let QExpr::Reg { qubits, signed } = e {
        return Ok((qubits.clone(), *signed));
    }
    let w = width.max(1);
    let (r, t) = anc.fresh(w);
    let init = xor_into(anc, &t, e)?;
    compute.push(alloc(r, &t, init));
    Ok((t, e.signed()))
}

/// `dst ^= e`, truncated or extended to the width of `dst`.
pub fn xor_into(anc: &mut dyn Ancillas, dst: &[Qubit], e: &QExpr) -> Result<Vec<QInstr>, StdlibError> {
    if e.qubits().iter().any(|q| dst.contains(q)) {
        return Err(StdlibError::Overlap);
    }
    if let Some(c) = e.fold() {
        return Ok(xor_const(dst, const_bits(c)));
    }
    match e {
        QExpr::Reg { qubits, signed } => xor_extended(dst, qubits, *signed),
        QExpr::Const(_) => unreachable!("folded"),
        QExpr::Not(inner) => {
            let Some(bit) = dst.first() else {
                return Ok(Vec::new());
            };
            if inner.width() == 1 && !inner.signed() {
                let mut out = xor_into(anc, &dst[..1], inner)?;
                out.push(QInstr::x(*bit));
                Ok(out)
            } else {
                let zero = QExpr::cmp(CmpOp::Eq, (**inner).clone(), QExpr::Const(0));
                xor_into(anc, &dst[..1], &zero)
            }
        }
        QExpr::BitNot(inner) => {
            let mut out = xor_into(anc, dst, inner)?;
            out.extend(dst.iter().map(|q| QInstr::x(*q)));
            Ok(out)
        }
        QExpr::Bin(QBinOp::Xor, a, b) => {
            let mut out = xor_into(anc, dst, a)?;
            out.extend(xor_into(anc, dst, b)?);
            Ok(out)
        }
        QExpr::Bin(op @ (QBinOp::And | QBinOp::Or), a, b) => {
            let w = dst.len();
            let mut compute = Vec::new();
            let (ta, sa) = operand(anc, a, w, &mut compute)?;
            let (mut tb, mut sb) = operand(anc, b, w, &mut compute)?;
            if ta.iter().any(|q| tb.contains(q)) {
                let fresh = QExpr::reg(tb.clone(), sb);
                let (r, t) = anc.fresh(w);
                compute.push(alloc(r, &t, xor_into(anc, &t, &fresh)?));
                tb = t;
                sb = false;
            }
            let bit = |t: &[Qubit], signed: bool, k: usize| -> Option<Qubit> {
                t.get(k).copied().or_else(|| signed.then(|| t.last().copied()).flatten())
            };
            let mut body = Vec::new();
            for (k, d) in dst.iter().enumerate() {
                let (x, y) = (bit(&ta, sa, k), bit(&tb, sb, k));
                match op {
                    QBinOp::And => {
                        if let (Some(x), Some(y)) = (x, y) {
                            body.push(QInstr::Gate(Gate::one(GateKind::X, *d).controlled(&[x, y])));
                        }
                    }
                    _ => match (x, y) {
                        (Some(x), Some(y)) => {
                            // a | b = ¬(¬a ∧ ¬b)
                            body.push(QInstr::Block(vec![
                                QInstr::Compute(vec![QInstr::x(x), QInstr::x(y)]),
                                QInstr::Gate(Gate::one(GateKind::X, *d).controlled(&[x, y])),
                                QInstr::x(*d),
                            ]));
                        }
                        (Some(x), None) | (None, Some(x)) => body.push(QInstr::cnot(x, *d)),
                        (None, None) => {}
                    },
                }
            }
            Ok(scoped(compute, body))
        }
        QExpr::Bin(op @ (QBinOp::Add | QBinOp::Sub), a, b) => {
            let w = dst.len();
            let sub = *op == QBinOp::Sub;
            // a wide enough register operand is shifted in place and restored
            let in_place = match (&**a, &**b) {
                (QExpr::Reg { qubits, .. }, other) if qubits.len() >= w && disjoint(other, qubits) => {
                    Some((qubits, other, sub))
                }
                (other, QExpr::Reg { qubits, .. }) if !sub && qubits.len() >= w && disjoint(other, qubits) => {
                    Some((qubits, other, false))
                }
                _ => None,
            };
            if let Some((reg, other, negative)) = in_place {
                let compute = add_into(anc, reg, other, negative)?;
                let body = reg.iter().zip(dst).map(|(s, d)| QInstr::cnot(*s, *d)).collect();
                return Ok(scoped(compute, body));
            }
            let (r, t) = anc.fresh(w);
            let mut compute = vec![alloc(r, &t, xor_into(anc, &t, a)?)];
            compute.extend(add_into(anc, &t, b, *op == QBinOp::Sub)?);
            let body = t.iter().zip(dst).map(|(s, d)| QInstr::cnot(*s, *d)).collect();
            Ok(scoped(compute, body))
        }
        QExpr::Cmp(op, a, b) => {
            let Some(target) = dst.first().copied() else {
                return Ok(Vec::new());
            };
            match (a.fold(), b.fold()) {
                (Some(_), Some(_)) => unreachable!("folded"),
                (None, Some(c)) => cmp_const(anc, a, *op, c, target),
                (Some(c), None) => cmp_const(anc, b, op.flip(), c, target),
                (None, None) => {
                    let mut compute = Vec::new();
                    let w = a.width().max(b.width());
                    let (ta, sa) = operand(anc, a, w, &mut compute)?;
                    let (tb, sb) = operand(anc, b, w, &mut compute)?;
                    let body = compare_quantum(
                        anc,
                        Operand { qubits: &ta, signed: sa },
                        Operand { qubits: &tb, signed: sb },
                        *op,
                        target,
                    )?;
                    Ok(scoped(compute, body))
                }
            }
        }
        QExpr::PowMod { base, exp, modulus } => {
            let mut compute = Vec::new();
            let (te, _) = operand(anc, exp, exp.width(), &mut compute)?;
            let body = pow_mod(&te, dst, *base, *modulus)?;
            Ok(scoped(compute, body))
        }
    }
}

fn cmp_const(
    anc: &mut dyn Ancillas,
    e: &QExpr,
    op: CmpOp,
    c: i128,
    target: Qubit,
) -> Result<Vec<QInstr>, StdlibError> {
    let mut compute = Vec::new();
    let (t, signed) = operand(anc, e, e.width(), &mut compute)?;
    let body = compare_const(anc, &t, signed, op, c, target)?;
    Ok(scoped(compute, body))
}

/// `Block[Compute(compute), body]`, or just `body` when nothing is computed.
fn scoped(compute: Vec<QInstr>, body: Vec<QInstr>) -> Vec<QInstr> {
    if compute.is_empty() {
        return body;
    }
    let mut out = vec![QInstr::Compute(compute)];
    out.extend(body);
    vec![QInstr::Block(out)]
}

/// `dst += e` (or `-=`) modulo `2^dst.len()`.
pub fn add_into(
    anc: &mut dyn Ancillas,
    dst: &[Qubit],
    e: &QExpr,
    negative: bool,
) -> Result<Vec<QInstr>, StdlibError> {
    if e.qubits().iter().any(|q| dst.contains(q)) {
        return Err(StdlibError::Overlap);
    }
    if let Some(c) = e.fold() {
        return Ok(add_const(dst, const_bits(c), negative));
    }
    match e {
        QExpr::Reg { qubits, signed } if !*signed || qubits.len() >= dst.len() => {
            let src = &qubits[..qubits.len().min(dst.len())];
            add_quantum(dst, src, negative)
        }
        _ => {
            let w = dst.len();
            let (r, t) = anc.fresh(w);
            let compute = vec![alloc(r, &t, xor_into(anc, &t, e)?)];
            Ok(scoped(compute, add_quantum(dst, &t, negative)?))
        }
    }
}

/// One qubit holding the truth value of `e` (non-zero counts as true).
/// Returns the qubit and the compute body that prepares it.
pub fn eval_condition(anc: &mut dyn Ancillas, e: &QExpr) -> Result<(Qubit, Vec<QInstr>), StdlibError> {
    let (r, t) = anc.fresh(1);
    let truth = if e.width() == 1 && !e.signed() {
        e.clone()
    } else {
        QExpr::cmp(CmpOp::Ne, e.clone(), QExpr::Const(0))
    };
    let init = xor_into(anc, &t, &truth)?;
    Ok((t[0], vec![alloc(r, &t, init)]))
}
