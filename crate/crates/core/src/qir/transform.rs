//! The modifier algebra: inversion, control and compute-block expansion.

use super::{check_distinct, QInstr, QirError, Qubit};

fn trailing_frees(items: &[QInstr]) -> usize {
    items
        .iter()
        .rev()
        .take_while(|i| matches!(i, QInstr::Free { .. }))
        .count()
}

/// Inverse of a pure instruction sequence.
///
/// The sequence is treated as one lexical scope. Compute blocks stay in
/// compute position so the inverse is still `U · A† · U†` rather than a flat
/// reversal, which keeps the control exemption available on the inverse.
pub fn dagger(seq: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    dagger_scope(seq)
}

fn dagger_scope(items: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    let split = items.len() - trailing_frees(items);
    let (body, frees) = items.split_at(split);
    let mut out = Vec::with_capacity(items.len());
    for f in frees.iter().rev() {
        out.push(invert_one(f)?);
    }
    out.extend(dagger_body(body)?);
    Ok(out)
}

fn dagger_body(items: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    match items.iter().position(|i| matches!(i, QInstr::Compute(_))) {
        None => items.iter().rev().map(invert_one).collect(),
        Some(p) => {
            // S0 · U · rest · U†  ⇒  (U · rest† · U†) · S0†
            let mut inner = vec![items[p].clone()];
            inner.extend(dagger_body(&items[p + 1..])?);
            let mut out = vec![QInstr::Block(inner)];
            out.extend(dagger_body(&items[..p])?);
            Ok(out)
        }
    }
}

fn invert_one(instr: &QInstr) -> Result<QInstr, QirError> {
    Ok(match instr {
        QInstr::Gate(g) => QInstr::Gate(g.inverse()),
        QInstr::Perm(p) => {
            let mut p = p.clone();
            p.dagger = !p.dagger;
            QInstr::Perm(p)
        }
        QInstr::Call(c) => {
            let mut c = c.clone();
            c.dagger = !c.dagger;
            QInstr::Call(c)
        }
        QInstr::Alloc {
            region,
            qubits,
            init,
        } => QInstr::Free {
            region: *region,
            qubits: qubits.clone(),
            init: init.clone(),
        },
        QInstr::Free {
            region,
            qubits,
            init,
        } => QInstr::Alloc {
            region: *region,
            qubits: qubits.clone(),
            init: init.clone(),
        },
        QInstr::Compute(body) => QInstr::Compute(dagger_scope(body)?),
        QInstr::Block(body) => QInstr::Block(dagger_scope(body)?),
        QInstr::Ctrl { ctrls, body } => QInstr::Ctrl {
            ctrls: ctrls.clone(),
            body: dagger_scope(body)?,
        },
        QInstr::Measure { .. } => return Err(QirError::NotInvertible("measurement")),
        QInstr::Reset { .. } => return Err(QirError::NotInvertible("reset")),
        QInstr::Move { .. } => return Err(QirError::NotInvertible("data movement")),
        QInstr::ScopeBegin { .. } | QInstr::ScopeEnd => {
            return Err(QirError::NotInvertible("quantum scope"))
        }
    })
}

/// Reverses a sequence that contains no compute blocks.
pub fn invert_flat(seq: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    seq.iter().rev().map(invert_one).collect()
}

fn add_ctrls(existing: &mut Vec<Qubit>, targets: &[Qubit], ctrls: &[Qubit]) -> Result<(), QirError> {
    for c in ctrls {
        if targets.contains(c) {
            return Err(QirError::ControlOverlap(*c));
        }
        if existing.contains(c) {
            return Err(QirError::DuplicateAddress(*c));
        }
    }
    existing.extend_from_slice(ctrls);
    Ok(())
}

/// Adds `ctrls` to every pure instruction of `seq`. Compute blocks and the
/// state preparation of allocated regions are left uncontrolled.
pub fn control(seq: &[QInstr], ctrls: &[Qubit]) -> Result<Vec<QInstr>, QirError> {
    check_distinct(ctrls)?;
    seq.iter().map(|i| control_one(i, ctrls)).collect()
}

fn control_one(instr: &QInstr, ctrls: &[Qubit]) -> Result<QInstr, QirError> {
    Ok(match instr {
        QInstr::Gate(g) => {
            let mut g = g.clone();
            add_ctrls(&mut g.ctrls, &g.targets, ctrls)?;
            QInstr::Gate(g)
        }
        QInstr::Perm(p) => {
            let mut p = p.clone();
            add_ctrls(&mut p.ctrls, &p.targets, ctrls)?;
            QInstr::Perm(p)
        }
        QInstr::Call(c) => {
            let mut c = c.clone();
            add_ctrls(&mut c.ctrls, &c.targets, ctrls)?;
            QInstr::Call(c)
        }
        QInstr::Compute(body) => {
            let mut written = Vec::new();
            body.iter().for_each(|i| i.written(&mut written));
            if let Some(c) = ctrls.iter().find(|c| written.contains(c)) {
                return Err(QirError::ControlOverlap(*c));
            }
            instr.clone()
        }
        QInstr::Block(body) => QInstr::Block(control(body, ctrls)?),
        QInstr::Ctrl { ctrls: inner, body } => {
            let mut merged = inner.clone();
            let mut written = Vec::new();
            body.iter().for_each(|i| i.written(&mut written));
            add_ctrls(&mut merged, &written, ctrls)?;
            QInstr::Ctrl {
                ctrls: merged,
                body: body.clone(),
            }
        }
        QInstr::Alloc { qubits, .. } | QInstr::Free { qubits, .. } => {
            if let Some(c) = ctrls.iter().find(|c| qubits.contains(c)) {
                return Err(QirError::ControlOverlap(*c));
            }
            instr.clone()
        }
        QInstr::Measure { .. } => return Err(QirError::NotControllable("measurement")),
        QInstr::Reset { .. } => return Err(QirError::NotControllable("reset")),
        QInstr::ScopeBegin { .. } | QInstr::ScopeEnd | QInstr::Move { .. } => instr.clone(),
    })
}

/// Flattens a scope: every compute block is followed, at the end of its
/// enclosing scope and in reverse order of occurrence, by its inverse.
/// Regions released at the end of a scope are released after the undo.
pub fn expand_compute(seq: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    expand_scope(seq)
}

fn expand_scope(items: &[QInstr]) -> Result<Vec<QInstr>, QirError> {
    let split = items.len() - trailing_frees(items);
    let (body, frees) = items.split_at(split);
    let mut out = Vec::with_capacity(items.len());
    let mut pending: Vec<Vec<QInstr>> = Vec::new();
    let mut guarded: Vec<Qubit> = Vec::new();
    for item in body {
        match item {
            QInstr::Compute(inner) => {
                let flat = expand_scope(inner)?;
                flat.iter().for_each(|i| i.written(&mut guarded));
                out.extend(flat.iter().cloned());
                pending.push(flat);
            }
            QInstr::Block(inner) => out.extend(expand_scope(inner)?),
            QInstr::Ctrl { ctrls, body } => out.extend(expand_scope(&control(body, ctrls)?)?),
            QInstr::Measure { targets, .. } | QInstr::Reset { targets } => {
                if let Some(q) = targets.iter().find(|q| guarded.contains(q)) {
                    return Err(QirError::MeasureInCompute(*q));
                }
                out.push(item.clone());
            }
            other => out.push(expand_region(other)?),
        }
    }
    for undo in pending.iter().rev() {
        out.extend(invert_flat(undo)?);
    }
    for f in frees {
        out.push(expand_region(f)?);
    }
    Ok(out)
}

fn expand_region(instr: &QInstr) -> Result<QInstr, QirError> {
    Ok(match instr {
        QInstr::Alloc {
            region,
            qubits,
            init,
        } => QInstr::Alloc {
            region: *region,
            qubits: qubits.clone(),
            init: expand_scope(init)?,
        },
        QInstr::Free {
            region,
            qubits,
            init,
        } => QInstr::Free {
            region: *region,
            qubits: qubits.clone(),
            init: expand_scope(init)?,
        },
        other => other.clone(),
    })
}

/// Structural canonical form used to compare sequences: blocks that do not
/// delimit any compute block are spliced into their parent, as is a final
/// block that releases no region.
pub fn normalize(seq: &[QInstr]) -> Vec<QInstr> {
    let mut out: Vec<QInstr> = Vec::with_capacity(seq.len());
    let n = seq.len();
    for (idx, item) in seq.iter().enumerate() {
        let item = match item {
            QInstr::Block(b) => QInstr::Block(normalize(b)),
            QInstr::Compute(b) => QInstr::Compute(normalize(b)),
            QInstr::Ctrl { ctrls, body } => QInstr::Ctrl {
                ctrls: ctrls.clone(),
                body: normalize(body),
            },
            other => other.clone(),
        };
        match item {
            QInstr::Block(b)
                if !b.iter().any(|i| matches!(i, QInstr::Compute(_)))
                    || (idx + 1 == n && !b.iter().any(|i| matches!(i, QInstr::Free { .. }))) =>
            {
                out.extend(b)
            }
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qir::{Bijection, Gate, GateKind, MoveDir, Perm, RegionId};
    use std::f64::consts::PI;

    fn q(i: u32) -> Qubit {
        Qubit(i)
    }

    #[test]
    fn dagger_reverses_self_inverse_gates() {
        let seq = vec![QInstr::h(q(0)), QInstr::cnot(q(0), q(1))];
        assert_eq!(
            dagger(&seq).unwrap(),
            vec![QInstr::cnot(q(0), q(1)), QInstr::h(q(0))]
        );
    }

    #[test]
    fn dagger_negates_rotation() {
        let rz = Gate::with_angle(GateKind::RZ, PI / 4.0, vec![q(1)]).unwrap();
        let inv = dagger(&[QInstr::Gate(rz)]).unwrap();
        assert_eq!(
            inv,
            vec![QInstr::Gate(
                Gate::with_angle(GateKind::RZ, -PI / 4.0, vec![q(1)]).unwrap()
            )]
        );
    }

    #[test]
    fn dagger_of_routine_body_with_controlled_z() {
        // H(q0); Z.ctrl(q0, q1)
        let cz = Gate::one(GateKind::Z, q(1)).controlled(&[q(0)]);
        let seq = vec![QInstr::h(q(0)), QInstr::Gate(cz.clone())];
        assert_eq!(dagger(&seq).unwrap(), vec![QInstr::Gate(cz), QInstr::h(q(0))]);
    }

    #[test]
    fn s_and_t_flip_their_dagger_bit() {
        let s = Gate::one(GateKind::S, q(0));
        let inv = s.inverse();
        assert!(inv.dagger);
        assert_eq!(inv.inverse(), s);
    }

    #[test]
    fn dagger_rejects_measurement_and_movement() {
        assert!(dagger(&[QInstr::Measure {
            targets: vec![q(0)],
            reset: false
        }])
        .is_err());
        assert!(dagger(&[QInstr::Move {
            dir: MoveDir::ToDevice,
            var: "x".into()
        }])
        .is_err());
        assert!(dagger(&[QInstr::ScopeEnd]).is_err());
    }

    #[test]
    fn control_of_x_is_cnot() {
        let out = control(&[QInstr::x(q(1))], &[q(0)]).unwrap();
        assert_eq!(out, vec![QInstr::cnot(q(0), q(1))]);
    }

    #[test]
    fn control_composes() {
        let once = control(&[QInstr::h(q(0))], &[q(1)]).unwrap();
        let twice = control(&once, &[q(2)]).unwrap();
        match &twice[0] {
            QInstr::Gate(g) => assert_eq!(g.ctrls, vec![q(1), q(2)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn control_skips_compute_blocks() {
        let ccnot = QInstr::Gate(Gate::new(GateKind::CCNOT, vec![q(0), q(1), q(2)]).unwrap());
        let rz = QInstr::Gate(Gate::with_angle(GateKind::RZ, 0.3, vec![q(2)]).unwrap());
        let seq = vec![QInstr::Compute(vec![ccnot.clone()]), rz];
        let out = control(&seq, &[q(3)]).unwrap();
        assert_eq!(out[0], QInstr::Compute(vec![ccnot]));
        match &out[1] {
            QInstr::Gate(g) => assert_eq!(g.ctrls, vec![q(3)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn control_rejects_measurement_and_overlap() {
        let m = QInstr::Measure {
            targets: vec![q(0)],
            reset: true,
        };
        assert_eq!(
            control(&[m], &[q(1)]),
            Err(QirError::NotControllable("measurement"))
        );
        assert_eq!(
            control(&[QInstr::x(q(1))], &[q(1)]),
            Err(QirError::ControlOverlap(q(1)))
        );
    }

    #[test]
    fn expand_places_uncompute_at_scope_end() {
        let ccnot = QInstr::Gate(Gate::new(GateKind::CCNOT, vec![q(0), q(1), q(2)]).unwrap());
        let rz = QInstr::Gate(Gate::with_angle(GateKind::RZ, 0.3, vec![q(2)]).unwrap());
        let seq = vec![QInstr::Compute(vec![ccnot.clone()]), rz.clone()];
        assert_eq!(expand_compute(&seq).unwrap(), vec![ccnot.clone(), rz, ccnot]);
    }

    #[test]
    fn expand_undoes_blocks_last_in_first_out() {
        let b1 = QInstr::x(q(0));
        let b2 = QInstr::h(q(1));
        let seq = vec![
            QInstr::Compute(vec![b1.clone()]),
            QInstr::Compute(vec![b2.clone()]),
        ];
        assert_eq!(
            expand_compute(&seq).unwrap(),
            vec![b1.clone(), b2.clone(), b2, b1]
        );
    }

    #[test]
    fn expand_without_compute_is_identity() {
        let seq = vec![QInstr::h(q(0)), QInstr::cnot(q(0), q(1))];
        assert_eq!(expand_compute(&seq).unwrap(), seq);
    }

    #[test]
    fn expand_releases_after_undo() {
        let alloc = QInstr::Alloc {
            region: RegionId(0),
            qubits: vec![q(5)],
            init: vec![],
        };
        let free = QInstr::Free {
            region: RegionId(0),
            qubits: vec![q(5)],
            init: vec![],
        };
        let seq = vec![
            alloc.clone(),
            QInstr::Compute(vec![QInstr::cnot(q(0), q(5))]),
            QInstr::h(q(1)),
            free.clone(),
        ];
        assert_eq!(
            expand_compute(&seq).unwrap(),
            vec![
                alloc,
                QInstr::cnot(q(0), q(5)),
                QInstr::h(q(1)),
                QInstr::cnot(q(0), q(5)),
                free
            ]
        );
    }

    #[test]
    fn expand_rejects_measuring_computed_qubits() {
        let seq = vec![
            QInstr::Compute(vec![QInstr::x(q(0))]),
            QInstr::Measure {
                targets: vec![q(0)],
                reset: false,
            },
        ];
        assert_eq!(expand_compute(&seq), Err(QirError::MeasureInCompute(q(0))));
    }

    #[test]
    fn dagger_keeps_compute_in_compute_position() {
        let u = QInstr::Compute(vec![QInstr::h(q(0))]);
        let a = QInstr::Gate(Gate::one(GateKind::T, q(1)).controlled(&[q(0)]));
        let inv = dagger(&[u.clone(), a.clone()]).unwrap();
        let flat = expand_compute(&inv).unwrap();
        let a_inv = match &a {
            QInstr::Gate(g) => QInstr::Gate(g.inverse()),
            _ => unreachable!(),
        };
        assert_eq!(flat, vec![QInstr::h(q(0)), a_inv, QInstr::h(q(0))]);
        assert_eq!(normalize(&dagger(&inv).unwrap()), normalize(&[u, a]));
    }

    #[test]
    fn perm_dagger_flips_bit() {
        let p = Perm::new(Bijection::AddConst(3), vec![q(0), q(1)]).unwrap();
        let inv = dagger(&[QInstr::Perm(p)]).unwrap();
        assert!(matches!(&inv[0], QInstr::Perm(p) if p.dagger));
    }
}
