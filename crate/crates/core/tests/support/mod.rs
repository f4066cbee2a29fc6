//! Sparse basis-state simulator for reversible-arithmetic checks on more
//! qubits than a dense statevector allows.

#![allow(dead_code)]

pub mod grammar;

use std::collections::HashMap;

use num_complex::Complex64;
use qpragma::backend::gate_matrix;
use qpragma::qir::{expand_compute, invert_flat, Gate, GateKind, Perm, QInstr, Qubit};

const EPS: f64 = 1e-14;

pub struct Sparse {
    amps: HashMap<u64, Complex64>,
}

fn bit(q: Qubit) -> u64 {
    assert!(q.0 < 64, "qubit {q} beyond the sparse simulator range");
    1u64 << q.0
}

fn mask(qs: &[Qubit]) -> u64 {
    qs.iter().fold(0, |m, q| m | bit(*q))
}

impl Sparse {
    pub fn basis(index: u64) -> Sparse {
        Sparse {
            amps: HashMap::from([(index, Complex64::new(1.0, 0.0))]),
        }
    }

    fn update(&mut self, f: impl Fn(u64, Complex64, &mut dyn FnMut(u64, Complex64))) {
        let mut next: HashMap<u64, Complex64> = HashMap::with_capacity(self.amps.len());
        for (&i, &a) in &self.amps {
            f(i, a, &mut |j, b| *next.entry(j).or_default() += b);
        }
        next.retain(|_, a| a.norm_sqr() > EPS * EPS);
        self.amps = next;
    }

    fn single(&mut self, m: [[Complex64; 2]; 2], t: Qubit, ctrl: u64) {
        let tb = bit(t);
        self.update(|i, a, emit| {
            if i & ctrl != ctrl {
                return emit(i, a);
            }
            let b = usize::from(i & tb != 0);
            emit(i & !tb, m[0][b] * a);
            emit(i | tb, m[1][b] * a);
        });
    }

    fn gate(&mut self, g: &Gate) {
        let ctrl = mask(&g.ctrls);
        match g.kind {
            GateKind::CNOT | GateKind::CCNOT => {
                let n = g.targets.len();
                let x = gate_matrix(GateKind::X, 0.0);
                self.single(x, g.targets[n - 1], ctrl | mask(&g.targets[..n - 1]));
            }
            GateKind::SWAP => {
                let (a, b) = (bit(g.targets[0]), bit(g.targets[1]));
                self.update(|i, amp, emit| {
                    let differ = (i & a != 0) != (i & b != 0);
                    emit(if i & ctrl == ctrl && differ { i ^ a ^ b } else { i }, amp)
                });
            }
            kind => {
                let mut m = gate_matrix(kind, g.angle.unwrap_or(0.0));
                if g.dagger {
                    m = [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]];
                }
                self.single(m, g.targets[0], ctrl);
            }
        }
    }

    fn perm(&mut self, p: &Perm) {
        let ctrl = mask(&p.ctrls);
        let tmask = mask(&p.targets);
        self.update(|i, a, emit| {
            if i & ctrl != ctrl {
                return emit(i, a);
            }
            let v = p
                .targets
                .iter()
                .enumerate()
                .fold(0u64, |v, (k, q)| v | (u64::from(i & bit(*q) != 0) << k));
            let w = p.map(v);
            let j = p
                .targets
                .iter()
                .enumerate()
                .fold(i & !tmask, |j, (k, q)| if w >> k & 1 == 1 { j | bit(*q) } else { j });
            emit(j, a)
        });
    }

    /// Runs a sequence; panics if a released region is not back in |0…0⟩.
    pub fn run(&mut self, seq: &[QInstr]) {
        for i in expand_compute(seq).expect("expandable sequence") {
            self.step(&i);
        }
    }

    fn step(&mut self, i: &QInstr) {
        match i {
            QInstr::Gate(g) => self.gate(g),
            QInstr::Perm(p) => self.perm(p),
            QInstr::Alloc { qubits, init, .. } => {
                let m = mask(qubits);
                assert!(self.amps.keys().all(|k| k & m == 0), "allocating live qubits");
                self.run(init);
            }
            QInstr::Free { qubits, init, .. } => {
                self.run(&invert_flat(init).expect("invertible init"));
                let m = mask(qubits);
                let dirty: f64 = self.amps.iter().filter(|(k, _)| *k & m != 0).map(|(_, a)| a.norm_sqr()).sum();
                assert!(dirty < 1e-18, "region {qubits:?} released dirty ({dirty})");
            }
            QInstr::Block(b) => self.run(b),
            other => panic!("unexpected instruction {}", other.kind_name()),
        }
    }

    /// The single basis state holding all the amplitude.
    pub fn output(&self) -> u64 {
        let (idx, amp) = self
            .amps
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .expect("non-empty state");
        assert!((amp.norm() - 1.0).abs() < 1e-9, "output is not a basis state");
        *idx
    }
}

/// Output basis index of `seq` on basis input `input`.
pub fn basis_output(seq: &[QInstr], input: u64) -> u64 {
    let mut s = Sparse::basis(input);
    s.run(seq);
    s.output()
}

pub fn qubits(range: std::ops::Range<u32>) -> Vec<Qubit> {
    range.map(Qubit).collect()
}
