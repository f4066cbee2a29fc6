//! Dense statevector engine.
//!
//! Qubits are identified by their QPU address; the state keeps a map from
//! address to bit position. Position `k` carries weight `2^k` in the amplitude
//! index. Allocation appends positions, deallocation compacts them.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt::Write;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::qir::{check_distinct, invert_flat, Gate, GateKind, Perm, QInstr, QirError, Qubit};

pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Tolerance under which a qubit counts as |0⟩ when it is released.
pub const ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("qubit {0} is not allocated")]
    UnknownQubit(Qubit),
    #[error("qubit {0} is already allocated")]
    AlreadyLive(Qubit),
    #[error("qubit budget exceeded: {requested} live qubits requested, limit is {max}")]
    Capacity { requested: usize, max: usize },
    #[error("qubits {qubits} released in a non-zero state (overlap with |0…0⟩ is {overlap:.12})")]
    NotZero { qubits: String, overlap: f64 },
    #[error("instruction {0} is not a backend primitive")]
    NotPrimitive(&'static str),
    #[error(transparent)]
    Qir(#[from] QirError),
}

type Matrix2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 matrix of a single-qubit gate (multi-qubit gates reduce to X).
pub fn gate_matrix(kind: GateKind, angle: f64) -> Matrix2 {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match kind {
        GateKind::I => [[one, zero], [zero, one]],
        GateKind::X | GateKind::CNOT | GateKind::CCNOT => [[zero, one], [one, zero]],
        GateKind::Y => [[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]],
        GateKind::Z => [[one, zero], [zero, c(-1.0, 0.0)]],
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        GateKind::S => [[one, zero], [zero, c(0.0, 1.0)]],
        GateKind::T => [[one, zero], [zero, Complex64::from_polar(1.0, FRAC_PI_4)]],
        GateKind::RX => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::RY => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::RZ => [
            [Complex64::from_polar(1.0, -angle / 2.0), zero],
            [zero, Complex64::from_polar(1.0, angle / 2.0)],
        ],
        GateKind::PH => [[one, zero], [zero, Complex64::from_polar(1.0, angle)]],
        GateKind::SWAP => [[one, zero], [zero, one]],
    }
}

fn adjoint(m: Matrix2) -> Matrix2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<Complex64>,
    order: Vec<Qubit>,
    pos: HashMap<Qubit, usize>,
    max_qubits: usize,
}

impl Default for StateVector {
    fn default() -> Self {
        StateVector::new(DEFAULT_MAX_QUBITS)
    }
}

impl StateVector {
    pub fn new(max_qubits: usize) -> StateVector {
        StateVector {
            amps: vec![c(1.0, 0.0)],
            order: Vec::new(),
            pos: HashMap::new(),
            max_qubits,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.order.len()
    }

    /// Live qubits by bit position.
    pub fn qubits(&self) -> &[Qubit] {
        &self.order
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Replaces the amplitudes of the live qubits; used to load test states.
    pub fn set_amplitudes(&mut self, amps: Vec<Complex64>) {
        assert_eq!(amps.len(), self.amps.len(), "amplitude count");
        self.amps = amps;
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn position(&self, q: Qubit) -> Result<usize, BackendError> {
        self.pos.get(&q).copied().ok_or(BackendError::UnknownQubit(q))
    }

    fn mask(&self, qs: &[Qubit]) -> Result<usize, BackendError> {
        qs.iter()
            .try_fold(0usize, |m, q| Ok(m | (1usize << self.position(*q)?)))
    }

    pub fn alloc(&mut self, qs: &[Qubit]) -> Result<(), BackendError> {
        check_distinct(qs)?;
        if let Some(q) = qs.iter().find(|q| self.pos.contains_key(q)) {
            return Err(BackendError::AlreadyLive(*q));
        }
        let requested = self.order.len() + qs.len();
        if requested > self.max_qubits {
            return Err(BackendError::Capacity {
                requested,
                max: self.max_qubits,
            });
        }
        for q in qs {
            self.pos.insert(*q, self.order.len());
            self.order.push(*q);
        }
        self.amps.resize(1usize << self.order.len(), c(0.0, 0.0));
        Ok(())
    }

    /// Releases qubits. A qubit that is not |0⟩ is an error in `strict` mode;
    /// otherwise it is measured, flipped back to |0⟩ and dropped.
    pub fn dealloc<R: Rng + ?Sized>(
        &mut self,
        qs: &[Qubit],
        strict: bool,
        rng: &mut R,
    ) -> Result<(), BackendError> {
        if qs.is_empty() {
            return Ok(());
        }
        let overlap = self.overlap_zero(qs)?;
        if overlap < 1.0 - ZERO_TOLERANCE {
            if strict {
                return Err(BackendError::NotZero {
                    qubits: qs.iter().map(Qubit::to_string).collect::<Vec<_>>().join(","),
                    overlap,
                });
            }
            let bits = self.measure(qs, rng)?;
            for (q, b) in qs.iter().zip(bits) {
                if b {
                    self.apply_gate(&Gate::one(GateKind::X, *q))?;
                }
            }
        }
        for q in qs {
            self.remove(*q)?;
        }
        Ok(())
    }

    fn remove(&mut self, q: Qubit) -> Result<(), BackendError> {
        let p = self.position(q)?;
        let bit = 1usize << p;
        let low = bit - 1;
        let half = self.amps.len() / 2;
        let mut next = Vec::with_capacity(half);
        for k in 0..half {
            let i = (k & low) | ((k & !low) << 1);
            next.push(self.amps[i]);
        }
        // renormalize away the rounding left in the dropped half
        let norm = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            next.iter_mut().for_each(|a| *a /= norm);
        }
        self.amps = next;
        self.order.remove(p);
        self.pos.remove(&q);
        for (i, addr) in self.order.iter().enumerate().skip(p) {
            self.pos.insert(*addr, i);
        }
        Ok(())
    }

    fn apply_matrix(&mut self, m: Matrix2, target: usize, ctrl_mask: usize) {
        let tb = 1usize << target;
        for i in 0..self.amps.len() {
            if i & tb != 0 || i & ctrl_mask != ctrl_mask {
                continue;
            }
            let j = i | tb;
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a + m[0][1] * b;
            self.amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<(), BackendError> {
        let mut all = g.targets.clone();
        all.extend_from_slice(&g.ctrls);
        check_distinct(&all)?;
        if g.targets.len() != g.kind.arity() {
            return Err(QirError::Arity {
                gate: g.kind.name(),
                expected: g.kind.arity(),
                got: g.targets.len(),
            }
            .into());
        }
        let ctrl_mask = self.mask(&g.ctrls)?;
        match g.kind {
            GateKind::CNOT | GateKind::CCNOT => {
                let n = g.targets.len();
                let extra = self.mask(&g.targets[..n - 1])?;
                let t = self.position(g.targets[n - 1])?;
                self.apply_matrix(gate_matrix(GateKind::X, 0.0), t, ctrl_mask | extra);
            }
            GateKind::SWAP => {
                let a = 1usize << self.position(g.targets[0])?;
                let b = 1usize << self.position(g.targets[1])?;
                for i in 0..self.amps.len() {
                    if i & a != 0 && i & b == 0 && i & ctrl_mask == ctrl_mask {
                        self.amps.swap(i, i ^ a ^ b);
                    }
                }
            }
            kind => {
                let mut m = gate_matrix(kind, g.angle.unwrap_or(0.0));
                if g.dagger {
                    m = adjoint(m);
                }
                let t = self.position(g.targets[0])?;
                self.apply_matrix(m, t, ctrl_mask);
            }
        }
        Ok(())
    }

    pub fn apply_perm(&mut self, p: &Perm) -> Result<(), BackendError> {
        let mut all = p.targets.clone();
        all.extend_from_slice(&p.ctrls);
        check_distinct(&all)?;
        let ctrl_mask = self.mask(&p.ctrls)?;
        let tpos: Vec<usize> = p
            .targets
            .iter()
            .map(|q| self.position(*q))
            .collect::<Result<_, _>>()?;
        let tmask: usize = tpos.iter().map(|b| 1usize << b).sum();
        let mut next = vec![c(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if i & ctrl_mask != ctrl_mask {
                next[i] = *a;
                continue;
            }
            let v = tpos
                .iter()
                .enumerate()
                .fold(0u64, |v, (k, b)| v | ((((i >> b) & 1) as u64) << k));
            let w = p.map(v);
            let j = tpos
                .iter()
                .enumerate()
                .fold(i & !tmask, |j, (k, b)| j | ((((w >> k) & 1) as usize) << b));
            next[j] = *a;
        }
        self.amps = next;
        Ok(())
    }

    /// Applies a primitive instruction.
    pub fn apply(&mut self, instr: &QInstr) -> Result<(), BackendError> {
        match instr {
            QInstr::Gate(g) => self.apply_gate(g),
            QInstr::Perm(p) => self.apply_perm(p),
            other => Err(BackendError::NotPrimitive(other.kind_name())),
        }
    }

    /// Runs an expanded sequence of gates, permutations and region
    /// allocations. Returns the number of gates and permutations applied.
    pub fn execute<R: Rng + ?Sized>(
        &mut self,
        seq: &[QInstr],
        strict: bool,
        rng: &mut R,
    ) -> Result<usize, BackendError> {
        let mut applied = 0;
        for instr in seq {
            match instr {
                QInstr::Alloc { qubits, init, .. } => {
                    self.alloc(qubits)?;
                    applied += self.execute(init, strict, rng)?;
                }
                QInstr::Free { qubits, init, .. } => {
                    applied += self.execute(&invert_flat(init)?, strict, rng)?;
                    self.dealloc(qubits, strict, rng)?;
                }
                other => {
                    self.apply(other)?;
                    applied += 1;
                }
            }
        }
        Ok(applied)
    }

    /// Projective Z-basis measurement; `bits[k]` is the outcome for `qs[k]`.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qs: &[Qubit],
        rng: &mut R,
    ) -> Result<Vec<bool>, BackendError> {
        check_distinct(qs)?;
        let positions: Vec<usize> = qs
            .iter()
            .map(|q| self.position(*q))
            .collect::<Result<_, _>>()?;
        let outcome_of = |i: usize| -> usize {
            positions
                .iter()
                .enumerate()
                .fold(0, |o, (k, p)| o | (((i >> p) & 1) << k))
        };
        let mut marginal = vec![0.0f64; 1usize << qs.len()];
        for (i, a) in self.amps.iter().enumerate() {
            marginal[outcome_of(i)] += a.norm_sqr();
        }
        let total: f64 = marginal.iter().sum();
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = marginal.len() - 1;
        for (o, p) in marginal.iter().enumerate() {
            acc += p;
            if *p > 0.0 && u < acc {
                chosen = o;
                break;
            }
        }
        // never pick a zero-probability outcome through rounding at the tail
        if marginal[chosen] == 0.0 {
            chosen = marginal.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        }
        let scale = 1.0 / marginal[chosen].sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if outcome_of(i) == chosen {
                *a *= scale;
            } else {
                *a = c(0.0, 0.0);
            }
        }
        Ok((0..qs.len()).map(|k| (chosen >> k) & 1 == 1).collect())
    }

    /// Probability of reading all-zeros on `qs`.
    pub fn overlap_zero(&self, qs: &[Qubit]) -> Result<f64, BackendError> {
        let mask = self.mask(qs)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Amplitude rows `bits re im`, most significant position leftmost.
    pub fn dump(&self) -> String {
        let n = self.order.len();
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let bits: String = (0..n)
                .rev()
                .map(|p| if (i >> p) & 1 == 1 { '1' } else { '0' })
                .collect();
            let _ = writeln!(out, "{bits} {:.10} {:.10}", a.re, a.im);
        }
        out
    }
}

/// Matrix of an expanded, measurement-free sequence over `qubits`
/// (column `j` is the image of basis state `j`). Scratch regions opened by the
/// sequence must be returned to |0…0⟩.
pub fn unitary(seq: &[QInstr], qubits: &[Qubit]) -> Result<Vec<Vec<Complex64>>, BackendError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0);
    let dim = 1usize << qubits.len();
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut s = StateVector::new(DEFAULT_MAX_QUBITS.max(qubits.len()));
        s.alloc(qubits)?;
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[j] = c(1.0, 0.0);
        s.set_amplitudes(amps);
        s.execute(seq, true, &mut rng)?;
        cols.push(s.amps);
    }
    Ok(cols)
}
