//! Built-in quantum operations, lowered to IR sequences.

pub mod arith;
pub mod compare;
pub mod condition;
pub mod encoding;
pub mod modexp;
pub mod qft;

use thiserror::Error;

use crate::qir::{QirError, Qubit, RegionId};

pub use compare::CmpOp;
pub use condition::{add_into, eval_condition, xor_into, QBinOp, QExpr};
pub use encoding::{cast_measure, display_bits, encode, get_init, Classical, QKind, QuantumType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StdlibError {
    #[error("value {value} is out of range for {ty}")]
    OutOfRange { value: i128, ty: String },
    #[error("width mismatch: expected {expected} qubit(s), got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("operand overlaps the destination register")]
    Overlap,
    #[error("unsupported quantum operation: {0}")]
    Unsupported(String),
    #[error("pow_mod base {base} is not coprime to modulus {modulus}")]
    NotCoprime { base: u64, modulus: u64 },
    #[error("wall of width {k} exceeds register width {width}")]
    WallTooWide { k: usize, width: usize },
    #[error(transparent)]
    Qir(#[from] QirError),
}

/// Source of fresh scratch qubits.
pub trait Ancillas {
    fn fresh(&mut self, width: usize) -> (RegionId, Vec<Qubit>);
}

/// Monotone address allocator.
#[derive(Clone, Debug)]
pub struct Counter {
    pub next_qubit: u32,
    pub next_region: u32,
}

impl Counter {
    pub fn starting_at(qubit: u32, region: u32) -> Counter {
        Counter {
            next_qubit: qubit,
            next_region: region,
        }
    }
}

impl Ancillas for Counter {
    fn fresh(&mut self, width: usize) -> (RegionId, Vec<Qubit>) {
        let region = RegionId(self.next_region);
        self.next_region += 1;
        let qubits = (0..width as u32).map(|k| Qubit(self.next_qubit + k)).collect();
        self.next_qubit += width as u32;
        (region, qubits)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use crate::backend::StateVector;
    use crate::qir::{expand_compute, QInstr, Qubit};

    pub fn qs(n: u32) -> Vec<Qubit> {
        (0..n).map(Qubit).collect()
    }

    /// Runs `seq` on basis state `input` of qubits `0..n` and returns the
    /// output basis index. Panics if the output is not a basis state or if
    /// scratch qubits are left behind.
    pub fn basis_output(seq: &[QInstr], n: u32, input: u64) -> u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut s = StateVector::default();
        s.alloc(&qs(n)).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[input as usize] = Complex64::new(1.0, 0.0);
        s.set_amplitudes(amps);
        let flat = expand_compute(seq).unwrap();
        s.execute(&flat, true, &mut rng).unwrap();
        assert_eq!(s.num_qubits(), n as usize, "scratch qubits leaked");
        let (idx, amp) = s
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((amp.norm() - 1.0).abs() < 1e-9, "output is not a basis state");
        (0..n)
            .filter(|k| (idx >> s.position(Qubit(*k)).unwrap()) & 1 == 1)
            .fold(0, |v, k| v | (1 << k))
    }
}
