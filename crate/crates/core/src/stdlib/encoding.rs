//! Classical/quantum type bridges.
//!
//! Qubit `k` of a register carries bit `k` of its value; displays put the most
//! significant bit first. Signed registers use two's complement.

use std::fmt;

use crate::qir::{QInstr, Qubit};

use super::StdlibError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QKind {
    Bool,
    UInt,
    Int,
    Array,
    Vector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuantumType {
    pub kind: QKind,
    pub width: u32,
}

impl QuantumType {
    pub const QBOOL: QuantumType = QuantumType {
        kind: QKind::Bool,
        width: 1,
    };

    pub fn quint(width: u32) -> QuantumType {
        QuantumType {
            kind: QKind::UInt,
            width,
        }
    }

    pub fn qint(width: u32) -> QuantumType {
        QuantumType {
            kind: QKind::Int,
            width,
        }
    }

    pub fn qarray(width: u32) -> QuantumType {
        QuantumType {
            kind: QKind::Array,
            width,
        }
    }

    pub fn qvector(width: u32) -> QuantumType {
        QuantumType {
            kind: QKind::Vector,
            width,
        }
    }

    pub fn signed(self) -> bool {
        self.kind == QKind::Int
    }

    /// Representable value range, inclusive.
    pub fn range(self) -> (i128, i128) {
        let w = self.width.min(64);
        match self.kind {
            QKind::Int if w > 0 => (-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1),
            _ => (0, (1i128 << w) - 1),
        }
    }
}

impl fmt::Display for QuantumType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            QKind::Bool => write!(f, "qbool"),
            QKind::UInt => write!(f, "quint<{}>", self.width),
            QKind::Int => write!(f, "qint<{}>", self.width),
            QKind::Array => write!(f, "qbool[{}]", self.width),
            QKind::Vector => write!(f, "qvector"),
        }
    }
}

/// A measured value after casting.
#[derive(Clone, Debug, PartialEq)]
pub enum Classical {
    Bool(bool),
    UInt(u64),
    Int(i64),
    Bits(Vec<bool>),
}

/// Bit pattern of `v` over `ty.width` bits.
pub fn encode(ty: QuantumType, v: i128) -> Result<u64, StdlibError> {
    let (lo, hi) = ty.range();
    if v < lo || v > hi {
        return Err(StdlibError::OutOfRange {
            value: v,
            ty: ty.to_string(),
        });
    }
    let mask = if ty.width >= 64 {
        u64::MAX
    } else {
        (1u64 << ty.width) - 1
    };
    Ok((v as u64) & mask)
}

/// State preparation from |0…0⟩: an X on every qubit whose bit is set.
pub fn get_init(ty: QuantumType, v: i128, qubits: &[Qubit]) -> Result<Vec<QInstr>, StdlibError> {
    if qubits.len() != ty.width as usize {
        return Err(StdlibError::WidthMismatch {
            expected: ty.width as usize,
            got: qubits.len(),
        });
    }
    let bits = encode(ty, v)?;
    Ok(qubits
        .iter()
        .enumerate()
        .filter(|(k, _)| (bits >> k) & 1 == 1)
        .map(|(_, q)| QInstr::x(*q))
        .collect())
}

/// `bits[k]` is the outcome of qubit `k`.
pub fn cast_measure(ty: QuantumType, bits: &[bool]) -> Classical {
    let raw = bits
        .iter()
        .enumerate()
        .take(64)
        .fold(0u64, |v, (k, b)| v | ((*b as u64) << k));
    match ty.kind {
        QKind::Bool => Classical::Bool(bits.first().copied().unwrap_or(false)),
        QKind::UInt => Classical::UInt(raw),
        QKind::Int => {
            let w = bits.len() as u32;
            if w == 0 || w >= 64 {
                Classical::Int(raw as i64)
            } else if (raw >> (w - 1)) & 1 == 1 {
                Classical::Int(raw as i64 - (1i64 << w))
            } else {
                Classical::Int(raw as i64)
            }
        }
        QKind::Array | QKind::Vector => Classical::Bits(bits.to_vec()),
    }
}

/// MSB-left rendering of measured bits.
pub fn display_bits(bits: &[bool]) -> String {
    bits.iter().rev().map(|b| if *b { '1' } else { '0' }).collect()
}
