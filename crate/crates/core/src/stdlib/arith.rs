//! Draper adders and XOR networks.
//!
//! An adder is `Block[Compute(QFT), phases]`: the transform sits in a compute
//! block so it is undone at the end of the block and never controlled.

use std::f64::consts::PI;

use crate::qir::{check_distinct, Gate, GateKind, QInstr, Qubit};

use super::qft::qft;
use super::StdlibError;

/// Fourier basis in which qubit `k` carries phase `2π·x / 2^(k+1)`.
fn fourier(q: &[Qubit]) -> Vec<QInstr> {
    let rev: Vec<Qubit> = q.iter().rev().copied().collect();
    qft(&rev)
}

/// `2π · num / 2^(bits)` with the numerator reduced first.
fn fraction_angle(num: u64, bits: u32) -> f64 {
    if bits >= 64 {
        return 2.0 * PI * (num as f64 / 2f64.powi(bits as i32));
    }
    let m = num & ((1u64 << bits) - 1);
    2.0 * PI * m as f64 / (1u64 << bits) as f64
}

fn reduce(c: u64, n: usize) -> u64 {
    if n >= 64 {
        c
    } else {
        c & ((1u64 << n) - 1)
    }
}

/// `|x⟩ ↦ |x ± c mod 2^n⟩`.
pub fn add_const(q: &[Qubit], c: u64, negative: bool) -> Vec<QInstr> {
    let n = q.len();
    let c = reduce(c, n);
    let mut phases = Vec::new();
    for (k, t) in q.iter().enumerate() {
        let num = reduce(c, k + 1);
        if num == 0 {
            continue;
        }
        let mut angle = fraction_angle(num, k as u32 + 1);
        if negative {
            angle = -angle;
        }
        phases.push(QInstr::ph(angle, *t));
    }
    if phases.is_empty() {
        return Vec::new();
    }
    let mut body = vec![QInstr::Compute(fourier(q))];
    body.extend(phases);
    vec![QInstr::Block(body)]
}

/// `|x⟩|y⟩ ↦ |x ± y mod 2^n⟩|y⟩`; `src` may be narrower than `dst`.
pub fn add_quantum(dst: &[Qubit], src: &[Qubit], negative: bool) -> Result<Vec<QInstr>, StdlibError> {
    let mut all = dst.to_vec();
    all.extend_from_slice(src);
    check_distinct(&all).map_err(|_| StdlibError::Overlap)?;
    let mut phases = Vec::new();
    for (k, t) in dst.iter().enumerate() {
        for (m, s) in src.iter().enumerate().take(k + 1) {
            // bit m of y contributes 2^m / 2^(k+1) of a turn on qubit k
            let mut angle = fraction_angle(1u64 << m, k as u32 + 1);
            if negative {
                angle = -angle;
            }
            let g = Gate::with_angle(GateKind::PH, angle, vec![*t])?.controlled(&[*s]);
            phases.push(QInstr::Gate(g));
        }
    }
    if phases.is_empty() {
        return Ok(Vec::new());
    }
    let mut body = vec![QInstr::Compute(fourier(dst))];
    body.extend(phases);
    Ok(vec![QInstr::Block(body)])
}

/// X on every qubit whose bit of `c` is set.
pub fn xor_const(dst: &[Qubit], c: u64) -> Vec<QInstr> {
    dst.iter()
        .enumerate()
        .filter(|(k, _)| *k < 64 && (c >> k) & 1 == 1)
        .map(|(_, q)| QInstr::x(*q))
        .collect()
}

/// Bitwise CNOT fan `dst[k] ^= src[k]`.
pub fn xor_quantum(dst: &[Qubit], src: &[Qubit]) -> Result<Vec<QInstr>, StdlibError> {
    if dst.len() != src.len() {
        return Err(StdlibError::WidthMismatch {
            expected: dst.len(),
            got: src.len(),
        });
    }
    let mut all = dst.to_vec();
    all.extend_from_slice(src);
    check_distinct(&all).map_err(|_| StdlibError::Overlap)?;
    Ok(src
        .iter()
        .zip(dst)
        .map(|(s, d)| QInstr::cnot(*s, *d))
        .collect())
}

/// `dst ^= src`, zero- or sign-extending `src` and truncating it to `dst`.
pub fn xor_extended(dst: &[Qubit], src: &[Qubit], signed: bool) -> Result<Vec<QInstr>, StdlibError> {
    let mut all = dst.to_vec();
    all.extend_from_slice(src);
    check_distinct(&all).map_err(|_| StdlibError::Overlap)?;
    let mut out = Vec::with_capacity(dst.len());
    for (k, d) in dst.iter().enumerate() {
        match src.get(k) {
            Some(s) => out.push(QInstr::cnot(*s, *d)),
            None if signed && !src.is_empty() => out.push(QInstr::cnot(src[src.len() - 1], *d)),
            None => break,
        }
    }
    Ok(out)
}
