//! Modular exponentiation as a basis permutation.

use crate::qir::{Bijection, Perm, QInstr, Qubit};

use super::StdlibError;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `dst ^= base^exp mod modulus`.
pub fn pow_mod(exp: &[Qubit], dst: &[Qubit], base: u64, modulus: u64) -> Result<Vec<QInstr>, StdlibError> {
    if modulus < 2 || gcd(base % modulus, modulus) != 1 {
        return Err(StdlibError::NotCoprime { base, modulus });
    }
    if exp.iter().any(|q| dst.contains(q)) {
        return Err(StdlibError::Overlap);
    }
    let mut targets = exp.to_vec();
    targets.extend_from_slice(dst);
    let perm = Perm::new(
        Bijection::PowModEmbed {
            base,
            modulus,
            exp_width: exp.len() as u32,
        },
        targets,
    )?;
    Ok(vec![QInstr::Perm(perm)])
}
