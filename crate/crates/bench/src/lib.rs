//! Input generators shared by the benchmarks.

use modconv::{DensePoly, FourierPrime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PRIME: u64 = 998_244_353;

pub fn field() -> FourierPrime {
    FourierPrime::new(PRIME).expect("known Fourier prime")
}

pub fn residues(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..PRIME)).collect()
}

/// Operands whose product has exactly `n` coefficients.
pub fn operands(n: usize, seed: u64) -> (DensePoly, DensePoly) {
    let z1 = (n + 1).div_ceil(2);
    let z2 = n + 1 - z1;
    let mut a = residues(z1, seed);
    let mut b = residues(z2, seed.wrapping_add(1));
    a[z1 - 1] = 1;
    b[z2 - 1] = 1;
    (
        DensePoly::from_reduced(field(), a),
        DensePoly::from_reduced(field(), b),
    )
}
