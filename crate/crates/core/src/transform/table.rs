use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Result;
use crate::modfield::FourierPrime;

/// Precomputed root-of-unity powers for one power-of-two transform size.
///
/// Besides the plain power tables, the table keeps per-level twiddle runs:
/// the twiddles of a butterfly stage spanning `2h` points are stored
/// contiguously at `[h, 2h)`, together with their Shoup quotients.
#[derive(Clone, Debug)]
pub struct TwiddleTable {
    field: FourierPrime,
    size: usize,
    root: u64,
    powers: Vec<u64>,
    inv_powers: Vec<u64>,
    inv_size: u64,
    fwd: Vec<u64>,
    fwd_shoup: Vec<u64>,
    inv: Vec<u64>,
    inv_shoup: Vec<u64>,
}

type TableCache = Mutex<HashMap<(u64, usize), Arc<TwiddleTable>>>;

fn cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl TwiddleTable {
    /// Builds a table for `size`, using the field's smallest principal
    /// `size`-th root of unity.
    pub fn new(field: FourierPrime, size: usize) -> Result<Self> {
        let root = field.root_of_unity(size)?;
        let mut powers = Vec::with_capacity(size);
        let mut cur = 1 % field.modulus();
        for _ in 0..size {
            powers.push(cur);
            cur = field.mul(cur, root);
        }
        Ok(Self::from_powers(field, root, powers))
    }

    /// Shared, lazily built table keyed by `(p, size)`.
    pub fn shared(field: FourierPrime, size: usize) -> Result<Arc<Self>> {
        let key = (field.modulus(), size);
        if let Some(t) = cache().lock().unwrap().get(&key) {
            return Ok(Arc::clone(t));
        }
        // built outside the lock; a racing builder produces an identical table
        let table = Arc::new(Self::new(field, size)?);
        let mut guard = cache().lock().unwrap();
        Ok(Arc::clone(guard.entry(key).or_insert(table)))
    }

    fn from_powers(field: FourierPrime, root: u64, powers: Vec<u64>) -> Self {
        let size = powers.len();
        let inv_powers: Vec<u64> = (0..size).map(|j| powers[(size - j) % size]).collect();
        let inv_size = field
            .inv(size as u64 % field.modulus())
            .expect("power-of-two size is invertible modulo an odd prime");

        let mut fwd = vec![0u64; size];
        let mut inv = vec![0u64; size];
        let mut h = 1;
        while h < size {
            let stride = size / (2 * h);
            for u in 0..h {
                fwd[h + u] = powers[u * stride];
                inv[h + u] = inv_powers[u * stride];
            }
            h *= 2;
        }
        let fwd_shoup = fwd.iter().map(|&w| field.shoup(w)).collect();
        let inv_shoup = inv.iter().map(|&w| field.shoup(w)).collect();

        TwiddleTable {
            field,
            size,
            root,
            powers,
            inv_powers,
            inv_size,
            fwd,
            fwd_shoup,
            inv,
            inv_shoup,
        }
    }

    pub fn field(&self) -> &FourierPrime {
        &self.field
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// The principal `size`-th root of unity the table is built on.
    pub fn root(&self) -> u64 {
        self.root
    }

    /// `root^j` for `j < size`.
    pub fn powers(&self) -> &[u64] {
        &self.powers
    }

    /// `root^(-j)` for `j < size`.
    pub fn inv_powers(&self) -> &[u64] {
        &self.inv_powers
    }

    /// `size^(-1) mod p`.
    pub fn inv_size(&self) -> u64 {
        self.inv_size
    }

    /// Twiddles `w_{2h}^u`, `u < h`, for a forward stage over `2h` points.
    #[inline]
    pub(crate) fn stage_fwd(&self, h: usize) -> (&[u64], &[u64]) {
        (&self.fwd[h..2 * h], &self.fwd_shoup[h..2 * h])
    }

    /// Twiddles `w_{2h}^(-u)`, `u < h`.
    #[inline]
    pub(crate) fn stage_inv(&self, h: usize) -> (&[u64], &[u64]) {
        (&self.inv[h..2 * h], &self.inv_shoup[h..2 * h])
    }

    /// Copy of the table with `powers[j]` bumped by one. Only meant for
    /// fault-injection runs of the verification suites.
    #[doc(hidden)]
    pub fn with_corrupted_power(&self, j: usize) -> TwiddleTable {
        let mut powers = self.powers.clone();
        let j = j % self.size;
        powers[j] = self.field.add(powers[j], 1);
        Self::from_powers(self.field, self.root, powers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        for (p, l) in [(17u64, 16usize), (257, 256), (998_244_353, 1024), (5, 4)] {
            let fp = FourierPrime::new(p).unwrap();
            let t = TwiddleTable::new(fp, l).unwrap();
            for j in 0..l {
                assert_eq!(fp.mul(t.powers()[j], t.inv_powers()[j]), 1);
            }
            assert_eq!(t.powers()[l / 2], p - 1);
            assert_eq!(fp.mul(t.inv_size(), l as u64 % p), 1);
            let mut h = 1;
            while h < l {
                let (w, _) = t.stage_fwd(h);
                let root2h = fp.pow(t.root(), (l / (2 * h)) as u64);
                for (u, &x) in w.iter().enumerate() {
                    assert_eq!(x, fp.pow(root2h, u as u64));
                }
                h *= 2;
            }
        }
    }

    #[test]
    fn shared_tables_are_cached() {
        let fp = FourierPrime::new(257).unwrap();
        let a = TwiddleTable::shared(fp, 64).unwrap();
        let b = TwiddleTable::shared(fp, 64).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(TwiddleTable::shared(fp, 512).is_err());
    }

    #[test]
    fn size_one() {
        let fp = FourierPrime::new(17).unwrap();
        let t = TwiddleTable::new(fp, 1).unwrap();
        assert_eq!(t.powers(), &[1]);
        assert_eq!(t.inv_size(), 1);
    }

    #[test]
    fn corruption_breaks_invariant() {
        let fp = FourierPrime::new(17).unwrap();
        let t = TwiddleTable::new(fp, 8).unwrap().with_corrupted_power(1);
        assert_ne!(fp.mul(t.powers()[1], t.inv_powers()[1]), 1);
    }
}
