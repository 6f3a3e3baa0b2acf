//! Word-sized prime field arithmetic.
//!
//! [`FourierPrime`] describes the coefficient field `Z/pZ` and carries the
//! constants the transforms need (2-adicity, primitive root, Montgomery and
//! Shoup helpers). Hot loops work on raw `u64` residues through the methods
//! on [`FourierPrime`]; [`Felt`] is the checked boundary type that remembers
//! its modulus.
//!
//! Every value that leaves this module is a canonical residue in `[0, p)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Moduli must stay below this bound so that products fit in `u128` with room
/// for Montgomery reduction, and Shoup products stay below `2^64`.
pub const MAX_MODULUS_BITS: u32 = 62;

/// Witnesses that make Miller-Rabin deterministic for every `n < 2^64`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// An odd prime `p < 2^62` together with the data needed for power-of-two
/// transforms over `Z/pZ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FourierPrime {
    p: u64,
    two_adicity: u32,
    generator: u64,
    // -p^{-1} mod 2^64
    mont_neg_inv: u64,
    // 2^128 mod p
    mont_r2: u64,
}

impl FourierPrime {
    /// Validates `p` and derives its 2-adicity and smallest primitive root.
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 {
            return Err(Error::BadModulus {
                value: p,
                reason: "modulus must be an odd prime",
            });
        }
        if p >> MAX_MODULUS_BITS != 0 {
            return Err(Error::BadModulus {
                value: p,
                reason: "modulus must be below 2^62",
            });
        }
        if !is_prime(p) {
            return Err(Error::BadModulus {
                value: p,
                reason: "modulus is not prime",
            });
        }
        let two_adicity = (p - 1).trailing_zeros();
        let generator = smallest_primitive_root(p);

        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        debug_assert_eq!(p.wrapping_mul(inv), 1);
        let r = ((1u128 << 64) % p as u128) as u64;
        let mont_r2 = mulmod(r, r, p);

        Ok(FourierPrime {
            p,
            two_adicity,
            generator,
            mont_neg_inv: inv.wrapping_neg(),
            mont_r2,
        })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Largest `k` with `2^k | p - 1`.
    #[inline]
    pub fn two_adicity(&self) -> u32 {
        self.two_adicity
    }

    /// Smallest primitive root modulo `p`.
    #[inline]
    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Largest power-of-two transform length the field supports.
    pub fn max_transform_len(&self) -> usize {
        let bits = self.two_adicity.min(usize::BITS - 1);
        1usize << bits
    }

    /// Checks that an `n`-point power-of-two transform exists over this field.
    pub fn check_transform_len(&self, n: usize) -> Result<()> {
        if !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "transform length {n} is not a power of two"
            )));
        }
        let required = n.trailing_zeros();
        if required > self.two_adicity {
            return Err(Error::UnsupportedSize {
                size: n,
                modulus: self.p,
                required,
                available: self.two_adicity,
            });
        }
        Ok(())
    }

    /// Wraps an arbitrary integer as a field element, reducing it mod `p`.
    pub fn elem(&self, value: u64) -> Felt {
        Felt {
            value: value % self.p,
            modulus: self.p,
        }
    }

    pub fn zero(&self) -> Felt {
        self.elem(0)
    }

    pub fn one(&self) -> Felt {
        self.elem(1)
    }

    /// Returns an error unless `value` is already reduced.
    pub fn check_canonical(&self, value: u64) -> Result<()> {
        if value < self.p {
            Ok(())
        } else {
            Err(Error::NonCanonical {
                value,
                modulus: self.p,
            })
        }
    }

    pub(crate) fn check_all_canonical(&self, values: &[u64]) -> Result<()> {
        match values.iter().find(|&&v| v >= self.p) {
            Some(&value) => Err(Error::NonCanonical {
                value,
                modulus: self.p,
            }),
            None => Ok(()),
        }
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.mont_neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    /// `a * b mod p` for canonical inputs.
    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let t = self.redc(a as u128 * b as u128);
        self.redc(t as u128 * self.mont_r2 as u128)
    }

    /// Square-and-multiply; `pow(0, 0) = 1`.
    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.p) {
            return Err(Error::ZeroInverse);
        }
        Ok(invmod(a % self.p, self.p))
    }

    /// Precomputed quotient for repeated multiplication by the constant `w`.
    #[inline]
    pub(crate) fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.p as u128) as u64
    }

    /// `x * w mod p` given `w_shoup = shoup(w)`. `x` may be any value below
    /// `2^64`; the result is canonical.
    #[inline(always)]
    pub(crate) fn mul_shoup(&self, x: u64, w: u64, w_shoup: u64) -> u64 {
        let q = ((x as u128 * w_shoup as u128) >> 64) as u64;
        let r = x.wrapping_mul(w).wrapping_sub(q.wrapping_mul(self.p));
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }

    /// The smallest principal `n`-th root of unity, `n` a power of two with
    /// `n | p - 1`.
    ///
    /// Candidates are the odd powers of `g^((p-1)/n)`; the minimum over them
    /// makes the choice independent of the generator. This walks `n/2`
    /// candidates, so callers should cache the result (see `TwiddleTable`).
    pub fn root_of_unity(&self, n: usize) -> Result<u64> {
        self.check_transform_len(n)?;
        if n == 1 {
            return Ok(1);
        }
        let w = self.pow(self.generator, (self.p - 1) / n as u64);
        let w2 = self.mul(w, w);
        let mut cur = w;
        let mut best = w;
        for _ in 1..n / 2 {
            cur = self.mul(cur, w2);
            best = best.min(cur);
        }
        Ok(best)
    }
}

impl fmt::Display for FourierPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// Finds a prime `p` with `2^two_adicity | p - 1` and `2^(bits-1) <= p < 2^bits`.
///
/// The search starts at `2^(bits-1)` and returns the smallest qualifying
/// prime, so the result is a pure function of the arguments.
pub fn find_fourier_prime(two_adicity: u32, bits: u32) -> Result<FourierPrime> {
    let none = Error::NoFourierPrime { two_adicity, bits };
    if !(2..=MAX_MODULUS_BITS).contains(&bits) || two_adicity + 2 > bits {
        return Err(none);
    }
    let step = 1u64 << two_adicity.max(1);
    let lo = 1u64 << (bits - 1);
    let hi = 1u64 << bits;
    // smallest c * step + 1 >= lo
    let mut candidate = (lo - 1).div_ceil(step) * step + 1;
    while candidate < hi {
        if is_prime(candidate) {
            return FourierPrime::new(candidate);
        }
        candidate += step;
    }
    Err(none)
}

/// A canonical residue that remembers its modulus.
///
/// Arithmetic between elements of different fields is a usage error: the
/// `try_*` methods report it, the operator impls panic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Felt {
    value: u64,
    modulus: u64,
}

impl Felt {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn same_field(&self, rhs: &Felt) -> Result<u64> {
        if self.modulus == rhs.modulus {
            Ok(self.modulus)
        } else {
            Err(Error::ModulusMismatch {
                left: self.modulus,
                right: rhs.modulus,
            })
        }
    }

    fn with(&self, value: u64) -> Felt {
        Felt {
            value,
            modulus: self.modulus,
        }
    }

    pub fn try_add(self, rhs: Felt) -> Result<Felt> {
        let p = self.same_field(&rhs)?;
        let s = self.value + rhs.value;
        Ok(self.with(if s >= p { s - p } else { s }))
    }

    pub fn try_sub(self, rhs: Felt) -> Result<Felt> {
        let p = self.same_field(&rhs)?;
        let v = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.value + p - rhs.value
        };
        Ok(self.with(v))
    }

    pub fn try_mul(self, rhs: Felt) -> Result<Felt> {
        let p = self.same_field(&rhs)?;
        Ok(self.with(mulmod(self.value, rhs.value, p)))
    }

    pub fn inv(self) -> Result<Felt> {
        if self.value == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.with(invmod(self.value, self.modulus)))
    }

    /// `self^exp`, with `0^0 = 1`.
    pub fn pow(self, exp: u64) -> Felt {
        self.with(powmod(self.value, exp, self.modulus))
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for Felt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! felt_op {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr for Felt {
            type Output = Felt;

            fn $method(self, rhs: Felt) -> Felt {
                match self.$checked(rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    };
}

felt_op!(Add, add, try_add);
felt_op!(Sub, sub, try_sub);
felt_op!(Mul, mul, try_mul);

impl Neg for Felt {
    type Output = Felt;

    fn neg(self) -> Felt {
        let v = if self.value == 0 {
            0
        } else {
            self.modulus - self.value
        };
        self.with(v)
    }
}

#[inline]
pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn invmod(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1);
    old_s.rem_euclid(m as i128) as u64
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

// Brent's variant of Pollard rho; `n` must be composite and odd.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut r = 1usize;
        let mut ys = 2u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(128.min(r - k)) {
                    y = f(y);
                    q = mulmod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            g = 1;
            while g == 1 {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Distinct prime factors of `n`, ascending.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            out.push(m);
            continue;
        }
        let d = pollard_rho(m);
        stack.push(d);
        stack.push(m / d);
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn smallest_primitive_root(p: u64) -> u64 {
    let factors = prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&q| powmod(g, (p - 1) / q, p) != 1))
        .unwrap_or(1)
}
