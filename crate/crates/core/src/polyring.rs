//! Dense univariate polynomials and the quadratic/Karatsuba baselines.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::modfield::{Felt, FourierPrime};

/// Default operand length below which Karatsuba falls back to schoolbook.
pub const DEFAULT_KARATSUBA_THRESHOLD: usize = 16;

/// A polynomial over one [`FourierPrime`]; `coeffs[i]` is the coefficient of
/// `x^i`.
///
/// Trailing zero coefficients are allowed. The zero polynomial may have any
/// length, including zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensePoly {
    field: FourierPrime,
    coeffs: Vec<u64>,
}

impl DensePoly {
    /// Builds a polynomial from canonical residues.
    pub fn new(field: FourierPrime, coeffs: Vec<u64>) -> Result<Self> {
        field.check_all_canonical(&coeffs)?;
        Ok(DensePoly { field, coeffs })
    }

    /// Builds a polynomial, reducing every coefficient mod `p`.
    pub fn from_reduced(field: FourierPrime, coeffs: impl IntoIterator<Item = u64>) -> Self {
        let p = field.modulus();
        DensePoly {
            field,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        }
    }

    pub fn from_felts(field: FourierPrime, coeffs: &[Felt]) -> Result<Self> {
        let mut out = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            if c.modulus() != field.modulus() {
                return Err(Error::ModulusMismatch {
                    left: field.modulus(),
                    right: c.modulus(),
                });
            }
            out.push(c.value());
        }
        Ok(DensePoly { field, coeffs: out })
    }

    pub(crate) fn from_raw(field: FourierPrime, coeffs: Vec<u64>) -> Self {
        debug_assert!(coeffs.iter().all(|&c| c < field.modulus()));
        DensePoly { field, coeffs }
    }

    pub fn zero(field: FourierPrime) -> Self {
        DensePoly {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: FourierPrime) -> Self {
        DensePoly {
            field,
            coeffs: vec![1],
        }
    }

    pub fn field(&self) -> &FourierPrime {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<u64> {
        self.coeffs
    }

    /// Coefficient of `x^i`; zero past the stored length.
    pub fn coeff(&self, i: usize) -> Felt {
        self.field.elem(self.coeffs.get(i).copied().unwrap_or(0))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the highest nonzero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Drops trailing zero coefficients.
    pub fn normalize(&self) -> DensePoly {
        let len = self.degree().map_or(0, |d| d + 1);
        DensePoly {
            field: self.field,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    pub(crate) fn normalize_in_place(&mut self) {
        let len = self.degree().map_or(0, |d| d + 1);
        self.coeffs.truncate(len);
    }

    fn check_same_field(&self, other: &DensePoly) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::ModulusMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            })
        }
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: Felt) -> Result<Felt> {
        if x.modulus() != self.field.modulus() {
            return Err(Error::ModulusMismatch {
                left: self.field.modulus(),
                right: x.modulus(),
            });
        }
        let fp = &self.field;
        let acc = self
            .coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| fp.add(fp.mul(acc, x.value()), c));
        Ok(fp.elem(acc))
    }

    /// Quadratic product; output length is `len(a) + len(b) - 1` unless either
    /// operand is zero.
    pub fn mul_schoolbook(&self, other: &DensePoly) -> Result<DensePoly> {
        self.check_same_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(DensePoly::zero(self.field));
        }
        let coeffs = schoolbook(&self.field, &self.coeffs, &other.coeffs);
        Ok(DensePoly::from_raw(self.field, coeffs))
    }

    /// Karatsuba product with the same output contract as
    /// [`mul_schoolbook`](Self::mul_schoolbook). Operands shorter than
    /// `threshold` are multiplied directly.
    pub fn mul_karatsuba(&self, other: &DensePoly, threshold: usize) -> Result<DensePoly> {
        self.check_same_field(other)?;
        if threshold == 0 {
            return Err(Error::invalid("karatsuba threshold must be at least 1"));
        }
        if self.is_zero() || other.is_zero() {
            return Ok(DensePoly::zero(self.field));
        }
        let coeffs = karatsuba(&self.field, &self.coeffs, &other.coeffs, threshold);
        Ok(DensePoly::from_raw(self.field, coeffs))
    }

    /// Parses the three-line text format: modulus, coefficient count, and the
    /// space separated coefficients `a_0 .. a_{n-1}`.
    pub fn parse(text: &str) -> Result<DensePoly> {
        let mut lines = text.lines();
        let mut next = |line: usize| {
            lines.next().ok_or_else(|| Error::Parse {
                line,
                message: "unexpected end of input".into(),
            })
        };
        let p_line = next(1)?;
        let p: u64 = parse_int(p_line, 1)?;
        let field = FourierPrime::new(p).map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let n: usize = parse_int(next(2)?, 2)?;
        let coeff_line = if n == 0 {
            lines_or_empty(next(3))
        } else {
            next(3)?
        };
        let mut coeffs = Vec::with_capacity(n);
        for tok in coeff_line.split(' ').filter(|t| !t.is_empty()) {
            let v: u64 = parse_int(tok, 3)?;
            if v >= p {
                return Err(Error::Parse {
                    line: 3,
                    message: format!("coefficient {v} is not reduced modulo {p}"),
                });
            }
            coeffs.push(v);
        }
        if coeffs.len() != n {
            return Err(Error::Parse {
                line: 3,
                message: format!("expected {n} coefficients, found {}", coeffs.len()),
            });
        }
        Ok(DensePoly { field, coeffs })
    }

    /// Renders the text format, newline terminated.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{}\n", self.field.modulus(), self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{c}");
        }
        out.push('\n');
        out
    }
}

fn lines_or_empty(line: Result<&str>) -> &str {
    line.unwrap_or("")
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    let t = s.trim();
    t.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a decimal integer, found `{t}`"),
    })
}

pub(crate) fn schoolbook(fp: &FourierPrime, a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (o, &bj) in out[i..].iter_mut().zip(b) {
            *o = fp.add(*o, fp.mul(ai, bj));
        }
    }
    out
}

pub(crate) fn karatsuba(fp: &FourierPrime, a: &[u64], b: &[u64], threshold: usize) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len().max(b.len());
    if n < threshold || n == 1 {
        return schoolbook(fp, a, b);
    }
    let m = n.div_ceil(2);
    let (a0, a1) = a.split_at(m.min(a.len()));
    let (b0, b1) = b.split_at(m.min(b.len()));

    let z0 = karatsuba(fp, a0, b0, threshold);
    let z2 = karatsuba(fp, a1, b1, threshold);
    let sa = add_padded(fp, a0, a1);
    let sb = add_padded(fp, b0, b1);
    let mut z1 = karatsuba(fp, &sa, &sb, threshold);
    for (i, &v) in z0.iter().enumerate() {
        z1[i] = fp.sub(z1[i], v);
    }
    for (i, &v) in z2.iter().enumerate() {
        z1[i] = fp.sub(z1[i], v);
    }

    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &v) in z0.iter().enumerate() {
        out[i] = fp.add(out[i], v);
    }
    for (i, &v) in z1.iter().enumerate() {
        // z1 may carry zero high terms from padding past the true product length
        if let Some(o) = out.get_mut(m + i) {
            *o = fp.add(*o, v);
        } else {
            debug_assert_eq!(v, 0);
        }
    }
    for (i, &v) in z2.iter().enumerate() {
        out[2 * m + i] = fp.add(out[2 * m + i], v);
    }
    out
}

fn add_padded(fp: &FourierPrime, lo: &[u64], hi: &[u64]) -> Vec<u64> {
    let mut out = lo.to_vec();
    for (o, &h) in out.iter_mut().zip(hi) {
        *o = fp.add(*o, h);
    }
    out
}
