//! Convolution engines and the polynomial multiply dispatcher.
//!
//! All vector-level functions take canonical residues and return canonical
//! residues. Linear convolutions of lengths `M` and `N` have length
//! `M + N - 1`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec;
use crate::modfield::FourierPrime;
use crate::planner::{PlanChoice, Planner};
use crate::polyring::{self, DensePoly, DEFAULT_KARATSUBA_THRESHOLD};
use crate::transform::{self, Decomposition, OpCounters, TwiddleTable};

const PAR_POINTWISE: usize = 1 << 13;

/// Multiplication strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Schoolbook product, the reference.
    Definition,
    /// Zero-pad to a power of two and run a full cyclic convolution.
    FftPad,
    /// Truncated transforms sized to the exact output length.
    Tft,
    /// Zero-pad, then split the cyclic product into a cyclic and a
    /// negacyclic half.
    Split,
    /// Pick per size from the planner.
    Auto,
}

impl Engine {
    pub const ALL: [Engine; 5] = [
        Engine::Definition,
        Engine::FftPad,
        Engine::Tft,
        Engine::Split,
        Engine::Auto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Definition => "definition",
            Engine::FftPad => "fft_pad",
            Engine::Tft => "tft",
            Engine::Split => "split",
            Engine::Auto => "auto",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown engine `{s}`")))
    }
}

/// Everything an engine invocation needs besides its operands.
#[derive(Clone)]
pub struct ConvRequest<'a> {
    pub field: FourierPrime,
    pub engine: Engine,
    pub threads: usize,
    pub counters: Option<&'a OpCounters>,
    /// Consulted by `auto`, and for decompositions by the transform engines.
    pub planner: Option<&'a Planner>,
    /// Explicit truncated-transform plans `(forward, inverse)`; the inverse
    /// is in execution order. Overrides the planner.
    pub tft_plans: Option<(Decomposition, Decomposition)>,
}

impl<'a> ConvRequest<'a> {
    pub fn new(field: FourierPrime, engine: Engine) -> Self {
        ConvRequest {
            field,
            engine,
            threads: 1,
            counters: None,
            planner: None,
            tft_plans: None,
        }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn counters(mut self, counters: &'a OpCounters) -> Self {
        self.counters = Some(counters);
        self
    }

    pub fn planner(mut self, planner: &'a Planner) -> Self {
        self.planner = Some(planner);
        self
    }

    pub fn tft_plans(mut self, forward: Decomposition, inverse: Decomposition) -> Self {
        self.tft_plans = Some((forward, inverse));
        self
    }

    fn record(&self, butterflies: u64, pointwise: u64) {
        if let Some(c) = self.counters {
            c.add_butterflies(butterflies);
            c.add_pointwise(pointwise);
        }
    }

    fn dft_path(&self, len: usize) -> Result<Vec<usize>> {
        match self.planner {
            Some(pl) => Ok(pl.dft_plan(self.field.modulus(), len, self.threads)?.path()),
            None => Ok(Decomposition::default_for(len).path()),
        }
    }

    fn tft_pair(&self, len: usize) -> Result<(Decomposition, Decomposition)> {
        if let Some((f, i)) = &self.tft_plans {
            if f.size() != len || i.size() != len {
                return Err(Error::invalid(format!(
                    "truncated transform plans of sizes {} and {} do not fit length {len}",
                    f.size(),
                    i.size()
                )));
            }
            return Ok((f.clone(), i.clone()));
        }
        let fwd = match self.planner {
            Some(pl) => pl.tft_plan(self.field.modulus(), len, self.threads)?,
            None => Decomposition::default_for(len),
        };
        let inv = fwd.reversed();
        Ok((fwd, inv))
    }
}

fn check_operands(fp: &FourierPrime, u: &[u64], v: &[u64]) -> Result<()> {
    fp.check_all_canonical(u)?;
    fp.check_all_canonical(v)
}

fn check_equal_len(u: &[u64], v: &[u64]) -> Result<usize> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "operand lengths differ: {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(u.len())
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "length {n} is not a positive power of two"
        )));
    }
    Ok(())
}

/// `(u * v)_i = sum_k u_k v_{(i - k) mod N}`, computed directly.
pub fn circ_conv_def(field: &FourierPrime, u: &[u64], v: &[u64]) -> Result<Vec<u64>> {
    let n = check_equal_len(u, v)?;
    check_operands(field, u, v)?;
    let mut out = vec![0u64; n];
    for (k, &a) in u.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for (j, &b) in v.iter().enumerate() {
            let i = (k + j) % n;
            out[i] = field.add(out[i], field.mul(a, b));
        }
    }
    Ok(out)
}

/// Linear convolution computed directly.
pub fn lin_conv_def(field: &FourierPrime, u: &[u64], v: &[u64]) -> Result<Vec<u64>> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::invalid("linear convolution of an empty vector"));
    }
    check_operands(field, u, v)?;
    Ok(polyring::schoolbook(field, u, v))
}

fn pointwise(fp: &FourierPrime, a: &mut [u64], b: &[u64], par: bool) {
    let body = |(x, &y): (&mut u64, &u64)| *x = fp.mul(*x, y);
    if par && a.len() >= PAR_POINTWISE {
        a.par_iter_mut().zip(b.par_iter()).for_each(body);
    } else {
        a.iter_mut().zip(b.iter()).for_each(body);
    }
}

/// Cyclic convolution of two equal power-of-two-length buffers, result in `a`.
fn cyclic_in_place(req: &ConvRequest, a: &mut [u64], mut b: Vec<u64>) -> Result<()> {
    let n = a.len();
    let fp = req.field;
    fp.check_transform_len(n)?;
    let table = TwiddleTable::shared(fp, n)?;
    let path = req.dft_path(n)?;
    let t = &*table;
    let butterflies = exec::run(req.threads, |par| {
        let (ca, cb) = exec::join(
            par,
            || transform::dif_in_place(t, a, &path, par),
            || transform::dif_in_place(t, &mut b, &path, par),
        );
        pointwise(&fp, a, &b, par);
        let ci = transform::dit_in_place(t, a, &path, par);
        transform::scale(t, a, t.inv_size());
        ca + cb + ci
    });
    req.record(butterflies, n as u64);
    Ok(())
}

/// Cyclic convolution through two forward transforms, a pointwise product
/// and one inverse transform.
pub fn circ_conv_fft(u: &[u64], v: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    let n = check_equal_len(u, v)?;
    check_pow2(n)?;
    check_operands(&req.field, u, v)?;
    let mut a = u.to_vec();
    cyclic_in_place(req, &mut a, v.to_vec())?;
    Ok(a)
}

/// Linear convolution by zero-padding both operands to the next power of two
/// at or above `M + N - 1`.
pub fn lin_conv_fft_pad(u: &[u64], v: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::invalid("linear convolution of an empty vector"));
    }
    check_operands(&req.field, u, v)?;
    let out_len = u.len() + v.len() - 1;
    let l = out_len.next_power_of_two();
    req.field.check_transform_len(l)?;
    let mut a = u.to_vec();
    a.resize(l, 0);
    let mut b = v.to_vec();
    b.resize(l, 0);
    cyclic_in_place(req, &mut a, b)?;
    a.truncate(out_len);
    Ok(a)
}

/// Product modulo `x^N + 1` by twisting with a principal `2N`-th root of
/// unity `psi`, cyclic convolution, and untwisting by `psi^-i`.
pub fn nega_conv(u: &[u64], v: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    let n = check_equal_len(u, v)?;
    check_pow2(n)?;
    check_operands(&req.field, u, v)?;
    let fp = req.field;
    fp.check_transform_len(2 * n)?;
    let psi = fp.root_of_unity(2 * n)?;
    let psi_inv = fp.inv(psi)?;
    let mut a = u.to_vec();
    let mut b = v.to_vec();
    let mut w = 1 % fp.modulus();
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        *x = fp.mul(*x, w);
        *y = fp.mul(*y, w);
        w = fp.mul(w, psi);
    }
    cyclic_in_place(req, &mut a, b)?;
    let mut w = 1 % fp.modulus();
    for x in a.iter_mut() {
        *x = fp.mul(*x, w);
        w = fp.mul(w, psi_inv);
    }
    Ok(a)
}

/// Residues of `u` (length `2n`) modulo `x^n - 1` and `x^n + 1`.
pub fn split_residues(field: &FourierPrime, u: &[u64]) -> Result<(Vec<u64>, Vec<u64>)> {
    if !u.len().is_multiple_of(2) {
        return Err(Error::invalid(format!("length {} is odd", u.len())));
    }
    field.check_all_canonical(u)?;
    let (lo, hi) = u.split_at(u.len() / 2);
    let cyc = lo.iter().zip(hi).map(|(&a, &b)| field.add(a, b)).collect();
    let neg = lo.iter().zip(hi).map(|(&a, &b)| field.sub(a, b)).collect();
    Ok((cyc, neg))
}

/// Inverse of [`split_residues`]: the unique length-`2n` vector with the
/// given residues modulo `x^n - 1` and `x^n + 1`.
pub fn recombine_residues(field: &FourierPrime, cyc: &[u64], neg: &[u64]) -> Result<Vec<u64>> {
    let n = check_equal_len(cyc, neg)?;
    check_operands(field, cyc, neg)?;
    let half = field.inv(2 % field.modulus())?;
    let mut out = vec![0u64; 2 * n];
    for j in 0..n {
        out[j] = field.mul(field.add(cyc[j], neg[j]), half);
        out[j + n] = field.mul(field.sub(cyc[j], neg[j]), half);
    }
    Ok(out)
}

/// Cyclic convolution of length `2n` computed as one cyclic and one
/// negacyclic convolution of length `n`.
pub fn circ_conv_split(u: &[u64], v: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    let len = check_equal_len(u, v)?;
    check_pow2(len)?;
    if len < 2 {
        return Err(Error::invalid("split convolution needs length at least 2"));
    }
    let fp = req.field;
    let (ua, ub) = split_residues(&fp, u)?;
    let (va, vb) = split_residues(&fp, v)?;
    let ca = circ_conv_fft(&ua, &va, req)?;
    let cb = nega_conv(&ub, &vb, req)?;
    recombine_residues(&fp, &ca, &cb)
}

/// Linear convolution through truncated transforms of size `L`, the smallest
/// power of two at or above `n = z1 + z2 - 1`, with exactly `n` pointwise
/// products.
pub fn conv_tft(g: &[u64], h: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    if g.is_empty() || h.is_empty() {
        return Err(Error::invalid("linear convolution of an empty vector"));
    }
    let fp = req.field;
    check_operands(&fp, g, h)?;
    let n = g.len() + h.len() - 1;
    let l = n.next_power_of_two();
    fp.check_transform_len(l)?;
    let table = TwiddleTable::shared(fp, l)?;
    let (fwd, inv) = req.tft_pair(l)?;
    let path = fwd.path();
    let tree = inv.reversed();
    let mut a = vec![0u64; l];
    a[..g.len()].copy_from_slice(g);
    let mut b = vec![0u64; l];
    b[..h.len()].copy_from_slice(h);
    let t = &*table;
    let (z1, z2) = (g.len(), h.len());
    let butterflies = exec::run(req.threads, |par| {
        let (ca, cb) = exec::join(
            par,
            || transform::tft_in_place(t, &mut a, &path, z1, n, par),
            || transform::tft_in_place(t, &mut b, &path, z2, n, par),
        );
        pointwise(&fp, &mut a[..n], &b[..n], par);
        a[n..].fill(0);
        let ci = transform::itft_in_place(t, &mut a, &tree, n, par);
        ca + cb + ci
    });
    req.record(butterflies, n as u64);
    a.truncate(n);
    transform::scale(t, &mut a, t.inv_size());
    Ok(a)
}

/// Linear convolution through [`circ_conv_split`] on zero-padded operands.
pub fn lin_conv_split(u: &[u64], v: &[u64], req: &ConvRequest) -> Result<Vec<u64>> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::invalid("linear convolution of an empty vector"));
    }
    let out_len = u.len() + v.len() - 1;
    let l = out_len.next_power_of_two().max(2);
    let mut a = u.to_vec();
    a.resize(l, 0);
    let mut b = v.to_vec();
    b.resize(l, 0);
    let mut c = circ_conv_split(&a, &b, req)?;
    c.truncate(out_len);
    Ok(c)
}

/// Product of two polynomials with the requested engine. The result is
/// normalized; every engine returns the same polynomial.
pub fn poly_mul(a: &DensePoly, b: &DensePoly, req: &ConvRequest) -> Result<DensePoly> {
    let fp = *a.field();
    if fp != *b.field() {
        return Err(Error::ModulusMismatch {
            left: fp.modulus(),
            right: b.field().modulus(),
        });
    }
    if fp != req.field {
        return Err(Error::ModulusMismatch {
            left: fp.modulus(),
            right: req.field.modulus(),
        });
    }
    let (a, b) = (a.normalize(), b.normalize());
    if a.is_zero() || b.is_zero() {
        return Ok(DensePoly::zero(fp));
    }
    let (u, v) = (a.coeffs(), b.coeffs());
    let coeffs = match req.engine {
        Engine::Definition => lin_conv_def(&fp, u, v)?,
        Engine::FftPad => lin_conv_fft_pad(u, v, req)?,
        Engine::Tft => conv_tft(u, v, req)?,
        Engine::Split => lin_conv_split(u, v, req)?,
        Engine::Auto => {
            let planner = req
                .planner
                .ok_or_else(|| Error::invalid("engine `auto` needs a plan store"))?;
            let l = (u.len() + v.len() - 1).next_power_of_two();
            if fp.check_transform_len(l).is_err() {
                return Ok(DensePoly::from_raw(
                    fp,
                    polyring::karatsuba(&fp, u, v, DEFAULT_KARATSUBA_THRESHOLD),
                ));
            }
            match planner.conv_choice(fp.modulus(), l, req.threads)? {
                PlanChoice::Direct => polyring::karatsuba(&fp, u, v, DEFAULT_KARATSUBA_THRESHOLD),
                PlanChoice::Transform(d) => {
                    let inv = d.reversed();
                    let sub = ConvRequest {
                        tft_plans: Some((d, inv)),
                        ..req.clone()
                    };
                    conv_tft(u, v, &sub)?
                }
            }
        }
    };
    let mut out = DensePoly::from_raw(fp, coeffs);
    out.normalize_in_place();
    Ok(out)
}
