//! Modular DFT, truncated Fourier transform and its inverse.
//!
//! `moddft` works in natural order on both sides. The truncated transforms
//! produce and consume spectral vectors in bit-reversed order: `tft` returns
//! the first `n` entries of the bit-reversed `L`-point spectrum, which is
//! exactly the set of entries a truncated decimation-in-frequency network can
//! produce without computing the rest.
//!
//! Every transform accepts an optional [`OpCounters`] and adds the number of
//! butterflies it executed.

mod decomposition;
mod kernels;
mod table;

use std::sync::atomic::{AtomicU64, Ordering};

pub use decomposition::{Decomposition, BASE_CASES, RADIX_MENU};
pub use table::TwiddleTable;

use crate::error::{Error, Result};
use crate::exec;
use kernels::Kernel;

/// Operation tallies for one call. Counts only ever grow.
#[derive(Debug, Default)]
pub struct OpCounters {
    butterflies: AtomicU64,
    pointwise_muls: AtomicU64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn butterflies(&self) -> u64 {
        self.butterflies.load(Ordering::Relaxed)
    }

    pub fn pointwise_muls(&self) -> u64 {
        self.pointwise_muls.load(Ordering::Relaxed)
    }

    pub(crate) fn add_butterflies(&self, n: u64) {
        self.butterflies.fetch_add(n, Ordering::Relaxed);
    }

    pub(crate) fn add_pointwise(&self, n: u64) {
        self.pointwise_muls.fetch_add(n, Ordering::Relaxed);
    }
}

pub(crate) fn record(counters: Option<&OpCounters>, butterflies: u64) {
    if let Some(c) = counters {
        c.add_butterflies(butterflies);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Execution knobs shared by the transform entry points.
#[derive(Clone, Debug)]
pub struct TransformOpts {
    /// Breakdown to follow; `None` picks [`Decomposition::default_for`].
    /// For `itft` the splits are listed in execution order, innermost first,
    /// i.e. the reverse of the forward breakdown it mirrors.
    pub plan: Option<Decomposition>,
    /// Upper bound on workers for this call; 1 runs serially.
    pub threads: usize,
}

impl Default for TransformOpts {
    fn default() -> Self {
        TransformOpts {
            plan: None,
            threads: 1,
        }
    }
}

impl TransformOpts {
    pub fn with_plan(plan: Decomposition) -> Self {
        TransformOpts {
            plan: Some(plan),
            threads: 1,
        }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    fn forward_path(&self, size: usize) -> Result<Vec<usize>> {
        match &self.plan {
            None => Ok(Decomposition::default_for(size).path()),
            Some(d) if d.size() == size => Ok(d.path()),
            Some(d) => Err(Error::invalid(format!(
                "plan {d} has size {}, transform has size {size}",
                d.size()
            ))),
        }
    }

    /// Tree used by the inverse kernels: the stored execution order, reversed.
    fn inverse_tree(&self, size: usize) -> Result<Decomposition> {
        match &self.plan {
            None => Ok(Decomposition::default_for(size)),
            Some(d) if d.size() == size => Ok(d.reversed()),
            Some(d) => Err(Error::invalid(format!(
                "plan {d} has size {}, transform has size {size}",
                d.size()
            ))),
        }
    }
}

fn check_input(table: &TwiddleTable, x: &[u64]) -> Result<()> {
    table.field().check_all_canonical(x)
}

/// Natural-order modular DFT of length `table.size()` with the default
/// breakdown. The inverse includes the `1/N` scaling.
pub fn moddft(
    x: &[u64],
    table: &TwiddleTable,
    direction: Direction,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    moddft_with(x, table, direction, &TransformOpts::default(), counters)
}

/// [`moddft`] following an explicit breakdown and worker count.
pub fn moddft_with(
    x: &[u64],
    table: &TwiddleTable,
    direction: Direction,
    opts: &TransformOpts,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    let n = table.size();
    if x.len() != n {
        return Err(Error::invalid(format!(
            "input length {} does not match transform size {n}",
            x.len()
        )));
    }
    check_input(table, x)?;
    let path = opts.forward_path(n)?;
    let mut buf = x.to_vec();
    let count = exec::run(opts.threads, |par| {
        let k = Kernel::new(table, par);
        match direction {
            Direction::Forward => {
                let c = k.dif_full(&mut buf, &path);
                bit_reverse_in_place(&mut buf);
                c
            }
            Direction::Inverse => {
                bit_reverse_in_place(&mut buf);
                let c = k.dit_full(&mut buf, &path);
                scale(table, &mut buf, table.inv_size());
                c
            }
        }
    });
    record(counters, count);
    Ok(buf)
}

/// One Cooley-Tukey step `N = n1 * n2`: a radix-`n1` split at the root
/// (spelled with radices from the menu when `n1 > 8`) over the default
/// breakdown of `n2`.
pub fn moddft_ct_step(
    x: &[u64],
    table: &TwiddleTable,
    n1: usize,
    n2: usize,
    direction: Direction,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    let valid = n1 >= 2 && n2 >= 2 && n1.is_power_of_two() && n2.is_power_of_two();
    if !valid || n1.checked_mul(n2) != Some(table.size()) {
        return Err(Error::invalid(format!(
            "{n1} x {n2} is not a factorization of {} into powers of two >= 2",
            table.size()
        )));
    }
    let mut splits = Vec::new();
    let mut rest = n1;
    while rest > 1 {
        let r = if rest.trailing_zeros().is_multiple_of(3) {
            8
        } else {
            1 << (rest.trailing_zeros() % 3)
        };
        splits.push(r);
        rest /= r;
    }
    let tail = Decomposition::default_for(n2);
    splits.extend_from_slice(tail.splits());
    let plan = Decomposition::new(splits, tail.base())?;
    moddft_with(
        x,
        table,
        direction,
        &TransformOpts::with_plan(plan),
        counters,
    )
}

/// Straight-line natural-order DFT for lengths 2, 4 and 8, using the
/// length-`x.len()` root of unity derived from `table`.
pub fn dft_basecase(x: &[u64], table: &TwiddleTable) -> Result<Vec<u64>> {
    let n = x.len();
    if !BASE_CASES.contains(&n) || n > table.size() {
        return Err(Error::invalid(format!(
            "no base case of length {n} for a table of size {}",
            table.size()
        )));
    }
    check_input(table, x)?;
    let fp = table.field();
    Ok(match n {
        2 => vec![fp.add(x[0], x[1]), fp.sub(x[0], x[1])],
        4 => {
            let (w, ws) = table.stage_fwd(2);
            let y = kernels::dif4(fp, [x[0], x[1], x[2], x[3]], w[1], ws[1]);
            vec![y[0], y[2], y[1], y[3]]
        }
        _ => {
            let (w8, w8s) = table.stage_fwd(4);
            let (w4, w4s) = table.stage_fwd(2);
            let tw = kernels::Tw8 {
                w: [w8[1], w8[2], w8[3], w4[1]],
                s: [w8s[1], w8s[2], w8s[3], w4s[1]],
            };
            let y = kernels::dif8(fp, x.try_into().unwrap(), &tw);
            vec![y[0], y[4], y[2], y[6], y[1], y[5], y[3], y[7]]
        }
    })
}

/// `y[rev(j)] = x[j]` with `rev` reversing `log2 N` bits.
pub fn bit_reverse_permute<T: Copy>(x: &[T]) -> Result<Vec<T>> {
    if !x.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "bit reversal needs a power-of-two length, got {}",
            x.len()
        )));
    }
    let mut out = x.to_vec();
    bit_reverse_in_place(&mut out);
    Ok(out)
}

pub(crate) fn bit_reverse_in_place<T>(x: &mut [T]) {
    let n = x.len();
    if n <= 2 {
        return;
    }
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            x.swap(i, j);
        }
    }
}

pub(crate) fn scale(table: &TwiddleTable, x: &mut [u64], by: u64) {
    let fp = table.field();
    let s = fp.shoup(by);
    for v in x.iter_mut() {
        *v = fp.mul_shoup(*v, by, s);
    }
}

/// Truncated forward transform: the first `n` bit-reversed spectral values of
/// the `L`-point DFT of `x` zero-extended to `L = table.size()`.
pub fn tft(
    table: &TwiddleTable,
    x: &[u64],
    n: usize,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    tft_with(table, x, n, &TransformOpts::default(), counters)
}

pub fn tft_with(
    table: &TwiddleTable,
    x: &[u64],
    n: usize,
    opts: &TransformOpts,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    let l = table.size();
    let z = x.len();
    if z == 0 || z > n || n > l {
        return Err(Error::invalid(format!(
            "truncated transform needs 1 <= z <= n <= L, got z={z}, n={n}, L={l}"
        )));
    }
    check_input(table, x)?;
    let path = opts.forward_path(l)?;
    let mut buf = vec![0u64; l];
    buf[..z].copy_from_slice(x);
    let count = exec::run(opts.threads, |par| {
        Kernel::new(table, par).tft_block(&mut buf, &path, z, n)
    });
    record(counters, count);
    buf.truncate(n);
    Ok(buf)
}

/// Inverse truncated transform under the promise that the time-domain
/// coefficients at positions `n..L` are zero. Returns `L` times the first
/// `n` coefficients; callers scale by `table.inv_size()`.
pub fn itft(table: &TwiddleTable, xhat: &[u64], counters: Option<&OpCounters>) -> Result<Vec<u64>> {
    itft_with(table, xhat, &TransformOpts::default(), counters)
}

pub fn itft_with(
    table: &TwiddleTable,
    xhat: &[u64],
    opts: &TransformOpts,
    counters: Option<&OpCounters>,
) -> Result<Vec<u64>> {
    let l = table.size();
    let n = xhat.len();
    if n == 0 || n > l {
        return Err(Error::invalid(format!(
            "inverse truncated transform needs 1 <= n <= L, got n={n}, L={l}"
        )));
    }
    check_input(table, xhat)?;
    let tree = opts.inverse_tree(l)?;
    let mut buf = vec![0u64; l];
    buf[..n].copy_from_slice(xhat);
    let count = exec::run(opts.threads, |par| {
        Kernel::new(table, par).itft_block(&mut buf, &tree, n)
    });
    record(counters, count);
    buf.truncate(n);
    Ok(buf)
}

/// Runs the truncated transform pair directly on a caller buffer. Used by the
/// convolution engines to avoid copies.
pub(crate) fn tft_in_place(
    table: &TwiddleTable,
    buf: &mut [u64],
    path: &[usize],
    z: usize,
    n: usize,
    par: bool,
) -> u64 {
    Kernel::new(table, par).tft_block(buf, path, z, n)
}

pub(crate) fn itft_in_place(
    table: &TwiddleTable,
    buf: &mut [u64],
    tree: &Decomposition,
    n: usize,
    par: bool,
) -> u64 {
    Kernel::new(table, par).itft_block(buf, tree, n)
}

pub(crate) fn dif_in_place(
    table: &TwiddleTable,
    buf: &mut [u64],
    path: &[usize],
    par: bool,
) -> u64 {
    Kernel::new(table, par).dif_full(buf, path)
}

pub(crate) fn dit_in_place(
    table: &TwiddleTable,
    buf: &mut [u64],
    path: &[usize],
    par: bool,
) -> u64 {
    Kernel::new(table, par).dit_full(buf, path)
}
