//! In-place butterfly networks.
//!
//! Forward kernels are decimation-in-frequency: natural-order input,
//! bit-reversed output. Inverse kernels are the mirror image
//! (bit-reversed input, natural-order output) and do not divide by the
//! length. Every kernel returns the number of butterflies it executed.

use rayon::prelude::*;

use super::decomposition::Decomposition;
use super::table::TwiddleTable;
use crate::modfield::FourierPrime;

/// Blocks at least this long are split across workers.
const PAR_MIN: usize = 1 << 12;
const PAR_SEG: usize = 1 << 10;

pub(crate) struct Kernel<'a> {
    table: &'a TwiddleTable,
    fp: FourierPrime,
    par: bool,
    half: u64,
    half_shoup: u64,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(table: &'a TwiddleTable, par: bool) -> Self {
        let fp = *table.field();
        let half = fp.inv(2).expect("p is odd");
        Kernel {
            table,
            fp,
            par,
            half,
            half_shoup: fp.shoup(half),
        }
    }

    /// Runs `f(top[u], bottom[u], w[u], w_shoup[u])` for every `u`, split into
    /// segments when the range is long.
    #[inline]
    fn pairs<F>(&self, top: &mut [u64], bot: &mut [u64], tw: &[u64], tws: &[u64], f: F)
    where
        F: Fn(&mut u64, &mut u64, u64, u64) + Sync + Send,
    {
        debug_assert!(bot.len() >= top.len() && tw.len() >= top.len() && tws.len() >= top.len());
        if self.par && top.len() >= PAR_MIN {
            top.par_chunks_mut(PAR_SEG)
                .zip(bot.par_chunks_mut(PAR_SEG))
                .zip(tw.par_chunks(PAR_SEG).zip(tws.par_chunks(PAR_SEG)))
                .for_each(|((t, b), (w, ws))| serial_pairs(t, b, w, ws, &f));
        } else {
            serial_pairs(top, bot, tw, tws, &f);
        }
    }

    /// Applies `f` to each `group`-sized chunk, in parallel when worthwhile.
    fn each_group<F>(&self, buf: &mut [u64], group: usize, f: F)
    where
        F: Fn(&mut [u64]) + Sync + Send,
    {
        if self.par && buf.len() >= PAR_MIN && group < buf.len() {
            buf.par_chunks_exact_mut(group).for_each(f);
        } else {
            buf.chunks_exact_mut(group).for_each(f);
        }
    }

    // ---- full forward ------------------------------------------------------

    /// One forward stage over every `group`-sized block of `buf`.
    fn dif_stage(&self, buf: &mut [u64], group: usize) -> u64 {
        let h = group / 2;
        let (tw, tws) = self.table.stage_fwd(h);
        let fp = self.fp;
        let p = fp.modulus();
        let single = group == buf.len();
        let run = |chunk: &mut [u64], par_inner: bool| {
            let (top, bot) = chunk.split_at_mut(h);
            let body = |x: &mut u64, y: &mut u64, w: u64, ws: u64| {
                let (a, b) = (*x, *y);
                *x = fp.add(a, b);
                *y = fp.mul_shoup(a + p - b, w, ws);
            };
            if par_inner {
                self.pairs(top, bot, tw, tws, body);
            } else {
                serial_pairs(top, bot, tw, tws, &body);
            }
        };
        if single {
            run(buf, self.par);
        } else {
            self.each_group(buf, group, |c| run(c, false));
        }
        (buf.len() / 2) as u64
    }

    /// Full forward transform of `buf` (natural in, bit-reversed out) following
    /// `path` (radices root first, base last).
    pub(crate) fn dif_full(&self, buf: &mut [u64], path: &[usize]) -> u64 {
        let n = buf.len();
        // a lone codelet size may cover several consecutive blocks
        debug_assert!(
            path.iter().product::<usize>() == n || (path.len() == 1 && n.is_multiple_of(path[0]))
        );
        if n <= 1 {
            return 0;
        }
        if path.len() == 1 {
            return self.dif_codelets(buf, path[0]);
        }
        let r = path[0];
        let m = n / r;
        let mut count = 0;
        let mut group = n;
        while group > m {
            count += self.dif_stage(buf, group);
            group /= 2;
        }
        count + self.sub_blocks(buf, &path[1..], |k, c, rest| k.dif_full(c, rest))
    }

    /// Recurses into the sub-blocks described by `rest`; when only the base
    /// codelet is left, all sub-blocks are handled in one sweep.
    fn sub_blocks<F>(&self, buf: &mut [u64], rest: &[usize], f: F) -> u64
    where
        F: Fn(&Kernel<'a>, &mut [u64], &[usize]) -> u64 + Sync + Send,
    {
        let m: usize = rest.iter().product();
        if rest.len() == 1 {
            return f(self, buf, rest);
        }
        let f = |c: &mut [u64]| f(self, c, rest);
        if self.par && buf.len() >= PAR_MIN {
            buf.par_chunks_mut(m).map(f).sum()
        } else {
            buf.chunks_mut(m).map(f).sum()
        }
    }

    /// Straight-line forward codelets of size `b` over every `b`-chunk.
    fn dif_codelets(&self, buf: &mut [u64], b: usize) -> u64 {
        let fp = self.fp;
        match b {
            1 => return 0,
            2 => self.each_group(buf, 2, |c| {
                let (x0, x1) = (c[0], c[1]);
                c[0] = fp.add(x0, x1);
                c[1] = fp.sub(x0, x1);
            }),
            4 => {
                let (w, ws) = self.table.stage_fwd(2);
                let (w1, w1s) = (w[1], ws[1]);
                self.each_group(buf, 4, |c| {
                    let out = dif4(&fp, [c[0], c[1], c[2], c[3]], w1, w1s);
                    c.copy_from_slice(&out);
                });
            }
            8 => {
                let (w8, w8s) = self.table.stage_fwd(4);
                let (w4, w4s) = self.table.stage_fwd(2);
                let tw = Tw8 {
                    w: [w8[1], w8[2], w8[3], w4[1]],
                    s: [w8s[1], w8s[2], w8s[3], w4s[1]],
                };
                self.each_group(buf, 8, |c| {
                    let v: [u64; 8] = c.try_into().unwrap();
                    c.copy_from_slice(&dif8(&fp, v, &tw));
                });
            }
            _ => unreachable!("unsupported codelet size {b}"),
        }
        (buf.len() / 2) as u64 * b.trailing_zeros() as u64
    }

    // ---- full inverse ------------------------------------------------------

    fn dit_stage(&self, buf: &mut [u64], group: usize) -> u64 {
        let h = group / 2;
        let (tw, tws) = self.table.stage_inv(h);
        let fp = self.fp;
        let single = group == buf.len();
        let run = |chunk: &mut [u64], par_inner: bool| {
            let (top, bot) = chunk.split_at_mut(h);
            let body = |x: &mut u64, y: &mut u64, w: u64, ws: u64| {
                let t = fp.mul_shoup(*y, w, ws);
                let a = *x;
                *x = fp.add(a, t);
                *y = fp.sub(a, t);
            };
            if par_inner {
                self.pairs(top, bot, tw, tws, body);
            } else {
                serial_pairs(top, bot, tw, tws, &body);
            }
        };
        if single {
            run(buf, self.par);
        } else {
            self.each_group(buf, group, |c| run(c, false));
        }
        (buf.len() / 2) as u64
    }

    /// Unscaled inverse of [`dif_full`](Self::dif_full) for the same path:
    /// the result is `n` times the original input.
    pub(crate) fn dit_full(&self, buf: &mut [u64], path: &[usize]) -> u64 {
        let n = buf.len();
        // a lone codelet size may cover several consecutive blocks
        debug_assert!(
            path.iter().product::<usize>() == n || (path.len() == 1 && n.is_multiple_of(path[0]))
        );
        if n <= 1 {
            return 0;
        }
        if path.len() == 1 {
            return self.dit_codelets(buf, path[0]);
        }
        let r = path[0];
        let m = n / r;
        let mut count = self.sub_blocks(buf, &path[1..], |k, c, rest| k.dit_full(c, rest));
        let mut group = 2 * m;
        while group <= n {
            count += self.dit_stage(buf, group);
            group *= 2;
        }
        count
    }

    fn dit_codelets(&self, buf: &mut [u64], b: usize) -> u64 {
        let fp = self.fp;
        match b {
            1 => return 0,
            2 => self.each_group(buf, 2, |c| {
                let (x0, x1) = (c[0], c[1]);
                c[0] = fp.add(x0, x1);
                c[1] = fp.sub(x0, x1);
            }),
            4 => {
                let (w, ws) = self.table.stage_inv(2);
                let (w1, w1s) = (w[1], ws[1]);
                self.each_group(buf, 4, |c| {
                    let out = dit4(&fp, [c[0], c[1], c[2], c[3]], w1, w1s);
                    c.copy_from_slice(&out);
                });
            }
            8 => {
                let (w8, w8s) = self.table.stage_inv(4);
                let (w4, w4s) = self.table.stage_inv(2);
                let tw = Tw8 {
                    w: [w8[1], w8[2], w8[3], w4[1]],
                    s: [w8s[1], w8s[2], w8s[3], w4s[1]],
                };
                self.each_group(buf, 8, |c| {
                    let v: [u64; 8] = c.try_into().unwrap();
                    c.copy_from_slice(&dit8(&fp, v, &tw));
                });
            }
            _ => unreachable!("unsupported codelet size {b}"),
        }
        (buf.len() / 2) as u64 * b.trailing_zeros() as u64
    }

    // ---- truncated forward -------------------------------------------------

    /// Truncated forward transform of one block.
    ///
    /// Entries at positions `>= z` are zero on entry; only output positions
    /// `< n` are produced (bit-reversed order). Butterflies whose inputs are
    /// both zero or whose outputs are all discarded are skipped.
    pub(crate) fn tft_block(&self, buf: &mut [u64], path: &[usize], z: usize, n: usize) -> u64 {
        let len = buf.len();
        if n == 0 || z == 0 || len == 1 {
            return 0;
        }
        if z >= len && n >= len {
            return self.dif_full(buf, path);
        }
        let r = path[0];
        let m = len / r;
        let mut count = 0;
        let mut group = len;
        while group > m {
            count += self.tft_stage(buf, group, z, n);
            group /= 2;
        }
        if m == 1 {
            return count;
        }
        let needed = n.div_ceil(m);
        let zc = z.min(m);
        let rest = &path[1..];
        let sub =
            |(c, chunk): (usize, &mut [u64])| self.tft_block(chunk, rest, zc, (n - c * m).min(m));
        count
            + if self.par && len >= PAR_MIN {
                buf.par_chunks_mut(m)
                    .take(needed)
                    .enumerate()
                    .map(sub)
                    .sum::<u64>()
            } else {
                buf.chunks_mut(m)
                    .take(needed)
                    .enumerate()
                    .map(sub)
                    .sum::<u64>()
            }
    }

    fn tft_stage(&self, buf: &mut [u64], group: usize, z: usize, n: usize) -> u64 {
        let h = group / 2;
        let (tw, tws) = self.table.stage_fwd(h);
        let fp = self.fp;
        let p = fp.modulus();
        // nonzero extent of every group at this stage
        let extent = z.min(group);
        let full = extent.saturating_sub(h);
        let live = extent.min(h);
        let mut count = 0u64;
        for (idx, chunk) in buf.chunks_mut(group).enumerate() {
            let start = idx * group;
            if start >= n {
                break;
            }
            let (top, bot) = chunk.split_at_mut(h);
            if start + h < n {
                self.pairs(
                    &mut top[..full],
                    &mut bot[..full],
                    tw,
                    tws,
                    |x, y, w, ws| {
                        let (a, b) = (*x, *y);
                        *x = fp.add(a, b);
                        *y = fp.mul_shoup(a + p - b, w, ws);
                    },
                );
                // bottom input is zero: top keeps its value, bottom is a twiddled copy
                self.pairs(
                    &mut top[full..live],
                    &mut bot[full..live],
                    &tw[full..live],
                    &tws[full..live],
                    |x, y, w, ws| *y = fp.mul_shoup(*x, w, ws),
                );
                count += live as u64;
            } else {
                self.pairs(&mut top[..full], &mut bot[..full], tw, tws, |x, y, _, _| {
                    *x = fp.add(*x, *y);
                });
                count += full as u64;
            }
        }
        count
    }

    // ---- truncated inverse -------------------------------------------------

    /// Truncated inverse of one block of size `L = buf.len()`.
    ///
    /// On entry positions `< n` hold bit-reversed spectral values and
    /// positions `>= n` hold `L` times the known time-domain values. On exit
    /// positions `< n` hold `L` times the time-domain values.
    pub(crate) fn itft_block(&self, buf: &mut [u64], plan: &Decomposition, n: usize) -> u64 {
        let len = buf.len();
        if n == 0 {
            return 0;
        }
        if n == len {
            return self.dit_full(buf, &plan.for_size(len).path());
        }
        let h = len / 2;
        let fp = self.fp;
        let p = fp.modulus();
        let (tw, tws) = self.table.stage_fwd(h);
        let (itw, itws) = self.table.stage_inv(h);
        let (top, bot) = buf.split_at_mut(h);
        let mut count = 0u64;
        if n >= h {
            count += self.dit_full(top, &plan.for_size(h).path());
            let k = n - h;
            if k > 0 {
                self.pairs(
                    &mut top[k..],
                    &mut bot[k..],
                    &tw[k..],
                    &tws[k..],
                    |x, y, w, ws| {
                        let (t, u) = (*x, *y);
                        *y = fp.mul_shoup(t + p - u, w, ws);
                        *x = fp.sub(fp.add(t, t), u);
                    },
                );
            } else {
                self.pairs(top, bot, tw, tws, |x, y, _, _| {
                    let t = *x;
                    *x = fp.sub(fp.add(t, t), *y);
                });
            }
            count += (h - k) as u64;
            count += self.itft_block(bot, plan, k);
            self.pairs(&mut top[..k], &mut bot[..k], itw, itws, |x, y, w, ws| {
                let t = fp.mul_shoup(*y, w, ws);
                let a = *x;
                *x = fp.add(a, t);
                *y = fp.sub(a, t);
            });
            count += k as u64;
        } else {
            let (half, half_s) = (self.half, self.half_shoup);
            self.pairs(&mut top[n..], &mut bot[n..], tw, tws, |x, y, _, _| {
                *x = fp.mul_shoup(*x + *y, half, half_s);
            });
            count += (h - n) as u64;
            count += self.itft_block(top, plan, n);
            self.pairs(&mut top[..n], &mut bot[..n], tw, tws, |x, y, _, _| {
                let t = *x;
                *x = fp.sub(fp.add(t, t), *y);
            });
            count += n as u64;
        }
        count
    }
}

#[inline(always)]
fn serial_pairs<F>(top: &mut [u64], bot: &mut [u64], tw: &[u64], tws: &[u64], f: &F)
where
    F: Fn(&mut u64, &mut u64, u64, u64),
{
    for (((x, y), &w), &ws) in top.iter_mut().zip(bot.iter_mut()).zip(tw).zip(tws) {
        f(x, y, w, ws);
    }
}

/// Twiddles of the size-8 codelet: `w8^1, w8^2, w8^3, w4^1` and quotients.
pub(crate) struct Tw8 {
    pub(crate) w: [u64; 4],
    pub(crate) s: [u64; 4],
}

#[inline(always)]
fn bf_dif(fp: &FourierPrime, a: u64, b: u64) -> (u64, u64) {
    (fp.add(a, b), fp.sub(a, b))
}

#[inline(always)]
fn bf_dif_tw(fp: &FourierPrime, a: u64, b: u64, w: u64, ws: u64) -> (u64, u64) {
    (fp.add(a, b), fp.mul_shoup(a + fp.modulus() - b, w, ws))
}

#[inline(always)]
fn bf_dit_tw(fp: &FourierPrime, a: u64, b: u64, w: u64, ws: u64) -> (u64, u64) {
    let t = fp.mul_shoup(b, w, ws);
    (fp.add(a, t), fp.sub(a, t))
}

/// Size-4 forward codelet, bit-reversed output.
#[inline(always)]
pub(crate) fn dif4(fp: &FourierPrime, x: [u64; 4], w1: u64, w1s: u64) -> [u64; 4] {
    let (a0, a2) = bf_dif(fp, x[0], x[2]);
    let (a1, a3) = bf_dif_tw(fp, x[1], x[3], w1, w1s);
    let (y0, y1) = bf_dif(fp, a0, a1);
    let (y2, y3) = bf_dif(fp, a2, a3);
    [y0, y1, y2, y3]
}

#[inline(always)]
pub(crate) fn dit4(fp: &FourierPrime, x: [u64; 4], w1: u64, w1s: u64) -> [u64; 4] {
    let (a0, a1) = bf_dif(fp, x[0], x[1]);
    let (a2, a3) = bf_dif(fp, x[2], x[3]);
    let (y0, y2) = bf_dif(fp, a0, a2);
    let (y1, y3) = bf_dit_tw(fp, a1, a3, w1, w1s);
    [y0, y1, y2, y3]
}

/// Size-8 forward codelet, bit-reversed output.
#[inline(always)]
pub(crate) fn dif8(fp: &FourierPrime, x: [u64; 8], t: &Tw8) -> [u64; 8] {
    let (a0, a4) = bf_dif(fp, x[0], x[4]);
    let (a1, a5) = bf_dif_tw(fp, x[1], x[5], t.w[0], t.s[0]);
    let (a2, a6) = bf_dif_tw(fp, x[2], x[6], t.w[1], t.s[1]);
    let (a3, a7) = bf_dif_tw(fp, x[3], x[7], t.w[2], t.s[2]);

    let (b0, b2) = bf_dif(fp, a0, a2);
    let (b1, b3) = bf_dif_tw(fp, a1, a3, t.w[3], t.s[3]);
    let (b4, b6) = bf_dif(fp, a4, a6);
    let (b5, b7) = bf_dif_tw(fp, a5, a7, t.w[3], t.s[3]);

    let (y0, y1) = bf_dif(fp, b0, b1);
    let (y2, y3) = bf_dif(fp, b2, b3);
    let (y4, y5) = bf_dif(fp, b4, b5);
    let (y6, y7) = bf_dif(fp, b6, b7);
    [y0, y1, y2, y3, y4, y5, y6, y7]
}

/// Size-8 inverse codelet (bit-reversed in, natural out, unscaled). `t`
/// holds the inverse twiddles.
#[inline(always)]
pub(crate) fn dit8(fp: &FourierPrime, x: [u64; 8], t: &Tw8) -> [u64; 8] {
    let (a0, a1) = bf_dif(fp, x[0], x[1]);
    let (a2, a3) = bf_dif(fp, x[2], x[3]);
    let (a4, a5) = bf_dif(fp, x[4], x[5]);
    let (a6, a7) = bf_dif(fp, x[6], x[7]);

    let (b0, b2) = bf_dif(fp, a0, a2);
    let (b1, b3) = bf_dit_tw(fp, a1, a3, t.w[3], t.s[3]);
    let (b4, b6) = bf_dif(fp, a4, a6);
    let (b5, b7) = bf_dit_tw(fp, a5, a7, t.w[3], t.s[3]);

    let (y0, y4) = bf_dif(fp, b0, b4);
    let (y1, y5) = bf_dit_tw(fp, b1, b5, t.w[0], t.s[0]);
    let (y2, y6) = bf_dit_tw(fp, b2, b6, t.w[1], t.s[1]);
    let (y3, y7) = bf_dit_tw(fp, b3, b7, t.w[2], t.s[2]);
    [y0, y1, y2, y3, y4, y5, y6, y7]
}
