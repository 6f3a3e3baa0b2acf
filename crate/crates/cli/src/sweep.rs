//! Timing sweeps over product lengths.
//!
//! For a product length `n` the operands have lengths `z1 = ceil((n + 1) / 2)`
//! and `z2 = n + 1 - z1`, so `z1 + z2 - 1 = n`.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modconv::{poly_mul, ConvRequest, DensePoly, Engine, Error, FourierPrime, OpCounters, Planner};

pub const CSV_HEADER: &str = "n,engine,threads,nanos_median,nanos_mean,butterflies,pointwise_muls";

/// Value written to every numeric column of a row whose size the prime
/// cannot handle.
pub const SENTINEL: i64 = -1;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub step: usize,
    pub engines: Vec<Engine>,
    pub field: FourierPrime,
    pub threads: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub median: u64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub engine: Engine,
    pub threads: usize,
    /// `None` when the size is unsupported.
    pub timing: Option<Timing>,
    pub butterflies: u64,
    pub pointwise_muls: u64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        match self.timing {
            Some(t) => format!(
                "{},{},{},{},{:.1},{},{}",
                self.n,
                self.engine,
                self.threads,
                t.median,
                t.mean,
                self.butterflies,
                self.pointwise_muls
            ),
            None => format!(
                "{},{},{},{SENTINEL},{SENTINEL},{SENTINEL},{SENTINEL}",
                self.n, self.engine, self.threads
            ),
        }
    }
}

/// Operand lengths for product length `n`.
pub fn operand_lengths(n: usize) -> (usize, usize) {
    let z1 = (n + 1).div_ceil(2);
    (z1, n + 1 - z1)
}

/// Random operands with nonzero leading coefficients.
pub fn operands(field: &FourierPrime, n: usize, seed: u64) -> (DensePoly, DensePoly) {
    let (z1, z2) = operand_lengths(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let p = field.modulus();
    let mut draw = |len: usize| {
        let mut c: Vec<u64> = (0..len).map(|_| rng.gen_range(0..p)).collect();
        c[len - 1] = rng.gen_range(1..p);
        DensePoly::from_reduced(*field, c)
    };
    let a = draw(z1);
    let b = draw(z2);
    (a, b)
}

/// Measures one `(n, engine)` cell: counters from one instrumented run,
/// then `reps` individually timed runs.
pub fn measure(
    cfg: &SweepConfig,
    n: usize,
    engine: Engine,
    planner: Option<&Planner>,
) -> Result<SweepRow, Error> {
    let (a, b) = operands(&cfg.field, n, cfg.seed);
    let mut req = ConvRequest::new(cfg.field, engine).threads(cfg.threads);
    if let Some(pl) = planner {
        req = req.planner(pl);
    }
    let counters = OpCounters::new();
    let counted = ConvRequest {
        counters: Some(&counters),
        ..req.clone()
    };
    let unsupported = SweepRow {
        n,
        engine,
        threads: cfg.threads,
        timing: None,
        butterflies: 0,
        pointwise_muls: 0,
    };
    match poly_mul(&a, &b, &counted) {
        Ok(_) => {}
        Err(Error::UnsupportedSize { .. }) => return Ok(unsupported),
        Err(e) => return Err(e),
    }
    let mut samples = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps.max(1) {
        let start = Instant::now();
        black_box(poly_mul(black_box(&a), black_box(&b), &req)?);
        samples.push(start.elapsed().as_nanos() as u64);
    }
    let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len() as f64;
    samples.sort_unstable();
    Ok(SweepRow {
        n,
        engine,
        threads: cfg.threads,
        timing: Some(Timing {
            median: samples[samples.len() / 2],
            mean,
        }),
        butterflies: counters.butterflies(),
        pointwise_muls: counters.pointwise_muls(),
    })
}

/// One row per `(n, engine)`, lengths ascending, engines in the given order.
pub fn sweep(cfg: &SweepConfig, planner: Option<&Planner>) -> Result<Vec<SweepRow>, Error> {
    let mut rows = Vec::new();
    for n in (cfg.n_min..=cfg.n_max).step_by(cfg.step.max(1)) {
        for &engine in &cfg.engines {
            rows.push(measure(cfg, n, engine, planner)?);
        }
    }
    Ok(rows)
}
