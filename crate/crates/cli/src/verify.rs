//! Built-in correctness suites run by `modconv verify`.
//!
//! Each suite checks one family of invariants against an independent
//! reference (integer arithmetic, quadratic transforms, schoolbook products).
//! Output depends only on the seed and the size cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modconv::convolution::{
    circ_conv_def, circ_conv_fft, circ_conv_split, nega_conv, recombine_residues, split_residues,
};
use modconv::transform::{itft, moddft, moddft_with, tft};
use modconv::{
    find_fourier_prime, plan_mirror, poly_mul, ConvRequest, Decomposition, DensePoly, Direction,
    Engine, FourierPrime, OpCounters, PlanChoice, PlanEntry, PlanKey, PlanKind, PlanStore, Planner,
    TransformOpts, TwiddleTable,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failure: Option<String>,
}

impl SuiteReport {
    pub fn line(&self) -> String {
        match &self.failure {
            None => format!("PASS {} ({} cases)", self.name, self.cases),
            Some(why) => format!("FAIL {}: {why}", self.name),
        }
    }
}

type Outcome = Result<usize, String>;
type Suite = fn(&Ctx) -> Outcome;

struct Ctx {
    seed: u64,
    cap: usize,
    fault: bool,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ salt)
    }

    /// Table used by the transform suites; corrupted under fault injection.
    fn table(&self, fp: FourierPrime, n: usize) -> TwiddleTable {
        let t = TwiddleTable::new(fp, n).expect("size checked by caller");
        if self.fault && n >= 4 {
            t.with_corrupted_power(1)
        } else {
            t
        }
    }

    fn sizes(&self, limit: usize) -> impl Iterator<Item = usize> {
        let top = self.cap.min(limit);
        (0..).map(|k| 1usize << k).take_while(move |&n| n <= top)
    }
}

fn primes() -> Vec<FourierPrime> {
    vec![
        FourierPrime::new(257).unwrap(),
        FourierPrime::new(998_244_353).unwrap(),
        find_fourier_prime(20, 62).unwrap(),
    ]
}

fn random_vec(fp: &FourierPrime, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    (0..n).map(|_| rng.gen_range(0..fp.modulus())).collect()
}

fn naive_dft(fp: &FourierPrime, x: &[u64], w: u64) -> Vec<u64> {
    let mut wk = 1 % fp.modulus();
    let mut out = Vec::with_capacity(x.len());
    for _ in 0..x.len() {
        out.push(x.iter().rev().fold(0, |acc, &v| fp.add(fp.mul(acc, wk), v)));
        wk = fp.mul(wk, w);
    }
    out
}

fn bitrev(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field_arithmetic(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(1);
    let mut cases = 0;
    for fp in primes() {
        let p = fp.modulus();
        for _ in 0..2000 {
            let a = rng.gen_range(0..p);
            let b = rng.gen_range(0..p);
            let (wa, wb, wp) = (a as u128, b as u128, p as u128);
            ensure(fp.add(a, b) as u128 == (wa + wb) % wp, || {
                format!("p={p}: {a} + {b}")
            })?;
            ensure(fp.sub(a, b) as u128 == (wa + wp - wb) % wp, || {
                format!("p={p}: {a} - {b}")
            })?;
            ensure(fp.mul(a, b) as u128 == wa * wb % wp, || {
                format!("p={p}: {a} * {b}")
            })?;
            if a != 0 {
                let inv = fp.inv(a).map_err(|e| e.to_string())?;
                ensure(fp.mul(a, inv) == 1, || format!("p={p}: inverse of {a}"))?;
            }
            cases += 1;
        }
        let g = fp.generator();
        ensure(fp.pow(g, p - 1) == 1, || format!("p={p}: generator order"))?;
    }
    Ok(cases)
}

fn dft_definition(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(2);
    let mut cases = 0;
    for fp in primes().into_iter().take(2) {
        for n in ctx.sizes(256) {
            let t = ctx.table(fp, n);
            let w = fp.root_of_unity(n).map_err(|e| e.to_string())?;
            let x = random_vec(&fp, n, &mut rng);
            let want = naive_dft(&fp, &x, w);
            let plans = if n <= 64 {
                Decomposition::all_for(n)
            } else {
                vec![Decomposition::default_for(n)]
            };
            for d in plans {
                let opts = TransformOpts::with_plan(d.clone());
                let got = moddft_with(&x, &t, Direction::Forward, &opts, None)
                    .map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!(
                        "p={} N={n} plan {d} differs from the definition",
                        fp.modulus()
                    )
                })?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn dft_roundtrip(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(3);
    let fp = FourierPrime::new(998_244_353).unwrap();
    let mut cases = 0;
    for n in ctx.sizes(usize::MAX) {
        let t = ctx.table(fp, n);
        let x = random_vec(&fp, n, &mut rng);
        let y = moddft(&x, &t, Direction::Forward, None).map_err(|e| e.to_string())?;
        let back = moddft(&y, &t, Direction::Inverse, None).map_err(|e| e.to_string())?;
        ensure(back == x, || {
            format!("N={n}: inverse of forward is not the identity")
        })?;
        cases += 1;
    }
    Ok(cases)
}

fn truncated_transforms(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(4);
    let fp = FourierPrime::new(998_244_353).unwrap();
    let mut cases = 0;
    for l in ctx.sizes(256) {
        let t = ctx.table(fp, l);
        let w = fp.root_of_unity(l).map_err(|e| e.to_string())?;
        let bits = l.trailing_zeros();
        for n in 1..=l {
            let x = random_vec(&fp, n, &mut rng);
            let mut padded = x.clone();
            padded.resize(l, 0);
            let full = naive_dft(&fp, &padded, w);
            let xhat = tft(&t, &x, n, None).map_err(|e| e.to_string())?;
            ensure((0..n).all(|i| xhat[i] == full[bitrev(i, bits)]), || {
                format!("L={l} n={n}: truncated spectrum differs from the definition")
            })?;
            let back = itft(&t, &xhat, None).map_err(|e| e.to_string())?;
            let scale = l as u64 % fp.modulus();
            ensure(
                back.iter().zip(&x).all(|(&b, &v)| b == fp.mul(v, scale)),
                || format!("L={l} n={n}: inverse truncated transform is not L times the input"),
            )?;
            cases += 1;
        }
    }
    Ok(cases)
}

fn operation_counts(ctx: &Ctx) -> Outcome {
    let fp = FourierPrime::new(998_244_353).unwrap();
    let mut cases = 0;
    for l in ctx.sizes(usize::MAX) {
        let t = TwiddleTable::new(fp, l).unwrap();
        let k = l.trailing_zeros() as u64;
        let c = OpCounters::new();
        moddft(&vec![1; l], &t, Direction::Forward, Some(&c)).map_err(|e| e.to_string())?;
        ensure(c.butterflies() == (l as u64 / 2) * k, || {
            format!("L={l}: full transform count {}", c.butterflies())
        })?;
        let step = (l / 64).max(1);
        for n in (1..=l).step_by(step) {
            let bound = n as u64 * k / 2 + l as u64;
            let c = OpCounters::new();
            let xhat = tft(&t, &vec![1; n], n, Some(&c)).map_err(|e| e.to_string())?;
            ensure(c.butterflies() <= bound, || {
                format!(
                    "L={l} n={n}: forward count {} over bound {bound}",
                    c.butterflies()
                )
            })?;
            let c = OpCounters::new();
            itft(&t, &xhat, Some(&c)).map_err(|e| e.to_string())?;
            ensure(c.butterflies() <= bound, || {
                format!(
                    "L={l} n={n}: inverse count {} over bound {bound}",
                    c.butterflies()
                )
            })?;
            cases += 1;
        }
    }
    Ok(cases)
}

fn convolution_theorem(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(5);
    let fp = FourierPrime::new(998_244_353).unwrap();
    let mut cases = 0;
    for n in ctx.sizes(256).filter(|&n| n >= 2) {
        let t = ctx.table(fp, n);
        for _ in 0..20 {
            let u = random_vec(&fp, n, &mut rng);
            let v = random_vec(&fp, n, &mut rng);
            let dft =
                |x: &[u64]| moddft(x, &t, Direction::Forward, None).map_err(|e| e.to_string());
            let lhs = dft(&circ_conv_def(&fp, &u, &v).map_err(|e| e.to_string())?)?;
            let (fu, fv) = (dft(&u)?, dft(&v)?);
            ensure(
                lhs.iter()
                    .zip(fu.iter().zip(&fv))
                    .all(|(&l, (&a, &b))| l == fp.mul(a, b)),
                || format!("N={n}: transform of the cyclic product is not the pointwise product"),
            )?;
            cases += 1;
        }
    }
    Ok(cases)
}

fn engine_agreement(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(6);
    let mut cases = 0;
    let planner = Planner::new(PlanStore::new(), "verify").map_err(|e| e.to_string())?;
    for fp in primes() {
        let max_len = (fp.max_transform_len().min(ctx.cap) / 2).max(1);
        for _ in 0..60 {
            let z1 = rng.gen_range(1..=max_len);
            let z2 = rng.gen_range(1..=max_len);
            let a = DensePoly::from_reduced(fp, random_vec(&fp, z1, &mut rng));
            let b = DensePoly::from_reduced(fp, random_vec(&fp, z2, &mut rng));
            let want = a.mul_schoolbook(&b).map_err(|e| e.to_string())?.normalize();
            for engine in [Engine::FftPad, Engine::Tft, Engine::Split, Engine::Auto] {
                let req = ConvRequest::new(fp, engine).planner(&planner);
                let got = poly_mul(&a, &b, &req).map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!(
                        "p={} lengths {z1}x{z2}: engine {engine} differs from schoolbook",
                        fp.modulus()
                    )
                })?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn split_engine(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(7);
    let fp = FourierPrime::new(998_244_353).unwrap();
    let req = ConvRequest::new(fp, Engine::Split);
    let mut cases = 0;
    for n in ctx.sizes(256) {
        let u = random_vec(&fp, n, &mut rng);
        let v = random_vec(&fp, n, &mut rng);
        let cyc = circ_conv_def(&fp, &u, &v).map_err(|e| e.to_string())?;
        ensure(
            circ_conv_fft(&u, &v, &req).map_err(|e| e.to_string())? == cyc,
            || format!("N={n}: transform cyclic product differs from the definition"),
        )?;
        let full = a_times_b(&fp, &u, &v);
        let nega: Vec<u64> = (0..n)
            .map(|i| fp.sub(full[i], full.get(i + n).copied().unwrap_or(0)))
            .collect();
        ensure(
            nega_conv(&u, &v, &req).map_err(|e| e.to_string())? == nega,
            || format!("N={n}: negacyclic product differs from the reduced schoolbook product"),
        )?;
        if n >= 2 {
            ensure(
                circ_conv_split(&u, &v, &req).map_err(|e| e.to_string())? == cyc,
                || format!("N={n}: split cyclic product differs from the definition"),
            )?;
            let (a, b) = split_residues(&fp, &u).map_err(|e| e.to_string())?;
            ensure(
                recombine_residues(&fp, &a, &b).map_err(|e| e.to_string())? == u,
                || format!("N={n}: residue maps are not mutually inverse"),
            )?;
        }
        cases += 1;
    }
    Ok(cases)
}

fn a_times_b(fp: &FourierPrime, u: &[u64], v: &[u64]) -> Vec<u64> {
    let a = DensePoly::from_reduced(*fp, u.iter().copied());
    let b = DensePoly::from_reduced(*fp, v.iter().copied());
    a.mul_schoolbook(&b)
        .map(|p| p.into_coeffs())
        .unwrap_or_default()
}

fn plan_store(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(8);
    let mut cases = 0;
    for _ in 0..20 {
        let mut store = PlanStore::new();
        for _ in 0..rng.gen_range(0..30) {
            let kind = PlanKind::ALL[rng.gen_range(0..4)];
            let len = 1usize << rng.gen_range(0..16);
            let all = Decomposition::all_for(len.min(64));
            let d = all[rng.gen_range(0..all.len())].for_size(len);
            let choice = if kind == PlanKind::Conv && rng.gen_bool(0.3) {
                PlanChoice::Direct
            } else {
                PlanChoice::Transform(d)
            };
            let entry = PlanEntry {
                key: PlanKey::for_kind(kind, rng.gen_range(3..1 << 62), len, rng.gen_range(1..9)),
                choice,
                nanos: rng.gen(),
                signature: format!(
                    "host-{};cores={}",
                    rng.gen_range(0..4),
                    rng.gen_range(1..65)
                ),
            };
            if kind == PlanKind::Tft {
                let m = plan_mirror(&entry).map_err(|e| e.to_string())?;
                ensure(plan_mirror(&m).map_err(|e| e.to_string())? == entry, || {
                    "mirroring twice does not give back the plan".to_string()
                })?;
            }
            store.insert(entry).map_err(|e| e.to_string())?;
        }
        let text = store.to_text();
        let back = PlanStore::parse(&text).map_err(|e| e.to_string())?;
        ensure(back == store && back.to_text() == text, || {
            "plan store does not round-trip".to_string()
        })?;
        cases += 1;
    }
    Ok(cases)
}

fn polynomial_text(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(9);
    let mut cases = 0;
    for fp in primes() {
        for len in 0..40 {
            let p = DensePoly::from_reduced(fp, random_vec(&fp, len, &mut rng));
            let back = DensePoly::parse(&p.to_text()).map_err(|e| e.to_string())?;
            ensure(back == p, || {
                format!(
                    "p={} length {len}: text form does not round-trip",
                    fp.modulus()
                )
            })?;
            cases += 1;
        }
    }
    Ok(cases)
}

/// Runs every suite in a fixed order.
pub fn run_suites(seed: u64, cap: usize, fault: bool) -> Vec<SuiteReport> {
    let ctx = Ctx { seed, cap, fault };
    let suites: [(&'static str, Suite); 10] = [
        ("field-arithmetic", field_arithmetic),
        ("dft-definition", dft_definition),
        ("dft-roundtrip", dft_roundtrip),
        ("truncated-transforms", truncated_transforms),
        ("operation-counts", operation_counts),
        ("convolution-theorem", convolution_theorem),
        ("engine-agreement", engine_agreement),
        ("split-engine", split_engine),
        ("plan-store", plan_store),
        ("polynomial-text", polynomial_text),
    ];
    suites
        .into_iter()
        .map(|(name, f)| match f(&ctx) {
            Ok(cases) => SuiteReport {
                name,
                cases,
                failure: None,
            },
            Err(why) => SuiteReport {
                name,
                cases: 0,
                failure: Some(why),
            },
        })
        .collect()
}
