//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criterion 6 is a wall-clock comparison on the machine running the suite;
//! every other criterion is exact.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modconv::convolution::{
    circ_conv_def, circ_conv_split, conv_tft, lin_conv_def, lin_conv_fft_pad, lin_conv_split,
    recombine_residues, split_residues,
};
use modconv::transform::{itft, moddft, moddft_with, tft_with};
use modconv::Decomposition;
use modconv::{
    plan_mirror, ConvRequest, Direction, Engine, FourierPrime, OpCounters, PlanChoice, PlanEntry,
    PlanKey, PlanKind, PlanStore, Planner, Timer, TransformOpts, TwiddleTable,
};
use modconv_cli::sweep::{measure, SweepConfig};

const P: u64 = 998_244_353;

type Verdict = Result<String, String>;

fn field(p: u64) -> FourierPrime {
    FourierPrime::new(p).unwrap()
}

fn random_vec(fp: &FourierPrime, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    (0..n).map(|_| rng.gen_range(0..fp.modulus())).collect()
}

/// Linear convolution by direct summation in 128-bit integers.
fn wide_product(p: u64, u: &[u64], v: &[u64]) -> Vec<u64> {
    let mut acc = vec![0u128; u.len() + v.len() - 1];
    for (i, &a) in u.iter().enumerate() {
        for (j, &b) in v.iter().enumerate() {
            acc[i + j] += a as u128 * b as u128 % p as u128;
        }
    }
    acc.into_iter().map(|s| (s % p as u128) as u64).collect()
}

/// Quadratic DFT at the root `w`.
fn naive_dft(fp: &FourierPrime, x: &[u64], w: u64) -> Vec<u64> {
    let p = fp.modulus() as u128;
    let n = x.len();
    let mut out = vec![0u64; n];
    let mut wk: u128 = 1 % p;
    for o in out.iter_mut() {
        let mut acc: u128 = 0;
        let mut pw: u128 = 1 % p;
        for &v in x {
            acc = (acc + v as u128 * pw) % p;
            pw = pw * wk % p;
        }
        *o = acc as u64;
        wk = wk * w as u128 % p;
    }
    out
}

fn pow_mod(p: u64, b: u64, mut e: u64) -> u64 {
    let (p, mut b, mut r) = (p as u128, b as u128, 1u128);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r as u64
}

/// `w^n = 1` and, for a power of two `n >= 2`, `w^(n/2) = -1`.
fn is_principal_root(p: u64, w: u64, n: usize) -> bool {
    pow_mod(p, w, n as u64) == 1 && (n == 1 || pow_mod(p, w, n as u64 / 2) == p - 1)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cases = 0usize;
    for p in [257u64, P] {
        let fp = field(p);
        let req = ConvRequest::new(fp, Engine::Tft);
        for z1 in 1..=128 {
            for z2 in 1..=128 {
                let u = random_vec(&fp, z1, &mut rng);
                let v = random_vec(&fp, z2, &mut rng);
                let want = wide_product(p, &u, &v);
                let e = |r: modconv::Result<Vec<u64>>| r.map_err(|e| e.to_string());
                ensure(e(lin_conv_def(&fp, &u, &v))? == want, || {
                    format!("definition p={p} {z1}x{z2}")
                })?;
                ensure(e(lin_conv_fft_pad(&u, &v, &req))? == want, || {
                    format!("fft_pad p={p} {z1}x{z2}")
                })?;
                ensure(e(conv_tft(&u, &v, &req))? == want, || {
                    format!("tft p={p} {z1}x{z2}")
                })?;
                ensure(e(lin_conv_split(&u, &v, &req))? == want, || {
                    format!("split p={p} {z1}x{z2}")
                })?;
                cases += 4;
            }
        }
    }
    Ok(format!(
        "{cases} engine products matched, p in {{257, {P}}}"
    ))
}

fn transform_roundtrips(counts: &mut CountLog) -> Verdict {
    let fp = field(P);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for k in 1..=16u32 {
        let n = 1usize << k;
        let t = TwiddleTable::new(fp, n).unwrap();
        let x = random_vec(&fp, n, &mut rng);
        let c = OpCounters::new();
        let y = moddft(&x, &t, Direction::Forward, Some(&c)).map_err(|e| e.to_string())?;
        counts.full.push((n, c.butterflies()));
        let back = moddft(&y, &t, Direction::Inverse, None).map_err(|e| e.to_string())?;
        ensure(back == x, || format!("moddft roundtrip failed at N={n}"))?;
    }
    let mut pairs = 0;
    for k in 0..=10u32 {
        let l = 1usize << k;
        let t = TwiddleTable::new(fp, l).unwrap();
        for n in 1..=l {
            let x = random_vec(&fp, n, &mut rng);
            let c = OpCounters::new();
            let xhat = modconv::transform::tft(&t, &x, n, Some(&c)).map_err(|e| e.to_string())?;
            let fwd = c.butterflies();
            let c = OpCounters::new();
            let back = itft(&t, &xhat, Some(&c)).map_err(|e| e.to_string())?;
            counts.truncated.push((l, n, fwd, c.butterflies()));
            let scale = l as u64 % P;
            ensure(
                back.iter().zip(&x).all(|(&b, &v)| b == fp.mul(v, scale)),
                || format!("itft(tft(x)) != L*x at L={l} n={n}"),
            )?;
            pairs += 1;
        }
    }
    Ok(format!(
        "moddft N=2..2^16 exact; itft*tft = L on {pairs} (L, n) pairs"
    ))
}

#[derive(Default)]
struct CountLog {
    full: Vec<(usize, u64)>,
    truncated: Vec<(usize, usize, u64, u64)>,
}

fn convolution_theorem() -> Verdict {
    let fp = field(P);
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut cases = 0;
    for k in 1..=8u32 {
        let n = 1usize << k;
        let t = TwiddleTable::new(fp, n).unwrap();
        for _ in 0..200 {
            let u = random_vec(&fp, n, &mut rng);
            let v = random_vec(&fp, n, &mut rng);
            let dft = |x: &[u64]| moddft(x, &t, Direction::Forward, None).unwrap();
            let lhs = dft(&circ_conv_def(&fp, &u, &v).unwrap());
            let (fu, fv) = (dft(&u), dft(&v));
            ensure(
                lhs.iter()
                    .zip(fu.iter().zip(&fv))
                    .all(|(&l, (&a, &b))| l == fp.mul(a, b)),
                || format!("DFT(u*v) != DFT(u).DFT(v) at N={n}"),
            )?;
            cases += 1;
        }
    }
    Ok(format!("{cases} random pairs, N=2..256"))
}

fn butterfly_bounds(counts: &CountLog) -> Verdict {
    for &(n, b) in &counts.full {
        let want = (n as u64 / 2) * n.trailing_zeros() as u64;
        ensure(b == want, || {
            format!("full DFT N={n}: {b} butterflies, expected {want}")
        })?;
    }
    let mut worst = 0.0f64;
    for &(l, n, fwd, inv) in &counts.truncated {
        let bound = (n as u64 * l.trailing_zeros() as u64) as f64 / 2.0 + l as f64;
        ensure(fwd as f64 <= bound && inv as f64 <= bound, || {
            format!("L={l} n={n}: tft {fwd}, itft {inv}, bound {bound}")
        })?;
        worst = worst.max(fwd.max(inv) as f64 / bound);
    }
    ensure(
        !counts.truncated.is_empty() && !counts.full.is_empty(),
        || "no counts recorded".into(),
    )?;
    Ok(format!(
        "{} truncated pairs within n*log2(L)/2 + L (max ratio {worst:.3}); {} full sizes exact",
        counts.truncated.len(),
        counts.full.len()
    ))
}

fn sweep_config(threads: usize, reps: usize, engines: Vec<Engine>) -> SweepConfig {
    SweepConfig {
        n_min: 1,
        n_max: 1,
        step: 1,
        engines,
        field: field(P),
        threads,
        reps,
        seed: 7,
    }
}

fn pointwise_contrast() -> Verdict {
    let cfg = sweep_config(1, 1, vec![Engine::Tft, Engine::FftPad]);
    for k in 4..=12u32 {
        let n = (1usize << k) + 1;
        let t = measure(&cfg, n, Engine::Tft, None).map_err(|e| e.to_string())?;
        let f = measure(&cfg, n, Engine::FftPad, None).map_err(|e| e.to_string())?;
        ensure(t.pointwise_muls == n as u64, || {
            format!("n={n}: tft pointwise {}", t.pointwise_muls)
        })?;
        ensure(f.pointwise_muls == 1 << (k + 1), || {
            format!("n={n}: fft_pad pointwise {}", f.pointwise_muls)
        })?;
    }
    Ok("tft = n and fft_pad = 2^(k+1) pointwise products for n = 2^k+1, k=4..12".into())
}

fn median_nanos(cfg: &SweepConfig, n: usize, engine: Engine) -> Result<f64, String> {
    let row = measure(cfg, n, engine, None).map_err(|e| e.to_string())?;
    row.timing
        .map(|t| t.median as f64)
        .ok_or_else(|| format!("n={n} unsupported"))
}

fn smoothness() -> Verdict {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for threads in [1usize, 4] {
        for k in 12..=16u32 {
            let reps = if k <= 14 { 31 } else { 11 };
            let cfg = sweep_config(threads, reps, vec![]);
            let lo = 1usize << k;
            let hi = lo + 1;
            let tft_lo = median_nanos(&cfg, lo, Engine::Tft)?;
            let tft_hi = median_nanos(&cfg, hi, Engine::Tft)?;
            let pad_lo = median_nanos(&cfg, lo, Engine::FftPad)?;
            let pad_hi = median_nanos(&cfg, hi, Engine::FftPad)?;
            let r_tft = tft_hi / tft_lo;
            let r_pad = pad_hi / pad_lo;
            let ok = tft_hi < pad_hi && r_tft <= 0.5 * r_pad + 1.0;
            let note = format!(
                "t={threads} k={k}: tft {:.0}us vs fft_pad {:.0}us, jump {r_tft:.2} vs {r_pad:.2}",
                tft_hi / 1e3,
                pad_hi / 1e3
            );
            if !ok {
                failures.push(note.clone());
            }
            notes.push(note);
        }
    }
    for n in &notes {
        println!("    {n}");
    }
    if failures.is_empty() {
        Ok(
            "tft faster at every n = 2^k+1 and its jump stays within bound (machine-local timing)"
                .into(),
        )
    } else {
        Err(failures.join("; "))
    }
}

/// Cost model: prefers radix-4 splits, charges the direct route heavily.
struct ModelTimer;

impl Timer for ModelTimer {
    fn measure(&self, _key: &PlanKey, choice: &PlanChoice, run: &mut dyn FnMut()) -> u64 {
        run();
        match choice {
            PlanChoice::Direct => u64::MAX / 2,
            PlanChoice::Transform(d) => {
                d.splits()
                    .iter()
                    .map(|&r| if r == 4 { 3 } else { 2 * r as u64 })
                    .sum::<u64>()
                    + d.base() as u64
            }
        }
    }
}

fn planner_contracts() -> Verdict {
    // three-tier lookup
    let pl = Planner::new(PlanStore::new(), "host-a")
        .unwrap()
        .with_timer(ModelTimer);
    let key = PlanKey::tft(P, 256, 1);
    let fresh = pl.lookup(&key).map_err(|e| e.to_string())?;
    ensure(pl.searches() == 1 && pl.snapshot().len() == 1, || {
        "fresh lookup did not search once".into()
    })?;
    let hit = pl.lookup(&key).map_err(|e| e.to_string())?;
    ensure(hit == fresh && pl.searches() == 1, || {
        "exact hit searched again".into()
    })?;
    let before = pl.snapshot();
    let other = Planner::new(before.clone(), "host-b")
        .unwrap()
        .with_timer(ModelTimer);
    let cloned = other.lookup(&key).map_err(|e| e.to_string())?;
    let after = other.snapshot();
    ensure(other.searches() == 0, || {
        "signature miss triggered a search".into()
    })?;
    ensure(
        cloned.signature == "host-b" && cloned.choice == fresh.choice,
        || "clone not re-signed".into(),
    )?;
    ensure(
        after.get(&key, "host-a") == before.get(&key, "host-a"),
        || "original entry modified".into(),
    )?;
    ensure(after.len() == before.len() + 1, || {
        "clone not stored".into()
    })?;

    // mirror involution
    let d = Decomposition::new(vec![2, 4], 8).unwrap();
    let fwd = PlanEntry {
        key: PlanKey::tft(P, 64, 1),
        choice: PlanChoice::Transform(d),
        nanos: 1,
        signature: "s".into(),
    };
    let m = plan_mirror(&fwd).map_err(|e| e.to_string())?;
    ensure(
        m.key.kind == PlanKind::Itft && m.decomposition().unwrap().splits() == [4, 2],
        || "mirror shape".into(),
    )?;
    ensure(plan_mirror(&m).map_err(|e| e.to_string())? == fwd, || {
        "mirror is not an involution".into()
    })?;

    // stored plans replay correctly (real timer)
    let fp = field(P);
    let real = Planner::new(PlanStore::new(), modconv::exec_signature(1)).unwrap();
    for k in 0..=10 {
        for kind in [PlanKind::Dft, PlanKind::Tft, PlanKind::Itft] {
            real.lookup(&PlanKey::for_kind(kind, P, 1 << k, 1))
                .map_err(|e| e.to_string())?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut replayed = 0;
    for e in real.snapshot().iter() {
        let l = e.key.len;
        let t = TwiddleTable::new(fp, l).unwrap();
        let w = t.root();
        ensure(is_principal_root(P, w, l), || {
            format!("table root for L={l} is not principal")
        })?;
        let opts = TransformOpts::with_plan(e.decomposition().unwrap().clone());
        let x = random_vec(&fp, l, &mut rng);
        let mut padded = x[..e.key.z.max(1).min(l)].to_vec();
        padded.resize(l, 0);
        let spectrum = naive_dft(&fp, &padded, w);
        let bits = l.trailing_zeros();
        let rev = |i: usize| {
            if bits == 0 {
                0
            } else {
                i.reverse_bits() >> (usize::BITS - bits)
            }
        };
        let ok = match e.key.kind {
            PlanKind::Dft => {
                moddft_with(&x, &t, Direction::Forward, &opts, None).unwrap()
                    == naive_dft(&fp, &x, w)
            }
            PlanKind::Tft => {
                let got = tft_with(&t, &x[..e.key.z], e.key.n, &opts, None).unwrap();
                (0..e.key.n).all(|i| got[i] == spectrum[rev(i)])
            }
            PlanKind::Itft => {
                let xhat: Vec<u64> = (0..e.key.n).map(|i| spectrum[rev(i)]).collect();
                let back = modconv::transform::itft_with(&t, &xhat, &opts, None).unwrap();
                (0..e.key.n).all(|i| back[i] == fp.mul(padded[i], l as u64 % P))
            }
            PlanKind::Conv => true,
        };
        ensure(ok, || {
            format!("stored {} plan for L={l} replays incorrectly", e.key.kind)
        })?;
        replayed += 1;
    }

    // store round trips
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..100 {
        let mut store = PlanStore::new();
        for _ in 0..rng.gen_range(0..50) {
            let kind = PlanKind::ALL[rng.gen_range(0..4)];
            let len = 1usize << rng.gen_range(0..21);
            let all = Decomposition::all_for(len.min(256));
            let choice = if kind == PlanKind::Conv && rng.gen_bool(0.25) {
                PlanChoice::Direct
            } else {
                PlanChoice::Transform(all[rng.gen_range(0..all.len())].for_size(len))
            };
            store
                .insert(PlanEntry {
                    key: PlanKey::for_kind(
                        kind,
                        rng.gen_range(3..u64::MAX >> 2),
                        len,
                        rng.gen_range(1..17),
                    ),
                    choice,
                    nanos: rng.gen(),
                    signature: format!(
                        "cpu {};cores={};build=x",
                        rng.gen::<u16>(),
                        rng.gen_range(1..129)
                    ),
                })
                .map_err(|e| e.to_string())?;
        }
        let text = store.to_text();
        let back = PlanStore::parse(&text).map_err(|e| e.to_string())?;
        ensure(back == store && back.to_text() == text, || {
            "store round trip failed".into()
        })?;
    }
    Ok(format!("three tiers, mirror involution, {replayed} stored plans replayed, 100 stores round-tripped"))
}

fn split_engine() -> Verdict {
    let fp = field(P);
    let req = ConvRequest::new(fp, Engine::Split);
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut cases = 0;
    for k in 2..=8u32 {
        let n = 1usize << k;
        for _ in 0..50 {
            let u = random_vec(&fp, n, &mut rng);
            let v = random_vec(&fp, n, &mut rng);
            let got = circ_conv_split(&u, &v, &req).map_err(|e| e.to_string())?;
            ensure(got == circ_conv_def(&fp, &u, &v).unwrap(), || {
                format!("split differs at 2n={n}")
            })?;
            let (a, b) = split_residues(&fp, &u).unwrap();
            ensure(recombine_residues(&fp, &a, &b).unwrap() == u, || {
                format!("residue maps at 2n={n}")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} random cyclic products, 2n=4..256, residue maps inverse"
    ))
}

fn main() -> ExitCode {
    let mut counts = CountLog::default();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, verdict: Verdict, secs: f64| match verdict {
        Ok(detail) => println!("criterion {id} {name}: PASS ({detail}) [{secs:.1}s]"),
        Err(why) => {
            failed += 1;
            println!("criterion {id} {name}: FAIL ({why}) [{secs:.1}s]");
        }
    };
    let timed = |f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        (v, start.elapsed().as_secs_f64())
    };

    let (v, s) = timed(&mut oracle_equivalence);
    report(1, "oracle-equivalence", v, s);
    let (v, s) = timed(&mut || transform_roundtrips(&mut counts));
    report(2, "transform-roundtrips", v, s);
    let (v, s) = timed(&mut convolution_theorem);
    report(3, "convolution-theorem", v, s);
    let (v, s) = timed(&mut || butterfly_bounds(&counts));
    report(4, "butterfly-bounds", v, s);
    let (v, s) = timed(&mut pointwise_contrast);
    report(5, "pointwise-contrast", v, s);
    let (v, s) = timed(&mut smoothness);
    report(6, "smoothness", v, s);
    let (v, s) = timed(&mut planner_contracts);
    report(7, "planner-contracts", v, s);
    let (v, s) = timed(&mut split_engine);
    report(8, "split-engine", v, s);

    if failed == 0 {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria failed");
        ExitCode::FAILURE
    }
}
