//! Empirical plan search, plan persistence and mirrored inverse plans.
//!
//! A [`Planner`] resolves a [`PlanKey`] in three tiers: an entry stored under
//! the current execution signature is returned as is; an entry for the same
//! key recorded under another signature is cloned under the current one;
//! otherwise a timed search runs and its winner is stored.
//!
//! Searches are bottom-up dynamic programs over power-of-two sizes. At every
//! size the candidates are the base codelet (sizes up to 8) and each radix
//! from [`RADIX_MENU`] placed on top of the best plan found for the quotient.
//! Every candidate is checked against a reference transform before it is
//! timed. Ties go to the smaller decomposition in [`Decomposition`] order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::hint::black_box;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convolution::{self, ConvRequest, Engine};
use crate::error::{Error, Result};
use crate::modfield::FourierPrime;
use crate::polyring::{self, DEFAULT_KARATSUBA_THRESHOLD};
use crate::transform::{
    self, bit_reverse_permute, moddft_with, tft_with, Decomposition, Direction, TransformOpts,
    TwiddleTable, RADIX_MENU,
};

/// First line of every plan file.
pub const PLAN_HEADER: &str = "modconv-plan v1";
const HEADER_PREFIX: &str = "modconv-plan ";

/// Largest size checked against the quadratic reference during search;
/// above it candidates are compared with the default plan.
const REFERENCE_MAX: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanKind {
    Dft,
    Tft,
    Itft,
    Conv,
}

impl PlanKind {
    pub const ALL: [PlanKind; 4] = [PlanKind::Dft, PlanKind::Tft, PlanKind::Itft, PlanKind::Conv];

    pub fn name(self) -> &'static str {
        match self {
            PlanKind::Dft => "dft",
            PlanKind::Tft => "tft",
            PlanKind::Itft => "itft",
            PlanKind::Conv => "conv",
        }
    }
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlanKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown plan kind `{s}`")))
    }
}

/// What a plan is for. Field order is the store's sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanKey {
    pub kind: PlanKind,
    pub p: u64,
    /// Transform size.
    pub len: usize,
    /// Input length for truncated transforms, 0 otherwise.
    pub z: usize,
    /// Truncation length, or `len` for full transforms.
    pub n: usize,
    pub threads: usize,
}

/// Truncation length the truncated-transform plans of size `len` are timed
/// at: one past the midpoint, where truncation saves the most.
fn representative_n(len: usize) -> usize {
    (len / 2 + 1).min(len)
}

impl PlanKey {
    pub fn dft(p: u64, len: usize, threads: usize) -> Self {
        Self::for_kind(PlanKind::Dft, p, len, threads)
    }

    pub fn tft(p: u64, len: usize, threads: usize) -> Self {
        Self::for_kind(PlanKind::Tft, p, len, threads)
    }

    pub fn itft(p: u64, len: usize, threads: usize) -> Self {
        Self::for_kind(PlanKind::Itft, p, len, threads)
    }

    pub fn conv(p: u64, len: usize, threads: usize) -> Self {
        Self::for_kind(PlanKind::Conv, p, len, threads)
    }

    /// Canonical key of `kind` for size `len`. Truncated kinds are keyed by
    /// their representative `(z, n)`.
    pub fn for_kind(kind: PlanKind, p: u64, len: usize, threads: usize) -> Self {
        let threads = threads.max(1);
        let (z, n) = match kind {
            PlanKind::Dft | PlanKind::Conv => (0, len),
            PlanKind::Tft | PlanKind::Itft => {
                let n = representative_n(len);
                (n.div_ceil(2), n)
            }
        };
        PlanKey {
            kind,
            p,
            len,
            z,
            n,
            threads,
        }
    }

    fn resized(&self, len: usize) -> Self {
        Self::for_kind(self.kind, self.p, len, self.threads)
    }

    fn with_kind(&self, kind: PlanKind) -> Self {
        Self::for_kind(kind, self.p, self.len, self.threads)
    }
}

/// Outcome of planning one key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanChoice {
    /// Multiply without transforms (conv keys only).
    Direct,
    Transform(Decomposition),
}

impl PlanChoice {
    pub fn decomposition(&self) -> Option<&Decomposition> {
        match self {
            PlanChoice::Direct => None,
            PlanChoice::Transform(d) => Some(d),
        }
    }
}

impl fmt::Display for PlanChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanChoice::Direct => f.write_str("direct"),
            PlanChoice::Transform(d) => write!(f, "{d}"),
        }
    }
}

/// A measured plan. For `itft` keys the decomposition lists the splits in
/// execution order, innermost first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    pub key: PlanKey,
    pub choice: PlanChoice,
    /// Median time of the winning candidate.
    pub nanos: u64,
    pub signature: String,
}

impl PlanEntry {
    pub fn decomposition(&self) -> Option<&Decomposition> {
        self.choice.decomposition()
    }

    fn validate(&self) -> Result<()> {
        if self.key.len == 0 || !self.key.len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "plan size {} is not a power of two",
                self.key.len
            )));
        }
        match &self.choice {
            PlanChoice::Direct if self.key.kind != PlanKind::Conv => Err(Error::invalid(format!(
                "only conv plans may use the direct route, not {}",
                self.key.kind
            ))),
            PlanChoice::Transform(d) if d.size() != self.key.len => Err(Error::invalid(format!(
                "decomposition {d} does not reconstruct size {}",
                self.key.len
            ))),
            _ if !signature_ok(&self.signature) => Err(Error::invalid(format!(
                "signature `{}` contains a separator or line break",
                self.signature
            ))),
            _ => Ok(()),
        }
    }
}

fn signature_ok(sig: &str) -> bool {
    !sig.contains(['|', '\n', '\r'])
}

/// Plan for the inverse truncated transform mirroring a forward one: the same
/// splits in reverse order over the same base case. Mirroring an inverse
/// plan gives back the forward plan.
pub fn plan_mirror(entry: &PlanEntry) -> Result<PlanEntry> {
    let kind = match entry.key.kind {
        PlanKind::Tft => PlanKind::Itft,
        PlanKind::Itft => PlanKind::Tft,
        other => {
            return Err(Error::invalid(format!(
                "only truncated transform plans can be mirrored, not {other}"
            )))
        }
    };
    let d = entry
        .decomposition()
        .ok_or_else(|| Error::invalid("direct plans cannot be mirrored"))?;
    Ok(PlanEntry {
        key: PlanKey { kind, ..entry.key },
        choice: PlanChoice::Transform(d.reversed()),
        nanos: entry.nanos,
        signature: entry.signature.clone(),
    })
}

/// Plans keyed by `(PlanKey, signature)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanStore {
    entries: BTreeMap<(PlanKey, String), PlanEntry>,
}

impl PlanStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = &PlanEntry> {
        self.entries.values()
    }

    pub fn get(&self, key: &PlanKey, signature: &str) -> Option<&PlanEntry> {
        self.entries.get(&(*key, signature.to_string()))
    }

    /// Some entry for `key` under any signature; the smallest signature wins.
    pub fn get_any(&self, key: &PlanKey) -> Option<&PlanEntry> {
        self.entries
            .range((*key, String::new())..)
            .next()
            .filter(|((k, _), _)| k == key)
            .map(|(_, e)| e)
    }

    /// Inserts or replaces the entry for `(entry.key, entry.signature)`.
    pub fn insert(&mut self, entry: PlanEntry) -> Result<Option<PlanEntry>> {
        entry.validate()?;
        Ok(self
            .entries
            .insert((entry.key, entry.signature.clone()), entry))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(PLAN_HEADER);
        out.push('\n');
        for e in self.entries.values() {
            let k = &e.key;
            let (splits, base) = match &e.choice {
                PlanChoice::Direct => (String::new(), 0),
                PlanChoice::Transform(d) => (
                    d.splits()
                        .iter()
                        .map(|r| r.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    d.base(),
                ),
            };
            out.push_str(&format!(
                "{}|{}|{}|{}|{}|{}|splits={}|base={}|nanos={}|sig={}\n",
                k.kind, k.p, k.len, k.z, k.n, k.threads, splits, base, e.nanos, e.signature
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing plan file header".into(),
        })?;
        if header != PLAN_HEADER {
            if header.starts_with(HEADER_PREFIX) {
                return Err(Error::VersionMismatch {
                    expected: PLAN_HEADER.into(),
                    found: header.into(),
                });
            }
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{PLAN_HEADER}`"),
            });
        }
        let mut store = PlanStore::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let entry = parse_entry(line).map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
            let slot = (entry.key, entry.signature.clone());
            if store.entries.contains_key(&slot) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "duplicate entry for key and signature".into(),
                });
            }
            entry.validate().map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            store.entries.insert(slot, entry);
        }
        Ok(store)
    }

    /// Writes the store to `path` through a temporary file, so a failed
    /// write never leaves a truncated store behind.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(self.to_text().as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

fn parse_entry(line: &str) -> std::result::Result<PlanEntry, String> {
    let fields: Vec<&str> = line.splitn(10, '|').collect();
    if fields.len() != 10 {
        return Err(format!(
            "expected 10 `|`-separated fields, found {}",
            fields.len()
        ));
    }
    fn num<T: FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
        s.parse()
            .map_err(|_| format!("{what}: expected a decimal integer, found `{s}`"))
    }
    fn tagged<'a>(s: &'a str, tag: &str) -> std::result::Result<&'a str, String> {
        s.strip_prefix(tag)
            .ok_or_else(|| format!("expected field `{tag}...`, found `{s}`"))
    }
    let kind: PlanKind = fields[0].parse().map_err(|e: Error| e.to_string())?;
    let key = PlanKey {
        kind,
        p: num(fields[1], "p")?,
        len: num(fields[2], "L")?,
        z: num(fields[3], "z")?,
        n: num(fields[4], "n")?,
        threads: num(fields[5], "threads")?,
    };
    let splits_text = tagged(fields[6], "splits=")?;
    let splits = if splits_text.is_empty() {
        Vec::new()
    } else {
        splits_text
            .split(',')
            .map(|s| num(s, "split"))
            .collect::<std::result::Result<Vec<usize>, _>>()?
    };
    let base: usize = num(tagged(fields[7], "base=")?, "base")?;
    let nanos = num(tagged(fields[8], "nanos=")?, "nanos")?;
    let signature = tagged(fields[9], "sig=")?.to_string();
    let choice = if base == 0 {
        if !splits.is_empty() {
            return Err("direct route cannot carry splits".into());
        }
        PlanChoice::Direct
    } else {
        PlanChoice::Transform(Decomposition::new(splits, base).map_err(|e| e.to_string())?)
    };
    Ok(PlanEntry {
        key,
        choice,
        nanos,
        signature,
    })
}

/// Host descriptor: CPU model, logical cores, thread setting and library
/// build, separated by `;`.
pub fn exec_signature(threads: usize) -> String {
    let cpu = fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let sig = format!(
        "{cpu};cores={cores};threads={};build={}-{}",
        threads.max(1),
        env!("CARGO_PKG_VERSION"),
        profile
    );
    sig.replace(['|', '\n', '\r'], "_")
}

/// Source of candidate timings.
pub trait Timer: Send + Sync {
    /// Nanoseconds one execution of `run` takes for `choice` under `key`.
    fn measure(&self, key: &PlanKey, choice: &PlanChoice, run: &mut dyn FnMut()) -> u64;
}

/// Wall-clock timer: median over `runs` samples, each sample a batch long
/// enough to rise above timer resolution.
#[derive(Clone, Debug)]
pub struct MedianTimer {
    pub runs: usize,
    pub min_sample: Duration,
}

impl Default for MedianTimer {
    fn default() -> Self {
        MedianTimer {
            runs: 5,
            min_sample: Duration::from_micros(50),
        }
    }
}

impl Timer for MedianTimer {
    fn measure(&self, _key: &PlanKey, _choice: &PlanChoice, run: &mut dyn FnMut()) -> u64 {
        run();
        let mut batch = 1u32;
        loop {
            let start = Instant::now();
            for _ in 0..batch {
                run();
            }
            if start.elapsed() >= self.min_sample || batch >= 1 << 20 {
                break;
            }
            batch *= 2;
        }
        let mut samples: Vec<u64> = (0..self.runs.max(1))
            .map(|_| {
                let start = Instant::now();
                for _ in 0..batch {
                    run();
                }
                (start.elapsed().as_nanos() / batch as u128) as u64
            })
            .collect();
        samples.sort_unstable();
        samples[samples.len() / 2].max(1)
    }
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    /// Largest size searched; larger sizes reuse the shape planned for it.
    pub max_search_len: usize,
    /// Largest conv size at which the direct route is still timed.
    pub direct_cap: usize,
    /// Seed of the operands used for checking and timing candidates.
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_search_len: 1 << 20,
            direct_cap: 1 << 12,
            seed: 0x006d_6f64_636f_6e76,
        }
    }
}

/// Result of one search: the winner and every candidate timed at the
/// requested size.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub entry: PlanEntry,
    pub candidates: Vec<(PlanChoice, u64)>,
}

/// Plan resolver around a [`PlanStore`]. Lookups that hit share a read
/// lock; searches and inserts take the write lock, so timed runs never
/// overlap.
pub struct Planner {
    store: RwLock<PlanStore>,
    signature: String,
    timer: Box<dyn Timer>,
    config: PlannerConfig,
    searches: AtomicU64,
}

impl fmt::Debug for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Planner")
            .field("signature", &self.signature)
            .field("config", &self.config)
            .field("searches", &self.searches())
            .finish_non_exhaustive()
    }
}

impl Planner {
    pub fn new(store: PlanStore, signature: impl Into<String>) -> Result<Self> {
        let signature = signature.into();
        if !signature_ok(&signature) {
            return Err(Error::invalid(format!(
                "signature `{signature}` contains a separator or line break"
            )));
        }
        Ok(Planner {
            store: RwLock::new(store),
            signature,
            timer: Box::new(MedianTimer::default()),
            config: PlannerConfig::default(),
            searches: AtomicU64::new(0),
        })
    }

    pub fn with_timer(mut self, timer: impl Timer + 'static) -> Self {
        self.timer = Box::new(timer);
        self
    }

    pub fn with_config(mut self, config: PlannerConfig) -> Self {
        self.config = config;
        self
    }

    pub fn signature(&self) -> &str {
        &self.signature
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Timed searches run so far.
    pub fn searches(&self) -> u64 {
        self.searches.load(Ordering::Relaxed)
    }

    /// Copy of the current store contents.
    pub fn snapshot(&self) -> PlanStore {
        self.store.read().unwrap().clone()
    }

    pub fn into_store(self) -> PlanStore {
        self.store.into_inner().unwrap()
    }

    /// Resolves `key` with the three-tier policy. Sizes above
    /// `max_search_len` reuse the plan of the largest searched size,
    /// reshaped, and are not stored.
    pub fn lookup(&self, key: &PlanKey) -> Result<PlanEntry> {
        check_feasible(key)?;
        if key.len > self.config.max_search_len {
            return self.extrapolate(key);
        }
        if let Some(e) = self.store.read().unwrap().get(key, &self.signature) {
            return Ok(e.clone());
        }
        let mut store = self.store.write().unwrap();
        self.resolve_in(&mut store, key)
    }

    /// Runs a fresh search for `key` without touching the store's entry for
    /// it. Stored plans for smaller sizes are reused as sub-plans.
    pub fn plan_search(&self, key: &PlanKey) -> Result<SearchOutcome> {
        check_feasible(key)?;
        let mut store = self.store.write().unwrap();
        self.search_in(&mut store, key)
    }

    pub fn dft_plan(&self, p: u64, len: usize, threads: usize) -> Result<Decomposition> {
        self.transform_plan(PlanKey::dft(p, len, threads))
    }

    pub fn tft_plan(&self, p: u64, len: usize, threads: usize) -> Result<Decomposition> {
        self.transform_plan(PlanKey::tft(p, len, threads))
    }

    /// Inverse truncated plan in execution order.
    pub fn itft_plan(&self, p: u64, len: usize, threads: usize) -> Result<Decomposition> {
        self.transform_plan(PlanKey::itft(p, len, threads))
    }

    pub fn conv_choice(&self, p: u64, len: usize, threads: usize) -> Result<PlanChoice> {
        Ok(self.lookup(&PlanKey::conv(p, len, threads))?.choice)
    }

    fn transform_plan(&self, key: PlanKey) -> Result<Decomposition> {
        let entry = self.lookup(&key)?;
        entry
            .decomposition()
            .cloned()
            .ok_or_else(|| Error::invalid(format!("{} plan without a decomposition", key.kind)))
    }

    fn extrapolate(&self, key: &PlanKey) -> Result<PlanEntry> {
        let top = self.lookup(&key.resized(self.config.max_search_len))?;
        let choice = match &top.choice {
            PlanChoice::Direct => PlanChoice::Transform(Decomposition::default_for(key.len)),
            PlanChoice::Transform(d) if key.kind == PlanKind::Itft => {
                PlanChoice::Transform(d.reversed().for_size(key.len).reversed())
            }
            PlanChoice::Transform(d) => PlanChoice::Transform(d.for_size(key.len)),
        };
        Ok(PlanEntry {
            key: *key,
            choice,
            nanos: top.nanos,
            signature: self.signature.clone(),
        })
    }

    fn resolve_in(&self, store: &mut PlanStore, key: &PlanKey) -> Result<PlanEntry> {
        if let Some(e) = store.get(key, &self.signature) {
            return Ok(e.clone());
        }
        if let Some(e) = store.get_any(key) {
            let cloned = PlanEntry {
                signature: self.signature.clone(),
                ..e.clone()
            };
            store.insert(cloned.clone())?;
            return Ok(cloned);
        }
        let entry = if key.kind == PlanKind::Itft {
            // inverse plans are derived from the forward plan
            let fwd = self.resolve_in(store, &key.with_kind(PlanKind::Tft))?;
            PlanEntry {
                key: *key,
                ..plan_mirror(&fwd)?
            }
        } else {
            self.search_in(store, key)?.entry
        };
        store.insert(entry.clone())?;
        Ok(entry)
    }

    fn search_in(&self, store: &mut PlanStore, key: &PlanKey) -> Result<SearchOutcome> {
        let fp = FourierPrime::new(key.p)?;
        fp.check_transform_len(key.len)?;
        let outcome = match key.kind {
            PlanKind::Dft | PlanKind::Tft => self.dp_search(store, &fp, key)?,
            PlanKind::Itft => {
                // timed as the forward transform it mirrors
                let fwd = self.search_in(store, &key.with_kind(PlanKind::Tft))?;
                let mut candidates = Vec::with_capacity(fwd.candidates.len());
                for (c, t) in fwd.candidates {
                    let c = match c {
                        PlanChoice::Transform(d) => PlanChoice::Transform(d.reversed()),
                        direct => direct,
                    };
                    candidates.push((c, t));
                }
                return Ok(SearchOutcome {
                    entry: PlanEntry {
                        key: *key,
                        ..plan_mirror(&fwd.entry)?
                    },
                    candidates,
                });
            }
            PlanKind::Conv => self.conv_search(store, &fp, key)?,
        };
        self.searches.fetch_add(1, Ordering::Relaxed);
        Ok(outcome)
    }

    fn dp_search(
        &self,
        store: &PlanStore,
        fp: &FourierPrime,
        key: &PlanKey,
    ) -> Result<SearchOutcome> {
        let mut best: HashMap<usize, Decomposition> = HashMap::new();
        best.insert(1, Decomposition::default_for(1));
        if key.len == 1 {
            let choice = PlanChoice::Transform(Decomposition::default_for(1));
            let nanos = self.time_transform(fp, key, &Decomposition::default_for(1))?;
            return self.outcome(key, vec![(choice, nanos)]);
        }
        let mut m = 2;
        loop {
            let sub_key = key.resized(m);
            let stored = store
                .get(&sub_key, &self.signature)
                .and_then(|e| e.decomposition().cloned());
            if m < key.len {
                if let Some(d) = stored {
                    best.insert(m, d);
                    m *= 2;
                    continue;
                }
            }
            let mut timed = Vec::new();
            for cand in candidates(m, &best) {
                if !self.check_transform(fp, &sub_key, &cand)? {
                    continue;
                }
                let nanos = self.time_transform(fp, &sub_key, &cand)?;
                timed.push((PlanChoice::Transform(cand), nanos));
            }
            if m == key.len {
                return self.outcome(key, timed);
            }
            let winner = pick(&timed).ok_or_else(|| no_candidate(&sub_key))?;
            if let PlanChoice::Transform(d) = &timed[winner].0 {
                best.insert(m, d.clone());
            }
            m *= 2;
        }
    }

    fn conv_search(
        &self,
        store: &mut PlanStore,
        fp: &FourierPrime,
        key: &PlanKey,
    ) -> Result<SearchOutcome> {
        let n = representative_n(key.len);
        let z1 = (n + 1).div_ceil(2);
        let z2 = n + 1 - z1;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ key.len as u64);
        let g = random_residues(fp, z1, &mut rng);
        let h = random_residues(fp, z2, &mut rng);
        let base_req = ConvRequest::new(*fp, Engine::Tft).threads(key.threads);
        let reference = if key.len <= self.config.direct_cap {
            polyring::karatsuba(fp, &g, &h, DEFAULT_KARATSUBA_THRESHOLD)
        } else {
            convolution::lin_conv_fft_pad(&g, &h, &base_req)?
        };

        let mut timed = Vec::new();
        if key.len <= self.config.direct_cap {
            let choice = PlanChoice::Direct;
            let nanos = self.timer.measure(key, &choice, &mut || {
                black_box(polyring::karatsuba(
                    fp,
                    black_box(&g),
                    black_box(&h),
                    DEFAULT_KARATSUBA_THRESHOLD,
                ));
            });
            timed.push((choice, nanos));
        }
        let fwd = self.resolve_in(store, &key.with_kind(PlanKind::Tft))?;
        if let Some(d) = fwd.decomposition() {
            let req = base_req.tft_plans(d.clone(), d.reversed());
            if convolution::conv_tft(&g, &h, &req)? == reference {
                let choice = PlanChoice::Transform(d.clone());
                let nanos = self.timer.measure(key, &choice, &mut || {
                    let _ = black_box(convolution::conv_tft(black_box(&g), black_box(&h), &req));
                });
                timed.push((choice, nanos));
            }
        }
        self.outcome(key, timed)
    }

    fn outcome(&self, key: &PlanKey, candidates: Vec<(PlanChoice, u64)>) -> Result<SearchOutcome> {
        let winner = pick(&candidates).ok_or_else(|| no_candidate(key))?;
        let (choice, nanos) = candidates[winner].clone();
        Ok(SearchOutcome {
            entry: PlanEntry {
                key: *key,
                choice,
                nanos,
                signature: self.signature.clone(),
            },
            candidates,
        })
    }

    /// Checks the candidate against the quadratic reference (small sizes) or
    /// the default plan.
    fn check_transform(&self, fp: &FourierPrime, key: &PlanKey, d: &Decomposition) -> Result<bool> {
        let table = TwiddleTable::shared(*fp, key.len)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.rotate_left(7) ^ key.len as u64);
        let x = random_residues(fp, key.len, &mut rng);
        let opts = TransformOpts::with_plan(d.clone());
        let small = key.len <= REFERENCE_MAX;
        Ok(match key.kind {
            PlanKind::Dft => {
                let got = moddft_with(&x, &table, Direction::Forward, &opts, None)?;
                let want = if small {
                    naive_dft(fp, &x, table.root())
                } else {
                    transform::moddft(&x, &table, Direction::Forward, None)?
                };
                got == want
            }
            _ => {
                let x = &x[..key.z];
                let got = tft_with(&table, x, key.n, &opts, None)?;
                let want = if small {
                    let mut padded = x.to_vec();
                    padded.resize(key.len, 0);
                    let mut full = bit_reverse_permute(&naive_dft(fp, &padded, table.root()))?;
                    full.truncate(key.n);
                    full
                } else {
                    transform::tft(&table, x, key.n, None)?
                };
                got == want
            }
        })
    }

    fn time_transform(&self, fp: &FourierPrime, key: &PlanKey, d: &Decomposition) -> Result<u64> {
        let table = TwiddleTable::shared(*fp, key.len)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ key.len as u64);
        let x = random_residues(fp, key.len, &mut rng);
        let opts = TransformOpts::with_plan(d.clone()).threads(key.threads);
        let choice = PlanChoice::Transform(d.clone());
        Ok(match key.kind {
            PlanKind::Dft => self.timer.measure(key, &choice, &mut || {
                let _ = black_box(moddft_with(
                    black_box(&x),
                    &table,
                    Direction::Forward,
                    &opts,
                    None,
                ));
            }),
            _ => {
                let x = &x[..key.z];
                self.timer.measure(key, &choice, &mut || {
                    let _ = black_box(tft_with(&table, black_box(x), key.n, &opts, None));
                })
            }
        })
    }
}

/// Candidates for size `m` given the best plans of all smaller sizes.
fn candidates(m: usize, best: &HashMap<usize, Decomposition>) -> Vec<Decomposition> {
    let mut out = Vec::new();
    if m <= 8 {
        out.push(Decomposition::base_only(m).expect("menu base case"));
    }
    for r in RADIX_MENU {
        if m > r && m.is_multiple_of(r) {
            let sub = &best[&(m / r)];
            let mut path = vec![r];
            path.extend(sub.path());
            out.push(
                Decomposition::new(path[..path.len() - 1].to_vec(), sub.base())
                    .expect("menu radices"),
            );
        }
    }
    out
}

/// Index of the fastest candidate; ties go to the smaller choice.
fn pick(timed: &[(PlanChoice, u64)]) -> Option<usize> {
    (0..timed.len()).min_by(|&a, &b| {
        timed[a]
            .1
            .cmp(&timed[b].1)
            .then_with(|| timed[a].0.cmp(&timed[b].0))
    })
}

fn no_candidate(key: &PlanKey) -> Error {
    Error::invalid(format!(
        "no candidate for {} of size {} passed verification",
        key.kind, key.len
    ))
}

fn check_feasible(key: &PlanKey) -> Result<()> {
    if key.len == 0 || !key.len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "plan size {} is not a power of two",
            key.len
        )));
    }
    FourierPrime::new(key.p)?.check_transform_len(key.len)
}

fn random_residues(fp: &FourierPrime, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
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
