//! Monte Carlo campaigns: gate tables, logical-failure curves, threshold
//! crossings and qubit overheads, with CSV and JSON output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{marginal_table, sample_gate_error, Channel, GateDecoder, GateKind, MarginalCache, PauliTwoQubit};
use crate::error::{Error, Result};
use crate::gkp::GkpParams;
use crate::rng::{chunks, derive_seed, pool, shot_rng};
use crate::surface::MemoryExperiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    CnotTable,
    LogicalCurve,
    Threshold,
    Overhead,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnot-table" => Ok(Command::CnotTable),
            "logical-curve" => Ok(Command::LogicalCurve),
            "threshold" => Ok(Command::Threshold),
            "overhead" => Ok(Command::Overhead),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::CnotTable => "cnot-table",
            Command::LogicalCurve => "logical-curve",
            Command::Threshold => "threshold",
            Command::Overhead => "overhead",
        })
    }
}

/// Edge weighting of the surface-code decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weights {
    Analog,
    None,
}

impl FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analog" => Ok(Weights::Analog),
            "none" | "static" => Ok(Weights::None),
            other => Err(Error::Config(format!("unknown weights `{other}` (expected analog or none)"))),
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weights::Analog => "analog",
            Weights::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub d: Vec<usize>,
    pub sigma_db: Vec<f64>,
    pub lambda: f64,
    pub decoder: Vec<GateDecoder>,
    pub weights: Weights,
    pub gate: GateKind,
    /// shot cap per point
    pub shots: u64,
    /// stop a point early once its relative standard error drops below
    /// this; 0 runs every point to the cap
    pub target_rse: f64,
    pub seed: u64,
    /// 0 means one per core
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// physical gate failure rates for the overhead table
    pub p_gate: Vec<f64>,
    /// target logical failure rate for the overhead table
    pub target: f64,
    /// marginal-table cache file
    pub cache: Option<PathBuf>,
}

pub const KEYS: [&str; 15] = [
    "command",
    "d",
    "sigma_db",
    "lambda",
    "decoder",
    "weights",
    "gate",
    "shots",
    "target_rse",
    "seed",
    "workers",
    "out",
    "p_gate",
    "target",
    "cache",
];

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad value `{x}` for `{key}`"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            d: vec![3],
            sigma_db: vec![11.0],
            lambda: 1.0,
            decoder: match command {
                Command::CnotTable => vec![GateDecoder::Ml, GateDecoder::Closest],
                _ => vec![GateDecoder::Ml],
            },
            weights: Weights::Analog,
            gate: GateKind::Cnot,
            shots: 1_000_000,
            target_rse: 0.1,
            seed: 1,
            workers: 0,
            out: None,
            p_gate: Vec::new(),
            target: 1e-7,
            cache: None,
        }
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key.trim().replace('-', "_").as_str() {
            "command" => self.command = v.parse()?,
            "d" => self.d = parse_list(key, v)?,
            "sigma_db" => self.sigma_db = parse_list(key, v)?,
            "lambda" => self.lambda = parse_one(key, v)?,
            "decoder" => {
                self.decoder = if v == "both" { vec![GateDecoder::Ml, GateDecoder::Closest] } else { parse_list(key, v)? }
            }
            "weights" => self.weights = v.parse()?,
            "gate" => self.gate = v.parse()?,
            "shots" => self.shots = parse_one::<f64>(key, v).and_then(|x| whole(key, x))?,
            "target_rse" => self.target_rse = parse_one(key, v)?,
            "seed" => self.seed = parse_one(key, v)?,
            "workers" => self.workers = parse_one(key, v)?,
            "out" => self.out = path(v),
            "p_gate" => self.p_gate = parse_list(key, v)?,
            "target" => self.target = parse_one(key, v)?,
            "cache" => self.cache = path(v),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        match key {
            "command" => self.command.to_string(),
            "d" => join(&self.d),
            "sigma_db" => join(&self.sigma_db),
            "lambda" => self.lambda.to_string(),
            "decoder" => join(&self.decoder),
            "weights" => self.weights.to_string(),
            "gate" => self.gate.to_string(),
            "shots" => self.shots.to_string(),
            "target_rse" => self.target_rse.to_string(),
            "seed" => self.seed.to_string(),
            "workers" => self.workers.to_string(),
            "out" => path(&self.out),
            "p_gate" => join(&self.p_gate),
            "target" => self.target.to_string(),
            "cache" => path(&self.cache),
            _ => String::new(),
        }
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(command: Command, text: &str) -> Result<Self> {
        let mut c = Self::new(command);
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(command: Command, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(command, &text)
    }

    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.shots < 1 {
            return bad("shots must be at least 1".into());
        }
        if let Some(s) = self.sigma_db.iter().find(|s| !(s.is_finite() && **s > 0.0 && **s <= 40.0)) {
            return bad(format!("sigma_db {s} outside (0, 40]"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda {} must be positive", self.lambda));
        }
        if let Some(d) = self.d.iter().find(|d| **d < 3 || **d % 2 == 0) {
            return Err(Error::InvalidDistance(*d));
        }
        if !(self.target_rse >= 0.0) {
            return bad("target_rse must be non-negative".into());
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return bad(format!("target {} outside (0, 1)", self.target));
        }
        if let Some(p) = self.p_gate.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return bad(format!("p_gate {p} outside (0, 1)"));
        }
        let need_sigma = !matches!(self.command, Command::Overhead) || self.p_gate.is_empty();
        if need_sigma && self.sigma_db.is_empty() {
            return bad("no sigma_db values".into());
        }
        match self.command {
            Command::LogicalCurve | Command::Threshold if self.d.is_empty() => bad("no distances".into()),
            Command::Threshold if self.d.len() < 2 => bad("threshold needs at least two distances".into()),
            Command::CnotTable if self.decoder.is_empty() => bad("no decoders".into()),
            _ => Ok(()),
        }
    }
}

fn whole(key: &str, x: f64) -> Result<u64> {
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!("`{key}` must be a whole number")))
    }
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn binomial_stderr(p: f64, shots: u64) -> f64 {
    if shots == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / shots as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub failures: u64,
    pub shots: u64,
}

impl Estimate {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.shots as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.rate(), self.shots)
    }

    /// Infinite while nothing has failed.
    pub fn rse(&self) -> f64 {
        if self.failures == 0 {
            f64::INFINITY
        } else {
            self.stderr() / self.rate()
        }
    }
}

/// Shot scheduling: fixed-size chunks, run in waves of `wave` chunks; the
/// stopping rule is checked between waves only, so the result never
/// depends on the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_shots: u64,
    pub target_rse: f64,
    pub chunk: u64,
    pub wave: u64,
}

impl Budget {
    pub fn gates(max_shots: u64, target_rse: f64) -> Self {
        Self { max_shots, target_rse, chunk: 1 << 14, wave: 16 }
    }

    pub fn memory(max_shots: u64, target_rse: f64) -> Self {
        Self { max_shots, target_rse, chunk: 512, wave: 16 }
    }
}

/// Sums `shot(i)` over shots `0..` until `stop(counts, shots)` or the cap.
pub fn run_shots<const K: usize, F, S>(
    budget: &Budget,
    pool: &rayon::ThreadPool,
    shot: F,
    stop: S,
) -> Result<([u64; K], u64)>
where
    F: Fn(u64) -> Result<[u64; K]> + Sync,
    S: Fn(&[u64; K], u64) -> bool,
{
    let mut total = [0u64; K];
    let mut done = 0u64;
    while done < budget.max_shots {
        let end = (done + budget.chunk * budget.wave).min(budget.max_shots);
        let ranges: Vec<(u64, u64)> = chunks(done, end, budget.chunk).collect();
        let parts: Vec<Result<[u64; K]>> = pool.install(|| {
            ranges
                .par_iter()
                .map(|&(a, b)| {
                    let mut acc = [0u64; K];
                    for i in a..b {
                        let c = shot(i)?;
                        for k in 0..K {
                            acc[k] += c[k];
                        }
                    }
                    Ok(acc)
                })
                .collect()
        });
        for p in parts {
            let p = p?;
            for k in 0..K {
                total[k] += p[k];
            }
        }
        done = end;
        if budget.target_rse > 0.0 && stop(&total, done) {
            break;
        }
    }
    Ok((total, done))
}

/// Pauli-class counts of one error-corrected gate configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub sigma_db: f64,
    pub lambda: f64,
    pub gate: GateKind,
    pub decoder: GateDecoder,
    pub counts: [u64; 16],
    pub shots: u64,
}

impl GateRecord {
    pub fn failure(&self) -> Estimate {
        Estimate { failures: self.shots - self.counts[0], shots: self.shots }
    }

    pub fn class(&self, p: PauliTwoQubit) -> Estimate {
        Estimate { failures: self.counts[p.index()], shots: self.shots }
    }
}

/// Samples gate failures; stops on the failure-rate RSE.
pub fn gate_counts(
    gate: GateKind,
    params: &GkpParams,
    decoder: GateDecoder,
    budget: &Budget,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<GateRecord> {
    let (counts, shots) = run_shots::<16, _, _>(
        budget,
        pool,
        |i| {
            let mut rng = shot_rng(seed, i);
            let mut c = [0u64; 16];
            c[sample_gate_error(gate, params, decoder, &mut rng).index()] = 1;
            Ok(c)
        },
        |c, n| Estimate { failures: n - c[0], shots: n }.rse() < budget.target_rse,
    )?;
    Ok(GateRecord { sigma_db: params.sigma_db, lambda: params.lambda, gate, decoder, counts, shots })
}

pub fn cnot_table(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<GateRecord>> {
    let budget = Budget::gates(cfg.shots, cfg.target_rse);
    let mut out = Vec::new();
    let mut tag = 0;
    for &db in &cfg.sigma_db {
        let params = GkpParams::from_db(db, cfg.lambda)?;
        for &dec in &cfg.decoder {
            out.push(gate_counts(cfg.gate, &params, dec, &budget, derive_seed(cfg.seed, tag), pool)?);
            tag += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub d: usize,
    pub sigma_db: f64,
    pub lambda: f64,
    pub weights: Weights,
    pub decoder: GateDecoder,
    pub logical_z: Estimate,
    pub logical_x: Estimate,
}

/// Memory-experiment shots at one point; stops once both RSEs are below target.
pub fn memory_point(exp: &MemoryExperiment, budget: &Budget, seed: u64, pool: &rayon::ThreadPool) -> Result<[Estimate; 2]> {
    let (c, shots) = run_shots::<2, _, _>(
        budget,
        pool,
        |i| {
            let o = exp.run_shot(&mut shot_rng(seed, i))?;
            Ok([o.logical_z_failed as u64, o.logical_x_failed as u64])
        },
        |c, n| {
            let z = Estimate { failures: c[0], shots: n };
            let x = Estimate { failures: c[1], shots: n };
            z.rse().max(x.rse()) < budget.target_rse
        },
    )?;
    Ok([Estimate { failures: c[0], shots }, Estimate { failures: c[1], shots }])
}

fn load_cache(cfg: &RunConfig) -> Result<MarginalCache> {
    match &cfg.cache {
        Some(p) => MarginalCache::load(p),
        None => Ok(MarginalCache::new()),
    }
}

pub fn logical_curve(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<CurveRecord>> {
    let budget = Budget::memory(cfg.shots, cfg.target_rse);
    let mut cache = load_cache(cfg)?;
    let decoder = cfg.decoder.first().copied().unwrap_or(GateDecoder::Ml);
    let analog = cfg.weights == Weights::Analog;
    let mut out = Vec::new();
    let mut tag = 0;
    for &d in &cfg.d {
        for &db in &cfg.sigma_db {
            let params = GkpParams::from_db(db, cfg.lambda)?;
            let channel = Channel::with_cache(params, decoder, analog, &mut cache);
            let exp = MemoryExperiment::new(d, channel)?;
            let [z, x] = memory_point(&exp, &budget, derive_seed(cfg.seed, tag), pool)?;
            tag += 1;
            out.push(CurveRecord {
                d,
                sigma_db: db,
                lambda: cfg.lambda,
                weights: cfg.weights,
                decoder,
                logical_z: z,
                logical_x: x,
            });
        }
    }
    if let Some(p) = &cfg.cache {
        cache.save(p)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub estimate_db: f64,
    pub lo_db: f64,
    pub hi_db: f64,
}

/// First sign change of `ln small - ln large` along `sigma_db`, linearly
/// interpolated. Points with a zero rate are skipped.
pub fn find_crossing(sigma_db: &[f64], small: &[f64], large: &[f64]) -> Option<Crossing> {
    let pts: Vec<(f64, f64)> = sigma_db
        .iter()
        .zip(small.iter().zip(large))
        .filter(|(_, (a, b))| **a > 0.0 && **b > 0.0)
        .map(|(&s, (a, b))| (s, a.ln() - b.ln()))
        .collect();
    pts.windows(2).find(|w| w[0].1 * w[1].1 < 0.0).map(|w| {
        let ((s0, f0), (s1, f1)) = (w[0], w[1]);
        Crossing { estimate_db: s0 + (s1 - s0) * f0 / (f0 - f1), lo_db: s0, hi_db: s1 }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub d_small: usize,
    pub d_large: usize,
    pub crossing: Option<Crossing>,
}

/// Crossings of adjacent distances' logical-Z curves.
pub fn threshold_rows(cfg: &RunConfig, curves: &[CurveRecord]) -> Vec<ThresholdRow> {
    let mut ds = cfg.d.clone();
    ds.sort_unstable();
    let mut sig = cfg.sigma_db.clone();
    sig.sort_by(f64::total_cmp);
    let rate = |d: usize, s: f64| {
        curves.iter().find(|c| c.d == d && c.sigma_db == s).map_or(0.0, |c| c.logical_z.rate())
    };
    ds.windows(2)
        .map(|w| {
            let a: Vec<f64> = sig.iter().map(|&s| rate(w[0], s)).collect();
            let b: Vec<f64> = sig.iter().map(|&s| rate(w[1], s)).collect();
            ThresholdRow { d_small: w[0], d_large: w[1], crossing: find_crossing(&sig, &a, &b) }
        })
        .collect()
}

/// Smallest odd distance with `0.1 (100 p)^((d + 1) / 2) < target`, or
/// `None` when `p >= 1e-2`.
pub fn standard_d_min(p: f64, target: f64) -> Option<usize> {
    if p >= 1e-2 {
        return None;
    }
    (3usize..).step_by(2).find(|&d| 0.1 * (100.0 * p).powf(((d + 1) / 2) as f64) < target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub p_gate: f64,
    pub target: f64,
    pub d_min: Option<usize>,
    pub qubits: Option<usize>,
}

pub fn overhead_row(p: f64, target: f64) -> OverheadRow {
    let d_min = standard_d_min(p, target);
    OverheadRow { p_gate: p, target, d_min, qubits: d_min.map(|d| 2 * d * d - 1) }
}

/// Oscillator modes and qubits of a distance-`d` surface-GKP patch, three
/// modes per qubit.
pub fn gkp_resources(d: usize) -> (usize, usize) {
    let q = 2 * d * d - 1;
    (3 * q, q)
}

/// Gate failure rates for overhead rows: the given ones, or the ML CNOT
/// marginal at each `sigma_db`.
fn overhead_rates(cfg: &RunConfig) -> Result<Vec<(Option<f64>, f64)>> {
    if !cfg.p_gate.is_empty() {
        return Ok(cfg.p_gate.iter().map(|&p| (None, p)).collect());
    }
    cfg.sigma_db
        .iter()
        .map(|&db| {
            let params = GkpParams::from_db(db, 1.0)?;
            Ok((Some(db), marginal_table(crate::channel::LocationKind::Cnot, &params).failure()))
        })
        .collect()
}

/// CSV text plus JSON metadata of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub meta: serde_json::Value,
}

fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn fmt_e(x: f64) -> String {
    format!("{x:.6e}")
}

const PAULI_COLUMNS: [&str; 15] =
    ["XI", "ZI", "YI", "IX", "XX", "ZX", "YX", "IZ", "XZ", "ZZ", "YZ", "IY", "XY", "ZY", "YY"];

pub fn gate_csv(rows: &[GateRecord]) -> String {
    let mut s = String::from("sigma_db,decoder,failure_rate,stderr,shots,lambda,gate");
    for c in PAULI_COLUMNS {
        s.push_str(&format!(",p_{c}"));
    }
    s.push('\n');
    for r in rows {
        let f = r.failure();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}",
            r.sigma_db,
            r.decoder,
            fmt_e(f.rate()),
            fmt_e(f.stderr()),
            r.shots,
            r.lambda,
            r.gate
        ));
        for c in PAULI_COLUMNS {
            let p: PauliTwoQubit = c.parse().expect("valid column");
            s.push_str(&format!(",{}", fmt_e(r.class(p).rate())));
        }
        s.push('\n');
    }
    s
}

pub fn curve_csv(rows: &[CurveRecord]) -> String {
    let mut s = String::from("d,sigma_db,lambda,weights,decoder,logical_z_rate,logical_z_stderr,logical_x_rate,logical_x_stderr,shots\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.d,
            r.sigma_db,
            r.lambda,
            r.weights,
            r.decoder,
            fmt_e(r.logical_z.rate()),
            fmt_e(r.logical_z.stderr()),
            fmt_e(r.logical_x.rate()),
            fmt_e(r.logical_x.stderr()),
            r.logical_z.shots
        ));
    }
    s
}

pub fn threshold_csv(rows: &[ThresholdRow]) -> String {
    let mut s = String::from("d_small,d_large,crossing_db,bracket_lo_db,bracket_hi_db\n");
    for r in rows {
        match r.crossing {
            Some(c) => s.push_str(&format!("{},{},{:.4},{},{}\n", r.d_small, r.d_large, c.estimate_db, c.lo_db, c.hi_db)),
            None => s.push_str(&format!("{},{},no crossing,,\n", r.d_small, r.d_large)),
        }
    }
    s
}

pub fn overhead_csv(rows: &[(Option<f64>, OverheadRow)], gkp: &[(usize, usize, usize)]) -> String {
    let mut s = String::from("code,sigma_db,p_gate,target,d,modes,qubits\n");
    for (db, r) in rows {
        let db = db.map(|x| x.to_string()).unwrap_or_default();
        match (r.d_min, r.qubits) {
            (Some(d), Some(q)) => {
                s.push_str(&format!("surface,{db},{},{},{d},,{q}\n", fmt_e(r.p_gate), r.target))
            }
            _ => s.push_str(&format!("surface,{db},{},{},not achievable by formula,,\n", fmt_e(r.p_gate), r.target)),
        }
    }
    for &(d, modes, qubits) in gkp {
        s.push_str(&format!("surface-gkp,,,,{d},{modes},{qubits}\n"));
    }
    s
}

/// Runs the configured command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = unix_time();
    let clock = Instant::now();
    let pool = pool(cfg.workers)?;
    let (csv, results) = match cfg.command {
        Command::CnotTable => {
            let rows = cnot_table(cfg, &pool)?;
            (gate_csv(&rows), serde_json::to_value(&rows))
        }
        Command::LogicalCurve => {
            let rows = logical_curve(cfg, &pool)?;
            (curve_csv(&rows), serde_json::to_value(&rows))
        }
        Command::Threshold => {
            let curves = logical_curve(cfg, &pool)?;
            let rows = threshold_rows(cfg, &curves);
            (threshold_csv(&rows), serde_json::to_value((&rows, &curves)))
        }
        Command::Overhead => {
            let rows: Vec<(Option<f64>, OverheadRow)> =
                overhead_rates(cfg)?.into_iter().map(|(db, p)| (db, overhead_row(p, cfg.target))).collect();
            let gkp: Vec<(usize, usize, usize)> = cfg
                .d
                .iter()
                .map(|&d| {
                    let (m, q) = gkp_resources(d);
                    (d, m, q)
                })
                .collect();
            (overhead_csv(&rows, &gkp), serde_json::to_value((&rows, &gkp)))
        }
    };
    let results = results.map_err(|e| Error::Config(e.to_string()))?;
    let wall = clock.elapsed().as_secs_f64();
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "shot_cap": cfg.shots,
        "started_unix": started,
        "wall_clock_s": wall,
        "results": results,
    });
    let csv = format!("# surface-gkp {} started_unix={started:.0} wall_clock_s={wall:.3}\n{csv}", cfg.command);
    Ok(RunOutput { csv, meta })
}

/// CSV lines that are not `#` comments.
pub fn csv_body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Writes the CSV to `out` and metadata next to it as `.json`.
pub fn write_output(out: &Path, output: &RunOutput) -> Result<()> {
    std::fs::write(out, &output.csv).map_err(|e| Error::io(out, e))?;
    let meta = out.with_extension("json");
    let text = serde_json::to_string_pretty(&output.meta).map_err(|source| Error::Json { path: meta.clone(), source })?;
    std::fs::write(&meta, text).map_err(|e| Error::io(&meta, e))
}
