//! Per-location noise of the surface-GKP circuit.
//!
//! Every location samples Gaussian shifts, decodes them into a Pauli error and
//! reports the decoder's belief table: conditional on the observed residuals
//! (analog) or the unconditional marginal.

use std::collections::HashMap;
use std::fmt;
use std::num::NonZeroUsize;
use std::path::Path;
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gkp::{flip_prob_conditional, flip_prob_marginal, nearest_index, GkpParams};
use crate::ml_decoder::{cell_strips, class_posterior, decode_closest, decode_ml, CorrelatedDensity, JointShift, Sector};

/// Single-qubit Pauli, stored as bits `x | z << 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn x(self) -> bool {
        self.bits() & 1 == 1
    }

    pub fn z(self) -> bool {
        self.bits() & 2 == 2
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Z => 'Z',
            Pauli::Y => 'Y',
        }
    }
}

/// Two-qubit Pauli error class, phases ignored. The first slot is the
/// control (rectangular-lattice) qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliTwoQubit {
    pub p1: Pauli,
    pub p2: Pauli,
}

impl PauliTwoQubit {
    pub const IDENTITY: Self = Self { p1: Pauli::I, p2: Pauli::I };

    pub fn new(p1: Pauli, p2: Pauli) -> Self {
        Self { p1, p2 }
    }

    /// Table index `x1 | z1 << 1 | x2 << 2 | z2 << 3`.
    #[inline]
    pub fn index(self) -> usize {
        (self.p1.bits() | self.p2.bits() << 2) as usize
    }

    pub fn from_index(i: usize) -> Self {
        let b = i as u8;
        Self { p1: Pauli::from_bits(b & 1 != 0, b & 2 != 0), p2: Pauli::from_bits(b & 4 != 0, b & 8 != 0) }
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }
}

impl fmt::Display for PauliTwoQubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.p1.letter(), self.p2.letter())
    }
}

impl FromStr for PauliTwoQubit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let one = |c: char| match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::Config(format!("bad Pauli label `{s}`"))),
        };
        let mut it = s.chars();
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => Ok(Self::new(one(a)?, one(b)?)),
            _ => Err(Error::Config(format!("bad Pauli label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationKind {
    PrepPlus,
    MeasX,
    Idle,
    Cnot,
    Cz,
}

impl LocationKind {
    pub const ALL: [LocationKind; 5] =
        [LocationKind::PrepPlus, LocationKind::MeasX, LocationKind::Idle, LocationKind::Cnot, LocationKind::Cz];

    /// Number of entries in this kind's probability table.
    pub fn table_len(self) -> usize {
        match self {
            LocationKind::PrepPlus | LocationKind::MeasX => 2,
            LocationKind::Idle => 4,
            LocationKind::Cnot | LocationKind::Cz => 16,
        }
    }
}

/// Probability table of one location.
///
/// Flip kinds use `[no flip, flip]`, idle uses Pauli bits `[I, X, Z, Y]`, and
/// two-qubit gates use the [`PauliTwoQubit::index`] layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    len: u8,
    p: [f64; 16],
}

impl ProbTable {
    pub fn flip(q: f64) -> Self {
        let mut p = [0.0; 16];
        p[0] = 1.0 - q;
        p[1] = q;
        Self { len: 2, p }
    }

    pub fn idle(q_x: f64, q_z: f64) -> Self {
        let mut p = [0.0; 16];
        p[0] = (1.0 - q_z) * (1.0 - q_x);
        p[1] = (1.0 - q_z) * q_x;
        p[2] = q_z * (1.0 - q_x);
        p[3] = q_z * q_x;
        Self { len: 4, p }
    }

    /// Outer product of the two sector class distributions of a gate.
    pub fn two_qubit(kind: GateKind, a: [f64; 4], b: [f64; 4]) -> Self {
        let [(_, ma), (_, mb)] = kind.sectors();
        let class = |idx: usize, m: [u8; 2]| ((idx >> m[0]) & 1) | (((idx >> m[1]) & 1) << 1);
        let mut p = [0.0; 16];
        for (i, slot) in p.iter_mut().enumerate() {
            *slot = a[class(i, ma)] * b[class(i, mb)];
        }
        Self { len: 16, p }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p[..self.len as usize]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.as_slice()[i]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Probability of anything other than the trivial outcome.
    pub fn failure(&self) -> f64 {
        self.as_slice()[1..].iter().sum()
    }

    pub fn two_qubit_entry(&self, e: PauliTwoQubit) -> f64 {
        self.get(e.index())
    }
}

/// The sampled error and belief table of one circuit location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationOutcome {
    pub location_kind: LocationKind,
    pub sampled_error: PauliTwoQubit,
    pub probs: ProbTable,
    pub analog: bool,
}

/// How the correlated shifts after a two-qubit gate are decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateDecoder {
    Ml,
    Closest,
}

impl FromStr for GateDecoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(GateDecoder::Ml),
            "closest" => Ok(GateDecoder::Closest),
            other => Err(Error::Config(format!("unknown decoder `{other}` (expected ml or closest)"))),
        }
    }
}

impl fmt::Display for GateDecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateDecoder::Ml => "ml",
            GateDecoder::Closest => "closest",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Cnot,
    Cz,
}

impl GateKind {
    /// The two decoded sectors and, for each, the Pauli-index bit positions
    /// receiving the parities of `n1` and `n2`.
    pub fn sectors(self) -> [(Sector, [u8; 2]); 2] {
        // bit positions: x1 = 0, z1 = 1, x2 = 2, z2 = 3
        match self {
            GateKind::Cnot => [(Sector::QQ, [0, 2]), (Sector::PP, [1, 3])],
            GateKind::Cz => [(Sector::QP, [0, 3]), (Sector::PQ, [1, 2])],
        }
    }

    pub fn location_kind(self) -> LocationKind {
        match self {
            GateKind::Cnot => LocationKind::Cnot,
            GateKind::Cz => LocationKind::Cz,
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Ok(GateKind::Cnot),
            "cz" => Ok(GateKind::Cz),
            other => Err(Error::Config(format!("unknown gate `{other}` (expected cnot or cz)"))),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
        })
    }
}

#[inline]
fn normal<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

/// Correlated quadrature shifts after an error-corrected gate, as the two
/// sector pairs `[(x1, x2); 2]` in [`GateKind::sectors`] order.
pub fn sample_gate_shifts<R: Rng + ?Sized>(kind: GateKind, params: &GkpParams, rng: &mut R) -> [JointShift; 2] {
    let s = params.sigma;
    let il = 1.0 / params.lambda;
    let mut xi = [0.0; 8];
    for v in xi.iter_mut() {
        *v = normal(s, rng);
    }
    let [x1, x2, x3, x4, x5, x6, x7, x8] = xi;
    match kind {
        GateKind::Cnot => {
            let q1 = x1 + x2;
            let q2 = il * x1 + x3 + x4;
            let p1 = -il * x5 + x6 + x7;
            let p2 = x5 + x8;
            [JointShift::new(Sector::QQ, q1, q2), JointShift::new(Sector::PP, p1, p2)]
        }
        GateKind::Cz => {
            let q1 = x1 + x2;
            let q2 = x5 + x6;
            let p1 = il * x5 + x7 + x8;
            let p2 = il * x1 + x3 + x4;
            [JointShift::new(Sector::QP, q1, p2), JointShift::new(Sector::PQ, p1, q2)]
        }
    }
}

fn decode(shift: &JointShift, lambda: f64, decoder: GateDecoder) -> crate::DecodedIntegers {
    match decoder {
        GateDecoder::Ml => decode_ml(shift, lambda),
        GateDecoder::Closest => decode_closest(shift, lambda),
    }
}

/// Pauli class of an error-corrected gate, decoded without beliefs. Draws
/// the same random numbers as [`sim_gate`].
pub fn sample_gate_error<R: Rng + ?Sized>(
    kind: GateKind,
    params: &GkpParams,
    decoder: GateDecoder,
    rng: &mut R,
) -> PauliTwoQubit {
    let shifts = sample_gate_shifts(kind, params, rng);
    let mut idx = 0usize;
    for (shift, (_, bits)) in shifts.iter().zip(kind.sectors()) {
        let (o1, o2) = decode(shift, params.lambda, decoder).parity();
        idx |= (o1 as usize) << bits[0] | (o2 as usize) << bits[1];
    }
    PauliTwoQubit::from_index(idx)
}

/// `|+>` preparation of an ancilla: momentum shift of variance `2 sigma^2`.
pub fn sim_prep_plus<R: Rng + ?Sized>(params: &GkpParams, analog: bool, rng: &mut R) -> LocationOutcome {
    flip_location(LocationKind::PrepPlus, params, 2f64.sqrt() * params.sigma, analog, rng)
}

/// X-basis measurement of an ancilla: inherited momentum shift of variance `sigma^2`.
pub fn sim_meas_x<R: Rng + ?Sized>(params: &GkpParams, analog: bool, rng: &mut R) -> LocationOutcome {
    flip_location(LocationKind::MeasX, params, params.sigma, analog, rng)
}

fn flip_location<R: Rng + ?Sized>(
    kind: LocationKind,
    params: &GkpParams,
    sigma_eff: f64,
    analog: bool,
    rng: &mut R,
) -> LocationOutcome {
    let s = params.p_spacing();
    let xi = normal(sigma_eff, rng);
    let n = nearest_index(xi, s);
    let odd = n.rem_euclid(2) == 1;
    let q = if analog {
        flip_prob_conditional(xi - n as f64 * s, sigma_eff, s)
    } else {
        flip_prob_marginal(sigma_eff, s)
    };
    LocationOutcome {
        location_kind: kind,
        sampled_error: PauliTwoQubit::new(if odd { Pauli::Z } else { Pauli::I }, Pauli::I),
        probs: ProbTable::flip(q),
        analog,
    }
}

/// Idle data qubit between error corrections: independent position and
/// momentum shifts, each of variance `2 sigma^2`.
pub fn sim_idle<R: Rng + ?Sized>(params: &GkpParams, analog: bool, rng: &mut R) -> LocationOutcome {
    let sigma_eff = 2f64.sqrt() * params.sigma;
    let (sq, sp) = (params.q_spacing(), params.p_spacing());
    let xq = normal(sigma_eff, rng);
    let xp = normal(sigma_eff, rng);
    let nq = nearest_index(xq, sq);
    let np = nearest_index(xp, sp);
    let (qx, qz) = if analog {
        (
            flip_prob_conditional(xq - nq as f64 * sq, sigma_eff, sq),
            flip_prob_conditional(xp - np as f64 * sp, sigma_eff, sp),
        )
    } else {
        (flip_prob_marginal(sigma_eff, sq), flip_prob_marginal(sigma_eff, sp))
    };
    let e = Pauli::from_bits(nq.rem_euclid(2) == 1, np.rem_euclid(2) == 1);
    LocationOutcome {
        location_kind: LocationKind::Idle,
        sampled_error: PauliTwoQubit::new(e, Pauli::I),
        probs: ProbTable::idle(qx, qz),
        analog,
    }
}

/// Error-corrected two-qubit gate between a rectangular control and a
/// square target. With `marginal = None` the table is conditional on the
/// decoded residuals; otherwise the given table is reported.
pub fn sim_gate<R: Rng + ?Sized>(
    kind: GateKind,
    params: &GkpParams,
    decoder: GateDecoder,
    marginal: Option<&ProbTable>,
    rng: &mut R,
) -> LocationOutcome {
    let lambda = params.lambda;
    let shifts = sample_gate_shifts(kind, params, rng);
    let sectors = kind.sectors();
    let mut idx = 0usize;
    let mut dists = [[0.0; 4]; 2];
    for ((shift, (_, bits)), dist) in shifts.iter().zip(sectors).zip(dists.iter_mut()) {
        let n = decode(shift, lambda, decoder);
        let (o1, o2) = n.parity();
        idx |= (o1 as usize) << bits[0] | (o2 as usize) << bits[1];
        if marginal.is_none() {
            let (r1, r2) = n.residual(shift, lambda);
            *dist = class_posterior(shift.sector, lambda, params.sigma, r1, r2);
        }
    }
    let probs = match marginal {
        Some(t) => *t,
        None => ProbTable::two_qubit(kind, dists[0], dists[1]),
    };
    LocationOutcome {
        location_kind: kind.location_kind(),
        sampled_error: PauliTwoQubit::from_index(idx),
        probs,
        analog: marginal.is_none(),
    }
}

/// CNOT with maximum-likelihood decoding and analog beliefs.
pub fn sim_cnot<R: Rng + ?Sized>(params: &GkpParams, rng: &mut R) -> LocationOutcome {
    sim_gate(GateKind::Cnot, params, GateDecoder::Ml, None, rng)
}

/// CZ with maximum-likelihood decoding and analog beliefs.
pub fn sim_cz<R: Rng + ?Sized>(params: &GkpParams, rng: &mut R) -> LocationOutcome {
    sim_gate(GateKind::Cz, params, GateDecoder::Ml, None, rng)
}

const QUAD_DEGREE: usize = 24;
const TRANSLATE_WINDOW: i64 = 4;

/// Unconditional parity-class distribution `(00, 10, 01, 11)` of the ML
/// decoder: the joint density integrated over the Voronoi cell of each
/// translate, by Gauss-Legendre quadrature on the cell's linear pieces.
pub fn ml_class_distribution(sector: Sector, lambda: f64, sigma: f64) -> [f64; 4] {
    let gl = GaussLegendre::new(NonZeroUsize::new(QUAD_DEGREE).expect("nonzero degree"));
    let dens = CorrelatedDensity::new(sector, lambda, sigma);
    let (s1, s2) = sector.spacings(lambda);
    let strips = cell_strips(sector, lambda);
    let lower = |r1: f64| strips.iter().map(|&(k, w)| k * r1 - w).fold(f64::NEG_INFINITY, f64::max);
    let upper = |r1: f64| strips.iter().map(|&(k, w)| k * r1 + w).fold(f64::INFINITY, f64::min);

    // abscissas where the active pair of walls can change
    let mut cuts = Vec::new();
    let lines: Vec<(f64, f64)> = strips.iter().flat_map(|&(k, w)| [(k, -w), (k, w)]).collect();
    for (i, &(ka, ba)) in lines.iter().enumerate() {
        for &(kb, bb) in &lines[i + 1..] {
            if (ka - kb).abs() > 1e-12 {
                cuts.push((bb - ba) / (ka - kb));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut out = [0.0; 4];
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        if lower(mid) >= upper(mid) {
            continue;
        }
        for (class, slot) in out.iter_mut().enumerate() {
            *slot += gl.integrate(a, b, |r1| {
                let (lo, hi) = (lower(r1), upper(r1));
                if lo >= hi {
                    return 0.0;
                }
                gl.integrate(lo, hi, |r2| translate_mass(&dens, class, r1, r2, s1, s2))
            });
        }
    }
    out
}

fn translate_mass(dens: &CorrelatedDensity, class: usize, r1: f64, r2: f64, s1: f64, s2: f64) -> f64 {
    let w = TRANSLATE_WINDOW;
    let mut acc = 0.0;
    for m1 in -w..=w {
        if (m1.rem_euclid(2) as usize) != class & 1 {
            continue;
        }
        for m2 in -w..=w {
            if (m2.rem_euclid(2) as usize) != class >> 1 {
                continue;
            }
            acc += dens.eval(r1 + m1 as f64 * s1, r2 + m2 as f64 * s2);
        }
    }
    acc
}

/// The no-analog table of one location kind.
pub fn marginal_table(kind: LocationKind, params: &GkpParams) -> ProbTable {
    let s2 = 2f64.sqrt() * params.sigma;
    match kind {
        LocationKind::PrepPlus => ProbTable::flip(flip_prob_marginal(s2, params.p_spacing())),
        LocationKind::MeasX => ProbTable::flip(flip_prob_marginal(params.sigma, params.p_spacing())),
        LocationKind::Idle => {
            ProbTable::idle(flip_prob_marginal(s2, params.q_spacing()), flip_prob_marginal(s2, params.p_spacing()))
        }
        LocationKind::Cnot | LocationKind::Cz => {
            let gate = if kind == LocationKind::Cnot { GateKind::Cnot } else { GateKind::Cz };
            let [(a, _), (b, _)] = gate.sectors();
            let da = ml_class_distribution(a, params.lambda, params.sigma);
            let db = ml_class_distribution(b, params.lambda, params.sigma);
            let mut t = ProbTable::two_qubit(gate, da, db);
            let total: f64 = t.p.iter().sum();
            for v in t.p.iter_mut() {
                *v /= total;
            }
            t
        }
    }
}

const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    kind: LocationKind,
    lambda: f64,
    sigma_db: f64,
    table: ProbTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    quad_degree: usize,
    translate_window: i64,
    entries: Vec<CacheEntry>,
}

/// Memoized no-analog tables keyed by `(kind, lambda, sigma_db)`.
#[derive(Debug, Clone, Default)]
pub struct MarginalCache {
    tables: HashMap<(LocationKind, u64, u64), ProbTable>,
}

impl MarginalCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(kind: LocationKind, params: &GkpParams) -> (LocationKind, u64, u64) {
        (kind, params.lambda.to_bits(), params.sigma_db.to_bits())
    }

    pub fn get(&self, kind: LocationKind, params: &GkpParams) -> Option<&ProbTable> {
        self.tables.get(&Self::key(kind, params))
    }

    pub fn get_or_compute(&mut self, kind: LocationKind, params: &GkpParams) -> ProbTable {
        *self.tables.entry(Self::key(kind, params)).or_insert_with(|| marginal_table(kind, params))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Loads a cache file; a missing file or a file written with different
    /// quadrature settings yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let file: CacheFile =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        if file.version != CACHE_VERSION || file.quad_degree != QUAD_DEGREE || file.translate_window != TRANSLATE_WINDOW {
            return Ok(Self::new());
        }
        let mut cache = Self::new();
        for e in file.entries {
            cache.tables.insert((e.kind, e.lambda.to_bits(), e.sigma_db.to_bits()), e.table);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut entries: Vec<CacheEntry> = self
            .tables
            .iter()
            .map(|(&(kind, l, s), t)| CacheEntry { kind, lambda: f64::from_bits(l), sigma_db: f64::from_bits(s), table: *t })
            .collect();
        entries.sort_by(|a, b| {
            (a.kind as u8, a.lambda, a.sigma_db).partial_cmp(&(b.kind as u8, b.lambda, b.sigma_db)).expect("finite keys")
        });
        let file = CacheFile { version: CACHE_VERSION, quad_degree: QUAD_DEGREE, translate_window: TRANSLATE_WINDOW, entries };
        let text = serde_json::to_string_pretty(&file).map_err(|source| Error::Json { path: path.into(), source })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Samplers and belief tables for one simulation configuration.
#[derive(Debug, Clone)]
pub struct Channel {
    pub ancilla: GkpParams,
    pub data: GkpParams,
    pub decoder: GateDecoder,
    pub analog: bool,
    marginals: [ProbTable; 5],
}

impl Channel {
    /// Ancillas use `params.lambda`; data qubits are always square.
    pub fn new(params: GkpParams, decoder: GateDecoder, analog: bool) -> Self {
        let mut cache = MarginalCache::new();
        Self::with_cache(params, decoder, analog, &mut cache)
    }

    pub fn with_cache(params: GkpParams, decoder: GateDecoder, analog: bool, cache: &mut MarginalCache) -> Self {
        let data = params.square();
        let marginals = LocationKind::ALL.map(|k| match k {
            LocationKind::Idle => cache.get_or_compute(k, &data),
            _ => cache.get_or_compute(k, &params),
        });
        Self { ancilla: params, data, decoder, analog, marginals }
    }

    pub fn marginal(&self, kind: LocationKind) -> &ProbTable {
        &self.marginals[kind as usize]
    }

    pub fn prep<R: Rng + ?Sized>(&self, rng: &mut R) -> LocationOutcome {
        sim_prep_plus(&self.ancilla, self.analog, rng)
    }

    pub fn meas<R: Rng + ?Sized>(&self, rng: &mut R) -> LocationOutcome {
        sim_meas_x(&self.ancilla, self.analog, rng)
    }

    pub fn idle<R: Rng + ?Sized>(&self, rng: &mut R) -> LocationOutcome {
        sim_idle(&self.data, self.analog, rng)
    }

    pub fn gate<R: Rng + ?Sized>(&self, kind: GateKind, rng: &mut R) -> LocationOutcome {
        let marginal = (!self.analog).then(|| self.marginal(kind.location_kind()));
        sim_gate(kind, &self.ancilla, self.decoder, marginal, rng)
    }
}
