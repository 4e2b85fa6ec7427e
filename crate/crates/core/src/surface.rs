//! Rotated surface-code lattice, its interleaved 4-step syndrome circuit,
//! Pauli-frame execution of noisy rounds and the per-round probability store.

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, GateKind, LocationKind, Pauli, PauliTwoQubit, ProbTable};
use crate::error::{Error, Result};
use crate::matcher::{self, MatchingGraph};

/// Which Pauli a stabilizer measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabKind {
    X,
    Z,
}

impl StabKind {
    pub fn gate(self) -> GateKind {
        match self {
            StabKind::X => GateKind::Cnot,
            StabKind::Z => GateKind::Cz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilizer {
    pub kind: StabKind,
    /// top-left corner of the plaquette; data qubit `(r, c)` sits at the
    /// plaquette corner `(r, c)`
    pub corner: (i64, i64),
    /// data qubit touched at each of the 4 time steps, if any
    pub schedule: [Option<usize>; 4],
}

impl Stabilizer {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedule.iter().flatten().copied()
    }

    pub fn weight(&self) -> usize {
        self.support().count()
    }
}

/// Corner offsets (row, col) visited at time steps 1..4.
const X_ORDER: [(i64, i64); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];
const Z_ORDER: [(i64, i64); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// `dx` rows by `dz` columns of data qubits. X-type boundaries run along the
/// top and bottom, Z-type boundaries along the left and right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    pub dx: usize,
    pub dz: usize,
    stabs: Vec<Stabilizer>,
    m1: usize,
    /// (ancilla, data) pairs acting at each time step
    steps: [Vec<(usize, usize)>; 4],
}

impl Lattice {
    pub fn new(dx: usize, dz: usize) -> Result<Self> {
        for d in [dx, dz] {
            if d < 3 || d % 2 == 0 {
                return Err(Error::InvalidDistance(d));
            }
        }
        let (rx, rz) = (dx as i64, dz as i64);
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        // column-major order, top to bottom then left to right
        for c in -1..rz {
            for r in -1..rx {
                let x_type = (r + c).rem_euclid(2) == 0;
                let row_edge = r == -1 || r == rx - 1;
                let col_edge = c == -1 || c == rz - 1;
                let keep = match (row_edge, col_edge) {
                    (false, false) => true,
                    (true, false) => x_type,
                    (false, true) => !x_type,
                    (true, true) => false,
                };
                if !keep {
                    continue;
                }
                let (kind, order) = if x_type { (StabKind::X, X_ORDER) } else { (StabKind::Z, Z_ORDER) };
                let schedule = order.map(|(dr, dc)| {
                    let (qr, qc) = (r + dr, c + dc);
                    ((0..rx).contains(&qr) && (0..rz).contains(&qc)).then(|| (qr * rz + qc) as usize)
                });
                let s = Stabilizer { kind, corner: (r, c), schedule };
                if x_type { xs.push(s) } else { zs.push(s) }
            }
        }
        let m1 = xs.len();
        xs.extend(zs);
        let mut steps: [Vec<(usize, usize)>; 4] = Default::default();
        for (g, s) in xs.iter().enumerate() {
            for (t, q) in s.schedule.iter().enumerate() {
                if let Some(q) = q {
                    steps[t].push((g, *q));
                }
            }
        }
        let lattice = Self { dx, dz, stabs: xs, m1, steps };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn square(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn n(&self) -> usize {
        self.dx * self.dz
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.stabs.len() - self.m1
    }

    pub fn m(&self) -> usize {
        self.stabs.len()
    }

    /// Ancillas are numbered X-type first (`0..m1`) then Z-type.
    pub fn stabilizers(&self) -> &[Stabilizer] {
        &self.stabs
    }

    pub fn stabilizer(&self, g: usize) -> &Stabilizer {
        &self.stabs[g]
    }

    /// Index range of the ancillas of one type.
    pub fn ancillas(&self, kind: StabKind) -> std::ops::Range<usize> {
        match kind {
            StabKind::X => 0..self.m1,
            StabKind::Z => self.m1..self.stabs.len(),
        }
    }

    pub fn step(&self, t: usize) -> &[(usize, usize)] {
        &self.steps[t]
    }

    pub fn data_index(&self, r: usize, c: usize) -> usize {
        r * self.dz + c
    }

    pub fn data_coord(&self, q: usize) -> (usize, usize) {
        (q / self.dz, q % self.dz)
    }

    /// Support of logical X: the first column.
    pub fn logical_x_support(&self) -> Vec<usize> {
        (0..self.dx).map(|r| self.data_index(r, 0)).collect()
    }

    /// Support of logical Z: the first row.
    pub fn logical_z_support(&self) -> Vec<usize> {
        (0..self.dz).map(|c| self.data_index(0, c)).collect()
    }

    /// Total physical qubits, data plus ancillas.
    pub fn qubit_count(&self) -> usize {
        self.n() + self.m()
    }

    /// Stabilizer outcomes of a data error, `bits` being z-bits for X-type
    /// and x-bits for Z-type checks.
    pub fn syndrome_of(&self, kind: StabKind, bits: &[bool]) -> Vec<bool> {
        self.ancillas(kind).map(|g| self.stabs[g].support().fold(false, |acc, q| acc ^ bits[q])).collect()
    }

    /// Structural checks on supports and the gate schedule.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(format!("invalid schedule: {msg}")));
        let (n, dx, dz) = (self.n(), self.dx, self.dz);
        if self.m1 != (dx + 1) * (dz - 1) / 2 || self.m2() != (dz + 1) * (dx - 1) / 2 {
            return bad(format!("ancilla counts {} / {}", self.m1, self.m2()));
        }
        for (g, s) in self.stabs.iter().enumerate() {
            let w = s.weight();
            let (r, c) = s.corner;
            let bulk = r >= 0 && c >= 0 && r < dx as i64 - 1 && c < dz as i64 - 1;
            if w != if bulk { 4 } else { 2 } {
                return bad(format!("stabilizer {g} has weight {w}"));
            }
        }
        for (t, pairs) in self.steps.iter().enumerate() {
            let mut seen = vec![false; n];
            for &(_, q) in pairs {
                if std::mem::replace(&mut seen[q], true) {
                    return bad(format!("data qubit {q} used twice at step {}", t + 1));
                }
            }
        }
        // X and Z checks must commute through the interleaved circuit: on the
        // shared qubits, the number where the X-check acts first is even.
        let time_of = |s: &Stabilizer, q: usize| s.schedule.iter().position(|&x| x == Some(q));
        for a in &self.stabs[..self.m1] {
            for b in &self.stabs[self.m1..] {
                let shared: Vec<usize> = a.support().filter(|q| b.support().any(|p| p == *q)).collect();
                if shared.len() % 2 == 1 {
                    return bad("checks overlap on an odd number of qubits".into());
                }
                let first = shared.iter().filter(|&&q| time_of(a, q) < time_of(b, q)).count();
                if first % 2 == 1 {
                    return bad(format!("checks at {:?} and {:?} do not commute in time", a.corner, b.corner));
                }
            }
        }
        // hook errors, two data errors spread from a mid-circuit ancilla fault,
        // must lie perpendicular to the logical they could shorten
        for s in &self.stabs {
            if s.weight() < 4 {
                continue;
            }
            let pair = [s.schedule[2].unwrap(), s.schedule[3].unwrap()];
            let (a, b) = (self.data_coord(pair[0]), self.data_coord(pair[1]));
            let ok = match s.kind {
                // X hooks feed the Z-check graph, whose logical runs along a column
                StabKind::X => a.0 == b.0,
                // Z hooks feed the X-check graph, whose logical runs along a row
                StabKind::Z => a.1 == b.1,
            };
            if !ok {
                return bad(format!("hook of {:?} parallel to its logical", s.corner));
            }
        }
        Ok(())
    }
}

/// Pauli frame over all data qubits (`0..n`) followed by all ancillas.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(qubits: usize) -> Self {
        Self { x: vec![false; qubits], z: vec![false; qubits] }
    }

    pub fn apply(&mut self, q: usize, p: Pauli) {
        self.x[q] ^= p.x();
        self.z[q] ^= p.z();
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x[q], self.z[q])
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.x[t] ^= self.x[c];
        self.z[c] ^= self.z[t];
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.z[b] ^= self.x[a];
        self.z[a] ^= self.x[b];
    }

    pub fn is_trivial(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }
}

/// Where a fault sits within one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Idle { data: usize },
    Prep { anc: usize },
    Gate { anc: usize, step: usize },
    Meas { anc: usize },
}

impl Site {
    /// Nontrivial errors this site can suffer. Flips are reported as `ZI`.
    pub fn faults(self) -> Vec<PauliTwoQubit> {
        match self {
            Site::Idle { .. } => [Pauli::X, Pauli::Z, Pauli::Y].map(|p| PauliTwoQubit::new(p, Pauli::I)).to_vec(),
            Site::Prep { .. } | Site::Meas { .. } => vec![PauliTwoQubit::new(Pauli::Z, Pauli::I)],
            Site::Gate { .. } => (1..16).map(PauliTwoQubit::from_index).collect(),
        }
    }
}

/// A single fault: location, round (1-based) and Pauli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fault {
    pub round: usize,
    pub site: Site,
    pub pauli: PauliTwoQubit,
}

/// Every fault site of one round, in circuit order.
pub fn round_sites(lattice: &Lattice) -> Vec<Site> {
    let mut v: Vec<Site> = (0..lattice.m()).map(|anc| Site::Prep { anc }).collect();
    v.extend((0..lattice.n()).map(|data| Site::Idle { data }));
    for step in 1..=4 {
        v.extend(lattice.step(step - 1).iter().map(|&(anc, _)| Site::Gate { anc, step }));
    }
    v.extend((0..lattice.m()).map(|anc| Site::Meas { anc }));
    v
}

/// Source of the errors applied while executing a round.
pub trait Noise {
    fn prep(&mut self, round: usize, anc: usize) -> bool;
    fn idle(&mut self, round: usize, data: usize) -> Pauli;
    fn gate(&mut self, round: usize, anc: usize, step: usize, kind: GateKind) -> PauliTwoQubit;
    fn meas(&mut self, round: usize, anc: usize) -> bool;
}

/// No errors at all.
pub struct Noiseless;

impl Noise for Noiseless {
    fn prep(&mut self, _: usize, _: usize) -> bool {
        false
    }
    fn idle(&mut self, _: usize, _: usize) -> Pauli {
        Pauli::I
    }
    fn gate(&mut self, _: usize, _: usize, _: usize, _: GateKind) -> PauliTwoQubit {
        PauliTwoQubit::IDENTITY
    }
    fn meas(&mut self, _: usize, _: usize) -> bool {
        false
    }
}

/// Exactly the listed faults, nothing else.
pub struct Injected<'a>(pub &'a [Fault]);

impl Injected<'_> {
    fn find(&self, round: usize, site: Site) -> PauliTwoQubit {
        self.0
            .iter()
            .filter(|f| f.round == round && f.site == site)
            .fold(PauliTwoQubit::IDENTITY, |acc, f| {
                PauliTwoQubit::from_index(acc.index() ^ f.pauli.index())
            })
    }
}

impl Noise for Injected<'_> {
    fn prep(&mut self, round: usize, anc: usize) -> bool {
        self.find(round, Site::Prep { anc }).p1.z()
    }
    fn idle(&mut self, round: usize, data: usize) -> Pauli {
        self.find(round, Site::Idle { data }).p1
    }
    fn gate(&mut self, round: usize, anc: usize, step: usize, _: GateKind) -> PauliTwoQubit {
        self.find(round, Site::Gate { anc, step })
    }
    fn meas(&mut self, round: usize, anc: usize) -> bool {
        self.find(round, Site::Meas { anc }).p1.z()
    }
}

/// Channel-sampled errors; every location's table goes into the store.
pub struct Sampled<'a, R: Rng + ?Sized> {
    pub channel: &'a Channel,
    pub rng: &'a mut R,
    pub pe: &'a mut PeStore,
    /// nontrivial errors drawn so far
    pub faults: Vec<Fault>,
}

impl<'a, R: Rng + ?Sized> Sampled<'a, R> {
    pub fn new(channel: &'a Channel, rng: &'a mut R, pe: &'a mut PeStore) -> Self {
        Self { channel, rng, pe, faults: Vec::new() }
    }
}

impl<R: Rng + ?Sized> Sampled<'_, R> {
    fn record(&mut self, round: usize, site: Site, pauli: PauliTwoQubit) {
        if !pauli.is_identity() {
            self.faults.push(Fault { round, site, pauli });
        }
    }
}

impl<R: Rng + ?Sized> Noise for Sampled<'_, R> {
    fn prep(&mut self, round: usize, anc: usize) -> bool {
        let o = self.channel.prep(self.rng);
        self.pe.set_flip(round, Site::Prep { anc }, o.probs.get(1));
        self.record(round, Site::Prep { anc }, o.sampled_error);
        o.sampled_error.p1.z()
    }
    fn idle(&mut self, round: usize, data: usize) -> Pauli {
        let o = self.channel.idle(self.rng);
        self.pe.set_idle(round, data, &o.probs);
        self.record(round, Site::Idle { data }, o.sampled_error);
        o.sampled_error.p1
    }
    fn gate(&mut self, round: usize, anc: usize, step: usize, kind: GateKind) -> PauliTwoQubit {
        let o = self.channel.gate(kind, self.rng);
        self.pe.set_gate(round, anc, step, &o.probs);
        self.record(round, Site::Gate { anc, step }, o.sampled_error);
        o.sampled_error
    }
    fn meas(&mut self, round: usize, anc: usize) -> bool {
        let o = self.channel.meas(self.rng);
        self.pe.set_flip(round, Site::Meas { anc }, o.probs.get(1));
        self.record(round, Site::Meas { anc }, o.sampled_error);
        o.sampled_error.p1.z()
    }
}

/// Executes syndrome round `round` on `frame` and returns the measured
/// outcomes of all `m1 + m2` ancillas.
pub fn execute_round<N: Noise + ?Sized>(lattice: &Lattice, frame: &mut PauliFrame, noise: &mut N, round: usize) -> Vec<bool> {
    let n = lattice.n();
    for g in 0..lattice.m() {
        frame.x[n + g] = false;
        frame.z[n + g] = noise.prep(round, g);
    }
    for q in 0..n {
        let p = noise.idle(round, q);
        frame.apply(q, p);
    }
    for step in 1..=4 {
        for &(g, q) in lattice.step(step - 1) {
            let kind = lattice.stabilizer(g).kind.gate();
            match kind {
                GateKind::Cnot => frame.cnot(n + g, q),
                GateKind::Cz => frame.cz(n + g, q),
            }
            let e = noise.gate(round, g, step, kind);
            frame.apply(n + g, e.p1);
            frame.apply(q, e.p2);
        }
    }
    (0..lattice.m()).map(|g| frame.z[n + g] ^ noise.meas(round, g)).collect()
}

/// One noisy round with channel-sampled errors, recording beliefs in `pe`.
pub fn run_round<R: Rng + ?Sized>(
    lattice: &Lattice,
    frame: &mut PauliFrame,
    channel: &Channel,
    rng: &mut R,
    pe: &mut PeStore,
    round: usize,
) -> Vec<bool> {
    let mut noise = Sampled::new(channel, rng, pe);
    execute_round(lattice, frame, &mut noise, round)
}

/// Flat indexing of the per-round probability record. Each round holds
/// `3n` idle entries `(p_X, p_Y, p_Z)`, then 62 entries per ancilla:
/// preparation, 4 blocks of 15 gate entries, measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeLayout {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub rounds: usize,
}

/// Offset of a two-qubit Pauli within a 15-entry gate block, in the order
/// IX, IZ, IY, XI, XX, ..., YY (1-based).
pub fn gate_offset(p: PauliTwoQubit) -> usize {
    (p.p1.bits() * 4 + p.p2.bits()) as usize
}

impl PeLayout {
    pub fn new(lattice: &Lattice, rounds: usize) -> Self {
        Self { n: lattice.n(), m1: lattice.m1(), m2: lattice.m2(), rounds }
    }

    pub fn block(&self) -> usize {
        3 * self.n + 62 * self.m1 + 62 * self.m2
    }

    pub fn len(&self) -> usize {
        self.rounds * self.block()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 1-based base index of data qubit `e` (1-based) in round `j`; the
    /// entries `+1, +2, +3` are X, Y, Z.
    pub fn nk(&self, j: usize, e: usize) -> usize {
        self.block() * (j - 1) + 3 * (e - 1)
    }

    /// 1-based index preceding the 15 entries of time step `ts` of X-ancilla `k`.
    pub fn m1k(&self, ts: usize, k: usize, j: usize) -> usize {
        self.block() * (j - 1) + 3 * self.n + 62 * (k - 1) + 1 + 15 * (ts - 1)
    }

    /// Same for Z-ancilla `k`.
    pub fn m2k(&self, ts: usize, k: usize, j: usize) -> usize {
        self.m1k(ts, k, j) + 62 * self.m1
    }

    fn anc_base0(&self, j: usize, g: usize) -> usize {
        self.block() * (j - 1) + 3 * self.n + 62 * g
    }

    /// 0-based flat index of `pauli` at `site` in round `j`.
    pub fn slot(&self, j: usize, site: Site, pauli: PauliTwoQubit) -> usize {
        debug_assert!(j >= 1 && j <= self.rounds);
        match site {
            Site::Idle { data } => {
                let off = match pauli.p1 {
                    Pauli::X => 0,
                    Pauli::Y => 1,
                    Pauli::Z => 2,
                    Pauli::I => unreachable!("identity has no slot"),
                };
                self.block() * (j - 1) + 3 * data + off
            }
            Site::Prep { anc } => self.anc_base0(j, anc),
            Site::Gate { anc, step } => self.anc_base0(j, anc) + 15 * (step - 1) + gate_offset(pauli),
            Site::Meas { anc } => self.anc_base0(j, anc) + 61,
        }
    }
}

/// Per-shot record of the error beliefs of every location.
#[derive(Debug, Clone, PartialEq)]
pub struct PeStore {
    layout: PeLayout,
    data: Vec<f64>,
}

impl PeStore {
    pub fn new(layout: PeLayout) -> Self {
        Self { layout, data: vec![0.0; layout.len()] }
    }

    /// Every location holding its marginal table.
    pub fn from_marginals(lattice: &Lattice, rounds: usize, channel: &Channel) -> Self {
        let mut pe = Self::new(PeLayout::new(lattice, rounds));
        for j in 1..=rounds {
            for site in round_sites(lattice) {
                match site {
                    Site::Idle { data } => pe.set_idle(j, data, channel.marginal(LocationKind::Idle)),
                    Site::Prep { .. } => pe.set_flip(j, site, channel.marginal(LocationKind::PrepPlus).get(1)),
                    Site::Meas { .. } => pe.set_flip(j, site, channel.marginal(LocationKind::MeasX).get(1)),
                    Site::Gate { anc, step } => {
                        let kind = lattice.stabilizer(anc).kind.gate();
                        pe.set_gate(j, anc, step, channel.marginal(kind.location_kind()))
                    }
                }
            }
        }
        pe
    }

    pub fn layout(&self) -> &PeLayout {
        &self.layout
    }

    pub fn set_idle(&mut self, j: usize, data: usize, t: &ProbTable) {
        let base = self.layout.slot(j, Site::Idle { data }, PauliTwoQubit::new(Pauli::X, Pauli::I));
        self.data[base] = t.get(Pauli::X as usize);
        self.data[base + 1] = t.get(Pauli::Y as usize);
        self.data[base + 2] = t.get(Pauli::Z as usize);
    }

    pub fn set_flip(&mut self, j: usize, site: Site, q: f64) {
        let i = self.layout.slot(j, site, PauliTwoQubit::new(Pauli::Z, Pauli::I));
        self.data[i] = q;
    }

    pub fn set_gate(&mut self, j: usize, anc: usize, step: usize, t: &ProbTable) {
        for i in 1..16 {
            let p = PauliTwoQubit::from_index(i);
            let s = self.layout.slot(j, Site::Gate { anc, step }, p);
            self.data[s] = t.two_qubit_entry(p);
        }
    }

    /// 1-based access, `Pe[q]`.
    pub fn get(&self, q: usize) -> Result<f64> {
        q.checked_sub(1)
            .and_then(|i| self.data.get(i).copied())
            .ok_or(Error::StoreIndex { index: q, len: self.data.len() })
    }

    /// The flat vector; element `i` is `Pe[i + 1]`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.data.clone()
    }

    /// `index,value` lines with 1-based indices.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        let mut body = String::from("index,value\n");
        for (i, v) in self.data.iter().enumerate() {
            body.push_str(&format!("{},{v:e}\n", i + 1));
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MemoryOutcome {
    pub logical_x_failed: bool,
    pub logical_z_failed: bool,
}

/// Per-shot result with the diagnostics used by the experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub outcome: MemoryOutcome,
    /// nontrivial errors sampled during the shot
    pub faults: Vec<Fault>,
    pub syndromes: Vec<Vec<bool>>,
}

/// Memory experiment set-up for one distance and channel: `d` noisy rounds
/// then one perfect round, decoded by matching on both check graphs.
#[derive(Debug, Clone)]
pub struct MemoryExperiment {
    pub lattice: Lattice,
    pub rounds: usize,
    pub channel: Channel,
    pub graphs: [MatchingGraph; 2],
    static_weights: [Vec<f64>; 2],
}

impl MemoryExperiment {
    pub fn new(d: usize, channel: Channel) -> Result<Self> {
        let lattice = Lattice::square(d)?;
        let rounds = d;
        let graphs = matcher::enumerate_edges(&lattice, rounds)?;
        let marg = PeStore::from_marginals(&lattice, rounds, &channel);
        let static_weights = [matcher::assign_weights(&graphs[0], &marg), matcher::assign_weights(&graphs[1], &marg)];
        Ok(Self { lattice, rounds, channel, graphs, static_weights })
    }

    pub fn static_weights(&self, basis: StabKind) -> &[f64] {
        &self.static_weights[basis as usize]
    }

    pub fn run_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MemoryOutcome> {
        self.run_shot_detailed(rng).map(|r| r.outcome)
    }

    pub fn run_shot_detailed<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ShotRecord> {
        let mut pe = PeStore::new(PeLayout::new(&self.lattice, self.rounds));
        let mut frame = PauliFrame::new(self.lattice.qubit_count());
        let mut syndromes = Vec::with_capacity(self.rounds + 1);
        let mut noise = Sampled::new(&self.channel, rng, &mut pe);
        for j in 1..=self.rounds {
            syndromes.push(execute_round(&self.lattice, &mut frame, &mut noise, j));
        }
        let faults = noise.faults;
        syndromes.push(execute_round(&self.lattice, &mut frame, &mut Noiseless, self.rounds + 1));
        let analog = self.channel.analog.then_some(&pe);
        let outcome = self.decode(&frame, &syndromes, analog)?;
        Ok(ShotRecord { outcome, faults, syndromes })
    }

    /// Noise-free shot with the given faults, decoded with marginal weights
    /// or, if given, weights from `pe`.
    pub fn run_with_faults(&self, faults: &[Fault], pe: Option<&PeStore>) -> Result<MemoryOutcome> {
        let mut frame = PauliFrame::new(self.lattice.qubit_count());
        let mut noise = Injected(faults);
        let mut syndromes: Vec<Vec<bool>> =
            (1..=self.rounds).map(|j| execute_round(&self.lattice, &mut frame, &mut noise, j)).collect();
        syndromes.push(execute_round(&self.lattice, &mut frame, &mut Noiseless, self.rounds + 1));
        self.decode(&frame, &syndromes, pe)
    }

    fn decode(&self, frame: &PauliFrame, syndromes: &[Vec<bool>], pe: Option<&PeStore>) -> Result<MemoryOutcome> {
        let mut corrections = [Vec::new(), Vec::new()];
        for (b, basis) in [StabKind::X, StabKind::Z].into_iter().enumerate() {
            let graph = &self.graphs[b];
            let events = matcher::extract_events(&self.lattice, basis, syndromes);
            corrections[b] = if events.is_empty() {
                vec![false; self.lattice.n()]
            } else {
                let dynamic;
                let w = match pe {
                    Some(pe) => {
                        dynamic = matcher::assign_weights(graph, pe);
                        &dynamic[..]
                    }
                    None => &self.static_weights[b][..],
                };
                matcher::mwpm_decode(graph, w, &events)?
            };
        }
        Ok(matcher::adjudicate(&self.lattice, frame, &corrections[0], &corrections[1]))
    }
}

/// Builds the experiment and runs a single shot.
pub fn run_memory_experiment<R: Rng + ?Sized>(
    d: usize,
    params: crate::GkpParams,
    use_analog: bool,
    rng: &mut R,
) -> Result<MemoryOutcome> {
    let channel = Channel::new(params, crate::channel::GateDecoder::Ml, use_analog);
    MemoryExperiment::new(d, channel)?.run_shot(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GateDecoder;
    use crate::rng::shot_rng;
    use crate::GkpParams;

    #[test]
    fn lattice_counts() {
        let l = Lattice::square(3).unwrap();
        assert_eq!((l.n(), l.m1(), l.m2()), (9, 4, 4));
        let l = Lattice::square(7).unwrap();
        assert_eq!((l.n(), l.m1(), l.m2()), (49, 24, 24));
        assert_eq!(l.qubit_count(), 97);
        let r = Lattice::new(3, 5).unwrap();
        assert_eq!((r.n(), r.m1(), r.m2()), (15, 8, 6));
        for bad in [1, 2, 4, 0] {
            assert!(matches!(Lattice::square(bad), Err(Error::InvalidDistance(_))));
        }
    }

    #[test]
    fn schedules_valid_for_all_distances() {
        for d in [3, 5, 7, 9, 11] {
            let l = Lattice::square(d).unwrap();
            l.validate().unwrap();
            for s in l.stabilizers() {
                let used: Vec<usize> = s.schedule.iter().enumerate().filter(|(_, q)| q.is_some()).map(|(t, _)| t).collect();
                let mut dedup = used.clone();
                dedup.dedup();
                assert_eq!(used, dedup);
            }
        }
        Lattice::new(5, 3).unwrap().validate().unwrap();
    }

    #[test]
    fn swapped_order_is_rejected() {
        let mut l = Lattice::square(5).unwrap();
        // N-order on one bulk X-check breaks commutation with its neighbours
        let g = l.stabs.iter().position(|s| s.kind == StabKind::X && s.weight() == 4).unwrap();
        l.stabs[g].schedule.swap(1, 2);
        l.steps = Default::default();
        for (a, s) in l.stabs.iter().enumerate() {
            for (t, q) in s.schedule.iter().enumerate() {
                if let Some(q) = q {
                    l.steps[t].push((a, *q));
                }
            }
        }
        assert!(l.validate().is_err());
    }

    #[test]
    fn logicals_commute_with_checks() {
        let l = Lattice::square(5).unwrap();
        let mut z = vec![false; l.n()];
        for q in l.logical_z_support() {
            z[q] = true;
        }
        assert!(l.syndrome_of(StabKind::X, &z).iter().all(|b| !b));
        let mut x = vec![false; l.n()];
        for q in l.logical_x_support() {
            x[q] = true;
        }
        assert!(l.syndrome_of(StabKind::Z, &x).iter().all(|b| !b));
        let shared = l.logical_x_support().iter().filter(|q| l.logical_z_support().contains(q)).count();
        assert_eq!(shared, 1);
    }

    #[test]
    fn noiseless_round_is_trivial() {
        let l = Lattice::square(3).unwrap();
        let mut f = PauliFrame::new(l.qubit_count());
        let s = execute_round(&l, &mut f, &mut Noiseless, 1);
        assert!(s.iter().all(|b| !b));
        assert!(f.is_trivial());

        let params = GkpParams::from_db(80.0, 1.0).unwrap();
        let ch = Channel::new(params, GateDecoder::Ml, true);
        let mut pe = PeStore::new(PeLayout::new(&l, 1));
        let mut rng = shot_rng(3, 0);
        let s = run_round(&l, &mut f, &ch, &mut rng, &mut pe, 1);
        assert!(s.iter().all(|b| !b));
        assert!(f.is_trivial());
    }

    fn single(l: &Lattice, site: Site, pauli: &str) -> (Vec<bool>, PauliFrame) {
        let f = [Fault { round: 1, site, pauli: pauli.parse().unwrap() }];
        let mut frame = PauliFrame::new(l.qubit_count());
        let s = execute_round(l, &mut frame, &mut Injected(&f), 1);
        (s, frame)
    }

    #[test]
    fn ancilla_z_after_cnot_flips_only_its_check() {
        let l = Lattice::square(3).unwrap();
        for g in l.ancillas(StabKind::X) {
            if l.stabilizer(g).schedule[1].is_none() {
                continue;
            }
            let (s, frame) = single(&l, Site::Gate { anc: g, step: 2 }, "ZI");
            let flipped: Vec<usize> = (0..l.m()).filter(|&a| s[a]).collect();
            assert_eq!(flipped, vec![g]);
            assert!(frame.x[..l.n()].iter().chain(&frame.z[..l.n()]).all(|b| !b));
        }
    }

    #[test]
    fn data_x_after_first_cnot_matches_hand_propagation() {
        // centre check (0,0) at d = 3: step 1 touches data (0,0)
        let l = Lattice::square(3).unwrap();
        let g = l.stabilizers().iter().position(|s| s.corner == (0, 0)).unwrap();
        assert_eq!(l.stabilizer(g).kind, StabKind::X);
        let q = l.stabilizer(g).schedule[0].unwrap();
        assert_eq!(q, 0);
        let (s, frame) = single(&l, Site::Gate { anc: g, step: 1 }, "IX");
        // the corner qubit sits in a single Z-check, the left boundary one
        let expect: Vec<usize> = l
            .ancillas(StabKind::Z)
            .filter(|&a| l.stabilizer(a).support().any(|p| p == q))
            .collect();
        assert_eq!(expect.len(), 1);
        assert_eq!(l.stabilizer(expect[0]).corner, (0, -1));
        let flipped: Vec<usize> = (0..l.m()).filter(|&a| s[a]).collect();
        assert_eq!(flipped, expect);
        assert!(frame.x[q]);
        assert_eq!(frame.x[..l.n()].iter().filter(|b| **b).count(), 1);
    }

    #[test]
    fn hook_spreads_to_remaining_targets() {
        let l = Lattice::square(5).unwrap();
        let g = l.stabilizers().iter().position(|s| s.kind == StabKind::X && s.weight() == 4).unwrap();
        let (_, frame) = single(&l, Site::Gate { anc: g, step: 2 }, "XI");
        let sched = l.stabilizer(g).schedule;
        let xs: Vec<usize> = (0..l.n()).filter(|&q| frame.x[q]).collect();
        let mut want = vec![sched[2].unwrap(), sched[3].unwrap()];
        want.sort();
        assert_eq!(xs, want);
    }

    #[test]
    fn pe_layout_lengths_and_indices() {
        let l = Lattice::square(3).unwrap();
        let lay = PeLayout::new(&l, 1);
        assert_eq!(lay.len(), 523);
        assert_eq!(PeLayout::new(&l, 3).len(), 3 * 523);
        assert_eq!(gate_offset("IX".parse().unwrap()), 1);
        assert_eq!(gate_offset("IY".parse().unwrap()), 3);
        assert_eq!(gate_offset("XI".parse().unwrap()), 4);
        assert_eq!(gate_offset("ZZ".parse().unwrap()), 10);
        assert_eq!(gate_offset("YY".parse().unwrap()), 15);
        let lay = PeLayout::new(&l, 3);
        // slots agree with the 1-based index functions
        for j in 1..=3 {
            for e in 1..=9 {
                let s = lay.slot(j, Site::Idle { data: e - 1 }, PauliTwoQubit::new(Pauli::Y, Pauli::I));
                assert_eq!(s + 1, lay.nk(j, e) + 2);
            }
            for k in 1..=4 {
                for ts in 1..=4 {
                    let p: PauliTwoQubit = "ZX".parse().unwrap();
                    let s1 = lay.slot(j, Site::Gate { anc: k - 1, step: ts }, p);
                    assert_eq!(s1 + 1, lay.m1k(ts, k, j) + gate_offset(p));
                    let s2 = lay.slot(j, Site::Gate { anc: 4 + k - 1, step: ts }, p);
                    assert_eq!(s2 + 1, lay.m2k(ts, k, j) + gate_offset(p));
                }
            }
        }
        // all slots of one round tile the round block exactly once, with
        // unused gate blocks of weight-2 checks the only gaps
        let lay1 = PeLayout::new(&l, 1);
        let mut hit = vec![0u8; lay1.len()];
        for site in round_sites(&l) {
            for p in site.faults() {
                hit[lay1.slot(1, site, p)] += 1;
            }
        }
        assert!(hit.iter().all(|&h| h <= 1));
        let unused = 15 * l.stabilizers().iter().map(|s| 4 - s.weight()).sum::<usize>();
        assert_eq!(hit.iter().filter(|&&h| h == 0).count(), unused);
    }

    #[test]
    fn pe_store_records_tables_in_place() {
        let l = Lattice::square(3).unwrap();
        let params = GkpParams::from_db(10.0, 1.0).unwrap();
        let ch = Channel::new(params, GateDecoder::Ml, false);
        let pe = PeStore::from_marginals(&l, 2, &ch);
        let idle = ch.marginal(LocationKind::Idle);
        let lay = *pe.layout();
        for e in 1..=9 {
            assert_eq!(pe.get(lay.nk(2, e) + 1).unwrap(), idle.get(1));
            assert_eq!(pe.get(lay.nk(2, e) + 2).unwrap(), idle.get(3));
            assert_eq!(pe.get(lay.nk(2, e) + 3).unwrap(), idle.get(2));
        }
        let cx = ch.marginal(LocationKind::Cnot);
        let cz = ch.marginal(LocationKind::Cz);
        for (g, s) in l.stabilizers().iter().enumerate() {
            for ts in 1..=4 {
                let base = if g < 4 { lay.m1k(ts, g + 1, 1) } else { lay.m2k(ts, g - 3, 1) };
                for i in 1..16usize {
                    let p = PauliTwoQubit::new(Pauli::from_bits(i & 4 != 0, i & 8 != 0), Pauli::from_bits(i & 1 != 0, i & 2 != 0));
                    assert_eq!(gate_offset(p), i);
                    let want = if s.schedule[ts - 1].is_none() {
                        0.0
                    } else if s.kind == StabKind::X {
                        cx.two_qubit_entry(p)
                    } else {
                        cz.two_qubit_entry(p)
                    };
                    assert_eq!(pe.get(base + i).unwrap(), want);
                }
            }
            let base = lay.m1k(1, g + 1, 1) - 1;
            assert_eq!(pe.get(base + 1).unwrap(), ch.marginal(LocationKind::PrepPlus).get(1));
            assert_eq!(pe.get(base + 62).unwrap(), ch.marginal(LocationKind::MeasX).get(1));
        }
        assert!(pe.get(0).is_err());
        assert!(pe.get(2 * 523 + 1).is_err());
    }

    #[test]
    fn pe_csv_dump() {
        let l = Lattice::square(3).unwrap();
        let ch = Channel::new(GkpParams::from_db(10.0, 1.0).unwrap(), GateDecoder::Ml, false);
        let pe = PeStore::from_marginals(&l, 1, &ch);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pe.csv");
        pe.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 524);
        assert!(text.lines().nth(1).unwrap().starts_with("1,"));
    }

    #[test]
    fn sampled_shots_are_reproducible() {
        let params = GkpParams::from_db(10.0, 1.0).unwrap();
        let exp = MemoryExperiment::new(3, Channel::new(params, GateDecoder::Ml, true)).unwrap();
        for shot in 0..20 {
            let a = exp.run_shot_detailed(&mut shot_rng(9, shot)).unwrap();
            let b = exp.run_shot_detailed(&mut shot_rng(9, shot)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn huge_squeezing_never_fails() {
        let params = GkpParams::from_db(60.0, 1.0).unwrap();
        let mut rng = shot_rng(1, 0);
        for analog in [false, true] {
            let out = run_memory_experiment(3, params, analog, &mut rng).unwrap();
            assert_eq!(out, MemoryOutcome::default());
        }
    }
}
