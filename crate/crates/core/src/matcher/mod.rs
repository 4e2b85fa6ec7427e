//! Space-time matching graphs from single-fault propagation, weights from
//! the per-shot belief record, exact matching and the logical verdict.

pub mod blossom;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{
    execute_round, round_sites, Fault, Injected, Lattice, MemoryOutcome, PauliFrame, PeLayout, PeStore, Site, StabKind,
};

/// Probability floor and ceiling before taking logs.
pub const P_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Bulk2D,
    Boundary2D,
    Vertical,
    SpaceTime,
}

/// One fault location feeding an edge, with the flat store slots of the
/// Paulis at that location that trigger the edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub round: usize,
    pub site: Site,
    pub slots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    /// the boundary vertex when the edge has one event
    pub v: usize,
    pub kind: EdgeKind,
    pub sources: Vec<Source>,
    /// data qubits flipped by the edge
    pub flips: Vec<usize>,
    /// whether `flips` crosses the logical representative an odd number of times
    pub logical: bool,
}

/// Graph of one check type. Vertex `(j - 1) * checks + s` is check `s` in
/// round `j`; vertex `rounds * checks` is the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingGraph {
    pub basis: StabKind,
    pub checks: usize,
    /// noisy rounds plus the final perfect round
    pub rounds: usize,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MatchingGraph {
    pub fn from_edges(basis: StabKind, checks: usize, rounds: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); rounds * checks + 1];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        Self { basis, checks, rounds, edges, adjacency }
    }

    pub fn vertex(&self, round: usize, check: usize) -> usize {
        (round - 1) * self.checks + check
    }

    pub fn boundary(&self) -> usize {
        self.rounds * self.checks
    }

    pub fn vertex_count(&self) -> usize {
        self.boundary() + 1
    }

    /// `(round, check)` of a non-boundary vertex.
    pub fn coord(&self, v: usize) -> Option<(usize, usize)> {
        (v < self.boundary()).then(|| (v / self.checks + 1, v % self.checks))
    }

    fn kind_of(&self, u: usize, v: usize) -> EdgeKind {
        match (self.coord(u), self.coord(v)) {
            (_, None) | (None, _) => EdgeKind::Boundary2D,
            (Some((ru, _)), Some((rv, _))) if ru == rv => EdgeKind::Bulk2D,
            (Some((_, su)), Some((_, sv))) if su == sv => EdgeKind::Vertical,
            _ => EdgeKind::SpaceTime,
        }
    }

    /// Edges with their weights, as pretty JSON.
    pub fn to_json(&self, weights: &[f64]) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            basis: StabKind,
            checks: usize,
            rounds: usize,
            boundary: usize,
            edges: Vec<(&'a Edge, f64)>,
        }
        let d = Dump {
            basis: self.basis,
            checks: self.checks,
            rounds: self.rounds,
            boundary: self.boundary(),
            edges: self.edges.iter().zip(weights.iter().copied()).collect(),
        };
        serde_json::to_string_pretty(&d).map_err(|e| Error::Matching(e.to_string()))
    }

    pub fn write_json(&self, path: &Path, weights: &[f64]) -> Result<()> {
        std::fs::write(path, self.to_json(weights)?).map_err(|e| Error::io(path, e))
    }
}

/// Data-error bits a graph sees: z for X-checks, x for Z-checks.
fn seen_bits(basis: StabKind, frame: &PauliFrame, n: usize) -> Vec<bool> {
    match basis {
        StabKind::X => frame.z[..n].to_vec(),
        StabKind::Z => frame.x[..n].to_vec(),
    }
}

/// Representative crossed by a logical error of the graph's type.
fn logical_support(lattice: &Lattice, basis: StabKind) -> Vec<usize> {
    match basis {
        StabKind::X => lattice.logical_x_support(),
        StabKind::Z => lattice.logical_z_support(),
    }
}

/// Builds both graphs (X-checks first) for `t` noisy rounds by propagating
/// every single fault through one round.
pub fn enumerate_edges(lattice: &Lattice, t: usize) -> Result<[MatchingGraph; 2]> {
    let n = lattice.n();
    let layout = PeLayout::new(lattice, t);
    let mut props = Vec::new();
    for site in round_sites(lattice) {
        for pauli in site.faults() {
            let f = [Fault { round: 1, site, pauli }];
            let mut frame = PauliFrame::new(lattice.qubit_count());
            let a = execute_round(lattice, &mut frame, &mut Injected(&f), 1);
            props.push((site, pauli, a, frame));
        }
    }
    let build = |basis: StabKind| -> Result<MatchingGraph> {
        let anc = lattice.ancillas(basis);
        let checks = anc.len();
        let support = logical_support(lattice, basis);
        let boundary = (t + 1) * checks;
        #[derive(Default)]
        struct Group {
            flips: Vec<usize>,
            sources: BTreeMap<(usize, Site), Vec<usize>>,
        }
        let mut groups: BTreeMap<(usize, usize, bool), Group> = BTreeMap::new();
        for (site, pauli, a, frame) in &props {
            let bits = seen_bits(basis, frame, n);
            let he = lattice.syndrome_of(basis, &bits);
            let first: Vec<usize> = (0..checks).filter(|&s| a[anc.start + s]).collect();
            let second: Vec<usize> = (0..checks).filter(|&s| a[anc.start + s] ^ he[s]).collect();
            let logical = support.iter().filter(|&&q| bits[q]).count() % 2 == 1;
            let count = first.len() + second.len();
            if count > 2 {
                return Err(Error::TooManyEvents { count });
            }
            if count == 0 {
                if logical {
                    return Err(Error::Matching(format!("undetectable logical error from {site:?} {pauli}")));
                }
                continue;
            }
            for j in 1..=t {
                let mut ev: Vec<usize> = first.iter().map(|s| (j - 1) * checks + s).collect();
                ev.extend(second.iter().map(|s| j * checks + s));
                let (u, v) = if ev.len() == 1 { (ev[0], boundary) } else { (ev[0].min(ev[1]), ev[0].max(ev[1])) };
                let g = groups.entry((u, v, logical)).or_default();
                if g.sources.is_empty() {
                    g.flips = (0..n).filter(|&q| bits[q]).collect();
                }
                g.sources.entry((j, *site)).or_default().push(layout.slot(j, *site, *pauli));
            }
        }
        let proto = MatchingGraph::from_edges(basis, checks, t + 1, Vec::new());
        let edges = groups
            .into_iter()
            .map(|((u, v, logical), g)| Edge {
                u,
                v,
                kind: proto.kind_of(u, v),
                sources: g.sources.into_iter().map(|((round, site), slots)| Source { round, site, slots }).collect(),
                flips: g.flips,
                logical,
            })
            .collect();
        Ok(MatchingGraph::from_edges(basis, checks, t + 1, edges))
    };
    Ok([build(StabKind::X)?, build(StabKind::Z)?])
}

/// Leading-order probability that exactly one of independent sources fires.
pub fn edge_probability(ps: &[f64]) -> f64 {
    let k = ps.len();
    let mut suffix = vec![1.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] * (1.0 - ps[i]);
    }
    let mut prefix = 1.0;
    let mut total = 0.0;
    for i in 0..k {
        total += ps[i] * prefix * suffix[i + 1];
        prefix *= 1.0 - ps[i];
    }
    total
}

/// `-ln p` with `p` clamped away from 0 and 1.
pub fn weight_of(p: f64) -> f64 {
    -p.clamp(P_CLAMP, 1.0 - P_CLAMP).ln()
}

/// Edge weights from the entries of a belief record.
pub fn assign_weights(graph: &MatchingGraph, pe: &PeStore) -> Vec<f64> {
    let flat = pe.as_slice();
    let mut ps = Vec::new();
    graph
        .edges
        .iter()
        .map(|e| {
            ps.clear();
            ps.extend(e.sources.iter().map(|s| s.slots.iter().map(|&i| flat[i]).sum::<f64>()));
            weight_of(edge_probability(&ps))
        })
        .collect()
}

/// Vertices where a check's outcome changed from the previous round, in
/// (round, check) order. The first round compares against all zeros.
pub fn extract_events(lattice: &Lattice, basis: StabKind, syndromes: &[Vec<bool>]) -> Vec<usize> {
    let anc = lattice.ancillas(basis);
    let checks = anc.len();
    let mut ev = Vec::new();
    for (j, s) in syndromes.iter().enumerate() {
        for c in 0..checks {
            let prev = if j == 0 { false } else { syndromes[j - 1][anc.start + c] };
            if s[anc.start + c] ^ prev {
                ev.push(j * checks + c);
            }
        }
    }
    ev
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // min-heap on distance, then vertex
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

struct Tree {
    dist: Vec<f64>,
    pred: Vec<usize>,
}

const NO_EDGE: usize = usize::MAX;

/// Shortest paths from `src`, never passing through the boundary vertex.
/// Stops once every vertex in `targets` is settled.
fn dijkstra(graph: &MatchingGraph, weights: &[f64], src: usize, targets: &[usize]) -> Tree {
    let nv = graph.vertex_count();
    let boundary = graph.boundary();
    let mut dist = vec![f64::INFINITY; nv];
    let mut pred = vec![NO_EDGE; nv];
    let mut done = vec![false; nv];
    let mut want = vec![false; nv];
    for &t in targets {
        want[t] = true;
    }
    let mut left = targets.iter().filter(|&&t| t != src).count();
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Key(0.0, src));
    while let Some(Key(d, v)) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if want[v] && v != src {
            left -= 1;
            if left == 0 {
                break;
            }
        }
        if v == boundary {
            continue;
        }
        for &(w, k) in &graph.adjacency[v] {
            let nd = d + weights[k];
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = k;
                heap.push(Key(nd, w));
            }
        }
    }
    Tree { dist, pred }
}

fn walk(graph: &MatchingGraph, tree: &Tree, mut v: usize, src: usize, out: &mut [bool]) {
    while v != src {
        let e = &graph.edges[tree.pred[v]];
        for &q in &e.flips {
            out[q] ^= true;
        }
        v = if e.u == v { e.v } else { e.u };
    }
}

/// Result of matching one event set.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(event, Some(partner))` for pairs, `(event, None)` for boundary routes
    pub pairs: Vec<(usize, Option<usize>)>,
    pub cost: f64,
    /// data-qubit flips of the matched paths
    pub correction: Vec<bool>,
}

const COST_SCALE: f64 = 1e8;
const BIG: i64 = 1_000_000_000_000_000;

/// Exact minimum-weight matching of `events`, each paired with another
/// event or routed to the boundary.
pub fn mwpm_match(graph: &MatchingGraph, weights: &[f64], events: &[usize], n: usize) -> Result<Matching> {
    let k = events.len();
    let mut correction = vec![false; n];
    if k == 0 {
        return Ok(Matching { pairs: Vec::new(), cost: 0.0, correction });
    }
    let boundary = graph.boundary();
    let mut targets = events.to_vec();
    targets.push(boundary);
    let trees: Vec<Tree> = events.iter().map(|&s| dijkstra(graph, weights, s, &targets)).collect();
    let scaled = |c: f64| BIG - (c * COST_SCALE).round() as i64;
    let mut edges = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in i + 1..k {
            let d = trees[i].dist[events[j]];
            if d.is_finite() {
                edges.push((i, j, scaled(d)));
            }
        }
        let b = trees[i].dist[boundary];
        if b.is_finite() {
            edges.push((i, k + i, scaled(b)));
        }
        for j in i + 1..k {
            edges.push((k + i, k + j, BIG));
        }
    }
    let mate = blossom::max_weight_matching(2 * k, &edges, true);
    let mut pairs = Vec::with_capacity(k);
    let mut cost = 0.0;
    for i in 0..k {
        match mate[i] {
            Some(j) if j < k => {
                if i < j {
                    pairs.push((events[i], Some(events[j])));
                    cost += trees[i].dist[events[j]];
                    walk(graph, &trees[i], events[j], events[i], &mut correction);
                }
            }
            Some(j) if j == k + i => {
                pairs.push((events[i], None));
                cost += trees[i].dist[boundary];
                walk(graph, &trees[i], boundary, events[i], &mut correction);
            }
            _ => return Err(Error::Matching(format!("event {} left unmatched", events[i]))),
        }
    }
    Ok(Matching { pairs, cost, correction })
}

/// Data-qubit correction for one graph.
pub fn mwpm_decode(graph: &MatchingGraph, weights: &[f64], events: &[usize]) -> Result<Vec<bool>> {
    let n = graph.edges.iter().flat_map(|e| e.flips.iter().copied()).max().map_or(0, |q| q + 1);
    mwpm_match(graph, weights, events, n).map(|m| m.correction)
}

/// Failure flags of the residual `frame + corrections`. `corr_x` comes from
/// the X-check graph (z flips), `corr_z` from the Z-check graph (x flips).
pub fn adjudicate(lattice: &Lattice, frame: &PauliFrame, corr_x: &[bool], corr_z: &[bool]) -> MemoryOutcome {
    let bit = |v: &[bool], q: usize| v.get(q).copied().unwrap_or(false);
    let logical_z_failed = lattice.logical_x_support().iter().fold(false, |acc, &q| acc ^ frame.z[q] ^ bit(corr_x, q));
    let logical_x_failed = lattice.logical_z_support().iter().fold(false, |acc, &q| acc ^ frame.x[q] ^ bit(corr_z, q));
    MemoryOutcome { logical_x_failed, logical_z_failed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, GateDecoder, LocationKind, Pauli};
    use crate::surface::MemoryExperiment;
    use crate::GkpParams;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn channel(db: f64) -> Channel {
        Channel::new(GkpParams::from_db(db, 1.0).unwrap(), GateDecoder::Ml, false)
    }

    #[test]
    fn probability_composition() {
        assert_eq!(weight_of(edge_probability(&[0.5])), 2f64.ln());
        assert!((edge_probability(&[0.01, 0.0]) - 0.01).abs() < 1e-18);
        let (a, b, c) = (0.01, 0.02, 0.03);
        let want = a * (1.0 - b) * (1.0 - c) + b * (1.0 - a) * (1.0 - c) + c * (1.0 - a) * (1.0 - b);
        assert!((edge_probability(&[a, b, c]) - want).abs() < 1e-16);
        assert_eq!(weight_of(0.0), -P_CLAMP.ln());
        assert!(weight_of(1.0) > 0.0);
    }

    #[test]
    fn every_single_fault_lands_on_one_edge() {
        for d in [3, 5] {
            let l = Lattice::square(d).unwrap();
            let graphs = enumerate_edges(&l, d).unwrap();
            for g in &graphs {
                assert!(g.edges.iter().all(|e| !e.sources.is_empty() && e.u < e.v));
                let mut sorted = g.edges.clone();
                sorted.sort_by_key(|e| (e.u, e.v, e.logical));
                assert_eq!(sorted, g.edges);
                // a slot belongs to at most one edge in a graph
                let mut seen = std::collections::HashSet::new();
                for e in &g.edges {
                    for s in &e.sources {
                        for &i in &s.slots {
                            assert!(seen.insert(i));
                        }
                    }
                }
                for kind in [EdgeKind::Bulk2D, EdgeKind::Boundary2D, EdgeKind::Vertical, EdgeKind::SpaceTime] {
                    assert!(g.edges.iter().any(|e| e.kind == kind), "{kind:?} missing");
                }
            }
        }
    }

    fn edge_of<'a>(g: &'a MatchingGraph, round: usize, site: Site, pauli: &str, t: usize, l: &Lattice) -> &'a Edge {
        let slot = PeLayout::new(l, t).slot(round, site, pauli.parse().unwrap());
        g.edges.iter().find(|e| e.sources.iter().any(|s| s.slots.contains(&slot))).unwrap()
    }

    #[test]
    fn edge_taxonomy_examples() {
        let l = Lattice::square(3).unwrap();
        let [gx, gz] = enumerate_edges(&l, 3).unwrap();
        // idle Z on the centre qubit: two X-checks in the same round
        let e = edge_of(&gx, 2, Site::Idle { data: 4 }, "ZI", 3, &l);
        assert_eq!(e.kind, EdgeKind::Bulk2D);
        assert_eq!(e.flips, vec![4]);
        // measurement flip: same check, consecutive rounds
        let e = edge_of(&gz, 1, Site::Meas { anc: 5 }, "ZI", 3, &l);
        assert_eq!(e.kind, EdgeKind::Vertical);
        assert_eq!((e.u, e.v), (1, 1 + 4));
        assert!(e.flips.is_empty());
        // the centre qubit meets X-check (1,1) at step 1 and X-check (0,0) at
        // step 4. A data Z between those is seen by (0,0) now and by (1,1)
        // only next round; a data Z after step 4 hides until the next round,
        // where it looks like that round's idle error
        let xa = l.stabilizers().iter().position(|s| s.corner == (1, 1)).unwrap();
        let xb = l.stabilizers().iter().position(|s| s.corner == (0, 0)).unwrap();
        let e = edge_of(&gx, 1, Site::Gate { anc: xa, step: 1 }, "IZ", 3, &l);
        assert_eq!((e.u, e.v), (gx.vertex(1, xb), gx.vertex(2, xa)));
        assert_eq!(e.kind, EdgeKind::SpaceTime);
        let late = edge_of(&gx, 1, Site::Gate { anc: xb, step: 4 }, "IZ", 3, &l);
        assert_eq!(late, edge_of(&gx, 2, Site::Idle { data: 4 }, "ZI", 3, &l));
        // corner qubit idle Z reaches one X-check only
        let e = edge_of(&gx, 1, Site::Idle { data: 0 }, "ZI", 3, &l);
        assert_eq!(e.kind, EdgeKind::Boundary2D);
    }

    #[test]
    fn centre_edge_matches_hand_composition() {
        let l = Lattice::square(3).unwrap();
        let t = 3;
        let [gx, _] = enumerate_edges(&l, t).unwrap();
        let ch = channel(10.0);
        let pe = PeStore::from_marginals(&l, t, &ch);
        let lay = *pe.layout();
        // centre data qubit 4 = (1,1): NW corner of X-check (1,1) at step 1,
        // SE corner of X-check (0,0) at step 4
        let xa = l.stabilizers().iter().position(|s| s.corner == (1, 1)).unwrap();
        let xb = l.stabilizers().iter().position(|s| s.corner == (0, 0)).unwrap();
        assert_eq!(l.stabilizer(xa).schedule[0], Some(4));
        assert_eq!(l.stabilizer(xb).schedule[3], Some(4));
        let j = 2;
        let e = edge_of(&gx, j, Site::Idle { data: 4 }, "ZI", t, &l);
        assert_eq!((e.u, e.v), (gx.vertex(j, xb.min(xa)), gx.vertex(j, xb.max(xa))));
        assert_eq!(e.sources.len(), 3);
        let pe1 = |q: usize| pe.get(q).unwrap();
        let m1 = lay.m1k(1, xa + 1, j);
        let p1 = pe1(m1 + 10) + pe1(m1 + 11) + pe1(m1 + 14) + pe1(m1 + 15);
        let m4 = lay.m1k(4, xb + 1, j - 1);
        let p2 = pe1(m4 + 2) + pe1(m4 + 6) + pe1(m4 + 3) + pe1(m4 + 7);
        let nk = lay.nk(j, 5);
        let p3 = pe1(nk + 2) + pe1(nk + 3);
        let want = p1 * (1.0 - p2) * (1.0 - p3) + p2 * (1.0 - p1) * (1.0 - p3) + p3 * (1.0 - p1) * (1.0 - p2);
        let k = gx.edges.iter().position(|x| x == e).unwrap();
        let w = assign_weights(&gx, &pe)[k];
        assert!((w - (-want.ln())).abs() < 1e-12, "{w} vs {}", -want.ln());
        // the entries are the ZZ, ZY, YZ, YY and IZ, XZ, IY, XY classes
        let cx = ch.marginal(LocationKind::Cnot);
        let cls = |s: &str| cx.two_qubit_entry(s.parse().unwrap());
        assert!((p1 - (cls("ZZ") + cls("ZY") + cls("YZ") + cls("YY"))).abs() < 1e-18);
        assert!((p2 - (cls("IZ") + cls("XZ") + cls("IY") + cls("XY"))).abs() < 1e-18);
        let idle = ch.marginal(LocationKind::Idle);
        assert_eq!(p3, idle.get(Pauli::Y as usize) + idle.get(Pauli::Z as usize));
    }

    #[test]
    fn events_from_histories() {
        let l = Lattice::square(3).unwrap();
        let zero = vec![vec![false; 8]; 4];
        assert!(extract_events(&l, StabKind::X, &zero).is_empty());
        let mut h = zero.clone();
        h[1][2] = true;
        assert_eq!(extract_events(&l, StabKind::X, &h), vec![4 + 2, 8 + 2]);
        // persisting data error: one event per adjacent check at its first round
        let mut h = zero;
        for r in 1..4 {
            h[r][5] = true;
            h[r][7] = true;
        }
        assert_eq!(extract_events(&l, StabKind::Z, &h), vec![4 + 1, 4 + 3]);
    }

    #[test]
    fn adjacent_events_take_the_cheap_edge() {
        let l = Lattice::square(3).unwrap();
        let [gx, _] = enumerate_edges(&l, 3).unwrap();
        let pe = PeStore::from_marginals(&l, 3, &channel(11.0));
        let w = assign_weights(&gx, &pe);
        let e = edge_of(&gx, 2, Site::Idle { data: 4 }, "ZI", 3, &l).clone();
        let m = mwpm_match(&gx, &w, &[e.u, e.v], 9).unwrap();
        assert_eq!(m.pairs, vec![(e.u, Some(e.v))]);
        let mut want = vec![false; 9];
        want[4] = true;
        assert_eq!(m.correction, want);
        assert!(mwpm_decode(&gx, &w, &[]).unwrap().iter().all(|b| !b));
    }

    /// Cheapest way to pair every event or send it to the boundary.
    fn brute(d: &[Vec<f64>], b: &[f64]) -> f64 {
        fn rec(left: &mut Vec<usize>, d: &[Vec<f64>], b: &[f64]) -> f64 {
            let Some(i) = left.pop() else { return 0.0 };
            let mut best = b[i] + rec(left, d, b);
            for k in 0..left.len() {
                let j = left.remove(k);
                best = best.min(d[i][j] + rec(left, d, b));
                left.insert(k, j);
            }
            left.push(i);
            best
        }
        rec(&mut (0..b.len()).collect(), d, b)
    }

    #[test]
    fn matching_is_exact_on_random_event_sets() {
        let l = Lattice::square(5).unwrap();
        let [gx, gz] = enumerate_edges(&l, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..150 {
            let g = if trial % 2 == 0 { &gx } else { &gz };
            let w: Vec<f64> = (0..g.edges.len()).map(|_| rng.random_range(0.5..12.0)).collect();
            let k = rng.random_range(1..=12);
            let mut all: Vec<usize> = (0..g.boundary()).collect();
            all.shuffle(&mut rng);
            let mut ev = all[..k].to_vec();
            ev.sort();
            let m = mwpm_match(g, &w, &ev, l.n()).unwrap();
            let mut targets = ev.clone();
            targets.push(g.boundary());
            let trees: Vec<Tree> = ev.iter().map(|&s| dijkstra(g, &w, s, &targets)).collect();
            let dm: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| trees[i].dist[ev[j]]).collect()).collect();
            let bm: Vec<f64> = (0..k).map(|i| trees[i].dist[g.boundary()]).collect();
            let want = brute(&dm, &bm);
            assert!((m.cost - want).abs() < 1e-6 * want.max(1.0), "trial {trial}: {} vs {want}", m.cost);
        }
    }

    #[test]
    fn edge_order_does_not_change_the_decision() {
        let l = Lattice::square(3).unwrap();
        let [gx, _] = enumerate_edges(&l, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let w: Vec<f64> = (0..gx.edges.len()).map(|_| rng.random_range(0.5..12.0)).collect();
            let mut perm: Vec<usize> = (0..gx.edges.len()).collect();
            perm.shuffle(&mut rng);
            let shuffled = MatchingGraph::from_edges(
                gx.basis,
                gx.checks,
                gx.rounds,
                perm.iter().map(|&i| gx.edges[i].clone()).collect(),
            );
            let w2: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
            let k = rng.random_range(1..=8);
            let mut all: Vec<usize> = (0..gx.boundary()).collect();
            all.shuffle(&mut rng);
            let mut ev = all[..k].to_vec();
            ev.sort();
            let a = mwpm_match(&gx, &w, &ev, 9).unwrap();
            let b = mwpm_match(&shuffled, &w2, &ev, 9).unwrap();
            assert!((a.cost - b.cost).abs() < 1e-9);
            assert_eq!(a.pairs, b.pairs);
            assert_eq!(a.correction, b.correction);
        }
    }

    #[test]
    fn adjudication_cases() {
        let l = Lattice::square(3).unwrap();
        let mut f = PauliFrame::new(l.qubit_count());
        let none = vec![false; 9];
        assert_eq!(adjudicate(&l, &f, &none, &none), MemoryOutcome::default());
        // Z along the logical-Z row
        for q in l.logical_z_support() {
            f.z[q] = true;
        }
        let out = adjudicate(&l, &f, &none, &none);
        assert!(out.logical_z_failed && !out.logical_x_failed);
        // the same error undone by the correction
        let mut c = vec![false; 9];
        for q in l.logical_z_support() {
            c[q] = true;
        }
        assert_eq!(adjudicate(&l, &f, &c, &none), MemoryOutcome::default());
        // a stabilizer is harmless
        let mut f = PauliFrame::new(l.qubit_count());
        for s in l.stabilizers() {
            for q in s.support() {
                match s.kind {
                    StabKind::X => f.x[q] ^= true,
                    StabKind::Z => f.z[q] ^= true,
                }
            }
        }
        assert_eq!(adjudicate(&l, &f, &none, &none), MemoryOutcome::default());
    }

    #[test]
    fn graph_dump_roundtrips_as_json() {
        let l = Lattice::square(3).unwrap();
        let [gx, _] = enumerate_edges(&l, 3).unwrap();
        let w = vec![1.0; gx.edges.len()];
        let v: serde_json::Value = serde_json::from_str(&gx.to_json(&w).unwrap()).unwrap();
        assert_eq!(v["edges"].as_array().unwrap().len(), gx.edges.len());
        assert_eq!(v["boundary"], gx.boundary());
    }

    #[test]
    fn every_single_fault_is_corrected_at_distance_three() {
        let exp = MemoryExperiment::new(3, channel(11.0)).unwrap();
        let mut count = 0;
        for j in 1..=exp.rounds {
            for site in round_sites(&exp.lattice) {
                for pauli in site.faults() {
                    let f = [Fault { round: j, site, pauli }];
                    let out = exp.run_with_faults(&f, None).unwrap();
                    assert_eq!(out, MemoryOutcome::default(), "{j} {site:?} {pauli}");
                    count += 1;
                }
            }
        }
        assert!(count > 1000);
    }
}
