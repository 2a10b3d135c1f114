use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{bit, matching_bound, ChainBound, SlabBound};
use super::hypergraph::LineHypergraph;
use super::symmetry::LineSymmetries;
use crate::cube::{value_counts, CubeSet, CubeShape, SearchOptions};
use crate::error::Result;
use crate::measures::{compositions, seeded_rng};
use crate::rational::multinomial;

/// Largest symmetry group used for orbital branching.
const MAX_GROUP_ORDER: u64 = 50_000;
/// Orbital branching stops below this depth.
const SYMMETRY_DEPTH: usize = 8;
/// The slab bound is skipped when `(k+1)^n` exceeds this.
const MAX_SLAB_SUBCUBES: u64 = 1 << 14;
const GREEDY_RESTARTS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremalOptions {
    /// Wall-clock budget; `None` runs to completion.
    pub time_budget: Option<Duration>,
    /// Cap on search nodes; `None` for no cap.
    pub node_budget: Option<u64>,
    /// Orbital branching under coordinate and alphabet permutations.
    pub symmetry: bool,
    /// A size known to be achievable. Subtrees that cannot beat `hint - 1`
    /// are pruned, which speeds up proofs when the hint is tight.
    pub initial_lower_bound: Option<usize>,
    /// Seed for the randomized greedy restarts.
    pub seed: u64,
    /// Budget for building the line hypergraph.
    pub build: SearchOptions,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions {
            time_budget: None,
            node_budget: None,
            symmetry: true,
            initial_lower_bound: None,
            seed: 0,
            build: SearchOptions::default(),
        }
    }
}

/// One entry of the anytime log: the best size found and the best proven
/// upper bound after `nodes` search nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub nodes: u64,
    pub millis: u64,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub shape: CubeShape,
    pub best_size: usize,
    pub witness: CubeSet,
    pub optimal: bool,
    pub nodes_explored: u64,
    pub seconds: f64,
    /// Bound proven at the root before branching.
    pub root_upper_bound: usize,
    pub bound_trace: Vec<TraceEvent>,
}

/// The largest line-free subset of `[k]^n`, by branch and bound.
///
/// A set is line-free iff it misses a point of every edge of the line
/// hypergraph. Including a point that completes all but one point of a line
/// excludes the last point; a point whose every line already misses the set
/// is included outright. Nodes are pruned with the least of a counting bound,
/// a slab bound, a chain bound (for `k = 2`) and a greedy line packing.
pub fn max_linefree(shape: CubeShape, options: &ExtremalOptions) -> Result<SearchResult> {
    let g = LineHypergraph::build(shape, &options.build)?;
    Ok(Solver::new(&g, options).run())
}

/// Replays the claim `|a| = claimed_size` and that `a` has no line, using
/// only the generic line finder.
pub fn verify_witness(a: &CubeSet, claimed_size: usize) -> bool {
    if a.len() != claimed_size as u64 {
        return false;
    }
    matches!(crate::cube::find_line_in_set(a, &SearchOptions::default()), Ok(None))
}

/// A line-free union of whole slices, adding slices greedily by size (with
/// random weights when `rng` is given).
///
/// The line with wildcard count `r` and fixed counts `b` meets exactly the
/// slices `b + r e_j`, so a union of slices is line-free iff it contains no
/// such family for any `r > 0`.
fn slice_union(shape: CubeShape, rng: Option<&mut ChaCha8Rng>) -> CubeSet {
    let (k, n) = (shape.k(), shape.n());
    let mut slices: Vec<(f64, Vec<usize>)> = compositions(n, k, 0)
        .into_iter()
        .map(|c| (multinomial(&c).to_f64().unwrap_or(f64::MAX), c))
        .collect();
    if let Some(rng) = rng {
        for s in slices.iter_mut() {
            s.0 *= 0.5 + rng.random::<f64>();
        }
    }
    slices.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut chosen: HashSet<Vec<usize>> = HashSet::new();
    for (_, c) in slices {
        let completes_line = (0..k).any(|j| {
            (1..=c[j]).any(|r| {
                let mut base = c.clone();
                base[j] -= r;
                (0..k).filter(|&i| i != j).all(|i| {
                    let mut other = base.clone();
                    other[i] += r;
                    chosen.contains(&other)
                })
            })
        });
        if !completes_line {
            chosen.insert(c);
        }
    }
    CubeSet::from_predicate(shape, |d| chosen.contains(&value_counts(d, k)))
}

struct Solver<'a> {
    g: &'a LineHypergraph,
    shape: CubeShape,
    k: u8,
    points: usize,
    inc: Vec<u64>,
    avail: Vec<u64>,
    inc_cnt: Vec<u8>,
    exc_cnt: Vec<u8>,
    n_inc: usize,
    n_exc: usize,
    /// Assignments in order, `true` for inclusion.
    trail: Vec<(u32, bool)>,
    queue: Vec<u32>,
    slab: Option<SlabBound>,
    chain: Option<ChainBound>,
    used: Vec<u64>,
    sym: Option<LineSymmetries>,
    best: usize,
    best_set: Vec<u64>,
    hint: usize,
    root_ub: usize,
    nodes: u64,
    start: Instant,
    options: ExtremalOptions,
    aborted: bool,
    trace: Vec<TraceEvent>,
}

impl<'a> Solver<'a> {
    fn new(g: &'a LineHypergraph, options: &ExtremalOptions) -> Self {
        let shape = g.shape();
        let points = g.num_points();
        let words = points.div_ceil(64);
        let full = CubeSet::full(shape).words().to_vec();
        let ext = (shape.k() as u64 + 1).checked_pow(shape.n() as u32);
        let slab = ext.filter(|&e| e <= MAX_SLAB_SUBCUBES).map(|_| SlabBound::new(shape));
        let sym = if options.symmetry { LineSymmetries::build(shape, MAX_GROUP_ORDER) } else { None };
        Solver {
            g,
            shape,
            k: shape.k() as u8,
            points,
            inc: vec![0; words],
            avail: full,
            inc_cnt: vec![0; g.num_edges()],
            exc_cnt: vec![0; g.num_edges()],
            n_inc: 0,
            n_exc: 0,
            trail: Vec::new(),
            queue: Vec::new(),
            slab,
            chain: ChainBound::new(shape),
            used: vec![0; words],
            sym,
            best: 0,
            best_set: vec![0; words],
            hint: options.initial_lower_bound.unwrap_or(0),
            root_ub: points,
            nodes: 0,
            start: Instant::now(),
            options: options.clone(),
            aborted: false,
            trace: Vec::new(),
        }
    }

    fn run(mut self) -> SearchResult {
        self.initial_solutions();
        self.root_ub = self.upper_bound();
        self.log();
        let group: Vec<u32> = match &self.sym {
            Some(s) => (0..s.len() as u32).collect(),
            None => Vec::new(),
        };
        if self.best < self.root_ub {
            self.dfs(0, &group);
        }
        let exhausted = !self.aborted || self.best >= self.root_ub;
        let optimal = exhausted && self.best + 1 >= self.hint;
        if optimal {
            self.root_ub = self.root_ub.min(self.best);
        }
        self.log();
        let witness = {
            let mut s = CubeSet::empty(self.shape);
            for p in 0..self.points {
                if bit(&self.best_set, p) {
                    s.insert_index(p as u64);
                }
            }
            s
        };
        SearchResult {
            shape: self.shape,
            best_size: self.best,
            witness,
            optimal,
            nodes_explored: self.nodes,
            seconds: self.start.elapsed().as_secs_f64(),
            root_upper_bound: self.root_ub,
            bound_trace: self.trace,
        }
    }

    fn log(&mut self) {
        let upper = if self.aborted { self.root_ub } else { self.root_ub.max(self.best) };
        if self.trace.last().is_some_and(|t| (t.lower, t.upper) == (self.best, upper)) {
            return;
        }
        self.trace.push(TraceEvent {
            nodes: self.nodes,
            millis: self.start.elapsed().as_millis() as u64,
            lower: self.best,
            upper,
        });
    }

    fn is_undecided(&self, p: usize) -> bool {
        bit(&self.avail, p) && !bit(&self.inc, p)
    }

    /// Includes `p` and queues the exclusions it forces. `false` on a conflict.
    fn include(&mut self, p: usize) -> bool {
        if bit(&self.inc, p) {
            return true;
        }
        if !bit(&self.avail, p) {
            return false;
        }
        self.inc[p >> 6] |= 1 << (p & 63);
        self.n_inc += 1;
        self.trail.push((p as u32, true));
        let mut ok = true;
        for &e in self.g.incident(p) {
            let e = e as usize;
            self.inc_cnt[e] += 1;
            if self.exc_cnt[e] == 0 {
                if self.inc_cnt[e] == self.k {
                    ok = false;
                } else if self.inc_cnt[e] == self.k - 1 {
                    let last = self.g.edge(e).iter().find(|&&q| !bit(&self.inc, q as usize));
                    self.queue.extend(last);
                }
            }
        }
        if !ok {
            self.queue.clear();
        }
        ok
    }

    fn exclude(&mut self, p: usize) -> bool {
        if bit(&self.inc, p) {
            return false;
        }
        if !bit(&self.avail, p) {
            return true;
        }
        self.avail[p >> 6] &= !(1 << (p & 63));
        self.n_exc += 1;
        self.trail.push((p as u32, false));
        for &e in self.g.incident(p) {
            self.exc_cnt[e as usize] += 1;
        }
        true
    }

    fn propagate(&mut self) -> bool {
        while let Some(q) = self.queue.pop() {
            if !self.exclude(q as usize) {
                self.queue.clear();
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (p, was_inc) = self.trail.pop().expect("trail above mark");
            let p = p as usize;
            if was_inc {
                self.inc[p >> 6] &= !(1 << (p & 63));
                self.n_inc -= 1;
                for &e in self.g.incident(p) {
                    self.inc_cnt[e as usize] -= 1;
                }
            } else {
                self.avail[p >> 6] |= 1 << (p & 63);
                self.n_exc -= 1;
                for &e in self.g.incident(p) {
                    self.exc_cnt[e as usize] -= 1;
                }
            }
        }
    }

    /// Includes every undecided point all of whose lines already miss the set.
    fn include_dominated(&mut self) {
        for p in 0..self.points {
            if self.is_undecided(p) && self.g.incident(p).iter().all(|&e| self.exc_cnt[e as usize] > 0) {
                let ok = self.include(p);
                debug_assert!(ok && self.queue.is_empty());
            }
        }
    }

    fn active_degree(&self, p: usize) -> usize {
        self.g.incident(p).iter().filter(|&&e| self.exc_cnt[e as usize] == 0).count()
    }

    fn undecided(&self) -> usize {
        self.points - self.n_inc - self.n_exc
    }

    fn threshold(&self) -> usize {
        self.best.max(self.hint.saturating_sub(1))
    }

    fn upper_bound(&mut self) -> usize {
        let thr = self.threshold();
        let mut ub = self.n_inc + self.undecided();
        if ub <= thr {
            return ub;
        }
        if let Some(c) = self.chain.as_mut() {
            ub = ub.min(c.eval(&self.avail) as usize);
            if ub <= thr {
                return ub;
            }
        }
        if let Some(s) = self.slab.as_mut() {
            ub = ub.min(s.eval(&self.inc, &self.avail) as usize);
            if ub <= thr {
                return ub;
            }
        }
        ub.min(matching_bound(self.g, &self.inc, &self.avail, &mut self.used) as usize)
    }

    fn record(&mut self) {
        if self.n_inc > self.best {
            self.best = self.n_inc;
            self.best_set.copy_from_slice(&self.inc);
            self.log();
        }
    }

    /// Greedy unions of slices and plain greedy by least active degree, each
    /// followed by randomized restarts.
    fn initial_solutions(&mut self) {
        let mut rng = seeded_rng(self.options.seed);
        for round in 0..=GREEDY_RESTARTS {
            let noise = if round == 0 { None } else { Some(&mut rng) };
            let union = slice_union(self.shape, noise);
            if union.len() as usize > self.best {
                self.best = union.len() as usize;
                self.best_set.copy_from_slice(union.words());
                self.log();
            }
        }
        self.greedy(None);
        for _ in 0..GREEDY_RESTARTS {
            self.greedy(Some(&mut rng));
        }
    }

    fn greedy(&mut self, mut rng: Option<&mut ChaCha8Rng>) {
        let mark = self.trail.len();
        loop {
            self.include_dominated();
            let mut pick: Option<(usize, f64, usize)> = None;
            for p in 0..self.points {
                if !self.is_undecided(p) {
                    continue;
                }
                let deg = self.active_degree(p);
                let noise = rng.as_mut().map_or(0.0, |r| r.random::<f64>());
                let better = match pick {
                    None => true,
                    Some((d, n, _)) => deg < d || (deg == d && noise < n),
                };
                if better {
                    pick = Some((deg, noise, p));
                }
            }
            let Some((_, _, p)) = pick else { break };
            let ok = self.include(p) && self.propagate();
            debug_assert!(ok);
        }
        self.record();
        self.undo_to(mark);
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.nodes.is_multiple_of(1024) {
            let over_time = self.options.time_budget.is_some_and(|t| self.start.elapsed() >= t);
            let over_nodes = self.options.node_budget.is_some_and(|b| self.nodes >= b);
            self.aborted = over_time || over_nodes;
        }
        self.aborted
    }

    /// `group` is a set of symmetries fixing the current assignment; empty
    /// when symmetry is off.
    fn dfs(&mut self, depth: usize, group: &[u32]) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        let mark = self.trail.len();
        self.include_dominated();
        if self.undecided() == 0 {
            self.record();
            if self.best >= self.root_ub {
                // matches the root bound: nothing left to prove
                self.aborted = true;
            }
            self.undo_to(mark);
            return;
        }
        if self.upper_bound() <= self.threshold() {
            self.undo_to(mark);
            return;
        }
        let p = self.branch_point();
        let use_sym = !group.is_empty() && depth < SYMMETRY_DEPTH;

        let left = self.trail.len();
        if self.include(p) && self.propagate() {
            let sub = match (&self.sym, use_sym) {
                (Some(s), true) => s.stabilizer(group, p),
                _ => Vec::new(),
            };
            self.dfs(depth + 1, &sub);
        }
        self.undo_to(left);
        if self.aborted {
            self.undo_to(mark);
            return;
        }

        // some optimum in this subtree avoids the whole orbit of p
        let orbit = match (&self.sym, use_sym) {
            (Some(s), true) => s.orbit(group, p),
            _ => vec![p],
        };
        if orbit.iter().all(|&q| self.exclude(q)) {
            let keep: &[u32] = if use_sym { group } else { &[] };
            self.dfs(depth + 1, keep);
        }
        self.undo_to(mark);
    }

    /// Undecided point on the most lines that still miss no point, ties by index.
    fn branch_point(&self) -> usize {
        let mut best = (0, usize::MAX);
        for p in 0..self.points {
            if self.is_undecided(p) {
                let d = self.active_degree(p);
                if best.1 == usize::MAX || d > best.0 {
                    best = (d, p);
                }
            }
        }
        best.1
    }
}
