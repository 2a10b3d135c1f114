use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    correlating_d, dense_diagonal, forbidden_sets, partition_intersection, restrict_to_uniform, CorrelationParams,
    DiagonalCase, DiagonalSearch, PartitionLevel, RestrictParams,
};
use crate::cube::{find_line_in_set, CubeSet, LinePattern, SearchOptions, Subspace, DEFAULT_WORK_BUDGET};
use crate::error::Result;
use crate::measures::uniform_measure;
use crate::rational::{fmt_ratio, int, pow_ratio, serde_ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    DiagonalIncrement,
    CorrelationIncrement,
    LineFound,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub mechanism: Mechanism,
    /// The current subspace of the original cube after this step.
    pub subspace: String,
    pub dim: usize,
    /// Uniform density of `A` in the subspace before the step.
    #[serde(with = "serde_ratio")]
    pub density_before: Rational,
    #[serde(with = "serde_ratio")]
    pub density_after: Rational,
    /// Constants used in the step, as `p/q` strings.
    pub constants: BTreeMap<String, String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IncrementTrace {
    pub iterations: Vec<IterationRecord>,
}

impl IncrementTrace {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.iterations
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn last_mechanism(&self) -> Option<Mechanism> {
        self.iterations.last().map(|r| r.mechanism)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverConfig {
    pub seed: u64,
    pub max_iterations: usize,
    /// Block size for the diagonal step; default one less than the current
    /// dimension.
    pub m: Option<usize>,
    /// Dimension of the uniform restriction; default `max(1, m/2)`.
    pub r: Option<usize>,
    /// Dimension of the subspaces the insensitive sets are cut into.
    pub dim: usize,
    /// `θ` for the step; default `δ²/32`, the Sperner value at `δ/4`.
    pub theta: Option<Rational>,
    pub diagonal: DiagonalSearch,
    /// Pairs sampled when restricting, instead of exhausting them.
    pub restrict_samples: Option<u64>,
    pub work_budget: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            seed: 0,
            max_iterations: 32,
            m: None,
            r: None,
            dim: 1,
            theta: None,
            diagonal: DiagonalSearch::default(),
            restrict_samples: None,
            work_budget: DEFAULT_WORK_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverOutcome {
    pub trace: IncrementTrace,
    /// A line of the original cube, all of whose points are in `A`.
    pub line: Option<String>,
    #[serde(skip)]
    pub line_pattern: Option<LinePattern>,
    pub hit_iteration_cap: bool,
}

impl DriverOutcome {
    /// Replays the reported line against `A`.
    pub fn line_is_valid(&self, a: &CubeSet) -> bool {
        self.line_pattern.as_ref().is_none_or(|l| {
            l.shape() == a.shape() && !l.is_degenerate() && l.point_indices().iter().all(|&i| a.contains_index(i))
        })
    }
}

/// Runs the density-increment loop on `A`.
///
/// Each iteration first looks for a line in the current subspace. If there
/// is none it tries for a dense diagonal; an increment there is taken
/// directly, otherwise the forbidden sets, the correlating intersection of
/// insensitive sets, a uniform restriction and a partition into subspaces
/// are computed, and the piece on which `A` is densest becomes the next
/// subspace. At small `n` this is a demonstration: the hypotheses that force
/// progress almost never hold, and the loop stops as exhausted when no
/// piece improves the density.
pub fn dhj_driver(a: &CubeSet, config: &DriverConfig) -> Result<DriverOutcome> {
    let shape = a.shape();
    let k = shape.k();
    let mut w = Subspace::identity(shape);
    let mut trace = IncrementTrace::default();
    let opts = SearchOptions::with_budget(config.work_budget);
    for iter in 0..config.max_iterations {
        let local = w.pullback(a)?;
        let delta = uniform_measure(&local).into_inner();
        let mut record = |mechanism, next: &Subspace, after: Rational, constants, note: Option<&str>| {
            trace.iterations.push(IterationRecord {
                iter,
                mechanism,
                subspace: next.to_string(),
                dim: next.dim(),
                density_before: delta.clone(),
                density_after: after,
                constants,
                note: note.map(str::to_string),
            });
        };
        if let Some(l) = find_line_in_set(&local, &opts)? {
            let line = w.map_line(&l)?;
            record(Mechanism::LineFound, &w, delta.clone(), BTreeMap::new(), None);
            return Ok(DriverOutcome { trace, line: Some(line.to_string()), line_pattern: Some(line), hit_iteration_cap: false });
        }
        let n = w.dim();
        if k < 2 || n < 2 || delta == int(0) {
            record(Mechanism::Exhausted, &w, delta.clone(), BTreeMap::new(), Some("dimension or density too small"));
            return Ok(done(trace, false));
        }

        let theta = config.theta.clone().unwrap_or_else(|| pow_ratio(&delta, 2) / int(32));
        let kr = int(k as u64);
        let eta = pow_ratio(&delta, 2) * &theta / (int(96) * &kr);
        let beta = &delta * &theta / (int(12) * &kr);
        let gamma = &beta / int(2);
        let constants: BTreeMap<String, String> =
            [("theta", &theta), ("eta", &eta), ("beta", &beta), ("gamma", &gamma)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), fmt_ratio(v)))
                .collect();

        let m = config.m.unwrap_or(n - 1).clamp(1, n);
        let search = DiagonalSearch { seed: config.seed.wrapping_add(iter as u64), ..config.diagonal };
        let diag = dense_diagonal(&local, m, &eta, &search)?;
        let Some(cand) = diag.candidate else {
            record(Mechanism::Exhausted, &w, delta.clone(), constants, Some("no dense diagonal"));
            return Ok(done(trace, false));
        };
        let v = w.compose(&cand.subspace)?;
        if diag.case == DiagonalCase::Increment {
            let after = uniform_measure(&v.pullback(a)?).into_inner();
            record(Mechanism::DiagonalIncrement, &v, after, constants, None);
            w = v;
            continue;
        }

        let a_v = v.pullback(a)?;
        let forbidden = forbidden_sets(&a_v)?;
        let corr_params = CorrelationParams { delta: delta.clone(), gamma: gamma.clone(), theta: None };
        let Ok(corr) = correlating_d(&a_v, &forbidden.c_sets, &corr_params) else {
            record(Mechanism::Exhausted, &w, delta.clone(), constants, Some("every cell outside C is null"));
            return Ok(done(trace, false));
        };
        let r = config.r.unwrap_or((m / 2).max(1)).clamp(1, m);
        let restrict_params = RestrictParams { delta: delta.clone(), gamma: gamma.clone(), beta: beta.clone(), r };
        let sampling = config.restrict_samples.map(|s| (s, config.seed.wrapping_add(iter as u64)));
        let rest = restrict_to_uniform(&a_v, &corr.d, &restrict_params, sampling)?;
        let u = v.compose(&rest.subspace)?;
        let factors: Vec<CubeSet> = corr.factors.iter().map(|f| rest.subspace.pullback(f)).collect::<Result<_>>()?;
        let dim = config.dim.clamp(1, r);
        let levels = PartitionLevel::schedule(r, factors.len(), dim);
        let part = partition_intersection(&factors, &levels, None, config.work_budget)?;

        // densest piece, ties to the smaller encoding
        let mut best: Option<(Rational, Vec<u8>, Subspace)> = None;
        for piece in &part.subspaces {
            let full = u.compose(piece)?;
            let density = uniform_measure(&full.pullback(a)?).into_inner();
            let code = full.encoding().digits().to_vec();
            let better = best.as_ref().is_none_or(|(bd, bc, _)| density > *bd || (density == *bd && code < *bc));
            if better {
                best = Some((density, code, full));
            }
        }
        match best {
            Some((after, _, next)) if after >= delta => {
                record(Mechanism::CorrelationIncrement, &next, after, constants, None);
                w = next;
            }
            Some((after, _, _)) => {
                let note = format!("best piece has density {}", fmt_ratio(&after));
                record(Mechanism::Exhausted, &w, delta.clone(), constants, Some(&note));
                return Ok(done(trace, false));
            }
            None => {
                record(Mechanism::Exhausted, &w, delta.clone(), constants, Some("partition is empty"));
                return Ok(done(trace, false));
            }
        }
    }
    Ok(done(trace, true))
}

fn done(trace: IncrementTrace, hit_iteration_cap: bool) -> DriverOutcome {
    DriverOutcome { trace, line: None, line_pattern: None, hit_iteration_cap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{is_line_free, CubeShape};
    use crate::extremal::{max_linefree, ExtremalOptions};
    use crate::measures::seeded_rng;

    #[test]
    fn full_cube_finds_a_line_at_once() {
        let s = CubeShape::new(3, 3).unwrap();
        let full = CubeSet::full(s);
        let out = dhj_driver(&full, &DriverConfig::default()).unwrap();
        assert_eq!(out.trace.iterations.len(), 1);
        assert_eq!(out.trace.last_mechanism(), Some(Mechanism::LineFound));
        assert!(out.line.is_some() && out.line_is_valid(&full));
    }

    #[test]
    fn extremal_witnesses_never_yield_lines() {
        for n in 2..=4 {
            let s = CubeShape::new(3, n).unwrap();
            let res = max_linefree(s, &ExtremalOptions::default()).unwrap();
            assert!(is_line_free(&res.witness));
            let out = dhj_driver(&res.witness, &DriverConfig::default()).unwrap();
            assert!(out.line.is_none());
            assert_eq!(out.trace.last_mechanism(), Some(Mechanism::Exhausted), "n={n}");
        }
    }

    #[test]
    fn random_dense_sets() {
        let mut rng = seeded_rng(3);
        for trial in 0..30 {
            let n = 2 + trial % 4;
            let s = CubeShape::new(3, n).unwrap();
            let a = CubeSet::random(s, 0.6, &mut rng);
            let out = dhj_driver(&a, &DriverConfig { seed: trial as u64, ..Default::default() }).unwrap();
            assert!(out.line_is_valid(&a));
            assert_eq!(out.line.is_some(), !is_line_free(&a), "trial {trial}");
            for rec in &out.trace.iterations {
                if rec.mechanism == Mechanism::CorrelationIncrement {
                    assert!(rec.density_after >= rec.density_before);
                }
            }
        }
    }

    #[test]
    fn trace_is_json_lines() {
        let s = CubeShape::new(3, 3).unwrap();
        let out = dhj_driver(&CubeSet::empty(s), &DriverConfig::default()).unwrap();
        let text = out.trace.to_json_lines();
        assert_eq!(text.lines().count(), out.trace.iterations.len());
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["mechanism"], "exhausted");
        assert_eq!(v["density_before"], "0/1");
    }
}
