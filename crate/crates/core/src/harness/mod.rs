//! A registry of executable checks, one per statement in scope. Each entry
//! computes both sides of its inequality or identity exactly (or by seeded
//! sampling, reported with the sample count) and returns a uniform report.
//!
//! A `fail` verdict is only issued when the entry's hypotheses hold and the
//! conclusion is violated; anything asymptotic or with unmet hypotheses is
//! `report-only`.

mod oracles;

use std::collections::BTreeMap;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measures::seeded_rng;
use crate::rational::{fmt_ratio, parse_ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    ReportOnly,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            _ => Err(Error::Parse(format!("unknown suite `{s}` (expected fast or full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub id: String,
    /// All parameters, defaults filled in.
    pub params: Value,
    /// Named computed quantities; rationals as `p/q`.
    pub computed: BTreeMap<String, String>,
    pub bound: Option<String>,
    pub precondition_met: bool,
    pub verdict: Verdict,
    pub samples: Option<u64>,
    pub note: Option<String>,
}

/// What an oracle found, before the verdict is derived.
#[derive(Debug, Clone, Default)]
pub(crate) struct Outcome {
    computed: BTreeMap<String, String>,
    bound: Option<String>,
    precondition_met: bool,
    holds: bool,
    report_only: bool,
    samples: Option<u64>,
    note: Option<String>,
}

impl Outcome {
    /// An exact statement without hypotheses.
    fn exact(holds: bool) -> Self {
        Outcome { holds, precondition_met: true, ..Default::default() }
    }

    fn conditional(precondition_met: bool, holds: bool) -> Self {
        Outcome { holds, precondition_met, ..Default::default() }
    }

    /// Asymptotic or statistical: never asserted.
    fn report(precondition_met: bool, holds: bool) -> Self {
        Outcome { holds, precondition_met, report_only: true, ..Default::default() }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.computed.insert(key.to_string(), value.to_string());
        self
    }

    fn ratio(self, key: &str, value: &Rational) -> Self {
        self.with(key, fmt_ratio(value))
    }

    fn bound(mut self, value: &Rational) -> Self {
        self.bound = Some(fmt_ratio(value));
        self
    }

    fn bound_text(mut self, value: impl ToString) -> Self {
        self.bound = Some(value.to_string());
        self
    }

    fn samples(mut self, n: u64) -> Self {
        self.samples = Some(n);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn verdict(&self) -> Verdict {
        if self.report_only || !self.precondition_met {
            Verdict::ReportOnly
        } else if self.holds {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Parameter access with defaults; every value read is recorded.
pub(crate) struct Ctx {
    given: Map<String, Value>,
    resolved: Map<String, Value>,
    pub(crate) rng: ChaCha8Rng,
}

impl Ctx {
    fn new(params: &Value, rng: ChaCha8Rng) -> Result<Self> {
        let given = match params {
            Value::Null => Map::new(),
            Value::Object(m) => m.clone(),
            other => return Err(Error::param(format!("parameters must be a JSON object, got {other}"))),
        };
        Ok(Ctx { given, resolved: Map::new(), rng })
    }

    fn take(&mut self, name: &str) -> Option<Value> {
        self.given.remove(name)
    }

    pub(crate) fn usize(&mut self, name: &str, default: usize) -> Result<usize> {
        let v = match self.take(name) {
            None => default,
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|v| usize::try_from(v).ok())
                .ok_or_else(|| Error::param(format!("`{name}` must be a non-negative integer")))?,
            Some(Value::String(s)) => {
                s.trim().parse().map_err(|_| Error::param(format!("`{name}` must be a non-negative integer")))?
            }
            Some(other) => return Err(Error::param(format!("`{name}` must be an integer, got {other}"))),
        };
        self.resolved.insert(name.into(), v.into());
        Ok(v)
    }

    pub(crate) fn ratio(&mut self, name: &str, default: &str) -> Result<Rational> {
        let text = match self.take(name) {
            None => default.to_string(),
            Some(Value::String(s)) => s,
            Some(Value::Number(n)) => n.to_string(),
            Some(other) => return Err(Error::param(format!("`{name}` must be a rational, got {other}"))),
        };
        let r = parse_ratio(&text)?;
        self.resolved.insert(name.into(), fmt_ratio(&r).into());
        Ok(r)
    }

    pub(crate) fn text(&mut self, name: &str, default: &str) -> Result<String> {
        let s = match self.take(name) {
            None => default.to_string(),
            Some(Value::String(s)) => s,
            Some(other) => return Err(Error::param(format!("`{name}` must be a string, got {other}"))),
        };
        self.resolved.insert(name.into(), s.clone().into());
        Ok(s)
    }

    fn finish(self) -> Result<Value> {
        if let Some(extra) = self.given.keys().next() {
            return Err(Error::param(format!("unknown parameter `{extra}`")));
        }
        Ok(Value::Object(self.resolved))
    }
}

type Oracle = fn(&mut Ctx) -> Result<Outcome>;

pub struct Entry {
    pub id: &'static str,
    pub summary: &'static str,
    run: Oracle,
    fast: &'static [&'static str],
    full: &'static [&'static str],
}

impl Entry {
    /// Parameter sets run by a suite.
    pub fn suite_params(&self, suite: Suite) -> Vec<Value> {
        let list = match suite {
            Suite::Fast => self.fast,
            Suite::Full => self.full,
        };
        list.iter().map(|s| serde_json::from_str(s).expect("suite parameters are valid JSON")).collect()
    }
}

pub fn registry() -> &'static [Entry] {
    oracles::REGISTRY
}

pub fn find_entry(id: &str) -> Result<&'static Entry> {
    registry().iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownEntry(id.to_string()))
}

/// The RNG stream of entry `id` under master seed `seed`.
pub fn entry_rng(seed: u64, id: &str) -> ChaCha8Rng {
    // FNV-1a keeps the stream stable across builds and platforms
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seeded_rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ h)
}

pub fn verify(id: &str, params: &Value, seed: u64) -> Result<VerificationReport> {
    let entry = find_entry(id)?;
    let mut cx = Ctx::new(params, entry_rng(seed, id))?;
    let outcome = (entry.run)(&mut cx)?;
    let params = cx.finish()?;
    let verdict = outcome.verdict();
    let mut computed = outcome.computed;
    computed.insert("holds".into(), outcome.holds.to_string());
    Ok(VerificationReport {
        id: id.to_string(),
        params,
        computed,
        bound: outcome.bound,
        precondition_met: outcome.precondition_met,
        verdict,
        samples: outcome.samples,
        note: outcome.note,
    })
}

/// Runs every entry of the suite on one thread.
pub fn verify_all(suite: Suite, seed: u64) -> Vec<VerificationReport> {
    verify_all_with_workers(suite, seed, 1)
}

/// Runs the suite on up to `workers` threads; the report order does not
/// depend on the number of workers. Oracle errors become `fail` reports.
pub fn verify_all_with_workers(suite: Suite, seed: u64, workers: usize) -> Vec<VerificationReport> {
    let jobs: Vec<(&'static str, Value)> =
        registry().iter().flat_map(|e| e.suite_params(suite).into_iter().map(move |p| (e.id, p))).collect();
    let run = |(id, params): &(&'static str, Value)| {
        verify(id, params, seed).unwrap_or_else(|e| VerificationReport {
            id: id.to_string(),
            params: params.clone(),
            computed: BTreeMap::new(),
            bound: None,
            precondition_met: true,
            verdict: Verdict::Fail,
            samples: None,
            note: Some(format!("error: {e}")),
        })
    };
    let workers = workers.clamp(1, jobs.len().max(1));
    if workers == 1 {
        return jobs.iter().map(run).collect();
    }
    let mut slots: Vec<Option<VerificationReport>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots.chunks_mut(jobs.len().div_ceil(workers)).collect();
        let mut start = 0;
        for chunk in chunks {
            let mine = &jobs[start..start + chunk.len()];
            start += chunk.len();
            scope.spawn(move || {
                for (slot, job) in chunk.iter_mut().zip(mine) {
                    *slot = Some(run(job));
                }
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every job ran")).collect()
}

pub fn any_failed(reports: &[VerificationReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn ids_are_unique_and_suites_parse() {
        let mut ids: Vec<_> = registry().iter().map(|e| e.id).collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), n);
        for e in registry() {
            assert!(!e.suite_params(Suite::Fast).is_empty(), "{} has no fast parameters", e.id);
            e.suite_params(Suite::Full);
        }
    }

    #[test]
    fn unknown_entries_and_parameters_are_errors() {
        assert!(matches!(verify("no-such-entry", &Value::Null, 0), Err(Error::UnknownEntry(_))));
        let bad = verify("missing-top-value", &json!({"n": 3, "k": 3, "colour": 1}), 0);
        assert!(matches!(bad, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn missing_top_value_example() {
        let r = verify("missing-top-value", &json!({"n": 4, "k": 3}), 0).unwrap();
        assert_eq!(r.computed["enumerated"], "1/3");
        assert_eq!(r.computed["formula"], "1/3");
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(Outcome::exact(true).verdict(), Verdict::Pass);
        assert_eq!(Outcome::exact(false).verdict(), Verdict::Fail);
        assert_eq!(Outcome::conditional(false, false).verdict(), Verdict::ReportOnly);
        assert_eq!(Outcome::report(true, false).verdict(), Verdict::ReportOnly);
    }

    #[test]
    fn worker_count_does_not_change_reports() {
        let one = verify_all_with_workers(Suite::Fast, 9, 1);
        let three = verify_all_with_workers(Suite::Fast, 9, 3);
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
        assert!(!any_failed(&one), "{}", serde_json::to_string_pretty(&one).unwrap());
    }
}
