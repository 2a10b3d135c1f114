use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Binomial, Distribution as _};

use super::{Ctx, Entry, Outcome};
use crate::cube::{
    find_line_in_set, find_subspace_in_set, is_line_free, value_counts, CubeSet, CubeShape, Point, SearchOptions,
    Slot, Subspace, Symbol,
};
use crate::error::{Error, Result};
use crate::extremal::{max_linefree, ExtremalOptions};
use crate::measures::{
    class_tv, composed_restriction_classes, equal_slices_measure, equal_slices_prob_counts, few_k_prob_bound,
    imbalance_prob_bound, nondegenerate_equal_slices_measure, nondegenerate_prob_counts, special_composition_with,
    transfer_ratio, uniform_classes, uniform_measure, ClassLaw, Distribution, RestrictionMode,
};
use crate::rational::{abs, floor, int, pow_ratio, ratio, to_f64, Rational};
use crate::sperner::{line_density, multidim_sperner_refine, probabilistic_sperner_density, RefineMode};

/// Largest cube any entry enumerates point by point.
const MAX_POINTS: u64 = 1 << 20;
/// Largest number of subsets or `(J, y)` pairs an entry enumerates.
const MAX_CASES: u64 = 1 << 16;

pub(super) static REGISTRY: &[Entry] = &[
    Entry {
        id: "intersection-second-moment",
        summary: "weighted average of mu(S_i ∩ S_j) is at least the square of the average of mu(S_i)",
        run: intersection_second_moment,
        fast: &["{}"],
        full: &["{}", r#"{"size":40,"members":16}"#],
    },
    Entry {
        id: "sperner-line-density",
        summary: "every subset of [2]^n has equal-slices line density at least nu(A)^2 (n+1)/(n+2)",
        run: sperner_line_density,
        fast: &[r#"{"n":3}"#],
        full: &[r#"{"n":2}"#, r#"{"n":3}"#, r#"{"n":4}"#],
    },
    Entry {
        id: "missing-top-value",
        summary: "equal-slices probability that no coordinate equals k is (k-1)/(n+k-1), at most k/n",
        run: missing_top_value,
        fast: &[r#"{"n":4,"k":3}"#],
        full: &[r#"{"n":8,"k":3}"#, r#"{"n":10,"k":2}"#, r#"{"n":7,"k":5}"#],
    },
    Entry {
        id: "equal-slices-total-mass",
        summary: "equal-slices and non-degenerate equal-slices point masses each sum to 1",
        run: equal_slices_total_mass,
        fast: &[r#"{"n":4,"k":3}"#],
        full: &[r#"{"n":9,"k":3}"#, r#"{"n":6,"k":4}"#],
    },
    Entry {
        id: "nondegenerate-is-conditioned",
        summary: "non-degenerate equal-slices is equal-slices conditioned on every value occurring",
        run: nondegenerate_is_conditioned,
        fast: &[r#"{"n":4,"k":3}"#],
        full: &[r#"{"n":8,"k":3}"#, r#"{"n":7,"k":4}"#],
    },
    Entry {
        id: "nondegenerate-measure-distance",
        summary: "equal-slices and its non-degenerate version are within k^2/n in total variation",
        run: nondegenerate_measure_distance,
        fast: &[r#"{"n":5,"k":3}"#],
        full: &[r#"{"n":9,"k":3}"#, r#"{"n":12,"k":2}"#],
    },
    Entry {
        id: "few-top-value-coordinates",
        summary: "equal-slices probability of fewer than m coordinates equal to k is at most mk/n",
        run: few_top_value_coordinates,
        fast: &[r#"{"n":6,"k":3,"m":2}"#],
        full: &[r#"{"n":9,"k":3,"m":3}"#, r#"{"n":12,"k":2,"m":4}"#],
    },
    Entry {
        id: "imbalanced-value-counts",
        summary: "equal-slices probability that some value occurs fewer than m times is at most mk^2/n",
        run: imbalanced_value_counts,
        fast: &[r#"{"n":6,"k":3,"m":1}"#],
        full: &[r#"{"n":9,"k":3,"m":2}"#, r#"{"n":12,"k":2,"m":3}"#],
    },
    Entry {
        id: "special-subspace-composition",
        summary: "a non-degenerate point of a random special subspace is non-degenerate equal-slices distributed",
        run: special_subspace_composition,
        fast: &[r#"{"k":2,"d":2,"n":5}"#, r#"{"k":2,"d":3,"n":5}"#],
        full: &[r#"{"k":2,"d":2,"n":5}"#, r#"{"k":3,"d":3,"n":6}"#, r#"{"k":3,"d":4,"n":7}"#],
    },
    Entry {
        id: "probabilistic-dhj-binary",
        summary: "dense subsets of [2]^n have line density at least (delta/9) 3^-m with m = floor(4/delta)",
        run: probabilistic_dhj_binary,
        fast: &[r#"{"n":3,"delta":"1/2"}"#],
        full: &[r#"{"n":4,"delta":"1/2"}"#, r#"{"n":4,"delta":"3/4"}"#],
    },
    Entry {
        id: "measure-transfer-averaging",
        summary: "if mu is eta-close to a mixture of the nu_i then some nu_i(A) >= mu(A) - eta",
        run: measure_transfer_averaging,
        fast: &["{}"],
        full: &[r#"{"points":16,"measures":8}"#],
    },
    Entry {
        id: "uniform-balance-concentration",
        summary: "under the uniform measure every value count is within n^(2/3) of n/k with high probability",
        run: uniform_balance_concentration,
        fast: &[r#"{"n":1000,"k":3,"samples":5000}"#],
        full: &[r#"{"n":100000,"k":3,"samples":100000}"#],
    },
    Entry {
        id: "averaged-copies-distance",
        summary: "uniform [k]^m copies at uniform tails average to the uniform measure on [k]^n",
        run: averaged_copies_distance,
        fast: &[
            r#"{"n":5,"k":3,"m":2,"inner":"uniform"}"#,
            r#"{"n":5,"k":3,"m":2,"inner":"equal-slices"}"#,
        ],
        full: &[
            r#"{"n":8,"k":3,"m":2,"inner":"uniform"}"#,
            r#"{"n":8,"k":3,"m":2,"inner":"equal-slices"}"#,
            r#"{"n":16,"k":2,"m":2,"inner":"equal-slices"}"#,
        ],
    },
    Entry {
        id: "uniform-to-equal-slices-subspace",
        summary: "some restriction S_{J,y} has equal-slices density at least the uniform density minus eta",
        run: uniform_to_equal_slices_subspace,
        fast: &[r#"{"n":5,"k":3,"m":2}"#],
        full: &[r#"{"n":7,"k":3,"m":3}"#, r#"{"n":10,"k":2,"m":4}"#],
    },
    Entry {
        id: "uniform-to-lower-equal-slices-subspace",
        summary: "some restriction S_{J,y} has [k-1]^m equal-slices density at least the uniform density minus eta",
        run: uniform_to_lower_equal_slices_subspace,
        fast: &[r#"{"n":5,"k":3,"m":2}"#],
        full: &[r#"{"n":7,"k":3,"m":3}"#, r#"{"n":6,"k":4,"m":2}"#],
    },
    Entry {
        id: "equal-slices-restriction-ratio",
        summary: "uniform-in-m composed with equal-slices tails is r_{n,k,m} times equal-slices on balanced points",
        run: equal_slices_restriction_ratio,
        fast: &[
            r#"{"n":3,"k":2,"m":1}"#,
            r#"{"n":4,"k":2,"m":1}"#,
            r#"{"n":5,"k":3,"m":1}"#,
            r#"{"n":5,"k":2,"m":2}"#,
        ],
        full: &[r#"{"n":8,"k":3,"m":2}"#, r#"{"n":16,"k":2,"m":1,"beta":"1"}"#],
    },
    Entry {
        id: "lower-alphabet-uniform-distance",
        summary: "uniform [k-1]^m copies at uniform tails are eta-close to the uniform measure once n is large",
        run: lower_alphabet_uniform_distance,
        fast: &[r#"{"n":6,"k":3,"m":1}"#],
        full: &[r#"{"n":16,"k":3,"m":2}"#, r#"{"n":81,"k":3,"m":3}"#],
    },
    Entry {
        id: "subspaces-from-lines",
        summary: "a line in the set of good tails of one (d-1)-subspace yields a d-subspace inside A",
        run: subspaces_from_lines,
        fast: &["{}"],
        full: &[r#"{"k":3,"d":2,"m":3,"n":6,"p":"4/5"}"#, r#"{"k":2,"d":3,"m":4,"n":9}"#],
    },
    Entry {
        id: "multidimensional-sperner",
        summary: "dense subsets of [2]^n contain a d-dimensional subspace found by pair refinement",
        run: multidimensional_sperner,
        fast: &[r#"{"n":10,"d":2,"p":"3/4"}"#],
        full: &[r#"{"n":16,"d":2,"p":"3/4"}"#, r#"{"n":16,"d":3,"p":"9/10"}"#],
    },
    Entry {
        id: "equal-slices-dhj-consistency",
        summary: "largest line-free subsets of [3]^n and their uniform, equal-slices and non-degenerate densities",
        run: equal_slices_dhj_consistency,
        fast: &[r#"{"n":3}"#],
        full: &[r#"{"n":4}"#],
    },
];

fn shape(k: usize, n: usize) -> Result<CubeShape> {
    let needed = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > MAX_POINTS as u128 {
        return Err(Error::BudgetExceeded { needed, budget: MAX_POINTS });
    }
    CubeShape::new(k, n)
}

fn cases(needed: u128) -> Result<()> {
    if needed > MAX_CASES as u128 {
        return Err(Error::BudgetExceeded { needed, budget: MAX_CASES });
    }
    Ok(())
}

fn probability(cx: &mut Ctx, name: &str, default: &str) -> Result<Rational> {
    let p = cx.ratio(name, default)?;
    if p.is_negative() || p > Rational::one() {
        return Err(Error::param(format!("`{name}` must lie in [0, 1]")));
    }
    Ok(p)
}

/// Number of points in each value-count class satisfying `pred`.
fn class_histogram(s: CubeShape, mut pred: impl FnMut(&[u8]) -> bool) -> HashMap<Vec<usize>, u64> {
    let mut hist = HashMap::new();
    let mut d = vec![0u8; s.n()];
    for i in 0..s.size() {
        s.digits_into(i, &mut d);
        if pred(&d) {
            *hist.entry(value_counts(&d, s.k())).or_insert(0) += 1;
        }
    }
    hist
}

fn mass(hist: &HashMap<Vec<usize>, u64>, law: impl Fn(&[usize]) -> Rational) -> Rational {
    hist.iter().fold(Rational::zero(), |acc, (c, &m)| acc + law(c) * int(m))
}

fn set_mass(a: &CubeSet, law: &ClassLaw) -> Rational {
    let k = a.shape().k();
    let mut hist: HashMap<Vec<usize>, u64> = HashMap::new();
    for i in a.iter() {
        *hist.entry(value_counts(&a.shape().digits_of(i), k)).or_insert(0) += 1;
    }
    mass(&hist, |c| law[c].clone())
}

fn intersection_second_moment(cx: &mut Ctx) -> Result<Outcome> {
    let size = cx.usize("size", 10)?;
    let members = cx.usize("members", 5)?;
    if !(1..=64).contains(&size) || !(1..=64).contains(&members) {
        return Err(Error::param("size and members must lie in 1..=64"));
    }
    let full = if size == 64 { u64::MAX } else { (1u64 << size) - 1 };
    let sets: Vec<u64> = (0..members).map(|_| cx.rng.random::<u64>() & full).collect();
    let weights: Vec<u64> = (0..members).map(|_| cx.rng.random_range(1..=10)).collect();
    let total: u64 = weights.iter().sum();
    let mu = |s: u64| ratio(s.count_ones() as u64, size as u64);
    let delta = sets.iter().zip(&weights).fold(Rational::zero(), |acc, (&s, &w)| acc + mu(s) * int(w)) / int(total);
    let mut second = Rational::zero();
    for (&s, &w) in sets.iter().zip(&weights) {
        for (&t, &v) in sets.iter().zip(&weights) {
            second += mu(s & t) * int(w * v);
        }
    }
    second /= int(total * total);
    let bound = &delta * &delta;
    Ok(Outcome::exact(second >= bound).ratio("delta", &delta).ratio("second_moment", &second).bound(&bound))
}

fn sperner_line_density(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 3)?;
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let size = 1u64.checked_shl(n as u32).filter(|&s| s < 128).unwrap_or(128);
    cases(1u128.checked_shl(size as u32).unwrap_or(u128::MAX))?;
    let s = CubeShape::new(2, n)?;
    let mut violations = 0u64;
    let mut min_slack: Option<Rational> = None;
    for mask in 0..(1u64 << size) {
        let a = CubeSet::from_indices(s, (0..size).filter(|i| mask >> i & 1 == 1))?;
        let d = probabilistic_sperner_density(&a)?;
        let slack = &d.line_density - &d.bound;
        if slack.is_negative() {
            violations += 1;
        }
        if min_slack.as_ref().is_none_or(|m| &slack < m) {
            min_slack = Some(slack);
        }
    }
    Ok(Outcome::exact(violations == 0)
        .with("sets", 1u64 << size)
        .with("violations", violations)
        .ratio("min_slack", &min_slack.unwrap_or_default())
        .bound_text("nu(A)^2 (n+1)/(n+2)"))
}

fn missing_top_value(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 4)?;
    let k = cx.usize("k", 3)?;
    let s = shape(k, n)?;
    let top = k as u8;
    let hist = class_histogram(s, |d| !d.contains(&top));
    let enumerated = mass(&hist, equal_slices_prob_counts);
    let formula = ratio(k as u64 - 1, (n + k - 1) as u64);
    let bound = ratio(k as u64, n as u64);
    Ok(Outcome::exact(enumerated == formula && enumerated <= bound)
        .ratio("enumerated", &enumerated)
        .ratio("formula", &formula)
        .bound(&bound))
}

fn equal_slices_total_mass(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 4)?;
    let k = cx.usize("k", 3)?;
    let s = shape(k, n)?;
    let hist = class_histogram(s, |_| true);
    let es = mass(&hist, equal_slices_prob_counts);
    let mut out_holds = es.is_one();
    let mut out = Outcome::exact(true).ratio("equal_slices_total", &es);
    if n >= k {
        let nd = mass(&hist, nondegenerate_prob_counts);
        out_holds &= nd.is_one();
        out = out.ratio("nondegenerate_total", &nd);
    }
    out.holds = out_holds;
    Ok(out)
}

fn nondegenerate_is_conditioned(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 4)?;
    let k = cx.usize("k", 3)?;
    let s = shape(k, n)?;
    if n < k {
        return Ok(Outcome::conditional(false, false).note("no non-degenerate points when n < k"));
    }
    let hist = class_histogram(s, |_| true);
    let nondeg = |c: &[usize]| c.iter().all(|&a| a > 0);
    let p_nondeg = mass(&hist, |c| if nondeg(c) { equal_slices_prob_counts(c) } else { Rational::zero() });
    let mismatches = hist
        .keys()
        .filter(|c| {
            let expected =
                if nondeg(c) { equal_slices_prob_counts(c) / &p_nondeg } else { Rational::zero() };
            nondegenerate_prob_counts(c) != expected
        })
        .count();
    Ok(Outcome::exact(mismatches == 0)
        .ratio("p_nondegenerate", &p_nondeg)
        .with("classes", hist.len())
        .with("mismatched_classes", mismatches))
}

fn nondegenerate_measure_distance(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 5)?;
    let k = cx.usize("k", 3)?;
    let s = shape(k, n)?;
    if n < k {
        return Ok(Outcome::conditional(false, false).note("the non-degenerate law needs n >= k"));
    }
    let hist = class_histogram(s, |_| true);
    let tv = mass(&hist, |c| abs(&(equal_slices_prob_counts(c) - nondegenerate_prob_counts(c)))) / int(2);
    let library = Distribution::equal_slices(s).tv_distance(&Distribution::nondegenerate_equal_slices(s)?)?.into_inner();
    let bound = ratio((k * k) as u64, n as u64);
    Ok(Outcome::exact(tv == library && tv <= bound).ratio("tv", &tv).ratio("tv_library", &library).bound(&bound))
}

fn tail_bound(
    cx: &mut Ctx,
    m_default: usize,
    bad: impl Fn(&[usize], usize) -> bool,
    closed: fn(CubeShape, usize) -> Result<crate::measures::BoundCheck>,
) -> Result<Outcome> {
    let n = cx.usize("n", 6)?;
    let k = cx.usize("k", 3)?;
    let m = cx.usize("m", m_default)?;
    let s = shape(k, n)?;
    let lib = closed(s, m)?;
    let hist = class_histogram(s, |_| true);
    let enumerated = mass(&hist, |c| if bad(c, m) { equal_slices_prob_counts(c) } else { Rational::zero() });
    let out = if enumerated != lib.exact {
        Outcome::exact(false).note("closed form disagrees with enumeration")
    } else {
        Outcome::conditional(lib.precondition_met, enumerated <= lib.bound)
    };
    Ok(out.ratio("enumerated", &enumerated).ratio("closed_form", &lib.exact).bound(&lib.bound))
}

fn few_top_value_coordinates(cx: &mut Ctx) -> Result<Outcome> {
    tail_bound(cx, 2, |c, m| c[c.len() - 1] < m, few_k_prob_bound)
}

fn imbalanced_value_counts(cx: &mut Ctx) -> Result<Outcome> {
    tail_bound(cx, 1, |c, m| c.iter().any(|&a| a < m), imbalance_prob_bound)
}

fn special_subspace_composition(cx: &mut Ctx) -> Result<Outcome> {
    special_composition_check(cx, nondegenerate_prob_counts)
}

/// Compares the two-stage law built from `law` with the non-degenerate
/// equal-slices measure computed directly.
fn special_composition_check(cx: &mut Ctx, law: impl Fn(&[usize]) -> Rational) -> Result<Outcome> {
    let k = cx.usize("k", 2)?;
    let d = cx.usize("d", 2)?;
    let n = cx.usize("n", 5)?;
    let s = shape(k, n)?;
    shape(d, n)?;
    let pre = n >= k + d;
    if d < k {
        return Ok(Outcome::conditional(pre, false).note(format!(
            "the non-degenerate equal-slices law on [{k}]^{d} has empty support, so no point of the subspace can be drawn"
        )));
    }
    let composed = special_composition_with(s, d, &law)?;
    let target = Distribution::nondegenerate_equal_slices(s)?;
    let mut mismatches = 0u64;
    let mut tv = Rational::zero();
    for i in 0..s.size() {
        let p = composed.get(&i).cloned().unwrap_or_default();
        let q = target.prob_index(i);
        if p != q {
            mismatches += 1;
            tv += abs(&(p - q));
        }
    }
    tv /= int(2);
    let total = composed.values().fold(Rational::zero(), |acc, p| acc + p);
    Ok(Outcome::conditional(pre, mismatches == 0)
        .with("points", s.size())
        .with("mismatched_points", mismatches)
        .ratio("tv", &tv)
        .ratio("total_mass", &total))
}

fn probabilistic_dhj_binary(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 3)?;
    let delta = probability(cx, "delta", "1/2")?;
    if delta.is_zero() || n == 0 {
        return Err(Error::param("need delta > 0 and n >= 1"));
    }
    let size = 1u64.checked_shl(n as u32).filter(|&s| s < 128).unwrap_or(128);
    cases(1u128.checked_shl(size as u32).unwrap_or(u128::MAX))?;
    // antichains have equal-slices measure at most 1/(m+1), below δ/4 for this m
    let m = floor(&(int(4) / &delta)).to_u32().ok_or_else(|| Error::param("delta too small"))?;
    let theta = &delta / (int(9) * pow_ratio(&int(3), m));
    let pre = n as u64 >= m as u64 && int(n as u64) >= int(16) / &delta;
    let s = CubeShape::new(2, n)?;
    let opts = SearchOptions::default();
    let mut max_linefree = Rational::zero();
    let mut min_density: Option<Rational> = None;
    let mut dense_sets = 0u64;
    for mask in 0..(1u64 << size) {
        let a = CubeSet::from_indices(s, (0..size).filter(|i| mask >> i & 1 == 1))?;
        let nu = equal_slices_measure(&a).into_inner();
        if nu > max_linefree && is_line_free(&a) {
            max_linefree = nu.clone();
        }
        if nu >= delta {
            dense_sets += 1;
            let ld = line_density(&a, &opts)?;
            if min_density.as_ref().is_none_or(|x| &ld < x) {
                min_density = Some(ld);
            }
        }
    }
    let lym = ratio(1, n as u64 + 1);
    let holds = max_linefree == lym && min_density.as_ref().is_none_or(|x| x >= &theta);
    Ok(Outcome::conditional(pre, holds)
        .with("m", m)
        .with("dense_sets", dense_sets)
        .ratio("max_linefree_measure", &max_linefree)
        .ratio("lym_bound", &lym)
        .ratio("min_line_density", &min_density.unwrap_or_default())
        .bound(&theta))
}

fn measure_transfer_averaging(cx: &mut Ctx) -> Result<Outcome> {
    let points = cx.usize("points", 8)?;
    let measures = cx.usize("measures", 4)?;
    if !(1..=16).contains(&points) || !(1..=8).contains(&measures) {
        return Err(Error::param("points must lie in 1..=16 and measures in 1..=8"));
    }
    let rng = &mut cx.rng;
    let weights = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut w: Vec<u128> = (0..points).map(|_| rng.random_range(0..10)).collect();
        if w.iter().all(|&x| x == 0) {
            w[0] = 1;
        }
        w
    };
    let mu_w = weights(rng);
    let nu_w: Vec<Vec<u128>> = (0..measures).map(|_| weights(rng)).collect();
    let a_w: Vec<u128> = (0..measures).map(|_| rng.random_range(1..=9)).collect();
    // everything over the common denominator L = M · Π N_i · Σa
    let mu_total: u128 = mu_w.iter().sum();
    let nu_totals: Vec<u128> = nu_w.iter().map(|w| w.iter().sum()).collect();
    let a_total: u128 = a_w.iter().sum();
    let l = mu_total * nu_totals.iter().product::<u128>() * a_total;
    let mu: Vec<i128> = mu_w.iter().map(|&w| (w * (l / mu_total)) as i128).collect();
    let nu: Vec<Vec<i128>> =
        nu_w.iter().zip(&nu_totals).map(|(w, &t)| w.iter().map(|&x| (x * (l / t)) as i128).collect()).collect();
    let mix: Vec<i128> = (0..points)
        .map(|x| (0..measures).map(|i| (a_w[i] * nu_w[i][x] * (l / (nu_totals[i] * a_total))) as i128).sum())
        .collect();
    let two_eta: i128 = mu.iter().zip(&mix).map(|(a, b)| (a - b).abs()).sum();
    let mut violations = 0u64;
    let mut min_slack = i128::MAX;
    for mask in 0u32..(1 << points) {
        let pick = |v: &[i128]| (0..points).filter(|x| mask >> x & 1 == 1).map(|x| v[x]).sum::<i128>();
        let target = 2 * pick(&mu) - two_eta;
        let best = nu.iter().map(|v| 2 * pick(v)).max().expect("at least one measure");
        if best < target {
            violations += 1;
        }
        min_slack = min_slack.min(best - target);
    }
    let denom = Rational::from_integer((2 * l).into());
    let eta = Rational::from_integer(two_eta.into()) / &denom;
    Ok(Outcome::exact(violations == 0)
        .ratio("eta", &eta)
        .with("subsets", 1u64 << points)
        .with("violations", violations)
        .ratio("min_slack", &(Rational::from_integer(min_slack.into()) / denom)))
}

fn uniform_balance_concentration(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 1000)?;
    let k = cx.usize("k", 3)?;
    let samples = cx.usize("samples", 10_000)? as u64;
    if n == 0 || k < 2 || samples == 0 || samples > 10_000_000 {
        return Err(Error::param("need n >= 1, k >= 2 and 1 <= samples <= 10^7"));
    }
    let dev = (n as f64).powf(2.0 / 3.0);
    let centre = n as f64 / k as f64;
    let mut bad = 0u64;
    for _ in 0..samples {
        // value counts of a uniform point, one value at a time
        let mut remaining = n as u64;
        let mut counts = Vec::with_capacity(k);
        for j in 0..k - 1 {
            let c = Binomial::new(remaining, 1.0 / (k - j) as f64)
                .map_err(|e| Error::param(e.to_string()))?
                .sample(&mut cx.rng);
            remaining -= c;
            counts.push(c);
        }
        counts.push(remaining);
        if counts.iter().any(|&c| (c as f64 - centre).abs() >= dev) {
            bad += 1;
        }
    }
    let rate = bad as f64 / samples as f64;
    let bound = 2.0 * k as f64 * (-2.0 * (n as f64).cbrt()).exp();
    let noise = 3.0 / (samples as f64).sqrt();
    Ok(Outcome::report(true, rate <= bound + noise)
        .with("imbalanced", bad)
        .with("empirical_rate", rate)
        .with("sampling_allowance", noise)
        .bound_text(bound)
        .samples(samples))
}

fn averaged_copies_distance(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 5)?;
    let k = cx.usize("k", 3)?;
    let m = cx.usize("m", 2)?;
    let inner = cx.text("inner", "uniform")?;
    let eta = probability(cx, "eta", "1/4")?;
    shape(k, n)?;
    let ishape = shape(k, m)?;
    let inner_law = match inner.as_str() {
        "uniform" => Distribution::uniform(ishape),
        "equal-slices" => Distribution::equal_slices(ishape),
        other => return Err(Error::param(format!("unknown inner law `{other}` (uniform or equal-slices)"))),
    };
    let law = composed_restriction_classes(k, n, m, &inner_law, RestrictionMode::UniformTail)?;
    let tv = class_tv(&law, &uniform_classes(k, n));
    let out = if inner == "uniform" {
        Outcome::exact(tv.is_zero()).bound(&Rational::zero())
    } else {
        let pre = (m as u64).checked_pow(4).is_some_and(|m4| m4 <= n as u64)
            && !eta.is_zero()
            && int(n as u64) >= pow_ratio(&(int(16 * k as u64) / &eta), 12);
        Outcome::conditional(pre, tv <= eta).bound(&eta)
    };
    Ok(out.ratio("tv", &tv))
}

fn uniform_to_equal_slices_subspace(cx: &mut Ctx) -> Result<Outcome> {
    subspace_average(cx, false)
}

fn uniform_to_lower_equal_slices_subspace(cx: &mut Ctx) -> Result<Outcome> {
    subspace_average(cx, true)
}

/// Averages the equal-slices density of `A` over every restriction
/// `S_{J,y}`, on `[k]^m` or on its copy of `[k-1]^m`, and compares it with
/// the composed law and with the uniform density.
fn subspace_average(cx: &mut Ctx, lower: bool) -> Result<Outcome> {
    let n = cx.usize("n", 5)?;
    let k = cx.usize("k", 3)?;
    let m = cx.usize("m", 2)?;
    let p = probability(cx, "p", "1/2")?;
    let s = shape(k, n)?;
    if m == 0 || m > n || (lower && k < 2) {
        return Err(Error::param("need 1 <= m <= n (and k >= 2 for the lower alphabet)"));
    }
    let tails = (k as u128).pow((n - m) as u32);
    let choices = (0..m).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
    cases(tails * choices)?;
    let a = CubeSet::random(s, to_f64(&p), &mut cx.rng);
    let inner_k = if lower { k - 1 } else { k };
    let ishape = CubeShape::new(inner_k, m)?;
    let local_shape = CubeShape::new(k, m)?;
    let tail_shape = (n > m).then(|| CubeShape::new(k, n - m)).transpose()?;
    let mut sum = Rational::zero();
    let mut max: Option<Rational> = None;
    for free in (0..n).combinations(m) {
        for t in 0..tail_shape.map_or(1, |ts| ts.size()) {
            let y = tail_shape.map_or_else(Vec::new, |ts| ts.digits_of(t));
            let local = Subspace::with_free_coordinates(s, &free, &y)?.pullback(&a)?;
            let value = if lower {
                let restricted = CubeSet::from_predicate(ishape, |x| local.contains_index(local_shape.index_of(x)));
                equal_slices_measure(&restricted).into_inner()
            } else {
                equal_slices_measure(&local).into_inner()
            };
            if max.as_ref().is_none_or(|x| &value > x) {
                max = Some(value.clone());
            }
            sum += value;
        }
    }
    let average = sum / Rational::from_integer((tails * choices).into());
    let max = max.unwrap_or_default();
    let law = composed_restriction_classes(k, n, m, &Distribution::equal_slices(ishape), RestrictionMode::UniformTail)?;
    let predicted = set_mass(&a, &law);
    let eta = class_tv(&law, &uniform_classes(k, n));
    let delta = uniform_measure(&a).into_inner();
    let floor = &delta - &eta;
    Ok(Outcome::exact(average == predicted && average >= floor && max >= floor)
        .ratio("uniform_density", &delta)
        .ratio("eta", &eta)
        .ratio("average", &average)
        .ratio("composed_law_mass", &predicted)
        .ratio("max", &max)
        .bound(&floor))
}

fn equal_slices_restriction_ratio(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 5)?;
    let k = cx.usize("k", 3)?;
    let m = cx.usize("m", 1)?;
    let beta = probability(cx, "beta", "1/2")?;
    let p = probability(cx, "p", "1/2")?;
    let s = shape(k, n)?;
    if m == 0 {
        return Err(Error::param("m must be positive"));
    }
    let r = transfer_ratio(n, k, m)?;
    let inner = Distribution::uniform(shape(k, m)?);
    let law = composed_restriction_classes(k, n, m, &inner, RestrictionMode::EqualSlicesTail)?;
    let balanced: Vec<&Vec<usize>> = law.keys().filter(|c| c.iter().all(|&a| a >= m)).collect();
    let mismatches = balanced.iter().filter(|c| law[**c] != &r * equal_slices_prob_counts(c)).count();

    let a = CubeSet::random(s, to_f64(&p), &mut cx.rng);
    let composed = set_mass(&a, &law);
    let nu = equal_slices_measure(&a).into_inner();
    let diff = abs(&(&composed - &nu));
    let kk = int(k as u64);
    let n_r = int(n as u64);
    let pre = int(m as u64) <= &beta * &n_r / (int(8) * &kk) && int(m as u64) <= &beta * &n_r / (int(2) * &kk * &kk);
    let holds = mismatches == 0 && !balanced.is_empty() && (!pre || diff <= beta);
    Ok(Outcome::exact(holds)
        .ratio("ratio", &r)
        .with("balanced_classes", balanced.len())
        .with("mismatched_classes", mismatches)
        .ratio("composed_measure", &composed)
        .ratio("equal_slices_measure", &nu)
        .ratio("difference", &diff)
        .with("inequality_precondition", pre)
        .bound(&beta))
}

fn lower_alphabet_uniform_distance(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 6)?;
    let k = cx.usize("k", 3)?;
    let m = cx.usize("m", 1)?;
    let eta = probability(cx, "eta", "1/4")?;
    if k < 2 {
        return Err(Error::param("need k >= 2"));
    }
    let inner = Distribution::uniform(shape(k - 1, m)?);
    let law = composed_restriction_classes(k, n, m, &inner, RestrictionMode::UniformTail)?;
    let tv = class_tv(&law, &uniform_classes(k, n));
    let pre = (m as u64).checked_pow(4).is_some_and(|m4| m4 <= n as u64)
        && !eta.is_zero()
        && int(n as u64) >= pow_ratio(&(int(12) / &eta), 12);
    Ok(Outcome::conditional(pre, tv <= eta).ratio("tv", &tv).bound(&eta))
}

fn subspaces_from_lines(cx: &mut Ctx) -> Result<Outcome> {
    let k = cx.usize("k", 2)?;
    let d = cx.usize("d", 2)?;
    let m = cx.usize("m", 3)?;
    let n = cx.usize("n", 6)?;
    let p = probability(cx, "p", "3/4")?;
    if k < 2 || d < 2 || m == 0 || m >= n {
        return Err(Error::param("need k >= 2, d >= 2 and 1 <= m < n"));
    }
    let s = shape(k, n)?;
    let code_shape = shape(k + d - 1, m)?;
    let big_m = code_shape.size();
    let mut encodings = 0u64;
    for i in 0..big_m {
        if Subspace::from_encoding(&Point::from_index(code_shape, i)?, k, false).is_ok() {
            encodings += 1;
        }
    }

    let a = CubeSet::random(s, to_f64(&p), &mut cx.rng);
    let delta = uniform_measure(&a).into_inner();
    let x_shape = CubeShape::new(k, m)?;
    let y_shape = CubeShape::new(k, n - m)?;
    let ys = y_shape.size();
    let fibers: Vec<CubeSet> = (0..ys)
        .map(|y| CubeSet::from_indices(x_shape, (0..x_shape.size()).filter(|&x| a.contains_index(x * ys + y))))
        .collect::<Result<_>>()?;
    let half = &delta / int(2);
    let good: Vec<u64> = (0..ys).filter(|&y| fibers[y as usize].density() >= half).collect();
    let opts = SearchOptions::default();
    let mut found: BTreeMap<Vec<u8>, (u64, Subspace)> = BTreeMap::new();
    let mut missing = 0u64;
    for &y in &good {
        match find_subspace_in_set(&fibers[y as usize], d - 1, &opts)? {
            Some(sigma) => found.entry(sigma.encoding().digits().to_vec()).or_insert((0, sigma)).0 += 1,
            None => missing += 1,
        }
    }
    // most frequent σ, ties to the smaller encoding
    let best = found.values().fold(None::<&(u64, Subspace)>, |acc, e| match acc {
        Some(b) if b.0 >= e.0 => Some(b),
        _ => Some(e),
    });
    let pigeon_floor = &half / int(big_m);
    let mut out = Outcome::conditional(missing == 0 && !good.is_empty(), false)
        .with("encodings", encodings)
        .with("encoding_bound", big_m)
        .ratio("uniform_density", &delta)
        .ratio("good_tail_density", &ratio(good.len() as u64, ys))
        .with("fibers_without_subspace", missing);
    let Some((_, sigma)) = best else {
        out.holds = encodings <= big_m;
        return Ok(out.note("no dense fiber contains a subspace of dimension d-1").bound(&pigeon_floor));
    };
    let g_sigma = CubeSet::from_indices(y_shape, (0..ys).filter(|&y| sigma.is_contained_in(&fibers[y as usize])))?;
    let g_density = g_sigma.density();
    let mut product_ok = true;
    let mut line_found = false;
    if let Some(line) = find_line_in_set(&g_sigma, &opts)? {
        line_found = true;
        let mut slots = sigma.slots().to_vec();
        slots.extend(line.symbols().iter().map(|sym| match *sym {
            Symbol::Fixed(v) => Slot::Fixed(v),
            Symbol::Wildcard => Slot::Wild(d - 1),
        }));
        let product = Subspace::from_slots(s, slots, d)?;
        product_ok = product.is_contained_in(&a);
        out = out.with("subspace", &product);
    }
    out.holds = encodings <= big_m && g_density >= pigeon_floor && product_ok;
    Ok(out.ratio("best_sigma_tail_density", &g_density).with("line_found", line_found).bound(&pigeon_floor))
}

fn multidimensional_sperner(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 10)?;
    let d = cx.usize("d", 2)?;
    let p = probability(cx, "p", "3/4")?;
    let s = shape(2, n)?;
    let a = CubeSet::random(s, to_f64(&p), &mut cx.rng);
    let trace = multidim_sperner_refine(&a, d, RefineMode::Derandomized)?;
    let contained = trace.subspace.as_ref().is_some_and(|v| v.dim() == d && v.is_contained_in(&a));
    let mut out = Outcome::conditional(trace.precondition_met, trace.succeeded() && contained)
        .ratio("density", &trace.density)
        .with("found", trace.succeeded())
        .with("contained", contained)
        .bound_text(trace.density_bound);
    if let Some(v) = &trace.subspace {
        out = out.with("subspace", v);
    }
    Ok(out)
}

fn equal_slices_dhj_consistency(cx: &mut Ctx) -> Result<Outcome> {
    let n = cx.usize("n", 3)?;
    if !(1..=4).contains(&n) {
        return Err(Error::BudgetExceeded { needed: 3u128.pow(n.min(40) as u32), budget: 81 });
    }
    let s = CubeShape::new(3, n)?;
    let res = max_linefree(s, &ExtremalOptions::default())?;
    let w = &res.witness;
    let free = is_line_free(w);
    Ok(Outcome::report(true, free && res.optimal)
        .with("max_size", res.best_size)
        .with("optimal", res.optimal)
        .ratio("uniform_density", &uniform_measure(w).into_inner())
        .ratio("equal_slices_density", &equal_slices_measure(w).into_inner())
        .ratio("nondegenerate_density", &nondegenerate_equal_slices_measure(w)?.into_inner())
        .with("witness_line_free", free))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Ctx, Verdict};
    use crate::measures::{nondegenerate_slice_count, seeded_rng};
    use crate::rational::{big, multinomial};
    use serde_json::json;

    fn run(oracle: Oracle, params: serde_json::Value) -> Outcome {
        let mut cx = Ctx::new(&params, seeded_rng(1)).unwrap();
        oracle(&mut cx).unwrap()
    }

    type Oracle = fn(&mut Ctx) -> Result<Outcome>;

    #[test]
    fn special_composition_holds_when_d_at_least_k() {
        for (k, d, n) in [(2, 2, 4), (2, 2, 5), (2, 3, 5), (3, 3, 6)] {
            let out = run(special_subspace_composition, json!({"k": k, "d": d, "n": n}));
            assert!(out.holds, "({k},{d},{n}) {:?}", out.computed);
        }
    }

    #[test]
    fn special_composition_fails_below_k() {
        let out = run(special_subspace_composition, json!({"k": 3, "d": 2, "n": 6}));
        assert_eq!(out.verdict(), Verdict::Fail);
        assert!(out.note.is_some());
    }

    #[test]
    fn tampered_multinomial_is_caught() {
        // off by one in the multinomial coefficient of the point law
        let tampered = |c: &[usize]| {
            if c.contains(&0) {
                return Rational::zero();
            }
            let n: usize = c.iter().sum();
            let shape = CubeShape::new(c.len(), n).unwrap();
            Rational::one() / (big(&nondegenerate_slice_count(shape)) * (big(&multinomial(c)) + int(1)))
        };
        let mut cx = Ctx::new(&json!({"k": 2, "d": 2, "n": 5}), seeded_rng(0)).unwrap();
        let out = special_composition_check(&mut cx, tampered).unwrap();
        assert_eq!(out.verdict(), Verdict::Fail);
        assert_ne!(out.computed["mismatched_points"], "0");
    }

    #[test]
    fn restriction_ratio_identity() {
        for (n, k, m) in [(3, 2, 1), (4, 2, 1), (5, 3, 1), (5, 2, 2)] {
            let out = run(equal_slices_restriction_ratio, json!({"n": n, "k": k, "m": m}));
            assert_eq!(out.verdict(), Verdict::Pass, "({n},{k},{m}) {:?}", out.computed);
        }
    }

    #[test]
    fn uniform_copies_average_to_uniform() {
        let out = run(averaged_copies_distance, json!({"n": 6, "k": 3, "m": 3, "inner": "uniform"}));
        assert_eq!(out.computed["tv"], "0/1");
        let out = run(averaged_copies_distance, json!({"n": 6, "k": 3, "m": 3, "inner": "equal-slices"}));
        assert_eq!(out.verdict(), Verdict::ReportOnly);
        assert_ne!(out.computed["tv"], "0/1");
    }

    #[test]
    fn subspace_average_matches_composed_law() {
        for lower in [false, true] {
            let mut cx = Ctx::new(&json!({"n": 5, "k": 3, "m": 2, "p": "2/3"}), seeded_rng(4)).unwrap();
            let out = subspace_average(&mut cx, lower).unwrap();
            assert!(out.holds, "{:?}", out.computed);
            assert_eq!(out.computed["average"], out.computed["composed_law_mass"]);
        }
    }

    #[test]
    fn sperner_exhaustive_small() {
        let out = run(sperner_line_density, json!({"n": 2}));
        assert_eq!(out.computed["sets"], "16");
        assert!(out.holds);
    }

    #[test]
    fn lym_value_is_reached() {
        let out = run(probabilistic_dhj_binary, json!({"n": 3}));
        assert_eq!(out.computed["max_linefree_measure"], "1/4");
        assert!(out.holds);
    }

    #[test]
    fn enumeration_budget() {
        let mut cx = Ctx::new(&json!({"n": 30, "k": 3}), seeded_rng(0)).unwrap();
        assert!(matches!(missing_top_value(&mut cx), Err(Error::BudgetExceeded { .. })));
        let mut cx = Ctx::new(&json!({"n": 5}), seeded_rng(0)).unwrap();
        assert!(matches!(sperner_line_density(&mut cx), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn subspaces_from_lines_product_is_inside() {
        let out = run(subspaces_from_lines, json!({"p": "9/10"}));
        assert!(out.holds, "{:?}", out.computed);
        assert_eq!(out.computed["line_found"], "true");
    }
}
