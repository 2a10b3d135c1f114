use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{ceil, floor, fmt_ratio, int, pow_ratio, serde_ratio, to_f64, Rational};

/// The constants of one density-increment step, chained from `θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementParams {
    pub k: usize,
    pub n: u64,
    #[serde(with = "serde_ratio")]
    pub delta: Rational,
    /// `PDHJ(k-1, δ/4)`.
    #[serde(with = "serde_ratio")]
    pub theta: Rational,
    /// `δ²θ/96k`.
    #[serde(with = "serde_ratio")]
    pub eta: Rational,
    /// `δθ/12k`.
    #[serde(with = "serde_ratio")]
    pub beta: Rational,
    /// `4η/δ = δθ/24k = β/2`.
    #[serde(with = "serde_ratio")]
    pub gamma: Rational,
    /// `γ²/6(k-1)`, used when partitioning.
    #[serde(with = "serde_ratio")]
    pub eta_partition: Rational,
    /// `⌊n^{1/4}⌋`.
    pub m: u64,
    /// `⌊βm/8k²⌋`.
    pub r: u64,
    /// `m ≤ n^{1/4}`; false only when `m` was overridden.
    pub m_ok: bool,
    /// `n ≥ (16k/η)^12`.
    pub n_large_enough: bool,
}

impl IncrementParams {
    pub fn new(k: usize, delta: Rational, theta: Rational, n: u64) -> Result<Self> {
        Self::with_m(k, delta, theta, n, fourth_root(n))
    }

    /// The `k = 3` chain with `θ = δ²/32`.
    pub fn ternary(delta: Rational, n: u64) -> Result<Self> {
        let theta = pow_ratio(&delta, 2) / int(32);
        Self::new(3, delta, theta, n)
    }

    pub fn with_m(k: usize, delta: Rational, theta: Rational, n: u64, m: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::param("need k >= 2"));
        }
        check_unit(&delta, "delta")?;
        check_unit(&theta, "theta")?;
        let kr = int(k as u64);
        let eta = pow_ratio(&delta, 2) * &theta / (int(96) * &kr);
        let beta = &delta * &theta / (int(12) * &kr);
        let gamma = &beta / int(2);
        let eta_partition = pow_ratio(&gamma, 2) / int(6 * (k as u64 - 1));
        let r = floor(&(&beta * int(m) / (int(8) * &kr * &kr))).to_u64().unwrap_or(0);
        let threshold = pow_ratio(&(int(16) * &kr / &eta), 12);
        Ok(IncrementParams {
            k,
            n,
            m_ok: m.checked_pow(4).is_some_and(|m4| m4 <= n),
            n_large_enough: int(n) >= threshold,
            delta,
            theta,
            eta,
            beta,
            gamma,
            eta_partition,
            m,
            r,
        })
    }
}

fn fourth_root(n: u64) -> u64 {
    let mut m = (n as f64).powf(0.25) as u64;
    while (m + 1).checked_pow(4).is_some_and(|p| p <= n) {
        m += 1;
    }
    while m.checked_pow(4).is_none_or(|p| p > n) {
        m -= 1;
    }
    m
}

fn check_unit(x: &Rational, name: &str) -> Result<()> {
    if x.is_positive() && x <= &Rational::one() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in (0, 1], got {}", fmt_ratio(x))))
    }
}

/// Every explicit constant of the `k = 3` argument for a given density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub k: usize,
    #[serde(with = "serde_ratio")]
    pub delta: Rational,
    /// `PDHJ(2, δ) = δ²/2`, the Sperner line density.
    #[serde(with = "serde_ratio")]
    pub pdhj2: Rational,
    /// `θ = PDHJ(2, δ/4) = δ²/32`.
    #[serde(with = "serde_ratio")]
    pub theta: Rational,
    /// `γ = δθ/72 = δ³/2304`.
    #[serde(with = "serde_ratio")]
    pub gamma: Rational,
    /// `η = γ²/6(k-1) = δ⁶/(12·2304²)`.
    #[serde(with = "serde_ratio")]
    pub eta: Rational,
    /// `δ⁶/2^27`.
    #[serde(with = "serde_ratio")]
    pub eta_floor: Rational,
    /// `η ≥ δ⁶/2^27`.
    pub eta_floor_holds: bool,
    /// `r = ⌊δ³⌊n^{1/4}⌋/c⌋` with `c` as used in the final count.
    pub r_denominator: u64,
    /// `c` obtained by substituting `θ = δ²/32`, `k = 3` into `⌊δθ⌊n^{1/4}⌋/96k³⌋`.
    pub r_denominator_derived: u64,
    pub r_formula: String,
    pub d_formula: String,
    /// `MDHJ(2, d, ε) = 25 ε^{-2^d}`.
    pub mdhj2_formula: String,
    /// `3072 δ^{-2}`.
    #[serde(with = "serde_ratio")]
    pub iterations: Rational,
    /// The cruder `2304/δ³`.
    #[serde(with = "serde_ratio")]
    pub iterations_crude: Rational,
    /// `⌈20000 δ^{-2}⌉`.
    pub tower_height: u64,
}

impl BoundsReport {
    /// `⌊δ³⌊n^{1/4}⌋/c⌋`.
    pub fn r_at(&self, n: u64) -> BigInt {
        floor(&(pow_ratio(&self.delta, 3) * int(fourth_root(n)) / int(self.r_denominator)))
    }

    /// `(δ/2) log^{(6)} n`, with `n` given by its base-2 logarithm so that
    /// meaningful sizes fit; `None` when the iterated logarithm leaves the
    /// positive reals.
    pub fn d_at(&self, log2_n: f64) -> Option<f64> {
        Some(to_f64(&self.delta) / 2.0 * iterated_log2(log2_n, 5)?)
    }

    /// `MDHJ(2, d, ε) = 25 ε^{-2^d}`; `None` if `2^d` overflows `u32`.
    pub fn mdhj2(eps: &Rational, d: u32) -> Option<Rational> {
        let exp = 1u32.checked_shl(d)?;
        Some(int(25) * pow_ratio(&(Rational::one() / eps), exp))
    }
}

/// `log₂` applied `times` times; `None` once a value is not positive.
pub fn iterated_log2(x: f64, times: usize) -> Option<f64> {
    let mut v = x;
    for _ in 0..times {
        if v <= 0.0 || !v.is_finite() {
            return None;
        }
        v = v.log2();
    }
    (v > 0.0 || times == 0).then_some(v)
}

/// Evaluates every named constant for `k = 3`.
pub fn bounds_calculator(k: usize, delta: &Rational) -> Result<BoundsReport> {
    if k != 3 {
        return Err(Error::param(format!("explicit constants are only available for k = 3, got k = {k}")));
    }
    check_unit(delta, "delta")?;
    let d2 = pow_ratio(delta, 2);
    let d3 = pow_ratio(delta, 3);
    let theta = &d2 / int(32);
    let gamma = &d3 / int(2304);
    let eta = pow_ratio(&gamma, 2) / int(6 * (k as u64 - 1));
    let eta_floor = pow_ratio(delta, 6) / int(1 << 27);
    // 96 k³ / (δθ) · δ³ with θ = δ²/32
    let derived: u64 = 96 * 27 * 32;
    let height = ceil(&(int(20000) / &d2));
    let tower_height = height
        .to_u64()
        .ok_or_else(|| Error::param(format!("tower height {height} exceeds 64 bits")))?;
    Ok(BoundsReport {
        k,
        pdhj2: &d2 / int(2),
        eta_floor_holds: eta >= eta_floor,
        theta,
        gamma,
        eta,
        eta_floor,
        r_denominator: 41472,
        r_denominator_derived: derived,
        r_formula: "floor(delta^3 * floor(n^(1/4)) / 41472)".into(),
        d_formula: "(delta/2) * log^(6)(n)".into(),
        mdhj2_formula: "25 * eps^(-2^d)".into(),
        iterations: int(3072) / &d2,
        iterations_crude: int(2304) / &d3,
        tower_height,
        delta: delta.clone(),
    })
}
