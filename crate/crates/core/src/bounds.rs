//! Closed-form security, reliability and rate quantities.

use rand::Rng;

use crate::attack::binomial_tail;
use crate::error::{Error, Result};
use crate::gf2::BitString;

/// Bisection stopping width for the threshold solvers.
pub const BISECTION_TOL: f64 = 1e-10;
/// Distance kept from the ends of the bisection brackets.
pub const BRACKET_MARGIN: f64 = 1e-12;

/// Binary entropy in bits, with `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::OutOfDomain(format!("H_2 argument {x} is outside [0, 1]")));
    }
    Ok(h2_unchecked(x))
}

fn h2_unchecked(x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    // ln(1-x) via ln_1p keeps precision for x near 0.
    -(x * x.ln() + (1.0 - x) * (-x).ln_1p()) / std::f64::consts::LN_2
}

/// Key length: finite `n`, or the asymptotic limit where `1/n` vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockLength {
    Finite(u64),
    Infinite,
}

impl BlockLength {
    fn inverse(self) -> f64 {
        match self {
            BlockLength::Finite(n) => 1.0 / n as f64,
            BlockLength::Infinite => 0.0,
        }
    }
}

fn rate_terms(p_az: f64, p_ax: f64, eps_sec: f64, eps_rel: f64, n: BlockLength) -> Result<(f64, f64)> {
    let sec_arg = 2.0 * p_ax + 2.0 * eps_sec;
    let rel_arg = p_az + eps_rel + n.inverse();
    let sec = h2(sec_arg).map_err(|_| {
        Error::OutOfDomain(format!(
            "security term H_2(2 p_ax + 2 eps_sec) has argument {sec_arg} outside [0, 1]"
        ))
    })?;
    let rel = h2(rel_arg).map_err(|_| {
        Error::OutOfDomain(format!(
            "reliability term H_2(p_az + eps_rel + 1/n) has argument {rel_arg} outside [0, 1]"
        ))
    })?;
    Ok((sec, rel))
}

/// `1 − H_2(2 p_ax + 2 ε_sec) − H_2(p_az + ε_rel + 1/n)`.
pub fn secret_rate(p_az: f64, p_ax: f64, eps_sec: f64, eps_rel: f64, n: BlockLength) -> Result<f64> {
    let (sec, rel) = rate_terms(p_az, p_ax, eps_sec, eps_rel, n)?;
    Ok(1.0 - sec - rel)
}

/// The strict threshold inequality `H_2(2 p_ax + 2 ε_sec) + H_2(p_az + ε_rel + 1/n) < 1`.
pub fn below_threshold(p_az: f64, p_ax: f64, eps_sec: f64, eps_rel: f64, n: BlockLength) -> Result<bool> {
    let (sec, rel) = rate_terms(p_az, p_ax, eps_sec, eps_rel, n)?;
    Ok(sec + rel < 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub n: u64,
    pub n_z: u64,
    pub n_x: u64,
    pub r: u64,
    pub m: u64,
    pub p_az: f64,
    pub p_ax: f64,
    pub eps_sec: f64,
    pub eps_rel: f64,
}

impl BoundParams {
    /// `R = m / n`.
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        for (field, p) in [("p_az", self.p_az), ("p_ax", self.p_ax)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("{p} is not in [0, 1]")));
            }
        }
        for (field, e) in [("eps_sec", self.eps_sec), ("eps_rel", self.eps_rel)] {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::config(field, format!("{e} must be a non-negative real")));
            }
        }
        if self.r + self.m > self.n {
            return Err(Error::config(
                "m",
                format!("r + m = {} exceeds n = {}", self.r + self.m, self.n),
            ));
        }
        Ok(())
    }
}

/// `2R·n·exp(−(n_x/(n+n_x))²·n·ε_sec²)`.
pub fn security_exponent_bound(p: &BoundParams) -> f64 {
    let frac = p.n_x as f64 / (p.n + p.n_x) as f64;
    2.0 * p.rate() * p.n as f64 * (-(frac * frac) * p.n as f64 * p.eps_sec * p.eps_sec).exp()
}

/// `exp(−2·(n_z/(n+n_z))²·n·ε_rel²)`.
pub fn reliability_exponent_bound(p: &BoundParams) -> f64 {
    hoeffding_tail_bound(p.n, p.n_z, p.eps_rel)
}

/// Reliability term plus security term.
pub fn composability_bound(p: &BoundParams) -> f64 {
    reliability_exponent_bound(p) + security_exponent_bound(p)
}

/// `exp(−2·(n_x/(n+n_x))²·n·ε²)`: the sampling-without-replacement tail.
pub fn hoeffding_tail_bound(n: u64, n_x: u64, eps: f64) -> f64 {
    let frac = n_x as f64 / (n + n_x) as f64;
    (-2.0 * frac * frac * n as f64 * eps * eps).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub security_bound: f64,
    pub reliability_bound: f64,
    pub composability_bound: f64,
    pub secret_rate: f64,
    pub threshold_ok: bool,
}

pub fn evaluate(p: &BoundParams) -> Result<BoundReport> {
    p.validate()?;
    let security_bound = security_exponent_bound(p);
    let reliability_bound = reliability_exponent_bound(p);
    let n = BlockLength::Finite(p.n);
    Ok(BoundReport {
        security_bound,
        reliability_bound,
        composability_bound: reliability_bound + security_bound,
        secret_rate: secret_rate(p.p_az, p.p_ax, p.eps_sec, p.eps_rel, n)?,
        threshold_ok: below_threshold(p.p_az, p.p_ax, p.eps_sec, p.eps_rel, n)?,
    })
}

/// Monte-Carlo tail for one deviation `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoeffdingPoint {
    pub eps: f64,
    /// `(n_x/(n+n_x))·ε`; a draw counts when `mean − μ` exceeds it.
    pub threshold: f64,
    pub exceed: u64,
    pub trials: u64,
    pub empirical: f64,
    /// Binomial standard error of `empirical`.
    pub std_err: f64,
    pub bound: f64,
}

impl HoeffdingPoint {
    /// `empirical <= bound + k·std_err`.
    pub fn within(&self, k: f64) -> bool {
        self.empirical <= self.bound + k * self.std_err
    }
}

/// Draws `trials` samples of size `sample_size` without replacement from
/// `population` and reports, for each `ε`, how often the sample mean exceeds
/// the population mean by more than `(n_x/(n+n_x))·ε`, where `n` is the sample
/// size and `n_x` the remainder.
pub fn hoeffding_empirical<R: Rng + ?Sized>(
    population: &BitString,
    sample_size: usize,
    eps_grid: &[f64],
    trials: u64,
    rng: &mut R,
) -> Result<Vec<HoeffdingPoint>> {
    let total = population.len();
    if sample_size == 0 || sample_size > total {
        return Err(Error::OutOfDomain(format!(
            "sample size {sample_size} not in 1..={total}"
        )));
    }
    if trials == 0 {
        return Err(Error::OutOfDomain("trials must be at least 1".into()));
    }
    let n = sample_size as u64;
    let n_x = (total - sample_size) as u64;
    let mu = population.weight() as f64 / total as f64;
    let thresholds: Vec<f64> = eps_grid.iter().map(|&e| n_x as f64 / (n + n_x) as f64 * e).collect();
    let bits: Vec<bool> = population.iter().collect();
    let mut exceed = vec![0u64; eps_grid.len()];
    for _ in 0..trials {
        let ones = rand::seq::index::sample(rng, total, sample_size)
            .into_iter()
            .filter(|&j| bits[j])
            .count();
        let dev = ones as f64 / sample_size as f64 - mu;
        for (cnt, &t) in exceed.iter_mut().zip(&thresholds) {
            if dev > t {
                *cnt += 1;
            }
        }
    }
    Ok(eps_grid
        .iter()
        .zip(thresholds)
        .zip(exceed)
        .map(|((&eps, threshold), exceed)| {
            let empirical = exceed as f64 / trials as f64;
            HoeffdingPoint {
                eps,
                threshold,
                exceed,
                trials,
                empirical,
                std_err: (empirical * (1.0 - empirical) / trials as f64).sqrt(),
                bound: hoeffding_tail_bound(n, n_x, eps),
            }
        })
        .collect())
}

/// `2m·sqrt(P[Bin(n, q_x) >= d_rm/2])`.
///
/// The test-passing conjuncts of the full event are dropped; they can only
/// shrink the probability, so this is never tighter than the exact bound.
pub fn theorem1_rhs(m: u64, n: u64, q_x: f64, d_rm: u64) -> f64 {
    2.0 * m as f64 * binomial_tail(n, q_x, d_rm as f64 / 2.0).sqrt()
}

/// One point of the asymptotic threshold curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub p_ax: f64,
    /// `None` when no `p_az` in `[0, 0.5]` solves the boundary equation.
    pub p_az: Option<f64>,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // Assumes f(lo) < 0 <= f(hi) for an increasing f.
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// For each `p_ax`, the `p_az ∈ [0, 0.5]` on the boundary
/// `H_2(2 p_ax) + H_2(p_az) = 1` (both ε and `1/n` taken to zero).
pub fn threshold_curve(p_ax_grid: &[f64]) -> Vec<CurvePoint> {
    p_ax_grid
        .iter()
        .map(|&p_ax| CurvePoint {
            p_ax,
            p_az: curve_point(p_ax),
        })
        .collect()
}

fn curve_point(p_ax: f64) -> Option<f64> {
    if !(0.0..0.25).contains(&p_ax) {
        return None;
    }
    let budget = 1.0 - h2_unchecked(2.0 * p_ax);
    let (lo, hi) = (BRACKET_MARGIN, 0.5 - BRACKET_MARGIN);
    let f = |q: f64| h2_unchecked(q) - budget;
    if f(hi) <= 0.0 {
        // Root lies in the last 1e-12 before 1/2; H_2(1/2) = 1 exactly.
        return Some(0.5);
    }
    if f(lo) >= 0.0 {
        return Some(0.0);
    }
    Some(bisect(lo, hi, f))
}

/// The `p` with `H_2(2p) + H_2(p) = 1`, where equal thresholds stop yielding key.
pub fn symmetric_threshold() -> f64 {
    bisect(BRACKET_MARGIN, 0.25 - BRACKET_MARGIN, |p| {
        h2_unchecked(2.0 * p) + h2_unchecked(p) - 1.0
    })
}
