//! Experiment drivers behind the `bb84z` subcommands.
//!
//! Every driver returns plain rows and has a matching CSV writer, so the
//! same code backs the CLI, the acceptance suite and the benches. Rows come
//! back in index order whatever order the workers finish in.

use std::io::Write;

use rayon::prelude::*;

use crate::attack::{rho_hat_k, CollectiveAttackSpec, InducedChannelStats};
use crate::bounds::{self, BoundParams, BoundReport, CurvePoint, HoeffdingPoint};
use crate::error::{Error, Result};
use crate::gf2::{BitString, LinearCodeSpec};
use crate::protocol::{run_trial, ProtocolConfig};
use crate::quantum::{trace_distance, DensityMatrix};
use crate::rng::trial_rng;

/// Plain decimal for moderate magnitudes, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || x.is_nan() || (1e-5..1e15).contains(&a) {
        format!("{}", x + 0.0)
    } else {
        format!("{x:e}")
    }
}

// ---------------------------------------------------------------- run

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRow {
    pub trial: u64,
    pub aborted: bool,
    pub weight_cz: usize,
    pub weight_cb: usize,
    pub weight_cs: usize,
    /// `None` when the run aborted before keys existed.
    pub keys_equal: Option<bool>,
}

pub const TRIAL_CSV_HEADER: &str = "trial,aborted,weight_cz,weight_cb,weight_cs,keys_equal";

/// Runs trials `0..trials` in parallel; trial `i` always uses stream `i`.
pub fn run_trials(cfg: &ProtocolConfig, attack: &CollectiveAttackSpec, trials: u64) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let t = run_trial(cfg, attack, trial)?;
            Ok(TrialRow {
                trial,
                aborted: t.aborted(),
                weight_cz: t.c_z.weight(),
                weight_cb: t.c_b.weight(),
                weight_cs: t.c_s.weight(),
                keys_equal: t.keys_equal(),
            })
        })
        .collect()
}

pub fn write_trial_csv<W: Write>(rows: &[TrialRow], mut out: W) -> Result<()> {
    writeln!(out, "{TRIAL_CSV_HEADER}")?;
    for r in rows {
        let eq = match r.keys_equal {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial, r.aborted, r.weight_cz, r.weight_cb, r.weight_cs, eq
        )?;
    }
    Ok(())
}

/// A proportion or mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    /// Number of observations behind the estimate.
    pub count: u64,
}

impl Estimate {
    fn of(samples: impl Iterator<Item = f64>) -> Self {
        let xs: Vec<f64> = samples.collect();
        let count = xs.len() as u64;
        if count == 0 {
            return Estimate {
                value: f64::NAN,
                std_err: f64::NAN,
                count,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let std_err = if count > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_err,
            count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub trials: u64,
    pub abort_rate: Estimate,
    pub error_rate_z: Estimate,
    pub error_rate_x: Estimate,
    pub error_rate_info: Estimate,
    /// Fraction of passing trials whose keys agree.
    pub agreement: Estimate,
    /// Fraction of all trials that pass with differing keys.
    pub pass_and_differ: Estimate,
}

pub fn summarize(cfg: &ProtocolConfig, rows: &[TrialRow]) -> RunSummary {
    let frac = |w: usize, d: usize| if d == 0 { 0.0 } else { w as f64 / d as f64 };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    RunSummary {
        trials: rows.len() as u64,
        abort_rate: Estimate::of(rows.iter().map(|r| flag(r.aborted))),
        error_rate_z: Estimate::of(rows.iter().map(|r| frac(r.weight_cz, cfg.n_z))),
        error_rate_x: Estimate::of(rows.iter().map(|r| frac(r.weight_cb, cfg.n_x))),
        error_rate_info: Estimate::of(rows.iter().map(|r| frac(r.weight_cs, cfg.n))),
        agreement: Estimate::of(rows.iter().filter_map(|r| r.keys_equal).map(flag)),
        pass_and_differ: Estimate::of(rows.iter().map(|r| flag(r.keys_equal == Some(false)))),
    }
}

pub fn write_summary_csv<W: Write>(s: &RunSummary, mut out: W) -> Result<()> {
    writeln!(out, "metric,value,std_err,count")?;
    for (name, e) in [
        ("abort_rate", s.abort_rate),
        ("error_rate_z", s.error_rate_z),
        ("error_rate_x", s.error_rate_x),
        ("error_rate_info", s.error_rate_info),
        ("key_agreement_given_pass", s.agreement),
        ("pass_and_keys_differ", s.pass_and_differ),
    ] {
        writeln!(out, "{name},{},{},{}", fmt_f64(e.value), fmt_f64(e.std_err), e.count)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- verify-distance

/// Largest `d_E^n` for which the dense eigen-solve is attempted.
pub const DEFAULT_DENSE_DIM_CAP: usize = 256;
/// Slack allowed before a margin counts as a violation.
pub const MARGIN_TOL: f64 = 1e-9;

/// The attack identifiers swept by default.
pub const DEFAULT_ATTACK_SUITE: &[&str] = &[
    "identity",
    "bitflip",
    "cnot-z",
    "cnot-x",
    "partial:1.0",
    "partial:2.5",
    "partial-x:1.5",
    "noise:0.1,0.15",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub attacks: Vec<String>,
    pub n_range: std::ops::RangeInclusive<usize>,
    /// Upper limit on `r + m`.
    pub max_rows: usize,
    /// Random codes drawn per `(n, r, m)`.
    pub codes_per_shape: usize,
    pub seed: u64,
    pub dense_dim_cap: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            attacks: DEFAULT_ATTACK_SUITE.iter().map(|s| s.to_string()).collect(),
            n_range: 2..=8,
            max_rows: 4,
            codes_per_shape: 1,
            seed: 0,
            dense_dim_cap: DEFAULT_DENSE_DIM_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerifyStatus {
    Ok,
    Violated,
    Skipped(String),
}

impl std::fmt::Display for VerifyStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerifyStatus::Ok => f.write_str("ok"),
            VerifyStatus::Violated => f.write_str("violated"),
            VerifyStatus::Skipped(why) => write!(f, "skipped: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub attack: String,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    /// `P_C` rows then `P_K` rows, `/`-separated.
    pub code: String,
    pub d_rm: usize,
    pub q_x: f64,
    /// Empty on skipped rows, which cover every `(ξ, k, k′)` of the code.
    pub xi: String,
    pub k: String,
    pub k_prime: String,
    pub distance: f64,
    pub bound: f64,
    pub margin: f64,
    pub status: VerifyStatus,
}

pub const VERIFY_CSV_HEADER: &str = "attack,n,r,m,code,d_rm,q_x,xi,k,k_prime,distance,bound,margin,status";

impl VerifyRow {
    pub fn is_checked(&self) -> bool {
        !matches!(self.status, VerifyStatus::Skipped(_))
    }
}

/// Random full-rank codes for every `(n, r, m)` with `m ≥ 1` and
/// `r + m ≤ min(n, max_rows)`, in a fixed order.
pub fn sweep_codes(spec: &SweepSpec) -> Result<Vec<LinearCodeSpec>> {
    let mut rng = trial_rng(spec.seed, 0);
    let mut codes = Vec::new();
    for n in spec.n_range.clone() {
        for total in 1..=spec.max_rows.min(n) {
            for m in 1..=total {
                for _ in 0..spec.codes_per_shape {
                    codes.push(LinearCodeSpec::random(n, total - m, m, &mut rng)?);
                }
            }
        }
    }
    Ok(codes)
}

fn code_label(code: &LinearCodeSpec) -> String {
    code.stacked_rows()
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("/")
}

fn verify_one(attack_id: &str, a: &CollectiveAttackSpec, code: &LinearCodeSpec, cap: usize) -> Result<Vec<VerifyRow>> {
    let (n, r, m) = (code.n(), code.r(), code.m());
    let d_rm = code.drm()?;
    let q_x = InducedChannelStats::of(a).q_x;
    let bound = bounds::theorem1_rhs(m as u64, n as u64, q_x, d_rm as u64);
    let row = |xi: String, k: String, k_prime: String, distance: f64, status: VerifyStatus| VerifyRow {
        attack: attack_id.to_string(),
        n,
        r,
        m,
        code: code_label(code),
        d_rm,
        q_x,
        xi,
        k,
        k_prime,
        distance,
        bound,
        margin: bound - distance,
        status,
    };
    let dim = (a.probe_dim() as u128).checked_pow(n as u32);
    if dim.is_none_or(|d| d > cap as u128) {
        let why = format!("probe space {}^{n} exceeds dense cap {cap}", a.probe_dim());
        return Ok(vec![row(
            String::new(),
            String::new(),
            String::new(),
            f64::NAN,
            VerifyStatus::Skipped(why),
        )]);
    }
    let mut rows = Vec::new();
    for xi_v in 0..(1u64 << r) {
        let xi = BitString::from_u64(xi_v, r);
        let states: Vec<DensityMatrix> = (0..(1u64 << m))
            .map(|k| rho_hat_k(a, code, &xi, &BitString::from_u64(k, m)))
            .collect::<Result<_>>()?;
        for k in 0..states.len() {
            for kp in (k + 1)..states.len() {
                let distance = trace_distance(&states[k], &states[kp])?;
                let status = if bound - distance < -MARGIN_TOL {
                    VerifyStatus::Violated
                } else {
                    VerifyStatus::Ok
                };
                rows.push(row(
                    xi.to_string(),
                    BitString::from_u64(k as u64, m).to_string(),
                    BitString::from_u64(kp as u64, m).to_string(),
                    distance,
                    status,
                ));
            }
        }
    }
    Ok(rows)
}

/// Exact distance between Eve's states for every pair of keys, against
/// the closed-form bound, over attacks × codes.
pub fn verify_distance(spec: &SweepSpec) -> Result<Vec<VerifyRow>> {
    let attacks: Vec<(String, CollectiveAttackSpec)> = spec
        .attacks
        .iter()
        .map(|id| Ok((id.clone(), CollectiveAttackSpec::resolve(id)?)))
        .collect::<Result<_>>()?;
    let codes = sweep_codes(spec)?;
    let jobs: Vec<(usize, usize)> = (0..attacks.len())
        .flat_map(|ai| (0..codes.len()).map(move |ci| (ai, ci)))
        .collect();
    let chunks: Vec<Vec<VerifyRow>> = jobs
        .par_iter()
        .map(|&(ai, ci)| verify_one(&attacks[ai].0, &attacks[ai].1, &codes[ci], spec.dense_dim_cap))
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn any_violation(rows: &[VerifyRow]) -> bool {
    rows.iter().any(|r| r.status == VerifyStatus::Violated)
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VERIFY_CSV_HEADER.split(','))?;
    for r in rows {
        let num = |x: f64| if x.is_nan() { String::new() } else { fmt_f64(x) };
        w.write_record([
            r.attack.clone(),
            r.n.to_string(),
            r.r.to_string(),
            r.m.to_string(),
            r.code.clone(),
            r.d_rm.to_string(),
            fmt_f64(r.q_x),
            r.xi.clone(),
            r.k.clone(),
            r.k_prime.clone(),
            num(r.distance),
            fmt_f64(r.bound),
            num(r.margin),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- curve

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: 0.0,
            end: 0.245,
            step: 0.005,
        }
    }
}

impl Grid {
    /// `start, start+step, …` up to `end` inclusive. Points are `start + i·step`
    /// so no drift accumulates.
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.step.is_nan()
            || self.step <= 0.0
            || !self.start.is_finite()
            || !self.end.is_finite()
            || self.end < self.start
        {
            return Err(Error::config(
                "grid",
                format!("bad grid {}..{} step {}", self.start, self.end, self.step),
            ));
        }
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// The threshold curve over `grid`, rejecting points outside `[0, 0.25)`.
pub fn curve(grid: &Grid) -> Result<Vec<CurvePoint>> {
    let pts = grid.points()?;
    if let Some(bad) = pts.iter().find(|p| !(0.0..0.25).contains(*p)) {
        return Err(Error::config("grid", format!("p_ax = {bad} is outside [0, 0.25)")));
    }
    let mut out = vec![CurvePoint { p_ax: 0.0, p_az: None }; pts.len()];
    out.par_iter_mut()
        .zip(pts.par_iter())
        .for_each(|(o, &p)| *o = bounds::threshold_curve(&[p])[0]);
    Ok(out)
}

/// `x` to 10 significant digits.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let digits = 9 - x.abs().log10().floor() as i32;
    if (0..=20).contains(&digits) {
        let s = format!("{:.*}", digits as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.9e}")
    }
}

pub fn write_curve_csv<W: Write>(pts: &[CurvePoint], mut out: W) -> Result<()> {
    writeln!(out, "p_ax,p_az")?;
    for p in pts {
        let az = p.p_az.map(sig10).unwrap_or_default();
        writeln!(out, "{},{}", sig10(p.p_ax), az)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- bounds

pub const BOUNDS_CSV_HEADER: &str =
    "n,n_z,n_x,r,m,p_az,p_ax,eps_sec,eps_rel,security_bound,reliability_bound,composability_bound,secret_rate";

pub fn write_bounds_csv<W: Write>(rows: &[(BoundParams, BoundReport)], mut out: W) -> Result<()> {
    writeln!(out, "{BOUNDS_CSV_HEADER}")?;
    for (p, b) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.n_z,
            p.n_x,
            p.r,
            p.m,
            p.p_az,
            p.p_ax,
            p.eps_sec,
            p.eps_rel,
            fmt_f64(b.security_bound),
            fmt_f64(b.reliability_bound),
            fmt_f64(b.composability_bound),
            fmt_f64(b.secret_rate)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------- hoeffding

#[derive(Clone, Debug, PartialEq)]
pub struct HoeffdingSpec {
    pub n: usize,
    pub n_x: usize,
    pub weights: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl Default for HoeffdingSpec {
    fn default() -> Self {
        HoeffdingSpec {
            n: 100,
            n_x: 100,
            weights: vec![10, 20, 50],
            eps_grid: vec![0.05, 0.1, 0.15, 0.2, 0.3],
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoeffdingRow {
    pub weight: usize,
    pub point: HoeffdingPoint,
}

pub const HOEFFDING_CSV_HEADER: &str = "n,n_x,weight,eps,threshold,trials,exceed,empirical,std_err,bound,within_3se";

/// One population per weight, ones first; sampling is uniform so the
/// arrangement does not matter. Weight `i` uses stream `i`.
pub fn hoeffding(spec: &HoeffdingSpec) -> Result<Vec<HoeffdingRow>> {
    let total = spec.n + spec.n_x;
    if let Some(&w) = spec.weights.iter().find(|&&w| w > total) {
        return Err(Error::config("weight", format!("{w} exceeds population size {total}")));
    }
    let per_weight: Vec<Vec<HoeffdingRow>> = spec
        .weights
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let pop = BitString::from_bits((0..total).map(|j| j < w));
            let mut rng = trial_rng(spec.seed, i as u64);
            let pts = bounds::hoeffding_empirical(&pop, spec.n, &spec.eps_grid, spec.trials, &mut rng)?;
            Ok(pts.into_iter().map(|point| HoeffdingRow { weight: w, point }).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_weight.into_iter().flatten().collect())
}

pub fn write_hoeffding_csv<W: Write>(spec: &HoeffdingSpec, rows: &[HoeffdingRow], mut out: W) -> Result<()> {
    writeln!(out, "{HOEFFDING_CSV_HEADER}")?;
    for HoeffdingRow { weight, point: p } in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            spec.n,
            spec.n_x,
            weight,
            p.eps,
            fmt_f64(p.threshold),
            p.trials,
            p.exceed,
            fmt_f64(p.empirical),
            fmt_f64(p.std_err),
            fmt_f64(p.bound),
            p.within(3.0)
        )?;
    }
    Ok(())
}
