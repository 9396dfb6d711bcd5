//! Fixation-probability estimators and absorption-time measurement.
//!
//! `estimate_fixation` runs `N` active-process replicas from a uniform single
//! mutant, each stopped at extinction or once `φ(M) ≥ P`, and reports the
//! fraction that reached the threshold. An attempt whose replicas use more
//! than `27T` active steps in total is abandoned; three attempts are made and
//! the median is returned.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{replica_rng, EngineError, RunMode, RunResult, RunStart, Simulator};
use crate::graph::{Graph, MutantSet};
use crate::potential::phi;
use crate::rational::{ceil_to_biguint, int, least_power_at_least, to_f64};

pub const ATTEMPTS: u64 = 3;
/// Two-sided 95% normal quantile used for Wilson intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("the estimator needs fitness r > 1")]
    FitnessNotAboveOne,
    #[error("epsilon must lie strictly between 0 and 1")]
    BadEpsilon,
    #[error("the estimator needs an undirected graph")]
    Directed,
    #[error("graph needs at least two vertices")]
    SmallGraph,
    #[error("graph is not connected")]
    NotConnected,
    #[error("at least one run is required")]
    NoRuns,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

type Result<T> = std::result::Result<T, EstimatorError>;

/// Replica count, potential threshold and step budget for one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FprasParams {
    pub r: BigRational,
    pub eps: BigRational,
    /// Replicas per attempt, `18·⌈r·d̄/(ε²(r−1))⌉`.
    pub n_runs: u64,
    /// Least `k` with `r^k ≥ 6N`.
    pub p_prime: u64,
    /// `min(P′, φ(V))`.
    pub p: BigRational,
    /// Expected-step budget `N·2r(P+1)Δ/(r−1)`.
    pub t_budget: BigRational,
    /// `⌊27T⌋`; an attempt using more active steps in total fails.
    pub t_cap: u64,
}

impl FprasParams {
    /// Per-run bound on expected active steps, `2r(P+1)Δ/(r−1)`.
    pub fn steps_per_run_bound(&self) -> BigRational {
        &self.t_budget / int(self.n_runs as i64)
    }
}

pub fn fpras_params(g: &Graph, r: &BigRational, eps: &BigRational) -> Result<FprasParams> {
    check_r_eps(r, eps)?;
    if g.is_directed() {
        return Err(EstimatorError::Directed);
    }
    if g.n() < 2 {
        return Err(EstimatorError::SmallGraph);
    }
    if !g.is_connected() {
        return Err(EstimatorError::NotConnected);
    }
    let one = int(1);
    let dbar = g.average_degree();
    let inner = r * &dbar / (eps * eps * (r - &one));
    let n_runs = (ceil_to_biguint(&inner) * 18u32).to_u64().expect("replica count fits in u64");
    let p_prime = least_power_at_least(r, &int(6 * n_runs as i64));
    let phi_v = phi(g, &MutantSet::full(g.n())).expect("connected graph has no isolated vertex");
    let p = std::cmp::min(int(p_prime as i64), phi_v);
    let t_budget = int(n_runs as i64) * int(2) * r * (&p + &one) * int(g.max_degree() as i64) / (r - &one);
    let t_cap = (&t_budget * int(27)).floor().to_integer().to_u64().unwrap_or(u64::MAX);
    Ok(FprasParams { r: r.clone(), eps: eps.clone(), n_runs, p_prime, p, t_budget, t_cap })
}

fn check_r_eps(r: &BigRational, eps: &BigRational) -> Result<()> {
    if r <= &int(1) {
        return Err(EstimatorError::FitnessNotAboveOne);
    }
    if eps <= &BigRational::zero() || eps >= &int(1) {
        return Err(EstimatorError::BadEpsilon);
    }
    Ok(())
}

/// Outcome of one batch of `N` threshold runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attempt {
    pub runs_fixated: u64,
    pub active_steps: u64,
    /// Total active steps exceeded `27T`.
    pub overran: bool,
}

impl Attempt {
    /// Fraction fixated, or the `−1` overrun sentinel.
    pub fn value(&self, n_runs: u64) -> f64 {
        if self.overran {
            -1.0
        } else {
            self.runs_fixated as f64 / n_runs as f64
        }
    }
}

/// Inputs that are answered without simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortcut {
    SingleVertex,
    Disconnected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// `None` is the failure sentinel: at least two attempts overran.
    pub value: Option<f64>,
    /// Fixated runs of the attempt whose value is the median.
    pub runs_fixated: u64,
    /// Active steps over all attempts.
    pub total_active_steps: u64,
    pub params: Option<FprasParams>,
    pub attempts: Vec<Attempt>,
    pub seed: u64,
    /// Some attempt overran its step cap.
    pub capped: bool,
    pub shortcut: Option<Shortcut>,
}

/// Runs attempt `a` of an estimate: `N` replicas on streams `(a << 40) | i`.
pub fn run_attempt(g: &Graph, params: &FprasParams, seed: u64, attempt: u64) -> Result<Attempt> {
    let sim = Simulator::new(g, to_f64(&params.r))?;
    run_attempt_with(&sim, params, seed, attempt)
}

fn run_attempt_with(sim: &Simulator<'_>, params: &FprasParams, seed: u64, attempt: u64) -> Result<Attempt> {
    let mode = RunMode::ToThreshold(params.p.clone());
    // a single run hitting this cap already pushes the total past 27T
    let cap = params.t_cap.saturating_add(1);
    let outcomes: Vec<_> = (0..params.n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, attempt << 40 | i);
            sim.run(&RunStart::Uniform, &mode, Some(cap), &mut rng, seed, None)
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut fixated = 0u64;
    let mut steps = 0u64;
    let mut capped = false;
    for o in &outcomes {
        steps = steps.saturating_add(o.active_steps);
        match o.result {
            RunResult::ThresholdReached | RunResult::Fixation => fixated += 1,
            RunResult::Extinction => {}
            RunResult::StepCapped => capped = true,
        }
    }
    Ok(Attempt { runs_fixated: fixated, active_steps: steps, overran: capped || steps > params.t_cap })
}

/// Median of three attempt values, with `−1` standing for an overrun.
pub fn median_of_three(values: [f64; 3]) -> Option<(usize, f64)> {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mid = idx[1];
    (values[mid] >= 0.0).then_some((mid, values[mid]))
}

pub fn estimate_fixation(g: &Graph, r: &BigRational, eps: &BigRational, seed: u64) -> Result<Estimate> {
    check_r_eps(r, eps)?;
    if g.is_directed() {
        return Err(EstimatorError::Directed);
    }
    let shortcut = |value: f64, s: Shortcut| Estimate {
        value: Some(value),
        runs_fixated: 0,
        total_active_steps: 0,
        params: None,
        attempts: Vec::new(),
        seed,
        capped: false,
        shortcut: Some(s),
    };
    if g.n() == 1 {
        return Ok(shortcut(1.0, Shortcut::SingleVertex));
    }
    if g.n() == 0 {
        return Err(EstimatorError::SmallGraph);
    }
    if !g.is_connected() {
        return Ok(shortcut(0.0, Shortcut::Disconnected));
    }
    let params = fpras_params(g, r, eps)?;
    let sim = Simulator::new(g, to_f64(r))?;
    let attempts: Vec<Attempt> =
        (0..ATTEMPTS).map(|a| run_attempt_with(&sim, &params, seed, a)).collect::<Result<_>>()?;
    let values = [0, 1, 2].map(|i| attempts[i].value(params.n_runs));
    let median = median_of_three(values);
    Ok(Estimate {
        value: median.map(|(_, v)| v),
        runs_fixated: median.map_or(0, |(i, _)| attempts[i].runs_fixated),
        total_active_steps: attempts.iter().map(|a| a.active_steps).fold(0, u64::saturating_add),
        capped: attempts.iter().any(|a| a.overran),
        params: Some(params),
        attempts,
        seed,
        shortcut: None,
    })
}

/// Plain Monte Carlo estimate with a Wilson score interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub runs: u64,
    pub fixated: u64,
    pub value: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Binomial standard error `sqrt(p(1−p)/runs)` of `value`.
    pub stderr: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of active runs to absorption that fixate; works for any `r > 0`
/// and for directed graphs. Replica `i` uses stream `i` of `seed`.
pub fn monte_carlo_fixation(g: &Graph, r: f64, start: &RunStart, runs: u64, seed: u64) -> Result<MonteCarlo> {
    if runs == 0 {
        return Err(EstimatorError::NoRuns);
    }
    let sim = Simulator::new(g, r)?;
    let fixated: u64 = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            sim.run(start, &RunMode::ToAbsorptionActive, None, &mut rng, seed, None)
                .map(|o| u64::from(o.result == RunResult::Fixation))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let value = fixated as f64 / runs as f64;
    let (wilson_low, wilson_high) = wilson_interval(fixated, runs, Z95);
    Ok(MonteCarlo {
        runs,
        fixated,
        value,
        wilson_low,
        wilson_high,
        stderr: (value * (1.0 - value) / runs as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTime {
    pub runs: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// Sample mean of full-process steps to absorption from a uniform single
/// mutant. Replica `i` uses stream `i` of `seed`.
pub fn mean_absorption_time(g: &Graph, r: f64, runs: u64, seed: u64) -> Result<AbsorptionTime> {
    if runs == 0 {
        return Err(EstimatorError::NoRuns);
    }
    let sim = Simulator::new(g, r)?;
    let steps: Vec<u64> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            sim.run(&RunStart::Uniform, &RunMode::ToAbsorptionNaive, None, &mut rng, seed, None)
                .map(|o| o.naive_steps.expect("naive mode counts steps"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let n = runs as f64;
    let mean = steps.iter().map(|&s| s as f64).sum::<f64>() / n;
    let var = if runs > 1 { steps.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(AbsorptionTime { runs, mean, stderr: (var / n).sqrt() })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
