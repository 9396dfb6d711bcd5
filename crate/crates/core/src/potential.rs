//! Exact potential and drift calculus on undirected graphs.
//!
//! Everything here is exact rational arithmetic except `psi_weighted` and the
//! barrier threshold, where exponentials force floating point.

use std::collections::{BTreeSet, HashMap};
use std::ops::{AddAssign, SubAssign};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graph::{Graph, MutantSet};
use crate::rational::{int, ln_abs, to_f64};

/// Largest vertex count (or restriction size) accepted by `min_drift_subset`.
pub const MIN_DRIFT_CAP: usize = 24;

/// Relative guard band for barrier comparisons.
pub const BARRIER_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PotentialError {
    #[error("potentials are defined on undirected graphs only")]
    Directed,
    #[error("vertex {0} has degree zero")]
    IsolatedVertex(usize),
    #[error("set universe {found} does not match graph order {expected}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("the two sets overlap")]
    Overlap,
    #[error("weight function must be non-negative with one entry per vertex")]
    BadWeights,
    #[error("weight function is everywhere zero")]
    ZeroWeights,
    #[error("fitness must satisfy r > 1 here")]
    FitnessNotAboveOne,
    #[error("fitness must be positive")]
    NonPositiveFitness,
    #[error("set must be non-empty and proper")]
    TrivialSet,
    #[error("barrier threshold needs n >= 3")]
    SmallN,
    #[error("set must be non-empty")]
    EmptySet,
    #[error("exhaustive scan is capped at {MIN_DRIFT_CAP} vertices, got {0}")]
    SizeCap(usize),
}

type Result<T> = std::result::Result<T, PotentialError>;

/// Fitness `r` with `λ = (r+1)/2` and `β = (r−1)/(6r+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConstants {
    pub r: BigRational,
    pub lambda: BigRational,
    pub beta: BigRational,
}

impl ProcessConstants {
    pub fn new(r: BigRational) -> Result<Self> {
        if r <= BigRational::zero() {
            return Err(PotentialError::NonPositiveFitness);
        }
        let lambda = (&r + int(1)) / int(2);
        let beta = (&r - int(1)) / (int(6) * &r + int(2));
        Ok(ProcessConstants { r, lambda, beta })
    }

    pub fn r_f64(&self) -> f64 {
        to_f64(&self.r)
    }
}

/// Non-negative vertex weights `f` with `m_f = max_v f(v)/d(v)` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    f: Vec<BigRational>,
    m_f: BigRational,
}

impl WeightFunction {
    pub fn new(g: &Graph, f: Vec<BigRational>) -> Result<Self> {
        if f.len() != g.n() || f.iter().any(|x| x < &BigRational::zero()) {
            return Err(PotentialError::BadWeights);
        }
        let mut m_f = BigRational::zero();
        for (v, w) in f.iter().enumerate() {
            let d = g.degree(v);
            if d == 0 {
                return Err(PotentialError::IsolatedVertex(v));
            }
            let phi_v = w / int(d as i64);
            if phi_v > m_f {
                m_f = phi_v;
            }
        }
        Ok(WeightFunction { f, m_f })
    }

    pub fn constant(g: &Graph, c: BigRational) -> Result<Self> {
        Self::new(g, vec![c; g.n()])
    }

    pub fn get(&self, v: usize) -> &BigRational {
        &self.f[v]
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn m_f(&self) -> &BigRational {
        &self.m_f
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(Zero::is_zero)
    }
}

fn check_undirected(g: &Graph) -> Result<()> {
    if g.is_directed() {
        Err(PotentialError::Directed)
    } else {
        Ok(())
    }
}

fn check_universe(g: &Graph, s: &MutantSet) -> Result<()> {
    if s.universe() != g.n() {
        return Err(PotentialError::UniverseMismatch { expected: g.n(), found: s.universe() });
    }
    Ok(())
}

/// Σ count/den over a multiset of unit fractions.
fn sum_unit_fractions(counts: HashMap<u64, u64>) -> BigRational {
    let mut keys: Vec<_> = counts.into_iter().collect();
    keys.sort_unstable();
    keys.into_iter().map(|(den, c)| BigRational::new(BigInt::from(c), BigInt::from(den))).sum()
}

/// `φ(S) = Σ_{v∈S} 1/d(v)`.
pub fn phi(g: &Graph, s: &MutantSet) -> Result<BigRational> {
    check_undirected(g)?;
    check_universe(g, s)?;
    let mut counts = HashMap::new();
    for v in s.iter() {
        let d = g.degree(v);
        if d == 0 {
            return Err(PotentialError::IsolatedVertex(v));
        }
        *counts.entry(d as u64).or_insert(0) += 1;
    }
    Ok(sum_unit_fractions(counts))
}

/// `d(A,B) = Σ_{(x,y)∈E(A,B)} 1/(d(x)d(y))` for disjoint `A`, `B`.
pub fn drift(g: &Graph, a: &MutantSet, b: &MutantSet) -> Result<BigRational> {
    check_undirected(g)?;
    check_universe(g, a)?;
    check_universe(g, b)?;
    if !a.is_disjoint(b) {
        return Err(PotentialError::Overlap);
    }
    let (small, other) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut counts = HashMap::new();
    for x in small.iter() {
        let dx = g.degree(x) as u64;
        for &y in g.neighbors(x) {
            if other.contains(y as usize) {
                *counts.entry(dx * g.degree(y as usize) as u64).or_insert(0) += 1;
            }
        }
    }
    Ok(sum_unit_fractions(counts))
}

/// `d(S, V∖S)`.
pub fn boundary_drift(g: &Graph, s: &MutantSet) -> Result<BigRational> {
    drift(g, s, &s.complement())
}

/// `φ_f(S) = Σ_{v∈S} f(v)/d(v)`.
pub fn phi_weighted(g: &Graph, f: &WeightFunction, s: &MutantSet) -> Result<BigRational> {
    check_undirected(g)?;
    check_universe(g, s)?;
    let mut acc = BigRational::zero();
    for v in s.iter() {
        let d = g.degree(v);
        if d == 0 {
            return Err(PotentialError::IsolatedVertex(v));
        }
        acc += f.get(v) / int(d as i64);
    }
    Ok(acc)
}

/// `ψ_f(S) = exp(−φ_f(S)·β/m_f)`, exponent computed exactly.
pub fn psi_weighted(g: &Graph, consts: &ProcessConstants, f: &WeightFunction, s: &MutantSet) -> Result<f64> {
    if consts.r <= BigRational::one() {
        return Err(PotentialError::FitnessNotAboveOne);
    }
    if f.is_zero() {
        return Err(PotentialError::ZeroWeights);
    }
    let exponent = phi_weighted(g, f, s)? * &consts.beta / f.m_f();
    Ok((-to_f64(&exponent)).exp())
}

/// Both sides of the validity inequality for a weight function and a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Validity {
    pub valid: bool,
    /// Σ f(x)/(d(x)d(y)) over boundary pairs with f(x) > λf(y).
    pub left: BigRational,
    /// Σ f(y)/(d(x)d(y)) over boundary pairs with f(x) ≤ λf(y), before the
    /// (r−1)/4r factor.
    pub right: BigRational,
}

pub fn is_valid_for(g: &Graph, consts: &ProcessConstants, f: &WeightFunction, x_set: &MutantSet) -> Result<Validity> {
    check_undirected(g)?;
    check_universe(g, x_set)?;
    if consts.r <= BigRational::one() {
        return Err(PotentialError::FitnessNotAboveOne);
    }
    let mut left = BigRational::zero();
    let mut right = BigRational::zero();
    for x in x_set.iter() {
        let dx = g.degree(x) as i64;
        for &y in g.neighbors(x) {
            let y = y as usize;
            if x_set.contains(y) {
                continue;
            }
            let den = int(dx * g.degree(y) as i64);
            if f.get(x) > &(&consts.lambda * f.get(y)) {
                left += f.get(x) / &den;
            } else {
                right += f.get(y) / &den;
            }
        }
    }
    let factor = (&consts.r - int(1)) / (int(4) * &consts.r);
    let valid = left <= &factor * &right;
    Ok(Validity { valid, left, right })
}

/// `ρ(n)` kept in log form; it overflows `f64` already for modest `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierThreshold {
    pub n: usize,
    pub ln_rho: f64,
}

impl BarrierThreshold {
    /// `ρ(n)` itself; `+inf` once it exceeds the `f64` range.
    pub fn rho(&self) -> f64 {
        self.ln_rho.exp()
    }

    /// ln of the drift bound `1/(2nρ(n))`.
    pub fn ln_drift_bound(&self) -> f64 {
        -(2.0 * self.n as f64).ln() - self.ln_rho
    }
}

pub fn barrier_threshold(n: usize, consts: &ProcessConstants) -> Result<BarrierThreshold> {
    if consts.r <= BigRational::one() {
        return Err(PotentialError::FitnessNotAboveOne);
    }
    if n < 3 {
        return Err(PotentialError::SmallN);
    }
    let r = consts.r_f64();
    let ln_lambda = to_f64(&consts.lambda).ln();
    let inner = 10.0 / ln_lambda * (n as f64).ln().ln();
    let ln_rho = (10.0 * r / (r - 1.0)).ln() + inner.powi(3) * r.ln();
    Ok(BarrierThreshold { n, ln_rho })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCheck {
    pub is_barrier: bool,
    /// Drift and threshold agree to within the guard band; `is_barrier` is
    /// then not trustworthy.
    pub borderline: bool,
    pub drift: BigRational,
    pub threshold: BarrierThreshold,
}

/// Whether `d(S, V∖S) < 1/(2nρ(n))`.
pub fn is_barrier(g: &Graph, consts: &ProcessConstants, s: &MutantSet) -> Result<BarrierCheck> {
    check_universe(g, s)?;
    if s.is_empty() || s.is_full() {
        return Err(PotentialError::TrivialSet);
    }
    let threshold = barrier_threshold(g.n(), consts)?;
    let drift = boundary_drift(g, s)?;
    if drift.is_zero() {
        return Ok(BarrierCheck { is_barrier: true, borderline: false, drift, threshold });
    }
    let gap = ln_abs(&drift) - threshold.ln_drift_bound();
    Ok(BarrierCheck { is_barrier: gap < 0.0, borderline: gap.abs() <= BARRIER_GUARD, drift, threshold })
}

/// Greedy min-degree deletion inside `G[U]`: fix `t = d̄(G[U])/2`, then keep
/// deleting the least-id vertex among those of minimum induced degree while
/// that degree is below `t`.
pub fn core_subset(g: &Graph, u: &MutantSet) -> Result<MutantSet> {
    check_undirected(g)?;
    check_universe(g, u)?;
    if u.is_empty() {
        return Err(PotentialError::EmptySet);
    }
    let mut deg = vec![0usize; g.n()];
    let mut alive = BTreeSet::new();
    let mut total = 0usize;
    for v in u.iter() {
        deg[v] = g.neighbors(v).iter().filter(|&&w| u.contains(w as usize)).count();
        total += deg[v];
        alive.insert((deg[v], v));
    }
    // d < d̄/2  <=>  2·|U|·d < Σ induced degrees
    let scale = 2 * u.len();
    let mut r = u.clone();
    while let Some(&(d, v)) = alive.first() {
        if d * scale >= total {
            break;
        }
        alive.remove(&(d, v));
        r.remove(v);
        for &w in g.neighbors(v) {
            let w = w as usize;
            if r.contains(w) {
                alive.remove(&(deg[w], w));
                deg[w] -= 1;
                alive.insert((deg[w], w));
            }
        }
    }
    Ok(r)
}

/// Proper non-empty `S` (inside `restrict` when given) minimizing
/// `d(S, V∖S)`. Ties go to the smaller set, then to the smaller bitmask.
pub fn min_drift_subset(g: &Graph, restrict: Option<&MutantSet>) -> Result<(MutantSet, BigRational)> {
    check_undirected(g)?;
    let pool: Vec<usize> = match restrict {
        Some(r) => {
            check_universe(g, r)?;
            r.iter().collect()
        }
        None => (0..g.n()).collect(),
    };
    if pool.len() > MIN_DRIFT_CAP {
        return Err(PotentialError::SizeCap(pool.len()));
    }
    if pool.is_empty() || (pool.len() == 1 && g.n() == 1) {
        return Err(PotentialError::TrivialSet);
    }
    if let Some(v) = pool.iter().find(|&&v| g.degree(v) == 0) {
        return Err(PotentialError::IsolatedVertex(*v));
    }
    // common denominator over every edge touching the pool
    let mut lcm = BigUint::one();
    let mut edges = 0usize;
    for &x in &pool {
        for &y in g.neighbors(x) {
            let p = (g.degree(x) * g.degree(y as usize)) as u64;
            lcm = num_integer::Integer::lcm(&lcm, &BigUint::from(p));
            edges += 1;
        }
    }
    let fits = lcm.to_u128().and_then(|l| l.checked_mul(edges as u128 + 1)).is_some_and(|x| x < i128::MAX as u128);
    let (mask, card) = if fits {
        let l = lcm.to_u128().unwrap();
        gray_scan(g, &pool, |x, y| (l / (g.degree(x) * g.degree(y)) as u128) as i128)
    } else {
        gray_scan(g, &pool, |x, y| BigRational::new(1.into(), BigInt::from(g.degree(x) * g.degree(y))))
    };
    let _ = card;
    let s =
        MutantSet::from_vertices(g.n(), pool.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &v)| v));
    let d = boundary_drift(g, &s)?;
    Ok((s, d))
}

/// Gray-code walk over subsets of `pool`, tracking the cut weight
/// incrementally. Returns the winning pool-index mask and its size.
fn gray_scan<T>(g: &Graph, pool: &[usize], weight: impl Fn(usize, usize) -> T) -> (u64, usize)
where
    T: Clone + Ord + Zero + for<'a> AddAssign<&'a T> + for<'a> SubAssign<&'a T>,
{
    let n = g.n();
    let k = pool.len();
    let mut inside = vec![false; n];
    let mut cut = T::zero();
    let mut size = 0usize;
    let mut best: Option<(T, usize, u64)> = None;
    let weights: Vec<Vec<T>> =
        pool.iter().map(|&x| g.neighbors(x).iter().map(|&y| weight(x, y as usize)).collect()).collect();
    for i in 1u64..(1u64 << k) {
        let j = i.trailing_zeros() as usize;
        let v = pool[j];
        let entering = !inside[v];
        for (&u, w) in g.neighbors(v).iter().zip(&weights[j]) {
            // edge vu is cut after the flip iff u ends on the other side
            if inside[u as usize] == entering {
                cut -= w;
            } else {
                cut += w;
            }
        }
        inside[v] = entering;
        if entering {
            size += 1;
        } else {
            size -= 1;
        }
        if size == n {
            continue;
        }
        let mask = i ^ (i >> 1);
        let better = match &best {
            None => true,
            Some((bc, bs, bm)) => (&cut, size, mask) < (bc, *bs, *bm),
        };
        if better {
            best = Some((cut.clone(), size, mask));
        }
    }
    let (_, size, mask) = best.expect("at least one proper subset");
    (mask, size)
}
