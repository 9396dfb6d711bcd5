//! Exact analysis of the Moran chain on small graphs.
//!
//! States are bitmasks over at most `STATE_CAP` vertices. Transitions only
//! move between neighbouring mutant counts, so the absorption equations are
//! block tridiagonal with diagonal middle blocks. Up to `DIRECT_CAP`
//! vertices they are solved directly level by level; above that by
//! Gauss–Seidel sweeps.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::families::SigmaWeights;
use crate::graph::{Graph, MutantSet};
use crate::potential::{ProcessConstants, WeightFunction};
use crate::rational::{int, rationalize, to_f64};

pub const STATE_CAP: usize = 20;
pub const DIRECT_CAP: usize = 12;
pub const RATIONAL_CAP: usize = 8;
pub const GS_TOLERANCE: f64 = 1e-12;
pub const GS_MAX_SWEEPS: usize = 1_000_000;
/// Denominator cap used when a float fitness has to be made exact.
pub const FITNESS_DENOMINATOR_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("state space too large: n = {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("graph is not connected (strongly connected when directed)")]
    NotConnected,
    #[error("graph needs at least two vertices")]
    SmallGraph,
    #[error("fitness must be positive")]
    NonPositiveFitness,
    #[error("state is absorbing")]
    Absorbing,
    #[error("set universe {found} does not match graph order {expected}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("potential kinds need an undirected graph")]
    Directed,
    #[error("weights do not belong to this graph")]
    ContextMismatch,
    #[error("iteration stopped with residual {0:e}")]
    NotConverged(f64),
}

type Result<T> = std::result::Result<T, ExactError>;

/// Initial condition for fixation and absorption-time queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// One mutant placed uniformly at random.
    Uniform,
    Set(MutantSet),
}

/// Rational approximation of a float fitness, denominator at most 10^6.
pub fn fitness_from_f64(r: f64) -> Option<BigRational> {
    if r.is_finite() && r > 0.0 {
        rationalize(r, FITNESS_DENOMINATOR_CAP)
    } else {
        None
    }
}

fn check_graph(g: &Graph, r: &BigRational, cap: usize) -> Result<()> {
    if !r.is_positive() {
        return Err(ExactError::NonPositiveFitness);
    }
    if g.n() < 2 {
        return Err(ExactError::SmallGraph);
    }
    if g.n() > cap {
        return Err(ExactError::TooLarge { n: g.n(), cap });
    }
    if !g.is_process_connected() {
        return Err(ExactError::NotConnected);
    }
    Ok(())
}

fn check_set(g: &Graph, s: &MutantSet) -> Result<()> {
    if s.universe() != g.n() {
        return Err(ExactError::UniverseMismatch { expected: g.n(), found: s.universe() });
    }
    Ok(())
}

fn check_active(g: &Graph, r: &BigRational, s: &MutantSet) -> Result<()> {
    if !r.is_positive() {
        return Err(ExactError::NonPositiveFitness);
    }
    check_set(g, s)?;
    if s.is_empty() || s.is_full() {
        return Err(ExactError::Absorbing);
    }
    Ok(())
}

/// Total fitness `W(S) = n + (r−1)|S|`.
pub fn total_fitness(n: usize, r: &BigRational, mutants: usize) -> BigRational {
    int(n as i64) + (r - int(1)) * int(mutants as i64)
}

/// Successor distribution of one step of the full process from `S`,
/// including the idle outcome `S` itself when it has positive mass.
pub fn transition_distribution(g: &Graph, r: &BigRational, s: &MutantSet) -> Result<Vec<(MutantSet, BigRational)>> {
    check_active(g, r, s)?;
    let w = total_fitness(g.n(), r, s.len());
    let mut flips: BTreeMap<usize, BigRational> = BTreeMap::new();
    for x in 0..g.n() {
        let fx = if s.contains(x) { r.clone() } else { int(1) };
        let share = fx / (&w * int(g.degree(x) as i64));
        for &y in g.neighbors(x) {
            let y = y as usize;
            if s.contains(x) != s.contains(y) {
                *flips.entry(y).or_insert_with(BigRational::zero) += &share;
            }
        }
    }
    let moved: BigRational = flips.values().sum();
    let mut out = Vec::with_capacity(flips.len() + 1);
    let stay = int(1) - moved;
    if !stay.is_zero() {
        out.push((s.clone(), stay));
    }
    for (y, p) in flips {
        let mut t = s.clone();
        if !t.insert(y) {
            t.remove(y);
        }
        out.push((t, p));
    }
    Ok(out)
}

/// Successor distribution conditioned on the state changing.
pub fn active_transition_distribution(
    g: &Graph,
    r: &BigRational,
    s: &MutantSet,
) -> Result<Vec<(MutantSet, BigRational)>> {
    let all = transition_distribution(g, r, s)?;
    let moving: Vec<_> = all.into_iter().filter(|(t, _)| t != s).collect();
    let total: BigRational = moving.iter().map(|(_, p)| p).sum();
    Ok(moving.into_iter().map(|(t, p)| (t, p / &total)).collect())
}

/// Distribution of the spawning vertex in an active step: mass proportional
/// to `fitness(v)·d_bdry(v)/d(v)` where `d_bdry` counts opposite-type
/// (out-)neighbours.
pub fn active_spawner_distribution(g: &Graph, r: &BigRational, s: &MutantSet) -> Result<Vec<(usize, BigRational)>> {
    check_active(g, r, s)?;
    let mut masses = Vec::new();
    for v in 0..g.n() {
        let bdry = g.neighbors(v).iter().filter(|&&y| s.contains(y as usize) != s.contains(v)).count();
        let fv = if s.contains(v) { r.clone() } else { int(1) };
        masses.push((v, fv * int(bdry as i64) / int(g.degree(v) as i64)));
    }
    let total: BigRational = masses.iter().map(|(_, m)| m).sum();
    Ok(masses.into_iter().map(|(v, m)| (v, m / &total)).collect())
}

/// Which additive (or exponential) potential to take the expectation of.
#[derive(Debug, Clone, Copy)]
pub enum PotentialKind<'a> {
    Phi,
    PhiWeighted(&'a WeightFunction),
    PsiWeighted(&'a WeightFunction),
    Sigma(&'a SigmaWeights),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OneStepExpectation {
    Exact(BigRational),
    Approx(f64),
}

impl OneStepExpectation {
    pub fn to_f64(&self) -> f64 {
        match self {
            OneStepExpectation::Exact(v) => to_f64(v),
            OneStepExpectation::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            OneStepExpectation::Exact(v) => Some(v),
            OneStepExpectation::Approx(_) => None,
        }
    }
}

/// Expected one-step change `E[g(M(t+1)) − g(M(t)) | M(t) = S]` of the
/// chosen potential, summed over boundary edges only.
pub fn one_step_expected_change(
    g: &Graph,
    r: &BigRational,
    s: &MutantSet,
    kind: PotentialKind<'_>,
) -> Result<OneStepExpectation> {
    if g.is_directed() {
        return Err(ExactError::Directed);
    }
    if !r.is_positive() {
        return Err(ExactError::NonPositiveFitness);
    }
    check_set(g, s)?;
    if s.is_empty() || s.is_full() {
        return Ok(match kind {
            PotentialKind::PsiWeighted(_) => OneStepExpectation::Approx(0.0),
            _ => OneStepExpectation::Exact(BigRational::zero()),
        });
    }
    let w = total_fitness(g.n(), r, s.len());
    let value = match kind {
        PotentialKind::Phi => additive_change(g, r, s, |v| g.degree(v) as u64, |v| int(1) / int(g.degree(v) as i64)),
        PotentialKind::PhiWeighted(f) => {
            if f.len() != g.n() {
                return Err(ExactError::ContextMismatch);
            }
            additive_change(g, r, s, |v| v as u64, |v| f.get(v) / int(g.degree(v) as i64))
        }
        PotentialKind::Sigma(sw) => {
            if sw.n() != g.n() {
                return Err(ExactError::ContextMismatch);
            }
            additive_change(g, r, s, |v| (sw.class(v) as u64) << 40 | g.degree(v) as u64, |v| sw.weight(v).clone())
        }
        PotentialKind::PsiWeighted(f) => {
            if f.len() != g.n() {
                return Err(ExactError::ContextMismatch);
            }
            return psi_change(g, r, s, f).map(OneStepExpectation::Approx);
        }
    };
    Ok(OneStepExpectation::Exact(value / w))
}

/// `W·E[Δ]` for an additive potential with per-vertex value `val`; vertices
/// sharing a `key` must share value and degree.
fn additive_change(
    g: &Graph,
    r: &BigRational,
    s: &MutantSet,
    key: impl Fn(usize) -> u64,
    val: impl Fn(usize) -> BigRational,
) -> BigRational {
    // (key(x), key(y)) for boundary edges x ∈ S, y ∉ S, with a representative pair
    let mut counts: HashMap<(u64, u64), (u64, usize, usize)> = HashMap::new();
    for x in s.iter() {
        let kx = key(x);
        for &y in g.neighbors(x) {
            let y = y as usize;
            if !s.contains(y) {
                counts.entry((kx, key(y))).or_insert((0, x, y)).0 += 1;
            }
        }
    }
    let mut entries: Vec<_> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|(k, _)| *k);
    let mut acc = BigRational::zero();
    for (_, (c, x, y)) in entries {
        let dx = int(g.degree(x) as i64);
        let dy = int(g.degree(y) as i64);
        // mutant x invades y, or non-mutant y invades x
        let term = r * val(y) / dx - val(x) / dy;
        acc += term * BigRational::from_integer(BigInt::from(c));
    }
    acc
}

fn psi_change(g: &Graph, r: &BigRational, s: &MutantSet, f: &WeightFunction) -> Result<f64> {
    let consts = ProcessConstants::new(r.clone()).map_err(|_| ExactError::NonPositiveFitness)?;
    if r <= &BigRational::one() || f.is_zero() {
        return Err(ExactError::ContextMismatch);
    }
    let c = to_f64(&(&consts.beta / f.m_f()));
    let mut phi_f = BigRational::zero();
    for v in s.iter() {
        phi_f += f.get(v) / int(g.degree(v) as i64);
    }
    let psi = (-c * to_f64(&phi_f)).exp();
    let rf = to_f64(r);
    let w = to_f64(&total_fitness(g.n(), r, s.len()));
    let gain = |v: usize| to_f64(f.get(v)) / g.degree(v) as f64;
    let mut acc = 0.0;
    for x in s.iter() {
        let dx = g.degree(x) as f64;
        for &y in g.neighbors(x) {
            let y = y as usize;
            if s.contains(y) {
                continue;
            }
            let dy = g.degree(y) as f64;
            acc += rf / dx * (-c * gain(y)).exp_m1();
            acc += 1.0 / dy * (c * gain(x)).exp_m1();
        }
    }
    Ok(psi * acc / w)
}

/// Expected change of `φ` conditioned on the step changing the state.
pub fn active_phi_gain(g: &Graph, r: &BigRational, s: &MutantSet) -> Result<BigRational> {
    check_active(g, r, s)?;
    let e = one_step_expected_change(g, r, s, PotentialKind::Phi)?;
    let moving: BigRational =
        transition_distribution(g, r, s)?.into_iter().filter(|(t, _)| t != s).map(|(_, p)| p).sum();
    Ok(e.exact().expect("phi is exact") / moving)
}

// ---------------------------------------------------------------------------
// linear solves

/// Arithmetic needed by the level elimination.
trait Field: Clone {
    fn fzero() -> Self;
    fn from_int(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn fis_zero(&self) -> bool;
    /// Pivot preference; larger is better.
    fn size(&self) -> f64;
}

impl Field for f64 {
    fn fzero() -> Self {
        0.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn fis_zero(&self) -> bool {
        *self == 0.0
    }
    fn size(&self) -> f64 {
        self.abs()
    }
}

impl Field for BigRational {
    fn fzero() -> Self {
        Zero::zero()
    }
    fn from_int(v: i64) -> Self {
        int(v)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn fis_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn size(&self) -> f64 {
        // any non-zero pivot is exact; prefer small numbers to limit growth
        if Zero::is_zero(self) {
            0.0
        } else {
            1.0 / (1.0 + self.denom().bits() as f64 + self.numer().bits() as f64)
        }
    }
}

/// Masks grouped by popcount, with each mask's index inside its level.
struct Lattice {
    levels: Vec<Vec<u32>>,
    pos: Vec<u32>,
}

impl Lattice {
    fn new(n: usize) -> Self {
        let mut levels = vec![Vec::new(); n + 1];
        let mut pos = vec![0u32; 1 << n];
        for mask in 0u32..(1u32 << n) {
            let k = mask.count_ones() as usize;
            pos[mask as usize] = levels[k].len() as u32;
            levels[k].push(mask);
        }
        Lattice { levels, pos }
    }
}

/// Scaled transition weights out of `mask`: for each flipped vertex `y`, the
/// sum of `fitness(x)/d(x)` over opposite-type (out-)neighbours `x → y`.
/// The true probability is this divided by `W`.
fn flips<T: Field>(g: &Graph, r: &T, inv_deg: &[T], mask: u32, out: &mut Vec<(u32, T)>) {
    out.clear();
    let mut acc: Vec<Option<T>> = vec![None; g.n()];
    for (x, inv) in inv_deg.iter().enumerate() {
        let xm = mask >> x & 1 == 1;
        let share = if xm { r.mul(inv) } else { inv.clone() };
        for &y in g.neighbors(x) {
            let y = y as usize;
            if (mask >> y & 1 == 1) != xm {
                acc[y] = Some(match acc[y].take() {
                    Some(v) => v.add(&share),
                    None => share.clone(),
                });
            }
        }
    }
    for (y, v) in acc.into_iter().enumerate() {
        if let Some(v) = v {
            out.push((mask ^ (1 << y), v));
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Target {
    Fixation,
    AbsorptionTime,
}

/// Per-state solution of an absorption equation, indexed by mask.
#[derive(Debug, Clone)]
pub struct ExactSolution<T> {
    n: usize,
    values: Vec<T>,
    /// Largest equation residual, in probability units.
    pub residual: f64,
}

impl<T: Clone> ExactSolution<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, s: &MutantSet) -> T {
        self.values[s.to_mask().expect("small universe") as usize].clone()
    }

    pub fn by_mask(&self, mask: u64) -> &T {
        &self.values[mask as usize]
    }
}

impl ExactSolution<f64> {
    pub fn uniform(&self) -> f64 {
        (0..self.n).map(|v| self.values[1 << v]).sum::<f64>() / self.n as f64
    }

    pub fn at(&self, start: &Start) -> f64 {
        match start {
            Start::Uniform => self.uniform(),
            Start::Set(s) => self.value(s),
        }
    }
}

impl ExactSolution<BigRational> {
    pub fn uniform(&self) -> BigRational {
        (0..self.n).map(|v| &self.values[1 << v]).sum::<BigRational>() / int(self.n as i64)
    }

    pub fn at(&self, start: &Start) -> BigRational {
        match start {
            Start::Uniform => self.uniform(),
            Start::Set(s) => self.value(s),
        }
    }
}

fn solve_levels<T: Field>(g: &Graph, r: T, target: Target) -> Vec<T> {
    let n = g.n();
    let lat = Lattice::new(n);
    let inv_deg: Vec<T> = (0..n).map(|v| T::from_int(1).div(&T::from_int(g.degree(v) as i64))).collect();
    let r_minus_1 = r.sub(&T::from_int(1));
    let top = (1u32 << n) - 1;
    let mut buf = Vec::new();

    // h_k = X_k h_{k+1} + y_k, X_k stored row-major s_k × s_{k+1}
    let mut xs: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut ys: Vec<Vec<T>> = vec![Vec::new(); n];
    for k in 1..n {
        let rows = &lat.levels[k];
        let s = rows.len();
        let s_up = if k + 1 < n { lat.levels[k + 1].len() } else { 0 };
        let width = s + s_up + 1;
        // augmented [M | U | b]
        let mut a = vec![T::fzero(); s * width];
        for (i, &mask) in rows.iter().enumerate() {
            flips(g, &r, &inv_deg, mask, &mut buf);
            let row = &mut a[i * width..(i + 1) * width];
            let mut out = T::fzero();
            let mut b = match target {
                Target::Fixation => T::fzero(),
                Target::AbsorptionTime => T::from_int(n as i64).add(&r_minus_1.mul(&T::from_int(k as i64))),
            };
            for (t, p) in buf.drain(..) {
                out = out.add(&p);
                let tk = t.count_ones() as usize;
                let j = lat.pos[t as usize] as usize;
                if t == top {
                    if target == Target::Fixation {
                        b = b.add(&p);
                    }
                } else if t == 0 {
                } else if tk > k {
                    row[s + j] = row[s + j].add(&p);
                } else {
                    // substitute h_{k-1} = X_{k-1} h_k + y_{k-1}
                    let xprev = &xs[k - 1];
                    for c in 0..s {
                        let xv = &xprev[j * s + c];
                        if !xv.fis_zero() {
                            row[c] = row[c].sub(&p.mul(xv));
                        }
                    }
                    b = b.add(&p.mul(&ys[k - 1][j]));
                }
            }
            row[i] = row[i].add(&out);
            row[width - 1] = b;
        }
        eliminate(&mut a, s, width);
        let mut x = Vec::with_capacity(s * s_up);
        let mut y = Vec::with_capacity(s);
        for i in 0..s {
            let row = &a[i * width..(i + 1) * width];
            x.extend_from_slice(&row[s..s + s_up]);
            y.push(row[width - 1].clone());
        }
        xs[k] = x;
        ys[k] = y;
    }

    let mut values = vec![T::fzero(); 1 << n];
    if target == Target::Fixation {
        values[top as usize] = T::from_int(1);
    }
    let mut upper: Vec<T> = Vec::new();
    for k in (1..n).rev() {
        let s = lat.levels[k].len();
        let s_up = upper.len();
        let mut h = Vec::with_capacity(s);
        for i in 0..s {
            let mut v = ys[k][i].clone();
            for (c, u) in upper.iter().enumerate() {
                let xv = &xs[k][i * s_up + c];
                if !xv.fis_zero() {
                    v = v.add(&xv.mul(u));
                }
            }
            h.push(v);
        }
        for (i, &mask) in lat.levels[k].iter().enumerate() {
            values[mask as usize] = h[i].clone();
        }
        upper = h;
    }
    values
}

/// Gauss–Jordan elimination of the `s × s` left block of a row-major
/// `s × width` matrix; afterwards the right block holds the solution.
fn eliminate<T: Field>(a: &mut [T], s: usize, width: usize) {
    for col in 0..s {
        let mut piv = col;
        let mut best = a[col * width + col].size();
        for row in col + 1..s {
            let sz = a[row * width + col].size();
            if sz > best {
                best = sz;
                piv = row;
            }
        }
        assert!(best > 0.0, "singular absorption system");
        if piv != col {
            for c in 0..width {
                a.swap(piv * width + c, col * width + c);
            }
        }
        let inv = T::from_int(1).div(&a[col * width + col]);
        for c in col..width {
            a[col * width + c] = a[col * width + c].mul(&inv);
        }
        let (before, rest) = a.split_at_mut(col * width);
        let (pivot_row, after) = rest.split_at_mut(width);
        for row in before.chunks_mut(width).chain(after.chunks_mut(width)) {
            let factor = row[col].clone();
            if factor.fis_zero() {
                continue;
            }
            for c in col..width {
                if !pivot_row[c].fis_zero() {
                    row[c] = row[c].sub(&factor.mul(&pivot_row[c]));
                }
            }
        }
    }
}

fn residual(g: &Graph, r: f64, values: &[f64], target: Target) -> f64 {
    let n = g.n();
    let inv_deg: Vec<f64> = (0..n).map(|v| 1.0 / g.degree(v) as f64).collect();
    let top = (1u32 << n) - 1;
    let mut buf = Vec::new();
    let mut worst: f64 = 0.0;
    for mask in 1..top {
        flips(g, &r, &inv_deg, mask, &mut buf);
        let w = n as f64 + (r - 1.0) * mask.count_ones() as f64;
        let mut lhs = 0.0;
        for &(t, p) in &buf {
            lhs += p * (values[mask as usize] - values[t as usize]);
        }
        let rhs = if target == Target::AbsorptionTime { w } else { 0.0 };
        worst = worst.max(((lhs - rhs) / w).abs());
    }
    worst
}

fn gauss_seidel(g: &Graph, r: f64, target: Target) -> Result<Vec<f64>> {
    let n = g.n();
    let top = (1u32 << n) - 1;
    let inv_deg: Vec<f64> = (0..n).map(|v| 1.0 / g.degree(v) as f64).collect();
    let mut offsets = Vec::with_capacity(1 << n);
    let mut edges: Vec<(u32, f64)> = Vec::new();
    let mut out = vec![0.0; 1 << n];
    let mut buf = Vec::new();
    offsets.push(0usize);
    for mask in 0..=top {
        if mask != 0 && mask != top {
            flips(g, &r, &inv_deg, mask, &mut buf);
            out[mask as usize] = buf.iter().map(|(_, p)| p).sum();
            edges.extend_from_slice(&buf);
        }
        offsets.push(edges.len());
    }
    let mut h: Vec<f64> = (0..=top)
        .map(|m| match target {
            Target::Fixation => m.count_ones() as f64 / n as f64,
            Target::AbsorptionTime => 0.0,
        })
        .collect();
    let rhs = |mask: u32| match target {
        Target::Fixation => 0.0,
        Target::AbsorptionTime => n as f64 + (r - 1.0) * mask.count_ones() as f64,
    };
    for sweep in 0..GS_MAX_SWEEPS {
        for mask in 1..top {
            let m = mask as usize;
            let acc: f64 = edges[offsets[m]..offsets[m + 1]].iter().map(|&(t, p)| p * h[t as usize]).sum();
            h[m] = (acc + rhs(mask)) / out[m];
        }
        if sweep % 16 == 15 && residual(g, r, &h, target) <= GS_TOLERANCE {
            return Ok(h);
        }
    }
    Err(ExactError::NotConverged(residual(g, r, &h, target)))
}

fn solve_f64(g: &Graph, r: &BigRational, target: Target) -> Result<ExactSolution<f64>> {
    check_graph(g, r, STATE_CAP)?;
    let rf = to_f64(r);
    let values = if g.n() <= DIRECT_CAP { solve_levels(g, rf, target) } else { gauss_seidel(g, rf, target)? };
    let residual = residual(g, rf, &values, target);
    Ok(ExactSolution { n: g.n(), values, residual })
}

fn solve_rational(g: &Graph, r: &BigRational, target: Target) -> Result<ExactSolution<BigRational>> {
    check_graph(g, r, RATIONAL_CAP)?;
    let values = solve_levels(g, r.clone(), target);
    Ok(ExactSolution { n: g.n(), values, residual: 0.0 })
}

/// Fixation probability from every state.
pub fn solve_fixation(g: &Graph, r: &BigRational) -> Result<ExactSolution<f64>> {
    solve_f64(g, r, Target::Fixation)
}

/// Expected number of steps (idle ones included) to absorption from every state.
pub fn solve_absorption_time(g: &Graph, r: &BigRational) -> Result<ExactSolution<f64>> {
    solve_f64(g, r, Target::AbsorptionTime)
}

pub fn solve_fixation_rational(g: &Graph, r: &BigRational) -> Result<ExactSolution<BigRational>> {
    solve_rational(g, r, Target::Fixation)
}

pub fn solve_absorption_time_rational(g: &Graph, r: &BigRational) -> Result<ExactSolution<BigRational>> {
    solve_rational(g, r, Target::AbsorptionTime)
}

fn check_start(g: &Graph, start: &Start) -> Result<()> {
    if let Start::Set(s) = start {
        check_set(g, s)?;
    }
    Ok(())
}

pub fn fixation_probability_exact(g: &Graph, r: &BigRational, start: &Start) -> Result<f64> {
    check_start(g, start)?;
    Ok(solve_fixation(g, r)?.at(start))
}

pub fn absorption_time_exact(g: &Graph, r: &BigRational, start: &Start) -> Result<f64> {
    check_start(g, start)?;
    Ok(solve_absorption_time(g, r)?.at(start))
}

pub fn fixation_probability_rational(g: &Graph, r: &BigRational, start: &Start) -> Result<BigRational> {
    check_start(g, start)?;
    Ok(solve_fixation_rational(g, r)?.at(start))
}

/// Clique fixation probability `(1 − 1/r)/(1 − 1/r^n)`, or `1/n` at `r = 1`.
pub fn clique_fixation(n: usize, r: &BigRational) -> BigRational {
    if r.is_one() {
        return BigRational::new(1.into(), BigInt::from(n));
    }
    let inv = r.recip();
    (int(1) - &inv) / (int(1) - num_traits::pow(inv, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generate, Family};
    use crate::potential::{boundary_drift, phi};
    use crate::rational::rat;

    fn fam(f: Family) -> Graph {
        generate(f, None).unwrap().graph
    }

    fn set(n: usize, vs: &[usize]) -> MutantSet {
        MutantSet::from_vertices(n, vs.iter().copied())
    }

    fn lookup(d: &[(MutantSet, BigRational)], s: &MutantSet) -> BigRational {
        d.iter().find(|(t, _)| t == s).map(|(_, p)| p.clone()).unwrap_or_else(BigRational::zero)
    }

    #[test]
    fn k2_transitions() {
        let k2 = fam(Family::Complete { n: 2 });
        let d = transition_distribution(&k2, &rat(2, 1), &set(2, &[0])).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(lookup(&d, &MutantSet::empty(2)), rat(1, 3));
        assert_eq!(lookup(&d, &MutantSet::full(2)), rat(2, 3));
        assert_eq!(transition_distribution(&k2, &rat(2, 1), &MutantSet::full(2)), Err(ExactError::Absorbing));
    }

    #[test]
    fn c3_transition_by_hand() {
        let c3 = fam(Family::Cycle { n: 3 });
        let d = transition_distribution(&c3, &rat(3, 1), &set(3, &[0])).unwrap();
        assert_eq!(lookup(&d, &set(3, &[0, 1])), rat(3, 10));
        let total: BigRational = d.iter().map(|(_, p)| p).sum();
        assert_eq!(total, int(1));
    }

    #[test]
    fn neutral_singleton_on_clique_is_balanced() {
        let k5 = fam(Family::Complete { n: 5 });
        let s = set(5, &[2]);
        let d = transition_distribution(&k5, &int(1), &s).unwrap();
        let grow: BigRational = d.iter().filter(|(t, _)| t.len() == 2).map(|(_, p)| p).sum();
        let shrink = lookup(&d, &MutantSet::empty(5));
        assert_eq!(grow / shrink, int(1));
    }

    #[test]
    fn c4_idle_probability() {
        let c4 = fam(Family::Cycle { n: 4 });
        let d = transition_distribution(&c4, &int(1), &set(4, &[0])).unwrap();
        assert_eq!(lookup(&d, &set(4, &[0])), rat(1, 2));
    }

    #[test]
    fn clique_closed_form() {
        for n in 2..7 {
            let k = fam(Family::Complete { n });
            for r in [rat(1, 2), int(1), int(2), int(5)] {
                let expect = clique_fixation(n, &r);
                let got = fixation_probability_exact(&k, &r, &Start::Uniform).unwrap();
                assert!((got - to_f64(&expect)).abs() < 1e-12, "n={n} r={r}");
                if n <= 5 {
                    assert_eq!(fixation_probability_rational(&k, &r, &Start::Uniform).unwrap(), expect);
                }
            }
        }
        assert_eq!(clique_fixation(2, &int(2)), rat(2, 3));
    }

    #[test]
    fn absorption_times() {
        let k2 = fam(Family::Complete { n: 2 });
        for r in [rat(1, 3), int(1), int(7)] {
            let t = absorption_time_exact(&k2, &r, &Start::Set(set(2, &[0]))).unwrap();
            assert!((t - 1.0).abs() < 1e-12);
        }
        let c3 = fam(Family::Cycle { n: 3 });
        let sol = solve_absorption_time(&c3, &int(1)).unwrap();
        let t: Vec<f64> = (0..3).map(|v| sol.value(&set(3, &[v]))).collect();
        assert!(t[0] > 0.0 && t[0].is_finite());
        assert!((t[0] - t[1]).abs() < 1e-12 && (t[1] - t[2]).abs() < 1e-12);
        assert!(sol.residual <= 1e-10);
        // on C_3 with r = 1 every step from a non-absorbing state is active
        // with probability 2/3, and the mutant count is a fair walk on
        // {0,1,2,3}: t(1) = 2·(3/2) = 3
        assert!((t[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn double_star_absorption_regression() {
        let d2 = fam(Family::DoubleStar { k: 2 });
        let exact = solve_absorption_time_rational(&d2, &int(2)).unwrap().uniform();
        let float = absorption_time_exact(&d2, &int(2), &Start::Uniform).unwrap();
        assert!((to_f64(&exact) - float).abs() < 1e-10 * float);
        assert!((float - D2_ABSORPTION_R2).abs() < 1e-9 * float, "{float:.17}");
    }

    const D2_ABSORPTION_R2: f64 = 47.409_398_357_605_09;

    #[test]
    fn neutral_fixation_is_one_over_n() {
        for seed in 0..4 {
            let g = generate(Family::RandomConnected { n: 8, p: 0.4 }, Some(seed)).unwrap().graph;
            let f = fixation_probability_exact(&g, &int(1), &Start::Uniform).unwrap();
            assert!((f - 0.125).abs() < 1e-12);
        }
        let dcycle = Graph::from_arcs(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let f = fixation_probability_exact(&dcycle, &int(2), &Start::Uniform).unwrap();
        assert!(f > 0.0 && f < 1.0);
    }

    #[test]
    fn solver_paths_agree() {
        let g = generate(Family::RandomConnected { n: 9, p: 0.35 }, Some(3)).unwrap().graph;
        for target in [Target::Fixation, Target::AbsorptionTime] {
            let direct = solve_levels(&g, 1.5f64, target);
            let gs = gauss_seidel(&g, 1.5, target).unwrap();
            let scale = direct.iter().fold(1.0f64, |a, &b| a.max(b));
            let diff = direct.iter().zip(&gs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-9 * scale, "{diff}");
        }
        let p4 = fam(Family::Path { n: 4 });
        let exact = solve_fixation_rational(&p4, &rat(3, 2)).unwrap();
        let float = solve_fixation(&p4, &rat(3, 2)).unwrap();
        for mask in 0..16u64 {
            assert!((to_f64(exact.by_mask(mask)) - float.by_mask(mask)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(solve_fixation(&two, &int(2)).unwrap_err(), ExactError::NotConnected);
        let path = Graph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(solve_fixation(&path, &int(2)).unwrap_err(), ExactError::NotConnected);
        let big = fam(Family::Cycle { n: 21 });
        assert_eq!(solve_fixation(&big, &int(2)).unwrap_err(), ExactError::TooLarge { n: 21, cap: 20 });
        let one = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(solve_fixation(&one, &int(2)).unwrap_err(), ExactError::SmallGraph);
        let k3 = fam(Family::Complete { n: 3 });
        assert_eq!(solve_fixation(&k3, &int(0)).unwrap_err(), ExactError::NonPositiveFitness);
        assert_eq!(
            solve_fixation_rational(&fam(Family::Cycle { n: 9 }), &int(2)).unwrap_err(),
            ExactError::TooLarge { n: 9, cap: 8 }
        );
    }

    #[test]
    fn spawner_distribution() {
        let k2 = fam(Family::Complete { n: 2 });
        let d = active_spawner_distribution(&k2, &int(2), &set(2, &[0])).unwrap();
        assert_eq!(d, vec![(0, rat(2, 3)), (1, rat(1, 3))]);
        let k6 = fam(Family::Complete { n: 6 });
        let s = set(6, &[1, 4]);
        let d = active_spawner_distribution(&k6, &rat(3, 2), &s).unwrap();
        let up: BigRational = d.iter().filter(|(v, _)| s.contains(*v)).map(|(_, p)| p).sum();
        let down: BigRational = d.iter().filter(|(v, _)| !s.contains(*v)).map(|(_, p)| p).sum();
        assert_eq!(up / down, rat(3, 2));
        let p4 = fam(Family::Path { n: 4 });
        let d = active_spawner_distribution(&p4, &int(2), &set(4, &[0, 1])).unwrap();
        assert_eq!(d[0].1, int(0));
        assert_eq!(d[3].1, int(0));
    }

    #[test]
    fn phi_change_matches_drift() {
        let g = generate(Family::RandomConnected { n: 10, p: 0.3 }, Some(5)).unwrap().graph;
        for mask in [1u64, 6, 77, 300, 1000] {
            let s = MutantSet::from_mask(10, mask);
            for r in [rat(1, 2), int(1), rat(7, 3)] {
                let e = one_step_expected_change(&g, &r, &s, PotentialKind::Phi).unwrap();
                let expect = (&r - int(1)) / total_fitness(10, &r, s.len()) * boundary_drift(&g, &s).unwrap();
                assert_eq!(e, OneStepExpectation::Exact(expect));
            }
        }
    }

    #[test]
    fn phi_change_matches_enumeration() {
        let d3 = fam(Family::DoubleStar { k: 3 });
        let r = rat(5, 2);
        for mask in 1u64..255 {
            let s = MutantSet::from_mask(8, mask);
            let base = phi(&d3, &s).unwrap();
            let brute: BigRational = transition_distribution(&d3, &r, &s)
                .unwrap()
                .into_iter()
                .map(|(t, p)| p * (phi(&d3, &t).unwrap() - &base))
                .sum();
            let e = one_step_expected_change(&d3, &r, &s, PotentialKind::Phi).unwrap();
            assert_eq!(e.exact().unwrap(), &brute);
        }
    }

    #[test]
    fn psi_change_matches_enumeration() {
        let g = generate(Family::RandomConnected { n: 7, p: 0.5 }, Some(2)).unwrap().graph;
        let r = int(2);
        let consts = ProcessConstants::new(r.clone()).unwrap();
        let f = WeightFunction::new(&g, (0..7).map(|v| rat(v as i64 + 1, 3)).collect()).unwrap();
        for mask in 1u64..127 {
            let s = MutantSet::from_mask(7, mask);
            let here = crate::potential::psi_weighted(&g, &consts, &f, &s).unwrap();
            let next: f64 = transition_distribution(&g, &r, &s)
                .unwrap()
                .into_iter()
                .map(|(t, p)| to_f64(&p) * crate::potential::psi_weighted(&g, &consts, &f, &t).unwrap())
                .sum();
            let e = one_step_expected_change(&g, &r, &s, PotentialKind::PsiWeighted(&f)).unwrap().to_f64();
            assert!((e - (next - here)).abs() <= 1e-12, "{e} vs {}", next - here);
        }
    }

    #[test]
    fn active_gain_on_k2() {
        // every step from {1} is active: gain = (2/3)(1) − (1/3)(1) = 1/3
        let k2 = fam(Family::Complete { n: 2 });
        assert_eq!(active_phi_gain(&k2, &int(2), &set(2, &[0])).unwrap(), rat(1, 3));
    }

    #[test]
    fn float_fitness_rationalized() {
        assert_eq!(fitness_from_f64(1.5).unwrap(), rat(3, 2));
        assert!(fitness_from_f64(-1.0).is_none());
        assert!(fitness_from_f64(f64::NAN).is_none());
    }
}
