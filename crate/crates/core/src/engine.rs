//! Simulation of the Moran process.
//!
//! Two samplers are provided. The naive one runs the full chain, idle steps
//! included. The active one only simulates state-changing steps: it keeps the
//! boundary vertices in a sparse slot array, picks a spawner by rejection in
//! expected `O(Δ)` work per step, and tracks `φ(M)·D` as an exact integer
//! where `D = lcm(1..Δ)`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::graph::{Graph, MutantSet};
use crate::rational::ceil_to_biguint;

/// Rejection rounds allowed per unit of maximum degree before a step aborts.
pub const REJECTION_CAP_PER_DEGREE: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("fitness must be a positive finite number")]
    BadFitness,
    #[error("graph needs at least two vertices")]
    SmallGraph,
    #[error("graph is not connected (strongly connected when directed)")]
    NotConnected,
    #[error("vertex {0} is out of range")]
    InvalidVertex(usize),
    #[error("set universe {found} does not match graph order {expected}")]
    UniverseMismatch { expected: usize, found: usize },
    #[error("state is absorbing")]
    Absorbing,
    #[error("threshold mode needs an undirected graph")]
    DirectedThreshold,
    #[error("degree bound must be at least 1")]
    ZeroDelta,
    #[error("spawner rejection loop exceeded {0} rounds")]
    RejectionCap(u64),
}

type Result<T> = std::result::Result<T, EngineError>;

/// `D = lcm(1, …, Δ)` and the quotients `D/k` for every `k ≤ Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcmTable {
    delta: usize,
    d: BigUint,
    quotients: Vec<BigUint>,
}

/// Primes up to `delta` by the sieve of Eratosthenes.
fn primes_upto(delta: usize) -> Vec<usize> {
    let mut composite = vec![false; delta + 1];
    let mut primes = Vec::new();
    for p in 2..=delta {
        if !composite[p] {
            primes.push(p);
            let mut q = p * p;
            while q <= delta {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

pub fn lcm_upto(delta: usize) -> Result<LcmTable> {
    if delta == 0 {
        return Err(EngineError::ZeroDelta);
    }
    let mut d = BigUint::one();
    for p in primes_upto(delta) {
        let mut t = p;
        while t * p <= delta {
            t *= p;
        }
        d *= t;
    }
    let quotients = (0..=delta).map(|k| if k == 0 { BigUint::zero() } else { &d / k }).collect();
    Ok(LcmTable { delta, d, quotients })
}

impl LcmTable {
    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn d(&self) -> &BigUint {
        &self.d
    }

    /// `D/k` for `1 ≤ k ≤ Δ`.
    pub fn quotient(&self, k: usize) -> &BigUint {
        &self.quotients[k]
    }

    /// `⌈x·D⌉`, the scaled form of a potential threshold.
    pub fn scale_ceil(&self, x: &BigRational) -> BigUint {
        ceil_to_biguint(&(x * BigRational::from_integer(self.d.clone().into())))
    }
}

/// Stream for replica `i` of a master seed; every run draws only from its own
/// stream, so results do not depend on scheduling.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

fn check_fitness(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(EngineError::BadFitness)
    }
}

/// A deviation found by `ActiveState::audit_invariants`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    /// I1: stored mutant count differs from the mutant index.
    MutantCount { stored: usize, actual: usize },
    /// I2: scaled potential differs from `φ(M)·D`.
    ScaledPotential { stored: BigUint, actual: BigUint },
    /// I3: the mutant index holds an id outside the graph.
    MutantId(u32),
    /// I4: boundary index membership disagrees with `d_bdry(v) > 0`.
    BoundaryMembership { vertex: u32, d_bdry: u32 },
    /// I5: boundary index and slot array disagree.
    SlotMismatch { vertex: u32, slot: u32 },
    /// I5: a slot stores a stale boundary degree.
    SlotDegree { vertex: u32, stored: u32, actual: u32 },
    /// Occupied slot count differs from the stored count.
    OccupiedCount { stored: usize, actual: usize },
    /// Slot array outside one-third to two-thirds occupancy.
    Occupancy { occupied: usize, len: usize },
}

/// One accepted active step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flip {
    pub spawner: usize,
    pub target: usize,
    /// Whether `target` became a mutant.
    pub gained: bool,
}

/// Mutant set of the active process plus the sampling structure over its
/// boundary (vertices with at least one opposite-type out-neighbour).
#[derive(Debug, Clone)]
pub struct ActiveState<'a> {
    g: &'a Graph,
    lcm: &'a LcmTable,
    r: f64,
    n_mut: usize,
    phi_scaled: BigUint,
    mutants: FxHashSet<u32>,
    boundary: FxHashMap<u32, u32>,
    slots: Vec<Option<(u32, u32)>>,
    occupied: usize,
    steps: u64,
}

impl<'a> ActiveState<'a> {
    /// State with no mutants; only useful as a starting point for `flip`.
    fn blank(g: &'a Graph, r: f64, lcm: &'a LcmTable) -> Result<Self> {
        check_fitness(r)?;
        assert!(lcm.delta() >= g.max_degree(), "LCM table too small for graph");
        Ok(ActiveState {
            g,
            lcm,
            r,
            n_mut: 0,
            phi_scaled: BigUint::zero(),
            mutants: FxHashSet::default(),
            boundary: FxHashMap::default(),
            slots: Vec::new(),
            occupied: 0,
            steps: 0,
        })
    }

    /// State encoding the single mutant `v0`.
    pub fn init_active(g: &'a Graph, r: f64, v0: usize, lcm: &'a LcmTable) -> Result<Self> {
        if v0 >= g.n() {
            return Err(EngineError::InvalidVertex(v0));
        }
        let mut s = Self::blank(g, r, lcm)?;
        s.flip(v0, true);
        Ok(s)
    }

    /// State encoding an arbitrary mutant set.
    pub fn from_set(g: &'a Graph, r: f64, set: &MutantSet, lcm: &'a LcmTable) -> Result<Self> {
        if set.universe() != g.n() {
            return Err(EngineError::UniverseMismatch { expected: g.n(), found: set.universe() });
        }
        let mut s = Self::blank(g, r, lcm)?;
        for v in set.iter() {
            s.flip(v, true);
        }
        Ok(s)
    }

    pub fn n_mut(&self) -> usize {
        self.n_mut
    }

    pub fn phi_scaled(&self) -> &BigUint {
        &self.phi_scaled
    }

    /// Number of accepted active steps since construction.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_absorbed(&self) -> bool {
        self.n_mut == 0 || self.n_mut == self.g.n()
    }

    pub fn is_mutant(&self, v: usize) -> bool {
        self.mutants.contains(&(v as u32))
    }

    pub fn mutant_set(&self) -> MutantSet {
        MutantSet::from_vertices(self.g.n(), self.mutants.iter().map(|&v| v as usize))
    }

    /// `(vertex, d_bdry)` for every boundary vertex, sorted by vertex.
    pub fn boundary_entries(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self.slots.iter().flatten().map(|&(v, d)| (v as usize, d as usize)).collect();
        out.sort_unstable();
        out
    }

    pub fn slot_len(&self) -> usize {
        self.slots.len()
    }

    #[doc(hidden)]
    pub fn phi_scaled_mut(&mut self) -> &mut BigUint {
        &mut self.phi_scaled
    }

    /// Performs one active transition and returns it.
    pub fn active_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Flip> {
        if self.is_absorbed() {
            return Err(EngineError::Absorbing);
        }
        let rmax = self.r.max(1.0);
        let cap = REJECTION_CAP_PER_DEGREE * self.g.max_degree() as u64;
        let mut rounds = 0u64;
        let (v, d, mutant) = loop {
            if rounds >= cap {
                return Err(EngineError::RejectionCap(cap));
            }
            rounds += 1;
            let (v, d) = self.sample_occupied(rng);
            let mutant = self.mutants.contains(&v);
            let fitness = if mutant { self.r } else { 1.0 };
            let accept = fitness * d as f64 / (rmax * self.g.degree(v as usize) as f64);
            if accept >= 1.0 || rng.gen::<f64>() < accept {
                break (v as usize, d as usize, mutant);
            }
        };
        let pick = rng.gen_range(0..d);
        let target = self
            .g
            .neighbors(v)
            .iter()
            .map(|&w| w as usize)
            .filter(|w| self.mutants.contains(&(*w as u32)) != mutant)
            .nth(pick)
            .expect("boundary degree matches neighbour types");
        self.flip(target, mutant);
        self.steps += 1;
        Ok(Flip { spawner: v, target, gained: mutant })
    }

    fn sample_occupied<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        loop {
            if let Some(e) = self.slots[rng.gen_range(0..self.slots.len())] {
                return e;
            }
        }
    }

    /// Sets the type of `w`, keeping every invariant.
    fn flip(&mut self, w: usize, to_mutant: bool) {
        let wk = w as u32;
        let dw = self.g.degree(w);
        if to_mutant {
            debug_assert!(!self.mutants.contains(&wk));
            self.n_mut += 1;
            self.phi_scaled += self.lcm.quotient(dw);
            self.mutants.insert(wk);
        } else {
            debug_assert!(self.mutants.contains(&wk));
            self.n_mut -= 1;
            self.phi_scaled -= self.lcm.quotient(dw);
            self.mutants.remove(&wk);
        }
        for &x in self.g.in_neighbors(w) {
            if self.mutants.contains(&x) == to_mutant {
                self.bump(x, -1);
            } else {
                self.bump(x, 1);
            }
        }
        let old = self.boundary.get(&wk).map_or(0, |&i| self.slots[i as usize].unwrap().1);
        let new = dw as u32 - old;
        self.set_bdry(wk, new);
    }

    fn bump(&mut self, x: u32, delta: i32) {
        let cur = self.boundary.get(&x).map_or(0, |&i| self.slots[i as usize].unwrap().1);
        self.set_bdry(x, (cur as i64 + delta as i64) as u32);
    }

    fn set_bdry(&mut self, x: u32, d: u32) {
        match (self.boundary.get(&x).copied(), d) {
            (Some(i), 0) => {
                self.slots[i as usize] = None;
                self.boundary.remove(&x);
                self.occupied -= 1;
                if self.occupied == 0 {
                    self.slots.clear();
                } else if 3 * self.occupied < self.slots.len() {
                    self.resize(self.slots.len() * 2 / 3);
                }
            }
            (Some(i), d) => self.slots[i as usize] = Some((x, d)),
            (None, 0) => {}
            (None, d) => {
                if self.slots.is_empty() {
                    self.slots = vec![None; 2];
                }
                let i = self.free_slot();
                self.slots[i] = Some((x, d));
                self.boundary.insert(x, i as u32);
                self.occupied += 1;
                if 3 * self.occupied > 2 * self.slots.len() {
                    self.resize(self.slots.len() * 4 / 3);
                }
            }
        }
    }

    /// Free slots are found by probing positions in a fixed pseudo-random
    /// order; any placement rule works since sampling is over occupied slots.
    fn free_slot(&self) -> usize {
        let len = self.slots.len();
        let start = (self.occupied.wrapping_mul(0x9E37_79B9) ^ self.steps as usize) % len;
        (0..len).map(|k| (start + k) % len).find(|&i| self.slots[i].is_none()).expect("slot array never fills up")
    }

    fn resize(&mut self, proposed: usize) {
        let occ = self.occupied;
        let len = proposed.clamp((3 * occ).div_ceil(2), 3 * occ);
        let mut slots = vec![None; len];
        for (i, e) in self.slots.iter().flatten().enumerate() {
            slots[i] = Some(*e);
            self.boundary.insert(e.0, i as u32);
        }
        self.slots = slots;
    }

    /// Recomputes every invariant from scratch.
    pub fn audit_invariants(&self) -> Vec<InvariantViolation> {
        let g = self.g;
        let mut out = Vec::new();
        if self.n_mut != self.mutants.len() {
            out.push(InvariantViolation::MutantCount { stored: self.n_mut, actual: self.mutants.len() });
        }
        if let Some(&bad) = self.mutants.iter().find(|&&v| v as usize >= g.n()) {
            out.push(InvariantViolation::MutantId(bad));
            return out;
        }
        let actual_phi: BigUint = self.mutants.iter().map(|&v| self.lcm.quotient(g.degree(v as usize))).sum();
        if actual_phi != self.phi_scaled {
            out.push(InvariantViolation::ScaledPotential { stored: self.phi_scaled.clone(), actual: actual_phi });
        }
        for v in 0..g.n() {
            let vm = self.mutants.contains(&(v as u32));
            let d_bdry = g.neighbors(v).iter().filter(|&&w| self.mutants.contains(&w) != vm).count() as u32;
            let vk = v as u32;
            match self.boundary.get(&vk) {
                None if d_bdry > 0 => out.push(InvariantViolation::BoundaryMembership { vertex: vk, d_bdry }),
                None => {}
                Some(_) if d_bdry == 0 => out.push(InvariantViolation::BoundaryMembership { vertex: vk, d_bdry }),
                Some(&i) => match self.slots.get(i as usize).copied().flatten() {
                    Some((u, d)) if u == vk => {
                        if d != d_bdry {
                            out.push(InvariantViolation::SlotDegree { vertex: vk, stored: d, actual: d_bdry });
                        }
                    }
                    _ => out.push(InvariantViolation::SlotMismatch { vertex: vk, slot: i }),
                },
            }
        }
        for (i, e) in self.slots.iter().enumerate() {
            if let Some((v, _)) = e {
                if self.boundary.get(v) != Some(&(i as u32)) {
                    out.push(InvariantViolation::SlotMismatch { vertex: *v, slot: i as u32 });
                }
            }
        }
        let actual_occ = self.slots.iter().flatten().count();
        if actual_occ != self.occupied {
            out.push(InvariantViolation::OccupiedCount { stored: self.occupied, actual: actual_occ });
        }
        let len = self.slots.len();
        if len > 0 && (3 * actual_occ < len || 3 * actual_occ > 2 * len) {
            out.push(InvariantViolation::Occupancy { occupied: actual_occ, len });
        }
        out
    }
}

/// One step of the full process from `m`, idle steps included: the mutant
/// class is chosen with probability `r|M|/W(M)`, then a uniform member of
/// the class, then a uniform (out-)neighbour.
pub fn naive_step<R: Rng + ?Sized>(g: &Graph, r: f64, m: &MutantSet, rng: &mut R) -> Result<MutantSet> {
    check_fitness(r)?;
    if m.universe() != g.n() {
        return Err(EngineError::UniverseMismatch { expected: g.n(), found: m.universe() });
    }
    if m.is_empty() || m.is_full() {
        return Err(EngineError::Absorbing);
    }
    let k = m.len();
    let w = g.n() as f64 + (r - 1.0) * k as f64;
    let from_mutants = rng.gen::<f64>() < r * k as f64 / w;
    let x = if from_mutants {
        m.iter().nth(rng.gen_range(0..k)).unwrap()
    } else {
        (0..g.n()).filter(|&v| !m.contains(v)).nth(rng.gen_range(0..g.n() - k)).unwrap()
    };
    let nb = g.neighbors(x);
    let y = nb[rng.gen_range(0..nb.len())] as usize;
    let mut next = m.clone();
    if from_mutants {
        next.insert(y);
    } else {
        next.remove(y);
    }
    Ok(next)
}

/// Full-process state with both classes kept as swap-remove lists, so class
/// members can be sampled in O(1).
struct NaiveState {
    pos: Vec<usize>,
    is_mutant: Vec<bool>,
    mutants: Vec<usize>,
    others: Vec<usize>,
}

impl NaiveState {
    fn new(n: usize, set: &MutantSet) -> Self {
        let mut s = NaiveState { pos: vec![0; n], is_mutant: vec![false; n], mutants: Vec::new(), others: Vec::new() };
        for v in 0..n {
            if set.contains(v) {
                s.is_mutant[v] = true;
                s.pos[v] = s.mutants.len();
                s.mutants.push(v);
            } else {
                s.pos[v] = s.others.len();
                s.others.push(v);
            }
        }
        s
    }

    fn flip(&mut self, v: usize) {
        let (from, to) = if self.is_mutant[v] {
            (&mut self.mutants, &mut self.others)
        } else {
            (&mut self.others, &mut self.mutants)
        };
        let i = self.pos[v];
        from.swap_remove(i);
        if i < from.len() {
            self.pos[from[i]] = i;
        }
        self.pos[v] = to.len();
        to.push(v);
        self.is_mutant[v] = !self.is_mutant[v];
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    /// Full process, idle steps counted, until absorption.
    ToAbsorptionNaive,
    /// Active process until absorption.
    ToAbsorptionActive,
    /// Active process until extinction or `φ(M) ≥ P`.
    ToThreshold(BigRational),
    /// Active process stopped after at most this many active steps.
    Capped(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStart {
    Uniform,
    Vertex(usize),
    Set(MutantSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunResult {
    Fixation,
    Extinction,
    ThresholdReached,
    StepCapped,
}

impl RunResult {
    pub fn name(&self) -> &'static str {
        match self {
            RunResult::Fixation => "fixation",
            RunResult::Extinction => "extinction",
            RunResult::ThresholdReached => "threshold_reached",
            RunResult::StepCapped => "step_capped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub result: RunResult,
    pub active_steps: u64,
    /// Full-process steps, idle ones included; naive mode only.
    pub naive_steps: Option<u64>,
    pub final_phi_scaled: BigUint,
    pub final_mutants: usize,
    pub seed: u64,
}

/// One line of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub spawner: usize,
    pub target: usize,
    pub n_mut: usize,
    pub phi_scaled: BigUint,
}

/// A validated graph and fitness with a shared LCM table.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    g: &'g Graph,
    r: f64,
    lcm: LcmTable,
}

impl<'g> Simulator<'g> {
    pub fn new(g: &'g Graph, r: f64) -> Result<Self> {
        check_fitness(r)?;
        if g.n() < 2 {
            return Err(EngineError::SmallGraph);
        }
        if !g.is_process_connected() {
            return Err(EngineError::NotConnected);
        }
        let lcm = lcm_upto(g.max_degree())?;
        Ok(Simulator { g, r, lcm })
    }

    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    pub fn lcm(&self) -> &LcmTable {
        &self.lcm
    }

    fn start_set<R: Rng + ?Sized>(&self, start: &RunStart, rng: &mut R) -> Result<MutantSet> {
        let n = self.g.n();
        Ok(match start {
            RunStart::Uniform => MutantSet::singleton(n, rng.gen_range(0..n)),
            RunStart::Vertex(v) if *v < n => MutantSet::singleton(n, *v),
            RunStart::Vertex(v) => return Err(EngineError::InvalidVertex(*v)),
            RunStart::Set(s) if s.universe() == n => s.clone(),
            RunStart::Set(s) => return Err(EngineError::UniverseMismatch { expected: n, found: s.universe() }),
        })
    }

    /// Runs one replica. `cap` bounds the counted steps (active steps, or
    /// full steps in naive mode) on top of whatever `mode` implies.
    pub fn run<R: Rng + ?Sized>(
        &self,
        start: &RunStart,
        mode: &RunMode,
        cap: Option<u64>,
        rng: &mut R,
        seed: u64,
        mut trace: Option<&mut dyn FnMut(&TraceRecord)>,
    ) -> Result<RunOutcome> {
        if matches!(mode, RunMode::ToThreshold(_)) && self.g.is_directed() {
            return Err(EngineError::DirectedThreshold);
        }
        let set = self.start_set(start, rng)?;
        if let RunMode::ToAbsorptionNaive = mode {
            return self.run_naive(&set, cap, rng, seed, trace);
        }
        let cap = match mode {
            RunMode::Capped(c) => Some(cap.map_or(*c, |x| x.min(*c))),
            _ => cap,
        };
        let threshold = match mode {
            RunMode::ToThreshold(p) => Some(self.lcm.scale_ceil(p)),
            _ => None,
        };
        let mut state = ActiveState::from_set(self.g, self.r, &set, &self.lcm)?;
        let result = loop {
            if state.n_mut() == 0 {
                break RunResult::Extinction;
            }
            if threshold.as_ref().is_some_and(|t| state.phi_scaled() >= t) {
                break RunResult::ThresholdReached;
            }
            if state.n_mut() == self.g.n() {
                break RunResult::Fixation;
            }
            if cap.is_some_and(|c| state.steps() >= c) {
                break RunResult::StepCapped;
            }
            let flip = state.active_step(rng)?;
            if let Some(t) = trace.as_mut() {
                t(&TraceRecord {
                    step: state.steps(),
                    spawner: flip.spawner,
                    target: flip.target,
                    n_mut: state.n_mut(),
                    phi_scaled: state.phi_scaled().clone(),
                });
            }
        };
        Ok(RunOutcome {
            result,
            active_steps: state.steps(),
            naive_steps: None,
            final_phi_scaled: state.phi_scaled().clone(),
            final_mutants: state.n_mut(),
            seed,
        })
    }

    fn run_naive<R: Rng + ?Sized>(
        &self,
        set: &MutantSet,
        cap: Option<u64>,
        rng: &mut R,
        seed: u64,
        mut trace: Option<&mut dyn FnMut(&TraceRecord)>,
    ) -> Result<RunOutcome> {
        let g = self.g;
        let n = g.n();
        let mut st = NaiveState::new(n, set);
        let mut phi_scaled: BigUint = set.iter().map(|v| self.lcm.quotient(g.degree(v))).sum();
        let (mut naive, mut active) = (0u64, 0u64);
        let result = loop {
            let k = st.mutants.len();
            if k == 0 {
                break RunResult::Extinction;
            }
            if k == n {
                break RunResult::Fixation;
            }
            if cap.is_some_and(|c| naive >= c) {
                break RunResult::StepCapped;
            }
            naive += 1;
            let w = n as f64 + (self.r - 1.0) * k as f64;
            let from_mutants = rng.gen::<f64>() < self.r * k as f64 / w;
            let x = if from_mutants { st.mutants[rng.gen_range(0..k)] } else { st.others[rng.gen_range(0..n - k)] };
            let nb = g.neighbors(x);
            let y = nb[rng.gen_range(0..nb.len())] as usize;
            if st.is_mutant[y] == from_mutants {
                continue;
            }
            st.flip(y);
            active += 1;
            if from_mutants {
                phi_scaled += self.lcm.quotient(g.degree(y));
            } else {
                phi_scaled -= self.lcm.quotient(g.degree(y));
            }
            if let Some(t) = trace.as_mut() {
                t(&TraceRecord {
                    step: active,
                    spawner: x,
                    target: y,
                    n_mut: st.mutants.len(),
                    phi_scaled: phi_scaled.clone(),
                });
            }
        };
        Ok(RunOutcome {
            result,
            active_steps: active,
            naive_steps: Some(naive),
            final_phi_scaled: phi_scaled,
            final_mutants: st.mutants.len(),
            seed,
        })
    }
}

/// Single seeded run on stream 0 of `seed`.
pub fn run(g: &Graph, r: f64, start: &RunStart, mode: &RunMode, seed: u64) -> Result<RunOutcome> {
    let sim = Simulator::new(g, r)?;
    let mut rng = replica_rng(seed, 0);
    sim.run(start, mode, None, &mut rng, seed, None)
}

/// `true` when `d` is divisible by every `k ≤ delta` and no prime factor can
/// be removed without losing that.
pub fn is_minimal_common_multiple(d: &BigUint, delta: usize) -> bool {
    let divisible = |x: &BigUint| (1..=delta).all(|k| (x % k).is_zero());
    if !divisible(d) {
        return false;
    }
    primes_upto(delta).into_iter().all(|p| {
        let (q, rem) = d.div_rem(&BigUint::from(p));
        !rem.is_zero() || !divisible(&q)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generate, Family};

    fn fam(f: Family) -> Graph {
        generate(f, None).unwrap().graph
    }

    #[test]
    fn lcm_values() {
        assert_eq!(lcm_upto(1).unwrap().d(), &BigUint::from(1u32));
        assert_eq!(lcm_upto(4).unwrap().d(), &BigUint::from(12u32));
        assert_eq!(lcm_upto(10).unwrap().d(), &BigUint::from(2520u32));
        assert_eq!(lcm_upto(10).unwrap().quotient(7), &BigUint::from(360u32));
        assert_eq!(lcm_upto(0), Err(EngineError::ZeroDelta));
        for delta in 1..40 {
            let t = lcm_upto(delta).unwrap();
            assert!(is_minimal_common_multiple(t.d(), delta));
            assert!(t.d() <= &(BigUint::one() << (2 * delta)));
        }
        assert!(!is_minimal_common_multiple(&BigUint::from(24u32), 4));
        assert!(!is_minimal_common_multiple(&BigUint::from(6u32), 4));
    }

    #[test]
    fn init_on_triangle() {
        let k3 = fam(Family::Complete { n: 3 });
        let lcm = lcm_upto(2).unwrap();
        let s = ActiveState::init_active(&k3, 2.0, 0, &lcm).unwrap();
        assert_eq!(s.n_mut(), 1);
        assert_eq!(s.phi_scaled(), &BigUint::from(1u32));
        assert_eq!(s.boundary_entries(), vec![(0, 2), (1, 1), (2, 1)]);
        assert!(s.audit_invariants().is_empty());
        assert_eq!(ActiveState::init_active(&k3, 2.0, 3, &lcm).unwrap_err(), EngineError::InvalidVertex(3));
    }

    #[test]
    fn init_on_star_centre() {
        let s3 = fam(Family::Star { k: 3 });
        let lcm = lcm_upto(3).unwrap();
        let s = ActiveState::init_active(&s3, 2.0, 0, &lcm).unwrap();
        assert_eq!(s.boundary_entries(), vec![(0, 3), (1, 1), (2, 1), (3, 1)]);
        assert!(s.audit_invariants().is_empty());
    }

    #[test]
    fn perturbed_potential_is_reported() {
        let k3 = fam(Family::Complete { n: 3 });
        let lcm = lcm_upto(2).unwrap();
        let mut s = ActiveState::init_active(&k3, 2.0, 1, &lcm).unwrap();
        *s.phi_scaled_mut() += 1u32;
        let v = s.audit_invariants();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], InvariantViolation::ScaledPotential { .. }));
    }

    #[test]
    fn steps_keep_invariants() {
        for seed in 0..20 {
            let g = generate(Family::RandomConnected { n: 20, p: 0.2 }, Some(seed)).unwrap().graph;
            let lcm = lcm_upto(g.max_degree()).unwrap();
            let mut rng = replica_rng(seed, 1);
            let mut s = ActiveState::init_active(&g, 1.3, (seed % 20) as usize, &lcm).unwrap();
            while !s.is_absorbed() {
                let before = s.phi_scaled().clone();
                let f = s.active_step(&mut rng).unwrap();
                let q = lcm.quotient(g.degree(f.target));
                if f.gained {
                    assert_eq!(s.phi_scaled(), &(before + q));
                } else {
                    assert_eq!(&(s.phi_scaled() + q), &before);
                }
                assert_eq!(s.audit_invariants(), vec![]);
            }
            assert_eq!(s.active_step(&mut rng), Err(EngineError::Absorbing));
        }
    }

    #[test]
    fn directed_steps_keep_invariants() {
        let h = generate(Family::DirSuppressor { k: 3, a: 3 }, None).unwrap();
        let lcm = lcm_upto(h.graph.max_degree()).unwrap();
        for seed in 0..10 {
            let mut rng = replica_rng(seed, 0);
            let mut s = ActiveState::init_active(&h.graph, 2.0, seed as usize, &lcm).unwrap();
            while !s.is_absorbed() {
                s.active_step(&mut rng).unwrap();
                assert_eq!(s.audit_invariants(), vec![]);
            }
        }
    }

    #[test]
    fn k2_run_absorbs_in_one_step() {
        let k2 = fam(Family::Complete { n: 2 });
        let a = run(&k2, 2.0, &RunStart::Uniform, &RunMode::ToAbsorptionActive, 9).unwrap();
        let b = run(&k2, 2.0, &RunStart::Uniform, &RunMode::ToAbsorptionActive, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.active_steps, 1);
        assert!(matches!(a.result, RunResult::Fixation | RunResult::Extinction));
    }

    #[test]
    fn capped_zero_stops_immediately() {
        let c5 = fam(Family::Cycle { n: 5 });
        let out = run(&c5, 2.0, &RunStart::Vertex(0), &RunMode::Capped(0), 1).unwrap();
        assert_eq!((out.result, out.active_steps), (RunResult::StepCapped, 0));
    }

    #[test]
    fn threshold_mode() {
        let c8 = fam(Family::Cycle { n: 8 });
        let p = BigRational::from_integer(2.into());
        for seed in 0..50 {
            let out = run(&c8, 2.0, &RunStart::Uniform, &RunMode::ToThreshold(p.clone()), seed).unwrap();
            match out.result {
                RunResult::Extinction => assert_eq!(out.final_mutants, 0),
                RunResult::ThresholdReached => {
                    // φ = |M|/2 on a cycle, so φ ≥ 2 means four mutants
                    assert_eq!(out.final_mutants, 4);
                    assert_eq!(out.final_phi_scaled, BigUint::from(4u32));
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        let arcs = Graph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(
            run(&arcs, 2.0, &RunStart::Uniform, &RunMode::ToThreshold(p), 0).unwrap_err(),
            EngineError::DirectedThreshold
        );
    }

    #[test]
    fn rejects_bad_input() {
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(Simulator::new(&two, 2.0).unwrap_err(), EngineError::NotConnected);
        let k3 = fam(Family::Complete { n: 3 });
        assert_eq!(Simulator::new(&k3, 0.0).unwrap_err(), EngineError::BadFitness);
        assert_eq!(Simulator::new(&k3, f64::NAN).unwrap_err(), EngineError::BadFitness);
        let one = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(Simulator::new(&one, 2.0).unwrap_err(), EngineError::SmallGraph);
    }

    #[test]
    fn naive_k2() {
        let k2 = fam(Family::Complete { n: 2 });
        let m = MutantSet::singleton(2, 0);
        let mut rng = replica_rng(3, 0);
        let mut up = 0;
        for _ in 0..30_000 {
            let next = naive_step(&k2, 2.0, &m, &mut rng).unwrap();
            assert_ne!(next, m);
            if next.is_full() {
                up += 1;
            }
        }
        let p = up as f64 / 30_000.0;
        assert!((p - 2.0 / 3.0).abs() < 0.015, "{p}");
    }

    #[test]
    fn naive_run_counts_idle_steps() {
        let c6 = fam(Family::Cycle { n: 6 });
        let out = run(&c6, 1.0, &RunStart::Vertex(0), &RunMode::ToAbsorptionNaive, 4).unwrap();
        assert!(out.naive_steps.unwrap() >= out.active_steps);
        assert!(out.active_steps >= 1);
    }

    #[test]
    fn low_fitness_still_samples() {
        let s4 = fam(Family::Star { k: 4 });
        let sim = Simulator::new(&s4, 0.25).unwrap();
        let mut rng = replica_rng(0, 0);
        for _ in 0..100 {
            sim.run(&RunStart::Uniform, &RunMode::ToAbsorptionActive, None, &mut rng, 0, None).unwrap();
        }
    }
}
