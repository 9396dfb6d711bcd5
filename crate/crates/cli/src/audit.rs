//! `suppressor-audit`: the exact sigma-drift check on `H_{a,k}` and the
//! Monte Carlo fixation check on `G_{k,a}`.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use moran::engine::{replica_rng, RunStart};
use moran::estimator::monte_carlo_fixation;
use moran::exact::{one_step_expected_change, PotentialKind};
use moran::families::{generate, Family, LabeledGraph, SigmaWeights};
use moran::rational::to_f64;
use moran::MutantSet;

use crate::report::{Format, Record, Value};
use crate::{input, usage, CliError, Output, Result};

/// Largest mutant set sampled for the sigma check.
pub const MAX_SAMPLED_SET: usize = 40;
/// Sampling attempts allowed per requested state.
const ATTEMPTS_PER_SAMPLE: usize = 100;
/// Default `k` of the undirected construction.
pub const DEFAULT_UNDIR_K: usize = 28;
/// Default `k` of the directed construction.
pub const DEFAULT_DIR_K: usize = 15;

pub struct AuditConfig {
    pub family: Option<String>,
    pub r: BigRational,
    pub a: Option<usize>,
    pub k: Option<usize>,
    pub samples: usize,
    pub runs: u64,
    pub seed: u64,
}

const COLUMNS: [&str; 10] = ["check", "family", "a", "k", "item", "size", "value", "exact", "bound", "pass"];

fn ceil_usize(x: &BigRational) -> usize {
    x.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

pub fn run(cfg: &AuditConfig, format: Format, out: &mut Output) -> Result<()> {
    if cfg.r <= BigRational::from_integer(1.into()) {
        return Err(usage("suppressor-audit needs --r > 1"));
    }
    let (undir, dir) = match cfg.family.as_deref() {
        None if cfg.a.is_some() || cfg.k.is_some() => return Err(usage("--a and --k need --family")),
        None => (true, true),
        Some("undir_suppressor") => (true, false),
        Some("dir_suppressor") => (false, true),
        Some(other) => return Err(usage(format!("suppressor-audit does not cover `{other}`"))),
    };
    let mut rows = Vec::new();
    if undir {
        let a = cfg.a.unwrap_or_else(|| ceil_usize(&(&cfg.r * &cfg.r * BigRational::new(7.into(), 2.into()))));
        rows.extend(sigma_rows(cfg, a, cfg.k.unwrap_or(DEFAULT_UNDIR_K))?);
    }
    if dir {
        let a = cfg.a.unwrap_or_else(|| ceil_usize(&(&cfg.r * BigRational::from_integer(4.into()))));
        rows.extend(fixation_rows(cfg, a, cfg.k.unwrap_or(DEFAULT_DIR_K))?);
    }
    out.report(&COLUMNS, &rows, format)?;
    let failures = rows.iter().filter(|r| r[9] == Value::Bool(false)).count();
    if failures > 0 {
        return Err(CliError::Audit(format!("{failures} audit checks failed")));
    }
    Ok(())
}

/// Random states of `H_{a,k}` over the light blocks with `σ < k`, grown one
/// vertex at a time. Half mix the blocks freely and half are built around
/// star centres and their own leaves.
fn sample_state<R: Rng>(
    rng: &mut R,
    h: &LabeledGraph,
    sw: &SigmaWeights,
    blocks: &[&[usize]; 3],
    star: bool,
) -> MutantSet {
    let n = h.graph.n();
    let k = BigRational::from_integer(sw.k.into());
    let target = rng.gen_range(1..=MAX_SAMPLED_SET);
    let mut s = MutantSet::empty(n);
    let mut sigma = BigRational::zero();
    let mut offer = |s: &mut MutantSet, v: usize| {
        let next = &sigma + sw.weight(v);
        if s.len() < target && !s.contains(v) && next < k {
            s.insert(v);
            sigma = next;
        }
    };
    for _ in 0..4 * target {
        let b = rng.gen_range(0..3);
        if blocks[b].is_empty() {
            continue;
        }
        let v = blocks[b][rng.gen_range(0..blocks[b].len())];
        if star && b == 2 {
            offer(&mut s, v);
            for &w in h.graph.neighbors(v) {
                if sw.class(w as usize) == 1 && rng.gen_bool(0.5) {
                    offer(&mut s, w as usize);
                }
            }
        } else if !star || b == 0 {
            offer(&mut s, v);
        }
    }
    s
}

fn sigma_rows(cfg: &AuditConfig, a: usize, k: usize) -> Result<Vec<Record>> {
    let h = generate(Family::UndirSuppressor { a, k }, None).map_err(input)?;
    let sw = SigmaWeights::for_graph(&h, &cfg.r).map_err(input)?;
    let block = |name: &str| h.group(name).ok_or_else(|| CliError::Input(format!("missing group {name}")));
    let blocks = [block("V0")?, block("V1")?, block("V2")?];
    let kq = BigRational::from_integer(k.into());
    let mut rng = replica_rng(cfg.seed, 0);
    let mut rows = Vec::new();
    let mut tries = 0;
    while rows.len() < cfg.samples {
        tries += 1;
        if tries > cfg.samples * ATTEMPTS_PER_SAMPLE {
            return Err(CliError::Input("could not sample enough states with 0 < sigma < k".into()));
        }
        let s = sample_state(&mut rng, &h, &sw, &blocks, rows.len() % 2 == 1);
        let sigma = sw.potential(&s).map_err(input)?;
        if s.is_empty() || sigma.is_zero() || sigma >= kq {
            continue;
        }
        let e = one_step_expected_change(&h.graph, &cfg.r, &s, PotentialKind::Sigma(&sw)).map_err(input)?;
        let exact = e.exact().cloned().ok_or_else(|| CliError::Input("sigma change is not exact".into()))?;
        let pass = exact <= BigRational::zero();
        rows.push(vec![
            "sigma_drift".into(),
            "undir_suppressor".into(),
            a.into(),
            k.into(),
            format!("state_{}", rows.len()).into(),
            s.len().into(),
            to_f64(&exact).into(),
            exact.into(),
            0.0.into(),
            pass.into(),
        ]);
    }
    Ok(rows)
}

/// Start groups `X_i` whose fixation bound `2^{5−i}·a·r` is below one.
fn fixation_rows(cfg: &AuditConfig, a: usize, k: usize) -> Result<Vec<Record>> {
    if cfg.runs == 0 {
        return Err(usage("--runs must be positive"));
    }
    let g = generate(Family::DirSuppressor { k, a }, None).map_err(input)?;
    let r = to_f64(&cfg.r);
    let mut rows = Vec::new();
    for i in 1..=k {
        let bound = 2f64.powi(5 - i as i32) * a as f64 * r;
        if bound >= 1.0 {
            continue;
        }
        let name = format!("X_{i}");
        let x = g.group_set(&name).ok_or_else(|| CliError::Input(format!("missing group {name}")))?;
        let size = x.len();
        let mc = monte_carlo_fixation(&g.graph, r, &RunStart::Set(x), cfg.runs, cfg.seed.wrapping_add(i as u64))
            .map_err(input)?;
        let sigma = (bound * (1.0 - bound) / cfg.runs as f64).sqrt();
        rows.push(vec![
            "dir_fixation".into(),
            "dir_suppressor".into(),
            a.into(),
            k.into(),
            name.into(),
            size.into(),
            mc.value.into(),
            Value::Null,
            bound.into(),
            (mc.value <= bound + 3.0 * sigma).into(),
        ]);
    }
    Ok(rows)
}
