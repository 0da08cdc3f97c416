//! Monte-Carlo experiments for the law of large numbers under mean
//! ambiguity.
//!
//! A path is `X_i = mu_i + eps_i`: nature picks `mu_i` from the interval
//! through a [`MeanPolicy`], and `eps_i` is bounded mean-zero noise. The
//! supremum over all admissible laws is not computable, so every estimate is
//! the maximum over a finite set of policies. It is a lower bound of the
//! sublinear expectation it approximates.
//!
//! Reproducibility: replication `r` draws from
//! `ChaCha8Rng::seed_from_u64(seed.wrapping_add(r))`. Within a step the
//! policy draw (random policies only) comes before the noise draw. Uniform
//! noise is `a * (2u - 1)` with `u` a standard `f64` sample in `[0, 1)`;
//! two-point noise is `+a` when a `bool` sample is true and `-a` otherwise.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::BoundedLipschitzFn;
use crate::maximal::{GridSpec, MaximalDist};
use crate::numeric::ExactAccumulator;

/// Generator family and seed-splitting rule, echoed in every report.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng::seed_from_u64(seed + replication)";

type AdversaryFn = Arc<dyn Fn(usize, Option<f64>) -> f64 + Send + Sync>;

/// Nature's rule for choosing each step's mean.
#[derive(Clone)]
pub enum MeanPolicy {
    Constant(f64),
    /// Cycles through the listed means.
    Periodic(Vec<f64>),
    /// Uniform draw from the listed means at every step.
    Random(Vec<f64>),
    /// Receives the step index and the running average of the previous
    /// observations (`None` at the first step).
    Adversarial {
        name: String,
        rule: AdversaryFn,
    },
}

impl MeanPolicy {
    pub fn adversarial<F>(name: impl Into<String>, rule: F) -> Self
    where
        F: Fn(usize, Option<f64>) -> f64 + Send + Sync + 'static,
    {
        MeanPolicy::Adversarial {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    /// Picks the endpoint farther from the running average, starting at the
    /// upper one.
    pub fn oscillating(d: &MaximalDist) -> Self {
        let (lo, hi) = (d.mu_lo(), d.mu_hi());
        let mid = 0.5 * (lo + hi);
        Self::adversarial("oscillating", move |_, avg| match avg {
            Some(a) if a > mid => lo,
            _ => hi,
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            MeanPolicy::Periodic(v) | MeanPolicy::Random(v) if v.is_empty() => {
                Err(Error::arg(format!("policy {self} has no means")))
            }
            _ => Ok(()),
        }
    }

    fn uses_history(&self) -> bool {
        matches!(self, MeanPolicy::Adversarial { .. })
    }

    fn mean(&self, step: usize, avg: Option<f64>, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            MeanPolicy::Constant(mu) => *mu,
            MeanPolicy::Periodic(v) => v[step % v.len()],
            MeanPolicy::Random(v) => v[rng.random_range(0..v.len())],
            MeanPolicy::Adversarial { rule, .. } => rule(step, avg),
        }
    }
}

impl fmt::Display for MeanPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        match self {
            MeanPolicy::Constant(mu) => write!(f, "constant({mu})"),
            MeanPolicy::Periodic(v) => write!(f, "periodic({})", list(v)),
            MeanPolicy::Random(v) => write!(f, "random({})", list(v)),
            MeanPolicy::Adversarial { name, .. } => write!(f, "adversarial({name})"),
        }
    }
}

impl fmt::Debug for MeanPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeanPolicy::{self}")
    }
}

/// Bounded, mean-zero noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "half_width", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    Uniform(f64),
    TwoPoint(f64),
}

impl NoiseSpec {
    pub fn uniform(a: f64) -> Result<Self> {
        check_half_width(a).map(NoiseSpec::Uniform)
    }

    pub fn two_point(a: f64) -> Result<Self> {
        check_half_width(a).map(NoiseSpec::TwoPoint)
    }

    /// `E[eps^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Uniform(a) => a * a / 3.0,
            NoiseSpec::TwoPoint(a) => a * a,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Uniform(a) => a * (2.0 * rng.random::<f64>() - 1.0),
            NoiseSpec::TwoPoint(a) => {
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            }
        }
    }
}

fn check_half_width(a: f64) -> Result<f64> {
    if a.is_finite() && a > 0.0 {
        Ok(a)
    } else {
        Err(Error::arg(format!(
            "noise half-width must be positive, got {a}"
        )))
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    /// `none`, `uniform:A` or `two_point:A`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(NoiseSpec::None);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::arg(format!(
                "noise `{s}`: expected none, uniform:A or two_point:A"
            ))
        })?;
        let a: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("noise `{s}`: bad half-width `{arg}`")))?;
        match kind.trim() {
            "uniform" => Self::uniform(a),
            "two_point" | "two-point" => Self::two_point(a),
            other => Err(Error::arg(format!("unknown noise kind `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::None => write!(f, "none"),
            NoiseSpec::Uniform(a) => write!(f, "uniform:{a}"),
            NoiseSpec::TwoPoint(a) => write!(f, "two_point:{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    /// Path length.
    pub n: usize,
    /// Monte-Carlo replications.
    pub reps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Result<Self> {
        if n == 0 || reps == 0 {
            return Err(Error::arg(format!(
                "path length and replications must be positive, got n={n}, reps={reps}"
            )));
        }
        Ok(SimConfig { n, reps, seed })
    }
}

/// `max_{mu in [mu_lo, mu_hi]} mu^2 + E[eps^2]`, the upper second moment of
/// one observation.
pub fn second_moment_upper(d: &MaximalDist, noise: &NoiseSpec) -> f64 {
    let lo2 = d.mu_lo() * d.mu_lo();
    let hi2 = d.mu_hi() * d.mu_hi();
    lo2.max(hi2) + noise.second_moment()
}

/// Powers of ten up to `n_max`, then `n_max` itself.
pub fn log_schedule(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1usize;
    while n <= n_max {
        out.push(n);
        match n.checked_mul(10) {
            Some(next) => n = next,
            None => break,
        }
    }
    if out.last() != Some(&n_max) && n_max > 0 {
        out.push(n_max);
    }
    out
}

/// Streams one replication, calling `visit(i, x_i, sum_i)` for every step.
fn run_replication<V>(
    d: &MaximalDist,
    policy: &MeanPolicy,
    noise: &NoiseSpec,
    n: usize,
    seed: u64,
    mut visit: V,
) -> Result<()>
where
    V: FnMut(usize, f64, &ExactAccumulator),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = ExactAccumulator::default();
    let history = policy.uses_history();
    for step in 0..n {
        let avg = (history && step > 0).then(|| sum.value() / step as f64);
        let mu = policy.mean(step, avg, &mut rng);
        if !d.contains(mu) {
            return Err(Error::Simulation {
                step,
                mu,
                lo: d.mu_lo(),
                hi: d.mu_hi(),
            });
        }
        let x = mu + noise.sample(&mut rng);
        sum.add(x);
        visit(step, x, &sum);
    }
    Ok(())
}

/// Paths for every replication, `reps x n`.
pub fn simulate_path(
    d: &MaximalDist,
    policy: &MeanPolicy,
    noise: &NoiseSpec,
    cfg: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    policy.validate()?;
    (0..cfg.reps)
        .map(|r| {
            let mut path = Vec::with_capacity(cfg.n);
            run_replication(
                d,
                policy,
                noise,
                cfg.n,
                replication_seed(cfg, r),
                |_, x, _| path.push(x),
            )?;
            Ok(path)
        })
        .collect()
}

fn replication_seed(cfg: &SimConfig, r: usize) -> u64 {
    cfg.seed.wrapping_add(r as u64)
}

/// One row of a simulation table. `gap = estimate - target_or_bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub n: usize,
    pub policy_id: String,
    pub estimate: f64,
    pub target_or_bound: f64,
    pub gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub kind: &'static str,
    pub generator: &'static str,
    pub seed: u64,
    pub reps: usize,
    pub note: &'static str,
    pub rows: Vec<SimRow>,
    /// Path lengths where some policy exceeded its bound by more than three
    /// standard errors (rate checks only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<usize>>,
}

const INNER_NOTE: &str =
    "estimates maximize over a finite policy set and are lower bounds of the sublinear expectation";

impl SimReport {
    /// Rows aggregated over policies.
    pub fn max_rows(&self) -> impl Iterator<Item = &SimRow> {
        self.rows.iter().filter(|r| r.policy_id == "max")
    }

    pub const CSV_HEADER: &'static str = "n,policy_id,estimate,target_or_bound,gap,stderr";

    pub fn to_csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.n, r.policy_id, r.estimate, r.target_or_bound, r.gap, r.stderr
                )
            })
            .collect()
    }
}

/// Monte-Carlo mean and standard error of `stat(S_n / n)` for every policy
/// and every `n` in the schedule: `[policy][schedule index]`.
fn policy_means<S>(
    d: &MaximalDist,
    policies: &[MeanPolicy],
    noise: &NoiseSpec,
    cfg: &SimConfig,
    schedule: &[usize],
    stat: S,
) -> Result<Vec<Vec<(f64, f64)>>>
where
    S: Fn(&ExactAccumulator, usize) -> Result<f64>,
{
    if policies.is_empty() {
        return Err(Error::arg("at least one mean policy is required"));
    }
    if let Some(&bad) = schedule.iter().find(|&&n| n == 0 || n > cfg.n) {
        return Err(Error::arg(format!(
            "schedule entry {bad} outside 1..={}",
            cfg.n
        )));
    }
    let n_max = schedule.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(policies.len());
    for policy in policies {
        policy.validate()?;
        // samples[schedule index][replication]
        let mut samples = vec![Vec::with_capacity(cfg.reps); schedule.len()];
        for r in 0..cfg.reps {
            let mut values = Vec::with_capacity(schedule.len());
            run_replication(
                d,
                policy,
                noise,
                n_max,
                replication_seed(cfg, r),
                |i, _, sum| {
                    let n = i + 1;
                    if schedule.contains(&n) {
                        values.push((n, stat(sum, n)));
                    }
                },
            )?;
            for (k, &n) in schedule.iter().enumerate() {
                let (_, v) = values
                    .iter_mut()
                    .find(|(m, _)| *m == n)
                    .expect("schedule entries are visited");
                samples[k].push(std::mem::replace(v, Ok(0.0))?);
            }
        }
        out.push(samples.iter().map(|s| mean_and_stderr(s)).collect());
    }
    Ok(out)
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn assemble_rows(
    policies: &[MeanPolicy],
    schedule: &[usize],
    means: &[Vec<(f64, f64)>],
    reference: impl Fn(usize) -> f64,
) -> Vec<SimRow> {
    let mut rows = Vec::new();
    for (k, &n) in schedule.iter().enumerate() {
        let target = reference(n);
        let mut best: Option<(f64, f64)> = None;
        for (policy, m) in policies.iter().zip(means) {
            let (estimate, stderr) = m[k];
            rows.push(SimRow {
                n,
                policy_id: policy.to_string(),
                estimate,
                target_or_bound: target,
                gap: estimate - target,
                stderr,
            });
            if best.is_none_or(|b| estimate > b.0) {
                best = Some((estimate, stderr));
            }
        }
        let (estimate, stderr) = best.expect("policies are nonempty");
        rows.push(SimRow {
            n,
            policy_id: "max".into(),
            estimate,
            target_or_bound: target,
            gap: estimate - target,
            stderr,
        });
    }
    rows
}

/// Max-over-policies Monte-Carlo estimate of `E^[f(S_n / n)]` against the
/// limit `max_{mu} f(mu)`, for each `n` in `schedule` (default
/// [`log_schedule`] of `cfg.n`).
pub fn empirical_lln(
    d: &MaximalDist,
    f: &BoundedLipschitzFn,
    policies: &[MeanPolicy],
    noise: &NoiseSpec,
    cfg: &SimConfig,
    g: &GridSpec,
    schedule: Option<&[usize]>,
) -> Result<SimReport> {
    let schedule = schedule
        .map(<[usize]>::to_vec)
        .unwrap_or_else(|| log_schedule(cfg.n));
    let target = d.eval_maximal(f, g)?.value;
    let means = policy_means(d, policies, noise, cfg, &schedule, |sum, n| {
        let avg = sum.value() / n as f64;
        let v = f.eval(avg);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                index: 0,
                point: avg,
                value: v,
            })
        }
    })?;
    Ok(SimReport {
        kind: "lln",
        generator: GENERATOR,
        seed: cfg.seed,
        reps: cfg.reps,
        note: INNER_NOTE,
        rows: assemble_rows(policies, &schedule, &means, |_| target),
        violations: None,
    })
}

/// Empirical `E^[d(S_n / n)^2]` against the bound `E^[X_1^2] / n`, where `d`
/// is the distance to the mean interval. Violations are rows exceeding the
/// bound by more than three standard errors.
pub fn rate_check(
    d: &MaximalDist,
    policies: &[MeanPolicy],
    noise: &NoiseSpec,
    cfg: &SimConfig,
    schedule: &[usize],
) -> Result<SimReport> {
    let moment = second_moment_upper(d, noise);
    // distance from the exact sum, so averages of in-interval means never
    // leave the interval through rounding
    let means = policy_means(d, policies, noise, cfg, schedule, |sum, n| {
        let nf = n as f64;
        let above = sum.excess_over(nf, d.mu_hi());
        let below = -sum.excess_over(nf, d.mu_lo());
        let dist = if above > 0.0 {
            above / nf
        } else if below > 0.0 {
            below / nf
        } else {
            0.0
        };
        Ok(dist * dist)
    })?;
    let rows = assemble_rows(policies, schedule, &means, |n| moment / n as f64);
    let mut violations: Vec<usize> = rows
        .iter()
        .filter(|r| r.gap > 3.0 * r.stderr)
        .map(|r| r.n)
        .collect();
    violations.dedup();
    Ok(SimReport {
        kind: "rate",
        generator: GENERATOR,
        seed: cfg.seed,
        reps: cfg.reps,
        note: INNER_NOTE,
        rows,
        violations: Some(violations),
    })
}
