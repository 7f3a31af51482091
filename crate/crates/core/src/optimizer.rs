//! Projected quasi-Newton minimization of `F_B` over the Bethe box.
//!
//! Each iteration takes the BFGS direction `d = −Bᵀ∇F_B`, shrinks the full
//! step by a constant factor until it stays inside the box, and runs an
//! adaptive Wolfe line search on the resulting segment. `B` approximates the
//! inverse Hessian and is refreshed with the standard BFGS rank-two update.

// `!(x < 0.0)` style tests deliberately send NaN down the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use alloc::vec;
use alloc::vec::Vec;

use crate::bethe::{self, BethePoint, BOX_EPS};
use crate::error::{Error, Result};
use crate::graph::Model;
use crate::linalg::Matrix;
use crate::math;
use crate::rng::SeededRng;

/// L∞ radius used to group converged restarts into distinct minima.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-3;

/// Relative slack on the sufficient-decrease test once the change in `F_B`
/// is below its rounding noise; the slope condition must then hold instead.
const FLAT_TOL: f64 = 1e-12;

/// Cap on shrinks of the maximal step while projecting into the box.
const MAX_SHRINKS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialMetric {
    Identity,
    /// `QᵀΛQ` with a random orthogonal `Q` and `Λ` uniform in `(0.1, 1)`.
    RandomSpd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence tolerance on the Euclidean gradient norm.
    pub epsilon: f64,
    /// Sufficient-decrease parameter (W1).
    pub tau1: f64,
    /// Curvature parameter (W2).
    pub tau2: f64,
    pub projection_shrink: f64,
    pub expansion: f64,
    pub max_iterations: usize,
    pub max_line_search_steps: usize,
    pub initial_metric: InitialMetric,
    /// Start each line search at a uniform random step instead of 1.
    pub random_initial_step: bool,
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            tau1: 1e-4,
            tau2: 0.9,
            projection_shrink: 0.9,
            expansion: 1.1,
            max_iterations: 10_000,
            max_line_search_steps: 60,
            initial_metric: InitialMetric::Identity,
            random_initial_step: false,
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && 0.0 < self.tau1
            && self.tau1 < self.tau2
            && self.tau2 < 1.0
            && 0.0 < self.projection_shrink
            && self.projection_shrink < 1.0
            && self.expansion > 1.0
            && self.max_line_search_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "need ε > 0, 0 < τ1 < τ2 < 1, 0 < shrink < 1, expansion > 1".into(),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No admissible step could be found.
    Stalled,
}

/// One accepted iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    /// Distance moved, `‖q⁽ᵗ⁺¹⁾ − q⁽ᵗ⁾‖₂`.
    pub step: f64,
    pub curvature_skip: bool,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizationResult {
    pub q_star: BethePoint,
    pub f_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// BFGS updates skipped because `sᵀy` was not safely positive.
    pub curvature_skips: usize,
    /// Iterations that fell back to a steepest-descent step.
    pub fallbacks: usize,
    pub trace: Option<Vec<TraceRow>>,
}

/// Outcome of [`wolfe_line_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    /// Step `ρ ∈ (0, 1]` along `q_head − q_tail`.
    pub step: f64,
    pub f_value: f64,
    /// Both Wolfe conditions hold, or W1 holds at `ρ = 1` (the far end of the
    /// feasible segment) while the slope is still negative.
    pub satisfied: bool,
    pub evaluations: usize,
}

struct Segment<'a> {
    model: &'a Model,
    tail: &'a [f64],
    dir: Vec<f64>,
    f0: f64,
    slope0: f64,
    point: Vec<f64>,
    grad: Vec<f64>,
}

impl Segment<'_> {
    fn eval(&mut self, rho: f64) -> Result<(f64, f64)> {
        for ((p, &t), &d) in self.point.iter_mut().zip(self.tail).zip(&self.dir) {
            *p = bethe::clamp(t + rho * d);
        }
        let f = bethe::evaluate(self.model, &self.point, Some(&mut self.grad))?;
        Ok((f, math::dot(&self.dir, &self.grad)))
    }

    fn w1(&self, rho: f64, f: f64, slope: f64, tau1: f64) -> bool {
        if f <= self.f0 + tau1 * rho * self.slope0 {
            return true;
        }
        f - self.f0 <= FLAT_TOL * (1.0 + math::abs(self.f0))
            && slope <= (2.0 * tau1 - 1.0) * self.slope0
    }
}

/// Adaptive Wolfe line search on the segment from `q_tail` to `q_head`.
pub fn wolfe_line_search(
    model: &Model,
    q_tail: &BethePoint,
    q_head: &BethePoint,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<LineSearch> {
    config.validate()?;
    let (f0, g0) = bethe::free_energy_and_gradient(model, q_tail)?;
    let dir: Vec<f64> = q_head
        .as_slice()
        .iter()
        .zip(q_tail.as_slice())
        .map(|(h, t)| h - t)
        .collect();
    line_search(model, q_tail.as_slice(), dir, f0, &g0, config, rng)
}

fn line_search(
    model: &Model,
    tail: &[f64],
    dir: Vec<f64>,
    f0: f64,
    g0: &[f64],
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<LineSearch> {
    let slope0 = math::dot(&dir, g0);
    if !(slope0 < 0.0) {
        return Err(Error::NotDescent(slope0));
    }
    let n = tail.len();
    let mut seg = Segment {
        model,
        tail,
        dir,
        f0,
        slope0,
        point: vec![0.0; n],
        grad: vec![0.0; n],
    };
    let (tau1, tau2) = (config.tau1, config.tau2);
    let mut best: Option<(f64, f64)> = None;
    let mut evaluations = 0;
    let note = |rho: f64, f: f64, best: &mut Option<(f64, f64)>| {
        if best.is_none_or(|(_, bf)| f < bf) {
            *best = Some((rho, f));
        }
    };

    let mut rho = if config.random_initial_step {
        rng.open_unit()
    } else {
        1.0
    };
    // Expansion while the step is acceptable but the slope is still steep.
    let mut w1_failed = false;
    while evaluations < config.max_line_search_steps {
        let (f, slope) = seg.eval(rho)?;
        evaluations += 1;
        if !seg.w1(rho, f, slope, tau1) {
            w1_failed = true;
            break;
        }
        note(rho, f, &mut best);
        if slope >= tau2 * slope0 || rho >= 1.0 {
            return Ok(LineSearch {
                step: rho,
                f_value: f,
                satisfied: true,
                evaluations,
            });
        }
        rho = (rho * config.expansion).min(1.0);
    }
    // Contraction on (l, r) with random trial points.
    if w1_failed {
        let (mut l, mut r) = (0.0, rho);
        while evaluations < config.max_line_search_steps {
            rho = l + (r - l) * rng.open_unit();
            let (f, slope) = seg.eval(rho)?;
            evaluations += 1;
            if !seg.w1(rho, f, slope, tau1) {
                r = rho;
            } else if slope < tau2 * slope0 {
                note(rho, f, &mut best);
                l = rho;
            } else {
                return Ok(LineSearch {
                    step: rho,
                    f_value: f,
                    satisfied: true,
                    evaluations,
                });
            }
        }
    }
    Ok(match best {
        Some((step, f_value)) => LineSearch {
            step,
            f_value,
            satisfied: false,
            evaluations,
        },
        None => LineSearch {
            step: 0.0,
            f_value: f0,
            satisfied: false,
            evaluations,
        },
    })
}

/// Zeroes components that would leave the box from a face, then returns the
/// largest `ρ_max = shrinkᵏ ≤ 1` keeping `q + ρ_max d` inside it.
fn project(q: &[f64], d: &mut [f64], shrink: f64) -> f64 {
    let (lo, hi) = (BOX_EPS, 1.0 - BOX_EPS);
    for (&qi, di) in q.iter().zip(d.iter_mut()) {
        if (qi <= lo && *di < 0.0) || (qi >= hi && *di > 0.0) {
            *di = 0.0;
        }
    }
    let inside = |rho: f64| {
        q.iter()
            .zip(d.iter())
            .all(|(&qi, &di)| (lo..=hi).contains(&(qi + rho * di)))
    };
    let mut rho = 1.0;
    let mut shrinks = 0;
    while !inside(rho) && shrinks < MAX_SHRINKS {
        rho *= shrink;
        shrinks += 1;
    }
    rho
}

/// BETHE-MIN from `q0`, with line-search randomness drawn from a generator
/// seeded with 0. See [`bethe_min_with_rng`].
pub fn bethe_min(
    model: &Model,
    q0: &BethePoint,
    config: &OptimizerConfig,
) -> Result<MinimizationResult> {
    bethe_min_with_rng(model, q0, config, &mut SeededRng::new(0))
}

pub fn bethe_min_with_rng(
    model: &Model,
    q0: &BethePoint,
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<MinimizationResult> {
    config.validate()?;
    let n = model.node_count();
    if q0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q0.len(),
        });
    }
    let mut q = q0.as_slice().to_vec();
    let mut g = vec![0.0; n];
    let mut f = bethe::evaluate(model, &q, Some(&mut g))?;
    let mut b = match config.initial_metric {
        InitialMetric::Identity => Matrix::identity(n),
        InitialMetric::RandomSpd => random_spd(n, rng),
    };
    let mut trace = config.record_trace.then(Vec::new);
    let (mut curvature_skips, mut fallbacks) = (0, 0);
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < config.max_iterations {
        if math::norm2(&g) <= config.epsilon {
            termination = Termination::Converged;
            break;
        }
        let mut d = b.transpose_mul_vec(&g);
        d.iter_mut().for_each(|v| *v = -*v);
        if !(math::dot(&d, &g) < 0.0) {
            b = Matrix::identity(n);
            d = g.iter().map(|v| -v).collect();
        }
        let mut fallback = false;
        let mut outcome = try_direction(model, &q, d, f, &g, config, rng)?;
        if !outcome.as_ref().is_some_and(|(ls, _)| ls.step > 0.0) {
            // Quasi-Newton step failed; retry along the steepest descent.
            fallback = true;
            fallbacks += 1;
            b = Matrix::identity(n);
            let sd: Vec<f64> = g.iter().map(|v| -v).collect();
            outcome = try_direction(model, &q, sd, f, &g, config, rng)?;
        }
        let Some((ls, dir)) = outcome.filter(|(ls, _)| ls.step > 0.0) else {
            termination = Termination::Stalled;
            break;
        };

        let q_new: Vec<f64> = q
            .iter()
            .zip(&dir)
            .map(|(qi, di)| bethe::clamp(qi + ls.step * di))
            .collect();
        let mut g_new = vec![0.0; n];
        let f_new = bethe::evaluate(model, &q_new, Some(&mut g_new))?;
        let s: Vec<f64> = q_new.iter().zip(&q).map(|(a, c)| a - c).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, c)| a - c).collect();
        let skipped = !bfgs_update(&mut b, &s, &y);
        curvature_skips += usize::from(skipped);
        q = q_new;
        g = g_new;
        f = f_new;
        iterations += 1;
        if let Some(t) = trace.as_mut() {
            t.push(TraceRow {
                iteration: iterations,
                f_value: f,
                grad_norm: math::norm2(&g),
                step: math::norm2(&s),
                curvature_skip: skipped,
                fallback,
            });
        }
    }
    if termination == Termination::MaxIterations && math::norm2(&g) <= config.epsilon {
        termination = Termination::Converged;
    }
    let grad_norm = math::norm2(&g);
    Ok(MinimizationResult {
        q_star: BethePoint::new(q)?,
        f_value: f,
        grad_norm,
        iterations,
        converged: termination == Termination::Converged,
        termination,
        curvature_skips,
        fallbacks,
        trace,
    })
}

/// Projects `d`, then line-searches the feasible segment. `None` when the
/// projected direction is not a descent direction.
fn try_direction(
    model: &Model,
    q: &[f64],
    mut d: Vec<f64>,
    f: f64,
    g: &[f64],
    config: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<Option<(LineSearch, Vec<f64>)>> {
    let rho_max = project(q, &mut d, config.projection_shrink);
    d.iter_mut().for_each(|v| *v *= rho_max);
    if !(math::dot(&d, g) < 0.0) {
        return Ok(None);
    }
    let ls = line_search(model, q, d.clone(), f, g, config, rng)?;
    Ok(Some((ls, d)))
}

/// Inverse-Hessian BFGS update
/// `B ← B + ((γ + yᵀBy)/γ²) ssᵀ − (Bysᵀ + syᵀB)/γ` with `γ = sᵀy`.
/// Returns `false` (and leaves `B` unchanged) when `γ ≤ 1e−12 ‖s‖‖y‖`.
fn bfgs_update(b: &mut Matrix, s: &[f64], y: &[f64]) -> bool {
    let gamma = math::dot(s, y);
    if !(gamma > 1e-12 * math::norm2(s) * math::norm2(y)) {
        return false;
    }
    let by = b.mul_vec(y);
    let c = (gamma + math::dot(y, &by)) / (gamma * gamma);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            b.add(
                i,
                j,
                c * s[i] * s[j] - (by[i] * s[j] + s[i] * by[j]) / gamma,
            );
        }
    }
    true
}

fn random_spd(n: usize, rng: &mut SeededRng) -> Matrix {
    let q = Matrix::random_orthogonal(n, rng);
    let mut lam = Matrix::zeros(n);
    for i in 0..n {
        lam.set(i, i, rng.uniform(0.1, 1.0));
    }
    q.transpose().mul(&lam).mul(&q)
}

/// A group of converged restarts whose minimizers agree within the cluster
/// tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Run index of the lowest-`F_B` member.
    pub representative: usize,
    pub members: Vec<usize>,
    pub f_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub runs: Vec<MinimizationResult>,
    /// Sorted by ascending `F_B`.
    pub clusters: Vec<Cluster>,
    /// Lowest-`F_B` converged run, or lowest overall if none converged.
    pub best: usize,
}

impl RestartSummary {
    /// Groups converged runs greedily, in order of increasing `F_B`: a run
    /// joins the first cluster whose representative is within `tol` in L∞.
    pub fn from_runs(runs: Vec<MinimizationResult>, tol: f64) -> Self {
        let mut order: Vec<usize> = (0..runs.len()).filter(|&k| runs[k].converged).collect();
        order.sort_by(|&a, &b| runs[a].f_value.total_cmp(&runs[b].f_value).then(a.cmp(&b)));
        let mut clusters: Vec<Cluster> = Vec::new();
        for &k in &order {
            let q = runs[k].q_star.as_slice();
            let home = clusters.iter_mut().find(|c| {
                let r = runs[c.representative].q_star.as_slice();
                q.iter().zip(r).all(|(a, b)| math::abs(a - b) <= tol)
            });
            match home {
                Some(c) => c.members.push(k),
                None => clusters.push(Cluster {
                    representative: k,
                    members: vec![k],
                    f_value: runs[k].f_value,
                }),
            }
        }
        let best = order.first().copied().unwrap_or_else(|| {
            (0..runs.len())
                .min_by(|&a, &b| runs[a].f_value.total_cmp(&runs[b].f_value))
                .unwrap_or(0)
        });
        Self {
            runs,
            clusters,
            best,
        }
    }

    pub fn best_run(&self) -> &MinimizationResult {
        &self.runs[self.best]
    }

    pub fn distinct_minima(&self) -> usize {
        self.clusters.len()
    }

    pub fn converged_count(&self) -> usize {
        self.runs.iter().filter(|r| r.converged).count()
    }
}

/// Uniform random start strictly inside the box.
pub fn random_start(n: usize, rng: &mut SeededRng) -> BethePoint {
    let q = (0..n).map(|_| rng.open_unit()).collect();
    BethePoint::new(q).expect("uniform draws are finite")
}

/// `restarts` independent runs; run `r` draws its start and its line-search
/// randomness from stream `r` of `seed`.
pub fn multi_restart_minimize(
    model: &Model,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<RestartSummary> {
    multi_restart_minimize_with(model, restarts, seed, config, DEFAULT_CLUSTER_TOL)
}

pub fn multi_restart_minimize_with(
    model: &Model,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
    cluster_tol: f64,
) -> Result<RestartSummary> {
    if restarts == 0 {
        return Err(Error::InvalidConfig(
            "at least one restart is required".into(),
        ));
    }
    let runs = (0..restarts)
        .map(|r| {
            let mut rng = SeededRng::with_stream(seed, r as u64);
            let q0 = random_start(model.node_count(), &mut rng);
            bethe_min_with_rng(model, &q0, config, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RestartSummary::from_runs(runs, cluster_tol))
}
