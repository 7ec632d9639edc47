//! Seeded derivative-free optimization driver (Nelder–Mead simplex).
//!
//! The variational loop only ever sees a scalar cost callback, so the driver
//! is independent of the quantum machinery. Runs are deterministic for a
//! fixed seed and starting point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stopping rules and reproducibility knobs for [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    /// Simplex iterations (not cost evaluations).
    pub max_iterations: usize,
    pub absolute_tolerance: f64,
    pub relative_tolerance: f64,
    pub seed: u64,
    /// Scale of the initial simplex around the starting point; doubles as the
    /// warm-start perturbation scale.
    pub initial_spread: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 220,
            absolute_tolerance: 5e-14,
            relative_tolerance: 5e-10,
            seed: 0,
            initial_spread: 1e-2,
        }
    }
}

/// One point of the best-so-far cost trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_cost: f64,
}

/// Outcome of an optimization run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizeResult {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// True when a tolerance triggered the stop (false: iteration cap).
    pub converged: bool,
    /// Monotone best-so-far trace, one point per iteration.
    pub trace: Vec<TracePoint>,
}

/// Minimizes `cost` from `start` with a seeded Nelder–Mead simplex.
///
/// Non-finite costs are treated as very large, so callers may map hard
/// failures (e.g. vanishing stiffness) to infinity.
pub fn optimize<F>(mut cost: F, start: &[f64], cfg: &OptimizerConfig) -> OptimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = cost(x);
        if v.is_finite() {
            v
        } else {
            f64::MAX / 4.0
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // simplex: start plus one spread-perturbed vertex per coordinate, with a
    // small random component so degenerate landscapes still move
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), f0));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += cfg.initial_spread * (1.0 + 0.1 * (rng.gen::<f64>() - 0.5));
        let f = eval(&x, &mut evals);
        simplex.push((x, f));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..cfg.max_iterations {
        iterations = iter + 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        best = best.min(simplex[0].1);
        trace.push(TracePoint { iteration: iter, evaluations: evals, best_cost: best });

        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() <= cfg.absolute_tolerance
            || spread.abs() <= cfg.relative_tolerance * (simplex[0].1.abs() + f64::EPSILON)
        {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let second_worst = simplex[dim - 1].1;

        let blend = |a: f64, b: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| a * c + b * w)
                .collect()
        };

        let reflected = blend(1.0 + alpha, -alpha);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = blend(1.0 + alpha * gamma, -alpha * gamma);
            let fe = eval(&expanded, &mut evals);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let contracted = if fr < worst.1 {
            blend(1.0 + alpha * rho, -alpha * rho)
        } else {
            blend(1.0 - rho, rho)
        };
        let fc = eval(&contracted, &mut evals);
        if fc < worst.1.min(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        // shrink toward the best vertex
        let best_x = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best_x
                .iter()
                .zip(&v.0)
                .map(|(b, w)| b + sigma * (w - b))
                .collect();
            let f = eval(&x, &mut evals);
            *v = (x, f);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    best = best.min(simplex[0].1);
    trace.push(TracePoint { iteration: iterations, evaluations: evals, best_cost: best });

    OptimizeResult {
        theta: simplex[0].0.clone(),
        cost: simplex[0].1,
        evaluations: evals,
        iterations,
        converged,
        trace,
    }
}

/// Minimizes `cost` with simplex restarts: whenever the simplex collapses
/// before the iteration budget is spent, it is rebuilt around the best point
/// with a decayed spread. Same stopping budget and determinism guarantees as
/// [`optimize`]; much more robust in higher-dimensional landscapes.
pub fn optimize_restarting<F>(mut cost: F, start: &[f64], cfg: &OptimizerConfig) -> OptimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut remaining = cfg.max_iterations;
    let mut theta = start.to_vec();
    let mut round = 0u32;
    let mut total = OptimizeResult {
        theta: start.to_vec(),
        cost: f64::INFINITY,
        evaluations: 0,
        iterations: 0,
        converged: false,
        trace: Vec::new(),
    };
    let mut spread = cfg.initial_spread;
    while remaining > 0 {
        let sub_cfg = OptimizerConfig {
            max_iterations: remaining,
            seed: cfg.seed.wrapping_add(round as u64),
            initial_spread: spread,
            ..*cfg
        };
        let res = optimize(&mut cost, &theta, &sub_cfg);
        // decay the simplex only when a round stalls; a productive round
        // keeps its scale so progress is not throttled prematurely
        if res.cost >= total.cost - 1e-12 * total.cost.abs().max(1.0) {
            spread = (spread * 0.5).max(1e-4);
        }
        let offset_iter = total.iterations;
        let offset_eval = total.evaluations;
        for p in &res.trace {
            total.trace.push(TracePoint {
                iteration: offset_iter + p.iteration,
                evaluations: offset_eval + p.evaluations,
                best_cost: p.best_cost.min(total.cost),
            });
        }
        total.iterations += res.iterations;
        total.evaluations += res.evaluations;
        total.converged = res.converged;
        if res.cost < total.cost {
            total.cost = res.cost;
            total.theta = res.theta;
        }
        theta = total.theta.clone();
        remaining = remaining.saturating_sub(res.iterations.max(1));
        round += 1;
    }
    total
}

/// Warm-start perturbation: the reference vector plus seeded noise of the
/// configured spread.
pub fn perturb_reference(theta0: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    theta0
        .iter()
        .map(|t| t + cfg.initial_spread * (rng.gen::<f64>() - 0.5))
        .collect()
}
