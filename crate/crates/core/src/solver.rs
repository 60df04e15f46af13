//! Deterministic nonlinear solver for the condensed control problem.
//!
//! Inequality constraints are folded into an augmented Lagrangian, which
//! tolerates infeasible starting points (the controller regularly begins a
//! solve inside the tightened constraint set after a disturbance); the
//! resulting box-constrained smooth subproblems are minimized by projected
//! L-BFGS with an Armijo backtracking line search over the projection arc.
//! No randomness anywhere: identical inputs produce identical iterates.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::PlanarPose;
use crate::ocp::{total_cost_with_gradient, OcpSpec};
use crate::overlap::{kappa_star, PoseRole};

/// Tuning knobs of the augmented Lagrangian / projected L-BFGS solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Outer (multiplier update) iterations.
    pub max_outer: usize,
    /// Inner (L-BFGS) iterations per outer iteration.
    pub max_inner: usize,
    /// Initial penalty parameter.
    pub penalty_init: f64,
    /// Penalty growth factor applied when the violation fails to halve.
    pub penalty_growth: f64,
    /// Max constraint violation for the `optimal` status.
    pub constraint_tol: f64,
    /// Projected-gradient infinity norm for inner convergence.
    pub gradient_tol: f64,
    /// Max constraint violation for the `acceptable` status.
    pub acceptable_violation: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Backtracking shrink factor.
    pub backtrack_shrink: f64,
    /// Line search trials per inner iteration.
    pub max_line_search: usize,
    /// Number of curvature pairs kept by L-BFGS.
    pub lbfgs_memory: usize,
    /// Wall-clock budget in seconds; `None` means 90% of the sampling time.
    pub time_budget: Option<f64>,
    /// Replace the analytic gradient with central finite differences; slow,
    /// for debugging gradient plumbing only.
    pub fd_gradient: bool,
    /// Collect a per-iteration trace in the report.
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_outer: 8,
            max_inner: 60,
            penalty_init: 10.0,
            penalty_growth: 5.0,
            constraint_tol: 1e-4,
            gradient_tol: 1e-6,
            acceptable_violation: 1e-3,
            armijo_c: 1e-4,
            backtrack_shrink: 0.5,
            max_line_search: 30,
            lbfgs_memory: 10,
            time_budget: None,
            fd_gradient: false,
            trace: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("penalty_init", self.penalty_init),
            ("constraint_tol", self.constraint_tol),
            ("gradient_tol", self.gradient_tol),
            ("acceptable_violation", self.acceptable_violation),
            ("armijo_c", self.armijo_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.penalty_growth > 1.0 && self.penalty_growth.is_finite()) {
            return Err(Error::InvalidArgument("penalty_growth must exceed 1".into()));
        }
        if !(self.backtrack_shrink > 0.0 && self.backtrack_shrink < 1.0) {
            return Err(Error::InvalidArgument("backtrack_shrink must lie in (0, 1)".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.max_line_search == 0 {
            return Err(Error::InvalidArgument("iteration limits must be at least 1".into()));
        }
        if self.lbfgs_memory == 0 {
            return Err(Error::InvalidArgument("lbfgs_memory must be at least 1".into()));
        }
        if let Some(b) = self.time_budget {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument("time_budget must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Violation within `constraint_tol` and stationary within `gradient_tol`.
    Optimal,
    /// Violation within `acceptable_violation`.
    Acceptable,
    /// Iteration or time budget exhausted before reaching `acceptable`.
    MaxIterations,
    /// The fixed initial state violated the constraints but the returned
    /// plan is feasible within `acceptable_violation` from the first step on.
    InfeasibleStartRecovered,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Acceptable => "acceptable",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::InfeasibleStartRecovered => "infeasible-start-recovered",
        };
        f.write_str(s)
    }
}

/// One line of the optional per-iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub outer: usize,
    pub inner: usize,
    /// True objective (not the augmented value) at the iterate.
    pub cost: f64,
    /// Max constraint violation at the iterate.
    pub violation: f64,
    /// Norm of the accepted step.
    pub step_len: f64,
}

/// Result of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Stacked input plan, inside the input box.
    pub z: Vec<f64>,
    pub status: SolveStatus,
    /// Objective at `z`.
    pub objective: f64,
    /// Max violation of the step constraints (`k >= 1`) at `z`.
    pub max_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Wall-clock seconds spent in the solve.
    pub wall_time: f64,
    /// Per-iteration trace; empty unless `SolverSettings::trace` is set.
    pub trace: Vec<TraceRow>,
}

/// Scalar penalty `psi(g) = (rho/2) max(0, g + mu/rho)^2 - mu^2/(2 rho)`.
///
/// Smoothly interpolates between the linear multiplier term `mu g + rho g^2/2`
/// when active and a constant when far inside the feasible region, so the
/// augmented value stays continuously differentiable in `g`.
fn penalty(g: f64, mu: f64, rho: f64) -> f64 {
    let t = g + mu / rho;
    if t > 0.0 {
        0.5 * rho * t * t - mu * mu / (2.0 * rho)
    } else {
        -mu * mu / (2.0 * rho)
    }
}

/// Derivative of [`penalty`] with respect to `g`: `max(0, mu + rho g)`.
fn penalty_slope(g: f64, mu: f64, rho: f64) -> f64 {
    (mu + rho * g).max(0.0)
}

/// Everything one augmented Lagrangian evaluation produces.
struct AlPoint {
    value: f64,
    grad: DVector<f64>,
    cost: f64,
    violation: f64,
}

/// Augmented Lagrangian value and gradient at `z`.
///
/// Constraints are the step constraints `k = 1..=H` (the `k = 0` row is a
/// constant of the problem and belongs to the caller's feasibility
/// assessment, not the solve); `multipliers` is indexed by
/// `(k - 1) * n_obstacles + i`. The gradient is accumulated by one reverse
/// sweep, injecting each constraint's pose gradient at its step.
pub fn augmented_lagrangian_value(
    spec: &OcpSpec,
    x0: &PlanarPose,
    z: &[f64],
    multipliers: &[f64],
    rho: f64,
) -> Result<(f64, DVector<f64>)> {
    let p = al_eval(spec, x0, z, multipliers, rho)?;
    Ok((p.value, p.grad))
}

/// Evaluation point with the gradient replaced by central differences of the
/// value; exercises the same code path the analytic gradient must match.
fn al_eval_fd(
    spec: &OcpSpec,
    x0: &PlanarPose,
    z: &[f64],
    multipliers: &[f64],
    rho: f64,
) -> Result<AlPoint> {
    let base = al_eval(spec, x0, z, multipliers, rho)?;
    let mut grad = DVector::zeros(z.len());
    let mut zp = z.to_vec();
    for j in 0..z.len() {
        let h = 1e-6 * z[j].abs().max(1.0);
        zp[j] = z[j] + h;
        let fp = al_eval(spec, x0, &zp, multipliers, rho)?.value;
        zp[j] = z[j] - h;
        let fm = al_eval(spec, x0, &zp, multipliers, rho)?.value;
        zp[j] = z[j];
        grad[j] = (fp - fm) / (2.0 * h);
    }
    Ok(AlPoint { grad, ..base })
}

fn al_eval(
    spec: &OcpSpec,
    x0: &PlanarPose,
    z: &[f64],
    multipliers: &[f64],
    rho: f64,
) -> Result<AlPoint> {
    let nu = spec.n_inputs();
    let nobs = spec.obstacles.len();
    if z.len() != spec.n_vars() {
        return Err(Error::DimensionMismatch { expected: spec.n_vars(), got: z.len() });
    }
    if multipliers.len() != spec.horizon * nobs {
        return Err(Error::DimensionMismatch {
            expected: spec.horizon * nobs,
            got: multipliers.len(),
        });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("penalty must be positive, got {rho}")));
    }

    // Forward: rollout, stage costs/gradients, constraint terms.
    let mut xs = Vec::with_capacity(spec.horizon + 1);
    let mut jacs = Vec::with_capacity(spec.horizon);
    xs.push(*x0);
    for k in 0..spec.horizon {
        let u = &z[k * nu..(k + 1) * nu];
        let x = *xs.last().unwrap();
        jacs.push(spec.model.step_jacobian(&x, u));
        xs.push(spec.model.step_slice(&x, u));
    }

    let (cost, cost_grad) = total_cost_with_gradient(spec, x0, z)?;

    let mut value = cost;
    let mut violation = 0.0f64;
    // Weighted constraint gradients to inject per step during the sweep.
    let mut injected: Vec<Vector3<f64>> = vec![Vector3::zeros(); spec.horizon + 1];
    for k in 1..=spec.horizon {
        if nobs == 0 {
            break;
        }
        let footprint = spec.constraint_footprint(&xs[k]);
        for (i, obs) in spec.obstacles.iter().enumerate() {
            let r = kappa_star(&footprint, obs, Some(PoseRole::First))?;
            let g = r.kappa_star + spec.constraint_margin;
            let mu = multipliers[(k - 1) * nobs + i];
            value += penalty(g, mu, rho);
            violation = violation.max(g.max(0.0));
            let w = penalty_slope(g, mu, rho);
            if w != 0.0 {
                injected[k] += r.gradient.expect("gradient requested") * w;
            }
        }
    }
    if !value.is_finite() {
        return Err(Error::Numerical("augmented objective is not finite".into()));
    }

    // Reverse sweep for the penalty part; the cost part is already in
    // cost_grad.
    let mut grad = cost_grad;
    let mut lambda = injected[spec.horizon];
    for k in (0..spec.horizon).rev() {
        let (a, b) = &jacs[k];
        let bt = b.transpose() * lambda;
        for i in 0..nu {
            grad[k * nu + i] += bt[i];
        }
        lambda = a.transpose() * lambda + injected[k];
    }

    Ok(AlPoint { value, grad, cost, violation })
}

/// Max violation of the step constraints (`k >= 1`) at `z`, plus the
/// violation of the constant `k = 0` row.
fn measure_violations(spec: &OcpSpec, x0: &PlanarPose, z: &[f64]) -> Result<(f64, f64)> {
    let nu = spec.n_inputs();
    let mut x = *x0;
    let mut initial = 0.0f64;
    for obs in &spec.obstacles {
        let r = kappa_star(&spec.constraint_footprint(&x), obs, None)?;
        initial = initial.max(r.kappa_star + spec.constraint_margin);
    }
    let mut worst = 0.0f64;
    for k in 0..spec.horizon {
        x = spec.model.step_slice(&x, &z[k * nu..(k + 1) * nu]);
        for obs in &spec.obstacles {
            let r = kappa_star(&spec.constraint_footprint(&x), obs, None)?;
            worst = worst.max(r.kappa_star + spec.constraint_margin);
        }
    }
    Ok((worst, initial))
}

/// Projects `z` into the per-block input box.
fn project(spec: &OcpSpec, z: &mut [f64]) {
    let nu = spec.n_inputs();
    let lo = spec.model.input_lower();
    let hi = spec.model.input_upper();
    for (j, v) in z.iter_mut().enumerate() {
        *v = v.clamp(lo[j % nu], hi[j % nu]);
    }
}

/// Two-loop L-BFGS recursion returning the quasi-Newton direction `-H g`.
fn lbfgs_direction(
    memory: &VecDeque<(DVector<f64>, DVector<f64>)>,
    g: &DVector<f64>,
) -> DVector<f64> {
    if memory.is_empty() {
        return -g.clone();
    }
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let rho_i = 1.0 / s.dot(y);
        let alpha = rho_i * s.dot(&q);
        q -= y * alpha;
        alphas.push(alpha);
    }
    let (s_last, y_last) = memory.back().unwrap();
    let gamma = s_last.dot(y_last) / y_last.dot(y_last);
    q *= gamma;
    for ((s, y), alpha) in memory.iter().zip(alphas.iter().rev()) {
        let rho_i = 1.0 / s.dot(y);
        let beta = rho_i * y.dot(&q);
        q += s * (alpha - beta);
    }
    -q
}

/// Solves the condensed problem from `x0`, optionally warm-started.
///
/// Runs up to `max_outer` multiplier updates around projected L-BFGS inner
/// loops, growing the penalty when the violation fails to halve, and stops
/// early once the wall-clock budget (defaulting to 90% of the sampling time)
/// is spent, returning the best iterate found so far.
pub fn solve(
    spec: &OcpSpec,
    x0: &PlanarPose,
    warm_start: Option<&[f64]>,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    let start = Instant::now();
    spec.validate()?;
    settings.validate()?;
    let nvars = spec.n_vars();
    let nobs = spec.obstacles.len();
    let budget = settings.time_budget.unwrap_or(0.9 * spec.dt());

    let mut z: Vec<f64> = match warm_start {
        None => vec![0.0; nvars],
        Some(w) => {
            if w.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: w.len() });
            }
            w.to_vec()
        }
    };
    project(spec, &mut z);

    let (_, initial_row) = measure_violations(spec, x0, &z)?;
    let infeasible_start = initial_row > 0.0;

    let mut mu = vec![0.0f64; spec.horizon * nobs];
    let mut rho = settings.penalty_init;
    let mut trace = Vec::new();
    let mut inner_total = 0usize;
    let mut outer_done = 0usize;
    let mut pg_norm = f64::INFINITY;
    let mut prev_violation = f64::INFINITY;
    let mut out_of_time = false;

    let eval = if settings.fd_gradient { al_eval_fd } else { al_eval };

    'outer: for outer in 0..settings.max_outer {
        outer_done = outer + 1;
        let mut point = eval(spec, x0, &z, &mu, rho)?;
        let mut memory: VecDeque<(DVector<f64>, DVector<f64>)> = VecDeque::new();

        for inner in 0..settings.max_inner {
            if start.elapsed().as_secs_f64() > budget {
                out_of_time = true;
                break 'outer;
            }
            // Projected-gradient stationarity measure.
            let mut pg = 0.0f64;
            {
                let lo = spec.model.input_lower();
                let hi = spec.model.input_upper();
                let nu = spec.n_inputs();
                for j in 0..nvars {
                    let stepped = (z[j] - point.grad[j]).clamp(lo[j % nu], hi[j % nu]);
                    pg = pg.max((z[j] - stepped).abs());
                }
            }
            pg_norm = pg;
            if pg <= settings.gradient_tol {
                break;
            }

            let mut d = lbfgs_direction(&memory, &point.grad);
            if d.dot(&point.grad) >= 0.0 {
                // Curvature information went stale; fall back to steepest
                // descent.
                memory.clear();
                d = -point.grad.clone();
            }

            let mut accepted = false;
            let mut tried_steepest = false;
            'search: loop {
                let mut t = 1.0f64;
                for _ in 0..settings.max_line_search {
                    let mut z_trial = z.clone();
                    for j in 0..nvars {
                        z_trial[j] += t * d[j];
                    }
                    project(spec, &mut z_trial);
                    let mut directional = 0.0;
                    let mut step_sq = 0.0;
                    for j in 0..nvars {
                        let dz = z_trial[j] - z[j];
                        directional += point.grad[j] * dz;
                        step_sq += dz * dz;
                    }
                    if step_sq == 0.0 {
                        break;
                    }
                    if directional >= 0.0 {
                        // Projection bent the step away from descent; try a
                        // shorter one.
                        t *= settings.backtrack_shrink;
                        continue;
                    }
                    let trial = eval(spec, x0, &z_trial, &mu, rho)?;
                    if trial.value <= point.value + settings.armijo_c * directional {
                        let mut s = DVector::zeros(nvars);
                        for j in 0..nvars {
                            s[j] = z_trial[j] - z[j];
                        }
                        let y = &trial.grad - &point.grad;
                        let sy = s.dot(&y);
                        if sy > 1e-10 * s.norm() * y.norm() {
                            memory.push_back((s, y));
                            if memory.len() > settings.lbfgs_memory {
                                memory.pop_front();
                            }
                        }
                        z = z_trial;
                        point = trial;
                        inner_total += 1;
                        if settings.trace {
                            trace.push(TraceRow {
                                outer,
                                inner,
                                cost: point.cost,
                                violation: point.violation,
                                step_len: step_sq.sqrt(),
                            });
                        }
                        accepted = true;
                        break 'search;
                    }
                    t *= settings.backtrack_shrink;
                }
                if tried_steepest {
                    break;
                }
                // Quasi-Newton step failed every backtrack; retry once along
                // the raw gradient before giving up on this outer iteration.
                memory.clear();
                d = -point.grad.clone();
                tried_steepest = true;
            }
            if !accepted {
                break;
            }
        }

        // Multiplier update from the converged (or stalled) inner point.
        let (violation, _) = measure_violations(spec, x0, &z)?;
        if nobs > 0 {
            let nu = spec.n_inputs();
            let mut x = *x0;
            for k in 0..spec.horizon {
                x = spec.model.step_slice(&x, &z[k * nu..(k + 1) * nu]);
                let footprint = spec.constraint_footprint(&x);
                for (i, obs) in spec.obstacles.iter().enumerate() {
                    let g = kappa_star(&footprint, obs, None)?.kappa_star + spec.constraint_margin;
                    let m = &mut mu[k * nobs + i];
                    *m = (*m + rho * g).max(0.0);
                }
            }
        }

        if violation <= settings.constraint_tol && pg_norm <= settings.gradient_tol {
            break;
        }
        if violation > 0.5 * prev_violation {
            rho *= settings.penalty_growth;
        }
        prev_violation = violation;
        if start.elapsed().as_secs_f64() > budget {
            out_of_time = true;
            break;
        }
    }

    let (max_violation, _) = measure_violations(spec, x0, &z)?;
    let objective = crate::ocp::total_cost(spec, x0, &z)?;
    let converged = max_violation <= settings.constraint_tol && pg_norm <= settings.gradient_tol;
    let status = if infeasible_start {
        if max_violation <= settings.acceptable_violation {
            SolveStatus::InfeasibleStartRecovered
        } else {
            SolveStatus::MaxIterations
        }
    } else if converged && !out_of_time {
        SolveStatus::Optimal
    } else if max_violation <= settings.acceptable_violation {
        SolveStatus::Acceptable
    } else {
        SolveStatus::MaxIterations
    };

    Ok(SolveReport {
        z,
        status,
        objective,
        max_violation,
        outer_iterations: outer_done,
        inner_iterations: inner_total,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
    })
}
