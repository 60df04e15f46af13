//! Condensed finite-horizon optimal control problems.
//!
//! The decision vector stacks the `H` input blocks; states are eliminated by
//! rolling the kinematics forward from the measured initial pose, so the
//! problem has `H * n_inputs` variables, box bounds from the input limits,
//! and one inequality per horizon step and obstacle keeping the overlap
//! measure of the inflated footprint at or below `-constraint_margin`.
//! The terminal state enters the objective through one extra stage cost
//! evaluated at zero input.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PlanarPose};
use crate::kinematics::{KinematicFamily, RobotModel};
use crate::overlap::{kappa_star, PoseRole};

/// Stage cost family; the terminal term reuses the stage cost at zero input.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `x^T diag(q) x + u^T diag(r) u` for omnidirectional robots.
    Quadratic { state_weights: [f64; 3], input_weights: [f64; 3] },
    /// `q1 x1^4 + q2 x2^2 + q3 th^4 + r1 v^4 + r2 w^4` for differential
    /// drives; the mixed exponents reward lateral alignment early and keep
    /// the quartic terms from dominating far from the goal.
    MixedExponent { state_weights: [f64; 3], input_weights: [f64; 2] },
}

impl CostSpec {
    /// Default omnidirectional weights.
    pub fn quadratic_default() -> Self {
        CostSpec::Quadratic { state_weights: [1.0, 1.0, 0.1], input_weights: [0.1, 0.1, 0.01] }
    }

    /// Default differential-drive weights.
    pub fn mixed_exponent_default() -> Self {
        CostSpec::MixedExponent { state_weights: [1.0, 1.0, 0.01], input_weights: [0.01, 0.01] }
    }

    /// Default cost for a kinematic family.
    pub fn default_for(family: KinematicFamily) -> Self {
        match family {
            KinematicFamily::Omnidirectional => Self::quadratic_default(),
            KinematicFamily::DifferentialDrive => Self::mixed_exponent_default(),
        }
    }

    fn validate(&self, family: KinematicFamily) -> Result<()> {
        let (ok_family, weights): (bool, Vec<f64>) = match self {
            CostSpec::Quadratic { state_weights, input_weights } => (
                family == KinematicFamily::Omnidirectional,
                state_weights.iter().chain(input_weights).copied().collect(),
            ),
            CostSpec::MixedExponent { state_weights, input_weights } => (
                family == KinematicFamily::DifferentialDrive,
                state_weights.iter().chain(input_weights).copied().collect(),
            ),
        };
        if !ok_family {
            return Err(Error::InvalidArgument(
                "cost family does not match the kinematic family".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidArgument("cost weights must be positive and finite".into()));
        }
        Ok(())
    }

    /// Stage cost `l(x, u)`; pass an all-zero `u` for the terminal term.
    fn stage(&self, x: &PlanarPose, u: &[f64]) -> f64 {
        match self {
            CostSpec::Quadratic { state_weights: q, input_weights: r } => {
                q[0] * x.x1 * x.x1
                    + q[1] * x.x2 * x.x2
                    + q[2] * x.theta * x.theta
                    + u.iter().zip(r).map(|(ui, ri)| ri * ui * ui).sum::<f64>()
            }
            CostSpec::MixedExponent { state_weights: q, input_weights: r } => {
                q[0] * x.x1.powi(4)
                    + q[1] * x.x2 * x.x2
                    + q[2] * x.theta.powi(4)
                    + u.iter().zip(r).map(|(ui, ri)| ri * ui.powi(4)).sum::<f64>()
            }
        }
    }

    /// Gradients of the stage cost with respect to state and input.
    fn stage_grad(&self, x: &PlanarPose, u: &[f64]) -> (Vector3<f64>, [f64; 3]) {
        let mut gu = [0.0; 3];
        let gx = match self {
            CostSpec::Quadratic { state_weights: q, input_weights: r } => {
                for (i, ui) in u.iter().enumerate() {
                    gu[i] = 2.0 * r[i] * ui;
                }
                Vector3::new(2.0 * q[0] * x.x1, 2.0 * q[1] * x.x2, 2.0 * q[2] * x.theta)
            }
            CostSpec::MixedExponent { state_weights: q, input_weights: r } => {
                for (i, ui) in u.iter().enumerate() {
                    gu[i] = 4.0 * r[i] * ui.powi(3);
                }
                Vector3::new(
                    4.0 * q[0] * x.x1.powi(3),
                    2.0 * q[1] * x.x2,
                    4.0 * q[2] * x.theta.powi(3),
                )
            }
        };
        (gx, gu)
    }
}

/// A condensed optimal control problem over one horizon.
#[derive(Debug, Clone)]
pub struct OcpSpec {
    pub horizon: usize,
    pub model: RobotModel,
    pub cost: CostSpec,
    pub obstacles: Vec<Ellipsoid>,
    /// Semi-axis growth of the footprint used in constraints; buys back the
    /// slack the solver is allowed to leave and absorbs measurement error.
    pub inflation_margin: f64,
    /// Constraint tightening: the inflated overlap measure must stay at or
    /// below `-constraint_margin`.
    pub constraint_margin: f64,
}

impl OcpSpec {
    pub fn new(
        horizon: usize,
        model: RobotModel,
        cost: CostSpec,
        obstacles: Vec<Ellipsoid>,
        inflation_margin: f64,
        constraint_margin: f64,
    ) -> Result<Self> {
        let spec = Self { horizon, model, cost, obstacles, inflation_margin, constraint_margin };
        spec.validate()?;
        Ok(spec)
    }

    /// Re-checks the cross-field invariants; cheap enough to run per solve.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        self.cost.validate(self.model.family())?;
        if !(self.inflation_margin >= 0.0 && self.inflation_margin.is_finite()) {
            return Err(Error::InvalidArgument("inflation margin must be non-negative".into()));
        }
        if !(self.constraint_margin >= 0.0 && self.constraint_margin.is_finite()) {
            return Err(Error::InvalidArgument("constraint margin must be non-negative".into()));
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            if obs.dim() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "obstacle {i} must be planar, has dimension {}",
                    obs.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.model.n_inputs()
    }

    /// Length of the decision vector.
    pub fn n_vars(&self) -> usize {
        self.horizon * self.n_inputs()
    }

    pub fn dt(&self) -> f64 {
        self.model.dt()
    }

    fn check_z(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n_vars() {
            return Err(Error::DimensionMismatch { expected: self.n_vars(), got: z.len() });
        }
        Ok(())
    }

    /// The footprint used in constraints, at a given pose.
    pub fn constraint_footprint(&self, x: &PlanarPose) -> Ellipsoid {
        self.model
            .inflated_robot_ellipsoid(x, self.inflation_margin)
            .expect("margin validated non-negative")
    }
}

/// States `x(0..=H)` reached by applying the stacked inputs from `x0`.
pub fn rollout(spec: &OcpSpec, x0: &PlanarPose, z: &[f64]) -> Result<Vec<PlanarPose>> {
    spec.check_z(z)?;
    let nu = spec.n_inputs();
    let mut xs = Vec::with_capacity(spec.horizon + 1);
    xs.push(*x0);
    for k in 0..spec.horizon {
        let u = &z[k * nu..(k + 1) * nu];
        let next = spec.model.step_slice(xs.last().unwrap(), u);
        xs.push(next);
    }
    Ok(xs)
}

/// Per-step Jacobians `(A_k, B_k)` of the step map, one pair per stage.
type StepJacobians = Vec<(Matrix3<f64>, Matrix3<f64>)>;

/// Rollout plus per-step Jacobians of the step map.
fn rollout_with_jacobians(
    spec: &OcpSpec,
    x0: &PlanarPose,
    z: &[f64],
) -> (Vec<PlanarPose>, StepJacobians) {
    let nu = spec.n_inputs();
    let mut xs = Vec::with_capacity(spec.horizon + 1);
    let mut jacs = Vec::with_capacity(spec.horizon);
    xs.push(*x0);
    for k in 0..spec.horizon {
        let u = &z[k * nu..(k + 1) * nu];
        let x = xs.last().unwrap();
        jacs.push(spec.model.step_jacobian(x, u));
        xs.push(spec.model.step_slice(x, u));
    }
    (xs, jacs)
}

/// Objective value: stage costs over the horizon plus the terminal stage
/// cost at zero input.
pub fn total_cost(spec: &OcpSpec, x0: &PlanarPose, z: &[f64]) -> Result<f64> {
    spec.check_z(z)?;
    let nu = spec.n_inputs();
    let xs = rollout(spec, x0, z)?;
    let mut cost = 0.0;
    for k in 0..spec.horizon {
        cost += spec.cost.stage(&xs[k], &z[k * nu..(k + 1) * nu]);
    }
    cost += spec.cost.stage(&xs[spec.horizon], &[0.0; 3][..nu]);
    Ok(cost)
}

/// Objective value and its gradient with respect to the stacked inputs,
/// accumulated by one reverse sweep through the rollout.
pub fn total_cost_with_gradient(
    spec: &OcpSpec,
    x0: &PlanarPose,
    z: &[f64],
) -> Result<(f64, DVector<f64>)> {
    spec.check_z(z)?;
    let nu = spec.n_inputs();
    let (xs, jacs) = rollout_with_jacobians(spec, x0, z);
    let mut cost = 0.0;
    for k in 0..spec.horizon {
        cost += spec.cost.stage(&xs[k], &z[k * nu..(k + 1) * nu]);
    }
    cost += spec.cost.stage(&xs[spec.horizon], &[0.0; 3][..nu]);

    let mut grad = DVector::zeros(spec.n_vars());
    // Adjoint of the terminal term.
    let (mut lambda, _) = spec.cost.stage_grad(&xs[spec.horizon], &[0.0; 3][..nu]);
    for k in (0..spec.horizon).rev() {
        let u = &z[k * nu..(k + 1) * nu];
        let (a, b) = &jacs[k];
        let (gx, gu) = spec.cost.stage_grad(&xs[k], u);
        let bt_lambda = b.transpose() * lambda;
        for i in 0..nu {
            grad[k * nu + i] = gu[i] + bt_lambda[i];
        }
        lambda = gx + a.transpose() * lambda;
    }
    Ok((cost, grad))
}

/// Stacked obstacle constraints along a rollout.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    /// `values[(k, i)]` is the overlap measure of the inflated footprint at
    /// `x(k)` against obstacle `i`; feasibility requires
    /// `values[(k, i)] <= -constraint_margin`.
    pub values: DMatrix<f64>,
    /// Row `k * n_obstacles + i` holds `d values[(k, i)] / d z`.
    pub jacobian: DMatrix<f64>,
}

/// Evaluates every per-step, per-obstacle overlap measure and its Jacobian
/// with respect to the stacked inputs.
///
/// State sensitivities `S_k = d x(k) / d z` are propagated forward
/// (`S_{k+1} = A_k S_k + B_k E_k`); each constraint row is the pose gradient
/// of the overlap measure chained through `S_k`. Row `k = 0` is constant in
/// `z` and its Jacobian rows are zero.
pub fn constraint_values(spec: &OcpSpec, x0: &PlanarPose, z: &[f64]) -> Result<ConstraintEval> {
    spec.check_z(z)?;
    let nu = spec.n_inputs();
    let nobs = spec.obstacles.len();
    let nvars = spec.n_vars();
    let rows = (spec.horizon + 1) * nobs;
    let mut values = DMatrix::zeros(spec.horizon + 1, nobs);
    let mut jacobian = DMatrix::zeros(rows, nvars);
    if nobs == 0 {
        return Ok(ConstraintEval { values, jacobian });
    }

    let (xs, jacs) = rollout_with_jacobians(spec, x0, z);
    // S_k = d x(k) / d z, dense 3 x nvars; k = 0 gives S = 0.
    let mut s = DMatrix::<f64>::zeros(3, nvars);
    for k in 0..=spec.horizon {
        if k > 0 {
            let (a, b) = &jacs[k - 1];
            let mut s_next = DMatrix::zeros(3, nvars);
            a.mul_to(&s, &mut s_next);
            for i in 0..3 {
                for j in 0..nu {
                    s_next[(i, (k - 1) * nu + j)] += b[(i, j)];
                }
            }
            s = s_next;
        }
        let footprint = spec.constraint_footprint(&xs[k]);
        for (i, obs) in spec.obstacles.iter().enumerate() {
            let r = kappa_star(&footprint, obs, Some(PoseRole::First))?;
            values[(k, i)] = r.kappa_star;
            if k > 0 {
                let g = r.gradient.expect("gradient requested");
                let row = k * nobs + i;
                for col in 0..nvars {
                    jacobian[(row, col)] =
                        g.x * s[(0, col)] + g.y * s[(1, col)] + g.z * s[(2, col)];
                }
            }
        }
    }
    Ok(ConstraintEval { values, jacobian })
}

/// Receding-horizon warm start: drop the first input block and duplicate the
/// last one.
pub fn shift_warm_start(z: &[f64], model: &RobotModel) -> Result<Vec<f64>> {
    let nu = model.n_inputs();
    if z.len() < nu || !z.len().is_multiple_of(nu) {
        return Err(Error::DimensionMismatch { expected: nu, got: z.len() % nu });
    }
    let mut out = Vec::with_capacity(z.len());
    out.extend_from_slice(&z[nu..]);
    out.extend_from_slice(&z[z.len() - nu..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn omni_model() -> RobotModel {
        RobotModel::omnidirectional((0.35, 0.2), 0.2, FRAC_PI_4, 0.2).unwrap()
    }

    fn diff_model() -> RobotModel {
        RobotModel::differential_drive((0.2, 0.1), 0.2, FRAC_PI_4, 0.2).unwrap()
    }

    fn omni_spec(obstacles: Vec<Ellipsoid>) -> OcpSpec {
        OcpSpec::new(10, omni_model(), CostSpec::quadratic_default(), obstacles, 0.0, 0.0).unwrap()
    }

    fn diff_spec(obstacles: Vec<Ellipsoid>) -> OcpSpec {
        OcpSpec::new(10, diff_model(), CostSpec::mixed_exponent_default(), obstacles, 0.0, 0.0)
            .unwrap()
    }

    fn origin() -> PlanarPose {
        PlanarPose::new(0.0, 0.0, 0.0)
    }

    #[test]
    fn rollout_with_zero_input_stays_put() {
        let spec = omni_spec(vec![]);
        let x0 = PlanarPose::new(0.3, -0.2, 0.5);
        let xs = rollout(&spec, &x0, &vec![0.0; spec.n_vars()]).unwrap();
        assert_eq!(xs.len(), 11);
        for x in &xs {
            assert_eq!(*x, x0);
        }
    }

    #[test]
    fn rollout_with_constant_omni_input_moves_linearly() {
        let spec = omni_spec(vec![]);
        let mut z = vec![0.0; spec.n_vars()];
        for k in 0..10 {
            z[3 * k] = 0.1;
            z[3 * k + 1] = -0.05;
        }
        let xs = rollout(&spec, &origin(), &z).unwrap();
        for (k, x) in xs.iter().enumerate() {
            assert_abs_diff_eq!(x.x1, 0.1 * 0.2 * k as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(x.x2, -0.05 * 0.2 * k as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn rollout_matches_repeated_stepping_for_diff_drive() {
        let spec = diff_spec(vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let z: Vec<f64> = (0..spec.n_vars()).map(|_| rng.random_range(-0.2..0.2)).collect();
        let xs = rollout(&spec, &origin(), &z).unwrap();
        let mut x = origin();
        for k in 0..10 {
            x = spec.model.step_slice(&x, &z[2 * k..2 * k + 2]);
            assert_eq!(xs[k + 1], x);
        }
    }

    #[test]
    fn rollout_rejects_wrong_length() {
        let spec = omni_spec(vec![]);
        assert!(rollout(&spec, &origin(), &[0.0; 7]).is_err());
    }

    #[test]
    fn cost_is_zero_only_at_the_origin_rest() {
        let spec = omni_spec(vec![]);
        assert_eq!(total_cost(&spec, &origin(), &vec![0.0; 30]).unwrap(), 0.0);
        let mut z = vec![0.0; 30];
        z[0] = 0.1;
        assert!(total_cost(&spec, &origin(), &z).unwrap() > 0.0);
        assert!(total_cost(&spec, &PlanarPose::new(0.2, 0.0, 0.0), &vec![0.0; 30]).unwrap() > 0.0);
    }

    #[test]
    fn cost_of_resting_one_meter_away_counts_every_stage() {
        let spec =
            OcpSpec::new(1, omni_model(), CostSpec::quadratic_default(), vec![], 0.0, 0.0).unwrap();
        let cost = total_cost(&spec, &PlanarPose::new(1.0, 0.0, 0.0), &[0.0; 3]).unwrap();
        assert_abs_diff_eq!(cost, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cost_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for spec in [omni_spec(vec![]), diff_spec(vec![])] {
            for _ in 0..10 {
                let x0 = PlanarPose::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let z: Vec<f64> = (0..spec.n_vars()).map(|_| rng.random_range(-0.2..0.2)).collect();
                let (_, grad) = total_cost_with_gradient(&spec, &x0, &z).unwrap();
                let h = 1e-6;
                for j in 0..spec.n_vars() {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[j] += h;
                    zm[j] -= h;
                    let fd = (total_cost(&spec, &x0, &zp).unwrap()
                        - total_cost(&spec, &x0, &zm).unwrap())
                        / (2.0 * h);
                    assert_abs_diff_eq!(grad[j], fd, epsilon = 1e-5 * fd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn constraints_without_obstacles_are_empty() {
        let spec = omni_spec(vec![]);
        let c = constraint_values(&spec, &origin(), &vec![0.0; 30]).unwrap();
        assert_eq!(c.values.ncols(), 0);
        assert_eq!(c.jacobian.nrows(), 0);
    }

    #[test]
    fn constraint_signs_follow_obstacle_placement() {
        let far = Ellipsoid::from_semi_axes(0.2, 0.2, 0.0, (5.0, 5.0)).unwrap();
        let here = Ellipsoid::from_semi_axes(0.2, 0.2, 0.0, (0.0, 0.0)).unwrap();
        let spec = omni_spec(vec![far, here]);
        let c = constraint_values(&spec, &origin(), &vec![0.0; 30]).unwrap();
        for k in 0..=10 {
            assert!(c.values[(k, 0)] < 0.0, "far obstacle should read disjoint");
            assert!(c.values[(k, 1)] > 0.0, "concentric obstacle should read overlapping");
        }
    }

    #[test]
    fn constraint_jacobian_matches_finite_differences() {
        let obstacle = Ellipsoid::from_semi_axes(0.3, 0.2, 0.4, (0.9, 0.25)).unwrap();
        let spec = omni_spec(vec![obstacle]);
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let z: Vec<f64> = (0..spec.n_vars()).map(|_| rng.random_range(-0.15..0.15)).collect();
        let x0 = PlanarPose::new(-0.3, 0.1, 0.2);
        let c = constraint_values(&spec, &x0, &z).unwrap();
        let h = 1e-6;
        for j in 0..spec.n_vars() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let cp = constraint_values(&spec, &x0, &zp).unwrap();
            let cm = constraint_values(&spec, &x0, &zm).unwrap();
            for k in 0..=spec.horizon {
                let fd = (cp.values[(k, 0)] - cm.values[(k, 0)]) / (2.0 * h);
                let an = c.jacobian[(k, j)];
                assert_abs_diff_eq!(an, fd, epsilon = 1e-4 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn perturbing_a_late_block_leaves_early_states_unchanged() {
        let spec = omni_spec(vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let z: Vec<f64> = (0..spec.n_vars()).map(|_| rng.random_range(-0.2..0.2)).collect();
        let x0 = PlanarPose::new(0.1, 0.2, -0.3);
        let base = rollout(&spec, &x0, &z).unwrap();
        let mut zp = z.clone();
        let block = 6;
        zp[block * 3] += 0.05;
        let bumped = rollout(&spec, &x0, &zp).unwrap();
        for k in 0..=block {
            assert_eq!(base[k], bumped[k], "state {k} must not depend on block {block}");
        }
        assert!(base[block + 1] != bumped[block + 1]);
    }

    #[test]
    fn shift_drops_first_block_and_repeats_last() {
        let model = omni_model();
        let z: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let shifted = shift_warm_start(&z, &model).unwrap();
        assert_eq!(shifted, vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 6.0, 7.0, 8.0]);
        assert!(shift_warm_start(&z[..2], &model).is_err());
    }

    #[test]
    fn spec_validation_catches_mismatches() {
        assert!(
            OcpSpec::new(0, omni_model(), CostSpec::quadratic_default(), vec![], 0.0, 0.0).is_err()
        );
        assert!(OcpSpec::new(
            10,
            omni_model(),
            CostSpec::mixed_exponent_default(),
            vec![],
            0.0,
            0.0
        )
        .is_err());
        assert!(OcpSpec::new(10, diff_model(), CostSpec::quadratic_default(), vec![], 0.0, 0.0)
            .is_err());
        assert!(OcpSpec::new(10, omni_model(), CostSpec::quadratic_default(), vec![], -0.1, 0.0)
            .is_err());
    }
}
