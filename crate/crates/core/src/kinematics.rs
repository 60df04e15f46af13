//! Discrete-time planar robot models.
//!
//! Two families: an omnidirectional robot (single integrator in world frame)
//! and a differential-drive robot. Both use the exact zero-order-hold
//! discretization of their continuous kinematics rather than a Runge-Kutta
//! approximation, so stepping twice with half the sampling time reproduces a
//! full step to rounding error and the closed-loop plant can share the same
//! map as the predictor.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PlanarPose};

/// Angular rates below this threshold take the series form of the
/// differential-drive step; above it the exact trigonometric form is used.
const OMEGA_SERIES_TOL: f64 = 1e-8;

/// Kinematic family of a robot model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KinematicFamily {
    /// World-frame velocity inputs `(v_x, v_y, omega)`.
    Omnidirectional,
    /// Body-frame inputs `(v, omega)`; no lateral motion.
    DifferentialDrive,
}

impl KinematicFamily {
    /// Number of control inputs.
    pub fn n_inputs(&self) -> usize {
        match self {
            KinematicFamily::Omnidirectional => 3,
            KinematicFamily::DifferentialDrive => 2,
        }
    }
}

/// A control input; dimension fixed by the kinematic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputVector {
    dim: usize,
    vals: [f64; 3],
}

impl InputVector {
    /// Omnidirectional input `(v_x, v_y, omega)`.
    pub fn omnidirectional(vx: f64, vy: f64, omega: f64) -> Self {
        Self { dim: 3, vals: [vx, vy, omega] }
    }

    /// Differential-drive input `(v, omega)`.
    pub fn differential_drive(v: f64, omega: f64) -> Self {
        Self { dim: 2, vals: [v, omega, 0.0] }
    }

    /// Builds an input for `family` from a slice of matching length.
    pub fn from_slice(family: KinematicFamily, u: &[f64]) -> Result<Self> {
        let n = family.n_inputs();
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.len() });
        }
        let mut vals = [0.0; 3];
        vals[..n].copy_from_slice(u);
        Ok(Self { dim: n, vals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.dim]
    }
}

impl std::ops::Index<usize> for InputVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

/// A planar robot: kinematic family, elliptical footprint, input box, and
/// sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    family: KinematicFamily,
    semi_axes: (f64, f64),
    input_lower: [f64; 3],
    input_upper: [f64; 3],
    dt: f64,
}

impl RobotModel {
    /// Omnidirectional robot with symmetric input box
    /// `|v_x|, |v_y| <= translation_bound`, `|omega| <= rotation_bound`.
    pub fn omnidirectional(
        semi_axes: (f64, f64),
        translation_bound: f64,
        rotation_bound: f64,
        dt: f64,
    ) -> Result<Self> {
        Self::build(
            KinematicFamily::Omnidirectional,
            semi_axes,
            [-translation_bound, -translation_bound, -rotation_bound],
            [translation_bound, translation_bound, rotation_bound],
            dt,
        )
    }

    /// Differential-drive robot with symmetric input box
    /// `|v| <= translation_bound`, `|omega| <= rotation_bound`.
    pub fn differential_drive(
        semi_axes: (f64, f64),
        translation_bound: f64,
        rotation_bound: f64,
        dt: f64,
    ) -> Result<Self> {
        Self::build(
            KinematicFamily::DifferentialDrive,
            semi_axes,
            [-translation_bound, -rotation_bound, 0.0],
            [translation_bound, rotation_bound, 0.0],
            dt,
        )
    }

    fn build(
        family: KinematicFamily,
        semi_axes: (f64, f64),
        input_lower: [f64; 3],
        input_upper: [f64; 3],
        dt: f64,
    ) -> Result<Self> {
        if !(semi_axes.0 > 0.0 && semi_axes.1 > 0.0)
            || !semi_axes.0.is_finite()
            || !semi_axes.1.is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "footprint semi-axes must be positive and finite, got {semi_axes:?}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sampling time must be positive and finite, got {dt}"
            )));
        }
        let n = family.n_inputs();
        for i in 0..n {
            if !input_lower[i].is_finite()
                || !input_upper[i].is_finite()
                || input_lower[i] >= input_upper[i]
            {
                return Err(Error::InvalidArgument(format!(
                    "input bounds must be finite with lower < upper, got [{}, {}]",
                    input_lower[i], input_upper[i]
                )));
            }
        }
        Ok(Self { family, semi_axes, input_lower, input_upper, dt })
    }

    pub fn family(&self) -> KinematicFamily {
        self.family
    }

    /// Footprint semi-axes `(a, b)`.
    pub fn semi_axes(&self) -> (f64, f64) {
        self.semi_axes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_inputs(&self) -> usize {
        self.family.n_inputs()
    }

    /// Lower input bounds, one per input.
    pub fn input_lower(&self) -> &[f64] {
        &self.input_lower[..self.n_inputs()]
    }

    /// Upper input bounds, one per input.
    pub fn input_upper(&self) -> &[f64] {
        &self.input_upper[..self.n_inputs()]
    }

    /// Componentwise projection of `u` onto the input box.
    pub fn clamp_input(&self, u: &InputVector) -> Result<InputVector> {
        let n = self.n_inputs();
        if u.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.dim() });
        }
        let mut vals = [0.0; 3];
        for i in 0..n {
            vals[i] = u[i].clamp(self.input_lower[i], self.input_upper[i]);
        }
        Ok(InputVector { dim: n, vals })
    }

    /// Exact zero-order-hold step over one sampling interval.
    pub fn step(&self, x: &PlanarPose, u: &InputVector) -> Result<PlanarPose> {
        if u.dim() != self.n_inputs() {
            return Err(Error::DimensionMismatch { expected: self.n_inputs(), got: u.dim() });
        }
        Ok(self.step_slice(x, u.as_slice()))
    }

    /// Step from a raw input slice; callers guarantee the length.
    pub(crate) fn step_slice(&self, x: &PlanarPose, u: &[f64]) -> PlanarPose {
        debug_assert_eq!(u.len(), self.n_inputs());
        match self.family {
            KinematicFamily::Omnidirectional => PlanarPose::new(
                x.x1 + self.dt * u[0],
                x.x2 + self.dt * u[1],
                x.theta + self.dt * u[2],
            ),
            KinematicFamily::DifferentialDrive => {
                let (v, w) = (u[0], u[1]);
                let h = w * self.dt;
                let (s, c) = arc_factors(w, h);
                PlanarPose::new(
                    x.x1 + v * self.dt * (x.theta.cos() * s - x.theta.sin() * c),
                    x.x2 + v * self.dt * (x.theta.sin() * s + x.theta.cos() * c),
                    x.theta + h,
                )
            }
        }
    }

    /// Jacobians of the step map: `A = d x^+ / d x` (3x3) and
    /// `B = d x^+ / d u` (3x3 with the first `n_inputs` columns meaningful).
    pub(crate) fn step_jacobian(&self, x: &PlanarPose, u: &[f64]) -> (Matrix3<f64>, Matrix3<f64>) {
        debug_assert_eq!(u.len(), self.n_inputs());
        match self.family {
            KinematicFamily::Omnidirectional => {
                (Matrix3::identity(), Matrix3::identity() * self.dt)
            }
            KinematicFamily::DifferentialDrive => {
                let (v, w) = (u[0], u[1]);
                let h = w * self.dt;
                let (s, c) = arc_factors(w, h);
                let (sp, cp) = arc_factor_derivs(w, h);
                let (ct, st) = (x.theta.cos(), x.theta.sin());
                let dir1 = ct * s - st * c;
                let dir2 = st * s + ct * c;
                let mut a = Matrix3::identity();
                a[(0, 2)] = v * self.dt * (-st * s - ct * c);
                a[(1, 2)] = v * self.dt * (ct * s - st * c);
                let mut b = Matrix3::zeros();
                b[(0, 0)] = self.dt * dir1;
                b[(1, 0)] = self.dt * dir2;
                b[(0, 1)] = v * self.dt * self.dt * (ct * sp - st * cp);
                b[(1, 1)] = v * self.dt * self.dt * (st * sp + ct * cp);
                b[(2, 1)] = self.dt;
                (a, b)
            }
        }
    }

    /// Footprint ellipsoid at the given pose: semi-axes of the model,
    /// rotated by the heading, centered at the position.
    pub fn robot_ellipsoid(&self, x: &PlanarPose) -> Ellipsoid {
        Ellipsoid::from_semi_axes(self.semi_axes.0, self.semi_axes.1, x.theta, (x.x1, x.x2))
            .expect("model semi-axes validated at construction")
    }

    /// Footprint grown by `margin` on both semi-axes; used for constraint
    /// tightening. Equivalent to inflating [`Self::robot_ellipsoid`].
    pub fn inflated_robot_ellipsoid(&self, x: &PlanarPose, margin: f64) -> Result<Ellipsoid> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inflation margin must be non-negative and finite, got {margin}"
            )));
        }
        Ok(Ellipsoid::from_semi_axes(
            self.semi_axes.0 + margin,
            self.semi_axes.1 + margin,
            x.theta,
            (x.x1, x.x2),
        )
        .expect("inflated semi-axes remain positive"))
    }
}

/// The factors `S = sin(h)/h` and `C = (1 - cos(h))/h` of the arc traced
/// under constant turn rate, with a second-order series below the rate
/// threshold so the step map stays smooth through `omega = 0`.
fn arc_factors(w: f64, h: f64) -> (f64, f64) {
    if w.abs() > OMEGA_SERIES_TOL {
        (h.sin() / h, (1.0 - h.cos()) / h)
    } else {
        (1.0 - h * h / 6.0, h / 2.0)
    }
}

/// Derivatives `dS/dh` and `dC/dh`, with matching series branch.
fn arc_factor_derivs(w: f64, h: f64) -> (f64, f64) {
    if w.abs() > OMEGA_SERIES_TOL {
        ((h * h.cos() - h.sin()) / (h * h), (h * h.sin() - (1.0 - h.cos())) / (h * h))
    } else {
        (-h / 3.0, 0.5 - h * h / 8.0)
    }
}
