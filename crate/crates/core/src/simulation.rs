//! Closed-loop receding-horizon execution: measure, solve, apply the first
//! input over one sampling interval, repeat, with full CSV logging.
//!
//! The plant uses the same exact step map as the predictor, so the nominal
//! loop has no model mismatch; [`perturbed_run`] injects measurement noise
//! drawn from a stream seeded by the scenario digest, keeping disturbed runs
//! exactly reproducible.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::PlanarPose;
use crate::ocp::{shift_warm_start, OcpSpec};
use crate::overlap::kappa_star;
use crate::scenario::Scenario;
use crate::solver::solve;

/// Canonical float formatting for every CSV this crate writes: scientific
/// notation with 17 significant digits, locale-independent, round-trip exact
/// for all finite doubles.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One logged control step (or the final post-run sample).
#[derive(Debug, Clone)]
pub struct LogRow {
    /// Simulated time, s.
    pub t: f64,
    /// True plant pose at time `t`.
    pub pose: PlanarPose,
    /// Input applied over `[t, t + dt)`; all zeros on the final row.
    pub input: Vec<f64>,
    /// Overlap measure of the inflated footprint against each obstacle,
    /// evaluated at the true pose.
    pub kappa_inflated: Vec<f64>,
    /// Overlap measure of the raw footprint; `>= 0` means contact.
    pub kappa_raw: Vec<f64>,
    /// Solver status string, or `"final"` on the closing row.
    pub status: String,
    /// Solver wall time in milliseconds; the only non-deterministic column.
    pub solve_ms: f64,
    /// The pose handed to the solver; present only on perturbed runs.
    pub measured: Option<PlanarPose>,
    /// Per-iteration solver trace; empty unless the scenario's solver
    /// settings request tracing.
    pub trace: Vec<crate::solver::TraceRow>,
}

/// Complete log of one closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoopLog {
    pub rows: Vec<LogRow>,
    /// Set when the run aborted early; `rows` then holds the partial log.
    pub error: Option<String>,
    n_inputs: usize,
    n_obstacles: usize,
    perturbed: bool,
}

impl ClosedLoopLog {
    /// CSV column names for this log's shape.
    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string(), "x1".into(), "x2".into(), "theta".into()];
        for i in 1..=self.n_inputs {
            cols.push(format!("u{i}"));
        }
        for i in 1..=self.n_obstacles {
            cols.push(format!("kappa_o_{i}"));
        }
        for i in 1..=self.n_obstacles {
            cols.push(format!("kappa_r_{i}"));
        }
        cols.push("status".into());
        cols.push("solve_ms".into());
        if self.perturbed {
            cols.push("x1_meas".into());
            cols.push("x2_meas".into());
            cols.push("theta_meas".into());
        }
        cols.join(",")
    }

    /// Serializes the log as CSV with the contract header.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        for row in &self.rows {
            let mut cols = vec![
                fmt_float(row.t),
                fmt_float(row.pose.x1),
                fmt_float(row.pose.x2),
                fmt_float(row.pose.theta),
            ];
            cols.extend(row.input.iter().map(|v| fmt_float(*v)));
            cols.extend(row.kappa_inflated.iter().map(|v| fmt_float(*v)));
            cols.extend(row.kappa_raw.iter().map(|v| fmt_float(*v)));
            cols.push(row.status.clone());
            cols.push(fmt_float(row.solve_ms));
            if self.perturbed {
                let m = row.measured.unwrap_or(row.pose);
                cols.push(fmt_float(m.x1));
                cols.push(fmt_float(m.x2));
                cols.push(fmt_float(m.theta));
            }
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// The CSV content as a string.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv content is ascii")
    }

    /// True if any raw-footprint overlap measure reached zero (contact).
    pub fn any_collision(&self) -> bool {
        self.rows.iter().any(|r| r.kappa_raw.iter().any(|k| *k >= 0.0))
    }
}

/// Runs the scenario nominally: the solver sees the exact plant pose.
pub fn run(scenario: &Scenario) -> Result<ClosedLoopLog> {
    closed_loop(scenario, None)
}

/// Runs the scenario with zero-mean Gaussian noise of the given standard
/// deviation added to every measured pose component. The noise stream is
/// seeded from the scenario digest, so repeated calls are identical.
pub fn perturbed_run(scenario: &Scenario, pose_noise_std: f64) -> Result<ClosedLoopLog> {
    if !(pose_noise_std >= 0.0 && pose_noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "pose noise std must be non-negative and finite, got {pose_noise_std}"
        )));
    }
    closed_loop(scenario, Some(pose_noise_std))
}

fn kappas(spec: &OcpSpec, x: &PlanarPose, inflated: bool) -> Result<Vec<f64>> {
    let footprint =
        if inflated { spec.constraint_footprint(x) } else { spec.model.robot_ellipsoid(x) };
    spec.obstacles.iter().map(|o| Ok(kappa_star(&footprint, o, None)?.kappa_star)).collect()
}

fn closed_loop(scenario: &Scenario, noise: Option<f64>) -> Result<ClosedLoopLog> {
    let spec = scenario.ocp_spec()?;
    let steps = scenario.steps();
    let nu = spec.n_inputs();
    let dt = spec.dt();

    let mut sampler = match noise {
        Some(std) => {
            let normal = Normal::new(0.0, std)
                .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
            Some((ChaCha8Rng::seed_from_u64(scenario.stable_hash()), normal))
        }
        None => None,
    };

    let mut x = scenario.x0;
    let mut warm = vec![0.0; spec.n_vars()];
    let mut rows: Vec<LogRow> = Vec::with_capacity(steps + 1);
    let mut error = None;

    for k in 0..steps {
        let measured = match &mut sampler {
            None => x,
            Some((rng, normal)) => PlanarPose::new(
                x.x1 + normal.sample(rng),
                x.x2 + normal.sample(rng),
                x.theta + normal.sample(rng),
            ),
        };
        let report = match solve(&spec, &measured, Some(&warm), &scenario.solver) {
            Ok(r) => r,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        let u = report.z[..nu].to_vec();
        rows.push(LogRow {
            t: k as f64 * dt,
            pose: x,
            input: u.clone(),
            kappa_inflated: kappas(&spec, &x, true)?,
            kappa_raw: kappas(&spec, &x, false)?,
            status: report.status.to_string(),
            solve_ms: report.wall_time * 1000.0,
            measured: noise.map(|_| measured),
            trace: report.trace,
        });
        x = spec.model.step_slice(&x, &u);
        warm = shift_warm_start(&report.z, &spec.model)?;
    }

    if error.is_none() {
        rows.push(LogRow {
            t: steps as f64 * dt,
            pose: x,
            input: vec![0.0; nu],
            kappa_inflated: kappas(&spec, &x, true)?,
            kappa_raw: kappas(&spec, &x, false)?,
            status: "final".into(),
            solve_ms: 0.0,
            measured: noise.map(|_| x),
            trace: Vec::new(),
        });
    }

    Ok(ClosedLoopLog {
        rows,
        error,
        n_inputs: nu,
        n_obstacles: spec.obstacles.len(),
        perturbed: noise.is_some(),
    })
}
