//! Scenario files: JSON descriptions of a closed-loop run.
//!
//! A scenario bundles the robot model, its starting pose, the obstacle
//! field, optional cost and solver overrides, the controller settings, and
//! the simulated duration. Unknown keys are rejected so typos fail loudly
//! instead of silently falling back to defaults.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PlanarPose};
use crate::kinematics::{KinematicFamily, RobotModel};
use crate::ocp::{CostSpec, OcpSpec};
use crate::solver::SolverSettings;

/// A fully validated closed-loop scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: RobotModel,
    pub x0: PlanarPose,
    pub obstacles: Vec<Ellipsoid>,
    pub cost: CostSpec,
    pub horizon: usize,
    pub inflation_margin: f64,
    pub constraint_margin: f64,
    pub solver: SolverSettings,
    /// Simulated time span in seconds.
    pub duration: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    model: ModelSection,
    x0: [f64; 3],
    obstacles: Vec<ObstacleSection>,
    #[serde(default)]
    cost: Option<CostSection>,
    #[serde(default)]
    mpc: Option<MpcSection>,
    #[serde(default)]
    solver: Option<SolverSection>,
    duration: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    family: String,
    semi_axes: [f64; 2],
    input_bounds: BoundsSection,
    dt: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    /// Max absolute translational speed, m/s.
    translation: f64,
    /// Max absolute turn rate, rad/s.
    rotation: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSection {
    semi_axes: [f64; 2],
    #[serde(default)]
    rotation: f64,
    center: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CostSection {
    state_weights: Vec<f64>,
    input_weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MpcSection {
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default)]
    inflation_margin: f64,
    #[serde(default)]
    constraint_margin: f64,
}

fn default_horizon() -> usize {
    10
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    max_outer: Option<usize>,
    max_inner: Option<usize>,
    penalty_init: Option<f64>,
    penalty_growth: Option<f64>,
    constraint_tol: Option<f64>,
    gradient_tol: Option<f64>,
    acceptable_violation: Option<f64>,
    lbfgs_memory: Option<usize>,
    time_budget: Option<f64>,
}

impl Scenario {
    /// Parses and validates a scenario from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_parts(file)
    }

    /// Reads and parses a scenario file.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    fn from_parts(file: ScenarioFile) -> Result<Self> {
        let semi_axes = (file.model.semi_axes[0], file.model.semi_axes[1]);
        let b = &file.model.input_bounds;
        let model = match file.model.family.as_str() {
            "omnidirectional" => {
                RobotModel::omnidirectional(semi_axes, b.translation, b.rotation, file.model.dt)
            }
            "differential-drive" => {
                RobotModel::differential_drive(semi_axes, b.translation, b.rotation, file.model.dt)
            }
            other => Err(Error::Scenario(format!(
                "unknown model family {other:?}; expected \"omnidirectional\" or \
                 \"differential-drive\""
            ))),
        }?;

        if file.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scenario("x0 components must be finite".into()));
        }
        let x0 = PlanarPose::new(file.x0[0], file.x0[1], file.x0[2]);

        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for (i, o) in file.obstacles.iter().enumerate() {
            let e = Ellipsoid::from_semi_axes(
                o.semi_axes[0],
                o.semi_axes[1],
                o.rotation,
                (o.center[0], o.center[1]),
            )
            .map_err(|e| Error::Scenario(format!("obstacle {i}: {e}")))?;
            obstacles.push(e);
        }

        let cost = match file.cost {
            None => CostSpec::default_for(model.family()),
            Some(c) => cost_from_section(&c, model.family())?,
        };

        let (horizon, inflation_margin, constraint_margin) = match file.mpc {
            None => (default_horizon(), 0.0, 0.0),
            Some(m) => (m.horizon, m.inflation_margin, m.constraint_margin),
        };

        let mut solver = SolverSettings::default();
        if let Some(s) = file.solver {
            if let Some(v) = s.max_outer {
                solver.max_outer = v;
            }
            if let Some(v) = s.max_inner {
                solver.max_inner = v;
            }
            if let Some(v) = s.penalty_init {
                solver.penalty_init = v;
            }
            if let Some(v) = s.penalty_growth {
                solver.penalty_growth = v;
            }
            if let Some(v) = s.constraint_tol {
                solver.constraint_tol = v;
            }
            if let Some(v) = s.gradient_tol {
                solver.gradient_tol = v;
            }
            if let Some(v) = s.acceptable_violation {
                solver.acceptable_violation = v;
            }
            if let Some(v) = s.lbfgs_memory {
                solver.lbfgs_memory = v;
            }
            if let Some(v) = s.time_budget {
                solver.time_budget = Some(v);
            }
        }
        solver.validate()?;

        if !(file.duration > 0.0 && file.duration.is_finite()) {
            return Err(Error::Scenario(format!(
                "duration must be positive and finite, got {}",
                file.duration
            )));
        }
        let scenario = Scenario {
            model,
            x0,
            obstacles,
            cost,
            horizon,
            inflation_margin,
            constraint_margin,
            solver,
            duration: file.duration,
        };
        if scenario.steps() == 0 {
            return Err(Error::Scenario(format!(
                "duration {} is shorter than half a sampling interval {}",
                scenario.duration,
                scenario.model.dt()
            )));
        }
        // Surface controller-side problems (margins, cost/family mismatch)
        // at load time rather than on the first solve.
        scenario.ocp_spec()?;
        Ok(scenario)
    }

    /// The per-solve problem this scenario describes.
    pub fn ocp_spec(&self) -> Result<OcpSpec> {
        OcpSpec::new(
            self.horizon,
            self.model.clone(),
            self.cost.clone(),
            self.obstacles.clone(),
            self.inflation_margin,
            self.constraint_margin,
        )
    }

    /// Number of control steps in the simulated span.
    pub fn steps(&self) -> usize {
        (self.duration / self.model.dt()).round() as usize
    }

    /// A deterministic 64-bit digest of the physical scenario parameters
    /// (model, start, obstacles, cost, controller settings, duration), used
    /// to seed reproducible disturbance streams. FNV-1a over the canonical
    /// little-endian byte encoding; independent of the JSON formatting.
    pub fn stable_hash(&self) -> u64 {
        let mut h = Fnv::new();
        h.byte(match self.model.family() {
            KinematicFamily::Omnidirectional => 0,
            KinematicFamily::DifferentialDrive => 1,
        });
        let (a, b) = self.model.semi_axes();
        h.floats(&[a, b]);
        h.floats(self.model.input_lower());
        h.floats(self.model.input_upper());
        h.floats(&[self.model.dt(), self.x0.x1, self.x0.x2, self.x0.theta]);
        h.usize(self.obstacles.len());
        for o in &self.obstacles {
            let m = o.matrix();
            h.floats(m.as_slice());
            h.floats(o.center().as_slice());
        }
        match &self.cost {
            CostSpec::Quadratic { state_weights, input_weights } => {
                h.byte(0);
                h.floats(state_weights);
                h.floats(input_weights);
            }
            CostSpec::MixedExponent { state_weights, input_weights } => {
                h.byte(1);
                h.floats(state_weights);
                h.floats(input_weights);
            }
        }
        h.usize(self.horizon);
        h.floats(&[self.inflation_margin, self.constraint_margin, self.duration]);
        h.finish()
    }
}

fn cost_from_section(c: &CostSection, family: KinematicFamily) -> Result<CostSpec> {
    let need_inputs = family.n_inputs();
    if c.state_weights.len() != 3 {
        return Err(Error::Scenario(format!(
            "cost.state_weights must have 3 entries, got {}",
            c.state_weights.len()
        )));
    }
    if c.input_weights.len() != need_inputs {
        return Err(Error::Scenario(format!(
            "cost.input_weights must have {need_inputs} entries for this family, got {}",
            c.input_weights.len()
        )));
    }
    let sw = [c.state_weights[0], c.state_weights[1], c.state_weights[2]];
    Ok(match family {
        KinematicFamily::Omnidirectional => CostSpec::Quadratic {
            state_weights: sw,
            input_weights: [c.input_weights[0], c.input_weights[1], c.input_weights[2]],
        },
        KinematicFamily::DifferentialDrive => CostSpec::MixedExponent {
            state_weights: sw,
            input_weights: [c.input_weights[0], c.input_weights[1]],
        },
    })
}

/// FNV-1a, 64-bit; tiny, dependency-free, and stable across platforms.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x100_0000_01b3);
    }

    fn floats(&mut self, vs: &[f64]) {
        for v in vs {
            for b in v.to_bits().to_le_bytes() {
                self.byte(b);
            }
        }
    }

    fn usize(&mut self, v: usize) {
        for b in (v as u64).to_le_bytes() {
            self.byte(b);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
