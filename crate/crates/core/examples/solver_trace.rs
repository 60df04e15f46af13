//! A single constrained solve with the per-iteration trace enabled.
//!
//! Shows the augmented Lagrangian loop from the inside: accepted line-search
//! steps with their cost, worst constraint violation, and step length. The
//! violation is driven down across outer iterations while the cost settles.
//!
//! Run with `cargo run --example solver_trace`.

use ellipsoid_mpc::geometry::PlanarPose;
use ellipsoid_mpc::kinematics::RobotModel;
use ellipsoid_mpc::ocp::{CostSpec, OcpSpec};
use ellipsoid_mpc::solver::{solve, SolverSettings};
use ellipsoid_mpc::Ellipsoid;

fn main() -> ellipsoid_mpc::Result<()> {
    let model = RobotModel::omnidirectional((0.35, 0.2), 0.2, std::f64::consts::FRAC_PI_4, 0.2)?;
    let obstacle = Ellipsoid::from_semi_axes(0.25, 0.18, 0.6, (0.55, 0.18))?;
    let spec = OcpSpec::new(10, model, CostSpec::quadratic_default(), vec![obstacle], 0.03, 0.0)?;
    let x0 = PlanarPose::new(1.1, 0.5, 0.0);

    let settings = SolverSettings { trace: true, ..SolverSettings::default() };
    let report = solve(&spec, &x0, None, &settings)?;

    println!(
        "solve: status {}, objective {:.6}, max violation {:.2e}",
        report.status, report.objective, report.max_violation
    );
    println!(
        "iterations: {} outer / {} inner, wall time {:.2} ms",
        report.outer_iterations,
        report.inner_iterations,
        report.wall_time * 1e3
    );

    // The full trace has one row per accepted line-search step; echo the
    // last row of each outer iteration, which is where the multiplier and
    // penalty updates happen.
    println!("\nend of each outer iteration (violation in overlap-measure units):");
    println!("  outer  inner steps        cost     violation");
    for pair in report.trace.windows(2) {
        if pair[1].outer != pair[0].outer {
            let row = &pair[0];
            println!(
                "  {:5}  {:11}  {:10.5}    {:9.2e}",
                row.outer,
                row.inner + 1,
                row.cost,
                row.violation
            );
        }
    }
    if let Some(row) = report.trace.last() {
        println!(
            "  {:5}  {:11}  {:10.5}    {:9.2e}",
            row.outer,
            row.inner + 1,
            row.cost,
            row.violation
        );
    }

    println!(
        "\nfirst planned input: ({:+.4}, {:+.4}, {:+.4})",
        report.z[0], report.z[1], report.z[2]
    );
    Ok(())
}
