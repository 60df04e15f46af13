//! Measurement noise versus safety margin in closed loop.
//!
//! The controller only sees a noisy pose, so the true footprint can sit
//! closer to an obstacle than the planner believes. Inflating the footprint
//! used by the constraints buys back that error. This example sweeps the
//! inflation margin at a fixed noise level and reports whether the true
//! (uninflated) footprint stayed clear.
//!
//! The noise stream is seeded from a hash of the scenario parameters, so
//! repeated runs are reproducible.
//!
//! Run with `cargo run --release --example perturbed_run`.

use std::path::PathBuf;

use ellipsoid_mpc::scenario::Scenario;
use ellipsoid_mpc::simulation::perturbed_run;

fn main() -> ellipsoid_mpc::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/omni_slalom.json");
    let noise = 0.005;

    println!("pose noise std {noise} m/rad, sweeping the inflation margin:\n");
    println!("  margin   worst raw overlap   final |p|    verdict");
    for margin in [0.0, 0.01, 0.02, 0.03, 0.04, 0.05] {
        let mut scenario = Scenario::from_file(&path)?;
        scenario.inflation_margin = margin;
        let log = perturbed_run(&scenario, noise)?;
        if let Some(err) = &log.error {
            println!("  {margin:.2}     run aborted: {err}");
            continue;
        }
        let worst = log
            .rows
            .iter()
            .flat_map(|r| r.kappa_raw.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        let final_p = log.rows.last().unwrap().pose.position().norm();
        let verdict = if worst < 0.0 { "clear" } else { "contact" };
        println!("  {margin:.2}     {worst:+12.3}       {final_p:.4}      {verdict}");
    }

    println!(
        "\nwith no margin the noisy loop grazes the obstacles; from about \
         0.02 the raw footprint stays clear, and the bundled scenario ships \
         with 0.03."
    );
    Ok(())
}
