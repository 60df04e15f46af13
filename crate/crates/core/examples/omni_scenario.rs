//! Closed-loop run of the omnidirectional robot through three obstacles that
//! block the straight line to the goal.
//!
//! Loads the bundled scenario, runs the receding-horizon loop, prints a
//! summary (settling time, worst clearance, solver status counts), and
//! writes the full log as CSV.
//!
//! Run with `cargo run --release --example omni_scenario`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ellipsoid_mpc::scenario::Scenario;
use ellipsoid_mpc::simulation::run;

fn main() -> ellipsoid_mpc::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/omni_slalom.json");
    let scenario = Scenario::from_file(&path)?;
    println!(
        "scenario: {} obstacles, horizon {}, dt {} s, duration {} s",
        scenario.obstacles.len(),
        scenario.horizon,
        scenario.model.dt(),
        scenario.duration
    );

    let log = run(&scenario)?;
    if let Some(err) = &log.error {
        println!("run aborted: {err}");
        return Ok(());
    }

    // Settling time: first sample from which position and heading stay small.
    let settled =
        log.rows.iter().position(|r| r.pose.position().norm() < 0.05 && r.pose.theta.abs() < 0.05);
    match settled {
        Some(i) => {
            println!("settled (|p| < 0.05 m, |theta| < 0.05 rad) at t = {:.1} s", log.rows[i].t)
        }
        None => println!("did not settle within the run"),
    }

    // Worst clearance over the run, per obstacle, in overlap-measure units
    // (negative means clear; zero is contact).
    for obs in 0..scenario.obstacles.len() {
        let worst = log.rows.iter().map(|r| r.kappa_raw[obs]).fold(f64::NEG_INFINITY, f64::max);
        println!("obstacle {}: max raw overlap measure {:+.3}", obs + 1, worst);
    }

    let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
    for row in &log.rows {
        *statuses.entry(row.status.as_str()).or_default() += 1;
    }
    println!("solver statuses: {statuses:?}");

    let mut times: Vec<f64> = log.rows[..log.rows.len() - 1].iter().map(|r| r.solve_ms).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "solve time: median {:.2} ms, p95 {:.2} ms, max {:.2} ms",
        times[times.len() / 2],
        times[(times.len() as f64 * 0.95) as usize],
        times[times.len() - 1]
    );

    let out = std::env::temp_dir().join("omni_scenario.csv");
    std::fs::write(&out, log.to_csv_string())?;
    println!("full log: {}", out.display());
    Ok(())
}
