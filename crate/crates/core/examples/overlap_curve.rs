//! Dumps the overlap polynomial of one ellipse pair over a lambda grid.
//!
//! The output CSV has columns `lambda,K,Kq`: `K` is the family value whose
//! endpoints equal 1, and `Kq` multiplies it by the family determinant. The
//! minimum of `Kq` over `[0, 1]` is the overlap measure; plotting both
//! columns shows how the determinant weighting moves the minimizer away from
//! the `K` minimum.
//!
//! Run with `cargo run --example overlap_curve`.

use ellipsoid_mpc::overlap::{kappa_star, write_curve};
use ellipsoid_mpc::Ellipsoid;

fn main() -> ellipsoid_mpc::Result<()> {
    let a = Ellipsoid::from_semi_axes(2.0, 1.0, 0.0, (0.0, 0.0))?;
    let b = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (3.5, 0.0))?;

    let r = kappa_star(&a, &b, None)?;
    println!(
        "pair: kappa = {:+.6} at lambda = {:.6} (branch {})",
        r.kappa_star, r.lambda_star, r.branch
    );

    let path = std::env::temp_dir().join("overlap_curve.csv");
    let mut file = std::fs::File::create(&path)?;
    write_curve(&a, &b, 201, &mut file)?;
    println!("wrote 201 samples to {}", path.display());

    // Echo a coarse view of the curve so the shape is visible in a terminal.
    println!("\n lambda      K           K q");
    let text = std::fs::read_to_string(&path)?;
    for line in text.lines().skip(1).step_by(25) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        println!("  {:.3}   {:+.6}   {:+.6}", cols[0], cols[1], cols[2]);
    }
    Ok(())
}
