//! Randomized property suites and the brute-force overlap oracle.
//!
//! The oracle deliberately shares no code with the closed-form overlap path:
//! it discretizes the joint bounding box and reports overlap when some grid
//! cell center lies inside both ellipses, so any systematic disagreement
//! points at a real defect rather than a shared bug.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::Ellipsoid;
use crate::overlap::{
    containment_check, cubic_coefficients, kappa_star, kappa_star_nd, lambda_family,
};

/// A random planar ellipse: semi-axes in [0.05, 1) m, rotation in [0, 2pi),
/// center in [-2, 2)^2 m. The distribution every randomized suite draws from.
pub fn random_ellipsoid<R: Rng>(rng: &mut R) -> Ellipsoid {
    let a = rng.random_range(0.05..1.0);
    let b = rng.random_range(0.05..1.0);
    let rot = rng.random_range(0.0..std::f64::consts::TAU);
    let cx = rng.random_range(-2.0..2.0);
    let cy = rng.random_range(-2.0..2.0);
    Ellipsoid::from_semi_axes(a, b, rot, (cx, cy)).expect("axes sampled positive")
}

/// Outcome of one property suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    /// Randomized cases executed.
    pub cases: usize,
    /// Cases with at least one violated property.
    pub failures: usize,
    /// Descriptions of the first few failures, for diagnosis.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport { name: name.into(), cases: 0, failures: 0, notes: Vec::new() }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < 5 {
                self.notes.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "suite {}: {}/{} cases passed{}",
            self.name,
            self.cases - self.failures,
            self.cases,
            if self.passed() { "" } else { " FAIL" }
        )?;
        for n in &self.notes {
            write!(f, "\n  - {n}")?;
        }
        Ok(())
    }
}

pub mod oracle {
    use super::*;

    /// Brute-force overlap decision on a `resolution x resolution` grid of
    /// cell centers spanning the joint bounding box: overlap iff some cell
    /// center lies inside both ellipses.
    ///
    /// Evaluated row by row: on each horizontal grid line, membership in an
    /// ellipse is a quadratic inequality in x, so the cells inside both are
    /// an index interval; this visits every cell center's decision without
    /// the quadratic cost of testing each one.
    pub fn rasterization_overlap(e1: &Ellipsoid, e2: &Ellipsoid, resolution: usize) -> bool {
        assert!(resolution >= 2, "resolution must be at least 2");
        assert_eq!(e1.dim(), 2, "rasterization oracle is planar");
        assert_eq!(e2.dim(), 2, "rasterization oracle is planar");
        let (w1, w2) = (e1.bounding_half_widths(), e2.bounding_half_widths());
        let (c1, c2) = (e1.center(), e2.center());
        let x_min = (c1[0] - w1[0]).min(c2[0] - w2[0]);
        let x_max = (c1[0] + w1[0]).max(c2[0] + w2[0]);
        let y_min = (c1[1] - w1[1]).min(c2[1] - w2[1]);
        let y_max = (c1[1] + w1[1]).max(c2[1] + w2[1]);
        let dx = (x_max - x_min) / resolution as f64;
        let dy = (y_max - y_min) / resolution as f64;

        for j in 0..resolution {
            let y = y_min + (j as f64 + 0.5) * dy;
            let i1 = match row_interval(e1, y) {
                Some(iv) => iv,
                None => continue,
            };
            let i2 = match row_interval(e2, y) {
                Some(iv) => iv,
                None => continue,
            };
            let lo = i1.0.max(i2.0);
            let hi = i1.1.min(i2.1);
            if lo > hi {
                continue;
            }
            // Smallest and largest cell-center indices inside [lo, hi].
            let first = ((lo - x_min) / dx - 0.5).ceil().max(0.0) as isize;
            let last = (((hi - x_min) / dx - 0.5).floor()).min(resolution as f64 - 1.0) as isize;
            if first <= last && first < resolution as isize && last >= 0 {
                return true;
            }
        }
        false
    }

    /// The x-interval of points at height `y` inside the ellipse, if any:
    /// solves `m11 dx^2 + 2 m12 dx dy + m22 dy^2 <= 1` for `dx`.
    fn row_interval(e: &Ellipsoid, y: f64) -> Option<(f64, f64)> {
        let m = e.matrix();
        let c = e.center();
        let dy = y - c[1];
        let a = m[(0, 0)];
        let b = 2.0 * m[(0, 1)] * dy;
        let k = m[(1, 1)] * dy * dy - 1.0;
        let disc = b * b - 4.0 * a * k;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some((c[0] + (-b - root) / (2.0 * a), c[0] + (-b + root) / (2.0 * a)))
    }
}

/// Geometry properties: boundary membership, rigid-transform invariance,
/// inflation monotonicity.
pub fn geometry_suite(pairs: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6765_6f6d);
    let mut report = SuiteReport::new("geometry");
    for case in 0..pairs {
        let a = rng.random_range(0.05..1.0);
        let b = rng.random_range(0.05..1.0);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let (cx, cy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let e = Ellipsoid::from_semi_axes(a, b, th, (cx, cy)).unwrap();

        // Boundary point along the first semi-axis has membership value 1.
        let boundary = nalgebra::DVector::from_vec(vec![cx + a * th.cos(), cy + a * th.sin()]);
        let mv = e.membership_value(&boundary).unwrap();
        let boundary_ok = (mv - 1.0).abs() < 1e-9;

        // A rigid transform preserves membership values.
        let rot = rng.random_range(0.0..std::f64::consts::TAU);
        let (tx, ty) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let moved = e.rigid_transform(rot, (tx, ty)).unwrap();
        let p = nalgebra::DVector::from_vec(vec![
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        let q = nalgebra::DVector::from_vec(vec![
            rot.cos() * p[0] - rot.sin() * p[1] + tx,
            rot.sin() * p[0] + rot.cos() * p[1] + ty,
        ]);
        let inv_ok =
            (e.membership_value(&p).unwrap() - moved.membership_value(&q).unwrap()).abs() < 1e-9;

        // Inflation only shrinks membership values (grows the set).
        let margin = rng.random_range(0.0..0.5);
        let grown = e.inflate(margin).unwrap();
        let grow_ok =
            grown.membership_value(&p).unwrap() <= e.membership_value(&p).unwrap() + 1e-12;

        report.record(boundary_ok && inv_ok && grow_ok, || {
            format!(
                "case {case}: boundary {boundary_ok}, rigid invariance {inv_ok}, \
                 inflation {grow_ok}"
            )
        });
    }
    report
}

/// Overlap properties: endpoint identities, cubic consistency, sign-oracle
/// agreement, swap symmetry, dimension-generic path agreement, containment.
pub fn overlap_suite(pairs: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f76_6572);
    let mut report = SuiteReport::new("overlap");
    for case in 0..pairs {
        let e1 = random_ellipsoid(&mut rng);
        let e2 = random_ellipsoid(&mut rng);
        let mut problems: Vec<String> = Vec::new();

        let k0 = lambda_family(&e1, &e2, 0.0).unwrap().k_value;
        let k1 = lambda_family(&e1, &e2, 1.0).unwrap().k_value;
        if (k0 - 1.0).abs() > 1e-12 || (k1 - 1.0).abs() > 1e-12 {
            problems.push(format!("endpoint K values {k0}, {k1}"));
        }

        let coeffs = cubic_coefficients(&e1, &e2).unwrap();
        let det_a = e1.matrix().determinant();
        let det_b = e2.matrix().determinant();
        let sum = coeffs.h0 + coeffs.h1 + coeffs.h2 + coeffs.h3;
        // Rounding in the sums scales with the largest coefficient, which can
        // dwarf the determinants themselves for eccentric pairs, so the
        // identity tolerance is relative to that scale.
        let scale = coeffs.max_abs().max(1.0);
        if (coeffs.h0 - det_b).abs() > 1e-9 * scale || (sum - det_a).abs() > 1e-9 * scale {
            problems.push(format!(
                "coefficient endpoint identities: h0 {} det_b {} sum {} det_a {}",
                coeffs.h0, det_b, sum, det_a
            ));
        }

        // Cubic consistency against the direct family evaluation.
        for _ in 0..5 {
            let lam = rng.random_range(0.0..1.0);
            let fam = lambda_family(&e1, &e2, lam).unwrap();
            let q = fam.e_lambda.determinant();
            let direct = fam.k_value * q;
            let poly = coeffs.eval(lam);
            if (poly - direct).abs() > 1e-9 * direct.abs().max(1.0) {
                problems.push(format!("cubic mismatch at lambda {lam}"));
                break;
            }
        }

        let r12 = kappa_star(&e1, &e2, None).unwrap();
        let r21 = kappa_star(&e2, &e1, None).unwrap();
        if (r12.kappa_star - r21.kappa_star).abs() > 1e-9 * r12.kappa_star.abs().max(1.0) {
            problems.push("swap symmetry".into());
        }

        if r12.kappa_star.abs() > 1e-3 {
            let grid = oracle::rasterization_overlap(&e1, &e2, 2000);
            if grid != (r12.kappa_star > 0.0) {
                problems.push(format!("sign disagrees with oracle at kappa {}", r12.kappa_star));
            }
        }

        let nd = kappa_star_nd(&e1, &e2, 1e-9).unwrap();
        if (nd.kappa_star - r12.kappa_star).abs() > 1e-6 * r12.kappa_star.abs().max(1.0) {
            problems.push(format!(
                "dimension-generic path {} vs closed form {}",
                nd.kappa_star, r12.kappa_star
            ));
        }

        // Containment sandwich, checked when the family set is nonempty.
        if lambda_family(&e1, &e2, 0.5).unwrap().k_value > 1e-6 {
            let (inner, outer) = containment_check(&e1, &e2, 0.5, 500, seed ^ case as u64).unwrap();
            if inner != 0 || outer != 0 {
                problems.push(format!("containment violations ({inner}, {outer})"));
            }
        }

        report.record(problems.is_empty(), || format!("case {case}: {}", problems.join("; ")));
    }
    report
}

/// Solver properties: exact box feasibility, determinism, gradient
/// consistency of the augmented objective, stationarity on unconstrained
/// problems.
pub fn solver_suite(cases: usize, seed: u64) -> SuiteReport {
    use crate::geometry::PlanarPose;
    use crate::kinematics::RobotModel;
    use crate::ocp::{CostSpec, OcpSpec};
    use crate::solver::{augmented_lagrangian_value, solve, SolveStatus, SolverSettings};

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x736f_6c76);
    let mut report = SuiteReport::new("solver");
    let settings = SolverSettings { time_budget: Some(60.0), ..SolverSettings::default() };
    for case in 0..cases {
        let model = RobotModel::omnidirectional((0.35, 0.2), 0.2, std::f64::consts::FRAC_PI_4, 0.2)
            .unwrap();
        let radius = rng.random_range(0.9..1.2);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let x0 = PlanarPose::new(
            radius * angle.cos(),
            radius * angle.sin(),
            rng.random_range(-0.8..0.8),
        );
        let obstacles = if case % 3 == 0 {
            vec![]
        } else {
            // One obstacle on the line of sight. Its semi axes are capped so
            // the start pose stays collision free with at least 0.05 of
            // clearance in the worst orientation (footprint reach 0.35), so
            // every generated problem admits a feasible plan.
            let t = rng.random_range(0.3..0.42);
            let off = rng.random_range(-0.03..0.03);
            let center = (x0.x1 * t + off, x0.x2 * t - off);
            let dist = ((x0.x1 - center.0).powi(2) + (x0.x2 - center.1).powi(2)).sqrt();
            let cap = (dist - 0.4).min(0.25);
            vec![Ellipsoid::from_semi_axes(
                rng.random_range(0.06..cap),
                rng.random_range(0.06..cap),
                rng.random_range(0.0..std::f64::consts::TAU),
                center,
            )
            .unwrap()]
        };
        let spec =
            OcpSpec::new(10, model, CostSpec::quadratic_default(), obstacles, 0.0, 0.0).unwrap();

        let mut problems: Vec<String> = Vec::new();
        let a = solve(&spec, &x0, None, &settings).unwrap();
        let b = solve(&spec, &x0, None, &settings).unwrap();

        let lo = spec.model.input_lower().to_vec();
        let hi = spec.model.input_upper().to_vec();
        let nu = spec.n_inputs();
        if !a.z.iter().enumerate().all(|(j, v)| *v >= lo[j % nu] && *v <= hi[j % nu]) {
            problems.push("plan escapes the input box".into());
        }
        if a.z.iter().zip(&b.z).any(|(x, y)| x.to_bits() != y.to_bits()) {
            problems.push("repeated solves disagree".into());
        }
        if spec.obstacles.is_empty() && a.status != SolveStatus::Optimal {
            problems.push(format!("unconstrained case not optimal: {}", a.status));
        }
        if !spec.obstacles.is_empty() && a.max_violation > 0.05 {
            problems.push(format!("constrained case stalled at violation {}", a.max_violation));
        }

        // Gradient consistency of the augmented objective at the solution.
        // At a solution the active rows sit near the activation threshold of
        // the penalty hinge, where a central difference would straddle the
        // kink. Multipliers landing inside a safety band around that
        // threshold are moved out of it; the probe then runs on a locally
        // smooth function and must match the analytic gradient tightly.
        let rho = 10.0;
        let h = 1e-6;
        let mut mu: Vec<f64> =
            (0..spec.horizon * spec.obstacles.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        if !spec.obstacles.is_empty() {
            let eval = crate::ocp::constraint_values(&spec, &x0, &a.z).unwrap();
            let nobs = spec.obstacles.len();
            for k in 1..=spec.horizon {
                for i in 0..nobs {
                    let g = eval.values[(k, i)] + spec.constraint_margin;
                    let row_scale = eval.jacobian.row(k * nobs + i).amax().max(1.0);
                    let band = (0.05f64).max(20.0 * rho * h * row_scale);
                    let m = &mut mu[(k - 1) * nobs + i];
                    if (*m + rho * g).abs() < band {
                        *m = (band + 0.5 - rho * g).max(0.0);
                    }
                }
            }
        }
        let (_, grad) = augmented_lagrangian_value(&spec, &x0, &a.z, &mu, rho).unwrap();
        for _ in 0..3 {
            let j = rng.random_range(0..spec.n_vars());
            let mut zp = a.z.clone();
            let mut zm = a.z.clone();
            zp[j] += h;
            zm[j] -= h;
            let (fp, _) = augmented_lagrangian_value(&spec, &x0, &zp, &mu, rho).unwrap();
            let (fm, _) = augmented_lagrangian_value(&spec, &x0, &zm, &mu, rho).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            if (grad[j] - fd).abs() > 1e-4 * fd.abs().max(1.0) {
                problems.push(format!(
                    "gradient[{j}] {} vs finite difference {fd} (status {}, viol {})",
                    grad[j], a.status, a.max_violation
                ));
                break;
            }
        }

        report.record(problems.is_empty(), || format!("case {case}: {}", problems.join("; ")));
    }
    report
}

/// Runs every suite with the same case count and seed.
pub fn all_suites(pairs: usize, seed: u64) -> Vec<SuiteReport> {
    vec![geometry_suite(pairs, seed), overlap_suite(pairs, seed), solver_suite(pairs, seed)]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadratic-cost rasterization: test every cell center.
    fn brute_force_overlap(e1: &Ellipsoid, e2: &Ellipsoid, resolution: usize) -> bool {
        let (w1, w2) = (e1.bounding_half_widths(), e2.bounding_half_widths());
        let (c1, c2) = (e1.center(), e2.center());
        let x_min = (c1[0] - w1[0]).min(c2[0] - w2[0]);
        let x_max = (c1[0] + w1[0]).max(c2[0] + w2[0]);
        let y_min = (c1[1] - w1[1]).min(c2[1] - w2[1]);
        let y_max = (c1[1] + w1[1]).max(c2[1] + w2[1]);
        let dx = (x_max - x_min) / resolution as f64;
        let dy = (y_max - y_min) / resolution as f64;
        for j in 0..resolution {
            for i in 0..resolution {
                let p = nalgebra::DVector::from_vec(vec![
                    x_min + (i as f64 + 0.5) * dx,
                    y_min + (j as f64 + 0.5) * dy,
                ]);
                if e1.contains(&p).unwrap() && e2.contains(&p).unwrap() {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn fast_oracle_equals_the_cell_by_cell_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..40 {
            let e1 = random_ellipsoid(&mut rng);
            let e2 = random_ellipsoid(&mut rng);
            for resolution in [64, 97] {
                assert_eq!(
                    oracle::rasterization_overlap(&e1, &e2, resolution),
                    brute_force_overlap(&e1, &e2, resolution),
                    "oracle disagrees with direct scan"
                );
            }
        }
    }

    #[test]
    fn oracle_classifies_clear_cases() {
        let a = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        let apart = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (3.0, 0.0)).unwrap();
        let inside = Ellipsoid::from_semi_axes(0.2, 0.1, 0.7, (0.1, 0.0)).unwrap();
        assert!(!oracle::rasterization_overlap(&a, &apart, 2000));
        assert!(oracle::rasterization_overlap(&a, &inside, 2000));
        assert!(oracle::rasterization_overlap(&a, &a, 64));
    }

    #[test]
    fn suites_pass_on_small_runs() {
        for report in all_suites(40, 2024) {
            assert!(report.passed(), "{report}");
            assert_eq!(report.cases, 40);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = overlap_suite(25, 7);
        let b = overlap_suite(25, 7);
        assert_eq!(a, b);
        let c = overlap_suite(25, 8);
        assert_eq!(c.cases, 25);
    }

    #[test]
    fn zero_cases_pass_vacuously() {
        for report in all_suites(0, 1) {
            assert!(report.passed());
            assert_eq!(report.cases, 0);
        }
    }
}
