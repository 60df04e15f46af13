//! A continuous overlap measure for pairs of solid ellipsoids.
//!
//! For ellipsoids `E1 = (A, v)` and `E2 = (B, w)` the family
//! `E_lam = lam A + (1 - lam) B`, `m_lam = E_lam^{-1} (lam A v + (1 - lam) B w)`,
//! `K(lam) = 1 - lam v^T A v - (1 - lam) w^T B w + m_lam^T E_lam m_lam`
//! sandwiches the intersection for every `lam` in `[0, 1]`:
//! `(E1 cap E2) <= {x : (x - m_lam)^T E_lam (x - m_lam) <= K(lam)} <= (E1 cup E2)`.
//! The ellipsoids are disjoint exactly when `K(lam) < 0` for some interior
//! `lam`. Multiplying by `q(lam) = det(E_lam) > 0` clears the inverse; in the
//! plane `K(lam) q(lam)` is a cubic polynomial whose minimum over `[0, 1]` is
//! available in closed form. That minimum is the overlap measure `kappa*`:
//! negative iff the ellipsoids are disjoint, zero iff they touch, positive
//! iff they overlap.
//!
//! `kappa*` is signed but not a Euclidean distance; it is kept un-normalized
//! because the constraint machinery only needs a smooth, sign-correct margin.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::Ellipsoid;

/// Relative threshold below which leading polynomial coefficients are
/// treated as zero when classifying the minimizer branch.
const COEFF_REL_TOL: f64 = 1e-10;

/// Slack for the discriminant of the cubic's stationary equation: values in
/// `[-DISC_CLAMP, 0)` are clamped to zero so the measure stays continuous
/// where the discriminant crosses zero.
const DISC_CLAMP: f64 = 1e-12;

/// One member of the sandwiching family at a fixed `lam`.
#[derive(Debug, Clone)]
pub struct LambdaFamilyPoint {
    /// `E_lam = lam A + (1 - lam) B`.
    pub e_lambda: DMatrix<f64>,
    /// Center `m_lam` of the family member.
    pub m_lambda: DVector<f64>,
    /// `K(lam)`; the family member is the empty set when negative.
    pub k_value: f64,
}

/// Coefficients of the planar polynomial `K(lam) q(lam) = h3 lam^3 + h2 lam^2 + h1 lam + h0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub h0: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl CubicCoefficients {
    /// Polynomial value at `lam` (Horner form).
    pub fn eval(&self, lam: f64) -> f64 {
        ((self.h3 * lam + self.h2) * lam + self.h1) * lam + self.h0
    }

    /// First derivative at `lam`.
    pub fn deriv(&self, lam: f64) -> f64 {
        (3.0 * self.h3 * lam + 2.0 * self.h2) * lam + self.h1
    }

    /// Largest coefficient magnitude; the natural scale for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.h0.abs().max(self.h1.abs()).max(self.h2.abs()).max(self.h3.abs())
    }
}

/// Which branch produced the minimizer of `K(lam) q(lam)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Cubic stationary point inside `(0, 1)`.
    InteriorCubic,
    /// Leading coefficient negligible; vertex of the remaining parabola.
    Quadratic,
    /// Stationary point absent or outside; an endpoint was taken.
    ClampedBoundary,
    /// Quadratic and cubic coefficients both negligible; `lam = 0` by
    /// convention (the measure is then an endpoint value either way).
    DegenerateConstant,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Branch::InteriorCubic => "interior-cubic",
            Branch::Quadratic => "quadratic",
            Branch::ClampedBoundary => "clamped-boundary",
            Branch::DegenerateConstant => "degenerate-constant",
        };
        f.write_str(s)
    }
}

/// Which argument of [`kappa_star`] is the pose-dependent (robot) ellipsoid
/// when a gradient is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseRole {
    First,
    Second,
}

/// Result of an overlap evaluation.
#[derive(Debug, Clone)]
pub struct OverlapResult {
    /// Minimizer of `K(lam) q(lam)` over `[0, 1]`.
    pub lambda_star: f64,
    /// Minimum value; `< 0` disjoint, `= 0` touching, `> 0` overlapping.
    pub kappa_star: f64,
    /// Branch that produced the minimizer.
    pub branch: Branch,
    /// `d kappa* / d (x1, x2, theta)` of the pose-dependent ellipsoid, when
    /// requested.
    pub gradient: Option<Vector3<f64>>,
}

/// Shape matrices and centers `(A, v, B, w)` of a planar pair.
type PlanarPairParts = (Matrix2<f64>, Vector2<f64>, Matrix2<f64>, Vector2<f64>);

fn planar_pair(e1: &Ellipsoid, e2: &Ellipsoid) -> Result<PlanarPairParts> {
    let (a, v) = e1.planar_parts()?;
    let (b, w) = e2.planar_parts()?;
    Ok((a, v, b, w))
}

/// Adjugate of a 2x2 matrix; linear in its argument.
fn adj2(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m.m22, -m.m12, -m.m21, m.m11)
}

/// Evaluates the sandwiching family at `lam` for same-dimension ellipsoids.
///
/// `E_lam` is SPD for every `lam` in `[0, 1]` because it is a convex
/// combination of SPD matrices; `m_lam` is obtained by a Cholesky solve.
pub fn lambda_family(e1: &Ellipsoid, e2: &Ellipsoid, lam: f64) -> Result<LambdaFamilyPoint> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch { expected: e1.dim(), got: e2.dim() });
    }
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::InvalidArgument(format!("lambda must lie in [0, 1], got {lam}")));
    }
    let a = e1.matrix();
    let b = e2.matrix();
    let v = e1.center();
    let w = e2.center();
    let e_lambda = a * lam + b * (1.0 - lam);
    let u = a * v * lam + b * w * (1.0 - lam);
    let chol = e_lambda
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("lambda family matrix lost definiteness".into()))?;
    let m_lambda = chol.solve(&u);
    let alpha = (a * v).dot(v);
    let beta = (b * w).dot(w);
    let k_value = 1.0 - lam * alpha - (1.0 - lam) * beta + m_lambda.dot(&u);
    Ok(LambdaFamilyPoint { e_lambda, m_lambda, k_value })
}

/// Coefficients of the planar cubic `K(lam) q(lam)`.
///
/// With `A, v` and `B, w` the two shape matrices and centers, write
/// `E(lam) = B + lam (A - B)`, `u(lam) = B w + lam (A v - B w)`,
/// `s(lam) = (1 - w^T B w) + lam (w^T B w - v^T A v)`. Then
/// `K q = s(lam) det(E(lam)) + u(lam)^T adj(E(lam)) u(lam)`; the adjugate of a
/// 2x2 matrix is linear in its argument, so the product expands into the four
/// coefficients below. `h0 = det B` and `h0 + h1 + h2 + h3 = det A` hold
/// exactly in real arithmetic.
pub fn cubic_coefficients(e1: &Ellipsoid, e2: &Ellipsoid) -> Result<CubicCoefficients> {
    let (a, v, b, w) = planar_pair(e1, e2)?;

    let alpha = (a * v).dot(&v);
    let beta = (b * w).dot(&w);
    let s0 = 1.0 - beta;
    let s1 = beta - alpha;

    let e1m = a - b;
    let q0 = b.determinant();
    let r0 = adj2(&b);
    let r1 = adj2(&e1m);
    let q1 = (r0 * e1m).trace();
    let q2 = e1m.determinant();

    let u0 = b * w;
    let u1 = a * v - u0;

    let h0 = s0 * q0 + (r0 * u0).dot(&u0);
    let h1 = s0 * q1 + s1 * q0 + (r1 * u0).dot(&u0) + 2.0 * (r0 * u0).dot(&u1);
    let h2 = s0 * q2 + s1 * q1 + (r0 * u1).dot(&u1) + 2.0 * (r1 * u0).dot(&u1);
    let h3 = s1 * q2 + (r1 * u1).dot(&u1);

    Ok(CubicCoefficients { h0, h1, h2, h3 })
}

/// Global minimizer of the cubic over `[0, 1]` together with its branch.
///
/// Branching is by relative magnitude of the leading coefficients:
/// - `|h3|` negligible and `|h2|` negligible: the polynomial is affine; by
///   convention the minimizer is reported at `lam = 0` (the sign verdict is
///   unaffected because both endpoint values are determinants, hence
///   positive).
/// - `|h3|` negligible, `h2 > 0`: parabola vertex `-h1 / (2 h2)`, clamped to
///   `[0, 1]`; a concave parabola instead takes the smaller endpoint.
/// - otherwise: the stationary point `(-h2 + sqrt(h2^2 - 3 h3 h1)) / (3 h3)`
///   of the cubic, which always has positive second derivative there. It
///   wins only while it lies in `(0, 1)` and undercuts both endpoints; a
///   negative discriminant (monotone cubic), a stationary point outside the
///   interval, or an endpoint with smaller polynomial value all yield the
///   better of `lam in {0, 1}`. The endpoint comparison keeps this function
///   the exact argmin of the cubic over the interval, matching the
///   grid-search and dimension-generic evaluation paths.
pub fn lambda_star(c: &CubicCoefficients) -> (f64, Branch) {
    let scale = c.max_abs();
    if scale == 0.0 {
        return (0.0, Branch::DegenerateConstant);
    }
    let tol = COEFF_REL_TOL * scale;
    // Better endpoint, the fallback candidate in every non-interior case.
    let f0 = c.eval(0.0);
    let f1 = c.eval(1.0);
    let (end_lam, end_val) = if f0 <= f1 { (0.0, f0) } else { (1.0, f1) };

    if c.h3.abs() < tol {
        if c.h2.abs() < tol {
            return (0.0, Branch::DegenerateConstant);
        }
        if c.h2 < 0.0 {
            // Concave parabola: the vertex is a maximum.
            return (end_lam, Branch::ClampedBoundary);
        }
        let vertex = -c.h1 / (2.0 * c.h2);
        return (vertex.clamp(0.0, 1.0), Branch::Quadratic);
    }
    let mut disc = c.h2 * c.h2 - 3.0 * c.h3 * c.h1;
    if disc < 0.0 {
        if disc >= -DISC_CLAMP {
            disc = 0.0;
        } else {
            // No stationary points: monotone on the interval.
            return (end_lam, Branch::ClampedBoundary);
        }
    }
    let d = disc.sqrt();
    // Stationary points solve 3 h3 lam^2 + 2 h2 lam + h1 = 0; the root with
    // second derivative +2 sqrt(disc) is the local minimum. The form below
    // avoids cancellation for either sign of h2.
    let lam = if c.h2 > 0.0 { c.h1 / -(c.h2 + d) } else { (-c.h2 + d) / (3.0 * c.h3) };
    if lam > 0.0 && lam < 1.0 && c.eval(lam) <= end_val {
        (lam, Branch::InteriorCubic)
    } else {
        (end_lam, Branch::ClampedBoundary)
    }
}

/// Gradient of `K(lam) q(lam)` at fixed `lam` with respect to the pose
/// `(x1, x2, theta)` of the ellipsoid in `role`.
///
/// At an interior stationary minimizer the total derivative of `kappa*`
/// equals this partial derivative (the `d lam* / d pose` term is annihilated
/// by stationarity); at clamped branches `lam*` is locally constant, so the
/// same expression applies.
fn pose_gradient(
    a: &Matrix2<f64>,
    v: &Vector2<f64>,
    b: &Matrix2<f64>,
    w: &Vector2<f64>,
    lam: f64,
    role: PoseRole,
) -> Vector3<f64> {
    let e = a * lam + b * (1.0 - lam);
    let r = adj2(&e);
    let q = e.determinant();
    let u = a * v * lam + b * w * (1.0 - lam);
    let alpha = (a * v).dot(v);
    let beta = (b * w).dot(w);
    let s = 1.0 - lam * alpha - (1.0 - lam) * beta;

    let (m, c, weight) = match role {
        PoseRole::First => (a, v, lam),
        PoseRole::Second => (b, w, 1.0 - lam),
    };

    // d/d(center): 2 wgt (M R u - q M c).
    let g_center = (m * r * u - m * c * q) * (2.0 * weight);

    // d/d(theta) with M' = J M - M J, J the quarter-turn generator.
    let j = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let mdot = j * m - m * j;
    let g_theta = weight
        * (s * (r * mdot).trace() - q * (mdot * c).dot(c)
            + 2.0 * (mdot * c).dot(&(r * u))
            + (adj2(&mdot) * u).dot(&u));

    Vector3::new(g_center.x, g_center.y, g_theta)
}

/// Closed-form planar overlap measure `kappa* = min_{lam in [0,1]} K(lam) q(lam)`.
///
/// Negative iff the ellipsoids are disjoint, zero iff they touch, positive
/// iff their interiors intersect. When `gradient_for` is given, the result
/// carries `d kappa* / d (x1, x2, theta)` for that ellipsoid's pose, with the
/// heading derivative taken about the ellipsoid's own center.
pub fn kappa_star(
    e1: &Ellipsoid,
    e2: &Ellipsoid,
    gradient_for: Option<PoseRole>,
) -> Result<OverlapResult> {
    let c = cubic_coefficients(e1, e2)?;
    let (lam, branch) = lambda_star(&c);
    let kappa = c.eval(lam);
    let gradient = match gradient_for {
        None => None,
        Some(role) => {
            let (a, v, b, w) = planar_pair(e1, e2)?;
            Some(pose_gradient(&a, &v, &b, &w, lam, role))
        }
    };
    Ok(OverlapResult { lambda_star: lam, kappa_star: kappa, branch, gradient })
}

/// Numerical overlap measure for same-dimension ellipsoids of any dimension.
///
/// Minimizes `K(lam) det(E_lam)` over `[0, 1]` by a 64-sample coarse scan
/// followed by golden-section refinement of the bracketing interval down to
/// width `tol`. Restricted to the plane this agrees with [`kappa_star`] up to
/// the tolerance-induced error; no gradient is produced.
pub fn kappa_star_nd(e1: &Ellipsoid, e2: &Ellipsoid, tol: f64) -> Result<OverlapResult> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch { expected: e1.dim(), got: e2.dim() });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    let a = e1.matrix();
    let b = e2.matrix();
    let v = e1.center();
    let w = e2.center();
    let av = a * v;
    let bw = b * w;
    let alpha = av.dot(v);
    let beta = bw.dot(w);
    let objective = |lam: f64| -> Result<f64> {
        let e = a * lam + b * (1.0 - lam);
        let u = &av * lam + &bw * (1.0 - lam);
        let chol = e
            .cholesky()
            .ok_or_else(|| Error::Numerical("lambda family matrix lost definiteness".into()))?;
        let m = chol.solve(&u);
        let k = 1.0 - lam * alpha - (1.0 - lam) * beta + m.dot(&u);
        Ok(k * chol.determinant())
    };

    const COARSE: usize = 64;
    let mut best_i = 0usize;
    let mut best_val = f64::INFINITY;
    let mut values = [0.0f64; COARSE];
    for (i, slot) in values.iter_mut().enumerate() {
        let lam = i as f64 / (COARSE - 1) as f64;
        let val = objective(lam)?;
        *slot = val;
        if val < best_val {
            best_val = val;
            best_i = i;
        }
    }
    let grid = |i: usize| i as f64 / (COARSE - 1) as f64;
    let mut lo = grid(best_i.saturating_sub(1));
    let mut hi = grid((best_i + 1).min(COARSE - 1));

    // Golden-section on the bracket; the bracket always contains the coarse
    // minimum, and the objective is smooth, so the section converges to a
    // local minimizer of the bracketed dip.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    let lam = 0.5 * (lo + hi);
    let kappa = objective(lam)?;
    let branch = if lam <= tol || lam >= 1.0 - tol {
        Branch::ClampedBoundary
    } else {
        Branch::InteriorCubic
    };
    Ok(OverlapResult { lambda_star: lam, kappa_star: kappa, branch, gradient: None })
}

/// Monte-Carlo check of the sandwiching property at a fixed `lam`.
///
/// Draws `samples` points against each inclusion and returns
/// `(intersection_violations, union_violations)`:
/// points inside both ellipsoids must lie in the family member, and points
/// inside the family member must lie in at least one ellipsoid. Membership
/// comparisons carry a `1e-9` relative slack so boundary-grazing samples do
/// not register spurious violations. Requires `K(lam) > 0` (a nonempty family
/// member).
pub fn containment_check(
    e1: &Ellipsoid,
    e2: &Ellipsoid,
    lam: f64,
    samples: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    use rand::Rng;
    use rand::SeedableRng;

    let fam = lambda_family(e1, e2, lam)?;
    if fam.k_value <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "family member at lambda = {lam} is empty (K = {})",
            fam.k_value
        )));
    }
    let n = e1.dim();
    let member = |point: &DVector<f64>| -> f64 {
        let d = point - &fam.m_lambda;
        (&fam.e_lambda * &d).dot(&d) / fam.k_value
    };
    let slack = 1.0 + 1e-9;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sample_box = |center: &DVector<f64>, hw: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|i| center[i] + hw[i] * rng.random_range(-1.0..1.0)))
    };

    // Inclusion 1: intersection points inside the family member. The
    // intersection lies inside e1, so its bounding box suffices as proposal.
    let hw1 = e1.bounding_half_widths();
    let mut intersection_violations = 0usize;
    for _ in 0..samples {
        let p = sample_box(e1.center(), &hw1);
        if e1.membership_value(&p)? <= 1.0 && e2.membership_value(&p)? <= 1.0 && member(&p) > slack
        {
            intersection_violations += 1;
        }
    }

    // Inclusion 2: family member points inside the union.
    let fam_ell = Ellipsoid::new(fam.e_lambda.clone() / fam.k_value, fam.m_lambda.clone())?;
    let hw_f = fam_ell.bounding_half_widths();
    let mut union_violations = 0usize;
    for _ in 0..samples {
        let p = sample_box(&fam.m_lambda, &hw_f);
        if member(&p) <= 1.0 && e1.membership_value(&p)? > slack && e2.membership_value(&p)? > slack
        {
            union_violations += 1;
        }
    }

    Ok((intersection_violations, union_violations))
}

/// Writes `samples` rows of `lambda,K,Kq` over a uniform grid on `[0, 1]`.
///
/// `K` comes from the family evaluation and `Kq` multiplies it by
/// `det(E_lam)`; at the endpoints `K` equals 1 up to rounding. Numbers are
/// printed with 17 significant digits. `samples >= 2`.
pub fn write_curve<W: std::io::Write>(
    e1: &Ellipsoid,
    e2: &Ellipsoid,
    samples: usize,
    out: &mut W,
) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "curve needs at least 2 samples, got {samples}"
        )));
    }
    writeln!(out, "lambda,K,Kq")?;
    for i in 0..samples {
        let lam = i as f64 / (samples - 1) as f64;
        let fam = lambda_family(e1, e2, lam)?;
        let q = fam
            .e_lambda
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("lambda family matrix lost definiteness".into()))?
            .determinant();
        writeln!(
            out,
            "{},{},{}",
            crate::simulation::fmt_float(lam),
            crate::simulation::fmt_float(fam.k_value),
            crate::simulation::fmt_float(fam.k_value * q)
        )?;
    }
    Ok(())
}
