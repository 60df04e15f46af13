//! Solid ellipsoids represented by their shape matrix, plus planar poses.
//!
//! An ellipsoid is the set `{x : (x - p)^T M (x - p) <= 1}` for a symmetric
//! positive definite matrix `M` and center `p`. Storing `M` directly (rather
//! than semi-axes and an angle) keeps membership tests, affine combinations,
//! and rigid transforms free of trigonometry; semi-axes are recovered on
//! demand through a symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by the constructor before a matrix is
/// rejected as non-symmetric.
const SYMMETRY_TOL: f64 = 1e-12;

/// A solid n-dimensional ellipsoid `{x : (x - p)^T M (x - p) <= 1}`.
///
/// `M` is validated once at construction (symmetric within `1e-12` relative
/// asymmetry, positive definite via Cholesky); every other operation may rely
/// on those properties without re-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    matrix: DMatrix<f64>,
    center: DVector<f64>,
}

impl Ellipsoid {
    /// Builds an ellipsoid from a shape matrix and center.
    ///
    /// Fails if the matrix is not symmetric positive definite, any entry is
    /// non-finite, or the center dimension does not match. The stored matrix
    /// is the symmetrized `(M + M^T) / 2`.
    pub fn new(matrix: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("ellipsoid dimension must be >= 1".into()));
        }
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.ncols() });
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: center.len() });
        }
        if matrix.iter().any(|x| !x.is_finite()) || center.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry in ellipsoid data".into()));
        }
        let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let asym = (&matrix - matrix.transpose()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        if matrix.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { matrix, center })
    }

    /// Builds a planar ellipsoid from semi-axes `(a, b)`, a rotation of the
    /// major frame, and a center: `M = Rot(t) diag(1/a^2, 1/b^2) Rot(t)^T`.
    pub fn from_semi_axes(a: f64, b: f64, rotation: f64, center: (f64, f64)) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "semi-axes must be positive and finite, got ({a}, {b})"
            )));
        }
        if !rotation.is_finite() || !center.0.is_finite() || !center.1.is_finite() {
            return Err(Error::InvalidArgument("non-finite rotation or center".into()));
        }
        let m = planar_shape_matrix(a, b, rotation);
        let matrix = DMatrix::from_row_slice(2, 2, &[m.m11, m.m12, m.m21, m.m22]);
        let center = DVector::from_column_slice(&[center.0, center.1]);
        // Construction guarantees SPD; validation still runs to keep a single
        // entry point for the invariant.
        Self::new(matrix, center)
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Shape matrix `M`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Center `p`.
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// The quadratic form `(x - p)^T M (x - p)`; membership means `<= 1`.
    pub fn membership_value(&self, point: &DVector<f64>) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: point.len() });
        }
        let d = point - &self.center;
        Ok((&self.matrix * &d).dot(&d))
    }

    /// Whether `point` lies in the closed ellipsoid.
    pub fn contains(&self, point: &DVector<f64>) -> Result<bool> {
        Ok(self.membership_value(point)? <= 1.0)
    }

    /// Applies the planar rigid motion `x -> Rot(t) x + translation`.
    ///
    /// The shape matrix maps to `Rot(t) M Rot(t)^T`, so membership is
    /// preserved: `x` is inside the original iff its image is inside the
    /// result. Planar ellipsoids only.
    pub fn rigid_transform(&self, rotation: f64, translation: (f64, f64)) -> Result<Self> {
        let (m, p) = self.planar_parts()?;
        let rot = nalgebra::Rotation2::new(rotation).into_inner();
        let m2 = rot * m * rot.transpose();
        let c2 = rot * p + Vector2::new(translation.0, translation.1);
        Self::new(
            DMatrix::from_row_slice(2, 2, &[m2.m11, m2.m12, m2.m21, m2.m22]),
            DVector::from_column_slice(&[c2.x, c2.y]),
        )
    }

    /// Grows every semi-axis by `margin` (in length units), preserving the
    /// principal directions and center. `margin` must be non-negative.
    pub fn inflate(&self, margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inflation margin must be non-negative and finite, got {margin}"
            )));
        }
        let eig = self.matrix.clone().symmetric_eigen();
        let mut scaled = eig.eigenvalues.clone();
        for ev in scaled.iter_mut() {
            // SPD guarantees ev > 0; semi-axis along this direction is
            // 1/sqrt(ev).
            let axis = 1.0 / ev.sqrt() + margin;
            *ev = 1.0 / (axis * axis);
        }
        let q = &eig.eigenvectors;
        let matrix = q * DMatrix::from_diagonal(&scaled) * q.transpose();
        Self::new(matrix, self.center.clone())
    }

    /// Half-widths of the axis-aligned bounding box: `sqrt((M^{-1})_ii)`.
    pub fn bounding_half_widths(&self) -> DVector<f64> {
        // Cholesky exists by the construction invariant.
        let inv =
            self.matrix.clone().cholesky().expect("shape matrix is SPD by construction").inverse();
        DVector::from_iterator(self.dim(), inv.diagonal().iter().map(|d| d.sqrt()))
    }

    /// The 2x2 shape matrix and center as fixed-size values; errors for n != 2.
    pub fn planar_parts(&self) -> Result<(Matrix2<f64>, Vector2<f64>)> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        let m = &self.matrix;
        Ok((
            Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
            Vector2::new(self.center[0], self.center[1]),
        ))
    }
}

/// `Rot(t) diag(1/a^2, 1/b^2) Rot(t)^T` as a fixed-size matrix.
pub(crate) fn planar_shape_matrix(a: f64, b: f64, rotation: f64) -> Matrix2<f64> {
    let rot = nalgebra::Rotation2::new(rotation).into_inner();
    let d = Matrix2::new(1.0 / (a * a), 0.0, 0.0, 1.0 / (b * b));
    rot * d * rot.transpose()
}

/// A planar robot pose: position `(x1, x2)` and heading `theta`.
///
/// `theta` is never wrapped; costs and constraints are smooth in the
/// unwrapped angle and wrapping would create artificial discontinuities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPose {
    pub x1: f64,
    pub x2: f64,
    pub theta: f64,
}

impl PlanarPose {
    pub fn new(x1: f64, x2: f64, theta: f64) -> Self {
        Self { x1, x2, theta }
    }

    /// Position part as a fixed-size vector.
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x1, self.x2)
    }

    /// Pose as the state vector `(x1, x2, theta)`.
    pub fn to_vector(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x1, self.x2, self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn point(x: f64, y: f64) -> DVector<f64> {
        DVector::from_column_slice(&[x, y])
    }

    #[test]
    fn unit_circle_matrix_is_identity() {
        let e = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(0, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn axis_aligned_semi_axes_give_diagonal_matrix() {
        let e = Ellipsoid::from_semi_axes(2.0, 1.0, 0.0, (0.5, -0.5)).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 0)], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(1, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(0, 1)], 0.0, epsilon = 1e-15);
        assert_eq!(e.center()[0], 0.5);
        assert_eq!(e.center()[1], -0.5);
    }

    #[test]
    fn quarter_turn_swaps_the_diagonal() {
        let e = Ellipsoid::from_semi_axes(2.0, 1.0, FRAC_PI_2, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.matrix()[(1, 1)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(e.matrix()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_semi_axes_are_rejected() {
        assert!(Ellipsoid::from_semi_axes(0.0, 1.0, 0.0, (0.0, 0.0)).is_err());
        assert!(Ellipsoid::from_semi_axes(1.0, -2.0, 0.0, (0.0, 0.0)).is_err());
        assert!(Ellipsoid::from_semi_axes(f64::NAN, 1.0, 0.0, (0.0, 0.0)).is_err());
    }

    #[test]
    fn asymmetric_and_indefinite_matrices_are_rejected() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        match Ellipsoid::new(asym, DVector::zeros(2)) {
            Err(Error::NotSymmetric(_)) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match Ellipsoid::new(indef, DVector::zeros(2)) {
            Err(Error::NotPositiveDefinite) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn center_dimension_must_match() {
        let m = DMatrix::<f64>::identity(2, 2);
        assert!(Ellipsoid::new(m, DVector::zeros(3)).is_err());
    }

    #[test]
    fn membership_center_boundary_outside() {
        let e = Ellipsoid::from_semi_axes(2.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        assert!(e.contains(&point(0.0, 0.0)).unwrap());
        assert_abs_diff_eq!(e.membership_value(&point(2.0, 0.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(e.contains(&point(2.0, 0.0)).unwrap());
        assert!(!e.contains(&point(2.0001, 0.0)).unwrap());
        assert_eq!(e.membership_value(&point(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn membership_dimension_mismatch_errors() {
        let e = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        let p3 = DVector::from_column_slice(&[0.0, 0.0, 0.0]);
        assert!(e.membership_value(&p3).is_err());
    }

    #[test]
    fn rigid_transform_moves_center_and_rotates_shape() {
        let e = Ellipsoid::from_semi_axes(2.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        let t = e.rigid_transform(FRAC_PI_2, (1.0, 2.0)).unwrap();
        assert_abs_diff_eq!(t.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.matrix()[(1, 1)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.center()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.center()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rigid_transform_preserves_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = Ellipsoid::from_semi_axes(1.5, 0.4, 0.3, (0.2, -0.7)).unwrap();
        let (rot, tx, ty) = (0.9, -0.3, 1.1);
        let t = e.rigid_transform(rot, (tx, ty)).unwrap();
        let r = nalgebra::Rotation2::new(rot).into_inner();
        for _ in 0..200 {
            let p = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let q = r * p + Vector2::new(tx, ty);
            let v0 = e.membership_value(&point(p.x, p.y)).unwrap();
            let v1 = t.membership_value(&point(q.x, q.y)).unwrap();
            assert_abs_diff_eq!(v0, v1, epsilon = 1e-9 * v0.abs().max(1.0));
        }
    }

    #[test]
    fn inflate_grows_semi_axes_by_margin() {
        let e = Ellipsoid::from_semi_axes(2.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        let g = e.inflate(1.0).unwrap();
        assert_abs_diff_eq!(g.matrix()[(0, 0)], 1.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.matrix()[(1, 1)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(g.matrix()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inflate_zero_margin_is_identity() {
        let e = Ellipsoid::from_semi_axes(1.3, 0.6, 0.8, (0.4, 0.1)).unwrap();
        let g = e.inflate(0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(g.matrix()[(i, j)], e.matrix()[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inflate_negative_margin_errors() {
        let e = Ellipsoid::from_semi_axes(1.0, 1.0, 0.0, (0.0, 0.0)).unwrap();
        assert!(e.inflate(-0.1).is_err());
    }

    #[test]
    fn eigendecomposition_recovers_semi_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.random_range(0.05..1.0);
            let b = rng.random_range(0.05..1.0);
            let th = rng.random_range(0.0..2.0 * PI);
            let e = Ellipsoid::from_semi_axes(a, b, th, (0.0, 0.0)).unwrap();
            let eig = e.matrix().clone().symmetric_eigen();
            let mut axes: Vec<f64> = eig.eigenvalues.iter().map(|ev| 1.0 / ev.sqrt()).collect();
            axes.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut expect = [a, b];
            expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_abs_diff_eq!(axes[0], expect[0], epsilon = 1e-10);
            assert_abs_diff_eq!(axes[1], expect[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn inflate_composes_additively() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let a = rng.random_range(0.05..1.0);
            let b = rng.random_range(0.05..1.0);
            let th = rng.random_range(0.0..2.0 * PI);
            let e = Ellipsoid::from_semi_axes(a, b, th, (0.3, -0.2)).unwrap();
            let m1 = rng.random_range(0.0..0.5);
            let m2 = rng.random_range(0.0..0.5);
            let two = e.inflate(m1).unwrap().inflate(m2).unwrap();
            let one = e.inflate(m1 + m2).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(two.matrix()[(i, j)], one.matrix()[(i, j)], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn bounding_half_widths_match_axis_aligned_case() {
        let e = Ellipsoid::from_semi_axes(2.0, 0.5, 0.0, (0.0, 0.0)).unwrap();
        let hw = e.bounding_half_widths();
        assert_abs_diff_eq!(hw[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hw[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn n_dimensional_construction_works() {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 4.0, 9.0]));
        let e = Ellipsoid::new(m, DVector::zeros(3)).unwrap();
        assert_eq!(e.dim(), 3);
        let p = DVector::from_column_slice(&[0.0, 0.0, 1.0 / 3.0]);
        assert_abs_diff_eq!(e.membership_value(&p).unwrap(), 1.0, epsilon = 1e-15);
    }
}
