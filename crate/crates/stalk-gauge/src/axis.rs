//! Stalk axis recovery via principal component analysis.
//!
//! The axis is the dominant eigenvector of the cloud's 3x3 covariance
//! matrix, computed with cyclic Jacobi rotations, which are unconditionally
//! stable at this size. The returned frame fixes every sign and basis choice
//! so downstream slicing is reproducible.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::{Error, Result};

/// Relative eigenvalue gap under which the principal direction is treated as
/// ambiguous (near-isotropic cloud) and reported as a warning.
pub const ISOTROPY_GAP: f64 = 1e-12;

/// Orthonormal frame anchored at the cloud centroid.
///
/// `direction` is the unit principal axis with a deterministic sign: its z
/// component is positive; on an exact zero the y component decides, then x.
/// `u` and `v` span the slice plane and `(direction, u, v)` is right-handed
/// with `direction = u x v`. `t_min`/`t_max` bound the axial projections
/// `(p - centroid) . direction` over the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct StalkAxis {
    pub centroid: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub t_min: f64,
    pub t_max: f64,
}

/// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as columns. Ties keep the pre-sort column order, so the
/// choice is deterministic even for repeated eigenvalues.
pub fn symmetric_eigen_3x3(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();
    let norm = a.norm();
    if norm > 0.0 {
        // Converged when the off-diagonal mass is at rounding level.
        let tol = 9.0 * (f64::EPSILON * norm) * (f64::EPSILON * norm);
        for _sweep in 0..64 {
            let off = a[(0, 1)] * a[(0, 1)] + a[(0, 2)] * a[(0, 2)] + a[(1, 2)] * a[(1, 2)];
            if off <= tol {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle that zeroes a[(p, q)].
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let sign = if theta < 0.0 { -1.0 } else { 1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let r = 3 - p - q; // the remaining row index
                let arp = a[(r, p)];
                let arq = a[(r, q)];

                a[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                a[(r, p)] = c * arp - s * arq;
                a[(p, r)] = a[(r, p)];
                a[(r, q)] = s * arp + c * arq;
                a[(q, r)] = a[(r, q)];

                for row in 0..3 {
                    let vp = v[(row, p)];
                    let vq = v[(row, q)];
                    v[(row, p)] = c * vp - s * vq;
                    v[(row, q)] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = Vector3::new(a[(order[0], order[0])], a[(order[1], order[1])], a[(order[2], order[2])]);
    let vectors = Matrix3::from_columns(&[
        v.column(order[0]).into_owned(),
        v.column(order[1]).into_owned(),
        v.column(order[2]).into_owned(),
    ]);
    (values, vectors)
}

fn orient(mut d: Vector3<f64>) -> Vector3<f64> {
    let flip = if d.z != 0.0 {
        d.z < 0.0
    } else if d.y != 0.0 {
        d.y < 0.0
    } else {
        d.x < 0.0
    };
    if flip {
        d = -d;
    }
    d
}

/// Fits the stalk axis to a cloud.
///
/// The covariance uses the 1/n normalization. Near-isotropic clouds (top two
/// eigenvalues within [`ISOTROPY_GAP`] relative) keep the lowest-index
/// eigenvector and log a warning rather than failing.
pub fn principal_axis(points: &[Vector3<f64>]) -> Result<StalkAxis> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(format!(
            "axis fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / n;

    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        let d = p - centroid;
        cov[(0, 0)] += d.x * d.x;
        cov[(0, 1)] += d.x * d.y;
        cov[(0, 2)] += d.x * d.z;
        cov[(1, 1)] += d.y * d.y;
        cov[(1, 2)] += d.y * d.z;
        cov[(2, 2)] += d.z * d.z;
    }
    cov /= n;
    cov[(1, 0)] = cov[(0, 1)];
    cov[(2, 0)] = cov[(0, 2)];
    cov[(2, 1)] = cov[(1, 2)];

    let (values, vectors) = symmetric_eigen_3x3(&cov);
    if !(values[0] > 0.0) || !values[0].is_finite() {
        return Err(Error::DegenerateGeometry(
            "cloud has no spatial extent; all points coincide".into(),
        ));
    }
    if values[0] - values[1] <= ISOTROPY_GAP * values[0] {
        log::warn!(
            "principal direction is ambiguous (eigenvalues {:.6e} and {:.6e}); keeping the first",
            values[0],
            values[1]
        );
    }
    let direction = orient(vectors.column(0).normalize());

    // Slice-plane basis from the canonical axis least aligned with the
    // direction; ties pick the lowest index.
    let basis = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut pick = 0;
    let mut best = f64::INFINITY;
    for (i, b) in basis.iter().enumerate() {
        let align = direction.dot(b).abs();
        if align < best {
            best = align;
            pick = i;
        }
    }
    let u = direction.cross(&basis[pick]).normalize();
    let v = direction.cross(&u);

    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for p in points {
        let t = (p - centroid).dot(&direction);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    Ok(StalkAxis { centroid, direction, u, v, t_min, t_max })
}

/// Endpoints of the axis segment spanned by the cloud.
pub fn axis_segment(axis: &StalkAxis) -> (Vector3<f64>, Vector3<f64>) {
    (
        axis.centroid + axis.direction * axis.t_min,
        axis.centroid + axis.direction * axis.t_max,
    )
}

/// In-plane coordinates ((p - c) . u, (p - c) . v) for each point.
pub fn project_to_slice_plane(points: &[Vector3<f64>], axis: &StalkAxis) -> Vec<Vector2<f64>> {
    points
        .iter()
        .map(|p| {
            let d = p - axis.centroid;
            Vector2::new(d.dot(&axis.u), d.dot(&axis.v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(rng: &mut SplitMix64, psd: bool) -> Matrix3<f64> {
        let b = Matrix3::from_fn(|_, _| rng.next_range(-2.0, 2.0));
        if psd {
            b.transpose() * b
        } else {
            (b + b.transpose()) * 0.5
        }
    }

    #[test]
    fn eigen_reconstructs_and_orders() {
        let mut rng = SplitMix64::new(101);
        for case in 0..1000 {
            let m = random_symmetric(&mut rng, case % 2 == 0);
            let (vals, vecs) = symmetric_eigen_3x3(&m);
            assert!(vals[0] >= vals[1] && vals[1] >= vals[2], "case {case}");
            let scale = vals[0].abs().max(vals[2].abs()).max(1e-300);
            for k in 0..3 {
                let v = vecs.column(k);
                let residual = (m * v - v * vals[k]).norm();
                assert!(residual <= 1e-9 * scale, "case {case} residual {residual:e}");
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            // Orthonormality of the eigenbasis.
            let gram = vecs.transpose() * vecs;
            assert!((gram - Matrix3::identity()).norm() < 1e-12, "case {case}");
        }
    }

    #[test]
    fn eigen_diagonal_passthrough() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 5.0, 3.0));
        let (vals, vecs) = symmetric_eigen_3x3(&m);
        assert_eq!(vals, Vector3::new(5.0, 3.0, 1.0));
        assert_eq!(vecs.column(0).abs(), Vector3::y());
        assert_eq!(vecs.column(1).abs(), Vector3::z());
        assert_eq!(vecs.column(2).abs(), Vector3::x());
    }

    #[test]
    fn axis_of_segment_on_x() {
        let pts = vec![
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ];
        let axis = principal_axis(&pts).unwrap();
        assert_eq!(axis.centroid, Vector3::zeros());
        assert_eq!(axis.direction, Vector3::x());
        assert_eq!(axis.u, Vector3::z());
        assert_eq!(axis.v, -Vector3::y());
        assert_eq!((axis.t_min, axis.t_max), (-1.0, 1.0));
        // Right-handed: direction = u x v.
        assert!((axis.u.cross(&axis.v) - axis.direction).norm() < 1e-15);

        let (a, b) = axis_segment(&axis);
        assert_eq!(a, Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(b, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn direction_sign_is_canonical() {
        // Mostly along -z: flipped to positive z.
        let d = Vector3::new(0.3, 0.2, -0.9).normalize();
        let pts: Vec<Vector3<f64>> = (-10..=10).map(|i| d * (i as f64 * 0.01)).collect();
        let axis = principal_axis(&pts).unwrap();
        assert!(axis.direction.z > 0.0);
        assert!((axis.direction.dot(&d).abs() - 1.0).abs() < 1e-12);

        // In-plane axis along -y: z is exactly zero, y decides.
        let pts: Vec<Vector3<f64>> =
            (-10..=10).map(|i| Vector3::new(0.0, -(i as f64) * 0.01, 0.0)).collect();
        let axis = principal_axis(&pts).unwrap();
        assert_eq!(axis.direction, Vector3::y());
    }

    #[test]
    fn isotropic_cloud_keeps_first_eigenvector() {
        // Exactly isotropic covariance; the tie resolves to the first
        // column, which the sign rule maps to +x.
        let pts = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.0, 0.0, -1.0),
        ];
        let axis = principal_axis(&pts).unwrap();
        assert_eq!(axis.direction, Vector3::x());
    }

    #[test]
    fn degenerate_clouds_are_rejected() {
        let pts = vec![Vector3::new(0.5, 0.5, 0.5); 5];
        assert!(matches!(principal_axis(&pts), Err(Error::DegenerateGeometry(_))));
        let pts = vec![Vector3::zeros(), Vector3::x()];
        assert!(matches!(principal_axis(&pts), Err(Error::TooFewPoints(_))));
    }

    #[test]
    fn axis_is_equivariant_under_rigid_motion() {
        let mut rng = SplitMix64::new(7);
        let pts: Vec<Vector3<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 / 199.0;
                let jitter = Vector3::new(
                    rng.next_range(-0.002, 0.002),
                    rng.next_range(-0.002, 0.002),
                    rng.next_range(-0.002, 0.002),
                );
                Vector3::new(0.02 * t, -0.03 * t, 0.2 * t) + jitter
            })
            .collect();
        let base = principal_axis(&pts).unwrap();

        let angle = 0.83;
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(1.0, 2.0, -0.5)),
            angle,
        );
        let shift = Vector3::new(0.4, -0.2, 1.1);
        let moved: Vec<Vector3<f64>> = pts.iter().map(|p| rot * p + shift).collect();
        let transformed = principal_axis(&moved).unwrap();

        let expected_line = rot * base.direction;
        assert!(
            (transformed.direction.dot(&expected_line).abs() - 1.0).abs() < 1e-9,
            "axis line must follow the rigid motion"
        );
        assert!((transformed.centroid - (rot * base.centroid + shift)).norm() < 1e-12);
        let len_base = base.t_max - base.t_min;
        let len_moved = transformed.t_max - transformed.t_min;
        assert!((len_base - len_moved).abs() < 1e-12);
    }

    #[test]
    fn plane_projection_preserves_in_plane_distances() {
        let pts = vec![
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ];
        let axis = principal_axis(&pts).unwrap();
        // Points offset strictly within the slice plane keep their norms.
        let q = axis.centroid + axis.u * 0.3 + axis.v * (-0.4);
        let proj = project_to_slice_plane(&[q], &axis);
        assert!((proj[0] - Vector2::new(0.3, -0.4)).norm() < 1e-15);
        assert!(((q - axis.centroid).norm() - proj[0].norm()).abs() < 1e-15);
    }
}
