//! Exact element integrals for linear Lagrange basis functions.

use crate::error::{Error, Result};
use crate::mesh::geometry::{cross, dot, norm, signed_volume, sub, triangle_area, Point};

/// A dense element block together with the global node ids of its rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrix<const N: usize> {
    pub nodes: [usize; N],
    pub values: [[f64; N]; N],
}

impl<const N: usize> ElementMatrix<N> {
    pub fn scaled(mut self, s: f64) -> Self {
        for row in self.values.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }
}

/// Volume and constant barycentric gradients of a tetrahedron.
pub fn tet_gradients(coords: &[Point; 4]) -> Result<(f64, [Point; 4])> {
    let vol6 = 6.0 * signed_volume(coords);
    let e1 = sub(coords[1], coords[0]);
    let e2 = sub(coords[2], coords[0]);
    let e3 = sub(coords[3], coords[0]);
    let scale = [e1, e2, e3].iter().map(|e| norm(*e)).fold(0.0_f64, f64::max);
    if !(vol6.abs() > 1e-14 * scale.powi(3)) {
        return Err(Error::DegenerateElement {
            element: usize::MAX,
            message: format!("tet volume {:e}", vol6 / 6.0),
        });
    }
    // Rows of the inverse Jacobian are the gradients of barycentrics 1..3.
    let g1 = cross(e2, e3).map(|x| x / vol6);
    let g2 = cross(e3, e1).map(|x| x / vol6);
    let g3 = cross(e1, e2).map(|x| x / vol6);
    let g0 = [0, 1, 2].map(|k| -(g1[k] + g2[k] + g3[k]));
    Ok((vol6.abs() / 6.0, [g0, g1, g2, g3]))
}

/// `K_ij = V grad(psi_i) . grad(psi_j)` for P1 on a tetrahedron.
pub fn element_stiffness(coords: &[Point; 4]) -> Result<[[f64; 4]; 4]> {
    let (vol, g) = tet_gradients(coords)?;
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let v = vol * dot(g[i], g[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    Ok(k)
}

/// Consistent P1 mass on a tetrahedron, `(V / 20)(1 + delta_ij)`.
pub fn element_mass(coords: &[Point; 4]) -> Result<[[f64; 4]; 4]> {
    let (vol, _) = tet_gradients(coords)?;
    let mut m = [[vol / 20.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = vol / 10.0;
    }
    Ok(m)
}

/// Consistent P1 mass on a triangle of the given area.
pub fn face_mass_from_area(area: f64) -> [[f64; 3]; 3] {
    let off = area / 12.0;
    let mut m = [[off; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * off;
    }
    m
}

/// `(area / 12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn face_mass(coords: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let area = triangle_area(coords[0], coords[1], coords[2]);
    let scale = (0..3)
        .map(|i| norm(sub(coords[i], coords[(i + 1) % 3])))
        .fold(0.0_f64, f64::max);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::DegenerateElement {
            element: usize::MAX,
            message: format!("triangle area {area:e}"),
        });
    }
    Ok(face_mass_from_area(area))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF_TET: [Point; 4] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];

    #[test]
    fn reference_tet_stiffness() {
        let k = element_stiffness(&REF_TET).unwrap();
        let expect = [
            [0.5, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 6.0],
            [-1.0 / 6.0, 1.0 / 6.0, 0.0, 0.0],
            [-1.0 / 6.0, 0.0, 1.0 / 6.0, 0.0],
            [-1.0 / 6.0, 0.0, 0.0, 1.0 / 6.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_symmetric() {
        let t = [[0.1, 0.2, -0.3], [1.3, 0.1, 0.2], [0.2, 0.9, 0.1], [0.4, 0.3, 1.7]];
        let k = element_stiffness(&t).unwrap();
        for i in 0..4 {
            assert!(k[i].iter().sum::<f64>().abs() < 1e-12);
            for j in 0..4 {
                assert!((k[i][j] - k[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_scales_linearly() {
        let t = [[0.1, 0.2, -0.3], [1.3, 0.1, 0.2], [0.2, 0.9, 0.1], [0.4, 0.3, 1.7]];
        let s = 2.5;
        let ts = t.map(|p| p.map(|x| x * s));
        let (k, ks) = (element_stiffness(&t).unwrap(), element_stiffness(&ts).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert!((ks[i][j] - s * k[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn orientation_does_not_matter() {
        let flipped = [REF_TET[0], REF_TET[1], REF_TET[3], REF_TET[2]];
        let k = element_stiffness(&flipped).unwrap();
        assert!((k[0][0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_tet_rejected() {
        let flat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert!(element_stiffness(&flat).is_err());
    }

    #[test]
    fn unit_right_triangle_mass() {
        let m = face_mass(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((m[i][j] - e).abs() < 1e-14);
            }
            assert!((m[i].iter().sum::<f64>() - 0.5 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn doubled_area_doubles_mass() {
        let a = face_mass(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let b = face_mass(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b[i][j] - 2.0 * a[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_area_triangle_rejected() {
        assert!(face_mass(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn tet_mass_rows() {
        let m = element_mass(&REF_TET).unwrap();
        for row in m {
            assert!((row.iter().sum::<f64>() - (1.0 / 6.0) / 4.0).abs() < 1e-15);
        }
    }
}
