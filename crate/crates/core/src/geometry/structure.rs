use super::{octonion, ChartGeometry};
use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Acceptance threshold of the pointwise condition `A∘A = -Id`.
pub const AC_TOLERANCE: f64 = 1e-10;

/// A tangent-valued 1-form squaring to minus the identity at every node.
///
/// Sample `j * n + k` at a node is `A(∂_j)^k`, so the endomorphism matrix has
/// `M[k][j]` equal to that sample.
#[derive(Clone, Debug)]
pub struct ACStructure {
    field: FormField,
    residual: f64,
}

impl ACStructure {
    pub fn new(field: FormField) -> Result<Self> {
        let residual = check_ac(&field)?;
        if residual > AC_TOLERANCE {
            return Err(Error::NotAlmostComplex { residual });
        }
        Ok(Self { field, residual })
    }

    /// Builds the structure from the endomorphism matrix at each point.
    pub fn from_matrices<F>(geom: &Arc<ChartGeometry>, matrix: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Sync,
    {
        let n = geom.n();
        let field = FormField::from_fn(geom, 1, ValueKind::Tangent, |x, out| {
            let m = matrix(x);
            for j in 0..n {
                for k in 0..n {
                    out[j * n + k] = m[(k, j)];
                }
            }
        })?;
        Self::new(field)
    }

    pub fn field(&self) -> &FormField {
        &self.field
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn geometry(&self) -> &Arc<ChartGeometry> {
        self.field.geometry()
    }

    pub fn matrix(&self, p: usize) -> DMatrix<f64> {
        node_matrix(&self.field, p)
    }

    /// The same data as an endomorphism-valued 0-form.
    pub fn as_endomorphism(&self) -> FormField {
        let n = self.field.n();
        self.field
            .map_nodes(0, ValueKind::Endomorphism, |_, a, out| {
                for r in 0..n {
                    for c in 0..n {
                        out[r * n + c] = a[c * n + r];
                    }
                }
            })
            .expect("endomorphism layout")
    }
}

fn node_matrix(field: &FormField, p: usize) -> DMatrix<f64> {
    let n = field.n();
    let a = field.node(p);
    DMatrix::from_fn(n, n, |k, j| a[j * n + k])
}

/// Largest operator norm of `A∘A + Id` over the valid nodes.
pub fn check_ac(field: &FormField) -> Result<f64> {
    if field.degree() != 1 || field.kind() != ValueKind::Tangent {
        return Err(Error::Kind(format!(
            "almost-complex candidates are tangent-valued 1-forms, got a degree-{} {} field",
            field.degree(),
            field.kind()
        )));
    }
    let n = field.n();
    let mut worst = 0.0f64;
    for p in field.valid_nodes() {
        let m = node_matrix(field, p);
        let defect = &m * &m + DMatrix::identity(n, n);
        worst = worst.max(defect.singular_values().max());
    }
    Ok(worst)
}

/// Block-diagonal rotation by a quarter turn, row-major.
pub fn standard_complex(n: usize) -> Vec<f64> {
    let mut j = vec![0.0; n * n];
    for b in 0..n / 2 {
        let (r, s) = (2 * b, 2 * b + 1);
        j[r * n + s] = -1.0;
        j[s * n + r] = 1.0;
    }
    j
}

/// Constant structure `A(x) = J0` for a row-major matrix `J0`.
pub fn make_constant_ac(geom: &Arc<ChartGeometry>, j0: &[f64]) -> Result<ACStructure> {
    let n = geom.n();
    if j0.len() != n * n {
        return Err(Error::Dimension(format!("structure matrix has {} entries, expected {}", j0.len(), n * n)));
    }
    let m = DMatrix::from_row_slice(n, n, j0);
    let residual = (&m * &m + DMatrix::identity(n, n)).singular_values().max();
    if residual > 1e-12 {
        return Err(Error::NotAlmostComplex { residual });
    }
    ACStructure::from_matrices(geom, |_| m.clone())
}

/// Inverse stereographic projection `R^6 → S^6 ⊂ R^7` and its Jacobian.
fn stereographic(x: &[f64]) -> ([f64; 7], DMatrix<f64>) {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s = 1.0 + r2;
    let mut p = [0.0; 7];
    for i in 0..6 {
        p[i] = 2.0 * x[i] / s;
    }
    p[6] = (r2 - 1.0) / s;
    let jac = DMatrix::from_fn(7, 6, |a, j| {
        if a < 6 {
            let d = if a == j { 2.0 / s } else { 0.0 };
            d - 4.0 * x[a] * x[j] / (s * s)
        } else {
            4.0 * x[j] / (s * s)
        }
    });
    (p, jac)
}

/// The almost-complex structure `J_p v = p × v` of `S^6 ⊂ Im(O)`, read in
/// the stereographic chart.
pub fn make_s6_octonionic_ac(geom: &Arc<ChartGeometry>) -> Result<ACStructure> {
    if geom.n() != 6 {
        return Err(Error::Dimension(format!("octonionic structure lives on a 6-dimensional chart, got {}", geom.n())));
    }
    ACStructure::from_matrices(geom, |x| {
        let (p, dp) = stereographic(x);
        let jp = DMatrix::from_row_slice(7, 7, &octonion::cross_matrix(&p));
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let lambda = 4.0 / (1.0 + r2).powi(2);
        dp.transpose() * jp * &dp / lambda
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_flat_torus, make_sphere_chart};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_structures() {
        let t2 = make_flat_torus(2, 8).unwrap();
        let a = make_constant_ac(&t2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        assert_eq!(a.residual(), 0.0);
        let t4 = make_flat_torus(4, 4).unwrap();
        assert_eq!(make_constant_ac(&t4, &standard_complex(4)).unwrap().residual(), 0.0);
        match make_constant_ac(&t2, &[1.0, 0.0, 0.0, 1.0]) {
            Err(Error::NotAlmostComplex { residual }) => assert!((residual - 2.0).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_field_has_residual_two() {
        let t2 = make_flat_torus(2, 4).unwrap();
        let id = FormField::from_fn(&t2, 1, ValueKind::Tangent, |_, o| {
            o.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        })
        .unwrap();
        assert!((check_ac(&id).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn stereographic_jacobian_is_conformal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (p, dp) = stereographic(&x);
            assert!((p.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-14);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let gram = dp.transpose() * &dp;
            let expected = DMatrix::identity(6, 6) * (4.0 / (1.0 + r2).powi(2));
            assert!((gram - expected).amax() < 1e-14);
            // Jacobian against a central difference
            let h = 1e-6;
            for j in 0..6 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let (pp, _) = stereographic(&xp);
                let (pm, _) = stereographic(&xm);
                for a in 0..7 {
                    assert!(((pp[a] - pm[a]) / (2.0 * h) - dp[(a, j)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn octonionic_structure_is_orthogonal_and_almost_complex() {
        let geom = make_sphere_chart(6, 3, 1.5).unwrap();
        let a = make_s6_octonionic_ac(&geom).unwrap();
        assert!(a.residual() <= 1e-10);
        for p in (0..geom.node_count()).step_by(7) {
            let m = a.matrix(p);
            let g = DMatrix::from_row_slice(6, 6, geom.metric(p));
            assert!((m.transpose() * &g * &m - &g).amax() <= 1e-9);
        }
        assert!(make_s6_octonionic_ac(&make_flat_torus(4, 4).unwrap()).is_err());
    }
}
