//! Fiber metrics, the metric pairing of polyvector-valued forms, the Hodge
//! star on bundle-valued forms, L² inner products by periodic trapezoid
//! quadrature, and the codifferential.

use crate::calculus::{dnabla, DegreeMask};
use crate::error::{Error, Result};
use crate::exterior::{concat_sign, tables, FormField, ValueKind};
use crate::geometry::{ChartGeometry, Connection};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Gram matrix of the basis `{dx^I}` of degree-`k` forms for the metric
/// induced by `g^{-1}`: entry `[I][I']` is `det(g^{-1}[I, I'])`.
pub fn form_gram(geom: &ChartGeometry, p: usize, k: usize) -> Vec<f64> {
    minors_gram(geom.n(), geom.inverse_metric(p), k, geom.is_euclidean())
}

/// Gram matrix of the fiber basis of a value kind at node `p`.
///
/// Polyvectors use the minors of `g`, endomorphisms the product metric
/// `g_ac g^{bd}` on entries `a * n + b`.
pub fn value_gram(geom: &ChartGeometry, p: usize, kind: ValueKind) -> Vec<f64> {
    let n = geom.n();
    match kind {
        ValueKind::Scalar => vec![1.0],
        ValueKind::Tangent => minors_gram(n, geom.metric(p), 1, geom.is_euclidean()),
        ValueKind::Polyvector(q) => minors_gram(n, geom.metric(p), q as usize, geom.is_euclidean()),
        ValueKind::Endomorphism => {
            let (g, gi) = (geom.metric(p), geom.inverse_metric(p));
            let f = n * n;
            let mut out = vec![0.0; f * f];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            out[(a * n + b) * f + c * n + d] = g[a * n + c] * gi[b * n + d];
                        }
                    }
                }
            }
            out
        }
    }
}

fn minors_gram(n: usize, m: &[f64], k: usize, identity: bool) -> Vec<f64> {
    let t = tables(n);
    let dim = t.dim(k);
    let mut out = vec![0.0; dim * dim];
    if identity {
        for i in 0..dim {
            out[i * dim + i] = 1.0;
        }
        return out;
    }
    let axes: Vec<Vec<usize>> =
        (0..dim).map(|i| (0..n).filter(|a| t.basis[k][i] & (1 << a) != 0).collect()).collect();
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = if k == 0 {
                1.0
            } else {
                DMatrix::from_fn(k, k, |r, c| m[axes[i][r] * n + axes[j][c]]).determinant()
            };
        }
    }
    out
}

fn bilinear(gram: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        let row = &gram[i * d..(i + 1) * d];
        s += xi * row.iter().zip(y).map(|(g, v)| g * v).sum::<f64>();
    }
    s
}

/// Pointwise `Σ ⟨dx^I, dx^{I'}⟩ ⟨a_I, b_{I'}⟩` over the coefficients of two
/// same-shape node slices.
fn node_inner(geom: &ChartGeometry, p: usize, k: usize, kind: ValueKind, a: &[f64], b: &[f64]) -> f64 {
    let n = geom.n();
    let fdim = kind.fiber_dim(n);
    let dim = tables(n).dim(k);
    if geom.is_euclidean() && kind != ValueKind::Endomorphism {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let fg = form_gram(geom, p, k);
    let vg = value_gram(geom, p, kind);
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let w = fg[i * dim + j];
            if w != 0.0 {
                s += w * bilinear(&vg, &a[i * fdim..(i + 1) * fdim], &b[j * fdim..(j + 1) * fdim]);
            }
        }
    }
    s
}

fn check_pair(a: &FormField, b: &FormField) -> Result<()> {
    if !a.same_geometry(b) {
        return Err(Error::GeometryMismatch);
    }
    if a.degree() != b.degree() || !a.kind().same_layout(b.kind()) {
        return Err(Error::Degree(format!(
            "pairing a degree-{} {} form with a degree-{} {} form",
            a.degree(),
            a.kind(),
            b.degree(),
            b.kind()
        )));
    }
    Ok(())
}

/// Pointwise inner product `⟨a, b⟩_g` as a scalar 0-form.
pub fn fiber_inner(a: &FormField, b: &FormField) -> Result<FormField> {
    check_pair(a, b)?;
    let geom = a.geometry().clone();
    let (k, kind) = (a.degree(), a.kind());
    a.map_nodes(0, ValueKind::Scalar, |p, x, o| o[0] = node_inner(&geom, p, k, kind, x, b.node(p)))
        .map(|out| out.with_margin(a.margin().max(b.margin())))
}

/// `a ∧_g b`: shuffle product of the form parts with the values contracted
/// by the fiber metric. Both operands take values in the same `Λ^p`.
pub fn wedge_g(a: &FormField, b: &FormField) -> Result<FormField> {
    let (Some(pa), Some(pb)) = (a.kind().poly_degree(), b.kind().poly_degree()) else {
        return Err(Error::Kind("wedge_g pairs polyvector-valued forms".into()));
    };
    if pa != pb || pa == 0 {
        return Err(Error::Kind(format!("wedge_g needs equal polyvector degrees ≥ 1, got {pa} and {pb}")));
    }
    let geom = a.geometry().clone();
    let (k, l, kind) = (a.degree(), b.degree(), a.kind());
    let n = geom.n();
    let fdim = kind.fiber_dim(n);
    let t = tables(n);
    let mut out = a.zip_with(b, k + l, ValueKind::Scalar, |_, _, _| {})?;
    let stride = out.stride();
    if stride > 0 {
        out.data_mut().par_chunks_mut(stride).enumerate().for_each(|(p, o)| {
            let vg = value_gram(&geom, p, kind);
            let (x, y) = (a.node(p), b.node(p));
            for term in t.shuffles(k, l) {
                let (li, ri) = (term.left as usize, term.right as usize);
                let v = bilinear(&vg, &x[li * fdim..(li + 1) * fdim], &y[ri * fdim..(ri + 1) * fdim]);
                o[term.out as usize] += term.sign * v;
            }
        });
    }
    Ok(out)
}

/// Hodge star acting on the form part, identity on values:
/// `(⋆ω)_J = √g Σ_{I'} sign(I, J) G[I][I'] ω_{I'}` with `I` the complement of `J`.
pub fn hodge_star(a: &FormField) -> Result<FormField> {
    let geom = a.geometry().clone();
    let n = geom.n();
    let k = a.degree();
    if k > n {
        return Err(Error::Degree(format!("Hodge star of a degree-{k} form in dimension {n}")));
    }
    let kind = a.kind();
    let fdim = kind.fiber_dim(n);
    let t = tables(n);
    let full: u32 = (1u32 << n) - 1;
    let dim = t.dim(k);
    a.map_nodes(n - k, kind, |p, x, o| {
        let fg = form_gram(&geom, p, k);
        let vol = geom.sqrt_det(p);
        for (jpos, &jmask) in t.basis[n - k].iter().enumerate() {
            let imask = full & !jmask;
            let ipos = t.pos(imask);
            let s = vol * concat_sign(imask, jmask);
            for ip in 0..dim {
                let w = fg[ipos * dim + ip];
                if w == 0.0 {
                    continue;
                }
                for c in 0..fdim {
                    o[jpos * fdim + c] += s * w * x[ip * fdim + c];
                }
            }
        }
    })
}

fn weighted_sum(geom: &ChartGeometry, vals: &[f64]) -> Result<f64> {
    let w = geom.quadrature_weight()?;
    // fixed summation order keeps reports bit-reproducible
    Ok(w * vals.iter().sum::<f64>())
}

/// `∫ ⟨a, b⟩_g vol_g` by trapezoid quadrature.
pub fn l2_inner(a: &FormField, b: &FormField) -> Result<f64> {
    check_pair(a, b)?;
    let geom = a.geometry();
    geom.quadrature_weight()?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let (k, kind) = (a.degree(), a.kind());
    let vals: Vec<f64> = (0..geom.node_count())
        .into_par_iter()
        .map(|p| geom.sqrt_det(p) * node_inner(geom, p, k, kind, a.node(p), b.node(p)))
        .collect();
    weighted_sum(geom, &vals)
}

/// `∫ a ∧_g ⋆b`, the same number computed through the star.
pub fn l2_inner_via_star(a: &FormField, b: &FormField) -> Result<f64> {
    check_pair(a, b)?;
    let geom = a.geometry();
    geom.quadrature_weight()?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let top = if a.kind() == ValueKind::Scalar {
        a.wedge_scalar(&hodge_star(b)?)?
    } else {
        wedge_g(a, &hodge_star(b)?)?
    };
    weighted_sum(geom, top.data())
}

pub fn l2_norm(a: &FormField) -> Result<f64> {
    Ok(l2_inner(a, a)?.max(0.0).sqrt())
}

/// `δ^∇ = -⋆ d^∇ ⋆` (even dimension), zero on degrees whose adjoint the
/// mask removes. Only defined for the Levi-Civita connection.
pub fn codifferential(gamma: &FormField, mask: &DegreeMask) -> Result<FormField> {
    let geom = gamma.geometry();
    if geom.connection() != Connection::LeviCivita {
        return Err(Error::NonMetricConnection);
    }
    let k = gamma.degree();
    if k == 0 {
        return Err(Error::Degree("codifferential of a 0-form".into()));
    }
    if geom.n() % 2 != 0 {
        return Err(Error::Dimension("codifferential sign convention assumes even dimension".into()));
    }
    if mask.kills_adjoint(k) || k > geom.n() {
        let margin = gamma.margin() + usize::from(!geom.integrable());
        return Ok(FormField::zeros(geom, k - 1, gamma.kind())?.with_margin(margin));
    }
    Ok(hodge_star(&dnabla(&hodge_star(gamma)?, &DegreeMask::none())?)?.scale(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{make_constant_ac, make_flat_torus, make_sphere_chart, make_warped_torus, standard_complex};
    use std::f64::consts::PI;

    #[test]
    fn flat_pairings() {
        let g = make_flat_torus(2, 4).unwrap();
        let a = FormField::from_fn(&g, 1, ValueKind::Tangent, |_, o| o[0] = 1.0).unwrap(); // dx0 ⊗ ∂0
        let b = FormField::from_fn(&g, 1, ValueKind::Tangent, |_, o| o[2] = 1.0).unwrap(); // dx1 ⊗ ∂0
        let c = FormField::from_fn(&g, 1, ValueKind::Tangent, |_, o| o[3] = 1.0).unwrap(); // dx1 ⊗ ∂1
        assert_eq!(wedge_g(&a, &b).unwrap().node(0), &[1.0]);
        assert_eq!(wedge_g(&a, &c).unwrap().node(0), &[0.0]);
        assert_eq!(fiber_inner(&a, &a).unwrap().node(3), &[1.0]);
        let one = FormField::from_fn(&g, 0, ValueKind::Tangent, |_, o| o[0] = 1.0).unwrap();
        assert_eq!(hodge_star(&one).unwrap().node(2), &[1.0, 0.0]);
    }

    #[test]
    fn flat_bivector_gram_is_identity() {
        let g = make_flat_torus(4, 4).unwrap();
        let gram = value_gram(&g, 0, ValueKind::Polyvector(2));
        let warped = make_warped_torus(4, 4, 0.0).unwrap();
        assert_eq!(gram, value_gram(&warped, 0, ValueKind::Polyvector(2)));
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(gram[i * 6 + j], f64::from(i == j));
            }
        }
    }

    #[test]
    fn wedge_g_matches_double_sum() {
        let g = make_warped_torus(4, 4, 0.3).unwrap();
        let a = fixtures::smooth_field(&g, 1, ValueKind::Tangent, 1).unwrap();
        let b = fixtures::smooth_field(&g, 2, ValueKind::Tangent, 2).unwrap();
        let w = wedge_g(&a, &b).unwrap();
        let n = 4;
        let t = tables(n);
        for p in [0, 77, 200] {
            let gm = g.metric(p);
            let mut expected = vec![0.0; 4];
            // out over every (i, J) with values contracted by g_ab
            for i in 0..n {
                for (jp, &jm) in t.basis[2].iter().enumerate() {
                    if jm & (1 << i) != 0 {
                        continue;
                    }
                    let om = jm | (1 << i);
                    let s = concat_sign(1 << i, jm);
                    let mut v = 0.0;
                    for x in 0..n {
                        for y in 0..n {
                            v += a.node(p)[i * n + x] * gm[x * n + y] * b.node(p)[jp * n + y];
                        }
                    }
                    expected[t.pos(om)] += s * v;
                }
            }
            for (e, o) in expected.iter().zip(w.node(p)) {
                assert!((e - o).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn star_defining_property() {
        for g in [make_flat_torus(4, 4).unwrap(), make_warped_torus(4, 4, 0.3).unwrap()] {
            for k in 0..=4 {
                for kind in [ValueKind::Tangent, ValueKind::Polyvector(2)] {
                    let a = fixtures::smooth_field(&g, k, kind, 10 + k as u64).unwrap();
                    let b = fixtures::smooth_field(&g, k, kind, 20 + k as u64).unwrap();
                    let lhs = wedge_g(&a, &hodge_star(&b).unwrap()).unwrap();
                    let rhs = fiber_inner(&a, &b).unwrap();
                    for p in 0..g.node_count() {
                        let expected = rhs.node(p)[0] * g.sqrt_det(p);
                        assert!((lhs.node(p)[0] - expected).abs() <= 1e-10 * expected.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn star_squared_sign_law() {
        let g = make_warped_torus(4, 4, 0.3).unwrap();
        for k in 0..=4 {
            let a = fixtures::smooth_field(&g, k, ValueKind::Tangent, k as u64).unwrap();
            let ss = hodge_star(&hodge_star(&a).unwrap()).unwrap();
            let sign = if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
            assert!(ss.sub(&a.scale(sign)).unwrap().max_abs() < 1e-12 * a.max_abs().max(1.0));
        }
    }

    #[test]
    fn l2_examples() {
        let g = make_flat_torus(2, 8).unwrap();
        let j = make_constant_ac(&g, &standard_complex(2)).unwrap();
        let v = l2_inner(j.field(), j.field()).unwrap();
        assert!((v - 2.0 * 4.0 * PI * PI).abs() < 1e-10);
        let z = FormField::zeros(&g, 1, ValueKind::Tangent).unwrap();
        assert_eq!(l2_inner(&z, &z).unwrap(), 0.0);
        let s = make_sphere_chart(2, 5, 1.0).unwrap();
        let f = FormField::zeros(&s, 1, ValueKind::Tangent).unwrap();
        assert!(matches!(l2_inner(&f, &f), Err(Error::IntegrationUnsupported)));
    }

    #[test]
    fn star_and_direct_paths_agree() {
        let g = make_warped_torus(4, 6, 0.25).unwrap();
        for k in 0..=4 {
            let a = fixtures::smooth_field(&g, k, ValueKind::Tangent, 3).unwrap();
            let b = fixtures::smooth_field(&g, k, ValueKind::Tangent, 4).unwrap();
            let (x, y) = (l2_inner(&a, &b).unwrap(), l2_inner_via_star(&a, &b).unwrap());
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{x} {y}");
            assert!((x - l2_inner(&b, &a).unwrap()).abs() <= 1e-12 * x.abs().max(1.0));
            assert!(l2_inner(&a, &a).unwrap() > 0.0);
        }
    }

    #[test]
    fn codifferential_is_the_discrete_adjoint_on_flat_tori() {
        let g = make_flat_torus(4, 6).unwrap();
        for k in 1..=4 {
            let a = fixtures::smooth_field(&g, k - 1, ValueKind::Tangent, k as u64).unwrap();
            let b = fixtures::smooth_field(&g, k, ValueKind::Tangent, 10 + k as u64).unwrap();
            let lhs = l2_inner(&dnabla(&a, &DegreeMask::none()).unwrap(), &b).unwrap();
            let rhs = l2_inner(&a, &codifferential(&b, &DegreeMask::none()).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "k={k}: {lhs} {rhs}");
        }
        let c = make_constant_ac(&g, &standard_complex(4)).unwrap();
        assert_eq!(codifferential(c.field(), &DegreeMask::none()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn adjointness_error_is_second_order_on_warped_torus() {
        let err = |res| {
            let g = make_warped_torus(4, res, 0.2).unwrap();
            let a = fixtures::smooth_field(&g, 1, ValueKind::Tangent, 1).unwrap();
            let b = fixtures::smooth_field(&g, 2, ValueKind::Tangent, 2).unwrap();
            let lhs = l2_inner(&dnabla(&a, &DegreeMask::none()).unwrap(), &b).unwrap();
            let rhs = l2_inner(&a, &codifferential(&b, &DegreeMask::none()).unwrap()).unwrap();
            (lhs - rhs).abs()
        };
        let (e1, e2) = (err(8), err(16));
        assert!((e1 / e2).log2() >= 1.9, "{e1} {e2}");
    }

    #[test]
    fn masked_codifferential() {
        let g = make_flat_torus(6, 4).unwrap();
        let f = fixtures::smooth_field(&g, 5, ValueKind::Tangent, 1).unwrap();
        let m = DegreeMask::masked(&[5]).unwrap();
        let d = codifferential(&f, &m).unwrap();
        assert_eq!(d.degree(), 4);
        assert_eq!(d.max_abs(), 0.0);
        let inj = g.with_christoffel(vec![0.0; g.node_count() * 216]).unwrap();
        let h = FormField::zeros(&std::sync::Arc::new(inj), 2, ValueKind::Tangent).unwrap();
        assert!(matches!(codifferential(&h, &DegreeMask::none()), Err(Error::NonMetricConnection)));
    }
}
