use super::{graded_integrability, functional_value, Family, Functional, FunctionalVariant, GradedField};
use crate::calculus::{dnabla, DegreeMask};
use crate::error::{Error, Result};
use crate::exterior::{binomial, FormField, PointForm, ValueKind};
use crate::integration::{codifferential, form_gram, l2_inner};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

/// `out[I n + a] = Σ G[I][J] g[a][b] v[J n + b]`.
fn kron_apply(forms: &[f64], dim: usize, fiber: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; dim * n];
    for j in 0..dim {
        for a in 0..n {
            w[j * n + a] = (0..n).map(|b| fiber[a * n + b] * v[j * n + b]).sum();
        }
    }
    let mut out = vec![0.0; dim * n];
    for i in 0..dim {
        for j in 0..dim {
            let c = forms[i * dim + j];
            if c != 0.0 {
                for a in 0..n {
                    out[i * n + a] += c * w[j * n + a];
                }
            }
        }
    }
    out
}

/// Pointwise metric adjoint of a linear bundle map `T` from tangent-valued
/// `in_degree`-forms to the degree and kind of `eta`, applied to `eta`.
/// `map(p, x)` evaluates `T` at node `p`; it is probed on basis elements
/// and `T* = H_in⁻¹ Tᵀ H_out` with `H` the fiber Gram matrices.
pub fn pointwise_adjoint<F>(eta: &FormField, in_degree: usize, map: F) -> Result<FormField>
where
    F: Fn(usize, &PointForm) -> Result<PointForm> + Sync,
{
    if !eta.kind().same_layout(ValueKind::Tangent) {
        return Err(Error::Kind("pointwise adjoints act on tangent-valued forms".into()));
    }
    let geom = eta.geometry().clone();
    let n = geom.n();
    let din = binomial(n, in_degree);
    let dout = binomial(n, eta.degree());
    if din == 0 || dout == 0 {
        return Ok(FormField::zeros(&geom, in_degree, ValueKind::Tangent)?.with_margin(eta.margin()));
    }
    let euclid = geom.is_euclidean();
    let nodes: Vec<Vec<f64>> = (0..geom.node_count())
        .into_par_iter()
        .map(|p| {
            let y = if euclid {
                eta.node(p).to_vec()
            } else {
                kron_apply(&form_gram(&geom, p, eta.degree()), dout, geom.metric(p), n, eta.node(p))
            };
            let mut r = vec![0.0; din * n];
            let mut e = PointForm::zeros(n, in_degree, ValueKind::Tangent)?;
            for (c, rc) in r.iter_mut().enumerate() {
                e.coeffs_mut()[c] = 1.0;
                let image = map(p, &e)?;
                e.coeffs_mut()[c] = 0.0;
                if image.degree() != eta.degree() || image.coeffs().len() != y.len() {
                    return Err(Error::Degree(format!(
                        "bundle map produced degree {} where {} was expected",
                        image.degree(),
                        eta.degree()
                    )));
                }
                *rc = image.coeffs().iter().zip(&y).map(|(a, b)| a * b).sum();
            }
            if euclid {
                return Ok(r);
            }
            let gram = DMatrix::from_row_slice(din, din, &form_gram(&geom, p, in_degree));
            let inv = gram.try_inverse().ok_or(Error::SingularMetric { node: p })?;
            let inv: Vec<f64> = inv.transpose().iter().copied().collect();
            Ok(kron_apply(&inv, din, geom.inverse_metric(p), n, &r))
        })
        .collect::<Result<_>>()?;
    let data = nodes.into_iter().flatten().collect();
    Ok(FormField::from_data(&geom, in_degree, ValueKind::Tangent, data)?.with_margin(eta.margin()))
}

/// Gradient of the functional with respect to `⟨⟨·,·⟩⟩`, on all degrees.
///
/// With `D = d_m γ_k` (masked derivative) and target degree `t` (`3k` for
/// the α families, `3k-1` for the plain one) the degree-`k` component is
/// `[k odd](δ_m L*(γ_t) + M*(γ_t)) − δ_m N*(γ_{k+s}) + (I_γ)_k`, where
/// `L(B)` and `M(b)` are the linearizations of the cubic term in `dγ_k`
/// and `γ_k`, `N` is `α∧·` (`s = 2`) or the identity (`s = 1`).
pub fn el_derivative(gamma: &GradedField, functional: &Functional) -> Result<GradedField> {
    let geom = gamma.geometry().clone();
    geom.quadrature_weight()?;
    let n = geom.n();
    let mask = functional.mask();
    let family = functional.family();
    let alpha = functional.alpha();
    let mut out = graded_integrability(gamma, functional)?;

    let shift = if family == Family::Plain { 1 } else { 2 };
    for k in 0..n {
        // N-term: pairs d_m β_k with γ_{k+s}.
        if let Some(eta) = gamma.component(k + shift) {
            let nstar = match alpha {
                Some(a) if family != Family::Plain => {
                    pointwise_adjoint(eta, k + 1, |p, x| a.point(p).wedge_scalar(x))?
                }
                _ => eta.clone(),
            };
            out.accumulate(codifferential(&nstar, mask)?.scale(-1.0))?;
        }
        if k % 2 == 0 {
            continue;
        }
        let target = if family == Family::Plain { 3 * k - 1 } else { 3 * k };
        let (Some(gk), Some(eta)) = (gamma.component(k), gamma.component(target)) else {
            continue;
        };
        let d = dnabla(gk, mask)?;
        let gg = gk.wedge_poly(gk)?;
        let lin = |p: usize, b: &PointForm| -> Result<PointForm> {
            match family {
                Family::QuasiAlpha => alpha.ok_or(Error::MissingAlpha)?.point(p).wedge_scalar(b)?.act_poly(&gg.point(p)),
                Family::Alpha => alpha.ok_or(Error::MissingAlpha)?.point(p).wedge_scalar(&b.act_poly(&gg.point(p))?),
                Family::Plain => b.act_poly(&gg.point(p)),
            }
        };
        let lstar = pointwise_adjoint(eta, k + 1, lin)?;
        out.accumulate(codifferential(&lstar, mask)?)?;
        let quad = |p: usize, b: &PointForm| -> Result<PointForm> {
            let bg = b.wedge_poly(&gk.point(p))?.scale(2.0);
            match family {
                Family::QuasiAlpha => alpha.ok_or(Error::MissingAlpha)?.point(p).wedge_scalar(&d.point(p))?.act_poly(&bg),
                Family::Alpha => alpha.ok_or(Error::MissingAlpha)?.point(p).wedge_scalar(&d.point(p).act_poly(&bg)?),
                Family::Plain => d.point(p).act_poly(&bg),
            }
        };
        out.accumulate(pointwise_adjoint(eta, k, quad)?)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstVariation {
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Compares `⟨⟨EL(γ), β⟩⟩` with central differences of `t ↦ C(γ + tβ)`
/// extrapolated to `t = 0` in powers of `t²` (Neville).
pub fn first_variation_check(
    gamma: &GradedField,
    beta: &GradedField,
    functional: &Functional,
    steps: &[f64],
) -> Result<FirstVariation> {
    if steps.is_empty() || steps.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Argument("first variation needs positive step sizes".into()));
    }
    let analytic = el_derivative(gamma, functional)?.l2_inner(beta)?;
    let mut table = steps
        .iter()
        .map(|&t| {
            let plus = functional_value(&gamma.axpy(t, beta)?, functional)?;
            let minus = functional_value(&gamma.axpy(-t, beta)?, functional)?;
            Ok((plus - minus) / (2.0 * t))
        })
        .collect::<Result<Vec<f64>>>()?;
    let s: Vec<f64> = steps.iter().map(|t| t * t).collect();
    for m in 1..table.len() {
        for i in 0..table.len() - m {
            table[i] = (s[i + m] * table[i] - s[i] * table[i + 1]) / (s[i + m] - s[i]);
        }
    }
    let numeric = table[0];
    let scale = analytic.abs().max(numeric.abs());
    let rel_err = if scale == 0.0 { 0.0 } else { (analytic - numeric).abs() / scale };
    Ok(FirstVariation { analytic, numeric, rel_err })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    pub step: usize,
    pub functional: f64,
    pub el_residual: f64,
}

#[derive(Clone, Debug)]
pub struct FlowStep {
    pub gamma: GradedField,
    /// Functional value and gradient norm at the input field.
    pub record: FlowRecord,
}

/// One explicit Euler step `γ ← γ − dt EL(γ)`.
pub fn flow_step(gamma: &GradedField, functional: &Functional, dt: f64, step: usize) -> Result<FlowStep> {
    if !(dt >= 0.0) {
        return Err(Error::Argument(format!("flow step size must be non-negative, got {dt}")));
    }
    let el = el_derivative(gamma, functional)?;
    let value = functional_value(gamma, functional)?;
    let residual = el.l2_norm()?;
    let next = if dt == 0.0 { gamma.clone() } else { gamma.axpy(-dt, &el)? };
    if !value.is_finite() || !residual.is_finite() || !next.is_finite() {
        return Err(Error::FlowDivergence { step });
    }
    Ok(FlowStep { gamma: next, record: FlowRecord { step, functional: value, el_residual: residual } })
}

/// Runs `steps` Euler steps, handing each record to `sink` before the step
/// is taken. Returns the final field.
pub fn run_flow<S>(
    gamma: &GradedField,
    functional: &Functional,
    dt: f64,
    steps: usize,
    mut sink: S,
) -> Result<GradedField>
where
    S: FnMut(FlowRecord),
{
    let mut current = gamma.clone();
    for step in 0..steps {
        let next = flow_step(&current, functional, dt, step)?;
        sink(next.record);
        current = next.gamma;
    }
    Ok(current)
}

const CG_MAX_ITERATIONS: usize = 200;
const CG_TOLERANCE: f64 = 1e-8;

/// Subtracts the exact part `du` of `g` solving `δd u = δg` by conjugate
/// gradients, leaving `δ(g − du) ≈ 0`.
fn project_coclosed(g: &FormField) -> Result<FormField> {
    let none = DegreeMask::none();
    let k = g.degree();
    let b = codifferential(g, &none)?;
    let residual = |u: &FormField| -> Result<f64> { Ok(codifferential(&g.sub(&dnabla(u, &none)?)?, &none)?.max_abs()) };
    if b.max_abs() <= CG_TOLERANCE * 1e-2 {
        return Ok(g.clone());
    }
    let apply = |x: &FormField| -> Result<FormField> { codifferential(&dnabla(x, &none)?, &none) };
    let mut u = FormField::zeros(g.geometry(), k - 1, ValueKind::Tangent)?;
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = l2_inner(&r, &r)?;
    let mut iterations = 0;
    while iterations < CG_MAX_ITERATIONS && r.max_abs() > CG_TOLERANCE * 1e-2 {
        let ap = apply(&p)?;
        let pap = l2_inner(&p, &ap)?;
        if pap <= 0.0 {
            break;
        }
        let step = rr / pap;
        u.axpy(step, &p)?;
        r.axpy(-step, &ap)?;
        let rr_new = l2_inner(&r, &r)?;
        p = r.add(&p.scale(rr_new / rr))?;
        rr = rr_new;
        iterations += 1;
    }
    let res = residual(&u)?;
    if res > CG_TOLERANCE {
        return Err(Error::CgNonConvergence { residual: res, iterations });
    }
    g.sub(&dnabla(&u, &none)?)
}

/// Projects `γ` onto the variant's restricted domain: forbidden degrees
/// are zeroed and the co-closed component, if any, is made co-closed.
pub fn restrict_domain(gamma: &GradedField, variant: &FunctionalVariant) -> Result<GradedField> {
    let mut out = gamma.clone();
    for k in variant.forbidden_degrees() {
        out.remove(*k);
    }
    if let Some(k) = variant.coclosed_degree() {
        if let Some(g) = out.component(k) {
            let projected = project_coclosed(g)?;
            out.set(projected)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{make_alpha, make_constant_ac, make_flat_torus, make_warped_torus, standard_complex, AlphaSpec};
    use std::sync::Arc;

    fn functional(g: &Arc<crate::geometry::ChartGeometry>, v: FunctionalVariant) -> Functional {
        let alpha = make_alpha(g, &AlphaSpec::Gradient(crate::geometry::expr::Expr::parse("x0 + 0.3*sin(x1)").unwrap()))
            .unwrap();
        Functional::new(v, Some(&alpha)).unwrap()
    }

    fn random_graded(g: &Arc<crate::geometry::ChartGeometry>, degrees: &[usize], seed: u64, scale: f64) -> GradedField {
        GradedField::from_components(
            g,
            degrees
                .iter()
                .map(|&k| fixtures::smooth_field(g, k, ValueKind::Tangent, seed + k as u64).unwrap().scale(scale))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn adjoint_identity_on_warped_torus() {
        let g = make_warped_torus(4, 4, 0.3).unwrap();
        let alpha = fixtures::smooth_field(&g, 1, ValueKind::Scalar, 1).unwrap();
        let x = fixtures::smooth_field(&g, 2, ValueKind::Tangent, 2).unwrap();
        let eta = fixtures::smooth_field(&g, 3, ValueKind::Tangent, 3).unwrap();
        let forward = alpha.wedge_scalar(&x).unwrap();
        let back = pointwise_adjoint(&eta, 2, |p, v| alpha.point(p).wedge_scalar(v)).unwrap();
        let lhs = l2_inner(&forward, &eta).unwrap();
        let rhs = l2_inner(&x, &back).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn first_variation_matches_differences() {
        let g = make_flat_torus(4, 4).unwrap();
        let gamma = random_graded(&g, &[0, 1, 2, 3, 4], 20, 0.5);
        let beta = random_graded(&g, &[0, 1, 2, 3, 4], 40, 0.5);
        for v in FunctionalVariant::all() {
            let f = functional(&g, v.clone());
            let r = first_variation_check(&gamma, &beta, &f, &[0.2, 0.1]).unwrap();
            assert!(r.rel_err < 1e-8, "{v}: {r:?}");
            assert!(r.analytic.abs() > 1e-6, "{v}: {r:?}");
        }
    }

    #[test]
    fn zero_direction_gives_zero() {
        let g = make_flat_torus(4, 4).unwrap();
        let gamma = random_graded(&g, &[1, 2], 1, 1.0);
        let f = functional(&g, FunctionalVariant::all()[0].clone());
        let r = first_variation_check(&gamma, &GradedField::zero(&g), &f, &[0.1, 0.05]).unwrap();
        assert_eq!((r.analytic, r.numeric, r.rel_err), (0.0, 0.0, 0.0));
    }

    #[test]
    fn special_structure_is_critical() {
        let g = make_flat_torus(4, 4).unwrap();
        let a = make_constant_ac(&g, &standard_complex(4)).unwrap();
        let gamma = GradedField::from_components(&g, vec![a.field().clone()]).unwrap();
        for v in FunctionalVariant::all() {
            let f = functional(&g, v);
            let el = el_derivative(&gamma, &f).unwrap();
            assert!(el.max_abs() < 1e-12);
            let step = flow_step(&gamma, &f, 0.1, 0).unwrap();
            assert!(step.gamma.axpy(-1.0, &gamma).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn flow_rejects_non_finite() {
        let g = make_flat_torus(4, 4).unwrap();
        let gamma = random_graded(&g, &[1, 2, 3], 5, 1.0);
        let f = functional(&g, FunctionalVariant::all()[4].clone());
        let mut records = Vec::new();
        let r = run_flow(&gamma, &f, 1e200, 5, |rec| records.push(rec));
        assert!(matches!(r, Err(Error::FlowDivergence { step }) if step >= 1));
        assert_eq!(records[0].step, 0);
        assert!(flow_step(&gamma, &f, -1.0, 0).is_err());
    }

    #[test]
    fn restriction_zeroes_and_projects() {
        let g = make_flat_torus(4, 5).unwrap();
        let gamma = random_graded(&g, &[1, 2, 3], 7, 1.0);
        let plain1 = FunctionalVariant::new(Family::Plain, DegreeMask::masked(&[1]).unwrap()).unwrap();
        let r = restrict_domain(&gamma, &plain1).unwrap();
        assert_eq!(r.degrees(), vec![1, 3]);
        let d3 = codifferential(r.component(3).unwrap(), &DegreeMask::none()).unwrap();
        assert!(d3.max_abs() <= 1e-8);
        assert_eq!(r.component(1).unwrap().data(), gamma.component(1).unwrap().data());
        let plain13 = FunctionalVariant::all()[5].clone();
        let r13 = restrict_domain(&gamma, &plain13).unwrap();
        assert_eq!(r13.component(3).unwrap().data(), gamma.component(3).unwrap().data());
        let quasi = FunctionalVariant::all()[0].clone();
        assert_eq!(restrict_domain(&gamma, &quasi).unwrap().degrees(), vec![1, 2]);
    }
}
