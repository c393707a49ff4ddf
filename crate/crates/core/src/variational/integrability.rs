use super::{Family, Functional, GradedField};
use crate::calculus::{dnabla, nijenhuis_tensor, DegreeMask};
use crate::geometry::ACStructure;
use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use serde::{Deserialize, Serialize};

/// Which integrability quantity to form from a tangent-valued form `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrabilityKind {
    /// `dρ∧(ρ∧ρ) − dρ`.
    Plain,
    /// `(α∧dρ)∧(ρ∧ρ) − α∧dρ`.
    QuasiAlpha,
    /// `α∧(dρ∧(ρ∧ρ) − dρ)`.
    AlphaLeft,
}

/// `x ∧ θ` for a `Λ²`-valued `θ`, or `None` when the degree would be negative.
fn act_bivector(x: &FormField, theta: &FormField) -> Result<Option<FormField>> {
    if x.degree() + theta.degree() < 2 {
        return Ok(None);
    }
    x.act_poly(theta).map(Some)
}

fn need_alpha(alpha: Option<&FormField>) -> Result<&FormField> {
    let a = alpha.ok_or(Error::MissingAlpha)?;
    if a.degree() != 1 || a.kind() != ValueKind::Scalar {
        return Err(Error::Kind("auxiliary form must be a scalar 1-form".into()));
    }
    Ok(a)
}

/// Integrability form of `ρ` with `d` replaced by its masked version. The
/// two terms generally have different degrees (`3k-1` and `k+1`, or `3k`
/// and `k+2` for the α kinds), so the result is graded; terms of degree
/// above `n` are dropped.
pub fn integrability_form(
    rho: &FormField,
    kind: IntegrabilityKind,
    mask: &DegreeMask,
    alpha: Option<&FormField>,
) -> Result<GradedField> {
    if !rho.kind().same_layout(ValueKind::Tangent) {
        return Err(Error::Kind(format!("integrability form of a {} form", rho.kind())));
    }
    let d = dnabla(rho, mask)?;
    let rr = rho.wedge_poly(rho)?;
    let mut out = GradedField::zero(rho.geometry());
    match kind {
        IntegrabilityKind::Plain => {
            if let Some(t) = act_bivector(&d, &rr)? {
                out.accumulate(t)?;
            }
            out.accumulate(d.scale(-1.0))?;
        }
        IntegrabilityKind::QuasiAlpha => {
            let ad = need_alpha(alpha)?.wedge_scalar(&d)?;
            if let Some(t) = act_bivector(&ad, &rr)? {
                out.accumulate(t)?;
            }
            out.accumulate(ad.scale(-1.0))?;
        }
        IntegrabilityKind::AlphaLeft => {
            let a = need_alpha(alpha)?;
            let plain = integrability_form(rho, IntegrabilityKind::Plain, mask, None)?;
            for (_, f) in plain.iter() {
                out.accumulate(a.wedge_scalar(f)?)?;
            }
        }
    }
    Ok(out)
}

/// `Σ_k I_{γ_k}` for the functional's family and mask.
pub fn graded_integrability(gamma: &GradedField, functional: &Functional) -> Result<GradedField> {
    let mut out = GradedField::zero(gamma.geometry());
    for (_, g) in gamma.iter() {
        let i = integrability_form(g, functional.family().kind(), functional.mask(), functional.alpha())?;
        for (_, f) in i.iter() {
            out.accumulate(f.clone())?;
        }
    }
    Ok(out)
}

/// Same sum, with even degrees handled by the shortcut `γ_k∧γ_k = 0`:
/// only the linear term `-α∧dγ_k` (or `-dγ_k`) survives there.
pub fn graded_integrability_split(gamma: &GradedField, functional: &Functional) -> Result<GradedField> {
    let mut out = GradedField::zero(gamma.geometry());
    for (k, g) in gamma.iter() {
        if k % 2 == 1 {
            let i = integrability_form(g, functional.family().kind(), functional.mask(), functional.alpha())?;
            for (_, f) in i.iter() {
                out.accumulate(f.clone())?;
            }
            continue;
        }
        let d = dnabla(g, functional.mask())?;
        let linear = match functional.family() {
            Family::Plain => d,
            Family::QuasiAlpha | Family::Alpha => need_alpha(functional.alpha())?.wedge_scalar(&d)?,
        };
        out.accumulate(linear.scale(-1.0))?;
    }
    Ok(out)
}

/// `⟨⟨I_γ, γ⟩⟩`.
pub fn functional_value(gamma: &GradedField, functional: &Functional) -> Result<f64> {
    gamma.geometry().quadrature_weight()?;
    graded_integrability(gamma, functional)?.l2_inner(gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResiduals {
    /// `‖α∧I_A − (⅓ I^α_A − ⅔ α∧dA)‖_∞`.
    pub decomposition: f64,
    /// `‖α∧(dA∧(A∧A)) − ⅓ (α∧dA)∧(A∧A)‖_∞`.
    pub triple_product: f64,
}

/// Residuals of the two claimed algebraic relations between the α
/// integrability forms of a degree-1 field `a`, all built from one shared
/// `d^∇a`. `a` need not be almost-complex.
pub fn decomposition_check(a: &FormField, alpha: &FormField) -> Result<DecompositionResiduals> {
    if a.degree() != 1 || !a.kind().same_layout(ValueKind::Tangent) {
        return Err(Error::Kind("decomposition check expects a tangent-valued 1-form".into()));
    }
    let alpha = need_alpha(Some(alpha))?;
    let d = dnabla(a, &DegreeMask::none())?;
    let aa = a.wedge_poly(a)?;
    let cubic = d.act_poly(&aa)?;
    let ad = alpha.wedge_scalar(&d)?;
    let ad_cubic = ad.act_poly(&aa)?;
    let alpha_cubic = alpha.wedge_scalar(&cubic)?;

    let lhs = alpha_cubic.sub(&ad)?;
    let mut rhs = ad_cubic.scale(1.0 / 3.0);
    rhs.axpy(-1.0 / 3.0, &ad)?;
    rhs.axpy(-2.0 / 3.0, &ad)?;
    let decomposition = lhs.sub(&rhs)?.max_abs();

    let mut tp = alpha_cubic;
    tp.axpy(-1.0 / 3.0, &ad_cubic)?;
    Ok(DecompositionResiduals { decomposition, triple_product: tp.max_abs() })
}

/// `d((α∧ρ)∧(ρ∧ρ) − α∧ρ) − (−I^α_ρ + (1 + (−1)^{k+1}) (α∧ρ)∧(dρ∧ρ))` for a
/// tangent-valued `ρ` of degree `k` and a closed scalar 1-form `α`.
pub fn exactness_defect(rho: &FormField, alpha: &FormField) -> Result<GradedField> {
    let none = DegreeMask::none();
    let geom = rho.geometry();
    let a_rho = alpha.wedge_scalar(rho)?;
    let mut out = GradedField::zero(geom);
    if let Some(t) = act_bivector(&a_rho, &rho.wedge_poly(rho)?)? {
        out.accumulate(dnabla(&t, &none)?)?;
    }
    out.accumulate(dnabla(&a_rho, &none)?.scale(-1.0))?;
    let i_alpha = integrability_form(rho, IntegrabilityKind::QuasiAlpha, &none, Some(alpha))?;
    let mut out = out.axpy(1.0, &i_alpha)?;
    if rho.degree() % 2 == 1 {
        let d = dnabla(rho, &none)?;
        if let Some(t) = act_bivector(&a_rho, &d.wedge_poly(rho)?)? {
            out.accumulate(t.scale(-2.0))?;
        }
    }
    Ok(out)
}

/// Compares the Nijenhuis tensor with the plain integrability form
/// `I_A = dA∧(A∧A) − dA`: returns `N_A − I_A` and `N_A − A∘I_A`.
pub fn nijenhuis_comparison(a: &ACStructure) -> Result<(FormField, FormField)> {
    let n_a = nijenhuis_tensor(a)?;
    let i_a = integrability_form(a.field(), IntegrabilityKind::Plain, &DegreeMask::none(), None)?.component_or_zero(2)?;
    let composed = a.as_endomorphism().act_end(&i_a)?;
    Ok((n_a.sub(&i_a)?, n_a.sub(&composed)?))
}
