use super::{integrability_form, IntegrabilityKind};
use crate::calculus::{cov_derivative, dnabla, DegreeMask};
use crate::error::Result;
use crate::exterior::FormField;
use crate::geometry::{ACStructure, AuxiliaryOneForm};
use crate::integration::l2_norm;
use nalgebra::DMatrix;
use serde::Serialize;

/// Sup norm over valid nodes, and the L² norm where the geometry integrates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub sup: f64,
    pub l2: Option<f64>,
}

impl Residual {
    fn of(f: &FormField) -> Result<Self> {
        let l2 = if f.geometry().integrable() { Some(l2_norm(f)?) } else { None };
        Ok(Self { sup: f.max_abs(), l2 })
    }

    fn of_graded(g: &super::GradedField) -> Result<Self> {
        let l2 = if g.geometry().integrable() { Some(g.l2_norm()?) } else { None };
        Ok(Self { sup: g.max_abs(), l2 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub special: bool,
    pub alpha_special: bool,
    pub integrable: bool,
    pub alpha_integrable: bool,
    pub quasi_alpha_integrable: bool,
    pub kahler: bool,
    pub orthogonal: bool,
}

impl Verdicts {
    /// Implications that must hold among the verdicts; returns the ones
    /// that fail.
    pub fn lattice_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(what.to_string());
            }
        };
        let v = self;
        check(
            !v.special || (v.alpha_special && v.quasi_alpha_integrable && v.integrable && v.alpha_integrable),
            "special => all",
        );
        check(!v.alpha_special || (v.quasi_alpha_integrable && v.alpha_integrable), "alpha_special => quasi_alpha_integrable and alpha_integrable");
        check(!(v.quasi_alpha_integrable && v.alpha_integrable) || v.alpha_special, "quasi_alpha_integrable and alpha_integrable => alpha_special");
        check(!v.integrable || v.alpha_integrable, "integrable => alpha_integrable");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub geometry: String,
    pub tolerance: f64,
    pub special: Residual,
    pub alpha_special: Residual,
    pub integrable: Residual,
    pub alpha_integrable: Residual,
    pub quasi_alpha_integrable: Residual,
    pub kahler: Residual,
    pub orthogonal: Residual,
    pub verdicts: Verdicts,
    pub lattice_violations: Vec<String>,
}

impl ClassificationReport {
    pub fn lattice_consistent(&self) -> bool {
        self.lattice_violations.is_empty()
    }
}

fn orthogonality(a: &ACStructure) -> Result<Residual> {
    let geom = a.geometry();
    let n = geom.n();
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    for p in 0..geom.node_count() {
        let m = a.matrix(p);
        let g = DMatrix::from_row_slice(n, n, geom.metric(p));
        let defect = m.transpose() * &g * &m - &g;
        sup = sup.max(defect.amax());
        sum += geom.sqrt_det(p) * defect.norm_squared();
    }
    let l2 = if geom.integrable() { Some((geom.quadrature_weight()? * sum).sqrt()) } else { None };
    Ok(Residual { sup, l2 })
}

/// Residuals of every structure property and verdicts at
/// `max(floor, c h²)`, `h` the largest grid step.
pub fn classify(a: &ACStructure, alpha: &AuxiliaryOneForm, c: f64, floor: f64) -> Result<ClassificationReport> {
    let geom = a.geometry();
    let h = geom.grid().max_step();
    let tolerance = floor.max(c * h * h);
    let none = DegreeMask::none();
    let af = a.field();
    let al = alpha.field();

    let d = dnabla(af, &none)?;
    let special = Residual::of(&d)?;
    let alpha_special = Residual::of(&al.wedge_scalar(&d)?)?;
    let integrable = Residual::of_graded(&integrability_form(af, IntegrabilityKind::Plain, &none, None)?)?;
    let alpha_integrable =
        Residual::of_graded(&integrability_form(af, IntegrabilityKind::AlphaLeft, &none, Some(al))?)?;
    let quasi_alpha_integrable =
        Residual::of_graded(&integrability_form(af, IntegrabilityKind::QuasiAlpha, &none, Some(al))?)?;
    let kahler = Residual::of(&cov_derivative(af)?)?;
    let orthogonal = orthogonality(a)?;

    let ok = |r: &Residual| r.sup <= tolerance;
    let verdicts = Verdicts {
        special: ok(&special),
        alpha_special: ok(&alpha_special),
        integrable: ok(&integrable),
        alpha_integrable: ok(&alpha_integrable),
        quasi_alpha_integrable: ok(&quasi_alpha_integrable),
        kahler: ok(&kahler),
        orthogonal: ok(&orthogonal),
    };
    Ok(ClassificationReport {
        geometry: geom.label().to_string(),
        tolerance,
        special,
        alpha_special,
        integrable,
        alpha_integrable,
        quasi_alpha_integrable,
        kahler,
        orthogonal,
        lattice_violations: verdicts.lattice_violations(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{
        make_alpha, make_constant_ac, make_flat_torus, make_s6_octonionic_ac, make_sphere_chart, standard_complex,
        AlphaSpec,
    };

    #[test]
    fn constant_structure_is_everything() {
        let g = make_flat_torus(4, 6).unwrap();
        let a = make_constant_ac(&g, &standard_complex(4)).unwrap();
        let alpha = make_alpha(&g, &AlphaSpec::Axis(0)).unwrap();
        let r = classify(&a, &alpha, 1e-3, 1e-8).unwrap();
        let v = r.verdicts;
        assert!(v.special && v.alpha_special && v.integrable && v.alpha_integrable && v.quasi_alpha_integrable);
        assert!(v.kahler && v.orthogonal);
        assert!(r.lattice_consistent());
        assert_eq!(r.special.l2, Some(0.0));
    }

    #[test]
    fn perturbed_structure_is_not_special() {
        let g = make_flat_torus(4, 8).unwrap();
        let a = fixtures::perturbed_ac(&g, &standard_complex(4), 0.1, 1).unwrap();
        let alpha = make_alpha(&g, &AlphaSpec::Axis(0)).unwrap();
        let r = classify(&a, &alpha, 1e-3, 1e-8).unwrap();
        assert!(!r.verdicts.special);
        assert!(!r.verdicts.integrable);
        assert!(r.lattice_consistent(), "{:?}", r.lattice_violations);
    }

    #[test]
    fn octonionic_sphere_is_orthogonal_not_integrable() {
        let g = make_sphere_chart(6, 7, 0.8).unwrap();
        let a = make_s6_octonionic_ac(&g).unwrap();
        let alpha = make_alpha(&g, &AlphaSpec::Axis(0)).unwrap();
        let r = classify(&a, &alpha, 1e-3, 1e-8).unwrap();
        assert!(!r.verdicts.integrable);
        assert!(r.verdicts.orthogonal, "{}", r.orthogonal.sup);
        assert!(r.integrable.l2.is_none());
    }

    #[test]
    fn lattice_rules() {
        let all = Verdicts {
            special: true,
            alpha_special: true,
            integrable: true,
            alpha_integrable: true,
            quasi_alpha_integrable: true,
            kahler: true,
            orthogonal: true,
        };
        assert!(all.lattice_violations().is_empty());
        let bad = Verdicts { integrable: true, alpha_integrable: false, ..all };
        assert!(bad.lattice_violations().iter().any(|s| s == "integrable => alpha_integrable"));
    }
}
