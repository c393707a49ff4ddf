//! Integrability quantities, the functionals built from them, their
//! Euler-Lagrange derivatives and gradient flows, the structure classifier
//! and the stability probe.

mod classify;
mod euler;
mod integrability;
mod probe;

pub use classify::{classify, ClassificationReport, Residual, Verdicts};
pub use euler::{
    el_derivative, first_variation_check, flow_step, pointwise_adjoint, restrict_domain, run_flow, FirstVariation,
    FlowRecord, FlowStep,
};
pub use integrability::{
    decomposition_check, exactness_defect, functional_value, graded_integrability, graded_integrability_split, integrability_form,
    nijenhuis_comparison, DecompositionResiduals, IntegrabilityKind,
};
pub use probe::{stability_probe, ProbeRow, ProbeTable};

use crate::calculus::DegreeMask;
use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use crate::geometry::{AuxiliaryOneForm, ChartGeometry};
use crate::integration::l2_inner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Formal sum of tangent-valued forms of several degrees. Absent degrees
/// are zero.
#[derive(Clone, Debug)]
pub struct GradedField {
    geom: Arc<ChartGeometry>,
    parts: BTreeMap<usize, FormField>,
}

impl GradedField {
    pub fn zero(geom: &Arc<ChartGeometry>) -> Self {
        Self { geom: geom.clone(), parts: BTreeMap::new() }
    }

    /// Sums the given components; repeated degrees are added.
    pub fn from_components(geom: &Arc<ChartGeometry>, parts: Vec<FormField>) -> Result<Self> {
        let mut out = Self::zero(geom);
        for f in parts {
            out.accumulate(f)?;
        }
        Ok(out)
    }

    pub fn geometry(&self) -> &Arc<ChartGeometry> {
        &self.geom
    }

    /// Adds `f` to the component of its degree. Forms of degree above `n`
    /// vanish and are dropped.
    pub fn accumulate(&mut self, f: FormField) -> Result<()> {
        if !Arc::ptr_eq(&self.geom, f.geometry()) {
            return Err(Error::GeometryMismatch);
        }
        if !f.kind().same_layout(ValueKind::Tangent) {
            return Err(Error::Kind(format!("graded fields are tangent-valued, got {}", f.kind())));
        }
        if f.degree() > self.geom.n() {
            return Ok(());
        }
        match self.parts.get_mut(&f.degree()) {
            Some(existing) => existing.axpy(1.0, &f)?,
            None => {
                self.parts.insert(f.degree(), f);
            }
        }
        Ok(())
    }

    pub fn component(&self, k: usize) -> Option<&FormField> {
        self.parts.get(&k)
    }

    /// Component of degree `k`, or the zero form when absent.
    pub fn component_or_zero(&self, k: usize) -> Result<FormField> {
        match self.parts.get(&k) {
            Some(f) => Ok(f.clone()),
            None => FormField::zeros(&self.geom, k, ValueKind::Tangent),
        }
    }

    pub fn set(&mut self, f: FormField) -> Result<()> {
        self.parts.remove(&f.degree());
        self.accumulate(f)
    }

    pub fn remove(&mut self, k: usize) -> Option<FormField> {
        self.parts.remove(&k)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.parts.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &FormField)> {
        self.parts.iter().map(|(k, f)| (*k, f))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &GradedField) -> Result<GradedField> {
        let mut out = self.clone();
        for f in other.parts.values() {
            out.accumulate(f.scale(s))?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> GradedField {
        GradedField { geom: self.geom.clone(), parts: self.parts.iter().map(|(k, f)| (*k, f.scale(s))).collect() }
    }

    /// `⟨⟨self, other⟩⟩`, summed over the common degrees.
    pub fn l2_inner(&self, other: &GradedField) -> Result<f64> {
        self.geom.quadrature_weight()?;
        let mut s = 0.0;
        for (k, f) in &self.parts {
            if let Some(g) = other.parts.get(k) {
                s += l2_inner(f, g)?;
            }
        }
        Ok(s)
    }

    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.l2_inner(self)?.max(0.0).sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.parts.values().map(FormField::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.parts.values().all(|f| f.data().iter().all(|x| x.is_finite()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `⟨⟨I^{α}_γ, γ⟩⟩` with `I^α_ρ = (α∧dρ)∧(ρ∧ρ) − α∧dρ`.
    QuasiAlpha,
    /// `⟨⟨α∧I_γ, γ⟩⟩`.
    Alpha,
    /// `⟨⟨I_γ, γ⟩⟩` with `I_ρ = dρ∧(ρ∧ρ) − dρ`, always masked.
    Plain,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::QuasiAlpha => "quasi_alpha",
            Family::Alpha => "alpha",
            Family::Plain => "plain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quasi_alpha" => Ok(Family::QuasiAlpha),
            "alpha" => Ok(Family::Alpha),
            "plain" => Ok(Family::Plain),
            other => Err(Error::Variant(format!("unknown family '{other}'"))),
        }
    }

    pub fn needs_alpha(self) -> bool {
        self != Family::Plain
    }

    pub fn kind(self) -> IntegrabilityKind {
        match self {
            Family::QuasiAlpha => IntegrabilityKind::QuasiAlpha,
            Family::Alpha => IntegrabilityKind::AlphaLeft,
            Family::Plain => IntegrabilityKind::Plain,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A family together with its licensed degree mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionalVariant {
    family: Family,
    mask: DegreeMask,
}

impl FunctionalVariant {
    /// The plain family takes `[1]` or `[1,3]`; the α families take no mask
    /// or `[5]`.
    pub fn new(family: Family, mask: DegreeMask) -> Result<Self> {
        let entries = mask.entries();
        let ok = match family {
            Family::Plain => entries == [1] || entries == [1, 3],
            Family::QuasiAlpha | Family::Alpha => entries.is_empty() || entries == [5],
        };
        if !ok {
            return Err(Error::Variant(format!("mask {mask} is not licensed for the {family} family")));
        }
        Ok(Self { family, mask })
    }

    /// The six licensed family/mask combinations.
    pub fn all() -> Vec<FunctionalVariant> {
        let m = |ks: &[usize]| DegreeMask::masked(ks).expect("static mask");
        vec![
            Self { family: Family::QuasiAlpha, mask: DegreeMask::none() },
            Self { family: Family::QuasiAlpha, mask: m(&[5]) },
            Self { family: Family::Alpha, mask: DegreeMask::none() },
            Self { family: Family::Alpha, mask: m(&[5]) },
            Self { family: Family::Plain, mask: m(&[1]) },
            Self { family: Family::Plain, mask: m(&[1, 3]) },
        ]
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mask(&self) -> &DegreeMask {
        &self.mask
    }

    /// Degrees forced to zero on the restricted domain.
    pub fn forbidden_degrees(&self) -> &'static [usize] {
        match self.family {
            Family::Plain => &[2],
            _ => &[3, 9],
        }
    }

    /// Degree whose co-closedness the restricted domain demands, if any.
    pub fn coclosed_degree(&self) -> Option<usize> {
        match self.family {
            Family::Plain if self.mask.entries() == [1] => Some(3),
            Family::QuasiAlpha | Family::Alpha if self.mask.is_none() => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionalVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family, if self.mask.is_none() { String::new() } else { self.mask.to_string() })
    }
}

/// A variant bound to its auxiliary 1-form.
#[derive(Clone, Debug)]
pub struct Functional {
    variant: FunctionalVariant,
    alpha: Option<FormField>,
}

impl Functional {
    pub fn new(variant: FunctionalVariant, alpha: Option<&AuxiliaryOneForm>) -> Result<Self> {
        if variant.family.needs_alpha() && alpha.is_none() {
            return Err(Error::MissingAlpha);
        }
        let alpha = if variant.family.needs_alpha() { alpha.map(|a| a.field().clone()) } else { None };
        Ok(Self { variant, alpha })
    }

    pub fn variant(&self) -> &FunctionalVariant {
        &self.variant
    }

    pub fn family(&self) -> Family {
        self.variant.family
    }

    pub fn mask(&self) -> &DegreeMask {
        &self.variant.mask
    }

    pub fn alpha(&self) -> Option<&FormField> {
        self.alpha.as_ref()
    }
}

/// How a structure is extended to a graded field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `γ = A`.
    #[default]
    Zero,
    /// `γ = A + I_A`, the integrability form of the functional's family.
    Integrability,
}

impl Extension {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Extension::Zero),
            "integrability" => Ok(Extension::Integrability),
            other => Err(Error::Config(format!("unknown extension '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Extension::Zero => "zero",
            Extension::Integrability => "integrability",
        }
    }
}

/// Graded field carrying `a` in degree 1, extended as requested.
pub fn extend(a: &FormField, functional: &Functional, extension: Extension) -> Result<GradedField> {
    let mut g = GradedField::from_components(a.geometry(), vec![a.clone()])?;
    if extension == Extension::Integrability {
        let i = integrability_form(a, functional.family().kind(), functional.mask(), functional.alpha())?;
        for (_, f) in i.iter() {
            g.accumulate(f.clone())?;
        }
    }
    Ok(g)
}
