use super::expr::Expr;
use super::ChartGeometry;
use crate::calculus::{dnabla, DegreeMask};
use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum AlphaSpec {
    /// `dx_i`.
    Axis(usize),
    /// `df` for a function of the coordinates.
    Gradient(Expr),
}

/// A closed, non-vanishing scalar 1-form.
#[derive(Clone, Debug)]
pub struct AuxiliaryOneForm {
    field: FormField,
    closedness: f64,
}

impl AuxiliaryOneForm {
    pub fn new(field: FormField) -> Result<Self> {
        if field.degree() != 1 || field.kind() != ValueKind::Scalar {
            return Err(Error::Kind("auxiliary form must be a scalar 1-form".into()));
        }
        if field.max_abs() <= 1e-12 {
            return Err(Error::TrivialAlpha);
        }
        let closedness = dnabla(&field, &DegreeMask::none())?.max_abs();
        Ok(Self { field, closedness })
    }

    pub fn field(&self) -> &FormField {
        &self.field
    }

    /// `‖dα‖_∞` over valid nodes.
    pub fn closedness(&self) -> f64 {
        self.closedness
    }
}

/// `dx_i`, or the central-difference gradient of a sampled function.
pub fn make_alpha(geom: &Arc<ChartGeometry>, spec: &AlphaSpec) -> Result<AuxiliaryOneForm> {
    let n = geom.n();
    match spec {
        AlphaSpec::Axis(i) => {
            if *i >= n {
                return Err(Error::Index { index: *i, n });
            }
            let i = *i;
            AuxiliaryOneForm::new(FormField::from_fn(geom, 1, ValueKind::Scalar, |_, out| out[i] = 1.0)?)
        }
        AlphaSpec::Gradient(f) => {
            if let Some(m) = f.max_coord().filter(|&m| m >= n) {
                return Err(Error::Index { index: m, n });
            }
            let sampled = FormField::from_fn(geom, 0, ValueKind::Scalar, |x, out| out[0] = f.eval(x))?;
            AuxiliaryOneForm::new(dnabla(&sampled, &DegreeMask::none())?)
        }
    }
}
