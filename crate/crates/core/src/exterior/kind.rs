use super::binomial;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Fiber in which a form takes its values.
///
/// `Tangent` and `Polyvector(1)` share a layout; `normalized` maps the latter
/// onto the former. Endomorphisms are stored row-major: entry `a * n + b` is
/// the `e_a` component of the image of `e_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Scalar,
    Tangent,
    Endomorphism,
    Polyvector(u8),
}

impl ValueKind {
    pub fn fiber_dim(self, n: usize) -> usize {
        match self {
            ValueKind::Scalar => 1,
            ValueKind::Tangent => n,
            ValueKind::Endomorphism => n * n,
            ValueKind::Polyvector(q) => binomial(n, q as usize),
        }
    }

    /// Polyvector degree of the values (scalars count as degree 0).
    pub fn poly_degree(self) -> Option<usize> {
        match self {
            ValueKind::Scalar => Some(0),
            ValueKind::Tangent => Some(1),
            ValueKind::Polyvector(q) => Some(q as usize),
            ValueKind::Endomorphism => None,
        }
    }

    pub fn normalized(self) -> Self {
        match self {
            ValueKind::Polyvector(1) => ValueKind::Tangent,
            other => other,
        }
    }

    /// Polyvectors beyond degree 2 are only accepted when they vanish for
    /// dimensional reasons.
    pub fn validate(self, n: usize) -> Result<()> {
        match self {
            ValueKind::Polyvector(0) => Err(Error::Kind("Polyvector(0) is not a value kind; use Scalar".into())),
            ValueKind::Polyvector(q) if q > 2 && (q as usize) <= n => Err(Error::Unsupported(format!(
                "polyvector values of degree {q} (only degrees 1 and 2 are implemented)"
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn same_layout(self, other: Self) -> bool {
        self.normalized() == other.normalized()
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Scalar => write!(f, "scalar"),
            ValueKind::Tangent => write!(f, "tangent"),
            ValueKind::Endomorphism => write!(f, "endomorphism"),
            ValueKind::Polyvector(q) => write!(f, "polyvector({q})"),
        }
    }
}
