use super::{extend, functional_value, Extension, Functional};
use crate::error::{Error, Result};
use crate::exterior::FormField;
use crate::geometry::{check_ac, AC_TOLERANCE};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub t: f64,
    pub functional: f64,
    pub derivative: f64,
}

/// Functional values along a path of structures with finite-difference
/// derivatives. This probes the asymptotic derivative numerically and
/// certifies nothing about the limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// Sign of the last derivative estimate: -1, 0 or 1.
    pub tail_trend: i8,
}

/// Evaluates the functional on the extension of `path(t)` for each sample
/// time. Derivatives are central differences, one-sided at the ends.
pub fn stability_probe<P>(path: P, functional: &Functional, ts: &[f64], extension: Extension) -> Result<ProbeTable>
where
    P: Fn(f64) -> Result<FormField>,
{
    if ts.len() < 2 {
        return Err(Error::Argument("stability probe needs at least two samples".into()));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("probe samples must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(ts.len());
    for &t in ts {
        let a = path(t)?;
        let residual = check_ac(&a)?;
        if residual > AC_TOLERANCE {
            return Err(Error::PathNotAlmostComplex { t, residual });
        }
        values.push(functional_value(&extend(&a, functional, extension)?, functional)?);
    }
    let last = ts.len() - 1;
    let rows: Vec<ProbeRow> = (0..ts.len())
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
            ProbeRow { t: ts[i], functional: values[i], derivative: (values[hi] - values[lo]) / (ts[hi] - ts[lo]) }
        })
        .collect();
    let d = rows[last].derivative;
    let tail_trend = if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    };
    Ok(ProbeTable { rows, tail_trend })
}
