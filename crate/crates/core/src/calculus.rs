//! Finite-difference operators on sampled forms: partial derivatives, Lie
//! brackets, the Nijenhuis tensor, the covariant exterior derivative and
//! its degree-masked variants.

use crate::error::{Error, Result};
use crate::exterior::{tables, FormField, ValueKind};
use crate::geometry::ACStructure;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fmt;

/// Degrees on which the covariant exterior derivative is replaced by zero.
///
/// `DegreeMask::masked(&[k])` zeroes degree `k - 1`; `masked(&[1, 3])`
/// zeroes degrees 0 and 2.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DegreeMask {
    zeroed: BTreeSet<usize>,
}

impl DegreeMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn masked(ks: &[usize]) -> Result<Self> {
        let mut zeroed = BTreeSet::new();
        for &k in ks {
            if k == 0 {
                return Err(Error::Variant("mask entries start at 1".into()));
            }
            zeroed.insert(k - 1);
        }
        Ok(Self { zeroed })
    }

    pub fn zeroed(&self) -> &BTreeSet<usize> {
        &self.zeroed
    }

    pub fn is_none(&self) -> bool {
        self.zeroed.is_empty()
    }

    /// The mask entries `k` (one more than the zeroed degrees).
    pub fn entries(&self) -> Vec<usize> {
        self.zeroed.iter().map(|z| z + 1).collect()
    }

    /// Whether the derivative of a degree-`degree` form is forced to zero.
    pub fn kills(&self, degree: usize) -> bool {
        self.zeroed.contains(&degree)
    }

    /// Whether the adjoint on degree `degree` is forced to zero.
    pub fn kills_adjoint(&self, degree: usize) -> bool {
        degree >= 1 && self.kills(degree - 1)
    }
}

impl fmt::Display for DegreeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return write!(f, "none");
        }
        let parts: Vec<String> = self.entries().iter().map(|k| k.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn stencil_margin(field: &FormField) -> usize {
    field.margin() + usize::from(!field.geometry().integrable())
}

/// Central difference along `axis`, coefficientwise.
pub fn partial(field: &FormField, axis: usize) -> Result<FormField> {
    let n = field.n();
    if axis >= n {
        return Err(Error::Index { index: axis, n });
    }
    let grid = field.geometry().grid().clone();
    let h2 = 2.0 * grid.step(axis);
    let out = field.map_nodes(field.degree(), field.kind(), |p, _, dst| {
        if let (Some(f), Some(b)) = (grid.shift(p, axis, 1), grid.shift(p, axis, -1)) {
            for ((d, x), y) in dst.iter_mut().zip(field.node(f)).zip(field.node(b)) {
                *d = (x - y) / h2;
            }
        }
    })?;
    Ok(out.with_margin(stencil_margin(field)))
}

fn check_vector_field(x: &FormField) -> Result<()> {
    if x.degree() != 0 || x.kind() != ValueKind::Tangent {
        return Err(Error::Kind("expected a vector field (tangent-valued 0-form)".into()));
    }
    Ok(())
}

/// `[X, Y]^k = X^j ∂_j Y^k - Y^j ∂_j X^k`.
pub fn lie_bracket(x: &FormField, y: &FormField) -> Result<FormField> {
    check_vector_field(x)?;
    check_vector_field(y)?;
    if !x.same_geometry(y) {
        return Err(Error::GeometryMismatch);
    }
    let n = x.n();
    let dx: Vec<FormField> = (0..n).map(|j| partial(x, j)).collect::<Result<_>>()?;
    let dy: Vec<FormField> = (0..n).map(|j| partial(y, j)).collect::<Result<_>>()?;
    let margin = dx[0].margin().max(dy[0].margin());
    let mut data = vec![0.0; x.data().len()];
    data.par_chunks_mut(n).enumerate().for_each(|(p, o)| {
        let (xv, yv) = (x.node(p), y.node(p));
        for k in 0..n {
            o[k] = (0..n).map(|j| xv[j] * dy[j].node(p)[k] - yv[j] * dx[j].node(p)[k]).sum();
        }
    });
    Ok(FormField::from_data(x.geometry(), 0, ValueKind::Tangent, data)?.with_margin(margin))
}

/// `(A X)^k = A^k_j X^j` for a tangent-valued 1-form `A` and vector field `X`.
pub fn apply_to_vector(a: &FormField, x: &FormField) -> Result<FormField> {
    check_vector_field(x)?;
    if a.degree() != 1 || a.kind() != ValueKind::Tangent {
        return Err(Error::Kind("expected a tangent-valued 1-form".into()));
    }
    let n = a.n();
    a.zip_with(x, 0, ValueKind::Tangent, |av, xv, o| {
        for k in 0..n {
            o[k] = (0..n).map(|j| av[j * n + k] * xv[j]).sum();
        }
    })
}

/// `N_A(X, Y) = [AX, AY] - A([AX, Y] + [X, AY]) - [X, Y]`.
pub fn nijenhuis(a: &ACStructure, x: &FormField, y: &FormField) -> Result<FormField> {
    let af = a.field();
    let ax = apply_to_vector(af, x)?;
    let ay = apply_to_vector(af, y)?;
    let mixed = lie_bracket(&ax, y)?.add(&lie_bracket(x, &ay)?)?;
    lie_bracket(&ax, &ay)?.sub(&apply_to_vector(af, &mixed)?)?.sub(&lie_bracket(x, y)?)
}

/// The Nijenhuis tensor as a tangent-valued 2-form, assembled on pairs of
/// coordinate fields.
pub fn nijenhuis_tensor(a: &ACStructure) -> Result<FormField> {
    let af = a.field();
    let n = af.n();
    let da: Vec<FormField> = (0..n).map(|l| partial(af, l)).collect::<Result<_>>()?;
    let t = tables(n);
    let pairs: Vec<(usize, usize)> =
        t.basis[2].iter().map(|&m| (m.trailing_zeros() as usize, 31 - m.leading_zeros() as usize)).collect();
    let out = af.map_nodes(2, ValueKind::Tangent, |p, av, o| {
        // A^k_j = av[j * n + k]; ∂_l A^k_j = da[l].node(p)[j * n + k]
        for (q, &(i, j)) in pairs.iter().enumerate() {
            for k in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    let dl = da[l].node(p);
                    v += av[i * n + l] * dl[j * n + k] - av[j * n + l] * dl[i * n + k];
                }
                for m in 0..n {
                    let curl = da[i].node(p)[j * n + m] - da[j].node(p)[i * n + m];
                    v -= av[m * n + k] * curl;
                }
                o[q * n + k] = v;
            }
        }
    })?;
    Ok(out.with_margin(da[0].margin()))
}

/// Adds `Γ_i · v` to `out` for a fiber value `v` of the given kind, where
/// `(Γ_i)^a_b = Γ^a_{ib}`.
fn connection_action(kind: ValueKind, n: usize, chris: &[f64], i: usize, v: &[f64], out: &mut [f64]) {
    match kind {
        ValueKind::Scalar => {}
        ValueKind::Tangent => {
            for a in 0..n {
                out[a] += (0..n).map(|b| chris[a * n * n + i * n + b] * v[b]).sum::<f64>();
            }
        }
        ValueKind::Polyvector(q) => {
            for term in tables(n).derivation(q as usize) {
                let (r, c) = (term.row as usize, term.col as usize);
                out[term.out as usize] += term.sign * chris[r * n * n + i * n + c] * v[term.input as usize];
            }
        }
        ValueKind::Endomorphism => unreachable!("rejected by dnabla"),
    }
}

/// Covariant exterior derivative `d^∇γ = Σ_i dx^i ∧ ∇_{∂_i} γ` with the
/// connection of the field's geometry (the induced one on polyvectors).
/// Degrees zeroed by `mask` map to the zero form.
pub fn dnabla(gamma: &FormField, mask: &DegreeMask) -> Result<FormField> {
    let kind = gamma.kind();
    if kind == ValueKind::Endomorphism {
        return Err(Error::Unsupported("covariant exterior derivative of endomorphism-valued forms".into()));
    }
    let k = gamma.degree();
    let n = gamma.n();
    let margin = stencil_margin(gamma);
    if mask.kills(k) || k >= n || gamma.is_empty() {
        return Ok(FormField::zeros(gamma.geometry(), k + 1, kind)?.with_margin(margin));
    }
    let geom = gamma.geometry().clone();
    let grid = geom.grid();
    let t = tables(n);
    let fdim = kind.fiber_dim(n);
    let stride = gamma.stride();
    let terms = t.shuffles(1, k);
    let out = gamma.map_nodes(k + 1, kind, |p, here, dst| {
        let mut v = vec![0.0; stride];
        let chris = geom.christoffel(p);
        for i in 0..n {
            let (Some(f), Some(b)) = (grid.shift(p, i, 1), grid.shift(p, i, -1)) else {
                dst.iter_mut().for_each(|x| *x = 0.0);
                return;
            };
            let h2 = 2.0 * grid.step(i);
            for ((d, x), y) in v.iter_mut().zip(gamma.node(f)).zip(gamma.node(b)) {
                *d = (x - y) / h2;
            }
            if kind != ValueKind::Scalar {
                for idx in 0..stride / fdim {
                    let (src, acc) = (&here[idx * fdim..(idx + 1) * fdim], &mut v[idx * fdim..(idx + 1) * fdim]);
                    connection_action(kind, n, chris, i, src, acc);
                }
            }
            for term in terms.iter().filter(|term| term.left as usize == i) {
                let (o, r) = (term.out as usize, term.right as usize);
                for c in 0..fdim {
                    dst[o * fdim + c] += term.sign * v[r * fdim + c];
                }
            }
        }
    })?;
    Ok(out.with_margin(margin))
}

/// `d(a∧b) − (da∧b + (−1)^k a∧db)` for tangent-valued `a` of degree `k`
/// and `b`, with the induced connection on bivectors on the left.
pub fn product_rule_defect(a: &FormField, b: &FormField) -> Result<FormField> {
    let none = DegreeMask::none();
    let lhs = dnabla(&a.wedge_poly(b)?, &none)?;
    let mut rhs = dnabla(a, &none)?.wedge_poly(b)?;
    let sign = if a.degree() % 2 == 0 { 1.0 } else { -1.0 };
    rhs.axpy(sign, &a.wedge_poly(&dnabla(b, &none)?)?)?;
    lhs.sub(&rhs)
}

/// `∇A` as an endomorphism-valued 1-form: component `i` holds `∇_{∂_i} A`
/// with `(∇_i A)^a_b = ∂_i A^a_b + Γ^a_{il} A^l_b - Γ^l_{ib} A^a_l`.
pub fn cov_derivative(a: &FormField) -> Result<FormField> {
    if a.degree() != 1 || a.kind() != ValueKind::Tangent {
        return Err(Error::Kind("cov_derivative expects a tangent-valued 1-form".into()));
    }
    let n = a.n();
    let geom = a.geometry().clone();
    let da: Vec<FormField> = (0..n).map(|i| partial(a, i)).collect::<Result<_>>()?;
    let out = a.map_nodes(1, ValueKind::Endomorphism, |p, av, o| {
        let c = geom.christoffel(p);
        // A^a_b = av[b * n + a]
        for i in 0..n {
            let d = da[i].node(p);
            for r in 0..n {
                for s in 0..n {
                    let mut v = d[s * n + r];
                    for l in 0..n {
                        v += c[r * n * n + i * n + l] * av[s * n + l] - c[l * n * n + i * n + s] * av[l * n + r];
                    }
                    o[i * n * n + r * n + s] = v;
                }
            }
        }
    })?;
    Ok(out.with_margin(da[0].margin()))
}
