use super::{
    act_end_into, act_poly_into, check_dim, tables, wedge_end_into, wedge_poly_into, wedge_scalar_into, MultiIndex,
    ValueKind,
};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// A single fiber value.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValue {
    kind: ValueKind,
    data: Vec<f64>,
}

impl PointValue {
    pub fn new(kind: ValueKind, n: usize, data: Vec<f64>) -> Result<Self> {
        kind.validate(n)?;
        if data.len() != kind.fiber_dim(n) {
            return Err(Error::Dimension(format!(
                "{kind} value in dimension {n} needs {} entries, got {}",
                kind.fiber_dim(n),
                data.len()
            )));
        }
        Ok(Self { kind: kind.normalized(), data })
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// An alternating form at one point, stored over sorted multi-indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PointForm {
    n: usize,
    degree: usize,
    kind: ValueKind,
    coeffs: Vec<f64>,
}

impl PointForm {
    pub fn zeros(n: usize, degree: usize, kind: ValueKind) -> Result<Self> {
        check_dim(n)?;
        kind.validate(n)?;
        let len = super::binomial(n, degree) * kind.fiber_dim(n);
        Ok(Self { n, degree, kind: kind.normalized(), coeffs: vec![0.0; len] })
    }

    pub fn from_coeffs(n: usize, degree: usize, kind: ValueKind, coeffs: Vec<f64>) -> Result<Self> {
        let mut form = Self::zeros(n, degree, kind)?;
        if coeffs.len() != form.coeffs.len() {
            return Err(Error::Dimension(format!(
                "degree-{degree} {kind} form in dimension {n} needs {} coefficients, got {}",
                form.coeffs.len(),
                coeffs.len()
            )));
        }
        form.coeffs = coeffs;
        Ok(form)
    }

    /// Identity endomorphism as a 0-form.
    pub fn identity_end(n: usize) -> Result<Self> {
        let mut id = Self::zeros(n, 0, ValueKind::Endomorphism)?;
        for a in 0..n {
            id.coeffs[a * n + a] = 1.0;
        }
        Ok(id)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn fiber_dim(&self) -> usize {
        self.kind.fiber_dim(self.n)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn component(&self, index: &MultiIndex) -> Result<PointValue> {
        if index.degree() != self.degree {
            return Err(Error::Degree(format!("multi-index of degree {} on a {}-form", index.degree(), self.degree)));
        }
        let f = self.fiber_dim();
        let p = tables(self.n).pos(index.mask());
        PointValue::new(self.kind, self.n, self.coeffs[p * f..(p + 1) * f].to_vec())
    }

    pub fn set_component(&mut self, index: &MultiIndex, value: &PointValue) -> Result<()> {
        if !value.kind().same_layout(self.kind) || index.degree() != self.degree {
            return Err(Error::Kind("component does not match form".into()));
        }
        let f = self.fiber_dim();
        let p = tables(self.n).pos(index.mask());
        self.coeffs[p * f..(p + 1) * f].copy_from_slice(value.data());
        Ok(())
    }

    /// Value on an arbitrary list of vectors (the alternating extension of
    /// the stored coefficients).
    pub fn evaluate(&self, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
        if vectors.len() != self.degree {
            return Err(Error::Degree(format!("{}-form evaluated on {} vectors", self.degree, vectors.len())));
        }
        if vectors.iter().any(|v| v.len() != self.n) {
            return Err(Error::Dimension("vector length differs from ambient dimension".into()));
        }
        let f = self.fiber_dim();
        let mut out = vec![0.0; f];
        if self.degree > self.n {
            return Ok(out);
        }
        let t = tables(self.n);
        for (p, &mask) in t.basis[self.degree].iter().enumerate() {
            let axes = MultiIndex::from_mask(mask);
            let k = self.degree;
            let det = if k == 0 {
                1.0
            } else {
                DMatrix::from_fn(k, k, |r, c| vectors[c][axes.axes()[r]]).determinant()
            };
            for (o, c) in out.iter_mut().zip(&self.coeffs[p * f..(p + 1) * f]) {
                *o += det * c;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("forms in dimensions {} and {}", self.n, other.n)));
        }
        Ok(())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        if self.degree != other.degree || !self.kind.same_layout(other.kind) {
            return Err(Error::Kind("forms differ in degree or kind".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs, ..self.clone() })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| s * c).collect(), ..self.clone() }
    }

    /// `β ∧ B` for a scalar form `β`; the kind of `B` is kept.
    pub fn wedge_scalar(&self, b: &PointForm) -> Result<PointForm> {
        self.check_shape(b)?;
        if self.kind != ValueKind::Scalar {
            return Err(Error::Kind(format!("left factor must be scalar-valued, got {}", self.kind)));
        }
        let mut out = PointForm::zeros(self.n, self.degree + b.degree, b.kind)?;
        if !out.is_empty() {
            wedge_scalar_into(tables(self.n), self.degree, b.degree, &self.coeffs, &b.coeffs, b.fiber_dim(), &mut out.coeffs);
        }
        Ok(out)
    }

    /// Product of endomorphism-valued forms.
    pub fn wedge_end(&self, b: &PointForm) -> Result<PointForm> {
        self.check_shape(b)?;
        if self.kind != ValueKind::Endomorphism || b.kind != ValueKind::Endomorphism {
            return Err(Error::Kind("wedge_end needs two endomorphism-valued forms".into()));
        }
        let mut out = PointForm::zeros(self.n, self.degree + b.degree, ValueKind::Endomorphism)?;
        if !out.is_empty() {
            wedge_end_into(tables(self.n), self.degree, b.degree, &self.coeffs, &b.coeffs, &mut out.coeffs);
        }
        Ok(out)
    }

    /// Product of polyvector-valued forms (tangent forms count as `Λ^1`).
    pub fn wedge_poly(&self, theta: &PointForm) -> Result<PointForm> {
        self.check_shape(theta)?;
        let (Some(j), Some(l)) = (self.kind.poly_degree(), theta.kind.poly_degree()) else {
            return Err(Error::Kind("wedge_poly needs polyvector-valued forms".into()));
        };
        if j == 0 || l == 0 {
            return Err(Error::Kind("wedge_poly needs polyvector-valued forms".into()));
        }
        let kind = ValueKind::Polyvector((j + l) as u8);
        kind.validate(self.n)?;
        let mut out = PointForm::zeros(self.n, self.degree + theta.degree, kind)?;
        if !out.is_empty() {
            wedge_poly_into(tables(self.n), self.degree, j, theta.degree, l, &self.coeffs, &theta.coeffs, &mut out.coeffs);
        }
        Ok(out)
    }

    /// Left action of an endomorphism-valued form on a tangent-valued form.
    pub fn act_end(&self, rho: &PointForm) -> Result<PointForm> {
        self.check_shape(rho)?;
        if self.kind != ValueKind::Endomorphism || rho.kind != ValueKind::Tangent {
            return Err(Error::Kind("act_end needs an endomorphism form acting on a tangent form".into()));
        }
        let mut out = PointForm::zeros(self.n, self.degree + rho.degree, ValueKind::Tangent)?;
        if !out.is_empty() {
            act_end_into(tables(self.n), self.degree, rho.degree, &self.coeffs, &rho.coeffs, &mut out.coeffs);
        }
        Ok(out)
    }

    /// Right action `ρ ∧ γ` of a `Λ^j`-valued `i`-form on a tangent-valued
    /// `s`-form; the result has degree `s - j + i` and vanishes when `s < j`.
    pub fn act_poly(&self, gamma: &PointForm) -> Result<PointForm> {
        self.check_shape(gamma)?;
        if self.kind != ValueKind::Tangent {
            return Err(Error::Kind("act_poly needs a tangent-valued left operand".into()));
        }
        let Some(j) = gamma.kind.poly_degree().filter(|&j| j > 0) else {
            return Err(Error::Kind("act_poly needs a polyvector-valued right operand".into()));
        };
        let (s, i) = (self.degree, gamma.degree);
        if s + i < j {
            return Err(Error::Degree(format!("right action of Λ^{j} on a {s}-form yields negative degree")));
        }
        let mut out = PointForm::zeros(self.n, s + i - j, ValueKind::Tangent)?;
        if s >= j && !out.is_empty() {
            act_poly_into(tables(self.n), s, j, i, &self.coeffs, &gamma.coeffs, &mut out.coeffs);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, k: usize, kind: ValueKind) -> PointForm {
        let len = crate::exterior::binomial(n, k) * kind.fiber_dim(n);
        PointForm::from_coeffs(n, k, kind, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn scalar_zero_form_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(&mut rng, 3, 2, ValueKind::Tangent);
        let beta = PointForm::from_coeffs(3, 0, ValueKind::Scalar, vec![2.5]).unwrap();
        let out = beta.wedge_scalar(&b).unwrap();
        assert_eq!(out, b.scale(2.5));
    }

    #[test]
    fn one_one_products_expand_over_s2() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 2;
        let beta = random(&mut rng, n, 1, ValueKind::Scalar);
        let b = random(&mut rng, n, 1, ValueKind::Tangent);
        let out = beta.wedge_scalar(&b).unwrap().evaluate(&[e(n, 0), e(n, 1)]).unwrap();
        let b0 = b.evaluate(&[e(n, 0)]).unwrap();
        let b1 = b.evaluate(&[e(n, 1)]).unwrap();
        let (x0, x1) = (beta.coeffs()[0], beta.coeffs()[1]);
        for a in 0..n {
            assert!((out[a] - (x0 * b1[a] - x1 * b0[a])).abs() < 1e-14);
        }

        let n = 3;
        let a = random(&mut rng, n, 1, ValueKind::Endomorphism);
        let c = random(&mut rng, n, 1, ValueKind::Endomorphism);
        let prod = a.wedge_end(&c).unwrap().evaluate(&[e(n, 0), e(n, 2)]).unwrap();
        let mat = |f: &PointForm, i: usize| DMatrix::from_row_slice(n, n, &f.evaluate(&[e(n, i)]).unwrap());
        let expected = mat(&a, 0) * mat(&c, 2) - mat(&a, 2) * mat(&c, 0);
        let got = DMatrix::from_row_slice(n, n, &prod);
        assert!((got - expected).norm() < 1e-13);
    }

    #[test]
    fn identity_end_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let id = PointForm::identity_end(4).unwrap();
        let beta = random(&mut rng, 4, 2, ValueKind::Endomorphism);
        assert!(id.wedge_end(&beta).unwrap().sub(&beta).unwrap().max_abs() < 1e-15);
        let rho = random(&mut rng, 4, 3, ValueKind::Tangent);
        assert!(id.act_end(&rho).unwrap().sub(&rho).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn act_end_one_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 3;
        let a = random(&mut rng, n, 1, ValueKind::Endomorphism);
        let rho = random(&mut rng, n, 1, ValueKind::Tangent);
        let got = a.act_end(&rho).unwrap().evaluate(&[e(n, 1), e(n, 2)]).unwrap();
        let m = |i: usize| DMatrix::from_row_slice(n, n, &a.evaluate(&[e(n, i)]).unwrap());
        let v = |i: usize| nalgebra::DVector::from_vec(rho.evaluate(&[e(n, i)]).unwrap());
        let expected = m(1) * v(2) - m(2) * v(1);
        for r in 0..n {
            assert!((got[r] - expected[r]).abs() < 1e-14);
        }
    }

    #[test]
    fn tangent_square_is_pointwise_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let a = random(&mut rng, n, 1, ValueKind::Tangent);
        let aa = a.wedge_poly(&a).unwrap();
        for x in 0..n {
            for y in 0..n {
                let got = aa.evaluate(&[e(n, x), e(n, y)]).unwrap();
                let ax = a.evaluate(&[e(n, x)]).unwrap();
                let ay = a.evaluate(&[e(n, y)]).unwrap();
                for (p, idx) in crate::exterior::basis(n, 2).iter().enumerate() {
                    let (i, j) = (idx.axes()[0], idx.axes()[1]);
                    assert!((got[p] - (ax[i] * ay[j] - ax[j] * ay[i])).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn even_degree_square_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [2, 4, 6] {
            for k in [0, 2] {
                let g = random(&mut rng, n, k, ValueKind::Tangent);
                assert!(g.wedge_poly(&g).unwrap().max_abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn right_action_contracts_last_slots() {
        // (ρ ∧ (A ∧ A))(X, Y) = ρ(A X, A Y)
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let rho = random(&mut rng, n, 2, ValueKind::Tangent);
        let a = random(&mut rng, n, 1, ValueKind::Tangent);
        let out = rho.act_poly(&a.wedge_poly(&a).unwrap()).unwrap();
        assert_eq!(out.degree(), 2);
        for x in 0..n {
            for y in 0..n {
                let got = out.evaluate(&[e(n, x), e(n, y)]).unwrap();
                let ax = a.evaluate(&[e(n, x)]).unwrap();
                let ay = a.evaluate(&[e(n, y)]).unwrap();
                let expected = rho.evaluate(&[ax, ay]).unwrap();
                for r in 0..n {
                    assert!((got[r] - expected[r]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn right_action_below_polyvector_degree_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random(&mut rng, 4, 1, ValueKind::Tangent);
        let gamma = random(&mut rng, 4, 2, ValueKind::Polyvector(2));
        let out = rho.act_poly(&gamma).unwrap();
        assert_eq!(out.degree(), 1);
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn high_degree_products_are_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random(&mut rng, 2, 2, ValueKind::Scalar);
        let b = random(&mut rng, 2, 1, ValueKind::Tangent);
        let out = a.wedge_scalar(&b).unwrap();
        assert_eq!(out.degree(), 3);
        assert!(out.is_empty());
    }

    #[test]
    fn errors_on_bad_operands() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random(&mut rng, 3, 1, ValueKind::Tangent);
        let b = random(&mut rng, 4, 1, ValueKind::Tangent);
        assert!(matches!(a.wedge_poly(&b), Err(Error::Dimension(_))));
        assert!(matches!(a.wedge_scalar(&a), Err(Error::Kind(_))));
        let p2 = random(&mut rng, 4, 0, ValueKind::Polyvector(2));
        let t = random(&mut rng, 4, 0, ValueKind::Tangent);
        assert!(matches!(p2.wedge_poly(&t), Err(Error::Unsupported(_))));
        assert!(PointForm::zeros(4, 0, ValueKind::Polyvector(5)).is_ok());
    }

    #[test]
    fn evaluation_is_alternating() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, k) in [(3, 2), (4, 3), (5, 2)] {
            let form = random(&mut rng, n, k, ValueKind::Tangent);
            let vs: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let base = form.evaluate(&vs).unwrap();
            let mut swapped = vs.clone();
            swapped.swap(0, 1);
            let flipped = form.evaluate(&swapped).unwrap();
            for (a, b) in base.iter().zip(&flipped) {
                assert!((a + b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn products_match_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=4 {
            for k in 0..=3.min(n) {
                for l in 0..=3.min(n) {
                    let errs = oracle::compare_all_products(&mut rng, n, k, l, 5).unwrap();
                    assert!(errs.iter().all(|(_, e)| *e <= 1e-12), "n={n} k={k} l={l}: {errs:?}");
                }
            }
        }
    }
}
