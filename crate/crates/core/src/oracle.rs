//! Literal permutation-sum evaluation of the products, used to check the
//! shuffle kernels. Nothing here touches the shuffle tables: operands are
//! evaluated through their alternating extension and the full `S_{k+l}` sum
//! is taken.

use crate::error::Result;
use crate::exterior::{basis, PointForm, ValueKind};
use itertools::Itertools;
use rand::Rng;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn perm_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn pick(xs: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| xs[i].clone()).collect()
}

fn perm_sum<F>(m: usize, len: usize, mut term: F) -> Result<Vec<f64>>
where
    F: FnMut(&[usize]) -> Result<Vec<f64>>,
{
    let mut acc = vec![0.0; len];
    for p in (0..m).permutations(m) {
        let s = perm_sign(&p);
        for (a, t) in acc.iter_mut().zip(term(&p)?) {
            *a += s * t;
        }
    }
    Ok(acc)
}

/// `(β ∧ B)(X)` for a scalar `β`.
pub fn wedge_scalar(beta: &PointForm, b: &PointForm, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (k, l) = (beta.degree(), b.degree());
    let norm = factorial(k) * factorial(l);
    let mut v = perm_sum(k + l, b.fiber_dim(), |p| {
        let s = beta.evaluate(&pick(xs, &p[..k]))?[0];
        Ok(b.evaluate(&pick(xs, &p[k..]))?.into_iter().map(|x| s * x).collect())
    })?;
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|m| a[r * n + m] * b[m * n + c]).sum();
        }
    }
    out
}

/// `(α ∧ β)(X)` for endomorphism-valued forms.
pub fn wedge_end(a: &PointForm, b: &PointForm, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (n, k, l) = (a.n(), a.degree(), b.degree());
    let norm = factorial(k) * factorial(l);
    let mut v = perm_sum(k + l, n * n, |p| {
        Ok(matmul(n, &a.evaluate(&pick(xs, &p[..k]))?, &b.evaluate(&pick(xs, &p[k..]))?))
    })?;
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// `(α ∧ ρ)(X)` for the left action of an endomorphism-valued form.
pub fn act_end(a: &PointForm, rho: &PointForm, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (n, k, s) = (a.n(), a.degree(), rho.degree());
    let norm = factorial(k) * factorial(s);
    let mut v = perm_sum(k + s, n, |p| {
        let m = a.evaluate(&pick(xs, &p[..k]))?;
        let y = rho.evaluate(&pick(xs, &p[k..]))?;
        Ok((0..n).map(|r| (0..n).map(|c| m[r * n + c] * y[c]).sum()).collect())
    })?;
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Components of `v ∧ w` for vectors, over sorted pairs.
fn vector_wedge(n: usize, v: &[f64], w: &[f64]) -> Vec<f64> {
    basis(n, 2)
        .iter()
        .map(|idx| {
            let (a, b) = (idx.axes()[0], idx.axes()[1]);
            v[a] * w[b] - v[b] * w[a]
        })
        .collect()
}

/// `(γ ∧ θ)(X)` for tangent-valued `γ, θ`, including the factor one half.
pub fn wedge_poly(gamma: &PointForm, theta: &PointForm, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (n, i, k) = (gamma.n(), gamma.degree(), theta.degree());
    let norm = 2.0 * factorial(i) * factorial(k);
    let mut v = perm_sum(i + k, basis(n, 2).len(), |p| {
        Ok(vector_wedge(n, &gamma.evaluate(&pick(xs, &p[..i]))?, &theta.evaluate(&pick(xs, &p[i..]))?))
    })?;
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// `(ρ ∧ γ)(X)` for the right action of a `Λ^j`-valued form, `j ∈ {1, 2}`.
pub fn act_poly(rho: &PointForm, gamma: &PointForm, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rho.n();
    let j = gamma.kind().poly_degree().unwrap_or(0);
    let (s, i) = (rho.degree(), gamma.degree());
    if s < j {
        return Ok(vec![0.0; n]);
    }
    let free = s - j;
    let norm = factorial(free) * factorial(i);
    let slots = basis(n, j);
    let mut v = perm_sum(free + i, n, |p| {
        let w = gamma.evaluate(&pick(xs, &p[free..]))?;
        let head = pick(xs, &p[..free]);
        let mut acc = vec![0.0; n];
        for (jj, idx) in slots.iter().enumerate() {
            if w[jj] == 0.0 {
                continue;
            }
            let mut args = head.clone();
            for &axis in idx.axes() {
                let mut e = vec![0.0; n];
                e[axis] = 1.0;
                args.push(e);
            }
            for (a, r) in acc.iter_mut().zip(rho.evaluate(&args)?) {
                *a += w[jj] * r;
            }
        }
        Ok(acc)
    })?;
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

pub fn random_form<R: Rng>(rng: &mut R, n: usize, k: usize, kind: ValueKind) -> Result<PointForm> {
    let len = crate::exterior::binomial(n, k) * kind.fiber_dim(n);
    PointForm::from_coeffs(n, k, kind, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

pub fn random_vectors<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs every product against its oracle on `instances` random operand pairs
/// of degrees `(k, l)` evaluated on random vectors; returns the worst absolute
/// error per product.
pub fn compare_all_products<R: Rng>(
    rng: &mut R,
    n: usize,
    k: usize,
    l: usize,
    instances: usize,
) -> Result<Vec<(&'static str, f64)>> {
    let mut worst = vec![
        ("wedge_scalar", 0.0f64),
        ("wedge_end", 0.0),
        ("act_end", 0.0),
        ("wedge_poly", 0.0),
        ("act_poly_j1", 0.0),
        ("act_poly_j2", 0.0),
    ];
    for _ in 0..instances {
        let xs = random_vectors(rng, n, k + l);

        let beta = random_form(rng, n, k, ValueKind::Scalar)?;
        let b = random_form(rng, n, l, ValueKind::Tangent)?;
        let got = beta.wedge_scalar(&b)?.evaluate(&xs)?;
        worst[0].1 = worst[0].1.max(max_diff(&got, &wedge_scalar(&beta, &b, &xs)?));

        let a = random_form(rng, n, k, ValueKind::Endomorphism)?;
        let c = random_form(rng, n, l, ValueKind::Endomorphism)?;
        let got = a.wedge_end(&c)?.evaluate(&xs)?;
        worst[1].1 = worst[1].1.max(max_diff(&got, &wedge_end(&a, &c, &xs)?));

        let rho = random_form(rng, n, l, ValueKind::Tangent)?;
        let got = a.act_end(&rho)?.evaluate(&xs)?;
        worst[2].1 = worst[2].1.max(max_diff(&got, &act_end(&a, &rho, &xs)?));

        if n >= 2 {
            let g = random_form(rng, n, k, ValueKind::Tangent)?;
            let got = g.wedge_poly(&b)?.evaluate(&xs)?;
            worst[3].1 = worst[3].1.max(max_diff(&got, &wedge_poly(&g, &b, &xs)?));
        }

        // right action: ρ of degree k + 1 eats a Λ^1 value of an l-form
        let r1 = random_form(rng, n, k + 1, ValueKind::Tangent)?;
        let got = r1.act_poly(&b)?.evaluate(&xs)?;
        worst[4].1 = worst[4].1.max(max_diff(&got, &act_poly(&r1, &b, &xs)?));

        if n >= 2 {
            let r2 = random_form(rng, n, k + 2, ValueKind::Tangent)?;
            let g2 = random_form(rng, n, l, ValueKind::Polyvector(2))?;
            let got = r2.act_poly(&g2)?.evaluate(&xs)?;
            worst[5].1 = worst[5].1.max(max_diff(&got, &act_poly(&r2, &g2, &xs)?));
        }
    }
    Ok(worst)
}

/// `‖ρ ∧ (γ ∧ γ′) − (ρ ∧ γ) ∧ γ′‖_∞` for tangent-valued `γ, γ′` acting on the
/// right of `ρ`.
pub fn module_axiom_defect(rho: &PointForm, gamma: &PointForm, gamma2: &PointForm) -> Result<f64> {
    let lhs = rho.act_poly(&gamma.wedge_poly(gamma2)?)?;
    let rhs = rho.act_poly(gamma)?.act_poly(gamma2)?;
    Ok(lhs.sub(&rhs)?.max_abs())
}
