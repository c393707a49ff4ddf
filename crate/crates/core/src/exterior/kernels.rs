//! Slice kernels behind the pointwise products. Every kernel accumulates into
//! `out`, which the caller sizes and zeroes.

use super::{concat_sign, Tables};

/// Scalar `k`-form times a `l`-form with values in a fiber of dimension `fdim`.
pub(crate) fn wedge_scalar_into(t: &Tables, k: usize, l: usize, beta: &[f64], b: &[f64], fdim: usize, out: &mut [f64]) {
    for term in t.shuffles(k, l) {
        let c = term.sign * beta[term.left as usize];
        if c == 0.0 {
            continue;
        }
        let src = &b[term.right as usize * fdim..(term.right as usize + 1) * fdim];
        let dst = &mut out[term.out as usize * fdim..(term.out as usize + 1) * fdim];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += c * s;
        }
    }
}

/// Endomorphism-valued product; values combine by composition.
pub(crate) fn wedge_end_into(t: &Tables, k: usize, l: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = t.n;
    let f = n * n;
    for term in t.shuffles(k, l) {
        let lhs = &a[term.left as usize * f..(term.left as usize + 1) * f];
        let rhs = &b[term.right as usize * f..(term.right as usize + 1) * f];
        let dst = &mut out[term.out as usize * f..(term.out as usize + 1) * f];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += lhs[r * n + m] * rhs[m * n + c];
                }
                dst[r * n + c] += term.sign * acc;
            }
        }
    }
}

/// Left action of an endomorphism-valued `k`-form on a tangent-valued `s`-form.
pub(crate) fn act_end_into(t: &Tables, k: usize, s: usize, a: &[f64], rho: &[f64], out: &mut [f64]) {
    let n = t.n;
    for term in t.shuffles(k, s) {
        let lhs = &a[term.left as usize * n * n..(term.left as usize + 1) * n * n];
        let v = &rho[term.right as usize * n..(term.right as usize + 1) * n];
        let dst = &mut out[term.out as usize * n..(term.out as usize + 1) * n];
        for r in 0..n {
            let mut acc = 0.0;
            for m in 0..n {
                acc += lhs[r * n + m] * v[m];
            }
            dst[r] += term.sign * acc;
        }
    }
}

/// Polyvector-valued product of a `Λ^j`-valued `i`-form and a `Λ^l`-valued
/// `k`-form, with the extra factor one half.
#[allow(clippy::too_many_arguments)]
pub(crate) fn wedge_poly_into(
    t: &Tables,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    gamma: &[f64],
    theta: &[f64],
    out: &mut [f64],
) {
    let fj = t.dim(j);
    let fl = t.dim(l);
    let fo = t.dim(j + l);
    let values = t.shuffles(j, l);
    for term in t.shuffles(i, k) {
        let lhs = &gamma[term.left as usize * fj..(term.left as usize + 1) * fj];
        let rhs = &theta[term.right as usize * fl..(term.right as usize + 1) * fl];
        let dst = &mut out[term.out as usize * fo..(term.out as usize + 1) * fo];
        for v in values {
            dst[v.out as usize] += 0.5 * term.sign * v.sign * lhs[v.left as usize] * rhs[v.right as usize];
        }
    }
}

/// Right action of a `Λ^j`-valued `i`-form on a tangent-valued `s`-form: the
/// last `j` slots of the tangent form eat the polyvector value.
pub(crate) fn act_poly_into(t: &Tables, s: usize, j: usize, i: usize, rho: &[f64], gamma: &[f64], out: &mut [f64]) {
    let n = t.n;
    debug_assert!(s >= j);
    let free = s - j;
    let fj = t.dim(j);
    for term in t.shuffles(free, i) {
        let free_mask = t.basis[free][term.left as usize];
        let value = &gamma[term.right as usize * fj..(term.right as usize + 1) * fj];
        let dst = &mut out[term.out as usize * n..(term.out as usize + 1) * n];
        for (jj, &slot_mask) in t.basis[j].iter().enumerate() {
            let w = value[jj];
            if w == 0.0 || free_mask & slot_mask != 0 {
                continue;
            }
            let p = t.pos(free_mask | slot_mask);
            let c = term.sign * concat_sign(free_mask, slot_mask) * w;
            let src = &rho[p * n..(p + 1) * n];
            for (d, r) in dst.iter_mut().zip(src) {
                *d += c * r;
            }
        }
    }
}
