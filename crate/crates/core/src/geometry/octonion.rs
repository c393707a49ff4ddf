//! Octonion multiplication and the seven-dimensional cross product.
//!
//! Imaginary units `e_1..e_7` multiply along the oriented lines of the Fano
//! plane: `e_a e_b = e_c` for each cyclic rotation of the triples below.

pub const FANO: [[usize; 3]; 7] = [[1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 7], [5, 6, 1], [6, 7, 2], [7, 1, 3]];

/// `(sign, index)` of the product `e_a e_b` for `a, b` in `0..8`.
fn unit_product(a: usize, b: usize) -> (f64, usize) {
    match (a, b) {
        (0, _) => (1.0, b),
        (_, 0) => (1.0, a),
        _ if a == b => (-1.0, 0),
        _ => {
            for t in FANO {
                for r in 0..3 {
                    let (x, y, z) = (t[r], t[(r + 1) % 3], t[(r + 2) % 3]);
                    if (x, y) == (a, b) {
                        return (1.0, z);
                    }
                    if (y, x) == (a, b) {
                        return (-1.0, z);
                    }
                }
            }
            unreachable!("every pair of distinct imaginary units lies on one Fano line")
        }
    }
}

pub fn mul(x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for a in 0..8 {
        for b in 0..8 {
            let (s, c) = unit_product(a, b);
            out[c] += s * x[a] * y[b];
        }
    }
    out
}

/// Cross product on `R^7 = Im(O)`; `x[i]` is the `e_{i+1}` component.
pub fn cross(x: &[f64], y: &[f64]) -> [f64; 7] {
    let mut out = [0.0; 7];
    for t in FANO {
        for r in 0..3 {
            let (a, b, c) = (t[r] - 1, t[(r + 1) % 3] - 1, t[(r + 2) % 3] - 1);
            out[c] += x[a] * y[b] - x[b] * y[a];
        }
    }
    out
}

/// Matrix of `v ↦ p × v`, row-major.
pub fn cross_matrix(p: &[f64]) -> [f64; 49] {
    let mut m = [0.0; 49];
    for col in 0..7 {
        let mut e = [0.0; 7];
        e[col] = 1.0;
        let v = cross(p, &e);
        for row in 0..7 {
            m[row * 7 + col] = v[row];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn imag(v: &[f64]) -> [f64; 8] {
        let mut o = [0.0; 8];
        o[1..].copy_from_slice(v);
        o
    }

    #[test]
    fn cross_is_half_commutator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xy = mul(&imag(&x), &imag(&y));
            let yx = mul(&imag(&y), &imag(&x));
            let c = cross(&x, &y);
            for i in 0..7 {
                assert!((c[i] - 0.5 * (xy[i + 1] - yx[i + 1])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let y: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = |v: &[f64; 8]| v.iter().map(|c| c * c).sum::<f64>();
        assert!((n(&mul(&x, &y)) - n(&x) * n(&y)).abs() < 1e-12);
    }

    #[test]
    fn unit_cross_squares_to_minus_identity_on_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        p.iter_mut().for_each(|c| *c /= r);
        let v: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - pv * b).collect();
        let jjw = cross(&p, &cross(&p, &w));
        for i in 0..7 {
            assert!((jjw[i] + w[i]).abs() < 1e-14);
        }
    }
}
