//! Seeded smooth test fields and structures. Every coefficient is a short
//! trigonometric sum with integer wave vectors, so samples are periodic on
//! the `[0, 2π)^n` tori and smooth on charts.

use crate::error::{Error, Result};
use crate::exterior::{FormField, ValueKind};
use crate::geometry::{ACStructure, ChartGeometry};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Debug)]
struct Mode {
    amp: f64,
    wave: Vec<f64>,
    phase: f64,
}

/// Random smooth scalar function: a constant plus `modes` low-frequency waves.
#[derive(Clone, Debug)]
pub struct SmoothFunction {
    offset: f64,
    modes: Vec<Mode>,
}

impl SmoothFunction {
    pub fn random<R: Rng>(rng: &mut R, n: usize, modes: usize) -> Self {
        let offset = rng.gen_range(-0.5..0.5);
        let modes = (0..modes)
            .map(|_| Mode {
                amp: rng.gen_range(-0.5..0.5),
                wave: (0..n).map(|_| rng.gen_range(-1i32..=1) as f64).collect(),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        Self { offset, modes }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .modes
                .iter()
                .map(|m| m.amp * (m.wave.iter().zip(x).map(|(k, v)| k * v).sum::<f64>() + m.phase).sin())
                .sum::<f64>()
    }
}

fn functions(n: usize, count: usize, seed: u64) -> Vec<SmoothFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| SmoothFunction::random(&mut rng, n, 2)).collect()
}

/// Smooth field of the given degree and kind, reproducible from `seed`.
pub fn smooth_field(geom: &Arc<ChartGeometry>, degree: usize, kind: ValueKind, seed: u64) -> Result<FormField> {
    let stride = crate::exterior::binomial(geom.n(), degree) * kind.fiber_dim(geom.n());
    let fs = functions(geom.n(), stride, seed);
    FormField::from_fn(geom, degree, kind, |x, out| {
        for (o, f) in out.iter_mut().zip(&fs) {
            *o = f.eval(x);
        }
    })
}

/// Smooth symmetric connection samples scaled by `amplitude`.
pub fn random_symmetric_christoffel(geom: &ChartGeometry, amplitude: f64, seed: u64) -> Vec<f64> {
    let n = geom.n();
    let fs = functions(n, n * n * n, seed);
    let mut out = vec![0.0; geom.node_count() * n * n * n];
    for (p, chunk) in out.chunks_mut(n * n * n).enumerate() {
        let x = geom.grid().coords(p);
        for (c, f) in chunk.iter_mut().zip(&fs) {
            *c = amplitude * f.eval(&x);
        }
    }
    out
}

/// Smooth matrix-valued function, row-major.
pub struct SmoothMatrix {
    n: usize,
    entries: Vec<SmoothFunction>,
}

impl SmoothMatrix {
    pub fn random(n: usize, seed: u64) -> Self {
        Self { n, entries: functions(n, n * n, seed) }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.entries[r * self.n + c].eval(x))
    }
}

/// `A_ε = exp(-εS) J0 exp(εS)` for a smooth random matrix field `S`; the
/// conjugation keeps `A² = -Id` exactly.
pub fn perturbed_ac(geom: &Arc<ChartGeometry>, j0: &[f64], epsilon: f64, seed: u64) -> Result<ACStructure> {
    let n = geom.n();
    if j0.len() != n * n {
        return Err(Error::Dimension(format!("structure matrix has {} entries, expected {}", j0.len(), n * n)));
    }
    let j = DMatrix::from_row_slice(n, n, j0);
    let s = SmoothMatrix::random(n, seed);
    ACStructure::from_matrices(geom, |x| {
        let es = s.eval(x) * epsilon;
        (-es.clone()).exp() * &j * es.exp()
    })
}

/// Constant random matrix with entries in `[-1, 1)`.
pub fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Sup norms of two samples of the same quantity on nested grids, taken
/// over the points where both have a valid node. Comparing on shared points
/// keeps grid-sampling of the maximum out of observed convergence orders.
pub fn sup_on_shared_nodes(coarse: &FormField, fine: &FormField) -> Result<(f64, f64)> {
    if coarse.stride() != fine.stride() {
        return Err(Error::Dimension("compared fields have different shapes".into()));
    }
    let grid = fine.geometry().grid();
    let mut found = false;
    let (mut c, mut f) = (0.0f64, 0.0f64);
    for p in coarse.valid_nodes() {
        let x = coarse.geometry().grid().coords(p);
        let Some(q) = grid.locate(&x).filter(|&q| fine.is_valid(q)) else {
            continue;
        };
        found = true;
        c = coarse.node(p).iter().fold(c, |m, v| m.max(v.abs()));
        f = fine.node(q).iter().fold(f, |m, v| m.max(v.abs()));
    }
    if !found {
        return Err(Error::Dimension("grids share no valid node".into()));
    }
    Ok((c, f))
}

/// `log2(coarse / fine)`, or `None` when both errors sit at the floor.
pub fn observed_order(coarse: f64, fine: f64, floor: f64) -> Option<f64> {
    if coarse <= floor && fine <= floor {
        None
    } else {
        Some((coarse / fine).log2())
    }
}
