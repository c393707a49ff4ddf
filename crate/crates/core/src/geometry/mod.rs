//! Chart-sampled manifolds: grids, metrics, torsion-free connections, and
//! the example almost-complex structures and closed 1-forms built on them.

mod alpha;
pub mod expr;
pub mod octonion;
mod structure;

pub use alpha::{make_alpha, AlphaSpec, AuxiliaryOneForm};
pub use structure::{check_ac, make_constant_ac, AC_TOLERANCE, make_s6_octonionic_ac, standard_complex, ACStructure};

use crate::error::{Error, Result};
use crate::exterior::check_dim;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Tensor-product sampling grid. Axis `n - 1` varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    res: Vec<usize>,
    periodic: Vec<bool>,
    lo: Vec<f64>,
    step: Vec<f64>,
    strides: Vec<usize>,
    nodes: usize,
}

impl Grid {
    /// `[0, len)^n` with `res` nodes per axis and wraparound.
    pub fn periodic_box(n: usize, res: usize, len: f64) -> Self {
        Self::build(vec![res; n], vec![true; n], vec![0.0; n], vec![len / res as f64; n])
    }

    /// Closed box `[lo, hi]` per axis, endpoints included.
    pub fn closed_box(lo: Vec<f64>, hi: Vec<f64>, res: usize) -> Self {
        let n = lo.len();
        let step = lo.iter().zip(&hi).map(|(a, b)| if res > 1 { (b - a) / (res - 1) as f64 } else { 0.0 }).collect();
        Self::build(vec![res; n], vec![false; n], lo, step)
    }

    fn build(res: Vec<usize>, periodic: Vec<bool>, lo: Vec<f64>, step: Vec<f64>) -> Self {
        let n = res.len();
        let mut strides = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * res[a + 1];
        }
        let nodes = res.iter().product();
        Self { n, res, periodic, lo, step, strides, nodes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn all_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.step[axis]
    }

    pub fn max_step(&self) -> f64 {
        self.step.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    pub fn index(&self, p: usize) -> Vec<usize> {
        (0..self.n).map(|a| (p / self.strides[a]) % self.res[a]).collect()
    }

    pub fn node_at(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, p: usize) -> Vec<f64> {
        (0..self.n).map(|a| self.lo[a] + ((p / self.strides[a]) % self.res[a]) as f64 * self.step[a]).collect()
    }

    /// Node sitting at `x` (to within a millionth of a step), if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.n);
        for a in 0..self.n {
            let t = (x[a] - self.lo[a]) / self.step[a];
            let i = t.round();
            if (t - i).abs() > 1e-6 {
                return None;
            }
            let r = self.res[a] as f64;
            let i = if self.periodic[a] { i.rem_euclid(r) } else { i };
            if i < 0.0 || i >= r {
                return None;
            }
            idx.push(i as usize);
        }
        Some(self.node_at(&idx))
    }

    /// Neighbor `offset` steps along `axis`; `None` off a non-periodic edge.
    pub fn shift(&self, p: usize, axis: usize, offset: isize) -> Option<usize> {
        let r = self.res[axis] as isize;
        let i = ((p / self.strides[axis]) % self.res[axis]) as isize;
        let mut j = i + offset;
        if self.periodic[axis] {
            j = j.rem_euclid(r);
        } else if j < 0 || j >= r {
            return None;
        }
        Some((p as isize + (j - i) * self.strides[axis] as isize) as usize)
    }

    /// Whether `p` lies at least `margin` layers inside every non-periodic axis.
    pub fn is_interior(&self, p: usize, margin: usize) -> bool {
        if margin == 0 {
            return true;
        }
        (0..self.n).all(|a| {
            self.periodic[a] || {
                let i = (p / self.strides[a]) % self.res[a];
                i >= margin && i + margin < self.res[a]
            }
        })
    }
}

/// How the Christoffel samples were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connection {
    LeviCivita,
    /// User-supplied torsion-free connection, not necessarily metric.
    Injected,
}

/// A grid with metric, connection and volume density samples.
#[derive(Clone, Debug)]
pub struct ChartGeometry {
    grid: Grid,
    metric: Vec<f64>,
    inverse: Vec<f64>,
    christoffel: Vec<f64>,
    sqrt_det: Vec<f64>,
    connection: Connection,
    euclidean: bool,
    label: String,
}

impl ChartGeometry {
    /// Samples `metric(x, g)` and `christoffel(x, gamma)` at every node.
    /// `gamma[k * n * n + i * n + j]` is `Γ^k_ij`; lower indices are
    /// symmetrized.
    pub fn sampled<M, C>(grid: Grid, label: &str, connection: Connection, metric: M, christoffel: C) -> Result<Self>
    where
        M: Fn(&[f64], &mut [f64]) + Sync,
        C: Fn(&[f64], &mut [f64]) + Sync,
    {
        let n = grid.n();
        check_dim(n)?;
        let nodes = grid.node_count();
        let mut g = vec![0.0; nodes * n * n];
        g.par_chunks_mut(n * n).enumerate().for_each(|(p, out)| metric(&grid.coords(p), out));
        let mut gamma = vec![0.0; nodes * n * n * n];
        gamma.par_chunks_mut(n * n * n).enumerate().for_each(|(p, out)| christoffel(&grid.coords(p), out));
        Self::from_samples(grid, label, connection, g, gamma)
    }

    pub fn from_samples(
        grid: Grid,
        label: &str,
        connection: Connection,
        metric: Vec<f64>,
        mut christoffel: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.n();
        check_dim(n)?;
        let nodes = grid.node_count();
        if metric.len() != nodes * n * n || christoffel.len() != nodes * n * n * n {
            return Err(Error::Dimension("metric or connection samples do not match the grid".into()));
        }
        for chunk in christoffel.chunks_mut(n * n * n) {
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let avg = 0.5 * (chunk[k * n * n + i * n + j] + chunk[k * n * n + j * n + i]);
                        chunk[k * n * n + i * n + j] = avg;
                        chunk[k * n * n + j * n + i] = avg;
                    }
                }
            }
        }
        let mut inverse = vec![0.0; nodes * n * n];
        let mut sqrt_det = vec![0.0; nodes];
        for p in 0..nodes {
            let g = DMatrix::from_row_slice(n, n, &metric[p * n * n..(p + 1) * n * n]);
            if (&g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) {
                return Err(Error::SingularMetric { node: p });
            }
            let chol = g.clone().cholesky().ok_or(Error::SingularMetric { node: p })?;
            sqrt_det[p] = chol.l().diagonal().product();
            inverse[p * n * n..(p + 1) * n * n].copy_from_slice(chol.inverse().transpose().as_slice());
        }
        let euclidean = metric.chunks(n * n).all(|g| (0..n * n).all(|e| g[e] == if e % (n + 1) == 0 { 1.0 } else { 0.0 }));
        Ok(Self { grid, metric, inverse, christoffel, sqrt_det, connection, euclidean, label: label.to_string() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn connection(&self) -> Connection {
        self.connection
    }

    /// `g_ij` at node `p`, row-major.
    pub fn metric(&self, p: usize) -> &[f64] {
        let s = self.n() * self.n();
        &self.metric[p * s..(p + 1) * s]
    }

    pub fn inverse_metric(&self, p: usize) -> &[f64] {
        let s = self.n() * self.n();
        &self.inverse[p * s..(p + 1) * s]
    }

    /// `Γ^k_ij` at node `p`, at offset `k * n * n + i * n + j`.
    pub fn christoffel(&self, p: usize) -> &[f64] {
        let s = self.n() * self.n() * self.n();
        &self.christoffel[p * s..(p + 1) * s]
    }

    pub fn sqrt_det(&self, p: usize) -> f64 {
        self.sqrt_det[p]
    }

    /// Whether `g` is the identity matrix at every node.
    pub fn is_euclidean(&self) -> bool {
        self.euclidean
    }

    pub fn integrable(&self) -> bool {
        self.grid.all_periodic()
    }

    /// Trapezoid weight of every node (uniform on periodic grids).
    pub fn quadrature_weight(&self) -> Result<f64> {
        if !self.integrable() {
            return Err(Error::IntegrationUnsupported);
        }
        Ok(self.grid.cell_volume())
    }

    /// Same grid and metric with a user-supplied torsion-free connection.
    pub fn with_christoffel(&self, christoffel: Vec<f64>) -> Result<ChartGeometry> {
        let label = format!("{} (injected connection)", self.label);
        Self::from_samples(self.grid.clone(), &label, Connection::Injected, self.metric.clone(), christoffel)
    }

    /// Largest violation of `g SPD`, `Γ^k_ij = Γ^k_ji` and
    /// `vol = sqrt(det g)` over all nodes.
    pub fn consistency_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for p in 0..self.node_count() {
            let g = DMatrix::from_row_slice(n, n, self.metric(p));
            let eig = g.clone().symmetric_eigen();
            if eig.eigenvalues.min() <= 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max((g.determinant().sqrt() - self.sqrt_det(p)).abs());
            let c = self.christoffel(p);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        worst = worst.max((c[k * n * n + i * n + j] - c[k * n * n + j * n + i]).abs());
                    }
                }
            }
        }
        worst
    }
}

fn check_even(n: usize) -> Result<()> {
    check_dim(n)?;
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("almost-complex geometry needs even dimension, got {n}")));
    }
    Ok(())
}

fn identity(n: usize, scale: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for a in 0..n {
        out[a * n + a] = scale;
    }
}

/// Christoffels of the conformal metric `e^{2φ} δ` from the gradient of `φ`.
fn conformal_christoffel(dphi: &[f64], out: &mut [f64]) {
    let n = dphi.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if i == k {
                    v += dphi[j];
                }
                if j == k {
                    v += dphi[i];
                }
                if i == j {
                    v -= dphi[k];
                }
                out[k * n * n + i * n + j] = v;
            }
        }
    }
}

/// Flat torus `[0, 2π)^n`.
pub fn make_flat_torus(n: usize, res: usize) -> Result<Arc<ChartGeometry>> {
    check_even(n)?;
    if res < 4 {
        return Err(Error::Dimension(format!("torus resolution must be at least 4, got {res}")));
    }
    let grid = Grid::periodic_box(n, res, 2.0 * PI);
    let label = format!("flat torus T^{n}, res {res}");
    Ok(Arc::new(ChartGeometry::sampled(grid, &label, Connection::LeviCivita, |_, g| identity(n, 1.0, g), |_, c| {
        c.iter_mut().for_each(|x| *x = 0.0)
    })?))
}

/// Conformal factor exponent of the warped torus and its gradient.
fn warp(x: &[f64], amplitude: f64) -> (f64, Vec<f64>) {
    let n = x.len();
    let mut phi = 0.0;
    let mut dphi = vec![0.0; n];
    for i in 0..n {
        let j = (i + 1) % n;
        phi += amplitude * x[i].sin() * x[j].cos();
        dphi[i] += amplitude * x[i].cos() * x[j].cos();
        dphi[j] -= amplitude * x[i].sin() * x[j].sin();
    }
    (phi, dphi)
}

/// Torus with the conformal metric `exp(2a Σ sin x_i cos x_{i+1}) δ` and its
/// analytic Levi-Civita connection.
pub fn make_warped_torus(n: usize, res: usize, amplitude: f64) -> Result<Arc<ChartGeometry>> {
    check_even(n)?;
    if res < 4 {
        return Err(Error::Dimension(format!("torus resolution must be at least 4, got {res}")));
    }
    let grid = Grid::periodic_box(n, res, 2.0 * PI);
    let label = format!("warped torus T^{n}, res {res}, amplitude {amplitude}");
    Ok(Arc::new(ChartGeometry::sampled(
        grid,
        &label,
        Connection::LeviCivita,
        |x, g| identity(n, (2.0 * warp(x, amplitude).0).exp(), g),
        |x, c| conformal_christoffel(&warp(x, amplitude).1, c),
    )?))
}

/// Stereographic chart of the round sphere on `[-R, R]^n`.
pub fn make_sphere_chart(n: usize, res: usize, cutoff: f64) -> Result<Arc<ChartGeometry>> {
    make_sphere_chart_at(n, res, cutoff, &vec![0.0; n])
}

/// Stereographic chart on the box `center + [-R, R]^n`.
pub fn make_sphere_chart_at(n: usize, res: usize, cutoff: f64, center: &[f64]) -> Result<Arc<ChartGeometry>> {
    check_even(n)?;
    if center.len() != n {
        return Err(Error::Dimension(format!("chart center has {} coordinates, expected {n}", center.len())));
    }
    if res < 3 || cutoff <= 0.0 {
        return Err(Error::Dimension("sphere chart needs res >= 3 and a positive cutoff".into()));
    }
    let lo = center.iter().map(|c| c - cutoff).collect();
    let hi = center.iter().map(|c| c + cutoff).collect();
    let grid = Grid::closed_box(lo, hi, res);
    let label = format!("stereographic chart of S^{n}, res {res}, cutoff {cutoff}");
    Ok(Arc::new(ChartGeometry::sampled(
        grid,
        &label,
        Connection::LeviCivita,
        |x, g| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            identity(n, 4.0 / (1.0 + r2).powi(2), g)
        },
        |x, c| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let dphi: Vec<f64> = x.iter().map(|v| -2.0 * v / (1.0 + r2)).collect();
            conformal_christoffel(&dphi, c)
        },
    )?))
}

/// One-node flat chart at the origin, for pointwise work.
pub fn single_node(n: usize) -> Result<Arc<ChartGeometry>> {
    check_dim(n)?;
    let grid = Grid::closed_box(vec![0.0; n], vec![0.0; n], 1);
    Ok(Arc::new(ChartGeometry::sampled(grid, "single node", Connection::LeviCivita, |_, g| identity(n, 1.0, g), |_, c| {
        c.iter_mut().for_each(|x| *x = 0.0)
    })?))
}

/// Christoffel samples with the number of invalid boundary layers.
#[derive(Clone, Debug)]
pub struct SampledChristoffel {
    pub values: Vec<f64>,
    pub margin: usize,
}

fn metric_partials(geom: &ChartGeometry, p: usize) -> Option<Vec<f64>> {
    // dg[i * n * n + a * n + b] = ∂_i g_ab
    let n = geom.n();
    let grid = geom.grid();
    let mut dg = vec![0.0; n * n * n];
    for i in 0..n {
        let fwd = grid.shift(p, i, 1)?;
        let bwd = grid.shift(p, i, -1)?;
        let h2 = 2.0 * grid.step(i);
        for ab in 0..n * n {
            dg[i * n * n + ab] = (geom.metric(fwd)[ab] - geom.metric(bwd)[ab]) / h2;
        }
    }
    Some(dg)
}

/// Levi-Civita connection of the sampled metric by central differences.
/// Boundary layers of non-periodic axes are left at zero and reported as
/// the margin.
pub fn christoffel_from_metric(geom: &ChartGeometry) -> Result<SampledChristoffel> {
    let n = geom.n();
    let margin = usize::from(!geom.integrable());
    let mut values = vec![0.0; geom.node_count() * n * n * n];
    values.par_chunks_mut(n * n * n).enumerate().for_each(|(p, out)| {
        let Some(dg) = metric_partials(geom, p) else { return };
        let ginv = geom.inverse_metric(p);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[k * n + l]
                            * (dg[i * n * n + j * n + l] + dg[j * n * n + i * n + l] - dg[l * n * n + i * n + j]);
                    }
                    out[k * n * n + i * n + j] = 0.5 * s;
                }
            }
        }
    });
    if (0..geom.node_count()).any(|p| geom.grid().is_interior(p, margin) && metric_partials(geom, p).is_none()) {
        return Err(Error::Dimension("grid too coarse for central differences".into()));
    }
    Ok(SampledChristoffel { values, margin })
}

/// Sup over interior nodes of `|∇g|`, with `∂g` by central differences.
pub fn metric_compatibility_residual(geom: &ChartGeometry) -> f64 {
    let n = geom.n();
    let mut worst = 0.0f64;
    for p in 0..geom.node_count() {
        let Some(dg) = metric_partials(geom, p) else { continue };
        let g = geom.metric(p);
        let c = geom.christoffel(p);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = dg[i * n * n + j * n + l];
                    for m in 0..n {
                        v -= c[m * n * n + i * n + j] * g[m * n + l] + c[m * n * n + i * n + l] * g[j * n + m];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}
