use super::{
    act_end_into, act_poly_into, binomial, tables, wedge_end_into, wedge_poly_into, wedge_scalar_into, PointForm,
    ValueKind,
};
use crate::error::{Error, Result};
use crate::geometry::ChartGeometry;
use rayon::prelude::*;
use std::sync::Arc;

/// A form sampled at every node of a chart grid.
///
/// Coefficients are node-major: node `p` owns the slice
/// `data[p * stride .. (p + 1) * stride]`, laid out like a [`PointForm`].
/// `margin` counts boundary layers (on non-periodic axes) where the samples
/// are not valid because a stencil ran off the grid.
#[derive(Clone, Debug)]
pub struct FormField {
    geom: Arc<ChartGeometry>,
    degree: usize,
    kind: ValueKind,
    data: Vec<f64>,
    margin: usize,
}

impl FormField {
    pub fn zeros(geom: &Arc<ChartGeometry>, degree: usize, kind: ValueKind) -> Result<Self> {
        kind.validate(geom.n())?;
        let stride = binomial(geom.n(), degree) * kind.fiber_dim(geom.n());
        Ok(Self {
            geom: geom.clone(),
            degree,
            kind: kind.normalized(),
            data: vec![0.0; stride * geom.node_count()],
            margin: 0,
        })
    }

    pub fn from_data(geom: &Arc<ChartGeometry>, degree: usize, kind: ValueKind, data: Vec<f64>) -> Result<Self> {
        let mut f = Self::zeros(geom, degree, kind)?;
        if data.len() != f.data.len() {
            return Err(Error::Dimension(format!("field needs {} samples, got {}", f.data.len(), data.len())));
        }
        f.data = data;
        Ok(f)
    }

    /// Samples `f(coords, out)` at every node.
    pub fn from_fn<F>(geom: &Arc<ChartGeometry>, degree: usize, kind: ValueKind, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let mut field = Self::zeros(geom, degree, kind)?;
        let stride = field.stride();
        if stride > 0 {
            let grid = geom.grid();
            field.data.par_chunks_mut(stride).enumerate().for_each(|(p, out)| f(&grid.coords(p), out));
        }
        Ok(field)
    }

    /// The same point form at every node.
    pub fn constant(geom: &Arc<ChartGeometry>, form: &PointForm) -> Result<Self> {
        if form.n() != geom.n() {
            return Err(Error::Dimension(format!("{}-dimensional form on a {}-dimensional chart", form.n(), geom.n())));
        }
        Self::from_fn(geom, form.degree(), form.kind(), |_, out| out.copy_from_slice(form.coeffs()))
    }

    pub fn geometry(&self) -> &Arc<ChartGeometry> {
        &self.geom
    }

    pub fn n(&self) -> usize {
        self.geom.n()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn fiber_dim(&self) -> usize {
        self.kind.fiber_dim(self.n())
    }

    /// Number of coefficients per node.
    pub fn stride(&self) -> usize {
        binomial(self.n(), self.degree) * self.fiber_dim()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        self.margin = margin;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.stride() == 0
    }

    pub fn node_count(&self) -> usize {
        self.geom.node_count()
    }

    pub fn node(&self, p: usize) -> &[f64] {
        let s = self.stride();
        &self.data[p * s..(p + 1) * s]
    }

    pub fn node_mut(&mut self, p: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[p * s..(p + 1) * s]
    }

    pub fn point(&self, p: usize) -> PointForm {
        PointForm::from_coeffs(self.n(), self.degree, self.kind, self.node(p).to_vec()).expect("consistent layout")
    }

    pub fn is_valid(&self, p: usize) -> bool {
        self.geom.grid().is_interior(p, self.margin)
    }

    pub fn valid_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&p| self.is_valid(p))
    }

    pub fn same_geometry(&self, other: &FormField) -> bool {
        Arc::ptr_eq(&self.geom, &other.geom)
    }

    fn check_geometry(&self, other: &FormField) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }

    fn check_same(&self, other: &FormField) -> Result<()> {
        self.check_geometry(other)?;
        if self.degree != other.degree || !self.kind.same_layout(other.kind) {
            return Err(Error::Kind(format!(
                "degree-{} {} field combined with degree-{} {} field",
                self.degree, self.kind, other.degree, other.kind
            )));
        }
        Ok(())
    }

    /// Sup norm over valid nodes.
    pub fn max_abs(&self) -> f64 {
        let s = self.stride();
        if s == 0 {
            return 0.0;
        }
        self.valid_nodes().map(|p| self.node(p).iter().fold(0.0f64, |m, c| m.max(c.abs()))).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(FormField { data, margin: self.margin.max(other.margin), ..self.clone() })
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(FormField { data, margin: self.margin.max(other.margin), ..self.clone() })
    }

    pub fn scale(&self, s: f64) -> FormField {
        FormField { data: self.data.iter().map(|c| s * c).collect(), ..self.clone() }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &FormField) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        self.margin = self.margin.max(other.margin);
        Ok(())
    }

    /// Zeroes the samples outside the valid region.
    pub fn clear_invalid(&mut self) {
        let s = self.stride();
        if s == 0 || self.margin == 0 {
            return;
        }
        let grid = self.geom.grid().clone();
        let m = self.margin;
        self.data.par_chunks_mut(s).enumerate().for_each(|(p, c)| {
            if !grid.is_interior(p, m) {
                c.iter_mut().for_each(|x| *x = 0.0);
            }
        });
    }

    /// Node-parallel evaluation of a binary coefficient kernel.
    pub(crate) fn zip_with<F>(&self, other: &FormField, degree: usize, kind: ValueKind, kernel: F) -> Result<FormField>
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Sync,
    {
        self.check_geometry(other)?;
        let mut out = FormField::zeros(&self.geom, degree, kind)?;
        out.margin = self.margin.max(other.margin);
        let s = out.stride();
        if s > 0 {
            out.data.par_chunks_mut(s).enumerate().for_each(|(p, dst)| kernel(self.node(p), other.node(p), dst));
        }
        Ok(out)
    }

    /// Node-parallel evaluation of a unary coefficient kernel that also sees
    /// the node index.
    pub(crate) fn map_nodes<F>(&self, degree: usize, kind: ValueKind, kernel: F) -> Result<FormField>
    where
        F: Fn(usize, &[f64], &mut [f64]) + Sync,
    {
        let mut out = FormField::zeros(&self.geom, degree, kind)?;
        out.margin = self.margin;
        let s = out.stride();
        if s > 0 {
            out.data.par_chunks_mut(s).enumerate().for_each(|(p, dst)| kernel(p, self.node(p), dst));
        }
        Ok(out)
    }

    pub fn wedge_scalar(&self, b: &FormField) -> Result<FormField> {
        if self.kind != ValueKind::Scalar {
            return Err(Error::Kind(format!("left factor must be scalar-valued, got {}", self.kind)));
        }
        let (k, l, fdim) = (self.degree, b.degree, b.fiber_dim());
        let t = tables(self.n());
        self.zip_with(b, k + l, b.kind, |x, y, o| wedge_scalar_into(t, k, l, x, y, fdim, o))
    }

    pub fn wedge_end(&self, b: &FormField) -> Result<FormField> {
        if self.kind != ValueKind::Endomorphism || b.kind != ValueKind::Endomorphism {
            return Err(Error::Kind("wedge_end needs two endomorphism-valued fields".into()));
        }
        let (k, l) = (self.degree, b.degree);
        let t = tables(self.n());
        self.zip_with(b, k + l, ValueKind::Endomorphism, |x, y, o| wedge_end_into(t, k, l, x, y, o))
    }

    pub fn wedge_poly(&self, theta: &FormField) -> Result<FormField> {
        let (Some(j), Some(l)) = (self.kind.poly_degree(), theta.kind.poly_degree()) else {
            return Err(Error::Kind("wedge_poly needs polyvector-valued fields".into()));
        };
        if j == 0 || l == 0 {
            return Err(Error::Kind("wedge_poly needs polyvector-valued fields".into()));
        }
        let kind = ValueKind::Polyvector((j + l) as u8);
        kind.validate(self.n())?;
        let (i, k) = (self.degree, theta.degree);
        let t = tables(self.n());
        self.zip_with(theta, i + k, kind, |x, y, o| wedge_poly_into(t, i, j, k, l, x, y, o))
    }

    pub fn act_end(&self, rho: &FormField) -> Result<FormField> {
        if self.kind != ValueKind::Endomorphism || rho.kind != ValueKind::Tangent {
            return Err(Error::Kind("act_end needs an endomorphism field acting on a tangent field".into()));
        }
        let (k, s) = (self.degree, rho.degree);
        let t = tables(self.n());
        self.zip_with(rho, k + s, ValueKind::Tangent, |x, y, o| act_end_into(t, k, s, x, y, o))
    }

    pub fn act_poly(&self, gamma: &FormField) -> Result<FormField> {
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
        let t = tables(self.n());
        self.zip_with(gamma, s + i - j, ValueKind::Tangent, |x, y, o| {
            if s >= j {
                act_poly_into(t, s, j, i, x, y, o)
            }
        })
    }
}

/// Applies a pointwise operation node by node. All fields must share one
/// geometry; the output inherits it.
pub fn lift<F>(op: F, fields: &[&FormField]) -> Result<FormField>
where
    F: Fn(&[PointForm]) -> Result<PointForm> + Sync,
{
    let first = fields.first().ok_or_else(|| Error::Degree("lift needs at least one field".into()))?;
    if fields.iter().any(|f| !f.same_geometry(first)) {
        return Err(Error::GeometryMismatch);
    }
    let geom = first.geometry().clone();
    let nodes = geom.node_count();
    let results: Vec<PointForm> = (0..nodes)
        .into_par_iter()
        .map(|p| op(&fields.iter().map(|f| f.point(p)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let probe = &results[0];
    let mut data = Vec::with_capacity(nodes * probe.coeffs().len());
    for r in &results {
        if r.degree() != probe.degree() || r.kind() != probe.kind() {
            return Err(Error::Kind("pointwise operation changed shape between nodes".into()));
        }
        data.extend_from_slice(r.coeffs());
    }
    let margin = fields.iter().map(|f| f.margin()).max().unwrap_or(0);
    Ok(FormField::from_data(&geom, probe.degree(), probe.kind(), data)?.with_margin(margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::make_flat_torus;

    #[test]
    fn lift_matches_node_loop() {
        let geom = make_flat_torus(4, 4).unwrap();
        let a = fixtures::smooth_field(&geom, 1, ValueKind::Endomorphism, 1).unwrap();
        let rho = fixtures::smooth_field(&geom, 2, ValueKind::Tangent, 2).unwrap();
        let fast = a.act_end(&rho).unwrap();
        let lifted = lift(|f| f[0].act_end(&f[1]), &[&a, &rho]).unwrap();
        for p in 0..geom.node_count() {
            let expected = a.point(p).act_end(&rho.point(p)).unwrap();
            for ((x, y), z) in fast.node(p).iter().zip(lifted.node(p)).zip(expected.coeffs()) {
                assert_eq!(x, z);
                assert_eq!(y, z);
            }
        }
    }

    #[test]
    fn lift_square_on_torus_is_pointwise_wedge() {
        let geom = make_flat_torus(4, 4).unwrap();
        let a = fixtures::smooth_field(&geom, 1, ValueKind::Tangent, 3).unwrap();
        let aa = lift(|f| f[0].wedge_poly(&f[0]), &[&a]).unwrap();
        for p in [0, 17, 255] {
            assert_eq!(aa.node(p), a.point(p).wedge_poly(&a.point(p)).unwrap().coeffs());
        }
    }

    #[test]
    fn lift_on_single_node_is_the_pointwise_op() {
        let geom = crate::geometry::single_node(2).unwrap();
        let form = PointForm::from_coeffs(2, 1, ValueKind::Tangent, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let f = FormField::constant(&geom, &form).unwrap();
        let out = lift(|x| x[0].wedge_poly(&x[0]), &[&f]).unwrap();
        assert_eq!(out.node(0), form.wedge_poly(&form).unwrap().coeffs());
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let g1 = make_flat_torus(2, 4).unwrap();
        let g2 = make_flat_torus(2, 4).unwrap();
        let a = FormField::zeros(&g1, 1, ValueKind::Tangent).unwrap();
        let b = FormField::zeros(&g2, 1, ValueKind::Tangent).unwrap();
        assert!(matches!(a.wedge_poly(&b), Err(Error::GeometryMismatch)));
        assert!(matches!(lift(|f| Ok(f[0].clone()), &[&a, &b]), Err(Error::GeometryMismatch)));
    }
}
