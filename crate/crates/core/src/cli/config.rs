//! Run configuration: flat `section.key = value` text or JSON.
//!
//! ```text
//! # comment
//! manifold.kind = flat_torus
//! manifold.n = 4
//! manifold.res = 6
//! structure.kind = perturbed
//! structure.epsilon = 0.1
//! alpha.kind = axis
//! alpha.axis = 0
//! variant.family = plain
//! variant.mask = [1, 3]
//! probe.t = [0, 0.5, 1]
//! ```

use crate::calculus::DegreeMask;
use crate::error::{Error, Result};
use crate::variational::{Extension, Family, FunctionalVariant};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    FlatTorus,
    WarpedTorus,
    SphereChart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub kind: ManifoldKind,
    pub n: usize,
    pub res: usize,
    /// Sphere chart half-width.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    /// Warped torus conformal amplitude.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Sphere chart center; the origin when empty.
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub center: Vec<f64>,
}

fn default_cutoff() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    #[default]
    Constant,
    Perturbed,
    Octonionic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    #[serde(default)]
    pub kind: StructureKind,
    /// Row-major matrix, rows separated by `;`, entries by `,` or spaces.
    /// The standard block structure when absent.
    #[serde(default, deserialize_with = "opt_string_or_number", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub extension: Extension,
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self { kind: StructureKind::Constant, matrix: None, epsilon: default_epsilon(), seed: 0, extension: Extension::Zero }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    Axis,
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub kind: AlphaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, deserialize_with = "opt_string_or_number", skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
}

/// `none`, a single entry, or a list of entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskSpec {
    Named(String),
    One(usize),
    Many(Vec<usize>),
}

impl MaskSpec {
    pub fn to_mask(&self) -> Result<DegreeMask> {
        match self {
            MaskSpec::Named(s) if s == "none" => Ok(DegreeMask::none()),
            MaskSpec::Named(s) => Err(Error::Config(format!("unknown mask '{s}'"))),
            MaskSpec::One(k) => DegreeMask::masked(&[*k]),
            MaskSpec::Many(ks) if ks.is_empty() => Ok(DegreeMask::none()),
            MaskSpec::Many(ks) => DegreeMask::masked(ks),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Defaults to `[1]` for the plain family and `none` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_steps() -> usize {
    20
}

fn default_dt() -> f64 {
    1e-3
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { steps: default_steps(), dt: default_dt() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// `J_t = J`.
    #[default]
    Constant,
    /// `J_t = P_t J P_t⁻¹` with `P_t = exp(t S)`, `S` a seeded constant matrix.
    Conjugation,
    /// `J_t = (1 + max(0, t - exit_t)) J`, which leaves the structures after `exit_t`.
    Exit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub path: PathKind,
    #[serde(default = "default_ts", deserialize_with = "one_or_many")]
    pub t: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Scale of the conjugating generator.
    #[serde(default = "default_strength")]
    pub strength: f64,
    #[serde(default = "default_exit")]
    pub exit_t: f64,
}

fn default_ts() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_strength() -> f64 {
    0.25
}

fn default_exit() -> f64 {
    0.5
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { path: PathKind::Constant, t: default_ts(), seed: 0, strength: default_strength(), exit_t: default_exit() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Verdict tolerance is `max(floor, c h²)`.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_c() -> f64 {
    1e-3
}

fn default_floor() -> f64 {
    1e-8
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { c: default_c(), floor: default_floor() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub structure: StructureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaConfig>,
    #[serde(default)]
    pub variant: VariantConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn opt_string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    Ok(match Value::deserialize(d)? {
        Value::Null => None,
        Value::String(s) => Some(s),
        Value::Number(n) => Some(n.to_string()),
        other => return Err(serde::de::Error::custom(format!("expected a string, got {other}"))),
    })
}

fn scalar(raw: &str) -> Value {
    let s = raw.trim();
    if let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        return Value::String(inner.to_string());
    }
    if let Ok(i) = s.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(i) = s.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        if x.is_finite() {
            return Value::from(x);
        }
    }
    match s {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(s.to_string()),
    }
}

fn value(raw: &str) -> Value {
    let s = raw.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        if inner.trim().is_empty() {
            return Value::Array(Vec::new());
        }
        return Value::Array(inner.split(',').map(scalar).collect());
    }
    scalar(s)
}

/// Parses dotted `key = value` lines into nested JSON objects.
pub fn parse_dotted(text: &str) -> Result<Value> {
    let mut root = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let parts: Vec<&str> = key.trim().split('.').map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("line {}: malformed key '{}'", lineno + 1, key.trim())));
        }
        let mut node = &mut root;
        for p in &parts[..parts.len() - 1] {
            let entry = node.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("line {}: '{}' is both a value and a section", lineno + 1, p)))?;
        }
        let last = parts[parts.len() - 1].to_string();
        if node.insert(last, value(raw)).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{}'", lineno + 1, key.trim())));
        }
    }
    Ok(Value::Object(root))
}

impl RunConfig {
    /// Accepts JSON (first non-blank character `{`) or dotted text.
    pub fn parse(text: &str) -> Result<Self> {
        let tree = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?
        } else {
            parse_dotted(text)?
        };
        let cfg: RunConfig = serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let m = &self.manifold;
        if m.n < 2 || m.n > crate::exterior::MAX_DIM {
            return Err(Error::Config(format!("manifold.n = {} outside 2..={}", m.n, crate::exterior::MAX_DIM)));
        }
        if self.structure.kind == StructureKind::Octonionic
            && (m.kind != ManifoldKind::SphereChart || m.n != 6)
        {
            return Err(Error::Config("octonionic structure needs a 6-dimensional sphere chart".into()));
        }
        if !m.center.is_empty() && m.center.len() != m.n {
            return Err(Error::Config(format!("manifold.center has {} entries, expected {}", m.center.len(), m.n)));
        }
        if let Some(a) = &self.alpha {
            match a.kind {
                AlphaKind::Axis if a.axis.is_none() => return Err(Error::Config("alpha.axis missing".into())),
                AlphaKind::Gradient if a.f.is_none() => return Err(Error::Config("alpha.f missing".into())),
                _ => {}
            }
        }
        if self.variant.family.is_some() {
            self.functional_variant()?;
        }
        if !(self.flow.dt >= 0.0) {
            return Err(Error::Config("flow.dt must be non-negative".into()));
        }
        if self.probe.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("probe.t must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Rejects commands that integrate over a chart that cannot be integrated.
    pub fn require_integration(&self) -> Result<()> {
        if self.manifold.kind == ManifoldKind::SphereChart {
            return Err(Error::IntegrationUnsupported);
        }
        Ok(())
    }

    pub fn functional_variant(&self) -> Result<FunctionalVariant> {
        let family = self.variant.family.ok_or_else(|| Error::Config("variant.family missing".into()))?;
        let mask = match &self.variant.mask {
            Some(m) => m.to_mask()?,
            None if family == Family::Plain => DegreeMask::masked(&[1])?,
            None => DegreeMask::none(),
        };
        FunctionalVariant::new(family, mask)
    }

    /// Sorted dotted text that parses back to the same configuration.
    pub fn canonical(&self) -> String {
        let tree = serde_json::to_value(self).expect("config serializes");
        let mut lines = Vec::new();
        flatten("", &tree, &mut lines);
        lines.sort();
        lines.join("\n") + "\n"
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => {
            if matches!(scalar(s), Value::String(_)) && !s.starts_with('[') {
                s.clone()
            } else {
                format!("\"{s}\"")
            }
        }
        Value::Array(items) => format!("[{}]", items.iter().map(render).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Null => {}
        other => out.push(format!("{prefix} = {}", render(other))),
    }
}
