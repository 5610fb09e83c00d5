//! TOML scenario files: ambient space, immersion, samples and tolerances.
//!
//! ```toml
//! [ambient]
//! dim = 2
//! mode = "product"
//! p = 1
//! q = 1
//! blockA_metric = "flat"
//! blockB_metric = "flat"
//!
//! [immersion]
//! n = 1
//! map = ["cos(u1)", "sin(u1)"]
//! label = "circle"
//!
//! [samples]
//! grid = [[0.0, 1.0, 5]]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambient::{AmbientError, AmbientReport, AmbientSpace, Matrix};
use crate::expr::{parse, Expr};
use crate::subgeom::{GeomError, Immersion, DEFAULT_CLASSIFY_TOL};
use crate::theorems::{DEFAULT_FAIL_THRESHOLD, DEFAULT_IDENTITY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("[{section}]{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Parse {
        section: String,
        line: Option<usize>,
        message: String,
    },
    #[error("[{section}]: dimension mismatch: {message}")]
    DimensionMismatch { section: String, message: String },
    #[error("ambient validation failed: {0}")]
    AmbientValidationFailure(String),
    #[error("[immersion]: {0}")]
    Geometry(GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientMode {
    Product,
    Explicit,
}

/// A block metric: the keyword `"flat"` or `k²` row-major expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockMetric {
    Keyword(String),
    Entries(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub dim: usize,
    pub mode: AmbientMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(
        rename = "blockA_metric",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub block_a_metric: Option<BlockMetric>,
    #[serde(
        rename = "blockB_metric",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub block_b_metric: Option<BlockMetric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSpec {
    pub n: usize,
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub count: usize,
    pub seed: u64,
    /// `[lo, hi]` per parameter.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// `[start, end, count]` per parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<(f64, f64, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_identity_tol")]
    pub identity_tol: f64,
    #[serde(default = "default_classify_tol")]
    pub classify_tol: f64,
    #[serde(default = "default_fail_threshold")]
    pub fail_threshold: f64,
}

fn default_identity_tol() -> f64 {
    DEFAULT_IDENTITY_TOL
}
fn default_classify_tol() -> f64 {
    DEFAULT_CLASSIFY_TOL
}
fn default_fail_threshold() -> f64 {
    DEFAULT_FAIL_THRESHOLD
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_tol: DEFAULT_IDENTITY_TOL,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            fail_threshold: DEFAULT_FAIL_THRESHOLD,
        }
    }
}

/// The file contents before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub ambient: AmbientSpec,
    pub immersion: ImmersionSpec,
    #[serde(default)]
    pub samples: SamplesSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScenarioSpec {
    pub fn from_toml(src: &str) -> Result<Self, ScenarioError> {
        toml::from_str(src).map_err(|e| {
            let offset = e.span().map(|s| s.start);
            ScenarioError::Parse {
                section: offset.map_or_else(|| "document".to_string(), |o| section_at(src, o)),
                line: offset.map(|o| line_of(src, o)),
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario specs always serialize")
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn header_name(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix('[')?
        .strip_suffix(']')
        .map(|s| s.trim_matches(|c| c == '[' || c == ']').trim())
}

fn section_at(src: &str, offset: usize) -> String {
    src[..offset.min(src.len())]
        .lines()
        .filter_map(header_name)
        .next_back()
        .unwrap_or("document")
        .to_string()
}

/// Line of `key = ...` inside `[section]`, if present in the source.
fn key_line(src: Option<&str>, section: &str, key: &str) -> Option<usize> {
    let mut current = "";
    for (i, line) in src?.lines().enumerate() {
        if let Some(h) = header_name(line) {
            current = h;
            continue;
        }
        let t = line.trim_start();
        if current == section && t.starts_with(key) && t[key.len()..].trim_start().starts_with('=')
        {
            return Some(i + 1);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Downgrade an ambient validation failure to a warning.
    pub force: bool,
    /// Replaces the seed of `[samples] random`.
    pub seed: Option<u64>,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub spec: ScenarioSpec,
    pub ambient: AmbientSpace,
    pub immersion: Immersion,
    pub tolerances: Tolerances,
    pub validation: AmbientReport,
    pub warnings: Vec<String>,
}

struct Builder<'a> {
    src: Option<&'a str>,
}

impl Builder<'_> {
    fn parse_err(&self, section: &str, key: &str, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse {
            section: section.to_string(),
            line: key_line(self.src, section, key),
            message: message.into(),
        }
    }

    fn mismatch(&self, section: &str, message: impl Into<String>) -> ScenarioError {
        ScenarioError::DimensionMismatch {
            section: section.to_string(),
            message: message.into(),
        }
    }

    fn exprs(&self, section: &str, key: &str, list: &[String]) -> Result<Vec<Expr>, ScenarioError> {
        list.iter()
            .enumerate()
            .map(|(i, s)| {
                parse(s).map_err(|e| self.parse_err(section, key, format!("{key}[{i}] `{s}`: {e}")))
            })
            .collect()
    }

    fn square(&self, key: &str, list: &[String], k: usize) -> Result<Matrix<Expr>, ScenarioError> {
        if list.len() != k * k {
            return Err(self.mismatch(
                "ambient",
                format!(
                    "{key} has {} entries, expected {k}×{k} = {}",
                    list.len(),
                    k * k
                ),
            ));
        }
        let flat = self.exprs("ambient", key, list)?;
        Ok(flat.chunks(k).map(<[Expr]>::to_vec).collect())
    }

    fn block(
        &self,
        key: &str,
        spec: &Option<BlockMetric>,
        k: usize,
    ) -> Result<Matrix<Expr>, ScenarioError> {
        match spec {
            None => Err(self.parse_err("ambient", key, format!("missing `{key}`"))),
            Some(BlockMetric::Keyword(w)) if w == "flat" => Ok(crate::ambient::flat_block(k)),
            Some(BlockMetric::Keyword(w)) => Err(self.parse_err(
                "ambient",
                key,
                format!("`{w}` is neither \"flat\" nor an expression list"),
            )),
            Some(BlockMetric::Entries(list)) => self.square(key, list, k),
        }
    }

    fn ambient(&self, spec: &AmbientSpec) -> Result<AmbientSpace, ScenarioError> {
        let wrap = |e: AmbientError| self.parse_err("ambient", "mode", e.to_string());
        match spec.mode {
            AmbientMode::Product => {
                let (p, q) = match (spec.p, spec.q) {
                    (Some(p), Some(q)) => (p, q),
                    _ => {
                        return Err(self.parse_err(
                            "ambient",
                            "mode",
                            "product mode needs `p` and `q`",
                        ))
                    }
                };
                if p == 0 || q == 0 || p + q != spec.dim {
                    return Err(self.mismatch(
                        "ambient",
                        format!(
                            "p + q = {} must equal dim = {} with p, q ≥ 1",
                            p + q,
                            spec.dim
                        ),
                    ));
                }
                let a = self.block("blockA_metric", &spec.block_a_metric, p)?;
                let b = self.block("blockB_metric", &spec.block_b_metric, q)?;
                AmbientSpace::product_of(a, p, b, q).map_err(wrap)
            }
            AmbientMode::Explicit => {
                let metric = spec.metric.as_ref().ok_or_else(|| {
                    self.parse_err("ambient", "mode", "explicit mode needs `metric`")
                })?;
                let structure = spec.structure.as_ref().ok_or_else(|| {
                    self.parse_err("ambient", "mode", "explicit mode needs `structure`")
                })?;
                let metric = self.square("metric", metric, spec.dim)?;
                let structure = self.square("structure", structure, spec.dim)?;
                AmbientSpace::explicit(metric, structure).map_err(wrap)
            }
        }
    }

    fn samples(
        &self,
        spec: &SamplesSpec,
        n: usize,
        seed: Option<u64>,
    ) -> Result<Vec<Vec<f64>>, ScenarioError> {
        let given = [
            spec.points.is_some(),
            spec.grid.is_some(),
            spec.random.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            return Err(self.parse_err(
                "samples",
                "points",
                "exactly one of `points`, `grid`, `random` is required",
            ));
        }
        if let Some(points) = &spec.points {
            if let Some(bad) = points.iter().position(|p| p.len() != n) {
                return Err(self.mismatch(
                    "samples",
                    format!(
                        "point {bad} has {} coordinates, expected n = {n}",
                        points[bad].len()
                    ),
                ));
            }
            return Ok(points.clone());
        }
        if let Some(grid) = &spec.grid {
            if grid.len() != n {
                return Err(self.mismatch(
                    "samples",
                    format!("grid has {} axes, expected n = {n}", grid.len()),
                ));
            }
            return Ok(grid_points(grid));
        }
        let r = spec.random.as_ref().expect("one sampler present");
        if r.bounds.len() != n {
            return Err(self.mismatch(
                "samples",
                format!("box has {} ranges, expected n = {n}", r.bounds.len()),
            ));
        }
        Ok(random_points(r.count, seed.unwrap_or(r.seed), &r.bounds))
    }
}

fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Cartesian product of per-axis ranges, first axis slowest.
pub fn grid_points(axes: &[(f64, f64, usize)]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, &(s, e, c)| {
        let vals = linspace(s, e, c);
        acc.iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(Self::GAMMA);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn random_points(count: usize, seed: u64, bounds: &[[f64; 2]]) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            bounds
                .iter()
                .map(|[lo, hi]| lo + (hi - lo) * rng.next_f64())
                .collect()
        })
        .collect()
}

fn validation_summary(r: &AmbientReport) -> String {
    if let Some(f) = r.failures.first() {
        return f.clone();
    }
    if !r.positive_definite {
        return format!("metric not positive definite (min pivot {:e})", r.min_pivot);
    }
    format!(
        "F²=I residual {:e}, metric compatibility {:e}, ∇̄F residual {:e}",
        r.f_squared, r.metric_compat, r.parallel
    )
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec, opts: LoadOptions) -> Result<Self, ScenarioError> {
        Self::build(spec, None, opts)
    }

    pub fn from_toml(src: &str, opts: LoadOptions) -> Result<Self, ScenarioError> {
        let spec = ScenarioSpec::from_toml(src)?;
        Self::build(spec, Some(src), opts)
    }

    pub fn load(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&src, opts)
    }

    fn build(
        spec: ScenarioSpec,
        src: Option<&str>,
        opts: LoadOptions,
    ) -> Result<Self, ScenarioError> {
        let b = Builder { src };
        let ambient = b.ambient(&spec.ambient)?;
        let big_n = spec.ambient.dim;
        let imm_spec = &spec.immersion;
        if imm_spec.map.len() != big_n {
            return Err(b.mismatch(
                "immersion",
                format!(
                    "map has {} components but ambient dim = {big_n}",
                    imm_spec.map.len()
                ),
            ));
        }
        if imm_spec.n == 0 || imm_spec.n >= big_n {
            return Err(b.mismatch(
                "immersion",
                format!("n = {} must satisfy 1 ≤ n < dim = {big_n}", imm_spec.n),
            ));
        }
        let map = b.exprs("immersion", "map", &imm_spec.map)?;
        let samples = b.samples(&spec.samples, imm_spec.n, opts.seed)?;
        let label = imm_spec
            .label
            .clone()
            .unwrap_or_else(|| "scenario".to_string());
        let immersion = Immersion::new(label.clone(), imm_spec.n, map, samples)
            .map_err(ScenarioError::Geometry)?;
        let images = immersion.sample_images().map_err(ScenarioError::Geometry)?;
        let validation = ambient.validate(&images, None);
        let mut warnings = Vec::new();
        if !validation.pass {
            let msg = validation_summary(&validation);
            if !opts.force {
                return Err(ScenarioError::AmbientValidationFailure(msg));
            }
            warnings.push(format!("ambient validation failed: {msg}"));
        }
        if validation.structure_trivial {
            warnings.push("structure is ±I at every sample".to_string());
        }
        Ok(Self {
            label,
            tolerances: spec.tolerances,
            spec,
            ambient,
            immersion,
            validation,
            warnings,
        })
    }

    pub fn to_toml(&self) -> String {
        self.spec.to_toml()
    }
}

pub fn load_scenario(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Scenario, ScenarioError> {
    Scenario::load(path, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCLE: &str = r#"
[ambient]
dim = 2
mode = "product"
p = 1
q = 1
blockA_metric = "flat"
blockB_metric = "flat"

[immersion]
n = 1
map = ["cos(u1)", "sin(u1)"]
label = "circle"

[samples]
grid = [[0.0, 1.0, 5]]
"#;

    #[test]
    fn loads_circle() {
        let s = Scenario::from_toml(CIRCLE, LoadOptions::default()).unwrap();
        assert_eq!(s.label, "circle");
        assert_eq!(s.immersion.samples().len(), 5);
        assert_eq!(s.immersion.samples()[4], vec![1.0]);
        assert!(s.validation.pass);
        assert_eq!(s.tolerances, Tolerances::default());
    }

    #[test]
    fn export_round_trip() {
        let s = Scenario::from_toml(CIRCLE, LoadOptions::default()).unwrap();
        let again = Scenario::from_toml(&s.to_toml(), LoadOptions::default()).unwrap();
        assert_eq!(again.spec, s.spec);
        assert_eq!(again.immersion, s.immersion);
    }

    #[test]
    fn dimension_mismatch_names_section() {
        let src = CIRCLE.replace(
            "map = [\"cos(u1)\", \"sin(u1)\"]",
            "map = [\"cos(u1)\", \"sin(u1)\", \"u1\"]",
        );
        match Scenario::from_toml(&src, LoadOptions::default()) {
            Err(ScenarioError::DimensionMismatch { section, .. }) => {
                assert_eq!(section, "immersion")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let src = CIRCLE.replace("\"sin(u1)\"", "\"sin(u1\"");
        match Scenario::from_toml(&src, LoadOptions::default()) {
            Err(ScenarioError::Parse { section, line, .. }) => {
                assert_eq!(section, "immersion");
                assert_eq!(line, Some(12));
            }
            other => panic!("{other:?}"),
        }
        let src = CIRCLE.replace("n = 1", "n = ");
        match Scenario::from_toml(&src, LoadOptions::default()) {
            Err(ScenarioError::Parse { section, line, .. }) => {
                assert_eq!(section, "immersion");
                assert_eq!(line, Some(11));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rotation_structure_fails_validation() {
        let src = r#"
[ambient]
dim = 2
mode = "explicit"
metric = ["1", "0", "0", "1"]
structure = ["0", "-1", "1", "0"]

[immersion]
n = 1
map = ["u1", "0"]

[samples]
points = [[0.0], [1.0]]
"#;
        match Scenario::from_toml(src, LoadOptions::default()) {
            Err(ScenarioError::AmbientValidationFailure(msg)) => assert!(msg.contains("F²=I")),
            other => panic!("{other:?}"),
        }
        let forced = Scenario::from_toml(
            src,
            LoadOptions {
                force: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!forced.validation.pass);
        assert_eq!(forced.warnings.len(), 1);
    }

    #[test]
    fn random_samples_are_seeded() {
        let src = CIRCLE.replace(
            "grid = [[0.0, 1.0, 5]]",
            "random = { count = 4, seed = 7, box = [[-1.0, 1.0]] }",
        );
        let a = Scenario::from_toml(&src, LoadOptions::default()).unwrap();
        let b = Scenario::from_toml(&src, LoadOptions::default()).unwrap();
        assert_eq!(a.immersion.samples(), b.immersion.samples());
        let c = Scenario::from_toml(
            &src,
            LoadOptions {
                seed: Some(8),
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.immersion.samples(), c.immersion.samples());
        assert!(a
            .immersion
            .samples()
            .iter()
            .all(|p| (-1.0..1.0).contains(&p[0])));
    }

    #[test]
    fn splitmix_reference_values() {
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn grid_order() {
        let g = grid_points(&[(0.0, 1.0, 2), (5.0, 6.0, 2)]);
        assert_eq!(
            g,
            vec![
                vec![0.0, 5.0],
                vec![0.0, 6.0],
                vec![1.0, 5.0],
                vec![1.0, 6.0]
            ]
        );
    }
}
