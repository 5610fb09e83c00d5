//! Built-in scenarios with closed-form expectations.
//!
//! Each entry is a [`ScenarioSpec`], so it goes through exactly the same
//! build path as a file and exports losslessly.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use thiserror::Error;

use crate::scenario::{
    AmbientMode, AmbientSpec, BlockMetric, ImmersionSpec, LoadOptions, SamplesSpec, Scenario,
    ScenarioError, ScenarioSpec, Tolerances,
};
use crate::subgeom::Classification;
use crate::theorems::Theorem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

/// Expected outcomes, each derived by hand independently of the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub classification: Classification,
    /// Minimal at every sample.
    pub minimal: bool,
    /// Pseudo-umbilical at every sample.
    pub pseudo_umbilical: bool,
    pub mean_curvature_sq: Option<f64>,
    pub distribution_dims: Option<(usize, usize)>,
    /// Whether each theorem's identity holds at every sample (T2, T3, T4).
    pub identity_everywhere: [bool; 3],
}

impl Expected {
    pub fn identity(&self, theorem: Theorem) -> bool {
        match theorem {
            Theorem::T2 => self.identity_everywhere[0],
            Theorem::T3 => self.identity_everywhere[1],
            Theorem::T4 => self.identity_everywhere[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogScenario {
    pub label: &'static str,
    /// Derivation notes for every expected value.
    pub description: &'static str,
    pub spec: ScenarioSpec,
    pub expected: Expected,
}

impl CatalogScenario {
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        Scenario::from_spec(self.spec.clone(), LoadOptions::default())
    }
}

const LABELS: [&str; 10] = [
    "plane-invariant",
    "diagonal-line",
    "circle",
    "square-torus-aligned",
    "square-torus-rotated",
    "rect-torus",
    "semi-invariant-plane",
    "anti-invariant-curve",
    "sphere",
    "curved-block",
];

pub fn catalog_list() -> &'static [&'static str] {
    &LABELS
}

pub fn catalog_all() -> Vec<CatalogScenario> {
    LABELS
        .iter()
        .map(|l| catalog_get(l).expect("listed labels exist"))
        .collect()
}

fn flat_product(p: usize, q: usize) -> AmbientSpec {
    AmbientSpec {
        dim: p + q,
        mode: AmbientMode::Product,
        p: Some(p),
        q: Some(q),
        block_a_metric: Some(BlockMetric::Keyword("flat".into())),
        block_b_metric: Some(BlockMetric::Keyword("flat".into())),
        metric: None,
        structure: None,
    }
}

fn spec(
    label: &str,
    ambient: AmbientSpec,
    n: usize,
    map: &[&str],
    points: Vec<Vec<f64>>,
) -> ScenarioSpec {
    ScenarioSpec {
        ambient,
        immersion: ImmersionSpec {
            n,
            map: map.iter().map(|s| s.to_string()).collect(),
            label: Some(label.to_string()),
        },
        samples: SamplesSpec {
            points: Some(points),
            ..Default::default()
        },
        tolerances: Tolerances::default(),
    }
}

fn pts1(v: &[f64]) -> Vec<Vec<f64>> {
    v.iter().map(|x| vec![*x]).collect()
}

fn pts2(v: &[[f64; 2]]) -> Vec<Vec<f64>> {
    v.iter().map(|p| p.to_vec()).collect()
}

const TORUS_SAMPLES: [[f64; 2]; 4] = [[0.1, 0.2], [0.9, -1.3], [2.0, 0.5], [-1.1, 2.7]];
const PLANE_SAMPLES: [[f64; 2]; 3] = [[0.0, 0.0], [0.5, -1.0], [2.0, 3.0]];

pub fn catalog_get(label: &str) -> Result<CatalogScenario, CatalogError> {
    use Classification::*;
    let expected =
        |classification, minimal, pseudo_umbilical, h2: Option<f64>, dims, ids| Expected {
            classification,
            minimal,
            pseudo_umbilical,
            mean_curvature_sq: h2,
            distribution_dims: dims,
            identity_everywhere: ids,
        };
    let (description, spec, expected) = match label {
        "plane-invariant" => (
            "Coordinate plane x3 = 0 in R2 x R1. F fixes both tangent directions, so ω = 0; \
             h = 0 so H = 0 and every identity holds through the minimal branch.",
            spec(
                label,
                flat_product(2, 1),
                2,
                &["u1", "u2", "0"],
                pts2(&PLANE_SAMPLES),
            ),
            expected(Invariant, true, true, Some(0.0), Some((2, 0)), [true; 3]),
        ),
        "diagonal-line" => (
            "Line t -> (t, t) in R1 x R1. F(1,1) = (1,-1) is orthogonal to the line, so φ = 0; \
             a straight line is minimal.",
            spec(
                label,
                flat_product(1, 1),
                1,
                &["u1", "u1"],
                pts1(&[0.0, 1.0, -2.5]),
            ),
            expected(
                AntiInvariant,
                true,
                true,
                Some(0.0),
                Some((0, 1)),
                [true; 3],
            ),
        ),
        "circle" => (
            "Unit circle in R1 x R1. With e = (-sin u, cos u) and ν = (cos u, sin u): \
             g(Fe, e) = -cos 2u and g(Fe, ν) = -sin 2u. Both vary, so the \
             circle is generic, with rank φ = 1 at u = 0 and 0 at u = π/4. h(e,e) = -ν, \
             ‖H‖² = 1, and a curve is always pseudo-umbilical. At u = π/8 the T3 obstruction is \
             cos(π/4) and the T4 obstruction is cos²(π/4)·sin(π/4).",
            spec(
                label,
                flat_product(1, 1),
                1,
                &["cos(u1)", "sin(u1)"],
                pts1(&[0.0, FRAC_PI_8, FRAC_PI_4, 1.0, 2.5]),
            ),
            expected(Generic, false, true, Some(1.0), None, [false, false, false]),
        ),
        "square-torus-aligned" => (
            "Product of unit circles, one per factor of R2 x R2. Each tangent direction lies in \
             one factor, so F preserves TM and ω = 0. h(e1,e1) and h(e2,e2) are the two unit \
             inward normals, H is half their sum, ‖H‖² = 1/2 and A_H = (1/2) I. T2 and T4 hold \
             through the invariant branch; T3 fails because φ = diag(1,-1) ≠ 0.",
            spec(
                label,
                flat_product(2, 2),
                2,
                &["cos(u1)", "sin(u1)", "cos(u2)", "sin(u2)"],
                pts2(&TORUS_SAMPLES),
            ),
            expected(
                Invariant,
                false,
                true,
                Some(0.5),
                Some((2, 0)),
                [true, false, true],
            ),
        ),
        "square-torus-rotated" => (
            "The square torus composed with the rotation by π/6 in the (x2, x3) plane. The \
             rotation is an isometry of R4, so h, H and pseudo-umbilicity are unchanged \
             (‖H‖² = 1/2), but it does not commute with F, so ω ≠ 0 and the torus is generic. \
             T2 fails with residual ‖H‖²‖ωX‖ = (1/2)‖ωX‖.",
            spec(
                label,
                flat_product(2, 2),
                2,
                &[
                    "cos(u1)",
                    "0.8660254037844386*sin(u1) - 0.5*cos(u2)",
                    "0.5*sin(u1) + 0.8660254037844386*cos(u2)",
                    "sin(u2)",
                ],
                pts2(&TORUS_SAMPLES),
            ),
            expected(Generic, false, true, Some(0.5), None, [false, false, false]),
        ),
        "rect-torus" => (
            "Circles of radii 1 and 2 in the two factors of R2 x R2. Invariant as for the square \
             torus. In unit frames h(e1,e1) = -ν1, h(e2,e2) = -ν2/2, H = -(ν1 + ν2/2)/2 and \
             ‖H‖² = 5/16, while g(h(e1,e1),H) = 1/2: not pseudo-umbilical, gap 3/16 = 0.1875. \
             Proof residual checks are skipped. ω = 0 and B = 0 kill both sides of T2 and T4; \
             T3 reduces to g(h(X,φY),H) ≠ 0.",
            spec(
                label,
                flat_product(2, 2),
                2,
                &["cos(u1)", "sin(u1)", "2*cos(u2)", "2*sin(u2)"],
                pts2(&TORUS_SAMPLES),
            ),
            expected(
                Invariant,
                false,
                false,
                Some(5.0 / 16.0),
                Some((2, 0)),
                [true, false, true],
            ),
        ),
        "semi-invariant-plane" => (
            "Plane (s, t/√2, t/√2, 0) in R2 x R2. F e1 = e1 and F e2 = (0, 1/√2, -1/√2, 0) is \
             normal, so φ = diag(1, 0), ωφ = 0 and dim D = dim D⊥ = 1. A plane is minimal.",
            spec(
                label,
                flat_product(2, 2),
                2,
                &["u1", "u2*sqrt(0.5)", "u2*sqrt(0.5)", "0"],
                pts2(&PLANE_SAMPLES),
            ),
            expected(
                ProperSemiInvariant,
                true,
                true,
                Some(0.0),
                Some((1, 1)),
                [true; 3],
            ),
        ),
        "anti-invariant-curve" => (
            "Curve (cos t, sin t, cos t, sin t) in R2 x R2 of speed √2. F of the tangent is \
             (-sin t, cos t, sin t, -cos t), orthogonal to it, so φ = 0. The curvature vector \
             is -f/2, so ‖H‖² = 1/2. T3 holds via the anti-invariant branch, T4 via \
             ωφ = 0; T2 fails since ω ≠ 0.",
            spec(
                label,
                flat_product(2, 2),
                1,
                &["cos(u1)", "sin(u1)", "cos(u1)", "sin(u1)"],
                pts1(&[0.0, 0.4, 1.3, 2.9]),
            ),
            expected(
                AntiInvariant,
                false,
                true,
                Some(0.5),
                Some((0, 1)),
                [false, true, true],
            ),
        ),
        "sphere" => (
            "Unit sphere in R2 x R1, samples away from the poles. Totally umbilical with \
             h(X,Y) = -g(X,Y) f, so ‖H‖² = 1. At (√2/2, 0, √2/2), i.e. u = (0, π/4), the \
             latitude direction X = ∂/∂u2 has ωX of unit length and the T2 residual is 1. \
             φ and ω both vary, so the sphere is generic and every identity fails somewhere.",
            spec(
                label,
                flat_product(2, 1),
                2,
                &["cos(u1)*cos(u2)", "sin(u1)*cos(u2)", "sin(u2)"],
                pts2(&[
                    [0.0, FRAC_PI_4],
                    [0.5, 0.3],
                    [1.2, -0.6],
                    [2.0, 1.0],
                    [-0.7, 0.2],
                ]),
            ),
            expected(Generic, false, true, Some(1.0), None, [false, false, false]),
        ),
        "curved-block" => (
            "Cylinder x1 = π/3 in (round-sphere block dx1² + sin²x1 dx2²) x R1. Tangent \
             directions ∂x2 and ∂x3 lie in single factors, so ω = 0. The only second \
             fundamental form term is h(∂2,∂2) = Γ¹₂₂ ∂1 = -sin x1 cos x1 ∂1, giving \
             ‖H‖² = cot²(π/3)/4 = 1/12 and A_H ≠ ‖H‖² I. Christoffels are nonzero throughout.",
            spec(
                label,
                AmbientSpec {
                    block_a_metric: Some(BlockMetric::Entries(
                        ["1", "0", "0", "sin(x1)^2"]
                            .iter()
                            .map(|s| s.to_string())
                            .collect(),
                    )),
                    ..flat_product(2, 1)
                },
                2,
                &[&format!("{:?}", PI / 3.0), "u1", "u2"],
                pts2(&PLANE_SAMPLES),
            ),
            expected(
                Invariant,
                false,
                false,
                Some(1.0 / 12.0),
                Some((2, 0)),
                [true, false, true],
            ),
        ),
        other => return Err(CatalogError::UnknownScenario(other.to_string())),
    };
    Ok(CatalogScenario {
        label: LABELS.iter().find(|l| **l == label).expect("matched above"),
        description,
        spec,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds() {
        for s in catalog_all() {
            let built = s.build().unwrap_or_else(|e| panic!("{}: {e}", s.label));
            assert!(built.validation.pass, "{}", s.label);
            assert_eq!(built.label, s.label);
        }
    }

    #[test]
    fn unknown_label() {
        assert_eq!(
            catalog_get("torus"),
            Err(CatalogError::UnknownScenario("torus".into()))
        );
    }
}
