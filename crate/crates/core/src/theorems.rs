//! Pointwise and global verdicts for the three characterization theorems
//! about pseudo-umbilical submanifolds.
//!
//! * `T2`: `(∇_X C)H = −h(X, BH)` iff minimal or invariant.
//! * `T3`: `g((∇_X ω)Y, H) = g(Y, A_{CH} X)` iff minimal or anti-invariant.
//! * `T4`: `g((∇_{φX} C)H, CH) = −g(h(φX, BH), CH)` iff minimal, semi-invariant,
//!   or `ωφX ⟂ CH`.
//!
//! Directions run over the coordinate frame `∂/∂u^a`.

use rayon::prelude::*;
use thiserror::Error;

use crate::ambient::AmbientSpace;
use crate::calculus::{self, b_map, c_map, nabla_c, nabla_omega, omega, phi};
use crate::subgeom::{
    classify_points, sample_geometry, Classification, ClassificationReport, FrameOrder, GeomError,
    Immersion, LocalGeometry, PointGeometry, DEFAULT_CLASSIFY_TOL,
};

pub const DEFAULT_IDENTITY_TOL: f64 = 1e-8;
pub const DEFAULT_FAIL_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("submanifold is not pseudo-umbilical at u = {u:?} (gap {gap:e})")]
    NotPseudoUmbilical { u: Vec<f64>, gap: f64 },
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    T2,
    T3,
    T4,
}

impl Theorem {
    pub const ALL: [Theorem; 3] = [Theorem::T2, Theorem::T3, Theorem::T4];

    pub fn as_str(self) -> &'static str {
        match self {
            Theorem::T2 => "T2",
            Theorem::T3 => "T3",
            Theorem::T4 => "T4",
        }
    }
}

impl std::fmt::Display for Theorem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConfig {
    pub identity_tol: f64,
    pub classify_tol: f64,
    /// Reject non-pseudo-umbilical samples instead of skipping the proof check.
    pub strict: bool,
}

impl Default for TheoremConfig {
    fn default() -> Self {
        Self {
            identity_tol: DEFAULT_IDENTITY_TOL,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            strict: false,
        }
    }
}

/// Residuals for one direction (`[a]` or `[a, b]` for T3).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResidual {
    pub direction: Vec<usize>,
    pub identity: f64,
    pub obstruction: f64,
    /// `None` when the point is not pseudo-umbilical.
    pub proof: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BranchFlags {
    pub minimal: bool,
    /// `ω = 0` (T2), `φ = 0` (T3) or `ωφ = 0` (T4) at this point.
    pub structural: bool,
    /// `ωφX ⟂ CH` for every coordinate direction; T4 only.
    pub perpendicular: Option<bool>,
}

impl BranchFlags {
    pub fn any(&self) -> bool {
        self.minimal || self.structural || self.perpendicular.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointVerdict {
    pub u: Vec<f64>,
    pub pseudo_umbilical: bool,
    pub directions: Vec<DirectionResidual>,
    pub identity_residual: f64,
    pub obstruction: f64,
    pub proof_residual: Option<f64>,
    pub identity_holds: bool,
    pub branches: BranchFlags,
}

/// Global reading of each branch over all samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GlobalBranches {
    pub minimal: bool,
    /// Invariant (T2), anti-invariant (T3) or semi-invariant (T4) classification.
    pub structural: bool,
    pub perpendicular: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremVerdict {
    pub theorem: Theorem,
    pub points: Vec<PointVerdict>,
    pub branches: GlobalBranches,
    pub identity_everywhere: bool,
    pub disjunction_everywhere: bool,
    pub pointwise_disjunction_everywhere: bool,
    pub biconditional_consistent: bool,
    pub proof_checked: usize,
    pub proof_skipped: usize,
    pub max_proof_residual: f64,
    pub proof_pass: bool,
}

impl TheoremVerdict {
    pub fn max_identity_residual(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.identity_residual)
            .fold(0.0, f64::max)
    }

    /// Largest `|identity − obstruction|` over pseudo-umbilical points.
    pub fn max_obstruction_gap(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.pseudo_umbilical)
            .flat_map(|p| &p.directions)
            .map(|d| (d.identity - d.obstruction).abs())
            .fold(0.0, f64::max)
    }
}

fn unit(n: usize, a: usize) -> Vec<f64> {
    (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect()
}

fn axpy(acc: &mut [f64], k: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += k * x;
    }
}

fn t2_directions(geom: &LocalGeometry, h_sq: f64, pu: bool) -> Vec<DirectionResidual> {
    let h_field = geom.mean_curvature_field();
    let h0 = geom.mean_curvature();
    let bh = b_map(geom, &h0);
    (0..geom.dim())
        .map(|a| {
            let x = unit(geom.dim(), a);
            let mut v = nabla_c(geom, &x, h_field);
            axpy(&mut v, 1.0, &geom.second_form_tangent(&x, &bh));
            let identity = geom.norm(&v);
            let omega_x = omega(geom, &geom.push_forward(&x));
            let obstruction = h_sq * geom.norm(&omega_x);
            let proof = pu.then(|| {
                axpy(&mut v, h_sq, &omega_x);
                geom.norm(&v)
            });
            DirectionResidual {
                direction: vec![a],
                identity,
                obstruction,
                proof,
            }
        })
        .collect()
}

fn t3_directions(geom: &LocalGeometry, h_sq: f64, pu: bool) -> Vec<DirectionResidual> {
    let n = geom.dim();
    let h0 = geom.mean_curvature();
    let ch = c_map(geom, &h0);
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        let x = unit(n, a);
        let x_amb = geom.push_forward(&x);
        for b in 0..n {
            let y = unit(n, b);
            let lhs = geom.inner(&nabla_omega(geom, &x, &y), &h0);
            let rhs = geom.inner(&geom.second_form(&x, &y), &ch);
            let x_phi_y = geom.inner(&x_amb, &phi(geom, &geom.push_forward(&y)));
            out.push(DirectionResidual {
                direction: vec![a, b],
                identity: (lhs - rhs).abs(),
                obstruction: h_sq * x_phi_y.abs(),
                proof: pu.then(|| (lhs + h_sq * x_phi_y - rhs).abs()),
            });
        }
    }
    out
}

/// T4 per-direction residuals plus `|g(ωφX, CH)|` for the perpendicularity
/// branch.
fn t4_directions(geom: &LocalGeometry, h_sq: f64, pu: bool) -> (Vec<DirectionResidual>, f64) {
    let n = geom.dim();
    let h_field = geom.mean_curvature_field();
    let h0 = geom.mean_curvature();
    let ch = c_map(geom, &h0);
    let bh = b_map(geom, &h0);
    let mut perp: f64 = 0.0;
    let dirs = (0..n)
        .map(|a| {
            let x_amb = geom.push_forward(&unit(n, a));
            let phi_x = phi(geom, &x_amb);
            let v = geom.to_param(&phi_x);
            let lhs = geom.inner(&nabla_c(geom, &v, h_field), &ch);
            let h_term = geom.inner(&geom.second_form_tangent(&v, &bh), &ch);
            let w = geom.inner(&omega(geom, &phi_x), &ch);
            perp = perp.max(w.abs());
            DirectionResidual {
                direction: vec![a],
                identity: (lhs + h_term).abs(),
                obstruction: h_sq * w.abs(),
                proof: pu.then(|| (lhs + h_sq * w + h_term).abs()),
            }
        })
        .collect();
    (dirs, perp)
}

fn point_verdict(
    theorem: Theorem,
    geom: &LocalGeometry,
    pg: &PointGeometry,
    cfg: &TheoremConfig,
) -> PointVerdict {
    let pu = pg.is_pseudo_umbilical(cfg.identity_tol);
    let h_sq = pg.second.mean_curvature_sq;
    let tol = cfg.classify_tol;
    let (directions, structural, perpendicular) = match theorem {
        Theorem::T2 => (t2_directions(geom, h_sq, pu), pg.omega_norm() <= tol, None),
        Theorem::T3 => (t3_directions(geom, h_sq, pu), pg.phi_norm() <= tol, None),
        Theorem::T4 => {
            let (d, perp) = t4_directions(geom, h_sq, pu);
            (d, pg.omega_phi_norm() <= tol, Some(perp <= tol))
        }
    };
    let max = |f: fn(&DirectionResidual) -> f64| directions.iter().map(f).fold(0.0, f64::max);
    let identity_residual = max(|d| d.identity);
    let obstruction = max(|d| d.obstruction);
    let proof_residual = pu.then(|| max(|d| d.proof.unwrap_or(0.0)));
    PointVerdict {
        u: geom.u.clone(),
        pseudo_umbilical: pu,
        identity_holds: identity_residual <= cfg.identity_tol,
        branches: BranchFlags {
            minimal: pg.is_minimal(tol),
            structural,
            perpendicular,
        },
        directions,
        identity_residual,
        obstruction,
        proof_residual,
    }
}

/// Evaluates one theorem on precomputed geometry.
pub fn evaluate(
    theorem: Theorem,
    geoms: &[LocalGeometry],
    points: &[PointGeometry],
    classification: &ClassificationReport,
    cfg: &TheoremConfig,
) -> Result<TheoremVerdict, TheoremError> {
    if cfg.strict {
        if let Some(p) = points
            .iter()
            .find(|p| !p.is_pseudo_umbilical(cfg.identity_tol))
        {
            return Err(TheoremError::NotPseudoUmbilical {
                u: p.u.clone(),
                gap: p.pseudo_umbilical_gap(),
            });
        }
    }
    let verdicts: Vec<PointVerdict> = geoms
        .par_iter()
        .zip(points.par_iter())
        .map(|(g, p)| point_verdict(theorem, g, p, cfg))
        .collect();
    let class = classification.class;
    let branches = GlobalBranches {
        minimal: verdicts.iter().all(|p| p.branches.minimal),
        structural: match theorem {
            Theorem::T2 => class == Classification::Invariant,
            Theorem::T3 => class == Classification::AntiInvariant,
            Theorem::T4 => class.is_semi_invariant(),
        },
        perpendicular: (theorem == Theorem::T4).then(|| {
            verdicts
                .iter()
                .all(|p| p.branches.perpendicular == Some(true))
        }),
    };
    let identity_everywhere = verdicts.iter().all(|p| p.identity_holds);
    let disjunction_everywhere =
        branches.minimal || branches.structural || branches.perpendicular.unwrap_or(false);
    let proofs: Vec<f64> = verdicts.iter().filter_map(|p| p.proof_residual).collect();
    let max_proof_residual = proofs.iter().copied().fold(0.0, f64::max);
    Ok(TheoremVerdict {
        theorem,
        pointwise_disjunction_everywhere: verdicts.iter().all(|p| p.branches.any()),
        biconditional_consistent: identity_everywhere == disjunction_everywhere,
        proof_checked: proofs.len(),
        proof_skipped: verdicts.len() - proofs.len(),
        proof_pass: max_proof_residual <= cfg.identity_tol,
        max_proof_residual,
        points: verdicts,
        branches,
        identity_everywhere,
        disjunction_everywhere,
    })
}

/// Geometry, classification and lemma data shared by all theorem checks.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub geoms: Vec<LocalGeometry>,
    pub points: Vec<PointGeometry>,
    pub classification: ClassificationReport,
}

impl Evaluation {
    pub fn new(
        imm: &Immersion,
        space: &AmbientSpace,
        classify_tol: f64,
    ) -> Result<Self, GeomError> {
        let geoms = sample_geometry(imm, space, FrameOrder::Forward)?;
        let points: Vec<PointGeometry> = geoms
            .par_iter()
            .map(LocalGeometry::point_geometry)
            .collect();
        let classification = classify_points(&points, imm.dim(), classify_tol);
        Ok(Self {
            geoms,
            points,
            classification,
        })
    }

    pub fn theorem(
        &self,
        theorem: Theorem,
        cfg: &TheoremConfig,
    ) -> Result<TheoremVerdict, TheoremError> {
        evaluate(
            theorem,
            &self.geoms,
            &self.points,
            &self.classification,
            cfg,
        )
    }

    pub fn lemmas(&self) -> Vec<calculus::LemmaResiduals> {
        self.geoms
            .par_iter()
            .map(calculus::lemma_residuals)
            .collect()
    }
}

fn check(
    theorem: Theorem,
    imm: &Immersion,
    space: &AmbientSpace,
    cfg: &TheoremConfig,
) -> Result<TheoremVerdict, TheoremError> {
    Evaluation::new(imm, space, cfg.classify_tol)?.theorem(theorem, cfg)
}

pub fn theorem2_check(
    imm: &Immersion,
    space: &AmbientSpace,
    cfg: &TheoremConfig,
) -> Result<TheoremVerdict, TheoremError> {
    check(Theorem::T2, imm, space, cfg)
}

pub fn theorem3_check(
    imm: &Immersion,
    space: &AmbientSpace,
    cfg: &TheoremConfig,
) -> Result<TheoremVerdict, TheoremError> {
    check(Theorem::T3, imm, space, cfg)
}

pub fn theorem4_check(
    imm: &Immersion,
    space: &AmbientSpace,
    cfg: &TheoremConfig,
) -> Result<TheoremVerdict, TheoremError> {
    check(Theorem::T4, imm, space, cfg)
}
