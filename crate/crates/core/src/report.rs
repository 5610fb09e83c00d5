//! Verification reports: assembly, text tables and JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::LemmaResiduals;
use crate::scenario::{AmbientMode, Scenario, Tolerances};
use crate::subgeom::{GeomError, StructuralResiduals};
use crate::theorems::{Evaluation, Theorem, TheoremConfig, TheoremError, TheoremVerdict};

/// Structural identities hold to roundoff; anything above this is a bug.
pub const STRUCTURAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Theorem(#[from] TheoremError),
}

/// Which check suites to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suites {
    pub lemmas: bool,
    pub theorems: bool,
}

impl Suites {
    pub const ALL: Suites = Suites {
        lemmas: true,
        theorems: true,
    };
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioInfo {
    pub label: String,
    pub mode: &'static str,
    pub dim: usize,
    pub n: usize,
    pub map: Vec<String>,
    pub samples: usize,
    pub tolerances: Tolerances,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationInfo {
    pub pass: bool,
    pub samples: usize,
    pub f_squared: f64,
    pub metric_compat: f64,
    pub parallel: f64,
    pub self_adjoint: f64,
    pub min_pivot: f64,
    pub structure_trivial: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Norms {
    pub mean_curvature_sq: f64,
    pub phi: f64,
    pub omega: f64,
    pub omega_phi: f64,
    pub rank_phi: usize,
    pub pseudo_umbilical_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Flags {
    pub minimal: bool,
    pub pseudo_umbilical: bool,
    pub invariant: bool,
    pub anti_invariant: bool,
    pub semi_invariant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructuralRecord {
    pub h_symmetry: f64,
    pub duality: f64,
    pub adjoint: f64,
    pub block: [f64; 4],
    pub reassembly: f64,
}

impl From<StructuralResiduals> for StructuralRecord {
    fn from(s: StructuralResiduals) -> Self {
        Self {
            h_symmetry: s.h_symmetry,
            duality: s.duality,
            adjoint: s.adjoint,
            block: s.block,
            reassembly: s.reassembly,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchRecord {
    pub minimal: bool,
    pub structural: bool,
    pub perpendicular: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremPoint {
    pub identity: f64,
    pub obstruction: f64,
    pub proof: Option<f64>,
    pub identity_holds: bool,
    pub branches: BranchRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub structural: Option<StructuralRecord>,
    pub lemma1: Option<f64>,
    pub lemma2: Option<f64>,
    pub theorems: BTreeMap<String, TheoremPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub norms: Norms,
    pub flags: Flags,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassVerdict {
    pub class: String,
    pub dim_d: Option<usize>,
    pub dim_d_perp: Option<usize>,
    pub rank_constant: bool,
    pub max_phi: f64,
    pub max_omega: f64,
    pub max_omega_phi: f64,
    pub undersampled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteVerdict {
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaVerdict {
    pub lemma1_max: f64,
    pub lemma2_max: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremSummary {
    pub identity_everywhere: bool,
    pub branch_minimal: bool,
    pub branch_structural: bool,
    pub branch_perpendicular: Option<bool>,
    pub disjunction_everywhere: bool,
    pub pointwise_disjunction_everywhere: bool,
    pub biconditional_consistent: bool,
    pub max_identity_residual: f64,
    pub max_obstruction_gap: f64,
    pub proof_checked: usize,
    pub proof_skipped: usize,
    pub proof_skip_reason: Option<String>,
    pub max_proof_residual: f64,
    pub proof_pass: bool,
}

impl From<&TheoremVerdict> for TheoremSummary {
    fn from(v: &TheoremVerdict) -> Self {
        Self {
            identity_everywhere: v.identity_everywhere,
            branch_minimal: v.branches.minimal,
            branch_structural: v.branches.structural,
            branch_perpendicular: v.branches.perpendicular,
            disjunction_everywhere: v.disjunction_everywhere,
            pointwise_disjunction_everywhere: v.pointwise_disjunction_everywhere,
            biconditional_consistent: v.biconditional_consistent,
            max_identity_residual: v.max_identity_residual(),
            max_obstruction_gap: v.max_obstruction_gap(),
            proof_checked: v.proof_checked,
            proof_skipped: v.proof_skipped,
            proof_skip_reason: (v.proof_skipped > 0).then(|| "NotPseudoUmbilical".to_string()),
            max_proof_residual: v.max_proof_residual,
            proof_pass: v.proof_pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    pub classification: ClassVerdict,
    pub minimal_everywhere: bool,
    pub pseudo_umbilical_everywhere: bool,
    pub structural: Option<SuiteVerdict>,
    pub lemmas: Option<LemmaVerdict>,
    pub theorems: BTreeMap<String, TheoremSummary>,
    /// Every consistency check that ran passed.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: ScenarioInfo,
    pub ambient_validation: ValidationInfo,
    pub points: Vec<PointRecord>,
    pub verdicts: Verdicts,
}

impl Report {
    pub fn build(
        scenario: &Scenario,
        suites: Suites,
        cfg: &TheoremConfig,
    ) -> Result<Self, ReportError> {
        let imm = &scenario.immersion;
        let eval = Evaluation::new(imm, &scenario.ambient, cfg.classify_tol)?;
        let class = &eval.classification;
        let tol = cfg.classify_tol;

        let structural: Option<Vec<StructuralResiduals>> = suites.lemmas.then(|| {
            eval.geoms
                .par_iter()
                .map(|g| g.structural_residuals())
                .collect()
        });
        let lemmas: Option<Vec<LemmaResiduals>> = suites.lemmas.then(|| eval.lemmas());
        let theorems: Vec<TheoremVerdict> = if suites.theorems {
            Theorem::ALL
                .iter()
                .map(|t| eval.theorem(*t, cfg))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };

        let points = eval
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| PointRecord {
                u: p.u.clone(),
                x: p.x.clone(),
                norms: Norms {
                    mean_curvature_sq: p.second.mean_curvature_sq,
                    phi: p.phi_norm(),
                    omega: p.omega_norm(),
                    omega_phi: p.omega_phi_norm(),
                    rank_phi: class.points[i].rank_phi,
                    pseudo_umbilical_gap: p.pseudo_umbilical_gap(),
                },
                flags: Flags {
                    minimal: p.is_minimal(tol),
                    pseudo_umbilical: p.is_pseudo_umbilical(cfg.identity_tol),
                    invariant: p.omega_norm() <= tol,
                    anti_invariant: p.phi_norm() <= tol,
                    semi_invariant: p.omega_phi_norm() <= tol,
                },
                residuals: Residuals {
                    structural: structural.as_ref().map(|s| s[i].into()),
                    lemma1: lemmas.as_ref().map(|l| l[i].lemma1),
                    lemma2: lemmas.as_ref().map(|l| l[i].lemma2),
                    theorems: theorems
                        .iter()
                        .map(|v| {
                            let pv = &v.points[i];
                            (
                                v.theorem.to_string(),
                                TheoremPoint {
                                    identity: pv.identity_residual,
                                    obstruction: pv.obstruction,
                                    proof: pv.proof_residual,
                                    identity_holds: pv.identity_holds,
                                    branches: BranchRecord {
                                        minimal: pv.branches.minimal,
                                        structural: pv.branches.structural,
                                        perpendicular: pv.branches.perpendicular,
                                    },
                                },
                            )
                        })
                        .collect(),
                },
            })
            .collect::<Vec<_>>();

        let structural_verdict = structural.map(|s| {
            let max = s.iter().map(StructuralResiduals::max).fold(0.0, f64::max);
            SuiteVerdict {
                max,
                tol: STRUCTURAL_TOL,
                pass: max <= STRUCTURAL_TOL,
            }
        });
        let lemma_verdict = lemmas.map(|l| {
            let lemma1_max = l.iter().map(|r| r.lemma1).fold(0.0, f64::max);
            let lemma2_max = l.iter().map(|r| r.lemma2).fold(0.0, f64::max);
            LemmaVerdict {
                lemma1_max,
                lemma2_max,
                tol: cfg.identity_tol,
                pass: lemma1_max.max(lemma2_max) <= cfg.identity_tol,
            }
        });
        let theorem_summaries: BTreeMap<String, TheoremSummary> = theorems
            .iter()
            .map(|v| (v.theorem.to_string(), TheoremSummary::from(v)))
            .collect();
        let pass = structural_verdict.as_ref().is_none_or(|s| s.pass)
            && lemma_verdict.as_ref().is_none_or(|l| l.pass)
            && theorem_summaries
                .values()
                .all(|t| t.biconditional_consistent && t.proof_pass);

        let (dim_d, dim_d_perp) = class.distribution_dims.unzip();
        let v = &scenario.validation;
        Ok(Self {
            scenario: ScenarioInfo {
                label: scenario.label.clone(),
                mode: match scenario.spec.ambient.mode {
                    AmbientMode::Product => "product",
                    AmbientMode::Explicit => "explicit",
                },
                dim: scenario.ambient.dim(),
                n: imm.dim(),
                map: imm.components().iter().map(ToString::to_string).collect(),
                samples: imm.samples().len(),
                tolerances: scenario.tolerances,
                warnings: scenario.warnings.clone(),
            },
            ambient_validation: ValidationInfo {
                pass: v.pass,
                samples: v.samples,
                f_squared: v.f_squared,
                metric_compat: v.metric_compat,
                parallel: v.parallel,
                self_adjoint: v.self_adjoint,
                min_pivot: v.min_pivot,
                structure_trivial: v.structure_trivial,
                failures: v.failures.clone(),
            },
            verdicts: Verdicts {
                classification: ClassVerdict {
                    class: class.class.to_string(),
                    dim_d,
                    dim_d_perp,
                    rank_constant: class.rank_constant,
                    max_phi: class.max_phi,
                    max_omega: class.max_omega,
                    max_omega_phi: class.max_omega_phi,
                    undersampled: class.undersampled,
                },
                minimal_everywhere: points.iter().all(|p| p.flags.minimal),
                pseudo_umbilical_everywhere: points.iter().all(|p| p.flags.pseudo_umbilical),
                structural: structural_verdict,
                lemmas: lemma_verdict,
                theorems: theorem_summaries,
                pass,
            },
            points,
        })
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// Per-point φ/ω table and the four-way verdict.
    pub fn classification_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario.label);
        let _ = writeln!(
            out,
            "{:<28} {:>12} {:>12} {:>12} {:>7}",
            "u", "|phi|", "|omega|", "|omega phi|", "rank"
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:<28} {:>12} {:>12} {:>12} {:>7}",
                fmt_vec(&p.u),
                sig6(p.norms.phi),
                sig6(p.norms.omega),
                sig6(p.norms.omega_phi),
                p.norms.rank_phi
            );
        }
        let c = &self.verdicts.classification;
        let _ = write!(out, "classification: {}", c.class);
        if let (Some(d), Some(dp)) = (c.dim_d, c.dim_d_perp) {
            let _ = write!(out, " (dim D = {d}, dim D^perp = {dp})");
        }
        if !c.rank_constant {
            let _ = write!(out, "; rank phi not constant");
        }
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let _ = writeln!(
            out,
            "scenario {} ({} ambient, dim {}, n = {}, {} samples)",
            s.label, s.mode, s.dim, s.n, s.samples
        );
        for w in &s.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let v = &self.ambient_validation;
        let _ = writeln!(
            out,
            "ambient validation: {} (F^2-I {}, metric {}, nabla F {})",
            pass_word(v.pass),
            sig6(v.f_squared),
            sig6(v.metric_compat),
            sig6(v.parallel)
        );
        out.push('\n');
        out.push_str(&self.classification_text());
        let _ = writeln!(
            out,
            "minimal everywhere: {}; pseudo-umbilical everywhere: {}",
            self.verdicts.minimal_everywhere, self.verdicts.pseudo_umbilical_everywhere
        );
        let _ = writeln!(
            out,
            "\n{:<28} {:>12} {:>12} {:>6} {:>6}",
            "u", "|H|^2", "pu gap", "min", "pu"
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:<28} {:>12} {:>12} {:>6} {:>6}",
                fmt_vec(&p.u),
                sig6(p.norms.mean_curvature_sq),
                sig6(p.norms.pseudo_umbilical_gap),
                yes_no(p.flags.minimal),
                yes_no(p.flags.pseudo_umbilical)
            );
        }
        if let Some(sv) = &self.verdicts.structural {
            let _ = writeln!(
                out,
                "\nstructural identities: max {} (tol {}) {}",
                sig6(sv.max),
                sig6(sv.tol),
                pass_word(sv.pass)
            );
        }
        if let Some(lv) = &self.verdicts.lemmas {
            let _ = writeln!(out, "\n{:<28} {:>12} {:>12}", "u", "lemma 1", "lemma 2");
            for p in &self.points {
                let _ = writeln!(
                    out,
                    "{:<28} {:>12} {:>12}",
                    fmt_vec(&p.u),
                    sig6(p.residuals.lemma1.unwrap_or(0.0)),
                    sig6(p.residuals.lemma2.unwrap_or(0.0))
                );
            }
            let _ = writeln!(
                out,
                "lemmas: max {} / {} (tol {}) {}",
                sig6(lv.lemma1_max),
                sig6(lv.lemma2_max),
                sig6(lv.tol),
                pass_word(lv.pass)
            );
        }
        for (name, t) in &self.verdicts.theorems {
            let _ = writeln!(
                out,
                "\n{name}: {:<22} {:>12} {:>12} {:>12} {:>5} {:>5} {:>5}",
                "u", "identity", "obstruction", "proof", "min", "str", "perp"
            );
            for p in &self.points {
                let tp = &p.residuals.theorems[name];
                let _ = writeln!(
                    out,
                    "    {:<22} {:>12} {:>12} {:>12} {:>5} {:>5} {:>5}",
                    fmt_vec(&p.u),
                    sig6(tp.identity),
                    sig6(tp.obstruction),
                    tp.proof.map_or_else(|| "skipped".to_string(), sig6),
                    yes_no(tp.branches.minimal),
                    yes_no(tp.branches.structural),
                    tp.branches.perpendicular.map_or("-", yes_no)
                );
            }
            let _ = writeln!(
                out,
                "{name}: identity everywhere {}, branch disjunction {} (pointwise {}), biconditional {}",
                t.identity_everywhere,
                t.disjunction_everywhere,
                t.pointwise_disjunction_everywhere,
                if t.biconditional_consistent { "consistent" } else { "INCONSISTENT" }
            );
            if t.proof_skipped > 0 {
                let _ = writeln!(
                    out,
                    "{name}: proof residual skipped at {} point(s): NotPseudoUmbilical",
                    t.proof_skipped
                );
            }
            if t.proof_checked > 0 {
                let _ = writeln!(
                    out,
                    "{name}: proof residual max {} over {} point(s) {}",
                    sig6(t.max_proof_residual),
                    t.proof_checked,
                    pass_word(t.proof_pass)
                );
            }
        }
        let _ = writeln!(out, "\noverall: {}", pass_word(self.verdicts.pass));
        out
    }
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| sig6(*x)).collect();
    format!("({})", parts.join(", "))
}

/// Rounds to six significant digits.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

/// Emits every float with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Compact JSON with 17-significant-digit floats; non-finite values become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser).expect("reports serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_get;

    #[test]
    fn sig6_rounding() {
        assert_eq!(sig6(std::f64::consts::FRAC_1_SQRT_2), "0.707107");
        assert_eq!(sig6(0.1875), "0.1875");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(2.5e-17), "2.50000e-17");
        assert_eq!(sig6(-3.0), "-3");
    }

    #[test]
    fn json_has_full_precision_and_nulls() {
        let s = to_json(&(0.1f64, f64::NAN, 1u32));
        assert_eq!(s, "[1.0000000000000001e-1,null,1]\n");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(0.1));
    }

    #[test]
    fn rect_torus_report_skips_proofs() {
        let s = catalog_get("rect-torus").unwrap().build().unwrap();
        let r = Report::build(&s, Suites::ALL, &TheoremConfig::default()).unwrap();
        assert!(r.verdicts.pass);
        for t in r.verdicts.theorems.values() {
            assert_eq!(t.proof_checked, 0);
            assert_eq!(t.proof_skip_reason.as_deref(), Some("NotPseudoUmbilical"));
        }
        let text = r.to_text();
        assert!(text.contains("NotPseudoUmbilical"));
        assert!(text.contains("skipped"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["scenario", "ambient_validation", "points", "verdicts"] {
            assert!(v.get(key).is_some());
        }
        let p = &v["points"][0];
        for key in ["u", "norms", "flags", "residuals"] {
            assert!(p.get(key).is_some());
        }
    }
}
