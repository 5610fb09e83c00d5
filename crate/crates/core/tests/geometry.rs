use nalgebra::DMatrix;

use prodgeo::ambient::{flat_block, AmbientSpace};
use prodgeo::calculus::{self, c_map, lemma_residuals, nabla_c, nabla_omega, omega};
use prodgeo::catalog::{catalog_all, catalog_get};
use prodgeo::expr::{parse, BinOp, Expr};
use prodgeo::oracle::{fd_derivative, fd_derivative_vec, FdConfig};
use prodgeo::scenario::SplitMix64;
use prodgeo::subgeom::{FrameOrder, Immersion, LocalGeometry};
use prodgeo::theorems::{Evaluation, Theorem, TheoremConfig};

const FD_TOL: f64 = 1e-5;

fn immersion(n: usize, comps: &[&str]) -> Immersion {
    Immersion::new(
        "t",
        n,
        comps.iter().map(|s| parse(s).unwrap()).collect(),
        vec![],
    )
    .unwrap()
}

fn flat(p: usize, q: usize) -> AmbientSpace {
    AmbientSpace::product_of(flat_block(p), p, flat_block(q), q).unwrap()
}

fn curved_block() -> AmbientSpace {
    let block = ["1", "0", "0", "sin(x1)^2"].map(|s| parse(s).unwrap());
    let block = vec![block[..2].to_vec(), block[2..].to_vec()];
    AmbientSpace::product_of(block, 2, flat_block(1), 1).unwrap()
}

fn at(imm: &Immersion, space: &AmbientSpace, u: &[f64]) -> LocalGeometry {
    LocalGeometry::at(imm, space, u, FrameOrder::Forward).unwrap()
}

fn shifted(u: &[f64], x: &[f64], t: f64) -> Vec<f64> {
    u.iter().zip(x).map(|(a, b)| a + t * b).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn cfg() -> FdConfig {
    FdConfig::new(1e-4, 2).unwrap()
}

/// `∇̄_X W` from finite differences of `W` along `t ↦ u + tX`.
fn fd_cov_derivative<F>(
    imm: &Immersion,
    space: &AmbientSpace,
    u: &[f64],
    x: &[f64],
    field: F,
) -> Vec<f64>
where
    F: Fn(&LocalGeometry) -> Vec<f64>,
{
    let base = at(imm, space, u);
    let w = field(&base);
    let dw = fd_derivative_vec(
        |t| {
            LocalGeometry::at(imm, space, &shifted(u, x, t), FrameOrder::Forward).map(|g| field(&g))
        },
        0.0,
        &cfg(),
    )
    .unwrap();
    let vel = base.push_forward(x);
    let gamma = base.christoffel();
    (0..w.len())
        .map(|i| {
            let mut s = dw[i];
            for (j, vj) in vel.iter().enumerate() {
                for (k, wk) in w.iter().enumerate() {
                    s += gamma[i][j][k] * vj * wk;
                }
            }
            s
        })
        .collect()
}

fn test_surfaces() -> Vec<(Immersion, AmbientSpace, Vec<f64>)> {
    vec![
        (
            immersion(2, &["u1", "u2", "sin(u1)*cos(u2)", "u1*u2^2/3 + 0.2*u2"]),
            flat(2, 2),
            vec![0.3, -0.4],
        ),
        (
            immersion(2, &["cos(u1) + u2/5", "u1*u2", "sin(u1) - u2^2/4"]),
            flat(1, 2),
            vec![0.7, 0.2],
        ),
        (
            immersion(2, &["1 + u1^2/4", "u2 + u1/3", "u1*u2"]),
            curved_block(),
            vec![0.5, 0.6],
        ),
    ]
}

#[test]
fn catalog_regression() {
    for entry in catalog_all() {
        let s = entry.build().unwrap();
        let e = &entry.expected;
        let eval = Evaluation::new(&s.immersion, &s.ambient, s.tolerances.classify_tol).unwrap();
        let cls = &eval.classification;
        assert_eq!(cls.class, e.classification, "{}", entry.label);
        assert_eq!(
            cls.distribution_dims, e.distribution_dims,
            "{}",
            entry.label
        );
        let tol = s.tolerances.identity_tol;
        assert_eq!(
            eval.points.iter().all(|p| p.is_minimal(tol)),
            e.minimal,
            "{}",
            entry.label
        );
        assert_eq!(
            eval.points.iter().all(|p| p.is_pseudo_umbilical(tol)),
            e.pseudo_umbilical,
            "{}",
            entry.label
        );
        if let Some(h2) = e.mean_curvature_sq {
            for p in &eval.points {
                assert!(
                    (p.second.mean_curvature_sq - h2).abs() < 1e-12,
                    "{}",
                    entry.label
                );
            }
        }
        let cfg = TheoremConfig::default();
        for t in Theorem::ALL {
            let v = eval.theorem(t, &cfg).unwrap();
            assert_eq!(v.identity_everywhere, e.identity(t), "{} {t}", entry.label);
            assert!(v.biconditional_consistent, "{} {t}", entry.label);
            assert!(v.proof_pass, "{} {t}", entry.label);
        }
    }
}

#[test]
fn circle_has_rank_one_phi_and_is_generic() {
    let s = catalog_get("circle").unwrap().build().unwrap();
    let eval = Evaluation::new(&s.immersion, &s.ambient, 1e-8).unwrap();
    for p in &eval.classification.points {
        // φ = cos 2u on the circle, which vanishes only at π/4
        let expect = usize::from((p.u[0] - std::f64::consts::FRAC_PI_4).abs() > 1e-12);
        assert_eq!(p.rank_phi, expect, "u = {:?}", p.u);
    }
    assert!(!eval.classification.rank_constant);
}

#[test]
fn structural_identities_hold_on_catalog_and_surfaces() {
    for entry in catalog_all() {
        let s = entry.build().unwrap();
        for u in s.immersion.samples() {
            let r = at(&s.immersion, &s.ambient, u).structural_residuals();
            assert!(r.max() <= 1e-10, "{} {u:?}: {r:?}", entry.label);
        }
    }
    for (imm, space, u) in test_surfaces() {
        let r = at(&imm, &space, &u).structural_residuals();
        assert!(r.max() <= 1e-10, "{r:?}");
    }
}

#[test]
fn ambient_derivative_of_normal_frame_matches_fd() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        for a in 0..imm.dim() {
            let x: Vec<f64> = (0..imm.dim())
                .map(|i| f64::from(u8::from(i == a)))
                .collect();
            for al in 0..g.codim() {
                let exact = g.cov_derivative(&x, g.normal_field(al));
                let fd = fd_cov_derivative(&imm, &space, &u, &x, |h| h.normal_frame()[al].clone());
                assert!(dist(&exact, &fd) < FD_TOL, "{exact:?} vs {fd:?}");
            }
        }
    }
}

#[test]
fn normal_derivative_of_mean_curvature_matches_fd() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        let x = [0.6, -0.8];
        let exact = calculus::normal_connection(&g, &x, g.mean_curvature_field());
        let fd = g.normal_part(&fd_cov_derivative(
            &imm,
            &space,
            &u,
            &x,
            LocalGeometry::mean_curvature,
        ));
        assert!(dist(&exact, &fd) < FD_TOL, "{exact:?} vs {fd:?}");
    }
}

#[test]
fn nabla_omega_matches_fd() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        let x = [0.8, 0.6];
        let y = [-0.3, 1.0];
        let exact = nabla_omega(&g, &x, &y);
        let d_omega_y = fd_cov_derivative(&imm, &space, &u, &x, |h| omega(h, &h.push_forward(&y)));
        let d_y = fd_cov_derivative(&imm, &space, &u, &x, |h| h.push_forward(&y));
        let fd: Vec<f64> = g
            .normal_part(&d_omega_y)
            .iter()
            .zip(omega(&g, &g.tangent_part(&d_y)))
            .map(|(a, b)| a - b)
            .collect();
        assert!(dist(&exact, &fd) < FD_TOL, "{exact:?} vs {fd:?}");
    }
}

#[test]
fn nabla_c_of_mean_curvature_matches_fd() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        let x = [1.0, 0.5];
        let exact = nabla_c(&g, &x, g.mean_curvature_field());
        let d_ch = fd_cov_derivative(&imm, &space, &u, &x, |h| c_map(h, &h.mean_curvature()));
        let d_h = fd_cov_derivative(&imm, &space, &u, &x, LocalGeometry::mean_curvature);
        let fd: Vec<f64> = g
            .normal_part(&d_ch)
            .iter()
            .zip(c_map(&g, &g.normal_part(&d_h)))
            .map(|(a, b)| a - b)
            .collect();
        assert!(dist(&exact, &fd) < FD_TOL, "{exact:?} vs {fd:?}");
    }
}

#[test]
fn derivative_of_mean_curvature_norm_matches_fd() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        let x = [0.4, 0.9];
        let h = g.mean_curvature_field();
        let exact = g.derivative_of_inner(&x, h, h);
        let fd = fd_derivative(
            |t| {
                LocalGeometry::at(&imm, &space, &shifted(&u, &x, t), FrameOrder::Forward)
                    .map(|g| g.point_geometry().second.mean_curvature_sq)
            },
            0.0,
            &cfg(),
        )
        .unwrap();
        assert!((exact - fd).abs() < FD_TOL, "{exact} vs {fd}");
    }
}

#[test]
fn christoffels_match_fd_of_metric() {
    let space = curved_block();
    for x in [[0.7, 0.2, -1.0], [1.2, 3.0, 0.5], [2.5, -0.4, 0.0]] {
        let gamma = space.christoffel(&x).unwrap();
        let g = space.metric_at(&x).unwrap();
        let n = g.len();
        let ginv = DMatrix::from_fn(n, n, |i, j| g[i][j])
            .try_inverse()
            .unwrap();
        let dg: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|l| {
                fd_derivative_vec(
                    |t| {
                        let mut y = x.to_vec();
                        y[l] += t;
                        space.metric_at(&y).map(|m| m.concat())
                    },
                    0.0,
                    &cfg(),
                )
                .unwrap()
                .chunks(n)
                .map(<[f64]>::to_vec)
                .collect()
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let fd: f64 = (0..n)
                        .map(|l| 0.5 * ginv[(i, l)] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]))
                        .sum();
                    assert!(
                        (gamma[i][j][k] - fd).abs() < FD_TOL,
                        "Γ^{i}_{j}{k} at {x:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn gauss_and_weingarten_formulas() {
    for (imm, space, u) in test_surfaces() {
        let g = at(&imm, &space, &u);
        let (x, y) = ([0.3, 0.7], [1.0, -0.2]);
        let dy = g.cov_derivative(&x, &calculus::coordinate_combination(&g, &y));
        assert!(dist(&g.normal_part(&dy), &g.second_form(&x, &y)) < 1e-12);
        for al in 0..g.codim() {
            let xi = g.normal_field(al);
            let xi0 = g.normal_frame()[al].clone();
            let dxi = g.cov_derivative(&x, xi);
            let minus_a: Vec<f64> = g.shape_operator(&xi0, &x).iter().map(|v| -v).collect();
            assert!(dist(&g.tangent_part(&dxi), &minus_a) < 1e-12);
            let lhs = g.inner(&g.second_form(&x, &y), &xi0);
            let rhs = g.inner(&g.shape_operator(&xi0, &x), &g.push_forward(&y));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}

/// Immersion of `ℝ²` into `ℝ⁴` with a random trigonometric perturbation of
/// a linear embedding.
fn random_trig_surface(rng: &mut SplitMix64) -> Vec<String> {
    let mut c = || (rng.next_f64() - 0.5) * 1.2;
    let mut comps = Vec::new();
    for i in 0..4 {
        let lin = match i {
            0 => "u1".to_string(),
            1 => "u2".to_string(),
            _ => format!("{:?}*u1 + {:?}*u2", c(), c()),
        };
        let t = format!(
            "{lin} + {:?}*sin({:?}*u1 + {:?}*u2) + {:?}*cos({:?}*u1 - {:?}*u2)*sin(u1)",
            c() / 2.0,
            c() * 2.0,
            c() * 2.0,
            c() / 2.0,
            c() * 2.0,
            c() * 2.0
        );
        comps.push(t);
    }
    comps
}

#[test]
fn lemmas_hold_on_random_trig_immersions() {
    let mut rng = SplitMix64::new(20_250_301);
    for case in 0..20 {
        let comps = random_trig_surface(&mut rng);
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        let p = 1 + case % 3;
        let samples = vec![vec![0.1, -0.2], vec![0.9, 0.4], vec![-0.6, 1.1]];
        let imm = immersion(2, &refs).with_samples(samples).unwrap();
        let space = flat(p, 4 - p);
        for u in imm.samples() {
            let g = at(&imm, &space, u);
            let r = lemma_residuals(&g);
            assert!(
                r.lemma1 <= 1e-10 && r.lemma2 <= 1e-10,
                "case {case} at {u:?}: {r:?}"
            );
            assert!(g.structural_residuals().max() <= 1e-10);
        }
    }
}

#[test]
fn corrupted_structure_breaks_lemmas() {
    let m = |rows: [[&str; 3]; 3]| -> Vec<Vec<Expr>> {
        rows.iter()
            .map(|r| r.iter().map(|s| parse(s).unwrap()).collect())
            .collect()
    };
    let metric = m([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]);
    let structure = m([
        ["cos(x3)", "sin(x3)", "0"],
        ["sin(x3)", "-cos(x3)", "0"],
        ["0", "0", "1"],
    ]);
    let space = AmbientSpace::explicit(metric, structure).unwrap();
    let report = space.validate(&[vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 2.0]], None);
    assert!(!report.pass && report.parallel > 1e-1, "{report:?}");
    let imm = immersion(2, &["u1", "u2", "u1 + 0.3*u1*u2"]);
    let worst = [[0.2, 0.1], [0.5, -0.7], [1.3, 0.4]]
        .iter()
        .map(|u| {
            let r = lemma_residuals(&at(&imm, &space, u));
            r.lemma1.max(r.lemma2)
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "worst lemma residual {worst}");
}

fn scaled(imm: &Immersion, lambda: f64) -> Immersion {
    let comps = imm
        .components()
        .iter()
        .map(|e| Expr::Binary(BinOp::Mul, Box::new(Expr::num(lambda)), Box::new(e.clone())))
        .collect();
    Immersion::new("scaled", imm.dim(), comps, imm.samples().to_vec()).unwrap()
}

#[test]
fn homothety_scales_invariants() {
    let lambda = 2.0;
    let s = catalog_get("square-torus-rotated")
        .unwrap()
        .build()
        .unwrap();
    let cfg = TheoremConfig::default();
    let base = Evaluation::new(&s.immersion, &s.ambient, 1e-8).unwrap();
    let big = Evaluation::new(&scaled(&s.immersion, lambda), &s.ambient, 1e-8).unwrap();
    assert_eq!(base.classification.class, big.classification.class);
    for (p, q) in base.points.iter().zip(&big.points) {
        let h2 = p.second.mean_curvature_sq;
        assert!((q.second.mean_curvature_sq - h2 / lambda.powi(2)).abs() < 1e-12);
    }
    let t2 = base.theorem(Theorem::T2, &cfg).unwrap();
    let t2_big = big.theorem(Theorem::T2, &cfg).unwrap();
    for (p, q) in t2.points.iter().zip(&t2_big.points) {
        for (a, b) in p.directions.iter().zip(&q.directions) {
            assert!(a.obstruction > 1e-3);
            assert!(
                (b.obstruction - a.obstruction / lambda).abs() < 1e-12,
                "{a:?} {b:?}"
            );
        }
    }
}

#[test]
fn curves_in_curved_ambient_satisfy_proof_identities() {
    let imm = immersion(1, &["1 + 0.3*sin(u1)", "u1", "u1^2/2"])
        .with_samples(vec![vec![-1.0], vec![0.0], vec![0.4], vec![1.7]])
        .unwrap();
    let space = curved_block();
    let eval = Evaluation::new(&imm, &space, 1e-8).unwrap();
    for t in Theorem::ALL {
        let v = eval.theorem(t, &TheoremConfig::default()).unwrap();
        assert_eq!(v.proof_skipped, 0);
        assert!(
            v.proof_pass && v.max_proof_residual < 1e-10,
            "{t}: {}",
            v.max_proof_residual
        );
    }
    for r in eval.lemmas() {
        assert!(r.lemma1 < 1e-10 && r.lemma2 < 1e-10, "{r:?}");
    }
}

#[test]
fn random_curves_satisfy_proof_identities() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..10 {
        let mut c = || 2.0 * rng.next_f64() - 1.0;
        let comps = [
            format!("u1 + {:?}*sin(u1)^2", c() / 3.0),
            format!("{:?}*cos({:?}*u1)", c(), 1.0 + c()),
            format!("{:?}*u1^2 + {:?}*sin(u1)", c(), c()),
            format!("{:?}*exp({:?}*u1)", c(), c() / 2.0),
        ];
        let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        let imm = immersion(1, &refs)
            .with_samples(vec![vec![-0.5], vec![0.3], vec![1.0]])
            .unwrap();
        let eval = Evaluation::new(&imm, &flat(2, 2), 1e-8).unwrap();
        for t in Theorem::ALL {
            let v = eval.theorem(t, &TheoremConfig::default()).unwrap();
            assert!(
                v.max_proof_residual < 1e-9,
                "{t} {comps:?}: {}",
                v.max_proof_residual
            );
        }
    }
}

#[test]
fn branch_flags_are_sound() {
    let cfg = TheoremConfig::default();
    for entry in catalog_all() {
        let s = entry.build().unwrap();
        let eval = Evaluation::new(&s.immersion, &s.ambient, cfg.classify_tol).unwrap();
        for t in Theorem::ALL {
            let v = eval.theorem(t, &cfg).unwrap();
            for p in &v.points {
                let b = &p.branches;
                let structural = b.structural && (t != Theorem::T4 || p.pseudo_umbilical);
                if b.minimal || structural || b.perpendicular == Some(true) {
                    assert!(p.identity_residual <= 1e-6, "{} {t} {:?}", entry.label, p.u);
                }
                if p.pseudo_umbilical {
                    for d in &p.directions {
                        assert!(
                            (d.identity - d.obstruction).abs() <= 1e-6,
                            "{} {t} {d:?}",
                            entry.label
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn strict_mode_rejects_non_pseudo_umbilical() {
    let s = catalog_get("rect-torus").unwrap().build().unwrap();
    let eval = Evaluation::new(&s.immersion, &s.ambient, 1e-8).unwrap();
    let strict = TheoremConfig {
        strict: true,
        ..TheoremConfig::default()
    };
    assert!(eval.theorem(Theorem::T2, &strict).is_err());
    let v = eval
        .theorem(Theorem::T2, &TheoremConfig::default())
        .unwrap();
    assert_eq!(v.proof_checked, 0);
    assert!(v.identity_everywhere);
}
