//! Induced connections and covariant derivatives of the structure blocks.
//!
//! Directions `X` are parameter-space vectors (`X = Σ X^a ∂_a`). Fields are
//! order-1 jets taken from a [`LocalGeometry`], so every derivative here is
//! evaluated exactly at the base point.

use crate::jets::Jet;
use crate::subgeom::LocalGeometry;

/// Tangent field `Σ y^b ∂_b` with constant coefficients.
pub fn coordinate_combination(geom: &LocalGeometry, y: &[f64]) -> Vec<Jet> {
    let space = geom.jet_space();
    let mut out = vec![space.constant(0.0); geom.ambient_dim()];
    for (b, &yb) in y.iter().enumerate() {
        if yb == 0.0 {
            continue;
        }
        for (o, c) in out.iter_mut().zip(geom.coordinate_field(b)) {
            *o += &c.scale(yb);
        }
    }
    out
}

/// `∇_X Y`, the tangent part of `∇̄_X Y`.
pub fn tangential_connection(geom: &LocalGeometry, x: &[f64], y: &[Jet]) -> Vec<f64> {
    geom.tangent_part(&geom.cov_derivative(x, y))
}

/// `∇^⊥_X ξ`, the normal part of `∇̄_X ξ`.
pub fn normal_connection(geom: &LocalGeometry, x: &[f64], xi: &[Jet]) -> Vec<f64> {
    geom.normal_part(&geom.cov_derivative(x, xi))
}

/// `ωV`, the normal part of `FV`.
pub fn omega(geom: &LocalGeometry, v: &[f64]) -> Vec<f64> {
    geom.normal_part(&geom.apply_structure(v))
}

/// `φV`, the tangent part of `FV`.
pub fn phi(geom: &LocalGeometry, v: &[f64]) -> Vec<f64> {
    geom.tangent_part(&geom.apply_structure(v))
}

/// `Bξ`, the tangent part of `Fξ`.
pub fn b_map(geom: &LocalGeometry, xi: &[f64]) -> Vec<f64> {
    phi(geom, xi)
}

/// `Cξ`, the normal part of `Fξ`.
pub fn c_map(geom: &LocalGeometry, xi: &[f64]) -> Vec<f64> {
    omega(geom, xi)
}

fn normal_of_structure(geom: &LocalGeometry, field: &[Jet]) -> Vec<Jet> {
    geom.normal_part_field(&geom.apply_structure_field(field))
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// `(∇_X ω)Y = ∇^⊥_X(ωY) − ω(∇_X Y)` for an arbitrary tangent field `Y`.
pub fn nabla_omega_field(geom: &LocalGeometry, x: &[f64], y: &[Jet]) -> Vec<f64> {
    let omega_y = normal_of_structure(geom, y);
    let first = normal_connection(geom, x, &omega_y);
    let second = omega(geom, &tangential_connection(geom, x, y));
    sub(&first, &second)
}

pub fn nabla_omega(geom: &LocalGeometry, x: &[f64], y: &[f64]) -> Vec<f64> {
    nabla_omega_field(geom, x, &coordinate_combination(geom, y))
}

/// `(∇_X C)ξ = ∇^⊥_X(Cξ) − C(∇^⊥_X ξ)` for a normal field `ξ`.
pub fn nabla_c(geom: &LocalGeometry, x: &[f64], xi: &[Jet]) -> Vec<f64> {
    let c_xi = normal_of_structure(geom, xi);
    let first = normal_connection(geom, x, &c_xi);
    let second = c_map(geom, &normal_connection(geom, x, xi));
    sub(&first, &second)
}

/// `(∇_X φ)Y = ∇_X(φY) − φ(∇_X Y)`.
pub fn nabla_phi(geom: &LocalGeometry, x: &[f64], y: &[f64]) -> Vec<f64> {
    let y = coordinate_combination(geom, y);
    let phi_y = geom.tangent_part_field(&geom.apply_structure_field(&y));
    let first = tangential_connection(geom, x, &phi_y);
    let second = phi(geom, &tangential_connection(geom, x, &y));
    sub(&first, &second)
}

/// `(∇_X ω)Y + h(X, φY) − C h(X, Y)`.
pub fn lemma1_vector(geom: &LocalGeometry, x: &[f64], y: &[f64]) -> Vec<f64> {
    let lhs = nabla_omega(geom, x, y);
    let y_amb = geom.push_forward(y);
    let h_phi = geom.second_form_tangent(x, &phi(geom, &y_amb));
    let c_h = c_map(geom, &geom.second_form(x, y));
    sub(&add(&lhs, &h_phi), &c_h)
}

pub fn check_lemma1(geom: &LocalGeometry, x: &[f64], y: &[f64]) -> f64 {
    geom.norm(&lemma1_vector(geom, x, y))
}

/// `(∇_X C)ξ + ω A_ξ X + h(X, Bξ)`.
pub fn lemma2_vector(geom: &LocalGeometry, x: &[f64], xi: &[Jet]) -> Vec<f64> {
    let lhs = nabla_c(geom, x, xi);
    let xi0 = values(xi);
    let omega_a = omega(geom, &geom.shape_operator(&xi0, x));
    let h_b = geom.second_form_tangent(x, &b_map(geom, &xi0));
    add(&add(&lhs, &omega_a), &h_b)
}

pub fn check_lemma2(geom: &LocalGeometry, x: &[f64], xi: &[Jet]) -> f64 {
    geom.norm(&lemma2_vector(geom, x, xi))
}

/// Largest lemma residuals at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LemmaResiduals {
    pub lemma1: f64,
    pub lemma2: f64,
}

fn unit(n: usize, a: usize) -> Vec<f64> {
    (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect()
}

/// Both lemmas over coordinate directions; `ξ` runs over the normal frame
/// and the mean curvature field.
pub fn lemma_residuals(geom: &LocalGeometry) -> LemmaResiduals {
    let n = geom.dim();
    let mut out = LemmaResiduals::default();
    for a in 0..n {
        let x = unit(n, a);
        for b in 0..n {
            out.lemma1 = out.lemma1.max(check_lemma1(geom, &x, &unit(n, b)));
        }
        for al in 0..geom.codim() {
            out.lemma2 = out
                .lemma2
                .max(check_lemma2(geom, &x, geom.normal_field(al)));
        }
        out.lemma2 = out
            .lemma2
            .max(check_lemma2(geom, &x, geom.mean_curvature_field()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{flat_block, AmbientSpace};
    use crate::expr::parse;
    use crate::subgeom::{FrameOrder, Immersion};

    fn geom(n: usize, comps: &[&str], p: usize, q: usize, u: &[f64]) -> LocalGeometry {
        let imm = Immersion::new(
            "t",
            n,
            comps.iter().map(|s| parse(s).unwrap()).collect(),
            vec![],
        )
        .unwrap();
        let space = AmbientSpace::product_of(flat_block(p), p, flat_block(q), q).unwrap();
        LocalGeometry::at(&imm, &space, u, FrameOrder::Forward).unwrap()
    }

    #[test]
    fn circle_lemmas_vanish() {
        for u in [0.0, 0.3, 1.1] {
            let g = geom(1, &["cos(u1)", "sin(u1)"], 1, 1, &[u]);
            let r = lemma_residuals(&g);
            assert!(r.lemma1 < 1e-13 && r.lemma2 < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn circle_nabla_omega_by_hand() {
        // ω is not parallel on the circle; the derivative matches C h − h(·, φ·).
        let u = 0.4;
        let g = geom(1, &["cos(u1)", "sin(u1)"], 1, 1, &[u]);
        let v = nabla_omega(&g, &[1.0], &[1.0]);
        let h = g.second_form(&[1.0], &[1.0]);
        let expect = sub(
            &c_map(&g, &h),
            &g.second_form_tangent(&[1.0], &phi(&g, &g.push_forward(&[1.0]))),
        );
        assert!(v.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!(g.norm(&v) > 0.1);
    }

    #[test]
    fn torus_lemmas_vanish() {
        let g = geom(
            2,
            &["cos(u1)", "sin(u1)", "cos(u2)", "sin(u2)"],
            2,
            2,
            &[0.3, -0.8],
        );
        let r = lemma_residuals(&g);
        assert!(r.lemma1 < 1e-13 && r.lemma2 < 1e-13, "{r:?}");
    }

    #[test]
    fn nabla_omega_is_tensorial_in_y() {
        let g = geom(
            2,
            &["u1", "u2", "0.3*u1^2 + sin(u2)", "u1*u2"],
            2,
            2,
            &[0.2, 0.5],
        );
        let space = g.jet_space();
        let f = space.affine(1.7, &[0.4, -2.0]).unwrap();
        let y: Vec<Jet> = g.coordinate_field(1).iter().map(|c| c * &f).collect();
        let x = [0.6, -0.3];
        let scaled = nabla_omega_field(&g, &x, &y);
        let plain = nabla_omega(&g, &x, &[0.0, 1.0]);
        for (a, b) in scaled.iter().zip(&plain) {
            assert!((a - 1.7 * b).abs() < 1e-13);
        }
    }

    #[test]
    fn normal_connection_is_metric() {
        let g = geom(
            2,
            &["u1", "u2", "0.3*u1^2 + sin(u2)", "u1*u2"],
            2,
            2,
            &[0.2, 0.5],
        );
        let x = [0.7, 0.2];
        let (xi, eta) = (g.normal_field(0), g.normal_field(1));
        let lhs = g.derivative_of_inner(&x, xi, eta);
        let rhs = g.inner(&normal_connection(&g, &x, xi), &values(eta))
            + g.inner(&values(xi), &normal_connection(&g, &x, eta));
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
