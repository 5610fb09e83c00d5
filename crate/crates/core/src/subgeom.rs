//! First- and second-order geometry of an immersed submanifold.
//!
//! [`LocalGeometry`] evaluates every field the downstream checks need
//! (Jacobian columns, orthonormal frames, metric, structure, Christoffels,
//! second fundamental form, mean curvature) as order-1 jets in the parameter
//! directions, so directional derivatives of frame-dependent fields are exact.
//! Plain per-point values are collected in [`PointGeometry`].

use rayon::prelude::*;
use thiserror::Error;

use crate::ambient::{self, AmbientError, AmbientSpace, Christoffel, Matrix};
use crate::expr::{coordinate_index, eval, Coords, Expr, ExprError};
use crate::jets::{Jet, JetError, JetSpace};
use crate::linalg;

/// Post-projection norm below which a Jacobian column or normal candidate
/// counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// Jet order used for the immersion and ambient entries before the fields
/// are cut down to order 1.
const BASE_ORDER: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("immersion map has {got} components but the ambient space has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter dimension {n} must be positive and below the ambient dimension {big_n}")]
    NotProper { n: usize, big_n: usize },
    #[error("sample has {got} coordinates, expected {expected}")]
    SampleDimension { expected: usize, got: usize },
    #[error("immersion references `{0}`, which is not a parameter u1..un")]
    BadVariable(String),
    #[error("immersion is rank-deficient at u = {u:?}")]
    DegenerateImmersion { u: Vec<f64> },
    #[error("insufficient jet order")]
    InsufficientJetOrder,
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<JetError> for GeomError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::InsufficientOrder { .. } => GeomError::InsufficientJetOrder,
            other => GeomError::Expr(ExprError::Jet(other)),
        }
    }
}

/// A parametric submanifold `u ↦ f(u)` with its sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Immersion {
    pub label: String,
    n: usize,
    components: Vec<Expr>,
    samples: Vec<Vec<f64>>,
}

impl Immersion {
    pub fn new(
        label: impl Into<String>,
        n: usize,
        components: Vec<Expr>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, GeomError> {
        if n == 0 || n >= components.len() {
            return Err(GeomError::NotProper {
                n,
                big_n: components.len(),
            });
        }
        for e in &components {
            for var in e.variables() {
                match coordinate_index(&var) {
                    Some(('u', k)) if k < n => {}
                    _ => return Err(GeomError::BadVariable(var)),
                }
            }
        }
        for s in &samples {
            if s.len() != n {
                return Err(GeomError::SampleDimension {
                    expected: n,
                    got: s.len(),
                });
            }
        }
        Ok(Self {
            label: label.into(),
            n,
            components,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self, GeomError> {
        Self::new(self.label.clone(), self.n, self.components.clone(), samples)
    }

    /// `f(u)`.
    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>, GeomError> {
        self.check_sample(u)?;
        let lift = |c: f64| c;
        let env = Coords {
            params: u,
            ambient: &[],
            lift: &lift,
        };
        self.components.iter().map(|e| Ok(eval(e, &env)?)).collect()
    }

    fn check_sample(&self, u: &[f64]) -> Result<(), GeomError> {
        if u.len() != self.n {
            return Err(GeomError::SampleDimension {
                expected: self.n,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Images `f(u)` of every sample.
    pub fn sample_images(&self) -> Result<Vec<Vec<f64>>, GeomError> {
        self.samples.iter().map(|u| self.point(u)).collect()
    }
}

/// Order in which Gram–Schmidt consumes the Jacobian columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameOrder {
    #[default]
    Forward,
    Reversed,
}

type Field = Vec<Jet>;

/// Every field at one parameter point, carried as order-1 jets in the
/// parameter directions.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    n: usize,
    big_n: usize,
    space: JetSpace,
    /// `jac[a]` = ∂f/∂u^a
    jac: Vec<Field>,
    /// `hess[a][b]` = ∂²f/∂u^a∂u^b
    hess: Vec<Vec<Field>>,
    metric: Matrix<Jet>,
    structure: Matrix<Jet>,
    gamma: Christoffel<Jet>,
    /// `tangent[k] = Σ_c coeff[k][c] jac[c]`
    tangent: Vec<Field>,
    coeff: Matrix<Jet>,
    normal: Vec<Field>,
    /// `h_coord[c][d]` = h(∂_c, ∂_d)
    h_coord: Vec<Vec<Field>>,
    mean_curvature: Field,
    // Base-point values.
    g0: Matrix<f64>,
    f0: Matrix<f64>,
    gamma0: Christoffel<f64>,
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

fn mat_values(m: &Matrix<Jet>) -> Matrix<f64> {
    m.iter().map(|r| values(r)).collect()
}

fn jinner(g: &Matrix<Jet>, a: &[Jet], b: &[Jet], space: JetSpace) -> Jet {
    let mut s = space.constant(0.0);
    for (i, row) in g.iter().enumerate() {
        let mut gi_b = space.constant(0.0);
        for (j, gij) in row.iter().enumerate() {
            gi_b += &(gij * &b[j]);
        }
        s += &(&a[i] * &gi_b);
    }
    s
}

fn jaxpy(acc: &mut [Jet], k: &Jet, v: &[Jet]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += &(k * x);
    }
}

fn jmatvec(m: &Matrix<Jet>, v: &[Jet], space: JetSpace) -> Field {
    m.iter()
        .map(|row| {
            let mut s = space.constant(0.0);
            for (a, b) in row.iter().zip(v) {
                s += &(a * b);
            }
            s
        })
        .collect()
}

impl LocalGeometry {
    pub fn at(
        imm: &Immersion,
        ambient_space: &AmbientSpace,
        u: &[f64],
        order: FrameOrder,
    ) -> Result<Self, GeomError> {
        imm.check_sample(u)?;
        let n = imm.dim();
        let big_n = ambient_space.dim();
        if imm.ambient_dim() != big_n {
            return Err(GeomError::DimensionMismatch {
                expected: big_n,
                got: imm.ambient_dim(),
            });
        }

        // Seeds: parameters s_0..s_{n-1}, ambient offsets y_0..y_{N-1}.
        let full = JetSpace::new(n + big_n, BASE_ORDER);
        let params: Vec<Jet> = u
            .iter()
            .enumerate()
            .map(|(a, &v)| full.variable(v, a))
            .collect::<Result<_, _>>()?;
        let lift = move |c: f64| full.constant(c);
        let env = Coords {
            params: &params,
            ambient: &[],
            lift: &lift,
        };
        let f: Vec<Jet> = imm
            .components()
            .iter()
            .map(|e| eval(e, &env))
            .collect::<Result<_, _>>()?;
        let x: Vec<f64> = values(&f);
        let xs: Vec<Jet> = f
            .iter()
            .enumerate()
            .map(|(i, fi)| Ok(fi + &full.variable(0.0, n + i)?))
            .collect::<Result<_, JetError>>()?;
        let g_full = ambient_space.metric_jets(&xs)?;
        let f_full = ambient_space.structure_jets(&xs)?;

        let keep: Vec<usize> = (0..n).collect();
        let space = JetSpace::new(n, 1);
        let cut = |j: &Jet| j.restrict(&keep).truncate(1);

        let mut jac = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for a in 0..n {
            let da: Vec<Jet> = f
                .iter()
                .map(|fi| fi.derivative(a))
                .collect::<Result<_, _>>()?;
            jac.push(da.iter().map(cut).collect::<Field>());
            let mut row = Vec::with_capacity(n);
            for b in 0..n {
                let dab: Field = da
                    .iter()
                    .map(|d| Ok(cut(&d.derivative(b)?)))
                    .collect::<Result<_, JetError>>()?;
                row.push(dab);
            }
            hess.push(row);
        }
        let metric: Matrix<Jet> = g_full.iter().map(|r| r.iter().map(cut).collect()).collect();
        let structure: Matrix<Jet> = f_full.iter().map(|r| r.iter().map(cut).collect()).collect();
        // dmetric[l][i][j] = ∂_l g_ij along the image
        let dmetric: Vec<Matrix<Jet>> = (0..big_n)
            .map(|l| {
                g_full
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|e| Ok(cut(&e.derivative(n + l)?)))
                            .collect::<Result<Vec<_>, JetError>>()
                    })
                    .collect::<Result<Vec<_>, JetError>>()
            })
            .collect::<Result<_, _>>()?;

        let g0 = mat_values(&metric);
        let min_pivot = linalg::ldl_pivots(&g0)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let singular = || AmbientError::SingularMetric {
            point: x.clone(),
            pivot: min_pivot,
        };
        if !(min_pivot > ambient::PIVOT_TOL) {
            return Err(singular().into());
        }
        let ginv = linalg::jet_inverse(&metric, space).ok_or_else(singular)?;
        let mut gamma = vec![vec![vec![space.constant(0.0); big_n]; big_n]; big_n];
        for i in 0..big_n {
            for j in 0..big_n {
                for k in j..big_n {
                    let mut s = space.constant(0.0);
                    for l in 0..big_n {
                        let bracket = &(&dmetric[j][l][k] + &dmetric[k][l][j]) - &dmetric[l][j][k];
                        s += &(&ginv[i][l] * &bracket);
                    }
                    let s = s.scale(0.5);
                    gamma[i][k][j] = s.clone();
                    gamma[i][j][k] = s;
                }
            }
        }

        let mut geom = Self {
            u: u.to_vec(),
            x,
            n,
            big_n,
            space,
            jac,
            hess,
            f0: mat_values(&structure),
            gamma0: gamma.iter().map(mat_values).collect(),
            metric,
            structure,
            gamma,
            tangent: Vec::new(),
            coeff: Vec::new(),
            normal: Vec::new(),
            h_coord: Vec::new(),
            mean_curvature: Vec::new(),
            g0,
        };
        geom.build_frames(order)?;
        geom.build_second_order();
        Ok(geom)
    }

    fn zero(&self) -> Jet {
        self.space.constant(0.0)
    }

    fn zero_field(&self) -> Field {
        vec![self.zero(); self.big_n]
    }

    fn inner_field(&self, a: &[Jet], b: &[Jet]) -> Jet {
        jinner(&self.metric, a, b, self.space)
    }

    fn build_frames(&mut self, order: FrameOrder) -> Result<(), GeomError> {
        let n = self.n;
        let columns: Vec<usize> = match order {
            FrameOrder::Forward => (0..n).collect(),
            FrameOrder::Reversed => (0..n).rev().collect(),
        };
        let degenerate = || GeomError::DegenerateImmersion { u: self.u.clone() };
        let mut tangent: Vec<Field> = Vec::with_capacity(n);
        let mut coeff: Matrix<Jet> = Vec::with_capacity(n);
        for &c in &columns {
            let mut v = self.jac[c].clone();
            let mut t: Vec<Jet> = (0..n)
                .map(|d| self.space.constant(if d == c { 1.0 } else { 0.0 }))
                .collect();
            for (e, te) in tangent.iter().zip(&coeff) {
                let p = self.inner_field(&self.jac[c], e);
                jaxpy(&mut v, &(-&p), e);
                jaxpy(&mut t, &(-&p), te);
            }
            let norm_sq = self.inner_field(&v, &v);
            if !(norm_sq.value().max(0.0).sqrt() > DEPENDENCE_TOL) {
                return Err(degenerate());
            }
            let inv = norm_sq.pow(-0.5)?;
            tangent.push(v.iter().map(|x| x * &inv).collect());
            coeff.push(t.iter().map(|x| x * &inv).collect());
        }
        let m = self.big_n - n;
        let mut normal: Vec<Field> = Vec::with_capacity(m);
        for cand in 0..self.big_n {
            if normal.len() == m {
                break;
            }
            let mut v: Field = (0..self.big_n)
                .map(|i| self.space.constant(if i == cand { 1.0 } else { 0.0 }))
                .collect();
            let base = v.clone();
            for e in tangent.iter().chain(&normal) {
                let p = self.inner_field(&base, e);
                jaxpy(&mut v, &(-&p), e);
            }
            // second pass for numerical orthogonality
            for e in tangent.iter().chain(&normal) {
                let p = self.inner_field(&v, e);
                jaxpy(&mut v, &(-&p), e);
            }
            let norm_sq = self.inner_field(&v, &v);
            if !(norm_sq.value().max(0.0).sqrt() > DEPENDENCE_TOL) {
                continue;
            }
            let inv = norm_sq.pow(-0.5)?;
            normal.push(v.iter().map(|x| x * &inv).collect());
        }
        if normal.len() != m {
            return Err(degenerate());
        }
        self.tangent = tangent;
        self.coeff = coeff;
        self.normal = normal;
        Ok(())
    }

    fn gamma_field(&self, a: &[Jet], b: &[Jet]) -> Field {
        self.gamma
            .iter()
            .map(|gi| {
                let mut s = self.zero();
                for (j, row) in gi.iter().enumerate() {
                    let mut inner = self.zero();
                    for (k, gijk) in row.iter().enumerate() {
                        inner += &(gijk * &b[k]);
                    }
                    s += &(&a[j] * &inner);
                }
                s
            })
            .collect()
    }

    fn build_second_order(&mut self) {
        let n = self.n;
        let mut h_coord = vec![vec![Vec::new(); n]; n];
        for c in 0..n {
            for d in c..n {
                let g = self.gamma_field(&self.jac[c], &self.jac[d]);
                let acc: Field = self.hess[c][d].iter().zip(&g).map(|(k, t)| k + t).collect();
                let h = self.normal_part_field(&acc);
                h_coord[d][c] = h.clone();
                h_coord[c][d] = h;
            }
        }
        self.h_coord = h_coord;
        let mut mean = self.zero_field();
        for a in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let w = &self.coeff[a][c] * &self.coeff[a][d];
                    jaxpy(&mut mean, &w, &self.h_coord[c][d]);
                }
            }
        }
        let scale = 1.0 / n as f64;
        self.mean_curvature = mean.iter().map(|x| x.scale(scale)).collect();
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.big_n
    }

    pub fn codim(&self) -> usize {
        self.big_n - self.n
    }

    /// Seed space of the field jets (parameter directions, order 1).
    pub fn jet_space(&self) -> JetSpace {
        self.space
    }

    pub fn metric(&self) -> &Matrix<f64> {
        &self.g0
    }

    pub fn structure(&self) -> &Matrix<f64> {
        &self.f0
    }

    pub fn christoffel(&self) -> &Christoffel<f64> {
        &self.gamma0
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        ambient::inner_with(&self.g0, a, b)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        ambient::norm_with(&self.g0, v)
    }

    /// Coordinate field `∂/∂u^b` as an ambient vector field.
    pub fn coordinate_field(&self, b: usize) -> &[Jet] {
        &self.jac[b]
    }

    pub fn tangent_field(&self, a: usize) -> &[Jet] {
        &self.tangent[a]
    }

    pub fn normal_field(&self, alpha: usize) -> &[Jet] {
        &self.normal[alpha]
    }

    pub fn mean_curvature_field(&self) -> &[Jet] {
        &self.mean_curvature
    }

    pub fn jacobian(&self) -> Vec<Vec<f64>> {
        self.jac.iter().map(|c| values(c)).collect()
    }

    pub fn tangent_frame(&self) -> Vec<Vec<f64>> {
        self.tangent.iter().map(|c| values(c)).collect()
    }

    pub fn normal_frame(&self) -> Vec<Vec<f64>> {
        self.normal.iter().map(|c| values(c)).collect()
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        values(&self.mean_curvature)
    }

    /// `e_a = Σ_c coeffs[a][c] ∂_c`.
    pub fn frame_coefficients(&self) -> Matrix<f64> {
        mat_values(&self.coeff)
    }

    /// Induced metric `g(∂_a, ∂_b)` in the coordinate frame.
    pub fn induced_metric(&self) -> Matrix<f64> {
        let jac = self.jacobian();
        (0..self.n)
            .map(|a| (0..self.n).map(|b| self.inner(&jac[a], &jac[b])).collect())
            .collect()
    }

    /// Parameter-space vector `X` ↦ ambient vector `Σ X^a ∂_a f`.
    pub fn push_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.big_n];
        for (a, col) in self.jac.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(col) {
                *o += x[a] * c.value();
            }
        }
        out
    }

    /// Parameter coordinates of a tangent vector.
    pub fn to_param(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (a, e) in self.tangent.iter().enumerate() {
            let p = self.inner(v, &values(e));
            for (c, o) in out.iter_mut().enumerate() {
                *o += p * self.coeff[a][c].value();
            }
        }
        out
    }

    pub fn tangent_part(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.big_n];
        for e in &self.tangent {
            let e = values(e);
            let p = self.inner(v, &e);
            for (o, x) in out.iter_mut().zip(&e) {
                *o += p * x;
            }
        }
        out
    }

    pub fn normal_part(&self, v: &[f64]) -> Vec<f64> {
        let t = self.tangent_part(v);
        v.iter().zip(t).map(|(a, b)| a - b).collect()
    }

    pub fn tangent_part_field(&self, v: &[Jet]) -> Field {
        let mut out = self.zero_field();
        for e in &self.tangent {
            let p = self.inner_field(v, e);
            jaxpy(&mut out, &p, e);
        }
        out
    }

    pub fn normal_part_field(&self, v: &[Jet]) -> Field {
        let t = self.tangent_part_field(v);
        v.iter().zip(&t).map(|(a, b)| a - b).collect()
    }

    pub fn apply_structure(&self, v: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.f0, v)
    }

    pub fn apply_structure_field(&self, v: &[Jet]) -> Field {
        jmatvec(&self.structure, v, self.space)
    }

    /// `∇̄_X W` at the base point for a parameter direction `X`.
    pub fn cov_derivative(&self, x: &[f64], field: &[Jet]) -> Vec<f64> {
        let vel = self.push_forward(x);
        ambient::cov_derivative_with(&self.gamma0, field, x, &vel)
            .expect("field jets carry order 1")
    }

    /// `X g(ξ, η)` for fields along the submanifold.
    pub fn derivative_of_inner(&self, x: &[f64], a: &[Jet], b: &[Jet]) -> f64 {
        self.inner_field(a, b)
            .derivative_along(x)
            .expect("field jets carry order 1")
    }

    /// `h(X, Y)` for parameter-space vectors.
    pub fn second_form(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.big_n];
        for c in 0..self.n {
            for d in 0..self.n {
                let w = x[c] * y[d];
                if w == 0.0 {
                    continue;
                }
                for (o, h) in out.iter_mut().zip(&self.h_coord[c][d]) {
                    *o += w * h.value();
                }
            }
        }
        out
    }

    /// `h(X, V)` for a parameter vector `X` and an ambient tangent vector `V`.
    pub fn second_form_tangent(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.second_form(x, &self.to_param(v))
    }

    /// `A_ξ X = Σ_a g(h(X, e_a), ξ) e_a`.
    pub fn shape_operator(&self, xi: &[f64], x: &[f64]) -> Vec<f64> {
        let coeff = self.frame_coefficients();
        let mut out = vec![0.0; self.big_n];
        for (a, e) in self.tangent.iter().enumerate() {
            let w = self.inner(&self.second_form(x, &coeff[a]), xi);
            for (o, c) in out.iter_mut().zip(e) {
                *o += w * c.value();
            }
        }
        out
    }

    /// Second fundamental form in orthonormal frames, shape matrices and `H`.
    pub fn second_fundamental_form(&self) -> SecondFundamentalForm {
        let coeff = self.frame_coefficients();
        let normals = self.normal_frame();
        let h: Vec<Matrix<f64>> = normals
            .iter()
            .map(|xi| {
                (0..self.n)
                    .map(|a| {
                        (0..self.n)
                            .map(|b| self.inner(&self.second_form(&coeff[a], &coeff[b]), xi))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mean_curvature = self.mean_curvature();
        let mean_curvature_sq = self.inner(&mean_curvature, &mean_curvature);
        SecondFundamentalForm {
            shape: h.clone(),
            h,
            mean_curvature,
            mean_curvature_sq,
        }
    }

    /// `φ, ω, B, C` in the orthonormal frames.
    pub fn decompose(&self) -> StructureBlocks {
        let tangent = self.tangent_frame();
        let normal = self.normal_frame();
        let ft: Vec<Vec<f64>> = tangent.iter().map(|e| self.apply_structure(e)).collect();
        let fnrm: Vec<Vec<f64>> = normal.iter().map(|x| self.apply_structure(x)).collect();
        let gram = |vs: &[Vec<f64>], basis: &[Vec<f64>]| -> Matrix<f64> {
            basis
                .iter()
                .map(|b| vs.iter().map(|v| self.inner(v, b)).collect())
                .collect()
        };
        let phi = gram(&ft, &tangent);
        let omega = gram(&ft, &normal);
        let b = gram(&fnrm, &tangent);
        let c = gram(&fnrm, &normal);
        let mut reassembly: f64 = 0.0;
        for (a, fe) in ft.iter().enumerate() {
            let mut rebuilt = vec![0.0; self.big_n];
            for (k, e) in tangent.iter().enumerate() {
                for (r, x) in rebuilt.iter_mut().zip(e) {
                    *r += phi[k][a] * x;
                }
            }
            for (al, xi) in normal.iter().enumerate() {
                for (r, x) in rebuilt.iter_mut().zip(xi) {
                    *r += omega[al][a] * x;
                }
            }
            let diff: Vec<f64> = fe.iter().zip(&rebuilt).map(|(p, q)| p - q).collect();
            reassembly = reassembly.max(self.norm(&diff));
        }
        StructureBlocks {
            phi,
            omega,
            b,
            c,
            reassembly_residual: reassembly,
        }
    }

    pub fn point_geometry(&self) -> PointGeometry {
        PointGeometry {
            u: self.u.clone(),
            x: self.x.clone(),
            tangent_on: self.tangent_frame(),
            normal_on: self.normal_frame(),
            induced_metric: self.induced_metric(),
            second: self.second_fundamental_form(),
            blocks: self.decompose(),
        }
    }

    /// Identities that hold at every point of every submanifold.
    pub fn structural_residuals(&self) -> StructuralResiduals {
        let pg = self.point_geometry();
        let n = self.n;
        let m = self.codim();
        let blocks = &pg.blocks;
        let mut h_symmetry: f64 = 0.0;
        for h in &pg.second.h {
            for a in 0..n {
                for b in 0..n {
                    h_symmetry = h_symmetry.max((h[a][b] - h[b][a]).abs());
                }
            }
        }
        // Weingarten route: g(−∇̄_{e_a} ξ_α, e_b) against h^α_ab.
        let coeff = self.frame_coefficients();
        let tangent = self.tangent_frame();
        let mut duality: f64 = 0.0;
        for (al, xi) in self.normal.iter().enumerate() {
            for a in 0..n {
                let d = self.cov_derivative(&coeff[a], xi);
                for b in 0..n {
                    let w = -self.inner(&d, &tangent[b]);
                    duality = duality.max((w - pg.second.shape[al][b][a]).abs());
                }
            }
        }
        let phi_t = linalg::transpose(&blocks.phi);
        let c_t = linalg::transpose(&blocks.c);
        let omega_t = linalg::transpose(&blocks.omega);
        let adjoint = linalg::max_abs_diff(&blocks.phi, &phi_t)
            .max(linalg::max_abs_diff(&blocks.c, &c_t))
            .max(linalg::max_abs_diff(&blocks.b, &omega_t));
        let prod = |a: &Matrix<f64>, b: &Matrix<f64>| linalg::matmul(a, b);
        let add = |a: &Matrix<f64>, b: &Matrix<f64>| -> Matrix<f64> {
            a.iter()
                .zip(b)
                .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
                .collect()
        };
        let zeros = |r: usize, c: usize| vec![vec![0.0; c]; r];
        let (phi, omega, bm, cm) = (&blocks.phi, &blocks.omega, &blocks.b, &blocks.c);
        let block = [
            linalg::max_abs_diff(
                &add(&prod(phi, phi), &prod(bm, omega)),
                &linalg::identity(n),
            ),
            linalg::max_abs_diff(&add(&prod(omega, phi), &prod(cm, omega)), &zeros(m, n)),
            linalg::max_abs_diff(&add(&prod(phi, bm), &prod(bm, cm)), &zeros(n, m)),
            linalg::max_abs_diff(&add(&prod(omega, bm), &prod(cm, cm)), &linalg::identity(m)),
        ];
        StructuralResiduals {
            h_symmetry,
            duality,
            adjoint,
            block,
            reassembly: blocks.reassembly_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    /// `h[α][a][b] = g(h(e_a, e_b), ξ_α)`
    pub h: Vec<Matrix<f64>>,
    /// `shape[α]` is the matrix of `A_{ξ_α}` in the tangent frame.
    pub shape: Vec<Matrix<f64>>,
    pub mean_curvature: Vec<f64>,
    pub mean_curvature_sq: f64,
}

/// Blocks of `F` relative to `TM ⊕ TM^⊥`; `phi[b][a] = g(F e_a, e_b)`,
/// `omega[α][a] = g(F e_a, ξ_α)`, `b[a][α] = g(F ξ_α, e_a)`,
/// `c[β][α] = g(F ξ_α, ξ_β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureBlocks {
    pub phi: Matrix<f64>,
    pub omega: Matrix<f64>,
    pub b: Matrix<f64>,
    pub c: Matrix<f64>,
    pub reassembly_residual: f64,
}

impl StructureBlocks {
    pub fn omega_phi(&self) -> Matrix<f64> {
        linalg::matmul(&self.omega, &self.phi)
    }

    /// Number of singular values of φ above `√tol`.
    pub fn rank_phi(&self, tol: f64) -> usize {
        let cut = tol.sqrt();
        linalg::singular_values(&self.phi)
            .into_iter()
            .filter(|s| *s > cut)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub tangent_on: Vec<Vec<f64>>,
    pub normal_on: Vec<Vec<f64>>,
    pub induced_metric: Matrix<f64>,
    pub second: SecondFundamentalForm,
    pub blocks: StructureBlocks,
}

impl PointGeometry {
    pub fn mean_curvature_norm(&self) -> f64 {
        self.second.mean_curvature_sq.max(0.0).sqrt()
    }

    pub fn is_minimal(&self, tol: f64) -> bool {
        self.mean_curvature_norm() <= tol
    }

    /// Matrix of `A_H − ‖H‖² I` in the orthonormal tangent frame, with entries
    /// `g(h(e_a,e_b), H) − δ_ab ‖H‖²`.
    pub fn umbilicity_defect(&self) -> Matrix<f64> {
        let n = self.tangent_on.len();
        let h_alpha: Vec<f64> = (0..self.normal_on.len())
            .map(|al| (0..n).map(|a| self.second.h[al][a][a]).sum::<f64>() / n as f64)
            .collect();
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let ah: f64 = h_alpha
                            .iter()
                            .enumerate()
                            .map(|(al, ha)| ha * self.second.h[al][a][b])
                            .sum();
                        let target = if a == b {
                            self.second.mean_curvature_sq
                        } else {
                            0.0
                        };
                        ah - target
                    })
                    .collect()
            })
            .collect()
    }

    /// Spectral norm of [`Self::umbilicity_defect`]; independent of the frame.
    pub fn pseudo_umbilical_gap(&self) -> f64 {
        linalg::singular_values(&self.umbilicity_defect())
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn is_pseudo_umbilical(&self, tol: f64) -> bool {
        self.pseudo_umbilical_gap() <= tol
    }

    pub fn phi_norm(&self) -> f64 {
        linalg::frobenius(&self.blocks.phi)
    }

    pub fn omega_norm(&self) -> f64 {
        linalg::frobenius(&self.blocks.omega)
    }

    pub fn omega_phi_norm(&self) -> f64 {
        linalg::frobenius(&self.blocks.omega_phi())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructuralResiduals {
    pub h_symmetry: f64,
    /// Weingarten-route check of `g(A_ξ X, Y) = g(h(X,Y), ξ)`.
    pub duality: f64,
    /// φ and C symmetric, B = ωᵀ.
    pub adjoint: f64,
    /// φ²+Bω−I, ωφ+Cω, φB+BC, ωB+C²−I.
    pub block: [f64; 4],
    pub reassembly: f64,
}

impl StructuralResiduals {
    pub fn max(&self) -> f64 {
        self.block.iter().copied().fold(
            self.h_symmetry
                .max(self.duality)
                .max(self.adjoint)
                .max(self.reassembly),
            f64::max,
        )
    }

    pub fn merge(&mut self, other: &Self) {
        self.h_symmetry = self.h_symmetry.max(other.h_symmetry);
        self.duality = self.duality.max(other.duality);
        self.adjoint = self.adjoint.max(other.adjoint);
        self.reassembly = self.reassembly.max(other.reassembly);
        for (a, b) in self.block.iter_mut().zip(other.block) {
            *a = a.max(b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Invariant,
    AntiInvariant,
    ProperSemiInvariant,
    Generic,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Invariant => "invariant",
            Classification::AntiInvariant => "anti-invariant",
            Classification::ProperSemiInvariant => "proper semi-invariant",
            Classification::Generic => "generic",
        }
    }

    pub fn is_semi_invariant(self) -> bool {
        self != Classification::Generic
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointClass {
    pub u: Vec<f64>,
    pub phi_norm: f64,
    pub omega_norm: f64,
    pub omega_phi_norm: f64,
    pub rank_phi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class: Classification,
    pub points: Vec<PointClass>,
    pub max_phi: f64,
    pub max_omega: f64,
    pub max_omega_phi: f64,
    pub rank_constant: bool,
    /// `(dim D, dim D^⊥)` for semi-invariant results.
    pub distribution_dims: Option<(usize, usize)>,
    /// Fewer than two samples were available.
    pub undersampled: bool,
}

/// Four-way verdict from per-point φ/ω data.
pub fn classify_points(points: &[PointGeometry], n: usize, tol: f64) -> ClassificationReport {
    let pcs: Vec<PointClass> = points
        .iter()
        .map(|p| PointClass {
            u: p.u.clone(),
            phi_norm: p.phi_norm(),
            omega_norm: p.omega_norm(),
            omega_phi_norm: p.omega_phi_norm(),
            rank_phi: p.blocks.rank_phi(tol),
        })
        .collect();
    let max_of = |f: fn(&PointClass) -> f64| pcs.iter().map(f).fold(0.0, f64::max);
    let max_phi = max_of(|p| p.phi_norm);
    let max_omega = max_of(|p| p.omega_norm);
    let max_omega_phi = max_of(|p| p.omega_phi_norm);
    let rank_constant = pcs.windows(2).all(|w| w[0].rank_phi == w[1].rank_phi);
    let class = if max_omega <= tol {
        Classification::Invariant
    } else if max_phi <= tol {
        Classification::AntiInvariant
    } else if max_omega_phi <= tol && rank_constant {
        Classification::ProperSemiInvariant
    } else {
        Classification::Generic
    };
    let distribution_dims = match class {
        Classification::Invariant => Some((n, 0)),
        Classification::AntiInvariant => Some((0, n)),
        Classification::ProperSemiInvariant => {
            let r = pcs.first().map_or(0, |p| p.rank_phi);
            Some((r, n - r))
        }
        Classification::Generic => None,
    };
    ClassificationReport {
        class,
        undersampled: pcs.len() < 2,
        points: pcs,
        max_phi,
        max_omega,
        max_omega_phi,
        rank_constant,
        distribution_dims,
    }
}

/// Local geometry at every sample, in sample order.
pub fn sample_geometry(
    imm: &Immersion,
    space: &AmbientSpace,
    order: FrameOrder,
) -> Result<Vec<LocalGeometry>, GeomError> {
    imm.samples()
        .par_iter()
        .map(|u| LocalGeometry::at(imm, space, u, order))
        .collect()
}

pub fn classify(
    imm: &Immersion,
    space: &AmbientSpace,
    tol: f64,
) -> Result<ClassificationReport, GeomError> {
    let points: Vec<PointGeometry> = sample_geometry(imm, space, FrameOrder::Forward)?
        .iter()
        .map(LocalGeometry::point_geometry)
        .collect();
    Ok(classify_points(&points, imm.dim(), tol))
}
