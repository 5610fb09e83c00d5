//! The ambient manifold: a chart with metric `g_ij(x)` and almost product
//! structure `F^i_j(x)`, its Levi-Civita connection, and sampled checks that
//! the pair is a locally product Riemannian structure.

use thiserror::Error;

use crate::expr::{coordinate_index, eval, Coords, Expr, ExprError};
use crate::jets::{Jet, JetError, JetSpace};
use crate::linalg;

/// A residual at or below this passes `validate_ambient`.
pub const AMBIENT_PASS_TOL: f64 = 1e-8;
/// Minimum LDLᵀ pivot accepted as positive definite.
pub const PIVOT_TOL: f64 = 1e-10;
/// `F` within this of `±I` at every sample is flagged trivial.
pub const TRIVIAL_STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmbientError {
    #[error("{what} must be {expected}×{expected}, got {rows}×{cols}")]
    Shape {
        what: &'static str,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("metric entries ({i},{j}) and ({j},{i}) differ")]
    NonSymmetricMetric { i: usize, j: usize },
    #[error("block {block} references `{var}`, which belongs to the other factor")]
    BlockVariableLeak { block: char, var: String },
    #[error("`{0}` is not an ambient coordinate of this space")]
    VariableOutOfRange(String),
    #[error("metric is not positive definite at {point:?} (pivot {pivot:e})")]
    SingularMetric { point: Vec<f64>, pivot: f64 },
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("covariant derivative needs order-1 jets")]
    InsufficientJetOrder,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<JetError> for AmbientError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::InsufficientOrder { .. } => AmbientError::InsufficientJetOrder,
            other => AmbientError::Expr(ExprError::Jet(other)),
        }
    }
}

pub type Matrix<T> = Vec<Vec<T>>;
/// `gamma[i][j][k] = Γ̄^i_{jk}`.
pub type Christoffel<T> = Vec<Vec<Vec<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientSpace {
    dim: usize,
    metric: Matrix<Expr>,
    structure: Matrix<Expr>,
    split: Option<(usize, usize)>,
}

fn check_square<T>(what: &'static str, m: &Matrix<T>, n: usize) -> Result<(), AmbientError> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(AmbientError::Shape {
            what,
            expected: n,
            rows: m.len(),
            cols: m.iter().map(Vec::len).max().unwrap_or(0),
        });
    }
    Ok(())
}

/// Identity metric block.
pub fn flat_block(k: usize) -> Matrix<Expr> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| Expr::num(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

impl AmbientSpace {
    /// Space with arbitrary metric and structure matrices over `x1..xN`.
    pub fn explicit(metric: Matrix<Expr>, structure: Matrix<Expr>) -> Result<Self, AmbientError> {
        let dim = metric.len();
        check_square("metric", &metric, dim)?;
        check_square("structure", &structure, dim)?;
        for i in 0..dim {
            for j in i + 1..dim {
                if metric[i][j] != metric[j][i] {
                    return Err(AmbientError::NonSymmetricMetric { i, j });
                }
            }
        }
        for e in metric.iter().chain(&structure).flatten() {
            for var in e.variables() {
                match coordinate_index(&var) {
                    Some(('x', k)) if k < dim => {}
                    _ => return Err(AmbientError::VariableOutOfRange(var)),
                }
            }
        }
        Ok(Self {
            dim,
            metric,
            structure,
            split: None,
        })
    }

    /// Riemannian product of a `p`-dimensional block over `x1..xp` and a
    /// `q`-dimensional block over `x(p+1)..x(p+q)`, with `F = diag(+I_p, −I_q)`.
    pub fn product_of(
        block_a: Matrix<Expr>,
        p: usize,
        block_b: Matrix<Expr>,
        q: usize,
    ) -> Result<Self, AmbientError> {
        check_square("blockA", &block_a, p)?;
        check_square("blockB", &block_b, q)?;
        let check_block = |block: &Matrix<Expr>, name: char, range: std::ops::Range<usize>| {
            for e in block.iter().flatten() {
                for var in e.variables() {
                    match coordinate_index(&var) {
                        Some(('x', k)) if range.contains(&k) => {}
                        Some(('x', k)) if k < p + q => {
                            return Err(AmbientError::BlockVariableLeak { block: name, var })
                        }
                        _ => return Err(AmbientError::VariableOutOfRange(var)),
                    }
                }
            }
            Ok(())
        };
        check_block(&block_a, 'A', 0..p)?;
        check_block(&block_b, 'B', p..p + q)?;
        let dim = p + q;
        let zero = || Expr::num(0.0);
        let mut metric: Matrix<Expr> = vec![vec![zero(); dim]; dim];
        for i in 0..p {
            for j in 0..p {
                metric[i][j] = block_a[i][j].clone();
            }
        }
        for i in 0..q {
            for j in 0..q {
                metric[p + i][p + j] = block_b[i][j].clone();
            }
        }
        let structure = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| match (i == j, i < p) {
                        (true, true) => Expr::num(1.0),
                        (true, false) => Expr::Neg(Box::new(Expr::num(1.0))),
                        _ => zero(),
                    })
                    .collect()
            })
            .collect();
        let mut space = Self::explicit(metric, structure)?;
        space.split = Some((p, q));
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric_exprs(&self) -> &Matrix<Expr> {
        &self.metric
    }

    pub fn structure_exprs(&self) -> &Matrix<Expr> {
        &self.structure
    }

    /// `(p, q)` when built by [`AmbientSpace::product_of`].
    pub fn product_split(&self) -> Option<(usize, usize)> {
        self.split
    }

    fn check_point(&self, len: usize) -> Result<(), AmbientError> {
        if len != self.dim {
            return Err(AmbientError::PointDimension {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Metric evaluated at jet-valued ambient coordinates.
    pub fn metric_jets(&self, x: &[Jet]) -> Result<Matrix<Jet>, AmbientError> {
        self.check_point(x.len())?;
        let space = x[0].space();
        let lift = move |c: f64| space.constant(c);
        let env = Coords {
            params: &[],
            ambient: x,
            lift: &lift,
        };
        let mut g: Matrix<Jet> = vec![vec![space.constant(0.0); self.dim]; self.dim];
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = eval(&self.metric[i][j], &env)?;
                g[j][i] = v.clone();
                g[i][j] = v;
            }
        }
        Ok(g)
    }

    pub fn structure_jets(&self, x: &[Jet]) -> Result<Matrix<Jet>, AmbientError> {
        self.check_point(x.len())?;
        let space = x[0].space();
        let lift = move |c: f64| space.constant(c);
        let env = Coords {
            params: &[],
            ambient: x,
            lift: &lift,
        };
        self.structure
            .iter()
            .map(|row| row.iter().map(|e| Ok(eval(e, &env)?)).collect())
            .collect()
    }

    fn real_env_eval(&self, m: &Matrix<Expr>, x: &[f64]) -> Result<Matrix<f64>, AmbientError> {
        self.check_point(x.len())?;
        let lift = |c: f64| c;
        let env = Coords {
            params: &[],
            ambient: x,
            lift: &lift,
        };
        m.iter()
            .map(|row| row.iter().map(|e| Ok(eval(e, &env)?)).collect())
            .collect()
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<Matrix<f64>, AmbientError> {
        let mut g = self.real_env_eval(&self.metric, x)?;
        for i in 0..self.dim {
            for j in 0..i {
                g[i][j] = g[j][i];
            }
        }
        Ok(g)
    }

    pub fn structure_at(&self, x: &[f64]) -> Result<Matrix<f64>, AmbientError> {
        self.real_env_eval(&self.structure, x)
    }

    /// Metric and its first partials `dg[l][i][j] = ∂_l g_ij` at `x`.
    fn metric_with_partials(
        &self,
        x: &[f64],
    ) -> Result<(Matrix<f64>, Vec<Matrix<f64>>), AmbientError> {
        self.check_point(x.len())?;
        let space = JetSpace::new(self.dim, 1);
        let seeds: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| space.variable(v, k))
            .collect::<Result<_, _>>()?;
        let g = self.metric_jets(&seeds)?;
        let values = g
            .iter()
            .map(|r| r.iter().map(Jet::value).collect())
            .collect();
        let partials = (0..self.dim)
            .map(|l| {
                g.iter()
                    .map(|r| r.iter().map(|e| e.partial(&[l])).collect())
                    .collect()
            })
            .collect();
        Ok((values, partials))
    }

    /// `Γ̄^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})` at `x`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel<f64>, AmbientError> {
        let (g, dg) = self.metric_with_partials(x)?;
        let pivots = linalg::ldl_pivots(&g);
        let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > PIVOT_TOL) {
            return Err(AmbientError::SingularMetric {
                point: x.to_vec(),
                pivot: min,
            });
        }
        let ginv = linalg::inverse(&g).ok_or_else(|| AmbientError::SingularMetric {
            point: x.to_vec(),
            pivot: min,
        })?;
        let n = self.dim;
        let mut gamma = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
                    }
                    gamma[i][j][k] = 0.5 * s;
                    gamma[i][k][j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// `(∇̄_X V)^i = dV^i/dt + Γ̄^i_{jk} ẋ^j V^k` at `x`, where `V` is given by
    /// jets whose derivative along `jet_direction` (in the jets' seed space)
    /// is `d/dt` along the curve with velocity `velocity`.
    pub fn cov_derivative(
        &self,
        x: &[f64],
        field: &[Jet],
        jet_direction: &[f64],
        velocity: &[f64],
    ) -> Result<Vec<f64>, AmbientError> {
        self.check_point(field.len())?;
        self.check_point(velocity.len())?;
        let gamma = self.christoffel(x)?;
        cov_derivative_with(&gamma, field, jet_direction, velocity)
    }

    /// Samples `F² − I`, `FᵀgF − g`, `(∇̄_X F)Y`, self-adjointness and
    /// positive-definiteness. Directions default to the coordinate basis.
    pub fn validate(&self, samples: &[Vec<f64>], directions: Option<&[Vec<f64>]>) -> AmbientReport {
        let mut report = AmbientReport::default();
        let mut trivial = !samples.is_empty();
        let basis = linalg::identity(self.dim);
        let directions = directions.unwrap_or(&basis);
        for (idx, x) in samples.iter().enumerate() {
            match self.validate_point(x, directions) {
                Ok(p) => {
                    report.f_squared = report.f_squared.max(p.f_squared);
                    report.metric_compat = report.metric_compat.max(p.metric_compat);
                    report.parallel = report.parallel.max(p.parallel);
                    report.self_adjoint = report.self_adjoint.max(p.self_adjoint);
                    report.min_pivot = report.min_pivot.min(p.min_pivot);
                    trivial &= p.trivial;
                }
                Err(e) => report.failures.push(format!("sample {idx}: {e}")),
            }
        }
        report.samples = samples.len();
        report.structure_trivial = trivial;
        report.positive_definite = report.min_pivot > PIVOT_TOL;
        report.pass = report.failures.is_empty()
            && report.positive_definite
            && report.f_squared <= AMBIENT_PASS_TOL
            && report.metric_compat <= AMBIENT_PASS_TOL
            && report.parallel <= AMBIENT_PASS_TOL;
        report
    }

    fn validate_point(
        &self,
        x: &[f64],
        directions: &[Vec<f64>],
    ) -> Result<PointCheck, AmbientError> {
        self.check_point(x.len())?;
        let n = self.dim;
        let g = self.metric_at(x)?;
        let min_pivot = linalg::ldl_pivots(&g)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let space = JetSpace::new(n, 1);
        let seeds: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| space.variable(v, k))
            .collect::<Result<_, _>>()?;
        let fj = self.structure_jets(&seeds)?;
        let f: Matrix<f64> = fj
            .iter()
            .map(|r| r.iter().map(Jet::value).collect())
            .collect();

        let f2 = linalg::matmul(&f, &f);
        let f_squared = linalg::max_abs_diff(&f2, &linalg::identity(n));
        let gf = linalg::matmul(&g, &f);
        let ftgf = linalg::matmul(&linalg::transpose(&f), &gf);
        let metric_compat = linalg::max_abs_diff(&ftgf, &g);
        let self_adjoint = linalg::max_abs_diff(&gf, &linalg::transpose(&gf));
        let trivial = linalg::max_abs_diff(&f, &linalg::identity(n)) <= TRIVIAL_STRUCTURE_TOL
            || f.iter().enumerate().all(|(i, r)| {
                r.iter().enumerate().all(|(j, v)| {
                    (v + if i == j { 1.0 } else { 0.0 }).abs() <= TRIVIAL_STRUCTURE_TOL
                })
            });

        let mut parallel = 0.0f64;
        if min_pivot > PIVOT_TOL {
            let gamma = self.christoffel(x)?;
            for dir in directions {
                // ∂_X F as a matrix
                let df: Matrix<f64> = fj
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|e| e.derivative_along(dir).unwrap_or(0.0))
                            .collect()
                    })
                    .collect();
                for k in 0..n {
                    let y: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
                    let fy = linalg::matvec(&f, &y);
                    let gamma_xy = contract(&gamma, dir, &y);
                    let gamma_xfy = contract(&gamma, dir, &fy);
                    let f_gamma_xy = linalg::matvec(&f, &gamma_xy);
                    let dfy = linalg::matvec(&df, &y);
                    let r: Vec<f64> = (0..n)
                        .map(|i| dfy[i] + gamma_xfy[i] - f_gamma_xy[i])
                        .collect();
                    parallel = parallel.max(norm_with(&g, &r));
                }
            }
        }
        Ok(PointCheck {
            f_squared,
            metric_compat,
            self_adjoint,
            parallel,
            min_pivot,
            trivial,
        })
    }
}

struct PointCheck {
    f_squared: f64,
    metric_compat: f64,
    self_adjoint: f64,
    parallel: f64,
    min_pivot: f64,
    trivial: bool,
}

/// `Γ(X, Y)^i = Γ^i_{jk} X^j Y^k`.
pub(crate) fn contract(gamma: &Christoffel<f64>, x: &[f64], y: &[f64]) -> Vec<f64> {
    gamma
        .iter()
        .map(|gi| {
            let mut s = 0.0;
            for (j, row) in gi.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    s += v * x[j] * y[k];
                }
            }
            s
        })
        .collect()
}

pub(crate) fn norm_with(g: &Matrix<f64>, v: &[f64]) -> f64 {
    inner_with(g, v, v).max(0.0).sqrt()
}

pub(crate) fn inner_with(g: &Matrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, gij) in row.iter().enumerate() {
            s += gij * a[i] * b[j];
        }
    }
    s
}

pub(crate) fn cov_derivative_with(
    gamma: &Christoffel<f64>,
    field: &[Jet],
    jet_direction: &[f64],
    velocity: &[f64],
) -> Result<Vec<f64>, AmbientError> {
    let values: Vec<f64> = field.iter().map(Jet::value).collect();
    let turn = contract(gamma, velocity, &values);
    field
        .iter()
        .zip(turn)
        .map(|(v, t)| {
            if v.order() < 1 {
                return Err(AmbientError::InsufficientJetOrder);
            }
            Ok(v.derivative_along(jet_direction)? + t)
        })
        .collect()
}

/// Maximum residuals over all validated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientReport {
    pub samples: usize,
    /// max |(F² − I)_ij|
    pub f_squared: f64,
    /// max |(FᵀgF − g)_ij|
    pub metric_compat: f64,
    /// max ‖(∇̄_X F)Y‖_g
    pub parallel: f64,
    /// max |(gF − (gF)ᵀ)_ij|
    pub self_adjoint: f64,
    pub min_pivot: f64,
    pub positive_definite: bool,
    /// F is ±I at every sample.
    pub structure_trivial: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl Default for AmbientReport {
    fn default() -> Self {
        Self {
            samples: 0,
            f_squared: 0.0,
            metric_compat: 0.0,
            parallel: 0.0,
            self_adjoint: 0.0,
            min_pivot: f64::INFINITY,
            positive_definite: false,
            structure_trivial: false,
            failures: Vec::new(),
            pass: false,
        }
    }
}
