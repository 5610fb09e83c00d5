//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `c_α = ∂^α f / α!` of a scalar
//! quantity for every multi-index `α` of total degree up to the order of its
//! [`JetSpace`]. Arithmetic on jets is exact up to that order, so any composed
//! expression yields its exact mixed partials without a step size.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("{func} is undefined at {value}")]
    DomainError { func: &'static str, value: f64 },
    #[error("seed direction {index} is outside a space of {nvars} variables")]
    InvalidDirection { index: usize, nvars: usize },
    #[error("exponent {0} is neither an integer nor a half-integer")]
    UnsupportedExponent(f64),
    #[error("operation needs jets of order {needed}, got {got}")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("jets live in different spaces ({0} vs {1})")]
    SpaceMismatch(JetSpace, JetSpace),
}

/// Number of seed directions and maximum total order carried by a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
}

impl fmt::Display for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} vars, order {}", self.nvars, self.order)
    }
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Self {
        Self { nvars, order }
    }

    /// Number of coefficients: C(nvars + order, order).
    pub fn len(&self) -> usize {
        self.layout().exps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn layout(&self) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<JetSpace, Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(*self)
            .or_insert_with(|| Arc::new(Layout::build(*self)))
            .clone()
    }

    /// A jet with value `c` and all derivatives zero.
    pub fn constant(&self, c: f64) -> Jet {
        let layout = self.layout();
        let mut coeffs = vec![0.0; layout.exps.len()];
        coeffs[0] = c;
        Jet { layout, coeffs }
    }

    /// The independent variable `value + s_direction`.
    pub fn variable(&self, value: f64, direction: usize) -> Result<Jet, JetError> {
        self.affine(value, &unit(self.nvars, direction)?)
    }

    /// The affine quantity `value + Σ_k slope_k s_k`.
    pub fn affine(&self, value: f64, slope: &[f64]) -> Result<Jet, JetError> {
        if slope.len() != self.nvars {
            return Err(JetError::InvalidDirection {
                index: slope.len(),
                nvars: self.nvars,
            });
        }
        let mut jet = self.constant(value);
        if self.order >= 1 {
            for (k, s) in slope.iter().enumerate() {
                jet.coeffs[1 + k] = *s;
            }
        }
        Ok(jet)
    }

    /// Jet from raw Taylor coefficients in this space's monomial order.
    pub fn from_coeffs(&self, coeffs: Vec<f64>) -> Jet {
        let layout = self.layout();
        assert_eq!(coeffs.len(), layout.exps.len(), "coefficient count");
        Jet { layout, coeffs }
    }

    /// Exponent vectors of every monomial, in storage order.
    pub fn monomials(&self) -> Vec<Vec<u8>> {
        self.layout().exps.clone()
    }
}

fn unit(nvars: usize, direction: usize) -> Result<Vec<f64>, JetError> {
    if direction >= nvars {
        return Err(JetError::InvalidDirection {
            index: direction,
            nvars,
        });
    }
    let mut v = vec![0.0; nvars];
    v[direction] = 1.0;
    Ok(v)
}

#[derive(Debug)]
struct Layout {
    space: JetSpace,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)` with `exps[i] + exps[j] == exps[k]`.
    products: Vec<(u32, u32, u32)>,
    /// First storage index of each total degree, plus a final sentinel.
    degree_start: Vec<usize>,
}

impl Layout {
    fn build(space: JetSpace) -> Self {
        let mut exps = Vec::new();
        let mut degree_start = Vec::new();
        for degree in 0..=space.order {
            degree_start.push(exps.len());
            let mut current = vec![0u8; space.nvars];
            push_degree(&mut exps, &mut current, 0, degree);
        }
        degree_start.push(exps.len());
        let index: HashMap<Vec<u8>, usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let da: usize = a.iter().map(|&x| x as usize).sum();
            for (j, b) in exps.iter().enumerate() {
                let db: usize = b.iter().map(|&x| x as usize).sum();
                if da + db > space.order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        Self {
            space,
            exps,
            index,
            products,
            degree_start,
        }
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, var: usize, remaining: usize) {
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var == current.len() - 1 {
        current[var] = remaining as u8;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn multi_factorial(exps: &[u8]) -> f64 {
    exps.iter().map(|&e| factorial(e as usize)).product()
}

/// Binary operations accepted by [`Jet::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Elementary functions accepted by [`Jet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElemFn {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Neg,
    /// Integer or half-integer power.
    Pow(f64),
}

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("space", &self.layout.space)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space() == other.space() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn space(&self) -> JetSpace {
        self.layout.space
    }

    pub fn order(&self) -> usize {
        self.layout.space.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficients in storage order (see [`JetSpace::monomials`]).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.layout.index.get(exps).map_or(0.0, |&i| self.coeffs[i])
    }

    /// Mixed partial derivative; `vars` lists the differentiation variables,
    /// so `[0, 0, 1]` is `∂³/∂s0²∂s1`.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut exps = vec![0u8; self.layout.space.nvars];
        for &v in vars {
            if v >= exps.len() {
                return 0.0;
            }
            exps[v] += 1;
        }
        self.coeff(&exps) * multi_factorial(&exps)
    }

    /// k-th derivative of `t ↦ f(s0 + t·dir)` at `t = 0`.
    pub fn directional(&self, dir: &[f64], k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        let start = self.layout.degree_start[k];
        let end = self.layout.degree_start[k + 1];
        let mut sum = 0.0;
        for idx in start..end {
            let weight: f64 = self.layout.exps[idx]
                .iter()
                .zip(dir)
                .map(|(&e, &d)| d.powi(e as i32))
                .product();
            sum += self.coeffs[idx] * weight;
        }
        sum * factorial(k)
    }

    /// First directional derivative `Σ_k dir_k ∂f/∂s_k`.
    pub fn derivative_along(&self, dir: &[f64]) -> Result<f64, JetError> {
        if self.order() < 1 {
            return Err(JetError::InsufficientOrder { needed: 1, got: 0 });
        }
        Ok(dir
            .iter()
            .enumerate()
            .map(|(k, d)| d * self.coeffs[1 + k])
            .sum())
    }

    /// Exact partial derivative as a jet of one lower order.
    pub fn derivative(&self, var: usize) -> Result<Jet, JetError> {
        let space = self.space();
        if space.order == 0 {
            return Err(JetError::InsufficientOrder { needed: 1, got: 0 });
        }
        if var >= space.nvars {
            return Err(JetError::InvalidDirection {
                index: var,
                nvars: space.nvars,
            });
        }
        let target = JetSpace::new(space.nvars, space.order - 1).layout();
        let mut coeffs = vec![0.0; target.exps.len()];
        for (idx, e) in self.layout.exps.iter().enumerate() {
            if e[var] == 0 {
                continue;
            }
            let mut lowered = e.clone();
            lowered[var] -= 1;
            if let Some(&t) = target.index.get(&lowered) {
                coeffs[t] += e[var] as f64 * self.coeffs[idx];
            }
        }
        Ok(Jet {
            layout: target,
            coeffs,
        })
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        let target = JetSpace::new(self.space().nvars, order).layout();
        let coeffs = self.coeffs[..target.exps.len()].to_vec();
        Jet {
            layout: target,
            coeffs,
        }
    }

    /// Sets every variable not in `keep` to zero; the result lives in a space
    /// whose variables are `keep` in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Jet {
        let target = JetSpace::new(keep.len(), self.order()).layout();
        let mut coeffs = vec![0.0; target.exps.len()];
        'outer: for (idx, e) in self.layout.exps.iter().enumerate() {
            let mut reduced = vec![0u8; keep.len()];
            let mut kept_degree = 0;
            for (slot, &k) in keep.iter().enumerate() {
                reduced[slot] = e[k];
                kept_degree += e[k] as usize;
            }
            let total: usize = e.iter().map(|&x| x as usize).sum();
            if total != kept_degree {
                continue 'outer;
            }
            coeffs[target.index[&reduced]] += self.coeffs[idx];
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    fn check_space(&self, other: &Jet) -> Result<(), JetError> {
        if self.space() != other.space() {
            return Err(JetError::SpaceMismatch(self.space(), other.space()));
        }
        Ok(())
    }

    pub fn arith(&self, other: &Jet, op: ArithOp) -> Result<Jet, JetError> {
        self.check_space(other)?;
        Ok(match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
            ArithOp::Div => self.checked_div(other)?,
        })
    }

    pub fn apply(&self, func: ElemFn) -> Result<Jet, JetError> {
        match func {
            ElemFn::Sin => Ok(self.sin()),
            ElemFn::Cos => Ok(self.cos()),
            ElemFn::Exp => Ok(self.exp()),
            ElemFn::Sqrt => self.sqrt(),
            ElemFn::Neg => Ok(-self),
            ElemFn::Pow(p) => self.pow(p),
        }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += k;
        out
    }

    /// `Σ_k taylor[k]·δ^k` with `δ = self − value`, i.e. `f(self)` where
    /// `taylor[k] = f^(k)(value)/k!`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let order = self.order();
        let mut acc = self.layout_constant(taylor[order]);
        for k in (0..order).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    fn layout_constant(&self, c: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    fn taylor_from_derivs(&self, derivs: impl Fn(usize) -> f64) -> Jet {
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| derivs(k) / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.taylor_from_derivs(|k| match k % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        })
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.taylor_from_derivs(|k| match k % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        })
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.taylor_from_derivs(|_| e)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::DomainError {
                func: "sqrt",
                value: self.value(),
            });
        }
        self.pow(0.5)
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        if self.value() == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        self.pow(-1.0)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_space(other)?;
        let mut q = self * &other.recip()?;
        q.coeffs[0] = self.value() / other.value();
        Ok(q)
    }

    /// Integer or half-integer power.
    pub fn pow(&self, p: f64) -> Result<Jet, JetError> {
        let a0 = self.value();
        let taylor = pow_taylor(a0, p, self.order())?;
        Ok(self.compose(&taylor))
    }
}

/// Taylor coefficients `binom(p, k)·a0^(p−k)` of `x ↦ x^p` at `a0`.
pub(crate) fn pow_taylor(a0: f64, p: f64, order: usize) -> Result<Vec<f64>, JetError> {
    let twice = 2.0 * p;
    if !p.is_finite() || twice.fract() != 0.0 {
        return Err(JetError::UnsupportedExponent(p));
    }
    let integer = p.fract() == 0.0;
    if integer {
        if p < 0.0 && a0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
    } else if a0 <= 0.0 {
        return Err(JetError::DomainError {
            func: "pow",
            value: a0,
        });
    }
    let mut taylor = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        if k > 0 {
            binom *= (p - (k as f64 - 1.0)) / k as f64;
        }
        if binom == 0.0 {
            taylor.push(0.0);
            continue;
        }
        let e = p - k as f64;
        let power = if integer {
            a0.powi(e as i32)
        } else {
            a0.powi((e - 0.5) as i32) * a0.sqrt()
        };
        taylor.push(binom * power);
    }
    Ok(taylor)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        assert_eq!(self.space(), rhs.space(), "jet space mismatch");
        Jet {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        assert_eq!(self.space(), rhs.space(), "jet space mismatch");
        Jet {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_eq!(self.space(), rhs.space(), "jet space mismatch");
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        assert_eq!(self.space(), rhs.space(), "jet space mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        assert_eq!(self.space(), rhs.space(), "jet space mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn monomial_count() {
        assert_eq!(JetSpace::new(1, 2).len(), 3);
        assert_eq!(JetSpace::new(3, 3).len(), 20);
        assert_eq!(JetSpace::new(6, 3).len(), 84);
        assert_eq!(JetSpace::new(0, 3).len(), 1);
    }

    #[test]
    fn lift_constant_has_no_derivatives() {
        let c = JetSpace::new(1, 2).constant(5.0);
        assert_eq!(c.coeffs(), &[5.0, 0.0, 0.0]);
        let z = JetSpace::new(2, 3).constant(0.0);
        assert!(z.coeffs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_is_multiplicative_identity() {
        let space = JetSpace::new(2, 1);
        let j = space.affine(0.4, &[1.5, -2.0]).unwrap();
        assert_eq!(&space.constant(1.0) * &j, j);
    }

    #[test]
    fn sine_series() {
        let t = JetSpace::new(1, 3).variable(0.0, 0).unwrap();
        let s = t.sin();
        assert_abs_diff_eq!(s.coeff(&[0]), 0.0);
        assert_abs_diff_eq!(s.coeff(&[1]), 1.0);
        assert_abs_diff_eq!(s.coeff(&[2]), 0.0);
        assert_abs_diff_eq!(s.coeff(&[3]), -1.0 / 6.0, epsilon = 1e-16);
    }

    #[test]
    fn square_and_reciprocal() {
        let x = JetSpace::new(1, 1).variable(2.0, 0).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeffs(), &[4.0, 4.0]);

        let x = JetSpace::new(1, 2).variable(1.0, 0).unwrap();
        let r = x.recip().unwrap();
        assert_abs_diff_eq!(r.coeff(&[0]), 1.0);
        assert_abs_diff_eq!(r.coeff(&[1]), -1.0);
        assert_abs_diff_eq!(r.coeff(&[2]), 1.0);
    }

    #[test]
    fn pythagorean_identity() {
        let j = JetSpace::new(1, 3).variable(0.7, 0).unwrap();
        let one = &(&j.sin() * &j.sin()) + &(&j.cos() * &j.cos());
        assert_abs_diff_eq!(one.value(), 1.0, epsilon = 1e-14);
        for c in &one.coeffs()[1..] {
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bilinear_mixed_partial() {
        let space = JetSpace::new(2, 2);
        let u1 = space.variable(2.0, 0).unwrap();
        let u2 = space.variable(3.0, 1).unwrap();
        let p = &u1 * &u2;
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.partial(&[0]), 3.0);
        assert_eq!(p.partial(&[1]), 2.0);
        assert_eq!(p.partial(&[0, 1]), 1.0);
        assert_eq!(p.partial(&[0, 0]), 0.0);
    }

    #[test]
    fn errors() {
        let space = JetSpace::new(1, 2);
        assert!(matches!(
            space.variable(1.0, 1),
            Err(JetError::InvalidDirection { index: 1, nvars: 1 })
        ));
        let zero = space.variable(0.0, 0).unwrap();
        assert_eq!(zero.recip(), Err(JetError::DivisionByZero));
        assert!(matches!(zero.sqrt(), Err(JetError::DomainError { .. })));
        assert!(matches!(
            space.constant(-1.0).sqrt(),
            Err(JetError::DomainError { .. })
        ));
        assert!(matches!(
            zero.pow(1.0 / 3.0),
            Err(JetError::UnsupportedExponent(_))
        ));
        let other = JetSpace::new(2, 2).constant(1.0);
        assert!(matches!(
            zero.arith(&other, ArithOp::Add),
            Err(JetError::SpaceMismatch(..))
        ));
    }

    #[test]
    fn integer_power_at_zero() {
        let x = JetSpace::new(1, 3).variable(0.0, 0).unwrap();
        let cube = x.pow(3.0).unwrap();
        assert_eq!(cube.coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(x.pow(-2.0), Err(JetError::DivisionByZero));
    }

    #[test]
    fn half_integer_power() {
        let x = JetSpace::new(1, 2).variable(4.0, 0).unwrap();
        let p = x.pow(1.5).unwrap();
        assert_abs_diff_eq!(p.value(), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.partial(&[0]), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.partial(&[0, 0]), 0.375, epsilon = 1e-14);
    }

    #[test]
    fn derivative_restrict_truncate() {
        let space = JetSpace::new(2, 3);
        let a = space.variable(0.5, 0).unwrap();
        let b = space.variable(-0.25, 1).unwrap();
        let f = &(&a * &a) * &b;
        let df = f.derivative(0).unwrap();
        assert_eq!(df.order(), 2);
        assert_abs_diff_eq!(df.value(), 2.0 * 0.5 * -0.25);
        assert_abs_diff_eq!(df.partial(&[0, 1]), 2.0);

        let r = f.restrict(&[1]);
        assert_eq!(r.space(), JetSpace::new(1, 3));
        assert_abs_diff_eq!(r.partial(&[0]), 0.25);

        let t = f.truncate(1);
        assert_eq!(t.coeffs().len(), 3);
        assert!(JetSpace::new(1, 0).constant(1.0).derivative(0).is_err());
    }

    #[test]
    fn directional_matches_univariate() {
        let space = JetSpace::new(2, 3);
        let a = space.variable(0.3, 0).unwrap();
        let b = space.variable(0.8, 1).unwrap();
        let f = (&a * &b).sin();
        let dir = [0.6, -1.1];
        let line = JetSpace::new(1, 3);
        let la = line.affine(0.3, &[0.6]).unwrap();
        let lb = line.affine(0.8, &[-1.1]).unwrap();
        let g = (&la * &lb).sin();
        for k in 0..=3 {
            assert_abs_diff_eq!(
                f.directional(&dir, k),
                g.partial(&vec![0; k]),
                epsilon = 1e-13
            );
        }
    }
}
