//! Finite-difference derivatives, kept independent of the jet machinery so
//! they can cross-check it.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("at least one Richardson level is required")]
    NoLevels,
}

/// Central-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Number of step sizes combined by Richardson extrapolation; 1 means a
    /// plain central difference, 2 is `(4·D_h − D_2h)/3`.
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson_levels: 2,
        }
    }
}

impl FdConfig {
    pub fn new(step: f64, richardson_levels: usize) -> Result<Self, OracleError> {
        let cfg = Self {
            step,
            richardson_levels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(OracleError::InvalidStep(self.step));
        }
        if self.richardson_levels == 0 {
            return Err(OracleError::NoLevels);
        }
        Ok(())
    }
}

/// Error returned by the oracle: either a bad configuration or a failure
/// raised by the function under evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError<E> {
    #[error(transparent)]
    Config(#[from] OracleError),
    #[error("evaluation failed: {0}")]
    EvaluationFailure(E),
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// k-th derivative of a vector-valued function of one real variable.
///
/// Uses the central stencil `D(s) = (2s)^-k Σ_j (−1)^j C(k,j) f(t0 + (k − 2j)s)`
/// at steps `s, 2s, 4s, …` and Richardson-extrapolates in `s²`.
pub fn fd_nth_derivative_vec<E, F>(
    mut f: F,
    t0: f64,
    k: usize,
    cfg: &FdConfig,
) -> Result<Vec<f64>, FdError<E>>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    cfg.validate()?;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(cfg.richardson_levels);
    for level in 0..cfg.richardson_levels {
        let s = cfg.step * (1u64 << level) as f64;
        let mut acc: Option<Vec<f64>> = None;
        for j in 0..=k {
            let w = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(k, j);
            let t = t0 + (k as f64 - 2.0 * j as f64) * s;
            let y = f(t).map_err(FdError::EvaluationFailure)?;
            let acc = acc.get_or_insert_with(|| vec![0.0; y.len()]);
            for (a, v) in acc.iter_mut().zip(&y) {
                *a += w * v;
            }
        }
        let scale = (2.0 * s).powi(k as i32);
        table.push(
            acc.unwrap_or_default()
                .into_iter()
                .map(|a| a / scale)
                .collect(),
        );
    }
    // Column-wise Neville elimination of the s² error terms; table[0] uses the
    // smallest step.
    let mut current = table;
    let mut power = 4.0;
    while current.len() > 1 {
        current = current
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(fine, coarse)| (power * fine - coarse) / (power - 1.0))
                    .collect()
            })
            .collect();
        power *= 4.0;
    }
    Ok(current.pop().unwrap_or_default())
}

pub fn fd_nth_derivative<E, F>(
    mut f: F,
    t0: f64,
    k: usize,
    cfg: &FdConfig,
) -> Result<f64, FdError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let v = fd_nth_derivative_vec(|t| f(t).map(|y| vec![y]), t0, k, cfg)?;
    Ok(v[0])
}

/// First derivative; with the default config this is `(4·D_h − D_2h)/3`,
/// `D_s = (f(t0+s) − f(t0−s))/(2s)`.
pub fn fd_derivative<E, F>(f: F, t0: f64, cfg: &FdConfig) -> Result<f64, FdError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    fd_nth_derivative(f, t0, 1, cfg)
}

pub fn fd_derivative_vec<E, F>(f: F, t0: f64, cfg: &FdConfig) -> Result<Vec<f64>, FdError<E>>
where
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    fd_nth_derivative_vec(f, t0, 1, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(x: f64) -> Result<f64, Infallible> {
        Ok(x)
    }

    #[test]
    fn sine_at_zero() {
        let d = fd_derivative(|t| ok(t.sin()), 0.0, &FdConfig::default()).unwrap();
        assert!((d - 1.0).abs() < 1e-10, "{d}");
    }

    #[test]
    fn cube_at_two() {
        let d = fd_derivative(|t| ok(t * t * t), 2.0, &FdConfig::default()).unwrap();
        assert!((d - 12.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn one_level_richardson_formula() {
        let h = 1e-3;
        let f = |t: f64| t.exp();
        let d = |s: f64| (f(1.0 + s) - f(1.0 - s)) / (2.0 * s);
        let expected = (4.0 * d(h) - d(2.0 * h)) / 3.0;
        let got = fd_derivative(|t| ok(f(t)), 1.0, &FdConfig::new(h, 2).unwrap()).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn higher_orders() {
        let cfg = FdConfig::new(1e-2, 3).unwrap();
        let d2 = fd_nth_derivative(|t| ok(t.sin()), 0.4, 2, &cfg).unwrap();
        let d3 = fd_nth_derivative(|t| ok(t.sin()), 0.4, 3, &cfg).unwrap();
        assert!((d2 + 0.4f64.sin()).abs() < 1e-9, "{d2}");
        assert!((d3 + 0.4f64.cos()).abs() < 1e-8, "{d3}");
    }

    #[test]
    fn vector_valued() {
        let d = fd_derivative_vec(
            |t| Ok::<_, Infallible>(vec![t.cos(), t.sin()]),
            0.0,
            &FdConfig::default(),
        )
        .unwrap();
        assert!(d[0].abs() < 1e-10 && (d[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bad_config_and_failures() {
        assert_eq!(FdConfig::new(0.0, 2), Err(OracleError::InvalidStep(0.0)));
        assert_eq!(FdConfig::new(1e-3, 0), Err(OracleError::NoLevels));
        let r = fd_derivative(
            |t| if t > 0.0 { Err("boom") } else { Ok(t) },
            0.0,
            &FdConfig::default(),
        );
        assert_eq!(r, Err(FdError::EvaluationFailure("boom")));
    }
}
