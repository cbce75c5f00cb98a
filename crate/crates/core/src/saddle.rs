//! Steepest-descent (Plancherel–Rotach) analysis of the zeros of `H_n` for a
//! 1-D map.
//!
//! With `s = y/n`, the exponent of the Cauchy integral for `H_{n-1}` is
//! `γ(a) = s f(a) - ln a`. Its critical points solve `s a f'(a) - 1 = 0`; a
//! non-real saddle `a_c` gives the asymptotic zero density
//! `q(s) = |Im f(a_c)| / π`, and the invariant density is `p(x) = -x q'(x)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bellgen::MapSpec1D;
use crate::polycore::{poly_roots, PolyError, Polynomial, RootConfig};

/// Critical points with `|Im a|` at or below this are treated as real.
pub const REAL_SADDLE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaddleError {
    #[error("s must be finite and positive, got {0}")]
    InvalidS(f64),
    #[error("x = {x} is within {margin:e} of the support ({lo}, {hi})")]
    EndpointProximity {
        x: f64,
        lo: f64,
        hi: f64,
        margin: f64,
    },
    #[error("s = {s} outside (0, {upper}]")]
    DomainError { s: f64, upper: f64 },
    #[error(transparent)]
    Roots(#[from] PolyError),
}

/// `γ(a) = s f(a) - ln a`, kept as the pre-multiplied coefficients `s·f_k`
/// so problems produced by other reductions reuse the exact same arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleProblem {
    scaled: Vec<f64>,
    s: f64,
}

impl SaddleProblem {
    pub fn new(f: &MapSpec1D, s: f64) -> Result<Self, SaddleError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(SaddleError::InvalidS(s));
        }
        Ok(Self {
            scaled: f.coeffs().iter().map(|c| s * c).collect(),
            s,
        })
    }

    /// `γ(a) = sum scaled[k] a^k - ln a` where `scaled[k] = s·f_k`.
    pub fn from_scaled(scaled: Vec<f64>, s: f64) -> Result<Self, SaddleError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(SaddleError::InvalidS(s));
        }
        Ok(Self { scaled, s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn scaled_coeffs(&self) -> &[f64] {
        &self.scaled
    }

    /// `s f(a)`.
    fn scaled_f(&self, a: Complex64) -> Complex64 {
        self.scaled
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * a + c)
    }

    /// `γ(a)` on the principal branch of the logarithm.
    pub fn gamma(&self, a: Complex64) -> Complex64 {
        self.scaled_f(a) - a.ln()
    }

    /// `s a f'(a) - 1` as a polynomial in `a`.
    pub fn critical_polynomial(&self) -> Polynomial {
        let mut coeffs: Vec<f64> = self
            .scaled
            .iter()
            .enumerate()
            .map(|(k, c)| k as f64 * c)
            .collect();
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        coeffs[0] -= 1.0;
        Polynomial::from_real(&coeffs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub a: Complex64,
    /// `|s a f'(a) - 1|`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleResult {
    pub critical_points: Vec<CriticalPoint>,
    /// Index into `critical_points` of the chosen saddle.
    pub selected: Option<usize>,
    /// `Re γ` at the selected point.
    pub gamma_real: Option<f64>,
    pub q_value: f64,
}

pub fn critical_points(prob: &SaddleProblem) -> Result<Vec<CriticalPoint>, SaddleError> {
    critical_points_with(prob, &RootConfig::default())
}

pub fn critical_points_with(
    prob: &SaddleProblem,
    cfg: &RootConfig,
) -> Result<Vec<CriticalPoint>, SaddleError> {
    let poly = prob.critical_polynomial();
    let roots = match poly.degree() {
        // s a f'(a) = 1 has no solution
        None | Some(0) => Vec::new(),
        Some(1) => vec![-poly.coeff(0) / poly.coeff(1)],
        Some(2) => quadratic_roots(poly.coeff(0).re, poly.coeff(1).re, poly.coeff(2).re),
        Some(_) => poly_roots(&poly, cfg)?,
    };
    Ok(roots
        .into_iter()
        .map(|a| CriticalPoint {
            a,
            residual: poly.eval(a).norm(),
        })
        .collect())
}

/// Roots of `c0 + c1 a + c2 a²` in closed form, so a double root at the
/// edge of the support stays exactly real.
fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<Complex64> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if c1 >= 0.0 {
            -(c1 + r) / 2.0
        } else {
            (r - c1) / 2.0
        };
        if big == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        let mut roots = vec![Complex64::new(big / c2, 0.0), Complex64::new(c0 / big, 0.0)];
        roots.sort_by(|a, b| a.re.total_cmp(&b.re));
        roots
    } else {
        let re = -c1 / (2.0 * c2);
        let im = ((-disc).sqrt() / (2.0 * c2)).abs();
        vec![Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

/// Critical points, saddle selection and density in one pass.
///
/// Among critical points off the real axis the one with the largest `Re γ`
/// is selected; conjugate points tie and the one with positive imaginary part
/// wins. With no such point the density is zero.
pub fn analyze(prob: &SaddleProblem) -> Result<SaddleResult, SaddleError> {
    analyze_with(prob, &RootConfig::default())
}

pub fn analyze_with(prob: &SaddleProblem, cfg: &RootConfig) -> Result<SaddleResult, SaddleError> {
    let critical_points = critical_points_with(prob, cfg)?;
    let mut selected: Option<(usize, f64)> = None;
    for (k, cp) in critical_points.iter().enumerate() {
        if cp.a.im.abs() <= REAL_SADDLE_TOL {
            continue;
        }
        let re = prob.gamma(cp.a).re;
        let better = match selected {
            None => true,
            Some((j, best)) => re > best || (re == best && cp.a.im > critical_points[j].a.im),
        };
        if better {
            selected = Some((k, re));
        }
    }
    let q_value = match selected {
        Some((k, _)) => {
            prob.scaled_f(critical_points[k].a).im.abs() / (prob.s * std::f64::consts::PI)
        }
        None => 0.0,
    };
    Ok(SaddleResult {
        critical_points,
        selected: selected.map(|(k, _)| k),
        gamma_real: selected.map(|(_, re)| re),
        q_value,
    })
}

/// Asymptotic density of the real zeros of `H_n` in the scaled variable `s`.
pub fn zero_density_q(prob: &SaddleProblem) -> Result<f64, SaddleError> {
    Ok(analyze(prob)?.q_value)
}

pub fn zero_density_q_with(prob: &SaddleProblem, cfg: &RootConfig) -> Result<f64, SaddleError> {
    Ok(analyze_with(prob, cfg)?.q_value)
}

/// `(λ/2π) sqrt(1/s - λ²/4)` on `(0, 4/λ²)`, zero elsewhere.
pub fn logistic_closed_q(lambda: f64, s: f64) -> f64 {
    let upper = 4.0 / (lambda * lambda);
    if !(s > 0.0 && s < upper) {
        return 0.0;
    }
    lambda.abs() / (2.0 * std::f64::consts::PI) * (1.0 / s - lambda * lambda / 4.0).sqrt()
}

/// `λ / (2π sqrt(4s - s²λ²))`, the raw closed form of `-s q'(s)`.
///
/// It integrates to 1/2 over `(0, 4/λ²)`; see [`logistic_closed_p_normalized`].
pub fn logistic_closed_p(lambda: f64, s: f64) -> f64 {
    let upper = 4.0 / (lambda * lambda);
    if !(s > 0.0 && s < upper) {
        return 0.0;
    }
    lambda.abs() / (2.0 * std::f64::consts::PI * (4.0 * s - s * s * lambda * lambda).sqrt())
}

/// Unit-mass variant: the arcsine density on `(0, 4/λ²)`.
pub fn logistic_closed_p_normalized(lambda: f64, s: f64) -> f64 {
    2.0 * logistic_closed_p(lambda, s)
}

/// `-x q'(x)` by a 5-point central stencil with step `1e-5 ×` support width.
///
/// `x` must sit at least `1e-3 ×` width inside `(lo, hi)`: `q` has square-root
/// singularities at the endpoints.
pub fn invariant_density_p(
    q: impl Fn(f64) -> f64,
    support: (f64, f64),
    x: f64,
) -> Result<f64, SaddleError> {
    let (lo, hi) = support;
    let width = hi - lo;
    let margin = 1e-3 * width;
    if !(x - lo >= margin && hi - x >= margin) {
        return Err(SaddleError::EndpointProximity { x, lo, hi, margin });
    }
    let h = 1e-5 * width;
    let d = (q(x - 2.0 * h) - 8.0 * q(x - h) + 8.0 * q(x + h) - q(x + 2.0 * h)) / (12.0 * h);
    Ok(-x * d)
}

/// `t = λ sqrt(s)/2` and `w = q(s) |ds/dt| = (2/π) sqrt(1 - t²)`.
pub fn wigner_change_of_variables(lambda: f64, s: f64) -> Result<(f64, f64), SaddleError> {
    let upper = 4.0 / (lambda * lambda);
    if !(s > 0.0 && s <= upper) {
        return Err(SaddleError::DomainError { s, upper });
    }
    let t = (lambda.abs() * s.sqrt() / 2.0).min(1.0);
    let w = 2.0 / std::f64::consts::PI * (1.0 - t * t).max(0.0).sqrt();
    Ok((t, w))
}
