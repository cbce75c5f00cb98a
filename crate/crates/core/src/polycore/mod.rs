//! Dense univariate polynomials and simultaneous root finding.

mod aberth;
pub mod mpfloat;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use aberth::{aberth, horner, Cx, WorkReal};
use mpfloat::MpFloat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("root iteration did not converge after {iterations} iterations (worst relative residual {worst_residual:e})")]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
    },
    #[error("polynomial has degree zero; it has no roots")]
    DegreeZero,
    #[error("invalid root configuration: {0}")]
    InvalidConfig(String),
}

/// Dense polynomial with complex coefficients, `coeffs[k]` multiplying `x^k`.
///
/// Trailing zero coefficients are dropped on construction, so the last stored
/// coefficient is the leading one. The zero polynomial stores nothing.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs
            .last()
            .is_some_and(|c| *c == Complex64::new(0.0, 0.0))
        {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Real parts of the coefficients, if every imaginary part is zero.
    pub fn real_coeffs(&self) -> Option<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|c| (c.im == 0.0).then_some(c.re))
            .collect()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        poly_eval(self, x)
    }

    pub fn derivative(&self) -> Self {
        poly_derivative(self)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

pub fn poly_eval(p: &Polynomial, x: Complex64) -> Complex64 {
    p.coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

pub fn poly_derivative(p: &Polynomial) -> Polynomial {
    Polynomial::new(
        p.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    pub max_iterations: usize,
    /// Relative residual bound checked on every returned root.
    pub tolerance: f64,
    /// Significand width of the float used during iteration; 53 runs in `f64`.
    pub precision_bits: u32,
    /// Roots with `|Im r| <= real_axis_tol * (1 + |Re r|)` count as real.
    pub real_axis_tol: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-12,
            precision_bits: 53,
            real_axis_tol: 1e-8,
        }
    }
}

impl RootConfig {
    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits;
        self
    }

    fn validate(&self) -> Result<(), PolyError> {
        if !(self.tolerance > 0.0) {
            return Err(PolyError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.precision_bits < 53 {
            return Err(PolyError::InvalidConfig(format!(
                "precision_bits must be at least 53, got {}",
                self.precision_bits
            )));
        }
        Ok(())
    }
}

/// All roots of `p`, with multiplicity, sorted by real then imaginary part.
pub fn poly_roots(p: &Polynomial, cfg: &RootConfig) -> Result<Vec<Complex64>, PolyError> {
    cfg.validate()?;
    let deg = p.degree().ok_or(PolyError::DegreeZero)?;
    if deg == 0 {
        return Err(PolyError::DegreeZero);
    }
    // power-of-two normalization keeps the coefficients exact
    let shift = -p.max_abs_coeff().log2().floor() as i32;
    let scale = 2f64.powi(shift);
    if cfg.precision_bits == 53 {
        let coeffs: Vec<Cx<f64>> = p
            .coeffs
            .iter()
            .map(|c| Cx::new(c.re * scale, c.im * scale))
            .collect();
        solve(coeffs, cfg)
    } else {
        let prec = cfg.precision_bits;
        let coeffs: Vec<Cx<MpFloat>> = p
            .coeffs
            .iter()
            .map(|c| {
                Cx::new(
                    MpFloat::from_f64(c.re, prec).mul_pow2(shift as i64),
                    MpFloat::from_f64(c.im, prec).mul_pow2(shift as i64),
                )
            })
            .collect();
        solve(coeffs, cfg)
    }
}

/// Roots of a polynomial with exact rational coefficients (ascending).
///
/// Coefficients are rounded once, at `cfg.precision_bits`, so high-degree
/// inputs keep their conditioning.
pub fn poly_roots_rational(
    coeffs: &[BigRational],
    cfg: &RootConfig,
) -> Result<Vec<Complex64>, PolyError> {
    cfg.validate()?;
    let mut coeffs = coeffs.to_vec();
    while coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    if coeffs.len() < 2 {
        return Err(PolyError::DegreeZero);
    }
    let prec = cfg.precision_bits.max(53);
    let mp: Vec<MpFloat> = coeffs
        .iter()
        .map(|q| MpFloat::from_rational(q, prec))
        .collect();
    let top = mp
        .iter()
        .map(MpFloat::log2_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = -top.floor() as i64;
    let zero = MpFloat::zero(prec);
    let cx: Vec<Cx<MpFloat>> = mp
        .iter()
        .map(|c| Cx::new(c.mul_pow2(shift), zero.clone()))
        .collect();
    solve(cx, cfg)
}

fn solve<R: WorkReal>(
    mut coeffs: Vec<Cx<R>>,
    cfg: &RootConfig,
) -> Result<Vec<Complex64>, PolyError> {
    // exact zero roots come off the bottom first
    let zero_roots = coeffs.iter().take_while(|c| c.is_zero()).count();
    coeffs.drain(..zero_roots);
    let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
    if coeffs.len() > 1 {
        let outcome = aberth(&coeffs, cfg.precision_bits, cfg.max_iterations);
        let iterations = outcome.iterations;
        let log2_tol = cfg.tolerance.log2();
        let log2_max = coeffs
            .iter()
            .map(Cx::log2_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        let deg = (coeffs.len() - 1) as f64;
        let mut worst = f64::NEG_INFINITY;
        for z in &outcome.roots {
            let allowed = log2_tol + log2_max + deg * z.log2_abs().max(0.0);
            let got = horner(&coeffs, z).log2_abs();
            worst = worst.max(got - allowed);
            roots.push(Complex64::new(z.re.to_f64(), z.im.to_f64()));
        }
        if worst > 0.0 {
            return Err(PolyError::NonConvergence {
                iterations,
                worst_residual: (worst + log2_tol).exp2(),
            });
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Real members of `roots` (imaginary part dropped), ascending.
pub fn real_zeros(roots: &[Complex64], cfg: &RootConfig) -> Vec<f64> {
    let mut out: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() <= cfg.real_axis_tol * (1.0 + r.re.abs()))
        .map(|r| r.re)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}
