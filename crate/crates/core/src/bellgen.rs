//! Bell polynomials `H_n(y, a)` of a 1-D polynomial map and the resolving gaps
//! `e^n(y) = y^n - H_n(y, 0)`.
//!
//! `H_n` is defined by `d^n/da^n exp(y f(a)) = H_n(y, a) exp(y f(a))`, which
//! gives the recurrence `H_{n+1} = dH_n/da + y f'(a) H_n` from `H_0 = 1`.
//! Coefficients grow factorially, so two regimes are kept: exact rationals up
//! to [`EXACT_LIMIT`] and power-of-two scaled floats beyond.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polycore::{poly_roots_rational, PolyError, Polynomial, RootConfig};

/// Largest order generated with exact arithmetic by [`bell_sequence`].
pub const EXACT_LIMIT: usize = 160;

/// `|1 - λ^m|` below this counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error(
        "coefficient of H_{order} exceeds the f64 range; lower n or use the exact/scaled forms"
    )]
    Overflow { order: usize },
    #[error("resonance at order {order}: |1 - λ^{order}| = {gap:e}")]
    ResonanceDetected { order: usize, gap: f64 },
    #[error("order must be at least {min}, got {got}")]
    Order { min: usize, got: usize },
    #[error("b_n must be a nonzero finite number, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Roots(#[from] PolyError),
}

/// `f(a) = sum coeffs[k] a^k` with a fixed point at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct MapSpec1D {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    coeffs: Vec<f64>,
}

impl TryFrom<RawMap> for MapSpec1D {
    type Error = BellError;
    fn try_from(raw: RawMap) -> Result<Self, BellError> {
        MapSpec1D::new(raw.coeffs)
    }
}

impl From<MapSpec1D> for RawMap {
    fn from(m: MapSpec1D) -> Self {
        RawMap { coeffs: m.coeffs }
    }
}

impl MapSpec1D {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self, BellError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(BellError::InvalidMap("coefficients must be finite".into()));
        }
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        match coeffs.first() {
            None => return Err(BellError::InvalidMap("no coefficients".into())),
            Some(&c0) if c0 != 0.0 => {
                return Err(BellError::InvalidMap(format!(
                    "coeffs[0] must be 0 (fixed point at the origin), got {c0}"
                )))
            }
            _ => {}
        }
        if coeffs.len() < 2 {
            return Err(BellError::InvalidMap("degree must be at least 1".into()));
        }
        Ok(Self { coeffs })
    }

    /// `f(a) = λa - a²/2`.
    pub fn logistic(lambda: f64) -> Self {
        Self::new(vec![0.0, lambda, -0.5]).expect("valid logistic map")
    }

    /// `f(a) = λa + a²/2`.
    pub fn positive_quadratic(lambda: f64) -> Self {
        Self::new(vec![0.0, lambda, 0.5]).expect("valid quadratic map")
    }

    /// `f(a) = λa - a^m/m`.
    pub fn m_hermitian(lambda: f64, m: usize) -> Self {
        assert!(m >= 2, "m-Hermitian maps need m >= 2");
        let mut coeffs = vec![0.0; m + 1];
        coeffs[1] = lambda;
        coeffs[m] = -1.0 / m as f64;
        Self::new(coeffs).expect("valid m-Hermitian map")
    }

    pub fn identity() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Multiplier at the fixed point, `f'(0)`.
    pub fn lambda(&self) -> f64 {
        self.coeffs[1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, a: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * a + c)
    }

    /// Coefficients of `f'`.
    pub fn derivative_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect()
    }

    pub fn as_polynomial(&self) -> Polynomial {
        Polynomial::from_real(&self.coeffs)
    }
}

/// Dense `sum coeffs[i][j] y^i a^j`, stored scaled: the value is
/// `2^log2_scale` times the stored coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariatePolynomial {
    coeffs: Vec<Vec<f64>>,
    log2_scale: i64,
}

impl BivariatePolynomial {
    /// `H_0 = 1`.
    pub fn one() -> Self {
        Self {
            coeffs: vec![vec![1.0]],
            log2_scale: 0,
        }
    }

    pub fn from_coeffs(coeffs: Vec<Vec<f64>>) -> Self {
        Self {
            coeffs,
            log2_scale: 0,
        }
        .renormalized()
    }

    /// Stored coefficients; multiply by `2^log2_scale()` for the values.
    pub fn scaled_coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn log2_scale(&self) -> i64 {
        self.log2_scale
    }

    /// Unscaled coefficient of `y^i a^j`; may overflow to infinity.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        let c = self
            .coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0.0);
        crate::polycore::mpfloat::ldexp(c, self.log2_scale)
    }

    pub fn degree_y(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn degree_a(&self) -> usize {
        self.coeffs
            .iter()
            .map(|r| r.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, y: f64, a: f64) -> f64 {
        let v = self.coeffs.iter().rev().fold(0.0, |acc, row| {
            acc * y + row.iter().rev().fold(0.0, |r, c| r * a + c)
        });
        crate::polycore::mpfloat::ldexp(v, self.log2_scale)
    }

    /// `H(y, 0)` as a polynomial in `y`; `None` when a value overflows.
    pub fn at_origin(&self) -> Option<Polynomial> {
        let coeffs: Vec<f64> = (0..self.coeffs.len()).map(|i| self.coeff(i, 0)).collect();
        coeffs
            .iter()
            .all(|c| c.is_finite())
            .then(|| Polynomial::from_real(&coeffs))
    }

    fn renormalized(mut self) -> Self {
        let max = self
            .coeffs
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if max > 0.0 && max.is_finite() {
            let shift = max.log2().floor() as i64;
            if shift != 0 {
                let factor = 2f64.powi(-shift as i32);
                self.coeffs.iter_mut().flatten().for_each(|c| *c *= factor);
                self.log2_scale += shift;
            }
        }
        self
    }

    fn truncate_a(&mut self, max_deg_a: usize) {
        for row in &mut self.coeffs {
            row.truncate(max_deg_a + 1);
        }
    }
}

/// One step of the recurrence: `H_{n+1} = dH_n/da + y f'(a) H_n`.
pub fn bell_next(h: &BivariatePolynomial, f: &MapSpec1D) -> BivariatePolynomial {
    let fp = f.derivative_coeffs();
    let deg_a = h.degree_a();
    let rows = h.coeffs.len() + 1;
    let cols = deg_a + fp.len();
    let mut out = vec![vec![0.0; cols]; rows];
    for (i, row) in h.coeffs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if j > 0 {
                out[i][j - 1] += j as f64 * c;
            }
            for (k, &d) in fp.iter().enumerate() {
                out[i + 1][j + k] += c * d;
            }
        }
    }
    for row in &mut out {
        while row.len() > 1 && row.last() == Some(&0.0) {
            row.pop();
        }
    }
    BivariatePolynomial {
        coeffs: out,
        log2_scale: h.log2_scale,
    }
    .renormalized()
}

/// Exact polynomial in `y` with rational coefficients (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPolynomial {
    pub coeffs: Vec<BigRational>,
}

impl ExactPolynomial {
    pub fn eval(&self, y: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * y + c)
    }

    pub fn to_f64(&self) -> Option<Polynomial> {
        let coeffs: Option<Vec<f64>> = self
            .coeffs
            .iter()
            .map(|c| c.to_f64().filter(|v| v.is_finite()))
            .collect();
        coeffs.map(|c| Polynomial::from_real(&c))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// Roots with coefficients rounded once at `cfg.precision_bits`.
    pub fn roots(&self, cfg: &RootConfig) -> Result<Vec<Complex64>, PolyError> {
        poly_roots_rational(&self.coeffs, cfg)
    }
}

/// Exact chain of `D^n H_n(y, a)` with integer entries, `D` the common
/// denominator of `f'`.
struct ExactChain {
    num: Vec<Vec<BigInt>>,
    fp_num: Vec<BigInt>,
    denom: BigInt,
    order: usize,
}

impl ExactChain {
    fn new(f: &MapSpec1D) -> Self {
        let fp: Vec<BigRational> = f
            .derivative_coeffs()
            .iter()
            .map(|&c| BigRational::from_float(c).expect("finite coefficient"))
            .collect();
        let denom = fp.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let fp_num = fp
            .iter()
            .map(|c| (c * BigRational::from_integer(denom.clone())).to_integer())
            .collect();
        Self {
            num: vec![vec![BigInt::one()]],
            fp_num,
            denom,
            order: 0,
        }
    }

    /// Advances one order, keeping `a`-degrees up to `keep_a`.
    fn step(&mut self, keep_a: usize) {
        let rows = self.num.len() + 1;
        let mut out = vec![vec![BigInt::zero(); keep_a + 1]; rows];
        for (i, row) in self.num.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if j > 0 && j - 1 <= keep_a {
                    out[i][j - 1] += c * &self.denom * BigInt::from(j);
                }
                for (k, d) in self.fp_num.iter().enumerate() {
                    if j + k <= keep_a && !d.is_zero() {
                        out[i + 1][j + k] += c * d;
                    }
                }
            }
        }
        self.num = out;
        self.order += 1;
    }

    fn at_origin(&self) -> ExactPolynomial {
        let scale = num_traits::pow(self.denom.clone(), self.order);
        ExactPolynomial {
            coeffs: self
                .num
                .iter()
                .map(|row| BigRational::new(row[0].clone(), scale.clone()))
                .collect(),
        }
    }
}

/// `H_m(y, 0)` for `m = 0..=n`, exactly.
pub fn bell_sequence_exact(f: &MapSpec1D, n: usize) -> Vec<ExactPolynomial> {
    let mut chain = ExactChain::new(f);
    let mut out = Vec::with_capacity(n + 1);
    out.push(chain.at_origin());
    for m in 1..=n {
        // H_n(y, 0) only needs a-degree <= n - m of H_m
        chain.step(n - m);
        out.push(chain.at_origin());
    }
    out
}

/// `H_m(y, 0)` for `m = 0..=n` as `f64` polynomials.
pub fn bell_sequence(f: &MapSpec1D, n: usize) -> Result<Vec<Polynomial>, BellError> {
    if n <= EXACT_LIMIT {
        return bell_sequence_exact(f, n)
            .iter()
            .enumerate()
            .map(|(m, p)| p.to_f64().ok_or(BellError::Overflow { order: m }))
            .collect();
    }
    let mut h = BivariatePolynomial::one();
    let mut out = vec![h.at_origin().expect("H_0 = 1")];
    for m in 1..=n {
        h = bell_next(&h, f);
        h.truncate_a(n - m);
        out.push(h.at_origin().ok_or(BellError::Overflow { order: m })?);
    }
    Ok(out)
}

fn gap_from(h: &ExactPolynomial, n: usize) -> ExactPolynomial {
    let mut coeffs: Vec<BigRational> = h.coeffs.iter().map(|c| -c).collect();
    coeffs.resize(n + 1, BigRational::zero());
    coeffs[n] += BigRational::one();
    ExactPolynomial { coeffs }
}

/// `e^n(y) = y^n - H_n(y, 0)`, exactly.
pub fn resolving_gap_exact(f: &MapSpec1D, n: usize) -> Result<ExactPolynomial, BellError> {
    if n < 1 {
        return Err(BellError::Order { min: 1, got: n });
    }
    let h = bell_sequence_exact(f, n).pop().expect("non-empty sequence");
    Ok(gap_from(&h, n))
}

pub fn resolving_gap(f: &MapSpec1D, n: usize) -> Result<Polynomial, BellError> {
    if n < 1 {
        return Err(BellError::Order { min: 1, got: n });
    }
    if n <= EXACT_LIMIT {
        return resolving_gap_exact(f, n)?
            .to_f64()
            .ok_or(BellError::Overflow { order: n });
    }
    let h = bell_sequence(f, n)?.pop().expect("non-empty sequence");
    Ok(Polynomial::monomial(n).sub(&h))
}

/// Solution of the triangular system that cancels degrees `1..n` of
/// `sum_{m<=n} b*_m e^m(y)` for a fixed `b*_n = b_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSystem {
    pub n: usize,
    pub b_n: f64,
    /// `b_star[m]` for `m = 0..=n`; `b_star[0] = 1` and `b_star[n] = b_n`.
    pub b_star: Vec<f64>,
    /// `h[m][k]`: coefficient of `y^k` in `H_m(y)`, `m, k <= n`.
    pub h: Vec<Vec<f64>>,
    pub lambda: f64,
}

impl CoefficientSystem {
    /// Coefficients of `sum_{1<=m<=n} b*_m e^m(y)` (the `m = 0` gap vanishes).
    pub fn combination(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for m in 1..=self.n {
            out[m] += self.b_star[m];
            for (k, h) in self.h[m].iter().enumerate() {
                out[k] -= self.b_star[m] * h;
            }
        }
        out
    }

    /// Largest `|h[m][k]|`, the scale residuals are measured against.
    pub fn max_input_coeff(&self) -> f64 {
        self.h.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn solve_coefficient_system(
    f: &MapSpec1D,
    n: usize,
    b_n: f64,
) -> Result<CoefficientSystem, BellError> {
    if n < 1 {
        return Err(BellError::Order { min: 1, got: n });
    }
    if b_n == 0.0 || !b_n.is_finite() {
        return Err(BellError::InvalidScale(b_n));
    }
    let lambda = f.lambda();
    let mut pow = 1.0;
    for m in 1..=n {
        pow *= lambda;
        let gap = (1.0 - pow).abs();
        if gap < RESONANCE_TOL {
            return Err(BellError::ResonanceDetected { order: m, gap });
        }
    }
    let h: Vec<Vec<f64>> = bell_sequence(f, n)?
        .iter()
        .map(|p| {
            let mut row = p.real_coeffs().expect("real map gives real coefficients");
            row.resize(n + 1, 0.0);
            row
        })
        .collect();
    let mut b_star = vec![0.0; n + 1];
    b_star[0] = 1.0;
    b_star[n] = b_n;
    // degree k: b*_k (1 - h_kk) = sum_{m>k} b*_m h_mk
    for k in (1..n).rev() {
        let rhs: f64 = (k + 1..=n).map(|m| b_star[m] * h[m][k]).sum();
        b_star[k] = rhs / (1.0 - h[k][k]);
    }
    Ok(CoefficientSystem {
        n,
        b_n,
        b_star,
        h,
        lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierClass {
    Attracting,
    Repelling,
    Neutral,
}

pub fn classify_multiplier(lambda: f64) -> MultiplierClass {
    let m = lambda.abs();
    if m < 1.0 {
        MultiplierClass::Attracting
    } else if m > 1.0 {
        MultiplierClass::Repelling
    } else {
        MultiplierClass::Neutral
    }
}
