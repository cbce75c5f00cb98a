//! The Lorenz system `a' = σ(b - a)`, `b' = ρa - b - ac`, `c' = -βc + ab` as a
//! differential iteration.
//!
//! Projecting `f(a) = a + δF(a)` on a direction `y = (x, y, z)` around a fixed
//! point gives a linear part `L·ã` plus `δ ã(z b̃ - y c̃) = (δ/2) ãᵗQã` with
//! `Q = [[0, z, -y], [z, 0, 0], [-y, 0, 0]]`. The orthogonal `T` below
//! diagonalizes `Q` as `diag(0, -μ, μ)`, `μ = sqrt(y² + z²)`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::odeiter::{jacobian_eigen, OdeError, OdeSystem, Term};
use crate::polycore::{poly_roots, PolyError, Polynomial, RootConfig};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LorenzError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("direction has y = z = 0")]
    DegenerateDirection,
    #[error("rho = {rho} <= 1: only the origin is a fixed point")]
    NoAlphaFixedPoint { rho: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Roots(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl LorenzParams {
    pub fn new(sigma: f64, rho: f64, beta: f64) -> Result<Self, LorenzError> {
        for (name, v) in [("sigma", sigma), ("rho", rho), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LorenzError::InvalidParams(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        Ok(Self { sigma, rho, beta })
    }

    pub fn classic() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    /// `sqrt(β(ρ - 1))` when `ρ > 1`.
    pub fn alpha(&self) -> Option<f64> {
        (self.rho > 1.0).then(|| (self.beta * (self.rho - 1.0)).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointTag {
    Theta,
    AlphaPlus,
    AlphaMinus,
}

impl FixedPointTag {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Theta => "theta",
            Self::AlphaPlus => "alpha_plus",
            Self::AlphaMinus => "alpha_minus",
        }
    }

    /// Signed `α` of the tag: 0 at the origin.
    pub fn signed_alpha(&self, p: &LorenzParams) -> Result<f64, LorenzError> {
        match self {
            Self::Theta => Ok(0.0),
            Self::AlphaPlus => p
                .alpha()
                .ok_or(LorenzError::NoAlphaFixedPoint { rho: p.rho }),
            Self::AlphaMinus => p
                .alpha()
                .map(|a| -a)
                .ok_or(LorenzError::NoAlphaFixedPoint { rho: p.rho }),
        }
    }

    pub fn point(&self, p: &LorenzParams) -> Result<Vec3, LorenzError> {
        let a = self.signed_alpha(p)?;
        Ok([a, a, a * a / p.beta])
    }
}

/// The tags that exist for these parameters.
pub fn fixed_point_tags(p: &LorenzParams) -> Vec<FixedPointTag> {
    if p.alpha().is_some() {
        vec![
            FixedPointTag::Theta,
            FixedPointTag::AlphaPlus,
            FixedPointTag::AlphaMinus,
        ]
    } else {
        vec![FixedPointTag::Theta]
    }
}

pub fn lorenz_system(p: &LorenzParams) -> OdeSystem {
    let t = |e: [u32; 3], c: f64| Term::new(e.to_vec(), c);
    let components = vec![
        vec![t([0, 1, 0], p.sigma), t([1, 0, 0], -p.sigma)],
        vec![t([1, 0, 0], p.rho), t([0, 1, 0], -1.0), t([1, 0, 1], -1.0)],
        vec![t([0, 0, 1], -p.beta), t([1, 1, 0], 1.0)],
    ];
    OdeSystem::new(3, components).expect("Lorenz field is a valid system")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacteristicPolys {
    /// Ascending coefficients of `(β+λ)[(σ+λ)(1+λ) - σρ]`.
    pub theta: Vec<f64>,
    /// Ascending coefficients of `λ(β+λ)(1+σ+λ) + α²(2σ+λ)`.
    pub alpha: Option<Vec<f64>>,
}

pub fn characteristic_at_fixed_points(p: &LorenzParams) -> CharacteristicPolys {
    let (s, r, b) = (p.sigma, p.rho, p.beta);
    let theta = vec![
        b * s * (1.0 - r),
        s * (1.0 - r) + b * (s + 1.0),
        s + 1.0 + b,
        1.0,
    ];
    let alpha = p
        .alpha()
        .map(|_| vec![2.0 * s * b * (r - 1.0), b * (s + r), s + b + 1.0, 1.0]);
    CharacteristicPolys { theta, alpha }
}

impl CharacteristicPolys {
    pub fn for_tag(&self, tag: FixedPointTag) -> Option<&[f64]> {
        match tag {
            FixedPointTag::Theta => Some(&self.theta),
            _ => self.alpha.as_deref(),
        }
    }
}

pub fn cubic_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, LorenzError> {
    Ok(poly_roots(
        &Polynomial::from_real(coeffs),
        &RootConfig::default(),
    )?)
}

/// `-β` and `(-(σ+1) ± sqrt((σ+1)² + 4σ(ρ-1)))/2`, ascending.
pub fn theta_eigenvalues(p: &LorenzParams) -> Vec<Complex64> {
    let disc = (p.sigma + 1.0).powi(2) + 4.0 * p.sigma * (p.rho - 1.0);
    let mut out: Vec<Complex64> = if disc >= 0.0 {
        let r = disc.sqrt();
        vec![
            Complex64::new((-(p.sigma + 1.0) - r) / 2.0, 0.0),
            Complex64::new((-(p.sigma + 1.0) + r) / 2.0, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        vec![
            Complex64::new(-(p.sigma + 1.0) / 2.0, -r / 2.0),
            Complex64::new(-(p.sigma + 1.0) / 2.0, r / 2.0),
        ]
    };
    out.push(Complex64::new(-p.beta, 0.0));
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// `Q`, `μ`, `T` and `Λ` for one projection direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorenzDecomposition {
    pub direction: Vec3,
    pub mu: f64,
    pub q: Mat3,
    /// Columns are eigenvectors of `Q` for `0, -μ, μ`.
    pub t: Mat3,
    #[serde(rename = "Lambda")]
    pub lambda: Vec3,
}

pub fn q_decomposition(direction: Vec3) -> Result<LorenzDecomposition, LorenzError> {
    let [_, y, z] = direction;
    let mu = y.hypot(z);
    if mu == 0.0 {
        return Err(LorenzError::DegenerateDirection);
    }
    let q = [[0.0, z, -y], [z, 0.0, 0.0], [-y, 0.0, 0.0]];
    let (yn, zn) = (y / mu, z / mu);
    let h = 1.0 / SQRT_2;
    let t = [[0.0, h, h], [yn, -zn * h, zn * h], [zn, yn * h, -yn * h]];
    Ok(LorenzDecomposition {
        direction,
        mu,
        q,
        t,
        lambda: [0.0, -mu, mu],
    })
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

pub fn transpose(m: &Mat3) -> Mat3 {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[j][i]))
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LCoefficients {
    pub tag: FixedPointTag,
    pub delta: f64,
    /// Linear part of `y·f` around the fixed point.
    #[serde(rename = "L")]
    pub big_l: Vec3,
    /// `l = L·Tᵗ`, so that `l·u = L·(Tᵗu)`.
    pub l: Vec3,
    /// `k = Tᵗ·L`, the linear coefficients in the eigenbasis `a = T u`.
    pub k: Vec3,
}

/// `L = yᵗ(I + δJ)` at the tagged fixed point, written out:
/// `L₁ = x(1-δσ) + δy(ρ - α²/β) + δzα`, `L₂ = δσx + y(1-δ) + δzα`,
/// `L₃ = z(1-δβ) - δyα`.
pub fn linear_part(
    p: &LorenzParams,
    direction: Vec3,
    delta: f64,
    tag: FixedPointTag,
) -> Result<Vec3, LorenzError> {
    let a = tag.signed_alpha(p)?;
    let [x, y, z] = direction;
    Ok([
        x * (1.0 - delta * p.sigma) + delta * y * (p.rho - a * a / p.beta) + delta * z * a,
        delta * p.sigma * x + y * (1.0 - delta) + delta * z * a,
        z * (1.0 - delta * p.beta) - delta * y * a,
    ])
}

pub fn l_coefficients(
    dec: &LorenzDecomposition,
    p: &LorenzParams,
    delta: f64,
    tag: FixedPointTag,
) -> Result<LCoefficients, LorenzError> {
    let big_l = linear_part(p, dec.direction, delta, tag)?;
    Ok(LCoefficients {
        tag,
        delta,
        big_l,
        l: mat_vec(&dec.t, &big_l),
        k: mat_vec(&transpose(&dec.t), &big_l),
    })
}

/// `y·f(α_p + ã) - y·α_p` evaluated directly from the field.
pub fn projected_iteration(
    p: &LorenzParams,
    direction: Vec3,
    delta: f64,
    tag: FixedPointTag,
    offset: Vec3,
) -> Result<f64, LorenzError> {
    let base = tag.point(p)?;
    let a: Vec<f64> = (0..3).map(|i| base[i] + offset[i]).collect();
    let f = lorenz_system(p).eval(&a);
    let image: Vec3 = [0, 1, 2].map(|i| a[i] + delta * f[i]);
    Ok(dot(&direction, &image) - dot(&direction, &base))
}

/// `L·ã + δ ã(z b̃ - y c̃)`.
pub fn projection_form(big_l: &Vec3, direction: Vec3, delta: f64, offset: Vec3) -> f64 {
    let [a, b, c] = offset;
    dot(big_l, &offset) + delta * a * (direction[2] * b - direction[1] * c)
}

/// `g₁(u) + g₂(v) + g₃(w)` with `g₁ = k₁u`, `g₂ = k₂v - (δμ/2)v²`,
/// `g₃ = k₃w + (δμ/2)w²`; equals the projection at `ã = T u`.
pub fn factorized_g(coeffs: &LCoefficients, mu: f64, u: Vec3) -> f64 {
    let c = coeffs.delta * mu / 2.0;
    coeffs.k[0] * u[0]
        + (coeffs.k[1] * u[1] - c * u[1] * u[1])
        + (coeffs.k[2] * u[2] + c * u[2] * u[2])
}

/// `|l₂| sqrt(8μ - l₂²) / (8πμ)` when `l₂² < 8μ`, otherwise 0.
pub fn cycle_density_value(l2: f64, mu: f64) -> f64 {
    if !(mu > 0.0) || !(l2 * l2 < 8.0 * mu) {
        return 0.0;
    }
    l2.abs() * (8.0 * mu - l2 * l2).sqrt() / (8.0 * PI * mu)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleDensity {
    pub density: f64,
    pub admissible: bool,
    pub l1: f64,
    pub l3: f64,
}

pub fn cycle_density(dec: &LorenzDecomposition, coeffs: &LCoefficients) -> CycleDensity {
    let l2 = coeffs.l[1];
    CycleDensity {
        density: cycle_density_value(l2, dec.mu),
        admissible: l2 * l2 < 8.0 * dec.mu,
        l1: coeffs.l[0],
        l3: coeffs.l[2],
    }
}

/// Directions on the unit sphere, polar axis along `x`, half-step offset in
/// the polar angle so that `y = z = 0` never occurs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionGrid {
    pub directions: Vec<Vec3>,
}

impl DirectionGrid {
    pub fn sphere(n_polar: usize, n_azimuth: usize) -> Self {
        let mut directions = Vec::with_capacity(n_polar * n_azimuth);
        for i in 0..n_polar {
            let th = PI * (i as f64 + 0.5) / n_polar as f64;
            for j in 0..n_azimuth {
                let ph = 2.0 * PI * j as f64 / n_azimuth as f64;
                directions.push([th.cos(), th.sin() * ph.cos(), th.sin() * ph.sin()]);
            }
        }
        Self { directions }
    }
}

impl Default for DirectionGrid {
    fn default() -> Self {
        Self::sphere(12, 24)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub tag: FixedPointTag,
    pub point: Vec3,
    /// Jacobian spectrum as `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub characteristic: Vec<f64>,
    /// Largest distance between characteristic roots and Jacobian eigenvalues.
    pub eigen_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Surfaces {
    pub l1: BTreeMap<&'static str, Vec<f64>>,
    pub l3: BTreeMap<&'static str, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorenzReport {
    pub params: LorenzParams,
    pub alpha: Option<f64>,
    pub delta: f64,
    pub fixed_points: Vec<FixedPointReport>,
    pub directions: Vec<Vec3>,
    pub surfaces: Surfaces,
    pub admissible_mask: BTreeMap<&'static str, Vec<bool>>,
    pub density_samples: BTreeMap<&'static str, Vec<f64>>,
}

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Largest distance when each root of `a` is matched to its nearest root of `b`.
pub fn spectrum_mismatch(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for x in a {
        let d = b
            .iter()
            .map(|y| (x - y).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    for y in b {
        let d = a
            .iter()
            .map(|x| (x - y).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    worst
}

pub fn lorenz_report(
    p: &LorenzParams,
    grid: &DirectionGrid,
    delta: f64,
) -> Result<LorenzReport, LorenzError> {
    let sys = lorenz_system(p);
    let chars = characteristic_at_fixed_points(p);
    let tags = fixed_point_tags(p);
    let mut fixed_points = Vec::new();
    for &tag in &tags {
        let point = tag.point(p)?;
        let eig = sorted(jacobian_eigen(&sys, &point)?.eigenvalues);
        let characteristic = chars.for_tag(tag).expect("tag exists").to_vec();
        let roots = cubic_roots(&characteristic)?;
        fixed_points.push(FixedPointReport {
            tag,
            point,
            eigen_mismatch: spectrum_mismatch(&eig, &roots),
            eigenvalues: eig.iter().map(|z| [z.re, z.im]).collect(),
            characteristic,
        });
    }
    let decs: Vec<LorenzDecomposition> = grid
        .directions
        .iter()
        .map(|d| q_decomposition(*d))
        .collect::<Result<_, _>>()?;
    let mut surfaces = Surfaces {
        l1: BTreeMap::new(),
        l3: BTreeMap::new(),
    };
    let mut admissible_mask = BTreeMap::new();
    let mut density_samples = BTreeMap::new();
    for &tag in &tags {
        let rows: Vec<CycleDensity> = decs
            .par_iter()
            .map(|dec| l_coefficients(dec, p, delta, tag).map(|c| cycle_density(dec, &c)))
            .collect::<Result<_, _>>()?;
        surfaces
            .l1
            .insert(tag.name(), rows.iter().map(|r| r.l1).collect());
        surfaces
            .l3
            .insert(tag.name(), rows.iter().map(|r| r.l3).collect());
        admissible_mask.insert(tag.name(), rows.iter().map(|r| r.admissible).collect());
        density_samples.insert(tag.name(), rows.iter().map(|r| r.density).collect());
    }
    Ok(LorenzReport {
        params: *p,
        alpha: p.alpha(),
        delta,
        fixed_points,
        directions: grid.directions.clone(),
        surfaces,
        admissible_mask,
        density_samples,
    })
}
