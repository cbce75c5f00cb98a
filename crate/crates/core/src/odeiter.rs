//! Polynomial vector fields `da/dt = F(a)` treated as the differential
//! iteration `a ↦ a + δF(a)`: Euler trajectories with their partial sums,
//! fixed points, Jacobian spectra and critical asymptotic frequencies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polycore::{poly_roots, PolyError, Polynomial, RootConfig};

pub const MAX_DIM: usize = 8;
pub const MAX_TOTAL_DEGREE: u32 = 4;
pub const ESCAPE_BOUND: f64 = 1e6;
pub const DEDUP_DISTANCE: f64 = 1e-8;
pub const SINGULAR_TAU_TOL: f64 = 1e-10;
/// Eigenvalues whose imaginary part is below this, relative to `1 + |λ|`,
/// are treated as real. Double roots come back from the root finder with
/// imaginary parts near the square root of machine precision.
pub const REAL_EIGEN_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("trajectory left |a| <= {bound} at step {step}")]
    TrajectoryEscape { step: usize, bound: f64 },
    #[error("coordinate {index} of the evaluation point is zero")]
    ZeroCoordinate { index: usize },
    #[error("I + tau J is singular at tau = {tau} (eigenvalue {eigenvalue:?})")]
    SingularTau { tau: f64, eigenvalue: Option<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Roots(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coef: f64,
}

impl Term {
    pub fn new(exps: Vec<u32>, coef: f64) -> Self {
        Self { exps, coef }
    }

    fn eval(&self, a: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(a)
            .fold(self.coef, |acc, (e, x)| acc * x.powi(*e as i32))
    }

    /// `∂/∂a_k` of the monomial.
    fn partial(&self, a: &[f64], k: usize) -> f64 {
        let e = self.exps[k];
        if e == 0 {
            return 0.0;
        }
        let mut acc = self.coef * e as f64;
        for (i, (ei, x)) in self.exps.iter().zip(a).enumerate() {
            let p = if i == k { ei - 1 } else { *ei };
            acc *= x.powi(p as i32);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct OdeSystem {
    dim: usize,
    components: Vec<Vec<Term>>,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    dim: usize,
    components: Vec<Vec<Term>>,
}

impl TryFrom<RawSystem> for OdeSystem {
    type Error = OdeError;
    fn try_from(r: RawSystem) -> Result<Self, OdeError> {
        OdeSystem::new(r.dim, r.components)
    }
}

impl From<OdeSystem> for RawSystem {
    fn from(s: OdeSystem) -> Self {
        RawSystem {
            dim: s.dim,
            components: s.components,
        }
    }
}

impl OdeSystem {
    pub fn new(dim: usize, components: Vec<Vec<Term>>) -> Result<Self, OdeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(OdeError::InvalidSystem(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if components.len() != dim {
            return Err(OdeError::InvalidSystem(format!(
                "{} components for dimension {dim}",
                components.len()
            )));
        }
        for (c, terms) in components.iter().enumerate() {
            for t in terms {
                if t.exps.len() != dim {
                    return Err(OdeError::InvalidSystem(format!(
                        "component {c}: exponent tuple of length {}",
                        t.exps.len()
                    )));
                }
                if t.exps.iter().sum::<u32>() > MAX_TOTAL_DEGREE {
                    return Err(OdeError::InvalidSystem(format!(
                        "component {c}: total degree above {MAX_TOTAL_DEGREE}"
                    )));
                }
                if !t.coef.is_finite() {
                    return Err(OdeError::InvalidSystem(format!(
                        "component {c}: non-finite coefficient"
                    )));
                }
            }
        }
        Ok(Self { dim, components })
    }

    /// `F(a) = M a`.
    pub fn linear(m: &[Vec<f64>]) -> Result<Self, OdeError> {
        let dim = m.len();
        let components = m
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(j, c)| {
                        let mut exps = vec![0; dim];
                        exps[j] = 1;
                        Term::new(exps, *c)
                    })
                    .collect()
            })
            .collect();
        Self::new(dim, components)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Vec<Term>] {
        &self.components
    }

    pub fn eval(&self, a: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|terms| terms.iter().map(|t| t.eval(a)).sum())
            .collect()
    }

    /// `J[i][k] = ∂F_i/∂a_k`.
    pub fn jacobian(&self, a: &[f64]) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|terms| {
                (0..self.dim)
                    .map(|k| terms.iter().map(|t| t.partial(a, k)).sum())
                    .collect()
            })
            .collect()
    }

    fn check_point(&self, a: &[f64]) -> Result<(), OdeError> {
        if a.len() != self.dim {
            return Err(OdeError::DimensionMismatch {
                expected: self.dim,
                got: a.len(),
            });
        }
        Ok(())
    }
}

/// `f(a) = a + δF(a)` iterated `n` times.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialIteration {
    pub system: OdeSystem,
    pub delta: f64,
    pub n: usize,
}

impl DifferentialIteration {
    pub fn new(system: OdeSystem, delta: f64, n: usize) -> Result<Self, OdeError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(OdeError::InvalidSystem(format!(
                "step {delta} must be positive"
            )));
        }
        Ok(Self { system, delta, n })
    }

    /// `n` steps of size `t/n`.
    pub fn with_horizon(system: OdeSystem, t: f64, n: usize) -> Result<Self, OdeError> {
        Self::new(system, t / n as f64, n)
    }

    pub fn horizon(&self) -> f64 {
        self.delta * self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerRun {
    pub a_n: Vec<f64>,
    /// `S_n = Σ_{p<n} F(a_p)`.
    pub s_n: Vec<f64>,
}

pub fn euler_iterate(it: &DifferentialIteration, a0: &[f64]) -> Result<EulerRun, OdeError> {
    it.system.check_point(a0)?;
    let mut a = a0.to_vec();
    let mut s = vec![0.0; a.len()];
    for step in 1..=it.n {
        let f = it.system.eval(&a);
        for ((ai, si), fi) in a.iter_mut().zip(s.iter_mut()).zip(&f) {
            *ai += it.delta * fi;
            *si += fi;
        }
        if a.iter().any(|x| !(x.abs() <= ESCAPE_BOUND)) {
            return Err(OdeError::TrajectoryEscape {
                step,
                bound: ESCAPE_BOUND,
            });
        }
    }
    Ok(EulerRun { a_n: a, s_n: s })
}

/// `per_axis^d` points on the lattice `[-r, r]^d`.
pub fn lattice_seeds(dim: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let ticks: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|k| -r + 2.0 * r * k as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                ticks.iter().map(move |t| {
                    let mut q = p.clone();
                    q.push(*t);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPoints {
    /// Sorted lexicographically.
    pub points: Vec<Vec<f64>>,
    /// Seeds whose Newton run did not converge.
    pub dropped: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn newton(sys: &OdeSystem, seed: &[f64]) -> Option<Vec<f64>> {
    let d = sys.dim();
    let mut x = seed.to_vec();
    for _ in 0..100 {
        let f = sys.eval(&x);
        if norm(&f) <= 1e-12 * (1.0 + norm(&x)) {
            return Some(x);
        }
        let j = sys.jacobian(&x);
        let jm = DMatrix::from_fn(d, d, |r, c| j[r][c]);
        let dx = jm.lu().solve(&DVector::from_column_slice(&f))?;
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi -= di;
        }
        if !x.iter().all(|v| v.is_finite() && v.abs() <= 1e8) {
            return None;
        }
    }
    let f = sys.eval(&x);
    (norm(&f) <= 1e-12 * (1.0 + norm(&x))).then_some(x)
}

/// Newton's method from every seed, deduplicated at [`DEDUP_DISTANCE`].
pub fn fixed_points(sys: &OdeSystem, seeds: &[Vec<f64>]) -> Result<FixedPoints, OdeError> {
    for s in seeds {
        sys.check_point(s)?;
    }
    let runs: Vec<Option<Vec<f64>>> = seeds.par_iter().map(|s| newton(sys, s)).collect();
    let dropped = runs.iter().filter(|r| r.is_none()).count();
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in runs.into_iter().flatten() {
        let p: Vec<f64> = p
            .into_iter()
            .map(|v| if v == 0.0 { 0.0 } else { v })
            .collect();
        if !points.iter().any(|q| {
            norm(&q.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>()) < DEDUP_DISTANCE
        }) {
            points.push(p);
        }
    }
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(FixedPoints { points, dropped })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianEigen {
    pub jacobian: Vec<Vec<f64>>,
    /// Ascending coefficients of `det(λI - J)`; leading coefficient 1.
    pub char_poly: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// `|det(J - λI)|` at each eigenvalue.
    pub residuals: Vec<f64>,
}

impl JacobianEigen {
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| is_real_eigenvalue(**z))
            .map(|z| z.re)
            .collect()
    }
}

pub fn is_real_eigenvalue(z: Complex64) -> bool {
    z.im.abs() <= REAL_EIGEN_TOL * (1.0 + z.re.abs())
}

/// Faddeev–LeVerrier: ascending coefficients of `det(λI - J)`.
pub fn characteristic_polynomial(j: &[Vec<f64>]) -> Vec<f64> {
    let n = j.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = J M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0.0; n]; n];
        for r in 0..n {
            for col in 0..n {
                next[r][col] = (0..n).map(|i| j[r][i] * m[i][col]).sum();
            }
            next[r][r] += c[n - k + 1];
        }
        m = next;
        let trace: f64 = (0..n)
            .map(|r| (0..n).map(|i| j[r][i] * m[i][r]).sum::<f64>())
            .sum();
        c[n - k] = -trace / k as f64;
    }
    c
}

/// `det(J - λI)` by complex Gaussian elimination with partial pivoting.
pub fn shifted_determinant(j: &[Vec<f64>], lambda: Complex64) -> Complex64 {
    let n = j.len();
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    Complex64::new(j[r][c], 0.0)
                        - if r == c {
                            lambda
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                })
                .collect()
        })
        .collect();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm()))
            .unwrap();
        if a[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

pub fn jacobian_eigen(sys: &OdeSystem, a: &[f64]) -> Result<JacobianEigen, OdeError> {
    sys.check_point(a)?;
    let jacobian = sys.jacobian(a);
    matrix_eigen(jacobian)
}

/// Spectrum of an explicit matrix through its characteristic polynomial.
pub fn matrix_eigen(jacobian: Vec<Vec<f64>>) -> Result<JacobianEigen, OdeError> {
    let char_poly = characteristic_polynomial(&jacobian);
    let eigenvalues = poly_roots(&Polynomial::from_real(&char_poly), &RootConfig::default())?;
    let eigenvalues: Vec<Complex64> = eigenvalues
        .into_iter()
        .map(|z| {
            if is_real_eigenvalue(z) {
                Complex64::new(z.re, 0.0)
            } else {
                z
            }
        })
        .collect();
    let residuals = eigenvalues
        .iter()
        .map(|z| shifted_determinant(&jacobian, *z).norm())
        .collect();
    Ok(JacobianEigen {
        jacobian,
        char_poly,
        eigenvalues,
        residuals,
    })
}

fn check_frequency_point(sys: &OdeSystem, a: &[f64]) -> Result<(), OdeError> {
    sys.check_point(a)?;
    if let Some(index) = a.iter().position(|x| *x == 0.0) {
        return Err(OdeError::ZeroCoordinate { index });
    }
    Ok(())
}

/// Row vector `s_a` with `s_a (I + τJ) = (1/a_ℓ)_ℓ`.
pub fn critical_frequency_solution(
    sys: &OdeSystem,
    a: &[f64],
    tau: f64,
) -> Result<Vec<f64>, OdeError> {
    check_frequency_point(sys, a)?;
    let eig = jacobian_eigen(sys, a)?;
    for lam in eig.real_eigenvalues() {
        if (tau * lam + 1.0).abs() <= SINGULAR_TAU_TOL {
            return Err(OdeError::SingularTau {
                tau,
                eigenvalue: Some(lam),
            });
        }
    }
    solve_row(&eig.jacobian, a, tau)
}

fn solve_row(j: &[Vec<f64>], a: &[f64], tau: f64) -> Result<Vec<f64>, OdeError> {
    let d = a.len();
    // transpose of I + τJ
    let m = DMatrix::from_fn(d, d, |r, c| if r == c { 1.0 } else { 0.0 } + tau * j[c][r]);
    let rhs = DVector::from_iterator(d, a.iter().map(|x| 1.0 / x));
    let s = m.lu().solve(&rhs).ok_or(OdeError::SingularTau {
        tau,
        eigenvalue: None,
    })?;
    Ok(s.iter().cloned().collect())
}

/// `s (I + τJ) - 1/a`.
pub fn frequency_residual(j: &[Vec<f64>], a: &[f64], tau: f64, s: &[f64]) -> Vec<f64> {
    let d = a.len();
    (0..d)
        .map(|c| s[c] + tau * (0..d).map(|r| s[r] * j[r][c]).sum::<f64>() - 1.0 / a[c])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauCandidate {
    pub tau: f64,
    pub eigenvalue: f64,
    /// Left eigenvector `s J = λ s`, unit norm, first nonzero component positive.
    pub eigenvector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyResult {
    pub a: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// Sorted by decreasing `τ`.
    pub taus: Vec<TauCandidate>,
    /// Index into `taus` of the largest positive `τ`.
    pub critical: Option<usize>,
    pub singular_taus: Vec<f64>,
}

impl FrequencyResult {
    pub fn critical_tau(&self) -> Option<&TauCandidate> {
        self.critical.map(|k| &self.taus[k])
    }
}

fn left_eigenvector(j: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let d = j.len();
    let m = DMatrix::from_fn(d, d, |r, c| j[c][r] - if r == c { lambda } else { 0.0 });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();
    let mut v: Vec<f64> = v_t.row(k).iter().cloned().collect();
    let n = norm(&v);
    for x in v.iter_mut() {
        *x /= n;
    }
    if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

/// `τ = -1/λ` for every real nonzero eigenvalue of the Jacobian at `a`.
pub fn critical_frequencies(sys: &OdeSystem, a: &[f64]) -> Result<FrequencyResult, OdeError> {
    check_frequency_point(sys, a)?;
    let eig = jacobian_eigen(sys, a)?;
    let mut taus: Vec<TauCandidate> = eig
        .real_eigenvalues()
        .into_iter()
        .filter(|l| *l != 0.0)
        .map(|l| TauCandidate {
            tau: -1.0 / l,
            eigenvalue: l,
            eigenvector: left_eigenvector(&eig.jacobian, l),
        })
        .collect();
    taus.sort_by(|x, y| y.tau.total_cmp(&x.tau));
    let critical = taus.first().filter(|c| c.tau > 0.0).map(|_| 0);
    let singular_taus = taus.iter().map(|c| c.tau).collect();
    Ok(FrequencyResult {
        a: a.to_vec(),
        eigenvalues: eig.eigenvalues,
        taus,
        critical,
        singular_taus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decay() -> OdeSystem {
        OdeSystem::linear(&[vec![-1.0]]).unwrap()
    }

    fn diag23() -> OdeSystem {
        OdeSystem::linear(&[vec![-2.0, 0.0], vec![0.0, -3.0]]).unwrap()
    }

    fn rotation() -> OdeSystem {
        OdeSystem::linear(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()
    }

    fn logistic_field() -> OdeSystem {
        OdeSystem::new(
            1,
            vec![vec![Term::new(vec![1], 1.0), Term::new(vec![2], -1.0)]],
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_and_validation() {
        let text = r#"{"dim": 2, "components": [[{"exps": [1,0], "coef": -2.0}], [{"exps": [0,1], "coef": -3.0}]]}"#;
        let sys: OdeSystem = serde_json::from_str(text).unwrap();
        assert_eq!(sys, diag23());
        let back: OdeSystem = serde_json::from_str(&serde_json::to_string(&sys).unwrap()).unwrap();
        assert_eq!(back, sys);
        let bad = r#"{"dim": 1, "components": [[{"exps": [5], "coef": 1.0}]]}"#;
        assert!(serde_json::from_str::<OdeSystem>(bad).is_err());
        let bad = r#"{"dim": 2, "components": [[{"exps": [1], "coef": 1.0}], []]}"#;
        assert!(serde_json::from_str::<OdeSystem>(bad).is_err());
        assert!(OdeSystem::new(9, vec![vec![]; 9]).is_err());
    }

    #[test]
    fn euler_linear_decay() {
        let it = DifferentialIteration::with_horizon(decay(), 1.0, 1000).unwrap();
        let run = euler_iterate(&it, &[1.0]).unwrap();
        assert!((run.a_n[0] - (-1.0f64).exp()).abs() < 2e-4);
        // exact Euler value (1 - 1/n)^n
        assert!((run.a_n[0] - (1.0f64 - 1e-3).powi(1000)).abs() < 1e-13);
    }

    #[test]
    fn euler_stationary_field() {
        let sys = OdeSystem::new(2, vec![vec![], vec![]]).unwrap();
        let run = euler_iterate(
            &DifferentialIteration::new(sys, 0.1, 50).unwrap(),
            &[0.3, -2.0],
        )
        .unwrap();
        assert_eq!(run.a_n, vec![0.3, -2.0]);
        assert_eq!(run.s_n, vec![0.0, 0.0]);
    }

    #[test]
    fn euler_first_order() {
        let exact = (-1.0f64).exp();
        let err = |n| {
            (euler_iterate(
                &DifferentialIteration::with_horizon(decay(), 1.0, n).unwrap(),
                &[1.0],
            )
            .unwrap()
            .a_n[0]
                - exact)
                .abs()
        };
        for n in [100, 1000, 10_000] {
            let ratio = err(n) / err(2 * n);
            assert!((1.8..=2.2).contains(&ratio), "n={n}: {ratio}");
        }
    }

    #[test]
    fn euler_escape() {
        let blowup = OdeSystem::new(1, vec![vec![Term::new(vec![2], 1.0)]]).unwrap();
        let it = DifferentialIteration::new(blowup, 0.1, 10_000).unwrap();
        assert!(matches!(
            euler_iterate(&it, &[1.0]),
            Err(OdeError::TrajectoryEscape { .. })
        ));
    }

    #[test]
    fn fixed_point_examples() {
        let fp = fixed_points(&decay(), &lattice_seeds(1, 2.0, 5)).unwrap();
        assert_eq!(fp.points, vec![vec![0.0]]);
        let fp = fixed_points(&logistic_field(), &lattice_seeds(1, 3.0, 5)).unwrap();
        assert_eq!(fp.points.len(), 2);
        assert!(fp.points[0][0].abs() < 1e-12 && (fp.points[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_has_expected_size() {
        let s = lattice_seeds(3, 1.0, 5);
        assert_eq!(s.len(), 125);
        assert_eq!(s[0], vec![-1.0, -1.0, -1.0]);
        assert_eq!(s[124], vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn faddeev_leverrier_matches_expansion() {
        // det(λI - J) for J = [[1,2],[3,4]] is λ² - 5λ - 2
        assert_eq!(
            characteristic_polynomial(&[vec![1.0, 2.0], vec![3.0, 4.0]]),
            vec![-2.0, -5.0, 1.0]
        );
        // companion-like 3x3: [[0,1,0],[0,0,1],[6,-11,6]] has roots 1,2,3
        let c = characteristic_polynomial(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![6.0, -11.0, 6.0],
        ]);
        assert_eq!(c, vec![-6.0, 11.0, -6.0, 1.0]);
    }

    #[test]
    fn eigen_examples() {
        let e = jacobian_eigen(&diag23(), &[0.4, 0.7]).unwrap();
        let mut re: Vec<f64> = e.real_eigenvalues();
        re.sort_by(|a, b| a.total_cmp(b));
        assert!((re[0] + 3.0).abs() < 1e-12 && (re[1] + 2.0).abs() < 1e-12);
        let e = jacobian_eigen(&rotation(), &[1.0, 1.0]).unwrap();
        assert!(e.real_eigenvalues().is_empty());
        let mut ims: Vec<f64> = e.eigenvalues.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.total_cmp(b));
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(e.residuals.iter().all(|r| *r <= 1e-8));
    }

    #[test]
    fn repeated_eigenvalue_counts_as_real() {
        let sys = OdeSystem::linear(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let e = jacobian_eigen(&sys, &[1.0, 1.0]).unwrap();
        assert_eq!(e.real_eigenvalues().len(), 2);
    }

    #[test]
    fn frequency_solution_examples() {
        let s = critical_frequency_solution(&diag23(), &[1.0, 1.0], 0.1).unwrap();
        assert!((s[0] - 1.25).abs() < 1e-15 && (s[1] - 1.0 / 0.7).abs() < 1e-15);
        let a = [0.3, -1.7];
        assert_eq!(
            critical_frequency_solution(&diag23(), &a, 0.0).unwrap(),
            vec![1.0 / 0.3, 1.0 / -1.7]
        );
        match critical_frequency_solution(&diag23(), &[1.0, 1.0], 0.5) {
            Err(OdeError::SingularTau {
                tau,
                eigenvalue: Some(l),
            }) => {
                assert_eq!(tau, 0.5);
                assert!((l + 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            critical_frequency_solution(&diag23(), &[0.0, 1.0], 0.1),
            Err(OdeError::ZeroCoordinate { index: 0 })
        );
    }

    #[test]
    fn frequency_candidates() {
        let r = critical_frequencies(&decay(), &[0.5]).unwrap();
        assert!((r.critical_tau().unwrap().tau - 1.0).abs() < 1e-12);
        let r = critical_frequencies(&diag23(), &[1.0, 2.0]).unwrap();
        let taus: Vec<f64> = r.taus.iter().map(|c| c.tau).collect();
        assert!((taus[0] - 0.5).abs() < 1e-12 && (taus[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.critical, Some(0));
        assert!(
            (r.taus[0].eigenvector[0] - 1.0).abs() < 1e-12
                && r.taus[0].eigenvector[1].abs() < 1e-12
        );
        let r = critical_frequencies(&rotation(), &[1.0, 1.0]).unwrap();
        assert!(r.taus.is_empty() && r.critical.is_none());
    }

    #[test]
    fn singular_taus_make_determinant_vanish() {
        let sys = OdeSystem::linear(&[
            vec![-1.0, 0.5, 0.0],
            vec![0.5, -3.0, 1.0],
            vec![0.0, 1.0, -0.5],
        ])
        .unwrap();
        let a = [1.0, -2.0, 0.5];
        let r = critical_frequencies(&sys, &a).unwrap();
        assert_eq!(r.taus.len(), 3);
        for tau in &r.singular_taus {
            let j = &jacobian_eigen(&sys, &a).unwrap().jacobian;
            let scaled: Vec<Vec<f64>> = j
                .iter()
                .map(|row| row.iter().map(|x| tau * x).collect())
                .collect();
            // det(I + τJ) = det(τJ - (-1) I)
            assert!(shifted_determinant(&scaled, Complex64::new(-1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn general_solution_structure() {
        let sys = OdeSystem::linear(&[vec![-1.0, 2.0], vec![0.5, -3.0]]).unwrap();
        let a = [0.7, -1.3];
        let r = critical_frequencies(&sys, &a).unwrap();
        let j = jacobian_eigen(&sys, &a).unwrap().jacobian;
        for cand in &r.taus {
            let null = frequency_residual(&j, &a, cand.tau, &cand.eigenvector);
            let homogeneous: Vec<f64> = null.iter().zip(&a).map(|(x, ai)| x + 1.0 / ai).collect();
            assert!(norm(&homogeneous) < 1e-10);
            let tau = cand.tau * 0.9;
            let s = critical_frequency_solution(&sys, &a, tau).unwrap();
            let c = 2.5;
            let shifted: Vec<f64> = s
                .iter()
                .zip(&cand.eigenvector)
                .map(|(x, v)| x + c * v)
                .collect();
            let lhs = frequency_residual(&j, &a, tau, &shifted);
            let zero_rhs: Vec<f64> = frequency_residual(&j, &a, tau, &cand.eigenvector)
                .iter()
                .zip(&a)
                .map(|(x, ai)| c * (x + 1.0 / ai))
                .collect();
            for (l, rr) in lhs.iter().zip(&zero_rhs) {
                assert!((l - rr).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn partial_sum_identity(
            m in prop::collection::vec(-1.0f64..1.0, 9),
            a0 in prop::collection::vec(-2.0f64..2.0, 3),
            n in 1usize..2000,
        ) {
            let rows: Vec<Vec<f64>> = m.chunks(3).map(|c| c.to_vec()).collect();
            let sys = OdeSystem::linear(&rows).unwrap();
            let it = DifferentialIteration::new(sys, 1e-3, n).unwrap();
            let run = euler_iterate(&it, &a0).unwrap();
            let scale = run.a_n.iter().chain(&a0).fold(1.0f64, |m, x| m.max(x.abs()));
            for k in 0..3 {
                let diff = run.a_n[k] - a0[k] - it.delta * run.s_n[k];
                prop_assert!(diff.abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn residual_below_tolerance(
            d in prop::collection::vec(-5.0f64..-0.2, 3),
            a in prop::collection::vec(0.5f64..3.0, 3),
            tau in 0.0f64..0.1,
        ) {
            let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { d[i] } else { 0.1 * (i as f64 - j as f64) }).collect()).collect();
            let sys = OdeSystem::linear(&rows).unwrap();
            if let Ok(s) = critical_frequency_solution(&sys, &a, tau) {
                let j = sys.jacobian(&a);
                let res = frequency_residual(&j, &a, tau, &s);
                let inv = norm(&a.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
                prop_assert!(norm(&res) < 1e-12 * inv.max(1.0));
            }
        }
    }
}
