//! Quadratic maps `f_ℓ(a) = λ_ℓ a_ℓ + aᵗ Q_ℓ a` in `R^d`.
//!
//! Projecting on a direction `s` gives `s·f(a) = (s∘λ)·a + aᵗ S a` with
//! `S = Σ s_ℓ Q_ℓ`. An orthogonal `T` with `Tᵗ S T = D` turns the exponent into
//! a sum of one-variable problems `Λ_ℓ u_ℓ ± K_ℓ² u_ℓ² - ln u_ℓ`, `Λ = (s∘λ)ᵗ T`.

use serde::Serialize;
use thiserror::Error;

use crate::saddle::{zero_density_q, SaddleError, SaddleProblem};

pub const MAX_SWEEPS: usize = 50;
/// Eigenvalues below this fraction of the spectral radius count as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error(
        "Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    NonConvergence { sweeps: usize, off_norm: f64 },
    #[error("eigenvalue {eigenvalue:e} at position {index} is degenerate")]
    DegenerateForm { index: usize, eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("form dimension must be at least 1")]
    Empty,
    #[error(transparent)]
    Saddle(#[from] SaddleError),
}

/// Symmetric `d×d` matrix stored as its lower triangle, row by row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricForm {
    dim: usize,
    lower: Vec<f64>,
}

impl SymmetricForm {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            lower: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Rejects matrices that are not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, QuadError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(QuadError::Empty);
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(QuadError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for j in 0..=i {
                if rows[i][j] != rows[j][i] {
                    return Err(QuadError::NotSymmetric { row: i, col: j });
                }
                m.set(i, j, rows[i][j]);
            }
        }
        Ok(m)
    }

    fn idx(i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[Self::idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[Self::idx(i, j)] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `aᵗ S a`.
    pub fn quadratic(&self, a: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += a[i] * self.get(i, j) * a[j];
            }
        }
        acc
    }

    pub fn spectral_bound(&self) -> f64 {
        self.lower.iter().map(|v| v * v).sum::<f64>().sqrt() * std::f64::consts::SQRT_2
    }
}

/// Eigen-decomposition `S = T diag(values) Tᵗ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `t[i][k]` is row `i` of `T`; column `k` is the eigenvector for `values[k]`.
    pub t: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations. Columns of `T` are unit vectors whose first
/// nonzero component is positive.
pub fn symmetric_eigen(s: &SymmetricForm) -> Result<SymmetricEigen, QuadError> {
    let d = s.dim();
    if d == 0 {
        return Err(QuadError::Empty);
    }
    let mut a = s.to_rows();
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &Vec<Vec<f64>>| -> f64 {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    acc += a[i][j] * a[i][j];
                }
            }
        }
        acc.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > f64::EPSILON * 1e-2 * scale {
        if sweeps == MAX_SWEEPS {
            return Err(QuadError::NonConvergence {
                sweeps,
                off_norm: off(&a),
            });
        }
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values: Vec<f64> = order.iter().map(|&k| a[k][k]).collect();
    let mut t = vec![vec![0.0; d]; d];
    for (col, &k) in order.iter().enumerate() {
        let flip = v
            .iter()
            .map(|row| row[k])
            .find(|x| *x != 0.0)
            .is_some_and(|x| x < 0.0);
        for i in 0..d {
            t[i][col] = if flip { -v[i][k] } else { v[i][k] };
        }
    }
    Ok(SymmetricEigen { values, t, sweeps })
}

/// `f_ℓ(a) = lambda[ℓ] a_ℓ + aᵗ forms[ℓ] a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticMap {
    pub lambda: Vec<f64>,
    pub forms: Vec<SymmetricForm>,
}

impl QuadraticMap {
    pub fn new(lambda: Vec<f64>, forms: Vec<SymmetricForm>) -> Result<Self, QuadError> {
        let d = lambda.len();
        if d == 0 {
            return Err(QuadError::Empty);
        }
        if forms.len() != d || forms.iter().any(|f| f.dim() != d) {
            return Err(QuadError::DimensionMismatch(format!(
                "need {d} forms of size {d}x{d}"
            )));
        }
        Ok(Self { lambda, forms })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn eval(&self, a: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|l| self.lambda[l] * a[l] + self.forms[l].quadratic(a))
            .collect()
    }

    /// `S = Σ s_ℓ Q_ℓ`.
    pub fn projected_form(&self, s: &[f64]) -> SymmetricForm {
        let d = self.dim();
        let mut out = SymmetricForm::zeros(d);
        for (sl, form) in s.iter().zip(&self.forms) {
            for (o, v) in out.lower.iter_mut().zip(&form.lower) {
                *o += sl * v;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GammaKind {
    /// `Λu - K²u² - ln u`: a logistic-type problem with real zeros.
    Minus,
    /// `Λu + K²u² - ln u`: contributes the condition `Λ_ℓ u_ℓ = 0` only.
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaCoordinate {
    pub index: usize,
    pub kind: GammaKind,
    pub lambda: f64,
    /// `K_ℓ² = |D_ℓ|`.
    pub k2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadSplit {
    pub t: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    #[serde(rename = "Lambda")]
    pub lambda: Vec<f64>,
    pub p_plus: usize,
    pub gammas: Vec<GammaCoordinate>,
    /// Scale used for the one-variable problems: `s` itself when `d = 1`,
    /// otherwise `|s|`.
    pub s_scale: f64,
}

impl QuadSplit {
    /// The 1-D saddle problem of a `γ₋` coordinate.
    pub fn saddle_problem(
        &self,
        g: &GammaCoordinate,
    ) -> Option<Result<SaddleProblem, SaddleError>> {
        match g.kind {
            GammaKind::Minus => Some(SaddleProblem::from_scaled(
                vec![0.0, g.lambda, self.d[g.index]],
                self.s_scale,
            )),
            GammaKind::Plus => None,
        }
    }

    /// Zero density of every `γ₋` coordinate, in coordinate order.
    pub fn minus_densities(&self) -> Result<Vec<(usize, f64)>, QuadError> {
        let mut out = Vec::new();
        for g in &self.gammas {
            if let Some(prob) = self.saddle_problem(g) {
                out.push((g.index, zero_density_q(&prob?)?));
            }
        }
        Ok(out)
    }

    /// Evaluates `Σ Λ_ℓ u_ℓ + D_ℓ u_ℓ²`, which equals `s·f(Tu)`.
    pub fn polynomial_part(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(l, x)| self.lambda[l] * x + self.d[l] * x * x)
            .sum()
    }

    pub fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        self.t
            .iter()
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn split_gamma(s: &[f64], map: &QuadraticMap) -> Result<QuadSplit, QuadError> {
    let d = map.dim();
    if s.len() != d {
        return Err(QuadError::DimensionMismatch(format!(
            "direction has {} entries, map has dimension {d}",
            s.len()
        )));
    }
    let form = map.projected_form(s);
    let eig = symmetric_eigen(&form)?;
    let radius = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (index, &eigenvalue) in eig.values.iter().enumerate() {
        if radius == 0.0 || eigenvalue.abs() < DEGENERACY_TOL * radius {
            return Err(QuadError::DegenerateForm { index, eigenvalue });
        }
    }
    let weighted: Vec<f64> = s.iter().zip(&map.lambda).map(|(a, b)| a * b).collect();
    let lambda: Vec<f64> = (0..d)
        .map(|k| (0..d).map(|i| weighted[i] * eig.t[i][k]).sum())
        .collect();
    let gammas: Vec<GammaCoordinate> = eig
        .values
        .iter()
        .enumerate()
        .map(|(index, &v)| GammaCoordinate {
            index,
            kind: if v > 0.0 {
                GammaKind::Plus
            } else {
                GammaKind::Minus
            },
            lambda: lambda[index],
            k2: v.abs(),
        })
        .collect();
    let p_plus = gammas.iter().filter(|g| g.kind == GammaKind::Plus).count();
    let s_scale = if d == 1 {
        s[0]
    } else {
        s.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    Ok(QuadSplit {
        t: eig.t,
        d: eig.values,
        lambda,
        p_plus,
        gammas,
        s_scale,
    })
}

pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellgen::MapSpec1D;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
    }

    fn identity(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn diagonal_form_is_sorted() {
        let e = symmetric_eigen(&SymmetricForm::diagonal(&[2.0, -3.0])).unwrap();
        assert_eq!(e.values, vec![-3.0, 2.0]);
        assert_eq!(e.t, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn swap_form() {
        let s = SymmetricForm::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&s).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(max_abs_diff(&e.t, &[vec![r, r], vec![-r, r]]) < 1e-15);
    }

    #[test]
    fn lorenz_form_eigenvalues() {
        let (y, z) = (3.0, 4.0);
        let s =
            SymmetricForm::from_rows(&[vec![0.0, z, -y], vec![z, 0.0, 0.0], vec![-y, 0.0, 0.0]])
                .unwrap();
        let e = symmetric_eigen(&s).unwrap();
        for (got, want) in e.values.iter().zip([-5.0, 0.0, 5.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymmetricForm::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert_eq!(err, QuadError::NotSymmetric { row: 1, col: 0 });
    }

    #[test]
    fn logistic_split_matches_direct_problem() {
        for &(lam, s) in &[(2.0, 0.25), (0.5, 3.7), (3.9, 0.11)] {
            let map = QuadraticMap::new(vec![lam], vec![SymmetricForm::diagonal(&[-0.5])]).unwrap();
            let split = split_gamma(&[s], &map).unwrap();
            assert_eq!(split.p_plus, 0);
            assert_eq!(split.gammas.len(), 1);
            let direct = SaddleProblem::new(&MapSpec1D::logistic(lam), s).unwrap();
            let via = split.saddle_problem(&split.gammas[0]).unwrap().unwrap();
            assert_eq!(via, direct);
            let q = split.minus_densities().unwrap()[0].1;
            assert_eq!(q.to_bits(), zero_density_q(&direct).unwrap().to_bits());
        }
    }

    #[test]
    fn mixed_signature_split() {
        let map = QuadraticMap::new(
            vec![1.0, 2.0],
            vec![
                SymmetricForm::diagonal(&[1.0, 0.0]),
                SymmetricForm::diagonal(&[0.0, -1.0]),
            ],
        )
        .unwrap();
        let split = split_gamma(&[1.0, 1.0], &map).unwrap();
        assert_eq!(split.d, vec![-1.0, 1.0]);
        assert_eq!(split.p_plus, 1);
        assert_eq!(split.gammas[0].kind, GammaKind::Minus);
        assert_eq!(split.gammas[1].kind, GammaKind::Plus);
        assert_eq!(split.lambda, vec![2.0, 1.0]);
        assert_eq!(split.minus_densities().unwrap().len(), 1);
    }

    #[test]
    fn zero_eigenvalue_is_degenerate() {
        let map = QuadraticMap::new(
            vec![1.0, 1.0],
            vec![
                SymmetricForm::diagonal(&[1.0, 0.0]),
                SymmetricForm::diagonal(&[0.0, 0.0]),
            ],
        )
        .unwrap();
        assert!(matches!(
            split_gamma(&[1.0, 1.0], &map),
            Err(QuadError::DegenerateForm { .. })
        ));
        let map = QuadraticMap::new(vec![1.0], vec![SymmetricForm::diagonal(&[0.0])]).unwrap();
        assert!(matches!(
            split_gamma(&[1.0], &map),
            Err(QuadError::DegenerateForm { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let map = QuadraticMap::new(vec![1.0], vec![SymmetricForm::diagonal(&[1.0])]).unwrap();
        assert!(matches!(
            split_gamma(&[1.0, 2.0], &map),
            Err(QuadError::DimensionMismatch(_))
        ));
        assert!(QuadraticMap::new(vec![1.0, 1.0], vec![SymmetricForm::diagonal(&[1.0])]).is_err());
    }

    fn sym_strategy() -> impl Strategy<Value = SymmetricForm> {
        (1usize..=6).prop_flat_map(|d| {
            prop::collection::vec(-10.0f64..10.0, d * (d + 1) / 2)
                .prop_map(move |lower| SymmetricForm { dim: d, lower })
        })
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthogonality(s in sym_strategy()) {
            let e = symmetric_eigen(&s).unwrap();
            let d = s.dim();
            let tt = mat_mul(&e.t, &transpose(&e.t));
            prop_assert!(max_abs_diff(&tt, &identity(d)) < 1e-12);
            let diag: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { e.values[i] } else { 0.0 }).collect()).collect();
            let back = mat_mul(&mat_mul(&e.t, &diag), &transpose(&e.t));
            let scale = s.spectral_bound().max(1.0);
            prop_assert!(max_abs_diff(&back, &s.to_rows()) < 1e-12 * scale);
            prop_assert!((determinant(&e.t).abs() - 1.0).abs() < 1e-12);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            for k in 0..d {
                let first = (0..d).map(|i| e.t[i][k]).find(|x| *x != 0.0).unwrap();
                prop_assert!(first > 0.0);
            }
        }

        #[test]
        fn eigenvalues_match_nalgebra(s in sym_strategy()) {
            let d = s.dim();
            let m = DMatrix::from_fn(d, d, |i, j| s.get(i, j));
            let mut oracle: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
            oracle.sort_by(|a, b| a.total_cmp(b));
            let e = symmetric_eigen(&s).unwrap();
            for (a, b) in e.values.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-12 * s.spectral_bound().max(1.0));
            }
        }

        #[test]
        fn split_reproduces_projection(
            d in 1usize..=4,
            seed in prop::collection::vec(-3.0f64..3.0, 64),
        ) {
            let mut it = seed.into_iter().cycle();
            let lambda: Vec<f64> = (0..d).map(|_| it.next().unwrap()).collect();
            let forms: Vec<SymmetricForm> = (0..d)
                .map(|_| SymmetricForm { dim: d, lower: (0..d * (d + 1) / 2).map(|_| it.next().unwrap()).collect() })
                .collect();
            let s: Vec<f64> = (0..d).map(|_| it.next().unwrap()).collect();
            let u: Vec<f64> = (0..d).map(|_| it.next().unwrap()).collect();
            let map = QuadraticMap::new(lambda, forms).unwrap();
            if let Ok(split) = split_gamma(&s, &map) {
                let a = split.apply_t(&u);
                let direct: f64 = s.iter().zip(map.eval(&a)).map(|(x, y)| x * y).sum();
                prop_assert!((split.polynomial_part(&u) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
                prop_assert_eq!(split.p_plus + split.gammas.iter().filter(|g| g.kind == GammaKind::Minus).count(), d);
            }
        }
    }
}
