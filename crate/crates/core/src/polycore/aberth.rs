//! Aberth–Ehrlich simultaneous iteration, generic over the working float.

use super::mpfloat::MpFloat;

/// Arithmetic the iteration needs from a real scalar.
pub(crate) trait WorkReal: Clone {
    fn from_f64_at(x: f64, prec: u32) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn log2_abs(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl WorkReal for f64 {
    fn from_f64_at(x: f64, _prec: u32) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn log2_abs(&self) -> f64 {
        self.abs().log2()
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl WorkReal for MpFloat {
    fn from_f64_at(x: f64, prec: u32) -> Self {
        MpFloat::from_f64(x, prec)
    }
    fn add(&self, o: &Self) -> Self {
        MpFloat::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        MpFloat::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        MpFloat::mul(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        MpFloat::div(self, o)
    }
    fn to_f64(&self) -> f64 {
        MpFloat::to_f64(self)
    }
    fn log2_abs(&self) -> f64 {
        MpFloat::log2_abs(self)
    }
    fn is_zero(&self) -> bool {
        MpFloat::is_zero(self)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Cx<R> {
    pub re: R,
    pub im: R,
}

impl<R: WorkReal> Cx<R> {
    pub fn new(re: R, im: R) -> Self {
        Self { re, im }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    pub fn norm_sqr(&self) -> R {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn div(&self, o: &Self) -> Self {
        let d = o.norm_sqr();
        let re = self.re.mul(&o.re).add(&self.im.mul(&o.im));
        let im = self.im.mul(&o.re).sub(&self.re.mul(&o.im));
        Self::new(re.div(&d), im.div(&d))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn log2_abs(&self) -> f64 {
        let a = self.re.log2_abs();
        let b = self.im.log2_abs();
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + 0.5 * (1.0 + (2.0 * (lo - hi)).exp2()).log2()
    }
}

pub(crate) struct AberthOutcome<R> {
    pub roots: Vec<Cx<R>>,
    pub iterations: usize,
}

/// log2 of `sum |c_k| r^k` given log2 magnitudes of the coefficients.
pub(crate) fn log2_abs_bound(log2_coeffs: &[f64], log2_r: f64) -> f64 {
    let terms: Vec<f64> = log2_coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_finite())
        .map(|(k, c)| c + k as f64 * log2_r)
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp2()).sum::<f64>().log2()
}

/// Radius of the Cauchy disc: the positive root of `|c_n| r^n = sum_{k<n} |c_k| r^k`.
pub(crate) fn cauchy_radius(log2_coeffs: &[f64]) -> f64 {
    let n = log2_coeffs.len() - 1;
    let lead = log2_coeffs[n];
    let lower = &log2_coeffs[..n];
    // g(t) = log2(sum_{k<n} |c_k| 2^{k t}) - (lead + n t) is strictly decreasing in t
    let g = |t: f64| log2_abs_bound(lower, t) - (lead + n as f64 * t);
    if lower.iter().all(|c| !c.is_finite()) {
        return 0.0;
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    hi.exp2()
}

fn horner_with_derivative<R: WorkReal>(coeffs: &[Cx<R>], z: &Cx<R>) -> (Cx<R>, Cx<R>) {
    let n = coeffs.len() - 1;
    let mut p = coeffs[n].clone();
    let zero = coeffs[n].re.sub(&coeffs[n].re);
    let mut dp = Cx::new(zero.clone(), zero);
    for c in coeffs[..n].iter().rev() {
        dp = dp.mul(z).add(&p);
        p = p.mul(z).add(c);
    }
    (p, dp)
}

pub(crate) fn horner<R: WorkReal>(coeffs: &[Cx<R>], z: &Cx<R>) -> Cx<R> {
    let n = coeffs.len() - 1;
    let mut p = coeffs[n].clone();
    for c in coeffs[..n].iter().rev() {
        p = p.mul(z).add(c);
    }
    p
}

/// Runs the iteration on `coeffs` (ascending, leading entry nonzero, degree >= 1).
///
/// A root stops moving once its correction falls below the working precision
/// or its residual reaches the rounding floor of the evaluation.
pub(crate) fn aberth<R: WorkReal>(
    coeffs: &[Cx<R>],
    prec: u32,
    max_iterations: usize,
) -> AberthOutcome<R> {
    let n = coeffs.len() - 1;
    let log2_coeffs: Vec<f64> = coeffs.iter().map(Cx::log2_abs).collect();
    let radius = cauchy_radius(&log2_coeffs).max(f64::MIN_POSITIVE);
    let mut roots: Vec<Cx<R>> = (0..n)
        .map(|k| {
            let theta = (2.0 * std::f64::consts::PI * k as f64 + 0.7) / n as f64;
            Cx::new(
                R::from_f64_at(radius * theta.cos(), prec),
                R::from_f64_at(radius * theta.sin(), prec),
            )
        })
        .collect();
    let mut frozen = vec![false; n];
    let step_floor = -(prec as f64) + 3.0;
    let residual_floor = (8.0 * (n as f64 + 1.0)).log2() - prec as f64;
    let one = Cx::new(R::from_f64_at(1.0, prec), R::from_f64_at(0.0, prec));

    let mut iterations = 0;
    while iterations < max_iterations && frozen.iter().any(|f| !f) {
        iterations += 1;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            let (p, dp) = horner_with_derivative(coeffs, &roots[i]);
            if p.is_zero() {
                frozen[i] = true;
                continue;
            }
            let log2_z = roots[i].log2_abs();
            if p.log2_abs() <= residual_floor + log2_abs_bound(&log2_coeffs, log2_z) {
                frozen[i] = true;
                continue;
            }
            let mut repulsion = Cx::new(R::from_f64_at(0.0, prec), R::from_f64_at(0.0, prec));
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    let d = roots[i].sub(zj);
                    if !d.is_zero() {
                        repulsion = repulsion.add(&one.div(&d));
                    }
                }
            }
            let step = if dp.is_zero() {
                // flat spot: nudge by the repulsion alone
                one.div(&repulsion).mul(&Cx::new(
                    R::from_f64_at(-1.0, prec),
                    R::from_f64_at(0.0, prec),
                ))
            } else {
                let ratio = p.div(&dp);
                ratio.div(&one.sub(&ratio.mul(&repulsion)))
            };
            roots[i] = roots[i].sub(&step);
            if step.log2_abs() <= step_floor + log2_z.max(-1e300) {
                frozen[i] = true;
            }
        }
    }
    AberthOutcome { roots, iterations }
}
