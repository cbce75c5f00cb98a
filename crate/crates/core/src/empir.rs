//! Empirical oracles: orbit histograms, scaled zero samples, reference CDFs
//! and Kolmogorov–Smirnov distances.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bellgen::MapSpec1D;

pub const DEFAULT_BINS: usize = 200;
pub const ESCAPE_BOUND: f64 = 1e6;
/// Largest perturbation applied to a starting point.
pub const SEED_JITTER: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmpirError {
    #[error("orbit left |x| <= {bound} at step {step}")]
    OrbitEscape { step: usize, bound: f64 },
    #[error("sample is empty")]
    EmptySample,
    #[error("{value} outside the support [{lo}, {hi}]")]
    DomainError { value: f64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Sum of `counts`.
    pub total: u64,
    /// Samples that fell outside `[edges[0], edges[last]]`.
    pub out_of_range: u64,
}

impl Histogram {
    /// Equal-width bins over `[lo, hi]`.
    pub fn with_range(lo: f64, hi: f64, bins: usize) -> Result<Self, EmpirError> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(EmpirError::InvalidArgument(format!(
                "bad histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|k| lo + w * k as f64).collect();
        edges[bins] = hi;
        Ok(Self {
            edges,
            counts: vec![0; bins],
            total: 0,
            out_of_range: 0,
        })
    }

    /// Equal-width bins over the observed range. A constant sample gets a
    /// single bin widened around its value.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self, EmpirError> {
        if samples.is_empty() {
            return Err(EmpirError::EmptySample);
        }
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut h = if lo == hi {
            let pad = 1e-12 * lo.abs().max(1.0);
            Self::with_range(lo - pad, hi + pad, 1)?
        } else {
            Self::with_range(lo, hi, bins)?
        };
        for &x in samples {
            h.add(x);
        }
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo() && x <= self.hi()) {
            return None;
        }
        let w = (self.hi() - self.lo()) / self.bins() as f64;
        let mut k = (((x - self.lo()) / w) as usize).min(self.bins() - 1);
        // the float index can land one bin off near an edge
        if x < self.edges[k] {
            k -= 1;
        } else if x >= self.edges[k + 1] && k + 1 < self.bins() {
            k += 1;
        }
        Some(k)
    }

    pub fn add(&mut self, x: f64) {
        match self.bin_of(x) {
            Some(k) => {
                self.counts[k] += 1;
                self.total += 1;
            }
            None => self.out_of_range += 1,
        }
    }

    /// Adds the counts of a histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<(), EmpirError> {
        if self.edges != other.edges {
            return Err(EmpirError::InvalidArgument("histogram edges differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.out_of_range += other.out_of_range;
        Ok(())
    }

    /// Cumulative fraction of the in-range mass at each edge.
    pub fn cdf_at_edges(&self) -> Vec<f64> {
        let mut acc = 0u64;
        let mut out = vec![0.0];
        for c in &self.counts {
            acc += c;
            out.push(acc as f64 / self.total as f64);
        }
        out
    }

    /// Normalized density per bin.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(c, e)| *c as f64 / (self.total as f64 * (e[1] - e[0])))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (c, e) in self.counts.iter().zip(self.edges.windows(2)) {
            writeln!(w, "{},{},{}", fmt_f64(e[0]), fmt_f64(e[1]), c)?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn jittered_start(x0: f64, seed: u64) -> f64 {
    let mut rng = SplitMix64::seed_from_u64(seed);
    x0 + SEED_JITTER * rng.gen_range(-1.0..=1.0)
}

/// `x_{burn+1}, …, x_{burn+keep}` under `x ↦ f(x)`, starting from `x0`
/// perturbed by at most [`SEED_JITTER`].
pub fn orbit_samples(
    f: &MapSpec1D,
    x0: f64,
    burn: usize,
    keep: usize,
    seed: u64,
) -> Result<Vec<f64>, EmpirError> {
    if keep == 0 {
        return Err(EmpirError::InvalidArgument(
            "keep must be at least 1".into(),
        ));
    }
    let mut x = jittered_start(x0, seed);
    let mut out = Vec::with_capacity(keep);
    for step in 1..=burn + keep {
        x = f.eval(x);
        if !(x.abs() <= ESCAPE_BOUND) {
            return Err(EmpirError::OrbitEscape {
                step,
                bound: ESCAPE_BOUND,
            });
        }
        if step > burn {
            out.push(x);
        }
    }
    Ok(out)
}

/// Orbit histogram with [`DEFAULT_BINS`] bins over the observed range.
pub fn iterate_orbit(
    f: &MapSpec1D,
    x0: f64,
    burn: usize,
    keep: usize,
    seed: u64,
) -> Result<Histogram, EmpirError> {
    Histogram::from_samples(&orbit_samples(f, x0, burn, keep, seed)?, DEFAULT_BINS)
}

/// Several orbits, one per `(x0, seed)`, binned on a shared grid and summed.
pub fn orbit_histogram(
    f: &MapSpec1D,
    starts: &[(f64, u64)],
    burn: usize,
    keep: usize,
    range: (f64, f64),
    bins: usize,
) -> Result<Histogram, EmpirError> {
    let empty = Histogram::with_range(range.0, range.1, bins)?;
    let parts: Vec<Histogram> = starts
        .par_iter()
        .map(|&(x0, seed)| {
            let mut h = empty.clone();
            for x in orbit_samples(f, x0, burn, keep, seed)? {
                h.add(x);
            }
            Ok(h)
        })
        .collect::<Result<_, EmpirError>>()?;
    let mut out = empty;
    for p in &parts {
        out.merge(p)?;
    }
    Ok(out)
}

/// `t_k = λ sqrt(y_k / n) / 2` for the positive zeros; returns the sorted
/// sample and how many non-positive zeros were dropped.
pub fn zeros_to_scaled_sample(zeros: &[f64], n: usize, lambda: f64) -> (Vec<f64>, usize) {
    let mut out: Vec<f64> = zeros
        .iter()
        .filter(|y| **y > 0.0)
        .map(|y| lambda.abs() * (y / n as f64).sqrt() / 2.0)
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    let dropped = zeros.len() - out.len();
    (out, dropped)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut points: Vec<f64>) -> Result<Self, EmpirError> {
        if points.iter().any(|x| x.is_nan()) {
            return Err(EmpirError::InvalidArgument("sample contains NaN".into()));
        }
        points.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fraction of the sample at or below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.points.partition_point(|p| *p <= x) as f64 / self.points.len() as f64
    }
}

/// `sup_x |F_n(x) - F(x)|`.
pub fn ks_distance(
    sample: &EmpiricalCdf,
    reference: impl Fn(f64) -> f64,
) -> Result<f64, EmpirError> {
    if sample.is_empty() {
        return Err(EmpirError::EmptySample);
    }
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.points.iter().enumerate() {
        let f = reference(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// KS distance between a histogram and a CDF on `[0, 1]` after mapping the
/// histogram range affinely onto `[0, 1]`, evaluated at the bin edges.
pub fn histogram_ks_affine(
    hist: &Histogram,
    reference: impl Fn(f64) -> f64,
) -> Result<f64, EmpirError> {
    if hist.total == 0 {
        return Err(EmpirError::EmptySample);
    }
    let (lo, hi) = (hist.lo(), hist.hi());
    let cdf = hist.cdf_at_edges();
    Ok(hist
        .edges
        .iter()
        .zip(&cdf)
        .map(|(e, c)| (c - reference(((e - lo) / (hi - lo)).clamp(0.0, 1.0))).abs())
        .fold(0.0, f64::max))
}

/// `(2/π) asin(sqrt((x - lo)/(hi - lo)))` on `[lo, hi]`.
pub fn arcsine_cdf(x: f64, lo: f64, hi: f64) -> Result<f64, EmpirError> {
    if !(lo < hi) {
        return Err(EmpirError::InvalidArgument(format!(
            "empty support [{lo}, {hi}]"
        )));
    }
    if !(x >= lo && x <= hi) {
        return Err(EmpirError::DomainError { value: x, lo, hi });
    }
    let r = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    Ok(2.0 / PI * r.sqrt().asin())
}

/// CDF of `(4/π) sqrt(1 - t²)` on `[0, 1]`: `(2/π)(t sqrt(1-t²) + asin t)`.
pub fn half_semicircle_cdf(t: f64) -> Result<f64, EmpirError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(EmpirError::DomainError {
            value: t,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok((2.0 / PI * (t * (1.0 - t * t).sqrt() + t.asin())).min(1.0))
}

/// Rows `x,empirical,reference` at every sample point.
pub fn write_cdf_comparison_csv<W: Write>(
    mut w: W,
    sample: &EmpiricalCdf,
    reference: impl Fn(f64) -> f64,
) -> io::Result<()> {
    writeln!(w, "x,empirical,reference")?;
    for &x in sample.points() {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(x),
            fmt_f64(sample.eval(x)),
            fmt_f64(reference(x))
        )?;
    }
    Ok(())
}
