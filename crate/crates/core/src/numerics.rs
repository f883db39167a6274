//! Uniform grids and the quadrature, differentiation and principal-value
//! machinery shared by every other module.
//!
//! All routines work on uniformly spaced samples. Real and complex samples
//! go through the same code paths via the [`Sample`] trait.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid the library accepts.
pub const MIN_GRID_POINTS: usize = 8;

/// Plain weighted sums of `e^{i k x}` are trusted only while `|x| * spacing`
/// stays below this bound.
pub const OSCILLATION_BOUND: f64 = 0.5;

/// Scalar sample type: `f64` or `Complex64`.
pub trait Sample:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
}

impl Sample for f64 {}
impl Sample for Complex64 {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Spatial,
    Momentum,
}

/// An ordered, uniformly spaced set of sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
    kind: GridKind,
}

impl Grid {
    /// `n` equally spaced points from `min` to `max` inclusive.
    pub fn uniform(min: f64, max: f64, n: usize, kind: GridKind) -> Result<Self> {
        if !(max - min >= 1e-12) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateRange { min, max });
        }
        if n < MIN_GRID_POINTS {
            return Err(Error::TooFewPoints { needed: MIN_GRID_POINTS, got: n });
        }
        let spacing = (max - min) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| min + i as f64 * spacing).collect();
        points[n - 1] = max;
        Ok(Grid { points, spacing, kind })
    }

    /// Grid starting at `min` with the given spacing and `n` points.
    pub fn with_spacing(min: f64, spacing: f64, n: usize, kind: GridKind) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::DegenerateRange { min, max: min });
        }
        if n < MIN_GRID_POINTS {
            return Err(Error::TooFewPoints { needed: MIN_GRID_POINTS, got: n });
        }
        let points = (0..n).map(|i| min + i as f64 * spacing).collect();
        Ok(Grid { points, spacing, kind })
    }

    /// Wraps existing points after checking that they are uniformly spaced.
    pub fn from_points(points: Vec<f64>, kind: GridKind) -> Result<Self> {
        let n = points.len();
        if n < MIN_GRID_POINTS {
            return Err(Error::TooFewPoints { needed: MIN_GRID_POINTS, got: n });
        }
        let spacing = (points[n - 1] - points[0]) / (n - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::DegenerateRange { min: points[0], max: points[n - 1] });
        }
        let deviation = points
            .windows(2)
            .map(|w| ((w[1] - w[0]) - spacing).abs() / spacing)
            .fold(0.0, f64::max);
        // Text round trips and accumulated offsets leave ~1e-12 wiggle.
        if deviation > 1e-9 {
            return Err(Error::NonUniformGrid { deviation });
        }
        Ok(Grid { points, spacing, kind })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn extent(&self) -> f64 {
        self.max() - self.min()
    }

    /// Index of the grid point equal to `x` (to 1e-9 of a spacing).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.nearest_index(x);
        ((self.points[i] - x).abs() <= 1e-9 * self.spacing).then_some(i)
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.min()) / self.spacing).round();
        raw.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() - 1e-12 * self.spacing && x <= self.max() + 1e-12 * self.spacing
    }

    /// True when `points[i] == -points[n-1-i]` for every `i`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        let scale = self.max().abs().max(self.min().abs()).max(1.0);
        (0..n).all(|i| (self.points[i] + self.points[n - 1 - i]).abs() <= 1e-12 * scale)
    }

    /// Cubic (four-point Lagrange) interpolation of `values` at `x`.
    pub fn interpolate<T: Sample>(&self, values: &[T], x: f64) -> Result<T> {
        check_len(values.len(), self.len())?;
        if !self.contains(x) {
            return Err(Error::OutOfRange { value: x, min: self.min(), max: self.max() });
        }
        if let Some(i) = self.index_of(x) {
            return Ok(values[i]);
        }
        let n = self.len();
        let cell = (((x - self.min()) / self.spacing).floor() as isize).clamp(0, n as isize - 2);
        let start = (cell - 1).clamp(0, n as isize - 4) as usize;
        let u = (x - self.points[start]) / self.spacing;
        let mut acc = T::zero();
        for j in 0..4 {
            let mut basis = 1.0;
            for m in 0..4 {
                if m != j {
                    basis *= (u - m as f64) / (j as f64 - m as f64);
                }
            }
            acc = acc + values[start + j] * basis;
        }
        Ok(acc)
    }
}

pub fn make_uniform_grid(min: f64, max: f64, n: usize, kind: GridKind) -> Result<Grid> {
    Grid::uniform(min, max, n, kind)
}

/// Quadrature weights aligned with a set of uniformly spaced samples.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    weights: Vec<f64>,
    order: u32,
}

impl QuadratureRule {
    pub fn trapezoid(n: usize, spacing: f64) -> Self {
        let mut weights = vec![spacing; n];
        if n > 0 {
            weights[0] *= 0.5;
            weights[n - 1] *= 0.5;
        }
        if n == 1 {
            weights[0] = 0.0;
        }
        QuadratureRule { weights, order: 1 }
    }

    /// Composite Simpson; an even sample count closes with the 3/8 rule.
    pub fn simpson(n: usize, spacing: f64) -> Self {
        match n {
            0 | 1 => return QuadratureRule { weights: vec![0.0; n], order: 1 },
            2 => return Self::trapezoid(2, spacing),
            _ => {}
        }
        let mut weights = vec![0.0; n];
        let simpson_points = if n % 2 == 1 { n } else { n - 3 };
        if simpson_points >= 3 {
            for (i, w) in weights.iter_mut().enumerate().take(simpson_points) {
                *w = if i == 0 || i == simpson_points - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                } * spacing
                    / 3.0;
            }
        }
        if n.is_multiple_of(2) {
            let s = n - 4;
            for (j, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                weights[s + j] += 3.0 * spacing / 8.0 * c;
            }
        }
        QuadratureRule { weights, order: 3 }
    }

    /// Trapezoid weights with cubic end corrections `3/8, 7/6, 23/24`.
    ///
    /// Interior weights all equal the spacing, so the rule for a trailing
    /// sub-range differs from the parent rule only in its first three
    /// weights. Falls back to [`QuadratureRule::simpson`] below six samples.
    pub fn gregory(n: usize, spacing: f64) -> Self {
        if n < 6 {
            return Self::simpson(n, spacing);
        }
        let mut weights = vec![spacing; n];
        for (j, c) in GREGORY_END.iter().enumerate() {
            weights[j] = c * spacing;
            weights[n - 1 - j] = c * spacing;
        }
        QuadratureRule { weights, order: 3 }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::simpson(grid.len(), grid.spacing())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub(crate) const GREGORY_END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

pub fn integrate<T: Sample>(f: &[T], rule: &QuadratureRule) -> Result<T> {
    check_len(f.len(), rule.len())?;
    Ok(weighted_sum(f, rule.weights()))
}

pub(crate) fn weighted_sum<T: Sample>(f: &[T], w: &[f64]) -> T {
    f.iter().zip(w).fold(T::zero(), |acc, (&v, &w)| acc + v * w)
}

/// Principal value of `∫ f(q) / (q - pole) dq` over the grid range.
///
/// Uses singularity subtraction: the regularised integrand
/// `(f(q) - f(pole)) / (q - pole)` is integrated with Simpson weights and
/// the subtracted piece is added back analytically.
pub fn principal_value_integral(f: &[Complex64], grid: &Grid, pole: f64) -> Result<Complex64> {
    check_len(f.len(), grid.len())?;
    let (lo, hi) = (grid.min(), grid.max());
    let h = grid.spacing();
    if (pole - lo).abs() <= 1e-12 * h || (pole - hi).abs() <= 1e-12 * h {
        return Err(Error::PoleOnEndpoint { pole });
    }
    if pole < lo || pole > hi {
        return Err(Error::PoleOutsideRange { pole, min: lo, max: hi });
    }
    let df = derivative_samples(f, grid)?;
    pv_with_derivative(f, &df, grid, pole)
}

/// [`principal_value_integral`] with a precomputed derivative of `f`, for
/// callers sweeping many poles over the same samples.
pub(crate) fn pv_with_derivative(
    f: &[Complex64],
    df: &[Complex64],
    grid: &Grid,
    pole: f64,
) -> Result<Complex64> {
    let (lo, hi) = (grid.min(), grid.max());
    let h = grid.spacing();
    let f_pole = grid.interpolate(f, pole)?;
    let df_pole = grid.interpolate(df, pole)?;
    let rule = QuadratureRule::for_grid(grid);
    let regular: Vec<Complex64> = grid
        .points()
        .iter()
        .zip(f)
        .map(|(&q, &fq)| {
            let d = q - pole;
            if d.abs() < 1e-3 * h {
                df_pole
            } else {
                (fq - f_pole) / d
            }
        })
        .collect();
    let body = integrate(&regular, &rule)?;
    Ok(body + f_pole * ((hi - pole) / (pole - lo)).ln())
}

/// Fourth-order first derivative on a uniform grid.
///
/// Central five-point stencil in the interior, one-sided fourth-order
/// stencils on the two outermost points at each end.
pub fn derivative_samples<T: Sample>(f: &[T], grid: &Grid) -> Result<Vec<T>> {
    check_len(f.len(), grid.len())?;
    derivative_with_spacing(f, grid.spacing())
}

pub(crate) fn derivative_with_spacing<T: Sample>(f: &[T], h: f64) -> Result<Vec<T>> {
    let n = f.len();
    if n < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: n });
    }
    let s = 1.0 / (12.0 * h);
    let mut out = vec![T::zero(); n];
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - f[i + 2] + (f[i + 1] - f[i - 1]) * 8.0) * s;
    }
    let one_sided = |g: &dyn Fn(usize) -> T, sign: f64| {
        let d0 = (g(0) * -25.0 + g(1) * 48.0 + g(2) * -36.0 + g(3) * 16.0 + g(4) * -3.0) * (s * sign);
        let d1 = (g(0) * -3.0 + g(1) * -10.0 + g(2) * 18.0 + g(3) * -6.0 + g(4)) * (s * sign);
        (d0, d1)
    };
    let (a0, a1) = one_sided(&|j| f[j], 1.0);
    out[0] = a0;
    out[1] = a1;
    let (b0, b1) = one_sided(&|j| f[n - 1 - j], -1.0);
    out[n - 1] = b0;
    out[n - 2] = b1;
    Ok(out)
}

/// Fourth-order second derivative; the two points at each end use
/// six-point one-sided stencils.
pub fn second_derivative_samples<T: Sample>(f: &[T], grid: &Grid) -> Result<Vec<T>> {
    check_len(f.len(), grid.len())?;
    let n = f.len();
    if n < 6 {
        return Err(Error::TooFewPoints { needed: 6, got: n });
    }
    let s = 1.0 / (12.0 * grid.spacing() * grid.spacing());
    let mut out = vec![T::zero(); n];
    for i in 2..n - 2 {
        out[i] = ((f[i - 1] + f[i + 1]) * 16.0 - f[i - 2] - f[i + 2] - f[i] * 30.0) * s;
    }
    let edge = |g: &dyn Fn(usize) -> T| {
        let e0 = (g(0) * 45.0 - g(1) * 154.0 + g(2) * 214.0 - g(3) * 156.0 + g(4) * 61.0
            - g(5) * 10.0)
            * s;
        let e1 = (g(0) * 10.0 - g(1) * 15.0 - g(2) * 4.0 + g(3) * 14.0 - g(4) * 6.0 + g(5)) * s;
        (e0, e1)
    };
    let (a0, a1) = edge(&|j| f[j]);
    out[0] = a0;
    out[1] = a1;
    let (b0, b1) = edge(&|j| f[n - 1 - j]);
    out[n - 1] = b0;
    out[n - 2] = b1;
    Ok(out)
}

/// `C[i] = ∫_{x_i}^{x_max} f dx`, fourth order in the spacing.
pub fn cumulative_from_right<T: Sample>(f: &[T], spacing: f64) -> Result<Vec<T>> {
    let n = f.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let c = spacing / 24.0;
    let mut out = vec![T::zero(); n];
    for j in (0..n - 1).rev() {
        let piece = if j == 0 {
            (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * c
        } else if j == n - 2 {
            (f[n - 4] - f[n - 3] * 5.0 + f[n - 2] * 19.0 + f[n - 1] * 9.0) * c
        } else {
            ((f[j] + f[j + 1]) * 13.0 - f[j - 1] - f[j + 2]) * c
        };
        out[j] = out[j + 1] + piece;
    }
    Ok(out)
}

/// `(1/2π) ∫ f(k) e^{ikx} dk` over a momentum grid symmetric about zero.
///
/// `f` must be Hermitian (`f(-k) = conj f(k)`), which makes the result
/// real; the imaginary residue is checked and then discarded.
pub fn fourier_quadrature(f: &[Complex64], grid: &Grid, x: f64) -> Result<f64> {
    check_len(f.len(), grid.len())?;
    if !grid.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let rule = QuadratureRule::for_grid(grid);
    let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let sum = fourier_sum(f, grid.points(), rule.weights(), x);
    check_hermitian_residue(sum.im, scale)?;
    Ok(sum.re)
}

pub(crate) fn fourier_sum(f: &[Complex64], k: &[f64], w: &[f64], x: f64) -> Complex64 {
    let mut acc = Complex64::zero();
    for ((&fk, &kk), &wk) in f.iter().zip(k).zip(w) {
        let (s, c) = (kk * x).sin_cos();
        acc += fk * Complex64::new(c, s) * wk;
    }
    acc / (2.0 * PI)
}

pub(crate) fn check_hermitian_residue(im: f64, scale: f64) -> Result<()> {
    let residue = im.abs();
    if residue > 1e-8 * scale.max(1e-300) && residue > 1e-14 {
        return Err(Error::HermitianViolation { residue });
    }
    Ok(())
}

pub(crate) fn check_oscillation(value: f64, spacing: f64) -> Result<()> {
    if value.abs() * spacing > OSCILLATION_BOUND * (1.0 + 1e-9) {
        return Err(Error::OscillationBound { value, spacing, bound: OSCILLATION_BOUND });
    }
    Ok(())
}
