//! The direct problem: from a sampled potential to `r(k)`, `t(k)`, the
//! Jost-type solutions `φ` and `ψ`, bound states, the Green's function and
//! the first-order response `δr/δV`.
//!
//! Conventions: `φ(x,k) → e^{-ikx}` as `x → -∞` and
//! `φ → (1/t) e^{-ikx} + (r/t) e^{ikx}` as `x → +∞`; `ψ(x,k) → e^{-ikx}`
//! as `x → +∞`.
//!
//! Integration uses Numerov's method with the grid spacing as step. The
//! asymptotic plane waves are the exact discrete solutions of the Numerov
//! recurrence, so the conserved discrete Wronskian makes
//! `|r|² + |t|² = 1` hold to round-off.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, Grid, GridKind, QuadratureRule, Sample};
use crate::scattering_data::{BoundState, ReflectionAmplitude, ScatteringData};

/// Potentials whose outer-10% maximum exceeds this fraction of `max|V|`
/// are rejected where asymptotics matter.
pub const DECAY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SampledPotential {
    grid: Grid,
    values: Vec<f64>,
    decay_margin: f64,
}

impl SampledPotential {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite potential sample {bad}")));
        }
        let n = values.len();
        let outer = (n / 10).max(1);
        let decay_margin = values[..outer]
            .iter()
            .chain(&values[n - outer..])
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        Ok(SampledPotential { grid, values, decay_margin })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        SampledPotential::new(grid, values)
    }

    pub fn zero(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        SampledPotential { grid, values, decay_margin: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `|V|` over the outer 10% of the grid on each side.
    pub fn decay_margin(&self) -> f64 {
        self.decay_margin
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn ensure_decayed(&self) -> Result<()> {
        let max_abs = self.max_abs();
        if self.decay_margin > DECAY_TOLERANCE * max_abs {
            return Err(Error::UndecayedPotential { margin: self.decay_margin, max_abs });
        }
        Ok(())
    }

    /// `∫ V dx` with Simpson weights.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(QuadratureRule::for_grid(&self.grid).weights()).map(|(v, w)| v * w).sum()
    }

    /// Same spacing, extended with zeros to cover `[-half_width, half_width]`.
    pub fn zero_padded(&self, half_width: f64) -> Result<Self> {
        let h = self.grid.spacing();
        let left = ((self.grid.min() + half_width) / h).round().max(0.0) as usize;
        let right = ((half_width - self.grid.max()) / h).round().max(0.0) as usize;
        let n = left + self.grid.len() + right;
        let grid = Grid::with_spacing(self.grid.min() - left as f64 * h, h, n, GridKind::Spatial)?;
        let mut values = vec![0.0; left];
        values.extend_from_slice(&self.values);
        values.resize(n, 0.0);
        SampledPotential::new(grid, values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    PhiLeftSource,
    PsiRightDecaying,
}

/// Complex samples over a spatial grid for a list of momenta;
/// `values[j]` holds the samples for `momenta[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub momenta: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    pub convention: Convention,
}

impl WaveField {
    pub fn at_momentum(&self, k: f64) -> Option<&[Complex64]> {
        self.momenta
            .iter()
            .position(|&q| (q - k).abs() <= 1e-12 * k.abs().max(1.0))
            .map(|j| self.values[j].as_slice())
    }
}

/// Solution of the scattering problem at one momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringSlice {
    pub k: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub phi: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    /// `(θ/h) / (a² sin θ)`: scales the Numerov Casoratian to the
    /// continuum Wronskian of the asymptotic plane waves.
    wronskian_scale: f64,
    numerov_a: Vec<f64>,
}

impl ScatteringSlice {
    /// `w(k) = 2k / (i t(k))`.
    pub fn w(&self) -> Complex64 {
        Complex64::new(2.0 * self.k, 0.0) / (Complex64::i() * self.t)
    }

    /// Discrete Wronskian `f g' - f' g` between samples `n` and `n+1`,
    /// exactly conserved for two solutions of the Numerov recurrence.
    pub fn discrete_wronskian(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        let a = &self.numerov_a;
        (0..f.len() - 1)
            .map(|n| {
                let cas = a[n] * a[n + 1] * (f[n] * g[n + 1] - f[n + 1] * g[n]);
                cas * self.wronskian_scale
            })
            .collect()
    }

    /// `G(x_i, x_j; k)` on grid indices.
    pub fn green(&self, i: usize, j: usize) -> Complex64 {
        let (outer, inner) = if i >= j { (i, j) } else { (j, i) };
        self.psi[outer].conj() * self.phi[inner] / self.w()
    }
}

fn cos_theta(h: f64, g: f64) -> f64 {
    let s = h * h * g / 12.0;
    (1.0 + 5.0 * s) / (1.0 - s)
}

/// Numerov recurrence for `y'' = g y`, run from index 0 upward.
fn numerov<T: Sample>(g: &[f64], h: f64, y0: T, y1: T) -> Vec<T> {
    let n = g.len();
    let s = h * h / 12.0;
    let mut y = Vec::with_capacity(n);
    y.push(y0);
    y.push(y1);
    for i in 1..n - 1 {
        let next = (y[i] * (2.0 * (1.0 + 5.0 * s * g[i])) - y[i - 1] * (1.0 - s * g[i - 1]))
            * (1.0 / (1.0 - s * g[i + 1]));
        y.push(next);
    }
    y
}

pub fn solve_scattering(v: &SampledPotential, k: f64) -> Result<ScatteringSlice> {
    if k == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    v.ensure_decayed()?;
    let grid = v.grid();
    let h = grid.spacing();
    let x = grid.points();
    let n = grid.len();
    let k2 = k * k;
    let g: Vec<f64> = v.values().iter().map(|&vx| vx - k2).collect();

    let wave_number = |gi: f64| -> Result<f64> {
        let c = cos_theta(h, gi);
        if !(-1.0..1.0).contains(&c) {
            return Err(Error::MatchingDegeneracy { k, amplitude: 0.0 });
        }
        Ok(c.acos() / h * k.signum())
    };
    let kl = wave_number(g[0])?;
    let kr = wave_number(g[n - 1])?;

    let plane = |q: f64, xi: f64| Complex64::from_polar(1.0, -q * xi);
    let phi = numerov(&g, h, plane(kl, x[0]), plane(kl, x[1]));

    let (xa, xb) = (x[n - 2], x[n - 1]);
    let (ya, yb) = (phi[n - 2], phi[n - 1]);
    let det = Complex64::new(0.0, 2.0 * (kr * (xb - xa)).sin());
    let a_coef = (ya * plane(-kr, xb) - yb * plane(-kr, xa)) / det;
    let b_coef = (yb * plane(kr, xa) - ya * plane(kr, xb)) / det;
    if a_coef.norm() < 1e-12 {
        return Err(Error::MatchingDegeneracy { k, amplitude: a_coef.norm() });
    }
    let t = a_coef.inv();
    let r = b_coef / a_coef;

    let c1 = t.conj().inv();
    let c2 = r / t;
    let psi = phi.iter().map(|&p| c1 * p - c2 * p.conj()).collect();

    let s = h * h / 12.0;
    let numerov_a: Vec<f64> = g.iter().map(|&gi| 1.0 - s * gi).collect();
    let theta = (kr * h).abs();
    let a_inf = numerov_a[n - 1];
    let wronskian_scale = theta / h / (a_inf * a_inf * theta.sin());

    Ok(ScatteringSlice { k, r, t, phi, psi, wronskian_scale, numerov_a })
}

/// `r` and `t` (and optionally the fields) for many momenta, in input order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringResult {
    pub momenta: Vec<f64>,
    pub r: Vec<Complex64>,
    pub t: Vec<Complex64>,
    pub phi: Option<WaveField>,
    pub psi: Option<WaveField>,
}

pub fn solve_many(v: &SampledPotential, momenta: &[f64], keep_fields: bool) -> Result<ScatteringResult> {
    let slices: Vec<ScatteringSlice> =
        momenta.par_iter().map(|&k| solve_scattering(v, k)).collect::<Result<_>>()?;
    let r = slices.iter().map(|s| s.r).collect();
    let t = slices.iter().map(|s| s.t).collect();
    let (phi, psi) = if keep_fields {
        let (phis, psis): (Vec<_>, Vec<_>) = slices.into_iter().map(|s| (s.phi, s.psi)).unzip();
        let field = |values, convention| WaveField {
            grid: v.grid().clone(),
            momenta: momenta.to_vec(),
            values,
            convention,
        };
        (Some(field(phis, Convention::PhiLeftSource)), Some(field(psis, Convention::PsiRightDecaying)))
    } else {
        (None, None)
    };
    Ok(ScatteringResult { momenta: momenta.to_vec(), r, t, phi, psi })
}

/// Relative slope of the zero-energy solution that is flat on the left,
/// `|b| X / (|f(x_R)| + |b| X)` with `f → a + b x` on the right and `X`
/// the grid extent. It vanishes exactly at a zero-energy resonance.
pub fn zero_energy_growth(v: &SampledPotential) -> f64 {
    let h = v.grid().spacing();
    let a: Vec<f64> = v.values().iter().map(|&u| 1.0 - h * h * u / 12.0).collect();
    let (mut prev, mut cur) = (1.0, 1.0);
    for i in 1..a.len() - 1 {
        let next = ((12.0 - 10.0 * a[i]) * cur - a[i - 1] * prev) / a[i + 1];
        prev = cur;
        cur = next;
    }
    let slope = (cur - prev).abs() / h * v.grid().extent();
    slope / (cur.abs() + slope)
}

/// Above this [`zero_energy_growth`] the potential is treated as having
/// no zero-energy resonance, so `r(0) = -1`.
const GENERIC_GROWTH: f64 = 1e-3;

/// Full scattering data of `v` on the half-line grid `j · k_max/(n-1)`.
///
/// `k = 0` is not solved directly. `r(0) = -1` when the zero-energy
/// solution grows linearly; otherwise it is extrapolated from the first
/// four samples, its real part kept, and snapped to `±1` when within
/// `1e-6`.
pub fn scattering_data(v: &SampledPotential, k_max: f64, n: usize) -> Result<ScatteringData> {
    let grid = Grid::uniform(0.0, k_max, n, GridKind::Momentum)?;
    let positive = &grid.points()[1..];
    let result = solve_many(v, positive, false)?;
    let r = &result.r;
    let r0 = if zero_energy_growth(v) > GENERIC_GROWTH {
        -1.0
    } else {
        let r0 = (r[0] * 4.0 - r[1] * 6.0 + r[2] * 4.0 - r[3]).re.clamp(-1.0, 1.0);
        if r0.abs() > 1.0 - 1e-6 { r0.signum() } else { r0 }
    };
    let mut samples = Vec::with_capacity(n);
    samples.push(Complex64::new(r0, 0.0));
    samples.extend_from_slice(r);
    let reflection = ReflectionAmplitude::new(grid, samples)?;
    let bound_states = find_bound_states(v)?;
    Ok(ScatteringData::new(reflection, bound_states))
}

/// `G(x, y; k)`, with `x` and `y` on the potential grid.
pub fn greens_function(v: &SampledPotential, k: f64, x: f64, y: f64) -> Result<Complex64> {
    let slice = solve_scattering(v, k)?;
    let grid = v.grid();
    let idx = |p: f64| {
        grid.index_of(p).ok_or(Error::OutOfRange { value: p, min: grid.min(), max: grid.max() })
    };
    Ok(slice.green(idx(x)?, idx(y)?))
}

/// `δr(k)/δV(x) = (t φ(x,k))² / (2ik)` on the potential grid.
pub fn reflection_derivative_wrt_potential(v: &SampledPotential, k: f64) -> Result<Vec<Complex64>> {
    if k == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let slice = solve_scattering(v, k)?;
    let denom = Complex64::new(0.0, 2.0 * k);
    Ok(slice.phi.iter().map(|&p| (slice.t * p).powu(2) / denom).collect())
}

/// A bound state together with its eigenfunction and tail-fit quality.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundStateSolution {
    pub state: BoundState,
    /// Normalised eigenfunction on the potential grid.
    pub wavefunction: Vec<f64>,
    /// RMS residual of a free linear fit of `log|ψ|` over the fit window.
    pub fit_residual: f64,
}

struct Shooter<'a> {
    v: &'a [f64],
    h: f64,
    matching: usize,
}

const RESCALE: f64 = 1e100;

impl Shooter<'_> {
    fn g(&self, kappa: f64) -> Vec<f64> {
        self.v.iter().map(|&vx| vx + kappa * kappa).collect()
    }

    fn growth(&self, g_edge: f64) -> f64 {
        cos_theta(self.h, g_edge).max(1.0).acosh()
    }

    /// Solution decaying towards index 0, integrated up to `stop` inclusive.
    fn march_from_left(&self, g: &[f64], stop: usize) -> Vec<f64> {
        let lambda = self.growth(g[0]);
        let s = self.h * self.h / 12.0;
        let mut y = vec![1.0, lambda.exp()];
        for i in 1..stop {
            let next = (y[i] * 2.0 * (1.0 + 5.0 * s * g[i]) - y[i - 1] * (1.0 - s * g[i - 1]))
                / (1.0 - s * g[i + 1]);
            y.push(next);
            if next.abs() > RESCALE {
                y.iter_mut().for_each(|v| *v /= RESCALE);
            }
        }
        y
    }

    /// Solution decaying towards the last index, from `start` to the end.
    fn march_from_right(&self, g: &[f64], start: usize) -> Vec<f64> {
        let rev: Vec<f64> = g[start..].iter().rev().cloned().collect();
        let mut y = self.march_from_left(&rev, rev.len() - 1);
        y.reverse();
        y
    }

    /// Normalised matching Casoratian at the matching index; zero at an
    /// eigenvalue.
    fn mismatch(&self, kappa: f64) -> f64 {
        let g = self.g(kappa);
        let m = self.matching;
        let left = self.march_from_left(&g, m + 1);
        let right = self.march_from_right(&g, m);
        let (l0, l1) = (left[m], left[m + 1]);
        let (r0, r1) = (right[0], right[1]);
        (l0 * r1 - l1 * r0) / (l0.hypot(l1) * r0.hypot(r1))
    }

    fn node_count(&self, kappa: f64) -> usize {
        let g = self.g(kappa);
        let y = self.march_from_left(&g, g.len() - 1);
        y.windows(2).filter(|w| w[0] * w[1] < 0.0 || (w[0] == 0.0 && w[1] != 0.0)).count()
    }

    fn eigenfunction(&self, kappa: f64) -> Vec<f64> {
        let g = self.g(kappa);
        let m = self.matching;
        let mut left = self.march_from_left(&g, m);
        let right = self.march_from_right(&g, m);
        let scale = if right[0].abs() > 1e-300 { left[m] / right[0] } else { 0.0 };
        left.extend(right[1..].iter().map(|v| v * scale));
        left
    }
}

pub fn find_bound_states(v: &SampledPotential) -> Result<Vec<BoundState>> {
    Ok(find_bound_states_detailed(v)?.into_iter().map(|s| s.state).collect())
}

/// Shooting search for all bound states, sorted by decreasing `κ`.
pub fn find_bound_states_detailed(v: &SampledPotential) -> Result<Vec<BoundStateSolution>> {
    v.ensure_decayed()?;
    let depth = v.values().iter().map(|&x| -x).fold(0.0, f64::max);
    if depth <= 0.0 {
        return Ok(Vec::new());
    }
    let grid = v.grid();
    let n = grid.len();
    let matching = v
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(n / 2)
        .clamp(2, n - 3);
    let shooter = Shooter { v: v.values(), h: grid.spacing(), matching };

    let kappa_max = 1.1 * depth.sqrt();
    let step = 1e-3 * kappa_max;
    let steps = (kappa_max / step).round() as usize;
    let mut brackets = Vec::new();
    let mut prev = (kappa_max, shooter.mismatch(kappa_max));
    for i in (1..steps).rev() {
        let kappa = i as f64 * step;
        let d = shooter.mismatch(kappa);
        if d == 0.0 || d.signum() != prev.1.signum() {
            brackets.push((kappa, prev.0));
        }
        prev = (kappa, d);
    }
    let expected = shooter.node_count(step);
    if expected != brackets.len() {
        return Err(Error::UnresolvedBracket { kappa: step, found: brackets.len(), expected });
    }

    let mut states = Vec::with_capacity(brackets.len());
    for (mut lo, mut hi) in brackets {
        let mut d_lo = shooter.mismatch(lo);
        while hi - lo > 1e-10 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let d = shooter.mismatch(mid);
            if d == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if d.signum() == d_lo.signum() {
                lo = mid;
                d_lo = d;
            } else {
                hi = mid;
            }
        }
        let kappa = 0.5 * (lo + hi);
        states.push(normalise_state(&shooter, grid, kappa)?);
    }
    Ok(states)
}

fn normalise_state(shooter: &Shooter, grid: &Grid, kappa: f64) -> Result<BoundStateSolution> {
    let mut psi = shooter.eigenfunction(kappa);
    let sq: Vec<f64> = psi.iter().map(|p| p * p).collect();
    let norm = integrate(&sq, &QuadratureRule::for_grid(grid))?.sqrt();
    psi.iter_mut().for_each(|p| *p /= norm);

    let x = grid.points();
    let n = x.len();
    let start = n - (n / 5).max(4);
    let window: Vec<(f64, f64)> = (start..n)
        .filter(|&i| psi[i] != 0.0)
        .map(|i| (x[i], psi[i].abs().ln()))
        .collect();
    let count = window.len() as f64;
    let log_c = window.iter().map(|(xi, l)| l + kappa * xi).sum::<f64>() / count;

    let (mx, ml) = window.iter().fold((0.0, 0.0), |acc, (xi, l)| (acc.0 + xi / count, acc.1 + l / count));
    let sxx: f64 = window.iter().map(|(xi, _)| (xi - mx).powi(2)).sum();
    let sxl: f64 = window.iter().map(|(xi, l)| (xi - mx) * (l - ml)).sum();
    let slope = sxl / sxx;
    let fit_residual = (window
        .iter()
        .map(|(xi, l)| (l - ml - slope * (xi - mx)).powi(2))
        .sum::<f64>()
        / count)
        .sqrt();

    Ok(BoundStateSolution {
        state: BoundState::new(kappa, log_c.exp()),
        wavefunction: psi,
        fit_residual,
    })
}

/// `tφ = ψ + r ψ*`: rebuilds `φ` from `ψ`.
pub fn phi_from_psi(psi: &[Complex64], r: Complex64, t: Complex64) -> Vec<Complex64> {
    psi.iter().map(|&p| (p + r * p.conj()) / t).collect()
}

/// `ψ = φ/t* - (r/t) φ*`.
pub fn psi_from_phi(phi: &[Complex64], r: Complex64, t: Complex64) -> Vec<Complex64> {
    let c1 = t.conj().inv();
    let c2 = r / t;
    phi.iter().map(|&p| c1 * p - c2 * p.conj()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn grid(half: f64, h: f64) -> Grid {
        let n = (2.0 * half / h).round() as usize + 1;
        Grid::uniform(-half, half, n, GridKind::Spatial).unwrap()
    }

    fn sech2(depth: f64) -> SampledPotential {
        SampledPotential::from_fn(grid(30.0, 0.05), |x| -depth / x.cosh().powi(2)).unwrap()
    }

    #[test]
    fn free_case() {
        let v = SampledPotential::zero(grid(10.0, 0.05));
        for k in [0.3, 1.0, -2.0] {
            let s = solve_scattering(&v, k).unwrap();
            assert!(s.r.norm() < 1e-11);
            assert!((s.t - 1.0).norm() < 1e-11);
            // The discrete plane wave differs from e^{-ikx} by an O(h⁴) phase drift.
            for (x, p) in v.grid().points().iter().zip(&s.psi) {
                assert!((p - Complex64::from_polar(1.0, -k * x)).norm() < 1e-4);
            }
        }
        assert!(matches!(solve_scattering(&v, 0.0), Err(Error::ZeroMomentum)));
    }

    #[test]
    fn reflectionless_sech2() {
        let v = sech2(2.0);
        let s = solve_scattering(&v, 1.0).unwrap();
        assert!(s.r.norm() < 1e-6);
        assert!((s.t - Complex64::i()).norm() < 1e-5, "t = {}", s.t);
    }

    #[test]
    fn undecayed_potential_rejected() {
        let v = SampledPotential::from_fn(grid(5.0, 0.05), |x| -1.0 / (1.0 + x * x)).unwrap();
        assert!(matches!(solve_scattering(&v, 1.0), Err(Error::UndecayedPotential { .. })));
    }

    #[test]
    fn small_bump_matches_first_order_response() {
        let base = SampledPotential::zero(grid(20.0, 0.05));
        let bump = SampledPotential::from_fn(grid(20.0, 0.05), |x| 1e-3 * (-(x - 0.5) * (x - 0.5)).exp()).unwrap();
        let k = 0.8;
        let dr = reflection_derivative_wrt_potential(&base, k).unwrap();
        let prod: Vec<Complex64> = dr.iter().zip(bump.values()).map(|(d, v)| d * *v).collect();
        let predicted = integrate(&prod, &QuadratureRule::for_grid(base.grid())).unwrap();
        let actual = solve_scattering(&bump, k).unwrap().r;
        assert!((actual - predicted).norm() <= 0.01 * actual.norm());
    }

    #[test]
    fn response_finite_difference_at_amplitude_1e4() {
        for depth in [0.0, 2.0] {
            let base = sech2(depth);
            let dv = |x: f64| 1e-4 * (-(x + 0.7) * (x + 0.7) / 2.0).exp();
            let pert = SampledPotential::from_fn(base.grid().clone(), |x| -depth / x.cosh().powi(2) + dv(x)).unwrap();
            let k = 1.3;
            let r0 = solve_scattering(&base, k).unwrap().r;
            let r1 = solve_scattering(&pert, k).unwrap().r;
            let dr = reflection_derivative_wrt_potential(&base, k).unwrap();
            let prod: Vec<Complex64> =
                dr.iter().zip(base.grid().points()).map(|(d, &x)| d * dv(x)).collect();
            let predicted = integrate(&prod, &QuadratureRule::for_grid(base.grid())).unwrap();
            assert!(((r1 - r0) - predicted).norm() <= 1e-6);
        }
    }

    #[test]
    fn response_is_free_wave_for_zero_potential() {
        let v = SampledPotential::zero(grid(5.0, 0.05));
        let k = 1.5;
        let dr = reflection_derivative_wrt_potential(&v, k).unwrap();
        for (x, d) in v.grid().points().iter().zip(&dr) {
            let expected = Complex64::from_polar(1.0, -2.0 * k * x) / Complex64::new(0.0, 2.0 * k);
            assert!((d - expected).norm() < 1e-4);
        }
        let soliton = reflection_derivative_wrt_potential(&sech2(2.0), 1.0).unwrap();
        assert!(soliton.iter().all(|d| d.norm().is_finite() && d.norm() <= 0.5 + 1e-6));
    }

    #[test]
    fn unitarity_and_conjugation() {
        let v = SampledPotential::from_fn(grid(30.0, 0.05), |x| -0.3 * (-x * x / 4.0).exp() + 0.2 * (-(x - 2.0).powi(2)).exp())
            .unwrap();
        for k in [0.01, 0.2, 1.0, 4.0, 11.0] {
            let p = solve_scattering(&v, k).unwrap();
            let m = solve_scattering(&v, -k).unwrap();
            assert!((p.r.norm_sqr() + p.t.norm_sqr() - 1.0).abs() < 1e-10);
            assert!((m.r - p.r.conj()).norm() < 1e-10);
            assert!((m.t - p.t.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn basis_change_round_trip_and_wronskian() {
        let v = SampledPotential::from_fn(grid(30.0, 0.05), |x| -1.2 * (-x * x).exp() + 0.5 / (x - 1.0).cosh().powi(2))
            .unwrap();
        let s = solve_scattering(&v, 0.9).unwrap();
        let phi = phi_from_psi(&s.psi, s.r, s.t);
        for (a, b) in phi.iter().zip(&s.phi) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
        let psi = psi_from_phi(&s.phi, s.r, s.t);
        for (a, b) in psi.iter().zip(&s.psi) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
        let psi_conj: Vec<Complex64> = s.psi.iter().map(|p| p.conj()).collect();
        let w = s.discrete_wronskian(&s.phi, &psi_conj);
        let expected = -s.w();
        for wn in &w {
            assert!((wn - expected).norm() < 1e-8 * expected.norm());
        }
        let phi_conj: Vec<Complex64> = s.phi.iter().map(|p| p.conj()).collect();
        let wp = s.discrete_wronskian(&s.phi, &phi_conj);
        for wn in &wp {
            assert!((wn - wp[0]).norm() < 1e-8 * wp[0].norm());
        }
    }

    #[test]
    fn green_function_is_a_discrete_inverse() {
        let v = SampledPotential::zero(grid(6.0, 0.05));
        let k = 1.1;
        let s = solve_scattering(&v, k).unwrap();
        let h = v.grid().spacing();
        let hh = h * h / 12.0;
        let g: Vec<f64> = v.values().iter().map(|vx| vx - k * k).collect();
        let j = 100;
        let col: Vec<Complex64> = (0..v.grid().len()).map(|i| s.green(i, j)).collect();
        for i in 1..col.len() - 1 {
            // Numerov form of (H - k²) G.
            let lhs = -(col[i + 1] * (1.0 - hh * g[i + 1]) - col[i] * (2.0 * (1.0 + 5.0 * hh * g[i]))
                + col[i - 1] * (1.0 - hh * g[i - 1]))
                / (h * h);
            if i == j {
                assert!((lhs - 1.0 / h).norm() < 1e-3 / h);
            } else {
                assert!(lhs.norm() < 1e-8 / h, "i = {i}");
            }
        }
        // Free Green's function e^{ik|x-y|} / (-2ik) away from the kink.
        let x = v.grid().points();
        for i in [20, 60, 180] {
            let expected = Complex64::from_polar(1.0, k * (x[i] - x[j]).abs()) / Complex64::new(0.0, -2.0 * k);
            assert!((col[i] - expected).norm() < 1e-4);
        }
        assert_eq!(s.green(10, 40), s.green(40, 10));
        let gv = greens_function(&v, k, x[j], x[j]).unwrap();
        assert_eq!(gv, s.green(j, j));
    }

    #[test]
    fn bound_states_of_sech2_wells() {
        assert!(find_bound_states(&SampledPotential::zero(grid(10.0, 0.05))).unwrap().is_empty());

        let one = find_bound_states_detailed(&sech2(2.0)).unwrap();
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0].state.kappa, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(one[0].state.c, 2f64.sqrt(), epsilon = 1e-4);
        assert!(one[0].fit_residual < 1e-3);

        let two = find_bound_states(&sech2(6.0)).unwrap();
        assert_eq!(two.len(), 2);
        assert_abs_diff_eq!(two[0].kappa, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(two[1].kappa, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(two[0].c, 2.0 * 3f64.sqrt(), epsilon = 1e-3);
        assert_abs_diff_eq!(two[1].c, 6f64.sqrt(), epsilon = 1e-3);
    }

    /// Dense finite-difference Hamiltonian: its negative eigenvalues give
    /// the bound-state energies independently of the shooting code.
    fn dense_spectrum(v: &SampledPotential) -> Vec<f64> {
        let n = v.grid().len();
        let h2 = v.grid().spacing().powi(2);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 / h2 + v.values()[i];
            if i + 1 < n {
                m[(i, i + 1)] = -1.0 / h2;
                m[(i + 1, i)] = -1.0 / h2;
            }
        }
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().filter(|&e| e < -1e-3).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn bound_states_match_dense_eigensolve() {
        let v = SampledPotential::from_fn(grid(15.0, 0.05), |x| -6.0 / x.cosh().powi(2) - 0.5 * (-(x - 1.0).powi(2)).exp())
            .unwrap();
        // The shallowest state (κ ≈ 0.13) feels the Dirichlet walls of the
        // dense operator, so only well-localised states are compared.
        let shooting: Vec<BoundState> =
            find_bound_states(&v).unwrap().into_iter().filter(|b| b.kappa > 0.3).collect();
        let dense: Vec<f64> = dense_spectrum(&v).into_iter().filter(|&e| e < -0.09).collect();
        assert_eq!(shooting.len(), dense.len());
        assert_eq!(shooting.len(), 2);
        for (s, e) in shooting.iter().zip(&dense) {
            // The 3-point dense operator is O(h²) accurate.
            assert_abs_diff_eq!(s.energy(), *e, epsilon = 2e-3);
        }
    }

    #[test]
    fn scattering_data_of_soliton_is_reflectionless() {
        let data = scattering_data(&sech2(2.0), 6.0, 121).unwrap();
        assert!(data.reflection().samples().iter().all(|r| r.norm() < 1e-5));
        assert_eq!(data.bound_states().len(), 1);
    }

    #[test]
    fn zero_energy_growth_separates_resonant_wells() {
        assert_eq!(zero_energy_growth(&SampledPotential::zero(grid(10.0, 0.05))), 0.0);
        // -ν(ν+1) sech² x has a zero-energy resonance for integer ν.
        for depth in [2.0, 6.0] {
            assert!(zero_energy_growth(&sech2(depth)) < 1e-4, "{depth}");
        }
        for depth in [1.0, 3.5, -1.0] {
            assert!(zero_energy_growth(&sech2(depth)) > 0.1, "{depth}");
        }
        let well = SampledPotential::from_fn(grid(12.0, 0.05), |x| -(-x * x / 2.0).exp()).unwrap();
        let data = scattering_data(&well, 8.0, 321).unwrap();
        assert_eq!(data.reflection().samples()[0], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn zero_padding_keeps_samples() {
        let v = sech2(2.0);
        let p = v.zero_padded(50.0).unwrap();
        assert_abs_diff_eq!(p.grid().min(), -50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.grid().max(), 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.integral(), v.integral(), epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn unitarity_for_random_wells(a in -2.0..2.0f64, b in 0.3..3.0f64, c in -3.0..3.0f64, k in 0.05..6.0f64) {
            let v = SampledPotential::from_fn(grid(20.0, 0.05), |x| a * (-(x - c).powi(2) / b).exp()).unwrap();
            let s = solve_scattering(&v, k).unwrap();
            prop_assert!((s.r.norm_sqr() + s.t.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }
}
