//! Scattering data `{r(k), κ_l, c_l}`: storage, admissibility checks and
//! the dispersion relation giving `t(k)` from `r(k)` and the bound states.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, derivative_samples, integrate, pv_with_derivative, Grid, GridKind, QuadratureRule,
};

/// `1 - |r|²` is clamped here before taking its logarithm.
pub const LOG_FLOOR: f64 = 1e-14;

/// Data with `1 - |r(0)|²` below this is treated as the generic
/// zero-energy case where `|r(0)| = 1` and `t(0) = 0`.
pub const GENERIC_THRESHOLD: f64 = 1e-6;

const IMAG_AT_ZERO_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub kappa: f64,
    pub c: f64,
}

impl BoundState {
    pub fn new(kappa: f64, c: f64) -> Self {
        BoundState { kappa, c }
    }

    pub fn energy(&self) -> f64 {
        -self.kappa * self.kappa
    }
}

/// `r(k)` sampled on a half-line momentum grid starting at `k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionAmplitude {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl ReflectionAmplitude {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: samples.len() });
        }
        if grid.min().abs() > 1e-12 * grid.spacing() {
            return Err(Error::MissingZeroPoint { first: grid.min() });
        }
        Ok(ReflectionAmplitude { grid, samples })
    }

    /// Identically zero reflection on `n` points of `[0, k_max]`.
    pub fn zero(k_max: f64, n: usize) -> Result<Self> {
        let grid = Grid::uniform(0.0, k_max, n, GridKind::Momentum)?;
        let samples = vec![Complex64::new(0.0, 0.0); n];
        Ok(ReflectionAmplitude { grid, samples })
    }

    /// Samples `f` on `n` points of `[0, k_max]`.
    pub fn from_fn(k_max: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let grid = Grid::uniform(0.0, k_max, n, GridKind::Momentum)?;
        let samples = grid.points().iter().map(|&k| f(k)).collect();
        Ok(ReflectionAmplitude { grid, samples })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn k_max(&self) -> f64 {
        self.grid.max()
    }

    /// `r(k)` for any `|k| ≤ k_max`, using `r(-k) = conj r(k)`.
    pub fn at(&self, k: f64) -> Result<Complex64> {
        let v = self.grid.interpolate(&self.samples, k.abs())?;
        Ok(if k < 0.0 { v.conj() } else { v })
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| v.norm() == 0.0)
    }
}

/// `t(k)` on the full symmetric momentum grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionAmplitude {
    pub grid: Grid,
    pub samples: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringData {
    reflection: ReflectionAmplitude,
    bound_states: Vec<BoundState>,
}

/// One named admissibility check with the measured margin
/// (positive means satisfied with room to spare).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl ScatteringData {
    pub fn new(reflection: ReflectionAmplitude, bound_states: Vec<BoundState>) -> Self {
        ScatteringData { reflection, bound_states }
    }

    /// `r ≡ 0` on `n` points of `[0, k_max]` plus the given bound states.
    pub fn reflectionless(bound_states: Vec<BoundState>, k_max: f64, n: usize) -> Result<Self> {
        Ok(ScatteringData::new(ReflectionAmplitude::zero(k_max, n)?, bound_states))
    }

    pub fn reflection(&self) -> &ReflectionAmplitude {
        &self.reflection
    }

    pub fn bound_states(&self) -> &[BoundState] {
        &self.bound_states
    }

    pub fn kappa_min(&self) -> Option<f64> {
        self.bound_states.iter().map(|b| b.kappa).reduce(f64::min)
    }

    pub fn with_reflection(&self, reflection: ReflectionAmplitude) -> Self {
        ScatteringData { reflection, bound_states: self.bound_states.clone() }
    }

    pub fn without_bound_state(&self, index: usize) -> Self {
        let mut bound_states = self.bound_states.clone();
        bound_states.remove(index);
        ScatteringData { reflection: self.reflection.clone(), bound_states }
    }

    /// True when `|r(0)| = 1` to within [`GENERIC_THRESHOLD`].
    pub fn is_generic(&self) -> bool {
        1.0 - self.reflection.samples[0].norm_sqr() < GENERIC_THRESHOLD
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Errors with the failed check names unless every check passes.
    pub fn ensure_admissible(&self) -> Result<()> {
        let report = self.validate();
        if report.passed() {
            return Ok(());
        }
        let names: Vec<String> = report
            .failures()
            .map(|c| format!("{} (margin {:e})", c.name, c.margin))
            .collect();
        Err(Error::Validation(names.join(", ")))
    }

    pub fn transmission(&self, k: f64) -> Result<Complex64> {
        Dispersion::new(self)?.transmission(k)
    }

    /// `t(k)` on the full symmetric version of the reflection grid.
    pub fn transmission_on_grid(&self) -> Result<TransmissionAmplitude> {
        let (grid, _) = extend_hermitian(&self.reflection)?;
        let dispersion = Dispersion::new(self)?;
        let samples = grid
            .points()
            .iter()
            .map(|&k| dispersion.transmission(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(TransmissionAmplitude { grid, samples })
    }

    /// `a` in the tail model `|r(k)|² ≈ a / k²` used beyond the last sample.
    pub fn tail_amplitude(&self) -> f64 {
        let k = self.reflection.k_max();
        let r = self.reflection.samples[self.reflection.samples.len() - 1];
        r.norm_sqr() * k * k
    }

    /// `∫₀^∞ log(1 - |r(k)|²) dk`, the continuum term of the trace identity.
    /// Beyond `k_max` the tail model contributes `-a / k_max`.
    pub fn log_transmission_integral(&self) -> Result<f64> {
        let grid = self.reflection.grid();
        let rule = QuadratureRule::for_grid(grid);
        let logs: Vec<f64> = self.reflection.samples.iter().map(|r| log_one_minus(r.norm_sqr())).collect();
        let tail = -self.tail_amplitude() / grid.max();
        if !self.is_generic() {
            return Ok(integrate(&logs, &rule)? + tail);
        }
        let mut smooth: Vec<f64> =
            grid.points().iter().zip(&logs).map(|(&q, &l)| l - log_model(q)).collect();
        smooth[0] = (4.0 * smooth[1] - smooth[2]) / 3.0;
        let q = grid.max();
        let model = q * (q * q / (q * q + 1.0)).ln() - 2.0 * q.atan();
        Ok(integrate(&smooth, &rule)? + model + tail)
    }
}

fn log_one_minus(r2: f64) -> f64 {
    (1.0 - r2).max(LOG_FLOOR).ln()
}

/// `log(q² / (1 + q²))`: carries the logarithmic singularity at `q = 0`
/// in the generic case.
fn log_model(q: f64) -> f64 {
    (q * q / (1.0 + q * q)).ln()
}

/// Full-line principal value of `log_model(q) / (q - k)`.
fn log_model_pv(k: f64) -> f64 {
    2.0 * PI * (1.0 / k).atan()
}

/// Contribution of `|q| > q_max` to [`log_model_pv`], via `u = 1/q`.
fn log_model_tail(k: f64, q_max: f64) -> Result<f64> {
    let n = 65;
    let g = Grid::uniform(0.0, 1.0 / q_max, n, GridKind::Momentum)?;
    let f: Vec<f64> = g
        .points()
        .iter()
        .map(|&u| -(1.0 + u * u).ln() * 2.0 * k / (1.0 - k * k * u * u))
        .collect();
    integrate(&f, &QuadratureRule::for_grid(&g))
}

/// Contribution of `|q| > q_max` to the principal value of
/// `log(1 - |r|²) / (q - k)` under the tail model `|r(q)|² = a / q²`.
fn reflection_tail_pv(k: f64, q_max: f64, a: f64) -> f64 {
    let x = k / q_max;
    if x.abs() < 1e-3 {
        // 2k ∫ dq / (q² (q² - k²)) expanded in k/q_max
        return -a * 2.0 * k / (3.0 * q_max.powi(3)) * (1.0 + 0.6 * x * x);
    }
    let atanh = 0.5 * ((1.0 + x) / (1.0 - x)).ln() / k;
    -a * (2.0 / k) * (atanh - 1.0 / q_max)
}

/// Precomputed `log(1 - |r|²)` samples for repeated evaluation of the
/// dispersion relation.
pub struct Dispersion<'a> {
    data: &'a ScatteringData,
    grid: Grid,
    values: Vec<Complex64>,
    derivative: Vec<Complex64>,
    generic: bool,
    tail_amplitude: f64,
}

/// Extra points appended on each side so that `±k_max` are interior poles.
const PAD: usize = 8;

impl<'a> Dispersion<'a> {
    pub fn new(data: &'a ScatteringData) -> Result<Self> {
        let r = &data.reflection;
        let h = r.grid.spacing();
        let n = r.grid.len();
        let total = 2 * (n - 1 + PAD) + 1;
        let q_max = (n - 1 + PAD) as f64 * h;
        let grid = Grid::uniform(-q_max, q_max, total, GridKind::Momentum)?;
        let generic = data.is_generic();
        let tail_amplitude = data.tail_amplitude();
        let mut values: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&q| {
                let i = (q.abs() / h).round() as usize;
                let l = if i < n {
                    log_one_minus(r.samples[i].norm_sqr())
                } else {
                    log_one_minus(tail_amplitude / (q * q))
                };
                let v = if generic { l - log_model(q) } else { l };
                Complex64::new(v, 0.0)
            })
            .collect();
        if generic {
            let mid = n - 1 + PAD;
            values[mid] = (values[mid + 1] * 4.0 - values[mid + 2]) / 3.0;
        }
        let derivative = derivative_samples(&values, &grid)?;
        Ok(Dispersion { data, grid, values, derivative, generic, tail_amplitude })
    }

    /// `t(k)` for `|k| ≤ k_max`.
    pub fn transmission(&self, k: f64) -> Result<Complex64> {
        let r = &self.data.reflection;
        if k.abs() > r.k_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { value: k, min: -r.k_max(), max: r.k_max() });
        }
        if self.generic && k == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let modulus = (1.0 - r.at(k)?.norm_sqr()).max(0.0).sqrt();
        let mut pv = pv_with_derivative(&self.values, &self.derivative, &self.grid, k)?.re
            + reflection_tail_pv(k, self.grid.max(), self.tail_amplitude);
        if self.generic {
            pv += log_model_pv(k) - log_model_tail(k, self.grid.max())?;
        }
        let blaschke = self
            .data
            .bound_states
            .iter()
            .map(|b| blaschke_factor(k, b.kappa))
            .product::<Complex64>();
        Ok(blaschke * Complex64::from_polar(modulus, -pv / (2.0 * PI)))
    }
}

/// `(k + iκ) / (k - iκ)`.
pub fn blaschke_factor(k: f64, kappa: f64) -> Complex64 {
    Complex64::new(k, kappa) / Complex64::new(k, -kappa)
}

pub fn transmission_from_reflection(data: &ScatteringData, k: f64) -> Result<Complex64> {
    data.ensure_admissible()?;
    data.transmission(k)
}

/// `| |r|² + |t|² - 1 |`.
pub fn unitarity_defect(r: Complex64, t: Complex64) -> f64 {
    (r.norm_sqr() + t.norm_sqr() - 1.0).abs()
}

/// Full symmetric grid and samples with `r(-k) = conj r(k)`.
pub fn extend_hermitian(r: &ReflectionAmplitude) -> Result<(Grid, Vec<Complex64>)> {
    let grid = r.grid();
    if grid.min().abs() > 1e-12 * grid.spacing() {
        return Err(Error::MissingZeroPoint { first: grid.min() });
    }
    let r0 = r.samples[0];
    if r0.im.abs() > IMAG_AT_ZERO_TOL {
        return Err(Error::HermitianViolation { residue: r0.im.abs() });
    }
    let n = grid.len();
    let full = Grid::uniform(-grid.max(), grid.max(), 2 * n - 1, GridKind::Momentum)?;
    let mut samples = Vec::with_capacity(2 * n - 1);
    samples.extend(r.samples[1..].iter().rev().map(|v| v.conj()));
    samples.push(Complex64::new(r0.re, 0.0));
    samples.extend_from_slice(&r.samples[1..]);
    Ok((full, samples))
}

pub fn validate(data: &ScatteringData) -> ValidationReport {
    let r = &data.reflection;
    let k = r.grid.points();
    let mut checks = Vec::new();

    let im0 = r.samples[0].im.abs();
    checks.push(CheckOutcome {
        name: "hermitian_symmetry",
        passed: im0 <= IMAG_AT_ZERO_TOL,
        margin: IMAG_AT_ZERO_TOL - im0,
    });

    let off_zero = r.samples[1..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let at_zero = r.samples[0].norm();
    let finite = r.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    checks.push(CheckOutcome {
        name: "modulus_below_one",
        passed: finite && off_zero < 1.0 && at_zero <= 1.0 + 1e-12,
        margin: 1.0 - off_zero.max(at_zero),
    });

    // `k |r(k)|` on the outer half of the grid may not grow past twice
    // its inner-half maximum.
    let half = k.len() / 2;
    let scaled: Vec<f64> = k.iter().zip(&r.samples).map(|(k, v)| k * v.norm()).collect();
    let inner = scaled[..half].iter().cloned().fold(0.0, f64::max);
    let outer = scaled[half..].iter().cloned().fold(0.0, f64::max);
    let bound = 2.0 * inner.max(1e-8);
    checks.push(CheckOutcome { name: "tail_decay", passed: outer <= bound, margin: bound - outer });

    let ordering_gap = data
        .bound_states
        .windows(2)
        .map(|w| w[0].kappa - w[1].kappa)
        .fold(f64::INFINITY, f64::min);
    let min_kappa = data.bound_states.iter().map(|b| b.kappa).fold(f64::INFINITY, f64::min);
    let margin = ordering_gap.min(min_kappa);
    checks.push(CheckOutcome {
        name: "kappa_ordering",
        passed: margin > 0.0,
        margin: if margin.is_finite() { margin } else { 0.0 },
    });

    let min_c = data.bound_states.iter().map(|b| b.c).fold(f64::INFINITY, f64::min);
    checks.push(CheckOutcome {
        name: "norming_positive",
        passed: min_c > 0.0,
        margin: if min_c.is_finite() { min_c } else { 0.0 },
    });

    let proxy = if checks.iter().all(|c| c.passed) { b_integrability_proxy(data) } else { f64::NAN };
    checks.push(CheckOutcome {
        name: "b_integrability_proxy",
        passed: !proxy.is_nan() && proxy.is_finite(),
        margin: proxy,
    });

    ValidationReport { checks }
}

/// `∫ (1+|x|) |B'(x)| dx` over a truncated window, with
/// `B(x) = ∫ (r/t) e^{ikx} dk`. Samples with `|t| < 1e-3` are dropped.
/// Informational only: the truncated value cannot decide integrability.
fn b_integrability_proxy(data: &ScatteringData) -> f64 {
    let compute = || -> Result<f64> {
        let t = data.transmission_on_grid()?;
        let (_, r_full) = extend_hermitian(&data.reflection)?;
        let ratio: Vec<Complex64> = r_full
            .iter()
            .zip(&t.samples)
            .map(|(r, t)| if t.norm() < 1e-3 { Complex64::new(0.0, 0.0) } else { r / t })
            .collect();
        let x_max = (numerics::OSCILLATION_BOUND / t.grid.spacing()).min(50.0);
        let xs = Grid::uniform(-x_max, x_max, 401, GridKind::Spatial)?;
        let weights = QuadratureRule::for_grid(&t.grid);
        let b: Vec<f64> = xs
            .points()
            .iter()
            .map(|&x| 2.0 * PI * numerics::fourier_sum(&ratio, t.grid.points(), weights.weights(), x).re)
            .collect();
        let db = derivative_samples(&b, &xs)?;
        let integrand: Vec<f64> = xs.points().iter().zip(&db).map(|(x, d)| (1.0 + x.abs()) * d.abs()).collect();
        integrate(&integrand, &QuadratureRule::for_grid(&xs))
    };
    compute().unwrap_or(f64::NAN)
}

/// The `{"k", "r_re", "r_im", "bound_states"}` JSON layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringDocument {
    pub k: Vec<f64>,
    pub r_re: Vec<f64>,
    pub r_im: Vec<f64>,
    pub bound_states: Vec<BoundState>,
}

impl From<&ScatteringData> for ScatteringDocument {
    fn from(data: &ScatteringData) -> Self {
        let r = &data.reflection;
        ScatteringDocument {
            k: r.grid.points().to_vec(),
            r_re: r.samples.iter().map(|v| v.re).collect(),
            r_im: r.samples.iter().map(|v| v.im).collect(),
            bound_states: data.bound_states.clone(),
        }
    }
}

impl TryFrom<ScatteringDocument> for ScatteringData {
    type Error = Error;

    fn try_from(doc: ScatteringDocument) -> Result<Self> {
        for (name, len) in [("r_re", doc.r_re.len()), ("r_im", doc.r_im.len())] {
            if len != doc.k.len() {
                return Err(Error::Validation(format!(
                    "array {name} has {len} entries but k has {}",
                    doc.k.len()
                )));
            }
        }
        let grid = Grid::from_points(doc.k, GridKind::Momentum)?;
        let samples = doc.r_re.iter().zip(&doc.r_im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        Ok(ScatteringData::new(ReflectionAmplitude::new(grid, samples)?, doc.bound_states))
    }
}

impl ScatteringData {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScatteringDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScatteringDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}
