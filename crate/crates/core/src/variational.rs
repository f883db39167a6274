//! Functional derivatives of `K`, `V` and `ψ` with respect to the
//! reflection amplitude, and a finite-difference harness that checks them
//! against full re-inversions.
//!
//! The independent variables are `r(k)` for `k ≥ 0`. A perturbation `δr`
//! of those modes also moves `r(-k) = r*(k)`, so a first-order change of
//! any real functional `Q` reads
//! `δQ = ∫₀^∞ [δQ/δr(k) δr(k) + δQ/δr*(k) δr*(k)] dk`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{Convention, SampledPotential, WaveField};
use crate::glm::{reconstruct_potential, reconstruct_wavefunction, solve_glm, GlmConfig, TransformationKernel};
use crate::numerics::{cumulative_from_right, derivative_samples, Grid, QuadratureRule};
use crate::scattering_data::{ReflectionAmplitude, ScatteringData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    DkDr,
    DkDrstar,
    DvDrstar,
    DpsiDrstar,
    DpsiDr,
    DnDr,
    DrDv,
}

/// Samples over the spatial grid for one momentum `k`, and for
/// `δψ/δr*` also the perturbed mode `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeSlice {
    pub k: f64,
    pub q: Option<f64>,
    pub values: Vec<Complex64>,
    pub near_resonant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeField {
    pub kind: DerivativeKind,
    pub grid: Grid,
    pub slices: Vec<DerivativeSlice>,
}

/// `δN(a, b)/δr(k) = -(1/2π) e^{ik(a+b)}`.
pub fn dn_dr(k: f64, a: f64, b: f64) -> Result<Complex64> {
    if k < 0.0 {
        return Err(Error::NegativeMomentum { k });
    }
    Ok(-Complex64::from_polar(1.0, k * (a + b)) / (2.0 * PI))
}

/// A solved inverse problem: the data, its GLM kernel and, on demand, the
/// reconstructed potential and wavefunctions.
#[derive(Clone, Debug)]
pub struct Background {
    data: ScatteringData,
    kernel: TransformationKernel,
}

impl Background {
    pub fn solve(data: ScatteringData, spatial: &Grid, config: &GlmConfig) -> Result<Self> {
        let kernel = solve_glm(&data, spatial, config)?;
        Ok(Background { data, kernel })
    }

    pub fn from_kernel(data: ScatteringData, kernel: TransformationKernel) -> Self {
        Background { data, kernel }
    }

    pub fn data(&self) -> &ScatteringData {
        &self.data
    }

    pub fn kernel(&self) -> &TransformationKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.spatial_grid()
    }

    pub fn potential(&self) -> Result<SampledPotential> {
        reconstruct_potential(&self.kernel)
    }

    /// `ψ(·, k)` from the transformation kernel for each requested momentum.
    pub fn wavefield(&self, momenta: &[f64]) -> Result<WaveField> {
        let values = momenta
            .par_iter()
            .map(|&k| reconstruct_wavefunction(&self.kernel, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(WaveField {
            grid: self.grid().clone(),
            momenta: momenta.to_vec(),
            values,
            convention: Convention::PsiRightDecaying,
        })
    }
}

fn psi_at(field: &WaveField, k: f64) -> Result<&[Complex64]> {
    field
        .at_momentum(k)
        .ok_or_else(|| Error::InvalidArgument(format!("no wavefunction sampled at k = {k}")))
}

fn spatial_index(grid: &Grid, x: f64) -> Result<usize> {
    grid.index_of(x).ok_or(Error::OutOfRange { value: x, min: grid.min(), max: grid.max() })
}

/// `ψ(y_j) + ∫_x^{y_j} ψ(z) K(z, y_j) dz` for every grid point `y_j ≥ x`,
/// with `x` the grid point `i`.
fn dressed_row(kernel: &TransformationKernel, psi: &[Complex64], i: usize) -> Vec<Complex64> {
    let h = kernel.spatial_grid().spacing();
    let n = psi.len();
    (i..n)
        .map(|j| {
            let m = j - i + 1;
            if m == 1 {
                return psi[j];
            }
            let w = QuadratureRule::gregory(m, h);
            let integral: Complex64 =
                (i..=j).zip(w.weights()).map(|(z, &wz)| psi[z] * (kernel.row(z)[j - z] * wz)).sum();
            psi[j] + integral
        })
        .collect()
}

/// `δK(x, y)/δr*(k) = -(1/2π) (ψ(y) + ∫_x^y ψ(z) K(z, y) dz) ψ(x)`, with
/// `x` and `y` on the spatial grid.
pub fn dk_drstar(background: &Background, x: f64, y: f64, k: f64) -> Result<Complex64> {
    let row = dk_drstar_row(background, x, k)?;
    let grid = background.grid();
    let (i, j) = (spatial_index(grid, x)?, spatial_index(grid, y)?);
    if j < i {
        return Err(Error::InvalidArgument(format!("y = {y} lies below x = {x}")));
    }
    Ok(row[j - i])
}

/// `δK(x, y)/δr(k)`, the conjugate of [`dk_drstar`] since `K` is real.
pub fn dk_dr(background: &Background, x: f64, y: f64, k: f64) -> Result<Complex64> {
    dk_drstar(background, x, y, k).map(|v| v.conj())
}

/// [`dk_drstar`] for all grid points `y ≥ x`.
pub fn dk_drstar_row(background: &Background, x: f64, k: f64) -> Result<Vec<Complex64>> {
    let i = spatial_index(background.grid(), x)?;
    let psi = reconstruct_wavefunction(background.kernel(), k)?;
    Ok(dk_drstar_row_with(background.kernel(), &psi, i))
}

fn dk_drstar_row_with(kernel: &TransformationKernel, psi: &[Complex64], i: usize) -> Vec<Complex64> {
    let scale = -psi[i] / (2.0 * PI);
    dressed_row(kernel, psi, i).into_iter().map(|v| v * scale).collect()
}

/// `δV(x)/δr*(k) = (1/π) d/dx ψ²(x, k)`.
pub fn dv_drstar(psi_field: &WaveField, k: f64) -> Result<Vec<Complex64>> {
    let psi = psi_at(psi_field, k)?;
    dv_drstar_from(psi, &psi_field.grid)
}

fn dv_drstar_from(psi: &[Complex64], grid: &Grid) -> Result<Vec<Complex64>> {
    let sq: Vec<Complex64> = psi.iter().map(|p| p * p).collect();
    Ok(derivative_samples(&sq, grid)?.into_iter().map(|v| v / PI).collect())
}

/// [`dv_drstar`] for every momentum of the field.
pub fn dv_drstar_field(psi_field: &WaveField) -> Result<DerivativeField> {
    let slices = psi_field
        .momenta
        .iter()
        .zip(&psi_field.values)
        .map(|(&k, psi)| {
            Ok(DerivativeSlice { k, q: None, values: dv_drstar_from(psi, &psi_field.grid)?, near_resonant: false })
        })
        .collect::<Result<_>>()?;
    Ok(DerivativeField { kind: DerivativeKind::DvDrstar, grid: psi_field.grid.clone(), slices })
}

/// One evaluation of `δψ/δr*` with its resonance flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiDerivative {
    pub value: Complex64,
    pub near_resonant: bool,
}

/// `∫_X^∞ e^{-isz} dz` with an Abel cutoff, `e^{-isX}/(is)`.
fn oscillatory_tail(s: f64, end: f64) -> Result<Complex64> {
    if s == 0.0 {
        return Err(Error::InvalidArgument("resonant mode: k + q = 0 has no regularised value".into()));
    }
    Ok(Complex64::from_polar(1.0, -s * end) / Complex64::new(0.0, s))
}

fn is_near_resonant(s: f64, x: f64, end: f64) -> bool {
    s.abs() < 3.0 / (end - x).max(f64::MIN_POSITIVE)
}

/// `δψ(x, k)/δr*(q) = -(1/2π) (∫_x^∞ ψ(z, q) ψ(z, k) dz) ψ(x, q)`.
///
/// The integral runs over the grid and continues past its end with the
/// free asymptotics `e^{-i(k+q)z}`. Near `k + q = 0` the value is
/// dominated by the cutoff and the result is flagged.
pub fn dpsi_drstar(psi_field: &WaveField, x: f64, k: f64, q: f64) -> Result<PsiDerivative> {
    let grid = &psi_field.grid;
    let i = spatial_index(grid, x)?;
    let (pk, pq) = (psi_at(psi_field, k)?, psi_at(psi_field, q)?);
    let end = grid.max();
    let s = k + q;
    let product: Vec<Complex64> = pk[i..].iter().zip(&pq[i..]).map(|(a, b)| a * b).collect();
    let w = QuadratureRule::gregory(product.len(), grid.spacing());
    let body: Complex64 = product.iter().zip(w.weights()).map(|(&p, &wz)| p * wz).sum();
    let integral = if i + 1 == grid.len() { Complex64::new(0.0, 0.0) } else { body + oscillatory_tail(s, end)? };
    Ok(PsiDerivative { value: -integral * pq[i] / (2.0 * PI), near_resonant: is_near_resonant(s, x, end) })
}

/// `δψ(x, k)/δr(q)`: the derivative with respect to the mode `-q`, which
/// uses `ψ(z, -q) = ψ*(z, q)` and is resonant near `q = k`.
pub fn dpsi_dr(psi_field: &WaveField, x: f64, k: f64, q: f64) -> Result<PsiDerivative> {
    let mut mirrored = psi_field.clone();
    mirrored.momenta.push(-q);
    mirrored.values.push(psi_at(psi_field, q)?.iter().map(|p| p.conj()).collect());
    dpsi_drstar(&mirrored, x, k, -q)
}

/// `δψ(x, k)/δr*(q)` (or `δψ/δr` with `conjugate_mode`) over the whole
/// grid, as one derivative slice.
pub fn dpsi_profile(psi_k: &[Complex64], psi_q: &[Complex64], grid: &Grid, k: f64, q: f64, conjugate_mode: bool) -> Result<DerivativeSlice> {
    let sign = if conjugate_mode { -1.0 } else { 1.0 };
    let mode = |p: &Complex64| if conjugate_mode { p.conj() } else { *p };
    let product: Vec<Complex64> = psi_k.iter().zip(psi_q).map(|(a, b)| a * mode(b)).collect();
    let end = grid.max();
    let s = k + sign * q;
    let tail = oscillatory_tail(s, end)?;
    let cumulative = cumulative_from_right(&product, grid.spacing())?;
    let n = grid.len();
    let values = cumulative
        .iter()
        .zip(psi_q)
        .enumerate()
        .map(|(i, (c, p))| {
            let integral = if i + 1 == n { Complex64::new(0.0, 0.0) } else { c + tail };
            -integral * mode(p) / (2.0 * PI)
        })
        .collect();
    Ok(DerivativeSlice { k, q: Some(q), values, near_resonant: is_near_resonant(s, grid.min(), end) })
}

/// Gaussian perturbation `δr(k) = amplitude · exp(-(k - center)²/width²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: Complex64,
}

impl Bump {
    pub fn new(center: f64, width: f64, amplitude: Complex64) -> Self {
        Bump { center, width, amplitude }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Bump { amplitude: self.amplitude * factor, ..*self }
    }

    /// Zero beyond six widths, so the perturbation vanishes at `k = 0`.
    pub fn at(&self, k: f64) -> Complex64 {
        let u = (k - self.center) / self.width;
        if u.abs() > 6.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitude * (-u * u).exp()
        }
    }

    fn check(&self, data: &ScatteringData) -> Result<()> {
        let inadmissible = |why: String| Err(Error::InadmissiblePerturbation(why));
        if !(self.width > 0.0) {
            return inadmissible(format!("bump width {} is not positive", self.width));
        }
        if self.center - 6.0 * self.width <= 0.0 {
            return inadmissible(format!("bump at {} with width {} reaches k = 0", self.center, self.width));
        }
        if self.center + 6.0 * self.width > data.reflection().k_max() {
            return inadmissible(format!("bump at {} with width {} leaves the momentum grid", self.center, self.width));
        }
        Ok(())
    }

    /// The data with `r + δr`, refusing perturbations that break `|r| < 1`.
    pub fn apply(&self, data: &ScatteringData) -> Result<ScatteringData> {
        self.check(data)?;
        let r = data.reflection();
        let samples: Vec<Complex64> = r.grid().points().iter().zip(r.samples()).map(|(&k, &v)| v + self.at(k)).collect();
        if let Some((k, v)) = r.grid().points().iter().zip(&samples).find(|(_, v)| v.norm() >= 1.0) {
            return Err(Error::InadmissiblePerturbation(format!("|r + δr| = {} at k = {k}", v.norm())));
        }
        Ok(data.with_reflection(ReflectionAmplitude::new(r.grid().clone(), samples)?))
    }

    /// Momenta of the data grid inside the bump support, with the matching
    /// quadrature weights and `δr` samples.
    fn support(&self, data: &ScatteringData) -> (Vec<f64>, Vec<f64>, Vec<Complex64>) {
        let grid = data.reflection().grid();
        let w = QuadratureRule::for_grid(grid);
        let mut out = (Vec::new(), Vec::new(), Vec::new());
        for (&k, &wk) in grid.points().iter().zip(w.weights()) {
            let d = self.at(k);
            if d.norm() > 0.0 {
                out.0.push(k);
                out.1.push(wk);
                out.2.push(d);
            }
        }
        out
    }
}

/// What the finite-difference harness compares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "target")]
pub enum FdTarget {
    /// `K(x, ·)` along the row at `x`.
    Kernel { x: f64 },
    /// `V` over `|x| ≤ half_width`.
    Potential { half_width: f64 },
    /// `ψ(·, k)` over `|x| ≤ half_width`.
    Wavefunction { k: f64, half_width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdReport {
    pub target: FdTarget,
    pub bump: Bump,
    /// `‖Δ - prediction‖₂ / ‖prediction‖₂`, or 0 when both vanish.
    pub relative_error: f64,
    pub difference_norm: f64,
    pub prediction_norm: f64,
    pub near_resonant: bool,
}

fn relative_l2(fd: &[Complex64], prediction: &[Complex64]) -> (f64, f64, f64) {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|a| a * a).sum::<f64>().sqrt();
    let diff = norm(&mut fd.iter().zip(prediction).map(|(a, b)| (a - b).norm()));
    let pn = norm(&mut prediction.iter().map(|v| v.norm()));
    let fdn = norm(&mut fd.iter().map(|v| v.norm()));
    let rel = if pn == 0.0 && diff == 0.0 { 0.0 } else { diff / pn };
    (rel, fdn, pn)
}

fn window(grid: &Grid, half_width: f64) -> std::ops::Range<usize> {
    let pts = grid.points();
    let lo = pts.iter().position(|&x| x >= -half_width - 1e-12).unwrap_or(pts.len());
    let hi = pts.iter().rposition(|&x| x <= half_width + 1e-12).map_or(lo, |j| j + 1);
    lo..hi.max(lo)
}

/// Perturbs `r` by `bump`, re-inverts, and compares the forward
/// difference of the target against the first-order prediction built from
/// the analytic derivatives.
pub fn finite_difference_harness(
    data: &ScatteringData,
    spatial: &Grid,
    config: &GlmConfig,
    bump: &Bump,
    target: FdTarget,
) -> Result<FdReport> {
    let perturbed = bump.apply(data)?;
    // δF(s) falls off like e^{-(width·s/2)²}; the y grid has to reach past
    // that decay or the re-inversion truncates the perturbation.
    let reach = 10.0 / bump.width - spatial.min() - spatial.max();
    let config = GlmConfig { y_pad: Some(config.pad_for(data).max(reach)), ..*config };
    let base = Background::solve(data.clone(), spatial, &config)?;
    let moved = Background::solve(perturbed, spatial, &config)?;
    let (momenta, weights, dr) = bump.support(data);
    let field = base.wavefield(&momenta)?;
    let grid = base.grid();

    // ∫ [A δr + A* ... ] collapses to 2 Re ∫ A_* conj(δr) for real targets.
    let contract_real = |slices: &[Vec<Complex64>], len: usize| -> Vec<Complex64> {
        (0..len)
            .map(|p| {
                let s: Complex64 = slices.iter().zip(&weights).zip(&dr).map(|((a, &w), d)| a[p] * d.conj() * w).sum();
                Complex64::new(2.0 * s.re, 0.0)
            })
            .collect()
    };

    let (fd, prediction, near_resonant) = match target {
        FdTarget::Potential { half_width } => {
            let range = window(grid, half_width);
            let (v0, v1) = (base.potential()?, moved.potential()?);
            let fd: Vec<Complex64> =
                range.clone().map(|p| Complex64::new(v1.values()[p] - v0.values()[p], 0.0)).collect();
            let slices = field.values.iter().map(|psi| dv_drstar_from(psi, grid)).collect::<Result<Vec<_>>>()?;
            let prediction = contract_real(&slices, grid.len())[range].to_vec();
            (fd, prediction, false)
        }
        FdTarget::Kernel { x } => {
            let i = spatial_index(grid, x)?;
            let n = grid.len() - i;
            let fd: Vec<Complex64> = base.kernel().row(i)[..n]
                .iter()
                .zip(&moved.kernel().row(i)[..n])
                .map(|(a, b)| Complex64::new(b - a, 0.0))
                .collect();
            let slices: Vec<Vec<Complex64>> =
                field.values.par_iter().map(|psi| dk_drstar_row_with(base.kernel(), psi, i)).collect();
            (fd, contract_real(&slices, n), false)
        }
        FdTarget::Wavefunction { k, half_width } => {
            let range = window(grid, half_width);
            let psi0 = reconstruct_wavefunction(base.kernel(), k)?;
            let psi1 = reconstruct_wavefunction(moved.kernel(), k)?;
            let fd: Vec<Complex64> = range.clone().map(|p| psi1[p] - psi0[p]).collect();
            let mut prediction = vec![Complex64::new(0.0, 0.0); grid.len()];
            let mut near = false;
            for (((&q, psi_q), &w), d) in momenta.iter().zip(&field.values).zip(&weights).zip(&dr) {
                let star = dpsi_profile(&psi0, psi_q, grid, k, q, false)?;
                let plain = dpsi_profile(&psi0, psi_q, grid, k, q, true)?;
                near |= star.near_resonant || plain.near_resonant;
                for (p, out) in prediction.iter_mut().enumerate() {
                    *out += (plain.values[p] * d + star.values[p] * d.conj()) * w;
                }
            }
            (fd, prediction[range].to_vec(), near)
        }
    };
    let (relative_error, difference_norm, prediction_norm) = relative_l2(&fd, &prediction);
    Ok(FdReport { target, bump: *bump, relative_error, difference_norm, prediction_norm, near_resonant })
}
