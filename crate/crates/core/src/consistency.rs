//! Numerical checks of the trace identity and of the distributional
//! identities satisfied by the scattering fields. Every delta-function
//! statement is tested in smeared form against a Gaussian in momentum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forward::{solve_scattering, SampledPotential, ScatteringSlice};
use crate::numerics::{derivative_samples, Grid, GridKind, QuadratureRule};
use crate::scattering_data::{Dispersion, ScatteringData};

/// Normalised Gaussian `U(k) = exp(-(k-c)²/2σ²) / (σ√2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmearingFunction {
    pub center: f64,
    pub width: f64,
}

impl SmearingFunction {
    pub const CONTAINMENT: f64 = 6.0;

    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(Error::InvalidArgument(format!("smearing width must be positive, got {width}")));
        }
        Ok(SmearingFunction { center, width })
    }

    pub fn value(&self, k: f64) -> f64 {
        let u = (k - self.center) / self.width;
        (-0.5 * u * u).exp() / (self.width * (2.0 * PI).sqrt())
    }

    pub fn lower(&self) -> f64 {
        self.center - Self::CONTAINMENT * self.width
    }

    pub fn upper(&self) -> f64 {
        self.center + Self::CONTAINMENT * self.width
    }

    pub fn is_contained(&self, min: f64, max: f64) -> bool {
        self.lower() >= min && self.upper() <= max
    }

    /// Odd-sized uniform grid over the `6σ` support with spacing at most
    /// `max_spacing`, and Simpson weights already multiplied by `U`.
    pub fn nodes(&self, max_spacing: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let span = self.upper() - self.lower();
        let mut n = (span / max_spacing).ceil() as usize + 1;
        n = n.max(crate::numerics::MIN_GRID_POINTS + 1) | 1;
        let grid = Grid::uniform(self.lower(), self.upper(), n, GridKind::Momentum)?;
        let rule = QuadratureRule::simpson(n, grid.spacing());
        let weights = grid.points().iter().zip(rule.weights()).map(|(&k, &w)| w * self.value(k)).collect();
        Ok((grid.points().to_vec(), weights))
    }

    /// `∫ U(k) f(k) dk`, evaluating `f` in parallel on the nodes.
    pub fn smear<F>(&self, max_spacing: f64, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> Result<Complex64> + Sync,
    {
        let (nodes, weights) = self.nodes(max_spacing)?;
        let values = nodes.par_iter().map(|&k| f(k)).collect::<Result<Vec<_>>>()?;
        Ok(values.iter().zip(&weights).map(|(v, &w)| v * w).sum())
    }
}

/// A named comparison, serialised into the check report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub parameters: Value,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub pass: bool,
}

impl CheckReport {
    /// `residual = |lhs - rhs| / scale`, passing when below `tolerance`.
    pub fn compare(name: &str, parameters: Value, lhs: Complex64, rhs: Complex64, scale: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).norm() / scale;
        CheckReport { check_name: name.to_string(), parameters, lhs, rhs, residual, pass: residual <= tolerance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceDefect {
    /// `∫ V dx`.
    pub potential_integral: f64,
    /// `-(2/π) ∫₀^∞ log(1 - |r|²) dk - 4 Σ κ`.
    pub spectral_side: f64,
    pub defect: f64,
}

/// Lowest trace identity, relative to `max(1, |∫V|)`.
pub fn trace_identity_defect(v: &SampledPotential, data: &ScatteringData) -> Result<TraceDefect> {
    let potential_integral = v.integral();
    let kappas: f64 = data.bound_states().iter().map(|b| b.kappa).sum();
    let spectral_side = -2.0 / PI * data.log_transmission_integral()? - 4.0 * kappas;
    let defect = (potential_integral - spectral_side).abs() / potential_integral.abs().max(1.0);
    Ok(TraceDefect { potential_integral, spectral_side, defect })
}

/// Momentum spacing that resolves oscillations like `e^{2ikL}`.
fn resolving_spacing(l: f64, width: f64) -> f64 {
    (PI / (8.0 * l)).min(width / 10.0)
}

/// Both sides of the integrated `δV/δr*` identity: the smeared boundary
/// term `(1/π)[ψ²(x,k)]_{-L}^{L}` built from the asymptotic forms of `ψ`,
/// and the smeared `(2/π) r(k) / |t(k)|²`.
pub fn integrated_dvdr_check(data: &ScatteringData, l: f64, smear: &SmearingFunction) -> Result<(Complex64, Complex64)> {
    ensure_inside(smear, 0.0, data.reflection().k_max())?;
    let dispersion = Dispersion::new(data)?;
    let h = resolving_spacing(l, smear.width);
    let rt = |k: f64| -> Result<(Complex64, Complex64)> { Ok((data.reflection().at(k)?, dispersion.transmission(k)?)) };
    let lhs = smear.smear(h, |k| {
        let (r, t) = rt(k)?;
        let right = Complex64::from_polar(1.0, -k * l);
        let left = Complex64::from_polar(1.0, k * l) / t.conj() - r / t * Complex64::from_polar(1.0, -k * l);
        Ok((right * right - left * left) / PI)
    })?;
    let rhs = smear.smear(h, |k| {
        let (r, t) = rt(k)?;
        Ok(r * (2.0 / PI) / t.norm_sqr())
    })?;
    Ok((lhs, rhs))
}

fn ensure_inside(smear: &SmearingFunction, min: f64, max: f64) -> Result<()> {
    if smear.is_contained(min, max) {
        Ok(())
    } else {
        Err(Error::OutOfRange { value: smear.center, min: min + 6.0 * smear.width, max: max - 6.0 * smear.width })
    }
}

/// Forward fields of one potential on `[-L, L]`, reused across many
/// momenta.
#[derive(Clone, Debug)]
pub struct FieldProbe {
    potential: SampledPotential,
}

impl FieldProbe {
    /// Zero-pads `v` to cover `[-L, L]` and keeps that window only.
    pub fn new(v: &SampledPotential, l: f64) -> Result<Self> {
        let grid = v.grid();
        if !(l > 0.0) {
            return Err(Error::InvalidArgument(format!("half-width L must be positive, got {l}")));
        }
        if grid.min() < -l || grid.max() > l {
            let inside: Vec<f64> = grid.points().iter().copied().filter(|x| x.abs() <= l + 1e-9).collect();
            if inside.len() < crate::numerics::MIN_GRID_POINTS {
                return Err(Error::TooFewPoints { needed: crate::numerics::MIN_GRID_POINTS, got: inside.len() });
            }
            let lo = grid.nearest_index(inside[0]);
            let values = v.values()[lo..lo + inside.len()].to_vec();
            let cut = SampledPotential::new(Grid::from_points(inside, GridKind::Spatial)?, values)?;
            return Ok(FieldProbe { potential: cut.zero_padded(l)? });
        }
        Ok(FieldProbe { potential: v.zero_padded(l)? })
    }

    pub fn potential(&self) -> &SampledPotential {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn half_width(&self) -> f64 {
        self.grid().max()
    }

    pub fn solve(&self, k: f64) -> Result<ScatteringSlice> {
        solve_scattering(&self.potential, k)
    }

    /// `ψ(·, q)` for either sign of `q`, using `ψ(x, -q) = ψ*(x, q)`.
    pub fn psi(&self, q: f64) -> Result<Vec<Complex64>> {
        let slice = self.solve(q.abs())?;
        Ok(if q < 0.0 { slice.psi.iter().map(|p| p.conj()).collect() } else { slice.psi })
    }

    /// `f'` at sample `b` from the two samples `a`, `b` next to an edge,
    /// where the fields are exact discrete plane waves
    /// `A e^{-iκx} + B e^{iκx}` of the Numerov recurrence.
    fn edge_derivative(&self, f: &[Complex64], k: f64, a: usize, b: usize) -> Result<Complex64> {
        let h = self.grid().spacing();
        let x = self.grid().points();
        let s = h * h * (self.potential.values()[b] - k * k) / 12.0;
        let c = (1.0 + 5.0 * s) / (1.0 - s);
        if !(-1.0..1.0).contains(&c) {
            return Err(Error::MatchingDegeneracy { k, amplitude: 0.0 });
        }
        let kappa = c.acos() / h;
        let e = |sign: f64, xx: f64| Complex64::from_polar(1.0, sign * kappa * xx);
        let det = Complex64::new(0.0, 2.0 * (kappa * (x[b] - x[a])).sin());
        let amp_minus = (f[a] * e(1.0, x[b]) - f[b] * e(1.0, x[a])) / det;
        let amp_plus = (f[b] * e(-1.0, x[a]) - f[a] * e(-1.0, x[b])) / det;
        Ok(Complex64::new(0.0, kappa) * (amp_plus * e(1.0, x[b]) - amp_minus * e(-1.0, x[b])))
    }

    fn integrate(&self, f: &[Complex64]) -> Complex64 {
        let rule = QuadratureRule::gregory(f.len(), self.grid().spacing());
        f.iter().zip(rule.weights()).map(|(v, &w)| v * w).sum()
    }
}

/// `Γ(k, q) = (t²(k) / 2πik) ∫_{-L}^{L} φ²(x, k) d/dx ψ*²(x, q) dx`.
pub fn gamma_kernel(v: &SampledPotential, k: f64, q: f64, l: f64) -> Result<Complex64> {
    let probe = FieldProbe::new(v, l)?;
    let base = probe.solve(k)?;
    gamma_with(&probe, &base, q)
}

fn gamma_with(probe: &FieldProbe, base: &ScatteringSlice, q: f64) -> Result<Complex64> {
    if base.k == 0.0 || q == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    let psi_q = probe.psi(q)?;
    let sq: Vec<Complex64> = psi_q.iter().map(|p| (p * p).conj()).collect();
    let d = derivative_samples(&sq, probe.grid())?;
    let integrand: Vec<Complex64> = base.phi.iter().zip(&d).map(|(p, dv)| p * p * dv).collect();
    let prefactor = base.t * base.t / Complex64::new(0.0, 2.0 * PI * base.k);
    Ok(prefactor * probe.integrate(&integrand))
}

/// `∫ Γ(k, q) U(q) dq`, to be compared with `U(k)`.
pub fn smeared_gamma(v: &SampledPotential, k: f64, l: f64, smear: &SmearingFunction) -> Result<Complex64> {
    if smear.lower() <= 0.0 {
        return Err(Error::OutOfRange { value: smear.center, min: 6.0 * smear.width, max: f64::INFINITY });
    }
    let probe = FieldProbe::new(v, l)?;
    let base = probe.solve(k)?;
    smear.smear(resolving_spacing(l, smear.width), |q| gamma_with(&probe, &base, q))
}

/// `Γ(k, k - ε)` for each `ε`, next to the free profile `sin(2εL)/(πε)`.
pub fn gamma_profile(v: &SampledPotential, k: f64, l: f64, eps: &[f64]) -> Result<Vec<(f64, Complex64, f64)>> {
    let probe = FieldProbe::new(v, l)?;
    let base = probe.solve(k)?;
    let l = probe.half_width();
    eps.par_iter()
        .map(|&e| {
            let free = if e == 0.0 { 2.0 * l / PI } else { (2.0 * e * l).sin() / (PI * e) };
            Ok((e, gamma_with(&probe, &base, k - e)?, free))
        })
        .collect()
}

/// Log-spaced `ε ∈ [1/(4L), 20/L]` for near-diagonal scans.
pub fn near_diagonal_offsets(l: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = ((0.25 / l).ln(), (20.0 / l).ln());
    (0..count).map(|j| (lo + (hi - lo) * j as f64 / (count.max(2) - 1) as f64).exp()).collect()
}

/// `∫_{-L}^{L} ψ(z, q) ψ(z, k) dz` by quadrature; either momentum may be
/// negative.
pub fn orthogonality_integral(v: &SampledPotential, k: f64, q: f64, l: f64) -> Result<Complex64> {
    let probe = FieldProbe::new(v, l)?;
    let (pk, pq) = (probe.psi(k)?, probe.psi(q)?);
    let product: Vec<Complex64> = pk.iter().zip(&pq).map(|(a, b)| a * b).collect();
    Ok(probe.integrate(&product))
}

/// The same integral from the Wronskian,
/// `[ψ_q ψ_k' - ψ_q' ψ_k]_{-L}^{L} / (q² - k²)`.
pub fn orthogonality_wronskian(v: &SampledPotential, k: f64, q: f64, l: f64) -> Result<Complex64> {
    if (k * k - q * q).abs() < 1e-12 {
        return Err(Error::InvalidArgument("Wronskian route is singular at q = ±k".into()));
    }
    let probe = FieldProbe::new(v, l)?;
    let (pk, pq) = (probe.psi(k)?, probe.psi(q)?);
    let n = pk.len();
    let w = |a: usize, b: usize| -> Result<Complex64> {
        let (dk, dq) = (probe.edge_derivative(&pk, k, a, b)?, probe.edge_derivative(&pq, q, a, b)?);
        Ok(pq[b] * dk - dq * pk[b])
    };
    Ok((w(n - 2, n - 1)? - w(1, 0)?) / (q * q - k * k))
}

/// Smeared delta coefficients of the orthogonality integral next to
/// their expected values `2π/|t|²` (at `q ≈ -k`) and `-2πr/|t|²` (at
/// `q ≈ k`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrthogonalityCoefficients {
    pub at_minus_k: Complex64,
    pub at_plus_k: Complex64,
    pub expected_minus: Complex64,
    pub expected_plus: Complex64,
}

pub fn smeared_orthogonality(v: &SampledPotential, k: f64, l: f64, width: f64) -> Result<OrthogonalityCoefficients> {
    if k - 6.0 * width <= 0.0 {
        return Err(Error::OutOfRange { value: k, min: 6.0 * width, max: f64::INFINITY });
    }
    let probe = FieldProbe::new(v, l)?;
    let base = probe.solve(k)?;
    let pk = &base.psi;
    let h = resolving_spacing(probe.half_width(), width);
    let coefficient = |center: f64| -> Result<Complex64> {
        let smear = SmearingFunction::new(center, width)?;
        let total = smear.smear(h, |q| {
            let pq = probe.psi(q)?;
            let product: Vec<Complex64> = pk.iter().zip(&pq).map(|(a, b)| a * b).collect();
            Ok(probe.integrate(&product))
        })?;
        Ok(total / smear.value(center))
    };
    let scale = 2.0 * PI / base.t.norm_sqr();
    Ok(OrthogonalityCoefficients {
        at_minus_k: coefficient(-k)?,
        at_plus_k: coefficient(k)?,
        expected_minus: Complex64::new(scale, 0.0),
        expected_plus: -base.r * scale,
    })
}

/// Structure of `δ(1/t(k))/δr(p)`: equal delta coefficients at `p = ±k`
/// and an off-diagonal principal-value kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DtinvDecomposition {
    pub delta_minus_coeff: Complex64,
    pub delta_plus_coeff: Complex64,
    pub pv_part: Complex64,
}

pub fn dtinv_dr_decomposition(data: &ScatteringData, k: f64, p: f64) -> Result<DtinvDecomposition> {
    for m in [k, p] {
        if m == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        if m < 0.0 {
            return Err(Error::NegativeMomentum { k: m });
        }
    }
    if (p - k).abs() <= 1e-12 * k.max(1.0) {
        return Err(Error::InvalidArgument("the principal-value part is distributional at p = k".into()));
    }
    let dispersion = Dispersion::new(data)?;
    let (tk, tp) = (dispersion.transmission(k)?, dispersion.transmission(p)?);
    let ratio = data.reflection().at(p)?.conj() / tp.norm_sqr();
    let delta = ratio / (2.0 * tk);
    let pv_part = ratio / (Complex64::new(0.0, 2.0 * PI) * tk) * (1.0 / (p - k) - 1.0 / (p + k));
    Ok(DtinvDecomposition { delta_minus_coeff: delta, delta_plus_coeff: delta, pv_part })
}

/// `∫_{|ε| ≤ 10/L} sin(2εL)/(πε) dε`, which tends to `(2/π) Si(20)`.
pub fn delta_sequence_normalization(l: f64) -> Result<f64> {
    let n = 4001;
    let grid = Grid::uniform(-10.0 / l, 10.0 / l, n, GridKind::Momentum)?;
    let f: Vec<f64> = grid
        .points()
        .iter()
        .map(|&e| if e.abs() < 1e-300 { 2.0 * l / PI } else { (2.0 * e * l).sin() / (PI * e) })
        .collect();
    crate::numerics::integrate(&f, &QuadratureRule::for_grid(&grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::scattering_data;
    use crate::scattering_data::{BoundState, ReflectionAmplitude};
    use approx::assert_abs_diff_eq;

    fn grid(l: f64, h: f64) -> Grid {
        Grid::uniform(-l, l, (2.0 * l / h).round() as usize + 1, GridKind::Spatial).unwrap()
    }

    fn sech2(depth: f64) -> SampledPotential {
        SampledPotential::from_fn(grid(20.0, 0.05), |x| -depth / x.cosh().powi(2)).unwrap()
    }

    fn gaussian_well() -> SampledPotential {
        SampledPotential::from_fn(grid(20.0, 0.05), |x| -0.3 * (-x * x / 4.0).exp()).unwrap()
    }

    #[test]
    fn smearing_is_normalised() {
        let s = SmearingFunction::new(1.0, 0.1).unwrap();
        let total = s.smear(0.01, |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        assert_abs_diff_eq!(total.re, 1.0, epsilon = 1e-8);
        assert!(s.is_contained(0.0, 2.0));
        assert!(!s.is_contained(0.5, 2.0));
        assert!(SmearingFunction::new(0.0, 0.0).is_err());
    }

    #[test]
    fn trace_identity_examples() {
        let v = sech2(2.0);
        let data = ScatteringData::reflectionless(vec![BoundState::new(1.0, 2f64.sqrt())], 8.0, 81).unwrap();
        let d = trace_identity_defect(&v, &data).unwrap();
        assert_abs_diff_eq!(d.potential_integral, -4.0, epsilon = 1e-6);
        assert!(d.defect < 1e-4);

        let zero = SampledPotential::zero(grid(5.0, 0.05));
        let empty = ScatteringData::reflectionless(vec![], 8.0, 81).unwrap();
        assert_eq!(trace_identity_defect(&zero, &empty).unwrap().defect, 0.0);

        let well = gaussian_well();
        let data = scattering_data(&well, 10.0, 2001).unwrap();
        assert_eq!(data.bound_states().len(), 1);
        assert!(trace_identity_defect(&well, &data).unwrap().defect < 1e-3);
    }

    #[test]
    fn integrated_dvdr_examples() {
        let smear = SmearingFunction::new(1.0, 0.1).unwrap();
        let free = ScatteringData::reflectionless(vec![], 8.0, 801).unwrap();
        let (lhs, rhs) = integrated_dvdr_check(&free, 200.0, &smear).unwrap();
        assert!(lhs.norm() < 1e-6 && rhs.norm() < 1e-14);

        let data = scattering_data(&gaussian_well(), 8.0, 1601).unwrap();
        let (lhs, rhs) = integrated_dvdr_check(&data, 200.0, &smear).unwrap();
        assert!((lhs - rhs).norm() <= 0.02 * rhs.norm(), "{lhs} vs {rhs}");

        let short = |l| {
            let (a, b) = integrated_dvdr_check(&data, l, &smear).unwrap();
            (a - b).norm()
        };
        assert!(short(10.0) <= 0.5 * short(5.0));
    }

    #[test]
    fn integrated_dvdr_matches_field_boundary_terms() {
        let well = gaussian_well();
        let data = scattering_data(&well, 8.0, 1601).unwrap();
        let k = 0.9;
        let slice = solve_scattering(&well, k).unwrap();
        let n = slice.psi.len();
        let boundary = (slice.psi[n - 1].powi(2) - slice.psi[0].powi(2)) / PI;
        let t = data.transmission(k).unwrap();
        let r = data.reflection().at(k).unwrap();
        let l = 20.0;
        let left = Complex64::from_polar(1.0, k * l) / t.conj() - r / t * Complex64::from_polar(1.0, -k * l);
        let asymptotic = (Complex64::from_polar(1.0, -2.0 * k * l) - left * left) / PI;
        assert!((boundary - asymptotic).norm() < 1e-4);
    }

    #[test]
    fn gamma_free_values() {
        let zero = SampledPotential::zero(grid(10.0, 0.05));
        let (k, q) = (1.0, 0.7);
        let g = gamma_kernel(&zero, k, q, 10.0).unwrap();
        let expected = q / k * (2.0 * (k - q) * 10.0).sin() / (PI * (k - q));
        assert_abs_diff_eq!(g.re, expected, epsilon = 1e-5);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-5);
        assert!(matches!(gamma_kernel(&zero, 1.0, 0.0, 10.0), Err(Error::ZeroMomentum)));
    }

    #[test]
    fn gamma_is_a_delta_sequence() {
        let l = 200.0;
        let smear = SmearingFunction::new(1.0, 0.1).unwrap();
        let zero = SampledPotential::zero(grid(5.0, 0.05));
        let free = smeared_gamma(&zero, 1.0, l, &smear).unwrap();
        assert!((free.re - smear.value(1.0)).abs() <= 0.02 * smear.value(1.0), "{free}");
        let well = sech2(2.0);
        let bent = smeared_gamma(&well, 1.0, l, &smear).unwrap();
        assert!((bent - smear.value(1.0)).norm() <= 0.03 * smear.value(1.0), "{bent}");

        let profile = gamma_profile(&zero, 1.0, l, &[0.0]).unwrap();
        assert!((profile[0].1.re - 2.0 * l / PI).abs() <= 0.02 * 2.0 * l / PI);
        for (_, g, free) in gamma_profile(&zero, 1.0, l, &near_diagonal_offsets(l, 12)).unwrap() {
            assert!((g.re - free).abs() <= 0.02 * 2.0 * l / PI);
        }
    }

    #[test]
    fn orthogonality_free_and_wronskian() {
        let zero = SampledPotential::zero(grid(10.0, 0.05));
        let (k, q) = (1.0, 0.6);
        let o = orthogonality_integral(&zero, k, q, 10.0).unwrap();
        assert_abs_diff_eq!(o.re, 2.0 * ((k + q) * 10.0).sin() / (k + q), epsilon = 1e-6);
        assert_abs_diff_eq!(o.im, 0.0, epsilon = 1e-6);

        let well = SampledPotential::from_fn(grid(20.0, 0.025), |x| -2.0 / x.cosh().powi(2)).unwrap();
        for (k, q) in [(1.0, 0.6), (0.8, -1.7), (1.3, 2.1)] {
            let direct = orthogonality_integral(&well, k, q, 20.0).unwrap();
            let wronskian = orthogonality_wronskian(&well, k, q, 20.0).unwrap();
            assert!((direct - wronskian).norm() < 1e-6, "{direct} vs {wronskian}");
        }
        assert!(orthogonality_wronskian(&well, 1.0, -1.0, 20.0).is_err());
    }

    #[test]
    fn orthogonality_coefficients() {
        let zero = SampledPotential::zero(grid(5.0, 0.05));
        let c = smeared_orthogonality(&zero, 1.0, 200.0, 0.1).unwrap();
        assert!((c.at_minus_k - 2.0 * PI).norm() <= 0.03 * 2.0 * PI);
        assert!(c.at_plus_k.norm() <= 0.03 * 2.0 * PI);

        let c = smeared_orthogonality(&gaussian_well(), 1.0, 200.0, 0.1).unwrap();
        assert!((c.at_minus_k - c.expected_minus).norm() <= 0.03 * c.expected_minus.norm());
        assert!((c.at_plus_k - c.expected_plus).norm() <= 0.03 * c.expected_plus.norm());
    }

    #[test]
    fn dtinv_structure() {
        let free = ScatteringData::reflectionless(vec![], 8.0, 801).unwrap();
        let d = dtinv_dr_decomposition(&free, 1.0, 1.5).unwrap();
        assert_eq!(d.pv_part.norm() + d.delta_plus_coeff.norm(), 0.0);

        let r = ReflectionAmplitude::from_fn(8.0, 801, |k| Complex64::new(0.3 * (-k * k).exp(), 0.1 * k * (-k * k).exp())).unwrap();
        let data = ScatteringData::new(r, vec![]);
        let d = dtinv_dr_decomposition(&data, 1.0, 0.7).unwrap();
        assert_eq!(d.delta_minus_coeff, d.delta_plus_coeff);
        assert!(d.pv_part.norm() > 0.0);
        assert!(dtinv_dr_decomposition(&data, 1.0, 1.0).is_err());
        assert!(dtinv_dr_decomposition(&data, 1.0, -1.0).is_err());
    }

    /// Off the diagonal, `δψ(-L, k)/δr*(q)` carries `δ(1/t*(k))/δr*(q) e^{ikL}`,
    /// the conjugate of the principal-value kernel; a Hann-windowed
    /// projection over the left asymptotic region isolates it.
    #[test]
    fn dpsi_left_asymptotics_follow_dtinv() {
        use crate::forward::{solve_many, Convention, WaveField};
        use crate::variational::dpsi_profile;
        let well = SampledPotential::from_fn(grid(20.0, 0.05), |x| -0.3 * (-x * x / 4.0).exp()).unwrap().zero_padded(150.0).unwrap();
        let data = scattering_data(&gaussian_well(), 8.0, 1601).unwrap();
        let (k, q) = (1.0, 0.7);
        let fields = solve_many(&well, &[k, q], true).unwrap();
        let psi: WaveField = fields.psi.unwrap();
        assert_eq!(psi.convention, Convention::PsiRightDecaying);
        let d = dpsi_profile(&psi.values[0], &psi.values[1], &psi.grid, k, q, false).unwrap();
        let x = psi.grid.points();
        let (lo, hi) = (-140.0, -30.0);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut norm = 0.0;
        for (i, &xx) in x.iter().enumerate() {
            if xx < lo || xx > hi {
                continue;
            }
            let w = (PI * (xx - lo) / (hi - lo)).sin().powi(2);
            acc += d.values[i] * Complex64::from_polar(1.0, k * xx) * w;
            norm += w;
        }
        let projected = acc / norm;
        let expected = dtinv_dr_decomposition(&data, k, q).unwrap().pv_part.conj();
        assert!((projected - expected).norm() <= 0.05 * expected.norm(), "{projected} vs {expected}");
    }

    #[test]
    fn delta_sequence_is_normalised() {
        for l in [10.0, 200.0] {
            assert!((delta_sequence_normalization(l).unwrap() - 1.0).abs() <= 0.02);
        }
    }
}
