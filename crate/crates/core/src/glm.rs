//! The Gelfand-Levitan-Marchenko equation
//! `K(x,y) + F(x+y) + ∫_x^∞ K(x,z) F(z+y) dz = 0`
//! and the reconstruction of `V` and `ψ` from its solution.
//!
//! # Solver layout
//!
//! `F` is split into the continuum part `F_c` (from `r`) and the rank-`N`
//! bound-state part `Σ c² e^{-κs}`. The continuum Nyström matrices for all
//! rows are trailing blocks of one symmetric matrix
//! `S = I + W^{1/2} H W^{1/2}` with `H_pq = F_c(y_p + y_q)`. Factoring `S`
//! once as `U Uᵀ` with `U` upper triangular gives every trailing block as
//! `S[i.., i..] = U[i.., i..] U[i.., i..]ᵀ`. The row-specific start
//! correction of the quadrature weights is a rank-3 update and the bound
//! states a rank-`N` update, both handled by Woodbury identities. The
//! bound-state system is rescaled so it stays well conditioned for
//! `x → -∞`, where `e^{-κx}` overflows.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::SampledPotential;
use crate::numerics::{
    check_hermitian_residue, check_oscillation, derivative_samples, fourier_sum, Grid, GridKind,
    QuadratureRule,
};
use crate::scattering_data::{extend_hermitian, BoundState, ScatteringData};

pub const DEFAULT_COND_THRESHOLD: f64 = 1e12;

/// `F(s)` on a uniform `s` grid, kept as its continuum samples plus the
/// exact bound-state terms.
#[derive(Clone, Debug, PartialEq)]
pub struct MarchenkoKernel {
    s_grid: Grid,
    continuum: Vec<f64>,
    bound_states: Vec<BoundState>,
}

impl MarchenkoKernel {
    /// Treats `values` as the continuum part of `F`.
    pub fn from_samples(s_grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != s_grid.len() {
            return Err(Error::LengthMismatch { expected: s_grid.len(), got: values.len() });
        }
        Ok(MarchenkoKernel { s_grid, continuum: values, bound_states: Vec::new() })
    }

    pub fn s_grid(&self) -> &Grid {
        &self.s_grid
    }

    pub fn continuum(&self) -> &[f64] {
        &self.continuum
    }

    pub fn bound_states(&self) -> &[BoundState] {
        &self.bound_states
    }

    fn bound_part(&self, s: f64) -> f64 {
        self.bound_states.iter().map(|b| b.c * b.c * (-b.kappa * s).exp()).sum()
    }

    /// Total `F` at every grid point.
    pub fn values(&self) -> Vec<f64> {
        self.s_grid.points().iter().zip(&self.continuum).map(|(&s, &fc)| fc + self.bound_part(s)).collect()
    }

    /// `F(s)`, interpolating the continuum part.
    pub fn at(&self, s: f64) -> Result<f64> {
        Ok(self.s_grid.interpolate(&self.continuum, s)? + self.bound_part(s))
    }

    fn continuum_is_zero(&self) -> bool {
        self.continuum.iter().all(|&v| v == 0.0)
    }

    /// Continuum samples on `2·y0 + m·h`, `m < count`, reusing the stored
    /// samples when the grids line up.
    fn continuum_on(&self, start: f64, h: f64, count: usize) -> Result<Vec<f64>> {
        let g = &self.s_grid;
        let offset = (start - g.min()) / g.spacing();
        let aligned = (g.spacing() - h).abs() <= 1e-9 * h
            && (offset - offset.round()).abs() < 1e-6
            && offset.round() >= 0.0
            && offset.round() as usize + count <= g.len();
        if aligned {
            let o = offset.round() as usize;
            return Ok(self.continuum[o..o + count].to_vec());
        }
        (0..count).map(|m| g.interpolate(&self.continuum, start + m as f64 * h)).collect()
    }
}

/// `F(s) = Σ c² e^{-κs} + (1/2π) ∫ r(k) e^{iks} dk` on `s_grid`.
pub fn build_f(data: &ScatteringData, s_grid: &Grid) -> Result<MarchenkoKernel> {
    let (k_grid, r_full) = extend_hermitian(data.reflection())?;
    let continuum = if data.reflection().is_zero() {
        vec![0.0; s_grid.len()]
    } else {
        let extent = s_grid.min().abs().max(s_grid.max().abs());
        check_oscillation(extent, k_grid.spacing())?;
        let weights = QuadratureRule::for_grid(&k_grid);
        let scale = r_full.iter().map(|v| v.norm()).fold(0.0, f64::max);
        s_grid
            .points()
            .par_iter()
            .map(|&s| {
                let v = fourier_sum(&r_full, k_grid.points(), weights.weights(), s);
                check_hermitian_residue(v.im, scale)?;
                Ok(v.re)
            })
            .collect::<Result<Vec<f64>>>()?
    };
    Ok(MarchenkoKernel { s_grid: s_grid.clone(), continuum, bound_states: data.bound_states().to_vec() })
}

/// Number of half-line momentum samples on `[0, k_max]` needed so that
/// `|s| · h_k` stays within the oscillation bound for `|s| ≤ s_extent`.
pub fn required_momentum_points(k_max: f64, s_extent: f64) -> usize {
    let h = crate::numerics::OSCILLATION_BOUND / s_extent.max(1e-12);
    ((k_max / h).ceil() as usize + 1).max(crate::numerics::MIN_GRID_POINTS)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlmConfig {
    /// Extra length beyond the spatial grid covered by the `y` grid;
    /// `None` picks `10/κ_min`, or 10 without bound states.
    pub y_pad: Option<f64>,
    pub cond_threshold: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        GlmConfig { y_pad: None, cond_threshold: DEFAULT_COND_THRESHOLD }
    }
}

impl GlmConfig {
    pub fn pad_for(&self, data: &ScatteringData) -> f64 {
        self.y_pad.unwrap_or_else(|| data.kappa_min().map_or(10.0, |k| 10.0 / k))
    }
}

/// One solved row `K(x, y_j)`, `y_j ≥ x`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlmRow {
    pub x: f64,
    pub values: Vec<f64>,
    pub condition: f64,
}

struct ContinuumFactor {
    /// `U⁻¹` with `S = U Uᵀ`, `U` upper triangular.
    u_inv: DMatrix<f64>,
    sqrt_w: Vec<f64>,
    diag: Vec<f64>,
}

/// Shared state for solving every row of one GLM problem.
pub struct GlmSolver {
    y_grid: Grid,
    /// Continuum `F` on `2·y_0 + m·h`.
    f_c: Vec<f64>,
    bound_states: Vec<BoundState>,
    /// Quadrature weights over the whole `y` grid.
    w_big: Vec<f64>,
    factor: Option<ContinuumFactor>,
    cond_threshold: f64,
}

impl GlmSolver {
    pub fn new(kernel: &MarchenkoKernel, y_grid: Grid, cond_threshold: f64) -> Result<Self> {
        let n = y_grid.len();
        let h = y_grid.spacing();
        let f_c = kernel.continuum_on(2.0 * y_grid.min(), h, 2 * n - 1)?;
        let w_big = QuadratureRule::gregory(n, h).weights().to_vec();
        let factor = if kernel.continuum_is_zero() {
            None
        } else {
            Some(factorise(&f_c, &w_big, cond_threshold)?)
        };
        Ok(GlmSolver {
            y_grid,
            f_c,
            bound_states: kernel.bound_states.clone(),
            w_big,
            factor,
            cond_threshold,
        })
    }

    pub fn y_grid(&self) -> &Grid {
        &self.y_grid
    }

    /// Quadrature weights for the row starting at `y_i`.
    pub fn row_weights(&self, i: usize) -> Vec<f64> {
        let m = self.y_grid.len() - i;
        QuadratureRule::gregory(m, self.y_grid.spacing()).weights().to_vec()
    }

    /// `K(y_i, y_j)` for `j ≥ i`.
    pub fn solve_row(&self, i: usize) -> Result<GlmRow> {
        let m = self.y_grid.len() - i;
        let b: Vec<f64> = (0..m).map(|j| -self.f_c[2 * i + j]).collect();
        let a: Vec<f64> = self.bound_states.iter().map(|s| s.c).collect();
        let (values, condition) = self.solve_general(i, &b, &a)?;
        Ok(GlmRow { x: self.y_grid.points()[i], values, condition })
    }

    /// Column `R(y_j, y_i; 1)` of the resolvent of the discretised GLM
    /// operator, computed from the discrete delta at `y_i`.
    pub fn resolvent_column(&self, i: usize) -> Result<GlmRow> {
        let m = self.y_grid.len() - i;
        let mut e0 = vec![0.0; m];
        e0[0] = 1.0;
        let a = vec![0.0; self.bound_states.len()];
        let (mut values, condition) = self.solve_general(i, &e0, &a)?;
        let w0 = self.row_weights(i)[0];
        values[0] -= 1.0;
        values.iter_mut().for_each(|v| *v /= w0);
        Ok(GlmRow { x: self.y_grid.points()[i], values, condition })
    }

    /// Solves `M K = b - Ũ D² a` for the row starting at `y_i`, where `M`
    /// is the full Nyström matrix and `Ũ_n(y) = c_n e^{-κ_n (y - x)}`,
    /// `D = diag(e^{-κ_n x})`.
    fn solve_general(&self, i: usize, b: &[f64], a: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n_total = self.y_grid.len();
        let m = n_total - i;
        let h = self.y_grid.spacing();
        let x = self.y_grid.points()[i];
        let w = self.row_weights(i);
        let nb = self.bound_states.len();
        let u_tilde = DMatrix::from_fn(m, nb, |j, n| {
            let s = &self.bound_states[n];
            s.c * (-s.kappa * j as f64 * h).exp()
        });
        let b = DVector::from_column_slice(b);

        let (z_b, z, mut condition) = match &self.factor {
            None => (b, u_tilde.clone(), 1.0),
            Some(_) if m < 6 => {
                let m0 = DMatrix::from_fn(m, m, |p, q| {
                    (p == q) as u8 as f64 + self.f_c[2 * i + p + q] * w[q]
                });
                let lu = m0.lu();
                let z_b = lu.solve(&b).ok_or(Error::NearSingular { condition: f64::INFINITY })?;
                let z = lu.solve(&u_tilde).ok_or(Error::NearSingular { condition: f64::INFINITY })?;
                (z_b, z, 1.0)
            }
            Some(f) => {
                let mut rhs = DMatrix::zeros(m, 4 + nb);
                rhs.set_column(0, &b);
                for l in 0..3 {
                    for j in 0..m {
                        rhs[(j, 1 + l)] = self.f_c[2 * i + j + l];
                    }
                }
                for n in 0..nb {
                    rhs.set_column(4 + n, &u_tilde.column(n));
                }
                let x_all = f.solve_trailing(i, rhs);
                let y = x_all.columns(1, 3).into_owned();
                let delta: Vec<f64> = (0..3).map(|l| w[l] - self.w_big[i + l]).collect();
                let mut c = DMatrix::<f64>::identity(3, 3);
                for r in 0..3 {
                    for l in 0..3 {
                        c[(r, l)] += delta[r] * y[(r, l)];
                    }
                }
                let c_cond = matrix_condition(&c);
                let c_lu = c.lu();
                let correct = |col: DVector<f64>| -> Result<DVector<f64>> {
                    let top = DVector::from_fn(3, |r, _| delta[r] * col[r]);
                    let coef = c_lu.solve(&top).ok_or(Error::NearSingular { condition: c_cond })?;
                    Ok(col - &y * coef)
                };
                let z_b = correct(x_all.column(0).into_owned())?;
                let mut z = DMatrix::zeros(m, nb);
                for n in 0..nb {
                    z.set_column(n, &correct(x_all.column(4 + n).into_owned())?);
                }
                let (dmax, dmin) = f.diag[i..].iter().fold((0.0f64, f64::INFINITY), |(mx, mn), &d| (mx.max(d), mn.min(d)));
                (z_b, z, (dmax / dmin).powi(2).max(c_cond))
            }
        };
        if condition > self.cond_threshold {
            return Err(Error::NearSingular { condition });
        }
        if nb == 0 {
            return Ok((z_b.iter().cloned().collect(), condition));
        }

        let wz = DMatrix::from_fn(m, nb, |j, n| w[j] * z[(j, n)]);
        let g = u_tilde.transpose() * &wz;
        let s = u_tilde.tr_mul(&DVector::from_fn(m, |j, _| w[j] * z_b[j]));
        let sigma: Vec<f64> = self.bound_states.iter().map(|st| (-st.kappa * x.max(0.0)).exp()).collect();
        let small = DMatrix::from_fn(nb, nb, |p, q| {
            let diag = if p == q { (2.0 * self.bound_states[p].kappa * x.min(0.0)).exp() } else { 0.0 };
            diag + sigma[p] * g[(p, q)] * sigma[q]
        });
        let rhs = DVector::from_fn(nb, |p, _| sigma[p] * (a[p] + s[p]));
        let small_cond = matrix_condition(&small);
        condition = condition.max(small_cond);
        if condition > self.cond_threshold {
            return Err(Error::NearSingular { condition });
        }
        let eta = small.lu().solve(&rhs).ok_or(Error::NearSingular { condition: small_cond })?;
        let gamma = DVector::from_fn(nb, |p, _| sigma[p] * eta[p]);
        let k = z_b - z * gamma;
        Ok((k.iter().cloned().collect(), condition))
    }
}

impl ContinuumFactor {
    /// `M_b⁻¹ c` for every column of `rhs`, where `M_b` uses the global
    /// weights restricted to the trailing block starting at `i`.
    fn solve_trailing(&self, i: usize, mut rhs: DMatrix<f64>) -> DMatrix<f64> {
        let m = self.sqrt_w.len() - i;
        for (j, mut row) in rhs.row_iter_mut().enumerate() {
            row *= self.sqrt_w[i + j];
        }
        let u = self.u_inv.view((i, i), (m, m));
        let tmp = u * &rhs;
        let mut out = u.tr_mul(&tmp);
        for (j, mut row) in out.row_iter_mut().enumerate() {
            row /= self.sqrt_w[i + j];
        }
        out
    }
}

fn factorise(f_c: &[f64], w: &[f64], cond_threshold: f64) -> Result<ContinuumFactor> {
    let n = w.len();
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    // Reversed ordering: J S J = L Lᵀ gives S = (J L J)(J L J)ᵀ.
    let flipped = DMatrix::from_fn(n, n, |p, q| {
        let (a, b) = (n - 1 - p, n - 1 - q);
        (a == b) as u8 as f64 + sqrt_w[a] * f_c[a + b] * sqrt_w[b]
    });
    let chol = Cholesky::new(flipped).ok_or(Error::NearSingular { condition: f64::INFINITY })?;
    let l = chol.l();
    let diag: Vec<f64> = (0..n).map(|p| l[(n - 1 - p, n - 1 - p)]).collect();
    let (dmax, dmin) = diag.iter().fold((0.0f64, f64::INFINITY), |(mx, mn), &d| (mx.max(d), mn.min(d)));
    let condition = (dmax / dmin).powi(2);
    if condition > cond_threshold {
        return Err(Error::NearSingular { condition });
    }
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::NearSingular { condition: f64::INFINITY })?;
    let u_inv = DMatrix::from_fn(n, n, |p, q| l_inv[(n - 1 - p, n - 1 - q)]);
    Ok(ContinuumFactor { u_inv, sqrt_w, diag })
}

/// 2-norm condition number of a small matrix via its singular values.
fn matrix_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `K(x, y)` on `{y ≥ x}`: row `i` holds `K(x_i, y_j)` for `y_j ≥ x_i`
/// on the `y` grid, which extends the spatial grid to `y_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformationKernel {
    spatial: Grid,
    y_grid: Grid,
    rows: Vec<Vec<f64>>,
    condition: f64,
}

impl TransformationKernel {
    pub fn spatial_grid(&self) -> &Grid {
        &self.spatial
    }

    pub fn y_grid(&self) -> &Grid {
        &self.y_grid
    }

    pub fn y_max(&self) -> f64 {
        self.y_grid.max()
    }

    /// `K(x_i, y_j)` for `y_j ≥ x_i`; `row(i)[0]` is the diagonal.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Largest condition estimate over all rows.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// `max_x |K(x, y_max)| / max |K|`.
    pub fn truncation_residual(&self) -> f64 {
        let max = self.rows.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        let tail = self.rows.iter().map(|r| r[r.len() - 1].abs()).fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            tail / max
        }
    }

    /// Builds a kernel from an explicit function, e.g. a closed form.
    pub fn from_fn(spatial: Grid, y_max: f64, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let y_grid = extend_grid(&spatial, y_max)?;
        let rows = (0..spatial.len())
            .into_par_iter()
            .map(|i| y_grid.points()[i..].iter().map(|&y| f(spatial.points()[i], y)).collect())
            .collect();
        Ok(TransformationKernel { spatial, y_grid, rows, condition: 1.0 })
    }
}

fn extend_grid(spatial: &Grid, y_max: f64) -> Result<Grid> {
    let h = spatial.spacing();
    let extra = ((y_max - spatial.max()) / h).round().max(0.0) as usize;
    Grid::with_spacing(spatial.min(), h, spatial.len() + extra, GridKind::Spatial)
}

/// Solves the GLM equation for every `x` of the spatial grid.
pub fn solve_glm(data: &ScatteringData, spatial: &Grid, config: &GlmConfig) -> Result<TransformationKernel> {
    let y_grid = extend_grid(spatial, spatial.max() + config.pad_for(data))?;
    let n = y_grid.len();
    let s_grid = Grid::with_spacing(2.0 * y_grid.min(), y_grid.spacing(), 2 * n - 1, GridKind::Spatial)?;
    let kernel = build_f(data, &s_grid)?;
    let solver = GlmSolver::new(&kernel, y_grid.clone(), config.cond_threshold)?;
    let solved: Vec<GlmRow> = (0..spatial.len()).into_par_iter().map(|i| solver.solve_row(i)).collect::<Result<_>>()?;
    let condition = solved.iter().map(|r| r.condition).fold(1.0, f64::max);
    let rows = solved.into_iter().map(|r| r.values).collect();
    Ok(TransformationKernel { spatial: spatial.clone(), y_grid, rows, condition })
}

/// One row `K(x, ·)` on `y_grid`, which must start at `x`.
pub fn solve_glm_row(kernel: &MarchenkoKernel, x: f64, y_grid: &Grid) -> Result<GlmRow> {
    check_row_start(x, y_grid)?;
    GlmSolver::new(kernel, y_grid.clone(), DEFAULT_COND_THRESHOLD)?.solve_row(0)
}

/// Resolvent column `R(·, x; 1)` on `y_grid`, which must start at `x`.
pub fn resolvent_column(kernel: &MarchenkoKernel, x: f64, y_grid: &Grid) -> Result<GlmRow> {
    check_row_start(x, y_grid)?;
    GlmSolver::new(kernel, y_grid.clone(), DEFAULT_COND_THRESHOLD)?.resolvent_column(0)
}

fn check_row_start(x: f64, y_grid: &Grid) -> Result<()> {
    if (y_grid.min() - x).abs() > 1e-9 * y_grid.spacing() {
        return Err(Error::InvalidArgument(format!("y grid starts at {} instead of x = {x}", y_grid.min())));
    }
    Ok(())
}

/// `V(x) = -2 d/dx K(x, x)`.
pub fn reconstruct_potential(kernel: &TransformationKernel) -> Result<SampledPotential> {
    let d = derivative_samples(&kernel.diagonal(), &kernel.spatial)?;
    SampledPotential::new(kernel.spatial.clone(), d.into_iter().map(|v| -2.0 * v).collect())
}

/// `ψ(x, k) = e^{-ikx} + ∫_x^{y_max} K(x,y) e^{-iky} dy` on the spatial grid.
pub fn reconstruct_wavefunction(kernel: &TransformationKernel, k: f64) -> Result<Vec<Complex64>> {
    let h = kernel.y_grid.spacing();
    check_oscillation(k, h)?;
    let y = kernel.y_grid.points();
    let waves: Vec<Complex64> = y.iter().map(|&yy| Complex64::from_polar(1.0, -k * yy)).collect();
    let psi = (0..kernel.rows.len())
        .into_par_iter()
        .map(|i| {
            let row = &kernel.rows[i];
            let w = QuadratureRule::gregory(row.len(), h);
            let integral: Complex64 =
                row.iter().zip(&waves[i..]).zip(w.weights()).map(|((&kv, &e), &wj)| e * (kv * wj)).sum();
            waves[i] + integral
        })
        .collect();
    Ok(psi)
}

/// Scaled bound-state system shared by the closed-form reflectionless
/// formulas: with `x⁺ = max(x,0)`, `x⁻ = min(x,0)`,
/// `Ã = diag(e^{2κx⁻}) + [c_m c_n e^{-(κ_m+κ_n)x⁺} / (κ_m+κ_n)]`.
fn reflectionless_system(states: &[BoundState], x: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = states.len();
    let (xp, xm) = (x.max(0.0), x.min(0.0));
    let e = DMatrix::from_fn(n, n, |p, q| {
        let (a, b) = (&states[p], &states[q]);
        a.c * b.c * (-(a.kappa + b.kappa) * xp).exp()
    });
    let a = DMatrix::from_fn(n, n, |p, q| {
        let diag = if p == q { (2.0 * states[p].kappa * xm).exp() } else { 0.0 };
        diag + e[(p, q)] / (states[p].kappa + states[q].kappa)
    });
    (a, e)
}

/// Closed-form `K(x, y)` for `r ≡ 0` from the finite-rank GLM kernel.
pub fn reflectionless_kernel(states: &[BoundState], x: f64, y: f64) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let (a, _) = reflectionless_system(states, x);
    let xp = x.max(0.0);
    let xm = x.min(0.0);
    let u = DVector::from_fn(states.len(), |m, _| states[m].c * (-states[m].kappa * xp).exp());
    let g = a.lu().solve(&u).unwrap_or_else(|| DVector::zeros(states.len()));
    -states
        .iter()
        .zip(g.iter())
        .map(|(s, gn)| s.c * (-s.kappa * (y - xm)).exp() * gn)
        .sum::<f64>()
}

/// Closed-form `V(x) = -2 d²/dx² log det A(x)` for `r ≡ 0`.
pub fn reflectionless_potential(states: &[BoundState], x: f64) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let (a, e) = reflectionless_system(states, x);
    let inv = a.try_inverse().unwrap_or_else(|| DMatrix::zeros(states.len(), states.len()));
    let sum_kappa = DMatrix::from_fn(states.len(), states.len(), |p, q| {
        (states[p].kappa + states[q].kappa) * e[(p, q)]
    });
    let ie = &inv * &e;
    let second = (&inv * sum_kappa).trace() - (&ie * &ie).trace();
    -2.0 * second
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositiveDefiniteReport {
    pub min_eigenvalue: f64,
    pub cholesky_ok: bool,
}

/// Smallest eigenvalue of `A_mn = δ_mn + v_m v_n / (κ_m + κ_n)^ν`.
pub fn check_positive_definite(kappas: &[f64], v: &[f64], nu: f64) -> Result<PositiveDefiniteReport> {
    if kappas.len() != v.len() {
        return Err(Error::LengthMismatch { expected: kappas.len(), got: v.len() });
    }
    if kappas.iter().any(|&k| !(k > 0.0)) || !(nu >= 0.0) {
        return Err(Error::InvalidArgument("need κ > 0 and ν ≥ 0".into()));
    }
    let n = kappas.len();
    let a = DMatrix::from_fn(n, n, |p, q| {
        (p == q) as u8 as f64 + v[p] * v[q] / (kappas[p] + kappas[q]).powf(nu)
    });
    let cholesky_ok = Cholesky::new(a.clone()).is_some();
    let min_eigenvalue = SymmetricEigen::new(a).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PositiveDefiniteReport { min_eigenvalue, cholesky_ok })
}

/// The reflectionless kernel tabulated on a spatial grid.
pub fn reflectionless_transformation_kernel(
    states: &[BoundState],
    spatial: &Grid,
    y_max: f64,
) -> Result<TransformationKernel> {
    TransformationKernel::from_fn(spatial.clone(), y_max, |x, y| reflectionless_kernel(states, x, y))
}
