use std::path::PathBuf;

use marchenko_kit::consistency::{
    smeared_gamma, smeared_orthogonality, trace_identity_defect, CheckReport, SmearingFunction,
};
use marchenko_kit::forward::{
    find_bound_states, reflection_derivative_wrt_potential, scattering_data, solve_many, SampledPotential,
};
use marchenko_kit::glm::reflectionless_potential;
use marchenko_kit::io::Table;
use marchenko_kit::{Grid, GridKind};
use marchenko_kit::scattering_data::{
    BoundState, Dispersion, ReflectionAmplitude, ScatteringData, ScatteringDocument,
};
use marchenko_kit::variational::{
    dpsi_profile, dv_drstar_field, Background, DerivativeField, DerivativeKind, DerivativeSlice,
};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{config_hash, Output};
use crate::{CheckKind, Command, DerivKind, Failure};

/// Largest `h k_max` at which the roundtrip forward solve runs unchanged.
const MAX_STEP_PHASE: f64 = 0.6;

pub fn dispatch(command: &Command, config: &RunConfig) -> Result<(), Failure> {
    let input = match command {
        Command::Forward { input }
        | Command::Invert { input }
        | Command::Tmap { input }
        | Command::Deriv { input, .. }
        | Command::Check { input, .. } => {
            let path = input.clone().or_else(|| config.io.input.clone()).ok_or_else(|| {
                Failure::input("no input file given (positional argument or io.input in the config)")
            })?;
            Some(read_input(&path)?)
        }
        Command::Soliton { .. } => None,
    };
    let hash = config_hash(command, config, input.as_deref().map(str::as_bytes));
    let out = Output::new(&config.io.output_dir, config.io.format, hash)?;
    let text = input.as_deref().unwrap_or_default();
    match command {
        Command::Forward { .. } => forward(config, text, &out),
        Command::Invert { .. } => invert(config, &load_data(text)?, &out),
        Command::Tmap { .. } => tmap(&load_data(text)?, &out),
        Command::Deriv { which, k, q, star, .. } => deriv(config, &load_data(text)?, *which, k, *q, *star, &out),
        Command::Check { which, .. } => check(config, &load_data(text)?, *which, &out),
        Command::Soliton { kappa, c } => soliton(config, kappa, c, &out),
    }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_data(text: &str) -> Result<ScatteringData, Failure> {
    let data = ScatteringData::from_json(text)?;
    data.ensure_admissible()?;
    Ok(data)
}

#[derive(Serialize)]
struct BoundStates<'a> {
    bound_states: &'a [BoundState],
}

fn write_data(out: &Output, data: &ScatteringData) -> Result<(), Failure> {
    out.json("scattering_data.json", ScatteringDocument::from(data))?;
    out.json("bound_states.json", BoundStates { bound_states: data.bound_states() })
}

/// Probe data carrying only the bound states, for sizing the `y` padding.
fn pad_for(config: &RunConfig, states: &[BoundState]) -> Result<f64, Failure> {
    let probe = ScatteringData::new(ReflectionAmplitude::zero(config.momentum.max, 9)?, states.to_vec());
    Ok(config.glm_config().pad_for(&probe))
}

fn forward(config: &RunConfig, text: &str, out: &Output) -> Result<(), Failure> {
    let v = SampledPotential::from_json(text)?;
    let states = find_bound_states(&v)?;
    let n = config.momentum_points(pad_for(config, &states)?);
    let data = scattering_data(&v, config.momentum.max, n)?;
    let momenta = &data.reflection().grid().points()[1..];
    let result = solve_many(&v, momenta, false)?;
    out.table("scattering", &Table::scattering(momenta, &result.r, &result.t))?;
    write_data(out, &data)
}

fn invert(config: &RunConfig, data: &ScatteringData, out: &Output) -> Result<(), Failure> {
    let background = Background::solve(data.clone(), &config.spatial_grid()?, &config.glm_config())?;
    out.table("potential", &Table::potential(&background.potential()?))?;
    out.table("kernel", &Table::kernel(background.kernel(), config.io.kernel_stride))?;
    let momenta = &config.glm.wave_momenta;
    let field = background.wavefield(momenta)?;
    out.table("wavefunctions", &Table::wavefunctions(&field.grid, momenta, &field.values))
}

fn tmap(data: &ScatteringData, out: &Output) -> Result<(), Failure> {
    let dispersion = Dispersion::new(data)?;
    let k = data.reflection().grid().points();
    let t = k.iter().map(|&k| dispersion.transmission(k)).collect::<Result<Vec<_>, _>>()?;
    out.table("transmission", &Table::scattering(k, data.reflection().samples(), &t))
}

fn deriv(
    config: &RunConfig,
    data: &ScatteringData,
    which: DerivKind,
    momenta: &[f64],
    q: Option<f64>,
    star: bool,
    out: &Output,
) -> Result<(), Failure> {
    let background = Background::solve(data.clone(), &config.spatial_grid()?, &config.glm_config())?;
    let grid = background.grid().clone();
    let (stem, field) = match which {
        DerivKind::DvDr => ("deriv_dv_dr", dv_drstar_field(&background.wavefield(momenta)?)?),
        DerivKind::DrDv => {
            let v = background.potential()?;
            let slices = momenta
                .iter()
                .map(|&k| {
                    let values = reflection_derivative_wrt_potential(&v, k)?;
                    Ok(DerivativeSlice { k, q: None, values, near_resonant: false })
                })
                .collect::<Result<Vec<_>, marchenko_kit::Error>>()?;
            ("deriv_dr_dv", DerivativeField { kind: DerivativeKind::DrDv, grid, slices })
        }
        DerivKind::DpsiDr => {
            let q = q.ok_or_else(|| Failure::input("dpsi-dr needs --q"))?;
            let mut slices = Vec::with_capacity(momenta.len());
            for &k in momenta {
                let field = background.wavefield(&[k, q])?;
                let slice = dpsi_profile(&field.values[0], &field.values[1], &grid, k, q, !star)?;
                if slice.near_resonant {
                    eprintln!("warning: k = {k} and q = {q} are near resonance; the field is dominated by the boundary");
                }
                slices.push(slice);
            }
            let kind = if star { DerivativeKind::DpsiDrstar } else { DerivativeKind::DpsiDr };
            ("deriv_dpsi_dr", DerivativeField { kind, grid, slices })
        }
    };
    out.table(stem, &Table::derivative(&field))
}

#[derive(Serialize)]
struct Report<'a> {
    pass: bool,
    checks: &'a [CheckReport],
}

fn check(config: &RunConfig, data: &ScatteringData, which: CheckKind, out: &Output) -> Result<(), Failure> {
    let background = Background::solve(data.clone(), &config.spatial_grid()?, &config.glm_config())?;
    let v = background.potential()?;
    let c = &config.checks;
    let tol = &c.tolerances;
    let wants = |kind: CheckKind| which == kind || which == CheckKind::All;
    let smear_params = |tolerance: f64| json!({"L": c.l, "smear_width": c.smear_width, "k": c.k, "tolerance": tolerance});
    let real = |x: f64| Complex64::new(x, 0.0);
    let mut reports = Vec::new();

    if wants(CheckKind::Trace) {
        let d = trace_identity_defect(&v, data)?;
        let scale = d.potential_integral.abs().max(1.0);
        let params = json!({"tolerance": tol.trace});
        reports.push(CheckReport::compare(
            "trace",
            params,
            real(d.potential_integral),
            real(d.spectral_side),
            scale,
            tol.trace,
        ));
    }
    if wants(CheckKind::Unitarity) {
        let momenta = &data.reflection().grid().points()[1..];
        let result = solve_many(&v, momenta, false)?;
        let sums: Vec<f64> = result.r.iter().zip(&result.t).map(|(r, t)| r.norm_sqr() + t.norm_sqr()).collect();
        let worst = sums.iter().copied().max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs())).unwrap_or(1.0);
        let params = json!({"momenta": momenta.len(), "tolerance": tol.unitarity});
        reports.push(CheckReport::compare("unitarity", params, real(worst), real(1.0), 1.0, tol.unitarity));
    }
    if wants(CheckKind::InverseKernel) {
        let smear = SmearingFunction::new(c.k, c.smear_width)?;
        let gamma = smeared_gamma(&v, c.k, c.l, &smear)?;
        let u = smear.value(c.k);
        reports.push(CheckReport::compare(
            "inverse_kernel",
            smear_params(tol.inverse_kernel),
            gamma,
            real(u),
            u,
            tol.inverse_kernel,
        ));
    }
    if wants(CheckKind::Orthogonality) {
        let o = smeared_orthogonality(&v, c.k, c.l, c.smear_width)?;
        let scale = o.expected_minus.norm();
        for (name, lhs, rhs) in [
            ("orthogonality_minus_k", o.at_minus_k, o.expected_minus),
            ("orthogonality_plus_k", o.at_plus_k, o.expected_plus),
        ] {
            reports.push(CheckReport::compare(name, smear_params(tol.orthogonality), lhs, rhs, scale, tol.orthogonality));
        }
    }
    if wants(CheckKind::Roundtrip) {
        reports.extend(roundtrip(&v, data, tol.roundtrip)?);
    }

    let pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        eprintln!("{:<24} residual {:.3e}  {}", r.check_name, r.residual, if r.pass { "pass" } else { "FAIL" });
    }
    out.json("report.json", Report { pass, checks: &reports })?;
    if pass {
        Ok(())
    } else {
        let failed = reports.iter().filter(|r| !r.pass).count();
        Err(Failure::numerical(format!("{failed} of {} checks failed", reports.len())))
    }
}

/// Forward-solves the reconstructed potential on the data's own momentum
/// grid and compares reflection and bound states with the input. A
/// reconstruction too coarse for the forward solver at the top momentum is
/// interpolated onto a finer grid first, so its error shows up as a
/// residual rather than a solver failure.
fn roundtrip(v: &SampledPotential, data: &ScatteringData, tolerance: f64) -> Result<Vec<CheckReport>, Failure> {
    let grid = data.reflection().grid();
    let resampled;
    let v = if v.grid().spacing() * grid.max() > MAX_STEP_PHASE {
        let spatial = v.grid();
        let n = (spatial.extent() * grid.max() / MAX_STEP_PHASE).ceil() as usize + 1;
        let fine = Grid::uniform(spatial.min(), spatial.max(), n, GridKind::Spatial)?;
        resampled = SampledPotential::from_fn(fine, |x| spatial.interpolate(v.values(), x).unwrap_or(0.0))?;
        &resampled
    } else {
        v
    };
    let again = scattering_data(v, grid.max(), grid.len())?;
    let params = json!({"momenta": grid.len(), "tolerance": tolerance});
    let (worst_new, worst_old) = again
        .reflection()
        .samples()
        .iter()
        .zip(data.reflection().samples())
        .max_by(|(a, b), (c, d)| (*a - *b).norm().total_cmp(&(*c - *d).norm()))
        .map(|(a, b)| (*a, *b))
        .unwrap_or_default();
    let mut reports = vec![CheckReport::compare("roundtrip_reflection", params.clone(), worst_new, worst_old, 1.0, tolerance)];

    let (old, new) = (data.bound_states(), again.bound_states());
    let count = |n: usize| Complex64::new(n as f64, 0.0);
    let states = if old.len() != new.len() {
        let mut r = CheckReport::compare("roundtrip_bound_states", params, count(new.len()), count(old.len()), 1.0, 0.0);
        r.pass = false;
        r
    } else {
        let (a, b) = new
            .iter()
            .zip(old)
            .map(|(a, b)| (a.kappa, b.kappa))
            .max_by(|(a, b), (c, d)| ((a - b) / b).abs().total_cmp(&((c - d) / d).abs()))
            .unwrap_or((0.0, 0.0));
        CheckReport::compare("roundtrip_bound_states", params, Complex64::new(a, 0.0), Complex64::new(b, 0.0), b.abs().max(f64::MIN_POSITIVE), tolerance)
    };
    reports.push(states);
    Ok(reports)
}

fn soliton(config: &RunConfig, kappa: &[f64], c: &[f64], out: &Output) -> Result<(), Failure> {
    if kappa.len() != c.len() {
        return Err(Failure::input(format!("{} values of --kappa but {} of --c", kappa.len(), c.len())));
    }
    let states: Vec<BoundState> = kappa.iter().zip(c).map(|(&k, &c)| BoundState::new(k, c)).collect();
    let n = config.momentum_points(pad_for(config, &states)?);
    let data = ScatteringData::reflectionless(states.clone(), config.momentum.max, n)?;
    data.ensure_admissible()?;
    let v = SampledPotential::from_fn(config.spatial_grid()?, |x| reflectionless_potential(&states, x))?;
    out.table("potential", &Table::potential(&v))?;
    write_data(out, &data)
}
