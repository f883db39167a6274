//! Forward solve, JSON round trip and GLM inversion of an asymmetric
//! potential with a repulsive shoulder.

use marchenko_kit::forward::{find_bound_states, scattering_data, solve_scattering, SampledPotential};
use marchenko_kit::glm::{reconstruct_potential, reconstruct_wavefunction, required_momentum_points, solve_glm, GlmConfig};
use marchenko_kit::scattering_data::{ReflectionAmplitude, ScatteringData};
use marchenko_kit::{Grid, GridKind};

fn shape(x: f64) -> f64 {
    -1.6 * (-(x + 0.8) * (x + 0.8)).exp() + 0.5 * (-(x - 1.5) * (x - 1.5) / 0.5).exp()
}

fn grid(half: f64) -> Grid {
    Grid::uniform(-half, half, (40.0 * half) as usize + 1, GridKind::Spatial).unwrap()
}

#[test]
fn asymmetric_potential_survives_the_round_trip() {
    let v = SampledPotential::from_fn(grid(20.0), shape).unwrap();
    let target = grid(10.0);
    let states = find_bound_states(&v).unwrap();
    let probe = ScatteringData::new(ReflectionAmplitude::zero(8.0, 9).unwrap(), states);
    let y_max = target.max() + GlmConfig::default().pad_for(&probe);
    let data = scattering_data(&v, 8.0, required_momentum_points(8.0, 2.0 * y_max + 10.0)).unwrap();
    assert!(data.validate().passed());

    let data = ScatteringData::from_json(&data.to_json().unwrap()).unwrap();
    let kernel = solve_glm(&data, &target, &GlmConfig::default()).unwrap();
    let rebuilt = reconstruct_potential(&kernel).unwrap();
    let v_err = target
        .points()
        .iter()
        .zip(rebuilt.values())
        .map(|(&x, &w)| (w - shape(x)).abs())
        .fold(0.0, f64::max);
    println!("potential error {v_err:.3e}, bound states {:?}", data.bound_states());
    assert!(v_err < 1e-4, "{v_err}");

    let on_target = SampledPotential::from_fn(target.clone(), shape).unwrap();
    for k in [0.7, 2.0] {
        let psi = reconstruct_wavefunction(&kernel, k).unwrap();
        let direct = solve_scattering(&on_target, k).unwrap().psi;
        let err = psi.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("psi error at k = {k}: {err:.3e}");
        assert!(err < 1e-4, "k = {k}: {err}");
    }
}
