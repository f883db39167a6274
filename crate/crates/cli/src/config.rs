use std::path::{Path, PathBuf};

use marchenko_kit::glm::{GlmConfig, DEFAULT_COND_THRESHOLD};
use marchenko_kit::{Error, Grid, GridKind, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spatial: SpatialConfig,
    pub momentum: MomentumConfig,
    pub glm: GlmSection,
    pub checks: ChecksConfig,
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig { min: -30.0, max: 30.0, n: 1201 }
    }
}

/// `n = None` sizes the grid from the spacing limit and the GLM reach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumConfig {
    pub max: f64,
    pub n: Option<usize>,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig { max: 12.0, n: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlmSection {
    pub y_pad: Option<f64>,
    pub cond_threshold: f64,
    /// Momenta at which `invert` tabulates `ψ(x, k)`.
    pub wave_momenta: Vec<f64>,
}

impl Default for GlmSection {
    fn default() -> Self {
        GlmSection { y_pad: None, cond_threshold: DEFAULT_COND_THRESHOLD, wave_momenta: vec![0.5, 1.0, 2.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub smear_width: f64,
    /// Momentum at which the smeared identities are probed.
    pub k: f64,
    pub tolerances: Tolerances,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig { l: 200.0, smear_width: 0.1, k: 1.0, tolerances: Tolerances::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub trace: f64,
    pub unitarity: f64,
    pub inverse_kernel: f64,
    pub orthogonality: f64,
    pub roundtrip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { trace: 1e-3, unitarity: 1e-8, inverse_kernel: 0.03, orthogonality: 0.03, roundtrip: 0.02 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Keep every n-th sample of `K(x, y)` in both directions.
    pub kernel_stride: usize,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig { input: None, output_dir: PathBuf::from("."), format: Format::Csv, kernel_stride: 10 }
    }
}

/// Flags that override the config file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Left end of the spatial grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Right end of the spatial grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of spatial grid points.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Largest momentum of the forward data.
    #[arg(long, global = true)]
    pub k_max: Option<f64>,
    /// Number of momentum points (default: sized from the grid).
    #[arg(long, global = true)]
    pub nk: Option<usize>,
    /// GLM integration reach beyond x_max (default: 10/κ_min).
    #[arg(long, global = true)]
    pub y_pad: Option<f64>,
    /// Largest condition number accepted in the GLM solve.
    #[arg(long, global = true)]
    pub cond_threshold: Option<f64>,
    /// Half-width L of the box used by the smeared checks.
    #[arg(long = "half-width", global = true)]
    pub l: Option<f64>,
    /// Width of the Gaussian smearing in the delta checks.
    #[arg(long, global = true)]
    pub smear_width: Option<f64>,
    /// Momentum probed by the delta checks.
    #[arg(long, global = true)]
    pub probe_k: Option<f64>,
    /// Directory for output files.
    #[arg(long, short, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Table format.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        set(&mut self.spatial.min, &o.x_min);
        set(&mut self.spatial.max, &o.x_max);
        set(&mut self.spatial.n, &o.nx);
        set(&mut self.momentum.max, &o.k_max);
        if o.nk.is_some() {
            self.momentum.n = o.nk;
        }
        if o.y_pad.is_some() {
            self.glm.y_pad = o.y_pad;
        }
        set(&mut self.glm.cond_threshold, &o.cond_threshold);
        set(&mut self.checks.l, &o.l);
        set(&mut self.checks.smear_width, &o.smear_width);
        set(&mut self.checks.k, &o.probe_k);
        set(&mut self.io.output_dir, &o.output_dir);
        set(&mut self.io.format, &o.format);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.spatial_grid()?;
        if !(self.momentum.max > 0.0) {
            return bad(format!("momentum.max must be positive, got {}", self.momentum.max));
        }
        if let Some(pad) = self.glm.y_pad {
            if !(pad >= 0.0) {
                return bad(format!("glm.y_pad must be non-negative, got {pad}"));
            }
        }
        if !(self.glm.cond_threshold > 1.0) {
            return bad(format!("glm.cond_threshold must exceed 1, got {}", self.glm.cond_threshold));
        }
        if !(self.checks.l > 0.0 && self.checks.smear_width > 0.0 && self.checks.k > 0.0) {
            return bad("checks.L, checks.smear_width and checks.k must be positive".into());
        }
        Ok(())
    }

    pub fn spatial_grid(&self) -> Result<Grid> {
        Grid::uniform(self.spatial.min, self.spatial.max, self.spatial.n, GridKind::Spatial)
    }

    pub fn glm_config(&self) -> GlmConfig {
        GlmConfig { y_pad: self.glm.y_pad, cond_threshold: self.glm.cond_threshold }
    }

    /// Momentum samples on `[0, max]`: the configured count, or enough for
    /// spacing 0.05 and for the `s` range a GLM solve over the spatial grid
    /// with a `y` padding of `pad` will need.
    pub fn momentum_points(&self, pad: f64) -> usize {
        self.momentum.n.unwrap_or_else(|| {
            let extent = 2.0 * (self.spatial.max.abs().max(self.spatial.min.abs()) + pad);
            let by_spacing = (self.momentum.max / 0.05).ceil() as usize + 1;
            by_spacing.max(marchenko_kit::glm::required_momentum_points(self.momentum.max, extent))
        })
    }
}
