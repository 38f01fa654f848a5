//! Run configuration: a TOML file, an experiment preset and command-line
//! overrides, merged into a validated [`RunConfig`].
//!
//! Every key is optional; unknown keys are rejected. Missing keys come from
//! the preset of `experiment`. A key set in the file beats the same flag on
//! the command line.
//!
//! ```toml
//! experiment = "gaussian-w"     # gue-baseline | deterministic-profile | gaussian-w
//!                               # | scaling-study | figure-1 .. figure-4
//! n_list = [512]
//! realizations = 200
//! q_list = [2]
//! energy = 1.0                  # window centre and analytic point
//! sigma = 10.0                  # Gaussian-W only; or gamma = 0.5 for sigma = N^gamma
//! profile = "inverse-index"     # fixed profiles: uniform | inverse-index | file
//! profile_file = "w.csv"        # columns i,w,d when profile = "file"
//! base_seed = 7
//! output_dir = "out"
//! threads = 1
//! allow_large = false           # lift the N <= 2048, realizations <= 500 caps
//!
//! [window]
//! kind = "half-width"           # or kind = "nearest-k", count = 25 (default N/20)
//! half_width = 0.1
//!
//! [dos]                         # eigenvalue histogram
//! lo = -4.0
//! hi = 4.0
//! bins = 40
//! exclude_band = 0.2
//!
//! [curve]                       # analytic curve on an energy grid
//! lo = 0.2
//! hi = 4.0
//! points = 39
//!
//! [gates]                       # pass/fail thresholds; omitted gates are not applied
//! max_z = 3.0
//! dos_max_rel = 0.1
//! dos_max_abs = 0.01
//! dos_range = [0.2, 4.0]        # |E| range of DOS bins that are gated
//! slope_tol = 0.1
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const MIN_SIZE: usize = 16;
pub const SIZE_CAP: usize = 2048;
pub const REALIZATION_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GueBaseline,
    DeterministicProfile,
    GaussianW,
    ScalingStudy,
    #[serde(rename = "figure-1")]
    #[value(name = "figure-1")]
    Figure1,
    #[serde(rename = "figure-2")]
    #[value(name = "figure-2")]
    Figure2,
    #[serde(rename = "figure-3")]
    #[value(name = "figure-3")]
    Figure3,
    #[serde(rename = "figure-4")]
    #[value(name = "figure-4")]
    Figure4,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GueBaseline => "gue-baseline",
            Experiment::DeterministicProfile => "deterministic-profile",
            Experiment::GaussianW => "gaussian-w",
            Experiment::ScalingStudy => "scaling-study",
            Experiment::Figure1 => "figure-1",
            Experiment::Figure2 => "figure-2",
            Experiment::Figure3 => "figure-3",
            Experiment::Figure4 => "figure-4",
        }
    }

    /// Whether `w` is redrawn from a Gaussian in every realization.
    pub fn random_w(self) -> bool {
        matches!(
            self,
            Experiment::GaussianW
                | Experiment::ScalingStudy
                | Experiment::Figure2
                | Experiment::Figure3
                | Experiment::Figure4
        )
    }

    fn is_figure(self) -> bool {
        matches!(
            self,
            Experiment::Figure1 | Experiment::Figure2 | Experiment::Figure3 | Experiment::Figure4
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Uniform,
    InverseIndex,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowSpec {
    NearestK { count: Option<usize> },
    HalfWidth { half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    #[serde(default)]
    pub exclude_band: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl CurveSpec {
    pub fn energies(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.lo + step * k as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub max_z: Option<f64>,
    pub dos_max_rel: Option<f64>,
    pub dos_max_abs: Option<f64>,
    pub dos_range: Option<[f64; 2]>,
    pub slope_tol: Option<f64>,
}

/// The file as written: every key optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub n_list: Option<Vec<usize>>,
    pub realizations: Option<usize>,
    pub q_list: Option<Vec<u32>>,
    pub energy: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub profile: Option<ProfileKind>,
    pub profile_file: Option<PathBuf>,
    pub window: Option<WindowSpec>,
    pub dos: Option<DosSpec>,
    pub curve: Option<CurveSpec>,
    pub gates: Option<GateSpec>,
    pub base_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub allow_large: Option<bool>,
}

/// How `w` is chosen for the Gaussian-W experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WidthRule {
    Sigma(f64),
    /// `sigma = N^gamma`.
    Gamma(f64),
}

impl WidthRule {
    pub fn sigma(self, n: usize) -> f64 {
        match self {
            WidthRule::Sigma(s) => s,
            WidthRule::Gamma(g) => (n as f64).powf(g),
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub realizations: usize,
    pub q_list: Vec<u32>,
    pub energy: f64,
    pub width: Option<WidthRule>,
    pub profile: ProfileKind,
    pub profile_file: Option<PathBuf>,
    pub window: WindowSpec,
    pub dos: Option<DosSpec>,
    pub curve: Option<CurveSpec>,
    pub gates: GateSpec,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
}

/// Command-line values that mirror config keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub n_list: Option<Vec<usize>>,
    pub realizations: Option<usize>,
    pub q_list: Option<Vec<u32>>,
    pub energy: Option<f64>,
    pub base_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn parse_config_str(text: &str, path: &Path) -> CliResult<RawConfig> {
    toml::from_str(text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

pub fn parse_config(path: &Path) -> CliResult<RawConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, path)
}

/// Defaults of each experiment.
pub fn preset(experiment: Experiment) -> RawConfig {
    let half_width = |h| Some(WindowSpec::HalfWidth { half_width: h });
    let gaussian_dos = Some(DosSpec {
        lo: -4.0,
        hi: 4.0,
        bins: 40,
        exclude_band: 0.2,
    });
    let base = RawConfig {
        experiment: Some(experiment),
        q_list: Some(vec![2]),
        base_seed: Some(1),
        ..RawConfig::default()
    };
    match experiment {
        Experiment::GueBaseline => RawConfig {
            n_list: Some(vec![256]),
            realizations: Some(100),
            q_list: Some(vec![2, 3]),
            energy: Some(0.0),
            profile: Some(ProfileKind::Uniform),
            window: Some(WindowSpec::NearestK { count: None }),
            dos: Some(DosSpec {
                lo: -2.5,
                hi: 2.5,
                bins: 50,
                exclude_band: 0.0,
            }),
            gates: Some(GateSpec {
                max_z: Some(3.0),
                dos_max_abs: Some(0.01),
                dos_range: Some([0.0, 1.5]),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::DeterministicProfile => RawConfig {
            n_list: Some(vec![256]),
            realizations: Some(100),
            energy: Some(0.0),
            profile: Some(ProfileKind::InverseIndex),
            window: Some(WindowSpec::NearestK { count: None }),
            gates: Some(GateSpec {
                max_z: Some(3.0),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::GaussianW => RawConfig {
            n_list: Some(vec![512]),
            realizations: Some(100),
            energy: Some(1.0),
            sigma: Some(10.0),
            window: half_width(0.1),
            dos: gaussian_dos,
            curve: Some(CurveSpec {
                lo: 0.2,
                hi: 4.0,
                points: 39,
            }),
            gates: Some(GateSpec {
                max_z: Some(3.0),
                dos_max_rel: Some(0.1),
                dos_range: Some([0.2, 4.0]),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::ScalingStudy => RawConfig {
            n_list: Some(vec![256, 512, 1024, 2048]),
            realizations: Some(100),
            energy: Some(1.0),
            gamma: Some(0.5),
            window: half_width(0.1),
            gates: Some(GateSpec {
                slope_tol: Some(0.1),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::Figure1 => RawConfig {
            n_list: Some(vec![256, 512, 1024]),
            realizations: Some(300),
            energy: Some(0.0),
            profile: Some(ProfileKind::InverseIndex),
            window: half_width(0.05),
            gates: Some(GateSpec {
                max_z: Some(3.0),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::Figure2 => RawConfig {
            n_list: Some(vec![512]),
            realizations: Some(200),
            energy: Some(1.0),
            sigma: Some(10.0),
            window: half_width(0.1),
            dos: gaussian_dos,
            curve: Some(CurveSpec {
                lo: 0.2,
                hi: 4.0,
                points: 39,
            }),
            gates: Some(GateSpec {
                dos_max_rel: Some(0.1),
                dos_range: Some([0.2, 4.0]),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::Figure3 => RawConfig {
            n_list: Some(vec![256, 512, 1024]),
            realizations: Some(300),
            energy: Some(1.0),
            sigma: Some(10.0),
            window: half_width(0.1),
            gates: Some(GateSpec {
                max_z: Some(3.0),
                ..GateSpec::default()
            }),
            ..base
        },
        Experiment::Figure4 => RawConfig {
            n_list: Some(vec![256, 512, 1024, 2048]),
            realizations: Some(300),
            energy: Some(1.0),
            gamma: Some(0.5),
            window: half_width(0.1),
            gates: Some(GateSpec {
                slope_tol: Some(0.1),
                ..GateSpec::default()
            }),
            ..base
        },
    }
}

/// Resolves `file` (may be empty), `flags` and the preset into a
/// [`RunConfig`]. Returns the config and one warning per flag that was
/// overridden by the file.
pub fn resolve(file: RawConfig, flags: &Overrides) -> CliResult<(RunConfig, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut pick = |name: &str, from_file_set: bool, flag_set: bool, differs: bool| -> bool {
        if from_file_set && flag_set && differs {
            warnings.push(format!("--{name} ignored: the config file sets `{name}`"));
        }
        !from_file_set && flag_set
    };

    let experiment = match (file.experiment, flags.experiment) {
        (Some(e), flag) => {
            pick("experiment", true, flag.is_some(), flag.is_some_and(|f| f != e));
            e
        }
        (None, Some(e)) => e,
        (None, None) => {
            return Err(CliError::invalid(
                "experiment",
                "not set in the config file or with --experiment",
            ))
        }
    };
    let defaults = preset(experiment);

    macro_rules! merged {
        ($field:ident) => {{
            let use_flag = pick(
                stringify!($field),
                file.$field.is_some(),
                flags.$field.is_some(),
                file.$field != flags.$field,
            );
            if use_flag {
                flags.$field.clone()
            } else {
                file.$field.clone().or(defaults.$field.clone())
            }
        }};
    }
    let n_list = merged!(n_list);
    let realizations = merged!(realizations);
    let q_list = merged!(q_list);
    let energy = merged!(energy);
    let base_seed = merged!(base_seed);
    let output_dir = merged!(output_dir);
    let threads = merged!(threads);

    let width = match (
        file.sigma.or(defaults.sigma.filter(|_| file.gamma.is_none())),
        file.gamma.or(defaults.gamma.filter(|_| file.sigma.is_none())),
    ) {
        (Some(_), Some(_)) => {
            return Err(CliError::invalid("sigma", "set either sigma or gamma, not both"))
        }
        (Some(s), None) => Some(WidthRule::Sigma(s)),
        (None, Some(g)) => Some(WidthRule::Gamma(g)),
        (None, None) => None,
    };

    let config = RunConfig {
        experiment,
        n_list: n_list.unwrap_or_default(),
        realizations: realizations.unwrap_or(0),
        q_list: q_list.unwrap_or_default(),
        energy: energy.unwrap_or(0.0),
        width,
        profile: file.profile.or(defaults.profile).unwrap_or(ProfileKind::Uniform),
        profile_file: file.profile_file.clone(),
        window: file
            .window
            .or(defaults.window)
            .unwrap_or(WindowSpec::NearestK { count: None }),
        dos: file.dos.or(defaults.dos),
        curve: file.curve.or(defaults.curve),
        gates: file.gates.or(defaults.gates).unwrap_or_default(),
        base_seed: base_seed.unwrap_or(1),
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from("srmt-out").join(experiment.name())),
        threads,
    };
    validate(&config, file.allow_large.unwrap_or(false))?;
    Ok((config, warnings))
}

fn averaged_e_min() -> f64 {
    srmt_core::averaged::E_MIN
}

pub fn validate(c: &RunConfig, allow_large: bool) -> CliResult<()> {
    if c.n_list.is_empty() {
        return Err(CliError::invalid("n_list", "must list at least one size"));
    }
    if let Some(&n) = c.n_list.iter().find(|&&n| n < MIN_SIZE) {
        return Err(CliError::invalid("n_list", format!("size {n} is below {MIN_SIZE}")));
    }
    if c.realizations < 1 {
        return Err(CliError::invalid("realizations", "must be >= 1"));
    }
    if c.q_list.iter().any(|&q| q < 1) {
        return Err(CliError::invalid("q_list", "q values must be >= 1"));
    }
    if !c.energy.is_finite() {
        return Err(CliError::invalid("energy", "must be finite"));
    }
    if c.experiment.is_figure() && !allow_large {
        if let Some(&n) = c.n_list.iter().find(|&&n| n > SIZE_CAP) {
            return Err(CliError::invalid(
                "n_list",
                format!("size {n} exceeds the preset cap {SIZE_CAP}; set allow_large = true"),
            ));
        }
        if c.realizations > REALIZATION_CAP {
            return Err(CliError::invalid(
                "realizations",
                format!("exceeds the preset cap {REALIZATION_CAP}; set allow_large = true"),
            ));
        }
    }
    match (c.experiment.random_w(), c.width) {
        (true, None) => return Err(CliError::invalid("sigma", "Gaussian-W runs need sigma or gamma")),
        (true, Some(w)) => {
            if c.n_list.iter().any(|&n| !(w.sigma(n) > 0.0 && w.sigma(n).is_finite())) {
                return Err(CliError::invalid("sigma", "must give a positive finite width"));
            }
            if c.energy == 0.0 {
                return Err(CliError::invalid("energy", "the averaged theory needs E != 0"));
            }
        }
        (false, Some(_)) => {
            return Err(CliError::invalid("sigma", "only Gaussian-W experiments take sigma or gamma"))
        }
        (false, None) => {}
    }
    if c.profile == ProfileKind::File && c.profile_file.is_none() {
        return Err(CliError::invalid("profile_file", "required when profile = \"file\""));
    }
    match c.window {
        WindowSpec::NearestK { count: Some(0) } => {
            return Err(CliError::invalid("window", "count must be >= 1"))
        }
        WindowSpec::HalfWidth { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
            return Err(CliError::invalid("window", "half_width must be positive"))
        }
        _ => {}
    }
    if let Some(d) = c.dos {
        if d.bins == 0 || !(d.hi > d.lo) || !(d.exclude_band >= 0.0) {
            return Err(CliError::invalid("dos", "needs lo < hi, bins >= 1, exclude_band >= 0"));
        }
        if c.experiment.random_w() && !(d.exclude_band >= averaged_e_min()) {
            return Err(CliError::invalid(
                "dos",
                "Gaussian-W histograms need exclude_band > 0 around the E = 0 singularity",
            ));
        }
    }
    if let Some(cv) = c.curve {
        if cv.points == 0 || !(cv.hi >= cv.lo) {
            return Err(CliError::invalid("curve", "needs lo <= hi and points >= 1"));
        }
    }
    if c.threads == Some(0) {
        return Err(CliError::invalid("threads", "must be >= 1"));
    }
    Ok(())
}
