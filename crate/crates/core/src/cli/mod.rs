//! Command-line front end and the two circle presets.
//!
//! Configuration comes from three layers, highest precedence first: command
//! line flags, a flat JSON config file, and built-in defaults (including the
//! preset's own defaults). Every config key has a flag of the same name.

mod artifacts;
mod generate;

pub use artifacts::{
    cloud_svg, diagram_svg, emit_artifacts, read_diagram_csv, read_points_csv, write_diagram_csv, write_points_csv,
};
pub use generate::{generate_noisy_circle, generate_uniform_square};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::complex::{build_rips, default_max_radius, PointCloud};
use crate::dynamics::{run_flow, DegreeDriver, Driver, EnergyFunctional, FlowConfig, FlowState, FlowTrajectory, PlanMethod};
use crate::error::{Error, Result};
use crate::persistence::{compute_pairing, extract_diagram};
use crate::transport::Point2;

pub const PRESETS: [&str; 2] = ["denoise-circle", "emerge-circle"];

/// One layer of run configuration. Absent keys fall through to the next
/// layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigLayer {
    /// Named experiment: denoise-circle or emerge-circle.
    #[arg(long)]
    pub preset: Option<String>,
    /// Point CSV to evolve (header x,y).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic data: noisy-circle or uniform-square.
    #[arg(long)]
    pub generator: Option<String>,
    /// Number of generated points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Circle radius of the noisy-circle generator.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Noise standard deviation of the noisy-circle generator.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write SVG plots.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plots: Option<bool>,
    /// Outer steps K.
    #[arg(long = "k")]
    pub k: Option<usize>,
    /// Inner steps S per outer step.
    #[arg(long = "s")]
    pub s: Option<usize>,
    /// Inner learning rate.
    #[arg(long)]
    pub eta: Option<f64>,
    /// JKO step size.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sinkhorn_reg: Option<f64>,
    /// Transport plan for McCann targets: sinkhorn or exact.
    #[arg(long)]
    pub plan: Option<String>,
    #[arg(long)]
    pub n_projections: Option<usize>,
    #[arg(long)]
    pub jko_inner_iters: Option<usize>,
    #[arg(long)]
    pub jko_lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda_rep: Option<f64>,
    #[arg(long)]
    pub repulsion_eps: Option<f64>,
    /// Highest simplex dimension of the Rips complex (1 or 2).
    #[arg(long)]
    pub max_dim: Option<usize>,
    /// Rips threshold; defaults to 1.1 times the cloud diameter.
    #[arg(long)]
    pub max_radius: Option<f64>,
    /// Driver of the H0 diagram: mccann, jko, denoise or none.
    #[arg(long)]
    pub h0: Option<String>,
    /// McCann target for H0 as `b,d;b,d;...`.
    #[arg(long)]
    pub h0_target: Option<String>,
    /// Energy functional for an H0 jko driver.
    #[arg(long)]
    pub h0_functional: Option<String>,
    /// Points kept off the diagonal by an H0 denoise driver.
    #[arg(long)]
    pub h0_keep_top: Option<usize>,
    /// Driver of the H1 diagram: mccann, jko, denoise or none.
    #[arg(long)]
    pub h1: Option<String>,
    #[arg(long)]
    pub h1_target: Option<String>,
    #[arg(long)]
    pub h1_functional: Option<String>,
    #[arg(long)]
    pub h1_keep_top: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $bottom:expr, $($f:ident),*) => {
        ConfigLayer { $($f: $top.$f.or($bottom.$f)),* }
    };
}

impl ConfigLayer {
    /// Keys of `self` win over keys of `below`.
    pub fn over(self, below: ConfigLayer) -> ConfigLayer {
        overlay!(
            self, below, preset, input, generator, n, radius, sigma, out, plots, k, s, eta, tau, sinkhorn_reg, plan,
            n_projections, jko_inner_iters, jko_lr, seed, lambda_rep, repulsion_eps, max_dim, max_radius, h0,
            h0_target, h0_functional, h0_keep_top, h1, h1_target, h1_functional, h1_keep_top
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Defaults a preset contributes below the user's keys.
pub fn preset_layer(name: &str) -> Result<ConfigLayer> {
    match name {
        "denoise-circle" => Ok(ConfigLayer {
            generator: Some("noisy-circle".into()),
            n: Some(100),
            radius: Some(0.6),
            sigma: Some(0.05),
            // a ring whose H1 death starts below the functional's attractor,
            // and a soft repulsion that lets neighbours settle at 0.05
            repulsion_eps: Some(0.5),
            h0: Some("mccann".into()),
            h0_target: Some("0,0.05".into()),
            h1: Some("jko".into()),
            h1_functional: Some("denoise_circle".into()),
            ..ConfigLayer::default()
        }),
        "emerge-circle" => Ok(ConfigLayer {
            generator: Some("uniform-square".into()),
            n: Some(250),
            h0: Some("mccann".into()),
            h0_target: Some("0,0.08".into()),
            h1: Some("jko".into()),
            h1_functional: Some("emerge_circle".into()),
            // the full Rips complex of 250 points has 2.6M simplices
            max_radius: Some(0.5),
            ..ConfigLayer::default()
        }),
        other => Err(Error::Config(format!("unknown preset {other:?} (expected one of {PRESETS:?})"))),
    }
}

fn base_layer(name: &str, generator: Option<&str>) -> ConfigLayer {
    let d = FlowConfig::default();
    let (n, radius, sigma) = match generator {
        Some("noisy-circle") => (Some(100), Some(1.0), Some(0.05)),
        Some("uniform-square") => (Some(250), None, None),
        _ => (None, None, None),
    };
    ConfigLayer {
        n,
        radius,
        sigma,
        out: Some(PathBuf::from("runs").join(name)),
        plots: Some(true),
        k: Some(d.k),
        s: Some(d.s),
        eta: Some(d.eta),
        tau: Some(d.tau),
        sinkhorn_reg: Some(d.sinkhorn_reg),
        plan: Some("sinkhorn".into()),
        n_projections: Some(d.n_projections),
        jko_inner_iters: Some(d.jko_inner_iters),
        jko_lr: Some(d.jko_lr),
        seed: Some(d.seed),
        lambda_rep: Some(d.lambda_rep),
        repulsion_eps: Some(d.repulsion_eps),
        max_dim: Some(d.max_dim),
        ..ConfigLayer::default()
    }
}

/// Where the initial cloud comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Input(PathBuf),
    NoisyCircle { n: usize, radius: f64, sigma: f64 },
    UniformSquare { n: usize },
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Every key after layering, echoed into `trajectory.json`.
    pub resolved: ConfigLayer,
    pub source: Source,
    pub out: PathBuf,
    pub plots: bool,
    pub flow: FlowConfig,
}

fn parse_points(key: &str, text: &str) -> Result<Vec<Point2>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let v: Vec<f64> = pair
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {pair:?} as b,d")))?;
            match v[..] {
                [b, d] if d >= b => Ok([b, d]),
                [_, _] => Err(Error::Config(format!("{key}: target {pair:?} lies below the diagonal"))),
                _ => Err(Error::Config(format!("{key}: expected b,d, got {pair:?}"))),
            }
        })
        .collect()
}

fn driver(
    degree: usize,
    kind: &Option<String>,
    target: &Option<String>,
    functional: &Option<String>,
    keep_top: Option<usize>,
) -> Result<Option<DegreeDriver>> {
    let key = |s: &str| format!("h{degree}-{s}");
    let driver = match kind.as_deref() {
        None => return Ok(None),
        Some("mccann") => {
            let text = target.as_ref().ok_or_else(|| Error::Config(format!("{} is required by a mccann driver", key("target"))))?;
            let target = parse_points(&key("target"), text)?;
            if target.is_empty() {
                return Err(Error::Config(format!("{} is empty", key("target"))));
            }
            Driver::McCann { target }
        }
        Some("jko") => {
            let name = functional.as_ref().ok_or_else(|| Error::Config(format!("{} is required by a jko driver", key("functional"))))?;
            Driver::Jko { functional: EnergyFunctional::from_name(name)? }
        }
        Some("denoise") => Driver::Denoise { keep_top: keep_top.unwrap_or(1) },
        Some("none") => Driver::None,
        Some(other) => return Err(Error::Config(format!("h{degree}: unknown driver {other:?}"))),
    };
    Ok(Some(DegreeDriver { degree, driver }))
}

/// Resolves user keys (file and flags already merged) into a run.
/// `command_preset` is the preset named by the command itself, if any.
pub fn resolve(user: ConfigLayer, command_preset: Option<&str>) -> Result<RunConfig> {
    let preset = match (command_preset, user.preset.as_deref()) {
        (Some(a), Some(b)) if a != b => return Err(Error::Config(format!("preset {a:?} conflicts with preset key {b:?}"))),
        (Some(a), _) | (None, Some(a)) => Some(a.to_string()),
        (None, None) => None,
    };
    let given = [user.input.is_some(), user.generator.is_some(), preset.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(Error::Config("give exactly one of input, generator or preset".into()));
    }
    let preset_keys = match &preset {
        Some(p) => preset_layer(p)?,
        None => ConfigLayer::default(),
    };
    let layered = user.over(preset_keys);
    let name = preset.clone().unwrap_or_else(|| "run".into());
    let r = layered.clone().over(base_layer(&name, layered.generator.as_deref()));
    let r = ConfigLayer { preset, ..r };

    let source = match (&r.input, r.generator.as_deref()) {
        (Some(path), _) => Source::Input(path.clone()),
        (None, Some("noisy-circle")) => Source::NoisyCircle {
            n: r.n.unwrap_or(100),
            radius: r.radius.unwrap_or(1.0),
            sigma: r.sigma.unwrap_or(0.05),
        },
        (None, Some("uniform-square")) => Source::UniformSquare { n: r.n.unwrap_or(250) },
        (None, Some(other)) => return Err(Error::Config(format!("unknown generator {other:?}"))),
        (None, None) => unreachable!("source presence checked above"),
    };
    let plan = match r.plan.as_deref() {
        Some("sinkhorn") | None => PlanMethod::Sinkhorn,
        Some("exact") => PlanMethod::Exact,
        Some(other) => return Err(Error::Config(format!("unknown plan {other:?} (sinkhorn or exact)"))),
    };
    let drivers = [
        driver(0, &r.h0, &r.h0_target, &r.h0_functional, r.h0_keep_top)?,
        driver(1, &r.h1, &r.h1_target, &r.h1_functional, r.h1_keep_top)?,
    ]
    .into_iter()
    .flatten()
    .collect();
    let d = FlowConfig::default();
    let flow = FlowConfig {
        k: r.k.unwrap_or(d.k),
        s: r.s.unwrap_or(d.s),
        eta: r.eta.unwrap_or(d.eta),
        tau: r.tau.unwrap_or(d.tau),
        sinkhorn_reg: r.sinkhorn_reg.unwrap_or(d.sinkhorn_reg),
        plan,
        n_projections: r.n_projections.unwrap_or(d.n_projections),
        jko_inner_iters: r.jko_inner_iters.unwrap_or(d.jko_inner_iters),
        jko_lr: r.jko_lr.unwrap_or(d.jko_lr),
        seed: r.seed.unwrap_or(d.seed),
        lambda_rep: r.lambda_rep.unwrap_or(d.lambda_rep),
        repulsion_eps: r.repulsion_eps.unwrap_or(d.repulsion_eps),
        max_dim: r.max_dim.unwrap_or(d.max_dim),
        max_radius: r.max_radius,
        drivers,
    };
    flow.validate()?;
    Ok(RunConfig {
        out: r.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&name)),
        plots: r.plots.unwrap_or(true),
        resolved: r,
        source,
        flow,
    })
}

/// Initial cloud of a run; generators draw from the run seed.
pub fn load_cloud(config: &RunConfig) -> Result<PointCloud> {
    match &config.source {
        Source::Input(path) => read_points_csv(path),
        Source::NoisyCircle { n, radius, sigma } => generate_noisy_circle(*n, *radius, *sigma, config.flow.seed),
        Source::UniformSquare { n } => generate_uniform_square(*n, config.flow.seed),
    }
}

/// Runs the flow and writes its artifacts. A flow that aborted still has
/// its completed steps written; the abort is reported in the trajectory.
pub fn execute(config: &RunConfig) -> Result<FlowTrajectory> {
    let cloud = load_cloud(config)?;
    let trajectory = run_flow(FlowState::Cloud(cloud), &config.flow)?;
    emit_artifacts(&trajectory, &config.resolved, &config.out, config.plots)?;
    Ok(trajectory)
}

/// Runs a named preset with user overrides on top of its defaults.
pub fn run_preset(name: &str, overrides: ConfigLayer) -> Result<FlowTrajectory> {
    execute(&resolve(overrides, Some(name))?)
}

#[derive(Debug, Parser)]
#[command(name = "dynph", version, about = "Drive persistence diagrams of point clouds along prescribed dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a flow from a config file and/or flags, optionally naming a preset.
    Run {
        #[arg(id = "preset_name", value_name = "PRESET")]
        name: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigLayer,
    },
    /// Denoise a noisy circle: McCann on H0, denoise functional on H1.
    DenoiseCircle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigLayer,
    },
    /// Grow a circle out of uniform noise: McCann on H0, emerge functional on H1.
    EmergeCircle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigLayer,
    },
    /// Print the persistence diagram of a point CSV.
    Pd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        max_radius: Option<f64>,
    },
}

/// Process exit code for an error: 2 for usage and configuration problems,
/// 1 for everything that went wrong at run time.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidDegree { .. } | Error::UnsupportedDimension(_) => 2,
        _ => 1,
    }
}

fn layered(config: Option<PathBuf>, flags: ConfigLayer) -> Result<ConfigLayer> {
    Ok(match config {
        Some(path) => flags.over(ConfigLayer::load(&path)?),
        None => flags,
    })
}

fn run_and_report(user: ConfigLayer, preset: Option<&str>) -> Result<()> {
    let config = resolve(user, preset)?;
    let trajectory = execute(&config)?;
    eprintln!("wrote {} steps to {}", trajectory.steps.len(), config.out.display());
    match trajectory.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn print_diagram(input: &Path, dim: usize, max_radius: Option<f64>) -> Result<()> {
    if dim > 1 {
        return Err(Error::InvalidDegree { degree: dim, max_dim: 2 });
    }
    let cloud = read_points_csv(input)?;
    let radius = max_radius.unwrap_or_else(|| default_max_radius(&cloud));
    let complex = build_rips(&cloud, dim + 1, radius)?;
    let dgm = extract_diagram(&compute_pairing(&complex)?, &complex, dim)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["birth", "death", "birth_simplex", "death_simplex"]).map_err(|e| Error::io("<stdout>", e))?;
    for p in &dgm.points {
        w.write_record([p.birth.to_string(), p.death.to_string(), p.birth_simplex.to_string(), p.death_simplex.to_string()])
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

/// Entry point of the `dynph` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Run { name, config, flags } => layered(config, flags).and_then(|u| run_and_report(u, name.as_deref())),
        Command::DenoiseCircle { config, flags } => layered(config, flags).and_then(|u| run_and_report(u, Some("denoise-circle"))),
        Command::EmergeCircle { config, flags } => layered(config, flags).and_then(|u| run_and_report(u, Some("emerge-circle"))),
        Command::Pd { input, dim, max_radius } => print_diagram(&input, dim, max_radius),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file = ConfigLayer::from_json(r#"{"preset": "denoise-circle", "k": 7, "eta": 0.5}"#).unwrap();
        let flags = ConfigLayer { k: Some(3), ..ConfigLayer::default() };
        let run = resolve(flags.over(file), None).unwrap();
        assert_eq!(run.flow.k, 3);
        assert_eq!(run.flow.eta, 0.5);
        assert_eq!(run.flow.s, 50);
        assert_eq!(run.source, Source::NoisyCircle { n: 100, radius: 0.6, sigma: 0.05 });
    }

    #[test]
    fn presets_wire_their_drivers() {
        let run = resolve(ConfigLayer::default(), Some("emerge-circle")).unwrap();
        assert_eq!(run.flow.drivers[0].driver, Driver::McCann { target: vec![[0.0, 0.08]] });
        assert_eq!(run.flow.drivers[1].driver, Driver::Jko { functional: EnergyFunctional::EmergeCircle });
        assert_eq!(run.source, Source::UniformSquare { n: 250 });
        let run = resolve(ConfigLayer::default(), Some("denoise-circle")).unwrap();
        assert_eq!(run.flow.drivers[0].driver, Driver::McCann { target: vec![[0.0, 0.05]] });
        assert_eq!(run.flow.drivers[1].driver, Driver::Jko { functional: EnergyFunctional::DenoiseCircle });
    }

    #[test]
    fn config_errors() {
        assert!(matches!(resolve(ConfigLayer::default(), None), Err(Error::Config(_))));
        assert!(matches!(resolve(ConfigLayer::default(), Some("spiral")), Err(Error::Config(_))));
        let both = ConfigLayer { generator: Some("uniform-square".into()), ..ConfigLayer::default() };
        assert!(matches!(resolve(both, Some("denoise-circle")), Err(Error::Config(_))));
        assert!(ConfigLayer::from_json(r#"{"bogus": 1}"#).is_err());
        let bad = ConfigLayer { h1_functional: Some("swirl".into()), ..ConfigLayer::default() };
        assert!(matches!(resolve(bad, Some("denoise-circle")), Err(Error::Config(_))));
        let bad = ConfigLayer { h0_target: Some("0.5,0.1".into()), ..ConfigLayer::default() };
        assert!(matches!(resolve(bad, Some("denoise-circle")), Err(Error::Config(_))));
    }

    #[test]
    fn target_lists_parse() {
        assert_eq!(parse_points("t", "0,0.05; 0.1,0.4").unwrap(), vec![[0.0, 0.05], [0.1, 0.4]]);
        assert!(parse_points("t", "1,2,3").is_err());
    }

    #[test]
    fn missing_input_exits_with_one() {
        assert_eq!(main_with_args(["dynph", "pd", "--input", "/nonexistent/points.csv", "--dim", "0"]), 1);
        assert_eq!(main_with_args(["dynph", "run", "--config", "/nonexistent/config.json"]), 1);
    }
}
