//! The `cris` command line: argument parsing, config resolution and dispatch.
//!
//! Every [`SimConfig`] field doubles as a `--field-name VALUE` flag and a
//! `CRIS_FIELD_NAME` environment variable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{env_overrides, parse_override, resolve_config, ConfigError, SimConfig, ENV_PREFIX};
use crate::experiments::{
    angle_grid, angular_width, run_angle_pdf, run_blockage_sweep, run_gain_azimuth, run_gain_elevation,
    run_gain_frequency, run_snr_ecdf, ExperimentError, GainRow,
};
use crate::geometry::{AnglePair, CirsGeometry, GeometryError, Pose};
use crate::output::{file_tag, Cell, OutputDir, OutputError, Table};
use crate::phase::{synthesize, PhaseError, PhaseKind};
use crate::rng::substream;
use crate::scenario::{generate_traffic, ScenarioError, TrafficConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Per-field config overrides, one flag per [`SimConfig`] key.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub values: BTreeMap<String, String>,
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

impl FromArgMatches for ConfigOverrides {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut values = BTreeMap::new();
        for key in SimConfig::keys() {
            if let Some(v) = m.get_one::<String>(&key) {
                values.insert(key, v.clone());
            }
        }
        Ok(ConfigOverrides { values })
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        let fresh = Self::from_arg_matches(m)?;
        self.values.extend(fresh.values);
        Ok(())
    }
}

impl Args for ConfigOverrides {
    fn augment_args(mut cmd: Command) -> Command {
        let defaults = serde_json::to_value(SimConfig::default()).expect("config serializes");
        for key in SimConfig::keys() {
            let help = format!("default: {}  [env: {ENV_PREFIX}{}]", defaults[&key], key.to_uppercase());
            // clap ids and long names need 'static strings; this runs once per process
            let long: &'static str = Box::leak(flag_name(&key).into_boxed_str());
            let id: &'static str = Box::leak(key.into_boxed_str());
            cmd = cmd.arg(
                Arg::new(id).long(long).value_name("VALUE").global(true).help(help).help_heading("Config overrides"),
            );
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

#[derive(Debug, Parser)]
#[command(name = "cris", version, about = "Conformal metasurface V2V link simulator")]
pub struct Cli {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileKind {
    Bare,
    Optimal,
    Planar,
    Elevation,
    Perpendicular,
    Preconfigured,
    Azimuth,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[arg(long, value_enum, default_value = "perpendicular")]
    pub kind: ProfileKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta_i_deg: f64,
    #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
    pub phi_i_deg: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta_o_deg: f64,
    #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
    pub phi_o_deg: f64,
    /// Curvature radius; defaults to the first configured radius.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Normalized gain versus incidence elevation (specular elevation plane).
    GainElevation,
    /// Normalized gain versus incidence azimuth (specular azimuth plane).
    GainAzimuth,
    /// Elevation gain curves at several frequencies, fixed area.
    GainFrequency,
    /// Blockage probability over traffic density and TxV-RxV distance.
    Blockage,
    /// SNR ECDFs for direct, direct + C-IRS and direct + C-RIS links.
    SnrEcdf,
    /// Incidence angle histograms at relay doors.
    AnglePdf,
    /// Per-element phase profile.
    PhaseDump(PhaseArgs),
    /// One random scene as JSON.
    ScenarioDump {
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Element positions and normals.
    GeometryDump {
        #[arg(long)]
        radius: Option<f64>,
    },
}

impl Commands {
    pub fn name(&self) -> &'static str {
        match self {
            Commands::GainElevation => "gain-elevation",
            Commands::GainAzimuth => "gain-azimuth",
            Commands::GainFrequency => "gain-frequency",
            Commands::Blockage => "blockage",
            Commands::SnrEcdf => "snr-ecdf",
            Commands::AnglePdf => "angle-pdf",
            Commands::PhaseDump(_) => "phase-dump",
            Commands::ScenarioDump { .. } => "scenario-dump",
            Commands::GeometryDump { .. } => "geometry-dump",
        }
    }
}

/// Resolve the configuration for `cli` using the process environment.
pub fn config_for(cli: &Cli) -> Result<SimConfig, CliError> {
    let env = env_overrides(std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)));
    let flags: BTreeMap<String, Value> =
        cli.overrides.values.iter().map(|(k, v)| (k.clone(), parse_override(k, v))).collect();
    Ok(resolve_config(cli.config.as_deref(), &env, &flags)?)
}

/// Run a parsed command line; returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = config_for(&cli)?;
    let work = || dispatch(&cli.command, &config, &cli.out_dir);
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Threads(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn gain_table(rows: &[GainRow], prefix: Option<f64>) -> Result<Table, OutputError> {
    let mut t = match prefix {
        Some(_) => Table::new(&["f_ghz", "angle_deg", "gain_db_cirs", "gain_db_flat", "gain_db_bare"]),
        None => Table::new(&["angle_deg", "gain_db_cirs", "gain_db_flat", "gain_db_bare"]),
    };
    for r in rows {
        let mut cells: Vec<Cell> = prefix.map(Cell::from).into_iter().collect();
        cells.extend([r.angle_deg.into(), r.cirs_db.into(), r.flat_db.into(), r.bare_db.into()]);
        t.push(cells)?;
    }
    Ok(t)
}

fn width_summary(rows: &[GainRow], near: f64) -> Value {
    let angles: Vec<f64> = rows.iter().map(|r| r.angle_deg).collect();
    let gains: Vec<f64> = rows.iter().map(|r| r.cirs_db).collect();
    let peak = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    json!({ "peak_db": peak, "width_3db_deg": angular_width(&angles, &gains, near, 3.0) })
}

/// Run one subcommand with a resolved configuration.
pub fn dispatch(command: &Commands, config: &SimConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = OutputDir::create(out_dir, command.name(), config)?;
    let step = config.sweep_step_deg;
    match command {
        Commands::GainElevation => {
            for &r in &config.radii_m {
                let rows = run_gain_elevation(&config.gain_sweep(r, angle_grid(20.0, 160.0, step)))?;
                let name = format!("gain_elevation_r{}.csv", file_tag(r));
                out.csv_with_summary(&name, &gain_table(&rows, None)?, width_summary(&rows, 90.0))?;
            }
        }
        Commands::GainAzimuth => {
            for &r in &config.radii_m {
                let rows = run_gain_azimuth(&config.gain_sweep(r, angle_grid(-89.0, 89.0, step)))?;
                let name = format!("gain_azimuth_r{}.csv", file_tag(r));
                out.csv_with_summary(&name, &gain_table(&rows, None)?, width_summary(&rows, config.design_theta_deg))?;
            }
        }
        Commands::GainFrequency => {
            let spec = config.gain_sweep(config.radii_m[0], angle_grid(20.0, 160.0, step));
            let curves = run_gain_frequency(&spec, &config.frequencies_ghz)?;
            let mut all = Table::new(&["f_ghz", "angle_deg", "gain_db_cirs", "gain_db_flat", "gain_db_bare"]);
            let mut summary = Table::new(&["f_ghz", "elements_per_axis", "peak_db", "width_deg"]);
            for c in &curves {
                for r in &c.rows {
                    all.push(vec![
                        c.frequency_ghz.into(),
                        r.angle_deg.into(),
                        r.cirs_db.into(),
                        r.flat_db.into(),
                        r.bare_db.into(),
                    ])?;
                }
                summary.push(vec![
                    c.frequency_ghz.into(),
                    c.elements_per_axis.into(),
                    c.peak_db.into(),
                    c.width_deg.into(),
                ])?;
            }
            out.csv("gain_frequency.csv", &all)?;
            out.csv("gain_frequency_summary.csv", &summary)?;
        }
        Commands::Blockage => {
            let rows = run_blockage_sweep(&config.blockage_spec())?;
            let mut t = Table::new(&["rho", "r_d", "mode", "p_block", "ci_low", "ci_high", "trials"]);
            for r in rows {
                t.push(vec![
                    r.rho.into(),
                    r.r_d.into(),
                    r.mode.label().into(),
                    r.p_block.into(),
                    r.ci_low.into(),
                    r.ci_high.into(),
                    r.trials.into(),
                ])?;
            }
            out.csv("blockage.csv", &t)?;
        }
        Commands::SnrEcdf => {
            let spec = config.snr_spec();
            let curves = run_snr_ecdf(&spec)?;
            let mut summary =
                Table::new(&["mode", "radius", "rho", "r_d", "median_db", "median_ci_low", "median_ci_high", "trials"]);
            for c in &curves {
                let mut t = Table::new(&["snr_db", "ecdf"]);
                let n = c.ecdf.len() as f64;
                for (i, &v) in c.ecdf.values().iter().enumerate() {
                    t.push(vec![v.into(), ((i + 1) as f64 / n).into()])?;
                }
                let name = format!(
                    "snr_ecdf_{}_r{}_rho{}_rd{}.csv",
                    c.mode.label(),
                    file_tag(c.radius),
                    file_tag(c.rho),
                    file_tag(c.r_d)
                );
                out.csv(&name, &t)?;
                summary.push(vec![
                    c.mode.label().into(),
                    c.radius.into(),
                    c.rho.into(),
                    c.r_d.into(),
                    c.median_db.into(),
                    c.median_ci.0.into(),
                    c.median_ci.1.into(),
                    (c.ecdf.len() as u64).into(),
                ])?;
            }
            out.csv("snr_summary.csv", &summary)?;
        }
        Commands::AnglePdf => {
            let pdf = run_angle_pdf(&config.angle_pdf_spec())?;
            for (name, h) in [("angle_pdf_elevation.csv", &pdf.elevation), ("angle_pdf_azimuth.csv", &pdf.azimuth)] {
                let mut t = Table::new(&["angle_deg", "density", "count"]);
                for ((c, d), n) in h.centers().iter().zip(h.density()).zip(&h.counts) {
                    t.push(vec![(*c).into(), d.into(), (*n).into()])?;
                }
                let summary = json!({
                    "samples": pdf.samples,
                    "elevation_mean_deg": pdf.elevation_mean_deg,
                    "elevation_std_deg": pdf.elevation_std_deg,
                });
                out.csv_with_summary(name, &t, summary)?;
            }
        }
        Commands::PhaseDump(args) => {
            let radius = args.radius.unwrap_or(config.radii_m[0]);
            let d = config.element_spacing();
            let g = CirsGeometry::new(config.elements_m, config.elements_n, radius, d, d, Pose::IDENTITY)?;
            let inc = AnglePair::new(args.theta_i_deg.to_radians(), args.phi_i_deg.to_radians());
            let refl = AnglePair::new(args.theta_o_deg.to_radians(), args.phi_o_deg.to_radians());
            let kind = match args.kind {
                ProfileKind::Bare => PhaseKind::Bare,
                ProfileKind::Optimal => PhaseKind::Optimal { incidence: inc, reflection: refl },
                ProfileKind::Planar => PhaseKind::Planar { incidence: inc, reflection: refl },
                ProfileKind::Elevation => PhaseKind::Elevation { phi_i: inc.phi, phi_o: refl.phi },
                ProfileKind::Perpendicular => PhaseKind::Perpendicular,
                ProfileKind::Preconfigured => PhaseKind::Preconfigured { theta_bar: config.theta_bar_deg.to_radians() },
                ProfileKind::Azimuth => PhaseKind::Azimuth { theta_i: inc.theta, theta_o: refl.theta },
            };
            let profile = synthesize(&g, &kind, config.wavelength())?;
            let mut t = Table::new(&["m", "n", "psi_m", "phase_rad", "amplitude"]);
            for ((e, &p), &a) in g.elements().iter().zip(profile.phases()).zip(profile.amplitudes()) {
                t.push(vec![e.m.into(), e.n.into(), e.psi.into(), p.into(), a.into()])?;
            }
            out.csv_with_summary("phase.csv", &t, json!({ "kind": kind, "radius": radius }))?;
        }
        Commands::ScenarioDump { trial } => {
            let cfg = TrafficConfig {
                road: config.road(),
                vehicle: config.vehicle(),
                rho: config.rho[0],
                r_d: config.r_d[0],
            };
            let s = generate_traffic(&cfg, &mut substream(config.seed, "traffic", *trial))?;
            let vehicles: Vec<Value> = s
                .vehicles
                .iter()
                .map(|v| json!({ "lane": v.lane, "x": v.x, "y": v.y, "box": [v.shape.length, v.shape.width, v.shape.height] }))
                .collect();
            let doc = json!({
                "road": s.road,
                "rho": cfg.rho,
                "r_d": cfg.r_d,
                "trial": trial,
                "txv": s.txv,
                "rxv": s.rxv,
                "p_t": s.p_t(),
                "p_r": s.p_r(),
                "vehicles": vehicles,
            });
            out.json("scenario.json", &doc)?;
        }
        Commands::GeometryDump { radius } => {
            let radius = radius.unwrap_or(config.radii_m[0]);
            let d = config.element_spacing();
            let g = CirsGeometry::new(config.elements_m, config.elements_n, radius, d, d, Pose::IDENTITY)?;
            let mut t = Table::new(&["m", "n", "psi_m", "x", "y", "z", "nx", "ny", "nz"]);
            for e in g.elements() {
                let (p, n) = (e.position, e.normal);
                t.push(vec![
                    e.m.into(),
                    e.n.into(),
                    e.psi.into(),
                    p.x.into(),
                    p.y.into(),
                    p.z.into(),
                    n.x.into(),
                    n.y.into(),
                    n.z.into(),
                ])?;
            }
            out.csv_with_summary("geometry.csv", &t, json!({ "radius": radius, "area_m2": g.surface_area() }))?;
        }
    }
    Ok(out.written().to_vec())
}
