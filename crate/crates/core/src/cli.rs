//! Batch front end: TOML run configurations, protocol execution, parameter
//! sweeps and plain-text artifacts.
//!
//! A run directory contains
//!
//! * `metrics.csv` with one row per run (per grid point for sweeps),
//! * `final.txt` and, optionally, `snapshots/NN_label.txt` density matrices,
//! * `populations.csv` with the final computational-basis populations,
//! * `spectrum_*.csv` simulated spectra,
//! * `resolved.toml`, the configuration with every default filled in.
//!
//! Sweep points write their state files to `point_NNN/`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{simulate_spectrum, SpectrumParams};
use crate::protocols::{preset, Preset, ProtocolOptions, ProtocolResult, ProtocolSpec, PRESET_NAMES};
use crate::relaxation::RelaxationModel;
use crate::spincore::{equilibrium_state, DensityMatrix, SpinSystem};
use crate::{CMatrix, Error, Result};

/// Run-wide switches.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    /// Fidelity of the singlet preparation and conversion gates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_fidelity: Option<f64>,
    /// Gradient also removes zero-quantum coherences.
    pub strict_gradient: bool,
    /// Perfect gates and the ideal relaxation limit.
    pub ideal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Duration of every spin-lock in the protocol (s).
    LockDuration,
    /// Singlet decay constant of every locked pair (s).
    Ts,
    /// `t1` of every spin (s).
    T1,
    /// Lock coherence decay constant of every locked pair (s).
    TLockCoh,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::LockDuration => "lock_duration",
            SweepParameter::Ts => "ts",
            SweepParameter::T1 => "t1",
            SweepParameter::TLockCoh => "t_lock_coh",
        }
    }
}

/// A one-dimensional parameter grid: explicit `values`, or an inclusive
/// `start`/`stop`/`step` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if step.is_nan() || step <= 0.0 || stop < start {
                    return Err(Error::Config(format!(
                        "sweep range needs step > 0 and stop ≥ start (got {start}..{stop} by {step})"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
            _ => {
                return Err(Error::Config(
                    "sweep needs either `values` or all of `start`, `stop`, `step`".into(),
                ))
            }
        };
        if pts.is_empty() {
            return Err(Error::Config("sweep has no points".into()));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        Ok(pts)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectraSelection {
    None,
    #[default]
    Final,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every intermediate density matrix.
    pub snapshots: bool,
    /// Which states get a simulated spectrum; the equilibrium reference
    /// spectrum is written whenever this is not `none`.
    pub spectra: SpectraSelection,
    pub spectrum: SpectrumParams,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshots: true,
            spectra: SpectraSelection::Final,
            spectrum: SpectrumParams::default(),
        }
    }
}

/// A fully resolved, validated run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub system: SpinSystem,
    pub relaxation: RelaxationModel,
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    system: Option<SpinSystem>,
    relaxation: Option<RelaxationModel>,
    protocol: Option<ProtocolSpec>,
    #[serde(default)]
    options: RunOptions,
    sweep: Option<Sweep>,
    #[serde(default)]
    output: OutputConfig,
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let base: Option<Preset> = raw.preset.as_deref().map(preset).transpose()?;
    let missing = |section: &str| {
        Error::Config(format!(
            "missing [{section}] section (give it explicitly or set `preset`)"
        ))
    };
    let system = match (raw.system, &base) {
        (Some(s), _) => s,
        (None, Some(p)) => p.system.clone(),
        (None, None) => return Err(missing("system")),
    };
    let relaxation = match (raw.relaxation, &base) {
        (Some(m), _) => m,
        (None, Some(p)) => p.relaxation.clone(),
        (None, None) => return Err(missing("relaxation")),
    };
    let protocol = match (raw.protocol, &base) {
        (Some(s), _) => s,
        (None, Some(p)) => p.protocol.clone(),
        (None, None) => return Err(missing("protocol")),
    };
    let config = RunConfig {
        preset: raw.preset,
        system,
        relaxation,
        protocol,
        options: raw.options,
        sweep: raw.sweep,
        output: raw.output,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Configuration equivalent to a built-in preset.
    pub fn from_preset(name: &str) -> Result<Self> {
        let p = preset(name)?;
        Ok(Self {
            preset: Some(name.to_string()),
            system: p.system,
            relaxation: p.relaxation,
            protocol: p.protocol,
            options: RunOptions::default(),
            sweep: None,
            output: OutputConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.system.n();
        if self.relaxation.n() != n {
            return Err(Error::Config(format!(
                "relaxation.t1 has {} entries but the system has {n} spins",
                self.relaxation.n()
            )));
        }
        if let Some(k) = self.protocol.required_spins() {
            if k != n {
                return Err(Error::Config(format!(
                    "protocol is written for {k} spins but the system has {n}"
                )));
            }
        }
        if let ProtocolSpec::Schedule { stages, target } = &self.protocol {
            crate::protocols::Schedule {
                stages: stages.clone(),
                target: target.clone(),
            }
            .validate(n)?;
        }
        for pair in self.protocol.locked_pairs() {
            self.relaxation.entry(pair).map_err(|e| {
                Error::Config(format!("{e}; add a [[relaxation.singlet]] entry"))
            })?;
        }
        if let Some(f) = self.options.gate_fidelity {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Fidelity(f));
            }
        }
        if let Some(s) = &self.sweep {
            s.points()?;
        }
        self.output.spectrum.validate()?;
        Ok(())
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn protocol_options(&self) -> ProtocolOptions {
        ProtocolOptions {
            gate_fidelity: if self.options.ideal {
                1.0
            } else {
                self.options.gate_fidelity.unwrap_or(1.0)
            },
            strict_gradient: self.options.strict_gradient,
            rf_scale: 1.0,
        }
    }

    /// Model and protocol for one grid point (or the single run).
    fn resolve_point(&self, value: Option<f64>) -> Result<(RelaxationModel, ProtocolSpec)> {
        let mut model = self.relaxation.clone();
        let mut protocol = self.protocol.clone();
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            match s.parameter {
                SweepParameter::LockDuration => protocol = protocol.with_lock_duration(v),
                SweepParameter::Ts => model = model.with_ts(v)?,
                SweepParameter::T1 => model = model.with_t1(v)?,
                SweepParameter::TLockCoh => model = model.with_lock_coherence(v)?,
            }
        }
        if self.options.ideal {
            model = RelaxationModel::ideal(self.system.n(), &protocol.locked_pairs())?;
            protocol = protocol.with_ideal_gates();
        }
        Ok((model, protocol))
    }

    pub fn execute(&self, value: Option<f64>) -> Result<ProtocolResult> {
        let (model, protocol) = self.resolve_point(value)?;
        protocol.run(&self.system, &model, &self.protocol_options())
    }
}

/// Writes a density matrix as two blocks of whitespace-separated values.
pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# dim {}", m.nrows());
    for (tag, part) in [("real", 0usize), ("imag", 1)] {
        let _ = writeln!(out, "# {tag}");
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    let v = if part == 0 { z.re } else { z.im };
                    format!("{v:e}")
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

/// Inverse of [`format_matrix`].
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let bad = |msg: &str| Error::Parse {
        path: "matrix".into(),
        message: msg.to_string(),
    };
    let mut lines = text.lines();
    let dim: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("# dim "))
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| bad("missing `# dim` header"))?;
    let mut m = CMatrix::zeros(dim, dim);
    for part in 0..2 {
        let tag = lines.next().ok_or_else(|| bad("truncated"))?;
        let expect = if part == 0 { "# real" } else { "# imag" };
        if tag.trim() != expect {
            return Err(bad(&format!("expected `{expect}`")));
        }
        for i in 0..dim {
            let row = lines.next().ok_or_else(|| bad("truncated"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad(&format!("bad number `{v}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != dim {
                return Err(bad(&format!("row {} has {} entries", i + 1, vals.len())));
            }
            for (j, v) in vals.into_iter().enumerate() {
                if part == 0 {
                    m[(i, j)].re = v;
                } else {
                    m[(i, j)].im = v;
                }
            }
        }
    }
    Ok(m)
}

fn ket_label(index: usize, n: usize) -> String {
    format!("{index:0n$b}")
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' { ch } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

fn populations_csv(rho: &DensityMatrix) -> String {
    let n = rho.n_spins();
    let mut out = String::from("ket,index,population\n");
    for (i, p) in rho.populations().iter().enumerate() {
        let _ = writeln!(out, "{},{i},{p:e}", ket_label(i, n));
    }
    out
}

fn spectrum_csv(rho: &DensityMatrix, system: &SpinSystem, params: &SpectrumParams) -> Result<String> {
    let s = simulate_spectrum(rho, system, params)?;
    let mut out = String::from("frequency_hz,real,imag\n");
    for (f, a) in s.frequencies.iter().zip(&s.amplitudes) {
        let _ = writeln!(out, "{f},{:e},{:e}", a.re, a.im);
    }
    Ok(out)
}

/// Writes the state artifacts of one protocol run into `dir`.
fn write_run(config: &RunConfig, result: &ProtocolResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("final.txt"), format_matrix(result.final_state.matrix()))?;
    fs::write(dir.join("populations.csv"), populations_csv(&result.final_state))?;
    if config.output.snapshots {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for (k, (label, state)) in result.snapshots.iter().enumerate() {
            let name = format!("{k:02}_{}.txt", file_label(label));
            fs::write(snap_dir.join(name), format_matrix(state.matrix()))?;
        }
    }
    let params = &config.output.spectrum;
    match config.output.spectra {
        SpectraSelection::None => {}
        SpectraSelection::Final => {
            fs::write(
                dir.join("spectrum_final.csv"),
                spectrum_csv(&result.final_state, &config.system, params)?,
            )?;
        }
        SpectraSelection::All => {
            for (k, (label, state)) in result.snapshots.iter().enumerate() {
                let name = format!("spectrum_{k:02}_{}.csv", file_label(label));
                fs::write(dir.join(name), spectrum_csv(state, &config.system, params)?)?;
            }
        }
    }
    Ok(())
}

/// Where a run left its artifacts.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub points: usize,
    pub metrics_path: PathBuf,
}

fn metrics_table(rows: &[(Option<f64>, &ProtocolResult)], parameter: Option<&str>) -> String {
    let names: BTreeSet<&String> = rows.iter().flat_map(|(_, r)| r.metrics.keys()).collect();
    let mut out = String::from("point,parameter,value");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (k, (value, r)) in rows.iter().enumerate() {
        let _ = write!(
            out,
            "{k},{},{}",
            parameter.unwrap_or(""),
            value.map(|v| v.to_string()).unwrap_or_default()
        );
        for n in &names {
            out.push(',');
            if let Some(v) = r.metrics.get(*n) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Executes the configured run or sweep and writes all artifacts under
/// `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("resolved.toml"), config.to_toml()?)?;
    if config.output.spectra != SpectraSelection::None {
        let eq = equilibrium_state(&config.system);
        fs::write(
            out_dir.join("spectrum_equilibrium.csv"),
            spectrum_csv(&eq, &config.system, &config.output.spectrum)?,
        )?;
    }
    let (points, parameter): (Vec<Option<f64>>, Option<&str>) = match &config.sweep {
        Some(s) => (s.points()?.into_iter().map(Some).collect(), Some(s.parameter.name())),
        None => (vec![None], None),
    };
    let sweeping = config.sweep.is_some();
    let results: Vec<ProtocolResult> = points
        .par_iter()
        .enumerate()
        .map(|(k, value)| {
            let result = config.execute(*value)?;
            let dir = if sweeping {
                out_dir.join(format!("point_{k:03}"))
            } else {
                out_dir.to_path_buf()
            };
            write_run(config, &result, &dir)?;
            Ok(result)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<(Option<f64>, &ProtocolResult)> = points.iter().copied().zip(&results).collect();
    let metrics_path = out_dir.join("metrics.csv");
    fs::write(&metrics_path, metrics_table(&rows, parameter))?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        points: points.len(),
        metrics_path,
    })
}

#[derive(Debug, Parser)]
#[command(name = "singlet-init", version, about = "Singlet-state initialization of spin registers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Let the gradient remove zero-quantum coherences too.
    #[arg(long)]
    pub strict_gradient: bool,
    /// Perfect gates and the ideal relaxation limit.
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configuration (including its sweep, if any).
    Run(RunArgs),
    /// Run a configuration's parameter sweep.
    Sweep(RunArgs),
    /// Built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check a configuration and print it with defaults resolved.
    Validate {
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as a complete configuration file.
    Show { name: String },
}

fn prepared(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let mut config = load_config(&args.config)?;
    config.options.strict_gradient |= args.strict_gradient;
    config.options.ideal |= args.ideal;
    let out = args.out.clone().unwrap_or_else(|| config.output.dir.clone());
    Ok((config, out))
}

fn print_metrics(path: &Path) -> Result<()> {
    print!("{}", fs::read_to_string(path)?);
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let (config, out) = prepared(&args)?;
            let summary = run(&config, &out)?;
            print_metrics(&summary.metrics_path)?;
            eprintln!("wrote {} run(s) to {}", summary.points, summary.out_dir.display());
        }
        Command::Sweep(args) => {
            let (config, out) = prepared(&args)?;
            if config.sweep.is_none() {
                return Err(Error::Config(format!(
                    "{} has no [sweep] section",
                    args.config.display()
                )));
            }
            let summary = run(&config, &out)?;
            print_metrics(&summary.metrics_path)?;
            eprintln!("wrote {} sweep points to {}", summary.points, summary.out_dir.display());
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in PRESET_NAMES {
                    println!("{name}\t{}", preset(name)?.description);
                }
            }
            PresetAction::Show { name } => print!("{}", RunConfig::from_preset(&name)?.to_toml()?),
        },
        Command::Validate { config } => {
            let c = load_config(&config)?;
            print!("{}", c.to_toml()?);
        }
    }
    Ok(())
}

/// Process entry point: parses `std::env::args`, reports errors on stderr
/// and maps them to a nonzero exit status.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
