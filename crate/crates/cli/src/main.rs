use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use negbound_core::bound::{lower_bound_negativity, lower_bound_negativity_robust, MeasurementSet};
use negbound_core::detector::{homodyne_povm, WignerGrid};
use negbound_core::experiment::{
    default_wigner_selectors, emit_wigner, fmt_sig, reproduce_epsilon_table, run_sweep, vacuum_wigner,
    ExperimentConfig, NoiseKind, SweepAxis, SweepConfig, WignerSelector, TABLE_EPSILONS,
};

#[derive(Parser)]
#[command(name = "negbound", version, about = "Certified lower bounds on logarithmic negativity from weak-homodyne click statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the single-mode POVM of the configured detector and write it as JSON.
    Povm {
        #[command(flatten)]
        common: Common,
        /// Signal-mode photon-number cutoff (defaults to the state's n_max).
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write Wigner-function grids of POVM elements as CSV files.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Click counts to export (default 1,2,3).
        #[arg(long, value_delimiter = ',')]
        clicks: Vec<usize>,
        #[arg(long, default_value_t = 12)]
        cutoff: usize,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        /// Also write the vacuum sanity grid.
        #[arg(long)]
        vacuum: bool,
        #[arg(long, short, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Certify a lower bound for one configuration and print the report as JSON.
    Bound {
        #[command(flatten)]
        common: Common,
        /// JSON array of measured expectation values replacing the simulated ones
        /// (identity first, same ordering as the measurement list).
        #[arg(long)]
        expectations: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write the CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Robust bounds over a list of error budgets.
    Table {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Lambda,
    Transmission,
    ApdEfficiency,
    Reflectivity,
    LoAmplitude,
    DetectorEfficiency,
    ErrorBudget,
    PhaseError,
    PhaseWidth,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Lambda => SweepAxis::Lambda,
            Axis::Transmission => SweepAxis::Transmission,
            Axis::ApdEfficiency => SweepAxis::ApdEfficiency,
            Axis::Reflectivity => SweepAxis::Reflectivity,
            Axis::LoAmplitude => SweepAxis::LoAmplitude,
            Axis::DetectorEfficiency => SweepAxis::DetectorEfficiency,
            Axis::ErrorBudget => SweepAxis::ErrorBudget,
            Axis::PhaseError => SweepAxis::PhaseError,
            Axis::PhaseWidth => SweepAxis::PhaseWidth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    None,
    Static,
    Averaged,
}

/// Config file plus per-field overrides.
#[derive(Args)]
struct Common {
    /// JSON experiment configuration; missing fields take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    transmission: Option<f64>,
    #[arg(long, conflicts_with = "ideal")]
    apd_efficiency: Option<f64>,
    /// Use the ideal weak-reflectivity subtracted state.
    #[arg(long)]
    ideal: bool,
    #[arg(long)]
    lo_amplitude: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    phases: Vec<f64>,
    #[arg(long)]
    reflectivity: Option<f64>,
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    outcomes: Vec<usize>,
    #[arg(long)]
    lo_cutoff: Option<usize>,
    #[arg(long)]
    error_budget: Option<f64>,
    #[arg(long, value_enum)]
    noise: Option<Noise>,
    #[arg(long)]
    phase_error: Option<f64>,
    #[arg(long)]
    phase_width: Option<f64>,
    /// Read --phase-width as a standard deviation.
    #[arg(long)]
    width_is_std: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Seed for the phase-noise draws; required whenever noise is enabled.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.lambda, c.state.lambda);
        set!(self.n_max, c.state.n_max);
        set!(self.transmission, c.state.transmission);
        if self.ideal {
            c.state.apd_efficiency = None;
        }
        if self.apd_efficiency.is_some() {
            c.state.apd_efficiency = self.apd_efficiency;
        }
        set!(self.lo_amplitude, c.detector.lo_amplitude);
        if !self.phases.is_empty() {
            c.detector.phases = self.phases.clone();
        }
        set!(self.reflectivity, c.detector.reflectivity);
        set!(self.efficiency, c.detector.efficiency);
        set!(self.bins, c.detector.bins);
        if !self.outcomes.is_empty() {
            c.detector.outcomes = self.outcomes.clone();
        }
        if self.lo_cutoff.is_some() {
            c.detector.lo_cutoff = self.lo_cutoff;
        }
        set!(self.error_budget, c.error_budget);
        if let Some(n) = self.noise {
            c.noise.model = match n {
                Noise::None => NoiseKind::None,
                Noise::Static => NoiseKind::StaticCalibration,
                Noise::Averaged => NoiseKind::PhaseAveraged,
            };
        }
        set!(self.phase_error, c.noise.epsilon);
        set!(self.phase_width, c.noise.width);
        if self.width_is_std {
            c.noise.width_is_std = true;
        }
        set!(self.samples, c.noise.samples);
        set!(self.trials, c.noise.trials);
        c.noise.seed = self.seed;
        Ok(c)
    }
}

fn noisy(c: &ExperimentConfig) -> bool {
    c.noise.model != NoiseKind::None
        || matches!(c.sweep.as_ref().map(|s| s.axis), Some(SweepAxis::PhaseError | SweepAxis::PhaseWidth))
}

fn require_seed(c: &ExperimentConfig) -> Result<()> {
    if noisy(c) && c.noise.seed.is_none() {
        bail!("phase-noise runs need an explicit --seed");
    }
    Ok(())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn output_path(flag: &Option<PathBuf>, config: &Option<String>) -> Option<PathBuf> {
    flag.clone().or_else(|| config.as_ref().map(PathBuf::from))
}

/// Returns `true` when every row succeeded.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Povm { common, cutoff, out } => {
            let c = common.load()?;
            c.validate()?;
            let det = c.detector.detector();
            let cutoff = cutoff.unwrap_or(c.state.n_max);
            let docs = c
                .detector
                .phases
                .iter()
                .map(|&th| Ok(homodyne_povm(&det.with_phase(th), cutoff)?.to_document()))
                .collect::<Result<Vec<_>>>()?;
            write_or_print(out.as_deref(), &(serde_json::to_string_pretty(&docs)? + "\n"))?;
            Ok(true)
        }
        Command::Wigner { common, clicks, cutoff, points, extent, vacuum, out_dir } => {
            let c = common.load()?;
            c.detector.detector().validate()?;
            let grid = WignerGrid { x_min: -extent, x_max: extent, p_min: -extent, p_max: extent, nx: points, np: points };
            let selectors: Vec<WignerSelector> = if clicks.is_empty() {
                default_wigner_selectors()
            } else {
                c.detector
                    .phases
                    .iter()
                    .flat_map(|&phase| clicks.iter().map(move |&k| WignerSelector { clicks: k, phase }))
                    .collect()
            };
            let mut maps = emit_wigner(&c, &selectors, &grid, cutoff)?;
            if vacuum {
                maps.push(vacuum_wigner(&grid)?);
            }
            fs::create_dir_all(&out_dir)?;
            for m in &maps {
                let path = out_dir.join(&m.name);
                fs::write(&path, m.map.to_csv()).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("{}", path.display());
            }
            Ok(true)
        }
        Command::Bound { common, expectations, out } => {
            let c = common.load()?;
            c.validate()?;
            let ops = c.measurements()?;
            let ms = match expectations {
                Some(p) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let data: Vec<f64> = serde_json::from_str(&text)?;
                    MeasurementSet::new(ops, data)?
                }
                None => MeasurementSet::simulate(ops, &c.subtracted_state()?)?,
            };
            let r = if c.error_budget > 0.0 {
                lower_bound_negativity_robust(&ms, c.error_budget)?
            } else {
                lower_bound_negativity(&ms)?
            };
            eprintln!(
                "lower bound {} (status {}, verified {})",
                fmt_sig(r.lower_bound),
                r.solver_status,
                r.verified
            );
            let path = output_path(&out, &c.output.json);
            write_or_print(path.as_deref(), &(serde_json::to_string_pretty(&r.to_report(c.noise.seed))? + "\n"))?;
            Ok(r.verified)
        }
        Command::Sweep { common, axis, values, out } => {
            let mut c = common.load()?;
            match (axis, c.sweep.take()) {
                (Some(a), _) => {
                    if values.is_empty() {
                        bail!("--axis needs --values");
                    }
                    c.sweep = Some(SweepConfig { axis: a.into(), values });
                }
                (None, Some(mut s)) => {
                    if !values.is_empty() {
                        s.values = values;
                    }
                    c.sweep = Some(s);
                }
                (None, None) => bail!("no sweep axis: pass --axis or set `sweep` in the config"),
            }
            require_seed(&c)?;
            let table = run_sweep(&c)?;
            let path = output_path(&out, &c.output.csv);
            write_or_print(path.as_deref(), &table.to_csv())?;
            if let Some(p) = &path {
                // timing is kept out of the main table so that reruns diff cleanly
                let mut timing = String::from("value,wall_time_s\n");
                for r in &table.rows {
                    timing.push_str(&format!("{},{:.3}\n", fmt_sig(r.value), r.wall_time_s));
                }
                fs::write(p.with_extension("timing.csv"), timing)?;
            }
            if let Some(j) = &c.output.json {
                fs::write(j, serde_json::to_string_pretty(&table)? + "\n")?;
            }
            for r in table.rows.iter().filter(|r| r.failed()) {
                eprintln!("row {} failed: {}", fmt_sig(r.value), r.status);
            }
            Ok(!table.any_failed())
        }
        Command::Table { common, epsilons, out } => {
            let c = common.load()?;
            require_seed(&c)?;
            let eps = if epsilons.is_empty() { TABLE_EPSILONS.to_vec() } else { epsilons };
            let table = reproduce_epsilon_table(&c, &eps)?;
            let path = output_path(&out, &c.output.csv);
            write_or_print(path.as_deref(), &table.to_csv())?;
            Ok(!table.any_failed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
