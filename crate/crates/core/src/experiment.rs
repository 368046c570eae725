//! Configurable experiment runs: parameter sweeps, Wigner exports and the
//! robustness table.
//!
//! An empty JSON document deserialises to the default configuration, which is
//! the setup of the robustness table (λ = 0.2, T = 0.95, APD efficiency 0.2,
//! |α| = 1, R = 0.5, η = 0.1, θ ∈ {0, π/2}).

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{
    lower_bound_negativity, lower_bound_negativity_robust, local_elements, noisy_local_elements, tensor_measurements,
    BoundResult, MeasurementSet, PhaseNoiseKind, PhaseNoiseModel,
};
use crate::detector::{homodyne_povm, wigner_of_operator, DetectorConfig, TmdConfig, WignerGrid, WignerMap};
use crate::error::{Error, Result};
use crate::fock::{
    photon_subtracted_conditional, photon_subtracted_ideal, two_mode_squeezed, SqueezedParams, SubtractionParams,
    TruncatedState,
};
use crate::negativity::log_negativity;

/// Formats a value with ten significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.9e}", x);
    // round-trip through the parser to drop trailing zeros
    let v: f64 = s.parse().unwrap_or(x);
    if v.abs() < 1e-4 || v.abs() >= 1e15 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StateConfig {
    pub lambda: f64,
    pub n_max: usize,
    pub transmission: f64,
    /// Efficiency of the heralding detector; `None` selects the ideal
    /// weak-reflectivity subtracted state.
    pub apd_efficiency: Option<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self { lambda: 0.2, n_max: 3, transmission: 0.95, apd_efficiency: Some(0.2) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSetup {
    pub lo_amplitude: f64,
    pub phases: Vec<f64>,
    pub reflectivity: f64,
    pub efficiency: f64,
    pub bins: usize,
    pub outcomes: Vec<usize>,
    pub lo_cutoff: Option<usize>,
}

impl Default for DetectorSetup {
    fn default() -> Self {
        Self {
            lo_amplitude: 1.0,
            phases: crate::bound::DEFAULT_PHASES.to_vec(),
            reflectivity: 0.5,
            efficiency: 0.1,
            bins: 8,
            outcomes: crate::bound::DEFAULT_OUTCOMES.to_vec(),
            lo_cutoff: None,
        }
    }
}

impl DetectorSetup {
    pub fn detector(&self) -> DetectorConfig {
        let tmd = TmdConfig { bins: self.bins, efficiency: self.efficiency, bin_probabilities: None };
        DetectorConfig {
            lo_amplitude: self.lo_amplitude,
            lo_phase: 0.0,
            reflectivity: self.reflectivity,
            tmd_c: tmd.clone(),
            tmd_d: tmd,
            unbalanced: true,
            lo_cutoff: self.lo_cutoff,
            lo_phase_offsets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    StaticCalibration,
    PhaseAveraged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub model: NoiseKind,
    pub epsilon: f64,
    pub width: f64,
    pub width_is_std: bool,
    pub samples: usize,
    pub seed: Option<u64>,
    pub trials: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { model: NoiseKind::None, epsilon: 0.0, width: 0.0, width_is_std: false, samples: 100, seed: None, trials: 20 }
    }
}

impl NoiseConfig {
    fn phase_model(&self) -> Option<PhaseNoiseModel> {
        let kind = match self.model {
            NoiseKind::None => return None,
            NoiseKind::StaticCalibration => PhaseNoiseKind::StaticCalibration,
            NoiseKind::PhaseAveraged => PhaseNoiseKind::PhaseAveraged,
        };
        Some(PhaseNoiseModel {
            kind,
            epsilon: self.epsilon,
            width: self.width,
            width_is_std: self.width_is_std,
            samples: self.samples,
            seed: self.seed.unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
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

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Transmission => "transmission",
            SweepAxis::ApdEfficiency => "apd_efficiency",
            SweepAxis::Reflectivity => "reflectivity",
            SweepAxis::LoAmplitude => "lo_amplitude",
            SweepAxis::DetectorEfficiency => "detector_efficiency",
            SweepAxis::ErrorBudget => "error_budget",
            SweepAxis::PhaseError => "phase_error",
            SweepAxis::PhaseWidth => "phase_width",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub wigner_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub state: StateConfig,
    pub detector: DetectorSetup,
    pub noise: NoiseConfig,
    /// Relative box half-width applied to the data.
    pub error_budget: f64,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copy with the sweep axis set to `value`.
    pub fn at(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::Lambda => c.state.lambda = value,
            SweepAxis::Transmission => c.state.transmission = value,
            SweepAxis::ApdEfficiency => c.state.apd_efficiency = Some(value),
            SweepAxis::Reflectivity => c.detector.reflectivity = value,
            SweepAxis::LoAmplitude => c.detector.lo_amplitude = value,
            SweepAxis::DetectorEfficiency => c.detector.efficiency = value,
            SweepAxis::ErrorBudget => c.error_budget = value,
            SweepAxis::PhaseError => {
                c.noise.model = NoiseKind::StaticCalibration;
                c.noise.epsilon = value;
            }
            SweepAxis::PhaseWidth => {
                c.noise.model = NoiseKind::PhaseAveraged;
                c.noise.width = value;
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        SqueezedParams::new(self.state.lambda, self.state.n_max)?;
        if let Some(eta) = self.state.apd_efficiency {
            SubtractionParams::new(self.state.transmission, eta)?;
        } else if !(self.state.transmission > 0.0 && self.state.transmission <= 1.0) {
            return Err(Error::InvalidParameter(format!("transmission {}", self.state.transmission)));
        }
        self.detector.detector().validate()?;
        if self.detector.phases.is_empty() || self.detector.outcomes.is_empty() {
            return Err(Error::InvalidParameter("at least one phase and one outcome are required".into()));
        }
        if let Some(&k) = self.detector.outcomes.iter().find(|&&k| k > self.detector.bins) {
            return Err(Error::InvalidParameter(format!("outcome {k} exceeds {} bins", self.detector.bins)));
        }
        if !(self.error_budget >= 0.0) {
            return Err(Error::InvalidParameter(format!("error budget {}", self.error_budget)));
        }
        if let Some(m) = self.noise.phase_model() {
            m.validate()?;
            if self.noise.seed.is_none() {
                return Err(Error::InvalidParameter("noise runs need an explicit seed".into()));
            }
            if self.noise.trials == 0 {
                return Err(Error::InvalidParameter("noise runs need at least one trial".into()));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<TruncatedState> {
        two_mode_squeezed(&SqueezedParams::new(self.state.lambda, self.state.n_max)?)
    }

    pub fn subtracted_state(&self) -> Result<TruncatedState> {
        let params = SqueezedParams::new(self.state.lambda, self.state.n_max)?;
        match self.state.apd_efficiency {
            None => photon_subtracted_ideal(&params, self.state.transmission),
            Some(eta) => {
                let sub = SubtractionParams::new(self.state.transmission, eta)?;
                Ok(photon_subtracted_conditional(&two_mode_squeezed(&params)?, &sub)?.state)
            }
        }
    }

    /// Nominal measurement operators (identity first).
    pub fn measurements(&self) -> Result<Vec<crate::fock::FockOperator>> {
        let det = self.detector.detector();
        let n = self.state.n_max;
        let local = local_elements(&det, &self.detector.outcomes, &self.detector.phases, n)?;
        Ok(tensor_measurements(&local, &local))
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub ln_initial: f64,
    pub ln_subtracted: f64,
    /// Certified bound; for noise runs the smallest over the trials.
    pub bound: f64,
    /// Largest bound over the trials (equal to `bound` without noise).
    pub bound_max: f64,
    pub increase_pct: f64,
    /// `100 (LN − bound) / LN`, largest over the trials.
    pub error_pct: f64,
    /// Smallest over the trials.
    pub error_pct_min: f64,
    pub status: String,
    pub verified: bool,
    pub trials: usize,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        !self.verified
    }

    fn error(value: f64, err: &Error, wall: f64) -> Self {
        Self {
            value,
            ln_initial: f64::NAN,
            ln_subtracted: f64::NAN,
            bound: f64::NAN,
            bound_max: f64::NAN,
            increase_pct: f64::NAN,
            error_pct: f64::NAN,
            error_pct_min: f64::NAN,
            status: format!("error: {err}"),
            verified: false,
            trials: 0,
            wall_time_s: wall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str =
    "axis,value,ln_initial,ln_subtracted,bound,bound_max,increase_pct,error_pct,error_pct_min,status,verified,trials";

fn csv_num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        fmt_sig(x)
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepTable {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(SweepRow::failed)
    }

    /// Deterministic CSV (no timing columns).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.axis,
                csv_num(r.value),
                csv_num(r.ln_initial),
                csv_num(r.ln_subtracted),
                csv_num(r.bound),
                csv_num(r.bound_max),
                csv_num(r.increase_pct),
                csv_num(r.error_pct),
                csv_num(r.error_pct_min),
                csv_text(&r.status),
                r.verified,
                r.trials
            );
        }
        out
    }
}

/// Bound for the nominal measurement model with optional box errors.
fn certify(ms: &MeasurementSet, error_budget: f64) -> Result<BoundResult> {
    if error_budget > 0.0 {
        lower_bound_negativity_robust(ms, error_budget)
    } else {
        lower_bound_negativity(ms)
    }
}

struct Evaluation {
    ln_initial: f64,
    ln_subtracted: f64,
    bounds: Vec<BoundResult>,
}

fn evaluate(config: &ExperimentConfig, stream: u64) -> Result<Evaluation> {
    config.validate()?;
    let ln_initial = log_negativity(&config.initial_state()?)?;
    let rho = config.subtracted_state()?;
    let ln_subtracted = log_negativity(&rho)?;
    let nominal = config.measurements()?;

    let bounds = match config.noise.phase_model() {
        None => {
            let ms = MeasurementSet::simulate(nominal, &rho)?;
            vec![certify(&ms, config.error_budget)?]
        }
        Some(model) => {
            let det = config.detector.detector();
            let d = &config.detector;
            let n = config.state.n_max;
            (0..config.noise.trials)
                .map(|trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
                    rng.set_stream((stream << 32) | trial as u64);
                    let a = noisy_local_elements(&det, &d.outcomes, &d.phases, n, &model, &mut rng)?;
                    let b = noisy_local_elements(&det, &d.outcomes, &d.phases, n, &model, &mut rng)?;
                    let actual = tensor_measurements(&a, &b);
                    // the analysis uses the settings that were actually applied;
                    // nominal operators would make the data inconsistent
                    let ms = MeasurementSet::simulate(actual, &rho)?;
                    certify(&ms, config.error_budget)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(Evaluation { ln_initial, ln_subtracted, bounds })
}

fn row_from(value: f64, ev: Evaluation, wall: f64) -> SweepRow {
    let lo = ev.bounds.iter().map(|b| b.lower_bound).fold(f64::INFINITY, f64::min);
    let hi = ev.bounds.iter().map(|b| b.lower_bound).fold(f64::NEG_INFINITY, f64::max);
    let pct = |b: f64| 100.0 * (ev.ln_subtracted - b) / ev.ln_subtracted;
    let mut statuses: Vec<String> = ev.bounds.iter().map(|b| b.solver_status.to_string()).collect();
    statuses.sort();
    statuses.dedup();
    SweepRow {
        value,
        ln_initial: ev.ln_initial,
        ln_subtracted: ev.ln_subtracted,
        bound: lo,
        bound_max: hi,
        increase_pct: 100.0 * (ev.ln_subtracted - ev.ln_initial) / ev.ln_initial,
        error_pct: pct(lo),
        error_pct_min: pct(hi),
        status: statuses.join("|"),
        verified: ev.bounds.iter().all(|b| b.verified),
        trials: ev.bounds.len(),
        wall_time_s: wall,
    }
}

/// Evaluates one configuration as a single row.
pub fn run_point(config: &ExperimentConfig, value: f64, stream: u64) -> SweepRow {
    let t0 = Instant::now();
    match evaluate(config, stream) {
        Ok(ev) => row_from(value, ev, t0.elapsed().as_secs_f64()),
        Err(e) => SweepRow::error(value, &e, t0.elapsed().as_secs_f64()),
    }
}

/// Runs every sweep value in parallel; rows come back sorted by value. Errors
/// are recorded per row and do not stop the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("configuration has no sweep axis".into()))?;
    if sweep.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep values must be finite".into()));
    }
    let mut rows: Vec<SweepRow> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| run_point(&config.at(sweep.axis, v), v, i as u64))
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepTable { axis: sweep.axis.name().to_string(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub bound: f64,
    pub status: String,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTable {
    pub ln_initial: f64,
    /// Exact LN of the state that generated the data.
    pub ln_subtracted: f64,
    /// Exact LN of the ideal weak-reflectivity subtracted state.
    pub ln_ideal: f64,
    pub rows: Vec<EpsilonRow>,
}

pub const TABLE_EPSILONS: [f64; 4] = [0.0, 0.001, 0.01, 0.1];

impl EpsilonTable {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| !r.verified)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,epsilon,value,status,verified\n");
        let _ = writeln!(out, "ln_initial,,{},,", csv_num(self.ln_initial));
        let _ = writeln!(out, "ln_ideal,,{},,", csv_num(self.ln_ideal));
        let _ = writeln!(out, "ln_subtracted,,{},,", csv_num(self.ln_subtracted));
        for r in &self.rows {
            let _ = writeln!(out, "bound,{},{},{},{}", csv_num(r.epsilon), csv_num(r.bound), csv_text(&r.status), r.verified);
        }
        out
    }
}

/// Robust bounds for each error budget on one simulated data set.
pub fn reproduce_epsilon_table(config: &ExperimentConfig, epsilons: &[f64]) -> Result<EpsilonTable> {
    config.validate()?;
    let params = SqueezedParams::new(config.state.lambda, config.state.n_max)?;
    let ln_initial = log_negativity(&config.initial_state()?)?;
    let ln_ideal = log_negativity(&photon_subtracted_ideal(&params, config.state.transmission)?)?;
    let rho = config.subtracted_state()?;
    let ln_subtracted = log_negativity(&rho)?;
    let ms = MeasurementSet::simulate(config.measurements()?, &rho)?;
    let rows = epsilons
        .par_iter()
        .map(|&eps| match certify(&ms, eps) {
            Ok(r) => EpsilonRow { epsilon: eps, bound: r.lower_bound, status: r.solver_status.to_string(), verified: r.verified },
            Err(e) => EpsilonRow { epsilon: eps, bound: f64::NAN, status: format!("error: {e}"), verified: false },
        })
        .collect();
    Ok(EpsilonTable { ln_initial, ln_subtracted, ln_ideal, rows })
}

/// One Wigner grid to export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerSelector {
    pub clicks: usize,
    pub phase: f64,
}

/// Default export: β = 1, 2, 3 at θ = 0 and θ = π/2.
pub fn default_wigner_selectors() -> Vec<WignerSelector> {
    crate::bound::DEFAULT_PHASES
        .iter()
        .flat_map(|&phase| (1..=3).map(move |clicks| WignerSelector { clicks, phase }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedWigner {
    pub name: String,
    pub map: WignerMap,
}

/// Wigner functions of single-mode POVM elements of the configured detector,
/// evaluated with the signal cutoff `signal_cutoff`.
pub fn emit_wigner(
    config: &ExperimentConfig,
    selectors: &[WignerSelector],
    grid: &WignerGrid,
    signal_cutoff: usize,
) -> Result<Vec<NamedWigner>> {
    let det = config.detector.detector();
    selectors
        .par_iter()
        .map(|sel| {
            let povm = homodyne_povm(&det.with_phase(sel.phase), signal_cutoff)?;
            let op = povm
                .clicks(sel.clicks)
                .ok_or_else(|| Error::InvalidParameter(format!("no outcome with {} clicks", sel.clicks)))?;
            let map = wigner_of_operator(&op, grid)?;
            let mrad = (sel.phase * 1000.0).round() as i64;
            Ok(NamedWigner { name: format!("wigner_beta{}_theta{}mrad.csv", sel.clicks, mrad), map })
        })
        .collect()
}

/// Wigner function of the vacuum projector, `e^{−x²−p²}/π`; a sanity grid for
/// the export pipeline.
pub fn vacuum_wigner(grid: &WignerGrid) -> Result<NamedWigner> {
    let space = crate::fock::HilbertSpec::single(0);
    let op = crate::fock::FockOperator::identity(space);
    Ok(NamedWigner { name: "wigner_vacuum.csv".into(), map: wigner_of_operator(&op, grid)? })
}
