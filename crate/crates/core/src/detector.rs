//! Time-multiplexed photon-number-resolving detectors and the weak homodyne
//! POVMs built from them.
//!
//! The local oscillator enters port `a` and the signal port `b` of a beam
//! splitter `exp(iχ(b†a + a†b))`, `R = cos²χ`. Detector `c` watches the output
//! occupying the signal slot (all of the signal reaches it at `R = 1`), detector
//! `d` the other output. The unbalanced scheme switches `d` off.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    beam_splitter_block, coherent_amplitudes, coherent_state_with_tolerance, cutoff_for_amplitude, mixing_angle,
    FockOperator, HilbertSpec,
};
use crate::linalg::{self, CMatrix, RMatrix, ZERO};
use crate::tolerances::{TAIL_TOL, TOL_COMPLETE, TOL_PSD};

/// Default minimum cutoff of the local-oscillator mode.
pub const DEFAULT_LO_CUTOFF: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmdConfig {
    pub bins: usize,
    pub efficiency: f64,
    /// Probability of a photon landing in each bin; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_probabilities: Option<Vec<f64>>,
}

impl Default for TmdConfig {
    fn default() -> Self {
        Self { bins: 8, efficiency: 0.1, bin_probabilities: None }
    }
}

impl TmdConfig {
    pub fn new(bins: usize, efficiency: f64) -> Result<Self> {
        let c = Self { bins, efficiency, bin_probabilities: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::InvalidParameter("a TMD needs at least one bin".into()));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        if let Some(p) = &self.bin_probabilities {
            if p.len() != self.bins {
                return Err(Error::DimensionMismatch { expected: self.bins, got: p.len() });
            }
            if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter("bin probabilities must be nonnegative and sum to 1".into()));
            }
            if self.bins > 20 {
                return Err(Error::InvalidParameter("non-uniform splitting supports at most 20 bins".into()));
            }
        }
        Ok(())
    }

    fn with_efficiency(&self, efficiency: f64) -> Self {
        Self { efficiency, ..self.clone() }
    }
}

/// Binomial loss: `L[m][n] = C(n, m) ηᵐ (1−η)^{n−m}`.
pub fn loss_matrix(n_in: usize, efficiency: f64) -> RMatrix {
    let mut l = RMatrix::zeros(n_in + 1, n_in + 1);
    for n in 0..=n_in {
        for m in 0..=n {
            l[(m, n)] = linalg::binomial(n, m) * efficiency.powi(m as i32) * (1.0 - efficiency).powi((n - m) as i32);
        }
    }
    l
}

/// `C[k][n]`: probability that `n` photons spread independently over the bins
/// occupy exactly `k` distinct bins.
pub fn convolution_matrix(config: &TmdConfig, n_max_photons: usize) -> Result<RMatrix> {
    config.validate()?;
    let bins = config.bins;
    let mut c = RMatrix::zeros(bins + 1, n_max_photons + 1);
    match &config.bin_probabilities {
        None => {
            let mut dist = vec![0.0; bins + 1];
            dist[0] = 1.0;
            for n in 0..=n_max_photons {
                for (k, &p) in dist.iter().enumerate() {
                    c[(k, n)] = p;
                }
                let mut next = vec![0.0; bins + 1];
                for (k, &p) in dist.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    next[k] += p * k as f64 / bins as f64;
                    if k < bins {
                        next[k + 1] += p * (bins - k) as f64 / bins as f64;
                    }
                }
                dist = next;
            }
        }
        Some(probs) => {
            // distribution over occupied-bin subsets
            let mut dist = vec![0.0; 1 << bins];
            dist[0] = 1.0;
            for n in 0..=n_max_photons {
                for (mask, &p) in dist.iter().enumerate() {
                    c[(mask.count_ones() as usize, n)] += p;
                }
                let mut next = vec![0.0; 1 << bins];
                for (mask, &p) in dist.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for (b, &q) in probs.iter().enumerate() {
                        next[mask | (1 << b)] += p * q;
                    }
                }
                dist = next;
            }
        }
    }
    Ok(c)
}

/// Click statistics per incident photon number, `(C·L)[k][n]`.
pub fn tmd_response(config: &TmdConfig, n_max_photons: usize) -> Result<RMatrix> {
    Ok(convolution_matrix(config, n_max_photons)? * loss_matrix(n_max_photons, config.efficiency))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub lo_amplitude: f64,
    /// LO phase θ in radians.
    pub lo_phase: f64,
    pub reflectivity: f64,
    pub tmd_c: TmdConfig,
    pub tmd_d: TmdConfig,
    /// Only detector `c` is read out (`η_d = 0`).
    pub unbalanced: bool,
    /// LO cutoff; chosen from the amplitude when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_cutoff: Option<usize>,
    /// Phase offsets of an equal-weight mixture of coherent LO states. Empty
    /// means a pure coherent LO.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lo_phase_offsets: Vec<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            lo_amplitude: 1.0,
            lo_phase: 0.0,
            reflectivity: 0.5,
            tmd_c: TmdConfig::default(),
            tmd_d: TmdConfig::default(),
            unbalanced: true,
            lo_cutoff: None,
            lo_phase_offsets: Vec::new(),
        }
    }
}

impl DetectorConfig {
    /// Unbalanced detector with one TMD of the given efficiency.
    pub fn unbalanced(lo_amplitude: f64, reflectivity: f64, efficiency: f64) -> Self {
        let tmd = TmdConfig { efficiency, ..TmdConfig::default() };
        Self { lo_amplitude, reflectivity, tmd_c: tmd.clone(), tmd_d: tmd, ..Self::default() }
    }

    pub fn with_phase(&self, lo_phase: f64) -> Self {
        Self { lo_phase, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo_amplitude >= 0.0 && self.lo_amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("LO amplitude {}", self.lo_amplitude)));
        }
        if !self.lo_phase.is_finite() || self.lo_phase_offsets.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("LO phase must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(Error::InvalidParameter(format!("reflectivity {} outside [0, 1]", self.reflectivity)));
        }
        self.tmd_c.validate()?;
        self.tmd_d.validate()
    }

    pub fn lo_cutoff(&self) -> usize {
        self.lo_cutoff
            .unwrap_or_else(|| cutoff_for_amplitude(self.lo_amplitude, DEFAULT_LO_CUTOFF, TAIL_TOL))
    }

    fn effective_tmd_d(&self) -> TmdConfig {
        if self.unbalanced {
            self.tmd_d.with_efficiency(0.0)
        } else {
            self.tmd_d.clone()
        }
    }

    /// `(weight, renormalised amplitudes)` of each coherent LO component.
    fn lo_components(&self) -> Result<Vec<(f64, DVector<Complex64>)>> {
        let cutoff = self.lo_cutoff();
        let phases: Vec<f64> = if self.lo_phase_offsets.is_empty() {
            vec![self.lo_phase]
        } else {
            self.lo_phase_offsets.iter().map(|d| self.lo_phase + d).collect()
        };
        let w = 1.0 / phases.len() as f64;
        // a too-small explicit cutoff is rejected here
        coherent_state_with_tolerance(Complex64::new(self.lo_amplitude, 0.0), cutoff, TAIL_TOL)?;
        Ok(phases
            .into_iter()
            .map(|th| {
                let (amps, _) = coherent_amplitudes(Complex64::from_polar(self.lo_amplitude, th), cutoff);
                let n = amps.norm();
                (w, amps.unscale(n))
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Click count of detector `c` (unbalanced scheme or bare TMD).
    Clicks(usize),
    /// Joint click counts `(n_c, n_d)` (balanced scheme).
    Pair(usize, usize),
}

impl Outcome {
    pub fn clicks(&self) -> usize {
        match *self {
            Outcome::Clicks(k) => k,
            Outcome::Pair(c, _) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub outcome: Outcome,
    pub operator: FockOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    /// Detector setting shared by all elements (absent for a bare TMD).
    pub setting: Option<DetectorConfig>,
    pub elements: Vec<PovmElement>,
}

impl PovmSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn space(&self) -> Option<&HilbertSpec> {
        self.elements.first().map(|e| e.operator.space())
    }

    pub fn element(&self, outcome: Outcome) -> Option<&PovmElement> {
        self.elements.iter().find(|e| e.outcome == outcome)
    }

    /// Element for a click count of detector `c`, summing over `n_d` when balanced.
    pub fn clicks(&self, k: usize) -> Option<FockOperator> {
        let mut acc: Option<CMatrix> = None;
        let mut space = None;
        for e in self.elements.iter().filter(|e| e.outcome.clicks() == k) {
            space = Some(e.operator.space().clone());
            acc = Some(match acc {
                None => e.operator.matrix().clone(),
                Some(a) => a + e.operator.matrix(),
            });
        }
        FockOperator::new(space?, acc?).ok()
    }

    /// `‖Σ Π − I‖_max`.
    pub fn completeness_deficit(&self) -> f64 {
        let Some(space) = self.space() else { return f64::INFINITY };
        let mut sum = CMatrix::zeros(space.dim(), space.dim());
        for e in &self.elements {
            sum += e.operator.matrix();
        }
        linalg::max_abs(&(sum - linalg::identity(space.dim())))
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| linalg::min_eigenvalue(e.operator.matrix()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| linalg::max_eigenvalue(e.operator.matrix()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_document(&self) -> PovmDocument {
        PovmDocument {
            setting: self.setting.clone(),
            cutoffs: self.space().map(|s| s.cutoffs().to_vec()).unwrap_or_default(),
            elements: self
                .elements
                .iter()
                .map(|e| ElementDocument {
                    outcome: e.outcome,
                    dim: e.operator.matrix().nrows(),
                    matrix: row_major_pairs(e.operator.matrix()),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &PovmDocument) -> Result<PovmSet> {
        let space = HilbertSpec::new(doc.cutoffs.clone())?;
        let elements = doc
            .elements
            .iter()
            .map(|e| {
                if e.matrix.len() != e.dim * e.dim {
                    return Err(Error::DimensionMismatch { expected: e.dim * e.dim, got: e.matrix.len() });
                }
                let m = CMatrix::from_row_iterator(
                    e.dim,
                    e.dim,
                    e.matrix.iter().map(|[re, im]| Complex64::new(*re, *im)),
                );
                Ok(PovmElement { outcome: e.outcome, operator: FockOperator::new(space.clone(), m)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PovmSet { setting: doc.setting.clone(), elements })
    }
}

fn row_major_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

/// Serialised POVM set: setting metadata plus row-major `[re, im]` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmDocument {
    pub setting: Option<DetectorConfig>,
    pub cutoffs: Vec<usize>,
    pub elements: Vec<ElementDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDocument {
    pub outcome: Outcome,
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

/// Bare TMD POVM on one mode: diagonal elements `(C·L)[k][n]`, `k = 0..=bins`.
pub fn tmd_povm(config: &TmdConfig, cutoff: usize) -> Result<PovmSet> {
    let resp = tmd_response(config, cutoff)?;
    let space = HilbertSpec::single(cutoff);
    let elements = (0..=config.bins)
        .map(|k| {
            let diag = DVector::from_iterator(cutoff + 1, (0..=cutoff).map(|n| resp[(k, n)]));
            Ok(PovmElement { outcome: Outcome::Clicks(k), operator: FockOperator::diagonal(space.clone(), &diag)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PovmSet { setting: None, elements })
}

/// Signal-mode POVM `Π_β = ⟨α| U† (Π^c_{β_c} ⊗ Π^d_{β_d}) U |α⟩` of the weak
/// homodyne detector.
///
/// The beam splitter is applied block by block in total photon number, so no
/// truncation of the output modes occurs; the only approximation is the LO
/// cutoff, whose tail mass is bounded by the tail tolerance.
pub fn homodyne_povm(det: &DetectorConfig, signal_cutoff: usize) -> Result<PovmSet> {
    det.validate()?;
    let lo_cutoff = det.lo_cutoff();
    let total = lo_cutoff + signal_cutoff;
    let chi = mixing_angle(det.reflectivity);
    let blocks: Vec<CMatrix> = (0..=total).map(|n| beam_splitter_block(n, chi)).collect();
    let resp_c = tmd_response(&det.tmd_c, total)?;
    let tmd_d = det.effective_tmd_d();
    let resp_d = tmd_response(&tmd_d, total)?;

    let outcomes: Vec<Outcome> = if det.unbalanced {
        (0..=det.tmd_c.bins).map(Outcome::Clicks).collect()
    } else {
        (0..=det.tmd_c.bins)
            .flat_map(|c| (0..=tmd_d.bins).map(move |d| Outcome::Pair(c, d)))
            .collect()
    };
    let weight = |o: Outcome, na: usize, nb: usize| -> f64 {
        match o {
            Outcome::Clicks(k) => resp_c[(k, nb)],
            Outcome::Pair(c, d) => resp_c[(c, nb)] * resp_d[(d, na)],
        }
    };

    let dim = signal_cutoff + 1;
    let mut ops = vec![CMatrix::zeros(dim, dim); outcomes.len()];
    for (w, amps) in det.lo_components()? {
        for n in 0..=total {
            let m_lo = n.saturating_sub(lo_cutoff);
            let m_hi = n.min(signal_cutoff);
            if m_lo > m_hi {
                continue;
            }
            // output amplitudes over n_a for each signal photon number m
            let outs: Vec<(usize, DVector<Complex64>)> = (m_lo..=m_hi)
                .map(|m| (m, blocks[n].column(n - m) * amps[n - m]))
                .collect();
            for na in 0..=n {
                let nb = n - na;
                for (oi, &o) in outcomes.iter().enumerate() {
                    let p = w * weight(o, na, nb);
                    if p == 0.0 {
                        continue;
                    }
                    for (mr, vr) in &outs {
                        let left = vr[na].conj() * p;
                        if left == ZERO {
                            continue;
                        }
                        for (mc, vc) in &outs {
                            ops[oi][(*mr, *mc)] += left * vc[na];
                        }
                    }
                }
            }
        }
    }

    let space = HilbertSpec::single(signal_cutoff);
    let elements = outcomes
        .into_iter()
        .zip(ops)
        .map(|(outcome, m)| Ok(PovmElement { outcome, operator: FockOperator::new(space.clone(), linalg::hermitian_part(&m))? }))
        .collect::<Result<Vec<_>>>()?;
    let set = PovmSet { setting: Some(det.clone()), elements };
    let deficit = set.completeness_deficit();
    if deficit > TOL_COMPLETE {
        return Err(Error::Incomplete(deficit));
    }
    debug_assert!(set.min_eigenvalue() > -TOL_PSD);
    Ok(set)
}

/// Rectangular phase-space grid for Wigner evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for WignerGrid {
    fn default() -> Self {
        Self { x_min: -5.0, x_max: 5.0, p_min: -5.0, p_max: 5.0, nx: 201, np: 201 }
    }
}

impl WignerGrid {
    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.np)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `values[(i, j)] = W(xs[i], ps[j])`.
    pub values: RMatrix,
}

impl WignerMap {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let wx = trapezoid_weights(&self.xs);
        let wp = trapezoid_weights(&self.ps);
        let mut acc = 0.0;
        for (i, a) in wx.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                acc += a * b * self.values[(i, j)];
            }
        }
        acc
    }

    /// `x,p,W` rows with a header, ten significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,p,W\n");
        for (i, x) in self.xs.iter().enumerate() {
            for (j, p) in self.ps.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    crate::experiment::fmt_sig(*x),
                    crate::experiment::fmt_sig(*p),
                    crate::experiment::fmt_sig(self.values[(i, j)])
                ));
            }
        }
        out
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = axis[i + 1] - axis[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Generalised Laguerre polynomial `L_n^{(a)}(z)`.
fn laguerre(n: usize, a: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - z) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Wigner function of a single-mode operator with `x, p` quadratures of vacuum
/// variance ½ (so `W_vac(0, 0) = 1/π` and `∫W = Tr`).
pub fn wigner_of_operator(op: &FockOperator, grid: &WignerGrid) -> Result<WignerMap> {
    if op.space().modes() != 1 {
        return Err(Error::InvalidParameter("Wigner evaluation needs a single-mode operator".into()));
    }
    let m = op.matrix();
    let dim = m.nrows();
    let xs = grid.xs();
    let ps = grid.ps();
    // √(n!/m!) for m ≥ n
    let log_fact: Vec<f64> = (0..dim).scan(0.0, |acc, k| {
        if k > 0 {
            *acc += (k as f64).ln();
        }
        Some(*acc)
    }).collect();
    let mut values = RMatrix::zeros(xs.len(), ps.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let r2 = x * x + p * p;
            let gauss = (-r2).exp() / std::f64::consts::PI;
            let z = Complex64::new(2f64.sqrt() * x, -(2f64.sqrt()) * p);
            let mut w = 0.0;
            let mut zpow = Complex64::new(1.0, 0.0);
            for d in 0..dim {
                for n in 0..dim - d {
                    let mm = n + d;
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let coef = sign * (0.5 * (log_fact[n] - log_fact[mm])).exp() * laguerre(n, d as f64, 2.0 * r2);
                    let kernel = zpow * coef;
                    if d == 0 {
                        w += (m[(n, n)] * kernel).re;
                    } else {
                        // |m⟩⟨n| and its conjugate partner
                        w += (m[(mm, n)] * kernel).re + (m[(n, mm)] * kernel.conj()).re;
                    }
                }
                zpow *= z;
            }
            values[(i, j)] = w * gauss;
        }
    }
    Ok(WignerMap { xs, ps, values })
}
