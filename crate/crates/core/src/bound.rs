//! Certified lower bounds on the logarithmic negativity from local measurement
//! data.
//!
//! The bound is the optimum of
//!
//! ```text
//! maximize    Σᵢ νᵢ mᵢ
//! subject to  H^{T₁} − Σᵢ νᵢ Mᵢ ⪰ 0,   −𝕀 ⪯ H ⪯ 𝕀
//! ```
//!
//! over Hermitian `H` and real `ν`, reported as `log₂` of the optimum. Any
//! feasible pair `(H, ν)` certifies `‖ρ^{T₁}‖₁ ≥ Σ νᵢ Tr(ρ Mᵢ)` for every state,
//! so the returned witness is repaired to exact feasibility and re-verified
//! before the bound is reported.

use nalgebra::DVector;
use rayon::prelude::*;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{homodyne_povm, DetectorConfig, Outcome};
use crate::error::{Error, Result};
use crate::fock::{partial_transpose_matrix, FockOperator, HilbertSpec, TruncatedState};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::sdp::{self, hermitian_embed_unchecked, BlockKind, ConeBlock, ConicProgram, SdpOptions, SolverStatus, SymMatrix};
use crate::tolerances::{TOL_HERM, TOL_PSD};

/// Click counts used per setting.
pub const DEFAULT_OUTCOMES: [usize; 4] = [0, 1, 2, 3];
/// LO phases used per mode.
pub const DEFAULT_PHASES: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];

const TOL_RANGE: f64 = 1e-10;
/// Relative singular-value floors tried for the multiplier directions. Each
/// restriction of `ν` yields a valid bound, so the best verified one is kept.
const WHITEN_TOLS: [f64; 4] = [1e-10, 1e-9, 1e-8, 1e-7];

/// Measurement operators `Mᵢ` with their expectation values; entry 0 is `𝕀`.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    operators: Vec<FockOperator>,
    expectations: Vec<f64>,
}

impl MeasurementSet {
    /// `operators[0]` must be the identity with expectation 1; the remaining
    /// operators must satisfy `0 ⪯ Mᵢ ⪯ 𝕀`.
    pub fn new(operators: Vec<FockOperator>, expectations: Vec<f64>) -> Result<Self> {
        if operators.len() != expectations.len() {
            return Err(Error::DimensionMismatch { expected: operators.len(), got: expectations.len() });
        }
        let Some(first) = operators.first() else {
            return Err(Error::InvalidParameter("empty measurement set".into()));
        };
        let space = first.space().clone();
        space.require_bipartite()?;
        let id = linalg::identity(space.dim());
        let is_identity = |op: &FockOperator| linalg::max_abs(&(op.matrix() - &id)) <= TOL_HERM;
        if !is_identity(first) || (expectations[0] - 1.0).abs() > TOL_RANGE {
            return Err(Error::InvalidParameter("entry 0 must be the identity with expectation 1".into()));
        }
        for (op, &m) in operators.iter().zip(&expectations).skip(1) {
            if op.space() != &space {
                return Err(Error::DimensionMismatch { expected: space.dim(), got: op.space().dim() });
            }
            if is_identity(op) {
                return Err(Error::InvalidParameter("identity may appear only once".into()));
            }
            if !op.is_hermitian(TOL_HERM) {
                return Err(Error::NotHermitian(linalg::hermiticity_deviation(op.matrix())));
            }
            let (lo, hi) = (linalg::min_eigenvalue(op.matrix()), linalg::max_eigenvalue(op.matrix()));
            if lo < -TOL_PSD || hi > 1.0 + TOL_PSD {
                return Err(Error::InvalidParameter(format!("measurement spectrum [{lo}, {hi}] outside [0, 1]")));
            }
            if !m.is_finite() {
                return Err(Error::InvalidParameter("non-finite expectation".into()));
            }
        }
        Ok(Self { operators, expectations })
    }

    /// Pairs the operators with simulated expectations in `state`.
    pub fn simulate(operators: Vec<FockOperator>, state: &TruncatedState) -> Result<Self> {
        let m = simulate_expectations(state, &operators)?;
        Self::new(operators, m)
    }

    pub fn operators(&self) -> &[FockOperator] {
        &self.operators
    }

    pub fn expectations(&self) -> &[f64] {
        &self.expectations
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn space(&self) -> &HilbertSpec {
        self.operators[0].space()
    }

    /// Same operators, new data.
    pub fn with_expectations(&self, expectations: Vec<f64>) -> Result<Self> {
        Self::new(self.operators.clone(), expectations)
    }

    /// Keeps the identity plus the listed (non-identity) entries.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut ops = vec![self.operators[0].clone()];
        let mut m = vec![1.0];
        for &i in indices.iter().filter(|&&i| i != 0) {
            let op = self.operators.get(i).ok_or_else(|| Error::InvalidParameter(format!("index {i} out of range")))?;
            ops.push(op.clone());
            m.push(self.expectations[i]);
        }
        Self::new(ops, m)
    }
}

/// Per-mode measurement list: for each phase in order, the elements for each
/// listed click count.
pub fn local_elements(det: &DetectorConfig, outcomes: &[usize], phases: &[f64], cutoff: usize) -> Result<Vec<FockOperator>> {
    let mut out = Vec::with_capacity(outcomes.len() * phases.len());
    for &th in phases {
        let povm = homodyne_povm(&det.with_phase(th), cutoff)?;
        for &k in outcomes {
            let op = if det.unbalanced {
                povm.element(Outcome::Clicks(k)).map(|e| e.operator.clone())
            } else {
                povm.clicks(k)
            };
            out.push(op.ok_or_else(|| Error::InvalidParameter(format!("no outcome with {k} clicks")))?);
        }
    }
    Ok(out)
}

/// `𝕀` followed by every product `Π¹_j ⊗ Π²_k`, `j` running slowest.
pub fn tensor_measurements(first: &[FockOperator], second: &[FockOperator]) -> Vec<FockOperator> {
    let mut ops = Vec::with_capacity(1 + first.len() * second.len());
    if let (Some(a), Some(b)) = (first.first(), second.first()) {
        ops.push(FockOperator::identity(a.space().tensor(b.space())));
    }
    for a in first {
        for b in second {
            ops.push(a.tensor(b));
        }
    }
    ops
}

/// The joint measurement list for two detectors on a bipartite space with the
/// given per-mode cutoffs.
pub fn build_measurements(
    det1: &DetectorConfig,
    det2: &DetectorConfig,
    outcomes: &[usize],
    phases: &[f64],
    cutoffs: (usize, usize),
) -> Result<Vec<FockOperator>> {
    let a = local_elements(det1, outcomes, phases, cutoffs.0)?;
    let b = local_elements(det2, outcomes, phases, cutoffs.1)?;
    Ok(tensor_measurements(&a, &b))
}

/// Position of the product with 1-based local indices `(j, k)` in a list from
/// [`tensor_measurements`] with `per_mode` elements on the second mode.
pub fn joint_index(j: usize, k: usize, per_mode: usize) -> usize {
    1 + (j - 1) * per_mode + (k - 1)
}

/// `mᵢ = Tr(ρ Mᵢ)`, clamped to `[0, 1]`.
pub fn simulate_expectations(state: &TruncatedState, operators: &[FockOperator]) -> Result<Vec<f64>> {
    operators
        .iter()
        .map(|op| {
            let v = op.expectation(state)?;
            if v.re < -TOL_RANGE || v.re > 1.0 + TOL_RANGE {
                return Err(Error::InvalidParameter(format!("expectation {} outside [0, 1]", v.re)));
            }
            Ok(v.re.clamp(0.0, 1.0))
        })
        .collect()
}

/// Hermitian basis of `d × d` matrices: diagonal units, then `E_kl + E_lk` and
/// `i(E_kl − E_lk)` for `k < l`.
fn hermitian_basis(d: usize) -> Vec<Vec<(usize, usize, Complex64)>> {
    let mut basis = Vec::with_capacity(d * d);
    for k in 0..d {
        basis.push(vec![(k, k, Complex64::new(1.0, 0.0))]);
    }
    for k in 0..d {
        for l in k + 1..d {
            basis.push(vec![(k, l, Complex64::new(1.0, 0.0)), (l, k, Complex64::new(1.0, 0.0))]);
            basis.push(vec![(k, l, Complex64::new(0.0, 1.0)), (l, k, Complex64::new(0.0, -1.0))]);
        }
    }
    basis
}

fn sparse_to_dense(entries: &[(usize, usize, Complex64)], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for &(i, j, v) in entries {
        m[(i, j)] += v;
    }
    m
}

fn embed_sym(m: &CMatrix, scale: f64) -> SymMatrix {
    SymMatrix::from_dense(&(hermitian_embed_unchecked(m) * scale), 0.0)
}

/// Variable layout of the bound program: `H` coordinates, multiplier
/// coordinates `z`, then (robust form) the bounds `tᵢ ≥ |νᵢ|`.
struct Layout {
    d: usize,
    n_h: usize,
    n_z: usize,
    n_t: usize,
}

impl Layout {
    fn z(&self, k: usize) -> usize {
        self.n_h + k
    }

    fn t(&self, i: usize) -> usize {
        self.n_h + self.n_z + i - 1
    }

    fn num_vars(&self) -> usize {
        self.n_h + self.n_z + self.n_t
    }
}

/// Multipliers are parametrised as `ν = T z`.
struct MultiplierBasis {
    operators: Vec<CMatrix>,
    data: Vec<f64>,
    to_nu: RMatrix,
}

impl MultiplierBasis {
    fn direct(ms: &MeasurementSet) -> Self {
        Self {
            operators: ms.operators().iter().map(|o| o.matrix().clone()).collect(),
            data: ms.expectations().to_vec(),
            to_nu: RMatrix::identity(ms.len(), ms.len()),
        }
    }

    /// Orthonormalised combinations of the measurement operators (Frobenius
    /// inner product), dropping directions whose singular value is below
    /// `rel_tol` relative to the largest. Dropping directions only restricts the
    /// multipliers, so every witness stays valid.
    fn whitened(ms: &MeasurementSet, rel_tol: f64) -> Self {
        let ops = ms.operators();
        let d2 = ops[0].matrix().len();
        let a = RMatrix::from_fn(2 * d2, ops.len(), |r, c| {
            let z = ops[c].matrix()[r % d2];
            if r < d2 {
                z.re
            } else {
                z.im
            }
        });
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let smax = svd.singular_values.max();
        let kept: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > rel_tol * smax).collect();
        let to_nu = RMatrix::from_fn(ops.len(), kept.len(), |i, c| vt[(kept[c], i)] / svd.singular_values[kept[c]]);
        let operators = (0..kept.len())
            .map(|c| {
                let mut m = CMatrix::zeros(ops[0].matrix().nrows(), ops[0].matrix().ncols());
                for (i, op) in ops.iter().enumerate() {
                    m += op.matrix() * Complex64::new(to_nu[(i, c)], 0.0);
                }
                linalg::hermitian_part(&m)
            })
            .collect();
        let data = (0..kept.len())
            .map(|c| ms.expectations().iter().enumerate().map(|(i, m)| to_nu[(i, c)] * m).sum())
            .collect();
        Self { operators, data, to_nu }
    }
}

fn build_program(ms: &MeasurementSet, basis_nu: &MultiplierBasis, epsilon: Option<f64>) -> (ConicProgram, Layout) {
    let space = ms.space();
    let d = space.dim();
    let basis = hermitian_basis(d);
    let n_z = basis_nu.operators.len();
    let n_t = if epsilon.is_some() { ms.len() - 1 } else { 0 };
    let layout = Layout { d, n_h: basis.len(), n_z, n_t };

    let mut objective = vec![0.0; layout.num_vars()];
    for (k, &mk) in basis_nu.data.iter().enumerate() {
        objective[layout.z(k)] = mk;
    }
    if let Some(eps) = epsilon {
        for (i, &ni) in ms.expectations().iter().enumerate().skip(1) {
            objective[layout.t(i)] = -eps * ni;
        }
    }
    let mut prog = ConicProgram::new(objective);

    // H^{T₁} − Σ νᵢ Mᵢ ⪰ 0
    let mut b1 = ConeBlock::new(BlockKind::Psd, 2 * d, SymMatrix::new());
    // 𝕀 − H ⪰ 0 and 𝕀 + H ⪰ 0
    let mut b2 = ConeBlock::new(BlockKind::Psd, 2 * d, SymMatrix::identity(2 * d));
    let mut b3 = ConeBlock::new(BlockKind::Psd, 2 * d, SymMatrix::identity(2 * d));
    for (p, entries) in basis.iter().enumerate() {
        let bp = sparse_to_dense(entries, d);
        let pt = partial_transpose_matrix(&bp, space, &[0]);
        b1.add_coefficient(p, embed_sym(&pt, -1.0));
        b2.add_coefficient(p, embed_sym(&bp, 1.0));
        b3.add_coefficient(p, embed_sym(&bp, -1.0));
    }
    for (k, op) in basis_nu.operators.iter().enumerate() {
        b1.add_coefficient(layout.z(k), embed_sym(op, 1.0));
    }
    prog.add_block(b1);
    prog.add_block(b2);
    prog.add_block(b3);

    if n_t > 0 {
        // rows 2(i−1): tᵢ − νᵢ ≥ 0, rows 2(i−1)+1: tᵢ + νᵢ ≥ 0, νᵢ = Σ_k T_ik z_k
        let rows = 2 * n_t;
        let mut lp = ConeBlock::new(BlockKind::Nonneg, rows, SymMatrix::new());
        for i in 1..ms.len() {
            let r = 2 * (i - 1);
            let mut at = SymMatrix::new();
            at.push(r, r, -1.0);
            at.push(r + 1, r + 1, -1.0);
            lp.add_coefficient(layout.t(i), at);
        }
        for k in 0..n_z {
            let mut az = SymMatrix::new();
            for i in 1..ms.len() {
                let c = basis_nu.to_nu[(i, k)];
                if c != 0.0 {
                    let r = 2 * (i - 1);
                    az.push(r, r, c);
                    az.push(r + 1, r + 1, -c);
                }
            }
            lp.add_coefficient(layout.z(k), az);
        }
        prog.add_block(lp);
    }
    (prog, layout)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// `λ_min(H^{T₁} − Σ νᵢ Mᵢ)`.
    pub feasibility_margin: f64,
    /// `‖H‖_∞`.
    pub operator_norm: f64,
    /// Recomputed (worst-case) linear objective.
    pub linear_objective: f64,
    pub passed: bool,
}

/// Independent check of a witness against a measurement set: both matrix
/// inequalities and the reported bound value.
pub fn verify_witness(result: &BoundResult, ms: &MeasurementSet) -> Result<WitnessCheck> {
    let space = ms.space();
    let h = &result.witness_h;
    if h.nrows() != space.dim() || result.multipliers.len() != ms.len() {
        return Err(Error::DimensionMismatch { expected: ms.len(), got: result.multipliers.len() });
    }
    let h = linalg::hermitian_part(h);
    let margin = linalg::min_eigenvalue(&constraint_matrix(&h, &result.multipliers, ms));
    let norm = linalg::max_eigenvalue(&h).abs().max(linalg::min_eigenvalue(&h).abs());
    let lin = worst_case_objective(&result.multipliers, ms.expectations(), result.error_budget);
    let bound = if lin > 0.0 { lin.log2().max(0.0) } else { 0.0 };
    let passed = margin >= -TOL_PSD && norm <= 1.0 + TOL_PSD && (bound - result.lower_bound).abs() <= 1e-8;
    Ok(WitnessCheck { feasibility_margin: margin, operator_norm: norm, linear_objective: lin, passed })
}

fn constraint_matrix(h: &CMatrix, nu: &[f64], ms: &MeasurementSet) -> CMatrix {
    let mut z = partial_transpose_matrix(h, ms.space(), &[0]);
    for (op, &v) in ms.operators().iter().zip(nu) {
        z -= op.matrix() * Complex64::new(v, 0.0);
    }
    z
}

/// `Σ νᵢ nᵢ − ε Σ_{i≥1} |νᵢ| nᵢ`.
fn worst_case_objective(nu: &[f64], n: &[f64], epsilon: f64) -> f64 {
    nu.iter()
        .zip(n)
        .enumerate()
        .map(|(i, (&v, &ni))| if i == 0 { v * ni } else { v * ni - epsilon * v.abs() * ni })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// Certified lower bound in bits.
    pub lower_bound: f64,
    /// Worst-case linear objective `Σ νᵢ mᵢ` of the repaired witness.
    pub linear_objective: f64,
    pub witness_h: CMatrix,
    pub multipliers: Vec<f64>,
    pub solver_status: SolverStatus,
    pub relative_gap: f64,
    pub iterations: usize,
    /// Relative box half-width `ε` applied to every non-identity datum.
    pub error_budget: f64,
    /// The optimum was non-positive; the bound falls back to 0.
    pub degenerate: bool,
    /// The witness passed [`verify_witness`].
    pub verified: bool,
}

impl BoundResult {
    pub fn to_report(&self, seed: Option<u64>) -> BoundReport {
        let d = self.witness_h.nrows();
        let mut h = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.witness_h[(i, j)];
                h.push([z.re, z.im]);
            }
        }
        BoundReport {
            lower_bound: self.lower_bound,
            linear_objective: self.linear_objective,
            status: self.solver_status,
            verified: self.verified,
            degenerate: self.degenerate,
            epsilon: self.error_budget,
            relative_gap: self.relative_gap,
            iterations: self.iterations,
            multipliers: self.multipliers.clone(),
            witness_dim: d,
            witness_h: h,
            seed,
        }
    }
}

/// JSON form of a [`BoundResult`]; `witness_h` is row-major `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower_bound: f64,
    pub linear_objective: f64,
    pub status: SolverStatus,
    pub verified: bool,
    pub degenerate: bool,
    pub epsilon: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub multipliers: Vec<f64>,
    pub witness_dim: usize,
    pub witness_h: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn lower_bound_negativity(ms: &MeasurementSet) -> Result<BoundResult> {
    solve_bound(ms, None, &SdpOptions::default())
}

/// Worst case over `mᵢ ∈ [(1−ε)nᵢ, (1+ε)nᵢ]` for the non-identity data.
pub fn lower_bound_negativity_robust(ms: &MeasurementSet, epsilon: f64) -> Result<BoundResult> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("error budget {epsilon} must be nonnegative")));
    }
    if ms.expectations().iter().any(|&n| n < 0.0) {
        return Err(Error::InvalidParameter("box model needs nonnegative data".into()));
    }
    solve_bound(ms, Some(epsilon), &SdpOptions::default())
}

pub fn solve_bound(ms: &MeasurementSet, epsilon: Option<f64>, options: &SdpOptions) -> Result<BoundResult> {
    // the box collapses at ε = 0
    let epsilon = epsilon.filter(|&e| e > 0.0);
    if epsilon.is_some() {
        // the box penalty acts on the raw multipliers, which the direct
        // parametrisation keeps well scaled
        return solve_with_basis(ms, &MultiplierBasis::direct(ms), epsilon, options);
    }
    // whitening conditions the exact program; how many near-null directions
    // to keep is problem dependent
    let candidates: Vec<Result<BoundResult>> = WHITEN_TOLS
        .par_iter()
        .map(|&tol| solve_with_basis(ms, &MultiplierBasis::whitened(ms, tol), None, options))
        .collect();
    let mut best: Option<BoundResult> = None;
    let mut first_err = None;
    for c in candidates {
        match c {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => (r.verified, r.linear_objective) > (b.verified, b.linear_objective),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one whitening level"),
    }
}

fn solve_with_basis(
    ms: &MeasurementSet,
    basis_nu: &MultiplierBasis,
    epsilon: Option<f64>,
    options: &SdpOptions,
) -> Result<BoundResult> {
    let (prog, layout) = build_program(ms, basis_nu, epsilon);
    let sol = sdp::solve(&prog, options)?;
    if sol.y_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(format!("solver returned a non-finite iterate ({})", sol.status)));
    }
    let d = layout.d;
    let basis = hermitian_basis(d);
    let mut h = CMatrix::zeros(d, d);
    for (p, entries) in basis.iter().enumerate() {
        let c = sol.y_star[p];
        for &(i, j, v) in entries {
            h[(i, j)] += v * c;
        }
    }
    let z = DVector::from_iterator(layout.n_z, (0..layout.n_z).map(|k| sol.y_star[layout.z(k)]));
    let nu: Vec<f64> = (&basis_nu.to_nu * z).iter().copied().collect();
    let (h, nu) = repair_witness(h, nu, ms);
    let eps = epsilon.unwrap_or(0.0);
    let lin = worst_case_objective(&nu, ms.expectations(), eps);
    let degenerate = !(lin > 0.0);
    let lower_bound = if degenerate { 0.0 } else { lin.log2().max(0.0) };
    let mut result = BoundResult {
        lower_bound,
        linear_objective: lin,
        witness_h: h,
        multipliers: nu,
        solver_status: sol.status,
        relative_gap: sol.relative_gap,
        iterations: sol.iterations,
        error_budget: eps,
        degenerate,
        verified: false,
    };
    result.verified = verify_witness(&result, ms)?.passed;
    Ok(result)
}

/// Restores exact feasibility: shrink `(H, ν)` into the box, then lower `ν₀`
/// (the identity multiplier) by the most negative eigenvalue of the constraint.
fn repair_witness(h: CMatrix, mut nu: Vec<f64>, ms: &MeasurementSet) -> (CMatrix, Vec<f64>) {
    let mut h = linalg::hermitian_part(&h);
    let norm = linalg::max_eigenvalue(&h).abs().max(linalg::min_eigenvalue(&h).abs());
    if norm > 1.0 {
        let s = 1.0 / norm;
        h *= Complex64::new(s, 0.0);
        nu.iter_mut().for_each(|v| *v *= s);
    }
    // rounding in Σ νᵢ Mᵢ grows with the multipliers; stay clear of it
    let scale: f64 = 1.0 + nu.iter().zip(ms.operators()).map(|(v, op)| v.abs() * linalg::max_abs(op.matrix())).sum::<f64>();
    let safety = 1e-13 * scale * ms.space().dim() as f64;
    let margin = linalg::min_eigenvalue(&constraint_matrix(&h, &nu, ms)) - safety;
    if margin < 0.0 {
        nu[0] += margin;
    }
    (h, nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseNoiseKind {
    /// Settings misjudged by a fixed relative amount: `θ = 0 ± ε/10`,
    /// `θ = (π/2)(1 ± ε/10)`.
    StaticCalibration,
    /// LO replaced by an equal-weight mixture of coherent states with uniformly
    /// distributed phase offsets.
    PhaseAveraged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseModel {
    pub kind: PhaseNoiseKind,
    #[serde(default)]
    pub epsilon: f64,
    /// Full support of the phase distribution in radians.
    #[serde(default)]
    pub width: f64,
    /// Read `width` as a standard deviation instead of the full support.
    #[serde(default)]
    pub width_is_std: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    100
}

impl PhaseNoiseModel {
    pub fn static_calibration(epsilon: f64, seed: u64) -> Self {
        Self { kind: PhaseNoiseKind::StaticCalibration, epsilon, width: 0.0, width_is_std: false, samples: 100, seed }
    }

    pub fn phase_averaged(width: f64, seed: u64) -> Self {
        Self { kind: PhaseNoiseKind::PhaseAveraged, epsilon: 0.0, width, width_is_std: false, samples: 100, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("phase error {} outside [0, 1]", self.epsilon)));
        }
        if !(self.width >= 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!("phase width {}", self.width)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("at least one phase sample is required".into()));
        }
        Ok(())
    }

    /// Half-width of the uniform offset distribution.
    pub fn half_support(&self) -> f64 {
        if self.width_is_std {
            self.width * 3f64.sqrt()
        } else {
            0.5 * self.width
        }
    }
}

/// Applies the noise model to a detector setting. Random draws come from
/// `rng`, so a seeded generator makes the result reproducible.
pub fn apply_phase_noise<R: Rng + ?Sized>(det: &DetectorConfig, model: &PhaseNoiseModel, rng: &mut R) -> Result<DetectorConfig> {
    model.validate()?;
    let mut out = det.clone();
    match model.kind {
        PhaseNoiseKind::StaticCalibration => {
            if model.epsilon > 0.0 {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let scale = if det.lo_phase == 0.0 { 1.0 } else { det.lo_phase };
                out.lo_phase = det.lo_phase + sign * scale * model.epsilon / 10.0;
            }
        }
        PhaseNoiseKind::PhaseAveraged => {
            let half = model.half_support();
            if half > 0.0 {
                out.lo_phase_offsets = (0..model.samples).map(|_| rng.gen_range(-half..=half)).collect();
            }
        }
    }
    Ok(out)
}

/// Local measurement list whose every phase setting has been passed through
/// [`apply_phase_noise`] independently.
pub fn noisy_local_elements<R: Rng + ?Sized>(
    det: &DetectorConfig,
    outcomes: &[usize],
    phases: &[f64],
    cutoff: usize,
    model: &PhaseNoiseModel,
    rng: &mut R,
) -> Result<Vec<FockOperator>> {
    let mut out = Vec::new();
    for &th in phases {
        let noisy = apply_phase_noise(&det.with_phase(th), model, rng)?;
        out.extend(local_elements(&noisy, outcomes, &[noisy.lo_phase], cutoff)?);
    }
    Ok(out)
}
