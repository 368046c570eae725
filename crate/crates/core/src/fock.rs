//! Truncated Fock-space states and operators.
//!
//! Multi-mode bases are ordered row-major with mode 0 as the most significant
//! index, so that `kron(A_0, A_1)` acts as `A_0` on mode 0 and `A_1` on mode 1.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, ONE, ZERO};
use crate::tolerances::{PROB_FLOOR, TAIL_TOL, TOL_HERM, TOL_PSD, TOL_TRACE};

/// Per-mode photon-number cutoffs. A mode with cutoff `c` has dimension `c + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    cutoffs: Vec<usize>,
}

impl HilbertSpec {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidParameter("a space needs at least one mode".into()));
        }
        Ok(Self { cutoffs })
    }

    pub fn single(cutoff: usize) -> Self {
        Self { cutoffs: vec![cutoff] }
    }

    pub fn two_mode(first: usize, second: usize) -> Self {
        Self { cutoffs: vec![first, second] }
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cutoffs.iter().map(|c| c + 1).collect()
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().map(|c| c + 1).product()
    }

    pub fn is_bipartite(&self) -> bool {
        self.cutoffs.len() == 2
    }

    /// Flat basis index of an occupation-number tuple.
    pub fn index(&self, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.modes());
        occupation
            .iter()
            .zip(&self.cutoffs)
            .fold(0, |acc, (&n, &c)| acc * (c + 1) + n)
    }

    /// Occupation-number tuple of a flat basis index.
    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes()];
        for (slot, &c) in occ.iter_mut().zip(&self.cutoffs).rev() {
            *slot = index % (c + 1);
            index /= c + 1;
        }
        occ
    }

    pub fn tensor(&self, other: &HilbertSpec) -> HilbertSpec {
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        HilbertSpec { cutoffs }
    }

    pub fn require_bipartite(&self) -> Result<()> {
        if self.is_bipartite() {
            Ok(())
        } else {
            Err(Error::NotBipartite(self.modes()))
        }
    }
}

/// A square matrix acting on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    space: HilbertSpec,
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: HilbertSpec) -> Self {
        let dim = space.dim();
        Self { space, matrix: linalg::identity(dim) }
    }

    pub fn diagonal(space: HilbertSpec, diag: &DVector<f64>) -> Result<Self> {
        Self::new(space, linalg::diagonal_complex(diag))
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &FockOperator) -> FockOperator {
        FockOperator {
            space: self.space.tensor(&other.space),
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_deviation(&self.matrix) <= tol
    }

    /// `Tr(self · other)`.
    pub fn expectation(&self, state: &TruncatedState) -> Result<Complex64> {
        if self.space != state.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: state.space.dim(),
            });
        }
        Ok(linalg::trace_product(&state.matrix, &self.matrix))
    }
}

/// Density operator on a truncated Fock space: Hermitian, unit trace, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    space: HilbertSpec,
    matrix: CMatrix,
}

impl TruncatedState {
    /// Validates the density-matrix invariants. The stored matrix is the
    /// Hermitian part of the input.
    pub fn new(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        let op = FockOperator::new(space, matrix)?;
        let dev = linalg::hermiticity_deviation(&op.matrix);
        if dev > TOL_HERM {
            return Err(Error::NotHermitian(dev));
        }
        let matrix = linalg::hermitian_part(&op.matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TOL_TRACE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_ev = linalg::min_eigenvalue(&matrix);
        if min_ev < -TOL_PSD {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min_ev:.3e}")));
        }
        Ok(Self { space: op.space, matrix })
    }

    /// Normalises an arbitrary nonzero matrix to unit trace before validating.
    pub fn from_unnormalized(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::NullState(format!("trace {tr}")));
        }
        Self::new(space, linalg::hermitian_part(&matrix).unscale(tr))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) state vector.
    pub fn from_pure(space: HilbertSpec, amplitudes: &DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NullState("zero state vector".into()));
        }
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let psi = amplitudes.unscale(norm);
        // a normalised projector: Hermitian, unit trace and PSD by construction
        let matrix = linalg::hermitian_part(&(&psi * psi.adjoint()));
        Ok(Self { space, matrix })
    }

    /// Fock state `|n_0, n_1, ...⟩⟨...|`.
    pub fn number_state(space: HilbertSpec, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != space.modes() || occupation.iter().zip(space.cutoffs()).any(|(n, c)| n > c) {
            return Err(Error::InvalidParameter(format!("occupation {occupation:?} outside {:?}", space.cutoffs())));
        }
        let mut v = DVector::from_element(space.dim(), ZERO);
        v[space.index(occupation)] = ONE;
        Self::from_pure(space, &v)
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn as_operator(&self) -> FockOperator {
        FockOperator { space: self.space.clone(), matrix: self.matrix.clone() }
    }

    pub fn tensor(&self, other: &TruncatedState) -> TruncatedState {
        TruncatedState {
            space: self.space.tensor(&other.space),
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    /// `U ρ U†` for a unitary on the same space.
    pub fn evolve(&self, unitary: &FockOperator) -> Result<TruncatedState> {
        if unitary.space != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: unitary.space.dim() });
        }
        let m = &unitary.matrix * &self.matrix * unitary.matrix.adjoint();
        TruncatedState::from_unnormalized(self.space.clone(), m)
    }

    /// Mean photon number of one mode.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        (0..self.space.dim())
            .map(|i| self.space.occupation(i)[mode] as f64 * self.matrix[(i, i)].re)
            .sum()
    }

    pub fn trace_distance(&self, other: &TruncatedState) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: other.space.dim() });
        }
        Ok(linalg::trace_distance(&self.matrix, &other.matrix))
    }
}

/// Two-mode squeezing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedParams {
    pub lambda: f64,
    pub n_max: usize,
}

impl SqueezedParams {
    pub fn new(lambda: f64, n_max: usize) -> Result<Self> {
        let p = Self { lambda, n_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!("squeezing λ = {} outside [0, 1)", self.lambda)));
        }
        Ok(())
    }
}

/// Subtraction beam splitter followed by a lossy bucket detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractionParams {
    /// Intensity transmission of the subtraction beam splitter.
    pub transmission: f64,
    /// Transmittivity of the loss beam splitter placed before the APD.
    pub apd_efficiency: f64,
    /// Mode from which the photon is removed.
    #[serde(default)]
    pub mode: usize,
}

impl SubtractionParams {
    pub fn new(transmission: f64, apd_efficiency: f64) -> Result<Self> {
        let p = Self { transmission, apd_efficiency, mode: 0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transmission > 0.0 && self.transmission <= 1.0) {
            return Err(Error::InvalidParameter(format!("transmission {} outside (0, 1]", self.transmission)));
        }
        if !(self.apd_efficiency > 0.0 && self.apd_efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!("APD efficiency {} outside (0, 1]", self.apd_efficiency)));
        }
        if self.mode > 1 {
            return Err(Error::InvalidParameter(format!("subtraction mode {} is not 0 or 1", self.mode)));
        }
        Ok(())
    }
}

/// Truncated coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!` (not renormalised)
/// and the probability mass lost above the cutoff.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> (DVector<Complex64>, f64) {
    let mut amps = DVector::from_element(cutoff + 1, ZERO);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..=cutoff {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    (amps, (1.0 - kept).max(0.0))
}

/// Smallest cutoff `≥ min_cutoff` whose coherent-state tail mass is below `tol`.
pub fn cutoff_for_amplitude(amplitude: f64, min_cutoff: usize, tol: f64) -> usize {
    let mut cutoff = min_cutoff;
    while coherent_amplitudes(Complex64::new(amplitude, 0.0), cutoff).1 >= tol && cutoff < 400 {
        cutoff += 1;
    }
    cutoff
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: TruncatedState,
    pub tail_mass: f64,
}

pub fn coherent_state(alpha: Complex64, cutoff: usize) -> Result<CoherentState> {
    coherent_state_with_tolerance(alpha, cutoff, TAIL_TOL)
}

pub fn coherent_state_with_tolerance(alpha: Complex64, cutoff: usize, tail_tol: f64) -> Result<CoherentState> {
    let (amps, tail) = coherent_amplitudes(alpha, cutoff);
    if tail > tail_tol {
        return Err(Error::TruncationTail { tail, tol: tail_tol });
    }
    let state = TruncatedState::from_pure(HilbertSpec::single(cutoff), &amps)?;
    Ok(CoherentState { state, tail_mass: tail })
}

/// `√(1−λ²) Σ λⁿ |n,n⟩`, truncated at `n_max` and renormalised.
pub fn two_mode_squeezed(params: &SqueezedParams) -> Result<TruncatedState> {
    params.validate()?;
    let space = HilbertSpec::two_mode(params.n_max, params.n_max);
    let mut v = DVector::from_element(space.dim(), ZERO);
    let mut amp = (1.0 - params.lambda * params.lambda).sqrt();
    for n in 0..=params.n_max {
        v[space.index(&[n, n])] = Complex64::new(amp, 0.0);
        amp *= params.lambda;
    }
    TruncatedState::from_pure(space, &v)
}

/// Ideal weak-reflectivity photon-subtracted state `C Σ_{n≥1} (λT)ⁿ √n |n−1, n⟩`.
pub fn photon_subtracted_ideal(params: &SqueezedParams, transmission: f64) -> Result<TruncatedState> {
    params.validate()?;
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(Error::InvalidParameter(format!("transmission {transmission} outside (0, 1]")));
    }
    let x = params.lambda * transmission;
    if x == 0.0 || params.n_max == 0 {
        return Err(Error::NullState("no photon available to subtract".into()));
    }
    let space = HilbertSpec::two_mode(params.n_max, params.n_max);
    let mut v = DVector::from_element(space.dim(), ZERO);
    for n in 1..=params.n_max {
        v[space.index(&[n - 1, n])] = Complex64::new(x.powi(n as i32) * (n as f64).sqrt(), 0.0);
    }
    TruncatedState::from_pure(space, &v)
}

#[derive(Debug, Clone)]
pub struct HeraldedState {
    pub state: TruncatedState,
    pub probability: f64,
}

/// Conditional photon subtraction on one mode of a bipartite state.
///
/// The mode meets a vacuum ancilla on a beam splitter of intensity transmission
/// `T`; the ancilla passes a loss channel of transmittivity `η` and hits a bucket
/// detector. Conditioning on a click and tracing the ancilla leaves
/// `Σ_k (1 − (1−η)^k) A_k ρ A_k†`, with `A_k|m⟩ = √(C(m,k) T^{m−k} (1−T)^k) |m−k⟩`.
pub fn photon_subtracted_conditional(state: &TruncatedState, params: &SubtractionParams) -> Result<HeraldedState> {
    params.validate()?;
    let space = state.space();
    space.require_bipartite()?;
    let t = params.transmission;
    let eta = params.apd_efficiency;
    let cut = space.cutoffs()[params.mode];
    let other = space.cutoffs()[1 - params.mode];
    let mut out = CMatrix::zeros(space.dim(), space.dim());
    for k in 1..=cut {
        let click = 1.0 - (1.0 - eta).powi(k as i32);
        let mut local = RMatrix::zeros(cut + 1, cut + 1);
        for m in k..=cut {
            local[(m - k, m)] = (linalg::binomial(m, k) * t.powi((m - k) as i32) * (1.0 - t).powi(k as i32)).sqrt();
        }
        let local = linalg::to_complex(&local);
        let id = linalg::identity(other + 1);
        let kraus = if params.mode == 0 { linalg::kron(&local, &id) } else { linalg::kron(&id, &local) };
        out += (&kraus * state.matrix() * kraus.adjoint()).scale(click);
    }
    let probability = linalg::trace(&out).re;
    if !(probability >= PROB_FLOOR) {
        return Err(Error::NullHerald(probability));
    }
    let state = TruncatedState::from_unnormalized(space.clone(), out)?;
    Ok(HeraldedState { state, probability })
}

/// One block of `exp(iχ(b†a + a†b))` on the `total`-photon subspace, in the
/// basis `|k, total−k⟩` indexed by the mode-`a` occupation `k`. Exactly unitary.
pub fn beam_splitter_block(total: usize, chi: f64) -> CMatrix {
    let n = total + 1;
    let mut gen = RMatrix::zeros(n, n);
    for k in 1..=total {
        // b†a |k, N−k⟩ = √k √(N−k+1) |k−1, N−k+1⟩
        let v = ((k * (total - k + 1)) as f64).sqrt();
        gen[(k - 1, k)] = v;
        gen[(k, k - 1)] = v;
    }
    let eig = SymmetricEigen::new(gen);
    let vecs = linalg::to_complex(&eig.eigenvectors);
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, chi * l));
    &vecs * CMatrix::from_diagonal(&phases) * vecs.transpose()
}

/// Mixing angle for a given reflectivity, `R = cos²χ`.
pub fn mixing_angle(reflectivity: f64) -> f64 {
    reflectivity.clamp(0.0, 1.0).sqrt().acos()
}

/// Beam-splitter unitary `exp(iχ(b†a + a†b))` with `χ = arccos √R` on a two-mode
/// space (mode 0 is `a`). Each fixed-photon-number block is exponentiated
/// exactly and the result projected onto the truncated space, so the operator is
/// unitary on every block with total photon number `≤ min(cutoffs)`.
pub fn beam_splitter_unitary(reflectivity: f64, space: &HilbertSpec) -> Result<FockOperator> {
    space.require_bipartite()?;
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::InvalidParameter(format!("reflectivity {reflectivity} outside [0, 1]")));
    }
    let chi = mixing_angle(reflectivity);
    let (ca, cb) = (space.cutoffs()[0], space.cutoffs()[1]);
    let mut u = CMatrix::zeros(space.dim(), space.dim());
    for total in 0..=(ca + cb) {
        let block = beam_splitter_block(total, chi);
        let lo = total.saturating_sub(cb);
        let hi = total.min(ca);
        for k_out in lo..=hi {
            for k_in in lo..=hi {
                let r = space.index(&[k_out, total - k_out]);
                let c = space.index(&[k_in, total - k_in]);
                u[(r, c)] = block[(k_out, k_in)];
            }
        }
    }
    FockOperator::new(space.clone(), u)
}

/// `diag(e^{inφ})` on one mode.
pub fn phase_rotation(cutoff: usize, phi: f64) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        cutoff + 1,
        (0..=cutoff).map(|n| Complex64::from_polar(1.0, n as f64 * phi)),
    ))
}

/// Transposes the indices of the listed modes.
pub fn partial_transpose_matrix(matrix: &CMatrix, space: &HilbertSpec, modes: &[usize]) -> CMatrix {
    let dim = space.dim();
    let mut out = CMatrix::zeros(dim, dim);
    let occ: Vec<Vec<usize>> = (0..dim).map(|i| space.occupation(i)).collect();
    for i in 0..dim {
        for j in 0..dim {
            let mut oi = occ[i].clone();
            let mut oj = occ[j].clone();
            for &m in modes {
                std::mem::swap(&mut oi[m], &mut oj[m]);
            }
            out[(space.index(&oi), space.index(&oj))] = matrix[(i, j)];
        }
    }
    out
}

/// Partial transpose of a bipartite operator on `subsystem` (0 or 1).
pub fn partial_transpose(op: &FockOperator, subsystem: usize) -> Result<FockOperator> {
    op.space.require_bipartite()?;
    if subsystem > 1 {
        return Err(Error::InvalidParameter(format!("subsystem {subsystem} of a bipartite space")));
    }
    Ok(FockOperator {
        space: op.space.clone(),
        matrix: partial_transpose_matrix(&op.matrix, &op.space, &[subsystem]),
    })
}

/// Reduced matrix on the modes in `keep` (in the order given).
pub fn partial_trace_matrix(matrix: &CMatrix, space: &HilbertSpec, keep: &[usize]) -> Result<(HilbertSpec, CMatrix)> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial trace must keep at least one mode".into()));
    }
    let mut seen = vec![false; space.modes()];
    for &m in keep {
        if m >= space.modes() || seen[m] {
            return Err(Error::InvalidParameter(format!("invalid mode subset {keep:?}")));
        }
        seen[m] = true;
    }
    let reduced = HilbertSpec::new(keep.iter().map(|&m| space.cutoffs()[m]).collect())?;
    let traced: Vec<usize> = (0..space.modes()).filter(|m| !seen[*m]).collect();
    let dim = space.dim();
    let occ: Vec<Vec<usize>> = (0..dim).map(|i| space.occupation(i)).collect();
    let mut out = CMatrix::zeros(reduced.dim(), reduced.dim());
    for i in 0..dim {
        for j in 0..dim {
            if traced.iter().all(|&m| occ[i][m] == occ[j][m]) {
                let ki: Vec<usize> = keep.iter().map(|&m| occ[i][m]).collect();
                let kj: Vec<usize> = keep.iter().map(|&m| occ[j][m]).collect();
                out[(reduced.index(&ki), reduced.index(&kj))] += matrix[(i, j)];
            }
        }
    }
    Ok((reduced, out))
}

pub fn partial_trace(state: &TruncatedState, keep: &[usize]) -> Result<TruncatedState> {
    let (space, m) = partial_trace_matrix(&state.matrix, &state.space, keep)?;
    TruncatedState::from_unnormalized(space, m)
}

/// Applies a single-mode operator `u` to `mode` of a multi-mode space.
pub fn embed_local(u: &CMatrix, space: &HilbertSpec, mode: usize) -> CMatrix {
    let mut acc: Option<CMatrix> = None;
    for (m, &c) in space.cutoffs().iter().enumerate() {
        let factor = if m == mode { u.clone() } else { linalg::identity(c + 1) };
        acc = Some(match acc {
            None => factor,
            Some(a) => linalg::kron(&a, &factor),
        });
    }
    acc.expect("space has at least one mode")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn index_roundtrip() {
        let s = HilbertSpec::new(vec![2, 3, 1]).unwrap();
        assert_eq!(s.dim(), 24);
        for i in 0..s.dim() {
            assert_eq!(s.index(&s.occupation(i)), i);
        }
        assert_eq!(s.index(&[1, 2, 0]), 1 * 8 + 2 * 2);
        assert!(HilbertSpec::new(vec![]).is_err());
    }

    #[test]
    fn vacuum_coherent_state() {
        let cs = coherent_state(c(0.0, 0.0), 5).unwrap();
        assert_abs_diff_eq!(cs.state.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(cs.tail_mass, 0.0);
    }

    #[test]
    fn coherent_mean_photon_number() {
        // Poisson moments: ⟨n⟩ = Σ n e^{-1}/n!
        let oracle: f64 = (0..=10u32)
            .map(|n| n as f64 * (-1.0f64).exp() / (1..=n).map(f64::from).product::<f64>())
            .sum::<f64>()
            / (0..=10u32).map(|n| (-1.0f64).exp() / (1..=n).map(f64::from).product::<f64>()).sum::<f64>();
        let cs = coherent_state(c(1.0, 0.0), 10).unwrap();
        let mean = cs.state.mean_photon_number(0);
        assert_abs_diff_eq!(mean, oracle, epsilon = 1e-12);
        assert!((mean - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coherent_tail_too_large() {
                let err = coherent_state(c(2.5, 0.0), 3).unwrap_err();
        match err {
            Error::TruncationTail { tail, .. } => {
                let x: f64 = 6.25;
                let kept = (-x).exp() * (1.0 + x + x * x / 2.0 + x * x * x / 6.0);
                assert_abs_diff_eq!(tail, 1.0 - kept, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn squeezed_vacuum_limit() {
        let s = two_mode_squeezed(&SqueezedParams::new(0.0, 3).unwrap()).unwrap();
        assert_abs_diff_eq!(s.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert!(SqueezedParams::new(1.0, 3).is_err());
    }

    #[test]
    fn squeezed_schmidt_coefficients() {
        let s = two_mode_squeezed(&SqueezedParams::new(0.2, 3).unwrap()).unwrap();
        let sp = s.space().clone();
        let norm: f64 = [1.0, 0.04, 0.0016, 0.000064].iter().sum();
        for n in 0..4 {
            let i = sp.index(&[n, n]);
            assert_abs_diff_eq!(s.matrix()[(i, i)].re, 0.04f64.powi(n as i32) / norm, epsilon = 1e-14);
        }
    }

    #[test]
    fn beam_splitter_identity_at_full_reflectivity() {
        let sp = HilbertSpec::two_mode(3, 3);
        let u = beam_splitter_unitary(1.0, &sp).unwrap();
        assert!(linalg::max_abs(&(u.matrix() - linalg::identity(16))) < 1e-14);
    }

    #[test]
    fn beam_splitter_single_photon_rotation() {
        let sp = HilbertSpec::two_mode(2, 2);
        let u = beam_splitter_unitary(0.5, &sp).unwrap();
        let col = u.matrix().column(sp.index(&[1, 0]));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(col[sp.index(&[1, 0])].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(col[sp.index(&[0, 1])].im, h, epsilon = 1e-12);
        assert_abs_diff_eq!(col[sp.index(&[0, 1])].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn beam_splitter_unitary_on_interior_blocks() {
        let sp = HilbertSpec::two_mode(4, 4);
        for &r in &[0.0, 0.1, 0.5, 0.83] {
            let u = beam_splitter_unitary(r, &sp).unwrap();
            let uu = u.matrix().adjoint() * u.matrix();
            for i in 0..sp.dim() {
                let oi = sp.occupation(i);
                if oi[0] + oi[1] > 4 {
                    continue;
                }
                for j in 0..sp.dim() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((uu[(i, j)] - c(expected, 0.0)).norm() < 1e-9);
                }
            }
            // photon-number conservation
            let n_tot = CMatrix::from_diagonal(&DVector::from_iterator(
                sp.dim(),
                (0..sp.dim()).map(|i| c(sp.occupation(i).iter().sum::<usize>() as f64, 0.0)),
            ));
            let comm = u.matrix() * &n_tot - &n_tot * u.matrix();
            assert!(linalg::max_abs(&comm) < 1e-12);
        }
    }

    #[test]
    fn ideal_subtraction_single_term() {
        let s = photon_subtracted_ideal(&SqueezedParams::new(0.2, 1).unwrap(), 1.0).unwrap();
        let i = s.space().index(&[0, 1]);
        assert_abs_diff_eq!(s.matrix()[(i, i)].re, 1.0, epsilon = 1e-15);
        assert!(photon_subtracted_ideal(&SqueezedParams::new(0.0, 3).unwrap(), 0.9).is_err());
    }

    #[test]
    fn ideal_subtraction_amplitudes() {
        let (lam, t) = (0.3, 0.9);
        let x: f64 = lam * t;
        let norm = (1..=3).map(|n| x.powi(2 * n) * n as f64).sum::<f64>().sqrt();
        let s = photon_subtracted_ideal(&SqueezedParams::new(lam, 3).unwrap(), t).unwrap();
        let sp = s.space().clone();
        for n in 1..=3usize {
            let i = sp.index(&[n - 1, n]);
            let amp = x.powi(n as i32) * (n as f64).sqrt() / norm;
            assert_abs_diff_eq!(s.matrix()[(i, i)].re, amp * amp, epsilon = 1e-14);
        }
    }

    #[test]
    fn conditional_subtraction_of_vacuum_fails() {
        let vac = TruncatedState::number_state(HilbertSpec::two_mode(3, 3), &[0, 0]).unwrap();
        let p = SubtractionParams::new(0.9, 0.5).unwrap();
        assert!(matches!(photon_subtracted_conditional(&vac, &p), Err(Error::NullHerald(_))));
    }

    #[test]
    fn conditional_subtraction_approaches_ideal() {
        let sq = SqueezedParams::new(0.1, 3).unwrap();
        let ini = two_mode_squeezed(&sq).unwrap();
        let p = SubtractionParams::new(0.999, 1.0).unwrap();
        let h = photon_subtracted_conditional(&ini, &p).unwrap();
        assert!(h.probability > 0.0 && h.probability <= 1.0);
        let ideal = photon_subtracted_ideal(&sq, 0.999).unwrap();
        assert!(h.state.trace_distance(&ideal).unwrap() <= 1e-2);
    }

    #[test]
    fn partial_transpose_of_product_state() {
        let a = coherent_state(c(0.3, 0.4), 6).unwrap().state;
        let b = coherent_state(c(-0.2, 0.1), 6).unwrap().state;
        let prod = a.tensor(&b).as_operator();
        let pt = partial_transpose(&prod, 0).unwrap();
        let expected = linalg::kron(&a.matrix().transpose(), b.matrix());
        assert!(linalg::max_abs(&(pt.matrix() - expected)) < 1e-15);
        let tn: f64 = linalg::hermitian_eigenvalues(pt.matrix()).iter().map(|x| x.abs()).sum();
        assert_abs_diff_eq!(tn, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_of_bell_like_block() {
        let sp = HilbertSpec::two_mode(1, 1);
        let mut v = DVector::from_element(4, ZERO);
        v[sp.index(&[0, 0])] = ONE;
        v[sp.index(&[1, 1])] = ONE;
        let rho = TruncatedState::from_pure(sp, &v).unwrap();
        let pt = partial_transpose(&rho.as_operator(), 0).unwrap();
        assert_abs_diff_eq!(linalg::min_eigenvalue(pt.matrix()), -0.5, epsilon = 1e-12);
        let back = partial_transpose(&pt, 0).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn partial_transpose_rejects_three_modes() {
        let sp = HilbertSpec::new(vec![1, 1, 1]).unwrap();
        assert!(partial_transpose(&FockOperator::identity(sp), 0).is_err());
    }

    #[test]
    fn partial_trace_of_product_and_squeezed() {
        let a = coherent_state(c(0.5, 0.0), 8).unwrap().state;
        let b = TruncatedState::number_state(HilbertSpec::single(2), &[1]).unwrap();
        let red = partial_trace(&a.tensor(&b), &[0]).unwrap();
        assert!(linalg::max_abs(&(red.matrix() - a.matrix())) < 1e-15);

        let sq = two_mode_squeezed(&SqueezedParams::new(0.3, 4).unwrap()).unwrap();
        for keep in [0usize, 1] {
            let r = partial_trace(&sq, &[keep]).unwrap();
            let z: f64 = (0..=4).map(|n| 0.09f64.powi(n)).sum();
            for n in 0..=4 {
                assert_abs_diff_eq!(r.matrix()[(n, n)].re, 0.09f64.powi(n as i32) / z, epsilon = 1e-14);
            }
            assert!(linalg::max_abs(&(r.matrix() - CMatrix::from_diagonal(&r.matrix().diagonal()))) < 1e-15);
        }
        assert!(partial_trace(&sq, &[]).is_err());
    }
}
