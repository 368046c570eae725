//! Block-diagonal semidefinite programs and a primal-dual interior-point solver.
//!
//! Programs are stated in the "linear matrix inequality" form
//!
//! ```text
//! maximize    bᵀy
//! subject to  C_k − Σ_j y_j A_{k,j} ⪰ 0     for every block k
//!             E y = f                         (optional)
//! ```
//!
//! whose conic dual is `minimize Σ_k ⟨C_k, X_k⟩ s.t. Σ_k ⟨A_{k,j}, X_k⟩ = b_j, X ⪰ 0`.
//! Blocks are either real symmetric PSD cones or nonnegative orthants.
//! Complex Hermitian constraints enter through [`hermitian_embed`].

mod embed;
mod solver;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

pub use embed::{hermitian_embed, hermitian_embed_unchecked};
pub use solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Real symmetric positive semidefinite cone of the given order.
    Psd,
    /// Nonnegative orthant; matrices on this block are diagonal.
    Nonneg,
}

/// Symmetric matrix stored as its upper-triangular nonzeros `(i, j, v)`, `i ≤ j`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: (0..n).map(|i| (i, i, 1.0)).collect() }
    }

    /// Upper triangle of a dense matrix; entries with `|v| ≤ drop_tol` are skipped.
    pub fn from_dense(m: &RMatrix, drop_tol: f64) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..=j {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v.abs() > drop_tol {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self {
            entries: values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, i, v)).collect(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((a, b, v));
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, n: usize) -> RMatrix {
        let mut m = RMatrix::zeros(n, n);
        self.add_to(&mut m, 1.0);
        m
    }

    /// `m += scale · self`.
    pub fn add_to(&self, m: &mut RMatrix, scale: f64) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += scale * v;
            if i != j {
                m[(j, i)] += scale * v;
            }
        }
    }

    /// Frobenius inner product with a dense matrix.
    pub fn dot(&self, m: &RMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * m[(i, i)] } else { v * (m[(i, j)] + m[(j, i)]) })
            .sum()
    }

    pub fn dot_diag(&self, d: &DVector<f64>) -> f64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|&(i, _, v)| v * d[i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.1).max()
    }
}

/// One conic constraint `C − Σ_j y_j A_j ∈ K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: BlockKind,
    pub size: usize,
    pub constant: SymMatrix,
    /// `(variable index, A_j)` pairs; variables absent from the list have `A_j = 0`.
    pub coefficients: Vec<(usize, SymMatrix)>,
}

impl ConeBlock {
    pub fn new(kind: BlockKind, size: usize, constant: SymMatrix) -> Self {
        Self { kind, size, constant, coefficients: Vec::new() }
    }

    pub fn add_coefficient(&mut self, var: usize, matrix: SymMatrix) {
        if !matrix.is_empty() {
            self.coefficients.push((var, matrix));
        }
    }

    /// `C − Σ y_j A_j` as a dense matrix (diagonal for orthant blocks).
    pub fn slack(&self, y: &[f64]) -> RMatrix {
        let mut s = self.constant.to_dense(self.size);
        for (var, a) in &self.coefficients {
            a.add_to(&mut s, -y[*var]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    /// Objective `b`, maximised as `bᵀy`.
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
    #[serde(default)]
    pub equalities: Vec<LinearEquality>,
}

impl ConicProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, blocks: Vec::new(), equalities: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_block(&mut self, block: ConeBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_vars();
        for (k, b) in self.blocks.iter().enumerate() {
            let check = |a: &SymMatrix| -> Result<()> {
                if let Some(idx) = a.max_index() {
                    if idx >= b.size {
                        return Err(Error::DimensionMismatch { expected: b.size, got: idx + 1 });
                    }
                }
                if b.kind == BlockKind::Nonneg && a.entries.iter().any(|e| e.0 != e.1) {
                    return Err(Error::InvalidParameter(format!("block {k}: orthant data must be diagonal")));
                }
                Ok(())
            };
            check(&b.constant)?;
            for (var, a) in &b.coefficients {
                if *var >= m {
                    return Err(Error::DimensionMismatch { expected: m, got: var + 1 });
                }
                check(a)?;
            }
        }
        for eq in &self.equalities {
            if eq.coefficients.iter().any(|(v, _)| *v >= m) {
                return Err(Error::InvalidParameter("equality references an unknown variable".into()));
            }
        }
        Ok(())
    }

    /// `bᵀy`.
    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    /// Smallest eigenvalue of each block slack at `y` (entries for orthant blocks).
    pub fn slack_min_eigenvalues(&self, y: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let s = b.slack(y);
                match b.kind {
                    BlockKind::Psd => crate::linalg::symmetric_eigenvalues(&s).first().copied().unwrap_or(0.0),
                    BlockKind::Nonneg => s.diagonal().iter().copied().fold(f64::INFINITY, f64::min),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Relative duality gap `|pobj − dobj| / (1 + |pobj| + |dobj|)` at termination.
    pub gap_tol: f64,
    /// Relative primal and dual residual at termination.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary parameter.
    pub step_fraction: f64,
    /// Iterates whose norm exceeds this are taken as evidence of infeasibility.
    pub divergence_limit: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-7, feas_tol: 1e-8, max_iter: 200, step_fraction: 0.98, divergence_limit: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub y_star: Vec<f64>,
    /// `bᵀy` at the returned iterate.
    pub objective_value: f64,
    /// `Σ ⟨C_k, X_k⟩` at the returned iterate.
    pub primal_objective: f64,
    /// Blocks `X_k` of the conic dual; orthant blocks are stored as diagonals.
    pub dual_certificate: Vec<RMatrix>,
    /// Absolute gap `pobj − dobj`.
    pub duality_gap: f64,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_block(constant: &[f64], coeffs: &[(usize, Vec<f64>)], kind: BlockKind) -> ConeBlock {
        let mut b = ConeBlock::new(kind, constant.len(), SymMatrix::diagonal(constant));
        for (v, d) in coeffs {
            b.add_coefficient(*v, SymMatrix::diagonal(d));
        }
        b
    }

    #[test]
    fn scalar_bound() {
        // maximize y  s.t.  [[1 − y, 0], [0, 1 + y]] ⪰ 0
        let mut p = ConicProgram::new(vec![1.0]);
        p.add_block(diag_block(&[1.0, 1.0], &[(0, vec![1.0, -1.0])], BlockKind::Psd));
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.y_star[0] - 1.0).abs() < 1e-6);
        assert!(sol.relative_gap < 1e-7);
    }

    #[test]
    fn separable_program() {
        let mut p = ConicProgram::new(vec![1.0, 1.0]);
        p.add_block(diag_block(
            &[1.0, 1.0, 1.0, 1.0],
            &[(0, vec![1.0, 0.0, -1.0, 0.0]), (1, vec![0.0, 1.0, 0.0, -1.0])],
            BlockKind::Psd,
        ));
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-6);
        assert!((sol.primal_objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn orthant_block_matches_psd_block() {
        let build = |kind| {
            let mut p = ConicProgram::new(vec![1.0, 2.0]);
            p.add_block(diag_block(
                &[3.0, 4.0, 0.0, 0.0],
                &[(0, vec![1.0, 1.0, -1.0, 0.0]), (1, vec![1.0, 2.0, 0.0, -1.0])],
                kind,
            ));
            solve(&p, &SdpOptions::default()).unwrap()
        };
        let a = build(BlockKind::Psd);
        let b = build(BlockKind::Nonneg);
        assert_eq!(a.status, SolverStatus::Optimal);
        assert_eq!(b.status, SolverStatus::Optimal);
        // y0 + y1 ≤ 3, y0 + 2 y1 ≤ 4, y ≥ 0  → optimum at (2, 1), value 4
        assert!((a.objective_value - 4.0).abs() < 1e-6);
        assert!((b.objective_value - 4.0).abs() < 1e-6);
    }

    #[test]
    fn off_diagonal_coupling() {
        // maximize 2 y  s.t. [[1, y], [y, 1]] ⪰ 0  → y = 1
        let mut p = ConicProgram::new(vec![2.0]);
        let mut blk = ConeBlock::new(BlockKind::Psd, 2, SymMatrix::identity(2));
        let mut a = SymMatrix::new();
        a.push(0, 1, -1.0);
        blk.add_coefficient(0, a);
        p.add_block(blk);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn equality_constraints_are_eliminated() {
        // maximize y0 + y1 s.t. diag(1 − y0, 1 − y1, 1 + y0, 1 + y1) ⪰ 0, y0 − y1 = 0.5
        let mut p = ConicProgram::new(vec![1.0, 1.0]);
        p.add_block(diag_block(
            &[1.0, 1.0, 1.0, 1.0],
            &[(0, vec![1.0, 0.0, -1.0, 0.0]), (1, vec![0.0, 1.0, 0.0, -1.0])],
            BlockKind::Psd,
        ));
        p.equalities.push(LinearEquality { coefficients: vec![(0, 1.0), (1, -1.0)], rhs: 0.5 });
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.y_star[0] - 1.0).abs() < 1e-6);
        assert!((sol.y_star[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn infeasible_program_is_reported() {
        // −1 − 0·y ⪰ 0 has no solution
        let mut p = ConicProgram::new(vec![1.0]);
        let mut blk = ConeBlock::new(BlockKind::Psd, 1, SymMatrix::diagonal(&[-1.0]));
        blk.add_coefficient(0, SymMatrix::new());
        p.add_block(blk);
        p.add_block(diag_block(&[1.0, 1.0], &[(0, vec![1.0, -1.0])], BlockKind::Psd));
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_ne!(sol.status, SolverStatus::Optimal);
    }

    #[test]
    fn unbounded_program_is_not_optimal() {
        // maximize y s.t. 1 + y ≥ 0
        let mut p = ConicProgram::new(vec![1.0]);
        p.add_block(diag_block(&[1.0], &[(0, vec![-1.0])], BlockKind::Nonneg));
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_ne!(sol.status, SolverStatus::Optimal);
    }

    #[test]
    fn program_json_roundtrip() {
        let mut p = ConicProgram::new(vec![1.0]);
        p.add_block(diag_block(&[1.0, 1.0], &[(0, vec![1.0, -1.0])], BlockKind::Psd));
        let back = ConicProgram::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn sym_matrix_dot_matches_dense() {
        let mut a = SymMatrix::new();
        a.push(0, 0, 2.0);
        a.push(1, 0, -1.5);
        a.push(2, 1, 0.25);
        let m = RMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + 0.5);
        let dense = a.to_dense(3);
        assert!((a.dot(&m) - dense.dot(&m)).abs() < 1e-14);
        assert!((a.frobenius_norm() - dense.norm()).abs() < 1e-14);
    }
}
