//! Exact logarithmic negativity of truncated bipartite states.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{partial_transpose_matrix, TruncatedState};
use crate::linalg::{self, CMatrix};
use crate::tolerances::TOL_HERM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityResult {
    /// `log₂ ‖ρ^{T}‖₁`, clamped at zero.
    pub log_negativity: f64,
    pub trace_norm: f64,
    pub negative_eigenvalues: Vec<f64>,
    /// The partial transpose was taken of `(ρ + ρ†)/2`.
    pub symmetrized: bool,
}

/// Partial transpose over the modes in `cut`, then a Hermitian eigendecomposition.
pub fn exact_log_negativity(state: &TruncatedState, cut: &[usize]) -> Result<NegativityResult> {
    let space = state.space();
    if space.modes() < 2 {
        return Err(Error::NotBipartite(space.modes()));
    }
    if cut.is_empty() || cut.len() >= space.modes() || cut.iter().any(|&m| m >= space.modes()) {
        return Err(Error::InvalidParameter(format!("cut {cut:?} is not a proper subset of the modes")));
    }
    let dev = linalg::hermiticity_deviation(state.matrix());
    if dev > TOL_HERM {
        return Err(Error::NotHermitian(dev));
    }
    let rho = linalg::hermitian_part(state.matrix());
    let pt = partial_transpose_matrix(&rho, space, cut);
    let eigs = blockwise_eigenvalues(&pt);
    let trace_norm: f64 = eigs.iter().map(|x| x.abs()).sum();
    let negative_eigenvalues = eigs.iter().copied().filter(|&x| x < 0.0).collect();
    Ok(NegativityResult {
        log_negativity: trace_norm.log2().max(0.0),
        trace_norm,
        negative_eigenvalues,
        symmetrized: true,
    })
}

/// Eigenvalues of a Hermitian matrix, diagonalising each connected component of
/// its sparsity pattern separately. Exact zeros only, so nothing is dropped;
/// number-conserving states split into many small blocks.
fn blockwise_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut eigs = Vec::with_capacity(n);
    for idx in groups.values() {
        let block = CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
        eigs.extend(linalg::hermitian_eigenvalues(&block));
    }
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Logarithmic negativity across the first mode of a bipartite state.
pub fn log_negativity(state: &TruncatedState) -> Result<f64> {
    Ok(exact_log_negativity(state, &[0])?.log_negativity)
}

/// `log₂((1+λ)/(1−λ))`, the untruncated two-mode squeezed vacuum value.
pub fn squeezed_closed_form(lambda: f64) -> f64 {
    ((1.0 + lambda) / (1.0 - lambda)).log2()
}
