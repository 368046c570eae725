//! Shared helpers for the integration tests: random conic programs, a few
//! programs with known optima, and an independent cutting-plane solver.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use negbound_core::bound::{
    joint_index, local_elements, lower_bound_negativity, lower_bound_negativity_robust, tensor_measurements,
    verify_witness, MeasurementSet,
};
use negbound_core::detector::{homodyne_povm, DetectorConfig};
use negbound_core::fock::{HilbertSpec, TruncatedState};
use negbound_core::negativity::log_negativity;
use negbound_core::sdp::{BlockKind, ConeBlock, ConicProgram, LinearEquality, SymMatrix};
use negbound_core::tolerances::TOL_COMPLETE;

/// Program with its known optimal value.
pub struct Toy {
    pub name: &'static str,
    pub program: ConicProgram,
    pub optimum: f64,
}

pub fn toy_programs() -> Vec<Toy> {
    let mut out = Vec::new();

    // maximise y s.t. [[1, y], [y, 1]] ⪰ 0  →  1
    let mut p = ConicProgram::new(vec![1.0]);
    let mut b = ConeBlock::new(BlockKind::Psd, 2, SymMatrix::identity(2));
    let mut a = SymMatrix::new();
    a.push(0, 1, -1.0);
    b.add_coefficient(0, a);
    p.add_block(b);
    out.push(Toy { name: "off-diagonal", program: p, optimum: 1.0 });

    // maximise t s.t. M − t·I ⪰ 0  →  λ_min(M) = 1 for M = [[2, 1], [1, 2]]
    let mut p = ConicProgram::new(vec![1.0]);
    let mut m = SymMatrix::new();
    m.push(0, 0, 2.0);
    m.push(1, 1, 2.0);
    m.push(0, 1, 1.0);
    let mut b = ConeBlock::new(BlockKind::Psd, 2, m);
    b.add_coefficient(0, SymMatrix::identity(2));
    p.add_block(b);
    out.push(Toy { name: "smallest-eigenvalue", program: p, optimum: 1.0 });

    // LP: maximise y₀ + y₁ s.t. y₀ ≤ 1, y₁ ≤ 2, y₀ + y₁ ≤ 2.5, y ≥ 0  →  2.5
    let mut p = ConicProgram::new(vec![1.0, 1.0]);
    let mut b = ConeBlock::new(BlockKind::Nonneg, 5, SymMatrix::diagonal(&[1.0, 2.0, 2.5, 0.0, 0.0]));
    b.add_coefficient(0, SymMatrix::diagonal(&[1.0, 0.0, 1.0, -1.0, 0.0]));
    b.add_coefficient(1, SymMatrix::diagonal(&[0.0, 1.0, 1.0, 0.0, -1.0]));
    p.add_block(b);
    out.push(Toy { name: "linear-program", program: p, optimum: 2.5 });

    // maximise y₀ s.t. y₀ + y₁ = 1, [[1, y₁], [y₁, 1]] ⪰ 0  →  y₁ = −1, y₀ = 2
    let mut p = ConicProgram::new(vec![1.0, 0.0]);
    let mut b = ConeBlock::new(BlockKind::Psd, 2, SymMatrix::identity(2));
    let mut a = SymMatrix::new();
    a.push(0, 1, -1.0);
    b.add_coefficient(1, a);
    p.add_block(b);
    p.equalities.push(LinearEquality { coefficients: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 });
    out.push(Toy { name: "equality", program: p, optimum: 2.0 });

    // trace-norm of a 2×2 symmetric matrix via its dual:
    // maximise ⟨N, Y⟩ s.t. I ± Y ⪰ 0, N = [[1, 2], [2, −1]]  →  ‖N‖₁ = 2√5
    let mut p = ConicProgram::new(vec![1.0, -1.0, 4.0]);
    for sign in [1.0, -1.0] {
        let mut b = ConeBlock::new(BlockKind::Psd, 2, SymMatrix::identity(2));
        b.add_coefficient(0, SymMatrix::diagonal(&[sign, 0.0]));
        b.add_coefficient(1, SymMatrix::diagonal(&[0.0, sign]));
        let mut off = SymMatrix::new();
        off.push(0, 1, sign);
        b.add_coefficient(2, off);
        p.add_block(b);
    }
    out.push(Toy { name: "trace-norm", program: p, optimum: 2.0 * 5f64.sqrt() });

    out
}

fn random_sym<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) * scale);
    (&g + g.transpose()) * 0.5
}

/// Random program with `y = 0` strictly feasible and a strictly feasible dual,
/// so the optimum is attained and finite.
pub fn random_program<R: Rng>(rng: &mut R) -> ConicProgram {
    let nvars = rng.gen_range(1..=4);
    let nblocks = rng.gen_range(1..=2);
    let mut prog = ConicProgram::new(vec![0.0; nvars]);
    let mut objective = vec![0.0; nvars];
    for k in 0..=nblocks {
        let (kind, size) = if k == nblocks {
            (BlockKind::Nonneg, rng.gen_range(1..=3))
        } else {
            (BlockKind::Psd, rng.gen_range(2..=4))
        };
        let diag_only = kind == BlockKind::Nonneg;
        let pick = |rng: &mut R, scale: f64| -> DMatrix<f64> {
            let m = random_sym(rng, size, scale);
            if diag_only {
                DMatrix::from_diagonal(&m.diagonal())
            } else {
                m
            }
        };
        let c = DMatrix::identity(size, size) + pick(rng, 0.3);
        let c = &c + DMatrix::identity(size, size) * (0.2 - min_eig(&c)).max(0.0);
        // strictly feasible dual point
        let x0 = if diag_only {
            DMatrix::from_diagonal(&DVector::from_fn(size, |_, _| rng.gen_range(0.2..1.0)))
        } else {
            let g = DMatrix::from_fn(size, size, |_, _| rng.gen_range(-1.0..1.0));
            &g * g.transpose() + DMatrix::identity(size, size) * 0.2
        };
        let mut block = ConeBlock::new(kind, size, SymMatrix::from_dense(&c, 0.0));
        for (j, obj) in objective.iter_mut().enumerate() {
            let a = pick(rng, 1.0);
            *obj += a.dot(&x0);
            block.add_coefficient(j, SymMatrix::from_dense(&a, 0.0));
        }
        prog.add_block(block);
    }
    prog.objective = objective;
    prog
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Most violated constraint at `y`: `(λ_min, cut normal a, rhs h)` with the cut
/// `aᵀy ≤ h` valid for every feasible point.
fn worst_constraint(p: &ConicProgram, y: &[f64]) -> (f64, DVector<f64>, f64) {
    let mut best = (f64::INFINITY, DVector::zeros(y.len()), 0.0);
    for b in &p.blocks {
        let s = b.slack(y);
        let eig = s.clone().symmetric_eigen();
        let (i, &lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if lam < best.0 {
            let v = eig.eigenvectors.column(i).into_owned();
            let c = b.constant.to_dense(b.size);
            let mut a = DVector::zeros(y.len());
            for (var, m) in &b.coefficients {
                a[*var] += (m.to_dense(b.size) * &v).dot(&v);
            }
            best = (lam, a, (&c * &v).dot(&v));
        }
    }
    best
}

pub struct OracleResult {
    pub value: f64,
    pub upper: f64,
    pub y: Vec<f64>,
    pub iterations: usize,
}

/// Central-cut ellipsoid method for `max bᵀy s.t. C_k − Σ y_j A_kj ⪰ 0`
/// (no equalities), started from the ball of radius `radius` around 0.
pub fn ellipsoid_oracle(p: &ConicProgram, radius: f64, tol: f64, max_iter: usize) -> OracleResult {
    let n = p.num_vars();
    let b = DVector::from_vec(p.objective.clone());
    let mut c = DVector::<f64>::zeros(n);
    let mut shape = DMatrix::<f64>::identity(n, n) * (radius * radius);
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut iterations = 0;
    let nf = n as f64;
    let mut upper = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let y: Vec<f64> = c.iter().copied().collect();
        let (lam, a, _) = worst_constraint(p, &y);
        // cut direction g: keep {z : gᵀz ≤ gᵀc}
        let g = if lam < 0.0 {
            a
        } else {
            let val = b.dot(&c);
            if val > best.0 {
                best = (val, y.clone());
            }
            -&b
        };
        upper = upper.min(b.dot(&c) + (b.dot(&(&shape * &b))).max(0.0).sqrt());
        if upper - best.0 < tol || shape.trace() < 1e-24 {
            break;
        }
        if n == 1 {
            // interval bisection
            let half = shape[(0, 0)].sqrt();
            let (lo, hi) = if g[0] > 0.0 { (c[0] - half, c[0]) } else { (c[0], c[0] + half) };
            c[0] = 0.5 * (lo + hi);
            shape[(0, 0)] = (0.5 * (hi - lo)).powi(2);
            continue;
        }
        let pg = &shape * &g;
        let gpg = g.dot(&pg);
        if gpg <= 0.0 {
            break;
        }
        let bt = pg / gpg.sqrt();
        c -= &bt * (1.0 / (nf + 1.0));
        shape = (&shape - (&bt * bt.transpose()) * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
        shape = (&shape + shape.transpose()) * 0.5;
    }
    OracleResult { value: best.0, upper, y: best.1, iterations }
}

/// Random mixed two-mode state of the given rank.
pub fn random_state(seed: u64, n_max: usize, rank: usize) -> TruncatedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = HilbertSpec::two_mode(n_max, n_max);
    let d = space.dim();
    let g = DMatrix::from_fn(d, rank, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    TruncatedState::from_unnormalized(space, &g * g.adjoint()).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct SoundnessCase {
    pub seed: u64,
    pub n_max: usize,
    pub rank: usize,
    pub amplitude: f64,
    pub reflectivity: f64,
    pub efficiency: f64,
    pub epsilon: f64,
}

impl SoundnessCase {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            seed: rng.gen(),
            n_max: rng.gen_range(1..=3),
            rank: rng.gen_range(1..=3),
            amplitude: rng.gen_range(0.5..2.0),
            reflectivity: rng.gen_range(0.3..0.9),
            efficiency: rng.gen_range(0.1..0.9),
            epsilon: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.05) },
        }
    }
}

/// Checks soundness, witness verification, POVM completeness and nested
/// monotonicity for one configuration.
pub fn check_soundness(case: &SoundnessCase) -> Result<(), String> {
    let rho = random_state(case.seed, case.n_max, case.rank);
    let exact = log_negativity(&rho).map_err(|e| e.to_string())?;
    let det = DetectorConfig::unbalanced(case.amplitude, case.reflectivity, case.efficiency);
    let phases = [0.0, std::f64::consts::FRAC_PI_2];
    for &phase in &phases {
        let povm = homodyne_povm(&det.with_phase(phase), case.n_max).map_err(|e| e.to_string())?;
        let deficit = povm.completeness_deficit();
        if deficit > TOL_COMPLETE {
            return Err(format!("completeness deficit {deficit:e}"));
        }
    }

    let outcomes = [0usize, 1, 2];
    let local = local_elements(&det, &outcomes, &phases, case.n_max).map_err(|e| e.to_string())?;
    let full = MeasurementSet::simulate(tensor_measurements(&local, &local), &rho).map_err(|e| e.to_string())?;
    let solve = |ms: &MeasurementSet, eps: f64| {
        if eps > 0.0 {
            lower_bound_negativity_robust(ms, eps)
        } else {
            lower_bound_negativity(ms)
        }
        .map_err(|e| e.to_string())
    };
    let check = |r: &negbound_core::bound::BoundResult, ms: &MeasurementSet, what: &str| -> Result<(), String> {
        if r.lower_bound > exact + 1e-6 {
            return Err(format!("{what}: bound {} exceeds exact {}", r.lower_bound, exact));
        }
        let w = verify_witness(r, ms).map_err(|e| e.to_string())?;
        if !w.passed {
            return Err(format!("{what}: witness rejected {w:?}"));
        }
        Ok(())
    };

    let robust = solve(&full, case.epsilon)?;
    check(&robust, &full, "full set")?;

    // first phase setting only: a subset of the operators above
    let per_mode = local.len();
    let subset: Vec<usize> = (1..=outcomes.len())
        .flat_map(|j| (1..=outcomes.len()).map(move |k| joint_index(j, k, per_mode)))
        .collect();
    let nested = full.subset(&subset).map_err(|e| e.to_string())?;
    let small = solve(&nested, 0.0)?;
    check(&small, &nested, "subset")?;
    let large = if case.epsilon > 0.0 { solve(&full, 0.0)? } else { robust };
    if large.lower_bound < small.lower_bound - 1e-6 {
        return Err(format!("nested monotonicity: subset {} full {}", small.lower_bound, large.lower_bound));
    }
    Ok(())
}
