//! Infeasible-start primal-dual path following with Nesterov–Todd scaling and
//! Mehrotra predictor-corrector steps.

use nalgebra::{Cholesky, DVector, SymmetricEigen, SVD};

use super::{BlockKind, ConeBlock, ConicProgram, SdpOptions, SdpSolution, SolverStatus, SymMatrix};
use crate::error::Result;
use crate::linalg::RMatrix;

#[derive(Debug, Clone)]
enum Block {
    Psd(RMatrix),
    Lp(DVector<f64>),
}

impl Block {
    fn zeros_like(kind: BlockKind, n: usize) -> Block {
        match kind {
            BlockKind::Psd => Block::Psd(RMatrix::zeros(n, n)),
            BlockKind::Nonneg => Block::Lp(DVector::zeros(n)),
        }
    }

    fn scaled_identity(kind: BlockKind, n: usize, v: f64) -> Block {
        match kind {
            BlockKind::Psd => Block::Psd(RMatrix::identity(n, n) * v),
            BlockKind::Nonneg => Block::Lp(DVector::from_element(n, v)),
        }
    }

    fn from_sym(kind: BlockKind, n: usize, a: &SymMatrix) -> Block {
        match kind {
            BlockKind::Psd => Block::Psd(a.to_dense(n)),
            BlockKind::Nonneg => {
                let mut d = DVector::zeros(n);
                for &(i, _, v) in &a.entries {
                    d[i] += v;
                }
                Block::Lp(d)
            }
        }
    }

    fn add_sym(&mut self, a: &SymMatrix, scale: f64) {
        match self {
            Block::Psd(m) => a.add_to(m, scale),
            Block::Lp(d) => {
                for &(i, _, v) in &a.entries {
                    d[i] += scale * v;
                }
            }
        }
    }

    fn sym_dot(&self, a: &SymMatrix) -> f64 {
        match self {
            Block::Psd(m) => a.dot(m),
            Block::Lp(d) => a.dot_diag(d),
        }
    }

    fn dot(&self, other: &Block) -> f64 {
        match (self, other) {
            (Block::Psd(a), Block::Psd(b)) => a.dot(b),
            (Block::Lp(a), Block::Lp(b)) => a.dot(b),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Block) {
        match (self, other) {
            (Block::Psd(a), Block::Psd(b)) => *a += b * alpha,
            (Block::Lp(a), Block::Lp(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn sub(&self, other: &Block) -> Block {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Block::Psd(a) => a.norm_squared(),
            Block::Lp(a) => a.norm_squared(),
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Block::Psd(a) => a.amax(),
            Block::Lp(a) => a.amax(),
        }
    }

    fn into_matrix(self) -> RMatrix {
        match self {
            Block::Psd(a) => a,
            Block::Lp(d) => RMatrix::from_column_slice(d.len(), 1, d.as_slice()),
        }
    }
}

/// NT scaling point of one block: `W = G Gᵀ`, `G⁻¹ X G⁻ᵀ = Gᵀ S G = diag(d)`.
enum Scaling {
    Psd { g: RMatrix, g_inv: RMatrix, w: RMatrix, d: DVector<f64> },
    Lp { w: DVector<f64>, d: DVector<f64> },
}

fn symmetrize(m: &mut RMatrix) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn nt_scaling(x: &Block, s: &Block) -> Option<Scaling> {
    match (x, s) {
        (Block::Psd(x), Block::Psd(s)) => {
            let lx = Cholesky::new(x.clone())?.l();
            let ls = Cholesky::new(s.clone())?.l();
            let svd = SVD::new(ls.transpose() * &lx, true, true);
            let v = svd.v_t?.transpose();
            let sig = svd.singular_values;
            if sig.iter().any(|&x| !(x > 0.0)) {
                return None;
            }
            let inv_sqrt = sig.map(|x| 1.0 / x.sqrt());
            let g = &lx * &v * RMatrix::from_diagonal(&inv_sqrt);
            let lx_inv = lx.clone().solve_lower_triangular(&RMatrix::identity(lx.nrows(), lx.nrows()))?;
            let g_inv = RMatrix::from_diagonal(&sig.map(f64::sqrt)) * v.transpose() * lx_inv;
            let mut w = &g * g.transpose();
            symmetrize(&mut w);
            Some(Scaling::Psd { g, g_inv, w, d: sig })
        }
        (Block::Lp(x), Block::Lp(s)) => {
            if x.iter().chain(s.iter()).any(|&v| !(v > 0.0)) {
                return None;
            }
            let w = x.zip_map(s, |a, b| (a / b).sqrt());
            let d = x.zip_map(s, |a, b| (a * b).sqrt());
            Some(Scaling::Lp { w, d })
        }
        _ => unreachable!(),
    }
}

impl Scaling {
    /// `W M W`.
    fn sandwich(&self, m: &Block) -> Block {
        match (self, m) {
            (Scaling::Psd { w, .. }, Block::Psd(m)) => {
                let mut t = w * m * w;
                symmetrize(&mut t);
                Block::Psd(t)
            }
            (Scaling::Lp { w, .. }, Block::Lp(m)) => Block::Lp(m.component_mul(w).component_mul(w)),
            _ => unreachable!(),
        }
    }

    fn sandwich_sym(&self, a: &SymMatrix, n: usize) -> Block {
        match self {
            Scaling::Psd { w, .. } => {
                if a.nnz() * 2 > n {
                    self.sandwich(&Block::Psd(a.to_dense(n)))
                } else {
                    let mut t = RMatrix::zeros(n, n);
                    for &(i, j, v) in &a.entries {
                        let wi = w.column(i);
                        let wj = w.column(j);
                        t.ger(v, &wi, &wj, 1.0);
                        if i != j {
                            t.ger(v, &wj, &wi, 1.0);
                        }
                    }
                    Block::Psd(t)
                }
            }
            Scaling::Lp { w, .. } => {
                let mut d = DVector::zeros(n);
                for &(i, _, v) in &a.entries {
                    d[i] += v * w[i] * w[i];
                }
                Block::Lp(d)
            }
        }
    }

    /// Scaled primal and dual directions `G⁻¹ dX G⁻ᵀ`, `Gᵀ dS G`.
    fn scale_pair(&self, dx: &Block, ds: &Block) -> (Block, Block) {
        match (self, dx, ds) {
            (Scaling::Psd { g, g_inv, .. }, Block::Psd(dx), Block::Psd(ds)) => {
                let mut a = g_inv * dx * g_inv.transpose();
                let mut b = g.transpose() * ds * g;
                symmetrize(&mut a);
                symmetrize(&mut b);
                (Block::Psd(a), Block::Psd(b))
            }
            (Scaling::Lp { w, .. }, Block::Lp(dx), Block::Lp(ds)) => {
                (Block::Lp(dx.component_div(w)), Block::Lp(ds.component_mul(w)))
            }
            _ => unreachable!(),
        }
    }

    /// Complementarity right-hand side `R_c` for target `σμ` and second-order
    /// correction from the scaled predictor directions (if any).
    fn complementarity_rhs(&self, sigma_mu: f64, corr: Option<(&Block, &Block)>) -> Block {
        match self {
            Scaling::Psd { g, d, .. } => {
                let n = d.len();
                let mut rc = RMatrix::zeros(n, n);
                if let Some((Block::Psd(a), Block::Psd(b))) = corr {
                    rc = -(a * b + b * a);
                }
                for i in 0..n {
                    rc[(i, i)] += 2.0 * sigma_mu - 2.0 * d[i] * d[i];
                }
                for i in 0..n {
                    for j in 0..n {
                        rc[(i, j)] /= d[i] + d[j];
                    }
                }
                let mut out = g * rc * g.transpose();
                symmetrize(&mut out);
                Block::Psd(out)
            }
            Scaling::Lp { w, d } => {
                let mut rc = d.map(|di| (sigma_mu - di * di) / di);
                if let Some((Block::Lp(a), Block::Lp(b))) = corr {
                    for k in 0..rc.len() {
                        rc[k] -= a[k] * b[k] / d[k];
                    }
                }
                Block::Lp(rc.component_mul(w))
            }
        }
    }

    /// Largest step keeping `D + α dZ̃` in the cone (scaled coordinates).
    fn max_step(&self, scaled_dir: &Block) -> f64 {
        let lmin = match (self, scaled_dir) {
            (Scaling::Psd { d, .. }, Block::Psd(dz)) => {
                let n = d.len();
                let dinv = d.map(|x| 1.0 / x.sqrt());
                let mut t = RMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        t[(i, j)] = dz[(i, j)] * dinv[i] * dinv[j];
                    }
                }
                symmetrize(&mut t);
                SymmetricEigen::new(t).eigenvalues.min()
            }
            (Scaling::Lp { d, .. }, Block::Lp(dz)) => dz.zip_map(d, |a, b| a / b).min(),
            _ => unreachable!(),
        };
        if lmin < 0.0 {
            -1.0 / lmin
        } else {
            f64::INFINITY
        }
    }
}

/// Flattened problem data used by the iterations.
struct Problem<'a> {
    m: usize,
    kinds: Vec<BlockKind>,
    sizes: Vec<usize>,
    c: Vec<Block>,
    /// Per block: `(variable, coefficient)` pairs.
    by_block: Vec<Vec<(usize, &'a SymMatrix)>>,
}

impl<'a> Problem<'a> {
    fn new(prog: &'a ConicProgram) -> Self {
        let kinds: Vec<_> = prog.blocks.iter().map(|b| b.kind).collect();
        let sizes: Vec<_> = prog.blocks.iter().map(|b| b.size).collect();
        let c = prog.blocks.iter().map(|b| Block::from_sym(b.kind, b.size, &b.constant)).collect();
        let by_block = prog
            .blocks
            .iter()
            .map(|b: &ConeBlock| b.coefficients.iter().map(|(v, a)| (*v, a)).collect())
            .collect();
        Self { m: prog.num_vars(), kinds, sizes, c, by_block }
    }

    /// `𝒜(X)_j = Σ_k ⟨A_{k,j}, X_k⟩`.
    fn apply(&self, x: &[Block]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (k, vars) in self.by_block.iter().enumerate() {
            for (v, a) in vars {
                out[*v] += x[k].sym_dot(a);
            }
        }
        out
    }

    /// `𝒜*(y) = Σ_j y_j A_{k,j}` per block.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<Block> {
        self.by_block
            .iter()
            .enumerate()
            .map(|(k, vars)| {
                let mut b = Block::zeros_like(self.kinds[k], self.sizes[k]);
                for (v, a) in vars {
                    b.add_sym(a, y[*v]);
                }
                b
            })
            .collect()
    }

    fn schur(&self, scalings: &[Scaling]) -> RMatrix {
        let mut mat = RMatrix::zeros(self.m, self.m);
        for (k, vars) in self.by_block.iter().enumerate() {
            for (jj, (vj, aj)) in vars.iter().enumerate() {
                let t = scalings[k].sandwich_sym(aj, self.sizes[k]);
                for (vi, ai) in &vars[..=jj] {
                    let val = t.sym_dot(ai);
                    mat[(*vi, *vj)] += val;
                    if vi != vj {
                        mat[(*vj, *vi)] += val;
                    }
                }
            }
        }
        mat
    }
}

fn dot_all(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm_all(a: &[Block]) -> f64 {
    a.iter().map(Block::norm_sq).sum::<f64>().sqrt()
}

/// Cholesky of the Schur complement with increasing diagonal regularisation.
fn factor(mut mat: RMatrix) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = (0..mat.nrows()).map(|i| mat[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        if let Some(ch) = Cholesky::new(mat.clone()) {
            return Some(ch);
        }
        let next = if ridge == 0.0 { 1e-14 * scale } else { ridge * 10.0 };
        for i in 0..mat.nrows() {
            mat[(i, i)] += next - ridge;
        }
        ridge = next;
    }
    None
}

struct Iterate {
    x: Vec<Block>,
    y: DVector<f64>,
    s: Vec<Block>,
}

struct Residuals {
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
    rp: DVector<f64>,
    rd: Vec<Block>,
}

fn residuals(p: &Problem, it: &Iterate, b: &DVector<f64>, norm_b: f64, norm_c: f64) -> Residuals {
    let pobj = dot_all(&p.c, &it.x);
    let dobj = b.dot(&it.y);
    let rp = b - p.apply(&it.x);
    let aty = p.adjoint(&it.y);
    let rd: Vec<Block> = p.c.iter().zip(&aty).zip(&it.s).map(|((c, a), s)| c.sub(a).sub(s)).collect();
    let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let pinf = rp.norm() / (1.0 + norm_b);
    let dinf = norm_all(&rd) / (1.0 + norm_c);
    Residuals { pobj, dobj, rel_gap, pinf, dinf, rp, rd }
}

/// Solves a block-diagonal conic program. Linear equalities are eliminated by a
/// null-space substitution before the interior-point iterations.
pub fn solve(program: &ConicProgram, options: &SdpOptions) -> Result<SdpSolution> {
    program.validate()?;
    if program.equalities.is_empty() {
        return Ok(solve_inequality_form(program, options));
    }
    let m = program.num_vars();
    let p = program.equalities.len();
    let mut e = RMatrix::zeros(p, m);
    let mut f = DVector::zeros(p);
    for (r, eq) in program.equalities.iter().enumerate() {
        for &(v, a) in &eq.coefficients {
            e[(r, v)] += a;
        }
        f[r] = eq.rhs;
    }
    let svd = SVD::new(e.clone(), true, true);
    let (u, vt) = (svd.u.clone().unwrap(), svd.v_t.clone().unwrap());
    let smax = svd.singular_values.max();
    let tol = smax.max(1.0) * 1e-12 * (m.max(p) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let mut y0 = DVector::zeros(m);
    for r in 0..rank {
        let coef = u.column(r).dot(&f) / svd.singular_values[r];
        y0 += vt.row(r).transpose() * coef;
    }
    if (&e * &y0 - &f).norm() > 1e-9 * (1.0 + f.norm()) {
        return Ok(infeasible_solution(program));
    }
    // full V from a complete SVD of Eᵀ E to obtain the null space
    let full = SymmetricEigen::new(e.transpose() * &e);
    let mut null_cols: Vec<DVector<f64>> = Vec::new();
    for (i, &lam) in full.eigenvalues.iter().enumerate() {
        if lam.abs() <= tol * smax.max(1.0) {
            null_cols.push(full.eigenvectors.column(i).into_owned());
        }
    }
    let q = null_cols.len();
    let n = RMatrix::from_fn(m, q, |r, c| null_cols[c][r]);
    let b = DVector::from_column_slice(&program.objective);
    let mut reduced = ConicProgram::new((n.transpose() * &b).iter().copied().collect());
    for blk in &program.blocks {
        let mut cst = blk.constant.to_dense(blk.size);
        for (v, a) in &blk.coefficients {
            a.add_to(&mut cst, -y0[*v]);
        }
        let mut nb = ConeBlock::new(blk.kind, blk.size, SymMatrix::from_dense(&cst, 0.0));
        for k in 0..q {
            let mut acc = RMatrix::zeros(blk.size, blk.size);
            for (v, a) in &blk.coefficients {
                a.add_to(&mut acc, n[(*v, k)]);
            }
            nb.add_coefficient(k, SymMatrix::from_dense(&acc, 1e-15));
        }
        reduced.add_block(nb);
    }
    let mut sol = solve_inequality_form(&reduced, options);
    let z = DVector::from_column_slice(&sol.y_star);
    let y = &y0 + &n * z;
    sol.y_star = y.iter().copied().collect();
    sol.objective_value = program.objective_value(&sol.y_star);
    sol.duality_gap = sol.primal_objective - sol.objective_value;
    Ok(sol)
}

fn infeasible_solution(program: &ConicProgram) -> SdpSolution {
    SdpSolution {
        status: SolverStatus::Infeasible,
        y_star: vec![0.0; program.num_vars()],
        objective_value: f64::NAN,
        primal_objective: f64::NAN,
        dual_certificate: Vec::new(),
        duality_gap: f64::NAN,
        relative_gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        iterations: 0,
    }
}

/// Rescales every variable so its constraint matrices have unit Frobenius norm,
/// solves, and maps the solution back.
fn solve_inequality_form(program: &ConicProgram, opts: &SdpOptions) -> SdpSolution {
    let m = program.num_vars();
    let mut norms = vec![0.0f64; m];
    for blk in &program.blocks {
        for (v, a) in &blk.coefficients {
            norms[*v] += a.frobenius_norm().powi(2);
        }
    }
    let scale: Vec<f64> = norms.iter().map(|n| if *n > 0.0 { n.sqrt() } else { 1.0 }).collect();
    let mut scaled = ConicProgram::new(program.objective.iter().zip(&scale).map(|(b, s)| b / s).collect());
    for blk in &program.blocks {
        let mut nb = ConeBlock::new(blk.kind, blk.size, blk.constant.clone());
        for (v, a) in &blk.coefficients {
            let mut a = a.clone();
            a.entries.iter_mut().for_each(|e| e.2 /= scale[*v]);
            nb.add_coefficient(*v, a);
        }
        scaled.add_block(nb);
    }
    let mut sol = solve_scaled(&scaled, opts);
    for (y, s) in sol.y_star.iter_mut().zip(&scale) {
        *y /= s;
    }
    sol
}

fn solve_scaled(program: &ConicProgram, opts: &SdpOptions) -> SdpSolution {
    let p = Problem::new(program);
    let b = DVector::from_column_slice(&program.objective);
    let norm_b = b.norm();
    let norm_c = norm_all(&p.c);

    // standard infeasible starting point, one scale per block
    let mut x0 = Vec::new();
    let mut s0 = Vec::new();
    for (k, blk) in program.blocks.iter().enumerate() {
        let n = blk.size as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut zeta = 10f64.max(n.sqrt()).max(blk.constant.frobenius_norm());
        for (v, a) in &blk.coefficients {
            let na = a.frobenius_norm();
            xi = xi.max(n * (1.0 + b[*v].abs()) / (1.0 + na));
            zeta = zeta.max(na);
        }
        x0.push(Block::scaled_identity(p.kinds[k], p.sizes[k], xi));
        s0.push(Block::scaled_identity(p.kinds[k], p.sizes[k], zeta));
    }
    let mut it = Iterate { x: x0, y: DVector::zeros(p.m), s: s0 };
    let n_total: f64 = p.sizes.iter().sum::<usize>() as f64;

    let mut best: Option<(f64, SdpSolution)> = None;
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let mut stalls = 0;

    let snapshot = |it: &Iterate, r: &Residuals, status: SolverStatus, iterations: usize| SdpSolution {
        status,
        y_star: it.y.iter().copied().collect(),
        objective_value: r.dobj,
        primal_objective: r.pobj,
        dual_certificate: it.x.iter().cloned().map(Block::into_matrix).collect(),
        duality_gap: r.pobj - r.dobj,
        relative_gap: r.rel_gap,
        primal_residual: r.pinf,
        dual_residual: r.dinf,
        iterations,
    };

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let r = residuals(&p, &it, &b, norm_b, norm_c);
        let merit = r.rel_gap.max(r.pinf).max(r.dinf);
        if !merit.is_finite() {
            status = SolverStatus::NumericalFailure;
            break;
        }
        if best.as_ref().map_or(true, |(bm, _)| merit < *bm) {
            best = Some((merit, snapshot(&it, &r, SolverStatus::MaxIterations, iter)));
        }
        if r.rel_gap < opts.gap_tol && r.pinf < opts.feas_tol && r.dinf < opts.feas_tol {
            status = SolverStatus::Optimal;
            break;
        }
        let size_x = it.x.iter().map(Block::max_abs).fold(0.0, f64::max);
        if it.y.amax() > opts.divergence_limit || size_x > opts.divergence_limit {
            status = SolverStatus::Infeasible;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let mu = dot_all(&it.x, &it.s) / n_total;
        let scalings: Option<Vec<Scaling>> = it.x.iter().zip(&it.s).map(|(x, s)| nt_scaling(x, s)).collect();
        let Some(scalings) = scalings else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let Some(chol) = factor(p.schur(&scalings)) else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let w_rd: Vec<Block> = scalings.iter().zip(&r.rd).map(|(sc, rd)| sc.sandwich(rd)).collect();
        let base_rhs = &r.rp + p.apply(&w_rd);

        let direction = |rc: &[Block]| -> (DVector<f64>, Vec<Block>, Vec<Block>) {
            let rhs = &base_rhs - p.apply(rc);
            let dy = chol.solve(&rhs);
            let aty = p.adjoint(&dy);
            let ds: Vec<Block> = r.rd.iter().zip(&aty).map(|(rd, a)| rd.sub(a)).collect();
            let dx: Vec<Block> =
                rc.iter().zip(&scalings).zip(&ds).map(|((rc, sc), ds)| rc.sub(&sc.sandwich(ds))).collect();
            (dy, dx, ds)
        };
        let steps = |dx: &[Block], ds: &[Block]| -> (f64, f64, Vec<(Block, Block)>) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            let mut scaled = Vec::with_capacity(dx.len());
            for ((sc, dx), ds) in scalings.iter().zip(dx).zip(ds) {
                let (tx, ts) = sc.scale_pair(dx, ds);
                ap = ap.min(sc.max_step(&tx));
                ad = ad.min(sc.max_step(&ts));
                scaled.push((tx, ts));
            }
            (ap, ad, scaled)
        };

        // predictor
        let rc_aff: Vec<Block> = scalings.iter().map(|sc| sc.complementarity_rhs(0.0, None)).collect();
        let (_, dx_a, ds_a) = direction(&rc_aff);
        let (ap_a, ad_a, scaled_a) = steps(&dx_a, &ds_a);
        let ap_a = ap_a.min(1.0);
        let ad_a = ad_a.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..it.x.len() {
            let mut xa = it.x[k].clone();
            xa.axpy(ap_a, &dx_a[k]);
            let mut sa = it.s[k].clone();
            sa.axpy(ad_a, &ds_a[k]);
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= n_total;
        let expo = 3.0;
        let sigma = (mu_aff / mu).max(0.0).powf(expo).min(1.0);

        // corrector
        let rc: Vec<Block> = scalings
            .iter()
            .zip(&scaled_a)
            .map(|(sc, (tx, ts))| sc.complementarity_rhs(sigma * mu, Some((tx, ts))))
            .collect();
        let (dy, dx, ds) = direction(&rc);
        let (ap, ad, _) = steps(&dx, &ds);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) {
            status = SolverStatus::NumericalFailure;
            break;
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls > 3 {
                status = SolverStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
        for k in 0..it.x.len() {
            it.x[k].axpy(ap, &dx[k]);
            it.s[k].axpy(ad, &ds[k]);
        }
        it.y.axpy(ad, &dy, 1.0);
    }

    let r = residuals(&p, &it, &b, norm_b, norm_c);
    match status {
        SolverStatus::Optimal | SolverStatus::Infeasible => snapshot(&it, &r, status, iterations),
        _ => {
            let (_, mut sol) = best.unwrap_or_else(|| (0.0, snapshot(&it, &r, status, iterations)));
            sol.status = status;
            sol.iterations = iterations;
            sol
        }
    }
}

