//! Primal-dual interior-point method with Nesterov–Todd scaling and a
//! Mehrotra predictor-corrector, working on dense Hermitian blocks.
//!
//! Internally every problem is brought to the standard pair
//!
//! ```text
//! (P) min ⟨C, X⟩  s.t. A(X) = b, X ⪰ 0
//! (D) max bᵀy     s.t. Z = C − Aᵀy ⪰ 0
//! ```
//!
//! after row normalization and removal of linearly dependent rows. The core
//! iteration is generic over the scalar field so the same code runs on the
//! complex blocks directly or on their real symmetric embedding.

use std::collections::HashMap;

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::{SdpProblem, SdpSolution, Sense, SolveStatus, SparseHermitian};
use crate::error::Result;
use crate::tensor::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Embedding {
    /// Iterate on the complex Hermitian blocks.
    Complex,
    /// Iterate on [[Re, −Im], [Im, Re]] real symmetric blocks of twice the side.
    RealSymmetric,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub embedding: Embedding,
    /// fraction of the step to the boundary of the cone
    pub step_factor: f64,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            gap_tol: 1e-9,
            max_iter: 200,
            embedding: Embedding::Complex,
            step_factor: 0.98,
            verbose: false,
        }
    }
}

/// Scalar fields the core iteration runs on.
pub(crate) trait Field: ComplexField<RealField = f64> + Copy {}

impl Field for f64 {}

impl Field for C64 {}

#[inline]
fn re_dot<T: Field>(a: T, b: T) -> f64 {
    (a.conjugate() * b).real()
}

fn inner<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| re_dot(*x, *y)).sum()
}

fn herm<T: Field>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    for c in 0..n {
        for r in c..n {
            let v = (m[(r, c)] + m[(c, r)].conjugate()) * T::from_real(0.5);
            m[(r, c)] = v;
            m[(c, r)] = v.conjugate();
        }
    }
}

type Entries<T> = Vec<(usize, usize, T)>;

struct Core<T: Field> {
    sides: Vec<usize>,
    c: Vec<DMatrix<T>>,
    /// row -> (block, entries); at most one term per block
    rows: Vec<Vec<(usize, Entries<T>)>>,
    b: DVector<f64>,
    /// block -> (row, term index)
    by_block: Vec<Vec<(usize, usize)>>,
    /// complex sides when iterating on a real embedding
    embedded: Option<Vec<usize>>,
}

struct CoreResult<T: Field> {
    status: SolveStatus,
    x: Vec<DMatrix<T>>,
    z: Vec<DMatrix<T>>,
    y: DVector<f64>,
    iterations: usize,
}

impl<T: Field> Core<T> {
    fn new(
        sides: Vec<usize>,
        c: Vec<DMatrix<T>>,
        rows: Vec<Vec<(usize, Entries<T>)>>,
        b: DVector<f64>,
        embedded: Option<Vec<usize>>,
    ) -> Self {
        let mut by_block = vec![Vec::new(); sides.len()];
        for (i, row) in rows.iter().enumerate() {
            for (t, (blk, _)) in row.iter().enumerate() {
                by_block[*blk].push((i, t));
            }
        }
        Self {
            sides,
            c,
            rows,
            b,
            by_block,
            embedded,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn a_op(&self, x: &[DMatrix<T>]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|(blk, ent)| {
                        let xb = &x[*blk];
                        ent.iter()
                            .map(|&(r, c, a)| re_dot(a, xb[(r, c)]))
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            }),
        )
    }

    fn at_op(&self, y: &DVector<f64>) -> Vec<DMatrix<T>> {
        let mut out: Vec<DMatrix<T>> = self.sides.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let yi = T::from_real(y[i]);
            if y[i] == 0.0 {
                continue;
            }
            for (blk, ent) in row {
                let ob = &mut out[*blk];
                for &(r, c, a) in ent {
                    ob[(r, c)] += a * yi;
                }
            }
        }
        out
    }

    /// Restores the [[P, −Q], [Q, P]] pattern destroyed by rounding.
    fn project(&self, m: &mut [DMatrix<T>]) {
        let Some(cs) = &self.embedded else { return };
        for (blk, &n) in m.iter_mut().zip(cs) {
            for c in 0..n {
                for r in 0..n {
                    let p = (blk[(r, c)] + blk[(r + n, c + n)]) * T::from_real(0.5);
                    let q = (blk[(r + n, c)] - blk[(r, c + n)]) * T::from_real(0.5);
                    blk[(r, c)] = p;
                    blk[(r + n, c + n)] = p;
                    blk[(r + n, c)] = q;
                    blk[(r, c + n)] = -q;
                }
            }
        }
    }

    /// M_ij = Σ_b ⟨A_ib, W_b A_jb W_b⟩.
    fn schur(&self, w: &[DMatrix<T>]) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::<f64>::zeros(m, m);
        for (blk, list) in self.by_block.iter().enumerate() {
            let n = self.sides[blk];
            let wb = &w[blk];
            let mut p = DMatrix::<T>::zeros(n, n);
            for (pos, &(i, ti)) in list.iter().enumerate() {
                let ai = &self.rows[i][ti].1;
                wa_w(wb, ai, n, &mut p);
                for &(j, tj) in &list[pos..] {
                    let aj = &self.rows[j][tj].1;
                    let v: f64 = aj.iter().map(|&(r, c, a)| re_dot(a, p[(r, c)])).sum();
                    out[(i, j)] += v;
                    if i != j {
                        out[(j, i)] += v;
                    }
                }
            }
        }
        out
    }

    fn initial_point(&self) -> (Vec<DMatrix<T>>, Vec<DMatrix<T>>) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for (blk, &n) in self.sides.iter().enumerate() {
            let nf = n as f64;
            let mut xi = 10f64.max(nf.sqrt());
            let mut eta = 10f64.max(nf.sqrt()).max(self.c[blk].norm());
            for &(i, t) in &self.by_block[blk] {
                let an = self.rows[i][t]
                    .1
                    .iter()
                    .map(|e| e.2.modulus_squared())
                    .sum::<f64>()
                    .sqrt();
                xi = xi.max(nf * (1.0 + self.b[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
            xs.push(DMatrix::<T>::identity(n, n) * T::from_real(xi));
            zs.push(DMatrix::<T>::identity(n, n) * T::from_real(eta));
        }
        (xs, zs)
    }

    fn solve(&self, opts: &SolveOptions) -> CoreResult<T> {
        let m = self.m();
        let nb = self.sides.len();
        let n_tot: f64 = self.sides.iter().sum::<usize>() as f64;
        let (mut x, mut z) = self.initial_point();
        let mut y = DVector::<f64>::zeros(m);
        let b_norm = self.b.norm();
        let c_norm = self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        let mut status = SolveStatus::NumericalFailure;
        let mut iterations = 0;
        let mut stalls = 0;

        for iter in 0..=opts.max_iter {
            iterations = iter;
            let ax = self.a_op(&x);
            let rp = &self.b - &ax;
            let aty = self.at_op(&y);
            let rd: Vec<DMatrix<T>> = (0..nb).map(|k| &self.c[k] - &aty[k] - &z[k]).collect();
            let pobj: f64 = (0..nb).map(|k| inner(&self.c[k], &x[k])).sum();
            let dobj = self.b.dot(&y);
            let xz: f64 = (0..nb).map(|k| inner(&x[k], &z[k])).sum();
            debug_assert!(xz >= -1e-10 * (1.0 + pobj.abs() + dobj.abs()));
            let rd_norm = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = rd_norm / (1.0 + c_norm);
            let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            if opts.verbose {
                eprintln!(
                    "it {iter:3} pobj {pobj:+.10e} dobj {dobj:+.10e} gap {relgap:.2e} pinf {pinf:.2e} dinf {dinf:.2e} mu {:.2e}",
                    xz / n_tot
                );
            }
            if pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol {
                status = SolveStatus::Optimal;
                break;
            }
            // Certificates: (y, Z) with Aᵀy + Z ≈ 0, bᵀy > 0 proves (P) empty;
            // X with A(X) ≈ 0, ⟨C, X⟩ < 0 proves (P) unbounded.
            let cert_d: f64 = (0..nb)
                .map(|k| (&aty[k] + &z[k]).norm_squared())
                .sum::<f64>()
                .sqrt();
            if dobj > 0.0 && cert_d < 1e-8 * dobj {
                status = SolveStatus::Infeasible;
                break;
            }
            if pobj < 0.0 && ax.norm() < 1e-8 * -pobj {
                status = SolveStatus::Unbounded;
                break;
            }
            if iter == opts.max_iter {
                break;
            }

            let Some(nt) = (0..nb)
                .map(|k| NtScaling::new(&x[k], &z[k]))
                .collect::<Option<Vec<_>>>()
            else {
                break;
            };
            let mu = xz / n_tot;
            let w: Vec<DMatrix<T>> = nt.iter().map(|s| s.w.clone()).collect();
            let schur = self.schur(&w);
            let Some(solver) = SchurSolver::new(schur) else {
                break;
            };
            let wrdw: Vec<DMatrix<T>> = (0..nb).map(|k| &w[k] * &rd[k] * &w[k]).collect();

            let direction =
                |rc: Vec<DMatrix<T>>| -> (Vec<DMatrix<T>>, DVector<f64>, Vec<DMatrix<T>>) {
                    let tmp: Vec<DMatrix<T>> = (0..nb).map(|k| &rc[k] - &wrdw[k]).collect();
                    let h = &rp - self.a_op(&tmp);
                    let dy = solver.solve(&h);
                    let atdy = self.at_op(&dy);
                    let mut dz: Vec<DMatrix<T>> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
                    let mut dx: Vec<DMatrix<T>> =
                        (0..nb).map(|k| &rc[k] - &w[k] * &dz[k] * &w[k]).collect();
                    for k in 0..nb {
                        herm(&mut dx[k]);
                        herm(&mut dz[k]);
                    }
                    (dx, dy, dz)
                };

            // predictor
            let rc: Vec<DMatrix<T>> = x.iter().map(|xk| -xk).collect();
            let (dx, _, dz) = direction(rc);
            let (ap, ad, sx, sz) = step_lengths(&nt, &dx, &dz);
            let mu_aff: f64 = (0..nb)
                .map(|k| {
                    inner(
                        &(&x[k] + &dx[k] * T::from_real(ap)),
                        &(&z[k] + &dz[k] * T::from_real(ad)),
                    )
                })
                .sum::<f64>()
                / n_tot;
            let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
            let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

            // corrector
            let rc: Vec<DMatrix<T>> = (0..nb)
                .map(|k| nt[k].corrector_rhs(sigma * mu, &sx[k], &sz[k]))
                .collect();
            let (dx, dy, dz) = direction(rc);
            let (ap, ad, _, _) = step_lengths(&nt, &dx, &dz);
            let ap = (opts.step_factor * ap).min(1.0);
            let ad = (opts.step_factor * ad).min(1.0);
            for k in 0..nb {
                x[k] += &dx[k] * T::from_real(ap);
                z[k] += &dz[k] * T::from_real(ad);
                herm(&mut x[k]);
                herm(&mut z[k]);
            }
            y += dy * ad;
            self.project(&mut x);
            self.project(&mut z);
            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        CoreResult {
            status,
            x,
            z,
            y,
            iterations,
        }
    }
}

/// P = W A W for sparse Hermitian A.
fn wa_w<T: Field>(w: &DMatrix<T>, a: &Entries<T>, n: usize, p: &mut DMatrix<T>) {
    if a.len() < 2 * n {
        p.fill(T::zero());
        for &(r, c, v) in a {
            let wr = w.column(r);
            for q in 0..n {
                let s = v * w[(c, q)];
                if s != T::zero() {
                    p.column_mut(q).axpy(s, &wr, T::one());
                }
            }
        }
    } else {
        let mut dense = DMatrix::<T>::zeros(n, n);
        for &(r, c, v) in a {
            dense[(r, c)] += v;
        }
        *p = w * dense * w;
    }
}

struct NtScaling<T: Field> {
    /// inverse of the lower Cholesky factor of X
    l_inv: DMatrix<T>,
    /// eigenvectors of Lᴴ Z L
    u: DMatrix<T>,
    /// eigenvalues of Lᴴ Z L (= v²)
    lam: Vec<f64>,
    g: DMatrix<T>,
    w: DMatrix<T>,
}

impl<T: Field> NtScaling<T> {
    fn new(x: &DMatrix<T>, z: &DMatrix<T>) -> Option<Self> {
        let n = x.nrows();
        let l = Cholesky::new(x.clone())?.l();
        let l_inv = l.solve_lower_triangular(&DMatrix::<T>::identity(n, n))?;
        let mut lzl = l.adjoint() * z * &l;
        herm(&mut lzl);
        let eig = SymmetricEigen::try_new(lzl, 1e-15, 10_000)?;
        let lam: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(1e-300)).collect();
        let u = eig.eigenvectors;
        let mut g = &l * &u;
        for (k, &lk) in lam.iter().enumerate() {
            g.column_mut(k).scale_mut(lk.powf(-0.25));
        }
        let mut w = &g * g.adjoint();
        herm(&mut w);
        Some(Self {
            l_inv,
            u,
            lam,
            g,
            w,
        })
    }

    /// Scaled directions ΔX̃ = G⁻¹ΔX G⁻ᴴ and ΔZ̃ = GᴴΔZ G, returned with the
    /// maximal steps keeping X + αΔX and Z + αΔZ in the cone.
    fn scaled(&self, dx: &DMatrix<T>, dz: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>, f64, f64) {
        let n = self.lam.len();
        // V + αΔX̃ ⪰ 0  ⟺  I + α V^{-1/2} ΔX̃ V^{-1/2} ⪰ 0, with
        // V^{-1/2} ΔX̃ V^{-1/2} = Uᴴ L⁻¹ ΔX L⁻ᴴ U.
        let mut lxl = &self.l_inv * dx * self.l_inv.adjoint();
        herm(&mut lxl);
        let mut t = self.u.adjoint() * &lxl * &self.u;
        herm(&mut t);
        let ap = max_step(&t);
        let mut sx = t;
        for c in 0..n {
            for r in 0..n {
                sx[(r, c)] *= T::from_real((self.lam[r] * self.lam[c]).powf(0.25));
            }
        }
        let mut sz = self.g.adjoint() * dz * &self.g;
        herm(&mut sz);
        let mut q = sz.clone();
        for c in 0..n {
            for r in 0..n {
                q[(r, c)] *= T::from_real((self.lam[r] * self.lam[c]).powf(-0.25));
            }
        }
        let ad = max_step(&q);
        (sx, sz, ap, ad)
    }

    fn corrector_rhs(&self, target: f64, sx: &DMatrix<T>, sz: &DMatrix<T>) -> DMatrix<T> {
        let n = self.lam.len();
        let mut r = (sx * sz + sz * sx) * T::from_real(-0.5);
        for i in 0..n {
            r[(i, i)] += T::from_real(target - self.lam[i]);
        }
        for c in 0..n {
            for rr in 0..n {
                let vs = self.lam[rr].sqrt() + self.lam[c].sqrt();
                r[(rr, c)] *= T::from_real(2.0 / vs);
            }
        }
        let mut out = &self.g * r * self.g.adjoint();
        herm(&mut out);
        out
    }
}

/// Largest α with I + αT ⪰ 0 (infinite if T ⪰ 0).
fn max_step<T: Field>(t: &DMatrix<T>) -> f64 {
    let ev = t.symmetric_eigenvalues();
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

#[allow(clippy::type_complexity)]
fn step_lengths<T: Field>(
    nt: &[NtScaling<T>],
    dx: &[DMatrix<T>],
    dz: &[DMatrix<T>],
) -> (f64, f64, Vec<DMatrix<T>>, Vec<DMatrix<T>>) {
    let mut ap = 1.0f64;
    let mut ad = 1.0f64;
    let mut sxs = Vec::with_capacity(nt.len());
    let mut szs = Vec::with_capacity(nt.len());
    for k in 0..nt.len() {
        let (sx, sz, a, d) = nt[k].scaled(&dx[k], &dz[k]);
        ap = ap.min(a);
        ad = ad.min(d);
        sxs.push(sx);
        szs.push(sz);
    }
    (ap, ad, sxs, szs)
}

enum SchurSolver {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Empty,
}

impl SchurSolver {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        if n == 0 {
            return Some(Self::Empty);
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(Self::Chol(c));
        }
        let scale = (0..n)
            .map(|i| m[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut delta = 1e-14 * scale;
        for _ in 0..6 {
            let mut reg = m.clone();
            for i in 0..n {
                reg[(i, i)] += delta;
            }
            if let Some(c) = Cholesky::new(reg) {
                return Some(Self::Chol(c));
            }
            delta *= 100.0;
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(Self::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, h: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Chol(c) => c.solve(h),
            Self::Lu(lu) => lu.solve(h).unwrap_or_else(|| DVector::zeros(h.len())),
            Self::Empty => DVector::zeros(0),
        }
    }
}

struct Presolved {
    /// kept original row indices
    kept: Vec<usize>,
    /// original row -> scale s (row used by the core is A_i / s)
    scale: Vec<f64>,
    dropped: Vec<usize>,
    inconsistent: bool,
}

/// Normalizes rows and removes linearly dependent ones. Dependent rows whose
/// right-hand side does not follow from the kept rows make the problem
/// infeasible.
fn presolve(p: &SdpProblem) -> Presolved {
    let m = p.constraints.len();
    let mut rows: Vec<HashMap<(usize, usize, usize), C64>> = Vec::with_capacity(m);
    for row in &p.constraints {
        let mut map: HashMap<(usize, usize, usize), C64> = HashMap::new();
        for (b, a) in &row.terms {
            for &(r, c, v) in &a.entries {
                *map.entry((*b, r, c)).or_default() += v;
            }
        }
        map.retain(|_, v| v.norm() > 0.0);
        rows.push(map);
    }
    let scale: Vec<f64> = rows
        .iter()
        .map(|r| r.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    // co-occurrence lists and connected components of the Gram graph
    let mut occ: HashMap<(usize, usize, usize), Vec<(usize, C64)>> = HashMap::new();
    for (i, r) in rows.iter().enumerate() {
        if scale[i] == 0.0 {
            continue;
        }
        for (k, v) in r {
            occ.entry(*k).or_default().push((i, *v / scale[i]));
        }
    }
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for list in occ.values() {
        let first = list[0].0;
        for &(j, _) in &list[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, j));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut comps: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut dropped = Vec::new();
    let mut inconsistent = false;
    for (i, &s) in scale.iter().enumerate().take(m) {
        if s == 0.0 {
            dropped.push(i);
            if p.constraints[i].rhs.abs() > 1e-12 {
                inconsistent = true;
            }
            continue;
        }
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    let mut gram: HashMap<(usize, usize), f64> = HashMap::new();
    for list in occ.values() {
        for a in 0..list.len() {
            for b in a..list.len() {
                let (i, vi) = list[a];
                let (j, vj) = list[b];
                let g = (vi.conj() * vj).re;
                let key = if i <= j { (i, j) } else { (j, i) };
                *gram.entry(key).or_default() += g;
            }
        }
    }
    let g = |i: usize, j: usize| -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        gram.get(&key).copied().unwrap_or(0.0)
    };

    let mut kept = Vec::new();
    let mut comp_list: Vec<Vec<usize>> = comps.into_values().collect();
    comp_list.sort_by_key(|c| c[0]);
    for comp in comp_list {
        let k = comp.len();
        if k == 1 {
            kept.push(comp[0]);
            continue;
        }
        // pivoted Cholesky on the component's Gram matrix
        let gm = DMatrix::<f64>::from_fn(k, k, |a, b| g(comp[a], comp[b]));
        let mut diag: Vec<f64> = (0..k).map(|a| gm[(a, a)]).collect();
        let mut l = DMatrix::<f64>::zeros(k, k);
        let mut piv: Vec<usize> = Vec::new();
        let mut used = vec![false; k];
        for step in 0..k {
            let (best, &dmax) = diag
                .iter()
                .enumerate()
                .filter(|(a, _)| !used[*a])
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            if dmax <= 1e-10 {
                break;
            }
            used[best] = true;
            piv.push(best);
            let s = dmax.sqrt();
            for a in 0..k {
                if used[a] && a != best {
                    continue;
                }
                let mut v = gm[(a, best)];
                for t in 0..step {
                    v -= l[(a, t)] * l[(best, t)];
                }
                l[(a, step)] = v / s;
            }
            for a in 0..k {
                if !used[a] {
                    diag[a] -= l[(a, step)].powi(2);
                }
            }
        }
        let r = piv.len();
        let b_piv = DVector::from_iterator(
            r,
            piv.iter()
                .map(|&a| p.constraints[comp[a]].rhs / scale[comp[a]]),
        );
        // L_K (pivot rows of L) is lower triangular in pivot order
        let lk = DMatrix::<f64>::from_fn(r, r, |a, t| l[(piv[a], t)]);
        let lk_chol_ok = r > 0;
        for a in 0..k {
            if used[a] {
                kept.push(comp[a]);
                continue;
            }
            dropped.push(comp[a]);
            if !lk_chol_ok {
                continue;
            }
            // coefficients c solving G_KK c = G_Ka via the factor L_K L_Kᵀ
            let rhs = DVector::from_iterator(r, piv.iter().map(|&q| gm[(q, a)]));
            let tmp = lk
                .solve_lower_triangular(&rhs)
                .unwrap_or_else(|| DVector::zeros(r));
            let coef = lk
                .transpose()
                .solve_upper_triangular(&tmp)
                .unwrap_or_else(|| DVector::zeros(r));
            let predicted = coef.dot(&b_piv);
            let actual = p.constraints[comp[a]].rhs / scale[comp[a]];
            if (predicted - actual).abs() > 1e-8 * (1.0 + actual.abs() + b_piv.amax()) {
                inconsistent = true;
            }
        }
    }
    kept.sort_unstable();
    dropped.sort_unstable();
    Presolved {
        kept,
        scale,
        dropped,
        inconsistent,
    }
}

fn embed_entries(ent: &[(usize, usize, C64)], n: usize, factor: f64) -> Entries<f64> {
    let mut out = Vec::with_capacity(ent.len() * 4);
    for &(r, c, v) in ent {
        let (re, im) = (v.re * factor, v.im * factor);
        if re != 0.0 {
            out.push((r, c, re));
            out.push((r + n, c + n, re));
        }
        if im != 0.0 {
            out.push((r + n, c, im));
            out.push((r, c + n, -im));
        }
    }
    out
}

fn merge<T: Field>(ent: Vec<(usize, usize, T)>) -> Entries<T> {
    let mut ent = ent;
    ent.sort_by_key(|&(r, c, _)| (c, r));
    let mut out: Entries<T> = Vec::with_capacity(ent.len());
    for (r, c, v) in ent {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2 != T::zero());
    out
}

fn build_core<T: Field>(
    p: &SdpProblem,
    pre: &Presolved,
    sign: f64,
    embed: bool,
    convert: impl Fn(&SparseHermitian, usize, f64) -> Entries<T>,
) -> Core<T> {
    let csides = p.sides();
    let sides: Vec<usize> = if embed {
        csides.iter().map(|n| 2 * n).collect()
    } else {
        csides.clone()
    };
    let c: Vec<DMatrix<T>> = p
        .objective
        .iter()
        .enumerate()
        .map(|(blk, cb)| {
            let mut d = DMatrix::<T>::zeros(sides[blk], sides[blk]);
            for (r, cc, v) in convert(cb, csides[blk], sign) {
                d[(r, cc)] += v;
            }
            d
        })
        .collect();
    let mut rows = Vec::with_capacity(pre.kept.len());
    let mut b = Vec::with_capacity(pre.kept.len());
    for &i in &pre.kept {
        let s = pre.scale[i];
        let row = &p.constraints[i];
        let mut per_block: Vec<(usize, Entries<T>)> = Vec::new();
        for (blk, a) in &row.terms {
            let ent = convert(a, csides[*blk], 1.0 / s);
            match per_block.iter_mut().find(|(bb, _)| bb == blk) {
                Some((_, e)) => e.extend(ent),
                None => per_block.push((*blk, ent)),
            }
        }
        let per_block = per_block
            .into_iter()
            .map(|(blk, e)| (blk, merge(e)))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        rows.push(per_block);
        b.push(row.rhs / s);
    }
    Core::new(
        sides,
        c,
        rows,
        DVector::from_vec(b),
        if embed { Some(csides) } else { None },
    )
}

fn deembed(m: &DMatrix<f64>, n: usize, factor: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let p = 0.5 * (m[(r, c)] + m[(r + n, c + n)]);
        let q = 0.5 * (m[(r + n, c)] - m[(r, c + n)]);
        C64::new(p * factor, q * factor)
    })
}

pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    p.validate()?;
    let sides = p.sides();
    let m = p.constraints.len();
    let pre = presolve(p);
    // minimization form: C_int = sign · C
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    if pre.inconsistent {
        return Ok(SdpSolution {
            status: SolveStatus::Infeasible,
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            gap: f64::INFINITY,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            iterations: 0,
            blocks: sides.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
            slacks: sides.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
            multipliers: vec![0.0; m],
            dropped_rows: pre.dropped,
        });
    }

    let (status, x, z_int, y_core, iterations) = match opts.embedding {
        Embedding::Complex => {
            let core = build_core::<C64>(p, &pre, sign, false, |a, _, f| {
                a.entries.iter().map(|&(r, c, v)| (r, c, v * f)).collect()
            });
            let res = core.solve(opts);
            (res.status, res.x, res.z, res.y, res.iterations)
        }
        Embedding::RealSymmetric => {
            let core = build_core::<f64>(p, &pre, sign, true, |a, n, f| {
                embed_entries(&a.entries, n, 0.5 * f)
            });
            let res = core.solve(opts);
            let x = res
                .x
                .iter()
                .zip(&sides)
                .map(|(xb, &n)| deembed(xb, n, 1.0))
                .collect();
            let z = res
                .z
                .iter()
                .zip(&sides)
                .map(|(zb, &n)| deembed(zb, n, 2.0))
                .collect();
            (res.status, x, z, res.y, res.iterations)
        }
    };

    // back to original rows and sense
    let mut y = vec![0.0; m];
    for (k, &i) in pre.kept.iter().enumerate() {
        y[i] = sign * y_core[k] / pre.scale[i];
    }
    let slacks: Vec<CMatrix> = z_int;
    let primal_value = p.objective_value(&x);
    let dual_value: f64 = p.constraints.iter().zip(&y).map(|(c, yi)| c.rhs * yi).sum();
    let primal_residual = p
        .constraints
        .iter()
        .zip(&pre.scale)
        .map(|(c, &s)| (c.evaluate(&x) - c.rhs).abs() / s.max(1.0))
        .fold(0.0, f64::max);
    // dual residual: sign·C − sign·Aᵀy − Z, recomputed on the original data
    let mut aty: Vec<CMatrix> = sides.iter().map(|&n| CMatrix::zeros(n, n)).collect();
    for (c, &yi) in p.constraints.iter().zip(&y) {
        for (b, a) in &c.terms {
            for &(r, cc, v) in &a.entries {
                aty[*b][(r, cc)] += v * yi;
            }
        }
    }
    let mut dual_residual: f64 = 0.0;
    let mut c_max: f64 = 0.0;
    for (blk, &n) in sides.iter().enumerate() {
        let cd = p.objective[blk].to_dense(n);
        c_max = c_max.max(crate::tensor::max_abs(&cd));
        let r = (&cd - &aty[blk]).scale(sign) - &slacks[blk];
        dual_residual = dual_residual.max(crate::tensor::max_abs(&r));
    }
    dual_residual /= 1.0 + c_max;
    Ok(SdpSolution {
        status,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        primal_residual,
        dual_residual,
        iterations,
        blocks: x,
        slacks,
        multipliers: y,
        dropped_rows: pre.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::sdp::problem::{Constraint, SdpProblem};
    use crate::tensor::hermitian_eig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entry(r: usize, c: usize, v: f64) -> SparseHermitian {
        SparseHermitian {
            entries: vec![(r, c, C64::new(v, 0.0))],
        }
    }

    fn both(opts: &SolveOptions) -> [SolveOptions; 2] {
        let mut a = opts.clone();
        a.embedding = Embedding::Complex;
        let mut b = opts.clone();
        b.embedding = Embedding::RealSymmetric;
        [a, b]
    }

    #[test]
    fn minimal_trace_with_fixed_corner() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = p.add_plain_block("X", 3);
        p.set_objective(b, SparseHermitian::identity(3));
        p.add_constraint(Constraint::new(1.0).with_term(b, entry(0, 0, 1.0)));
        for opts in both(&SolveOptions::default()) {
            let s = solve(&p, &opts).unwrap();
            assert_eq!(s.status, SolveStatus::Optimal);
            assert!((s.primal_value - 1.0).abs() < 1e-8);
            let mut e = CMatrix::zeros(3, 3);
            e[(0, 0)] = C64::new(1.0, 0.0);
            assert!(crate::tensor::max_abs(&(&s.blocks[0] - e)) < 1e-7);
        }
    }

    /// max tr(Δ Q) over 0 ⪯ Q ⪯ 1 equals the sum of positive eigenvalues.
    #[test]
    fn helstrom_against_spectral_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            let rho = random::state(d, &mut rng);
            let sigma = random::state(d, &mut rng);
            let delta = &rho - &sigma;
            let mut p = SdpProblem::new(Sense::Maximize);
            let q = p.add_plain_block("Q", d);
            let r = p.add_plain_block("R", d);
            p.set_objective_dense(q, &delta);
            for i in 0..d {
                for j in i..d {
                    let mut re = SparseHermitian::new();
                    let mut im = SparseHermitian::new();
                    if i == j {
                        re.entries.push((i, i, C64::new(1.0, 0.0)));
                    } else {
                        re.entries.push((i, j, C64::new(0.5, 0.0)));
                        re.entries.push((j, i, C64::new(0.5, 0.0)));
                        im.entries.push((i, j, C64::new(0.0, -0.5)));
                        im.entries.push((j, i, C64::new(0.0, 0.5)));
                    }
                    let rhs = if i == j { 1.0 } else { 0.0 };
                    p.add_constraint(
                        Constraint::new(rhs)
                            .with_term(q, re.clone())
                            .with_term(r, re),
                    );
                    if i != j {
                        p.add_constraint(
                            Constraint::new(0.0)
                                .with_term(q, im.clone())
                                .with_term(r, im),
                        );
                    }
                }
            }
            let oracle: f64 = hermitian_eig(&delta)
                .unwrap()
                .values
                .iter()
                .filter(|v| **v > 0.0)
                .sum();
            for opts in both(&SolveOptions::default()) {
                let s = solve(&p, &opts).unwrap();
                assert_eq!(s.status, SolveStatus::Optimal);
                assert!(
                    (s.primal_value - oracle).abs() < 1e-7,
                    "{} vs {}",
                    s.primal_value,
                    oracle
                );
                assert!(s.gap < 1e-7);
            }
        }
    }

    #[test]
    fn detects_infeasible() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = p.add_plain_block("X", 2);
        p.set_objective(b, SparseHermitian::identity(2));
        p.add_constraint(Constraint::new(-1.0).with_term(b, entry(0, 0, 1.0)));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_inconsistent_rows() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = p.add_plain_block("X", 2);
        p.set_objective(b, SparseHermitian::identity(2));
        p.add_constraint(Constraint::new(1.0).with_term(b, entry(0, 0, 1.0)));
        p.add_constraint(Constraint::new(3.0).with_term(b, entry(0, 0, 2.0)));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = p.add_plain_block("X", 2);
        p.set_objective(b, SparseHermitian::identity(2));
        p.add_constraint(Constraint::new(1.0).with_term(b, entry(0, 0, 1.0)));
        p.add_constraint(Constraint::new(2.0).with_term(b, entry(0, 0, 2.0)));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.dropped_rows.len(), 1);
        assert!((s.primal_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn detects_unbounded() {
        let mut p = SdpProblem::new(Sense::Maximize);
        let b = p.add_plain_block("X", 2);
        p.set_objective(b, SparseHermitian::identity(2));
        p.add_constraint(Constraint::new(1.0).with_term(b, entry(0, 0, 1.0)));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }
}
