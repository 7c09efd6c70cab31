//! Optimal single-shot discrimination of two process matrices, and the
//! quantities built on the same semidefinite programs: the base norm,
//! distances to causal classes, adaptive testers and an explicit
//! realization of an optimal strategy.
//!
//! Probabilities are tr(W S) for a strategy element S on the party labels.
//! A strategy {S_0, S_1} is feasible when S_0, S_1 ⪰ 0 and S_0 + S_1 is a
//! non-signalling Choi matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::networks::{is_nonsignalling, ChoiMatrix, NsReport, AI, AO, BI, BO};
use crate::process::{membership, MembershipReport, PartyDims, ProcessClassTag, ProcessMatrix};
use crate::sdp::{
    identity_factor_rows, marginal_rows, solve, trace_row, Constraint, ProductBasis, RowSet,
    SdpProblem, SdpSolution, Sense, SolveOptions, SparseHermitian,
};
use crate::tensor::{
    embed, hermitian_eig, partial_trace, trace_norm, CMatrix, HermitianOperator, LabelledOperator,
    SystemLabel,
};

/// Tolerance on the non-signalling residual of returned strategies.
pub const STRATEGY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub s0: HermitianOperator,
    pub s1: HermitianOperator,
}

impl Strategy {
    pub fn sum(&self) -> Result<HermitianOperator> {
        self.s0.add(&self.s1)
    }

    /// Non-signalling report of S_0 + S_1, plus positivity of each element
    /// folded into `min_eigenvalue`.
    pub fn feasibility(&self, tol: f64) -> Result<NsReport> {
        let mut rep = is_nonsignalling(&self.sum()?, tol)?;
        let min = self.s0.min_eigenvalue()?.min(self.s1.min_eigenvalue()?);
        rep.min_eigenvalue = rep.min_eigenvalue.min(min);
        rep.nonsignalling &= min >= -tol;
        Ok(rep)
    }

    /// ½tr(W_0 S_0) + ½tr(W_1 S_1).
    pub fn probability(&self, w0: &ProcessMatrix, w1: &ProcessMatrix) -> Result<f64> {
        Ok(0.5 * w0.probability(&self.s0)? + 0.5 * w1.probability(&self.s1)?)
    }
}

/// Dual variables of the discrimination program: the operator
/// D = α·1 + 1_AO ⊗ Y_0 + 1_BO ⊗ Y_1 must dominate ½W_0 and ½W_1, and
/// α·d_AI·d_BI bounds the success probability.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub alpha: f64,
    /// on AI, BI, BO
    pub y0: HermitianOperator,
    /// on AI, AO, BI
    pub y1: HermitianOperator,
}

impl DualCertificate {
    pub fn operator(&self, dims: PartyDims) -> Result<HermitianOperator> {
        let labels = dims.labels();
        let id = HermitianOperator::identity(labels.clone())?.scale(self.alpha);
        id.add(&self.y0.embed(&labels)?)?
            .add(&self.y1.embed(&labels)?)
    }

    pub fn value(&self, dims: PartyDims) -> f64 {
        self.alpha * (dims.ai * dims.bi) as f64
    }

    /// Smallest eigenvalue of D − ½W; non-negative for a feasible certificate.
    pub fn slack(&self, w: &ProcessMatrix) -> Result<f64> {
        self.operator(w.dims())?
            .sub(&w.op().scale(0.5))?
            .min_eigenvalue()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SolveStats {
    fn of(s: &SdpSolution) -> Self {
        Self {
            gap: s.gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            iterations: s.iterations,
        }
    }

    pub fn residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual)
    }
}

#[derive(Clone, Debug)]
pub struct DiscriminationResult {
    pub p_succ: f64,
    pub strategy: Strategy,
    pub certificate: DualCertificate,
    pub stats: SolveStats,
}

fn optimal(s: SdpSolution) -> Result<SdpSolution> {
    if s.is_optimal() {
        Ok(s)
    } else {
        Err(s.into_error())
    }
}

fn same_dims(a: PartyDims, b: PartyDims) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

// positions in the canonical label order
const P_AI: usize = 0;
const P_AO: usize = 1;
const P_BI: usize = 2;
const P_BO: usize = 3;

#[derive(Clone, Copy, PartialEq)]
enum RowKind {
    Trace,
    Alice,
    Bob,
    Other,
}

fn row_kind(ks: &[usize]) -> RowKind {
    if ks.iter().all(|&k| k == 0) {
        RowKind::Trace
    } else if ks[P_AO] == 0 && ks[P_AI] != 0 {
        RowKind::Alice
    } else if ks[P_BO] == 0 && ks[P_BI] != 0 {
        RowKind::Bob
    } else {
        RowKind::Other
    }
}

/// Linear non-signalling rows on the canonical labels: tr_AO N ∈ 1_AI ⊗ ·,
/// tr_BO N ∈ 1_BI ⊗ ·, and optionally tr N = d_AI d_BI. Together these
/// imply tr_{AO BO} N = 1_{AI BI}.
struct Rows {
    keys: Vec<Vec<usize>>,
    rows: Vec<(SparseHermitian, f64)>,
}

fn ns_rows(basis: &ProductBasis, dims: PartyDims, with_trace: bool) -> Result<Rows> {
    let mut set = RowSet::new();
    set.extend(identity_factor_rows(basis, &[AO], &[AI])?)?;
    set.extend(identity_factor_rows(basis, &[BO], &[BI])?)?;
    if with_trace {
        let (k, v) = trace_row(basis, (dims.ai * dims.bi) as f64);
        set.insert(k, v)?;
    }
    Ok(Rows {
        keys: set.iter().map(|(k, _)| k.clone()).collect(),
        rows: set.materialize(basis),
    })
}

/// Rebuilds α, Y_0, Y_1 from the multipliers of the non-signalling rows.
fn certificate(dims: PartyDims, rows: &Rows, y: &[f64], alpha: f64) -> Result<DualCertificate> {
    let n = dims.total();
    let mut ma = CMatrix::zeros(n, n);
    let mut mb = CMatrix::zeros(n, n);
    for ((ks, (a, _)), &yi) in rows.keys.iter().zip(&rows.rows).zip(y) {
        let target = match row_kind(ks) {
            RowKind::Alice => &mut ma,
            RowKind::Bob => &mut mb,
            _ => continue,
        };
        for &(r, c, v) in &a.entries {
            target[(r, c)] += v * yi;
        }
    }
    let labels = dims.labels();
    let y0 = partial_trace(&LabelledOperator::new(labels.clone(), ma)?, &[AO])?
        .scale(1.0 / dims.ao as f64);
    let y1 = partial_trace(&LabelledOperator::new(labels, mb)?, &[BO])?.scale(1.0 / dims.bo as f64);
    Ok(DualCertificate {
        alpha,
        y0: HermitianOperator::symmetrized(y0),
        y1: HermitianOperator::symmetrized(y1),
    })
}

fn two_block(
    dims: PartyDims,
    c0: &CMatrix,
    c1: &CMatrix,
    rows: &[(SparseHermitian, f64)],
) -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Maximize);
    let b0 = p.add_block("S0", dims.labels());
    let b1 = p.add_block("S1", dims.labels());
    p.set_objective_dense(b0, c0);
    p.set_objective_dense(b1, c1);
    for (a, rhs) in rows {
        p.add_constraint(
            Constraint::new(*rhs)
                .with_term(b0, a.clone())
                .with_term(b1, a.clone()),
        );
    }
    p
}

/// Strategy blocks S_0, S_1 of a solved two-block program.
pub fn extract_strategy(sol: &SdpSolution, dims: PartyDims) -> Result<Strategy> {
    if !sol.is_optimal() {
        return Err(sol.into_error());
    }
    if sol.blocks.len() < 2 || sol.blocks[0].nrows() != dims.total() {
        return Err(Error::DimensionMismatch(
            "solution does not carry two strategy blocks of the party dimension".into(),
        ));
    }
    let mk = |m: &CMatrix| HermitianOperator::from_parts(dims.labels(), m.clone());
    Ok(Strategy {
        s0: mk(&sol.blocks[0])?,
        s1: mk(&sol.blocks[1])?,
    })
}

/// Builds the discrimination program max ½tr(W_0 S_0) + ½tr(W_1 S_1).
pub fn p_succ_problem(w0: &ProcessMatrix, w1: &ProcessMatrix) -> Result<SdpProblem> {
    let dims = w0.dims();
    same_dims(dims, w1.dims())?;
    let basis = ProductBasis::new(&dims.labels());
    let rows = ns_rows(&basis, dims, true)?;
    Ok(two_block(
        dims,
        &w0.data().scale(0.5),
        &w1.data().scale(0.5),
        &rows.rows,
    ))
}

pub fn p_succ(w0: &ProcessMatrix, w1: &ProcessMatrix) -> Result<DiscriminationResult> {
    p_succ_with(w0, w1, &SolveOptions::default())
}

pub fn p_succ_with(
    w0: &ProcessMatrix,
    w1: &ProcessMatrix,
    opts: &SolveOptions,
) -> Result<DiscriminationResult> {
    let dims = w0.dims();
    same_dims(dims, w1.dims())?;
    let basis = ProductBasis::new(&dims.labels());
    let rows = ns_rows(&basis, dims, true)?;
    let p = two_block(
        dims,
        &w0.data().scale(0.5),
        &w1.data().scale(0.5),
        &rows.rows,
    );
    let sol = optimal(solve(&p, opts)?)?;
    let alpha = rows
        .keys
        .iter()
        .zip(&sol.multipliers)
        .find(|(k, _)| row_kind(k) == RowKind::Trace)
        .map(|(_, &y)| y)
        .unwrap_or(0.0);
    Ok(DiscriminationResult {
        p_succ: sol.objective(),
        strategy: extract_strategy(&sol, dims)?,
        certificate: certificate(dims, &rows, &sol.multipliers, alpha)?,
        stats: SolveStats::of(&sol),
    })
}

fn require_state(rho: &HermitianOperator) -> Result<()> {
    let min = rho.min_eigenvalue()?;
    let tr = rho.trace();
    if min < -1e-9 || (tr - 1.0).abs() > 1e-9 {
        return Err(Error::NotState(format!(
            "min eigenvalue {min:.3e}, trace {tr}"
        )));
    }
    Ok(())
}

/// ½ + ¼‖ρ − σ‖₁ for free process matrices ρ ⊗ 1 and σ ⊗ 1.
pub fn p_succ_free(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    require_state(rho)?;
    require_state(sigma)?;
    let names = rho.as_operator().label_names();
    let sigma = sigma.permute(&names)?;
    Ok(0.5 + 0.25 * trace_norm(&rho.sub(&sigma)?)?)
}

#[derive(Clone, Debug)]
pub struct BaseNormResult {
    pub value: f64,
    pub strategy: Strategy,
    pub stats: SolveStats,
}

/// max tr(x S_0) − tr(x S_1) over feasible strategies, i.e. the largest
/// ‖√N x √N‖₁ over non-signalling N.
pub fn base_norm_with(x: &HermitianOperator, opts: &SolveOptions) -> Result<BaseNormResult> {
    let dims = PartyDims::of(x.as_operator())?;
    let x = x.permute(&[AI, AO, BI, BO])?;
    let basis = ProductBasis::new(&dims.labels());
    let rows = ns_rows(&basis, dims, true)?;
    let p = two_block(dims, x.data(), &(-x.data()), &rows.rows);
    let sol = optimal(solve(&p, opts)?)?;
    Ok(BaseNormResult {
        value: sol.objective(),
        strategy: extract_strategy(&sol, dims)?,
        stats: SolveStats::of(&sol),
    })
}

pub fn base_norm(x: &HermitianOperator) -> Result<f64> {
    Ok(base_norm_with(x, &SolveOptions::default())?.value)
}

/// Affine model of a class: W* = W*_0 + Σ t_k B_k, with one or more "core"
/// operators core_j(t) = base_j + Σ t_k core_kj whose positivity is exactly
/// class membership.
struct ClassModel {
    cores: Vec<CoreSpec>,
    dirs: Vec<Direction>,
}

struct CoreSpec {
    name: &'static str,
    labels: Vec<SystemLabel>,
    base: CMatrix,
}

struct Direction {
    full: SparseHermitian,
    cores: Vec<(usize, SparseHermitian)>,
}

fn sub_labels(dims: PartyDims, names: &[&str]) -> Vec<SystemLabel> {
    dims.labels()
        .into_iter()
        .filter(|l| names.contains(&l.name.as_str()))
        .collect()
}

/// Canonical multi-index of a core multi-index (identity elsewhere).
fn lift(core: &[SystemLabel], ks: &[usize]) -> Vec<usize> {
    let mut full = vec![0; 4];
    for (l, &k) in core.iter().zip(ks) {
        let p = match l.name.as_str() {
            AI => P_AI,
            AO => P_AO,
            BI => P_BI,
            _ => P_BO,
        };
        full[p] = k;
    }
    full
}

fn free_dirs(full: &ProductBasis, dims: PartyDims, core: usize) -> Vec<Direction> {
    let labels = sub_labels(dims, &[AI, BI]);
    let basis = ProductBasis::new(&labels);
    basis
        .indices()
        .into_iter()
        .filter(|ks| ks.iter().any(|&k| k != 0))
        .map(|ks| Direction {
            full: full.element(&lift(&labels, &ks)),
            cores: vec![(core, basis.element(&ks))],
        })
        .collect()
}

/// Directions of W' ↦ W' ⊗ 1 keeping tr_{second_in} W' ∈ Herm(first_in) ⊗ 1
/// and tr W' fixed.
fn comb_dirs(
    full: &ProductBasis,
    labels: &[SystemLabel],
    first: (&str, &str),
    second_in: &str,
    core: usize,
) -> Result<Vec<Direction>> {
    let basis = ProductBasis::new(labels);
    let pi = basis.position(first.0)?;
    let po = basis.position(first.1)?;
    let ps = basis.position(second_in)?;
    Ok(basis
        .indices()
        .into_iter()
        .filter(|ks| ks[ps] != 0 || (ks[po] == 0 && ks[pi] != 0))
        .map(|ks| Direction {
            full: full.element(&lift(labels, &ks)),
            cores: vec![(core, basis.element(&ks))],
        })
        .collect())
}

fn class_model(dims: PartyDims, class: ProcessClassTag) -> Result<ClassModel> {
    let full = ProductBasis::new(&dims.labels());
    let w0 = 1.0 / (dims.ai * dims.bi) as f64;
    let core = |name, labels: Vec<SystemLabel>, weight: f64| {
        let n: usize = labels.iter().map(|l| l.dim).product();
        CoreSpec {
            name,
            labels,
            base: CMatrix::identity(n, n).scale(weight),
        }
    };
    let ab = sub_labels(dims, &[AI, AO, BI]);
    let ba = sub_labels(dims, &[AI, BI, BO]);
    Ok(match class {
        ProcessClassTag::Free => ClassModel {
            cores: vec![core("rho", sub_labels(dims, &[AI, BI]), w0)],
            dirs: free_dirs(&full, dims, 0),
        },
        ProcessClassTag::CombAB => ClassModel {
            dirs: comb_dirs(&full, &ab, (AI, AO), BI, 0)?,
            cores: vec![core("Wab", ab, w0)],
        },
        ProcessClassTag::CombBA => ClassModel {
            dirs: comb_dirs(&full, &ba, (BI, BO), AI, 0)?,
            cores: vec![core("Wba", ba, w0)],
        },
        ProcessClassTag::Separable => {
            let mut dirs = comb_dirs(&full, &ab, (AI, AO), BI, 0)?;
            dirs.extend(comb_dirs(&full, &ba, (BI, BO), AI, 1)?);
            let na: usize = ab.iter().map(|l| l.dim).product();
            let nb: usize = ba.iter().map(|l| l.dim).product();
            // moves weight between the two orders; W* itself is unchanged
            dirs.push(Direction {
                full: SparseHermitian::new(),
                cores: vec![
                    (0, SparseHermitian::identity(na).scaled(w0)),
                    (1, SparseHermitian::identity(nb).scaled(-w0)),
                ],
            });
            ClassModel {
                cores: vec![core("Wab", ab, 0.5 * w0), core("Wba", ba, 0.5 * w0)],
                dirs,
            }
        }
        ProcessClassTag::Unclassified => {
            return Err(Error::Precondition(
                "distance is defined for free, comb-ab, comb-ba and separable classes".into(),
            ))
        }
    })
}

#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub class: ProcessClassTag,
    pub distance: f64,
    /// closest class member W*
    pub closest: ProcessMatrix,
    /// class cores at the optimum: ρ for free, W' for combs, (W_a, W_b)
    /// with W* = W_a ⊗ 1_BO + W_b ⊗ 1_AO for separable
    pub cores: Vec<HermitianOperator>,
    /// weight of the A≺B part for the separable class
    pub mixing: Option<f64>,
    /// optimal discrimination strategy between W and W*
    pub strategy: Strategy,
    pub certificate: DualCertificate,
    pub stats: SolveStats,
}

pub fn distance_to_class(w: &ProcessMatrix, class: ProcessClassTag) -> Result<DistanceResult> {
    distance_to_class_with(w, class, &SolveOptions::default())
}

/// min over W* in the class of the base norm of W − W*, solved as one
/// program: max ½⟨S_0, W⟩ + ½⟨S_1, W*_0⟩ − Σ_j ⟨X_j, base_j⟩ subject to
/// tr(S_0 + S_1) = 4 d_AI d_BI, S_0 + S_1 non-signalling shaped, and
/// −½⟨B_k, S_1⟩ + Σ_j ⟨core_kj, X_j⟩ = 0 for every direction. Its dual is
/// min 4 d_AI d_BI α − 2 over certificates dominating ½W and ½W*.
pub fn distance_to_class_with(
    w: &ProcessMatrix,
    class: ProcessClassTag,
    opts: &SolveOptions,
) -> Result<DistanceResult> {
    let dims = w.dims();
    let model = class_model(dims, class)?;
    let basis = ProductBasis::new(&dims.labels());
    let rows = ns_rows(&basis, dims, false)?;
    let n = dims.total();
    let dd = (dims.ai * dims.bi) as f64;
    let base = CMatrix::identity(n, n).scale(1.0 / dd);

    let mut p = SdpProblem::new(Sense::Maximize);
    let b0 = p.add_block("S0", dims.labels());
    let b1 = p.add_block("S1", dims.labels());
    p.set_objective_dense(b0, &w.data().scale(0.5));
    p.set_objective_dense(b1, &base.scale(0.5));
    let cb: Vec<usize> = model
        .cores
        .iter()
        .map(|c| {
            let b = p.add_block(c.name, c.labels.clone());
            p.set_objective_dense(b, &(-&c.base));
            b
        })
        .collect();
    let id = SparseHermitian::identity(n);
    p.add_constraint(
        Constraint::new(4.0 * dd)
            .with_term(b0, id.clone())
            .with_term(b1, id),
    );
    for (a, _) in &rows.rows {
        p.add_constraint(
            Constraint::new(0.0)
                .with_term(b0, a.clone())
                .with_term(b1, a.clone()),
        );
    }
    let first_dir = p.constraints.len();
    for d in &model.dirs {
        let mut c = Constraint::new(0.0);
        if !d.full.is_empty() {
            c = c.with_term(b1, d.full.scaled(-0.5));
        }
        for (j, e) in &d.cores {
            c = c.with_term(cb[*j], e.clone());
        }
        p.add_constraint(c);
    }
    let sol = optimal(solve(&p, opts)?)?;

    let y = &sol.multipliers;
    let mut closest = base;
    let mut cores: Vec<CMatrix> = model.cores.iter().map(|c| c.base.clone()).collect();
    for (d, &t) in model.dirs.iter().zip(&y[first_dir..]) {
        for &(r, c, v) in &d.full.entries {
            closest[(r, c)] += v * t;
        }
        for (j, e) in &d.cores {
            for &(r, c, v) in &e.entries {
                cores[*j][(r, c)] += v * t;
            }
        }
    }
    let cores = model
        .cores
        .iter()
        .zip(cores)
        .map(|(c, m)| HermitianOperator::from_parts(c.labels.clone(), m))
        .collect::<Result<Vec<_>>>()?;
    let mixing = (class == ProcessClassTag::Separable).then(|| cores[0].trace() / dims.ao as f64);
    let quarter = |m: &CMatrix| HermitianOperator::from_parts(dims.labels(), m.scale(0.25));
    Ok(DistanceResult {
        class,
        distance: (sol.objective() - 2.0).max(0.0),
        closest: ProcessMatrix::new_unchecked(HermitianOperator::from_parts(
            dims.labels(),
            closest,
        )?)?,
        cores,
        mixing,
        strategy: Strategy {
            s0: quarter(&sol.blocks[0])?,
            s1: quarter(&sol.blocks[1])?,
        },
        certificate: certificate(dims, &rows, &y[1..first_dir], y[0])?,
        stats: SolveStats::of(&sol),
    })
}

/// Adaptive tester {L_0, L_1} for the order A≺B: tr_BO(L_0 + L_1) = 1_BI ⊗ J
/// with J the Choi matrix of a channel A_I → A_O.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveTester {
    pub l0: HermitianOperator,
    pub l1: HermitianOperator,
    /// on AI, AO
    pub j: HermitianOperator,
}

#[derive(Clone, Debug)]
pub struct AdaptiveResult {
    pub p_adapt: f64,
    pub tester: AdaptiveTester,
    pub stats: SolveStats,
}

/// Comb-membership tolerance for the operands of [`p_adapt`].
pub const COMB_TOL: f64 = 1e-7;

pub fn p_adapt(w0: &ProcessMatrix, w1: &ProcessMatrix) -> Result<AdaptiveResult> {
    p_adapt_with(w0, w1, &SolveOptions::default())
}

pub fn p_adapt_with(
    w0: &ProcessMatrix,
    w1: &ProcessMatrix,
    opts: &SolveOptions,
) -> Result<AdaptiveResult> {
    let dims = w0.dims();
    same_dims(dims, w1.dims())?;
    for (k, w) in [w0, w1].into_iter().enumerate() {
        let r = membership(w.op())?.comb_ab;
        if r > COMB_TOL {
            return Err(Error::Precondition(format!(
                "operand {k} is not an A≺B comb (residual {r:.3e})"
            )));
        }
    }
    let basis = ProductBasis::new(&dims.labels());
    let mut set = RowSet::new();
    set.extend(identity_factor_rows(&basis, &[BO], &[BI])?)?;
    let target =
        LabelledOperator::identity(vec![SystemLabel::new(AI, dims.ai)])?.scale(dims.bi as f64);
    set.extend(marginal_rows(&basis, &[AO, BI, BO], &target)?)?;
    let rows = set.materialize(&basis);
    let p = two_block(dims, &w0.data().scale(0.5), &w1.data().scale(0.5), &rows);
    let sol = optimal(solve(&p, opts)?)?;
    let s = extract_strategy(&sol, dims)?;
    let j = s
        .sum()?
        .partial_trace(&[BI, BO])?
        .scale(1.0 / dims.bi as f64);
    Ok(AdaptiveResult {
        p_adapt: sol.objective(),
        tester: AdaptiveTester {
            l0: s.s0,
            l1: s.s1,
            j,
        },
        stats: SolveStats::of(&sol),
    })
}

/// Names of the ancilla systems X_1..X_4 (copies of AI, AO, BI, BO).
pub const ANCILLA: [&str; 4] = ["X1", "X2", "X3", "X4"];

/// Largest party dimension for which the realization is built densely.
pub const MAX_REALIZATION_SIDE: usize = 36;

#[derive(Clone, Debug)]
pub struct Realization {
    /// Choi matrix of Φ_K: (AI, BI) → (AO, BO, X1..X4), labels X1..X4 first
    pub k: ChoiMatrix,
    pub q0: HermitianOperator,
    pub q1: HermitianOperator,
    /// ½tr(Q_0 √N W_0 √N) + ½tr(Q_1 √N W_1 √N)
    pub probability: f64,
}

impl Realization {
    /// S_k = tr_X[(Q_kᵀ ⊗ 1) K] computed with the generic tensor routines.
    pub fn strategy(&self) -> Result<Strategy> {
        let k = self.k.op().as_operator();
        let s = |q: &HermitianOperator| -> Result<HermitianOperator> {
            let qt = embed(&q.as_operator().transpose(), k.labels())?;
            let prod = qt.mul(k)?;
            let red = partial_trace(&prod, &ANCILLA)?;
            HermitianOperator::symmetrized(red).permute(&[AI, AO, BI, BO])
        };
        Ok(Strategy {
            s0: s(&self.q0)?,
            s1: s(&self.q1)?,
        })
    }

    /// Success probability obtained by replaying the measured channel.
    pub fn replay(&self, w0: &ProcessMatrix, w1: &ProcessMatrix) -> Result<f64> {
        self.strategy()?.probability(w0, w1)
    }
}

fn ancilla_labels(dims: PartyDims) -> Vec<SystemLabel> {
    ANCILLA
        .iter()
        .zip(dims.labels())
        .map(|(n, l)| SystemLabel::new(*n, l.dim))
        .collect()
}

/// Physical realization of the strategy generated by a non-signalling N:
/// Φ_K with K = (1_X ⊗ √N)|1⟩⟩⟨⟨1|(1_X ⊗ √N) followed by the two-outcome
/// measurement Q_0 = 1 − Π + Q̃_0, Q_1 = Π − Q̃_0, where Π projects onto the
/// support of N and Q̃_0 onto the positive part of √N(W_0 − W_1)√N.
pub fn build_realization(
    n: &HermitianOperator,
    w0: &ProcessMatrix,
    w1: &ProcessMatrix,
) -> Result<Realization> {
    let dims = w0.dims();
    same_dims(dims, w1.dims())?;
    same_dims(dims, PartyDims::of(n.as_operator())?)?;
    let side = dims.total();
    if side > MAX_REALIZATION_SIDE {
        return Err(Error::Precondition(format!(
            "realization is built densely; party dimension {side} exceeds {MAX_REALIZATION_SIDE}"
        )));
    }
    let rep = is_nonsignalling(n, STRATEGY_TOL)?;
    if !rep.nonsignalling {
        return Err(Error::Precondition(format!(
            "N is not non-signalling (max residual {:.3e})",
            rep.max_residual()
        )));
    }
    let n = n.permute(&[AI, AO, BI, BO])?;
    let eig = n.eig()?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    let cut = (1e-10 * top).max(1e-14);
    let support: Vec<usize> = (0..side).filter(|&k| eig.values[k] > cut).collect();
    let sqrt_n = eig.reconstruct(|v| if v > cut { v.sqrt() } else { 0.0 });
    let vs = CMatrix::from_fn(side, support.len(), |r, c| eig.vectors[(r, support[c])]);

    let delta = &sqrt_n * (w0.data() - w1.data()) * &sqrt_n;
    let ds = vs.adjoint() * &delta * &vs;
    let de = hermitian_eig(&ds)?;
    let r = support.len();
    let mut q1 = CMatrix::zeros(side, side);
    for k in (0..r).filter(|&k| de.values[k] <= 0.0) {
        let v = &vs * de.vectors.column(k);
        q1 += &v * v.adjoint();
    }
    let q0 = CMatrix::identity(side, side) - &q1;
    let xl = ancilla_labels(dims);
    let q0 = HermitianOperator::from_parts(xl.clone(), q0)?;
    let q1 = HermitianOperator::from_parts(xl.clone(), q1)?;

    let big = side * side;
    let kmat = CMatrix::from_fn(big, big, |row, col| {
        let (i, a) = (row / side, row % side);
        let (j, b) = (col / side, col % side);
        sqrt_n[(a, i)] * sqrt_n[(j, b)]
    });
    let mut labels = xl;
    labels.extend(dims.labels());
    let k = ChoiMatrix::new(
        HermitianOperator::from_parts(labels, kmat)?,
        vec![AI.into(), BI.into()],
        [ANCILLA[0], ANCILLA[1], ANCILLA[2], ANCILLA[3], AO, BO]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    )?;
    let half = |q: &HermitianOperator, w: &ProcessMatrix| -> f64 {
        let m = q.data() * &sqrt_n * w.data() * &sqrt_n;
        0.5 * m.trace().re
    };
    let probability = half(&q0, w0) + half(&q1, w1);
    Ok(Realization {
        k,
        q0,
        q1,
        probability,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub tag: ProcessClassTag,
    pub membership: MembershipReport,
    /// distance to the separable class, computed only when no comb test passes
    pub separable_distance: Option<f64>,
}

/// Tolerance below which a separable distance counts as membership.
pub const SEPARABLE_TOL: f64 = 1e-6;

/// Linear membership tests first, then the separable distance program.
pub fn classify(w: &ProcessMatrix, tol: f64, opts: &SolveOptions) -> Result<Classification> {
    let m = membership(w.op())?;
    let tag = if m.free <= tol {
        Some(ProcessClassTag::Free)
    } else if m.comb_ab <= tol {
        Some(ProcessClassTag::CombAB)
    } else if m.comb_ba <= tol {
        Some(ProcessClassTag::CombBA)
    } else {
        None
    };
    if let Some(tag) = tag {
        return Ok(Classification {
            tag,
            membership: m,
            separable_distance: None,
        });
    }
    let d = distance_to_class_with(w, ProcessClassTag::Separable, opts)?.distance;
    Ok(Classification {
        tag: if d <= SEPARABLE_TOL {
            ProcessClassTag::Separable
        } else {
            ProcessClassTag::Unclassified
        },
        membership: m,
        separable_distance: Some(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{make_cns_example, make_free, random_process_matrix};
    use crate::tensor::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ab_state(m: CMatrix) -> HermitianOperator {
        HermitianOperator::from_parts(vec![SystemLabel::new(AI, 2), SystemLabel::new(BI, 2)], m)
            .unwrap()
    }

    #[test]
    fn identical_operands_give_one_half() {
        let w = make_cns_example();
        let r = p_succ(&w, &w).unwrap();
        assert!((r.p_succ - 0.5).abs() < 1e-7, "{}", r.p_succ);
        assert!(r.strategy.feasibility(1e-7).unwrap().nonsignalling);
    }

    #[test]
    fn free_pair_matches_trace_norm() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(1.0, 0.0);
        let rho = ab_state(m);
        let sigma = ab_state(CMatrix::identity(4, 4).scale(0.25));
        let w0 = make_free(&rho, 2, 2).unwrap();
        let w1 = make_free(&sigma, 2, 2).unwrap();
        let r = p_succ(&w0, &w1).unwrap();
        assert!((r.p_succ - 0.875).abs() < 1e-6, "{}", r.p_succ);
        assert!((p_succ_free(&rho, &sigma).unwrap() - 0.875).abs() < 1e-12);
        assert!(r.stats.gap < 1e-7);
        for w in [&w0, &w1] {
            assert!(r.certificate.slack(w).unwrap() > -1e-7);
        }
        assert!((r.certificate.value(w0.dims()) - r.p_succ).abs() < 1e-6);
    }

    #[test]
    fn base_norm_matches_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w0 = random_process_matrix(PartyDims::qubits(), &mut rng).unwrap();
        let w1 = random_process_matrix(PartyDims::qubits(), &mut rng).unwrap();
        let p = p_succ(&w0, &w1).unwrap().p_succ;
        let b = base_norm(&w0.op().sub(w1.op()).unwrap()).unwrap();
        assert!((4.0 * p - 2.0 - b).abs() < 1e-6, "{p} {b}");
    }

    #[test]
    fn cns_distance_to_free() {
        let w = make_cns_example();
        let d = distance_to_class(&w, ProcessClassTag::Free).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-4, "{}", d.distance);
        assert!(membership(d.closest.op()).unwrap().free < 1e-9);
    }

    #[test]
    fn realization_replays_the_optimum() {
        let w0 = make_cns_example();
        let w1 = ProcessMatrix::maximally_mixed(PartyDims::qubits()).unwrap();
        let r = p_succ(&w0, &w1).unwrap();
        let real = build_realization(&r.strategy.sum().unwrap(), &w0, &w1).unwrap();
        assert!((real.probability - r.p_succ).abs() < 1e-6);
        assert!((real.replay(&w0, &w1).unwrap() - r.p_succ).abs() < 1e-6);
        let id = CMatrix::identity(16, 16);
        assert!(crate::tensor::max_abs(&(real.q0.data() + real.q1.data() - id)) < 1e-12);
    }
}
