//! Process matrices on A_I ⊗ A_O ⊗ B_I ⊗ B_O, the validity projector L_V
//! and the causal classes (free, A≺B, B≺A, separable).
//!
//! `₍X₎W` below denotes 1_X/d_X ⊗ tr_X W.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::{link_product, require_party_labels, AI, AO, BI, BO};
use crate::random;
use crate::tensor::{
    trace_and_replace, CMatrix, HermitianOperator, LabelledOperator, SystemLabel, C64,
};

/// Default tolerance for process-matrix validity.
pub const PROCESS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartyDims {
    pub ai: usize,
    pub ao: usize,
    pub bi: usize,
    pub bo: usize,
}

impl PartyDims {
    pub fn new(ai: usize, ao: usize, bi: usize, bo: usize) -> Self {
        Self { ai, ao, bi, bo }
    }

    pub fn uniform(d: usize) -> Self {
        Self::new(d, d, d, d)
    }

    pub fn qubits() -> Self {
        Self::uniform(2)
    }

    /// Canonical order AI, AO, BI, BO.
    pub fn labels(&self) -> Vec<SystemLabel> {
        vec![
            SystemLabel::new(AI, self.ai),
            SystemLabel::new(AO, self.ao),
            SystemLabel::new(BI, self.bi),
            SystemLabel::new(BO, self.bo),
        ]
    }

    pub fn total(&self) -> usize {
        self.ai * self.ao * self.bi * self.bo
    }

    /// Required trace of a process matrix.
    pub fn normalization(&self) -> f64 {
        (self.ao * self.bo) as f64
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.bi, self.bo, self.ai, self.ao)
    }

    pub fn is_symmetric(&self) -> bool {
        self.ai == self.bi && self.ao == self.bo
    }

    pub fn of(x: &LabelledOperator) -> Result<Self> {
        require_party_labels(x)?;
        let d = |n| x.dim_of(n).unwrap_or(1);
        Ok(Self::new(d(AI), d(AO), d(BI), d(BO)))
    }
}

fn canonical(x: &HermitianOperator) -> Result<HermitianOperator> {
    require_party_labels(x.as_operator())?;
    x.permute(&[AI, AO, BI, BO])
}

/// L_V(W) = ₍AO₎W + ₍BO₎W − ₍AO BO₎W − ₍BI BO₎W + ₍AO BI BO₎W − ₍AI AO₎W + ₍AO AI BO₎W.
pub fn project_lv(w: &HermitianOperator) -> Result<HermitianOperator> {
    let x = w.as_operator();
    require_party_labels(x)?;
    let terms: [(f64, &[&str]); 7] = [
        (1.0, &[AO]),
        (1.0, &[BO]),
        (-1.0, &[AO, BO]),
        (-1.0, &[BI, BO]),
        (1.0, &[AO, BI, BO]),
        (-1.0, &[AI, AO]),
        (1.0, &[AO, AI, BO]),
    ];
    let mut acc = LabelledOperator::zeros(x.labels().to_vec())?;
    for (s, over) in terms {
        acc = acc.add(&trace_and_replace(x, over)?.scale(s))?;
    }
    Ok(HermitianOperator::symmetrized(acc))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Def1Report {
    pub min_eigenvalue: f64,
    /// max |W − L_V(W)|
    pub lv_residual: f64,
    /// |tr W − d_AO d_BO|
    pub trace_residual: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Def2Report {
    pub min_eigenvalue: f64,
    /// max |₍AI AO₎W − ₍AO AI BO₎W|
    pub alice_residual: f64,
    /// max |₍BI BO₎W − ₍AO BI BO₎W|
    pub bob_residual: f64,
    /// max |W − ₍BO₎W − ₍AO₎W + ₍AO BO₎W|
    pub loop_residual: f64,
    pub trace_residual: f64,
    pub valid: bool,
}

fn common(w: &HermitianOperator) -> Result<(f64, f64)> {
    let dims = PartyDims::of(w.as_operator())?;
    Ok((
        w.min_eigenvalue()?,
        (w.trace() - dims.normalization()).abs(),
    ))
}

pub fn validate_def1(w: &HermitianOperator, tol: f64) -> Result<Def1Report> {
    let (min, tr) = common(w)?;
    let lv = w.max_abs_diff(&project_lv(w)?)?;
    Ok(Def1Report {
        min_eigenvalue: min,
        lv_residual: lv,
        trace_residual: tr,
        valid: min >= -tol && lv <= tol && tr <= tol,
    })
}

pub fn validate_def2(w: &HermitianOperator, tol: f64) -> Result<Def2Report> {
    let (min, tr) = common(w)?;
    let x = w.as_operator();
    let t = |over: &[&str]| trace_and_replace(x, over);
    let alice = t(&[AI, AO])?.max_abs_diff(&t(&[AO, AI, BO])?)?;
    let bob = t(&[BI, BO])?.max_abs_diff(&t(&[AO, BI, BO])?)?;
    let rebuilt = t(&[BO])?.add(&t(&[AO])?)?.sub(&t(&[AO, BO])?)?;
    let lp = x.max_abs_diff(&rebuilt)?;
    Ok(Def2Report {
        min_eigenvalue: min,
        alice_residual: alice,
        bob_residual: bob,
        loop_residual: lp,
        trace_residual: tr,
        valid: min >= -tol && alice <= tol && bob <= tol && lp <= tol && tr <= tol,
    })
}

/// A validated process matrix, stored in the label order AI, AO, BI, BO.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    op: HermitianOperator,
    dims: PartyDims,
}

impl ProcessMatrix {
    pub fn new(op: HermitianOperator, tol: f64) -> Result<Self> {
        let op = canonical(&op)?;
        let rep = validate_def1(&op, tol)?;
        if !rep.valid {
            return Err(Error::InvalidProcessMatrix(format!(
                "min eigenvalue {:.3e}, L_V residual {:.3e}, trace residual {:.3e}",
                rep.min_eigenvalue, rep.lv_residual, rep.trace_residual
            )));
        }
        let dims = PartyDims::of(op.as_operator())?;
        Ok(Self { op, dims })
    }

    /// Wraps an operator on the four party labels without checking validity.
    pub fn new_unchecked(op: HermitianOperator) -> Result<Self> {
        let op = canonical(&op)?;
        let dims = PartyDims::of(op.as_operator())?;
        Ok(Self { op, dims })
    }

    /// 1/(d_AI d_BI) · 1.
    pub fn maximally_mixed(dims: PartyDims) -> Result<Self> {
        let op =
            HermitianOperator::identity(dims.labels())?.scale(1.0 / (dims.ai * dims.bi) as f64);
        Ok(Self { op, dims })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn data(&self) -> &CMatrix {
        self.op.data()
    }

    pub fn dims(&self) -> PartyDims {
        self.dims
    }

    /// Probability tr(W S) of an effect on the same labels (any order).
    pub fn probability(&self, s: &HermitianOperator) -> Result<f64> {
        self.op.inner(&canonical(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessClassTag {
    Free,
    CombAB,
    CombBA,
    Separable,
    Unclassified,
}

impl std::fmt::Display for ProcessClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Free => "free",
            Self::CombAB => "comb-ab",
            Self::CombBA => "comb-ba",
            Self::Separable => "separable",
            Self::Unclassified => "unclassified",
        })
    }
}

fn require_labels(x: &LabelledOperator, want: &[&str]) -> Result<()> {
    let mut names = x.label_names();
    names.sort_unstable();
    let mut w = want.to_vec();
    w.sort_unstable();
    if names != w {
        return Err(Error::DimensionMismatch(format!(
            "expected labels {want:?}, got {:?}",
            x.label_names()
        )));
    }
    Ok(())
}

fn require_state(rho: &HermitianOperator, tol: f64) -> Result<()> {
    let min = rho.min_eigenvalue()?;
    let tr = rho.trace();
    if min < -tol || (tr - 1.0).abs() > tol {
        return Err(Error::NotState(format!(
            "min eigenvalue {min:.3e}, trace {tr}"
        )));
    }
    Ok(())
}

fn finish(x: LabelledOperator) -> Result<ProcessMatrix> {
    let op = canonical(&HermitianOperator::symmetrized(x))?;
    let dims = PartyDims::of(op.as_operator())?;
    Ok(ProcessMatrix { op, dims })
}

/// ρ_{AI BI} ⊗ 1_{AO BO}.
pub fn make_free(rho: &HermitianOperator, ao: usize, bo: usize) -> Result<ProcessMatrix> {
    require_labels(rho.as_operator(), &[AI, BI])?;
    require_state(rho, 1e-9)?;
    let id = LabelledOperator::identity(vec![SystemLabel::new(AO, ao), SystemLabel::new(BO, bo)])?;
    finish(crate::tensor::tensor(rho.as_operator(), &id)?)
}

/// Marginal residual max |tr_BI W' − ₍AO₎ tr_BI W'| and the trace error of W'.
fn comb_marginals(wp: &LabelledOperator, first_out: &str, second_in: &str) -> Result<(f64, f64)> {
    let red = crate::tensor::partial_trace(wp, &[second_in])?;
    let marg = red.max_abs_diff(&trace_and_replace(&red, &[first_out])?)?;
    let d_out = wp.dim_of(first_out).unwrap_or(1) as f64;
    Ok((marg, (wp.trace().re - d_out).abs()))
}

fn make_comb(
    wp: &HermitianOperator,
    first: (&str, &str),
    second: (&str, &str),
    last_dim: usize,
    tol: f64,
) -> Result<ProcessMatrix> {
    let x = wp.as_operator();
    require_labels(x, &[first.0, first.1, second.0])?;
    let min = wp.min_eigenvalue()?;
    if min < -tol {
        return Err(Error::NegativeEigenvalue(min));
    }
    let (marg, tr) = comb_marginals(x, first.1, second.0)?;
    if marg > tol || tr > tol {
        return Err(Error::Precondition(format!(
            "comb marginal residual {marg:.3e}, trace residual {tr:.3e}"
        )));
    }
    let id = LabelledOperator::identity(vec![SystemLabel::new(second.1, last_dim)])?;
    finish(crate::tensor::tensor(x, &id)?)
}

/// W' ⊗ 1_BO with W' on {AI, AO, BI}, tr_BI W' = W'' ⊗ 1_AO and tr W' = d_AO.
pub fn make_comb_ab(wp: &HermitianOperator, bo: usize, tol: f64) -> Result<ProcessMatrix> {
    make_comb(wp, (AI, AO), (BI, BO), bo, tol)
}

/// W' ⊗ 1_AO with W' on {BI, BO, AI}, tr_AI W' = W'' ⊗ 1_BO and tr W' = d_BO.
pub fn make_comb_ba(wp: &HermitianOperator, ao: usize, tol: f64) -> Result<ProcessMatrix> {
    make_comb(wp, (BI, BO), (AI, AO), ao, tol)
}

fn rename(x: &LabelledOperator, map: impl Fn(&str) -> &'static str) -> Result<LabelledOperator> {
    let labels = x
        .labels()
        .iter()
        .map(|l| SystemLabel::new(map(&l.name), l.dim))
        .collect();
    LabelledOperator::new(labels, x.data().clone())
}

fn swap_name(n: &str) -> &'static str {
    match n {
        AI => BI,
        AO => BO,
        BI => AI,
        _ => AO,
    }
}

/// Swap-operator conjugation exchanging A_I ↔ B_I and A_O ↔ B_O.
pub fn swap_operator(x: &HermitianOperator) -> Result<HermitianOperator> {
    require_party_labels(x.as_operator())?;
    let dims = PartyDims::of(x.as_operator())?;
    if !dims.is_symmetric() {
        return Err(Error::DimensionMismatch(format!(
            "cannot swap parties with dims {dims:?}"
        )));
    }
    let renamed = HermitianOperator::symmetrized(rename(x.as_operator(), swap_name)?);
    canonical(&renamed)
}

pub fn swap_parties(w: &ProcessMatrix) -> Result<ProcessMatrix> {
    let op = swap_operator(&w.op)?;
    Ok(ProcessMatrix { op, dims: w.dims })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    /// max |W − ₍AO BO₎W|
    pub free: f64,
    /// max of |W − ₍BO₎W| and |₍BI BO₎W − ₍AO BI BO₎W|
    pub comb_ab: f64,
    /// mirror image of `comb_ab`
    pub comb_ba: f64,
}

/// Linear class-membership residuals; assumes `w` is already a process matrix.
pub fn membership(w: &HermitianOperator) -> Result<MembershipReport> {
    let x = w.as_operator();
    require_party_labels(x)?;
    let t = |over: &[&str]| trace_and_replace(x, over);
    let free = x.max_abs_diff(&t(&[AO, BO])?)?;
    let comb_ab = x
        .max_abs_diff(&t(&[BO])?)?
        .max(t(&[BI, BO])?.max_abs_diff(&t(&[AO, BI, BO])?)?);
    let comb_ba = x
        .max_abs_diff(&t(&[AO])?)?
        .max(t(&[AI, AO])?.max_abs_diff(&t(&[BO, AI, AO])?)?);
    Ok(MembershipReport {
        free,
        comb_ab,
        comb_ba,
    })
}

pub fn is_free(w: &ProcessMatrix, tol: f64) -> Result<bool> {
    Ok(membership(w.op())?.free <= tol)
}

pub fn is_comb_ab(w: &ProcessMatrix, tol: f64) -> Result<bool> {
    Ok(membership(w.op())?.comb_ab <= tol)
}

pub fn is_comb_ba(w: &ProcessMatrix, tol: f64) -> Result<bool> {
    Ok(membership(w.op())?.comb_ba <= tol)
}

pub fn pauli(k: usize) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        _ => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Kronecker product of Paulis, first factor most significant.
pub fn pauli_string(ks: &[usize]) -> CMatrix {
    ks.iter()
        .fold(CMatrix::identity(1, 1), |acc, &k| acc.kronecker(&pauli(k)))
}

/// (1/4)[1 + (σz^AO σz^BI + σz^AI σx^BI σz^BO)/√2] on four qubits.
pub fn make_cns_example() -> ProcessMatrix {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let m = CMatrix::identity(16, 16)
        + (pauli_string(&[0, 3, 3, 0]) + pauli_string(&[3, 0, 1, 3])).scale(c);
    let op = HermitianOperator::from_parts(PartyDims::qubits().labels(), m.scale(0.25))
        .expect("constant operator is Hermitian");
    ProcessMatrix {
        op,
        dims: PartyDims::qubits(),
    }
}

/// All 256 conjugations (σi ⊗ σj ⊗ σk ⊗ σl) W (…)†, index order i,j,k,l with
/// l fastest; the first element is W itself.
pub fn pauli_twirl_family(w: &ProcessMatrix) -> Result<Vec<ProcessMatrix>> {
    if w.dims != PartyDims::qubits() {
        return Err(Error::DimensionMismatch(format!(
            "Pauli family needs qubit systems, got {:?}",
            w.dims
        )));
    }
    let mut out = Vec::with_capacity(256);
    for idx in 0..256usize {
        let ks = [idx >> 6 & 3, idx >> 4 & 3, idx >> 2 & 3, idx & 3];
        let p = pauli_string(&ks);
        out.push(ProcessMatrix {
            op: w.op.conjugate_by(&p)?,
            dims: w.dims,
        });
    }
    Ok(out)
}

/// Random full-rank process matrix: the maximally mixed one plus a random
/// traceless element of the image of L_V, scaled to a fraction in
/// [0.5, 0.95] of the largest step keeping positivity.
pub fn random_process_matrix<R: Rng + ?Sized>(
    dims: PartyDims,
    rng: &mut R,
) -> Result<ProcessMatrix> {
    let labels = dims.labels();
    let n = dims.total();
    let p = HermitianOperator::from_parts(labels.clone(), random::hermitian(n, rng))?;
    let lp = project_lv(&p)?;
    let id = HermitianOperator::identity(labels)?;
    let t = lp.sub(&id.scale(lp.trace() / n as f64))?;
    let base = dims.normalization() / n as f64;
    let min = t.min_eigenvalue()?;
    let u: f64 = rng.random_range(0.5..0.95);
    let s = if min < -1e-14 { u * base / -min } else { 0.0 };
    let w = id.scale(base).add(&t.scale(s))?;
    Ok(ProcessMatrix { op: w, dims })
}

/// Random A≺B comb: a state on A_I ⊗ M followed by a channel A_O ⊗ M → B_I,
/// with memory dimension d_AI d_AO.
pub fn random_comb_ab<R: Rng + ?Sized>(dims: PartyDims, rng: &mut R) -> Result<ProcessMatrix> {
    let dm = dims.ai * dims.ao;
    let rho = LabelledOperator::new(
        vec![SystemLabel::new(AI, dims.ai), SystemLabel::new("M", dm)],
        random::state(dims.ai * dm, rng),
    )?;
    let kraus = random::channel_kraus(dims.ao * dm, dims.bi, dims.ao * dm, rng);
    let chan = crate::networks::choi_of_kraus(
        &kraus,
        vec![SystemLabel::new(AO, dims.ao), SystemLabel::new("M", dm)],
        vec![SystemLabel::new(BI, dims.bi)],
    )?;
    let wp = link_product(&rho, chan.op().as_operator())?;
    let id = LabelledOperator::identity(vec![SystemLabel::new(BO, dims.bo)])?;
    finish(crate::tensor::tensor(&wp, &id)?)
}

pub fn random_comb_ba<R: Rng + ?Sized>(dims: PartyDims, rng: &mut R) -> Result<ProcessMatrix> {
    let w = random_comb_ab(dims.swapped(), rng)?;
    let renamed = rename(w.op.as_operator(), swap_name)?;
    finish(renamed)
}

/// Random free process matrix ρ ⊗ 1 with ρ a random mixed state.
pub fn random_free<R: Rng + ?Sized>(dims: PartyDims, rng: &mut R) -> Result<ProcessMatrix> {
    let rho = HermitianOperator::from_parts(
        vec![SystemLabel::new(AI, dims.ai), SystemLabel::new(BI, dims.bi)],
        random::state(dims.ai * dims.bi, rng),
    )?;
    make_free(&rho, dims.ao, dims.bo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn cns_example_is_valid() {
        let w = make_cns_example();
        assert!((w.op().trace() - 4.0).abs() < 1e-12);
        assert!(w.op().min_eigenvalue().unwrap() >= -1e-12);
        assert!(validate_def1(w.op(), 1e-9).unwrap().valid);
        assert!(validate_def2(w.op(), 1e-9).unwrap().valid);
        assert!(project_lv(w.op()).unwrap().max_abs_diff(w.op()).unwrap() < 1e-12);
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let w = ProcessMatrix::maximally_mixed(PartyDims::qubits()).unwrap();
        assert!(validate_def1(w.op(), 1e-12).unwrap().valid);
        let m = membership(w.op()).unwrap();
        assert!(m.free < 1e-14 && m.comb_ab < 1e-14 && m.comb_ba < 1e-14);
    }

    #[test]
    fn random_generators_land_in_their_classes() {
        let mut r = rng();
        for dims in [PartyDims::qubits(), PartyDims::new(2, 3, 2, 2)] {
            let w = random_process_matrix(dims, &mut r).unwrap();
            assert!(validate_def2(w.op(), 1e-9).unwrap().valid);
            let c = random_comb_ab(dims, &mut r).unwrap();
            assert!(validate_def1(c.op(), 1e-9).unwrap().valid);
            assert!(membership(c.op()).unwrap().comb_ab < 1e-12);
            let c = random_comb_ba(dims, &mut r).unwrap();
            assert!(validate_def1(c.op(), 1e-9).unwrap().valid);
            assert!(membership(c.op()).unwrap().comb_ba < 1e-12);
            let f = random_free(dims, &mut r).unwrap();
            let m = membership(f.op()).unwrap();
            assert!(m.free < 1e-12 && m.comb_ab < 1e-12 && m.comb_ba < 1e-12);
        }
    }

    #[test]
    fn free_from_pure_product() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(1.0, 0.0);
        let rho = HermitianOperator::from_parts(
            vec![SystemLabel::new(AI, 2), SystemLabel::new(BI, 2)],
            m,
        )
        .unwrap();
        let w = make_free(&rho, 2, 2).unwrap();
        // |00><00|_{AI BI} ⊗ 1_{AO BO} in AI AO BI BO order
        for i in 0..16 {
            let ai = i >> 3 & 1;
            let bi = i >> 1 & 1;
            let want = if ai == 0 && bi == 0 { 1.0 } else { 0.0 };
            assert_eq!(w.data()[(i, i)].re, want);
        }
        let bad = rho.scale(2.0);
        assert!(matches!(make_free(&bad, 2, 2), Err(Error::NotState(_))));
    }

    #[test]
    fn comb_constructor_checks_marginal() {
        // ρ_AI ⊗ |1⟩⟩⟨⟨1|_{AO BI} is a comb
        let rho = HermitianOperator::from_parts(
            vec![SystemLabel::new(AI, 2)],
            CMatrix::from_diagonal_element(2, 2, C64::new(0.5, 0.0)),
        )
        .unwrap();
        let id_choi = crate::networks::choi_of_unitary(
            &CMatrix::identity(2, 2),
            vec![SystemLabel::new(AO, 2)],
            vec![SystemLabel::new(BI, 2)],
        )
        .unwrap();
        let wp = rho.tensor(id_choi.op()).unwrap();
        let w = make_comb_ab(&wp, 2, 1e-8).unwrap();
        assert!(membership(w.op()).unwrap().comb_ab < 1e-14);
        let s = swap_parties(&w).unwrap();
        assert!(membership(s.op()).unwrap().comb_ba < 1e-14);
        assert_eq!(swap_parties(&s).unwrap(), w);
        // ρ_AI ⊗ |0⟩⟨0|_AO ⊗ 1_BI violates tr_BI W' = W'' ⊗ 1_AO
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = C64::new(2.0, 0.0);
        let bad = rho
            .tensor(&HermitianOperator::from_parts(vec![SystemLabel::new(AO, 2)], p).unwrap())
            .unwrap()
            .tensor(
                &HermitianOperator::identity(vec![SystemLabel::new(BI, 2)])
                    .unwrap()
                    .scale(0.5),
            )
            .unwrap();
        assert!(make_comb_ab(&bad, 2, 1e-8).is_err());
    }

    #[test]
    fn pauli_family_average() {
        let w = make_cns_example();
        let fam = pauli_twirl_family(&w).unwrap();
        assert_eq!(fam.len(), 256);
        assert_eq!(fam[0], w);
        let mut acc = CMatrix::zeros(16, 16);
        for m in &fam {
            acc += m.data();
        }
        let avg = acc.scale(1.0 / 256.0) - CMatrix::identity(16, 16).scale(0.25);
        assert!(crate::tensor::max_abs(&avg) < 1e-12);
    }

    #[test]
    fn random_psd_is_not_valid() {
        let mut r = rng();
        let m = random::psd(16, 16, &mut r);
        let t = m.trace().re;
        let x =
            HermitianOperator::from_parts(PartyDims::qubits().labels(), m.scale(4.0 / t)).unwrap();
        assert!(!validate_def1(&x, 1e-8).unwrap().valid);
        assert!(!validate_def2(&x, 1e-8).unwrap().valid);
    }

    #[test]
    fn wrong_labels_rejected() {
        let x = HermitianOperator::identity(vec![SystemLabel::new("X", 2)]).unwrap();
        assert!(project_lv(&x).is_err());
        assert!(ProcessMatrix::new(x, 1e-9).is_err());
    }
}
