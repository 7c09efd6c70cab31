//! Explicit protocol that perfectly distinguishes the comb
//! W^{A≺B} = ρ ⊗ |U⟩⟩⟨⟨U| ⊗ 1 from its party-swapped twin W^{B≺A}.
//!
//! Both parties measure in the eigenbasis {x_i} of ρ, record the outcome in
//! a classical register and re-prepare Ū|x_i⟩; Bob first shifts the basis
//! cyclically with P_σ. The register pair ends in (i, i+1) for A≺B and in
//! (i+1, i+1) for B≺A, so the diagonal effect Q_1 = Σ|ii⟩⟨ii| tells the
//! orders apart. All index arithmetic is mod d.

use rand::Rng;
use serde::Serialize;

use crate::discrimination::Strategy;
use crate::error::{Error, Result};
use crate::networks::{choi_of_kraus, ChoiMatrix, AI, AO, BI, BO};
use crate::process::{swap_parties, PartyDims, ProcessMatrix, PROCESS_TOL};
use crate::random;
use crate::tensor::{
    max_abs, permute_systems, tensor, vectorize, CMatrix, HermitianOperator, LabelledOperator,
    SystemLabel, C64,
};

/// Register names carrying the classical outcomes.
pub const RA: &str = "RA";
pub const RB: &str = "RB";

#[derive(Clone, Debug)]
pub struct PerfectPair {
    pub w_ab: ProcessMatrix,
    pub w_ba: ProcessMatrix,
    pub rho: CMatrix,
    pub u: CMatrix,
    /// columns are the eigenvectors x_i of ρ (ascending eigenvalues)
    pub v: CMatrix,
    pub lambda: Vec<f64>,
    /// Σ |x_{i+1}⟩⟨x_i|
    pub p_sigma: CMatrix,
}

impl PerfectPair {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }
}

fn is_unitary(u: &CMatrix) -> bool {
    let n = u.nrows();
    u.ncols() == n && max_abs(&(u.adjoint() * u - CMatrix::identity(n, n))) < 1e-10
}

/// Builds ρ_AI ⊗ |U⟩⟩⟨⟨U|_{AO BI} ⊗ 1_BO and its swap.
pub fn make_perfect_pair(rho: &CMatrix, u: &CMatrix) -> Result<PerfectPair> {
    let d = rho.nrows();
    if rho.ncols() != d || u.nrows() != d || d == 0 {
        return Err(Error::DimensionMismatch(format!(
            "ρ is {}x{}, U is {}x{}",
            rho.nrows(),
            rho.ncols(),
            u.nrows(),
            u.ncols()
        )));
    }
    if !is_unitary(u) {
        return Err(Error::Precondition("U is not unitary".into()));
    }
    let rho_op = HermitianOperator::from_parts(vec![SystemLabel::new(AI, d)], rho.clone())?;
    let eig = rho_op.eig()?;
    if eig.values[0] < -1e-9 || (rho_op.trace() - 1.0).abs() > 1e-9 {
        return Err(Error::NotState(format!(
            "min eigenvalue {:.3e}, trace {}",
            eig.values[0],
            rho_op.trace()
        )));
    }
    let vu = vectorize(u);
    let link = HermitianOperator::from_parts(
        vec![SystemLabel::new(AO, d), SystemLabel::new(BI, d)],
        &vu * vu.adjoint(),
    )?;
    let w = rho_op
        .tensor(&link)?
        .tensor(&HermitianOperator::identity(vec![SystemLabel::new(BO, d)])?)?;
    let w_ab = ProcessMatrix::new(w, PROCESS_TOL)?;
    let w_ba = swap_parties(&w_ab)?;
    let v = eig.vectors.clone();
    let mut p_sigma = CMatrix::zeros(d, d);
    for i in 0..d {
        let next = v.column((i + 1) % d);
        p_sigma += next * v.column(i).adjoint();
    }
    Ok(PerfectPair {
        w_ab,
        w_ba,
        rho: rho_op.data().clone(),
        u: u.clone(),
        v,
        lambda: eig.values,
        p_sigma,
    })
}

/// Random full-rank ρ and Haar-random U in dimension d.
pub fn random_perfect_pair<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PerfectPair> {
    let rho = random::state(d, rng);
    let u = random::unitary(d, rng);
    make_perfect_pair(&rho, &u)
}

/// Kraus operators |i⟩_R ⊗ Ū|x_i⟩⟨x_i| P of the measure-and-reprepare map,
/// as (d·d)×d matrices with the register as the leading output factor.
fn kraus(pp: &PerfectPair, pre: &CMatrix) -> Vec<CMatrix> {
    let d = pp.dim();
    let ubar = pp.u.conjugate();
    (0..d)
        .map(|i| {
            let x = pp.v.column(i);
            let out = &ubar * x;
            let k = &out * x.adjoint() * pre;
            CMatrix::from_fn(d * d, d, |r, c| {
                if r / d == i {
                    k[(r % d, c)]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

fn alice_kraus(pp: &PerfectPair) -> Vec<CMatrix> {
    kraus(pp, &CMatrix::identity(pp.dim(), pp.dim()))
}

fn bob_kraus(pp: &PerfectPair) -> Vec<CMatrix> {
    kraus(pp, &pp.p_sigma)
}

/// Φ_A = (I ⊗ Ad_Ū) ∘ Δ_V as a channel A_I → R_A ⊗ A_O.
pub fn alice_channel(pp: &PerfectPair) -> Result<ChoiMatrix> {
    let d = pp.dim();
    choi_of_kraus(
        &alice_kraus(pp),
        vec![SystemLabel::new(AI, d)],
        vec![SystemLabel::new(RA, d), SystemLabel::new(AO, d)],
    )
}

/// Φ_B = (I ⊗ Ad_Ū) ∘ Δ_V ∘ Ad_{P_σ} as a channel B_I → R_B ⊗ B_O.
pub fn bob_channel(pp: &PerfectPair) -> Result<ChoiMatrix> {
    let d = pp.dim();
    choi_of_kraus(
        &bob_kraus(pp),
        vec![SystemLabel::new(BI, d)],
        vec![SystemLabel::new(RB, d), SystemLabel::new(BO, d)],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    AB,
    BA,
}

/// Applies Kraus operators to the last tensor factor (of dimension
/// `k[0].ncols()`) of a state on `keep ⊗ X`.
fn apply_last(state: &CMatrix, keep: usize, kraus: &[CMatrix]) -> CMatrix {
    let id = CMatrix::identity(keep, keep);
    let mut out: Option<CMatrix> = None;
    for k in kraus {
        let big = id.kronecker(k);
        let term = &big * state * big.adjoint();
        out = Some(match out {
            Some(acc) => acc + term,
            None => term,
        });
    }
    out.expect("non-empty Kraus set")
}

fn trace_last(state: &CMatrix, keep: usize, traced: usize) -> CMatrix {
    CMatrix::from_fn(keep, keep, |r, c| {
        (0..traced)
            .map(|t| state[(r * traced + t, c * traced + t)])
            .sum()
    })
}

/// Runs the protocol on the comb of the given order by composing channels
/// on density matrices: preparation of ρ, first party, the transfer channel
/// Ad_{Uᵀ} into the second party's input, second party, discard of the last
/// output. Returns the state of the registers (R_A, R_B).
pub fn simulate_order(pp: &PerfectPair, order: Order) -> Result<CMatrix> {
    let d = pp.dim();
    let transfer = [pp.u.transpose()];
    let (first, second) = match order {
        Order::AB => (alice_kraus(pp), bob_kraus(pp)),
        Order::BA => (bob_kraus(pp), alice_kraus(pp)),
    };
    // first register ⊗ first output
    let s1 = apply_last(&pp.rho, 1, &first);
    let s2 = apply_last(&s1, d, &transfer);
    // first register ⊗ second register ⊗ second output
    let s3 = apply_last(&s2, d, &second);
    let regs = trace_last(&s3, d * d, d);
    Ok(match order {
        Order::AB => regs,
        Order::BA => {
            let op = LabelledOperator::new(
                vec![SystemLabel::new(RB, d), SystemLabel::new(RA, d)],
                regs,
            )?;
            permute_systems(&op, &[RA, RB])?.into_data()
        }
    })
}

/// Q_0 = 1 − Q_1 and Q_1 = Σ_i |ii⟩⟨ii| on (R_A, R_B).
pub fn register_effects(d: usize) -> (CMatrix, CMatrix) {
    let mut q1 = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        q1[(i * d + i, i * d + i)] = C64::new(1.0, 0.0);
    }
    (CMatrix::identity(d * d, d * d) - &q1, q1)
}

/// ½tr(σ^{A≺B} Q_0) + ½tr(σ^{B≺A} Q_1) from the simulated register states.
pub fn perfect_probability(pp: &PerfectPair) -> Result<f64> {
    let (q0, q1) = register_effects(pp.dim());
    let ab = simulate_order(pp, Order::AB)?;
    let ba = simulate_order(pp, Order::BA)?;
    Ok(0.5 * (&ab * q0).trace().re + 0.5 * (&ba * q1).trace().re)
}

/// Strategy operators of Φ_A ⊗ Φ_B followed by {Q_0, Q_1}:
/// S_k = Σ_{(a,b)} ⟨ab|Q_k|ab⟩ (M^A_a ⊗ M^B_b)ᵀ with M the Choi matrices of
/// the conditional maps, on labels AI, AO, BI, BO.
pub fn strategy_operators(pp: &PerfectPair) -> Result<Strategy> {
    let d = pp.dim();
    let one = |kr: &CMatrix, inp: &str, out: &str| -> Result<LabelledOperator> {
        // conditional Kraus operator of outcome a: rows of register a
        Ok(choi_of_kraus(
            std::slice::from_ref(kr),
            vec![SystemLabel::new(inp, d)],
            vec![SystemLabel::new(out, d)],
        )?
        .into_op()
        .into_operator())
    };
    let cond = |ks: &[CMatrix], a: usize| CMatrix::from_fn(d, d, |r, c| ks[a][(a * d + r, c)]);
    let ak = alice_kraus(pp);
    let bk = bob_kraus(pp);
    let (_, q1) = register_effects(d);
    let labels = PartyDims::uniform(d).labels();
    let mut s0 = LabelledOperator::zeros(labels.clone())?;
    let mut s1 = LabelledOperator::zeros(labels)?;
    for a in 0..d {
        let ma = one(&cond(&ak, a), AI, AO)?;
        for b in 0..d {
            let mb = one(&cond(&bk, b), BI, BO)?;
            let m = permute_systems(&tensor(&ma, &mb)?, &[AI, AO, BI, BO])?.transpose();
            if q1[(a * d + b, a * d + b)].re > 0.5 {
                s1 = s1.add(&m)?;
            } else {
                s0 = s0.add(&m)?;
            }
        }
    }
    Ok(Strategy {
        s0: HermitianOperator::symmetrized(s0),
        s1: HermitianOperator::symmetrized(s1),
    })
}

/// Register distribution diag(σ) indexed as (i, j) ↦ probability.
pub fn register_distribution(sigma: &CMatrix) -> Vec<Vec<f64>> {
    let n = sigma.nrows();
    let d = (n as f64).sqrt().round() as usize;
    (0..d)
        .map(|i| (0..d).map(|j| sigma[(i * d + j, i * d + j)].re).collect())
        .collect()
}

/// ‖σ^{A≺B} σ^{B≺A}‖_max, zero when the supports are disjoint.
pub fn support_overlap(pp: &PerfectPair) -> Result<f64> {
    let ab = simulate_order(pp, Order::AB)?;
    let ba = simulate_order(pp, Order::BA)?;
    Ok(max_abs(&(ab * ba)))
}
