//! Sampling checks of the duality between process matrices and
//! non-signalling channels: tr(X W) = 1 for every process matrix W exactly
//! when X satisfies the linear non-signalling conditions, and the base norm
//! of the process-matrix cone is the largest ‖√N x √N‖₁ over non-signalling N.
//!
//! Sampling can refute but not prove these statements; the semidefinite
//! programs in [`crate::discrimination`] carry the exact claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::networks::{choi_of_kraus, ns_residuals, AI, AO, BI, BO};
use crate::process::{
    make_cns_example, project_lv, random_comb_ab, random_comb_ba, random_free,
    random_process_matrix, PartyDims, ProcessMatrix,
};
use crate::random;
use crate::tensor::{
    sqrt_psd, trace_norm, CMatrix, HermitianOperator, LabelledOperator, SystemLabel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NsKind {
    /// Φ_A ⊗ Φ_B with channels from Haar-random isometries
    Product,
    /// λ N_1 + (1 − λ) N_2 with λ ∈ [−1, 2], kept only when positive
    Affine,
}

fn local_channel<R: Rng + ?Sized>(
    input: &str,
    output: &str,
    din: usize,
    dout: usize,
    rng: &mut R,
) -> Result<LabelledOperator> {
    let env = rng.random_range(1..=din * dout);
    let env = env.max(din.div_ceil(dout));
    let ks = random::channel_kraus(din, dout, env, rng);
    Ok(choi_of_kraus(
        &ks,
        vec![SystemLabel::new(input, din)],
        vec![SystemLabel::new(output, dout)],
    )?
    .into_op()
    .into_operator())
}

/// Choi matrix of a random product channel A_I ⊗ B_I → A_O ⊗ B_O.
pub fn sample_product_ns<R: Rng + ?Sized>(
    dims: PartyDims,
    rng: &mut R,
) -> Result<HermitianOperator> {
    let a = local_channel(AI, AO, dims.ai, dims.ao, rng)?;
    let b = local_channel(BI, BO, dims.bi, dims.bo, rng)?;
    let n = crate::tensor::tensor(&a, &b)?;
    HermitianOperator::symmetrized(n).permute(&[AI, AO, BI, BO])
}

/// Affine attempts before falling back to a product sample.
const AFFINE_ATTEMPTS: usize = 16;

/// A random non-signalling Choi matrix: a product channel, or with
/// probability ½ an affine combination of two that stays positive.
pub fn sample_ns<R: Rng + ?Sized>(
    dims: PartyDims,
    rng: &mut R,
) -> Result<(NsKind, HermitianOperator)> {
    if rng.random_bool(0.5) {
        for _ in 0..AFFINE_ATTEMPTS {
            let n1 = sample_product_ns(dims, rng)?;
            let n2 = sample_product_ns(dims, rng)?;
            let lam: f64 = rng.random_range(-1.0..=2.0);
            let x = n1.scale(lam).add(&n2.scale(1.0 - lam))?;
            if x.min_eigenvalue()? >= -1e-12 {
                return Ok((NsKind::Affine, x));
            }
        }
    }
    Ok((NsKind::Product, sample_product_ns(dims, rng)?))
}

fn sample_process<R: Rng + ?Sized>(
    k: usize,
    dims: PartyDims,
    rng: &mut R,
) -> Result<ProcessMatrix> {
    match k % 5 {
        0 if dims == PartyDims::qubits() => Ok(make_cns_example()),
        1 => random_comb_ab(dims, rng),
        2 => random_comb_ba(dims, rng),
        3 => random_free(dims, rng),
        _ => random_process_matrix(dims, rng),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ForwardSample {
    pub kind: NsKind,
    /// |tr(X W) − 1|
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConverseSample {
    /// residuals (trace preservation, Alice, Bob) of X = 1/(d_AO d_BO) + ε(1 − L_V)(R)
    pub trace_preservation: f64,
    pub alice_marginal: f64,
    pub bob_marginal: f64,
    /// |tr(X W) − 1| for a random process matrix W
    pub normalization: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FalsificationSample {
    /// largest |tr(X W) − 1| found for a signalling X
    pub max_deviation: f64,
    pub found: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub samples: usize,
    pub seed: u64,
    pub forward: Vec<ForwardSample>,
    pub converse: Vec<ConverseSample>,
    pub falsification: Vec<FalsificationSample>,
    /// largest non-signalling residual of midpoints of consecutive samples
    pub convexity_residual: f64,
    pub max_forward_residual: f64,
    pub max_converse_residual: f64,
    pub passed: bool,
}

/// Forward residual tolerance and converse marginal tolerance.
pub const FORWARD_TOL: f64 = 1e-9;
pub const CONVERSE_TOL: f64 = 1e-8;

/// Deviation from one that counts as a successful falsification.
pub const FALSIFY_MIN: f64 = 1e-6;

/// A channel that sends A_I to B_O and B_I to A_O, mixed with the
/// depolarizing channel so that it is full rank.
fn signalling_choi(dims: PartyDims) -> Result<HermitianOperator> {
    let d = dims;
    let f = |x: &CMatrix| -> CMatrix {
        // x on (AI, BI) ↦ swap into (AO, BO), requires d_AI = d_BO, d_BI = d_AO
        let (a, b) = (d.ai, d.bi);
        CMatrix::from_fn(b * a, b * a, |r, c| {
            let (r1, r2) = (r / a, r % a);
            let (c1, c2) = (c / a, c % a);
            x[(r2 * b + r1, c2 * b + c1)]
        })
    };
    let labels_in = vec![SystemLabel::new(AI, d.ai), SystemLabel::new(BI, d.bi)];
    let labels_out = vec![SystemLabel::new(AO, d.bi), SystemLabel::new(BO, d.ai)];
    let swap = crate::networks::choi_of_map(f, labels_in, labels_out)?;
    let swap = HermitianOperator::symmetrized(swap).permute(&[AI, AO, BI, BO])?;
    let n = d.total() as f64;
    let dep =
        HermitianOperator::identity(swap.labels().to_vec())?.scale(d.ai as f64 * d.bi as f64 / n);
    swap.scale(0.5).add(&dep.scale(0.5))
}

/// Sampling report for the dual-base statement. `dims` must have
/// d_AI = d_BO and d_BI = d_AO for the falsification probe; otherwise that
/// probe is skipped.
pub fn verify_dual_base(n_samples: usize, seed: u64, dims: PartyDims) -> Result<ConeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward = Vec::with_capacity(n_samples);
    let mut prev: Option<HermitianOperator> = None;
    let mut convexity: f64 = 0.0;
    for k in 0..n_samples {
        let (kind, x) = sample_ns(dims, &mut rng)?;
        let w = sample_process(k, dims, &mut rng)?;
        let residual = (w.probability(&x)? - 1.0).abs();
        forward.push(ForwardSample { kind, residual });
        if let Some(p) = prev {
            let mid = p.add(&x)?.scale(0.5);
            let (tp, a, b) = ns_residuals(mid.as_operator())?;
            convexity = convexity.max(tp).max(a).max(b).max(-mid.min_eigenvalue()?);
        }
        prev = Some(x);
    }

    let labels = dims.labels();
    let n = dims.total();
    let mut converse = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let r = HermitianOperator::from_parts(labels.clone(), random::hermitian(n, &mut rng))?;
        let perp = r.sub(&project_lv(&r)?)?;
        let eps: f64 = rng.random_range(0.01..1.0);
        let x = HermitianOperator::identity(labels.clone())?
            .scale(1.0 / dims.normalization())
            .add(&perp.scale(eps))?;
        let (tp, a, b) = ns_residuals(x.as_operator())?;
        let w = sample_process(k, dims, &mut rng)?;
        converse.push(ConverseSample {
            trace_preservation: tp,
            alice_marginal: a,
            bob_marginal: b,
            normalization: (w.probability(&x)? - 1.0).abs(),
        });
    }

    let mut falsification = Vec::new();
    if dims.ai == dims.bo && dims.bi == dims.ao && n_samples > 0 {
        let x = signalling_choi(dims)?;
        let mut best: f64 = 0.0;
        for k in 0..n_samples.max(5) {
            let w = sample_process(k, dims, &mut rng)?;
            best = best.max((w.probability(&x)? - 1.0).abs());
        }
        falsification.push(FalsificationSample {
            max_deviation: best,
            found: best > FALSIFY_MIN,
        });
    }

    let max_forward_residual = forward.iter().map(|s| s.residual).fold(0.0, f64::max);
    let max_converse_residual = converse
        .iter()
        .map(|s| {
            s.trace_preservation
                .max(s.alice_marginal)
                .max(s.bob_marginal)
                .max(s.normalization)
        })
        .fold(0.0, f64::max);
    let passed = max_forward_residual <= FORWARD_TOL
        && max_converse_residual <= CONVERSE_TOL
        && convexity <= 1e-10
        && falsification.iter().all(|f| f.found);
    Ok(ConeReport {
        samples: n_samples,
        seed,
        forward,
        converse,
        falsification,
        convexity_residual: convexity,
        max_forward_residual,
        max_converse_residual,
        passed,
    })
}

/// ‖√N x √N‖₁ for a positive N on the same labels as x.
pub fn conjugated_trace_norm(x: &HermitianOperator, n: &HermitianOperator) -> Result<f64> {
    let n = n.permute(&x.as_operator().label_names())?;
    let s = sqrt_psd(&n)?;
    let m = s.data() * x.data() * s.data();
    trace_norm(&HermitianOperator::symmetrized(LabelledOperator::new(
        x.labels().to_vec(),
        m,
    )?))
}

/// max over `n_samples` random non-signalling N (and the `extra`
/// candidates) of ‖√N x √N‖₁; a lower bound on the base norm of x.
pub fn base_norm_sampled_lower_bound<R: Rng + ?Sized>(
    x: &HermitianOperator,
    n_samples: usize,
    extra: &[HermitianOperator],
    rng: &mut R,
) -> Result<f64> {
    let dims = PartyDims::of(x.as_operator())?;
    let mut best: f64 = 0.0;
    for n in extra {
        best = best.max(conjugated_trace_norm(x, n)?);
    }
    for _ in 0..n_samples {
        let (_, n) = sample_ns(dims, rng)?;
        best = best.max(conjugated_trace_norm(x, &n)?);
    }
    Ok(best)
}
