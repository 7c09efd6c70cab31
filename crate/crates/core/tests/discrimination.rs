use pmdisc::cone::sample_product_ns;
use pmdisc::discrimination::*;
use pmdisc::error::Error;
use pmdisc::process::*;
use pmdisc::random;
use pmdisc::tensor::{CMatrix, HermitianOperator, SystemLabel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Σ|λ| from nalgebra's Hermitian eigensolver.
fn spectral_trace_norm(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum()
}

fn input_state(d: usize, r: &mut ChaCha8Rng) -> HermitianOperator {
    HermitianOperator::from_parts(
        vec![SystemLabel::new("AI", d), SystemLabel::new("BI", d)],
        random::state(d * d, r),
    )
    .unwrap()
}

fn check_certificate(res: &DiscriminationResult, w0: &ProcessMatrix, w1: &ProcessMatrix) {
    let dims = w0.dims();
    assert!((res.certificate.value(dims) - res.p_succ).abs() < 1e-7);
    assert!(res.certificate.slack(w0).unwrap() > -1e-7);
    assert!(res.certificate.slack(w1).unwrap() > -1e-7);
    assert!(res.strategy.feasibility(1e-7).unwrap().nonsignalling);
    let replay = res.strategy.probability(w0, w1).unwrap();
    assert!(
        (replay - res.p_succ).abs() < 1e-7,
        "{replay} vs {}",
        res.p_succ
    );
    assert!(
        res.stats.gap <= 1e-7 && res.stats.residual() <= 1e-8,
        "{:?}",
        res.stats
    );
}

#[test]
fn identical_operands_give_one_half() {
    let mut r = rng(1);
    let w = random_process_matrix(PartyDims::qubits(), &mut r).unwrap();
    let res = p_succ(&w, &w).unwrap();
    assert!((res.p_succ - 0.5).abs() < 1e-7);
    check_certificate(&res, &w, &w);
}

#[test]
fn success_probability_is_symmetric() {
    let mut r = rng(2);
    let dims = PartyDims::qubits();
    for _ in 0..3 {
        let a = random_process_matrix(dims, &mut r).unwrap();
        let b = random_comb_ba(dims, &mut r).unwrap();
        let x = p_succ(&a, &b).unwrap();
        let y = p_succ(&b, &a).unwrap();
        assert!((x.p_succ - y.p_succ).abs() < 1e-7);
        check_certificate(&x, &a, &b);
    }
}

#[test]
fn free_pairs_reduce_to_state_discrimination() {
    let mut r = rng(3);
    for _ in 0..5 {
        let rho = input_state(2, &mut r);
        let sigma = input_state(2, &mut r);
        let oracle = 0.5 + 0.25 * spectral_trace_norm(&(rho.data() - sigma.data()));
        let w0 = make_free(&rho, 2, 2).unwrap();
        let w1 = make_free(&sigma, 2, 2).unwrap();
        let res = p_succ(&w0, &w1).unwrap();
        assert!(
            (res.p_succ - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            res.p_succ
        );
        assert!((p_succ_free(&rho, &sigma).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn free_pairs_with_unequal_dims() {
    let mut r = rng(4);
    let labels = vec![SystemLabel::new("AI", 2), SystemLabel::new("BI", 3)];
    let rho = HermitianOperator::from_parts(labels.clone(), random::state(6, &mut r)).unwrap();
    let sigma = HermitianOperator::from_parts(labels, random::state(6, &mut r)).unwrap();
    let w0 = make_free(&rho, 1, 2).unwrap();
    let w1 = make_free(&sigma, 1, 2).unwrap();
    let oracle = 0.5 + 0.25 * spectral_trace_norm(&(rho.data() - sigma.data()));
    assert!((p_succ(&w0, &w1).unwrap().p_succ - oracle).abs() < 1e-6);
}

#[test]
fn cns_against_maximally_mixed_has_feasible_strategy() {
    let w0 = make_cns_example();
    let w1 = ProcessMatrix::maximally_mixed(PartyDims::qubits()).unwrap();
    let res = p_succ(&w0, &w1).unwrap();
    assert!(res.p_succ > 0.5 && res.p_succ <= 1.0 + 1e-9);
    check_certificate(&res, &w0, &w1);
}

#[test]
fn base_norm_of_difference_is_affine_in_success_probability() {
    let mut r = rng(5);
    let dims = PartyDims::qubits();
    for _ in 0..3 {
        let a = random_comb_ab(dims, &mut r).unwrap();
        let b = random_process_matrix(dims, &mut r).unwrap();
        let p = p_succ(&a, &b).unwrap().p_succ;
        let bn = base_norm(&a.op().sub(b.op()).unwrap()).unwrap();
        assert!((4.0 * p - 2.0 - bn).abs() < 1e-6);
    }
}

#[test]
fn sampled_products_never_beat_the_program() {
    let mut r = rng(6);
    let dims = PartyDims::qubits();
    let w0 = random_comb_ab(dims, &mut r).unwrap();
    let w1 = random_comb_ba(dims, &mut r).unwrap();
    let p = p_succ(&w0, &w1).unwrap().p_succ;
    let diff = w0.op().sub(w1.op()).unwrap();
    for _ in 0..30 {
        let n = sample_product_ns(dims, &mut r).unwrap();
        let lb = 0.5 + 0.25 * pmdisc::cone::conjugated_trace_norm(&diff, &n).unwrap();
        assert!(lb <= p + 1e-6, "{lb} > {p}");
    }
}

#[test]
fn separable_distance_below_comb_distances() {
    let mut r = rng(7);
    for _ in 0..2 {
        let w = random_process_matrix(PartyDims::qubits(), &mut r).unwrap();
        let sep = distance_to_class(&w, ProcessClassTag::Separable).unwrap();
        let ab = distance_to_class(&w, ProcessClassTag::CombAB).unwrap();
        let ba = distance_to_class(&w, ProcessClassTag::CombBA).unwrap();
        let fr = distance_to_class(&w, ProcessClassTag::Free).unwrap();
        assert!(sep.distance <= ab.distance.min(ba.distance) + 1e-6);
        assert!(ab.distance.max(ba.distance) <= fr.distance + 1e-6);
        for d in [&sep, &ab, &ba, &fr] {
            assert!(d.stats.gap <= 1e-7 && d.stats.residual() <= 1e-8);
            assert!(validate_def1(d.closest.op(), 1e-7).unwrap().valid);
        }
        let mix = sep.mixing.unwrap();
        assert!((-1e-9..=1.0 + 1e-9).contains(&mix));
    }
}

#[test]
fn members_are_at_distance_zero() {
    let mut r = rng(8);
    let dims = PartyDims::qubits();
    let f = random_free(dims, &mut r).unwrap();
    let ab = random_comb_ab(dims, &mut r).unwrap();
    let ba = random_comb_ba(dims, &mut r).unwrap();
    assert!(
        distance_to_class(&f, ProcessClassTag::Free)
            .unwrap()
            .distance
            < 1e-6
    );
    assert!(
        distance_to_class(&ab, ProcessClassTag::CombAB)
            .unwrap()
            .distance
            < 1e-6
    );
    assert!(
        distance_to_class(&ba, ProcessClassTag::CombBA)
            .unwrap()
            .distance
            < 1e-6
    );
    let mid = ProcessMatrix::new(ab.op().add(ba.op()).unwrap().scale(0.5), 1e-9).unwrap();
    let sep = distance_to_class(&mid, ProcessClassTag::Separable).unwrap();
    assert!(sep.distance < 1e-6);
}

#[test]
fn distance_closest_member_is_a_class_member() {
    let w = make_cns_example();
    let d = distance_to_class(&w, ProcessClassTag::CombAB).unwrap();
    assert!(is_comb_ab(&d.closest, 1e-7).unwrap());
    // the reported distance is attained by the closest member
    let gap = base_norm(&w.op().sub(d.closest.op()).unwrap()).unwrap();
    assert!((gap - d.distance).abs() < 1e-6, "{gap} vs {}", d.distance);
}

#[test]
fn distance_is_covariant_under_party_swap() {
    let mut r = rng(9);
    let w = random_process_matrix(PartyDims::qubits(), &mut r).unwrap();
    let s = swap_parties(&w).unwrap();
    let a = distance_to_class(&w, ProcessClassTag::CombAB)
        .unwrap()
        .distance;
    let b = distance_to_class(&s, ProcessClassTag::CombBA)
        .unwrap()
        .distance;
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn adaptive_equals_parallel_on_combs() {
    let mut r = rng(10);
    let dims = PartyDims::qubits();
    for _ in 0..3 {
        let a = random_comb_ab(dims, &mut r).unwrap();
        let b = random_comb_ab(dims, &mut r).unwrap();
        let p = p_succ(&a, &b).unwrap().p_succ;
        let q = p_adapt(&a, &b).unwrap();
        assert!(q.p_adapt >= p - 1e-5);
        assert!((q.p_adapt - p).abs() < 1e-5, "{} vs {p}", q.p_adapt);
    }
}

#[test]
fn adaptive_requires_combs() {
    let w0 = make_cns_example();
    let w1 = ProcessMatrix::maximally_mixed(PartyDims::qubits()).unwrap();
    assert!(matches!(p_adapt(&w0, &w1), Err(Error::Precondition(_))));
}

#[test]
fn realization_replays_the_optimum() {
    let mut r = rng(11);
    let dims = PartyDims::qubits();
    let w0 = random_process_matrix(dims, &mut r).unwrap();
    let w1 = random_comb_ab(dims, &mut r).unwrap();
    let res = p_succ(&w0, &w1).unwrap();
    let real = build_realization(&res.strategy.sum().unwrap(), &w0, &w1).unwrap();
    assert!((real.probability - res.p_succ).abs() < 1e-6);
    assert!((real.replay(&w0, &w1).unwrap() - res.p_succ).abs() < 1e-6);
    assert!(real.k.is_channel(1e-8).unwrap());
    let s = real.q0.add(&real.q1).unwrap();
    let id = HermitianOperator::identity(s.labels().to_vec()).unwrap();
    assert!(s.max_abs_diff(&id).unwrap() < 1e-10);
    assert!(
        real.q0.min_eigenvalue().unwrap() > -1e-10 && real.q1.min_eigenvalue().unwrap() > -1e-10
    );
}

#[test]
fn mismatched_dims_are_rejected() {
    let a = ProcessMatrix::maximally_mixed(PartyDims::qubits()).unwrap();
    let b = ProcessMatrix::maximally_mixed(PartyDims::new(2, 2, 2, 1)).unwrap();
    assert!(matches!(p_succ(&a, &b), Err(Error::DimensionMismatch(_))));
}

#[test]
fn classification_examples() {
    let opts = pmdisc::sdp::SolveOptions::default();
    let mut r = rng(12);
    let dims = PartyDims::qubits();
    let c = classify(&make_cns_example(), 1e-9, &opts).unwrap();
    assert_eq!(c.tag, ProcessClassTag::Unclassified);
    assert!((c.separable_distance.unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-4);
    let ab = random_comb_ab(dims, &mut r).unwrap();
    let ba = random_comb_ba(dims, &mut r).unwrap();
    assert_eq!(
        classify(&ab, 1e-9, &opts).unwrap().tag,
        ProcessClassTag::CombAB
    );
    assert_eq!(
        classify(&ba, 1e-9, &opts).unwrap().tag,
        ProcessClassTag::CombBA
    );
    let f = random_free(dims, &mut r).unwrap();
    assert_eq!(
        classify(&f, 1e-9, &opts).unwrap().tag,
        ProcessClassTag::Free
    );
    let mid = ProcessMatrix::new(ab.op().add(ba.op()).unwrap().scale(0.5), 1e-9).unwrap();
    assert_eq!(
        classify(&mid, 1e-9, &opts).unwrap().tag,
        ProcessClassTag::Separable
    );
}
