use pmdisc::discrimination::p_succ;
use pmdisc::process::{membership, validate_def1};
use pmdisc::protocols::*;
use pmdisc::random;
use pmdisc::tensor::{CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn simulated_protocol_is_perfect() {
    for d in [2, 3, 4] {
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pp = random_perfect_pair(d, &mut rng).unwrap();
            let p = perfect_probability(&pp).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "d={d} seed={seed} p={p}");
        }
    }
}

#[test]
fn program_agrees_with_protocol_on_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let pp = random_perfect_pair(2, &mut rng).unwrap();
        let res = p_succ(&pp.w_ab, &pp.w_ba).unwrap();
        assert!(res.p_succ >= 1.0 - 1e-5, "{}", res.p_succ);
        let s = strategy_operators(&pp).unwrap();
        assert!((s.probability(&pp.w_ab, &pp.w_ba).unwrap() - 1.0).abs() < 1e-10);
        assert!(s.feasibility(1e-9).unwrap().nonsignalling);
    }
}

#[test]
fn pair_members_are_valid_and_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let pp = random_perfect_pair(3, &mut rng).unwrap();
    assert!(validate_def1(pp.w_ab.op(), 1e-9).unwrap().valid);
    assert!(validate_def1(pp.w_ba.op(), 1e-9).unwrap().valid);
    let ab = membership(pp.w_ab.op()).unwrap();
    let ba = membership(pp.w_ba.op()).unwrap();
    assert!(ab.comb_ab < 1e-9 && ab.comb_ba > 1e-3);
    assert!(ba.comb_ba < 1e-9 && ba.comb_ab > 1e-3);
}

#[test]
fn register_supports_are_disjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for d in 2..=4 {
        let pp = random_perfect_pair(d, &mut rng).unwrap();
        assert!(support_overlap(&pp).unwrap() < 1e-13);
        let ab = register_distribution(&simulate_order(&pp, Order::AB).unwrap());
        let total: f64 = ab.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (i, row) in ab.iter().enumerate() {
            assert!((row[(i + 1) % d] - pp.lambda[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn explicit_pair_from_given_state() {
    let rho = CMatrix::from_fn(2, 2, |r, c| {
        C64::new(if r == c { [0.3, 0.7][r] } else { 0.0 }, 0.0)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let u = random::unitary(2, &mut rng);
    let pp = make_perfect_pair(&rho, &u).unwrap();
    assert_eq!(pp.dim(), 2);
    assert!((perfect_probability(&pp).unwrap() - 1.0).abs() < 1e-12);
    // local instruments are channels once the registers are traced out
    assert!(alice_channel(&pp).unwrap().is_channel(1e-12).unwrap());
    assert!(bob_channel(&pp).unwrap().is_channel(1e-12).unwrap());
}

#[test]
fn degenerate_state_still_discriminates() {
    // with a maximally mixed ρ the eigenbasis is arbitrary; any choice works
    let rho = CMatrix::identity(3, 3).scale(1.0 / 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let u = random::unitary(3, &mut rng);
    let pp = make_perfect_pair(&rho, &u).unwrap();
    assert!((perfect_probability(&pp).unwrap() - 1.0).abs() < 1e-12);
}
