//! Seeded generators for random states, unitaries, channels and process
//! matrices. Used by tests, the cone oracle and the CLI demos.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::{CMatrix, C64};

/// Matrix with i.i.d. complex Gaussian entries of unit variance.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phases of R's
/// diagonal pushed into Q).
pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Haar-random isometry from C^din into C^dout (dout ≥ din).
pub fn isometry<R: Rng + ?Sized>(din: usize, dout: usize, rng: &mut R) -> CMatrix {
    assert!(dout >= din, "isometry needs dout >= din");
    unitary(dout, rng).columns(0, din).into_owned()
}

/// Mixed state drawn from the Hilbert–Schmidt measure.
pub fn state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.unscale(t)
}

/// Mixed state of the given rank.
pub fn state_of_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.unscale(t)
}

pub fn pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let v = ginibre(d, 1, rng);
    let v: DVector<C64> = v.column(0).normalize();
    &v * v.adjoint()
}

/// Random Hermitian matrix with entries of order one.
pub fn hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random PSD matrix of the given rank (not normalized).
pub fn psd<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, rank, rng);
    &g * g.adjoint()
}

/// Kraus operators of a random channel C^din → C^dout with `env`-dimensional
/// environment, taken from a random isometry C^din → C^dout ⊗ C^env.
pub fn channel_kraus<R: Rng + ?Sized>(
    din: usize,
    dout: usize,
    env: usize,
    rng: &mut R,
) -> Vec<CMatrix> {
    let v = isometry(din, dout * env, rng);
    (0..env)
        .map(|e| CMatrix::from_fn(dout, din, |i, j| v[(i * env + e, j)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..6 {
            let u = unitary(d, &mut rng);
            let e = &u * u.adjoint() - CMatrix::identity(d, d);
            assert!(e.norm() < 1e-12);
        }
    }

    #[test]
    fn kraus_are_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ks = channel_kraus(3, 2, 4, &mut rng);
        let mut s = CMatrix::zeros(3, 3);
        for k in &ks {
            s += k.adjoint() * k;
        }
        assert!((s - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn states_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = state(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        let p = pure_state(3, &mut rng);
        assert!((&p * &p - &p).norm() < 1e-12);
    }
}
