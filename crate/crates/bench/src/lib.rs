//! Fixtures shared by the benchmarks.

use bb84z_core::gf2::LinearCodeSpec;
use bb84z_core::quantum::{ComplexMatrix, DensityMatrix};
use bb84z_core::rng::trial_rng;
use bb84z_core::{BitString, ProtocolConfig, Threshold};

/// A reproducible random code of the given shape.
pub fn code(n: usize, r: usize, m: usize) -> LinearCodeSpec {
    LinearCodeSpec::random(n, r, m, &mut trial_rng(17, n as u64)).expect("shape fits")
}

/// A received string at Hamming distance `errors` from a codeword of `code`.
pub fn noisy_word(code: &LinearCodeSpec, errors: usize) -> BitString {
    let mut y = BitString::zeros(code.n());
    for j in 0..errors {
        y.flip(j * 3 % code.n());
    }
    y
}

pub fn protocol(n: usize, r: usize, m: usize) -> ProtocolConfig {
    let t = Threshold::new(1, 10);
    ProtocolConfig::new(n, n, n, t, t, code(n, r, m), 5).expect("valid config")
}

/// A full-rank mixed state built from a seeded Hermitian square.
pub fn density(dim: usize, seed: u64) -> DensityMatrix {
    use rand::Rng;
    let mut rng = trial_rng(seed, dim as u64);
    let data = (0..dim * dim)
        .map(|_| num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let g = ComplexMatrix::from_vec(dim, dim, data).expect("square");
    let h = g.matmul(&g.adjoint()).expect("square");
    let tr = h.trace().re;
    DensityMatrix::new(h.scale(1.0 / tr)).expect("positive and unit trace")
}
