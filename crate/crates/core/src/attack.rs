//! Collective attacks: one unitary on `probe ⊗ qubit`, applied identically
//! to every transmitted qubit with a fresh probe in `|0^E⟩`.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gf2::{apply_key_map, syndrome, BitString, LinearCodeSpec};
use crate::quantum::{gates, kron_vec, partial_trace, Basis, ComplexMatrix, DensityMatrix, QubitBasisState, Subsystem};

/// Largest dimension `d_E^n` for which [`rho_hat_k`] will build a matrix.
pub const RHO_HAT_DIM_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveAttackSpec {
    name: String,
    probe_dim: usize,
    unitary: ComplexMatrix,
}

impl CollectiveAttackSpec {
    pub fn new(name: impl Into<String>, probe_dim: usize, unitary: ComplexMatrix) -> Result<Self> {
        if probe_dim == 0 {
            return Err(Error::OutOfDomain("probe dimension must be positive".into()));
        }
        if unitary.rows() != 2 * probe_dim || !unitary.is_square() {
            return Err(Error::DimensionMismatch {
                expected: 2 * probe_dim,
                actual: unitary.rows(),
            });
        }
        unitary.check_unitary()?;
        Ok(CollectiveAttackSpec {
            name: name.into(),
            probe_dim,
            unitary,
        })
    }

    /// No interaction; Eve's probe is a trivial one-dimensional system.
    pub fn identity() -> Self {
        Self::new("identity", 1, ComplexMatrix::identity(2)).unwrap()
    }

    /// Pauli X on the qubit with a trivial probe.
    pub fn bitflip() -> Self {
        Self::new("bitflip", 1, gates::pauli_x()).unwrap()
    }

    /// The z-basis value of the qubit is copied into a probe qubit (CNOT,
    /// qubit as control).
    pub fn cnot_z() -> Self {
        Self::new("cnot-z", 2, gates::controlled_on_second(&gates::pauli_x())).unwrap()
    }

    /// Same as [`Self::cnot_z`] but conjugated by a Hadamard on the qubit, so
    /// the x-basis value is copied.
    pub fn cnot_x() -> Self {
        let u = in_x_frame(&gates::controlled_on_second(&gates::pauli_x()), 2);
        Self::new("cnot-x", 2, u).unwrap()
    }

    /// Controlled `R_y(θ)` on the probe, qubit as control. `θ = 0` is the
    /// identity and `θ = π` copies the z value like [`Self::cnot_z`].
    pub fn partial(theta: f64) -> Self {
        let u = gates::controlled_on_second(&gates::ry(theta));
        Self::new(format!("partial:{theta}"), 2, u).unwrap()
    }

    /// [`Self::partial`] in the x frame; disturbs z-basis states only.
    pub fn partial_x(theta: f64) -> Self {
        let u = in_x_frame(&gates::controlled_on_second(&gates::ry(theta)), 2);
        Self::new(format!("partial-x:{theta}"), 2, u).unwrap()
    }

    /// Two probe qubits: the first partially copies the z value (angle
    /// `theta_z_copy`, which induces x errors), then the second partially
    /// copies the x value (angle `theta_x_copy`, which induces z errors).
    pub fn two_probe(theta_z_copy: f64, theta_x_copy: f64) -> Self {
        let i2 = ComplexMatrix::identity(2);
        // Layout: probe1 ⊗ probe2 ⊗ qubit.
        let first = {
            let cu = gates::controlled_on_second(&gates::ry(theta_z_copy)); // probe1 ⊗ qubit
            embed_skipping_middle(&cu)
        };
        let second = i2.kron(&in_x_frame(&gates::controlled_on_second(&gates::ry(theta_x_copy)), 2));
        let u = second.matmul(&first).unwrap();
        Self::new(format!("two-probe:{theta_z_copy},{theta_x_copy}"), 4, u).unwrap()
    }

    /// Resolves a built-in identifier: `identity`, `bitflip`, `cnot-z`,
    /// `cnot-x`, `partial:<theta>`, `partial-x:<theta>`, or
    /// `noise:<q_z>,<q_x>` (see [`crate::protocol::channel_noise_wrapper`]).
    pub fn builtin(id: &str) -> Result<Self> {
        let id = id.trim();
        let angle = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::UnknownAttack(id.to_string()))
        };
        match id {
            "identity" => Ok(Self::identity()),
            "bitflip" => Ok(Self::bitflip()),
            "cnot-z" => Ok(Self::cnot_z()),
            "cnot-x" => Ok(Self::cnot_x()),
            _ => {
                if let Some(t) = id.strip_prefix("partial:") {
                    Ok(Self::partial(angle(t)?))
                } else if let Some(t) = id.strip_prefix("partial-x:") {
                    Ok(Self::partial_x(angle(t)?))
                } else if let Some(rest) = id.strip_prefix("noise:") {
                    let (qz, qx) = rest
                        .split_once(',')
                        .ok_or_else(|| Error::UnknownAttack(id.to_string()))?;
                    crate::protocol::channel_noise_wrapper(angle(qz)?, angle(qx)?)
                } else {
                    Err(Error::UnknownAttack(id.to_string()))
                }
            }
        }
    }

    /// Attack file: first non-comment line is `probe_dim`, followed by the
    /// unitary in the `rows cols` matrix text format with complex entries.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).enumerate();
        let (idx, first) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .ok_or(Error::MatrixParse {
                line: 0,
                message: "missing probe_dim line".into(),
            })?;
        let probe_dim: usize = first.parse().map_err(|_| Error::MatrixParse {
            line: idx + 1,
            message: format!("probe_dim must be a positive integer, found {first:?}"),
        })?;
        let rest: Vec<&str> = lines.map(|(_, l)| l).collect();
        let u = ComplexMatrix::parse(&rest.join("\n"))?;
        Self::new(name, probe_dim, u)
    }

    /// A built-in identifier, or else a path to an attack file.
    pub fn resolve(id_or_path: &str) -> Result<Self> {
        match Self::builtin(id_or_path) {
            Ok(a) => Ok(a),
            Err(Error::UnknownAttack(_)) if Path::new(id_or_path).is_file() => {
                let text = std::fs::read_to_string(id_or_path)?;
                Self::parse(id_or_path, &text)
            }
            Err(e) => Err(e),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    /// `U |0^E⟩ |bit^basis⟩` on `probe ⊗ qubit`.
    pub fn output_state(&self, bit: bool, basis: Basis) -> Vec<Complex64> {
        let mut probe = vec![Complex64::new(0.0, 0.0); self.probe_dim];
        probe[0] = Complex64::new(1.0, 0.0);
        let input = kron_vec(&probe, &QubitBasisState::new(bit, basis).vector());
        self.unitary.matvec(&input).expect("dimensions checked at construction")
    }

    /// The four non-normalized probe vectors `|E^{b}_{ij}⟩` for the given
    /// basis: `U|0^E⟩|i⟩ = Σ_j |E_{ij}⟩|j⟩`, indexed `[i][j]`.
    pub fn probe_components(&self, basis: Basis) -> [[Vec<Complex64>; 2]; 2] {
        let comp = |i: bool| {
            let psi = self.output_state(i, basis);
            let proj = |j: bool| -> Vec<Complex64> {
                let t = QubitBasisState::new(j, basis).vector();
                (0..self.probe_dim)
                    .map(|e| t[0].conj() * psi[e * 2] + t[1].conj() * psi[e * 2 + 1])
                    .collect()
            };
            [proj(false), proj(true)]
        };
        [comp(false), comp(true)]
    }

    /// Probability that Bob, measuring in `basis`, gets the complement of `bit`.
    pub fn flip_probability(&self, bit: bool, basis: Basis) -> f64 {
        let comps = self.probe_components(basis);
        let wrong = &comps[bit as usize][!bit as usize];
        wrong.iter().map(|z| z.norm_sqr()).sum::<f64>().clamp(0.0, 1.0)
    }
}

impl fmt::Display for CollectiveAttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `(I ⊗ H) U (I ⊗ H)` for `U` on `probe ⊗ qubit`.
fn in_x_frame(u: &ComplexMatrix, probe_dim: usize) -> ComplexMatrix {
    let h = ComplexMatrix::identity(probe_dim).kron(&gates::hadamard());
    h.matmul(u).unwrap().matmul(&h).unwrap()
}

/// Lifts a `probe1 ⊗ qubit` operator to `probe1 ⊗ probe2 ⊗ qubit`, acting
/// trivially on probe2.
fn embed_skipping_middle(u: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(8, 8);
    for p1 in 0..2 {
        for t in 0..2 {
            for q1 in 0..2 {
                for s in 0..2 {
                    let val = u[(p1 * 2 + t, q1 * 2 + s)];
                    for p2 in 0..2 {
                        m[((p1 * 2 + p2) * 2 + t, (q1 * 2 + p2) * 2 + s)] = val;
                    }
                }
            }
        }
    }
    m
}

/// Bit-flip probabilities the attack induces in each basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InducedChannelStats {
    pub q_z: f64,
    pub q_x: f64,
}

impl InducedChannelStats {
    pub fn of(a: &CollectiveAttackSpec) -> Self {
        InducedChannelStats {
            q_z: error_rate(a, Basis::Z),
            q_x: error_rate(a, Basis::X),
        }
    }
}

/// Error probability in `basis`, averaged with equal weight over the sent bit.
pub fn error_rate(a: &CollectiveAttackSpec, basis: Basis) -> f64 {
    0.5 * (a.flip_probability(false, basis) + a.flip_probability(true, basis))
}

/// Eve's probe after the attack, with the transmitted qubit traced out.
pub fn eve_probe_state(a: &CollectiveAttackSpec, bit: bool, basis: Basis) -> DensityMatrix {
    let psi = a.output_state(bit, basis);
    let joint = DensityMatrix::from_trusted(ComplexMatrix::outer(&psi));
    partial_trace(&joint, Subsystem::A, (a.probe_dim, 2)).expect("dimensions checked at construction")
}

fn rho_hat_dim(a: &CollectiveAttackSpec, n: usize) -> Option<usize> {
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = dim.checked_mul(a.probe_dim)?;
        if dim > RHO_HAT_DIM_CAP {
            return None;
        }
    }
    Some(dim)
}

/// Errors unless `d_E^n` is within [`RHO_HAT_DIM_CAP`].
pub fn check_rho_hat_cap(a: &CollectiveAttackSpec, n: usize) -> Result<usize> {
    rho_hat_dim(a, n).ok_or_else(|| {
        Error::TooLarge(format!(
            "probe space {}^{n} exceeds the cap of {RHO_HAT_DIM_CAP}",
            a.probe_dim
        ))
    })
}

/// Strings `x` with `x P_Cᵀ = ξ` and `x P_Kᵀ = k`, ascending as integers.
pub fn consistent_strings(code: &LinearCodeSpec, xi: &BitString, k: &BitString) -> Result<Vec<BitString>> {
    let n = code.n();
    if n > 24 {
        return Err(Error::TooLarge(format!("enumerating 2^{n} INFO strings")));
    }
    let mut out = Vec::new();
    for v in 0u64..(1u64 << n) {
        let x = BitString::from_u64(v, n);
        if syndrome(&x, code.pc())? == *xi && apply_key_map(&x, code.pk())? == *k {
            out.push(x);
        }
    }
    Ok(out)
}

/// Eve's state given the syndrome `ξ` and final key `k`: the uniform
/// mixture, over INFO strings `x` consistent with both, of
/// `⊗_j eve_probe_state(a, x_j, z)`. INFO bits are always z-encoded.
pub fn rho_hat_k(
    a: &CollectiveAttackSpec,
    code: &LinearCodeSpec,
    xi: &BitString,
    k: &BitString,
) -> Result<DensityMatrix> {
    let n = code.n();
    let dim = check_rho_hat_cap(a, n)?;
    if xi.len() != code.r() {
        return Err(Error::DimensionMismatch {
            expected: code.r(),
            actual: xi.len(),
        });
    }
    if k.len() != code.m() {
        return Err(Error::DimensionMismatch {
            expected: code.m(),
            actual: k.len(),
        });
    }
    let probe = [
        eve_probe_state(a, false, Basis::Z).into_matrix(),
        eve_probe_state(a, true, Basis::Z).into_matrix(),
    ];
    let xs = consistent_strings(code, xi, k)?;
    if xs.is_empty() {
        return Err(Error::OutOfDomain(format!(
            "no INFO string has syndrome {xi} and key {k}"
        )));
    }
    let weight = 1.0 / xs.len() as f64;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for x in &xs {
        let mut prod = ComplexMatrix::identity(1);
        for bit in x.iter() {
            prod = prod.kron(&probe[bit as usize]);
        }
        acc.add_scaled_assign(&prod, weight);
    }
    Ok(DensityMatrix::from_trusted(acc))
}

/// Exact `P[Bin(n, q) >= t]`.
///
/// Terms are formed in log space and the shorter tail is summed (the
/// complement is taken when the lower tail is the short one), smallest
/// terms first.
pub fn binomial_tail(n: u64, q: f64, t: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "q = {q} outside [0, 1]");
    let k0 = t.ceil().max(0.0);
    if k0 <= 0.0 {
        return 1.0;
    }
    if k0 > n as f64 {
        return 0.0;
    }
    let k0 = k0 as u64;
    if q == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return 1.0;
    }
    let ln_q = q.ln();
    let ln_p = (-q).ln_1p();
    let ln_choose = ln_choose_table(n);
    let term = |k: u64| (ln_choose[k as usize] + k as f64 * ln_q + (n - k) as f64 * ln_p).exp();
    let mean = n as f64 * q;
    if (k0 as f64) > mean {
        // Upper tail is the short one.
        let mut terms: Vec<f64> = (k0..=n).map(term).collect();
        terms.sort_by(f64::total_cmp);
        terms.iter().sum::<f64>().min(1.0)
    } else {
        let mut terms: Vec<f64> = (0..k0).map(term).collect();
        terms.sort_by(f64::total_cmp);
        (1.0 - terms.iter().sum::<f64>()).clamp(0.0, 1.0)
    }
}

fn ln_choose_table(n: u64) -> Vec<f64> {
    let mut ln_fact = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    ln_fact.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        ln_fact.push(acc);
    }
    (0..=n as usize)
        .map(|k| ln_fact[n as usize] - ln_fact[k] - ln_fact[n as usize - k])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::Gf2Matrix;
    use crate::quantum::trace_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn suite() -> Vec<CollectiveAttackSpec> {
        vec![
            CollectiveAttackSpec::identity(),
            CollectiveAttackSpec::bitflip(),
            CollectiveAttackSpec::cnot_z(),
            CollectiveAttackSpec::cnot_x(),
            CollectiveAttackSpec::partial(0.7),
            CollectiveAttackSpec::partial_x(1.9),
            CollectiveAttackSpec::two_probe(0.4, 1.1),
        ]
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        a.max_abs_diff(b) < 1e-12
    }

    #[test]
    fn error_rate_examples() {
        let id = CollectiveAttackSpec::identity();
        assert_eq!(error_rate(&id, Basis::Z), 0.0);
        assert_eq!(error_rate(&id, Basis::X), 0.0);
        let cnot = CollectiveAttackSpec::cnot_z();
        assert!(error_rate(&cnot, Basis::Z).abs() < 1e-12);
        assert!((error_rate(&cnot, Basis::X) - 0.5).abs() < 1e-12);
        let flip = CollectiveAttackSpec::bitflip();
        assert!((error_rate(&flip, Basis::Z) - 1.0).abs() < 1e-12);
        assert!(error_rate(&flip, Basis::X).abs() < 1e-12);
    }

    #[test]
    fn error_rates_in_unit_interval() {
        for a in suite() {
            let s = InducedChannelStats::of(&a);
            assert!((0.0..=1.0).contains(&s.q_z) && (0.0..=1.0).contains(&s.q_x), "{a}");
        }
    }

    #[test]
    fn partial_family_rates() {
        for theta in [0.0, 0.3, 1.0, 2.0, std::f64::consts::PI] {
            let want = (1.0 - (theta / 2.0).cos()) / 2.0;
            let a = CollectiveAttackSpec::partial(theta);
            assert!(error_rate(&a, Basis::Z).abs() < 1e-12);
            assert!((error_rate(&a, Basis::X) - want).abs() < 1e-12);
            let b = CollectiveAttackSpec::partial_x(theta);
            assert!((error_rate(&b, Basis::Z) - want).abs() < 1e-12);
            assert!(error_rate(&b, Basis::X).abs() < 1e-12);
        }
        let two = CollectiveAttackSpec::two_probe(0.8, 1.3);
        let s = InducedChannelStats::of(&two);
        assert!((s.q_x - (1.0 - 0.4f64.cos()) / 2.0).abs() < 1e-12);
        assert!((s.q_z - (1.0 - 0.65f64.cos()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn probe_state_examples() {
        let id = CollectiveAttackSpec::identity();
        for basis in [Basis::Z, Basis::X] {
            for bit in [false, true] {
                assert!(close(
                    eve_probe_state(&id, bit, basis).matrix(),
                    &ComplexMatrix::identity(1)
                ));
            }
        }
        let cnot = CollectiveAttackSpec::cnot_z();
        assert!(close(
            eve_probe_state(&cnot, false, Basis::Z).matrix(),
            &ComplexMatrix::diag(&[1.0, 0.0])
        ));
        assert!(close(
            eve_probe_state(&cnot, false, Basis::X).matrix(),
            DensityMatrix::maximally_mixed(2).matrix()
        ));
    }

    #[test]
    fn probe_states_are_density_matrices() {
        for a in suite() {
            for basis in [Basis::Z, Basis::X] {
                for bit in [false, true] {
                    let rho = eve_probe_state(&a, bit, basis);
                    DensityMatrix::new(rho.into_matrix()).unwrap();
                }
            }
        }
    }

    #[test]
    fn probe_components_reassemble_output() {
        for a in suite() {
            for basis in [Basis::Z, Basis::X] {
                let comps = a.probe_components(basis);
                for i in [false, true] {
                    let psi = a.output_state(i, basis);
                    let mut rebuilt = vec![Complex64::new(0.0, 0.0); psi.len()];
                    for j in [false, true] {
                        let t = QubitBasisState::new(j, basis).vector();
                        for (idx, z) in kron_vec(&comps[i as usize][j as usize], &t).into_iter().enumerate() {
                            rebuilt[idx] += z;
                        }
                    }
                    for (x, y) in rebuilt.iter().zip(&psi) {
                        assert!((x - y).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rho_hat_examples() {
        let code = LinearCodeSpec::new(Gf2Matrix::zero_rows(1), Gf2Matrix::identity(1)).unwrap();
        let cnot = CollectiveAttackSpec::cnot_z();
        let empty = BitString::zeros(0);
        let r0 = rho_hat_k(&cnot, &code, &empty, &bs("0")).unwrap();
        let r1 = rho_hat_k(&cnot, &code, &empty, &bs("1")).unwrap();
        assert!(close(r0.matrix(), &ComplexMatrix::diag(&[1.0, 0.0])));
        assert!(close(r1.matrix(), &ComplexMatrix::diag(&[0.0, 1.0])));
        assert!((trace_distance(&r0, &r1).unwrap() - 1.0).abs() < 1e-12);

        let code2 = LinearCodeSpec::new(
            Gf2Matrix::from_bits(&[&[1, 1]]).unwrap(),
            Gf2Matrix::from_bits(&[&[1, 0]]).unwrap(),
        )
        .unwrap();
        let r0 = rho_hat_k(&cnot, &code2, &bs("0"), &bs("0")).unwrap();
        let r1 = rho_hat_k(&cnot, &code2, &bs("0"), &bs("1")).unwrap();
        assert!(close(r0.matrix(), &ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0])));
        assert!(close(r1.matrix(), &ComplexMatrix::diag(&[0.0, 0.0, 0.0, 1.0])));
    }

    #[test]
    fn identity_attack_reveals_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = LinearCodeSpec::random(5, 2, 2, &mut rng).unwrap();
        let id = CollectiveAttackSpec::identity();
        for k in 0..4 {
            let rho = rho_hat_k(&id, &code, &bs("10"), &BitString::from_u64(k, 2)).unwrap();
            assert!(close(rho.matrix(), &ComplexMatrix::identity(1)));
        }
    }

    #[test]
    fn rho_hat_outputs_are_states_and_average_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let code = LinearCodeSpec::random(4, 1, 2, &mut rng).unwrap();
        let a = CollectiveAttackSpec::partial(1.2);
        let xi = bs("1");
        let rhos: Vec<DensityMatrix> = (0..4)
            .map(|k| rho_hat_k(&a, &code, &xi, &BitString::from_u64(k, 2)).unwrap())
            .collect();
        for r in &rhos {
            DensityMatrix::new(r.matrix().clone()).unwrap();
        }
        let mix = |order: &[usize]| {
            let mut acc = ComplexMatrix::zeros(16, 16);
            for &i in order {
                acc.add_scaled_assign(rhos[i].matrix(), 0.25);
            }
            acc
        };
        let a1 = mix(&[0, 1, 2, 3]);
        let a2 = mix(&[3, 1, 0, 2]);
        assert!(a1.max_abs_diff(&a2) < 1e-12);
        // Mixing over all keys equals the state conditioned on ξ alone.
        let probe0 = eve_probe_state(&a, false, Basis::Z).into_matrix();
        let probe1 = eve_probe_state(&a, true, Basis::Z).into_matrix();
        let mut direct = ComplexMatrix::zeros(16, 16);
        let mut count = 0;
        for v in 0..16u64 {
            let x = BitString::from_u64(v, 4);
            if syndrome(&x, code.pc()).unwrap() == xi {
                let mut p = ComplexMatrix::identity(1);
                for b in x.iter() {
                    p = p.kron(if b { &probe1 } else { &probe0 });
                }
                direct.add_scaled_assign(&p, 1.0);
                count += 1;
            }
        }
        assert!(a1.max_abs_diff(&direct.scale(1.0 / count as f64)) < 1e-12);
    }

    #[test]
    fn rho_hat_cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let code = LinearCodeSpec::random(13, 1, 1, &mut rng).unwrap();
        let r = rho_hat_k(&CollectiveAttackSpec::cnot_z(), &code, &bs("0"), &bs("0"));
        assert!(matches!(r, Err(Error::TooLarge(_))));
        let code7 = LinearCodeSpec::random(7, 1, 1, &mut rng).unwrap();
        assert!(check_rho_hat_cap(&CollectiveAttackSpec::two_probe(0.1, 0.1), 7).is_err());
        assert!(check_rho_hat_cap(&CollectiveAttackSpec::two_probe(0.1, 0.1), 6).is_ok());
        assert!(rho_hat_k(&CollectiveAttackSpec::cnot_z(), &code7, &bs("00"), &bs("0")).is_err());
    }

    #[test]
    fn binomial_tail_examples() {
        assert_eq!(binomial_tail(10, 0.0, 0.5), 0.0);
        assert!((binomial_tail(2, 0.5, 1.0) - 0.75).abs() < 1e-15);
        assert!((binomial_tail(4, 0.25, 4.0) - 0.00390625).abs() < 1e-15);
        // Frozen from an exact rational sum.
        assert!((binomial_tail(8, 0.1, 3.0) - 0.03809179).abs() < 1e-12);
        assert!((binomial_tail(20, 0.5, 3.0) - (1.0 - 211.0 / 1048576.0)).abs() < 1e-14);
        assert_eq!(binomial_tail(5, 0.3, 0.0), 1.0);
        assert_eq!(binomial_tail(5, 0.3, 5.5), 0.0);
        assert_eq!(binomial_tail(5, 1.0, 5.0), 1.0);
    }

    #[test]
    fn binomial_tail_against_direct_sum() {
        fn direct(n: u64, q: f64, k0: u64) -> f64 {
            let mut c = 1.0f64;
            let mut total = 0.0;
            for k in 0..=n {
                if k > 0 {
                    c = c * (n - k + 1) as f64 / k as f64;
                }
                if k >= k0 {
                    total += c * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32);
                }
            }
            total
        }
        for n in [1u64, 5, 17, 40] {
            for q in [0.01, 0.1, 0.37, 0.5, 0.93] {
                for k0 in 0..=n {
                    let got = binomial_tail(n, q, k0 as f64);
                    assert!((got - direct(n, q, k0)).abs() < 1e-12, "n={n} q={q} k0={k0}");
                }
            }
        }
    }

    #[test]
    fn builtin_identifiers_and_file_format() {
        for id in [
            "identity",
            "bitflip",
            "cnot-z",
            "cnot-x",
            "partial:0.5",
            "partial-x:1",
            "noise:0.02,0.03",
        ] {
            CollectiveAttackSpec::builtin(id).unwrap();
        }
        assert!(matches!(
            CollectiveAttackSpec::builtin("bogus"),
            Err(Error::UnknownAttack(_))
        ));
        let text = "# probe then unitary\n2\n4 4\n1 0 0 0\n0 0 0 1\n0 0 1 0\n0 1 0 0\n";
        let a = CollectiveAttackSpec::parse("file", text).unwrap();
        assert!(a.unitary().max_abs_diff(CollectiveAttackSpec::cnot_z().unitary()) < 1e-15);
        let bad = "2\n4 4\n1 1 0 0\n0 0 0 1\n0 0 1 0\n0 1 0 0\n";
        assert!(matches!(
            CollectiveAttackSpec::parse("bad", bad),
            Err(Error::NotUnitary(_))
        ));
        assert!(CollectiveAttackSpec::parse("dims", "3\n4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n").is_err());
    }
}
