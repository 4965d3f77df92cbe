//! The nine-step BB84-INFO-z protocol as an Alice/Bob exchange over a
//! simulated quantum channel and a public, unjammable classical channel.
//!
//! Indices follow the bit-order convention of [`crate::gf2`]: protocol index
//! 1 is position 0. Bases are encoded as bits, 0 for z and 1 for x.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::attack::{check_rho_hat_cap, error_rate, eve_probe_state, CollectiveAttackSpec};
use crate::error::{Error, Result};
use crate::gf2::{apply_key_map, check_decodable, decode_to_coset_leader, syndrome, BitString, LinearCodeSpec};
use crate::quantum::{Basis, DensityMatrix, QubitBasisState};
use crate::rng::{trial_rng, TrialRng};

/// Exact error threshold such as `1/20`.
pub type Threshold = Ratio<u64>;

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub n: usize,
    pub n_z: usize,
    pub n_x: usize,
    pub p_az: Threshold,
    pub p_ax: Threshold,
    pub code: LinearCodeSpec,
    pub seed: u64,
    /// Keep Eve's per-qubit probe states for the INFO bits in the transcript.
    pub retain_probe_states: bool,
}

impl ProtocolConfig {
    pub fn new(
        n: usize,
        n_z: usize,
        n_x: usize,
        p_az: Threshold,
        p_ax: Threshold,
        code: LinearCodeSpec,
        seed: u64,
    ) -> Result<Self> {
        let cfg = ProtocolConfig {
            n,
            n_z,
            n_x,
            p_az,
            p_ax,
            code,
            seed,
            retain_probe_states: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn total(&self) -> usize {
        self.n + self.n_z + self.n_x
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        for (field, p) in [("p_az", self.p_az), ("p_ax", self.p_ax)] {
            if *p.denom() == 0 || p > Ratio::from_integer(1) {
                return Err(Error::config(field, format!("{p} is not in [0, 1]")));
            }
        }
        if self.code.n() != self.n {
            return Err(Error::config(
                "pc_file",
                format!("code length {} does not match n = {}", self.code.n(), self.n),
            ));
        }
        check_decodable(self.code.pc()).map_err(|e| Error::config("pc_file", e.to_string()))?;
        Ok(())
    }
}

/// Which class an index belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexClass {
    Info,
    TestZ,
    TestX,
}

/// `(s, z, b)`: indicator strings of the INFO, TEST-Z and TEST-X indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub s: BitString,
    pub z: BitString,
    pub b: BitString,
}

impl Partition {
    pub fn from_classes(classes: &[IndexClass]) -> Self {
        let mark = |c: IndexClass| BitString::from_bits(classes.iter().map(|&x| x == c));
        Partition {
            s: mark(IndexClass::Info),
            z: mark(IndexClass::TestZ),
            b: mark(IndexClass::TestX),
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn class_of(&self, j: usize) -> IndexClass {
        if self.s.get(j) {
            IndexClass::Info
        } else if self.z.get(j) {
            IndexClass::TestZ
        } else {
            IndexClass::TestX
        }
    }

    /// Checks the weights and that the three supports cover `N` disjointly.
    pub fn is_valid(&self, n: usize, n_z: usize, n_x: usize) -> bool {
        let total = n + n_z + n_x;
        if self.s.len() != total || self.z.len() != total || self.b.len() != total {
            return false;
        }
        let all = &(&self.s ^ &self.z) ^ &self.b;
        self.s.weight() == n && self.z.weight() == n_z && self.b.weight() == n_x && all.weight() == total
    }
}

/// Uniform random partition: a shuffled multiset of labels.
pub fn sample_partition<R: Rng + ?Sized>(
    total: usize,
    n: usize,
    n_z: usize,
    n_x: usize,
    rng: &mut R,
) -> Result<Partition> {
    if total != n + n_z + n_x {
        return Err(Error::DimensionMismatch {
            expected: n + n_z + n_x,
            actual: total,
        });
    }
    let mut labels = Vec::with_capacity(total);
    labels.extend(std::iter::repeat_n(IndexClass::Info, n));
    labels.extend(std::iter::repeat_n(IndexClass::TestZ, n_z));
    labels.extend(std::iter::repeat_n(IndexClass::TestX, n_x));
    labels.shuffle(rng);
    Ok(Partition::from_classes(&labels))
}

/// Qubits sitting in Bob's quantum memory after Eve's attack.
///
/// Each qubit is `U |0^E⟩ |i_j^{b_j}⟩` on `probe ⊗ qubit`. Bob can only
/// measure them; the preparation is not visible to him.
pub struct StoredQubits<'a> {
    attack: &'a CollectiveAttackSpec,
    prepared: Vec<QubitBasisState>,
}

impl<'a> StoredQubits<'a> {
    /// Alice prepares `|i_j^{b_j}⟩` and Eve attacks each qubit in transit.
    pub fn transmit(i: &BitString, bases: &BitString, attack: &'a CollectiveAttackSpec) -> Result<Self> {
        if i.len() != bases.len() {
            return Err(Error::DimensionMismatch {
                expected: i.len(),
                actual: bases.len(),
            });
        }
        let prepared = i
            .iter()
            .zip(bases.iter())
            .map(|(bit, basis)| QubitBasisState::new(bit, Basis::from_bit(basis)))
            .collect();
        Ok(StoredQubits { attack, prepared })
    }

    pub fn len(&self) -> usize {
        self.prepared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prepared.is_empty()
    }

    /// Born-rule probability that measuring qubit `j` in `basis` gives 1.
    pub fn prob_one(&self, j: usize, basis: Basis) -> f64 {
        let sent = self.prepared[j];
        let psi = self.attack.output_state(sent.bit, sent.basis);
        let one = QubitBasisState::new(true, basis).vector();
        (0..self.attack.probe_dim())
            .map(|e| {
                let amp: Complex64 = one[0].conj() * psi[e * 2] + one[1].conj() * psi[e * 2 + 1];
                amp.norm_sqr()
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Measures every qubit, qubit `j` in basis `bases_j`.
    pub fn measure_all<R: Rng + ?Sized>(&self, bases: &BitString, rng: &mut R) -> Result<BitString> {
        if bases.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: bases.len(),
            });
        }
        // Four distinct inputs and two bases: cache the outcome probabilities.
        let mut cache = [[[f64::NAN; 2]; 2]; 2];
        let mut out = BitString::zeros(self.len());
        for j in 0..self.len() {
            let sent = self.prepared[j];
            let basis = Basis::from_bit(bases.get(j));
            let slot = &mut cache[sent.bit as usize][(sent.basis == Basis::X) as usize][(basis == Basis::X) as usize];
            if slot.is_nan() {
                *slot = self.prob_one(j, basis);
            }
            let p1 = *slot;
            out.set(j, rng.gen::<f64>() < p1);
        }
        Ok(out)
    }

    /// Eve's reduced probe state for each qubit.
    pub fn probe_states(&self) -> Vec<DensityMatrix> {
        self.prepared
            .iter()
            .map(|q| eve_probe_state(self.attack, q.bit, q.basis))
            .collect()
    }
}

/// Sends `i` in `bases` through the attack and measures each qubit in the
/// same basis it was prepared in. Also returns Eve's probe factor per qubit.
pub fn transmit_and_measure<R: Rng + ?Sized>(
    i: &BitString,
    bases: &BitString,
    attack: &CollectiveAttackSpec,
    rng: &mut R,
) -> Result<(BitString, Vec<DensityMatrix>)> {
    let stored = StoredQubits::transmit(i, bases, attack)?;
    let i_b = stored.measure_all(bases, rng)?;
    Ok((i_b, stored.probe_states()))
}

/// `weight <= count · p`, compared exactly.
fn within_threshold(weight: usize, count: usize, p: Threshold) -> bool {
    weight as u128 * *p.denom() as u128 <= count as u128 * *p.numer() as u128
}

/// Step 6: pass unless more than `n_z·p_az` TEST-Z bits or more than
/// `n_x·p_ax` TEST-X bits disagree.
pub fn evaluate_test(c_z: &BitString, c_b: &BitString, p_az: Threshold, p_ax: Threshold) -> bool {
    within_threshold(c_z.weight(), c_z.len(), p_az) && within_threshold(c_b.weight(), c_b.len(), p_ax)
}

/// Messages on the public classical channel, in the order sent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicMessage {
    /// Step 4, Alice → Bob: the basis string `b`.
    Bases(BitString),
    /// Step 5, Alice → Bob: the INFO indicator `s`.
    InfoSet(BitString),
    /// Step 6, both parties: their bit values on the test indices, in
    /// ascending index order, logged as one joint reveal.
    TestReveal { alice: BitString, bob: BitString },
    /// Step 6 outcome when the thresholds are exceeded.
    Abort,
    /// Step 8, Alice → Bob: the syndrome `ξ`.
    Syndrome(BitString),
}

impl fmt::Display for PublicMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PublicMessage::Bases(b) => write!(f, "bases {b}"),
            PublicMessage::InfoSet(s) => write!(f, "info-set {s}"),
            PublicMessage::TestReveal { alice, bob } => write!(f, "test-reveal {alice} {bob}"),
            PublicMessage::Abort => f.write_str("abort"),
            PublicMessage::Syndrome(x) => write!(f, "syndrome {x}"),
        }
    }
}

/// Ordered protocol phases; the session refuses to move backwards or skip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Setup,
    Partitioned,
    QubitsInMemory,
    BasesPublished,
    Measured,
    InfoSetPublished,
    Tested,
    SyndromeSent,
    KeysDerived,
    Aborted,
}

#[derive(Debug)]
struct Session {
    phase: Phase,
    log: Vec<PublicMessage>,
}

impl Session {
    fn new() -> Self {
        Session {
            phase: Phase::Setup,
            log: Vec::new(),
        }
    }

    fn advance(&mut self, from: Phase, to: Phase) -> Result<()> {
        if self.phase != from {
            return Err(Error::Phase(format!(
                "cannot enter {to:?} from {:?} (expected {from:?})",
                self.phase
            )));
        }
        self.phase = to;
        Ok(())
    }

    fn publish(&mut self, msg: PublicMessage) {
        self.log.push(msg);
    }
}

/// Full record of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTranscript {
    pub partition: Partition,
    /// Alice's sent string `i`.
    pub i: BitString,
    /// Bob's measured string `i^B`.
    pub i_b: BitString,
    /// `c = i ⊕ i^B` restricted to INFO, TEST-Z and TEST-X indices.
    pub c_s: BitString,
    pub c_z: BitString,
    pub c_b: BitString,
    pub test_passed: bool,
    pub xi: Option<BitString>,
    /// Bob's corrected INFO string.
    pub x_hat: Option<BitString>,
    pub k_a: Option<BitString>,
    pub k_b: Option<BitString>,
    pub published: Vec<PublicMessage>,
    /// Eve's probe factor for each INFO bit, when retention was requested.
    pub info_probe_states: Option<Vec<DensityMatrix>>,
}

impl ProtocolTranscript {
    pub fn aborted(&self) -> bool {
        !self.test_passed
    }

    /// `Some(k_A == k_B)` when keys exist.
    pub fn keys_equal(&self) -> Option<bool> {
        match (&self.k_a, &self.k_b) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        }
    }

    /// Whether Bob's corrected string disagrees with Alice's `x`. Recorded
    /// after the fact; the protocol has no verification message.
    pub fn correction_failed(&self) -> Option<bool> {
        let x = self.i.restrict(&self.partition.s).ok()?;
        self.x_hat.as_ref().map(|xh| *xh != x)
    }
}

/// Runs steps 2–9 with the config's seed (trial stream 0).
pub fn run_protocol(cfg: &ProtocolConfig, attack: &CollectiveAttackSpec) -> Result<ProtocolTranscript> {
    run_trial(cfg, attack, 0)
}

/// Runs one trial on the stream `(cfg.seed, trial)`.
pub fn run_trial(cfg: &ProtocolConfig, attack: &CollectiveAttackSpec, trial: u64) -> Result<ProtocolTranscript> {
    let mut rng = trial_rng(cfg.seed, trial);
    run_protocol_with_rng(cfg, attack, &mut rng)
}

pub fn run_protocol_with_rng(
    cfg: &ProtocolConfig,
    attack: &CollectiveAttackSpec,
    rng: &mut TrialRng,
) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    if cfg.retain_probe_states {
        check_rho_hat_cap(attack, cfg.n)?;
    }
    let total = cfg.total();
    let mut session = Session::new();

    // Step 2: Alice picks the partition.
    let partition = sample_partition(total, cfg.n, cfg.n_z, cfg.n_x, rng)?;
    session.advance(Phase::Setup, Phase::Partitioned)?;

    // Step 3: Alice sends |i_j^{b_j}⟩; Bob stores every qubit unmeasured.
    let i = BitString::random(total, rng);
    let stored = StoredQubits::transmit(&i, &partition.b, attack)?;
    session.advance(Phase::Partitioned, Phase::QubitsInMemory)?;

    // Step 4: b is published only once all qubits are in Bob's memory.
    session.publish(PublicMessage::Bases(partition.b.clone()));
    session.advance(Phase::QubitsInMemory, Phase::BasesPublished)?;
    let bob_bases = match session.log.last() {
        Some(PublicMessage::Bases(b)) => b.clone(),
        _ => unreachable!(),
    };
    let i_b = stored.measure_all(&bob_bases, rng)?;
    session.advance(Phase::BasesPublished, Phase::Measured)?;

    // Step 5: s follows measurement.
    session.publish(PublicMessage::InfoSet(partition.s.clone()));
    session.advance(Phase::Measured, Phase::InfoSetPublished)?;

    // Step 6: joint reveal of test bits and the threshold check.
    let tests = &partition.z ^ &partition.b;
    session.publish(PublicMessage::TestReveal {
        alice: i.restrict(&tests)?,
        bob: i_b.restrict(&tests)?,
    });
    let c = &i ^ &i_b;
    let c_s = c.restrict(&partition.s)?;
    let c_z = c.restrict(&partition.z)?;
    let c_b = c.restrict(&partition.b)?;
    let test_passed = evaluate_test(&c_z, &c_b, cfg.p_az, cfg.p_ax);
    session.advance(Phase::InfoSetPublished, Phase::Tested)?;

    let info_probe_states = cfg.retain_probe_states.then(|| {
        let all = stored.probe_states();
        partition.s.support().into_iter().map(|j| all[j].clone()).collect()
    });

    let mut transcript = ProtocolTranscript {
        partition: partition.clone(),
        i: i.clone(),
        i_b: i_b.clone(),
        c_s,
        c_z,
        c_b,
        test_passed,
        xi: None,
        x_hat: None,
        k_a: None,
        k_b: None,
        published: Vec::new(),
        info_probe_states,
    };

    if !test_passed {
        session.publish(PublicMessage::Abort);
        session.advance(Phase::Tested, Phase::Aborted)?;
        transcript.published = session.log;
        return Ok(transcript);
    }

    // Step 7: INFO strings stay private.
    let x = i.restrict(&partition.s)?;
    let x_b = i_b.restrict(&partition.s)?;

    // Step 8: syndrome, then Bob's correction.
    let xi = syndrome(&x, cfg.code.pc())?;
    session.publish(PublicMessage::Syndrome(xi.clone()));
    session.advance(Phase::Tested, Phase::SyndromeSent)?;
    let x_hat = decode_to_coset_leader(&x_b, cfg.code.pc(), &xi)?;

    // Step 9: both sides apply P_K.
    let k_a = apply_key_map(&x, cfg.code.pk())?;
    let k_b = apply_key_map(&x_hat, cfg.code.pk())?;
    session.advance(Phase::SyndromeSent, Phase::KeysDerived)?;

    transcript.xi = Some(xi);
    transcript.x_hat = Some(x_hat);
    transcript.k_a = Some(k_a);
    transcript.k_b = Some(k_b);
    transcript.published = session.log;
    Ok(transcript)
}

/// Maximum number of bisection steps on the rotation angle.
const ANGLE_BISECTION_STEPS: usize = 200;

/// Solves `error_rate(family(θ), basis) = target` for `θ ∈ [0, π]`.
fn solve_angle(target: f64, family: fn(f64) -> CollectiveAttackSpec, basis: Basis) -> f64 {
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    for _ in 0..ANGLE_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if error_rate(&family(mid), basis) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Benign channel noise as an attack with the requested flip rates.
///
/// Built from the controlled-rotation family: a z-copy by angle `θ` raises
/// `q_x` to `(1 − cos(θ/2))/2` and an x-copy raises `q_z` likewise, so any
/// pair in `[0, 0.5]²` is realizable. Angles are found by bisection.
pub fn channel_noise_wrapper(flip_prob_z: f64, flip_prob_x: f64) -> Result<CollectiveAttackSpec> {
    let ok = |q: f64| (0.0..=0.5).contains(&q);
    if !ok(flip_prob_z) || !ok(flip_prob_x) {
        return Err(Error::Unrealizable {
            q_z: flip_prob_z,
            q_x: flip_prob_x,
        });
    }
    Ok(match (flip_prob_z == 0.0, flip_prob_x == 0.0) {
        (true, true) => CollectiveAttackSpec::identity(),
        (true, false) if flip_prob_x == 0.5 => CollectiveAttackSpec::cnot_z(),
        (false, true) if flip_prob_z == 0.5 => CollectiveAttackSpec::cnot_x(),
        (true, false) => {
            CollectiveAttackSpec::partial(solve_angle(flip_prob_x, CollectiveAttackSpec::partial, Basis::X))
        }
        (false, true) => {
            CollectiveAttackSpec::partial_x(solve_angle(flip_prob_z, CollectiveAttackSpec::partial_x, Basis::Z))
        }
        (false, false) => {
            let theta_z_copy = solve_angle(flip_prob_x, CollectiveAttackSpec::partial, Basis::X);
            let theta_x_copy = solve_angle(flip_prob_z, CollectiveAttackSpec::partial_x, Basis::Z);
            CollectiveAttackSpec::two_probe(theta_z_copy, theta_x_copy)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::Gf2Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ratio(a: u64, b: u64) -> Threshold {
        Ratio::new(a, b)
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn cfg(n: usize, n_z: usize, n_x: usize, p_az: Threshold, p_ax: Threshold, seed: u64) -> ProtocolConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
        let r = (n / 4).max(1).min(n - 1);
        let code = LinearCodeSpec::random(n, r, 1, &mut rng).unwrap();
        ProtocolConfig::new(n, n_z, n_x, p_az, p_ax, code, seed).unwrap()
    }

    #[test]
    fn partition_is_valid_and_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = std::collections::HashMap::new();
        let draws = 60_000;
        for _ in 0..draws {
            let p = sample_partition(3, 1, 1, 1, &mut rng).unwrap();
            assert!(p.is_valid(1, 1, 1));
            *counts.entry(p.s.to_string() + &p.z.to_string()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expect = draws as f64 / 6.0;
        let sigma = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for (_, c) in counts {
            assert!((c as f64 - expect).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn partition_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_partition(5, 3, 0, 2, &mut rng).unwrap();
        assert_eq!(p.z, BitString::zeros(5));
        assert!(sample_partition(6, 3, 0, 2, &mut rng).is_err());
        let a = sample_partition(20, 8, 6, 6, &mut trial_rng(9, 2)).unwrap();
        let b = sample_partition(20, 8, 6, 6, &mut trial_rng(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transmit_identity_and_bitflip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let i = BitString::random(64, &mut rng);
        let bases = BitString::random(64, &mut rng);
        let (ib, probes) = transmit_and_measure(&i, &bases, &CollectiveAttackSpec::identity(), &mut rng).unwrap();
        assert_eq!(ib, i);
        assert_eq!(probes.len(), 64);
        let z = BitString::zeros(64);
        let (ib, _) = transmit_and_measure(&i, &z, &CollectiveAttackSpec::bitflip(), &mut rng).unwrap();
        assert_eq!(ib, &i ^ &BitString::ones(64));
    }

    #[test]
    fn cnot_x_basis_outcomes_are_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples = 10_000;
        let i = BitString::zeros(samples);
        let bases = BitString::ones(samples);
        let (ib, _) = transmit_and_measure(&i, &bases, &CollectiveAttackSpec::cnot_z(), &mut rng).unwrap();
        let ones = ib.weight() as f64;
        let zeros = samples as f64 - ones;
        let e = samples as f64 / 2.0;
        let chi2 = (ones - e).powi(2) / e + (zeros - e).powi(2) / e;
        // 1 degree of freedom, 99.9% quantile.
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn evaluate_test_examples() {
        let p = ratio(1, 5);
        assert!(evaluate_test(&BitString::zeros(10), &BitString::zeros(10), p, p));
        let two = bs("1100000000");
        let three = bs("1110000000");
        assert!(evaluate_test(&two, &BitString::zeros(10), p, ratio(0, 1)));
        assert!(!evaluate_test(&three, &BitString::zeros(10), p, ratio(0, 1)));
        assert!(evaluate_test(&BitString::zeros(10), &two, ratio(0, 1), p));
        assert!(!evaluate_test(&BitString::zeros(10), &three, ratio(0, 1), p));
        // Empty test sets always pass.
        assert!(evaluate_test(
            &BitString::zeros(0),
            &BitString::zeros(0),
            ratio(0, 1),
            ratio(0, 1)
        ));
    }

    #[test]
    fn identity_attack_always_agrees() {
        let c = cfg(12, 6, 6, ratio(0, 1), ratio(0, 1), 77);
        let a = CollectiveAttackSpec::identity();
        for t in 0..50 {
            let tr = run_trial(&c, &a, t).unwrap();
            assert!(tr.test_passed);
            assert_eq!(tr.keys_equal(), Some(true));
            assert_eq!(tr.correction_failed(), Some(false));
        }
    }

    #[test]
    fn bitflip_attack_always_aborts() {
        let c = cfg(8, 4, 4, ratio(9, 10), ratio(1, 10), 3);
        let a = CollectiveAttackSpec::bitflip();
        for t in 0..50 {
            let tr = run_trial(&c, &a, t).unwrap();
            assert!(!tr.test_passed);
            assert!(tr.k_a.is_none() && tr.k_b.is_none() && tr.xi.is_none());
            assert_eq!(tr.published.last(), Some(&PublicMessage::Abort));
        }
    }

    #[test]
    fn cnot_attack_pass_rate() {
        let c = cfg(4, 2, 20, ratio(1, 1), ratio(1, 10), 5);
        let a = CollectiveAttackSpec::cnot_z();
        let trials = 20_000u64;
        let passes = (0..trials)
            .filter(|&t| run_trial(&c, &a, t).unwrap().test_passed)
            .count() as f64;
        let p = 211.0 / 1_048_576.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (passes - trials as f64 * p).abs() <= 3.0 * sigma + 1.0,
            "passes {passes}"
        );
    }

    #[test]
    fn transcript_invariants_hold() {
        let c = cfg(10, 8, 8, ratio(1, 4), ratio(1, 4), 21);
        let a = channel_noise_wrapper(0.1, 0.15).unwrap();
        for t in 0..200 {
            let tr = run_trial(&c, &a, t).unwrap();
            assert!(tr.partition.is_valid(10, 8, 8));
            let cfull = &tr.i ^ &tr.i_b;
            assert_eq!(cfull.restrict(&tr.partition.s).unwrap(), tr.c_s);
            assert_eq!(cfull.restrict(&tr.partition.z).unwrap(), tr.c_z);
            assert_eq!(cfull.restrict(&tr.partition.b).unwrap(), tr.c_b);
            let recomputed = tr.c_z.weight() * 4 <= 8 && tr.c_b.weight() * 4 <= 8;
            assert_eq!(recomputed, tr.test_passed);
            assert_eq!(tr.k_a.is_some(), tr.test_passed);
            // Publishing order: b, then s, then the test reveal.
            assert!(matches!(tr.published[0], PublicMessage::Bases(_)));
            assert!(matches!(tr.published[1], PublicMessage::InfoSet(_)));
            assert!(matches!(tr.published[2], PublicMessage::TestReveal { .. }));
            match &tr.published[3] {
                PublicMessage::Syndrome(xi) => assert_eq!(Some(xi), tr.xi.as_ref()),
                PublicMessage::Abort => assert!(!tr.test_passed),
                other => panic!("unexpected {other}"),
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let c = cfg(10, 5, 5, ratio(1, 5), ratio(1, 5), 1234);
        let a = CollectiveAttackSpec::partial(1.0);
        assert_eq!(run_trial(&c, &a, 17).unwrap(), run_trial(&c, &a, 17).unwrap());
        assert_eq!(run_protocol(&c, &a).unwrap(), run_trial(&c, &a, 0).unwrap());
    }

    #[test]
    fn probe_retention_respects_cap() {
        let mut c = cfg(6, 2, 2, ratio(1, 2), ratio(1, 2), 2);
        c.retain_probe_states = true;
        let tr = run_protocol(&c, &CollectiveAttackSpec::cnot_z()).unwrap();
        assert_eq!(tr.info_probe_states.as_ref().map(Vec::len), Some(6));
        let mut big = cfg(14, 2, 2, ratio(1, 2), ratio(1, 2), 2);
        big.retain_probe_states = true;
        assert!(matches!(
            run_protocol(&big, &CollectiveAttackSpec::cnot_z()),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let code = LinearCodeSpec::random(8, 2, 1, &mut rng).unwrap();
        assert!(ProtocolConfig::new(9, 1, 1, ratio(0, 1), ratio(0, 1), code.clone(), 0).is_err());
        assert!(ProtocolConfig::new(8, 1, 1, ratio(3, 2), ratio(0, 1), code.clone(), 0).is_err());
        let wide = LinearCodeSpec::new(Gf2Matrix::identity(40), Gf2Matrix::zero_rows(40)).unwrap();
        assert!(matches!(
            ProtocolConfig::new(40, 1, 1, ratio(0, 1), ratio(0, 1), wide, 0),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn phases_cannot_be_skipped() {
        let mut s = Session::new();
        assert!(s.advance(Phase::QubitsInMemory, Phase::BasesPublished).is_err());
        s.advance(Phase::Setup, Phase::Partitioned).unwrap();
        assert!(s.advance(Phase::Setup, Phase::Partitioned).is_err());
    }

    #[test]
    fn noise_wrapper_examples() {
        assert_eq!(channel_noise_wrapper(0.0, 0.0).unwrap().name(), "identity");
        assert_eq!(channel_noise_wrapper(0.0, 0.5).unwrap().name(), "cnot-z");
        for (qz, qx) in [
            (0.05, 0.0),
            (0.0, 0.05),
            (0.05, 0.1),
            (0.02, 0.3),
            (0.5, 0.5),
            (0.37, 0.5),
        ] {
            let a = channel_noise_wrapper(qz, qx).unwrap();
            assert!((error_rate(&a, Basis::Z) - qz).abs() < 1e-6, "{qz} {qx}");
            assert!((error_rate(&a, Basis::X) - qx).abs() < 1e-6, "{qz} {qx}");
        }
        assert!(matches!(
            channel_noise_wrapper(0.6, 0.0),
            Err(Error::Unrealizable { .. })
        ));
        assert!(channel_noise_wrapper(-0.1, 0.0).is_err());
    }
}
