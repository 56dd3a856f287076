//! Type-I fusion of TM qubits and growth of linear cluster states from
//! Bell pairs.
//!
//! Qubit states are vectors over `{|A₀⟩, |A₁⟩}^n`; slot 0 is the most
//! significant bit of the basis index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::gates::{compile_gate, evaluate, GateName};
use crate::linalg::{c, norm_sq, CMatrix, ZERO};
use crate::rng::substream;

pub const NORM_TOL: f64 = 1e-9;
pub const STABILIZER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiQubitState {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl MultiQubitState {
    pub fn new(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if n == 0 || coeffs.len() != 1 << n {
            return Err(TmError::DimensionMismatch { expected: 1 << n, got: coeffs.len() });
        }
        let ns = norm_sq(&coeffs);
        if (ns - 1.0).abs() > NORM_TOL {
            return Err(TmError::NotNormalized { norm_sq: ns, context: "multi-qubit state".into() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn normalized(n: usize, mut coeffs: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sq(&coeffs).sqrt();
        if norm == 0.0 {
            return Err(TmError::NotNormalized { norm_sq: 0.0, context: "zero vector".into() });
        }
        coeffs.iter_mut().for_each(|z| *z /= norm);
        Self::new(n, coeffs)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        let s = c(FRAC_1_SQRT_2, 0.0);
        Self { n: 2, coeffs: vec![s, ZERO, ZERO, s] }
    }

    /// `(|0⟩ + |1⟩)/√2` on every slot.
    pub fn plus(n: usize) -> Self {
        let a = c((0.5f64).powi(n as i32).sqrt(), 0.0);
        Self { n, coeffs: vec![a; 1 << n] }
    }

    /// Ideal linear cluster: `|+⟩^n` followed by CZ on neighbours.
    pub fn linear_cluster(n: usize) -> Self {
        let mut s = Self::plus(n);
        for k in 0..n.saturating_sub(1) {
            s = s.controlled_z(k, k + 1);
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn bit(&self, index: usize, slot: usize) -> usize {
        (index >> (self.n - 1 - slot)) & 1
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.n {
            return Err(TmError::InvalidSlot(format!("slot {slot} of a {}-qubit state", self.n)));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &MultiQubitState) -> Self {
        let coeffs = self.coeffs.iter().flat_map(|a| other.coeffs.iter().map(move |b| a * b)).collect();
        Self { n: self.n + other.n, coeffs }
    }

    /// Applies a 2×2 matrix on one slot.
    pub fn apply_single(&self, slot: usize, u: &CMatrix) -> Result<Self> {
        self.check_slot(slot)?;
        if u.shape() != (2, 2) {
            return Err(TmError::DimensionMismatch { expected: 2, got: u.nrows() });
        }
        let mask = 1 << (self.n - 1 - slot);
        let mut out = self.coeffs.clone();
        for i in (0..self.coeffs.len()).filter(|i| i & mask == 0) {
            let (a0, a1) = (self.coeffs[i], self.coeffs[i | mask]);
            out[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
            out[i | mask] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
        }
        Ok(Self { n: self.n, coeffs: out })
    }

    fn controlled_z(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        for (i, z) in out.coeffs.iter_mut().enumerate() {
            if self.bit(i, a) == 1 && self.bit(i, b) == 1 {
                *z = -*z;
            }
        }
        out
    }

    /// Probability of reading `outcome` on `slot` and the state of the
    /// remaining qubits.
    pub fn measure_z(&self, slot: usize, outcome: usize) -> Result<(f64, Option<Self>)> {
        self.check_slot(slot)?;
        if self.n == 1 {
            return Err(TmError::InvalidSlot("cannot remove the last qubit".into()));
        }
        let kept: Vec<Complex64> = (0..self.coeffs.len())
            .filter(|&i| self.bit(i, slot) == outcome)
            .map(|i| self.coeffs[i])
            .collect();
        let p = norm_sq(&kept);
        let post = if p > 0.0 { Some(Self::normalized(self.n - 1, kept)?) } else { None };
        Ok((p, post))
    }

    pub fn inner(&self, other: &MultiQubitState) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &MultiQubitState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Returns `(O₁, O₂)` as 2×4 matrices on `|x_a x_b⟩`.
pub fn fusion_kraus() -> (CMatrix, CMatrix) {
    let s = FRAC_1_SQRT_2;
    let make = |sign: f64| {
        let mut m = CMatrix::zeros(2, 4);
        m[(0, 0)] = c(s, 0.0);
        m[(1, 3)] = c(sign * s, 0.0);
        m
    };
    (make(-1.0), make(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    D1,
    D2,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionOutcome {
    pub detector: Detector,
    pub probability: f64,
    /// `n−1` qubits on success; on failure the input projected onto the
    /// odd-parity subspace of the two slots. `None` if the branch is empty.
    pub post_state: Option<MultiQubitState>,
}

/// All three branches. The fused qubit takes the place of `slot_b` once
/// `slot_a` is removed.
pub fn fusion_distribution(state: &MultiQubitState, slot_a: usize, slot_b: usize) -> Result<Vec<FusionOutcome>> {
    state.check_slot(slot_a)?;
    state.check_slot(slot_b)?;
    if slot_a == slot_b {
        return Err(TmError::InvalidSlot(format!("fusion needs two distinct slots, got {slot_a} twice")));
    }
    let n = state.n;
    let (o1, o2) = fusion_kraus();
    let mut out = Vec::with_capacity(3);
    for (detector, kraus) in [(Detector::D1, &o1), (Detector::D2, &o2)] {
        let mut coeffs = vec![ZERO; 1 << (n - 1)];
        for (i, &amp) in state.coeffs.iter().enumerate() {
            let (xa, xb) = (state.bit(i, slot_a), state.bit(i, slot_b));
            for y in 0..2 {
                let k = kraus[(y, 2 * xa + xb)];
                if k == ZERO {
                    continue;
                }
                coeffs[merged_index(i, n, slot_a, slot_b, y)] += k * amp;
            }
        }
        out.push(branch(detector, n - 1, coeffs)?);
    }
    let odd: Vec<Complex64> = state
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &a)| if state.bit(i, slot_a) != state.bit(i, slot_b) { a } else { ZERO })
        .collect();
    out.push(branch(Detector::Failure, n, odd)?);
    Ok(out)
}

fn branch(detector: Detector, n: usize, coeffs: Vec<Complex64>) -> Result<FusionOutcome> {
    let probability = norm_sq(&coeffs);
    let post_state = if probability > 0.0 { Some(MultiQubitState::normalized(n, coeffs)?) } else { None };
    Ok(FusionOutcome { detector, probability, post_state })
}

/// Index of the `n−1`-qubit basis state with `slot_a` dropped and `slot_b`
/// set to `y`.
fn merged_index(i: usize, n: usize, slot_a: usize, slot_b: usize, y: usize) -> usize {
    let mut j = 0;
    for slot in (0..n).filter(|&s| s != slot_a) {
        let bit = if slot == slot_b { y } else { (i >> (n - 1 - slot)) & 1 };
        j = (j << 1) | bit;
    }
    j
}

/// Samples one outcome.
pub fn apply_fusion<R: Rng + ?Sized>(
    state: &MultiQubitState,
    slot_a: usize,
    slot_b: usize,
    rng: &mut R,
) -> Result<FusionOutcome> {
    let dist = fusion_distribution(state, slot_a, slot_b)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for outcome in &dist[..2] {
        acc += outcome.probability;
        if u < acc {
            return Ok(outcome.clone());
        }
    }
    Ok(dist[2].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStrategy {
    /// A failed fusion costs the chain its end qubit.
    #[default]
    Recycle,
    /// A failed fusion discards the whole chain.
    Restart,
}

impl FromStr for GrowthStrategy {
    type Err = TmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recycle" => Ok(Self::Recycle),
            "restart" => Ok(Self::Restart),
            _ => Err(TmError::InvalidParameter(format!("unknown growth strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub target_n: usize,
    pub bell_pairs: usize,
    pub attempts: usize,
    pub successes: usize,
    pub failures: usize,
}

impl ResourceReport {
    pub fn pairs_per_success(&self) -> f64 {
        self.attempts as f64 / self.successes.max(1) as f64
    }
}

fn compiled_red_block(name: GateName) -> CMatrix {
    evaluate(&compile_gate(name)).expect("qubit gate recipes are valid").red_block()
}

struct Corrections {
    h: CMatrix,
    z: CMatrix,
}

impl Corrections {
    fn new() -> Self {
        Self { h: compiled_red_block(GateName::H), z: compiled_red_block(GateName::Z) }
    }

    /// A Bell pair turned into a two-qubit cluster.
    fn fresh_pair(&self) -> MultiQubitState {
        MultiQubitState::bell().apply_single(1, &self.h).expect("slot 1 exists")
    }
}

/// Grows a linear cluster by repeatedly fusing the chain's end qubit with
/// a fresh Bell pair, drawing randomness from `rng`.
pub fn grow_linear_cluster_with<R: Rng + ?Sized>(
    target_n: usize,
    bell_supply: usize,
    strategy: GrowthStrategy,
    rng: &mut R,
) -> Result<(MultiQubitState, ResourceReport)> {
    if target_n < 2 {
        return Err(TmError::InvalidParameter(format!("target length {target_n} below 2")));
    }
    let fix = Corrections::new();
    let mut report = ResourceReport { target_n, bell_pairs: 0, attempts: 0, successes: 0, failures: 0 };
    let take_pair = |report: &mut ResourceReport| {
        if report.bell_pairs == bell_supply {
            return Err(TmError::SupplyExhausted { consumed: report.bell_pairs });
        }
        report.bell_pairs += 1;
        Ok(fix.fresh_pair())
    };
    let mut chain = take_pair(&mut report)?;
    while chain.n() < target_n {
        let pair = take_pair(&mut report)?;
        let joint = chain.tensor(&pair);
        let end = chain.n() - 1;
        report.attempts += 1;
        let outcome = apply_fusion(&joint, end, end + 1, rng)?;
        let post = outcome.post_state.expect("sampled branches are populated");
        match outcome.detector {
            Detector::D1 => {
                report.successes += 1;
                chain = post.apply_single(end, &fix.z)?;
            }
            Detector::D2 => {
                report.successes += 1;
                chain = post;
            }
            Detector::Failure => {
                report.failures += 1;
                chain = match strategy {
                    GrowthStrategy::Restart => take_pair(&mut report)?,
                    GrowthStrategy::Recycle if chain.n() == 1 => take_pair(&mut report)?,
                    GrowthStrategy::Recycle => truncate_after_failure(&post, end, &fix, rng)?,
                };
            }
        }
    }
    Ok((chain, report))
}

/// Reads out the failed end qubit and the spent pair, keeping a chain one
/// shorter.
fn truncate_after_failure<R: Rng + ?Sized>(
    post: &MultiQubitState,
    end: usize,
    fix: &Corrections,
    rng: &mut R,
) -> Result<MultiQubitState> {
    let (p0, s0) = post.measure_z(end, 0)?;
    let (m, mut rest) = if rng.random::<f64>() < p0 { (0, s0) } else { (1, post.measure_z(end, 1)?.1) };
    let mut state = rest.take().expect("sampled outcome has support");
    for _ in 0..2 {
        let last = state.n() - 1;
        let (q0, s) = state.measure_z(last, 0)?;
        state = if q0 > 0.0 { s } else { state.measure_z(last, 1)?.1 }.expect("one outcome has support");
    }
    if m == 1 && end > 0 {
        state = state.apply_single(end - 1, &fix.z)?;
    }
    Ok(state)
}

/// Seeded single growth run.
pub fn grow_linear_cluster(target_n: usize, bell_supply: usize, seed: u64) -> Result<(MultiQubitState, ResourceReport)> {
    let mut rng = substream(seed, "cluster", 0);
    grow_linear_cluster_with(target_n, bell_supply, GrowthStrategy::Recycle, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStatistics {
    pub target_n: usize,
    pub strategy: GrowthStrategy,
    pub seed: u64,
    pub trials: Vec<ResourceReport>,
}

impl ClusterStatistics {
    pub fn mean_pairs(&self) -> f64 {
        self.trials.iter().map(|r| r.bell_pairs as f64).sum::<f64>() / self.trials.len() as f64
    }

    /// Total attempts over total successes.
    pub fn pairs_per_success(&self) -> f64 {
        let a: usize = self.trials.iter().map(|r| r.attempts).sum();
        let s: usize = self.trials.iter().map(|r| r.successes).sum();
        a as f64 / s.max(1) as f64
    }

    pub fn success_fraction(&self) -> f64 {
        let a: usize = self.trials.iter().map(|r| r.attempts).sum();
        let s: usize = self.trials.iter().map(|r| r.successes).sum();
        s as f64 / a.max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,target_n,bell_pairs,attempts,successes,failures\n");
        for (i, r) in self.trials.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{},{},{}\n", r.target_n, r.bell_pairs, r.attempts, r.successes, r.failures));
        }
        out
    }
}

/// Independent growth trials, each on its own random substream.
pub fn cluster_statistics(
    target_n: usize,
    n_trials: usize,
    bell_supply: usize,
    strategy: GrowthStrategy,
    seed: u64,
) -> Result<ClusterStatistics> {
    if n_trials == 0 {
        return Err(TmError::InvalidParameter("at least one trial required".into()));
    }
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, "cluster", t as u64);
            grow_linear_cluster_with(target_n, bell_supply, strategy, &mut rng).map(|(_, r)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterStatistics { target_n, strategy, seed, trials })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// `⟨X_i Π_{j∈nbr(i)} Z_j⟩` for each site.
    pub stabilizers: Vec<f64>,
    pub pass: bool,
}

/// Evaluates the linear-chain stabilizers.
pub fn verify_cluster(state: &MultiQubitState, chain_length: usize) -> Result<ClusterReport> {
    if state.n != chain_length {
        return Err(TmError::DimensionMismatch { expected: chain_length, got: state.n });
    }
    let n = state.n;
    let stabilizers: Vec<f64> = (0..n)
        .map(|i| {
            let flip = 1usize << (n - 1 - i);
            let value: Complex64 = state
                .coeffs
                .iter()
                .enumerate()
                .map(|(idx, &amp)| {
                    let mut sign = 1.0;
                    for j in [i.wrapping_sub(1), i + 1] {
                        if j < n && state.bit(idx, j) == 1 {
                            sign = -sign;
                        }
                    }
                    state.coeffs[idx ^ flip].conj() * amp * sign
                })
                .sum();
            value.re
        })
        .collect();
    let pass = stabilizers.iter().all(|&k| k >= 1.0 - STABILIZER_TOL);
    Ok(ClusterReport { stabilizers, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::equal_up_to_phase;
    use crate::linalg::random_state;

    fn product(a: &[Complex64], b: &[Complex64]) -> MultiQubitState {
        MultiQubitState::new(2, vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]).unwrap()
    }

    #[test]
    fn kraus_completeness_is_even_parity_projector() {
        let (o1, o2) = fusion_kraus();
        let sum = o1.adjoint() * &o1 + o2.adjoint() * &o2;
        let mut proj = CMatrix::zeros(4, 4);
        proj[(0, 0)] = c(1.0, 0.0);
        proj[(3, 3)] = c(1.0, 0.0);
        assert!((sum - proj).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn symmetric_input_fuses_to_plus_minus() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = product(&[h, h], &[h, h]);
        let d = fusion_distribution(&s, 0, 1).unwrap();
        assert!((d[0].probability - 0.25).abs() < 1e-15);
        assert!((d[1].probability - 0.25).abs() < 1e-15);
        assert!((d[2].probability - 0.5).abs() < 1e-15);
        let minus = MultiQubitState::new(1, vec![h, -h]).unwrap();
        assert!((d[0].post_state.as_ref().unwrap().fidelity(&minus) - 1.0).abs() < 1e-12);
        let plus = MultiQubitState::plus(1);
        assert!((d[1].post_state.as_ref().unwrap().fidelity(&plus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_parity_input_always_fails() {
        let one = [ZERO, c(1.0, 0.0)];
        let zero = [c(1.0, 0.0), ZERO];
        let d = fusion_distribution(&product(&zero, &one), 0, 1).unwrap();
        assert_eq!(d[2].probability, 1.0);
        assert!(d[0].post_state.is_none());
    }

    #[test]
    fn two_bell_pairs_give_ghz() {
        let s = MultiQubitState::bell().tensor(&MultiQubitState::bell());
        let d = fusion_distribution(&s, 1, 2).unwrap();
        assert!((d[0].probability + d[1].probability - 0.5).abs() < 1e-15);
        let h = c(FRAC_1_SQRT_2, 0.0);
        let mut ghz = vec![ZERO; 8];
        ghz[0] = h;
        ghz[7] = -h;
        let ghz = MultiQubitState::new(3, ghz).unwrap();
        assert!((d[0].post_state.as_ref().unwrap().fidelity(&ghz) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = substream(1, "fusion", 0);
        for _ in 0..200 {
            let s = MultiQubitState::new(3, random_state(8, &mut rng)).unwrap();
            let d = fusion_distribution(&s, 2, 0).unwrap();
            let total: f64 = d.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_slots() {
        let s = MultiQubitState::plus(2);
        assert!(fusion_distribution(&s, 1, 1).is_err());
        assert!(fusion_distribution(&s, 0, 2).is_err());
    }

    #[test]
    fn compiled_corrections_match_targets() {
        let fix = Corrections::new();
        let s = FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        assert!(equal_up_to_phase(&fix.h, &h, 1e-12));
        let pair = fix.fresh_pair();
        assert!(verify_cluster(&pair, 2).unwrap().pass);
    }

    #[test]
    fn ideal_cluster_passes_and_product_fails() {
        assert!(verify_cluster(&MultiQubitState::linear_cluster(4), 4).unwrap().pass);
        let r = verify_cluster(&MultiQubitState::new(3, [vec![c(1.0, 0.0)], vec![ZERO; 7]].concat()).unwrap(), 3).unwrap();
        assert!(!r.pass);
        assert!(verify_cluster(&MultiQubitState::plus(2), 3).is_err());
    }

    #[test]
    fn single_flips_negate_expected_stabilizers() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)]);
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
        let cluster = MultiQubitState::linear_cluster(4);
        for (op, expect) in [(&x, [-1.0, 1.0, -1.0, 1.0]), (&z, [1.0, -1.0, 1.0, 1.0])] {
            let k = verify_cluster(&cluster.apply_single(1, op).unwrap(), 4).unwrap().stabilizers;
            for (a, b) in k.iter().zip(expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grown_clusters_are_stabilized() {
        for seed in 0..20 {
            for target in 2..=5 {
                let (s, r) = grow_linear_cluster(target, 10_000, seed).unwrap();
                assert_eq!(s.n(), target);
                assert!(verify_cluster(&s, target).unwrap().pass, "seed {seed} target {target}");
                assert_eq!(r.attempts, r.successes + r.failures);
            }
        }
    }

    #[test]
    fn restart_strategy_also_builds_clusters() {
        let mut rng = substream(4, "cluster", 0);
        let (s, _) = grow_linear_cluster_with(4, 10_000, GrowthStrategy::Restart, &mut rng).unwrap();
        assert!(verify_cluster(&s, 4).unwrap().pass);
    }

    #[test]
    fn supply_can_run_out() {
        let err = grow_linear_cluster(6, 2, 0).unwrap_err();
        assert!(matches!(err, TmError::SupplyExhausted { .. }));
    }

    #[test]
    fn fusion_ignores_local_unitaries_elsewhere() {
        let mut rng = substream(8, "fusion", 1);
        let u = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)]);
        let s = MultiQubitState::new(3, random_state(8, &mut rng)).unwrap();
        let p = |st: &MultiQubitState| fusion_distribution(st, 0, 1).unwrap().iter().map(|o| o.probability).collect::<Vec<_>>();
        let (a, b) = (p(&s), p(&s.apply_single(2, &u).unwrap()));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
