//! Prepare-and-measure QKD (BB84 and its d-dimensional generalization) on
//! TM qudits, with Bob's analyzer built from `d−1` cascaded pulse gates.

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmError};
use crate::mub::{mub_bases, MubSet};
use crate::qpg::{drop_cascade_with, QpgSpec};
use crate::rng::substream;
use crate::states::RegisterState;

/// Cascade probabilities below this are treated as exact zeros.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eve {
    None,
    InterceptResend,
}

impl FromStr for Eve {
    type Err = TmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Self::None),
            "intercept_resend" => Ok(Self::InterceptResend),
            _ => Err(TmError::InvalidParameter(format!("unknown eavesdropper strategy `{s}`"))),
        }
    }
}

/// Outcome distribution of the gate cascade: stage `j` converts basis state
/// `j`, the last outcome is whatever passes all `d−1` stages.
pub fn cascade_probabilities(state: &RegisterState, basis: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let d = state.dim();
    if basis.shape() != (d, d) {
        return Err(TmError::DimensionMismatch { expected: d, got: basis.nrows() });
    }
    let stages = (0..d - 1)
        .map(|j| QpgSpec::new(basis.column(j).iter().copied().collect(), FRAC_PI_2))
        .collect::<Result<Vec<_>>>()?;
    let out = drop_cascade_with(state, &stages)?;
    let mut probs: Vec<f64> = out.slots.iter().map(|s| s.power()).collect();
    probs.push(out.residual.iter().map(|z| z.norm_sqr()).sum());
    for p in probs.iter_mut() {
        if *p < PROBABILITY_FLOOR {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// `|⟨b_j|ψ⟩|²` for every basis column.
pub fn born_probabilities(state: &RegisterState, basis: &DMatrix<Complex64>) -> Vec<f64> {
    (0..basis.ncols())
        .map(|j| {
            basis
                .column(j)
                .iter()
                .zip(state.red())
                .map(|(b, a)| b.conj() * a)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect()
}

/// Samples Bob's detector click.
pub fn bob_cascade_measure<R: Rng + ?Sized>(
    state: &RegisterState,
    basis: &DMatrix<Complex64>,
    rng: &mut R,
) -> Result<usize> {
    let probs = cascade_probabilities(state, basis)?;
    Ok(sample_index(&probs, rng))
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1);
    for (i, p) in probs.iter().enumerate().take(last) {
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u64,
    pub alice_basis: usize,
    pub symbol: usize,
    pub eve_basis: Option<usize>,
    pub eve_outcome: Option<usize>,
    pub bob_basis: usize,
    pub outcome: usize,
}

impl RoundLog {
    pub fn sifted(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    pub fn error(&self) -> bool {
        self.sifted() && self.outcome != self.symbol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdRecord {
    pub d: usize,
    pub n_bases: usize,
    pub eve: Eve,
    pub seed: u64,
    pub n_rounds: u64,
    pub sifted_length: u64,
    pub errors: u64,
    pub qber: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<Vec<RoundLog>>,
}

impl QkdRecord {
    pub fn sifting_rate(&self) -> f64 {
        self.sifted_length as f64 / self.n_rounds as f64
    }

    /// `√(q(1−q)/n)` on the sifted key.
    pub fn qber_sigma(&self, expected: f64) -> f64 {
        (expected * (1.0 - expected) / self.sifted_length.max(1) as f64).sqrt()
    }

    /// Per-round log as CSV.
    pub fn rounds_csv(&self) -> Option<String> {
        let rounds = self.rounds.as_ref()?;
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let mut out = String::from("round,alice_basis,symbol,eve_basis,eve_outcome,bob_basis,outcome,sifted,error\n");
        for r in rounds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.round,
                r.alice_basis,
                r.symbol,
                opt(r.eve_basis),
                opt(r.eve_outcome),
                r.bob_basis,
                r.outcome,
                r.sifted() as u8,
                r.error() as u8
            ));
        }
        Some(out)
    }
}

fn play_round(set: &MubSet, eve: Eve, seed: u64, round: u64) -> Result<RoundLog> {
    let mut rng = substream(seed, "bb84", round);
    let (d, m) = (set.dim, set.len());
    let alice_basis = rng.random_range(0..m);
    let symbol = rng.random_range(0..d);
    let mut state = RegisterState::new(set.state(alice_basis, symbol), false)?;
    let (mut eve_basis, mut eve_outcome) = (None, None);
    if eve == Eve::InterceptResend {
        let b = rng.random_range(0..m);
        let o = bob_cascade_measure(&state, &set.bases[b], &mut rng)?;
        state = RegisterState::new(set.state(b, o), false)?;
        eve_basis = Some(b);
        eve_outcome = Some(o);
    }
    let bob_basis = rng.random_range(0..m);
    let outcome = bob_cascade_measure(&state, &set.bases[bob_basis], &mut rng)?;
    Ok(RoundLog { round, alice_basis, symbol, eve_basis, eve_outcome, bob_basis, outcome })
}

/// Runs `n_rounds` independent rounds; each draws from its own stream.
pub fn bb84_run(d: usize, n_rounds: u64, n_bases: usize, eve: Eve, seed: u64, keep_log: bool) -> Result<QkdRecord> {
    if n_rounds == 0 {
        return Err(TmError::InvalidParameter("at least one round required".into()));
    }
    if n_bases < 2 {
        return Err(TmError::InvalidParameter("BB84 needs at least two bases".into()));
    }
    let set = mub_bases(d, n_bases)?;
    let (sifted, errors, rounds) = if keep_log {
        let logs = (0..n_rounds).into_par_iter().map(|r| play_round(&set, eve, seed, r)).collect::<Result<Vec<_>>>()?;
        let sifted = logs.iter().filter(|r| r.sifted()).count() as u64;
        let errors = logs.iter().filter(|r| r.error()).count() as u64;
        (sifted, errors, Some(logs))
    } else {
        let (s, e) = (0..n_rounds)
            .into_par_iter()
            .map(|r| play_round(&set, eve, seed, r).map(|l| (l.sifted() as u64, l.error() as u64)))
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        (s, e, None)
    };
    let qber = if sifted == 0 { 0.0 } else { errors as f64 / sifted as f64 };
    Ok(QkdRecord { d, n_bases, eve, seed, n_rounds, sifted_length: sifted, errors, qber, rounds })
}

/// `(1 − 1/M)(d − 1)/d` for ideal intercept-resend.
pub fn qber_theory(d: usize, n_bases: usize, strategy: Eve) -> Result<f64> {
    match strategy {
        Eve::InterceptResend => {
            let m = n_bases as f64;
            let d = d as f64;
            Ok((1.0 - 1.0 / m) * (d - 1.0) / d)
        }
        Eve::None => Err(TmError::Unsupported("no analytic QBER model for this strategy".into())),
    }
}

/// Exact intercept-resend QBER by enumerating Alice's state, Eve's basis
/// and outcome, with Bob in Alice's basis.
pub fn qber_enumerated(d: usize, n_bases: usize) -> Result<f64> {
    let set = mub_bases(d, n_bases)?;
    let mut err = 0.0;
    for a in 0..n_bases {
        for s in 0..d {
            let alice = RegisterState::new(set.state(a, s), false)?;
            for e in 0..n_bases {
                for (o, pe) in born_probabilities(&alice, &set.bases[e]).into_iter().enumerate() {
                    let resent = RegisterState::new(set.state(e, o), false)?;
                    let pb = born_probabilities(&resent, &set.bases[a]);
                    err += pe * (1.0 - pb[s]);
                }
            }
        }
    }
    Ok(err / (n_bases * d * n_bases) as f64)
}
