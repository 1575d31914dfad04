//! Policy simulation: full martingale traces, deterministic batch runs,
//! Poisson horizons, the offline baseline, and the coordinate-coupling
//! check.
//!
//! Every replicate draws from its own counter-based stream keyed by
//! (master seed, replicate index), so batch output is a pure function of
//! those two integers no matter how the work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::{quantile, DistributionModel};
use crate::error::{Error, Result};
use crate::value::{self, ValueTable};
use crate::variance::{self, VarianceTable};

/// Reproducible random stream for one replicate.
///
/// The variate sequence is a pure function of `(master_seed,
/// replicate_index)`; distinct indices select distinct cipher streams of
/// the same keyed generator and are independent for simulation purposes.
pub struct RngStream {
    master_seed: u64,
    replicate_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replicate_index);
        Self {
            master_seed,
            replicate_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replicate_index(&self) -> u64 {
        self.replicate_index
    }

    /// Next uniform variate in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random()
    }
}

/// Complete record of one simulated episode.
///
/// Index 0 of `running_max`, `length`, and `martingale` holds the initial
/// state; step j of the per-step vectors describes the j-th arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub n: usize,
    /// Arrivals in uniform coordinates, one per step.
    pub draws: Vec<f64>,
    /// Whether each arrival was selected.
    pub accepted: Vec<bool>,
    /// M_i: largest selected value after i arrivals; M_0 = 0.
    pub running_max: Vec<f64>,
    /// L_i: selections made after i arrivals; L_0 = 0.
    pub length: Vec<u64>,
    /// Y_i = L_i + v_{n-i}(M_i): conditional expectation of the final
    /// count given the first i arrivals.
    pub martingale: Vec<f64>,
    /// d_j = A_j + B_j, the martingale increments.
    pub diffs: Vec<f64>,
    /// Acceptance components A_j.
    pub a_parts: Vec<f64>,
    /// Drift components B_j.
    pub b_parts: Vec<f64>,
}

impl EpisodeTrace {
    /// Final selection count L_n.
    pub fn final_length(&self) -> u64 {
        *self.length.last().expect("length holds n + 1 entries")
    }
}

/// The acceptance rule: take `x` from state `m` with `k` left iff it lies
/// in the closed window [m, h_k(m)].
fn accepts(vt: &ValueTable, k: usize, m: f64, x: f64) -> Result<bool> {
    let h = value::threshold_at(vt, k, m)?;
    Ok(x >= m && x <= h)
}

/// Run one episode on a caller-supplied arrival sequence and record the
/// full trace.  The martingale column is filled from the value table
/// independently of the increment components, so their agreement is a
/// checkable property rather than a bookkeeping identity.
pub fn episode_from_draws(vt: &ValueTable, draws: &[f64]) -> Result<EpisodeTrace> {
    let n = vt.horizon();
    if draws.len() != n {
        return Err(Error::TooFewSamples {
            min: n,
            got: draws.len(),
        });
    }
    let mut accepted = Vec::with_capacity(n);
    let mut running_max = Vec::with_capacity(n + 1);
    let mut length = Vec::with_capacity(n + 1);
    let mut martingale = Vec::with_capacity(n + 1);
    let mut diffs = Vec::with_capacity(n);
    let mut a_parts = Vec::with_capacity(n);
    let mut b_parts = Vec::with_capacity(n);

    let mut m = 0.0;
    let mut l: u64 = 0;
    running_max.push(m);
    length.push(l);
    martingale.push(value::value_at(vt, n, m)?);
    for (i, &x) in draws.iter().enumerate() {
        let k = n - i;
        let parts = variance::ab_components(vt, k, m, x)?;
        let take = accepts(vt, k, m, x)?;
        if take {
            m = x;
            l += 1;
        }
        accepted.push(take);
        running_max.push(m);
        length.push(l);
        martingale.push(l as f64 + value::value_at(vt, k - 1, m)?);
        diffs.push(parts.a + parts.b);
        a_parts.push(parts.a);
        b_parts.push(parts.b);
    }

    Ok(EpisodeTrace {
        n,
        draws: draws.to_vec(),
        accepted,
        running_max,
        length,
        martingale,
        diffs,
        a_parts,
        b_parts,
    })
}

/// Draw n arrivals from the stream and record the full trace.
pub fn simulate_episode(vt: &ValueTable, rng: &mut RngStream) -> Result<EpisodeTrace> {
    let draws: Vec<f64> = (0..vt.horizon()).map(|_| rng.next_unit()).collect();
    episode_from_draws(vt, &draws)
}

/// Episode without trace recording: just the final count.
fn lean_length(vt: &ValueTable, rng: &mut RngStream) -> Result<u64> {
    let n = vt.horizon();
    let mut m = 0.0;
    let mut l = 0;
    for i in 0..n {
        let x = rng.next_unit();
        if accepts(vt, n - i, m, x)? {
            m = x;
            l += 1;
        }
    }
    Ok(l)
}

/// Batch of final counts, replicate r drawing from stream (master_seed, r).
///
/// Replicates fan out across the thread pool; output order is by replicate
/// index, so the result is bitwise identical at any parallelism level.
pub fn simulate_batch(vt: &ValueTable, reps: usize, master_seed: u64) -> Result<Vec<u64>> {
    if reps < 1 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|r| lean_length(vt, &mut RngStream::new(master_seed, r)))
        .collect()
}

/// Batch of final counts paired with each episode's summed per-step
/// conditional variance V.  Same determinism contract as
/// [`simulate_batch`]; the traces themselves are not retained.
pub fn simulate_batch_with_series(
    vt: &ValueTable,
    wt: &VarianceTable,
    reps: usize,
    master_seed: u64,
) -> Result<(Vec<u64>, Vec<f64>)> {
    if reps < 1 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    if vt.grid() != wt.grid() || vt.horizon() != wt.horizon() {
        return Err(Error::TableMismatch);
    }
    let pairs: Vec<(u64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(master_seed, r);
            let trace = simulate_episode(vt, &mut rng)?;
            let v = variance::conditional_variance_series(vt, wt, &trace)?;
            Ok((trace.final_length(), v))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Poisson(nu) sample from the stream.
///
/// Inversion of the cumulative distribution for small means; above that,
/// counting standard-exponential arrivals within budget nu, which stays
/// exact where a normal approximation would not be.
pub(crate) fn sample_poisson(nu: f64, rng: &mut RngStream) -> u64 {
    if nu <= 30.0 {
        let u = rng.next_unit();
        let mut k = 0u64;
        let mut p = (-nu).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= nu / k as f64;
            cdf += p;
        }
        k
    } else {
        let mut total = 0.0;
        let mut k = 0u64;
        loop {
            total += -(-rng.next_unit()).ln_1p();
            if total > nu {
                return k;
            }
            k += 1;
        }
    }
}

/// Run the fixed-horizon policy against a Poisson(nu) number of arrivals.
///
/// Arrival i <= min(N, n) is judged with threshold h_{n-i+1}; if the
/// sequence outlasts the policy's horizon, the surplus arrivals are
/// rejected.  Returns the number of selections.
pub fn simulate_poisson_horizon(vt: &ValueTable, nu: f64, rng: &mut RngStream) -> Result<u64> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "nu",
            value: nu,
            range: "(0, inf)",
        });
    }
    let n = vt.horizon();
    let arrivals = sample_poisson(nu, rng);
    let mut m = 0.0;
    let mut l = 0;
    for i in 0..n.min(arrivals as usize) {
        let x = rng.next_unit();
        if accepts(vt, n - i, m, x)? {
            m = x;
            l += 1;
        }
    }
    Ok(l)
}

/// Batch of Poisson-horizon final counts, replicate r drawing from stream
/// (master_seed, r).  Same determinism contract as [`simulate_batch`].
pub fn simulate_poisson_batch(
    vt: &ValueTable,
    nu: f64,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<u64>> {
    if reps < 1 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|r| simulate_poisson_horizon(vt, nu, &mut RngStream::new(master_seed, r)))
        .collect()
}

/// Length of the longest non-decreasing subsequence, by patience sorting:
/// `tails[c]` holds the smallest possible last element of a subsequence of
/// length c + 1, and each arrival replaces the first tail above it.
pub fn offline_lis(draws: &[f64]) -> usize {
    let mut tails: Vec<f64> = Vec::new();
    for &x in draws {
        let idx = tails.partition_point(|&t| t <= x);
        if idx == tails.len() {
            tails.push(x);
        } else {
            tails[idx] = x;
        }
    }
    tails.len()
}

/// Feed one set of uniform variates through the policy twice, once in
/// uniform coordinates and once mapped to exponential coordinates with
/// the thresholds mapped the same way, and report whether the two
/// acceptance sequences agree step by step.
pub fn coupled_invariance_check(vt: &ValueTable, rng: &mut RngStream) -> Result<bool> {
    let n = vt.horizon();
    let mut m_u = 0.0;
    let mut m_e = 0.0;
    for i in 0..n {
        let u = rng.next_unit();
        let k = n - i;
        let take_u = accepts(vt, k, m_u, u)?;

        let x_e = quantile(DistributionModel::ExponentialMean1, u)?;
        let h_e = value::exponential_threshold_at(vt, k, m_e)?;
        let take_e = x_e >= m_e && x_e <= h_e;

        if take_u != take_e {
            return Ok(false);
        }
        if take_u {
            m_u = u;
            m_e = x_e;
        }
    }
    Ok(true)
}
