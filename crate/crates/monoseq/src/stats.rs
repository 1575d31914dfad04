//! Statistical reductions of batch output: moment summaries, the CLT
//! normalization, Kolmogorov-Smirnov distance, and the bound report that
//! compares tables against the theoretical envelopes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::value::{self, ValueTable};
use crate::variance::{self, VarianceTable};

/// Standard normal distribution function.
///
/// Hastings-type rational tail approximation, Abramowitz & Stegun
/// eq. 26.2.17; absolute error below 7.5e-8, ample for the KS tolerances
/// used here.
pub fn standard_normal_cdf(z: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let x = z.abs();
    let t = 1.0 / (1.0 + P * x);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper_tail = density * poly;
    if z >= 0.0 {
        1.0 - upper_tail
    } else {
        upper_tail
    }
}

/// Normalized selection count with an arbitrary centering:
/// sqrt(3) (L - center) / (2n)^{1/4}.
pub fn centered_statistic(length: u64, center: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    3f64.sqrt() * (length as f64 - center) / (2.0 * n as f64).powf(0.25)
}

/// The CLT normalization: centered at (2n)^{1/2}, the limit centering.
/// The gap between that and the true mean is part of what the distribution
/// checks measure.
pub fn clt_statistic(length: u64, n: usize) -> f64 {
    centered_statistic(length, (2.0 * n as f64).sqrt(), n)
}

/// Kolmogorov-Smirnov distance of a sample to the standard normal: the
/// largest gap between the empirical distribution function and the normal
/// one, checked from both sides at every sample point.
pub fn ks_to_standard_normal(zs: &[f64]) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let mut sorted = zs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &z) in sorted.iter().enumerate() {
        let phi = standard_normal_cdf(z);
        d = d.max((i + 1) as f64 / m - phi).max(phi - i as f64 / m);
    }
    Ok(d)
}

/// Histogram of normalized samples: 61 equal bins across [-4, 4] (odd
/// count, so zero is a bin center) plus one overflow bin on each side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// Bin boundaries, outermost ones infinite; one more entry than
    /// `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

const HISTOGRAM_INNER_BINS: usize = 61;
const HISTOGRAM_SPAN: f64 = 4.0;

/// Fixed-layout histogram of normalized statistics: 61 equal bins across
/// [-4, 4] plus two overflow bins with infinite outer edges.
pub fn histogram_of(zs: &[f64]) -> Histogram {
    let mut edges = Vec::with_capacity(HISTOGRAM_INNER_BINS + 3);
    edges.push(f64::NEG_INFINITY);
    for i in 0..=HISTOGRAM_INNER_BINS {
        let t = i as f64 / HISTOGRAM_INNER_BINS as f64;
        edges.push((1.0 - t) * -HISTOGRAM_SPAN + t * HISTOGRAM_SPAN);
    }
    edges.push(f64::INFINITY);
    let mut counts = vec![0u64; HISTOGRAM_INNER_BINS + 2];
    let width = 2.0 * HISTOGRAM_SPAN / HISTOGRAM_INNER_BINS as f64;
    for &z in zs {
        let bin = if z < -HISTOGRAM_SPAN {
            0
        } else if z >= HISTOGRAM_SPAN {
            counts.len() - 1
        } else {
            (((z + HISTOGRAM_SPAN) / width) as usize + 1).min(counts.len() - 2)
        };
        counts[bin] += 1;
    }
    Histogram { edges, counts }
}

/// Empirical moments and distribution diagnostics for one batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub n: usize,
    pub reps: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub stderr_mean: f64,
    /// KS distance of the CLT-normalized samples to the standard normal.
    pub ks_distance: f64,
    pub histogram: Histogram,
}

/// Reduce a batch of selection counts.
///
/// Moments accumulate in integer arithmetic, so the result is exactly
/// permutation-invariant in the sample order.
pub fn summarize(samples: &[u64], n: usize) -> Result<MonteCarloSummary> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: samples.len(),
        });
    }
    let m = samples.len() as u128;
    let sum: u128 = samples.iter().map(|&l| l as u128).sum();
    let sum_sq: u128 = samples.iter().map(|&l| (l as u128) * (l as u128)).sum();
    let mean = sum as f64 / m as f64;
    // unbiased: (m * sum_sq - sum^2) / (m (m - 1)), numerator exact
    let numerator = m * sum_sq - sum * sum;
    let variance = numerator as f64 / (m * (m - 1)) as f64;
    let zs: Vec<f64> = samples.iter().map(|&l| clt_statistic(l, n)).collect();
    Ok(MonteCarloSummary {
        n,
        reps: samples.len(),
        mean,
        variance,
        stderr_mean: (variance / samples.len() as f64).sqrt(),
        ks_distance: ks_to_standard_normal(&zs)?,
        histogram: histogram_of(&zs),
    })
}

/// One horizon's comparison against the mean and variance envelopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    /// v_n(0) from the table.
    pub mean: f64,
    /// (2n)^{1/2}.
    pub crisp_bound: f64,
    /// ((2n)^{1/2} - v_n(0)) / log n; absent at n = 1.
    pub gap_ratio: Option<f64>,
    /// w_n(0) from the table.
    pub variance: f64,
    pub variance_lower: f64,
    pub variance_upper: f64,
    pub mean_pass: bool,
    pub variance_pass: bool,
}

/// Bound rows for each requested horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.mean_pass && r.variance_pass)
    }
}

/// Evaluate the mean bound v_n(0) < (2n)^{1/2} and the variance sandwich
/// (1/3)v_n(0) - 2 <= w_n(0) <= (1/3)v_n(0) + (2/3)(1 + log n) at each
/// requested horizon, straight from the tables.
pub fn bound_report(vt: &ValueTable, wt: &VarianceTable, n_list: &[usize]) -> Result<BoundReport> {
    if vt.grid() != wt.grid() || vt.horizon() != wt.horizon() {
        return Err(Error::TableMismatch);
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 || n > vt.horizon() {
            return Err(Error::StageOutOfRange {
                k: n,
                n: vt.horizon(),
            });
        }
        let mean = value::value_at(vt, n, 0.0)?;
        let w = variance::variance_at(wt, n, 0.0)?;
        let crisp_bound = (2.0 * n as f64).sqrt();
        let log_n = (n as f64).ln();
        let variance_lower = mean / 3.0 - 2.0;
        let variance_upper = mean / 3.0 + 2.0 / 3.0 * (1.0 + log_n);
        rows.push(BoundRow {
            n,
            mean,
            crisp_bound,
            gap_ratio: (n > 1).then(|| (crisp_bound - mean) / log_n),
            variance: w,
            variance_lower,
            variance_upper,
            mean_pass: mean < crisp_bound,
            variance_pass: w >= variance_lower && w <= variance_upper,
        });
    }
    Ok(BoundReport { rows })
}
