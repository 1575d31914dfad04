//! Structural checks of the computed tables: every inequality the theory
//! guarantees, evaluated over the grid with an explicit worst case and
//! tolerance per property.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid;
use crate::value::{self, ValueTable};
use crate::variance::{self, VarianceTable};

/// Outcome of one property check.  `worst` is the largest value attained
/// by the quantity that the property requires to stay at or below
/// `tolerance`; vacuous checks (nothing to test at this horizon) report
/// zero and pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRecord {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn record(name: &str, worst: f64, tolerance: f64) -> PropertyRecord {
    let worst = if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    };
    PropertyRecord {
        name: name.to_string(),
        worst,
        tolerance,
        pass: worst <= tolerance,
    }
}

/// Run every table-level property and return one record per property.
///
/// Checks that touch every (stage, node) pair are linear in the table
/// size; pairwise comparisons are folded through running extrema so
/// nothing here is quadratic.
pub fn property_report(vt: &ValueTable, wt: &VarianceTable) -> Result<Vec<PropertyRecord>> {
    if vt.grid() != wt.grid() || vt.horizon() != wt.horizon() {
        return Err(Error::TableMismatch);
    }
    let n = vt.horizon();
    let g = vt.grid().points();
    let spacing = vt.grid().spacing();
    let node = |j: usize| vt.grid().node(j);
    let stage = |k: usize| vt.values_at_stage(k).expect("stage within horizon");
    let thresholds = |k: usize| vt.thresholds_at_stage(k).expect("stage within horizon");

    // v_k non-increasing in s, adjacent nodes
    let mut monotone = f64::NEG_INFINITY;
    // 0 <= v_k - v_{k-1} <= h_k - s at every node
    let mut diff_bounds = f64::NEG_INFINITY;
    // v_k - v_{k-1} non-increasing in s (equivalent to the pairwise
    // submodularity inequality), via a running minimum
    let mut submodular = f64::NEG_INFINITY;
    // v_{k+1} - 2 v_k + v_{k-1} <= 0
    let mut concave_k = f64::NEG_INFINITY;
    // raw second central differences of v_k along s
    let mut concave_s = f64::NEG_INFINITY;
    for k in 1..=n {
        let prev = stage(k - 1);
        let cur = stage(k);
        let h_row = thresholds(k);
        let mut running_min_gain = f64::INFINITY;
        for j in 0..g {
            if j + 1 < g {
                monotone = monotone.max(cur[j + 1] - cur[j]);
            }
            let gain = cur[j] - prev[j];
            diff_bounds = diff_bounds.max(-gain).max(gain - (h_row[j] - node(j)));
            submodular = submodular.max(gain - running_min_gain);
            running_min_gain = running_min_gain.min(gain);
            if j >= 1 && j + 1 < g {
                concave_s = concave_s.max(cur[j - 1] - 2.0 * cur[j] + cur[j + 1]);
            }
        }
        if k < n {
            let next = stage(k + 1);
            for j in 0..g {
                concave_k = concave_k.max(next[j] - 2.0 * cur[j] + prev[j]);
            }
        }
    }

    // h_{k+1} <= h_k + grid slack, and the means' first differences
    // non-increasing
    let mut threshold_monotone = f64::NEG_INFINITY;
    let mut mean_concave = f64::NEG_INFINITY;
    for k in 1..n {
        let h_cur = thresholds(k);
        let h_next = thresholds(k + 1);
        for j in 0..g {
            threshold_monotone = threshold_monotone.max(h_next[j] - h_cur[j]);
        }
        let gain_next = stage(k + 1)[0] - stage(k)[0];
        let gain_cur = stage(k)[0] - stage(k - 1)[0];
        mean_concave = mean_concave.max(gain_next - gain_cur);
    }

    // convexity after the change of coordinates e = -log(1 - u), second
    // divided differences over a coarse interior sub-grid; the cutoff
    // keeps the map's conditioning in check
    let mut exp_convex = f64::NEG_INFINITY;
    let stride = ((g - 1) / 256).max(1);
    let cutoff = 1.0 - 1.0 / 64.0;
    for k in 1..=n {
        let cur = stage(k);
        let mut window: Vec<(f64, f64)> = Vec::with_capacity(3);
        let mut j = stride;
        while j < g - 1 && node(j) <= cutoff {
            let e = -(-node(j)).ln_1p();
            window.push((e, cur[j]));
            if window.len() == 3 {
                let (e0, f0) = window[0];
                let (e1, f1) = window[1];
                let (e2, f2) = window[2];
                let dd = ((f2 - f1) / (e2 - e1) - (f1 - f0) / (e1 - e0)) / (e2 - e0);
                exp_convex = exp_convex.max(-dd);
                window.remove(0);
            }
            j += stride;
        }
    }

    // -(1 - u) / (h_{k+1}(u) - u) <= (1 - u) v_k'(u) at interior nodes
    let mut exp_derivative = f64::NEG_INFINITY;
    for k in 1..n {
        let h_next = thresholds(k + 1);
        let d_cur = vt.derivatives_at_stage(k).expect("stage within horizon");
        for j in 1..g - 1 {
            let u = node(j);
            let width = h_next[j] - u;
            if width <= 0.0 {
                continue;
            }
            let lhs = -(1.0 - u) / width;
            let rhs = (1.0 - u) * d_cur[j];
            exp_derivative = exp_derivative.max(lhs - rhs);
        }
    }

    // below the previous stage's critical value, the threshold's slope is
    // the ratio of derivatives; everywhere it stays within [0, 1]
    let mut slope_ratio = f64::NEG_INFINITY;
    let mut slope_range = f64::NEG_INFINITY;
    for k in 1..=n {
        let h_row = thresholds(k);
        for j in 0..g - 1 {
            let slope = (h_row[j + 1] - h_row[j]) / spacing;
            slope_range = slope_range.max(-slope).max(slope - 1.0);
        }
        if k >= 3 {
            let crit_prev = value::critical_value(vt, k - 1)?;
            let d_prev = vt.derivatives_at_stage(k - 1)?;
            for j in 1..g - 1 {
                if node(j + 1) >= crit_prev {
                    break;
                }
                let fd = (h_row[j + 1] - h_row[j - 1]) / (2.0 * spacing);
                let ratio = d_prev[j] / grid::interp(vt.grid(), d_prev, h_row[j]);
                slope_ratio = slope_ratio.max((fd - ratio).abs());
            }
        }
    }

    // v_k(0) < (2k)^{1/2} for every stage
    let mut mean_bound = f64::NEG_INFINITY;
    for k in 1..=n {
        mean_bound = mean_bound.max(stage(k)[0] - (2.0 * k as f64).sqrt());
    }

    // variance rows: sandwich and sign
    let mut sandwich = f64::NEG_INFINITY;
    let mut nonnegative = f64::NEG_INFINITY;
    for k in 1..=n {
        let v_row = stage(k);
        let w_row = wt.values_at_stage(k)?;
        let log_k = (k as f64).ln();
        for j in 0..g {
            let lower = v_row[j] / 3.0 - 2.0;
            let upper = v_row[j] / 3.0 + 2.0 / 3.0 * (1.0 + log_k);
            sandwich = sandwich.max(lower - w_row[j]).max(w_row[j] - upper);
            nonnegative = nonnegative.max(-w_row[j]);
        }
    }

    // sampled martingale components stay in range
    let mut ab_bounded = f64::NEG_INFINITY;
    let mut ks: Vec<usize> = vec![1, 2, n / 2, n];
    ks.retain(|&k| (1..=n).contains(&k));
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        for i in 0..=32 {
            for m in 0..=32 {
                let s = i as f64 / 32.0;
                let x = m as f64 / 32.0;
                let parts = variance::ab_components(vt, k, s, x)?;
                ab_bounded = ab_bounded
                    .max(-parts.a)
                    .max(parts.a - 1.0)
                    .max(-1.0 - parts.b)
                    .max(parts.b)
                    .max((parts.a + parts.b).abs() - 1.0);
            }
        }
    }

    // the one-step mean of the martingale increment vanishes at the nodes
    let mut drift = f64::NEG_INFINITY;
    let drift_stride = ((g - 1) / 64).max(1);
    for k in 1..=n {
        let mut j = 0;
        while j < g {
            let d = variance::drift_at(vt, k, node(j))?;
            drift = drift.max(d.abs());
            j += drift_stride;
        }
    }

    Ok(vec![
        record("value_monotone_in_s", monotone, 1e-12),
        record("difference_bounds", diff_bounds, 1e-12),
        record("submodular_in_k", submodular, 1e-10),
        record("threshold_monotone_in_k", threshold_monotone, spacing),
        record("value_concave_in_k", concave_k, 1e-10),
        record("mean_concave_in_horizon", mean_concave, 1e-10),
        record("value_concave_in_s", concave_s, 1e-8),
        record("exponential_value_convex", exp_convex, 1e-8),
        record("exponential_derivative_lower_bound", exp_derivative, 1e-9),
        record(
            "threshold_slope_matches_derivative_ratio",
            slope_ratio,
            1e-3,
        ),
        record("threshold_slope_in_unit_interval", slope_range, 1e-6),
        record("mean_below_sqrt_2n", mean_bound, 0.0),
        record("variance_sandwich", sandwich, 1e-9),
        record("variance_nonnegative", nonnegative, 0.0),
        record("ab_components_bounded", ab_bounded, 0.0),
        record("martingale_drift_at_nodes", drift, 1e-10),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::value::build_value_table;
    use crate::variance::build_variance_table;

    #[test]
    fn all_properties_pass_on_midsize_table() {
        let vt = build_value_table(50, GridSpec::new(1025).unwrap()).unwrap();
        let wt = build_variance_table(&vt);
        let report = property_report(&vt, &wt).unwrap();
        assert_eq!(report.len(), 16);
        for rec in &report {
            assert!(
                rec.pass,
                "{}: worst {} vs tolerance {}",
                rec.name, rec.worst, rec.tolerance
            );
        }
        let submodular = report.iter().find(|r| r.name == "submodular_in_k").unwrap();
        assert!(submodular.worst <= 1e-10);
        let mean_bound = report
            .iter()
            .find(|r| r.name == "mean_below_sqrt_2n")
            .unwrap();
        assert!(mean_bound.worst < 0.0);
    }

    #[test]
    fn tiny_horizons_are_handled() {
        for n in [1, 2] {
            let vt = build_value_table(n, GridSpec::new(129).unwrap()).unwrap();
            let wt = build_variance_table(&vt);
            let report = property_report(&vt, &wt).unwrap();
            for rec in &report {
                assert!(rec.pass, "n={n} {}: worst {}", rec.name, rec.worst);
            }
        }
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let vt = build_value_table(3, GridSpec::new(129).unwrap()).unwrap();
        let other = build_value_table(3, GridSpec::new(257).unwrap()).unwrap();
        let wt = build_variance_table(&other);
        assert_eq!(property_report(&vt, &wt), Err(Error::TableMismatch));
    }
}
