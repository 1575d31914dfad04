//! Conditional variances of the remaining selection count, and the
//! martingale pieces behind them.
//!
//! With k observations left from state s, the remaining count T has mean
//! v_k(s) and variance w_k(s).  Conditioning on the next arrival gives the
//! one-step recursion
//!
//!   w_k(s) = int_s^h [(1 + v_{k-1}(x))^2 + w_{k-1}(x)] dx
//!          + (1 - h + s) [v_{k-1}(s)^2 + w_{k-1}(s)] - v_k(s)^2
//!
//! with h = h_k(s) and w_0 = 0: the bracketed terms are the conditional
//! second moments after an acceptance at x and after a rejection.
//!
//! The martingale view splits one step's increment d into an acceptance
//! part A and a drift part B.  Their defining property, E[d | state] = 0,
//! is exposed as [`drift_at`]; the per-step conditional variance
//! E[d^2 | state] = E[A^2 | state] - B^2 summed along a trace is
//! [`conditional_variance_series`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::simulate::EpisodeTrace;
use crate::value::{self, ValueTable};

/// Sampled conditional variances w_k on the grid of the value table the
/// builder consumed.  Immutable once built.
#[derive(Debug, Clone)]
pub struct VarianceTable {
    grid: GridSpec,
    horizon: usize,
    /// Row k in 0..=n: w_k at the grid nodes.
    wvalues: Vec<f64>,
}

impl VarianceTable {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Sampled w_k, one entry per grid node.
    pub fn values_at_stage(&self, k: usize) -> Result<&[f64]> {
        if k > self.horizon {
            return Err(Error::StageOutOfRange { k, n: self.horizon });
        }
        let g = self.grid.points();
        Ok(&self.wvalues[k * g..(k + 1) * g])
    }
}

/// One step of the optimality martingale, split into the acceptance
/// contribution `a` and the no-selection drift `b`.  The increment is
/// exactly `a + b`, and the stored ranges give |a + b| <= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbParts {
    /// Acceptance contribution, in [0, 1]; zero when the arrival is
    /// rejected.
    pub a: f64,
    /// Drift from consuming one observation, in [-1, 0].
    pub b: f64,
}

/// Build the conditional-variance table over the same grid and horizon as
/// the value table, reusing its stored thresholds.
pub fn build_variance_table(vt: &ValueTable) -> VarianceTable {
    let grid = *vt.grid();
    let g = grid.points();
    let n = vt.horizon();
    let mut wvalues = vec![0.0; g]; // w_0
    wvalues.reserve_exact(n * g);

    for k in 1..=n {
        let v_prev = vt.values_at_stage(k - 1).expect("stage within horizon");
        let v_cur = vt.values_at_stage(k).expect("stage within horizon");
        let h_row = vt.thresholds_at_stage(k).expect("stage within horizon");
        let w_prev = &wvalues[(k - 1) * g..k * g];
        // conditional second moment after accepting at x
        let integrand: Vec<f64> = (0..g)
            .map(|j| {
                let lifted = 1.0 + v_prev[j];
                lifted * lifted + w_prev[j]
            })
            .collect();
        let cum = grid::cumulative_trapezoid(&grid, &integrand);

        let mut row = vec![0.0; g];
        row.par_iter_mut().enumerate().for_each(|(j, out)| {
            let s = grid.node(j);
            let h = h_row[j];
            let second_moment = grid::integral_between(&grid, &integrand, &cum, s, h)
                + (1.0 - h + s) * (v_prev[j] * v_prev[j] + w_prev[j]);
            let w = second_moment - v_cur[j] * v_cur[j];
            if w < 0.0 {
                if w < -1e-8 {
                    log::warn!("clamping w_{k}(node {j}) = {w:e} to zero");
                }
                *out = 0.0;
            } else {
                *out = w;
            }
        });
        wvalues.extend_from_slice(&row);
    }

    VarianceTable {
        grid,
        horizon: n,
        wvalues,
    }
}

/// w_k(s) by linear interpolation; exact at the grid nodes.
pub fn variance_at(table: &VarianceTable, k: usize, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfDomain {
            name: "s",
            value: s,
            range: "[0, 1]",
        });
    }
    let row = table.values_at_stage(k)?;
    Ok(grid::interp(table.grid(), row, s))
}

/// Martingale increment components for an arrival `x` seen from state `s`
/// with `k` observations left.
///
/// `b = v_{k-1}(s) - v_k(s)` and, when `x` lands in the closed acceptance
/// window `[s, h_k(s)]`, `a = 1 + v_{k-1}(x) - v_{k-1}(s)`; otherwise
/// `a = 0`.  Both are clamped to their mathematical ranges so rounding can
/// never push `|a + b|` past 1.
pub fn ab_components(vt: &ValueTable, k: usize, s: f64, x: f64) -> Result<AbParts> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    let h = value::threshold_at(vt, k, s)?;
    let vps = value::value_at(vt, k - 1, s)?;
    let b = (vps - value::value_at(vt, k, s)?).clamp(-1.0, 0.0);
    let a = if x >= s && x <= h {
        (1.0 + value::value_at(vt, k - 1, x)? - vps).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(AbParts { a, b })
}

/// Conditional mean of the martingale increment from state `s` with `k`
/// left: the integral of the acceptance part over the window plus the
/// drift.  Must vanish up to quadrature error; exposed as a diagnostic.
pub fn drift_at(vt: &ValueTable, k: usize, s: f64) -> Result<f64> {
    let h = value::threshold_at(vt, k, s)?;
    let v_prev = vt.values_at_stage(k - 1)?;
    let vps = grid::interp(vt.grid(), v_prev, s);
    let b = vps - value::value_at(vt, k, s)?;
    // int_s^h (1 + v_{k-1}(x) - v_{k-1}(s)) dx
    let window = grid::integral_walk(vt.grid(), v_prev, s, h) + (h - s) * (1.0 - vps);
    Ok(window + b)
}

/// Exact integral over [s, h] of (1 + v_{k-1}(x) - vps)^2 for the
/// piecewise-linear interpolant: each panel contributes
/// width * (a^2 + ab + b^2) / 3 for endpoint excesses a, b.
fn squared_excess_integral(grid: &GridSpec, v_prev: &[f64], s: f64, h: f64, vps: f64) -> f64 {
    if h <= s {
        return 0.0;
    }
    let excess = |v: f64| 1.0 + v - vps;
    let j_end = grid.panel_left_of(h);
    let mut j = grid.panel_left_of(s);
    let mut x0 = s;
    let mut a = excess(grid::interp(grid, v_prev, s));
    let mut total = 0.0;
    while j < j_end {
        let x1 = grid.node(j + 1);
        let b = excess(v_prev[j + 1]);
        total += (x1 - x0) * (a * a + a * b + b * b) / 3.0;
        x0 = x1;
        a = b;
        j += 1;
    }
    let b = excess(grid::interp(grid, v_prev, h));
    total + (h - x0) * (a * a + a * b + b * b) / 3.0
}

/// Sum over a trace of the per-step conditional variances
/// E[d_j^2 | state before j] = E[A_j^2 | state] - B_j^2.
///
/// Averaged over many traces this recovers w_n(0) by the tower property;
/// its sample variance is the quantity the log-squared variance bound
/// controls.  The variance table is only consulted to reject tables that
/// do not belong together.
pub fn conditional_variance_series(
    vt: &ValueTable,
    wt: &VarianceTable,
    trace: &EpisodeTrace,
) -> Result<f64> {
    if vt.grid() != wt.grid() || vt.horizon() != wt.horizon() {
        return Err(Error::TableMismatch);
    }
    let n = vt.horizon();
    if trace.n != n {
        return Err(Error::TableMismatch);
    }
    let mut total = 0.0;
    for j in 1..=n {
        let k = n - j + 1;
        let s = trace.running_max[j - 1];
        let h = value::threshold_at(vt, k, s)?;
        let v_prev = vt.values_at_stage(k - 1)?;
        let vps = grid::interp(vt.grid(), v_prev, s);
        let b = vps - value::value_at(vt, k, s)?;
        let second = squared_excess_integral(vt.grid(), v_prev, s, h, vps);
        // each term is a conditional variance, nonnegative by Jensen;
        // rounding may leave a tiny negative
        total += (second - b * b).max(0.0);
    }
    Ok(total)
}
