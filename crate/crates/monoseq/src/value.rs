//! Exact finite-horizon dynamic programming for the optimal selection policy.
//!
//! State is the last selected value in uniform coordinates.  With k
//! observations left from state s the optimal policy accepts an arrival x
//! exactly when x is in [s, h_k(s)], and the expected number of future
//! selections satisfies the recursion
//!
//!   v_k(s) = (1 - h_k(s) + s) v_{k-1}(s) + int_s^{h_k(s)} (1 + v_{k-1}(x)) dx
//!
//! with v_0 = 0.  The threshold h_k(s) is 1 while v_{k-1}(s) <= 1 (the
//! greedy region) and otherwise the unique root of
//! v_{k-1}(s) = 1 + v_{k-1}(h).  The builder sweeps k upward, sampling
//! every function on one shared grid; integrals use node-aligned trapezoid
//! panels and are exact for the stored piecewise-linear interpolant.
//!
//! Derivatives ride along through the one-step relation
//! v_k'(s) = -1 + (1 - h_k(s) + s) v_{k-1}'(s), seeded by v_0' = 0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};

/// Value functions, thresholds, derivatives, and critical values for one
/// horizon, sampled on a shared grid.  Immutable once built; cheap to share
/// across threads behind a reference.
#[derive(Debug, Clone)]
pub struct ValueTable {
    grid: GridSpec,
    horizon: usize,
    /// Row k in 0..=n: v_k at the grid nodes.
    values: Vec<f64>,
    /// Row k-1 for k in 1..=n: h_k at the grid nodes.
    thresholds: Vec<f64>,
    /// Row k-1 for k in 1..=n: v_k' at the grid nodes.
    derivatives: Vec<f64>,
    /// Entry k-1 for k in 1..=n: the state where v_k crosses 1, or 0 when
    /// v_k(0) <= 1 and the whole state space is greedy.
    critical: Vec<f64>,
}

impl ValueTable {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Sampled v_k, one entry per grid node.
    pub fn values_at_stage(&self, k: usize) -> Result<&[f64]> {
        if k > self.horizon {
            return Err(self.stage_error(k));
        }
        let g = self.grid.points();
        Ok(&self.values[k * g..(k + 1) * g])
    }

    /// Sampled h_k for k in 1..=n.
    pub fn thresholds_at_stage(&self, k: usize) -> Result<&[f64]> {
        if k == 0 || k > self.horizon {
            return Err(self.stage_error(k));
        }
        let g = self.grid.points();
        Ok(&self.thresholds[(k - 1) * g..k * g])
    }

    /// Sampled v_k' for k in 1..=n.
    pub fn derivatives_at_stage(&self, k: usize) -> Result<&[f64]> {
        if k == 0 || k > self.horizon {
            return Err(self.stage_error(k));
        }
        let g = self.grid.points();
        Ok(&self.derivatives[(k - 1) * g..k * g])
    }

    /// Critical values s_k* for k = 1..=n, in stage order.
    pub fn critical_values(&self) -> &[f64] {
        &self.critical
    }

    fn stage_error(&self, k: usize) -> Error {
        Error::StageOutOfRange { k, n: self.horizon }
    }
}

fn check_unit_interval(name: &'static str, s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfDomain {
            name,
            value: s,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Build the full table for horizon `n` by sweeping the recursion upward.
///
/// Within one stage the nodes are independent and computed in parallel;
/// the result does not depend on the degree of parallelism.
pub fn build_value_table(n: usize, grid: GridSpec) -> Result<ValueTable> {
    if n < 1 {
        return Err(Error::EmptyHorizon);
    }
    let g = grid.points();
    let mut values = vec![0.0; g]; // v_0
    values.reserve_exact(n * g);
    let mut thresholds = Vec::with_capacity(n * g);
    let mut derivatives = Vec::with_capacity(n * g);
    let mut critical = Vec::with_capacity(n);

    for k in 1..=n {
        let prev = &values[(k - 1) * g..k * g];
        let dprev: Option<&[f64]> = if k >= 2 {
            Some(&derivatives[(k - 2) * g..(k - 1) * g])
        } else {
            None // v_0' = 0
        };
        let integrand: Vec<f64> = prev.iter().map(|v| 1.0 + v).collect();
        let cum = grid::cumulative_trapezoid(&grid, &integrand);

        let mut row_v = vec![0.0; g];
        let mut row_h = vec![0.0; g];
        let mut row_d = vec![0.0; g];
        row_v
            .par_iter_mut()
            .zip(row_h.par_iter_mut())
            .zip(row_d.par_iter_mut())
            .enumerate()
            .for_each(|(j, ((v_out, h_out), d_out))| {
                let s = grid.node(j);
                let vps = prev[j];
                let h = if vps <= 1.0 {
                    1.0
                } else {
                    grid::bisect_nonincreasing(&grid, prev, s, vps - 1.0)
                };
                let keep = 1.0 - h + s;
                *v_out = keep * vps + grid::integral_between(&grid, &integrand, &cum, s, h);
                *h_out = h;
                *d_out = -1.0 + keep * dprev.map_or(0.0, |d| d[j]);
            });

        critical.push(if row_v[0] <= 1.0 {
            0.0
        } else {
            grid::bisect_nonincreasing(&grid, &row_v, 0.0, 1.0)
        });
        values.extend_from_slice(&row_v);
        thresholds.extend_from_slice(&row_h);
        derivatives.extend_from_slice(&row_d);
    }

    Ok(ValueTable {
        grid,
        horizon: n,
        values,
        thresholds,
        derivatives,
        critical,
    })
}

/// v_k(s) by linear interpolation; exact at the grid nodes.
pub fn value_at(table: &ValueTable, k: usize, s: f64) -> Result<f64> {
    check_unit_interval("s", s)?;
    let row = table.values_at_stage(k)?;
    Ok(grid::interp(&table.grid, row, s))
}

/// h_k(s); off-node states interpolate the stored roots rather than
/// re-solving, which is within grid spacing of the exact threshold because
/// h_k is monotone with slope at most 1.
pub fn threshold_at(table: &ValueTable, k: usize, s: f64) -> Result<f64> {
    check_unit_interval("s", s)?;
    let row = table.thresholds_at_stage(k)?;
    Ok(grid::interp(&table.grid, row, s).clamp(s, 1.0))
}

/// The state where v_k crosses 1; zero when the whole state space is greedy.
pub fn critical_value(table: &ValueTable, k: usize) -> Result<f64> {
    if k == 0 || k > table.horizon {
        return Err(Error::StageOutOfRange {
            k,
            n: table.horizon,
        });
    }
    Ok(table.critical[k - 1])
}

/// v_k'(s) at an interior state, by linear interpolation of the sampled
/// derivative recursion.
pub fn derivative_at(table: &ValueTable, k: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfDomain {
            name: "s",
            value: s,
            range: "(0, 1)",
        });
    }
    let row = table.derivatives_at_stage(k)?;
    Ok(grid::interp(&table.grid, row, s))
}

/// Value function in exponential coordinates: the state map u = 1 - e^{-e}
/// carries the uniform table over without new quadrature.
pub fn exponential_value_at(table: &ValueTable, k: usize, e: f64) -> Result<f64> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::OutOfDomain {
            name: "e",
            value: e,
            range: "[0, inf)",
        });
    }
    value_at(table, k, -(-e).exp_m1())
}

/// Threshold in exponential coordinates; infinite in the greedy region,
/// where every arrival above the state is accepted.
pub fn exponential_threshold_at(table: &ValueTable, k: usize, e: f64) -> Result<f64> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::OutOfDomain {
            name: "e",
            value: e,
            range: "[0, inf)",
        });
    }
    let h = threshold_at(table, k, -(-e).exp_m1())?;
    if h >= 1.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(-(-h).ln_1p())
    }
}
