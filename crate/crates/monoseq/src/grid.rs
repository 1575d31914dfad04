//! Uniform grid on [0, 1] plus the interpolation, quadrature, and root
//! finding helpers shared by the table builders.
//!
//! Functions are stored as samples at the nodes and evaluated between nodes
//! by linear interpolation.  Integrals use the composite trapezoid rule with
//! panels aligned to the nodes; an integration limit that falls inside a
//! panel splits that panel, so the rule is exact for the interpolant itself.

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest grid accepted by the table builders.
pub const MIN_GRID_POINTS: usize = 65;

/// Default grid resolution.  4096 panels: node coordinates are exact binary
/// fractions, so interpolation at a node returns the stored sample bit for bit.
pub const DEFAULT_GRID_POINTS: usize = 4097;

/// Default residual tolerance for threshold and critical-value bisection.
pub const DEFAULT_ROOT_TOLERANCE: f64 = 1e-12;

/// Uniform grid over [0, 1] with the bisection tolerance used against
/// functions sampled on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    points: usize,
    root_tolerance: f64,
}

impl GridSpec {
    /// Grid with `points` nodes and the default root tolerance.
    pub fn new(points: usize) -> Result<Self> {
        Self::with_root_tolerance(points, DEFAULT_ROOT_TOLERANCE)
    }

    /// Grid with an explicit bisection tolerance.
    ///
    /// The tolerance applies to the value residual, must be positive, and may
    /// not exceed the grid spacing.
    pub fn with_root_tolerance(points: usize, root_tolerance: f64) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::GridTooCoarse {
                min: MIN_GRID_POINTS,
                got: points,
            });
        }
        let spacing = 1.0 / (points - 1) as f64;
        if !(root_tolerance > 0.0 && root_tolerance <= spacing) {
            return Err(Error::BadRootTolerance(root_tolerance));
        }
        Ok(Self {
            points,
            root_tolerance,
        })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points - 1) as f64
    }

    pub fn root_tolerance(&self) -> f64 {
        self.root_tolerance
    }

    /// Coordinate of node `j`.
    pub fn node(&self, j: usize) -> f64 {
        debug_assert!(j < self.points);
        j as f64 / (self.points - 1) as f64
    }

    /// Index of the panel containing `x`, i.e. the largest `j` with
    /// node(j) <= x, clamped so that `j + 1` is always a valid node.
    pub(crate) fn panel_left_of(&self, x: f64) -> usize {
        let last = self.points - 2;
        let mut j = ((x * (self.points - 1) as f64) as usize).min(last);
        while j > 0 && x < self.node(j) {
            j -= 1;
        }
        while j < last && x >= self.node(j + 1) {
            j += 1;
        }
        j
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID_POINTS,
            root_tolerance: DEFAULT_ROOT_TOLERANCE,
        }
    }
}

/// Piecewise-linear evaluation of node samples at `x` in [0, 1].
/// Exact at the nodes.
pub(crate) fn interp(grid: &GridSpec, values: &[f64], x: f64) -> f64 {
    debug_assert_eq!(values.len(), grid.points());
    let j = grid.panel_left_of(x);
    let t = (x - grid.node(j)) * (grid.points() - 1) as f64;
    // two-sided form: exact at t = 0 and t = 1, so node queries return the
    // stored sample bit for bit
    (1.0 - t) * values[j] + t * values[j + 1]
}

/// Cumulative trapezoid integral of node samples: entry `j` holds the
/// integral from 0 to node `j`.  Compensated summation keeps the prefix
/// error flat across thousands of panels.
pub(crate) fn cumulative_trapezoid(grid: &GridSpec, values: &[f64]) -> Vec<f64> {
    let half_dx = 0.5 * grid.spacing();
    let mut cum = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    let mut carry = 0.0;
    cum.push(0.0);
    for pair in values.windows(2) {
        let term = half_dx * (pair[0] + pair[1]) - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
        cum.push(sum);
    }
    cum
}

/// Trapezoid integral of the interpolant between arbitrary limits
/// `a <= b`, using the precomputed cumulative integral for whole panels.
pub(crate) fn integral_between(
    grid: &GridSpec,
    values: &[f64],
    cum: &[f64],
    a: f64,
    b: f64,
) -> f64 {
    debug_assert!(a <= b);
    let ja = grid.panel_left_of(a);
    let jb = grid.panel_left_of(b);
    let fa = interp(grid, values, a);
    let fb = interp(grid, values, b);
    if ja == jb {
        return (b - a) * 0.5 * (fa + fb);
    }
    let head = (grid.node(ja + 1) - a) * 0.5 * (fa + values[ja + 1]);
    let tail = (b - grid.node(jb)) * 0.5 * (values[jb] + fb);
    head + (cum[jb] - cum[ja + 1]) + tail
}

/// Trapezoid integral of the interpolant between `a <= b` without a
/// precomputed prefix, by walking the covered panels.  Cost is linear in
/// the panel count of `[a, b]`; intended for the short acceptance windows
/// that one-off diagnostics integrate over.
pub(crate) fn integral_walk(grid: &GridSpec, values: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let ja = grid.panel_left_of(a);
    let jb = grid.panel_left_of(b);
    let fa = interp(grid, values, a);
    let fb = interp(grid, values, b);
    if ja == jb {
        return (b - a) * 0.5 * (fa + fb);
    }
    let half_dx = 0.5 * grid.spacing();
    let mut total = (grid.node(ja + 1) - a) * 0.5 * (fa + values[ja + 1]);
    for j in ja + 1..jb {
        total += half_dx * (values[j] + values[j + 1]);
    }
    total + (b - grid.node(jb)) * 0.5 * (values[jb] + fb)
}

/// Root of `interp(values, x) = target` on `[lo, 1]` for non-increasing
/// samples, by bisection on the value residual.
///
/// The caller guarantees `interp(lo) >= target >= interp(1)`.  Iteration
/// stops once the residual is within the grid's root tolerance or the
/// bracket can no longer shrink.
pub(crate) fn bisect_nonincreasing(grid: &GridSpec, values: &[f64], lo: f64, target: f64) -> f64 {
    let mut lo = lo;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let residual = interp(grid, values, mid) - target;
        if residual.abs() <= grid.root_tolerance() {
            return mid;
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
