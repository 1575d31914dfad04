//! Hand-integrated value functions for horizons k <= 3.
//!
//! Everything here is closed-form polynomial and radical arithmetic with no
//! grid, no interpolation, no quadrature.  The module exists as an
//! independent check on the dynamic-programming path and must not share
//! code with it.
//!
//! Derivation sketch, uniform model:
//!   v_1(s) = 1 - s                       (accept anything above s)
//!   v_2(s) = 3/2 - s - s^2/2             (thresholds still greedy, h_2 = 1)
//!   s_2*   = sqrt(2) - 1                 (root of v_2(s) = 1)
//!   h_3(s) = -1 + sqrt(3 + 2s + s^2)     for s < s_2*, else 1
//!   v_3(s) = (1 - h + s) v_2(s) + P(h) - P(s),  P(x) = 5x/2 - x^2/2 - x^3/6
//! with h = h_3(s); in the greedy region this collapses to
//!   v_3(s) = 11/6 - s - s^2/2 - s^3/3.

use crate::error::{Error, Result};

fn check_state(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfDomain {
            name: "s",
            value: s,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Expected number of selections with k <= 3 observations left from state s.
pub fn value(k: usize, s: f64) -> Result<f64> {
    check_state(s)?;
    match k {
        1 => Ok(1.0 - s),
        2 => Ok(1.5 - s - 0.5 * s * s),
        3 => {
            if s >= critical2() {
                Ok(11.0 / 6.0 - s - 0.5 * s * s - s * s * s / 3.0)
            } else {
                let h = threshold3(s);
                let p = |x: f64| 2.5 * x - 0.5 * x * x - x * x * x / 6.0;
                Ok((1.0 - h + s) * value(2, s)? + p(h) - p(s))
            }
        }
        _ => Err(Error::StageOutOfRange { k, n: 3 }),
    }
}

/// Acceptance threshold with three observations left.
pub fn threshold3(s: f64) -> f64 {
    if s >= critical2() {
        1.0
    } else {
        -1.0 + (3.0 + 2.0 * s + s * s).sqrt()
    }
}

/// Critical state for k = 2: v_2 crosses 1 at sqrt(2) - 1.
pub fn critical2() -> f64 {
    2f64.sqrt() - 1.0
}

/// v_3(0) in closed form: sqrt(3) + 1/6.
pub fn value3_at_zero() -> f64 {
    3f64.sqrt() + 1.0 / 6.0
}
