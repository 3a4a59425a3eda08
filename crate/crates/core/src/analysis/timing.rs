//! Joint solutions of `sin(gT + π/4) = 1` and `sin(√2·gT) = 1`.
//!
//! The first condition holds exactly on the grid `gT = (8k+1)π/4`; since √2 is
//! irrational the second can only hold approximately there. Candidates are
//! checked on that grid and then refined continuously by maximizing
//! [`joint_fidelity`] nearby.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI, SQRT_2};

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Default scan step for the continuous refinement.
pub const DEFAULT_REFINE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimingSolution {
    /// Candidate `gT = (8k+1)π/4`.
    pub gt: f64,
    pub k: u64,
    /// `|sin(gT + π/4) − 1|`.
    pub residual1: f64,
    /// `|sin(√2·gT) − 1|`.
    pub residual2: f64,
    pub joint_fidelity: f64,
    /// Best nearby point of the continuous joint problem.
    pub refined_gt: f64,
    pub refined_joint_fidelity: f64,
}

impl TimingSolution {
    pub fn max_residual(&self) -> f64 {
        self.residual1.max(self.residual2)
    }
}

pub fn residuals(gt: f64) -> (f64, f64) {
    ((1.0 - (gt + FRAC_PI_4).sin()).abs(), (1.0 - (SQRT_2 * gt).sin()).abs())
}

/// Process fidelity of a crossing with pulse area `gT` against the ideal map
/// on the one- and two-excitation blocks (rotation angles π/4 and π/2):
/// `[(sin(gT+π/4) + sin(√2·gT))/2]²`.
pub fn joint_fidelity(gt: f64) -> f64 {
    let s = 0.5 * ((gt + FRAC_PI_4).sin() + (SQRT_2 * gt).sin());
    s * s
}

pub fn solve_joint_timing(range: (f64, f64), tolerance: f64) -> Result<Vec<TimingSolution>> {
    solve_joint_timing_with_step(range, tolerance, DEFAULT_REFINE_STEP)
}

pub fn solve_joint_timing_with_step(range: (f64, f64), tolerance: f64, step: f64) -> Result<Vec<TimingSolution>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::EmptyRange { lo, hi });
    }
    if !(tolerance >= 0.0) {
        return Err(Error::parameter("tolerance", "must be non-negative"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::parameter("step", "must be positive"));
    }
    let k_min = ((4.0 * lo / PI - 1.0) / 8.0).ceil().max(0.0) as u64;
    let k_max = (4.0 * hi / PI - 1.0) / 8.0;
    if k_max < 0.0 {
        return Ok(Vec::new());
    }
    let k_max = k_max.floor() as u64;

    let mut out: Vec<TimingSolution> = (k_min..=k_max)
        .filter_map(|k| {
            let gt = (8 * k + 1) as f64 * FRAC_PI_4;
            let (residual1, residual2) = residuals(gt);
            if residual1 < tolerance && residual2 < tolerance {
                let (refined_gt, refined_joint_fidelity) = refine(gt, lo, hi, step);
                Some(TimingSolution { gt, k, residual1, residual2, joint_fidelity: joint_fidelity(gt), refined_gt, refined_joint_fidelity })
            } else {
                None
            }
        })
        .collect();
    out.sort_by(|a, b| a.max_residual().total_cmp(&b.max_residual()));
    Ok(out)
}

/// Grid scan of `joint_fidelity` over `gt ± π/8` followed by golden-section
/// search around the best grid point.
fn refine(gt: f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let a = (gt - PI / 8.0).max(lo);
    let b = (gt + PI / 8.0).min(hi);
    let n = ((b - a) / step).ceil() as usize;
    let mut best = (gt, joint_fidelity(gt));
    for i in 0..=n {
        let x = (a + i as f64 * step).min(b);
        let f = joint_fidelity(x);
        if f > best.1 {
            best = (x, f);
        }
    }
    let (mut l, mut r) = ((best.0 - step).max(a), (best.0 + step).min(b));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = r - ratio * (r - l);
    let mut x2 = l + ratio * (r - l);
    let (mut f1, mut f2) = (joint_fidelity(x1), joint_fidelity(x2));
    for _ in 0..100 {
        if r - l < 1e-13 * gt.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + ratio * (r - l);
            f2 = joint_fidelity(x2);
        } else {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - ratio * (r - l);
            f1 = joint_fidelity(x1);
        }
    }
    let x = 0.5 * (l + r);
    let f = joint_fidelity(x);
    if f >= best.1 {
        (x, f)
    } else {
        best
    }
}
