//! Piecewise-in-time supersolution envelope bounding the support of a
//! solution with local drift.
//!
//! With `α = (m-1)M`, `τ = 1/α`, `C₁ = (e+1)Mτ + 1`, the pressure on the
//! `k`-th window `[kτ, (k+1)τ]` is dominated by
//! `φ(x, s) = e^{αs} M (R + C₁k + (e+1)Ms + 1 - x)_+`, `s = t - kτ`,
//! so the support at time `t` lies in `(-∞, R + C₁⌈t/τ⌉]`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionEnvelope {
    /// Initial right support edge.
    pub right: f64,
    /// Initial left support edge, mirrored bound.
    pub left: f64,
    /// `‖B‖∞ + ‖B_x‖∞ + ‖u‖∞`.
    pub norm: f64,
    pub m: f64,
}

impl SupersolutionEnvelope {
    pub fn new(right: f64, norm: f64, m: f64) -> Result<Self> {
        Self::two_sided(right, right, norm, m)
    }

    pub fn two_sided(left: f64, right: f64, norm: f64, m: f64) -> Result<Self> {
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "envelope norm M must be positive, got {norm}"
            )));
        }
        if !(m > 1.0) {
            return Err(Error::InvalidParameter(format!("m must exceed 1, got {m}")));
        }
        Ok(SupersolutionEnvelope {
            right,
            left,
            norm,
            m,
        })
    }

    pub fn alpha(&self) -> f64 {
        (self.m - 1.0) * self.norm
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.alpha()
    }

    pub fn c1(&self) -> f64 {
        (E + 1.0) * self.norm * self.tau() + 1.0
    }

    /// Number of windows needed to reach `t`.
    pub fn windows(&self, t: f64) -> f64 {
        (t.max(0.0) / self.tau()).ceil()
    }

    /// `φ` on window `k`; `t` is absolute time.
    pub fn phi(&self, x: f64, t: f64, k: u32) -> f64 {
        let s = t - k as f64 * self.tau();
        let edge = self.window_edge(s, k);
        (self.alpha() * s).exp() * self.norm * (edge - x).max(0.0)
    }

    fn window_edge(&self, s: f64, k: u32) -> f64 {
        self.right + self.c1() * k as f64 + (E + 1.0) * self.norm * s + 1.0
    }

    /// Right edge of `φ` on window `k` at absolute time `t`.
    pub fn phi_edge(&self, t: f64, k: u32) -> f64 {
        self.window_edge(t - k as f64 * self.tau(), k)
    }

    pub fn right_bound(&self, t: f64) -> f64 {
        self.right + self.c1() * self.windows(t)
    }

    pub fn left_bound(&self, t: f64) -> f64 {
        self.left - self.c1() * self.windows(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_constants() {
        let env = SupersolutionEnvelope::new(0.5, 1.0, 2.0).unwrap();
        assert_eq!(env.alpha(), 1.0);
        assert_eq!(env.tau(), 1.0);
        assert!((env.c1() - 4.718281828459045).abs() < 1e-12);
        assert!((env.right_bound(2.0) - (0.5 + 2.0 * (E + 2.0))).abs() < 1e-12);
        assert_eq!(env.right_bound(0.0), 0.5);
        assert!((env.right_bound(1.5) - env.right_bound(2.0)).abs() < 1e-15);
    }

    #[test]
    fn phi_vanishes_at_edge() {
        let env = SupersolutionEnvelope::new(1.0, 1.7, 3.0).unwrap();
        for k in 0..3u32 {
            let t = (k as f64 + 0.4) * env.tau();
            let edge = env.phi_edge(t, k);
            assert_eq!(env.phi(edge, t, k), 0.0);
            assert!(env.phi(edge - 1e-3, t, k) > 0.0);
        }
        // window k ends exactly at the start of window k+1
        let end = env.phi_edge(env.tau(), 0);
        assert!((end - (env.right + env.c1())).abs() < 1e-12);
    }

    #[test]
    fn envelope_dominates_bounded_pressure_at_window_start() {
        // at s = 0, φ >= M wherever x <= R + C₁k, since the ramp has width >= 1
        let env = SupersolutionEnvelope::new(0.0, 2.0, 2.0).unwrap();
        assert!(env.phi(env.right, 0.0, 0) >= env.norm);
    }

    #[test]
    fn rejects_non_positive_norm() {
        assert!(SupersolutionEnvelope::new(0.0, 0.0, 2.0).is_err());
        assert!(SupersolutionEnvelope::new(0.0, -1.0, 2.0).is_err());
        assert!(SupersolutionEnvelope::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn left_bound_mirrors() {
        let env = SupersolutionEnvelope::two_sided(-1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((env.left_bound(0.5) + env.right_bound(0.5)).abs() < 1e-12);
    }
}
