//! Explicit barriers for the pressure equation and their sampled certificates.
//!
//! All quantities are evaluated in coordinates where the anchoring free
//! boundary point sits at the origin. The pressure operator is
//! `𝓛(u) = u_t - (m-1) u u_xx - u_x² + u_x B + (m-1) u B_x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pressure::operator_at;

/// A drift with the derivatives the barrier constructions need.
pub trait SmoothDrift {
    fn b(&self, x: f64, t: f64) -> f64;
    fn b_x(&self, x: f64, t: f64) -> f64;
    fn b_xx(&self, x: f64, t: f64) -> f64;
    fn b_xxx(&self, x: f64, t: f64) -> f64;
    fn b_t(&self, x: f64, t: f64) -> f64;
    fn b_xt(&self, x: f64, t: f64) -> f64;
    fn b_xxt(&self, x: f64, t: f64) -> f64;
    fn b_tt(&self, x: f64, t: f64) -> f64;
}

/// `B = amplitude · sin(kx x + kt t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigDrift {
    pub amplitude: f64,
    pub kx: f64,
    pub kt: f64,
    pub phase: f64,
}

impl TrigDrift {
    fn theta(&self, x: f64, t: f64) -> f64 {
        self.kx * x + self.kt * t + self.phase
    }

    /// Upper bound on `|B|` and on every derivative listed in [`SmoothDrift`].
    pub fn norm_bound(&self) -> f64 {
        let k = self.kx.abs().max(self.kt.abs()).max(1.0);
        self.amplitude.abs() * k.powi(3)
    }
}

impl SmoothDrift for TrigDrift {
    fn b(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.theta(x, t).sin()
    }
    fn b_x(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.kx * self.theta(x, t).cos()
    }
    fn b_xx(&self, x: f64, t: f64) -> f64 {
        -self.amplitude * self.kx.powi(2) * self.theta(x, t).sin()
    }
    fn b_xxx(&self, x: f64, t: f64) -> f64 {
        -self.amplitude * self.kx.powi(3) * self.theta(x, t).cos()
    }
    fn b_t(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.kt * self.theta(x, t).cos()
    }
    fn b_xt(&self, x: f64, t: f64) -> f64 {
        -self.amplitude * self.kx * self.kt * self.theta(x, t).sin()
    }
    fn b_xxt(&self, x: f64, t: f64) -> f64 {
        -self.amplitude * self.kx.powi(2) * self.kt * self.theta(x, t).cos()
    }
    fn b_tt(&self, x: f64, t: f64) -> f64 {
        -self.amplitude * self.kt.powi(2) * self.theta(x, t).sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierSign {
    Plus,
    Minus,
}

/// `L±_ε(x, t) = (a ± ε)((a ± 2ε) t - x + B(0,0) t)_+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBarrier {
    pub a: f64,
    pub eps: f64,
    pub b00: f64,
    pub sign: BarrierSign,
}

pub fn barrier_linear(a: f64, eps: f64, b00: f64, sign: BarrierSign) -> Result<LinearBarrier> {
    if !(a >= 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "linear barrier needs a >= 0 and eps > 0, got a = {a}, eps = {eps}"
        )));
    }
    Ok(LinearBarrier { a, eps, b00, sign })
}

impl LinearBarrier {
    fn slope(&self) -> f64 {
        match self.sign {
            BarrierSign::Plus => self.a + self.eps,
            BarrierSign::Minus => self.a - self.eps,
        }
    }

    fn speed(&self) -> f64 {
        let s = match self.sign {
            BarrierSign::Plus => self.a + 2.0 * self.eps,
            BarrierSign::Minus => self.a - 2.0 * self.eps,
        };
        s + self.b00
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.slope() * (self.speed() * t - x).max(0.0)
    }

    /// `∂_x` on the positive set.
    pub fn value_x(&self) -> f64 {
        -self.slope()
    }

    /// `∂_t` on the positive set.
    pub fn value_t(&self) -> f64 {
        self.slope() * self.speed()
    }

    /// `𝓛(L)` at `(x, t)`; zero off the positive set.
    pub fn operator(&self, x: f64, t: f64, m: f64, drift: &impl SmoothDrift) -> f64 {
        let u = self.value(x, t);
        if u <= 0.0 {
            return 0.0;
        }
        operator_at(
            u,
            self.value_t(),
            self.value_x(),
            0.0,
            drift.b(x, t),
            drift.b_x(x, t),
            m,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub m: f64,
    /// `-D_x^- u` at the anchor.
    pub k0: f64,
    /// Lipschitz bound on the pressure.
    pub sigma0: f64,
    /// Fundamental-estimate constant.
    pub sigma1: f64,
    /// Drift-norm bound.
    pub sigma2: f64,
    /// `max(σ₁, σ₂)`.
    pub sigma3: f64,
    /// Decay rate `L`.
    pub l_rate: f64,
    pub lambda0: f64,
    pub alpha0: f64,
    /// Original coordinates of the anchoring boundary point.
    pub anchor: (f64, f64),
}

impl BarrierParams {
    /// Canonical construction, `L = max{(m-1)(5σ₃+2σ₀), 4σ₃}`.
    pub fn canonical(m: f64, k0: f64, sigma0: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        let sigma3 = sigma1.max(sigma2);
        let l_rate = ((m - 1.0) * (5.0 * sigma3 + 2.0 * sigma0)).max(4.0 * sigma3);
        let p = BarrierParams {
            m,
            k0,
            sigma0,
            sigma1,
            sigma2,
            sigma3,
            l_rate,
            lambda0: 0.5 * sigma3,
            alpha0: k0 / sigma3,
            anchor: (0.0, 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_anchor(mut self, x1: f64, t1: f64) -> Self {
        self.anchor = (x1, t1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "m must exceed 1, got {}",
                self.m
            )));
        }
        if !(self.k0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "the quadratic barrier needs k0 > 0 (non-degenerate anchor), got {}",
                self.k0
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::InvalidParameter("sigma constants must be positive".into()));
        }
        if !(self.sigma3 >= 1.0) || self.sigma3 < self.sigma1.max(self.sigma2) {
            return Err(Error::InvalidParameter(format!(
                "sigma3 must be max(sigma1, sigma2) >= 1, got {}",
                self.sigma3
            )));
        }
        let floor = ((self.m - 1.0) * (5.0 * self.sigma3 + 2.0 * self.sigma0)).max(4.0 * self.sigma3);
        if self.l_rate < floor {
            return Err(Error::InvalidParameter(format!(
                "rate L = {} is below max{{(m-1)(5σ₃+2σ₀), 4σ₃}} = {floor}",
                self.l_rate
            )));
        }
        Ok(())
    }

    /// `λ(t) = (σ₃/2) e^{-2Lt}`.
    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda0 * (-2.0 * self.l_rate * t).exp()
    }

    pub fn lambda_t(&self, t: f64) -> f64 {
        -2.0 * self.l_rate * self.lambda(t)
    }

    /// Closed-form solution of `α' = (2k₀/σ₃) λ(t)(1 - Lt)`, `α(0) = α₀`:
    /// `α(t) = α₀ + k₀ (1 - (1 - 2Lt) e^{-2Lt}) / (4L)`.
    pub fn alpha(&self, t: f64) -> f64 {
        let l = self.l_rate;
        self.alpha0 + self.k0 * (1.0 - (1.0 - 2.0 * l * t) * (-2.0 * l * t).exp()) / (4.0 * l)
    }

    pub fn alpha_t(&self, t: f64) -> f64 {
        2.0 * self.k0 / self.sigma3 * self.lambda(t) * (1.0 - self.l_rate * t)
    }
}

/// The streamline-following quadratic barrier
/// `u(x,t) = λ(t)(α(t)² - y²)_+`, `y = x + α₀ - Bt + (B B_x + B_t) t²/2`,
/// where the drift terms are evaluated at `(x, t)`.
pub struct QuadraticBarrier<D> {
    pub params: BarrierParams,
    pub drift: D,
}

#[derive(Clone, Copy, Debug)]
struct YJet {
    y: f64,
    y_x: f64,
    y_xx: f64,
    y_t: f64,
    b: f64,
    b_x: f64,
}

impl<D: SmoothDrift> QuadraticBarrier<D> {
    pub fn new(params: BarrierParams, drift: D) -> Result<Self> {
        params.validate()?;
        Ok(QuadraticBarrier { params, drift })
    }

    fn jet(&self, x: f64, t: f64) -> YJet {
        let (x1, t1) = self.params.anchor;
        let (gx, gt) = (x + x1, t + t1);
        let d = &self.drift;
        let b = d.b(gx, gt);
        let bx = d.b_x(gx, gt);
        let bxx = d.b_xx(gx, gt);
        let bxxx = d.b_xxx(gx, gt);
        let bt = d.b_t(gx, gt);
        let bxt = d.b_xt(gx, gt);
        let bxxt = d.b_xxt(gx, gt);
        let btt = d.b_tt(gx, gt);
        let h = 0.5 * t * t;
        YJet {
            y: x + self.params.alpha0 - b * t + (b * bx + bt) * h,
            y_x: 1.0 - bx * t + (bxx * b + bx * bx + bxt) * h,
            y_xx: -bxx * t + (bxxx * b + 3.0 * bxx * bx + bxxt) * h,
            y_t: -b + b * bx * t + (bt * bx + b * bxt + btt) * h,
            b,
            b_x: bx,
        }
    }

    pub fn y(&self, x: f64, t: f64) -> f64 {
        self.jet(x, t).y
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        let a = self.params.alpha(t);
        let y = self.y(x, t);
        self.params.lambda(t) * (a * a - y * y).max(0.0)
    }

    /// `∂_x u` on the positive set.
    pub fn value_x(&self, x: f64, t: f64) -> f64 {
        let j = self.jet(x, t);
        -2.0 * self.params.lambda(t) * j.y * j.y_x
    }

    /// `∂_xx u` on the positive set.
    pub fn value_xx(&self, x: f64, t: f64) -> f64 {
        let j = self.jet(x, t);
        -2.0 * self.params.lambda(t) * (j.y_x * j.y_x + j.y * j.y_xx)
    }

    /// `J₁ = λ'/(2λ) + 2(m-1)λ(y_x² + y y_xx) + (m-1)B_x`.
    pub fn j1(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let j = self.jet(x, t);
        let lam = p.lambda(t);
        -p.l_rate + 2.0 * (p.m - 1.0) * lam * (j.y_x * j.y_x + j.y * j.y_xx) + (p.m - 1.0) * j.b_x
    }

    /// `J₂ = (λ'/2)(α² - y²) + 2λαα' - 2λ y y_t - 4λ² y² y_x² - 2λ y y_x B`.
    pub fn j2(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let j = self.jet(x, t);
        let lam = p.lambda(t);
        let a = p.alpha(t);
        0.5 * p.lambda_t(t) * (a * a - j.y * j.y) + 2.0 * lam * a * p.alpha_t(t)
            - 2.0 * lam * j.y * j.y_t
            - 4.0 * lam * lam * j.y * j.y * j.y_x * j.y_x
            - 2.0 * lam * j.y * j.y_x * j.b
    }

    /// `𝓛(u)` from the barrier's own derivatives; zero off the positive set.
    pub fn operator(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let j = self.jet(x, t);
        let lam = p.lambda(t);
        let a = p.alpha(t);
        let gap = a * a - j.y * j.y;
        if gap <= 0.0 {
            return 0.0;
        }
        let u = lam * gap;
        let u_t = p.lambda_t(t) * gap + lam * (2.0 * a * p.alpha_t(t) - 2.0 * j.y * j.y_t);
        let u_x = -2.0 * lam * j.y * j.y_x;
        let u_xx = -2.0 * lam * (j.y_x * j.y_x + j.y * j.y_xx);
        operator_at(u, u_t, u_x, u_xx, j.b, j.b_x, p.m)
    }

    /// Solves `y(x, t) = target` for `x` by fixed-point iteration.
    pub fn x_for_y(&self, target: f64, t: f64) -> f64 {
        let mut x = target - self.params.alpha0;
        for _ in 0..200 {
            let next = x + (target - self.y(x, t));
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub name: String,
    /// `"<= 0"` or `">= 0"`.
    pub requirement: String,
    pub min: f64,
    pub max: f64,
    pub violations: usize,
}

impl QuantitySummary {
    fn collect(name: &str, nonnegative: bool, values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let violations = values
            .iter()
            .filter(|v| if nonnegative { !(**v >= 0.0) } else { !(**v <= 0.0) })
            .count();
        QuantitySummary {
            name: name.to_string(),
            requirement: if nonnegative { ">= 0" } else { "<= 0" }.to_string(),
            min,
            max,
            violations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub name: String,
    pub region: Region,
    pub samples: usize,
    pub positive_set_samples: usize,
    pub quantities: Vec<QuantitySummary>,
    /// Largest scanned region height for which every quantity held.
    pub largest_passing_tau: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearCertificateConfig {
    pub a: f64,
    pub eps: f64,
    pub m: f64,
    pub delta: f64,
    pub tau: f64,
    pub drift: TrigDrift,
    pub samples: usize,
}

impl Default for LinearCertificateConfig {
    fn default() -> Self {
        LinearCertificateConfig {
            a: 1.0,
            eps: 0.1,
            m: 2.0,
            delta: 0.02,
            tau: 0.02,
            drift: TrigDrift {
                amplitude: 0.5,
                kx: 1.0,
                kt: 1.0,
                phase: 0.3,
            },
            samples: 64,
        }
    }
}

/// Samples `𝓛(L⁺_ε)` on the midpoints of a `samples × samples` grid over
/// `{|x| < δ, 0 < t < τ}`; passes iff every sample is non-negative.
pub fn certify_linear_barrier(cfg: &LinearCertificateConfig) -> Result<CertificateReport> {
    if !(cfg.delta > 0.0 && cfg.tau > 0.0) || cfg.samples == 0 {
        return Err(Error::InvalidParameter(
            "certificate box needs delta > 0, tau > 0 and samples > 0".into(),
        ));
    }
    let barrier = barrier_linear(cfg.a, cfg.eps, cfg.drift.b(0.0, 0.0), BarrierSign::Plus)?;
    let s = cfg.samples;
    let mut values = Vec::with_capacity(s * s);
    let mut positive = 0;
    for it in 0..s {
        let t = cfg.tau * (it as f64 + 0.5) / s as f64;
        for ix in 0..s {
            let x = -cfg.delta + 2.0 * cfg.delta * (ix as f64 + 0.5) / s as f64;
            if barrier.value(x, t) > 0.0 {
                positive += 1;
            }
            values.push(barrier.operator(x, t, cfg.m, &cfg.drift));
        }
    }
    let q = QuantitySummary::collect("L(L+_eps)", true, &values);
    let passed = q.violations == 0;
    Ok(CertificateReport {
        name: "linear_barrier".into(),
        region: Region {
            x_min: -cfg.delta,
            x_max: cfg.delta,
            t_min: 0.0,
            t_max: cfg.tau,
        },
        samples: values.len(),
        positive_set_samples: positive,
        quantities: vec![q],
        largest_passing_tau: passed.then_some(cfg.tau),
        passed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadraticCertificateConfig {
    pub m: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub drift: TrigDrift,
    /// Region height; defaults to `0.1 min(k0, 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    pub samples: usize,
}

impl Default for QuadraticCertificateConfig {
    fn default() -> Self {
        QuadraticCertificateConfig {
            m: 2.0,
            k0: 0.5,
            sigma0: 1.0,
            sigma1: 1.0,
            sigma2: 1.0,
            drift: TrigDrift {
                amplitude: 0.1,
                kx: 1.0,
                kt: 1.0,
                phase: 0.3,
            },
            tau_star: None,
            samples: 64,
        }
    }
}

impl QuadraticCertificateConfig {
    pub fn default_tau_star(&self) -> f64 {
        0.1 * self.k0.min(1.0)
    }
}

fn sample_quadratic<D: SmoothDrift>(
    barrier: &QuadraticBarrier<D>,
    t_max: f64,
    s: usize,
) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let mut j1 = Vec::with_capacity(s * s);
    let mut j2 = Vec::with_capacity(s * s);
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    for it in 0..s {
        let t = t_max * (it as f64 + 0.5) / s as f64;
        let a = barrier.params.alpha(t);
        for iy in 0..s {
            let y = a * (-1.0 + (2.0 * iy as f64 + 1.0) / s as f64);
            let x = barrier.x_for_y(y, t);
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            j1.push(barrier.j1(x, t));
            j2.push(barrier.j2(x, t));
        }
    }
    (j1, j2, x_lo, x_hi)
}

/// Samples `J₁` and `J₂` over `{|y| < α(t), 0 < t < min(k₀, τ*)}` and also
/// scans doubled heights to record the largest one that still passes.
pub fn certify_quadratic_barrier(cfg: &QuadraticCertificateConfig) -> Result<CertificateReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let params = BarrierParams::canonical(cfg.m, cfg.k0, cfg.sigma0, cfg.sigma1, cfg.sigma2)?;
    let barrier = QuadraticBarrier::new(params, cfg.drift)?;
    let tau_star = cfg.tau_star.unwrap_or_else(|| cfg.default_tau_star());
    if !(tau_star > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau_star must be positive, got {tau_star}"
        )));
    }
    let t_max = tau_star.min(cfg.k0);
    let (j1, j2, x_lo, x_hi) = sample_quadratic(&barrier, t_max, cfg.samples);
    let q1 = QuantitySummary::collect("J1", false, &j1);
    let q2 = QuantitySummary::collect("J2", false, &j2);
    let passed = q1.violations == 0 && q2.violations == 0;

    let mut largest = None;
    let mut height = t_max;
    for _ in 0..12 {
        let (a, b, _, _) = sample_quadratic(&barrier, height, cfg.samples);
        if a.iter().chain(&b).all(|v| *v <= 0.0) {
            largest = Some(height);
            height *= 2.0;
        } else {
            break;
        }
    }

    Ok(CertificateReport {
        name: "quadratic_barrier".into(),
        region: Region {
            x_min: x_lo,
            x_max: x_hi,
            t_min: 0.0,
            t_max,
        },
        samples: j1.len(),
        positive_set_samples: j1.len(),
        quantities: vec![q1, q2],
        largest_passing_tau: largest,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_params() -> BarrierParams {
        BarrierParams::canonical(2.0, 0.5, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn canonical_rate() {
        let p = test_params();
        assert_eq!(p.sigma3, 1.0);
        assert_eq!(p.l_rate, 7.0);
        assert_eq!(p.lambda0, 0.5);
        assert_eq!(p.alpha0, 0.5);
        let p3 = BarrierParams::canonical(1.2, 0.5, 1.0, 2.0, 1.5).unwrap();
        assert_eq!(p3.l_rate, 8.0);
        assert!(BarrierParams::canonical(2.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BarrierParams::canonical(2.0, 0.5, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn alpha_closed_form_matches_quadrature() {
        let p = test_params();
        // composite Simpson on α'
        for t in [0.01, 0.05, 0.2, 0.7] {
            let n = 2000;
            let h = t / n as f64;
            let mut s = p.alpha_t(0.0) + p.alpha_t(t);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * p.alpha_t(i as f64 * h);
            }
            let integral = s * h / 3.0;
            assert!((p.alpha(t) - p.alpha0 - integral).abs() < 1e-12, "t = {t}");
        }
        assert_eq!(p.alpha(0.0), p.alpha0);
    }

    #[test]
    fn anchor_values() {
        let drift = TrigDrift {
            amplitude: 0.1,
            kx: 1.0,
            kt: 1.0,
            phase: 0.3,
        };
        let b = QuadraticBarrier::new(test_params(), drift).unwrap();
        assert_eq!(b.value(0.0, 0.0), 0.0);
        assert!((b.value_x(0.0, 0.0) + 0.5).abs() < 1e-15);
        // -2λ(0)α₀ = -k₀
        for x in [-0.9, -0.5, -0.1] {
            assert!((b.value_xx(x, 0.0) + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_decomposes_into_j1_j2() {
        let drift = TrigDrift {
            amplitude: 0.3,
            kx: 1.3,
            kt: 0.7,
            phase: 0.1,
        };
        let b = QuadraticBarrier::new(test_params(), drift).unwrap();
        for t in [0.001, 0.01, 0.04] {
            let a = b.params.alpha(t);
            for frac in [-0.9, -0.3, 0.2, 0.8] {
                let x = b.x_for_y(frac * a, t);
                let y = b.y(x, t);
                assert!((y - frac * a).abs() < 1e-13);
                let lam = b.params.lambda(t);
                let expected = lam * b.j1(x, t) * (a * a - y * y) + b.j2(x, t);
                let got = b.operator(x, t);
                assert!((got - expected).abs() < 1e-12 * (1.0 + got.abs()), "{got} vs {expected}");
            }
        }
    }

    #[test]
    fn operator_matches_finite_differences_of_the_barrier() {
        let drift = TrigDrift {
            amplitude: 0.3,
            kx: 1.3,
            kt: 0.7,
            phase: 0.1,
        };
        let b = QuadraticBarrier::new(test_params(), drift).unwrap();
        let (x, t) = (b.x_for_y(0.1, 0.02), 0.02);
        let h = 1e-5;
        let u_t = (b.value(x, t + h) - b.value(x, t - h)) / (2.0 * h);
        let u_x = (b.value(x + h, t) - b.value(x - h, t)) / (2.0 * h);
        let u_xx = (b.value(x + h, t) - 2.0 * b.value(x, t) + b.value(x - h, t)) / (h * h);
        let fd = operator_at(b.value(x, t), u_t, u_x, u_xx, drift.b(x, t), drift.b_x(x, t), 2.0);
        assert!((fd - b.operator(x, t)).abs() < 1e-4);
    }

    #[test]
    fn quadratic_certificates_hold_on_test_configuration() {
        let report = certify_quadratic_barrier(&QuadraticCertificateConfig::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.samples, 64 * 64);
        assert!(report.largest_passing_tau.unwrap() >= 0.05);
    }

    #[test]
    fn linear_barrier_examples() {
        let l = barrier_linear(1.0, 0.1, 0.2, BarrierSign::Plus).unwrap();
        assert_eq!(l.value(0.0, 0.0), 0.0);
        assert_eq!(l.value_x(), -1.1);
        assert!(barrier_linear(-1.0, 0.1, 0.0, BarrierSign::Plus).is_err());
        let report = certify_linear_barrier(&LinearCertificateConfig::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.positive_set_samples > 0);
    }

    #[test]
    fn linear_certificate_fails_on_oversized_box() {
        let cfg = LinearCertificateConfig {
            delta: 2.0,
            tau: 2.0,
            drift: TrigDrift {
                amplitude: 2.0,
                kx: 3.0,
                kt: 3.0,
                phase: 0.0,
            },
            ..Default::default()
        };
        assert!(!certify_linear_barrier(&cfg).unwrap().passed);
    }
}
