//! Closed-form solutions and explicit barrier constructions used as ground
//! truth by the tests and as certification targets by the CLI.

pub mod barenblatt;
pub mod barrier;
pub mod envelope;
pub mod stationary;

pub use barenblatt::{barenblatt, Barenblatt};
pub use barrier::{
    barrier_linear, certify_linear_barrier, certify_quadratic_barrier, BarrierParams,
    CertificateReport, LinearBarrier, LinearCertificateConfig, QuadraticBarrier,
    QuadraticCertificateConfig, BarrierSign, SmoothDrift, TrigDrift,
};
pub use envelope::SupersolutionEnvelope;
pub use stationary::{
    bump_potential, traveling_wave_pressure, BumpStationary, RoundedTent, TorusStationary,
};
