//! Porous medium equation with local and nonlocal drift in one dimension:
//! a conservative solver, free-boundary tracking, and closed-form and
//! barrier oracles for verifying both.

pub mod cli;
pub mod drift;
pub mod error;
pub mod fields;
pub mod freeboundary;
pub mod grid;
pub mod oracles;
pub mod pressure;
pub mod solver;
pub mod stencil;
pub mod streamline;

pub use drift::{
    assemble_drift, convolve, AnalyticField, ConvolutionMethod, DriftField, DriftModel,
    TabulatedField, VectorFieldSpec,
};
pub use error::{Error, Result};
pub use fields::{DensityField, InitialDataSpec, InitialProfile, ModelParams};
pub use freeboundary::{
    boundary_identity_check, boundary_slope, boundary_streamline_band, classify_against_band,
    classify_boundary, darcy_residual,
    nondegeneracy_trace, support_endpoints, BoundaryClass, FreeBoundaryTrace,
    NondegeneracyVerdict, SlopeFit, SlopeOptions, SupportExtent,
};
pub use grid::{interpolate, Grid, Topology};
pub use pressure::{
    aronson_benilan_gap, discrete_derivatives, lipschitz_monitor, pme_residual, to_pressure,
    DiagnosticsReport, PressureField,
};
pub use solver::{cfl_dt, run, step, total_mass, RunSpec, SimState, Trajectory};
pub use streamline::{
    integrate_streamline, relative_expansion, DriftHistory, StreamlinePath, TrajectoryHistory,
};
