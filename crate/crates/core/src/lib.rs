//! Resonance fluorescence of a driven two-level emitter with a permanent
//! dipole difference, radiating into a squeezed-vacuum reservoir.
//!
//! The permanent dipole turns the Rabi drive into a periodic modulation of
//! the transition frequency, so the Bloch vector settles into a periodic
//! rather than stationary state. [`floquet`] expands that state in drive
//! harmonics and solves the resulting block-tridiagonal system;
//! [`spectrum`] feeds its amplitudes into the regression resolvent and
//! reads off the in-phase, out-of-phase and asymmetric parts of the
//! incoherent spectrum. [`oracle`] recomputes the same quantities by plain
//! time integration and exists to check the fast path.
//!
//! ```
//! use polaremit::{solve_steady, validate, ModelParams, SpectrumEngine};
//!
//! let model = validate(ModelParams::resonant(1.0, 200.0, 20.0, 4.0, 0.5, 0.0))?;
//! let state = solve_steady(&model, 6)?;
//! let engine = SpectrumEngine::new(&model, &state);
//! let p = engine.point(220.0)?;
//! assert!((p.finc - (p.fx + p.fy + p.fas)).abs() < 1e-15);
//! # Ok::<(), polaremit::Error>(())
//! ```

pub mod error;
pub mod floquet;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod peak;
pub mod quad;
pub mod spectrum;

pub use error::{Error, Result};
pub use floquet::{auto_truncation, build_system, reconstruct_bloch, solve_steady, steady_residual, BlockTridiagonalSystem, HarmonicState};
pub use model::{squeezing_moments, validate, ModelParams, SqueezingMoments, ValidatedModel};
pub use oracle::{integrate_bloch, BlochTrajectory, CorrelationGrid, CorrelationTransform, OracleSettings, TimeOracle};
pub use peak::{peak_metrics, PeakMetrics};
pub use spectrum::{correlation_rhs, quadrature_at, solve_resolvent, spectrum, Column, CorrelationRhs, SpectralPoint, SpectrumEngine, SpectrumTable, SumRule};
