//! Transient diffusivity and diffusion length of tight-binding wave packets
//! under pure dephasing.
//!
//! The crate pairs closed-form results with an independent density-matrix
//! propagator for the same model: a 1D nearest-neighbor chain (coupling J,
//! site spacing 1, ħ = 1) whose coherences decay at a uniform rate Γ in the
//! site basis, the Haken-Strobl-Reineker limit of pure dephasing.
//!
//! * [`analytic`]: time-dependent diffusivity D(t) of point, Gaussian,
//!   standing-wave, and traveling-wave packets, the width and modulation
//!   thresholds where dephasing switches from slowing transport to aiding
//!   it, transient diffusivity peaks, and the long-time plateau 2J²/Γ.
//! * [`propagator`]: dense RK4 and closed-system Bloch integrators that
//!   measure the same observables from the evolving density matrix.
//! * [`difflength`]: diffusion lengths L² averaged over an exponential
//!   lifetime, their closed forms, and the dephasing rate that maximizes
//!   them.
//! * [`validate`]: suites replaying every closed form against the
//!   propagator, plus scans that locate the critical parameters
//!   numerically without using the formulas under test.
//!
//! Everything is generic over the floating-point scalar through [`Real`];
//! the aliases at the crate root fix `f64`, which is what the `latdiff`
//! command line tool and all quoted tolerances assume.
//!
//! # Example
//!
//! ```
//! use latdiff_core::{analytic, evolve, Config, Lattice, Scheme, State};
//!
//! let state = State::delta();
//! let model = Lattice::new(1.0)?;
//! let gamma = 1.0;
//! let config = Config::new(Scheme::Rk4Dense, &state, &model, gamma, 0.2)?;
//! let series = evolve(&state, &model, gamma, &config)?;
//!
//! let last = series.len() - 1;
//! let closed = analytic::d_delta(series.times[last], 1.0, gamma);
//! assert!((series.diffusivity_flux[last] - closed).abs() < 1e-6);
//! # Ok::<(), latdiff_core::Error>(())
//! ```

pub mod analytic;
pub mod density;
pub mod difflength;
pub mod error;
pub mod lattice;
pub mod numeric;
pub mod propagator;
pub mod scalar;
pub mod state;
pub mod validate;

pub use density::{
    initial_moment_table, CoherenceMoments, DensityMatrix, PopulationMoments, DEFAULT_L_MAX,
};
pub use difflength::{DiffusionLengthEstimate, LifetimeModel};
pub use error::{Error, Result};
pub use lattice::LatticeModel;
pub use propagator::{
    evolve, evolve_with_final, population_snapshot, ObservableSeries, PropagationConfig, Scheme,
};
pub use scalar::Real;
pub use state::InitialState;
pub use validate::{all_passed, run_suite, ComparisonReport, Suite};

/// `f64` lattice model, the instantiation the command line uses.
pub type Lattice = LatticeModel<f64>;
/// `f64` initial packet.
pub type State = InitialState<f64>;
/// `f64` propagation configuration.
pub type Config = PropagationConfig<f64>;
/// `f64` observable series.
pub type Series = ObservableSeries<f64>;
/// `f64` exponential lifetime.
pub type Lifetime = LifetimeModel<f64>;
/// `f64` lifetime-averaged displacement estimate.
pub type LengthEstimate = DiffusionLengthEstimate<f64>;
