//! Exceptional points and coherent perfect absorption in a cavity coupled
//! to two two-level emitters.
//!
//! Under a coherent two-port drive the cavity acquires an effective gain and
//! the mean-field dynamics are generated by a 3×3 non-Hermitian Hamiltonian.
//! On the pseudo-Hermitian manifold its characteristic polynomial is a real
//! cubic, so the spectrum is either fully real or one real eigenvalue plus a
//! conjugate pair, separated by second- and third-order exceptional points.
//!
//! - [`model`]: parameter sets, the ratio parametrization of the manifold,
//!   feasibility bounds and the effective Hamiltonian.
//! - [`spectral`]: the characteristic cubic, closed-form roots, phase
//!   classification, `g₂` sweeps and the exceptional-point locator.
//! - [`response`]: self-energy, intracavity field, S-parameter, output,
//!   transmission and absorption spectra, and CPA frequencies.
//! - [`dynamics`]: fixed-step time integration of the mean-field equations,
//!   used as an independent check of the frequency-domain results.
//! - [`exec`]: sequential or rayon-parallel evaluation of sweeps.
//!
//! ```
//! use epcavity::response::{cpa_frequencies, spectrum_sweep, DriveConfig, ProbeGrid};
//! use epcavity::{derive_params, locate_eps, Mirrors, RatioSpec};
//!
//! let spec = RatioSpec::new(1.0, 1.0, 2.0, 0.0);
//! let scan = locate_eps(&spec, (1.8, 4.0))?;
//! assert_eq!(scan.records[0].order, 3);
//!
//! let params = derive_params(&spec.with_g2(5.0), Mirrors::new(2.25, 2.25, 0.5))?;
//! let cpa = cpa_frequencies(&params)?;
//! assert_eq!(cpa.len(), 3);
//! let drive = DriveConfig::cpa_ratio(1.0.into(), &params)?;
//! let points = spectrum_sweep(&params, ProbeGrid::default_for(2.0), &drive)?;
//! assert_eq!(points.len(), 2001);
//! # Ok::<(), epcavity::Error>(())
//! ```

// Negated comparisons are how NaN is rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod model;
pub mod response;
mod roots;
pub mod spectral;

pub use error::{Error, Result};

/// Library version, echoed into run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use dynamics::{
    estimate_eigenfrequencies, integrate_driven, integrate_effective, DrivenOptions, StateVector, Trajectory,
};
pub use exec::Execution;
pub use model::{
    build_effective_hamiltonian, check_pseudo_hermiticity, derive_params, derive_params_rtol, fbg_rates, g2_min,
    g_ep3_analytic, is_on_manifold, position_coupling, zeta, DetuningBranch, Mirrors, PhysicalParams, RatioSpec,
};
pub use response::{
    absorption, cpa_frequencies, intracavity_field, s_parameter, self_energy, spectrum_sweep, total_output,
    transmission, DriveConfig, ProbeGrid, ResponsePoint,
};
pub use spectral::{
    classify_phase, cubic_coefficients, eigenvalues_direct, locate_eps, solve_cubic, sweep_eigenvalues, CubicCoeffs,
    EpRecord, Phase, SpectralPhase, SpectrumTriple,
};
