//! Parameter sets for the two-emitter cavity and the pseudo-Hermitian
//! manifold they have to sit on.
//!
//! All frequencies share one unit (the crate convention is "MHz after
//! dividing by 2π"). Every relation here is homogeneous of degree one in
//! frequency, so no 2π ever appears.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{non_negative, positive, Error, Result};

/// Relative tolerance for the mirror-split gain constraint.
pub const GAIN_SPLIT_RTOL: f64 = 1e-9;

/// The ten raw constants of the cavity plus two emitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub omega_c: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub g_1: f64,
    pub g_2: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    /// Decay through the left mirror.
    pub alpha: f64,
    /// Decay through the right mirror.
    pub beta: f64,
    pub kappa_int: f64,
}

impl PhysicalParams {
    /// Checks the sign constraints on couplings and rates.
    pub fn validate(&self) -> Result<()> {
        non_negative("g_1", self.g_1)?;
        non_negative("g_2", self.g_2)?;
        non_negative("kappa_1", self.kappa_1)?;
        non_negative("kappa_2", self.kappa_2)?;
        non_negative("alpha", self.alpha)?;
        non_negative("beta", self.beta)?;
        non_negative("kappa_int", self.kappa_int)?;
        for (name, v) in [
            ("omega_c", self.omega_c),
            ("omega_1", self.omega_1),
            ("omega_2", self.omega_2),
        ] {
            if !v.is_finite() {
                return Err(Error::Domain {
                    name,
                    value: v,
                    requirement: "must be finite",
                });
            }
        }
        Ok(())
    }

    /// Passive cavity decay, `alpha + beta + kappa_int`.
    pub fn kappa_c(&self) -> f64 {
        self.alpha + self.beta + self.kappa_int
    }

    /// Effective gain under coherent drive, `alpha + beta - kappa_int`.
    pub fn kappa_e(&self) -> f64 {
        self.alpha + self.beta - self.kappa_int
    }

    pub fn delta_1(&self) -> f64 {
        self.omega_c - self.omega_1
    }

    pub fn delta_2(&self) -> f64 {
        self.omega_c - self.omega_2
    }

    pub fn mirrors(&self) -> Mirrors {
        Mirrors {
            alpha: self.alpha,
            beta: self.beta,
            kappa_int: self.kappa_int,
        }
    }

    /// Largest rate, coupling or detuning in the set; used to scale
    /// tolerances and step sizes.
    pub fn frequency_scale(&self) -> f64 {
        [
            self.g_1,
            self.g_2,
            self.kappa_1,
            self.kappa_2,
            self.kappa_c(),
            self.kappa_e().abs(),
            self.delta_1().abs(),
            self.delta_2().abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// The reference rate used for "relative to κ₂" tolerances.
    pub(crate) fn reference_rate(&self) -> f64 {
        if self.kappa_2 > 0.0 {
            self.kappa_2
        } else {
            self.frequency_scale().max(f64::MIN_POSITIVE)
        }
    }
}

/// Mirror and intrinsic-loss split of the cavity decay.
///
/// Only `alpha + beta - kappa_int` enters the spectrum; the individual
/// values matter for the drive ratio and the port outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mirrors {
    pub alpha: f64,
    pub beta: f64,
    pub kappa_int: f64,
}

impl Mirrors {
    pub fn new(alpha: f64, beta: f64, kappa_int: f64) -> Self {
        Self { alpha, beta, kappa_int }
    }

    /// Lossless symmetric split that realizes the gain `kappa_e`.
    pub fn symmetric_lossless(kappa_e: f64) -> Self {
        Self {
            alpha: 0.5 * kappa_e,
            beta: 0.5 * kappa_e,
            kappa_int: 0.0,
        }
    }

    pub fn kappa_e(&self) -> f64 {
        self.alpha + self.beta - self.kappa_int
    }

    pub fn kappa_c(&self) -> f64 {
        self.alpha + self.beta + self.kappa_int
    }
}

/// Which sign of δ₁ to take; the manifold only fixes δ₁².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningBranch {
    #[default]
    Positive,
    Negative,
}

impl DetuningBranch {
    pub fn sign(self) -> f64 {
        match self {
            DetuningBranch::Positive => 1.0,
            DetuningBranch::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DetuningBranch::Positive => DetuningBranch::Negative,
            DetuningBranch::Negative => DetuningBranch::Positive,
        }
    }

    pub fn from_sign(sign: f64) -> Option<Self> {
        if sign == 1.0 {
            Some(DetuningBranch::Positive)
        } else if sign == -1.0 {
            Some(DetuningBranch::Negative)
        } else {
            None
        }
    }
}

/// Reduced parametrization: `kappa_1 = p·kappa_2`, `g_1 = q·g_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSpec {
    pub p: f64,
    pub q: f64,
    pub kappa_2: f64,
    pub g_2: f64,
    pub omega_c: f64,
    pub branch: DetuningBranch,
}

impl RatioSpec {
    pub fn new(p: f64, q: f64, kappa_2: f64, g_2: f64) -> Self {
        Self {
            p,
            q,
            kappa_2,
            g_2,
            omega_c: 0.0,
            branch: DetuningBranch::Positive,
        }
    }

    pub fn with_g2(mut self, g_2: f64) -> Self {
        self.g_2 = g_2;
        self
    }

    pub fn with_omega_c(mut self, omega_c: f64) -> Self {
        self.omega_c = omega_c;
        self
    }

    pub fn with_branch(mut self, branch: DetuningBranch) -> Self {
        self.branch = branch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("p", self.p)?;
        positive("q", self.q)?;
        positive("kappa_2", self.kappa_2)?;
        non_negative("g_2", self.g_2)?;
        if !self.omega_c.is_finite() {
            return Err(Error::Domain {
                name: "omega_c",
                value: self.omega_c,
                requirement: "must be finite",
            });
        }
        Ok(())
    }

    /// Gain the manifold requires, `(p + 1)·kappa_2`.
    pub fn kappa_e(&self) -> f64 {
        (self.p + 1.0) * self.kappa_2
    }

    pub fn g2_min(&self) -> Result<f64> {
        g2_min(self.p, self.q, self.kappa_2)
    }

    /// δ₁² from the manifold constraints; negative below `g2_min`.
    pub fn delta_1_squared(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        (q * q + p) / (p * (p + 1.0)) * self.g_2 * self.g_2 - self.kappa_2 * self.kappa_2
    }

    /// Signed δ₁ on the selected branch. Fails below `g2_min`.
    pub fn delta_1(&self) -> Result<f64> {
        self.validate()?;
        let d2 = self.delta_1_squared();
        if d2 < 0.0 {
            // δ₁² can round slightly negative exactly at the bound.
            let g_min = self.g2_min()?;
            if self.g_2 >= g_min {
                return Ok(0.0);
            }
            return Err(Error::InfeasibleCoupling {
                g2: self.g_2,
                g2_min: g_min,
                deficit: g_min - self.g_2,
            });
        }
        Ok(self.branch.sign() * d2.sqrt())
    }
}

/// Smallest `g_2` for which δ₁² ≥ 0.
pub fn g2_min(p: f64, q: f64, kappa_2: f64) -> Result<f64> {
    positive("p", p)?;
    positive("q", q)?;
    positive("kappa_2", kappa_2)?;
    Ok((p * (p + 1.0) / (q * q + p)).sqrt() * kappa_2)
}

/// Builds the full parameter set on the pseudo-Hermitian manifold.
///
/// The mirror split must realize the required gain `(p + 1)·kappa_2` to
/// relative [`GAIN_SPLIT_RTOL`].
pub fn derive_params(spec: &RatioSpec, mirrors: Mirrors) -> Result<PhysicalParams> {
    derive_params_rtol(spec, mirrors, GAIN_SPLIT_RTOL)
}

/// [`derive_params`] with a caller-chosen tolerance on the gain split.
pub fn derive_params_rtol(spec: &RatioSpec, mirrors: Mirrors, rtol: f64) -> Result<PhysicalParams> {
    spec.validate()?;
    non_negative("alpha", mirrors.alpha)?;
    non_negative("beta", mirrors.beta)?;
    non_negative("kappa_int", mirrors.kappa_int)?;

    let kappa_e = spec.kappa_e();
    let actual = mirrors.kappa_e();
    if !((actual - kappa_e).abs() <= rtol * kappa_e.abs()) {
        return Err(Error::ConstraintViolation {
            expected: kappa_e,
            actual,
        });
    }

    let delta_1 = spec.delta_1()?;
    let delta_2 = -spec.p * delta_1;
    Ok(PhysicalParams {
        omega_c: spec.omega_c,
        omega_1: spec.omega_c - delta_1,
        omega_2: spec.omega_c - delta_2,
        g_1: spec.q * spec.g_2,
        g_2: spec.g_2,
        kappa_1: spec.p * spec.kappa_2,
        kappa_2: spec.kappa_2,
        alpha: mirrors.alpha,
        beta: mirrors.beta,
        kappa_int: mirrors.kappa_int,
    })
}

/// Residuals of the three manifold constraints, in units of frequency,
/// frequency² and frequency³ respectively.
pub fn check_pseudo_hermiticity(params: &PhysicalParams) -> [f64; 3] {
    let (k1, k2, ke) = (params.kappa_1, params.kappa_2, params.kappa_e());
    let (d1, d2) = (params.delta_1(), params.delta_2());
    let (g1, g2) = (params.g_1, params.g_2);
    [
        k1 + k2 - ke,
        k1 * d1 + k2 * d2,
        ke * (d1 * d2 - k1 * k2) + g2 * g2 * k1 + g1 * g1 * k2,
    ]
}

/// Whether every residual is below `rtol` times the matching power of
/// the reference rate.
pub fn is_on_manifold(params: &PhysicalParams, rtol: f64) -> bool {
    let k = params.frequency_scale().max(f64::MIN_POSITIVE);
    let r = check_pseudo_hermiticity(params);
    r[0].abs() <= rtol * k && r[1].abs() <= rtol * k * k && r[2].abs() <= rtol * k * k * k
}

/// EP3 reachability ratio; the analytic EP3 lies above `g2_min` iff ζ ≤ 1.
pub fn zeta(p: f64, q: f64) -> Result<f64> {
    positive("p", p)?;
    positive("q", q)?;
    let q2 = q * q;
    Ok(p * (p + 1.0) * (q2 + 1.0) / ((p * p + p + 1.0) * (q2 + p)))
}

/// Critical coupling and detuning from the `a = B² − 3C = 0` condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEp3 {
    pub g_ep3: f64,
    /// `None` when the candidate sits below `g2_min` (ζ > 1).
    pub delta_ep3: Option<f64>,
}

pub fn g_ep3_analytic(p: f64, q: f64, kappa_2: f64) -> Result<AnalyticEp3> {
    positive("p", p)?;
    positive("q", q)?;
    positive("kappa_2", kappa_2)?;
    let q2 = q * q;
    let inv = (p + q2) / (p * (p + 1.0)) + 3.0 * (q2 + 1.0) / (p * p + p + 1.0);
    let g_ep3 = 2.0 * kappa_2 / inv.sqrt();
    let d2 = (q2 + p) / (p * (p + 1.0)) * g_ep3 * g_ep3 - kappa_2 * kappa_2;
    Ok(AnalyticEp3 {
        g_ep3,
        delta_ep3: (d2 >= 0.0).then(|| d2.sqrt()),
    })
}

/// The 3×3 effective Hamiltonian in the (a, σ₁, σ₂) basis.
pub fn build_effective_hamiltonian(params: &PhysicalParams) -> Matrix3<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Matrix3::new(
        c(params.omega_c, params.kappa_e()),
        c(params.g_1, 0.0),
        c(params.g_2, 0.0),
        c(params.g_1, 0.0),
        c(params.omega_1, -params.kappa_1),
        c(0.0, 0.0),
        c(params.g_2, 0.0),
        c(0.0, 0.0),
        c(params.omega_2, -params.kappa_2),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbgRates {
    pub alpha: f64,
    pub beta: f64,
    pub kappa_c: f64,
}

/// Mirror decay rates of a Fabry–Perot fiber cavity with Bragg-grating
/// mirrors of reflectance `r1`, `r2` and intrinsic loss `eta`.
pub fn fbg_rates(length: f64, r1: f64, r2: f64, eta: f64, speed_of_light: f64) -> Result<FbgRates> {
    positive("length", length)?;
    positive("speed_of_light", speed_of_light)?;
    non_negative("eta", eta)?;
    for (name, r) in [("r1", r1), ("r2", r2)] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain {
                name,
                value: r,
                requirement: "must lie in [0, 1]",
            });
        }
    }
    let fsr = speed_of_light / (4.0 * length);
    Ok(FbgRates {
        alpha: fsr * (1.0 - r1),
        beta: fsr * (1.0 - r2),
        kappa_c: fsr * ((1.0 - r1) + (1.0 - r2) + 2.0 * eta),
    })
}

/// Standing-wave coupling at position `z` along the cavity axis.
pub fn position_coupling(g: f64, z: f64, lambda_c: f64) -> Result<f64> {
    positive("lambda_c", lambda_c)?;
    Ok(g * (std::f64::consts::TAU * z / lambda_c).cos())
}
