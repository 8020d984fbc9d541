//! Spectrum of the effective Hamiltonian: the real characteristic cubic,
//! its closed-form roots, phase classification and exceptional-point search.

mod cubic;
mod locate;

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{build_effective_hamiltonian, PhysicalParams, RatioSpec};

pub use cubic::{cubic_roots, solve_cubic, solve_cubic_with_tol};
pub use locate::{
    locate_eps, locate_eps_with, sweep_eigenvalues, sweep_eigenvalues_with, EpRecord, EpResiduals, EpScan,
    LocatorOptions, SeedReport, SweepRow,
};

/// Default classification tolerance, in units of κ₂.
pub const DEFAULT_PHASE_RTOL: f64 = 1e-6;

/// Coefficients of `x³ + B x² + C x + D` with `x = ϖ − ω_c`, together with
/// the multiple-root discriminant quantities `a = B² − 3C`, `b = BC − 9D`,
/// `c = C² − 3BD`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub disc_a: f64,
    pub disc_b: f64,
    pub disc_c: f64,
}

impl CubicCoeffs {
    pub fn new(b: f64, c: f64, d: f64) -> Self {
        Self {
            b,
            c,
            d,
            disc_a: b * b - 3.0 * c,
            disc_b: b * c - 9.0 * d,
            disc_c: c * c - 3.0 * b * d,
        }
    }

    /// `b² − 4ac`: positive for one real root plus a conjugate pair,
    /// negative for three distinct real roots, zero at a multiple root.
    pub fn discriminant(&self) -> f64 {
        self.disc_b * self.disc_b - 4.0 * self.disc_a * self.disc_c
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        ((x + self.b) * x + self.c) * x + self.d
    }

    pub fn eval_derivative(&self, x: Complex64) -> Complex64 {
        (3.0 * x + 2.0 * self.b) * x + self.c
    }

    /// Typical root magnitude, `max(|B|, |C|^½, |D|^⅓)`.
    pub fn root_scale(&self) -> f64 {
        self.b.abs().max(self.c.abs().sqrt()).max(self.d.abs().cbrt())
    }
}

/// Characteristic-polynomial coefficients from the raw parameters.
///
/// Meaningful when the parameters satisfy the manifold constraints, where
/// the complex characteristic polynomial collapses to this real one.
pub fn cubic_coefficients(params: &PhysicalParams) -> CubicCoeffs {
    let (d1, d2) = (params.delta_1(), params.delta_2());
    let (k1, k2, ke) = (params.kappa_1, params.kappa_2, params.kappa_e());
    let (g1s, g2s) = (params.g_1 * params.g_1, params.g_2 * params.g_2);
    CubicCoeffs::new(
        d1 + d2,
        d1 * d2 - k1 * k2 + ke * ke - g1s - g2s,
        ke * (d1 * k2 + k1 * d2) - g2s * d1 - g1s * d2,
    )
}

/// The same coefficients evaluated through the ratio parametrization.
pub fn cubic_coefficients_ratio(spec: &RatioSpec) -> Result<CubicCoeffs> {
    let d1 = spec.delta_1()?;
    let (p, q, k2, g2) = (spec.p, spec.q, spec.kappa_2, spec.g_2);
    let (k2s, g2s) = (k2 * k2, g2 * g2);
    Ok(CubicCoeffs::new(
        (1.0 - p) * d1,
        -p * d1 * d1 + (p * p + p + 1.0) * k2s - (q * q + 1.0) * g2s,
        (p + 1.0) * (1.0 - p * p) * d1 * k2s - (1.0 - p * q * q) * g2s * d1,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    ThreeRealDistinct,
    OneRealPlusConjugatePair,
    Ep2,
    Ep3,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ThreeRealDistinct => "three_real",
            Phase::OneRealPlusConjugatePair => "real_plus_pair",
            Phase::Ep2 => "ep2",
            Phase::Ep3 => "ep3",
        }
    }

    pub fn is_exceptional(self) -> bool {
        matches!(self, Phase::Ep2 | Phase::Ep3)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A phase tag together with the tolerance that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPhase {
    pub phase: Phase,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumTriple {
    /// Absolute eigenfrequencies ϖ (not offset by ω_c).
    pub eigenvalues: [Complex64; 3],
    /// `None` when the triple admits no pseudo-Hermitian classification
    /// (off-manifold input to the direct solver).
    pub phase: Option<SpectralPhase>,
    /// Tolerance used for classification and for deciding which
    /// eigenvalues count as real.
    pub tol: f64,
    /// Real coefficients the roots came from; `None` for the direct solver.
    pub coeffs: Option<CubicCoeffs>,
}

impl SpectrumTriple {
    /// Eigenvalues ordered by real part, then imaginary part.
    pub fn sorted(&self) -> [Complex64; 3] {
        let mut e = self.eigenvalues;
        e.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        e
    }

    pub fn phase(&self) -> Option<Phase> {
        self.phase.map(|p| p.phase)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real eigenvalues (those with |Im| below the classification tolerance).
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| z.im.abs() < self.tol)
            .map(|z| z.re)
            .collect()
    }

    pub fn max_pairwise_distance(&self) -> f64 {
        let e = &self.eigenvalues;
        (e[0] - e[1]).norm().max((e[1] - e[2]).norm()).max((e[0] - e[2]).norm())
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Smallest achievable max-distance when pairing the two triples.
pub fn match_distance(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    PERMUTATIONS
        .iter()
        .map(|perm| (0..3).map(|i| (a[i] - b[perm[i]]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Reorders `next` to follow `prev` branch by branch (minimal total
/// distance over the six permutations).
pub fn align_to(prev: &[Complex64; 3], next: &[Complex64; 3]) -> [Complex64; 3] {
    let best = PERMUTATIONS
        .iter()
        .min_by(|p, q| {
            let cost = |perm: &[usize; 3]| (0..3).map(|i| (prev[i] - next[perm[i]]).norm()).sum::<f64>();
            cost(p).total_cmp(&cost(q))
        })
        .expect("six permutations");
    [next[best[0]], next[best[1]], next[best[2]]]
}

/// Classifies an eigenvalue triple.
///
/// Fails when the triple is not closed under complex conjugation within
/// `tol`, since then no pseudo-Hermitian phase applies.
pub fn classify_phase(eigenvalues: &[Complex64; 3], tol: f64) -> Result<SpectralPhase> {
    let e = eigenvalues;
    if !closed_under_conjugation(e, tol) {
        return Err(Error::Classification(format!(
            "eigenvalues {e:?} are not closed under conjugation within {tol:e}"
        )));
    }
    let coincident = [(0, 1), (1, 2), (0, 2)]
        .iter()
        .filter(|(i, j)| (e[*i] - e[*j]).norm() < tol)
        .count();
    let phase = match coincident {
        0 => match e.iter().filter(|z| z.im.abs() < tol).count() {
            3 => Phase::ThreeRealDistinct,
            1 => Phase::OneRealPlusConjugatePair,
            n => {
                return Err(Error::Classification(format!(
                    "{n} real eigenvalues among {e:?} at tolerance {tol:e}"
                )))
            }
        },
        1 => Phase::Ep2,
        _ => Phase::Ep3,
    };
    Ok(SpectralPhase { phase, tol })
}

/// Whether the multiset equals its own complex conjugate within `tol`.
pub fn closed_under_conjugation(e: &[Complex64; 3], tol: f64) -> bool {
    let conj = [e[0].conj(), e[1].conj(), e[2].conj()];
    match_distance(e, &conj) <= tol
}

/// Eigenvalues of the 3×3 effective Hamiltonian from a general complex
/// Schur decomposition. Makes no use of the manifold constraints.
pub fn eigenvalues_direct(params: &PhysicalParams) -> Result<SpectrumTriple> {
    let h = build_effective_hamiltonian(params);
    let schur = Schur::try_new(h, f64::EPSILON * 1e-2, 10_000)
        .ok_or(Error::Classification("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let eigenvalues = [t[(0, 0)], t[(1, 1)], t[(2, 2)]];
    let tol = DEFAULT_PHASE_RTOL * params.reference_rate();
    let phase = classify_phase(&eigenvalues, tol).ok();
    Ok(SpectrumTriple {
        eigenvalues,
        phase,
        coeffs: None,
        tol,
    })
}

/// Spectrum of on-manifold parameters through the real cubic, classified
/// at the default tolerance.
pub fn spectrum(params: &PhysicalParams) -> Result<SpectrumTriple> {
    let coeffs = cubic_coefficients(params);
    solve_cubic_with_tol(&coeffs, params.omega_c, DEFAULT_PHASE_RTOL * params.reference_rate())
}
