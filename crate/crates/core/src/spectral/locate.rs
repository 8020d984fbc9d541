use num_complex::Complex64;

use super::{align_to, cubic_coefficients, solve_cubic_with_tol, Phase, DEFAULT_PHASE_RTOL};
use crate::error::{Error, Result};
use crate::exec::{linspace, Execution};
use crate::model::{derive_params, g_ep3_analytic, Mirrors, PhysicalParams, RatioSpec};
use crate::roots::bisect;

/// One grid point of an eigenvalue sweep over `g_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g2: f64,
    /// `None` below `g2_min`, where the manifold has no solution.
    pub eigenvalues: Option<[Complex64; 3]>,
    pub phase: Option<Phase>,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.eigenvalues.is_some()
    }
}

fn spectral_params(spec: &RatioSpec) -> Result<PhysicalParams> {
    // The spectrum only depends on the gain, not on how the mirrors split it.
    derive_params(spec, Mirrors::symmetric_lossless(spec.kappa_e()))
}

fn check_range(range: (f64, f64), n: usize) -> Result<()> {
    let (lo, hi) = range;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo || (n > 1 && hi == lo) {
        return Err(Error::Domain {
            name: "g2_range",
            value: hi - lo,
            requirement: "need finite lo < hi and at least one point",
        });
    }
    Ok(())
}

pub fn sweep_eigenvalues(template: &RatioSpec, g2_range: (f64, f64), n_points: usize) -> Result<Vec<SweepRow>> {
    sweep_eigenvalues_with(template, g2_range, n_points, Execution::default())
}

/// Eigenvalues on an even `g_2` grid. Consecutive feasible rows are
/// reordered so that each column follows one continuous branch.
pub fn sweep_eigenvalues_with(
    template: &RatioSpec,
    g2_range: (f64, f64),
    n_points: usize,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    template.validate()?;
    check_range(g2_range, n_points)?;
    let grid = linspace(g2_range.0, g2_range.1, n_points);
    let tol = DEFAULT_PHASE_RTOL * template.kappa_2;
    let mut rows = exec.map(&grid, |&g2| {
        let spectrum = spectral_params(&template.with_g2(g2))
            .ok()
            .and_then(|params| solve_cubic_with_tol(&cubic_coefficients(&params), params.omega_c, tol).ok());
        SweepRow {
            g2,
            eigenvalues: spectrum.map(|s| s.eigenvalues),
            phase: spectrum.and_then(|s| s.phase()),
        }
    });

    let mut prev: Option<[Complex64; 3]> = None;
    for row in rows.iter_mut() {
        if let Some(eigs) = row.eigenvalues {
            let aligned = match prev {
                Some(p) => align_to(&p, &eigs),
                None => eigs,
            };
            row.eigenvalues = Some(aligned);
            prev = Some(aligned);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatorOptions {
    pub grid_points: usize,
    /// Order-3 threshold on `|a|/κ₂²` and `|b|/κ₂³`.
    pub ep3_tol: f64,
}

impl Default for LocatorOptions {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            ep3_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpResiduals {
    pub a: f64,
    pub b: f64,
    pub discriminant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpRecord {
    pub g2_star: f64,
    pub order: u8,
    /// Absolute frequency of the coalescing eigenvalues.
    pub eigenvalue_at_ep: Complex64,
    pub residuals: EpResiduals,
    /// `|g2_star − g_EP3|` against the analytic `a = 0` candidate.
    pub seed_distance: f64,
}

/// The analytic `a = 0` candidate and the eigenvalue spread found there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedReport {
    pub g2: f64,
    /// Largest pairwise eigenvalue distance at the candidate; `None` when it
    /// lies below `g2_min`.
    pub max_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpScan {
    /// Sorted by `g2_star`.
    pub records: Vec<EpRecord>,
    pub seed: SeedReport,
}

impl EpScan {
    pub fn of_order(&self, order: u8) -> impl Iterator<Item = &EpRecord> {
        self.records.iter().filter(move |r| r.order == order)
    }
}

pub fn locate_eps(template: &RatioSpec, g2_range: (f64, f64)) -> Result<EpScan> {
    locate_eps_with(template, g2_range, LocatorOptions::default(), Execution::default())
}

/// Finds exceptional points as sign changes of the cubic discriminant
/// `Δ(g₂) = b² − 4ac` along `g₂`.
///
/// The range is clipped to `[g2_min, ∞)`. Each bracket is bisected down to
/// adjacent floats. A root is labeled order 3 only when both `a` and `b`
/// vanish within `ep3_tol` in natural powers of κ₂; otherwise order 2.
/// Tangential zeros of Δ (no sign change) are not reported.
pub fn locate_eps_with(
    template: &RatioSpec,
    g2_range: (f64, f64),
    options: LocatorOptions,
    exec: Execution,
) -> Result<EpScan> {
    template.validate()?;
    check_range(g2_range, options.grid_points.max(2))?;
    let g_min = template.g2_min()?;
    let k2 = template.kappa_2;

    let analytic = g_ep3_analytic(template.p, template.q, k2)?.g_ep3;
    let seed = SeedReport {
        g2: analytic,
        max_gap: spectral_params(&template.with_g2(analytic)).ok().and_then(|params| {
            solve_cubic_with_tol(&cubic_coefficients(&params), params.omega_c, DEFAULT_PHASE_RTOL * k2)
                .ok()
                .map(|s| s.max_pairwise_distance())
        }),
    };

    let lo = g2_range.0.max(g_min);
    let hi = g2_range.1;
    if hi <= lo {
        return Ok(EpScan {
            records: Vec::new(),
            seed,
        });
    }

    let coeffs_at = |g2: f64| spectral_params(&template.with_g2(g2)).map(|p| cubic_coefficients(&p));
    let disc = |g2: f64| coeffs_at(g2).map(|c| c.discriminant()).unwrap_or(f64::NAN);

    let grid = linspace(lo, hi, options.grid_points.max(2));
    let values = exec.map(&grid, |&g| disc(g));

    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (f0, f1) = (values[i], values[i + 1]);
        if f0 == 0.0 {
            roots.push(grid[i]);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect(disc, grid[i], grid[i + 1], f0));
        }
    }
    if values[grid.len() - 1] == 0.0 {
        roots.push(grid[grid.len() - 1]);
    }

    let mut records = Vec::with_capacity(roots.len());
    for g2_star in roots {
        let coeffs = coeffs_at(g2_star)?;
        let a_tol = options.ep3_tol * k2 * k2;
        let b_tol = options.ep3_tol * k2 * k2 * k2;
        let is_triple = coeffs.disc_a.abs() < a_tol && coeffs.disc_b.abs() < b_tol;
        let x = if is_triple || coeffs.disc_a == 0.0 {
            -coeffs.b / 3.0
        } else {
            // Double root at −b/(2a); the simple root sits at −B + b/a.
            -coeffs.disc_b / (2.0 * coeffs.disc_a)
        };
        records.push(EpRecord {
            g2_star,
            order: if is_triple { 3 } else { 2 },
            eigenvalue_at_ep: Complex64::new(template.omega_c + x, 0.0),
            residuals: EpResiduals {
                a: coeffs.disc_a,
                b: coeffs.disc_b,
                discriminant: coeffs.discriminant(),
            },
            seed_distance: (g2_star - analytic).abs(),
        });
    }
    records.sort_by(|x, y| x.g2_star.total_cmp(&y.g2_star));
    Ok(EpScan { records, seed })
}
