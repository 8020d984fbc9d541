//! Frequency-domain response of the driven cavity and coherent perfect
//! absorption.
//!
//! The probe frequency `omega` is absolute; spectra are usually plotted
//! against `omega − omega_c`. Port outputs follow `p_out = √(2γ)·a − p_in`
//! for each mirror rate γ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{linspace, Execution};
use crate::model::PhysicalParams;
use crate::roots::{bisect, golden_min};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Probe amplitudes at the two ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub p_in_1: Complex64,
    pub p_in_2: Complex64,
}

impl DriveConfig {
    pub fn new(p_in_1: Complex64, p_in_2: Complex64) -> Self {
        Self { p_in_1, p_in_2 }
    }

    /// In-phase drive with `p_in_2 / p_in_1 = √(β/α)`, the ratio under which
    /// both outputs can vanish together.
    pub fn cpa_ratio(p_in_1: Complex64, params: &PhysicalParams) -> Result<Self> {
        if !(params.alpha > 0.0) {
            return Err(Error::Domain {
                name: "alpha",
                value: params.alpha,
                requirement: "must be > 0 for a CPA drive ratio",
            });
        }
        Ok(Self {
            p_in_1,
            p_in_2: p_in_1 * (params.beta / params.alpha).sqrt(),
        })
    }

    pub fn input_power(&self) -> f64 {
        self.p_in_1.norm_sqr() + self.p_in_2.norm_sqr()
    }

    fn cavity_drive(&self, params: &PhysicalParams) -> Complex64 {
        (2.0 * params.alpha).sqrt() * self.p_in_1 + (2.0 * params.beta).sqrt() * self.p_in_2
    }
}

/// All response quantities at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub omega: f64,
    pub sigma: Complex64,
    pub a_amp: Complex64,
    /// Common value of S₁ and S₂.
    pub s: Complex64,
    /// `|S₁|² + |S₂|² = 2|S|²`.
    pub total_output: f64,
    pub transmission: f64,
    pub absorption: f64,
    /// Cavity denominator vanished (lasing threshold); amplitudes are
    /// reported as infinite.
    pub singular: bool,
}

/// Emitter self-energy Σ(ω).
pub fn self_energy(omega: f64, params: &PhysicalParams) -> Result<Complex64> {
    let mut sigma = Complex64::new(0.0, 0.0);
    for (g, w, k) in [
        (params.g_1, params.omega_1, params.kappa_1),
        (params.g_2, params.omega_2, params.kappa_2),
    ] {
        if g == 0.0 {
            continue;
        }
        let den = Complex64::new(-k, omega - w);
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole { omega });
        }
        sigma += g * g / den;
    }
    Ok(sigma)
}

/// `i(ω − ω_c) − κ_c + Σ(ω)`.
fn cavity_denominator(omega: f64, params: &PhysicalParams) -> Result<Complex64> {
    Ok(I * (omega - params.omega_c) - params.kappa_c() + self_energy(omega, params)?)
}

fn infinite() -> Complex64 {
    Complex64::new(f64::INFINITY, 0.0)
}

/// Steady-state intracavity amplitude under the drive.
pub fn intracavity_field(omega: f64, params: &PhysicalParams, drive: &DriveConfig) -> Result<Complex64> {
    let den = cavity_denominator(omega, params)?;
    let num = drive.cavity_drive(params);
    if num == Complex64::new(0.0, 0.0) {
        return Ok(num);
    }
    if den == Complex64::new(0.0, 0.0) {
        return Ok(infinite());
    }
    Ok(-num / den)
}

/// Reflection-type S-parameter, identical for both ports under the CPA
/// drive ratio.
pub fn s_parameter(omega: f64, params: &PhysicalParams) -> Result<Complex64> {
    let den = cavity_denominator(omega, params)?;
    if den == Complex64::new(0.0, 0.0) {
        return Ok(infinite());
    }
    Ok(-1.0 - 2.0 * (params.alpha + params.beta) / den)
}

pub fn total_output(omega: f64, params: &PhysicalParams) -> Result<f64> {
    Ok(2.0 * s_parameter(omega, params)?.norm_sqr())
}

/// Output amplitudes `(p_out1, p_out2)`.
pub fn port_outputs(omega: f64, params: &PhysicalParams, drive: &DriveConfig) -> Result<(Complex64, Complex64)> {
    let a = intracavity_field(omega, params, drive)?;
    Ok((
        (2.0 * params.alpha).sqrt() * a - drive.p_in_1,
        (2.0 * params.beta).sqrt() * a - drive.p_in_2,
    ))
}

fn nonzero_drive(drive: &DriveConfig) -> Result<f64> {
    let power = drive.input_power();
    if power > 0.0 {
        Ok(power)
    } else {
        Err(Error::ZeroDrive)
    }
}

/// Power leaving port 2 over total input power.
pub fn transmission(omega: f64, params: &PhysicalParams, drive: &DriveConfig) -> Result<f64> {
    let power = nonzero_drive(drive)?;
    let (_, out2) = port_outputs(omega, params, drive)?;
    Ok(out2.norm_sqr() / power)
}

/// One minus total output power over total input power. Negative values
/// mean net amplification.
pub fn absorption(omega: f64, params: &PhysicalParams, drive: &DriveConfig) -> Result<f64> {
    let power = nonzero_drive(drive)?;
    let (out1, out2) = port_outputs(omega, params, drive)?;
    Ok(1.0 - (out1.norm_sqr() + out2.norm_sqr()) / power)
}

pub fn response_point(omega: f64, params: &PhysicalParams, drive: &DriveConfig) -> Result<ResponsePoint> {
    let power = nonzero_drive(drive)?;
    let sigma = self_energy(omega, params)?;
    let den = I * (omega - params.omega_c) - params.kappa_c() + sigma;
    let singular = den == Complex64::new(0.0, 0.0);
    let a_amp = intracavity_field(omega, params, drive)?;
    let s = s_parameter(omega, params)?;
    let out1 = (2.0 * params.alpha).sqrt() * a_amp - drive.p_in_1;
    let out2 = (2.0 * params.beta).sqrt() * a_amp - drive.p_in_2;
    Ok(ResponsePoint {
        omega,
        sigma,
        a_amp,
        s,
        total_output: 2.0 * s.norm_sqr(),
        transmission: out2.norm_sqr() / power,
        absorption: 1.0 - (out1.norm_sqr() + out2.norm_sqr()) / power,
        singular,
    })
}

/// Probe grid of offsets from `omega_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl ProbeGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Self {
        Self { lo, hi, n_points }
    }

    /// `±10·kappa_2` with 2001 points.
    pub fn default_for(kappa_2: f64) -> Self {
        Self {
            lo: -10.0 * kappa_2,
            hi: 10.0 * kappa_2,
            n_points: 2001,
        }
    }

    pub fn offsets(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n_points)
    }
}

pub fn spectrum_sweep(params: &PhysicalParams, grid: ProbeGrid, drive: &DriveConfig) -> Result<Vec<ResponsePoint>> {
    spectrum_sweep_with(params, grid, drive, Execution::default())
}

/// Evaluates every response quantity across the probe grid.
pub fn spectrum_sweep_with(
    params: &PhysicalParams,
    grid: ProbeGrid,
    drive: &DriveConfig,
    exec: Execution,
) -> Result<Vec<ResponsePoint>> {
    if grid.n_points < 2 || !(grid.hi > grid.lo) {
        return Err(Error::Domain {
            name: "probe grid",
            value: grid.n_points as f64,
            requirement: "need at least 2 points and lo < hi",
        });
    }
    let offsets = grid.offsets();
    exec.map(&offsets, |&dw| response_point(params.omega_c + dw, params, drive))
        .into_iter()
        .collect()
}

/// CPA residual `i(ω − ω_c) + κ_e + Σ(ω)`; both outputs vanish under the
/// CPA drive ratio exactly where it is zero.
pub fn cpa_residual(omega: f64, params: &PhysicalParams) -> Result<Complex64> {
    Ok(I * (omega - params.omega_c) + params.kappa_e() + self_energy(omega, params)?)
}

const CPA_GRID: usize = 8192;
const CPA_RTOL: f64 = 1e-9;

/// All real frequencies where the CPA residual vanishes.
///
/// The search window is a Gershgorin bound on the effective Hamiltonian,
/// which contains every real eigenvalue and hence every CPA frequency.
/// Candidates come from sign changes of `Im R` (refined by bisection) and
/// from local minima of `|R|` (refined by golden-section search, which also
/// catches tangential double roots); a candidate is kept when
/// `|R| < 1e-9·κ₂`.
pub fn cpa_frequencies(params: &PhysicalParams) -> Result<Vec<f64>> {
    let residual = |w: f64| cpa_residual(w, params).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let wc = params.omega_c;
    let radius = [
        (params.kappa_e().abs(), params.g_1 + params.g_2),
        (params.delta_1().hypot(params.kappa_1), params.g_1),
        (params.delta_2().hypot(params.kappa_2), params.g_2),
    ]
    .iter()
    .map(|(centre, row)| centre + row)
    .fold(0.0, f64::max);
    let half = 1.05 * radius + 1e-12 * params.frequency_scale().max(1.0);
    let grid = linspace(wc - half, wc + half, CPA_GRID);
    let values: Vec<Complex64> = grid.iter().map(|&w| residual(w)).collect();

    let tol = CPA_RTOL * params.reference_rate();
    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut keep = |w: f64| {
        let r = residual(w).norm();
        if r < tol {
            found.push((w, r));
        }
    };
    for i in 0..grid.len() - 1 {
        let (f0, f1) = (values[i].im, values[i + 1].im);
        if f0 == 0.0 || f0 * f1 < 0.0 {
            keep(bisect(|w| residual(w).im, grid[i], grid[i + 1], f0));
        }
    }
    for i in 1..grid.len() - 1 {
        let m = values[i].norm();
        if m <= values[i - 1].norm() && m <= values[i + 1].norm() {
            keep(golden_min(|w| residual(w).norm_sqr(), grid[i - 1], grid[i + 1]));
        }
    }

    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let merge = 1e-7 * params.frequency_scale().max(f64::MIN_POSITIVE);
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for (w, r) in found {
        match roots.last_mut() {
            Some(last) if (w - last.0).abs() < merge => {
                if r < last.1 {
                    *last = (w, r);
                }
            }
            _ => roots.push((w, r)),
        }
    }
    Ok(roots.into_iter().map(|(w, _)| w).collect())
}

/// Indices of strict local maxima whose topographic prominence is at least
/// `prominence_frac` of the value range.
pub fn find_peaks(values: &[f64], prominence_frac: f64) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let floor = prominence_frac * (hi - lo);
    (1..n - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .filter(|&i| prominence(values, i) >= floor)
        .collect()
}

fn prominence(values: &[f64], peak: usize) -> f64 {
    let v = values[peak];
    let mut left_min = v;
    for &x in values[..peak].iter().rev() {
        if x > v {
            break;
        }
        left_min = left_min.min(x);
    }
    let mut right_min = v;
    for &x in &values[peak + 1..] {
        if x > v {
            break;
        }
        right_min = right_min.min(x);
    }
    v - left_min.max(right_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_params, Mirrors, RatioSpec};

    fn sym(g2: f64) -> PhysicalParams {
        derive_params(&RatioSpec::new(1.0, 1.0, 2.0, g2), Mirrors::new(2.25, 2.25, 0.5)).unwrap()
    }

    fn unit_drive(params: &PhysicalParams) -> DriveConfig {
        DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), params).unwrap()
    }

    #[test]
    fn self_energy_limits() {
        let mut params = sym(3.0);
        let s = self_energy(params.omega_c, &params).unwrap();
        assert!((s - Complex64::new(-4.0, 0.0)).norm() < 1e-12);
        let far = self_energy(params.omega_c + 2e6, &params).unwrap();
        assert!(far.norm() < 1e-5 * 2.0);
        params.g_1 = 0.0;
        params.g_2 = 0.0;
        assert_eq!(self_energy(0.3, &params).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pole_when_emitter_lossless() {
        let mut params = sym(3.0);
        params.kappa_1 = 0.0;
        assert!(matches!(self_energy(params.omega_1, &params), Err(Error::Pole { .. })));
    }

    #[test]
    fn cpa_at_cavity_frequency_symmetric() {
        let params = sym(4.0 / 3f64.sqrt());
        let s = s_parameter(params.omega_c, &params).unwrap();
        assert!(s.norm() < 1e-12);
        assert!(total_output(params.omega_c, &params).unwrap() < 1e-24);
        let drive = unit_drive(&params);
        let a = intracavity_field(params.omega_c, &params, &drive).unwrap();
        assert!((a.norm() - 1.0 / (2.0 * params.alpha).sqrt()).abs() < 1e-12);
        assert!(transmission(params.omega_c, &params, &drive).unwrap() < 1e-24);
        assert!((absorption(params.omega_c, &params, &drive).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_detuned_limits() {
        let params = sym(3.0);
        let drive = unit_drive(&params);
        let w = params.omega_c + 1e7;
        assert!((total_output(w, &params).unwrap() - 2.0).abs() < 1e-5);
        assert!((transmission(w, &params, &drive).unwrap() - 0.5).abs() < 1e-5);
        assert!(intracavity_field(w, &params, &drive).unwrap().norm() < 1e-6);
    }

    #[test]
    fn zero_drive_cases() {
        let params = sym(3.0);
        let zero = DriveConfig::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(
            intracavity_field(0.2, &params, &zero).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(transmission(0.2, &params, &zero), Err(Error::ZeroDrive));
        assert_eq!(absorption(0.2, &params, &zero), Err(Error::ZeroDrive));
    }

    #[test]
    fn decoupled_lossless_absorbs_nothing() {
        let mut params = sym(3.0);
        params.g_1 = 0.0;
        params.g_2 = 0.0;
        params.kappa_int = 0.0;
        let drive = unit_drive(&params);
        assert!(absorption(params.omega_c + 1e4, &params, &drive).unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetric_cpa_frequencies() {
        let below = cpa_frequencies(&sym(2.15)).unwrap();
        assert_eq!(below.len(), 1);
        assert!(below[0].abs() < 1e-9);

        let params = sym(3.0);
        let found = cpa_frequencies(&params).unwrap();
        let r = (3.0 * 9.0 - 16.0f64).sqrt();
        assert_eq!(found.len(), 3, "{found:?}");
        for (got, want) in found.iter().zip([-r, 0.0, r]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn peak_detection() {
        let xs: Vec<f64> = (0..401).map(|i| -4.0 + 0.02 * i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (-(x - 1.0).powi(2)).exp() + 0.5 * (-(x + 2.0).powi(2) * 4.0).exp())
            .collect();
        let peaks = find_peaks(&ys, 1e-4);
        assert_eq!(peaks.len(), 2);
        assert!((xs[peaks[0]] + 2.0).abs() < 0.03);
        assert!((xs[peaks[1]] - 1.0).abs() < 0.03);
        assert!(find_peaks(&[1.0, 2.0, 3.0], 0.0).is_empty());
    }
}
