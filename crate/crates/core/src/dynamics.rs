//! Fixed-step RK4 integration of the mean-field equations.
//!
//! Driven runs use the frame rotating at the probe frequency, so the steady
//! state is a fixed point of the flow. Undriven runs evolve
//! `dV/dt = −i·H_eff·V` in the frame rotating at `omega_c`; norms are frame
//! independent and extracted frequencies are shifted back to absolute values.

use nalgebra::{ComplexField, DMatrix, DVector, Matrix3, Schur, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{build_effective_hamiltonian, is_on_manifold, PhysicalParams};
use crate::response::DriveConfig;
use crate::spectral::eigenvalues_direct;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cavity amplitude and the two emitter coherences.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub a: Complex64,
    pub sigma_1: Complex64,
    pub sigma_2: Complex64,
}

impl StateVector {
    pub fn new(a: Complex64, sigma_1: Complex64, sigma_2: Complex64) -> Self {
        Self { a, sigma_1, sigma_2 }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `(1, 0, 0)`: field only.
    pub fn cavity_probe() -> Self {
        Self::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        )
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    fn to_vector(self) -> Vector3<Complex64> {
        Vector3::new(self.a, self.sigma_1, self.sigma_2)
    }

    fn from_vector(v: &Vector3<Complex64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Linear flow `dV/dt = M·V + f`.
struct LinearFlow {
    m: Matrix3<Complex64>,
    f: Vector3<Complex64>,
}

impl LinearFlow {
    fn rate(&self, v: &Vector3<Complex64>) -> Vector3<Complex64> {
        self.m * v + self.f
    }

    fn rk4_step(&self, v: &Vector3<Complex64>, dt: f64) -> Vector3<Complex64> {
        let h = Complex64::new(dt, 0.0);
        let half = Complex64::new(0.5 * dt, 0.0);
        let k1 = self.rate(v);
        let k2 = self.rate(&(v + k1 * half));
        let k3 = self.rate(&(v + k2 * half));
        let k4 = self.rate(&(v + k3 * h));
        let two = Complex64::new(2.0, 0.0);
        v + (k1 + k2 * two + k3 * two + k4) * (h / 6.0)
    }

    fn propagate(&self, mut v: Vector3<Complex64>, dt: f64, steps: usize) -> Vector3<Complex64> {
        for _ in 0..steps {
            v = self.rk4_step(&v, dt);
        }
        v
    }
}

/// Passive (undriven-gain) generator: the cavity loses `κ_c` instead of
/// gaining `κ_e`, because the drive enters explicitly.
fn passive_hamiltonian(params: &PhysicalParams) -> Matrix3<Complex64> {
    let mut h = build_effective_hamiltonian(params);
    h[(0, 0)] = Complex64::new(params.omega_c, -params.kappa_c());
    h
}

fn driven_flow(params: &PhysicalParams, drive: &DriveConfig, omega: f64) -> LinearFlow {
    let shifted = passive_hamiltonian(params) - Matrix3::identity() * Complex64::new(omega, 0.0);
    let drive_term = (2.0 * params.alpha).sqrt() * drive.p_in_1 + (2.0 * params.beta).sqrt() * drive.p_in_2;
    LinearFlow {
        m: shifted * (-I),
        f: Vector3::new(drive_term, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
    }
}

fn matrix_eigenvalues(m: Matrix3<Complex64>) -> Result<[Complex64; 3]> {
    let schur = Schur::try_new(m, f64::EPSILON * 1e-2, 10_000)
        .ok_or(Error::Classification("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok([t[(0, 0)], t[(1, 1)], t[(2, 2)]])
}

/// Time step of 0.05 over the fastest rate of the driven generator.
pub fn suggested_dt(params: &PhysicalParams, omega: f64) -> Result<f64> {
    let shifted = passive_hamiltonian(params) - Matrix3::identity() * Complex64::new(omega, 0.0);
    let fastest = matrix_eigenvalues(shifted)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let bound = [params.kappa_c(), params.kappa_1, params.kappa_2, params.g_1, params.g_2]
        .into_iter()
        .fold(fastest, f64::max);
    if !(bound > 0.0) {
        return Err(Error::Domain {
            name: "rates",
            value: bound,
            requirement: "need a nonzero rate",
        });
    }
    Ok(0.05 / bound)
}

/// Slowest decay rate of the passive system.
pub fn slowest_decay(params: &PhysicalParams) -> Result<f64> {
    let eigs = matrix_eigenvalues(passive_hamiltonian(params))?;
    Ok(eigs.iter().map(|z| -z.im).fold(f64::INFINITY, f64::min))
}

/// Horizon and step for a driven run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrivenOptions {
    /// Defaults to 40 over the slowest passive decay rate.
    pub t_end: Option<f64>,
    /// Defaults to [`suggested_dt`].
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenOutcome {
    pub state: StateVector,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    /// Relative change over the last 10% of the horizon.
    pub drift: f64,
}

const SETTLE_RTOL: f64 = 1e-8;
const MAX_STEPS: usize = 20_000_000;

/// Integrates the driven equations from the empty cavity.
pub fn integrate_driven(
    params: &PhysicalParams,
    drive: &DriveConfig,
    omega: f64,
    options: DrivenOptions,
) -> Result<DrivenOutcome> {
    integrate_driven_from(params, drive, omega, StateVector::zero(), options)
}

/// Integrates the driven equations in the probe frame and checks that the
/// state has settled: the relative change over the last 10% of the horizon
/// must stay below 1e-8.
pub fn integrate_driven_from(
    params: &PhysicalParams,
    drive: &DriveConfig,
    omega: f64,
    initial: StateVector,
    options: DrivenOptions,
) -> Result<DrivenOutcome> {
    params.validate()?;
    let dt = match options.dt {
        Some(dt) => crate::error::positive("dt", dt)?,
        None => suggested_dt(params, omega)?,
    };
    let t_end = match options.t_end {
        Some(t) => crate::error::positive("t_end", t)?,
        None => {
            let gamma = slowest_decay(params)?;
            if !(gamma > 0.0) {
                return Err(Error::NotConverged { drift: f64::INFINITY });
            }
            40.0 / gamma
        }
    };
    let steps = (t_end / dt).ceil() as usize;
    if steps > MAX_STEPS {
        // Rates too far apart to settle within the step budget.
        return Err(Error::NotConverged { drift: f64::INFINITY });
    }
    let tail = (steps / 10).max(1);
    let flow = driven_flow(params, drive, omega);
    let before = flow.propagate(initial.to_vector(), dt, steps - tail.min(steps));
    let after = flow.propagate(before, dt, tail.min(steps));

    // A decaying transient is measured against where it started.
    let scale = after
        .norm()
        .max(initial.norm())
        .max(flow.f.norm() / params.frequency_scale().max(f64::MIN_POSITIVE));
    let drift = if scale > 0.0 {
        (after - before).norm() / scale
    } else {
        0.0
    };
    if !(drift < SETTLE_RTOL) || after.iter().any(|z| !z.is_finite()) {
        return Err(Error::NotConverged { drift });
    }
    Ok(DrivenOutcome {
        state: StateVector::from_vector(&after),
        t_end: dt * steps as f64,
        dt,
        steps,
        drift,
    })
}

/// State after exactly `steps` RK4 steps of size `dt`, with no settling
/// check. Used for step-size studies.
pub fn propagate_driven(
    params: &PhysicalParams,
    drive: &DriveConfig,
    omega: f64,
    initial: StateVector,
    dt: f64,
    steps: usize,
) -> StateVector {
    let flow = driven_flow(params, drive, omega);
    StateVector::from_vector(&flow.propagate(initial.to_vector(), dt, steps))
}

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Frame frequency subtracted from the generator.
    pub frame: f64,
}

impl Trajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(StateVector::norm).collect()
    }

    pub fn sample_interval(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRun {
    pub trajectory: Trajectory,
    /// Parameters were off the manifold; growth is not bounded by a real
    /// spectrum.
    pub off_manifold: bool,
    /// Largest imaginary part of the spectrum.
    pub max_growth_rate: f64,
}

/// Factor by which the norm may exceed its spectral envelope before the run
/// is declared unstable.
const STABILITY_FACTOR: f64 = 1e6;

/// Evolves `dV/dt = −i·H_eff·V` with `steps` RK4 steps, keeping every
/// `stride`-th state.
///
/// The norm is checked against `e^{γt}·(1 + st + (st)²/2)`, with γ the
/// largest imaginary eigenvalue and `s` the Frobenius norm of the shifted
/// generator; this envelope holds for any 3×3 matrix, including defective
/// ones.
pub fn integrate_effective(
    params: &PhysicalParams,
    initial: StateVector,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<EffectiveRun> {
    params.validate()?;
    crate::error::positive("dt", dt)?;
    let stride = stride.max(1);
    let off_manifold = !is_on_manifold(params, 1e-9);
    if off_manifold {
        log::warn!("effective dynamics run off the pseudo-Hermitian manifold; growth is unbounded by a real spectrum");
    }
    let gamma = eigenvalues_direct(params)?
        .eigenvalues
        .iter()
        .map(|z| z.im)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = build_effective_hamiltonian(params) - Matrix3::identity() * Complex64::new(params.omega_c, 0.0);
    let spread = shifted.norm();
    let flow = LinearFlow {
        m: shifted * (-I),
        f: Vector3::zeros(),
    };

    let norm0 = initial.norm().max(f64::MIN_POSITIVE);
    let mut v = initial.to_vector();
    let mut times = vec![0.0];
    let mut states = vec![initial];
    for step in 1..=steps {
        v = flow.rk4_step(&v, dt);
        if step % stride == 0 || step == steps {
            let t = dt * step as f64;
            let st = spread * t;
            let envelope = (gamma * t).exp() * (1.0 + st + 0.5 * st * st);
            let growth = v.norm() / norm0;
            if !growth.is_finite() || growth > STABILITY_FACTOR * envelope {
                return Err(Error::Stability {
                    time: t,
                    growth,
                    bound: envelope,
                });
            }
            if step % stride == 0 {
                times.push(t);
                states.push(StateVector::from_vector(&v));
            }
        }
    }
    Ok(EffectiveRun {
        trajectory: Trajectory {
            times,
            states,
            frame: params.omega_c,
        },
        off_manifold,
        max_growth_rate: gamma,
    })
}

/// Three complex frequencies from a trajectory by linear prediction.
///
/// The sampled states of a 3-mode linear system obey
/// `V_{k+3} + c₂V_{k+2} + c₁V_{k+1} + c₀V_k = 0`. The coefficients are fit by
/// least squares over all samples and components; the roots `z` of
/// `z³ + c₂z² + c₁z + c₀` map to frequencies `ϖ = i·ln(z)/τ` (plus the
/// frame). Aliasing-free only when `|Re ϖ − frame|·τ < π`.
pub fn estimate_eigenfrequencies(trajectory: &Trajectory) -> Result<[Complex64; 3]> {
    let states = &trajectory.states;
    let tau = trajectory.sample_interval();
    if states.len() < 6 || !(tau > 0.0) {
        return Err(Error::Prediction("need at least 6 samples"));
    }
    let rows = 3 * (states.len() - 3);
    let mut lhs = DMatrix::<Complex64>::zeros(rows, 3);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    for (k, window) in states.windows(4).enumerate() {
        let window = [window[0], window[1], window[2], window[3]].map(StateVector::to_vector);
        for comp in 0..3 {
            let row = 3 * k + comp;
            for (j, v) in window[..3].iter().enumerate() {
                lhs[(row, j)] = v[comp];
            }
            rhs[row] = -window[3][comp];
        }
    }
    // Row scaling keeps growing trajectories well conditioned.
    for row in 0..rows {
        let s = (0..3).map(|j| lhs[(row, j)].norm()).fold(rhs[row].norm(), f64::max);
        if s > 0.0 {
            for j in 0..3 {
                lhs[(row, j)] /= s;
            }
            rhs[row] /= s;
        }
    }
    let coeffs = lhs
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|_| Error::Prediction("least-squares solve failed"))?;

    let mut companion = Matrix3::<Complex64>::zeros();
    companion[(1, 0)] = Complex64::new(1.0, 0.0);
    companion[(2, 1)] = Complex64::new(1.0, 0.0);
    for j in 0..3 {
        companion[(j, 2)] = -coeffs[j];
    }
    let roots = matrix_eigenvalues(companion)?;
    if roots.iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
        return Err(Error::Prediction("degenerate prediction polynomial"));
    }
    Ok(roots.map(|z| I * z.ln() / tau + trajectory.frame))
}

fn line_fit(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::Prediction("need at least 2 points for a fit"));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Prediction("degenerate abscissae"));
    }
    Ok(sxy / sxx)
}

fn positive_samples(times: &[f64], norms: &[f64], from: f64, log_time: bool) -> (Vec<f64>, Vec<f64>) {
    times
        .iter()
        .zip(norms)
        .filter(|(t, n)| **t >= from && **t > 0.0 && **n > 0.0)
        .map(|(t, n)| (if log_time { t.ln() } else { *t }, n.ln()))
        .unzip()
}

/// Exponential growth rate: slope of `ln‖V‖` against `t` for `t ≥ from`.
pub fn fit_growth_rate(times: &[f64], norms: &[f64], from: f64) -> Result<f64> {
    let (x, y) = positive_samples(times, norms, from, false);
    line_fit(&x, &y)
}

/// Power-law exponent: slope of `ln‖V‖` against `ln t` for `t ≥ from`.
pub fn fit_power_law(times: &[f64], norms: &[f64], from: f64) -> Result<f64> {
    let (x, y) = positive_samples(times, norms, from, true);
    line_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_params, Mirrors, RatioSpec};
    use crate::response::{cpa_frequencies, intracavity_field};
    use crate::spectral::spectrum;

    fn sym(g2: f64) -> PhysicalParams {
        derive_params(&RatioSpec::new(1.0, 1.0, 2.0, g2), Mirrors::new(2.25, 2.25, 0.5)).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zero_drive_decays() {
        let params = sym(3.0);
        let zero = DriveConfig::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let t_end = 50.0 / slowest_decay(&params).unwrap();
        let start = StateVector::new(
            Complex64::new(1.0, 0.5),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, -0.3),
        );
        let out = integrate_driven_from(
            &params,
            &zero,
            0.0,
            start,
            DrivenOptions {
                t_end: Some(t_end),
                dt: None,
            },
        )
        .unwrap();
        assert!(out.state.norm() < 1e-10);
    }

    #[test]
    fn cpa_fixed_point() {
        let params = sym(3.0);
        let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &params).unwrap();
        for w in cpa_frequencies(&params).unwrap() {
            let out = integrate_driven(&params, &drive, w, DrivenOptions::default()).unwrap();
            let expected = drive.p_in_1 / (2.0 * params.alpha).sqrt();
            assert!(rel(out.state.a, expected) < 1e-6);
        }
    }

    #[test]
    fn matches_frequency_domain() {
        let params = sym(2.7);
        let drive = DriveConfig::new(Complex64::new(0.7, 0.2), Complex64::new(-0.1, 0.4));
        for w in [-3.0, 0.4, 5.5] {
            let out = integrate_driven(&params, &drive, w, DrivenOptions::default()).unwrap();
            let a = intracavity_field(w, &params, &drive).unwrap();
            assert!(rel(out.state.a, a) < 1e-6, "{w}: {} vs {a}", out.state.a);
        }
    }

    #[test]
    fn short_horizon_not_converged() {
        let params = sym(3.0);
        let drive = DriveConfig::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let r = integrate_driven(
            &params,
            &drive,
            0.0,
            DrivenOptions {
                t_end: Some(0.5),
                dt: None,
            },
        );
        assert!(matches!(r, Err(Error::NotConverged { .. })));
    }

    #[test]
    fn step_budget_exceeded() {
        let params = derive_params(&RatioSpec::new(1.0, 1.0, 1e-6, 1e3), Mirrors::new(1e-6, 1e-6, 0.0)).unwrap();
        let drive = DriveConfig::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let r = integrate_driven(&params, &drive, 0.0, DrivenOptions::default());
        assert!(matches!(r, Err(Error::NotConverged { .. })));
    }

    #[test]
    fn real_phase_stays_bounded() {
        let params = sym(3.0);
        let run = integrate_effective(&params, StateVector::cavity_probe(), 0.01, 20_000, 10).unwrap();
        assert!(!run.off_manifold);
        let peak = run.trajectory.norms().into_iter().fold(0.0, f64::max);
        assert!(peak < 10.0, "{peak}");
    }

    #[test]
    fn pair_phase_growth_rate() {
        let params = sym(2.0);
        let gamma = spectrum(&params).unwrap().max_abs_imag();
        let t_window = 20.0 / params.kappa_2;
        let dt = 1e-3;
        let steps = (t_window / dt) as usize;
        let run = integrate_effective(&params, StateVector::cavity_probe(), dt, steps, 10).unwrap();
        let fitted = fit_growth_rate(&run.trajectory.times, &run.trajectory.norms(), 0.5 * t_window).unwrap();
        assert!((fitted - gamma).abs() < 0.01 * gamma, "{fitted} vs {gamma}");
    }

    #[test]
    fn ep3_grows_quadratically() {
        let params = sym(4.0 / 3f64.sqrt());
        let run = integrate_effective(&params, StateVector::cavity_probe(), 1e-3, 50_000, 10).unwrap();
        let times = &run.trajectory.times;
        let norms = run.trajectory.norms();
        let slope = fit_power_law(times, &norms, 25.0).unwrap();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn eigenfrequencies_recovered() {
        let params = sym(3.0);
        let run = integrate_effective(
            &params,
            StateVector::new(
                Complex64::new(1.0, 0.0),
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.4),
            ),
            1e-3,
            4000,
            20,
        )
        .unwrap();
        let got = estimate_eigenfrequencies(&run.trajectory).unwrap();
        let want = spectrum(&params).unwrap().eigenvalues;
        assert!(
            crate::spectral::match_distance(&got, &want) < 1e-3 * params.kappa_2,
            "{got:?} vs {want:?}"
        );
    }

    #[test]
    fn rk4_order() {
        let params = sym(2.7);
        let drive = DriveConfig::new(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0));
        let w = 0.8;
        let t = 2.0;
        let run = |dt: f64| propagate_driven(&params, &drive, w, StateVector::zero(), dt, (t / dt).round() as usize).a;
        let (c, m, f) = (run(0.02), run(0.01), run(0.005));
        let ratio = (c - m).norm() / (m - f).norm();
        assert!((ratio - 16.0).abs() < 4.0, "{ratio}");
    }

    #[test]
    fn off_manifold_flagged() {
        let mut params = sym(3.0);
        params.alpha += 0.5;
        let run = integrate_effective(&params, StateVector::cavity_probe(), 1e-3, 100, 10).unwrap();
        assert!(run.off_manifold);
    }
}
