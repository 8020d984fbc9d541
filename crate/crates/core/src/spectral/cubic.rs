use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{classify_phase, CubicCoeffs, SpectrumTriple};
use crate::error::Result;

/// Relative separation below which two roots are treated as one for
/// classification.
const SNAP_RTOL: f64 = 1e-7;

/// Roots of `x³ + B x² + C x + D` with real coefficients.
///
/// One real root comes from the trigonometric form (three real roots) or
/// Cardano's formula (one real root), is polished by Newton iteration and
/// deflated. The remaining quadratic is solved in closed form, so a complex
/// pair is always exactly conjugate.
pub fn cubic_roots(coeffs: &CubicCoeffs) -> [Complex64; 3] {
    let (b, c, d) = (coeffs.b, coeffs.c, coeffs.d);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let real_root = if disc < 0.0 {
        // Three real roots; keep the one of largest magnitude.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - TAU * k as f64 / 3.0).cos() - shift)
            .max_by(|x, y| x.abs().total_cmp(&y.abs()))
            .unwrap_or(-shift)
    } else {
        let u = -q.signum() * (0.5 * q.abs() + disc.sqrt()).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        u + v - shift
    };
    let r = polish_real(coeffs, real_root);

    // x³ + Bx² + Cx + D = (x − r)(x² + (B + r)x + e)
    let beta = b + r;
    let e = if r.abs() > coeffs.root_scale() * 1e-3 && r != 0.0 {
        // Backward deflation is better conditioned for the dominant root.
        -d / r
    } else {
        c + r * beta
    };
    let (z1, z2) = quadratic_roots(beta, e);
    let (z1, z2) = if z1.im != 0.0 {
        let z = polish_complex(coeffs, z1);
        (z, z.conj())
    } else {
        (
            Complex64::new(polish_real(coeffs, z1.re), 0.0),
            Complex64::new(polish_real(coeffs, z2.re), 0.0),
        )
    };
    [Complex64::new(r, 0.0), z1, z2]
}

fn quadratic_roots(beta: f64, e: f64) -> (Complex64, Complex64) {
    let half = -0.5 * beta;
    let disc = half * half - e;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { e / big } else { 0.0 };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half, s), Complex64::new(half, -s))
    }
}

/// Newton steps kept only while they reduce the residual.
fn polish_real(coeffs: &CubicCoeffs, mut x: f64) -> f64 {
    let f = |x: f64| ((x + coeffs.b) * x + coeffs.c) * x + coeffs.d;
    let df = |x: f64| (3.0 * x + 2.0 * coeffs.b) * x + coeffs.c;
    let mut fx = f(x);
    for _ in 0..4 {
        let slope = df(x);
        if fx == 0.0 || slope == 0.0 {
            break;
        }
        let next = x - fx / slope;
        let f_next = f(next);
        if f_next.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

fn polish_complex(coeffs: &CubicCoeffs, mut z: Complex64) -> Complex64 {
    let mut fz = coeffs.eval(z);
    for _ in 0..4 {
        let slope = coeffs.eval_derivative(z);
        if fz.norm() == 0.0 || slope.norm() == 0.0 {
            break;
        }
        let next = z - fz / slope;
        let f_next = coeffs.eval(next);
        if f_next.norm() >= fz.norm() {
            break;
        }
        z = next;
        fz = f_next;
    }
    z
}

/// Merges roots whose relative separation is below [`SNAP_RTOL`].
fn snapped(roots: &[Complex64; 3], scale: f64) -> [Complex64; 3] {
    let mut out = *roots;
    let limit = SNAP_RTOL * scale.max(f64::MIN_POSITIVE);
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if (out[i] - out[j]).norm() < limit {
            let mean = 0.5 * (out[i] + out[j]);
            out[i] = mean;
            out[j] = mean;
        }
    }
    out
}

/// Solves the cubic and classifies the spectrum at `tol`.
///
/// Returned eigenvalues are absolute (`ω_c + x`).
pub fn solve_cubic_with_tol(coeffs: &CubicCoeffs, omega_c: f64, tol: f64) -> Result<SpectrumTriple> {
    let roots = cubic_roots(coeffs);
    let merged = snapped(&roots, coeffs.root_scale());
    let phase = classify_phase(&merged, tol)?;
    let shift = Complex64::new(omega_c, 0.0);
    Ok(SpectrumTriple {
        eigenvalues: roots.map(|z| z + shift),
        phase: Some(phase),
        tol,
        coeffs: Some(*coeffs),
    })
}

/// Solves the cubic with a tolerance of 1e-6 of the root scale.
pub fn solve_cubic(coeffs: &CubicCoeffs, omega_c: f64) -> Result<SpectrumTriple> {
    let tol = super::DEFAULT_PHASE_RTOL * coeffs.root_scale().max(f64::MIN_POSITIVE);
    solve_cubic_with_tol(coeffs, omega_c, tol)
}
