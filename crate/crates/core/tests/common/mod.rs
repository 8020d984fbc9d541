#![allow(dead_code)]

use epcavity::{derive_params, DetuningBranch, Mirrors, PhysicalParams, RatioSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random point on the pseudo-Hermitian manifold together with the
/// ingredients it was built from.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub spec: RatioSpec,
    pub mirrors: Mirrors,
    pub params: PhysicalParams,
}

/// Raw draws, each in `[0, 1)`, mapped onto physical ranges by [`build`].
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub p: f64,
    pub q: f64,
    pub kappa_2: f64,
    pub excess: f64,
    pub omega_c: f64,
    pub split: f64,
    pub loss: f64,
    pub negative: bool,
}

pub fn build(d: Draw) -> Sample {
    let p = 0.2 + 3.8 * d.p;
    let q = 0.2 + 3.8 * d.q;
    let kappa_2 = 0.5 + 4.5 * d.kappa_2;
    let omega_c = -20.0 + 40.0 * d.omega_c;
    let branch = if d.negative {
        DetuningBranch::Negative
    } else {
        DetuningBranch::Positive
    };
    let template = RatioSpec::new(p, q, kappa_2, 0.0)
        .with_omega_c(omega_c)
        .with_branch(branch);
    let g_min = template.g2_min().unwrap();
    let spec = template.with_g2(g_min * (1.02 + 1.5 * d.excess));
    let kappa_e = spec.kappa_e();
    let kappa_int = 0.5 * kappa_e * d.loss;
    let total = kappa_e + kappa_int;
    let alpha = total * (0.1 + 0.8 * d.split);
    let mirrors = Mirrors::new(alpha, total - alpha, kappa_int);
    let params = derive_params(&spec, mirrors).unwrap();
    Sample { spec, mirrors, params }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sample(rng: &mut impl Rng) -> Sample {
    build(Draw {
        p: rng.gen(),
        q: rng.gen(),
        kappa_2: rng.gen(),
        excess: rng.gen(),
        omega_c: rng.gen(),
        split: rng.gen(),
        loss: rng.gen(),
        negative: rng.gen(),
    })
}

pub fn samples(seed: u64, n: usize) -> Vec<Sample> {
    let mut r = rng(seed);
    (0..n).map(|_| random_sample(&mut r)).collect()
}

pub fn sample_strategy() -> impl Strategy<Value = Sample> {
    let unit = || 0.0f64..1.0;
    (
        (unit(), unit(), unit(), unit()),
        (unit(), unit(), unit(), any::<bool>()),
    )
        .prop_map(|((p, q, kappa_2, excess), (omega_c, split, loss, negative))| {
            build(Draw {
                p,
                q,
                kappa_2,
                excess,
                omega_c,
                split,
                loss,
                negative,
            })
        })
}

/// Symmetric configuration with `kappa_2 = 2`, `alpha = beta = 2.25`,
/// `kappa_int = 0.5`.
pub fn symmetric(g2: f64) -> PhysicalParams {
    derive_params(&RatioSpec::new(1.0, 1.0, 2.0, g2), Mirrors::new(2.25, 2.25, 0.5)).unwrap()
}

use epcavity::model::check_pseudo_hermiticity;
use epcavity::spectral::{closed_under_conjugation, cubic_coefficients_ratio, match_distance, spectrum, CubicCoeffs};
use epcavity::{build_effective_hamiltonian, cubic_coefficients, eigenvalues_direct, g2_min, g_ep3_analytic, zeta};
use num_complex::Complex64;

pub type Check = Result<(), String>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: {got} vs {want} (tol {tol:e})"))
    }
}

fn scale(s: &Sample) -> f64 {
    s.params.frequency_scale()
}

pub fn check_on_manifold(s: &Sample) -> Check {
    let k = scale(s);
    let r = check_pseudo_hermiticity(&s.params);
    close("gain", r[0], 0.0, 1e-12 * k)?;
    close("detuning", r[1], 0.0, 1e-12 * k * k)?;
    close("coupling", r[2], 0.0, 1e-11 * k * k * k)
}

/// Characteristic polynomial of the matrix itself must be real, which is
/// what makes the spectrum closed under conjugation.
pub fn check_conjugation(s: &Sample) -> Check {
    let k = scale(s);
    let mut h = build_effective_hamiltonian(&s.params);
    for i in 0..3 {
        h[(i, i)] -= s.params.omega_c;
    }
    let b = -h.trace();
    let c = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)] + h[(0, 0)] * h[(2, 2)] - h[(0, 2)] * h[(2, 0)]
        + h[(1, 1)] * h[(2, 2)]
        - h[(1, 2)] * h[(2, 1)];
    let d = -h.determinant();
    close("Im B", b.im, 0.0, 1e-12 * k)?;
    close("Im C", c.im, 0.0, 1e-11 * k * k)?;
    close("Im D", d.im, 0.0, 1e-10 * k * k * k)?;
    let coeffs = cubic_coefficients(&s.params);
    close("Re B", b.re, coeffs.b, 1e-12 * k)?;
    close("Re C", c.re, coeffs.c, 1e-11 * k * k)?;
    close("Re D", d.re, coeffs.d, 1e-10 * k * k * k)?;
    let triple = spectrum(&s.params).map_err(|e| e.to_string())?;
    if !closed_under_conjugation(&triple.eigenvalues, 1e-12 * k) {
        return Err(format!("not conjugation closed: {:?}", triple.eigenvalues));
    }
    Ok(())
}

pub fn check_vieta(s: &Sample) -> Check {
    let coeffs = cubic_coefficients(&s.params);
    let x = spectrum(&s.params)
        .map_err(|e| e.to_string())?
        .eigenvalues
        .map(|z| z - s.params.omega_c);
    let k = coeffs.root_scale();
    let sum = x[0] + x[1] + x[2];
    let pairs = x[0] * x[1] + x[1] * x[2] + x[0] * x[2];
    let prod = x[0] * x[1] * x[2];
    let rel = 1e-9;
    close("sum", sum.re, -coeffs.b, rel * coeffs.b.abs().max(k))?;
    close("pairs", pairs.re, coeffs.c, rel * coeffs.c.abs().max(k * k))?;
    close("product", prod.re, -coeffs.d, rel * coeffs.d.abs().max(k * k * k))?;
    close("Im sum", sum.im, 0.0, rel * k)?;
    close("Im pairs", pairs.im, 0.0, rel * k * k)?;
    close("Im product", prod.im, 0.0, rel * k * k * k)
}

pub fn check_coefficient_forms(s: &Sample) -> Check {
    let direct = cubic_coefficients(&s.params);
    let ratio: CubicCoeffs = cubic_coefficients_ratio(&s.spec).map_err(|e| e.to_string())?;
    let k = scale(s);
    close("B", ratio.b, direct.b, 1e-12 * direct.b.abs().max(k))?;
    close("C", ratio.c, direct.c, 1e-12 * direct.c.abs().max(k * k))?;
    close("D", ratio.d, direct.d, 1e-12 * direct.d.abs().max(k * k * k))
}

pub fn check_ep3_identity(s: &Sample) -> Check {
    let (p, q, k2) = (s.spec.p, s.spec.q, s.spec.kappa_2);
    let g = g_ep3_analytic(p, q, k2).map_err(|e| e.to_string())?.g_ep3;
    let z = zeta(p, q).map_err(|e| e.to_string())?;
    let g_min = g2_min(p, q, k2).map_err(|e| e.to_string())?;
    let want = 2.0 * g_min / (1.0 + 3.0 * z).sqrt();
    close("g_EP3", g, want, 1e-13 * want)
}

pub fn check_branch_mirror(s: &Sample) -> Check {
    let flipped = derive_params(&s.spec.with_branch(s.spec.branch.flipped()), s.mirrors).map_err(|e| e.to_string())?;
    let wc = s.params.omega_c;
    let original = spectrum(&s.params).map_err(|e| e.to_string())?.eigenvalues;
    let mirrored = spectrum(&flipped)
        .map_err(|e| e.to_string())?
        .eigenvalues
        .map(|z| Complex64::new(2.0 * wc, 0.0) - z.conj());
    let d = match_distance(&original, &mirrored);
    close("mirror distance", d, 0.0, 1e-9 * scale(s))
}

/// Cubic roots against a general complex Schur decomposition of the
/// matrix, at a tolerance relative to `kappa_2`.
pub fn check_direct_solver(s: &Sample, rtol: f64) -> Check {
    let cubic = spectrum(&s.params).map_err(|e| e.to_string())?.eigenvalues;
    let direct = eigenvalues_direct(&s.params).map_err(|e| e.to_string())?.eigenvalues;
    close(
        "solver distance",
        match_distance(&cubic, &direct),
        0.0,
        rtol * s.params.kappa_2,
    )
}
