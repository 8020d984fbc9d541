use epcavity::dynamics::{
    estimate_eigenfrequencies, integrate_driven, integrate_effective, DrivenOptions, StateVector,
};
use epcavity::response::{cpa_frequencies, intracavity_field, spectrum_sweep, DriveConfig, ProbeGrid};
use epcavity::spectral::{align_to, locate_eps_with, spectrum, sweep_eigenvalues, LocatorOptions};
use epcavity::{Execution, PhysicalParams};
use num_complex::Complex64;

use crate::config::{Coupling, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub const EIG_COLUMNS: &[&str] = &["g2", "re1", "im1", "re2", "im2", "re3", "im3", "phase"];
pub const SPECTRUM_COLUMNS: &[&str] = &[
    "omega_minus_omega_c",
    "sigma_re",
    "sigma_im",
    "s_re",
    "s_im",
    "total_output",
    "transmission",
    "absorption",
];
pub const EP_COLUMNS: &[&str] = &["g2_star", "order", "a_resid", "b_resid"];
pub const CPA_COLUMNS: &[&str] = &["omega_cpa"];
pub const DYNAMICS_COLUMNS: &[&str] = &["case_id", "freq_domain_value", "time_domain_value", "rel_err"];

/// Output tables, each with the suffix appended to the file stem.
pub fn execute(config: &RunConfig) -> Result<Vec<(String, Table)>, CliError> {
    match &config.coupling {
        Coupling::Range { lo, hi, points } => {
            let range = (*lo, *hi);
            let table = match config.mode {
                Mode::EigSweep => eig_sweep(config, range, *points)?,
                Mode::EpLocate => ep_locate(config, range, *points)?,
                _ => unreachable!("validated: range modes only"),
            };
            Ok(vec![(String::new(), table)])
        }
        Coupling::Values(values) => {
            let mut out = Vec::with_capacity(values.len());
            for (i, &g) in values.iter().enumerate() {
                let params = config.params_at(g)?;
                let table = match config.mode {
                    Mode::Spectrum => response(config, &params)?,
                    Mode::Cpa => cpa(&params)?,
                    Mode::DynamicsCheck => dynamics_check(config, &params)?,
                    _ => unreachable!("validated: value modes only"),
                };
                let suffix = if values.len() == 1 {
                    String::new()
                } else {
                    format!("_g2-{}", i + 1)
                };
                out.push((suffix, table));
            }
            Ok(out)
        }
    }
}

fn eig_sweep(config: &RunConfig, range: (f64, f64), points: usize) -> Result<Table, CliError> {
    let rows = sweep_eigenvalues(&config.template(), range, points)?;
    let mut table = Table::new(EIG_COLUMNS);
    for row in rows {
        let mut cells = vec![Cell::Num(row.g2)];
        match row.eigenvalues {
            Some(e) => {
                for z in e {
                    cells.push(Cell::Num(z.re));
                    cells.push(Cell::Num(z.im));
                }
            }
            None => cells.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 6)),
        }
        let phase = match (row.feasible(), row.phase) {
            (false, _) => "infeasible",
            (true, Some(p)) => p.as_str(),
            (true, None) => "unclassified",
        };
        cells.push(Cell::Text(phase.into()));
        table.push(cells);
    }
    Ok(table)
}

fn ep_locate(config: &RunConfig, range: (f64, f64), points: usize) -> Result<Table, CliError> {
    let options = LocatorOptions {
        grid_points: points,
        ep3_tol: config.ep3_tol,
    };
    let scan = locate_eps_with(&config.template(), range, options, Execution::default())?;
    let mut table = Table::new(EP_COLUMNS);
    for r in scan.records {
        table.push(vec![
            Cell::Num(r.g2_star),
            Cell::Int(r.order as i64),
            Cell::Num(r.residuals.a),
            Cell::Num(r.residuals.b),
        ]);
    }
    Ok(table)
}

fn drive(config: &RunConfig, params: &PhysicalParams) -> Result<DriveConfig, CliError> {
    let p1 = Complex64::new(config.p_in_1, 0.0);
    Ok(match config.p_in_2 {
        Some(p2) => DriveConfig::new(p1, Complex64::new(p2, 0.0)),
        None => DriveConfig::cpa_ratio(p1, params)?,
    })
}

fn response(config: &RunConfig, params: &PhysicalParams) -> Result<Table, CliError> {
    let grid = ProbeGrid::new(config.omega_range.0, config.omega_range.1, config.n_points);
    let points = spectrum_sweep(params, grid, &drive(config, params)?)?;
    let mut table = Table::new(SPECTRUM_COLUMNS);
    for (dw, p) in grid.offsets().into_iter().zip(points) {
        table.push(vec![
            Cell::Num(dw),
            Cell::Num(p.sigma.re),
            Cell::Num(p.sigma.im),
            Cell::Num(p.s.re),
            Cell::Num(p.s.im),
            Cell::Num(p.total_output),
            Cell::Num(p.transmission),
            Cell::Num(p.absorption),
        ]);
    }
    Ok(table)
}

fn cpa(params: &PhysicalParams) -> Result<Table, CliError> {
    let mut table = Table::new(CPA_COLUMNS);
    for w in cpa_frequencies(params)? {
        table.push(vec![Cell::Num(w)]);
    }
    Ok(table)
}

/// Spectral separation, relative to `kappa_2`, below which eigenfrequency
/// extraction is skipped as too close to an exceptional point.
const EP_GAP: f64 = 1e-3;

/// Time-domain checks of the frequency-domain results.
///
/// `steady_<k>` rows compare `|a|` at evenly spaced probe offsets, with the
/// complex relative error. `eig_<k>_re` / `eig_<k>_im` rows compare the
/// eigenfrequencies extracted from the effective dynamics against the
/// cubic, with the error measured in units of `kappa_2`; they are omitted
/// when two eigenvalues are closer than `1e-3·kappa_2`.
fn dynamics_check(config: &RunConfig, params: &PhysicalParams) -> Result<Table, CliError> {
    let drive = drive(config, params)?;
    let (lo, hi) = config.omega_range;
    let n = config.steady_cases;
    let offsets: Vec<f64> = if n == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let results = Execution::default().map(&offsets, |&dw| {
        let w = params.omega_c + dw;
        let freq = intracavity_field(w, params, &drive)?;
        let time = integrate_driven(params, &drive, w, DrivenOptions::default())?.state.a;
        Ok::<_, epcavity::Error>((freq, time))
    });

    let mut table = Table::new(DYNAMICS_COLUMNS);
    for (k, result) in results.into_iter().enumerate() {
        let (freq, time) = result?;
        let err = if freq.norm() > 0.0 {
            (time - freq).norm() / freq.norm()
        } else {
            time.norm()
        };
        table.push(vec![
            Cell::Text(format!("steady_{}", k + 1)),
            Cell::Num(freq.norm()),
            Cell::Num(time.norm()),
            Cell::Num(err),
        ]);
    }

    let mut reference = spectrum(params)?.sorted();
    let gap = [(0, 1), (1, 2), (0, 2)]
        .iter()
        .map(|&(i, j)| (reference[i] - reference[j]).norm())
        .fold(f64::INFINITY, f64::min);
    if gap >= EP_GAP * params.kappa_2 {
        let dt = 0.01 / params.frequency_scale();
        let start = StateVector::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.4, 0.2),
            Complex64::new(-0.3, 0.5),
        );
        let run = integrate_effective(params, start, dt, 2000, 10)?;
        let extracted = align_to(&reference, &estimate_eigenfrequencies(&run.trajectory)?);
        for (k, (f, t)) in reference.iter_mut().zip(extracted).enumerate() {
            for (part, fv, tv) in [("re", f.re, t.re), ("im", f.im, t.im)] {
                table.push(vec![
                    Cell::Text(format!("eig_{}_{part}", k + 1)),
                    Cell::Num(fv),
                    Cell::Num(tv),
                    Cell::Num((tv - fv).abs() / params.kappa_2),
                ]);
            }
        }
    }
    Ok(table)
}
