mod common;

use common::*;
use epcavity::response::{
    absorption, cpa_frequencies, cpa_residual, find_peaks, port_outputs, s_parameter, spectrum_sweep_with,
    total_output, transmission, DriveConfig, ProbeGrid,
};
use epcavity::spectral::spectrum;
use epcavity::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cpa_frequencies_are_real_eigenvalues(s in sample_strategy()) {
        let mut real = spectrum(&s.params).unwrap().real_eigenvalues();
        real.sort_by(f64::total_cmp);
        let cpa = cpa_frequencies(&s.params).unwrap();
        prop_assert_eq!(real.len(), cpa.len(), "{:?} vs {:?}", real, cpa);
        for (x, y) in real.iter().zip(&cpa) {
            prop_assert!((x - y).abs() < 1e-8 * s.params.kappa_2);
        }
    }

    #[test]
    fn both_ports_silent_at_cpa(s in sample_strategy()) {
        let drive = DriveConfig::cpa_ratio(Complex64::new(0.6, -0.8), &s.params).unwrap();
        for w in cpa_frequencies(&s.params).unwrap() {
            let (o1, o2) = port_outputs(w, &s.params, &drive).unwrap();
            prop_assert!(o1.norm() < 1e-7 && o2.norm() < 1e-7);
            prop_assert!(cpa_residual(w, &s.params).unwrap().norm() < 1e-9 * s.params.kappa_2);
        }
    }

    #[test]
    fn output_consistent_with_s(s in sample_strategy(), offset in -3.0f64..3.0) {
        let w = s.params.omega_c + offset * s.params.frequency_scale();
        let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &s.params).unwrap();
        let (o1, o2) = port_outputs(w, &s.params, &drive).unwrap();
        let sv = s_parameter(w, &s.params).unwrap();
        // Under the CPA ratio each port output is S times its input.
        prop_assert!((o1 - sv * drive.p_in_1).norm() < 1e-9 * (1.0 + o1.norm()));
        prop_assert!((o2 - sv * drive.p_in_2).norm() < 1e-9 * (1.0 + o2.norm()));
        let out = total_output(w, &s.params).unwrap();
        let a = absorption(w, &s.params, &drive).unwrap();
        prop_assert!((1.0 - a - out / 2.0).abs() < 1e-9 * (1.0 + out));
    }
}

#[test]
fn sweep_policies_agree() {
    let params = symmetric(5.0);
    let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &params).unwrap();
    let grid = ProbeGrid::default_for(params.kappa_2);
    let seq = spectrum_sweep_with(&params, grid, &drive, Execution::Sequential).unwrap();
    let par = spectrum_sweep_with(&params, grid, &drive, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn transmission_vanishes_at_cpa_and_tends_to_half() {
    let params = symmetric(5.0);
    let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &params).unwrap();
    for w in cpa_frequencies(&params).unwrap() {
        assert!(transmission(w, &params, &drive).unwrap() < 1e-20);
    }
    assert!((transmission(1e6, &params, &drive).unwrap() - 0.5).abs() < 1e-4);
}

#[test]
fn absorption_peaks_sit_at_cpa_frequencies() {
    let params = symmetric(5.0);
    let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &params).unwrap();
    let grid = ProbeGrid::new(-20.0, 20.0, 4001);
    let points = spectrum_sweep_with(&params, grid, &drive, Execution::default()).unwrap();
    let values: Vec<f64> = points.iter().map(|p| p.absorption).collect();
    let peaks: Vec<f64> = find_peaks(&values, 1e-4).iter().map(|&i| points[i].omega).collect();
    let cpa = cpa_frequencies(&params).unwrap();
    assert_eq!(peaks.len(), cpa.len());
    for (p, c) in peaks.iter().zip(&cpa) {
        assert!((p - c).abs() <= 0.01);
    }
}

#[test]
fn bad_probe_grid_rejected() {
    let params = symmetric(3.0);
    let drive = DriveConfig::cpa_ratio(Complex64::new(1.0, 0.0), &params).unwrap();
    assert!(spectrum_sweep_with(&params, ProbeGrid::new(1.0, -1.0, 10), &drive, Execution::Sequential).is_err());
    assert!(spectrum_sweep_with(&params, ProbeGrid::new(-1.0, 1.0, 1), &drive, Execution::Sequential).is_err());
}
