//! Simulate → analyse round trips against configured layouts.

use thaspec::analysis::{
    analyze_trace, build_reflectance_map, estimate_background_rate, estimate_resolution, label_peaks, PeakConfig,
};
use thaspec::simulator::{
    mzi_components, reference_calibration, reference_calibrations, simulate_scan, simulate_trace, AcquisitionConfig,
    FiberComponent, FiberLayout, SpadModel,
};
use thaspec::spectral::{Spectrum, SpectrumKind, Unit, WavelengthGrid};
use thaspec::trace::AcquisitionMode;

fn reference_layout() -> FiberLayout {
    let comps = vec![
        FiberComponent::reflector("a", 9.0, -50.0).unwrap(),
        FiberComponent::reflector("b", 11.0, -53.0).unwrap(),
    ];
    FiberLayout::standard(comps, 12.0).unwrap()
}

fn config(mode: AcquisitionMode, seed: u64) -> AcquisitionConfig {
    AcquisitionConfig {
        mode,
        seed,
        ..Default::default()
    }
}

fn check_recovery(mode: AcquisitionMode, tol_db: f64) {
    let spad = SpadModel::ingaas_default();
    let cfg = config(mode, 7);
    let trace = simulate_trace(&reference_layout(), &spad, &cfg, 1550.0).unwrap();
    let cal = reference_calibration(&spad, &cfg, 1550.0).unwrap();
    let mut wa = analyze_trace(&trace, &cal, &PeakConfig::default()).unwrap();
    label_peaks(&mut wa.peaks, &[("a".into(), 9.0), ("b".into(), 11.0)], 0.05);
    assert_eq!(wa.peaks.len(), 2, "{:?}", wa.peaks);
    for (p, (label, pos, r)) in wa.peaks.iter().zip([("a", 9.0, -50.0), ("b", 11.0, -53.0)]) {
        assert_eq!(p.label.as_deref(), Some(label));
        assert!((p.distance_m - pos).abs() <= 0.02, "{label}: {} m", p.distance_m);
        let got = p.reflectance_db.unwrap().db().unwrap();
        assert!((got - r).abs() <= tol_db, "{label}: {got} dB");
        assert!(p.isolated);
        assert!((0.015..=0.06).contains(&p.fwhm_m), "fwhm {}", p.fwhm_m);
    }
    let bg = estimate_background_rate(&trace, &wa.peaks, &cal).unwrap();
    assert!((bg - 1700.0).abs() <= 150.0, "background {bg}");
    assert!(wa.noise_floor_db.db().is_none_or(|f| f <= -78.0));
}

#[test]
fn analytic_trace_recovers_reflectors_exactly() {
    check_recovery(AcquisitionMode::Analytic, 0.05);
}

#[test]
fn monte_carlo_trace_recovers_reflectors() {
    check_recovery(AcquisitionMode::MonteCarlo, 1.0);
}

#[test]
fn resolution_is_centimetre_scale() {
    let spad = SpadModel::ingaas_default();
    let cfg = config(AcquisitionMode::Analytic, 0);
    let trace = simulate_trace(&reference_layout(), &spad, &cfg, 1550.0).unwrap();
    let fwhm = estimate_resolution(&trace, &PeakConfig::default()).unwrap();
    assert!((0.015..=0.06).contains(&fwhm), "{fwhm}");
}

#[test]
fn broadband_scan_recovers_spectral_reflector() {
    // reflectance rising 3 dB across the band
    let refl = Spectrum::from_points(&[(1100.0, -52.0), (1800.0, -49.0)], Unit::Db, SpectrumKind::Reflectance).unwrap();
    let il = Spectrum::constant(0.0, Unit::Db, SpectrumKind::Transmittance).unwrap();
    let comps = vec![FiberComponent::new("c", 6.0, refl.clone(), il).unwrap()];
    let layout = FiberLayout::standard(comps, 8.0).unwrap();
    let spad = SpadModel::ingaas_default();
    let cfg = config(AcquisitionMode::Analytic, 0);
    let grid = WavelengthGrid::uniform(1300.0, 1600.0, 100.0).unwrap();
    let scan = simulate_scan(&layout, &spad, &cfg, &grid).unwrap();
    let cals = reference_calibrations(&spad, &cfg, &grid).unwrap();
    let map = build_reflectance_map(&scan, &cals, &PeakConfig::default()).unwrap();
    for (wl, got) in map.worst_case.iter() {
        let want = refl.sample(wl).unwrap();
        assert!((got - want).abs() < 0.1, "{wl} nm: {got} vs {want}");
    }
    assert_eq!(map.heatmap.len(), 4);
    assert!(map.heatmap.iter().all(|row| row.len() == cfg.n_bins()));
}

#[test]
fn boundary_wavelengths_are_flagged_approximate() {
    let spad = SpadModel::ingaas_default();
    let cfg = config(AcquisitionMode::Analytic, 0);
    let grid = WavelengthGrid::new(vec![1100.0, 1550.0, 1800.0]).unwrap();
    let scan = simulate_scan(&reference_layout(), &spad, &cfg, &grid).unwrap();
    let cals = reference_calibrations(&spad, &cfg, &grid).unwrap();
    let map = build_reflectance_map(&scan, &cals, &PeakConfig::default()).unwrap();
    let flags: Vec<bool> = map.per_wavelength.iter().map(|w| w.approximate).collect();
    let expect: Vec<bool> = grid
        .points()
        .iter()
        .map(|&wl| spad.efficiency(wl).unwrap() < 0.01)
        .collect();
    assert_eq!(flags, expect);
    assert!(!flags[1]);
}

#[test]
fn mzi_arms_resolve_as_three_peaks() {
    let refl = Spectrum::constant(-45.0, Unit::Db, SpectrumKind::Reflectance).unwrap();
    let comps = mzi_components("mzi", 5.0, 0.4, &refl).unwrap();
    let layout = FiberLayout::standard(comps, 7.0).unwrap();
    let spad = SpadModel::ingaas_default();
    let cfg = config(AcquisitionMode::Analytic, 0);
    let trace = simulate_trace(&layout, &spad, &cfg, 1550.0).unwrap();
    let cal = reference_calibration(&spad, &cfg, 1550.0).unwrap();
    let wa = analyze_trace(&trace, &cal, &PeakConfig::default()).unwrap();
    let pos: Vec<f64> = wa.peaks.iter().map(|p| p.distance_m).collect();
    assert_eq!(pos.len(), 3, "{pos:?}");
    for (got, want) in pos.iter().zip([5.0, 5.2, 5.4]) {
        assert!((got - want).abs() < 0.02, "{pos:?}");
    }
    // weights 1/4, 1/2, 1/4 → middle arm 3 dB above the outer ones
    let r: Vec<f64> = wa
        .peaks
        .iter()
        .map(|p| p.reflectance_db.unwrap().db().unwrap())
        .collect();
    assert!(
        (r[1] - r[0] - 3.0103).abs() < 0.1 && (r[1] - r[2] - 3.0103).abs() < 0.2,
        "{r:?}"
    );
}
