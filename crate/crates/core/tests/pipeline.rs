use std::f64::consts::PI;

use macroreal::exclusion::{exclude_esmr, exclude_esmr_with, EsmrOptions, WitnessCase};
use macroreal::lgi::{lgi_scan, LgiModel};
use macroreal::ontomodel::asymmetric_overlap;
use macroreal::zoo::{kochen_specker_model, qubit_fragment, SphereGrid};
use macroreal::{classify, validate, Bindings, FiniteOntModel, LpStatus, MacroRealism, QuantumFragment, Target};

#[test]
fn ks_model_survives_json_and_keeps_its_class() {
    let fragment = qubit_fragment();
    let grid = SphereGrid::fibonacci(2000).unwrap();
    let model = kochen_specker_model(&grid, &fragment).unwrap();

    let model: FiniteOntModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    let fragment: QuantumFragment = serde_json::from_str(&serde_json::to_string(&fragment).unwrap()).unwrap();
    let bindings = Bindings::by_name(&model, &fragment);

    assert!(validate(&model, &fragment, &bindings, 1e-2).unwrap().pass);
    assert_eq!(classify(&model, &fragment, &bindings).unwrap().class, MacroRealism::Esmr);
}

#[test]
fn ks_overlap_tracks_born_probability() {
    let fragment = qubit_fragment();
    let grid = SphereGrid::fibonacci(20_000).unwrap();
    let model = kochen_specker_model(&grid, &fragment).unwrap();
    let bindings = Bindings::by_name(&model, &fragment);
    // s1 and q0 are π/3 apart on the Bloch sphere.
    let r = asymmetric_overlap(&model, &bindings, "s1", &[Target::State("q0".into())]).unwrap();
    let born = (PI / 6.0).cos().powi(2);
    assert!((r.value - born).abs() < 2e-3, "{} vs {born}", r.value);
}

#[test]
fn exclusion_verdict_needs_both_premises() {
    let case = WitnessCase::build(0.45, 4).unwrap();
    assert_eq!(exclude_esmr(&case).unwrap().report.status, LpStatus::Infeasible);
    let loose = exclude_esmr_with(&case, EsmrOptions { support: true, transformation: false }).unwrap();
    assert_ne!(loose.report.status, LpStatus::Infeasible);
}

#[test]
fn quantum_lgi_peaks_at_a_third_of_pi() {
    let thetas: Vec<f64> = (1..60).map(|k| PI * k as f64 / 60.0).collect();
    let rows = lgi_scan(&thetas, LgiModel::Quantum).unwrap();
    let best = rows.iter().max_by(|a, b| a.k.total_cmp(&b.k)).unwrap();
    assert!((best.theta - PI / 3.0).abs() < 1e-9);
    assert!((best.k - 1.5).abs() < 1e-12);
}
