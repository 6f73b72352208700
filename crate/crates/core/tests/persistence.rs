use std::fs;

use perceptron_core::analytic::{gap_curve, CurveTable, ModelParams};
use perceptron_core::harness::{self, ExperimentConfig, ExperimentKind, Manifest, MANIFEST_FILE};
use perceptron_core::sampler::{sample_planted_instance, sample_random_instance};
use perceptron_core::solver::solve;
use perceptron_core::{Instance, SolutionSet, SpinConfig};

#[test]
fn instances_round_trip_through_both_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let sigma = SpinConfig::new(9, 0b1_0110_1001).unwrap();
    for inst in [
        sample_random_instance(9, 7, 0.8, 5).unwrap(),
        sample_planted_instance(9, 7, 0.8, sigma, 5).unwrap(),
    ] {
        let path = tmp.path().join("inst.bin");
        inst.save(&path).unwrap();
        let back = Instance::load(&path).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.digest(), inst.digest());
        let json = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(json, inst);
        assert_eq!(solve(&back).unwrap(), solve(&inst).unwrap());
    }
}

#[test]
fn corrupted_instance_is_rejected() {
    let inst = sample_random_instance(6, 3, 1.0, 1).unwrap();
    let mut bytes = inst.to_bytes();
    bytes[0] ^= 0xff;
    assert!(Instance::from_bytes(&bytes).is_err());
    let bytes = inst.to_bytes();
    assert!(Instance::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn solution_sets_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let s = solve(&sample_random_instance(12, 8, 1.0, 3).unwrap()).unwrap();
    let path = tmp.path().join("s.txt");
    s.save(&path).unwrap();
    assert_eq!(SolutionSet::load(&path).unwrap(), s);
}

#[test]
fn curve_tables_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let table = gap_curve(ModelParams::new(1.0, 1.75).unwrap(), 500).unwrap();
    let [_, json] = table.write(tmp.path(), "g").unwrap();
    let back = CurveTable::read(&json).unwrap();
    assert_eq!(back, table);
}

#[test]
fn experiment_outputs_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(
        r#"{"n": 10, "alpha": 1.2, "trials": 120, "fresh_constraints": 1200, "seed": 31}"#,
    )
    .unwrap();
    let a = harness::run(ExperimentKind::ProcessDiagnostics, cfg.clone(), &tmp.path().join("a")).unwrap();
    let b = harness::run(ExperimentKind::ProcessDiagnostics, cfg, &tmp.path().join("b")).unwrap();
    assert_eq!(a, b);
    for f in &a.files {
        let x = fs::read(tmp.path().join("a").join(&f.name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(&f.name)).unwrap();
        assert_eq!(x, y, "{}", f.name);
    }
    let text = fs::read_to_string(tmp.path().join("a").join(MANIFEST_FILE)).unwrap();
    let m: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(m, a);
    assert!(m.files.iter().any(|f| f.name == "process_n10_alpha1p2_traces.csv"));
}
