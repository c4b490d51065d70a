//! Library-level sweep behaviour: determinism, CSV round trips, trend
//! sanity and the bundled-fixture regression bounds.

use std::path::{Path, PathBuf};

use spikebench_core::coding::CodingScheme;
use spikebench_core::network::batch_evaluate;
use spikebench_core::noise::NoiseConfig;
use spikebench_core::snnx::{self, ModelFile};
use spikebench_harness::{
    generate_toy_model, load_idx, read_csv, rows_to_csv, run_sweep, ExperimentConfig, ScaleMode,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn sweep_config(out: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        model: fixture("toy-mlp.snnx"),
        dataset: fixture("digits-1k"),
        out,
        coding: Some(CodingScheme::Rate),
        timesteps: Some(100),
        theta: None,
        phase_period: None,
        burst_cap: None,
        tau: None,
        burst_duration: None,
        theta_decay: None,
        staged_windows: None,
        deletion_ps: vec![],
        jitter_sigmas: vec![],
        trials: Some(1),
        seed: 0,
        weight_scale: ScaleMode::Off,
        samples: Some(50),
    }
}

#[test]
fn single_clean_point_matches_batch_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(dir.path().join("out.csv"));
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].p, rows[0].sigma), (0.0, 0.0));

    let snn = spikebench_harness::load_base_model(&cfg).unwrap();
    let data = load_idx(&cfg.dataset).unwrap().pairs(cfg.samples);
    let eval = batch_evaluate(&snn, &data, &NoiseConfig::clean(0), 1).unwrap();
    assert_eq!(rows[0].accuracy, eval.accuracy);
    assert_eq!(rows[0].mean_spikes, eval.mean_spikes);
}

#[test]
fn deletion_grid_accuracy_is_non_increasing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sweep_config(dir.path().join("out.csv"));
    cfg.deletion_ps = vec![0.8, 0.1, 0.5];
    cfg.trials = Some(4);
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    assert_eq!(ps, vec![0.1, 0.5, 0.8]);
    assert!(rows[0].accuracy >= rows[1].accuracy);
    assert!(rows[1].accuracy >= rows[2].accuracy);
    assert!(rows[0].mean_spikes > rows[2].mean_spikes);
}

#[test]
fn identical_config_yields_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sweep_config(dir.path().join("a.csv"));
    cfg.deletion_ps = vec![0.0, 0.4];
    cfg.jitter_sigmas = vec![0.0, 1.0];
    cfg.trials = Some(2);
    cfg.samples = Some(30);
    let a = rows_to_csv(&run_sweep(&cfg).unwrap());
    let b = rows_to_csv(&run_sweep(&cfg).unwrap());
    assert_eq!(a.into_bytes(), b.into_bytes());
}

#[test]
fn csv_file_round_trips_through_reader() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let mut cfg = sweep_config(out.clone());
    cfg.deletion_ps = vec![0.0, 0.5];
    cfg.trials = Some(2);
    cfg.samples = Some(20);
    let rows = run_sweep(&cfg).unwrap();
    spikebench_harness::write_csv(&out, &rows).unwrap();
    let back = read_csv(&out).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.p, b.p);
    }
}

#[test]
fn bundled_fixture_mlp_keeps_its_accuracy() {
    // regression bound measured at fixture creation
    let dnn = snnx::load(&fixture("toy-mlp.snnx")).unwrap().dnn().unwrap();
    let ds = load_idx(&fixture("digits-1k")).unwrap();
    let mut correct = 0usize;
    for (x, y) in ds.pairs(None) {
        if dnn.predict(&x).unwrap() == y {
            correct += 1;
        }
    }
    let acc = correct as f64 / ds.len() as f64;
    assert!(acc >= 0.90, "fixture DNN accuracy {acc}");
}

#[test]
fn toy_generation_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.snnx");
    let b = dir.path().join("b.snnx");
    for (path, seed) in [(&a, 42u64), (&b, 42u64)] {
        let model = generate_toy_model(&[30, 12, 5], seed).unwrap();
        snnx::save(path, &ModelFile::from_dnn(&model)).unwrap();
    }
    let blob = |p: &Path| std::fs::read(format!("{}.bin", p.display())).unwrap();
    assert_eq!(blob(&a), blob(&b));
}

#[test]
fn single_layer_model_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.snnx");
    let model = generate_toy_model(&[10, 4], 7).unwrap();
    snnx::save(&path, &ModelFile::from_dnn(&model)).unwrap();
    let loaded = snnx::load(&path).unwrap();
    assert_eq!(loaded.dnn().unwrap(), model);
    let manifest1 = std::fs::read(&path).unwrap();
    let blob1 = std::fs::read(dir.path().join("one.snnx.bin")).unwrap();
    snnx::save(&path, &loaded).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), manifest1);
    assert_eq!(std::fs::read(dir.path().join("one.snnx.bin")).unwrap(), blob1);
}
