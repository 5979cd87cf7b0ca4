use std::fs::File;

use stl_kernel::ssa::{resolve_model, sample_process};
use stl_kernel::trajectory::{load_batch, sample_mu0, write_batch_csv, write_csv, Mu0Config};
use stl_kernel::{ReactionNetwork, SsaConfig};

#[test]
fn directory_batches_load_in_file_name_order() {
    let dir = tempfile::tempdir().unwrap();
    let batch = sample_mu0(
        &Mu0Config {
            seed: 71,
            ..Mu0Config::default()
        },
        12,
    )
    .unwrap();
    for (i, xi) in batch.iter().enumerate() {
        write_csv(xi, File::create(dir.path().join(format!("traj_{i:05}.csv"))).unwrap()).unwrap();
    }
    std::fs::write(dir.path().join("trajectories.json"), "{}").unwrap();
    assert_eq!(load_batch(dir.path()).unwrap(), batch);
}

#[test]
fn single_file_batches_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("batch.csv");
    let batch = sample_mu0(
        &Mu0Config {
            seed: 72,
            h: 0.5,
            ..Mu0Config::default()
        },
        7,
    )
    .unwrap();
    write_batch_csv(&batch, File::create(&path).unwrap()).unwrap();
    assert_eq!(load_batch(&path).unwrap(), batch);
}

#[test]
fn empty_or_missing_sources_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_batch(dir.path()).is_err());
    assert!(load_batch(&dir.path().join("missing.csv")).is_err());
}

#[test]
fn networks_load_from_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    std::fs::write(&path, serde_json::to_string(&ReactionNetwork::isomerization()).unwrap()).unwrap();
    let spec = format!("file:{}", path.display());
    let net = resolve_model(&spec).unwrap();
    assert_eq!(net, ReactionNetwork::isomerization());
    let cfg = SsaConfig {
        seed: 73,
        ..SsaConfig::default()
    };
    assert_eq!(
        sample_process(&net, &cfg, 5, false).unwrap(),
        sample_process(&ReactionNetwork::isomerization(), &cfg, 5, false).unwrap()
    );
    std::fs::write(
        &path,
        r#"{"species": ["X"], "initial": [0], "reactions": [], "observed": "Y"}"#,
    )
    .unwrap();
    assert!(resolve_model(&spec).is_err());
}
