use imagemem::config::ExperimentConfig;
use imagemem::pgm;
use imagemem::scenario::{self, Overrides, Scenario, Setup};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn sidecar(path: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn decay_outputs_match_their_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        seed: Some(3),
        frames: Some(4),
    };
    let report = scenario::run(Scenario::Decay, &config_path(), dir.path(), overrides).unwrap();

    let cfg = ExperimentConfig::load(config_path()).unwrap();
    let setup = Setup::new(&cfg, config_path().parent().unwrap()).unwrap();

    let mut sixteen = 0;
    for entry in &report.files {
        let path = dir.path().join(&entry.path);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), entry.hash, "{}", entry.path);
        assert_eq!(entry.scenario, "decay");

        if entry.role == "mask" {
            let i = if entry.path.contains("probe1") { 0 } else { 1 };
            assert_eq!(bytes, pgm::encode_gray8(&setup.masks[i]));
        } else if entry.path.ends_with(".pgm") {
            let img = pgm::decode(&bytes).unwrap();
            assert_eq!(img.maxval, 65535);
            let meta = sidecar(&path.with_extension("pgm.txt"));
            assert_eq!(meta["width"], img.width.to_string());
            assert_eq!(meta["height"], img.height.to_string());
            assert!(meta["counts_per_level"].parse::<f64>().unwrap() >= 1.0);
            sixteen += 1;
        } else if entry.path.ends_with(".csv") {
            let text = String::from_utf8(bytes).unwrap();
            let mut lines = text.lines();
            let header: Vec<&str> = lines.next().unwrap().split(',').collect();
            for row in lines {
                assert_eq!(row.split(',').count(), header.len(), "{}: {row}", entry.path);
            }
        }
    }
    assert_eq!(sixteen, cfg.scenario.storage_sweep.len());
}
