use reliance::bundle::{split_bundle, ModelBundle, MAGIC};
use reliance::config::RunConfig;
use reliance::eval::run_experiment;
use reliance::Error;

fn tiny() -> RunConfig {
    RunConfig::from_json(include_str!("data/tiny.json")).unwrap()
}

fn trained() -> ModelBundle {
    let config = tiny();
    let exp = run_experiment(&config).unwrap();
    ModelBundle { config, pipeline: exp.pipeline }
}

#[test]
fn round_trip_is_byte_identical_and_predicts_identically() {
    let (bundle, test) = {
        let config = tiny();
        let exp = run_experiment(&config).unwrap();
        (ModelBundle { config, pipeline: exp.pipeline }, exp.test)
    };
    let bytes = bundle.to_bytes("t0").unwrap();
    let back = ModelBundle::from_bytes(&bytes).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(back.to_bytes("t0").unwrap(), bytes);

    let (manifest, _) = split_bundle(&bytes).unwrap();
    assert_eq!(manifest.column_order, ["bilstm", "logreg", "svm", "random_forest", "naive_bayes"]);
    assert_eq!(manifest.components.len(), 8);
    assert_eq!(manifest.config_digest, bundle.config.digest().unwrap());

    for doc in test.iter().take(5) {
        let a = bundle.pipeline.predict(doc).unwrap();
        let b = back.pipeline.predict(doc).unwrap();
        assert_eq!(a.probability.to_bits(), b.probability.to_bits());
        assert_eq!(a.base_scores.map(f64::to_bits), b.base_scores.map(f64::to_bits));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rlnc");
    bundle.save(&path, "t0").unwrap();
    assert_eq!(ModelBundle::load(&path).unwrap(), bundle);
}

#[test]
fn corruption_is_detected() {
    let bytes = trained().to_bytes("t0").unwrap();
    let (manifest, blobs) = split_bundle(&bytes).unwrap();
    let header = bytes.len() - blobs.len();
    for c in &manifest.components {
        let mut bad = bytes.clone();
        bad[header + c.offset as usize + c.length as usize / 2] ^= 0x01;
        match ModelBundle::from_bytes(&bad) {
            Err(Error::Checksum(name)) => assert_eq!(name, c.name),
            other => panic!("{}: {other:?}", c.name),
        }
    }

    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    assert!(matches!(ModelBundle::from_bytes(&bad), Err(Error::Bundle(_))));
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(ModelBundle::from_bytes(&bad), Err(Error::Bundle(_))));
    assert!(ModelBundle::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(ModelBundle::from_bytes(MAGIC).is_err());
    assert!(matches!(ModelBundle::load(std::path::Path::new("/nonexistent/m.rlnc")), Err(Error::Io { .. })));
}

#[test]
fn training_is_deterministic() {
    let a = trained().to_bytes("x").unwrap();
    let b = trained().to_bytes("y").unwrap();
    let (ma, blobs_a) = split_bundle(&a).unwrap();
    let (mb, blobs_b) = split_bundle(&b).unwrap();
    assert_eq!(blobs_a, blobs_b);
    assert_eq!(ma.components, mb.components);
}
