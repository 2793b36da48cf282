use proptest::prelude::*;
use reliance::config::{Profile, RunConfig};

fn base() -> RunConfig {
    RunConfig::from_json(r#"{"profile": "desk"}"#).unwrap()
}

proptest! {
    #[test]
    fn digest_tracks_meaningful_fields(seed in any::<u64>(), dim in 1usize..400, folds in 2usize..10, trees in 1usize..300) {
        let a = base();
        let mut b = a.clone();
        b.seed = seed;
        b.sync_seeds();
        b.doc2vec.dim = dim;
        b.stack.folds = folds;
        b.models.forest.n_trees = trees;
        let same = b.seed == a.seed && dim == a.doc2vec.dim && folds == a.stack.folds && trees == a.models.forest.n_trees;
        prop_assert_eq!(a.digest().unwrap() == b.digest().unwrap(), same);
    }

    #[test]
    fn digest_ignores_output_dir_and_threads(dir in "[a-z]{1,12}", threads in 0usize..16) {
        let a = base();
        let mut b = a.clone();
        b.output_dir = dir.into();
        b.threads = threads;
        prop_assert_eq!(a.digest().unwrap(), b.digest().unwrap());
    }
}

#[test]
fn json_round_trip_and_profiles() {
    let desk = base();
    assert_eq!(desk.profile, Profile::Desk);
    assert_eq!((desk.doc2vec.dim, desk.doc2vec.epochs, desk.subsample), (100, 20, Some(0.2)));
    let again = RunConfig::from_json(&desk.to_json().unwrap()).unwrap();
    assert_eq!(again, desk);
    assert_eq!(again.digest().unwrap(), desk.digest().unwrap());

    let full = RunConfig::from_json(r#"{"profile": "full"}"#).unwrap();
    assert_eq!((full.doc2vec.dim, full.doc2vec.epochs, full.split.train_fraction), (1200, 50, 0.8));
    assert!(full.validate().is_ok());

    let missing = RunConfig::from_json(r#"{"dataset": {"kind": "csv", "path": "/no/such/train.csv"}}"#).unwrap();
    let msg = missing.validate().unwrap_err().to_string();
    assert!(msg.contains("/no/such/train.csv"), "{msg}");
}
