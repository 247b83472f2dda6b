use qelab::{ExperimentConfig, Kind, LabError};

#[test]
fn sigma_outside_unit_interval_names_the_field() {
    let err = ExperimentConfig::from_toml("kind = \"msa\"\n[schedule]\nsigma = 1.5\n").unwrap_err();
    assert!(matches!(&err, LabError::Config { field, .. } if field == "schedule.sigma"), "{err}");
    assert!(err.to_string().contains("schedule.sigma"));
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ExperimentConfig::from_toml("kind = \"wegner\"\n[wegner]\nkapa = [0.1]\n").is_err());
    assert!(ExperimentConfig::from_toml("kind = \"teleport\"\n").is_err());
}

#[test]
fn operator_errors_carry_the_block_prefix() {
    let err = ExperimentConfig::from_toml("kind = \"identities\"\n[operator]\neps = -1.0\n").unwrap_err();
    assert!(err.to_string().contains("operator.eps"), "{err}");
}

#[test]
fn toml_and_json_round_trip_losslessly() {
    for kind in [Kind::Identities, Kind::Wegner, Kind::Exclusion, Kind::Msa, Kind::Dynamics, Kind::Localization] {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.seeds = vec![3, u64::MAX];
        cfg.operator.eps = 0.1 + 0.2;
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn hash_ignores_the_output_directory_only() {
    let a = ExperimentConfig::new(Kind::Wegner);
    let mut b = a.clone();
    b.out = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.seeds = vec![9];
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn shipped_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n > 0);
}
