use std::path::Path;

use ddibench::config::RunConfig;
use ddibench::llm::TransportKind;

#[test]
fn shipped_example_config_is_valid() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../ddibench.example.toml");
    let (cfg, _) = RunConfig::load(&path).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.seed, Some(20240917));
    assert_eq!(cfg.c_grid().len(), 33);
    assert_eq!(cfg.pairs.external.len(), 2);
    assert!(cfg.catalog.path.is_absolute());
    assert_eq!(cfg.endpoints.len(), 3);
    assert_eq!(cfg.endpoints["hosted"].retry.max_attempts, 5);
    match &cfg.endpoints["recorded"].transport {
        TransportKind::Replay { path: Some(p) } => assert!(p.ends_with("fixtures/llama.replay.jsonl") && p.is_absolute()),
        other => panic!("unexpected transport {other:?}"),
    }
}
