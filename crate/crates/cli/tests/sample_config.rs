use std::path::Path;

use viscoflow_cli::config::SimConfig;

fn sample_path() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../docs/sample.conf"
    ))
}

#[test]
fn sample_config_is_the_canonical_default() {
    let want = SimConfig::default().emit();
    if std::env::var_os("VISCOFLOW_BLESS").is_some() {
        std::fs::write(sample_path(), &want).unwrap();
    }
    let text = std::fs::read_to_string(sample_path()).unwrap();
    assert_eq!(
        text, want,
        "rerun with VISCOFLOW_BLESS=1 to refresh docs/sample.conf"
    );
    let parsed = SimConfig::parse(&text).unwrap();
    assert_eq!(parsed, SimConfig::default());
    assert_eq!(parsed.emit(), text);
}
