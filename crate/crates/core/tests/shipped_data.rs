//! The definition files under `data/` must stay in sync with the
//! built-in rules.

use std::path::Path;

use sadic_core::BlockSubstitution;

fn load(name: &str) -> BlockSubstitution {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    BlockSubstitution::from_json_file(path).unwrap()
}

#[test]
fn shipped_files_match_builtins() {
    assert_eq!(load("thue_morse.json"), BlockSubstitution::thue_morse());
    assert_eq!(
        load("period_doubling.json"),
        BlockSubstitution::period_doubling()
    );
    assert_eq!(load("block_4x3.json"), BlockSubstitution::block_4x3());
}

#[test]
fn shipped_files_are_valid_and_nonsingular() {
    for name in ["thue_morse.json", "period_doubling.json", "block_4x3.json"] {
        let sub = load(name);
        assert!(sub.validate().is_valid(), "{name}");
        assert!(sadic_core::nonsingular_somewhere(&sub, 1), "{name}");
    }
}
