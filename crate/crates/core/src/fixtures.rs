//! Compiler specs shipped with the crate, used by tests, benches and the demo zoo.

use std::path::PathBuf;

use crate::paramspace::CompilerSpec;

/// Master seed of the shipped synthetic compilers.
pub const MASTER_SEED: u64 = 20_240_917;

const SOURCES: &[(&str, &str)] = &[
    ("sram_a", include_str!("../fixtures/compilers/sram_a.toml")),
    ("sram_b", include_str!("../fixtures/compilers/sram_b.toml")),
    ("sram_c", include_str!("../fixtures/compilers/sram_c.toml")),
    ("sram_d", include_str!("../fixtures/compilers/sram_d.toml")),
    ("sram_small", include_str!("../fixtures/specs/sram_small.toml")),
    ("sram_easy", include_str!("../fixtures/specs/sram_easy.toml")),
];

/// A shipped spec by compiler id. Panics on unknown ids.
pub fn spec(id: &str) -> CompilerSpec {
    let (_, src) = SOURCES
        .iter()
        .find(|(k, _)| *k == id)
        .unwrap_or_else(|| panic!("no fixture spec {id}"));
    CompilerSpec::from_toml_str(src).expect("fixture specs are valid")
}

/// The four single-port library compilers.
pub fn library() -> Vec<CompilerSpec> {
    ["sram_a", "sram_b", "sram_c", "sram_d"].into_iter().map(spec).collect()
}

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
