//! Fixtures shared by the benchmarks under `benches/`.

use std::path::PathBuf;

pub use mixsep_core as core;
use mixsep_core::{parse_document, Calculus, Document};

/// Loads a model from the workspace `models/` directory.
pub fn model(calc: Calculus, name: &str) -> Document {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name].iter().collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_document(calc, &text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        assert!(!model(Calculus::Pi, "le_pi.net").term.to_string().is_empty());
        model(Calculus::CmvPlus, "p_m.cmvp");
    }
}
