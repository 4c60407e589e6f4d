//! Built-in seed genomes and loading of genome sources.

use std::path::Path;

use crate::config::SimConfig;
use crate::error::GenomeError;
use crate::genome::asm::{assemble, AsmOptions};
use crate::genome::{decode_expansion, text, ExpansionPayload, Genome};

/// `(name, assembler source)` of every built-in genome.
pub const BUILTINS: &[(&str, &str)] = &[
    ("tetrahedron", include_str!("../genomes/tetrahedron.asm")),
    ("fecund", include_str!("../genomes/fecund.asm")),
    ("sharing", include_str!("../genomes/sharing.asm")),
    ("dumbbell", include_str!("../genomes/dumbbell.asm")),
];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn asm_options(config: &SimConfig) -> AsmOptions {
    AsmOptions {
        layout: config.layout(),
        advance_width: config.genome.advance_width,
    }
}

/// A seed genome with the phenotype of its first cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedGenome {
    pub genome: Genome,
    pub phenotype: ExpansionPayload,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Genome(String, GenomeError),
}

/// Assembles assembler source with the configuration's layout.
pub fn from_asm(src: &str, config: &SimConfig) -> Result<SeedGenome, GenomeError> {
    let a = assemble(src, &asm_options(config))?;
    Ok(SeedGenome {
        genome: a.genome,
        phenotype: a.seed,
    })
}

/// Parses genome text; the phenotype is decoded from the start of the Book.
pub fn from_text(src: &str, config: &SimConfig) -> Result<SeedGenome, GenomeError> {
    let genome = text::parse(src)?;
    let (phenotype, _) = decode_expansion(&genome.book, 0, &config.layout())?;
    Ok(SeedGenome { genome, phenotype })
}

/// Resolves a built-in name, an assembler file (`.asm`) or a genome text file.
pub fn load(spec: &str, config: &SimConfig) -> Result<SeedGenome, LoadError> {
    if let Some(src) = builtin_source(spec) {
        return from_asm(src, config).map_err(|e| LoadError::Genome(spec.into(), e));
    }
    let path = Path::new(spec);
    let src = std::fs::read_to_string(path).map_err(|e| LoadError::Io(spec.into(), e))?;
    let result = if path.extension().is_some_and(|e| e == "asm") {
        from_asm(&src, config)
    } else {
        from_text(&src, config)
    };
    result.map_err(|e| LoadError::Genome(spec.into(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_assembles() {
        let cfg = SimConfig::default();
        for (name, _) in BUILTINS {
            let g = load(name, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(g.genome.validate().is_ok());
            assert!(g.genome.book.len() < cfg.genome.max_book, "{name}: {}", g.genome.book.len());
        }
    }

    #[test]
    fn text_round_trip_keeps_phenotype() {
        let cfg = SimConfig::default();
        let g = load("fecund", &cfg).unwrap();
        let back = from_text(&text::format(&g.genome), &cfg).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load("/nonexistent/g.asm", &SimConfig::default()), Err(LoadError::Io(..))));
    }
}
