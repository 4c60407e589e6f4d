//! Plain-text genome files:
//!
//! ```text
//! # comment
//! book: ABCDEFG...
//! marker: EF
//! advance: A
//! ```
//!
//! Keys may appear in any order; each exactly once. Blank lines and lines
//! starting with `#` are ignored.

use super::Genome;
use crate::error::GenomeError;

pub fn parse(text: &str) -> Result<Genome, GenomeError> {
    let mut book = None;
    let mut marker = None;
    let mut advance = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| GenomeError::Asm {
            line: n + 1,
            message: "expected `key: value`".into(),
        })?;
        let slot = match key.trim() {
            "book" => &mut book,
            "marker" => &mut marker,
            "advance" => &mut advance,
            other => {
                return Err(GenomeError::Asm {
                    line: n + 1,
                    message: format!("unknown key {other:?}"),
                })
            }
        };
        if slot.is_some() {
            return Err(GenomeError::Asm {
                line: n + 1,
                message: format!("duplicate key {:?}", key.trim()),
            });
        }
        *slot = Some(value.trim().as_bytes().to_vec());
    }
    let missing = |k: &str| GenomeError::Malformed(format!("missing `{k}:` line"));
    Genome::new(
        book.ok_or_else(|| missing("book"))?,
        marker.ok_or_else(|| missing("marker"))?,
        advance.ok_or_else(|| missing("advance"))?,
    )
}

pub fn format(genome: &Genome) -> String {
    format!(
        "book: {}\nmarker: {}\nadvance: {}\n",
        genome.book_str(),
        genome.bookmarker_str(),
        genome.advance_str()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Genome::new("ABCDEFG", "EF", "A").unwrap();
        assert_eq!(parse(&format(&g)).unwrap(), g);
    }

    #[test]
    fn comments_and_order() {
        let g = parse("# seed\nadvance: B\n\nmarker: EF\nbook: CDEFA\n").unwrap();
        assert_eq!(g.book, b"CDEFA");
        assert_eq!(g.advance, b"B");
    }

    #[test]
    fn errors() {
        assert!(parse("book: AB\nmarker: A\n").is_err());
        assert!(parse("book: AB\nbook: AB\nmarker: A\nadvance: A").is_err());
        assert!(parse("book: A*B\nmarker: A\nadvance: A").is_err());
        assert!(parse("bok: AB\nmarker: A\nadvance: A").is_err());
    }
}
