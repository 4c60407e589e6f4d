//! Book/Bookmarker/Advance genome interpreter.
//!
//! A cell's Book is read at the position immediately after the leftmost
//! occurrence of its Bookmarker. The symbol found there selects one of four
//! actions; the symbols that follow are (for EXPANSION) a fixed-width
//! description of the new cell, and then the encoded next Bookmarker, read
//! every other symbol starting at the offset given by the Advance value. The
//! symbols right after the last extracted Bookmarker symbol become the next
//! Advance. All reads wrap around the end of the Book.

mod payload;
pub mod asm;
pub mod text;

pub use payload::{encode_payload, ExpansionPayload, PayloadLayout};

use crate::alphabet;
use crate::error::GenomeError;

/// The four genome actions, 16 symbols each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Expansion,
    Connection,
    Disconnection,
    Transition,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [
        ActionKind::Expansion,
        ActionKind::Connection,
        ActionKind::Disconnection,
        ActionKind::Transition,
    ];

    /// Quadrant index `0..4`.
    pub fn ordinal(self) -> u8 {
        match self {
            ActionKind::Expansion => 0,
            ActionKind::Connection => 1,
            ActionKind::Disconnection => 2,
            ActionKind::Transition => 3,
        }
    }

    pub fn from_ordinal(v: u8) -> ActionKind {
        ActionKind::ALL[(v & 3) as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Expansion => "EXPANSION",
            ActionKind::Connection => "CONNECTION",
            ActionKind::Disconnection => "DISCONNECTION",
            ActionKind::Transition => "TRANSITION",
        }
    }

    /// The `i`-th symbol (`0..16`) that encodes this action.
    pub fn symbol(self, i: u8) -> u8 {
        alphabet::symbol(self.ordinal() * 16 + (i & 15))
    }
}

impl std::fmt::Display for ActionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A cell's heritable program: the Book, the current read marker and the
/// current Advance string. All three are byte strings over the alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Genome {
    pub book: Vec<u8>,
    pub bookmarker: Vec<u8>,
    pub advance: Vec<u8>,
}

impl Genome {
    pub fn new(
        book: impl Into<Vec<u8>>,
        bookmarker: impl Into<Vec<u8>>,
        advance: impl Into<Vec<u8>>,
    ) -> Result<Self, GenomeError> {
        let g = Genome {
            book: book.into(),
            bookmarker: bookmarker.into(),
            advance: advance.into(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        alphabet::validate(&self.book)?;
        alphabet::validate(&self.bookmarker)?;
        alphabet::validate(&self.advance)?;
        if self.advance.is_empty() {
            return Err(GenomeError::EmptyAdvance);
        }
        Ok(())
    }

    pub fn book_str(&self) -> &str {
        std::str::from_utf8(&self.book).unwrap_or("")
    }

    pub fn bookmarker_str(&self) -> &str {
        std::str::from_utf8(&self.bookmarker).unwrap_or("")
    }

    pub fn advance_str(&self) -> &str {
        std::str::from_utf8(&self.advance).unwrap_or("")
    }

    /// Replaces the read marker and advance with the successors from a read.
    pub fn apply(&mut self, outcome: &ReadOutcome) {
        self.bookmarker.clone_from(&outcome.next_bookmarker);
        self.advance.clone_from(&outcome.next_advance);
    }
}

/// Result of one read of a Book.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome {
    pub action: ActionKind,
    /// Book index of the action symbol.
    pub position: usize,
    pub payload: Option<ExpansionPayload>,
    pub next_bookmarker: Vec<u8>,
    pub next_advance: Vec<u8>,
}

pub fn classify_action(symbol: u8) -> Result<ActionKind, GenomeError> {
    let d = alphabet::digit(symbol)?;
    Ok(ActionKind::from_ordinal(d / 16))
}

/// Index of the symbol right after the leftmost occurrence of `bookmarker`.
/// `None` means the cell is dormant.
pub fn find_read_position(book: &[u8], bookmarker: &[u8]) -> Option<usize> {
    if bookmarker.is_empty() || bookmarker.len() > book.len() {
        return None;
    }
    memchr::memmem::find(book, bookmarker).map(|i| (i + bookmarker.len()) % book.len())
}

/// Symbols of `tail` (read circularly) at offsets `advance, advance+2, …`.
pub fn extract_every_other(tail: &[u8], count: usize, advance: u64) -> Vec<u8> {
    extract_at(tail, 0, count, advance)
}

fn extract_at(book: &[u8], start: usize, count: usize, advance: u64) -> Vec<u8> {
    if count == 0 || book.is_empty() {
        return Vec::new();
    }
    let len = book.len();
    let base = start + (advance % len as u64) as usize;
    (0..count).map(|k| book[(base + 2 * k) % len]).collect()
}

/// Positional base-64 value of an Advance string, most significant digit first.
pub fn decode_advance(advance: &[u8]) -> Result<u64, GenomeError> {
    if advance.is_empty() {
        return Err(GenomeError::EmptyAdvance);
    }
    let mut value: u64 = 0;
    for &s in advance {
        let d = alphabet::digit(s)? as u64;
        value = value.wrapping_mul(64).wrapping_add(d);
    }
    Ok(value)
}

/// Reads `width` contiguous symbols of `book` starting at `start`, wrapping.
pub(crate) fn read_circular(book: &[u8], start: usize, width: usize) -> impl Iterator<Item = u8> + '_ {
    let len = book.len().max(1);
    (0..width).map(move |k| book[(start + k) % len])
}

/// One interpreter step: locate, classify, decode, and compute successors.
///
/// Returns `Ok(None)` when the cell is dormant (empty or absent bookmarker).
pub fn read_step(genome: &Genome, layout: &PayloadLayout) -> Result<Option<ReadOutcome>, GenomeError> {
    let book = &genome.book;
    let Some(position) = find_read_position(book, &genome.bookmarker) else {
        return Ok(None);
    };
    let action = classify_action(book[position])?;
    let mut tail_start = position + 1;
    let payload = if action == ActionKind::Expansion {
        let (p, width) = payload::decode_expansion(book, tail_start, layout)?;
        tail_start += width;
        Some(p)
    } else {
        None
    };
    let len = book.len();
    tail_start %= len;
    let advance = decode_advance(&genome.advance)?;
    let count = genome.bookmarker.len();
    let next_bookmarker = extract_at(book, tail_start, count, advance);
    let adv_offset = (advance % len as u64) as usize + 2 * (count - 1) + 1;
    let next_advance: Vec<u8> =
        read_circular(book, tail_start + adv_offset, genome.advance.len()).collect();
    Ok(Some(ReadOutcome {
        action,
        position,
        payload,
        next_bookmarker,
        next_advance,
    }))
}

pub fn decode_expansion(
    book: &[u8],
    start: usize,
    layout: &PayloadLayout,
) -> Result<(ExpansionPayload, usize), GenomeError> {
    payload::decode_expansion(book, start, layout)
}
