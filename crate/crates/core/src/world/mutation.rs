//! Point mutations of Books and Bookmarkers.

use crate::alphabet;
use crate::engine::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    Substitute,
    Insert,
    Delete,
}

/// A symbol drawn uniformly from the alphabet, excluding `not` when given.
fn random_symbol(rng: &mut Rng, not: Option<u8>) -> u8 {
    match not {
        Some(s) => {
            let old = alphabet::digit_lossy(s) as usize;
            let d = rng.below(alphabet::SIZE - 1);
            alphabet::symbol(if d >= old { d + 1 } else { d } as u8)
        }
        None => alphabet::symbol(rng.below(alphabet::SIZE) as u8),
    }
}

/// Replaces one random symbol with a different one. No-op on an empty string.
pub fn substitute(s: &mut [u8], rng: &mut Rng) {
    if s.is_empty() {
        return;
    }
    let i = rng.below(s.len());
    s[i] = random_symbol(rng, Some(s[i]));
}

/// One substitute, insert or delete (uniform), keeping the length within
/// `max_len`. Insertions into a full string are skipped.
pub fn edit(book: &mut Vec<u8>, rng: &mut Rng, max_len: usize) -> EditKind {
    let kind = match rng.below(3) {
        0 => EditKind::Substitute,
        1 => EditKind::Insert,
        _ => EditKind::Delete,
    };
    match kind {
        EditKind::Substitute => substitute(book, rng),
        EditKind::Insert => {
            let at = rng.below(book.len() + 1);
            let sym = random_symbol(rng, None);
            if book.len() < max_len {
                book.insert(at, sym);
            }
        }
        EditKind::Delete => {
            if !book.is_empty() {
                let at = rng.below(book.len());
                book.remove(at);
            }
        }
    }
    kind
}

/// Copy-time mutation of a child's Book: with probability `beta`, one edit.
pub fn mutate_division(book: &mut Vec<u8>, beta: f64, rng: &mut Rng, max_len: usize) -> bool {
    if beta > 0.0 && rng.bernoulli(beta) {
        edit(book, rng, max_len);
        true
    } else {
        false
    }
}
