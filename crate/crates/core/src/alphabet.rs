//! The 64-symbol alphabet shared by Books, Bookmarkers and Advance strings.
//!
//! Symbols are ordered `A..Z`, `a..z`, `0..9`, `+`, `-`; a symbol's position in
//! that order is both its action quadrant key and its base-64 digit value.

use crate::error::GenomeError;

/// Number of symbols in the alphabet.
pub const SIZE: usize = 64;

/// Symbols in index order.
pub const SYMBOLS: &[u8; SIZE] =
    b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+-";

const INVALID: u8 = 0xff;

const INDEX: [u8; 256] = {
    let mut table = [INVALID; 256];
    let mut i = 0;
    while i < SIZE {
        table[SYMBOLS[i] as usize] = i as u8;
        i += 1;
    }
    table
};

/// Index (digit value) of a symbol, or `None` if the byte is not in the alphabet.
#[inline]
pub fn index_of(symbol: u8) -> Option<u8> {
    match INDEX[symbol as usize] {
        INVALID => None,
        v => Some(v),
    }
}

/// Like [`index_of`] but reports the offending character.
#[inline]
pub fn digit(symbol: u8) -> Result<u8, GenomeError> {
    index_of(symbol).ok_or(GenomeError::InvalidSymbol(symbol as char))
}

/// Digit value of a symbol already known to be valid. Invalid bytes map to 0.
#[inline]
pub(crate) fn digit_lossy(symbol: u8) -> u8 {
    match INDEX[symbol as usize] {
        INVALID => 0,
        v => v,
    }
}

/// Symbol for a digit value in `0..64`.
#[inline]
pub fn symbol(index: u8) -> u8 {
    SYMBOLS[(index as usize) & (SIZE - 1)]
}

#[inline]
pub fn is_member(symbol: u8) -> bool {
    INDEX[symbol as usize] != INVALID
}

/// Checks that every byte of `s` is an alphabet symbol.
pub fn validate(s: &[u8]) -> Result<(), GenomeError> {
    match s.iter().find(|&&b| !is_member(b)) {
        Some(&b) => Err(GenomeError::InvalidSymbol(b as char)),
        None => Ok(()),
    }
}
