//! Fixed-width base-64 layout of an EXPANSION payload.
//!
//! | field            | digits | value                               |
//! |------------------|--------|-------------------------------------|
//! | absorption r,g,b | 1 each | `v / 63`                            |
//! | luminosity       | 2      | `v / 4095`                          |
//! | mass             | 2      | `m_min + (v / 4095)(m_max - m_min)` |
//! | radius           | 2      | `r_min + (v / 4095)(r_max - r_min)` |
//! | copy start       | 3      | `v mod book length`                 |
//! | copy end         | 3      | `v mod book length`                 |
//! | child marker len | 1      | `min(v, B_max)`                     |
//! | child marker     | len    | verbatim symbols                    |
//! | weights          | W_nn   | `2 (v / 63) - 1` each               |
//!
//! Multi-digit fields are most significant digit first.

use super::read_circular;
use crate::alphabet;
use crate::error::GenomeError;
use crate::neurocell::NetShape;

/// Digits preceding the child marker symbols.
pub(crate) const FIXED_DIGITS: usize = 3 + 2 + 2 + 2 + 3 + 3 + 1;

/// Everything needed to decode a payload besides the Book itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadLayout {
    pub shape: NetShape,
    pub mass_range: (f64, f64),
    pub radius_range: (f64, f64),
    pub max_bookmarker: usize,
}

impl PayloadLayout {
    pub const DEFAULT_MASS: (f64, f64) = (0.2, 1.0);
    pub const DEFAULT_RADIUS: (f64, f64) = (0.02, 0.16);

    pub fn new(shape: NetShape, max_bookmarker: usize) -> Self {
        PayloadLayout {
            shape,
            mass_range: Self::DEFAULT_MASS,
            radius_range: Self::DEFAULT_RADIUS,
            max_bookmarker,
        }
    }

    /// Total payload width for a child marker of `marker_len` symbols.
    pub fn width(&self, marker_len: usize) -> usize {
        FIXED_DIGITS + marker_len.min(self.max_bookmarker) + self.shape.weight_count()
    }
}

/// Decoded description of a cell created by EXPANSION.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPayload {
    pub absorption: [f64; 3],
    pub luminosity: f64,
    pub mass: f64,
    pub radius: f64,
    pub weights: Vec<f64>,
    pub copy_start: usize,
    pub copy_end: usize,
    pub child_bookmarker: Vec<u8>,
}

impl ExpansionPayload {
    /// Mid-range phenotype with near-zero (slightly negative) weights.
    pub fn neutral(layout: &PayloadLayout) -> Self {
        ExpansionPayload {
            absorption: [0.5; 3],
            luminosity: 0.0,
            mass: layout.mass_range.0,
            radius: 0.08,
            weights: vec![weight_value(31); layout.shape.weight_count()],
            copy_start: 0,
            copy_end: 0,
            child_bookmarker: Vec::new(),
        }
    }
}

#[inline]
pub(crate) fn weight_value(v: u8) -> f64 {
    2.0 * (v as f64 / 63.0) - 1.0
}

fn digits(book: &[u8], start: usize, n: usize) -> u32 {
    read_circular(book, start, n).fold(0u32, |acc, s| acc * 64 + alphabet::digit_lossy(s) as u32)
}

fn lerp(range: (f64, f64), t: f64) -> f64 {
    range.0 + t * (range.1 - range.0)
}

pub(crate) fn decode_expansion(
    book: &[u8],
    start: usize,
    layout: &PayloadLayout,
) -> Result<(ExpansionPayload, usize), GenomeError> {
    if book.is_empty() {
        return Err(GenomeError::Malformed("book shorter than one symbol".into()));
    }
    let len = book.len();
    let mut at = start;
    let mut take = |n: usize| {
        let v = digits(book, at, n);
        at += n;
        v
    };
    let absorption = [
        take(1) as f64 / 63.0,
        take(1) as f64 / 63.0,
        take(1) as f64 / 63.0,
    ];
    let luminosity = take(2) as f64 / 4095.0;
    let mass = lerp(layout.mass_range, take(2) as f64 / 4095.0);
    let radius = lerp(layout.radius_range, take(2) as f64 / 4095.0);
    let copy_start = take(3) as usize % len;
    let copy_end = take(3) as usize % len;
    let marker_len = (take(1) as usize).min(layout.max_bookmarker);
    let child_bookmarker: Vec<u8> = read_circular(book, at, marker_len).collect();
    at += marker_len;
    let weights = read_circular(book, at, layout.shape.weight_count())
        .map(|s| weight_value(alphabet::digit_lossy(s)))
        .collect();
    at += layout.shape.weight_count();
    Ok((
        ExpansionPayload {
            absorption,
            luminosity,
            mass,
            radius,
            weights,
            copy_start,
            copy_end,
            child_bookmarker,
        },
        at - start,
    ))
}

fn quantize(value: f64, lo: f64, hi: f64, max: u32, what: &str) -> Result<u32, GenomeError> {
    const SLACK: f64 = 1e-9;
    if !value.is_finite() || value < lo - SLACK || value > hi + SLACK {
        return Err(GenomeError::Encoding(format!(
            "{what} = {value} outside [{lo}, {hi}]"
        )));
    }
    let t = if hi > lo { (value - lo) / (hi - lo) } else { 0.0 };
    Ok(((t * max as f64).round() as u32).min(max))
}

fn push_digits(out: &mut Vec<u8>, value: u32, n: usize) {
    for k in (0..n).rev() {
        out.push(alphabet::symbol(((value >> (6 * k)) & 63) as u8));
    }
}

/// Encodes a payload into its fixed-width symbol form (nearest quantization).
pub fn encode_payload(p: &ExpansionPayload, layout: &PayloadLayout) -> Result<Vec<u8>, GenomeError> {
    let wc = layout.shape.weight_count();
    if p.weights.len() != wc {
        return Err(GenomeError::Encoding(format!(
            "{} weights given, network needs {wc}",
            p.weights.len()
        )));
    }
    if p.child_bookmarker.len() > layout.max_bookmarker {
        return Err(GenomeError::Encoding(format!(
            "child bookmarker longer than {}",
            layout.max_bookmarker
        )));
    }
    alphabet::validate(&p.child_bookmarker)?;
    let mut out = Vec::with_capacity(layout.width(p.child_bookmarker.len()));
    for (c, name) in p.absorption.iter().zip(["absorption.r", "absorption.g", "absorption.b"]) {
        push_digits(&mut out, quantize(*c, 0.0, 1.0, 63, name)?, 1);
    }
    push_digits(&mut out, quantize(p.luminosity, 0.0, 1.0, 4095, "luminosity")?, 2);
    let (m0, m1) = layout.mass_range;
    push_digits(&mut out, quantize(p.mass, m0, m1, 4095, "mass")?, 2);
    let (r0, r1) = layout.radius_range;
    push_digits(&mut out, quantize(p.radius, r0, r1, 4095, "radius")?, 2);
    for (v, name) in [(p.copy_start, "copy start"), (p.copy_end, "copy end")] {
        if v >= 1 << 18 {
            return Err(GenomeError::Encoding(format!("{name} {v} needs more than 3 digits")));
        }
        push_digits(&mut out, v as u32, 3);
    }
    push_digits(&mut out, p.child_bookmarker.len() as u32, 1);
    out.extend_from_slice(&p.child_bookmarker);
    for (i, w) in p.weights.iter().enumerate() {
        let v = quantize(*w, -1.0, 1.0, 63, &format!("weight[{i}]"))?;
        push_digits(&mut out, v, 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> PayloadLayout {
        PayloadLayout::new(NetShape::new(2, 3), 8)
    }

    fn raw(fields: &[u8], marker: &[u8], layout: &PayloadLayout, weight: u8) -> Vec<u8> {
        let mut out: Vec<u8> = fields.iter().map(|&d| alphabet::symbol(d)).collect();
        out.extend_from_slice(marker);
        out.extend(std::iter::repeat(alphabet::symbol(weight)).take(layout.shape.weight_count()));
        out
    }

    #[test]
    fn zero_radius_digits_clamp_to_minimum() {
        let l = layout();
        let book = raw(&[0; FIXED_DIGITS], b"", &l, 0);
        let (p, w) = decode_expansion(&book, 0, &l).unwrap();
        assert_eq!(p.radius, l.radius_range.0);
        assert!(p.radius > 0.0);
        assert_eq!(p.mass, l.mass_range.0);
        assert_eq!(w, l.width(0));
        assert!(p.weights.iter().all(|&x| x == -1.0));
    }

    #[test]
    fn full_scale_absorption() {
        let l = layout();
        let mut f = [0u8; FIXED_DIGITS];
        f[..3].copy_from_slice(&[63, 63, 63]);
        f[3] = 63;
        f[4] = 63;
        let book = raw(&f, b"", &l, 63);
        let (p, _) = decode_expansion(&book, 0, &l).unwrap();
        assert_eq!(p.absorption, [1.0, 1.0, 1.0]);
        assert_eq!(p.luminosity, 1.0);
        assert!(p.weights.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn marker_length_is_clamped() {
        let mut l = layout();
        l.max_bookmarker = 2;
        let mut f = [0u8; FIXED_DIGITS];
        f[FIXED_DIGITS - 1] = 50;
        let book = raw(&f, b"XY", &l, 10);
        let (p, w) = decode_expansion(&book, 0, &l).unwrap();
        assert_eq!(p.child_bookmarker, b"XY");
        assert_eq!(w, l.width(2));
    }

    #[test]
    fn copy_range_wraps_modulo_book() {
        let l = layout();
        let mut f = [0u8; FIXED_DIGITS];
        // copy_start = 1*64^2 + 0 + 5
        f[9] = 1;
        f[11] = 5;
        let book = raw(&f, b"", &l, 0);
        let (p, _) = decode_expansion(&book, 0, &l).unwrap();
        assert_eq!(p.copy_start, (4096 + 5) % book.len());
    }

    #[test]
    fn empty_book_is_malformed() {
        assert!(matches!(
            decode_expansion(b"", 0, &layout()),
            Err(GenomeError::Malformed(_))
        ));
    }

    #[test]
    fn out_of_range_values_refuse_to_encode() {
        let l = layout();
        let mut p = ExpansionPayload::neutral(&l);
        p.radius = 0.5;
        assert!(encode_payload(&p, &l).is_err());
        let mut p = ExpansionPayload::neutral(&l);
        p.weights[0] = 1.5;
        assert!(encode_payload(&p, &l).is_err());
        let mut p = ExpansionPayload::neutral(&l);
        p.weights.pop();
        assert!(encode_payload(&p, &l).is_err());
    }

    /// Quantization oracle: for each scalar field, every digit value decodes to a
    /// grid point, and re-encoding any value lands within half a step of it.
    #[test]
    fn quantization_oracle_all_digit_values() {
        let l = layout();
        for v in 0u8..64 {
            let a = v as f64 / 63.0;
            let w = 2.0 * a - 1.0;
            let mut p = ExpansionPayload::neutral(&l);
            p.absorption = [a, a, a];
            p.weights = vec![w; l.shape.weight_count()];
            let mut book = encode_payload(&p, &l).unwrap();
            book.extend_from_slice(b"AAAA");
            let (q, _) = decode_expansion(&book, 0, &l).unwrap();
            assert_eq!(q.absorption, [a; 3]);
            assert!(q.weights.iter().all(|&x| x == w));
        }
    }
}
