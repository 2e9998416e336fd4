//! Mel feature matrices and the MELF container.
//!
//! MELF layout, little-endian: magic `MELF`, version `u32 = 1`, `n_frames: u32`,
//! `n_bins: u32`, then `n_frames * n_bins` IEEE-754 `f32` values, frame-major.

use std::io::{Read, Write};
use std::ops::Range;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"MELF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const DEFAULT_FRAME_SHIFT_MS: f64 = 12.5;
pub const DEFAULT_MEL_BINS: usize = 80;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("bad magic {0:?}, expected \"MELF\"")]
    BadMagic([u8; 4]),
    #[error("unsupported MELF version {0}")]
    UnsupportedVersion(u32),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("non-finite value at frame {frame}, bin {bin}")]
    NonFiniteValue { frame: usize, bin: usize },
    #[error("matrix has zero mel bins")]
    ZeroBins,
    #[error("no segments to concatenate")]
    NoSegments,
    #[error("value count {found} does not match {n_frames} x {n_bins}")]
    ShapeMismatch { n_frames: usize, n_bins: usize, found: usize },
    #[error("segment has {found} bins, expected {expected}")]
    BinMismatch { expected: usize, found: usize },
    #[error("segment frame shift {found} ms differs from {expected} ms")]
    FrameShiftMismatch { expected: f64, found: f64 },
    #[error("frame range {start}..{end} out of bounds for {n_frames} frames")]
    RangeOutOfBounds { start: usize, end: usize, n_frames: usize },
    #[error("dimension too large for MELF header")]
    DimensionOverflow,
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

/// Frames x mel-bins matrix of `f32`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_frames: usize,
    n_bins: usize,
    frame_shift_ms: f64,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n_frames: usize, n_bins: usize, values: Vec<f32>) -> Result<Self, FeatureError> {
        Self::with_frame_shift(n_frames, n_bins, DEFAULT_FRAME_SHIFT_MS, values)
    }

    pub fn with_frame_shift(
        n_frames: usize,
        n_bins: usize,
        frame_shift_ms: f64,
        values: Vec<f32>,
    ) -> Result<Self, FeatureError> {
        if n_bins == 0 {
            return Err(FeatureError::ZeroBins);
        }
        if n_frames.checked_mul(n_bins) != Some(values.len()) {
            return Err(FeatureError::ShapeMismatch { n_frames, n_bins, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFiniteValue { frame: i / n_bins, bin: i % n_bins });
        }
        Ok(Self { n_frames, n_bins, frame_shift_ms, values })
    }

    pub fn zeros(n_frames: usize, n_bins: usize) -> Self {
        Self::new(n_frames, n_bins, vec![0.0; n_frames * n_bins]).expect("valid shape")
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn frame_shift_ms(&self) -> f64 {
        self.frame_shift_ms
    }

    pub fn set_frame_shift_ms(&mut self, ms: f64) {
        self.frame_shift_ms = ms;
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, frame: usize) -> &[f32] {
        &self.values[frame * self.n_bins..(frame + 1) * self.n_bins]
    }

    /// Contiguous rows for a frame range.
    pub fn rows(&self, frames: Range<usize>) -> &[f32] {
        &self.values[frames.start * self.n_bins..frames.end * self.n_bins]
    }

    /// Bit-level equality (distinguishes `0.0` and `-0.0`).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.n_frames == other.n_frames
            && self.n_bins == other.n_bins
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 4 * self.values.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_len());
        write_features(self, &mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub fn read_features<R: Read>(mut source: R) -> Result<FeatureMatrix, FeatureError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = source.read(&mut header[got..])?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got >= 4 && &header[0..4] != MAGIC {
        return Err(FeatureError::BadMagic(header[0..4].try_into().expect("4 bytes")));
    }
    if got < HEADER_LEN {
        return Err(FeatureError::TruncatedPayload { expected: HEADER_LEN, found: got });
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != VERSION {
        return Err(FeatureError::UnsupportedVersion(version));
    }
    let n_frames = word(8) as usize;
    let n_bins = word(12) as usize;
    if n_bins == 0 {
        return Err(FeatureError::ZeroBins);
    }
    let expected = n_frames
        .checked_mul(n_bins)
        .and_then(|n| n.checked_mul(4))
        .ok_or(FeatureError::DimensionOverflow)?;

    let mut payload = Vec::new();
    source.by_ref().take(expected as u64).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(FeatureError::TruncatedPayload { expected, found: payload.len() });
    }
    let mut rest = Vec::new();
    source.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FeatureError::TrailingBytes(rest.len()));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    FeatureMatrix::new(n_frames, n_bins, values)
}

/// Writes the matrix in MELF layout and returns the number of bytes written.
pub fn write_features<W: Write>(m: &FeatureMatrix, mut sink: W) -> Result<usize, FeatureError> {
    let frames = u32::try_from(m.n_frames).map_err(|_| FeatureError::DimensionOverflow)?;
    let bins = u32::try_from(m.n_bins).map_err(|_| FeatureError::DimensionOverflow)?;
    let mut buf = Vec::with_capacity(m.encoded_len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&frames.to_le_bytes());
    buf.extend_from_slice(&bins.to_le_bytes());
    for v in &m.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

/// Concatenates frame ranges of several matrices verbatim, in order.
pub fn concat_segments(segments: &[(&FeatureMatrix, Range<usize>)]) -> Result<FeatureMatrix, FeatureError> {
    let Some((first, _)) = segments.first() else {
        return Err(FeatureError::NoSegments);
    };
    let n_bins = first.n_bins;
    let shift = first.frame_shift_ms;
    let mut n_frames = 0;
    for (m, range) in segments {
        if m.n_bins != n_bins {
            return Err(FeatureError::BinMismatch { expected: n_bins, found: m.n_bins });
        }
        if m.frame_shift_ms != shift {
            return Err(FeatureError::FrameShiftMismatch { expected: shift, found: m.frame_shift_ms });
        }
        if range.start > range.end || range.end > m.n_frames {
            return Err(FeatureError::RangeOutOfBounds { start: range.start, end: range.end, n_frames: m.n_frames });
        }
        n_frames += range.len();
    }
    let mut values = Vec::with_capacity(n_frames * n_bins);
    for (m, range) in segments {
        values.extend_from_slice(m.rows(range.clone()));
    }
    Ok(FeatureMatrix { n_frames, n_bins, frame_shift_ms: shift, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n_frames: usize, n_bins: usize, offset: f32) -> FeatureMatrix {
        let values = (0..n_frames * n_bins).map(|i| offset + i as f32 * 0.25).collect();
        FeatureMatrix::new(n_frames, n_bins, values).unwrap()
    }

    #[test]
    fn empty_matrix_round_trip() {
        let m = FeatureMatrix::zeros(0, 80);
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 16);
        let back = read_features(bytes.as_slice()).unwrap();
        assert_eq!(back.n_frames(), 0);
        assert_eq!(back.n_bins(), 80);
    }

    #[test]
    fn encoded_sizes() {
        let m = ramp(45, 80, 0.0);
        let mut sink = Vec::new();
        assert_eq!(write_features(&m, &mut sink).unwrap(), 14416);
        let one = FeatureMatrix::zeros(1, 1);
        let bytes = one.to_bytes();
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[16..], &[0, 0, 0, 0]);
        assert_eq!(&bytes[..16], b"MELF\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00");
    }

    #[test]
    fn read_errors() {
        let mut bytes = ramp(2, 3, 1.0).to_bytes();
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_features(bad.as_slice()), Err(FeatureError::BadMagic(m)) if &m == b"XXXX"));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(read_features(v2.as_slice()), Err(FeatureError::UnsupportedVersion(2))));
        let short = &bytes[..bytes.len() - 1];
        assert!(matches!(read_features(short), Err(FeatureError::TruncatedPayload { expected: 24, found: 23 })));
        assert!(matches!(read_features(&bytes[..10]), Err(FeatureError::TruncatedPayload { .. })));
        let mut nan = bytes.clone();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_features(nan.as_slice()), Err(FeatureError::NonFiniteValue { frame: 0, bin: 0 })));
        bytes.push(0);
        assert!(matches!(read_features(bytes.as_slice()), Err(FeatureError::TrailingBytes(1))));
    }

    #[test]
    fn rejects_non_finite_construction() {
        assert!(FeatureMatrix::new(1, 2, vec![0.0, f32::INFINITY]).is_err());
        assert!(matches!(FeatureMatrix::new(1, 0, vec![]), Err(FeatureError::ZeroBins)));
        assert!(matches!(FeatureMatrix::new(2, 2, vec![0.0; 3]), Err(FeatureError::ShapeMismatch { .. })));
    }

    #[test]
    fn concat_toy_segments() {
        let a = ramp(45, 80, 0.0);
        let b = ramp(40, 80, 1000.0);
        let out = concat_segments(&[(&a, 0..25), (&b, 8..40)]).unwrap();
        assert_eq!(out.n_frames(), 57);
        assert_eq!(out.row(0), a.row(0));
        assert_eq!(out.row(24), a.row(24));
        assert_eq!(out.row(25), b.row(8));
        assert_eq!(out.row(56), b.row(39));
    }

    #[test]
    fn concat_identity_and_errors() {
        let a = ramp(45, 80, 0.0);
        assert!(concat_segments(&[(&a, 0..45)]).unwrap().bit_eq(&a));
        let narrow = ramp(10, 64, 0.0);
        assert!(matches!(
            concat_segments(&[(&a, 0..10), (&narrow, 0..10)]),
            Err(FeatureError::BinMismatch { expected: 80, found: 64 })
        ));
        assert!(matches!(concat_segments(&[(&a, 40..46)]), Err(FeatureError::RangeOutOfBounds { .. })));
        let mut shifted = ramp(10, 80, 0.0);
        shifted.set_frame_shift_ms(10.0);
        assert!(matches!(
            concat_segments(&[(&a, 0..1), (&shifted, 0..1)]),
            Err(FeatureError::FrameShiftMismatch { .. })
        ));
        assert!(matches!(concat_segments(&[]), Err(FeatureError::NoSegments)));
    }
}
