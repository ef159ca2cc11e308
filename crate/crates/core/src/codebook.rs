//! 1-bit codebooks, their row/column flip factorization, and the lossless
//! `M + N - 1` bit label.
//!
//! Starting from the all `-1` state, inverting row `i` and column `j` leaves
//! entry `(i, j)` at `-1` when both or neither were inverted and at `+1`
//! otherwise. With flip indicators `r_i, c_j ∈ {-1, +1}` (`+1` = inverted)
//! this is `Φ_ij = -(r_i c_j)`. Negating both indicator vectors gives the same
//! codebook, so one bit is redundant: the label XORs every indicator bit with
//! the first one and drops it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Row-major `M x N` matrix over `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Codebook {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl Codebook {
    pub fn new(rows: usize, cols: usize, entries: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!("codebook must be at least 1x1, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "codebook entries",
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|&&e| e != 1 && e != -1) {
            return Err(Error::InvalidConfig(format!("codebook entry {bad} is not ±1")));
        }
        Ok(Codebook { rows, cols, entries })
    }

    /// Every entry equal to `value` (which must be ±1).
    pub fn filled(rows: usize, cols: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1);
        assert!(rows > 0 && cols > 0);
        Codebook {
            rows,
            cols,
            entries: vec![value; rows * cols],
        }
    }

    /// The all `-1` starting state of the traversal.
    pub fn initial(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, -1)
    }

    /// Decodes a row-major bit pattern where bit `k` (counted from the most
    /// significant of `rows * cols` bits) set means entry `k` is `+1`.
    pub fn from_index(rows: usize, cols: usize, index: u64) -> Self {
        let n = rows * cols;
        let entries = (0..n)
            .map(|k| if (index >> (n - 1 - k)) & 1 == 1 { 1 } else { -1 })
            .collect();
        Codebook { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.cols + col]
    }

    pub fn flip_row(&mut self, row: usize) {
        for e in &mut self.entries[row * self.cols..(row + 1) * self.cols] {
            *e = -*e;
        }
    }

    pub fn flip_col(&mut self, col: usize) {
        for e in self.entries.iter_mut().skip(col).step_by(self.cols) {
            *e = -*e;
        }
    }

    /// Row-major bits with `+1 -> 1`, `-1 -> 0`.
    pub fn to_bits(&self) -> Vec<u8> {
        self.entries.iter().map(|&e| u8::from(e > 0)).collect()
    }

    pub fn from_bits(rows: usize, cols: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: bits.len(),
            });
        }
        Codebook::new(rows, cols, bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect())
    }

    /// Number of entries that agree with `other`.
    pub fn matching_entries(&self, other: &Codebook) -> usize {
        self.entries.iter().zip(&other.entries).filter(|(a, b)| a == b).count()
    }

    pub fn factor(&self) -> Result<FlipMask> {
        FlipMask::factor(self)
    }

    pub fn encode(&self) -> Result<EncodedLabel> {
        EncodedLabel::encode(self)
    }
}

impl std::ops::Neg for &Codebook {
    type Output = Codebook;

    fn neg(self) -> Codebook {
        Codebook {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| -e).collect(),
        }
    }
}

/// `rows` lines of `cols` space-separated `-1`/`1` values.
impl fmt::Display for Codebook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.entries.chunks(self.cols).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for (j, e) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Codebook {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = 0;
        let mut cols = None;
        let mut entries = Vec::new();
        for (line_no, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let before = entries.len();
            for tok in line.split_whitespace() {
                let v: i8 = tok.parse().map_err(|_| Error::Parse {
                    line: line_no + 1,
                    message: format!("bad codebook entry {tok:?}"),
                })?;
                entries.push(v);
            }
            let width = entries.len() - before;
            if *cols.get_or_insert(width) != width {
                return Err(Error::Parse {
                    line: line_no + 1,
                    message: "ragged codebook row".into(),
                });
            }
            rows += 1;
        }
        Codebook::new(rows, cols.unwrap_or(0), entries)
    }
}

/// Row and column inversion indicators relative to the all `-1` state.
/// `+1` means inverted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipMask {
    pub row_flips: Vec<i8>,
    pub col_flips: Vec<i8>,
}

impl FlipMask {
    pub fn new(row_flips: Vec<i8>, col_flips: Vec<i8>) -> Result<Self> {
        if row_flips.is_empty() || col_flips.is_empty() {
            return Err(Error::InvalidConfig("flip mask needs at least one row and column".into()));
        }
        if row_flips.iter().chain(&col_flips).any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidConfig("flip indicators must be ±1".into()));
        }
        Ok(FlipMask { row_flips, col_flips })
    }

    /// Mask with nothing inverted.
    pub fn identity(rows: usize, cols: usize) -> Self {
        FlipMask {
            row_flips: vec![-1; rows],
            col_flips: vec![-1; cols],
        }
    }

    pub fn negated(&self) -> Self {
        FlipMask {
            row_flips: self.row_flips.iter().map(|e| -e).collect(),
            col_flips: self.col_flips.iter().map(|e| -e).collect(),
        }
    }

    pub fn to_codebook(&self) -> Codebook {
        let cols = self.col_flips.len();
        let mut entries = Vec::with_capacity(self.row_flips.len() * cols);
        for &r in &self.row_flips {
            entries.extend(self.col_flips.iter().map(|&c| -(r * c)));
        }
        Codebook {
            rows: self.row_flips.len(),
            cols,
            entries,
        }
    }

    /// Inverse of [`FlipMask::to_codebook`]; returns the representative with
    /// the first row not inverted.
    pub fn factor(cb: &Codebook) -> Result<FlipMask> {
        // With r_1 = -1: c_j = cb_1j and r_i = -cb_i1 * c_1.
        let col_flips: Vec<i8> = cb.entries[..cb.cols].to_vec();
        let c1 = col_flips[0];
        let row_flips: Vec<i8> = (0..cb.rows).map(|i| -cb.get(i, 0) * c1).collect();
        for (i, &r) in row_flips.iter().enumerate() {
            for (j, &c) in col_flips.iter().enumerate() {
                if cb.get(i, j) != -(r * c) {
                    return Err(Error::NotReachable);
                }
            }
        }
        Ok(FlipMask { row_flips, col_flips })
    }

    /// Indicators concatenated rows then columns, mapped `+1 -> 1`, `-1 -> 0`.
    pub fn to_bits(&self) -> Vec<u8> {
        self.row_flips
            .iter()
            .chain(&self.col_flips)
            .map(|&e| u8::from(e > 0))
            .collect()
    }
}

/// Canonical `M + N - 1` bit representation of a row/column-flip codebook.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedLabel {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

pub fn label_len(rows: usize, cols: usize) -> usize {
    rows + cols - 1
}

impl EncodedLabel {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!("label panel must be at least 1x1, got {rows}x{cols}")));
        }
        if bits.len() != label_len(rows, cols) {
            return Err(Error::LengthMismatch {
                expected: label_len(rows, cols),
                actual: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("label bits must be 0 or 1".into()));
        }
        Ok(EncodedLabel { rows, cols, bits })
    }

    /// The label whose bit string, read most-significant first, is `index`.
    pub fn from_index(rows: usize, cols: usize, index: u64) -> Self {
        let n = label_len(rows, cols);
        let bits = (0..n).map(|k| ((index >> (n - 1 - k)) & 1) as u8).collect();
        EncodedLabel { rows, cols, bits }
    }

    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn encode(cb: &Codebook) -> Result<Self> {
        let b = FlipMask::factor(cb)?.to_bits();
        let bits = b[1..].iter().map(|&x| x ^ b[0]).collect();
        Ok(EncodedLabel {
            rows: cb.rows,
            cols: cb.cols,
            bits,
        })
    }

    pub fn to_mask(&self) -> FlipMask {
        let sign = |b: u8| if b == 1 { 1 } else { -1 };
        let mut row_flips = vec![-1];
        row_flips.extend(self.bits[..self.rows - 1].iter().map(|&b| sign(b)));
        let col_flips = self.bits[self.rows - 1..].iter().map(|&b| sign(b)).collect();
        FlipMask { row_flips, col_flips }
    }

    pub fn decode(&self) -> Codebook {
        self.to_mask().to_codebook()
    }

    /// Checks `bits` against the panel shape and decodes it.
    pub fn decode_bits(rows: usize, cols: usize, bits: &[u8]) -> Result<Codebook> {
        Ok(EncodedLabel::new(rows, cols, bits.to_vec())?.decode())
    }
}

impl fmt::Display for EncodedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses a `0`/`1` bit string for a known panel shape.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidConfig(format!("bad label bit {other:?}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb(rows: usize, cols: usize, e: &[i8]) -> Codebook {
        Codebook::new(rows, cols, e.to_vec()).unwrap()
    }

    #[test]
    fn masks_without_or_with_all_flips_give_initial_state() {
        assert_eq!(FlipMask::identity(3, 4).to_codebook(), Codebook::initial(3, 4));
        let all = FlipMask::new(vec![1; 3], vec![1; 4]).unwrap();
        assert_eq!(all.to_codebook(), Codebook::initial(3, 4));
    }

    #[test]
    fn product_rule_three_by_three() {
        let m = FlipMask::new(vec![1, -1, 1], vec![-1, 1, 1]).unwrap();
        let expected = cb(3, 3, &[1, -1, -1, -1, 1, 1, 1, -1, -1]);
        assert_eq!(m.to_codebook(), expected);
        assert_eq!(m.negated().to_codebook(), expected);
    }

    #[test]
    fn factor_examples() {
        assert_eq!(Codebook::initial(3, 3).factor().unwrap(), FlipMask::identity(3, 3));
        let m = cb(2, 2, &[-1, 1, 1, -1]).factor().unwrap();
        assert_eq!(m.row_flips, vec![-1, 1]);
        assert_eq!(m.col_flips, vec![-1, 1]);
        assert!(matches!(cb(2, 2, &[-1, 1, 1, 1]).factor(), Err(Error::NotReachable)));
    }

    #[test]
    fn unreachable_two_by_two_has_no_mask() {
        let target = cb(2, 2, &[-1, 1, 1, 1]);
        for idx in 0..16u32 {
            let bit = |k: u32| if (idx >> k) & 1 == 1 { 1 } else { -1 };
            let m = FlipMask::new(vec![bit(0), bit(1)], vec![bit(2), bit(3)]).unwrap();
            assert_ne!(m.to_codebook(), target);
        }
    }

    #[test]
    fn worked_three_by_three_label() {
        let mode1 = FlipMask::new(vec![1, -1, 1], vec![-1, 1, 1]).unwrap();
        let mode2 = mode1.negated();
        assert_eq!(mode2.row_flips, vec![-1, 1, -1]);
        assert_eq!(mode2.col_flips, vec![1, -1, -1]);
        let codebook = mode1.to_codebook();
        assert_eq!(codebook, mode2.to_codebook());
        let label = codebook.encode().unwrap();
        assert_eq!(label.bits(), &[1, 0, 1, 0, 0]);
        assert_eq!(label.to_string(), "10100");
        assert_eq!(label.decode(), codebook);
        assert_eq!(label.to_mask(), mode2);
    }

    #[test]
    fn initial_state_encodes_to_zeros() {
        let l = Codebook::initial(4, 5).encode().unwrap();
        assert_eq!(l.bits(), &[0; 8]);
        assert_eq!(EncodedLabel::new(4, 5, vec![0; 8]).unwrap().decode(), Codebook::initial(4, 5));
    }

    #[test]
    fn exhaustive_three_by_three() {
        let mut seen = std::collections::HashSet::new();
        for idx in 0..32 {
            let label = EncodedLabel::from_index(3, 3, idx);
            let codebook = label.decode();
            assert_eq!(codebook.encode().unwrap(), label);
            assert!(seen.insert(codebook));
        }
        let reachable = (0..512)
            .filter(|&i| Codebook::from_index(3, 3, i).factor().is_ok())
            .count();
        assert_eq!(reachable, 32);
    }

    #[test]
    fn negation_flips_column_bits_only() {
        // -cb is always reachable too and has a different label.
        let c = EncodedLabel::from_index(3, 4, 0b101101).decode();
        let (a, b) = (c.encode().unwrap(), (-&c).encode().unwrap());
        assert_ne!(a, b);
        assert_eq!(&a.bits()[..2], &b.bits()[..2]);
        assert!(a.bits()[2..].iter().zip(&b.bits()[2..]).all(|(x, y)| x != y));
    }

    #[test]
    fn length_and_value_checks() {
        assert!(matches!(
            EncodedLabel::new(3, 3, vec![0; 4]),
            Err(Error::LengthMismatch { expected: 5, actual: 4 })
        ));
        assert!(EncodedLabel::decode_bits(2, 2, &[1, 0, 1, 1]).is_err());
        assert!(Codebook::new(1, 2, vec![1, 0]).is_err());
        assert!(Codebook::new(2, 2, vec![1, 1, 1]).is_err());
    }

    #[test]
    fn text_forms() {
        let c = cb(2, 3, &[1, -1, 1, -1, -1, 1]);
        assert_eq!(c.to_string(), "1 -1 1\n-1 -1 1");
        assert_eq!(c.to_string().parse::<Codebook>().unwrap(), c);
        assert!("1 -1\n1".parse::<Codebook>().is_err());
        assert!("1 2".parse::<Codebook>().is_err());
        assert_eq!(parse_bits("0110").unwrap(), vec![0, 1, 1, 0]);
        assert!(parse_bits("01x").is_err());
        assert_eq!(EncodedLabel::from_index(3, 3, 0b10100).bits(), &[1, 0, 1, 0, 0]);
    }

    #[test]
    fn flips_and_bits() {
        let mut c = Codebook::initial(2, 3);
        c.flip_row(1);
        c.flip_col(2);
        assert_eq!(c, cb(2, 3, &[-1, -1, 1, 1, 1, -1]));
        assert_eq!(c.to_bits(), vec![0, 0, 1, 1, 1, 0]);
        assert_eq!(Codebook::from_bits(2, 3, &c.to_bits()).unwrap(), c);
        assert_eq!(Codebook::from_index(2, 3, 0b001110), c);
    }
}
