//! Exact linear algebra over F_2.
//!
//! Bit order: position 0 is the first (leftmost) bit of a string and row `i`
//! of a parity-check matrix produces syndrome bit `i`. Text forms follow the
//! same order: a bit string prints as unspaced `0`/`1` characters with index 0
//! on the left, and a matrix prints as a `rows cols` header followed by one
//! line of space-separated bits per row.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Worst-case number of candidate error patterns the coset decoder may visit.
///
/// Any full-row-rank `r x n` parity check has covering radius at most `r`, so
/// the search never goes past weight `r`. The cap is `2^24`, which admits
/// every code with `n <= 24` and longer codes whose redundancy is small.
pub const DECODE_CANDIDATE_CAP: u64 = 1 << 24;

/// Largest `r + m` accepted by [`code_distance_drm`].
pub const DRM_SPAN_CAP: usize = 20;

const WORD: usize = 64;

/// Fixed-length vector over F_2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            s.set(i, true);
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Builds a string whose bit `i` is bit `i` of `value` (least significant first).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mut s = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            s.words[0] = value & mask;
        }
        s
    }

    /// Inverse of [`BitString::from_u64`]; panics if longer than 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the 1-bits, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        Ok(self.xor_unchecked(other))
    }

    fn xor_unchecked(&self, other: &BitString) -> BitString {
        BitString {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub(crate) fn xor_assign(&mut self, other: &BitString) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Inner product over F_2.
    pub fn dot(&self, other: &BitString) -> Result<bool> {
        check_len(self.len, other.len)?;
        Ok(self.dot_unchecked(other))
    }

    fn dot_unchecked(&self, other: &BitString) -> bool {
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones % 2 == 1
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Bits at the positions where `mask` is set, in ascending index order.
    pub fn restrict(&self, mask: &BitString) -> Result<BitString> {
        check_len(self.len, mask.len)?;
        Ok(BitString::from_bits(
            (0..self.len).filter(|&i| mask.get(i)).map(|i| self.get(i)),
        ))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString::from_bits((0..len).map(|_| rng.gen::<bool>()))
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

impl BitXor for &BitString {
    type Output = BitString;

    /// Panics on length mismatch; use [`BitString::xor`] for a checked form.
    fn bitxor(self, rhs: &BitString) -> BitString {
        assert_eq!(self.len, rhs.len, "xor of bit strings with different lengths");
        self.xor_unchecked(rhs)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::InvalidBitString(format!(
                        "unexpected character {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(BitString::from_bits(bits))
    }
}

/// Dense matrix over F_2, stored as a list of row vectors.
///
/// Zero-row matrices are allowed: an empty parity check means no syndrome is
/// published.
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    cols: usize,
    rows: Vec<BitString>,
}

impl Gf2Matrix {
    pub fn from_rows(rows: Vec<BitString>, cols: usize) -> Result<Self> {
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Gf2Matrix { cols, rows })
    }

    /// Convenience constructor from nested 0/1 literals.
    pub fn from_bits(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| BitString::from_bits(r.iter().map(|&b| b != 0)))
            .collect();
        Self::from_rows(rows, cols)
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitString::zeros(n);
                r.set(i, true);
                r
            })
            .collect();
        Gf2Matrix { cols: n, rows }
    }

    pub fn zero_rows(cols: usize) -> Self {
        Gf2Matrix { cols, rows: Vec::new() }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitString {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitString] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }

    /// Computes `x · Mᵀ`: bit `i` of the result is `<x, row_i>`.
    pub fn mul_transpose(&self, x: &BitString) -> Result<BitString> {
        check_len(self.cols, x.len())?;
        Ok(BitString::from_bits(self.rows.iter().map(|row| row.dot_unchecked(x))))
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &Gf2Matrix) -> Result<Gf2Matrix> {
        check_len(self.cols, other.cols)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Gf2Matrix { cols: self.cols, rows })
    }

    /// Column `j` as a bit string of length `rows`.
    pub fn column(&self, j: usize) -> BitString {
        BitString::from_bits(self.rows.iter().map(|r| r.get(j)))
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Gf2Matrix {
            cols,
            rows: (0..rows).map(|_| BitString::random(cols, rng)).collect(),
        }
    }

    /// Parses the shared text format: a `rows cols` header line, then one line
    /// of space-separated 0/1 entries per row. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::MatrixParse {
            line: 0,
            message: "missing `rows cols` header".into(),
        })?;
        let (rows, cols) = parse_header(hline, header)?;
        let mut out = Vec::with_capacity(rows);
        for (line, content) in lines {
            let bits = content
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::MatrixParse {
                        line,
                        message: format!("expected 0 or 1, found {other:?}"),
                    }),
                })
                .collect::<Result<Vec<bool>>>()?;
            if bits.len() != cols {
                return Err(Error::MatrixParse {
                    line,
                    message: format!("expected {cols} entries, found {}", bits.len()),
                });
            }
            out.push(BitString::from_bits(bits));
        }
        if out.len() != rows {
            return Err(Error::MatrixParse {
                line: 0,
                message: format!("expected {rows} rows, found {}", out.len()),
            });
        }
        Ok(Gf2Matrix { cols, rows: out })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows.len(), self.cols);
        for r in &self.rows {
            let line: Vec<&str> = r.iter().map(|b| if b { "1" } else { "0" }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

pub(crate) fn parse_header(line: usize, header: &str) -> Result<(usize, usize)> {
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::MatrixParse {
            line,
            message: format!("header must be `rows cols`, found {header:?}"),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::MatrixParse {
            line,
            message: format!("bad dimension {s:?}: {e}"),
        })
    };
    Ok((parse(dims[0])?, parse(dims[1])?))
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Matrix[{}x{}]", self.rows.len(), self.cols)?;
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

/// Syndrome `ξ = x P_Cᵀ`.
pub fn syndrome(x: &BitString, pc: &Gf2Matrix) -> Result<BitString> {
    pc.mul_transpose(x)
}

/// Final key `k = x P_Kᵀ`.
pub fn apply_key_map(x: &BitString, pk: &Gf2Matrix) -> Result<BitString> {
    pk.mul_transpose(x)
}

/// Rank over F_2 by Gaussian elimination.
pub fn rank(m: &Gf2Matrix) -> usize {
    let mut rows: Vec<BitString> = m.rows.clone();
    let mut rank = 0;
    for col in 0..m.cols {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Parity-check matrix `P_C` (r x n) and privacy-amplification matrix
/// `P_K` (m x n) whose stacked rows are linearly independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCodeSpec {
    pc: Gf2Matrix,
    pk: Gf2Matrix,
}

impl LinearCodeSpec {
    pub fn new(pc: Gf2Matrix, pk: Gf2Matrix) -> Result<Self> {
        let stacked = pc.stack(&pk)?;
        let expected = stacked.num_rows();
        let r = rank(&stacked);
        if r != expected {
            return Err(Error::NotFullRank { rank: r, expected });
        }
        Ok(LinearCodeSpec { pc, pk })
    }

    /// Rejection-samples fair-coin `(r+m) x n` matrices until the rows are
    /// independent; the first `r` rows become `P_C`.
    pub fn random<R: Rng + ?Sized>(n: usize, r: usize, m: usize, rng: &mut R) -> Result<Self> {
        if r + m > n {
            return Err(Error::OutOfDomain(format!(
                "r + m = {} exceeds n = {n}; rows cannot be independent",
                r + m
            )));
        }
        loop {
            let all = Gf2Matrix::random(r + m, n, rng);
            if rank(&all) == r + m {
                let (pc, pk) = all.rows.split_at(r);
                return Ok(LinearCodeSpec {
                    pc: Gf2Matrix::from_rows(pc.to_vec(), n)?,
                    pk: Gf2Matrix::from_rows(pk.to_vec(), n)?,
                });
            }
        }
    }

    pub fn pc(&self) -> &Gf2Matrix {
        &self.pc
    }

    pub fn pk(&self) -> &Gf2Matrix {
        &self.pk
    }

    pub fn n(&self) -> usize {
        self.pc.num_cols()
    }

    pub fn r(&self) -> usize {
        self.pc.num_rows()
    }

    pub fn m(&self) -> usize {
        self.pk.num_rows()
    }

    /// `v_1..v_{r+m}`: parity rows followed by key rows.
    pub fn stacked_rows(&self) -> Vec<BitString> {
        self.pc.rows.iter().chain(&self.pk.rows).cloned().collect()
    }

    /// `d_{r,m}` for this code.
    pub fn drm(&self) -> Result<usize> {
        code_distance_drm(&self.stacked_rows(), self.r(), self.m())
    }

    /// Minimum distance of the kernel of `P_C`, by enumerating codewords.
    /// Returns `None` for the trivial code `{0}`.
    pub fn min_distance(&self) -> Result<Option<usize>> {
        kernel_min_distance(&self.pc)
    }
}

/// `d_{r,m} = min_{r <= r' < r+m} d_H(v_{r'+1}, Span{v_1..v_{r'}})`.
///
/// Spans are enumerated exhaustively in Gray-code order, so `r + m` is capped
/// at [`DRM_SPAN_CAP`].
pub fn code_distance_drm(vectors: &[BitString], r: usize, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::OutOfDomain("d_{r,m} needs m >= 1".into()));
    }
    if vectors.len() != r + m {
        return Err(Error::DimensionMismatch {
            expected: r + m,
            actual: vectors.len(),
        });
    }
    if r + m > DRM_SPAN_CAP {
        return Err(Error::TooLarge(format!(
            "r + m = {} exceeds the span enumeration cap {DRM_SPAN_CAP}",
            r + m
        )));
    }
    let n = vectors[0].len();
    for v in vectors {
        check_len(n, v.len())?;
    }
    let mut best = usize::MAX;
    for rp in r..r + m {
        let target = &vectors[rp];
        // Walk Span{v_1..v_rp} in Gray-code order: one XOR per step.
        let mut u = BitString::zeros(n);
        let mut dist = target.weight();
        for step in 1u64..(1u64 << rp) {
            let flip = step.trailing_zeros() as usize;
            u.xor_assign(&vectors[flip]);
            dist = dist.min(target.hamming_distance(&u)?);
        }
        best = best.min(dist);
    }
    Ok(best)
}

/// Minimum Hamming weight of a nonzero element of `ker(pc)`.
pub fn kernel_min_distance(pc: &Gf2Matrix) -> Result<Option<usize>> {
    let n = pc.num_cols();
    if n > 24 {
        return Err(Error::TooLarge(format!(
            "minimum distance enumeration over 2^{n} words"
        )));
    }
    let cols: Vec<u64> = (0..n).map(|j| column_mask(pc, j)).collect();
    let mut best: Option<usize> = None;
    // Gray-code walk over all words, tracking the syndrome incrementally.
    let mut syn = 0u64;
    let mut word = 0u64;
    for step in 1u64..(1u64 << n) {
        let j = step.trailing_zeros() as usize;
        word ^= 1 << j;
        syn ^= cols[j];
        if syn == 0 {
            let w = word.count_ones() as usize;
            best = Some(best.map_or(w, |b| b.min(w)));
        }
    }
    Ok(best)
}

fn column_mask(pc: &Gf2Matrix, j: usize) -> u64 {
    let mut mask = 0u64;
    for i in 0..pc.num_rows() {
        if pc.get(i, j) {
            mask |= 1 << i;
        }
    }
    mask
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of error patterns the decoder may have to examine in the worst case.
pub fn decode_candidate_bound(n: usize, r: usize) -> u64 {
    let mut total: u64 = 0;
    for w in 0..=r.min(n) {
        total = total.saturating_add(binomial_u64(n as u64, w as u64));
    }
    total
}

/// Checks that exhaustive coset decoding for this parity check stays under
/// [`DECODE_CANDIDATE_CAP`].
pub fn check_decodable(pc: &Gf2Matrix) -> Result<()> {
    let bound = decode_candidate_bound(pc.num_cols(), pc.num_rows());
    if pc.num_rows() > 63 || bound > DECODE_CANDIDATE_CAP {
        return Err(Error::TooLarge(format!(
            "coset decoding of a {}x{} parity check may visit {bound} patterns (cap {DECODE_CANDIDATE_CAP})",
            pc.num_rows(),
            pc.num_cols()
        )));
    }
    Ok(())
}

/// Returns `x̂` closest to `y` with `x̂ P_Cᵀ = target_syndrome`.
///
/// Error patterns are searched by increasing weight; among minimum-weight
/// patterns the lexicographically smallest bit string wins.
pub fn decode_to_coset_leader(y: &BitString, pc: &Gf2Matrix, target_syndrome: &BitString) -> Result<BitString> {
    check_len(pc.num_cols(), y.len())?;
    check_len(pc.num_rows(), target_syndrome.len())?;
    check_decodable(pc)?;
    let n = y.len();
    let cols: Vec<u64> = (0..n).map(|j| column_mask(pc, j)).collect();
    let want = syndrome(y, pc)?.to_u64() ^ target_syndrome.to_u64();

    for w in 0..=n {
        if let Some(support) = smallest_pattern_of_weight(&cols, want, w) {
            let mut x = y.clone();
            for j in support {
                x.flip(j);
            }
            return Ok(x);
        }
    }
    // Unreachable when pc has full row rank; a rank-deficient pc can leave
    // the target coset empty.
    Err(Error::OutOfDomain(format!(
        "syndrome {target_syndrome} is not reachable with this parity check"
    )))
}

/// Lexicographically smallest weight-`w` pattern with the given syndrome.
///
/// Under index-0-first string order the smallest pattern puts its ones as far
/// right as possible, so positions are chosen from the right: each candidate
/// support is visited in increasing lexicographic order of the bit string and
/// the first match is the answer.
fn smallest_pattern_of_weight(cols: &[u64], want: u64, w: usize) -> Option<Vec<usize>> {
    let n = cols.len();
    if w > n {
        return None;
    }
    if w == 0 {
        return (want == 0).then(Vec::new);
    }
    // Mirror indices so that "smallest string" becomes colex order on the
    // mirrored positions, which is what the standard combination successor
    // below enumerates when positions are sorted descending.
    let mut pos: Vec<usize> = (0..w).collect(); // mirrored positions, ascending
    loop {
        let syn = pos.iter().fold(0u64, |acc, &p| acc ^ cols[n - 1 - p]);
        if syn == want {
            let mut support: Vec<usize> = pos.iter().map(|&p| n - 1 - p).collect();
            support.sort_unstable();
            return Some(support);
        }
        // Colex successor: find the lowest index that can advance.
        let mut i = 0;
        while i < w {
            let limit = if i + 1 < w { pos[i + 1] } else { n };
            if pos[i] + 1 < limit {
                pos[i] += 1;
                for (k, p) in pos.iter_mut().enumerate().take(i) {
                    *p = k;
                }
                break;
            }
            i += 1;
        }
        if i == w {
            return None;
        }
    }
}
