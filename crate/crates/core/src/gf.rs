//! Binary extension fields GF(2^8) and GF(2^16) and the dense linear algebra
//! the codec needs: rank, solve, inverse and seeded random matrices.
//!
//! Elements are carried as plain `u16` values regardless of width; a
//! [`FieldWidth`] selects the arithmetic. Multiplication goes through
//! log/antilog tables built once per width.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A field element. Only the low `w` bits are meaningful.
pub type FieldElement = u16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("matrix is singular (rank {rank} < {dim})")]
    SingularMatrix { rank: usize, dim: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FieldWidth {
    W8,
    #[default]
    W16,
}

impl FieldWidth {
    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            8 => Some(FieldWidth::W8),
            16 => Some(FieldWidth::W16),
            _ => None,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            FieldWidth::W8 => 8,
            FieldWidth::W16 => 16,
        }
    }

    /// Bytes used to serialize one element (and one payload symbol).
    pub fn symbol_bytes(self) -> usize {
        match self {
            FieldWidth::W8 => 1,
            FieldWidth::W16 => 2,
        }
    }

    /// Number of field elements, `2^w`.
    pub fn order(self) -> usize {
        1 << self.bits()
    }

    pub fn field(self) -> &'static Field {
        Field::get(self)
    }
}

/// Log/antilog tables for one field width.
pub struct Field {
    width: FieldWidth,
    // exp has 2*(q-1) entries so that exp[log a + log b] needs no reduction.
    exp: Vec<u16>,
    log: Vec<u16>,
}

// x^8 + x^4 + x^3 + x^2 + 1 and x^16 + x^12 + x^3 + x + 1; 2 generates both.
const POLY_W8: u32 = 0x11d;
const POLY_W16: u32 = 0x1100b;

static GF8: OnceLock<Field> = OnceLock::new();
static GF16: OnceLock<Field> = OnceLock::new();

impl Field {
    pub fn get(width: FieldWidth) -> &'static Field {
        match width {
            FieldWidth::W8 => GF8.get_or_init(|| Field::build(FieldWidth::W8, POLY_W8)),
            FieldWidth::W16 => GF16.get_or_init(|| Field::build(FieldWidth::W16, POLY_W16)),
        }
    }

    fn build(width: FieldWidth, poly: u32) -> Field {
        let q = width.order();
        let mut exp = vec![0u16; 2 * (q - 1)];
        let mut log = vec![0u16; q];
        let mut x: u32 = 1;
        for i in 0..q - 1 {
            exp[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (q as u32) != 0 {
                x ^= poly;
            }
        }
        assert_eq!(x, 1, "reduction polynomial is not primitive");
        for i in q - 1..2 * (q - 1) {
            exp[i] = exp[i - (q - 1)];
        }
        Field { width, exp, log }
    }

    pub fn width(&self) -> FieldWidth {
        self.width
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a == 0 {
            return None;
        }
        let q1 = self.width.order() - 1;
        Some(self.exp[(q1 - self.log[a as usize] as usize) % q1])
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Option<FieldElement> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        match self.width {
            FieldWidth::W8 => rng.random::<u8>() as u16,
            FieldWidth::W16 => rng.random::<u16>(),
        }
    }

    /// `dst += c * src` symbol-wise over packed little-endian payload bytes.
    pub fn mul_acc_slice(&self, dst: &mut [u8], src: &[u8], c: FieldElement) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        match self.width {
            FieldWidth::W8 => {
                if c == 1 {
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
                    return;
                }
                let mut table = [0u8; 256];
                for (x, slot) in table.iter_mut().enumerate() {
                    *slot = self.mul(c, x as u16) as u8;
                }
                dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= table[*s as usize]);
            }
            FieldWidth::W16 => {
                let lc = self.log[c as usize] as usize;
                for (d, s) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
                    let x = u16::from_le_bytes([s[0], s[1]]);
                    if x == 0 {
                        continue;
                    }
                    let p = self.exp[lc + self.log[x as usize] as usize];
                    let cur = u16::from_le_bytes([d[0], d[1]]) ^ p;
                    d.copy_from_slice(&cur.to_le_bytes());
                }
            }
        }
    }

    /// `dst += c * src` element-wise over coefficient vectors.
    pub fn mul_acc(&self, dst: &mut [FieldElement], src: &[FieldElement], c: FieldElement) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d ^= self.mul(c, s);
        }
    }
}

/// Dense row-major matrix over GF(2^w).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffMatrix {
    width: FieldWidth,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl CoeffMatrix {
    pub fn zeros(width: FieldWidth, rows: usize, cols: usize) -> Self {
        Self { width, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(width: FieldWidth, n: usize) -> Self {
        let mut m = Self::zeros(width, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(width: FieldWidth, rows: &[Vec<FieldElement>]) -> Result<Self, GfError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GfError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { width, rows: rows.len(), cols, data: rows.concat() })
    }

    /// Uniformly random entries drawn from a ChaCha8 stream seeded with `seed`.
    pub fn random(width: FieldWidth, rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(width, rows, cols, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(width: FieldWidth, rows: usize, cols: usize, rng: &mut R) -> Self {
        let f = width.field();
        let data = (0..rows * cols).map(|_| f.random_element(rng)).collect();
        Self { width, rows, cols, data }
    }

    pub fn width(&self) -> FieldWidth {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, GfError> {
        if x.len() != self.cols {
            return Err(GfError::DimensionMismatch(format!("{} columns vs vector of {}", self.cols, x.len())));
        }
        let f = self.width.field();
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).fold(0, |acc, (&a, &b)| acc ^ f.mul(a, b)))
            .collect())
    }

    pub fn mul(&self, other: &CoeffMatrix) -> Result<CoeffMatrix, GfError> {
        if self.cols != other.rows {
            return Err(GfError::DimensionMismatch(format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let f = self.width.field();
        let mut out = CoeffMatrix::zeros(self.width, self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                f.mul_acc(dst, other.row(k), self.get(r, k));
            }
        }
        Ok(out)
    }

    /// Dimension of the row space.
    pub fn rank(&self) -> usize {
        let mut basis = RowBasis::new(self.width, self.cols);
        for r in 0..self.rows {
            basis.insert(self.row(r));
        }
        basis.rank()
    }

    /// Solves `self * x = b` for square full-rank `self`.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Vec<FieldElement>, GfError> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(GfError::DimensionMismatch(format!("{}x{} system with rhs of {}", self.rows, self.cols, b.len())));
        }
        let inv = self.inverse()?;
        inv.mul_vec(b)
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<CoeffMatrix, GfError> {
        if self.rows != self.cols {
            return Err(GfError::DimensionMismatch(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let f = self.width.field();
        let mut a = self.clone();
        let mut inv = CoeffMatrix::identity(self.width, n);
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| a.get(r, col) != 0) else {
                return Err(GfError::SingularMatrix { rank: self.rank(), dim: n });
            };
            a.swap_rows(col, p);
            inv.swap_rows(col, p);
            let pinv = f.inv(a.get(col, col)).expect("pivot is nonzero");
            for c in 0..n {
                a.set(col, c, f.mul(a.get(col, c), pinv));
                inv.set(col, c, f.mul(inv.get(col, c), pinv));
            }
            for r in 0..n {
                let factor = a.get(r, col);
                if r == col || factor == 0 {
                    continue;
                }
                let (arow, prow) = two_rows(&mut a.data, n, r, col);
                f.mul_acc(arow, prow, factor);
                let (irow, iprow) = two_rows(&mut inv.data, n, r, col);
                f.mul_acc(irow, iprow, factor);
            }
        }
        Ok(inv)
    }
}

fn two_rows(data: &mut [FieldElement], cols: usize, dst: usize, src: usize) -> (&mut [FieldElement], &[FieldElement]) {
    debug_assert_ne!(dst, src);
    if dst < src {
        let (lo, hi) = data.split_at_mut(src * cols);
        (&mut lo[dst * cols..(dst + 1) * cols], &hi[..cols])
    } else {
        let (lo, hi) = data.split_at_mut(dst * cols);
        (&mut hi[..cols], &lo[src * cols..(src + 1) * cols])
    }
}

/// Incrementally maintained reduced basis of a row space.
///
/// Used for rank checks and for picking a maximal independent subset of
/// coded blocks during decoding.
#[derive(Debug, Clone)]
pub struct RowBasis {
    width: FieldWidth,
    cols: usize,
    // (pivot column, row normalized so the pivot entry is 1)
    rows: Vec<(usize, Vec<FieldElement>)>,
}

impl RowBasis {
    pub fn new(width: FieldWidth, cols: usize) -> Self {
        Self { width, cols, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.cols
    }

    fn reduce(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        let f = self.width.field();
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            let c = v[*pivot];
            if c != 0 {
                f.mul_acc(&mut v, row, c);
            }
        }
        v
    }

    /// True if `v` already lies in the span.
    pub fn contains(&self, v: &[FieldElement]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v` to the basis; returns whether it was independent.
    pub fn insert(&mut self, v: &[FieldElement]) -> bool {
        assert_eq!(v.len(), self.cols, "row length mismatch");
        let f = self.width.field();
        let mut v = self.reduce(v);
        let Some(pivot) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = f.inv(v[pivot]).expect("nonzero pivot");
        v.iter_mut().for_each(|x| *x = f.mul(*x, inv));
        // Keep existing rows reduced against the new pivot.
        for (_, row) in self.rows.iter_mut() {
            let c = row[pivot];
            if c != 0 {
                f.mul_acc(row, &v, c);
            }
        }
        self.rows.push((pivot, v));
        true
    }
}
