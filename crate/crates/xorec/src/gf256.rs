//! Arithmetic over GF(2^8) and the lowering of coding matrices to bitmatrices.
//!
//! The field is fixed to the primitive polynomial `x^8 + x^4 + x^3 + x^2 + 1`
//! (0x11D) with primitive element `α = 0x02`, the same parameters ISA-L uses,
//! so coding matrices here are bit-compatible with that library.
//!
//! The bridge to XOR programs is [`tilde`]: every byte `x` becomes the 8×8
//! matrix over GF(2) of "multiply by x" in the polynomial basis. Applying it
//! cellwise ([`GfMatrix::to_bitmatrix`]) turns a coding matrix over GF(2^8)
//! into a bitmatrix whose rows are plain XOR equations over byte arrays.

use std::fmt;
use std::sync::LazyLock;

use thiserror::Error;

/// The primitive polynomial, as the bit pattern `1_0001_1101`.
pub const PRIMITIVE_POLY: u16 = 0x11D;

/// The primitive element `α` generating the multiplicative group.
pub const ALPHA: GfElem = GfElem(0x02);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular")]
    Singular,
    #[error("invalid dimensions: {0}")]
    Dimension(String),
}

/// One element of GF(2^8): a byte read as a polynomial over GF(2) mod 0x11D.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GfElem(pub u8);

impl fmt::Debug for GfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

/// Polynomial product mod 0x11D by shift-and-reduce.
///
/// This is the reference routine: the multiplication table is built from it
/// once, and the self-test suite re-derives the table from it to detect
/// corruption.
pub fn mul_shift_reduce(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    let mut a = a as u16;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= PRIMITIVE_POLY;
        }
        b >>= 1;
    }
    acc as u8
}

/// 256×256 multiplication table.
pub struct MulTable(pub Box<[[u8; 256]; 256]>);

impl MulTable {
    /// Builds the table from [`mul_shift_reduce`].
    pub fn build() -> Self {
        let mut t = Box::new([[0u8; 256]; 256]);
        for a in 0..256 {
            for b in 0..256 {
                t[a][b] = mul_shift_reduce(a as u8, b as u8);
            }
        }
        MulTable(t)
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.0[a as usize][b as usize]
    }
}

static MUL_TABLE: LazyLock<MulTable> = LazyLock::new(MulTable::build);

/// The process-wide multiplication table (built once, racelessly).
pub fn mul_table() -> &'static MulTable {
    &MUL_TABLE
}

impl GfElem {
    pub const ZERO: GfElem = GfElem(0);
    pub const ONE: GfElem = GfElem(1);

    /// Field addition: bytewise XOR. Self-inverse.
    #[inline]
    pub fn add(self, rhs: GfElem) -> GfElem {
        GfElem(self.0 ^ rhs.0)
    }

    /// Field multiplication via the precomputed table.
    #[inline]
    pub fn mul(self, rhs: GfElem) -> GfElem {
        GfElem(mul_table().mul(self.0, rhs.0))
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(self) -> Result<GfElem, GfError> {
        if self.0 == 0 {
            return Err(GfError::ZeroInverse);
        }
        // a^254 = a^-1 in a field of order 256
        Ok(self.pow(254))
    }

    pub fn pow(self, mut e: u32) -> GfElem {
        let mut base = self;
        let mut acc = GfElem::ONE;
        while e > 0 {
            if e & 1 != 0 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }
}

impl std::ops::Add for GfElem {
    type Output = GfElem;
    fn add(self, rhs: GfElem) -> GfElem {
        GfElem::add(self, rhs)
    }
}

impl std::ops::Mul for GfElem {
    type Output = GfElem;
    fn mul(self, rhs: GfElem) -> GfElem {
        GfElem::mul(self, rhs)
    }
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<GfElem>,
}

impl fmt::Debug for GfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GfMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, " {:02x}", self.get(r, c).0)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl GfMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        GfMatrix { rows, cols, cells: vec![GfElem::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, GfElem::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GfElem>>) -> Result<Self, GfError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(GfError::Dimension("ragged rows".into()));
        }
        Ok(GfMatrix { rows: r, cols: c, cells: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> GfElem {
        self.cells[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: GfElem) {
        self.cells[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[GfElem] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    /// New matrix keeping only the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> GfMatrix {
        let mut m = GfMatrix::zero(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            for c in 0..self.cols {
                m.set(r, c, self.get(i, c));
            }
        }
        m
    }

    pub fn mat_mul(&self, rhs: &GfMatrix) -> Result<GfMatrix, GfError> {
        if self.cols != rhs.rows {
            return Err(GfError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = GfMatrix::zero(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == GfElem::ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = out.get(r, c).add(a.mul(rhs.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[GfElem]) -> Result<Vec<GfElem>, GfError> {
        if v.len() != self.cols {
            return Err(GfError::Dimension("vector length".into()));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = GfElem::ZERO;
                for c in 0..self.cols {
                    acc = acc.add(self.get(r, c).mul(v[c]));
                }
                acc
            })
            .collect())
    }

    /// Gauss-Jordan inverse with first-nonzero pivoting (there are no
    /// magnitudes in a finite field to prefer).
    pub fn invert(&self) -> Result<GfMatrix, GfError> {
        if self.rows != self.cols {
            return Err(GfError::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = GfMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| a.get(r, col) != GfElem::ZERO)
                .ok_or(GfError::Singular)?;
            if pivot != col {
                for c in 0..n {
                    let (x, y) = (a.get(col, c), a.get(pivot, c));
                    a.set(col, c, y);
                    a.set(pivot, c, x);
                    let (x, y) = (inv.get(col, c), inv.get(pivot, c));
                    inv.set(col, c, y);
                    inv.set(pivot, c, x);
                }
            }
            let scale = a.get(col, col).inv().expect("pivot is nonzero");
            for c in 0..n {
                a.set(col, c, a.get(col, c).mul(scale));
                inv.set(col, c, inv.get(col, c).mul(scale));
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == GfElem::ZERO {
                    continue;
                }
                for c in 0..n {
                    let v = a.get(r, c).add(f.mul(a.get(col, c)));
                    a.set(r, c, v);
                    let v = inv.get(r, c).add(f.mul(inv.get(col, c)));
                    inv.set(r, c, v);
                }
            }
        }
        Ok(inv)
    }

    /// Cellwise [`tilde`]: the (8·rows)×(8·cols) bitmatrix whose 8×8 block
    /// (i, j) is `tilde(self[i][j])`.
    pub fn to_bitmatrix(&self) -> BitMatrix {
        let mut b = BitMatrix::zero(8 * self.rows, 8 * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let t = tilde(self.get(r, c));
                for i in 0..8 {
                    for j in 0..8 {
                        if t.get(i, j) {
                            b.set(8 * r + i, 8 * c + j, true);
                        }
                    }
                }
            }
        }
        b
    }
}

/// An (n+p)×n Vandermonde matrix: row i (1-based) is `(1, α^i, …, (α^i)^(n-1))`.
pub fn vandermonde(n: usize, p: usize) -> Result<GfMatrix, GfError> {
    if n < 1 || n + p > 255 {
        return Err(GfError::Dimension(format!("vandermonde({n}, {p})")));
    }
    let mut m = GfMatrix::zero(n + p, n);
    for r in 0..n + p {
        let x = ALPHA.pow(r as u32 + 1);
        let mut acc = GfElem::ONE;
        for c in 0..n {
            m.set(r, c, acc);
            acc = acc.mul(x);
        }
    }
    Ok(m)
}

/// Reduced (standard) form of a stacked coding matrix: the top n×n block `V`
/// becomes the identity and the lower p×n block `M` becomes `M·V⁻¹`, so data
/// shards pass through verbatim while every n-row submatrix stays invertible.
pub fn systematize(v: &GfMatrix) -> Result<GfMatrix, GfError> {
    let n = v.cols();
    if v.rows() < n {
        return Err(GfError::Dimension("fewer rows than columns".into()));
    }
    let top: Vec<usize> = (0..n).collect();
    let inv = v.select_rows(&top).invert()?;
    let mut out = GfMatrix::identity(n);
    out.rows = v.rows();
    out.cells.resize(v.rows() * n, GfElem::ZERO);
    let bottom: Vec<usize> = (n..v.rows()).collect();
    let reduced = v.select_rows(&bottom).mat_mul(&inv)?;
    for r in 0..reduced.rows() {
        for c in 0..n {
            out.set(n + r, c, reduced.get(r, c));
        }
    }
    Ok(out)
}

/// Dense row-major matrix over GF(2); dimensions are multiples of 8.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    // one row = cols/8 bytes, bit c stored at byte c/8, bit position c%8
    bytes: Vec<u8>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        assert!(rows % 8 == 0 && cols % 8 == 0, "bitmatrix dimensions must be multiples of 8");
        BitMatrix { rows, cols, bytes: vec![0; rows * cols / 8] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn stride(&self) -> usize {
        self.cols / 8
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bytes[r * self.stride() + c / 8] >> (c % 8) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let s = self.stride();
        if v {
            self.bytes[r * s + c / 8] |= 1 << (c % 8);
        } else {
            self.bytes[r * s + c / 8] &= !(1 << (c % 8));
        }
    }

    /// Set columns of row `r`, ascending.
    pub fn row_columns(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(r, c)).collect()
    }

    pub fn row_popcount(&self, r: usize) -> usize {
        let s = self.stride();
        self.bytes[r * s..(r + 1) * s].iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Product with a column bit vector of length `cols`.
    pub fn mul_bits(&self, v: &[bool]) -> Vec<bool> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).filter(|&c| self.get(r, c) && v[c]).count() % 2 == 1)
            .collect()
    }
}

/// Maps a byte to its 8×1 bit column, most significant bit first: the
/// coefficient of x^7 lands in row 0.
pub fn byte_to_bits(x: u8) -> [bool; 8] {
    std::array::from_fn(|i| x >> (7 - i) & 1 == 1)
}

/// Inverse of [`byte_to_bits`].
pub fn bits_to_byte(bits: &[bool]) -> u8 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
}

/// The 8×8 bitmatrix of multiplication by `x`: column j is the bit image of
/// `x · 2^(7−j)`, so `x ·_GF(2^8) y` equals `tilde(x)` applied to the bit
/// image of `y` under [`byte_to_bits`].
pub fn tilde(x: GfElem) -> BitMatrix {
    let mut m = BitMatrix::zero(8, 8);
    for j in 0..8 {
        let col = x.mul(GfElem(1 << (7 - j))).0;
        for i in 0..8 {
            if col >> (7 - i) & 1 == 1 {
                m.set(i, j, true);
            }
        }
    }
    m
}

/// The systematic RS(n, p) generator, bit-compatible with ISA-L: the
/// identity stacked over p Vandermonde-style parity rows
/// `(1, g, g², …, g^(n−1))` with `g = α^j` for parity row j.
pub fn rs_coding_matrix(n: usize, p: usize) -> Result<GfMatrix, GfError> {
    if n < 1 || n + p > 255 {
        return Err(GfError::Dimension(format!("rs_coding_matrix({n}, {p})")));
    }
    let mut m = GfMatrix::zero(n + p, n);
    for i in 0..n {
        m.set(i, i, GfElem::ONE);
    }
    for j in 0..p {
        let g = ALPHA.pow(j as u32);
        let mut acc = GfElem::ONE;
        for c in 0..n {
            m.set(n + j, c, acc);
            acc = acc.mul(g);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn add_basics() {
        assert_eq!(GfElem(0x00).add(GfElem(0x5A)), GfElem(0x5A));
        assert_eq!(GfElem(0x5A).add(GfElem(0x5A)), GfElem(0x00));
        assert_eq!(GfElem(0x53).add(GfElem(0xCA)), GfElem(0x99));
    }

    #[test]
    fn mul_identity_and_reduction() {
        for x in 0..=255u8 {
            assert_eq!(GfElem(0x01).mul(GfElem(x)), GfElem(x));
        }
        // 0x02 * 0x80 = 0x100, reduced by 0x11D
        assert_eq!(GfElem(0x02).mul(GfElem(0x80)), GfElem(0x1D));
    }

    #[test]
    fn mul_commutes() {
        for a in 0..=255u8 {
            for b in a..=255u8 {
                assert_eq!(GfElem(a).mul(GfElem(b)), GfElem(b).mul(GfElem(a)));
            }
        }
    }

    #[test]
    fn inverse_law_exhaustive() {
        assert_eq!(GfElem(0x01).inv(), Ok(GfElem(0x01)));
        assert_eq!(GfElem(0x00).inv(), Err(GfError::ZeroInverse));
        for a in 1..=255u8 {
            // cross-check against exhaustive search
            let brute = (1..=255u8).find(|&b| GfElem(a).mul(GfElem(b)) == GfElem::ONE).unwrap();
            assert_eq!(GfElem(a).inv().unwrap(), GfElem(brute));
        }
    }

    #[test]
    fn field_axioms_random_triples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (a, b, c) =
                (GfElem(rng.gen::<u8>()), GfElem(rng.gen::<u8>()), GfElem(rng.gen::<u8>()));
            assert_eq!(a.add(b.add(c)), a.add(b).add(c));
            assert_eq!(a.mul(b.mul(c)), a.mul(b).mul(c));
            assert_eq!(a.mul(b.add(c)), a.mul(b).add(a.mul(c)));
        }
    }

    #[test]
    fn vandermonde_shape() {
        let m = vandermonde(1, 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert_eq!(m.get(0, 0), GfElem::ONE);

        let m = vandermonde(10, 4).unwrap();
        for r in 0..14 {
            assert_eq!(m.get(r, 0), GfElem::ONE);
        }
        // row 1 (1-based) is the powers of α itself
        for c in 0..10 {
            assert_eq!(m.get(0, c), ALPHA.pow(c as u32));
        }
        assert!(vandermonde(0, 4).is_err());
        assert!(vandermonde(200, 100).is_err());
    }

    #[test]
    fn systematize_identity_and_vandermonde() {
        let id = GfMatrix::identity(5);
        assert_eq!(systematize(&id).unwrap(), id);

        let v = systematize(&vandermonde(10, 4).unwrap()).unwrap();
        for r in 0..10 {
            for c in 0..10 {
                let want = if r == c { GfElem::ONE } else { GfElem::ZERO };
                assert_eq!(v.get(r, c), want);
            }
        }
    }

    #[test]
    fn invert_roundtrip() {
        let id = GfMatrix::identity(4);
        assert_eq!(id.invert().unwrap(), id);

        let mut diag = GfMatrix::zero(3, 3);
        for i in 0..3 {
            diag.set(i, i, GfElem(7 + i as u8));
        }
        let inv = diag.invert().unwrap();
        for i in 0..3 {
            assert_eq!(inv.get(i, i), GfElem(7 + i as u8).inv().unwrap());
        }

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let m = loop {
            let mut m = GfMatrix::zero(10, 10);
            for r in 0..10 {
                for c in 0..10 {
                    m.set(r, c, GfElem(rng.gen::<u8>()));
                }
            }
            if m.invert().is_ok() {
                break m;
            }
        };
        assert_eq!(m.mat_mul(&m.invert().unwrap()).unwrap(), GfMatrix::identity(10));
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = GfMatrix::zero(3, 3);
        assert_eq!(m.invert(), Err(GfError::Singular));
    }

    #[test]
    fn tilde_basics() {
        assert_eq!(tilde(GfElem(0x01)), BitMatrix::identity(8));
        assert_eq!(tilde(GfElem(0x00)), BitMatrix::zero(8, 8));
    }

    #[test]
    fn tilde_is_ring_homomorphism() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let (x, y) = (GfElem(rng.gen::<u8>()), GfElem(rng.gen::<u8>()));
            // multiplicative: tilde(xy) = tilde(x)·tilde(y)
            let lhs = tilde(x.mul(y));
            let (tx, ty) = (tilde(x), tilde(y));
            for i in 0..8 {
                for j in 0..8 {
                    let prod = (0..8).filter(|&k| tx.get(i, k) && ty.get(k, j)).count() % 2 == 1;
                    assert_eq!(lhs.get(i, j), prod);
                }
            }
            // additive: tilde(x+y) = tilde(x) xor tilde(y)
            let sum = tilde(x.add(y));
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!(sum.get(i, j), tx.get(i, j) ^ ty.get(i, j));
                }
            }
        }
    }

    #[test]
    fn to_bitmatrix_blocks() {
        let id = GfMatrix::identity(3);
        assert_eq!(id.to_bitmatrix(), BitMatrix::identity(24));

        let mut one = GfMatrix::zero(1, 1);
        one.set(0, 0, GfElem(0x02));
        assert_eq!(one.to_bitmatrix(), tilde(GfElem(0x02)));
    }

    #[test]
    fn bitmatrix_product_matches_field_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut m = GfMatrix::zero(3, 3);
            for r in 0..3 {
                for c in 0..3 {
                    m.set(r, c, GfElem(rng.gen::<u8>()));
                }
            }
            let d: Vec<GfElem> = (0..3).map(|_| GfElem(rng.gen::<u8>())).collect();
            let want = m.mul_vec(&d).unwrap();

            let bits: Vec<bool> = d.iter().flat_map(|e| byte_to_bits(e.0)).collect();
            let got = m.to_bitmatrix().mul_bits(&bits);
            let got: Vec<GfElem> =
                got.chunks(8).map(|c| GfElem(bits_to_byte(c))).collect();
            assert_eq!(got, want);
        }
    }
}
