//! Dense integer matrices and Smith normal form.
//!
//! Entries are i128 with checked arithmetic: abelianized exponent vectors and
//! their products stay far below the 127-bit window at desk scale, and any
//! excursion outside it surfaces as an error instead of wrapping. The Smith
//! normal form works internally over arbitrary-precision integers, where
//! elimination can inflate entries freely, and converts back at the end.
//! Every call re-verifies L * A * R = D and the transform inverses by
//! multiplication before returning.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

impl std::fmt::Debug for IntMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(12) {
                write!(f, "{} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i128>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c));
        IntMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i128) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == i128::from(i == j)))
    }

    pub fn transpose(&self) -> IntMat {
        let mut out = IntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    fn mul_row_into(&self, rhs: &IntMat, i: usize, orow: &mut [i128]) -> Result<()> {
        for k in 0..self.cols {
            let a = self.get(i, k);
            if a == 0 {
                continue;
            }
            let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
            for (j, &b) in rrow.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let prod = a.checked_mul(b).ok_or_else(|| Error::Overflow {
                    context: "matrix product entry".into(),
                })?;
                orow[j] = orow[j].checked_add(prod).ok_or_else(|| Error::Overflow {
                    context: "matrix product accumulation".into(),
                })?;
            }
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &IntMat) -> Result<IntMat> {
        if self.cols != rhs.rows {
            return Err(Error::CompositionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = IntMat::zeros(self.rows, rhs.cols);
        let work = self.rows * self.cols * rhs.cols;
        #[cfg(feature = "parallel")]
        if work >= 1 << 18 {
            use rayon::prelude::*;
            let results: Vec<Result<()>> = out
                .data
                .par_chunks_mut(rhs.cols)
                .enumerate()
                .map(|(i, orow)| self.mul_row_into(rhs, i, orow))
                .collect();
            for r in results {
                r?;
            }
            return Ok(out);
        }
        let _ = work;
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            self.mul_row_into(rhs, i, orow)?;
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &IntMat) -> Result<IntMat> {
        self.zip(rhs, |a, b| a.checked_add(b))
    }

    pub fn sub(&self, rhs: &IntMat) -> Result<IntMat> {
        self.zip(rhs, |a, b| a.checked_sub(b))
    }

    fn zip(&self, rhs: &IntMat, f: impl Fn(i128, i128) -> Option<i128>) -> Result<IntMat> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::CompositionMismatch("entrywise op on mismatched shapes".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| {
                f(a, b).ok_or_else(|| Error::Overflow {
                    context: "entrywise arithmetic".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, k: i128) -> Result<IntMat> {
        let data = self
            .data
            .iter()
            .map(|&a| {
                a.checked_mul(k).ok_or_else(|| Error::Overflow {
                    context: "scalar multiple".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// FNV-1a over the shape and entries; stable witness fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.rows as u64);
        eat(self.cols as u64);
        for &v in &self.data {
            eat(v as u64);
            eat((v >> 64) as u64);
        }
        h
    }
}

/// Smith normal form L * A * R = D with unimodular transforms and their
/// inverses. The diagonal fits fixed-width words (invariant factors obey
/// determinant bounds); the transforms are arbitrary precision.
pub struct Snf {
    pub d: IntMat,
    pub l: ZMat,
    pub r: ZMat,
    pub linv: ZMat,
    pub rinv: ZMat,
}

impl Snf {
    /// Nonzero diagonal entries, in divisibility order.
    pub fn divisors(&self) -> Vec<i128> {
        let n = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| self.d.get(i, i))
            .filter(|&x| x != 0)
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.divisors().len()
    }
}

/// Dense matrix over arbitrary-precision integers; carries the unimodular
/// transforms of the Smith normal form, whose entries routinely outgrow
/// fixed-width words.
#[derive(Clone, PartialEq, Eq)]
pub struct ZMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for ZMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ZMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ZMat {
    pub fn from_int(m: &IntMat) -> Self {
        ZMat {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![BigInt::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigInt::from(1);
        }
        ZMat {
            rows: n,
            cols: n,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.rows {
            self.data.swap(k * self.cols + i, k * self.cols + j);
        }
    }

    /// rows (i1, i2) <- (x r1 + y r2, -vs r1 + us r2); unimodular when
    /// x us + y vs = 1
    fn combine_rows(&mut self, i1: usize, i2: usize, x: &BigInt, y: &BigInt, vs: &BigInt, us: &BigInt) {
        for t in 0..self.cols {
            let a = self.get(i1, t).clone();
            let b = self.get(i2, t).clone();
            self.data[i1 * self.cols + t] = x * &a + y * &b;
            self.data[i2 * self.cols + t] = us * &b - vs * &a;
        }
    }

    /// cols (j1, j2) <- (x c1 + y c2, -vs c1 + us c2)
    fn combine_cols(&mut self, j1: usize, j2: usize, x: &BigInt, y: &BigInt, vs: &BigInt, us: &BigInt) {
        for t in 0..self.rows {
            let a = self.get(t, j1).clone();
            let b = self.get(t, j2).clone();
            self.data[t * self.cols + j1] = x * &a + y * &b;
            self.data[t * self.cols + j2] = us * &b - vs * &a;
        }
    }

    /// row_i += q * row_j
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        for k in 0..self.cols {
            let t = self.get(j, k) * q;
            self.data[i * self.cols + k] += t;
        }
    }

    /// col_i += q * col_j
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        for k in 0..self.rows {
            let t = self.get(k, j) * q;
            self.data[k * self.cols + i] += t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            let v = -self.get(i, k);
            self.data[i * self.cols + k] = v;
        }
    }

    fn to_int(&self, context: &str) -> Result<IntMat> {
        let data = self
            .data
            .iter()
            .map(|x| {
                x.to_i128().ok_or_else(|| Error::Overflow {
                    context: format!("{context}: SNF transform entry exceeds i128"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntMat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn mul(&self, rhs: &ZMat) -> ZMat {
        let mut data = vec![BigInt::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    data[i * rhs.cols + j] += a * b;
                }
            }
        }
        ZMat {
            rows: self.rows,
            cols: rhs.cols,
            data,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j) == &BigInt::from(1)
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

}

/// Smith normal form over Z: L * A * R = D, diagonal with d_i | d_{i+1},
/// all d_i >= 0, L and R unimodular. The identity L A R = D and the
/// tracked inverses are re-verified by multiplication before returning.
///
/// Elimination uses extended-gcd 2x2 block transforms, which clear an entry
/// in one step and put the gcd on the pivot; entry growth stays polynomial,
/// unlike remainder-and-swap pivoting.
pub fn snf(a: &IntMat) -> Result<Snf> {
    let (nr, nc) = (a.rows, a.cols);
    let mut b = ZMat::from_int(a);
    let mut l = ZMat::identity(nr);
    let mut linv = ZMat::identity(nr);
    let mut r = ZMat::identity(nc);
    let mut rinv = ZMat::identity(nc);

    // clear b[i2, k] against the pivot b[i1, k]: a plain row subtraction
    // when the pivot divides it (never touches row i1), otherwise the
    // extended-gcd transform rows (i1, i2) <- (x i1 + y i2, -(v/g) i1 +
    // (u/g) i2), which replaces the pivot by the strictly smaller gcd
    let row_clear = |b: &mut ZMat, l: &mut ZMat, linv: &mut ZMat, i1: usize, i2: usize, k: usize| {
        let u = b.get(i1, k).clone();
        let v = b.get(i2, k).clone();
        if v.mod_floor(&u.abs()).is_zero() {
            let q = -(&v / &u);
            b.add_row(i2, i1, &q);
            l.add_row(i2, i1, &q);
            linv.add_col(i1, i2, &(-q));
        } else {
            let ext = u.extended_gcd(&v);
            let (g, x, y) = (ext.gcd, ext.x, ext.y);
            let us = &u / &g;
            let vs = &v / &g;
            b.combine_rows(i1, i2, &x, &y, &vs, &us);
            l.combine_rows(i1, i2, &x, &y, &vs, &us);
            // inverse transform on columns of linv: E^{-1} = [[us, -y], [vs, x]]
            linv.combine_cols(i1, i2, &us, &vs, &y, &x);
        }
    };
    let col_clear = |b: &mut ZMat, r: &mut ZMat, rinv: &mut ZMat, j1: usize, j2: usize, k: usize| {
        let u = b.get(k, j1).clone();
        let v = b.get(k, j2).clone();
        if v.mod_floor(&u.abs()).is_zero() {
            let q = -(&v / &u);
            b.add_col(j2, j1, &q);
            r.add_col(j2, j1, &q);
            rinv.add_row(j1, j2, &(-q));
        } else {
            let ext = u.extended_gcd(&v);
            let (g, x, y) = (ext.gcd, ext.x, ext.y);
            let us = &u / &g;
            let vs = &v / &g;
            b.combine_cols(j1, j2, &x, &y, &vs, &us);
            r.combine_cols(j1, j2, &x, &y, &vs, &us);
            rinv.combine_rows(j1, j2, &us, &vs, &y, &x);
        }
    };

    macro_rules! row_swap {
        ($i:expr, $j:expr) => {{
            b.swap_rows($i, $j);
            l.swap_rows($i, $j);
            linv.swap_cols($i, $j);
        }};
    }
    macro_rules! col_swap {
        ($i:expr, $j:expr) => {{
            b.swap_cols($i, $j);
            r.swap_cols($i, $j);
            rinv.swap_rows($i, $j);
        }};
    }
    macro_rules! row_add {
        ($i:expr, $j:expr, $q:expr) => {{
            let q = $q;
            b.add_row($i, $j, &q);
            l.add_row($i, $j, &q);
            linv.add_col($j, $i, &(-q));
        }};
    }

    let dim = nr.min(nc);
    for k in 0..dim {
        // minimal nonzero pivot in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..nr {
            for j in k..nc {
                if b.get(i, j).is_zero() {
                    continue;
                }
                match pivot {
                    Some((pi, pj)) if b.get(pi, pj).abs() <= b.get(i, j).abs() => {}
                    _ => pivot = Some((i, j)),
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        row_swap!(k, pi);
        col_swap!(k, pj);

        // alternate gcd-clearing of column k and row k; each full pass either
        // finishes or strictly divides the pivot, so it ends in O(log pivot)
        let max_passes = 64 + 8 * b.get(k, k).bits();
        let mut guard = 0u64;
        loop {
            guard += 1;
            if guard > max_passes {
                return Err(Error::Internal("SNF clearing pass did not converge".into()));
            }
            for i in (k + 1)..nr {
                if !b.get(i, k).is_zero() {
                    row_clear(&mut b, &mut l, &mut linv, k, i, k);
                }
            }
            let mut clean = true;
            for j in (k + 1)..nc {
                if !b.get(k, j).is_zero() {
                    col_clear(&mut b, &mut r, &mut rinv, k, j, k);
                    clean = false;
                }
            }
            // column transforms may have re-populated column k
            if clean && ((k + 1)..nr).all(|i| b.get(i, k).is_zero()) {
                break;
            }
        }

        // enforce divisibility of the trailing block by the pivot
        let max_rounds = 64 + 8 * b.get(k, k).bits();
        let mut rounds = 0u64;
        loop {
            rounds += 1;
            if rounds > max_rounds {
                return Err(Error::Internal("SNF divisibility rounds did not converge".into()));
            }
            let mut offender = None;
            'scan: for i in (k + 1)..nr {
                for j in (k + 1)..nc {
                    if !b.get(i, j).mod_floor(&b.get(k, k).abs()).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            let Some(i) = offender else { break };
            // fold the offending row into row k; re-clearing replaces the
            // pivot by a proper divisor, so this also ends in O(log pivot)
            row_add!(k, i, BigInt::from(1));
            let max_passes = 64 + 8 * b.get(k, k).bits();
            let mut guard = 0u64;
            loop {
                guard += 1;
                if guard > max_passes {
                    return Err(Error::Internal("SNF divisibility pass did not converge".into()));
                }
                let mut clean = true;
                for j in (k + 1)..nc {
                    if !b.get(k, j).is_zero() {
                        col_clear(&mut b, &mut r, &mut rinv, k, j, k);
                        clean = false;
                    }
                }
                for i2 in (k + 1)..nr {
                    if !b.get(i2, k).is_zero() {
                        row_clear(&mut b, &mut l, &mut linv, k, i2, k);
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
        }

        if b.get(k, k).is_negative() {
            b.negate_row(k);
            l.negate_row(k);
            linv.negate_col_inplace(k);
        }
    }

    // re-verify everything by multiplication
    let a_big = ZMat::from_int(a);
    if !l.mul(&a_big).mul(&r).eq(&b) {
        return Err(Error::Internal("SNF verification L*A*R != D failed".into()));
    }
    if !l.mul(&linv).is_identity() || !r.mul(&rinv).is_identity() {
        return Err(Error::Internal("SNF transform inverses failed verification".into()));
    }
    for i in 1..dim {
        let prev = b.get(i - 1, i - 1);
        let cur = b.get(i, i);
        if !cur.is_zero() && (prev.is_zero() || !cur.mod_floor(&prev.abs()).is_zero()) {
            return Err(Error::Internal("SNF divisibility chain broken".into()));
        }
    }

    Ok(Snf {
        d: b.to_int("D")?,
        l,
        r,
        linv,
        rinv,
    })
}

impl ZMat {
    fn negate_col_inplace(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.data[i * self.cols + j] = v;
        }
    }
}

/// Does `col` lie in the column span of `a` over Z? Decided through the SNF:
/// x in im(A) iff (L x)_i is divisible by d_i for the diagonal entries and
/// vanishes beyond the rank.
pub fn in_column_span(s: &Snf, col: &[i128]) -> Result<bool> {
    let n = s.l.rows();
    if col.len() != n {
        return Err(Error::CompositionMismatch("column length mismatch".into()));
    }
    let rank = s.rank();
    for i in 0..n {
        let mut acc = BigInt::zero();
        for (j, &c) in col.iter().enumerate() {
            if c != 0 {
                acc += s.l.get(i, j) * BigInt::from(c);
            }
        }
        if i < rank {
            if !acc.mod_floor(&BigInt::from(s.d.get(i, i))).is_zero() {
                return Ok(false);
            }
        } else if !acc.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snf_of(rows: Vec<Vec<i128>>) -> Snf {
        snf(&IntMat::from_rows(rows)).unwrap()
    }

    #[test]
    fn snf_examples() {
        let s = snf_of(vec![vec![1, 0], vec![0, 2]]);
        assert_eq!(s.divisors(), vec![1, 2]);

        let s = snf_of(vec![vec![2, 4], vec![6, 8]]);
        assert_eq!(s.divisors(), vec![2, 4]);

        let s = snf_of(vec![vec![0, 0], vec![0, 0]]);
        assert!(s.divisors().is_empty());
        assert!(s.d.is_zero());
    }

    #[test]
    fn snf_rectangular() {
        let s = snf_of(vec![vec![2, 0, 0], vec![0, 0, 3]]);
        assert_eq!(s.divisors(), vec![1, 6]);
    }

    #[test]
    fn column_span_membership() {
        let s = snf_of(vec![vec![2, 0], vec![0, 4]]);
        assert!(in_column_span(&s, &[2, 0]).unwrap());
        assert!(in_column_span(&s, &[2, 4]).unwrap());
        assert!(!in_column_span(&s, &[1, 0]).unwrap());
        assert!(!in_column_span(&s, &[0, 2]).unwrap());
    }

    #[test]
    fn mul_checked() {
        let a = IntMat::from_rows(vec![vec![i128::MAX / 2, 1], vec![0, 1]]);
        assert!(a.mul(&a).is_err());
        let id = IntMat::identity(2);
        assert_eq!(id.mul(&id).unwrap(), id);
    }

    #[test]
    fn fingerprint_changes_with_entries() {
        let a = IntMat::identity(3);
        let mut b = IntMat::identity(3);
        b.set(0, 1, 7);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
