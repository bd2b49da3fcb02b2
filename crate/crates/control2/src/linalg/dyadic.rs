//! Matrices over Z/2^k and the ordinary-part machinery.
//!
//! Entries live in u64 words masked to k bits (k <= 64); wrapping arithmetic
//! on u64 is exact arithmetic mod 2^64, so products never lose information
//! before the mask. Smith normal form over the local ring Z/2^k pivots on
//! minimal 2-adic valuation and yields diagonal entries 2^{v_i} with
//! 0 <= v_1 <= v_2 <= ... <= k, where v = k plays the role of zero
//! ("free at this precision").
//!
//! The ordinary idempotent is the limit of the factorial powers U^{n!}: the
//! sequence is computed by repeated powering and stops at the first exactly
//! idempotent value, which is the stable limit (later factorial powers of an
//! idempotent reproduce it). The ordinary part is the image of e, a free
//! direct summand, extracted with an explicit basis B and coordinate
//! projection P with P B = I, so operators commuting with U restrict to
//! ord_rank-sized matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::int::IntMat;

/// Default cap on factorial-power rounds in the idempotent iteration.
pub const DEFAULT_IDEMPOTENT_CAP: usize = 4096;

/// Dense row-major matrix over Z/2^k.
#[derive(Clone, PartialEq, Eq)]
pub struct ModMat {
    k: u32,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

#[inline]
fn mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

impl std::fmt::Debug for ModMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ModMat {}x{} mod 2^{} [", self.rows, self.cols, self.k)?;
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

impl ModMat {
    pub fn zeros(k: u32, rows: usize, cols: usize) -> Self {
        assert!((1..=64).contains(&k));
        ModMat {
            k,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(k: u32, n: usize) -> Self {
        let mut m = Self::zeros(k, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Reduce an integer matrix mod 2^k.
    pub fn from_int(m: &IntMat, k: u32) -> Self {
        let msk = mask(k);
        ModMat {
            k,
            rows: m.rows(),
            cols: m.cols(),
            data: (0..m.rows())
                .flat_map(|i| (0..m.cols()).map(move |j| (m.get(i, j) as u64) & msk))
                .collect(),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v & mask(self.k);
    }

    /// Truncate to a smaller precision.
    pub fn truncate(&self, k: u32) -> ModMat {
        assert!(k <= self.k);
        let msk = mask(k);
        ModMat {
            k,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x & msk).collect(),
        }
    }

    fn mul_row_into(&self, rhs: &ModMat, i: usize, orow: &mut [u64]) {
        let msk = mask(self.k);
        let row = &self.data[i * self.cols..(i + 1) * self.cols];
        for (kk, &a) in row.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let rrow = &rhs.data[kk * rhs.cols..(kk + 1) * rhs.cols];
            for (j, &b) in rrow.iter().enumerate() {
                orow[j] = orow[j].wrapping_add(a.wrapping_mul(b)) & msk;
            }
        }
    }

    pub fn mul(&self, rhs: &ModMat) -> Result<ModMat> {
        if self.cols != rhs.rows || self.k != rhs.k {
            return Err(Error::CompositionMismatch(format!(
                "mod-2^k product {}x{} (k={}) * {}x{} (k={})",
                self.rows, self.cols, self.k, rhs.rows, rhs.cols, rhs.k
            )));
        }
        let mut out = ModMat::zeros(self.k, self.rows, rhs.cols);
        let work = self.rows * self.cols * rhs.cols;
        #[cfg(feature = "parallel")]
        if work >= 1 << 18 {
            use rayon::prelude::*;
            out.data
                .par_chunks_mut(rhs.cols)
                .enumerate()
                .for_each(|(i, orow)| self.mul_row_into(rhs, i, orow));
            return Ok(out);
        }
        let _ = work;
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            self.mul_row_into(rhs, i, orow);
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &ModMat) -> Result<ModMat> {
        self.zip(rhs, |a, b, msk| a.wrapping_add(b) & msk)
    }

    pub fn sub(&self, rhs: &ModMat) -> Result<ModMat> {
        self.zip(rhs, |a, b, msk| a.wrapping_sub(b) & msk)
    }

    fn zip(&self, rhs: &ModMat, f: impl Fn(u64, u64, u64) -> u64) -> Result<ModMat> {
        if self.rows != rhs.rows || self.cols != rhs.cols || self.k != rhs.k {
            return Err(Error::CompositionMismatch("mod-2^k entrywise shape mismatch".into()));
        }
        let msk = mask(self.k);
        Ok(ModMat {
            k: self.k,
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b, msk))
                .collect(),
        })
    }

    pub fn transpose(&self) -> ModMat {
        let mut out = ModMat::zeros(self.k, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> Result<ModMat> {
        assert_eq!(self.rows, self.cols);
        let mut base = self.clone();
        let mut acc = ModMat::identity(self.k, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.get(i, j) == u64::from(i == j)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.k as u64);
        eat(self.rows as u64);
        eat(self.cols as u64);
        for &v in &self.data {
            eat(v);
        }
        h
    }
}

fn val2(x: u64, k: u32) -> u32 {
    if x == 0 {
        k
    } else {
        x.trailing_zeros().min(k)
    }
}

/// Modular inverse of an odd residue mod 2^64 (Newton iteration), masked.
fn inv_odd(a: u64, k: u32) -> u64 {
    debug_assert!(a & 1 == 1);
    let mut x = a; // correct mod 2^3
    for _ in 0..5 {
        x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
    }
    x & mask(k)
}

/// Smith normal form over Z/2^k: L A R = D with D diagonal of powers of two
/// in non-decreasing valuation, L and R invertible (inverses returned).
pub struct SnfMod {
    pub d: ModMat,
    pub l: ModMat,
    pub r: ModMat,
    pub linv: ModMat,
    pub rinv: ModMat,
    /// Valuations of the diagonal, length min(rows, cols); k means zero.
    pub vals: Vec<u32>,
}

pub fn snf_mod(a: &ModMat) -> Result<SnfMod> {
    let k = a.k;
    let (nr, nc) = (a.rows, a.cols);
    let mut b = a.clone();
    let mut l = ModMat::identity(k, nr);
    let mut linv = ModMat::identity(k, nr);
    let mut r = ModMat::identity(k, nc);
    let mut rinv = ModMat::identity(k, nc);

    let dim = nr.min(nc);
    let mut vals = Vec::with_capacity(dim);
    for piv in 0..dim {
        // minimal valuation pivot in trailing block
        let mut best: Option<(u32, usize, usize)> = None;
        for i in piv..nr {
            for j in piv..nc {
                let v = val2(b.get(i, j), k);
                if v < k && best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let Some((v, pi, pj)) = best else {
            for _ in piv..dim {
                vals.push(k);
            }
            break;
        };
        // swap pivot into place
        if pi != piv {
            for t in 0..nc {
                b.data.swap(pi * nc + t, piv * nc + t);
            }
            for t in 0..nr {
                l.data.swap(pi * nr + t, piv * nr + t);
                linv.data.swap(t * nr + pi, t * nr + piv);
            }
        }
        if pj != piv {
            for t in 0..nr {
                b.data.swap(t * nc + pj, t * nc + piv);
            }
            for t in 0..nc {
                r.data.swap(t * nc + pj, t * nc + piv);
                rinv.data.swap(pj * nc + t, piv * nc + t);
            }
        }
        // normalize pivot to exactly 2^v: divide row by its odd part
        let msk = mask(k);
        let u = b.get(piv, piv) >> v;
        let uinv = inv_odd(u, k);
        for t in 0..nc {
            let x = b.get(piv, t).wrapping_mul(uinv) & msk;
            b.set(piv, t, x);
        }
        for t in 0..nr {
            let x = l.get(piv, t).wrapping_mul(uinv) & msk;
            l.set(piv, t, x);
            let y = linv.get(t, piv).wrapping_mul(u) & msk;
            linv.set(t, piv, y);
        }
        debug_assert_eq!(b.get(piv, piv), (1u64 << v) & msk);

        // eliminate column piv: every entry below has valuation >= v
        for i in (piv + 1)..nr {
            let x = b.get(i, piv);
            if x == 0 {
                continue;
            }
            let q = (x >> v) & msk; // exact: val2(x) >= v
            // row_i -= q * row_piv  (q * 2^v = x mod 2^k)
            for t in 0..nc {
                let sub = q.wrapping_mul(b.get(piv, t)) & msk;
                b.set(i, t, b.get(i, t).wrapping_sub(sub));
            }
            for t in 0..nr {
                let sub = q.wrapping_mul(l.get(piv, t)) & msk;
                l.set(i, t, l.get(i, t).wrapping_sub(sub));
                let add = q.wrapping_mul(linv.get(t, i)) & msk;
                linv.set(t, piv, linv.get(t, piv).wrapping_add(add));
            }
        }
        // eliminate row piv
        for j in (piv + 1)..nc {
            let x = b.get(piv, j);
            if x == 0 {
                continue;
            }
            let q = (x >> v) & msk;
            for t in 0..nr {
                let sub = q.wrapping_mul(b.get(t, piv)) & msk;
                b.set(t, j, b.get(t, j).wrapping_sub(sub));
            }
            for t in 0..nc {
                let sub = q.wrapping_mul(r.get(t, piv)) & msk;
                r.set(t, j, r.get(t, j).wrapping_sub(sub));
                let add = q.wrapping_mul(rinv.get(j, t)) & msk;
                rinv.set(piv, t, rinv.get(piv, t).wrapping_add(add));
            }
        }
        vals.push(v);
    }

    // verify by multiplication
    let lar = l.mul(a)?.mul(&r)?;
    if lar != b {
        return Err(Error::Internal("mod-2^k SNF verification failed".into()));
    }
    if !l.mul(&linv)?.is_identity() || !r.mul(&rinv)?.is_identity() {
        return Err(Error::Internal("mod-2^k SNF inverse verification failed".into()));
    }
    if vals.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Internal("mod-2^k SNF valuations out of order".into()));
    }

    Ok(SnfMod {
        d: b,
        l,
        r,
        linv,
        rinv,
        vals,
    })
}

/// The ordinary idempotent e = lim_n U^{n!} mod 2^k.
///
/// Iterates P_1 = U, P_{n+1} = P_n^{n+1} and stops at the first P that is
/// exactly idempotent; from such a P every later factorial power equals P,
/// so the limit has been reached. The cap guards against pathological
/// inputs; the sequence provably stabilizes for every honest one.
pub fn ordinary_idempotent(u: &ModMat, cap: usize) -> Result<ModMat> {
    if u.rows != u.cols {
        return Err(Error::CompositionMismatch("idempotent of a non-square matrix".into()));
    }
    if u.rows == 0 {
        return Ok(u.clone());
    }
    let mut p = u.clone();
    let mut n = 1u64;
    loop {
        if p.mul(&p)? == p {
            return Ok(p);
        }
        n += 1;
        if n as usize > cap {
            return Err(Error::IdempotentCap { cap });
        }
        p = p.pow(n)?;
    }
}

/// A finite free Z/2^k-module with a U-action, its ordinary idempotent and
/// an explicit ordinary basis.
pub struct OrdinaryModule {
    pub k: u32,
    /// Ambient rank.
    pub n: usize,
    pub u: ModMat,
    pub e: ModMat,
    /// n x d matrix whose columns freely span im(e).
    pub basis: ModMat,
    /// d x n coordinate projection with proj * basis = I.
    pub proj: ModMat,
    /// U restricted to the ordinary basis, invertible mod 2.
    pub u_ord: ModMat,
    pub ord_rank: usize,
}

impl OrdinaryModule {
    /// Restrict an operator that commutes with U (hence preserves im(e))
    /// to the ordinary basis. Verifies preservation exactly.
    pub fn restrict(&self, op: &ModMat) -> Result<ModMat> {
        let image = op.mul(&self.basis)?;
        let restricted = self.proj.mul(&image)?;
        if self.basis.mul(&restricted)? != image {
            return Err(Error::DoesNotCommute(
                "operator does not preserve the ordinary part".into(),
            ));
        }
        Ok(restricted)
    }
}

/// Compute the ordinary part of U acting on (Z/2^k)^n.
pub fn ordinary_part(u: &ModMat, cap: usize) -> Result<OrdinaryModule> {
    let k = u.k;
    let n = u.rows;
    let e = ordinary_idempotent(u, cap)?;
    if e.mul(u)? != u.mul(&e)? {
        return Err(Error::Internal("idempotent does not commute with U".into()));
    }
    let s = snf_mod(&e)?;
    // the image of an idempotent is a free summand: valuations split {0, k}
    if s.vals.iter().any(|&v| v != 0 && v != k) {
        return Err(Error::PrecisionTooLow { k });
    }
    let d = s.vals.iter().filter(|&&v| v == 0).count();

    let mut basis = ModMat::zeros(k, n, d);
    for i in 0..n {
        for j in 0..d {
            basis.set(i, j, s.linv.get(i, j));
        }
    }
    let mut proj = ModMat::zeros(k, d, n);
    for i in 0..d {
        for j in 0..n {
            proj.set(i, j, s.l.get(i, j));
        }
    }
    debug_assert!(proj.mul(&basis)?.is_identity());

    let image = u.mul(&basis)?;
    let u_ord = proj.mul(&image)?;
    if basis.mul(&u_ord)? != image {
        return Err(Error::Internal("U does not preserve the span of its idempotent".into()));
    }
    // U must be invertible on the ordinary part: full rank mod 2
    if rank_mod2(&u_ord) != d {
        return Err(Error::Internal(
            "restricted U is not a unit mod 2 on the ordinary part".into(),
        ));
    }

    Ok(OrdinaryModule {
        k,
        n,
        u: u.clone(),
        e,
        basis,
        proj,
        u_ord,
        ord_rank: d,
    })
}

/// Rank of a matrix over F_2.
pub fn rank_mod2(m: &ModMat) -> usize {
    let mut rows: Vec<Vec<bool>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j) & 1 == 1).collect())
        .collect();
    let mut rank = 0;
    for col in 0..m.cols {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i][col]) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[col] {
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x ^= p;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// A finitely presented Z/2^k-module, recorded by the valuations of its
/// cyclic components: the module is the direct sum of Z/2^{v} over the listed
/// v in [1, k], with v = k standing for a full free summand at this
/// precision. Trivial components are dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PresentedModule {
    pub k: u32,
    pub component_vals: Vec<u32>,
}

impl PresentedModule {
    /// Number of components that look free at this precision.
    pub fn free_rank(&self) -> usize {
        self.component_vals.iter().filter(|&&v| v == self.k).count()
    }
}

/// Quotient of (Z/2^k)^d by the column span of `m` (d x c), presented by its
/// elementary divisors.
pub fn cokernel_mod(m: &ModMat) -> Result<PresentedModule> {
    let s = snf_mod(m)?;
    let d = m.rows;
    let mut vals: Vec<u32> = s.vals.iter().copied().filter(|&v| v > 0).collect();
    // rows beyond the diagonal are untouched: full free components
    vals.extend(std::iter::repeat(m.k).take(d.saturating_sub(s.vals.len())));
    vals.sort_unstable();
    Ok(PresentedModule {
        k: m.k,
        component_vals: vals,
    })
}

/// Co-invariants of the ordinary part under gamma: the quotient of im(e) by
/// the image of (gamma - 1). Requires gamma to commute with U mod 2^k.
pub fn coinvariants(module: &OrdinaryModule, gamma: &ModMat) -> Result<PresentedModule> {
    if gamma.mul(&module.u)? != module.u.mul(gamma)? {
        return Err(Error::DoesNotCommute("gamma does not commute with U mod 2^k".into()));
    }
    let g_ord = module.restrict(gamma)?;
    let aug = g_ord.sub(&ModMat::identity(module.k, module.ord_rank))?;
    cokernel_mod(&aug)
}

/// Module comparison at equal precision: multisets of elementary divisors.
pub fn isomorphic(m1: &PresentedModule, m2: &PresentedModule) -> bool {
    m1.k == m2.k && m1.component_vals == m2.component_vals
}
