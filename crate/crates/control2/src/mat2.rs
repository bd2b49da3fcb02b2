//! Exact 2x2 integer matrices.
//!
//! Elements of the modular group are held with arbitrary-precision entries;
//! products of many generators grow fast and must never be truncated. The one
//! non-invertible matrix in play is the dyadic Hecke element t = [[1,0],[0,2]]
//! of determinant 2. Conjugation by t and t^{-1} is provided entrywise (with
//! exact halving) so that rational matrices never appear.
//!
//! None of the subgroups treated by this crate contain -I, so most of the code
//! works with the projective class {m, -m}. The canonical representative of a
//! class negates when c < 0, or when c = 0 and a < 0.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::error::{Error, Result};

/// A 2x2 integer matrix [[a, b], [c, d]].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

pub fn mat2(a: i64, b: i64, c: i64, d: i64) -> Mat2 {
    Mat2 {
        a: a.into(),
        b: b.into(),
        c: c.into(),
        d: d.into(),
    }
}

impl Mat2 {
    pub fn identity() -> Self {
        mat2(1, 0, 0, 1)
    }

    /// S = [[0, -1], [1, 0]], projective order 2.
    pub fn gen_s() -> Self {
        mat2(0, -1, 1, 0)
    }

    /// A = S T^{-1} = [[0, -1], [1, -1]], order 3 in SL2(Z).
    pub fn gen_a() -> Self {
        mat2(0, -1, 1, -1)
    }

    /// T = [[1, 1], [0, 1]].
    pub fn gen_t() -> Self {
        mat2(1, 1, 0, 1)
    }

    /// The Hecke element t = [[1, 0], [0, 2]] of determinant 2.
    pub fn hecke_t() -> Self {
        mat2(1, 0, 0, 2)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn is_det_one(&self) -> bool {
        self.det().is_one()
    }

    pub fn require_det_one(&self) -> Result<()> {
        let det = self.det();
        if det.is_one() {
            Ok(())
        } else {
            Err(Error::BadDeterminant {
                det: det.to_string(),
            })
        }
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 {
            a: -&self.a,
            b: -&self.b,
            c: -&self.c,
            d: -&self.d,
        }
    }

    /// Inverse of a determinant +-1 matrix.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det.is_one() {
            Ok(Mat2 {
                a: self.d.clone(),
                b: -&self.b,
                c: -&self.c,
                d: self.a.clone(),
            })
        } else if (-&det).is_one() {
            Ok(Mat2 {
                a: -&self.d,
                b: self.b.clone(),
                c: self.c.clone(),
                d: -&self.a,
            })
        } else {
            Err(Error::BadDeterminant {
                det: det.to_string(),
            })
        }
    }

    pub fn pow(&self, e: i64) -> Result<Mat2> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Mat2::identity();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    /// Canonical representative of the projective class {m, -m}:
    /// negate when c < 0, or when c = 0 and a < 0.
    pub fn canonical(&self) -> Mat2 {
        if self.c.is_negative() || (self.c.is_zero() && self.a.is_negative()) {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Projective equality: equal up to a global sign.
    pub fn eq_proj(&self, other: &Mat2) -> bool {
        self == other || *self == other.neg()
    }

    /// Conjugation by the Hecke element: A |-> t A t^{-1} = [[a, b/2], [2c, d]].
    /// Requires b even.
    pub fn conj_hecke(&self) -> Result<Mat2> {
        if !self.b.is_even() {
            return Err(Error::NotMember {
                group: "Gamma^0(2)".into(),
                context: format!("b = {} is odd, t A t^-1 not integral", self.b),
            });
        }
        Ok(Mat2 {
            a: self.a.clone(),
            b: &self.b / 2,
            c: &self.c * 2,
            d: self.d.clone(),
        })
    }

    /// Conjugation the other way: A |-> t^{-1} A t = [[a, 2b], [c/2, d]].
    /// Requires c even.
    pub fn conj_hecke_inv(&self) -> Result<Mat2> {
        if !self.c.is_even() {
            return Err(Error::NotMember {
                group: "Gamma_0(2)".into(),
                context: format!("c = {} is odd, t^-1 A t not integral", self.c),
            });
        }
        Ok(Mat2 {
            a: self.a.clone(),
            b: &self.b * 2,
            c: &self.c / 2,
            d: self.d.clone(),
        })
    }

    /// Entries reduced into [0, m), packed for hashing.
    pub fn residue_key(&self, m: u64) -> [u64; 4] {
        let mm = BigInt::from(m);
        let red = |x: &BigInt| -> u64 {
            let r = x.mod_floor(&mm);
            // r in [0, m), fits u64
            let (_, digits) = r.to_u64_digits();
            digits.first().copied().unwrap_or(0)
        };
        [red(&self.a), red(&self.b), red(&self.c), red(&self.d)]
    }

    /// Largest entry magnitude in bits; used for resource sanity checks.
    pub fn max_bits(&self) -> u64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|x| x.bits())
            .max()
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_orders() {
        let s = Mat2::gen_s();
        let a = Mat2::gen_a();
        assert_eq!(s.mul(&s), Mat2::identity().neg());
        assert_eq!(a.mul(&a).mul(&a), Mat2::identity());
        // T = tau^{-1} sigma exactly in SL2(Z)
        let t = a.mul(&a).mul(&s);
        assert_eq!(t, Mat2::gen_t());
    }

    #[test]
    fn determinants() {
        assert!(Mat2::gen_s().is_det_one());
        assert!(Mat2::gen_a().is_det_one());
        assert_eq!(Mat2::hecke_t().det(), BigInt::from(2));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = mat2(5, 1, 24, 5);
        assert!(m.is_det_one());
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Mat2::identity());
        assert_eq!(inv.mul(&m), Mat2::identity());
    }

    #[test]
    fn canonical_sign() {
        let m = mat2(1, 1, 0, 1);
        assert_eq!(m.canonical(), m);
        assert_eq!(m.neg().canonical(), m);
        let n = mat2(5, 1, -24, -5); // c < 0 flips
        assert_eq!(n.canonical(), n.neg());
        assert!(n.eq_proj(&n.neg()));
    }

    #[test]
    fn hecke_conjugation() {
        let m = mat2(1, 2, 4, 9);
        let conj = m.conj_hecke().unwrap();
        assert_eq!(conj, mat2(1, 1, 8, 9));
        // diagonal preserved under both conjugations
        assert_eq!(conj.a, m.a);
        assert_eq!(conj.d, m.d);
        assert_eq!(conj.conj_hecke_inv().unwrap(), m);
        assert!(mat2(1, 1, 0, 1).conj_hecke().is_err());
        assert!(mat2(1, 0, 1, 1).conj_hecke_inv().is_err());
    }

    #[test]
    fn residue_keys() {
        let m = mat2(5, -1, 24, 5);
        assert_eq!(m.residue_key(4), [1, 3, 0, 1]);
    }
}
