//! Congruence subgroups of the modular group and their coset structure.
//!
//! The family in scope is
//!
//! ```text
//!   Phi_r^s = Gamma_1(N 2^s) /\ Gamma_0(2^r),    N odd, 2 <= s <= r,
//! ```
//!
//! optionally intersected with Gamma^0(2) (upper-right entry even). With
//! s = r this is Gamma_1(N 2^r). Membership is decided by congruence
//! conditions on the entries: a = d = 1 (mod N 2^s), c = 0 (mod N 2^r),
//! and b = 0 (mod 2) when the Gamma^0(2) flag is set. Since N 2^s >= 4,
//! none of these groups contain -I and all are torsion free, so membership
//! is evaluated on the projective class {m, -m}.
//!
//! Coset enumeration works in the projective modular group, the free product
//! of the cyclic groups of order 2 and 3 generated by sigma = [[0,-1],[1,0]]
//! and tau = [[0,-1],[1,-1]]. The table is the Schreier graph of the right
//! action of these generators on cosets, discovered breadth first, which
//! every later construction (presentations, transfers) consumes.
//!
//! The map eta_r sends [[a,b],[c,d]] in Phi_r^2 to d mod 2^r, a surjection
//! onto the cyclic group (1 + 4Z)/(1 + 2^r Z) of order 2^{r-2}; classes are
//! stored as integers in [1, 2^r) congruent to 1 mod 4. `eta_lift` produces
//! explicit preimages, optionally inside Phi_{r+1}^2 /\ Gamma^0(2) as the
//! nebentypus construction requires.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Default guard on coset enumeration.
pub const DEFAULT_COSET_BOUND: usize = 1_000_000;

/// Symbolic descriptor of a subgroup Phi_r^s, optionally /\ Gamma^0(2).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubgroupSpec {
    n: u64,
    s: u32,
    r: u32,
    upper0: bool,
}

impl fmt::Debug for SubgroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for SubgroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.s == self.r {
            write!(f, "Gamma1({})", self.n << self.s)?;
        } else {
            write!(f, "Phi_{}^{}(N={})", self.r, self.s, self.n)?;
        }
        if self.upper0 {
            write!(f, "+upper0")?;
        }
        Ok(())
    }
}

impl SubgroupSpec {
    /// Phi_r^s = Gamma_1(N 2^s) /\ Gamma_0(2^r).
    pub fn phi(n: u64, s: u32, r: u32) -> Result<Self> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::BadSpec(format!("N must be odd and positive, got {n}")));
        }
        if s < 2 {
            return Err(Error::BadSpec(format!("s must be at least 2, got {s}")));
        }
        if r < s {
            return Err(Error::BadSpec(format!("need r >= s, got r = {r}, s = {s}")));
        }
        if r > 30 || n > 1 << 20 {
            return Err(Error::BadSpec(format!(
                "level N 2^r = {n} * 2^{r} beyond desk scale"
            )));
        }
        Ok(SubgroupSpec {
            n,
            s,
            r,
            upper0: false,
        })
    }

    /// Gamma_1(N 2^r) = Phi_r^r.
    pub fn gamma1(n: u64, r: u32) -> Result<Self> {
        Self::phi(n, r, r)
    }

    /// The same group intersected with Gamma^0(2).
    pub fn with_upper0(self) -> Self {
        SubgroupSpec {
            upper0: true,
            ..self
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn s(&self) -> u32 {
        self.s
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn upper0(&self) -> bool {
        self.upper0
    }

    /// Modulus of the a = d = 1 condition: N 2^s.
    pub fn modulus_ad(&self) -> u64 {
        self.n << self.s
    }

    /// Modulus of the c = 0 condition: N 2^r.
    pub fn modulus_c(&self) -> u64 {
        self.n << self.r
    }

    /// Conductor: all membership conditions are congruences mod N 2^r.
    pub fn conductor(&self) -> u64 {
        self.modulus_c()
    }

    /// Congruence conditions on the literal entries (sign-sensitive).
    pub fn contains_signed(&self, m: &Mat2) -> bool {
        if !m.is_det_one() {
            return false;
        }
        let mad = BigInt::from(self.modulus_ad());
        let mc = BigInt::from(self.modulus_c());
        let one = BigInt::one();
        (&m.a).mod_floor(&mad) == one
            && (&m.d).mod_floor(&mad) == one
            && (&m.c).mod_floor(&mc).is_zero()
            && (!self.upper0 || m.b.is_even())
    }

    /// Projective membership: the class {m, -m} meets the subgroup.
    pub fn contains(&self, m: &Mat2) -> Result<bool> {
        m.require_det_one()?;
        Ok(self.contains_signed(m) || self.contains_signed(&m.neg()))
    }

    /// Index [SL2(Z) : G], via the image in SL2(Z/M).
    ///
    /// The group is the full preimage of its image in SL2(Z/M) for the
    /// conductor M, so the index equals |SL2(Z/M)| divided by the number of
    /// residue matrices satisfying the congruence conditions. The image is
    /// enumerated literally; the order of SL2(Z/M) is the classical
    /// multiplicative formula.
    pub fn index_in_sl2(&self) -> u64 {
        sl2_order(self.conductor()) / self.residue_image_size()
    }

    /// Index of the projective image in PSL2(Z). Since -I is never a member,
    /// this is half the SL2 index.
    pub fn index_in_psl2(&self) -> u64 {
        self.index_in_sl2() / 2
    }

    /// Number of matrices in SL2(Z/M) satisfying the congruence conditions,
    /// M the conductor. Enumerated entry by entry with a determinant check.
    pub fn residue_image_size(&self) -> u64 {
        let m = self.conductor();
        let mad = self.modulus_ad();
        // c = 0 mod N 2^r = M forces c = 0; then det = a d = 1 mod M.
        let mut count = 0u64;
        let mut a = 1u64;
        while a < m || (a == 1 && m == 1) {
            let mut d = 1u64;
            while d < m {
                if (a as u128 * d as u128) % m as u128 == 1 {
                    let b_count = if self.upper0 { m / 2 } else { m };
                    count += b_count;
                }
                d += mad;
            }
            a += mad;
            if mad >= m {
                break;
            }
        }
        count
    }

    /// Residue classes mod the conductor of all members and their negatives,
    /// as packed keys. Used to identify cosets during enumeration.
    fn residue_classes_pm(&self) -> Vec<[u64; 4]> {
        let m = self.conductor();
        let mad = self.modulus_ad();
        let mut out = Vec::new();
        let mut a = 1u64;
        loop {
            let mut d = 1u64;
            while d < m {
                if (a as u128 * d as u128) % m as u128 == 1 {
                    let step = if self.upper0 { 2 } else { 1 };
                    let mut b = 0u64;
                    while b < m {
                        out.push([a % m, b, 0, d % m]);
                        out.push([(m - a % m) % m, (m - b) % m, 0, (m - d % m) % m]);
                        b += step;
                    }
                }
                d += mad;
                if mad >= m && d > 1 {
                    break;
                }
            }
            a += mad;
            if a >= m {
                break;
            }
        }
        out
    }
}

/// |SL2(Z/m)| = m^3 prod_{p | m} (1 - 1/p^2).
pub fn sl2_order(m: u64) -> u64 {
    assert!(m >= 1);
    let mut order: u128 = (m as u128).pow(3);
    let mut rest = m;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            while rest % p == 0 {
                rest /= p;
            }
            order = order / (p as u128 * p as u128) * (p as u128 * p as u128 - 1);
        }
        p += 1;
    }
    if rest > 1 {
        order = order / (rest as u128 * rest as u128) * (rest as u128 * rest as u128 - 1);
    }
    order as u64
}

/// The two ambient generators of the projective modular group.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AmbientGen {
    Sigma,
    Tau,
}

impl AmbientGen {
    pub fn matrix(&self) -> Mat2 {
        match self {
            AmbientGen::Sigma => Mat2::gen_s(),
            AmbientGen::Tau => Mat2::gen_a(),
        }
    }
}

/// Schreier graph of a subgroup acting on its right cosets in the projective
/// modular group.
///
/// Coset i is G * reps[i] with reps canonical and reps[0] = I; the edge maps
/// send i to the coset of reps[i] * sigma resp. reps[i] * tau. `tree[j]`
/// records the breadth-first discovery edge of coset j, making the
/// representative set a Schreier transversal.
#[derive(Clone)]
pub struct CosetTable {
    pub spec: SubgroupSpec,
    pub reps: Vec<Mat2>,
    pub edge_sigma: Vec<usize>,
    pub edge_tau: Vec<usize>,
    /// Inverse of the tau permutation.
    pub tau_pred: Vec<usize>,
    /// Discovery edge (source coset, generator) for each non-root coset.
    pub tree: Vec<Option<(usize, AmbientGen)>>,
}

impl std::fmt::Debug for CosetTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CosetTable({}, {} cosets)", self.spec, self.reps.len())
    }
}

impl CosetTable {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn step(&self, coset: usize, g: AmbientGen) -> usize {
        match g {
            AmbientGen::Sigma => self.edge_sigma[coset],
            AmbientGen::Tau => self.edge_tau[coset],
        }
    }

    /// Is the directed edge (i, g) part of the spanning tree?
    pub fn is_tree_edge(&self, i: usize, g: AmbientGen) -> bool {
        let j = self.step(i, g);
        self.tree[j] == Some((i, g))
    }
}

fn pack_key(k: [u64; 4]) -> u64 {
    debug_assert!(k.iter().all(|&x| x < 1 << 16));
    (k[0] << 48) | (k[1] << 32) | (k[2] << 16) | k[3]
}

fn mul_key(x: &[u64; 4], y: &[u64; 4], m: u64) -> [u64; 4] {
    let m = m as u128;
    let mul = |p: u64, q: u64| (p as u128 * q as u128) % m;
    [
        ((mul(x[0], y[0]) + mul(x[1], y[2])) % m) as u64,
        ((mul(x[0], y[1]) + mul(x[1], y[3])) % m) as u64,
        ((mul(x[2], y[0]) + mul(x[3], y[2])) % m) as u64,
        ((mul(x[2], y[1]) + mul(x[3], y[3])) % m) as u64,
    ]
}

/// Breadth-first coset enumeration over the ambient generators.
///
/// Cosets are matched through their residue classes mod the conductor: a new
/// coset inserts the keys of every subgroup translate of its representative,
/// so later lookups are a single hash probe. Representatives are canonical
/// projective forms, deterministic across runs.
pub fn coset_enumerate(spec: &SubgroupSpec, bound: usize) -> Result<CosetTable> {
    let m = spec.conductor();
    if m >= 1 << 16 {
        return Err(Error::BadSpec(format!("conductor {m} too large for enumeration")));
    }
    let members = spec.residue_classes_pm();

    let mut reps: Vec<Mat2> = Vec::new();
    let mut edge_sigma: Vec<usize> = Vec::new();
    let mut edge_tau: Vec<usize> = Vec::new();
    let mut tree: Vec<Option<(usize, AmbientGen)>> = Vec::new();
    let mut key_to_coset: HashMap<u64, usize> = HashMap::new();

    let mut add_coset = |rep: Mat2,
                         from: Option<(usize, AmbientGen)>,
                         reps: &mut Vec<Mat2>,
                         key_to_coset: &mut HashMap<u64, usize>|
     -> Result<usize> {
        let idx = reps.len();
        if idx >= bound {
            return Err(Error::CosetBound {
                group: spec.to_string(),
                bound,
            });
        }
        let rk = rep.residue_key(m);
        for g in &members {
            let key = pack_key(mul_key(g, &rk, m));
            key_to_coset.entry(key).or_insert(idx);
        }
        reps.push(rep);
        tree.push(from);
        Ok(idx)
    };

    add_coset(
        Mat2::identity(),
        None,
        &mut reps,
        &mut key_to_coset,
    )?;

    let mut next = 0usize;
    while next < reps.len() {
        for g in [AmbientGen::Sigma, AmbientGen::Tau] {
            let target = reps[next].mul(&g.matrix()).canonical();
            let key = pack_key(target.residue_key(m));
            let idx = match key_to_coset.get(&key) {
                Some(&i) => i,
                None => add_coset(target, Some((next, g)), &mut reps, &mut key_to_coset)?,
            };
            match g {
                AmbientGen::Sigma => edge_sigma.push(idx),
                AmbientGen::Tau => edge_tau.push(idx),
            }
        }
        next += 1;
    }

    let count = reps.len();
    let mut tau_pred = vec![usize::MAX; count];
    for (i, &j) in edge_tau.iter().enumerate() {
        tau_pred[j] = i;
    }
    if tau_pred.iter().any(|&x| x == usize::MAX) {
        return Err(Error::Internal("tau edges do not permute the cosets".into()));
    }

    let expected = spec.index_in_psl2();
    if count as u64 != expected {
        return Err(Error::Internal(format!(
            "enumerated {count} cosets for {spec}, residue oracle says {expected}"
        )));
    }

    Ok(CosetTable {
        spec: *spec,
        reps,
        edge_sigma,
        edge_tau,
        tau_pred,
        tree,
    })
}

/// Index [SL2(Z) : G] by coset enumeration (twice the projective count).
pub fn index(spec: &SubgroupSpec, bound: usize) -> Result<u64> {
    Ok(2 * coset_enumerate(spec, bound)?.len() as u64)
}

/// Enumerate the residue classes of Gamma/Gamma_r = (1 + 4Z)/(1 + 2^r Z),
/// canonically the integers in [1, 2^r) congruent to 1 mod 4.
pub fn residue_classes(r: u32) -> Vec<u64> {
    assert!((2..=30).contains(&r));
    (0..1u64 << (r - 2)).map(|i| 1 + 4 * i).collect()
}

/// Multiplication in Gamma/Gamma_r.
pub fn class_mul(x: u64, y: u64, r: u32) -> u64 {
    ((x as u128 * y as u128) % (1u128 << r)) as u64
}

/// Multiplicative order of a class in Gamma/Gamma_r.
pub fn class_order(x: u64, r: u32) -> u64 {
    let mut acc = x % (1 << r);
    let mut ord = 1;
    while acc != 1 {
        acc = class_mul(acc, x, r);
        ord += 1;
    }
    ord
}

/// The pinned topological generator gamma_s = 1 + 2^s, as a class mod 2^r.
pub fn gamma_class(s: u32, r: u32) -> u64 {
    assert!(s >= 2 && r >= s);
    (1u64 + (1u64 << s)) % (1u64 << r)
}

/// eta_r: Phi_r^2 -> Gamma/Gamma_r, [[a,b],[c,d]] |-> d mod 2^r.
///
/// Evaluated on the sign representative actually satisfying the congruence
/// conditions, so the result is canonical (d = 1 mod 4).
pub fn eta(m: &Mat2, n: u64, r: u32) -> Result<u64> {
    let phi_r2 = SubgroupSpec::phi(n, 2, r)?;
    let signed = if phi_r2.contains_signed(m) {
        m.clone()
    } else if phi_r2.contains_signed(&m.neg()) {
        m.neg()
    } else {
        return Err(Error::NotMember {
            group: phi_r2.to_string(),
            context: format!("eta applied to {m}"),
        });
    };
    let modulus = BigInt::from(1u64 << r);
    let d = signed.d.mod_floor(&modulus);
    Ok(d.to_u64().expect("reduced residue fits u64"))
}

/// Construct a lift of dbar through eta_r.
///
/// Plain mode returns alpha in Phi_r^2 with c = N 2^r. Nebentypus mode
/// returns alpha in Phi_{r+1}^2 /\ Gamma^0(2) (c = N 2^{r+1}, b even), the
/// shape required by the diamond action. `variant` selects among infinitely
/// many valid lifts; any two variants agree through eta_r.
pub fn eta_lift_variant(dbar: u64, r: u32, n: u64, neben: bool, variant: u64) -> Result<Mat2> {
    if r < 2 || dbar % 4 != 1 || dbar >= 1 << r {
        return Err(Error::BadSpec(format!(
            "dbar = {dbar} is not a canonical class mod 2^{r}"
        )));
    }
    // d = dbar mod 2^r and d = 1 mod 4N; moduli overlap on mod 4 where both
    // demand 1, so CRT on (2^r, odd part N) is consistent.
    let two_r = BigInt::from(1u64 << r);
    let four_n = BigInt::from(4 * n);
    let l = (1u64 << r).lcm(&(4 * n));
    let mut d = BigInt::from(dbar);
    while d.mod_floor(&four_n) != BigInt::one() {
        d += &two_r;
    }
    d += BigInt::from(l) * BigInt::from(variant);
    debug_assert_eq!(d.mod_floor(&two_r), BigInt::from(dbar));

    let c = BigInt::from(n) << (r + if neben { 1 } else { 0 });
    // gcd(c, d) = 1: d is odd and = 1 mod N.
    let ext = d.extended_gcd(&c);
    if !ext.gcd.is_one() {
        return Err(Error::Internal(format!("gcd({d}, {c}) != 1 in eta_lift")));
    }
    // a d - b c = 1 with a = x, b = -y from x d + y c = 1.
    let mut a = ext.x;
    let mut b = -ext.y;
    if neben && b.is_odd() {
        // shift (a, b) -> (a + c, b + d); d odd flips the parity of b
        a += &c;
        b += &d;
    }
    let alpha = Mat2 { a, b, c, d };
    debug_assert!(alpha.is_det_one());
    Ok(alpha)
}

/// Lift of dbar through eta_r; see `eta_lift_variant`.
pub fn eta_lift(dbar: u64, r: u32, n: u64, neben: bool) -> Result<Mat2> {
    eta_lift_variant(dbar, r, n, neben, 0)
}
