//! End-to-end verification over a grid of levels, with structured reports.
//!
//! Each check is a pure function of immutable shared state (presentations,
//! operator sets, ordinary modules, all memoized) and its grid point, so the
//! grid runs data-parallel with a deterministic report: job order is fixed
//! up front and results keep that order regardless of scheduling. Matrix
//! identities are checked exactly over Z; ordinary-part statements are
//! checked mod 2^k with automatic one-step precision escalation.
//!
//! Check ids name the verified statements: "lemma-2.1" (surjectivity of
//! eta and its Gamma^0(2) restriction), "rank-formula", "eq-5-6" (the
//! factorizations of U and U'), "lemma-3.1" (chain equivariance),
//! "lemma-3.4" (U is multiplication by 2 on the level cokernel),
//! "lemma-3.5" (diamond commutation and lift independence), "lemma-3.6"
//! (transfer commutation), "transfer-norm", "theorem-4.1" (the control
//! isomorphism with both intermediate factors), "prop-5.1" (composition of
//! successive control maps), "dual-rank", and "rank-stability".

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::dyadic::{
    coinvariants, ordinary_part, snf_mod, ModMat, OrdinaryModule, PresentedModule,
    DEFAULT_IDEMPOTENT_CAP,
};
use crate::linalg::int::{in_column_span, snf, IntMat};
use crate::operators::{chain_map, LevelOps, PresentationCache};
use crate::par::{par_map, Memo};
use crate::presentations::inclusion_map;
use crate::subgroups::{
    class_mul, class_order, eta, eta_lift_variant, gamma_class, residue_classes, SubgroupSpec,
    DEFAULT_COSET_BOUND,
};

/// Configuration of one verification run.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    #[serde(rename = "N")]
    pub n_list: Vec<u64>,
    pub r_min: u32,
    pub r_max: u32,
    pub s_min: u32,
    /// Working precision: modules live over Z/2^precision.
    pub precision: u32,
    /// Selected check ids, or the single entry "all".
    pub checks: Vec<String>,
    pub coset_bound: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_list: vec![1, 3, 5],
            r_min: 2,
            r_max: 4,
            s_min: 2,
            precision: 16,
            checks: vec!["all".into()],
            coset_bound: DEFAULT_COSET_BOUND,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::BadSpec("empty N list".into()));
        }
        for &n in &self.n_list {
            if n == 0 || n % 2 == 0 {
                return Err(Error::BadSpec(format!("N must be odd and positive, got {n}")));
            }
        }
        if self.r_min < 2 {
            return Err(Error::BadSpec(format!(
                "r-min must be at least 2 (the tower starts at level N*4), got {}",
                self.r_min
            )));
        }
        if self.s_min < 2 {
            return Err(Error::BadSpec(format!("s-min must be at least 2, got {}", self.s_min)));
        }
        if self.r_max < self.r_min {
            return Err(Error::BadSpec(format!(
                "r-max {} below r-min {}",
                self.r_max, self.r_min
            )));
        }
        if !(4..=64).contains(&self.precision) {
            return Err(Error::BadSpec(format!(
                "precision must lie in [4, 64], got {}",
                self.precision
            )));
        }
        for c in &self.checks {
            if c != "all" && CheckId::parse(c).is_none() {
                return Err(Error::BadSpec(format!("unknown check id {c:?}")));
            }
        }
        Ok(())
    }

    fn selected(&self, id: CheckId) -> bool {
        self.checks.iter().any(|c| c == "all" || CheckId::parse(c) == Some(id))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckId {
    Lemma21,
    RankFormula,
    Eq56,
    Lemma31,
    Lemma34,
    Lemma35,
    Lemma36,
    TransferNorm,
    Theorem41,
    Prop51,
    DualRank,
    RankStability,
}

impl CheckId {
    pub const ALL: [CheckId; 12] = [
        CheckId::Lemma21,
        CheckId::RankFormula,
        CheckId::Eq56,
        CheckId::Lemma31,
        CheckId::Lemma34,
        CheckId::Lemma35,
        CheckId::Lemma36,
        CheckId::TransferNorm,
        CheckId::Theorem41,
        CheckId::Prop51,
        CheckId::DualRank,
        CheckId::RankStability,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckId::Lemma21 => "lemma-2.1",
            CheckId::RankFormula => "rank-formula",
            CheckId::Eq56 => "eq-5-6",
            CheckId::Lemma31 => "lemma-3.1",
            CheckId::Lemma34 => "lemma-3.4",
            CheckId::Lemma35 => "lemma-3.5",
            CheckId::Lemma36 => "lemma-3.6",
            CheckId::TransferNorm => "transfer-norm",
            CheckId::Theorem41 => "theorem-4.1",
            CheckId::Prop51 => "prop-5.1",
            CheckId::DualRank => "dual-rank",
            CheckId::RankStability => "rank-stability",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        CheckId::ALL.iter().copied().find(|id| id.as_str() == s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckParams {
    #[serde(rename = "N")]
    pub n: u64,
    pub r: Option<u32>,
    pub s: Option<u32>,
    pub k: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub params: CheckParams,
    pub status: CheckStatus,
    pub witness: Value,
    pub ms: u64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    #[serde(rename = "d_by_N")]
    pub d_by_n: BTreeMap<String, i64>,
    pub stable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub version: String,
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl ControlReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).count()
    }

    pub fn skipped(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Skipped).count()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with timing fields zeroed; byte-comparable across runs.
    pub fn timing_free_json(&self) -> String {
        let mut clone = self.clone();
        for c in &mut clone.checks {
            c.ms = 0;
        }
        clone.to_json_pretty()
    }
}

/// Immutable-after-memoization state shared by every check in a run.
pub struct Workspace {
    pub cache: PresentationCache,
    levels: Memo<(u64, u32, u32), Arc<LevelOps>>,
    ords: Memo<(u64, u32, u32, u32, bool), Arc<OrdinaryModule>>,
    pub idempotent_cap: usize,
}

impl Workspace {
    pub fn new(coset_bound: usize) -> Self {
        Workspace {
            cache: PresentationCache::new(coset_bound),
            levels: Memo::new(),
            ords: Memo::new(),
            idempotent_cap: DEFAULT_IDEMPOTENT_CAP,
        }
    }

    pub fn level(&self, n: u64, r: u32, s: u32) -> Result<Arc<LevelOps>> {
        self.levels
            .get_or_try((n, r, s), || Ok(Arc::new(LevelOps::build(&self.cache, n, r, s)?)))
    }

    /// Ordinary module of U at level (n, r, s) over Z/2^k.
    pub fn ordinary(&self, n: u64, r: u32, s: u32, k: u32) -> Result<Arc<OrdinaryModule>> {
        self.ordinary_inner(n, r, s, k, false)
    }

    /// Ordinary module of the transposed U; the dual-side object.
    pub fn ordinary_dual(&self, n: u64, r: u32, s: u32, k: u32) -> Result<Arc<OrdinaryModule>> {
        self.ordinary_inner(n, r, s, k, true)
    }

    fn ordinary_inner(
        &self,
        n: u64,
        r: u32,
        s: u32,
        k: u32,
        transposed: bool,
    ) -> Result<Arc<OrdinaryModule>> {
        self.ords.get_or_try((n, r, s, k, transposed), || {
            let level = self.level(n, r, s)?;
            let u_mod = ModMat::from_int(&level.u.mat, k);
            let u_mod = if transposed { u_mod.transpose() } else { u_mod };
            Ok(Arc::new(ordinary_part(&u_mod, self.idempotent_cap)?))
        })
    }
}

/// Restrict an exact map between two U-modules to their ordinary bases,
/// verifying that the ordinary part of the source maps into the ordinary
/// part of the destination.
fn restrict_map(src: &OrdinaryModule, dst: &OrdinaryModule, m: &IntMat) -> Result<ModMat> {
    let m_mod = ModMat::from_int(m, src.k);
    let image = m_mod.mul(&src.basis)?;
    let out = dst.proj.mul(&image)?;
    if dst.basis.mul(&out)? != image {
        return Err(Error::DoesNotCommute(
            "map does not carry the source ordinary part into the destination ordinary part"
                .into(),
        ));
    }
    Ok(out)
}

/// Is a d x c matrix over Z/2^k surjective onto (Z/2^k)^d?
fn surjective_mod(m: &ModMat) -> Result<bool> {
    let s = snf_mod(m)?;
    Ok(s.vals.len() >= m.rows() && s.vals.iter().take(m.rows()).all(|&v| v == 0))
}

fn fingerprint_hex(m: &IntMat) -> String {
    format!("{:016x}", m.fingerprint())
}

// ---------------------------------------------------------------------------
// individual checks
// ---------------------------------------------------------------------------

fn check_eta(n: u64, r: u32) -> Result<Value> {
    if r > 16 {
        return Err(Error::BadSpec(format!("eta surjectivity beyond r = 16 (got {r})")));
    }
    let classes = residue_classes(r);
    let phi = SubgroupSpec::phi(n, 2, r)?;
    let phi_up_cap = SubgroupSpec::phi(n, 2, r + 1)?.with_upper0();
    for &dbar in &classes {
        let alpha = eta_lift_variant(dbar, r, n, false, 0)?;
        if !phi.contains(&alpha)? || eta(&alpha, n, r)? != dbar {
            return Err(Error::Internal(format!("plain lift failed for dbar = {dbar}")));
        }
        let beta = eta_lift_variant(dbar, r, n, true, 0)?;
        if !phi_up_cap.contains(&beta)? || eta(&beta, n, r)? != dbar {
            return Err(Error::Internal(format!("restricted lift failed for dbar = {dbar}")));
        }
    }
    // the image is cyclic of order 2^{r-2}, generated by 5
    if class_order(5u64 % (1u64 << r), r) != 1 << (r - 2) {
        return Err(Error::Internal("class group is not cyclic of order 2^{r-2}".into()));
    }
    // homomorphism spot check on lifted pairs
    for pair in classes.windows(2) {
        let x = eta_lift_variant(pair[0], r, n, false, 0)?;
        let y = eta_lift_variant(pair[1], r, n, false, 0)?;
        if eta(&x.mul(&y), n, r)? != class_mul(pair[0], pair[1], r) {
            return Err(Error::Internal("eta is not multiplicative on a sample".into()));
        }
    }
    Ok(json!({
        "classes": classes.len(),
        "order": 1u64 << (r - 2),
    }))
}

fn check_rank_formula(ws: &Workspace, n: u64, r: u32) -> Result<Value> {
    let spec = SubgroupSpec::gamma1(n, r)?;
    let p = ws.cache.get(&spec)?;
    let idx_psl = p.table.len() as u64;
    let oracle = spec.index_in_psl2();
    if idx_psl != oracle {
        return Err(Error::Internal(format!(
            "enumerated projective index {idx_psl} != residue count {oracle}"
        )));
    }
    if p.rank as u64 != 1 + idx_psl / 6 {
        return Err(Error::Internal(format!(
            "rank {} != 1 + {idx_psl}/6",
            p.rank
        )));
    }
    Ok(json!({
        "rank": p.rank,
        "index_psl": idx_psl,
        "index_sl2": spec.index_in_sl2(),
    }))
}

fn check_eq56(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let ops = ws.level(n, r, s)?;
    // Eq. (5): stored operators really are the composites
    let uprime = ops.c_t.compose(&ops.v)?;
    if uprime.mat != ops.uprime.mat {
        return Err(Error::Internal("U' != C_t . V".into()));
    }
    let u = ops.inc.compose(&ops.uprime)?;
    if u.mat != ops.u.mat {
        return Err(Error::Internal("U != inc . C_t . V".into()));
    }
    // conjugation is an isomorphism of abelianizations
    if !ops.c_t_inv.compose(&ops.c_t)?.mat.is_identity()
        || !ops.c_t.compose(&ops.c_t_inv)?.mat.is_identity()
    {
        return Err(Error::Internal("conjugation by t is not unimodular".into()));
    }
    let mut witness = json!({
        "u": fingerprint_hex(&ops.u.mat),
        "uprime": fingerprint_hex(&ops.uprime.mat),
        "rank_phi": ops.phi.rank,
    });
    // Eq. (6) needs the level below
    if r > s {
        let below = ws.level(n, r - 1, s)?;
        let pi = ops.pi.as_ref().expect("pi exists for r > s");
        let via_pi = below.uprime.compose(pi)?;
        if via_pi.mat != ops.u.mat {
            return Err(Error::Internal("U' . pi != U at the upper level".into()));
        }
        let low = pi.compose(&below.uprime)?;
        if low.mat != below.u.mat {
            return Err(Error::Internal("pi . U' != U at the lower level".into()));
        }
        witness["eq6"] = json!("checked");
    } else {
        witness["eq6"] = json!("degenerate (r = s)");
    }
    Ok(witness)
}

fn check_lemma31(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let chain = chain_map(&ws.cache, n, r, s)?;
    let top = ws.level(n, r, r)?;
    let bot = ws.level(n, s, s)?;
    if chain.compose(&top.u)?.mat != bot.u.compose(&chain)?.mat {
        return Err(Error::Internal("chain map does not commute with U".into()));
    }
    // Gamma-equivariance against the diamond generator
    let d_top = top.diamond(5 % (1u64 << r), 0)?;
    let d_bot = bot.diamond(5 % (1u64 << s), 0)?;
    if chain.compose(&d_top)?.mat != d_bot.compose(&chain)?.mat {
        return Err(Error::Internal("chain map is not Gamma-equivariant".into()));
    }
    Ok(json!({
        "chain": fingerprint_hex(&chain.mat),
        "u_equivariant": true,
        "gamma_equivariant": true,
    }))
}

fn check_lemma34(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let ops = ws.level(n, r, s)?;
    let s_inc = snf(&ops.inc_gamma1.mat)?;
    // coker(Gamma_1^ab -> Phi^ab) = Gamma_s/Gamma_r = Z/2^{r-s}
    if s_inc.rank() != ops.phi.rank {
        return Err(Error::Internal("cokernel of the level inclusion is infinite".into()));
    }
    let nontrivial: Vec<i128> = s_inc.divisors().into_iter().filter(|&d| d != 1).collect();
    let expected: Vec<i128> = if r == s { vec![] } else { vec![1 << (r - s)] };
    if nontrivial != expected {
        return Err(Error::Internal(format!(
            "cokernel divisors {nontrivial:?}, expected {expected:?}"
        )));
    }
    // U acts as multiplication by 2 on the cokernel
    let u_minus_2 = ops.u.mat.sub(&IntMat::identity(ops.phi.rank).scale(2)?)?;
    for j in 0..u_minus_2.cols() {
        let col: Vec<i128> = (0..u_minus_2.rows()).map(|i| u_minus_2.get(i, j)).collect();
        if !in_column_span(&s_inc, &col)? {
            return Err(Error::Internal(format!(
                "(U - 2) column {j} is not in the image of Gamma_1^ab"
            )));
        }
    }
    Ok(json!({
        "cokernel": format!("Z/{}", 1u64 << (r - s)),
        "degenerate": r == s,
    }))
}

fn check_lemma35(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let ops = ws.level(n, r, s)?;
    let gen = 5 % (1u64 << r);
    let d = ops.diamond(gen, 0)?;
    // lift independence for every class, with structurally different lifts
    for dbar in residue_classes(r) {
        if ops.diamond(dbar, 0)?.mat != ops.diamond(dbar, 1)?.mat {
            return Err(Error::Internal(format!(
                "diamond matrix of class {dbar} depends on the lift"
            )));
        }
    }
    // identity class acts trivially, including through a nontrivial lift
    if !ops.diamond(1, 0)?.mat.is_identity() || !ops.diamond(1, 1)?.mat.is_identity() {
        return Err(Error::Internal("diamond(1) is not the identity".into()));
    }
    // multiplicativity and full order
    let gs = gamma_class(s, r);
    let dg = ops.diamond(gs, 0)?;
    if d.compose(&dg)?.mat != ops.diamond(class_mul(gen, gs, r), 0)?.mat {
        return Err(Error::Internal("diamond action is not multiplicative".into()));
    }
    let ord = class_order(gen, r);
    let mut acc = IntMat::identity(d.mat.rows());
    for _ in 0..ord {
        acc = acc.mul(&d.mat)?;
    }
    if !acc.is_identity() {
        return Err(Error::Internal("diamond matrix order does not divide the class order".into()));
    }
    // the commutation itself
    if ops.u.compose(&d)?.mat != d.compose(&ops.u)?.mat {
        return Err(Error::Internal("U does not commute with the diamond action".into()));
    }
    Ok(json!({
        "generator": gen,
        "order": ord,
        "diamond": fingerprint_hex(&d.mat),
    }))
}

fn check_lemma36(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let ops = ws.level(n, r, s)?;
    let diag = ws.level(n, r, r)?;
    let lhs = ops.v_down.compose(&ops.u)?;
    let rhs = diag.u.compose(&ops.v_down)?;
    if lhs.mat != rhs.mat {
        return Err(Error::Internal("transfer down does not commute with U".into()));
    }
    Ok(json!({
        "v_down": fingerprint_hex(&ops.v_down.mat),
    }))
}

fn check_transfer_norm(ws: &Workspace, n: u64, r: u32, s: u32) -> Result<Value> {
    let ops = ws.level(n, r, s)?;
    // index-2 pair: incl . V = 2 id on Phi^ab
    let incl = inclusion_map(&ops.phi_cap, &ops.phi)?;
    if incl.compose(&ops.v)?.mat != IntMat::identity(ops.phi.rank).scale(2)? {
        return Err(Error::Internal("incl . V != 2 id for the Gamma^0(2) pair".into()));
    }
    // index-2^{r-s} pair down to Gamma_1
    let idx = 1i128 << (r - s);
    if ops.inc_gamma1.compose(&ops.v_down)?.mat != IntMat::identity(ops.phi.rank).scale(idx)? {
        return Err(Error::Internal(format!(
            "incl . V != {idx} id for the Gamma_1 pair"
        )));
    }
    Ok(json!({ "indices": [2u64, 1u64 << (r - s)] }))
}

struct ControlOutcome {
    witness: Value,
}

fn control_at_precision(
    ws: &Workspace,
    n: u64,
    r: u32,
    s: u32,
    k: u32,
) -> Result<ControlOutcome> {
    let top = ws.level(n, r, r)?;
    let mid = ws.level(n, r, s)?;
    let chain = chain_map(&ws.cache, n, r, s)?;
    let gamma1_s = ws.cache.get(&SubgroupSpec::gamma1(n, s)?)?;
    let factor2 = inclusion_map(&mid.phi, &gamma1_s)?;
    let iota = &mid.inc_gamma1;

    // diamond of gamma_s on H_r; the augmentation ideal generator
    let d_gamma = top.diamond_gamma(s)?;

    // exact statements over Z
    if chain.compose(&d_gamma)?.mat != chain.mat {
        return Err(Error::Internal("chain map does not kill (gamma_s - 1)".into()));
    }
    if iota.compose(&d_gamma)?.mat != iota.mat {
        return Err(Error::Internal("inclusion into Phi^ab does not kill (gamma_s - 1)".into()));
    }
    if factor2.compose(iota)?.mat != chain.mat {
        return Err(Error::Internal("the two factors do not compose to the chain map".into()));
    }

    // ordinary parts mod 2^k
    let ord_r = ws.ordinary(n, r, r, k)?;
    let ord_s = ws.ordinary(n, s, s, k)?;
    let ord_phi = ws.ordinary(n, r, s, k)?;
    let (d_r, d_s, d_phi) = (ord_r.ord_rank, ord_s.ord_rank, ord_phi.ord_rank);

    let gamma_mod = ModMat::from_int(&d_gamma.mat, k);
    let o_gamma = ord_r.restrict(&gamma_mod)?;

    let c_ord = restrict_map(&ord_r, &ord_s, &chain.mat)?;
    let iota_ord = restrict_map(&ord_r, &ord_phi, &iota.mat)?;
    let factor2_ord = restrict_map(&ord_phi, &ord_s, &factor2.mat)?;

    // the control map factors through the co-invariants
    let aug = o_gamma.sub(&ModMat::identity(k, d_r))?;
    if !c_ord.mul(&aug)?.is_zero() {
        return Err(Error::Internal("control map does not factor through co-invariants".into()));
    }
    if !iota_ord.mul(&aug)?.is_zero() {
        return Err(Error::Internal("first factor does not factor through co-invariants".into()));
    }

    // surjectivity of the induced maps
    if !surjective_mod(&c_ord)? {
        return Err(Error::Internal("control map is not surjective mod 2^k".into()));
    }
    if !surjective_mod(&iota_ord)? {
        return Err(Error::Internal("first factor is not surjective mod 2^k".into()));
    }
    // second factor: isomorphism of ordinary parts
    if d_phi != d_s {
        return Err(Error::Internal(format!(
            "ordinary ranks differ through Phi: {d_phi} != {d_s}"
        )));
    }
    if !surjective_mod(&factor2_ord)? {
        return Err(Error::Internal("second factor is not invertible mod 2^k".into()));
    }

    // co-invariants profile: exactly d_s free components
    let coinv = coinvariants(&ord_r, &gamma_mod)?;
    let expected = PresentedModule {
        k,
        component_vals: vec![k; d_s],
    };
    if coinv != expected {
        return Err(Error::Internal(format!(
            "co-invariants {:?} are not free of rank {d_s}",
            coinv.component_vals
        )));
    }

    // composite of the factors equals the direct control map
    if factor2_ord.mul(&iota_ord)? != c_ord {
        return Err(Error::Internal("factor composition differs from the direct map".into()));
    }

    Ok(ControlOutcome {
        witness: json!({
            "d_r": d_r,
            "d_s": d_s,
            "d_phi": d_phi,
            "coinvariants": coinv.component_vals,
            "control": format!("{:016x}", c_ord.fingerprint()),
        }),
    })
}

/// Control check with one step of precision escalation; a freeness failure
/// at both precisions is reported as skipped with a diagnostic.
fn check_theorem41(ws: &Workspace, n: u64, r: u32, s: u32, k: u32) -> CheckOutcome {
    match control_at_precision(ws, n, r, s, k) {
        Ok(out) => CheckOutcome::pass(out.witness),
        Err(Error::PrecisionTooLow { .. }) if 2 * k <= 64 => {
            match control_at_precision(ws, n, r, s, 2 * k) {
                Ok(out) => {
                    let mut w = out.witness;
                    w["escalated_to"] = json!(2 * k);
                    CheckOutcome::pass(w)
                }
                Err(Error::PrecisionTooLow { k: kk }) => CheckOutcome::skip(json!({
                    "reason": format!("precision escalation exhausted at k = {kk}"),
                })),
                Err(e) => CheckOutcome::from_result(Err(e)),
            }
        }
        Err(Error::PrecisionTooLow { k: kk }) => CheckOutcome::skip(json!({
            "reason": format!("precision escalation exhausted at k = {kk}"),
        })),
        Err(e) => CheckOutcome::from_result(Err(e)),
    }
}

fn check_prop51(ws: &Workspace, n: u64, r: u32, s: u32, k: u32) -> Result<Value> {
    // successive control maps compose: (r -> s) = (r-1 -> s) . (r -> r-1)
    let mid = r - 1;
    let chain_rs = chain_map(&ws.cache, n, r, s)?;
    let chain_rm = chain_map(&ws.cache, n, r, mid)?;
    let chain_ms = chain_map(&ws.cache, n, mid, s)?;
    if chain_ms.compose(&chain_rm)?.mat != chain_rs.mat {
        return Err(Error::Internal("chain maps do not compose exactly".into()));
    }
    let ord_r = ws.ordinary(n, r, r, k)?;
    let ord_m = ws.ordinary(n, mid, mid, k)?;
    let ord_s = ws.ordinary(n, s, s, k)?;
    let rs = restrict_map(&ord_r, &ord_s, &chain_rs.mat)?;
    let rm = restrict_map(&ord_r, &ord_m, &chain_rm.mat)?;
    let ms = restrict_map(&ord_m, &ord_s, &chain_ms.mat)?;
    if ms.mul(&rm)? != rs {
        return Err(Error::Internal(
            "ordinary control maps do not compose through the middle level".into(),
        ));
    }
    Ok(json!({ "through": mid }))
}

fn check_dual_rank(ws: &Workspace, n: u64, r: u32, s: u32, k: u32) -> Result<Value> {
    let mid = ws.level(n, r, s)?;
    let ord_r = ws.ordinary(n, r, r, k)?;
    let ord_s = ws.ordinary(n, s, s, k)?;

    // ordinary rank is transpose invariant
    let ord_rt = ws.ordinary_dual(n, r, r, k)?;
    if ord_rt.ord_rank != ord_r.ord_rank {
        return Err(Error::Internal(format!(
            "ord rank of U^T is {} but U gives {}",
            ord_rt.ord_rank, ord_r.ord_rank
        )));
    }

    // transpose of the transfer, restricted to dual ordinary parts
    let ord_phit = ws.ordinary_dual(n, r, s, k)?;
    let vt = mid.v_down.mat.transpose();
    let vt_mod = ModMat::from_int(&vt, k);
    let image = vt_mod.mul(&ord_rt.basis)?;
    let vt_ord = ord_phit.proj.mul(&image)?;
    if ord_phit.basis.mul(&vt_ord)? != image {
        return Err(Error::Internal(
            "dual transfer does not preserve ordinary parts".into(),
        ));
    }
    if !surjective_mod(&vt_ord)? {
        return Err(Error::Internal("dual transfer is not surjective on ordinary parts".into()));
    }
    let kernel_rank = ord_rt.ord_rank - ord_phit.ord_rank;
    if kernel_rank != ord_r.ord_rank - ord_s.ord_rank {
        return Err(Error::Internal(format!(
            "dual kernel rank {kernel_rank} != d_r - d_s = {}",
            ord_r.ord_rank - ord_s.ord_rank
        )));
    }
    Ok(json!({
        "d_r": ord_r.ord_rank,
        "d_s": ord_s.ord_rank,
        "kernel_rank": kernel_rank,
    }))
}

/// Level independence of the ordinary rank invariant.
///
/// The control isomorphism (H_r ord)/(gamma_s - 1) = H_s ord together with
/// freeness over the inverse limit forces H_r ord to be free of a fixed
/// rank d over Z_2[Gamma/Gamma_r], so its Z_2-rank is d * 2^{r-2}: the
/// quantity independent of the level is d, the common rank over the group
/// rings. The check divides out the group-ring weight 2^{r-2} at each
/// level, requires the quotients to agree, and compares the common value
/// with the Nakayama count dim_{F_2} (H_2 (x) F_2)^ord at the bottom level.
fn check_rank_stability(
    ws: &Workspace,
    n: u64,
    r_min: u32,
    r_max: u32,
    k: u32,
) -> Result<(Value, i64)> {
    let mut ranks = Vec::new();
    let mut lambda_ranks = Vec::new();
    for r in r_min..=r_max {
        let rank = ws.ordinary(n, r, r, k)?.ord_rank;
        let weight = 1usize << (r - 2);
        if rank % weight != 0 {
            return Err(Error::Internal(format!(
                "ordinary rank {rank} at level r = {r} is not divisible by the group-ring \
                 weight {weight}"
            )));
        }
        ranks.push(rank);
        lambda_ranks.push(rank / weight);
    }
    let d = lambda_ranks[0];
    if lambda_ranks.iter().any(|&x| x != d) {
        return Err(Error::Internal(format!(
            "group-ring ranks vary across levels: {lambda_ranks:?} (raw ranks {ranks:?})"
        )));
    }
    // Nakayama count: mod-2 dimension of the ordinary part at level 2, the
    // minimal number of generators of the inverse limit
    let base = ws.level(n, 2, 2)?;
    let u_mod2 = ModMat::from_int(&base.u.mat, 1);
    let nakayama = ordinary_part(&u_mod2, ws.idempotent_cap)?.ord_rank;
    if nakayama != d {
        return Err(Error::Internal(format!(
            "Nakayama mod-2 dimension {nakayama} != stable group-ring rank {d}"
        )));
    }
    Ok((
        json!({
            "ranks": ranks,
            "d": d,
            "nakayama_dim": nakayama,
            "law": "ord_rank(H_r) = d * 2^(r-2)",
        }),
        d as i64,
    ))
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

enum CheckOutcome {
    Pass(Value),
    Fail(Value),
    Skip(Value),
}

impl CheckOutcome {
    fn pass(witness: Value) -> Self {
        CheckOutcome::Pass(witness)
    }

    fn fail(err: Error) -> Self {
        CheckOutcome::Fail(json!({ "error": err.to_string() }))
    }

    fn skip(witness: Value) -> Self {
        CheckOutcome::Skip(witness)
    }

    fn from_result(res: Result<Value>) -> Self {
        match res {
            Ok(w) => CheckOutcome::Pass(w),
            Err(e @ (Error::CosetBound { .. } | Error::BadSpec(_))) => CheckOutcome::Skip(json!({
                "reason": e.to_string(),
            })),
            Err(e) => CheckOutcome::fail(e),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    id: CheckId,
    n: u64,
    r: Option<u32>,
    s: Option<u32>,
    k: Option<u32>,
}

fn build_jobs(config: &VerifyConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    let k = config.precision;
    for &n in &config.n_list {
        for r in config.r_min..=config.r_max {
            if config.selected(CheckId::Lemma21) {
                jobs.push(Job { id: CheckId::Lemma21, n, r: Some(r), s: None, k: None });
            }
            if config.selected(CheckId::RankFormula) {
                jobs.push(Job { id: CheckId::RankFormula, n, r: Some(r), s: None, k: None });
            }
        }
        for r in config.r_min..=config.r_max {
            for s in config.s_min..=r {
                let grid = |id: CheckId, with_k: bool| Job {
                    id,
                    n,
                    r: Some(r),
                    s: Some(s),
                    k: if with_k { Some(k) } else { None },
                };
                if config.selected(CheckId::Eq56) {
                    jobs.push(grid(CheckId::Eq56, false));
                }
                if config.selected(CheckId::Lemma31) {
                    jobs.push(grid(CheckId::Lemma31, false));
                }
                if config.selected(CheckId::Lemma34) {
                    jobs.push(grid(CheckId::Lemma34, false));
                }
                if config.selected(CheckId::Lemma35) {
                    jobs.push(grid(CheckId::Lemma35, false));
                }
                if config.selected(CheckId::Lemma36) {
                    jobs.push(grid(CheckId::Lemma36, false));
                }
                if config.selected(CheckId::TransferNorm) {
                    jobs.push(grid(CheckId::TransferNorm, false));
                }
                if config.selected(CheckId::Theorem41) {
                    jobs.push(grid(CheckId::Theorem41, true));
                }
                if config.selected(CheckId::Prop51) && r > s {
                    jobs.push(grid(CheckId::Prop51, true));
                }
                if config.selected(CheckId::DualRank) {
                    jobs.push(grid(CheckId::DualRank, true));
                }
            }
        }
        if config.selected(CheckId::RankStability) {
            jobs.push(Job {
                id: CheckId::RankStability,
                n,
                r: Some(config.r_max),
                s: None,
                k: Some(k),
            });
        }
    }
    jobs
}

fn execute(ws: &Workspace, config: &VerifyConfig, job: Job) -> (CheckResult, Option<i64>) {
    let start = Instant::now();
    let k = config.precision;
    let mut d_value = None;
    let outcome = match job.id {
        CheckId::Lemma21 => CheckOutcome::from_result(check_eta(job.n, job.r.unwrap())),
        CheckId::RankFormula => {
            CheckOutcome::from_result(check_rank_formula(ws, job.n, job.r.unwrap()))
        }
        CheckId::Eq56 => {
            CheckOutcome::from_result(check_eq56(ws, job.n, job.r.unwrap(), job.s.unwrap()))
        }
        CheckId::Lemma31 => {
            CheckOutcome::from_result(check_lemma31(ws, job.n, job.r.unwrap(), job.s.unwrap()))
        }
        CheckId::Lemma34 => {
            CheckOutcome::from_result(check_lemma34(ws, job.n, job.r.unwrap(), job.s.unwrap()))
        }
        CheckId::Lemma35 => {
            CheckOutcome::from_result(check_lemma35(ws, job.n, job.r.unwrap(), job.s.unwrap()))
        }
        CheckId::Lemma36 => {
            CheckOutcome::from_result(check_lemma36(ws, job.n, job.r.unwrap(), job.s.unwrap()))
        }
        CheckId::TransferNorm => CheckOutcome::from_result(check_transfer_norm(
            ws,
            job.n,
            job.r.unwrap(),
            job.s.unwrap(),
        )),
        CheckId::Theorem41 => check_theorem41(ws, job.n, job.r.unwrap(), job.s.unwrap(), k),
        CheckId::Prop51 => CheckOutcome::from_result(check_prop51(
            ws,
            job.n,
            job.r.unwrap(),
            job.s.unwrap(),
            k,
        )),
        CheckId::DualRank => CheckOutcome::from_result(check_dual_rank(
            ws,
            job.n,
            job.r.unwrap(),
            job.s.unwrap(),
            k,
        )),
        CheckId::RankStability => {
            match check_rank_stability(ws, job.n, config.r_min, config.r_max, k) {
                Ok((w, d)) => {
                    d_value = Some(d);
                    CheckOutcome::Pass(w)
                }
                Err(e @ (Error::CosetBound { .. } | Error::BadSpec(_))) => {
                    CheckOutcome::Skip(json!({ "reason": e.to_string() }))
                }
                Err(e) => CheckOutcome::fail(e),
            }
        }
    };
    let (status, witness) = match outcome {
        CheckOutcome::Pass(w) => (CheckStatus::Pass, w),
        CheckOutcome::Fail(w) => (CheckStatus::Fail, w),
        CheckOutcome::Skip(w) => (CheckStatus::Skipped, w),
    };
    (
        CheckResult {
            id: job.id.as_str().to_string(),
            params: CheckParams {
                n: job.n,
                r: job.r,
                s: job.s,
                k: job.k,
            },
            status,
            witness,
            ms: start.elapsed().as_millis() as u64,
        },
        d_value,
    )
}

/// Run the selected checks over the configured grid.
pub fn run(config: &VerifyConfig) -> Result<ControlReport> {
    config.validate()?;
    let ws = Workspace::new(config.coset_bound);
    let jobs = build_jobs(config);
    let results = par_map(jobs, |job| execute(&ws, config, job));

    let mut checks = Vec::with_capacity(results.len());
    let mut d_by_n = BTreeMap::new();
    let mut stable = true;
    for (check, d) in results {
        if check.id == CheckId::RankStability.as_str() {
            if let Some(d) = d {
                d_by_n.insert(check.params.n.to_string(), d);
            }
            if check.status != CheckStatus::Pass {
                stable = false;
            }
        }
        checks.push(check);
    }

    Ok(ControlReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        checks,
        summary: Summary { d_by_n, stable },
    })
}
