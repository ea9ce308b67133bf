//! Lyapunov sequences, focus order, order-set constraints, symbolic
//! half-return maps, and the two-path cross-check.
//!
//! The k-th Lyapunov constant of the piecewise system is reported as a
//! positive factor times a polynomial part `L_k`:
//! - FF: `L_k = gamma_k+ + (-1)^(k-1) gamma_k-`, factor `C_k^FF(gamma_1+)`;
//!   the k = 1 constant `e^(g1+ pi) - e^(-g1- pi)` vanishes exactly when
//!   `L_1 = g1+ + g1-` does, so the sequence stays polynomial.
//! - FP: `L_k = gamma_k+`, factor `C_k^FP`.
//! - PP: `L_k = sigma_k+` for even k and identically zero for odd k
//!   (structurally, never by cancellation), factor `2/(k + 2 ell+ - 1)`.
//!
//! Each `L_k` is additionally reduced modulo the ideal of the previous ones,
//! which is the precise sense in which the constants are "expressed under
//! the vanishing of the earlier ones".
//!
//! Two factor values coexist for FF: the closed-form constant as printed in
//! the source formulas and the integral-defined one coming out of the return
//! map. They agree at `gamma_1 = 0` and for k <= 2 but differ for k >= 3 at
//! nonzero `gamma_1`; both are computed, the return-map path uses the
//! integral one, and the cross-check reports every disagreement instead of
//! hiding it.

use crate::bell::{bell, RingElem};
use crate::exactnum::{double_factorial, ExtScalar, Rational};
use crate::nf_focus::{reduce_focus_side, FocusNF, NfError};
use crate::nf_tangency::{reduce_pp_upper, reduce_tangency, TangencyError, TangencyNF};
use crate::polyring::{reduce_mod_set, GroebnerBudget, MultiPoly, PolyError};
use crate::sysmodel::{
    classify, homeomorphism_consistency_check, BoundaryClass, Classification, HomeoCheck,
    PiecewiseSystem, Side, SysError,
};
use crate::trigexp::{ExtPoly, TrigExpError, TrigExpPoly, TrigKind};
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum LyapError {
    #[error("the origin is not monodromic: {0}")]
    NotMonodromic(String),
    #[error("cross-check precondition failed: {0}")]
    CrosscheckPrecondition(String),
    #[error("order sets are only defined for FF and FP types (no clear relationship for PP)")]
    OrderSetForPP,
    #[error(transparent)]
    Sys(#[from] SysError),
    #[error(transparent)]
    Focus(#[from] NfError),
    #[error(transparent)]
    Tangency(#[from] TangencyError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    TrigExp(#[from] TrigExpError),
}

// ---------------------------------------------------------------------------
// Factor tags
// ---------------------------------------------------------------------------

/// Positive factor attached to a Lyapunov polynomial part.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorTag {
    /// k = 1 of FF: `e^(g1+ pi) - e^(-g1- pi)`, recorded as metadata while
    /// the polynomial part carries the vanishing-equivalent `g1+ + g1-`.
    ExpDifferenceFF,
    /// k = 1 of FP: `e^(g1+ pi) - 1`.
    ExpDifferenceFP,
    /// `C_k^FF(gamma_1+)`.
    FF { k: u32, g1: Rational },
    /// `C_k^FP`.
    FP { k: u32 },
    /// `C_k^PP = 2/(k + 2 ell - 1)`.
    PP { k: u32, ell: u32 },
    /// Odd-index PP entries are identically zero; no factor applies.
    StructuralZero,
}

/// Closed-form constant `C_k^FF` as printed: for odd k
/// `pi (k-2)!! E / ((k-1)!! (1+g^2)^((k-1)/2))`, for even k
/// `(k-2)!! (E + E^2) / ((k-1)!! (1+g^2)^(k/2))`.
pub fn c_ff_printed(k: u32, g1: &Rational) -> ExtScalar {
    assert!(k >= 2);
    let dd = double_factorial(k as i64 - 2) / double_factorial(k as i64 - 1);
    let one_g2 = Rational::one() + g1 * g1;
    if k % 2 == 1 {
        let mut denom = Rational::one();
        for _ in 0..((k - 1) / 2) {
            denom *= &one_g2;
        }
        ExtScalar::monomial(dd / denom, 1, 1, g1.clone())
    } else {
        let mut denom = Rational::one();
        for _ in 0..(k / 2) {
            denom *= &one_g2;
        }
        let c = dd / denom;
        ExtScalar::monomial(c.clone(), 0, 1, g1.clone())
            .add(&ExtScalar::monomial(c, 0, 2, g1.clone()))
            .expect("same rate")
    }
}

/// Integral-defined constant
/// `Chat_k(g) = e^(g pi) * int_0^pi sin^(k-1) tau e^((k-1) g tau) dtau`,
/// evaluated exactly through the trig-exponential algebra.
pub fn c_ff_integral(k: u32, g1: &Rational) -> ExtScalar {
    assert!(k >= 2);
    let table = crate::polyring::SymbolTable::new(&[]).expect("empty table");
    let sin = TrigExpPoly::sin_tau(&table);
    let mut f = TrigExpPoly::one(&table);
    for _ in 0..(k - 1) {
        f = f.product(&sin);
    }
    let rate = g1 * Rational::from_integer((k as i64 - 1).into());
    f = f.product(&TrigExpPoly::exp_tau(&table, rate));
    let integral = f.antiderivative().eval_at_pi(g1).expect("integer frequencies by construction");
    if g1.is_zero() {
        integral
    } else {
        let e1 = ExtScalar::monomial(Rational::one(), 0, 1, g1.clone());
        integral.mul(&e1).expect("same rate")
    }
}

/// `C_k^FP = pi (k-2)!!/(k-1)!! * (2/pi)^((1+(-1)^k)/2)`.
pub fn c_fp(k: u32) -> ExtScalar {
    assert!(k >= 2);
    let dd = double_factorial(k as i64 - 2) / double_factorial(k as i64 - 1);
    if k % 2 == 1 {
        ExtScalar::monomial(dd, 1, 0, Rational::zero())
    } else {
        ExtScalar::from_rational(dd * Rational::from_integer(2.into()))
    }
}

/// `C_k^PP = 2/(k + 2 ell - 1)`.
pub fn c_pp(k: u32, ell: u32) -> Rational {
    Rational::new(2.into(), ((k + 2 * ell - 1) as i64).into())
}

impl FactorTag {
    /// Exact value of the factor when it lives in the extension ring.
    pub fn value(&self) -> Option<ExtScalar> {
        match self {
            FactorTag::FF { k, g1 } => Some(c_ff_integral(*k, g1)),
            FactorTag::FP { k } => Some(c_fp(*k)),
            FactorTag::PP { k, ell } => Some(ExtScalar::from_rational(c_pp(*k, *ell))),
            FactorTag::ExpDifferenceFF
            | FactorTag::ExpDifferenceFP
            | FactorTag::StructuralZero => None,
        }
    }

    /// The printed closed-form value, where it differs from [`Self::value`].
    pub fn printed_value(&self) -> Option<ExtScalar> {
        match self {
            FactorTag::FF { k, g1 } => Some(c_ff_printed(*k, g1)),
            _ => self.value(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FactorTag::ExpDifferenceFF => "exp(g1+ pi) - exp(-g1- pi)".into(),
            FactorTag::ExpDifferenceFP => "exp(g1+ pi) - 1".into(),
            FactorTag::FF { k, g1 } => format!("C_{k}^FF(g1 = {g1})"),
            FactorTag::FP { k } => format!("C_{k}^FP"),
            FactorTag::PP { k, ell } => format!("C_{k}^PP = {}", c_pp(*k, *ell)),
            FactorTag::StructuralZero => "structural zero (odd PP index)".into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Lyapunov sequences
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqType {
    FF,
    FP,
    PP,
}

#[derive(Debug, Clone)]
pub struct LyapunovEntry {
    pub k: u32,
    pub raw: MultiPoly,
    pub reduced: MultiPoly,
    pub factor: FactorTag,
}

#[derive(Debug, Clone)]
pub struct LyapunovSequence {
    pub sys_type: SeqType,
    pub n: u32,
    pub entries: Vec<LyapunovEntry>,
}

impl LyapunovSequence {
    pub fn entry(&self, k: u32) -> &LyapunovEntry {
        &self.entries[(k - 1) as usize]
    }

    /// First index with a nonzero reduced part, if any.
    pub fn first_nonzero(&self) -> Option<&LyapunovEntry> {
        self.entries.iter().find(|e| !e.reduced.is_zero())
    }
}

fn reduce_against_priors(
    raws: Vec<(u32, MultiPoly, FactorTag)>,
    budget: GroebnerBudget,
) -> Result<Vec<LyapunovEntry>, PolyError> {
    let mut entries = Vec::with_capacity(raws.len());
    let mut priors: Vec<MultiPoly> = Vec::new();
    for (k, raw, factor) in raws {
        let reduced = reduce_mod_set(&raw, &priors, budget)?;
        if !raw.is_zero() {
            priors.push(raw.clone());
        }
        entries.push(LyapunovEntry { k, raw, reduced, factor });
    }
    Ok(entries)
}

/// FF sequence from the two gamma sequences (`gamma[k-1]` is `gamma_k`).
pub fn lyapunov_ff(
    gamma_p: &[MultiPoly],
    gamma_m: &[MultiPoly],
    n: u32,
    budget: GroebnerBudget,
) -> Result<LyapunovSequence, PolyError> {
    let g1p = gamma_p[0].as_constant().unwrap_or_else(Rational::zero);
    let mut raws = Vec::new();
    for k in 1..=(n + 1) {
        let gp = &gamma_p[(k - 1) as usize];
        let gm = &gamma_m[(k - 1) as usize];
        let raw = if k % 2 == 1 { gp.checked_add(gm)? } else { gp.checked_sub(gm)? };
        let factor = if k == 1 {
            FactorTag::ExpDifferenceFF
        } else {
            FactorTag::FF { k, g1: g1p.clone() }
        };
        raws.push((k, raw, factor));
    }
    Ok(LyapunovSequence { sys_type: SeqType::FF, n, entries: reduce_against_priors(raws, budget)? })
}

/// FP sequence: the lower half-map is the identity, so `L_k = gamma_k+`.
pub fn lyapunov_fp(
    gamma_p: &[MultiPoly],
    n: u32,
    budget: GroebnerBudget,
) -> Result<LyapunovSequence, PolyError> {
    let mut raws = Vec::new();
    for k in 1..=(n + 1) {
        let raw = gamma_p[(k - 1) as usize].clone();
        let factor =
            if k == 1 { FactorTag::ExpDifferenceFP } else { FactorTag::FP { k } };
        raws.push((k, raw, factor));
    }
    Ok(LyapunovSequence { sys_type: SeqType::FP, n, entries: reduce_against_priors(raws, budget)? })
}

/// PP sequence: odd entries are structurally zero, even entries are
/// `sigma_k+` (`sigma[k-2]` is `sigma_k`).
pub fn lyapunov_pp(
    sigma_p: &[MultiPoly],
    ell_p: u32,
    n: u32,
    budget: GroebnerBudget,
) -> Result<LyapunovSequence, PolyError> {
    let table = sigma_p
        .first()
        .map(|p| p.table().clone())
        .expect("sigma sequence nonempty");
    let mut raws = Vec::new();
    for k in 1..=(n + 1) {
        if k % 2 == 1 {
            raws.push((k, MultiPoly::zero(&table), FactorTag::StructuralZero));
        } else {
            raws.push((k, sigma_p[(k - 2) as usize].clone(), FactorTag::PP { k, ell: ell_p }));
        }
    }
    Ok(LyapunovSequence { sys_type: SeqType::PP, n, entries: reduce_against_priors(raws, budget)? })
}

// ---------------------------------------------------------------------------
// Focus order and the order-set constraints
// ---------------------------------------------------------------------------

/// Half-integer `numerator/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Half(pub u32);

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FocusOrder {
    /// Focus of order `value/2`.
    Order(Half),
    /// Every constant up to index N+1 vanishes.
    CenterUpToOrder(u32),
    /// Vanishing depends on parameters; the undecided reduced parts are
    /// listed in index order.
    ParameterDependent(Vec<(u32, MultiPoly)>),
}

impl fmt::Display for FocusOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FocusOrder::Order(h) => write!(f, "focus of order {h}"),
            FocusOrder::CenterUpToOrder(n) => write!(f, "center up to order {n}"),
            FocusOrder::ParameterDependent(conds) => {
                write!(f, "parameter-dependent; conditions: ")?;
                for (idx, (k, p)) in conds.iter().enumerate() {
                    if idx > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "V{k}: {}", p.render())?;
                }
                Ok(())
            }
        }
    }
}

/// Smallest k with nonzero reduced part gives order `(k-1)/2`; entries whose
/// vanishing cannot be decided yield the parameter-dependent outcome.
pub fn focus_order(seq: &LyapunovSequence) -> FocusOrder {
    let mut conds = Vec::new();
    for e in &seq.entries {
        if e.reduced.is_zero() {
            continue;
        }
        match e.reduced.as_constant() {
            Some(_) => {
                if conds.is_empty() {
                    return FocusOrder::Order(Half(e.k - 1));
                }
                conds.push((e.k, e.reduced.clone()));
                return FocusOrder::ParameterDependent(conds);
            }
            None => conds.push((e.k, e.reduced.clone())),
        }
    }
    if conds.is_empty() {
        FocusOrder::CenterUpToOrder(seq.n)
    } else {
        FocusOrder::ParameterDependent(conds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsystemOrder {
    Finite(u32),
    Infinite,
}

/// The admissible order set of the piecewise system given the subsystem
/// orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PossibleOrders {
    /// Exactly order 0.
    Zero,
    /// `{1/2, 3/2, ..., (2m-1)/2} ∪ {m}`.
    HalfOddUpTo { m: u32 },
    /// Equal finite subsystem orders `s`: `{(2i+1)/2 : i < s} ∪ {i/2 : i >= 2s}`
    /// together with the center.
    EqualFinite { s: u32 },
    /// Equal infinite subsystem orders: every half-odd order or a center.
    AllHalfOdd,
    /// Both subsystem orders zero: no constraint.
    Anything,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderValue {
    Half(u32),
    Center,
}

impl PossibleOrders {
    pub fn contains(&self, v: OrderValue) -> bool {
        match (self, v) {
            (PossibleOrders::Anything, _) => true,
            (PossibleOrders::Zero, OrderValue::Half(h)) => h == 0,
            (PossibleOrders::Zero, OrderValue::Center) => false,
            (PossibleOrders::HalfOddUpTo { m }, OrderValue::Half(h)) => {
                (h % 2 == 1 && h <= 2 * m - 1) || h == 2 * m
            }
            (PossibleOrders::HalfOddUpTo { .. }, OrderValue::Center) => false,
            (PossibleOrders::EqualFinite { s }, OrderValue::Half(h)) => {
                (h % 2 == 1 && h < 2 * s) || h >= 2 * s
            }
            (PossibleOrders::EqualFinite { .. }, OrderValue::Center) => true,
            (PossibleOrders::AllHalfOdd, OrderValue::Half(h)) => h % 2 == 1,
            (PossibleOrders::AllHalfOdd, OrderValue::Center) => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PossibleOrders::Zero => "{0}".into(),
            PossibleOrders::HalfOddUpTo { m } => {
                let mut parts: Vec<String> =
                    (0..*m).map(|i| format!("{}", Half(2 * i + 1))).collect();
                parts.push(format!("{m}"));
                format!("{{{}}}", parts.join(", "))
            }
            PossibleOrders::EqualFinite { s } => format!(
                "{{1/2, 3/2, ..., {}}} ∪ {{k/2 : k >= {}}} ∪ {{center}}",
                Half(2 * s - 1),
                2 * s
            ),
            PossibleOrders::AllHalfOdd => "{1/2, 3/2, 5/2, ...} ∪ {center}".into(),
            PossibleOrders::Anything => "every half-integer order and center".into(),
        }
    }
}

/// Order-set constraints for FF and FP; PP has no such relationship and is
/// refused.
pub fn possible_orders(
    sys_type: SeqType,
    upper: SubsystemOrder,
    lower: Option<SubsystemOrder>,
) -> Result<PossibleOrders, LyapError> {
    use SubsystemOrder::*;
    match sys_type {
        SeqType::PP => Err(LyapError::OrderSetForPP),
        SeqType::FP => Ok(match upper {
            Finite(0) => PossibleOrders::Zero,
            Finite(s) => PossibleOrders::HalfOddUpTo { m: s },
            Infinite => PossibleOrders::AllHalfOdd,
        }),
        SeqType::FF => {
            let lower = lower.expect("FF needs both subsystem orders");
            Ok(match (upper, lower) {
                (Finite(0), Finite(0)) => PossibleOrders::Anything,
                (Finite(0), _) | (_, Finite(0)) => PossibleOrders::Zero,
                (Finite(a), Finite(b)) if a == b => PossibleOrders::EqualFinite { s: a },
                (Finite(a), Finite(b)) => PossibleOrders::HalfOddUpTo { m: a.min(b) },
                (Finite(a), Infinite) | (Infinite, Finite(a)) => {
                    PossibleOrders::HalfOddUpTo { m: a }
                }
                (Infinite, Infinite) => PossibleOrders::AllHalfOdd,
            })
        }
    }
}

/// Center-of-truncation test: every raw `L_k` vanishes identically.
/// Returns the first violated index as witness otherwise.
pub fn center_truncation_check(seq: &LyapunovSequence) -> (bool, Option<u32>) {
    for e in &seq.entries {
        if !e.raw.is_zero() {
            return (false, Some(e.k));
        }
    }
    (true, None)
}

// ---------------------------------------------------------------------------
// Half-return maps
// ---------------------------------------------------------------------------

impl RingElem for TrigExpPoly {
    fn ring_zero(&self) -> Self {
        TrigExpPoly::zero(self.table())
    }
    fn ring_one(&self) -> Self {
        TrigExpPoly::one(self.table())
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.product(other)
    }
    fn is_ring_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Upper half-return map of the FF normal form:
/// `Pi+(x) = -sum u_k x^k` with `u_1 = E` and the Bell-polynomial recursion
/// on the angular solution coefficients `r_j(tau)`.
#[derive(Debug, Clone)]
pub struct ReturnMapFF {
    pub g1: Rational,
    /// `u[k-1]` is `u_k`, `k = 1..=N+1`.
    pub u: Vec<ExtPoly>,
    /// The angular coefficient functions `r_j`.
    pub r: Vec<TrigExpPoly>,
}

pub fn upper_return_map_ff(gamma: &[MultiPoly], n: u32) -> Result<ReturnMapFF, LyapError> {
    let table = gamma[0].table().clone();
    let g1 = gamma[0].as_constant().ok_or_else(|| {
        LyapError::CrosscheckPrecondition(format!(
            "gamma_1 must be a rational constant, got {}",
            gamma[0].render()
        ))
    })?;
    let sin = TrigExpPoly::sin_tau(&table);
    let mut sin_pow = vec![TrigExpPoly::one(&table)];
    for _ in 0..n {
        sin_pow.push(sin_pow.last().unwrap().product(&sin));
    }
    let exp_g1 = TrigExpPoly::exp_tau(&table, g1.clone());
    let exp_neg_g1 = TrigExpPoly::exp_tau(&table, -&g1);
    let mut r: Vec<TrigExpPoly> = vec![exp_g1.clone()]; // r_1 = e^(g1 tau)
    for j in 2..=(n as usize + 1) {
        // gamma_j * e^(g1 tau) * AD(sin^(j-1) s * e^((j-1) g1 s))
        let rate = &g1 * Rational::from_integer((j as i64 - 1).into());
        let base = sin_pow[j - 1]
            .product(&TrigExpPoly::exp_tau(&table, rate))
            .antiderivative();
        let mut rj = exp_g1.product(&base).scale_poly(&gamma[j - 1]);
        for i in 2..j {
            // gamma_i * e^(g1 tau) * AD(sin^(i-1) s e^(-g1 s) bell(j,i)(r_1..r_{j-i+1}))
            let args: Vec<TrigExpPoly> = r[..(j - i + 1)].to_vec();
            let b = bell(j as u32, i as u32, &args).expect("recursion provides enough args");
            let integrand = sin_pow[i - 1].product(&exp_neg_g1).product(&b);
            let term = exp_g1.product(&integrand.antiderivative()).scale_poly(&gamma[i - 1]);
            rj = rj.add(&term);
        }
        r.push(rj);
    }
    let mut u = Vec::with_capacity(r.len());
    for rj in &r {
        u.push(rj.eval_at_pi_poly(&g1)?);
    }
    Ok(ReturnMapFF { g1, u, r })
}

/// Upper half-return map of the PP normal form:
/// `Pi+(x) = -sum v_k x^k` with `v_1 = 1`,
/// `v_2 = 2 sigma_2/(1 + 2 ell)`, and for k >= 3
/// `v_k = (1 + (-1)^k) sigma_k/(k + 2 ell - 1) + Psi` where
/// `Psi = -(1/(2 ell)) bell(k+2 ell-1, 2 ell)(v_1..v_{k-1}, 0)
///        - sum_{i=2 ell+1}^{k+2 ell-2} (-1)^i (sigma_{i-2 ell+1}/i)
///          bell(k+2 ell-1, i)(v_1..v_{k+2 ell-i})`.
///
/// `sigma[k-2]` is `sigma_k`; the result `v[k-1]` is `v_k`.
pub fn upper_return_map_pp(sigma: &[MultiPoly], ell: u32, n: u32) -> Vec<MultiPoly> {
    let table = sigma
        .first()
        .map(|p| p.table().clone())
        .expect("sigma sequence nonempty");
    let w = 2 * ell;
    let mut v: Vec<MultiPoly> = vec![MultiPoly::one(&table)];
    if n == 0 {
        return v;
    }
    let c2 = Rational::new(2.into(), ((1 + w) as i64).into());
    v.push(sigma[0].scale(&c2));
    for k in 3..=(n as usize + 1) {
        let mut vk = if k % 2 == 0 {
            let c = Rational::new(2.into(), ((k as u32 + w - 1) as i64).into());
            sigma[k - 2].scale(&c)
        } else {
            MultiPoly::zero(&table)
        };
        // -(1/(2 ell)) bell(k + 2 ell - 1, 2 ell)(v_1, ..., v_{k-1}, 0)
        let mut args: Vec<MultiPoly> = v[..(k - 1)].to_vec();
        args.push(MultiPoly::zero(&table));
        let b0 = bell((k as u32) + w - 1, w, &args).expect("args sized k");
        vk = &vk - &b0.scale(&Rational::new(1.into(), (w as i64).into()));
        for i in (w + 1)..=(k as u32 + w - 2) {
            let nargs = (k as u32 + w - i) as usize;
            let b = bell(k as u32 + w - 1, i, &v[..nargs]).expect("enough args");
            let sig_idx = (i - w + 1) as usize; // sigma_{i - 2 ell + 1}
            let coef = Rational::new(1.into(), (i as i64).into());
            let term = b.checked_mul(&sigma[sig_idx - 2]).expect("table").scale(&coef);
            if i % 2 == 0 {
                vk = &vk - &term;
            } else {
                vk = &vk + &term;
            }
        }
        v.push(vk);
    }
    v
}

// ---------------------------------------------------------------------------
// Pipeline driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum SideNF {
    Focus(FocusNF),
    Tangency(TangencyNF),
}

impl SideNF {
    pub fn transform(&self) -> &crate::sysmodel::TransformRecord {
        match self {
            SideNF::Focus(nf) => &nf.transform,
            SideNF::Tangency(nf) => &nf.transform,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub classification: Classification,
    pub n: u32,
    pub seq: LyapunovSequence,
    pub order: FocusOrder,
    pub upper_nf: SideNF,
    pub lower_nf: SideNF,
    pub homeo: HomeoCheck,
}

/// Run the whole symbolic pipeline: classify, normalize orientation, reduce
/// both sides with matched boundary constants, assemble the Lyapunov
/// sequence and the focus order.
pub fn analyze(
    system: &PiecewiseSystem,
    n: u32,
    budget: GroebnerBudget,
) -> Result<Analysis, LyapError> {
    let classification = classify(system)?;
    let sys = &classification.normalized;
    let table = sys.table();
    let zeros: Vec<MultiPoly> = (0..n).map(|_| MultiPoly::zero(table)).collect();
    let (seq, upper_nf, lower_nf) = match &classification.class {
        BoundaryClass::NotMonodromic { reason } => {
            return Err(LyapError::NotMonodromic(reason.clone()))
        }
        BoundaryClass::FF { .. } => {
            let up = reduce_focus_side(&sys.upper.0, &sys.upper.1, n, &zeros)?;
            let lo = reduce_focus_side(&sys.lower.0, &sys.lower.1, n, &zeros)?;
            let seq = lyapunov_ff(&up.gamma, &lo.gamma, n, budget)?;
            (seq, SideNF::Focus(up), SideNF::Focus(lo))
        }
        BoundaryClass::FP { .. } => {
            let lo = reduce_tangency(&sys.lower.0, &sys.lower.1, Side::Lower, n)?;
            let up = reduce_focus_side(&sys.upper.0, &sys.upper.1, n, &lo.r0)?;
            let seq = lyapunov_fp(&up.gamma, n, budget)?;
            (seq, SideNF::Focus(up), SideNF::Tangency(lo))
        }
        BoundaryClass::PP { upper, .. } => {
            let lo = reduce_tangency(&sys.lower.0, &sys.lower.1, Side::Lower, n)?;
            let up = reduce_pp_upper(&sys.upper.0, &sys.upper.1, n, &lo.r0)?;
            let seq = lyapunov_pp(&up.sigma, upper.ell, n, budget)?;
            (seq, SideNF::Tangency(up), SideNF::Tangency(lo))
        }
    };
    let order = focus_order(&seq);
    let homeo = homeomorphism_consistency_check(upper_nf.transform(), lower_nf.transform());
    Ok(Analysis { classification, n, seq, order, upper_nf, lower_nf, homeo })
}

// ---------------------------------------------------------------------------
// Cross-check of the two computation paths
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CrosscheckEntry {
    pub k: u32,
    pub agree: bool,
    pub difference: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConstantNote {
    pub k: u32,
    pub printed: ExtScalar,
    pub integral: ExtScalar,
    pub equal: bool,
}

#[derive(Debug, Clone)]
pub struct CrosscheckReport {
    pub per_k: Vec<CrosscheckEntry>,
    pub constant_notes: Vec<ConstantNote>,
    pub all_agree: bool,
}

/// Compare the closed-formula constants against the return-map coefficients,
/// exactly, under the ideal of the earlier constants.
///
/// FF requires both `gamma_1` rational with `gamma_1+ + gamma_1- = 0`
/// (the k = 1 constant must vanish exactly); FP requires `gamma_1+ = 0`.
pub fn crosscheck_theorem12(analysis: &Analysis, budget: GroebnerBudget) -> Result<CrosscheckReport, LyapError> {
    let n = analysis.n;
    let mut per_k = Vec::new();
    let mut constant_notes = Vec::new();
    match (&analysis.upper_nf, &analysis.lower_nf) {
        (SideNF::Focus(up), SideNF::Focus(lo)) => {
            let g1p = up.gamma[0].as_constant().ok_or_else(|| {
                LyapError::CrosscheckPrecondition("symbolic gamma_1+".into())
            })?;
            let g1m = lo.gamma[0].as_constant().ok_or_else(|| {
                LyapError::CrosscheckPrecondition("symbolic gamma_1-".into())
            })?;
            if !(&g1p + &g1m).is_zero() {
                return Err(LyapError::CrosscheckPrecondition(format!(
                    "needs gamma_1+ + gamma_1- = 0 exactly, got {g1p} + {g1m}"
                )));
            }
            let rm_up = upper_return_map_ff(&up.gamma, n)?;
            // lower inverse map: the axis-and-time flip of the lower block has
            // coefficients (-1)^k gamma_k-
            let gm_flipped: Vec<MultiPoly> = lo
                .gamma
                .iter()
                .enumerate()
                .map(|(idx, g)| if (idx + 1) % 2 == 0 { g.clone() } else { g.neg() })
                .collect();
            let rm_lo = upper_return_map_ff(&gm_flipped, n)?;
            let mut priors: Vec<MultiPoly> = Vec::new();
            for k in 1..=(n + 1) {
                let vk_rm = rm_up.u[(k - 1) as usize].sub(&rm_lo.u[(k - 1) as usize]);
                let closed = if k == 1 {
                    ExtPoly::zero(up.gamma[0].table(), g1p.clone())
                } else {
                    let factor = c_ff_integral(k, &g1p);
                    ExtPoly::from_poly(analysis.seq.entry(k).raw.clone(), g1p.clone())
                        .mul_scalar(&factor)
                };
                let diff = vk_rm.sub(&closed).reduce_components(&priors, budget)?;
                per_k.push(CrosscheckEntry {
                    k,
                    agree: diff.is_zero(),
                    difference: (!diff.is_zero()).then(|| diff.render()),
                });
                let raw = &analysis.seq.entry(k).raw;
                if !raw.is_zero() {
                    priors.push(raw.clone());
                }
                if k >= 2 {
                    let printed = c_ff_printed(k, &g1p);
                    let integral = c_ff_integral(k, &g1p);
                    let equal = printed == integral;
                    if !equal || !g1p.is_zero() {
                        constant_notes.push(ConstantNote { k, printed, integral, equal });
                    }
                }
            }
        }
        (SideNF::Focus(up), SideNF::Tangency(_)) => {
            let g1p = up.gamma[0].as_constant();
            if g1p != Some(Rational::zero()) {
                return Err(LyapError::CrosscheckPrecondition(
                    "FP cross-check needs gamma_1+ = 0".into(),
                ));
            }
            let rm = upper_return_map_ff(&up.gamma, n)?;
            let mut priors: Vec<MultiPoly> = Vec::new();
            for k in 1..=(n + 1) {
                let vk_rm = if k == 1 {
                    // u_1 - 1 vanishes since gamma_1+ = 0
                    rm.u[0].sub(&ExtPoly::from_poly(
                        MultiPoly::one(up.gamma[0].table()),
                        Rational::zero(),
                    ))
                } else {
                    rm.u[(k - 1) as usize].clone()
                };
                let closed = if k == 1 {
                    ExtPoly::zero(up.gamma[0].table(), Rational::zero())
                } else {
                    ExtPoly::from_poly(analysis.seq.entry(k).raw.clone(), Rational::zero())
                        .mul_scalar(&c_fp(k))
                };
                let diff = vk_rm.sub(&closed).reduce_components(&priors, budget)?;
                per_k.push(CrosscheckEntry {
                    k,
                    agree: diff.is_zero(),
                    difference: (!diff.is_zero()).then(|| diff.render()),
                });
                let raw = &analysis.seq.entry(k).raw;
                if !raw.is_zero() {
                    priors.push(raw.clone());
                }
            }
        }
        (SideNF::Tangency(up), SideNF::Tangency(_)) => {
            let v = upper_return_map_pp(&up.sigma, up.ell, n);
            let mut priors: Vec<MultiPoly> = Vec::new();
            for k in 2..=(n + 1) {
                let vk = &v[(k - 1) as usize];
                let closed = if k % 2 == 0 {
                    analysis.seq.entry(k).raw.scale(&c_pp(k, up.ell))
                } else {
                    MultiPoly::zero(vk.table())
                };
                let diff = reduce_mod_set(&vk.checked_sub(&closed)?, &priors, budget)?;
                per_k.push(CrosscheckEntry {
                    k,
                    agree: diff.is_zero(),
                    difference: (!diff.is_zero()).then(|| diff.render()),
                });
                let raw = &analysis.seq.entry(k).raw;
                if !raw.is_zero() {
                    priors.push(raw.clone());
                }
            }
        }
        _ => {
            return Err(LyapError::CrosscheckPrecondition(
                "unsupported side combination".into(),
            ))
        }
    }
    let all_agree = per_k.iter().all(|e| e.agree);
    Ok(CrosscheckReport { per_k, constant_notes, all_agree })
}
