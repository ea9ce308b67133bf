//! Exact algebra of functions of `tau` spanned by
//! `tau^p * e^(a tau) * sin(b tau)` and `tau^p * e^(a tau) * cos(b tau)`
//! with rational `a, b` and polynomial coefficients in the parameters.
//!
//! Closed under sum, product (products of sines and cosines are linearized
//! into single-frequency terms on the spot) and antidifferentiation, which is
//! what the half-return-map recursion needs.
//!
//! Canonical form: `b >= 0`; `sin` terms with `b = 0` are dropped; `cos` with
//! `b = 0` denotes a pure `tau^p e^(a tau)` term; duplicate `(p, a, b, kind)`
//! keys are merged and zero coefficients removed.

use crate::exactnum::{ExtScalar, Rational};
use crate::polyring::{MultiPoly, PolyError, SymbolTable};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrigExpError {
    #[error("cannot evaluate at pi: frequency {0} is not an integer")]
    NonIntegerFrequency(String),
    #[error("cannot evaluate at pi: rate {0} is not a nonnegative integer multiple of {1}")]
    RateNotMultiple(String, String),
    #[error("coefficient is not a constant: {0}")]
    NonConstantCoefficient(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrigKind {
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TeKey {
    pub p: u32,
    pub a: Rational,
    pub b: Rational,
    pub kind: TrigKind,
}

#[derive(Clone, PartialEq)]
pub struct TrigExpPoly {
    table: Arc<SymbolTable>,
    terms: BTreeMap<TeKey, MultiPoly>,
}

impl TrigExpPoly {
    pub fn zero(table: &Arc<SymbolTable>) -> Self {
        TrigExpPoly { table: table.clone(), terms: BTreeMap::new() }
    }

    pub fn one(table: &Arc<SymbolTable>) -> Self {
        Self::from_poly(MultiPoly::one(table))
    }

    /// Constant-in-tau term with a polynomial coefficient.
    pub fn from_poly(coeff: MultiPoly) -> Self {
        let table = coeff.table().clone();
        let mut t = Self::zero(&table);
        t.push(
            TeKey { p: 0, a: Rational::zero(), b: Rational::zero(), kind: TrigKind::Cos },
            coeff,
        );
        t
    }

    /// `coeff * tau^p * e^(a tau) * sin/cos(b tau)`.
    pub fn term(coeff: MultiPoly, p: u32, a: Rational, b: Rational, kind: TrigKind) -> Self {
        let table = coeff.table().clone();
        let mut t = Self::zero(&table);
        t.push(TeKey { p, a, b, kind }, coeff);
        t
    }

    pub fn sin_tau(table: &Arc<SymbolTable>) -> Self {
        Self::term(MultiPoly::one(table), 0, Rational::zero(), Rational::one(), TrigKind::Sin)
    }

    pub fn cos_tau(table: &Arc<SymbolTable>) -> Self {
        Self::term(MultiPoly::one(table), 0, Rational::zero(), Rational::one(), TrigKind::Cos)
    }

    pub fn exp_tau(table: &Arc<SymbolTable>, a: Rational) -> Self {
        Self::term(MultiPoly::one(table), 0, a, Rational::zero(), TrigKind::Cos)
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TeKey, &MultiPoly)> {
        self.terms.iter()
    }

    /// Insert with canonicalization of the frequency sign and the `b = 0`
    /// sine degeneracy.
    fn push(&mut self, key: TeKey, coeff: MultiPoly) {
        if coeff.is_zero() {
            return;
        }
        let (key, coeff) = if key.b.is_negative() {
            let flipped = TeKey { b: -&key.b, ..key };
            match flipped.kind {
                TrigKind::Sin => (flipped, coeff.neg()),
                TrigKind::Cos => (flipped, coeff),
            }
        } else {
            (key, coeff)
        };
        if key.b.is_zero() && key.kind == TrigKind::Sin {
            return; // sin(0) = 0
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().checked_add(&coeff).expect("table mismatch");
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &TrigExpPoly) -> TrigExpPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.push(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> TrigExpPoly {
        TrigExpPoly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &TrigExpPoly) -> TrigExpPoly {
        self.add(&other.neg())
    }

    pub fn scale_poly(&self, c: &MultiPoly) -> TrigExpPoly {
        let mut out = Self::zero(&self.table);
        for (k, v) in &self.terms {
            out.push(k.clone(), v.checked_mul(c).expect("table mismatch"));
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> TrigExpPoly {
        self.scale_poly(&MultiPoly::constant(&self.table, c.clone()))
    }

    /// Exact product; sin/cos products are rewritten with the product-to-sum
    /// identities so every resulting term carries a single frequency.
    pub fn product(&self, other: &TrigExpPoly) -> TrigExpPoly {
        use TrigKind::*;
        let mut out = Self::zero(&self.table);
        let half = MultiPoly::constant(&self.table, Rational::new(1.into(), 2.into()));
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let c = c1.checked_mul(c2).expect("table mismatch");
                let p = k1.p + k2.p;
                let a = &k1.a + &k2.a;
                let (bsum, bdif) = (&k1.b + &k2.b, &k1.b - &k2.b);
                let ch = c.checked_mul(&half).expect("table mismatch");
                match (k1.kind, k2.kind) {
                    (Cos, Cos) => {
                        // cos cos = (cos(b1-b2) + cos(b1+b2))/2
                        out.push(TeKey { p, a: a.clone(), b: bdif, kind: Cos }, ch.clone());
                        out.push(TeKey { p, a, b: bsum, kind: Cos }, ch);
                    }
                    (Sin, Sin) => {
                        // sin sin = (cos(b1-b2) - cos(b1+b2))/2
                        out.push(TeKey { p, a: a.clone(), b: bdif, kind: Cos }, ch.clone());
                        out.push(TeKey { p, a, b: bsum, kind: Cos }, ch.neg());
                    }
                    (Sin, Cos) => {
                        // sin(b1) cos(b2) = (sin(b1+b2) + sin(b1-b2))/2
                        out.push(TeKey { p, a: a.clone(), b: bsum, kind: Sin }, ch.clone());
                        out.push(TeKey { p, a, b: bdif, kind: Sin }, ch);
                    }
                    (Cos, Sin) => {
                        // cos(b1) sin(b2) = (sin(b1+b2) - sin(b1-b2))/2
                        out.push(TeKey { p, a: a.clone(), b: bsum, kind: Sin }, ch.clone());
                        out.push(TeKey { p, a, b: bdif, kind: Sin }, ch.neg());
                    }
                }
            }
        }
        out
    }

    /// Exact derivative in tau.
    pub fn derivative(&self) -> TrigExpPoly {
        use TrigKind::*;
        let mut out = Self::zero(&self.table);
        for (k, c) in &self.terms {
            if k.p > 0 {
                let cp = c.scale(&Rational::from_integer(k.p.into()));
                out.push(TeKey { p: k.p - 1, ..k.clone() }, cp);
            }
            if !k.a.is_zero() {
                out.push(k.clone(), c.scale(&k.a));
            }
            if !k.b.is_zero() {
                let cb = c.scale(&k.b);
                match k.kind {
                    Sin => out.push(TeKey { kind: Cos, ..k.clone() }, cb),
                    Cos => out.push(TeKey { kind: Sin, ..k.clone() }, cb.neg()),
                }
            }
        }
        out
    }

    /// Antiderivative `F` with `F' = f` and `F(0) = 0`.
    ///
    /// Terms with `(a, b) != (0, 0)` are integrated against the ansatz
    /// `sum_j tau^j e^(a tau) (A_j sin(b tau) + B_j cos(b tau))`, solved
    /// top-down per tau power (one 2x2 rational system each, determinant
    /// `a^2 + b^2 != 0`); pure powers `(a, b) = (0, 0)` raise the tau power.
    pub fn antiderivative(&self) -> TrigExpPoly {
        use TrigKind::*;
        let mut out = Self::zero(&self.table);
        let mut groups: BTreeMap<(Rational, Rational), Vec<(u32, TrigKind, MultiPoly)>> =
            BTreeMap::new();
        for (k, c) in &self.terms {
            groups.entry((k.a.clone(), k.b.clone())).or_default().push((k.p, k.kind, c.clone()));
        }
        for ((a, b), parts) in groups {
            if a.is_zero() && b.is_zero() {
                for (p, _kind, c) in parts {
                    let cp = c.scale(&Rational::new(1.into(), (p + 1).into()));
                    out.push(
                        TeKey { p: p + 1, a: Rational::zero(), b: Rational::zero(), kind: Cos },
                        cp,
                    );
                }
                continue;
            }
            let pmax = parts.iter().map(|(p, _, _)| *p).max().unwrap() as usize;
            let zero = MultiPoly::zero(&self.table);
            let mut s = vec![zero.clone(); pmax + 1]; // sin coefficients of f
            let mut cc = vec![zero.clone(); pmax + 1]; // cos coefficients of f
            for (p, kind, c) in parts {
                match kind {
                    Sin => s[p as usize] = s[p as usize].checked_add(&c).unwrap(),
                    Cos => cc[p as usize] = cc[p as usize].checked_add(&c).unwrap(),
                }
            }
            let det = &a * &a + &b * &b;
            let mut aj = vec![zero.clone(); pmax + 1];
            let mut bj = vec![zero; pmax + 1];
            for j in (0..=pmax).rev() {
                // a A_j - b B_j = s_j - (j+1) A_{j+1}
                // b A_j + a B_j = c_j - (j+1) B_{j+1}
                let mut rs = s[j].clone();
                let mut rc = cc[j].clone();
                if j + 1 <= pmax {
                    let f = Rational::from_integer(((j + 1) as i64).into());
                    rs = rs.checked_sub(&aj[j + 1].scale(&f)).unwrap();
                    rc = rc.checked_sub(&bj[j + 1].scale(&f)).unwrap();
                }
                aj[j] = rs.scale(&(&a / &det)).checked_add(&rc.scale(&(&b / &det))).unwrap();
                bj[j] = rc.scale(&(&a / &det)).checked_sub(&rs.scale(&(&b / &det))).unwrap();
            }
            for (j, (acoef, bcoef)) in aj.iter().zip(bj.iter()).enumerate() {
                out.push(
                    TeKey { p: j as u32, a: a.clone(), b: b.clone(), kind: Sin },
                    acoef.clone(),
                );
                out.push(
                    TeKey { p: j as u32, a: a.clone(), b: b.clone(), kind: Cos },
                    bcoef.clone(),
                );
            }
            // enforce F(0) = 0: the value at 0 is the j = 0 cosine coefficient
            out.push(
                TeKey { p: 0, a: Rational::zero(), b: Rational::zero(), kind: Cos },
                bj[0].neg(),
            );
        }
        out
    }

    /// Substitute `tau = pi`, mapping `e^(a pi)` to `E^(a/g1)`; requires every
    /// frequency to be an integer and every rate a nonnegative integer
    /// multiple of `g1` (all rates zero when `g1 = 0`).
    pub fn eval_at_pi_poly(&self, g1: &Rational) -> Result<ExtPoly, TrigExpError> {
        let mut out = ExtPoly::zero(&self.table, g1.clone());
        for (k, c) in &self.terms {
            if !k.b.denom().is_one() {
                return Err(TrigExpError::NonIntegerFrequency(k.b.to_string()));
            }
            let m: u32 = if k.a.is_zero() {
                0
            } else if g1.is_zero() {
                return Err(TrigExpError::RateNotMultiple(k.a.to_string(), g1.to_string()));
            } else {
                let q = &k.a / g1;
                if !q.denom().is_one() || q.is_negative() {
                    return Err(TrigExpError::RateNotMultiple(k.a.to_string(), g1.to_string()));
                }
                u32::try_from(q.numer().clone())
                    .map_err(|_| TrigExpError::RateNotMultiple(k.a.to_string(), g1.to_string()))?
            };
            match k.kind {
                TrigKind::Sin => continue, // sin(b pi) = 0 for integer b
                TrigKind::Cos => {
                    let even = (k.b.numer() % num_bigint::BigInt::from(2)).is_zero();
                    let sign = if even { Rational::one() } else { -Rational::one() };
                    out.push(k.p as i32, m, c.scale(&sign));
                }
            }
        }
        Ok(out)
    }

    /// As [`Self::eval_at_pi_poly`] but requires constant coefficients,
    /// returning a plain [`ExtScalar`].
    pub fn eval_at_pi(&self, g1: &Rational) -> Result<ExtScalar, TrigExpError> {
        self.eval_at_pi_poly(g1)?.to_scalar()
    }
}

impl fmt::Debug for TrigExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c.render())?;
            if k.p > 0 {
                write!(f, "*tau^{}", k.p)?;
            }
            if !k.a.is_zero() {
                write!(f, "*exp({}*tau)", k.a)?;
            }
            if !k.b.is_zero() || k.kind == TrigKind::Sin {
                let name = if k.kind == TrigKind::Sin { "sin" } else { "cos" };
                write!(f, "*{}({}*tau)", name, k.b)?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// ExtPoly: polynomial coefficients attached to pi^e E^m monomials
// ---------------------------------------------------------------------------

/// Finite sum `sum_(e,m) P_(e,m)(params) * pi^e * E^m` with `E = e^(g1*pi)`.
///
/// Comparisons are per `(e, m)` component, which is exact since `pi` is
/// transcendental over the rationals.
#[derive(Clone, PartialEq)]
pub struct ExtPoly {
    table: Arc<SymbolTable>,
    rate: Rational,
    terms: BTreeMap<(i32, u32), MultiPoly>,
}

impl ExtPoly {
    pub fn zero(table: &Arc<SymbolTable>, rate: Rational) -> Self {
        ExtPoly { table: table.clone(), rate, terms: BTreeMap::new() }
    }

    pub fn from_poly(p: MultiPoly, rate: Rational) -> Self {
        let table = p.table().clone();
        let mut e = Self::zero(&table, rate);
        e.push(0, 0, p);
        e
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    pub fn push(&mut self, pi_pow: i32, e_pow: u32, c: MultiPoly) {
        if c.is_zero() {
            return;
        }
        let e_pow = if self.rate.is_zero() { 0 } else { e_pow };
        match self.terms.entry((pi_pow, e_pow)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().checked_add(&c).expect("table mismatch");
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, u32), &MultiPoly)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &ExtPoly) -> ExtPoly {
        assert_eq!(self.rate, other.rate, "rate mismatch");
        let mut out = self.clone();
        for (&(e, m), c) in &other.terms {
            out.push(e, m, c.clone());
        }
        out
    }

    pub fn neg(&self) -> ExtPoly {
        ExtPoly {
            table: self.table.clone(),
            rate: self.rate.clone(),
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &ExtPoly) -> ExtPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ExtPoly) -> ExtPoly {
        assert_eq!(self.rate, other.rate, "rate mismatch");
        let mut out = Self::zero(&self.table, self.rate.clone());
        for (&(e1, m1), c1) in &self.terms {
            for (&(e2, m2), c2) in &other.terms {
                out.push(e1 + e2, m1 + m2, c1.checked_mul(c2).expect("table mismatch"));
            }
        }
        out
    }

    pub fn scale_poly(&self, c: &MultiPoly) -> ExtPoly {
        let mut out = Self::zero(&self.table, self.rate.clone());
        for (&(e, m), v) in &self.terms {
            out.push(e, m, v.checked_mul(c).expect("table mismatch"));
        }
        out
    }

    /// Multiply by an [`ExtScalar`] carrying the same rate (or no rate).
    pub fn mul_scalar(&self, s: &ExtScalar) -> ExtPoly {
        debug_assert!(s.rate().map_or(true, |r| *r == self.rate), "rate mismatch");
        let mut out = Self::zero(&self.table, self.rate.clone());
        for (&(e1, m1), c1) in &self.terms {
            for (&(e2, m2), q) in s.terms() {
                out.push(e1 + e2, m1 + m2, c1.scale(q));
            }
        }
        out
    }

    /// Reduce every polynomial component modulo a set.
    pub fn reduce_components(
        &self,
        set: &[MultiPoly],
        budget: crate::polyring::GroebnerBudget,
    ) -> Result<ExtPoly, PolyError> {
        let mut out = Self::zero(&self.table, self.rate.clone());
        for (&(e, m), c) in &self.terms {
            out.push(e, m, crate::polyring::reduce_mod_set(c, set, budget)?);
        }
        Ok(out)
    }

    pub fn to_scalar(&self) -> Result<ExtScalar, TrigExpError> {
        let mut out = ExtScalar::zero();
        for (&(e, m), c) in &self.terms {
            let q =
                c.as_constant().ok_or_else(|| TrigExpError::NonConstantCoefficient(c.render()))?;
            let mono = ExtScalar::monomial(q, e, m, self.rate.clone());
            out = out.add(&mono).expect("rates agree by construction");
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (&(e, m), c) in &self.terms {
            let mut s = format!("({})", c.render());
            if e != 0 {
                s.push_str(&format!("*pi^{e}"));
            }
            if m != 0 {
                s.push_str(&format!("*E^{m}"));
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Debug for ExtPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}
