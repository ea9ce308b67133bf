//! Exact scalar arithmetic.
//!
//! Two layers:
//! - [`Rational`]: arbitrary-precision rationals (always reduced, positive
//!   denominator), the coefficient field of every recursion in the crate.
//! - [`ExtScalar`]: finite sums `q * pi^e * E^m` where `E = e^(g1*pi)` for a
//!   fixed rational `g1` carried alongside. This is the smallest ring that
//!   holds evaluated trig-exponential integrals at `tau = pi` and the positive
//!   factors attached to Lyapunov constants.
//!
//! Invariants:
//! - `ExtScalar` merges monomials with equal `(e, m)` and drops zeros; when
//!   `g1 = 0` every `E^m` collapses to 1.
//! - Two `ExtScalar`s combine only when their `g1` agree (a scalar with no
//!   `E` dependence combines with anything).
//!
//! [`ext_eval`] returns a certified rational interval enclosure. Enclosures
//! are nested: raising `precision` always yields a sub-interval, because every
//! internal series uses a term count that grows monotonically with the request
//! and alternating/bracketing partial sums shrink nestedly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

pub type Rational = BigRational;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("extension scalars carry different exponential rates: {0} vs {1}")]
    RateMismatch(String, String),
}

/// Build a rational from a numerator/denominator pair.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from(BigInt::from(n))
}

/// The four field operations with an explicit error on zero divisors.
pub fn rat_arith(a: &Rational, b: &Rational, op: char) -> Result<Rational, ExactError> {
    match op {
        '+' => Ok(a + b),
        '-' => Ok(a - b),
        '*' => Ok(a * b),
        '/' => {
            if b.is_zero() {
                Err(ExactError::DivisionByZero)
            } else {
                Ok(a / b)
            }
        }
        _ => unreachable!("unknown op {op}"),
    }
}

/// Double factorial n!! with 0!! = (-1)!! = 1.
pub fn double_factorial(n: i64) -> Rational {
    let mut r = BigInt::one();
    let mut k = n;
    while k > 1 {
        r *= BigInt::from(k);
        k -= 2;
    }
    Rational::from(r)
}

// ---------------------------------------------------------------------------
// Certified rational intervals
// ---------------------------------------------------------------------------

/// Closed interval with exact rational endpoints, `lo <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn point(v: Rational) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let cands = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        RatInterval { lo, hi }
    }

    pub fn scale(&self, c: &Rational) -> RatInterval {
        if c.is_negative() {
            RatInterval { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            RatInterval { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Integer power; for negative exponents the interval must not contain 0.
    pub fn powi(&self, e: i32) -> RatInterval {
        if e < 0 {
            return self.powi(-e).recip();
        }
        let mut r = RatInterval::point(Rational::one());
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Reciprocal of a sign-definite interval.
    pub fn recip(&self) -> RatInterval {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of interval straddling zero"
        );
        RatInterval { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn midpoint_f64(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / rat_int(2);
        rational_to_f64(&mid)
    }

    /// Round endpoints outward to the grid `10^-digits`, preserving nesting.
    fn round_out(&self, digits: u32) -> RatInterval {
        let scale = Rational::from(BigInt::from(10).pow(digits));
        let lo = Rational::from((&self.lo * &scale).floor().to_integer()) / &scale;
        let hi = Rational::from((&self.hi * &scale).ceil().to_integer()) / &scale;
        RatInterval { lo, hi }
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    // good enough for reporting; exact paths never round-trip through f64
    let n = r.numer();
    let d = r.denom();
    let nf = bigint_to_f64(n);
    let df = bigint_to_f64(d);
    nf / df
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(f64::INFINITY)
}

/// `arctan(1/inv)` bracketed by consecutive partial sums of the alternating
/// Leibniz series. More terms give a nested, tighter bracket.
fn arctan_recip_interval(inv: i64, terms: usize) -> RatInterval {
    let mut s = Rational::zero();
    let inv2 = rat_int(inv * inv);
    let mut pow = rat_int(inv).recip(); // 1/inv^(2k+1)
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for k in 0..terms {
        let term = &pow / rat_int(2 * k as i64 + 1);
        if k % 2 == 0 {
            s += &term;
            hi = s.clone();
            if k == 0 {
                lo = Rational::zero();
            }
        } else {
            s -= &term;
            lo = s.clone();
        }
        pow /= &inv2;
    }
    RatInterval { lo, hi }
}

/// Machin: pi = 16 arctan(1/5) - 4 arctan(1/239).
pub fn pi_interval(digits: u32) -> RatInterval {
    let terms = digits as usize + 4;
    let a = arctan_recip_interval(5, terms);
    let b = arctan_recip_interval(239, terms);
    RatInterval {
        lo: &a.lo * rat_int(16) - &b.hi * rat_int(4),
        hi: &a.hi * rat_int(16) - &b.lo * rat_int(4),
    }
}

/// exp of an exact rational, bracketed. Argument is range-reduced by repeated
/// halving, the core Taylor sum runs on |t| <= 1/4 with a geometric tail
/// bound, and the result is squared back up.
fn exp_rational_interval(q: &Rational, digits: u32) -> RatInterval {
    if q.is_negative() {
        return exp_rational_interval(&(-q), digits).recip();
    }
    let mut s = 0u32;
    let mut t = q.clone();
    let quarter = rat(1, 4);
    while t > quarter {
        t /= rat_int(2);
        s += 1;
    }
    let terms = digits as usize + 8 + 2 * s as usize;
    let grid = digits + 2 * s + 8;
    let mut sum = Rational::one();
    let mut term = Rational::one();
    for k in 1..=terms {
        term = term * &t / rat_int(k as i64);
        sum += &term;
    }
    // tail <= 2 * next term since the term ratio is below 1/2 here
    let tail = term * &t / rat_int(terms as i64 + 1) * rat_int(2);
    let mut iv = RatInterval { lo: sum.clone(), hi: sum + tail }.round_out(grid);
    for _ in 0..s {
        iv = iv.mul(&iv.clone()).round_out(grid);
    }
    iv
}

/// exp over an interval argument, by monotonicity.
fn exp_interval(arg: &RatInterval, digits: u32) -> RatInterval {
    RatInterval {
        lo: exp_rational_interval(&arg.lo, digits).lo,
        hi: exp_rational_interval(&arg.hi, digits).hi,
    }
}

// ---------------------------------------------------------------------------
// ExtScalar
// ---------------------------------------------------------------------------

/// Finite sum of monomials `q * pi^e * E^m`, `E = e^(g1*pi)`.
///
/// `rate` is `None` while no `E` power is present; it is fixed by the first
/// operand that carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtScalar {
    rate: Option<Rational>,
    terms: BTreeMap<(i32, u32), Rational>,
}

impl ExtScalar {
    pub fn zero() -> Self {
        ExtScalar { rate: None, terms: BTreeMap::new() }
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut s = Self::zero();
        s.push(0, 0, q);
        s
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    /// `q * pi^e * E^m` with the exponential rate `g1`.
    pub fn monomial(q: Rational, pi_pow: i32, e_pow: u32, g1: Rational) -> Self {
        let mut s = ExtScalar { rate: Some(g1), terms: BTreeMap::new() };
        s.push(pi_pow, e_pow, q);
        s.normalize();
        s
    }

    pub fn pi_pow(e: i32) -> Self {
        let mut s = Self::zero();
        s.push(e, 0, Rational::one());
        s
    }

    pub fn rate(&self) -> Option<&Rational> {
        self.rate.as_ref()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, u32), &Rational)> {
        self.terms.iter()
    }

    fn push(&mut self, e: i32, m: u32, q: Rational) {
        if q.is_zero() {
            return;
        }
        let entry = self.terms.entry((e, m)).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.terms.remove(&(e, m));
        }
    }

    fn normalize(&mut self) {
        if let Some(g) = &self.rate {
            if g.is_zero() {
                // E = 1: fold all E powers away
                let old = std::mem::take(&mut self.terms);
                for ((e, _m), q) in old {
                    self.push(e, 0, q);
                }
                self.rate = None;
            }
        }
        if self.terms.keys().all(|&(_, m)| m == 0) {
            self.rate = None;
        }
    }

    fn unify_rate(&self, other: &ExtScalar) -> Result<Option<Rational>, ExactError> {
        match (&self.rate, &other.rate) {
            (None, r) | (r, None) => Ok(r.clone()),
            (Some(a), Some(b)) if a == b => Ok(Some(a.clone())),
            (Some(a), Some(b)) => Err(ExactError::RateMismatch(a.to_string(), b.to_string())),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &ExtScalar) -> Result<ExtScalar, ExactError> {
        let rate = self.unify_rate(other)?;
        let mut out = ExtScalar { rate, terms: self.terms.clone() };
        for (&(e, m), q) in &other.terms {
            out.push(e, m, q.clone());
        }
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &ExtScalar) -> Result<ExtScalar, ExactError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ExtScalar {
        ExtScalar {
            rate: self.rate.clone(),
            terms: self.terms.iter().map(|(k, q)| (*k, -q)).collect(),
        }
    }

    pub fn mul(&self, other: &ExtScalar) -> Result<ExtScalar, ExactError> {
        let rate = self.unify_rate(other)?;
        let mut out = ExtScalar { rate, terms: BTreeMap::new() };
        for (&(e1, m1), q1) in &self.terms {
            for (&(e2, m2), q2) in &other.terms {
                out.push(e1 + e2, m1 + m2, q1 * q2);
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> ExtScalar {
        if c.is_zero() {
            return ExtScalar::zero();
        }
        let mut s = ExtScalar {
            rate: self.rate.clone(),
            terms: self.terms.iter().map(|(k, q)| (*k, q * c)).collect(),
        };
        s.normalize();
        s
    }

    /// Certified interval enclosure; width at most `10^-(precision-2)`.
    ///
    /// Enclosures are nested in `precision`.
    pub fn eval(&self, precision: u32) -> RatInterval {
        let precision = precision.max(15);
        let digits = precision + 10;
        // round every stage outward to the working grid: keeps the rationals
        // short without losing the nesting property (finer grids round less)
        let pi = pi_interval(digits).round_out(digits);
        let e_iv = self
            .rate
            .as_ref()
            .map(|g| exp_interval(&pi.scale(g).round_out(digits), digits).round_out(digits));
        let mut acc = RatInterval::point(Rational::zero());
        for (&(e, m), q) in &self.terms {
            let mut t = pi.powi(e).round_out(digits);
            if m > 0 {
                let ep = e_iv
                    .as_ref()
                    .expect("rate present when E powers exist")
                    .powi(m as i32)
                    .round_out(digits);
                t = t.mul(&ep).round_out(digits);
            }
            acc = acc.add(&t.scale(q)).round_out(digits);
        }
        acc.round_out(precision + 4)
    }

    /// Certified strict positivity at the given precision.
    pub fn is_positive(&self, precision: u32) -> bool {
        self.eval(precision).is_positive()
    }

    pub fn to_f64(&self) -> f64 {
        self.eval(30).midpoint_f64()
    }
}

/// Interval enclosure of an `ExtScalar`; spec-facing alias.
pub fn ext_eval(s: &ExtScalar, precision: u32) -> RatInterval {
    s.eval(precision)
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(e, m), q) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", q)?;
            if e != 0 {
                write!(f, "*pi^{}", e)?;
            }
            if m != 0 {
                write!(f, "*E^{}", m)?;
            }
        }
        if let Some(g) = &self.rate {
            write!(f, "  [E = exp({}*pi)]", g)?;
        }
        Ok(())
    }
}
