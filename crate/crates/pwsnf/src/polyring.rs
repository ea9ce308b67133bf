//! Exact multivariate polynomials over [`Rational`] in declared parameter
//! symbols plus the two distinguished variables `x`, `y`.
//!
//! Invariants:
//! - terms are kept sorted in graded reverse lexicographic order (parameters
//!   first in declaration order, then `x`, then `y`), leading term first
//! - no duplicate exponent vectors, no zero coefficients
//! - all polynomials entering a binary operation share one symbol table
//!
//! The table is capped at 16 symbols and exponents at 120 per symbol; the
//! recursions in this crate stay far below both.

use crate::exactnum::Rational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub const MAX_SYMBOLS: usize = 16;
pub const MAX_EXPONENT: u8 = 120;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomials use different symbol tables")]
    SymbolTableMismatch,
    #[error("too many symbols: {0} (limit {MAX_SYMBOLS})")]
    TooManySymbols(usize),
    #[error("exponent overflow on symbol {0}")]
    ExponentOverflow(String),
    #[error("operation requires a parameters-only polynomial, found {0}")]
    NotParamsOnly(String),
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    #[error("basis computation exceeded its budget ({0} steps)")]
    ResourceBudget(usize),
    #[error("empty reduction set")]
    EmptySet,
}

/// Shared symbol table: parameters in declaration order, then `x`, then `y`.
#[derive(Debug, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    n_params: usize,
}

impl SymbolTable {
    /// Table with the given parameters plus the variables `x`, `y`.
    pub fn new(params: &[&str]) -> Result<Arc<Self>, PolyError> {
        let mut names: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        names.push("x".into());
        names.push("y".into());
        if names.len() > MAX_SYMBOLS {
            return Err(PolyError::TooManySymbols(names.len()));
        }
        Ok(Arc::new(SymbolTable { names, n_params: params.len() }))
    }

    pub fn n_symbols(&self) -> usize {
        self.names.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn x_index(&self) -> usize {
        self.n_params
    }

    pub fn y_index(&self) -> usize {
        self.n_params + 1
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn param_names(&self) -> &[String] {
        &self.names[..self.n_params]
    }
}

fn same_table(a: &Arc<SymbolTable>, b: &Arc<SymbolTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Exponent vector, one byte per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Expo(pub [u8; MAX_SYMBOLS]);

impl Expo {
    pub fn zero() -> Self {
        Expo([0; MAX_SYMBOLS])
    }

    pub fn unit(i: usize) -> Self {
        let mut e = Self::zero();
        e.0[i] = 1;
        e
    }

    fn total_degree(&self, nsyms: usize) -> u32 {
        self.0[..nsyms].iter().map(|&v| v as u32).sum()
    }

    fn checked_add(&self, other: &Expo, nsyms: usize) -> Option<Expo> {
        let mut out = Expo::zero();
        for i in 0..nsyms {
            let s = self.0[i].checked_add(other.0[i])?;
            if s > MAX_EXPONENT {
                return None;
            }
            out.0[i] = s;
        }
        Some(out)
    }

    fn divides(&self, other: &Expo, nsyms: usize) -> bool {
        (0..nsyms).all(|i| self.0[i] <= other.0[i])
    }

    fn div(&self, other: &Expo, nsyms: usize) -> Expo {
        let mut out = Expo::zero();
        for i in 0..nsyms {
            out.0[i] = self.0[i] - other.0[i];
        }
        out
    }

    fn lcm(&self, other: &Expo, nsyms: usize) -> Expo {
        let mut out = Expo::zero();
        for i in 0..nsyms {
            out.0[i] = self.0[i].max(other.0[i]);
        }
        out
    }
}

/// Graded reverse lexicographic order; `Greater` means the larger monomial.
pub fn grevlex(a: &Expo, b: &Expo, nsyms: usize) -> Ordering {
    let (da, db) = (a.total_degree(nsyms), b.total_degree(nsyms));
    if da != db {
        return da.cmp(&db);
    }
    for i in (0..nsyms).rev() {
        let d = a.0[i] as i16 - b.0[i] as i16;
        if d != 0 {
            return if d < 0 { Ordering::Greater } else { Ordering::Less };
        }
    }
    Ordering::Equal
}

/// Quasi-homogeneous grading of type `(1, q)`, `q = 2*ell` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuasiGrading {
    q: u32,
}

impl QuasiGrading {
    pub fn new(ell: u32) -> Self {
        assert!(ell >= 1);
        QuasiGrading { q: 2 * ell }
    }

    pub fn weights(&self) -> (u32, u32) {
        (1, self.q)
    }

    pub fn weight_of(&self, x_exp: u32, y_exp: u32) -> u32 {
        x_exp + self.q * y_exp
    }
}

/// Truncation cap on the weighted `x, y` degree.
#[derive(Debug, Clone, Copy)]
pub struct TruncCap {
    pub y_weight: u32,
    pub max: u32,
}

impl TruncCap {
    pub fn total(max: u32) -> Self {
        TruncCap { y_weight: 1, max }
    }

    pub fn quasi(grading: QuasiGrading, max: u32) -> Self {
        TruncCap { y_weight: grading.q, max }
    }
}

/// Sparse multivariate polynomial; see module docs for invariants.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    table: Arc<SymbolTable>,
    terms: Vec<(Expo, Rational)>,
}

impl MultiPoly {
    pub fn zero(table: &Arc<SymbolTable>) -> Self {
        MultiPoly { table: table.clone(), terms: Vec::new() }
    }

    pub fn constant(table: &Arc<SymbolTable>, c: Rational) -> Self {
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.push((Expo::zero(), c));
        }
        p
    }

    pub fn one(table: &Arc<SymbolTable>) -> Self {
        Self::constant(table, Rational::one())
    }

    pub fn var(table: &Arc<SymbolTable>, i: usize) -> Self {
        assert!(i < table.n_symbols());
        MultiPoly { table: table.clone(), terms: vec![(Expo::unit(i), Rational::one())] }
    }

    pub fn var_x(table: &Arc<SymbolTable>) -> Self {
        Self::var(table, table.x_index())
    }

    pub fn var_y(table: &Arc<SymbolTable>) -> Self {
        Self::var(table, table.y_index())
    }

    pub fn monomial(table: &Arc<SymbolTable>, c: Rational, exps: &[(usize, u8)]) -> Self {
        let mut e = Expo::zero();
        for &(i, p) in exps {
            assert!(i < table.n_symbols() && p <= MAX_EXPONENT);
            e.0[i] = p;
        }
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.push((e, c));
        }
        p
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

    pub fn terms(&self) -> impl Iterator<Item = (&Expo, &Rational)> {
        self.terms.iter().map(|(e, c)| (e, c))
    }

    /// Constant value if the polynomial has no symbol dependence at all.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 if self.terms[0].0 == Expo::zero() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn is_params_only(&self) -> bool {
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        self.terms.iter().all(|(e, _)| e.0[xi] == 0 && e.0[yi] == 0)
    }

    fn from_map(table: &Arc<SymbolTable>, map: HashMap<Expo, Rational>) -> Self {
        let nsyms = table.n_symbols();
        let mut terms: Vec<(Expo, Rational)> =
            map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| grevlex(&b.0, &a.0, nsyms));
        MultiPoly { table: table.clone(), terms }
    }

    fn require_same_table(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(PolyError::SymbolTableMismatch)
        }
    }

    pub fn checked_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.require_same_table(other)?;
        Ok(self.merge(other, false))
    }

    pub fn checked_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.require_same_table(other)?;
        Ok(self.merge(other, true))
    }

    pub fn checked_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.require_same_table(other)?;
        self.mul_trunc(other, None)
    }

    /// Merge of two sorted term lists; `negate` subtracts the second operand.
    fn merge(&self, other: &MultiPoly, negate: bool) -> MultiPoly {
        let nsyms = self.table.n_symbols();
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match grevlex(&self.terms[i].0, &other.terms[j].0, nsyms) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let (e, c) = &other.terms[j];
                    out.push((*e, if negate { -c } else { c.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate {
                        &self.terms[i].1 - &other.terms[j].1
                    } else {
                        &self.terms[i].1 + &other.terms[j].1
                    };
                    if !c.is_zero() {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        for (e, c) in &other.terms[j..] {
            out.push((*e, if negate { -c } else { c.clone() }));
        }
        MultiPoly { table: self.table.clone(), terms: out }
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return Self::zero(&self.table);
        }
        MultiPoly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    /// Product with optional weighted truncation of the `x, y` degree.
    pub fn mul_trunc(&self, other: &MultiPoly, cap: Option<TruncCap>) -> Result<MultiPoly, PolyError> {
        self.require_same_table(other)?;
        let nsyms = self.table.n_symbols();
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        let mut map: HashMap<Expo, Rational> = HashMap::with_capacity(self.terms.len() * other.terms.len() / 2 + 4);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                if let Some(cap) = cap {
                    let w = (ea.0[xi] + eb.0[xi]) as u32 + cap.y_weight * (ea.0[yi] + eb.0[yi]) as u32;
                    if w > cap.max {
                        continue;
                    }
                }
                let e = ea
                    .checked_add(eb, nsyms)
                    .ok_or_else(|| PolyError::ExponentOverflow(self.table.name(0).to_string()))?;
                let entry = map.entry(e).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        Ok(Self::from_map(&self.table, map))
    }

    pub fn pow_trunc(&self, n: u32, cap: Option<TruncCap>) -> Result<MultiPoly, PolyError> {
        let mut r = Self::one(&self.table);
        for _ in 0..n {
            r = r.mul_trunc(self, cap)?;
        }
        Ok(r)
    }

    /// Drop terms whose weighted `x, y` degree exceeds the cap.
    pub fn truncate(&self, cap: TruncCap) -> MultiPoly {
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        MultiPoly {
            table: self.table.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.0[xi] as u32 + cap.y_weight * e.0[yi] as u32 <= cap.max)
                .cloned()
                .collect(),
        }
    }

    /// Iterated exact partial derivative.
    pub fn partial_derivative(&self, symbol: usize, order: u32) -> MultiPoly {
        assert!(symbol < self.table.n_symbols());
        let mut cur = self.clone();
        for _ in 0..order {
            let mut terms = Vec::with_capacity(cur.terms.len());
            for (e, c) in &cur.terms {
                if e.0[symbol] == 0 {
                    continue;
                }
                let mut e2 = *e;
                e2.0[symbol] -= 1;
                terms.push((e2, c * Rational::from_integer(e.0[symbol].into())));
            }
            cur = MultiPoly { table: cur.table.clone(), terms };
            // term order is preserved by lowering one symbol uniformly only in
            // total degree ties; re-sort to stay canonical
            let nsyms = cur.table.n_symbols();
            cur.terms.sort_by(|a, b| grevlex(&b.0, &a.0, nsyms));
        }
        cur
    }

    /// Sum of terms `x^i y^j` with `i + q*j = k` under the grading.
    pub fn quasi_component(&self, grading: QuasiGrading, k: u32) -> MultiPoly {
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        MultiPoly {
            table: self.table.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| grading.weight_of(e.0[xi] as u32, e.0[yi] as u32) == k)
                .cloned()
                .collect(),
        }
    }

    /// Coefficient of `x^i y^j` as a parameters-only polynomial.
    pub fn coeff_xy(&self, i: u8, j: u8) -> MultiPoly {
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            if e.0[xi] == i && e.0[yi] == j {
                let mut e2 = *e;
                e2.0[xi] = 0;
                e2.0[yi] = 0;
                terms.push((e2, c.clone()));
            }
        }
        let nsyms = self.table.n_symbols();
        terms.sort_by(|a, b| grevlex(&b.0, &a.0, nsyms));
        MultiPoly { table: self.table.clone(), terms }
    }

    /// Largest `x` (resp. `y`) exponent present.
    pub fn degree_in(&self, symbol: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e.0[symbol] as u32).max().unwrap_or(0)
    }

    /// Substitute `x -> px`, `y -> py` simultaneously, truncating on the fly.
    pub fn substitute_xy(
        &self,
        px: &MultiPoly,
        py: &MultiPoly,
        cap: TruncCap,
    ) -> Result<MultiPoly, PolyError> {
        self.require_same_table(px)?;
        self.require_same_table(py)?;
        let (xi, yi) = (self.table.x_index(), self.table.y_index());
        let max_x = self.degree_in(xi);
        let max_y = self.degree_in(yi);
        let mut pow_x = Vec::with_capacity(max_x as usize + 1);
        pow_x.push(Self::one(&self.table));
        for _ in 0..max_x {
            let next = pow_x.last().unwrap().mul_trunc(px, Some(cap))?;
            pow_x.push(next);
        }
        let mut pow_y = Vec::with_capacity(max_y as usize + 1);
        pow_y.push(Self::one(&self.table));
        for _ in 0..max_y {
            let next = pow_y.last().unwrap().mul_trunc(py, Some(cap))?;
            pow_y.push(next);
        }
        let mut acc = Self::zero(&self.table);
        for (e, c) in &self.terms {
            let mut base = *e;
            base.0[xi] = 0;
            base.0[yi] = 0;
            let coeff = MultiPoly { table: self.table.clone(), terms: vec![(base, c.clone())] };
            let t = coeff
                .mul_trunc(&pow_x[e.0[xi] as usize], Some(cap))?
                .mul_trunc(&pow_y[e.0[yi] as usize], Some(cap))?;
            acc = acc.merge(&t, false);
        }
        Ok(acc.truncate(cap))
    }

    /// Substitute rational values for a subset of parameters.
    pub fn substitute_params(&self, values: &HashMap<usize, Rational>) -> MultiPoly {
        let nsyms = self.table.n_symbols();
        let mut map: HashMap<Expo, Rational> = HashMap::new();
        for (e, c) in &self.terms {
            let mut c2 = c.clone();
            let mut e2 = *e;
            for (&idx, val) in values {
                for _ in 0..e.0[idx] {
                    c2 *= val;
                }
                e2.0[idx] = 0;
            }
            if c2.is_zero() {
                continue;
            }
            let entry = map.entry(e2).or_insert_with(Rational::zero);
            *entry += c2;
        }
        let _ = nsyms;
        Self::from_map(&self.table, map)
    }

    /// Evaluate a parameters-only polynomial at the origin of parameter space
    /// — i.e. return its value if constant, error otherwise.
    pub fn expect_constant(&self) -> Result<Rational, PolyError> {
        self.as_constant().ok_or_else(|| PolyError::NotParamsOnly(self.render()))
    }

    /// Canonical text rendering: terms in grevlex order, explicit `*` and `^`,
    /// rationals `a/b`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || e == &Expo::zero() {
                factors.push(format_rat(&mag));
            }
            for i in 0..self.table.n_symbols() {
                match e.0[i] {
                    0 => {}
                    1 => factors.push(self.table.name(i).to_string()),
                    p => factors.push(format!("{}^{}", self.table.name(i), p)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

fn format_rat(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

// Operator sugar for internal use; panics on mismatched tables, which the
// checked entry points rule out beforehand.
impl std::ops::Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(rhs).expect("table mismatch")
    }
}

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_sub(rhs).expect("table mismatch")
    }
}

impl std::ops::Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_mul(rhs).expect("table mismatch")
    }
}

// ---------------------------------------------------------------------------
// Ideal reduction (Buchberger at desk scale)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct GroebnerBudget {
    pub max_steps: usize,
    pub max_basis: usize,
}

impl Default for GroebnerBudget {
    fn default() -> Self {
        GroebnerBudget { max_steps: 20_000, max_basis: 300 }
    }
}

fn leading(f: &MultiPoly) -> (&Expo, &Rational) {
    let (e, c) = &f.terms[0];
    (e, c)
}

/// One full multivariate division, returning the remainder.
fn normal_form(f: &MultiPoly, basis: &[MultiPoly]) -> MultiPoly {
    let table = f.table.clone();
    let nsyms = table.n_symbols();
    let mut work = f.clone();
    let mut rem_terms: Vec<(Expo, Rational)> = Vec::new();
    'outer: while !work.terms.is_empty() {
        let (lm, lc) = (work.terms[0].0, work.terms[0].1.clone());
        for g in basis {
            let (glm, glc) = leading(g);
            if glm.divides(&lm, nsyms) {
                let q = lm.div(glm, nsyms);
                let factor = &lc / glc;
                let quotient =
                    MultiPoly { table: table.clone(), terms: vec![(q, factor)] };
                let prod = quotient.mul_trunc(g, None).expect("same table");
                work = work.merge(&prod, true);
                continue 'outer;
            }
        }
        rem_terms.push((lm, lc));
        work.terms.remove(0);
    }
    MultiPoly { table, terms: rem_terms }
}

/// Reduced Groebner basis (grevlex) with a hard step budget.
pub fn groebner_basis(
    gens: &[MultiPoly],
    budget: GroebnerBudget,
) -> Result<Vec<MultiPoly>, PolyError> {
    let gens: Vec<MultiPoly> = gens.iter().filter(|g| !g.is_zero()).cloned().collect();
    if gens.is_empty() {
        return Ok(Vec::new());
    }
    let table = gens[0].table.clone();
    let nsyms = table.n_symbols();
    let mut basis = gens;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            pairs.push((i, j));
        }
    }
    let mut steps = 0usize;
    while let Some((i, j)) = pairs.pop() {
        steps += 1;
        if steps > budget.max_steps || basis.len() > budget.max_basis {
            return Err(PolyError::ResourceBudget(steps));
        }
        let (li, _) = leading(&basis[i]);
        let (lj, _) = leading(&basis[j]);
        let l = li.lcm(lj, nsyms);
        // coprime leading monomials reduce to zero
        if l.total_degree(nsyms) == li.total_degree(nsyms) + lj.total_degree(nsyms) {
            continue;
        }
        // chain criterion
        let skip = basis.iter().enumerate().any(|(k, g)| {
            k != i
                && k != j
                && leading(g).0.divides(&l, nsyms)
                && !pairs.contains(&(i.min(k), i.max(k)))
                && !pairs.contains(&(j.min(k), j.max(k)))
        });
        if skip {
            continue;
        }
        let s = s_poly(&basis[i], &basis[j], nsyms);
        let r = normal_form(&s, &basis);
        if !r.is_zero() {
            let k = basis.len();
            for t in 0..k {
                pairs.push((t, k));
            }
            basis.push(r);
        }
    }
    Ok(reduce_basis(basis, nsyms))
}

fn s_poly(f: &MultiPoly, g: &MultiPoly, nsyms: usize) -> MultiPoly {
    let (lf, cf) = leading(f);
    let (lg, cg) = leading(g);
    let l = lf.lcm(lg, nsyms);
    let mf = MultiPoly { table: f.table.clone(), terms: vec![(l.div(lf, nsyms), cf.recip())] };
    let mg = MultiPoly { table: g.table.clone(), terms: vec![(l.div(lg, nsyms), cg.recip())] };
    let a = mf.mul_trunc(f, None).expect("same table");
    let b = mg.mul_trunc(g, None).expect("same table");
    a.merge(&b, true)
}

/// Inter-reduce and scale monic: the reduced basis is unique, which makes
/// `reduce_mod_set` deterministic.
fn reduce_basis(mut basis: Vec<MultiPoly>, nsyms: usize) -> Vec<MultiPoly> {
    // drop generators whose lead is divisible by another lead
    let mut keep = vec![true; basis.len()];
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if i != j && keep[i] && keep[j] {
                let (li, _) = leading(&basis[i]);
                let (lj, _) = leading(&basis[j]);
                if lj.divides(li, nsyms) && (li != lj || j < i) {
                    keep[i] = false;
                    break;
                }
            }
        }
    }
    let mut kept: Vec<MultiPoly> =
        basis.drain(..).zip(keep).filter_map(|(g, k)| k.then_some(g)).collect();
    // reduce tails against each other
    for i in 0..kept.len() {
        let others: Vec<MultiPoly> =
            kept.iter().enumerate().filter_map(|(j, g)| (j != i).then(|| g.clone())).collect();
        if !others.is_empty() {
            kept[i] = normal_form(&kept[i], &others);
        }
        let lc = leading(&kept[i]).1.clone();
        kept[i] = kept[i].scale(&lc.recip());
    }
    kept.sort_by(|a, b| grevlex(&b.terms[0].0, &a.terms[0].0, nsyms));
    kept
}

/// Normal form of `f` modulo the ideal generated by `set` (parameters only).
/// The result is zero exactly when `f` lies in the ideal.
pub fn reduce_mod_set(
    f: &MultiPoly,
    set: &[MultiPoly],
    budget: GroebnerBudget,
) -> Result<MultiPoly, PolyError> {
    if !f.is_params_only() {
        return Err(PolyError::NotParamsOnly(f.render()));
    }
    for g in set {
        if !g.is_params_only() {
            return Err(PolyError::NotParamsOnly(g.render()));
        }
    }
    let gb = groebner_basis(set, budget)?;
    if gb.is_empty() {
        return Ok(f.clone());
    }
    Ok(normal_form(f, &gb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, rat_int};
    use rand::{Rng, SeedableRng};

    fn table2() -> Arc<SymbolTable> {
        SymbolTable::new(&["a", "b"]).unwrap()
    }

    #[test]
    fn arithmetic_basics() {
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        // (x+y)(x-y) = x^2 - y^2
        let lhs = (&(&x + &y)) * (&(&x - &y));
        let exp = &(&x * &x) - &(&y * &y);
        assert_eq!(lhs, exp);
        // f + 0 = f
        let z = MultiPoly::zero(&t);
        assert_eq!(&lhs + &z, lhs);
    }

    #[test]
    fn monomial_product_with_params() {
        let t = SymbolTable::new(&["p20", "q11"]).unwrap();
        let p20 = MultiPoly::var(&t, 0);
        let q11 = MultiPoly::var(&t, 1);
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        let f = &(&p20 * &x) * &x;
        let g = &(&q11 * &x) * &y;
        let prod = &f * &g;
        assert_eq!(prod.render(), "p20*q11*x^3*y");
    }

    #[test]
    fn table_mismatch_is_error() {
        let t1 = table2();
        let t2 = SymbolTable::new(&["a", "c"]).unwrap();
        let f = MultiPoly::var(&t1, 0);
        let g = MultiPoly::var(&t2, 0);
        assert_eq!(f.checked_add(&g), Err(PolyError::SymbolTableMismatch));
    }

    #[test]
    fn derivative_examples() {
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        let x3 = x.pow_trunc(3, None).unwrap();
        let d2 = x3.partial_derivative(t.x_index(), 2);
        assert_eq!(d2.render(), "6*x");
        let f = &(&x * &x) * &y;
        assert_eq!(f.partial_derivative(t.y_index(), 1).render(), "x^2");
        let x2 = x.pow_trunc(2, None).unwrap();
        assert!(x2.partial_derivative(t.x_index(), 3).is_zero());
    }

    #[test]
    fn quasi_components_partition() {
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        let f = &x.pow_trunc(3, None).unwrap() + &y;
        let g = QuasiGrading::new(1); // type (1,2)
        assert_eq!(f.quasi_component(g, 3), x.pow_trunc(3, None).unwrap());
        assert_eq!(f.quasi_component(g, 2), y);
        let g4 = QuasiGrading::new(2); // type (1,4)
        let x2y = &x.pow_trunc(2, None).unwrap() * &y;
        assert_eq!(x2y.quasi_component(g4, 6), x2y);
        // partition property on a random-ish polynomial
        let h = &(&f + &x2y) + &MultiPoly::constant(&t, rat(3, 2));
        let mut sum = MultiPoly::zero(&t);
        for k in 0..=12 {
            sum = &sum + &h.quasi_component(g4, k);
        }
        assert_eq!(sum, h);
    }

    #[test]
    fn grevlex_render_is_sorted() {
        let t = table2();
        let a = MultiPoly::var(&t, 0);
        let b = MultiPoly::var(&t, 1);
        let f = &(&(&a * &a) + &(&a * &b)) + &b;
        assert_eq!(f.render(), "a^2 + a*b + b");
    }

    #[test]
    fn reduce_mod_set_membership() {
        let t = SymbolTable::new(&["p11", "q02", "q20"]).unwrap();
        let p11 = MultiPoly::var(&t, 0);
        let q02 = MultiPoly::var(&t, 1);
        let q20 = MultiPoly::var(&t, 2);
        let g = &(&p11 + &q02.scale(&rat_int(2))) + &q20;
        let r = reduce_mod_set(&g, &[g.clone()], GroebnerBudget::default()).unwrap();
        assert!(r.is_zero());
        // f = a*b, G = {a}
        let ab = &p11 * &q02;
        let r2 = reduce_mod_set(&ab, &[p11.clone()], GroebnerBudget::default()).unwrap();
        assert!(r2.is_zero());
    }

    #[test]
    fn reduce_mod_set_linear_substitution_oracle() {
        // 9a2^2 - 4b3^2 - 4b2 reduced by {a2 + 2 b1} equals the direct
        // substitution a2 = -2 b1 because the relation is linear in a2.
        let t = SymbolTable::new(&["a2", "b1", "b2", "b3"]).unwrap();
        let a2 = MultiPoly::var(&t, 0);
        let b1 = MultiPoly::var(&t, 1);
        let b2 = MultiPoly::var(&t, 2);
        let b3 = MultiPoly::var(&t, 3);
        let f = &(&(&a2 * &a2).scale(&rat_int(9)) - &(&b3 * &b3).scale(&rat_int(4)))
            - &b2.scale(&rat_int(4));
        let g = &a2 + &b1.scale(&rat_int(2));
        let r = reduce_mod_set(&f, &[g], GroebnerBudget::default()).unwrap();
        let expect = &(&(&b1 * &b1).scale(&rat_int(36)) - &(&b3 * &b3).scale(&rat_int(4)))
            - &b2.scale(&rat_int(4));
        assert_eq!(r, expect);
    }

    #[test]
    fn reduce_mod_set_idempotent_and_combination_sound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t = SymbolTable::new(&["a", "b", "c"]).unwrap();
        let vars: Vec<MultiPoly> = (0..3).map(|i| MultiPoly::var(&t, i)).collect();
        let rand_poly = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut p = MultiPoly::constant(&t, rat(rng.gen_range(-3..4), 1));
            for _ in 0..3 {
                let v = &vars[rng.gen_range(0..3)];
                let w = &vars[rng.gen_range(0..3)];
                let c = rat(rng.gen_range(-3..4), rng.gen_range(1..3));
                p = &p + &(v * w).scale(&c);
            }
            p
        };
        for _ in 0..10 {
            let g1 = rand_poly(&mut rng);
            let g2 = rand_poly(&mut rng);
            let h1 = rand_poly(&mut rng);
            let h2 = rand_poly(&mut rng);
            if g1.is_zero() || g2.is_zero() {
                continue;
            }
            // explicit combination h1 g1 + h2 g2 reduces to zero
            let f = &(&h1 * &g1) + &(&h2 * &g2);
            let set = vec![g1, g2];
            let r = reduce_mod_set(&f, &set, GroebnerBudget::default()).unwrap();
            assert!(r.is_zero(), "combination did not reduce to zero: {}", r);
            // idempotence on a random poly
            let p = rand_poly(&mut rng);
            let r1 = reduce_mod_set(&p, &set, GroebnerBudget::default()).unwrap();
            let r2 = reduce_mod_set(&r1, &set, GroebnerBudget::default()).unwrap();
            assert_eq!(r1, r2);
        }
    }

    #[test]
    fn budget_error_surfaces() {
        let t = SymbolTable::new(&["a", "b", "c"]).unwrap();
        let a = MultiPoly::var(&t, 0);
        let b = MultiPoly::var(&t, 1);
        let c = MultiPoly::var(&t, 2);
        let g1 = &(&a * &a) + &(&b * &c);
        let g2 = &(&b * &b) + &(&a * &c);
        let g3 = &(&c * &c) + &(&a * &b);
        let tiny = GroebnerBudget { max_steps: 1, max_basis: 1 };
        let r = groebner_basis(&[g1, g2, g3], tiny);
        assert!(matches!(r, Err(PolyError::ResourceBudget(_))));
    }

    #[test]
    fn substitution_truncates_consistently() {
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        // f(x,y) = x^2 + y, substitute x -> x + y^2, y -> y + x^3, cap total 3
        let f = &x.pow_trunc(2, None).unwrap() + &y;
        let px = &x + &y.pow_trunc(2, None).unwrap();
        let py = &y + &x.pow_trunc(3, None).unwrap();
        let r = f.substitute_xy(&px, &py, TruncCap::total(3)).unwrap();
        // (x+y^2)^2 + y + x^3 = x^2 + 2x y^2 + y^4 + y + x^3 -> drop y^4 and 2xy^2 (deg 3 kept)
        let expect = &(&(&x.pow_trunc(2, None).unwrap()
            + &(&x * &y.pow_trunc(2, None).unwrap()).scale(&rat_int(2)))
            + &y)
            + &x.pow_trunc(3, None).unwrap();
        assert_eq!(r, expect);
    }
}
