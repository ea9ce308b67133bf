//! Input model: polynomial vector-field parsing, the piecewise system with
//! switching line `y = 0`, classification of the origin as FF / FP / PP, and
//! orientation normalization.
//!
//! Grammar for vector-field components: signed decimal integers and rationals
//! `a/b`, identifiers `[A-Za-z][A-Za-z0-9]*`, operators `+ - * ^`,
//! parentheses; `^` takes a non-negative integer literal; no implicit
//! multiplication. Input files are TOML with `[params] names = [...]`,
//! `[upper] X/Y`, `[lower] X/Y`.
//!
//! Sign tests during classification must be decidable over the rationals;
//! any test whose value still contains parameters is refused as
//! parameter-dependent rather than case-split.

use crate::exactnum::Rational;
use crate::polyring::{MultiPoly, PolyError, SymbolTable, TruncCap};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SysError {
    #[error("syntax error at token {token} (byte {byte}): {msg}")]
    Syntax { token: usize, byte: usize, msg: String },
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("input file error: {0}")]
    InputFile(String),
    #[error("parameter-dependent classification: {0}; substitute parameter values")]
    ParameterDependent(String),
    #[error("irrational rotation rate: beta^2 = {0} is not a rational square; pre-scale the system")]
    IrrationalRotationRate(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SysError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().unwrap();
                out.push((Tok::Int(n), start));
            }
            'A'..='Z' | 'a'..='z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(SysError::Syntax {
                    token: out.len() + 1,
                    byte: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a Arc<SymbolTable>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn err(&self, msg: &str) -> SysError {
        let byte = self.toks.get(self.pos).map(|(_, b)| *b).unwrap_or_else(|| {
            self.toks.last().map(|(_, b)| b + 1).unwrap_or(0)
        });
        SysError::Syntax { token: self.pos + 1, byte, msg: msg.to_string() }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<MultiPoly, SysError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.checked_add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.checked_sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, SysError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            acc = acc.checked_mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MultiPoly, SysError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let e = u32::try_from(n).map_err(|_| self.err("exponent out of range"))?;
                    Ok(base.pow_trunc(e, None)?)
                }
                _ => {
                    self.pos -= 1;
                    Err(self.err("expected a non-negative integer exponent after `^`"))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<MultiPoly, SysError> {
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            Some(Tok::Int(n)) => {
                self.pos += 1;
                // rational literal a/b
                if self.peek() == Some(&Tok::Slash) {
                    let save = self.pos;
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Int(d)) if !d.is_zero() => {
                            return Ok(MultiPoly::constant(self.table, Rational::new(n, d)));
                        }
                        Some(Tok::Int(_)) => return Err(self.err("zero denominator")),
                        _ => {
                            self.pos = save;
                        }
                    }
                }
                Ok(MultiPoly::constant(self.table, Rational::from_integer(n)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.table.index_of(&name) {
                    Some(i) => Ok(MultiPoly::var(self.table, i)),
                    None => Err(SysError::UndeclaredSymbol(name)),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            _ => Err(self.err("expected a number, identifier or parenthesized expression")),
        }
    }
}

/// Parse one vector-field component against a symbol table.
pub fn parse_field(text: &str, table: &Arc<SymbolTable>) -> Result<MultiPoly, SysError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, table };
    let poly = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(poly)
}

// ---------------------------------------------------------------------------
// Piecewise system
// ---------------------------------------------------------------------------

/// Orientation-normalization moves recorded on the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Flip {
    /// `(x, y, t) -> (-x, y, t)`: reverses the rotation direction, keeps the
    /// half-planes.
    MirrorX,
    /// `(x, y, t) -> (-x, -y, t)`: swaps the half-planes (turns PF input into
    /// FP), keeps the rotation direction.
    SwapSides,
}

impl fmt::Display for Flip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flip::MirrorX => write!(f, "(x,y,t)->(-x,y,t)"),
            Flip::SwapSides => write!(f, "(x,y,t)->(-x,-y,t)"),
        }
    }
}

#[derive(Clone)]
pub struct PiecewiseSystem {
    table: Arc<SymbolTable>,
    pub upper: (MultiPoly, MultiPoly),
    pub lower: (MultiPoly, MultiPoly),
    pub orientation_record: Vec<Flip>,
}

#[derive(serde::Deserialize)]
struct TomlParams {
    names: Vec<String>,
}

#[derive(serde::Deserialize)]
struct TomlField {
    #[serde(rename = "X")]
    x: String,
    #[serde(rename = "Y")]
    y: String,
}

#[derive(serde::Deserialize)]
struct TomlSystem {
    params: Option<TomlParams>,
    upper: TomlField,
    lower: TomlField,
}

impl PiecewiseSystem {
    pub fn new(
        table: Arc<SymbolTable>,
        upper: (MultiPoly, MultiPoly),
        lower: (MultiPoly, MultiPoly),
    ) -> Self {
        PiecewiseSystem { table, upper, lower, orientation_record: Vec::new() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SysError> {
        let parsed: TomlSystem =
            toml::from_str(text).map_err(|e| SysError::InputFile(e.to_string()))?;
        let names = parsed.params.map(|p| p.names).unwrap_or_default();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let table = SymbolTable::new(&refs)?;
        let upper = (parse_field(&parsed.upper.x, &table)?, parse_field(&parsed.upper.y, &table)?);
        let lower = (parse_field(&parsed.lower.x, &table)?, parse_field(&parsed.lower.y, &table)?);
        Ok(Self::new(table, upper, lower))
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    /// Substitute rational values for named parameters.
    pub fn substitute(&self, values: &HashMap<String, Rational>) -> Result<Self, SysError> {
        let mut by_index = HashMap::new();
        for (name, v) in values {
            let idx = self
                .table
                .index_of(name)
                .filter(|&i| i < self.table.n_params())
                .ok_or_else(|| SysError::UndeclaredSymbol(name.clone()))?;
            by_index.insert(idx, v.clone());
        }
        let sub = |p: &MultiPoly| p.substitute_params(&by_index);
        Ok(PiecewiseSystem {
            table: self.table.clone(),
            upper: (sub(&self.upper.0), sub(&self.upper.1)),
            lower: (sub(&self.lower.0), sub(&self.lower.1)),
            orientation_record: self.orientation_record.clone(),
        })
    }

    /// True when no parameter symbol survives in any component.
    pub fn is_numeric(&self) -> bool {
        [&self.upper.0, &self.upper.1, &self.lower.0, &self.lower.1]
            .iter()
            .all(|p| p.terms().all(|(e, _)| (0..self.table.n_params()).all(|i| e.0[i] == 0)))
    }

    fn map_component(p: &MultiPoly, flip_x: bool, flip_y: bool, cap: u32) -> MultiPoly {
        let t = p.table();
        let px = if flip_x { MultiPoly::var_x(t).neg() } else { MultiPoly::var_x(t) };
        let py = if flip_y { MultiPoly::var_y(t).neg() } else { MultiPoly::var_y(t) };
        p.substitute_xy(&px, &py, TruncCap::total(cap)).expect("same table")
    }

    fn max_degree(&self) -> u32 {
        [&self.upper.0, &self.upper.1, &self.lower.0, &self.lower.1]
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(e, _)| {
                        e.0[self.table.x_index()] as u32 + e.0[self.table.y_index()] as u32
                    })
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Apply one orientation flip, recording it.
    pub fn apply_flip(&self, flip: Flip) -> Self {
        let cap = self.max_degree();
        let mut rec = self.orientation_record.clone();
        rec.push(flip);
        match flip {
            Flip::MirrorX => {
                // X'(x,y) = -X(-x,y), Y'(x,y) = Y(-x,y); sides keep their role
                let m = |p: &MultiPoly| Self::map_component(p, true, false, cap);
                PiecewiseSystem {
                    table: self.table.clone(),
                    upper: (m(&self.upper.0).neg(), m(&self.upper.1)),
                    lower: (m(&self.lower.0).neg(), m(&self.lower.1)),
                    orientation_record: rec,
                }
            }
            Flip::SwapSides => {
                // X'(x,y) = -X(-x,-y), Y'(x,y) = -Y(-x,-y); sides swap
                let m = |p: &MultiPoly| Self::map_component(p, true, true, cap).neg();
                PiecewiseSystem {
                    table: self.table.clone(),
                    upper: (m(&self.lower.0), m(&self.lower.1)),
                    lower: (m(&self.upper.0), m(&self.upper.1)),
                    orientation_record: rec,
                }
            }
        }
    }

    /// `(x, y, t) -> (x, -y, -t)`: swaps the half-planes and reverses time;
    /// used by symmetry constructions and tests.
    pub fn flip_y_time(&self) -> Self {
        let cap = self.max_degree();
        let m = |p: &MultiPoly| Self::map_component(p, false, true, cap);
        PiecewiseSystem {
            table: self.table.clone(),
            upper: (m(&self.lower.0).neg(), m(&self.lower.1)),
            lower: (m(&self.upper.0).neg(), m(&self.upper.1)),
            orientation_record: self.orientation_record.clone(),
        }
    }
}

impl fmt::Debug for PiecewiseSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "upper: ({}, {}); lower: ({}, {}); flips: {:?}",
            self.upper.0.render(),
            self.upper.1.render(),
            self.lower.0.render(),
            self.lower.1.render(),
            self.orientation_record
        )
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct FocusData {
    /// Real part of the eigenvalues; may stay symbolic.
    pub alpha: MultiPoly,
    pub beta: Rational,
    /// Lower-left linear entry; positive after normalization.
    pub c: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyData {
    pub ell: u32,
    pub a0: Rational,
    /// Leading coefficient of `Y(x, 0)`.
    pub b_lead: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryClass {
    FF { upper: FocusData, lower: FocusData },
    FP { upper: FocusData, lower: TangencyData },
    PP { upper: TangencyData, lower: TangencyData },
    NotMonodromic { reason: String },
}

impl BoundaryClass {
    pub fn kind_str(&self) -> &'static str {
        match self {
            BoundaryClass::FF { .. } => "FF",
            BoundaryClass::FP { .. } => "FP",
            BoundaryClass::PP { .. } => "PP",
            BoundaryClass::NotMonodromic { .. } => "NotMonodromic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub class: BoundaryClass,
    /// System after orientation normalization; reductions run on this.
    pub normalized: PiecewiseSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RotDir {
    Ccw,
    Cw,
}

enum SideOutcome {
    Focus(FocusData, RotDir),
    Tangency(TangencyData, RotDir),
    Reject(String),
}

/// Sign of a parameters-only polynomial, when decidable.
fn decide_sign(p: &MultiPoly, what: &str) -> Result<i8, SysError> {
    match p.as_constant() {
        Some(c) => Ok(if c.is_zero() {
            0
        } else if c.is_positive() {
            1
        } else {
            -1
        }),
        None => Err(SysError::ParameterDependent(format!("{what} = {}", p.render()))),
    }
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(Rational::new(ns, ds))
    } else {
        None
    }
}

fn analyze_side(
    x_field: &MultiPoly,
    y_field: &MultiPoly,
    side: Side,
) -> Result<SideOutcome, SysError> {
    let side_name = match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    };
    let x00 = x_field.coeff_xy(0, 0);
    let y00 = y_field.coeff_xy(0, 0);
    let sx = decide_sign(&x00, &format!("{side_name} X(0,0)"))?;
    let sy = decide_sign(&y00, &format!("{side_name} Y(0,0)"))?;
    if sy != 0 {
        return Ok(SideOutcome::Reject(format!(
            "{side_name} subsystem: the orbit through the origin crosses the switching line"
        )));
    }
    if sx == 0 {
        // equilibrium at O: focus test on the linear part
        let table = x_field.table();
        let a = x_field.coeff_xy(1, 0);
        let b = x_field.coeff_xy(0, 1);
        let c = y_field.coeff_xy(1, 0);
        let d = y_field.coeff_xy(0, 1);
        let twop = MultiPoly::constant(table, Rational::new(1.into(), 2.into()));
        let alpha = (&(&a + &d)) * &twop;
        let s = (&(&a - &d)) * &twop;
        // beta^2 = -s^2 - b c
        let beta2 = &(&s * &s).neg() - &(&b * &c);
        let beta2c = beta2.as_constant().ok_or_else(|| {
            SysError::ParameterDependent(format!(
                "{side_name} eigenvalue discriminant = {}",
                beta2.render()
            ))
        })?;
        if !beta2c.is_positive() {
            return Ok(SideOutcome::Reject(format!(
                "{side_name} subsystem: real eigenvalues at the origin"
            )));
        }
        let beta = rational_sqrt(&beta2c)
            .ok_or_else(|| SysError::IrrationalRotationRate(beta2c.to_string()))?;
        let c_const = c.as_constant().ok_or_else(|| {
            SysError::ParameterDependent(format!("{side_name} dY/dx(0,0) = {}", c.render()))
        })?;
        if c_const.is_zero() {
            return Ok(SideOutcome::Reject(format!(
                "{side_name} subsystem: dY/dx(0,0) = 0, not a rotation"
            )));
        }
        // counterclockwise flow crosses the positive x-axis upward on both sides
        let dir = if c_const.is_positive() { RotDir::Ccw } else { RotDir::Cw };
        return Ok(SideOutcome::Focus(FocusData { alpha, beta, c: c_const }, dir));
    }
    // tangency candidate: X(0,0) != 0, Y(0,0) = 0
    let a0 = x00.as_constant().expect("sign decided above");
    let max_j = y_field.degree_in(y_field.table().x_index());
    let mut lead: Option<(u32, Rational)> = None;
    for j in 1..=max_j.max(1) {
        let cj = y_field.coeff_xy(j as u8, 0);
        let s = decide_sign(&cj, &format!("{side_name} d^{j}Y/dx^{j}(0,0)"))?;
        if s != 0 {
            lead = Some((j, cj.as_constant().unwrap()));
            break;
        }
    }
    let Some((j, b_lead)) = lead else {
        return Ok(SideOutcome::Reject(format!(
            "{side_name} subsystem: the switching line is invariant (Y(x,0) = 0)"
        )));
    };
    if j % 2 == 0 {
        return Ok(SideOutcome::Reject(format!(
            "{side_name} subsystem: tangency of even multiplicity {j}"
        )));
    }
    let ell = (j + 1) / 2;
    let prod = &a0 * &b_lead;
    let invisible = match side {
        Side::Upper => prod.is_negative(),
        Side::Lower => prod.is_positive(),
    };
    if !invisible {
        return Ok(SideOutcome::Reject(format!("{side_name} subsystem: visible tangency")));
    }
    let dir = match side {
        Side::Upper => {
            if a0.is_negative() {
                RotDir::Ccw
            } else {
                RotDir::Cw
            }
        }
        Side::Lower => {
            if a0.is_positive() {
                RotDir::Ccw
            } else {
                RotDir::Cw
            }
        }
    };
    Ok(SideOutcome::Tangency(TangencyData { ell, a0, b_lead }, dir))
}

/// Classify the origin and normalize orientation to counterclockwise.
///
/// Clockwise inputs receive `(x,y,t) -> (-x,y,t)`; parabolic-focus inputs
/// receive `(x,y,t) -> (-x,-y,t)` to become focus-parabolic. Both moves are
/// recorded in the returned system's `orientation_record` and all reported
/// quantities refer to the normalized frame.
pub fn classify(system: &PiecewiseSystem) -> Result<Classification, SysError> {
    let mut sys = system.clone();
    for _round in 0..3 {
        let up = analyze_side(&sys.upper.0, &sys.upper.1, Side::Upper)?;
        let lo = analyze_side(&sys.lower.0, &sys.lower.1, Side::Lower)?;
        let reason = match (&up, &lo) {
            (SideOutcome::Reject(r), _) | (_, SideOutcome::Reject(r)) => Some(r.clone()),
            _ => None,
        };
        if let Some(reason) = reason {
            return Ok(Classification {
                class: BoundaryClass::NotMonodromic { reason },
                normalized: sys,
            });
        }
        let (updir, lodir) = match (&up, &lo) {
            (
                SideOutcome::Focus(_, d1) | SideOutcome::Tangency(_, d1),
                SideOutcome::Focus(_, d2) | SideOutcome::Tangency(_, d2),
            ) => (*d1, *d2),
            _ => unreachable!(),
        };
        if updir != lodir {
            return Ok(Classification {
                class: BoundaryClass::NotMonodromic {
                    reason: "the two subsystems rotate in opposite directions (incompatible signs)"
                        .into(),
                },
                normalized: sys,
            });
        }
        if updir == RotDir::Cw {
            sys = sys.apply_flip(Flip::MirrorX);
            continue;
        }
        return Ok(match (up, lo) {
            (SideOutcome::Focus(u, _), SideOutcome::Focus(l, _)) => Classification {
                class: BoundaryClass::FF { upper: u, lower: l },
                normalized: sys,
            },
            (SideOutcome::Focus(u, _), SideOutcome::Tangency(l, _)) => Classification {
                class: BoundaryClass::FP { upper: u, lower: l },
                normalized: sys,
            },
            (SideOutcome::Tangency(_, _), SideOutcome::Focus(_, _)) => {
                // PF: swap the half-planes and re-run
                sys = sys.apply_flip(Flip::SwapSides);
                continue;
            }
            (SideOutcome::Tangency(u, _), SideOutcome::Tangency(l, _)) => Classification {
                class: BoundaryClass::PP { upper: u, lower: l },
                normalized: sys,
            },
            (SideOutcome::Reject(_), _) | (_, SideOutcome::Reject(_)) => {
                unreachable!("rejections returned above")
            }
        });
    }
    unreachable!("orientation normalization uses at most two flips")
}

// ---------------------------------------------------------------------------
// Transformation records and the gluing check
// ---------------------------------------------------------------------------

/// Record of one side's coordinate change: the linear block `(1 q2; 0 q1)`
/// plus per-order near-identity parts added to the identity.
///
/// `q1` is stored as the homeomorphism's lower/upper block value, positive for
/// a correctly glued pair. `boundary_x[k-2]` is the coefficient of `x^k` in
/// the x-component restricted to the switching line.
#[derive(Debug, Clone)]
pub struct TransformRecord {
    pub q1: Rational,
    pub q2: Rational,
    pub boundary_x: Vec<MultiPoly>,
    /// Per-order `(x_part, y_part)` of the near-identity map.
    pub orders: Vec<(MultiPoly, MultiPoly)>,
}

#[derive(Debug, Clone)]
pub struct HomeoCheck {
    pub pass: bool,
    pub reasons: Vec<String>,
    pub first_mismatch_order: Option<u32>,
}

/// Verify the gluing conditions of a piecewise transformation: the two
/// x-components agree on the switching line, the y-components vanish there,
/// and `q1+ * q1- > 0`.
pub fn homeomorphism_consistency_check(
    upper: &TransformRecord,
    lower: &TransformRecord,
) -> HomeoCheck {
    let mut reasons = Vec::new();
    let mut first_mismatch = None;
    if !(&upper.q1 * &lower.q1).is_positive() {
        reasons.push(format!("q1+ * q1- = {} is not positive", &upper.q1 * &lower.q1));
    }
    let n = upper.boundary_x.len().max(lower.boundary_x.len());
    for k in 0..n {
        let zero_u;
        let up = match upper.boundary_x.get(k) {
            Some(p) => p,
            None => {
                zero_u = MultiPoly::zero(lower.boundary_x[k].table());
                &zero_u
            }
        };
        let zero_l;
        let lo = match lower.boundary_x.get(k) {
            Some(p) => p,
            None => {
                zero_l = MultiPoly::zero(up.table());
                &zero_l
            }
        };
        if up != lo {
            let order = (k + 2) as u32;
            reasons.push(format!(
                "x-components differ on the switching line at order {order}: {} vs {}",
                up.render(),
                lo.render()
            ));
            first_mismatch = first_mismatch.or(Some(order));
            break;
        }
    }
    for (which, rec) in [("upper", upper), ("lower", lower)] {
        for (idx, (_, y_part)) in rec.orders.iter().enumerate() {
            let k = idx as u32 + 2;
            let restricted: Vec<u8> = (0..=MAX_CHECK_DEG)
                .filter(|&i| !y_part.coeff_xy(i, 0).is_zero())
                .collect();
            if !restricted.is_empty() {
                reasons.push(format!(
                    "{which} y-component does not vanish on the switching line at order {k}"
                ));
                first_mismatch = first_mismatch.or(Some(k));
            }
        }
    }
    HomeoCheck { pass: reasons.is_empty(), reasons, first_mismatch_order: first_mismatch }
}

const MAX_CHECK_DEG: u8 = 32;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, rat_int};

    fn ex51() -> PiecewiseSystem {
        PiecewiseSystem::from_toml_str(
            r#"
            [params]
            names = ["p20", "p11", "p02", "q20", "q11", "q02"]
            [upper]
            X = "-y + p20*x^2 + p11*x*y + p02*y^2"
            Y = "x + q20*x^2 + q11*x*y + q02*y^2"
            [lower]
            X = "-y"
            Y = "x"
        "#,
        )
        .unwrap()
    }

    fn ex53(kp: u32, km: u32) -> PiecewiseSystem {
        // printed form rotates clockwise; classification must mirror it
        let table = SymbolTable::new(&["lambda"]).unwrap();
        let x = MultiPoly::var_x(&table);
        let lam = MultiPoly::var(&table, 0);
        let xkp = x.pow_trunc(2 * kp - 1, None).unwrap();
        let xkm = x.pow_trunc(2 * km - 1, None).unwrap();
        let upper_y = (&xkp.checked_mul(&(&lam.checked_mul(&x).unwrap() + &MultiPoly::one(&table))).unwrap()).neg();
        let lower_y = xkm.checked_mul(&(&x - &MultiPoly::one(&table))).unwrap();
        PiecewiseSystem::new(
            table.clone(),
            (MultiPoly::one(&table), upper_y),
            (MultiPoly::one(&table).neg(), lower_y),
        )
    }

    #[test]
    fn parse_examples() {
        let t = SymbolTable::new(&["p20"]).unwrap();
        let p = parse_field("-y + p20*x^2", &t).unwrap();
        assert_eq!(p.render(), "p20*x^2 - y");
        let q = parse_field("x*(x-1)", &t).unwrap();
        assert_eq!(q.render(), "x^2 - x");
        let r = parse_field("3/4*x", &t).unwrap();
        assert_eq!(r.render(), "3/4*x");
        match parse_field("x + + y", &t) {
            Err(SysError::Syntax { token, .. }) => assert_eq!(token, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse_field("x + z", &t), Err(SysError::UndeclaredSymbol(_))));
    }

    #[test]
    fn classify_ex51_is_ff() {
        let c = classify(&ex51()).unwrap();
        match c.class {
            BoundaryClass::FF { upper, lower } => {
                assert_eq!(upper.beta, rat_int(1));
                assert!(upper.alpha.is_zero());
                assert_eq!(lower.beta, rat_int(1));
            }
            other => panic!("expected FF, got {other:?}"),
        }
        assert!(c.normalized.orientation_record.is_empty());
    }

    #[test]
    fn classify_ex52_is_fp_after_substitution() {
        let sys = PiecewiseSystem::from_toml_str(
            r#"
            [params]
            names = ["delta", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3"]
            [upper]
            X = "delta*x - y - a3*x^2 + (2*a2 + a5)*x*y + a6*y^2"
            Y = "x + delta*y + a2*x^2 + (2*a3 + a4)*x*y - a2*y^2"
            [lower]
            X = "1 + (b1 + b3)*x + b2*y"
            Y = "x + (b1 - b3)*y"
        "#,
        )
        .unwrap();
        // even with symbolic delta the discriminant is constant: classify works
        let c = classify(&sys).unwrap();
        match &c.class {
            BoundaryClass::FP { upper, lower } => {
                assert_eq!(lower.ell, 1);
                assert_eq!(lower.a0, rat_int(1));
                assert_eq!(upper.beta, rat_int(1));
                assert_eq!(upper.alpha.render(), "delta");
            }
            other => panic!("expected FP, got {other:?}"),
        }
        let mut vals = HashMap::new();
        vals.insert("delta".to_string(), rat_int(0));
        let c0 = classify(&sys.substitute(&vals).unwrap()).unwrap();
        assert_eq!(c0.class.kind_str(), "FP");
    }

    #[test]
    fn classify_ex53_is_pp_after_mirror() {
        for (kp, km) in [(1, 1), (2, 3)] {
            let c = classify(&ex53(kp, km)).unwrap();
            match &c.class {
                BoundaryClass::PP { upper, lower } => {
                    assert_eq!(upper.ell, kp);
                    assert_eq!(lower.ell, km);
                    assert_eq!(upper.a0, rat_int(-1));
                    assert_eq!(lower.a0, rat_int(1));
                }
                other => panic!("expected PP, got {other:?}"),
            }
            assert_eq!(c.normalized.orientation_record, vec![Flip::MirrorX]);
        }
    }

    #[test]
    fn classify_rejects_visible_tangency() {
        // upper (1, x): a0 * b = 1 > 0 is visible from above
        let t = SymbolTable::new(&[]).unwrap();
        let sys = PiecewiseSystem::new(
            t.clone(),
            (MultiPoly::one(&t), MultiPoly::var_x(&t)),
            (MultiPoly::one(&t).neg(), MultiPoly::var_x(&t)),
        );
        let c = classify(&sys).unwrap();
        match c.class {
            BoundaryClass::NotMonodromic { reason } => {
                assert!(reason.contains("visible"), "{reason}")
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_even_multiplicity_and_real_eigenvalues() {
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let y = MultiPoly::var_y(&t);
        // upper (-1, x^2): even multiplicity
        let sys = PiecewiseSystem::new(
            t.clone(),
            (MultiPoly::one(&t).neg(), x.pow_trunc(2, None).unwrap()),
            (MultiPoly::one(&t), x.neg()),
        );
        let c = classify(&sys).unwrap();
        assert!(matches!(c.class, BoundaryClass::NotMonodromic { .. }));
        // saddle upper
        let sys2 = PiecewiseSystem::new(t.clone(), (x.clone(), y.neg()), (y.neg(), x.clone()));
        let c2 = classify(&sys2).unwrap();
        assert!(matches!(c2.class, BoundaryClass::NotMonodromic { .. }));
    }

    #[test]
    fn classify_invariant_under_common_time_scaling() {
        let sys = ex51();
        let s = rat(3, 2);
        let scaled = PiecewiseSystem::new(
            sys.table.clone(),
            (sys.upper.0.scale(&s), sys.upper.1.scale(&s)),
            (sys.lower.0.scale(&s), sys.lower.1.scale(&s)),
        );
        assert_eq!(classify(&sys).unwrap().class.kind_str(), classify(&scaled).unwrap().class.kind_str());
    }

    #[test]
    fn y_time_flip_swaps_sides_and_preserves_kind() {
        let sys = ex51();
        let flipped = sys.flip_y_time();
        assert_eq!(classify(&flipped).unwrap().class.kind_str(), "FF");
        let pp = ex53(1, 2);
        let fpp = pp.flip_y_time();
        let c = classify(&fpp).unwrap();
        match c.class {
            BoundaryClass::PP { upper, lower } => {
                // sides swapped: multiplicities exchange
                assert_eq!(upper.ell, 2);
                assert_eq!(lower.ell, 1);
            }
            other => panic!("expected PP, got {other:?}"),
        }
    }

    #[test]
    fn homeo_check_matches_and_mismatches() {
        let t = SymbolTable::new(&["c"]).unwrap();
        let cpoly = MultiPoly::var(&t, 0);
        let rec = |bx: Vec<MultiPoly>, q1: Rational| TransformRecord {
            q1,
            q2: Rational::zero(),
            boundary_x: bx,
            orders: vec![],
        };
        // both identity restrictions: pass
        let up = rec(vec![MultiPoly::zero(&t), MultiPoly::zero(&t)], rat_int(1));
        let lo = rec(vec![MultiPoly::zero(&t)], rat_int(2));
        let chk = homeomorphism_consistency_check(&up, &lo);
        assert!(chk.pass, "{:?}", chk.reasons);
        // matched nonzero constants: pass
        let up = rec(vec![cpoly.clone()], rat_int(1));
        let lo = rec(vec![cpoly.clone()], rat_int(1));
        assert!(homeomorphism_consistency_check(&up, &lo).pass);
        // mismatch cites the first bad order (k = 2)
        let up = rec(vec![cpoly.clone()], rat_int(1));
        let lo = rec(vec![cpoly.scale(&rat_int(2))], rat_int(1));
        let chk = homeomorphism_consistency_check(&up, &lo);
        assert!(!chk.pass);
        assert_eq!(chk.first_mismatch_order, Some(2));
        // negative q1 product fails
        let up = rec(vec![], rat_int(1));
        let lo = rec(vec![], rat_int(-1));
        assert!(!homeomorphism_consistency_check(&up, &lo).pass);
    }
}
