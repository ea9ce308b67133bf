//! Reduction of a focus side to the rotation normal form.
//!
//! Pipeline per side: a linear change puts the linear part into exact
//! rotation shape `((alpha, -beta), (beta, alpha))`; an order-by-order
//! near-identity removal leaves only the resonant directions `x y^(k-1)`,
//! `y^k` with coefficients `nu_k`, `eta_k`; a final time rescaling
//! eliminates all `eta` and produces the invariant sequence `gamma_k`.
//!
//! A lower subsystem is reduced by the same formulas run in place. This is
//! the composition flip-reduce-flip written out: conjugating the reduction of
//! the axis-flipped field by `(x, y) -> (x, -y)` gives a transformation of
//! the same shape with the same boundary restriction, so the in-place run
//! already produces the lower-block coefficient sequence.

use crate::exactnum::Rational;
use crate::polyring::{MultiPoly, PolyError, TruncCap};
use crate::sysmodel::TransformRecord;
use num_traits::{One, Signed, Zero};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NfError {
    #[error("linear part is parameter-dependent ({0}); substitute parameter values")]
    SymbolicLinearPart(String),
    #[error("irrational rotation rate: beta^2 = {0} is not a rational square; pre-scale the system")]
    IrrationalRotationRate(String),
    #[error("dY/dx(0,0) = 0: the linear part needs a preliminary rotation, refused")]
    ZeroLowerLeft,
    #[error("not a focus: eigenvalue discriminant {0} is not positive")]
    NotAFocus(String),
    #[error("linear part is not in rotation form")]
    NotRotationForm,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Field with linear part exactly `((alpha, -beta), (beta, alpha))`.
#[derive(Debug, Clone)]
pub struct RotationForm {
    pub alpha: Rational,
    pub beta: Rational,
    pub q1: Rational,
    pub q2: Rational,
    pub x: MultiPoly,
    pub y: MultiPoly,
}

/// Output of the full focus pipeline on one side.
#[derive(Debug, Clone)]
pub struct FocusNF {
    pub alpha: Rational,
    pub beta: Rational,
    /// `gamma[k-1]` is `gamma_k`, `k = 1..=N+1`; `gamma_1 = alpha/beta`.
    pub gamma: Vec<MultiPoly>,
    /// `nu[k-2]` is `nu_k`, `k = 2..=N+1`.
    pub nu: Vec<MultiPoly>,
    pub eta: Vec<MultiPoly>,
    /// Time-scaling coefficients `T_1..T_N`.
    pub t_scale: Vec<MultiPoly>,
    pub free_constants: Vec<MultiPoly>,
    pub transform: TransformRecord,
    /// The field after all near-identity steps (before time scaling).
    pub reduced: (MultiPoly, MultiPoly),
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

/// Put the linear part into rotation form by `(x, y) -> (x + q2 y, q1 y)`.
///
/// `alpha = tr(M)/2`; `beta > 0` with `beta^2 = det(M) - alpha^2`; `q1 = c/beta`
/// (positive exactly when the flow crosses the positive x-axis upward);
/// `q2 = (a - alpha)/beta`.
pub fn to_rotation_form(
    x_field: &MultiPoly,
    y_field: &MultiPoly,
    cap_degree: u32,
) -> Result<RotationForm, NfError> {
    let table = x_field.table();
    let need_const = |p: &MultiPoly| -> Result<Rational, NfError> {
        p.as_constant().ok_or_else(|| NfError::SymbolicLinearPart(p.render()))
    };
    let a = need_const(&x_field.coeff_xy(1, 0))?;
    let b = need_const(&x_field.coeff_xy(0, 1))?;
    let c = need_const(&y_field.coeff_xy(1, 0))?;
    let d = need_const(&y_field.coeff_xy(0, 1))?;
    let half = Rational::new(1.into(), 2.into());
    let alpha = (&a + &d) * &half;
    let s = (&a - &d) * &half;
    let beta2 = -(&s * &s) - &b * &c;
    if !beta2.is_positive() {
        return Err(NfError::NotAFocus(beta2.to_string()));
    }
    if c.is_zero() {
        return Err(NfError::ZeroLowerLeft);
    }
    let beta =
        rational_sqrt(&beta2).ok_or_else(|| NfError::IrrationalRotationRate(beta2.to_string()))?;
    let q1 = &c / &beta;
    let q2 = (&a - &alpha) / &beta;
    // substitute x -> x + q2 y, y -> q1 y, then invert the linear block
    let cap = TruncCap::total(cap_degree);
    let px = &MultiPoly::var_x(table)
        + &MultiPoly::var_y(table).scale(&q2);
    let py = MultiPoly::var_y(table).scale(&q1);
    let xs = x_field.substitute_xy(&px, &py, cap)?;
    let ys = y_field.substitute_xy(&px, &py, cap)?;
    // P^{-1} = ((1, -q2/q1), (0, 1/q1))
    let new_x = &xs - &ys.scale(&(&q2 / &q1));
    let new_y = ys.scale(&q1.recip());
    // the linear part is now exactly the rotation block
    debug_assert_eq!(new_x.coeff_xy(1, 0).as_constant(), Some(alpha.clone()));
    debug_assert_eq!(new_x.coeff_xy(0, 1).as_constant(), Some(-&beta));
    debug_assert_eq!(new_y.coeff_xy(1, 0).as_constant(), Some(beta.clone()));
    debug_assert_eq!(new_y.coeff_xy(0, 1).as_constant(), Some(alpha.clone()));
    Ok(RotationForm { alpha, beta, q1, q2, x: new_x, y: new_y })
}

/// One near-identity map `(x, y) -> (x + P, y + Q)` applied to a field, with
/// the Jacobian inverted by a Neumann series under the truncation cap.
pub(crate) fn apply_near_identity(
    x_field: &MultiPoly,
    y_field: &MultiPoly,
    p_map: &MultiPoly,
    q_map: &MultiPoly,
    cap_x: TruncCap,
    cap_y: TruncCap,
) -> Result<(MultiPoly, MultiPoly), PolyError> {
    let table = x_field.table();
    let (xi, yi) = (table.x_index(), table.y_index());
    let cap = if cap_x.max >= cap_y.max { cap_x } else { cap_y };
    let px = &MultiPoly::var_x(table) + p_map;
    let py = &MultiPoly::var_y(table) + q_map;
    let xs = x_field.substitute_xy(&px, &py, cap)?;
    let ys = y_field.substitute_xy(&px, &py, cap)?;
    let dpx = p_map.partial_derivative(xi, 1);
    let dpy = p_map.partial_derivative(yi, 1);
    let dqx = q_map.partial_derivative(xi, 1);
    let dqy = q_map.partial_derivative(yi, 1);
    // B = (I + Dg)^{-1} = sum (-Dg)^t, truncated; terminates because every
    // Jacobian entry has positive weighted degree
    let one = MultiPoly::one(table);
    let zero = MultiPoly::zero(table);
    let mut b = [[one.clone(), zero.clone()], [zero.clone(), one]];
    let mut m = [[dpx.neg(), dpy.neg()], [dqx.neg(), dqy.neg()]];
    let mut guard = 0;
    while m.iter().flatten().any(|e| !e.is_zero()) {
        for r in 0..2 {
            for c in 0..2 {
                b[r][c] = b[r][c].checked_add(&m[r][c])?;
            }
        }
        let n00 = m[0][0].mul_trunc(&b_neg(&dpx), Some(cap))?
            .checked_add(&m[0][1].mul_trunc(&b_neg(&dqx), Some(cap))?)?;
        let n01 = m[0][0].mul_trunc(&b_neg(&dpy), Some(cap))?
            .checked_add(&m[0][1].mul_trunc(&b_neg(&dqy), Some(cap))?)?;
        let n10 = m[1][0].mul_trunc(&b_neg(&dpx), Some(cap))?
            .checked_add(&m[1][1].mul_trunc(&b_neg(&dqx), Some(cap))?)?;
        let n11 = m[1][0].mul_trunc(&b_neg(&dpy), Some(cap))?
            .checked_add(&m[1][1].mul_trunc(&b_neg(&dqy), Some(cap))?)?;
        m = [[n00, n01], [n10, n11]];
        guard += 1;
        assert!(guard < 200, "Neumann series did not terminate");
    }
    let new_x = b[0][0]
        .mul_trunc(&xs, Some(cap_x))?
        .checked_add(&b[0][1].mul_trunc(&ys, Some(cap_x))?)?
        .truncate(cap_x);
    let new_y = b[1][0]
        .mul_trunc(&xs, Some(cap_y))?
        .checked_add(&b[1][1].mul_trunc(&ys, Some(cap_y))?)?
        .truncate(cap_y);
    Ok((new_x, new_y))
}

fn b_neg(p: &MultiPoly) -> MultiPoly {
    p.neg()
}

/// Order-by-order removal of all non-resonant terms up to degree `n + 1`.
///
/// `free_constants[m-1]` is the arbitrary constant of the degree-(m+1) map
/// (its boundary coefficient `r_{m+1,0}`); pass zeros for the default.
pub fn reduce_focus(
    rot: &RotationForm,
    n: u32,
    free_constants: &[MultiPoly],
) -> Result<FocusReduction, NfError> {
    let table = rot.x.table();
    let cap = TruncCap::total(n + 1);
    let (alpha, beta) = (rot.alpha.clone(), rot.beta.clone());
    let mut x = rot.x.truncate(cap);
    let mut y = rot.y.truncate(cap);
    let mut nu: Vec<MultiPoly> = Vec::new();
    let mut eta: Vec<MultiPoly> = Vec::new();
    let mut orders: Vec<(MultiPoly, MultiPoly)> = Vec::new();
    let mut boundary: Vec<MultiPoly> = Vec::new();
    let zero = MultiPoly::zero(table);
    for m in 1..=n as usize {
        let deg = m + 1;
        let a_of = |f: &MultiPoly, i: usize, j: usize| -> MultiPoly {
            f.coeff_xy(i as u8, j as u8)
        };
        // solved coefficients of the degree-(m+1) map, indexed by y-power j
        let mut p = vec![zero.clone(); deg + 1];
        let mut q = vec![zero.clone(); deg + 1];
        let c_free = free_constants.get(m - 1).cloned().unwrap_or_else(|| zero.clone());
        let inv_b = beta.recip();
        let ma = Rational::from_integer((m as i64).into()) * &alpha;
        p[0] = c_free.clone();
        p[1] = &a_of(&x, deg, 0).scale(&inv_b) - &c_free.scale(&(&ma * &inv_b));
        q[1] = &a_of(&y, deg, 0).scale(&inv_b) + &c_free;
        // q[0] is identically zero: the y-part of the map has no pure-x terms
        for k in 1..m {
            let step = Rational::from_integer(((m - k + 2) as i64).into()) * &beta;
            let div = (Rational::from_integer(((k + 1) as i64).into()) * &beta).recip();
            p[k + 1] = (&(&a_of(&x, m - k + 1, k) + &p[k - 1].scale(&step))
                - &(&p[k].scale(&ma) + &q[k].scale(&beta)))
                .scale(&div);
            let qprev = if k >= 2 { q[k - 1].clone() } else { zero.clone() };
            q[k + 1] = (&(&a_of(&y, m - k + 1, k) + &qprev.scale(&step))
                - &(&q[k].scale(&ma) - &p[k].scale(&beta)))
                .scale(&div);
        }
        // the two resonant-direction unknowns p_{0,m+1}, q_{0,m+1}
        let two_b = Rational::from_integer(2.into()) * &beta;
        let u1 = &(&a_of(&x, 1, m) - &a_of(&y, 0, deg))
            + &(&(&p[m - 1] - &q[m]).scale(&two_b) - &p[m].scale(&ma));
        let q2prev = if m >= 2 { q[m - 1].clone() } else { zero.clone() };
        let u2 = &(&a_of(&x, 0, deg) + &a_of(&y, 1, m))
            + &(&(&p[m] + &q2prev).scale(&two_b) - &q[m].scale(&ma));
        let mb = Rational::from_integer((m as i64).into()) * &alpha;
        let m2b = Rational::from_integer(((m + 2) as i64).into()) * &beta;
        let denom = (&mb * &mb + &m2b * &m2b).recip();
        p[deg] = (&u1.scale(&(&m2b * &denom)) + &u2.scale(&(&mb * &denom))).clone();
        q[deg] = (&u2.scale(&(&m2b * &denom)) - &u1.scale(&(&mb * &denom))).clone();
        let eta_next = &(&p[deg].scale(&mb) + &q[deg].scale(&beta))
            - &(&p[m].scale(&beta) + &a_of(&x, 0, deg));
        let nu_next = &(&q[deg].scale(&mb).neg() + &p[deg].scale(&beta))
            + &(&q[m].scale(&beta) + &a_of(&y, 0, deg));
        nu.push(nu_next);
        eta.push(eta_next);
        // assemble the map and transform the field
        let mut p_map = MultiPoly::zero(table);
        let mut q_map = MultiPoly::zero(table);
        for (j, (pc, qc)) in p.iter().zip(q.iter()).enumerate() {
            let mono = MultiPoly::monomial(
                table,
                Rational::one(),
                &[(table.x_index(), (deg - j) as u8), (table.y_index(), j as u8)],
            );
            p_map = &p_map + &pc.checked_mul(&mono)?;
            if j >= 1 {
                q_map = &q_map + &qc.checked_mul(&mono)?;
            }
        }
        let (nx, ny) = apply_near_identity(&x, &y, &p_map, &q_map, cap, cap)?;
        x = nx;
        y = ny;
        boundary.push(c_free);
        orders.push((p_map, q_map));
    }
    Ok(FocusReduction { nu, eta, orders, boundary, reduced: (x, y) })
}

#[derive(Debug, Clone)]
pub struct FocusReduction {
    pub nu: Vec<MultiPoly>,
    pub eta: Vec<MultiPoly>,
    pub orders: Vec<(MultiPoly, MultiPoly)>,
    pub boundary: Vec<MultiPoly>,
    pub reduced: (MultiPoly, MultiPoly),
}

/// Solve the triangular system that kills every `eta` by a time rescaling,
/// producing `T_1..T_N` and the invariant `gamma_1..gamma_{N+1}`.
pub fn time_rescale_focus(
    alpha: &Rational,
    beta: &Rational,
    nu: &[MultiPoly],
    eta: &[MultiPoly],
) -> (Vec<MultiPoly>, Vec<MultiPoly>) {
    let n = nu.len();
    let inv_b = beta.recip();
    let mut t: Vec<MultiPoly> = Vec::with_capacity(n);
    for k in 1..=n {
        // T_k = (eta_{k+1} - sum_{i=1}^{k-1} T_{k-i} eta_{i+1}) / beta
        let mut s = eta[k - 1].clone();
        for i in 1..k {
            s = &s - &t[k - i - 1].checked_mul(&eta[i - 1]).expect("table");
        }
        t.push(s.scale(&inv_b));
    }
    let table = if let Some(f) = nu.first() { f.table().clone() } else { return (vec![], t) };
    let mut gamma: Vec<MultiPoly> =
        vec![MultiPoly::constant(&table, alpha / beta)];
    for k in 1..=n {
        // gamma_{k+1} = (nu_{k+1} - sum_{i=1}^{k-1} T_{k-i} nu_{i+1} - alpha T_k)/beta
        let mut s = nu[k - 1].clone();
        for i in 1..k {
            s = &s - &t[k - i - 1].checked_mul(&nu[i - 1]).expect("table");
        }
        s = &s - &t[k - 1].scale(alpha);
        gamma.push(s.scale(&inv_b));
    }
    (gamma, t)
}

/// Full pipeline for one focus side. The same entry point serves upper and
/// lower subsystems; for a counterclockwise-normalized system both sides come
/// out with `q1 > 0`, which is the gluing requirement.
pub fn reduce_focus_side(
    x_field: &MultiPoly,
    y_field: &MultiPoly,
    n: u32,
    free_constants: &[MultiPoly],
) -> Result<FocusNF, NfError> {
    let rot = to_rotation_form(x_field, y_field, n + 1)?;
    let red = reduce_focus(&rot, n, free_constants)?;
    let (gamma, t_scale) = time_rescale_focus(&rot.alpha, &rot.beta, &red.nu, &red.eta);
    let gamma = if gamma.is_empty() {
        vec![MultiPoly::constant(x_field.table(), &rot.alpha / &rot.beta)]
    } else {
        gamma
    };
    let transform = TransformRecord {
        q1: rot.q1.clone(),
        q2: rot.q2.clone(),
        boundary_x: red.boundary.clone(),
        orders: red.orders.clone(),
    };
    Ok(FocusNF {
        alpha: rot.alpha,
        beta: rot.beta,
        gamma,
        nu: red.nu,
        eta: red.eta,
        t_scale,
        free_constants: free_constants.to_vec(),
        transform,
        reduced: red.reduced,
    })
}

/// Check that a reduced field consists of the rotation block plus resonant
/// terms only, and read those terms back. Used as the conjugacy oracle.
pub fn resonant_shape_residual(
    reduced: &(MultiPoly, MultiPoly),
    alpha: &Rational,
    beta: &Rational,
    nu: &[MultiPoly],
    eta: &[MultiPoly],
    n: u32,
) -> MultiPoly {
    let table = reduced.0.table();
    let x = MultiPoly::var_x(table);
    let y = MultiPoly::var_y(table);
    let mut ex = &x.scale(alpha) - &y.scale(beta);
    let mut ey = &x.scale(beta) + &y.scale(alpha);
    for k in 1..=n as usize {
        let yk = y.pow_trunc(k as u32, None).expect("pow");
        let nu_k = &nu[k - 1];
        let eta_k = &eta[k - 1];
        let xterm = &x.checked_mul(nu_k).unwrap() - &y.checked_mul(eta_k).unwrap();
        let yterm = &x.checked_mul(eta_k).unwrap() + &y.checked_mul(nu_k).unwrap();
        ex = &ex + &yk.checked_mul(&xterm).unwrap();
        ey = &ey + &yk.checked_mul(&yterm).unwrap();
    }
    let cap = TruncCap::total(n + 1);
    let dx = (&reduced.0.truncate(cap) - &ex.truncate(cap)).truncate(cap);
    let dy = (&reduced.1.truncate(cap) - &ey.truncate(cap)).truncate(cap);
    &dx + &dy
}
