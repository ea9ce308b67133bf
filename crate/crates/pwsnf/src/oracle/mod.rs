//! Numeric ground truth: high-precision integration of each subsystem with
//! switching-line event detection, sampling of the displacement map
//! `Delta(x) = (Pi-)^{-1}(x) - Pi+(x)`, and a leading-order/coefficient fit
//! for comparison with the symbolic results.
//!
//! The integrator is a Taylor-series method on double-double arithmetic:
//! polynomial right-hand sides make the solution jet exact to arbitrary
//! order, step size comes from the tail coefficient, and the switching-line
//! crossing is polished on the dense output by bisection plus Newton.

pub mod dd;

use crate::exactnum::{rational_to_f64, Rational};
use crate::lyapunov::{focus_order, Analysis, FocusOrder};
use crate::polyring::MultiPoly;
use crate::sysmodel::PiecewiseSystem;
use dd::Dd;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("system still contains parameters; substitute values first")]
    SymbolicSystem,
    #[error("start point {0} is outside the configured neighborhood (radius {1})")]
    OutsideNeighborhood(f64, f64),
    #[error("trajectory escaped the neighborhood; the origin may not be monodromic at this radius")]
    Escaped,
    #[error("step budget of {0} exhausted before the return crossing")]
    StepBudget(usize),
    #[error("order ambiguous: log-log slope {0} is not near an integer; refine grid or raise precision")]
    OrderAmbiguous(f64),
    #[error("grid needs at least 8 points, got {0}")]
    GridTooSmall(usize),
    #[error("orbit departs into the opposite half-plane; normalize the orientation first")]
    WrongDeparture,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Taylor expansion order per step.
    pub taylor_order: usize,
    /// Local error tolerance for step-size control.
    pub tol: f64,
    pub max_steps: usize,
    /// Orbits leaving this radius abort the integration.
    pub radius: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { taylor_order: 18, tol: 1e-26, max_steps: 20_000, radius: 1.0 }
    }
}

impl OracleConfig {
    /// Interpret a requested precision in fractional bits as a tolerance.
    pub fn with_precision_bits(mut self, bits: u32) -> Self {
        self.tol = 2f64.powi(-(bits.min(100) as i32));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfMap {
    /// Upper subsystem, forward time, from `(x0, 0)` with `x0 > 0`.
    UpperForward,
    /// Lower subsystem, backward time: the inverse lower half-map.
    LowerInverse,
}

#[derive(Debug, Clone)]
pub struct OrbitResult {
    pub exit_x: Dd,
    pub steps: usize,
    pub err_estimate: f64,
    pub event_residual: f64,
}

/// Dense-coefficient view of a numeric polynomial field component.
struct Grid {
    terms: Vec<(u32, u32, Dd)>,
    max_x: u32,
    max_y: u32,
}

fn to_grid(p: &MultiPoly) -> Result<Grid, OracleError> {
    let table = p.table();
    let (xi, yi) = (table.x_index(), table.y_index());
    let mut terms = Vec::new();
    let (mut mx, mut my) = (0, 0);
    for (e, c) in p.terms() {
        for s in 0..table.n_params() {
            if e.0[s] != 0 {
                return Err(OracleError::SymbolicSystem);
            }
        }
        let (i, j) = (e.0[xi] as u32, e.0[yi] as u32);
        mx = mx.max(i);
        my = my.max(j);
        terms.push((i, j, Dd::from_rational(c)));
    }
    Ok(Grid { terms, max_x: mx, max_y: my })
}

/// Degree-synchronized evaluation of `P(x(t), y(t))` for truncated series
/// `x, y`: returns the composed series up to the same order.
fn compose_series(grid: &Grid, xs: &[Dd], ys: &[Dd], order: usize) -> Vec<Dd> {
    // power tables x^i, y^j as series
    let mut xp: Vec<Vec<Dd>> = Vec::with_capacity(grid.max_x as usize + 1);
    xp.push(one_series(order));
    for _ in 0..grid.max_x {
        let next = series_mul(xp.last().unwrap(), xs, order);
        xp.push(next);
    }
    let mut yp: Vec<Vec<Dd>> = Vec::with_capacity(grid.max_y as usize + 1);
    yp.push(one_series(order));
    for _ in 0..grid.max_y {
        let next = series_mul(yp.last().unwrap(), ys, order);
        yp.push(next);
    }
    let mut out = vec![Dd::ZERO; order + 1];
    for &(i, j, c) in &grid.terms {
        let prod = series_mul(&xp[i as usize], &yp[j as usize], order);
        for (o, p) in out.iter_mut().zip(prod) {
            *o = *o + c * p;
        }
    }
    out
}

fn one_series(order: usize) -> Vec<Dd> {
    let mut s = vec![Dd::ZERO; order + 1];
    s[0] = Dd::ONE;
    s
}

fn series_mul(a: &[Dd], b: &[Dd], order: usize) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; order + 1];
    for (i, &ai) in a.iter().enumerate().take(order + 1) {
        if ai.hi == 0.0 && ai.lo == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] = out[i + j] + ai * bj;
        }
    }
    out
}

fn eval_series(s: &[Dd], t: Dd) -> Dd {
    let mut acc = Dd::ZERO;
    for &c in s.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// One Taylor step from `(x0, y0)`: solution jets to the configured order.
fn taylor_jet(
    gx: &Grid,
    gy: &Grid,
    x0: Dd,
    y0: Dd,
    order: usize,
) -> (Vec<Dd>, Vec<Dd>) {
    let mut xs = vec![Dd::ZERO; order + 1];
    let mut ys = vec![Dd::ZERO; order + 1];
    xs[0] = x0;
    ys[0] = y0;
    for k in 0..order {
        // k-th coefficient of the composed field fixes the (k+1)-st jet term
        let fx = compose_series(gx, &xs[..=k], &ys[..=k], k);
        let fy = compose_series(gy, &xs[..=k], &ys[..=k], k);
        let f = Dd::from_f64((k + 1) as f64);
        xs[k + 1] = fx[k] / f;
        ys[k + 1] = fy[k] / f;
    }
    (xs, ys)
}

fn step_size(xs: &[Dd], ys: &[Dd], tol: f64) -> f64 {
    let order = xs.len() - 1;
    let mut h: f64 = f64::INFINITY;
    for tail in [order, order - 1] {
        let m = xs[tail].to_f64().abs().max(ys[tail].to_f64().abs());
        if m > 0.0 {
            h = h.min((tol / m).powf(1.0 / tail as f64));
        }
    }
    if !h.is_finite() {
        h = 0.5;
    }
    h.clamp(1e-8, 0.5)
}

/// Integrate one half-return: from `(x0, 0)` through the chosen half-plane
/// until the next transversal crossing of the switching line.
pub fn half_return(
    system: &PiecewiseSystem,
    x0: &Rational,
    map: HalfMap,
    cfg: &OracleConfig,
) -> Result<OrbitResult, OracleError> {
    let x0f = rational_to_f64(x0);
    if x0f.abs() >= cfg.radius {
        return Err(OracleError::OutsideNeighborhood(x0f, cfg.radius));
    }
    let (fx, fy) = match map {
        HalfMap::UpperForward => (system.upper.0.clone(), system.upper.1.clone()),
        HalfMap::LowerInverse => (system.lower.0.neg(), system.lower.1.neg()),
    };
    let gx = to_grid(&fx)?;
    let gy = to_grid(&fy)?;
    // departure side of the switching line
    let y_sign = match map {
        HalfMap::UpperForward => 1.0,
        HalfMap::LowerInverse => -1.0,
    };
    let mut x = Dd::from_rational(x0);
    let mut y = Dd::ZERO;
    let mut steps = 0usize;
    let mut left_line = false;
    loop {
        if steps >= cfg.max_steps {
            return Err(OracleError::StepBudget(cfg.max_steps));
        }
        steps += 1;
        let (xs, ys) = taylor_jet(&gx, &gy, x, y, cfg.taylor_order);
        let h = step_size(&xs, &ys, cfg.tol);
        // deflate known roots at t = 0 (the departure on the first step) so
        // the sign scan sees the departure side immediately; arbitrarily
        // short flights then resolve inside a single step
        let lead = ys
            .iter()
            .position(|c| c.to_f64() != 0.0)
            .unwrap_or(ys.len());
        let zs: Vec<Dd> = ys[lead.min(ys.len())..].to_vec();
        if zs.is_empty() {
            return Err(OracleError::Escaped); // y identically zero: invariant line
        }
        let samples = 64;
        let mut prev_t = 0.0f64;
        let mut prev_z = zs[0].to_f64();
        if prev_z * y_sign > 0.0 {
            left_line = true;
        }
        for s in 1..=samples {
            let t = h * (s as f64) / (samples as f64);
            let zv = eval_series(&zs, Dd::from_f64(t)).to_f64();
            if !left_line && zv * y_sign > 0.0 {
                left_line = true;
            }
            if left_line && zv * y_sign <= 0.0 && prev_z * y_sign > 0.0 {
                // bracketed: polish with bisection then Newton on the jet
                let t_star = polish_root(&zs, prev_t, t);
                let exit_x = eval_series(&xs, t_star);
                let resid = eval_series(&ys, t_star).to_f64().abs();
                let err = cfg.tol * steps as f64;
                return Ok(OrbitResult {
                    exit_x,
                    steps,
                    err_estimate: err,
                    event_residual: resid,
                });
            }
            prev_t = t;
            prev_z = zv;
        }
        x = eval_series(&xs, Dd::from_f64(h));
        y = eval_series(&ys, Dd::from_f64(h));
        let r = x.to_f64().hypot(y.to_f64());
        if r > cfg.radius {
            return Err(OracleError::Escaped);
        }
    }
}

fn polish_root(ys: &[Dd], mut lo: f64, mut hi: f64) -> Dd {
    // derivative series
    let dys: Vec<Dd> = ys
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| *c * Dd::from_f64(k as f64))
        .collect();
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let f_lo = eval_series(ys, Dd::from_f64(lo)).to_f64();
        let f_mid = eval_series(ys, Dd::from_f64(mid)).to_f64();
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Newton in extended precision to push the residual to the Dd floor
    let mut t = Dd::from_f64(0.5 * (lo + hi));
    for _ in 0..8 {
        let f = eval_series(ys, t);
        let d = eval_series(&dys, t);
        if d.to_f64() == 0.0 {
            break;
        }
        t = t - f / d;
    }
    t
}

// ---------------------------------------------------------------------------
// Displacement fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_max: f64,
    pub rho: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_max: 1e-2, rho: 0.7, count: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct DisplacementFit {
    /// `(x_i, Delta(x_i))` samples on the geometric grid.
    pub samples: Vec<(f64, f64)>,
    pub fitted_order: Option<u32>,
    pub coefficient: Option<f64>,
    pub residual: f64,
    pub center_consistent: bool,
}

impl DisplacementFit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,delta\n");
        for (x, d) in &self.samples {
            s.push_str(&format!("{x:.17e},{d:.17e}\n"));
        }
        s
    }
}

fn f64_to_rational(v: f64) -> Rational {
    use num_traits::FromPrimitive;
    Rational::from_f64(v).expect("finite float")
}

/// Sample `Delta` on a geometric grid and fit the leading order and
/// coefficient. Grid points integrate independently and concurrently;
/// results merge by grid index.
pub fn fit_displacement(
    system: &PiecewiseSystem,
    grid: GridSpec,
    cfg: &OracleConfig,
) -> Result<DisplacementFit, OracleError> {
    if grid.count < 8 {
        return Err(OracleError::GridTooSmall(grid.count));
    }
    let xs: Vec<f64> = (0..grid.count).map(|i| grid.x_max * grid.rho.powi(i as i32)).collect();
    let deltas: Vec<Result<(f64, f64), OracleError>> = xs
        .par_iter()
        .map(|&x| {
            let xr = f64_to_rational(x);
            let up = half_return(system, &xr, HalfMap::UpperForward, cfg)?;
            let lo = half_return(system, &xr, HalfMap::LowerInverse, cfg)?;
            // Delta(x) = (Pi-)^{-1}(x) - Pi+(x)
            Ok((x, (lo.exit_x - up.exit_x).to_f64()))
        })
        .collect();
    let mut samples = Vec::with_capacity(xs.len());
    for d in deltas {
        samples.push(d?);
    }
    // center consistency: every sample below the integration noise floor
    let floor = cfg.tol * 1e6;
    if samples.iter().all(|(_, d)| d.abs() < floor.max(1e-18)) {
        return Ok(DisplacementFit {
            samples,
            fitted_order: None,
            coefficient: None,
            residual: 0.0,
            center_consistent: true,
        });
    }
    // log-log slope from successive ratios, using the cleaner large-x half
    let mut slopes = Vec::new();
    for w in samples.windows(2) {
        let (x1, d1) = w[0];
        let (x2, d2) = w[1];
        if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
            continue;
        }
        slopes.push((d2 / d1).ln() / (x2 / x1).ln());
    }
    if slopes.is_empty() {
        return Err(OracleError::OrderAmbiguous(f64::NAN));
    }
    let m_est = slopes[..slopes.len().min(4)].iter().sum::<f64>() / slopes.len().min(4) as f64;
    let m = m_est.round();
    if (m_est - m).abs() > 0.1 || m < 1.0 {
        return Err(OracleError::OrderAmbiguous(m_est));
    }
    let m = m as u32;
    // Richardson extrapolation of Delta/x^m along the geometric grid
    let cs: Vec<f64> = samples.iter().map(|(x, d)| d / x.powi(m as i32)).collect();
    let extrap = |i: usize| -> f64 {
        let (c0, c1) = (cs[i], cs[i + 1]);
        c1 - grid.rho * (c0 - c1) / (1.0 - grid.rho)
    };
    let last = extrap(cs.len() - 2);
    let prev = extrap(cs.len() - 3);
    let coeff = last;
    let residual = (last - prev).abs();
    Ok(DisplacementFit {
        samples,
        fitted_order: Some(m),
        coefficient: Some(coeff),
        residual,
        center_consistent: false,
    })
}

// ---------------------------------------------------------------------------
// Comparison with the symbolic path
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok { order: u32, fitted: f64, symbolic: f64 },
    CenterConsistent,
    Mismatch { detail: String },
}

/// Compare a displacement fit against the symbolic first nonzero constant.
pub fn compare_with_symbolic(fit: &DisplacementFit, analysis: &Analysis) -> Verdict {
    let sym_order = focus_order(&analysis.seq);
    match (&sym_order, fit.center_consistent) {
        (FocusOrder::CenterUpToOrder(_), true) => return Verdict::CenterConsistent,
        (FocusOrder::CenterUpToOrder(n), false) => {
            if let Some(m) = fit.fitted_order {
                if m > *n + 1 {
                    // first constant beyond the computed range; nothing to compare
                    return Verdict::CenterConsistent;
                }
            }
            return Verdict::Mismatch {
                detail: format!(
                    "symbolic center up to order {n} but the fit found order {:?} with coefficient {:?}",
                    fit.fitted_order, fit.coefficient
                ),
            };
        }
        (FocusOrder::ParameterDependent(_), _) => {
            return Verdict::Mismatch { detail: "symbolic order is parameter-dependent".into() }
        }
        (FocusOrder::Order(_), true) => {
            return Verdict::Mismatch {
                detail: "fit is center-consistent but the symbolic path found a nonzero constant"
                    .into(),
            }
        }
        (FocusOrder::Order(_), false) => {}
    }
    let entry = analysis.seq.first_nonzero().expect("order implies a nonzero entry");
    let k = entry.k;
    let (Some(m), Some(vhat)) = (fit.fitted_order, fit.coefficient) else {
        return Verdict::Mismatch { detail: "fit did not produce an order".into() };
    };
    if m != k {
        return Verdict::Mismatch {
            detail: format!("first nonzero index differs: symbolic {k}, fitted {m}"),
        };
    }
    let reduced = entry
        .reduced
        .as_constant()
        .expect("numeric system yields constant reduced parts");
    let factor = match entry.factor.value() {
        Some(f) => f.to_f64(),
        None => {
            return Verdict::Mismatch {
                detail: format!("no numeric factor for k = {k} ({})", entry.factor.describe()),
            }
        }
    };
    let sym = rational_to_f64(&reduced) * factor;
    let tol = 0.02 * sym.abs() + 10.0 * fit.residual + 1e-12;
    if (vhat - sym).abs() <= tol {
        Verdict::Ok { order: k, fitted: vhat, symbolic: sym }
    } else {
        Verdict::Mismatch {
            detail: format!("V_{k}: fitted {vhat:.6e} vs symbolic {sym:.6e} (tolerance {tol:.2e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use crate::polyring::SymbolTable;

    fn rigid_rotation() -> PiecewiseSystem {
        PiecewiseSystem::from_toml_str(
            r#"
            [upper]
            X = "-y"
            Y = "x"
            [lower]
            X = "-y"
            Y = "x"
        "#,
        )
        .unwrap()
    }

    #[test]
    fn rigid_rotation_half_turn() {
        let sys = rigid_rotation();
        let cfg = OracleConfig::default();
        let r = half_return(&sys, &rat(1, 100), HalfMap::UpperForward, &cfg).unwrap();
        assert!((r.exit_x.to_f64() + 0.01).abs() < 1e-12, "exit {}", r.exit_x.to_f64());
        assert!(r.event_residual < 1e-20);
        let r = half_return(&sys, &rat(1, 100), HalfMap::LowerInverse, &cfg).unwrap();
        assert!((r.exit_x.to_f64() + 0.01).abs() < 1e-12);
    }

    #[test]
    fn outside_neighborhood_is_error() {
        let sys = rigid_rotation();
        let cfg = OracleConfig::default();
        assert!(matches!(
            half_return(&sys, &rat(10, 1), HalfMap::UpperForward, &cfg),
            Err(OracleError::OutsideNeighborhood(..))
        ));
    }

    fn pp_family(lam_num: i64, lam_den: i64) -> PiecewiseSystem {
        // printed orientation of the cubic tangency family (clockwise)
        let t = SymbolTable::new(&[]).unwrap();
        let x = MultiPoly::var_x(&t);
        let one = MultiPoly::one(&t);
        let lam = rat(lam_num, lam_den);
        let upper_y = (&x.checked_mul(&(&x.scale(&lam) + &one)).unwrap()).neg();
        let lower_y = x.checked_mul(&(&x - &one)).unwrap();
        PiecewiseSystem::new(t.clone(), (one.clone(), upper_y), (one.neg(), lower_y))
    }

    #[test]
    fn tangency_half_return_series() {
        // lower inverse map of the tangency family behaves like -x + O(x^2)
        let sys = pp_family(-2, 1);
        let cfg = OracleConfig::default();
        for x0 in [rat(1, 100), rat(1, 200)] {
            let r = half_return(&sys, &x0, HalfMap::LowerInverse, &cfg).unwrap();
            let x0f = rational_to_f64(&x0);
            let dev = (r.exit_x.to_f64() + x0f).abs();
            assert!(dev < 2.0 * x0f * x0f, "deviation {dev} at x0 = {x0f}");
        }
    }

    #[test]
    fn time_reversal_consistency() {
        // integrating the upper map forward, then the reversed field from the
        // exit point, recovers the start to 1e-10 relative
        let sys = pp_family(-2, 1);
        let cfg = OracleConfig::default();
        let x0 = rat(1, 100);
        let fwd = half_return(&sys, &x0, HalfMap::UpperForward, &cfg).unwrap();
        // reversed upper field = lower-inverse machinery applied to a system
        // whose "lower" is the negated upper field... simplest: flip time by
        // negating the fields and walking back from the exit point
        let t = sys.table().clone();
        let rev = PiecewiseSystem::new(
            t,
            (sys.upper.0.clone(), sys.upper.1.clone()),
            (sys.upper.0.clone(), sys.upper.1.clone()),
        );
        let back = half_return(
            &rev,
            &Rational::from_float(fwd.exit_x.to_f64()).unwrap(),
            HalfMap::LowerInverse,
            &cfg,
        )
        .unwrap();
        let rel = (back.exit_x.to_f64() - rational_to_f64(&x0)).abs() / rational_to_f64(&x0);
        assert!(rel < 1e-10, "relative defect {rel}");
    }

    #[test]
    fn displacement_fit_pp_family() {
        // lambda = -2: order 2 with coefficient 2/3 in the mirrored frame;
        // the printed frame fit sees the mirrored displacement sign
        let sys = pp_family(-2, 1);
        let analysis = crate::lyapunov::analyze(&sys, 4, Default::default()).unwrap();
        let fit = fit_displacement(
            &analysis.classification.normalized,
            GridSpec::default(),
            &OracleConfig::default(),
        )
        .unwrap();
        assert_eq!(fit.fitted_order, Some(2));
        let v = fit.coefficient.unwrap();
        assert!((v - 2.0 / 3.0).abs() < 0.02 * (2.0 / 3.0), "V2 fit {v}");
        match compare_with_symbolic(&fit, &analysis) {
            Verdict::Ok { .. } => {}
            other => panic!("expected agreement, got {other:?}"),
        }
    }

    #[test]
    fn displacement_fit_center_case() {
        let sys = pp_family(-1, 1);
        let analysis = crate::lyapunov::analyze(&sys, 4, Default::default()).unwrap();
        let fit = fit_displacement(
            &analysis.classification.normalized,
            GridSpec::default(),
            &OracleConfig::default(),
        )
        .unwrap();
        assert!(fit.center_consistent, "samples: {:?}", fit.samples);
        assert_eq!(compare_with_symbolic(&fit, &analysis), Verdict::CenterConsistent);
    }

    #[test]
    fn tolerance_scaling_keeps_fit_stable() {
        let sys = pp_family(-2, 1);
        let analysis = crate::lyapunov::analyze(&sys, 2, Default::default()).unwrap();
        let normalized = &analysis.classification.normalized;
        let cfg1 = OracleConfig::default();
        let mut cfg2 = OracleConfig::default();
        cfg2.tol *= 0.5;
        let f1 = fit_displacement(normalized, GridSpec::default(), &cfg1).unwrap();
        let f2 = fit_displacement(normalized, GridSpec::default(), &cfg2).unwrap();
        let (v1, v2) = (f1.coefficient.unwrap(), f2.coefficient.unwrap());
        assert!((v1 - v2).abs() <= f1.residual.max(1e-12), "{v1} vs {v2}");
    }
}
