//! Exact computer algebra for planar piecewise-smooth polynomial systems with
//! switching line `y = 0`.
//!
//! The crate reduces a piecewise system with a monodromic origin of
//! focus-focus (FF), focus-parabolic (FP) or parabolic-parabolic (PP) type to
//! its normal form, computes Lyapunov constants of any order with symbolic
//! parameters, decides focus order and center-of-truncation conditions, and
//! cross-validates every symbolic result against an independent numeric
//! half-return-map oracle.
//!
//! Module map:
//! - [`exactnum`]: big rationals, the `pi`/`e^(g*pi)` extension ring, certified
//!   interval evaluation
//! - [`polyring`]: exact multivariate polynomials, quasi-homogeneous grading,
//!   reduction modulo an ideal (Buchberger at desk scale)
//! - [`bell`]: ordinary Bell polynomials
//! - [`trigexp`]: exact algebra of `tau^p e^(a tau) sin/cos(b tau)` closed
//!   under product and antidifferentiation
//! - [`sysmodel`]: input parsing, classification FF/FP/PP, orientation
//!   normalization
//! - [`nf_focus`]: order-by-order reduction of a focus side
//! - [`nf_tangency`]: order-by-order reduction of an invisible-tangency side,
//!   plus the coupled upper reduction used for PP
//! - [`lyapunov`]: Lyapunov sequences, focus order, order-set constraints,
//!   symbolic half-return maps and the two-path cross-check
//! - [`oracle`]: numeric integration of half-return maps and displacement fits

pub mod bell;
pub mod exactnum;
pub mod lyapunov;
pub mod nf_focus;
pub mod nf_tangency;
pub mod oracle;
pub mod polyring;
pub mod sysmodel;
pub mod trigexp;

pub use exactnum::Rational;
