//! Ordinary Bell polynomials.
//!
//! `bell(k, i, v)` is the coefficient of `t^k` in `(sum_j v_j t^j)^i`, the
//! combination rule behind every series composition in the return-map
//! expansions. It is computed by coefficient extraction from repeated
//! truncated products; the definition-level partition sum lives in the tests
//! as the independent oracle.
//!
//! The computation is generic over the coefficient ring so the same code runs
//! on rationals, parameter polynomials and trig-exponential functions.

use crate::exactnum::Rational;
use crate::polyring::{MultiPoly, SymbolTable};
use num_traits::Zero;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BellError {
    #[error("bell({k},{i}) needs {need} arguments, got {got}")]
    InsufficientArgs { k: u32, i: u32, need: usize, got: usize },
    #[error("bell requires k >= i >= 1, got k={0}, i={1}")]
    BadIndices(u32, u32),
}

/// Minimal ring interface for the series arithmetic.
pub trait RingElem: Clone {
    fn ring_zero(&self) -> Self;
    fn ring_one(&self) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn is_ring_zero(&self) -> bool;
}

impl RingElem for Rational {
    fn ring_zero(&self) -> Self {
        Rational::zero()
    }
    fn ring_one(&self) -> Self {
        Rational::from_integer(1.into())
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn is_ring_zero(&self) -> bool {
        self.is_zero()
    }
}

impl RingElem for MultiPoly {
    fn ring_zero(&self) -> Self {
        MultiPoly::zero(self.table())
    }
    fn ring_one(&self) -> Self {
        MultiPoly::one(self.table())
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.checked_add(other).expect("table mismatch")
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self.checked_mul(other).expect("table mismatch")
    }
    fn is_ring_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Coefficient of `t^k` in `(v_1 t + v_2 t^2 + ...)^i`.
///
/// `args[j-1]` is `v_j`; at least `k - i + 1` arguments are required (higher
/// ones cannot contribute).
pub fn bell<R: RingElem>(k: u32, i: u32, args: &[R]) -> Result<R, BellError> {
    if i < 1 || k < i {
        return Err(BellError::BadIndices(k, i));
    }
    let need = (k - i + 1) as usize;
    if args.len() < need {
        return Err(BellError::InsufficientArgs { k, i, need, got: args.len() });
    }
    let proto = &args[0];
    let k = k as usize;
    // series coefficients s[0..=k], s[j] = v_j (s[0] = 0)
    let mut series: Vec<R> = vec![proto.ring_zero(); k + 1];
    for (j, v) in args.iter().enumerate().take(k) {
        series[j + 1] = v.clone();
    }
    let mut acc: Vec<R> = vec![proto.ring_zero(); k + 1];
    acc[0] = proto.ring_one();
    for _ in 0..i {
        let mut next: Vec<R> = vec![proto.ring_zero(); k + 1];
        for d1 in 0..=k {
            if acc[d1].is_ring_zero() {
                continue;
            }
            for d2 in 1..=(k - d1) {
                if series[d2].is_ring_zero() {
                    continue;
                }
                let t = acc[d1].mul_ref(&series[d2]);
                next[d1 + d2] = next[d1 + d2].add_ref(&t);
            }
        }
        acc = next;
    }
    Ok(acc[k].clone())
}

/// Memoized table of the abstract polynomials `bell(k, i)` in symbols
/// `v1..v_{k-i+1}`.
pub struct BellTable {
    table: Arc<SymbolTable>,
    memo: Mutex<HashMap<(u32, u32), MultiPoly>>,
    max_args: usize,
}

impl BellTable {
    /// Table supporting indices with `k - i + 1 <= max_args`.
    pub fn new(max_args: usize) -> Self {
        let names: Vec<String> = (1..=max_args).map(|j| format!("v{j}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let table = SymbolTable::new(&refs).expect("within symbol limit");
        BellTable { table, memo: Mutex::new(HashMap::new()), max_args }
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn get(&self, k: u32, i: u32) -> Result<MultiPoly, BellError> {
        if i < 1 || k < i {
            return Err(BellError::BadIndices(k, i));
        }
        let need = (k - i + 1) as usize;
        if need > self.max_args {
            return Err(BellError::InsufficientArgs { k, i, need, got: self.max_args });
        }
        if let Some(p) = self.memo.lock().unwrap().get(&(k, i)) {
            return Ok(p.clone());
        }
        let args: Vec<MultiPoly> = (0..need).map(|j| MultiPoly::var(&self.table, j)).collect();
        let p = bell(k, i, &args)?;
        self.memo.lock().unwrap().insert((k, i), p.clone());
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, rat_int};
    use num_traits::One;
    use rand::{Rng, SeedableRng};

    /// Definition-level oracle: sum over (k-i+1)-tuples of nonnegative
    /// integers with sum j*b_j = k and sum b_j = i of
    /// i!/(b_1! ... b_m!) * prod v_j^{b_j}.
    fn bell_partition_oracle(k: u32, i: u32, args: &[Rational]) -> Rational {
        let m = (k - i + 1) as usize;
        let mut total = Rational::zero();
        let mut tuple = vec![0u32; m];
        fn rec(
            j: usize,
            rem_weight: i64,
            rem_count: i64,
            tuple: &mut Vec<u32>,
            m: usize,
            i: u32,
            args: &[Rational],
            total: &mut Rational,
        ) {
            if j == m {
                if rem_weight == 0 && rem_count == 0 {
                    let mut coef = Rational::one();
                    for f in 2..=i as i64 {
                        coef *= rat_int(f);
                    }
                    let mut term = coef;
                    for (idx, &b) in tuple.iter().enumerate() {
                        let mut fact = Rational::one();
                        for f in 2..=b as i64 {
                            fact *= rat_int(f);
                        }
                        term /= fact;
                        for _ in 0..b {
                            term *= &args[idx];
                        }
                    }
                    *total += term;
                }
                return;
            }
            let w = (j + 1) as i64;
            let mut b = 0i64;
            while b * w <= rem_weight && b <= rem_count {
                tuple[j] = b as u32;
                rec(j + 1, rem_weight - b * w, rem_count - b, tuple, m, i, args, total);
                b += 1;
            }
            tuple[j] = 0;
        }
        rec(0, k as i64, i as i64, &mut tuple, m, i, args, &mut total);
        total
    }

    #[test]
    fn boundary_cases_match_identities() {
        let bt = BellTable::new(13);
        // bell(k,k) = v1^k
        let p = bt.get(3, 3).unwrap();
        let v1 = MultiPoly::var(bt.symbols(), 0);
        assert_eq!(p, v1.pow_trunc(3, None).unwrap());
        // bell(k,1) = v_k
        let p = bt.get(5, 1).unwrap();
        assert_eq!(p, MultiPoly::var(bt.symbols(), 4));
    }

    #[test]
    fn small_values_against_expansion() {
        let bt = BellTable::new(13);
        let v: Vec<MultiPoly> = (0..4).map(|j| MultiPoly::var(bt.symbols(), j)).collect();
        // bell(3,2) = 2 v1 v2
        let b32 = bt.get(3, 2).unwrap();
        assert_eq!(b32, (&v[0] * &v[1]).scale(&rat_int(2)));
        // bell(4,2) = 2 v1 v3 + v2^2
        let b42 = bt.get(4, 2).unwrap();
        let expect = &(&v[0] * &v[2]).scale(&rat_int(2)) + &(&v[1] * &v[1]);
        assert_eq!(b42, expect);
    }

    #[test]
    fn insufficient_args_is_error() {
        let one = Rational::one();
        assert!(matches!(
            bell(3, 2, &[one.clone()]),
            Err(BellError::InsufficientArgs { .. })
        ));
    }

    #[test]
    fn matches_partition_oracle_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for k in 1..=9u32 {
            for i in 1..=k {
                let need = (k - i + 1) as usize;
                let args: Vec<Rational> =
                    (0..need).map(|_| rat(rng.gen_range(-5..6), rng.gen_range(1..4))).collect();
                let ours = bell(k, i, &args).unwrap();
                let oracle = bell_partition_oracle(k, i, &args);
                assert_eq!(ours, oracle, "bell({k},{i}) disagrees with partition sum");
            }
        }
    }

    #[test]
    fn generating_function_identity() {
        // (sum v_j x^j)^n = sum_i bell(i, n, ...) x^i for random rational v
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4u32 {
            let v: Vec<Rational> =
                (0..6).map(|_| rat(rng.gen_range(-4..5), rng.gen_range(1..4))).collect();
            // series power, truncated at degree 10
            let deg = 10usize;
            let mut series = vec![Rational::zero(); deg + 1];
            for (j, vj) in v.iter().enumerate() {
                if j + 1 <= deg {
                    series[j + 1] = vj.clone();
                }
            }
            let mut acc = vec![Rational::zero(); deg + 1];
            acc[0] = Rational::one();
            for _ in 0..n {
                let mut next = vec![Rational::zero(); deg + 1];
                for d1 in 0..=deg {
                    for d2 in 0..=(deg - d1) {
                        if !acc[d1].is_zero() && !series[d2].is_zero() {
                            let t = &acc[d1] * &series[d2];
                            next[d1 + d2] += t;
                        }
                    }
                }
                acc = next;
            }
            for i in (n as usize)..=deg {
                let need = i - n as usize + 1;
                let args = &v[..need.min(v.len())];
                if args.len() < need {
                    continue;
                }
                let b = bell(i as u32, n, args).unwrap();
                assert_eq!(b, acc[i], "generating identity failed at i={i}, n={n}");
            }
        }
    }

    #[test]
    fn scaling_law() {
        // bell(k,i)(c v1, ..., c vm) = c^i bell(k,i)(v1, ..., vm)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rng.gen_range(2..9u32);
            let i = rng.gen_range(1..=k);
            let need = (k - i + 1) as usize;
            let c = rat(rng.gen_range(1..5), rng.gen_range(1..4));
            let v: Vec<Rational> =
                (0..need).map(|_| rat(rng.gen_range(-4..5), rng.gen_range(1..4))).collect();
            let scaled: Vec<Rational> = v.iter().map(|x| x * &c).collect();
            let lhs = bell(k, i, &scaled).unwrap();
            let mut ci = Rational::one();
            for _ in 0..i {
                ci *= &c;
            }
            let rhs = bell(k, i, &v).unwrap() * ci;
            assert_eq!(lhs, rhs);
        }
    }
}
