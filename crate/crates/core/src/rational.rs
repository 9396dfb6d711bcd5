//! Small helpers around `BigRational`: parsing, float conversion and logs.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse `{0}` as a rational number")]
pub struct ParseRationalError(pub String);

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Parses `p/q`, an integer, or a finite decimal like `0.125`, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("0{whole}{frac}").parse().map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(digits, den);
    Ok(if neg { -v } else { v })
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn rationalize(x: f64, max_den: u64) -> Option<BigRational> {
    if !x.is_finite() || max_den == 0 {
        return None;
    }
    let exact = BigRational::from_float(x)?;
    let neg = exact.is_negative();
    let target = exact.abs();
    // convergents h/k
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rem = target.clone();
    let cap = BigInt::from(max_den);
    loop {
        let a = rem.floor().to_integer();
        let k2 = &a * &k1 + &k0;
        if k2 > cap {
            // largest semiconvergent that still fits
            let t = (&cap - &k0) / &k1;
            let cand_h = &t * &h1 + &h0;
            let cand_k = &t * &k1 + &k0;
            let semi = BigRational::new(cand_h, cand_k);
            let conv = BigRational::new(h1.clone(), k1.clone());
            let best = if (&semi - &target).abs() < (&conv - &target).abs() { semi } else { conv };
            return Some(if neg { -best } else { best });
        }
        let h2 = &a * &h1 + &h0;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = &rem - BigRational::from_integer(a);
        if frac.is_zero() {
            let v = BigRational::new(h1, k1);
            return Some(if neg { -v } else { v });
        }
        rem = frac.recip();
    }
}

/// Nearest `f64`, correct even when numerator and denominator overflow `f64`.
pub fn to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let l = ln_abs(x);
    let s = if x.is_negative() { -1.0 } else { 1.0 };
    s * l.exp()
}

/// Natural log of |x| for x ≠ 0, stable for huge or tiny rationals.
pub fn ln_abs(x: &BigRational) -> f64 {
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ceil_to_biguint(x: &BigRational) -> BigUint {
    let c = x.ceil().to_integer();
    match c.sign() {
        Sign::Minus => BigUint::zero(),
        _ => c.magnitude().clone(),
    }
}

/// Least k ≥ 0 with r^k ≥ target, by exact powering; r must exceed 1.
pub fn least_power_at_least(r: &BigRational, target: &BigRational) -> u64 {
    assert!(r > &BigRational::one());
    let mut k = 0u64;
    let mut p = BigRational::one();
    while &p < target {
        p *= r;
        k += 1;
    }
    k
}

pub fn lcm_all(values: impl IntoIterator<Item = u64>) -> BigUint {
    values.into_iter().fold(BigUint::one(), |acc, v| acc.lcm(&BigUint::from(v)))
}

/// `num/den` with the sign on the numerator.
pub fn fmt_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}
