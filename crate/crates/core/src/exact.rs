//! Exact rational arithmetic for weights, fractions and charges.
//!
//! Configuration values arrive as `f64` (JSON, CSV, CLI flags). They are
//! converted through their shortest round-trip decimal form, so `0.1` becomes
//! exactly `1/10` rather than the nearest binary fraction. Everything
//! downstream stays rational until it is displayed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Rational value of the decimal literal `f64` displays as.
///
/// Returns `None` for NaN and infinities.
pub fn from_f64(value: f64) -> Option<Rational> {
    if !value.is_finite() {
        return None;
    }
    // `Display` for f64 never uses exponent notation and prints the shortest
    // string that round-trips.
    parse_decimal(&value.to_string())
}

/// Parses `[-+]digits[.digits][e[-+]digits]` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

pub fn int<T: Into<BigInt>>(value: T) -> Rational {
    Rational::from_integer(value.into())
}

pub fn ratio<T: Into<BigInt>, U: Into<BigInt>>(numer: T, denom: U) -> Rational {
    Rational::new(numer.into(), denom.into())
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Nearest `f64`; NaN if the value is not representable.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Smallest integer not below `value`, as a `u64`.
pub fn ceil_u64(value: &Rational) -> Option<u64> {
    value.ceil().to_integer().to_u64()
}

/// Rounds half away from zero to the nearest integer.
pub fn round_integer(value: &Rational) -> BigInt {
    value.round().to_integer()
}

pub fn is_negative(value: &Rational) -> bool {
    value.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(from_f64(0.1).unwrap(), ratio(1, 10));
        assert_eq!(from_f64(465.6).unwrap(), ratio(2328, 5));
        assert_eq!(from_f64(9.7e12).unwrap(), int(9_700_000_000_000u64));
        assert_eq!(from_f64(-0.006).unwrap(), ratio(-6, 1000));
        assert_eq!(from_f64(0.0).unwrap(), zero());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(from_f64(f64::NAN).is_none());
        assert!(from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn parses_exponents_and_signs() {
        assert_eq!(parse_decimal("1.5e12").unwrap(), int(1_500_000_000_000u64));
        assert_eq!(parse_decimal("+2.5E-1").unwrap(), ratio(1, 4));
        assert_eq!(parse_decimal(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_decimal("3.").unwrap(), int(3));
        assert!(parse_decimal("").is_none());
        assert!(parse_decimal(".").is_none());
        assert!(parse_decimal("1,5").is_none());
        assert!(parse_decimal("abc").is_none());
    }

    #[test]
    fn tiny_and_huge_values_round_trip() {
        for v in [1e-300, 3.7e-9, 1.0e21, 1.7976931348623157e308] {
            assert_eq!(to_f64(&from_f64(v).unwrap()), v);
        }
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(ceil_u64(&ratio(81, 80)), Some(2));
        assert_eq!(ceil_u64(&int(3)), Some(3));
        assert_eq!(round_integer(&ratio(2328, 5)), BigInt::from(466));
        assert_eq!(round_integer(&ratio(5, 2)), BigInt::from(3));
    }
}
