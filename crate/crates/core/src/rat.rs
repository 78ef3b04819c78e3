//! Exact rational cycle arithmetic.
//!
//! Cycle counts and port loads are kept as rationals end to end so that
//! throughput identities (e.g. a 1/3 cy/instr reciprocal throughput) hold
//! exactly instead of within a float tolerance.

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

/// Rational number of cycles (or cycles/iteration).
pub type Rat = Rational64;

/// Build a rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

/// Build a rational from numerator/denominator.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

/// Parse a non-negative decimal literal (`"1"`, `"2.5"`, `"0.25"`) into an
/// exact rational. Returns `None` for anything else.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() || s.starts_with('-') || s.starts_with('+') {
        return None;
    }
    match s.split_once('.') {
        None => s.parse::<i64>().ok().map(Rat::from_integer),
        Some((int, frac)) => {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
            let num: i64 = frac.parse().ok()?;
            let den = 10i64.checked_pow(frac.len() as u32)?;
            Some(Rat::from_integer(int) + Rat::new(num, den))
        }
    }
}

/// Render a rational as a decimal if it terminates, else `n/d`.
pub fn display(r: Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    // Terminating decimal iff the reduced denominator is 2^a * 5^b.
    let mut d = *r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let digits = twos.max(fives);
    if d != 1 || digits > 15 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let pow10 = 10i64.pow(digits);
    let scaled = (r * Rat::from_integer(pow10)).to_integer();
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = scaled.abs();
    format!(
        "{sign}{}.{:0>width$}",
        abs / pow10,
        abs % pow10,
        width = digits as usize
    )
}

/// Lossy conversion for report output.
pub fn to_f64(r: Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Maximum of two rationals, `None`-safe zero default.
pub fn max(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// True if `r` is zero.
pub fn is_zero(r: Rat) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("2.5"), Some(ratio(5, 2)));
        assert_eq!(parse_decimal("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_decimal("16"), Some(rat(16)));
        assert_eq!(parse_decimal(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_decimal("-1"), None);
        assert_eq!(parse_decimal("x"), None);
    }

    #[test]
    fn displays_terminating_decimals() {
        assert_eq!(display(ratio(5, 2)), "2.5");
        assert_eq!(display(rat(4)), "4");
        assert_eq!(display(ratio(1, 3)), "1/3");
        assert_eq!(display(ratio(-3, 2)), "-1.5");
    }
}
