//! Exact rational helpers shared by the cost model, flow graphs and reports.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn from_usize(v: usize) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn to_f64(r: &Rational) -> f64 {
    // ratio of two big integers; fine for the magnitudes we print
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact conversion of a finite double.
pub fn from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

/// Round half away from zero to `decimals` decimal places, exactly.
pub fn round_half_up(r: &Rational, decimals: u32) -> Rational {
    let scale = Rational::from_integer(BigInt::from(10u32).pow(decimals));
    let half = rat(1, 2);
    let scaled = r.abs() * &scale + half;
    let rounded = scaled.floor() / scale;
    if r.is_negative() {
        -rounded
    } else {
        rounded
    }
}

/// Fixed-point decimal string with `decimals` places, half-up rounding.
pub fn format_fixed(r: &Rational, decimals: u32) -> String {
    let rounded = round_half_up(r, decimals);
    let neg = rounded.is_negative();
    let scaled = (rounded.abs() * Rational::from_integer(BigInt::from(10u32).pow(decimals))).to_integer();
    let digits = scaled.to_string();
    let body = if decimals == 0 {
        digits
    } else {
        let d = decimals as usize;
        let padded = format!("{:0>width$}", digits, width = d + 1);
        let (ip, fp) = padded.split_at(padded.len() - d);
        format!("{ip}.{fp}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Decimal string with `sig` significant digits (half-up), no exponent.
pub fn format_sig(r: &Rational, sig: u32) -> String {
    if r.is_zero() {
        return format_fixed(r, sig.saturating_sub(1));
    }
    // find e with 10^e <= |r| < 10^(e+1)
    let a = r.abs();
    let ten = int(10);
    let mut e: i32 = 0;
    let mut p = Rational::one();
    while p > a {
        p /= &ten;
        e -= 1;
    }
    while &p * &ten <= a {
        p *= &ten;
        e += 1;
    }
    let decimals = (sig as i32 - 1 - e).max(0) as u32;
    let s = format_fixed(r, decimals);
    // rounding can carry into a new digit (9.99.. -> 10.0); trim one place then
    let digit_count = s.chars().filter(|c| c.is_ascii_digit()).count() as u32;
    let leading_zeros = s.trim_start_matches('-').chars().take_while(|c| *c == '0' || *c == '.').filter(|c| *c == '0').count() as u32;
    if digit_count - leading_zeros > sig && decimals > 0 {
        format_fixed(r, decimals - 1)
    } else {
        s
    }
}

pub fn lcm_range(m: u64) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, i| acc.lcm(&BigInt::from(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding_matches_table_values() {
        assert_eq!(format_fixed(&rat(35, 4), 1), "8.8");
        assert_eq!(format_fixed(&rat(39, 8), 1), "4.9");
        assert_eq!(format_fixed(&rat(72, 41), 1), "1.8");
        assert_eq!(format_fixed(&rat(75, 44), 1), "1.7");
        assert_eq!(format_fixed(&rat(36, 5), 1), "7.2");
        assert_eq!(format_fixed(&int(32), 1), "32.0");
        assert_eq!(format_fixed(&rat(-1, 20), 1), "-0.1");
        assert_eq!(format_fixed(&rat(1, 3), 0), "0");
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(&rat(63, 32), 12), "1.96875000000");
        assert_eq!(format_sig(&rat(48, 17), 12), "2.82352941176");
        assert_eq!(format_sig(&int(32), 12), "32.0000000000");
        assert_eq!(format_sig(&rat(1, 8), 3), "0.125");
        assert_eq!(format_sig(&rat(9999, 1000), 3), "10.0");
        assert_eq!(format_sig(&Rational::zero(), 3), "0.00");
    }

    #[test]
    fn lcm_small() {
        assert_eq!(lcm_range(4), BigInt::from(12));
        assert_eq!(lcm_range(10), BigInt::from(2520));
    }
}
