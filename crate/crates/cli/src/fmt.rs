//! Numeric output formatting.
//!
//! All probabilities and expectations printed by the CLI go through
//! [`fmt_sig`], which renders twelve significant digits and then trims
//! trailing zeros. Plain decimal notation is used for comfortable
//! exponents and scientific notation outside that range, so output is
//! compact, stable across runs, and easy to diff.

/// Significant digits carried by every printed value.
const SIG: usize = 12;

/// Format `x` with twelve significant digits, trailing zeros trimmed.
///
/// Values with decimal exponent in `[-4, 11]` print in plain notation
/// (`0.0078125`, `8.37394637463`); anything smaller or larger switches to
/// scientific notation (`1e-7`, `1.23456789012e14`). Zero prints as `0`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round to twelve significant digits in scientific form first; the
    // exponent decides which notation to emit.
    let sci = format!("{:.*e}", SIG - 1, x);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific form has an exponent");
    let exp: i32 = exp.parse().expect("scientific exponent is an integer");
    if !(-4..SIG as i32).contains(&exp) {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (SIG as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let trimmed = s.trim_end_matches('0');
    trimmed.strip_suffix('.').unwrap_or(trimmed).to_string()
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn integers_drop_the_fraction() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-3.0), "-3");
        assert_eq!(fmt_sig(100.0), "100");
    }

    #[test]
    fn short_fractions_are_untouched() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(0.0078125), "0.0078125");
    }

    #[test]
    fn long_fractions_carry_twelve_significant_digits() {
        assert_eq!(fmt_sig(0.9956142105143324), "0.995614210514");
        assert_eq!(fmt_sig(8.373946374629435), "8.37394637463");
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn extreme_exponents_use_scientific_notation() {
        assert_eq!(fmt_sig(1e-7), "1e-7");
        assert_eq!(fmt_sig(2.5e-5), "2.5e-5");
        assert_eq!(fmt_sig(1e15), "1e15");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e14");
    }

    #[test]
    fn boundary_exponents_stay_plain() {
        assert_eq!(fmt_sig(1e-4), "0.0001");
        assert_eq!(fmt_sig(99999999999.9), "99999999999.9");
    }

    #[test]
    fn rounding_carries_across_the_point() {
        assert_eq!(fmt_sig(0.999999999999949), "1");
    }

    #[test]
    fn non_finite_values_print_their_names() {
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }
}
