//! Number formatting shared by every CSV writer.

/// Formats `value` with 17 significant digits in the style of C's `%.17g`:
/// trailing zeros are stripped, and scientific notation is used when the
/// decimal exponent is below -4 or at least 17.
///
/// Seventeen significant digits are enough for any `f64` to parse back to
/// the identical bit pattern.
pub fn format_g17(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if value == 0.0 {
        return if value.is_sign_negative() { "-0" } else { "0" }.to_string();
    }

    let sci = format!("{:.16e}", value);
    let (mantissa, exponent) = sci.split_once('e').expect("`e` formatting has an exponent");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");

    if !(-4..17).contains(&exponent) {
        let mantissa = strip_trailing_zeros(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exponent.abs());
    }

    let decimals = (16 - exponent) as usize;
    let fixed = format!("{:.*}", decimals, value);
    strip_trailing_zeros(&fixed).to_string()
}

fn strip_trailing_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integers_and_simple_fractions() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(2.0), "2");
        assert_eq!(format_g17(-3.5), "-3.5");
        assert_eq!(format_g17(38000.0), "38000");
        assert_eq!(format_g17(0.5), "0.5");
    }

    #[test]
    fn seventeen_digits_expose_binary_representation() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(0.3), "0.29999999999999999");
    }

    #[test]
    fn switches_to_scientific_outside_range() {
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(0.0001), "0.0001");
        assert_eq!(format_g17(1e16), "10000000000000000");
    }

    proptest! {
        #[test]
        fn round_trips_bit_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let s = format_g17(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
