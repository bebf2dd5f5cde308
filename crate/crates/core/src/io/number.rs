/// Formats `x` with nine significant digits, `%.9g` style: fixed notation
/// for decimal exponents in `[-5, 9)`, scientific otherwise, trailing zeros
/// removed. Independent of locale.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
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
    fn examples() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(300.0), "300");
        assert_eq!(format_sig9(309.9101607135494), "309.910161");
        assert_eq!(format_sig9(3.0e6), "3000000");
        assert_eq!(format_sig9(1.0e-4), "0.0001");
        assert_eq!(format_sig9(1.160703994e-6), "1.16070399e-06");
        assert_eq!(format_sig9(-2.5e12), "-2.5e+12");
        assert_eq!(format_sig9(999999999.6), "1e+09");
        assert_eq!(format_sig9(0.1 + 0.2), "0.3");
    }

    proptest! {
        #[test]
        fn round_trips_to_nine_digits(x in prop::num::f64::NORMAL) {
            let s = format_sig9(x);
            let y: f64 = s.parse().unwrap();
            prop_assert!(((y - x) / x).abs() <= 5e-9, "{x} -> {s}");
            // Reformatting is a fixed point.
            prop_assert_eq!(format_sig9(y), s);
        }
    }
}
