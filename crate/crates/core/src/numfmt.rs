//! `%g`-style float formatting with a fixed number of significant digits.

/// Formats `x` like C's `printf("%.{sig}g", x)`.
///
/// Non-finite values print as `inf`, `-inf` and `nan`.
pub fn format_g(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_g;

    #[test]
    fn matches_printf() {
        let cases = [
            (1.0, 9, "1"),
            (0.1, 9, "0.1"),
            (-0.001, 9, "-0.001"),
            (1e-5, 9, "1e-05"),
            (123456789.0, 9, "123456789"),
            (1234567890.0, 9, "1.23456789e+09"),
            (0.1 + 0.2, 17, "0.30000000000000004"),
            (2.5e-10, 17, "2.5000000000000002e-10"),
            (1e100, 17, "1e+100"),
            (0.0001, 9, "0.0001"),
            (0.5, 1, "0.5"),
        ];
        for (x, sig, want) in cases {
            assert_eq!(format_g(x, sig), want, "{x} at {sig}");
        }
        assert_eq!(format_g(f64::INFINITY, 9), "inf");
        assert_eq!(format_g(0.0, 9), "0");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02214076e23, 1e-300, -7.25] {
            assert_eq!(format_g(x, 17).parse::<f64>().unwrap(), x);
        }
    }
}
