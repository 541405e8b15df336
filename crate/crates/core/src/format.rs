//! Fixed-precision number formatting shared by every file writer.

/// Significant digits used for all floating-point output.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with [`SIG_DIGITS`] significant digits.
///
/// Plain decimal notation is used for magnitudes in `[1e-5, 1e15)`, scientific
/// notation otherwise. Output is deterministic for a given bit pattern.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // formatting may round up into the next decade (9.99.. -> 10.0..)
        trim_zeros(s)
    } else {
        let s = format!("{:.*e}", SIG_DIGITS - 1, x);
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim_zeros(m.to_string()), e),
            None => s,
        }
    }
}

/// Rounds `x` to [`SIG_DIGITS`] significant digits, for values that are later
/// serialized by serde.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t.is_empty() || t == "-" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig(0.1234567890123456), "0.123456789012");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(-2.5), "-2.5");
        assert_eq!(sig(123456.0), "123456");
        assert_eq!(sig(1.0e-9), "1e-9");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn round_trip_is_close() {
        for &x in &[std::f64::consts::PI, 1.0e-12 / 3.0, 7.0e20 / 3.0, -0.3] {
            let y: f64 = sig(x).parse().unwrap();
            assert!((x - y).abs() <= 1e-11 * x.abs());
            assert_eq!(round_sig(x), y);
        }
    }
}
