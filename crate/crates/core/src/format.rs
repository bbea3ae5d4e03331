/// Formats `v` with `digits` significant digits in plain decimal notation,
/// trimming trailing zeros.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".to_string() } else { format!("{v}") };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let point = exp as usize + 1;
        if digits_only.len() <= point {
            out.push_str(&digits_only);
            out.push_str(&"0".repeat(point - digits_only.len()));
        } else {
            let (int, frac) = digits_only.split_at(point);
            let frac = frac.trim_end_matches('0');
            out.push_str(int);
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
    } else {
        let frac = format!("{}{}", "0".repeat((-exp - 1) as usize), digits_only);
        let frac = frac.trim_end_matches('0');
        out.push_str("0.");
        out.push_str(frac);
    }
    if out == "-0" {
        out = "0".to_string();
    }
    out
}

/// Ten significant digits, the precision used by every CSV export.
pub fn sig10(v: f64) -> String {
    sig(v, 10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_plain_decimals() {
        assert_eq!(sig10(0.125), "0.125");
        assert_eq!(sig10(2.0 / 3.0), "0.6666666667");
        assert_eq!(sig10(1.0), "1");
        assert_eq!(sig10(-2.0), "-2");
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(123456.0), "123456");
        assert_eq!(sig10(1.5e-5), "0.000015");
        assert_eq!(sig10(12345678901234.0), "12345678900000");
        assert_eq!(sig10(0.36125), "0.36125");
    }
}
