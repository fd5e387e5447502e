//! Hexadecimal floating point text (`0x1.8p+1`) for bit-exact weight storage.

const MANTISSA_BITS: u32 = 52;
const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;
const EXP_BIAS: i64 = 1023;

/// Formats `value` like C's `%a`, with trailing zero nibbles removed.
pub fn format(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    let sign = if value.is_sign_negative() { "-" } else { "" };
    if value.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = value.to_bits();
    let raw_exp = ((bits >> MANTISSA_BITS) & 0x7ff) as i64;
    let mantissa = bits & MANTISSA_MASK;
    if raw_exp == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if raw_exp == 0 { (0, 1 - EXP_BIAS) } else { (1, raw_exp - EXP_BIAS) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let exp_sign = if exp < 0 { '-' } else { '+' };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{exp_sign}{}", exp.abs())
    }
}

/// Parses text produced by [`format`]. Only exactly representable inputs are
/// accepted, so a successful parse always round-trips the original bits.
pub fn parse(text: &str) -> Option<f64> {
    let text = text.trim();
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let apply_sign = |v: f64| if negative { -v } else { v };
    match body {
        "inf" => return Some(apply_sign(f64::INFINITY)),
        "nan" => return Some(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X"))?;
    let (significand, exponent) = body.split_once(['p', 'P'])?;
    let exp: i64 = exponent.parse().ok()?;
    let (lead, frac) = match significand.split_once('.') {
        Some((l, f)) => (l, f),
        None => (significand, ""),
    };
    if frac.len() > 13 || frac.is_empty() && significand.contains('.') {
        return None;
    }
    let lead: u64 = match lead {
        "0" => 0,
        "1" => 1,
        _ => return None,
    };
    let mut mantissa = if frac.is_empty() { 0 } else { u64::from_str_radix(frac, 16).ok()? };
    mantissa <<= 4 * (13 - frac.len() as u32);
    if lead == 0 {
        if mantissa == 0 {
            return (exp == 0).then(|| apply_sign(0.0));
        }
        if exp != 1 - EXP_BIAS {
            return None;
        }
        return Some(apply_sign(f64::from_bits(mantissa)));
    }
    let raw_exp = exp + EXP_BIAS;
    if !(1..=2046).contains(&raw_exp) {
        return None;
    }
    Some(apply_sign(f64::from_bits(((raw_exp as u64) << MANTISSA_BITS) | mantissa)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(-2.0), "-0x1p+1");
        assert_eq!(format(0.5), "0x1p-1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(1.5), "0x1.8p+0");
        assert_eq!(format(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(parse("0x1.8p+0"), Some(1.5));
        assert_eq!(parse("-0x1p+1"), Some(-2.0));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1.5", "0x2p+0", "0x1.p+0", "0x1.zzp+0", "0x1p", "0x1.00000000000000p+0"] {
            assert_eq!(parse(bad), None, "{bad}");
        }
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            let back = parse(&format(v)).unwrap();
            if v.is_nan() {
                prop_assert!(back.is_nan());
            } else {
                prop_assert_eq!(back.to_bits(), v.to_bits());
            }
        }
    }
}
