//! Bit-exact text round-trip for `f64` as C99-style hex floats.

use crate::error::{Error, Result};

pub fn format_hex(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & 0xf_ffff_ffff_ffff;
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0.0000000000000p+0");
    }
    if exp == 0 {
        // subnormal
        return format!("{sign}0x0.{frac:013x}p-1022");
    }
    let e = exp - 1023;
    format!("{sign}0x1.{frac:013x}p{}{}", if e < 0 { "-" } else { "+" }, e.abs())
}

pub fn parse_hex(s: &str) -> Result<f64> {
    let err = || Error::Parse(format!("malformed hex float: {s:?}"));
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (1u64, r),
        None => (0u64, s),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(err)?;
    let (mantissa, exp_str) = rest.split_once('p').ok_or_else(err)?;
    let (lead, frac_str) = mantissa.split_once('.').ok_or_else(err)?;
    if frac_str.len() != 13 {
        return Err(err());
    }
    let frac = u64::from_str_radix(frac_str, 16).map_err(|_| err())?;
    let e: i64 = exp_str.parse().map_err(|_| err())?;
    let bits = match lead {
        "1" => {
            let biased = e + 1023;
            if !(1..=2046).contains(&biased) {
                return Err(err());
            }
            (sign << 63) | ((biased as u64) << 52) | frac
        }
        "0" => {
            if frac == 0 {
                sign << 63
            } else if e == -1022 {
                (sign << 63) | frac
            } else {
                return Err(err());
            }
        }
        _ => return Err(err()),
    };
    Ok(f64::from_bits(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format_hex(1.0), "0x1.0000000000000p+0");
        assert_eq!(format_hex(0.0), "0x0.0000000000000p+0");
        assert_eq!(parse_hex("0x1.0000000000000p+1").unwrap(), 2.0);
        assert_eq!(
            parse_hex(&format_hex(std::f64::consts::PI.sqrt())).unwrap(),
            std::f64::consts::PI.sqrt()
        );
    }

    proptest! {
        #[test]
        fn round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(parse_hex(&format_hex(x)).unwrap().to_bits(), x.to_bits());
        }
    }
}
