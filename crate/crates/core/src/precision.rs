//! Exact decimal <-> integer unit conversion.
//!
//! Prices are carried as integer ticks and sizes as integer size-units. A
//! [`UnitScale`] is the value of one unit written as `mantissa * 10^-exponent`
//! (`0.01` is `1e-2`, `0.5` is `5e-1`), so conversion never touches floating
//! point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecisionError {
    #[error("`{0}` is not a decimal number")]
    Malformed(String),
    #[error("`{value}` is not a whole multiple of {unit}")]
    OffGrid { value: String, unit: UnitScale },
    #[error("`{0}` overflows the integer unit range")]
    Overflow(String),
    #[error("unit scale must be positive, got `{0}`")]
    NonPositiveUnit(String),
}

/// One quantisation step, `mantissa * 10^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitScale {
    mantissa: u64,
    exponent: u32,
}

/// A parsed decimal literal, `digits * 10^-scale`, sign kept separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Decimal {
    negative: bool,
    digits: u128,
    scale: u32,
}

fn parse_decimal(text: &str) -> Result<Decimal, PrecisionError> {
    let malformed = || PrecisionError::Malformed(text.to_string());
    let t = text.trim();
    let (negative, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let frac_trimmed = frac_part.trim_end_matches('0');
    let mut digits: u128 = 0;
    for b in int_part.bytes().chain(frac_trimmed.bytes()) {
        digits = digits
            .checked_mul(10)
            .and_then(|d| d.checked_add(u128::from(b - b'0')))
            .ok_or_else(|| PrecisionError::Overflow(text.to_string()))?;
    }
    Ok(Decimal {
        negative,
        digits,
        scale: frac_trimmed.len() as u32,
    })
}

fn pow10(exp: u32) -> Option<u128> {
    10u128.checked_pow(exp)
}

impl UnitScale {
    pub const fn new(mantissa: u64, exponent: u32) -> Self {
        assert!(mantissa > 0, "unit mantissa must be positive");
        Self { mantissa, exponent }
    }

    /// Unit of `10^-decimals`, e.g. `decimals(2)` is one cent.
    pub const fn decimals(decimals: u32) -> Self {
        Self::new(1, decimals)
    }

    pub fn as_f64(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.exponent as i32)
    }

    /// Number of fractional digits needed to print any multiple of this unit.
    pub fn fraction_digits(&self) -> u32 {
        self.exponent
    }

    /// Converts a decimal literal to a whole number of units, rejecting values
    /// that fall between grid points.
    pub fn to_units(&self, text: &str) -> Result<i64, PrecisionError> {
        let d = parse_decimal(text)?;
        let overflow = || PrecisionError::Overflow(text.to_string());
        // value / unit = (digits * 10^-scale) / (mantissa * 10^-exponent)
        let (num, den) = if self.exponent >= d.scale {
            let k = pow10(self.exponent - d.scale).ok_or_else(overflow)?;
            (d.digits.checked_mul(k).ok_or_else(overflow)?, u128::from(self.mantissa))
        } else {
            let k = pow10(d.scale - self.exponent).ok_or_else(overflow)?;
            (d.digits, u128::from(self.mantissa).checked_mul(k).ok_or_else(overflow)?)
        };
        if num % den != 0 {
            return Err(PrecisionError::OffGrid {
                value: text.to_string(),
                unit: *self,
            });
        }
        let units = i64::try_from(num / den).map_err(|_| overflow())?;
        Ok(if d.negative { -units } else { units })
    }

    /// Formats `units` as a decimal with exactly [`fraction_digits`] digits
    /// after the point.
    ///
    /// [`fraction_digits`]: UnitScale::fraction_digits
    pub fn format(&self, units: i64) -> String {
        let raw = i128::from(units) * i128::from(self.mantissa);
        let neg = raw < 0;
        let mag = raw.unsigned_abs();
        let sign = if neg { "-" } else { "" };
        if self.exponent == 0 {
            return format!("{sign}{mag}");
        }
        let p = pow10(self.exponent).expect("unit exponent in range");
        format!("{sign}{}.{:0width$}", mag / p, mag % p, width = self.exponent as usize)
    }

    /// Converts a unit count to a float. Output formatting only.
    pub fn to_f64(&self, units: i64) -> f64 {
        units as f64 * self.as_f64()
    }
}

impl FromStr for UnitScale {
    type Err = PrecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let d = parse_decimal(s)?;
        if d.negative || d.digits == 0 {
            return Err(PrecisionError::NonPositiveUnit(s.to_string()));
        }
        let mantissa = u64::try_from(d.digits).map_err(|_| PrecisionError::Overflow(s.to_string()))?;
        Ok(Self {
            mantissa,
            exponent: d.scale,
        })
    }
}

impl fmt::Display for UnitScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(1))
    }
}

impl Serialize for UnitScale {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitScale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Price tick and size unit of one instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub tick_size: UnitScale,
    pub size_unit: UnitScale,
}

impl Precision {
    /// LUNA/USD: 0.01 USD ticks, 0.001 LUNA size units.
    pub const LUNA_USD: Precision = Precision {
        tick_size: UnitScale::decimals(2),
        size_unit: UnitScale::decimals(3),
    };

    /// BTC/USD: 0.01 USD ticks, 0.00001 BTC size units.
    pub const BTC_USD: Precision = Precision {
        tick_size: UnitScale::decimals(2),
        size_unit: UnitScale::decimals(5),
    };

    pub fn price_ticks(&self, text: &str) -> Result<i64, PrecisionError> {
        self.tick_size.to_units(text)
    }

    pub fn size_units(&self, text: &str) -> Result<i64, PrecisionError> {
        self.size_unit.to_units(text)
    }

    pub fn format_price(&self, ticks: i64) -> String {
        self.tick_size.format(ticks)
    }

    pub fn format_size(&self, units: i64) -> String {
        self.size_unit.format(units)
    }
}
