//! Microsecond timestamps.
//!
//! Accepted inputs are RFC 3339 / ISO-8601 date-times (`2022-05-11T18:36:13.59Z`)
//! and bare times of day (`18:36:13.590000`), which are placed on a base date.
//! The dotted form used in some hand-written tables (`18:36.13.59`) is read as
//! `18:36:13.59`.

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Timelike, Utc};
use thiserror::Error;

/// Microseconds since the Unix epoch.
pub type Micros = i64;

pub const MICROS_PER_SEC: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("`{0}` is not a recognised timestamp")]
    Malformed(String),
    #[error("`{0}` has sub-microsecond precision")]
    TooPrecise(String),
}

/// Parses a timestamp; time-of-day inputs land on `base_date`.
pub fn parse_timestamp(text: &str, base_date: NaiveDate) -> Result<Micros, TimeError> {
    let t = text.trim();
    if t.contains('T') || (t.len() > 10 && t.as_bytes().get(4) == Some(&b'-')) {
        return parse_datetime(t);
    }
    let tod = parse_time_of_day(t)?;
    Ok(to_micros(&NaiveDateTime::new(base_date, tod)))
}

fn check_fraction(text: &str) -> Result<(), TimeError> {
    if let Some((_, frac)) = text.rsplit_once('.') {
        let digits = frac.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 6 {
            return Err(TimeError::TooPrecise(text.to_string()));
        }
    }
    Ok(())
}

fn parse_datetime(t: &str) -> Result<Micros, TimeError> {
    check_fraction(t)?;
    if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
        return Ok(dt.timestamp_micros());
    }
    let naive = NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S%.f")
        .or_else(|_| NaiveDateTime::parse_from_str(t, "%Y-%m-%d %H:%M:%S%.f"))
        .map_err(|_| TimeError::Malformed(t.to_string()))?;
    Ok(to_micros(&naive))
}

fn parse_time_of_day(t: &str) -> Result<NaiveTime, TimeError> {
    let malformed = || TimeError::Malformed(t.to_string());
    // HH:MM.SS.ff -> HH:MM:SS.ff
    let normalized;
    let t = if t.matches(':').count() == 1 && t.matches('.').count() == 2 {
        let idx = t.find('.').ok_or_else(malformed)?;
        normalized = format!("{}:{}", &t[..idx], &t[idx + 1..]);
        normalized.as_str()
    } else {
        t
    };
    check_fraction(t)?;
    NaiveTime::parse_from_str(t, "%H:%M:%S%.f").map_err(|_| malformed())
}

fn to_micros(dt: &NaiveDateTime) -> Micros {
    dt.and_utc().timestamp_micros()
}

/// `YYYY-MM-DDTHH:MM:SS.ffffffZ`, always six fractional digits.
pub fn format_timestamp(ts: Micros) -> String {
    match DateTime::<Utc>::from_timestamp_micros(ts) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string(),
        None => ts.to_string(),
    }
}

/// `HH:MM:SS.ff`, the short form used in traced-order tables.
pub fn format_time_of_day(ts: Micros) -> String {
    match DateTime::<Utc>::from_timestamp_micros(ts) {
        Some(dt) => {
            let centis = dt.nanosecond() / 10_000_000;
            format!("{}.{:02}", dt.format("%H:%M:%S"), centis)
        }
        None => ts.to_string(),
    }
}

pub fn epoch_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tod(h: i64, m: i64, s: i64, us: i64) -> Micros {
        ((h * 60 + m) * 60 + s) * MICROS_PER_SEC + us
    }

    #[test]
    fn time_of_day_forms() {
        let base = epoch_date();
        assert_eq!(
            parse_timestamp("18:36:13.590000", base).unwrap(),
            tod(18, 36, 13, 590_000)
        );
        assert_eq!(parse_timestamp("18:36:13.59", base).unwrap(), tod(18, 36, 13, 590_000));
        assert_eq!(parse_timestamp("18:36.13.59", base).unwrap(), tod(18, 36, 13, 590_000));
        assert_eq!(parse_timestamp("18:36:13", base).unwrap(), tod(18, 36, 13, 0));
    }

    #[test]
    fn iso_forms() {
        let base = epoch_date();
        let a = parse_timestamp("2022-05-11T16:31:39.500000Z", base).unwrap();
        let b = parse_timestamp("2022-05-11T16:31:39.5", base).unwrap();
        assert_eq!(a, b);
        assert_eq!(format_timestamp(a), "2022-05-11T16:31:39.500000Z");
        assert_eq!(format_time_of_day(a), "16:31:39.50");
    }

    #[test]
    fn rejects() {
        let base = epoch_date();
        assert!(matches!(
            parse_timestamp("18:36:13.5900001", base),
            Err(TimeError::TooPrecise(_))
        ));
        assert!(parse_timestamp("yesterday", base).is_err());
        assert!(parse_timestamp("25:00:00", base).is_err());
    }

    #[test]
    fn format_round_trips() {
        for ts in [0, 1, 66_973_590_000, 1_652_286_699_500_123] {
            assert_eq!(parse_timestamp(&format_timestamp(ts), epoch_date()).unwrap(), ts);
        }
    }
}
