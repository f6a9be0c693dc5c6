//! ISO-8601 timestamp handling. Everything is normalized to UTC on ingest.

use chrono::{DateTime, SecondsFormat, Utc};

/// Parse an ISO-8601 timestamp with an explicit offset (`Z` or `±hh:mm`).
/// Seconds are optional, so `2023-06-01T00:00Z` is accepted.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    let normalized = match s.strip_suffix('Z').or_else(|| s.strip_suffix('z')) {
        Some(rest) => format!("{rest}+00:00"),
        None => s.to_string(),
    };
    for fmt in ["%Y-%m-%dT%H:%M%:z", "%Y-%m-%dT%H:%M%z", "%Y-%m-%dT%H:%M:%S%.f%z"] {
        if let Ok(t) = DateTime::parse_from_str(&normalized, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    None
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Serde adapter writing timestamps in the canonical `...Z` form and reading
/// any form [`parse_timestamp`] accepts.
pub mod iso {
    use chrono::{DateTime, Utc};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).ok_or_else(|| D::Error::custom(format!("malformed timestamp `{raw}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn accepts_minute_precision_and_offsets() {
        let expect = Utc.with_ymd_and_hms(2023, 6, 1, 0, 30, 0).unwrap();
        assert_eq!(parse_timestamp("2023-06-01T00:30Z"), Some(expect));
        assert_eq!(parse_timestamp("2023-06-01T00:30:00Z"), Some(expect));
        assert_eq!(parse_timestamp("2023-06-01T01:30+01:00"), Some(expect));
        assert_eq!(parse_timestamp("2023-06-01T01:30:00+01:00"), Some(expect));
        assert_eq!(parse_timestamp("2023-05-31T20:30:00.000-04:00"), Some(expect));
        assert_eq!(parse_timestamp("2023-06-01T00:30:00"), None);
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn formats_in_utc() {
        let t = Utc.with_ymd_and_hms(2023, 6, 1, 0, 30, 0).unwrap();
        assert_eq!(format_timestamp(&t), "2023-06-01T00:30:00Z");
    }
}
