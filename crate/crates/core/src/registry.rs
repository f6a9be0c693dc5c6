//! Candidate model profiles and the energy bounds derived from them.
//!
//! Pools are read from a small CSV format:
//!
//! ```text
//! # comment lines are ignored
//! name,energy_mj,error_rate_pct
//! ResNet50,420.6213298,7.138
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POOL_HEADER: [&str; 3] = ["name", "energy_mj", "error_rate_pct"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoolError {
    #[error("missing header `name,energy_mj,error_rate_pct`")]
    MissingHeader,
    #[error("unexpected header at line {line}: expected `name,energy_mj,error_rate_pct`, found `{found}`")]
    BadHeader { line: u64, found: String },
    #[error("malformed row at line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("non-positive energy at line {line}: {value}")]
    NonPositiveEnergy { line: u64, value: f64 },
    #[error("error rate out of range [0, 100] at line {line}: {value}")]
    ErrorRateOutOfRange { line: u64, value: f64 },
    #[error("duplicate model name `{name}` at line {line}")]
    DuplicateName { line: u64, name: String },
    #[error("empty model pool")]
    Empty,
    #[error("invalid profile `{name}`: {reason}")]
    InvalidProfile { name: String, reason: String },
}

impl PoolError {
    /// Source line of the offending row, when the error came from a file.
    pub fn line(&self) -> Option<u64> {
        match self {
            PoolError::BadHeader { line, .. }
            | PoolError::Malformed { line, .. }
            | PoolError::NonPositiveEnergy { line, .. }
            | PoolError::ErrorRateOutOfRange { line, .. }
            | PoolError::DuplicateName { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A named model with its energy per inference (mJ) and error rate (%).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub energy_mj: f64,
    pub error_rate_pct: f64,
}

impl ModelProfile {
    pub fn new(name: impl Into<String>, energy_mj: f64, error_rate_pct: f64) -> Result<Self, PoolError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(PoolError::InvalidProfile { name, reason: "empty name".into() });
        }
        if !(energy_mj.is_finite() && energy_mj > 0.0) {
            return Err(PoolError::InvalidProfile {
                name,
                reason: format!("non-positive energy {energy_mj}"),
            });
        }
        if !(0.0..=100.0).contains(&error_rate_pct) {
            return Err(PoolError::InvalidProfile {
                name,
                reason: format!("error rate {error_rate_pct} outside [0, 100]"),
            });
        }
        Ok(Self { name, energy_mj, error_rate_pct })
    }
}

/// Non-empty, name-unique, ordered collection of profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelPool {
    profiles: Vec<ModelProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBounds {
    pub e_low: f64,
    pub e_high: f64,
}

impl EnergyBounds {
    pub fn span(&self) -> f64 {
        self.e_high - self.e_low
    }
}

/// Which of the bundled pools to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinPool {
    Full,
    ResnetOnly,
}

impl std::str::FromStr for BuiltinPool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(BuiltinPool::Full),
            "resnet" | "resnet_only" => Ok(BuiltinPool::ResnetOnly),
            other => Err(format!("unknown builtin pool `{other}` (expected full|resnet)")),
        }
    }
}

// Measured vision models: (name, mJ per inference, error rate %).
const TABLE1: [(&str, f64, f64); 7] = [
    ("ResNet34", 359.9321833, 8.58),
    ("ResNet50", 420.6213298, 7.138),
    ("ResNet101", 803.0948846, 6.454),
    ("ResNet152", 1238.147188, 5.954),
    ("VGG16", 668.9749319, 9.618),
    ("VGG19", 803.852304, 9.124),
    ("AlexNet", 124.9984724, 20.934),
];

pub fn builtin_table1() -> ModelPool {
    builtin(BuiltinPool::Full)
}

pub fn builtin_resnet_only() -> ModelPool {
    builtin(BuiltinPool::ResnetOnly)
}

pub fn builtin(which: BuiltinPool) -> ModelPool {
    let profiles = TABLE1
        .iter()
        .filter(|(name, _, _)| which == BuiltinPool::Full || name.starts_with("ResNet"))
        .map(|&(name, energy_mj, error_rate_pct)| ModelProfile {
            name: name.to_string(),
            energy_mj,
            error_rate_pct,
        })
        .collect();
    ModelPool { profiles }
}

impl ModelPool {
    pub fn new(profiles: Vec<ModelProfile>) -> Result<Self, PoolError> {
        if profiles.is_empty() {
            return Err(PoolError::Empty);
        }
        let mut seen = HashSet::new();
        for p in &profiles {
            // Re-validate in case the caller built profiles by struct literal.
            ModelProfile::new(p.name.clone(), p.energy_mj, p.error_rate_pct)?;
            if !seen.insert(p.name.as_str()) {
                return Err(PoolError::InvalidProfile {
                    name: p.name.clone(),
                    reason: "duplicate name".into(),
                });
            }
        }
        Ok(Self { profiles })
    }

    pub fn profiles(&self) -> &[ModelProfile] {
        &self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, name: &str) -> Option<&ModelProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn energy_bounds(&self) -> EnergyBounds {
        energy_bounds(self)
    }

    /// Profile with the lowest energy (earliest on ties).
    pub fn min_energy(&self) -> &ModelProfile {
        self.profiles
            .iter()
            .reduce(|a, b| if b.energy_mj < a.energy_mj { b } else { a })
            .expect("pool is non-empty")
    }

    /// Profile with the highest energy (earliest on ties).
    pub fn max_energy(&self) -> &ModelProfile {
        self.profiles
            .iter()
            .reduce(|a, b| if b.energy_mj > a.energy_mj { b } else { a })
            .expect("pool is non-empty")
    }

    /// Serialize back to the pool CSV format. Numbers use the shortest
    /// representation that parses back to the identical `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,energy_mj,error_rate_pct\n");
        for p in &self.profiles {
            let _ = writeln!(out, "{},{},{}", p.name, p.energy_mj, p.error_rate_pct);
        }
        out
    }

    /// Stable digest of the pool contents.
    pub fn digest(&self) -> String {
        crate::sha256_hex(self.to_csv().as_bytes())
    }
}

pub fn energy_bounds(pool: &ModelPool) -> EnergyBounds {
    EnergyBounds {
        e_low: pool.min_energy().energy_mj,
        e_high: pool.max_energy().energy_mj,
    }
}

/// Parse a pool CSV document. Rows are kept in file order.
pub fn load_pool(source: &str) -> Result<ModelPool, PoolError> {
    let mut reader = crate::csv_reader(source.as_bytes());
    let mut header_seen = false;
    let mut profiles: Vec<ModelProfile> = Vec::new();
    let mut seen = HashSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| PoolError::Malformed {
            line: crate::csv_error_line(&e),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if !header_seen {
            if record.len() != 3 || record.iter().zip(POOL_HEADER).any(|(a, b)| a != b) {
                return Err(PoolError::BadHeader {
                    line,
                    found: record.iter().collect::<Vec<_>>().join(","),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != 3 {
            return Err(PoolError::Malformed {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let name = record[0].to_string();
        if name.is_empty() {
            return Err(PoolError::Malformed { line, reason: "empty model name".into() });
        }
        let energy_mj = parse_number(&record[1], "energy_mj", line)?;
        let error_rate_pct = parse_number(&record[2], "error_rate_pct", line)?;
        if energy_mj <= 0.0 {
            return Err(PoolError::NonPositiveEnergy { line, value: energy_mj });
        }
        if !(0.0..=100.0).contains(&error_rate_pct) {
            return Err(PoolError::ErrorRateOutOfRange { line, value: error_rate_pct });
        }
        if !seen.insert(name.clone()) {
            return Err(PoolError::DuplicateName { line, name });
        }
        profiles.push(ModelProfile { name, energy_mj, error_rate_pct });
    }

    if !header_seen {
        return Err(PoolError::MissingHeader);
    }
    if profiles.is_empty() {
        return Err(PoolError::Empty);
    }
    Ok(ModelPool { profiles })
}

fn parse_number(field: &str, column: &str, line: u64) -> Result<f64, PoolError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(PoolError::Malformed {
            line,
            reason: format!("{column} `{field}` is not a finite number"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "name,energy_mj,error_rate_pct\n";

    #[test]
    fn parses_table1_rows() {
        let pool = load_pool(&format!("{HEADER}ResNet50,420.6213298,7.138\nAlexNet,124.9984724,20.934\n")).unwrap();
        assert_eq!(pool.profiles()[0], ModelProfile { name: "ResNet50".into(), energy_mj: 420.6213298, error_rate_pct: 7.138 });
        assert_eq!(pool.profiles()[1].name, "AlexNet");
        assert_eq!(pool.profiles()[1].energy_mj, 124.9984724);
        assert_eq!(pool.profiles()[1].error_rate_pct, 20.934);
    }

    #[test]
    fn rejects_non_positive_energy_with_line() {
        let err = load_pool(&format!("{HEADER}A,1.0,5.0\nM,-1.0,5.0\n")).unwrap_err();
        assert_eq!(err, PoolError::NonPositiveEnergy { line: 3, value: -1.0 });
        assert!(err.to_string().starts_with("non-positive energy at line 3"));
        assert!(matches!(load_pool(&format!("{HEADER}Z,0,5\n")), Err(PoolError::NonPositiveEnergy { .. })));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(load_pool(&format!("{HEADER}A,1.0,101\n")), Err(PoolError::ErrorRateOutOfRange { line: 2, .. })));
        assert!(matches!(load_pool(&format!("{HEADER}A,1.0,-0.5\n")), Err(PoolError::ErrorRateOutOfRange { .. })));
        assert!(matches!(load_pool(&format!("{HEADER}A,1.0,5\nA,2.0,5\n")), Err(PoolError::DuplicateName { line: 3, .. })));
        assert!(matches!(load_pool(&format!("{HEADER}A,abc,5\n")), Err(PoolError::Malformed { line: 2, .. })));
        assert!(matches!(load_pool(&format!("{HEADER}A,NaN,5\n")), Err(PoolError::Malformed { .. })));
        assert!(matches!(load_pool(&format!("{HEADER}A,1.0\n")), Err(PoolError::Malformed { .. })));
        assert!(matches!(load_pool("energy,name\nA,1\n"), Err(PoolError::BadHeader { line: 1, .. })));
        assert_eq!(load_pool(""), Err(PoolError::MissingHeader));
        assert_eq!(load_pool(HEADER), Err(PoolError::Empty));
    }

    #[test]
    fn ignores_comments_and_reports_true_lines() {
        let src = format!("# pool\n{HEADER}# a comment\nA,1.0,5\nB,0,5\n");
        assert_eq!(load_pool(&src).unwrap_err().line(), Some(5));
    }

    #[test]
    fn builtin_pools() {
        let full = builtin_table1();
        assert_eq!(full.len(), 7);
        let resnet = builtin_resnet_only();
        assert_eq!(resnet.len(), 4);
        assert_eq!(resnet.energy_bounds(), EnergyBounds { e_low: 359.9321833, e_high: 1238.147188 });
        assert_eq!(resnet.min_energy().name, "ResNet34");
        assert_eq!(resnet.max_energy().name, "ResNet152");
        assert_eq!(full.energy_bounds(), EnergyBounds { e_low: 124.9984724, e_high: 1238.147188 });
    }

    #[test]
    fn builtin_matches_table_digit_for_digit() {
        let expected = "name,energy_mj,error_rate_pct\n\
            ResNet34,359.9321833,8.58\n\
            ResNet50,420.6213298,7.138\n\
            ResNet101,803.0948846,6.454\n\
            ResNet152,1238.147188,5.954\n\
            VGG16,668.9749319,9.618\n\
            VGG19,803.852304,9.124\n\
            AlexNet,124.9984724,20.934\n";
        assert_eq!(builtin_table1().to_csv(), expected);
    }

    #[test]
    fn single_model_bounds_are_degenerate() {
        let pool = ModelPool::new(vec![ModelProfile::new("ResNet50", 420.6213298, 7.138).unwrap()]).unwrap();
        assert_eq!(energy_bounds(&pool), EnergyBounds { e_low: 420.6213298, e_high: 420.6213298 });
    }

    #[test]
    fn constructor_rejects_duplicates_and_empty() {
        assert_eq!(ModelPool::new(vec![]), Err(PoolError::Empty));
        let a = ModelProfile::new("A", 1.0, 1.0).unwrap();
        assert!(ModelPool::new(vec![a.clone(), a]).is_err());
    }
}
