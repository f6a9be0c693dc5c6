//! Intensity-driven model selection.
//!
//! The current intensity is placed between the lowest and highest observed
//! intensities, that fraction is mapped onto the pool's energy range, and
//! the model whose energy per inference is nearest the resulting target is
//! chosen.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{EnergyBounds, ModelPool, ModelProfile};
use crate::traces::CarbonSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    #[error("no carbon samples in bounds window ending {at}")]
    NoSamplesInWindow { at: String },
    #[error("unknown model `{0}` (not in pool)")]
    UnknownModel(String),
    #[error("trailing window must be positive")]
    ZeroWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityBounds {
    pub c_low: f64,
    pub c_high: f64,
}

impl IntensityBounds {
    pub fn new(c_low: f64, c_high: f64) -> Option<Self> {
        (c_low <= c_high).then_some(Self { c_low, c_high })
    }
}

/// Direction of the intensity-to-energy mapping.
///
/// `Prose` serves the largest model at the lowest intensity and the smallest
/// at the highest. `Literal` maps the fraction straight onto energy,
/// `(c - c_low)/(c_high - c_low) = (e - e_low)/(e_high - e_low)`, which runs
/// the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingDirection {
    Literal,
    #[default]
    Prose,
}

impl MappingDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            MappingDirection::Literal => "literal",
            MappingDirection::Prose => "prose",
        }
    }
}

impl std::fmt::Display for MappingDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MappingDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(MappingDirection::Literal),
            "prose" => Ok(MappingDirection::Prose),
            other => Err(format!("unknown mapping `{other}` (expected literal|prose)")),
        }
    }
}

/// Which past samples define the intensity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundsWindow {
    WholeTrace,
    Trailing { hours: u32 },
}

impl BoundsWindow {
    pub fn trailing(hours: u32) -> Result<Self, SelectorError> {
        if hours == 0 {
            return Err(SelectorError::ZeroWindow);
        }
        Ok(BoundsWindow::Trailing { hours })
    }
}

impl std::fmt::Display for BoundsWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundsWindow::WholeTrace => f.write_str("whole_trace"),
            BoundsWindow::Trailing { hours } => write!(f, "trailing({hours}h)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDecision {
    pub c_current: f64,
    /// Bounds in force; absent for fixed policies.
    pub bounds: Option<IntensityBounds>,
    /// Clamped normalized intensity; absent for fixed policies.
    pub fraction: Option<f64>,
    pub e_target_mj: f64,
    pub model: String,
}

/// Min/max intensity over samples starting at or before `at` (and, for a
/// trailing window, no earlier than `at - hours`).
pub fn observe_bounds(
    samples: &[CarbonSample],
    at: DateTime<Utc>,
    window: BoundsWindow,
) -> Result<IntensityBounds, SelectorError> {
    let earliest = match window {
        BoundsWindow::WholeTrace => None,
        BoundsWindow::Trailing { hours: 0 } => return Err(SelectorError::ZeroWindow),
        BoundsWindow::Trailing { hours } => Some(at - Duration::hours(hours as i64)),
    };
    let mut bounds: Option<IntensityBounds> = None;
    for s in samples {
        let start = s.interval.start;
        if start > at || earliest.is_some_and(|e| start < e) {
            continue;
        }
        let c = s.intensity_g_per_kwh;
        bounds = Some(match bounds {
            None => IntensityBounds { c_low: c, c_high: c },
            Some(b) => IntensityBounds { c_low: b.c_low.min(c), c_high: b.c_high.max(c) },
        });
    }
    bounds.ok_or_else(|| SelectorError::NoSamplesInWindow { at: crate::time::format_timestamp(&at) })
}

/// `(c - c_low) / (c_high - c_low)` clamped to `[0, 1]`; 0 for flat bounds.
pub fn intensity_fraction(c_current: f64, bounds: IntensityBounds) -> f64 {
    let span = bounds.c_high - bounds.c_low;
    if span <= 0.0 {
        return 0.0;
    }
    ((c_current - bounds.c_low) / span).clamp(0.0, 1.0)
}

pub fn target_energy(fraction: f64, e: EnergyBounds, dir: MappingDirection) -> f64 {
    let f = fraction.clamp(0.0, 1.0);
    let target = match dir {
        MappingDirection::Literal => e.e_low + f * e.span(),
        MappingDirection::Prose => e.e_high - f * e.span(),
    };
    // Guard against rounding a hair outside the pool range.
    target.clamp(e.e_low, e.e_high)
}

/// Profile with energy nearest `e_target`. Ties go to the lower energy, then
/// to the earlier profile in pool order.
pub fn select_model(e_target: f64, pool: &ModelPool) -> &ModelProfile {
    pool.profiles()
        .iter()
        .reduce(|best, p| {
            let (db, dp) = ((best.energy_mj - e_target).abs(), (p.energy_mj - e_target).abs());
            if dp < db || (dp == db && p.energy_mj < best.energy_mj) {
                p
            } else {
                best
            }
        })
        .expect("pool is non-empty")
}

/// Decision for a known set of bounds.
pub fn decide_with_bounds(
    c_current: f64,
    bounds: IntensityBounds,
    pool: &ModelPool,
    dir: MappingDirection,
) -> SelectionDecision {
    let fraction = intensity_fraction(c_current, bounds);
    let e_target_mj = target_energy(fraction, pool.energy_bounds(), dir);
    let model = select_model(e_target_mj, pool).name.clone();
    SelectionDecision { c_current, bounds: Some(bounds), fraction: Some(fraction), e_target_mj, model }
}

pub fn decide(
    c_current: f64,
    history: &[CarbonSample],
    at: DateTime<Utc>,
    pool: &ModelPool,
    window: BoundsWindow,
    dir: MappingDirection,
) -> Result<SelectionDecision, SelectorError> {
    let bounds = observe_bounds(history, at, window)?;
    Ok(decide_with_bounds(c_current, bounds, pool, dir))
}

/// A policy that always serves one model.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPolicy {
    profile: ModelProfile,
}

impl FixedPolicy {
    pub fn profile(&self) -> &ModelProfile {
        &self.profile
    }

    pub fn decide(&self, c_current: f64) -> SelectionDecision {
        SelectionDecision {
            c_current,
            bounds: None,
            fraction: None,
            e_target_mj: self.profile.energy_mj,
            model: self.profile.name.clone(),
        }
    }
}

pub fn fixed_policy(model_name: &str, pool: &ModelPool) -> Result<FixedPolicy, SelectorError> {
    pool.get(model_name)
        .map(|p| FixedPolicy { profile: p.clone() })
        .ok_or_else(|| SelectorError::UnknownModel(model_name.to_string()))
}

/// A resolved selection policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Heuristic { direction: MappingDirection, window: BoundsWindow },
    Fixed(FixedPolicy),
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Policy::Heuristic { .. } => "heuristic".to_string(),
            Policy::Fixed(f) => f.profile.name.clone(),
        }
    }

    pub fn decide(
        &self,
        c_current: f64,
        history: &[CarbonSample],
        at: DateTime<Utc>,
        pool: &ModelPool,
    ) -> Result<SelectionDecision, SelectorError> {
        match self {
            Policy::Heuristic { direction, window } => decide(c_current, history, at, pool, *window, *direction),
            Policy::Fixed(f) => Ok(f.decide(c_current)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{builtin_resnet_only, builtin_table1};
    use crate::traces::Interval;
    use chrono::TimeZone;

    fn sample(at: DateTime<Utc>, c: f64) -> CarbonSample {
        CarbonSample { interval: Interval::new(at, at + Duration::minutes(30)).unwrap(), intensity_g_per_kwh: c }
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2023, 6, 10, 12, 0, 0).unwrap()
    }

    #[test]
    fn whole_trace_bounds() {
        let h: Vec<_> = [100.0, 200.0, 150.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| sample(t0() + Duration::minutes(30 * i as i64), c))
            .collect();
        let b = observe_bounds(&h, t0() + Duration::hours(2), BoundsWindow::WholeTrace).unwrap();
        assert_eq!(b, IntensityBounds { c_low: 100.0, c_high: 200.0 });
        // Samples after `at` are not observed.
        let b = observe_bounds(&h, t0(), BoundsWindow::WholeTrace).unwrap();
        assert_eq!(b, IntensityBounds { c_low: 100.0, c_high: 100.0 });
    }

    #[test]
    fn trailing_window_excludes_old_samples() {
        let t = t0();
        let h = vec![
            sample(t - Duration::hours(30), 300.0),
            sample(t - Duration::hours(2), 100.0),
            sample(t - Duration::hours(1), 200.0),
        ];
        let b = observe_bounds(&h, t, BoundsWindow::trailing(24).unwrap()).unwrap();
        assert_eq!(b, IntensityBounds { c_low: 100.0, c_high: 200.0 });
        assert!(matches!(
            observe_bounds(&h, t - Duration::hours(40), BoundsWindow::WholeTrace),
            Err(SelectorError::NoSamplesInWindow { .. })
        ));
        assert_eq!(BoundsWindow::trailing(0), Err(SelectorError::ZeroWindow));
    }

    #[test]
    fn single_sample_bounds() {
        let b = observe_bounds(&[sample(t0(), 171.0)], t0(), BoundsWindow::WholeTrace).unwrap();
        assert_eq!(b, IntensityBounds { c_low: 171.0, c_high: 171.0 });
    }

    #[test]
    fn fraction_cases() {
        let b = IntensityBounds { c_low: 100.0, c_high: 200.0 };
        assert_eq!(intensity_fraction(100.0, b), 0.0);
        assert_eq!(intensity_fraction(200.0, b), 1.0);
        assert_eq!(intensity_fraction(150.0, b), 0.5);
        assert_eq!(intensity_fraction(250.0, b), 1.0);
        assert_eq!(intensity_fraction(50.0, b), 0.0);
        assert_eq!(intensity_fraction(171.0, IntensityBounds { c_low: 171.0, c_high: 171.0 }), 0.0);
    }

    #[test]
    fn target_energy_cases() {
        let e = builtin_resnet_only().energy_bounds();
        assert_eq!(target_energy(0.0, e, MappingDirection::Prose), 1238.147188);
        assert_eq!(target_energy(1.0, e, MappingDirection::Literal), 1238.147188);
        assert_eq!(target_energy(0.0, e, MappingDirection::Literal), 359.9321833);
        assert_eq!(target_energy(1.0, e, MappingDirection::Prose), 359.9321833);
        // Midpoint of the ResNet range: (359.9321833 + 1238.147188) / 2.
        for dir in [MappingDirection::Prose, MappingDirection::Literal] {
            assert!((target_energy(0.5, e, dir) - 799.0396857).abs() < 1e-6);
        }
    }

    #[test]
    fn nearest_model_and_ties() {
        let pool = builtin_resnet_only();
        assert_eq!(select_model(799.0396857, &pool).name, "ResNet101");
        assert_eq!(select_model(359.9321833, &pool).name, "ResNet34");
        let a = ModelProfile::new("A", 100.0, 5.0).unwrap();
        let b = ModelProfile::new("B", 200.0, 4.0).unwrap();
        let pool = ModelPool::new(vec![b.clone(), a.clone()]).unwrap();
        assert_eq!(select_model(150.0, &pool).name, "A");
        let twin = ModelProfile::new("A2", 100.0, 3.0).unwrap();
        let pool = ModelPool::new(vec![b, twin, a]).unwrap();
        assert_eq!(select_model(100.0, &pool).name, "A2");
    }

    #[test]
    fn decide_compositions() {
        let pool = builtin_resnet_only();
        let flat = vec![sample(t0(), 120.0), sample(t0() + Duration::minutes(30), 120.0)];
        let d = decide(120.0, &flat, t0() + Duration::hours(1), &pool, BoundsWindow::WholeTrace, MappingDirection::Prose).unwrap();
        assert_eq!(d.fraction, Some(0.0));
        assert_eq!(d.model, "ResNet152");

        let hist = vec![sample(t0() - Duration::hours(1), 100.0), sample(t0(), 200.0)];
        let d = decide(260.0, &hist, t0(), &pool, BoundsWindow::trailing(24).unwrap(), MappingDirection::Prose).unwrap();
        assert_eq!(d.fraction, Some(1.0));
        assert_eq!(d.model, "ResNet34");

        let d = decide(150.0, &hist, t0(), &pool, BoundsWindow::WholeTrace, MappingDirection::Prose).unwrap();
        assert!((d.e_target_mj - 799.04).abs() < 0.01);
        assert_eq!(d.model, "ResNet101");
        assert_eq!(d.bounds, Some(IntensityBounds { c_low: 100.0, c_high: 200.0 }));
    }

    #[test]
    fn fixed_policies() {
        let pool = builtin_table1();
        let p = fixed_policy("ResNet50", &pool).unwrap();
        for c in [0.0, 100.0, 1e6] {
            assert_eq!(p.decide(c).model, "ResNet50");
        }
        assert_eq!(fixed_policy("ResNet152", &pool).unwrap().decide(1.0).e_target_mj, 1238.147188);
        assert_eq!(fixed_policy("GPT", &pool), Err(SelectorError::UnknownModel("GPT".into())));
    }

    #[test]
    fn parse_directions() {
        assert_eq!("prose".parse::<MappingDirection>(), Ok(MappingDirection::Prose));
        assert_eq!("literal".parse::<MappingDirection>(), Ok(MappingDirection::Literal));
        assert!("up".parse::<MappingDirection>().is_err());
    }
}
