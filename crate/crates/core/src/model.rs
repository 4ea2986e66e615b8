//! Domain types shared by every stage of the pipeline.
//!
//! Time is integer minutes since midnight within a single day. Energy is
//! expressed in battery-percent units of a common reference device, stored
//! as fixed-point micro-units so capacity accounting is exact.

use std::collections::HashSet;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u16 = 24 * 60;

/// A wall-clock minute within one day, `00:00..=23:59`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(u16);

impl ClockTime {
    pub const MIDNIGHT: ClockTime = ClockTime(0);
    pub const LAST_MINUTE: ClockTime = ClockTime(MINUTES_PER_DAY - 1);

    pub fn from_minutes(minutes: u16) -> Result<Self> {
        if minutes < MINUTES_PER_DAY {
            Ok(ClockTime(minutes))
        } else {
            Err(Error::Validation(format!(
                "clock time {minutes} is outside 0..{MINUTES_PER_DAY}"
            )))
        }
    }

    pub fn from_hm(hour: u16, minute: u16) -> Result<Self> {
        if hour >= 24 || minute >= 60 {
            return Err(Error::Validation(format!(
                "invalid clock time {hour:02}:{minute:02}"
            )));
        }
        Ok(ClockTime(hour * 60 + minute))
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    /// Adds `minutes`, saturating at 23:59.
    pub fn saturating_add(self, minutes: u32) -> ClockTime {
        let total = u32::from(self.0) + minutes;
        ClockTime(total.min(u32::from(MINUTES_PER_DAY - 1)) as u16)
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = Error;

    /// Parses `H:MM` or `HH:MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("invalid clock time {s:?}, expected HH:MM"));
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        if h.is_empty() || h.len() > 2 || m.len() != 2 {
            return Err(bad());
        }
        if !h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let hour: u16 = h.parse().map_err(|_| bad())?;
        let minute: u16 = m.parse().map_err(|_| bad())?;
        ClockTime::from_hm(hour, minute).map_err(|_| bad())
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A stay window `[start, end]` on the clock.
///
/// [`TimeWindow::new`] rejects empty windows. Deserialized windows are taken
/// as-is so that [`validate_instance`] can report bad input as findings
/// rather than aborting on the first one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    start: ClockTime,
    end: ClockTime,
}

impl TimeWindow {
    pub fn new(start: ClockTime, end: ClockTime) -> Result<Self> {
        if start < end {
            Ok(TimeWindow { start, end })
        } else {
            Err(Error::Validation(format!(
                "time window {start}-{end} must start before it ends"
            )))
        }
    }

    pub fn from_minutes(start: u16, end: u16) -> Result<Self> {
        TimeWindow::new(ClockTime::from_minutes(start)?, ClockTime::from_minutes(end)?)
    }

    /// Builds a window without checking `start < end`. Only useful for
    /// exercising validation paths.
    pub fn new_unchecked(start: ClockTime, end: ClockTime) -> Self {
        TimeWindow { start, end }
    }

    pub fn start(&self) -> ClockTime {
        self.start
    }

    pub fn end(&self) -> ClockTime {
        self.end
    }

    pub fn is_valid(&self) -> bool {
        self.start < self.end
    }

    /// Length in minutes; zero for a degenerate window.
    pub fn duration(&self) -> u32 {
        u32::from(self.end.0.saturating_sub(self.start.0))
    }

    /// Inclusive containment: `other.start >= self.start && other.end <= self.end`.
    pub fn contains(&self, other: &TimeWindow) -> bool {
        other.start >= self.start && other.end <= self.end
    }

    /// True when the two windows share more than a boundary instant.
    pub fn overlaps(&self, other: &TimeWindow) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl FromStr for TimeWindow {
    type Err = Error;

    /// Parses `HH:MM-HH:MM`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('-').ok_or_else(|| {
            Error::Validation(format!("invalid time window {s:?}, expected HH:MM-HH:MM"))
        })?;
        TimeWindow::new(a.parse()?, b.parse()?)
    }
}

/// Serde adapter writing a [`TimeWindow`] as an `"HH:MM-HH:MM"` string.
pub(crate) mod window_string {
    use super::TimeWindow;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &TimeWindow, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(w)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeWindow, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Energy in battery-percent units, held as an integer count of micro-units.
///
/// Serialized as a decimal number of percent units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);
    /// Micro-units per percent unit.
    pub const SCALE: u64 = 1_000_000;

    /// Rounds `units` to the nearest micro-unit. Returns `None` for negative
    /// or non-finite input.
    pub fn from_units(units: f64) -> Option<Self> {
        if !units.is_finite() || units < 0.0 {
            return None;
        }
        let micro = (units * Self::SCALE as f64).round();
        if micro > u64::MAX as f64 {
            return None;
        }
        Some(Energy(micro as u64))
    }

    pub const fn from_micro(micro: u64) -> Self {
        Energy(micro)
    }

    pub const fn micro(self) -> u64 {
        self.0
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn checked_sub(self, rhs: Energy) -> Option<Energy> {
        self.0.checked_sub(rhs.0).map(Energy)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Energy {
    type Output = Energy;

    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        Energy(iter.map(|e| e.0).sum())
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_units())
    }
}

impl Serialize for Energy {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_units())
    }
}

impl<'de> Deserialize<'de> for Energy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let units = f64::deserialize(deserializer)?;
        Energy::from_units(units).ok_or_else(|| {
            serde::de::Error::custom(format!("energy must be finite and non-negative, got {units}"))
        })
    }
}

/// A provider's advertisement to share energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyService {
    pub id: String,
    pub owner_id: String,
    /// Energy the provider is willing to share, at most 100 units.
    pub capacity: Energy,
    pub location: Location,
    /// The provider's stay in the microcell.
    pub window: TimeWindow,
}

/// A consumer's demand for energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRequest {
    pub id: String,
    pub owner_id: String,
    /// Battery level at the time of the request, in percent.
    pub battery_level: f64,
    pub requested_energy: Energy,
    /// The consumer's stay in the microcell.
    pub window: TimeWindow,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Subject {
    Service(String),
    Request(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Service(id) => write!(f, "service {id}"),
            Subject::Request(id) => write!(f, "request {id}"),
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFinding {
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Checks every type invariant of a composition instance and returns one
/// finding per violation. An empty result means the instance is valid.
pub fn validate_instance(
    service: &EnergyService,
    requests: &[EnergyRequest],
) -> Vec<ValidationFinding> {
    let mut findings = Vec::new();
    let mut push = |subject: &Subject, message: String| {
        findings.push(ValidationFinding {
            subject: subject.clone(),
            message,
        })
    };

    let subject = Subject::Service(service.id.clone());
    if !service.window.is_valid() {
        push(&subject, format!("window {} is empty", service.window));
    }
    if service.capacity.is_zero() {
        push(&subject, "capacity must be positive".to_owned());
    } else if service.capacity > Energy::from_micro(100 * Energy::SCALE) {
        push(
            &subject,
            format!("capacity {} exceeds 100 units", service.capacity),
        );
    }
    if !service.location.is_finite() {
        push(&subject, "location is not finite".to_owned());
    }

    let mut seen = HashSet::new();
    for request in requests {
        let subject = Subject::Request(request.id.clone());
        if !seen.insert(request.id.as_str()) {
            push(&subject, "duplicate request id".to_owned());
        }
        if !(0.0..=100.0).contains(&request.battery_level) {
            push(
                &subject,
                format!("battery level {} is outside [0, 100]", request.battery_level),
            );
        }
        if request.requested_energy.is_zero() {
            push(&subject, "requested energy must be positive".to_owned());
        }
        if !request.window.is_valid() {
            push(&subject, format!("window {} is empty", request.window));
        }
        if !request.location.is_finite() {
            push(&subject, "location is not finite".to_owned());
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ClockTime {
        s.parse().unwrap()
    }

    fn service() -> EnergyService {
        EnergyService {
            id: "es-1".into(),
            owner_id: "p-1".into(),
            capacity: Energy::from_units(80.0).unwrap(),
            location: Location::new(0.0, 0.0),
            window: TimeWindow::new(t("09:00"), t("17:00")).unwrap(),
        }
    }

    fn request(id: &str) -> EnergyRequest {
        EnergyRequest {
            id: id.into(),
            owner_id: format!("c-{id}"),
            battery_level: 42.0,
            requested_energy: Energy::from_units(20.0).unwrap(),
            window: TimeWindow::new(t("10:00"), t("10:30")).unwrap(),
            location: Location::new(1.0, 1.0),
        }
    }

    #[test]
    fn clock_time_parsing() {
        assert_eq!(t("09:30").minutes(), 570);
        assert_eq!(t("9:30").minutes(), 570);
        assert_eq!(t("23:59"), ClockTime::LAST_MINUTE);
        assert_eq!(t("16:59").to_string(), "16:59");
        for bad in ["25:99", "24:00", "12:60", "1230", "12:3", "ab:cd", "", "-1:00", "123:00"] {
            assert!(bad.parse::<ClockTime>().is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn window_construction_rejects_empty() {
        assert!(TimeWindow::new(t("10:00"), t("10:00")).is_err());
        assert!(TimeWindow::new(t("10:01"), t("10:00")).is_err());
        let w = TimeWindow::new(t("10:00"), t("12:00")).unwrap();
        assert_eq!(w.duration(), 120);
        assert_eq!("10:00-12:00".parse::<TimeWindow>().unwrap(), w);
        assert!("12:00-10:00".parse::<TimeWindow>().is_err());
    }

    #[test]
    fn window_relations() {
        let outer: TimeWindow = "09:00-17:00".parse().unwrap();
        let inner: TimeWindow = "10:00-10:30".parse().unwrap();
        let touching: TimeWindow = "10:30-11:00".parse().unwrap();
        assert!(outer.contains(&outer));
        assert!(outer.contains(&inner));
        assert!(!inner.contains(&outer));
        assert!(!inner.overlaps(&touching));
        assert!(outer.overlaps(&inner));
    }

    #[test]
    fn energy_fixed_point() {
        let e = Energy::from_units(33.3).unwrap();
        assert_eq!(e.micro(), 33_300_000);
        assert_eq!(Energy::from_units(-1.0), None);
        assert_eq!(Energy::from_units(f64::NAN), None);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "33.3");
        assert_eq!(serde_json::from_str::<Energy>(&json).unwrap(), e);
        assert!(serde_json::from_str::<Energy>("-3").is_err());
    }

    #[test]
    fn valid_instance_has_no_findings() {
        assert!(validate_instance(&service(), &[request("a"), request("b")]).is_empty());
    }

    #[test]
    fn degenerate_request_window_is_one_finding() {
        let mut r = request("a");
        r.window = TimeWindow::new_unchecked(t("10:00"), t("10:00"));
        let findings = validate_instance(&service(), &[r]);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].subject, Subject::Request("a".into()));
    }

    #[test]
    fn zero_capacity_is_one_finding() {
        let mut s = service();
        s.capacity = Energy::ZERO;
        let findings = validate_instance(&s, &[request("a")]);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].subject, Subject::Service("es-1".into()));
    }

    #[test]
    fn each_violation_is_reported() {
        let mut s = service();
        s.capacity = Energy::from_units(150.0).unwrap();
        s.location = Location::new(f64::NAN, 0.0);
        let mut r = request("a");
        r.battery_level = 101.0;
        r.requested_energy = Energy::ZERO;
        let findings = validate_instance(&s, &[r, request("a")]);
        assert_eq!(findings.len(), 5, "{findings:?}");
    }

    #[test]
    fn degenerate_window_deserializes_for_validation() {
        let json = r#"{"id":"r","owner_id":"c","battery_level":10.0,"requested_energy":5.0,
            "window":{"start":"10:00","end":"09:00"},"location":{"x":0.0,"y":0.0}}"#;
        let r: EnergyRequest = serde_json::from_str(json).unwrap();
        assert!(!r.window.is_valid());
        assert_eq!(r.window.duration(), 0);
    }
}
