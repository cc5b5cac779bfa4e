//! Flex-offers and the EV charging model they are derived from.
//!
//! A flex-offer (FO) is an hourly power profile together with the interval of
//! hours at which it may start. All hour indices live on one trading-horizon
//! timeline starting at 0; slices are one hour long, so a slice's power in kW
//! is numerically its energy in kWh.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, EPS};

/// Target state of charge of every session.
pub const SOC_FINAL: f64 = 0.90;
/// Lowest admissible initial state of charge.
pub const SOC_MIN: f64 = 0.20;
/// Highest admissible initial state of charge.
pub const SOC_INITIAL_MAX: f64 = 0.85;
pub const DEFAULT_CHARGER_EFFICIENCY: f64 = 0.95;
pub const DEFAULT_BATTERY_EFFICIENCY: f64 = 0.95;

/// One EV charging job: start window `[earliest_start, latest_start]` and an hourly profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawFlexOffer"))]
pub struct FlexOffer {
    id: u32,
    earliest_start: u32,
    latest_start: u32,
    profile: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawFlexOffer {
    id: u32,
    earliest_start: u32,
    latest_start: u32,
    profile: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawFlexOffer> for FlexOffer {
    type Error = Error;

    fn try_from(raw: RawFlexOffer) -> Result<Self> {
        FlexOffer::new(raw.id, raw.earliest_start, raw.latest_start, raw.profile)
    }
}

impl FlexOffer {
    pub fn new(id: u32, earliest_start: u32, latest_start: u32, profile: Vec<f64>) -> Result<Self> {
        if latest_start < earliest_start {
            return Err(Error::InvalidInput(
                "latest_start",
                format!("flex-offer {id}: latest start {latest_start} precedes earliest start {earliest_start}"),
            ));
        }
        if profile.is_empty() {
            return Err(Error::InvalidInput(
                "profile",
                format!("flex-offer {id} has no slices"),
            ));
        }
        if let Some(p) = profile.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidInput(
                "profile",
                format!("flex-offer {id} has slice power {p}"),
            ));
        }
        Ok(FlexOffer {
            id,
            earliest_start,
            latest_start,
            profile,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn earliest_start(&self) -> u32 {
        self.earliest_start
    }

    pub fn latest_start(&self) -> u32 {
        self.latest_start
    }

    /// Slice powers in kW.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Number of slices.
    pub fn len(&self) -> usize {
        self.profile.len()
    }

    /// Always false; kept for the `len` convention.
    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn time_flexibility(&self) -> u32 {
        self.latest_start - self.earliest_start
    }

    /// Total energy in kWh.
    pub fn energy(&self) -> f64 {
        energy(&self.profile)
    }

    /// Hour after the last slice when started at `start`.
    pub fn end_when_started_at(&self, start: u32) -> u32 {
        start + self.profile.len() as u32
    }

    pub fn rmse_to_target(&self, target: f64) -> f64 {
        rmse_to_target(&self.profile, target)
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        coefficient_of_variation(&self.profile)
    }

    /// Same offer with a different id.
    pub fn with_id(mut self, id: u32) -> Self {
        self.id = id;
        self
    }

    /// Same offer moved `hours` later on the timeline.
    pub fn shifted(&self, hours: u32) -> Self {
        FlexOffer {
            id: self.id,
            earliest_start: self.earliest_start + hours,
            latest_start: self.latest_start + hours,
            profile: self.profile.clone(),
        }
    }

    // Aggregation builds profiles that are valid by construction.
    pub(crate) fn from_parts(id: u32, earliest_start: u32, latest_start: u32, profile: Vec<f64>) -> Self {
        debug_assert!(latest_start >= earliest_start && !profile.is_empty());
        FlexOffer {
            id,
            earliest_start,
            latest_start,
            profile,
        }
    }
}

pub fn energy(profile: &[f64]) -> f64 {
    profile.iter().sum()
}

/// Root mean square distance between every slice and a flat target power.
pub fn rmse_to_target(profile: &[f64], target: f64) -> f64 {
    let m = profile.len() as f64;
    let sq: f64 = profile.iter().map(|p| (p - target) * (p - target)).sum();
    libm::sqrt(sq / m)
}

/// Sample standard deviation (divisor `m - 1`) over the mean.
///
/// A single slice has no spread and yields 0. A zero-mean profile yields
/// `f64::INFINITY` so that it never wins a minimum-CV comparison.
pub fn coefficient_of_variation(profile: &[f64]) -> f64 {
    let m = profile.len();
    let mean = energy(profile) / m as f64;
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    if m == 1 {
        return 0.0;
    }
    let var = profile.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (m - 1) as f64;
    libm::sqrt(var) / mean
}

/// An EV plug-in session in the constant-power charging region.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvSession {
    /// Battery capacity in kWh.
    pub battery_capacity: f64,
    /// Initial state of charge as a fraction.
    pub soc_initial: f64,
    pub soc_final: f64,
    /// Charging power in kW.
    pub charge_power: f64,
    pub charger_efficiency: f64,
    pub battery_efficiency: f64,
    /// Plug-in hour.
    pub arrival: u32,
    /// Plug-out hour.
    pub departure: u32,
}

impl EvSession {
    /// Session with the default efficiencies and a 90% charging target.
    pub fn new(battery_capacity: f64, soc_initial: f64, charge_power: f64, arrival: u32, departure: u32) -> Self {
        EvSession {
            battery_capacity,
            soc_initial,
            soc_final: SOC_FINAL,
            charge_power,
            charger_efficiency: DEFAULT_CHARGER_EFFICIENCY,
            battery_efficiency: DEFAULT_BATTERY_EFFICIENCY,
            arrival,
            departure,
        }
    }

    /// Checks the full session invariants (SOC region, window ordering).
    pub fn validate(&self) -> Result<()> {
        if !(SOC_MIN..=SOC_INITIAL_MAX).contains(&self.soc_initial) {
            return Err(Error::InvalidInput(
                "soc_initial",
                format!("{} is outside [{SOC_MIN}, {SOC_INITIAL_MAX}]", self.soc_initial),
            ));
        }
        if self.soc_final <= self.soc_initial || self.soc_final > 1.0 {
            return Err(Error::InvalidInput(
                "soc_final",
                format!("{} must lie in ({}, 1]", self.soc_final, self.soc_initial),
            ));
        }
        if self.departure <= self.arrival {
            return Err(Error::InvalidInput(
                "departure",
                format!("departure {} is not after arrival {}", self.departure, self.arrival),
            ));
        }
        self.check_physics()
    }

    fn check_physics(&self) -> Result<()> {
        if !(self.charge_power > 0.0) || !self.charge_power.is_finite() {
            return Err(Error::InvalidInput(
                "charge_power",
                format!("{} kW must be positive", self.charge_power),
            ));
        }
        if !(self.battery_capacity > 0.0) || !self.battery_capacity.is_finite() {
            return Err(Error::InvalidInput(
                "battery_capacity",
                format!("{} kWh must be positive", self.battery_capacity),
            ));
        }
        for (name, eta) in [
            ("charger_efficiency", self.charger_efficiency),
            ("battery_efficiency", self.battery_efficiency),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidInput(name, format!("{eta} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    /// Energy drawn from the grid in kWh.
    pub fn energy_needed(&self) -> f64 {
        self.charge_power * self.charging_duration_unchecked()
    }

    /// Hours of constant-power charging needed to reach `soc_final`.
    pub fn charging_duration(&self) -> Result<f64> {
        self.check_physics()?;
        if self.soc_final <= self.soc_initial {
            return Err(Error::InvalidInput(
                "soc_initial",
                format!("{} leaves nothing to charge", self.soc_initial),
            ));
        }
        Ok(self.charging_duration_unchecked())
    }

    fn charging_duration_unchecked(&self) -> f64 {
        (self.soc_final - self.soc_initial) * self.battery_capacity
            / (self.charger_efficiency * self.battery_efficiency * self.charge_power)
    }

    /// Whole charging hours the profile occupies.
    pub fn charging_hours(&self) -> Result<u32> {
        Ok(whole_hours(self.charging_duration()?))
    }

    /// Converts the session to an hourly flex-offer.
    ///
    /// The inner hours charge at full power; the energy of the first and last
    /// partial hours is pooled and split evenly between the two end slices.
    pub fn to_flex_offer(&self, id: u32) -> Result<FlexOffer> {
        let duration = self.charging_duration()?;
        let m = whole_hours(duration);
        let window = self.departure.saturating_sub(self.arrival);
        if window < m {
            return Err(Error::InfeasibleSession {
                needed_hours: m,
                window_hours: window,
            });
        }
        let p = self.charge_power;
        let profile = if m == 1 {
            vec![p * duration]
        } else {
            let end = p * (duration - (m - 2) as f64) / 2.0;
            let mut profile = vec![p; m as usize];
            profile[0] = end;
            profile[m as usize - 1] = end;
            profile
        };
        FlexOffer::new(id, self.arrival, self.departure - m, profile)
    }
}

/// `ceil`, but a duration within `EPS` above a whole hour counts as that hour.
fn whole_hours(duration: f64) -> u32 {
    (libm::ceil(duration - EPS) as u32).max(1)
}
