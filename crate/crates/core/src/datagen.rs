//! Seeded synthetic EV fleets.
//!
//! Defaults follow the usual home-charging setting: capacity uniform on
//! 16–30 kWh, arrival around 19:00 (16:00 to 01:00 next day), departure around
//! 07:00 next day (05:00 to 12:00), initial SOC around 75% on [20%, 85%].
//! Times are hours on a 48 h timeline starting at midnight of day one, so an
//! arrival at 00:30 on day two is hour 24.5 and departures fall in hours 29–36.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{EvSession, FlexOffer, DEFAULT_BATTERY_EFFICIENCY, DEFAULT_CHARGER_EFFICIENCY, SOC_FINAL};
use crate::{Error, Result};

pub const MIN_CHARGE_POWER: f64 = 3.7;
pub const MAX_CHARGE_POWER: f64 = 11.0;
/// Household charger ratings drawn from in [`ChargePower::Mixed`] mode.
pub const CHARGER_RATINGS: [f64; 3] = [3.7, 7.4, 11.0];
pub const DEFAULT_RETRIES: u32 = 100;

/// Normal distribution restricted to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncatedGaussian {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedGaussian {
    pub fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = TruncatedGaussian { mean, sd, lo, hi };
        d.validate("distribution")?;
        Ok(d)
    }

    fn validate(&self, field: &'static str) -> Result<()> {
        let finite = [self.mean, self.sd, self.lo, self.hi].iter().all(|v| v.is_finite());
        if !finite || !(self.lo < self.hi) || self.sd < 0.0 {
            return Err(Error::InvalidInput(field, format!("{self:?} needs lo < hi and sd >= 0")));
        }
        if self.sd == 0.0 && !(self.lo..=self.hi).contains(&self.mean) {
            return Err(Error::InvalidInput(field, format!("degenerate {self:?} has its mean outside the support")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_truncated_gaussian(self.mean, self.sd, self.lo, self.hi, rng)
    }
}

/// Rejection sampling from `N(mean, sd)` restricted to `[lo, hi]`.
///
/// With `sd == 0` the mean itself is returned. The caller keeps `lo < hi`
/// and a support of reasonable probability mass.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, sd).expect("finite mean and positive sd");
    loop {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ChargePower {
    /// Every EV charges at this power (kW).
    Fixed(f64),
    /// Each EV draws one of [`CHARGER_RATINGS`] uniformly.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FleetConfig {
    pub n: usize,
    pub seed: u64,
    pub capacity_min: f64,
    pub capacity_max: f64,
    /// Arrival hour on the timeline.
    pub arrival: TruncatedGaussian,
    /// Departure hour on the timeline.
    pub departure: TruncatedGaussian,
    /// Initial state of charge in percent.
    pub soc_initial_pct: TruncatedGaussian,
    pub charge_power: ChargePower,
    pub charger_efficiency: f64,
    pub battery_efficiency: f64,
    /// Resamples per EV before giving up on an infeasible session.
    pub max_retries: u32,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            n: 5000,
            seed: 0,
            capacity_min: 16.0,
            capacity_max: 30.0,
            arrival: TruncatedGaussian {
                mean: 19.0,
                sd: 2.0,
                lo: 16.0,
                hi: 25.0,
            },
            departure: TruncatedGaussian {
                mean: 31.0,
                sd: 2.0,
                lo: 29.0,
                hi: 36.0,
            },
            soc_initial_pct: TruncatedGaussian {
                mean: 75.0,
                sd: 25.0,
                lo: 20.0,
                hi: 85.0,
            },
            charge_power: ChargePower::Fixed(MIN_CHARGE_POWER),
            charger_efficiency: DEFAULT_CHARGER_EFFICIENCY,
            battery_efficiency: DEFAULT_BATTERY_EFFICIENCY,
            max_retries: DEFAULT_RETRIES,
        }
    }
}

impl FleetConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        FleetConfig {
            n,
            seed,
            ..FleetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n", "fleet size must be at least 1".into()));
        }
        if !(0.0 < self.capacity_min && self.capacity_min <= self.capacity_max && self.capacity_max.is_finite()) {
            return Err(Error::InvalidInput(
                "capacity",
                format!("[{}, {}] is not a valid kWh range", self.capacity_min, self.capacity_max),
            ));
        }
        self.arrival.validate("arrival")?;
        self.departure.validate("departure")?;
        self.soc_initial_pct.validate("soc_initial_pct")?;
        if self.arrival.lo < 0.0 {
            return Err(Error::InvalidInput("arrival", "hours before 0 are not on the timeline".into()));
        }
        let soc = &self.soc_initial_pct;
        if soc.lo < 100.0 * crate::model::SOC_MIN || soc.hi > 100.0 * crate::model::SOC_INITIAL_MAX {
            return Err(Error::InvalidInput(
                "soc_initial_pct",
                format!("support [{}, {}] leaves [20, 85]", soc.lo, soc.hi),
            ));
        }
        if let ChargePower::Fixed(p) = self.charge_power {
            if !(MIN_CHARGE_POWER..=MAX_CHARGE_POWER).contains(&p) {
                return Err(Error::InvalidInput(
                    "charge_power",
                    format!("{p} kW is outside [{MIN_CHARGE_POWER}, {MAX_CHARGE_POWER}]"),
                ));
            }
        }
        for (field, eta) in [
            ("charger_efficiency", self.charger_efficiency),
            ("battery_efficiency", self.battery_efficiency),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidInput(field, format!("{eta} must lie in (0, 1]")));
            }
        }
        Ok(())
    }
}

fn sample_session<R: Rng + ?Sized>(cfg: &FleetConfig, rng: &mut R) -> EvSession {
    let capacity = rng.gen_range(cfg.capacity_min..=cfg.capacity_max);
    let arrival = libm::round(cfg.arrival.sample(rng)) as u32;
    let departure = libm::round(cfg.departure.sample(rng)) as u32;
    let soc = cfg.soc_initial_pct.sample(rng) / 100.0;
    let power = match cfg.charge_power {
        ChargePower::Fixed(p) => p,
        ChargePower::Mixed => CHARGER_RATINGS[rng.gen_range(0..CHARGER_RATINGS.len())],
    };
    EvSession {
        battery_capacity: capacity,
        soc_initial: soc,
        soc_final: SOC_FINAL,
        charge_power: power,
        charger_efficiency: cfg.charger_efficiency,
        battery_efficiency: cfg.battery_efficiency,
        arrival,
        departure,
    }
}

/// Samples `cfg.n` feasible sessions with their flex-offers; offer ids are `0..n`.
pub fn generate_sessions(cfg: &FleetConfig) -> Result<Vec<(EvSession, FlexOffer)>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n);
    for ev in 0..cfg.n {
        let mut attempt = 0;
        let pair = loop {
            let session = sample_session(cfg, &mut rng);
            match session.to_flex_offer(ev as u32) {
                Ok(fo) if session.departure > session.arrival => break (session, fo),
                Ok(_) | Err(Error::InfeasibleSession { .. }) => {}
                Err(e) => return Err(e),
            }
            attempt += 1;
            if attempt > cfg.max_retries {
                return Err(Error::RetryBudgetExhausted {
                    ev,
                    retries: cfg.max_retries,
                });
            }
        };
        out.push(pair);
    }
    Ok(out)
}

/// Samples a fleet of flex-offers. Identical configs give identical fleets.
pub fn generate_fleet(cfg: &FleetConfig) -> Result<Vec<FlexOffer>> {
    Ok(generate_sessions(cfg)?.into_iter().map(|(_, fo)| fo).collect())
}
