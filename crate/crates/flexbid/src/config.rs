//! TOML run configuration. Every section and key is optional.
//!
//! ```toml
//! [aggregation]
//! variant = "dp"
//! spt_base = 100.0
//! ppt = 23
//! tolerance = 5.0
//! max_orders = 5
//!
//! [fleet]
//! n = 5000
//! capacity_min = 16.0
//! capacity_max = 30.0
//! arrival = { mean = 19.0, sd = 2.0, lo = 16.0, hi = 25.0 }
//! charge_power = { fixed = 3.7 }
//!
//! [market]
//! beta = 0.5
//! price_limit = 40.0
//! ```

use std::path::Path;

use flexbid_core::datagen::FleetConfig;
use flexbid_core::market::DEFAULT_BETA;
use flexbid_core::MaggConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub beta: f64,
    /// EUR/MWh; absent means the orders take any price.
    pub price_limit: Option<f64>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            beta: DEFAULT_BETA,
            price_limit: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub aggregation: MaggConfig,
    pub fleet: FleetConfig,
    pub market: MarketConfig,
}

impl RunConfig {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flexbid_core::datagen::ChargePower;
    use flexbid_core::heuristics::Variant;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse(Path::new("c"), "").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections() {
        let cfg = RunConfig::parse(
            Path::new("c"),
            "[aggregation]\nvariant = \"dtf\"\nspt_base = 2.0\ntolerance = 0.1\n[fleet]\ncharge_power = \"mixed\"\n[market]\nprice_limit = 40.0\n",
        )
        .unwrap();
        assert_eq!(cfg.aggregation.variant, Variant::Dtf);
        assert_eq!(cfg.aggregation.max_orders, 5);
        assert_eq!(cfg.fleet.charge_power, ChargePower::Mixed);
        assert_eq!(cfg.market.price_limit, Some(40.0));
        let fixed = RunConfig::parse(Path::new("c"), "[fleet]\ncharge_power = { fixed = 7.4 }\n").unwrap();
        assert_eq!(fixed.fleet.charge_power, ChargePower::Fixed(7.4));
    }

    #[test]
    fn unknown_and_mistyped_keys_name_the_field() {
        let err = RunConfig::parse(Path::new("c"), "[aggregation]\nspt = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("spt"), "{err}");
        let err = RunConfig::parse(Path::new("c"), "[fleet]\nn = \"many\"\n").unwrap_err();
        assert!(err.to_string().contains("n"), "{err}");
    }
}
