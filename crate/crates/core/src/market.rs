//! Flexible orders and their settlement against a day-ahead price curve.
//!
//! Powers are kW, prices EUR/MWh and slices one hour, so every cost is
//! `kW / 1000 * EUR/MWh`. The market is modelled as liquid and price-taking:
//! an order is activated in the cheapest admissible window of the curve.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aggregation::AggregatedFlexOffer;
use crate::heuristics::{band_multiple, run_method, MaggConfig, MaggResult, Method, MAX_ORDER_SLICES};
use crate::model::FlexOffer;
use crate::{Error, Result, EPS};

pub const HOURS_PER_DAY: usize = 24;
pub const DEFAULT_HORIZON: usize = 48;
pub const DAYS_PER_YEAR: usize = 365;
pub const DEFAULT_BETA: f64 = 0.5;

fn kw_to_mw(kw: f64) -> f64 {
    kw / 1000.0
}

/// Hourly day-ahead prices in EUR/MWh over the trading horizon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceCurve {
    prices: Vec<f64>,
}

impl PriceCurve {
    /// Negative prices are allowed; NaN and infinities are not.
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::EmptyInput("price curve"));
        }
        if let Some((h, p)) = prices.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::InvalidInput("price_eur_mwh", format!("hour {h}: {p}")));
        }
        Ok(PriceCurve { prices })
    }

    /// Repeats a day profile of `day_hours` for `horizon` hours, hour 0 being midnight.
    pub fn repeat_daily(day_hours: &[f64], horizon: usize) -> Result<Self> {
        if day_hours.len() != HOURS_PER_DAY {
            return Err(Error::InvalidInput(
                "prices",
                format!("a day has {HOURS_PER_DAY} hours, got {}", day_hours.len()),
            ));
        }
        PriceCurve::new((0..horizon).map(|h| day_hours[h % HOURS_PER_DAY]).collect())
    }

    /// Two price levels: `night` from `night_start` (inclusive) through midnight to
    /// `night_end` (exclusive), `day` otherwise.
    pub fn day_night(day: f64, night: f64, night_start: usize, night_end: usize, horizon: usize) -> Result<Self> {
        let day_hours: Vec<f64> = (0..HOURS_PER_DAY)
            .map(|h| if h >= night_start || h < night_end { night } else { day })
            .collect();
        PriceCurve::repeat_daily(&day_hours, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn price(&self, hour: usize) -> f64 {
        self.prices[hour]
    }

    /// Every price multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        PriceCurve::new(self.prices.iter().map(|p| p * k).collect())
    }

    fn check_span(&self, start: usize, len: usize) -> Result<()> {
        if start + len > self.prices.len() {
            return Err(Error::HorizonExceeded {
                needed: start + len,
                horizon: self.prices.len(),
            });
        }
        Ok(())
    }

    /// Cost in EUR of drawing `profile` (kW per hour) from `start`.
    pub fn profile_cost(&self, profile: &[f64], start: usize) -> Result<f64> {
        self.check_span(start, profile.len())?;
        Ok(profile
            .iter()
            .zip(&self.prices[start..])
            .map(|(p, price)| kw_to_mw(*p) * price)
            .sum())
    }

    /// Sum of prices over `len` hours from `start`.
    pub fn window_sum(&self, start: usize, len: usize) -> f64 {
        self.prices[start..start + len].iter().sum()
    }
}

/// Regulation prices derived from spot: buying imbalance costs `spot * (1 + beta)`,
/// selling surplus earns `spot * (1 - beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegulationModel {
    pub beta: f64,
}

impl Default for RegulationModel {
    fn default() -> Self {
        RegulationModel { beta: DEFAULT_BETA }
    }
}

impl RegulationModel {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput("beta", format!("{beta} must be a non-negative number")));
        }
        Ok(RegulationModel { beta })
    }

    pub fn buy_price(&self, spot: f64) -> f64 {
        spot * (1.0 + self.beta)
    }

    pub fn sell_price(&self, spot: f64) -> f64 {
        spot * (1.0 - self.beta)
    }
}

/// A day-ahead flexible purchase order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlexibleOrder {
    pub name: String,
    /// First hour the order may be active.
    pub begin: u32,
    /// End of the interval: the last admissible start plus the duration.
    pub end: u32,
    pub duration: u32,
    /// Flat volume in kW.
    pub volume: f64,
    /// Highest acceptable average price in EUR/MWh; `None` takes any price.
    pub price_limit: Option<f64>,
    /// Power actually needed in each hour of the order, kW.
    pub demand: Vec<f64>,
    pub source_afo: u32,
}

impl FlexibleOrder {
    pub fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0) || !self.volume.is_finite() {
            return Err(Error::InvalidInput("volume", format!("order {}: {} kW", self.name, self.volume)));
        }
        if !(1..=MAX_ORDER_SLICES as u32).contains(&self.duration) {
            return Err(Error::InvalidInput(
                "duration",
                format!("order {}: {} h is outside [1, {MAX_ORDER_SLICES}]", self.name, self.duration),
            ));
        }
        if self.end < self.begin || self.end - self.begin < self.duration {
            return Err(Error::InvalidInput(
                "interval",
                format!(
                    "order {}: inclusive interval [{}, {}] must exceed the duration {} by at least one hour",
                    self.name, self.begin, self.end, self.duration
                ),
            ));
        }
        if self.demand.len() != self.duration as usize {
            return Err(Error::InvalidInput(
                "demand",
                format!("order {}: {} demand slices for duration {}", self.name, self.demand.len(), self.duration),
            ));
        }
        Ok(())
    }

    pub fn latest_start(&self) -> u32 {
        self.end - self.duration
    }

    /// `|volume - demand|` per slice, kW.
    pub fn imbalance_per_slice(&self) -> Vec<f64> {
        self.demand.iter().map(|p| (self.volume - p).abs()).collect()
    }

    /// Energy bought on the day-ahead market, kWh.
    pub fn purchased_energy(&self) -> f64 {
        self.volume * self.duration as f64
    }
}

fn order_from(afo: &AggregatedFlexOffer, volume: f64, name: String) -> Result<FlexibleOrder> {
    let order = FlexibleOrder {
        name,
        begin: afo.earliest_start(),
        end: afo.latest_start() + afo.len() as u32,
        duration: afo.len() as u32,
        volume,
        price_limit: None,
        demand: afo.profile().to_vec(),
        source_afo: afo.id(),
    };
    order.validate()?;
    Ok(order)
}

/// Order for an aggregate whose slices share a lot multiple within `tolerance`.
/// The volume is that multiple of the lot.
pub fn afo_to_order(afo: &AggregatedFlexOffer, lot: f64, tolerance: f64, name: String) -> Result<FlexibleOrder> {
    let x = band_multiple(afo.profile(), lot, tolerance).ok_or(Error::NonConforming(afo.id()))?;
    if afo.time_flexibility() < 1 {
        return Err(Error::NonConforming(afo.id()));
    }
    order_from(afo, x as f64 * lot, name)
}

/// Order for any aggregate: the highest slice rounded up to the next lot
/// multiple is bought for every hour.
pub fn afo_to_order_flattened(afo: &AggregatedFlexOffer, lot: f64, name: String) -> Result<FlexibleOrder> {
    let peak = afo.profile().iter().copied().fold(0.0, f64::max);
    let lots = libm::ceil(peak / lot - EPS).max(1.0);
    order_from(afo, lots * lot, name)
}

/// How traded aggregates become orders.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderPolicy {
    pub lot: f64,
    pub tolerance: f64,
    pub price_limit: Option<f64>,
}

impl OrderPolicy {
    pub fn from_config(cfg: &MaggConfig) -> Self {
        OrderPolicy {
            lot: cfg.spt_base,
            tolerance: cfg.tolerance,
            price_limit: None,
        }
    }

    /// Conforming aggregates map to exact orders, everything else is flattened.
    pub fn order_for(&self, afo: &AggregatedFlexOffer, name: String) -> Result<FlexibleOrder> {
        let mut order = match afo_to_order(afo, self.lot, self.tolerance, name.clone()) {
            Ok(order) => order,
            Err(Error::NonConforming(_)) => afo_to_order_flattened(afo, self.lot, name)?,
            Err(e) => return Err(e),
        };
        order.price_limit = self.price_limit;
        Ok(order)
    }
}

impl Default for OrderPolicy {
    fn default() -> Self {
        OrderPolicy::from_config(&MaggConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SettlementReport {
    pub order: String,
    pub activated: bool,
    pub activation_start: Option<u32>,
    /// Volume times window prices.
    pub spot_cost: f64,
    /// Deficits bought at the regulation buy price minus surplus sold at the sell price.
    pub imbalance_cost: f64,
    pub purchased_energy: f64,
    /// Energy needed beyond the volume, kWh.
    pub deficit_energy: f64,
    /// Energy bought beyond the need, kWh.
    pub surplus_energy: f64,
    pub total_cost: f64,
}

impl SettlementReport {
    fn rejected(order: &FlexibleOrder) -> Self {
        SettlementReport {
            order: order.name.clone(),
            activated: false,
            activation_start: None,
            spot_cost: 0.0,
            imbalance_cost: 0.0,
            purchased_energy: 0.0,
            deficit_energy: 0.0,
            surplus_energy: 0.0,
            total_cost: 0.0,
        }
    }
}

/// The cheapest window start in `[begin, latest_start]`; ties go to the earliest.
pub fn cheapest_start(curve: &PriceCurve, begin: u32, latest_start: u32, duration: usize) -> Result<u32> {
    curve.check_span(latest_start as usize, duration)?;
    let mut best = (begin, curve.window_sum(begin as usize, duration));
    for h in begin + 1..=latest_start {
        let sum = curve.window_sum(h as usize, duration);
        if sum < best.1 {
            best = (h, sum);
        }
    }
    Ok(best.0)
}

/// Activates an order in its cheapest window and settles the imbalance.
///
/// If the average price of that window exceeds a finite price limit the order
/// is not activated and settles to zero.
pub fn activate(order: &FlexibleOrder, curve: &PriceCurve, reg: &RegulationModel) -> Result<SettlementReport> {
    order.validate()?;
    let duration = order.duration as usize;
    let start = cheapest_start(curve, order.begin, order.latest_start(), duration)?;
    let window = curve.window_sum(start as usize, duration);
    if let Some(limit) = order.price_limit {
        if window / duration as f64 > limit {
            return Ok(SettlementReport::rejected(order));
        }
    }
    let volume_mw = kw_to_mw(order.volume);
    let spot_cost = volume_mw * window;
    let (mut deficit, mut surplus, mut imbalance_cost) = (0.0, 0.0, 0.0);
    for (k, need) in order.demand.iter().enumerate() {
        let spot = curve.price(start as usize + k);
        let diff = need - order.volume;
        if diff > 0.0 {
            deficit += diff;
            imbalance_cost += kw_to_mw(diff) * reg.buy_price(spot);
        } else if diff < 0.0 {
            surplus -= diff;
            imbalance_cost += kw_to_mw(diff) * reg.sell_price(spot);
        }
    }
    Ok(SettlementReport {
        order: order.name.clone(),
        activated: true,
        activation_start: Some(start),
        spot_cost,
        imbalance_cost,
        purchased_energy: order.purchased_energy(),
        deficit_energy: deficit,
        surplus_energy: surplus,
        total_cost: spot_cost + imbalance_cost,
    })
}

/// Every offer charged from its earliest start.
pub fn plugin_cost<'a, I>(fos: I, curve: &PriceCurve) -> Result<f64>
where
    I: IntoIterator<Item = &'a FlexOffer>,
{
    fos.into_iter()
        .map(|f| curve.profile_cost(f.profile(), f.earliest_start() as usize))
        .sum()
}

/// Cheapest start of one offer inside its window and the horizon.
pub fn optimal_start(fo: &FlexOffer, curve: &PriceCurve) -> Result<u32> {
    let m = fo.len();
    let last_fit = curve.horizon().checked_sub(m).ok_or(Error::HorizonExceeded {
        needed: m,
        horizon: curve.horizon(),
    })? as u32;
    if fo.earliest_start() > last_fit {
        return Err(Error::HorizonExceeded {
            needed: fo.earliest_start() as usize + m,
            horizon: curve.horizon(),
        });
    }
    let latest = fo.latest_start().min(last_fit);
    let mut best = (fo.earliest_start(), f64::INFINITY);
    for s in fo.earliest_start()..=latest {
        let c = curve.profile_cost(fo.profile(), s as usize)?;
        if c < best.1 {
            best = (s, c);
        }
    }
    Ok(best.0)
}

/// Every offer charged in its own cheapest window: a lower bound no order set can beat.
pub fn optimal_cost<'a, I>(fos: I, curve: &PriceCurve) -> Result<f64>
where
    I: IntoIterator<Item = &'a FlexOffer>,
{
    fos.into_iter()
        .map(|f| curve.profile_cost(f.profile(), optimal_start(f, curve)? as usize))
        .sum()
}

fn add_profile(schedule: &mut [f64], profile: &[f64], start: usize) {
    for (slot, p) in schedule[start..start + profile.len()].iter_mut().zip(profile) {
        *slot += p;
    }
}

/// Hourly power (kW) drawn by plug-in charging.
pub fn plugin_schedule(fos: &[FlexOffer], curve: &PriceCurve) -> Result<Vec<f64>> {
    let mut schedule = vec![0.0; curve.horizon()];
    for f in fos {
        curve.check_span(f.earliest_start() as usize, f.len())?;
        add_profile(&mut schedule, f.profile(), f.earliest_start() as usize);
    }
    Ok(schedule)
}

/// Hourly power (kW) drawn when each offer runs in its own cheapest window.
pub fn optimal_schedule(fos: &[FlexOffer], curve: &PriceCurve) -> Result<Vec<f64>> {
    let mut schedule = vec![0.0; curve.horizon()];
    for f in fos {
        add_profile(&mut schedule, f.profile(), optimal_start(f, curve)? as usize);
    }
    Ok(schedule)
}

fn pct(part: f64, whole: f64) -> f64 {
    if whole == 0.0 {
        0.0
    } else {
        100.0 * part / whole
    }
}

/// Cost comparison of one aggregation result.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeReport {
    pub plugin_cost: f64,
    /// Orders plus plug-in charging of everything not covered by an activated order.
    pub flexorder_cost: f64,
    pub optimal_cost: f64,
    pub cost_reduction_pct: f64,
    pub optimal_reduction_pct: f64,
    /// Share of offers inside traded aggregates.
    pub participation_pct: f64,
    /// Energy of traded aggregates over the energy of all offers.
    pub traded_energy_pct: f64,
    pub needed_energy: f64,
    /// Energy needed by the traded aggregates.
    pub traded_energy: f64,
    /// Energy bought through orders.
    pub purchased_energy: f64,
    pub orders: Vec<FlexibleOrder>,
    pub settlements: Vec<SettlementReport>,
    /// Hourly power bought (kW): order volumes over their windows plus plug-in
    /// charging of the rest.
    pub schedule: Vec<f64>,
}

impl TradeReport {
    /// Purchased over needed energy of the traded aggregates.
    pub fn purchase_ratio(&self) -> f64 {
        if self.traded_energy == 0.0 {
            0.0
        } else {
            self.purchased_energy / self.traded_energy
        }
    }
}

struct Settled {
    orders: Vec<FlexibleOrder>,
    settlements: Vec<SettlementReport>,
}

fn settle_orders(result: &MaggResult, curve: &PriceCurve, reg: &RegulationModel, policy: &OrderPolicy) -> Result<Settled> {
    let orders = result
        .orders
        .iter()
        .enumerate()
        .map(|(i, afo)| policy.order_for(afo, format!("F{}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let settlements = orders
        .iter()
        .map(|o| activate(o, curve, reg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Settled { orders, settlements })
}

/// Settles a result's traded aggregates as orders and compares the cost with
/// plug-in and per-offer optimal charging.
pub fn evaluate(
    fos: &[FlexOffer],
    result: &MaggResult,
    curve: &PriceCurve,
    reg: &RegulationModel,
    policy: &OrderPolicy,
) -> Result<TradeReport> {
    if fos.is_empty() {
        return Err(Error::EmptyInput("offer set"));
    }
    let by_id: BTreeMap<u32, &FlexOffer> = fos.iter().map(|f| (f.id(), f)).collect();
    let Settled { orders, settlements } = settle_orders(result, curve, reg, policy)?;

    let mut covered = alloc::collections::BTreeSet::new();
    let mut schedule = vec![0.0; curve.horizon()];
    let mut order_cost = 0.0;
    for ((afo, order), s) in result.orders.iter().zip(&orders).zip(&settlements) {
        if let Some(start) = s.activation_start {
            for id in afo.constituents() {
                if !by_id.contains_key(&id) {
                    return Err(Error::InvalidInput("afos", format!("constituent {id} is not in the offer set")));
                }
                covered.insert(id);
            }
            order_cost += s.total_cost;
            for slot in &mut schedule[start as usize..(start + order.duration) as usize] {
                *slot += order.volume;
            }
        }
    }
    let rest: Vec<&FlexOffer> = fos.iter().filter(|f| !covered.contains(&f.id())).collect();
    for f in &rest {
        curve.check_span(f.earliest_start() as usize, f.len())?;
        add_profile(&mut schedule, f.profile(), f.earliest_start() as usize);
    }

    let plugin = plugin_cost(fos, curve)?;
    let optimal = optimal_cost(fos, curve)?;
    let flexorder = order_cost + plugin_cost(rest.iter().copied(), curve)?;
    let needed: f64 = fos.iter().map(FlexOffer::energy).sum();
    let traded: f64 = result.orders.iter().map(|a| a.energy()).sum();
    let purchased = settlements.iter().map(|s| s.purchased_energy).sum();

    Ok(TradeReport {
        plugin_cost: plugin,
        flexorder_cost: flexorder,
        optimal_cost: optimal,
        cost_reduction_pct: pct(plugin - flexorder, plugin),
        optimal_reduction_pct: pct(plugin - optimal, plugin),
        participation_pct: pct(result.traded_ids().len() as f64, fos.len() as f64),
        traded_energy_pct: pct(traded, needed),
        needed_energy: needed,
        traded_energy: traded,
        purchased_energy: purchased,
        orders,
        settlements,
        schedule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DropoutRow {
    pub q: f64,
    pub dropped: usize,
    /// EUR/kWh paid by the remaining participants when orders are used.
    pub flexible_price: f64,
    /// EUR/kWh the participants would pay with plug-in charging.
    pub plugin_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DropoutTable {
    pub rows: Vec<DropoutRow>,
    /// Smallest grid `q` at which the flexible price exceeds the plug-in price.
    pub break_even_q: Option<f64>,
}

/// Consumer price when a share `q` of the participating EVs turns out not to
/// need the energy bought for them.
///
/// Dropped EVs are drawn once from a seeded shuffle of the participants, so
/// the dropped set grows with `q`. Their energy is sold back at the regulation
/// sell price in the hours it was bought; the remaining cost is spread over
/// the energy of the EVs that stay.
pub fn dropout_analysis(
    fos: &[FlexOffer],
    result: &MaggResult,
    curve: &PriceCurve,
    reg: &RegulationModel,
    policy: &OrderPolicy,
    q_grid: &[f64],
    seed: u64,
) -> Result<DropoutTable> {
    if let Some(q) = q_grid.iter().find(|q| !(0.0..1.0).contains(*q)) {
        return Err(Error::InvalidInput("q", format!("{q} is outside [0, 1)")));
    }
    let by_id: BTreeMap<u32, &FlexOffer> = fos.iter().map(|f| (f.id(), f)).collect();
    let Settled { settlements, .. } = settle_orders(result, curve, reg, policy)?;

    // Participant id -> hour it starts drawing energy under its order.
    let mut placement: BTreeMap<u32, u32> = BTreeMap::new();
    let mut orders_cost = 0.0;
    for (afo, s) in result.orders.iter().zip(&settlements) {
        let Some(start) = s.activation_start else { continue };
        orders_cost += s.total_cost;
        for (id, aligned) in afo.alignment().iter() {
            placement.insert(id, aligned + start - afo.earliest_start());
        }
    }
    if placement.is_empty() {
        return Err(Error::EmptyInput("participant set"));
    }
    let participants: Vec<(&FlexOffer, u32)> = placement
        .iter()
        .map(|(id, start)| {
            by_id
                .get(id)
                .map(|f| (*f, *start))
                .ok_or_else(|| Error::InvalidInput("afos", format!("constituent {id} is not in the offer set")))
        })
        .collect::<Result<_>>()?;

    let total_energy: f64 = participants.iter().map(|(f, _)| f.energy()).sum();
    let plugin_price = plugin_cost(participants.iter().map(|(f, _)| *f), curve)? / total_energy;

    let mut order: Vec<usize> = (0..participants.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let k = libm::floor(q * participants.len() as f64 + EPS) as usize;
        let k = k.min(participants.len() - 1);
        let (mut revenue, mut dropped_energy) = (0.0, 0.0);
        for &i in &order[..k] {
            let (f, start) = participants[i];
            dropped_energy += f.energy();
            for (h, p) in f.profile().iter().enumerate() {
                revenue += kw_to_mw(*p) * reg.sell_price(curve.price(start as usize + h));
            }
        }
        rows.push(DropoutRow {
            q,
            dropped: k,
            flexible_price: (orders_cost - revenue) / (total_energy - dropped_energy),
            plugin_price,
        });
    }
    let break_even_q = rows.iter().find(|r| r.flexible_price > r.plugin_price).map(|r| r.q);
    Ok(DropoutTable { rows, break_even_q })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct YearlySweep {
    /// Cost reduction vs plug-in for each 48 h period, in percent.
    pub reductions: Vec<f64>,
    pub mean_reduction: f64,
}

/// Settles one aggregation result against every two-day window of a year of
/// hourly prices (`365 * 24` values, day-major).
pub fn sweep_periods(
    fos: &[FlexOffer],
    result: &MaggResult,
    daily_prices: &[f64],
    reg: &RegulationModel,
    policy: &OrderPolicy,
) -> Result<YearlySweep> {
    if daily_prices.len() != DAYS_PER_YEAR * HOURS_PER_DAY {
        return Err(Error::InvalidInput(
            "prices",
            format!(
                "a year needs {} hourly prices, got {}",
                DAYS_PER_YEAR * HOURS_PER_DAY,
                daily_prices.len()
            ),
        ));
    }
    let periods = DAYS_PER_YEAR - 1;
    let mut reductions = Vec::with_capacity(periods);
    for day in 0..periods {
        let from = day * HOURS_PER_DAY;
        let curve = PriceCurve::new(daily_prices[from..from + 2 * HOURS_PER_DAY].to_vec())?;
        reductions.push(evaluate(fos, result, &curve, reg, policy)?.cost_reduction_pct);
    }
    let mean_reduction = reductions.iter().sum::<f64>() / periods as f64;
    Ok(YearlySweep {
        reductions,
        mean_reduction,
    })
}

/// Aggregates once (aggregation does not look at prices) and settles every period.
pub fn yearly_sweep(
    fos: &[FlexOffer],
    method: Method,
    cfg: &MaggConfig,
    daily_prices: &[f64],
    reg: &RegulationModel,
) -> Result<YearlySweep> {
    let result = run_method(fos, method, cfg)?;
    sweep_periods(fos, &result, daily_prices, reg, &OrderPolicy::from_config(cfg))
}
