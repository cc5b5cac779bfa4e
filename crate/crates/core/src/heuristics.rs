//! Heuristic market-based aggregation (HMA).
//!
//! Each round picks an initial offer, grows it by pairwise aggregation with
//! the rest of the processing set, and records the largest aggregate whose
//! slices all sit in the band around a lot multiple. Rounds repeat on the
//! remaining offers until nothing is left or the remainder cannot beat the
//! smallest of the aggregates that will be traded.
//!
//! The three variants differ only in how a round is initialized:
//!
//! - [`Variant::Lp`]: start from the most flexible of the longest offers.
//! - [`Variant::Dp`]: drop offers longer than the upper fence of profile lengths first.
//! - [`Variant::Dtf`]: raise the flexibility threshold to the lower fence of time
//!   flexibilities and drop offers below it.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::aggregation::{self, enumerate_binary_alignments, place_pair_into, AggregatedFlexOffer};
use crate::fences;
use crate::model::{coefficient_of_variation, rmse_to_target, FlexOffer};
use crate::{Error, Result, EPS};

/// Flexible-order trade lot in kW.
pub const DEFAULT_LOT_KW: f64 = 100.0;
/// Longest admissible order duration in hours.
pub const MAX_ORDER_SLICES: usize = 23;
pub const DEFAULT_TOLERANCE_KW: f64 = 5.0;
/// Flexible orders a BRP may place per trading day.
pub const DEFAULT_MAX_ORDERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    Lp,
    Dp,
    Dtf,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lp, Variant::Dp, Variant::Dtf];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lp => "lp",
            Variant::Dp => "dp",
            Variant::Dtf => "dtf",
        }
    }
}

/// Any of the five aggregation methods: the two baselines or an HMA variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Sa,
    Sag,
    Magg(Variant),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Sa,
        Method::Sag,
        Method::Magg(Variant::Lp),
        Method::Magg(Variant::Dp),
        Method::Magg(Variant::Dtf),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sa => "sa",
            Method::Sag => "sag",
            Method::Magg(v) => v.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sa" => Ok(Method::Sa),
            "sag" => Ok(Method::Sag),
            "lp" => Ok(Method::Magg(Variant::Lp)),
            "dp" => Ok(Method::Magg(Variant::Dp)),
            "dtf" => Ok(Method::Magg(Variant::Dtf)),
            other => Err(Error::InvalidInput(
                "variant",
                format!("unknown method `{other}` (expected sa, sag, lp, dp or dtf)"),
            )),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Method>()? {
            Method::Magg(v) => Ok(v),
            m => Err(Error::InvalidInput(
                "variant",
                format!("`{m}` is a baseline, not an HMA variant"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MaggConfig {
    pub variant: Variant,
    /// Lot size in kW; band targets are positive multiples of it.
    pub spt_base: f64,
    /// Maximum aggregate length in slices.
    pub ppt: usize,
    /// Per-slice amount deviation `e` in kW. Zero means exact lot multiples.
    pub tolerance: f64,
    pub max_orders: usize,
}

impl Default for MaggConfig {
    fn default() -> Self {
        MaggConfig::new(Variant::Lp)
    }
}

impl MaggConfig {
    pub fn new(variant: Variant) -> Self {
        MaggConfig {
            variant,
            spt_base: DEFAULT_LOT_KW,
            ppt: MAX_ORDER_SLICES,
            tolerance: DEFAULT_TOLERANCE_KW,
            max_orders: DEFAULT_MAX_ORDERS,
        }
    }

    /// A different lot with the tolerance kept at 5% of it.
    pub fn with_lot(mut self, lot: f64) -> Self {
        self.spt_base = lot;
        self.tolerance = lot * DEFAULT_TOLERANCE_KW / DEFAULT_LOT_KW;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spt_base > 0.0) || !self.spt_base.is_finite() {
            return Err(Error::InvalidInput("spt_base", format!("{} must be positive", self.spt_base)));
        }
        if !(1..=MAX_ORDER_SLICES).contains(&self.ppt) {
            return Err(Error::InvalidInput(
                "ppt",
                format!("{} must lie in [1, {MAX_ORDER_SLICES}]", self.ppt),
            ));
        }
        if !(self.tolerance >= 0.0 && self.tolerance < self.spt_base / 2.0) {
            return Err(Error::InvalidInput(
                "tolerance",
                format!("{} must lie in [0, spt_base/2)", self.tolerance),
            ));
        }
        if self.max_orders == 0 {
            return Err(Error::InvalidInput("max_orders", "must be at least 1".into()));
        }
        Ok(())
    }
}

/// True iff `power` is inside the band around `target`: strict `(t - e, t + e)`,
/// or equality up to rounding when `e` is zero.
pub fn in_band(power: f64, target: f64, tolerance: f64) -> bool {
    if tolerance > 0.0 {
        target - tolerance < power && power < target + tolerance
    } else {
        (power - target).abs() <= EPS * target.abs().max(1.0)
    }
}

/// The shared lot multiple `x >= 1` such that every slice is within the band
/// around `x * lot`, if there is one.
pub fn band_multiple(profile: &[f64], lot: f64, tolerance: f64) -> Option<u32> {
    let first = *profile.first()?;
    let x = libm::round(first / lot);
    if x < 1.0 {
        return None;
    }
    let target = x * lot;
    profile
        .iter()
        .all(|&p| in_band(p, target, tolerance))
        .then_some(x as u32)
}

/// Whether an aggregate can become a flexible order: at least one hour of
/// flexibility, between 1 and `ppt` slices, and all slices on one lot multiple.
pub fn is_order_conforming(f: &FlexOffer, cfg: &MaggConfig) -> bool {
    f.time_flexibility() >= 1
        && (1..=cfg.ppt).contains(&f.len())
        && band_multiple(f.profile(), cfg.spt_base, cfg.tolerance).is_some()
}

/// Output of one initialization phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    /// Offers to aggregate with, excluding the initial one.
    pub processing: Vec<FlexOffer>,
    /// Offers held out of this round.
    pub excluded: Vec<FlexOffer>,
    pub initial: FlexOffer,
    /// Minimum time flexibility for every aggregate of this round.
    pub min_flexibility: u32,
    /// DTF only: nothing passed the lower fence, so the round fell back to all offers.
    pub fell_back: bool,
}

/// Among the longest offers, the most flexible one; ties go to the lowest id.
fn most_flexible_among_longest(fos: &[FlexOffer]) -> Option<usize> {
    fos.iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.len()
                .cmp(&b.len())
                .then(a.time_flexibility().cmp(&b.time_flexibility()))
                .then(b.id().cmp(&a.id()))
        })
        .map(|(i, _)| i)
}

fn split_initial(mut processing: Vec<FlexOffer>, excluded: Vec<FlexOffer>, min_flexibility: u32, fell_back: bool) -> Result<Initialization> {
    let idx = most_flexible_among_longest(&processing).ok_or(Error::EmptyInput("offer set"))?;
    let initial = processing.remove(idx);
    Ok(Initialization {
        processing,
        excluded,
        initial,
        min_flexibility,
        fell_back,
    })
}

pub fn initialize_lp(fos: &[FlexOffer]) -> Result<Initialization> {
    split_initial(fos.to_vec(), Vec::new(), 1, false)
}

pub fn initialize_dp(fos: &[FlexOffer]) -> Result<Initialization> {
    let lengths: Vec<f64> = fos.iter().map(|f| f.len() as f64).collect();
    let fence = fences::upper_fence(&lengths).ok_or(Error::EmptyInput("offer set"))?;
    let (processing, excluded) = fos.iter().cloned().partition(|f| f.len() as f64 <= fence);
    split_initial(processing, excluded, 1, false)
}

pub fn initialize_dtf(fos: &[FlexOffer]) -> Result<Initialization> {
    let flex: Vec<f64> = fos.iter().map(|f| f.time_flexibility() as f64).collect();
    let fence = fences::lower_fence(&flex).ok_or(Error::EmptyInput("offer set"))?;
    // Flexibilities are integers, so `tf >= fence` is `tf >= ceil(fence)`.
    let threshold = (libm::ceil(fence).max(1.0)) as u32;
    let (processing, excluded): (Vec<_>, Vec<_>) =
        fos.iter().cloned().partition(|f| f.time_flexibility() >= threshold);
    if processing.is_empty() {
        return split_initial(fos.to_vec(), Vec::new(), 1, true);
    }
    split_initial(processing, excluded, threshold, false)
}

pub fn initialize(variant: Variant, fos: &[FlexOffer]) -> Result<Initialization> {
    match variant {
        Variant::Lp => initialize_lp(fos),
        Variant::Dp => initialize_dp(fos),
        Variant::Dtf => initialize_dtf(fos),
    }
}

/// Mutable state of one round.
#[derive(Debug, Clone)]
pub struct MaggState {
    pub processing: Vec<FlexOffer>,
    pub excluded: Vec<FlexOffer>,
    pub aggregates: Vec<AggregatedFlexOffer>,
    /// The growing aggregate.
    pub initial: AggregatedFlexOffer,
    pub min_flexibility: u32,
    /// Current band target in kW, a multiple of the lot.
    pub target: f64,
}

impl MaggState {
    pub fn new(init: Initialization, aggregates: Vec<AggregatedFlexOffer>, cfg: &MaggConfig) -> Self {
        MaggState {
            processing: init.processing,
            excluded: init.excluded,
            aggregates,
            initial: AggregatedFlexOffer::single(&init.initial),
            min_flexibility: init.min_flexibility,
            target: cfg.spt_base,
        }
    }
}

/// One accepted growth step of the initial aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub offer: u32,
    pub target: f64,
    pub rmse_before: f64,
    pub rmse_after: f64,
}

/// What a processing phase did, for statistics and inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProcessTrace {
    pub steps: Vec<Step>,
    /// Band target of each snapshot, in order.
    pub snapshot_targets: Vec<f64>,
    /// Pairwise aggregations evaluated.
    pub comparisons: u64,
}

/// Processing phase.
///
/// Walks the processing set in descending flexibility (ties by ascending id).
/// For each offer, every canonical alignment with the growing aggregate that
/// respects the flexibility and length thresholds and moves the profile closer
/// to the band target is a candidate; the one with the lowest coefficient of
/// variation replaces the aggregate. Whenever the aggregate lands in the band,
/// it is snapshotted, its offers leave the processing set and the target moves
/// up one lot. Only the last snapshot is added to `state.aggregates`.
pub fn process(state: &mut MaggState, cfg: &MaggConfig) -> ProcessTrace {
    let mut trace = ProcessTrace::default();
    state
        .processing
        .sort_by(|a, b| b.time_flexibility().cmp(&a.time_flexibility()).then(a.id().cmp(&b.id())));

    let mut removed = alloc::vec![false; state.processing.len()];
    let mut buffered: Vec<usize> = Vec::new();
    let mut snapshot: Option<AggregatedFlexOffer> = None;
    let mut scratch: Vec<f64> = Vec::with_capacity(cfg.ppt + 1);

    for (idx, fo) in state.processing.iter().enumerate() {
        let rmse_before = rmse_to_target(state.initial.profile(), state.target);
        let mut best: Option<(f64, f64, aggregation::PairAlignment)> = None;
        for at in enumerate_binary_alignments(&state.initial, fo) {
            trace.comparisons += 1;
            let (_, flex) = place_pair_into(&state.initial, fo, at, &mut scratch);
            if flex < state.min_flexibility || scratch.len() > cfg.ppt {
                continue;
            }
            let rmse = rmse_to_target(&scratch, state.target);
            if !(rmse < rmse_before) {
                continue;
            }
            let cv = coefficient_of_variation(&scratch);
            if best.map_or(cv < f64::INFINITY, |(best_cv, _, _)| cv < best_cv) {
                best = Some((cv, rmse, at));
            }
        }
        if let Some((_, rmse_after, at)) = best {
            state.initial = AggregatedFlexOffer::merge(&state.initial, &AggregatedFlexOffer::single(fo), at);
            buffered.push(idx);
            trace.steps.push(Step {
                offer: fo.id(),
                target: state.target,
                rmse_before,
                rmse_after,
            });
        }
        if snapshot_ready(&state.initial, state.target, cfg) {
            snapshot = Some(state.initial.clone());
            for &i in &buffered {
                removed[i] = true;
            }
            buffered.clear();
            trace.snapshot_targets.push(state.target);
            state.target += cfg.spt_base;
        }
    }

    let mut keep = removed.iter().map(|r| !r);
    state.processing.retain(|_| keep.next().unwrap_or(true));
    if let Some(afo) = snapshot {
        state.aggregates.push(afo);
    }
    trace
}

// The band check plus the order shape rules, so an unflexible initial offer
// that happens to sit on the band is never recorded.
fn snapshot_ready(f: &AggregatedFlexOffer, target: f64, cfg: &MaggConfig) -> bool {
    f.time_flexibility() >= 1
        && f.len() <= cfg.ppt
        && f.profile().iter().all(|&p| in_band(p, target, cfg.tolerance))
}

fn sort_by_energy_desc(afos: &mut [AggregatedFlexOffer]) {
    afos.sort_by(|a, b| b.energy().total_cmp(&a.energy()).then(a.id().cmp(&b.id())));
}

/// Energy of the `k`-th largest aggregate (1-based).
fn kth_largest_energy(afos: &[AggregatedFlexOffer], k: usize) -> Option<f64> {
    let mut energies: Vec<f64> = afos.iter().map(|a| a.energy()).collect();
    energies.sort_by(|a, b| b.total_cmp(a));
    energies.get(k.checked_sub(1)?).copied()
}

/// Examination phase: merges the processing and excluded sets into the next
/// round's input and decides whether another round can still matter.
pub fn examine(
    processing: Vec<FlexOffer>,
    excluded: Vec<FlexOffer>,
    aggregates: &[AggregatedFlexOffer],
    cfg: &MaggConfig,
) -> (Vec<FlexOffer>, bool) {
    let mut next = processing;
    next.extend(excluded);
    next.sort_by_key(FlexOffer::id);
    let proceed = if next.is_empty() {
        false
    } else if aggregates.len() >= cfg.max_orders {
        let remaining: f64 = next.iter().map(FlexOffer::energy).sum();
        let kth = kth_largest_energy(aggregates, cfg.max_orders).unwrap_or(f64::INFINITY);
        remaining >= kth
    } else {
        true
    };
    (next, proceed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaggStats {
    /// Initialization phases run.
    pub rounds: u64,
    /// Pairwise aggregations evaluated.
    pub comparisons: u64,
    /// Band snapshots taken across all rounds.
    pub snapshots: u64,
    /// DTF rounds where no offer passed the lower fence.
    pub dtf_fallbacks: u64,
}

/// Result of an aggregation run.
///
/// For the HMA variants every traded aggregate is order-conforming. The
/// baselines fill the same structure with their (generally non-conforming)
/// aggregates; those are traded as flattened orders.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaggResult {
    /// The up to `max_orders` largest-energy aggregates, largest first.
    pub orders: Vec<AggregatedFlexOffer>,
    /// Every completed aggregate, in creation order.
    pub all_afos: Vec<AggregatedFlexOffer>,
    /// Offers that ended up in no aggregate at all.
    pub leftover: Vec<FlexOffer>,
    pub stats: MaggStats,
}

impl MaggResult {
    fn from_aggregates(all_afos: Vec<AggregatedFlexOffer>, leftover: Vec<FlexOffer>, max_orders: usize, stats: MaggStats) -> Self {
        let mut orders = all_afos.clone();
        sort_by_energy_desc(&mut orders);
        orders.truncate(max_orders);
        MaggResult {
            orders,
            all_afos,
            leftover,
            stats,
        }
    }

    /// Total slice power of the traded aggregates.
    pub fn objective_energy(&self) -> f64 {
        self.orders.iter().map(|a| a.energy()).sum()
    }

    /// Ids of offers inside traded aggregates.
    pub fn traded_ids(&self) -> BTreeSet<u32> {
        self.orders.iter().flat_map(|a| a.constituents()).collect()
    }

    /// Offers from `fos` that are not inside a traded aggregate.
    pub fn untraded<'a>(&self, fos: &'a [FlexOffer]) -> Vec<&'a FlexOffer> {
        let traded = self.traded_ids();
        fos.iter().filter(|f| !traded.contains(&f.id())).collect()
    }
}

fn check_unique_ids(fos: &[FlexOffer]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for f in fos {
        if !seen.insert(f.id()) {
            return Err(Error::InvalidInput("id", format!("offer id {} appears twice", f.id())));
        }
    }
    Ok(())
}

/// Runs HMA with the configured variant.
///
/// Every round retires its initial offer, either into the recorded aggregate
/// or into the leftover set, so the input shrinks each round and the loop
/// always terminates.
pub fn run_magg(fos: &[FlexOffer], cfg: &MaggConfig) -> Result<MaggResult> {
    cfg.validate()?;
    if fos.is_empty() {
        return Err(Error::EmptyInput("offer set"));
    }
    check_unique_ids(fos)?;

    let mut stats = MaggStats::default();
    let mut remaining: Vec<FlexOffer> = fos.to_vec();
    remaining.sort_by_key(FlexOffer::id);
    let mut aggregates: Vec<AggregatedFlexOffer> = Vec::new();
    let mut leftover: Vec<FlexOffer> = Vec::new();

    loop {
        stats.rounds += 1;
        let init = initialize(cfg.variant, &remaining)?;
        if init.fell_back {
            stats.dtf_fallbacks += 1;
        }
        let initial = init.initial.clone();
        let before = aggregates.len();
        let mut state = MaggState::new(init, aggregates, cfg);
        let trace = process(&mut state, cfg);
        stats.comparisons += trace.comparisons;
        stats.snapshots += trace.snapshot_targets.len() as u64;
        aggregates = state.aggregates;
        if aggregates.len() == before {
            leftover.push(initial);
        }
        let (next, proceed) = examine(state.processing, state.excluded, &aggregates, cfg);
        remaining = next;
        if !proceed {
            break;
        }
    }
    leftover.extend(remaining);
    leftover.sort_by_key(FlexOffer::id);
    Ok(MaggResult::from_aggregates(aggregates, leftover, cfg.max_orders, stats))
}

/// Runs any of the five methods. Baselines trade their `max_orders` largest aggregates.
pub fn run_method(fos: &[FlexOffer], method: Method, cfg: &MaggConfig) -> Result<MaggResult> {
    match method {
        Method::Magg(variant) => run_magg(fos, &MaggConfig { variant, ..*cfg }),
        Method::Sa | Method::Sag => {
            cfg.validate()?;
            check_unique_ids(fos)?;
            let all = if method == Method::Sa {
                aggregation::sa_baseline(fos)?
            } else {
                aggregation::sag_baseline(fos)?
            };
            let stats = MaggStats {
                rounds: 1,
                ..MaggStats::default()
            };
            Ok(MaggResult::from_aggregates(all, Vec::new(), cfg.max_orders, stats))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fo(id: u32, es: u32, ls: u32, p: &[f64]) -> FlexOffer {
        FlexOffer::new(id, es, ls, p.to_vec()).unwrap()
    }

    fn fig2() -> Vec<FlexOffer> {
        vec![
            fo(1, 1, 5, &[1.0, 1.0]),
            fo(2, 2, 3, &[1.0, 1.0]),
            fo(3, 4, 5, &[1.0]),
        ]
    }

    fn desk(variant: Variant) -> MaggConfig {
        MaggConfig {
            variant,
            spt_base: 2.0,
            ppt: 23,
            tolerance: 0.1,
            max_orders: 5,
        }
    }

    /// Six offers: f1 is very long, f3 barely flexible, f6 the most flexible
    /// of the length-4 offers.
    fn box_plot_set() -> Vec<FlexOffer> {
        let four = [1.0; 4];
        vec![
            fo(1, 0, 6, &[1.0; 9]),
            fo(2, 0, 6, &four),
            fo(3, 0, 1, &four),
            fo(4, 1, 7, &four),
            fo(5, 2, 8, &four),
            fo(6, 0, 10, &four),
        ]
    }

    #[test]
    fn conformity() {
        let cfg = desk(Variant::Lp);
        assert!(is_order_conforming(&fo(12, 2, 3, &[2.0, 2.0]), &cfg));
        assert!(!is_order_conforming(&fo(3, 4, 5, &[1.0]), &cfg));
        assert!(!is_order_conforming(&fo(9, 2, 2, &[2.0, 2.0]), &cfg));
        // slices on different multiples
        assert!(!is_order_conforming(&fo(9, 2, 3, &[2.0, 4.0]), &cfg));
        assert!(is_order_conforming(&fo(9, 2, 3, &[4.05, 3.95]), &cfg));
        // strict band
        assert!(!is_order_conforming(&fo(9, 2, 3, &[2.1, 2.0]), &cfg));
        let exact = MaggConfig { tolerance: 0.0, ..cfg };
        assert!(is_order_conforming(&fo(9, 2, 3, &[2.0, 2.0]), &exact));
        assert!(!is_order_conforming(&fo(9, 2, 3, &[2.0, 2.01]), &exact));
        let long = MaggConfig { ppt: 1, ..cfg };
        assert!(!is_order_conforming(&fo(12, 2, 3, &[2.0, 2.0]), &long));
    }

    #[test]
    fn config_validation() {
        assert!(MaggConfig::default().validate().is_ok());
        assert!(MaggConfig { ppt: 24, ..MaggConfig::default() }.validate().is_err());
        assert!(MaggConfig { ppt: 0, ..MaggConfig::default() }.validate().is_err());
        assert!(MaggConfig { tolerance: 50.0, ..MaggConfig::default() }.validate().is_err());
        assert!(MaggConfig { spt_base: 0.0, ..MaggConfig::default() }.validate().is_err());
        assert!(MaggConfig { max_orders: 0, ..MaggConfig::default() }.validate().is_err());
        let cfg = MaggConfig::default().with_lot(2.0);
        assert!((cfg.tolerance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("xyz".parse::<Method>().is_err());
        assert!("sa".parse::<Variant>().is_err());
        assert_eq!("DTF".parse::<Variant>().unwrap(), Variant::Dtf);
    }

    #[test]
    fn lp_initialization() {
        let init = initialize_lp(&fig2()).unwrap();
        assert_eq!(init.initial.id(), 1);
        assert_eq!(init.processing.len(), 2);
        assert!(init.excluded.is_empty());
        assert_eq!(init.min_flexibility, 1);

        let single = initialize_lp(&fig2()[..1]).unwrap();
        assert!(single.processing.is_empty());

        let same = [fo(7, 0, 2, &[1.0]), fo(3, 0, 2, &[1.0]), fo(5, 0, 2, &[1.0])];
        assert_eq!(initialize_lp(&same).unwrap().initial.id(), 3);
    }

    #[test]
    fn dp_initialization() {
        let init = initialize_dp(&box_plot_set()).unwrap();
        assert_eq!(init.initial.id(), 6);
        assert_eq!(init.excluded.iter().map(FlexOffer::id).collect::<Vec<_>>(), [1]);
        assert_eq!(init.processing.len(), 4);

        let equal = [fo(1, 0, 2, &[1.0; 3]), fo(2, 0, 4, &[1.0; 3])];
        assert!(initialize_dp(&equal).unwrap().excluded.is_empty());

        let lens: Vec<FlexOffer> = (0..6)
            .map(|i| fo(i, 0, 30, &vec![1.0; if i == 5 { 20 } else { 1 }]))
            .collect();
        let init = initialize_dp(&lens).unwrap();
        assert_eq!(init.excluded.iter().map(FlexOffer::id).collect::<Vec<_>>(), [5]);
    }

    #[test]
    fn dtf_initialization() {
        let init = initialize_dtf(&box_plot_set()).unwrap();
        assert_eq!(init.min_flexibility, 6);
        assert_eq!(init.initial.id(), 1);
        assert_eq!(init.excluded.iter().map(FlexOffer::id).collect::<Vec<_>>(), [3]);

        let equal = [fo(1, 0, 3, &[1.0]), fo(2, 1, 4, &[1.0])];
        let init = initialize_dtf(&equal).unwrap();
        assert_eq!(init.min_flexibility, 3);
        assert!(init.excluded.is_empty());

        let tfs = [6, 6, 7, 7, 8, 0];
        let set: Vec<FlexOffer> = tfs.iter().enumerate().map(|(i, &t)| fo(i as u32, 0, t, &[1.0])).collect();
        let init = initialize_dtf(&set).unwrap();
        assert_eq!(init.min_flexibility, 5);
        assert_eq!(init.excluded.iter().map(FlexOffer::id).collect::<Vec<_>>(), [5]);

        let rigid = [fo(1, 0, 0, &[1.0]), fo(2, 3, 3, &[1.0])];
        let init = initialize_dtf(&rigid).unwrap();
        assert!(init.fell_back);
        assert_eq!(init.min_flexibility, 1);
    }

    #[test]
    fn process_builds_f12() {
        let cfg = desk(Variant::Lp);
        let fos = fig2();
        let init = initialize_lp(&fos).unwrap();
        let mut state = MaggState::new(init, Vec::new(), &cfg);
        let trace = process(&mut state, &cfg);
        assert_eq!(state.aggregates.len(), 1);
        let f12 = &state.aggregates[0];
        assert_eq!(f12.profile(), &[2.0, 2.0]);
        assert_eq!((f12.earliest_start(), f12.latest_start()), (2, 3));
        assert_eq!(trace.snapshot_targets, [2.0]);
        assert_eq!(state.target, 4.0);
        assert_eq!(trace.steps[0].offer, 2);
        assert_eq!(trace.steps[0].rmse_after, 0.0);
        assert_eq!(trace.steps[0].rmse_before, 1.0);
        // f3 stays in the processing set
        assert_eq!(state.processing.iter().map(FlexOffer::id).collect::<Vec<_>>(), [3]);
    }

    #[test]
    fn process_snapshots_initial_already_in_band() {
        let cfg = desk(Variant::Lp);
        let init = Initialization {
            processing: vec![fo(2, 20, 20, &[5.0])],
            excluded: Vec::new(),
            initial: fo(1, 0, 1, &[2.0, 2.0]),
            min_flexibility: 1,
            fell_back: false,
        };
        let mut state = MaggState::new(init, Vec::new(), &cfg);
        let trace = process(&mut state, &cfg);
        assert!(trace.steps.is_empty());
        assert_eq!(trace.snapshot_targets, [2.0]);
        assert_eq!(state.target, 4.0);
        assert_eq!(state.aggregates.len(), 1);
    }

    #[test]
    fn process_without_candidates_is_a_no_op() {
        let cfg = desk(Variant::Lp);
        let init = Initialization {
            processing: vec![fo(2, 20, 20, &[5.0])],
            excluded: Vec::new(),
            initial: fo(1, 0, 1, &[1.0]),
            min_flexibility: 1,
            fell_back: false,
        };
        let mut state = MaggState::new(init, Vec::new(), &cfg);
        let trace = process(&mut state, &cfg);
        assert!(trace.steps.is_empty() && trace.snapshot_targets.is_empty());
        assert!(state.aggregates.is_empty());
        assert_eq!(state.processing.len(), 1);
        assert_eq!(state.target, 2.0);

        let mut empty = MaggState::new(
            Initialization {
                processing: Vec::new(),
                excluded: Vec::new(),
                initial: fo(1, 0, 1, &[2.0]),
                min_flexibility: 1,
                fell_back: false,
            },
            Vec::new(),
            &cfg,
        );
        let trace = process(&mut empty, &cfg);
        assert_eq!(trace, ProcessTrace::default());
        assert!(empty.aggregates.is_empty());
    }

    #[test]
    fn examine_rules() {
        let cfg = desk(Variant::Lp);
        let (next, go) = examine(Vec::new(), Vec::new(), &[], &cfg);
        assert!(next.is_empty() && !go);

        let big = |id| AggregatedFlexOffer::single(&fo(id, 0, 1, &[500.0]));
        let afs: Vec<_> = (1..=5).map(big).collect();
        let (_, go) = examine(vec![fo(10, 0, 1, &[10.0])], Vec::new(), &afs, &cfg);
        assert!(!go);
        let (next, go) = examine(vec![fo(10, 0, 1, &[10.0])], vec![fo(9, 0, 1, &[1.0])], &afs[..3], &cfg);
        assert!(go);
        assert_eq!(next.iter().map(FlexOffer::id).collect::<Vec<_>>(), [9, 10]);
    }

    #[test]
    fn run_on_fig2() {
        for v in Variant::ALL {
            let res = run_magg(&fig2(), &desk(v)).unwrap();
            assert_eq!(res.orders.len(), 1, "{v:?}");
            assert_eq!(res.objective_energy(), 4.0);
            assert_eq!(res.leftover.iter().map(FlexOffer::id).collect::<Vec<_>>(), [3]);
        }
    }

    #[test]
    fn rigid_pair_trades_nothing() {
        let fos = [fo(1, 0, 0, &[1.0]), fo(2, 0, 0, &[1.0])];
        let res = run_magg(&fos, &desk(Variant::Lp)).unwrap();
        assert!(res.orders.is_empty());
        assert_eq!(res.leftover, fos);
        assert_eq!(res.objective_energy(), 0.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let fos = [fo(1, 0, 2, &[1.0]), fo(1, 0, 2, &[1.0])];
        assert!(run_magg(&fos, &desk(Variant::Lp)).is_err());
        assert!(run_magg(&[], &desk(Variant::Lp)).is_err());
    }

    #[test]
    fn baselines_through_run_method() {
        let sa = run_method(&fig2(), Method::Sa, &desk(Variant::Lp)).unwrap();
        assert_eq!(sa.orders.len(), 1);
        assert_eq!(sa.orders[0].profile(), &[1.0, 2.0, 1.0, 1.0]);
        let sag = run_method(&fig2(), Method::Sag, &desk(Variant::Lp)).unwrap();
        assert_eq!(sag.all_afos.len(), 3);
        assert_eq!(sag.orders[0].constituent_count(), 1);
    }
}
