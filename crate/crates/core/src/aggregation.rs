//! Alignment semantics and flex-offer aggregation.
//!
//! An alignment fixes an absolute start hour for every constituent. Summing
//! the constituent profiles at those starts gives the aggregated profile; the
//! aggregate may still move right by the smallest residual flexibility among
//! its constituents.
//!
//! Only left-normalized ("canonical") alignments are produced or accepted:
//! at least one constituent sits at its own earliest start. Any other
//! alignment is a canonical one shifted right, which the aggregate's own
//! flexibility already covers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::model::FlexOffer;
use crate::{Error, Result};

/// Absolute start hour per constituent id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Alignment(BTreeMap<u32, u32>);

impl Alignment {
    pub fn new() -> Self {
        Alignment(BTreeMap::new())
    }

    /// Every offer at its earliest start.
    pub fn at_earliest(fos: &[FlexOffer]) -> Self {
        fos.iter().map(|f| (f.id(), f.earliest_start())).collect()
    }

    pub fn set(&mut self, id: u32, start: u32) {
        self.0.insert(id, start);
    }

    pub fn start_of(&self, id: u32) -> Option<u32> {
        self.0.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().map(|(&id, &start)| (id, start))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that the alignment covers exactly `fos`, keeps every start inside
    /// its window and is left-normalized.
    pub fn check(&self, fos: &[FlexOffer]) -> Result<()> {
        if self.0.len() != fos.len() {
            return Err(Error::InvalidAlignment(format!(
                "{} starts for {} offers",
                self.0.len(),
                fos.len()
            )));
        }
        let mut min_shift = u32::MAX;
        for f in fos {
            let start = self.start_of(f.id()).ok_or_else(|| {
                Error::InvalidAlignment(format!("no start for offer {}", f.id()))
            })?;
            if start < f.earliest_start() || start > f.latest_start() {
                return Err(Error::InvalidAlignment(format!(
                    "offer {} placed at {start}, outside [{}, {}]",
                    f.id(),
                    f.earliest_start(),
                    f.latest_start()
                )));
            }
            min_shift = min_shift.min(start - f.earliest_start());
        }
        if min_shift != 0 {
            return Err(Error::InvalidAlignment(format!(
                "not left-normalized: every offer is shifted by at least {min_shift}"
            )));
        }
        Ok(())
    }
}

impl FromIterator<(u32, u32)> for Alignment {
    fn from_iter<I: IntoIterator<Item = (u32, u32)>>(iter: I) -> Self {
        Alignment(iter.into_iter().collect())
    }
}

/// Absolute starts for a pair of offers, in argument order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairAlignment {
    pub first: u32,
    pub second: u32,
}

/// A flex-offer produced by summing constituents at a given alignment.
///
/// The embedded offer carries the id of the lowest constituent. Its profile
/// may contain zero slices where no constituent is active.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AggregatedFlexOffer {
    offer: FlexOffer,
    alignment: Alignment,
}

impl Deref for AggregatedFlexOffer {
    type Target = FlexOffer;

    fn deref(&self) -> &FlexOffer {
        &self.offer
    }
}

impl AggregatedFlexOffer {
    /// A lone offer at its earliest start.
    pub fn single(fo: &FlexOffer) -> Self {
        let mut alignment = Alignment::new();
        alignment.set(fo.id(), fo.earliest_start());
        AggregatedFlexOffer {
            offer: fo.clone(),
            alignment,
        }
    }

    /// Rebuilds an aggregate from stored parts after checking them against the constituents.
    pub fn from_parts(offer: FlexOffer, alignment: Alignment, constituents: &[FlexOffer]) -> Result<Self> {
        let rebuilt = aggregate_at(constituents, &alignment)?;
        if rebuilt.earliest_start() != offer.earliest_start()
            || rebuilt.latest_start() != offer.latest_start()
            || rebuilt.len() != offer.len()
        {
            return Err(Error::InvalidAlignment(format!(
                "aggregate {} does not match its constituents",
                offer.id()
            )));
        }
        Ok(AggregatedFlexOffer { offer, alignment })
    }

    pub fn offer(&self) -> &FlexOffer {
        &self.offer
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    pub fn constituents(&self) -> impl Iterator<Item = u32> + '_ {
        self.alignment.ids()
    }

    pub fn constituent_count(&self) -> usize {
        self.alignment.len()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.alignment.start_of(id).is_some()
    }

    /// Sums two aggregates placed at the given starts.
    pub(crate) fn merge(a: &Self, b: &Self, at: PairAlignment) -> Self {
        let (earliest, flex, profile) = place_pair(a, b, at);
        let shift_a = at.first - a.earliest_start();
        let shift_b = at.second - b.earliest_start();
        let alignment = a
            .alignment
            .iter()
            .map(|(id, s)| (id, s + shift_a))
            .chain(b.alignment.iter().map(|(id, s)| (id, s + shift_b)))
            .collect::<Alignment>();
        let id = a.id().min(b.id());
        AggregatedFlexOffer {
            offer: FlexOffer::from_parts(id, earliest, earliest + flex, profile),
            alignment,
        }
    }
}

/// Sums the profiles of `a` and `b` placed at `at`. Returns earliest start,
/// time flexibility and the summed profile.
pub(crate) fn place_pair(a: &FlexOffer, b: &FlexOffer, at: PairAlignment) -> (u32, u32, Vec<f64>) {
    let mut profile = Vec::new();
    let (earliest, flex) = place_pair_into(a, b, at, &mut profile);
    (earliest, flex, profile)
}

/// As [`place_pair`], reusing `buf` for the profile.
pub(crate) fn place_pair_into(a: &FlexOffer, b: &FlexOffer, at: PairAlignment, buf: &mut Vec<f64>) -> (u32, u32) {
    let earliest = at.first.min(at.second);
    let end = a.end_when_started_at(at.first).max(b.end_when_started_at(at.second));
    buf.clear();
    buf.resize((end - earliest) as usize, 0.0);
    for (off, p) in [
        ((at.first - earliest) as usize, a.profile()),
        ((at.second - earliest) as usize, b.profile()),
    ] {
        for (slot, v) in buf[off..off + p.len()].iter_mut().zip(p) {
            *slot += v;
        }
    }
    let flex = (a.latest_start() - at.first).min(b.latest_start() - at.second);
    (earliest, flex)
}

/// Aggregates `fos` at an explicit canonical alignment.
pub fn aggregate_at(fos: &[FlexOffer], alignment: &Alignment) -> Result<AggregatedFlexOffer> {
    if fos.is_empty() {
        return Err(Error::EmptyInput("offer set"));
    }
    alignment.check(fos)?;
    let start_of = |f: &FlexOffer| alignment.start_of(f.id()).unwrap_or(f.earliest_start());
    let earliest = fos.iter().map(start_of).min().unwrap_or(0);
    let end = fos.iter().map(|f| f.end_when_started_at(start_of(f))).max().unwrap_or(0);
    let flex = fos.iter().map(|f| f.latest_start() - start_of(f)).min().unwrap_or(0);
    let mut profile = vec![0.0; (end - earliest) as usize];
    for f in fos {
        let off = (start_of(f) - earliest) as usize;
        for (slot, v) in profile[off..off + f.len()].iter_mut().zip(f.profile()) {
            *slot += v;
        }
    }
    let id = fos.iter().map(FlexOffer::id).min().unwrap_or(0);
    Ok(AggregatedFlexOffer {
        offer: FlexOffer::from_parts(id, earliest, earliest + flex, profile),
        alignment: alignment.clone(),
    })
}

/// Aggregates with every offer at its earliest start.
pub fn start_align(fos: &[FlexOffer]) -> Result<AggregatedFlexOffer> {
    aggregate_at(fos, &Alignment::at_earliest(fos))
}

/// All canonical alignments of a pair: ascending shift of `a`, then ascending shift of `b`.
///
/// Either `a` stays at its earliest start and `b` moves through its window, or
/// `b` stays and `a` moves, giving `tf(a) + tf(b) + 1` distinct relative placements.
pub fn enumerate_binary_alignments(a: &FlexOffer, b: &FlexOffer) -> Vec<PairAlignment> {
    let mut out = Vec::with_capacity((a.time_flexibility() + b.time_flexibility() + 1) as usize);
    out.extend((0..=b.time_flexibility()).map(|sb| PairAlignment {
        first: a.earliest_start(),
        second: b.earliest_start() + sb,
    }));
    out.extend((1..=a.time_flexibility()).map(|sa| PairAlignment {
        first: a.earliest_start() + sa,
        second: b.earliest_start(),
    }));
    out
}

fn check_pair(a: &FlexOffer, b: &FlexOffer, at: PairAlignment) -> Result<()> {
    let in_window = |f: &FlexOffer, s: u32| f.earliest_start() <= s && s <= f.latest_start();
    if !in_window(a, at.first) || !in_window(b, at.second) {
        return Err(Error::InvalidAlignment(format!("{at:?} leaves a window")));
    }
    if at.first != a.earliest_start() && at.second != b.earliest_start() {
        return Err(Error::InvalidAlignment(format!("{at:?} is not left-normalized")));
    }
    Ok(())
}

/// Aggregates a growing aggregate with one more offer.
///
/// `Ok(None)` is the normal rejection: the result would be less flexible than
/// `min_flexibility` or longer than `max_slices`.
pub fn binary_aggregation(
    initial: &AggregatedFlexOffer,
    fo: &FlexOffer,
    at: PairAlignment,
    min_flexibility: u32,
    max_slices: usize,
) -> Result<Option<AggregatedFlexOffer>> {
    check_pair(initial, fo, at)?;
    if initial.contains(fo.id()) {
        return Err(Error::InvalidInput(
            "offer",
            format!("offer {} is already part of the aggregate", fo.id()),
        ));
    }
    let merged = AggregatedFlexOffer::merge(initial, &AggregatedFlexOffer::single(fo), at);
    if merged.time_flexibility() < min_flexibility || merged.len() > max_slices {
        return Ok(None);
    }
    Ok(Some(merged))
}

/// Start-alignment baseline: everything in one aggregate.
pub fn sa_baseline(fos: &[FlexOffer]) -> Result<Vec<AggregatedFlexOffer>> {
    Ok(vec![start_align(fos)?])
}

/// Start-alignment grouping baseline: one start-aligned aggregate per
/// (earliest start, time flexibility) key, in ascending key order.
pub fn sag_baseline(fos: &[FlexOffer]) -> Result<Vec<AggregatedFlexOffer>> {
    if fos.is_empty() {
        return Err(Error::EmptyInput("offer set"));
    }
    let mut groups: BTreeMap<(u32, u32), Vec<FlexOffer>> = BTreeMap::new();
    for f in fos {
        groups
            .entry((f.earliest_start(), f.time_flexibility()))
            .or_default()
            .push(f.clone());
    }
    groups.values().map(|g| start_align(g)).collect()
}
