//! Exhaustive optimum for small instances, and solution-space counting.
//!
//! The solver picks up to `max_orders` pairwise disjoint blocks of offers; a
//! block counts toward the objective when at least one canonical alignment
//! of its members yields an order-conforming aggregate. Offers outside every
//! chosen block stay unaggregated, exactly as leftovers do in the heuristics.
//!
//! Since the energy of a block does not depend on its alignment, each block's
//! alignments are searched once and the verdict memoized by member bitmask.
//! Every canonical alignment of every candidate block is still visited until
//! a conforming one is found, so the search remains exhaustive.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::aggregation::{aggregate_at, AggregatedFlexOffer, Alignment};
use crate::heuristics::{is_order_conforming, MaggConfig};
use crate::model::FlexOffer;
use crate::{Error, Result};

/// Largest instance the bitmask representation handles.
pub const MAX_EXACT_OFFERS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleResult {
    pub best_energy: f64,
    /// Conforming aggregates of the best selection, at the first conforming
    /// alignment found for each.
    pub blocks: Vec<AggregatedFlexOffer>,
    /// Canonical alignments evaluated.
    pub alignments_explored: u64,
    /// Block selections evaluated.
    pub selections_explored: u64,
}

/// Steps `offsets` through `[0, bounds[i]]` in odometer order. False when exhausted.
fn next_offsets(offsets: &mut [u32], bounds: &[u32]) -> bool {
    for (o, &b) in offsets.iter_mut().zip(bounds) {
        if *o < b {
            *o += 1;
            return true;
        }
        *o = 0;
    }
    false
}

/// First conforming aggregate of `members` over all canonical alignments.
fn conforming_block(members: &[FlexOffer], cfg: &MaggConfig, explored: &mut u64, budget: u64) -> Result<Option<AggregatedFlexOffer>> {
    let bounds: Vec<u32> = members.iter().map(FlexOffer::time_flexibility).collect();
    let mut offsets = vec![0u32; members.len()];
    loop {
        if offsets.contains(&0) {
            *explored += 1;
            if *explored > budget {
                return Err(Error::BudgetExceeded {
                    budget,
                    explored: *explored,
                });
            }
            let alignment: Alignment = members
                .iter()
                .zip(&offsets)
                .map(|(f, o)| (f.id(), f.earliest_start() + o))
                .collect();
            let afo = aggregate_at(members, &alignment)?;
            if is_order_conforming(&afo, cfg) {
                return Ok(Some(afo));
            }
        }
        if !next_offsets(&mut offsets, &bounds) {
            return Ok(None);
        }
    }
}

struct Search<'a> {
    blocks: &'a [(u32, f64)],
    max_blocks: usize,
    explored: u64,
    best: (f64, Vec<usize>),
}

impl Search<'_> {
    fn run(&mut self, from: usize, used: u32, energy: f64, chosen: &mut Vec<usize>) {
        self.explored += 1;
        if energy > self.best.0 {
            self.best = (energy, chosen.clone());
        }
        if chosen.len() == self.max_blocks {
            return;
        }
        for i in from..self.blocks.len() {
            let (mask, e) = self.blocks[i];
            if mask & used == 0 {
                chosen.push(i);
                self.run(i + 1, used | mask, energy + e, chosen);
                chosen.pop();
            }
        }
    }
}

/// Maximum traded energy over all selections of at most `cfg.max_orders`
/// disjoint conforming blocks.
///
/// `budget` caps the number of alignments evaluated; exceeding it is an error,
/// never a truncated answer.
pub fn solve_exact(fos: &[FlexOffer], cfg: &MaggConfig, budget: u64) -> Result<OracleResult> {
    cfg.validate()?;
    if fos.len() > MAX_EXACT_OFFERS {
        return Err(Error::InvalidInput(
            "offer set",
            alloc::format!("{} offers exceed the exact solver limit of {MAX_EXACT_OFFERS}", fos.len()),
        ));
    }
    let mut ids: Vec<u32> = fos.iter().map(FlexOffer::id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != fos.len() {
        return Err(Error::InvalidInput("id", "offer ids must be unique".into()));
    }

    let n = fos.len();
    let mut explored = 0u64;
    let mut candidates: Vec<(u32, f64)> = Vec::new();
    let mut aggregates: Vec<AggregatedFlexOffer> = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let members: Vec<FlexOffer> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| fos[i].clone()).collect();
        if let Some(afo) = conforming_block(&members, cfg, &mut explored, budget)? {
            candidates.push((mask, afo.energy()));
            aggregates.push(afo);
        }
    }

    let mut search = Search {
        blocks: &candidates,
        max_blocks: cfg.max_orders,
        explored: 0,
        best: (0.0, Vec::new()),
    };
    search.run(0, 0, 0.0, &mut Vec::new());
    let (best_energy, chosen) = search.best;
    Ok(OracleResult {
        best_energy,
        blocks: chosen.into_iter().map(|i| aggregates[i].clone()).collect(),
        alignments_explored: explored,
        selections_explored: search.explored,
    })
}

/// Stirling numbers of the second kind `S(n, k)` for `k = 0..=max_k`.
pub fn stirling2_row(n: usize, max_k: usize) -> Vec<BigUint> {
    let width = max_k + 1;
    let mut row = vec![BigUint::zero(); width];
    row[0] = BigUint::one();
    for i in 1..=n {
        let mut next = vec![BigUint::zero(); width];
        for k in 1..width.min(i + 1) {
            next[k] = &row[k] * BigUint::from(k) + &row[k - 1];
        }
        row = next;
    }
    row
}

pub fn stirling2(n: usize, k: usize) -> BigUint {
    stirling2_row(n, k).pop().unwrap_or_default()
}

/// Ways to partition `n` offers into between 1 and `max_k` non-empty blocks.
pub fn count_partitions(n: usize, max_k: usize) -> BigUint {
    stirling2_row(n, max_k).into_iter().skip(1).sum()
}

/// Partition count times an average number of alignments per partition, as a float estimate.
pub fn count_solution_space(n: usize, max_k: usize, avg_alignments: f64) -> f64 {
    count_partitions(n, max_k).to_f64().unwrap_or(f64::INFINITY) * avg_alignments
}

/// How many alignments a set of offers admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentConvention {
    /// `prod tf(f)`.
    FlexibilityProduct,
    /// `prod (tf(f) + 1)`: every admissible start of every offer.
    StartPositions,
}

pub fn count_alignments(flexibilities: &[u32], convention: AlignmentConvention) -> BigUint {
    flexibilities
        .iter()
        .map(|&tf| match convention {
            AlignmentConvention::FlexibilityProduct => BigUint::from(tf),
            AlignmentConvention::StartPositions => BigUint::from(tf) + 1u32,
        })
        .product()
}
