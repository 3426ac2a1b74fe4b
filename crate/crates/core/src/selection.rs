//! Group-formation algorithms.
//!
//! * [`uga_select`]: univariate greedy, one priority queue keyed on the total
//!   diversity score.
//! * [`mga_select`]: multivariate greedy, one queue per feature visited in
//!   round-robin order; a pick is removed from every queue.
//! * [`rsa_select`]: the random baseline.
//!
//! Ties are broken by a per-candidate random tag drawn from the call's seed,
//! so a selection is a pure function of `(pool, n, seed)`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::profile::{diversity_score, Feature, ParseLabelError, ProtectedFlags};
use crate::seed;

/// Default ceiling on the number of subsets [`brute_force_max_score`] enumerates.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 2_000_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("group size must be at least 1")]
    ZeroSize,
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("enumerating C({pool}, {n}) = {subsets} subsets exceeds the budget of {budget}")]
    BudgetExceeded { pool: usize, n: usize, subsets: u128, budget: u128 },
    #[error("feature order must list each of the five features exactly once")]
    BadFeatureOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub id: String,
    pub flags: ProtectedFlags,
    pub score: u8,
    pub h_index: u32,
}

impl ScoredCandidate {
    pub fn new(id: impl Into<String>, flags: ProtectedFlags, h_index: u32) -> Self {
        Self { id: id.into(), score: diversity_score(&flags), flags, h_index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Uga,
    Mga,
    Rsa,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Uga => "uga",
            Algorithm::Mga => "mga",
            Algorithm::Rsa => "rsa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label().to_ascii_uppercase())
    }
}

impl FromStr for Algorithm {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uga" => Ok(Algorithm::Uga),
            "mga" => Ok(Algorithm::Mga),
            "rsa" => Ok(Algorithm::Rsa),
            _ => Err(ParseLabelError { field: "algorithm", value: s.to_string() }),
        }
    }
}

/// An ordered group of chosen candidates.
///
/// `member_ids` keeps insertion order: rank order for UGA, round-robin
/// order for MGA, draw order for RSA.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub member_ids: Vec<String>,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub size: usize,
    /// Set when `size` exceeded the pool and the whole pool was returned.
    #[serde(default)]
    pub shortfall: bool,
}

impl Selection {
    fn from_indices(pool: &[ScoredCandidate], picks: &[usize], algorithm: Algorithm, seed: u64, n: usize) -> Self {
        Self {
            member_ids: picks.iter().map(|&i| pool[i].id.clone()).collect(),
            algorithm,
            seed,
            size: n,
            shortfall: n > pool.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}

fn check(pool: &[ScoredCandidate], n: usize, algorithm: Algorithm) -> Result<usize, SelectionError> {
    if n == 0 {
        return Err(SelectionError::ZeroSize);
    }
    if pool.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    if n > pool.len() {
        log::warn!("{algorithm}: requested group size {n} exceeds pool size {}; returning the whole pool", pool.len());
    }
    Ok(n.min(pool.len()))
}

fn tie_tags(len: usize, seed: u64) -> Vec<u64> {
    let mut rng = seed::rng(seed);
    (0..len).map(|_| rng.random()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    key: (u8, u8),
    tag: u64,
    index: usize,
}

impl Ord for Entry {
    // Max-heap: higher key first, then lower tag, then lower index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| Reverse(self.tag).cmp(&Reverse(other.tag)))
            .then_with(|| Reverse(self.index).cmp(&Reverse(other.index)))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Univariate greedy selection: the `n` highest-scoring candidates, with
/// random choice inside the boundary score tier.
pub fn uga_select(pool: &[ScoredCandidate], n: usize, seed: u64) -> Result<Selection, SelectionError> {
    let take = check(pool, n, Algorithm::Uga)?;
    let tags = tie_tags(pool.len(), seed);
    let mut queue: BinaryHeap<Entry> =
        pool.iter().enumerate().map(|(index, c)| Entry { key: (c.score, 0), tag: tags[index], index }).collect();
    let picks: Vec<usize> = std::iter::from_fn(|| queue.pop().map(|e| e.index)).take(take).collect();
    Ok(Selection::from_indices(pool, &picks, Algorithm::Uga, seed, n))
}

/// Secondary ordering inside a feature queue's weight tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Random,
    /// Higher total diversity score first, then the random tag.
    TotalScore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgaConfig {
    pub feature_order: Vec<Feature>,
    pub tie_break: TieBreak,
}

impl Default for MgaConfig {
    fn default() -> Self {
        Self { feature_order: Feature::ALL.to_vec(), tie_break: TieBreak::Random }
    }
}

impl MgaConfig {
    fn validate(&self) -> Result<(), SelectionError> {
        let mut seen = self.feature_order.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != Feature::ALL.len() || self.feature_order.len() != Feature::ALL.len() {
            return Err(SelectionError::BadFeatureOrder);
        }
        Ok(())
    }
}

pub fn mga_select(pool: &[ScoredCandidate], n: usize, seed: u64) -> Result<Selection, SelectionError> {
    mga_select_with(pool, n, seed, &MgaConfig::default())
}

/// Multivariate greedy selection with an explicit feature order and
/// tie-break rule.
///
/// Pick `i` comes from the queue of `config.feature_order[i % 5]`.
pub fn mga_select_with(
    pool: &[ScoredCandidate],
    n: usize,
    seed: u64,
    config: &MgaConfig,
) -> Result<Selection, SelectionError> {
    config.validate()?;
    let take = check(pool, n, Algorithm::Mga)?;
    let tags = tie_tags(pool.len(), seed);

    let mut queues: Vec<BinaryHeap<Entry>> = config
        .feature_order
        .iter()
        .map(|&feature| {
            pool.iter()
                .enumerate()
                .map(|(index, c)| {
                    let secondary = match config.tie_break {
                        TieBreak::Random => 0,
                        TieBreak::TotalScore => c.score,
                    };
                    Entry { key: (c.flags.get(feature) as u8, secondary), tag: tags[index], index }
                })
                .collect()
        })
        .collect();

    let mut selected = vec![false; pool.len()];
    let mut picks = Vec::with_capacity(take);
    for step in 0..take {
        let k = queues.len();
        let queue = &mut queues[step % k];
        // Every queue holds the full pool, so an unselected entry remains
        // as long as fewer than |pool| picks have been made.
        let pick = loop {
            let entry = queue.pop().expect("feature queue exhausted before group was formed");
            if !selected[entry.index] {
                break entry.index;
            }
        };
        selected[pick] = true;
        picks.push(pick);
    }
    Ok(Selection::from_indices(pool, &picks, Algorithm::Mga, seed, n))
}

/// Uniformly random `n`-subset of the pool.
pub fn rsa_select(pool: &[ScoredCandidate], n: usize, seed: u64) -> Result<Selection, SelectionError> {
    let take = check(pool, n, Algorithm::Rsa)?;
    let mut rng = seed::rng(seed);
    let picks = index::sample(&mut rng, pool.len(), take).into_vec();
    Ok(Selection::from_indices(pool, &picks, Algorithm::Rsa, seed, n))
}

pub fn select(
    algorithm: Algorithm,
    pool: &[ScoredCandidate],
    n: usize,
    seed: u64,
    mga: &MgaConfig,
) -> Result<Selection, SelectionError> {
    match algorithm {
        Algorithm::Uga => uga_select(pool, n, seed),
        Algorithm::Mga => mga_select_with(pool, n, seed, mga),
        Algorithm::Rsa => rsa_select(pool, n, seed),
    }
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Maximum total diversity score over every `n`-subset, by exhaustive
/// enumeration. Refuses when the number of subsets exceeds `budget`.
pub fn brute_force_max_score(pool: &[ScoredCandidate], n: usize, budget: u128) -> Result<u32, SelectionError> {
    if n == 0 {
        return Err(SelectionError::ZeroSize);
    }
    let n = n.min(pool.len());
    let subsets = binomial(pool.len(), n).unwrap_or(u128::MAX);
    if subsets > budget {
        return Err(SelectionError::BudgetExceeded { pool: pool.len(), n, subsets, budget });
    }

    let scores: Vec<u32> = pool.iter().map(|c| c.score as u32).collect();
    let mut combo: Vec<usize> = (0..n).collect();
    let mut best = 0;
    loop {
        best = best.max(combo.iter().map(|&i| scores[i]).sum());
        // Advance to the next combination in lexicographic order.
        let Some(pos) = (0..n).rev().find(|&i| combo[i] != i + pool.len() - n) else {
            return Ok(best);
        };
        combo[pos] += 1;
        for j in pos + 1..n {
            combo[j] = combo[j - 1] + 1;
        }
    }
}
