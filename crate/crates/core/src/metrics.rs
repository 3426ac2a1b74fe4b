//! Evaluation measures for a formed group against a baseline.
//!
//! Per reporting group the relative gain `rho = 100 * (p_alg - p_base) / p_base`
//! is capped at 100; the diversity gain is the mean of the capped gains.
//! Utility is the mean h-index. Utility loss is the percentage drop versus
//! the baseline and utility savings is its complement to 100. The F measure
//! is the harmonic mean of diversity gain and utility savings.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::profile::{GeoSubgroup, ParseLabelError, ProtectedFlags};
use crate::seed;
use crate::selection::{rsa_select, ScoredCandidate, Selection, SelectionError};

/// Upper bound on each group's contribution to the diversity gain.
pub const GAIN_CAP: f64 = 100.0;

pub const DEFAULT_MC_TRIALS: usize = 1_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("duplicate candidate id {0:?} in profile store")]
    DuplicateId(String),
    #[error("selection member {0:?} is not in the pool")]
    UnknownMember(String),
    #[error("group is empty")]
    EmptyGroup,
    #[error("no gains to average")]
    NoGroups,
    #[error("Monte-Carlo baseline needs at least one trial")]
    NoTrials,
    #[error("baseline utility must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// Scored candidates indexed by id.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    candidates: Vec<ScoredCandidate>,
    index: HashMap<String, usize>,
}

impl ProfileStore {
    pub fn new(candidates: Vec<ScoredCandidate>) -> Result<Self, MetricsError> {
        let mut index = HashMap::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(MetricsError::DuplicateId(c.id.clone()));
            }
        }
        Ok(Self { candidates, index })
    }

    pub fn candidates(&self) -> &[ScoredCandidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ScoredCandidate> {
        self.index.get(id).map(|&i| &self.candidates[i])
    }

    pub fn resolve<'a>(&'a self, ids: &[String]) -> Result<Vec<&'a ScoredCandidate>, MetricsError> {
        ids.iter().map(|id| self.get(id).ok_or_else(|| MetricsError::UnknownMember(id.clone()))).collect()
    }

    pub fn members(&self, selection: &Selection) -> Result<Vec<&ScoredCandidate>, MetricsError> {
        self.resolve(&selection.member_ids)
    }
}

/// A protected group reported in proportions and diversity gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Female,
    NonWhite,
    Junior,
    Developing,
    Epscor,
    /// Developing or EPSCoR; the scoring feature itself.
    GeoProtected,
    LowRankUniversity,
}

impl Group {
    pub fn contains(self, flags: &ProtectedFlags) -> bool {
        match self {
            Group::Female => flags.female,
            Group::NonWhite => flags.non_white,
            Group::Junior => flags.junior,
            Group::Developing => flags.geo_subgroup == GeoSubgroup::Developing,
            Group::Epscor => flags.geo_subgroup == GeoSubgroup::Epscor,
            Group::GeoProtected => flags.geo_protected,
            Group::LowRankUniversity => flags.low_rank_university,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Group::Female => "Female",
            Group::NonWhite => "Non-White",
            Group::Junior => "Junior",
            Group::Developing => "Developing",
            Group::Epscor => "EPSCoR",
            Group::GeoProtected => "Geo-Protected",
            Group::LowRankUniversity => "Low Rank University",
        }
    }
}

/// Which groups enter the diversity gain: the five scoring features or the
/// six reporting groups (geolocation split into developing and EPSCoR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GroupSet {
    #[serde(rename = "5")]
    Five,
    #[default]
    #[serde(rename = "6")]
    Six,
}

impl GroupSet {
    pub fn groups(self) -> &'static [Group] {
        match self {
            GroupSet::Five => {
                &[Group::Female, Group::NonWhite, Group::GeoProtected, Group::LowRankUniversity, Group::Junior]
            }
            GroupSet::Six => &[
                Group::Female,
                Group::NonWhite,
                Group::Junior,
                Group::Developing,
                Group::Epscor,
                Group::LowRankUniversity,
            ],
        }
    }
}

impl FromStr for GroupSet {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "5" => Ok(GroupSet::Five),
            "6" => Ok(GroupSet::Six),
            _ => Err(ParseLabelError { field: "groups", value: s.to_string() }),
        }
    }
}

impl fmt::Display for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupSet::Five => "5",
            GroupSet::Six => "6",
        })
    }
}

/// Percentage of a group's members in each protected group.
pub type GroupProportions = BTreeMap<Group, f64>;

pub fn proportions_of(members: &[&ScoredCandidate], groups: &[Group]) -> GroupProportions {
    groups
        .iter()
        .map(|&g| {
            let pct = if members.is_empty() {
                0.0
            } else {
                let hits = members.iter().filter(|c| g.contains(&c.flags)).count();
                100.0 * hits as f64 / members.len() as f64
            };
            (g, pct)
        })
        .collect()
}

pub fn proportions(
    selection: &Selection,
    store: &ProfileStore,
    groups: GroupSet,
) -> Result<GroupProportions, MetricsError> {
    Ok(proportions_of(&store.members(selection)?, groups.groups()))
}

/// Relative percentage gain of `p_alg` over `p_base`.
///
/// A zero baseline yields `+inf` when the algorithm reaches any positive
/// share and `0` when both are zero; [`diversity_gain`] caps the former.
pub fn rho_gain(p_alg: f64, p_base: f64) -> f64 {
    if p_base > 0.0 {
        100.0 * (p_alg - p_base) / p_base
    } else if p_alg > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Mean of the per-group gains after capping each at [`GAIN_CAP`].
/// Negative gains are kept as-is.
pub fn diversity_gain(rhos: &[f64]) -> Result<f64, MetricsError> {
    if rhos.is_empty() {
        return Err(MetricsError::NoGroups);
    }
    let mean = rhos.iter().map(|&r| r.min(GAIN_CAP)).sum::<f64>() / rhos.len() as f64;
    Ok(mean.min(GAIN_CAP))
}

pub fn utility_of(members: &[&ScoredCandidate]) -> Result<f64, MetricsError> {
    if members.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    Ok(members.iter().map(|c| c.h_index as f64).sum::<f64>() / members.len() as f64)
}

/// Mean h-index of the selected members.
pub fn utility(selection: &Selection, store: &ProfileStore) -> Result<f64, MetricsError> {
    utility_of(&store.members(selection)?)
}

pub fn utility_loss_pct(u_alg: f64, u_base: f64) -> Result<f64, MetricsError> {
    if u_base <= 0.0 || u_base.is_nan() {
        return Err(MetricsError::NonPositiveBaseline(u_base));
    }
    Ok(100.0 * (u_base - u_alg) / u_base)
}

/// Utility savings as the complement of utility loss, i.e. `100 * u_alg / u_base`.
pub fn utility_savings_pct(ul_pct: f64) -> f64 {
    100.0 - ul_pct
}

/// Harmonic mean of diversity gain and utility savings. Defined as 0 when
/// the two sum to zero.
pub fn f_measure(d_gain: f64, y_pct: f64) -> f64 {
    let sum = d_gain + y_pct;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * d_gain * y_pct / sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BaselineMode {
    /// Expected value of a uniform random draw.
    Analytic,
    /// Average over seeded random draws.
    MonteCarlo { trials: usize, seed: u64 },
    /// An explicit selection used as the baseline group.
    Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mode: BaselineMode,
    pub proportions: GroupProportions,
    pub utility: f64,
}

/// Expected proportions and utility of a uniform random group.
///
/// Sampling without replacement preserves means, so these are the pool's
/// own proportions and mean h-index regardless of group size.
pub fn baseline_expectation(store: &ProfileStore, groups: GroupSet) -> Result<Baseline, MetricsError> {
    let members: Vec<&ScoredCandidate> = store.candidates().iter().collect();
    Ok(Baseline {
        mode: BaselineMode::Analytic,
        proportions: proportions_of(&members, groups.groups()),
        utility: utility_of(&members)?,
    })
}

/// Baseline averaged over `trials` random draws of size `n`. Trial `i`
/// uses a seed derived from `seed` and `i`, so the result does not depend
/// on how trials are scheduled.
pub fn baseline_monte_carlo(
    store: &ProfileStore,
    n: usize,
    trials: usize,
    seed: u64,
    groups: GroupSet,
) -> Result<Baseline, MetricsError> {
    if trials == 0 {
        return Err(MetricsError::NoTrials);
    }
    let group_list = groups.groups();
    let per_trial: Vec<(GroupProportions, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = seed::derive_seed(seed, &format!("rsa-baseline/{trial}"));
            let draw = rsa_select(store.candidates(), n, trial_seed)?;
            let members = store.members(&draw)?;
            Ok((proportions_of(&members, group_list), utility_of(&members)?))
        })
        .collect::<Result<_, MetricsError>>()?;

    let mut proportions: GroupProportions = group_list.iter().map(|&g| (g, 0.0)).collect();
    let mut utility = 0.0;
    for (props, u) in &per_trial {
        for (g, p) in props {
            *proportions.get_mut(g).expect("same group set") += p;
        }
        utility += u;
    }
    proportions.values_mut().for_each(|p| *p /= trials as f64);
    Ok(Baseline { mode: BaselineMode::MonteCarlo { trials, seed }, proportions, utility: utility / trials as f64 })
}

pub fn baseline_from_selection(
    selection: &Selection,
    store: &ProfileStore,
    groups: GroupSet,
) -> Result<Baseline, MetricsError> {
    let members = store.members(selection)?;
    Ok(Baseline {
        mode: BaselineMode::Selection,
        proportions: proportions_of(&members, groups.groups()),
        utility: utility_of(&members)?,
    })
}

/// Per-group comparison line, as in a current-vs-proposed composition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: Group,
    pub baseline_pct: f64,
    pub selected_pct: f64,
    /// Relative gain; `null` in JSON when the baseline share is zero and the
    /// selected share is positive.
    #[serde(with = "gain_serde")]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm: String,
    pub group_set: GroupSet,
    pub baseline_mode: BaselineMode,
    pub groups: Vec<GroupRow>,
    pub d_gain: f64,
    pub utility_alg: f64,
    pub utility_base: f64,
    pub ul_pct: f64,
    pub y_pct: f64,
    pub f: f64,
}

impl EvaluationReport {
    pub fn rho(&self) -> BTreeMap<Group, f64> {
        self.groups.iter().map(|r| (r.group, r.rho)).collect()
    }

    pub fn row(&self, label: impl Into<String>) -> ResultRow {
        ResultRow { label: label.into(), d_gain: self.d_gain, ul_pct: self.ul_pct, y_pct: self.y_pct, f: self.f }
    }
}

pub fn evaluate_members(
    algorithm: &str,
    members: &[&ScoredCandidate],
    baseline: &Baseline,
    groups: GroupSet,
) -> Result<EvaluationReport, MetricsError> {
    let selected = proportions_of(members, groups.groups());
    let rows: Vec<GroupRow> = groups
        .groups()
        .iter()
        .map(|g| {
            let selected_pct = selected[g];
            let baseline_pct = baseline.proportions.get(g).copied().unwrap_or(0.0);
            GroupRow { group: *g, baseline_pct, selected_pct, rho: rho_gain(selected_pct, baseline_pct) }
        })
        .collect();
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    let d_gain = diversity_gain(&rhos)?;
    let utility_alg = utility_of(members)?;
    let ul_pct = utility_loss_pct(utility_alg, baseline.utility)?;
    let y_pct = utility_savings_pct(ul_pct);
    Ok(EvaluationReport {
        algorithm: algorithm.to_string(),
        group_set: groups,
        baseline_mode: baseline.mode,
        groups: rows,
        d_gain,
        utility_alg,
        utility_base: baseline.utility,
        ul_pct,
        y_pct,
        f: f_measure(d_gain, y_pct),
    })
}

pub fn evaluate(
    selection: &Selection,
    store: &ProfileStore,
    baseline: &Baseline,
    groups: GroupSet,
) -> Result<EvaluationReport, MetricsError> {
    evaluate_members(&selection.algorithm.to_string(), &store.members(selection)?, baseline, groups)
}

/// One line of a results table: `D_G, UL, Y, F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub d_gain: f64,
    pub ul_pct: f64,
    pub y_pct: f64,
    pub f: f64,
}

impl ResultRow {
    pub const TSV_HEADER: &'static str = "table\tD_G\tUL_i\tY_i\tF";

    pub fn to_tsv(&self) -> String {
        format!("{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}", self.label, self.d_gain, self.ul_pct, self.y_pct, self.f)
    }
}

/// Column-wise mean of result rows.
pub fn average_row(label: impl Into<String>, rows: &[&ResultRow]) -> Option<ResultRow> {
    if rows.is_empty() {
        return None;
    }
    let k = rows.len() as f64;
    let mean = |f: fn(&ResultRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / k;
    Some(ResultRow {
        label: label.into(),
        d_gain: mean(|r| r.d_gain),
        ul_pct: mean(|r| r.ul_pct),
        y_pct: mean(|r| r.y_pct),
        f: mean(|r| r.f),
    })
}

mod gain_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
