//! Demographic profiles.
//!
//! A candidate's raw attributes are binarized into five protected-group
//! flags (gender, ethnicity, geolocation, university rank, career stage).
//! The diversity score of a candidate is the number of flags that are set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Rank assigned to universities that do not appear in the ranking table.
pub const UNRANKED: u32 = 1401;

/// Country code used for candidates located in the United States.
pub const US: &str = "US";

const DEFAULT_SENIOR_TITLES: &[&str] =
    &["associate professor", "professor", "full professor", "distinguished professor", "chair", "emeritus"];

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("candidate {id}: {what} is unknown; ineligible candidates must be excluded before profiling")]
    UnknownFeature { id: String, what: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ethnicity {
    White,
    NonWhite,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CareerStage {
    Junior,
    Senior,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Academia,
    Industry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseLabelError {
    pub field: &'static str,
    pub value: String,
}

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized {} value {:?}", self.field, self.value)
    }
}

impl std::error::Error for ParseLabelError {}

fn label(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

impl FromStr for Gender {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label(s).as_str() {
            "female" | "f" | "woman" => Ok(Gender::Female),
            "male" | "m" | "man" => Ok(Gender::Male),
            "" | "unknown" => Ok(Gender::Unknown),
            _ => Err(ParseLabelError { field: "gender", value: s.to_string() }),
        }
    }
}

impl FromStr for Ethnicity {
    type Err = ParseLabelError;

    /// Accepts the binary labels as well as the five-way name-inference
    /// classes, which collapse to white / non-white.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label(s).as_str() {
            "white" | "w_nl" | "w" => Ok(Ethnicity::White),
            "non_white" | "nonwhite" | "b_nl" | "black" | "hl" | "hispanic" | "latino" | "a" | "asian" | "api"
            | "aian" => Ok(Ethnicity::NonWhite),
            "" | "unknown" => Ok(Ethnicity::Unknown),
            _ => Err(ParseLabelError { field: "ethnicity", value: s.to_string() }),
        }
    }
}

impl FromStr for CareerStage {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label(s).as_str() {
            "junior" => Ok(CareerStage::Junior),
            "senior" => Ok(CareerStage::Senior),
            "" | "unknown" => Ok(CareerStage::Unknown),
            _ => Err(ParseLabelError { field: "career_stage", value: s.to_string() }),
        }
    }
}

impl FromStr for Sector {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label(s).as_str() {
            "academia" | "academic" => Ok(Sector::Academia),
            "industry" => Ok(Sector::Industry),
            _ => Err(ParseLabelError { field: "sector", value: s.to_string() }),
        }
    }
}

/// Raw attributes of a candidate as ingested from a pool file.
///
/// Optional fields are `None` when the source left them blank; such
/// candidates are removed by the exclusion pass before profiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_name: Option<String>,
    pub gender: Gender,
    pub ethnicity: Ethnicity,
    pub country: Option<String>,
    pub us_state: Option<String>,
    pub university_rank: Option<u32>,
    pub career_stage: CareerStage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub h_index: Option<u32>,
    pub has_scholar_profile: bool,
    pub sector: Option<Sector>,
}

impl RawCandidate {
    pub fn is_us(&self) -> bool {
        self.country.as_deref() == Some(US)
    }

    /// True when any attribute needed for profiling or utility is absent.
    pub fn has_missing_feature(&self) -> bool {
        self.gender == Gender::Unknown
            || self.ethnicity == Ethnicity::Unknown
            || self.country.is_none()
            || (self.is_us() && self.us_state.is_none())
            || self.university_rank.is_none()
            || (self.career_stage == CareerStage::Unknown && self.title.is_none())
            || self.h_index.is_none()
            || self.sector.is_none()
    }
}

/// Normalizes a country code: trimmed, upper-case, `USA` folded to `US`.
pub fn normalize_country(code: &str) -> String {
    let code = code.trim().to_ascii_uppercase();
    if code == "USA" {
        US.to_string()
    } else {
        code
    }
}

pub fn normalize_state(code: &str) -> String {
    code.trim().to_ascii_uppercase()
}

fn normalize_title(title: &str) -> String {
    title.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankCutoffMode {
    #[default]
    PoolMean,
    Fixed,
}

/// Threshold configuration file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    pub rank_cutoff_mode: RankCutoffMode,
    pub fixed_rank_cutoff: Option<f64>,
    pub senior_titles: Vec<String>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            rank_cutoff_mode: RankCutoffMode::PoolMean,
            fixed_rank_cutoff: None,
            senior_titles: DEFAULT_SENIOR_TITLES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ThresholdConfig {
    pub fn fixed(cutoff: f64) -> Self {
        Self { rank_cutoff_mode: RankCutoffMode::Fixed, fixed_rank_cutoff: Some(cutoff), ..Self::default() }
    }
}

/// Cutoffs used to binarize raw attributes for one pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolThresholds {
    pub gdp_mean: f64,
    pub developed_countries: BTreeSet<String>,
    pub epscor_states: BTreeSet<String>,
    pub rank_cutoff: f64,
    /// Set when every ranked candidate is unranked; all of them are then
    /// treated as low-rank.
    pub all_unranked: bool,
    pub senior_titles: BTreeSet<String>,
}

impl PoolThresholds {
    pub fn is_senior_title(&self, title: &str) -> bool {
        self.senior_titles.contains(&normalize_title(title))
    }
}

pub fn derive_thresholds(
    gdp_table: &BTreeMap<String, f64>,
    epscor_states: &BTreeSet<String>,
    pool: &[RawCandidate],
    config: &ThresholdConfig,
) -> Result<PoolThresholds, ProfileError> {
    if gdp_table.is_empty() {
        return Err(ProfileError::Config("GDP table is empty".into()));
    }
    if pool.is_empty() {
        return Err(ProfileError::Config("candidate pool is empty".into()));
    }
    if epscor_states.is_empty() && pool.iter().any(RawCandidate::is_us) {
        return Err(ProfileError::Config("EPSCoR state list is empty but the pool has US candidates".into()));
    }

    let gdp_mean = gdp_table.values().sum::<f64>() / gdp_table.len() as f64;
    let developed_countries =
        gdp_table.iter().filter(|(_, &gdp)| gdp >= gdp_mean).map(|(code, _)| normalize_country(code)).collect();

    let ranks: Vec<u32> = pool.iter().filter_map(|c| c.university_rank).collect();
    let mut all_unranked = false;
    let rank_cutoff = match config.rank_cutoff_mode {
        RankCutoffMode::Fixed => {
            let cutoff = config
                .fixed_rank_cutoff
                .ok_or_else(|| ProfileError::Config("fixed rank cutoff mode requires fixed_rank_cutoff".into()))?;
            if !(cutoff > 1.0 && cutoff < UNRANKED as f64) {
                return Err(ProfileError::Config(format!("fixed rank cutoff {cutoff} outside (1, {UNRANKED})")));
            }
            cutoff
        }
        RankCutoffMode::PoolMean => {
            if ranks.is_empty() {
                return Err(ProfileError::Config("no candidate has a university rank".into()));
            }
            if ranks.iter().all(|&r| r == UNRANKED) {
                log::warn!("every candidate is unranked; treating all of them as low-rank");
                all_unranked = true;
                UNRANKED as f64
            } else {
                ranks.iter().map(|&r| r as f64).sum::<f64>() / ranks.len() as f64
            }
        }
    };

    Ok(PoolThresholds {
        gdp_mean,
        developed_countries,
        epscor_states: epscor_states.iter().map(|s| normalize_state(s)).collect(),
        rank_cutoff,
        all_unranked,
        senior_titles: config.senior_titles.iter().map(|t| normalize_title(t)).collect(),
    })
}

/// One of the five Boolean scoring features, in canonical visit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Female,
    NonWhite,
    GeoProtected,
    LowRankUniversity,
    Junior,
}

impl Feature {
    pub const ALL: [Feature; 5] =
        [Feature::Female, Feature::NonWhite, Feature::GeoProtected, Feature::LowRankUniversity, Feature::Junior];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Female => "female",
            Feature::NonWhite => "non_white",
            Feature::GeoProtected => "geo_protected",
            Feature::LowRankUniversity => "low_rank_university",
            Feature::Junior => "junior",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match label(s).as_str() {
            "female" | "gender" => Ok(Feature::Female),
            "non_white" | "ethnicity" => Ok(Feature::NonWhite),
            "geo_protected" | "geolocation" => Ok(Feature::GeoProtected),
            "low_rank_university" | "university_rank" => Ok(Feature::LowRankUniversity),
            "junior" | "career_stage" => Ok(Feature::Junior),
            _ => Err(ParseLabelError { field: "feature", value: s.to_string() }),
        }
    }
}

/// Which kind of geographic protection applies. Used for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoSubgroup {
    Developing,
    Epscor,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ProtectedFlags {
    pub female: bool,
    pub non_white: bool,
    pub geo_protected: bool,
    pub low_rank_university: bool,
    pub junior: bool,
    pub geo_subgroup: GeoSubgroup,
}

impl ProtectedFlags {
    /// Builds flags from the five scoring bits. A geo-protected candidate
    /// is attributed to the developing subgroup.
    pub fn from_bits(bits: [bool; 5]) -> Self {
        let [female, non_white, geo_protected, low_rank_university, junior] = bits;
        Self {
            female,
            non_white,
            geo_protected,
            low_rank_university,
            junior,
            geo_subgroup: if geo_protected { GeoSubgroup::Developing } else { GeoSubgroup::None },
        }
    }

    pub fn bits(&self) -> [bool; 5] {
        [self.female, self.non_white, self.geo_protected, self.low_rank_university, self.junior]
    }

    pub fn get(&self, feature: Feature) -> bool {
        match feature {
            Feature::Female => self.female,
            Feature::NonWhite => self.non_white,
            Feature::GeoProtected => self.geo_protected,
            Feature::LowRankUniversity => self.low_rank_university,
            Feature::Junior => self.junior,
        }
    }

    pub fn score(&self) -> u8 {
        diversity_score(self)
    }
}

/// Number of protected groups the candidate belongs to, in `0..=5`.
pub fn diversity_score(flags: &ProtectedFlags) -> u8 {
    flags.bits().iter().map(|&b| b as u8).sum()
}

pub fn to_protected_flags(
    candidate: &RawCandidate,
    thresholds: &PoolThresholds,
) -> Result<ProtectedFlags, ProfileError> {
    let unknown = |what| ProfileError::UnknownFeature { id: candidate.id.clone(), what };

    let female = match candidate.gender {
        Gender::Female => true,
        Gender::Male => false,
        Gender::Unknown => return Err(unknown("gender")),
    };
    let non_white = match candidate.ethnicity {
        Ethnicity::NonWhite => true,
        Ethnicity::White => false,
        Ethnicity::Unknown => return Err(unknown("ethnicity")),
    };
    let junior = match (candidate.career_stage, &candidate.title) {
        (CareerStage::Junior, _) => true,
        (CareerStage::Senior, _) => false,
        (CareerStage::Unknown, Some(title)) => !thresholds.is_senior_title(title),
        (CareerStage::Unknown, None) => return Err(unknown("career stage")),
    };
    let rank = candidate.university_rank.ok_or_else(|| unknown("university rank"))?;
    let low_rank_university = rank as f64 > thresholds.rank_cutoff || (thresholds.all_unranked && rank == UNRANKED);

    let country = candidate.country.as_deref().ok_or_else(|| unknown("country"))?;
    let geo_subgroup = if country == US {
        let state = candidate.us_state.as_deref().ok_or_else(|| unknown("US state"))?;
        if thresholds.epscor_states.contains(state) {
            GeoSubgroup::Epscor
        } else {
            GeoSubgroup::None
        }
    } else if thresholds.developed_countries.contains(country) {
        GeoSubgroup::None
    } else {
        GeoSubgroup::Developing
    };

    Ok(ProtectedFlags {
        female,
        non_white,
        geo_protected: geo_subgroup != GeoSubgroup::None,
        low_rank_university,
        junior,
        geo_subgroup,
    })
}
