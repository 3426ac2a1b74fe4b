//! Seeded synthetic candidate pools.
//!
//! Each candidate's five protected flags are drawn independently from the
//! configured prevalences, then realized as raw attributes (labels,
//! country/state, university rank) that reproduce those flags when
//! profiled with [`SynthSpec::threshold_config`] and the bundled reference
//! tables. The h-index is drawn from the configured distribution and
//! lowered by `utility_penalty` per protected flag.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::ingestion::{bundled_epscor_states, bundled_gdp_table, PoolFile, PoolFormat};
use crate::profile::{CareerStage, Ethnicity, Feature, Gender, RawCandidate, Sector, ThresholdConfig, UNRANKED, US};
use crate::seed;

const US_STATES: [&str; 51] = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA",
    "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR",
    "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HIndexDistribution {
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Draws uniformly from the listed values.
    Empirical {
        values: Vec<f64>,
    },
}

impl Default for HIndexDistribution {
    fn default() -> Self {
        HIndexDistribution::Gamma { shape: 2.0, scale: 10.0 }
    }
}

enum Sampler<'a> {
    Gamma(Gamma<f64>),
    Uniform(f64, f64),
    Empirical(&'a [f64]),
}

impl HIndexDistribution {
    fn sampler(&self) -> Result<Sampler<'_>, SynthError> {
        let bad = |msg: String| Err(SynthError::Config(msg));
        match *self {
            HIndexDistribution::Gamma { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return bad(format!("gamma needs positive shape and scale, got ({shape}, {scale})"));
                }
                Gamma::new(shape, scale).map(Sampler::Gamma).map_err(|e| SynthError::Config(e.to_string()))
            }
            HIndexDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return bad(format!("uniform needs finite low <= high, got ({low}, {high})"));
                }
                Ok(Sampler::Uniform(low, high))
            }
            HIndexDistribution::Empirical { ref values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return bad("empirical needs a non-empty list of finite values".into());
                }
                Ok(Sampler::Empirical(values))
            }
        }
    }
}

impl Sampler<'_> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Gamma(g) => g.sample(rng),
            Sampler::Uniform(lo, hi) if lo == hi => *lo,
            Sampler::Uniform(lo, hi) => rng.random_range(*lo..=*hi),
            Sampler::Empirical(values) => *values.choose(rng).expect("non-empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub pool_size: usize,
    pub prevalence: BTreeMap<Feature, f64>,
    pub us_fraction: f64,
    /// Geo-protected probability for US candidates. When absent the
    /// geolocation prevalence applies to everyone.
    pub epscor_fraction_of_us: Option<f64>,
    pub h_index_distribution: HIndexDistribution,
    /// Mean h-index reduction per protected flag.
    pub utility_penalty: f64,
    /// Ranks above this value are generated for low-rank candidates.
    pub rank_cutoff: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            pool_size: 100,
            prevalence: [
                (Feature::Female, 0.27),
                (Feature::NonWhite, 0.35),
                (Feature::GeoProtected, 0.2),
                (Feature::LowRankUniversity, 0.4),
                (Feature::Junior, 0.4),
            ]
            .into(),
            us_fraction: 0.5,
            epscor_fraction_of_us: None,
            h_index_distribution: HIndexDistribution::default(),
            utility_penalty: 0.0,
            rank_cutoff: 700.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn with_prevalence(mut self, p: f64) -> Self {
        self.prevalence = Feature::ALL.iter().map(|&f| (f, p)).collect();
        self
    }

    /// Threshold configuration under which the generated attributes map
    /// back onto the generated flags.
    pub fn threshold_config(&self) -> ThresholdConfig {
        ThresholdConfig::fixed(self.rank_cutoff)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(SynthError::Config(format!("{name} = {p} is not a probability")))
            }
        };
        if self.pool_size == 0 {
            return Err(SynthError::Config("pool_size must be positive".into()));
        }
        for f in Feature::ALL {
            let p =
                self.prevalence.get(&f).ok_or_else(|| SynthError::Config(format!("prevalence missing feature {f}")))?;
            prob(f.name(), *p)?;
        }
        prob("us_fraction", self.us_fraction)?;
        if let Some(p) = self.epscor_fraction_of_us {
            prob("epscor_fraction_of_us", p)?;
        }
        if !(self.utility_penalty >= 0.0 && self.utility_penalty.is_finite()) {
            return Err(SynthError::Config(format!("utility_penalty {} must be >= 0", self.utility_penalty)));
        }
        if !(self.rank_cutoff >= 1.0 && self.rank_cutoff < UNRANKED as f64) {
            return Err(SynthError::Config(format!("rank_cutoff {} outside [1, {UNRANKED})", self.rank_cutoff)));
        }
        self.h_index_distribution.sampler().map(|_| ())
    }
}

pub fn generate_pool(spec: &SynthSpec) -> Result<PoolFile, SynthError> {
    spec.validate()?;
    let sampler = spec.h_index_distribution.sampler()?;

    let gdp = bundled_gdp_table();
    let gdp_mean = gdp.values().sum::<f64>() / gdp.len() as f64;
    let countries = |developed: bool| -> Vec<&str> {
        gdp.iter()
            .filter(|&(code, &g)| code.as_str() != US && (g >= gdp_mean) == developed)
            .map(|(code, _)| code.as_str())
            .collect()
    };
    let developed = countries(true);
    let developing = countries(false);
    let epscor = bundled_epscor_states();
    let epscor_states: Vec<&str> = epscor.iter().map(String::as_str).collect();
    let other_states: Vec<&str> = US_STATES.iter().copied().filter(|s| !epscor.contains(*s)).collect();

    let low_rank_floor = spec.rank_cutoff.floor() as u32;
    let p = |f: Feature| spec.prevalence[&f];
    let mut rng = seed::rng(spec.seed);
    let width = spec.pool_size.to_string().len().max(5);

    let records = (0..spec.pool_size)
        .map(|i| {
            let is_us = rng.random_bool(spec.us_fraction);
            let female = rng.random_bool(p(Feature::Female));
            let non_white = rng.random_bool(p(Feature::NonWhite));
            let geo_p = match (is_us, spec.epscor_fraction_of_us) {
                (true, Some(q)) => q,
                _ => p(Feature::GeoProtected),
            };
            let geo = rng.random_bool(geo_p);
            let low_rank = rng.random_bool(p(Feature::LowRankUniversity));
            let junior = rng.random_bool(p(Feature::Junior));

            let pick = |rng: &mut ChaCha8Rng, from: &[&str]| from.choose(rng).expect("non-empty list").to_string();
            let (country, us_state) = match (is_us, geo) {
                (true, true) => (US.to_string(), Some(pick(&mut rng, &epscor_states))),
                (true, false) => (US.to_string(), Some(pick(&mut rng, &other_states))),
                (false, true) => (pick(&mut rng, &developing), None),
                (false, false) => (pick(&mut rng, &developed), None),
            };
            let university_rank = if low_rank {
                rng.random_range(low_rank_floor + 1..=UNRANKED)
            } else {
                rng.random_range(1..=low_rank_floor)
            };

            let flag_count = [female, non_white, geo, low_rank, junior].iter().filter(|&&b| b).count();
            let h = sampler.sample(&mut rng) - spec.utility_penalty * flag_count as f64;
            let h_index = h.max(0.0).round() as u32;

            RawCandidate {
                id: format!("synth-{i:0width$}"),
                full_name: None,
                gender: if female { Gender::Female } else { Gender::Male },
                ethnicity: if non_white { Ethnicity::NonWhite } else { Ethnicity::White },
                country: Some(country),
                us_state,
                university_rank: Some(university_rank),
                career_stage: if junior { CareerStage::Junior } else { CareerStage::Senior },
                title: None,
                h_index: Some(h_index),
                has_scholar_profile: true,
                sector: Some(Sector::Academia),
            }
        })
        .collect();

    Ok(PoolFile {
        source: "synthetic".into(),
        snapshot_date: None,
        format: PoolFormat::Csv,
        records,
        row_errors: Vec::new(),
    })
}
