//! Diversity-aware group formation.
//!
//! Candidates are described by five Boolean protected-group flags (gender,
//! ethnicity, geolocation, university rank, career stage). Groups are formed
//! greedily from those flags and evaluated against a random baseline by
//! diversity gain, utility loss and their F measure.
//!
//! ```
//! use fairform::profile::ProtectedFlags;
//! use fairform::selection::{mga_select, ScoredCandidate};
//!
//! let pool = vec![
//!     ScoredCandidate::new("a", ProtectedFlags::from_bits([true, false, false, false, false]), 12),
//!     ScoredCandidate::new("b", ProtectedFlags::from_bits([false, true, false, false, true]), 30),
//!     ScoredCandidate::new("c", ProtectedFlags::default(), 41),
//! ];
//! let group = mga_select(&pool, 2, 7).unwrap();
//! assert_eq!(group.member_ids, vec!["a", "b"]);
//! ```

pub mod ingestion;
pub mod metrics;
pub mod profile;
pub mod seed;
pub mod selection;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

pub use ingestion::{apply_exclusions, load_pool, ExclusionLog, PoolFile};
pub use metrics::{EvaluationReport, GroupSet, ProfileStore};
pub use profile::{
    derive_thresholds, to_protected_flags, PoolThresholds, ProtectedFlags, RawCandidate, ThresholdConfig,
};
pub use selection::{mga_select, rsa_select, uga_select, Algorithm, ScoredCandidate, Selection};

/// Profiles eligible candidates against thresholds derived from them.
///
/// `candidates` must already have passed [`apply_exclusions`].
pub fn score_pool(
    candidates: &[RawCandidate],
    gdp_table: &BTreeMap<String, f64>,
    epscor_states: &BTreeSet<String>,
    config: &ThresholdConfig,
) -> Result<(PoolThresholds, Vec<ScoredCandidate>), profile::ProfileError> {
    let thresholds = derive_thresholds(gdp_table, epscor_states, candidates, config)?;
    let scored = candidates
        .iter()
        .map(|c| {
            let flags = to_protected_flags(c, &thresholds)?;
            let h_index =
                c.h_index.ok_or(profile::ProfileError::UnknownFeature { id: c.id.clone(), what: "h-index" })?;
            Ok(ScoredCandidate::new(c.id.clone(), flags, h_index))
        })
        .collect::<Result<_, _>>()?;
    Ok((thresholds, scored))
}
