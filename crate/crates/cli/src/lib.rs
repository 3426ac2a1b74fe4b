//! Library side of the `fairform` command: configuration, the four
//! subcommands, and report rendering. The binary only parses flags and
//! prints errors.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fairform::ingestion::{
    self, bundled_epscor_states, bundled_gdp_table, ExclusionLog, IngestError, PoolFormat, RowError,
};
use fairform::metrics::{
    self, average_row, baseline_expectation, baseline_from_selection, baseline_monte_carlo, Baseline, EvaluationReport,
    GroupSet, MetricsError, ProfileStore, ResultRow,
};
use fairform::profile::{PoolThresholds, ProfileError, ThresholdConfig};
use fairform::seed::derive_seed;
use fairform::selection::{select, Algorithm, MgaConfig, ScoredCandidate, Selection, SelectionError};
use fairform::synth::{generate_pool, SynthError, SynthSpec};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "FAIRFORM_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } | CliError::Synth(_) => "config",
            CliError::Ingest(_) => "ingest",
            CliError::Profile(_) => "profile",
            CliError::Selection(_) => "selection",
            CliError::Metrics(MetricsError::UnknownMember(_)) => "integrity",
            CliError::Metrics(_) => "metrics",
            CliError::Io { .. } => "io",
        }
    }

    /// Exit status: 2 for bad invocations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_record(&self) -> serde_json::Value {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// How the comparison baseline is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineSpec {
    #[default]
    Analytic,
    MonteCarlo {
        trials: usize,
    },
}

impl FromStr for BaselineSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "analytic" {
            return Ok(BaselineSpec::Analytic);
        }
        let trials = s
            .strip_prefix("mc:")
            .or_else(|| s.strip_prefix("monte_carlo:"))
            .ok_or_else(|| format!("baseline must be `analytic` or `mc:<trials>`, got `{s}`"))?;
        match trials.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("trial count must be a positive integer, got `{trials}`")),
            Ok(trials) => Ok(BaselineSpec::MonteCarlo { trials }),
        }
    }
}

impl fmt::Display for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineSpec::Analytic => f.write_str("analytic"),
            BaselineSpec::MonteCarlo { trials } => write!(f, "mc:{trials}"),
        }
    }
}

impl Serialize for BaselineSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BaselineSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Tsv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            other => Err(format!("unknown output format `{other}`")),
        }
    }
}

/// Everything a run needs. Loaded from a JSON config file and then
/// overridden field by field by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pools: Vec<PathBuf>,
    /// World GDP table; the bundled snapshot when absent.
    pub gdp: Option<PathBuf>,
    /// EPSCoR jurisdictions; the bundled list when absent.
    pub epscor: Option<PathBuf>,
    pub algorithms: Vec<Algorithm>,
    pub size: Option<usize>,
    pub seed: u64,
    pub baseline: BaselineSpec,
    pub groups: GroupSet,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub thresholds: ThresholdConfig,
    pub mga: MgaConfig,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    /// The explicit path if given, else the file named by `FAIRFORM_CONFIG`,
    /// else built-in defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    fn single_pool(&self) -> Result<&Path, CliError> {
        match self.pools.as_slice() {
            [p] => Ok(p),
            [] => Err(CliError::Usage("a pool file is required (--pool)".into())),
            _ => Err(CliError::Usage("this command takes exactly one pool".into())),
        }
    }

    fn size(&self) -> Result<usize, CliError> {
        match self.size {
            Some(0) => Err(CliError::Usage("group size must be at least 1".into())),
            Some(n) => Ok(n),
            None => Err(CliError::Usage("group size is required (--size)".into())),
        }
    }
}

/// A pool after exclusions and profiling, ready for selection.
#[derive(Debug, Clone)]
pub struct ScoredPool {
    pub source: String,
    pub store: ProfileStore,
    pub thresholds: PoolThresholds,
    pub exclusions: ExclusionLog,
    pub row_errors: Vec<RowError>,
}

pub fn load_scored_pool(path: &Path, config: &RunConfig) -> Result<ScoredPool, CliError> {
    let file = ingestion::load_pool(path, None)?;
    for e in &file.row_errors {
        log::warn!("{}: row {} column {}: {}", file.source, e.row, e.column, e.message);
    }
    let (eligible, exclusions) = ingestion::apply_exclusions(&file.records)?;
    log::info!("{}: {} eligible, {} excluded", file.source, eligible.len(), exclusions.len());

    let gdp = match &config.gdp {
        Some(p) => ingestion::load_gdp_table(p)?,
        None => bundled_gdp_table(),
    };
    let epscor = match &config.epscor {
        Some(p) => ingestion::load_epscor_list(p)?,
        None => bundled_epscor_states(),
    };
    let (thresholds, scored) = fairform::score_pool(&eligible, &gdp, &epscor, &config.thresholds)?;
    Ok(ScoredPool {
        source: file.source,
        store: ProfileStore::new(scored)?,
        thresholds,
        exclusions,
        row_errors: file.row_errors,
    })
}

/// Reads a synthetic pool spec and writes the generated pool. The output
/// format follows the file extension, CSV by default.
pub fn cmd_gen(spec_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Vec<u8>, CliError> {
    let text = fs::read_to_string(spec_path).map_err(io_err(spec_path))?;
    let mut spec: SynthSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config { path: spec_path.to_path_buf(), message: e.to_string() })?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let format = match out {
        Some(p) => PoolFormat::from_path(p).unwrap_or(PoolFormat::Csv),
        None => PoolFormat::Csv,
    };
    let pool = generate_pool(&spec)?;
    let mut buf = Vec::new();
    ingestion::write_pool(&pool.records, format, &mut buf)?;
    Ok(buf)
}

/// A selection together with the profile of each member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub pool: String,
    #[serde(flatten)]
    pub selection: Selection,
    pub members: Vec<ScoredCandidate>,
}

pub fn cmd_select(config: &RunConfig) -> Result<SelectionFile, CliError> {
    let path = config.single_pool()?;
    let n = config.size()?;
    let algorithm = match config.algorithms.as_slice() {
        [a] => *a,
        [] => return Err(CliError::Usage("an algorithm is required (--algo)".into())),
        _ => return Err(CliError::Usage("select runs exactly one algorithm".into())),
    };
    let pool = load_scored_pool(path, config)?;
    let selection = select(algorithm, pool.store.candidates(), n, config.seed, &config.mga)?;
    let members = pool.store.members(&selection)?.into_iter().cloned().collect();
    Ok(SelectionFile { pool: path.display().to_string(), selection, members })
}

pub fn read_selection(path: &Path) -> Result<SelectionFile, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

fn build_baseline(config: &RunConfig, store: &ProfileStore, n: usize, label: &str) -> Result<Baseline, CliError> {
    Ok(match config.baseline {
        BaselineSpec::Analytic => baseline_expectation(store, config.groups)?,
        BaselineSpec::MonteCarlo { trials } => {
            baseline_monte_carlo(store, n, trials, derive_seed(config.seed, label), config.groups)?
        }
    })
}

/// Evaluates the selection at `selection_path`. With `against`, that
/// selection is the baseline group; otherwise the configured random
/// baseline is used.
pub fn cmd_evaluate(
    config: &RunConfig,
    selection_path: &Path,
    against: Option<&Path>,
) -> Result<EvaluationReport, CliError> {
    let selection = read_selection(selection_path)?;
    let pool = load_scored_pool(config.single_pool()?, config)?;
    let members = pool.store.resolve(&selection.selection.member_ids)?;
    let baseline = match against {
        Some(p) => baseline_from_selection(&read_selection(p)?.selection, &pool.store, config.groups)?,
        None => build_baseline(config, &pool.store, members.len(), "evaluate/baseline")?,
    };
    Ok(metrics::evaluate_members(&selection.selection.algorithm.to_string(), &members, &baseline, config.groups)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSection {
    pub pool: String,
    pub size: usize,
    pub reports: Vec<EvaluationReport>,
}

/// Per-pool results for each algorithm against the random baseline, with
/// per-algorithm averages across pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub baseline: BaselineSpec,
    pub group_set: GroupSet,
    pub sections: Vec<PoolSection>,
    pub average: Vec<ResultRow>,
}

pub fn cmd_compare(config: &RunConfig) -> Result<ComparisonReport, CliError> {
    if config.pools.is_empty() {
        return Err(CliError::Usage("at least one pool is required (--pool)".into()));
    }
    let n = config.size()?;
    let mut algorithms = config.algorithms.clone();
    algorithms.dedup();
    if algorithms.len() < 2 {
        return Err(CliError::Usage("compare needs at least two algorithms".into()));
    }
    let contenders: Vec<Algorithm> = algorithms.iter().copied().filter(|a| *a != Algorithm::Rsa).collect();
    if contenders.is_empty() {
        return Err(CliError::Usage("RSA is the baseline; request UGA or MGA to compare".into()));
    }

    let mut sections = Vec::with_capacity(config.pools.len());
    for (i, path) in config.pools.iter().enumerate() {
        let pool = load_scored_pool(path, config)?;
        let baseline = build_baseline(config, &pool.store, n.min(pool.store.len()), &format!("compare/{i}/baseline"))?;
        let reports = contenders
            .iter()
            .map(|&algo| {
                let seed = derive_seed(config.seed, &format!("compare/{i}/{}", algo.label()));
                let selection = select(algo, pool.store.candidates(), n, seed, &config.mga)?;
                Ok(metrics::evaluate(&selection, &pool.store, &baseline, config.groups)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        sections.push(PoolSection { pool: path.display().to_string(), size: n, reports });
    }

    let average = contenders
        .iter()
        .filter_map(|algo| {
            let label = algo.to_string();
            let rows: Vec<ResultRow> = sections
                .iter()
                .flat_map(|s| s.reports.iter().filter(|r| r.algorithm == label).map(|r| r.row(label.clone())))
                .collect();
            average_row(label.clone(), &rows.iter().collect::<Vec<_>>())
        })
        .collect();

    Ok(ComparisonReport { seed: config.seed, baseline: config.baseline, group_set: config.groups, sections, average })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

pub fn render_selection(selection: &SelectionFile) -> Vec<u8> {
    to_json(selection)
}

fn pct_cell(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.2}")
    }
}

/// The metrics row followed by a per-group proportions block.
pub fn render_evaluation(report: &EvaluationReport, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Tsv => {
            let mut s = String::new();
            s.push_str(ResultRow::TSV_HEADER);
            s.push('\n');
            s.push_str(&report.row(report.algorithm.clone()).to_tsv());
            s.push_str("\n\ngroup\tbaseline\tselected\trho\n");
            for g in &report.groups {
                s.push_str(&format!(
                    "{}\t{:.2}\t{:.2}\t{}\n",
                    g.group.display_name(),
                    g.baseline_pct,
                    g.selected_pct,
                    pct_cell(g.rho)
                ));
            }
            s.into_bytes()
        }
    }
}

pub fn render_comparison(report: &ComparisonReport, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Tsv => {
            let mut s = String::new();
            s.push_str(ResultRow::TSV_HEADER);
            s.push('\n');
            for section in &report.sections {
                s.push_str(&section.pool);
                s.push('\n');
                for r in &section.reports {
                    s.push_str(&r.row(r.algorithm.clone()).to_tsv());
                    s.push('\n');
                }
            }
            s.push_str("Average\n");
            for row in &report.average {
                s.push_str(&row.to_tsv());
                s.push('\n');
            }
            s.into_bytes()
        }
    }
}

/// Writes `bytes` to `out`, or to stdout when no path is given. Files are
/// written beside the target and renamed into place.
pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io_err(Path::new("<stdout>")))
        }
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
            fs::rename(&tmp, path).map_err(io_err(path))
        }
    }
}
