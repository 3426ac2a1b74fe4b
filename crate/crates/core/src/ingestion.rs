//! Pool files and reference tables.
//!
//! Pools are read from CSV (header row, RFC-4180 quoting) or JSON (array of
//! objects) with the same column names. Blank cells and the literal
//! `unknown` both mean "missing"; such candidates are carried forward and
//! removed by [`apply_exclusions`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::profile::{normalize_country, normalize_state, RawCandidate, Sector, UNRANKED};

const BUNDLED_GDP: &str = include_str!("../data/world_gdp.csv");
const BUNDLED_EPSCOR: &str = include_str!("../data/epscor_states.txt");

pub const COLUMNS: [&str; 12] = [
    "id",
    "full_name",
    "gender",
    "ethnicity",
    "country",
    "us_state",
    "university_rank",
    "career_stage",
    "title",
    "h_index",
    "has_scholar_profile",
    "sector",
];

const REQUIRED_COLUMNS: [&str; 8] =
    ["id", "gender", "ethnicity", "country", "university_rank", "h_index", "has_scholar_profile", "sector"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("duplicate candidate id {0:?}")]
    DuplicateId(String),
    #[error("unsupported pool format {0:?}; expected csv or json")]
    UnknownFormat(String),
    #[error("record {row} is not a JSON object")]
    NotAnObject { row: usize },
    #[error("no candidates left after exclusions")]
    EmptyPool,
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
    #[error("GDP table line {line}: {message}")]
    Gdp { line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolFormat {
    Csv,
    Json,
}

impl PoolFormat {
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        ext.parse()
    }
}

impl FromStr for PoolFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(PoolFormat::Csv),
            "json" => Ok(PoolFormat::Json),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// A field that failed validation; the row is dropped from the pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub column: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    pub source: String,
    pub snapshot_date: Option<String>,
    pub format: PoolFormat,
    pub records: Vec<RawCandidate>,
    pub row_errors: Vec<RowError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoScholarProfile,
    MissingFeature,
    Industry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionLog {
    pub entries: Vec<Exclusion>,
}

impl ExclusionLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Primary exclusion reason for a candidate, first matching rule wins.
pub fn exclusion_reason(c: &RawCandidate) -> Option<ExclusionReason> {
    if !c.has_scholar_profile {
        Some(ExclusionReason::NoScholarProfile)
    } else if c.has_missing_feature() {
        Some(ExclusionReason::MissingFeature)
    } else if c.sector == Some(Sector::Industry) {
        Some(ExclusionReason::Industry)
    } else {
        None
    }
}

/// Splits candidates into the eligible pool and a log of the excluded ones.
pub fn apply_exclusions(records: &[RawCandidate]) -> Result<(Vec<RawCandidate>, ExclusionLog), IngestError> {
    let mut retained = Vec::with_capacity(records.len());
    let mut log = ExclusionLog::default();
    for c in records {
        match exclusion_reason(c) {
            Some(reason) => log.entries.push(Exclusion { id: c.id.clone(), reason }),
            None => retained.push(c.clone()),
        }
    }
    if retained.is_empty() {
        return Err(IngestError::EmptyPool);
    }
    Ok((retained, log))
}

pub fn load_pool(path: &Path, format: Option<PoolFormat>) -> Result<PoolFile, IngestError> {
    let format = match format {
        Some(f) => f,
        None => PoolFormat::from_path(path)?,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let source = path.file_stem().and_then(|s| s.to_str()).unwrap_or("pool").to_string();
    read_pool(BufReader::new(file), format, source)
}

pub fn read_pool<R: Read>(reader: R, format: PoolFormat, source: String) -> Result<PoolFile, IngestError> {
    let rows = match format {
        PoolFormat::Csv => csv_rows(reader)?,
        PoolFormat::Json => json_rows(reader)?,
    };

    let mut seen = HashSet::new();
    for row in &rows {
        if let Some(id) = row.get("id").and_then(|v| v.as_deref()).map(str::trim).filter(|id| !id.is_empty()) {
            if !seen.insert(id.to_string()) {
                return Err(IngestError::DuplicateId(id.to_string()));
            }
        }
    }

    let mut records = Vec::with_capacity(rows.len());
    let mut row_errors = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match parse_record(i + 1, row) {
            Ok(c) => records.push(c),
            Err(mut errs) => row_errors.append(&mut errs),
        }
    }
    Ok(PoolFile { source, snapshot_date: None, format, records, row_errors })
}

type Row = BTreeMap<String, Option<String>>;

fn csv_rows<R: Read>(reader: R) -> Result<Vec<Row>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    check_columns(headers.iter().map(String::as_str))?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        rows.push(headers.iter().cloned().zip(record.iter().map(|v| Some(v.to_string()))).collect());
    }
    Ok(rows)
}

fn check_columns<'a>(present: impl Iterator<Item = &'a str>) -> Result<(), IngestError> {
    let present: BTreeSet<&str> = present.collect();
    for col in REQUIRED_COLUMNS {
        if !present.contains(col) {
            return Err(IngestError::MissingColumn(col.to_string()));
        }
    }
    if !present.contains("career_stage") && !present.contains("title") {
        return Err(IngestError::MissingColumn("career_stage or title".to_string()));
    }
    Ok(())
}

fn json_rows<R: Read>(reader: R) -> Result<Vec<Row>, IngestError> {
    let values: Vec<Value> = serde_json::from_reader(reader)?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let Value::Object(map) = v else {
                return Err(IngestError::NotAnObject { row: i + 1 });
            };
            Ok(map
                .into_iter()
                .map(|(k, v)| {
                    let cell = match v {
                        Value::Null => None,
                        Value::String(s) => Some(s),
                        other => Some(other.to_string()),
                    };
                    (k.to_ascii_lowercase(), cell)
                })
                .collect())
        })
        .collect()
}

fn parse_record(row: usize, cells: &Row) -> Result<RawCandidate, Vec<RowError>> {
    let mut errors = Vec::new();
    let cell = |col: &str| -> Option<&str> {
        cells
            .get(col)
            .and_then(|v| v.as_deref())
            .map(str::trim)
            .filter(|v| !v.is_empty() && !v.eq_ignore_ascii_case("unknown"))
    };
    let mut fail = |col: &str, message: String| {
        errors.push(RowError { row, column: col.to_string(), message });
    };

    let id = cell("id").map(str::to_string).unwrap_or_else(|| {
        fail("id", "id is required".into());
        String::new()
    });

    let label = |col: &str| -> String { cell(col).unwrap_or("unknown").to_string() };
    let gender = label("gender");
    let ethnicity = label("ethnicity");
    let career = label("career_stage");

    let gender = gender.parse().unwrap_or_else(|e| {
        fail("gender", format!("{e}"));
        crate::profile::Gender::Unknown
    });
    let ethnicity = ethnicity.parse().unwrap_or_else(|e| {
        fail("ethnicity", format!("{e}"));
        crate::profile::Ethnicity::Unknown
    });
    let career_stage = career.parse().unwrap_or_else(|e| {
        fail("career_stage", format!("{e}"));
        crate::profile::CareerStage::Unknown
    });

    let country = cell("country").map(normalize_country);
    let us_state = cell("us_state").map(normalize_state);
    if us_state.is_some() && country.as_deref().is_some_and(|c| c != crate::profile::US) {
        fail("us_state", "us_state given for a non-US candidate".into());
    }

    let university_rank = match cell("university_rank").map(str::parse::<u32>) {
        None => None,
        Some(Ok(r)) if (1..=UNRANKED).contains(&r) => Some(r),
        Some(Ok(r)) => {
            fail("university_rank", format!("rank {r} outside [1, {UNRANKED}]"));
            None
        }
        Some(Err(e)) => {
            fail("university_rank", format!("not an integer: {e}"));
            None
        }
    };
    let h_index = match cell("h_index").map(str::parse::<u32>) {
        None => None,
        Some(Ok(h)) => Some(h),
        Some(Err(e)) => {
            fail("h_index", format!("not a non-negative integer: {e}"));
            None
        }
    };
    let has_scholar_profile = match cell("has_scholar_profile").map(str::to_ascii_lowercase).as_deref() {
        None | Some("false" | "no" | "0") => false,
        Some("true" | "yes" | "1") => true,
        Some(other) => {
            fail("has_scholar_profile", format!("not a boolean: {other:?}"));
            false
        }
    };
    let sector = match cell("sector").map(str::parse::<Sector>) {
        None => None,
        Some(Ok(s)) => Some(s),
        Some(Err(e)) => {
            fail("sector", format!("{e}"));
            None
        }
    };

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(RawCandidate {
        id,
        full_name: cell("full_name").map(str::to_string),
        gender,
        ethnicity,
        country,
        us_state,
        university_rank,
        career_stage,
        title: cell("title").map(str::to_string),
        h_index,
        has_scholar_profile,
        sector,
    })
}

fn enum_label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => unreachable!("unit enum variants serialize as strings"),
    }
}

/// Writes candidates in the pool schema. Missing values are written as
/// empty cells (CSV) or `null` (JSON).
pub fn write_pool<W: Write>(records: &[RawCandidate], format: PoolFormat, writer: W) -> Result<(), IngestError> {
    match format {
        PoolFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(COLUMNS)?;
            for c in records {
                let opt = |v: &Option<String>| v.clone().unwrap_or_default();
                let num = |v: Option<u32>| v.map(|n| n.to_string()).unwrap_or_default();
                w.write_record([
                    c.id.clone(),
                    opt(&c.full_name),
                    enum_label(&c.gender),
                    enum_label(&c.ethnicity),
                    opt(&c.country),
                    opt(&c.us_state),
                    num(c.university_rank),
                    enum_label(&c.career_stage),
                    opt(&c.title),
                    num(c.h_index),
                    c.has_scholar_profile.to_string(),
                    c.sector.as_ref().map(enum_label).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        PoolFormat::Json => {
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, records)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn save_pool(records: &[RawCandidate], path: &Path, format: PoolFormat) -> Result<(), IngestError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_pool(records, format, std::io::BufWriter::new(file))
}

/// Parses a two-column `country_code,gdp` table. A header row is detected
/// by its non-numeric second cell and skipped.
pub fn parse_gdp_table<R: Read>(reader: R) -> Result<BTreeMap<String, f64>, IngestError> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut table = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.len() != 2 {
            return Err(IngestError::Gdp { line, message: format!("expected 2 columns, got {}", record.len()) });
        }
        let gdp = match record[1].parse::<f64>() {
            Ok(g) if g.is_finite() && g >= 0.0 => g,
            Ok(g) => return Err(IngestError::Gdp { line, message: format!("invalid GDP {g}") }),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(IngestError::Gdp { line, message: e.to_string() }),
        };
        table.insert(normalize_country(&record[0]), gdp);
    }
    Ok(table)
}

pub fn load_gdp_table(path: &Path) -> Result<BTreeMap<String, f64>, IngestError> {
    parse_gdp_table(File::open(path).map_err(io_err(path))?)
}

/// One state code per line; blank lines and `#` comments are ignored.
pub fn parse_epscor_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or_default().trim())
        .filter(|l| !l.is_empty())
        .map(normalize_state)
        .collect()
}

pub fn load_epscor_list(path: &Path) -> Result<BTreeSet<String>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_epscor_list(&text))
}

/// Reference world GDP table shipped with the crate (current US$ billions).
pub fn bundled_gdp_table() -> BTreeMap<String, f64> {
    parse_gdp_table(BUNDLED_GDP.as_bytes()).expect("bundled GDP table is well-formed")
}

/// NSF EPSCoR jurisdictions shipped with the crate.
pub fn bundled_epscor_states() -> BTreeSet<String> {
    parse_epscor_list(BUNDLED_EPSCOR)
}
