#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::{Resource, Validator};
use serde_json::Value;

const SCHEMAS: [(&str, &str); 4] = [
    ("urn:fairform:evaluation_report", include_str!("../../schema/evaluation_report.schema.json")),
    ("urn:fairform:comparison_report", include_str!("../../schema/comparison_report.schema.json")),
    ("urn:fairform:selection", include_str!("../../schema/selection.schema.json")),
    ("urn:fairform:error", include_str!("../../schema/error.schema.json")),
];

pub fn validator(name: &str) -> Validator {
    let parsed: Vec<(&str, Value)> =
        SCHEMAS.iter().map(|(id, text)| (*id, serde_json::from_str(text).unwrap())).collect();
    let main = parsed.iter().find(|(id, _)| id.ends_with(name)).expect("known schema").1.clone();
    let mut opts = jsonschema::options();
    for (id, schema) in parsed {
        opts = opts.with_resource(id, Resource::from_contents(schema).unwrap());
    }
    opts.build(&main).unwrap()
}

/// Panics with every violation if `doc` does not match the named schema.
pub fn assert_schema(name: &str, doc: &Value) {
    let v = validator(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairform"));
    cmd.env_remove("FAIRFORM_CONFIG").env("RUST_LOG", "error");
    cmd
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Four candidates chosen so every group share is easy to work out by hand.
/// Ranks average 432.5, so b and d are the low-rank pair.
pub const TINY_POOL: &str = "\
id,gender,ethnicity,country,us_state,university_rank,career_stage,h_index,has_scholar_profile,sector
a,female,white,DE,,10,senior,40,true,academia
b,male,non_white,PK,,900,junior,10,true,academia
c,male,white,US,CA,20,senior,30,true,academia
d,female,non_white,US,AR,800,junior,20,true,academia
";
