use std::io::Cursor;

use fairform::ingestion::*;
use fairform::profile::*;
use proptest::prelude::*;

fn arb_raw() -> impl Strategy<Value = RawCandidate> {
    (
        (
            prop::option::of("[A-Z][a-z]{1,8}( [A-Z][a-z]{1,8})?"),
            prop::sample::select(vec![Gender::Female, Gender::Male]),
            prop::sample::select(vec![Ethnicity::White, Ethnicity::NonWhite]),
            prop::option::of(prop::sample::select(vec!["US", "DE", "IN", "KE"])),
            prop::option::of(prop::sample::select(vec!["AR", "CA", "WV"])),
        ),
        (
            prop::option::of(1u32..=UNRANKED),
            prop::sample::select(vec![CareerStage::Junior, CareerStage::Senior]),
            prop::option::of(0u32..200),
            any::<bool>(),
            prop::option::of(prop::sample::select(vec![Sector::Academia, Sector::Industry])),
        ),
    )
        .prop_map(
            |((full_name, gender, ethnicity, country, us_state), (rank, career_stage, h, scholar, sector))| {
                RawCandidate {
                    id: String::new(),
                    full_name,
                    gender,
                    ethnicity,
                    us_state: us_state.filter(|_| country == Some("US")).map(str::to_string),
                    country: country.map(str::to_string),
                    university_rank: rank,
                    career_stage,
                    title: None,
                    h_index: h,
                    has_scholar_profile: scholar,
                    sector,
                }
            },
        )
}

fn arb_records() -> impl Strategy<Value = Vec<RawCandidate>> {
    prop::collection::vec(arb_raw(), 1..25).prop_map(|mut v| {
        for (i, c) in v.iter_mut().enumerate() {
            c.id = format!("r{i}");
        }
        v
    })
}

fn round_trip(records: &[RawCandidate], format: PoolFormat) -> PoolFile {
    let mut buf = Vec::new();
    write_pool(records, format, &mut buf).unwrap();
    read_pool(Cursor::new(buf), format, "mem".into()).unwrap()
}

proptest! {
    #[test]
    fn csv_round_trip(records in arb_records()) {
        let back = round_trip(&records, PoolFormat::Csv);
        prop_assert!(back.row_errors.is_empty(), "{:?}", back.row_errors);
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn json_round_trip(records in arb_records()) {
        let back = round_trip(&records, PoolFormat::Json);
        prop_assert!(back.row_errors.is_empty(), "{:?}", back.row_errors);
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn exclusions_partition_and_are_idempotent(records in arb_records()) {
        match apply_exclusions(&records) {
            Ok((kept, log)) => {
                prop_assert_eq!(kept.len() + log.len(), records.len());
                prop_assert!(kept.iter().all(|c| exclusion_reason(c).is_none()));
                let (again, log2) = apply_exclusions(&kept).unwrap();
                prop_assert_eq!(again, kept);
                prop_assert!(log2.is_empty());
            }
            Err(IngestError::EmptyPool) => {
                prop_assert!(records.iter().all(|c| exclusion_reason(c).is_some()));
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn exclusion_reasons_follow_rule_order() {
    let base = RawCandidate {
        id: "x".into(),
        full_name: None,
        gender: Gender::Male,
        ethnicity: Ethnicity::White,
        country: Some("DE".into()),
        us_state: None,
        university_rank: Some(5),
        career_stage: CareerStage::Senior,
        title: None,
        h_index: Some(3),
        has_scholar_profile: true,
        sector: Some(Sector::Academia),
    };
    assert_eq!(exclusion_reason(&base), None);
    let industry = RawCandidate { sector: Some(Sector::Industry), ..base.clone() };
    assert_eq!(exclusion_reason(&industry), Some(ExclusionReason::Industry));
    let missing = RawCandidate { h_index: None, ..industry.clone() };
    assert_eq!(exclusion_reason(&missing), Some(ExclusionReason::MissingFeature));
    let no_profile = RawCandidate { has_scholar_profile: false, ..missing };
    assert_eq!(exclusion_reason(&no_profile), Some(ExclusionReason::NoScholarProfile));
    let us_without_state = RawCandidate { country: Some("US".into()), ..base };
    assert_eq!(exclusion_reason(&us_without_state), Some(ExclusionReason::MissingFeature));
}

#[test]
fn bad_cells_become_row_errors() {
    let csv = "id,gender,ethnicity,country,university_rank,career_stage,h_index,has_scholar_profile,sector\n\
               a,female,white,DE,10,junior,4,true,academia\n\
               b,robot,white,DE,10,junior,4,true,academia\n\
               c,male,white,DE,ten,junior,4,true,academia\n\
               d,male,unknown,DE,10,senior,,true,academia\n";
    let pool = read_pool(Cursor::new(csv), PoolFormat::Csv, "t".into()).unwrap();
    let ids: Vec<_> = pool.records.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["a", "d"]);
    let bad: Vec<_> = pool.row_errors.iter().map(|e| (e.row, e.column.as_str())).collect();
    assert_eq!(bad, [(2, "gender"), (3, "university_rank")]);
    assert_eq!(pool.records[1].h_index, None);
}

#[test]
fn missing_column_and_duplicate_id_are_fatal() {
    let no_gender = "id,ethnicity,country,university_rank,career_stage,h_index,has_scholar_profile,sector\n";
    assert!(matches!(
        read_pool(Cursor::new(no_gender), PoolFormat::Csv, "t".into()),
        Err(IngestError::MissingColumn(_))
    ));
    let dup = r#"[{"id":"a","gender":"male","ethnicity":"white","country":"DE","university_rank":3,"career_stage":"senior","h_index":1,"has_scholar_profile":true,"sector":"academia"},
                  {"id":"a","gender":"male","ethnicity":"white","country":"DE","university_rank":3,"career_stage":"senior","h_index":1,"has_scholar_profile":true,"sector":"academia"}]"#;
    assert!(matches!(read_pool(Cursor::new(dup), PoolFormat::Json, "t".into()), Err(IngestError::DuplicateId(_))));
}

#[test]
fn sigcomm_fixture_loads_cleanly() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sigcomm2017_current_pc.csv");
    let pool = load_pool(&path, None).unwrap();
    assert!(pool.row_errors.is_empty());
    let (kept, log) = apply_exclusions(&pool.records).unwrap();
    assert_eq!((kept.len(), log.len()), (23, 0));
}

#[test]
fn bundled_tables_parse() {
    let gdp = bundled_gdp_table();
    assert!(gdp.len() > 40 && gdp.contains_key("US") && gdp.contains_key("IN"));
    assert_eq!(parse_epscor_list("# c\nar\n\n ks \n").into_iter().collect::<Vec<_>>(), ["AR", "KS"]);
    let parsed = parse_gdp_table(Cursor::new("country_code,gdp\nAA,1.5\n# skip\nBB,2\n")).unwrap();
    assert_eq!(parsed.len(), 2);
}
