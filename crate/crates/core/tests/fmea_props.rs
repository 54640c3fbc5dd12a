#[path = "support/fmea_tables.rs"]
mod fmea_tables;

use chrono::{Duration, TimeZone, Utc};
use itriage_core::fmea::{
    describe_severity, occurrence, rank_branches, report, risk_priority, rpn, Dimension, FaultRecord, RecordStore,
    Weights,
};
use itriage_core::{default_knowledge_base, Area, CostVector, KnowledgeBase, SeverityLevel};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fmea_tables::{brute_force, random_weights, weights, CATALOG, EFFECTS, INTERVENTIONS, VACUUM_FAN_OUT};
use SeverityLevel::{High, Low, Medium};

fn ranked(kb: &KnowledgeBase, w: &Weights) -> Vec<(String, BigRational)> {
    rank_branches(kb, "vacuum", "troubleshoot", w)
        .unwrap()
        .into_iter()
        .map(|b| (b.label, b.score.expect("vacuum branches are all linked")))
        .collect()
}

#[test]
fn catalog_matches_assessment_table() {
    let kb = default_knowledge_base();
    assert_eq!(kb.catalog().len(), CATALOG.len());
    for (m, (area, name, impact, time, dist)) in kb.catalog().iter().zip(CATALOG) {
        assert_eq!((m.area.to_string().as_str(), m.name.as_str()), (area, name));
        assert_eq!(m.cost, CostVector::new(impact, time, dist), "{name}");
    }
    let rows = report(&kb, &RecordStore::new());
    let got: Vec<_> = rows.iter().map(|r| (r.area.to_string(), r.name.clone(), r.impact, r.time, r.disturbance)).collect();
    let want: Vec<_> = CATALOG.iter().map(|(a, n, i, t, d)| (a.to_string(), n.to_string(), *i, *t, *d)).collect();
    assert_eq!(got, want);
}

#[test]
fn severity_tables_are_verbatim() {
    let mut cells = 0;
    for (dim, texts) in EFFECTS {
        for (level, text) in [Low, Medium, High].into_iter().zip(texts) {
            assert_eq!(describe_severity(dim, level).effect_text, text);
            cells += 1;
        }
    }
    assert_eq!(cells, 9);
    for (level, definition, intervention) in INTERVENTIONS {
        for dim in Dimension::ALL {
            let d = describe_severity(dim, level);
            assert_eq!((d.definition_text, d.intervention_text), (definition, intervention));
        }
    }
    assert_eq!(Dimension::DisturbanceRisk.label(), "Misalignment Risk");
}

#[test]
fn default_ranking_of_vacuum_fan_out() {
    let kb = default_knowledge_base();
    let order: Vec<String> = ranked(&kb, &Weights::default()).into_iter().map(|(l, _)| l).collect();
    assert_eq!(order, ["Outgassing", "Component Failure", "Leakage"]);
    let time_only = ranked(&kb, &Weights::from_integers(0, 1, 0).unwrap());
    assert_eq!(
        time_only.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>(),
        ["Leakage", "Outgassing", "Component Failure"]
    );
}

#[test]
fn ranking_matches_brute_force_and_survives_scaling() {
    let kb = default_knowledge_base();
    let mut rng = ChaCha8Rng::seed_from_u64(0xf3ea);
    for _ in 0..100 {
        let w = random_weights(&mut rng);
        let got = ranked(&kb, &weights(&w));
        assert_eq!(got, brute_force(&kb, &w), "{w:?}");
        let factor = BigRational::new(BigInt::from(rng.gen_range(1..=1000)), BigInt::from(rng.gen_range(1..=1000)));
        let scaled = ranked(&kb, &weights(&w).scaled(&factor).unwrap());
        let labels = |v: &[(String, BigRational)]| v.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>();
        assert_eq!(labels(&scaled), labels(&got));
        for ((_, a), (_, b)) in got.iter().zip(&scaled) {
            assert_eq!(a * &factor, *b);
        }
    }
}

fn raise(l: SeverityLevel) -> SeverityLevel {
    match l {
        Low => Medium,
        _ => High,
    }
}

fn with_cost(kb: &KnowledgeBase, mode: &str, cost: CostVector) -> KnowledgeBase {
    let mut parts = kb.to_parts();
    parts.catalog.iter_mut().find(|m| m.id == mode).unwrap().cost = cost;
    KnowledgeBase::build(parts).unwrap()
}

fn level_from(i: u8) -> SeverityLevel {
    [Low, Medium, High][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn raising_a_level_never_improves_rank(
        levels in prop::array::uniform9(0u8..3),
        branch in 0usize..3,
        dim in 0usize..3,
        w in prop::array::uniform3(0i64..6),
    ) {
        let mut kb = default_knowledge_base();
        for (i, (_, modes)) in VACUUM_FAN_OUT.iter().enumerate() {
            let c = CostVector::new(level_from(levels[3 * i]), level_from(levels[3 * i + 1]), level_from(levels[3 * i + 2]));
            kb = with_cost(&kb, modes[0], c);
        }
        let weights = Weights::from_integers(w[0], w[1], w[2]).unwrap();
        let (label, modes) = VACUUM_FAN_OUT[branch];
        let position = |kb: &KnowledgeBase| ranked(kb, &weights).iter().position(|(l, _)| l == label).unwrap();
        let before = position(&kb);
        let mut c = kb.failure_mode(modes[0]).unwrap().cost;
        match dim {
            0 => c.operational_impact = raise(c.operational_impact),
            1 => c.time_cost = raise(c.time_cost),
            _ => c.disturbance_risk = raise(c.disturbance_risk),
        }
        let after = position(&with_cost(&kb, modes[0], c));
        prop_assert!(after >= before, "{label}: {before} -> {after}");
    }

    #[test]
    fn rpn_bounds(i in 0u8..3, d in 0u8..3, bucket in 1u32..=3) {
        let c = CostVector::new(level_from(i), Medium, level_from(d));
        let v = rpn(&c, bucket);
        prop_assert!((1..=27).contains(&v));
        prop_assert_eq!(v == 1, i == 0 && d == 0 && bucket == 1);
        prop_assert_eq!(rpn(&c, 3), 3 * rpn(&c, 1));
    }
}

fn record(i: i64, mode: &str) -> FaultRecord {
    FaultRecord {
        session: format!("s{i}"),
        ts: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap() + Duration::minutes(i),
        mode: mode.into(),
        area: None,
        duration_s: 60.0,
        notes: String::new(),
    }
}

#[test]
fn occurrence_and_rpn_from_records() {
    let kb = default_knowledge_base();
    let mut store = RecordStore::new();
    let empty = occurrence(&store, "leak");
    assert_eq!((empty.count, empty.fraction, empty.bucket), (0, 0.0, 1));
    assert_eq!(risk_priority(&kb, &store, "leak").unwrap(), 9);
    assert_eq!(risk_priority(&kb, &store, "light_leak").unwrap(), 1);

    assert!(store.ingest(&kb, record(0, "leak")).unwrap());
    assert!(!store.ingest(&kb, record(0, "leak")).unwrap());
    assert_eq!(store.records()[0].area, Some(Area::Vacuum));
    let one = occurrence(&store, "leak");
    assert_eq!((one.count, one.bucket), (1, 1));
    assert_eq!(risk_priority(&kb, &store, "leak").unwrap(), 9);

    for i in 1..4 {
        store.ingest(&kb, record(i, "leak")).unwrap();
    }
    for i in 4..10 {
        store.ingest(&kb, record(i, "dc_noise")).unwrap();
    }
    let four = occurrence(&store, "leak");
    assert_eq!((four.count, four.fraction, four.bucket), (4, 0.4, 3));
    assert_eq!(risk_priority(&kb, &store, "leak").unwrap(), 27);
    assert!(store.ingest(&kb, record(99, "no_such_mode")).is_err());
}

#[test]
fn bucket_edges() {
    let kb = default_knowledge_base();
    let mut store = RecordStore::new();
    store.ingest(&kb, record(0, "leak")).unwrap();
    for i in 1..20 {
        store.ingest(&kb, record(i, "dc_noise")).unwrap();
    }
    let o = occurrence(&store, "leak");
    assert_eq!((o.fraction, o.bucket), (0.05, 2));
    assert_eq!(occurrence(&store, "light_leak").bucket, 1);
}
