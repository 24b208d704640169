mod common;

use fairuse::audit::{audit, AuditConfig, FairUseReport, TestSelection};
use fairuse::dataset::{read_csv, tally, write_csv, CsvSchema};
use fairuse::metrics::{group_risk, MetricKind};
use fairuse::models::{train_personalized, Reported, Strategy, TrainConfig};
use fairuse::synth::{gen_planted_violation, planted_rates, SynthKind, SynthSpec, PLANTED_CELL};

fn quick_config() -> AuditConfig {
    AuditConfig { bootstrap: 300, metrics: vec![MetricKind::ErrorRate, MetricKind::Auc, MetricKind::Ece], ..AuditConfig::default() }
}

#[test]
fn every_generator_round_trips_through_csv() {
    for kind in SynthKind::ALL {
        let s = SynthSpec::worked(kind).generate().unwrap();
        for data in std::iter::once(&s.data).chain(s.truth.as_ref()) {
            let mut buf = Vec::new();
            write_csv(data, &mut buf).unwrap();
            let typed = read_csv(buf.as_slice(), &CsvSchema::with_domains(data.space())).unwrap();
            assert_eq!(&typed, data, "{kind}");
            // Without declared domains the order of first appearance must still give the same tally.
            let inferred = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
            assert_eq!(tally(&inferred).cells(), tally(data).cells(), "{kind}");
        }
    }
}

#[test]
fn audit_is_deterministic_and_serializes() {
    let train = common::random_instance(11);
    let test = common::random_instance(12);
    let cfg = quick_config();
    let a = audit(&train, &test, &cfg).unwrap();
    let b = audit(&train, &test, &cfg).unwrap();
    assert_eq!(a, b);
    let back = FairUseReport::from_json_str(&a.to_json_string()).unwrap();
    assert_eq!(back.to_json_string(), a.to_json_string());
    let other = audit(&train, &test, &AuditConfig { seed: 1, ..cfg }).unwrap();
    assert_eq!(other.primary().groups, a.primary().groups, "point estimates do not depend on the seed");
}

#[test]
fn markdown_has_every_section() {
    let train = common::random_instance(21);
    let test = common::random_instance(22);
    let report = audit(&train, &test, &quick_config()).unwrap();
    let md = report.to_markdown();
    assert!(md.starts_with("# Fair use audit\n"));
    for section in ["## Metric: error", "## Metric: auc", "## Metric: ece", "### Groups", "### Misreporting matrix", "## Generalization bounds"] {
        assert!(md.contains(section), "missing {section}");
    }
    for g in &report.groups {
        assert!(md.contains(g.as_str()), "group {g} absent");
    }
    assert_eq!(md, report.to_markdown());
}

#[test]
fn mcnemar_only_audit_skips_bootstrap() {
    let train = common::random_instance(31);
    let test = common::random_instance(32);
    let cfg = AuditConfig { tests: TestSelection::McNemar, bootstrap: 0, ..AuditConfig::default() };
    let report = audit(&train, &test, &cfg).unwrap();
    assert!(report.primary().hypotheses.iter().all(|h| h.test == fairuse::audit::TestKind::McNemar));
    assert_eq!(report.primary().hypotheses.len(), 4 + 12);
}

/// Large-sample check that the planted construction realizes the requested gain.
#[test]
fn planted_gain_matches_gap() {
    for (gap, seed) in [(-0.15, 1), (0.2, 2), (-0.3, 3)] {
        let train = gen_planted_violation(4, 4000, gap, seed).unwrap();
        let test = gen_planted_violation(4, 20_000, gap, seed + 100).unwrap();
        let model = train_personalized(&train, Strategy::OneHot, &TrainConfig::default()).unwrap();
        let generic = model.generic();
        let g = test.space().group(PLANTED_CELL);
        let own = group_risk(&model, &test, Some(&g), &Reported::Group(g.clone()), MetricKind::ErrorRate).unwrap();
        let base = group_risk(&generic, &test, Some(&g), &Reported::Withheld, MetricKind::ErrorRate).unwrap();
        let est = base.risk().unwrap() - own.risk().unwrap();
        // Each row contributes +-1 to the gain, so its standard error is sqrt((1 - gap^2) / n).
        let se = ((1.0 - gap * gap) / 20_000.0).sqrt();
        assert!((est - gap).abs() < 4.0 * se, "gap {gap}: estimated {est}");
        assert!((planted_rates(gap)[PLANTED_CELL] - (0.5 + 0.5 * gap)).abs() < 1e-15);
    }
}
