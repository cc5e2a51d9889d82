use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use polytope_core::scoring::build_all_reports;
use polytope_core::storage::{
    export_report, read_corpus, replay_annotations, serialize_annotation_set, serialize_corpus, ExportFormat,
    ExportOptions, LogRecord, Tombstone,
};
use polytope_core::{
    AnnotationCandidate, AnnotationSet, Corpus, IssueType, Sample, SeverityMatrix, Span, SyntacticLabel, Target,
};

fn corpus() -> Corpus {
    Corpus::new(vec![
        Sample {
            id: "s1".into(),
            source: "The council approved the budget on Monday. It takes effect in May.".into(),
            reference: "The council approved the budget.".into(),
            system_outputs: BTreeMap::from([
                ("bart".to_string(), "The council approved a budget on Monday.".to_string()),
                ("lead3".to_string(), "The council approved the budget on Monday.".to_string()),
            ]),
        },
        Sample {
            id: "s2".into(),
            source: "Heavy rain closed two schools. Classes resume Friday.".into(),
            reference: "Rain closed schools.".into(),
            system_outputs: BTreeMap::from([
                ("bart".to_string(), "Rain closed three schools until Friday.".to_string()),
                ("lead3".to_string(), "Heavy rain closed two schools.".to_string()),
            ]),
        },
    ])
    .unwrap()
}

fn create(id: &str, sample: &str, system: &str, start: usize, issue: IssueType, label: SyntacticLabel) -> LogRecord {
    let candidate = AnnotationCandidate {
        id: id.into(),
        sample_id: sample.into(),
        target: Target::system(system),
        span: Span::new(start, start + 4),
        issue_type: issue,
        syntactic_label: label,
        annotator: "ann1".into(),
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 5, 6, 7).unwrap(),
    };
    let c = corpus();
    LogRecord::Create(
        polytope_core::validate_annotation(candidate, c.get(sample).unwrap(), SeverityMatrix::builtin()).unwrap(),
    )
}

fn delete(id: &str) -> LogRecord {
    LogRecord::Delete(Tombstone { deleted: id.into(), annotator: Some("ann1".into()), at: None })
}

fn records() -> Vec<LogRecord> {
    vec![
        create("a", "s1", "bart", 0, IssueType::Omission, SyntacticLabel::Subject),
        create("b", "s2", "bart", 17, IssueType::InaccuracyIntrinsic, SyntacticLabel::NumberTime),
        delete("a"),
        create("a2", "s1", "bart", 0, IssueType::Omission, SyntacticLabel::Subject),
        create("c", "s2", "lead3", 0, IssueType::WordForm, SyntacticLabel::Attribute),
        delete("c"),
        create("d", "s1", "lead3", 4, IssueType::Duplication, SyntacticLabel::Object),
    ]
}

fn replay(text: &str) -> AnnotationSet {
    replay_annotations(text.as_bytes(), &corpus(), SeverityMatrix::builtin()).unwrap()
}

#[test]
fn create_delete_create_sequence() {
    let log: String = records().iter().map(LogRecord::to_line).collect();
    let set = replay(&log);
    assert_eq!(set.iter().map(|a| a.id.as_str()).collect::<Vec<_>>(), ["b", "a2", "d"]);
}

#[test]
fn every_record_boundary_prefix_replays() {
    let lines: Vec<String> = records().iter().map(LogRecord::to_line).collect();
    for cut in 0..=lines.len() {
        let prefix: String = lines[..cut].concat();
        // the prefix equals replaying exactly those records by hand
        let mut expected: Vec<String> = Vec::new();
        for r in &records()[..cut] {
            match r {
                LogRecord::Create(a) => expected.push(a.id.clone()),
                LogRecord::Delete(t) => expected.retain(|id| id != &t.deleted),
            }
        }
        let set = replay(&prefix);
        assert_eq!(set.iter().map(|a| a.id.clone()).collect::<Vec<_>>(), expected, "cut at {cut}");
    }
}

#[test]
fn compacted_log_replays_to_same_set() {
    let log: String = records().iter().map(LogRecord::to_line).collect();
    let set = replay(&log);
    assert_eq!(replay(&serialize_annotation_set(&set)), set);
}

#[test]
fn corpus_round_trip_is_canonical() {
    let text = serialize_corpus(&corpus());
    let back = read_corpus(text.as_bytes()).unwrap();
    assert_eq!(back, corpus());
    assert_eq!(serialize_corpus(&back), text);
}

#[test]
fn identical_reports_export_identical_bytes() {
    let log: String = records().iter().map(LogRecord::to_line).collect();
    let one = build_all_reports::<f64>(&corpus(), &replay(&log)).unwrap();
    let two = build_all_reports::<f64>(&corpus(), &replay(&log)).unwrap();
    for format in [ExportFormat::Table, ExportFormat::Delimited] {
        let opts = ExportOptions { format, ..Default::default() };
        assert_eq!(export_report(&one, &opts), export_report(&two, &opts));
    }
}

#[test]
fn report_golden_file() {
    let log: String = records().iter().map(LogRecord::to_line).collect();
    let reports = build_all_reports::<f64>(&corpus(), &replay(&log)).unwrap();
    let out = String::from_utf8(export_report(&reports, &ExportOptions::default())).unwrap();
    assert_eq!(out, include_str!("fixtures/report.txt"));
}
