use polytope_core::{lookup_severity, IssueType, Severity, SeverityMatrix, SyntacticLabel};

const MATRIX_TSV: &str = include_str!("fixtures/severity_matrix.tsv");

fn issue(name: &str) -> IssueType {
    match name {
        "Addition" => IssueType::Addition,
        "Omission" => IssueType::Omission,
        "Inacc Intrinsic" => IssueType::InaccuracyIntrinsic,
        "Inacc Extrinsic" => IssueType::InaccuracyExtrinsic,
        "Pos Neg Aspect" => IssueType::PositiveNegativeAspect,
        "Word Order" => IssueType::WordOrder,
        "Word Form" => IssueType::WordForm,
        "Duplication" => IssueType::Duplication,
        other => panic!("unexpected row {other}"),
    }
}

fn label(name: &str) -> SyntacticLabel {
    match name {
        "Subject" => SyntacticLabel::Subject,
        "Object" => SyntacticLabel::Object,
        "Predicate" => SyntacticLabel::Predicate,
        "Number&Time" => SyntacticLabel::NumberTime,
        "Place&Name" => SyntacticLabel::PlaceName,
        "Attribute" => SyntacticLabel::Attribute,
        "Function Word" => SyntacticLabel::FunctionWord,
        "Whole Sentence" => SyntacticLabel::WholeSentence,
        other => panic!("unexpected column {other}"),
    }
}

fn cell(text: &str) -> Option<Severity> {
    match text {
        "Critical" => Some(Severity::Critical),
        "Major" => Some(Severity::Major),
        "Minor" => Some(Severity::Minor),
        "N/A" => None,
        other => panic!("unexpected cell {other}"),
    }
}

/// The transcribed table as (issue, label, expected) triples.
fn transcribed() -> Vec<(IssueType, SyntacticLabel, Option<Severity>)> {
    let mut lines = MATRIX_TSV.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<SyntacticLabel> = lines.next().unwrap().split('\t').skip(1).map(label).collect();
    lines
        .flat_map(|line| {
            let mut fields = line.split('\t');
            let row = issue(fields.next().unwrap());
            fields.zip(header.clone()).map(move |(c, l)| (row, l, cell(c))).collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn all_64_cells_match() {
    let cells = transcribed();
    assert_eq!(cells.len(), 64);
    for (i, l, expected) in cells {
        assert_eq!(lookup_severity(i, l), expected, "{i} x {l}");
    }
}

#[test]
fn exactly_14_not_applicable() {
    assert_eq!(transcribed().iter().filter(|c| c.2.is_none()).count(), 14);
    assert_eq!(SeverityMatrix::builtin().not_applicable_count(), 14);
}

#[test]
fn every_pair_covered_once() {
    let cells = transcribed();
    for i in IssueType::ALL {
        for l in SyntacticLabel::ALL {
            assert_eq!(cells.iter().filter(|c| c.0 == i && c.1 == l).count(), 1);
        }
    }
}

#[test]
fn valid_labels_are_the_non_na_cells() {
    let m = SeverityMatrix::builtin();
    assert_eq!(
        m.valid_labels(IssueType::PositiveNegativeAspect),
        [SyntacticLabel::Predicate, SyntacticLabel::Attribute]
    );
    assert_eq!(m.valid_labels(IssueType::WordOrder).len(), 3);
    assert_eq!(m.valid_labels(IssueType::Addition).len(), 8);
}

#[test]
fn reordered_matrix_parses_to_same_cells() {
    // the parser keys columns by header name, so a permuted file is equivalent
    let text =
        "issue_type\tWholeSentence\tSubject\tPredicate\tObject\tNumberTime\tPlaceName\tAttribute\tFunctionWord\n\
                Addition\tMajor\tCritical\tCritical\tCritical\tMajor\tMajor\tMajor\tMinor\n\
                Omission\tCritical\tCritical\tCritical\tCritical\tCritical\tMajor\tMajor\tMinor\n\
                InaccuracyIntrinsic\tN/A\tCritical\tCritical\tCritical\tCritical\tCritical\tMajor\tMinor\n\
                InaccuracyExtrinsic\tN/A\tCritical\tCritical\tCritical\tCritical\tCritical\tCritical\tMinor\n\
                PositiveNegativeAspect\tN/A\tN/A\tCritical\tN/A\tN/A\tN/A\tCritical\tN/A\n\
                Duplication\tMajor\tMajor\tMajor\tMajor\tMajor\tMajor\tMajor\tMinor\n\
                WordForm\tN/A\tMinor\tMinor\tMinor\tMinor\tMinor\tMinor\tMinor\n\
                WordOrder\tN/A\tN/A\tMajor\tN/A\tN/A\tN/A\tMajor\tMinor\n";
    assert_eq!(&SeverityMatrix::parse(text).unwrap(), SeverityMatrix::builtin());
}
