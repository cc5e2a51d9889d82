//! Deterministic text rendering of reports.
//!
//! Output is a pure function of the report value and the options: fixed
//! row order, fixed decimal places, no timestamps.

use crate::analysis::{CorrelationRow, CorrelationTable};
use crate::layout::PositionDistribution;
use crate::model::{IssueType, Severity};
use crate::num::{Real, Scalar};
use crate::rouge::{Prf, RougeReport, RougeScores};
use crate::scoring::{Aggregation, SystemReport};
use crate::stats::Agreement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    /// Space-aligned columns with a header rule.
    #[default]
    Table,
    /// Comma-separated values with a header row.
    Delimited,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ExportFormat::Table),
            "delimited" | "csv" => Ok(ExportFormat::Delimited),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportOptions {
    pub format: ExportFormat,
    /// Decimal places for real-valued cells.
    pub precision: usize,
    /// Single score row for this aggregation, or both when `None`.
    pub aggregation: Option<Aggregation>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { format: ExportFormat::Table, precision: 2, aggregation: None }
    }
}

impl ExportOptions {
    pub fn with_precision(self, precision: usize) -> Self {
        ExportOptions { precision, ..self }
    }
}

/// Fixed-point rendering; negative zero prints without a sign.
pub fn format_number<T: Scalar>(value: T, precision: usize) -> String {
    let v = value.to_f64_lossy();
    let s = format!("{v:.precision$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// A rectangular table of preformatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn new(header: Vec<String>) -> Self {
        Grid { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: ExportFormat) -> Vec<u8> {
        match format {
            ExportFormat::Table => self.render_table().into_bytes(),
            ExportFormat::Delimited => self.render_delimited(),
        }
    }

    fn render_table(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                std::iter::once(&self.header[c])
                    .chain(self.rows.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| -> String {
            let mut out = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    out.push_str(&format!("{cell:<w$}", w = widths[0]));
                } else {
                    out.push_str(&format!("  {cell:>w$}", w = widths[c]));
                }
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
            out
        };
        let mut out = line(&self.header);
        let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }

    fn render_delimited(&self) -> Vec<u8> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        writer.into_inner().expect("in-memory flush")
    }
}

/// Score-card table: one column per system; issue-type rows, severity rows,
/// error totals, then the PolyTope score row(s).
pub fn export_report<T: Scalar>(reports: &[SystemReport<T>], options: &ExportOptions) -> Vec<u8> {
    let mut header = vec!["metric".to_string()];
    header.extend(reports.iter().map(|r| r.system.clone()));
    let mut grid = Grid::new(header);
    let count_row = |label: &str, f: &dyn Fn(&SystemReport<T>) -> u64| -> Vec<String> {
        std::iter::once(label.to_string()).chain(reports.iter().map(|r| f(r).to_string())).collect()
    };
    let real_row = |label: &str, f: &dyn Fn(&SystemReport<T>) -> T| -> Vec<String> {
        std::iter::once(label.to_string())
            .chain(reports.iter().map(|r| format_number(f(r), options.precision)))
            .collect()
    };

    for issue in IssueType::REPORT_ORDER {
        grid.push(count_row(issue.name(), &|r| r.issue_count(issue)));
    }
    for severity in Severity::REPORT_ORDER {
        grid.push(count_row(severity.name(), &|r| r.severity_counts.get(severity)));
    }
    grid.push(count_row("Errors", &|r| r.total_errors));
    grid.push(real_row("Errors / 1k Words", &|r| r.errors_per_1k_words));
    match options.aggregation {
        Some(aggregation) => grid.push(real_row("PolyTope Score", &|r| r.score(aggregation))),
        None => {
            grid.push(real_row("PolyTope Score (macro)", &|r| r.macro_score));
            grid.push(real_row("PolyTope Score (micro)", &|r| r.micro_score));
        }
    }
    grid.render(options.format)
}

/// Per-sample rows for one system: words, severity counts, errors, score.
pub fn export_sample_scores<T: Scalar>(report: &SystemReport<T>, options: &ExportOptions) -> Vec<u8> {
    let mut grid =
        Grid::new(["sample", "words", "critical", "major", "minor", "errors", "score"].map(String::from).to_vec());
    for s in &report.samples {
        grid.push(vec![
            s.sample_id.clone(),
            s.word_count.to_string(),
            s.counts.critical.to_string(),
            s.counts.major.to_string(),
            s.counts.minor.to_string(),
            s.counts.total().to_string(),
            format_number(s.score, options.precision),
        ]);
    }
    grid.render(options.format)
}

fn prf_cells<T: Scalar>(scores: &RougeScores<T>, precision: usize) -> Vec<String> {
    [scores.rouge1, scores.rouge2, scores.rouge_l]
        .iter()
        .flat_map(|p: &Prf<T>| [p.precision, p.recall, p.f1])
        .map(|v| format_number(v, precision))
        .collect()
}

/// Per-sample ROUGE P/R/F1 rows followed by a `mean` row.
pub fn export_rouge<T: Scalar>(report: &RougeReport<T>, options: &ExportOptions) -> Vec<u8> {
    let mut header = vec!["sample".to_string()];
    for v in ["R1", "R2", "RL"] {
        for m in ["P", "R", "F1"] {
            header.push(format!("{v}-{m}"));
        }
    }
    let mut grid = Grid::new(header);
    for s in &report.samples {
        let mut row = vec![s.sample_id.clone()];
        row.extend(prf_cells(&s.scores, options.precision));
        grid.push(row);
    }
    let mut mean = vec!["mean".to_string()];
    mean.extend(prf_cells(&report.mean, options.precision));
    grid.push(mean);
    grid.render(options.format)
}

fn correlation_cells<T: Real>(row: &CorrelationRow<T>, precision: usize) -> Vec<String> {
    row.cells
        .iter()
        .map(|c| c.value.map(|v| format_number(v, precision)).unwrap_or_else(|| "n/a".to_string()))
        .collect()
}

/// Correlation table with columns level, measure, R-1, R-2, R-L.
pub fn export_correlation<T: Real>(table: &CorrelationTable<T>, options: &ExportOptions) -> Vec<u8> {
    let mut grid = Grid::new(["level", "measure", "R-1", "R-2", "R-L"].map(String::from).to_vec());
    for row in &table.rows {
        let mut cells = vec![row.level.clone(), row.measure.clone()];
        cells.extend(correlation_cells(row, options.precision));
        grid.push(cells);
    }
    grid.render(options.format)
}

/// Just the system row.
pub fn export_system_correlation<T: Real>(row: &CorrelationRow<T>, options: &ExportOptions) -> Vec<u8> {
    export_correlation(&CorrelationTable { rows: vec![row.clone()] }, options)
}

pub fn export_agreement<T: Real>(agreement: &Agreement<T>, options: &ExportOptions) -> Vec<u8> {
    let mut grid = Grid::new(["annotator_a", "annotator_b", "documents", "pearson"].map(String::from).to_vec());
    for p in &agreement.pairs {
        grid.push(vec![
            p.annotator_a.clone(),
            p.annotator_b.clone(),
            p.common_documents.to_string(),
            format_number(p.pearson, options.precision),
        ]);
    }
    grid.push(vec!["mean".into(), String::new(), String::new(), format_number(agreement.mean, options.precision)]);
    grid.render(options.format)
}

/// Plot-ready columns: position, count, coverage, neg_log.
pub fn export_distribution<T: Real>(dist: &PositionDistribution<T>, options: &ExportOptions) -> Vec<u8> {
    let mut grid = Grid::new(["position", "count", "coverage", "neg_log"].map(String::from).to_vec());
    for b in &dist.buckets {
        grid.push(vec![
            b.label.clone(),
            b.count.to_string(),
            format_number(b.coverage, options.precision),
            format_number(b.neg_log, options.precision),
        ]);
    }
    grid.render(options.format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Corpus, Sample, Target};
    use crate::scoring::build_system_report;
    use crate::AnnotationSet;
    use std::collections::BTreeMap;

    fn report() -> SystemReport<f64> {
        let corpus = Corpus::new(vec![Sample {
            id: "s1".into(),
            source: "Src.".into(),
            reference: "Ref.".into(),
            system_outputs: BTreeMap::from([("lead3".to_string(), "a b c d".to_string())]),
        }])
        .unwrap();
        build_system_report(&corpus, &AnnotationSet::new(), &Target::system("lead3")).unwrap()
    }

    #[test]
    fn numbers() {
        assert_eq!(format_number(100.0, 2), "100.00");
        assert_eq!(format_number(-0.0001, 2), "0.00");
        assert_eq!(format_number(-1.005, 1), "-1.0");
        assert_eq!(format_number(2.0 / 3.0, 4), "0.6667");
    }

    #[test]
    fn zero_error_report() {
        let out = String::from_utf8(export_report(&[report()], &ExportOptions::default())).unwrap();
        assert!(out.contains("PolyTope Score (macro)  100.00"));
        let labels: Vec<&str> = out.lines().skip(2).map(|l| l.split("  ").next().unwrap()).collect();
        assert_eq!(
            labels,
            [
                "Addition",
                "Omission",
                "InaccuracyIntrinsic",
                "InaccuracyExtrinsic",
                "PositiveNegativeAspect",
                "WordOrder",
                "WordForm",
                "Duplication",
                "Critical",
                "Major",
                "Minor",
                "Errors",
                "Errors / 1k Words",
                "PolyTope Score (macro)",
                "PolyTope Score (micro)",
            ]
        );
    }

    #[test]
    fn delimited_and_deterministic() {
        let opts = ExportOptions {
            format: ExportFormat::Delimited,
            aggregation: Some(Aggregation::Micro),
            ..Default::default()
        };
        let a = export_report(&[report()], &opts);
        assert_eq!(a, export_report(&[report()], &opts));
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("metric,lead3\nAddition,0\n"));
        assert!(text.ends_with("PolyTope Score,100.00\n"));
    }

    #[test]
    fn grid_quotes_commas() {
        let mut g = Grid::new(vec!["a".into(), "b".into()]);
        g.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(String::from_utf8(g.render(ExportFormat::Delimited)).unwrap(), "a,b\n\"x,y\",1\n");
        assert_eq!(String::from_utf8(g.render(ExportFormat::Table)).unwrap(), "a    b\n------\nx,y  1\n");
    }
}
