use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{HarnessError, ReportFormat};
use crate::metrics::{ClassMetrics, ConfusionMatrix, MetricsReport};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    precision: f64,
    recall: f64,
    f_measure: f64,
    g_mean: f64,
    precision_defined: bool,
    recall_defined: bool,
    f_measure_defined: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportDocument {
    class_names: Vec<String>,
    per_class: Vec<ClassEntry>,
    overall_accuracy: f64,
    error_rate: f64,
    macro_f: f64,
    macro_g: f64,
    confusion: Vec<Vec<u64>>,
    normalized_confusion: Vec<Vec<f64>>,
}

impl From<&MetricsReport> for ReportDocument {
    fn from(r: &MetricsReport) -> Self {
        Self {
            class_names: r.class_names().to_vec(),
            per_class: r
                .per_class
                .iter()
                .map(|m| ClassEntry {
                    precision: m.precision,
                    recall: m.recall,
                    f_measure: m.f_measure,
                    g_mean: m.g_mean,
                    precision_defined: m.precision_defined,
                    recall_defined: m.recall_defined,
                    f_measure_defined: m.f_measure_defined,
                })
                .collect(),
            overall_accuracy: r.overall_accuracy,
            error_rate: r.error_rate,
            macro_f: r.macro_f,
            macro_g: r.macro_g,
            confusion: r.confusion.counts().to_vec(),
            normalized_confusion: r.normalized_confusion.clone(),
        }
    }
}

pub fn render_report(report: &MetricsReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&ReportDocument::from(report))
                .expect("report is always serializable");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => render_csv(report).into_bytes(),
        ReportFormat::Text => render_text(report).into_bytes(),
    }
}

/// Reads a report written by [`render_report`] in JSON form.
pub fn parse_json_report(text: &str) -> Result<MetricsReport, HarnessError> {
    let doc: ReportDocument = serde_json::from_str(text)?;
    if doc.per_class.len() != doc.class_names.len() {
        return Err(HarnessError::Config(
            "per_class and class_names lengths differ".into(),
        ));
    }
    let confusion = ConfusionMatrix::from_counts(doc.confusion, doc.class_names)?;
    Ok(MetricsReport {
        per_class: doc
            .per_class
            .into_iter()
            .map(|e| ClassMetrics {
                precision: e.precision,
                recall: e.recall,
                f_measure: e.f_measure,
                g_mean: e.g_mean,
                precision_defined: e.precision_defined,
                recall_defined: e.recall_defined,
                f_measure_defined: e.f_measure_defined,
            })
            .collect(),
        overall_accuracy: doc.overall_accuracy,
        error_rate: doc.error_rate,
        macro_f: doc.macro_f,
        macro_g: doc.macro_g,
        confusion,
        normalized_confusion: doc.normalized_confusion,
    })
}

// Values are written with the shortest round-tripping decimal.
fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from("class,precision,recall,f_measure,g_mean,accuracy\n");
    for (name, m) in report.class_names().iter().zip(&report.per_class) {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},",
            m.precision, m.recall, m.f_measure, m.g_mean
        );
    }
    let _ = writeln!(
        out,
        "overall,,,{},{},{}",
        report.macro_f, report.macro_g, report.overall_accuracy
    );
    out
}

fn grid<T>(out: &mut String, names: &[String], rows: &[Vec<T>], cell: impl Fn(&T) -> String) {
    let label_w = names.iter().map(String::len).max().unwrap_or(0).max(6);
    let col_w: Vec<usize> = names
        .iter()
        .enumerate()
        .map(|(j, n)| {
            rows.iter()
                .map(|r| cell(&r[j]).len())
                .chain([n.len()])
                .max()
                .unwrap_or(1)
        })
        .collect();
    let _ = write!(out, "{:label_w$}", "");
    for (n, w) in names.iter().zip(&col_w) {
        let _ = write!(out, "  {n:>w$}");
    }
    out.push('\n');
    for (name, row) in names.iter().zip(rows) {
        let _ = write!(out, "{name:label_w$}");
        for (v, w) in row.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", cell(v));
        }
        out.push('\n');
    }
}

fn render_text(report: &MetricsReport) -> String {
    let names = report.class_names();
    let mut out = String::new();
    out.push_str("Confusion matrix (rows: actual, columns: predicted)\n");
    grid(&mut out, names, report.confusion.counts(), |v| {
        v.to_string()
    });
    out.push_str("\nNormalized confusion matrix\n");
    grid(&mut out, names, &report.normalized_confusion, |v| {
        format!("{v:.3}")
    });

    let w = names.iter().map(String::len).max().unwrap_or(0).max(8);
    let mut undefined = false;
    let _ = writeln!(
        out,
        "\n{:w$}  {:>9}  {:>9}  {:>9}  {:>9}",
        "Channel", "F-measure", "G-mean", "Precision", "Recall"
    );
    for (name, m) in names.iter().zip(&report.per_class) {
        let flag = |defined: bool| if defined { ' ' } else { '*' };
        undefined |= !(m.precision_defined && m.recall_defined);
        let _ = writeln!(
            out,
            "{name:w$}  {:>9.3}  {:>9.3}  {:>8.3}{}  {:>8.3}{}",
            m.f_measure,
            m.g_mean,
            m.precision,
            flag(m.precision_defined),
            m.recall,
            flag(m.recall_defined)
        );
    }
    let _ = writeln!(
        out,
        "{:w$}  {:>9.3}  {:>9.3}",
        "Overall", report.macro_f, report.macro_g
    );
    let _ = writeln!(
        out,
        "\nAccuracy {:.3}  Error rate {:.3}  ({} test windows)",
        report.overall_accuracy,
        report.error_rate,
        report.confusion.total()
    );
    if undefined {
        out.push_str("* zero denominator; reported as 0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate_report, build_confusion};

    fn report() -> MetricsReport {
        let names: Vec<String> = ["furnace", "oven", "tv"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = build_confusion(&[0, 0, 1, 1, 1, 2], &[0, 1, 1, 1, 0, 0], &names).unwrap();
        aggregate_report(&c).unwrap()
    }

    #[test]
    fn single_class_csv() {
        let c = ConfusionMatrix::from_counts(vec![vec![4]], vec!["classA".into()]).unwrap();
        let r = aggregate_report(&c).unwrap();
        let csv = String::from_utf8(render_report(&r, ReportFormat::Csv)).unwrap();
        assert_eq!(
            csv,
            "class,precision,recall,f_measure,g_mean,accuracy\nclassA,1,1,1,1,\noverall,,,1,1,1\n"
        );
    }

    #[test]
    fn json_round_trip_exact() {
        let r = report();
        let json = String::from_utf8(render_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(parse_json_report(&json).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in [
            "class_names",
            "per_class",
            "overall_accuracy",
            "error_rate",
            "macro_f",
            "macro_g",
            "confusion",
            "normalized_confusion",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["confusion"][1], serde_json::json!([1, 2, 0]));
    }

    #[test]
    fn text_layout() {
        let text = String::from_utf8(render_report(&report(), ReportFormat::Text)).unwrap();
        assert!(text.contains("furnace"));
        assert!(text.contains("Overall"));
        assert!(text.contains("F-measure"));
        // tv is never predicted, so its precision is undefined
        assert!(text.contains("* zero denominator"));
        let grid_lines: Vec<&str> = text.lines().skip(1).take(4).collect();
        let widths: Vec<usize> = grid_lines.iter().map(|l| l.len()).collect();
        assert!(widths.iter().all(|&w| w == widths[0]), "{grid_lines:?}");
    }
}
