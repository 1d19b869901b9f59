//! Plain-text tables and confusion-matrix CSV for experiment results.

use serde::{Deserialize, Serialize};

use super::experiment::{CellReport, EpChoice};

/// The JSON document written by `eval` and read by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellReport>,
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// One row per method configuration and one WA/UA column pair per EP choice,
/// both in order of first appearance.
pub fn render_table(report: &ExperimentReport) -> String {
    let mut methods: Vec<&str> = Vec::new();
    let mut eps: Vec<EpChoice> = Vec::new();
    for c in &report.cells {
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
        if !eps.contains(&c.ep) {
            eps.push(c.ep);
        }
    }
    let method_w = methods
        .iter()
        .map(|m| m.chars().count())
        .max()
        .unwrap_or(0)
        .max(6);
    let col_w = 15;

    let mut lines = Vec::new();
    let mut head1 = format!("{:<method_w$}", "Method");
    let mut head2 = " ".repeat(method_w);
    let mut rule = "-".repeat(method_w);
    for ep in &eps {
        head1.push_str(&format!(" | {:<col_w$}", ep.to_string()));
        head2.push_str(&format!(" | {:<7} {:<7}", "WA", "UA"));
        rule.push_str(&format!("-+-{}", "-".repeat(col_w)));
    }
    lines.push(head1.trim_end().to_string());
    lines.push(head2.trim_end().to_string());
    lines.push(rule);
    for m in &methods {
        let mut row = format!("{:<method_w$}", m);
        for ep in &eps {
            match report.cells.iter().find(|c| c.method == *m && c.ep == *ep) {
                Some(c) => row.push_str(&format!(
                    " | {:<7} {:<7}",
                    percent(c.report.wa),
                    percent(c.report.ua)
                )),
                None => row.push_str(&format!(" | {:<7} {:<7}", "-", "-")),
            }
        }
        lines.push(row.trim_end().to_string());
    }
    let skipped: Vec<String> = report
        .cells
        .iter()
        .filter(|c| !c.report.skipped.is_empty())
        .map(|c| {
            format!(
                "  {}: {} utterances skipped",
                c.label,
                c.report.skipped.len()
            )
        })
        .collect();
    if !skipped.is_empty() {
        lines.push(String::new());
        lines.extend(skipped);
    }
    lines.join("\n") + "\n"
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long-form confusion matrices: `cell,true_label,<predicted class...>`.
pub fn render_confusion_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let classes = report
        .cells
        .first()
        .map(|c| c.report.class_set.clone())
        .unwrap_or_default();
    out.push_str("cell,true_label");
    for c in &classes {
        out.push(',');
        out.push_str(&csv_field(c));
    }
    out.push('\n');
    for cell in &report.cells {
        for (label, row) in cell.report.class_set.iter().zip(&cell.report.confusion) {
            out.push_str(&csv_field(&cell.label));
            out.push(',');
            out.push_str(&csv_field(label));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}
