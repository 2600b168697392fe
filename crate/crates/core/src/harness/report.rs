//! Report rendering: per-cell CSV, an aligned text table with annotated
//! candidate cells, and raw per-repetition JSON-lines.

use std::collections::BTreeSet;

use crate::error::Result;

use super::protocol::{Cell, CellStatus, EvalReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    TextTable,
}

/// Formats one annotated cell, e.g. `2.309(↑59.3%)*L`.
pub fn format_cell(mean: f64, annotation: Option<(f64, &str)>) -> String {
    match annotation {
        Some((improvement, markers)) => {
            let arrow = if improvement >= 0.0 { "↑" } else { "↓" };
            let markers = if markers == "n/a" { "" } else { markers };
            format!("{mean:.3}({arrow}{improvement:.1}%){markers}")
        }
        None => format!("{mean:.3}"),
    }
}

fn cell_text(cell: &Cell, annotate: bool) -> String {
    match (&cell.status, cell.mean) {
        (CellStatus::Failed(_), _) => "failed".into(),
        (CellStatus::Degenerate, _) => "degenerate".into(),
        (_, None) => "failed".into(),
        (_, Some(mean)) => {
            let text = if annotate {
                match cell.improvement_pct {
                    Some(impr) => format_cell(mean, Some((impr, cell.markers.as_deref().unwrap_or("")))),
                    None => format_cell(mean, None),
                }
            } else {
                format_cell(mean, None)
            };
            if cell.best {
                format!("[{text}]")
            } else {
                text
            }
        }
    }
}

/// Renders the report. The CSV has one row per cell; the text table has one
/// row per (system, metric, model, budget) with a column per sampler and the
/// candidate sampler's cells annotated with improvement/markers.
pub fn build_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(render_csv(report)),
        ReportFormat::TextTable => Ok(render_table(report)),
    }
}

fn render_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "system,metric,model,budget,sampler,mean_rmse,repetitions,improvement_pct,p_value,cliffs_delta,markers,best,status\n",
    );
    for cell in &report.cells {
        let status = match &cell.status {
            CellStatus::Ok => "ok".to_string(),
            CellStatus::Degenerate => "degenerate".to_string(),
            CellStatus::Failed(m) => format!("failed: {}", m.replace([',', '\n'], ";")),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.system,
            cell.metric,
            cell.model,
            cell.budget,
            cell.sampler,
            cell.mean.map(|m| format!("{m:.6}")).unwrap_or_default(),
            cell.per_repetition.len(),
            cell.improvement_pct.map(|v| format!("{v:.3}")).unwrap_or_default(),
            cell.p_value.map(|v| format!("{v:.6}")).unwrap_or_default(),
            cell.cliffs_delta.map(|v| format!("{v:.4}")).unwrap_or_default(),
            cell.markers.clone().unwrap_or_default(),
            cell.best,
            status,
        ));
    }
    out
}

fn render_table(report: &EvalReport) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![
        "system".to_string(),
        "metric".to_string(),
        "model".to_string(),
        "budget".to_string(),
    ];
    header.extend(report.samplers.iter().cloned());
    rows.push(header);

    let groups: BTreeSet<(String, String, String, usize)> = report
        .cells
        .iter()
        .map(|c| (c.system.clone(), c.metric.clone(), c.model.clone(), c.budget))
        .collect();
    for (system, metric, model, budget) in groups {
        let mut row = vec![system.clone(), metric.clone(), model.clone(), budget.to_string()];
        for sampler in &report.samplers {
            let text = report
                .cell(&system, &metric, &model, budget, sampler)
                .map(|c| cell_text(c, *sampler == report.candidate))
                .unwrap_or_else(|| "-".into());
            row.push(text);
        }
        rows.push(row);
    }

    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| {
                let pad = w - cell.chars().count();
                format!("{cell}{}", " ".repeat(pad))
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (columns - 1)));
            out.push('\n');
        }
    }
    out
}

/// Raw per-repetition RMSEs as JSON-lines for re-analysis.
pub fn raw_jsonl(report: &EvalReport) -> String {
    report
        .cells
        .iter()
        .map(|c| {
            serde_json::json!({
                "system": c.system,
                "metric": c.metric,
                "model": c.model,
                "budget": c.budget,
                "sampler": c.sampler,
                "per_repetition": c.per_repetition,
            })
            .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}
