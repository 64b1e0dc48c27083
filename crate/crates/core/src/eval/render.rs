use std::fmt::Write;

use super::srm::SrmEvalReport;
use super::validators::ValidatorTable;
use super::metrics::MetricsReport;

/// Percent with two decimals, or `n/a` when undefined.
pub fn format_metric(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}%", 100.0 * v),
        None => "n/a".to_string(),
    }
}

fn metric_cells(m: &MetricsReport) -> [String; 4] {
    [
        format_metric(m.fpr),
        format_metric(m.precision),
        format_metric(m.recall),
        format_metric(m.f_score),
    ]
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, header.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, rule.iter().map(String::as_str).collect());
    for row in rows {
        line(&mut out, row.iter().map(String::as_str).collect());
    }
    out
}

pub fn render_validator_table(t: &ValidatorTable) -> String {
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            let c = &r.confusion;
            let mut row = vec![
                r.label(),
                c.tn.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tp.to_string(),
            ];
            row.extend(metric_cells(&r.metrics));
            row
        })
        .collect();
    format!(
        "alpha = {}, cases = {}\n{}",
        t.alpha,
        t.cases,
        table(
            &["method", "TN", "FP", "FN", "TP", "FPR", "precision", "recall", "F-score"],
            &rows
        )
    )
}

pub fn render_srm_report(r: &SrmEvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "series = {} ({} unlabeled), labels = {:?}, sprt alpha = {}, beta = {}, baseline alpha = {}",
        r.series,
        r.unlabeled,
        r.config.label_source,
        r.config.sprt_alpha,
        r.config.sprt_beta,
        r.config.baseline_alpha
    );
    for (title, level) in [
        ("baselines per (series, day), SPRT per series", &r.primary),
        ("all detectors per (series, day)", &r.day_level),
        ("all detectors per series", &r.series_level),
    ] {
        let rows: Vec<Vec<String>> = level
            .iter()
            .map(|d| {
                let c = &d.confusion;
                let mut row = vec![
                    d.detector.label().to_string(),
                    c.tn.to_string(),
                    c.fp.to_string(),
                    c.fn_.to_string(),
                    c.tp.to_string(),
                ];
                row.extend(metric_cells(&d.metrics));
                row
            })
            .collect();
        let _ = writeln!(out, "\n{title}");
        out.push_str(&table(
            &["detector", "TN", "FP", "FN", "TP", "FPR", "precision", "recall", "F-score"],
            &rows,
        ));
    }
    if let Some(a) = r.sprt_agreement {
        let _ = writeln!(out, "\nSPRT / SPRT-EXACT agreement: {}", format_metric(Some(a)));
    }
    if !r.recall_by_size.is_empty() {
        let _ = writeln!(out, "\nrecall by final sample size");
        let mut header = vec!["bin", "n range", "positives"];
        header.extend(r.config.detectors.iter().map(|d| d.label()));
        let rows: Vec<Vec<String>> = r
            .recall_by_size
            .iter()
            .map(|b| {
                let mut row = vec![
                    b.bin.to_string(),
                    format!("{}..{}", b.min_total, b.max_total),
                    b.positives.to_string(),
                ];
                row.extend(b.recall.iter().map(|(_, v)| format_metric(*v)));
                row
            })
            .collect();
        out.push_str(&table(&header, &rows));
    }
    out
}

/// One row per (bin, detector), ready for a grouped bar chart.
pub fn recall_bins_csv(r: &SrmEvalReport) -> String {
    let mut out = String::from("bin,min_total,max_total,positives,detector,recall\n");
    for b in &r.recall_by_size {
        for (d, v) in &b.recall {
            let recall = v.map_or(String::new(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                b.bin,
                b.min_total,
                b.max_total,
                b.positives,
                d.label(),
                recall
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_formatting() {
        assert_eq!(format_metric(None), "n/a");
        assert_eq!(format_metric(Some(0.106)), "10.60%");
        assert_eq!(format_metric(Some(1.0)), "100.00%");
    }

    #[test]
    fn aligned_columns() {
        let t = table(&["a", "bb"], &[vec!["xxx".into(), "1".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a    bb");
        assert_eq!(lines[2], "xxx   1");
    }
}
