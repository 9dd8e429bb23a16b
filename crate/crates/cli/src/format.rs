//! Plain-text tables with six significant digits.

use shiftshap::AttributionReport;

/// Formats `x` with six significant digits, like C's `%g`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exponent) = s.split_once('e').unwrap();
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

pub fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Left-aligned first column, right-aligned others.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let pad = width[i] - c.chars().count();
            if i == 0 {
                out.push_str(c);
                if i + 1 < cols {
                    out.push_str(&" ".repeat(pad));
                }
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(c);
            }
        }
        out.push('\n');
        out
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(|s| s.as_str()).collect()));
    }
    out
}

/// Ranked attribution table followed by the totals.
pub fn report_table(report: &AttributionReport) -> String {
    let with_stderr = report.stderr.is_some();
    let rows: Vec<Vec<String>> = report
        .ranked()
        .iter()
        .map(|e| {
            let mut row = vec![
                e.mechanism.clone(),
                sig6(e.attribution),
                e.share.map(pct).unwrap_or_else(|| "-".into()),
            ];
            if let Some(se) = &report.stderr {
                row.push(sig6(se[e.index]));
            }
            row
        })
        .collect();
    let mut header = vec!["mechanism", "attribution", "share"];
    if with_stderr {
        header.push("stderr");
    }
    let d = &report.diagnostics;
    let mut out = table(&header, &rows);
    out.push_str(&format!(
        "\ntotal change  {}  (source {}, target {})\n",
        sig6(report.total_change),
        sig6(d.perf_source),
        sig6(d.perf_target)
    ));
    out.push_str(&format!("residual      {}\n", sig6(report.residual)));
    out.push_str(&format!(
        "method        {:?}, {} coalitions, {} classifiers, {} + {} evaluation rows\n",
        report.method, d.coalitions_evaluated, d.classifiers_fitted, d.n_eval_source, d.n_eval_target
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.06375), "-0.06375");
        assert_eq!(sig6(0.16875), "0.16875");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(12345.67), "12345.7");
        assert_eq!(sig6(1e-7), "1e-7");
        assert_eq!(sig6(-2.5e-17), "-2.5e-17");
        assert_eq!(sig6(-1e-20 * 0.0), "0");
    }

    #[test]
    fn table_alignment() {
        let t = table(&["a", "value"], &[vec!["long name".into(), "1".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a          value");
        assert_eq!(lines[2], "long name      1");
    }
}
