use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::RateReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Gnuplot,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Gnuplot => "gp",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "gnuplot" | "gp" => Ok(ReportFormat::Gnuplot),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

/// One row per (method, n) with header `method,n,median_rel_err,q25,q75,reps`.
pub fn render_csv(report: &RateReport) -> String {
    let mut out = String::from("method,n,median_rel_err,q25,q75,reps\n");
    for m in &report.methods {
        for p in &m.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m.method, p.n, p.median_rel_err, p.q25, p.q75, p.reps
            );
        }
    }
    out
}

pub fn render_json(report: &RateReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Self-contained gnuplot script: log-log median errors per method with
/// reference lines of slope -1/6, -2/7 and -1/3.
pub fn render_gnuplot(report: &RateReport) -> String {
    let mut out = String::new();
    let mut anchor: Option<(f64, f64)> = None;
    for (i, m) in report.methods.iter().enumerate() {
        let _ = writeln!(out, "$m{i} << EOD");
        for p in m.points.iter().filter(|p| p.median_rel_err > 0.0) {
            anchor.get_or_insert((p.n as f64, p.median_rel_err));
            let _ = writeln!(out, "{} {} {} {}", p.n, p.median_rel_err, p.q25, p.q75);
        }
        let _ = writeln!(out, "EOD");
    }
    let (n0, e0) = anchor.unwrap_or((1.0, 1.0));
    out.push_str("set logscale xy\nset xlabel 'n'\nset ylabel 'median |l - l_opt| / l_opt'\nset key outside\n");
    let mut parts: Vec<String> = report
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| format!("$m{i} using 1:2 with linespoints title '{}'", m.method))
        .collect();
    for (label, slope) in [
        ("-1/6", -1.0 / 6.0),
        ("-2/7", -2.0 / 7.0),
        ("-1/3", -1.0 / 3.0),
    ] {
        parts.push(format!(
            "{e0}*(x/{n0})**({slope}) with lines dashtype 2 title 'slope {label}'"
        ));
    }
    let _ = writeln!(out, "plot {}", parts.join(", \\\n     "));
    out
}

/// Renders `report` and writes it to `path`.
pub fn emit_report(report: &RateReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report)?,
        ReportFormat::Gnuplot => render_gnuplot(report),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::runner::{MethodReport, RatePoint};
    use crate::process::ProcessModel;
    use crate::selection::Method;
    use crate::statistic::SmoothStatistic;

    fn sample() -> RateReport {
        let points = vec![
            RatePoint::from_errors(500, 10, vec![Some(0.5), Some(0.25)], 0),
            RatePoint::from_errors(1000, 12, vec![Some(0.125)], 0),
        ];
        RateReport {
            model: ProcessModel::ar1(0.5, 1.0),
            statistic: SmoothStatistic::Mean,
            replications: 2,
            master_seed: 7,
            methods: vec![MethodReport::from_points(Method::Pw, points)],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = render_csv(&sample());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,n,median_rel_err,q25,q75,reps");
        assert_eq!(lines[1], "pw,500,0.375,0.3125,0.4375,2");
        assert_eq!(lines[2], "pw,1000,0.125,0.125,0.125,1");
    }

    #[test]
    fn json_round_trip() {
        let report = sample();
        let back: RateReport = serde_json::from_str(&render_json(&report).unwrap()).unwrap();
        assert_eq!(back.methods[0].points[0].median_rel_err, 0.375);
        assert_eq!(back.methods[0].method, Method::Pw);
    }

    #[test]
    fn gnuplot_has_reference_slopes() {
        let gp = render_gnuplot(&sample());
        assert!(gp.contains("$m0 << EOD"));
        assert!(gp.contains("slope -2/7"));
        assert!(gp.contains("set logscale xy"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("GP".parse::<ReportFormat>().unwrap(), ReportFormat::Gnuplot);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
