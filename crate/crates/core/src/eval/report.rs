use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{proximity, sparsity, Detectors, EvalError, PlausibilityResult};
use crate::cfgen::Counterfactual;
use crate::dataset::{Label, MtsInstance};
use crate::scalar::{mean, median, Scalar};

/// Measures for one counterfactual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub base_id: usize,
    pub original_class: Label,
    pub target_class: Label,
    pub valid: bool,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub sparsity: usize,
    pub perturbed_dims: Vec<usize>,
    pub plausibility: Option<PlausibilityResult>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Summary {
            mean: mean(values),
            median: median(values),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub count: usize,
    pub valid_count: usize,
    pub l1: Summary,
    pub l2: Summary,
    pub linf: Summary,
    pub sparsity: Summary,
    /// Percentage of rows flagged out-of-distribution, per detector. Empty
    /// when the rows carry no plausibility results.
    pub ood_percent: BTreeMap<String, f64>,
}

impl Aggregates {
    fn of(rows: &[&EvaluationRow]) -> Self {
        let column = |f: fn(&EvaluationRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
        let assessed: Vec<&PlausibilityResult> =
            rows.iter().filter_map(|r| r.plausibility.as_ref()).collect();
        let mut ood_percent = BTreeMap::new();
        if !assessed.is_empty() {
            for (k, name) in PlausibilityResult::DETECTORS.iter().enumerate() {
                let flagged = assessed.iter().filter(|p| p.verdicts()[k].ood).count();
                ood_percent.insert(
                    name.to_string(),
                    100.0 * flagged as f64 / assessed.len() as f64,
                );
            }
        }
        Aggregates {
            count: rows.len(),
            valid_count: rows.iter().filter(|r| r.valid).count(),
            l1: Summary::of(&column(|r| r.l1)),
            l2: Summary::of(&column(|r| r.l2)),
            linf: Summary::of(&column(|r| r.linf)),
            sparsity: Summary::of(&column(|r| r.sparsity as f64)),
            ood_percent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub aggregates: Aggregates,
    /// Rows with `l1 > outlier_factor * median(l1)` are treated as outliers.
    pub outlier_factor: Option<f64>,
    pub outlier_ids: Vec<usize>,
    pub aggregates_without_outliers: Option<Aggregates>,
}

const CSV_HEADER: [&str; 18] = [
    "method",
    "base_id",
    "original_class",
    "target_class",
    "valid",
    "l1",
    "l2",
    "linf",
    "sparsity",
    "perturbed_dims",
    "lof",
    "lof_ood",
    "iforest",
    "iforest_ood",
    "ocsvm_raw",
    "ocsvm_raw_ood",
    "ocsvm_mp",
    "ocsvm_mp_ood",
];

/// Writes the rows of several reports as one CSV table, tagging each row
/// with its method name. Detector columns are empty when not assessed and
/// `perturbed_dims` is `;`-separated.
pub fn write_csv<W: Write>(reports: &[(&str, &EvaluationReport)], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (method, report) in reports {
        for r in &report.rows {
            let mut rec = vec![
                method.to_string(),
                r.base_id.to_string(),
                r.original_class.to_string(),
                r.target_class.to_string(),
                r.valid.to_string(),
                r.l1.to_string(),
                r.l2.to_string(),
                r.linf.to_string(),
                r.sparsity.to_string(),
                r.perturbed_dims.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            ];
            match &r.plausibility {
                Some(p) => {
                    for v in p.verdicts() {
                        rec.push(v.score.to_string());
                        rec.push(v.ood.to_string());
                    }
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 8)),
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Proximity, sparsity and (optionally) plausibility of `cf` against its
/// query `x`.
pub fn evaluate_counterfactual<F: Scalar>(
    x: &MtsInstance<F>,
    cf: &Counterfactual<F>,
    detectors: Option<&Detectors<F>>,
    tol: F,
) -> Result<EvaluationRow, EvalError> {
    let p = proximity(x.values(), &cf.values)?;
    let plausibility = detectors.map(|d| d.assess(&cf.values)).transpose()?;
    Ok(EvaluationRow {
        base_id: cf.base_id,
        original_class: cf.original_class.clone(),
        target_class: cf.target_class.clone(),
        valid: cf.valid,
        l1: p.l1.as_f64(),
        l2: p.l2.as_f64(),
        linf: p.linf.as_f64(),
        sparsity: sparsity(x.values(), &cf.values, tol)?,
        perturbed_dims: cf.perturbed_dims(),
        plausibility,
    })
}

/// Aggregates `rows`; with `outlier_factor` set, also aggregates the rows
/// whose L1 distance stays within that multiple of the median L1.
pub fn build_report(
    rows: Vec<EvaluationRow>,
    outlier_factor: Option<f64>,
) -> Result<EvaluationReport, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let all: Vec<&EvaluationRow> = rows.iter().collect();
    let aggregates = Aggregates::of(&all);
    let mut outlier_ids = Vec::new();
    let mut aggregates_without_outliers = None;
    if let Some(factor) = outlier_factor {
        if !(factor > 0.0) {
            return Err(EvalError::InvalidParam(format!(
                "outlier factor must be positive, got {factor}"
            )));
        }
        let cut = factor * aggregates.l1.median;
        let (kept, dropped): (Vec<&EvaluationRow>, Vec<&EvaluationRow>) =
            all.iter().partition(|r| r.l1 <= cut);
        outlier_ids = dropped.iter().map(|r| r.base_id).collect();
        if !kept.is_empty() {
            aggregates_without_outliers = Some(Aggregates::of(&kept));
        }
    }
    Ok(EvaluationReport {
        rows,
        aggregates,
        outlier_factor,
        outlier_ids,
        aggregates_without_outliers,
    })
}

fn table_lines(aggs: &[Option<&Aggregates>]) -> Vec<(String, Vec<String>)> {
    let cell = |f: &dyn Fn(&Aggregates) -> String| -> Vec<String> {
        aggs.iter().map(|a| a.map_or_else(|| "-".to_string(), f)).collect()
    };
    let mut lines = vec![
        ("count".to_string(), cell(&|a| a.count.to_string())),
        (
            "valid %".to_string(),
            cell(&|a| format!("{:.2}", 100.0 * a.valid_count as f64 / a.count as f64)),
        ),
    ];
    let measures: [(&str, fn(&Aggregates) -> Summary); 4] = [
        ("L1", |a| a.l1),
        ("L2", |a| a.l2),
        ("Linf", |a| a.linf),
        ("sparsity", |a| a.sparsity),
    ];
    for (name, get) in measures {
        lines.push((format!("{name} mean"), cell(&|a| format!("{:.4}", get(a).mean))));
        lines.push((format!("{name} median"), cell(&|a| format!("{:.4}", get(a).median))));
    }
    for name in PlausibilityResult::DETECTORS {
        if aggs.iter().flatten().any(|a| a.ood_percent.contains_key(name)) {
            lines.push((
                format!("OOD % {name}"),
                cell(&|a| {
                    a.ood_percent
                        .get(name)
                        .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
                }),
            ));
        }
    }
    lines
}

fn render(title: &str, methods: &[&str], lines: &[(String, Vec<String>)]) -> String {
    let first = lines.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(title.len());
    let widths: Vec<usize> = methods
        .iter()
        .enumerate()
        .map(|(k, m)| lines.iter().map(|(_, c)| c[k].len()).max().unwrap_or(0).max(m.len()))
        .collect();
    let mut s = String::new();
    let _ = write!(s, "{title:<first$}");
    for (m, w) in methods.iter().zip(&widths) {
        let _ = write!(s, "  {m:>w$}");
    }
    s.push('\n');
    for (label, cells) in lines {
        let _ = write!(s, "{label:<first$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, "  {c:>w$}");
        }
        s.push('\n');
    }
    s
}

/// Aligned text tables, one column per method: all rows, then (if any
/// report has them) the outlier-excluded aggregates.
pub fn format_tables(reports: &[(&str, &EvaluationReport)]) -> String {
    let methods: Vec<&str> = reports.iter().map(|(m, _)| *m).collect();
    let all: Vec<Option<&Aggregates>> = reports.iter().map(|(_, r)| Some(&r.aggregates)).collect();
    let mut out = render("all counterfactuals", &methods, &table_lines(&all));
    let trimmed: Vec<Option<&Aggregates>> = reports
        .iter()
        .map(|(_, r)| r.aggregates_without_outliers.as_ref())
        .collect();
    if trimmed.iter().any(Option::is_some) {
        out.push('\n');
        out.push_str(&render("without outliers", &methods, &table_lines(&trimmed)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DetectorVerdict;

    fn row(id: usize, l1: f64, sparsity: usize, ood: Option<[bool; 4]>) -> EvaluationRow {
        let v = |o: bool| DetectorVerdict { score: 0.0, ood: o };
        EvaluationRow {
            base_id: id,
            original_class: "a".into(),
            target_class: "b".into(),
            valid: id % 2 == 0,
            l1,
            l2: l1 / 2.0,
            linf: l1 / 4.0,
            sparsity,
            perturbed_dims: vec![0],
            plausibility: ood.map(|o| PlausibilityResult {
                lof: v(o[0]),
                iforest: v(o[1]),
                ocsvm_raw: v(o[2]),
                ocsvm_mp: v(o[3]),
            }),
        }
    }

    #[test]
    fn mean_and_median() {
        let r = build_report(vec![row(0, 1.0, 1, None), row(1, 2.0, 2, None), row(2, 9.0, 3, None)], None)
            .unwrap();
        assert_eq!(r.aggregates.l1, Summary { mean: 4.0, median: 2.0 });
        assert_eq!(r.aggregates.valid_count, 2);
        assert!(r.aggregates.ood_percent.is_empty());
    }

    #[test]
    fn single_row() {
        let r = build_report(vec![row(0, 3.5, 7, None)], None).unwrap();
        assert_eq!(r.aggregates.l1, Summary { mean: 3.5, median: 3.5 });
        assert_eq!(r.aggregates.sparsity, Summary { mean: 7.0, median: 7.0 });
    }

    #[test]
    fn ood_percentages() {
        let rows = vec![
            row(0, 1.0, 1, Some([true, false, false, false])),
            row(1, 1.0, 1, Some([false, false, true, false])),
            row(2, 1.0, 1, Some([false, false, true, false])),
            row(3, 1.0, 1, Some([false, false, true, false])),
        ];
        let r = build_report(rows, None).unwrap();
        assert_eq!(r.aggregates.ood_percent["lof"], 25.0);
        assert_eq!(r.aggregates.ood_percent["iforest"], 0.0);
        assert_eq!(r.aggregates.ood_percent["ocsvm_raw"], 75.0);
    }

    #[test]
    fn outliers_excluded() {
        let rows = vec![row(0, 1.0, 1, None), row(1, 2.0, 1, None), row(2, 100.0, 1, None)];
        let r = build_report(rows, Some(3.0)).unwrap();
        assert_eq!(r.outlier_ids, vec![2]);
        let trimmed = r.aggregates_without_outliers.unwrap();
        assert_eq!(trimmed.count, 2);
        assert_eq!(trimmed.l1.mean, 1.5);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(build_report(Vec::new(), None), Err(EvalError::EmptyReport)));
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let r = build_report(vec![row(0, 1.0, 1, None), row(1, 2.0, 2, Some([true; 4]))], None).unwrap();
        let b = build_report(vec![row(0, 5.0, 60, None)], None).unwrap();
        let mut buf = Vec::new();
        write_csv(&[("sets", &r), ("baseline", &b)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("method,base_id,original_class"));
        assert_eq!(lines[1].split(',').count(), 18);
        assert!(lines[2].ends_with("true"));
        assert!(lines[3].starts_with("baseline,0,"));
    }

    #[test]
    fn table_is_aligned() {
        let a = build_report(vec![row(0, 1.0, 1, None)], Some(2.0)).unwrap();
        let b = build_report(vec![row(0, 123.0, 60, None)], None).unwrap();
        let t = format_tables(&[("sets", &a), ("baseline", &b)]);
        let lines: Vec<&str> = t.lines().take_while(|l| !l.is_empty()).collect();
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(t.contains("without outliers"));
    }
}
