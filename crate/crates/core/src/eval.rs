//! Ranked-run evaluation: average precision, reciprocal rank, R-Precision and
//! Precision@N per query, their means over queries, and the ablation table.
//!
//! Every per-query metric is a function of the ranking's relevance pattern
//! and the query's relevant count `R`. A query without relevant lines scores
//! 0 on AP and R-Precision and is flagged. P@N always divides by N, even for
//! rankings shorter than N.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::Debate;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const PRECISION_CUTOFFS: [usize; 6] = [1, 3, 5, 10, 20, 50];

/// Column names in report order.
pub const METRIC_NAMES: [&str; 9] = [
    "MAP", "RR", "R-P", "P@1", "P@3", "P@5", "P@10", "P@20", "P@50",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryJudgments {
    pub query_id: String,
    pub relevant: BTreeSet<u32>,
}

impl QueryJudgments {
    pub fn new(query_id: impl Into<String>, relevant: impl IntoIterator<Item = u32>) -> Self {
        QueryJudgments {
            query_id: query_id.into(),
            relevant: relevant.into_iter().collect(),
        }
    }

    pub fn from_debate(debate: &Debate) -> Self {
        QueryJudgments::new(debate.debate_id.clone(), debate.relevant_lines())
    }

    pub fn num_relevant(&self) -> usize {
        self.relevant.len()
    }
}

/// A metric value plus whether the query had no relevant lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub no_relevant: bool,
}

fn relevance_pattern(ranking: &[u32], judgments: &QueryJudgments) -> Result<Vec<bool>> {
    let mut seen = BTreeSet::new();
    for &line in ranking {
        if !seen.insert(line) {
            return Err(Error::Contract(format!(
                "ranking for {} lists line {line} twice",
                judgments.query_id
            )));
        }
    }
    Ok(ranking
        .iter()
        .map(|l| judgments.relevant.contains(l))
        .collect())
}

fn ratio<T: Real>(num: usize, den: usize) -> T {
    T::from_usize_lossy(num) / T::from_usize_lossy(den)
}

fn ap_of<T: Real>(pattern: &[bool], r: usize) -> T {
    if r == 0 {
        return T::zero();
    }
    let mut hits = 0;
    let mut sum = T::zero();
    for (k, &rel) in pattern.iter().enumerate() {
        if rel {
            hits += 1;
            sum = sum + ratio::<T>(hits, k + 1);
        }
    }
    sum / T::from_usize_lossy(r)
}

fn rr_of<T: Real>(pattern: &[bool]) -> T {
    pattern
        .iter()
        .position(|&rel| rel)
        .map_or(T::zero(), |k| ratio(1, k + 1))
}

fn hits_in_top(pattern: &[bool], n: usize) -> usize {
    pattern.iter().take(n).filter(|&&rel| rel).count()
}

fn precision_of<T: Real>(pattern: &[bool], n: usize) -> T {
    ratio(hits_in_top(pattern, n), n)
}

pub fn average_precision<T: Real>(
    ranking: &[u32],
    judgments: &QueryJudgments,
) -> Result<Flagged<T>> {
    let pattern = relevance_pattern(ranking, judgments)?;
    let r = judgments.num_relevant();
    Ok(Flagged {
        value: ap_of(&pattern, r),
        no_relevant: r == 0,
    })
}

pub fn reciprocal_rank<T: Real>(ranking: &[u32], judgments: &QueryJudgments) -> Result<T> {
    Ok(rr_of(&relevance_pattern(ranking, judgments)?))
}

pub fn r_precision<T: Real>(ranking: &[u32], judgments: &QueryJudgments) -> Result<Flagged<T>> {
    let pattern = relevance_pattern(ranking, judgments)?;
    let r = judgments.num_relevant();
    let value = if r == 0 {
        T::zero()
    } else {
        precision_of(&pattern, r)
    };
    Ok(Flagged {
        value,
        no_relevant: r == 0,
    })
}

pub fn precision_at_n<T: Real>(ranking: &[u32], judgments: &QueryJudgments, n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Contract("precision cutoff must be positive".into()));
    }
    Ok(precision_of(&relevance_pattern(ranking, judgments)?, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryMetrics<T> {
    pub ap: T,
    pub rr: T,
    pub r_precision: T,
    /// Precision at each of [`PRECISION_CUTOFFS`].
    pub precision: [T; 6],
    pub no_relevant: bool,
}

impl<T: Real> QueryMetrics<T> {
    pub fn compute(ranking: &[u32], judgments: &QueryJudgments) -> Result<Self> {
        let pattern = relevance_pattern(ranking, judgments)?;
        let r = judgments.num_relevant();
        Ok(QueryMetrics {
            ap: ap_of(&pattern, r),
            rr: rr_of(&pattern),
            r_precision: if r == 0 {
                T::zero()
            } else {
                precision_of(&pattern, r)
            },
            precision: PRECISION_CUTOFFS.map(|n| precision_of(&pattern, n)),
            no_relevant: r == 0,
        })
    }

    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [T; 9] {
        let p = self.precision;
        [
            self.ap,
            self.rr,
            self.r_precision,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport<T> {
    pub queries: usize,
    pub map: T,
    pub mrr: T,
    pub r_precision: T,
    pub precision: [T; 6],
    /// Query ids with no relevant lines (AP and R-P taken as 0).
    pub no_relevant: Vec<String>,
    pub per_query: BTreeMap<String, QueryMetrics<T>>,
}

impl<T: Real> MetricsReport<T> {
    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [T; 9] {
        let p = self.precision;
        [
            self.map,
            self.mrr,
            self.r_precision,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
        ]
    }

    pub fn get(&self, name: &str) -> Option<T> {
        METRIC_NAMES
            .iter()
            .position(|&n| n.eq_ignore_ascii_case(name))
            .map(|i| self.values()[i])
    }

    /// Report built directly from metric values, e.g. published rows.
    pub fn from_values(values: [T; 9]) -> Self {
        MetricsReport {
            queries: 0,
            map: values[0],
            mrr: values[1],
            r_precision: values[2],
            precision: [
                values[3], values[4], values[5], values[6], values[7], values[8],
            ],
            no_relevant: Vec::new(),
            per_query: BTreeMap::new(),
        }
    }
}

/// Means over queries. Both maps must have the same query ids.
pub fn evaluate_run<T: Real>(
    runs: &BTreeMap<String, Vec<u32>>,
    judgments: &BTreeMap<String, QueryJudgments>,
) -> Result<MetricsReport<T>> {
    let run_ids: BTreeSet<&String> = runs.keys().collect();
    let gold_ids: BTreeSet<&String> = judgments.keys().collect();
    if run_ids != gold_ids {
        let only_run: Vec<_> = run_ids.difference(&gold_ids).collect();
        let only_gold: Vec<_> = gold_ids.difference(&run_ids).collect();
        return Err(Error::Contract(format!(
            "query ids differ: only in run {only_run:?}, only in gold {only_gold:?}"
        )));
    }
    if runs.is_empty() {
        return Err(Error::Contract("no queries to evaluate".into()));
    }
    let mut per_query = BTreeMap::new();
    for (id, ranking) in runs {
        per_query.insert(
            id.clone(),
            QueryMetrics::<T>::compute(ranking, &judgments[id])?,
        );
    }
    let q = T::from_usize_lossy(per_query.len());
    let mut sums = [T::zero(); 9];
    for m in per_query.values() {
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s = *s + v;
        }
    }
    let means = sums.map(|s| s / q);
    let mut report = MetricsReport::from_values(means);
    report.queries = per_query.len();
    report.no_relevant = per_query
        .iter()
        .filter(|(_, m)| m.no_relevant)
        .map(|(id, _)| id.clone())
        .collect();
    report.per_query = per_query;
    Ok(report)
}

/// Published MAP values for the original system and three feature
/// combinations, kept as fixed inputs for checking the delta arithmetic.
/// They are not reproducible without the original corpus.
pub const REFERENCE_MAP_ROWS: [(&str, f64); 4] = [
    ("TOBB ETU", 0.0884),
    ("SBERT+TOBB ETU", 0.1287),
    ("TMF+TOBB ETU", 0.1063),
    ("SBERT+TMF+SF+TOBB ETU", 0.1396),
];

/// Relative change of `value` over `baseline` in percent; `None` for a zero
/// baseline.
pub fn percent_delta(baseline: f64, value: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (value - baseline) / baseline * 100.0)
}

/// Percentage with two decimals, truncated toward zero (`+57.91%`).
pub fn format_delta(delta: Option<f64>) -> String {
    match delta {
        None => "n/a".to_string(),
        Some(d) => {
            // Nudge by 1e-9 so values such as 20.0 stored as 19.9999... do
            // not truncate down a whole hundredth.
            let hundredths = (d * 100.0 + d.signum() * 1e-9).trunc();
            let v = hundredths / 100.0;
            if v == 0.0 {
                "+0.00%".to_string()
            } else {
                format!("{v:+.2}%")
            }
        }
    }
}

/// Metric value in the `.0884` style.
pub fn format_metric(v: f64) -> String {
    let s = format!("{v:.4}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub values: [f64; 9],
    /// Percent change per metric versus the baseline row.
    pub deltas: [Option<f64>; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub columns: [&'static str; 9],
    pub baseline: String,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned text: one block of metric values, then one of deltas.
    pub fn render(&self) -> String {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.name.chars().count())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = String::new();
        let header = |out: &mut String, title: &str| {
            write!(out, "{title:<name_w$}").unwrap();
            for c in METRIC_NAMES {
                write!(out, " {c:>8}").unwrap();
            }
            out.push('\n');
        };
        header(&mut out, "");
        for r in &self.rows {
            write!(out, "{:<name_w$}", r.name).unwrap();
            for v in r.values {
                write!(out, " {:>8}", format_metric(v)).unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
        header(&mut out, &format!("vs {}", self.baseline));
        for r in &self.rows {
            write!(out, "{:<name_w$}", r.name).unwrap();
            for d in r.deltas {
                write!(out, " {:>8}", format_delta(d)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Comparison table with per-metric deltas against row `baseline`.
pub fn ablation_report<T: Real>(
    configs: &[(String, MetricsReport<T>)],
    baseline: usize,
) -> Result<ReportTable> {
    let Some((base_name, base)) = configs.get(baseline) else {
        return Err(Error::Contract(format!(
            "baseline row {baseline} out of range for {} rows",
            configs.len()
        )));
    };
    let base_values = base.values().map(T::to_f64_lossy);
    let rows = configs
        .iter()
        .map(|(name, report)| {
            let values = report.values().map(T::to_f64_lossy);
            let mut deltas = [None; 9];
            for i in 0..9 {
                deltas[i] = percent_delta(base_values[i], values[i]);
            }
            ReportRow {
                name: name.clone(),
                values,
                deltas,
            }
        })
        .collect();
    Ok(ReportTable {
        columns: METRIC_NAMES,
        baseline: base_name.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ranking 1..=n with relevant lines given by a 0/1 pattern.
    fn case(pattern: &[u8]) -> (Vec<u32>, QueryJudgments) {
        let ranking: Vec<u32> = (1..=pattern.len() as u32).collect();
        let relevant = pattern
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i as u32 + 1);
        (ranking, QueryJudgments::new("q", relevant))
    }

    #[test]
    fn ap_examples() {
        let (r, j) = case(&[1]);
        assert_eq!(average_precision::<f64>(&r, &j).unwrap().value, 1.0);
        let (r, j) = case(&[1, 0, 1]);
        let ap = average_precision::<f64>(&r, &j).unwrap();
        assert!((ap.value - 5.0 / 6.0).abs() < 1e-15);
        assert!(!ap.no_relevant);
        let (r, j) = case(&[0, 0, 0]);
        let ap = average_precision::<f64>(&r, &j).unwrap();
        assert_eq!(ap.value, 0.0);
        assert!(ap.no_relevant);
    }

    #[test]
    fn duplicate_lines_rejected() {
        let j = QueryJudgments::new("q", [1]);
        assert!(matches!(
            average_precision::<f64>(&[1, 1], &j),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn rr_examples() {
        let (r, j) = case(&[1, 0]);
        assert_eq!(reciprocal_rank::<f64>(&r, &j).unwrap(), 1.0);
        let (r, j) = case(&[0, 0, 0, 1]);
        assert_eq!(reciprocal_rank::<f64>(&r, &j).unwrap(), 0.25);
        let (r, j) = case(&[0, 0]);
        assert_eq!(reciprocal_rank::<f64>(&r, &j).unwrap(), 0.0);
    }

    #[test]
    fn r_precision_examples() {
        let (r, j) = case(&[1, 0, 1]);
        assert_eq!(r_precision::<f64>(&r, &j).unwrap().value, 0.5);
        let (r, j) = case(&[1, 1, 0]);
        assert_eq!(r_precision::<f64>(&r, &j).unwrap().value, 1.0);
        let (r, j) = case(&[0, 0]);
        assert!(r_precision::<f64>(&r, &j).unwrap().no_relevant);
    }

    #[test]
    fn precision_examples() {
        let (r, j) = case(&[1, 0, 1, 0]);
        assert!((precision_at_n::<f64>(&r, &j, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(precision_at_n::<f64>(&r, &j, 1).unwrap(), 1.0);
        let (r, j) = case(&[0, 1, 0, 1, 0]);
        assert_eq!(precision_at_n::<f64>(&r, &j, 50).unwrap(), 0.04);
        assert!(precision_at_n::<f64>(&r, &j, 0).is_err());
    }

    #[test]
    fn run_means() {
        let mut runs = BTreeMap::new();
        let mut gold = BTreeMap::new();
        // AP 0.2: relevant at rank 5 only.
        runs.insert("a".to_string(), vec![1, 2, 3, 4, 5]);
        gold.insert("a".to_string(), QueryJudgments::new("a", [5]));
        let single: MetricsReport<f64> = evaluate_run(&runs, &gold).unwrap();
        assert_eq!(single.values(), single.per_query["a"].values());
        assert_eq!(single.map, 0.2);

        // AP 0.6: relevant at ranks 1 and 10 → (1 + 2/10)/2.
        runs.insert("b".to_string(), (1..=10).collect());
        gold.insert("b".to_string(), QueryJudgments::new("b", [1, 10]));
        let two: MetricsReport<f64> = evaluate_run(&runs, &gold).unwrap();
        assert!((two.per_query["b"].ap - 0.6).abs() < 1e-15);
        assert!((two.map - 0.4).abs() < 1e-15);
        assert_eq!(two.queries, 2);
    }

    #[test]
    fn mismatched_queries() {
        let mut runs = BTreeMap::new();
        runs.insert("a".to_string(), vec![1]);
        let mut gold = BTreeMap::new();
        gold.insert("b".to_string(), QueryJudgments::new("b", [1]));
        let err = evaluate_run::<f64>(&runs, &gold).unwrap_err();
        assert!(err.to_string().contains("only in run"));
    }

    #[test]
    fn deltas_format() {
        assert_eq!(format_delta(percent_delta(0.0884, 0.1396)), "+57.91%");
        assert_eq!(format_delta(percent_delta(0.5, 0.5)), "+0.00%");
        assert_eq!(format_delta(percent_delta(0.0, 0.5)), "n/a");
        assert_eq!(format_delta(Some(-12.345)), "-12.34%");
        assert_eq!(format_delta(Some(20.0)), "+20.00%");
        assert_eq!(format_metric(0.0884), ".0884");
        assert_eq!(format_metric(1.0), "1.0000");
    }

    #[test]
    fn ablation_table() {
        let rows = vec![
            ("base".to_string(), MetricsReport::from_values([0.1f64; 9])),
            ("same".to_string(), MetricsReport::from_values([0.1f64; 9])),
            (
                "better".to_string(),
                MetricsReport::from_values([0.15f64; 9]),
            ),
        ];
        let t = ablation_report(&rows, 0).unwrap();
        assert_eq!(t.row("same").unwrap().deltas[0], Some(0.0));
        assert!((t.row("better").unwrap().deltas[0].unwrap() - 50.0).abs() < 1e-9);
        let text = t.render();
        assert!(text.contains("+50.00%"));
        assert!(ablation_report(&rows, 3).is_err());
    }

    #[test]
    fn metrics_in_f32() {
        let (r, j) = case(&[1, 0, 1]);
        let m = QueryMetrics::<f32>::compute(&r, &j).unwrap();
        assert!((m.ap - 5.0 / 6.0).abs() < 1e-6);
    }
}
