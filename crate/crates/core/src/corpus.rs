//! Debate transcripts, gold labels and ranked-run files.
//!
//! Transcript files are tab-separated, UTF-8, without a header:
//! `line_number \t speaker \t text \t label` for labeled files and the same
//! without the label column for unlabeled ones. The debate id is the file
//! stem. Run files hold `line_number \t score` rows sorted by descending
//! score, scores printed with six decimals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceRecord {
    pub debate_id: String,
    pub line_number: u32,
    pub speaker: String,
    pub text: String,
    /// `Some(true)` for check-worthy sentences.
    pub label: Option<bool>,
}

impl SentenceRecord {
    pub fn label_value(&self) -> Option<f64> {
        self.label.map(|l| if l { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Debate {
    pub debate_id: String,
    pub records: Vec<SentenceRecord>,
}

impl Debate {
    pub fn new(debate_id: impl Into<String>, records: Vec<SentenceRecord>) -> Self {
        Debate {
            debate_id: debate_id.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every record carries a label (and there is at least one).
    pub fn is_labeled(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.label.is_some())
    }

    pub fn line_numbers(&self) -> impl Iterator<Item = u32> + '_ {
        self.records.iter().map(|r| r.line_number)
    }

    pub fn max_line_number(&self) -> u32 {
        self.line_numbers().max().unwrap_or(0)
    }

    /// Line numbers labeled check-worthy.
    pub fn relevant_lines(&self) -> BTreeSet<u32> {
        self.records
            .iter()
            .filter(|r| r.label == Some(true))
            .map(|r| r.line_number)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunEntry {
    pub line_number: u32,
    pub score: f64,
}

impl RunEntry {
    pub fn new(line_number: u32, score: f64) -> Self {
        RunEntry { line_number, score }
    }
}

/// Debate id for a transcript path: the file stem.
pub fn debate_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn parse_debate_tsv(path: &Path, labeled: bool) -> Result<Debate> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_debate_str(&debate_id_for(path), &content, path, labeled)
}

/// Parses a transcript whose label column is optional: the field count of
/// the first non-empty line decides between labeled and unlabeled.
pub fn parse_debate_auto(path: &Path) -> Result<Debate> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labeled = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.split('\t').count() == 4);
    parse_debate_str(&debate_id_for(path), &content, path, labeled)
}

/// Parses transcript content; `origin` is only used in error messages.
pub fn parse_debate_str(
    debate_id: &str,
    content: &str,
    origin: &Path,
    labeled: bool,
) -> Result<Debate> {
    let expected = if labeled { 4 } else { 3 };
    let mut records = Vec::new();
    for (idx, raw) in content.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected {
            return Err(Error::parse(
                origin,
                lineno,
                format!(
                    "expected {expected} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let line_number: u32 = fields[0].trim().parse().map_err(|_| {
            Error::parse(
                origin,
                lineno,
                format!("invalid line number {:?}", fields[0]),
            )
        })?;
        if line_number == 0 {
            return Err(Error::parse(origin, lineno, "line numbers start at 1"));
        }
        let label = if labeled {
            let label = match fields[3].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("label must be 0 or 1, found {other:?}"),
                    ))
                }
            };
            if fields[2].trim().is_empty() {
                return Err(Error::parse(origin, lineno, "empty sentence text"));
            }
            Some(label)
        } else {
            None
        };
        records.push(SentenceRecord {
            debate_id: debate_id.to_string(),
            line_number,
            speaker: fields[1].to_string(),
            text: fields[2].to_string(),
            label,
        });
    }
    Ok(Debate::new(debate_id, records))
}

/// Renders a debate in the transcript format. Labeled output requires every
/// record to carry a label.
pub fn render_debate_tsv(debate: &Debate, labeled: bool) -> Result<String> {
    let mut out = String::new();
    for r in &debate.records {
        if r.text.contains(['\t', '\n']) || r.speaker.contains(['\t', '\n']) {
            return Err(Error::Contract(format!(
                "{} line {}: tabs and newlines cannot be written to TSV",
                debate.debate_id, r.line_number
            )));
        }
        write!(out, "{}\t{}\t{}", r.line_number, r.speaker, r.text).unwrap();
        if labeled {
            let label = r.label.ok_or_else(|| {
                Error::Contract(format!(
                    "{} line {} has no label",
                    debate.debate_id, r.line_number
                ))
            })?;
            write!(out, "\t{}", u8::from(label)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_debate_tsv(debate: &Debate, path: &Path, labeled: bool) -> Result<()> {
    let body = render_debate_tsv(debate, labeled)?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Sorts entries by descending score, ties by ascending line number.
pub fn sort_run(entries: &mut [RunEntry]) {
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.line_number.cmp(&b.line_number))
    });
}

/// Checks that `entries` cover the debate's line numbers exactly once and
/// that every score is finite.
pub fn check_coverage(debate: &Debate, entries: &[RunEntry]) -> Result<()> {
    let coverage = |msg: String| Error::Coverage {
        debate: debate.debate_id.clone(),
        msg,
    };
    let expected: BTreeSet<u32> = debate.line_numbers().collect();
    let mut seen = BTreeSet::new();
    for e in entries {
        if !e.score.is_finite() {
            return Err(coverage(format!(
                "line {} has non-finite score",
                e.line_number
            )));
        }
        if !seen.insert(e.line_number) {
            return Err(coverage(format!("line {} scored twice", e.line_number)));
        }
    }
    let missing: Vec<_> = expected.difference(&seen).collect();
    let extra: Vec<_> = seen.difference(&expected).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(coverage(format!(
            "missing lines {missing:?}, unknown lines {extra:?}"
        )));
    }
    Ok(())
}

pub fn render_run(debate: &Debate, entries: &[RunEntry]) -> Result<String> {
    check_coverage(debate, entries)?;
    let mut sorted = entries.to_vec();
    sort_run(&mut sorted);
    let mut out = String::new();
    for e in &sorted {
        writeln!(out, "{}\t{:.6}", e.line_number, e.score).unwrap();
    }
    Ok(out)
}

pub fn write_run(debate: &Debate, entries: &[RunEntry], path: &Path) -> Result<()> {
    let body = render_run(debate, entries)?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_run(path: &Path) -> Result<Vec<RunEntry>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(ln), Some(score), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(
                path,
                idx + 1,
                "expected `line_number\\tscore`",
            ));
        };
        let line_number = ln
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid line number {ln:?}")))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid score {score:?}")))?;
        if !score.is_finite() {
            return Err(Error::parse(path, idx + 1, "score must be finite"));
        }
        entries.push(RunEntry { line_number, score });
    }
    Ok(entries)
}

/// Loads every `*.tsv` file in `dir`, ordered by file name.
pub fn load_corpus_dir(dir: &Path, labeled: bool) -> Result<Vec<Debate>> {
    tsv_files(dir)?
        .iter()
        .map(|p| parse_debate_tsv(p, labeled))
        .collect()
}

/// Like [`load_corpus_dir`] but detects the label column per file.
pub fn load_corpus_dir_auto(dir: &Path) -> Result<Vec<Debate>> {
    tsv_files(dir)?
        .iter()
        .map(|p| parse_debate_auto(p))
        .collect()
}

pub fn tsv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "tsv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub debates: usize,
    pub sentences: usize,
    pub positives: usize,
    pub negatives: usize,
    pub unlabeled: usize,
    /// (debate id, line number) pairs that occur more than once.
    pub duplicate_lines: Vec<(String, u32)>,
    /// Records whose line number does not exceed its predecessor's.
    pub out_of_order: Vec<(String, u32)>,
    pub empty_texts: Vec<(String, u32)>,
    pub mixed_debate_ids: Vec<(String, u32)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.duplicate_lines.is_empty()
            && self.out_of_order.is_empty()
            && self.empty_texts.is_empty()
            && self.mixed_debate_ids.is_empty()
    }

    /// `key: value` text form, one line per field.
    pub fn render(&self) -> String {
        let pairs = |v: &[(String, u32)]| {
            v.iter()
                .map(|(d, l)| format!("{d}:{l}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        writeln!(out, "debates: {}", self.debates).unwrap();
        writeln!(out, "sentences: {}", self.sentences).unwrap();
        writeln!(out, "positives: {}", self.positives).unwrap();
        writeln!(out, "negatives: {}", self.negatives).unwrap();
        writeln!(out, "unlabeled: {}", self.unlabeled).unwrap();
        writeln!(out, "duplicate_lines: {}", pairs(&self.duplicate_lines)).unwrap();
        writeln!(out, "out_of_order: {}", pairs(&self.out_of_order)).unwrap();
        writeln!(out, "empty_texts: {}", pairs(&self.empty_texts)).unwrap();
        writeln!(out, "mixed_debate_ids: {}", pairs(&self.mixed_debate_ids)).unwrap();
        writeln!(
            out,
            "status: {}",
            if self.is_clean() { "ok" } else { "problems" }
        )
        .unwrap();
        out
    }
}

pub fn validate_corpus(debates: &[Debate]) -> ValidationReport {
    let mut report = ValidationReport {
        debates: debates.len(),
        ..Default::default()
    };
    for debate in debates {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        let mut prev: Option<u32> = None;
        for r in &debate.records {
            report.sentences += 1;
            match r.label {
                Some(true) => report.positives += 1,
                Some(false) => report.negatives += 1,
                None => report.unlabeled += 1,
            }
            let here = (debate.debate_id.clone(), r.line_number);
            if r.text.trim().is_empty() {
                report.empty_texts.push(here.clone());
            }
            if r.debate_id != debate.debate_id {
                report.mixed_debate_ids.push(here.clone());
            }
            if prev.is_some_and(|p| r.line_number <= p) {
                report.out_of_order.push(here);
            }
            prev = Some(r.line_number);
            *counts.entry(r.line_number).or_default() += 1;
        }
        report.duplicate_lines.extend(
            counts
                .into_iter()
                .filter(|&(_, c)| c > 1)
                .map(|(l, _)| (debate.debate_id.clone(), l)),
        );
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(content: &str, labeled: bool) -> Result<Debate> {
        parse_debate_str("d1", content, Path::new("d1.tsv"), labeled)
    }

    #[test]
    fn parses_labeled_line() {
        let d = parse("1\tTRUMP\tThank you.\t0\n", true).unwrap();
        assert_eq!(
            d.records[0],
            SentenceRecord {
                debate_id: "d1".into(),
                line_number: 1,
                speaker: "TRUMP".into(),
                text: "Thank you.".into(),
                label: Some(false),
            }
        );
    }

    #[test]
    fn rejects_empty_text_when_labeled() {
        let err = parse("1\tA\tok\t0\n2\tSYSTEM\t\t1\n", true).unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path, Path::new("d1.tsv"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unlabeled_mode_has_no_labels() {
        let d = parse("1\tA\tHello there\n2\tB\tGeneral Kenobi\n", false).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.records.iter().all(|r| r.label.is_none()));
        assert!(!d.is_labeled());
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse("x\tA\tt\t0\n", true),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("1\tA\tt\t2\n", true),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse("1\tA\tt\n", true), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("1\tA\tt\tx\t0\n", true),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse("0\tA\tt\t0\n", true),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn crlf_and_trailing_blank_lines() {
        let d = parse("1\tA\tone\t1\r\n2\tB\ttwo\t0\r\n\n", true).unwrap();
        assert_eq!(d.records[1].text, "two");
        assert_eq!(d.relevant_lines().into_iter().collect::<Vec<_>>(), vec![1]);
    }

    fn three_lines() -> Debate {
        parse("1\tA\ta\t0\n2\tA\tb\t1\n3\tA\tc\t0\n", true).unwrap()
    }

    #[test]
    fn run_rows_sorted_by_score() {
        let d = parse("1\tA\ta\t0\n2\tA\tb\t1\n", true).unwrap();
        let out = render_run(&d, &[RunEntry::new(1, 0.2), RunEntry::new(2, 0.9)]).unwrap();
        assert_eq!(out, "2\t0.900000\n1\t0.200000\n");
    }

    #[test]
    fn run_coverage_errors() {
        let d = three_lines();
        let missing = render_run(&d, &[RunEntry::new(1, 0.2), RunEntry::new(2, 0.9)]);
        assert!(matches!(missing, Err(Error::Coverage { .. })));
        let extra = render_run(
            &d,
            &[
                RunEntry::new(1, 0.0),
                RunEntry::new(2, 0.0),
                RunEntry::new(3, 0.0),
                RunEntry::new(4, 0.0),
            ],
        );
        assert!(matches!(extra, Err(Error::Coverage { .. })));
        let dup = render_run(
            &d,
            &[
                RunEntry::new(1, 0.0),
                RunEntry::new(1, 0.0),
                RunEntry::new(3, 0.0),
            ],
        );
        assert!(matches!(dup, Err(Error::Coverage { .. })));
        let nan = render_run(
            &d,
            &[
                RunEntry::new(1, f64::NAN),
                RunEntry::new(2, 0.0),
                RunEntry::new(3, 0.0),
            ],
        );
        assert!(matches!(nan, Err(Error::Coverage { .. })));
    }

    #[test]
    fn single_sentence_run() {
        let d = parse("7\tA\tonly\t1\n", true).unwrap();
        assert_eq!(
            render_run(&d, &[RunEntry::new(7, 1.5)]).unwrap(),
            "7\t1.500000\n"
        );
    }

    #[test]
    fn equal_scores_break_by_line_number() {
        let d = three_lines();
        let out = render_run(
            &d,
            &[
                RunEntry::new(3, 0.5),
                RunEntry::new(1, 0.5),
                RunEntry::new(2, 0.7),
            ],
        )
        .unwrap();
        assert_eq!(out, "2\t0.700000\n1\t0.500000\n3\t0.500000\n");
    }

    #[test]
    fn run_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = three_lines();
        let path = dir.path().join("d1.tsv");
        let entries = [
            RunEntry::new(1, 0.25),
            RunEntry::new(2, -1.0),
            RunEntry::new(3, 3.0),
        ];
        write_run(&d, &entries, &path).unwrap();
        let back = read_run(&path).unwrap();
        assert_eq!(
            back.iter().map(|e| e.line_number).collect::<Vec<_>>(),
            vec![3, 1, 2]
        );
        assert_eq!(back[2].score, -1.0);
    }

    #[test]
    fn validation_counts_labels() {
        let report = validate_corpus(&[three_lines()]);
        assert_eq!(report.positives, 1);
        assert_eq!(report.negatives, 2);
        assert!(report.is_clean());
    }

    #[test]
    fn validation_flags_duplicates() {
        let d = parse("1\tA\ta\t0\n2\tA\tb\t1\n2\tA\tc\t0\n", true).unwrap();
        let report = validate_corpus(&[d]);
        assert_eq!(report.duplicate_lines, vec![("d1".to_string(), 2)]);
        assert_eq!(report.out_of_order, vec![("d1".to_string(), 2)]);
        assert!(!report.is_clean());
        assert!(report.render().contains("duplicate_lines: d1:2"));
    }

    #[test]
    fn validation_of_empty_corpus() {
        let report = validate_corpus(&[]);
        assert_eq!(report, ValidationReport::default());
        assert!(report.is_clean());
    }

    #[test]
    fn auto_detects_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        fs::write(&a, "1\tA\tx\t1\n").unwrap();
        let b = dir.path().join("b.tsv");
        fs::write(&b, "1\tA\tx\n").unwrap();
        assert_eq!(parse_debate_auto(&a).unwrap().records[0].label, Some(true));
        assert_eq!(parse_debate_auto(&b).unwrap().records[0].label, None);
        let all = load_corpus_dir_auto(dir.path()).unwrap();
        assert_eq!(
            all.iter().map(|d| d.debate_id.as_str()).collect::<Vec<_>>(),
            vec!["a", "b"]
        );
    }

    #[test]
    fn labeled_render_requires_labels() {
        let d = parse("1\tA\ta\n", false).unwrap();
        assert!(render_debate_tsv(&d, true).is_err());
        assert_eq!(render_debate_tsv(&d, false).unwrap(), "1\tA\ta\n");
    }
}
