//! Byte-deterministic renderings of reports.
//!
//! * Confusion CSV: an empty first cell followed by the predicted labels,
//!   then one row per true label with its counts.
//! * Metrics CSV: `tag,precision,recall,f1,support` for every tag, then
//!   `macro` and `weighted` rows whose support is the total. Values keep
//!   full precision.
//! * Results table: `model,acc,val_acc,test_acc`, values rounded half-up to
//!   four places; missing values are blank (CSV) or `-` (text).

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{tag_label, Averages, ConfusionMatrix, EvalReport};
use crate::corpus::{TagId, NUM_TAGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfusionFormat {
    #[default]
    Csv,
    Svg,
}

impl FromStr for ConfusionFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ConfusionFormat::Csv),
            "svg" => Ok(ConfusionFormat::Svg),
            _ => Err(format!("unknown confusion format {s:?}")),
        }
    }
}

/// Which classes a rendered confusion matrix shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionOptions {
    /// Keep classes whose support is at least this; 0 keeps all 42.
    pub min_support: u64,
    /// Then keep only the `k` best-supported classes (lowest id on ties).
    pub top_k: Option<usize>,
}

impl ConfusionOptions {
    /// Selected tag ids in ascending order.
    pub fn select(&self, cm: &ConfusionMatrix) -> Vec<TagId> {
        let mut ids: Vec<TagId> = (0..NUM_TAGS)
            .filter(|&j| self.min_support == 0 || cm.row_sum(j) >= self.min_support)
            .collect();
        if let Some(k) = self.top_k {
            ids.sort_by_key(|&j| (std::cmp::Reverse(cm.row_sum(j)), j));
            ids.truncate(k);
            ids.sort_unstable();
        }
        ids
    }
}

pub fn render_confusion(cm: &ConfusionMatrix, format: ConfusionFormat, options: &ConfusionOptions) -> Vec<u8> {
    let ids = options.select(cm);
    match format {
        ConfusionFormat::Csv => confusion_csv(cm, &ids),
        ConfusionFormat::Svg => confusion_svg(cm, &ids).into_bytes(),
    }
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("flush to memory")
}

fn confusion_csv(cm: &ConfusionMatrix, ids: &[TagId]) -> Vec<u8> {
    let header = std::iter::once(String::new()).chain(ids.iter().map(|&j| tag_label(j).to_string()));
    let rows = ids.iter().map(|&t| {
        std::iter::once(tag_label(t).to_string())
            .chain(ids.iter().map(|&p| cm.get(t, p).to_string()))
            .collect()
    });
    csv_bytes(std::iter::once(header.collect()).chain(rows))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const CELL: usize = 18;
const MARGIN: usize = 70;

fn confusion_svg(cm: &ConfusionMatrix, ids: &[TagId]) -> String {
    let n = ids.len();
    let size = MARGIN + n * CELL + 10;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="12" text-anchor="middle">predicted</text>"#,
        MARGIN + n * CELL / 2
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{y}" text-anchor="middle" transform="rotate(-90 12 {y})">true</text>"#,
        y = MARGIN + n * CELL / 2
    );
    for (k, &j) in ids.iter().enumerate() {
        let label = xml_escape(tag_label(j));
        let c = MARGIN + k * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{c}" y="{y}" text-anchor="start" transform="rotate(-90 {c} {y})">{label}</text>"#,
            y = MARGIN - 4
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="end">{label}</text>"#,
            x = MARGIN - 4,
            y = c + 3
        );
    }
    for (r, &t) in ids.iter().enumerate() {
        let support = cm.row_sum(t);
        for (c, &p) in ids.iter().enumerate() {
            let count = cm.get(t, p);
            let v = if support == 0 { 0.0 } else { count as f64 / support as f64 };
            let shade = |lo: f64| (255.0 - (255.0 - lo) * v).round() as u8;
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({},{},{})" stroke="#dddddd" stroke-width="0.5"><title>{} / {}: {count}</title></rect>"##,
                shade(8.0),
                shade(48.0),
                shade(107.0),
                xml_escape(tag_label(t)),
                xml_escape(tag_label(p)),
                x = MARGIN + c * CELL,
                y = MARGIN + r * CELL,
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub tag: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

pub fn render_metrics_csv(report: &EvalReport) -> Vec<u8> {
    let total = report.class_report.total_support();
    let mut rows: Vec<MetricsRow> = report
        .class_report
        .classes
        .iter()
        .enumerate()
        .map(|(j, c)| MetricsRow {
            tag: tag_label(j).to_string(),
            precision: c.precision,
            recall: c.recall,
            f1: c.f1,
            support: c.support,
        })
        .collect();
    let avg_row = |name: &str, a: &Averages| MetricsRow {
        tag: name.to_string(),
        precision: a.precision,
        recall: a.recall,
        f1: a.f1,
        support: total,
    };
    rows.push(avg_row("macro", &report.macro_avg));
    rows.push(avg_row("weighted", &report.weighted_avg));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).expect("writing to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn parse_metrics_csv(bytes: &[u8]) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

/// Decimal rendering of `x` rounded half away from zero at `places`.
///
/// Rounds the shortest decimal form of `x`, so `0.12345` becomes `0.1235`.
pub fn round_half_up(x: f64, places: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.extend((0..places).map(|i| frac.get(i).copied().unwrap_or(0)));
    if frac.get(places).is_some_and(|&d| d >= 5) {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - places;
    let mut out = String::new();
    if x < 0.0 && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.extend(digits[..split].iter().map(|d| (b'0' + d) as char));
    if places > 0 {
        out.push('.');
        out.extend(digits[split..].iter().map(|d| (b'0' + d) as char));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(format!("unknown table format {s:?}")),
        }
    }
}

/// One model's line in the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

const TABLE_HEADER: [&str; 4] = ["model", "acc", "val_acc", "test_acc"];

pub fn render_results_table(rows: &[ResultRow], format: TableFormat) -> Vec<u8> {
    let cells = |r: &ResultRow, missing: &str| {
        [r.acc, r.val_acc, r.test_acc].map(|v| v.map_or(missing.to_string(), |v| round_half_up(v, 4)))
    };
    match format {
        TableFormat::Csv => csv_bytes(
            std::iter::once(TABLE_HEADER.map(String::from).to_vec()).chain(rows.iter().map(|r| {
                std::iter::once(r.model.clone()).chain(cells(r, "")).collect()
            })),
        ),
        TableFormat::Text => {
            let w = rows.iter().map(|r| r.model.chars().count()).max().unwrap_or(0).max(5);
            let mut s = format!(
                "{:<w$}  {:>8}  {:>8}  {:>8}\n",
                TABLE_HEADER[0], TABLE_HEADER[1], TABLE_HEADER[2], TABLE_HEADER[3]
            );
            for r in rows {
                let [a, v, t] = cells(r, "-");
                let _ = writeln!(s, "{:<w$}  {a:>8}  {v:>8}  {t:>8}", r.model);
            }
            s.into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TagSet;

    fn id(label: &str) -> TagId {
        TagSet::damsl().by_label(label).unwrap().id()
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(0.12345, 4), "0.1235");
        assert_eq!(round_half_up(0.5071, 4), "0.5071");
        assert_eq!(round_half_up(0.99995, 4), "1.0000");
        assert_eq!(round_half_up(1.0, 4), "1.0000");
        assert_eq!(round_half_up(0.125, 2), "0.13");
        assert_eq!(round_half_up(-0.125, 2), "-0.13");
        assert_eq!(round_half_up(-0.00001, 2), "0.00");
        assert_eq!(round_half_up(2.5, 0), "3");
        assert_eq!(round_half_up(0.1 + 0.2, 4), "0.3000");
    }

    #[test]
    fn two_by_two_confusion_csv() {
        let (sd, b) = (id("sd"), id("b"));
        let cm = ConfusionMatrix::from_pairs(&[sd, sd, sd, b], &[sd, sd, b, b]).unwrap();
        let opts = ConfusionOptions { min_support: 1, top_k: None };
        let text = String::from_utf8(render_confusion(&cm, ConfusionFormat::Csv, &opts)).unwrap();
        let (first, second) = if sd < b { ("sd", "b") } else { ("b", "sd") };
        let expected = if sd < b {
            format!(",{first},{second}\n{first},2,1\n{second},0,1\n")
        } else {
            format!(",{first},{second}\n{first},1,0\n{second},1,2\n")
        };
        assert_eq!(text, expected);
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn support_filter_keeps_largest_classes() {
        let mut labels = Vec::new();
        for (tag, n) in [("sv", 9), ("sd", 12), ("aa", 6), ("b", 7), ("%", 5), ("qh", 1), ("ny", 2)] {
            labels.extend(std::iter::repeat_n(id(tag), n));
        }
        let cm = ConfusionMatrix::from_pairs(&labels, &labels).unwrap();
        let kept = ConfusionOptions { min_support: 5, top_k: None }.select(&cm);
        let mut want: Vec<_> = ["sv", "sd", "aa", "b", "%"].iter().map(|t| id(t)).collect();
        want.sort_unstable();
        assert_eq!(kept, want);
        let top = ConfusionOptions { min_support: 0, top_k: Some(2) }.select(&cm);
        let mut want2 = vec![id("sd"), id("sv")];
        want2.sort_unstable();
        assert_eq!(top, want2);
        assert_eq!(ConfusionOptions::default().select(&cm).len(), NUM_TAGS);
    }

    #[test]
    fn quote_label_is_escaped() {
        let q = id("fo_o_fw_\"_by_bc");
        let cm = ConfusionMatrix::from_pairs(&[q], &[q]).unwrap();
        let opts = ConfusionOptions { min_support: 1, top_k: None };
        let csv_text = String::from_utf8(render_confusion(&cm, ConfusionFormat::Csv, &opts)).unwrap();
        assert_eq!(csv_text, ",\"fo_o_fw_\"\"_by_bc\"\n\"fo_o_fw_\"\"_by_bc\",1\n");
        let svg = String::from_utf8(render_confusion(&cm, ConfusionFormat::Svg, &opts)).unwrap();
        assert!(svg.contains("fo_o_fw_&quot;_by_bc"));
        assert!(!svg.contains("fo_o_fw_\"_by_bc"));
    }

    #[test]
    fn svg_is_deterministic_and_row_normalized() {
        let (sd, b) = (id("sd"), id("b"));
        let cm = ConfusionMatrix::from_pairs(&[sd, sd, b], &[sd, b, b]).unwrap();
        let opts = ConfusionOptions { min_support: 1, top_k: None };
        let a = render_confusion(&cm, ConfusionFormat::Svg, &opts);
        assert_eq!(a, render_confusion(&cm, ConfusionFormat::Svg, &opts));
        let svg = String::from_utf8(a).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("</rect>\""));
        // full row: darkest; half row: midway; empty cell: white
        assert!(svg.contains("rgb(8,48,107)"));
        assert!(svg.contains("rgb(132,152,181)"));
        assert!(svg.contains("rgb(255,255,255)"));
        assert_eq!(svg.matches("<rect x=").count(), 4);
    }

    #[test]
    fn metrics_csv_round_trips() {
        let (sd, b) = (id("sd"), id("b"));
        let report = EvalReport::from_predictions(&[sd, sd, b], &[sd, b, b]).unwrap();
        let bytes = render_metrics_csv(&report);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("tag,precision,recall,f1,support\n"));
        let rows = parse_metrics_csv(&bytes).unwrap();
        assert_eq!(rows.len(), NUM_TAGS + 2);
        assert_eq!(rows[sd].precision, 1.0);
        assert_eq!(rows[sd].recall, 0.5);
        assert_eq!(rows[b].precision, 0.5);
        assert_eq!(rows[NUM_TAGS].tag, "macro");
        assert_eq!(rows[NUM_TAGS + 1].tag, "weighted");
        assert_eq!(rows[NUM_TAGS + 1].support, 3);
        assert_eq!(rows[NUM_TAGS + 1].f1, report.weighted_avg.f1);
    }

    #[test]
    fn results_table_layout() {
        assert_eq!(render_results_table(&[], TableFormat::Csv), b"model,acc,val_acc,test_acc\n");
        assert_eq!(String::from_utf8(render_results_table(&[], TableFormat::Text)).unwrap().lines().count(), 1);
        let row = ResultRow {
            model: "USE".into(),
            acc: Some(0.7247),
            val_acc: Some(0.6951),
            test_acc: Some(0.5071),
        };
        let text = String::from_utf8(render_results_table(std::slice::from_ref(&row), TableFormat::Text)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap().split_whitespace().collect::<Vec<_>>(), ["USE", "0.7247", "0.6951", "0.5071"]);
        let csv_text = String::from_utf8(render_results_table(&[row], TableFormat::Csv)).unwrap();
        assert_eq!(csv_text, "model,acc,val_acc,test_acc\nUSE,0.7247,0.6951,0.5071\n");
    }
}
