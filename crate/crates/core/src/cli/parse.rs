use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::srm::{aggregate_segments, validate_series, ExpectedSplit, SrmSnapshot, AGGREGATE_SEGMENT};
use crate::validate::BucketCounts;

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Read a `bucket,count` CSV.
///
/// With `declared_buckets` the bucket count is fixed and absent buckets read
/// as zero; otherwise it is one past the largest bucket index seen.
pub fn parse_bucket_csv(path: &Path, declared_buckets: Option<usize>) -> Result<BucketCounts> {
    parse_bucket_csv_str(&read(path)?, path, declared_buckets)
}

pub fn parse_bucket_csv_str(
    text: &str,
    path: &Path,
    declared_buckets: Option<usize>,
) -> Result<BucketCounts> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    if header.len() != 2 || &header[0] != "bucket" || &header[1] != "count" {
        return Err(parse_error(path, 1, "expected header `bucket,count`"));
    }
    let mut seen: BTreeMap<usize, (u64, usize)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_error(
                path,
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let bucket: usize = record[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("invalid bucket index `{}`", &record[0])))?;
        let count: i128 = record[1]
            .parse()
            .map_err(|_| parse_error(path, line, format!("invalid count `{}`", &record[1])))?;
        if count < 0 {
            return Err(parse_error(path, line, format!("negative count {count}")));
        }
        let count = u64::try_from(count)
            .map_err(|_| parse_error(path, line, format!("count {count} too large")))?;
        if let Some(b) = declared_buckets {
            if bucket >= b {
                return Err(parse_error(
                    path,
                    line,
                    format!("bucket {bucket} outside declared range 0..{b}"),
                ));
            }
        }
        if let Some((_, first)) = seen.insert(bucket, (count, line)) {
            return Err(parse_error(
                path,
                line,
                format!("bucket {bucket} already given on line {first}"),
            ));
        }
    }
    let buckets = match declared_buckets {
        Some(b) => b,
        None => seen.keys().next_back().map_or(0, |&b| b + 1),
    };
    let mut counts = vec![0u64; buckets];
    for (b, (c, _)) in seen {
        counts[b] = c;
    }
    BucketCounts::new(counts)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotLine {
    experiment_id: String,
    day: u32,
    x_t: u64,
    x_c: u64,
    r_t: f64,
    r_c: f64,
    #[serde(default)]
    segment: Option<String>,
}

/// One experiment's series keyed by segment. The aggregate is always present
/// under [`AGGREGATE_SEGMENT`]; other keys appear only for segmented input.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSeries {
    pub split: ExpectedSplit,
    pub segments: BTreeMap<String, Vec<SrmSnapshot>>,
}

impl ExperimentSeries {
    pub fn aggregate(&self) -> &[SrmSnapshot] {
        &self.segments[AGGREGATE_SEGMENT]
    }

    /// Segment series without the aggregate.
    pub fn parts(&self) -> BTreeMap<String, Vec<SrmSnapshot>> {
        self.segments
            .iter()
            .filter(|(k, _)| k.as_str() != AGGREGATE_SEGMENT)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

/// Read snapshot JSONL: one object per line, blank lines ignored.
pub fn parse_snapshot_jsonl(path: &Path) -> Result<BTreeMap<String, ExperimentSeries>> {
    parse_snapshot_jsonl_str(&read(path)?, path)
}

pub fn parse_snapshot_jsonl_str(text: &str, path: &Path) -> Result<BTreeMap<String, ExperimentSeries>> {
    struct Pending {
        split: ExpectedSplit,
        split_line: usize,
        segmented: Option<bool>,
        rows: BTreeMap<String, Vec<(usize, SrmSnapshot)>>,
    }
    let mut experiments: BTreeMap<String, Pending> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row: SnapshotLine =
            serde_json::from_str(raw).map_err(|e| parse_error(path, line, e.to_string()))?;
        if row.experiment_id.is_empty() {
            return Err(parse_error(path, line, "empty experiment_id"));
        }
        let split = ExpectedSplit::new(row.r_t, row.r_c)
            .map_err(|e| parse_error(path, line, e.to_string()))?;
        let segmented = row.segment.is_some();
        let segment = match row.segment {
            Some(s) if s == AGGREGATE_SEGMENT => {
                return Err(parse_error(
                    path,
                    line,
                    format!("segment name `{AGGREGATE_SEGMENT}` is reserved"),
                ))
            }
            Some(s) if s.is_empty() => return Err(parse_error(path, line, "empty segment name")),
            Some(s) => s,
            None => AGGREGATE_SEGMENT.to_string(),
        };
        let exp = experiments
            .entry(row.experiment_id.clone())
            .or_insert_with(|| Pending {
                split,
                split_line: line,
                segmented: None,
                rows: BTreeMap::new(),
            });
        if (exp.split.p0() - split.p0()).abs() > 1e-12 {
            return Err(parse_error(
                path,
                line,
                format!(
                    "experiment `{}` split {}:{} disagrees with line {}",
                    row.experiment_id, row.r_t, row.r_c, exp.split_line
                ),
            ));
        }
        match exp.segmented {
            Some(s) if s != segmented => {
                return Err(parse_error(
                    path,
                    line,
                    format!(
                        "experiment `{}` mixes segmented and unsegmented rows",
                        row.experiment_id
                    ),
                ))
            }
            _ => exp.segmented = Some(segmented),
        }
        exp.rows
            .entry(segment)
            .or_default()
            .push((line, SrmSnapshot::new(row.day, row.x_t, row.x_c)));
    }

    let mut out = BTreeMap::new();
    for (id, exp) in experiments {
        let mut segments = BTreeMap::new();
        for (segment, mut rows) in exp.rows {
            rows.sort_by_key(|(line, s)| (s.day, *line));
            for pair in rows.windows(2) {
                let ((_, a), (line, b)) = (pair[0], pair[1]);
                if a.day == b.day {
                    return Err(Error::Validation(format!(
                        "{}:{line}: experiment `{id}` segment `{segment}` repeats day {}",
                        path.display(),
                        b.day
                    )));
                }
                if b.x_t < a.x_t || b.x_c < a.x_c {
                    let culprit = pair[0].0.max(line);
                    return Err(Error::Validation(format!(
                        "{}:{culprit}: experiment `{id}` segment `{segment}` cumulative counts decrease from day {} to day {}",
                        path.display(),
                        a.day,
                        b.day
                    )));
                }
            }
            let series: Vec<SrmSnapshot> = rows.into_iter().map(|(_, s)| s).collect();
            validate_series(&series)?;
            segments.insert(segment, series);
        }
        if exp.segmented == Some(true) {
            let combined = aggregate_segments(segments.values().map(Vec::as_slice));
            segments.insert(AGGREGATE_SEGMENT.to_string(), combined);
        }
        out.insert(
            id,
            ExperimentSeries {
                split: exp.split,
                segments,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("in.csv")
    }

    #[test]
    fn uniform_csv() {
        let mut text = String::from("bucket,count\n");
        for b in 0..100 {
            text.push_str(&format!("{b},30000\n"));
        }
        let c = parse_bucket_csv_str(&text, p(), None).unwrap();
        assert_eq!(c.buckets(), 100);
        assert_eq!(c.total(), 3_000_000);
    }

    #[test]
    fn missing_bucket_reads_zero() {
        let text = "bucket,count\n0,5\n2,7\n";
        let c = parse_bucket_csv_str(text, p(), Some(4)).unwrap();
        assert_eq!(c.counts(), &[5, 0, 7, 0]);
    }

    #[test]
    fn rejections_carry_line_numbers() {
        for (text, line) in [
            ("bucket,count\n0,1\n5,-1\n", 3),
            ("bucket,count\n0,1\n0,2\n", 3),
            ("bucket,count\n0,x\n", 2),
            ("bucket,count\n0,1,2\n", 2),
            ("b,c\n0,1\n", 1),
            ("bucket,count\n0,1\n1,1\n150,1\n", 4),
        ] {
            match parse_bucket_csv_str(text, p(), Some(100)) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn snapshots_grouped_and_sorted() {
        let text = r#"{"experiment_id":"e1","day":2,"x_t":20,"x_c":20,"r_t":1,"r_c":1}
{"experiment_id":"e1","day":1,"x_t":10,"x_c":10,"r_t":1,"r_c":1}
"#;
        let m = parse_snapshot_jsonl_str(text, p()).unwrap();
        let s = m["e1"].aggregate();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].day, 1);
        assert_eq!(m["e1"].segments.len(), 1);
    }

    #[test]
    fn segments_get_aggregate() {
        let text = r#"{"experiment_id":"e","day":1,"x_t":10,"x_c":10,"r_t":1,"r_c":1,"segment":"ios"}
{"experiment_id":"e","day":1,"x_t":5,"x_c":7,"r_t":1,"r_c":1,"segment":"web"}
"#;
        let m = parse_snapshot_jsonl_str(text, p()).unwrap();
        assert_eq!(m["e"].segments.len(), 3);
        assert_eq!(m["e"].aggregate()[0], SrmSnapshot::new(1, 15, 17));
        assert_eq!(m["e"].parts().len(), 2);
    }

    #[test]
    fn snapshot_rejections() {
        let decreasing = r#"{"experiment_id":"e","day":1,"x_t":10,"x_c":10,"r_t":1,"r_c":1}
{"experiment_id":"e","day":2,"x_t":9,"x_c":12,"r_t":1,"r_c":1}
"#;
        let err = parse_snapshot_jsonl_str(decreasing, p()).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("`e`"), "{err}");
        let dup = r#"{"experiment_id":"e","day":1,"x_t":10,"x_c":10,"r_t":1,"r_c":1}
{"experiment_id":"e","day":1,"x_t":12,"x_c":12,"r_t":1,"r_c":1}
"#;
        assert!(matches!(parse_snapshot_jsonl_str(dup, p()), Err(Error::Validation(_))));
        let bad_split = r#"{"experiment_id":"e","day":1,"x_t":10,"x_c":10,"r_t":1,"r_c":1}
{"experiment_id":"e","day":2,"x_t":12,"x_c":12,"r_t":1,"r_c":2}
"#;
        assert!(matches!(parse_snapshot_jsonl_str(bad_split, p()), Err(Error::Parse { line: 2, .. })));
        let garbage = "{\"experiment_id\":\"e\"}\n";
        assert!(matches!(parse_snapshot_jsonl_str(garbage, p()), Err(Error::Parse { line: 1, .. })));
    }
}
