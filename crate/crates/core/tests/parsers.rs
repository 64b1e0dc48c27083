use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use abguard::cli::{parse_bucket_csv, parse_snapshot_jsonl};
use abguard::srm::{SrmSnapshot, AGGREGATE_SEGMENT};
use abguard::Error;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn parse_any(path: &Path) -> abguard::Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        parse_bucket_csv(path, Some(100)).map(|_| ())
    } else {
        parse_snapshot_jsonl(path).map(|_| ())
    }
}

#[test]
fn rejection_corpus() {
    let mut reader = csv::Reader::from_path(fixture("reject/expected.csv")).unwrap();
    let mut listed = BTreeSet::new();
    for row in reader.records() {
        let row = row.unwrap();
        let (file, kind, line) = (&row[0], &row[1], &row[2]);
        listed.insert(file.to_string());
        let path = fixture(&format!("reject/{file}"));
        let err = parse_any(&path).expect_err(file);
        match (kind, &err) {
            ("parse", Error::Parse { line: l, path: p, .. }) => {
                assert_eq!(l.to_string(), line, "{file}: {err}");
                assert!(p.ends_with(file), "{file}: {err}");
            }
            ("validation", Error::Validation(msg)) => {
                assert!(msg.contains(&format!("{file}:{line}:")), "{file}: {msg}");
                assert!(msg.contains("`exp-1`"), "{file}: {msg}");
            }
            ("domain", Error::Domain(_)) => {}
            _ => panic!("{file}: expected {kind}, got {err:?}"),
        }
    }
    // Every malformed fixture is covered by the index.
    let on_disk: BTreeSet<String> = std::fs::read_dir(fixture("reject"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "expected.csv")
        .collect();
    assert_eq!(on_disk, listed);
}

#[test]
fn accepted_bucket_csv() {
    let c = parse_bucket_csv(&fixture("accept/uniform.csv"), None).unwrap();
    assert_eq!(c.buckets(), 100);
    assert_eq!(c.total(), 3_000_000);
    let wider = parse_bucket_csv(&fixture("accept/uniform.csv"), Some(120)).unwrap();
    assert_eq!(wider.buckets(), 120);
    assert_eq!(&wider.counts()[100..], &[0; 20]);
}

#[test]
fn accepted_snapshots() {
    let desk = parse_snapshot_jsonl(&fixture("accept/desk.jsonl")).unwrap();
    assert_eq!(desk["desk"].aggregate(), &[SrmSnapshot::new(1, 2_108, 3_183)]);

    let m = parse_snapshot_jsonl(&fixture("accept/segmented.jsonl")).unwrap();
    assert_eq!(m.len(), 2);
    let seven = &m["exp-7"];
    assert_eq!(seven.parts().len(), 2);
    // web carries its day-1 counts forward into day 2.
    assert_eq!(
        seven.segments[AGGREGATE_SEGMENT],
        vec![SrmSnapshot::new(1, 9_990, 10_010), SrmSnapshot::new(2, 15_010, 15_000)]
    );
    assert!((m["exp-8"].split.p0() - 2.0 / 3.0).abs() < 1e-15);
}
