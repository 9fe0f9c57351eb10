//! Recomputes stored boundary tables. The fixtures were written by the CLI
//! with the default configuration.

use std::path::PathBuf;

use bell_strength::photonic::{DetectorKind, StateFamily};
use bell_strength::report::trace_table;
use bell_strength::search::{trace_curve, SearchConfig};

struct Fixture {
    file: &'static str,
    family: StateFamily,
    kind: DetectorKind,
    target: f64,
}

const UNBALANCED: StateFamily = StateFamily::Unbalanced { theta: 45.0 };
const PSEUDO: StateFamily = StateFamily::PseudoBell {
    gamma: 45.0,
    phi: 0.0,
};

const FIXTURES: [Fixture; 4] = [
    Fixture {
        file: "unbalanced_detector_eta_min.txt",
        family: UNBALANCED,
        kind: DetectorKind::Detector,
        target: 0.0,
    },
    Fixture {
        file: "pseudo_counter_eta_min.txt",
        family: PSEUDO,
        kind: DetectorKind::Counter,
        target: 0.0,
    },
    Fixture {
        file: "pseudo_detector_eta_min.txt",
        family: PSEUDO,
        kind: DetectorKind::Detector,
        target: 0.0,
    },
    Fixture {
        file: "pseudo_counter_s5e-5.txt",
        family: PSEUDO,
        kind: DetectorKind::Counter,
        target: 5e-5,
    },
];

fn load(file: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(file);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(String::from)
        .collect();
    let rows = lines
        .map(|l| l.split_whitespace().map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn computed(fixture: &Fixture, grid: &[f64]) -> Vec<Vec<f64>> {
    let trace = trace_curve(
        fixture.family,
        fixture.kind,
        grid,
        fixture.target,
        &SearchConfig::default(),
    )
    .unwrap();
    trace_table(&trace)
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn assert_rows_match(file: &str, expected: &[f64], got: &[f64]) {
    let close = |a: f64, b: f64, rel: f64, abs: f64| {
        (a.is_nan() && b.is_nan()) || (a - b).abs() <= abs.max(rel * a.abs())
    };
    let parameter = expected[0];
    assert_eq!(got[0], parameter, "{file}");
    for i in 1..5 {
        assert!(
            close(expected[i], got[i], 0.0, 0.01),
            "{file} at {parameter}: angle {i} {} vs {}",
            expected[i],
            got[i]
        );
    }
    for i in 5..7 {
        assert!(
            close(expected[i], got[i], 0.0, 0.0),
            "{file} at {parameter}: efficiency {} vs {}",
            expected[i],
            got[i]
        );
    }
    for i in 7..9 {
        assert!(
            close(expected[i], got[i], 1e-3, 1e-12),
            "{file} at {parameter}: strength {} vs {}",
            expected[i],
            got[i]
        );
    }
}

#[test]
fn fixtures_have_the_appendix_header() {
    for fixture in &FIXTURES {
        let (header, rows) = load(fixture.file);
        let name = fixture.family.parameter_name();
        assert_eq!(
            header,
            [name, "A_1", "A_2", "B_1", "B_2", "eta_1", "eta_2", "S_1", "S_2"],
            "{}",
            fixture.file
        );
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.len() == 9));
    }
}

#[test]
fn first_rows_reproduce() {
    for fixture in &FIXTURES {
        let (_, rows) = load(fixture.file);
        let got = computed(fixture, &[rows[0][0]]);
        assert_rows_match(fixture.file, &rows[0], &got[0]);
    }
}

#[test]
#[ignore = "recomputes every stored trace, several minutes"]
fn full_traces_reproduce() {
    for fixture in &FIXTURES {
        let (_, rows) = load(fixture.file);
        let grid: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let got = computed(fixture, &grid);
        assert_eq!(got.len(), rows.len());
        for (expected, got) in rows.iter().zip(&got) {
            assert_rows_match(fixture.file, expected, got);
        }
    }
}
