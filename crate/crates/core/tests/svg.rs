use std::path::PathBuf;

use aitsde::cli::{emit_loglog_svg, render_loglog_svg};
use aitsde::harness::ErrorRow;
use aitsde::schemes::SchemeId;

fn row(scheme: SchemeId, k: i32, err: f64) -> ErrorRow {
    ErrorRow {
        scheme,
        tau: 2f64.powi(-k),
        n_paths: 10,
        rms_error_x: err,
        rms_error_y: err,
        wall_time_s: 0.0,
        backstop_count: 0,
        negative_proposal_count: 0,
    }
}

fn tiny() -> Vec<ErrorRow> {
    vec![
        row(SchemeId::Tsm, 7, 2f64.powi(-8)),
        row(SchemeId::Tsm, 8, 2f64.powi(-9)),
        row(SchemeId::RefBemX, 7, 2f64.powi(-6)),
        row(SchemeId::RefBemX, 8, 2f64.powf(-6.5)),
    ]
}

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/loglog.svg")
}

#[test]
fn matches_golden_file() {
    let svg = render_loglog_svg(&tiny()).unwrap();
    if std::env::var_os("AITSDE_BLESS").is_some() {
        std::fs::write(golden(), &svg).unwrap();
    }
    let expected = std::fs::read_to_string(golden()).unwrap();
    assert_eq!(svg, expected);
}

#[test]
fn parses_as_xml_with_one_polyline_per_scheme() {
    let svg = render_loglog_svg(&tiny()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].attribute("data-scheme"), Some("TSM"));
    // two points per scheme
    assert_eq!(lines[0].attribute("points").unwrap().split(' ').count(), 2);
}

fn coords(node: roxmltree::Node) -> [f64; 4] {
    ["x1", "y1", "x2", "y2"].map(|a| node.attribute(a).unwrap().parse().unwrap())
}

#[test]
fn guide_slopes_are_one_and_one_half_in_axis_units() {
    let svg = render_loglog_svg(&tiny()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let guides: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("guide")).collect();
    assert_eq!(guides.len(), 2);
    // pixel slope of a line of slope 1 in data units, read off the TSM polyline
    let tsm = doc
        .descendants()
        .find(|n| n.attribute("data-scheme") == Some("TSM"))
        .unwrap();
    let pts: Vec<(f64, f64)> = tsm
        .attribute("points")
        .unwrap()
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    let unit = (pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0);
    for (g, expected) in guides.iter().zip([1.0, 0.5]) {
        let [x1, y1, x2, y2] = coords(*g);
        let slope = (y2 - y1) / (x2 - x1) / unit;
        assert!((slope - expected).abs() < 1e-3, "{slope}");
    }
}

#[test]
fn rejects_single_point_series_and_writes_files() {
    assert!(render_loglog_svg(&tiny()[..1]).is_err());
    let dir = tempfile::TempDir::new().unwrap();
    let out = dir.path().join("plot.svg");
    emit_loglog_svg(&tiny(), &out).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), render_loglog_svg(&tiny()).unwrap());
    assert!(emit_loglog_svg(&tiny()[..3], &dir.path().join("bad.svg")).is_err());
}
