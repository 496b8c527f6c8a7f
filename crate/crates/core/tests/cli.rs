use std::fs;
use std::path::Path;

use lgfront::io::cli::{run_with, EXIT_OK, EXIT_UNDECIDED, EXIT_USAGE};
use lgfront::io::{read_series, write_series, Metadata};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lgfront").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("`{key}` missing in\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    let out = dir.join("out");
    fs::write(
        &path,
        format!("{body}\n[output]\ndir = \"{}\"\n", out.display()),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "a = 1\nb = 0.5\nd = 1\nmu = 1\nbeta = 1\nh0 = 1\n[disc]\nhalf_width = 12\nny = 40\n";

#[test]
fn thresholds_from_key_values() {
    let (code, out, _) = run(&["thresholds", "d=1", "mu=1"]);
    assert_eq!(code, EXIT_OK);
    assert!((value(&out, "span_crit") - std::f64::consts::PI).abs() < 1e-15);
    assert!((value(&out, "h0_crit") - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn thresholds_reject_unknown_key() {
    let (code, _, err) = run(&["thresholds", "d=1", "mu=1", "betta=2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("betta"), "{err}");
}

#[test]
fn bounds_table_matches_example() {
    let (code, out, _) = run(&["bounds", "a=1", "b=0.5", "i=2"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "i,lower,upper");
    assert_eq!(lines[1], "1,0.5,0.75");
    assert_eq!(lines[2], "2,0.625,0.6875");
    assert!((value(&out, "limit") - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn bounds_reject_strong_predation() {
    let (code, _, err) = run(&["bounds", "a=1", "b=1.5", "i=2"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("0 < b < 1"), "{err}");
}

#[test]
fn missing_config_is_usage_error() {
    let (code, _, err) = run(&["simulate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--config"), "{err}");
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unreadable_config_is_usage_error() {
    let (code, _, err) = run(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("/nonexistent/run.toml"), "{err}");
}

#[test]
fn misspelled_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("betta = 2\n{SMALL}"));
    let (code, _, err) = run(&["simulate", "--config", &cfg]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown key `betta`"), "{err}");
}

#[test]
fn initial_snapshot_is_zero_outside_habitat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, out, err) = run(&["simulate", "--config", &cfg, "--t-end", "0"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("verdict = Undecided"), "{out}");
    let snap = fs::read_to_string(dir.path().join("out/snapshot.csv")).unwrap();
    assert!(snap.contains("# verdict = Undecided"));
    let mut inside = 0;
    for line in snap.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if cols[0].abs() >= 1.0 {
            assert_eq!(cols[2], 0.0, "{line}");
        } else {
            inside += 1;
            let expected = (std::f64::consts::FRAC_PI_2 * cols[0]).cos();
            assert!((cols[2] - expected).abs() < 1e-3, "{line}");
        }
        assert_eq!(cols[1], 1.0);
    }
    assert!(inside > 10);
}

#[test]
fn simulate_then_classify_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, out, err) = run(&["simulate", "--config", &cfg, "--t-end", "4", "--record-every", "0.25"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("verdict = Spreading"), "{out}");

    let series_path = dir.path().join("out/series.csv");
    let (md, series) = read_series(&series_path).unwrap();
    assert_eq!(series.len(), 17);
    assert_eq!(md.get("verdict"), Some("Spreading"));
    assert!(md.get("config").unwrap().contains("beta = 1.0"));
    assert_eq!(md.get("lgfront_version"), Some(env!("CARGO_PKG_VERSION")));

    let (code, out, _) = run(&["classify", series_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verdict = Spreading"));
    let (code, out, _) = run(&["classify", series_path.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verdict = Spreading"));

    let plots = dir.path().join("plots");
    let (code, _, err) = run(&["plot-data", series_path.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let span = fs::read_to_string(plots.join("span.csv")).unwrap();
    let md = Metadata::parse(&span);
    let crit: f64 = md.get("span_crit").unwrap().parse().unwrap();
    assert!((crit - std::f64::consts::PI).abs() < 1e-15);
    let fronts = fs::read_to_string(plots.join("fronts.csv")).unwrap();
    assert_eq!(fronts.lines().filter(|l| !l.starts_with('#')).count(), 18);
}

#[test]
fn undecided_series_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, _, _) = run(&["simulate", "--config", &cfg, "--t-end", "0.5"]);
    assert_eq!(code, EXIT_OK);
    let series_path = dir.path().join("out/series.csv");
    let (code, out, _) = run(&["classify", series_path.to_str().unwrap()]);
    assert_eq!(code, EXIT_UNDECIDED);
    assert!(out.contains("verdict = Undecided"));

    // without metadata the thresholds must come from a config
    let (_, series) = read_series(&series_path).unwrap();
    let bare = dir.path().join("bare.csv");
    write_series(&series, &bare).unwrap();
    let (code, _, err) = run(&["classify", bare.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--config"), "{err}");
}

#[test]
fn bisect_and_sweep_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let body = "a = 1\nb = 0.5\nd = 1\nmu = 1\nbeta = 1\nh0 = 0.5\n[disc]\nhalf_width = 10\nny = 40\nt_end = 60\n\
                [bisect]\nlo = 0.5\nhi = 4.0\nwidth_tol = 1.0\n\
                [sweep]\nbeta = [0.1, 4.0]\nh0 = [0.5, 2.0]\norder = [\"h0\", \"beta\"]\nparallel = false\n";
    let cfg = write_config(dir.path(), body);
    let (code, out, err) = run(&["bisect-beta", "--config", &cfg]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (lo, hi) = (value(&out, "lo"), value(&out, "hi"));
    assert!(hi - lo <= 1.0 && lo < hi);
    let log = fs::read_to_string(dir.path().join("out/bisect.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("beta,verdict,t_decided"));

    let (code, out, err) = run(&["sweep", "--config", &cfg]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("rows = 4"));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert!(rows[0].starts_with("h0,beta,verdict,"));
    assert_eq!(rows.len(), 5);
    // supercritical rows spread at every beta
    assert!(rows[3].contains(",Spreading,") && rows[4].contains(",Spreading,"), "{table}");
}

#[test]
fn bisect_without_section_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, _, err) = run(&["bisect-beta", "--config", &cfg]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("[bisect]"), "{err}");
}
