use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn eyeloc(out: &Path, args: &[&str]) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_eyeloc")).arg("--out").arg(out).args(args).output().expect("binary runs");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn ok(out: &Path, args: &[&str]) -> String {
    let r = eyeloc(out, args);
    assert_eq!(r.code, 0, "eyeloc {args:?}\nstdout:\n{}\nstderr:\n{}", r.stdout, r.stderr);
    r.stdout
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary_value(csv: &str, metric: &str, threshold: &str) -> f64 {
    csv.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == metric && f[1] == threshold)
        .unwrap_or_else(|| panic!("{metric}@{threshold} missing in\n{csv}"))[2]
        .parse()
        .unwrap()
}

fn mean_error(stdout: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with("mean angular error")).expect("error line");
    line.split_whitespace().nth(3).unwrap().parse().unwrap()
}

#[test]
fn clean_corpus_locate_and_evaluate() {
    let t = TempDir::new().unwrap();
    let corpus = t.path().join("corpus");
    ok(&corpus, &["synth", "--kind", "clean", "--count", "12"]);
    assert!(corpus.join("manifest.csv").is_file());

    let out = t.path().join("loc");
    ok(&out, &["locate", s(&corpus)]);
    let det = fs::read_to_string(out.join("detections.csv")).unwrap();
    let mut lines = det.lines();
    assert_eq!(lines.next().unwrap(), "filename,eye,x,y,a,b,orientation,gof,accepted,psr");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().filter(|r| r.split(',').nth(8) == Some("true")).count() >= 23, "{det}");

    let ev = t.path().join("eval");
    let stdout = ok(&ev, &["evaluate", s(&corpus), "--dataset", "custom"]);
    assert!(stdout.contains("WEC"), "{stdout}");
    let summary = fs::read_to_string(ev.join("summary.csv")).unwrap();
    assert!(summary.starts_with("metric,threshold,fraction\n"));
    assert!(summary_value(&summary, "wec", "0.050000") >= 0.98, "{summary}");
    let items = fs::read_to_string(ev.join("items.csv")).unwrap();
    assert_eq!(items.lines().next().unwrap(), "filename,d_l,d_r,w,e_wec,e_aec,e_bec");
    assert_eq!(items.lines().count(), 13);
}

#[test]
fn closed_eyes_are_not_accepted() {
    let t = TempDir::new().unwrap();
    let corpus = t.path().join("closed");
    ok(&corpus, &["synth", "--kind", "closed", "--count", "3"]);
    let out = t.path().join("loc");
    let r = eyeloc(&out, &["locate", s(&corpus)]);
    let det = fs::read_to_string(out.join("detections.csv")).unwrap();
    let accepted = det.lines().skip(1).filter(|l| l.split(',').nth(8) == Some("true")).count();
    assert!(accepted <= 1, "{det}");
    if accepted == 0 {
        assert_eq!(r.code, 4);
    }
}

#[test]
fn threshold_override_is_honoured() {
    let t = TempDir::new().unwrap();
    let corpus = t.path().join("corpus");
    ok(&corpus, &["synth", "--kind", "clean", "--count", "3"]);
    let ev = t.path().join("eval");
    ok(&ev, &["evaluate", s(&corpus), "--thresholds", "0.025,0.3"]);
    let summary = fs::read_to_string(ev.join("summary.csv")).unwrap();
    let thresholds: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(thresholds, ["0.025000", "0.300000"].repeat(3));

    let cfg = t.path().join("run.toml");
    fs::write(&cfg, "[eval]\nthresholds = [0.07]\n").unwrap();
    let ev2 = t.path().join("eval2");
    ok(&ev2, &["--config", s(&cfg), "evaluate", s(&corpus)]);
    let summary = fs::read_to_string(ev2.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains(",0.070000,"));
}

#[test]
fn outputs_are_deterministic() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        ok(d, &["--seed", "11", "synth", "--kind", "hard", "--count", "4"]);
        ok(&d.join("loc"), &["--seed", "11", "locate", s(d)]);
        ok(&d.join("eval"), &["--seed", "11", "evaluate", s(d)]);
    }
    for f in ["manifest.csv", "hard_0000.pgm", "loc/detections.csv", "eval/items.csv", "eval/summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = t.path().join("c");
    ok(&c, &["--seed", "12", "synth", "--kind", "hard", "--count", "4"]);
    assert_ne!(fs::read(a.join("manifest.csv")).unwrap(), fs::read(c.join("manifest.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let empty = t.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(eyeloc(&t.path().join("o1"), &["locate", s(&empty)]).code, 4);

    let missing = t.path().join("nope");
    assert_eq!(eyeloc(&t.path().join("o2"), &["locate", s(&missing)]).code, 3);
    assert_eq!(eyeloc(&t.path().join("o3"), &["evaluate", s(&missing)]).code, 3);

    let bad = t.path().join("bad.toml");
    fs::write(&bad, "[pipeline]\nbeta = -1.0\n").unwrap();
    assert_eq!(eyeloc(&t.path().join("o4"), &["--config", s(&bad), "locate", s(&empty)]).code, 2);
    fs::write(&bad, "[pipeline]\nno_such_key = 1\n").unwrap();
    let r = eyeloc(&t.path().join("o5"), &["--config", s(&bad), "locate", s(&empty)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("no_such_key"), "{}", r.stderr);
    assert_eq!(eyeloc(&t.path().join("o6"), &["locate", s(&empty), "--pipeline.lambda", "2"]).code, 2);
    assert_eq!(eyeloc(&t.path().join("o7"), &["frobnicate"]).code, 2);

    let garbage = t.path().join("garbage.pgm");
    fs::write(&garbage, b"not an image").unwrap();
    assert_eq!(eyeloc(&t.path().join("o8"), &["locate", s(&garbage)]).code, 3);
}

#[test]
fn sweep_writes_scale_rows() {
    let t = TempDir::new().unwrap();
    let corpus = t.path().join("corpus");
    ok(&corpus, &["synth", "--kind", "clean", "--count", "16"]);
    let out = t.path().join("sweep");
    ok(&out, &["sweep", s(&corpus), "--scales", "1,0.6,0.3"]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scale,wec@0.05,aec@0.05,bec@0.05,valid");
    let wec: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(wec.len(), 3);
    assert!(wec[0] >= wec[2], "{csv}");
    assert_eq!(eyeloc(&out, &["sweep", s(&corpus), "--scales", "1.5"]).code, 2);
}

fn calibrate_and_gaze(t: &Path, mapping: &str, noise: &str, model: &str) -> f64 {
    let data = t.join(format!("data-{mapping}-{noise}"));
    if !data.exists() {
        ok(&data, &["--gaze.grid_side", "4", "synth", "--kind", "calibration", "--mapping", mapping, "--noise", noise]);
    }
    let out = t.join(format!("model-{mapping}-{noise}-{model}"));
    ok(&out, &["--gaze.grid_side", "4", "calibrate", s(&data.join("calibration.csv")), "--model", model]);
    let stdout = ok(&out, &["gaze", s(&out.join("gaze_model.json")), s(&data.join("test.csv"))]);
    let pog = fs::read_to_string(out.join("pog.csv")).unwrap();
    assert_eq!(pog.lines().next().unwrap(), "frame_index,target_x,target_y,pog_x,pog_y,error_px,error_deg");
    mean_error(&stdout)
}

#[test]
fn gaze_calibration_round_trip() {
    let t = TempDir::new().unwrap();
    assert!(calibrate_and_gaze(t.path(), "quadratic", "0", "poly") < 0.05);
    let poly = calibrate_and_gaze(t.path(), "curved", "0", "poly");
    let rbf = calibrate_and_gaze(t.path(), "curved", "0", "rbf");
    assert!(rbf <= poly, "rbf {rbf} poly {poly}");
}

#[test]
fn calibration_with_missing_grid_point_fails() {
    let t = TempDir::new().unwrap();
    let data = t.path().join("data");
    ok(&data, &["synth", "--kind", "calibration", "--count", "2"]);
    let csv = fs::read_to_string(data.join("calibration.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    let rows: Vec<&str> = lines.collect();
    let first_target: Vec<&str> = rows[0].split(',').take(2).collect();
    let kept: Vec<&str> =
        rows.iter().copied().filter(|r| r.split(',').take(2).collect::<Vec<_>>() != first_target).collect();
    assert!(kept.len() < rows.len());
    let cut = t.path().join("cut.csv");
    fs::write(&cut, format!("{header}\n{}\n", kept.join("\n"))).unwrap();
    let r = eyeloc(&t.path().join("m"), &["--gaze.grid_side", "3", "calibrate", s(&cut)]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.to_lowercase().contains("calibration"), "{}", r.stderr);
}

fn track_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn closure_training_and_blink_tracking() {
    let t = TempDir::new().unwrap();
    let crops = t.path().join("crops");
    ok(&crops, &["synth", "--kind", "closure", "--count", "20"]);
    let model_dir = t.path().join("model");
    let stdout =
        ok(&model_dir, &["--closure.folds", "4", "--closure.repeats", "1", "train-closure", s(&crops), "--cv"]);
    assert!(stdout.contains("trained on 80 eye crops"), "{stdout}");
    let svm = model_dir.join("closure.svm");
    assert!(fs::read_to_string(&svm).unwrap().starts_with("eyeloc-svm 1\n"));

    let seq = t.path().join("seq");
    ok(&seq, &["synth", "--kind", "sequence", "--count", "16"]);
    let out = t.path().join("track");
    let stdout = ok(&out, &["track", s(&seq.join("sequence.csv")), "--closure-model", s(&svm)]);
    assert!(stdout.contains("16 frames"), "{stdout}");
    assert!(stdout.contains("rmse raw"), "{stdout}");
    let csv = fs::read_to_string(out.join("track.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "frame,eye,raw_x,raw_y,accepted,kf_x,kf_y,state,corner_x,corner_y");
    let rows = track_rows(&csv);
    assert_eq!(rows.len(), 32);
    // blink frames 8..11 keep a filtered estimate
    for r in &rows {
        assert!(!r[5].is_empty() && !r[6].is_empty(), "missing KF estimate in {r:?}");
    }
    let closed = rows.iter().filter(|r| (8..11).contains(&r[0].parse::<usize>().unwrap()) && r[7] == "closed").count();
    assert!(closed >= 4, "{csv}");
}

#[test]
fn single_frame_tracking_is_detection() {
    let t = TempDir::new().unwrap();
    let seq = t.path().join("seq");
    ok(&seq, &["synth", "--kind", "sequence", "--count", "1"]);
    let out = t.path().join("track");
    ok(&out, &["track", s(&seq.join("sequence.csv"))]);
    let rows = track_rows(&fs::read_to_string(out.join("track.csv")).unwrap());
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!((r[2].as_str(), r[3].as_str()), (r[5].as_str(), r[6].as_str()));
    }
}

#[test]
fn unordered_sequence_is_rejected() {
    let t = TempDir::new().unwrap();
    let seq = t.path().join("seq");
    ok(&seq, &["synth", "--kind", "sequence", "--count", "3"]);
    let path = seq.join("sequence.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(1, 2);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let r = eyeloc(&t.path().join("track"), &["track", s(&path)]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("unordered or missing"), "{}", r.stderr);
}
