use std::fs;
use std::process::{Command, Output};

fn b2x(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_b2x"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_then_detect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("frames.c64");
    let iq = iq.to_str().unwrap();
    let o = b2x(&["generate", "--seed", "5", "--out", iq, "--count", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = b2x(&["detect", iq]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3, "{lines:?}");
    for (i, l) in lines.iter().enumerate() {
        assert!(l.starts_with(&format!("frame={i} ")), "{l}");
    }
    assert!(stderr(&o).contains("3 bootstrap(s) detected"));
}

#[test]
fn single_frame_decodes_to_sent_bits() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("one.c64");
    let iq = iq.to_str().unwrap();
    let o = b2x(&["generate", "--seed", "9", "--out", iq, "--at-snr-db", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = b2x(&["detect", iq]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    let line = err
        .lines()
        .find(|l| l.starts_with("first frame:"))
        .expect("bits line");
    let words: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(words[3], words[5], "{line}");
}

#[test]
fn multiplex_capture_detects_requested_part() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("mux.c64");
    let iq = iq.to_str().unwrap();
    let o = b2x(&[
        "generate",
        "--variant",
        "scaled-467",
        "--path",
        "multiplex",
        "--seed",
        "2",
        "--out",
        iq,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = b2x(&["detect", iq, "--variant", "scaled-467"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1, "{}", stdout(&o));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "frames = 7\nseed = 42\nsnr_db = [inf]\n").unwrap();
    let manifest = dir.path().join("run.manifest");
    let o = b2x(&[
        "sweep",
        "--frames",
        "3",
        "--config",
        cfg.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = fs::read_to_string(&manifest).unwrap();
    assert!(m.contains("frames=7\n") && m.contains("seed=42\n"), "{m}");
    let csv = stdout(&o);
    assert!(csv.lines().nth(1).unwrap().starts_with("inf,7,0,"), "{csv}");
}

#[test]
fn bad_config_exits_with_two() {
    let o = b2x(&["sweep", "--frames", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "frames = \"many\"\n").unwrap();
    let o = b2x(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = b2x(&["sweep", "--profile", "no-such-profile"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unbracketed_search_exits_with_three() {
    let o = b2x(&[
        "required-snr",
        "--snr-lo",
        "20",
        "--snr-hi",
        "30",
        "--frames",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn sweep_csv_is_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "4", "8"] {
        let csv = dir.path().join(format!("w{w}.csv"));
        let o = b2x(&[
            "sweep",
            "--snr-db=-11,-9",
            "--frames",
            "40",
            "--seed",
            "3",
            "--workers",
            w,
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn calibrate_fa_reports_thresholds() {
    let o = b2x(&[
        "calibrate-fa",
        "--trials",
        "1000",
        "--window",
        "2000",
        "--pfa",
        "0.01,0.1",
        "--workers",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "window,pfa,threshold,exceed,trials,rate_lo,rate_hi"
    );
    assert_eq!(lines.len(), 3);
    let thr: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(thr[0] >= thr[1] && thr[1] > 0.0, "{thr:?}");
}
