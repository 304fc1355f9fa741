use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use wallsim_core::lattice::{from_simple, to_simple, InterlacingState, SimpleConfiguration};

fn wallsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wallsim")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is one JSON document")
}

#[test]
fn q_outside_unit_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "q = 1.5\nK = 4\nsteps = 10\nreplicas = 100\nseed = 42\n").unwrap();
    let o = wallsim(&["simulate", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(0,1)"), "{}", stderr(&o));
}

#[test]
fn minimal_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"q":0.5,"K":4,"steps":10,"replicas":100,"seed":42}"#).unwrap();
    let o = wallsim(&["simulate", "--config", "run.json", "--out", "traj.jsonl"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("traj.jsonl")).unwrap();
    // header plus 11 integer-time states per replica
    assert_eq!(text.lines().count(), 1 + 100 * 11);
    let head: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(head["header"]["seed"], 42);
    assert_eq!(head["header"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("typo.toml"), "q = 0.5\nlevles = 4\n").unwrap();
    let o = wallsim(&["kernel", "--config", "typo.toml", "--T", "2", "--points", "(0,1)"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("levles"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("k.toml"), "q = 0.5\n").unwrap();
    let o = wallsim(&["kernel", "--config", "k.toml", "--q", "0.2", "--T", "1", "--points", "(0,1)"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json_report(&o);
    assert_eq!(doc["header"]["effective"]["config"]["q"], 0.2);
    assert_eq!(doc["report"]["q"], 0.2);
    // K_1((0,1),(0,1)) is the probability that the level-1 particle sits at 0 after one step: 1 - q
    let k = doc["report"]["entries"][0]["re"].as_f64().unwrap();
    assert!((k - 0.8).abs() < 1e-10, "{k}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--q", "1/3", "--K", "5", "--steps", "7", "--replicas", "9", "--seed", "11", "--record", "half"];
    let a = wallsim(&[&args[..], &["--out", "a.jsonl"]].concat(), dir.path());
    let b = wallsim(&[&args[..], &["--out", "b.jsonl", "--threads", "1"]].concat(), dir.path());
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
    let c = wallsim(&args, dir.path());
    assert_eq!(c.stdout, a);
}

#[test]
fn keyidentity_all_residuals_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallsim(&["verify", "keyidentity", "--all"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json_report(&o);
    let checks = doc["report"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 16);
    for c in checks {
        assert_eq!(c["max_residual"], "0", "{c}");
    }
}

#[test]
fn intertwining_residual_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallsim(&["verify", "intertwining", "--k", "3", "--M", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = json_report(&o);
    let c = &doc["report"]["checks"][0];
    assert!(c["max_residual_f64"].as_f64().unwrap() <= 1e-10);
    assert_eq!(c["passed"], true);
}

#[test]
fn csv_output_carries_header_comments() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallsim(&["kernel", "--q", "0.5", "--T", "2", "--points", "(0,1);(1,2)", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# wallsim kernel config_hash="));
    assert!(lines[1].starts_with("# effective="));
    assert_eq!(lines[2], "i,j,p,p2,re,im,err_est");
    assert_eq!(lines.len(), 3 + 4);
}

#[test]
fn unsupported_format_is_an_invalid_argument() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallsim(&["simulate", "--q", "0.5", "--K", "2", "--steps", "1", "--replicas", "1", "--seed", "1", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replays_a_draw_table() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/worked_step_draws.json");
    std::fs::copy(fixture, dir.path().join("draws.json")).unwrap();
    let start = from_simple(&SimpleConfiguration { t_half: 0, levels: vec![vec![1], vec![3], vec![4, 2], vec![4, 3]] }).unwrap();
    std::fs::write(dir.path().join("start.json"), start.to_json_line()).unwrap();
    let o = wallsim(&["simulate", "--draws", "draws.json", "--start", "start.json", "--record", "half"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let states: Vec<InterlacingState> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    let simple: Vec<Vec<Vec<u32>>> = states.iter().map(|s| to_simple(s).levels).collect();
    assert_eq!(
        simple,
        vec![
            vec![vec![1], vec![3], vec![4, 2], vec![4, 3]],
            vec![vec![1], vec![1], vec![4, 1], vec![4, 2]],
            vec![vec![3], vec![4], vec![5, 0], vec![6, 3]],
        ]
    );
}

#[test]
fn pearcey_table_is_csv_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let o = wallsim(&["asymptotics", "pearcey", "--points", "0.5,0.2,0.5", "--N", "50,100"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("N,det_finite,det_limit,abs_err"));
    assert_eq!(rows.len(), 3);
    let bad = wallsim(&["asymptotics", "pearcey", "--points", "-1,0,0.5"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}
