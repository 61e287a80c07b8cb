use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mkp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkp"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SOLITON: &str = r#"
n_components = 1
max_time_index = 6
weighted_degree = 6
aux_order = 6
psdo_band = 7
charge_radius = 0
solution.kind = "soliton_n1"
solution.p = "2"
solution.q = "3"
solution.a = "1"
"#;

const VACUUM: &str = r#"
n_components = 2
max_time_index = 3
weighted_degree = 3
aux_order = 3
psdo_band = 4
charge_radius = 1
solution.kind = "vacuum"
"#;

const FROM_FILE: &str = r#"
n_components = 1
max_time_index = 6
weighted_degree = 6
aux_order = 6
psdo_band = 7
charge_radius = 0
solution.kind = "file"
solution.path = "tau.txt"
"#;

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn describe_reports_constant_tau() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "vacuum.toml", VACUUM);
    let tau = dir.path().join("vacuum.txt");
    let out = mkp(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tau.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = mkp(&["describe", tau.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("N=2"), "{text}");
    assert!(text.contains("all charges: 1"), "{text}");
}

#[test]
fn truncated_file_gives_located_parse_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "soliton.toml", SOLITON);
    let tau = dir.path().join("tau.txt");
    assert_eq!(
        code(&mkp(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            tau.to_str().unwrap()
        ])),
        0
    );
    let text = std::fs::read_to_string(&tau).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = write(dir.path(), "cut.txt", &lines[..lines.len() - 1].join("\n"));
    let out = mkp(&["describe", cut.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    let prefix = format!("{}:", cut.display());
    assert!(err.starts_with(&prefix), "{err}");
    let rest: Vec<&str> = err[prefix.len()..].splitn(3, ':').collect();
    assert!(
        rest[0].parse::<usize>().is_ok() && rest[1].parse::<usize>().is_ok(),
        "{err}"
    );
    assert!(err.contains("parse error"), "{err}");
}

#[test]
fn solved_file_verifies_like_the_direct_build() {
    let dir = TempDir::new().unwrap();
    let direct = write(dir.path(), "soliton.toml", SOLITON);
    let tau = dir.path().join("tau.txt");
    assert_eq!(
        code(&mkp(&[
            "solve",
            "--config",
            direct.to_str().unwrap(),
            "--out",
            tau.to_str().unwrap()
        ])),
        0
    );
    let from_file = write(dir.path(), "file.toml", FROM_FILE);

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        code(&mkp(&[
            "verify",
            "--config",
            direct.to_str().unwrap(),
            "--out",
            a.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&mkp(&[
            "verify",
            "--config",
            from_file.to_str().unwrap(),
            "--out",
            b.to_str().unwrap()
        ])),
        0
    );
    let (a, b) = (report(&a), report(&b));
    assert_eq!(a["records"], b["records"]);
    assert_eq!(a["summary"], b["summary"]);
    assert!(dir.path().join("a.txt").exists());
}

#[test]
fn exit_codes_follow_the_outcome() {
    let dir = TempDir::new().unwrap();
    let narrow = write(
        dir.path(),
        "narrow.toml",
        &SOLITON.replace("psdo_band = 7", "psdo_band = 2"),
    );
    let out = mkp(&["verify", "--config", narrow.to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let vacuum = write(dir.path(), "vacuum.toml", VACUUM);
    assert_eq!(
        code(&mkp(&["verify", "--config", vacuum.to_str().unwrap()])),
        1
    );

    let unknown = write(
        dir.path(),
        "unknown.toml",
        &format!("{SOLITON}colour = 3\n"),
    );
    assert_eq!(
        code(&mkp(&["verify", "--config", unknown.to_str().unwrap()])),
        2
    );

    let missing = dir.path().join("missing.toml");
    assert_eq!(
        code(&mkp(&["verify", "--config", missing.to_str().unwrap()])),
        2
    );
}
