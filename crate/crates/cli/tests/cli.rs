use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scenesynth::manifest;

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenesynth"))
        .current_dir(cwd)
        .args(args)
        .env_remove("SCENESYNTH_CONFIG")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn generate_twice_gives_the_same_manifest_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["generate", "--recipe", "A", "--total", "40", "--seed", "7", "--out", "d1"];
    let first = stdout_json(&run(tmp.path(), &args));
    let second = stdout_json(&run(tmp.path(), &args));
    assert_eq!(first["manifest_sha256"], second["manifest_sha256"]);
    assert_eq!(first["total"], 40);

    let stats = stdout_json(&run(tmp.path(), &["stats", "d1"]));
    for c in stats["per_class"].as_array().unwrap() {
        assert_eq!(c["scenes"], 5);
    }
    assert_eq!(run(tmp.path(), &["validate", "d1"]).status.code(), Some(0));

    let dsc = stdout_json(&run(tmp.path(), &["dsc", "--pred", "d1/masks", "--gt", "d1/masks", "--per-image"]));
    assert_eq!(dsc["mean"], 1.0);
    assert_eq!(dsc["per_image"].as_array().unwrap().len(), 40);
}

#[test]
fn validate_exits_two_on_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    stdout_json(&run(tmp.path(), &["generate", "--total", "4", "--out", "d"]));
    fs::remove_file(tmp.path().join("d/masks/000002.png")).unwrap();
    let o = run(tmp.path(), &["validate", "d"]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["violations"][0]["kind"], "missing_file");
    assert_eq!(report["violations"][0]["index"], 2);
    assert_eq!(run(tmp.path(), &["stats", "d"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["validate", "nowhere"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["generate", "--bogus"],
        vec!["generate", "--total", "3"],
        vec!["generate", "--total", "0", "--out", "x"],
        vec!["generate", "--recipe", "Z", "--out", "x"],
        vec!["preview", "--n", "0", "--out", "s.png"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(tmp.path(), &args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_drives_generation_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["demo-assets", "--out", "kit", "--seeds-per-class", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = tmp.path().join("kit/scenesynth.toml");
    let mut text = fs::read_to_string(&cfg).unwrap();
    text = text.replace("name = \"A\"", "name = \"C\"\ntotal = 10\nmaster_seed = 5");
    fs::write(&cfg, text).unwrap();

    // the config's [output].dir resolves next to the config file
    let summary = stdout_json(&run(tmp.path(), &["generate", "--config", "kit/scenesynth.toml", "--total", "20"]));
    assert_eq!((summary["singles"].as_u64(), summary["doubles"].as_u64()), (Some(16), Some(4)));
    let m = manifest::read_manifest(&tmp.path().join("kit/dataset")).unwrap();
    assert_eq!(m.header.master_seed, 5);
    assert_eq!(m.header.recipe.total, 20);
    assert_eq!(m.header.foreground_assets.len(), 24);

    // recipe C asks for three seeds per class
    let o = run(tmp.path(), &["generate", "--config", "kit/scenesynth.toml", "--seeds-per-class", "4", "--out", "x"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("needs 4"));

    // same config through the environment variable
    let o = Command::new(env!("CARGO_BIN_EXE_scenesynth"))
        .current_dir(tmp.path())
        .args(["generate", "--total", "20", "--out", "via_env"])
        .env("SCENESYNTH_CONFIG", "kit/scenesynth.toml")
        .output()
        .unwrap();
    let via_env = stdout_json(&o);
    assert_eq!(via_env["manifest_sha256"], summary["manifest_sha256"]);
}

#[test]
fn missing_asset_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(tmp.path(), &["demo-assets", "--out", "kit", "--seeds-per-class", "1"])
        .status
        .success());
    let victim = tmp.path().join("kit/fg/clip_applier_0.png");
    fs::remove_file(&victim).unwrap();
    let o = run(tmp.path(), &["generate", "--config", "kit/scenesynth.toml", "--out", "d"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("clip_applier_0.png"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[recipe]\nname = \"A\"\ntotl = 5\n").unwrap();
    let o = run(tmp.path(), &["generate", "--config", "c.toml", "--out", "d"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("totl"));
}

#[test]
fn preview_sheet_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["preview", "--recipe", "C", "--total", "80", "--n", "4", "--seed", "3", "--out", out];
    let summary = stdout_json(&run(tmp.path(), &args("a.png")));
    assert_eq!(summary["tiles"], 8);
    stdout_json(&run(tmp.path(), &args("b.png")));
    let (a, b) = (tmp.path().join("a.png"), tmp.path().join("b.png"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let sheet = manifest::read_png(&a).unwrap();
    assert_eq!(sheet.dims(), (2 * 224, 4 * 224));
}

#[test]
fn prefix_flag_reuses_a_smaller_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    stdout_json(&run(tmp.path(), &["generate", "--recipe", "A", "--total", "16", "--seed", "2", "--out", "a"]));
    let b = stdout_json(&run(
        tmp.path(),
        &["generate", "--recipe", "B", "--total", "24", "--seed", "2", "--out", "b", "--prefix-from", "a"],
    ));
    assert_eq!(b["imported"], 16);
    let fresh = stdout_json(&run(
        tmp.path(),
        &["generate", "--recipe", "B", "--total", "24", "--seed", "2", "--out", "fresh"],
    ));
    assert_eq!(b["manifest_sha256"], fresh["manifest_sha256"]);
}
