use labcli::config::ExperimentConfig;
use mflab::Error;
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs()).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn labcli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_labcli")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("labcli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn shipped_configs_round_trip_and_build() {
    assert_eq!(shipped().len(), 4);
    for p in shipped() {
        let cfg = ExperimentConfig::load(&p).unwrap();
        let text = cfg.to_toml();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, cfg, "{}", p.display());
        assert_eq!(again.to_toml(), text);
        let lab = cfg.build().unwrap();
        let g = lab.green().unwrap();
        lab.blowup(&cfg.target, g.as_ref()).unwrap();
    }
}

#[test]
fn missing_v_names_the_field() {
    let text = "[model]\nkind = \"flat\"\n\n[singular]\npoints = []\n\n[target]\nr0 = 0.05\n";
    match ExperimentConfig::parse(text) {
        Err(Error::Parse { line, message, .. }) => {
            assert!(message.contains("`v`"), "{message}");
            assert_eq!(line, 4);
        }
        other => panic!("{other:?}"),
    }
    let dir = scratch("nov");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("nov.toml");
    std::fs::write(&path, text).unwrap();
    let out = labcli(&["--config", path.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`v`"));
}

#[test]
fn unknown_fields_and_integer_orders_are_rejected() {
    let base = std::fs::read_to_string(configs().join("boundary-6pi.toml")).unwrap();
    assert!(matches!(ExperimentConfig::parse(&base.replace("r0 = 0.1", "r0 = 0.1\nradius = 2")), Err(Error::Parse { .. })));
    let integer = ExperimentConfig::parse(&base.replace("gamma = 0.5", "gamma = 1.0")).unwrap();
    assert!(integer.build().is_err());
    let wrong_m = ExperimentConfig::parse(&base.replace("q1 = [0]", "m = 1\nq1 = [0]")).unwrap();
    let lab = wrong_m.build().unwrap();
    let g = lab.green().unwrap();
    assert!(matches!(lab.blowup(&wrong_m.target, g.as_ref()), Err(Error::Validation(_))));
}

#[test]
fn resonance_lists_six_pi() {
    let dir = scratch("res");
    let cfg = configs().join("singular-interior.toml");
    let out = labcli(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "resonance", "--cap", "40pi"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("resonance.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert!(values.iter().any(|v| (v - 6.0).abs() < 1e-9));
    assert!((values.last().unwrap() - 40.0).abs() < 1e-9);
}

#[test]
fn sweep_is_deterministic_and_passes() {
    let cfg = configs().join("disk-regular.toml");
    let mut csvs = Vec::new();
    for k in 0..2 {
        let dir = scratch(&format!("sweep{k}"));
        let out = labcli(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--jobs", "2", "--svg", "sweep"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        assert!(dir.join("gap.svg").exists());
        csvs.push(std::fs::read(dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn green_check_meets_oracle() {
    let dir = scratch("green");
    let cfg = configs().join("boundary-6pi.toml");
    let out = labcli(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "green-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = labcli(&["sweep"]);
    assert_eq!(out.status.code(), Some(2));
}
