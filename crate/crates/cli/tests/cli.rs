use std::path::Path;
use std::process::{Command, Output};

fn avfbel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avfbel")).args(args).output().expect("spawn avfbel")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, "synthetic_n = 40\nepochs = 3\nplane_size = 8\nbel_epochs = 30\n").unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_then_ablate_on_saved_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    let s = avfbel(&["synth", "--config", &config, "--seed", "3", "--out", data.to_str().unwrap()]);
    assert!(s.status.success(), "{}", stderr(&s));
    assert!(data.join("samples.csv").exists() && data.join("pairs.csv").exists());

    let args = ["ablate", "--config", &config, "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let a = avfbel(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    let table = String::from_utf8_lossy(&a.stdout);
    for v in ["BEL-m", "BEL-a", "M-BEL", "A-BEL", "AVF-BEL"] {
        assert!(table.contains(v), "{table}");
    }
    for f in ["results.json", "ablation.csv", "config.toml", "spike_raster.csv", "epp_comparison_avf.csv", "plots/heatmap_avf.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn train_eval_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let t = avfbel(&["train", "--config", &config, "--variant", "M-BEL", "--seed", "5", "--out", out]);
    assert!(t.status.success(), "{}", stderr(&t));
    let e = avfbel(&["eval", "--config", &config, "--variant", "m_bel", "--seed", "5", "--out", out]);
    assert!(e.status.success(), "{}", stderr(&e));
    let trained = std::fs::read_to_string(Path::new(out).join("m_bel/report.json")).unwrap();
    let evaluated = std::fs::read_to_string(Path::new(out).join("m_bel/eval_report.json")).unwrap();
    assert_eq!(trained, evaluated);
    let p = avfbel(&["plots", "--out", out]);
    assert!(p.status.success(), "{}", stderr(&p));
    assert!(Path::new(out).join("plots/epp_comparison_m_bel.svg").exists());
}

#[test]
fn bad_input_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let v = avfbel(&["train", "--variant", "BEL-z", "--out", out]);
    assert!(!v.status.success());
    assert!(stderr(&v).contains("BEL-z"), "{}", stderr(&v));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let c = avfbel(&["ablate", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert!(!c.status.success());
    assert!(stderr(&c).contains("no_such_key"), "{}", stderr(&c));

    let d = avfbel(&["ablate", "--data", dir.path().join("missing").to_str().unwrap(), "--out", out]);
    assert!(!d.status.success());
    assert!(stderr(&d).starts_with("error:"));

    let e = avfbel(&["eval", "--variant", "AVF-BEL", "--out", out]);
    assert!(!e.status.success());
}
