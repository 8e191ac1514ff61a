use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Copy of a shipped config at resolution 8 with a small sweep.
fn small_config(dir: &Path, name: &str) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    v["resolution"] = 8.into();
    v["mesh_levels"] = serde_json::json!([8]);
    v["sweep"]["pairs"] = 2.into();
    v["pole_grids"]["points"] = 1.into();
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn run(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calderon"))
        .args(args)
        .env("CALDERON_OUTPUT_ROOT", root)
        .env_remove("RUST_BACKTRACE")
        .output()
        .unwrap()
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn single_shot_commands_write_manifests_under_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "two_layer.json");
    let cfg = cfg.to_str().unwrap();
    let root = tmp.path().join("out");
    let v = record(&run(&root, &["validate", cfg]));
    assert_eq!(v["apriori_first"]["visibility"]["passed"], true);
    record(&run(&root, &["solve", cfg]));
    let g = record(&run(&root, &["green", cfg, "--pole", "0.49,0.51,-0.4"]));
    assert!(g["boundary_max"].as_f64().unwrap() <= 1e-9);
    let d = record(&run(&root, &["dtn-norm", cfg]));
    assert!(d["epsilon"].as_f64().unwrap() > 0.0);
    record(&run(&root, &["misfit", cfg]));
    record(&run(&root, &["probe", cfg, "--interface", "1", "--ladder", "0.1875,0.09375"]));
    for (dir, file) in [
        ("solve", "solve_first.bin"),
        ("green", "green_regular.json"),
        ("dtn-norm", "dtn_second.bin"),
        ("misfit", "s0.csv"),
        ("probe", "peeling.csv"),
    ] {
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(root.join(dir).join("manifest.json")).unwrap()).unwrap();
        let files: Vec<&str> =
            manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
        assert!(files.contains(&file) && files.contains(&"record.json"), "{dir}: {files:?}");
    }
}

#[test]
fn sweeps_are_reproducible_and_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "sampled.json");
    let cfg = cfg.to_str().unwrap();
    let csv = |root: &Path, seed: &str| {
        let out = run(root, &["sweep", cfg, "--mode", "lipschitz", "--seed", seed]);
        record(&out);
        std::fs::read(root.join("sweep-lipschitz").join("lipschitz.csv")).unwrap()
    };
    let a = csv(&tmp.path().join("a"), "5");
    let b = csv(&tmp.path().join("b"), "5");
    let c = csv(&tmp.path().join("c"), "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("mode,kind,level,pair,t,r,e,epsilon,j,"));
    record(&run(&tmp.path().join("d"), &["sweep", cfg, "--mode", "three-sphere"]));
}

#[test]
fn bad_input_fails_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("two_layer.json")).unwrap()).unwrap();
    v["pair"]["first"]["gammas"][1] = v["pair"]["first"]["gammas"][0].clone();
    let p = tmp.path().join("invisible.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let out = run(tmp.path(), &["validate", p.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Visibility condition"));
    let cfg = configs().join("two_layer.json");
    let out = run(tmp.path(), &["green", cfg.to_str().unwrap(), "--pole", "0.5,0.5"]);
    assert!(!out.status.success());
    let out = run(tmp.path(), &["sweep", cfg.to_str().unwrap(), "--mode", "bogus"]);
    assert!(!out.status.success());
}
