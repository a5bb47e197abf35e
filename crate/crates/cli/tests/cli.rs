use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn conley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conley"))
        .args(args)
        .env_remove("CONLEY_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conley-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn examples_list_and_show() {
    let o = conley(&["examples"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8_lossy(&o.stdout).lines().collect::<Vec<_>>(),
        ["attracting", "repelling", "saddle"]
    );
    let o = conley(&["examples", "saddle"]);
    let c: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c["field"].as_array().unwrap().len(), 3);
    assert_eq!(code(&conley(&["examples", "nope"])), 4);
}

#[test]
fn run_save_verify() {
    let dir = scratch("run");
    let bundle = dir.join("r.bundle");
    let layers = dir.join("r.layers");
    let cfg = dir.join("r.json");
    let o = conley(&["examples", "repelling"]);
    std::fs::write(&cfg, &o.stdout).unwrap();
    let o = conley(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--scale",
        "3",
        "--h",
        "0.125",
        "--save",
        bundle.to_str().unwrap(),
        "--dump-cubes",
        layers.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["leray"]["invariant_factors"]["1"][0], "x - 1");
    assert_eq!(r["config"]["scale"], 3);
    assert!(std::fs::read_to_string(&layers).unwrap().starts_with("# dim 2"));

    let o = conley(&["verify", bundle.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));

    let text = std::fs::read_to_string(&bundle).unwrap();
    std::fs::write(&bundle, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&conley(&["verify", bundle.to_str().unwrap()])), 3);
    std::fs::write(&bundle, text.replacen(" v1 ", " v9 ", 1)).unwrap();
    let o = conley(&["verify", bundle.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("conley run --save"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&conley(&["run", "--builtin", "nope"])), 4);
    assert_eq!(
        code(&conley(&["run", "--builtin", "saddle", "--coefficients", "Z/6"])),
        4
    );
    assert_eq!(code(&conley(&["run", "--unknown-flag"])), 4);
    assert_eq!(code(&conley(&["run"])), 4);
    let fast = r#"[{"op":"mul","args":[-8.0,"x0",{"op":"ln2"}]},1.0]"#;
    let base = [
        "run",
        "--builtin",
        "attracting",
        "--scale",
        "2",
        "--h",
        "0.25",
        "--field",
        fast,
    ];
    assert_eq!(code(&conley(&base)), 2);
    let o = conley(&[&base[..], &["--allow-partial", "--format", "text"]].concat());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PARTIAL"));
}

#[test]
fn homology_and_leray_modes() {
    let dir = scratch("modes");
    let pair = dir.join("pair.json");
    std::fs::write(
        &pair,
        r#"{"dim":1,"scale":1,"angular_axis":null,"N":[[[0],1],[[0],0],[[1],0]],"L":[[[0],0],[[1],0]]}"#,
    )
    .unwrap();
    let o = conley(&["homology", pair.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(h["dims"], serde_json::json!({"1": 1}));

    let m = dir.join("m.json");
    std::fs::write(
        &m,
        r#"[{"degree":0,"rows":2,"cols":2,"entries":[[0,0,"2"],[1,0,"1"]]}]"#,
    )
    .unwrap();
    let o = conley(&["leray", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let l: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(l["leray"]["reduced_dims"]["0"], 1);
    assert_eq!(l["leray"]["invariant_factors"]["0"][0], "x - 2");
    assert_eq!(l["lefschetz"][0], "2");
    let o = conley(&["leray", m.to_str().unwrap(), "--field", "Z/2"]);
    let l: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(l["lefschetz"].is_null());
}
