//! Helpers shared by the CLI, service and acceptance tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tracelens")
}

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/scenarios")
}

pub fn scenario(name: &str) -> PathBuf {
    scenarios_dir().join(format!("{name}.json"))
}

pub fn templates_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/templates.json")
}

/// Runs the binary with `TRACELENS_TEMPLATES` cleared unless `env` sets it.
pub fn tracelens(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("TRACELENS_TEMPLATES");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Panics with every schema error when `instance` does not conform.
pub fn assert_conforms(validator: &jsonschema::Validator, instance: &Value, what: &str) {
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{what}: {errors:?}");
}

/// Writes the default-chain export of every fixture scenario plus the pages
/// file into `dir` through the binary, the way a deployment would.
pub fn populate_export_dir(dir: &Path) {
    let templates = templates_file();
    let env = [("TRACELENS_TEMPLATES", templates.as_path())];
    let mut names: Vec<String> = std::fs::read_dir(scenarios_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in &names {
        let out = dir.join(format!("{name}.json"));
        let res = tracelens(
            &[
                "explain",
                "--trace",
                scenario(name).to_str().unwrap(),
                "--json",
                "--out",
                out.to_str().unwrap(),
            ],
            &env,
        );
        assert!(res.status.success(), "{name}: {}", stderr(&res));
    }
    let res = tracelens(
        &[
            "pages",
            "--scenarios",
            scenarios_dir().to_str().unwrap(),
            "--out",
            dir.join("pages.json").to_str().unwrap(),
        ],
        &env,
    );
    assert!(res.status.success(), "{}", stderr(&res));
}
