use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use composite_bo::experiment::{campaign_starts, locate_key, prepare, run_parity, CampaignIndex, Overrides};
use serde_json::{json, Value};
use tempfile::TempDir;

fn cbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbo"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn small(benchmark: &str, iterations: usize) -> Value {
    json!({
        "schema": "composite-bo/experiment@1",
        "benchmark": benchmark,
        "iterations": iterations,
        "seed": 3,
        "bo": { "search": { "restarts": 6 }, "fit_restarts": 2, "mc_samples": 64 },
    })
}

fn csvs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for v in ["sbo", "mcbo", "bois"] {
        let d = dir.join("runs").join(v);
        if let Ok(entries) = std::fs::read_dir(&d) {
            for e in entries {
                let p = e.unwrap().path();
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                if name.ends_with(".csv") && !name.ends_with(".timing.csv") {
                    out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
                }
            }
        }
    }
    out.sort();
    out
}

#[test]
fn bench_list_names_every_benchmark() {
    let o = cbo(&["bench", "list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["flowsheet", "sphere-composite", "penalty-quadratic", "exp-composite", "linear-composite"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn bench_eval_prints_y_and_f() {
    let o = cbo(&["bench", "eval", "sphere-composite", "--at", "0.5,-0.5,0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["y"], json!([0.25, 0.25, 0.0]));
    assert_eq!(v["f"], json!(0.5));
}

#[test]
fn bench_eval_rejects_bad_points_and_names() {
    assert_eq!(code(&cbo(&["bench", "eval", "sphere-composite", "--at", "2,0,0"])), 2);
    assert_eq!(code(&cbo(&["bench", "eval", "sphere-composite", "--at", "0,0"])), 2);
    assert_eq!(code(&cbo(&["bench", "eval", "no-such", "--at", "0"])), 2);
}

#[test]
fn invalid_config_is_rejected_with_its_line() {
    let tmp = TempDir::new().unwrap();
    let mut v = small("penalty-quadratic", 1);
    v["bo"]["mc_samples"] = json!(1);
    let path = write_config(tmp.path(), "bad.json", &v);
    let o = cbo(&["run", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let text = std::fs::read_to_string(&path).unwrap();
    let line = locate_key(&text, "bo.mc_samples");
    assert_eq!(text.lines().nth(line - 1).unwrap().trim_start().split(':').next(), Some("\"mc_samples\""));
    let err = stderr(&o);
    assert!(err.contains(&format!("bad.json:{line}: key 'bo.mc_samples'")), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn type_errors_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let mut v = small("penalty-quadratic", 1);
    v["iterations"] = json!("ten");
    let path = write_config(tmp.path(), "typed.json", &v);
    let o = cbo(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("key 'iterations'"), "{}", stderr(&o));

    let mut v = small("penalty-quadratic", 1);
    v["campaign"] = json!({ "mode": "grid", "levels": 1 });
    let path = write_config(tmp.path(), "grid.json", &v);
    let o = cbo(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("key 'campaign'"), "{}", stderr(&o));
}

#[test]
fn unknown_variant_flag_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "c.json", &small("penalty-quadratic", 0));
    let o = cbo(&["run", "--config", path.to_str().unwrap(), "--variant", "sbo,fast"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("key 'variants'"), "{}", stderr(&o));
    assert!(!stderr(&o).contains('\x1b'));
}

#[test]
fn minimal_run_writes_one_single_record_trace() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), "c.json", &small("flowsheet", 0));
    let out = tmp.path().join("out");
    let o = cbo(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--variant", "bois"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files = csvs(&out);
    assert_eq!(files.len(), 1);
    let text = String::from_utf8(files[0].1.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("iter,x_1,x_2,x_3,x_4,x_5,y_1,"));
    assert!(lines[0].ends_with("y_16,f_obs,m_f,sigma_f,af,wallclock_ms,best_f"));
    let index = CampaignIndex::load(&out.join("campaign.json")).unwrap();
    assert_eq!(index.cells.len(), 1);
    assert!(index.all_completed());
    assert!(out.join("runs/bois/start_000.json").exists());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let mut v = small("penalty-quadratic", 3);
    v["campaign"] = json!({ "mode": "random", "n": 2 });
    let path = write_config(tmp.path(), "c.json", &v);
    let run = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let o = cbo(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallel", threads]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        csvs(&out)
    };
    let (a, b, c) = (run("a", "1"), run("b", "1"), run("c", "3"));
    assert_eq!(a.len(), 6);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn report_aggregates_and_flags_missing_traces() {
    let tmp = TempDir::new().unwrap();
    let mut v = small("sphere-composite", 2);
    v["campaign"] = json!({ "mode": "random", "n": 2 });
    let path = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("out");
    assert_eq!(code(&cbo(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let index = out.join("campaign.json");

    let o = cbo(&["report", index.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let agg = std::fs::read_to_string(out.join("report/aggregate.csv")).unwrap();
    assert_eq!(agg.lines().next().unwrap(), "variant,iter,runs,mean,median,p10,p90");
    // 3 variants x 3 records each
    assert_eq!(agg.lines().count(), 1 + 9);
    assert!(out.join("report/long.csv").exists());
    assert!(out.join("report/report.json").exists());

    std::fs::remove_file(out.join("runs/mcbo/start_001.csv")).unwrap();
    let o = cbo(&["report", index.to_str().unwrap(), "--out", tmp.path().join("r2").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("start_001.csv"), "{}", stderr(&o));
}

#[test]
fn failing_cells_exit_one_and_keep_the_index() {
    let tmp = TempDir::new().unwrap();
    let bundled: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/flowsheet.json")).unwrap(),
    )
    .unwrap();
    let mut broken = bundled.clone();
    broken["params"]["solver"]["max_iterations"] = json!(1);
    std::fs::write(tmp.path().join("broken.json"), broken.to_string()).unwrap();
    let mut v = small("flowsheet", 1);
    v["flowsheet_file"] = json!("broken.json");
    let path = write_config(tmp.path(), "c.json", &v);
    let out = tmp.path().join("out");
    let o = cbo(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--variant", "sbo,bois"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let index = CampaignIndex::load(&out.join("campaign.json")).unwrap();
    assert_eq!(index.cells.len(), 2);
    assert!(!index.all_completed());
    assert!(index.cells.iter().all(|c| c.error.is_some()));
}

#[test]
fn paper_grid_campaign_has_243_starts_per_variant() {
    let v = json!({
        "schema": "composite-bo/experiment@1",
        "benchmark": "flowsheet",
        "iterations": 100,
        "campaign": { "mode": "grid", "levels": 3 },
    });
    let exp = prepare(&v.to_string(), "grid.json", Path::new("."), &Overrides::default()).unwrap();
    let starts = campaign_starts(&exp).unwrap();
    assert_eq!(starts.len(), 243);
    assert_eq!(starts.len() * exp.config.variants.len(), 729);
    assert_eq!(starts[0].0, exp.benchmark.domain.lower());
    assert_ne!(starts[0].1, starts[1].1);
}

#[test]
fn parity_command_writes_consistent_rows() {
    let tmp = TempDir::new().unwrap();
    let mut v = small("linear-composite", 0);
    v["parity"] = json!({ "train_points": 12, "query_points": 6, "samples": [10, 100, 1000] });
    let path = write_config(tmp.path(), "p.json", &v);
    let out = tmp.path().join("parity");
    let o = cbo(&["parity", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["parity.csv", "parity.json", "bank.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let exp = prepare(&v.to_string(), "p.json", tmp.path(), &Overrides::default()).unwrap();
    let report = run_parity(&exp, &tmp.path().join("lib")).unwrap();
    assert_eq!(report.rows.len(), 6);
    for row in &report.rows {
        assert_eq!(row.mc.len(), 3);
        for cell in &row.mc {
            assert!((cell.se - cell.std / (cell.samples as f64).sqrt()).abs() <= 1e-15 * cell.std.max(1.0));
        }
    }
    let json: Value = serde_json::from_str(&std::fs::read_to_string(out.join("parity.json")).unwrap()).unwrap();
    assert_eq!(json["query_points"], json!(6));
}

#[test]
fn bundled_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let path = e.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        prepare(&text, &path.display().to_string(), &dir, &Overrides::default())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}

#[test]
fn readme_config_validates() {
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let block = readme.split("```json\n").nth(1).unwrap().split("```").next().unwrap();
    let exp = prepare(block, "README.md", Path::new("."), &Overrides::default()).unwrap();
    assert_eq!(exp.config.iterations, 60);
}
