use std::fs;
use std::path::Path;

use regxplain::config::{Overrides, RunConfig, RunConfigFile};
use regxplain::pipeline::Pipeline;
use regxplain::report::{read_records, read_two_column};

const CONFIG: &str = r#"
[dataset]
name = "ba-motif-counting"
n_graphs = 30
pad_to = 40
base_size_range = [8, 14]
motif_count_range = [1, 4]

[gnn]
epochs = 5

[explainer]
epochs = 2
pg_hidden = 8

[explainer.per_kind.gnnexplainer]
epochs = 3

[eval]
seeds = [0, 1]
explainers = ["grad", "gnnexplainer", "pgexplainer", "regexplainer"]
sweep_grid = [0.1, 1.0]
"#;

fn pipeline(out: &Path, force: bool) -> Pipeline {
    let file: RunConfigFile = toml::from_str(CONFIG).unwrap();
    let ov = Overrides {
        out: Some(out.to_path_buf()),
        ..Overrides::default()
    };
    let mut p = Pipeline::new(RunConfig::resolve(&file, &ov).unwrap(), force, 1);
    p.verbose = false;
    p
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn evaluate_writes_the_run_layout_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let p = pipeline(dir.path(), false);
    let evals = p.cmd_evaluate().unwrap();
    assert_eq!(evals.len(), 8);
    let root = dir.path().join("ba-motif-counting");
    assert!(root.join("dataset.jsonl").exists());
    assert!(root.join("manifest.json").exists());
    assert!(root.join("gnn-seed0/model.json").exists());
    let run = root.join("pgexplainer/seed-1");
    for f in ["resolved.txt", "manifest.json", "explainer.json", "explanations.jsonl", "reports/records.jsonl", "reports/eval.txt", "plots/shift.svg", "plots/correlation.svg"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    assert!(!root.join("grad/seed-0/explainer.json").exists());

    // distribution plot data is sorted by label
    let y = read_two_column(&run.join("plots/shift_y.dat")).unwrap();
    assert!(y.windows(2).all(|w| w[0].1 <= w[1].1));
    assert_eq!(y.len(), 3);

    let recs = read_records(&root.join("tables/records.jsonl")).unwrap();
    let aucs: Vec<_> = recs.iter().filter(|r| r.metric == "auc").collect();
    assert_eq!(aucs.len(), 8);
    assert!(fs::read_to_string(root.join("tables/auc.txt")).unwrap().contains("regexplainer"));

    // a second run reuses everything
    let before = snapshot(dir.path());
    let again = pipeline(dir.path(), false).cmd_evaluate().unwrap();
    assert_eq!(snapshot(dir.path()), before);
    for (a, b) in evals.iter().zip(&again) {
        assert_eq!(a.records, b.records);
    }

    // forcing recomputes the explanations with the same result
    pipeline(dir.path(), true).cmd_evaluate().unwrap();
    assert_eq!(snapshot(dir.path()), before);
}

#[test]
fn ablate_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = pipeline(dir.path(), false);
    let rows = p.cmd_ablate().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["full", "no_mix", "no_nce", "no_mse"]);
    assert!(rows.iter().all(|r| r.aucs.len() == 2));
    let rows = p.cmd_sweep().unwrap();
    assert_eq!(rows.len(), 2);
    let tables = dir.path().join("ba-motif-counting/tables");
    assert!(tables.join("ablation.txt").exists());
    assert!(tables.join("sweep_alpha.txt").exists());
    // cached tables are read back
    let again = p.cmd_sweep().unwrap();
    assert_eq!(again, rows);
}

#[test]
fn explain_uses_the_configured_kind() {
    let dir = tempfile::tempdir().unwrap();
    let runs = pipeline(dir.path(), false).cmd_explain().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r.net.is_some() && r.explanations.len() == 3));
    assert!(dir.path().join("ba-motif-counting/regexplainer/seed-0/explanations.jsonl").exists());
}
