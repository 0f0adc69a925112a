//! The experiment commands.
//!
//! Layout under the output directory:
//!
//! ```text
//! <out>/<dataset>/dataset.jsonl, manifest.json
//! <out>/<dataset>/gnn-seed<s>/model.json, losses.dat
//! <out>/<dataset>/<explainer>/seed-<s>/config.toml, manifest.json,
//!     explainer.json, explanations.jsonl, reports/, plots/
//! <out>/<dataset>/tables/
//! ```
//!
//! Every stage reuses what is already on disk unless `force` is set; only
//! the stage a command names is forced, upstream stages are reused.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use regxplain_core::datasets::{gen_ba_motif_counting, gen_ba_motif_volume, gen_triangles, DatasetKind};
use regxplain_core::eval::{
    ablation_configs, collect_rows, correlation_data, mean_edge_auc, mean_std, positive_mixups, repair_report,
    shift_data, shift_report, sweep_configs, AucRow, EvalReport,
};
use regxplain_core::explain::{explain_graphs, pg_explain, train_parameterized, ExplainerConfig, ExplainerKind, PgNetwork};
use regxplain_core::gcn::{train_gnn, GcnModel};
use regxplain_core::{EdgeMask, Explanation, Graph, GraphDataset};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSpec, RunConfig};
use crate::crippen::load_crippen;
use crate::format::{
    read_dataset, read_explanations, read_json, write_dataset, write_explanations, write_json, ModelCheckpoint,
    PgCheckpoint,
};
use crate::report::{
    auc_table, eval_table, render_scatter, report_records, write_records, write_two_column, Record, Series,
};
use crate::stats::pearson;

/// Environment variable holding the worker count for seed loops.
pub const WORKERS_ENV: &str = "REGXPLAIN_WORKERS";

pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on `workers` threads; results keep input order.
pub fn par_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| items.par_iter().map(f).collect())
}

/// Resolved configuration plus command-line switches.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cfg: RunConfig,
    pub force: bool,
    pub workers: usize,
    /// Print progress lines.
    pub verbose: bool,
    /// The config file the run was resolved from, copied into run dirs.
    pub source_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub n_graphs: usize,
    pub generator_version: String,
    pub label_min: f64,
    pub label_mean: f64,
    pub label_max: f64,
}

impl Manifest {
    pub fn of(ds: &GraphDataset) -> Self {
        let labels: Vec<f64> = ds.graphs.iter().map(|g| g.label).collect();
        let n = labels.len().max(1) as f64;
        Self {
            name: ds.name.clone(),
            seed: ds.seed,
            n_graphs: ds.graphs.len(),
            generator_version: ds.generator_version.clone(),
            label_min: labels.iter().copied().fold(f64::INFINITY, f64::min),
            label_mean: labels.iter().sum::<f64>() / n,
            label_max: labels.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} seed={} n_graphs={} label min/mean/max = {:.4}/{:.4}/{:.4}",
            self.name, self.seed, self.n_graphs, self.label_min, self.label_mean, self.label_max
        )
    }
}

/// What `explain` produced for one (explainer, seed).
#[derive(Debug, Clone)]
pub struct ExplainRun {
    pub kind: ExplainerKind,
    pub seed: u64,
    pub explanations: Vec<Explanation>,
    pub net: Option<PgNetwork>,
}

/// Everything `evaluate` measured for one (explainer, seed).
#[derive(Debug, Clone)]
pub struct RunEval {
    pub kind: ExplainerKind,
    pub seed: u64,
    pub auc: f64,
    pub report: EvalReport,
    pub records: Vec<Record>,
}

fn exists(p: &Path) -> bool {
    p.try_exists().unwrap_or(false)
}

fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

impl Pipeline {
    pub fn new(cfg: RunConfig, force: bool, workers: usize) -> Self {
        Self {
            cfg,
            force,
            workers,
            verbose: true,
            source_config: None,
        }
    }

    fn say(&self, msg: impl AsRef<str>) {
        if self.verbose {
            println!("{}", msg.as_ref());
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.cfg.out.join(self.cfg.dataset_name())
    }

    pub fn gnn_dir(&self) -> PathBuf {
        self.dataset_dir().join(format!("gnn-seed{}", self.cfg.gnn.seed))
    }

    pub fn run_dir(&self, kind: ExplainerKind, seed: u64) -> PathBuf {
        self.dataset_dir().join(kind.name()).join(format!("seed-{seed}"))
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.dataset_dir().join("tables")
    }

    fn build_dataset(&self) -> Result<GraphDataset> {
        Ok(match &self.cfg.dataset {
            DatasetSpec::Generated { kind, gen } => match kind {
                DatasetKind::BaMotifVolume => gen_ba_motif_volume(gen)?,
                DatasetKind::BaMotifCounting => gen_ba_motif_counting(gen)?,
                DatasetKind::Triangles => gen_triangles(gen)?,
                DatasetKind::Crippen => return Err(anyhow!("crippen cannot be generated")),
            },
            DatasetSpec::File { kind: DatasetKind::Crippen, path } => load_crippen(path)?,
            DatasetSpec::File { path, .. } => read_dataset(path)?,
        })
    }

    fn dataset_stage(&self, force: bool) -> Result<GraphDataset> {
        let dir = self.dataset_dir();
        let path = dir.join("dataset.jsonl");
        if exists(&path) && !force {
            return read_dataset(&path);
        }
        ensure_dir(&dir)?;
        let ds = self.build_dataset()?;
        write_dataset(&ds, &path)?;
        let m = Manifest::of(&ds);
        write_json(&dir.join("manifest.json"), &m)?;
        self.say(m.line());
        Ok(ds)
    }

    /// Generates (or loads) the dataset and writes its manifest.
    pub fn cmd_generate(&self) -> Result<GraphDataset> {
        self.dataset_stage(self.force)
    }

    fn gnn_stage(&self, ds: &GraphDataset, force: bool) -> Result<GcnModel> {
        let dir = self.gnn_dir();
        let path = dir.join("model.json");
        if exists(&path) && !force {
            return read_json::<ModelCheckpoint>(&path)?.to_model();
        }
        ensure_dir(&dir)?;
        let trained = train_gnn(ds, &self.cfg.gnn)?;
        let ck = ModelCheckpoint::new(&trained.model, Some(&self.cfg.gnn), &trained.epoch_losses);
        write_json(&path, &ck)?;
        let losses: Vec<(f64, f64)> = trained
            .epoch_losses
            .iter()
            .enumerate()
            .map(|(e, &l)| (e as f64, l))
            .collect();
        write_two_column(&dir.join("losses.dat"), &losses)?;
        let test = trained.model.rmse(ds.subset(&ds.splits.explainer_test))?;
        self.say(format!(
            "{}: trained GCN ({} epochs), final train MSE {:.4}, explainer-test RMSE {:.4}",
            self.cfg.dataset_name(),
            trained.epoch_losses.len(),
            trained.epoch_losses.last().copied().unwrap_or(f64::NAN),
            test
        ));
        Ok(trained.model)
    }

    /// Trains (or loads) the regressor.
    pub fn cmd_train_gnn(&self) -> Result<(GraphDataset, GcnModel)> {
        let ds = self.dataset_stage(false)?;
        let m = self.gnn_stage(&ds, self.force)?;
        Ok((ds, m))
    }

    fn write_run_config(&self, dir: &Path, cfg: &ExplainerConfig) -> Result<()> {
        if let Some(src) = &self.source_config {
            fs::copy(src, dir.join("config.toml")).with_context(|| format!("copying {}", src.display()))?;
        }
        let resolved = format!("{:#?}\n{:#?}\n{:#?}\n", self.cfg.dataset, self.cfg.gnn, cfg);
        fs::write(dir.join("resolved.txt"), resolved)?;
        let manifest = self.dataset_dir().join("manifest.json");
        if exists(&manifest) {
            fs::copy(&manifest, dir.join("manifest.json"))?;
        }
        Ok(())
    }

    fn explain_stage(&self, ds: &GraphDataset, model: &GcnModel, cfg: &ExplainerConfig, force: bool) -> Result<ExplainRun> {
        let dir = self.run_dir(cfg.kind, cfg.seed);
        let expl_path = dir.join("explanations.jsonl");
        let net_path = dir.join("explainer.json");
        let cached = exists(&expl_path) && (!cfg.kind.is_parameterized() || exists(&net_path));
        if cached && !force {
            let net = if cfg.kind.is_parameterized() {
                Some(read_json::<PgCheckpoint>(&net_path)?.to_network()?)
            } else {
                None
            };
            return Ok(ExplainRun {
                kind: cfg.kind,
                seed: cfg.seed,
                explanations: read_explanations(&expl_path, ds)?,
                net,
            });
        }
        ensure_dir(&dir)?;
        self.write_run_config(&dir, cfg)?;
        let trained = if cfg.kind.is_parameterized() {
            let t = train_parameterized(model, ds, cfg)?;
            write_json(&net_path, &PgCheckpoint::new(&t.net, cfg, &t.epoch_losses))?;
            Some(t.net)
        } else {
            None
        };
        let graphs: Vec<&Graph> = ds.subset(&ds.splits.explainer_test).collect();
        let explanations = explain_graphs(model, &graphs, cfg, trained.as_ref())?;
        write_explanations(&explanations, &expl_path)?;
        Ok(ExplainRun {
            kind: cfg.kind,
            seed: cfg.seed,
            explanations,
            net: trained,
        })
    }

    /// Runs the configured explainer over the explainer-test fold for every
    /// configured seed.
    pub fn cmd_explain(&self) -> Result<Vec<ExplainRun>> {
        let (ds, model) = self.prepare()?;
        let cfgs: Vec<ExplainerConfig> = self
            .cfg
            .seeds
            .iter()
            .map(|&s| self.cfg.explainer.clone().with_seed(s))
            .collect();
        let runs = par_map(self.workers, &cfgs, |c| self.explain_stage(&ds, &model, c, self.force))?;
        for r in &runs {
            self.say(format!(
                "{} seed {}: {} explanations in {}",
                r.kind.name(),
                r.seed,
                r.explanations.len(),
                self.run_dir(r.kind, r.seed).display()
            ));
        }
        Ok(runs)
    }

    /// Dataset and regressor, reusing what is on disk.
    pub fn prepare(&self) -> Result<(GraphDataset, GcnModel)> {
        let ds = self.dataset_stage(false)?;
        let m = self.gnn_stage(&ds, false)?;
        Ok((ds, m))
    }

    /// Evaluates one explained run and writes its reports and plots.
    pub fn evaluate_run(&self, ds: &GraphDataset, model: &GcnModel, run: &ExplainRun) -> Result<RunEval> {
        let cfg = self.cfg.explainer_for(run.kind, run.seed);
        let name = self.cfg.dataset_name();
        let expl = &run.explanations;
        let (auc, skipped) = mean_edge_auc(ds, expl)?;
        let mut report = shift_report(model, ds, expl)?;
        report.auc_mean = auc;
        let partner = |g: &Graph| -> regxplain_core::Result<EdgeMask> {
            match &run.net {
                Some(net) => Ok(pg_explain(net, model, g)?.mask),
                None => Ok(explain_graphs(model, &[g], &cfg, None)?.remove(0).mask),
            }
        };
        let mixups = positive_mixups(model, ds, expl, &partner, cfg.eta_fraction, cfg.conn_weight, run.seed)?;
        let repair = repair_report(model, ds, expl, &mixups)?;
        report.cos_ge = repair.cos_ge;
        report.cos_gm = repair.cos_gm;
        report.euc_ge = repair.euc_ge;
        report.euc_gm = repair.euc_gm;
        report.rmse_pe = repair.rmse_pe;
        report.rmse_pm = repair.rmse_pm;
        let corr = correlation_data(model, ds, expl)?;
        for (pair, xs) in [("star_vs_y", &corr.star_vs_y), ("g_vs_star", &corr.g_vs_star)] {
            match pearson(xs, &corr.y) {
                Ok((r, p)) => report.pearson.push((pair.into(), r, p)),
                Err(e) => self.say(format!("{name} {} seed {}: pearson {pair} undefined: {e}", run.kind.name(), run.seed)),
            }
        }

        let kind = run.kind.name();
        let mut records = vec![
            Record::new("auc", name, kind, run.seed, auc),
            Record::new("auc_skipped", name, kind, run.seed, skipped as f64),
        ];
        records.extend(report_records(&report, name, kind, run.seed));

        let dir = self.run_dir(run.kind, run.seed);
        let reports = dir.join("reports");
        let plots = dir.join("plots");
        ensure_dir(&reports)?;
        ensure_dir(&plots)?;
        write_records(&reports.join("records.jsonl"), &records)?;
        let title = format!("{name} / {kind} / seed {}", run.seed);
        fs::write(reports.join("eval.txt"), eval_table(&title, &report))?;
        self.write_plots(&plots, ds, model, expl, &corr, &title)?;
        Ok(RunEval {
            kind: run.kind,
            seed: run.seed,
            auc,
            report,
            records,
        })
    }

    fn write_plots(
        &self,
        dir: &Path,
        ds: &GraphDataset,
        model: &GcnModel,
        expl: &[Explanation],
        corr: &regxplain_core::eval::CorrelationData,
        title: &str,
    ) -> Result<()> {
        // distribution plot: test graphs sorted by label
        let d = shift_data(model, ds, expl)?;
        let mut order: Vec<usize> = (0..d.y.len()).collect();
        order.sort_by(|&a, &b| d.y[a].total_cmp(&d.y[b]).then(d.ids[a].cmp(&d.ids[b])));
        let series = |v: &[f64]| -> Vec<(f64, f64)> { order.iter().enumerate().map(|(k, &i)| (k as f64, v[i])).collect() };
        let (y, fg, fs_) = (series(&d.y), series(&d.f_g), series(&d.f_star));
        write_two_column(&dir.join("shift_y.dat"), &y)?;
        write_two_column(&dir.join("shift_f_g.dat"), &fg)?;
        write_two_column(&dir.join("shift_f_star.dat"), &fs_)?;
        render_scatter(
            &dir.join("shift.svg"),
            title,
            "graph index (sorted by Y)",
            "value",
            &[
                Series { name: "Y", points: &y },
                Series { name: "f(G)", points: &fg },
                Series { name: "f(G*)", points: &fs_ },
            ],
        )?;
        let a: Vec<(f64, f64)> = corr.y.iter().copied().zip(corr.star_vs_y.iter().copied()).collect();
        let b: Vec<(f64, f64)> = corr.y.iter().copied().zip(corr.g_vs_star.iter().copied()).collect();
        write_two_column(&dir.join("corr_star_vs_y.dat"), &a)?;
        write_two_column(&dir.join("corr_g_vs_star.dat"), &b)?;
        render_scatter(
            &dir.join("correlation.svg"),
            title,
            "Y",
            "absolute difference",
            &[
                Series { name: "|f(G*) - Y|", points: &a },
                Series { name: "|f(G) - f(G*)|", points: &b },
            ],
        )
    }

    /// Runs every configured explainer for every seed, writes per-run
    /// reports and an AUC table.
    pub fn cmd_evaluate(&self) -> Result<Vec<RunEval>> {
        let (ds, model) = self.prepare()?;
        let mut jobs = Vec::new();
        for &k in &self.cfg.eval_explainers {
            for &s in &self.cfg.seeds {
                jobs.push(self.cfg.explainer_for(k, s));
            }
        }
        let evals = par_map(self.workers, &jobs, |c| {
            let run = self.explain_stage(&ds, &model, c, self.force)?;
            self.evaluate_run(&ds, &model, &run)
        })?;
        let labels: Vec<String> = evals.iter().map(|e| e.kind.name().to_string()).collect();
        let aucs: Vec<f64> = evals.iter().map(|e| e.auc).collect();
        let rows = collect_rows(&labels, &aucs);
        let tables = self.tables_dir();
        ensure_dir(&tables)?;
        let table = auc_table(&format!("edge AUC on {}", self.cfg.dataset_name()), &rows);
        fs::write(tables.join("auc.txt"), &table)?;
        let records: Vec<Record> = evals.iter().flat_map(|e| e.records.iter().cloned()).collect();
        write_records(&tables.join("records.jsonl"), &records)?;
        self.say(table.trim_end());
        Ok(evals)
    }

    fn auc_rows(&self, table: &str, tag: &str, cfgs: Vec<(String, ExplainerConfig)>) -> Result<Vec<AucRow>> {
        let tables = self.tables_dir();
        let path = tables.join(format!("{table}.txt"));
        let rec_path = tables.join(format!("{table}_records.jsonl"));
        if exists(&rec_path) && !self.force {
            let recs = crate::report::read_records(&rec_path)?;
            let labels: Vec<String> = recs.iter().map(|r| r.explainer.clone()).collect();
            let aucs: Vec<f64> = recs.iter().map(|r| r.value).collect();
            let rows = collect_rows(&labels, &aucs);
            self.say(fs::read_to_string(&path).unwrap_or_default().trim_end());
            return Ok(rows);
        }
        let (ds, model) = self.prepare()?;
        let aucs = par_map(self.workers, &cfgs, |(_, c)| {
            let graphs: Vec<&Graph> = ds.subset(&ds.splits.explainer_test).collect();
            let net = if c.kind.is_parameterized() {
                Some(train_parameterized(&model, &ds, c)?.net)
            } else {
                None
            };
            let expl = explain_graphs(&model, &graphs, c, net.as_ref())?;
            Ok(mean_edge_auc(&ds, &expl)?.0)
        })?;
        let labels: Vec<String> = cfgs.iter().map(|(l, _)| l.clone()).collect();
        let rows = collect_rows(&labels, &aucs);
        ensure_dir(&tables)?;
        let name = self.cfg.dataset_name();
        let records: Vec<Record> = cfgs
            .iter()
            .zip(&aucs)
            .map(|((l, c), &a)| Record::new("auc", name, l, c.seed, a))
            .collect();
        write_records(&rec_path, &records)?;
        let text = auc_table(&format!("{tag} on {name}"), &rows);
        fs::write(&path, &text)?;
        self.say(text.trim_end());
        Ok(rows)
    }

    /// RegExplainer with each single-component ablation.
    pub fn cmd_ablate(&self) -> Result<Vec<AucRow>> {
        let base = self.cfg.explainer_for(ExplainerKind::RegExplainer, 0);
        self.auc_rows("ablation", "RegExplainer ablations", ablation_configs(&base, &self.cfg.seeds))
    }

    /// RegExplainer over the configured alpha (or beta) grid.
    pub fn cmd_sweep(&self) -> Result<Vec<AucRow>> {
        let base = self.cfg.explainer_for(ExplainerKind::RegExplainer, 0);
        let which = if self.cfg.sweep_alpha { "alpha" } else { "beta" };
        let cfgs = sweep_configs(&base, self.cfg.sweep_alpha, &self.cfg.sweep_grid, &self.cfg.seeds);
        self.auc_rows(&format!("sweep_{which}"), &format!("RegExplainer {which} sweep"), cfgs)
    }
}

/// Mean and std of the AUCs of one explainer across seeds.
pub fn auc_summary(evals: &[RunEval], kind: ExplainerKind) -> (f64, f64) {
    let aucs: Vec<f64> = evals.iter().filter(|e| e.kind == kind).map(|e| e.auc).collect();
    mean_std(&aucs)
}
