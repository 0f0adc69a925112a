//! Metrics and experiment reports.
//!
//! Edge AUC against ground-truth masks, prediction-shift RMSE triplets,
//! embedding-repair distances, correlation data and the seed loops behind the
//! ablation table and hyper-parameter sweep. The Pearson p-value needs a
//! Student-t CDF and is filled in by the command-line crate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::datasets::DatasetKind;
use crate::error::{Error, Result};
use crate::explain::{run_explainer, Ablation, ExplainerConfig};
use crate::gcn::GcnModel;
use crate::graph::{topk_mask, EdgeMask, Explanation, Graph, GraphDataset};
use crate::linalg::{dot, norm, sqrt};
use crate::mixup::{mixup_graphs_with, order_by_similarity, sample_two, MixupResult};
use crate::rng;

/// Area under the ROC curve of `scores` against binary `labels`, with tied
/// scores given their average rank.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Conformance(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!("{n_pos} positive and {n_neg} negative edges")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN edge score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tied block i..=j shares the mean rank
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += mean_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Binary ground truth: weight ≥ 0.5, or ≥ the graph's median edge weight
/// when `median` is set (continuous Crippen attributions).
pub fn binarize_gt(gt: &EdgeMask, median: bool) -> Vec<bool> {
    let w = gt.weights();
    if !median {
        return w.iter().map(|&v| v >= 0.5).collect();
    }
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    if m == 0 {
        return Vec::new();
    }
    let med = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    w.iter().map(|&v| v >= med).collect()
}

/// Edge AUC of an explanation against a binary ground-truth mask.
pub fn edge_auc(pred: &Explanation, gt: &EdgeMask) -> Result<f64> {
    if pred.mask.len() != gt.len() || pred.mask.n() != gt.n() {
        return Err(Error::Conformance("explanation and ground truth differ in shape".into()));
    }
    let labels = binarize_gt(gt, false);
    auc(pred.mask.weights(), &labels)
}

/// Whether ground truth for this dataset is continuous and needs median
/// binarization.
pub fn needs_median_binarization(ds: &GraphDataset) -> bool {
    DatasetKind::from_name(&ds.name) == Some(DatasetKind::Crippen)
}

/// Mean edge AUC over explained graphs. Graphs whose ground truth has a
/// single class are skipped; the second value counts them.
pub fn mean_edge_auc(ds: &GraphDataset, explanations: &[Explanation]) -> Result<(f64, usize)> {
    let median = needs_median_binarization(ds);
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for e in explanations {
        let g = ds.by_id(e.graph_id).ok_or(Error::Coverage(e.graph_id))?;
        let gt = g
            .gt_mask()
            .ok_or_else(|| Error::DataIntegrity(format!("graph {} has no ground truth", g.id)))?;
        match auc(e.mask.weights(), &binarize_gt(gt, median)) {
            Ok(a) => {
                sum += a;
                used += 1;
            }
            Err(Error::UndefinedAuc(_)) => skipped += 1,
            Err(err) => return Err(err),
        }
    }
    if used == 0 {
        return Err(Error::UndefinedAuc("no explained graph has both edge classes".into()));
    }
    Ok((sum / used as f64, skipped))
}

pub fn rmse(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Conformance(format!("rmse over lengths {} and {}", xs.len(), ys.len())));
    }
    let s: f64 = xs.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sqrt(s / xs.len() as f64))
}

/// Cosine similarity; zero vectors give 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        return 0.0;
    }
    (dot(a, b) / d).clamp(-1.0, 1.0)
}

/// Euclidean distance between `a/|a|` and `b/|b|` (zero vectors stay zero).
pub fn euclidean_unit(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let u = if na > 0.0 { x / na } else { 0.0 };
            let v = if nb > 0.0 { y / nb } else { 0.0 };
            (u - v) * (u - v)
        })
        .sum();
    sqrt(s)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Validation(format!(
            "pearson needs two equal series of length ≥ 3, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Validation("pearson on a constant series".into()));
    }
    Ok((sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub auc_mean: f64,
    pub auc_std: f64,
    pub rmse_gy: f64,
    pub rmse_sy: f64,
    pub rmse_gs: f64,
    pub cos_ge: f64,
    pub cos_gm: f64,
    pub euc_ge: f64,
    pub euc_gm: f64,
    pub rmse_pe: f64,
    pub rmse_pm: f64,
    /// `(pair name, r, p-value)`.
    pub pearson: Vec<(String, f64, f64)>,
}

/// The mask defining `G*` when evaluating `f(G*)`: top-k by ground-truth
/// size for fixed-size datasets, the soft mask otherwise.
pub fn star_mask(ds: &GraphDataset, g: &Graph, expl: &Explanation) -> Result<EdgeMask> {
    let fixed = DatasetKind::from_name(&ds.name).is_some_and(|k| k.fixed_size_explanations());
    if fixed {
        if let Some(gt) = g.gt_mask() {
            let k = binarize_gt(gt, false).iter().filter(|&&b| b).count();
            if k > 0 && k <= g.num_edges() {
                return topk_mask(g, expl, k);
            }
        }
    }
    Ok(expl.mask.clone())
}

fn find_explanation<'a>(explanations: &'a [Explanation], id: u64) -> Result<&'a Explanation> {
    explanations
        .iter()
        .find(|e| e.graph_id == id)
        .ok_or(Error::Coverage(id))
}

/// Per-graph `Y`, `f(G)` and `f(G*)` over the explainer-test fold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftData {
    pub ids: Vec<u64>,
    pub y: Vec<f64>,
    pub f_g: Vec<f64>,
    pub f_star: Vec<f64>,
}

pub fn shift_data(model: &GcnModel, ds: &GraphDataset, explanations: &[Explanation]) -> Result<ShiftData> {
    let mut out = ShiftData::default();
    for g in ds.subset(&ds.splits.explainer_test) {
        let e = find_explanation(explanations, g.id)?;
        let m = star_mask(ds, g, e)?;
        out.ids.push(g.id);
        out.y.push(g.label);
        out.f_g.push(model.forward(g, None)?.prediction);
        out.f_star.push(model.forward(g, Some(&m))?.prediction);
    }
    if out.ids.is_empty() {
        return Err(Error::Validation("explainer-test fold is empty".into()));
    }
    Ok(out)
}

/// Fills `rmse_gy`, `rmse_sy` and `rmse_gs`.
pub fn shift_report(model: &GcnModel, ds: &GraphDataset, explanations: &[Explanation]) -> Result<EvalReport> {
    let d = shift_data(model, ds, explanations)?;
    Ok(EvalReport {
        rmse_gy: rmse(&d.f_g, &d.y)?,
        rmse_sy: rmse(&d.f_star, &d.y)?,
        rmse_gs: rmse(&d.f_g, &d.f_star)?,
        ..EvalReport::default()
    })
}

/// Mix-ups of each explained test graph with its positive neighbor drawn
/// from the explainer-train fold. `partner_mask` supplies the partner's
/// explanation mask.
pub fn positive_mixups(
    model: &GcnModel,
    ds: &GraphDataset,
    explanations: &[Explanation],
    partner_mask: &dyn Fn(&Graph) -> Result<EdgeMask>,
    eta_fraction: f64,
    conn_weight: f64,
    seed: u64,
) -> Result<Vec<MixupResult>> {
    let pool = &ds.splits.explainer_train;
    let mut embeds = vec![None; ds.graphs.len()];
    let mut out = Vec::new();
    for &ti in &ds.splits.explainer_test {
        let g = &ds.graphs[ti];
        let e = find_explanation(explanations, g.id)?;
        let h = model.forward(g, None)?.embedding;
        let mut r = rng::stream(seed, &[rng::ROLE_NEIGHBORS, u64::MAX, g.id]);
        let (b, c) = sample_two(pool, Some(ti), &mut r)?;
        for i in [b, c] {
            if embeds[i].is_none() {
                embeds[i] = Some(model.forward(&ds.graphs[i], None)?.embedding);
            }
        }
        let (hb, hc) = (embeds[b].as_deref().unwrap_or(&[]), embeds[c].as_deref().unwrap_or(&[]));
        let (pos_id, _) = order_by_similarity(&h, (ds.graphs[b].id, hb), (ds.graphs[c].id, hc));
        let p = if pos_id == ds.graphs[b].id { b } else { c };
        let gp = &ds.graphs[p];
        let mp = partner_mask(gp)?;
        let mix_seed = rng::mix(seed, &[rng::ROLE_MIXUP, u64::MAX, g.id]);
        out.push(mixup_graphs_with(
            g,
            &e.mask,
            gp,
            &mp,
            eta_fraction,
            mix_seed,
            conn_weight,
        )?);
    }
    Ok(out)
}

/// Fills the repair fields: `v_g`, `v_e`, `v_m` are embeddings of `G`,
/// `G*` and the positive mix-up, `p_*` the matching predictions.
pub fn repair_report(
    model: &GcnModel,
    ds: &GraphDataset,
    explanations: &[Explanation],
    mixups: &[MixupResult],
) -> Result<EvalReport> {
    let (mut cos_ge, mut cos_gm, mut euc_ge, mut euc_gm) = (0.0, 0.0, 0.0, 0.0);
    let (mut pg, mut pe, mut pm) = (Vec::new(), Vec::new(), Vec::new());
    for mix in mixups {
        let id = mix.merged.id;
        let g = ds.by_id(id).ok_or(Error::Coverage(id))?;
        let e = find_explanation(explanations, id)?;
        let og = model.forward(g, None)?;
        let oe = model.forward(g, Some(&star_mask(ds, g, e)?))?;
        let om = model.forward(&mix.merged, Some(&mix.mask))?;
        cos_ge += cosine(&og.embedding, &oe.embedding);
        cos_gm += cosine(&og.embedding, &om.embedding);
        euc_ge += euclidean_unit(&og.embedding, &oe.embedding);
        euc_gm += euclidean_unit(&og.embedding, &om.embedding);
        pg.push(og.prediction);
        pe.push(oe.prediction);
        pm.push(om.prediction);
    }
    if mixups.is_empty() {
        return Err(Error::Validation("no mix-up graphs to evaluate".into()));
    }
    let n = mixups.len() as f64;
    Ok(EvalReport {
        cos_ge: cos_ge / n,
        cos_gm: cos_gm / n,
        euc_ge: euc_ge / n,
        euc_gm: euc_gm / n,
        rmse_pe: rmse(&pg, &pe)?,
        rmse_pm: rmse(&pg, &pm)?,
        ..EvalReport::default()
    })
}

/// Series for the correlation study: `Y`, `|f(G*) − Y|` and `|f(G) − f(G*)|`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationData {
    pub y: Vec<f64>,
    pub star_vs_y: Vec<f64>,
    pub g_vs_star: Vec<f64>,
}

pub fn correlation_data(model: &GcnModel, ds: &GraphDataset, explanations: &[Explanation]) -> Result<CorrelationData> {
    let d = shift_data(model, ds, explanations)?;
    Ok(CorrelationData {
        star_vs_y: d.f_star.iter().zip(&d.y).map(|(s, y)| (s - y).abs()).collect(),
        g_vs_star: d.f_g.iter().zip(&d.f_star).map(|(g, s)| (g - s).abs()).collect(),
        y: d.y,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, sqrt(v))
}

/// Trains and explains with `cfg`, returning the mean explainer-test AUC.
pub fn auc_for_config(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<f64> {
    let (expl, _) = run_explainer(model, ds, cfg)?;
    Ok(mean_edge_auc(ds, &expl)?.0)
}

pub const ABLATION_VARIANTS: [Ablation; 4] = [Ablation::NONE, Ablation::NO_MIX, Ablation::NO_NCE, Ablation::NO_MSE];

/// One row of an ablation or sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct AucRow {
    pub label: String,
    pub aucs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl AucRow {
    pub fn new(label: String, aucs: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&aucs);
        Self { label, aucs, mean, std }
    }
}

/// Every `(variant, seed)` configuration of the ablation study, in row-major
/// order.
pub fn ablation_configs(base: &ExplainerConfig, seeds: &[u64]) -> Vec<(String, ExplainerConfig)> {
    let mut out = Vec::new();
    for ab in ABLATION_VARIANTS {
        for &s in seeds {
            let mut c = base.clone().with_seed(s);
            c.ablation = ab;
            out.push((String::from(ab.name()), c));
        }
    }
    out
}

/// Configurations sweeping `alpha` (with `beta = 1`) or `beta` (with
/// `alpha = 1`) over `grid`, for each seed.
pub fn sweep_configs(base: &ExplainerConfig, sweep_alpha: bool, grid: &[f64], seeds: &[u64]) -> Vec<(String, ExplainerConfig)> {
    let mut out = Vec::new();
    for &v in grid {
        for &s in seeds {
            let mut c = base.clone().with_seed(s);
            if sweep_alpha {
                c.loss_weights.alpha = v;
                c.loss_weights.beta = 1.0;
            } else {
                c.loss_weights.alpha = 1.0;
                c.loss_weights.beta = v;
            }
            let name = if sweep_alpha { "alpha" } else { "beta" };
            out.push((format!("{name}={v}"), c));
        }
    }
    out
}

/// Groups consecutive results with the same label into rows.
pub fn collect_rows(labels: &[String], aucs: &[f64]) -> Vec<AucRow> {
    let mut rows: Vec<AucRow> = Vec::new();
    let mut cur: Option<(String, Vec<f64>)> = None;
    for (l, &a) in labels.iter().zip(aucs) {
        match &mut cur {
            Some((name, v)) if name == l => v.push(a),
            _ => {
                if let Some((name, v)) = cur.take() {
                    rows.push(AucRow::new(name, v));
                }
                cur = Some((l.clone(), vec![a]));
            }
        }
    }
    if let Some((name, v)) = cur {
        rows.push(AucRow::new(name, v));
    }
    rows
}

fn run_table(model: &GcnModel, ds: &GraphDataset, cfgs: Vec<(String, ExplainerConfig)>) -> Result<Vec<AucRow>> {
    let mut labels = Vec::with_capacity(cfgs.len());
    let mut aucs = Vec::with_capacity(cfgs.len());
    for (l, c) in cfgs {
        aucs.push(auc_for_config(model, ds, &c)?);
        labels.push(l);
    }
    Ok(collect_rows(&labels, &aucs))
}

/// RegExplainer AUC for the full objective and each single-component
/// ablation, over `seeds`.
pub fn ablation_suite(model: &GcnModel, ds: &GraphDataset, base: &ExplainerConfig, seeds: &[u64]) -> Result<Vec<AucRow>> {
    run_table(model, ds, ablation_configs(base, seeds))
}

pub fn hyperparam_sweep(
    model: &GcnModel,
    ds: &GraphDataset,
    base: &ExplainerConfig,
    sweep_alpha: bool,
    grid: &[f64],
    seeds: &[u64],
) -> Result<Vec<AucRow>> {
    run_table(model, ds, sweep_configs(base, sweep_alpha, grid, seeds))
}
