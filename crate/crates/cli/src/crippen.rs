//! Loader for the preprocessed Crippen solubility file.
//!
//! Each node record carries its Crippen atomic contribution in
//! `node_weights`; every ground-truth edge weight must equal the mean of its
//! endpoint weights. Contributions are signed, so after validation all edge
//! weights are mapped to `[0, 1]` by one affine map over the whole file.
//! The map is increasing, so per-graph rankings and medians are unchanged.

use std::path::Path;

use anyhow::{bail, Context, Result};
use regxplain_core::datasets::{check_one_hot, DatasetKind};
use regxplain_core::GraphDataset;

use crate::format::{dataset_from_records, read_dataset_records, GraphRecord};

/// Endpoint-mean tolerance.
pub const ENDPOINT_TOL: f64 = 1e-9;

fn check_record(r: &GraphRecord) -> Result<()> {
    let Some(w) = &r.node_weights else {
        bail!("graph {}: missing node_weights", r.id);
    };
    if w.len() != r.n {
        bail!("graph {}: {} node weights for {} nodes", r.id, w.len(), r.n);
    }
    let Some(gt) = &r.gt_edges else {
        bail!("graph {}: missing gt_edges", r.id);
    };
    for &(i, j, v) in gt {
        if i >= r.n || j >= r.n {
            bail!("graph {}: gt edge ({i}, {j}) out of range", r.id);
        }
        let mean = 0.5 * (w[i] + w[j]);
        if (v - mean).abs() > ENDPOINT_TOL {
            bail!(
                "data integrity error: graph {}: edge ({i}, {j}) weight {v} != endpoint mean {mean}",
                r.id
            );
        }
    }
    Ok(())
}

/// Loads and validates a Crippen file. Splits come from the header or, when
/// absent, an 8:1:1 draw from the header seed.
pub fn load_crippen(path: &Path) -> Result<GraphDataset> {
    let (mut header, mut records) = read_dataset_records(path)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in &records {
        check_record(r).with_context(|| format!("validating {}", path.display()))?;
        for &(_, _, v) in r.gt_edges.iter().flatten() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = hi - lo;
    for r in &mut records {
        for e in r.gt_edges.iter_mut().flatten() {
            e.2 = if span > 0.0 { (e.2 - lo) / span } else { 1.0 };
        }
    }
    header.dataset_name = DatasetKind::Crippen.name().into();
    let ds = dataset_from_records(header, &records)?;
    for g in &ds.graphs {
        check_one_hot(g)?;
    }
    Ok(ds)
}
