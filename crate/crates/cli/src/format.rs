//! Line-delimited JSON files for datasets and explanations, JSON
//! checkpoints for models and edge networks.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which is enough
//! to read every `f64` back bit for bit.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use regxplain_core::explain::{ExplainerConfig, PgNetwork};
use regxplain_core::gcn::{GcnModel, Propagation, Readout, TrainConfig};
use regxplain_core::linalg::Matrix;
use regxplain_core::nn::Mlp;
use regxplain_core::{EdgeMask, Explanation, Graph, GraphDataset, Splits};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

/// Writes floats as `d.ddddddddddddddddde±x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SigFormatter;

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{v:.8e}")
    }

    // serde_json writes NaN and infinities as null; no format here has a
    // null field, so any null is a non-finite real.
    fn write_null<W: ?Sized + Write>(&mut self, _: &mut W) -> io::Result<()> {
        Err(io::Error::new(io::ErrorKind::InvalidData, "non-finite real"))
    }
}

/// One-line JSON with 17-digit reals. Non-finite reals are rejected since
/// JSON has no spelling for them.
pub fn to_line<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter);
    value
        .serialize(&mut ser)
        .context("refusing to serialize a non-finite real")?;
    Ok(String::from_utf8(buf)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f.write_all(to_line(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitsRecord {
    pub train: Vec<usize>,
    pub explainer_train: Vec<usize>,
    pub explainer_test: Vec<usize>,
}

impl From<&Splits> for SplitsRecord {
    fn from(s: &Splits) -> Self {
        Self {
            train: s.train.clone(),
            explainer_train: s.explainer_train.clone(),
            explainer_test: s.explainer_test.clone(),
        }
    }
}

impl From<SplitsRecord> for Splits {
    fn from(s: SplitsRecord) -> Self {
        Splits {
            train: s.train,
            explainer_train: s.explainer_train,
            explainer_test: s.explainer_test,
        }
    }
}

/// First line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub dataset_name: String,
    pub seed: u64,
    pub generator_version: String,
    pub n_graphs: usize,
    /// Missing splits are drawn 8:1:1 from the seed on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<SplitsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: u64,
    pub n: usize,
    pub d: usize,
    pub label: f64,
    /// Row-major `n × d`.
    pub x: Vec<f64>,
    pub edges: Vec<[usize; 2]>,
    /// Ground-truth edges with nonzero weight; absent when the graph has no
    /// ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_edges: Option<Vec<(usize, usize, f64)>>,
    /// Per-node attribution weights (Crippen files only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_weights: Option<Vec<f64>>,
}

impl GraphRecord {
    pub fn from_graph(g: &Graph) -> Self {
        let gt_edges = g.gt_mask().map(|m| {
            g.edges()
                .iter()
                .zip(m.weights())
                .filter(|(_, &w)| w != 0.0)
                .map(|(&(i, j), &w)| (i, j, w))
                .collect()
        });
        Self {
            id: g.id,
            n: g.n(),
            d: g.d(),
            label: g.label,
            x: g.x().as_slice().to_vec(),
            edges: g.edges().iter().map(|&(i, j)| [i, j]).collect(),
            gt_edges,
            node_weights: None,
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        if self.x.len() != self.n * self.d {
            bail!("graph {}: x has {} entries for {}×{}", self.id, self.x.len(), self.n, self.d);
        }
        let x = Matrix::from_vec(self.n, self.d, self.x.clone());
        let g = Graph::new(self.id, x, self.edges.iter().map(|e| (e[0], e[1])), self.label)?;
        let Some(gt) = &self.gt_edges else {
            return Ok(g);
        };
        let mut w = vec![0.0; g.num_edges()];
        for &(i, j, v) in gt {
            let e = g
                .edge_index(i, j)
                .ok_or_else(|| anyhow!("graph {}: gt edge ({i}, {j}) is not an edge", self.id))?;
            w[e] = v;
        }
        let mask = EdgeMask::new(g.n(), w)?;
        Ok(g.with_gt_mask(mask)?)
    }
}

fn parse_line<T: DeserializeOwned>(line: &str, path: &Path, lineno: usize) -> Result<T> {
    serde_json::from_str(line).with_context(|| format!("{}:{}: malformed record", path.display(), lineno))
}

/// Writes a dataset: a header line, then one line per graph.
pub fn write_dataset(ds: &GraphDataset, path: &Path) -> Result<()> {
    write_dataset_with(ds, path, |_| None)
}

/// [`write_dataset`] attaching optional per-node weights to each record.
pub fn write_dataset_with(ds: &GraphDataset, path: &Path, node_weights: impl Fn(&Graph) -> Option<Vec<f64>>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let header = DatasetHeader {
        dataset_name: ds.name.clone(),
        seed: ds.seed,
        generator_version: ds.generator_version.clone(),
        n_graphs: ds.graphs.len(),
        splits: Some((&ds.splits).into()),
    };
    writeln!(f, "{}", to_line(&header)?)?;
    for g in &ds.graphs {
        let mut rec = GraphRecord::from_graph(g);
        rec.node_weights = node_weights(g);
        writeln!(f, "{}", to_line(&rec)?)?;
    }
    f.flush()?;
    Ok(())
}

/// Header and raw records of a dataset file.
pub fn read_dataset_records(path: &Path) -> Result<(DatasetHeader, Vec<GraphRecord>)> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(f).lines();
    let first = lines.next().ok_or_else(|| anyhow!("{}: empty dataset file", path.display()))??;
    let header: DatasetHeader = parse_line(&first, path, 1)?;
    let mut records = Vec::with_capacity(header.n_graphs);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line::<GraphRecord>(&line, path, k + 2)?);
    }
    if records.len() != header.n_graphs {
        bail!("{}: header announces {} graphs, found {}", path.display(), header.n_graphs, records.len());
    }
    Ok((header, records))
}

pub fn read_dataset(path: &Path) -> Result<GraphDataset> {
    let (header, records) = read_dataset_records(path)?;
    dataset_from_records(header, &records).with_context(|| format!("reading {}", path.display()))
}

pub fn dataset_from_records(header: DatasetHeader, records: &[GraphRecord]) -> Result<GraphDataset> {
    let graphs = records
        .iter()
        .enumerate()
        .map(|(k, r)| r.to_graph().with_context(|| format!("record {}", k + 1)))
        .collect::<Result<Vec<_>>>()?;
    let splits = match header.splits {
        Some(s) => s.into(),
        None => Splits::ratio_8_1_1(graphs.len(), header.seed),
    };
    Ok(GraphDataset::new(header.dataset_name, header.seed, header.generator_version, graphs, splits)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub graph_id: u64,
    pub scores: Vec<(usize, usize, f64)>,
}

pub fn write_explanations(expls: &[Explanation], path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for e in expls {
        let rec = ExplanationRecord {
            graph_id: e.graph_id,
            scores: e.scores.clone(),
        };
        writeln!(f, "{}", to_line(&rec)?)?;
    }
    f.flush()?;
    Ok(())
}

/// Reads explanations and checks each against its graph in `ds`.
pub fn read_explanations(path: &Path, ds: &GraphDataset) -> Result<Vec<Explanation>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExplanationRecord = parse_line(&line, path, k + 1)?;
        let g = ds
            .by_id(rec.graph_id)
            .ok_or_else(|| anyhow!("{}:{}: unknown graph {}", path.display(), k + 1, rec.graph_id))?;
        out.push(Explanation::from_scores(g, rec.scores)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigRecord {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub readout: String,
    pub batch_size: usize,
    pub propagation: String,
    pub init_bias: f64,
}

impl From<&TrainConfig> for TrainConfigRecord {
    fn from(c: &TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            seed: c.seed,
            hidden_dim: c.hidden_dim,
            readout: c.readout.name().into(),
            batch_size: c.batch_size,
            propagation: c.propagation.name().into(),
            init_bias: c.init_bias,
        }
    }
}

/// GCN checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub readout: String,
    pub propagation: String,
    pub degree_scale: f64,
    pub readout_scale: f64,
    pub input_scale: f64,
    pub target_shift: f64,
    pub target_scale: f64,
    /// Convolution weights and biases, layer by layer.
    pub conv: Vec<f64>,
    /// Dense head parameters.
    pub head: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfigRecord>,
    #[serde(default)]
    pub epoch_losses: Vec<f64>,
}

impl ModelCheckpoint {
    pub fn new(m: &GcnModel, cfg: Option<&TrainConfig>, epoch_losses: &[f64]) -> Self {
        Self {
            input_dim: m.input_dim(),
            hidden_dim: m.hidden_dim(),
            readout: m.readout.name().into(),
            propagation: m.propagation.name().into(),
            degree_scale: m.degree_scale,
            readout_scale: m.readout_scale,
            input_scale: m.input_scale,
            target_shift: m.target_shift,
            target_scale: m.target_scale,
            conv: m.conv_params().to_vec(),
            head: m.head().params().to_vec(),
            train_config: cfg.map(Into::into),
            epoch_losses: epoch_losses.to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<GcnModel> {
        let readout = Readout::from_name(&self.readout).ok_or_else(|| anyhow!("unknown readout {:?}", self.readout))?;
        let propagation = Propagation::from_name(&self.propagation)
            .ok_or_else(|| anyhow!("unknown propagation {:?}", self.propagation))?;
        let mut m = GcnModel::from_parts(
            self.input_dim,
            self.hidden_dim,
            readout,
            self.conv.clone(),
            self.head.clone(),
            self.input_scale,
            self.target_shift,
            self.target_scale,
        )?;
        if !(self.degree_scale > 0.0 && self.readout_scale > 0.0) {
            bail!("checkpoint scales must be positive");
        }
        m.propagation = propagation;
        m.degree_scale = self.degree_scale;
        m.readout_scale = self.readout_scale;
        Ok(m)
    }
}

/// Edge-network checkpoint of a parameterized explainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgCheckpoint {
    pub kind: String,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub input_scale: f64,
    pub seed: u64,
    #[serde(default)]
    pub epoch_losses: Vec<f64>,
}

impl PgCheckpoint {
    pub fn new(net: &PgNetwork, cfg: &ExplainerConfig, epoch_losses: &[f64]) -> Self {
        Self {
            kind: cfg.kind.name().into(),
            sizes: net.mlp().sizes().to_vec(),
            params: net.mlp().params().to_vec(),
            input_scale: net.input_scale,
            seed: cfg.seed,
            epoch_losses: epoch_losses.to_vec(),
        }
    }

    pub fn to_network(&self) -> Result<PgNetwork> {
        let mlp = Mlp::from_params(&self.sizes, self.params.clone())
            .ok_or_else(|| anyhow!("edge network parameters do not match sizes {:?}", self.sizes))?;
        Ok(PgNetwork::from_mlp(mlp, self.input_scale)?)
    }
}
