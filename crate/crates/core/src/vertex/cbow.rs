//! Neighborhood-prediction training of the vertex embedding matrix.
//!
//! The network sums (or averages) the embeddings `W h_j` of a vertex's
//! neighbors, passes the result through rectified fully-connected layers,
//! and predicts each attribute of the vertex with its own softmax over that
//! attribute's block of the one-hot layout. The loss is the per-block
//! cross-entropy summed over blocks and samples. Hidden layers are shared by
//! all attributes; the blocks split only at the output.

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{one_hot, MolecularGraph, OneHotVector};
use crate::rng;
use crate::schema::AttributeSchema;

use super::embedding::{random_embedding, EntryDistribution, Provenance, VertexEmbeddingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregator {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CbowConfig {
    pub r: usize,
    pub aggregator: Aggregator,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of samples held out for the accuracy report.
    pub holdout_fraction: f64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            r: 100,
            aggregator: Aggregator::Sum,
            hidden: vec![100],
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            holdout_fraction: 0.1,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Config("r must be >= 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden sizes must be a nonempty list of positive integers".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }
}

/// A vertex and the multiset of its neighbors' encodings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSample {
    pub target: OneHotVector,
    pub context: Vec<OneHotVector>,
}

/// One sample per non-isolated vertex; the context is its neighbor set.
pub fn extract_contexts(graphs: &[MolecularGraph], schema: &AttributeSchema) -> Result<Vec<ContextSample>> {
    let mut out = Vec::new();
    for g in graphs {
        let hot: Vec<OneHotVector> =
            (0..g.num_vertices()).map(|i| one_hot(g, schema, i)).collect::<Result<_>>()?;
        for i in 0..g.num_vertices() {
            let nb = g.neighbors(i);
            if nb.is_empty() {
                continue;
            }
            out.push(ContextSample {
                target: hot[i].clone(),
                context: nb.iter().map(|&j| hot[j].clone()).collect(),
            });
        }
    }
    Ok(out)
}

/// Content digest of a sample set, used as the training dataset id.
pub fn dataset_digest(samples: &[ContextSample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        for &i in s.target.indices() {
            h.update((i as u32).to_le_bytes());
        }
        h.update([0xff]);
        for c in &s.context {
            for &i in c.indices() {
                h.update((i as u32).to_le_bytes());
            }
        }
        h.update([0xfe]);
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameters of the prediction network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowNetwork {
    /// Vertex embedding matrix, `r x K`.
    pub embedding: Array2<f64>,
    /// Hidden layers followed by the `K`-wide output layer.
    pub layers: Vec<DenseLayer>,
    pub aggregator: Aggregator,
    offsets: Vec<usize>,
    cardinalities: Vec<usize>,
}

impl CbowNetwork {
    pub fn init(schema: &AttributeSchema, cfg: &CbowConfig) -> Result<Self> {
        cfg.validate()?;
        let w = random_embedding(schema, cfg.r, EntryDistribution::Gaussian, rng::derive_seed(cfg.seed, "cbow/embedding"))?;
        let mut layer_rng = rng::stream(cfg.seed, "cbow/layers");
        let mut dims = vec![cfg.r];
        dims.extend(&cfg.hidden);
        dims.push(schema.width());
        let layers = dims
            .windows(2)
            .map(|p| {
                let (fan_in, fan_out) = (p[0], p[1]);
                let std = (2.0 / fan_in as f64).sqrt();
                DenseLayer {
                    weight: Array2::from_shape_simple_fn((fan_out, fan_in), || {
                        std * layer_rng.sample::<f64, _>(StandardNormal)
                    }),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(CbowNetwork {
            embedding: w.weights().clone(),
            layers,
            aggregator: cfg.aggregator,
            offsets: schema.offsets().to_vec(),
            cardinalities: schema.cardinalities(),
        })
    }

    fn zeros_like(&self) -> Self {
        CbowNetwork {
            embedding: Array2::zeros(self.embedding.raw_dim()),
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer { weight: Array2::zeros(l.weight.raw_dim()), bias: Array1::zeros(l.bias.len()) })
                .collect(),
            aggregator: self.aggregator,
            offsets: self.offsets.clone(),
            cardinalities: self.cardinalities.clone(),
        }
    }

    /// Flat views of every parameter tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embedding.as_slice().expect("standard layout")];
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Aggregated context encodings, one row per sample (`B x K`).
    fn context_inputs(&self, samples: &[&ContextSample]) -> Array2<f64> {
        let k = self.embedding.ncols();
        let mut z = Array2::zeros((samples.len(), k));
        for (b, s) in samples.iter().enumerate() {
            let weight = match self.aggregator {
                Aggregator::Sum => 1.0,
                Aggregator::Mean => 1.0 / s.context.len() as f64,
            };
            for c in &s.context {
                for &i in c.indices() {
                    z[[b, i]] += weight;
                }
            }
        }
        z
    }

    /// Network input `g`'s first stage: aggregated `W h_j`, one row per sample.
    pub fn aggregate(&self, samples: &[&ContextSample]) -> Array2<f64> {
        self.context_inputs(samples).dot(&self.embedding.t())
    }

    /// Returns the layer inputs (first entry is the aggregated embedding),
    /// pre-activations of the hidden layers, and output logits.
    fn forward(&self, z: &Array2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>, Array2<f64>) {
        let mut inputs = vec![z.dot(&self.embedding.t())];
        let mut pre = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let a = inputs[l].dot(&layer.weight.t()) + &layer.bias;
            if l == last {
                return (inputs, pre, a);
            }
            inputs.push(a.mapv(|x| x.max(0.0)));
            pre.push(a);
        }
        unreachable!("network has an output layer")
    }

    /// Per-block softmax in place.
    fn softmax_blocks(&self, logits: &mut Array2<f64>) {
        for mut row in logits.rows_mut() {
            for (&off, &k) in self.offsets.iter().zip(&self.cardinalities) {
                let mut block = row.slice_mut(s![off..off + k]);
                let max = block.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
                block.mapv_inplace(|x| (x - max).exp());
                let sum = block.sum();
                block.mapv_inplace(|x| x / sum);
            }
        }
    }

    pub fn predict_proba(&self, samples: &[&ContextSample]) -> Array2<f64> {
        let z = self.context_inputs(samples);
        let (_, _, mut logits) = self.forward(&z);
        self.softmax_blocks(&mut logits);
        logits
    }

    /// Summed cross-entropy over samples and attribute blocks.
    pub fn loss(&self, samples: &[&ContextSample]) -> f64 {
        let probs = self.predict_proba(samples);
        samples
            .iter()
            .enumerate()
            .map(|(b, s)| s.target.indices().iter().map(|&i| -probs[[b, i]].ln()).sum::<f64>())
            .sum()
    }

    /// Summed loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, samples: &[&ContextSample]) -> (f64, CbowNetwork) {
        let z = self.context_inputs(samples);
        let (inputs, pre, mut delta) = self.forward(&z);
        self.softmax_blocks(&mut delta);
        let mut loss = 0.0;
        for (b, s) in samples.iter().enumerate() {
            for &i in s.target.indices() {
                loss -= delta[[b, i]].ln();
                delta[[b, i]] -= 1.0;
            }
        }

        let mut grad = self.zeros_like();
        for l in (0..self.layers.len()).rev() {
            grad.layers[l].weight = delta.t().dot(&inputs[l]).as_standard_layout().into_owned();
            grad.layers[l].bias = delta.sum_axis(Axis(0));
            let mut back = delta.dot(&self.layers[l].weight);
            if l > 0 {
                back.zip_mut_with(&pre[l - 1], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            delta = back;
        }
        grad.embedding = delta.t().dot(&z).as_standard_layout().into_owned();
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeAccuracy {
    pub per_attribute: Vec<f64>,
    pub mean: f64,
}

/// Block-argmax accuracy for each attribute.
pub fn evaluate_accuracy(net: &CbowNetwork, samples: &[&ContextSample]) -> Option<AttributeAccuracy> {
    if samples.is_empty() {
        return None;
    }
    let probs = net.predict_proba(samples);
    let s = net.offsets.len();
    let mut hits = vec![0usize; s];
    for (b, sample) in samples.iter().enumerate() {
        let row = probs.row(b);
        for (j, hit) in hits.iter_mut().enumerate() {
            let (off, k) = (net.offsets[j], net.cardinalities[j]);
            let block = row.slice(s![off..off + k]);
            let argmax = block
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
                .0;
            if off + argmax == sample.target.indices()[j] {
                *hit += 1;
            }
        }
    }
    let per_attribute: Vec<f64> = hits.iter().map(|&h| h as f64 / samples.len() as f64).collect();
    let mean = per_attribute.iter().sum::<f64>() / s as f64;
    Some(AttributeAccuracy { per_attribute, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch.
    pub loss: f64,
    pub heldout_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    pub train_samples: usize,
    pub heldout_samples: usize,
    pub heldout_accuracy: Option<AttributeAccuracy>,
    pub dataset_id: String,
    pub config_hash: String,
}

struct Adam {
    m: CbowNetwork,
    v: CbowNetwork,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &CbowNetwork, lr: f64) -> Self {
        Adam { m: net.zeros_like(), v: net.zeros_like(), t: 0, lr }
    }

    fn step(&mut self, net: &mut CbowNetwork, grad: &CbowNetwork, scale: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let params = net.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in params.into_iter().zip(grad.tensors()).zip(ms).zip(vs) {
            for i in 0..p.len() {
                let gi = g[i] * scale;
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * gi;
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * gi * gi;
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Trains `W` and the prediction network. Deterministic given `cfg.seed`.
pub fn train_cbow(
    schema: &AttributeSchema,
    samples: &[ContextSample],
    cfg: &CbowConfig,
) -> Result<(VertexEmbeddingMatrix, TrainingReport)> {
    train_cbow_network(schema, samples, cfg).map(|(w, _, report)| (w, report))
}

/// Like [`train_cbow`] but also returns the trained network.
pub fn train_cbow_network(
    schema: &AttributeSchema,
    samples: &[ContextSample],
    cfg: &CbowConfig,
) -> Result<(VertexEmbeddingMatrix, CbowNetwork, TrainingReport)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("no context samples to train on".into()));
    }
    let mut net = CbowNetwork::init(schema, cfg)?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng::stream(cfg.seed, "cbow/split"));
    let n_hold = if samples.len() >= 2 && cfg.holdout_fraction > 0.0 {
        ((samples.len() as f64 * cfg.holdout_fraction).round() as usize).clamp(1, samples.len() - 1)
    } else {
        0
    };
    let heldout: Vec<&ContextSample> = order[..n_hold].iter().map(|&i| &samples[i]).collect();
    let mut train: Vec<usize> = order[n_hold..].to_vec();

    let mut adam = Adam::new(&net, cfg.learning_rate);
    let mut shuffle_rng = rng::stream(cfg.seed, "cbow/shuffle");
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in train.chunks(cfg.batch_size) {
            let batch: Vec<&ContextSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (loss, grad) = net.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss;
            adam.step(&mut net, &grad, 1.0 / batch.len() as f64);
        }
        let loss = total / train.len() as f64;
        if !loss.is_finite() || net.embedding.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        epochs.push(EpochStats { epoch, loss, heldout_accuracy: evaluate_accuracy(&net, &heldout).map(|a| a.mean) });
    }

    let dataset_id = dataset_digest(samples);
    let config_hash = cfg.config_hash();
    let report = TrainingReport {
        epochs,
        train_samples: train.len(),
        heldout_samples: heldout.len(),
        heldout_accuracy: evaluate_accuracy(&net, &heldout),
        dataset_id: dataset_id.clone(),
        config_hash: config_hash.clone(),
    };
    let w = VertexEmbeddingMatrix::new(
        net.embedding.clone(),
        schema,
        Provenance::Trained { dataset_id, config_hash, seed: cfg.seed },
    )?;
    Ok((w, net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::embedding::random_embedding as rand_w;

    fn schema() -> AttributeSchema {
        AttributeSchema::uniform("t", &[3, 2]).unwrap()
    }

    fn graph(attrs: Vec<Vec<usize>>, edges: &[(usize, usize)]) -> MolecularGraph {
        MolecularGraph::new(&schema(), attrs, edges).unwrap()
    }

    #[test]
    fn contexts_follow_adjacency() {
        let edge = graph(vec![vec![0, 0], vec![1, 1]], &[(0, 1)]);
        let c = extract_contexts(&[edge], &schema()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|s| s.context.len() == 1));

        let path = graph(vec![vec![0, 0], vec![1, 1], vec![2, 0]], &[(0, 1), (1, 2)]);
        let c = extract_contexts(std::slice::from_ref(&path), &schema()).unwrap();
        let mid = &c[1];
        assert_eq!(mid.target, one_hot(&path, &schema(), 1).unwrap());
        assert_eq!(mid.context, vec![one_hot(&path, &schema(), 0).unwrap(), one_hot(&path, &schema(), 2).unwrap()]);

        let star = graph(vec![vec![0, 0]; 5], &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let c = extract_contexts(&[star], &schema()).unwrap();
        assert_eq!(c[0].context.len(), 4);

        let isolated = graph(vec![vec![0, 0]; 3], &[(0, 1)]);
        assert_eq!(extract_contexts(&[isolated], &schema()).unwrap().len(), 2);
    }

    #[test]
    fn config_validation() {
        let bad = CbowConfig { hidden: vec![], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = CbowConfig { learning_rate: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(CbowConfig::default().validate().is_ok());
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let g = graph(vec![vec![0, 0], vec![1, 1], vec![2, 0]], &[(0, 1), (1, 2)]);
        let samples = extract_contexts(&[g], &schema()).unwrap();
        let cfg = CbowConfig { r: 4, hidden: vec![3], epochs: 0, seed: 42, ..Default::default() };
        let (w, report) = train_cbow(&schema(), &samples, &cfg).unwrap();
        let init = rand_w(&schema(), 4, EntryDistribution::Gaussian, rng::derive_seed(42, "cbow/embedding")).unwrap();
        assert_eq!(w.weights(), init.weights());
        assert!(report.epochs.is_empty());
    }

    #[test]
    fn mean_of_single_neighbor_is_its_embedding() {
        let g = graph(vec![vec![2, 1], vec![0, 0]], &[(0, 1)]);
        let samples = extract_contexts(std::slice::from_ref(&g), &schema()).unwrap();
        let cfg = CbowConfig { r: 5, hidden: vec![4], aggregator: Aggregator::Mean, ..Default::default() };
        let net = CbowNetwork::init(&schema(), &cfg).unwrap();
        let x = net.aggregate(&[&samples[0]]);
        let w = VertexEmbeddingMatrix::new(net.embedding.clone(), &schema(), Provenance::External { description: "t".into() }).unwrap();
        let f = crate::vertex::embed_vertices(&g, &w).unwrap();
        assert_eq!(x.row(0), f.column(1));
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let g = graph(vec![vec![0, 0], vec![1, 1], vec![2, 0], vec![0, 1]], &[(0, 1), (1, 2), (2, 3)]);
        let samples = extract_contexts(&vec![g; 20], &schema()).unwrap();
        let cfg = CbowConfig { r: 8, hidden: vec![8], epochs: 30, batch_size: 16, learning_rate: 1e-2, seed: 5, ..Default::default() };
        let (w1, r1) = train_cbow(&schema(), &samples, &cfg).unwrap();
        let (w2, r2) = train_cbow(&schema(), &samples, &cfg).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(r1, r2);
        assert!(r1.epochs.last().unwrap().loss < r1.epochs[0].loss);
        assert!(matches!(w1.provenance(), Provenance::Trained { .. }));
    }

    #[test]
    fn divergence_is_reported() {
        let g = graph(vec![vec![0, 0], vec![1, 1], vec![2, 0]], &[(0, 1), (1, 2)]);
        let samples = extract_contexts(&vec![g; 10], &schema()).unwrap();
        let cfg = CbowConfig { r: 4, hidden: vec![4], epochs: 5, learning_rate: 1e300, ..Default::default() };
        match train_cbow(&schema(), &samples, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(train_cbow(&schema(), &[], &CbowConfig::default()).is_err());
    }
}
