//! Synthetic graph generators used by tests, benchmarks and the CLI demos.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MolecularGraph;
use crate::rng::{derive_seed, seeded, stream};
use crate::schema::AttributeSchema;
use crate::theory::count_statistics;

fn random_rows<R: Rng>(schema: &AttributeSchema, m: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let cards = schema.cardinalities();
    (0..m).map(|_| cards.iter().map(|&k| rng.random_range(0..k)).collect()).collect()
}

fn er_edges<R: Rng>(m: usize, density: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Uniform random attributes with Erdős–Rényi edges.
pub fn random_graph<R: Rng>(schema: &AttributeSchema, m: usize, density: f64, rng: &mut R) -> MolecularGraph {
    let rows = random_rows(schema, m, rng);
    let edges = er_edges(m, density, rng);
    MolecularGraph::new(schema, rows, &edges).expect("generated graph is valid")
}

/// Every attribute takes pairwise distinct values across the vertices, so
/// every walk without repeated vertices has distinct values per attribute.
pub fn random_distinct_graph<R: Rng>(
    schema: &AttributeSchema,
    m: usize,
    density: f64,
    rng: &mut R,
) -> Result<MolecularGraph> {
    let cards = schema.cardinalities();
    let kmin = cards.iter().copied().min().unwrap_or(0);
    if m > kmin {
        return Err(Error::Config(format!("{m} vertices cannot take distinct values from a cardinality of {kmin}")));
    }
    let cols: Vec<Vec<usize>> = cards
        .iter()
        .map(|&k| {
            let mut vals: Vec<usize> = (0..k).collect();
            vals.shuffle(rng);
            vals.truncate(m);
            vals
        })
        .collect();
    let rows = (0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    MolecularGraph::new(schema, rows, &er_edges(m, density, rng))
}

/// Uniform random recursive tree on `m` vertices.
pub fn random_tree<R: Rng>(m: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    (1..m).map(|i| (order[rng.random_range(0..i)], order[i])).collect()
}

/// Tree skeleton with maximum degree 4 plus a few ring closures, the
/// shape of a small organic molecule.
pub fn molecule_like<R: Rng>(schema: &AttributeSchema, m: usize, rng: &mut R) -> MolecularGraph {
    let mut degree = vec![0usize; m];
    let mut edges = Vec::with_capacity(m + m / 6);
    for v in 1..m {
        let candidates: Vec<usize> = (0..v).filter(|&u| degree[u] < 4).collect();
        let u = candidates[rng.random_range(0..candidates.len())];
        degree[u] += 1;
        degree[v] += 1;
        edges.push((u, v));
    }
    for _ in 0..m / 6 {
        let u = rng.random_range(0..m);
        let v = rng.random_range(0..m);
        if u != v && degree[u] < 4 && degree[v] < 4 && !edges.contains(&(u.min(v), u.max(v))) && !edges.contains(&(u.max(v), u.min(v))) {
            degree[u] += 1;
            degree[v] += 1;
            edges.push((u.min(v), u.max(v)));
        }
    }
    MolecularGraph::new(schema, random_rows(schema, m, rng), &edges).expect("generated graph is valid")
}

/// Graphs in which every vertex carries the same attribute row, so each
/// vertex's attributes are determined by any neighbor.
pub fn predictable_corpus(schema: &AttributeSchema, n: usize, seed: u64) -> Vec<MolecularGraph> {
    let mut rng = stream(seed, "synth/predictable");
    (0..n)
        .map(|i| {
            let m = rng.random_range(4..=12);
            let row = random_rows(schema, 1, &mut rng).remove(0);
            let edges = random_tree(m, &mut rng);
            MolecularGraph::new(schema, vec![row; m], &edges).expect("valid").with_id(format!("p{i}"))
        })
        .collect()
}

/// Does some simple path through four vertices cover exactly the values
/// `{0, 1, 2, 3}`? Vertices carry distinct values in this task.
fn has_planted_path(g: &MolecularGraph) -> bool {
    fn dfs(g: &MolecularGraph, v: usize, depth: usize, seen: &mut Vec<usize>) -> bool {
        if g.attr(v, 0) > 3 {
            return false;
        }
        seen.push(v);
        let found = depth == 4
            || g.neighbors(v).iter().any(|&u| !seen.contains(&u) && dfs(g, u, depth + 1, seen));
        seen.pop();
        found
    }
    (0..g.num_vertices()).any(|v| dfs(g, v, 1, &mut Vec::new()))
}

/// Schema for [`planted_walk_corpus`]: one attribute with eight values.
pub fn planted_schema() -> AttributeSchema {
    AttributeSchema::uniform("planted-walk", &[8]).expect("valid schema")
}

/// Eight-vertex trees carrying each value `0..8` exactly once. The label
/// is 1 when values `0..4` lie along a single path. Every graph has the
/// same value histogram, so single-vertex statistics carry no signal.
/// Classes are balanced.
pub fn planted_walk_corpus(n: usize, seed: u64) -> Vec<MolecularGraph> {
    let schema = planted_schema();
    let mut rng = stream(seed, "synth/planted");
    let mut out = Vec::with_capacity(n);
    let mut positives = 0;
    while out.len() < n {
        let negatives = out.len() - positives;
        let want_positive = positives < n / 2 && (negatives >= n - n / 2 || rng.random_bool(0.5));
        let mut values: Vec<usize> = (0..8).collect();
        values.shuffle(&mut rng);
        let edges = if want_positive {
            // a path through 0..4 in random order, other vertices attached at random
            let mut core: Vec<usize> = (0..4).collect();
            core.shuffle(&mut rng);
            values = core.iter().copied().chain(values.into_iter().filter(|&v| v > 3)).collect();
            let mut e: Vec<(usize, usize)> = (1..4).map(|i| (i - 1, i)).collect();
            for v in 4..8 {
                e.push((rng.random_range(0..v), v));
            }
            e
        } else {
            random_tree(8, &mut rng)
        };
        let rows = values.iter().map(|&v| vec![v]).collect();
        let g = MolecularGraph::new(&schema, rows, &edges).expect("valid");
        let label = has_planted_path(&g);
        if label != want_positive {
            continue;
        }
        positives += usize::from(label);
        out.push(g.with_id(format!("w{}", out.len())).with_label(Some(f64::from(u8::from(label)))));
    }
    out
}

/// Settings for [`linear_count_task`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearCountTask {
    pub graphs: usize,
    pub k: usize,
    pub m: usize,
    pub density: f64,
    pub label_noise: f64,
}

impl Default for LinearCountTask {
    fn default() -> Self {
        LinearCountTask { graphs: 2000, k: 8, m: 12, density: 0.25, label_noise: 0.1 }
    }
}

/// A corpus labeled by thresholding a fixed random linear functional of
/// the levels-1-and-2 count statistics, with a fraction of labels flipped.
/// Returns the schema, the graphs and each graph's count vector.
pub fn linear_count_task(task: &LinearCountTask, seed: u64) -> Result<(AttributeSchema, Vec<MolecularGraph>, Vec<Vec<f64>>)> {
    let schema = AttributeSchema::uniform("linear-count", &[task.k])?;
    let mut rng = stream(seed, "synth/linear-count/graphs");
    let mut graphs = Vec::with_capacity(task.graphs);
    let mut counts = Vec::with_capacity(task.graphs);
    for _ in 0..task.graphs {
        let g = random_graph(&schema, task.m, task.density, &mut rng);
        let c = count_statistics(&g, &schema, 2)?;
        counts.push(c.bundle().into_iter().map(|x| x as f64).collect::<Vec<f64>>());
        graphs.push(g);
    }
    let dim = counts.first().map_or(0, Vec::len);
    let mut trng = seeded(derive_seed(seed, "synth/linear-count/theta"));
    let theta: Vec<f64> = (0..dim).map(|_| trng.random_range(-1.0..1.0)).collect();
    let scores: Vec<f64> = counts.iter().map(|c| c.iter().zip(&theta).map(|(a, b)| a * b).sum()).collect();
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let tau = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let mut nrng = stream(seed, "synth/linear-count/noise");
    let graphs = graphs
        .into_iter()
        .zip(&scores)
        .enumerate()
        .map(|(i, (g, &s))| {
            let mut y = s > tau;
            if nrng.random_bool(task.label_noise) {
                y = !y;
            }
            g.with_id(format!("c{i}")).with_label(Some(f64::from(u8::from(y))))
        })
        .collect();
    Ok((schema, graphs, counts))
}
