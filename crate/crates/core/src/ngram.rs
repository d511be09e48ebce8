//! N-gram graph embeddings.
//!
//! Level `n` sums, over every walk of `n` vertices, the element-wise product
//! of the walk's vertex embeddings. [`graph_embed`] computes all levels with
//! the latent-vector recurrence `F_n = (F_{n-1} A) ⊙ F` in `O(rT(m + m_e))`;
//! [`oracle_embed`] enumerates walks explicitly and exists to check it.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureMatrix, MissingRow};
use crate::graph::{check_schema, MolecularGraph};
use crate::scalar::{to_integers, Scalar};
use crate::vertex::{vertex_rows, VertexEmbeddingMatrix};

pub const DEFAULT_T: usize = 6;
pub const DEFAULT_ORACLE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkVariant {
    /// Every vertex sequence with consecutive adjacency.
    #[default]
    Walk,
    /// Walks with no two vertices sharing an identical attribute row.
    Path,
    /// Walks with no repeated vertex.
    SimplePath,
}

/// Optional per-level rescaling of the raw walk sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelScaling {
    #[default]
    None,
    /// Divide level `n` by `n!`.
    InverseFactorial,
    /// Divide level `n` by the number of contributing walks.
    InverseCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    /// Scale the concatenated vector to unit Euclidean norm.
    UnitL2,
    /// Scale each level to unit Euclidean norm.
    UnitL2PerLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedOptions {
    pub t: usize,
    pub variant: WalkVariant,
    pub scaling: LevelScaling,
    pub normalization: Normalization,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            t: DEFAULT_T,
            variant: WalkVariant::Walk,
            scaling: LevelScaling::None,
            normalization: Normalization::None,
        }
    }
}

impl EmbedOptions {
    pub fn with_t(t: usize) -> Self {
        EmbedOptions { t, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramEmbedding {
    /// `levels[n - 1]` is `f_(n)`.
    pub levels: Vec<Vec<f64>>,
    pub variant: WalkVariant,
    pub scaling: LevelScaling,
    pub normalization: Normalization,
}

impl NGramEmbedding {
    pub fn t(&self) -> usize {
        self.levels.len()
    }

    /// `f_(n)`, 1-based.
    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n - 1]
    }

    /// `f_G = [f_(1); ...; f_(T)]`.
    pub fn concatenated(&self) -> Vec<f64> {
        self.levels.concat()
    }
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Config("walk length T must be >= 1".into()));
    }
    Ok(())
}

/// Raw walk levels by the latent-vector recurrence. `rows` is `m x r`
/// row-major; returns `t` level vectors of length `r`.
fn recurrence<S: Scalar>(rows: &[S], r: usize, edges: &[(usize, usize)], t: usize) -> Result<Vec<Vec<S>>> {
    let m = rows.len().checked_div(r).unwrap_or(0);
    let column_sum = |lat: &[S]| -> Result<Vec<S>> {
        let mut out = vec![S::zero(); r];
        for i in 0..m {
            for d in 0..r {
                out[d] = out[d].add(lat[i * r + d])?;
            }
        }
        Ok(out)
    };
    let mut levels = Vec::with_capacity(t);
    levels.push(column_sum(rows)?);
    let mut prev = rows.to_vec();
    let mut next = vec![S::zero(); rows.len()];
    for _ in 2..=t {
        next.iter_mut().for_each(|x| *x = S::zero());
        for &(u, v) in edges {
            for d in 0..r {
                next[u * r + d] = next[u * r + d].add(prev[v * r + d])?;
                next[v * r + d] = next[v * r + d].add(prev[u * r + d])?;
            }
        }
        for (x, &f) in next.iter_mut().zip(rows) {
            *x = x.mul(f)?;
        }
        levels.push(column_sum(&next)?);
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(levels)
}

/// Vertex classes for the filtered variants: two vertices may not share a
/// walk when they share a class.
fn vertex_classes(g: &MolecularGraph, variant: WalkVariant) -> Vec<usize> {
    let m = g.num_vertices();
    match variant {
        WalkVariant::Walk | WalkVariant::SimplePath => (0..m).collect(),
        WalkVariant::Path => {
            let mut reps: Vec<usize> = Vec::new();
            let classes: Vec<usize> = (0..m)
                .map(|i| match reps.iter().position(|&rep| g.attr_row(rep) == g.attr_row(i)) {
                    Some(c) => c,
                    None => {
                        reps.push(i);
                        reps.len() - 1
                    }
                })
                .collect();
            classes
        }
    }
}

/// Depth-first accumulation over walks whose vertices have pairwise distinct
/// classes. Prunes as soon as a class repeats, so cost tracks the number of
/// surviving walks rather than `m^T`.
fn filtered_dfs<S: Scalar>(
    g: &MolecularGraph,
    rows: &[S],
    r: usize,
    t: usize,
    classes: &[usize],
) -> Result<(Vec<Vec<S>>, Vec<u64>)> {
    let num_classes = classes.iter().copied().max().map_or(0, |c| c + 1);
    let mut levels = vec![vec![S::zero(); r]; t];
    let mut counts = vec![0u64; t];
    let mut used = vec![false; num_classes];
    // products[d] holds the product along the current walk prefix of d+1 vertices
    let mut products = vec![vec![S::zero(); r]; t];

    struct Ctx<'a, S> {
        g: &'a MolecularGraph,
        rows: &'a [S],
        r: usize,
        t: usize,
        classes: &'a [usize],
    }

    fn visit<S: Scalar>(
        ctx: &Ctx<'_, S>,
        vertex: usize,
        depth: usize,
        used: &mut [bool],
        products: &mut [Vec<S>],
        levels: &mut [Vec<S>],
        counts: &mut [u64],
    ) -> Result<()> {
        let r = ctx.r;
        let row = &ctx.rows[vertex * r..(vertex + 1) * r];
        if depth == 0 {
            products[0].copy_from_slice(row);
        } else {
            let (head, tail) = products.split_at_mut(depth);
            for d in 0..r {
                tail[0][d] = head[depth - 1][d].mul(row[d])?;
            }
        }
        for d in 0..r {
            levels[depth][d] = levels[depth][d].add(products[depth][d])?;
        }
        counts[depth] += 1;
        if depth + 1 == ctx.t {
            return Ok(());
        }
        used[ctx.classes[vertex]] = true;
        for &next in ctx.g.neighbors(vertex) {
            if !used[ctx.classes[next]] {
                visit(ctx, next, depth + 1, used, products, levels, counts)?;
            }
        }
        used[ctx.classes[vertex]] = false;
        Ok(())
    }

    let ctx = Ctx { g, rows, r, t, classes };
    for start in 0..g.num_vertices() {
        visit(&ctx, start, 0, &mut used, &mut products, &mut levels, &mut counts)?;
    }
    Ok((levels, counts))
}

fn raw_levels<S: Scalar>(
    g: &MolecularGraph,
    rows: &[S],
    r: usize,
    t: usize,
    variant: WalkVariant,
) -> Result<Vec<Vec<S>>> {
    match variant {
        WalkVariant::Walk => recurrence(rows, r, g.edges(), t),
        _ => filtered_dfs(g, rows, r, t, &vertex_classes(g, variant)).map(|(levels, _)| levels),
    }
}

/// Number of contributing walks per level.
pub fn walk_counts(g: &MolecularGraph, t: usize, variant: WalkVariant) -> Result<Vec<u64>> {
    check_t(t)?;
    let ones = vec![1i128; g.num_vertices()];
    let levels = raw_levels(g, &ones, 1, t, variant)?;
    Ok(levels.into_iter().map(|l| l[0] as u64).collect())
}

/// Walk-variant embedding with no rescaling or normalization.
pub fn graph_embed(g: &MolecularGraph, w: &VertexEmbeddingMatrix, t: usize) -> Result<NGramEmbedding> {
    graph_embed_with(g, w, &EmbedOptions::with_t(t))
}

pub fn graph_embed_with(g: &MolecularGraph, w: &VertexEmbeddingMatrix, opts: &EmbedOptions) -> Result<NGramEmbedding> {
    check_t(opts.t)?;
    let rows = vertex_rows(g, w)?;
    let r = w.dim();
    let mut levels = raw_levels(g, rows.as_slice().expect("standard layout"), r, opts.t, opts.variant)?;
    apply_scaling(g, &mut levels, opts)?;
    apply_normalization(&mut levels, opts.normalization);
    Ok(NGramEmbedding {
        levels,
        variant: opts.variant,
        scaling: opts.scaling,
        normalization: opts.normalization,
    })
}

/// Exact integer embedding; every entry of `w` must be an integer.
pub fn graph_embed_exact(
    g: &MolecularGraph,
    w: &VertexEmbeddingMatrix,
    t: usize,
    variant: WalkVariant,
) -> Result<Vec<Vec<i128>>> {
    check_t(t)?;
    check_schema(w.fingerprint(), g.schema_fingerprint())?;
    let rows = integer_rows(g, w)?;
    raw_levels(g, &rows, w.dim(), t, variant)
}

pub(crate) fn integer_rows(g: &MolecularGraph, w: &VertexEmbeddingMatrix) -> Result<Vec<i128>> {
    check_schema(w.fingerprint(), g.schema_fingerprint())?;
    let wi = to_integers(w.weights())?;
    let r = w.dim();
    let mut rows = vec![0i128; g.num_vertices() * r];
    for i in 0..g.num_vertices() {
        for (j, &off) in w.block_offsets().iter().enumerate() {
            let col = off + g.attr(i, j);
            for d in 0..r {
                rows[i * r + d] = rows[i * r + d].checked_add(wi[[d, col]]).ok_or(Error::Overflow)?;
            }
        }
    }
    Ok(rows)
}

fn apply_scaling(g: &MolecularGraph, levels: &mut [Vec<f64>], opts: &EmbedOptions) -> Result<()> {
    match opts.scaling {
        LevelScaling::None => {}
        LevelScaling::InverseFactorial => {
            let mut fact = 1.0;
            for (i, level) in levels.iter_mut().enumerate() {
                fact *= (i + 1) as f64;
                level.iter_mut().for_each(|x| *x /= fact);
            }
        }
        LevelScaling::InverseCount => {
            let counts = walk_counts(g, opts.t, opts.variant)?;
            for (level, &c) in levels.iter_mut().zip(&counts) {
                if c > 0 {
                    level.iter_mut().for_each(|x| *x /= c as f64);
                }
            }
        }
    }
    Ok(())
}

fn unit(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn apply_normalization(levels: &mut [Vec<f64>], normalization: Normalization) {
    match normalization {
        Normalization::None => {}
        Normalization::UnitL2PerLevel => levels.iter_mut().for_each(|l| unit(l)),
        Normalization::UnitL2 => {
            let norm = levels.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                levels.iter_mut().flatten().for_each(|x| *x /= norm);
            }
        }
    }
}

/// How the oracle treats a walk and its reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleDirection {
    /// Enumerate both orientations separately.
    #[default]
    Both,
    /// Keep the lexicographically smaller orientation and count it twice
    /// (palindromes once).
    CanonicalDoubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub cap: usize,
    pub direction: OracleDirection,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { cap: DEFAULT_ORACLE_CAP, direction: OracleDirection::Both }
    }
}

/// Brute-force enumeration over every vertex sequence in `[0, m)^n`.
fn oracle_levels<S: Scalar>(
    g: &MolecularGraph,
    rows: &[S],
    r: usize,
    t: usize,
    variant: WalkVariant,
    opts: &OracleOptions,
) -> Result<Vec<Vec<S>>> {
    let m = g.num_vertices();
    if m > opts.cap {
        return Err(Error::EnumerationCap { num_vertices: m, cap: opts.cap });
    }
    let classes = vertex_classes(g, variant);
    let filtered = variant != WalkVariant::Walk;
    let two = S::from_count(2);
    let mut levels = Vec::with_capacity(t);
    for n in 1..=t {
        let mut sum = vec![S::zero(); r];
        if m == 0 {
            levels.push(sum);
            continue;
        }
        let mut seq = vec![0usize; n];
        'outer: loop {
            let adjacent = seq.windows(2).all(|p| g.has_edge(p[0], p[1]));
            let distinct = !filtered || {
                let mut cs: Vec<usize> = seq.iter().map(|&v| classes[v]).collect();
                cs.sort_unstable();
                cs.windows(2).all(|p| p[0] != p[1])
            };
            if adjacent && distinct {
                let weight = match opts.direction {
                    OracleDirection::Both => Some(None),
                    OracleDirection::CanonicalDoubled => {
                        let rev: Vec<usize> = seq.iter().rev().copied().collect();
                        match seq.as_slice().cmp(rev.as_slice()) {
                            std::cmp::Ordering::Less => Some(Some(two)),
                            std::cmp::Ordering::Equal => Some(None),
                            std::cmp::Ordering::Greater => None,
                        }
                    }
                };
                if let Some(weight) = weight {
                    for d in 0..r {
                        let mut p = rows[seq[0] * r + d];
                        for &v in &seq[1..] {
                            p = p.mul(rows[v * r + d])?;
                        }
                        if let Some(w) = weight {
                            p = p.mul(w)?;
                        }
                        sum[d] = sum[d].add(p)?;
                    }
                }
            }
            // odometer increment
            for pos in (0..n).rev() {
                seq[pos] += 1;
                if seq[pos] < m {
                    continue 'outer;
                }
                seq[pos] = 0;
            }
            break;
        }
        levels.push(sum);
    }
    Ok(levels)
}

/// Reference embedding by explicit enumeration. Raw sums, no normalization.
pub fn oracle_embed(
    g: &MolecularGraph,
    w: &VertexEmbeddingMatrix,
    t: usize,
    variant: WalkVariant,
) -> Result<NGramEmbedding> {
    oracle_embed_with(g, w, t, variant, &OracleOptions::default())
}

pub fn oracle_embed_with(
    g: &MolecularGraph,
    w: &VertexEmbeddingMatrix,
    t: usize,
    variant: WalkVariant,
    opts: &OracleOptions,
) -> Result<NGramEmbedding> {
    check_t(t)?;
    let rows = vertex_rows(g, w)?;
    let levels = oracle_levels(g, rows.as_slice().expect("standard layout"), w.dim(), t, variant, opts)?;
    Ok(NGramEmbedding { levels, variant, scaling: LevelScaling::None, normalization: Normalization::None })
}

pub fn oracle_embed_exact(
    g: &MolecularGraph,
    w: &VertexEmbeddingMatrix,
    t: usize,
    variant: WalkVariant,
    opts: &OracleOptions,
) -> Result<Vec<Vec<i128>>> {
    check_t(t)?;
    let rows = integer_rows(g, w)?;
    oracle_levels(g, &rows, w.dim(), t, variant, opts)
}

/// Embeds every graph, in input order, across worker threads. A graph that
/// fails becomes a NaN row and is listed in the manifest.
pub fn embed_corpus(
    graphs: &[MolecularGraph],
    w: &VertexEmbeddingMatrix,
    opts: &EmbedOptions,
    seed: u64,
) -> Result<FeatureMatrix> {
    check_t(opts.t)?;
    let r = w.dim();
    let width = opts.t * r;
    let results: Vec<Result<Vec<f64>>> =
        graphs.par_iter().map(|g| graph_embed_with(g, w, opts).map(|e| e.concatenated())).collect();

    let mut data = Array2::from_elem((graphs.len(), width), f64::NAN);
    let mut missing = Vec::new();
    let ids: Vec<String> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| g.id().map_or_else(|| format!("g{i}"), str::to_string))
        .collect();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => data.row_mut(i).assign(&ndarray::ArrayView1::from(&row)),
            Err(e) => missing.push(MissingRow { index: i, id: ids[i].clone(), error: e.to_string() }),
        }
    }
    let manifest = FeatureManifest {
        schema_id: w.schema_id().to_string(),
        schema_fingerprint: w.fingerprint(),
        embedding: w.provenance().clone(),
        r,
        t: opts.t,
        variant: opts.variant,
        scaling: opts.scaling,
        normalization: opts.normalization,
        seed,
        num_graphs: graphs.len(),
        width,
        ids,
        labels: graphs.iter().map(MolecularGraph::label).collect(),
        missing,
        config: serde_json::Value::Null,
        input_hashes: Default::default(),
    };
    Ok(FeatureMatrix { data, manifest })
}
