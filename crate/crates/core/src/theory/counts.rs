use serde::{Deserialize, Serialize};

use super::colex::{binomial, rank_unsorted};
use crate::error::Result;
use crate::graph::{check_schema, MolecularGraph};
use crate::schema::AttributeSchema;

/// Bags of `n`-cooccurrences for `n = 1..=t`.
///
/// `levels[n - 1][j]` is indexed by the colex rank of an `n`-subset of the
/// values of attribute `j`, so it has `C(k_j, n)` entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountStatistics {
    pub cardinalities: Vec<usize>,
    pub levels: Vec<Vec<Vec<u64>>>,
    /// Walks counted at each level.
    pub walks: Vec<u64>,
    /// Path-variant walks skipped because some attribute repeats a value.
    pub excluded: Vec<u64>,
}

impl CountStatistics {
    pub fn t(&self) -> usize {
        self.levels.len()
    }

    pub fn block(&self, n: usize, attribute: usize) -> &[u64] {
        &self.levels[n - 1][attribute]
    }

    /// `c_(n)`: the per-attribute blocks concatenated.
    pub fn level(&self, n: usize) -> Vec<u64> {
        self.levels[n - 1].concat()
    }

    /// `c_[T]`: every level concatenated.
    pub fn bundle(&self) -> Vec<u64> {
        (1..=self.t()).flat_map(|n| self.level(n)).collect()
    }

    pub fn dim(&self, n: usize) -> usize {
        self.cardinalities.iter().map(|&k| binomial(k, n)).sum()
    }

    pub fn sparsity(&self, n: usize) -> usize {
        self.levels[n - 1].iter().flatten().filter(|&&c| c > 0).count()
    }
}

struct Walker<'a> {
    g: &'a MolecularGraph,
    t: usize,
    classes: Vec<usize>,
    used_class: Vec<bool>,
    // value multiplicities per attribute along the current prefix
    used_value: Vec<Vec<u32>>,
    repeats: usize,
    stack: Vec<usize>,
    stats: CountStatistics,
}

impl Walker<'_> {
    fn push(&mut self, v: usize) {
        self.stack.push(v);
        self.used_class[self.classes[v]] = true;
        for j in 0..self.g.num_attributes() {
            let c = &mut self.used_value[j][self.g.attr(v, j)];
            if *c > 0 {
                self.repeats += 1;
            }
            *c += 1;
        }
    }

    fn pop(&mut self) {
        let v = self.stack.pop().expect("non-empty walk");
        self.used_class[self.classes[v]] = false;
        for j in 0..self.g.num_attributes() {
            let c = &mut self.used_value[j][self.g.attr(v, j)];
            *c -= 1;
            if *c > 0 {
                self.repeats -= 1;
            }
        }
    }

    fn record(&mut self) {
        let n = self.stack.len();
        if self.repeats > 0 {
            self.stats.excluded[n - 1] += 1;
            return;
        }
        self.stats.walks[n - 1] += 1;
        let mut values = Vec::with_capacity(n);
        for j in 0..self.g.num_attributes() {
            values.clear();
            values.extend(self.stack.iter().map(|&v| self.g.attr(v, j)));
            self.stats.levels[n - 1][j][rank_unsorted(&values)] += 1;
        }
    }

    fn visit(&mut self, v: usize) {
        self.push(v);
        self.record();
        // a repeated value persists in every extension, but those walks still
        // have to be tallied as excluded
        if self.stack.len() < self.t {
            let g = self.g;
            for &u in g.neighbors(v) {
                if !self.used_class[self.classes[u]] {
                    self.visit(u);
                }
            }
        }
        self.pop();
    }
}

/// Count statistics over path-variant walks of up to `t` vertices, both
/// directions counted. Walks whose vertices share a value in some attribute
/// are left out and tallied in `excluded`.
pub fn count_statistics(g: &MolecularGraph, schema: &AttributeSchema, t: usize) -> Result<CountStatistics> {
    check_schema(schema.fingerprint(), g.schema_fingerprint())?;
    let cards = schema.cardinalities();
    let m = g.num_vertices();

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

    let stats = CountStatistics {
        cardinalities: cards.clone(),
        levels: (1..=t).map(|n| cards.iter().map(|&k| vec![0; binomial(k, n)]).collect()).collect(),
        walks: vec![0; t],
        excluded: vec![0; t],
    };
    let mut w = Walker {
        g,
        t,
        used_class: vec![false; reps.len()],
        classes,
        used_value: cards.iter().map(|&k| vec![0; k]).collect(),
        repeats: 0,
        stack: Vec::with_capacity(t),
        stats,
    };
    if t > 0 {
        for v in 0..m {
            w.visit(v);
        }
    }
    Ok(w.stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_xyz() -> (AttributeSchema, MolecularGraph) {
        let s = AttributeSchema::uniform("s", &[3]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0], vec![1], vec![2]], &[(0, 1), (1, 2)]).unwrap();
        (s, g)
    }

    #[test]
    fn path_graph_pairs() {
        let (s, g) = path_xyz();
        let c = count_statistics(&g, &s, 3).unwrap();
        // colex pairs: {x,y}, {x,z}, {y,z}
        assert_eq!(c.level(2), vec![2, 0, 2]);
        assert_eq!(c.level(1), vec![1, 1, 1]);
        assert_eq!(c.level(3), vec![2]);
        assert_eq!(c.walks, vec![3, 4, 2]);
        assert_eq!(c.excluded, vec![0, 0, 0]);
        assert_eq!(c.sparsity(2), 2);
    }

    #[test]
    fn level_one_is_one_hot_sum() {
        let s = AttributeSchema::uniform("s", &[3, 2]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0, 1], vec![2, 1], vec![0, 0]], &[(0, 1)]).unwrap();
        let c = count_statistics(&g, &s, 1).unwrap();
        assert_eq!(c.level(1), vec![2, 0, 1, 1, 2]);
    }

    #[test]
    fn edgeless_graph() {
        let s = AttributeSchema::uniform("s", &[4]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0], vec![1], vec![2]], &[]).unwrap();
        let c = count_statistics(&g, &s, 3).unwrap();
        assert!(c.level(2).iter().chain(&c.level(3)).all(|&x| x == 0));
    }

    #[test]
    fn shared_value_is_excluded() {
        // rows differ, but attribute 1 repeats along the edge
        let s = AttributeSchema::uniform("s", &[3, 2]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0, 1], vec![1, 1]], &[(0, 1)]).unwrap();
        let c = count_statistics(&g, &s, 2).unwrap();
        assert_eq!(c.walks, vec![2, 0]);
        assert_eq!(c.excluded, vec![0, 2]);
    }

    #[test]
    fn small_cardinality_has_empty_blocks() {
        let s = AttributeSchema::uniform("s", &[2]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0], vec![1]], &[(0, 1)]).unwrap();
        let c = count_statistics(&g, &s, 3).unwrap();
        assert_eq!(c.dim(3), 0);
        assert!(c.level(3).is_empty());
    }
}
