use serde::{Deserialize, Serialize};

use super::colex::unrank;
use super::counts::{count_statistics, CountStatistics};
use super::sensing::BlockSensingMatrix;
use crate::error::{Error, Result};
use crate::graph::MolecularGraph;
use crate::ngram::{graph_embed_exact, graph_embed_with, EmbedOptions, WalkVariant};
use crate::schema::AttributeSchema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `max_d |f_(n) - T_(n) c_(n)|_d` for each level.
    pub max_abs_residual: Vec<f64>,
    /// Residual relative to `max(|f_(n)|_inf, 1)`.
    pub max_rel_residual: Vec<f64>,
    /// True when both sides were computed in exact integer arithmetic.
    pub exact: bool,
}

impl IdentityReport {
    pub fn holds(&self, rel_tol: f64) -> bool {
        if self.exact {
            self.max_abs_residual.iter().all(|&x| x == 0.0)
        } else {
            self.max_rel_residual.iter().all(|&x| x <= rel_tol)
        }
    }
}

/// `T_(n) c_(n)` without materializing `T_(n)`.
pub fn apply_level(b: &BlockSensingMatrix, c: &CountStatistics, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; b.r()];
    for j in 0..b.num_blocks() {
        let row = b.row_offsets()[j];
        for (rank, &count) in c.block(n, j).iter().enumerate() {
            if count == 0 {
                continue;
            }
            let col = b.hadamard_column(j, &unrank(rank, n));
            for (o, x) in out[row..row + col.len()].iter_mut().zip(col) {
                *o += count as f64 * x;
            }
        }
    }
    out
}

fn apply_level_exact(b: &BlockSensingMatrix, c: &CountStatistics, n: usize) -> Result<Vec<i128>> {
    let mut out = vec![0i128; b.r()];
    for j in 0..b.num_blocks() {
        let row = b.row_offsets()[j];
        let u = b.block(j);
        for (rank, &count) in c.block(n, j).iter().enumerate() {
            if count == 0 {
                continue;
            }
            let subset = unrank(rank, n);
            for i in 0..u.nrows() {
                let mut p = count as i128;
                for &a in &subset {
                    p = p.checked_mul(u[[i, a]] as i128).ok_or(Error::Overflow)?;
                }
                out[row + i] = out[row + i].checked_add(p).ok_or(Error::Overflow)?;
            }
        }
    }
    Ok(out)
}

/// Compares the path-variant embedding under `b` against `T_(n) c_(n)` for
/// `n = 1..=t`. Integer scales are checked exactly.
///
/// Fails with [`Error::Precondition`] when some path-variant walk repeats an
/// attribute value, since the count statistics are undefined there.
pub fn verify_identity(
    g: &MolecularGraph,
    schema: &AttributeSchema,
    b: &BlockSensingMatrix,
    t: usize,
) -> Result<IdentityReport> {
    let c = count_statistics(g, schema, t)?;
    if let Some(n) = c.excluded.iter().position(|&x| x > 0) {
        return Err(Error::Precondition(format!(
            "{} walk(s) of {} vertices repeat an attribute value",
            c.excluded[n],
            n + 1
        )));
    }
    let w = b.embedding(schema)?;
    let mut abs = Vec::with_capacity(t);
    let mut rel = Vec::with_capacity(t);
    if b.is_integral() {
        let f = graph_embed_exact(g, &w, t, WalkVariant::Path)?;
        for n in 1..=t {
            let tc = apply_level_exact(b, &c, n)?;
            let res = f[n - 1].iter().zip(&tc).map(|(a, b)| (a - b).unsigned_abs()).max().unwrap_or(0);
            let scale = f[n - 1].iter().map(|x| x.unsigned_abs()).max().unwrap_or(0).max(1);
            abs.push(res as f64);
            rel.push(res as f64 / scale as f64);
        }
        return Ok(IdentityReport { max_abs_residual: abs, max_rel_residual: rel, exact: true });
    }
    let f = graph_embed_with(g, &w, &EmbedOptions { t, variant: WalkVariant::Path, ..Default::default() })?;
    for n in 1..=t {
        let tc = apply_level(b, &c, n);
        let fl = f.level(n);
        let res = fl.iter().zip(&tc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = fl.iter().map(|x| x.abs()).fold(1.0, f64::max);
        abs.push(res);
        rel.push(res / scale);
    }
    Ok(IdentityReport { max_abs_residual: abs, max_rel_residual: rel, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::sensing::{build_sensing, Allocation};
    use ndarray::array;

    #[test]
    fn hand_expanded_path() {
        let s = AttributeSchema::uniform("s", &[3]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0], vec![1], vec![2]], &[(0, 1), (1, 2)]).unwrap();
        let mut b = build_sensing(&s, 2, 0, Allocation::Equal, 1.0).unwrap();
        b.set_block(0, array![[1.0, 1.0, -1.0], [1.0, -1.0, 1.0]]).unwrap();
        let c = count_statistics(&g, &s, 2).unwrap();
        assert_eq!(apply_level(&b, &c, 2), vec![0.0, -4.0]);
        let w = b.embedding(&s).unwrap();
        let f = crate::ngram::graph_embed(&g, &w, 2).unwrap();
        assert_eq!(f.level(2), &[0.0, -4.0]);
        let rep = verify_identity(&g, &s, &b, 2).unwrap();
        assert!(rep.exact && rep.holds(0.0));
    }

    #[test]
    fn float_scale_within_tolerance() {
        let s = AttributeSchema::uniform("s", &[5, 4]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0, 1], vec![3, 2], vec![4, 0], vec![1, 3]], &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let b = build_sensing(&s, 12, 4, Allocation::Proportional, 0.37).unwrap();
        let rep = verify_identity(&g, &s, &b, 3).unwrap();
        assert!(!rep.exact);
        assert!(rep.holds(1e-10), "{rep:?}");
    }

    #[test]
    fn repeated_value_is_precondition_failure() {
        let s = AttributeSchema::uniform("s", &[3, 2]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0, 1], vec![1, 1]], &[(0, 1)]).unwrap();
        let b = build_sensing(&s, 4, 0, Allocation::Equal, 1.0).unwrap();
        assert!(matches!(verify_identity(&g, &s, &b, 2), Err(Error::Precondition(_))));
        assert!(verify_identity(&g, &s, &b, 1).is_ok());
    }
}
