use ndarray::{s, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::colex::{binomial, unrank};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::schema::{AttributeSchema, Fingerprint};
use crate::vertex::{Provenance, VertexEmbeddingMatrix};

/// Largest operator, in entries, that [`BlockSensingMatrix::level_operator`]
/// will materialize.
pub const OPERATOR_ENTRY_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allocation {
    /// `r_j` proportional to `k_j`.
    #[default]
    Proportional,
    Equal,
}

/// Splits `r` rows across blocks. Every block gets at least one row.
pub fn allocate_rows(cards: &[usize], r: usize, allocation: Allocation) -> Result<Vec<usize>> {
    let s = cards.len();
    if r < s {
        return Err(Error::Config(format!("r = {r} is smaller than the attribute count {s}")));
    }
    match allocation {
        Allocation::Equal => {
            let base = r / s;
            Ok((0..s).map(|j| base + usize::from(j < r % s)).collect())
        }
        Allocation::Proportional => {
            let total: usize = cards.iter().sum();
            let spare = r - s;
            let mut rows: Vec<usize> = cards.iter().map(|&k| 1 + spare * k / total).collect();
            let mut order: Vec<usize> = (0..s).collect();
            order.sort_by(|&a, &b| cards[b].cmp(&cards[a]).then(a.cmp(&b)));
            let mut left = r - rows.iter().sum::<usize>();
            for &j in order.iter().cycle() {
                if left == 0 {
                    break;
                }
                rows[j] += 1;
                left -= 1;
            }
            Ok(rows)
        }
    }
}

/// Block-diagonal sensing matrix with i.i.d. `scale * Rademacher` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSensingMatrix {
    blocks: Vec<Array2<f64>>,
    row_offsets: Vec<usize>,
    scale: f64,
    seed: u64,
    schema_id: String,
    fingerprint: Fingerprint,
}

pub fn build_sensing(
    schema: &AttributeSchema,
    r: usize,
    seed: u64,
    allocation: Allocation,
    scale: f64,
) -> Result<BlockSensingMatrix> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Config(format!("sensing scale must be positive, got {scale}")));
    }
    let rows = allocate_rows(&schema.cardinalities(), r, allocation)?;
    let mut rng = seeded(seed);
    let blocks: Vec<Array2<f64>> = rows
        .iter()
        .zip(schema.cardinalities())
        .map(|(&rj, kj)| Array2::from_shape_fn((rj, kj), |_| if rng.random::<bool>() { scale } else { -scale }))
        .collect();
    let mut row_offsets = Vec::with_capacity(rows.len());
    let mut acc = 0;
    for &rj in &rows {
        row_offsets.push(acc);
        acc += rj;
    }
    Ok(BlockSensingMatrix {
        blocks,
        row_offsets,
        scale,
        seed,
        schema_id: schema.id().to_string(),
        fingerprint: schema.fingerprint(),
    })
}

impl BlockSensingMatrix {
    /// `U^j`, of shape `r_j x k_j`.
    pub fn block(&self, j: usize) -> &Array2<f64> {
        &self.blocks[j]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_rows(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn r(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Whether every entry is an integer, so exact arithmetic applies.
    pub fn is_integral(&self) -> bool {
        self.blocks.iter().flatten().all(|x| x.fract() == 0.0)
    }

    /// Replaces `U^j` with an explicit block of the same shape.
    pub fn set_block(&mut self, j: usize, block: Array2<f64>) -> Result<()> {
        if block.dim() != self.blocks[j].dim() {
            return Err(Error::Dimension(format!(
                "block {j} is {:?}, replacement is {:?}",
                self.blocks[j].dim(),
                block.dim()
            )));
        }
        if block.iter().any(|x| !x.is_finite()) {
            return Err(Error::Dimension("non-finite sensing entry".into()));
        }
        self.blocks[j] = block;
        Ok(())
    }

    /// The assembled `r x K` block-diagonal matrix.
    pub fn assembled(&self) -> Array2<f64> {
        let k: usize = self.blocks.iter().map(|b| b.ncols()).sum();
        let mut w = Array2::zeros((self.r(), k));
        let mut col = 0;
        for (b, &row) in self.blocks.iter().zip(&self.row_offsets) {
            w.slice_mut(s![row..row + b.nrows(), col..col + b.ncols()]).assign(b);
            col += b.ncols();
        }
        w
    }

    pub fn embedding(&self, schema: &AttributeSchema) -> Result<VertexEmbeddingMatrix> {
        crate::graph::check_schema(self.fingerprint, schema.fingerprint())?;
        VertexEmbeddingMatrix::new(
            self.assembled(),
            schema,
            Provenance::BlockSensing { seed: self.seed, scale: self.scale, block_rows: self.block_rows() },
        )
    }

    /// Columns of `T_(n)` in block `j`.
    pub fn level_block_cols(&self, j: usize, n: usize) -> usize {
        binomial(self.blocks[j].ncols(), n)
    }

    pub fn level_cols(&self, n: usize) -> usize {
        (0..self.blocks.len()).map(|j| self.level_block_cols(j, n)).sum()
    }

    /// `u_{a_0} ⊙ ... ⊙ u_{a_{n-1}}` within block `j`.
    pub fn hadamard_column(&self, j: usize, subset: &[usize]) -> Vec<f64> {
        let b = &self.blocks[j];
        let mut out = vec![1.0; b.nrows()];
        for &a in subset {
            for (o, &x) in out.iter_mut().zip(b.column(a)) {
                *o *= x;
            }
        }
        out
    }

    /// `T_(n)` as a dense `r x sum_j C(k_j, n)` matrix.
    pub fn level_operator(&self, n: usize) -> Result<DenseOperator> {
        let cols = self.level_cols(n);
        let entries = self.r().saturating_mul(cols);
        if entries > OPERATOR_ENTRY_CAP {
            return Err(Error::OperatorTooLarge { entries, cap: OPERATOR_ENTRY_CAP });
        }
        let mut t = Array2::zeros((self.r(), cols));
        let mut col = 0;
        for j in 0..self.blocks.len() {
            let row = self.row_offsets[j];
            for rank in 0..self.level_block_cols(j, n) {
                let c = self.hadamard_column(j, &unrank(rank, n));
                for (i, x) in c.into_iter().enumerate() {
                    t[[row + i, col]] = x;
                }
                col += 1;
            }
        }
        Ok(DenseOperator(t))
    }

    /// `T_(n)` generated column by column on demand.
    pub fn lazy_operator(&self, n: usize) -> HadamardOperator<'_> {
        let mut col_offsets = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        col_offsets.push(0);
        for j in 0..self.blocks.len() {
            acc += self.level_block_cols(j, n);
            col_offsets.push(acc);
        }
        HadamardOperator { sensing: self, n, col_offsets }
    }

    /// Dense when under the entry cap, lazy otherwise.
    pub fn operator(&self, n: usize) -> Box<dyn SensingOperator + '_> {
        match self.level_operator(n) {
            Ok(d) => Box::new(d),
            Err(_) => Box::new(self.lazy_operator(n)),
        }
    }
}

/// A linear map `R^cols -> R^rows` exposed through its columns.
pub trait SensingOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Writes column `idx` into `out` (length `rows`).
    fn column_into(&self, idx: usize, out: &mut [f64]);

    fn column(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.column_into(idx, &mut out);
        out
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        let mut col = vec![0.0; self.rows()];
        for (idx, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                self.column_into(idx, &mut col);
                y.iter_mut().zip(&col).for_each(|(a, &c)| *a += xi * c);
            }
        }
        y
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut col = vec![0.0; self.rows()];
        (0..self.cols())
            .map(|idx| {
                self.column_into(idx, &mut col);
                col.iter().zip(y).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(pub Array2<f64>);

impl SensingOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.0.nrows()
    }

    fn cols(&self) -> usize {
        self.0.ncols()
    }

    fn column_into(&self, idx: usize, out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(self.0.column(idx)) {
            *o = x;
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.dot(&ndarray::ArrayView1::from(x)).to_vec()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.0.t().dot(&ndarray::ArrayView1::from(y)).to_vec()
    }
}

pub struct HadamardOperator<'a> {
    sensing: &'a BlockSensingMatrix,
    n: usize,
    col_offsets: Vec<usize>,
}

impl SensingOperator for HadamardOperator<'_> {
    fn rows(&self) -> usize {
        self.sensing.r()
    }

    fn cols(&self) -> usize {
        *self.col_offsets.last().unwrap_or(&0)
    }

    fn column_into(&self, idx: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let j = self.col_offsets.partition_point(|&o| o <= idx) - 1;
        let c = self.sensing.hadamard_column(j, &unrank(idx - self.col_offsets[j], self.n));
        let row = self.sensing.row_offsets[j];
        out[row..row + c.len()].copy_from_slice(&c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocations() {
        assert_eq!(allocate_rows(&[3, 3], 10, Allocation::Equal).unwrap(), vec![5, 5]);
        assert_eq!(allocate_rows(&[3, 3, 3], 10, Allocation::Equal).unwrap(), vec![4, 3, 3]);
        assert_eq!(allocate_rows(&[8], 10, Allocation::Proportional).unwrap(), vec![10]);
        let p = allocate_rows(&[10, 2], 12, Allocation::Proportional).unwrap();
        assert_eq!(p.iter().sum::<usize>(), 12);
        assert!(p[0] > p[1] && p[1] >= 1);
        assert!(allocate_rows(&[2, 2, 2], 2, Allocation::Equal).is_err());
    }

    #[test]
    fn single_block_is_whole_matrix() {
        let s = AttributeSchema::uniform("s", &[5]).unwrap();
        let b = build_sensing(&s, 7, 3, Allocation::Equal, 1.0).unwrap();
        assert_eq!(b.assembled(), b.block(0).clone());
        assert!(b.assembled().iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn off_blocks_are_zero() {
        let s = AttributeSchema::uniform("s", &[3, 4]).unwrap();
        let b = build_sensing(&s, 6, 9, Allocation::Equal, 0.5).unwrap();
        let w = b.assembled();
        assert!(w.slice(s![0..3, 3..7]).iter().all(|&x| x == 0.0));
        assert!(w.slice(s![3..6, 0..3]).iter().all(|&x| x == 0.0));
        assert!(w.slice(s![0..3, 0..3]).iter().all(|&x| x.abs() == 0.5));
    }

    #[test]
    fn hadamard_columns_and_lazy_agree() {
        let s = AttributeSchema::uniform("s", &[4, 3]).unwrap();
        let b = build_sensing(&s, 8, 1, Allocation::Proportional, 1.0).unwrap();
        let t = b.level_operator(2).unwrap();
        assert_eq!(t.cols(), 6 + 3);
        let u = b.block(0);
        // rank 1 in colex is {0, 2}
        let expect: Vec<f64> = (0..u.nrows()).map(|i| u[[i, 0]] * u[[i, 2]]).collect();
        assert_eq!(&t.column(1)[..u.nrows()], expect.as_slice());
        let lazy = b.lazy_operator(2);
        for idx in 0..t.cols() {
            assert_eq!(lazy.column(idx), t.column(idx));
        }
        let x: Vec<f64> = (0..t.cols()).map(|i| i as f64).collect();
        assert_eq!(lazy.apply(&x), t.apply(&x));
        let y: Vec<f64> = (0..t.rows()).map(|i| 1.0 - i as f64).collect();
        assert_eq!(lazy.apply_transpose(&y), t.apply_transpose(&y));
    }

    #[test]
    fn cap_enforced() {
        let s = AttributeSchema::uniform("s", &[200]).unwrap();
        let b = build_sensing(&s, 1000, 0, Allocation::Equal, 1.0).unwrap();
        assert!(matches!(b.level_operator(3), Err(Error::OperatorTooLarge { .. })));
        assert_eq!(b.operator(3).cols(), binomial(200, 3));
    }

    #[test]
    fn bad_scale() {
        let s = AttributeSchema::uniform("s", &[3]).unwrap();
        assert!(build_sensing(&s, 4, 0, Allocation::Equal, 0.0).is_err());
    }
}
