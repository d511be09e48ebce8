//! Colexicographic ranking of `n`-subsets of `{0, ..., k-1}`.
//!
//! A sorted subset `a_0 < a_1 < ... < a_{n-1}` has rank `sum_i C(a_i, i + 1)`.
//! Subsets of a fixed size enumerate as `0..C(k, n)` in this order.

/// `C(n, k)`, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Rank of a strictly increasing subset.
pub fn rank(subset: &[usize]) -> usize {
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
    subset.iter().enumerate().map(|(i, &a)| binomial(a, i + 1)).sum()
}

/// Rank of an unsorted set of distinct values.
pub fn rank_unsorted(values: &[usize]) -> usize {
    let mut s = values.to_vec();
    s.sort_unstable();
    rank(&s)
}

/// Inverse of [`rank`] for subsets of size `n`.
pub fn unrank(mut rank: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        // largest a with C(a, i + 1) <= rank
        let mut a = i;
        while binomial(a + 1, i + 1) <= rank {
            a += 1;
        }
        out[i] = a;
        rank -= binomial(a, i + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 2), 780);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(10, 10), 1);
    }

    #[test]
    fn colex_order_of_pairs() {
        let pairs: Vec<Vec<usize>> = (0..6).map(|r| unrank(r, 2)).collect();
        assert_eq!(pairs, vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 3], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn round_trip() {
        for n in 1..=4 {
            for r in 0..binomial(9, n) {
                let s = unrank(r, n);
                assert!(s.iter().all(|&a| a < 9));
                assert_eq!(rank(&s), r);
            }
        }
        assert_eq!(rank_unsorted(&[3, 0]), rank(&[0, 3]));
    }
}
