use super::quantile::{ProbabilityGrid, QuantileFunction};
use crate::error::{Error, Result};

/// Euclidean projection onto the monotone cone `{q : q_1 ≤ … ≤ q_M}` by
/// pool-adjacent-violators.
///
/// Blocks are merged only on strict violation, so a nondecreasing input is
/// returned unchanged bit for bit.
pub fn pava(g: &[f64]) -> Vec<f64> {
    // (sum, count) per block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(g.len());
    for &v in g {
        let mut cur = (v, 1usize);
        while let Some(&(psum, pcnt)) = blocks.last() {
            if block_mean(psum, pcnt) > block_mean(cur.0, cur.1) {
                blocks.pop();
                cur = (psum + cur.0, pcnt + cur.1);
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(g.len());
    for (sum, cnt) in blocks {
        out.extend(std::iter::repeat_n(block_mean(sum, cnt), cnt));
    }
    out
}

// Output values are exactly the compared means, so the result is monotone
// even under rounding.
fn block_mean(sum: f64, count: usize) -> f64 {
    if count == 1 {
        sum
    } else {
        sum / count as f64
    }
}

/// Projects `g` onto nondecreasing vectors and wraps the result as a quantile
/// function on the matching midpoint grid.
pub fn isotonic_project(g: &[f64]) -> Result<QuantileFunction> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("isotonic_project: non-finite entry"));
    }
    let grid = ProbabilityGrid::new(g.len())?;
    QuantileFunction::new(grid, pava(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact projection by enumerating every split into consecutive blocks.
    /// The projection is blockwise constant at block means; among all splits
    /// with nondecreasing block means the cheapest one is the optimum.
    fn brute_force(g: &[f64]) -> Vec<f64> {
        let m = g.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << (m - 1)) {
            let mut cand = Vec::with_capacity(m);
            let mut start = 0;
            for end in 1..=m {
                if end == m || mask & (1 << (end - 1)) != 0 {
                    let mean = g[start..end].iter().sum::<f64>() / (end - start) as f64;
                    cand.extend(std::iter::repeat_n(mean, end - start));
                    start = end;
                }
            }
            if cand.windows(2).any(|w| w[0] > w[1] + 1e-15) {
                continue;
            }
            let sse: f64 = g.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(s, _)| sse < *s) {
                best = Some((sse, cand));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn already_monotone() {
        assert_eq!(pava(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_point_violation_averages() {
        assert_eq!(pava(&[2.0, 1.0]), vec![1.5, 1.5]);
    }

    #[test]
    fn pooled_triple_matches_brute_force() {
        let g = [3.0, 1.0, 2.0];
        assert_eq!(brute_force(&g), vec![2.0, 2.0, 2.0]);
        assert_eq!(pava(&g), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            isotonic_project(&[1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn exhaustive_small_integer_grids() {
        // all vectors of length ≤ 4 over {-2..2}
        for m in 1..=4usize {
            let total = 5usize.pow(m as u32);
            for code in 0..total {
                let mut c = code;
                let g: Vec<f64> = (0..m)
                    .map(|_| {
                        let v = (c % 5) as f64 - 2.0;
                        c /= 5;
                        v
                    })
                    .collect();
                let fast = pava(&g);
                let slow = brute_force(&g);
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-12, "{g:?}: {fast:?} vs {slow:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn idempotent_and_monotone(g in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let once = pava(&g);
            prop_assert!(once.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(pava(&once), once);
        }

        #[test]
        fn preserves_sum(g in prop::collection::vec(-10f64..10.0, 1..30)) {
            let p = pava(&g);
            let a: f64 = g.iter().sum();
            let b: f64 = p.iter().sum();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
