//! Wasserstein-1 distances between empirical measures with uniform weights.
//!
//! Samples are passed as flat row-major slices together with their dimension.
//! The ground metric is Euclidean.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Largest N accepted by [`w1_exact_matching`] by default.
pub const DEFAULT_MATCHING_LIMIT: usize = 512;

/// Default number of projection directions for the sliced estimator.
pub const DEFAULT_SLICED_DIRECTIONS: usize = 200;

/// How a W1 value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact1D,
    ExactMatching,
    Sliced(usize),
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Exact1D => f.write_str("exact_1d"),
            Estimator::ExactMatching => f.write_str("exact_matching"),
            Estimator::Sliced(l) => write!(f, "sliced({l})"),
        }
    }
}

impl Serialize for Estimator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A W1 value with its estimator tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Value {
    pub value: f64,
    pub estimator: Estimator,
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_rows(x: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || x.len() % dim != 0 {
        return Err(Error::invalid(format!(
            "sample length {} is not a multiple of dim {dim}",
            x.len()
        )));
    }
    Ok(x.len() / dim)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// Exact W1 between two equal-size samples on the line: the mean absolute
/// difference of the order statistics.
pub fn w1_exact_1d(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::invalid("W1 needs at least one sample"));
    }
    check_finite(x)?;
    check_finite(y)?;
    Ok(sorted_w1(&sorted(x), &sorted(y)))
}

fn sorted_w1(xs: &[f64], ys: &[f64]) -> f64 {
    let total: f64 = xs.iter().zip(ys).map(|(a, b)| (a - b).abs()).sum();
    total / xs.len() as f64
}

/// Exact W1 between two samples on the line of possibly different sizes,
/// `int |F_x - F_y|`. Reduces to [`w1_exact_1d`] when the sizes agree.
pub fn w1_1d(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("W1 needs at least one sample on each side"));
    }
    check_finite(x)?;
    check_finite(y)?;
    let xs = sorted(x);
    let ys = sorted(y);
    if xs.len() == ys.len() {
        return Ok(sorted_w1(&xs, &ys));
    }
    Ok(cdf_w1(&xs, &ys))
}

fn cdf_w1(xs: &[f64], ys: &[f64]) -> f64 {
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = xs[0].min(ys[0]);
    let mut total = 0.0;
    while i < xs.len() || j < ys.len() {
        let next = match (xs.get(i), ys.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        // |F_x - F_y| on [prev, next) is |i/n - j/m| = |i m - j n| / (n m)
        let gap = (i as u128 * m).abs_diff(j as u128 * n);
        total += gap as f64 * (next - prev);
        prev = next;
        while i < xs.len() && xs[i] == next {
            i += 1;
        }
        while j < ys.len() && ys[j] == next {
            j += 1;
        }
    }
    total / (n * m) as f64
}

/// Exact W1 by minimum-cost perfect matching with Euclidean costs.
pub fn w1_exact_matching(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    w1_exact_matching_with_limit(x, y, dim, DEFAULT_MATCHING_LIMIT)
}

pub fn w1_exact_matching_with_limit(x: &[f64], y: &[f64], dim: usize, limit: usize) -> Result<f64> {
    let n = check_rows(x, dim)?;
    let m = check_rows(y, dim)?;
    if n != m {
        return Err(Error::SizeMismatch { left: n, right: m });
    }
    if n == 0 {
        return Err(Error::invalid("W1 needs at least one sample"));
    }
    if n > limit {
        return Err(Error::MatchingTooLarge { n, max: limit });
    }
    check_finite(x)?;
    check_finite(y)?;
    let cost = |i: usize, j: usize| euclidean(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]);
    let assignment = min_cost_assignment(n, cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    Ok(total / n as f64)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Sliced W1: mean over `directions` random unit vectors of the exact W1
/// between the projected samples. Direction `l` is drawn from
/// `stream.fork(l + 1)`, and the per-direction values are summed pairwise in
/// a fixed order, so the result does not depend on the thread count.
///
/// Every projection is 1-Lipschitz, hence the estimate never exceeds the
/// exact W1. Samples may have different sizes.
pub fn w1_sliced(x: &[f64], y: &[f64], dim: usize, directions: usize, stream: &Stream) -> Result<f64> {
    let n = check_rows(x, dim)?;
    let m = check_rows(y, dim)?;
    if n == 0 || m == 0 {
        return Err(Error::invalid("W1 needs at least one sample on each side"));
    }
    if directions == 0 {
        return Err(Error::invalid("sliced estimator needs at least one direction"));
    }
    check_finite(x)?;
    check_finite(y)?;
    let values: Vec<f64> = (0..directions)
        .into_par_iter()
        .map(|l| {
            let e = random_direction(dim, &mut stream.fork(l as u64 + 1));
            let px = project(x, dim, &e);
            let py = project(y, dim, &e);
            w1_1d(&px, &py).expect("projections are finite and non-empty")
        })
        .collect();
    Ok(pairwise_sum(&values) / directions as f64)
}

fn random_direction(dim: usize, stream: &mut Stream) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(stream)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn project(x: &[f64], dim: usize, e: &[f64]) -> Vec<f64> {
    x.chunks_exact(dim)
        .map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum())
        .collect()
}

/// Binary-tree summation in a fixed order.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// W1 between two samples with the estimator the harness uses: exact on the
/// line, sliced with `directions` projections otherwise.
pub fn w1_auto(x: &[f64], y: &[f64], dim: usize, directions: usize, stream: &Stream) -> Result<W1Value> {
    if dim == 1 {
        Ok(W1Value { value: w1_1d(x, y)?, estimator: Estimator::Exact1D })
    } else {
        Ok(W1Value {
            value: w1_sliced(x, y, dim, directions, stream)?,
            estimator: Estimator::Sliced(directions),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_1d_examples() {
        assert_eq!(w1_exact_1d(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(w1_exact_1d(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(w1_exact_1d(&[0.0, 2.0], &[3.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn exact_1d_errors() {
        assert!(matches!(w1_exact_1d(&[0.0], &[1.0, 2.0]), Err(Error::SizeMismatch { .. })));
        assert!(matches!(w1_exact_1d(&[f64::NAN], &[1.0]), Err(Error::NonFinite(0))));
    }

    #[test]
    fn unequal_sizes() {
        // {0} vs {0, 2}: half the mass moves by 2.
        assert!((w1_1d(&[0.0], &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        // {0, 1, 2} vs {1}: |0-1| + 0 + |2-1| over 3
        assert!((w1_1d(&[0.0, 1.0, 2.0], &[1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // duplicating every atom does not change the measure
        let x = [0.3, -1.2, 4.0];
        let y = [1.0, 0.5, -0.7, 2.2, 0.0, 0.1];
        let x2: Vec<f64> = x.iter().chain(x.iter()).copied().collect();
        let a = w1_1d(&x, &y).unwrap();
        let b = w1_1d(&x2, &y).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((w1_1d(&x2, &y).unwrap() - w1_1d(&y, &x2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn matching_examples() {
        assert_eq!(w1_exact_matching(&[0.0, 0.0], &[3.0, 4.0], 2).unwrap(), 5.0);
        let x = [0.0, 1.0, 2.0, 3.0, 5.0, 8.0];
        assert_eq!(w1_exact_matching(&x, &x, 2).unwrap(), 0.0);
        let big = vec![0.0; 513];
        assert!(matches!(
            w1_exact_matching(&big, &big, 1),
            Err(Error::MatchingTooLarge { n: 513, max: 512 })
        ));
    }

    #[test]
    fn sliced_identical_is_zero() {
        let x = [0.1, 0.2, 0.3, -1.0, 0.5, 2.0];
        assert_eq!(w1_sliced(&x, &x, 3, 17, &Stream::from_seed(1)).unwrap(), 0.0);
    }

    #[test]
    fn pairwise_sum_order() {
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn estimator_tags() {
        assert_eq!(Estimator::Sliced(200).to_string(), "sliced(200)");
        assert_eq!(Estimator::Exact1D.to_string(), "exact_1d");
    }
}
