//! Maximum-likelihood fit of a step density to observed timing pairs.
//!
//! For a fixed set of boxes the likelihood `Π k_j^{S_j}` under the mass
//! constraint `Σ k_j·area_j = 1` is maximized by `k_j = S_j / (P·area_j)`.
//! The multiplier equations run over the boxes, `1 ≤ j ≤ N`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{BoxDensity, Rect, StepBox};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observed `(π₁, π₂)` pairs, one per task.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingSamples<T = f64> {
    pairs: Vec<(T, T)>,
    task_ids: Vec<String>,
}

impl<T: Scalar> TimingSamples<T> {
    /// Pairs with task ids `1..=P`.
    pub fn new(pairs: Vec<(T, T)>) -> Result<Self> {
        let ids = (1..=pairs.len()).map(|i| i.to_string()).collect();
        Self::with_ids(pairs, ids)
    }

    pub fn with_ids(pairs: Vec<(T, T)>, task_ids: Vec<String>) -> Result<Self> {
        if pairs.len() != task_ids.len() {
            return Err(Error::Contract(format!("{} pairs but {} task ids", pairs.len(), task_ids.len())));
        }
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let ok = |v: T| v > T::zero() && v.to_f64().is_some_and(f64::is_finite);
            if !ok(x) || !ok(y) {
                return Err(Error::Domain(format!(
                    "task {}: times must be positive and finite, got ({x:?}, {y:?})",
                    task_ids[i]
                )));
            }
        }
        Ok(TimingSamples { pairs, task_ids })
    }

    pub fn pairs(&self) -> &[(T, T)] {
        &self.pairs
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Disjoint half-open rectangles awaiting heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPartition<T = f64> {
    rects: Vec<Rect<T>>,
}

impl<T: Scalar> BoxPartition<T> {
    pub fn new(rects: Vec<Rect<T>>) -> Result<Self> {
        let mut problems = Vec::new();
        for (i, r) in rects.iter().enumerate() {
            problems.extend(r.bound_violations().into_iter().map(|m| format!("box {}: {m}", i + 1)));
        }
        for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                if rects[i].overlaps(&rects[j]) {
                    problems.push(format!("boxes {} and {} overlap", i + 1, j + 1));
                }
            }
        }
        if problems.is_empty() {
            Ok(BoxPartition { rects })
        } else {
            Err(Error::Contract(format!("invalid partition: {}", problems.join("; "))))
        }
    }

    /// Cartesian product of cut points; both cut lists must be strictly increasing.
    pub fn from_cuts(x_cuts: &[T], y_cuts: &[T]) -> Result<Self> {
        let rects = x_cuts
            .windows(2)
            .flat_map(|xs| y_cuts.windows(2).map(move |ys| Rect::new(xs[0], xs[1], ys[0], ys[1])))
            .collect();
        Self::new(rects)
    }

    pub fn rects(&self) -> &[Rect<T>] {
        &self.rects
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    fn locate(&self, x: T, y: T) -> Option<usize> {
        self.rects.iter().position(|r| r.contains(x, y))
    }
}

/// Per-box sample counts `S_j` and the total sample count `P`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxCounts {
    pub counts: Vec<u64>,
    pub total: u64,
    /// Indices of samples outside every box.
    pub uncovered: Vec<usize>,
}

pub fn count_membership<T: Scalar>(partition: &BoxPartition<T>, samples: &TimingSamples<T>) -> BoxCounts {
    let mut counts = vec![0u64; partition.len()];
    let mut uncovered = Vec::new();
    for (i, &(x, y)) in samples.pairs().iter().enumerate() {
        match partition.locate(x, y) {
            Some(j) => counts[j] += 1,
            None => uncovered.push(i),
        }
    }
    BoxCounts { counts, total: samples.len() as u64, uncovered }
}

/// Heights `k_j = S_j / (P·area_j)`; empty boxes are dropped.
pub fn fit_k<T: Scalar>(partition: &BoxPartition<T>, samples: &TimingSamples<T>) -> Result<BoxDensity<T>> {
    let counts = count_membership(partition, samples);
    if let Some(&i) = counts.uncovered.first() {
        let (x, y) = samples.pairs()[i];
        return Err(Error::Coverage { index: i + 1, x: x.to_f64_lossy(), y: y.to_f64_lossy() });
    }
    if counts.total == 0 {
        return Err(Error::DegenerateData("no timing samples".into()));
    }
    let p = scalar_count::<T>(counts.total)?;
    let mut boxes = Vec::new();
    for (r, &s) in partition.rects().iter().zip(&counts.counts) {
        if s > 0 {
            boxes.push(StepBox::from_rect(scalar_count::<T>(s)? / (p * r.area()), *r));
        }
    }
    Ok(BoxDensity::new(boxes))
}

fn scalar_count<T: Scalar>(n: u64) -> Result<T> {
    T::from_u64(n).ok_or_else(|| Error::Contract(format!("count {n} not representable")))
}

/// How `auto_partition` places grid cut points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionStrategy {
    Uniform { nx: usize, ny: usize },
    Quantile { nx: usize, ny: usize },
}

impl FromStr for PartitionStrategy {
    type Err = Error;

    /// `uniform:NX,NY` or `quantile:NX,NY`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("partition '{s}': expected uniform:NX,NY or quantile:NX,NY"));
        let (kind, dims) = s.split_once(':').ok_or_else(bad)?;
        let (nx, ny) = dims.split_once(',').ok_or_else(bad)?;
        let nx = nx.trim().parse().map_err(|_| bad())?;
        let ny = ny.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "uniform" => Ok(PartitionStrategy::Uniform { nx, ny }),
            "quantile" => Ok(PartitionStrategy::Quantile { nx, ny }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionStrategy::Uniform { nx, ny } => write!(f, "uniform:{nx},{ny}"),
            PartitionStrategy::Quantile { nx, ny } => write!(f, "quantile:{nx},{ny}"),
        }
    }
}

/// Grid of cells covering `[min, max + ε)` on each axis, `ε = 1e-9·span`.
pub fn auto_partition<T: Scalar>(samples: &TimingSamples<T>, strategy: PartitionStrategy) -> Result<BoxPartition<T>> {
    let (PartitionStrategy::Uniform { nx, ny } | PartitionStrategy::Quantile { nx, ny }) = strategy;
    if nx < 1 || ny < 1 {
        return Err(Error::Contract(format!("partition needs nx, ny >= 1, got {nx}, {ny}")));
    }
    if samples.is_empty() {
        return Err(Error::DegenerateData("cannot partition an empty sample".into()));
    }
    let quantile = matches!(strategy, PartitionStrategy::Quantile { .. });
    let xs: Vec<T> = samples.pairs().iter().map(|p| p.0).collect();
    let ys: Vec<T> = samples.pairs().iter().map(|p| p.1).collect();
    let x_cuts = axis_cuts(xs, nx, quantile);
    let y_cuts = axis_cuts(ys, ny, quantile);
    BoxPartition::from_cuts(&x_cuts, &y_cuts)
}

fn axis_cuts<T: Scalar>(mut values: Vec<T>, n: usize, quantile: bool) -> Vec<T> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let lo = values[0];
    let hi = values[values.len() - 1];
    let span = hi - lo;
    let scale = if span > T::zero() { span } else if hi > T::one() { hi } else { T::one() };
    let top = hi + scale * T::lit(1e-9);
    let n_t = T::from_usize(n).expect("cell count fits the scalar type");
    let mut cuts = Vec::with_capacity(n + 1);
    cuts.push(lo);
    for i in 1..n {
        let cut = if quantile {
            values[i * values.len() / n]
        } else {
            lo + (top - lo) * T::from_usize(i).expect("index fits") / n_t
        };
        cuts.push(cut);
    }
    cuts.push(top);
    // repeated quantiles would give zero-width cells
    cuts.dedup_by(|b, a| *b <= *a);
    cuts
}

/// `Σ_j ln pdf(x_j, y_j)`, which equals `Σ S_j ln k_j`; `-∞` when a sample sits where the density vanishes.
pub fn log_likelihood<T: Scalar>(density: &BoxDensity<T>, samples: &TimingSamples<T>) -> f64 {
    samples
        .pairs()
        .iter()
        .map(|&(x, y)| {
            let p = density.pdf(x, y).to_f64_lossy();
            if p > 0.0 {
                p.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// Expected derived time written directly in the counts, without forming heights.
pub fn et_empirical<T: Scalar>(tau: T, partition: &BoxPartition<T>, counts: &BoxCounts) -> Result<T> {
    if counts.counts.len() != partition.len() {
        return Err(Error::Contract(format!(
            "{} counts for {} boxes",
            counts.counts.len(),
            partition.len()
        )));
    }
    if counts.total == 0 {
        return Err(Error::DegenerateData("no timing samples".into()));
    }
    let p = scalar_count::<T>(counts.total)?;
    let mut curvature = T::zero();
    let mut slope_before = T::zero();
    let mut slope_inside = T::zero();
    let mut inside = T::zero();
    let mut before = T::zero();
    let mut after = T::zero();
    for (r, &s) in partition.rects().iter().zip(&counts.counts) {
        if s == 0 {
            continue;
        }
        let s = scalar_count::<T>(s)?;
        let (a, b, c, d) = (r.a, r.b, r.c, r.d);
        if tau <= a {
            slope_before = slope_before + s;
            before = before + s * (d + c);
        } else if tau < b {
            curvature = curvature + s / (b - a);
            slope_inside = slope_inside + s * (b - T::half() * (d + c)) / (b - a);
            inside = inside + s / (b - a) * (b * (d + c) - a * a);
        } else {
            after = after + s * (b + a);
        }
    }
    let two_p = p + p;
    Ok(-(tau * tau) * curvature / two_p + tau * (slope_before + slope_inside) / p + (inside + before + after) / two_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expected_time::et_box;
    use num_rational::Rational64;

    fn fixture() -> (BoxPartition<f64>, TimingSamples<f64>) {
        let part = BoxPartition::new(vec![Rect::new(0.0, 1.0, 0.0, 1.0), Rect::new(1.0, 2.0, 1.0, 2.0)]).unwrap();
        let s = TimingSamples::new(vec![(0.5, 0.5), (0.2, 0.8), (1.5, 1.5), (1.2, 1.9)]).unwrap();
        (part, s)
    }

    #[test]
    fn membership_counts() {
        let (part, s) = fixture();
        assert_eq!(count_membership(&part, &s).counts, vec![2, 2]);
        let edge = TimingSamples::new(vec![(1.0, 0.5)]).unwrap();
        let c = count_membership(&part, &edge);
        assert_eq!((c.counts, c.uncovered), (vec![0, 0], vec![0]));
        let none = TimingSamples::new(vec![]).unwrap();
        assert_eq!(count_membership(&part, &none).counts, vec![0, 0]);
    }

    #[test]
    fn fit_fixture_and_errors() {
        let (part, s) = fixture();
        let d = fit_k(&part, &s).unwrap();
        assert_eq!(d.boxes.iter().map(|b| b.k).collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert!((log_likelihood(&d, &s) - 4.0 * 0.5f64.ln()).abs() < 1e-12);
        let outside = TimingSamples::new(vec![(0.5, 0.5), (3.0, 3.0)]).unwrap();
        assert!(matches!(fit_k(&part, &outside), Err(Error::Coverage { index: 2, .. })));
        assert_eq!(log_likelihood(&d, &outside), f64::NEG_INFINITY);
        let empty = TimingSamples::new(vec![]).unwrap();
        assert!(matches!(fit_k(&part, &empty), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn covering_box_and_empty_drop() {
        let part = BoxPartition::new(vec![Rect::new(0.0, 10.0, 0.0, 10.0), Rect::new(10.0, 11.0, 0.0, 1.0)]).unwrap();
        let s = TimingSamples::new(vec![(1.0, 2.0), (9.0, 9.5)]).unwrap();
        let d = fit_k(&part, &s).unwrap();
        assert_eq!(d.boxes.len(), 1);
        assert_eq!(d.boxes[0].k, 0.01);
    }

    #[test]
    fn overlapping_partition_rejected() {
        let r = BoxPartition::new(vec![Rect::new(0.0, 2.0, 0.0, 2.0), Rect::new(1.0, 3.0, 1.0, 3.0)]);
        assert!(matches!(r, Err(Error::Contract(m)) if m.contains("boxes 1 and 2 overlap")));
    }

    #[test]
    fn partitions_cover_samples() {
        let s = TimingSamples::new(vec![(1.0, 2.0), (8.0, 7.0), (3.0, 5.0), (8.0, 2.0)]).unwrap();
        for strat in [PartitionStrategy::Uniform { nx: 2, ny: 2 }, PartitionStrategy::Quantile { nx: 2, ny: 2 }] {
            let p = auto_partition(&s, strat).unwrap();
            assert_eq!(p.len(), 4);
            assert!(count_membership(&p, &s).uncovered.is_empty());
        }
        let one = TimingSamples::new(vec![(4.0, 4.0)]).unwrap();
        let p = auto_partition(&one, PartitionStrategy::Uniform { nx: 1, ny: 1 }).unwrap();
        assert_eq!(count_membership(&p, &one).counts, vec![1]);
        assert!(matches!(
            auto_partition(&one, PartitionStrategy::Quantile { nx: 0, ny: 1 }),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("uniform:4,3".parse::<PartitionStrategy>().unwrap(), PartitionStrategy::Uniform { nx: 4, ny: 3 });
        assert_eq!("quantile:2,2".parse::<PartitionStrategy>().unwrap().to_string(), "quantile:2,2");
        assert!("grid:2,2".parse::<PartitionStrategy>().is_err());
        assert!("uniform:2".parse::<PartitionStrategy>().is_err());
    }

    #[test]
    fn empirical_matches_fitted_heights_exactly() {
        let r = |n: i64| Rational64::from_integer(n);
        let part = BoxPartition::new(vec![Rect::new(r(1), r(3), r(4), r(7)), Rect::new(r(5), r(8), r(2), r(4))]).unwrap();
        let counts = BoxCounts { counts: vec![6, 6], total: 12, uncovered: vec![] };
        assert_eq!(et_empirical(r(3), &part, &counts).unwrap(), r(4));
        let samples = TimingSamples::new(vec![(r(2), r(5)), (r(6), r(3))]).unwrap();
        let d = fit_k(&part, &samples).unwrap();
        let c = count_membership(&part, &samples);
        for tau in 0..10 {
            assert_eq!(et_empirical(r(tau), &part, &c).unwrap(), et_box(&d, r(tau)));
        }
    }
}
