//! Step densities: sums of constant heights on disjoint half-open rectangles.

use serde::{Deserialize, Serialize};

use crate::scalar::{max_by_partial, Scalar};

/// Half-open rectangle `[a, b) × [c, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Rect { a, b, c, d }
    }

    pub fn width(&self) -> T {
        self.b - self.a
    }

    pub fn height(&self) -> T {
        self.d - self.c
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        self.a <= x && x < self.b && self.c <= y && y < self.d
    }

    pub fn overlaps(&self, other: &Rect<T>) -> bool {
        self.a < other.b && other.a < self.b && self.c < other.d && other.c < self.d
    }

    /// Problems with the bounds themselves (`0 ≤ a < b`, `0 ≤ c < d`).
    pub(crate) fn bound_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(T::zero() <= self.a && self.a < self.b) {
            out.push(format!("x-interval [{:?}, {:?}) must satisfy 0 <= a < b", self.a, self.b));
        }
        if !(T::zero() <= self.c && self.c < self.d) {
            out.push(format!("y-interval [{:?}, {:?}) must satisfy 0 <= c < d", self.c, self.d));
        }
        out
    }
}

/// One term `k · 1[a ≤ x < b] · 1[c ≤ y < d]` of a step density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBox<T> {
    pub k: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> StepBox<T> {
    pub fn new(k: T, a: T, b: T, c: T, d: T) -> Self {
        StepBox { k, a, b, c, d }
    }

    pub fn rect(&self) -> Rect<T> {
        Rect::new(self.a, self.b, self.c, self.d)
    }

    pub fn from_rect(k: T, r: Rect<T>) -> Self {
        StepBox::new(k, r.a, r.b, r.c, r.d)
    }

    /// Probability mass `k · (b − a)(d − c)`.
    pub fn mass(&self) -> T {
        self.k * self.rect().area()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDensity<T> {
    pub boxes: Vec<StepBox<T>>,
}

impl<T: Scalar> BoxDensity<T> {
    pub fn new(boxes: Vec<StepBox<T>>) -> Self {
        BoxDensity { boxes }
    }

    pub fn mass(&self) -> T {
        self.boxes.iter().fold(T::zero(), |acc, b| acc + b.mass())
    }

    /// Human-readable list of broken invariants; empty when the density is valid.
    pub fn violations(&self, mass_tol: T) -> Vec<String> {
        let mut out = Vec::new();
        if self.boxes.is_empty() {
            out.push("box density has no boxes".to_string());
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if !(b.k > T::zero()) {
                out.push(format!("box {}: height k = {:?} must be positive", i + 1, b.k));
            }
            for v in b.rect().bound_violations() {
                out.push(format!("box {}: {v}", i + 1));
            }
        }
        for i in 0..self.boxes.len() {
            for j in i + 1..self.boxes.len() {
                if self.boxes[i].rect().overlaps(&self.boxes[j].rect()) {
                    out.push(format!("boxes {} and {} overlap", i + 1, j + 1));
                }
            }
        }
        let mass = self.mass();
        if (mass - T::one()).abs() > mass_tol {
            out.push(format!("total mass {mass:?} differs from 1"));
        }
        out
    }

    pub fn pdf(&self, x: T, y: T) -> T {
        self.boxes
            .iter()
            .filter(|b| b.rect().contains(x, y))
            .fold(T::zero(), |acc, b| acc + b.k)
    }

    /// `E π₁ = Σ k (b² − a²)/2 · (d − c)`.
    pub fn mean_x(&self) -> T {
        self.boxes.iter().fold(T::zero(), |acc, b| {
            acc + b.k * (b.b * b.b - b.a * b.a) * T::half() * (b.d - b.c)
        })
    }

    pub fn mean_y(&self) -> T {
        self.boxes.iter().fold(T::zero(), |acc, b| {
            acc + b.k * (b.d * b.d - b.c * b.c) * T::half() * (b.b - b.a)
        })
    }

    /// Upper end of the x-support, `max b_n`.
    pub fn x_support_max(&self) -> T {
        self.boxes
            .iter()
            .fold(T::zero(), |acc, b| max_by_partial(acc, b.b))
    }

    /// `P(τ < π₁)`.
    pub fn survival_x(&self, tau: T) -> T {
        self.boxes.iter().fold(T::zero(), |acc, b| {
            let lo = max_by_partial(b.a, tau);
            if lo < b.b {
                acc + b.k * (b.b - lo) * (b.d - b.c)
            } else {
                acc
            }
        })
    }

    /// Multiplies every coordinate by `s` and every height by `1/s²`.
    pub fn scaled(&self, s: T) -> Self {
        BoxDensity::new(
            self.boxes
                .iter()
                .map(|b| StepBox::new(b.k / (s * s), b.a * s, b.b * s, b.c * s, b.d * s))
                .collect(),
        )
    }

    /// Exchanges the roles of the two algorithms.
    pub fn swapped(&self) -> Self {
        BoxDensity::new(
            self.boxes
                .iter()
                .map(|b| StepBox::new(b.k, b.c, b.d, b.a, b.b))
                .collect(),
        )
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> BoxDensity<U> {
        BoxDensity::new(
            self.boxes
                .iter()
                .map(|b| StepBox::new(f(b.k), f(b.a), f(b.b), f(b.c), f(b.d)))
                .collect(),
        )
    }
}
