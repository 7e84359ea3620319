use serde::{Deserialize, Serialize};

use super::univariate::UnivariateDensity;

/// Independent runtimes: the joint density is the product of its factors.
/// Two factors give the usual `(x, y)` model; more describe an N-algorithm
/// portfolio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProductSpec")]
pub struct ProductDensity {
    pub factors: Vec<UnivariateDensity>,
}

#[derive(Deserialize)]
struct ProductSpec {
    #[serde(default)]
    factors: Vec<UnivariateDensity>,
    fx: Option<UnivariateDensity>,
    fy: Option<UnivariateDensity>,
}

impl TryFrom<ProductSpec> for ProductDensity {
    type Error = String;

    fn try_from(s: ProductSpec) -> Result<Self, String> {
        match (s.factors.is_empty(), s.fx, s.fy) {
            (false, None, None) => Ok(ProductDensity { factors: s.factors }),
            (true, Some(fx), Some(fy)) => Ok(ProductDensity::pair(fx, fy)),
            _ => Err("product density needs either `factors` or both `fx` and `fy`".into()),
        }
    }
}

impl ProductDensity {
    pub fn pair(fx: UnivariateDensity, fy: UnivariateDensity) -> Self {
        ProductDensity { factors: vec![fx, fy] }
    }

    pub fn fx(&self) -> &UnivariateDensity {
        &self.factors[0]
    }

    pub fn fy(&self) -> &UnivariateDensity {
        &self.factors[1]
    }

    pub fn violations(&self, mass_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.factors.len() < 2 {
            out.push("product density needs at least two factors".into());
        }
        for (i, f) in self.factors.iter().enumerate() {
            out.extend(f.violations(mass_tol).into_iter().map(|v| format!("factor {}: {v}", i + 1)));
        }
        out
    }

    pub fn pdf(&self, point: &[f64]) -> f64 {
        self.factors.iter().zip(point).map(|(f, &t)| f.pdf(t)).product()
    }
}
