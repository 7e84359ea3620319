//! Adaptive Gauss–Kronrod quadrature and the truncation-doubling test used to
//! decide whether an improper integral exists.

use num_traits::{Float, FromPrimitive};

use crate::density::Expectation;

// 15-point Kronrod abscissae (nonnegative half) and weights, with the embedded
// 7-point Gauss weights at the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Settings shared by every quadrature-backed expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// First truncation bound for infinite domains.
    pub t_max: f64,
    /// Number of times the truncation bound is doubled for the existence test.
    pub doublings: u32,
    /// Relative growth per doubling above which an integral is suspected divergent.
    pub divergence_tol: f64,
    /// Increment ratio at or above which growth is considered non-contracting.
    pub contraction_limit: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-6,
            rel_tol: 1e-10,
            t_max: 50.0,
            doublings: 4,
            divergence_tol: 0.01,
            contraction_limit: 0.9,
            max_panels: 4000,
        }
    }
}

impl QuadConfig {
    /// Truncation bounds `t_max · 2^k` for `k = 0..=doublings`.
    pub fn levels(&self) -> Vec<f64> {
        (0..=self.doublings)
            .map(|k| self.t_max * f64::from(1u32 << k))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<F> {
    pub value: F,
    pub error: F,
    pub converged: bool,
}

fn c<F: FromPrimitive>(v: f64) -> F {
    F::from_f64(v).expect("float constant")
}

/// One 15-point Kronrod panel on `[a, b]`; returns (estimate, error estimate).
pub fn kronrod_panel<F, G>(f: &mut G, a: F, b: F) -> (F, F)
where
    F: Float + FromPrimitive,
    G: FnMut(F) -> F,
{
    let two = c::<F>(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(center);
    let mut kronrod = fc * c(WGK[7]);
    let mut gauss = fc * c(WG[3]);
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * c(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * c(WG[j / 2]);
        }
    }
    let est = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (est, err)
}

/// Adaptive integration over the union of consecutive intervals in `breaks`
/// (sorted; duplicates ignored). The panel with the largest error estimate is
/// bisected until the summed error meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F, G>(mut f: G, breaks: &[F], abs_tol: F, rel_tol: F, max_panels: usize) -> Integral<F>
where
    F: Float + FromPrimitive,
    G: FnMut(F) -> F,
{
    let mut panels: Vec<(F, F, F, F)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = kronrod_panel(&mut f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    let total = |p: &[(F, F, F, F)]| {
        p.iter()
            .fold((F::zero(), F::zero()), |(v, e), q| (v + q.2, e + q.3))
    };
    let (mut value, mut error) = total(&panels);
    while error > abs_tol.max(rel_tol * value.abs()) && panels.len() < max_panels {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0usize, F::neg_infinity()), |best, (i, p)| {
                if p.3 > best.1 {
                    (i, p.3)
                } else {
                    best
                }
            });
        let (a, b, _, _) = panels[idx];
        let mid = (a + b) / c(2.0);
        if !(mid > a && mid < b) {
            break;
        }
        let (lv, le) = kronrod_panel(&mut f, a, mid);
        let (rv, re) = kronrod_panel(&mut f, mid, b);
        panels[idx] = (a, mid, lv, le);
        panels.push((mid, b, rv, re));
        let t = total(&panels);
        value = t.0;
        error = t.1;
    }
    Integral {
        value,
        error,
        converged: error <= abs_tol.max(rel_tol * value.abs()),
    }
}

/// Breakpoints `0, 1, 2, 4, …, t` plus any extra points inside `(0, t)`.
pub fn geometric_breaks(t: f64, extra: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut p = 1.0;
    while p < t {
        out.push(p);
        p *= 2.0;
    }
    out.push(t);
    out.extend(extra.iter().copied().filter(|&e| e > 0.0 && e < t));
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// Applies the doubling test to partial integrals computed at successive
/// truncation bounds.
///
/// The integral is declared divergent when each of the last two doublings
/// grows the partial value by more than `divergence_tol` (relative) and the
/// growth is not contracting. Otherwise the value is the last partial value,
/// plus a geometric tail estimate when `extrapolate` is set and the increments
/// shrink.
pub fn assess_levels(partials: &[f64], cfg: &QuadConfig, extrapolate: bool) -> Expectation {
    let n = partials.len();
    if partials.iter().any(|p| !p.is_finite()) {
        return Expectation::Divergent;
    }
    if n < 3 {
        return Expectation::Finite(*partials.last().unwrap_or(&0.0));
    }
    let last = partials[n - 1];
    let d1 = partials[n - 2] - partials[n - 3];
    let d2 = last - partials[n - 2];
    let growing = |d: f64, base: f64| d > cfg.divergence_tol * base.abs().max(f64::MIN_POSITIVE);
    if growing(d1, partials[n - 2]) && growing(d2, last) && d2 >= cfg.contraction_limit * d1 {
        return Expectation::Divergent;
    }
    let mut value = last;
    if extrapolate && d1 > 0.0 && d2 > 0.0 {
        let r = d2 / d1;
        if r < cfg.contraction_limit {
            value += d2 * r / (1.0 - r);
        }
    }
    Expectation::Finite(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_is_exact_for_polynomials() {
        let (v, e) = kronrod_panel(&mut |x: f64| x.powi(5) - 3.0 * x * x + 1.0, 0.0, 2.0);
        assert!((v - (64.0 / 6.0 - 8.0 + 2.0)).abs() < 1e-13);
        assert!(e < 1e-12);
    }

    #[test]
    fn adaptive_handles_kinks_and_f32() {
        let r = integrate(|x: f64| (x - 0.3).abs(), &[0.0, 1.0], 1e-10, 0.0, 1000);
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-9, "{}", r.value);
        let r32 = integrate(|x: f32| x.exp(), &[0.0f32, 1.0], 1e-5, 0.0, 100);
        assert!((r32.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn doubling_test_flags_log_growth_only() {
        let cfg = QuadConfig::default();
        let log_growth: Vec<f64> = cfg.levels().iter().map(|t| (1.0 + t).ln()).collect();
        assert_eq!(assess_levels(&log_growth, &cfg, true), Expectation::Divergent);
        let inverse_tail: Vec<f64> = cfg.levels().iter().map(|t| 2.0 - 1.0 / (1.0 + t)).collect();
        match assess_levels(&inverse_tail, &cfg, true) {
            Expectation::Finite(v) => assert!((v - 2.0).abs() < 1e-5, "{v}"),
            Expectation::Divergent => panic!("convergent tail flagged"),
        }
        let flat = vec![1.0; 5];
        assert_eq!(assess_levels(&flat, &cfg, true), Expectation::Finite(1.0));
    }
}
