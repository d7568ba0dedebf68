//! Real dilogarithm and the Gauss-Chebyshev rule used by the closed forms.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const PI2_6: f64 = PI * PI / 6.0;

/// Real dilogarithm `Li₂(x) = −∫₀ˣ ln(1−u)/u du` for `x ≤ 1`.
///
/// Uses the power series on `|x| ≤ 1/2` and maps every other argument there
/// with the reflection, Landen and inversion identities.
pub fn dilog(x: f64) -> Result<f64> {
    if x.is_nan() || x > 1.0 {
        return Err(Error::Domain(x));
    }
    Ok(dilog_unchecked(x))
}

fn dilog_unchecked(x: f64) -> f64 {
    if x == 1.0 {
        PI2_6
    } else if x == 0.0 {
        0.0
    } else if x.abs() <= 0.5 {
        series(x)
    } else if x > 0.5 {
        // Li₂(x) + Li₂(1−x) = π²/6 − ln x·ln(1−x)
        PI2_6 - x.ln() * (-x).ln_1p() - series(1.0 - x)
    } else if x >= -1.0 {
        // Landen: Li₂(x) = −Li₂(x/(x−1)) − ½ln²(1−x), x/(x−1) ∈ [1/3, 1/2)
        let l = (-x).ln_1p();
        -series(x / (x - 1.0)) - 0.5 * l * l
    } else if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        // Inversion: Li₂(x) = −π²/6 − ½ln²(−x) − Li₂(1/x), 1/x ∈ (−1, 0)
        let l = (-x).ln();
        -PI2_6 - 0.5 * l * l - dilog_unchecked(1.0 / x)
    }
}

fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1.0f64;
    loop {
        let term = pow / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) || k > 200.0 {
            return sum;
        }
        pow *= x;
        k += 1.0;
    }
}

/// Gauss-Chebyshev nodes `ϖ_k = cos((2k−1)π/(2K))` with weights
/// `π/K·√(1−ϖ_k²)`, applied to plain (unweighted) integrals on `[a, b]`:
///
/// `∫_a^b g(x) dx ≈ (b−a)/2 · Σ_k w_k g((b−a)/2·ϖ_k + (b+a)/2)`.
///
/// Nodes are built as mirrored pairs so the rule is exactly antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevRule {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "Chebyshev rule needs at least one node");
        let mut nodes = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let kf = k as f64;
        for i in 0..k / 2 {
            let theta = (2 * i + 1) as f64 * PI / (2.0 * kf);
            let (s, c) = theta.sin_cos();
            let w = PI / kf * s;
            nodes[i] = c;
            nodes[k - 1 - i] = -c;
            weights[i] = w;
            weights[k - 1 - i] = w;
        }
        if k % 2 == 1 {
            nodes[k / 2] = 0.0;
            weights[k / 2] = PI / kf;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `ϖ_k`, strictly decreasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `π/K·√(1−ϖ_k²)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_k w_k g(ϖ_k)`, summed over mirrored node pairs.
    pub fn weighted_sum(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let k = self.len();
        let mut sum = 0.0;
        for i in 0..k / 2 {
            let j = k - 1 - i;
            sum += self.weights[i] * (g(self.nodes[i]) + g(self.nodes[j]));
        }
        if k % 2 == 1 {
            sum += self.weights[k / 2] * g(self.nodes[k / 2]);
        }
        sum
    }

    /// Approximates `∫_a^b g(x) dx`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let half = (b - a) / 2.0;
        let mid = (b + a) / 2.0;
        half * self.weighted_sum(|w| g(half * w + mid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((dilog(-1.0).unwrap() + PI * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn domain_error_above_one() {
        assert_eq!(dilog(1.000_001), Err(Error::Domain(1.000_001)));
        assert!(dilog(f64::NAN).is_err());
    }

    #[test]
    fn matches_high_precision_reference() {
        // 40-digit reference values.
        let table = [
            (-1e6, -97.079_099_055_459_640_626),
            (-2345.5, -31.755_277_887_666_878_001),
            (-100.0, -12.238_755_177_314_938_922),
            (-7.5, -3.545_717_104_255_846_224_6),
            (-1.5, -1.147_380_660_375_570_754_1),
            (-0.75, -0.642_761_268_839_978_879_11),
            (-0.5, -0.448_414_206_923_646_202_44),
            (-0.3, -0.280_074_333_759_582_894_52),
            (-1e-3, -0.000_999_750_111_048_651_104_16),
            (0.25, 0.267_652_639_082_732_606_92),
            (0.5, 0.582_240_526_465_012_505_9),
            (0.6, 0.727_586_307_716_333_355_6),
            (0.9, 1.299_714_723_004_958_782),
            (0.999, 1.637_022_605_276_117_736_6),
        ];
        for (x, want) in table {
            let got = dilog(x).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "Li2({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn matches_defining_integral() {
        // Composite Simpson on −ln(1−u)/u, independent of the series path.
        let integral = |x: f64| {
            let n = 20_000;
            let h = x / n as f64;
            let f = |u: f64| if u == 0.0 { 1.0 } else { -(-u).ln_1p() / u };
            let mut s = f(0.0) + f(x);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        for x in [-3.0, -1.2, -0.8, -0.2, 0.3, 0.7] {
            assert!((dilog(x).unwrap() - integral(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn reflection_identity() {
        for i in 1..=100 {
            let x = i as f64 / 101.0;
            let lhs = dilog(x).unwrap() + dilog(1.0 - x).unwrap();
            let rhs = PI * PI / 6.0 - x.ln() * (1.0 - x).ln();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn monotone_increasing(a in -1e4f64..1.0, b in -1e4f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9 * lo.abs().max(1.0));
            prop_assert!(dilog(lo).unwrap() <= dilog(hi).unwrap());
        }
    }

    #[test]
    fn single_node_rule() {
        let r = ChebyshevRule::new(1);
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[PI]);
    }

    #[test]
    fn nodes_are_decreasing_symmetric_and_interior() {
        for k in [2, 3, 7, 50, 51] {
            let r = ChebyshevRule::new(k);
            let n = r.nodes();
            assert!(n.windows(2).all(|w| w[0] > w[1]));
            assert!(n.iter().all(|&x| x > -1.0 && x < 1.0));
            for i in 0..k {
                assert_eq!(n[i], -n[k - 1 - i]);
            }
            for (i, &x) in n.iter().enumerate() {
                let want = ((2 * i + 1) as f64 * PI / (2.0 * k as f64)).cos();
                assert!((x - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn integrates_constant() {
        let r = ChebyshevRule::new(50);
        assert!((r.integrate(-1.0, 1.0, |_| 1.0) - 2.0).abs() <= 1e-3);
        let big = ChebyshevRule::new(5000);
        assert!((big.integrate(-1.0, 1.0, |_| 1.0) - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn odd_function_integrates_to_zero_exactly() {
        for k in 1..=64 {
            assert_eq!(ChebyshevRule::new(k).integrate(-1.0, 1.0, |x| x), 0.0);
        }
    }

    #[test]
    fn converges_on_exponentials() {
        // The rule has O(K⁻²) error for integrands that do not vanish at the
        // interval ends; K = 4000 puts the K vs 4K gap below 1e-6.
        let k = 4000;
        let (r1, r4) = (ChebyshevRule::new(k), ChebyshevRule::new(4 * k));
        for (a, b, c) in [(0.0, 10.0, -0.2), (-1.0, 1.0, 1.0), (0.0, 5.0, 0.3)] {
            let g = |x: f64| (c * x).exp();
            assert!((r1.integrate(a, b, g) - r4.integrate(a, b, g)).abs() <= 1e-6);
            let exact = ((c * b).exp() - (c * a).exp()) / c;
            assert!((r4.integrate(a, b, g) - exact).abs() < 1e-6 * exact.abs());
        }
    }
}
