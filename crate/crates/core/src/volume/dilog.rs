//! The Bloch–Wigner dilogarithm `D(z) = Im Li₂(z) + arg(1 − z) log|z|`.
//!
//! `D(z)` is the signed volume of the ideal tetrahedron with shape `z`.

use crate::scalar::{Cx, Real};
use num_complex::Complex;
use num_traits::One;

/// `B_{2k} / (2k + 1)!` for `k = 1..=12`.
const BERNOULLI_OVER_FACTORIAL: [f64; 12] = [
    0.027777777777777776,
    -0.0002777777777777778,
    4.72411186696901e-06,
    -9.185773074661964e-08,
    1.8978869988971e-09,
    -4.0647616451442256e-11,
    8.921691020456452e-13,
    -1.9939295860721074e-14,
    4.518980029619918e-16,
    -1.0356517612181247e-17,
    2.395218621026187e-19,
    -5.581785874325009e-21,
];

/// Value of `D(z)` together with a flag set when `z` is `0`, `1` or not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilogValue<T> {
    pub value: T,
    pub degenerate: bool,
}

/// Bloch–Wigner dilogarithm. Returns `0` for real `z` and for the degenerate
/// inputs `0`, `1`, `∞`.
pub fn bloch_wigner<T: Real>(z: Cx<T>) -> T {
    bloch_wigner_flagged(z).value
}

/// Like [`bloch_wigner`], also reporting whether `z` was degenerate.
pub fn bloch_wigner_flagged<T: Real>(z: Cx<T>) -> DilogValue<T> {
    let one = Complex::one();
    let degenerate =
        !z.re.is_finite() || !z.im.is_finite() || z == Complex::new(T::zero(), T::zero()) || z == one;
    if degenerate || z.im == T::zero() {
        return DilogValue {
            value: T::zero(),
            degenerate,
        };
    }
    let (w, sign) = reduce(z);
    let value = sign * (li2_reduced(w).im + (one - w).arg() * w.norm().ln());
    DilogValue {
        value,
        degenerate: false,
    }
}

/// Moves `z` into `|w| <= 1, Re w <= 1/2` using the six-fold symmetry of `D`.
///
/// Returns `w` and the sign with `D(z) = sign · D(w)`.
fn reduce<T: Real>(z: Cx<T>) -> (Cx<T>, T) {
    let one: Cx<T> = Complex::one();
    let half = T::lit(0.5);
    let candidates = [
        (z, T::one()),
        (one / (one - z), T::one()),
        (one - one / z, T::one()),
        (one / z, -T::one()),
        (one - z, -T::one()),
        (z / (z - one), -T::one()),
    ];
    for &(w, s) in &candidates {
        if w.norm() <= T::one() && w.re <= half {
            return (w, s);
        }
    }
    // rounding at the region boundaries: take the smallest modulus
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.0.norm() < best.0.norm() {
            best = c;
        }
    }
    best
}

/// `Li₂(w)` through the Bernoulli series in `u = −log(1 − w)`, valid on the
/// reduced region where `|u| < 1.3`.
fn li2_reduced<T: Real>(w: Cx<T>) -> Cx<T> {
    let one: Cx<T> = Complex::one();
    let u = -(one - w).ln();
    let u2 = u * u;
    let mut sum = u - u2 * T::lit(0.25);
    let mut power = u;
    for &b in &BERNOULLI_OVER_FACTORIAL {
        power = power * u2;
        let term = power * T::lit(b);
        sum = sum + term;
        if term.norm() <= T::epsilon() * sum.norm() * T::lit(1e-2) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Clausen function `Cl₂(θ) = −∫₀^θ log|2 sin(t/2)| dt`, split as
    /// `θ − θ log θ − ∫₀^θ log(2 sin(t/2) / t) dt` with Simpson's rule on the smooth part.
    fn clausen_by_quadrature(theta: f64) -> f64 {
        let nodes = 20_000;
        let h = theta / nodes as f64;
        // composite Simpson on a smooth integrand
        let f = |t: f64| {
            if t == 0.0 {
                0.0
            } else {
                (2.0 * (t / 2.0).sin() / t).ln()
            }
        };
        let mut s = f(0.0) + f(theta);
        for i in 1..nodes {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        let smooth = s * h / 3.0;
        theta - theta * theta.ln() - smooth
    }

    /// Power series `Σ wⁿ/n²` for `|w| <= 0.8`.
    fn li2_power_series(w: Cx<f64>) -> Cx<f64> {
        let mut sum = Complex::new(0.0, 0.0);
        let mut p = Complex::new(1.0, 0.0);
        for n in 1..400 {
            p *= w;
            sum += p / (n * n) as f64;
        }
        sum
    }

    #[test]
    fn regular_tetrahedron_is_maximal() {
        let z = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let oracle = clausen_by_quadrature(std::f64::consts::FRAC_PI_3);
        assert!((bloch_wigner(z) - oracle).abs() < 1e-12, "{} {}", bloch_wigner(z), oracle);
        assert!((bloch_wigner(z) - 1.0149416064096536).abs() < 1e-12);
    }

    #[test]
    fn unit_circle_matches_clausen() {
        for k in 1..12 {
            let theta = 0.25 * k as f64;
            let z = Complex::from_polar(1.0, theta);
            assert!((bloch_wigner(z) - clausen_by_quadrature(theta)).abs() < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(bloch_wigner(Complex::new(0.0, 0.0)), 0.0);
        assert!(bloch_wigner_flagged(Complex::new(1.0, 0.0)).degenerate);
        assert!(bloch_wigner_flagged(Complex::new(f64::INFINITY, 0.0)).degenerate);
        assert!(!bloch_wigner_flagged(Complex::new(3.0, 0.0)).degenerate);
        assert_eq!(bloch_wigner(Complex::new(-7.5, 0.0)), 0.0);
    }

    #[test]
    fn single_precision_agrees() {
        let z = Complex::new(0.3f32, 0.9f32);
        let d32 = bloch_wigner(z) as f64;
        let d64 = bloch_wigner(Complex::new(0.3f64, 0.9f64));
        assert!((d32 - d64).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn matches_power_series(r in 0.05f64..0.8, theta in -3.1f64..3.1) {
            let w = Complex::from_polar(r, theta);
            let oracle = li2_power_series(w).im + (Complex::new(1.0, 0.0) - w).arg() * r.ln();
            prop_assert!((bloch_wigner(w) - oracle).abs() < 1e-12);
        }

        #[test]
        fn conjugation_antisymmetry(re in -5.0f64..5.0, im in 0.01f64..5.0) {
            let z = Complex::new(re, im);
            prop_assert!((bloch_wigner(z) + bloch_wigner(z.conj())).abs() < 1e-12);
        }
    }
}
