//! Small statistical helpers shared by the Monte Carlo checks.

use crate::ext::ExtReal;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Kolmogorov-Smirnov 99% band coefficient: reject when `D > KS99 / sqrt(n)`.
pub const KS99: f64 = 1.63;

pub fn ks_band_99(n: usize) -> f64 {
    KS99 / (n as f64).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Proportion estimate with its normal-approximation 95% half-width.
pub fn proportion(successes: u64, n: u64) -> (f64, f64) {
    let p = successes as f64 / n as f64;
    (p, Z95 * (p * (1.0 - p) / n as f64).sqrt())
}

/// Pooled two-proportion z statistic for `k1 / n` against `k2 / n`.
pub fn two_proportion_z(k1: u64, k2: u64, n: u64) -> f64 {
    let n = n as f64;
    let (p1, p2) = (k1 as f64 / n, k2 as f64 / n);
    let pooled = (p1 + p2) / 2.0;
    let se = (pooled * (1.0 - pooled) * 2.0 / n).sqrt();
    if se == 0.0 {
        if p1 == p2 {
            0.0
        } else {
            f64::INFINITY.copysign(p1 - p2)
        }
    } else {
        (p1 - p2) / se
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and a
/// distribution given by its cdf and left limit `P[X < x]`.
///
/// The supremum over the extended line is attained at a sample value or at a
/// left limit of one, and at the two infinities; all of these are checked,
/// so atoms of either law are handled exactly.
pub fn ks_distance(
    samples: &[ExtReal],
    cdf: impl Fn(ExtReal) -> f64,
    left: impl Fn(ExtReal) -> f64,
) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort();
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((upto - cdf(x)).abs());
        d = d.max((below - left(x)).abs());
        i = j;
    }
    // The empirical cdf is 0 left of the first sample and 1 at +inf.
    if sorted.first() != Some(&ExtReal::NegInf) {
        d = d.max(cdf(ExtReal::NegInf));
    }
    let finite_or_less = sorted.iter().filter(|v| **v < ExtReal::PosInf).count() as f64 / n;
    d = d.max((finite_or_less - left(ExtReal::PosInf)).abs());
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn z_statistic() {
        assert_eq!(two_proportion_z(10, 10, 100), 0.0);
        assert!(two_proportion_z(60, 40, 100) > 2.0);
        assert_eq!(two_proportion_z(0, 0, 100), 0.0);
    }

    #[test]
    fn ks_against_point_mass_is_zero() {
        let samples = vec![ExtReal::Finite(2.0); 10];
        let d = ks_distance(
            &samples,
            |x| if x >= ExtReal::Finite(2.0) { 1.0 } else { 0.0 },
            |x| if x > ExtReal::Finite(2.0) { 1.0 } else { 0.0 },
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_detects_missing_mass() {
        let samples = vec![ExtReal::Finite(0.5); 4];
        let uniform = |x: ExtReal| x.to_f64().clamp(0.0, 1.0);
        let d = ks_distance(&samples, uniform, uniform);
        assert!((d - 0.5).abs() < 1e-15);
    }
}
