//! Right-continuous quantile functions `Q(p) = sup { x in R : F(x) <= p }`
//! with `sup {} = -inf` and `sup R = +inf`.
//!
//! Closed forms are used where the family has one; the normal law and
//! mixtures are inverted by bisection down to adjacent floating-point
//! numbers, which is the only approximate path. Empirical quantiles are
//! exact order statistics.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::gev::{gev_quantile, GevParams};
use crate::rng::seeded;
use crate::stats::{ks_distance, normal_cdf};

/// A sorted sample; its step cdf is right-continuous by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ExtReal>", into = "Vec<ExtReal>")]
pub struct EmpiricalCdf {
    sorted: Vec<ExtReal>,
}

impl TryFrom<Vec<ExtReal>> for EmpiricalCdf {
    type Error = Error;

    fn try_from(mut sample: Vec<ExtReal>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidParameter("empirical cdf needs a sample".into()));
        }
        sample.sort();
        Ok(EmpiricalCdf { sorted: sample })
    }
}

impl From<EmpiricalCdf> for Vec<ExtReal> {
    fn from(e: EmpiricalCdf) -> Self {
        e.sorted
    }
}

impl EmpiricalCdf {
    pub fn sorted(&self) -> &[ExtReal] {
        &self.sorted
    }

    fn fraction(&self, count: usize) -> f64 {
        count as f64 / self.sorted.len() as f64
    }

    fn cdf(&self, x: ExtReal) -> f64 {
        self.fraction(self.sorted.partition_point(|v| *v <= x))
    }

    fn left(&self, x: ExtReal) -> f64 {
        self.fraction(self.sorted.partition_point(|v| *v < x))
    }

    /// The order statistic `x_(k+1)` with `k` the largest count such that
    /// `k / n <= p`; `+inf` when every count qualifies.
    fn quantile(&self, p: f64) -> ExtReal {
        let n = self.sorted.len();
        let mut k = ((p * n as f64).floor() as usize).min(n);
        while k < n && self.fraction(k + 1) <= p {
            k += 1;
        }
        while k > 0 && self.fraction(k) > p {
            k -= 1;
        }
        if k >= n {
            ExtReal::PosInf
        } else {
            self.sorted[k]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub cdf: RcCdf,
}

/// A right-continuous distribution function on the extended reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RcCdf {
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
    Gev(GevParams),
    PointMass { at: f64 },
    /// `F(x) = x^k` on `[0, 1]`; the law of the maximum of `k` uniforms.
    Power { k: f64 },
    /// A fair coin choosing between uniform laws on `[a, b]` and `[c, d]`.
    UniformUnion { a: f64, b: f64, c: f64, d: f64 },
    Mixture { components: Vec<MixtureComponent> },
    Empirical { sample: EmpiricalCdf },
}

impl RcCdf {
    pub fn uniform01() -> Self {
        RcCdf::Uniform { a: 0.0, b: 1.0 }
    }

    pub fn standard_normal() -> Self {
        RcCdf::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn unit_frechet() -> Self {
        RcCdf::Gev(GevParams::UNIT_FRECHET)
    }

    pub fn empirical(sample: Vec<ExtReal>) -> Result<Self> {
        Ok(RcCdf::Empirical {
            sample: sample.try_into()?,
        })
    }

    /// Loads a single-column CSV of samples. A non-numeric first line is
    /// treated as a header; `#` lines are comments.
    pub fn empirical_from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate()
        {
            match line.parse::<ExtReal>() {
                Ok(v) => values.push(v),
                Err(_) if i == 0 => continue,
                Err(e) => return Err(e),
            }
        }
        Self::empirical(values)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("{msg}: {self:?}")));
        match self {
            RcCdf::Uniform { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                bad("uniform needs a < b")
            }
            RcCdf::Normal { mean, sd } if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) => {
                bad("normal needs sd > 0")
            }
            RcCdf::Gev(t) => t.validate(),
            RcCdf::PointMass { at } if !at.is_finite() => bad("point mass must be finite"),
            RcCdf::Power { k } if !(*k > 0.0 && k.is_finite()) => bad("power needs k > 0"),
            RcCdf::UniformUnion { a, b, c, d } if !(a < b && b <= c && c < d) => {
                bad("uniform union needs a < b <= c < d")
            }
            RcCdf::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture needs components");
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if components.iter().any(|c| c.weight < 0.0) || (total - 1.0).abs() > 1e-12 {
                    return bad("mixture weights must be nonnegative and sum to 1");
                }
                components.iter().try_for_each(|c| c.cdf.validate())
            }
            _ => Ok(()),
        }
    }

    /// `F(x) = P[X <= x]`; `F(+inf) = 1`.
    pub fn cdf(&self, x: ExtReal) -> f64 {
        if x == ExtReal::PosInf {
            return 1.0;
        }
        if let RcCdf::Empirical { sample } = self {
            return sample.cdf(x);
        }
        if let RcCdf::Mixture { components } = self {
            return components.iter().map(|c| c.weight * c.cdf.cdf(x)).sum();
        }
        let x = match x {
            ExtReal::NegInf => return 0.0,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => unreachable!(),
        };
        match self {
            RcCdf::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            RcCdf::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            RcCdf::Gev(t) => t.cdf(ExtReal::Finite(x)),
            RcCdf::PointMass { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            RcCdf::Power { k } => x.clamp(0.0, 1.0).powf(*k),
            RcCdf::UniformUnion { a, b, c, d } => {
                0.5 * ((x - a) / (b - a)).clamp(0.0, 1.0) + 0.5 * ((x - c) / (d - c)).clamp(0.0, 1.0)
            }
            RcCdf::Mixture { .. } | RcCdf::Empirical { .. } => unreachable!(),
        }
    }

    /// `P[X < x]`, the left limit of the cdf. Exact for every family.
    pub fn left(&self, x: ExtReal) -> f64 {
        match self {
            RcCdf::Empirical { sample } => sample.left(x),
            RcCdf::Mixture { components } => {
                components.iter().map(|c| c.weight * c.cdf.left(x)).sum()
            }
            RcCdf::PointMass { at } => {
                if x > ExtReal::Finite(*at) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => match x {
                ExtReal::NegInf => 0.0,
                // Continuous families put no mass at +inf.
                ExtReal::PosInf => 1.0,
                x => self.cdf(x),
            },
        }
    }

    pub fn is_atomless(&self) -> bool {
        match self {
            RcCdf::PointMass { .. } | RcCdf::Empirical { .. } => false,
            RcCdf::Mixture { components } => components.iter().all(|c| c.cdf.is_atomless()),
            _ => true,
        }
    }

    /// Right-continuous quantile.
    pub fn quantile(&self, p: f64) -> Result<ExtReal> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        if p == 1.0 {
            // F(x) <= 1 on all of R.
            return Ok(ExtReal::PosInf);
        }
        Ok(match self {
            RcCdf::Uniform { a, b } => self.snap(a + p * (b - a), p),
            RcCdf::Gev(t) => gev_quantile(p, t)?,
            RcCdf::PointMass { at } => ExtReal::Finite(*at),
            RcCdf::Power { k } => self.snap(p.powf(1.0 / k), p),
            RcCdf::UniformUnion { a, b, c, d } => {
                if p < 0.5 {
                    self.snap(a + 2.0 * p * (b - a), p)
                } else {
                    self.snap(c + (2.0 * p - 1.0) * (d - c), p)
                }
            }
            RcCdf::Empirical { sample } => sample.quantile(p),
            RcCdf::Normal { .. } if p == 0.0 => ExtReal::NegInf,
            RcCdf::Normal { .. } | RcCdf::Mixture { .. } => self.bisect_quantile(p),
        })
    }

    /// Moves a closed-form quantile the few ulps needed to be the largest
    /// float with `F(q) <= p` under this cdf's own rounding.
    fn snap(&self, mut q: f64, p: f64) -> ExtReal {
        for _ in 0..16 {
            if self.cdf(ExtReal::Finite(q)) > p {
                q = q.next_down();
            } else if self.cdf(ExtReal::Finite(q.next_up())) <= p {
                q = q.next_up();
            } else {
                break;
            }
        }
        ExtReal::Finite(q)
    }

    /// `sup { x : F(x) <= p }` by bracket expansion and bisection, keeping
    /// `F(lo) <= p < F(hi)` until `lo` and `hi` are adjacent floats.
    fn bisect_quantile(&self, p: f64) -> ExtReal {
        let f = |x: f64| self.cdf(ExtReal::Finite(x));
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while f(hi) <= p {
            hi *= 2.0;
            if hi > 1e300 {
                return ExtReal::PosInf;
            }
        }
        while f(lo) > p {
            lo *= 2.0;
            if lo < -1e300 {
                return ExtReal::NegInf;
            }
        }
        for _ in 0..2200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) <= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ExtReal::Finite(lo)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExtReal {
        match self {
            RcCdf::Uniform { a, b } => ExtReal::Finite(a + (b - a) * rng.random::<f64>()),
            RcCdf::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                ExtReal::Finite(mean + sd * z)
            }
            RcCdf::Gev(t) => {
                let u: f64 = Open01.sample(rng);
                t.from_unit_frechet(ExtReal::Finite(-1.0 / u.ln()))
            }
            RcCdf::PointMass { at } => ExtReal::Finite(*at),
            RcCdf::Power { k } => ExtReal::Finite(rng.random::<f64>().powf(1.0 / k)),
            RcCdf::UniformUnion { a, b, c, d } => {
                let u = rng.random::<f64>();
                if rng.random::<bool>() {
                    ExtReal::Finite(a + (b - a) * u)
                } else {
                    ExtReal::Finite(c + (d - c) * u)
                }
            }
            RcCdf::Mixture { components } => {
                let mut u = rng.random::<f64>();
                for c in components {
                    if u < c.weight {
                        return c.cdf.sample(rng);
                    }
                    u -= c.weight;
                }
                components.last().unwrap().cdf.sample(rng)
            }
            RcCdf::Empirical { sample } => {
                let s = sample.sorted();
                s[rng.random_range(0..s.len())]
            }
        }
    }
}

pub fn eval_quantile(cdf: &RcCdf, p: f64) -> Result<ExtReal> {
    cdf.quantile(p)
}

/// Whether `x <= Q(p)` and `P[X < x] <= p` agree for this `(x, p)`.
/// They always should; this is a property oracle.
pub fn galois_check(cdf: &RcCdf, x: ExtReal, p: f64) -> Result<bool> {
    let q = cdf.quantile(p)?;
    Ok((x <= q) == (cdf.left(x) <= p))
}

/// Draws `V` uniform on `[0, 1)`, forms `Q(V)` and returns the KS distance
/// between the law of `Q(V)` and `F`.
pub fn quantile_of_uniform_pushforward(cdf: &RcCdf, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter("pushforward check needs n >= 1000".into()));
    }
    let mut rng = seeded(seed);
    let draws = (0..n_samples)
        .map(|_| cdf.quantile(rng.random::<f64>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ks_distance(&draws, |x| cdf.cdf(x), |x| cdf.left(x)))
}

/// The probability grid `{0, 0.01, ..., 0.99}`.
pub fn percent_grid() -> Vec<f64> {
    (0..100).map(|i| i as f64 / 100.0).collect()
}

/// Finite surrogate of `Q(p) >= limsup_n Q_n(p)`: with `tail_max` the law of
/// `max(X_j, ..., X_m)`, checks `Q_max(p) >= max_n Q_n(p)` on
/// [`percent_grid`]. The asymptotic statement concerns `limsup X_n` of an
/// infinite sequence and is not checkable on finitely many laws.
pub fn limsup_quantile_bound(family: &[RcCdf], tail_max: &RcCdf) -> Result<bool> {
    for p in percent_grid() {
        let q = tail_max.quantile(p)?;
        for member in family {
            if member.quantile(p)? > q {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
