//! Generalized extreme-value distributions.
//!
//! `F(x; g, m, s) = exp(-(1 + g (x - m) / s)^(-1/g))`, with the Gumbel form
//! at `g = 0`. Every formula that is `0/0` at `g = 0` goes through
//! [`box_cox`] or [`log1p_over`], which switch to a series below
//! [`GAMMA_SERIES_THRESHOLD`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::grid::Domain;
use crate::transform::Side;

/// Below this `|gamma|` the shape-dependent formulas use a Taylor series.
pub const GAMMA_SERIES_THRESHOLD: f64 = 1e-8;

/// Bracket searched by [`params_from_quantiles`] for the shape.
pub const GAMMA_BRACKET: (f64, f64) = (-10.0, 10.0);

/// `(z^g - 1) / g` for `z > 0`, continuous through `g = 0` where it is `ln z`.
pub fn box_cox(z: f64, gamma: f64) -> f64 {
    let l = z.ln();
    if gamma == 0.0 {
        l
    } else if gamma.abs() < GAMMA_SERIES_THRESHOLD {
        l * (1.0 + 0.5 * gamma * l + gamma * gamma * l * l / 6.0)
    } else {
        (gamma * l).exp_m1() / gamma
    }
}

/// `log(1 + g w) / g` for `1 + g w > 0`, equal to `w` at `g = 0`.
pub fn log1p_over(w: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        w
    } else if gamma.abs() < GAMMA_SERIES_THRESHOLD {
        w * (1.0 - 0.5 * gamma * w + gamma * gamma * w * w / 3.0)
    } else {
        (gamma * w).ln_1p() / gamma
    }
}

/// Shape, location and scale of a GEV law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub gamma: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl GevParams {
    pub const UNIT_FRECHET: GevParams = GevParams {
        gamma: 1.0,
        mu: 1.0,
        sigma: 1.0,
    };

    pub fn new(gamma: f64, mu: f64, sigma: f64) -> Result<Self> {
        let p = GevParams { gamma, mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.mu.is_finite() && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite GEV parameter {self:?}")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "GEV scale must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn lower_endpoint(&self) -> ExtReal {
        if self.gamma > 0.0 {
            ExtReal::Finite(self.mu - self.sigma / self.gamma)
        } else {
            ExtReal::NegInf
        }
    }

    pub fn upper_endpoint(&self) -> ExtReal {
        if self.gamma < 0.0 {
            ExtReal::Finite(self.mu - self.sigma / self.gamma)
        } else {
            ExtReal::PosInf
        }
    }

    /// `-log F(x)`, in `[0, +inf]`.
    pub fn neg_log_cdf(&self, x: ExtReal) -> f64 {
        let x = match x {
            ExtReal::NegInf => return f64::INFINITY,
            ExtReal::PosInf => return 0.0,
            ExtReal::Finite(x) => x,
        };
        let w = (x - self.mu) / self.sigma;
        if 1.0 + self.gamma * w <= 0.0 {
            return if self.gamma > 0.0 { f64::INFINITY } else { 0.0 };
        }
        (-log1p_over(w, self.gamma)).exp()
    }

    pub fn cdf(&self, x: ExtReal) -> f64 {
        (-self.neg_log_cdf(x)).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<ExtReal> {
        gev_quantile(p, self)
    }

    /// `-1 / log F(x)`, the unit-Frechet standardization of `x`.
    /// `F = 0` maps to 0 and `F = 1` to `+inf`.
    pub fn to_unit_frechet(&self, x: ExtReal) -> ExtReal {
        let t = self.neg_log_cdf(x);
        if t == 0.0 {
            ExtReal::PosInf
        } else {
            ExtReal::from_f64(1.0 / t)
        }
    }

    /// `Q(Phi(z))`: the inverse of [`GevParams::to_unit_frechet`] on `[0, +inf]`.
    pub fn from_unit_frechet(&self, z: ExtReal) -> ExtReal {
        match z {
            ExtReal::NegInf => self.lower_endpoint(),
            ExtReal::Finite(z) if z <= 0.0 => self.lower_endpoint(),
            ExtReal::PosInf => self.upper_endpoint(),
            ExtReal::Finite(z) => {
                ExtReal::from_f64(self.mu + self.sigma * box_cox(z, self.gamma))
            }
        }
    }
}

/// GEV distribution function; total on the extended reals.
pub fn gev_cdf(x: ExtReal, theta: &GevParams) -> f64 {
    theta.cdf(x)
}

/// GEV quantile in closed form. `p = 0` gives the lower endpoint and `p = 1`
/// the upper endpoint (`+inf` unless `gamma < 0`).
pub fn gev_quantile(p: f64, theta: &GevParams) -> Result<ExtReal> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if p == 0.0 {
        return Ok(theta.lower_endpoint());
    }
    if p == 1.0 {
        return Ok(theta.upper_endpoint());
    }
    let z = -1.0 / p.ln();
    Ok(ExtReal::from_f64(
        theta.mu + theta.sigma * box_cox(z, theta.gamma),
    ))
}

/// Norming constants `(a_n, b_n)` with `F^n(a_n x + b_n) = F(x)`.
pub fn norming(n: u64, theta: &GevParams) -> (f64, f64) {
    assert!(n >= 1, "norming needs n >= 1");
    let ln_n = (n as f64).ln();
    let GevParams { gamma, mu, sigma } = *theta;
    let a = (gamma * ln_n).exp();
    // (n^g - 1) / g = box_cox(n, g)
    let b = (sigma - gamma * mu) * box_cox(n as f64, gamma);
    (a, b)
}

/// Largest absolute deviation in the two max-stability identities
/// `F^n(a_n x + b_n) = F(x)` over `x_grid` and
/// `Q(p^(1/n)) = a_n Q(p) + b_n` over `p_grid`.
pub fn check_max_stability_identity(
    theta: &GevParams,
    n: u64,
    x_grid: &[f64],
    p_grid: &[f64],
) -> Result<f64> {
    let (a, b) = norming(n, theta);
    let mut worst = 0.0f64;
    for &x in x_grid {
        let lhs = theta.cdf(ExtReal::Finite(a * x + b)).powi(n as i32);
        let rhs = theta.cdf(ExtReal::Finite(x));
        worst = worst.max((lhs - rhs).abs());
    }
    for &p in p_grid {
        let lhs = gev_quantile(p.powf(1.0 / n as f64), theta)?;
        let rhs = match gev_quantile(p, theta)? {
            ExtReal::Finite(q) => ExtReal::Finite(a * q + b),
            inf => inf,
        };
        worst = worst.max(lhs.distance(rhs));
    }
    Ok(worst)
}

fn is_e_inv(p: f64) -> bool {
    (p - (-1.0f64).exp()).abs() < 1e-12
}

/// Recovers `(gamma, mu, sigma)` from the quantiles at `exp(-1)`, `p1` and `p2`.
///
/// `mu` is the quantile at `exp(-1)`. With `x = -1/log p1`, `y = -1/log p2`
/// the shape solves `(q1 - mu) / (q2 - mu) = (x^g - 1) / (y^g - 1)`, read as
/// `log x / log y` at `g = 0`; the ratio is monotone in `g` and is inverted
/// by bisection over [`GAMMA_BRACKET`]. The scale follows from the better
/// conditioned of the two residual equations.
pub fn params_from_quantiles(
    q_at_e_inv: f64,
    q_at_p1: f64,
    q_at_p2: f64,
    p1: f64,
    p2: f64,
) -> Result<GevParams> {
    for p in [p1, p2] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        if is_e_inv(p) {
            return Err(Error::InvalidParameter(
                "probe probabilities must differ from exp(-1)".into(),
            ));
        }
    }
    if p1 == p2 {
        return Err(Error::InvalidParameter("p1 and p2 must differ".into()));
    }
    if ![q_at_e_inv, q_at_p1, q_at_p2].iter().all(|q| q.is_finite()) {
        return Err(Error::NotGevTriple("quantiles must be finite".into()));
    }
    if q_at_p1 == q_at_p2 {
        return Err(Error::NotGevTriple("q1 equals q2".into()));
    }
    let mu = q_at_e_inv;
    let (d1, d2) = (q_at_p1 - mu, q_at_p2 - mu);
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::NotGevTriple(
            "a quantile coincides with the location".into(),
        ));
    }
    let x = -1.0 / p1.ln();
    let y = -1.0 / p2.ln();
    let target = d1 / d2;
    let ratio = |g: f64| box_cox(x, g) / box_cox(y, g);

    let (lo, hi) = GAMMA_BRACKET;
    let (r_lo, r_hi) = (ratio(lo), ratio(hi));
    let increasing = r_hi > r_lo;
    let (min, max) = if increasing { (r_lo, r_hi) } else { (r_hi, r_lo) };
    if !(target >= min && target <= max) {
        return Err(Error::NotGevTriple(format!(
            "ratio {target} outside attainable range [{min}, {max}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if (ratio(mid) < target) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    let gamma = 0.5 * (a + b);
    let sigma = if d1.abs() >= d2.abs() {
        d1 / box_cox(x, gamma)
    } else {
        d2 / box_cox(y, gamma)
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NotGevTriple(format!("implied scale {sigma}")));
    }
    let theta = GevParams { gamma, mu, sigma };
    let residual = fit_residual(&theta, &[((-1.0f64).exp(), q_at_e_inv), (p1, q_at_p1), (p2, q_at_p2)]);
    let scale = 1.0 + q_at_p1.abs().max(q_at_p2.abs()).max(mu.abs());
    if residual > 1e-8 * scale {
        return Err(Error::NotGevTriple(format!("round-trip residual {residual}")));
    }
    Ok(theta)
}

/// Largest `|Q(p; theta) - q|` over `(p, q)` pairs.
pub fn fit_residual(theta: &GevParams, pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|&(p, q)| match gev_quantile(p, theta) {
            Ok(v) => v.distance(ExtReal::Finite(q)),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// GEV parameters as a function of the location `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaField {
    Constant {
        theta: GevParams,
    },
    /// `theta(s) = intercept + sum_k slope[k] * s_k`, componentwise.
    Affine {
        intercept: GevParams,
        slope: Vec<[f64; 3]>,
    },
    /// Node values on a grid, multilinearly interpolated. With `continuous`
    /// set, adjacent nodes differ by at most `lipschitz` in every component.
    Table {
        domain: Domain,
        values: Vec<GevParams>,
        continuous: bool,
        lipschitz: f64,
    },
    /// `base` everywhere except at one location; never continuous.
    PointException {
        base: Box<ThetaField>,
        at: Vec<f64>,
        theta: GevParams,
    },
}

const POINT_TOL: f64 = 1e-12;

pub(crate) fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= POINT_TOL)
}

impl ThetaField {
    pub fn constant(theta: GevParams) -> Self {
        ThetaField::Constant { theta }
    }

    pub fn eval(&self, s: &[f64]) -> GevParams {
        match self {
            ThetaField::Constant { theta } => *theta,
            ThetaField::Affine { intercept, slope } => {
                let mut p = [intercept.gamma, intercept.mu, intercept.sigma];
                for (k, sl) in slope.iter().enumerate() {
                    let sk = s.get(k).copied().unwrap_or(0.0);
                    for c in 0..3 {
                        p[c] += sl[c] * sk;
                    }
                }
                GevParams {
                    gamma: p[0],
                    mu: p[1],
                    sigma: p[2],
                }
            }
            ThetaField::Table { domain, values, .. } => interpolate(domain, values, s),
            ThetaField::PointException { base, at, theta } => {
                if same_point(s, at) {
                    *theta
                } else {
                    base.eval(s)
                }
            }
        }
    }

    /// Limit of `theta(t)` as `t -> s` from one side, `t != s`.
    pub fn limit(&self, s: &[f64], side: Side) -> GevParams {
        match self {
            ThetaField::PointException { base, .. } => base.limit(s, side),
            other => other.eval(s),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            ThetaField::Constant { .. } | ThetaField::Affine { .. } => true,
            ThetaField::Table { continuous, .. } => *continuous,
            ThetaField::PointException { .. } => false,
        }
    }

    /// First coordinates where `theta` may jump.
    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            ThetaField::PointException { base, at, .. } => {
                let mut v = base.critical_points();
                v.push(at[0]);
                v
            }
            _ => Vec::new(),
        }
    }

    /// Checks that `sigma > 0` over the domain and that a table flagged
    /// continuous honours its Lipschitz budget.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            ThetaField::Constant { theta } => theta.validate(),
            ThetaField::Affine { slope, .. } => {
                if slope.len() > domain.dim() {
                    return Err(Error::InvalidParameter(
                        "affine theta has more slopes than axes".into(),
                    ));
                }
                // Affine components attain their extremes at the corners.
                let b = domain.bounds();
                let corners: Vec<Vec<f64>> = if domain.dim() == 1 {
                    vec![vec![b[0][0]], vec![b[0][1]]]
                } else {
                    let mut v = Vec::new();
                    for x in b[0] {
                        for y in b[1] {
                            v.push(vec![x, y]);
                        }
                    }
                    v
                };
                corners.iter().try_for_each(|c| self.eval(c).validate())
            }
            ThetaField::Table {
                domain: table_domain,
                values,
                continuous,
                lipschitz,
            } => {
                if values.len() != table_domain.n_nodes() {
                    return Err(Error::InvalidParameter("theta table size mismatch".into()));
                }
                values.iter().try_for_each(GevParams::validate)?;
                if *continuous {
                    for n in 0..table_domain.n_nodes() {
                        for m in table_domain.neighborhood(n, 1) {
                            let (a, b) = (values[n], values[m]);
                            let gap = (a.gamma - b.gamma)
                                .abs()
                                .max((a.mu - b.mu).abs())
                                .max((a.sigma - b.sigma).abs());
                            if gap > *lipschitz {
                                return Err(Error::InvalidParameter(format!(
                                    "theta table jumps by {gap} between nodes {n} and {m}"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            ThetaField::PointException { base, theta, .. } => {
                theta.validate()?;
                base.validate(domain)
            }
        }
    }
}

fn interpolate(domain: &Domain, values: &[GevParams], s: &[f64]) -> GevParams {
    let r = domain.resolution();
    // Per-axis (lower index, weight of the upper neighbour).
    let mut cell = [(0usize, 0.0f64); 2];
    for (axis, slot) in cell.iter_mut().enumerate().take(domain.dim()) {
        let [lo, _] = domain.bounds()[axis];
        let t = ((s[axis] - lo) / domain.step(axis)).clamp(0.0, (r - 1) as f64);
        let i = (t.floor() as usize).min(r - 2);
        *slot = (i, t - i as f64);
    }
    let mut acc = [0.0; 3];
    let corners: &[[usize; 2]] = if domain.dim() == 1 {
        &[[0, 0], [1, 0]]
    } else {
        &[[0, 0], [1, 0], [0, 1], [1, 1]]
    };
    for &[di, dj] in corners {
        let wi = if di == 1 { cell[0].1 } else { 1.0 - cell[0].1 };
        let wj = if domain.dim() == 1 {
            1.0
        } else if dj == 1 {
            cell[1].1
        } else {
            1.0 - cell[1].1
        };
        let node = domain.flat_index([cell[0].0 + di, cell[1].0 + dj]);
        let v = values[node];
        acc[0] += wi * wj * v.gamma;
        acc[1] += wi * wj * v.mu;
        acc[2] += wi * wj * v.sigma;
    }
    GevParams {
        gamma: acc[0],
        mu: acc[1],
        sigma: acc[2],
    }
}
