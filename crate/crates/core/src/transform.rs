//! Pointwise transforms `U(s, x)` acting on usc functions through
//! `(U_* z)(s) = U(s, z(s))`.
//!
//! A transform belongs to the class used throughout the crate when
//! `x -> U(s, x)` is non-decreasing and right-continuous for every `s` and
//! `s -> U(s, x)` is usc for every `x`. Such transforms map usc functions to
//! usc functions and compose: `(V o U)_* = V_* o U_*`.
//!
//! Besides pointwise evaluation every node knows an upper bound for
//! `lim_{x' -> x+} limsup_{t -> s} U(t, x')` from either side of `s`, and the
//! finitely many locations where its sections may jump. Together these make
//! the usc test for symbolic trajectories exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::gev::{same_point, ThetaField};
use crate::grid::{usc_hull_grid, Domain, GridField};
use crate::quantile::{MixtureComponent, RcCdf};

/// Side of an approach `t -> s` along the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];
}

/// Relative roundoff guard for section comparisons.
pub(crate) const SECTION_TOL: f64 = 1e-12;

pub(crate) fn dominates(v: ExtReal, bound: ExtReal) -> bool {
    match (v, bound) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a >= b - SECTION_TOL * b.abs().max(1.0),
        _ => v >= bound,
    }
}

/// `x + b`, with `-inf` absorbing.
fn add(x: ExtReal, b: ExtReal) -> ExtReal {
    match (x, b) {
        (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
        (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
        (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::from_f64(a + b),
    }
}

fn clamp01(x: ExtReal) -> f64 {
    match x {
        ExtReal::NegInf => 0.0,
        ExtReal::PosInf => 1.0,
        ExtReal::Finite(v) => v.clamp(0.0, 1.0),
    }
}

fn push_unique(points: &mut Vec<f64>, p: f64) {
    if !points.iter().any(|&q| q == p) {
        points.push(p);
    }
}

/// A function of the location `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SFn {
    Const {
        value: ExtReal,
    },
    /// `intercept + sum_k slope[k] * s_k`.
    Affine {
        intercept: f64,
        slope: Vec<f64>,
    },
    /// Tabulated on a grid, read at the nearest node.
    Grid {
        field: GridField,
    },
    /// `base` except at one location.
    WithPoint {
        base: Box<SFn>,
        at: Vec<f64>,
        value: ExtReal,
    },
}

impl SFn {
    pub fn constant(v: f64) -> Self {
        SFn::Const {
            value: ExtReal::from_f64(v),
        }
    }

    pub fn eval(&self, s: &[f64]) -> ExtReal {
        match self {
            SFn::Const { value } => *value,
            SFn::Affine { intercept, slope } => ExtReal::from_f64(
                intercept
                    + slope
                        .iter()
                        .zip(s)
                        .map(|(c, x)| c * x)
                        .sum::<f64>(),
            ),
            SFn::Grid { field } => field.at_point(s),
            SFn::WithPoint { base, at, value } => {
                if same_point(s, at) {
                    *value
                } else {
                    base.eval(s)
                }
            }
        }
    }

    /// One-sided limit along the first axis; tabulated functions are read
    /// at the nearest node.
    pub fn limit(&self, s: &[f64], side: Side) -> ExtReal {
        match self {
            SFn::WithPoint { base, .. } => base.limit(s, side),
            other => other.eval(s),
        }
    }

    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            SFn::WithPoint { base, at, .. } => {
                let mut v = base.critical_points();
                push_unique(&mut v, at[0]);
                v
            }
            _ => Vec::new(),
        }
    }

    fn grid_fields(&self) -> Vec<&GridField> {
        match self {
            SFn::Grid { field } => vec![field],
            SFn::WithPoint { base, .. } => base.grid_fields(),
            _ => Vec::new(),
        }
    }
}

/// A family `s -> F_s` of right-continuous distribution functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginFamily {
    Constant {
        cdf: RcCdf,
    },
    Gev {
        theta: ThetaField,
    },
    /// `base` except at one location.
    PointException {
        base: Box<MarginFamily>,
        at: Vec<f64>,
        cdf: RcCdf,
    },
    /// `left` for `s_1 <= at`, `right` for `s_1 > at`.
    Split {
        at: f64,
        left: Box<MarginFamily>,
        right: Box<MarginFamily>,
    },
    /// `(1 - w) from + w to` with `w = (s_1 - s0) / (s1 - s0)` clamped to
    /// `[0, 1]`.
    LinearMix {
        s0: f64,
        s1: f64,
        from: RcCdf,
        to: RcCdf,
    },
    /// Uniform on `[0, slope * |s_1|]`, a point mass at 0 when `s_1 = 0`.
    UniformZeroTo {
        slope: f64,
    },
}

impl MarginFamily {
    pub fn constant(cdf: RcCdf) -> Self {
        MarginFamily::Constant { cdf }
    }

    pub fn at(&self, s: &[f64]) -> RcCdf {
        match self {
            MarginFamily::Constant { cdf } => cdf.clone(),
            MarginFamily::Gev { theta } => RcCdf::Gev(theta.eval(s)),
            MarginFamily::PointException { base, at, cdf } => {
                if same_point(s, at) {
                    cdf.clone()
                } else {
                    base.at(s)
                }
            }
            MarginFamily::Split { at, left, right } => {
                if s[0] <= *at {
                    left.at(s)
                } else {
                    right.at(s)
                }
            }
            MarginFamily::LinearMix { s0, s1, from, to } => {
                let w = ((s[0] - s0) / (s1 - s0)).clamp(0.0, 1.0);
                if w == 0.0 {
                    from.clone()
                } else if w == 1.0 {
                    to.clone()
                } else {
                    RcCdf::Mixture {
                        components: vec![
                            MixtureComponent {
                                weight: 1.0 - w,
                                cdf: from.clone(),
                            },
                            MixtureComponent {
                                weight: w,
                                cdf: to.clone(),
                            },
                        ],
                    }
                }
            }
            MarginFamily::UniformZeroTo { slope } => {
                let r = slope * s[0].abs();
                if r == 0.0 {
                    RcCdf::PointMass { at: 0.0 }
                } else {
                    RcCdf::Uniform { a: 0.0, b: r }
                }
            }
        }
    }

    /// Weak limit of `F_t` as `t -> s` from one side.
    pub fn limit(&self, s: &[f64], side: Side) -> RcCdf {
        match self {
            MarginFamily::Gev { theta } => RcCdf::Gev(theta.limit(s, side)),
            MarginFamily::PointException { base, .. } => base.limit(s, side),
            MarginFamily::Split { at, left, right } => {
                let left_wins = s[0] < *at || (s[0] == *at && side == Side::Left);
                if left_wins {
                    left.limit(s, side)
                } else {
                    right.limit(s, side)
                }
            }
            other => other.at(s),
        }
    }

    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            MarginFamily::Constant { .. } | MarginFamily::LinearMix { .. } => Vec::new(),
            MarginFamily::Gev { theta } => theta.critical_points(),
            MarginFamily::PointException { base, at, .. } => {
                let mut v = base.critical_points();
                push_unique(&mut v, at[0]);
                v
            }
            MarginFamily::Split { at, left, right } => {
                let mut v = left.critical_points();
                for p in right.critical_points() {
                    push_unique(&mut v, p);
                }
                push_unique(&mut v, *at);
                v
            }
            MarginFamily::UniformZeroTo { .. } => vec![0.0],
        }
    }

    /// Whether every `F_s` is free of atoms.
    pub fn is_atomless(&self) -> bool {
        match self {
            MarginFamily::Constant { cdf } => cdf.is_atomless(),
            MarginFamily::Gev { .. } => true,
            MarginFamily::PointException { base, cdf, .. } => base.is_atomless() && cdf.is_atomless(),
            MarginFamily::Split { left, right, .. } => left.is_atomless() && right.is_atomless(),
            MarginFamily::LinearMix { from, to, .. } => from.is_atomless() && to.is_atomless(),
            MarginFamily::UniformZeroTo { .. } => false,
        }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            MarginFamily::Constant { cdf } => cdf.validate(),
            MarginFamily::Gev { theta } => theta.validate(domain),
            MarginFamily::PointException { base, cdf, .. } => {
                base.validate(domain)?;
                cdf.validate()
            }
            MarginFamily::Split { left, right, .. } => {
                left.validate(domain)?;
                right.validate(domain)
            }
            MarginFamily::LinearMix { s0, s1, from, to } => {
                if !(s0 < s1) {
                    return Err(Error::InvalidParameter("linear mix needs s0 < s1".into()));
                }
                from.validate()?;
                to.validate()
            }
            MarginFamily::UniformZeroTo { slope } => {
                if *slope > 0.0 && slope.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("uniform slope must be positive".into()))
                }
            }
        }
    }
}

/// A non-decreasing right-continuous function of `x` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum MonotoneFn {
    Identity,
    Clamp { lo: f64, hi: f64 },
    /// `a x + b` with `a > 0`.
    Affine { a: f64, b: f64 },
    Exp,
    /// `low` below `at`, `high` from `at` on.
    Step { at: f64, low: f64, high: f64 },
}

impl MonotoneFn {
    pub fn eval(&self, x: ExtReal) -> ExtReal {
        match *self {
            MonotoneFn::Identity => x,
            MonotoneFn::Clamp { lo, hi } => x.max(ExtReal::Finite(lo)).min(ExtReal::Finite(hi)),
            MonotoneFn::Affine { a, b } => match x {
                ExtReal::Finite(v) => ExtReal::from_f64(a * v + b),
                inf if a > 0.0 => inf,
                ExtReal::PosInf => ExtReal::NegInf,
                _ => ExtReal::PosInf,
            },
            MonotoneFn::Exp => match x {
                ExtReal::NegInf => ExtReal::ZERO,
                ExtReal::PosInf => ExtReal::PosInf,
                ExtReal::Finite(v) => ExtReal::from_f64(v.exp()),
            },
            MonotoneFn::Step { at, low, high } => {
                if x >= ExtReal::Finite(at) {
                    ExtReal::Finite(high)
                } else {
                    ExtReal::Finite(low)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MonotoneFn::Clamp { lo, hi } => lo <= hi,
            MonotoneFn::Affine { a, b } => a > 0.0 && a.is_finite() && b.is_finite(),
            MonotoneFn::Step { low, high, .. } => low <= high,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("not monotone: {self:?}")))
        }
    }
}

/// Expression tree for a transform `U(s, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PointwiseMap {
    Identity,
    MonotoneRc { f: MonotoneFn },
    MaxWith { y: SFn },
    MinWith { y: SFn },
    /// `a(s) x` with `a` continuous and positive.
    Scale { a: SFn },
    /// `x + b(s)` with `b` usc.
    Shift { b: SFn },
    /// `Q_s((x v 0) ^ 1)`.
    QuantileMap { family: MarginFamily },
    CdfMap { family: MarginFamily },
    /// `-1 / log F(x; theta(s))`.
    GevStandardize { theta: ThetaField },
    /// `Q(Phi(x); theta(s))`.
    GevDestandardize { theta: ThetaField },
    /// `outer(s, inner(s, x))`.
    Compose {
        outer: Box<PointwiseMap>,
        inner: Box<PointwiseMap>,
    },
}

pub fn compose(outer: PointwiseMap, inner: PointwiseMap) -> PointwiseMap {
    PointwiseMap::Compose {
        outer: Box::new(outer),
        inner: Box::new(inner),
    }
}

impl PointwiseMap {
    pub fn scale(a: f64) -> Self {
        PointwiseMap::Scale { a: SFn::constant(a) }
    }

    pub fn shift(b: f64) -> Self {
        PointwiseMap::Shift { b: SFn::constant(b) }
    }

    pub fn eval(&self, s: &[f64], x: ExtReal) -> ExtReal {
        match self {
            PointwiseMap::Identity => x,
            PointwiseMap::MonotoneRc { f } => f.eval(x),
            PointwiseMap::MaxWith { y } => x.max(y.eval(s)),
            PointwiseMap::MinWith { y } => x.min(y.eval(s)),
            PointwiseMap::Scale { a } => x.scale(a.eval(s).to_f64()),
            PointwiseMap::Shift { b } => add(x, b.eval(s)),
            PointwiseMap::QuantileMap { family } => quantile_clamped(&family.at(s), x),
            PointwiseMap::CdfMap { family } => ExtReal::Finite(family.at(s).cdf(x)),
            PointwiseMap::GevStandardize { theta } => theta.eval(s).to_unit_frechet(x),
            PointwiseMap::GevDestandardize { theta } => theta.eval(s).from_unit_frechet(x),
            PointwiseMap::Compose { outer, inner } => outer.eval(s, inner.eval(s, x)),
        }
    }

    /// Upper bound for `lim_{x' -> x+} limsup_{t -> s, t on side} U(t, x')`.
    ///
    /// Each node evaluates its section limit at `x`; right-continuity in `x`
    /// makes that the limit from above. For a trajectory with side limit `x`
    /// at `s`, the result bounds the limsup of `U(t, z(t))` from that side.
    pub fn limit(&self, s: &[f64], side: Side, x: ExtReal) -> ExtReal {
        match self {
            PointwiseMap::Identity | PointwiseMap::MonotoneRc { .. } => self.eval(s, x),
            PointwiseMap::MaxWith { y } => x.max(y.limit(s, side)),
            PointwiseMap::MinWith { y } => x.min(y.limit(s, side)),
            PointwiseMap::Scale { a } => x.scale(a.limit(s, side).to_f64()),
            PointwiseMap::Shift { b } => add(x, b.limit(s, side)),
            PointwiseMap::QuantileMap { family } => quantile_clamped(&family.limit(s, side), x),
            PointwiseMap::CdfMap { family } => ExtReal::Finite(family.limit(s, side).cdf(x)),
            PointwiseMap::GevStandardize { theta } => theta.limit(s, side).to_unit_frechet(x),
            PointwiseMap::GevDestandardize { theta } => theta.limit(s, side).from_unit_frechet(x),
            PointwiseMap::Compose { outer, inner } => {
                outer.limit(s, side, inner.limit(s, side, x))
            }
        }
    }

    /// First coordinates where some section `s -> U(s, x)` may jump.
    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            PointwiseMap::Identity | PointwiseMap::MonotoneRc { .. } => Vec::new(),
            PointwiseMap::MaxWith { y } | PointwiseMap::MinWith { y } => y.critical_points(),
            PointwiseMap::Scale { a } => a.critical_points(),
            PointwiseMap::Shift { b } => b.critical_points(),
            PointwiseMap::QuantileMap { family } | PointwiseMap::CdfMap { family } => {
                family.critical_points()
            }
            PointwiseMap::GevStandardize { theta } | PointwiseMap::GevDestandardize { theta } => {
                theta.critical_points()
            }
            PointwiseMap::Compose { outer, inner } => {
                let mut v = inner.critical_points();
                for p in outer.critical_points() {
                    push_unique(&mut v, p);
                }
                v
            }
        }
    }

    /// Whether the transformed output of a usc input is usc without further
    /// checks: quantile and cdf maps need atomless families whose sections
    /// are usc, GEV maps need a continuous `theta`.
    pub fn preserves_usc(&self) -> bool {
        match self {
            PointwiseMap::CdfMap { family } => {
                family.is_atomless() && family_sections_usc(family, &default_x_probes())
            }
            PointwiseMap::QuantileMap { family } => family_sections_usc_quantile(family),
            PointwiseMap::GevStandardize { theta } | PointwiseMap::GevDestandardize { theta } => {
                theta.is_continuous()
            }
            PointwiseMap::Compose { outer, inner } => outer.preserves_usc() && inner.preserves_usc(),
            _ => true,
        }
    }

    fn children(&self) -> Vec<&PointwiseMap> {
        match self {
            PointwiseMap::Compose { outer, inner } => vec![outer, inner],
            _ => Vec::new(),
        }
    }

    fn sfns(&self) -> Vec<&SFn> {
        match self {
            PointwiseMap::MaxWith { y } | PointwiseMap::MinWith { y } => vec![y],
            PointwiseMap::Scale { a } => vec![a],
            PointwiseMap::Shift { b } => vec![b],
            _ => self.children().into_iter().flat_map(|c| c.sfns()).collect(),
        }
    }

    /// Structural checks: parameters valid on `domain`, tabulated
    /// functions defined on grids of the same dimension, scale factors
    /// positive.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for f in self.sfns() {
            for g in f.grid_fields() {
                if g.domain().dim() != domain.dim() {
                    return Err(Error::DomainMismatch);
                }
            }
        }
        match self {
            PointwiseMap::MonotoneRc { f } => f.validate(),
            PointwiseMap::QuantileMap { family } | PointwiseMap::CdfMap { family } => {
                family.validate(domain)
            }
            PointwiseMap::GevStandardize { theta } | PointwiseMap::GevDestandardize { theta } => {
                theta.validate(domain)
            }
            PointwiseMap::Compose { outer, inner } => {
                outer.validate(domain)?;
                inner.validate(domain)
            }
            _ => Ok(()),
        }
    }
}

fn quantile_clamped(cdf: &RcCdf, x: ExtReal) -> ExtReal {
    cdf.quantile(clamp01(x))
        .expect("probability clamped to [0, 1]")
}

fn default_x_probes() -> Vec<ExtReal> {
    let mut xs: Vec<ExtReal> = (-40..=40).map(|i| ExtReal::Finite(i as f64 / 8.0)).collect();
    xs.push(ExtReal::PosInf);
    xs
}

fn family_sections_usc(family: &MarginFamily, xs: &[ExtReal]) -> bool {
    let map = PointwiseMap::CdfMap {
        family: family.clone(),
    };
    family
        .critical_points()
        .iter()
        .all(|&c| xs.iter().all(|&x| section_ok(&map, c, x)))
}

fn family_sections_usc_quantile(family: &MarginFamily) -> bool {
    let map = PointwiseMap::QuantileMap {
        family: family.clone(),
    };
    let ps: Vec<ExtReal> = (0..=100).map(|i| ExtReal::Finite(i as f64 / 100.0)).collect();
    family
        .critical_points()
        .iter()
        .all(|&c| ps.iter().all(|&p| section_ok(&map, c, p)))
}

fn section_ok(map: &PointwiseMap, s: f64, x: ExtReal) -> bool {
    let v = map.eval(&[s], x);
    Side::BOTH
        .iter()
        .all(|&side| dominates(v, map.limit(&[s], side, x)))
}

/// Objects a [`PointwiseMap`] can act on.
pub trait Transformable: Sized {
    fn apply_map(&self, map: &PointwiseMap) -> Result<Self>;

    /// Some negative value, as far as the object can be inspected.
    fn find_negative(&self) -> Option<f64>;
}

impl Transformable for GridField {
    fn apply_map(&self, map: &PointwiseMap) -> Result<Self> {
        for f in map.sfns() {
            for g in f.grid_fields() {
                if g.domain() != self.domain() {
                    return Err(Error::DomainMismatch);
                }
            }
        }
        let dim = self.domain().dim();
        Ok(self.map(|c, v| map.eval(&c[..dim], v)))
    }

    fn find_negative(&self) -> Option<f64> {
        self.values()
            .iter()
            .find(|&&v| v < ExtReal::ZERO)
            .map(|v| v.to_f64())
    }
}

/// `U_* z`.
pub fn apply<T: Transformable>(map: &PointwiseMap, z: &T) -> Result<T> {
    z.apply_map(map)
}

/// A transformed object together with whether its usc-ness is guaranteed
/// by the hypotheses on the transform.
#[derive(Debug, Clone)]
pub struct Transformed<T> {
    pub value: T,
    pub usc_safe: bool,
}

/// `Z(s) = F_s(xi(s))`.
pub fn sklar_forward<T: Transformable>(family: &MarginFamily, xi: &T) -> Result<Transformed<T>> {
    let map = PointwiseMap::CdfMap {
        family: family.clone(),
    };
    Ok(Transformed {
        value: xi.apply_map(&map)?,
        usc_safe: map.preserves_usc(),
    })
}

/// `xi(s) = Q_s((Z(s) v 0) ^ 1)`. Quantile families coming from usc
/// processes have usc sections, which the flag reports.
pub fn sklar_backward<T: Transformable>(family: &MarginFamily, z: &T) -> Result<Transformed<T>> {
    let map = PointwiseMap::QuantileMap {
        family: family.clone(),
    };
    Ok(Transformed {
        value: z.apply_map(&map)?,
        usc_safe: map.preserves_usc(),
    })
}

/// `xi*(s) = -1 / log F(xi(s); theta(s))`, with `F = 0` giving 0 and
/// `F = 1` giving `+inf`. Only a continuous `theta` makes the output usc in
/// general.
pub fn gev_standardize<T: Transformable>(theta: &ThetaField, xi: &T) -> Result<Transformed<T>> {
    let map = PointwiseMap::GevStandardize {
        theta: theta.clone(),
    };
    Ok(Transformed {
        value: xi.apply_map(&map)?,
        usc_safe: theta.is_continuous(),
    })
}

/// `xi(s) = Q(Phi(xi*(s)); theta(s))` for `xi* >= 0`.
pub fn gev_destandardize<T: Transformable>(
    theta: &ThetaField,
    xi_star: &T,
) -> Result<Transformed<T>> {
    if let Some(v) = xi_star.find_negative() {
        return Err(Error::NegativeStandardized(v));
    }
    let map = PointwiseMap::GevDestandardize {
        theta: theta.clone(),
    };
    Ok(Transformed {
        value: xi_star.apply_map(&map)?,
        usc_safe: theta.is_continuous(),
    })
}

/// `l(s) = Q_s(0)`, the essential lower bound of the margin at `s`.
pub fn lower_bound_field(family: &MarginFamily, domain: &Domain) -> GridField {
    let dim = domain.dim();
    GridField::from_fn(domain.clone(), |c| quantile_clamped(&family.at(&c[..dim]), ExtReal::ZERO))
}

/// `z -> z v l` with `l` from [`lower_bound_field`].
pub fn lower_bound_clamp(family: &MarginFamily, domain: &Domain) -> PointwiseMap {
    PointwiseMap::MaxWith {
        y: SFn::Grid {
            field: lower_bound_field(family, domain),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Monotone,
    RightContinuous,
    UscSection,
    TabulatedUsc,
    PositiveScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: Condition,
    pub s: Vec<f64>,
    pub x: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub monotone_rc_ok: bool,
    pub usc_sections_ok: bool,
    pub witnesses: Vec<Witness>,
}

/// Offsets for the sampled right-continuity check, in decreasing order.
pub const RC_OFFSETS: [f64; 3] = [1e-3, 1e-6, 1e-9];
const RC_PROBES: usize = 64;
const RC_TOL: f64 = 1e-6;

/// Samples the two membership conditions.
///
/// Monotonicity is checked on consecutive `x` probes (with `-inf` and
/// `+inf` appended) and right-continuity at up to 64 of them with offsets
/// [`RC_OFFSETS`]. Sections are checked exactly at the transform's critical
/// points and the `s` probes, for every `x` probe and `x = +inf`; tabulated
/// functions are checked with the one-step rule of [`usc_hull_grid`].
pub fn validate_membership(
    map: &PointwiseMap,
    domain: &Domain,
    x_probes: &[f64],
    s_probes: &[Vec<f64>],
) -> MembershipReport {
    let mut witnesses = Vec::new();
    let mut xs: Vec<ExtReal> = x_probes.iter().map(|&x| ExtReal::from_f64(x)).collect();
    xs.sort();
    let mut chain = vec![ExtReal::NegInf];
    chain.extend(xs.iter().copied());
    chain.push(ExtReal::PosInf);

    let rc_stride = xs.len().div_ceil(RC_PROBES).max(1);
    for s in s_probes {
        for w in chain.windows(2) {
            if map.eval(s, w[0]) > map.eval(s, w[1]) {
                witnesses.push(Witness {
                    condition: Condition::Monotone,
                    s: s.clone(),
                    x: w[1],
                });
            }
        }
        for &x in xs.iter().step_by(rc_stride) {
            let v = map.eval(s, x);
            let gap = map.eval(s, x.shift(RC_OFFSETS[2])).distance(v);
            let scale = v.finite().map_or(1.0, |f| f.abs().max(1.0));
            if gap > RC_TOL * scale {
                witnesses.push(Witness {
                    condition: Condition::RightContinuous,
                    s: s.clone(),
                    x,
                });
            }
        }
    }
    let monotone_rc_ok = witnesses.is_empty();

    let mut section_x = xs.clone();
    section_x.push(ExtReal::PosInf);
    let lo = domain.bounds()[0][0];
    let hi = domain.bounds()[0][1];
    let mut points: Vec<Vec<f64>> = s_probes.to_vec();
    if domain.dim() == 1 {
        for c in map.critical_points() {
            if (lo..=hi).contains(&c) {
                points.push(vec![c]);
            }
        }
    }
    for s in &points {
        for &x in &section_x {
            let v = map.eval(s, x);
            let sides: &[Side] = if domain.dim() == 1 {
                &Side::BOTH
            } else {
                &[Side::Right]
            };
            if sides.iter().any(|&side| !dominates(v, map.limit(s, side, x))) {
                witnesses.push(Witness {
                    condition: Condition::UscSection,
                    s: s.clone(),
                    x,
                });
            }
        }
    }
    for f in map.sfns() {
        for g in f.grid_fields() {
            if usc_hull_grid(g) != *g {
                witnesses.push(Witness {
                    condition: Condition::TabulatedUsc,
                    s: Vec::new(),
                    x: ExtReal::NegInf,
                });
            }
        }
    }
    scale_checks(map, &points, &mut witnesses);
    let usc_sections_ok = witnesses
        .iter()
        .all(|w| matches!(w.condition, Condition::Monotone | Condition::RightContinuous));
    MembershipReport {
        monotone_rc_ok,
        usc_sections_ok,
        witnesses,
    }
}

fn scale_checks(map: &PointwiseMap, points: &[Vec<f64>], witnesses: &mut Vec<Witness>) {
    if let PointwiseMap::Scale { a } = map {
        for s in points {
            let v = a.eval(s);
            let continuous = Side::BOTH.iter().all(|&side| a.limit(s, side) == v);
            if !(v > ExtReal::ZERO && v.is_finite() && continuous) {
                witnesses.push(Witness {
                    condition: Condition::PositiveScale,
                    s: s.clone(),
                    x: v,
                });
            }
        }
    }
    for c in map.children() {
        scale_checks(c, points, witnesses);
    }
}
