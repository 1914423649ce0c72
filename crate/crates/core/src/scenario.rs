//! Symbolic random trajectories on an interval with an exact usc test.
//!
//! A trajectory is a continuous base expression, finitely many plateaus
//! (intervals on which a different continuous expression is used) and
//! finitely many exceptional points. Discontinuities can only sit at
//! plateau ends and exceptional points, so upper semicontinuity reduces to
//! comparing the value at each such point with the one-sided limits of the
//! neighbouring continuous pieces. An optional [`PointwiseMap`] is carried
//! symbolically; its own jump locations join the list of points to check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::gev::{GevParams, ThetaField};
use crate::grid::{CompactProbe, Domain, GridField};
use crate::quantile::RcCdf;
use crate::rng::{sample_seed, seeded};
use crate::stats::proportion;
use crate::transform::{compose, dominates, MarginFamily, PointwiseMap, Side, Transformable};

/// Dense sample count used for suprema and comparisons away from the
/// critical points.
pub const DENSE_SAMPLES: usize = 513;

/// Tolerance for deciding that two trajectories differ at a point.
const DIFF_TOL: f64 = 1e-9;

/// Expressions in `s` and the scenario variables. Every constructor is
/// continuous, so an expression is a continuous function of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    S,
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Exp(Box<Expr>),
    Powi(Box<Expr>, i32),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn max(a: Expr, b: Expr) -> Self {
        Expr::Max(Box::new(a), Box::new(b))
    }

    pub fn min(a: Expr, b: Expr) -> Self {
        Expr::Min(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    pub fn eval(&self, s: f64, vars: &BTreeMap<String, f64>) -> f64 {
        let bin = |a: &Expr, b: &Expr| (a.eval(s, vars), b.eval(s, vars));
        match self {
            Expr::Const(c) => *c,
            Expr::S => s,
            Expr::Var(name) => vars[name],
            Expr::Add(a, b) => {
                let (a, b) = bin(a, b);
                a + b
            }
            Expr::Sub(a, b) => {
                let (a, b) = bin(a, b);
                a - b
            }
            Expr::Mul(a, b) => {
                let (a, b) = bin(a, b);
                a * b
            }
            Expr::Min(a, b) => {
                let (a, b) = bin(a, b);
                a.min(b)
            }
            Expr::Max(a, b) => {
                let (a, b) = bin(a, b);
                a.max(b)
            }
            Expr::Neg(a) => -a.eval(s, vars),
            Expr::Abs(a) => a.eval(s, vars).abs(),
            Expr::Exp(a) => a.eval(s, vars).exp(),
            Expr::Powi(a, k) => a.eval(s, vars).powi(*k),
        }
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::S | Expr::Var(_) => Vec::new(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => vec![a, b],
            Expr::Neg(a) | Expr::Abs(a) | Expr::Exp(a) | Expr::Powi(a, _) => vec![a],
        }
    }

    pub fn uses_s(&self) -> bool {
        matches!(self, Expr::S) || self.children().iter().any(|c| c.uses_s())
    }

    fn check_vars(&self, names: &[&str]) -> Result<()> {
        if let Expr::Var(name) = self {
            if !names.contains(&name.as_str()) {
                return Err(Error::UnknownVariable(name.clone()));
            }
        }
        self.children().iter().try_for_each(|c| c.check_vars(names))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub law: RcCdf,
}

/// `value` replaces the base on the interval between `from` and `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub from: Expr,
    pub to: Expr,
    #[serde(default)]
    pub closed_from: bool,
    #[serde(default)]
    pub closed_to: bool,
    pub value: Expr,
}

/// The trajectory equals `value` at the location `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exception {
    pub at: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub domain: Interval,
    pub variables: Vec<Variable>,
    pub base: Expr,
    #[serde(default)]
    pub plateaus: Vec<Plateau>,
    #[serde(default)]
    pub exceptions: Vec<Exception>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let Interval { lo, hi } = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDomain(format!("bad interval [{lo}, {hi}]")));
        }
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        for (i, v) in self.variables.iter().enumerate() {
            if names[..i].contains(&v.name.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate variable {}", v.name)));
            }
            v.law.validate()?;
        }
        self.base.check_vars(&names)?;
        for p in &self.plateaus {
            for e in [&p.from, &p.to, &p.value] {
                e.check_vars(&names)?;
            }
            if p.from.uses_s() || p.to.uses_s() {
                return Err(Error::InvalidParameter("plateau ends may not depend on s".into()));
            }
        }
        for e in &self.exceptions {
            e.at.check_vars(&names)?;
            e.value.check_vars(&names)?;
            if e.at.uses_s() || e.value.uses_s() {
                return Err(Error::InvalidParameter(
                    "exception location and value may not depend on s".into(),
                ));
            }
        }
        Ok(())
    }

    /// The grid with `resolution` nodes on the scenario interval.
    pub fn grid(&self, resolution: usize) -> Result<Domain> {
        Domain::interval(self.domain.lo, self.domain.hi, resolution)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RealizedPlateau {
    lo: f64,
    hi: f64,
    closed_lo: bool,
    closed_hi: bool,
    index: usize,
}

impl RealizedPlateau {
    fn contains(&self, s: f64) -> bool {
        (self.lo < s || (self.closed_lo && s == self.lo))
            && (s < self.hi || (self.closed_hi && s == self.hi))
    }

    /// Whether the plateau covers `(s - eps, s)` (left) or `(s, s + eps)`
    /// (right) for small `eps`.
    fn covers_side(&self, s: f64, side: Side) -> bool {
        match side {
            Side::Left => self.lo < s && s <= self.hi,
            Side::Right => self.lo <= s && s < self.hi,
        }
    }
}

/// One draw of a scenario, optionally pushed through a transform.
#[derive(Debug, Clone)]
pub struct Realization {
    scenario: Arc<Scenario>,
    assignment: BTreeMap<String, f64>,
    exceptions: Vec<(f64, f64)>,
    plateaus: Vec<RealizedPlateau>,
    transform: Option<PointwiseMap>,
}

/// Draws the variables in declaration order from a generator seeded with
/// `seed`.
pub fn realize(scenario: &Arc<Scenario>, seed: u64) -> Result<Realization> {
    let mut rng = seeded(seed);
    let assignment: BTreeMap<String, f64> = scenario
        .variables
        .iter()
        .map(|v| (v.name.clone(), v.law.sample(&mut rng).to_f64()))
        .collect();
    Realization::from_assignment(scenario, assignment)
}

impl Realization {
    pub fn from_assignment(
        scenario: &Arc<Scenario>,
        assignment: BTreeMap<String, f64>,
    ) -> Result<Self> {
        for v in &scenario.variables {
            if !assignment.contains_key(&v.name) {
                return Err(Error::UnknownVariable(v.name.clone()));
            }
        }
        let Interval { lo, hi } = scenario.domain;
        let mut exceptions = Vec::new();
        for e in &scenario.exceptions {
            let at = e.at.eval(0.0, &assignment);
            if (lo..=hi).contains(&at) {
                exceptions.push((at, e.value.eval(0.0, &assignment)));
            }
        }
        let plateaus = scenario
            .plateaus
            .iter()
            .enumerate()
            .map(|(index, p)| RealizedPlateau {
                lo: p.from.eval(0.0, &assignment),
                hi: p.to.eval(0.0, &assignment),
                closed_lo: p.closed_from,
                closed_hi: p.closed_to,
                index,
            })
            .filter(|p| p.lo < p.hi || (p.lo == p.hi && p.closed_lo && p.closed_hi))
            .collect();
        let r = Realization {
            scenario: Arc::clone(scenario),
            assignment,
            exceptions,
            plateaus,
            transform: None,
        };
        r.check_distinct()?;
        Ok(r)
    }

    fn check_distinct(&self) -> Result<()> {
        for (i, (a, _)) in self.exceptions.iter().enumerate() {
            if self.exceptions[..i].iter().any(|(b, _)| a == b) {
                return Err(Error::DegenerateDraw(format!(
                    "two exceptions at s = {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn assignment(&self) -> &BTreeMap<String, f64> {
        &self.assignment
    }

    pub fn variable(&self, name: &str) -> Option<f64> {
        self.assignment.get(name).copied()
    }

    pub fn exception_locations(&self) -> Vec<f64> {
        self.exceptions.iter().map(|e| e.0).collect()
    }

    pub fn transform(&self) -> Option<&PointwiseMap> {
        self.transform.as_ref()
    }

    /// The untransformed draw.
    pub fn raw(&self) -> Realization {
        Realization {
            transform: None,
            ..self.clone()
        }
    }

    /// `U_*` of this trajectory; transforms stack by composition.
    pub fn with_transform(&self, map: PointwiseMap) -> Realization {
        let transform = match &self.transform {
            None => map,
            Some(inner) => compose(map, inner.clone()),
        };
        Realization {
            transform: Some(transform),
            ..self.clone()
        }
    }

    fn expr(&self, e: &Expr, s: f64) -> ExtReal {
        ExtReal::from_f64(e.eval(s, &self.assignment))
    }

    fn plateau_expr(&self, p: &RealizedPlateau) -> &Expr {
        &self.scenario.plateaus[p.index].value
    }

    /// The untransformed trajectory at `s`.
    pub fn raw_value(&self, s: f64) -> ExtReal {
        if let Some((_, v)) = self.exceptions.iter().find(|(at, _)| *at == s) {
            return ExtReal::from_f64(*v);
        }
        match self.plateaus.iter().find(|p| p.contains(s)) {
            Some(p) => self.expr(self.plateau_expr(p), s),
            None => self.expr(&self.scenario.base, s),
        }
    }

    /// One-sided limit of the untransformed trajectory at `s`.
    pub fn raw_limit(&self, s: f64, side: Side) -> ExtReal {
        match self.plateaus.iter().find(|p| p.covers_side(s, side)) {
            Some(p) => self.expr(self.plateau_expr(p), s),
            None => self.expr(&self.scenario.base, s),
        }
    }

    pub fn value(&self, s: f64) -> ExtReal {
        let x = self.raw_value(s);
        match &self.transform {
            Some(u) => u.eval(&[s], x),
            None => x,
        }
    }

    /// Upper bound for the limsup of the trajectory as `t -> s` from one
    /// side; exact for the untransformed trajectory.
    pub fn limit_bound(&self, s: f64, side: Side) -> ExtReal {
        let x = self.raw_limit(s, side);
        match &self.transform {
            Some(u) => u.limit(&[s], side, x),
            None => x,
        }
    }

    /// Exceptional points, plateau ends and transform jump locations inside
    /// the domain, sorted.
    pub fn check_points(&self) -> Vec<f64> {
        let Interval { lo, hi } = self.scenario.domain;
        let mut pts: Vec<f64> = self.exception_locations();
        for p in &self.plateaus {
            pts.push(p.lo);
            pts.push(p.hi);
        }
        if let Some(u) = &self.transform {
            pts.extend(u.critical_points());
        }
        pts.retain(|p| (lo..=hi).contains(p));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn sides(&self, s: f64) -> Vec<Side> {
        let Interval { lo, hi } = self.scenario.domain;
        let mut v = Vec::with_capacity(2);
        if s > lo {
            v.push(Side::Left);
        }
        if s < hi {
            v.push(Side::Right);
        }
        v
    }

    /// Points where the trajectory fails to dominate a one-sided limit.
    pub fn usc_violations(&self) -> Result<Vec<f64>> {
        self.check_distinct()?;
        Ok(self
            .check_points()
            .into_iter()
            .filter(|&p| {
                let v = self.value(p);
                self.sides(p)
                    .into_iter()
                    .any(|side| !dominates(v, self.limit_bound(p, side)))
            })
            .collect())
    }

    fn dense_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..DENSE_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (DENSE_SAMPLES - 1) as f64)
            .collect();
        pts.extend(self.check_points().into_iter().filter(|p| (lo..=hi).contains(p)));
        pts
    }

    /// Supremum over `[lo, hi]`: exact at the check points, sampled on a
    /// dense grid elsewhere.
    pub fn sup_on(&self, lo: f64, hi: f64) -> ExtReal {
        self.dense_points(lo, hi)
            .into_iter()
            .map(|s| self.value(s))
            .max()
            .unwrap_or(ExtReal::NegInf)
    }

    /// Whether the hypograph meets `K = U_j K_j x {x_j}`.
    pub fn hits(&self, probe: &CompactProbe) -> bool {
        probe.parts.iter().any(|part| {
            let [a, b] = part.rect.axes[0];
            self.sup_on(a, b) >= ExtReal::Finite(part.level)
        })
    }

    /// Values on the nodes of a grid over the scenario interval.
    pub fn to_grid(&self, resolution: usize) -> Result<GridField> {
        let d = self.scenario.grid(resolution)?;
        Ok(GridField::from_fn(d, |c| self.value(c[0])))
    }

    /// Whether two trajectories on the same interval differ somewhere,
    /// judged at both sets of check points and on a dense grid.
    pub fn differs_from(&self, other: &Realization) -> bool {
        let Interval { lo, hi } = self.scenario.domain;
        let mut pts = self.dense_points(lo, hi);
        pts.extend(other.check_points());
        pts.into_iter().any(|s| {
            let (a, b) = (self.value(s), other.value(s));
            let scale = a.finite().map_or(1.0, |v| v.abs().max(1.0));
            a.distance(b) > DIFF_TOL * scale
        })
    }
}

impl Transformable for Realization {
    fn apply_map(&self, map: &PointwiseMap) -> Result<Self> {
        Ok(self.with_transform(map.clone()))
    }

    fn find_negative(&self) -> Option<f64> {
        let Interval { lo, hi } = self.scenario.domain;
        self.dense_points(lo, hi)
            .into_iter()
            .map(|s| self.value(s))
            .find(|&v| v < ExtReal::ZERO)
            .map(|v| v.to_f64())
    }
}

/// Exact usc decision for a realized trajectory.
pub fn is_usc_trajectory(r: &Realization) -> Result<bool> {
    Ok(r.usc_violations()?.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GalleryId {
    #[serde(rename = "atom")]
    Atom,
    #[serde(rename = "lsc_margins")]
    LscMargins,
    #[serde(rename = "b_not_necessary")]
    BNotNecessary,
    #[serde(rename = "law_mismatch_1")]
    LawMismatch1,
    #[serde(rename = "law_mismatch_2")]
    LawMismatch2,
    #[serde(rename = "theta_discontinuous")]
    ThetaDiscontinuous,
}

impl GalleryId {
    pub const ALL: [GalleryId; 6] = [
        GalleryId::Atom,
        GalleryId::LscMargins,
        GalleryId::BNotNecessary,
        GalleryId::LawMismatch1,
        GalleryId::LawMismatch2,
        GalleryId::ThetaDiscontinuous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GalleryId::Atom => "atom",
            GalleryId::LscMargins => "lsc_margins",
            GalleryId::BNotNecessary => "b_not_necessary",
            GalleryId::LawMismatch1 => "law_mismatch_1",
            GalleryId::LawMismatch2 => "law_mismatch_2",
            GalleryId::ThetaDiscontinuous => "theta_discontinuous",
        }
    }
}

impl fmt::Display for GalleryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GalleryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GalleryId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown gallery entry {s:?}")))
    }
}

/// A counterexample: a scenario, the transform applied to it and what is
/// claimed about the result.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub id: GalleryId,
    pub scenario: Arc<Scenario>,
    pub transform: PointwiseMap,
    pub claim: &'static str,
}

fn uniform_var(name: &str) -> Variable {
    Variable {
        name: name.into(),
        law: RcCdf::uniform01(),
    }
}

fn frechet_var(name: &str) -> Variable {
    Variable {
        name: name.into(),
        law: RcCdf::unit_frechet(),
    }
}

/// `X` everywhere, `X v Y` at `s = 1`, on `[0, 2]`.
fn max_at_one(x: Variable, y: Variable) -> Scenario {
    Scenario {
        domain: Interval { lo: 0.0, hi: 2.0 },
        variables: vec![x, y],
        base: Expr::var("X"),
        plateaus: Vec::new(),
        exceptions: vec![Exception {
            at: Expr::Const(1.0),
            value: Expr::max(Expr::var("X"), Expr::var("Y")),
        }],
    }
}

fn round_trip(cdf: RcCdf) -> PointwiseMap {
    let family = MarginFamily::constant(cdf);
    compose(
        PointwiseMap::QuantileMap {
            family: family.clone(),
        },
        PointwiseMap::CdfMap { family },
    )
}

impl GalleryEntry {
    pub fn get(id: GalleryId) -> GalleryEntry {
        let (scenario, transform, claim) = match id {
            GalleryId::Atom => (
                Scenario {
                    domain: Interval { lo: -1.0, hi: 1.0 },
                    variables: vec![uniform_var("X"), uniform_var("Y")],
                    base: Expr::add(
                        Expr::mul(Expr::max(Expr::neg(Expr::S), Expr::Const(0.0)), Expr::var("X")),
                        Expr::mul(Expr::max(Expr::S, Expr::Const(0.0)), Expr::var("Y")),
                    ),
                    plateaus: Vec::new(),
                    exceptions: Vec::new(),
                },
                PointwiseMap::CdfMap {
                    family: MarginFamily::UniformZeroTo { slope: 1.0 },
                },
                "Z is usc but Z(0) = 1 always, so its margin at 0 is not uniform",
            ),
            GalleryId::LscMargins => (
                max_at_one(uniform_var("X"), uniform_var("Y")),
                PointwiseMap::CdfMap {
                    family: MarginFamily::PointException {
                        base: Box::new(MarginFamily::constant(RcCdf::uniform01())),
                        at: vec![1.0],
                        cdf: RcCdf::Power { k: 2.0 },
                    },
                },
                "Z fails to be usc with positive probability",
            ),
            GalleryId::ThetaDiscontinuous => (
                max_at_one(frechet_var("X"), frechet_var("Y")),
                PointwiseMap::GevStandardize {
                    theta: ThetaField::PointException {
                        base: Box::new(ThetaField::constant(GevParams::UNIT_FRECHET)),
                        at: vec![1.0],
                        theta: GevParams {
                            gamma: 1.0,
                            mu: 2.0,
                            sigma: 2.0,
                        },
                    },
                },
                "xi* fails to be usc with positive probability",
            ),
            GalleryId::BNotNecessary => (
                Scenario {
                    domain: Interval { lo: -1.0, hi: 1.0 },
                    variables: vec![
                        Variable {
                            name: "X".into(),
                            law: RcCdf::standard_normal(),
                        },
                        uniform_var("V"),
                    ],
                    base: Expr::var("X"),
                    plateaus: vec![Plateau {
                        from: Expr::Const(0.0),
                        to: Expr::var("V"),
                        closed_from: false,
                        closed_to: false,
                        value: Expr::sub(Expr::var("X"), Expr::Const(1.0)),
                    }],
                    exceptions: Vec::new(),
                },
                PointwiseMap::CdfMap {
                    family: MarginFamily::Split {
                        at: 0.0,
                        left: Box::new(MarginFamily::constant(RcCdf::standard_normal())),
                        right: Box::new(MarginFamily::LinearMix {
                            s0: 0.0,
                            s1: 1.0,
                            from: RcCdf::Normal {
                                mean: -1.0,
                                sd: 1.0,
                            },
                            to: RcCdf::standard_normal(),
                        }),
                    },
                },
                "Z is usc although s -> F_s(x) is not",
            ),
            GalleryId::LawMismatch1 => (
                Scenario {
                    domain: Interval { lo: 0.0, hi: 1.0 },
                    variables: vec![uniform_var("X"), uniform_var("Y")],
                    base: Expr::var("X"),
                    plateaus: Vec::new(),
                    exceptions: vec![Exception {
                        at: Expr::var("Y"),
                        value: Expr::add(Expr::var("X"), Expr::Const(1.0)),
                    }],
                },
                round_trip(RcCdf::uniform01()),
                "xi and its quantile round trip have different capacity functionals",
            ),
            GalleryId::LawMismatch2 => (
                Scenario {
                    domain: Interval { lo: 0.0, hi: 1.0 },
                    variables: vec![
                        Variable {
                            name: "X".into(),
                            law: RcCdf::UniformUnion {
                                a: 0.0,
                                b: 1.0,
                                c: 2.0,
                                d: 3.0,
                            },
                        },
                        uniform_var("Y"),
                    ],
                    base: Expr::var("X"),
                    plateaus: Vec::new(),
                    exceptions: vec![Exception {
                        at: Expr::var("Y"),
                        value: Expr::max(Expr::var("X"), Expr::Const(1.5)),
                    }],
                },
                round_trip(RcCdf::UniformUnion {
                    a: 0.0,
                    b: 1.0,
                    c: 2.0,
                    d: 3.0,
                }),
                "the hypographs of xi and its quantile round trip differ with probability 1/2",
            ),
        };
        GalleryEntry {
            id,
            scenario: Arc::new(scenario),
            transform,
            claim,
        }
    }

    pub fn realize(&self, seed: u64) -> Result<Realization> {
        realize(&self.scenario, seed)
    }

    /// The draw with seed `seed`, transformed.
    pub fn transformed(&self, seed: u64) -> Result<Realization> {
        Ok(self.realize(seed)?.with_transform(self.transform.clone()))
    }
}

pub fn gallery() -> Vec<GalleryEntry> {
    GalleryId::ALL.into_iter().map(GalleryEntry::get).collect()
}

/// JSON record of a Monte Carlo proportion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryResult {
    pub entry: GalleryId,
    pub n_samples: u64,
    pub seed: u64,
    pub estimate: f64,
    pub halfwidth: f64,
}

/// Counts samples `i in 0..n` (seed `sample_seed(seed, i)`) satisfying `pred`.
fn count_draws<F>(n_samples: u64, seed: u64, pred: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    (0..n_samples)
        .into_par_iter()
        .map(|i| pred(sample_seed(seed, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn check_n(n_samples: u64) -> Result<()> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter("need at least 100 samples".into()));
    }
    Ok(())
}

/// Fraction of transformed draws that are not usc, with a 95% half-width.
pub fn estimate_nonusc_probability(
    entry: &GalleryEntry,
    n_samples: u64,
    seed: u64,
) -> Result<GalleryResult> {
    check_n(n_samples)?;
    let k = count_draws(n_samples, seed, |sd| Ok(!is_usc_trajectory(&entry.transformed(sd)?)?))?;
    let (estimate, halfwidth) = proportion(k, n_samples);
    Ok(GalleryResult {
        entry: entry.id,
        n_samples,
        seed,
        estimate,
        halfwidth,
    })
}

/// Fraction of draws on which the trajectory and its transform differ.
pub fn hypograph_difference_rate(
    entry: &GalleryEntry,
    n_samples: u64,
    seed: u64,
) -> Result<GalleryResult> {
    check_n(n_samples)?;
    let k = count_draws(n_samples, seed, |sd| {
        let raw = entry.realize(sd)?;
        let out = raw.with_transform(entry.transform.clone());
        Ok(raw.differs_from(&out))
    })?;
    let (estimate, halfwidth) = proportion(k, n_samples);
    Ok(GalleryResult {
        entry: entry.id,
        n_samples,
        seed,
        estimate,
        halfwidth,
    })
}

/// Hit frequencies of a probe for the trajectory and for its transform,
/// computed on the same draws.
pub fn capacities_differ(
    entry: &GalleryEntry,
    probe: &CompactProbe,
    n_samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if probe.parts.iter().any(|p| p.rect.axes.len() != 1) {
        return Err(Error::DomainMismatch);
    }
    let hit_raw = count_draws(n_samples, seed, |sd| Ok(entry.realize(sd)?.hits(probe)))?;
    let hit_out = count_draws(n_samples, seed, |sd| Ok(entry.transformed(sd)?.hits(probe)))?;
    let n = n_samples as f64;
    Ok((hit_raw as f64 / n, hit_out as f64 / n))
}

/// Values of the transformed trajectory at `s` over `n_samples` draws.
pub fn margin_samples(entry: &GalleryEntry, s: f64, n_samples: u64, seed: u64) -> Result<Vec<ExtReal>> {
    (0..n_samples)
        .into_par_iter()
        .map(|i| Ok(entry.transformed(sample_seed(seed, i))?.value(s)))
        .collect()
}
