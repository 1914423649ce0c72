//! Extended-real functions sampled on finite rectangular grids.
//!
//! On a finite grid every function is vacuously usc, so the semicontinuity
//! helpers here ([`usc_hull_grid`], [`hypo_converges`]) are discretizations
//! with a declared neighbourhood. Exact usc decisions for symbolic
//! trajectories live in [`crate::scenario`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Relative tolerance used when deciding whether a node lies in a box.
const NODE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainSpec {
    dim: usize,
    bounds: Vec<[f64; 2]>,
    resolution: usize,
}

/// A compact rectangle in dimension 1 or 2 with a uniform grid that includes
/// both endpoints of every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct Domain {
    dim: usize,
    bounds: Vec<[f64; 2]>,
    resolution: usize,
}

impl TryFrom<DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        Domain::new(spec.bounds, spec.resolution).and_then(|d| {
            if d.dim != spec.dim {
                Err(Error::InvalidDomain(format!(
                    "dim {} does not match {} bounds",
                    spec.dim, d.dim
                )))
            } else {
                Ok(d)
            }
        })
    }
}

impl From<Domain> for DomainSpec {
    fn from(d: Domain) -> Self {
        DomainSpec {
            dim: d.dim,
            bounds: d.bounds,
            resolution: d.resolution,
        }
    }
}

impl Domain {
    pub fn new(bounds: Vec<[f64; 2]>, resolution: usize) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                bounds.len()
            )));
        }
        for [lo, hi] in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!("bad axis [{lo}, {hi}]")));
            }
        }
        if resolution < 2 {
            return Err(Error::InvalidDomain("resolution must be at least 2".into()));
        }
        Ok(Domain {
            dim: bounds.len(),
            bounds,
            resolution,
        })
    }

    pub fn interval(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        Self::new(vec![[lo, hi]], resolution)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn n_nodes(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn step(&self, axis: usize) -> f64 {
        let [lo, hi] = self.bounds[axis];
        (hi - lo) / (self.resolution - 1) as f64
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let [lo, hi] = self.bounds[axis];
        if i + 1 == self.resolution {
            hi
        } else {
            lo + i as f64 * self.step(axis)
        }
    }

    /// Per-axis grid indices of a node. Axis 0 varies fastest.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        let r = self.resolution;
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % r, node / r]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + self.resolution * idx[1]
        }
    }

    /// Coordinates of a node; the second entry is 0 in dimension 1.
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        let x = self.axis_coord(0, i);
        let y = if self.dim == 2 { self.axis_coord(1, j) } else { 0.0 };
        [x, y]
    }

    pub fn all_coords(&self) -> Vec<[f64; 2]> {
        (0..self.n_nodes()).map(|n| self.coords(n)).collect()
    }

    /// Index of the node nearest to a point, clamped to the domain.
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let mut idx = [0usize; 2];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            let [lo, _] = self.bounds[axis];
            let t = ((point[axis] - lo) / self.step(axis)).round();
            *slot = t.clamp(0.0, (self.resolution - 1) as f64) as usize;
        }
        self.flat_index(idx)
    }

    /// Grid index range `[first, last]` of nodes inside `[a, b]` on one axis.
    fn axis_range(&self, axis: usize, a: f64, b: f64) -> Option<(usize, usize)> {
        let [lo, hi] = self.bounds[axis];
        let h = self.step(axis);
        let tol = NODE_TOL * (hi - lo);
        let first = ((a - tol - lo) / h).ceil().max(0.0);
        let last = ((b + tol - lo) / h)
            .floor()
            .min((self.resolution - 1) as f64);
        if first > last || last < 0.0 {
            None
        } else {
            Some((first as usize, last as usize))
        }
    }

    /// Flat indices of the nodes inside a box.
    pub fn nodes_in(&self, rect: &Rect) -> Result<Vec<usize>> {
        if rect.axes.len() != self.dim {
            return Err(Error::DomainMismatch);
        }
        let (i0, i1) = self
            .axis_range(0, rect.axes[0][0], rect.axes[0][1])
            .ok_or(Error::EmptyProbeBox)?;
        let (j0, j1) = if self.dim == 2 {
            self.axis_range(1, rect.axes[1][0], rect.axes[1][1])
                .ok_or(Error::EmptyProbeBox)?
        } else {
            (0, 0)
        };
        let mut out = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.push(self.flat_index([i, j]));
            }
        }
        Ok(out)
    }

    /// Nodes within Chebyshev grid distance `radius` of `node`, including it.
    pub fn neighborhood(&self, node: usize, radius: usize) -> Vec<usize> {
        let [i, j] = self.multi_index(node);
        let r = self.resolution;
        let span = |c: usize| (c.saturating_sub(radius), (c + radius).min(r - 1));
        let (i0, i1) = span(i);
        let (j0, j1) = if self.dim == 2 { span(j) } else { (0, 0) };
        let mut out = Vec::new();
        for jj in j0..=j1 {
            for ii in i0..=i1 {
                out.push(self.flat_index([ii, jj]));
            }
        }
        out
    }

    pub fn whole(&self) -> Rect {
        Rect {
            axes: self.bounds.clone(),
        }
    }
}

/// A closed axis-aligned box, one `[lo, hi]` pair per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rect {
    pub axes: Vec<[f64; 2]>,
}

impl Rect {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Rect {
            axes: vec![[lo, hi]],
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(point)
            .all(|([lo, hi], &x)| *lo <= x && x <= *hi)
    }
}

/// One piece `box x {level}` of a probe compactum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePart {
    #[serde(rename = "box")]
    pub rect: Rect,
    pub level: f64,
}

/// A finite union of compacta `K_j x {x_j}` in `D x R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactProbe {
    pub parts: Vec<ProbePart>,
}

impl CompactProbe {
    pub fn new(parts: Vec<ProbePart>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("probe needs at least one part".into()));
        }
        if parts.iter().any(|p| p.level.is_nan()) {
            return Err(Error::InvalidParameter("probe level is NaN".into()));
        }
        Ok(CompactProbe { parts })
    }

    pub fn single(rect: Rect, level: f64) -> Self {
        CompactProbe {
            parts: vec![ProbePart { rect, level }],
        }
    }

    /// The same boxes with every level multiplied by `factor`.
    pub fn scale_levels(&self, factor: f64) -> Self {
        CompactProbe {
            parts: self
                .parts
                .iter()
                .map(|p| ProbePart {
                    rect: p.rect.clone(),
                    level: p.level * factor,
                })
                .collect(),
        }
    }

    /// Checks that every box lies in the domain and holds a grid node.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for part in &self.parts {
            if part.rect.axes.len() != domain.dim() {
                return Err(Error::DomainMismatch);
            }
            for ([a, b], [lo, hi]) in part.rect.axes.iter().zip(domain.bounds()) {
                let tol = NODE_TOL * (hi - lo);
                if a > b || *a < lo - tol || *b > hi + tol {
                    return Err(Error::InvalidParameter(format!(
                        "probe box [{a}, {b}] not inside [{lo}, {hi}]"
                    )));
                }
            }
            domain.nodes_in(&part.rect)?;
        }
        Ok(())
    }
}

/// Node indices of each probe part, resolved once for repeated hit-tests.
#[derive(Debug, Clone)]
pub struct ResolvedProbe {
    parts: Vec<(Vec<usize>, f64)>,
}

impl ResolvedProbe {
    pub fn new(domain: &Domain, probe: &CompactProbe) -> Result<Self> {
        probe.validate(domain)?;
        let parts = probe
            .parts
            .iter()
            .map(|p| Ok((domain.nodes_in(&p.rect)?, p.level)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolvedProbe { parts })
    }

    pub fn hits(&self, values: &[ExtReal]) -> bool {
        self.hits_scaled(values, 1.0)
    }

    /// Hit-test against levels multiplied by `factor`.
    pub fn hits_scaled(&self, values: &[ExtReal], factor: f64) -> bool {
        self.parts.iter().any(|(nodes, level)| {
            let sup = nodes
                .iter()
                .map(|&n| values[n])
                .max()
                .unwrap_or(ExtReal::NegInf);
            sup >= ExtReal::Finite(level * factor)
        })
    }
}

/// A function on the grid nodes of a [`Domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    domain: Domain,
    values: Vec<ExtReal>,
}

impl GridField {
    pub fn new(domain: Domain, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != domain.n_nodes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                domain.n_nodes(),
                values.len()
            )));
        }
        Ok(GridField { domain, values })
    }

    pub fn constant(domain: Domain, value: ExtReal) -> Self {
        let values = vec![value; domain.n_nodes()];
        GridField { domain, values }
    }

    pub fn from_fn(domain: Domain, f: impl Fn([f64; 2]) -> ExtReal) -> Self {
        let values = (0..domain.n_nodes()).map(|n| f(domain.coords(n))).collect();
        GridField { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [ExtReal] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<ExtReal> {
        self.values
    }

    pub fn value(&self, node: usize) -> ExtReal {
        self.values[node]
    }

    pub fn at_point(&self, point: &[f64]) -> ExtReal {
        self.values[self.domain.nearest_node(point)]
    }

    pub fn map(&self, f: impl Fn([f64; 2], ExtReal) -> ExtReal) -> GridField {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(n, &v)| f(self.domain.coords(n), v))
            .collect();
        GridField {
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn sup_on_box(&self, rect: &Rect) -> Result<ExtReal> {
        let nodes = self.domain.nodes_in(rect)?;
        Ok(nodes.iter().map(|&n| self.values[n]).max().unwrap())
    }

    /// Serializes as CSV with header `s1[,s2],value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.domain.dim == 1 {
            "s1,value\n"
        } else {
            "s1,s2,value\n"
        });
        for (n, v) in self.values.iter().enumerate() {
            let [x, y] = self.domain.coords(n);
            if self.domain.dim == 1 {
                out.push_str(&format!("{x:?},{v}\n"));
            } else {
                out.push_str(&format!("{x:?},{y:?},{v}\n"));
            }
        }
        out
    }

    /// Parses the CSV layout written by [`GridField::to_csv`]. Rows may come
    /// in any order; lines starting with `#` are ignored.
    pub fn from_csv(domain: Domain, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let expected = if domain.dim == 1 {
            "s1,value"
        } else {
            "s1,s2,value"
        };
        if header.replace(' ', "") != expected {
            return Err(Error::Parse(format!("expected header `{expected}`, got `{header}`")));
        }
        let mut values = vec![None; domain.n_nodes()];
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != domain.dim + 1 {
                return Err(Error::Parse(format!("bad row `{line}`")));
            }
            let mut point = [0.0; 2];
            for axis in 0..domain.dim {
                point[axis] = cells[axis]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coordinate in `{line}`")))?;
            }
            let node = domain.nearest_node(&point[..domain.dim]);
            let c = domain.coords(node);
            for axis in 0..domain.dim {
                if (c[axis] - point[axis]).abs() > 1e-6 * domain.step(axis) {
                    return Err(Error::Parse(format!("row `{line}` is not on the grid")));
                }
            }
            values[node] = Some(cells[domain.dim].parse::<ExtReal>()?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(n, v)| v.ok_or_else(|| Error::Parse(format!("missing node {n}"))))
            .collect::<Result<Vec<_>>>()?;
        GridField::new(domain, values)
    }
}

/// Does the hypograph of `field` meet the probe compactum?
///
/// The part `box_j x {x_j}` is hit iff the maximum of the field over the
/// grid nodes in `box_j` is at least `x_j`.
pub fn hypo_hits(field: &GridField, probe: &CompactProbe) -> Result<bool> {
    for part in &probe.parts {
        if field.sup_on_box(&part.rect)? >= ExtReal::Finite(part.level) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Node-wise maximum of a nonempty family of fields on a common domain.
pub fn pointwise_max(fields: &[GridField]) -> Result<GridField> {
    let (first, rest) = fields
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("pointwise_max of an empty family".into()))?;
    let mut out = first.clone();
    for f in rest {
        if f.domain != out.domain {
            return Err(Error::DomainMismatch);
        }
        for (a, &b) in out.values.iter_mut().zip(&f.values) {
            *a = (*a).max(b);
        }
    }
    Ok(out)
}

/// One pass of the grid usc hull.
///
/// A node strictly below every one of its one-step neighbours (the closed
/// Chebyshev neighbourhood minus the node itself) is raised to the smallest
/// neighbour value; all other nodes are kept. Isolated dips are lifted and
/// isolated spikes are left alone, which mirrors the continuum hull
/// `inf_eps sup_{d(s,t) <= eps} z(t)`. The output dominates the input and is
/// monotone in it. Each pass only raises values to values already present,
/// so iterating reaches a fixed point after finitely many passes.
pub fn usc_hull_grid(field: &GridField) -> GridField {
    let d = &field.domain;
    let values = (0..d.n_nodes())
        .map(|n| {
            let lowest_neighbor = d
                .neighborhood(n, 1)
                .into_iter()
                .filter(|&m| m != n)
                .map(|m| field.values[m])
                .min()
                .unwrap_or(ExtReal::NegInf);
            field.values[n].max(lowest_neighbor)
        })
        .collect();
    GridField {
        domain: d.clone(),
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypoVerdict {
    Pass,
    FailUpper,
    FailLower,
}

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Finite-sequence check of the two-branch pointwise criterion for
/// hypo-convergence of `sequence` to `limit`.
///
/// The tail is the last third of the sequence. Each branch is a hypograph
/// inclusion up to `neighborhood_radius` grid steps and `slack` in level:
///
/// * upper (`limsup x_n(s_n) <= x(s)`): every tail value `x_n(t)` is at most
///   `limit(s) + slack` for some node `s` within the radius of `t`;
/// * lower (`liminf x_n(s_n) >= x(s)`): for every node `s` and every tail
///   field there is a node `t` within the radius with
///   `x_n(t) >= limit(s) - slack`.
pub fn hypo_converges(
    sequence: &[GridField],
    limit: &GridField,
    neighborhood_radius: usize,
    slack: f64,
) -> Result<HypoVerdict> {
    if sequence.len() < 3 {
        return Err(Error::SequenceTooShort {
            needed: 3,
            got: sequence.len(),
        });
    }
    if sequence.iter().any(|f| f.domain != limit.domain) {
        return Err(Error::DomainMismatch);
    }
    let d = &limit.domain;
    let tail = &sequence[sequence.len() - sequence.len() / 3..];
    let neighborhoods: Vec<Vec<usize>> = (0..d.n_nodes())
        .map(|n| d.neighborhood(n, neighborhood_radius))
        .collect();
    // Level-slack shifts, saturating at the infinities.
    let up = |v: ExtReal| v.shift(slack);
    let down = |v: ExtReal| v.shift(-slack);

    let limit_envelope: Vec<ExtReal> = neighborhoods
        .iter()
        .map(|nb| nb.iter().map(|&m| limit.values[m]).max().unwrap())
        .collect();
    for field in tail {
        for (n, &v) in field.values.iter().enumerate() {
            if v > up(limit_envelope[n]) {
                return Ok(HypoVerdict::FailUpper);
            }
        }
    }
    for field in tail {
        for (n, nb) in neighborhoods.iter().enumerate() {
            let best = nb.iter().map(|&m| field.values[m]).max().unwrap();
            if best < down(limit.values[n]) {
                return Ok(HypoVerdict::FailLower);
            }
        }
    }
    Ok(HypoVerdict::Pass)
}

/// Minimum of the field over the grid nodes in a box.
pub fn inf_on_box(field: &GridField, rect: &Rect) -> Result<ExtReal> {
    let nodes = field.domain.nodes_in(rect)?;
    Ok(nodes.iter().map(|&n| field.values[n]).min().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(res: usize) -> Domain {
        Domain::interval(0.0, 1.0, res).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::interval(1.0, 0.0, 5).is_err());
        assert!(Domain::interval(0.0, 1.0, 1).is_err());
        assert!(Domain::new(vec![[0.0, 1.0]; 3], 4).is_err());
        let d = Domain::new(vec![[0.0, 1.0], [-1.0, 1.0]], 3).unwrap();
        assert_eq!(d.n_nodes(), 9);
        assert_eq!(d.coords(8), [1.0, 1.0]);
        assert_eq!(d.coords(3), [0.0, 0.0]);
    }

    #[test]
    fn domain_json() {
        let d: Domain =
            serde_json::from_str(r#"{"dim":1,"bounds":[[0,2]],"resolution":5}"#).unwrap();
        assert_eq!(d.step(0), 0.5);
        assert!(serde_json::from_str::<Domain>(r#"{"dim":2,"bounds":[[0,2]],"resolution":5}"#)
            .is_err());
    }

    #[test]
    fn hits_at_equal_level() {
        let f = GridField::constant(unit(11), ExtReal::Finite(5.0));
        assert!(hypo_hits(&f, &CompactProbe::single(Rect::interval(0.0, 1.0), 5.0)).unwrap());
        assert!(!hypo_hits(&f, &CompactProbe::single(Rect::interval(0.0, 1.0), 5.0001)).unwrap());
    }

    #[test]
    fn infinite_node_hits_every_level() {
        let mut f = GridField::constant(unit(11), ExtReal::ZERO);
        f.values_mut()[3] = ExtReal::PosInf;
        let probe = CompactProbe::single(Rect::interval(0.25, 0.35), 1e9);
        assert!(hypo_hits(&f, &probe).unwrap());
    }

    #[test]
    fn empty_box_is_an_error() {
        let f = GridField::constant(unit(3), ExtReal::ZERO);
        let probe = CompactProbe::single(Rect::interval(0.1, 0.2), 0.0);
        assert!(matches!(hypo_hits(&f, &probe), Err(Error::EmptyProbeBox)));
    }

    #[test]
    fn node_membership_tolerates_rounding() {
        // 0.3 is not exactly 3 * 0.1 in binary.
        let d = unit(11);
        assert_eq!(d.nodes_in(&Rect::interval(0.3, 0.3)).unwrap(), vec![3]);
    }

    #[test]
    fn pointwise_max_examples() {
        let d = unit(5);
        let one = GridField::constant(d.clone(), ExtReal::ONE);
        let two = GridField::constant(d.clone(), ExtReal::Finite(2.0));
        assert_eq!(pointwise_max(&[one.clone(), one.clone()]).unwrap(), one);
        assert_eq!(pointwise_max(&[one, two.clone()]).unwrap(), two);
        let mut neg = GridField::constant(d.clone(), ExtReal::ONE);
        neg.values_mut()[2] = ExtReal::NegInf;
        let zero = GridField::constant(d.clone(), ExtReal::ZERO);
        assert_eq!(pointwise_max(&[neg, zero]).unwrap().value(2), ExtReal::ZERO);
        let other = GridField::constant(unit(6), ExtReal::ZERO);
        assert!(pointwise_max(&[two, other]).is_err());
        assert!(pointwise_max(&[]).is_err());
    }

    #[test]
    fn hull_examples() {
        let d = unit(9);
        let c = GridField::constant(d.clone(), ExtReal::Finite(3.0));
        assert_eq!(usc_hull_grid(&c), c);

        let mut dip = GridField::constant(d.clone(), ExtReal::ZERO);
        dip.values_mut()[4] = ExtReal::Finite(-1.0);
        assert_eq!(usc_hull_grid(&dip).value(4), ExtReal::ZERO);

        let mut spike = GridField::constant(d, ExtReal::ZERO);
        spike.values_mut()[4] = ExtReal::ONE;
        assert_eq!(usc_hull_grid(&spike), spike);
    }

    #[test]
    fn hull_in_two_dimensions() {
        let d = Domain::new(vec![[0.0, 1.0], [0.0, 1.0]], 5).unwrap();
        let mut dip = GridField::constant(d.clone(), ExtReal::ZERO);
        let centre = d.flat_index([2, 2]);
        dip.values_mut()[centre] = ExtReal::NegInf;
        let hull = usc_hull_grid(&dip);
        assert_eq!(hull.value(centre), ExtReal::ZERO);
    }

    #[test]
    fn inf_on_box_examples() {
        let d = unit(5);
        let c = GridField::constant(d.clone(), ExtReal::Finite(3.0));
        assert_eq!(inf_on_box(&c, &d.whole()).unwrap(), ExtReal::Finite(3.0));
        let mut f = c.clone();
        f.values_mut()[1] = ExtReal::NegInf;
        assert_eq!(inf_on_box(&f, &d.whole()).unwrap(), ExtReal::NegInf);
        let g = GridField::new(
            d.clone(),
            [2.0, 1.0, 5.0, 7.0, 9.0].map(ExtReal::Finite).to_vec(),
        )
        .unwrap();
        assert_eq!(
            inf_on_box(&g, &Rect::interval(0.0, 0.5)).unwrap(),
            ExtReal::ONE
        );
        assert!(inf_on_box(&g, &Rect::interval(0.3, 0.4)).is_err());
    }

    #[test]
    fn csv_round_trip_with_infinities() {
        let d = Domain::new(vec![[0.0, 1.0], [0.0, 2.0]], 3).unwrap();
        let mut f = GridField::from_fn(d.clone(), |[x, y]| ExtReal::Finite(x + 10.0 * y));
        f.values_mut()[0] = ExtReal::PosInf;
        f.values_mut()[4] = ExtReal::NegInf;
        let text = format!("# manifest: manifest.json\n{}", f.to_csv());
        assert!(text.contains("+inf") && text.contains("-inf"));
        let back = GridField::from_csv(d, &text).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_missing_nodes() {
        let d = unit(3);
        assert!(GridField::from_csv(d, "s1,value\n0.0,1\n0.5,2\n").is_err());
    }

    #[test]
    fn hypo_convergence_needs_three_fields() {
        let d = unit(5);
        let z = GridField::constant(d, ExtReal::ZERO);
        assert!(matches!(
            hypo_converges(&[z.clone(), z.clone()], &z, 2, 0.0),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn probe_json_layout() {
        let p: CompactProbe =
            serde_json::from_str(r#"{"parts":[{"box":[[0.0,0.5]],"level":2.0}]}"#).unwrap();
        assert_eq!(p.parts[0].rect, Rect::interval(0.0, 0.5));
        assert_eq!(p.parts[0].level, 2.0);
    }
}
