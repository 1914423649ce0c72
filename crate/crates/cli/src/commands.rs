use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use uscx_core::gev::{fit_residual, params_from_quantiles};
use uscx_core::grid::{hypo_converges, DEFAULT_RADIUS, DEFAULT_SLACK};
use uscx_core::maxstable::{
    capacity_closed_form, capacity_empirical, check_simple_max_stability,
    destandardized_max_stability, StabilityReport, StairStep,
};
use uscx_core::rng::sample_seed;
use uscx_core::scenario::{
    capacities_differ, estimate_nonusc_probability, hypograph_difference_rate,
};
use uscx_core::transform::{apply, validate_membership};
use uscx_core::{
    CompactProbe, Domain, ExtReal, GalleryEntry, GalleryId, GridField, MarginFamily,
    MaxStableSampler, PointwiseMap, ProbePart, Rect, SpectralModel, ThetaField,
};

use crate::artifacts::{Artifacts, Format};
use crate::config::{invalid, load, resolve_seed, Failure, Outcome};
use crate::Global;

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_RESOLUTION: usize = 101;
const DEFAULT_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelName {
    #[value(name = "constant_one")]
    ConstantOne,
    Storm,
    Staircase,
}

/// Spectral model and grid flags shared by the sampling commands.
#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    /// Storm radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Storm height.
    #[arg(long)]
    height: Option<f64>,
    /// Grid nodes per axis on the default domain [0, 1].
    #[arg(long)]
    resolution: Option<usize>,
}

struct ModelConfig {
    model: Option<SpectralModel>,
    domain: Option<Domain>,
}

impl ModelArgs {
    fn resolve(&self, cfg: ModelConfig) -> Outcome<(SpectralModel, Domain)> {
        let model = match self.model {
            Some(ModelName::ConstantOne) => SpectralModel::ConstantOne,
            Some(ModelName::Storm) => SpectralModel::Storm {
                radius: self.radius.unwrap_or(0.1),
                height: self.height.unwrap_or(1.0),
            },
            Some(ModelName::Staircase) => SpectralModel::Staircase {
                steps: vec![
                    StairStep {
                        width: 0.4,
                        height: 1.0,
                    },
                    StairStep {
                        width: 0.2,
                        height: 1.0,
                    },
                ],
            },
            None => match cfg.model {
                Some(SpectralModel::Storm { radius, height }) => SpectralModel::Storm {
                    radius: self.radius.unwrap_or(radius),
                    height: self.height.unwrap_or(height),
                },
                Some(m) => m,
                None => return Err(invalid("no spectral model: pass --model or set `model`")),
            },
        };
        let domain = match (self.resolution, cfg.domain) {
            (Some(r), Some(d)) => Domain::new(d.bounds().to_vec(), r)?,
            (None, Some(d)) => d,
            (r, None) => Domain::interval(0.0, 1.0, r.unwrap_or(DEFAULT_RESOLUTION))?,
        };
        model.validate()?;
        Ok((model, domain))
    }
}

fn manifest(command: &str, seed: Option<u64>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(seed));
    m
}

fn samples(g: &Global, from_config: Option<u64>) -> Outcome<u64> {
    let n = g.n.or(from_config).unwrap_or(DEFAULT_SAMPLES);
    if n < 100 {
        return Err(invalid("need at least 100 samples"));
    }
    Ok(n)
}

fn write_field(out: &mut Artifacts, stem: &str, field: &GridField) -> Outcome<String> {
    Ok(match out.format {
        Format::Csv => {
            let name = format!("{stem}.csv");
            out.write_csv(&name, &field.to_csv())?;
            name
        }
        Format::Json => {
            let name = format!("{stem}.json");
            out.write_json(&name, field)?;
            name
        }
    })
}

fn read_field(path: &Path, domain: Option<&Domain>) -> Outcome<GridField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let f: GridField = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let d = domain.unwrap_or(f.domain()).clone();
        return Ok(GridField::new(d, f.into_values())?);
    }
    let d = match domain {
        Some(d) => d.clone(),
        None => infer_domain(&text)?,
    };
    Ok(GridField::from_csv(d, &text)?)
}

/// Bounds and resolution from the coordinates of a field CSV.
fn infer_domain(text: &str) -> Outcome<Domain> {
    let mut rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = rows.next().ok_or_else(|| invalid("empty CSV"))?;
    let dim = header.split(',').count() - 1;
    if !(1..=2).contains(&dim) {
        return Err(invalid(format!("bad header `{header}`")));
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for line in rows {
        for (axis, cell) in line.split(',').take(dim).enumerate() {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad coordinate in `{line}`")))?;
            axes[axis].push(x);
        }
    }
    let mut bounds = Vec::new();
    let mut resolution = 0;
    for coords in &mut axes {
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        if coords.len() < 2 {
            return Err(invalid("field needs at least two nodes per axis"));
        }
        if resolution != 0 && resolution != coords.len() {
            return Err(invalid("axes have different node counts"));
        }
        resolution = coords.len();
        bounds.push([coords[0], coords[coords.len() - 1]]);
    }
    Ok(Domain::new(bounds, resolution)?)
}

/// A box covering the fractions `[a, b]` of the first axis and the whole
/// of the second.
fn band(domain: &Domain, a: f64, b: f64) -> Rect {
    let mut axes = domain.bounds().to_vec();
    let [lo, hi] = axes[0];
    axes[0] = [lo + a * (hi - lo), lo + b * (hi - lo)];
    Rect { axes }
}

fn default_probes(domain: &Domain) -> Vec<CompactProbe> {
    vec![
        CompactProbe::single(band(domain, 0.0, 0.5), 1.0),
        CompactProbe::single(band(domain, 0.25, 0.75), 2.0),
        CompactProbe::single(band(domain, 0.0, 1.0), 3.0),
        CompactProbe {
            parts: vec![
                ProbePart {
                    rect: band(domain, 0.0, 0.2),
                    level: 1.0,
                },
                ProbePart {
                    rect: band(domain, 0.6, 1.0),
                    level: 2.0,
                },
            ],
        },
    ]
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    seed: Option<u64>,
    n_samples: Option<u64>,
    model: Option<SpectralModel>,
    domain: Option<Domain>,
}

pub fn simulate(g: &Global, a: &SimulateArgs) -> Outcome {
    let cfg: SimulateConfig = load(g)?;
    let seed = resolve_seed(g, cfg.seed)?;
    let n = g.n.or(cfg.n_samples).unwrap_or(1);
    let (model, domain) = a.model.resolve(ModelConfig {
        model: cfg.model,
        domain: cfg.domain,
    })?;
    let sampler = MaxStableSampler::new(model.clone(), domain.clone())?;
    let sims = (0..n)
        .into_par_iter()
        .map(|i| sampler.simulate_sample(seed, i, 0))
        .collect::<uscx_core::Result<Vec<_>>>()?;
    let mut out = Artifacts::new(&g.out, g.format.unwrap_or(Format::Csv))?;
    let mut results = Vec::new();
    for (i, sim) in sims.iter().enumerate() {
        let file = write_field(&mut out, &format!("field_{i:05}"), &sim.field)?;
        results.push(json!({ "index": i, "file": file, "atoms": sim.atoms }));
    }
    let atoms_mean = sims.iter().map(|s| s.atoms as f64).sum::<f64>() / n.max(1) as f64;
    let mut m = manifest("simulate", Some(seed));
    m.insert("model".into(), json!(model));
    m.insert("domain".into(), json!(domain));
    m.insert("n_samples".into(), json!(n));
    m.insert("atoms_mean".into(), json!(atoms_mean));
    m.insert("results".into(), Value::Array(results));
    out.finish(m)?;
    Ok(())
}

// ---------------------------------------------------------------- capacity

#[derive(Args, Debug)]
pub struct CapacityArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Level of a single probe over `[probe-lo, probe-hi]`.
    #[arg(long)]
    probe_level: Option<f64>,
    #[arg(long)]
    probe_lo: Option<f64>,
    #[arg(long)]
    probe_hi: Option<f64>,
    #[arg(long)]
    z_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityConfig {
    seed: Option<u64>,
    n_samples: Option<u64>,
    model: Option<SpectralModel>,
    domain: Option<Domain>,
    probes: Option<Vec<CompactProbe>>,
    n_expectation_samples: Option<usize>,
    z_threshold: Option<f64>,
}

/// `(observed - expected) / sigma` with a zero-variance convention.
fn z_of(observed: f64, expected: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (observed - expected) / sigma
    } else if observed == expected {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn capacity(g: &Global, a: &CapacityArgs) -> Outcome {
    let cfg: CapacityConfig = load(g)?;
    let seed = resolve_seed(g, cfg.seed)?;
    let n = samples(g, cfg.n_samples)?;
    let z_max = a.z_threshold.or(cfg.z_threshold).unwrap_or(DEFAULT_Z);
    let (model, domain) = a.model.resolve(ModelConfig {
        model: cfg.model,
        domain: cfg.domain,
    })?;
    let single = a.probe_level.is_some() || a.probe_lo.is_some() || a.probe_hi.is_some();
    let probes = match cfg.probes {
        Some(p) if !single => p,
        _ => {
            let mut rect = domain.whole();
            if let Some(lo) = a.probe_lo {
                rect.axes[0][0] = lo;
            }
            if let Some(hi) = a.probe_hi {
                rect.axes[0][1] = hi;
            }
            vec![CompactProbe::single(rect, a.probe_level.unwrap_or(1.0))]
        }
    };
    let sampler = MaxStableSampler::new(model.clone(), domain.clone())?;
    let n_exp = cfg.n_expectation_samples.unwrap_or(100_000);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut atoms = 0.0;
    for (j, probe) in probes.iter().enumerate() {
        let miss = capacity_closed_form(&model, &domain, probe, n_exp, seed)?;
        let est = capacity_empirical(&sampler, probe, n, seed)?;
        let hit = 1.0 - miss;
        let sigma = (hit * miss / n as f64).sqrt();
        let z = z_of(est.hit_rate, hit, sigma);
        worst = worst.max(z.abs());
        atoms = est.atoms_mean;
        rows.push(json!({
            "probe": j,
            "miss_closed_form": miss,
            "hit_closed_form": hit,
            "hit_rate": est.hit_rate,
            "halfwidth": est.halfwidth,
            "sigma": sigma,
            "z": z,
        }));
    }
    let mut out = Artifacts::new(&g.out, g.format.unwrap_or(Format::Json))?;
    let file = out.write_table("capacity", &rows)?;
    let mut m = manifest("capacity", Some(seed));
    m.insert("model".into(), json!(model));
    m.insert("domain".into(), json!(domain));
    m.insert("n_samples".into(), json!(n));
    m.insert("atoms_mean".into(), json!(atoms));
    m.insert("probes".into(), json!(probes));
    m.insert("z_threshold".into(), json!(z_max));
    m.insert("results".into(), json!([{ "file": file }]));
    out.finish(m)?;
    if worst >= z_max {
        return Err(Failure::Check(format!(
            "empirical hit rate off the closed form by |z| = {worst:.2}"
        )));
    }
    Ok(())
}

// ----------------------------------------------------------- maxstab-check

#[derive(Args, Debug)]
pub struct MaxstabArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated numbers of copies to compare.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u64>>,
    #[arg(long)]
    z_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxstabConfig {
    seed: Option<u64>,
    n_samples: Option<u64>,
    model: Option<SpectralModel>,
    domain: Option<Domain>,
    probes: Option<Vec<CompactProbe>>,
    n_list: Option<Vec<u64>>,
    /// GEV margins; the check then runs on the destandardized field.
    theta: Option<ThetaField>,
    z_threshold: Option<f64>,
}

pub fn maxstab_check(g: &Global, a: &MaxstabArgs) -> Outcome {
    let cfg: MaxstabConfig = load(g)?;
    let seed = resolve_seed(g, cfg.seed)?;
    let n_samples = samples(g, cfg.n_samples)?;
    let z_max = a.z_threshold.or(cfg.z_threshold).unwrap_or(DEFAULT_Z);
    let (model, domain) = a.model.resolve(ModelConfig {
        model: cfg.model,
        domain: cfg.domain,
    })?;
    let probes = cfg.probes.unwrap_or_else(|| default_probes(&domain));
    let n_list = a.n_list.clone().or(cfg.n_list).unwrap_or_else(|| vec![2, 3, 5]);
    let sampler = MaxStableSampler::new(model.clone(), domain.clone())?;
    let reports: Vec<StabilityReport> = n_list
        .iter()
        .map(|&n| match &cfg.theta {
            None => check_simple_max_stability(&sampler, n, &probes, n_samples, seed),
            Some(theta) => destandardized_max_stability(&sampler, theta, n, &probes, n_samples, seed),
        })
        .collect::<uscx_core::Result<_>>()?;
    let mut rows = Vec::new();
    for r in &reports {
        for row in &r.rows {
            let mut v = serde_json::to_value(row)?;
            v.as_object_mut().unwrap().insert("n".into(), json!(r.n));
            v.as_object_mut().unwrap().insert("passes".into(), json!(row.passes(z_max)));
            rows.push(v);
        }
    }
    let mut out = Artifacts::new(&g.out, g.format.unwrap_or(Format::Json))?;
    let file = out.write_table("maxstab", &rows)?;
    let atoms_mean = reports.iter().map(|r| r.atoms_mean).sum::<f64>() / reports.len().max(1) as f64;
    let mut m = manifest("maxstab-check", Some(seed));
    m.insert("model".into(), json!(model));
    m.insert("domain".into(), json!(domain));
    m.insert("n_samples".into(), json!(n_samples));
    m.insert("atoms_mean".into(), json!(atoms_mean));
    m.insert("probes".into(), json!(probes));
    m.insert("theta".into(), json!(cfg.theta));
    m.insert("z_threshold".into(), json!(z_max));
    m.insert(
        "roundtrip_max_error".into(),
        json!(reports.iter().filter_map(|r| r.roundtrip_max_error).fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.max(e))))),
    );
    m.insert("results".into(), json!([{ "file": file }]));
    out.finish(m)?;
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.rows.iter().filter(|row| !row.passes(z_max)).map(move |row| {
            format!("n = {}, probe {}: z = {:.2}", r.n, row.probe, row.z_score)
        }))
        .collect();
    if !failed.is_empty() {
        return Err(Failure::Check(failed.join("; ")));
    }
    Ok(())
}

// ------------------------------------------------------------------- sklar

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `F_s(xi(s))`, needs `family`.
    Forward,
    /// `Q_s(Z(s))`, needs `family`.
    Backward,
    /// Needs `theta`.
    #[value(name = "gev_standardize")]
    GevStandardize,
    /// Needs `theta`.
    #[value(name = "gev_destandardize")]
    GevDestandardize,
    /// An explicit transform tree in `map`.
    Map,
}

#[derive(Args, Debug)]
pub struct SklarArgs {
    /// Field files (CSV or JSON) to transform.
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    direction: Option<Direction>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SklarConfig {
    domain: Option<Domain>,
    direction: Option<Direction>,
    family: Option<MarginFamily>,
    theta: Option<ThetaField>,
    map: Option<PointwiseMap>,
    #[serde(default)]
    inputs: Vec<PathBuf>,
}

fn sklar_map(dir: Direction, cfg: &SklarConfig) -> Outcome<PointwiseMap> {
    let need = |what: &str| invalid(format!("direction {dir:?} needs `{what}` in the config"));
    Ok(match dir {
        Direction::Forward => PointwiseMap::CdfMap {
            family: cfg.family.clone().ok_or_else(|| need("family"))?,
        },
        Direction::Backward => PointwiseMap::QuantileMap {
            family: cfg.family.clone().ok_or_else(|| need("family"))?,
        },
        Direction::GevStandardize => PointwiseMap::GevStandardize {
            theta: cfg.theta.clone().ok_or_else(|| need("theta"))?,
        },
        Direction::GevDestandardize => PointwiseMap::GevDestandardize {
            theta: cfg.theta.clone().ok_or_else(|| need("theta"))?,
        },
        Direction::Map => cfg.map.clone().ok_or_else(|| need("map"))?,
    })
}

pub fn sklar(g: &Global, a: &SklarArgs) -> Outcome {
    let cfg: SklarConfig = load(g)?;
    let dir = a.direction.or(cfg.direction).unwrap_or(Direction::Forward);
    let map = sklar_map(dir, &cfg)?;
    let inputs = if a.inputs.is_empty() { &cfg.inputs } else { &a.inputs };
    if inputs.is_empty() {
        return Err(invalid("no input fields: pass --input or set `inputs`"));
    }
    let fields = inputs
        .iter()
        .map(|p| read_field(p, cfg.domain.as_ref()))
        .collect::<Outcome<Vec<_>>>()?;
    let domain = fields[0].domain().clone();
    map.validate(&domain)?;
    if dir == Direction::GevDestandardize {
        if let Some(v) = fields.iter().flat_map(|f| f.values()).find(|v| **v < ExtReal::ZERO) {
            return Err(uscx_core::Error::NegativeStandardized(v.to_f64()).into());
        }
    }
    let xs: Vec<f64> = (-32..=32).map(|i| i as f64 / 4.0).collect();
    let ss: Vec<Vec<f64>> = (0..domain.n_nodes().min(257))
        .map(|i| domain.coords(i * domain.n_nodes() / domain.n_nodes().min(257))[..domain.dim()].to_vec())
        .collect();
    let membership = validate_membership(&map, &domain, &xs, &ss);

    let mut out = Artifacts::new(&g.out, g.format.unwrap_or(Format::Csv))?;
    let mut results = Vec::new();
    for (path, field) in inputs.iter().zip(&fields) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "field".into());
        let file = write_field(&mut out, &format!("{stem}_out"), &apply(&map, field)?)?;
        results.push(json!({ "input": path, "file": file }));
    }
    let mut m = manifest("sklar", None);
    m.insert("direction".into(), json!(dir));
    m.insert("map".into(), json!(map));
    m.insert("domain".into(), json!(domain));
    m.insert("usc_safe".into(), json!(map.preserves_usc()));
    m.insert(
        "membership".into(),
        json!({
            "monotone_rc_ok": membership.monotone_rc_ok,
            "usc_sections_ok": membership.usc_sections_ok,
            "witnesses": membership.witnesses.len(),
        }),
    );
    m.insert("results".into(), Value::Array(results));
    out.finish(m)?;
    Ok(())
}

// ----------------------------------------------------------------- gallery

#[derive(Args, Debug)]
pub struct GalleryArgs {
    /// Entry id, or `all`.
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GalleryConfig {
    seed: Option<u64>,
    n_samples: Option<u64>,
    entries: Option<Vec<GalleryId>>,
}

/// Level above every value of the untransformed law_mismatch_1 draws.
const MISMATCH_PROBE_LEVEL: f64 = 2.5;

/// Frequency of `X < Y < 2X` among the draws.
fn witness_rate(entry: &GalleryEntry, n: u64, seed: u64) -> Outcome<f64> {
    let k = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = entry.realize(sample_seed(seed, i))?;
            let (x, y) = (r.variable("X").unwrap(), r.variable("Y").unwrap());
            Ok(u64::from(x < y && y < 2.0 * x))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(|e: uscx_core::Error| Failure::from(e))?;
    Ok(k as f64 / n as f64)
}

fn gallery_row(id: GalleryId, n: u64, seed: u64) -> Outcome<Value> {
    let entry = GalleryEntry::get(id);
    let nonusc = estimate_nonusc_probability(&entry, n, seed)?;
    let diff = hypograph_difference_rate(&entry, n, seed)?;
    let mut row = json!({
        "entry": id,
        "claim": entry.claim,
        "n_samples": n,
        "seed": seed,
    });
    let obj = row.as_object_mut().unwrap();
    let (statistic, estimate, halfwidth) = match id {
        GalleryId::LawMismatch2 => ("hypograph_difference_rate", diff.estimate, diff.halfwidth),
        GalleryId::LawMismatch1 => {
            let probe = CompactProbe::single(Rect::interval(0.0, 1.0), MISMATCH_PROBE_LEVEL);
            let (raw, out) = capacities_differ(&entry, &probe, n, seed)?;
            obj.insert("probe_level".into(), json!(MISMATCH_PROBE_LEVEL));
            obj.insert("capacity_raw".into(), json!(raw));
            obj.insert("capacity_transformed".into(), json!(out));
            ("capacity_gap", out - raw, 0.0)
        }
        _ => ("nonusc_rate", nonusc.estimate, nonusc.halfwidth),
    };
    obj.insert("statistic".into(), json!(statistic));
    obj.insert("estimate".into(), json!(estimate));
    obj.insert("halfwidth".into(), json!(halfwidth));
    obj.insert("nonusc_rate".into(), json!(nonusc.estimate));
    obj.insert("hypograph_difference_rate".into(), json!(diff.estimate));
    if id == GalleryId::ThetaDiscontinuous {
        obj.insert("witness_event_rate".into(), json!(witness_rate(&entry, n, seed)?));
    }
    Ok(row)
}

pub fn gallery(g: &Global, a: &GalleryArgs) -> Outcome {
    let cfg: GalleryConfig = load(g)?;
    let seed = resolve_seed(g, cfg.seed)?;
    let n = samples(g, cfg.n_samples)?;
    let ids: Vec<GalleryId> = match a.entry.as_deref() {
        Some("all") => GalleryId::ALL.to_vec(),
        Some(s) => vec![s.parse()?],
        None => cfg.entries.unwrap_or_else(|| GalleryId::ALL.to_vec()),
    };
    let rows = ids
        .iter()
        .map(|&id| gallery_row(id, n, seed))
        .collect::<Outcome<Vec<_>>>()?;
    let mut out = Artifacts::new(&g.out, g.format.unwrap_or(Format::Json))?;
    let file = if rows.len() == 1 && out.format == Format::Json {
        out.write_json("gallery.json", &rows[0])?;
        "gallery.json".to_string()
    } else {
        // the claim column would break the flat table
        let flat: Vec<Value> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.as_object_mut().unwrap().remove("claim");
                r
            })
            .collect();
        out.write_table("gallery", if out.format == Format::Csv { &flat } else { &rows })?
    };
    let mut m = manifest("gallery", Some(seed));
    m.insert("n_samples".into(), json!(n));
    m.insert("entries".into(), json!(ids));
    m.insert("results".into(), json!([{ "file": file }]));
    out.finish(m)?;
    Ok(())
}

// ------------------------------------------------------------------ gevfit

#[derive(Args, Debug)]
pub struct GevfitArgs {
    /// Quantile at probability exp(-1).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    q1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    q2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GevfitConfig {
    q: Option<f64>,
    p1: Option<f64>,
    q1: Option<f64>,
    p2: Option<f64>,
    q2: Option<f64>,
}

pub fn gevfit(g: &Global, a: &GevfitArgs) -> Outcome {
    let cfg: GevfitConfig = load(g)?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("missing --{name}")));
    let q = need(a.q.or(cfg.q), "q")?;
    let q1 = need(a.q1.or(cfg.q1), "q1")?;
    let q2 = need(a.q2.or(cfg.q2), "q2")?;
    let p1 = a.p1.or(cfg.p1).unwrap_or(0.25);
    let p2 = a.p2.or(cfg.p2).unwrap_or(0.75);
    let theta = params_from_quantiles(q, q1, q2, p1, p2)?;
    let residual = fit_residual(&theta, &[((-1.0f64).exp(), q), (p1, q1), (p2, q2)]);
    let mut out = Artifacts::new(&g.out, Format::Json)?;
    out.write_json(
        "gevfit.json",
        &json!({
            "theta": theta,
            "quantiles": [
                { "p": (-1.0f64).exp(), "q": q },
                { "p": p1, "q": q1 },
                { "p": p2, "q": q2 },
            ],
            "residual": residual,
        }),
    )?;
    let mut m = manifest("gevfit", None);
    m.insert("results".into(), json!([{ "file": "gevfit.json" }]));
    out.finish(m)?;
    Ok(())
}

// ---------------------------------------------------------------- hypoconv

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeExample {
    Constant,
    #[value(name = "moving_spike")]
    MovingSpike,
    #[value(name = "growing_spike")]
    GrowingSpike,
}

#[derive(Args, Debug)]
pub struct HypoconvArgs {
    /// A built-in sequence on a 65-node grid of [0, 1].
    #[arg(long, value_enum)]
    example: Option<SpikeExample>,
    /// Field files forming the sequence, in order.
    #[arg(long = "field")]
    fields: Vec<PathBuf>,
    #[arg(long)]
    limit: Option<PathBuf>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    slack: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypoconvConfig {
    example: Option<SpikeExample>,
    #[serde(default)]
    fields: Vec<PathBuf>,
    limit: Option<PathBuf>,
    domain: Option<Domain>,
    radius: Option<usize>,
    slack: Option<f64>,
}

fn spike(d: &Domain, at: f64, height: f64) -> GridField {
    let node = d.nearest_node(&[at]);
    let mut values = vec![ExtReal::ZERO; d.n_nodes()];
    values[node] = ExtReal::Finite(height);
    GridField::new(d.clone(), values).expect("one value per node")
}

fn example_sequence(ex: SpikeExample) -> (Vec<GridField>, GridField) {
    let d = Domain::interval(0.0, 1.0, 65).expect("valid grid");
    match ex {
        SpikeExample::Constant => {
            let z = GridField::from_fn(d, |c| ExtReal::Finite(c[0] * (1.0 - c[0])));
            (vec![z.clone(); 64], z)
        }
        SpikeExample::MovingSpike => (
            (1..=64).map(|n| spike(&d, 1.0 / n as f64, 1.0)).collect(),
            spike(&d, 0.0, 1.0),
        ),
        SpikeExample::GrowingSpike => (
            (1..=64).map(|n| spike(&d, 1.0 / n as f64, n as f64)).collect(),
            spike(&d, 0.0, 1.0),
        ),
    }
}

pub fn hypoconv(g: &Global, a: &HypoconvArgs) -> Outcome {
    let cfg: HypoconvConfig = load(g)?;
    let radius = a.radius.or(cfg.radius).unwrap_or(DEFAULT_RADIUS);
    let slack = a.slack.or(cfg.slack).unwrap_or(DEFAULT_SLACK);
    if radius == 0 || slack.is_nan() || slack < 0.0 {
        return Err(invalid("radius must be positive and slack nonnegative"));
    }
    let fields = if a.fields.is_empty() { &cfg.fields } else { &a.fields };
    let example = a.example.or(cfg.example);
    let (sequence, limit, source) = if !fields.is_empty() {
        let limit_path = a
            .limit
            .as_ref()
            .or(cfg.limit.as_ref())
            .ok_or_else(|| invalid("a field sequence needs --limit"))?;
        let limit = read_field(limit_path, cfg.domain.as_ref())?;
        let seq = fields
            .iter()
            .map(|p| read_field(p, Some(limit.domain())))
            .collect::<Outcome<Vec<_>>>()?;
        (seq, limit, json!({ "fields": fields, "limit": limit_path }))
    } else {
        let ex = example.ok_or_else(|| invalid("pass --example or --field/--limit"))?;
        let (seq, limit) = example_sequence(ex);
        (seq, limit, json!({ "example": ex }))
    };
    let verdict = hypo_converges(&sequence, &limit, radius, slack)?;
    let mut out = Artifacts::new(&g.out, Format::Json)?;
    out.write_json(
        "hypoconv.json",
        &json!({
            "verdict": verdict,
            "radius": radius,
            "slack": slack,
            "length": sequence.len(),
        }),
    )?;
    let mut m = manifest("hypoconv", None);
    m.insert("input".into(), source);
    m.insert("results".into(), json!([{ "file": "hypoconv.json" }]));
    out.finish(m)?;
    Ok(())
}
