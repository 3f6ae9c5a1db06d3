//! Experiment orchestration: ground truth, basin seeds, annealing restarts,
//! hit tallies, TTS/TTD and ensemble quantiles.
//!
//! An experiment is described by a flat TOML file:
//!
//! ```toml
//! generator = "2d"          # "2d", "quasi1d" or "files"
//! side = 10                 # 2d: lattice side
//! instances = 20
//! seed_ar = 0.001           # basin seeds come from this low-energy manifold
//! solver_ar = 0.002         # a restart is a hit if it lands within this ratio
//! radius = 0.125
//! sweeps = [100, 200, 400]
//! restarts = 100
//! master_seed = 1
//! output_dir = "out"
//! ```
//!
//! Every other key has a default; see [`ExperimentSpec`]. Relative paths are
//! resolved against the directory of the experiment file.
//!
//! The output directory holds `report.json`, one `instance_###/` directory per
//! instance (`spectrum.txt`, `seeds.txt`, `runs.log`, `summary.csv`) and the
//! ensemble tables `quantiles.csv`, `scatter.csv` and `ttd_curves.csv`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity::{assign_basin_with, greedy_seeds, BasinSeeds, DistanceWorkspace, DiversityParams};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metrics::{optimize_over_times, tts, ttd, SuccessStats, TimeEstimate};
use crate::rng;
use crate::schedule::{
    absorb_small, clusters_from_droplets, random_portfolio_schedule_with, Partition, Schedule, DEFAULT_ALPHAS,
    DEFAULT_HOMOGENEOUS_PARTICIPATION,
};
use crate::solver::{anneal_restarts, PimcParams, Readout, RunRecord, DEFAULT_BETA};
use crate::spectrum::{spectrum, BandwidthMode, BnbOptions, LowEnergySet, SpectrumRequest, ENUM_TOL};

/// Quantile levels reported for the ensemble.
pub const QUANTILES: [f64; 3] = [0.2, 0.5, 0.8];

const LABEL_INSTANCE: u64 = 0x1157;
const LABEL_BASELINE: u64 = 0xba5e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Homogeneous,
    /// Droplet-derived clusters with random slopes per restart.
    Portfolio,
    /// Negative control: random connected clusters, same slope portfolio.
    RandomClusters,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Homogeneous => "homogeneous",
            Protocol::Portfolio => "portfolio",
            Protocol::RandomClusters => "random_clusters",
        }
    }

    fn label(self) -> u64 {
        self as u64
    }
}

fn default_generator() -> String {
    "2d".into()
}
fn default_side() -> usize {
    8
}
fn default_n() -> usize {
    32
}
fn default_range() -> usize {
    2
}
fn default_instances() -> usize {
    1
}
fn default_seed_ar() -> f64 {
    0.001
}
fn default_solver_ar() -> f64 {
    0.002
}
fn default_radius() -> f64 {
    0.125
}
fn default_sweeps() -> Vec<usize> {
    vec![100, 200, 400, 800]
}
fn default_restarts() -> usize {
    100
}
fn default_alphas() -> Vec<f64> {
    DEFAULT_ALPHAS.to_vec()
}
fn default_participation() -> f64 {
    DEFAULT_HOMOGENEOUS_PARTICIPATION
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_slices() -> usize {
    96
}
fn default_readout() -> String {
    "lowest_slice".into()
}
fn default_min_cluster_size() -> usize {
    4
}
fn default_max_states() -> usize {
    100_000
}
fn default_strip_width() -> usize {
    crate::spectrum::DEFAULT_STRIP_WIDTH_LIMIT
}
fn default_d_r() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}
fn default_bandwidth_mode() -> String {
    "exact".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_generator")]
    pub generator: String,
    #[serde(default = "default_side")]
    pub side: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_range")]
    pub range: usize,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub files: Vec<PathBuf>,
    #[serde(default = "default_seed_ar")]
    pub seed_ar: f64,
    #[serde(default = "default_solver_ar")]
    pub solver_ar: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Defaults to "the instance has no fields".
    #[serde(default)]
    pub merge_spin_flip: Option<bool>,
    #[serde(default = "default_sweeps")]
    pub sweeps: Vec<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_participation")]
    pub participation: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default = "default_readout")]
    pub readout: String,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_min_cluster_size")]
    pub min_cluster_size: usize,
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    #[serde(default = "default_strip_width")]
    pub strip_width_limit: usize,
    #[serde(default = "default_d_r")]
    pub d_r: Vec<f64>,
    #[serde(default = "default_bandwidth_mode")]
    pub bandwidth_mode: String,
    /// Adds the random-cluster protocol.
    #[serde(default)]
    pub negative_control: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a file; relative instance and output paths are taken relative
    /// to the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for f in &mut spec.files {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        if let Some(out) = &mut spec.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(spec)
    }

    pub fn protocols(&self) -> Vec<Protocol> {
        let mut p = vec![Protocol::Homogeneous, Protocol::Portfolio];
        if self.negative_control {
            p.push(Protocol::RandomClusters);
        }
        p
    }

    pub fn readout_rule(&self) -> Result<Readout> {
        self.readout.parse()
    }

    pub fn bandwidth(&self) -> Result<BandwidthMode> {
        self.bandwidth_mode.parse()
    }

    fn base_params(&self) -> Result<PimcParams> {
        let p = PimcParams {
            beta: self.beta,
            slices: self.slices,
            sweeps: 1,
            seed: 0,
            readout: self.readout_rule()?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.generator.as_str() {
            "2d" if self.side < 2 => return bad(format!("side must be at least 2, got {}", self.side)),
            "quasi1d" if self.n < 2 || self.range < 1 => {
                return bad(format!("quasi1d needs n >= 2 and range >= 1, got {} / {}", self.n, self.range))
            }
            "files" if self.files.is_empty() => return bad("generator 'files' needs a non-empty 'files' list".into()),
            "2d" | "quasi1d" | "files" => {}
            other => return bad(format!("unknown generator '{other}'")),
        }
        if self.generator != "files" && self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if !(self.seed_ar > 0.0 && self.seed_ar <= self.solver_ar && self.solver_ar <= 1.0) {
            return bad(format!(
                "need 0 < seed_ar <= solver_ar <= 1, got {} / {}",
                self.seed_ar, self.solver_ar
            ));
        }
        DiversityParams::new(self.radius, false).map_err(|e| Error::Config(e.to_string()))?;
        if self.sweeps.is_empty() || self.sweeps.contains(&0) {
            return bad("sweeps must be a non-empty list of positive counts".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return bad("alphas must be a non-empty list of non-negative slopes".into());
        }
        if !(0.0..=1.0).contains(&self.participation) {
            return bad(format!("participation must lie in [0, 1], got {}", self.participation));
        }
        if self.d_r.is_empty() || self.d_r.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
            return bad("d_r values must lie in (0, 1]".into());
        }
        if self.min_cluster_size == 0 {
            return bad("min_cluster_size must be at least 1".into());
        }
        SpectrumRequest::new(self.seed_ar, self.max_states, self.bandwidth()?)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.base_params().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    fn load_instances(&self) -> Result<Vec<(String, Instance)>> {
        match self.generator.as_str() {
            "files" => self
                .files
                .iter()
                .map(|f| Ok((f.display().to_string(), Instance::read(f)?)))
                .collect(),
            kind => (0..self.instances)
                .map(|k| {
                    let seed = rng::derive_seed(self.master_seed, &[LABEL_INSTANCE, k as u64]);
                    let inst = if kind == "2d" {
                        Instance::generate_2d(self.side, seed)?
                    } else {
                        Instance::generate_quasi_1d(self.n, self.range, seed)?
                    };
                    Ok((format!("{kind}:{k}:seed={seed}"), inst))
                })
                .collect(),
        }
    }
}

/// Best estimate over the time grid; `sweeps` is `None` when every setting
/// timed out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub sweeps: Option<usize>,
    pub estimate: TimeEstimate,
}

impl Best {
    fn over(values: BTreeMap<usize, TimeEstimate>) -> Result<Self> {
        Ok(match optimize_over_times(&values)? {
            Some((s, v)) => Best {
                sweeps: Some(s),
                estimate: TimeEstimate::Finite(v),
            },
            None => Best {
                sweeps: None,
                estimate: TimeEstimate::TimedOut,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub sweeps: usize,
    pub stats: SuccessStats,
    pub tts: TimeEstimate,
    /// Aligned with the experiment's `d_r` grid.
    pub ttd: Vec<TimeEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub cells: Vec<CellReport>,
    pub best_tts: Best,
    /// Aligned with the experiment's `d_r` grid.
    pub best_ttd: Vec<Best>,
    /// Distinct basins hit anywhere on the time grid.
    pub d_solver: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub source: String,
    pub n: usize,
    pub e_min: f64,
    pub e_top: f64,
    pub seed_cutoff: f64,
    pub solver_cutoff: f64,
    pub states: usize,
    pub spectrum_complete: bool,
    pub diversity: usize,
    pub seeds_digest: String,
    pub cluster_sizes: Vec<usize>,
    pub protocols: Vec<ProtocolReport>,
}

impl InstanceReport {
    pub fn protocol(&self, p: Protocol) -> Option<&ProtocolReport> {
        self.protocols.iter().find(|r| r.protocol == p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub metric: String,
    /// Aligned with [`QUANTILES`].
    pub values: Vec<TimeEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub crate_version: String,
    pub rng: String,
    pub spec: ExperimentSpec,
    pub instances: Vec<InstanceReport>,
    pub quantiles: Vec<QuantileRow>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Recomputes every estimate from the stored hit counts and checks the
    /// tally and ordering invariants.
    pub fn verify(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("report check failed: {msg}")));
        for inst in &self.instances {
            for p in &inst.protocols {
                let mut tts_by_time = BTreeMap::new();
                let mut ttd_by_time = vec![BTreeMap::new(); self.spec.d_r.len()];
                for c in &p.cells {
                    c.stats.validate()?;
                    if c.stats.per_basin_hits.len() != inst.diversity {
                        return fail(format!("instance {}: hit vector length", inst.index));
                    }
                    let t = tts(c.stats.success_rate(), c.sweeps as f64)?;
                    if t != c.tts {
                        return fail(format!("instance {}: stored TTS differs", inst.index));
                    }
                    tts_by_time.insert(c.sweeps, t);
                    for (k, &d_r) in self.spec.d_r.iter().enumerate() {
                        let v = ttd(&c.stats, d_r, c.sweeps as f64)?;
                        if v != c.ttd[k] {
                            return fail(format!("instance {}: stored TTD differs", inst.index));
                        }
                        if p.protocol == Protocol::Homogeneous && v.cmp_time(&t).is_lt() {
                            return fail(format!("instance {}: homogeneous TTD below TTS", inst.index));
                        }
                        ttd_by_time[k].insert(c.sweeps, v);
                    }
                }
                if Best::over(tts_by_time)? != p.best_tts {
                    return fail(format!("instance {}: best TTS differs", inst.index));
                }
                for (k, m) in ttd_by_time.into_iter().enumerate() {
                    if Best::over(m)? != p.best_ttd[k] {
                        return fail(format!("instance {}: best TTD differs", inst.index));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Nearest-rank quantile: the `ceil(q n)`-th smallest value (at least the
/// first), with timeouts ordered last.
pub fn nearest_rank(values: &[TimeEstimate], q: f64) -> Option<TimeEstimate> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.cmp_time(b));
    let rank = ((q * sorted.len() as f64 - 1e-9).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

/// Random partition into about `k` connected chunks, grown from `k` random
/// sites by picking a random frontier site at each step. Sites unreachable
/// from any start seed their own chunk. Chunks below `min_size` are merged
/// into neighbours as in [`clusters_from_droplets`].
pub fn baseline_random_clusters(inst: &Instance, k: usize, seed: u64, min_size: usize) -> Result<Partition> {
    let n = inst.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cluster count must lie in 1..={n}, got {k}")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut label = vec![usize::MAX; n];
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    let mut count = 0;
    let claim = |label: &mut Vec<usize>, frontier: &mut Vec<(usize, usize)>, site: usize, c: usize| {
        label[site] = c;
        for &(j, _) in inst.neighbors(site) {
            if label[j] == usize::MAX {
                frontier.push((j, c));
            }
        }
    };
    let grow = |label: &mut Vec<usize>, frontier: &mut Vec<(usize, usize)>, rng: &mut rng::Rng| {
        while !frontier.is_empty() {
            let pick = rng.random_range(0..frontier.len());
            let (site, c) = frontier.swap_remove(pick);
            if label[site] == usize::MAX {
                claim(label, frontier, site, c);
            }
        }
    };
    for &s in &order[..k] {
        claim(&mut label, &mut frontier, s, count);
        count += 1;
    }
    grow(&mut label, &mut frontier, &mut rng);
    for &s in &order {
        if label[s] == usize::MAX {
            claim(&mut label, &mut frontier, s, count);
            count += 1;
            grow(&mut label, &mut frontier, &mut rng);
        }
    }
    let mut clusters = vec![Vec::new(); count];
    for (i, &c) in label.iter().enumerate() {
        clusters[c].push(i);
    }
    absorb_small(inst, &mut clusters, min_size);
    Ok(Partition {
        clusters,
        overlaps: Vec::new(),
    })
}

/// Droplets separating the ground state from each further seed: the
/// connected components of the sites where they differ. With spin-flip
/// merging the smaller of the difference and its complement is used.
pub fn seed_droplets(inst: &Instance, seeds: &BasinSeeds) -> Vec<Vec<usize>> {
    let Some(ground) = seeds.seeds.first() else {
        return Vec::new();
    };
    let n = inst.n();
    let mut out = Vec::new();
    for s in &seeds.seeds[1..] {
        let mut diff = vec![false; n];
        for i in ground.diff_sites(s) {
            diff[i] = true;
        }
        if seeds.merge_spin_flip && diff.iter().filter(|&&d| d).count() * 2 > n {
            diff.iter_mut().for_each(|d| *d = !*d);
        }
        let mut seen = vec![false; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if !diff[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                comp.push(i);
                for &(j, _) in inst.neighbors(i) {
                    if diff[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
        out.extend(comps);
    }
    out
}

fn fnv1a(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

struct Prepared {
    low: LowEnergySet,
    seeds: BasinSeeds,
    solver_cutoff: f64,
    partitions: BTreeMap<Protocol, Partition>,
}

fn prepare(spec: &ExperimentSpec, index: usize, inst: &Instance) -> Result<Prepared> {
    let req = SpectrumRequest::new(spec.seed_ar, spec.max_states, spec.bandwidth()?)?;
    let opts = BnbOptions {
        strip_width_limit: spec.strip_width_limit,
        ..BnbOptions::default()
    };
    let low = spectrum(inst, &req, &opts)?;
    let params = match spec.merge_spin_flip {
        Some(m) => DiversityParams::new(spec.radius, m)?,
        None => DiversityParams::for_instance(inst, spec.radius)?,
    };
    let seeds = greedy_seeds(inst, &low, &params)?;
    let solver_cutoff = low.cutoff_at(spec.solver_ar);
    let droplet_partition = clusters_from_droplets(inst, &seed_droplets(inst, &seeds), spec.min_cluster_size)?;
    let mut partitions = BTreeMap::new();
    partitions.insert(Protocol::Homogeneous, Partition::single(inst.n()));
    if spec.negative_control {
        let seed = rng::derive_seed(spec.master_seed, &[LABEL_BASELINE, index as u64]);
        let k = droplet_partition.len().max(1);
        partitions.insert(
            Protocol::RandomClusters,
            baseline_random_clusters(inst, k, seed, spec.min_cluster_size)?,
        );
    }
    partitions.insert(Protocol::Portfolio, droplet_partition);
    Ok(Prepared {
        low,
        seeds,
        solver_cutoff,
        partitions,
    })
}

fn tally(inst: &Instance, prep: &Prepared, runs: &[RunRecord]) -> Result<SuccessStats> {
    let mut ws = DistanceWorkspace::new(inst.n());
    let mut hits = vec![0u64; prep.seeds.count()];
    let mut any = 0;
    for r in runs {
        if r.energy <= prep.solver_cutoff + ENUM_TOL {
            any += 1;
            hits[assign_basin_with(&mut ws, inst, &r.config, &prep.seeds)] += 1;
        }
    }
    SuccessStats::new(hits, any, runs.len() as u64)
}

fn run_instance(spec: &ExperimentSpec, index: usize, source: &str, inst: &Instance) -> Result<InstanceReport> {
    let prep = prepare(spec, index, inst)?;
    let base = spec.base_params()?;
    let mut protocols = Vec::new();
    let mut log = String::new();
    for protocol in spec.protocols() {
        let partition = &prep.partitions[&protocol];
        let mut cells = Vec::new();
        let mut basins_hit = BTreeSet::new();
        for (k, &sweeps) in spec.sweeps.iter().enumerate() {
            let master = rng::derive_seed(spec.master_seed, &[index as u64, protocol.label(), k as u64]);
            let params = PimcParams { sweeps, ..base };
            let t_a = sweeps as f64;
            let runs = anneal_restarts(inst, spec.restarts, master, &params, |_, draw| {
                let sched = match protocol {
                    Protocol::Homogeneous => Schedule::homogeneous(inst, t_a)?,
                    _ => random_portfolio_schedule_with(inst, partition, &spec.alphas, spec.participation, t_a, draw)?,
                };
                Ok((sched, Some(protocol.label() as usize)))
            })?;
            for r in &runs {
                let _ = writeln!(log, "protocol={} {}", protocol.name(), r.to_log_line());
            }
            let stats = tally(inst, &prep, &runs)?;
            basins_hit.extend(stats.per_basin_hits.iter().enumerate().filter(|(_, &h)| h > 0).map(|(b, _)| b));
            let t = sweeps as f64;
            cells.push(CellReport {
                sweeps,
                tts: tts(stats.success_rate(), t)?,
                ttd: spec.d_r.iter().map(|&d| ttd(&stats, d, t)).collect::<Result<_>>()?,
                stats,
            });
        }
        let best_tts = Best::over(cells.iter().map(|c| (c.sweeps, c.tts)).collect())?;
        let best_ttd = (0..spec.d_r.len())
            .map(|k| Best::over(cells.iter().map(|c| (c.sweeps, c.ttd[k])).collect()))
            .collect::<Result<_>>()?;
        protocols.push(ProtocolReport {
            protocol,
            cells,
            best_tts,
            best_ttd,
            d_solver: basins_hit.len(),
        });
    }
    let report = InstanceReport {
        index,
        source: source.to_string(),
        n: inst.n(),
        e_min: prep.low.e_min,
        e_top: prep.low.e_top,
        seed_cutoff: prep.low.cutoff,
        solver_cutoff: prep.solver_cutoff,
        states: prep.low.len(),
        spectrum_complete: prep.low.complete,
        diversity: prep.seeds.count(),
        seeds_digest: fnv1a(&prep.seeds.to_report()),
        cluster_sizes: prep.partitions[&Protocol::Portfolio].clusters.iter().map(Vec::len).collect(),
        protocols,
    };
    if let Some(dir) = &spec.output_dir {
        let dir = instance_dir(dir, index);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        prep.low.write(dir.join("spectrum.txt"))?;
        prep.seeds.write(dir.join("seeds.txt"))?;
        write_file(&dir.join("runs.log"), &log)?;
        write_file(&dir.join("summary.csv"), &summary_csv(&spec.d_r, &report))?;
    }
    Ok(report)
}

fn instance_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("instance_{index:03}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn quantile_rows(spec: &ExperimentSpec, instances: &[InstanceReport]) -> Vec<QuantileRow> {
    let mut rows = Vec::new();
    let mut push = |metric: String, values: Vec<TimeEstimate>| {
        if let Some(first) = nearest_rank(&values, QUANTILES[0]) {
            let mut qs = vec![first];
            qs.extend(QUANTILES[1..].iter().filter_map(|&q| nearest_rank(&values, q)));
            rows.push(QuantileRow { metric, values: qs });
        }
    };
    let count = |v: usize| TimeEstimate::Finite(v as f64);
    push("D".into(), instances.iter().map(|i| count(i.diversity)).collect());
    for p in spec.protocols() {
        let reports: Vec<&ProtocolReport> = instances.iter().filter_map(|i| i.protocol(p)).collect();
        push(format!("d_solver/{}", p.name()), reports.iter().map(|r| count(r.d_solver)).collect());
        push(format!("tts/{}", p.name()), reports.iter().map(|r| r.best_tts.estimate).collect());
        for (k, d_r) in spec.d_r.iter().enumerate() {
            push(
                format!("ttd/{}/{d_r}", p.name()),
                reports.iter().map(|r| r.best_ttd[k].estimate).collect(),
            );
        }
    }
    rows
}

/// Runs the whole pipeline. Instances and restarts run in parallel; the
/// report does not depend on the number of workers. When the experiment names an
/// output directory, per-instance files are written as each instance
/// finishes and the ensemble files at the end.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<BenchReport> {
    spec.validate()?;
    if let Some(dir) = &spec.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let loaded = spec.load_instances()?;
    let instances: Vec<InstanceReport> = loaded
        .par_iter()
        .enumerate()
        .map(|(k, (source, inst))| run_instance(spec, k, source, inst))
        .collect::<Result<_>>()?;
    let report = BenchReport {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        rng: rng::GENERATOR_ID.to_string(),
        spec: spec.clone(),
        quantiles: quantile_rows(spec, &instances),
        instances,
    };
    report.verify()?;
    if let Some(dir) = &spec.output_dir {
        write_file(&dir.join("report.json"), &report.to_json()?)?;
        render_report(&report, dir)?;
    }
    Ok(report)
}

fn summary_csv(d_r: &[f64], inst: &InstanceReport) -> String {
    let mut out = String::from("protocol,sweeps,restarts,any_hits,basins_hit,tts");
    for d in d_r {
        let _ = write!(out, ",ttd@{d}");
    }
    out.push('\n');
    for p in &inst.protocols {
        for c in &p.cells {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                p.protocol.name(),
                c.sweeps,
                c.stats.restarts,
                c.stats.any_hits,
                c.stats.basins_hit(),
                c.tts
            );
            for t in &c.ttd {
                let _ = write!(out, ",{t}");
            }
            out.push('\n');
        }
    }
    out
}

/// Writes the CSV tables and plot data for a report: `summary.csv` in each
/// instance directory plus `quantiles.csv`, `scatter.csv` (homogeneous vs
/// portfolio pairs per instance and metric) and `ttd_curves.csv` (best TTD
/// against `d_r` per instance and protocol).
pub fn render_report(report: &BenchReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d_r = &report.spec.d_r;

    let mut q = String::from("metric");
    for level in QUANTILES {
        let _ = write!(q, ",q{}", (level * 100.0).round());
    }
    q.push('\n');
    for row in &report.quantiles {
        q.push_str(&row.metric);
        for v in &row.values {
            let _ = write!(q, ",{v}");
        }
        q.push('\n');
    }
    write_file(&dir.join("quantiles.csv"), &q)?;

    let mut scatter = String::from("instance,metric,homogeneous,portfolio\n");
    let mut curves = String::from("instance,protocol,d_r,ttd,sweeps\n");
    for inst in &report.instances {
        let idir = instance_dir(dir, inst.index);
        fs::create_dir_all(&idir).map_err(|e| Error::io(&idir, e))?;
        write_file(&idir.join("summary.csv"), &summary_csv(d_r, inst))?;

        if let (Some(h), Some(p)) = (inst.protocol(Protocol::Homogeneous), inst.protocol(Protocol::Portfolio)) {
            let _ = writeln!(scatter, "{},d_solver,{},{}", inst.index, h.d_solver, p.d_solver);
            let _ = writeln!(scatter, "{},tts,{},{}", inst.index, h.best_tts.estimate, p.best_tts.estimate);
            for (k, d) in d_r.iter().enumerate() {
                let _ = writeln!(
                    scatter,
                    "{},ttd@{d},{},{}",
                    inst.index, h.best_ttd[k].estimate, p.best_ttd[k].estimate
                );
            }
        }
        for p in &inst.protocols {
            for (k, d) in d_r.iter().enumerate() {
                let best = &p.best_ttd[k];
                let sweeps = best.sweeps.map_or_else(String::new, |s| s.to_string());
                let _ = writeln!(curves, "{},{},{d},{},{sweeps}", inst.index, p.protocol.name(), best.estimate);
            }
        }
    }
    write_file(&dir.join("scatter.csv"), &scatter)?;
    write_file(&dir.join("ttd_curves.csv"), &curves)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_spec(restarts: usize) -> ExperimentSpec {
        ExperimentSpec::from_toml_str(&format!(
            "generator = \"quasi1d\"\nn = 10\nrange = 2\ninstances = 2\nseed_ar = 0.05\nsolver_ar = 0.1\n\
             sweeps = [4, 8]\nrestarts = {restarts}\nbeta = 4.0\nslices = 8\nmaster_seed = 5\nmin_cluster_size = 2\n"
        ))
        .unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let spec = ExperimentSpec::default();
        assert_eq!(spec.seed_ar, 0.001);
        assert_eq!(spec.solver_ar, 0.002);
        assert_eq!(spec.participation, 0.2);
        assert!(spec.validate().is_ok());
        assert!(ExperimentSpec::from_toml_str("seed_ar = 0.01\nsolver_ar = 0.002").is_err());
        assert!(ExperimentSpec::from_toml_str("generator = \"files\"").is_err());
        assert!(ExperimentSpec::from_toml_str("nonsense = 1").is_err());
        assert!(ExperimentSpec::from_toml_str("slices = 4").is_err());
        assert!(ExperimentSpec::from_toml_str("d_r = [0.0]").is_err());
    }

    #[test]
    fn nearest_rank_rule() {
        let v: Vec<TimeEstimate> = [5.0, 1.0, 3.0, 2.0, 4.0].map(TimeEstimate::Finite).to_vec();
        assert_eq!(nearest_rank(&v, 0.2), Some(TimeEstimate::Finite(1.0)));
        assert_eq!(nearest_rank(&v, 0.5), Some(TimeEstimate::Finite(3.0)));
        assert_eq!(nearest_rank(&v, 0.8), Some(TimeEstimate::Finite(4.0)));
        let two = [TimeEstimate::Finite(7.0), TimeEstimate::TimedOut];
        assert_eq!(nearest_rank(&two, 0.2), Some(TimeEstimate::Finite(7.0)));
        assert_eq!(nearest_rank(&two, 0.5), Some(TimeEstimate::Finite(7.0)));
        assert_eq!(nearest_rank(&two, 0.8), Some(TimeEstimate::TimedOut));
        assert_eq!(nearest_rank(&[], 0.5), None);
    }

    #[test]
    fn toy_experiment_report() {
        let spec = toy_spec(6);
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.instances.len(), 2);
        report.verify().unwrap();
        let ds: Vec<f64> = report.instances.iter().map(|i| i.diversity as f64).collect();
        let lo = ds.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ds.iter().cloned().fold(0.0, f64::max);
        let row = &report.quantiles[0];
        assert_eq!(row.metric, "D");
        assert_eq!(
            row.values,
            vec![TimeEstimate::Finite(lo), TimeEstimate::Finite(lo), TimeEstimate::Finite(hi)]
        );
        for inst in &report.instances {
            for p in &inst.protocols {
                for c in &p.cells {
                    assert!(c.stats.per_basin_hits.iter().sum::<u64>() <= c.stats.restarts);
                }
            }
        }
        assert_eq!(report, run_experiment(&spec).unwrap());
    }

    #[test]
    fn zero_restarts_time_out() {
        let report = run_experiment(&toy_spec(0)).unwrap();
        for inst in &report.instances {
            for p in &inst.protocols {
                assert!(p.best_tts.estimate.is_timed_out());
                assert!(p.best_tts.sweeps.is_none());
                for c in &p.cells {
                    assert!(c.stats.rates().iter().all(|&r| r == 0.0));
                    assert!(c.ttd.iter().all(TimeEstimate::is_timed_out));
                }
                assert_eq!(p.d_solver, 0);
            }
        }
    }

    #[test]
    fn tampered_report_fails_verification() {
        let mut report = run_experiment(&toy_spec(4)).unwrap();
        report.instances[0].protocols[0].cells[0].tts = TimeEstimate::Finite(1.0);
        assert!(report.verify().is_err());
    }

    #[test]
    fn random_clusters_baseline() {
        let inst = Instance::generate_2d(6, 1).unwrap();
        let one = baseline_random_clusters(&inst, 1, 3, 1).unwrap();
        assert_eq!(one, Partition::single(36));
        let many = baseline_random_clusters(&inst, 5, 3, 1).unwrap();
        assert_eq!(many.len(), 5);
        assert_eq!(many, baseline_random_clusters(&inst, 5, 3, 1).unwrap());
        many.labels(36).unwrap();
        // every chunk is connected
        for c in &many.clusters {
            let set: BTreeSet<usize> = c.iter().copied().collect();
            let mut seen = BTreeSet::from([c[0]]);
            let mut stack = vec![c[0]];
            while let Some(i) = stack.pop() {
                for &(j, _) in inst.neighbors(i) {
                    if set.contains(&j) && seen.insert(j) {
                        stack.push(j);
                    }
                }
            }
            assert_eq!(seen.len(), c.len());
        }
        // singletons, then merging up to the minimum size
        let merged = baseline_random_clusters(&inst, 36, 3, 4).unwrap();
        assert!(merged.clusters.iter().all(|c| c.len() >= 4));
        merged.labels(36).unwrap();
        assert!(baseline_random_clusters(&inst, 0, 3, 1).is_err());
    }

    #[test]
    fn droplets_from_seeds() {
        let inst = Instance::generate_2d(4, 2).unwrap();
        let ground = crate::SpinConfig::all_up(16);
        let other = ground.with_flipped(&[0, 1, 10]);
        let seeds = BasinSeeds {
            seeds: vec![ground, other],
            indices: vec![0, 1],
            energies: vec![0.0, 0.0],
            radius: 0.1,
            merge_spin_flip: false,
            approx_ratio: 0.1,
        };
        assert_eq!(seed_droplets(&inst, &seeds), vec![vec![0, 1], vec![10]]);
    }

    #[test]
    fn output_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = toy_spec(3);
        spec.output_dir = Some(dir.path().to_path_buf());
        let report = run_experiment(&spec).unwrap();
        for f in ["report.json", "quantiles.csv", "scatter.csv", "ttd_curves.csv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        for f in ["spectrum.txt", "seeds.txt", "runs.log", "summary.csv"] {
            assert!(dir.path().join("instance_001").join(f).is_file(), "{f}");
        }
        let back = BenchReport::read(dir.path().join("report.json")).unwrap();
        assert_eq!(back, report);
        let log = fs::read_to_string(dir.path().join("instance_000/runs.log")).unwrap();
        assert_eq!(log.lines().count(), 2 * 2 * 3);
    }
}
