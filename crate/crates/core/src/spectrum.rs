//! Low-energy spectrum within an approximation ratio.
//!
//! Two enumerators produce the same [`LowEnergySet`]:
//!
//! * [`brute_force_spectrum`] walks all `2^n` configurations in Gray-code order.
//!   It is the reference used to check the branch-and-bound.
//! * [`bnb_spectrum`] scans the sites in index order (row after row on a lattice)
//!   and keeps partial configurations. Partial configurations that agree on the
//!   boundary, the assigned spins still coupled to unassigned ones, are
//!   equivalent for the rest of the lattice: they are merged into one class
//!   whose lowest member is the representative, and the spins in which another
//!   member differs from it form a droplet. A backward min-plus sweep gives the
//!   exact minimal completion energy of every boundary class, which is used to
//!   prune branches that cannot finish under the cutoff.
//!
//! The cutoff is `e_min + a_r * (e_top - e_min)` where `e_top` is the exact
//! maximum energy ([`BandwidthMode::Exact`]) or the bound `sum |J| + sum |h|`
//! ([`BandwidthMode::Bound`]).

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, SpinConfig};

/// Largest instance [`brute_force_spectrum`] accepts by default.
pub const BRUTE_FORCE_LIMIT: usize = 26;

/// Default boundary width accepted by [`bnb_spectrum`].
pub const DEFAULT_STRIP_WIDTH_LIMIT: usize = 16;

// Slack on comparisons made with incrementally accumulated energies. Final
// membership is always decided on energies recomputed by `Instance::energy`.
pub(crate) const ENUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMode {
    Exact,
    Bound,
}

impl BandwidthMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BandwidthMode::Exact => "exact",
            BandwidthMode::Bound => "bound",
        }
    }
}

impl std::str::FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(BandwidthMode::Exact),
            "bound" => Ok(BandwidthMode::Bound),
            other => Err(Error::invalid(format!(
                "bandwidth mode must be 'exact' or 'bound', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub approx_ratio: f64,
    pub max_states: usize,
    pub bandwidth_mode: BandwidthMode,
}

impl SpectrumRequest {
    pub fn new(approx_ratio: f64, max_states: usize, bandwidth_mode: BandwidthMode) -> Result<Self> {
        let req = SpectrumRequest {
            approx_ratio,
            max_states,
            bandwidth_mode,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn exact(approx_ratio: f64) -> Result<Self> {
        Self::new(approx_ratio, 100_000, BandwidthMode::Exact)
    }

    fn validate(&self) -> Result<()> {
        if !(self.approx_ratio > 0.0 && self.approx_ratio < 1.0) {
            return Err(Error::invalid(format!(
                "approximation ratio must lie in (0, 1), got {}",
                self.approx_ratio
            )));
        }
        if self.max_states == 0 {
            return Err(Error::invalid("max_states must be at least 1"));
        }
        Ok(())
    }
}

/// A set of spins whose joint flip maps `states[base]` onto `states[partner]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    pub base: usize,
    pub partner: usize,
    pub sites: Vec<usize>,
    /// `energies[partner] - energies[base]`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowEnergySet {
    pub states: Vec<SpinConfig>,
    pub energies: Vec<f64>,
    pub e_min: f64,
    /// Upper end of the bandwidth: exact maximum energy or the absolute bound.
    pub e_top: f64,
    pub cutoff: f64,
    pub complete: bool,
    pub approx_ratio: f64,
    pub bandwidth_mode: BandwidthMode,
    #[serde(default)]
    pub droplets: Vec<Droplet>,
}

fn cutoff_for(e_min: f64, e_top: f64, a_r: f64) -> f64 {
    e_min + a_r * (e_top - e_min)
}

fn sort_states(states: &mut Vec<(f64, SpinConfig)>) {
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    states.dedup_by(|a, b| a.1 == b.1);
}

impl LowEnergySet {
    /// Builds a set from arbitrary configurations: energies are evaluated,
    /// states sorted, and the cutoff set to the highest energy present. Used
    /// for synthetic sets and for spectra assembled from solver output.
    pub fn from_states(inst: &Instance, states: Vec<SpinConfig>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("a low-energy set needs at least one state"));
        }
        let mut scored = states
            .into_iter()
            .map(|s| Ok((inst.energy(&s)?, s)))
            .collect::<Result<Vec<_>>>()?;
        sort_states(&mut scored);
        let e_min = scored[0].0;
        let cutoff = scored.last().unwrap().0;
        let (energies, states) = scored.into_iter().unzip();
        Ok(LowEnergySet {
            states,
            energies,
            e_min,
            e_top: inst.abs_bound(),
            cutoff,
            complete: false,
            approx_ratio: f64::NAN,
            bandwidth_mode: BandwidthMode::Bound,
            droplets: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.e_top - self.e_min
    }

    /// Energy threshold for another approximation ratio on the same bandwidth.
    pub fn cutoff_at(&self, approx_ratio: f64) -> f64 {
        cutoff_for(self.e_min, self.e_top, approx_ratio)
    }

    /// Report text: a header of `key value` lines followed by one
    /// `energy spins` line per state.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# low-energy spectrum");
        let _ = writeln!(out, "e_min {}", self.e_min);
        let _ = writeln!(out, "e_top {}", self.e_top);
        let _ = writeln!(out, "cutoff {}", self.cutoff);
        let _ = writeln!(out, "complete {}", self.complete);
        let _ = writeln!(out, "a_r {}", self.approx_ratio);
        let _ = writeln!(out, "bandwidth_mode {}", self.bandwidth_mode.as_str());
        let _ = writeln!(out, "states {}", self.states.len());
        for (e, s) in self.energies.iter().zip(&self.states) {
            let _ = writeln!(out, "{e} {s}");
        }
        out
    }

    pub fn from_report(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: "<spectrum>".into(),
            line,
            msg,
        };
        let mut header: HashMap<&str, (usize, &str)> = HashMap::new();
        let mut expected: Option<usize> = None;
        let mut states = Vec::new();
        let mut energies = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err(lineno, format!("expected two fields, got '{line}'")))?;
            let b = b.trim();
            if expected.is_none() {
                if a == "states" {
                    expected = Some(b.parse().map_err(|_| err(lineno, format!("bad state count '{b}'")))?);
                } else {
                    header.insert(a, (lineno, b));
                }
                continue;
            }
            let e: f64 = a.parse().map_err(|_| err(lineno, format!("bad energy '{a}'")))?;
            let s: SpinConfig = b.parse().map_err(|e: Error| err(lineno, e.to_string()))?;
            energies.push(e);
            states.push(s);
        }
        let get = |key: &str| -> Result<(usize, &str)> {
            header
                .get(key)
                .copied()
                .ok_or_else(|| err(0, format!("missing header key '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            let (ln, v) = get(key)?;
            v.parse().map_err(|_| err(ln, format!("bad value for {key}: '{v}'")))
        };
        let expected = expected.ok_or_else(|| err(0, "missing 'states' line".into()))?;
        if expected != states.len() {
            return Err(err(0, format!("declared {expected} states, found {}", states.len())));
        }
        let (ln, complete) = get("complete")?;
        let complete = complete
            .parse()
            .map_err(|_| err(ln, format!("bad value for complete: '{complete}'")))?;
        let (ln, mode) = get("bandwidth_mode")?;
        let bandwidth_mode = mode.parse().map_err(|e: Error| err(ln, e.to_string()))?;
        Ok(LowEnergySet {
            states,
            energies,
            e_min: num("e_min")?,
            e_top: num("e_top")?,
            cutoff: num("cutoff")?,
            complete,
            approx_ratio: num("a_r")?,
            bandwidth_mode,
            droplets: Vec::new(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_report()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_report(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                msg,
            },
            other => other,
        })
    }
}

/// Exhaustive spectrum, refusing instances above [`BRUTE_FORCE_LIMIT`] spins.
pub fn brute_force_spectrum(inst: &Instance, req: &SpectrumRequest) -> Result<LowEnergySet> {
    brute_force_spectrum_with_limit(inst, req, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_spectrum_with_limit(
    inst: &Instance,
    req: &SpectrumRequest,
    limit: usize,
) -> Result<LowEnergySet> {
    req.validate()?;
    let n = inst.n();
    if n > limit || n >= 63 {
        return Err(Error::Refused(format!(
            "brute force is limited to {limit} spins (instance has {n}); use the branch-and-bound enumerator"
        )));
    }

    // Pass 1: extreme energies.
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    gray_walk(inst, |_, e| {
        lo = lo.min(e);
        hi = hi.max(e);
    });

    // Pass 2: everything near the extremes or under a provisional cutoff.
    let top_guess = match req.bandwidth_mode {
        BandwidthMode::Exact => hi,
        BandwidthMode::Bound => inst.abs_bound(),
    };
    let provisional = cutoff_for(lo, top_guess, req.approx_ratio) + ENUM_TOL;
    let keep_cap = 2 * req.max_states.max(16);
    let mut low: Vec<(f64, SpinConfig)> = Vec::new();
    let mut high: Vec<SpinConfig> = Vec::new();
    let mut truncated = false;
    gray_walk(inst, |spins, e| {
        if e <= provisional {
            let s = SpinConfig::from_vec_unchecked(spins.to_vec());
            low.push((inst.energy_unchecked(spins), s));
            if low.len() > keep_cap {
                sort_states(&mut low);
                if low.len() > req.max_states {
                    low.truncate(req.max_states);
                    truncated = true;
                }
            }
        }
        if e >= hi - ENUM_TOL {
            high.push(SpinConfig::from_vec_unchecked(spins.to_vec()));
        }
    });
    sort_states(&mut low);

    let e_min = low[0].0;
    let e_top = match req.bandwidth_mode {
        BandwidthMode::Exact => high
            .iter()
            .map(|s| inst.energy_unchecked(s.spins()))
            .fold(f64::NEG_INFINITY, f64::max),
        BandwidthMode::Bound => inst.abs_bound(),
    };
    Ok(finish(low, e_min, e_top, req, truncated, Vec::new()))
}

fn finish(
    mut scored: Vec<(f64, SpinConfig)>,
    e_min: f64,
    e_top: f64,
    req: &SpectrumRequest,
    mut truncated: bool,
    droplets: Vec<Droplet>,
) -> LowEnergySet {
    let cutoff = cutoff_for(e_min, e_top, req.approx_ratio);
    scored.retain(|(e, _)| *e <= cutoff);
    sort_states(&mut scored);
    if scored.len() > req.max_states {
        scored.truncate(req.max_states);
        truncated = true;
    }
    let (energies, states): (Vec<f64>, Vec<SpinConfig>) = scored.into_iter().unzip();
    LowEnergySet {
        states,
        energies,
        e_min,
        e_top,
        cutoff,
        complete: !truncated,
        approx_ratio: req.approx_ratio,
        bandwidth_mode: req.bandwidth_mode,
        droplets,
    }
}

/// Visits every configuration once, passing an incrementally updated energy.
fn gray_walk(inst: &Instance, mut visit: impl FnMut(&[i8], f64)) {
    let n = inst.n();
    let mut s = vec![1i8; n];
    let mut e = inst.energy_unchecked(&s);
    visit(&s, e);
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let local = inst.fields()[i]
            + inst
                .neighbors(i)
                .iter()
                .map(|&(j, c)| c * f64::from(s[j]))
                .sum::<f64>();
        e -= 2.0 * f64::from(s[i]) * local;
        s[i] = -s[i];
        visit(&s, e);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BnbOptions {
    /// Largest boundary (in spins) the scan may carry.
    pub strip_width_limit: usize,
    /// Droplets smaller than this are not recorded.
    pub droplet_min_size: usize,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            strip_width_limit: DEFAULT_STRIP_WIDTH_LIMIT,
            droplet_min_size: 1,
        }
    }
}

/// Static description of the site-by-site scan.
struct ScanPlan {
    /// `boundary[k]`: sites `< k` coupled to some site `>= k`, ascending.
    boundary: Vec<Vec<usize>>,
    /// Couplings from site `k` to already assigned neighbours, by boundary position.
    lower: Vec<Vec<(usize, f64)>>,
    /// For each slot of `boundary[k + 1]`, where its spin comes from in step `k`:
    /// a slot of `boundary[k]`, or `None` for site `k` itself.
    next_src: Vec<Vec<Option<usize>>>,
}

impl ScanPlan {
    fn new(inst: &Instance, width_limit: usize) -> Result<Self> {
        let n = inst.n();
        let reach: Vec<usize> = (0..n)
            .map(|i| inst.neighbors(i).iter().map(|&(j, _)| j).max().unwrap_or(0))
            .collect();
        let mut boundary = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let b: Vec<usize> = (0..k).filter(|&i| reach[i] >= k).collect();
            if b.len() > width_limit {
                return Err(Error::Refused(format!(
                    "scan boundary reaches {} spins at site {k}, above the strip width limit {width_limit}",
                    b.len()
                )));
            }
            boundary.push(b);
        }
        let mut lower = Vec::with_capacity(n);
        let mut next_src = Vec::with_capacity(n);
        for k in 0..n {
            let pos: HashMap<usize, usize> =
                boundary[k].iter().enumerate().map(|(p, &i)| (i, p)).collect();
            lower.push(
                inst.neighbors(k)
                    .iter()
                    .filter(|&&(j, _)| j < k)
                    .map(|&(j, c)| (pos[&j], c))
                    .collect(),
            );
            next_src.push(
                boundary[k + 1]
                    .iter()
                    .map(|&i| if i == k { None } else { Some(pos[&i]) })
                    .collect(),
            );
        }
        Ok(ScanPlan {
            boundary,
            lower,
            next_src,
        })
    }

    fn n(&self) -> usize {
        self.lower.len()
    }

    // Key bit `m` is set when the spin on boundary slot `m` is -1.
    fn key_spin(key: usize, slot: usize) -> f64 {
        if key >> slot & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    fn step_energy(&self, fields: &[f64], k: usize, key: usize, s: i8) -> f64 {
        let sk = f64::from(s);
        let mut e = fields[k] * sk;
        for &(slot, c) in &self.lower[k] {
            e += c * Self::key_spin(key, slot) * sk;
        }
        e
    }

    fn next_key(&self, k: usize, key: usize, s: i8) -> usize {
        let mut out = 0;
        for (m, src) in self.next_src[k].iter().enumerate() {
            let down = match src {
                Some(slot) => key >> slot & 1 == 1,
                None => s < 0,
            };
            if down {
                out |= 1 << m;
            }
        }
        out
    }

    /// `tables[k][key]`: minimal energy contributed by sites `>= k` given the
    /// boundary spins encoded by `key`.
    fn completion_tables(&self, fields: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut tables = vec![Vec::new(); n + 1];
        tables[n] = vec![0.0; 1 << self.boundary[n].len()];
        for k in (0..n).rev() {
            let size = 1usize << self.boundary[k].len();
            let mut t = vec![0.0; size];
            for (key, slot) in t.iter_mut().enumerate() {
                let mut best = f64::INFINITY;
                for s in [1i8, -1] {
                    let v = self.step_energy(fields, k, key, s)
                        + tables[k + 1][self.next_key(k, key, s)];
                    best = best.min(v);
                }
                *slot = best;
            }
            tables[k] = t;
        }
        tables
    }

    /// Completes a partial configuration along the cheapest branch.
    fn best_completion(&self, fields: &[f64], tables: &[Vec<f64>], prefix: &[i8], mut key: usize) -> Vec<i8> {
        let mut spins = prefix.to_vec();
        for k in prefix.len()..self.n() {
            let mut choice = 1i8;
            let mut best = f64::INFINITY;
            for s in [1i8, -1] {
                let v = self.step_energy(fields, k, key, s) + tables[k + 1][self.next_key(k, key, s)];
                if v < best {
                    best = v;
                    choice = s;
                }
            }
            key = self.next_key(k, key, choice);
            spins.push(choice);
        }
        spins
    }
}

struct Partial {
    spins: Vec<i8>,
    energy: f64,
    key: usize,
}

struct PendingDroplet {
    rep_prefix: Vec<i8>,
    rep_key: usize,
    sites: Vec<usize>,
}

struct ScanOutput {
    configs: Vec<SpinConfig>,
    truncated: bool,
    droplets: Vec<PendingDroplet>,
}

/// Enumerates all configurations whose energy can be at most `cutoff`.
fn scan(
    plan: &ScanPlan,
    fields: &[f64],
    tables: &[Vec<f64>],
    cutoff: f64,
    max_states: usize,
    droplet_min_size: Option<usize>,
) -> ScanOutput {
    let n = plan.n();
    let mut level = vec![Partial {
        spins: Vec::new(),
        energy: 0.0,
        key: 0,
    }];
    let mut truncated = false;
    let mut seen_droplets: HashSet<Vec<usize>> = HashSet::new();
    let mut droplets = Vec::new();

    for k in 0..n {
        let next_table = &tables[k + 1];
        let mut next: Vec<Partial> = Vec::with_capacity(level.len() * 2);
        for p in &level {
            for s in [1i8, -1] {
                let energy = p.energy + plan.step_energy(fields, k, p.key, s);
                let key = plan.next_key(k, p.key, s);
                if energy + next_table[key] <= cutoff {
                    let mut spins = Vec::with_capacity(k + 1);
                    spins.extend_from_slice(&p.spins);
                    spins.push(s);
                    next.push(Partial { spins, energy, key });
                }
            }
        }

        // Merge by boundary class: the lowest member represents the class.
        next.sort_by(|a, b| {
            a.key
                .cmp(&b.key)
                .then(a.energy.total_cmp(&b.energy))
                .then_with(|| a.spins.cmp(&b.spins))
        });
        if let Some(min_size) = droplet_min_size {
            let mut start = 0;
            while start < next.len() {
                let mut end = start + 1;
                while end < next.len() && next[end].key == next[start].key {
                    end += 1;
                }
                let rep = &next[start];
                for member in &next[start + 1..end] {
                    let sites: Vec<usize> = rep
                        .spins
                        .iter()
                        .zip(&member.spins)
                        .enumerate()
                        .filter(|(_, (a, b))| a != b)
                        .map(|(i, _)| i)
                        .collect();
                    if sites.len() >= min_size
                        && seen_droplets.len() < max_states
                        && seen_droplets.insert(sites.clone())
                    {
                        droplets.push(PendingDroplet {
                            rep_prefix: rep.spins.clone(),
                            rep_key: rep.key,
                            sites,
                        });
                    }
                }
                start = end;
            }
        }

        if next.len() > max_states {
            next.sort_by(|a, b| {
                (a.energy + next_table[a.key])
                    .total_cmp(&(b.energy + next_table[b.key]))
                    .then_with(|| a.spins.cmp(&b.spins))
            });
            next.truncate(max_states);
            truncated = true;
        }
        level = next;
    }

    ScanOutput {
        configs: level
            .into_iter()
            .map(|p| SpinConfig::from_vec_unchecked(p.spins))
            .collect(),
        truncated,
        droplets,
    }
}

/// Row-by-row branch-and-bound with equivalent-partial-configuration merging.
///
/// Exact and complete under the cutoff unless more than `max_states` states
/// qualify, in which case the lowest ones are kept and `complete` is false.
pub fn bnb_spectrum(inst: &Instance, req: &SpectrumRequest, opts: &BnbOptions) -> Result<LowEnergySet> {
    req.validate()?;
    let plan = ScanPlan::new(inst, opts.strip_width_limit)?;
    let fields = inst.fields();
    let tables = plan.completion_tables(fields);
    let dp_min = tables[0][0];

    let e_top = match req.bandwidth_mode {
        BandwidthMode::Bound => inst.abs_bound(),
        BandwidthMode::Exact => {
            // Highest energy = lowest energy of the negated instance; collect
            // the near-degenerate maxima and settle on the exact value.
            let neg_fields: Vec<f64> = fields.iter().map(|h| -h).collect();
            let neg_plan = ScanPlan::new(&inst.negated(), opts.strip_width_limit)?;
            let neg_tables = neg_plan.completion_tables(&neg_fields);
            let out = scan(&neg_plan, &neg_fields, &neg_tables, neg_tables[0][0] + ENUM_TOL, 64, None);
            out.configs
                .iter()
                .map(|s| inst.energy_unchecked(s.spins()))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };

    let provisional = cutoff_for(dp_min, e_top, req.approx_ratio) + ENUM_TOL;
    let out = scan(
        &plan,
        fields,
        &tables,
        provisional,
        req.max_states,
        Some(opts.droplet_min_size.max(1)),
    );
    let scored: Vec<(f64, SpinConfig)> = out
        .configs
        .into_iter()
        .map(|s| (inst.energy_unchecked(s.spins()), s))
        .collect();
    let e_min = scored
        .iter()
        .map(|(e, _)| *e)
        .fold(f64::INFINITY, f64::min);
    let mut set = finish(scored, e_min, e_top, req, out.truncated, Vec::new());

    let index: HashMap<&SpinConfig, usize> = set.states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut droplets = Vec::new();
    for d in out.droplets {
        let base = SpinConfig::from_vec_unchecked(plan.best_completion(fields, &tables, &d.rep_prefix, d.rep_key));
        let partner = base.with_flipped(&d.sites);
        if let (Some(&b), Some(&p)) = (index.get(&base), index.get(&partner)) {
            droplets.push(Droplet {
                base: b,
                partner: p,
                sites: d.sites,
                gap: set.energies[p] - set.energies[b],
            });
        }
    }
    drop(index);
    set.droplets = droplets;
    Ok(set)
}

/// Brute force when the instance is small enough, branch-and-bound otherwise.
pub fn spectrum(inst: &Instance, req: &SpectrumRequest, opts: &BnbOptions) -> Result<LowEnergySet> {
    if inst.n() <= 20 {
        brute_force_spectrum(inst, req)
    } else {
        bnb_spectrum(inst, req, opts)
    }
}

/// Minimal classical energy, via the completion sweep.
pub fn ground_energy(inst: &Instance, opts: &BnbOptions) -> Result<f64> {
    let plan = ScanPlan::new(inst, opts.strip_width_limit)?;
    let tables = plan.completion_tables(inst.fields());
    let s = plan.best_completion(inst.fields(), &tables, &[], 0);
    Ok(inst.energy_unchecked(&s))
}
