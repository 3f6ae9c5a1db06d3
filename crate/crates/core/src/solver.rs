//! Path-integral Monte Carlo for the driven transverse-field Ising model.
//!
//! The quantum partition function at inverse temperature `beta` is mapped onto
//! `P` coupled classical replicas (Trotter slices) with `dtau = beta / P`.
//! Within a slice the couplings are `dtau * J_ij(t)` and `dtau * h_i(t)`; the
//! copies of site `i` in neighbouring slices are joined ferromagnetically with
//!
//! ```text
//! K_i(t) = -1/2 ln tanh(dtau * g_i(t))
//! ```
//!
//! and periodic boundary conditions in imaginary time. Each sweep proposes one
//! Metropolis flip per (site, slice) and one flip of every site's whole
//! imaginary-time line. When `g_i` reaches zero `K_i` is infinite: the line is
//! collapsed to its majority value (ties drawn at random) and from then on
//! only moves as a whole. The collapse looks at the line alone, so lines
//! freezing together do not perform a sequential quench.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, SpinConfig};
use crate::rng;
use crate::schedule::{ramp_coupling, ramp_field, Schedule};

/// Inverse temperature used unless configured otherwise.
pub const DEFAULT_BETA: f64 = 24.0;

/// Largest imaginary-time step accepted.
pub const MAX_DTAU: f64 = 0.5;

/// How a classical configuration is read out of the final replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "slice")]
pub enum Readout {
    /// The slice with the lowest problem energy (ties to the lower slice).
    LowestSlice,
    FixedSlice(usize),
    /// Per-site majority over slices (ties to slice 0).
    Majority,
}

impl Readout {
    pub fn name(&self) -> String {
        match self {
            Readout::LowestSlice => "lowest_slice".into(),
            Readout::FixedSlice(p) => format!("slice_{p}"),
            Readout::Majority => "majority".into(),
        }
    }
}

impl std::str::FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest_slice" | "lowest" => Ok(Readout::LowestSlice),
            "majority" => Ok(Readout::Majority),
            other => other
                .strip_prefix("slice_")
                .and_then(|p| p.parse().ok())
                .map(Readout::FixedSlice)
                .ok_or_else(|| Error::invalid(format!("unknown readout rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PimcParams {
    pub beta: f64,
    pub slices: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub readout: Readout,
}

impl PimcParams {
    pub fn new(beta: f64, slices: usize, sweeps: usize, seed: u64) -> Result<Self> {
        let p = PimcParams {
            beta,
            slices,
            sweeps,
            seed,
            readout: Readout::LowestSlice,
        };
        p.validate()?;
        Ok(p)
    }

    /// `beta = 24` with `dtau = 0.25`.
    pub fn with_defaults(sweeps: usize, seed: u64) -> Self {
        PimcParams {
            beta: DEFAULT_BETA,
            slices: (DEFAULT_BETA / 0.25) as usize,
            sweeps,
            seed,
            readout: Readout::LowestSlice,
        }
    }

    pub fn with_readout(mut self, readout: Readout) -> Self {
        self.readout = readout;
        self
    }

    pub fn dtau(&self) -> f64 {
        self.beta / self.slices as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if self.slices < 2 {
            return Err(Error::invalid(format!("need at least 2 Trotter slices, got {}", self.slices)));
        }
        if self.dtau() > MAX_DTAU {
            return Err(Error::invalid(format!(
                "dtau = beta / slices = {} exceeds {MAX_DTAU}",
                self.dtau()
            )));
        }
        if let Readout::FixedSlice(p) = self.readout {
            if p >= self.slices {
                return Err(Error::invalid(format!("readout slice {p} out of range")));
            }
        }
        Ok(())
    }
}

/// Imaginary-time coupling `K = -1/2 ln tanh(dtau g)`; infinite at `g = 0`.
pub fn trotter_coupling(dtau: f64, g: f64) -> f64 {
    -0.5 * (dtau * g).tanh().ln()
}

/// One annealing restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SpinConfig,
    pub energy: f64,
    pub seed: u64,
    pub sweeps: usize,
    pub t_a: f64,
    pub alphas: Vec<f64>,
    pub homogeneous: bool,
    #[serde(default)]
    pub partition_id: Option<usize>,
    pub readout: String,
}

impl RunRecord {
    /// One line of the run log: seed, sweeps, protocol metadata, energy, spins.
    pub fn to_log_line(&self) -> String {
        let alphas: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
        let partition = self
            .partition_id
            .map_or_else(|| "-".to_string(), |p| p.to_string());
        format!(
            "seed={} sweeps={} t_a={} homogeneous={} partition={} alphas={} readout={} energy={} config={}",
            self.seed,
            self.sweeps,
            self.t_a,
            self.homogeneous,
            partition,
            alphas.join(","),
            self.readout,
            self.energy,
            self.config
        )
    }
}

/// Sparse neighbour lists in one flat array.
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    couplings: Vec<f64>,
}

impl Csr {
    fn new(inst: &Instance) -> Self {
        let mut offsets = Vec::with_capacity(inst.n() + 1);
        let mut targets = Vec::new();
        let mut couplings = Vec::new();
        offsets.push(0);
        for i in 0..inst.n() {
            for &(j, c) in inst.neighbors(i) {
                targets.push(j);
                couplings.push(c);
            }
            offsets.push(targets.len());
        }
        Csr {
            offsets,
            targets,
            couplings,
        }
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

/// Replica state and the Hamiltonian currently applied to it.
struct Replicas<'a> {
    inst: &'a Instance,
    csr: Csr,
    n: usize,
    slices: usize,
    dtau: f64,
    /// `spins[p * n + i]`
    spins: Vec<i8>,
    /// Ramped couplings aligned with `csr.targets`.
    coupling_t: Vec<f64>,
    field_t: Vec<f64>,
    /// `K_i`; `None` when the line is frozen.
    bond: Vec<Option<f64>>,
}

impl<'a> Replicas<'a> {
    fn new(inst: &'a Instance, slices: usize, dtau: f64, rng: &mut rng::Rng) -> Self {
        let n = inst.n();
        let csr = Csr::new(inst);
        let spins = (0..n * slices)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let m = csr.targets.len();
        Replicas {
            inst,
            csr,
            n,
            slices,
            dtau,
            spins,
            coupling_t: vec![0.0; m],
            field_t: vec![0.0; n],
            bond: vec![None; n],
        }
    }

    /// Applies the Hamiltonian for transverse fields `g`, with couplings ramped
    /// (annealing) or at full strength (equilibrium runs).
    fn set_fields(&mut self, g: &[f64], ramp: bool, rng: &mut rng::Rng) {
        for i in 0..self.n {
            let h = self.inst.fields()[i];
            self.field_t[i] = if ramp { ramp_field(g[i], h) } else { h };
            for k in self.csr.range(i) {
                let c = self.csr.couplings[k];
                self.coupling_t[k] = if ramp {
                    ramp_coupling(g[i], g[self.csr.targets[k]], c)
                } else {
                    c
                };
            }
            let k = trotter_coupling(self.dtau, g[i]);
            self.bond[i] = k.is_finite().then_some(k);
        }
        for i in 0..self.n {
            if self.bond[i].is_none() {
                self.collapse_line(i, rng);
            }
        }
    }

    #[inline]
    fn local_field(&self, i: usize, p: usize) -> f64 {
        let base = p * self.n;
        let mut phi = self.field_t[i];
        for k in self.csr.range(i) {
            phi += self.coupling_t[k] * f64::from(self.spins[base + self.csr.targets[k]]);
        }
        phi
    }

    /// Sum over slices of `s_i^p * phi_i^p`.
    fn line_energy(&self, i: usize) -> f64 {
        (0..self.slices)
            .map(|p| f64::from(self.spins[p * self.n + i]) * self.local_field(i, p))
            .sum()
    }

    /// Sets a frozen line to its majority value unless it already is uniform.
    fn collapse_line(&mut self, i: usize, rng: &mut rng::Rng) {
        let sum: i64 = (0..self.slices).map(|p| i64::from(self.spins[p * self.n + i])).sum();
        if sum.unsigned_abs() as usize == self.slices {
            return;
        }
        let s = match sum.cmp(&0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            }
        };
        for p in 0..self.slices {
            self.spins[p * self.n + i] = s;
        }
    }

    fn sweep(&mut self, rng: &mut rng::Rng) {
        let (n, slices) = (self.n, self.slices);
        for p in 0..slices {
            let prev = if p == 0 { slices - 1 } else { p - 1 } * n;
            let next = if p + 1 == slices { 0 } else { p + 1 } * n;
            for i in 0..n {
                let Some(bond) = self.bond[i] else { continue };
                let idx = p * n + i;
                let s = f64::from(self.spins[idx]);
                let neigh = f64::from(self.spins[prev + i] + self.spins[next + i]);
                let delta = -2.0 * s * (self.dtau * self.local_field(i, p) - bond * neigh);
                if delta <= 0.0 || rng.random::<f64>() < (-delta).exp() {
                    self.spins[idx] = -self.spins[idx];
                }
            }
        }
        for i in 0..n {
            let delta = -2.0 * self.dtau * self.line_energy(i);
            if delta <= 0.0 || rng.random::<f64>() < (-delta).exp() {
                for p in 0..slices {
                    self.spins[p * n + i] = -self.spins[p * n + i];
                }
            }
        }
    }

    fn slice(&self, p: usize) -> &[i8] {
        &self.spins[p * self.n..(p + 1) * self.n]
    }

    fn readout(&self, rule: Readout) -> SpinConfig {
        let spins = match rule {
            Readout::FixedSlice(p) => self.slice(p).to_vec(),
            Readout::LowestSlice => {
                let mut best = (f64::INFINITY, 0);
                for p in 0..self.slices {
                    let e = self.inst.energy_unchecked(self.slice(p));
                    if e < best.0 {
                        best = (e, p);
                    }
                }
                self.slice(best.1).to_vec()
            }
            Readout::Majority => (0..self.n)
                .map(|i| {
                    let sum: i64 = (0..self.slices).map(|p| i64::from(self.spins[p * self.n + i])).sum();
                    match sum.cmp(&0) {
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Less => -1,
                        std::cmp::Ordering::Equal => self.spins[i],
                    }
                })
                .collect(),
        };
        SpinConfig::from_vec_unchecked(spins)
    }
}

/// Anneals from `g = 1` to `g = 0` along `sched`. Sweep `m` (1-based, of
/// `p.sweeps`) uses the Hamiltonian at `t = m / sweeps * t_a`, so the last
/// sweep runs at the classical endpoint.
pub fn pimc_anneal(inst: &Instance, sched: &Schedule, p: &PimcParams) -> Result<RunRecord> {
    p.validate()?;
    if sched.n() != inst.n() {
        return Err(Error::invalid("schedule and instance sizes differ"));
    }
    if p.sweeps == 0 {
        return Err(Error::invalid("an annealing run needs at least one sweep"));
    }
    let mut rng = rng::stream(p.seed, 0);
    let mut reps = Replicas::new(inst, p.slices, p.dtau(), &mut rng);
    let mut g = vec![0.0; inst.n()];
    for m in 1..=p.sweeps {
        let t = if m == p.sweeps {
            sched.t_a()
        } else {
            sched.t_a() * m as f64 / p.sweeps as f64
        };
        sched.fields_into(t, &mut g);
        reps.set_fields(&g, true, &mut rng);
        reps.sweep(&mut rng);
    }
    let config = reps.readout(p.readout);
    Ok(RunRecord {
        energy: inst.energy_unchecked(config.spins()),
        config,
        seed: p.seed,
        sweeps: p.sweeps,
        t_a: sched.t_a(),
        alphas: sched.alphas(),
        homogeneous: sched.is_homogeneous(),
        partition_id: None,
        readout: p.readout.name(),
    })
}

/// Independent restarts; restart `r` uses seed `derive_seed(master_seed, [r])`.
/// Output order follows the restart index regardless of scheduling.
pub fn anneal_restarts<F>(
    inst: &Instance,
    restarts: usize,
    master_seed: u64,
    base: &PimcParams,
    schedule_for: F,
) -> Result<Vec<RunRecord>>
where
    F: Fn(usize, &mut rng::Rng) -> Result<(Schedule, Option<usize>)> + Sync,
{
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_seed(master_seed, &[r as u64]);
            let mut draw_rng = rng::stream(seed, 1);
            let (sched, partition_id) = schedule_for(r, &mut draw_rng)?;
            let params = PimcParams { seed, ..*base };
            let mut rec = pimc_anneal(inst, &sched, &params)?;
            rec.partition_id = partition_id;
            Ok(rec)
        })
        .collect()
}

/// Equilibrium `<s_i s_j>` estimate for one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub i: usize,
    pub j: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Number of blocks used for jackknife errors.
pub const JACKKNIFE_BLOCKS: usize = 50;

/// Equilibrium PIMC at a static uniform transverse field `g` with the full
/// problem couplings. Runs `p.sweeps / 10` burn-in sweeps, then measures
/// `<sigma^z_i sigma^z_j>` on every edge (averaged over slices) for
/// `p.sweeps` sweeps. Errors come from a delete-one-block jackknife.
pub fn pimc_equilibrium(inst: &Instance, g: f64, p: &PimcParams) -> Result<Vec<Correlation>> {
    p.validate()?;
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::invalid(format!("transverse field must be non-negative, got {g}")));
    }
    if p.sweeps < JACKKNIFE_BLOCKS {
        return Err(Error::invalid(format!("need at least {JACKKNIFE_BLOCKS} measurement sweeps")));
    }
    let mut rng = rng::stream(p.seed, 0);
    let mut reps = Replicas::new(inst, p.slices, p.dtau(), &mut rng);
    reps.set_fields(&vec![g; inst.n()], false, &mut rng);
    for _ in 0..p.sweeps / 10 {
        reps.sweep(&mut rng);
    }
    let edges = inst.edges();
    let per_block = p.sweeps / JACKKNIFE_BLOCKS;
    let mut blocks = vec![vec![0.0; JACKKNIFE_BLOCKS]; edges.len()];
    for b in 0..JACKKNIFE_BLOCKS {
        for _ in 0..per_block {
            reps.sweep(&mut rng);
            for (k, e) in edges.iter().enumerate() {
                let c: i64 = (0..p.slices)
                    .map(|s| i64::from(reps.spins[s * reps.n + e.i] * reps.spins[s * reps.n + e.j]))
                    .sum();
                blocks[k][b] += c as f64 / p.slices as f64;
            }
        }
        for blk in blocks.iter_mut() {
            blk[b] /= per_block as f64;
        }
    }
    Ok(edges
        .iter()
        .zip(&blocks)
        .map(|(e, blk)| {
            let (mean, stderr) = jackknife_mean(blk);
            Correlation {
                i: e.i,
                j: e.j,
                mean,
                stderr,
            }
        })
        .collect())
}

/// Delete-one jackknife of the mean of block averages.
pub fn jackknife_mean(blocks: &[f64]) -> (f64, f64) {
    let b = blocks.len() as f64;
    let total: f64 = blocks.iter().sum();
    let mean = total / b;
    let var = blocks
        .iter()
        .map(|x| {
            let loo = (total - x) / (b - 1.0);
            (loo - mean).powi(2)
        })
        .sum::<f64>()
        * (b - 1.0)
        / b;
    (mean, var.sqrt())
}

/// Slice-0 configurations of an equilibrium PIMC chain, one every `thin`
/// sweeps after `burn_in`. With `g = 0` this samples the classical Gibbs
/// distribution at `beta` through whole-line moves.
pub fn pimc_samples(inst: &Instance, g: f64, p: &PimcParams, burn_in: usize, thin: usize) -> Result<Vec<SpinConfig>> {
    p.validate()?;
    if thin == 0 {
        return Err(Error::invalid("thinning interval must be positive"));
    }
    let mut rng = rng::stream(p.seed, 0);
    let mut reps = Replicas::new(inst, p.slices, p.dtau(), &mut rng);
    reps.set_fields(&vec![g; inst.n()], false, &mut rng);
    for _ in 0..burn_in {
        reps.sweep(&mut rng);
    }
    let mut out = Vec::with_capacity(p.sweeps / thin);
    for m in 0..p.sweeps {
        reps.sweep(&mut rng);
        if (m + 1).is_multiple_of(thin) {
            out.push(SpinConfig::from_vec_unchecked(reps.slice(0).to_vec()));
        }
    }
    Ok(out)
}

/// Classical single-spin heat-bath chain at inverse temperature `beta`.
/// Records one configuration every `thin` sweeps after `burn_in` sweeps.
pub fn gibbs_sample(
    inst: &Instance,
    beta: f64,
    sweeps: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<Vec<SpinConfig>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be non-negative, got {beta}")));
    }
    if thin == 0 {
        return Err(Error::invalid("thinning interval must be positive"));
    }
    let n = inst.n();
    let mut rng = rng::stream(seed, 0);
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut out = Vec::with_capacity(sweeps / thin);
    for m in 0..burn_in + sweeps {
        for i in 0..n {
            let phi = inst.fields()[i]
                + inst
                    .neighbors(i)
                    .iter()
                    .map(|&(j, c)| c * f64::from(s[j]))
                    .sum::<f64>();
            let up = 1.0 / (1.0 + (2.0 * beta * phi).exp());
            s[i] = if rng.random::<f64>() < up { 1 } else { -1 };
        }
        if m >= burn_in && (m - burn_in + 1).is_multiple_of(thin) {
            out.push(SpinConfig::from_vec_unchecked(s.clone()));
        }
    }
    Ok(out)
}
