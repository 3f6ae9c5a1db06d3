//! Diversity of a low-energy manifold.
//!
//! Two configurations are compared by the refined Hamming distance: the size of
//! the largest connected cluster, in the coupling graph, of spins on which they
//! differ. States at refined distance at least `R * N` from each other are
//! considered independent; the diversity `D` is the size of a maximum
//! independent set of the proximity graph. [`greedy_seeds`] approximates it
//! from below and picks the basin seeds, [`exact_diversity`] solves it exactly
//! for small sets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{overlap, Instance, SpinConfig};
use crate::rng;
use crate::spectrum::LowEnergySet;

/// Largest set [`exact_diversity`] will search.
pub const EXACT_DIVERSITY_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityParams {
    /// Normalised distance threshold `R`.
    pub radius: f64,
    /// Identify `s` with `-s`.
    pub merge_spin_flip: bool,
}

impl DiversityParams {
    pub fn new(radius: f64, merge_spin_flip: bool) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::invalid(format!("R must lie in (0, 1], got {radius}")));
        }
        Ok(DiversityParams {
            radius,
            merge_spin_flip,
        })
    }

    /// Spin-flip merging on exactly when the instance has no local fields.
    pub fn for_instance(inst: &Instance, radius: f64) -> Result<Self> {
        Self::new(radius, !inst.has_fields())
    }

    /// `R * N`, compared as a real against integer distances.
    pub fn threshold(&self, n: usize) -> f64 {
        self.radius * n as f64
    }
}

/// Reusable scratch space for cluster searches on one instance.
pub struct DistanceWorkspace {
    stamp: Vec<u32>,
    epoch: u32,
    stack: Vec<usize>,
}

impl DistanceWorkspace {
    pub fn new(n: usize) -> Self {
        DistanceWorkspace {
            stamp: vec![0; n],
            epoch: 0,
            stack: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Largest connected cluster of sites where `a` and `b` differ (or agree,
    /// when `flip` is set, i.e. the distance from `-a` to `b`). Returns early
    /// once a cluster reaches `stop_at`.
    fn largest_cluster(&mut self, inst: &Instance, a: &[i8], b: &[i8], flip: bool, stop_at: usize) -> usize {
        let epoch = self.next_epoch();
        let differs = |i: usize| (a[i] != b[i]) != flip;
        let mut best = 0;
        for start in 0..a.len() {
            if self.stamp[start] == epoch || !differs(start) {
                continue;
            }
            self.stamp[start] = epoch;
            self.stack.clear();
            self.stack.push(start);
            let mut size = 0;
            while let Some(i) = self.stack.pop() {
                size += 1;
                for &(j, _) in inst.neighbors(i) {
                    if self.stamp[j] != epoch && differs(j) {
                        self.stamp[j] = epoch;
                        self.stack.push(j);
                    }
                }
            }
            best = best.max(size);
            if best >= stop_at {
                break;
            }
        }
        best
    }

    pub fn distance(&mut self, inst: &Instance, a: &SpinConfig, b: &SpinConfig) -> usize {
        self.largest_cluster(inst, a.spins(), b.spins(), false, usize::MAX)
    }

    /// Distance with the spin-flip image of `a` taken into account when merging.
    pub fn basin_distance(&mut self, inst: &Instance, a: &SpinConfig, b: &SpinConfig, merge_spin_flip: bool) -> usize {
        let d = self.distance(inst, a, b);
        if merge_spin_flip {
            d.min(self.largest_cluster(inst, a.spins(), b.spins(), true, usize::MAX))
        } else {
            d
        }
    }

    /// Whether `a` and `b` are at refined distance `>= threshold` (and so are
    /// `-a` and `b` when merging spin flips).
    pub fn independent(&mut self, inst: &Instance, a: &SpinConfig, b: &SpinConfig, p: &DiversityParams) -> bool {
        let threshold = p.threshold(inst.n());
        let stop = threshold.ceil().max(0.0) as usize;
        let far = |ws: &mut Self, flip: bool| {
            let mismatches = a
                .spins()
                .iter()
                .zip(b.spins())
                .filter(|(x, y)| (x != y) != flip)
                .count();
            (mismatches as f64) >= threshold
                && ws.largest_cluster(inst, a.spins(), b.spins(), flip, stop) as f64 >= threshold
        };
        far(self, false) && (!p.merge_spin_flip || far(self, true))
    }
}

fn check_len(inst: &Instance, s: &SpinConfig) -> Result<()> {
    if s.len() != inst.n() {
        return Err(Error::invalid(format!(
            "configuration has {} spins, instance has {}",
            s.len(),
            inst.n()
        )));
    }
    Ok(())
}

/// Refined (singly-connected) Hamming distance.
pub fn refined_distance(inst: &Instance, a: &SpinConfig, b: &SpinConfig) -> Result<usize> {
    check_len(inst, a)?;
    check_len(inst, b)?;
    Ok(DistanceWorkspace::new(inst.n()).distance(inst, a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSeeds {
    pub seeds: Vec<SpinConfig>,
    /// Position of each seed in the low-energy set it was drawn from.
    pub indices: Vec<usize>,
    pub energies: Vec<f64>,
    pub radius: f64,
    pub merge_spin_flip: bool,
    pub approx_ratio: f64,
}

impl BasinSeeds {
    /// The diversity `D`.
    pub fn count(&self) -> usize {
        self.seeds.len()
    }

    pub fn params(&self) -> DiversityParams {
        DiversityParams {
            radius: self.radius,
            merge_spin_flip: self.merge_spin_flip,
        }
    }

    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# basin seeds: index energy spins");
        let _ = writeln!(out, "R {}", self.radius);
        let _ = writeln!(out, "merge_spin_flip {}", self.merge_spin_flip);
        let _ = writeln!(out, "a_r {}", self.approx_ratio);
        let _ = writeln!(out, "D {}", self.count());
        for ((idx, e), s) in self.indices.iter().zip(&self.energies).zip(&self.seeds) {
            let _ = writeln!(out, "{idx} {e} {s}");
        }
        out
    }

    pub fn from_report(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: "<seeds>".into(),
            line,
            msg,
        };
        let mut seeds = BasinSeeds {
            seeds: Vec::new(),
            indices: Vec::new(),
            energies: Vec::new(),
            radius: f64::NAN,
            merge_spin_flip: false,
            approx_ratio: f64::NAN,
        };
        let mut declared = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| err(lineno, format!("bad {what} in '{line}'"));
            match toks.as_slice() {
                ["R", v] => seeds.radius = v.parse().map_err(|_| bad("R"))?,
                ["merge_spin_flip", v] => seeds.merge_spin_flip = v.parse().map_err(|_| bad("flag"))?,
                ["a_r", v] => seeds.approx_ratio = v.parse().map_err(|_| bad("a_r"))?,
                ["D", v] => declared = Some(v.parse::<usize>().map_err(|_| bad("count"))?),
                [i, e, s] => {
                    seeds.indices.push(i.parse().map_err(|_| bad("index"))?);
                    seeds.energies.push(e.parse().map_err(|_| bad("energy"))?);
                    seeds.seeds.push(s.parse().map_err(|_| bad("spins"))?);
                }
                _ => return Err(err(lineno, format!("unrecognised line '{line}'"))),
            }
        }
        if declared != Some(seeds.count()) {
            return Err(err(0, format!("declared D {declared:?} but found {} seeds", seeds.count())));
        }
        Ok(seeds)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_report()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_report(&text)
    }
}

/// Greedy basin seeds: walk the states by ascending energy, starting from the
/// ground state, and open a new basin whenever a state is at refined distance
/// `>= R * N` from every seed found so far.
pub fn greedy_seeds(inst: &Instance, low: &LowEnergySet, p: &DiversityParams) -> Result<BasinSeeds> {
    if low.is_empty() {
        return Err(Error::invalid("greedy seeding needs a non-empty low-energy set"));
    }
    let mut ws = DistanceWorkspace::new(inst.n());
    let mut out = BasinSeeds {
        seeds: Vec::new(),
        indices: Vec::new(),
        energies: Vec::new(),
        radius: p.radius,
        merge_spin_flip: p.merge_spin_flip,
        approx_ratio: low.approx_ratio,
    };
    for (idx, s) in low.states.iter().enumerate() {
        check_len(inst, s)?;
        if out.seeds.iter().all(|seed| ws.independent(inst, s, seed, p)) {
            out.seeds.push(s.clone());
            out.indices.push(idx);
            out.energies.push(low.energies[idx]);
        }
    }
    Ok(out)
}

/// Exact diversity: maximum independent set of the graph joining states at
/// refined distance below `R * N`.
pub fn exact_diversity(inst: &Instance, low: &LowEnergySet, p: &DiversityParams) -> Result<usize> {
    let m = low.len();
    if m > EXACT_DIVERSITY_LIMIT {
        return Err(Error::Refused(format!(
            "exact diversity is limited to {EXACT_DIVERSITY_LIMIT} states (got {m})"
        )));
    }
    if m == 0 {
        return Ok(0);
    }
    let mut ws = DistanceWorkspace::new(inst.n());
    let mut conflicts = vec![0u32; m];
    for a in 0..m {
        check_len(inst, &low.states[a])?;
        for b in (a + 1)..m {
            // the relation is symmetric even with spin-flip merging
            if !ws.independent(inst, &low.states[a], &low.states[b], p) {
                conflicts[a] |= 1 << b;
                conflicts[b] |= 1 << a;
            }
        }
    }
    Ok(max_independent_set(&conflicts, (1u32 << m) - 1))
}

fn max_independent_set(conflicts: &[u32], candidates: u32) -> usize {
    if candidates == 0 {
        return 0;
    }
    let v = candidates.trailing_zeros() as usize;
    let without = candidates & !(1 << v);
    let take = 1 + max_independent_set(conflicts, without & !conflicts[v]);
    if take > without.count_ones() as usize {
        return take;
    }
    take.max(max_independent_set(conflicts, without))
}

/// Index of the closest seed; ties go to the lower index.
pub fn assign_basin(inst: &Instance, s: &SpinConfig, seeds: &BasinSeeds) -> Result<usize> {
    if seeds.seeds.is_empty() {
        return Err(Error::invalid("no basin seeds"));
    }
    check_len(inst, s)?;
    let mut ws = DistanceWorkspace::new(inst.n());
    Ok(assign_basin_with(&mut ws, inst, s, seeds))
}

pub(crate) fn assign_basin_with(ws: &mut DistanceWorkspace, inst: &Instance, s: &SpinConfig, seeds: &BasinSeeds) -> usize {
    let mut best = (usize::MAX, 0);
    for (k, seed) in seeds.seeds.iter().enumerate() {
        let d = ws.basin_distance(inst, s, seed, seeds.merge_spin_flip);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// `d_r = D_solver / D`.
pub fn diversity_ratio(found: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::invalid("total diversity must be at least 1"));
    }
    if found > total {
        return Err(Error::invalid(format!(
            "solver diversity {found} exceeds total diversity {total}"
        )));
    }
    Ok(found as f64 / total as f64)
}

/// Pairs above which [`overlap_histogram`] subsamples.
pub const DEFAULT_MAX_PAIRS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapHistogram {
    /// Counts over equal-width bins covering `[-1, 1]`.
    pub counts: Vec<u64>,
    pub pairs: u64,
    pub mean: f64,
    /// Whether a random subset of pairs was used.
    pub subsampled: bool,
}

impl OverlapHistogram {
    pub fn bin_center(&self, k: usize) -> f64 {
        let w = 2.0 / self.counts.len() as f64;
        -1.0 + w * (k as f64 + 0.5)
    }

    pub fn bin_of(bins: usize, q: f64) -> usize {
        (((q + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)
    }

    pub fn density(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.pairs as f64).collect()
    }
}

/// Histogram of `q_ab` over all unordered sample pairs.
pub fn overlap_histogram(samples: &[SpinConfig], bins: usize) -> Result<OverlapHistogram> {
    overlap_histogram_with(samples, bins, DEFAULT_MAX_PAIRS, 0)
}

/// As [`overlap_histogram`], drawing `max_pairs` random pairs when there are more.
pub fn overlap_histogram_with(
    samples: &[SpinConfig],
    bins: usize,
    max_pairs: usize,
    seed: u64,
) -> Result<OverlapHistogram> {
    if samples.len() < 2 {
        return Err(Error::invalid("overlap histogram needs at least two samples"));
    }
    if bins == 0 || max_pairs == 0 {
        return Err(Error::invalid("bins and max_pairs must be positive"));
    }
    let m = samples.len();
    let total = m * (m - 1) / 2;
    let mut counts = vec![0u64; bins];
    let mut sum = 0.0;
    let mut pairs = 0u64;
    let mut add = |q: f64| {
        counts[OverlapHistogram::bin_of(bins, q)] += 1;
        sum += q;
        pairs += 1;
    };
    let subsampled = total > max_pairs;
    if subsampled {
        let mut rng = rng::stream(seed, 0);
        for _ in 0..max_pairs {
            let a = rng.random_range(0..m);
            let mut b = rng.random_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            add(overlap(&samples[a], &samples[b])?);
        }
    } else {
        for a in 0..m {
            for b in (a + 1)..m {
                add(overlap(&samples[a], &samples[b])?);
            }
        }
    }
    Ok(OverlapHistogram {
        counts,
        pairs,
        mean: sum / pairs as f64,
        subsampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Edge;
    use crate::spectrum::{brute_force_spectrum, BandwidthMode, SpectrumRequest};
    use proptest::prelude::*;

    fn path(n: usize) -> Instance {
        let edges = (0..n - 1).map(|i| Edge { i, j: i + 1, coupling: -1.0 }).collect();
        Instance::new(n, edges, vec![0.0; n], None).unwrap()
    }

    fn complete(n: usize) -> Instance {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge { i, j, coupling: 0.5 });
            }
        }
        Instance::new(n, edges, vec![0.0; n], None).unwrap()
    }

    fn hand_set(states: Vec<SpinConfig>) -> LowEnergySet {
        let n = states.len();
        LowEnergySet {
            energies: (0..n).map(|i| i as f64).collect(),
            states,
            e_min: 0.0,
            e_top: 10.0,
            cutoff: n as f64,
            complete: true,
            approx_ratio: 0.1,
            bandwidth_mode: BandwidthMode::Exact,
            droplets: vec![],
        }
    }

    #[test]
    fn refined_distance_examples() {
        let up = SpinConfig::all_up(5);
        let s = up.with_flipped(&[0, 1, 3]);
        assert_eq!(refined_distance(&path(5), &up, &s).unwrap(), 2);
        assert_eq!(up.hamming(&s), 3);
        assert_eq!(refined_distance(&path(5), &up, &up).unwrap(), 0);

        let up4 = SpinConfig::all_up(4);
        assert_eq!(refined_distance(&complete(4), &up4, &up4.with_flipped(&[0, 2, 3])).unwrap(), 3);
        assert!(refined_distance(&path(5), &up, &up4).is_err());
    }

    /// Three states on a 16-site chain with d(1,2)=3, d(1,3)=10, d(2,3)=8.
    fn three_states() -> (Instance, LowEnergySet) {
        let up = SpinConfig::all_up(16);
        let s2 = up.with_flipped(&[0, 1, 2]);
        let s3 = up.with_flipped(&(1..=10).collect::<Vec<_>>());
        let inst = path(16);
        assert_eq!(refined_distance(&inst, &up, &s2).unwrap(), 3);
        assert_eq!(refined_distance(&inst, &up, &s3).unwrap(), 10);
        assert_eq!(refined_distance(&inst, &s2, &s3).unwrap(), 8);
        (inst, hand_set(vec![up, s2, s3]))
    }

    #[test]
    fn greedy_hand_trace() {
        let (inst, set) = three_states();
        let p = DiversityParams::new(0.5, false).unwrap();
        let seeds = greedy_seeds(&inst, &set, &p).unwrap();
        assert_eq!(seeds.count(), 2);
        assert_eq!(seeds.indices, vec![0, 2]);
        assert_eq!(exact_diversity(&inst, &set, &p).unwrap(), 2);
    }

    #[test]
    fn single_state_has_unit_diversity() {
        let inst = path(4);
        let set = hand_set(vec![SpinConfig::all_up(4)]);
        let p = DiversityParams::new(0.25, false).unwrap();
        assert_eq!(greedy_seeds(&inst, &set, &p).unwrap().count(), 1);
        assert_eq!(exact_diversity(&inst, &set, &p).unwrap(), 1);
    }

    #[test]
    fn spin_flip_merge_on_ferromagnet() {
        let inst = path(8);
        let set = brute_force_spectrum(&inst, &SpectrumRequest::exact(0.01).unwrap()).unwrap();
        assert_eq!(set.len(), 2);
        let merged = DiversityParams::new(0.125, true).unwrap();
        assert_eq!(greedy_seeds(&inst, &set, &merged).unwrap().count(), 1);
        assert_eq!(exact_diversity(&inst, &set, &merged).unwrap(), 1);
        let plain = DiversityParams::new(0.125, false).unwrap();
        assert_eq!(greedy_seeds(&inst, &set, &plain).unwrap().count(), 2);
        assert_eq!(DiversityParams::for_instance(&inst, 0.125).unwrap(), merged);
    }

    #[test]
    fn exact_extremes() {
        let inst = path(12);
        let up = SpinConfig::all_up(12);
        // disjoint blocks of 4 flipped spins: pairwise distance 4 or more
        let far = hand_set(vec![up.clone(), up.with_flipped(&[0, 1, 2, 3]), up.with_flipped(&[6, 7, 8, 9])]);
        let p = DiversityParams::new(4.0 / 12.0, false).unwrap();
        assert_eq!(exact_diversity(&inst, &far, &p).unwrap(), 3);
        let near = hand_set(vec![up.clone(), up.with_flipped(&[0]), up.with_flipped(&[5])]);
        assert_eq!(exact_diversity(&inst, &near, &p).unwrap(), 1);
        let many = hand_set((0..25).map(|_| up.clone()).collect());
        assert!(matches!(exact_diversity(&inst, &many, &p), Err(Error::Refused(_))));
    }

    #[test]
    fn basin_assignment() {
        let inst = path(10);
        let up = SpinConfig::all_up(10);
        let seeds = BasinSeeds {
            seeds: vec![up.with_flipped(&[0, 1, 2, 3, 4]), up.with_flipped(&[5, 6])],
            indices: vec![0, 1],
            energies: vec![0.0, 1.0],
            radius: 0.1,
            merge_spin_flip: false,
            approx_ratio: 0.1,
        };
        // distances (5, 2)
        assert_eq!(assign_basin(&inst, &up, &seeds).unwrap(), 1);
        for (k, s) in seeds.seeds.iter().enumerate() {
            assert_eq!(assign_basin(&inst, s, &seeds).unwrap(), k);
        }
        let tie = BasinSeeds {
            seeds: vec![up.with_flipped(&[0, 1, 2, 3]), up.with_flipped(&[6, 7, 8, 9])],
            ..seeds.clone()
        };
        assert_eq!(assign_basin(&inst, &up, &tie).unwrap(), 0);
        let empty = BasinSeeds { seeds: vec![], ..seeds };
        assert!(assign_basin(&inst, &up, &empty).is_err());
    }

    #[test]
    fn ratio() {
        assert_eq!(diversity_ratio(3, 6).unwrap(), 0.5);
        assert_eq!(diversity_ratio(6, 6).unwrap(), 1.0);
        assert_eq!(diversity_ratio(0, 6).unwrap(), 0.0);
        assert!(diversity_ratio(1, 0).is_err());
        assert!(diversity_ratio(7, 6).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DiversityParams::new(0.0, false).is_err());
        assert!(DiversityParams::new(1.0, false).is_ok());
        assert!(DiversityParams::new(1.5, false).is_err());
    }

    #[test]
    fn seeds_report_round_trip() {
        let (inst, set) = three_states();
        let seeds = greedy_seeds(&inst, &set, &DiversityParams::new(0.5, false).unwrap()).unwrap();
        assert_eq!(BasinSeeds::from_report(&seeds.to_report()).unwrap(), seeds);
    }

    #[test]
    fn histogram_of_identical_samples() {
        let s = SpinConfig::all_up(6).with_flipped(&[2]);
        let h = overlap_histogram(&vec![s; 5], 20).unwrap();
        assert_eq!(h.pairs, 10);
        assert_eq!(h.counts[19], 10);
        assert_eq!(h.mean, 1.0);
        assert!(overlap_histogram(&[SpinConfig::all_up(3)], 10).is_err());
    }

    #[test]
    fn histogram_of_flip_pairs() {
        let s = SpinConfig::all_up(6).with_flipped(&[1, 4]);
        let samples = vec![s.clone(), s.flipped(), s.clone(), s.flipped()];
        let h = overlap_histogram(&samples, 10).unwrap();
        assert_eq!(h.counts[0] + h.counts[9], h.pairs);
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.counts[0], 4);
    }

    #[test]
    fn histogram_of_random_configs_centres_on_zero() {
        let n = 400;
        let mut rng = rng::stream(3, 0);
        let samples: Vec<SpinConfig> = (0..60)
            .map(|_| SpinConfig::new((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).unwrap())
            .collect();
        let h = overlap_histogram(&samples, 40).unwrap();
        let tol = 3.0 / ((n as f64) * h.pairs as f64).sqrt();
        assert!(h.mean.abs() < tol, "mean {} tol {}", h.mean, tol);
        let sub = overlap_histogram_with(&samples, 40, 100, 9).unwrap();
        assert!(sub.subsampled);
        assert_eq!(sub.pairs, 100);
    }

    fn random_set(seed: u64) -> (Instance, LowEnergySet) {
        let inst = Instance::generate_grid(4, 4, seed).unwrap();
        let set = brute_force_spectrum(&inst, &SpectrumRequest::exact(0.08).unwrap()).unwrap();
        (inst, set)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn distance_properties(seed in 0u64..1000, ma in 0u32..65536, mb in 0u32..65536) {
            let inst = Instance::generate_grid(4, 4, seed).unwrap();
            let mk = |m: u32| SpinConfig::new((0..16).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect()).unwrap();
            let (a, b) = (mk(ma), mk(mb));
            let d = refined_distance(&inst, &a, &b).unwrap();
            prop_assert_eq!(d, refined_distance(&inst, &b, &a).unwrap());
            prop_assert!(d <= a.hamming(&b));
            prop_assert_eq!(d == 0, a == b);
        }

        #[test]
        fn greedy_seeds_invariants(seed in 0u64..1000, radius in 0.05f64..0.5) {
            let (inst, set) = random_set(seed);
            let p = DiversityParams::new(radius, false).unwrap();
            let seeds = greedy_seeds(&inst, &set, &p).unwrap();
            for a in 0..seeds.count() {
                prop_assert_eq!(assign_basin(&inst, &seeds.seeds[a], &seeds).unwrap(), a);
                prop_assert!(set.states.contains(&seeds.seeds[a]));
                for b in a + 1..seeds.count() {
                    let d = refined_distance(&inst, &seeds.seeds[a], &seeds.seeds[b]).unwrap();
                    prop_assert!(d as f64 >= p.threshold(inst.n()));
                }
            }
            prop_assert_eq!(seeds.indices[0], 0);
            prop_assert_eq!(&seeds, &greedy_seeds(&inst, &set, &p).unwrap());
            if set.len() <= EXACT_DIVERSITY_LIMIT {
                let exact = exact_diversity(&inst, &set, &p).unwrap();
                prop_assert!(seeds.count() <= exact && exact <= set.len());
            }
            let wider = DiversityParams::new((radius * 1.5).min(1.0), false).unwrap();
            prop_assert!(greedy_seeds(&inst, &set, &wider).unwrap().count() <= seeds.count());
        }
    }
}
