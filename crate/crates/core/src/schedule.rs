//! Transverse-field profiles with multiple critical fronts.
//!
//! The lattice is partitioned into clusters. In cluster `k` with slope
//! `alpha > 0` the field on a site at distance `d` from the cluster centre is
//!
//! ```text
//! g(t) = [1 + alpha * (d - v * t)]_{0,1},   v = (1 + alpha * d_max) / (alpha * t_a)
//! ```
//!
//! so a front starts at the centre and reaches the farthest member exactly at
//! `t_a`. A cluster with `alpha = 0` follows the homogeneous ramp `1 - t / t_a`.
//! Couplings are switched on as the fields are switched off:
//! `J_ij(t) = (1 - g_i/2 - g_j/2) J_ij` and `h_i(t) = (1 - g_i) h_i`.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng;

/// Slopes sampled per cluster by the portfolio.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 1.0 / 50.0, 1.0 / 20.0, 1.0 / 10.0, 1.0 / 5.0];

/// Probability that a portfolio restart runs the fully homogeneous schedule.
pub const DEFAULT_HOMOGENEOUS_PARTICIPATION: f64 = 0.2;

/// A partition of the sites into disjoint clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
    /// Sites requested by more than one droplet; they stay with the earliest.
    #[serde(default)]
    pub overlaps: Vec<usize>,
}

impl Partition {
    pub fn single(n: usize) -> Self {
        Partition {
            clusters: vec![(0..n).collect()],
            overlaps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index of every site; fails unless the clusters partition `0..n`.
    pub fn labels(&self, n: usize) -> Result<Vec<usize>> {
        let mut label = vec![usize::MAX; n];
        for (k, c) in self.clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::invalid(format!("cluster {k} is empty")));
            }
            for &i in c {
                if i >= n {
                    return Err(Error::invalid(format!("site {i} out of range for {n} sites")));
                }
                if label[i] != usize::MAX {
                    return Err(Error::invalid(format!("site {i} appears in two clusters")));
                }
                label[i] = k;
            }
        }
        if let Some(i) = label.iter().position(|&l| l == usize::MAX) {
            return Err(Error::invalid(format!("site {i} is not covered by any cluster")));
        }
        Ok(label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub sites: Vec<usize>,
    pub center: [f64; 2],
    pub alpha: f64,
    pub d_max: f64,
}

impl Cluster {
    /// Front velocity, or `None` for the homogeneous ramp.
    pub fn velocity(&self, t_a: f64) -> Option<f64> {
        (self.alpha > 0.0).then(|| (1.0 + self.alpha * self.d_max) / (self.alpha * t_a))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    clusters: Vec<Cluster>,
    t_a: f64,
    site_cluster: Vec<usize>,
    site_distance: Vec<f64>,
}

/// Serialisable form of a schedule: cluster site lists, slopes and `t_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub t_a: f64,
    pub clusters: Vec<ClusterConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub sites: Vec<usize>,
    pub alpha: f64,
}

impl Schedule {
    /// Builds a schedule over `partition` with one slope per cluster.
    /// Distances are Euclidean in the instance geometry, which is required as
    /// soon as any slope is positive.
    pub fn new(inst: &Instance, partition: &Partition, alphas: &[f64], t_a: f64) -> Result<Self> {
        let n = inst.n();
        let site_cluster = partition.labels(n)?;
        if alphas.len() != partition.len() {
            return Err(Error::invalid(format!(
                "{} slopes for {} clusters",
                alphas.len(),
                partition.len()
            )));
        }
        if !(t_a > 0.0 && t_a.is_finite()) {
            return Err(Error::invalid(format!("annealing time must be positive, got {t_a}")));
        }
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::invalid(format!("slope must be finite and non-negative, got {a}")));
        }
        let geometry = inst.geometry();
        if geometry.is_none() && alphas.iter().any(|&a| a > 0.0) {
            return Err(Error::invalid(
                "inhomogeneous fronts need site coordinates; the instance has no geometry",
            ));
        }
        let mut site_distance = vec![0.0; n];
        let mut clusters = Vec::with_capacity(partition.len());
        for (sites, &alpha) in partition.clusters.iter().zip(alphas) {
            let (center, d_max) = match geometry {
                Some(g) => {
                    let m = sites.len() as f64;
                    let sum = sites.iter().fold([0.0, 0.0], |acc, &i| {
                        let c = g.coord(i);
                        [acc[0] + c[0], acc[1] + c[1]]
                    });
                    let center = [sum[0] / m, sum[1] / m];
                    let mut d_max: f64 = 0.0;
                    for &i in sites {
                        let c = g.coord(i);
                        let d = (c[0] - center[0]).hypot(c[1] - center[1]);
                        site_distance[i] = d;
                        d_max = d_max.max(d);
                    }
                    (center, d_max)
                }
                None => ([0.0, 0.0], 0.0),
            };
            clusters.push(Cluster {
                sites: sites.clone(),
                center,
                alpha,
                d_max,
            });
        }
        Ok(Schedule {
            clusters,
            t_a,
            site_cluster,
            site_distance,
        })
    }

    /// The standard ramp `g_i(t) = 1 - t / t_a` on every site.
    pub fn homogeneous(inst: &Instance, t_a: f64) -> Result<Self> {
        Self::new(inst, &Partition::single(inst.n()), &[0.0], t_a)
    }

    /// A single cluster with slope `alpha`.
    pub fn single_front(inst: &Instance, alpha: f64, t_a: f64) -> Result<Self> {
        Self::new(inst, &Partition::single(inst.n()), &[alpha], t_a)
    }

    pub fn from_config(inst: &Instance, config: &ScheduleConfig) -> Result<Self> {
        let partition = Partition {
            clusters: config.clusters.iter().map(|c| c.sites.clone()).collect(),
            overlaps: Vec::new(),
        };
        let alphas: Vec<f64> = config.clusters.iter().map(|c| c.alpha).collect();
        Self::new(inst, &partition, &alphas, config.t_a)
    }

    pub fn to_config(&self) -> ScheduleConfig {
        ScheduleConfig {
            t_a: self.t_a,
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterConfig {
                    sites: c.sites.clone(),
                    alpha: c.alpha,
                })
                .collect(),
        }
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn n(&self) -> usize {
        self.site_cluster.len()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.alpha).collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.clusters.iter().all(|c| c.alpha == 0.0)
    }

    /// Distance of `site` from the centre of its cluster.
    pub fn distance(&self, site: usize) -> f64 {
        self.site_distance[site]
    }

    /// Front velocity of cluster `k` (`None` when homogeneous).
    pub fn velocity(&self, k: usize) -> Option<f64> {
        self.clusters[k].velocity(self.t_a)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_a).contains(&t) {
            return Err(Error::invalid(format!("time {t} outside [0, {}]", self.t_a)));
        }
        Ok(())
    }

    /// Transverse field `g_i(t)`.
    pub fn field_at(&self, site: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if site >= self.n() {
            return Err(Error::invalid(format!("site {site} out of range")));
        }
        Ok(self.field_unchecked(site, t))
    }

    pub(crate) fn field_unchecked(&self, site: usize, t: f64) -> f64 {
        let c = &self.clusters[self.site_cluster[site]];
        let frac = t / self.t_a;
        let g = if c.alpha == 0.0 {
            1.0 - frac
        } else {
            // 1 + alpha (d - v t) with v t = (1 + alpha d_max) t / t_a; at t = t_a
            // this is alpha (d - d_max) <= 0 without rounding.
            1.0 + c.alpha * self.site_distance[site] - (1.0 + c.alpha * c.d_max) * frac
        };
        g.clamp(0.0, 1.0)
    }

    /// All fields at time `t`, written into `out`.
    pub fn fields_into(&self, t: f64, out: &mut [f64]) {
        for (i, g) in out.iter_mut().enumerate() {
            *g = self.field_unchecked(i, t);
        }
    }

    /// Ramped coupling `J_ij(t) = (1 - g_i/2 - g_j/2) J_ij`; `i == j` gives the
    /// ramped local field `(1 - g_i) h_i`.
    pub fn coupling_at(&self, inst: &Instance, i: usize, j: usize, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if inst.n() != self.n() || i >= inst.n() || j >= inst.n() {
            return Err(Error::invalid(format!("edge ({i}, {j}) does not fit the schedule")));
        }
        if i == j {
            return Ok(ramp_field(self.field_unchecked(i, t), inst.fields()[i]));
        }
        let coupling = inst
            .neighbors(i)
            .iter()
            .find(|&&(k, _)| k == j)
            .map(|&(_, c)| c)
            .ok_or_else(|| Error::invalid(format!("no edge ({i}, {j}) in the instance")))?;
        Ok(ramp_coupling(
            self.field_unchecked(i, t),
            self.field_unchecked(j, t),
            coupling,
        ))
    }
}

pub(crate) fn ramp_coupling(g_i: f64, g_j: f64, coupling: f64) -> f64 {
    (1.0 - g_i / 2.0 - g_j / 2.0) * coupling
}

pub(crate) fn ramp_field(g_i: f64, field: f64) -> f64 {
    (1.0 - g_i) * field
}

/// Partition built from droplets: each droplet (minus sites claimed by earlier
/// droplets) becomes a cluster, the rest of the lattice forms one more
/// cluster, and clusters below `min_size` are absorbed into the neighbouring
/// cluster they share most couplings with (ties to the lower index).
pub fn clusters_from_droplets(inst: &Instance, droplets: &[Vec<usize>], min_size: usize) -> Result<Partition> {
    let n = inst.n();
    let mut owner = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut overlaps = Vec::new();
    for d in droplets {
        let mut cluster = Vec::new();
        for &i in d {
            if i >= n {
                return Err(Error::invalid(format!("droplet site {i} out of range")));
            }
            if owner[i] == usize::MAX {
                owner[i] = clusters.len();
                cluster.push(i);
            } else if owner[i] != clusters.len() {
                overlaps.push(i);
            }
        }
        if !cluster.is_empty() {
            cluster.sort_unstable();
            clusters.push(cluster);
        }
    }
    let rest: Vec<usize> = (0..n).filter(|&i| owner[i] == usize::MAX).collect();
    if !rest.is_empty() {
        for &i in &rest {
            owner[i] = clusters.len();
        }
        clusters.push(rest);
    }
    overlaps.sort_unstable();
    overlaps.dedup();
    absorb_small(inst, &mut clusters, min_size);
    Ok(Partition { clusters, overlaps })
}

pub(crate) fn absorb_small(inst: &Instance, clusters: &mut Vec<Vec<usize>>, min_size: usize) {
    loop {
        if clusters.len() <= 1 {
            return;
        }
        let small = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() < min_size)
            .min_by_key(|(k, c)| (c.len(), *k))
            .map(|(k, _)| k);
        let Some(small) = small else { return };

        let mut label = vec![usize::MAX; inst.n()];
        for (k, c) in clusters.iter().enumerate() {
            for &i in c {
                label[i] = k;
            }
        }
        let mut links: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &clusters[small] {
            for &(j, _) in inst.neighbors(i) {
                if label[j] != small {
                    *links.entry(label[j]).or_default() += 1;
                }
            }
        }
        let target = links
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&k, _)| k)
            .unwrap_or(if small == 0 { 1 } else { 0 });
        let moved = std::mem::take(&mut clusters[small]);
        clusters[target].extend(moved);
        clusters[target].sort_unstable();
        clusters.remove(small);
    }
}

/// One draw from the portfolio: with probability `participation` the fully
/// homogeneous schedule, otherwise an independent slope per cluster.
pub fn random_portfolio_schedule(
    inst: &Instance,
    partition: &Partition,
    alphas: &[f64],
    t_a: f64,
    seed: u64,
) -> Result<Schedule> {
    let mut rng = rng::stream(seed, 0);
    random_portfolio_schedule_with(inst, partition, alphas, DEFAULT_HOMOGENEOUS_PARTICIPATION, t_a, &mut rng)
}

pub fn random_portfolio_schedule_with(
    inst: &Instance,
    partition: &Partition,
    alphas: &[f64],
    participation: f64,
    t_a: f64,
    rng: &mut rng::Rng,
) -> Result<Schedule> {
    if alphas.is_empty() {
        return Err(Error::invalid("the slope portfolio is empty"));
    }
    if !(0.0..=1.0).contains(&participation) {
        return Err(Error::invalid(format!(
            "homogeneous participation must lie in [0, 1], got {participation}"
        )));
    }
    if rng.random::<f64>() < participation {
        return Schedule::homogeneous(inst, t_a);
    }
    let draws: Vec<f64> = (0..partition.len())
        .map(|_| alphas[rng.random_range(0..alphas.len())])
        .collect();
    Schedule::new(inst, partition, &draws, t_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Edge, Geometry};
    use proptest::prelude::*;

    fn chain(n: usize) -> Instance {
        let edges = (0..n - 1).map(|i| Edge { i, j: i + 1, coupling: 0.8 }).collect();
        Instance::new(n, edges, vec![0.3; n], Some(Geometry::Chain { len: n })).unwrap()
    }

    #[test]
    fn worked_front_example() {
        // chain of 9 sites: centre 4, d_max 4; site 2 sits at d = 2
        let inst = chain(9);
        let s = Schedule::single_front(&inst, 0.25, 8.0).unwrap();
        assert_eq!(s.distance(2), 2.0);
        assert_eq!(s.clusters()[0].d_max, 4.0);
        assert_eq!(s.velocity(0), Some(1.0));
        assert!((s.field_at(2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.field_at(2, 4.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(s.field_at(2, 6.0).unwrap().abs() < 1e-12);
        assert!(s.field_at(2, 8.5).is_err());
        assert!(s.field_at(2, -0.1).is_err());
    }

    #[test]
    fn homogeneous_ramp() {
        let inst = chain(5);
        let s = Schedule::homogeneous(&inst, 10.0).unwrap();
        for i in 0..5 {
            assert_eq!(s.field_at(i, 0.0).unwrap(), 1.0);
            assert_eq!(s.field_at(i, 5.0).unwrap(), 0.5);
            assert_eq!(s.field_at(i, 10.0).unwrap(), 0.0);
        }
        assert!(s.is_homogeneous());
        assert_eq!(s.velocity(0), None);
    }

    #[test]
    fn small_slope_approaches_homogeneous() {
        let inst = Instance::generate_2d(5, 1).unwrap();
        let hom = Schedule::homogeneous(&inst, 16.0).unwrap();
        let front = Schedule::single_front(&inst, 1e-6, 16.0).unwrap();
        for i in 0..inst.n() {
            for t in [1.0, 4.0, 8.0, 12.0, 15.0] {
                let d = hom.field_at(i, t).unwrap() - front.field_at(i, t).unwrap();
                assert!(d.abs() < 1e-5, "site {i} t {t}: {d}");
            }
        }
    }

    #[test]
    fn coupling_endpoints() {
        let inst = chain(6);
        let s = Schedule::single_front(&inst, 0.3, 5.0).unwrap();
        for e in inst.edges() {
            assert_eq!(s.coupling_at(&inst, e.i, e.j, 0.0).unwrap(), 0.0);
            assert_eq!(s.coupling_at(&inst, e.i, e.j, 5.0).unwrap(), e.coupling);
        }
        assert_eq!(s.coupling_at(&inst, 2, 2, 0.0).unwrap(), 0.0);
        assert_eq!(s.coupling_at(&inst, 2, 2, 5.0).unwrap(), 0.3);
        assert!(s.coupling_at(&inst, 0, 3, 1.0).is_err());
        assert!((ramp_coupling(0.5, 1.0, 0.8) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        let inst = chain(4);
        let p = Partition { clusters: vec![vec![0, 1], vec![2, 3]], overlaps: vec![] };
        assert!(Schedule::new(&inst, &p, &[0.1], 1.0).is_err());
        assert!(Schedule::new(&inst, &p, &[0.1, -0.1], 1.0).is_err());
        assert!(Schedule::new(&inst, &p, &[0.1, 0.1], 0.0).is_err());
        let bad = Partition { clusters: vec![vec![0, 1], vec![1, 2, 3]], overlaps: vec![] };
        assert!(Schedule::new(&inst, &bad, &[0.0, 0.0], 1.0).is_err());
        let missing = Partition { clusters: vec![vec![0, 1], vec![3]], overlaps: vec![] };
        assert!(Schedule::new(&inst, &missing, &[0.0, 0.0], 1.0).is_err());
        let bare = Instance::new(2, vec![], vec![0.0; 2], None).unwrap();
        assert!(Schedule::single_front(&bare, 0.1, 1.0).is_err());
        assert!(Schedule::homogeneous(&bare, 1.0).is_ok());
    }

    #[test]
    fn config_round_trip() {
        let inst = Instance::generate_2d(4, 2).unwrap();
        let p = clusters_from_droplets(&inst, &[vec![0, 1, 4, 5]], 1).unwrap();
        let s = Schedule::new(&inst, &p, &[0.1, 0.05], 32.0).unwrap();
        let json = serde_json::to_string(&s.to_config()).unwrap();
        let back: ScheduleConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(Schedule::from_config(&inst, &back).unwrap(), s);
    }

    #[test]
    fn droplet_partitions() {
        let inst = Instance::generate_2d(4, 0).unwrap();
        assert_eq!(clusters_from_droplets(&inst, &[], 3).unwrap(), Partition::single(16));

        let p = clusters_from_droplets(&inst, &[vec![0, 1, 2, 4, 5]], 3).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.clusters[0].len(), 5);
        assert_eq!(p.clusters[1].len(), 11);

        let p = clusters_from_droplets(&inst, &[vec![0, 1]], 3).unwrap();
        assert_eq!(p, Partition::single(16));

        let p = clusters_from_droplets(&inst, &[vec![0, 1, 4, 5], vec![5, 6, 7]], 1).unwrap();
        assert_eq!(p.overlaps, vec![5]);
        assert_eq!(p.clusters[1], vec![6, 7]);
        p.labels(16).unwrap();
        assert!(clusters_from_droplets(&inst, &[vec![99]], 1).is_err());
    }

    #[test]
    fn small_cluster_joins_most_connected_neighbour() {
        // 4x4 grid; {5} has two couplings into {0,1,4} (1-5, 4-5) and two into
        // the complement (5-6, 5-9): the tie goes to the lower index.
        let inst = Instance::generate_2d(4, 0).unwrap();
        let p = clusters_from_droplets(&inst, &[vec![0, 1, 4], vec![5]], 2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.clusters[0], vec![0, 1, 4, 5]);
    }

    #[test]
    fn portfolio_draws() {
        let inst = Instance::generate_2d(4, 0).unwrap();
        let p = clusters_from_droplets(&inst, &[vec![0, 1, 4, 5]], 1).unwrap();
        for seed in 0..50 {
            assert!(random_portfolio_schedule(&inst, &p, &[0.0], 8.0, seed).unwrap().is_homogeneous());
        }
        let a = random_portfolio_schedule(&inst, &p, &DEFAULT_ALPHAS, 8.0, 17).unwrap();
        let b = random_portfolio_schedule(&inst, &p, &DEFAULT_ALPHAS, 8.0, 17).unwrap();
        assert_eq!(a, b);
        assert!(random_portfolio_schedule(&inst, &p, &[], 8.0, 1).is_err());
    }

    #[test]
    fn portfolio_participation_frequency() {
        let inst = chain(6);
        let p = Partition::single(6);
        let trials = 10_000;
        let fronts = (0..trials)
            .filter(|&seed| {
                let s = random_portfolio_schedule(&inst, &p, &[0.1], 4.0, seed).unwrap();
                s.alphas() == vec![0.1]
            })
            .count();
        // binomial(10^4, 0.8): sd = 40
        assert!((fronts as f64 - 8000.0).abs() < 4.0 * 40.0, "{fronts}");
    }

    fn arb_schedule() -> impl Strategy<Value = (Schedule, f64)> {
        (0u64..500, 2usize..6, 0.0f64..1.0, 0.0f64..1.0, 1.0f64..100.0).prop_map(|(seed, side, a0, a1, t_a)| {
            let inst = Instance::generate_2d(side, seed).unwrap();
            let cut = side * side / 2;
            let p = clusters_from_droplets(&inst, &[(0..cut).collect()], 1).unwrap();
            let alphas = if p.len() == 2 { vec![a0, a1] } else { vec![a0] };
            (Schedule::new(&inst, &p, &alphas, t_a).unwrap(), t_a)
        })
    }

    proptest! {
        #[test]
        fn fields_bounded_and_non_increasing((s, t_a) in arb_schedule(), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
            let (t1, t2) = (f1.min(f2) * t_a, f1.max(f2) * t_a);
            for i in 0..s.n() {
                let (g1, g2) = (s.field_at(i, t1).unwrap(), s.field_at(i, t2).unwrap());
                prop_assert!((0.0..=1.0).contains(&g1));
                prop_assert!(g2 <= g1);
                prop_assert_eq!(s.field_at(i, t_a).unwrap(), 0.0);
                prop_assert_eq!(s.field_at(i, 0.0).unwrap(), 1.0);
            }
        }

        #[test]
        fn closer_sites_finish_first((s, t_a) in arb_schedule(), f in 0.0f64..1.0) {
            let t = f * t_a;
            for c in s.clusters() {
                for &i in &c.sites {
                    for &j in &c.sites {
                        if s.distance(i) <= s.distance(j) {
                            prop_assert!(s.field_at(i, t).unwrap() <= s.field_at(j, t).unwrap());
                        }
                    }
                }
            }
        }
    }
}
