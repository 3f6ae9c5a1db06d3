use spinglass_diversity::instance::Edge;
use spinglass_diversity::schedule::{random_portfolio_schedule, Partition, Schedule, DEFAULT_ALPHAS};
use spinglass_diversity::solver::{pimc_anneal, pimc_samples, PimcParams};
use spinglass_diversity::spectrum::{brute_force_spectrum, SpectrumRequest};
use spinglass_diversity::Instance;

/// 99th percentile of chi-square with 7 degrees of freedom.
const CHI2_7_99: f64 = 18.475;

#[test]
fn classical_kernel_samples_gibbs_distribution() {
    let edges = vec![
        Edge { i: 0, j: 1, coupling: -0.6 },
        Edge { i: 1, j: 2, coupling: 0.3 },
        Edge { i: 0, j: 2, coupling: -0.2 },
    ];
    let inst = Instance::new(3, edges, vec![0.2, -0.1, 0.05], None).unwrap();
    let beta = 1.0;
    let p = PimcParams::new(beta, 2, 5_000_000, 17).unwrap();
    let samples = pimc_samples(&inst, 0.0, &p, 1000, 5).unwrap();
    assert_eq!(samples.len(), 1_000_000);

    let index = |s: &[i8]| s.iter().fold(0, |acc, &x| 2 * acc + usize::from(x < 0));
    let mut observed = [0u64; 8];
    for s in &samples {
        observed[index(s.spins())] += 1;
    }
    let weights: Vec<f64> = (0..8)
        .map(|b| {
            let s: Vec<i8> = (0..3).map(|k| if (b >> (2 - k)) & 1 == 0 { 1 } else { -1 }).collect();
            let cfg = spinglass_diversity::SpinConfig::new(s).unwrap();
            (-beta * inst.energy(&cfg).unwrap()).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let n = samples.len() as f64;
    let chi2: f64 = (0..8)
        .map(|b| {
            let expected = n * weights[b] / z;
            (observed[b] as f64 - expected).powi(2) / expected
        })
        .sum();
    assert!(chi2 < CHI2_7_99, "chi2 = {chi2}, observed {observed:?}");
}

#[test]
fn annealed_energy_never_below_ground() {
    for seed in 0..8 {
        let inst = Instance::generate_2d(4, seed).unwrap();
        let ground = brute_force_spectrum(&inst, &SpectrumRequest::exact(1e-6).unwrap()).unwrap().e_min;
        let part = Partition {
            clusters: vec![(0..8).collect(), (8..16).collect()],
            overlaps: vec![],
        };
        for r in 0..4 {
            let sched = if r == 0 {
                Schedule::homogeneous(&inst, 40.0).unwrap()
            } else {
                random_portfolio_schedule(&inst, &part, &DEFAULT_ALPHAS, 40.0, seed * 10 + r).unwrap()
            };
            let p = PimcParams::new(8.0, 16, 40, seed * 100 + r).unwrap();
            let rec = pimc_anneal(&inst, &sched, &p).unwrap();
            assert!(rec.energy >= ground - 1e-12, "{} < {ground}", rec.energy);
        }
    }
}
