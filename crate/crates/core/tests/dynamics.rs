use dikernel::dynamics::*;
use dikernel::kernel::{apply, gamma_mixing};
use dikernel::metrics::{bound_discounted, cut_norm_exact, SignedBlockKernel};
use dikernel::transform::discretize_block;
use dikernel::{BlockKernel, IntervalPartition, Kernel, OpinionFunction, StepFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(n: usize) -> IntervalPartition {
    IntervalPartition::uniform(n).unwrap()
}

fn example1() -> BlockKernel {
    BlockKernel::new(uniform(3), vec![vec![0.0, 1.5, 1.5], vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]]).unwrap()
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize) -> BlockKernel {
    let values = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mean = row.iter().sum::<f64>() / n as f64;
            row.iter().map(|v| v / mean).collect()
        })
        .collect();
    BlockKernel::new(uniform(n), values).unwrap()
}

/// Left Perron vector of a stochastic matrix through its null space, by Gaussian elimination.
fn left_perron(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    // rows of (Mᵀ − I) with the last equation replaced by Σπ = 1
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[j][i] - if i == j { 1.0 } else { 0.0 }).chain([0.0]).collect())
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for c in 0..n {
        let pivot = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, pivot);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[test]
fn example1_density_matches_eigenvector_oracle() {
    let w_hat = vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    let pi = left_perron(&w_hat);
    let expected: Vec<f64> = pi.iter().map(|v| v * 3.0).collect();
    for (a, b) in expected.iter().zip([1.2, 1.2, 0.6]) {
        assert!((a - b).abs() < 1e-14);
    }
    let s = stationary_density(&example1().into(), 1e-13, 100_000).unwrap();
    assert!(s.converged);
    for (a, b) in s.density.values().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn example1_dynamics_reach_consensus() {
    // cycles of length 2 and 3 make the chain aperiodic
    let f0 = OpinionFunction::new(uniform(3), vec![0.5, 0.3, 0.8]).unwrap();
    let r = consensus(&example1().into(), &f0, 1e-12, 100_000).unwrap();
    assert!(r.converged);
    assert!(!r.certified);
    assert!((r.value - (0.4 * 0.5 + 0.4 * 0.3 + 0.2 * 0.8)).abs() < 1e-10);
}

#[test]
fn unitype_linear_density_consensus() {
    let n = 256;
    let h = StepFunction::sample(uniform(n), |y| 2.0 * y);
    let k: Kernel = BlockKernel::unitype(&h).unwrap().into();
    let f0 = OpinionFunction::sample(uniform(n), |x| x).unwrap();
    let r = consensus(&k, &f0, 1e-12, 100).unwrap();
    assert!((r.value - 2.0 / 3.0).abs() < 1e-3);
    assert!(r.sup_distances[1] < 1e-12);
}

#[test]
fn random_blends_contract_at_the_doeblin_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let n = rng.gen_range(2..10);
        let gamma = rng.gen_range(0.1..0.9);
        let k: Kernel = random_kernel(&mut rng, n).blend_with_uniform(gamma).unwrap().into();
        let g = gamma_mixing(&k);
        assert!(g >= gamma - 1e-12);
        let p = k.partition().weights();
        let mut h = vec![1.0; n];
        h[0] += 1.0;
        let total: f64 = h.iter().zip(&p).map(|(a, b)| a * b).sum();
        h.iter_mut().for_each(|v| *v /= total);
        let mut prev = f64::INFINITY;
        for _ in 0..30 {
            let next = adjoint_step(&k, &h);
            let res: f64 = next.iter().zip(&h).zip(&p).map(|((a, b), w)| w * (a - b).abs()).sum();
            if prev.is_finite() && prev > 1e-13 {
                assert!(res / prev <= 1.0 - g + 1e-6);
            }
            prev = res;
            h = next;
        }
    }
}

#[test]
fn fixed_point_residual_and_start_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10 {
        let n = 7;
        let k: Kernel = random_kernel(&mut rng, n).blend_with_uniform(0.2).unwrap().into();
        let s = stationary_density(&k, 1e-12, 10_000).unwrap();
        assert!(s.converged && s.residual <= 1e-12);
        assert!((s.density.integral() - 1.0).abs() < 1e-10);
        assert!(s.density.min() >= 0.0);
        let next = adjoint_step(&k, s.density.values());
        let change: f64 = next.iter().zip(s.density.values()).map(|(a, b)| (a - b).abs() / n as f64).sum();
        assert!(change <= 1e-11);
        let start = StepFunction::new(uniform(n), (0..n).map(|_| rng.gen_range(0.1..3.0)).collect()).unwrap();
        let other = stationary_density_from(&k, &start, 1e-12, 10_000).unwrap();
        let f0 = OpinionFunction::new(uniform(n), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let a = s.density.inner(f0.as_step());
        let b = other.density.inner(f0.as_step());
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn consensus_tail_of_discounted_utility() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let n = 5;
    let k: Kernel = random_kernel(&mut rng, n).blend_with_uniform(0.3).unwrap().into();
    let f0 = OpinionFunction::new(uniform(n), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let r = consensus(&k, &f0, 1e-15, 10_000).unwrap();
    let psi = StepFunction::constant(uniform(n), 1.0);
    // once at consensus the utility is the constant tail; start there
    let at_consensus = OpinionFunction::constant(uniform(n), r.value).unwrap();
    for delta in [0.5, 0.9] {
        let v = discounted_utility(&k, &at_consensus, &psi, 1.0, delta, 1e-12).unwrap();
        assert!((v - delta * r.value).abs() < 1e-12);
        // direct truncated sum as oracle
        let mut f = f0.clone();
        let mut oracle = 0.0;
        for t in 1..2000 {
            f = apply(&k, &f).unwrap();
            oracle += (1.0 - delta) * delta.powi(t) * f.as_step().inner(&psi);
        }
        let v = discounted_utility(&k, &f0, &psi, 1.0, delta, 1e-12).unwrap();
        assert!((v - oracle).abs() < 1e-11);
    }
}

#[test]
fn discounted_utility_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..20 {
        let n = 6;
        let k: Kernel = random_kernel(&mut rng, n).into();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..0.5)).collect();
        let f: Vec<f64> = g.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let psi = StepFunction::new(uniform(n), (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        let psi = psi.map(|v| v / psi.integral());
        let vf = discounted_utility(&k, &OpinionFunction::new(uniform(n), f).unwrap(), &psi, 1.0, 0.8, 1e-12).unwrap();
        let vg = discounted_utility(&k, &OpinionFunction::new(uniform(n), g).unwrap(), &psi, 1.0, 0.8, 1e-12).unwrap();
        assert!(vf >= vg - 1e-13);
    }
}

#[test]
fn two_kernel_discounted_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..20 {
        let n = 8;
        let w = random_kernel(&mut rng, n);
        let v = discretize_block(&w, &uniform(2)).refine_to(&uniform(n)).unwrap();
        let cut = cut_norm_exact(&SignedBlockKernel::difference(&w, &v)).unwrap().value;
        let f0 = OpinionFunction::new(uniform(n), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let psi = StepFunction::constant(uniform(n), 1.0);
        let delta = rng.gen_range(0.1..0.95);
        let a = discounted_utility(&w.clone().into(), &f0, &psi, 1.0, delta, 1e-13).unwrap();
        let b = discounted_utility(&v.into(), &f0, &psi, 1.0, delta, 1e-13).unwrap();
        assert!((a - b).abs() <= (1.0 - delta) * bound_discounted(1.0, delta, cut).unwrap() + 1e-12);
    }
}
