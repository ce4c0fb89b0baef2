use dikernel::kernel::analytic::{catalog, AntiDiagonalBands};
use dikernel::kernel::{apply, check_row_stochastic, gamma_mixing, iterate, kernel_power, kernel_product, AnalyticKernel};
use dikernel::transform::lift;
use dikernel::{BlockKernel, GridKernel, IntervalPartition, Kernel, OpinionFunction, WeightedDeGrootModel};
use proptest::prelude::{prop_assert, proptest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn u(n: usize) -> IntervalPartition {
    IntervalPartition::uniform(n).unwrap()
}

fn example_kernel() -> BlockKernel {
    BlockKernel::new(u(3), vec![vec![0.0, 1.5, 1.5], vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]]).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_kernel(rng: &mut ChaCha8Rng, partition: &IntervalPartition) -> BlockKernel {
    let p = partition.weights();
    let values = (0..p.len())
        .map(|_| {
            let row: Vec<f64> = (0..p.len()).map(|_| rng.gen::<f64>()).collect();
            let mass: f64 = row.iter().zip(&p).map(|(w, q)| w * q).sum();
            row.iter().map(|w| w / mass).collect()
        })
        .collect();
    BlockKernel::new(partition.clone(), values).unwrap()
}

fn random_opinions(rng: &mut ChaCha8Rng, partition: &IntervalPartition) -> OpinionFunction {
    let v = (0..partition.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    OpinionFunction::new(partition.clone(), v).unwrap()
}

#[test]
fn one_step_on_three_agents() {
    let w = Kernel::from(example_kernel());
    let f = OpinionFunction::new(u(3), vec![0.5, 0.3, 0.8]).unwrap();
    let g = apply(&w, &f).unwrap();
    assert!(max_gap(g.values(), &[0.55, 0.5, 0.3]) <= 1e-12);
    let traj = iterate(&w, &f, 1).unwrap();
    assert_eq!(traj.len(), 2);
    assert_eq!(traj[0], f);
    assert_eq!(iterate(&w, &f, 0).unwrap(), vec![f]);
}

#[test]
fn weighted_lift_matches_uniform_dynamics() {
    let model = WeightedDeGrootModel::new(
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]],
        vec![1.0 / 6.0, 1.0 / 3.0, 0.5],
        None,
    )
    .unwrap();
    let v = IntervalPartition::new(vec![0.0, 1.0 / 6.0, 0.5, 1.0]).unwrap();
    let (k, _) = lift(&model, &v).unwrap();
    let f = OpinionFunction::new(v, vec![0.5, 0.3, 0.8]).unwrap();
    let traj = iterate(&Kernel::from(k), &f, 1).unwrap();
    assert!(max_gap(traj[1].values(), &[0.3, 0.55, 0.5]) <= 1e-12);
}

#[test]
fn constants_are_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..6 {
        let w = Kernel::from(random_kernel(&mut rng, &u(n)));
        let c = OpinionFunction::constant(u(n), -0.7).unwrap();
        assert!(max_gap(apply(&w, &c).unwrap().values(), c.values()) <= 1e-12);
    }
}

#[test]
fn grid_apply_agrees_with_fine_quadrature() {
    let bands = AntiDiagonalBands;
    let coarse = Kernel::from(GridKernel::sample(&bands, 256).unwrap());
    let f = OpinionFunction::sample(u(256), |x| 2.0 * x - 1.0).unwrap();
    let out = apply(&coarse, &f).unwrap();
    let n = 4096;
    for (i, x) in u(256).midpoints().into_iter().enumerate() {
        let oracle: f64 = (0..n)
            .map(|j| {
                let y = (j as f64 + 0.5) / n as f64;
                bands.eval(x, y) * (2.0 * y - 1.0)
            })
            .sum::<f64>()
            / n as f64;
        assert!((out.values()[i] - oracle).abs() <= 1e-3, "cell {i}: {} vs {oracle}", out.values()[i]);
    }
}

#[test]
fn square_equals_lift_of_matrix_square() {
    let w = example_kernel();
    let ww = kernel_product(&w, &w).unwrap();
    let want = [vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]];
    for (row, m) in ww.values().iter().zip(&want) {
        let scaled: Vec<f64> = m.iter().map(|x| 3.0 * x).collect();
        assert!(max_gap(row, &scaled) <= 1e-12);
    }
    let one = BlockKernel::constant(u(3), 1.0).unwrap();
    let wu = kernel_product(&w, &one).unwrap();
    for row in wu.values() {
        assert!(max_gap(row, &[1.0; 3]) <= 1e-12);
    }
}

#[test]
fn product_composes_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let part = IntervalPartition::from_weights(&{
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|r| r / s).collect::<Vec<_>>()
        })
        .unwrap();
        let (w, v) = (random_kernel(&mut rng, &part), random_kernel(&mut rng, &part));
        let f = random_opinions(&mut rng, &part);
        let composed = apply(&Kernel::from(kernel_product(&w, &v).unwrap()), &f).unwrap();
        let stepwise = apply(&Kernel::from(w.clone()), &apply(&Kernel::from(v), &f).unwrap()).unwrap();
        assert!(max_gap(composed.values(), stepwise.values()) <= 1e-12);
        let t = rng.gen_range(1..=10);
        let via_power = apply(&Kernel::from(kernel_power(&w, t).unwrap()), &f).unwrap();
        let via_steps = iterate(&Kernel::from(w), &f, t).unwrap();
        assert!(max_gap(via_power.values(), via_steps[t].values()) <= 1e-10);
    }
}

#[test]
fn mixing_constant() {
    assert_eq!(gamma_mixing(&Kernel::from(BlockKernel::constant(u(3), 1.0).unwrap())), 1.0);
    let w = example_kernel();
    assert_eq!(gamma_mixing(&Kernel::from(w.clone())), 0.0);
    let blended = w.blend_with_uniform(0.1).unwrap();
    assert!((gamma_mixing(&Kernel::from(blended)) - 0.1).abs() <= 1e-12);
}

#[test]
fn row_stochastic_checks() {
    let c = check_row_stochastic(&Kernel::from(example_kernel()), 1e-12);
    assert!(c.ok);
    assert_eq!(c.max_defect, 0.0);
    let scaled = vec![vec![0.0, 3.0, 3.0], vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]];
    let bad = Kernel::from(BlockKernel::new(u(3), scaled).unwrap());
    let c = check_row_stochastic(&bad, 1e-12);
    assert!(!c.ok);
    assert!((c.max_defect - 1.0).abs() <= 1e-12);
    let f = OpinionFunction::new(u(3), vec![0.5, 0.3, 0.8]).unwrap();
    assert!(apply(&bad, &f).is_err());
    let grid = Kernel::from(GridKernel::sample(catalog("bands").unwrap().as_ref(), 256).unwrap());
    assert!(check_row_stochastic(&grid, 1e-2).ok);
}

#[test]
fn kernel_json_round_trip() {
    let k = Kernel::from(example_kernel());
    let text = serde_json::to_string(&k).unwrap();
    assert!(text.contains("\"type\":\"block\""));
    let back: Kernel = serde_json::from_str(&text).unwrap();
    assert_eq!(back.density(), k.density());
}

proptest! {
    #[test]
    fn apply_is_linear_and_range_preserving(seed in 0u64..1000, a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..7);
        let w = Kernel::from(random_kernel(&mut rng, &u(n)));
        let (f, g) = (random_opinions(&mut rng, &u(n)), random_opinions(&mut rng, &u(n)));
        let mix: Vec<f64> = f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply(&w, &OpinionFunction::new(u(n), mix).unwrap()).unwrap();
        let (tf, tg) = (apply(&w, &f).unwrap(), apply(&w, &g).unwrap());
        for i in 0..n {
            prop_assert!((lhs.values()[i] - (a * tf.values()[i] + b * tg.values()[i])).abs() <= 1e-12);
            prop_assert!(tf.values()[i] >= f.as_step().min() - 1e-12 && tf.values()[i] <= f.as_step().max() + 1e-12);
        }
    }
}
