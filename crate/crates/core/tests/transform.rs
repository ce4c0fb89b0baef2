use dikernel::kernel::analytic::AntiDiagonalBands;
use dikernel::kernel::{iterate, GridKernel};
use dikernel::transform::{
    block_to_model, discretize_analytic, discretize_block, discretize_kernel, lift, lift_opinions, project_opinions,
    reduce_dimension, Grouping,
};
use dikernel::{BlockKernel, IntervalPartition, Kernel, OpinionFunction, WeightedDeGrootModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THIRD: f64 = 1.0 / 3.0;

fn u(n: usize) -> IntervalPartition {
    IntervalPartition::uniform(n).unwrap()
}

fn uneven() -> IntervalPartition {
    IntervalPartition::new(vec![0.0, 1.0 / 6.0, 0.5, 1.0]).unwrap()
}

fn assert_matrix(got: &[Vec<f64>], want: &[Vec<f64>], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        for (a, b) in g.iter().zip(w) {
            assert!((a - b).abs() <= tol, "{got:?} vs {want:?}");
        }
    }
}

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() }).collect();
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                (0..n).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect()
            } else {
                row.iter().map(|x| x / s).collect()
            }
        })
        .collect()
}

#[test]
fn lift_scales_by_cell_length() {
    let m = WeightedDeGrootModel::uniform(vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], None).unwrap();
    let (k, _) = lift(&m, &u(3)).unwrap();
    assert_matrix(k.values(), &[vec![0.0, 1.5, 1.5], vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]], 1e-12);

    let one = WeightedDeGrootModel::uniform(vec![vec![1.0]], None).unwrap();
    assert_matrix(lift(&one, &u(1)).unwrap().0.values(), &[vec![1.0]], 0.0);

    let w = WeightedDeGrootModel::new(
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]],
        vec![1.0 / 6.0, THIRD, 0.5],
        None,
    )
    .unwrap();
    assert_matrix(lift(&w, &uneven()).unwrap().0.values(), &[vec![0.0, 3.0, 0.0], vec![0.0, 1.5, 1.0], vec![6.0, 0.0, 0.0]], 1e-12);
}

#[test]
fn lift_rejects_mismatched_partitions() {
    let m = WeightedDeGrootModel::uniform(vec![vec![0.5, 0.5], vec![0.5, 0.5]], None).unwrap();
    assert!(lift(&m, &u(3)).is_err());
    assert!(lift(&m, &IntervalPartition::new(vec![0.0, 0.4, 1.0]).unwrap()).is_err());
}

#[test]
fn banded_kernel_discretizations() {
    let bands = AntiDiagonalBands;
    assert_matrix(discretize_analytic(&bands, &u(2)).values(), &[vec![0.5, 1.5], vec![1.5, 0.5]], 1e-12);
    assert_matrix(
        discretize_analytic(&bands, &u(4)).values(),
        &[vec![1.0, 0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0, 1.0], vec![1.0, 2.0, 1.0, 0.0], vec![2.0, 1.0, 0.0, 1.0]],
        1e-12,
    );
    let v = IntervalPartition::new(vec![0.0, 0.25, 0.75, 1.0]).unwrap();
    assert_matrix(
        discretize_analytic(&bands, &v).values(),
        &[vec![1.0, 0.5, 2.0], vec![0.5, 1.5, 0.5], vec![2.0, 0.5, 1.0]],
        1e-12,
    );
}

#[test]
fn grid_discretization_snaps_and_averages() {
    let grid = Kernel::from(GridKernel::sample(&AntiDiagonalBands, 64).unwrap());
    let d = discretize_kernel(&grid, &u(4)).unwrap();
    assert!(!d.snapped);
    assert_matrix(
        d.kernel.values(),
        &[vec![1.0, 0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0, 1.0], vec![1.0, 2.0, 1.0, 0.0], vec![2.0, 1.0, 0.0, 1.0]],
        1e-12,
    );
    let off = IntervalPartition::new(vec![0.0, 0.3, 1.0]).unwrap();
    assert!(discretize_kernel(&grid, &off).unwrap().snapped);
}

#[test]
fn block_kernels_discretize_to_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..6 {
        let m = WeightedDeGrootModel::uniform(random_stochastic(&mut rng, n), None).unwrap();
        let (k, _) = lift(&m, &u(n)).unwrap();
        assert_matrix(discretize_block(&k, &u(n)).values(), k.values(), 1e-12);
        let fine = u(n).common_refinement(&u(7));
        let refined = discretize_block(&k, &fine);
        assert_matrix(refined.values(), k.refine_to(&fine).unwrap().values(), 1e-12);
    }
}

#[test]
fn block_to_model_multiplies_by_weights() {
    let k = BlockKernel::new(uneven(), vec![vec![0.0, 3.0, 0.0], vec![0.0, 1.5, 1.0], vec![6.0, 0.0, 0.0]]).unwrap();
    let m = block_to_model(&k);
    assert_matrix(&m.matrix, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]], 1e-12);
    assert_matrix(&[m.weights], &[vec![1.0 / 6.0, THIRD, 0.5]], 1e-12);

    let m2 = block_to_model(&discretize_analytic(&AntiDiagonalBands, &u(2)));
    assert_matrix(&m2.matrix, &[vec![0.25, 0.75], vec![0.75, 0.25]], 1e-12);

    let v = IntervalPartition::new(vec![0.0, 0.25, 0.75, 1.0]).unwrap();
    let m3 = block_to_model(&discretize_analytic(&AntiDiagonalBands, &v));
    assert_matrix(&m3.matrix, &[vec![0.25, 0.25, 0.5], vec![0.125, 0.75, 0.125], vec![0.5, 0.25, 0.25]], 1e-12);
}

#[test]
fn six_agents_reduce_to_three() {
    let m = WeightedDeGrootModel::uniform(
        vec![
            vec![0.0, 0.5, 0.5, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, THIRD, THIRD, THIRD],
            vec![0.0, 0.25, 0.25, 0.0, 0.25, 0.25],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.25, 0.25, 0.25, 0.25, 0.0],
        ],
        None,
    )
    .unwrap();
    let g = Grouping { groups: vec![vec![0], vec![1, 2], vec![3, 4, 5]] };
    let r = reduce_dimension(&m, &g).unwrap();
    assert_matrix(&r.matrix, &[vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, THIRD, 2.0 * THIRD]], 1e-12);
    assert_matrix(&[r.weights], &[vec![1.0 / 6.0, THIRD, 0.5]], 1e-12);

    let singletons = Grouping { groups: (0..6).map(|i| vec![i]).collect() };
    let same = reduce_dimension(&m, &singletons).unwrap();
    assert_matrix(&same.matrix, &m.matrix, 1e-12);

    let broken = Grouping { groups: vec![vec![0, 2], vec![1], vec![3, 4, 5]] };
    assert!(reduce_dimension(&m, &broken).is_err());
}

#[test]
fn reduction_matches_group_average_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(0.2..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let m = WeightedDeGrootModel::new(random_stochastic(&mut rng, 8), p.clone(), None).unwrap();
        let groups: Vec<Vec<usize>> = (0..4).map(|g| vec![2 * g, 2 * g + 1]).collect();
        let r = reduce_dimension(&m, &Grouping { groups: groups.clone() }).unwrap();
        for (a, ga) in groups.iter().enumerate() {
            let mass_a: f64 = ga.iter().map(|&i| p[i]).sum();
            assert!((r.weights[a] - mass_a).abs() <= 1e-12);
            for (b, gb) in groups.iter().enumerate() {
                let flow: f64 = ga.iter().map(|&i| p[i] * gb.iter().map(|&j| m.matrix[i][j]).sum::<f64>()).sum();
                assert!((r.matrix[a][b] - flow / mass_a).abs() <= 1e-12);
            }
        }
        let total: f64 = r.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        for row in &r.matrix {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn opinions_round_trip() {
    let f = lift_opinions(&[0.5, 0.3, 0.8], &u(3)).unwrap();
    assert_eq!(f.values(), &[0.5, 0.3, 0.8]);
    assert_eq!(project_opinions(&f, &u(3)), vec![0.5, 0.3, 0.8]);
    assert!(lift_opinions(&[0.5, 0.3], &u(3)).is_err());
    let x = OpinionFunction::sample(u(64), |x| x).unwrap();
    let halves = project_opinions(&x, &u(2));
    assert!((halves[0] - 0.25).abs() <= 1e-12 && (halves[1] - 0.75).abs() <= 1e-12);
}

#[test]
fn lifted_dynamics_track_discrete_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let f0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let m = WeightedDeGrootModel::new(random_stochastic(&mut rng, n), p.clone(), Some(f0.clone())).unwrap();
        let partition = m.natural_partition().unwrap();
        let (k, f) = lift(&m, &partition).unwrap();
        assert_matrix(&block_to_model(&k).matrix, &m.matrix, 1e-12);
        let traj = iterate(&Kernel::from(k), &f.unwrap(), 20).unwrap();
        let mut discrete = f0;
        for ft in traj.iter().skip(1) {
            discrete = m.matrix.iter().map(|r| r.iter().zip(&discrete).map(|(w, x)| w * x).sum()).collect();
            assert_matrix(&[project_opinions(ft, &partition)], &[discrete.clone()], 1e-10);
            let avg: f64 = p.iter().zip(&discrete).map(|(a, b)| a * b).sum();
            assert!((ft.integral() - avg).abs() <= 1e-12);
        }
    }
}

#[test]
fn model_json_shape() {
    let m: WeightedDeGrootModel =
        serde_json::from_str(r#"{"matrix":[[0.5,0.5],[1,0]],"weights":[0.25,0.75],"opinions":[0.1,-0.2]}"#).unwrap();
    assert!(m.validate().is_ok());
    let g: Grouping = serde_json::from_str(r#"{"groups":[[0],[1]]}"#).unwrap();
    assert_eq!(g.groups.len(), 2);
}
