mod common;

use std::sync::Arc;

use avem::data::{self, Norm, ProblemData};
use avem::estimator::{self, EstimatorField};
use avem::geometry::Affine;
use avem::solver::{self, SolverConfig};
use avem::sparse::CsrMatrix;
use avem::vem::{self, ElementData, LocalProjection, PiecewiseConstantData};
use avem::{ElemId, MeshForest};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mesh(rng: &mut ChaCha8Rng, min_elements: usize) -> MeshForest {
    let (cells, bound) = (rng.gen_range(1..=2), rng.gen_range(1..=3));
    let mut mesh = jittered_square(rng, cells);
    refine_randomly(rng, &mut mesh, min_elements, bound);
    mesh
}

/// Cholesky factorization of a dense matrix; `None` unless positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (points, slots) = random_polygon(&mut rng);
        let values: Vec<f64> = points.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = vem::local_pinabla(&points, slots, &values).unwrap();
        let trace: Vec<f64> = points.iter().map(|&x| p.eval(x)).collect();
        let q = vem::local_pinabla(&points, slots, &trace).unwrap();
        prop_assert!((p.constant - q.constant).abs() < 1e-12);
        prop_assert!((p.gradient[0] - q.gradient[0]).abs() < 1e-12);
        prop_assert!((p.gradient[1] - q.gradient[1]).abs() < 1e-12);
    }

    /// The projection keeps the boundary mean of the nodal values.
    #[test]
    fn projection_preserves_boundary_mean(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (points, slots) = random_polygon(&mut rng);
        let values: Vec<f64> = points.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = vem::local_pinabla(&points, slots, &values).unwrap();
        let n = points.len();
        let (mut defect, mut perimeter) = (0.0, 0.0);
        for i in 0..n {
            let j = (i + 1) % n;
            let len = avem::geometry::norm(avem::geometry::sub(points[j], points[i]));
            defect += 0.5 * len * (values[i] + values[j] - p.eval(points[i]) - p.eval(points[j]));
            perimeter += len;
        }
        prop_assert!(defect.abs() < 1e-12 * perimeter);
    }

    #[test]
    fn stabilization_vanishes_exactly_on_corner_interpolants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (points, slots) = random_polygon(&mut rng);
        let proj = LocalProjection::new(points.clone(), slots).unwrap();
        let s = proj.stabilization();
        let n = points.len();
        let form = |v: &[f64]| -> f64 { (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| v[i] * s[i * n + j] * v[j]).sum() };
        let affine = Affine::new(rng.gen_range(-1.0..1.0), [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let mut v: Vec<f64> = points.iter().map(|&x| affine.eval(x)).collect();
        prop_assert!(form(&v).abs() < 1e-12);
        let free: Vec<usize> = (0..n).filter(|i| !slots.contains(i)).collect();
        if let Some(&k) = free.first() {
            v[k] += 0.5;
            prop_assert!(form(&v) >= 0.25 - 1e-12);
        }
        let random: Vec<f64> = points.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        prop_assert!(form(&random) >= -1e-14);
    }

    #[test]
    fn assembled_matrix_is_symmetric_and_positive_definite(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng, 30);
        let data = PiecewiseConstantData::from_fn(&mesh, |_| {
            Ok(ElementData { a: random_spd(&mut rng), c: rng.gen_range(0.0..2.0), f: 0.0 })
        })
        .unwrap();
        let system = vem::assemble(&mesh, &data, rng.gen_range(0.1..5.0), &|_| 0.0).unwrap();
        let dense = system.matrix.to_dense();
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                prop_assert_eq!(dense[i][j].to_bits(), dense[j][i].to_bits());
            }
        }
        prop_assert!(cholesky(&dense).is_some());
    }

    #[test]
    fn dorfler_marks_a_minimal_set(values in prop::collection::vec(0.0f64..1.0, 1..13), theta in 0.05f64..0.95) {
        let field: Vec<(ElemId, f64)> = values.iter().enumerate().map(|(i, &v)| (3 * i + 1, v * v)).collect();
        let marked = estimator::dorfler_mark(&EstimatorField::from_values(field.clone()), theta).unwrap();
        let brute = brute_force_dorfler(&field, theta);
        prop_assert_eq!(marked.len(), brute.len());
        let sum: f64 = field.iter().filter(|v| marked.contains(&v.0)).map(|v| v.1).sum();
        let total: f64 = field.iter().map(|v| v.1).sum();
        prop_assert!(sum >= theta * total * (1.0 - 1e-12));
    }

    #[test]
    fn greedy_meets_its_threshold(delta in 0.02f64..0.5, t in 0.0f64..=1.0, l2 in any::<bool>()) {
        let mut mesh = avem::problems::lshape(0.5).unwrap().mesh;
        let norm = if l2 { Norm::L2 } else { Norm::Max };
        let g = |x: [f64; 2]| (3.0 * x[0]).sin() + x[1] * x[1];
        let out = data::greedy(&mut mesh, &g, delta, t, norm, 2, 100).unwrap();
        prop_assert!(out.max_local <= delta);
        prop_assert!(mesh.is_admissible(2));
    }

    #[test]
    fn pseudo_greedy_meets_its_threshold(delta in 0.01f64..1.0, theta in 0.3f64..0.95) {
        let mut mesh = avem::problems::lshape(0.5).unwrap().mesh;
        let out = data::p_greedy(&mut mesh, &avem::problems::lshape_load, delta, theta, 3, 200).unwrap();
        prop_assert!(out.zeta <= delta);
    }
}

#[test]
fn affine_solutions_are_reproduced_on_hanging_node_meshes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let mesh = random_mesh(&mut rng, 80);
        let a = random_spd(&mut rng);
        let data = PiecewiseConstantData::uniform(&mesh, ElementData { a, c: 0.0, f: 0.0 }).unwrap();
        let u = |x: [f64; 2]| 1.0 + 2.0 * x[0] - x[1];
        let system = vem::assemble(&mesh, &data, 1.0, &u).unwrap();
        let cfg = SolverConfig { tolerance: 1e-14, ..Default::default() };
        let (x, _) = solver::solve_spd(&system.matrix, &system.rhs, None, &cfg).unwrap();
        for (n, v) in system.expand(&x).into_iter().enumerate() {
            assert!((v - u(mesh.node(n).xy)).abs() < 1e-10, "node {n}");
        }
        let field = estimator::estimate(&mesh, &data, &system.expand(&x)).unwrap();
        assert!(field.total < 1e-18);
    }
}

#[test]
fn conjugate_gradients_match_dense_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let n = 50;
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let exact = cholesky_solve(&cholesky(&a).unwrap(), &rhs);
    let cfg = SolverConfig { tolerance: 1e-13, ..Default::default() };
    let (x, stats) = solver::solve_spd(&CsrMatrix::from_dense(&a), &rhs, None, &cfg).unwrap();
    assert!(stats.iterations > 0);
    for i in 0..n {
        assert!((x[i] - exact[i]).abs() < 1e-8);
    }
}

#[test]
fn estimator_total_is_the_sum_of_local_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mesh = random_mesh(&mut rng, 60);
    let data = PiecewiseConstantData::uniform(&mesh, ElementData::isotropic(1.0, 1.0, 1.0)).unwrap();
    let u: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let field = estimator::estimate(&mesh, &data, &u).unwrap();
    let sum: f64 = field.local.iter().map(|l| l.eta2).sum();
    assert_eq!(sum, field.total);
    assert_eq!(field.len(), mesh.num_alive());
}

#[test]
fn data_loop_meets_its_tolerance() {
    let spec = avem::problems::lshape(0.25).unwrap();
    for eps in [2.0, 0.5] {
        let mut mesh = spec.mesh.clone();
        let out = data::data_loop(&mut mesh, &spec.data, eps, 0.75f64.sqrt(), 10, 100).unwrap();
        let last = out.history.last().unwrap();
        assert!(last.total() <= eps);
        let check = data::estimate_data(&mesh, &spec.data, &out.averages).unwrap();
        assert!(check.total() <= eps);
    }
}

#[test]
fn constant_data_needs_no_refinement() {
    let mut mesh = avem::problems::lshape(0.5).unwrap().mesh;
    let problem = ProblemData::constant(2.0, 1.0, 3.0, Arc::new(|_| 0.0));
    let out = data::data_loop(&mut mesh, &problem, 1e-6, 0.5, 10, 5).unwrap();
    assert_eq!(out.refinements, 0);
}
