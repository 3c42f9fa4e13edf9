mod common;

use std::collections::HashMap;

use avem::mesh::{self, NodeStatus, UNBOUNDED};
use avem::MeshForest;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn refined(seed: u64, cells: usize, steps: usize, bound: u32) -> MeshForest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = jittered_square(&mut rng, cells);
    for _ in 0..steps {
        let mut marks = random_marks(&mut rng, &mesh, 3);
        if rng.gen_bool(0.5) {
            marks.push(mesh.alive_elements().max().unwrap());
        }
        mesh.refine(&marks, bound).unwrap();
    }
    mesh
}

/// Smallest `min side / √area` over the triangles of four uniform
/// refinements, which visit every similarity class newest-vertex bisection
/// produces from these roots.
fn shape_constant(root: &MeshForest) -> f64 {
    let mut fine = root.clone();
    let mut c = f64::INFINITY;
    for _ in 0..4 {
        fine.refine_uniform().unwrap();
        for e in fine.alive_elements() {
            let p = fine.corner_points(e);
            for k in 0..3 {
                let d = avem::geometry::sub(p[k], p[(k + 1) % 3]);
                c = c.min(avem::geometry::norm(d) / fine.area(e).sqrt());
            }
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incremental_index_matches_recomputation(seed in any::<u64>(), bound in 0u32..=3, steps in 1usize..60) {
        let mesh = refined(seed, 2, steps, bound);
        assert_lambda_consistent(&mesh);
        prop_assert!(mesh.global_index() <= bound);
    }

    #[test]
    fn unbounded_refinement_tracks_index(seed in any::<u64>(), steps in 1usize..80) {
        let mesh = refined(seed, 1, steps, UNBOUNDED);
        assert_lambda_consistent(&mesh);
    }

    #[test]
    fn area_is_conserved(seed in any::<u64>(), bound in 1u32..=3, steps in 1usize..60) {
        let mesh = refined(seed, 3, steps, bound);
        prop_assert!((mesh.total_area() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn polygon_sizes_are_bounded(seed in any::<u64>(), bound in 1u32..=3, steps in 1usize..60) {
        let mesh = refined(seed, 2, steps, bound);
        for e in mesh.alive_elements() {
            prop_assert!(mesh.polygon(e).len() <= 3 << bound);
        }
    }

    #[test]
    fn polygon_edges_stay_shape_regular(seed in any::<u64>(), bound in 1u32..=3, steps in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let root = jittered_square(&mut rng, 2);
        let floor = shape_constant(&root) / f64::from(1u32 << bound);
        let mut mesh = root.clone();
        for _ in 0..steps {
            let marks = random_marks(&mut rng, &mesh, 3);
            mesh.refine(&marks, bound).unwrap();
        }
        for e in mesh.alive_elements() {
            let poly = mesh.polygon(e);
            let h = mesh.diameter(e);
            for i in 0..poly.len() {
                let d = avem::geometry::sub(poly[(i + 1) % poly.len()], poly[i]);
                prop_assert!(avem::geometry::norm(d) >= floor * h * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn chains_are_short_and_descend(seed in any::<u64>(), bound in 1u32..=3, steps in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = jittered_square(&mut rng, 2);
        for _ in 0..steps {
            let e = mesh.alive_elements().max().unwrap();
            let chain = mesh.chain(e, bound).unwrap();
            let level = mesh.element(e).level;
            prop_assert!(chain.len() <= level as usize + 2);
            let levels: Vec<u32> = chain.iter().map(|l| mesh.element(l.element).level).collect();
            prop_assert!(levels.windows(2).all(|w| w[1] <= w[0]));
            let report = mesh.create_admissible_chain(e, bound).unwrap();
            prop_assert!(report.max_new_level <= level + 1);
            prop_assert!(mesh.is_admissible(bound));
            let extra = random_marks(&mut rng, &mesh, 1);
            mesh.refine(&extra, bound).unwrap();
        }
    }

    /// Promoting a midpoint to a proper node lowers the index of every
    /// hanging node inside its edge.
    #[test]
    fn promotion_lowers_inner_indices(seed in any::<u64>(), steps in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = jittered_square(&mut rng, 1);
        for _ in 0..steps {
            let alive: Vec<_> = mesh.alive_elements().collect();
            let e = if rng.gen_bool(0.5) { *alive.last().unwrap() } else { alive[rng.gen_range(0..alive.len())] };
            let before: Vec<(NodeStatus, u32)> = mesh.nodes().iter().map(|n| (n.status, n.lambda)).collect();
            mesh.bisect(e).unwrap();
            for (m, &(status, _)) in before.iter().enumerate() {
                if status != NodeStatus::Hanging || mesh.node(m).status != NodeStatus::Proper {
                    continue;
                }
                let [a, b] = mesh.node(m).parents.unwrap();
                for (x, &(old_status, old_lambda)) in before.iter().enumerate() {
                    if old_status == NodeStatus::Hanging
                        && mesh.node(x).status == NodeStatus::Hanging
                        && mesh.node_strictly_inside(x, a, b)
                    {
                        prop_assert!(mesh.node(x).lambda < old_lambda, "node {x} inside promoted {m}");
                    }
                }
            }
        }
    }

    #[test]
    fn overlay_refines_both_and_lowers_indices(seed in any::<u64>(), bound in 1u32..=3, steps in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let root = jittered_square(&mut rng, 2);
        let mut runs = [root.clone(), root.clone()];
        for m in &mut runs {
            for _ in 0..steps {
                let marks = random_marks(&mut rng, m, 3);
                m.refine(&marks, bound).unwrap();
            }
        }
        let union = mesh::overlay(&runs[0], &runs[1]).unwrap();
        assert_lambda_consistent(&union);
        prop_assert!(union.is_admissible(bound));
        prop_assert!(union.num_alive() >= runs[0].num_alive().max(runs[1].num_alive()));
        prop_assert!((union.total_area() - 1.0).abs() <= 1e-12);
        let index_at = |m: &MeshForest| -> HashMap<[i64; 2], u32> {
            m.nodes().iter().map(|n| (m.lattice_point(n.id), n.lambda)).collect()
        };
        let (la, lb) = (index_at(&runs[0]), index_at(&runs[1]));
        for n in union.nodes() {
            let p = union.lattice_point(n.id);
            prop_assert!(la.contains_key(&p) || lb.contains_key(&p));
            for l in [la.get(&p), lb.get(&p)].into_iter().flatten() {
                prop_assert!(n.lambda <= *l, "node at {:?}", n.xy);
            }
        }
        // Every element of either run is tiled by overlay elements.
        for m in &runs {
            for e in m.alive_elements() {
                let covered: f64 = union
                    .alive_elements()
                    .filter(|&u| contains(m, e, avem::geometry::centroid(union.corner_points(u))))
                    .map(|u| union.area(u))
                    .sum();
                prop_assert!((covered - m.area(e)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>(), bound in 1u32..=3, steps in 0usize..30) {
        let mesh = refined(seed, 2, steps, bound);
        let text = mesh::write_mesh(&mesh);
        let back = mesh::parse_mesh(&text).unwrap();
        prop_assert_eq!(back.nodes(), mesh.nodes());
        prop_assert_eq!(back.elements(), mesh.elements());
        prop_assert_eq!(mesh::write_mesh(&back), text);
    }
}

#[test]
fn marked_elements_are_gone_after_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mesh = jittered_square(&mut rng, 2);
    for _ in 0..50 {
        let marks = random_marks(&mut rng, &mesh, 4);
        mesh.refine(&marks, 2).unwrap();
        assert!(marks.iter().all(|&e| !mesh.is_alive(e)));
    }
}

#[test]
fn lshape_statistics() {
    let spec = avem::problems::lshape(0.125).unwrap();
    let boundary = spec.mesh.nodes().iter().filter(|n| n.on_boundary).count();
    assert_eq!((spec.mesh.num_nodes(), spec.mesh.num_alive(), boundary), (225, 384, 64));
}
