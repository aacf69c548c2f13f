//! Neighbor search and lazy A* against brute-force references.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use mspp_core::neighbors::{all_neighbor_pairs, are_neighbors, brute_force_pairs, find_neighbors};
use mspp_core::reduced::{Backing, UpdateContext, VisitedIndex, WindowParams};
use mspp_core::search::{astar_lazy, AstarWorkspace, CostModel};
use mspp_core::{GridWorld, NodeIndex, OccupancyTree, ReducedTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_world(rng: &mut ChaCha8Rng, dim: usize, depth: u32) -> GridWorld {
    let density = rng.gen_range(0.0..0.5);
    let n = GridWorld::cell_count_for(dim, depth).unwrap();
    GridWorld::new(dim, depth, (0..n).map(|_| rng.gen_bool(density)).collect()).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, depth: u32) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0..1u32 << depth) as f64 + 0.5).collect()
}

/// A reduced tree refined around a random unit cell of a random map.
fn random_reduced(rng: &mut ChaCha8Rng, dim: usize, depth: u32) -> (OccupancyTree, ReducedTree) {
    let world = random_world(rng, dim, depth);
    let tree = if rng.gen_bool(0.5) {
        OccupancyTree::build_from_grid(&world)
    } else {
        OccupancyTree::build_full(&world)
    };
    let current = NodeIndex::from_center(depth, 0, &random_point(rng, dim, depth)).unwrap();
    let visited = VisitedIndex::new(depth);
    let mut reduced = ReducedTree::for_map(&tree);
    let ctx = UpdateContext {
        backing: Backing::Map(&tree),
        current,
        visited: &visited,
        eps: rng.gen_range(0.05..0.95),
        window: WindowParams::new(rng.gen_range(0.25..3.0)).unwrap(),
    };
    reduced.update(&ctx);
    (tree, reduced)
}

/// Face sharing from closed intervals: all axes overlap and exactly one
/// overlap is a single point.
fn shares_face(a: &NodeIndex, b: &NodeIndex) -> bool {
    let (ha, hb) = (a.hypercube(), b.hypercube());
    let (la, ua, lb, ub) = (ha.low2(), ha.high2(), hb.low2(), hb.high2());
    let mut touching = 0;
    for j in 0..a.dim() {
        let lo = la[j].max(lb[j]);
        let hi = ua[j].min(ub[j]);
        if lo > hi {
            return false;
        }
        if lo == hi {
            touching += 1;
        }
    }
    touching == 1
}

#[test]
fn fast_pairs_equal_brute_force_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..60 {
        let dim = 2 + round % 3;
        let depth = rng.gen_range(1..=if dim == 4 { 4 } else { 5 });
        let (_, reduced) = random_reduced(&mut rng, dim, depth);
        assert_eq!(
            all_neighbor_pairs(&reduced),
            brute_force_pairs(&reduced),
            "round {round}"
        );
    }
}

#[test]
fn adjacency_matches_interval_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut adjacent = 0;
    for _ in 0..20_000 {
        let dim = rng.gen_range(1..=4);
        let depth = 4;
        let pick = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(0..=depth);
            let p2: Vec<i32> = (0..dim)
                .map(|_| (2 * rng.gen_range(0..1 << (depth - k)) + 1) << k)
                .collect();
            NodeIndex::new(depth, k, &p2).unwrap()
        };
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        let expect = shares_face(&a, &b);
        adjacent += usize::from(expect);
        assert_eq!(are_neighbors(&a, &b), expect, "{a:?} {b:?}");
        assert_eq!(are_neighbors(&b, &a), expect);
    }
    assert!(adjacent > 100);
}

#[test]
fn find_neighbors_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (_, reduced) = random_reduced(&mut rng, 3, 4);
        for id in reduced.vertex_ids() {
            for n in find_neighbors(&reduced, id).unwrap() {
                assert!(find_neighbors(&reduced, n).unwrap().contains(&id));
            }
        }
    }
}

/// Dijkstra over the fully materialized leaf graph.
fn dijkstra(reduced: &ReducedTree, tree: &OccupancyTree, start: NodeIndex, goal: NodeIndex, w: f64) -> Option<f64> {
    let verts = reduced.vertices();
    let pos = |n: &NodeIndex| verts.binary_search(n).unwrap();
    let mut adj = vec![Vec::new(); verts.len()];
    for (a, b) in brute_force_pairs(reduced).iter() {
        adj[pos(a)].push(pos(b));
        adj[pos(b)].push(pos(a));
    }
    let mut dist = vec![f64::INFINITY; verts.len()];
    let s = pos(&start);
    dist[s] = 0.0;
    // Non-negative floats order like their bit patterns.
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d_bits, u))) = heap.pop() {
        let d = f64::from_bits(d_bits);
        if d > dist[u] {
            continue;
        }
        for &v in &adj[u] {
            let cost = verts[u].distance(&verts[v]) * (1.0 + w * tree.value(&verts[v]).unwrap());
            if d + cost < dist[v] {
                dist[v] = d + cost;
                heap.push(Reverse(((d + cost).to_bits(), v)));
            }
        }
    }
    let g = dist[pos(&goal)];
    g.is_finite().then_some(g)
}

#[test]
fn lazy_astar_matches_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ws = AstarWorkspace::new();
    let mut compared = 0;
    for _ in 0..80 {
        let depth = rng.gen_range(2..=5);
        let (tree, reduced) = random_reduced(&mut rng, 2, depth);
        let ids = reduced.vertex_ids();
        if ids.len() < 2 {
            continue;
        }
        let start = ids[rng.gen_range(0..ids.len())];
        let goal = ids[rng.gen_range(0..ids.len())];
        let w = [0.0, 1.0, 4.0][rng.gen_range(0..3)];
        let cost = CostModel::new(w).unwrap();
        let res = astar_lazy(
            &reduced,
            start,
            goal,
            &cost,
            &mut ws,
            |_| false,
            |id, out| {
                out.extend(find_neighbors(&reduced, id)?);
                Ok(())
            },
            |id| reduced.value(id),
        )
        .unwrap();
        let expect = dijkstra(&reduced, &tree, reduced.index(start), reduced.index(goal), w);
        match (res.path, expect) {
            (Some(path), Some(d)) => {
                assert!((res.cost - d).abs() <= 1e-9 * d.max(1.0), "{} vs {d}", res.cost);
                assert!(path
                    .windows(2)
                    .all(|p| are_neighbors(&reduced.index(p[0]), &reduced.index(p[1]))));
                compared += 1;
            }
            (None, None) => {}
            (got, want) => panic!("A* {got:?} vs Dijkstra {want:?}"),
        }
        assert!(res.stats.is_lazy());
        assert!(res.stats.touched <= ids.len());
    }
    assert!(compared > 30);
}
