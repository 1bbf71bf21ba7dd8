mod support;

use dynseg_core::geometry::{convex_hull, min_area_rect};
use dynseg_core::maxflow::{cut_capacity, max_flow, FlowNetwork, Side};
use dynseg_core::motion::svd2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles;

fn random_network(rng: &mut ChaCha8Rng) -> FlowNetwork {
    let n = rng.random_range(1..=10);
    let mut net = FlowNetwork::new(n);
    for i in 0..n {
        net.set_terminal(i, rng.random_range(0..=9) as f64, rng.random_range(0..=9) as f64);
    }
    let m = rng.random_range(0..=n * 2);
    for _ in 0..m {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            net.add_edge(i, j, rng.random_range(0..=9) as f64, rng.random_range(0..=9) as f64);
        }
    }
    net
}

#[test]
fn max_flow_matches_exhaustive_min_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let net = random_network(&mut rng);
        let cut = max_flow(&net);
        assert_eq!(cut.flow_value, oracles::exhaustive_min_cut(&net));
        assert_eq!(cut.flow_value.fract(), 0.0);
        assert_eq!(cut_capacity(&net, &cut.side), cut.flow_value);
    }
}

#[test]
fn cut_capacity_matches_edge_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let net = random_network(&mut rng);
        let side: Vec<Side> = (0..net.node_count())
            .map(|_| if rng.random_bool(0.5) { Side::SourceSide } else { Side::SinkSide })
            .collect();
        let mut want = 0.0;
        for (i, &(s, t)) in net.terminal.iter().enumerate() {
            want += if side[i] == Side::SourceSide { t } else { s };
        }
        for e in &net.edges {
            if side[e.i] == Side::SourceSide && side[e.j] == Side::SinkSide {
                want += e.cap_ij;
            } else if side[e.j] == Side::SourceSide && side[e.i] == Side::SinkSide {
                want += e.cap_ji;
            }
        }
        assert_eq!(cut_capacity(&net, &side), want);
    }
}

#[test]
fn flow_is_permutation_invariant_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let net = random_network(&mut rng);
        let n = net.node_count();
        let base = max_flow(&net).flow_value;

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut permuted = FlowNetwork::new(n);
        for i in 0..n {
            permuted.terminal[perm[i]] = net.terminal[i];
        }
        for e in &net.edges {
            permuted.add_edge(perm[e.i], perm[e.j], e.cap_ij, e.cap_ji);
        }
        assert_eq!(max_flow(&permuted).flow_value, base);

        let mut bigger = net.clone();
        let i = rng.random_range(0..n);
        bigger.terminal[i].0 += 3.0;
        assert!(max_flow(&bigger).flow_value >= base);
    }
}

#[test]
fn larger_grid_duality_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (w, h) = (60, 40);
    let mut net = FlowNetwork::new(w * h);
    for i in 0..w * h {
        net.set_terminal(i, rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let c = rng.random_range(0.0..5.0);
                net.add_edge(i, i + 1, c, c);
            }
            if y + 1 < h {
                let c = rng.random_range(0.0..5.0);
                net.add_edge(i, i + w, c, c);
            }
        }
    }
    let cut = max_flow(&net);
    let cap = cut_capacity(&net, &cut.side);
    assert!((cap - cut.flow_value).abs() <= 1e-6 * cap);
}

#[test]
fn hull_and_rect_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.random_range(3..=50);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)])
            .collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.vertices, oracles::brute_force_hull(&pts));
        for &p in &pts {
            assert!(hull.contains(p, 1e-9));
        }
        let rect = min_area_rect(&hull).unwrap();
        let want = oracles::brute_force_min_rect_area(&hull.vertices, &pts);
        assert!((rect.area() - want).abs() <= 1e-9 * want.max(1.0));
        for &p in &pts {
            assert!(rect.contains(p, 1e-9));
        }
    }
}

#[test]
fn svd_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let n = rng.random_range(1..=200);
        let w: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let svd = svd2(&w);
        let want = oracles::jacobi_singular_values(&w);
        let scale = want[0].max(1.0);
        assert!((svd.d[0] - want[0]).abs() <= 1e-9 * scale);
        assert!((svd.d[1] - want[1]).abs() <= 1e-9 * scale);
    }
}
