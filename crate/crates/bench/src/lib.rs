//! Deterministic inputs for the stage benchmarks under `benches/`.

use dynseg_core::evaluation::{random_scene_spec, RandomSceneOptions, Scene};
use dynseg_core::maxflow::FlowNetwork;
use dynseg_core::{generate_scene, Aabb, ImageRgb};

/// Cheap deterministic value in `[0, 1)` for index `i`.
fn hash01(i: u64) -> f64 {
    let mut z = i.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 31)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// `n` motion rows: 80% camera motion, 20% a second motion, both jittered.
pub fn motion_rows(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let base = if i % 5 == 0 { [-4.0, 18.0] } else { [6.0, 2.0] };
            let j = i as u64 * 2;
            [base[0] + hash01(j) - 0.5, base[1] + hash01(j + 1) - 0.5]
        })
        .collect()
}

/// 4-connected `w x h` grid with random terminal and edge capacities.
pub fn grid_network(w: usize, h: usize) -> FlowNetwork {
    let mut net = FlowNetwork::new(w * h);
    let mut k = 0u64;
    let mut next = || {
        k += 1;
        hash01(k)
    };
    for i in 0..w * h {
        net.set_terminal(i, 10.0 * next(), 10.0 * next());
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let c = 5.0 * next();
                net.add_edge(i, i + 1, c, c);
            }
            if y + 1 < h {
                let c = 5.0 * next();
                net.add_edge(i, i + w, c, c);
            }
        }
    }
    net
}

/// Red disc of radius 30 on blue, and its 10%-padded box.
pub fn disc_image() -> (ImageRgb, Aabb) {
    let (w, h) = (120, 100);
    let mut img = ImageRgb::filled(w, h, [0, 0, 255]);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - 60.0, y as f64 - 50.0);
            let inside = dx * dx + dy * dy <= 900.0;
            let n = (8.0 * hash01((y * w + x) as u64)) as u8;
            img.set(x, y, if inside { [250 - n, n, n] } else { [n, n, 250 - n] });
        }
    }
    let b = Aabb {
        x_min: 22.0,
        y_min: 12.0,
        x_max: 98.0,
        y_max: 88.0,
    };
    (img, b)
}

/// Seeded single-object synthetic scene of the given size.
pub fn scene(width: usize, height: usize, seed: u64) -> Scene {
    let opts = RandomSceneOptions {
        width,
        height,
        ..Default::default()
    };
    generate_scene(&random_scene_spec(seed, &opts).expect("valid options")).expect("valid spec")
}
