//! Debug drawings: matches, dynamic points, hulls and boxes.

use dynseg_core::geometry::Point;
use dynseg_core::ImageRgb;

pub const PALETTE: [[u8; 3]; 6] = [
    [255, 64, 64],
    [64, 160, 255],
    [255, 220, 0],
    [255, 0, 255],
    [0, 230, 200],
    [255, 140, 0],
];

pub fn object_color(id: usize) -> [u8; 3] {
    PALETTE[id % PALETTE.len()]
}

/// Halves the contrast of `img` so marks stand out.
pub fn faded(img: &ImageRgb) -> ImageRgb {
    let mut out = img.clone();
    for px in out.data_mut() {
        for c in px.iter_mut() {
            *c = 64 + *c / 2;
        }
    }
    out
}

fn put(img: &mut ImageRgb, x: i64, y: i64, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set(x as usize, y as usize, rgb);
    }
}

pub fn dot(img: &mut ImageRgb, p: Point, radius: i64, rgb: [u8; 3]) {
    let (cx, cy) = (p[0].round() as i64, p[1].round() as i64);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy <= radius * radius {
                put(img, cx + dx, cy + dy, rgb);
            }
        }
    }
}

/// Bresenham segment, clipped to the image.
pub fn line(img: &mut ImageRgb, a: Point, b: Point, rgb: [u8; 3]) {
    let (mut x0, mut y0) = (a[0].round() as i64, a[1].round() as i64);
    let (x1, y1) = (b[0].round() as i64, b[1].round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, rgb);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn polygon(img: &mut ImageRgb, vertices: &[Point], rgb: [u8; 3]) {
    for (i, &a) in vertices.iter().enumerate() {
        line(img, a, vertices[(i + 1) % vertices.len()], rgb);
    }
}

/// The two images side by side, B to the right of A.
pub fn side_by_side(a: &ImageRgb, b: &ImageRgb) -> ImageRgb {
    let (w, h) = (a.width() + b.width(), a.height().max(b.height()));
    let mut out = ImageRgb::filled(w, h, [0, 0, 0]);
    for (img, x0) in [(a, 0), (b, a.width())] {
        for y in 0..img.height() {
            for x in 0..img.width() {
                out.set(x0 + x, y, img.get(x, y));
            }
        }
    }
    out
}
