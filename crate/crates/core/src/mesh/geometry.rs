//! Small fixed-size vector helpers for element geometry.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn centroid(points: &[Point]) -> Point {
    let inv = 1.0 / points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    scale(c, inv)
}

pub fn signed_volume(t: &[Point; 4]) -> f64 {
    let a = sub(t[1], t[0]);
    let b = sub(t[2], t[0]);
    let c = sub(t[3], t[0]);
    dot(a, cross(b, c)) / 6.0
}

pub fn max_edge_length(t: &[Point; 4]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            m = m.max(norm(sub(t[i], t[j])));
        }
    }
    m
}

/// Twice-area normal `(b - a) x (c - a)`.
pub fn triangle_area_normal(a: Point, b: Point, c: Point) -> Point {
    cross(sub(b, a), sub(c, a))
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * norm(triangle_area_normal(a, b, c))
}
