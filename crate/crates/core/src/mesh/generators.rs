use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::quad::{BoundaryCurve, QuadMesh};
use crate::error::{FuseError, Result};
use crate::refelem::NodeSet;
use crate::Vec2;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn square(a: f64, b: f64) -> Self {
        Rect::new(a, b, a, b)
    }

    pub fn unit() -> Self {
        Rect::square(0.0, 1.0)
    }
}

/// Geometry nodes of a bilinear quad with corners `c` (counterclockwise).
fn bilinear_geometry(c: [Vec2; 4], r: &[f64]) -> Vec<Vec2> {
    let mut g = Vec::with_capacity(r.len() * r.len());
    for &t in r {
        for &s in r {
            let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
            let mut x = [0.0; 2];
            for k in 0..4 {
                x[0] += w[k] * c[k][0];
                x[1] += w[k] * c[k][1];
            }
            g.push(x);
        }
    }
    g
}

/// Transfinite (Coons) interpolation from four edge maps. Edge `k` is
/// parameterised in the direction of local face `k`.
fn coons_geometry(edges: [&dyn Fn(f64) -> Vec2; 4], r: &[f64]) -> Vec<Vec2> {
    let c00 = edges[0](0.0);
    let c10 = edges[0](1.0);
    let c11 = edges[2](1.0);
    let c01 = edges[2](0.0);
    let mut g = Vec::with_capacity(r.len() * r.len());
    for &t in r {
        for &s in r {
            let (b, rt, tp, lf) = (edges[0](s), edges[1](t), edges[2](s), edges[3](t));
            let mut x = [0.0; 2];
            for c in 0..2 {
                x[c] = (1.0 - t) * b[c] + t * tp[c] + (1.0 - s) * lf[c] + s * rt[c]
                    - ((1.0 - s) * (1.0 - t) * c00[c]
                        + s * (1.0 - t) * c10[c]
                        + s * t * c11[c]
                        + (1.0 - s) * t * c01[c]);
            }
            g.push(x);
        }
    }
    g
}

fn ref_nodes(p_geo: usize) -> Result<Vec<f64>> {
    Ok(NodeSet::fuse(p_geo)?.unit_coords())
}

/// Tensor grid of `nx × ny` affine quads. Non-periodic sides are tagged
/// `left`, `right`, `bottom`, `top`.
pub fn structured_mesh(
    nx: usize,
    ny: usize,
    domain: Rect,
    periodic: [bool; 2],
    p_geo: usize,
) -> Result<QuadMesh> {
    let vertex_grid: Vec<Vec2> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            [
                domain.x0 + (domain.x1 - domain.x0) * i as f64 / nx.max(1) as f64,
                domain.y0 + (domain.y1 - domain.y0) * j as f64 / ny.max(1) as f64,
            ]
        })
        .collect();
    grid_mesh(nx, ny, domain, periodic, p_geo, vertex_grid)
}

fn grid_mesh(
    nx: usize,
    ny: usize,
    domain: Rect,
    periodic: [bool; 2],
    p_geo: usize,
    grid: Vec<Vec2>,
) -> Result<QuadMesh> {
    if nx == 0 || ny == 0 {
        return Err(FuseError::InvalidArgument("nx and ny must be at least 1".into()));
    }
    if !(domain.x0 < domain.x1 && domain.y0 < domain.y1) {
        return Err(FuseError::InvalidArgument("empty rectangle".into()));
    }
    if (periodic[0] && nx < 3) || (periodic[1] && ny < 3) {
        return Err(FuseError::InvalidArgument(
            "periodic directions need at least 3 elements".into(),
        ));
    }
    let r = ref_nodes(p_geo)?;
    let cols = if periodic[0] { nx } else { nx + 1 };
    let rows = if periodic[1] { ny } else { ny + 1 };
    let vid = |i: usize, j: usize| (j % rows) * cols + (i % cols);
    let mut vertices = vec![[0.0; 2]; cols * rows];
    for j in 0..rows {
        for i in 0..cols {
            vertices[vid(i, j)] = grid[j * (nx + 1) + i];
        }
    }
    let mut quads = Vec::with_capacity(nx * ny);
    let mut geometry = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            quads.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            let at = |a: usize, b: usize| grid[b * (nx + 1) + a];
            geometry.push(bilinear_geometry(
                [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)],
                &r,
            ));
        }
    }
    let periods = [
        periodic[0].then_some(domain.x1 - domain.x0),
        periodic[1].then_some(domain.y1 - domain.y0),
    ];
    QuadMesh::from_parts(
        vertices,
        quads,
        p_geo,
        geometry,
        |e, lf| {
            let (i, j) = (e % nx, e / nx);
            match lf {
                0 if j == 0 => Some("bottom".to_string()),
                1 if i == nx - 1 => Some("right".to_string()),
                2 if j == ny - 1 => Some("top".to_string()),
                3 if i == 0 => Some("left".to_string()),
                _ => None,
            }
        },
        BTreeMap::new(),
        periods,
    )
}

/// `n × n` grid whose interior vertices are jittered by a seeded displacement
/// of at most `0.2 h`, followed by one relaxed Laplacian smoothing pass.
pub fn perturbed_mesh(n: usize, domain: Rect, seed: u64, p_geo: usize) -> Result<QuadMesh> {
    if n == 0 {
        return Err(FuseError::InvalidArgument("n must be at least 1".into()));
    }
    let hx = (domain.x1 - domain.x0) / n as f64;
    let hy = (domain.y1 - domain.y0) / n as f64;
    let h = hx.min(hy);
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut grid: Vec<Vec2> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| [domain.x0 + hx * i as f64, domain.y0 + hy * j as f64])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..n {
        for i in 1..n {
            let rad: f64 = 0.2 * h * rng.random::<f64>();
            let ang: f64 = 2.0 * PI * rng.random::<f64>();
            let v = &mut grid[idx(i, j)];
            v[0] += rad * ang.cos();
            v[1] += rad * ang.sin();
        }
    }
    let jittered = grid.clone();
    for j in 1..n {
        for i in 1..n {
            let nb = [idx(i - 1, j), idx(i + 1, j), idx(i, j - 1), idx(i, j + 1)];
            for c in 0..2 {
                let avg = nb.iter().map(|&k| jittered[k][c]).sum::<f64>() / 4.0;
                grid[idx(i, j)][c] = jittered[idx(i, j)][c] + 0.5 * (avg - jittered[idx(i, j)][c]);
            }
        }
    }
    grid_mesh(n, n, domain, [false, false], p_geo, grid)
}

/// Five-block mesh of the unit disk: a centre square of half-width 0.5 and four
/// blocks whose outer edge is a quarter arc. Arc edges are tagged `circle`.
pub fn circle_mesh(p_geo: usize) -> Result<QuadMesh> {
    let r = ref_nodes(p_geo)?;
    let a = 0.5;
    let mut vertices = vec![[-a, -a], [a, -a], [a, a], [-a, a]];
    let angles = [1.25 * PI, 1.75 * PI, 0.25 * PI, 0.75 * PI];
    vertices.extend(angles.iter().map(|t| [t.cos(), t.sin()]));
    let quads = vec![
        [0, 1, 2, 3],
        [4, 5, 1, 0],
        [5, 6, 2, 1],
        [6, 7, 3, 2],
        [7, 4, 0, 3],
    ];
    let mut geometry = Vec::with_capacity(5);
    let c = |k: usize| vertices[k];
    geometry.push(bilinear_geometry([c(0), c(1), c(2), c(3)], &r));
    for b in 0..4 {
        let q = quads[b + 1];
        let (t0, t1) = (angles[b], angles[b] + 0.5 * PI);
        let (p0, p1, p2, p3) = (c(q[0]), c(q[1]), c(q[2]), c(q[3]));
        let lerp = |u: Vec2, v: Vec2| move |s: f64| [u[0] + s * (v[0] - u[0]), u[1] + s * (v[1] - u[1])];
        let arc = move |s: f64| {
            let t = t0 + s * (t1 - t0);
            [t.cos(), t.sin()]
        };
        let e1 = lerp(p1, p2);
        let e2 = lerp(p3, p2);
        let e3 = lerp(p0, p3);
        geometry.push(coons_geometry([&arc, &e1, &e2, &e3], &r));
    }
    let mut curves = BTreeMap::new();
    curves.insert(
        "circle".to_string(),
        BoundaryCurve::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
    );
    QuadMesh::from_parts(
        vertices,
        quads,
        p_geo,
        geometry,
        |e, lf| (e > 0 && lf == 0).then(|| "circle".to_string()),
        curves,
        [None, None],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        let m = structured_mesh(4, 4, Rect::unit(), [false, false], 2).unwrap();
        assert_eq!(m.n_elements(), 16);
        assert_eq!(m.vertices().len(), 25);
        assert_eq!(m.boundary_tags().len(), 16);
        let p = structured_mesh(4, 4, Rect::square(0.0, 2.0 * PI), [true, true], 3).unwrap();
        assert_eq!(p.vertices().len(), 16);
        assert!(p.boundary_tags().is_empty());
        assert!(p.faces().iter().all(|f| f.sides.len() == 2));
        assert!(structured_mesh(2, 4, Rect::unit(), [true, false], 2).is_err());
    }

    #[test]
    fn affine_mapping() {
        let m = structured_mesh(1, 1, Rect::unit(), [false, false], 2).unwrap();
        let ev = m.evaluate_mapping(0, [0.25, 0.75]);
        assert!((ev.x[0] - 0.25).abs() < 1e-15 && (ev.x[1] - 0.75).abs() < 1e-15);
        assert!((ev.jac[0][0] - 1.0).abs() < 1e-14 && ev.jac[0][1].abs() < 1e-14);
        let h = 0.125;
        let s = structured_mesh(1, 1, Rect::new(0.0, h, 1.0, 1.0 + h), [false, false], 3).unwrap();
        assert!((s.evaluate_mapping(0, [0.3, 0.6]).det - h * h).abs() < 1e-15);
    }

    #[test]
    fn circle_boundary_nodes_on_circle() {
        let m = circle_mesh(3).unwrap();
        assert_eq!(m.n_elements(), 5);
        assert_eq!(m.boundary_tags().len(), 4);
        for e in 1..5 {
            for i in 0..4 {
                let x = m.geometry_nodes(e)[i];
                assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() <= 1e-3);
            }
        }
        assert!((m.total_area() - PI).abs() < 1e-2);
    }

    fn boundary_error(m: &QuadMesh) -> f64 {
        let mut worst: f64 = 0.0;
        for &f in m.boundary_tags().keys() {
            let (e, lf) = m.faces()[f].sides[0];
            for k in 0..=64 {
                let x = m.evaluate_mapping(e, QuadMesh::face_point(lf, k as f64 / 64.0)).x;
                worst = worst.max((x[0].hypot(x[1]) - 1.0).abs());
            }
        }
        worst
    }

    #[test]
    fn circle_boundary_converges_under_refinement() {
        for p in [2, 3, 4] {
            let m = circle_mesh(p).unwrap();
            let e0 = boundary_error(&m);
            let e2 = boundary_error(&m.refine_uniform().refine_uniform());
            assert!(e0 / e2 >= 2f64.powi(p as i32), "p={p}: {e0:e} -> {e2:e}");
        }
    }

    #[test]
    fn perturbed_is_deterministic_and_valid() {
        let a = perturbed_mesh(4, Rect::square(-1.0, 1.0), 7, 3).unwrap();
        let b = perturbed_mesh(4, Rect::square(-1.0, 1.0), 7, 3).unwrap();
        assert_eq!(a, b);
        assert!((a.total_area() - 4.0).abs() < 1e-12);
        let c = perturbed_mesh(4, Rect::square(-1.0, 1.0), 8, 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn refinement_preserves_area_and_validity() {
        let m = circle_mesh(3).unwrap();
        let r1 = m.refine_uniform();
        assert_eq!(r1.n_elements(), 20);
        r1.validate().unwrap();
        let r2 = r1.refine_uniform();
        assert_eq!(r2.n_elements(), 80);
        r2.validate().unwrap();
        let s = structured_mesh(4, 4, Rect::unit(), [false, false], 3).unwrap().refine_uniform();
        assert_eq!(s.n_elements(), 64);
        assert!((s.total_area() - 1.0).abs() < 1e-12);
        let p = perturbed_mesh(4, Rect::square(-1.0, 1.0), 3, 3).unwrap();
        let pr = p.refine_uniform();
        assert!((pr.total_area() - p.total_area()).abs() < 1e-12 * p.total_area());
    }
}
