//! Forcing terms checked against hyper-dual derivatives of the exact solutions
//! at seeded random points.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use fuse_core::bench::{circle_exact, circle_source, poisson_1d_exact, poisson_1d_source, TaylorGreenExact};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `a + b ε₁ + c ε₂ + d ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Clone, Copy, Debug)]
struct Hd {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Hd {
    fn cst(a: f64) -> Self {
        Hd { a, b: 0.0, c: 0.0, d: 0.0 }
    }

    fn var(a: f64, e1: bool, e2: bool) -> Self {
        Hd { a, b: f64::from(u8::from(e1)), c: f64::from(u8::from(e2)), d: 0.0 }
    }

    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Hd {
            a: f,
            b: df * self.b,
            c: df * self.c,
            d: df * self.d + ddf * self.b * self.c,
        }
    }

    fn sin(self) -> Self {
        self.chain(self.a.sin(), self.a.cos(), -self.a.sin())
    }

    fn cos(self) -> Self {
        self.chain(self.a.cos(), -self.a.sin(), -self.a.cos())
    }

    fn exp(self) -> Self {
        let e = self.a.exp();
        self.chain(e, e, e)
    }
}

impl Add for Hd {
    type Output = Hd;
    fn add(self, o: Hd) -> Hd {
        Hd { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}

impl Sub for Hd {
    type Output = Hd;
    fn sub(self, o: Hd) -> Hd {
        Hd { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

impl Mul for Hd {
    type Output = Hd;
    fn mul(self, o: Hd) -> Hd {
        Hd {
            a: self.a * o.a,
            b: self.a * o.b + self.b * o.a,
            c: self.a * o.c + self.c * o.a,
            d: self.a * o.d + self.b * o.c + self.c * o.b + self.d * o.a,
        }
    }
}

fn points(seed: u64, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(0.0..1.0)])
        .collect()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + scale)
}

#[test]
fn poisson_1d_source_is_minus_second_derivative() {
    let u = |x: Hd| (Hd::cst(2.0 * PI) * x).sin().exp() - Hd::cst(1.0);
    for [x, _, _] in points(1, 0.0, 1.0) {
        let v = u(Hd::var(x, true, true));
        assert!(close(v.a, poisson_1d_exact(x), 1.0));
        assert!(close(-v.d, poisson_1d_source(x), v.d.abs()), "x={x}");
    }
}

#[test]
fn circle_source_is_minus_laplacian() {
    let u = |x: Hd, y: Hd| (Hd::cst(1.0) - x * x - y * y).exp();
    for [x, y, _] in points(2, -0.7, 0.7) {
        let uxx = u(Hd::var(x, true, true), Hd::cst(y)).d;
        let uyy = u(Hd::cst(x), Hd::var(y, true, true)).d;
        assert!(close(u(Hd::cst(x), Hd::cst(y)).a, circle_exact([x, y]), 1.0));
        assert!(close(-(uxx + uyy), circle_source([x, y]), uxx.abs() + uyy.abs()));
    }
}

#[test]
fn taylor_green_satisfies_navier_stokes() {
    let nu = 1.0;
    let ex = TaylorGreenExact { nu };
    let vel = |x: Hd, y: Hd, t: Hd| {
        let d = (Hd::cst(-2.0 * nu) * t).exp();
        (x.sin() * y.cos() * d, Hd::cst(0.0) - x.cos() * y.sin() * d)
    };
    let pres = |x: Hd, y: Hd, t: Hd| {
        Hd::cst(0.25) * ((Hd::cst(2.0) * x).cos() + (Hd::cst(2.0) * y).cos()) * (Hd::cst(-4.0 * nu) * t).exp()
    };
    for [x, y, t] in points(3, 0.0, 2.0 * PI) {
        let c = Hd::cst;
        let (u, v) = vel(c(x), c(y), c(t));
        let [eu, ev] = ex.velocity([x, y], t);
        assert!(close(u.a, eu, 1.0) && close(v.a, ev, 1.0));
        assert!(close(pres(c(x), c(y), c(t)).a, ex.pressure([x, y], t), 1.0));

        let (ux, vx) = vel(Hd::var(x, true, true), c(y), c(t));
        let (uy, vy) = vel(c(x), Hd::var(y, true, true), c(t));
        let (ut, vt) = vel(c(x), c(y), Hd::var(t, true, false));
        let px = pres(Hd::var(x, true, false), c(y), c(t)).b;
        let py = pres(c(x), Hd::var(y, true, false), c(t)).b;
        let mom_x = ut.b + u.a * ux.b + v.a * uy.b + px - nu * (ux.d + uy.d);
        let mom_y = vt.b + u.a * vx.b + v.a * vy.b + py - nu * (vx.d + vy.d);
        assert!(mom_x.abs() < 1e-12 && mom_y.abs() < 1e-12, "({x}, {y}, {t})");
        assert!((ux.b + vy.b).abs() < 1e-14);
    }
}
