use num_complex::Complex64;

use super::first1d::{upwind_element_1d, ElementStencils1D};
use crate::error::{FuseError, Result};
use crate::vnstab::eigen_dense_with_vectors;

/// Eigen-decomposition `A = R Λ L` of a flux Jacobian with `L = R⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristics {
    pub eigenvalues: Vec<f64>,
    /// `right[i][j]`: component `i` of the `j`-th right eigenvector.
    pub right: Vec<Vec<f64>>,
    /// `left[j]`: the `j`-th left eigenvector (row of `R⁻¹`).
    pub left: Vec<Vec<f64>>,
}

/// Hyperbolic system of conservation laws `u_t + F(u)_x = 0`.
pub trait FluxSystem: Sync {
    fn n_components(&self) -> usize;
    fn flux(&self, u: &[f64]) -> Vec<f64>;
    fn characteristics(&self, u: &[f64]) -> Result<Characteristics>;
}

/// 1D compressible Euler in conserved variables `(ρ, ρv, E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerFlux1D {
    pub gamma: f64,
}

impl Default for EulerFlux1D {
    fn default() -> Self {
        EulerFlux1D { gamma: 1.4 }
    }
}

impl EulerFlux1D {
    pub fn pressure(&self, u: &[f64]) -> f64 {
        (self.gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    /// Conserved state from density, velocity and pressure.
    pub fn conserved(&self, rho: f64, v: f64, p: f64) -> [f64; 3] {
        [rho, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * v * v]
    }

    /// Analytic flux Jacobian.
    pub fn jacobian(&self, u: &[f64]) -> [[f64; 3]; 3] {
        let g = self.gamma;
        let v = u[1] / u[0];
        let e = u[2] / u[0];
        [
            [0.0, 1.0, 0.0],
            [0.5 * (g - 3.0) * v * v, (3.0 - g) * v, g - 1.0],
            [
                (g - 1.0) * v * v * v - g * e * v,
                g * e - 1.5 * (g - 1.0) * v * v,
                g * v,
            ],
        ]
    }
}

impl FluxSystem for EulerFlux1D {
    fn n_components(&self) -> usize {
        3
    }

    fn flux(&self, u: &[f64]) -> Vec<f64> {
        let v = u[1] / u[0];
        let p = self.pressure(u);
        vec![u[1], u[1] * v + p, v * (u[2] + p)]
    }

    fn characteristics(&self, u: &[f64]) -> Result<Characteristics> {
        let g = self.gamma;
        let rho = u[0];
        let p = self.pressure(u);
        if !(rho > 0.0 && p > 0.0) {
            return Err(FuseError::Hyperbolicity {
                dof: usize::MAX,
                msg: format!("non-physical state rho={rho}, p={p}"),
            });
        }
        let v = u[1] / rho;
        let c = (g * p / rho).sqrt();
        let h = (u[2] + p) / rho;
        let b1 = (g - 1.0) / (c * c);
        let b2 = 0.5 * b1 * v * v;
        Ok(Characteristics {
            eigenvalues: vec![v - c, v, v + c],
            right: vec![
                vec![1.0, 1.0, 1.0],
                vec![v - c, v, v + c],
                vec![h - v * c, 0.5 * v * v, h + v * c],
            ],
            left: vec![
                vec![0.5 * (b2 + v / c), 0.5 * (-b1 * v - 1.0 / c), 0.5 * b1],
                vec![1.0 - b2, b1 * v, -b1],
                vec![0.5 * (b2 - v / c), 0.5 * (-b1 * v + 1.0 / c), 0.5 * b1],
            ],
        })
    }
}

/// Generic system whose characteristics come from a dense eigensolve of a
/// user-supplied Jacobian.
pub struct NumericalCharacteristics<F, J> {
    pub n: usize,
    pub flux: F,
    pub jacobian: J,
}

impl<F, J> FluxSystem for NumericalCharacteristics<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Sync,
{
    fn n_components(&self) -> usize {
        self.n
    }

    fn flux(&self, u: &[f64]) -> Vec<f64> {
        (self.flux)(u)
    }

    fn characteristics(&self, u: &[f64]) -> Result<Characteristics> {
        let a = (self.jacobian)(u);
        let n = self.n;
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let m: Vec<Vec<Complex64>> = a
            .iter()
            .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        let (vals, vecs) = eigen_dense_with_vectors(&m)?;
        let hyper = |msg: String| FuseError::Hyperbolicity { dof: usize::MAX, msg };
        if let Some(l) = vals.iter().find(|l| l.im.abs() > 1e-10 * scale) {
            return Err(hyper(format!("complex characteristic speed {l}")));
        }
        let eigenvalues: Vec<f64> = vals.iter().map(|l| l.re).collect();
        let mut right = vec![vec![0.0; n]; n];
        for (j, v) in vecs.iter().enumerate() {
            // rotate so the largest component is real, then drop the imaginary part
            let big = v.iter().copied().fold(Complex64::new(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
            let phase = big.conj() / big.norm();
            for i in 0..n {
                right[i][j] = (v[i] * phase).re;
            }
        }
        let left = invert(&right).ok_or_else(|| hyper("flux Jacobian is not diagonalisable".into()))?;
        Ok(Characteristics {
            eigenvalues,
            right,
            left,
        })
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` if numerically singular.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `∂F(u)/∂x` at every dof for a scalar flux, upwinded at shared dofs by the
/// sign of `a(u) = F'(u)` at the (single-valued) nodal state.
pub fn apply_flux_divergence_1d(
    u: &[f64],
    flux: impl Fn(f64) -> f64,
    speed: impl Fn(f64) -> f64,
    st: &ElementStencils1D,
) -> Vec<f64> {
    let f: Vec<f64> = u.iter().map(|&v| flux(v)).collect();
    let p = st.degree();
    let n_el = st.dofs.n_elements();
    let elem: Vec<Vec<f64>> = (0..n_el).map(|k| st.element_derivative(k, &f)).collect();
    (0..u.len())
        .map(|g| {
            if g % p != 0 {
                elem[g / p][g % p]
            } else {
                let (k, i) = upwind_element_1d(st, g, speed(u[g]));
                elem[k][i]
            }
        })
        .collect()
}

/// `∂F(u)/∂x` for a system (state stored component-major, `u[c][g]`), with
/// characteristic upwinding at shared dofs.
pub fn apply_system_flux_divergence_1d(
    u: &[Vec<f64>],
    sys: &dyn FluxSystem,
    st: &ElementStencils1D,
) -> Result<Vec<Vec<f64>>> {
    let m = sys.n_components();
    let n = st.dofs.n_dofs();
    if u.len() != m || u.iter().any(|c| c.len() != n) {
        return Err(FuseError::InvalidArgument("state shape does not match the system".into()));
    }
    let state = |g: usize| -> Vec<f64> { (0..m).map(|c| u[c][g]).collect() };
    let mut f = vec![vec![0.0; n]; m];
    for g in 0..n {
        let fg = sys.flux(&state(g));
        for c in 0..m {
            f[c][g] = fg[c];
        }
    }
    let n_el = st.dofs.n_elements();
    // elem[k][c][i]
    let elem: Vec<Vec<Vec<f64>>> = (0..n_el)
        .map(|k| (0..m).map(|c| st.element_derivative(k, &f[c])).collect())
        .collect();
    let mut out = vec![vec![0.0; n]; m];
    for g in 0..n {
        let owners = st.owners(g);
        if owners.len() == 1 {
            let (k, i) = owners[0];
            for c in 0..m {
                out[c][g] = elem[k][c][i];
            }
            continue;
        }
        let ch = sys.characteristics(&state(g)).map_err(|e| match e {
            FuseError::Hyperbolicity { msg, .. } => FuseError::Hyperbolicity { dof: g, msg },
            other => other,
        })?;
        let (left, right) = (owners[0], owners[1]);
        for j in 0..m {
            let (k, i) = if ch.eigenvalues[j] > 0.0 { left } else { right };
            let w: f64 = (0..m).map(|c| ch.left[j][c] * elem[k][c][i]).sum();
            for c in 0..m {
                out[c][g] += ch.right[c][j] * w;
            }
        }
    }
    Ok(out)
}
