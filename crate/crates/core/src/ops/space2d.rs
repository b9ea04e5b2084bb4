use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{VelocityField, TAU_ALIGN};
use crate::error::{FuseError, Result};
use crate::mesh::{DofClass, DofMap, MappingEval, QuadMesh};
use crate::refelem::ReferenceElement;
use crate::sparse::CsrMatrix;
use crate::Vec2;

/// Seed of the default random split direction for the 2D Laplacian.
pub const DEFAULT_SPLIT_SEED: u64 = 20240101;

/// Unit vector at a uniformly random angle drawn from `seed`.
pub fn random_split_velocity(seed: u64) -> Vec2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: f64 = 2.0 * PI * rng.random::<f64>();
    [theta.cos(), theta.sin()]
}

/// Mesh, dof map, reference element and cached per-node mapping data.
#[derive(Debug, Clone)]
pub struct Space2D {
    pub mesh: QuadMesh,
    pub dofs: DofMap,
    pub re: ReferenceElement,
    /// `maps[e][l]` at local tensor node `l`.
    pub maps: Vec<Vec<MappingEval>>,
    pub areas: Vec<f64>,
    unit_diff: Vec<Vec<f64>>,
}

/// Per-dof list of `(element, local index, weight)` with weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct UpwindSelection {
    pub entries: Vec<Vec<(usize, usize, f64)>>,
}

impl Space2D {
    pub fn new(mesh: QuadMesh, re: ReferenceElement) -> Result<Self> {
        let dofs = DofMap::new(&mesh, &re.nodes)?;
        let maps = (0..mesh.n_elements())
            .map(|e| mesh.mapping_at_nodes(e, &re.nodes))
            .collect::<Result<Vec<_>>>()?;
        let areas = (0..mesh.n_elements()).map(|e| mesh.element_area(e)).collect();
        let unit_diff = re.unit_diff_matrix();
        Ok(Space2D {
            mesh,
            dofs,
            re,
            maps,
            areas,
            unit_diff,
        })
    }

    pub fn degree(&self) -> usize {
        self.re.degree()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Elements selected at dof `g` for velocity `a`, weighted by relative area.
    pub fn upwind_elements(&self, g: usize, a: Vec2) -> Vec<(usize, usize, f64)> {
        let owners = self.dofs.owners(g);
        if self.dofs.class(g) == DofClass::Interior {
            let (e, l) = owners[0];
            return vec![(e, l, 1.0)];
        }
        let p = self.degree();
        let np = p + 1;
        let zero = a[0] == 0.0 && a[1] == 0.0;
        let mut picked: Vec<(usize, usize)> = Vec::with_capacity(owners.len());
        if !zero {
            for &(e, l) in owners {
                let inv = self.maps[e][l].inv;
                // backward-traced direction in the reference frame
                let b = [
                    -(inv[0][0] * a[0] + inv[0][1] * a[1]),
                    -(inv[1][0] * a[0] + inv[1][1] * a[1]),
                ];
                let tau = TAU_ALIGN * b[0].hypot(b[1]);
                let pos = [l % np, l / np];
                let enters = (0..2).all(|c| {
                    if pos[c] == 0 {
                        b[c] >= -tau
                    } else if pos[c] == p {
                        b[c] <= tau
                    } else {
                        true
                    }
                });
                if enters {
                    picked.push((e, l));
                }
            }
        }
        if picked.is_empty() {
            picked = owners.to_vec();
        }
        let total: f64 = picked.iter().map(|&(e, _)| self.areas[e]).sum();
        picked
            .into_iter()
            .map(|(e, l)| (e, l, self.areas[e] / total))
            .collect()
    }

    pub fn upwind_selection(&self, vel: &VelocityField) -> UpwindSelection {
        let coords = self.dofs.coords();
        UpwindSelection {
            entries: (0..self.n_dofs())
                .into_par_iter()
                .map(|g| self.upwind_elements(g, vel.at(g, coords[g])))
                .collect(),
        }
    }

    /// Row of `∂/∂x_d` at local node `l` of element `e`, as `(local column, value)`.
    pub fn element_row(&self, e: usize, l: usize, d: usize) -> Vec<(usize, f64)> {
        let np = self.degree() + 1;
        let (i, j) = (l % np, l / np);
        let inv = self.maps[e][l].inv;
        let mut row = Vec::with_capacity(2 * np);
        for m in 0..np {
            row.push((j * np + m, inv[0][d] * self.unit_diff[i][m]));
            row.push((m * np + i, inv[1][d] * self.unit_diff[j][m]));
        }
        row
    }

    fn assemble_direction(&self, sel: &UpwindSelection, d: usize) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = sel
            .entries
            .par_iter()
            .map(|entry| {
                let mut row = Vec::new();
                for &(e, l, w) in entry {
                    let dofs = self.dofs.element_dofs(e);
                    row.extend(self.element_row(e, l, d).into_iter().map(|(c, v)| (dofs[c], w * v)));
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(self.n_dofs(), rows)
    }

    /// Upwinded `∂/∂x` (`direction = 0`) or `∂/∂y` (`direction = 1`).
    pub fn directional_derivative(&self, vel: &VelocityField, direction: usize) -> Result<CsrMatrix> {
        if direction > 1 {
            return Err(FuseError::InvalidArgument(format!("direction {direction} is not 0 or 1")));
        }
        Ok(self.assemble_direction(&self.upwind_selection(vel), direction))
    }

    /// Both components of the upwinded gradient sharing one selection.
    pub fn gradient(&self, vel: &VelocityField) -> [CsrMatrix; 2] {
        let sel = self.upwind_selection(vel);
        [self.assemble_direction(&sel, 0), self.assemble_direction(&sel, 1)]
    }

    /// `L = Dx⁻ Gx⁺ + Dy⁻ Gy⁺` with `G` upwinded by `split` and `D` by `−split`.
    pub fn laplacian(&self, split: Vec2) -> CsrMatrix {
        let [gx, gy] = self.gradient(&VelocityField::Constant(split));
        let [dx, dy] = self.gradient(&VelocityField::Constant([-split[0], -split[1]]));
        dx.matmul(&gx).add_scaled(1.0, &dy.matmul(&gy), 1.0)
    }

    /// Samples a function at every dof.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        self.dofs.coords().iter().map(|&x| f(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{circle_mesh, perturbed_mesh, structured_mesh, Rect};
    use crate::refelem::NodeKind;

    fn space(mesh: QuadMesh, p: usize) -> Space2D {
        Space2D::new(mesh, ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p).unwrap()).unwrap()
    }

    #[test]
    fn exact_on_linear_fields() {
        let meshes = [
            circle_mesh(3).unwrap().refine_uniform(),
            perturbed_mesh(4, Rect::square(-1.0, 1.0), 5, 3).unwrap(),
        ];
        for m in meshes {
            let s = space(m, 3);
            let u = s.interpolate(|x| 2.0 * x[0] + 3.0 * x[1]);
            for vel in [VelocityField::Constant([0.3, -0.7]), VelocityField::function(|x| [-x[1], x[0]])] {
                let [gx, gy] = s.gradient(&vel);
                for v in gx.mul_vec(&u) {
                    assert!((v - 2.0).abs() < 1e-11);
                }
                for v in gy.mul_vec(&u) {
                    assert!((v - 3.0).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn transversal_and_parallel_face_selection() {
        let s = space(structured_mesh(2, 1, Rect::new(0.0, 2.0, 0.0, 1.0), [false, false], 2).unwrap(), 2);
        // middle dof of the shared face x = 1
        let g = (0..s.n_dofs())
            .find(|&g| {
                let x = s.dofs.coords()[g];
                (x[0] - 1.0).abs() < 1e-14 && (x[1] - 0.5).abs() < 1e-14
            })
            .unwrap();
        let sel = s.upwind_elements(g, [1.0, 0.2]);
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].0, 0);
        assert_eq!(sel[0].2, 1.0);
        let sel = s.upwind_elements(g, [0.0, 1.0]);
        assert_eq!(sel.len(), 2);
        assert!((sel[0].2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn corner_selection_matches_brute_force() {
        let s = space(structured_mesh(2, 2, Rect::unit(), [false, false], 2).unwrap(), 2);
        let g = (0..s.n_dofs())
            .find(|&g| s.dofs.coords()[g] == [0.5, 0.5])
            .unwrap();
        assert_eq!(s.dofs.owners(g).len(), 4);
        for a in [[1.0, 1.0], [-1.0, 1.0], [-1.0, -0.5], [0.4, -2.0]] {
            let sel = s.upwind_elements(g, a);
            // brute force: step backwards from the corner and find the containing element
            let x = [0.5 - 1e-3 * a[0], 0.5 - 1e-3 * a[1]];
            let e = (x[0] > 0.5) as usize + 2 * (x[1] > 0.5) as usize;
            assert_eq!(sel.len(), 1);
            assert_eq!(sel[0].0, e);
        }
    }

    #[test]
    fn selection_weights_scale_invariant() {
        let a = space(perturbed_mesh(3, Rect::unit(), 2, 2).unwrap(), 2);
        let b = space(perturbed_mesh(3, Rect::square(0.0, 10.0), 2, 2).unwrap(), 2);
        let sa = a.upwind_selection(&VelocityField::Constant([0.0, 0.0]));
        let sb = b.upwind_selection(&VelocityField::Constant([0.0, 0.0]));
        for (x, y) in sa.entries.iter().zip(&sb.entries) {
            let sum: f64 = x.iter().map(|t| t.2).sum();
            assert!((sum - 1.0).abs() < 1e-13);
            for (p, q) in x.iter().zip(y) {
                assert_eq!((p.0, p.1), (q.0, q.1));
                assert!((p.2 - q.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_element_is_kronecker() {
        let (hx, hy) = (0.5, 2.0);
        let s = space(structured_mesh(1, 1, Rect::new(0.0, hx, 0.0, hy), [false, false], 3).unwrap(), 3);
        let [gx, gy] = s.gradient(&VelocityField::Constant([0.3, 0.4]));
        let d = s.re.unit_diff_matrix();
        let np = 4;
        for j in 0..np {
            for i in 0..np {
                let r = s.dofs.element_dofs(0)[j * np + i];
                for m in 0..np {
                    let cx = s.dofs.element_dofs(0)[j * np + m];
                    let cy = s.dofs.element_dofs(0)[m * np + i];
                    assert!((gx.get(r, cx) - d[i][m] / hx).abs() < 1e-12);
                    assert!((gy.get(r, cy) - d[j][m] / hy).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let s = space(circle_mesh(3).unwrap(), 3);
        let l = s.laplacian(random_split_velocity(DEFAULT_SPLIT_SEED));
        for v in l.mul_vec(&vec![1.0; s.n_dofs()]) {
            assert!(v.abs() < 1e-10);
        }
    }
}
