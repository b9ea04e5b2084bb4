use super::quad::{QuadMesh, LOCAL_FACE_VERTICES};
use crate::error::{FuseError, Result};
use crate::refelem::NodeSet;
use crate::Vec2;

/// Topological position of a global dof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofClass {
    Interior,
    Face,
    Corner,
}

/// Global numbering of tensor-product nodes with element-boundary nodes shared
/// between neighbours. Local index `j·(p+1) + i`, `i` along `ξ1`.
#[derive(Debug, Clone)]
pub struct DofMap {
    p: usize,
    nodes: NodeSet,
    element_dofs: Vec<Vec<usize>>,
    coords: Vec<Vec2>,
    class: Vec<DofClass>,
    owners: Vec<Vec<(usize, usize)>>,
    face_dofs: Vec<Vec<usize>>,
}

/// Local `(i, j)` of the node at parameter index `k` along local face `lf`.
pub(crate) fn face_local(lf: usize, k: usize, p: usize) -> (usize, usize) {
    match lf {
        0 => (k, 0),
        1 => (p, k),
        2 => (k, p),
        3 => (0, k),
        _ => unreachable!("quads have four faces"),
    }
}

impl DofMap {
    pub fn new(mesh: &QuadMesh, nodes: &NodeSet) -> Result<Self> {
        let p = nodes.degree();
        let np = p + 1;
        let n_el = mesh.n_elements();
        let unset = usize::MAX;
        let mut element_dofs = vec![vec![unset; np * np]; n_el];
        let mut class = Vec::new();
        let mut next = 0usize;

        let mut vertex_dof = vec![unset; mesh.vertices().len()];
        for (e, q) in mesh.quads().iter().enumerate() {
            for (lv, &v) in q.iter().enumerate() {
                if vertex_dof[v] == unset {
                    vertex_dof[v] = next;
                    class.push(DofClass::Corner);
                    next += 1;
                }
                let (i, j) = [(0, 0), (p, 0), (p, p), (0, p)][lv];
                element_dofs[e][j * np + i] = vertex_dof[v];
            }
        }

        let mut face_dofs = Vec::with_capacity(mesh.faces().len());
        for face in mesh.faces() {
            let start = next;
            next += p - 1;
            class.extend(std::iter::repeat_n(DofClass::Face, p - 1));
            let mut along = Vec::with_capacity(np);
            for &(e, lf) in &face.sides {
                let q = mesh.quads()[e];
                let forward = q[LOCAL_FACE_VERTICES[lf][0]] == face.vertices[0];
                if !forward && q[LOCAL_FACE_VERTICES[lf][1]] != face.vertices[0] {
                    return Err(FuseError::MeshIntegrity(format!(
                        "element {e} local face {lf} does not match its face vertices"
                    )));
                }
                for k in 1..p {
                    let (i, j) = face_local(lf, k, p);
                    let g = if forward { start + k - 1 } else { start + p - 1 - k };
                    element_dofs[e][j * np + i] = g;
                }
            }
            along.push(vertex_dof[face.vertices[0]]);
            along.extend(start..start + p - 1);
            along.push(vertex_dof[face.vertices[1]]);
            face_dofs.push(along);
        }

        for dofs in element_dofs.iter_mut() {
            for j in 1..p {
                for i in 1..p {
                    dofs[j * np + i] = next;
                    class.push(DofClass::Interior);
                    next += 1;
                }
            }
        }

        let mut owners = vec![Vec::new(); next];
        for (e, dofs) in element_dofs.iter().enumerate() {
            for (l, &g) in dofs.iter().enumerate() {
                if g == unset {
                    return Err(FuseError::MeshIntegrity(format!(
                        "element {e} local node {l} left unnumbered"
                    )));
                }
                owners[g].push((e, l));
            }
        }

        let mut coords = vec![[0.0; 2]; next];
        let mut done = vec![false; next];
        for e in 0..n_el {
            let maps = mesh.mapping_at_nodes(e, nodes)?;
            for (l, m) in maps.iter().enumerate() {
                let g = element_dofs[e][l];
                if !done[g] {
                    coords[g] = m.x;
                    done[g] = true;
                }
            }
        }

        Ok(DofMap {
            p,
            nodes: nodes.clone(),
            element_dofs,
            coords,
            class,
            owners,
            face_dofs,
        })
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.element_dofs.len()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.element_dofs[e]
    }

    pub fn coords(&self) -> &[Vec2] {
        &self.coords
    }

    pub fn class(&self, g: usize) -> DofClass {
        self.class[g]
    }

    pub fn classes(&self) -> &[DofClass] {
        &self.class
    }

    /// `(element, local index)` pairs sharing dof `g`.
    pub fn owners(&self, g: usize) -> &[(usize, usize)] {
        &self.owners[g]
    }

    /// Dofs along mesh face `f` in its parameter direction, endpoints included.
    pub fn face_dofs(&self, f: usize) -> &[usize] {
        &self.face_dofs[f]
    }

    /// Sorted dofs lying on boundary faces, optionally restricted to faces
    /// whose tag satisfies `keep`.
    pub fn boundary_dofs(&self, mesh: &QuadMesh, keep: impl Fn(usize, Option<&str>) -> bool) -> Vec<usize> {
        let mut out: Vec<usize> = mesh
            .faces()
            .iter()
            .enumerate()
            .filter(|(f, face)| {
                face.is_boundary() && keep(*f, mesh.boundary_tags().get(f).map(String::as_str))
            })
            .flat_map(|(f, _)| self.face_dofs[f].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Reference coordinates on `[0, 1]²` of local index `l`.
    pub fn local_ref_point(&self, l: usize) -> Vec2 {
        let u = self.nodes.unit_coords();
        let np = self.p + 1;
        [u[l % np], u[l / np]]
    }

    /// Largest disagreement between owners' mapped coordinates of shared dofs,
    /// relative to the owning element diameter (periodic shifts removed).
    pub fn max_coordinate_mismatch(&self, mesh: &QuadMesh) -> f64 {
        let periods = mesh.periods();
        let mut worst: f64 = 0.0;
        for (g, own) in self.owners.iter().enumerate() {
            for &(e, l) in own {
                let x = mesh.evaluate_mapping(e, self.local_ref_point(l)).x;
                let mut d = [x[0] - self.coords[g][0], x[1] - self.coords[g][1]];
                for c in 0..2 {
                    if let Some(per) = periods[c] {
                        d[c] -= per * (d[c] / per).round();
                    }
                }
                worst = worst.max(d[0].hypot(d[1]) / mesh.element_diameter(e));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{circle_mesh, structured_mesh, Rect};
    use std::f64::consts::PI;

    fn count(d: &DofMap, c: DofClass) -> usize {
        d.classes().iter().filter(|&&k| k == c).count()
    }

    #[test]
    fn single_element_classification() {
        let m = structured_mesh(1, 1, Rect::unit(), [false, false], 3).unwrap();
        let d = DofMap::new(&m, &NodeSet::fuse(3).unwrap()).unwrap();
        assert_eq!(d.n_dofs(), 16);
        assert_eq!(count(&d, DofClass::Corner), 4);
        assert_eq!(count(&d, DofClass::Face), 8);
        assert_eq!(count(&d, DofClass::Interior), 4);
    }

    #[test]
    fn dof_counts() {
        let ns2 = NodeSet::fuse(2).unwrap();
        let m = structured_mesh(1, 1, Rect::unit(), [false, false], 2).unwrap();
        assert_eq!(DofMap::new(&m, &ns2).unwrap().n_dofs(), 9);
        let m = structured_mesh(2, 1, Rect::unit(), [false, false], 2).unwrap();
        assert_eq!(DofMap::new(&m, &ns2).unwrap().n_dofs(), 15);
        let ns1 = NodeSet::fuse(1).unwrap();
        let m = structured_mesh(2, 1, Rect::unit(), [false, false], 1).unwrap();
        assert_eq!(DofMap::new(&m, &ns1).unwrap().n_dofs(), 6);
        let ns3 = NodeSet::fuse(3).unwrap();
        let m = structured_mesh(4, 4, Rect::square(0.0, 2.0 * PI), [true, true], 3).unwrap();
        let d = DofMap::new(&m, &ns3).unwrap();
        assert_eq!(d.n_dofs(), 144);
        assert!(d.max_coordinate_mismatch(&m) < 1e-10);
        let m = structured_mesh(3, 5, Rect::unit(), [false, false], 3).unwrap();
        assert_eq!(DofMap::new(&m, &ns3).unwrap().n_dofs(), 10 * 16);
    }

    #[test]
    fn shared_dofs_agree_on_curved_mesh() {
        let m = circle_mesh(4).unwrap().refine_uniform();
        let d = DofMap::new(&m, &NodeSet::fuse(4).unwrap()).unwrap();
        assert!(d.max_coordinate_mismatch(&m) < 1e-10);
        for g in 0..d.n_dofs() {
            let k = d.owners(g).len();
            match d.class(g) {
                DofClass::Interior => assert_eq!(k, 1),
                DofClass::Face => assert!(k == 1 || k == 2),
                DofClass::Corner => assert!(k >= 1),
            }
        }
    }
}
