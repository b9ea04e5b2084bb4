use std::collections::{BTreeMap, HashMap};

use crate::error::{FuseError, Result};
use crate::refelem::{gauss_legendre, lagrange_basis, NodeSet};
use crate::Vec2;

/// Vertices of each local face, listed in the direction of increasing face parameter.
///
/// Local face 0 is `ξ2 = 0`, 1 is `ξ1 = 1`, 2 is `ξ2 = 1`, 3 is `ξ1 = 0`.
pub const LOCAL_FACE_VERTICES: [[usize; 2]; 4] = [[0, 1], [1, 2], [3, 2], [0, 3]];

/// Reference corner of each local vertex on `[0, 1]²`.
pub const LOCAL_VERTEX_REF: [Vec2; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

/// Analytic curve that boundary geometry nodes are snapped onto during refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCurve {
    Circle { center: Vec2, radius: f64 },
}

impl BoundaryCurve {
    pub fn project(&self, x: Vec2) -> Vec2 {
        match *self {
            BoundaryCurve::Circle { center, radius } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let r = d[0].hypot(d[1]);
                [center[0] + radius * d[0] / r, center[1] + radius * d[1] / r]
            }
        }
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        match *self {
            BoundaryCurve::Circle { center, radius } => {
                ((x[0] - center[0]).hypot(x[1] - center[1]) - radius).abs()
            }
        }
    }
}

/// A mesh face and the (element, local face) pairs that own it.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Start and end vertex in the first owner's parameter direction.
    pub vertices: [usize; 2],
    pub sides: Vec<(usize, usize)>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }
}

/// Mapping data at one reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingEval {
    pub x: Vec2,
    /// `jac[r][c] = ∂x_r/∂ξ_c`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl MappingEval {
    fn from_parts(x: Vec2, jac: [[f64; 2]; 2]) -> Self {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        MappingEval { x, jac, inv, det }
    }
}

/// Unstructured conforming quadrilateral mesh with curvilinear element maps.
///
/// Each element carries `(p_geo + 1)²` geometry nodes placed at the tensor
/// product of the degree-`p_geo` Gauss-Legendre-plus-endpoints nodes on
/// `[0, 1]`, stored row-major (`ξ1` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    pub(crate) vertices: Vec<Vec2>,
    pub(crate) quads: Vec<[usize; 4]>,
    pub(crate) element_tags: Vec<String>,
    pub(crate) p_geo: usize,
    pub(crate) geometry: Vec<Vec<Vec2>>,
    pub(crate) faces: Vec<Face>,
    pub(crate) elem_faces: Vec<[usize; 4]>,
    pub(crate) boundary_tags: BTreeMap<usize, String>,
    pub(crate) curves: BTreeMap<String, BoundaryCurve>,
    pub(crate) periods: [Option<f64>; 2],
}

/// Topological face table built from quad connectivity.
pub(crate) fn build_adjacency(
    n_vertices: usize,
    quads: &[[usize; 4]],
) -> Result<(Vec<Face>, Vec<[usize; 4]>)> {
    let mut faces: Vec<Face> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elem_faces = vec![[usize::MAX; 4]; quads.len()];
    for (e, q) in quads.iter().enumerate() {
        for v in q {
            if *v >= n_vertices {
                return Err(FuseError::MeshIntegrity(format!(
                    "element {e} references vertex {v} but only {n_vertices} exist"
                )));
            }
        }
        for (lf, lv) in LOCAL_FACE_VERTICES.iter().enumerate() {
            let (a, b) = (q[lv[0]], q[lv[1]]);
            if a == b {
                return Err(FuseError::MeshIntegrity(format!(
                    "element {e} has a degenerate face {lf}"
                )));
            }
            let key = (a.min(b), a.max(b));
            match index.get(&key) {
                Some(&f) => {
                    let face = &mut faces[f];
                    if face.sides.len() >= 2 {
                        return Err(FuseError::MeshIntegrity(format!(
                            "face ({a},{b}) is shared by more than two elements"
                        )));
                    }
                    if face.sides[0].0 == e {
                        return Err(FuseError::MeshIntegrity(format!(
                            "element {e} is adjacent to itself across face ({a},{b})"
                        )));
                    }
                    face.sides.push((e, lf));
                    elem_faces[e][lf] = f;
                }
                None => {
                    index.insert(key, faces.len());
                    elem_faces[e][lf] = faces.len();
                    faces.push(Face {
                        vertices: [a, b],
                        sides: vec![(e, lf)],
                    });
                }
            }
        }
    }
    Ok((faces, elem_faces))
}

fn tensor_index(i: usize, j: usize, n: usize) -> usize {
    j * n + i
}

impl QuadMesh {
    /// Assembles a mesh from parts, rebuilding adjacency and validating it.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        vertices: Vec<Vec2>,
        quads: Vec<[usize; 4]>,
        p_geo: usize,
        geometry: Vec<Vec<Vec2>>,
        boundary_face_tags: impl Fn(usize, usize) -> Option<String>,
        curves: BTreeMap<String, BoundaryCurve>,
        periods: [Option<f64>; 2],
    ) -> Result<Self> {
        let (faces, elem_faces) = build_adjacency(vertices.len(), &quads)?;
        let mut boundary_tags = BTreeMap::new();
        for (f, face) in faces.iter().enumerate() {
            if face.is_boundary() {
                let (e, lf) = face.sides[0];
                if let Some(tag) = boundary_face_tags(e, lf) {
                    boundary_tags.insert(f, tag);
                }
            }
        }
        let n_el = quads.len();
        let mesh = QuadMesh {
            vertices,
            quads,
            element_tags: vec![String::new(); n_el],
            p_geo,
            geometry,
            faces,
            elem_faces,
            boundary_tags,
            curves,
            periods,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.quads.len()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn quads(&self) -> &[[usize; 4]] {
        &self.quads
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn element_faces(&self, e: usize) -> [usize; 4] {
        self.elem_faces[e]
    }

    pub fn boundary_tags(&self) -> &BTreeMap<usize, String> {
        &self.boundary_tags
    }

    pub fn curves(&self) -> &BTreeMap<String, BoundaryCurve> {
        &self.curves
    }

    pub fn periods(&self) -> [Option<f64>; 2] {
        self.periods
    }

    pub fn geometry_degree(&self) -> usize {
        self.p_geo
    }

    pub fn geometry_nodes(&self, e: usize) -> &[Vec2] {
        &self.geometry[e]
    }

    pub fn element_tags(&self) -> &[String] {
        &self.element_tags
    }

    pub fn set_element_tags(&mut self, tags: Vec<String>) {
        assert_eq!(tags.len(), self.quads.len());
        self.element_tags = tags;
    }

    /// Reference geometry node positions on `[0, 1]`.
    pub fn geometry_ref_nodes(&self) -> Vec<f64> {
        NodeSet::fuse(self.p_geo)
            .expect("geometry degree validated at construction")
            .unit_coords()
    }

    /// Physical point and Jacobian of element `e` at reference point `xi ∈ [0,1]²`.
    pub fn evaluate_mapping(&self, e: usize, xi: Vec2) -> MappingEval {
        let r = self.geometry_ref_nodes();
        let (b1, d1) = lagrange_basis(&r, xi[0]);
        let (b2, d2) = lagrange_basis(&r, xi[1]);
        self.combine(e, &b1, &d1, &b2, &d2)
    }

    fn combine(&self, e: usize, b1: &[f64], d1: &[f64], b2: &[f64], d2: &[f64]) -> MappingEval {
        let n = self.p_geo + 1;
        let g = &self.geometry[e];
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for j in 0..n {
            for i in 0..n {
                let node = g[tensor_index(i, j, n)];
                let v = b1[i] * b2[j];
                let dx1 = d1[i] * b2[j];
                let dx2 = b1[i] * d2[j];
                for c in 0..2 {
                    x[c] += v * node[c];
                    jac[c][0] += dx1 * node[c];
                    jac[c][1] += dx2 * node[c];
                }
            }
        }
        MappingEval::from_parts(x, jac)
    }

    /// Mapping data at every tensor node of `nodes` (index `j·(p+1) + i`).
    pub fn mapping_at_nodes(&self, e: usize, nodes: &NodeSet) -> Result<Vec<MappingEval>> {
        let r = self.geometry_ref_nodes();
        let u = nodes.unit_coords();
        let basis: Vec<(Vec<f64>, Vec<f64>)> = u.iter().map(|&s| lagrange_basis(&r, s)).collect();
        let n = u.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let m = self.combine(e, &basis[i].0, &basis[i].1, &basis[j].0, &basis[j].1);
                if !(m.det > 0.0) {
                    return Err(FuseError::SingularJacobian {
                        element: e,
                        det: m.det,
                    });
                }
                out.push(m);
            }
        }
        Ok(out)
    }

    /// `∫_K 1 dx` with a Gauss rule exact for the mapped Jacobian determinant.
    pub fn element_area(&self, e: usize) -> f64 {
        let (gx, gw) = gauss_legendre(self.p_geo + 2).expect("small Gauss rule");
        let mut area = 0.0;
        for (x2, w2) in gx.iter().zip(&gw) {
            for (x1, w1) in gx.iter().zip(&gw) {
                let m = self.evaluate_mapping(e, [0.5 * (x1 + 1.0), 0.5 * (x2 + 1.0)]);
                area += 0.25 * w1 * w2 * m.det;
            }
        }
        area
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_area(e)).sum()
    }

    /// Rough element diameter: longest corner-to-corner distance.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let c: Vec<Vec2> = LOCAL_VERTEX_REF
            .iter()
            .map(|&r| self.evaluate_mapping(e, r).x)
            .collect();
        let mut d: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                d = d.max((c[a][0] - c[b][0]).hypot(c[a][1] - c[b][1]));
            }
        }
        d
    }

    /// Reference coordinates of point `s ∈ [0,1]` along local face `lf`
    /// (in the face's parameter direction).
    pub fn face_point(lf: usize, s: f64) -> Vec2 {
        match lf {
            0 => [s, 0.0],
            1 => [1.0, s],
            2 => [s, 1.0],
            3 => [0.0, s],
            _ => unreachable!("quads have four faces"),
        }
    }

    /// Outward unit normal of element `e` at reference point `xi` on local face `lf`.
    pub fn outward_normal(&self, e: usize, lf: usize, xi: Vec2) -> Vec2 {
        let m = self.evaluate_mapping(e, xi);
        // gradient of the reference coordinate that is constant on the face
        let (c, sign) = match lf {
            0 => (1, -1.0),
            1 => (0, 1.0),
            2 => (1, 1.0),
            3 => (0, -1.0),
            _ => unreachable!(),
        };
        let g = [m.inv[c][0] * sign, m.inv[c][1] * sign];
        let n = g[0].hypot(g[1]);
        [g[0] / n, g[1] / n]
    }

    fn wrap_delta(&self, mut d: Vec2) -> Vec2 {
        for c in 0..2 {
            if let Some(per) = self.periods[c] {
                d[c] -= per * (d[c] / per).round();
            }
        }
        d
    }

    /// Checks adjacency consistency, shared-face geometry agreement and
    /// Jacobian positivity at the geometry nodes.
    pub fn validate(&self) -> Result<()> {
        if self.p_geo == 0 {
            return Err(FuseError::MeshIntegrity("geometry degree must be >= 1".into()));
        }
        let ng = (self.p_geo + 1) * (self.p_geo + 1);
        if self.geometry.len() != self.quads.len() {
            return Err(FuseError::MeshIntegrity(format!(
                "{} geometry blocks for {} elements",
                self.geometry.len(),
                self.quads.len()
            )));
        }
        for (e, g) in self.geometry.iter().enumerate() {
            if g.len() != ng {
                return Err(FuseError::MeshIntegrity(format!(
                    "element {e} has {} geometry nodes, expected {ng}",
                    g.len()
                )));
            }
        }
        let ns = NodeSet::fuse(self.p_geo)?;
        for e in 0..self.n_elements() {
            self.mapping_at_nodes(e, &ns)?;
        }
        let r = self.geometry_ref_nodes();
        for (f, face) in self.faces.iter().enumerate() {
            if face.sides.len() != 2 {
                continue;
            }
            let (ea, la) = face.sides[0];
            let (eb, lb) = face.sides[1];
            let same = self.quads[ea][LOCAL_FACE_VERTICES[la][0]]
                == self.quads[eb][LOCAL_FACE_VERTICES[lb][0]];
            let diam = self.element_diameter(ea).max(self.element_diameter(eb));
            for &s in &r {
                let xa = self.evaluate_mapping(ea, Self::face_point(la, s)).x;
                let sb = if same { s } else { 1.0 - s };
                let xb = self.evaluate_mapping(eb, Self::face_point(lb, sb)).x;
                let d = self.wrap_delta([xa[0] - xb[0], xa[1] - xb[1]]);
                if d[0].hypot(d[1]) > 1e-12 * diam.max(1.0) {
                    return Err(FuseError::MeshIntegrity(format!(
                        "face {f}: elements {ea} and {eb} disagree on shared geometry by {:e}",
                        d[0].hypot(d[1])
                    )));
                }
            }
        }
        Ok(())
    }

    /// Splits every quad into four, resampling the parent map. Children on a
    /// boundary carrying an analytic curve are snapped back onto that curve.
    pub fn refine_uniform(&self) -> QuadMesh {
        let n_el = self.n_elements();
        let n_v = self.vertices.len();
        let n_f = self.faces.len();
        let mid_id = |f: usize| n_v + f;
        let center_id = |e: usize| n_v + n_f + e;
        let mut vertices = self.vertices.clone();
        vertices.resize(n_v + n_f + n_el, [0.0; 2]);

        // vertex displacement introduced by snapping
        let mut snap: HashMap<usize, Vec2> = HashMap::new();
        let face_curve = |f: usize| -> Option<BoundaryCurve> {
            self.boundary_tags
                .get(&f)
                .and_then(|t| self.curves.get(t))
                .copied()
        };

        for (f, face) in self.faces.iter().enumerate() {
            let (e, lf) = face.sides[0];
            let x = self.evaluate_mapping(e, Self::face_point(lf, 0.5)).x;
            vertices[mid_id(f)] = x;
            if let Some(curve) = face_curve(f) {
                let y = curve.project(x);
                snap.insert(mid_id(f), [y[0] - x[0], y[1] - x[1]]);
                vertices[mid_id(f)] = y;
                for v in face.vertices {
                    let xv = self.vertices[v];
                    let yv = curve.project(xv);
                    if xv != yv {
                        snap.insert(v, [yv[0] - xv[0], yv[1] - xv[1]]);
                        vertices[v] = yv;
                    }
                }
            }
        }
        for e in 0..n_el {
            vertices[center_id(e)] = self.evaluate_mapping(e, [0.5, 0.5]).x;
        }

        let r = self.geometry_ref_nodes();
        let ng = self.p_geo + 1;
        let mut quads = Vec::with_capacity(4 * n_el);
        let mut geometry = Vec::with_capacity(4 * n_el);
        let mut tags: HashMap<(usize, usize), String> = HashMap::new();
        let mut element_tags = Vec::with_capacity(4 * n_el);

        for e in 0..n_el {
            let q = self.quads[e];
            let ef = self.elem_faces[e];
            let m = [mid_id(ef[0]), mid_id(ef[1]), mid_id(ef[2]), mid_id(ef[3])];
            let c = center_id(e);
            // children ordered (c1, c2) = (0,0), (1,0), (1,1), (0,1)
            let children: [([usize; 4], Vec2); 4] = [
                ([q[0], m[0], c, m[3]], [0.0, 0.0]),
                ([m[0], q[1], m[1], c], [0.5, 0.0]),
                ([c, m[1], q[2], m[2]], [0.5, 0.5]),
                ([m[3], c, m[2], q[3]], [0.0, 0.5]),
            ];
            for (cq, off) in children {
                let child = quads.len();
                // which child local faces lie on which parent local face
                let mut on_parent: [Option<usize>; 4] = [None; 4];
                if off[1] == 0.0 {
                    on_parent[0] = Some(0);
                }
                if off[0] == 0.5 {
                    on_parent[1] = Some(1);
                }
                if off[1] == 0.5 {
                    on_parent[2] = Some(2);
                }
                if off[0] == 0.0 {
                    on_parent[3] = Some(3);
                }
                let mut g: Vec<Vec2> = Vec::with_capacity(ng * ng);
                for j in 0..ng {
                    for i in 0..ng {
                        let xi = [off[0] + 0.5 * r[i], off[1] + 0.5 * r[j]];
                        g.push(self.evaluate_mapping(e, xi).x);
                    }
                }
                let corner_shift: Vec<Vec2> = cq
                    .iter()
                    .map(|v| snap.get(v).copied().unwrap_or([0.0, 0.0]))
                    .collect();
                let curved: [Option<BoundaryCurve>; 4] = std::array::from_fn(|lf| {
                    on_parent[lf].and_then(|plf| face_curve(ef[plf]))
                });
                let needs_fix = curved.iter().any(Option::is_some)
                    || corner_shift.iter().any(|d| d[0] != 0.0 || d[1] != 0.0);
                if needs_fix {
                    g = reblend(&g, &r, &corner_shift, &curved);
                }
                for lf in 0..4 {
                    if let Some(plf) = on_parent[lf] {
                        if let Some(t) = self.boundary_tags.get(&ef[plf]) {
                            tags.insert((child, lf), t.clone());
                        }
                    }
                }
                quads.push(cq);
                geometry.push(g);
                element_tags.push(self.element_tags[e].clone());
            }
        }

        let mut mesh = QuadMesh::from_parts(
            vertices,
            quads,
            self.p_geo,
            geometry,
            |e, lf| tags.get(&(e, lf)).cloned(),
            self.curves.clone(),
            self.periods,
        )
        .expect("refinement of a valid mesh is valid");
        mesh.element_tags = element_tags;
        mesh
    }
}

/// Rebuilds an element's geometry nodes from its four edges by transfinite
/// interpolation, after shifting corners and snapping curved edges.
fn reblend(
    g: &[Vec2],
    r: &[f64],
    corner_shift: &[Vec2],
    curved: &[Option<BoundaryCurve>; 4],
) -> Vec<Vec2> {
    let n = r.len();
    let at = |i: usize, j: usize| g[tensor_index(i, j, n)];
    // edge k sampled along its parameter; endpoints are local vertices LOCAL_FACE_VERTICES[k]
    let mut edges: Vec<Vec<Vec2>> = Vec::with_capacity(4);
    for lf in 0..4 {
        let [va, vb] = LOCAL_FACE_VERTICES[lf];
        let mut pts = Vec::with_capacity(n);
        for (k, &s) in r.iter().enumerate() {
            let base = match lf {
                0 => at(k, 0),
                1 => at(n - 1, k),
                2 => at(k, n - 1),
                _ => at(0, k),
            };
            let mut x = [
                base[0] + (1.0 - s) * corner_shift[va][0] + s * corner_shift[vb][0],
                base[1] + (1.0 - s) * corner_shift[va][1] + s * corner_shift[vb][1],
            ];
            if let Some(curve) = curved[lf] {
                x = curve.project(x);
            }
            pts.push(x);
        }
        edges.push(pts);
    }
    let c00 = edges[0][0];
    let c10 = edges[0][n - 1];
    let c11 = edges[2][n - 1];
    let c01 = edges[2][0];
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (s, t) = (r[i], r[j]);
            let mut x = [0.0; 2];
            for c in 0..2 {
                x[c] = (1.0 - t) * edges[0][i][c] + t * edges[2][i][c] + (1.0 - s) * edges[3][j][c]
                    + s * edges[1][j][c]
                    - ((1.0 - s) * (1.0 - t) * c00[c]
                        + s * (1.0 - t) * c10[c]
                        + s * t * c11[c]
                        + (1.0 - s) * t * c01[c]);
            }
            out.push(x);
        }
    }
    out
}
