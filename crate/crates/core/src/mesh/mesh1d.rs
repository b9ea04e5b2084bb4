use crate::error::{FuseError, Result};
use crate::refelem::NodeSet;

/// Partition of an interval into elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    breaks: Vec<f64>,
    periodic: bool,
}

impl Mesh1D {
    pub fn uniform(n: usize, domain: (f64, f64), periodic: bool) -> Result<Self> {
        if n == 0 {
            return Err(FuseError::InvalidArgument("need at least one element".into()));
        }
        let (a, b) = domain;
        if !(a < b) {
            return Err(FuseError::InvalidArgument(format!("empty domain [{a}, {b}]")));
        }
        let mut breaks: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        breaks[n] = b;
        Ok(Mesh1D { breaks, periodic })
    }

    pub fn from_breaks(breaks: Vec<f64>, periodic: bool) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FuseError::InvalidArgument(
                "element breaks must be strictly increasing with at least two entries".into(),
            ));
        }
        Ok(Mesh1D { breaks, periodic })
    }

    pub fn n_elements(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.domain();
        b - a
    }

    pub fn width(&self, k: usize) -> f64 {
        self.breaks[k + 1] - self.breaks[k]
    }

    /// Splits every element in two.
    pub fn refine_uniform(&self) -> Mesh1D {
        let mut breaks = Vec::with_capacity(2 * self.breaks.len() - 1);
        for w in self.breaks.windows(2) {
            breaks.push(w[0]);
            breaks.push(0.5 * (w[0] + w[1]));
        }
        breaks.push(*self.breaks.last().unwrap());
        Mesh1D {
            breaks,
            periodic: self.periodic,
        }
    }

    pub fn dofs(&self, nodes: &NodeSet) -> DofMap1D {
        DofMap1D::new(self, nodes)
    }
}

/// Global numbering of shared 1D nodes: element `k`, local node `i` maps to `k·p + i`
/// (wrapped for periodic meshes).
#[derive(Debug, Clone)]
pub struct DofMap1D {
    p: usize,
    n_elements: usize,
    n_dofs: usize,
    periodic: bool,
    coords: Vec<f64>,
}

impl DofMap1D {
    pub fn new(mesh: &Mesh1D, nodes: &NodeSet) -> Self {
        let p = nodes.degree();
        let n = mesh.n_elements();
        let n_dofs = if mesh.is_periodic() { n * p } else { n * p + 1 };
        let mut coords = vec![0.0; n_dofs];
        let unit = nodes.unit_coords();
        for k in 0..n {
            let (a, h) = (mesh.breaks()[k], mesh.width(k));
            for (i, s) in unit.iter().enumerate() {
                let g = k * p + i;
                if g < n_dofs && (i < p || k == n - 1) {
                    coords[g] = if i == p { mesh.breaks()[k + 1] } else { a + h * s };
                }
            }
        }
        DofMap1D {
            p,
            n_elements: n,
            n_dofs,
            periodic: mesh.is_periodic(),
            coords,
        }
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn global(&self, k: usize, i: usize) -> usize {
        let g = k * self.p + i;
        if self.periodic {
            g % self.n_dofs
        } else {
            g
        }
    }

    /// Physical coordinates of every dof (periodic images folded into the domain).
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Element-local node coordinates, unwrapped (monotone within the element).
    pub fn element_coords(&self, mesh: &Mesh1D, nodes: &NodeSet, k: usize) -> Vec<f64> {
        let (a, h) = (mesh.breaks()[k], mesh.width(k));
        nodes.unit_coords().iter().map(|s| a + h * s).collect()
    }

    /// Dofs shared between elements `k - 1` and `k`, plus the two domain ends
    /// for non-periodic meshes.
    pub fn is_element_boundary(&self, g: usize) -> bool {
        g.is_multiple_of(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        let ns3 = NodeSet::fuse(3).unwrap();
        let ns2 = NodeSet::fuse(2).unwrap();
        assert_eq!(Mesh1D::uniform(4, (0.0, 1.0), true).unwrap().dofs(&ns3).n_dofs(), 12);
        assert_eq!(Mesh1D::uniform(2, (0.0, 1.0), true).unwrap().dofs(&ns2).n_dofs(), 4);
        let d = Mesh1D::uniform(1, (0.0, 1.0), false).unwrap().dofs(&ns2);
        assert_eq!(d.coords(), &[0.0, 0.5, 1.0]);
        assert!(Mesh1D::uniform(0, (0.0, 1.0), true).is_err());
        assert!(Mesh1D::uniform(3, (1.0, 1.0), true).is_err());
    }

    #[test]
    fn periodic_wrap() {
        let ns = NodeSet::fuse(2).unwrap();
        let m = Mesh1D::uniform(3, (0.0, 1.0), true).unwrap();
        let d = m.dofs(&ns);
        assert_eq!(d.global(2, 2), 0);
        assert_eq!(d.coords()[0], 0.0);
    }

    #[test]
    fn refinement_doubles() {
        let m = Mesh1D::uniform(3, (0.0, 3.0), false).unwrap().refine_uniform();
        assert_eq!(m.n_elements(), 6);
        assert_eq!(m.breaks()[1], 0.5);
    }
}
