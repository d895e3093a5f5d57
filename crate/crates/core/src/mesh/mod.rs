//! Staggered primal/dual meshes, node classification and local patches.

pub mod geometry;
pub mod patch;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub use geometry::{Domain, Shape, TracePoint};
pub use patch::{build_local_patch, HermiteRegion, LocalPatch, RegionRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Primal,
    Dual,
}

impl Parity {
    pub fn other(self) -> Self {
        match self {
            Parity::Primal => Parity::Dual,
            Parity::Dual => Parity::Primal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subdomain {
    Plus,
    Minus,
}

impl Subdomain {
    pub fn index(self) -> usize {
        match self {
            Subdomain::Plus => 0,
            Subdomain::Minus => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub parity: Parity,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Hermite(Subdomain),
    Cf(Subdomain),
    Inactive,
}

impl NodeKind {
    pub fn subdomain(self) -> Option<Subdomain> {
        match self {
            NodeKind::Hermite(s) | NodeKind::Cf(s) => Some(s),
            NodeKind::Inactive => None,
        }
    }

    pub fn is_active(self) -> bool {
        !matches!(self, NodeKind::Inactive)
    }
}

/// Primal nodes at lo + i·h, dual nodes at lo + (i + 1/2)·h; primal levels at
/// t_n = nΔt and dual levels at t_{n+1/2}.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredMesh {
    pub dims: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
    pub h: f64,
    pub dt: f64,
    pub cfl: f64,
    pub periodic: bool,
}

pub fn build_mesh(dims: usize, lo: &[f64], hi: &[f64], n: &[usize], cfl: f64) -> Result<StaggeredMesh> {
    StaggeredMesh::new(dims, lo, hi, n, cfl, false)
}

impl StaggeredMesh {
    pub fn new(dims: usize, lo: &[f64], hi: &[f64], n: &[usize], cfl: f64, periodic: bool) -> Result<Self> {
        if !(1..=2).contains(&dims) || lo.len() < dims || hi.len() < dims || n.len() < dims {
            return Err(Error::Config("mesh needs 1 or 2 dimensions with matching extents".into()));
        }
        if !(cfl > 0.0) {
            return Err(Error::Config(format!("CFL must be positive, got {cfl}")));
        }
        let mut m = Self { dims, lo: [0.0; 2], hi: [0.0; 2], n: [0, 1], h: 0.0, dt: 0.0, cfl, periodic };
        for d in 0..dims {
            if n[d] < 4 {
                return Err(Error::Config(format!("need at least 4 cells per direction, got {}", n[d])));
            }
            if hi[d] <= lo[d] {
                return Err(Error::Config("empty computational domain".into()));
            }
            m.lo[d] = lo[d];
            m.hi[d] = hi[d];
            m.n[d] = n[d];
        }
        m.h = (m.hi[0] - m.lo[0]) / m.n[0] as f64;
        if dims == 2 {
            let hy = (m.hi[1] - m.lo[1]) / m.n[1] as f64;
            if ((hy - m.h) / m.h).abs() > 1e-12 {
                return Err(Error::Config(format!("non-square cells: dx = {} dy = {hy}", m.h)));
            }
        }
        m.dt = cfl * m.h;
        Ok(m)
    }

    /// Nodes per direction for a parity (second entry 1 in 1D).
    pub fn grid(&self, parity: Parity) -> [usize; 2] {
        let mut g = [1; 2];
        for d in 0..self.dims {
            g[d] = match (parity, self.periodic) {
                (Parity::Primal, false) => self.n[d] + 1,
                _ => self.n[d],
            };
        }
        g
    }

    pub fn node_count(&self, parity: Parity) -> usize {
        let g = self.grid(parity);
        g[0] * g[1]
    }

    pub fn ij(&self, parity: Parity, index: usize) -> [usize; 2] {
        let g = self.grid(parity);
        [index % g[0], index / g[0]]
    }

    /// Linear index of grid position `ij`, wrapping when periodic.
    pub fn index(&self, parity: Parity, ij: [isize; 2]) -> Option<usize> {
        let g = self.grid(parity);
        let mut p = [0usize; 2];
        for d in 0..2 {
            let v = if d < self.dims && self.periodic { ij[d].rem_euclid(g[d] as isize) } else { ij[d] };
            if v < 0 || v >= g[d] as isize {
                return None;
            }
            p[d] = v as usize;
        }
        Some(p[1] * g[0] + p[0])
    }

    pub fn coord(&self, parity: Parity, index: usize) -> [f64; 2] {
        let ij = self.ij(parity, index);
        self.coord_ij(parity, [ij[0] as isize, ij[1] as isize])
    }

    pub fn coord_ij(&self, parity: Parity, ij: [isize; 2]) -> [f64; 2] {
        let off = if parity == Parity::Dual { 0.5 } else { 0.0 };
        let mut x = [0.0; 2];
        for d in 0..self.dims {
            x[d] = self.lo[d] + (ij[d] as f64 + off) * self.h;
        }
        x
    }

    /// Opposite-parity nodes surrounding a node, ordered (-,-), (+,-), (-,+), (+,+)
    /// with x fastest (two entries in 1D).
    pub fn stencil(&self, parity: Parity, index: usize) -> Vec<Option<usize>> {
        let ij = self.ij(parity, index);
        let base = match parity {
            Parity::Primal => [ij[0] as isize - 1, ij[1] as isize - 1],
            Parity::Dual => [ij[0] as isize, ij[1] as isize],
        };
        let other = parity.other();
        let mut out = vec![];
        let ny = if self.dims == 2 { 2 } else { 1 };
        for dy in 0..ny {
            for dx in 0..2 {
                let pos = [base[0] + dx, if self.dims == 2 { base[1] + dy } else { 0 }];
                out.push(self.index(other, pos));
            }
        }
        out
    }

    pub fn time_of(&self, parity: Parity, level: usize) -> f64 {
        match parity {
            Parity::Primal => level as f64 * self.dt,
            Parity::Dual => (level as f64 + 0.5) * self.dt,
        }
    }
}

/// Per-node classification of both meshes.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeClassification {
    pub primal: Vec<NodeKind>,
    pub dual: Vec<NodeKind>,
}

impl NodeClassification {
    pub fn kinds(&self, parity: Parity) -> &[NodeKind] {
        match parity {
            Parity::Primal => &self.primal,
            Parity::Dual => &self.dual,
        }
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds(id.parity)[id.index]
    }

    pub fn cf_nodes(&self, parity: Parity) -> Vec<usize> {
        self.kinds(parity).iter().enumerate().filter(|(_, k)| matches!(k, NodeKind::Cf(_))).map(|(i, _)| i).collect()
    }

    pub fn hermite_nodes(&self, parity: Parity) -> Vec<usize> {
        self.kinds(parity).iter().enumerate().filter(|(_, k)| matches!(k, NodeKind::Hermite(_))).map(|(i, _)| i).collect()
    }
}

/// Marks every node Hermite, CF or inactive. A node is Hermite when all of its
/// stencil nodes exist and lie in its own subdomain.
pub fn classify_nodes(mesh: &StaggeredMesh, domain: &Domain) -> Result<NodeClassification> {
    if !mesh.periodic && domain.boundary.is_none() {
        return Err(Error::Config("a non-periodic mesh needs an embedded boundary".into()));
    }
    let tol = 1e-12 * mesh.h;
    let locate = |p: Parity| -> Vec<Option<Subdomain>> {
        (0..mesh.node_count(p)).map(|i| domain.locate(mesh.coord(p, i), tol)).collect()
    };
    let lp = locate(Parity::Primal);
    let ld = locate(Parity::Dual);
    let classify = |p: Parity, own: &[Option<Subdomain>], other: &[Option<Subdomain>]| -> Vec<NodeKind> {
        own.iter()
            .enumerate()
            .map(|(i, s)| match s {
                None => NodeKind::Inactive,
                Some(s) => {
                    let full = mesh.stencil(p, i).iter().all(|q| matches!(q, Some(q) if other[*q] == Some(*s)));
                    if full {
                        NodeKind::Hermite(*s)
                    } else {
                        NodeKind::Cf(*s)
                    }
                }
            })
            .collect()
    };
    Ok(NodeClassification { primal: classify(Parity::Primal, &lp, &ld), dual: classify(Parity::Dual, &ld, &lp) })
}
