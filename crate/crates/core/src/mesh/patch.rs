//! Local space-time patches around correction-function nodes.

use super::{Domain, NodeClassification, NodeId, NodeKind, Parity, StaggeredMesh, Subdomain, TracePoint};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which Hermite cells of each subdomain enter a 2D patch functional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionRule {
    /// Nearest Hermite cell of each parity per subdomain.
    Nearest,
    /// Every Hermite cell of each parity whose node lies in the patch, clipped
    /// to it. One-dimensional patches always use the nearest cells.
    #[default]
    AllInPatch,
}

/// A space-time box on which the correction function is matched to the
/// Hermite-Taylor polynomial of the cell centred at `cell`.
///
/// Times are offsets from the patch's target time.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteRegion {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub t0: f64,
    pub t1: f64,
    pub launch: f64,
    pub cell: NodeId,
    pub center: [f64; 2],
    pub subdomain: Subdomain,
}

#[derive(Clone, Debug)]
pub struct LocalPatch {
    pub node: NodeId,
    pub subdomain: Subdomain,
    pub position: [f64; 2],
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Time window as offsets from the target time.
    pub t0: f64,
    pub t1: f64,
    pub ell: f64,
    pub blocks: Vec<Subdomain>,
    pub regions: Vec<HermiteRegion>,
    pub boundary_trace: Vec<TracePoint>,
    pub boundary_block: Option<Subdomain>,
    pub interface_trace: Vec<TracePoint>,
}

impl LocalPatch {
    pub fn block_of(&self, s: Subdomain) -> Option<usize> {
        self.blocks.iter().position(|&b| b == s)
    }

    pub fn is_interface(&self) -> bool {
        self.blocks.len() == 2
    }
}

pub(crate) fn node_label(mesh: &StaggeredMesh, id: NodeId) -> String {
    let ij = mesh.ij(id.parity, id.index);
    let x = mesh.coord(id.parity, id.index);
    if mesh.dims == 1 {
        format!("{:?} node {} at x={:.6}", id.parity, ij[0], x[0])
    } else {
        format!("{:?} node ({}, {}) at ({:.6}, {:.6})", id.parity, ij[0], ij[1], x[0], x[1])
    }
}

struct Candidate {
    id: NodeId,
    center: [f64; 2],
    ij: [isize; 2],
}

fn nearest_hermite(
    mesh: &StaggeredMesh,
    class: &NodeClassification,
    from: NodeId,
    parity: Parity,
    sub: Subdomain,
    reach: isize,
) -> Option<Candidate> {
    let base = mesh.ij(from.parity, from.index);
    let p = mesh.coord(from.parity, from.index);
    let off = if from.parity == Parity::Primal && parity == Parity::Dual { -1 } else { 0 };
    let ny = if mesh.dims == 2 { reach } else { 0 };
    let mut best: Option<(f64, Candidate)> = None;
    for dj in -ny..=ny {
        for di in -reach..=reach {
            let ij = [base[0] as isize + di + off, if mesh.dims == 2 { base[1] as isize + dj + off } else { 0 }];
            let Some(idx) = mesh.index(parity, ij) else { continue };
            if class.kinds(parity)[idx] != NodeKind::Hermite(sub) {
                continue;
            }
            let c = mesh.coord_ij(parity, ij);
            let d = (c[0] - p[0]).hypot(c[1] - p[1]);
            let better = match &best {
                None => true,
                Some((bd, b)) => {
                    if (d - bd).abs() <= 1e-12 * mesh.h {
                        (ij[0], ij[1]) < (b.ij[0], b.ij[1])
                    } else {
                        d < *bd
                    }
                }
            };
            if better {
                best = Some((d, Candidate { id: NodeId { parity, index: idx }, center: c, ij }));
            }
        }
    }
    best.map(|(_, c)| c)
}

fn cell_box(mesh: &StaggeredMesh, c: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let r = 0.5 * mesh.h;
    let mut lo = [c[0] - r, 0.0];
    let mut hi = [c[0] + r, 0.0];
    if mesh.dims == 2 {
        lo[1] = c[1] - r;
        hi[1] = c[1] + r;
    }
    (lo, hi)
}

/// Builds the patch of a CF node. `bootstrap` selects the first dual half-step
/// variant over [t_0, t_{1/2}] matched only to polynomials launched at t_0.
#[allow(clippy::too_many_arguments)]
pub fn build_local_patch(
    mesh: &StaggeredMesh,
    class: &NodeClassification,
    domain: &Domain,
    node: NodeId,
    beta: f64,
    rule: RegionRule,
    n_trace: usize,
    bootstrap: bool,
) -> Result<LocalPatch> {
    let label = || node_label(mesh, node);
    let NodeKind::Cf(sub) = class.kind(node) else {
        return Err(Error::Contract(format!("{} is not a CF node", label())));
    };
    if bootstrap && node.parity != Parity::Dual {
        return Err(Error::Contract("the first half-step variant applies to dual nodes".into()));
    }
    let p = mesh.coord(node.parity, node.index);
    let other = node.parity.other();
    let mut boundary_reason = false;
    let mut interface_reason = false;
    for q in mesh.stencil(node.parity, node.index) {
        match q.map(|q| class.kinds(other)[q]) {
            None | Some(NodeKind::Inactive) => boundary_reason = true,
            Some(k) => {
                if k.subdomain() != Some(sub) {
                    interface_reason = true;
                }
            }
        }
    }
    let blocks = if interface_reason { vec![Subdomain::Plus, Subdomain::Minus] } else { vec![sub] };

    let mut required: Vec<[f64; 2]> = vec![p];
    if boundary_reason {
        let b = domain.boundary.as_ref().ok_or_else(|| Error::GeometryResolution {
            node: label(),
            reason: "stencil leaves the computational domain but no boundary is defined".into(),
        })?;
        required.push(b.closest_point(p));
    }
    if interface_reason {
        let i = domain.interface.as_ref().ok_or_else(|| Error::Contract("interface CF node without interface".into()))?;
        required.push(i.closest_point(p));
    }

    let reach = (beta.ceil() as isize).max(3) + 2;
    let mut nearest = vec![];
    for &s in &blocks {
        for parity in [Parity::Primal, Parity::Dual] {
            let c = nearest_hermite(mesh, class, node, parity, s, reach).ok_or_else(|| Error::GeometryResolution {
                node: label(),
                reason: format!("no {parity:?} Hermite node of subdomain {s:?} within {reach} cells"),
            })?;
            nearest.push((s, c));
        }
    }
    let mut need_lo = [f64::INFINITY; 2];
    let mut need_hi = [f64::NEG_INFINITY; 2];
    let mut extend = |x: [f64; 2]| {
        for d in 0..mesh.dims {
            need_lo[d] = need_lo[d].min(x[d]);
            need_hi[d] = need_hi[d].max(x[d]);
        }
    };
    for r in &required {
        extend(*r);
    }
    for (_, c) in &nearest {
        let (lo, hi) = cell_box(mesh, c.center);
        extend(lo);
        extend(hi);
    }

    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    let ell;
    if mesh.dims == 1 {
        lo[0] = need_lo[0];
        hi[0] = need_hi[0];
        ell = hi[0] - lo[0];
    } else {
        let side = beta * mesh.h;
        for d in 0..2 {
            if need_hi[d] - need_lo[d] > side * (1.0 + 1e-12) {
                return Err(Error::GeometryResolution {
                    node: label(),
                    reason: format!("required extent {:.3e} exceeds patch side {:.3e}", need_hi[d] - need_lo[d], side),
                });
            }
            let mut a = p[d] - 0.5 * side;
            if need_lo[d] < a {
                a = need_lo[d];
            }
            if need_hi[d] > a + side {
                a = need_hi[d] - side;
            }
            if !mesh.periodic {
                // keep the box inside the computational domain when possible
                if a < mesh.lo[d] {
                    a = mesh.lo[d];
                }
                if a + side > mesh.hi[d] {
                    a = mesh.hi[d] - side;
                }
                if need_lo[d] < a - 1e-12 * side || need_hi[d] > a + side + 1e-12 * side || a < mesh.lo[d] - 1e-12 {
                    return Err(Error::GeometryResolution {
                        node: label(),
                        reason: "patch cannot fit inside the computational domain".into(),
                    });
                }
            }
            lo[d] = a;
            hi[d] = a + side;
        }
        ell = side;
    }
    for d in 0..mesh.dims {
        if !(p[d] > lo[d] - 1e-12 * mesh.h && p[d] < hi[d] + 1e-12 * mesh.h) {
            return Err(Error::Patch { node: label(), reason: "CF node outside its patch".into() });
        }
    }

    let dt = mesh.dt;
    let window = |parity: Parity| -> (f64, f64, f64) {
        if bootstrap {
            (-0.5 * dt, 0.0, -0.5 * dt)
        } else if parity == node.parity {
            (-0.5 * dt, 0.0, -0.5 * dt)
        } else {
            (-dt, -0.5 * dt, -dt)
        }
    };
    let mut chosen: Vec<(Subdomain, Candidate)> = vec![];
    if rule == RegionRule::Nearest || mesh.dims == 1 {
        chosen = nearest;
    } else {
        for &s in &blocks {
            for parity in [Parity::Primal, Parity::Dual] {
                let off = if parity == Parity::Dual { 0.5 } else { 0.0 };
                let i0 = ((lo[0] - mesh.lo[0]) / mesh.h - off).ceil() as isize;
                let i1 = ((hi[0] - mesh.lo[0]) / mesh.h - off).floor() as isize;
                let j0 = ((lo[1] - mesh.lo[1]) / mesh.h - off).ceil() as isize;
                let j1 = ((hi[1] - mesh.lo[1]) / mesh.h - off).floor() as isize;
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        let Some(idx) = mesh.index(parity, [i, j]) else { continue };
                        if class.kinds(parity)[idx] != NodeKind::Hermite(s) {
                            continue;
                        }
                        let c = mesh.coord_ij(parity, [i, j]);
                        chosen.push((s, Candidate { id: NodeId { parity, index: idx }, center: c, ij: [i, j] }));
                    }
                }
            }
        }
    }

    let clip = |a: [f64; 2], b: [f64; 2]| -> Option<([f64; 2], [f64; 2])> {
        let mut l = a;
        let mut u = b;
        for d in 0..mesh.dims {
            l[d] = a[d].max(lo[d]);
            u[d] = b[d].min(hi[d]);
            if u[d] - l[d] <= 1e-12 * mesh.h {
                return None;
            }
        }
        Some((l, u))
    };

    let mut regions = vec![];
    for (s, c) in &chosen {
        let (t0, t1, launch) = window(c.id.parity);
        let (clo, chi) = cell_box(mesh, c.center);
        if bootstrap && c.id.parity == Parity::Primal {
            // Pieces of the primal Hermite node's cell covered by primal cells
            // (centred at the surrounding dual nodes) launched at t_0.
            let ny = if mesh.dims == 2 { 2 } else { 1 };
            for dy in 0..ny {
                for dx in 0..2 {
                    let ij = [c.ij[0] - 1 + dx, if mesh.dims == 2 { c.ij[1] - 1 + dy } else { 0 }];
                    let Some(didx) = mesh.index(Parity::Dual, ij) else { continue };
                    let corners_ok = mesh
                        .stencil(Parity::Dual, didx)
                        .iter()
                        .all(|q| matches!(q, Some(q) if class.primal[*q] == NodeKind::Hermite(*s) || class.primal[*q] == NodeKind::Cf(*s)));
                    if !corners_ok {
                        continue;
                    }
                    let dc = mesh.coord_ij(Parity::Dual, ij);
                    let mut plo = clo;
                    let mut phi = chi;
                    for d in 0..mesh.dims {
                        if dc[d] < c.center[d] {
                            phi[d] = c.center[d];
                        } else {
                            plo[d] = c.center[d];
                        }
                    }
                    if let Some((l, u)) = clip(plo, phi) {
                        regions.push(HermiteRegion {
                            lo: l,
                            hi: u,
                            t0,
                            t1,
                            launch,
                            cell: NodeId { parity: Parity::Dual, index: didx },
                            center: dc,
                            subdomain: *s,
                        });
                    }
                }
            }
        } else if let Some((l, u)) = clip(clo, chi) {
            regions.push(HermiteRegion { lo: l, hi: u, t0, t1, launch, cell: c.id, center: c.center, subdomain: *s });
        }
    }
    for &s in &blocks {
        for parity in [Parity::Primal, Parity::Dual] {
            let has = regions.iter().any(|r| {
                r.subdomain == s && if bootstrap { true } else { r.cell.parity == parity }
            });
            if !has {
                return Err(Error::GeometryResolution {
                    node: label(),
                    reason: format!("no {parity:?} Hermite region for subdomain {s:?}"),
                });
            }
        }
    }

    let mut boundary_trace = vec![];
    let mut boundary_block = None;
    if let Some(b) = &domain.boundary {
        let found = b.trace_in_box(mesh.dims, lo, hi, n_trace).unwrap_or_default();
        if let Some(first) = found.first() {
            let e = 1e-9 * mesh.h;
            let inside = [first.x[0] - e * first.normal[0], first.x[1] - e * first.normal[1]];
            let adj = domain.locate(inside, 0.0).unwrap_or(Subdomain::Plus);
            if blocks.contains(&adj) {
                boundary_block = Some(adj);
                boundary_trace = found;
            }
        }
    }
    if boundary_reason && boundary_trace.is_empty() {
        return Err(Error::Patch { node: label(), reason: "empty boundary trace".into() });
    }
    let mut interface_trace = vec![];
    if interface_reason {
        interface_trace = domain.interface.as_ref().unwrap().trace_in_box(mesh.dims, lo, hi, n_trace).map_err(|_| {
            Error::Patch { node: label(), reason: "empty interface trace".into() }
        })?;
    }

    let t0 = if bootstrap { -0.5 * dt } else { -dt };
    Ok(LocalPatch {
        node,
        subdomain: sub,
        position: p,
        lo,
        hi,
        t0,
        t1: 0.0,
        ell,
        blocks,
        regions,
        boundary_trace,
        boundary_block,
        interface_trace,
    })
}
