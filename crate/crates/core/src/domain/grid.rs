//! Rasterized domains: a rectangular lattice whose nodes are tagged Interior,
//! Boundary or Exterior, together with the 8-neighbor (2-neighbor in 1D) graph
//! on the Interior and Boundary nodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::io::read_pgm;
use super::shape::ShapeSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Lower active index.
    pub a: usize,
    /// Higher active index; positive flux runs from `a` to `b`.
    pub b: usize,
    pub len: f64,
}

const OFFSETS_1D: [(i64, i64); 2] = [(-1, 0), (1, 0)];
const OFFSETS_2D: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Clone, Debug)]
pub struct GridDomain {
    dim: usize,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    h: f64,
    class: Vec<NodeClass>,
    /// lattice index of every active (Interior or Boundary) node, increasing
    active: Vec<usize>,
    lattice_to_active: Vec<usize>,
    edges: Vec<Edge>,
    adj_start: Vec<usize>,
    adj: Vec<(usize, usize)>,
    shape: Option<ShapeSpec>,
}

pub const NONE: usize = usize::MAX;

impl GridDomain {
    /// Builds a domain from an Interior predicate on an `nx × ny` lattice.
    /// Boundary nodes are the non-interior stencil neighbors of interior
    /// nodes; the lattice is then cropped to the active nodes.
    pub fn from_interior(
        dim: usize,
        nx: usize,
        ny: usize,
        origin: [f64; 2],
        h: f64,
        interior: &[bool],
        shape: Option<ShapeSpec>,
    ) -> Result<Arc<Self>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing h = {h} must be positive")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("dimension {dim} not supported")));
        }
        assert_eq!(interior.len(), nx * ny);
        if !interior.iter().any(|&b| b) {
            return Err(Error::EmptyInterior);
        }
        let offsets: &[(i64, i64)] = if dim == 1 { &OFFSETS_1D } else { &OFFSETS_2D };
        let mut class = vec![NodeClass::Exterior; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                if interior[k] {
                    class[k] = NodeClass::Interior;
                    continue;
                }
                let touches = offsets.iter().any(|&(dx, dy)| {
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    jx >= 0
                        && jy >= 0
                        && (jx as usize) < nx
                        && (jy as usize) < ny
                        && interior[jy as usize * nx + jx as usize]
                });
                if touches {
                    class[k] = NodeClass::Boundary;
                }
            }
        }
        // an interior node on the lattice rim would have missing neighbors
        for iy in 0..ny {
            for ix in 0..nx {
                if class[iy * nx + ix] == NodeClass::Interior
                    && (ix == 0 || ix + 1 == nx || (dim == 2 && (iy == 0 || iy + 1 == ny)))
                {
                    return Err(Error::InvalidArgument("interior node on the lattice rim".into()));
                }
            }
        }
        // crop to active bounding box
        let (mut x0, mut x1, mut y0, mut y1) = (nx, 0, ny, 0);
        for iy in 0..ny {
            for ix in 0..nx {
                if class[iy * nx + ix] != NodeClass::Exterior {
                    x0 = x0.min(ix);
                    x1 = x1.max(ix);
                    y0 = y0.min(iy);
                    y1 = y1.max(iy);
                }
            }
        }
        let (cnx, cny) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut cropped = Vec::with_capacity(cnx * cny);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                cropped.push(class[iy * nx + ix]);
            }
        }
        let origin = [origin[0] + x0 as f64 * h, if dim == 1 { 0.0 } else { origin[1] + y0 as f64 * h }];
        Ok(Arc::new(Self::assemble(dim, cnx, cny, origin, h, cropped, shape)))
    }

    fn assemble(
        dim: usize,
        nx: usize,
        ny: usize,
        origin: [f64; 2],
        h: f64,
        class: Vec<NodeClass>,
        shape: Option<ShapeSpec>,
    ) -> Self {
        let mut active = Vec::new();
        let mut lattice_to_active = vec![NONE; nx * ny];
        for (k, c) in class.iter().enumerate() {
            if *c != NodeClass::Exterior {
                lattice_to_active[k] = active.len();
                active.push(k);
            }
        }
        let forward: &[(i64, i64)] = if dim == 1 { &[(1, 0)] } else { &[(1, 0), (-1, 1), (0, 1), (1, 1)] };
        let mut edges = Vec::new();
        for (a, &k) in active.iter().enumerate() {
            let (ix, iy) = ((k % nx) as i64, (k / nx) as i64);
            for &(dx, dy) in forward {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < 0 || jy < 0 || jx as usize >= nx || jy as usize >= ny {
                    continue;
                }
                let b = lattice_to_active[jy as usize * nx + jx as usize];
                if b == NONE {
                    continue;
                }
                let len = if dx != 0 && dy != 0 { h * std::f64::consts::SQRT_2 } else { h };
                debug_assert!(a < b);
                edges.push(Edge { a, b, len });
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let n = active.len();
        let mut deg = vec![0usize; n + 1];
        for e in &edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        let mut adj_start = vec![0usize; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + deg[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0usize, 0usize); adj_start[n]];
        for (id, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, id);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, id);
            fill[e.b] += 1;
        }
        for i in 0..n {
            adj[adj_start[i]..adj_start[i + 1]].sort_unstable();
        }
        Self { dim, nx, ny, origin, h, class, active, lattice_to_active, edges, adj_start, adj, shape }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lattice_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> Option<&ShapeSpec> {
        self.shape.as_ref()
    }

    /// Number of Interior and Boundary nodes; fields carry one value per such node.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn lattice_class(&self) -> &[NodeClass] {
        &self.class
    }

    pub fn class(&self, node: usize) -> NodeClass {
        self.class[self.active[node]]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.class(node) == NodeClass::Boundary
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.class(node) == NodeClass::Interior
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_interior(i))
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_boundary(i))
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes().count()
    }

    /// Lattice coordinates `(ix, iy)` of an active node.
    pub fn coords(&self, node: usize) -> (i64, i64) {
        let k = self.active[node];
        ((k % self.nx) as i64, (k / self.nx) as i64)
    }

    pub fn node_at(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        let a = self.lattice_to_active[iy as usize * self.nx + ix as usize];
        (a != NONE).then_some(a)
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(node);
        [self.origin[0] + ix as f64 * self.h, self.origin[1] + iy as f64 * self.h]
    }

    pub fn lattice_position(&self, ix: i64, iy: i64) -> [f64; 2] {
        [self.origin[0] + ix as f64 * self.h, self.origin[1] + iy as f64 * self.h]
    }

    /// Active node closest to `x` (ties to the lower index).
    pub fn nearest_node(&self, x: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let p = self.position(i);
            let d = (p[0] - x[0]).hypot(p[1] - x[1]);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, edge id)` pairs, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_start[node]..self.adj_start[node + 1]]
    }

    /// Id of the edge joining `a` and `b`, if they are stencil neighbors.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let nb = self.neighbors(a);
        nb.binary_search_by_key(&b, |&(n, _)| n).ok().map(|k| nb[k].1)
    }

    /// Stencil offsets in lattice units, with their lengths in domain units.
    pub fn stencil(&self) -> Vec<((i64, i64), f64)> {
        let offs: &[(i64, i64)] = if self.dim == 1 { &OFFSETS_1D } else { &OFFSETS_2D };
        offs.iter()
            .map(|&(dx, dy)| ((dx, dy), if dx != 0 && dy != 0 { self.h * std::f64::consts::SQRT_2 } else { self.h }))
            .collect()
    }

    /// Longest lattice extent in domain units; used as a graph-diameter bound.
    pub fn diameter_bound(&self) -> f64 {
        (self.nx + self.ny) as f64 * self.h * std::f64::consts::SQRT_2
    }
}

/// Rasterizes a shape: a lattice node is Interior when it lies inside the
/// shape with clearance at least `h/2` from the boundary curve.
pub fn rasterize(shape: &ShapeSpec, h: f64) -> Result<Arc<GridDomain>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid spacing h = {h} must be positive")));
    }
    shape.validate()?;
    if let ShapeSpec::CustomMask { path } = shape {
        let img = read_pgm(path)?;
        let (nx, ny) = (img.width + 2, img.height + 2);
        let mut interior = vec![false; nx * ny];
        for r in 0..img.height {
            for c in 0..img.width {
                interior[(r + 1) * nx + c + 1] = img.pixels[r * img.width + c] > 0;
            }
        }
        return GridDomain::from_interior(2, nx, ny, [-h, -h], h, &interior, Some(shape.clone()));
    }
    let (lo, hi) = shape.bounding_box()?;
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
        return Err(Error::BadShape("bounding box is not finite".into()));
    }
    let pad = 2usize;
    let span = |k: usize| ((hi[k] - lo[k]) / h - 1e-9).ceil().max(0.0) as usize + 1 + 2 * pad;
    let dim = shape.dim();
    let nx = span(0);
    let ny = if dim == 1 { 1 } else { span(1) };
    let origin = [lo[0] - pad as f64 * h, if dim == 1 { 0.0 } else { lo[1] - pad as f64 * h }];
    let clearance = 0.5 * h * (1.0 - 1e-12);
    let mut interior = vec![false; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let x = [origin[0] + ix as f64 * h, origin[1] + iy as f64 * h];
            interior[iy * nx + ix] = shape.signed_distance(x)? >= clearance;
        }
    }
    GridDomain::from_interior(dim, nx, ny, origin, h, &interior, Some(shape.clone()))
}
