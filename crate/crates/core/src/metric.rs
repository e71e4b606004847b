//! Geodesic distance transforms on the stencil graph and the distance-function
//! geometry derived from them: inradius, high ridge, generalized inball and
//! inner distance function.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::{GridDomain, ScalarField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dist(pub f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Multi-source Dijkstra; equal keys pop in node-index order.
pub(crate) fn geodesic_from(domain: &GridDomain, seeds: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; domain.len()];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            heap.push(Reverse((Dist(0.0), s)));
        }
    }
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in domain.neighbors(v) {
            let nd = d + domain.edges()[e].len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    dist
}

/// Graph-geodesic distance from every node to the Boundary node set.
pub fn distance_to_boundary(domain: &Arc<GridDomain>) -> ScalarField {
    let seeds: Vec<usize> = domain.boundary_nodes().collect();
    ScalarField::new(domain.clone(), geodesic_from(domain, &seeds)).expect("every node reaches the boundary")
}

pub fn distance_to_set(domain: &Arc<GridDomain>, seeds: &[usize]) -> Result<ScalarField> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    if let Some(&s) = seeds.iter().find(|&&s| s >= domain.len()) {
        return Err(Error::InvalidArgument(format!("seed {s} is not a domain node")));
    }
    let d = geodesic_from(domain, seeds);
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("some nodes cannot reach the seed set".into()));
    }
    ScalarField::new(domain.clone(), d)
}

/// Discrete inradius: the largest value of a boundary distance field.
pub fn inradius(dist: &ScalarField) -> f64 {
    dist.max()
}

/// Nodes whose distance value lies within `tol` of the maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RidgeSet {
    pub nodes: Vec<usize>,
    pub tol: f64,
}

impl RidgeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn high_ridge(dist: &ScalarField, tol: f64) -> RidgeSet {
    let top = dist.max();
    let nodes = (0..dist.len()).filter(|&i| dist[i] >= top - tol.max(0.0)).collect();
    RidgeSet { nodes, tol: tol.max(0.0) }
}

/// `{x : dist(x, ridge) < r}`.
pub fn generalized_inball(domain: &Arc<GridDomain>, ridge: &RidgeSet, r: f64) -> Result<Vec<usize>> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidArgument(format!("inball radius {r} must be positive")));
    }
    let d = distance_to_set(domain, &ridge.nodes)?;
    Ok((0..d.len()).filter(|&i| d[i] < r).collect())
}

/// Both constructions of the inner distance function and their sup gap.
#[derive(Clone, Debug)]
pub struct InnerDistance {
    /// `max(r - dist(x, ridge), 0)`, capped by the boundary distance.
    pub field: ScalarField,
    /// Boundary distance of the generalized inball, extended by zero.
    pub inball_transform: ScalarField,
    pub gap: f64,
}

pub fn inner_distance_routes(domain: &Arc<GridDomain>, ridge: &RidgeSet, r: f64) -> Result<InnerDistance> {
    let to_ridge = distance_to_set(domain, &ridge.nodes)?;
    let to_bdry = distance_to_boundary(domain);
    let cone = to_ridge.zip_with(&to_bdry, |dr, db| (r - dr).max(0.0).min(db))?;

    let inside: Vec<bool> = (0..domain.len()).map(|i| to_ridge[i] < r && !domain.is_boundary(i)).collect();
    let outside: Vec<usize> = (0..domain.len()).filter(|&i| !inside[i]).collect();
    let transform = if outside.is_empty() {
        ScalarField::zeros(domain.clone())
    } else {
        let t = geodesic_from(domain, &outside);
        ScalarField::new(domain.clone(), t.iter().zip(&inside).map(|(&v, &ins)| if ins { v } else { 0.0 }).collect())?
    };
    let gap = cone.sup_distance(&transform)?;
    Ok(InnerDistance { field: cone, inball_transform: transform, gap })
}

/// Inner distance function; fails when the two constructions disagree by more
/// than `2h`, which indicates a bad ridge.
pub fn inner_distance(domain: &Arc<GridDomain>, ridge: &RidgeSet, r: f64) -> Result<ScalarField> {
    let routes = inner_distance_routes(domain, ridge, r)?;
    let allowed = 2.0 * domain.h() * (1.0 + 1e-9);
    if routes.gap > allowed {
        return Err(Error::CrossCheckFailure { gap: routes.gap, allowed });
    }
    Ok(routes.field)
}
