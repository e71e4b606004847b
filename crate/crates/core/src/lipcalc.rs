//! Graph slope calculus: local slopes, the Lipschitz Rayleigh quotient and the
//! two maximal sets of a field (by modulus and by mollified slope).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, ScalarField};
use crate::error::{Error, Result};

/// Per-node maximum incident-edge slope.
#[derive(Clone, Debug)]
pub struct SlopeField(pub Vec<f64>);

impl SlopeField {
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

pub fn local_slope(u: &ScalarField) -> SlopeField {
    let d = u.domain();
    let v = u.values();
    let s = (0..d.len())
        .map(|i| d.neighbors(i).iter().map(|&(j, e)| (v[i] - v[j]).abs() / d.edges()[e].len).fold(0.0, f64::max))
        .collect();
    SlopeField(s)
}

/// Graph-Lipschitz constant; the discrete `J∞`.
pub fn lip_constant(u: &ScalarField) -> f64 {
    let v = u.values();
    u.domain().edges().iter().map(|e| (v[e.a] - v[e.b]).abs() / e.len).fold(0.0, f64::max)
}

pub fn rayleigh(u: &ScalarField) -> Result<f64> {
    let m = u.max_abs();
    if m == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(lip_constant(u) / m)
}

/// `{x : |u(x)| ≥ max|u| − tol}`.
pub fn omega_max_abs(u: &ScalarField, tol: f64) -> Result<Vec<usize>> {
    let m = u.max_abs();
    if m == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok((0..u.len()).filter(|&i| u[i].abs() >= m - tol).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Box,
    Triangle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSchedule {
    pub radii: Vec<f64>,
    pub kernel: Kernel,
}

impl MollifierSchedule {
    pub fn new(radii: Vec<f64>, kernel: Kernel, h: f64) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidArgument("mollifier schedule is empty".into()));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("mollifier radii must strictly decrease".into()));
        }
        if radii.iter().any(|&r| r < h * (1.0 - 1e-12)) {
            return Err(Error::InvalidArgument(format!("mollifier radii must be at least h = {h}")));
        }
        Ok(Self { radii, kernel })
    }

    /// `{8h, 4h, 2h}`, box kernel.
    pub fn default_for(h: f64) -> Self {
        Self { radii: vec![8.0 * h, 4.0 * h, 2.0 * h], kernel: Kernel::Box }
    }

    pub fn from_multiples(multiples: &[f64], kernel: Kernel, h: f64) -> Result<Self> {
        Self::new(multiples.iter().map(|m| m * h).collect(), kernel, h)
    }
}

/// Lattice offsets with chamfer length at most `radius`, with kernel weights.
fn kernel_offsets(domain: &GridDomain, radius: f64, kernel: Kernel) -> Vec<(i64, i64, f64)> {
    let h = domain.h();
    let k = (radius / h + 1e-9).floor() as i64;
    let ky = if domain.dim() == 1 { 0 } else { k };
    let mut out = Vec::new();
    for dy in -ky..=ky {
        for dx in -k..=k {
            let (a, b) = (dx.abs().max(dy.abs()) as f64, dx.abs().min(dy.abs()) as f64);
            let len = h * (a - b + b * std::f64::consts::SQRT_2);
            if len <= radius * (1.0 + 1e-12) {
                let w = match kernel {
                    Kernel::Box => 1.0,
                    Kernel::Triangle => 1.0 - len / (radius + h),
                };
                out.push((dx, dy, w));
            }
        }
    }
    out
}

/// Value of `u` at any lattice point: active nodes directly, other points by
/// odd reflection through the Euclidean-nearest Boundary node.
struct Extension<'a> {
    u: &'a ScalarField,
    /// Boundary lattice coordinates bucketed on a coarse grid.
    buckets: HashMap<(i64, i64), Vec<(i64, i64)>>,
    size: i64,
}

impl<'a> Extension<'a> {
    fn new(u: &'a ScalarField) -> Self {
        let d = u.domain();
        let size = 8;
        let mut buckets: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
        for b in d.boundary_nodes() {
            let (bx, by) = d.coords(b);
            buckets.entry((bx.div_euclid(size), by.div_euclid(size))).or_default().push((bx, by));
        }
        Self { u, buckets, size }
    }

    fn nearest_boundary(&self, ix: i64, iy: i64) -> (i64, i64) {
        let (cx, cy) = (ix.div_euclid(self.size), iy.div_euclid(self.size));
        let mut best: Option<(i64, (i64, i64))> = None;
        for ring in 0.. {
            // every point of ring k is at least (k-1)*size away
            if let Some((d2, _)) = best {
                let reach = (ring - 1).max(0) * self.size;
                if reach * reach > d2 {
                    break;
                }
            }
            for by in cy - ring..=cy + ring {
                for bx in cx - ring..=cx + ring {
                    if (bx - cx).abs() != ring && (by - cy).abs() != ring {
                        continue;
                    }
                    for &(px, py) in self.buckets.get(&(bx, by)).into_iter().flatten() {
                        let d2 = (px - ix).pow(2) + (py - iy).pow(2);
                        if best.is_none_or(|(b, bp)| (d2, (py, px)) < (b, (bp.1, bp.0))) {
                            best = Some((d2, (px, py)));
                        }
                    }
                }
            }
        }
        best.expect("domain has boundary nodes").1
    }

    fn at(&self, ix: i64, iy: i64) -> f64 {
        let d = self.u.domain();
        if let Some(n) = d.node_at(ix, iy) {
            return self.u[n];
        }
        let (bx, by) = self.nearest_boundary(ix, iy);
        let ub = self.u[d.node_at(bx, by).unwrap()];
        match d.node_at(2 * bx - ix, 2 * by - iy) {
            Some(m) => 2.0 * ub - self.u[m],
            None => ub,
        }
    }
}

/// Kernel average over the chamfer ball of `radius`, scaled down if needed so
/// the Lipschitz constant never exceeds that of `u`.
pub fn mollify(u: &ScalarField, radius: f64, kernel: Kernel) -> Result<ScalarField> {
    let d = u.domain();
    if radius < d.h() * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("mollifier radius {radius} is below h = {}", d.h())));
    }
    let offs = kernel_offsets(d, radius, kernel);
    let wsum: f64 = offs.iter().map(|o| o.2).sum();
    let ext = Extension::new(u);
    let vals: Vec<f64> = (0..d.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = d.coords(i);
            offs.iter().map(|&(dx, dy, w)| w * ext.at(ix + dx, iy + dy)).sum::<f64>() / wsum
        })
        .collect();
    let m = ScalarField::new(d.clone(), vals)?;
    let (ju, jm) = (lip_constant(u), lip_constant(&m));
    Ok(if jm > ju { m.scaled(ju / jm) } else { m })
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaMaxReport {
    pub nodes: Vec<usize>,
    pub lip: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
    /// `slopes[k][node]`: mollified slope at the k-th radius.
    #[serde(skip)]
    pub slopes: Vec<Vec<f64>>,
}

/// Number of trailing radii at which a node's mollified slope must clear the
/// threshold.
const CONFIRMING_RADII: usize = 2;

/// Interior nodes whose mollified slope stays at least `(1 − delta)·J∞(u)` on
/// the finest radii of the schedule.
pub fn omega_max_grad(u: &ScalarField, schedule: &MollifierSchedule, delta: f64) -> Result<OmegaMaxReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} must lie in (0, 1)")));
    }
    let lip = lip_constant(u);
    if lip == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let slopes: Vec<Vec<f64>> = schedule
        .radii
        .iter()
        .map(|&r| mollify(u, r, schedule.kernel).map(|m| local_slope(&m).0))
        .collect::<Result<_>>()?;
    let threshold = (1.0 - delta) * lip;
    let tail = &slopes[slopes.len().saturating_sub(CONFIRMING_RADII)..];
    let nodes = u.domain().interior_nodes().filter(|&i| tail.iter().all(|s| s[i] >= threshold)).collect();
    Ok(OmegaMaxReport { nodes, lip, threshold, radii: schedule.radii.clone(), slopes })
}

/// The mountain-ridge field `(1 − 2|x| + x²)·ψ(y)` on the square.
pub fn mountain_ridge(x: [f64; 2]) -> f64 {
    let phi = 1.0 - 2.0 * x[0].abs() + x[0] * x[0];
    let y = x[1];
    let psi = if y.abs() <= 0.5 { 1.0 } else { 2.0 * (1.0 - y.abs()) };
    phi * psi.max(0.0)
}
