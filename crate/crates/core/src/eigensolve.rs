//! Finite-p Rayleigh minimization, the p-sweep towards the Lipschitz limit,
//! a monotone infinity-harmonic solver and the constructive minimizers built
//! from distance functions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::{GridDomain, ScalarField};
use crate::error::{Error, Result};
use crate::lipcalc::lip_constant;
use crate::metric::{distance_to_boundary, geodesic_from, high_ridge, inner_distance, inradius, RidgeSet};

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    #[serde(skip)]
    pub u: ScalarField,
    pub lambda: f64,
    /// `None` stands for `p = ∞`.
    pub p: Option<f64>,
    pub pde_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct POptions {
    pub max_iter: usize,
    /// Relative weak-residual target.
    pub tol: f64,
    pub memory: usize,
}

impl Default for POptions {
    fn default() -> Self {
        Self { max_iter: 20_000, tol: 1e-3, memory: 8 }
    }
}

/// Forward-difference cells: base node and its `+x` / `+y` neighbors.
struct Cells {
    cells: Vec<(usize, Option<usize>, Option<usize>)>,
    h: f64,
    weight: f64,
    planar: bool,
}

impl Cells {
    fn new(d: &GridDomain) -> Self {
        let cells = (0..d.len())
            .filter_map(|b| {
                let (ix, iy) = d.coords(b);
                let px = d.node_at(ix + 1, iy);
                let py = if d.dim() == 2 { d.node_at(ix, iy + 1) } else { None };
                let touches =
                    d.is_interior(b) || px.is_some_and(|n| d.is_interior(n)) || py.is_some_and(|n| d.is_interior(n));
                touches.then_some((b, px, py))
            })
            .collect();
        Self { cells, h: d.h(), weight: d.h().powi(d.dim() as i32), planar: d.dim() == 2 }
    }

    fn grad(&self, u: &[f64], c: &(usize, Option<usize>, Option<usize>)) -> (f64, f64) {
        let at = |n: Option<usize>| n.map_or(0.0, |n| u[n]);
        let gy = if self.planar { (at(c.2) - u[c.0]) / self.h } else { 0.0 };
        ((at(c.1) - u[c.0]) / self.h, gy)
    }

    /// `(log Q, ∂log Q/∂u, relative residual scale, Q)` for the discrete
    /// quotient `‖∇u‖_p / ‖u‖_p`, evaluated with max-scaled sums.
    fn eval(&self, u: &[f64], p: f64, want_grad: bool) -> (f64, Vec<f64>, f64) {
        let grads: Vec<(f64, f64)> = self.cells.iter().map(|c| self.grad(u, c)).collect();
        let gmax = grads.iter().map(|g| g.0.hypot(g.1)).fold(0.0, f64::max);
        let umax = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gmax == 0.0 || umax == 0.0 {
            return (f64::NEG_INFINITY, vec![0.0; u.len()], 0.0);
        }
        let se: f64 = grads.iter().map(|g| self.weight * (g.0.hypot(g.1) / gmax).powf(p)).sum();
        let sm: f64 = u.iter().map(|v| self.weight * (v.abs() / umax).powf(p)).sum();
        let log_q = gmax.ln() - umax.ln() + (se.ln() - sm.ln()) / p;
        let mut grad = vec![0.0; u.len()];
        if want_grad {
            for (c, g) in self.cells.iter().zip(&grads) {
                let n = g.0.hypot(g.1);
                if n == 0.0 {
                    continue;
                }
                let w = self.weight * (n / gmax).powf(p - 2.0) / (gmax * gmax * se) / self.h;
                grad[c.0] -= w * (g.0 + g.1);
                if let Some(x) = c.1 {
                    grad[x] += w * g.0;
                }
                if let Some(y) = c.2 {
                    grad[y] += w * g.1;
                }
            }
            for (k, v) in u.iter().enumerate() {
                if *v != 0.0 {
                    grad[k] -= self.weight * (v.abs() / umax).powf(p - 2.0) * v / (umax * umax * sm);
                }
            }
        }
        (log_q, grad, umax * sm / self.weight)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::BadP(p));
    }
    Ok(())
}

/// Discrete quotient `‖∇u‖_p / ‖u‖_p` with cell quadrature and forward
/// differences.
pub fn p_quotient(u: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    if u.max_abs() == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(Cells::new(u.domain()).eval(u.values(), p, false).0.exp())
}

/// Node fixing the sign convention: the first high-ridge node.
fn sign_anchor(domain: &Arc<GridDomain>) -> usize {
    high_ridge(&distance_to_boundary(domain), domain.h()).nodes[0]
}

fn normalize(u: &mut [f64], anchor: usize) {
    let m = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let s = if u[anchor] < 0.0 { -1.0 / m } else { 1.0 / m };
    u.iter_mut().for_each(|v| *v *= s);
}

/// Normalized quotient descent for the discrete p-Rayleigh quotient.
pub fn p_eigenpair(domain: &Arc<GridDomain>, p: f64, init: &ScalarField, opts: &POptions) -> Result<EigenReport> {
    check_p(p)?;
    if init.len() != domain.len() {
        return Err(Error::SizeMismatch { expected: domain.len(), got: init.len() });
    }
    if !init.is_zero_trace() {
        return Err(Error::InvalidArgument("initial field must vanish on the boundary".into()));
    }
    if domain.interior_nodes().all(|i| init[i] == 0.0) {
        return Err(Error::ZeroFunction);
    }
    let cells = Cells::new(domain);
    let free: Vec<usize> = domain.interior_nodes().collect();
    let anchor = sign_anchor(domain);
    let mut u = init.values().to_vec();
    normalize(&mut u, anchor);

    let restrict = |g: &[f64]| free.iter().map(|&k| g[k]).collect::<Vec<f64>>();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let residual = |g: &[f64], scale: f64| scale * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let (mut f, full, mut scale) = cells.eval(&u, p, true);
    let mut g = restrict(&full);
    let mut mem: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut iterations = 0;
    let mut res = residual(&g, scale);

    while res > opts.tol && iterations < opts.max_iter {
        // two-loop recursion
        let mut q: Vec<f64> = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match mem.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 0.01 / g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300),
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            mem.clear();
            let step = 0.01 / g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            dir = g.iter().map(|v| -step * v).collect();
            slope = dot(&g, &dir);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let mut trial = u.clone();
            for (k, &n) in free.iter().enumerate() {
                trial[n] += alpha * dir[k];
            }
            let (ft, gt, st) = cells.eval(&trial, p, true);
            if ft.is_finite() && ft <= f + 1e-4 * alpha * slope {
                accepted = Some((trial, ft, gt, st));
                break;
            }
            alpha *= 0.5;
        }
        let Some((mut trial, ft, gt, st)) = accepted else {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            continue;
        };
        iterations += 1;
        let gt = restrict(&gt);
        let s: Vec<f64> = free.iter().map(|&n| trial[n] - u[n]).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();

        // rescale to max|u| = 1; the quotient is 0-homogeneous so s scales
        // with u and the gradient inversely
        let m = trial.iter().map(|v| v.abs()).fold(0.0, f64::max);
        trial.iter_mut().for_each(|v| *v /= m);
        let gt: Vec<f64> = gt.iter().map(|v| v * m).collect();
        for (s_old, y_old, _) in mem.iter_mut() {
            s_old.iter_mut().for_each(|v| *v /= m);
            y_old.iter_mut().for_each(|v| *v *= m);
        }
        let s: Vec<f64> = s.iter().map(|v| v / m).collect();
        let y: Vec<f64> = y.iter().map(|v| v * m).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            mem.push_back((s, y, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        u = trial;
        f = ft;
        g = gt;
        scale = st;
        res = residual(&g, scale);
    }

    normalize(&mut u, anchor);
    let (log_q, full, scale) = cells.eval(&u, p, true);
    let pde_residual = residual(&restrict(&full), scale);
    let _ = f;
    Ok(EigenReport {
        u: ScalarField::new(domain.clone(), u)?,
        lambda: log_q.exp(),
        p: Some(p),
        pde_residual,
        iterations,
        converged: pde_residual <= opts.tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub p: f64,
    pub lambda: f64,
    pub pde_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub inradius: f64,
    /// `|λ_last − 1/r|`.
    pub limit_gap: f64,
    #[serde(skip)]
    pub last: Option<EigenReport>,
}

/// Warm-started sweep over increasing `p`, starting from the distance function.
pub fn p_sweep(domain: &Arc<GridDomain>, ps: &[f64], opts: &POptions) -> Result<SweepReport> {
    if ps.is_empty() {
        return Err(Error::InvalidArgument("empty list of exponents".into()));
    }
    for &p in ps {
        check_p(p)?;
    }
    if ps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("exponents must increase".into()));
    }
    let dist = distance_to_boundary(domain);
    let r = inradius(&dist);
    let mut init = dist;
    let mut entries = Vec::new();
    let mut last = None;
    for &p in ps {
        let rep = p_eigenpair(domain, p, &init, opts)?;
        log::info!(
            "p = {p}: lambda = {:.6}, residual = {:.2e}, {} iterations",
            rep.lambda,
            rep.pde_residual,
            rep.iterations
        );
        entries.push(SweepEntry {
            p,
            lambda: rep.lambda,
            pde_residual: rep.pde_residual,
            iterations: rep.iterations,
            converged: rep.converged,
        });
        init = rep.u.clone();
        last = Some(rep);
    }
    let limit_gap = (entries.last().unwrap().lambda - 1.0 / r).abs();
    Ok(SweepReport { entries, inradius: r, limit_gap, last })
}

#[derive(Clone, Copy, Debug)]
pub struct HarmonicOptions {
    pub max_sweeps: usize,
    pub tol: f64,
    /// Lattice directions used by the midpoint scheme: `max(|dx|,|dy|) ≤ width`.
    pub stencil_width: i64,
}

impl Default for HarmonicOptions {
    fn default() -> Self {
        Self { max_sweeps: 200_000, tol: 1e-8, stencil_width: 2 }
    }
}

/// Lipschitz envelopes of the fixed data, averaged; exact when the data has
/// few distinct values, otherwise the midrange.
fn envelope_start(domain: &GridDomain, fixed: &[(usize, f64)]) -> Vec<f64> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &(n, v) in fixed {
        groups.entry(v.to_bits()).or_default().push(n);
    }
    let (lo, hi) = fixed.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| (a.min(v), b.max(v)));
    if groups.len() > 16 || groups.len() < 2 {
        return vec![0.5 * (lo + hi); domain.len()];
    }
    let dists: Vec<(f64, Vec<f64>)> =
        groups.iter().map(|(bits, nodes)| (f64::from_bits(*bits), geodesic_from(domain, nodes))).collect();
    let mut lip = 0.0f64;
    for (va, da) in &dists {
        for (vb, _) in &dists {
            if vb > va {
                let gap = groups[&vb.to_bits()].iter().map(|&n| da[n]).fold(f64::INFINITY, f64::min);
                lip = lip.max((vb - va) / gap);
            }
        }
    }
    (0..domain.len())
        .map(|x| {
            let up = dists.iter().map(|(v, d)| v + lip * d[x]).fold(f64::INFINITY, f64::min);
            let down = dists.iter().map(|(v, d)| v - lip * d[x]).fold(f64::NEG_INFINITY, f64::max);
            0.5 * (up + down)
        })
        .collect()
}

/// Root of `max_j (u_j − u)/ℓ_j = max_j (u − u_j)/ℓ_j`. Within a length
/// class only the extreme neighbor values matter, and the root is the
/// max-min of the pairwise slope-balancing midpoints.
fn midpoint_update(u: &[f64], classes: &[(f64, Vec<usize>)]) -> f64 {
    let ext: Vec<(f64, f64, f64)> = classes
        .iter()
        .map(|(len, nodes)| {
            let (lo, hi) =
                nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &j| (a.min(u[j]), b.max(u[j])));
            (*len, hi, lo)
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for &(la, hi, _) in &ext {
        let low = ext.iter().map(|&(lb, _, lo)| (lb * hi + la * lo) / (la + lb)).fold(f64::INFINITY, f64::min);
        best = best.max(low);
    }
    best
}

/// Primitive lattice directions with `max(|dx|, |dy|) ≤ width`.
fn directions(dim: usize, width: i64) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let wy = if dim == 1 { 0 } else { width };
    let mut out = Vec::new();
    for dy in -wy..=wy {
        for dx in -width..=width {
            if (dx, dy) != (0, 0) && gcd(dx, dy) == 1 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Neighbors of `node` along the stencil directions, grouped by length.
fn stencil_classes(domain: &GridDomain, node: usize, dirs: &[(i64, i64)]) -> Vec<(f64, Vec<usize>)> {
    let (ix, iy) = domain.coords(node);
    let mut classes: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &(dx, dy) in dirs {
        if let Some(j) = domain.node_at(ix + dx, iy + dy) {
            classes.entry(dx * dx + dy * dy).or_default().push(j);
        }
    }
    classes.into_iter().map(|(sq, nodes)| (domain.h() * (sq as f64).sqrt(), nodes)).collect()
}

/// Infinity-harmonic extension of fixed nodal data via the monotone
/// midpoint scheme, symmetric Gauss–Seidel to a sup-change tolerance.
pub fn infinity_harmonic(
    domain: &Arc<GridDomain>,
    fixed: &[usize],
    values: &[f64],
    opts: &HarmonicOptions,
) -> Result<(ScalarField, usize)> {
    if fixed.len() != values.len() {
        return Err(Error::SizeMismatch { expected: fixed.len(), got: values.len() });
    }
    let mut is_fixed = vec![false; domain.len()];
    let mut data = Vec::with_capacity(fixed.len());
    for (&n, &v) in fixed.iter().zip(values) {
        if n >= domain.len() || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("bad fixed datum at node {n}")));
        }
        is_fixed[n] = true;
        data.push((n, v));
    }
    if domain.boundary_nodes().any(|b| !is_fixed[b]) {
        return Err(Error::InvalidArgument("every boundary node must be fixed".into()));
    }
    let mut u = envelope_start(domain, &data);
    for &(n, v) in &data {
        u[n] = v;
    }
    let free: Vec<usize> = (0..domain.len()).filter(|&i| !is_fixed[i]).collect();
    if opts.stencil_width < 1 {
        return Err(Error::InvalidArgument("stencil width must be at least 1".into()));
    }
    let dirs = directions(domain.dim(), opts.stencil_width);
    let nbrs: Vec<Vec<(f64, Vec<usize>)>> = free.iter().map(|&i| stencil_classes(domain, i, &dirs)).collect();
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let mut change = 0.0f64;
        let order: Box<dyn Iterator<Item = usize>> =
            if sweeps % 2 == 0 { Box::new(0..free.len()) } else { Box::new((0..free.len()).rev()) };
        for k in order {
            let v = midpoint_update(&u, &nbrs[k]);
            change = change.max((v - u[free[k]]).abs());
            u[free[k]] = v;
        }
        sweeps += 1;
        if change <= opts.tol {
            return Ok((ScalarField::new(domain.clone(), u)?, sweeps));
        }
    }
    Err(Error::SolverFailure(format!("infinity-harmonic iteration did not settle in {sweeps} sweeps")))
}

/// Sign-changing Lipschitz minimizer: `clamp(r − dist(x, ridge), −d_Ω, d_Ω)`.
/// It equals the inner distance on the generalized inball and is negative
/// outside it.
///
/// The domain is stadium-like, and no such minimizer exists, when every
/// Interior node lies within Euclidean distance `r` of a ridge node. The
/// test is Euclidean because chamfer distances leave thin artificial pockets
/// around curved ridge ends.
pub fn construct_sign_changing(domain: &Arc<GridDomain>, ridge: &RidgeSet, r: f64) -> Result<ScalarField> {
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("inradius must be positive, got {r}")));
    }
    let reach = r * r * (1.0 + 1e-9);
    let pts: Vec<[f64; 2]> = ridge.nodes.iter().map(|&i| domain.position(i)).collect();
    let near = |x: [f64; 2]| pts.iter().any(|p| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) < reach);
    if domain.interior_nodes().all(|i| near(domain.position(i))) {
        return Err(Error::StadiumDomain);
    }
    let to_ridge = geodesic_from(domain, &ridge.nodes);
    let dist = distance_to_boundary(domain);
    let vals = (0..domain.len()).map(|i| (r - to_ridge[i]).clamp(-dist[i], dist[i])).collect();
    ScalarField::new(domain.clone(), vals)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub below_dmax: bool,
    /// Only evaluated when the argmax of `|u|` lies on the high ridge.
    pub above_din: Option<bool>,
    pub argmax_on_ridge: bool,
}

/// Envelope `d_in ≤ |u| ≤ d_Ω` (with `2h` slack) for a unit-Lipschitz field.
pub fn check_envelope(u: &ScalarField) -> Result<EnvelopeReport> {
    let lip = lip_constant(u);
    if (lip - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(lip));
    }
    let d = u.domain();
    let slack = 2.0 * d.h() * (1.0 + 1e-12);
    let dist = distance_to_boundary(d);
    let below_dmax = (0..d.len()).all(|i| u[i].abs() <= dist[i] + slack);
    let ridge = high_ridge(&dist, d.h());
    let m = u.max_abs();
    let on_ridge: std::collections::HashSet<usize> = ridge.nodes.iter().copied().collect();
    let argmax_on_ridge = (0..d.len()).filter(|&i| u[i].abs() >= m * (1.0 - 1e-12)).all(|i| on_ridge.contains(&i));
    let above_din = if argmax_on_ridge {
        let din = inner_distance(d, &ridge, inradius(&dist))?;
        Some((0..d.len()).all(|i| din[i] <= u[i].abs() + slack))
    } else {
        None
    };
    Ok(EnvelopeReport { below_dmax, above_din, argmax_on_ridge })
}
