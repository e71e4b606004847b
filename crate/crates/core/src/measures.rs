//! Nodal measures and edge fluxes: weak divergence, the duality-map and
//! calibration membership checks, the ball calibration and the diagnostics
//! assembling the eigenvalue system.
//!
//! Sign convention: `weak_divergence` is inflow minus outflow, i.e. the
//! discrete `−div σ`, so `Σ φ·wdiv = Σ_e flux_e (φ(b) − φ(a))`. A calibration
//! of `u` therefore carries mass uphill.

use std::fmt::Write as _;
use std::ops::Index;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::io::{node_csv, parse_node_csv, read_text, write_text};
use crate::domain::{GridDomain, ScalarField, ShapeSpec};
use crate::error::{Error, Result};
use crate::lipcalc::{lip_constant, omega_max_abs, omega_max_grad, MollifierSchedule};
use crate::metric::geodesic_from;

#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    domain: Arc<GridDomain>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(domain: Arc<GridDomain>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != domain.len() {
            return Err(Error::SizeMismatch { expected: domain.len(), got: weights.len() });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight at node {i} is not finite")));
        }
        Ok(Self { domain, weights })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let n = domain.len();
        Self { domain, weights: vec![0.0; n] }
    }

    pub fn dirac(domain: Arc<GridDomain>, node: usize, mass: f64) -> Self {
        let mut m = Self::zeros(domain);
        m.weights[node] = mass;
        m
    }

    /// Non-negative weights summing to one.
    pub fn probability(domain: Arc<GridDomain>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(domain, weights)?;
        if let Some(node) = m.weights.iter().position(|&w| w < 0.0) {
            return Err(Error::SignedMeasure { node, weight: m.weights[node] });
        }
        let total = m.total_mass();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        Ok(m)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] != 0.0).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: self.domain.clone(), weights: self.weights.iter().map(|w| c * w).collect() }
    }

    /// `⟨μ, u⟩`.
    pub fn pair(&self, u: &ScalarField) -> Result<f64> {
        self.check_len(u.len())?;
        Ok(self.weights.iter().zip(u.values()).map(|(w, v)| w * v).sum())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: n });
        }
        Ok(())
    }
}

impl Index<usize> for DiscreteMeasure {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// Signed mass per undirected edge, positive from the lower to the higher
/// node index.
#[derive(Clone, Debug)]
pub struct EdgeFlux {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl EdgeFlux {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.edges().len() {
            return Err(Error::SizeMismatch { expected: domain.edges().len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("flux values must be finite".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let n = domain.edges().len();
        Self { domain, values: vec![0.0; n] }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Adds `mass` flowing from node `from` to its neighbor `to`.
    pub fn push(&mut self, from: usize, to: usize, mass: f64) -> Result<()> {
        let e = self
            .domain
            .edge_between(from, to)
            .ok_or_else(|| Error::InvalidArgument(format!("nodes {from} and {to} are not adjacent")))?;
        self.values[e] += if from < to { mass } else { -mass };
        Ok(())
    }

    /// `Σ |flux|·len`, the discrete `|σ|(Ω)`.
    pub fn total_variation(&self) -> f64 {
        self.values.iter().zip(self.domain.edges()).map(|(f, e)| f.abs() * e.len).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: self.domain.clone(), values: self.values.iter().map(|f| c * f).collect() }
    }
}

/// Inflow minus outflow at every node.
pub fn weak_divergence(flux: &EdgeFlux) -> DiscreteMeasure {
    let mut w = vec![0.0; flux.domain.len()];
    for (f, e) in flux.values.iter().zip(flux.domain.edges()) {
        w[e.b] += f;
        w[e.a] -= f;
    }
    DiscreteMeasure { domain: flux.domain.clone(), weights: w }
}

/// `⟨−div σ, u⟩ = Σ_e flux_e (u(b) − u(a))`.
pub fn pairing(u: &ScalarField, flux: &EdgeFlux) -> Result<f64> {
    if u.len() != flux.domain.len() {
        return Err(Error::SizeMismatch { expected: flux.domain.len(), got: u.len() });
    }
    Ok(flux.values.iter().zip(flux.domain.edges()).map(|(f, e)| f * (u[e.b] - u[e.a])).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityMapReport {
    pub mass: f64,
    pub mass_ok: bool,
    /// `|μ|` outside `{|u| ≥ (1 − tol)‖u‖∞}`.
    pub off_support_mass: f64,
    pub support_ok: bool,
    /// Largest `|μ_x − (u_x/‖u‖∞)|μ_x||`, relative to `|μ|(Ω)`.
    pub polar_violation: f64,
    pub polar_ok: bool,
    pub pass: bool,
}

/// Membership of `mu` in the duality map of `u`.
pub fn duality_map_check(u: &ScalarField, mu: &DiscreteMeasure, tol: f64) -> Result<DualityMapReport> {
    mu.check_len(u.len())?;
    let m = u.max_abs();
    if m == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let mass = mu.total_variation();
    let mass_ok = (mass - 1.0).abs() <= tol;
    let mut allowed = vec![false; u.len()];
    omega_max_abs(u, tol * m)?.into_iter().for_each(|i| allowed[i] = true);
    let off_support_mass: f64 = (0..u.len()).filter(|&i| !allowed[i]).map(|i| mu[i].abs()).sum();
    let support_ok = off_support_mass == 0.0;
    let polar_violation =
        (0..u.len()).map(|i| (mu[i] - u[i] / m * mu[i].abs()).abs()).fold(0.0, f64::max) / mass.max(f64::MIN_POSITIVE);
    let polar_ok = polar_violation <= tol;
    Ok(DualityMapReport {
        mass,
        mass_ok,
        off_support_mass,
        support_ok,
        polar_violation,
        polar_ok,
        pass: mass_ok && support_ok && polar_ok,
    })
}

/// Nodes of `Ω_max(u)` under the default schedule, dilated by the largest
/// radius the acceptance rule inspects.
fn omega_max_region(u: &ScalarField) -> Result<Vec<bool>> {
    let d = u.domain();
    let sched = MollifierSchedule::default_for(d.h());
    let rep = omega_max_grad(u, &sched, 0.05)?;
    let radius = sched.radii[sched.radii.len().saturating_sub(2)];
    if rep.nodes.is_empty() {
        return Ok(vec![false; d.len()]);
    }
    let dist = geodesic_from(d, &rep.nodes);
    Ok(dist.iter().map(|&t| t <= radius * (1.0 + 1e-12)).collect())
}

/// Flux mass (`|f|·len`) on edges leaving `region`.
fn mass_outside(flux: &EdgeFlux, region: &[bool]) -> f64 {
    flux.values
        .iter()
        .zip(flux.domain.edges())
        .filter(|(f, e)| **f != 0.0 && !(region[e.a] && region[e.b]))
        .map(|(f, e)| f.abs() * e.len)
        .sum()
}

/// Flux mass on support edges that run downhill or whose slope falls below
/// `(1 − tol)·lip`, plus the smallest signed slope ratio seen.
fn misaligned_mass(u: &ScalarField, flux: &EdgeFlux, lip: f64, tol: f64) -> (f64, f64) {
    let mut bad = 0.0;
    let mut worst = f64::INFINITY;
    for (f, e) in flux.values.iter().zip(flux.domain.edges()) {
        if *f == 0.0 {
            continue;
        }
        let slope = f.signum() * (u[e.b] - u[e.a]) / e.len;
        worst = worst.min(slope / lip);
        if slope < (1.0 - tol) * lip {
            bad += f.abs() * e.len;
        }
    }
    (bad, if worst.is_finite() { worst } else { 1.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub total_variation: f64,
    pub tv_ok: bool,
    pub pairing: f64,
    pub lip: f64,
    pub pairing_ok: bool,
    pub off_support_mass: f64,
    pub support_ok: bool,
    /// Mass on edges violating sign or slope alignment.
    pub misaligned_mass: f64,
    /// Smallest `sign(flux)·slope / J∞(u)` over support edges.
    pub worst_alignment: f64,
    pub alignment_ok: bool,
    pub pass: bool,
}

/// Whether `flux` is a calibration of `u`: unit mass, pairing equal to
/// `J∞(u)`, support in `Ω_max(u)` and edge-wise alignment with maximal slope.
/// Support and alignment pass when the violating mass is at most `tol·|σ|`.
pub fn calibration_check(u: &ScalarField, flux: &EdgeFlux, tol: f64) -> Result<CalibrationReport> {
    let lip = lip_constant(u);
    if lip == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let tv = flux.total_variation();
    let pair = pairing(u, flux)?;
    let region = omega_max_region(u)?;
    let off = mass_outside(flux, &region);
    let (bad, worst) = misaligned_mass(u, flux, lip, tol);
    let tv_ok = tv <= 1.0 + tol;
    let pairing_ok = (pair - lip).abs() <= tol * lip;
    let support_ok = off <= tol * tv;
    let alignment_ok = bad <= tol * tv;
    Ok(CalibrationReport {
        total_variation: tv,
        tv_ok,
        pairing: pair,
        lip,
        pairing_ok,
        off_support_mass: off,
        support_ok,
        misaligned_mass: bad,
        worst_alignment: worst,
        alignment_ok,
        pass: tv_ok && pairing_ok && support_ok && alignment_ok,
    })
}

/// Calibration of the distance function of a disk: `ν = δ` at the center and
/// `σ(x) = −x/(2π|x|²)`. Each interior node's cell mass `h²σ(x)` is split
/// between the two stencil directions bracketing `σ(x)` and sent along the
/// forward edges.
pub fn ball_calibration(domain: &Arc<GridDomain>) -> Result<(DiscreteMeasure, EdgeFlux)> {
    let Some(ShapeSpec::Disk { cx, cy, .. }) = domain.shape() else {
        return Err(Error::UnsupportedDomain(
            domain.shape().map_or("custom mask".to_string(), |s| s.kind().to_string()),
        ));
    };
    let (cx, cy) = (*cx, *cy);
    let h = domain.h();
    let center = domain.nearest_node([cx, cy]);
    let c = domain.position(center);
    const DIRS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
    let mut flux = EdgeFlux::zeros(domain.clone());
    for x in domain.interior_nodes().filter(|&x| x != center) {
        let p = domain.position(x);
        let (rx, ry) = (p[0] - c[0], p[1] - c[1]);
        let r2 = rx * rx + ry * ry;
        let s = -h * h / (2.0 * std::f64::consts::PI * r2);
        let v = [s * rx, s * ry];
        let angle = v[1].atan2(v[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let k = ((angle / std::f64::consts::FRAC_PI_4).floor() as usize).min(7);
        let (d1, d2) = (DIRS[k], DIRS[(k + 1) % 8]);
        let unit = |d: (i64, i64)| {
            let n = ((d.0 * d.0 + d.1 * d.1) as f64).sqrt();
            [d.0 as f64 / n, d.1 as f64 / n]
        };
        let (e1, e2) = (unit(d1), unit(d2));
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let c1 = (v[0] * e2[1] - v[1] * e2[0]) / det;
        let c2 = (e1[0] * v[1] - e1[1] * v[0]) / det;
        let (ix, iy) = domain.coords(x);
        for (d, comp) in [(d1, c1), (d2, c2)] {
            if comp <= 0.0 {
                continue;
            }
            let len = h * ((d.0 * d.0 + d.1 * d.1) as f64).sqrt();
            let to = domain
                .node_at(ix + d.0, iy + d.1)
                .ok_or_else(|| Error::SolverFailure(format!("calibration step leaves the domain at node {x}")))?;
            flux.push(x, to, comp / len)?;
        }
    }
    Ok((DiscreteMeasure::dirac(domain.clone(), center, 1.0), flux))
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSystemReport {
    pub nu_mass: f64,
    pub nu_mass_expected: f64,
    pub nu_mass_ok: bool,
    pub tau_mass: f64,
    pub tau_mass_expected: f64,
    pub tau_mass_ok: bool,
    pub nu_support_ok: bool,
    pub tau_support_ok: bool,
    /// `max_x |λ ν_x u_x − wdiv_x| / λ` over interior nodes.
    pub pde_residual: f64,
    pub pde_ok: bool,
    pub worst_node: Option<usize>,
    pub pass: bool,
}

/// Discrete check of `λ ν u = −div σ`, with `ν(Ω) = 1/‖u‖∞`,
/// `τ(Ω) = |σ|(Ω)/J∞(u) = 1/J∞(u)` and the support conditions.
pub fn eigen_system_check(
    u: &ScalarField,
    lambda: f64,
    nu: &DiscreteMeasure,
    flux: &EdgeFlux,
    tol: f64,
) -> Result<EigenSystemReport> {
    nu.check_len(u.len())?;
    if !nu.is_nonnegative() {
        let node = nu.weights.iter().position(|&w| w < 0.0).unwrap();
        return Err(Error::SignedMeasure { node, weight: nu[node] });
    }
    let m = u.max_abs();
    let lip = lip_constant(u);
    if m == 0.0 || lip == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let nu_mass = nu.total_mass();
    let tau_mass = flux.total_variation() / lip;
    let mut top = vec![false; u.len()];
    omega_max_abs(u, tol * m)?.into_iter().for_each(|i| top[i] = true);
    let nu_support_ok = nu.support().iter().all(|&i| top[i]);
    let region = omega_max_region(u)?;
    let tau_support_ok = mass_outside(flux, &region) <= tol * flux.total_variation();
    let div = weak_divergence(flux);
    let d = u.domain();
    let (mut pde_residual, mut worst_node) = (0.0, None);
    for i in d.interior_nodes() {
        let r = (lambda * nu[i] * u[i] - div[i]).abs() / lambda.abs().max(f64::MIN_POSITIVE);
        if r > pde_residual {
            pde_residual = r;
            worst_node = Some(i);
        }
    }
    let nu_mass_ok = (nu_mass * m - 1.0).abs() <= tol;
    let tau_mass_ok = (tau_mass * lip - 1.0).abs() <= tol;
    let pde_ok = pde_residual <= tol;
    Ok(EigenSystemReport {
        nu_mass,
        nu_mass_expected: 1.0 / m,
        nu_mass_ok,
        tau_mass,
        tau_mass_expected: 1.0 / lip,
        tau_mass_ok,
        nu_support_ok,
        tau_support_ok,
        pde_residual,
        pde_ok,
        worst_node,
        pass: nu_mass_ok && tau_mass_ok && nu_support_ok && tau_support_ok && pde_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinEquationReport {
    pub precondition_ok: bool,
    /// `max_x min(J∞(u) − λu_x, |wdiv_x|)` over interior nodes.
    pub worst: f64,
    pub worst_node: Option<usize>,
    /// `min_x (J∞(u) − λu_x)`.
    pub min_slack: f64,
    pub pass: bool,
}

/// Complementarity `min(J∞(u) − λu, |−div σ|) = 0` at every interior node.
pub fn min_equation_check(
    u: &ScalarField,
    lambda: f64,
    nu: &DiscreteMeasure,
    flux: &EdgeFlux,
    tol: f64,
) -> Result<MinEquationReport> {
    nu.check_len(u.len())?;
    let d = u.domain();
    let precondition_ok = u.values().iter().all(|&v| v >= -1e-12) && u.is_zero_trace() && nu.is_nonnegative();
    let lip = lip_constant(u);
    let div = weak_divergence(flux);
    let (mut worst, mut worst_node, mut min_slack) = (f64::NEG_INFINITY, None, f64::INFINITY);
    for i in d.interior_nodes() {
        let slack = lip - lambda * u[i];
        min_slack = min_slack.min(slack);
        let v = slack.min(div[i].abs());
        if v > worst {
            worst = v;
            worst_node = Some(i);
        }
    }
    let pass = precondition_ok && worst <= tol && min_slack >= -tol;
    Ok(MinEquationReport { precondition_ok, worst, worst_node, min_slack, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParallelityReport {
    /// Mass on support edges where `u` and `v` slope in different directions.
    pub sign_violation_mass: f64,
    /// Mass on support edges where `|slope v| < (1 − tol)·J∞(v)`.
    pub slope_violation_mass: f64,
    pub min_slope_ratio: f64,
    /// The flux leaves `Ω_max(u)`; the check's hypothesis is not met.
    pub support_warning: bool,
    pub pass: bool,
}

/// Gradient parallelity of two minimizers on the support of a calibration of
/// `u`.
pub fn parallelity_check(u: &ScalarField, v: &ScalarField, flux_u: &EdgeFlux, tol: f64) -> Result<ParallelityReport> {
    if u.len() != v.len() {
        return Err(Error::SizeMismatch { expected: u.len(), got: v.len() });
    }
    let lip_v = lip_constant(v);
    if lip_v == 0.0 || lip_constant(u) == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let tv = flux_u.total_variation();
    let (mut sign_bad, mut slope_bad, mut min_ratio) = (0.0, 0.0, f64::INFINITY);
    for (f, e) in flux_u.values.iter().zip(flux_u.domain.edges()) {
        if *f == 0.0 {
            continue;
        }
        let (du, dv) = (u[e.b] - u[e.a], v[e.b] - v[e.a]);
        if du * dv <= 0.0 {
            sign_bad += f.abs() * e.len;
        }
        let ratio = dv.abs() / e.len / lip_v;
        min_ratio = min_ratio.min(ratio);
        if ratio < 1.0 - tol {
            slope_bad += f.abs() * e.len;
        }
    }
    let region = omega_max_region(u)?;
    let support_warning = mass_outside(flux_u, &region) > tol * tv;
    if support_warning {
        log::warn!("flux leaves the maximal-slope set of u");
    }
    Ok(ParallelityReport {
        sign_violation_mass: sign_bad,
        slope_violation_mass: slope_bad,
        min_slope_ratio: if min_ratio.is_finite() { min_ratio } else { 1.0 },
        support_warning,
        pass: sign_bad <= tol * tv && slope_bad <= tol * tv,
    })
}

pub fn save_measure(mu: &DiscreteMeasure, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &node_csv(&mu.domain, "weight", &mu.weights))
}

/// Reads `ix[,iy],weight` rows; unlisted nodes carry no mass.
pub fn load_measure(domain: &Arc<GridDomain>, path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    let path = path.as_ref();
    let text = read_text(path)?;
    DiscreteMeasure::new(domain.clone(), parse_node_csv(domain, path, &text, false)?)
}

/// Writes nonzero edges as `ia,ja,ib,jb,flux`, oriented from `a` to `b`.
pub fn save_flux(flux: &EdgeFlux, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("ia,ja,ib,jb,flux\n");
    for (f, e) in flux.values.iter().zip(flux.domain.edges()) {
        if *f != 0.0 {
            let ((ia, ja), (ib, jb)) = (flux.domain.coords(e.a), flux.domain.coords(e.b));
            let _ = writeln!(out, "{ia},{ja},{ib},{jb},{f}");
        }
    }
    write_text(path.as_ref(), &out)
}

pub fn load_flux(domain: &Arc<GridDomain>, path: impl AsRef<Path>) -> Result<EdgeFlux> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.split(',').count() == 5 => {}
        _ => return Err(Error::format(path, 1, "expected header ia,ja,ib,jb,flux")),
    }
    let mut flux = EdgeFlux::zeros(domain.clone());
    let mut seen = vec![false; domain.edges().len()];
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(Error::format(path, line_no, format!("expected 5 columns, found {}", cols.len())));
        }
        let idx = |s: &str| s.parse::<i64>().map_err(|_| Error::format(path, line_no, format!("bad index `{s}`")));
        let (ia, ja, ib, jb) = (idx(cols[0])?, idx(cols[1])?, idx(cols[2])?, idx(cols[3])?);
        let f: f64 = cols[4].parse().map_err(|_| Error::format(path, line_no, format!("bad flux `{}`", cols[4])))?;
        if !f.is_finite() {
            return Err(Error::format(path, line_no, "flux is not finite"));
        }
        let node = |ix, iy| {
            domain
                .node_at(ix, iy)
                .ok_or_else(|| Error::format(path, line_no, format!("({ix}, {iy}) is not a domain node")))
        };
        let (a, b) = (node(ia, ja)?, node(ib, jb)?);
        let e = domain
            .edge_between(a, b)
            .ok_or_else(|| Error::format(path, line_no, "endpoints are not stencil neighbors"))?;
        if seen[e] {
            return Err(Error::format(path, line_no, "edge listed twice"));
        }
        seen[e] = true;
        flux.push(a, b, f)?;
    }
    Ok(flux)
}
