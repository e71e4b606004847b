use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::figures::gallery;
use super::{CalibAction, Command, JStarMethod, OtAction, Outcome, RunConfig};
use crate::domain::io::{save_indicator_pgm, write_text};
use crate::domain::{load_field, save_field, save_pgm, GridDomain, ScalarField, ShapeSpec};
use crate::eigensolve::{
    check_envelope, construct_sign_changing, infinity_harmonic, p_sweep, HarmonicOptions, POptions,
};
use crate::error::{Error, Result};
use crate::lipcalc::{lip_constant, omega_max_abs, omega_max_grad, rayleigh};
use crate::measures::{
    ball_calibration, calibration_check, eigen_system_check, load_flux, load_measure, save_flux, save_measure,
    DiscreteMeasure,
};
use crate::metric::{distance_to_boundary, generalized_inball, high_ridge, inner_distance, inradius, RidgeSet};
use crate::transport::{
    dual_minimizer_check, graph_duality_check, j_star_closed, j_star_flow, kr_norm, kr_partial_norm, w1,
};

pub(crate) struct Ctx {
    cfg: RunConfig,
    outputs: Vec<String>,
}

impl Ctx {
    pub(crate) fn new(cfg: &RunConfig) -> Self {
        Self { cfg: cfg.clone(), outputs: Vec::new() }
    }

    pub(crate) fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.cfg.out.join(name)
    }

    pub(crate) fn write_json(&mut self, name: &str, v: &serde_json::Value) -> Result<()> {
        let p = self.path(name);
        write_text(&p, &(serde_json::to_string_pretty(v).unwrap_or_default() + "\n"))
    }

    pub(crate) fn write_manifest(&self, v: &serde_json::Value) -> Result<()> {
        write_text(&self.cfg.out.join("manifest.json"), &(serde_json::to_string_pretty(v).unwrap_or_default() + "\n"))
    }

    fn write_field(&mut self, stem: &str, f: &ScalarField) -> Result<()> {
        save_field(f, self.path(&format!("{stem}.csv")))?;
        save_pgm(f, self.path(&format!("{stem}.pgm")))
    }

    fn write_indicator(&mut self, stem: &str, d: &GridDomain, nodes: &[usize]) -> Result<()> {
        save_indicator_pgm(d, nodes, self.path(&format!("{stem}.pgm")))
    }
}

fn ridge_of(dist: &ScalarField, tol: Option<f64>) -> RidgeSet {
    high_ridge(dist, tol.unwrap_or(dist.domain().h()))
}

fn field_or_distance(d: &Arc<GridDomain>, path: &Option<PathBuf>) -> Result<ScalarField> {
    match path {
        Some(p) => load_field(d, p),
        None => Ok(distance_to_boundary(d)),
    }
}

fn positions(d: &GridDomain, nodes: &[usize]) -> Vec<[f64; 2]> {
    nodes.iter().map(|&i| d.position(i)).collect()
}

#[derive(Serialize)]
struct FieldStats {
    lip: f64,
    max_abs: f64,
    min: f64,
    max: f64,
    rayleigh: Option<f64>,
    zero_trace: bool,
}

fn stats(u: &ScalarField) -> FieldStats {
    FieldStats {
        lip: lip_constant(u),
        max_abs: u.max_abs(),
        min: u.min(),
        max: u.max(),
        rayleigh: rayleigh(u).ok(),
        zero_trace: u.is_zero_trace(),
    }
}

pub(crate) fn dispatch(ctx: &mut Ctx, cmd: &Command) -> Result<Outcome> {
    let cfg = ctx.cfg.clone();
    match cmd {
        Command::Domain => {
            let d = cfg.domain()?;
            let interior: Vec<usize> = d.interior_nodes().collect();
            ctx.write_indicator("interior", &d, &interior)?;
            let (nx, ny) = d.lattice_shape();
            Outcome::value(json!({
                "kind": cfg.shape.as_ref().map(ShapeSpec::kind),
                "dim": d.dim(),
                "h": d.h(),
                "lattice_shape": [nx, ny],
                "nodes": d.len(),
                "interior": interior.len(),
                "boundary": d.len() - interior.len(),
                "edges": d.edges().len(),
            }))
        }
        Command::Dist => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            ctx.write_field("d", &dist)?;
            let shape = cfg.shape.as_ref().expect("domain() checked the shape");
            let exact_error = d
                .interior_nodes()
                .map(|i| shape.exact_boundary_distance(d.position(i)).map(|e| (dist[i] - e).abs()))
                .try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))
                .ok();
            Outcome::value(json!({
                "r": inradius(&dist),
                "ridge_size": ridge_of(&dist, None).len(),
                "lip": lip_constant(&dist),
                "rayleigh": rayleigh(&dist)?,
                "exact_max_error": exact_error,
            }))
        }
        Command::Ridge { ridge_tol } => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            let ridge = ridge_of(&dist, *ridge_tol);
            ctx.write_indicator("ridge", &d, &ridge.nodes)?;
            Outcome::value(json!({
                "r": inradius(&dist),
                "tol": ridge.tol,
                "ridge_size": ridge.len(),
                "positions": positions(&d, &ridge.nodes),
            }))
        }
        Command::Inball { ridge_tol } => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            let r = inradius(&dist);
            let ridge = ridge_of(&dist, *ridge_tol);
            let ball = generalized_inball(&d, &ridge, r)?;
            ctx.write_indicator("inball", &d, &ball)?;
            let interior = d.interior_count();
            let covered = ball.iter().filter(|&&i| d.is_interior(i)).count();
            Outcome::value(json!({
                "r": r,
                "ridge_size": ridge.len(),
                "inball_size": ball.len(),
                "interior": interior,
                "stadium_like": covered == interior,
            }))
        }
        Command::InnerDist { ridge_tol } => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            let r = inradius(&dist);
            let ridge = ridge_of(&dist, *ridge_tol);
            let din = inner_distance(&d, &ridge, r)?;
            ctx.write_field("d_in", &din)?;
            Outcome::value(json!({
                "r": r,
                "ridge_size": ridge.len(),
                "sup_gap_to_distance": din.sup_distance(&dist)?,
                "stats": stats(&din),
            }))
        }
        Command::Rayleigh { field } => {
            let d = cfg.domain()?;
            let u = load_field(&d, field)?;
            rayleigh(&u)?;
            Outcome::value(json!({ "stats": stats(&u) }))
        }
        Command::Omegamax { field, abs } => {
            let d = cfg.domain()?;
            let u = field_or_distance(&d, field)?;
            let (mode, nodes, extra) = match abs {
                Some(t) => ("abs", omega_max_abs(&u, *t)?, json!({ "tol": t })),
                None => {
                    let rep = omega_max_grad(&u, &cfg.mollifier()?, cfg.delta)?;
                    let extra = json!({ "lip": rep.lip, "threshold": rep.threshold, "radii": rep.radii });
                    ("grad", rep.nodes, extra)
                }
            };
            ctx.write_indicator("omegamax", &d, &nodes)?;
            Outcome::value(json!({ "mode": mode, "size": nodes.len(), "details": extra }))
        }
        Command::Eig { p } => {
            let d = cfg.domain()?;
            let opts = POptions { tol: cfg.tol, ..POptions::default() };
            let sweep = p_sweep(&d, p, &opts)?;
            let last = sweep.last.as_ref().expect("non-empty sweep");
            ctx.write_field("u", &last.u)?;
            Outcome::value(json!({
                "lambda": last.lambda,
                "p": last.p,
                "converged": sweep.entries.iter().all(|e| e.converged),
                "sweep": sweep,
            }))
        }
        Command::Infharm { fixed, ridge_tol } => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            let r = inradius(&dist);
            let value = parse_fixed(fixed, r)?;
            let ridge = high_ridge(&dist, *ridge_tol);
            let mut nodes: Vec<usize> = d.boundary_nodes().collect();
            let mut values = vec![0.0; nodes.len()];
            nodes.extend(&ridge.nodes);
            values.resize(nodes.len(), value);
            let opts = HarmonicOptions { tol: cfg.harmonic_tol, ..HarmonicOptions::default() };
            let (u, sweeps) = infinity_harmonic(&d, &nodes, &values, &opts)?;
            ctx.write_field("u", &u)?;
            Outcome::value(json!({
                "ridge_value": value,
                "ridge_size": ridge.len(),
                "sweeps": sweeps,
                "sup_gap_to_distance": u.sup_distance(&dist)?,
                "stats": stats(&u),
            }))
        }
        Command::SignChanging { ridge_tol } => {
            let d = cfg.domain()?;
            let dist = distance_to_boundary(&d);
            let ridge = ridge_of(&dist, *ridge_tol);
            let u = construct_sign_changing(&d, &ridge, inradius(&dist))?;
            ctx.write_field("u", &u)?;
            Outcome::value(json!({ "r": inradius(&dist), "stats": stats(&u) }))
        }
        Command::Envelope { field } => {
            let d = cfg.domain()?;
            let u = field_or_distance(&d, field)?;
            let rep = check_envelope(&u)?;
            let pass = rep.below_dmax && rep.above_din != Some(false);
            Outcome::check(json!({ "report": rep, "pass": pass }), pass)
        }
        Command::Calib { action: CalibAction::Check { u, flux } } => {
            let d = cfg.domain()?;
            let u = load_field(&d, u)?;
            let flux = load_flux(&d, flux)?;
            let rep = calibration_check(&u, &flux, cfg.check_tol)?;
            let pass = rep.pass;
            Outcome::check(json!({ "report": rep, "pass": pass }), pass)
        }
        Command::Calib { action: CalibAction::Ball } => {
            let d = cfg.domain()?;
            let (nu, flux) = ball_calibration(&d)?;
            let dist = distance_to_boundary(&d);
            save_measure(&nu, ctx.path("nu.csv"))?;
            save_flux(&flux, ctx.path("flux.csv"))?;
            let m = dist.max_abs();
            let calib = calibration_check(&dist, &flux, cfg.check_tol)?;
            let system = eigen_system_check(&dist, 1.0 / m, &nu.scaled(1.0 / m), &flux, cfg.check_tol)?;
            // the calibration report is diagnostic: chamfer slopes misalign part of the radial flux
            let pass = system.pass;
            Outcome::check(json!({ "calibration": calib, "eigen_system": system, "pass": pass }), pass)
        }
        Command::EigenCheck { u, lambda, nu, flux } => {
            let d = cfg.domain()?;
            let (u, lambda, nu, flux) = match (u, nu, flux) {
                (Some(u), Some(nu), Some(flux)) => {
                    let u = load_field(&d, u)?;
                    let lambda =
                        lambda.ok_or_else(|| Error::InvalidArgument("--lambda is required with --u".into()))?;
                    (u.clone(), lambda, load_measure(&d, nu)?, load_flux(&d, flux)?)
                }
                (None, None, None) => {
                    // the disk's own eigen system
                    let (nu, flux) = ball_calibration(&d)?;
                    let dist = distance_to_boundary(&d);
                    let m = dist.max_abs();
                    (dist, lambda.unwrap_or(1.0 / m), nu.scaled(1.0 / m), flux)
                }
                _ => return Err(Error::InvalidArgument("give all of --u, --nu and --flux, or none".into())),
            };
            let rep = eigen_system_check(&u, lambda, &nu, &flux, cfg.check_tol)?;
            let pass = rep.pass;
            Outcome::check(json!({ "lambda": lambda, "report": rep, "pass": pass }), pass)
        }
        Command::Ot { action } => ot(ctx, &cfg, action),
        Command::Figures => {
            let dir = cfg.out.clone();
            let rep = gallery(cfg.delta, Some(&dir))?;
            for f in &rep.figures {
                ctx.outputs.push(format!("omega_max_{}.pgm", f.name));
            }
            let pass = rep.pass;
            Outcome::check(rep, pass)
        }
    }
}

fn parse_fixed(spec: &str, r: f64) -> Result<f64> {
    match spec.split_once('=') {
        None if spec == "ridge" => Ok(r),
        Some(("ridge", v)) => v
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidArgument(format!("--fixed: bad value `{v}`"))),
        _ => Err(Error::InvalidArgument(format!("--fixed: expected `ridge=VALUE`, got `{spec}`"))),
    }
}

fn ridge_dirac(d: &Arc<GridDomain>) -> DiscreteMeasure {
    let dist = distance_to_boundary(d);
    DiscreteMeasure::dirac(d.clone(), high_ridge(&dist, 0.0).nodes[0], 1.0)
}

fn ot(ctx: &mut Ctx, cfg: &RunConfig, action: &OtAction) -> Result<Outcome> {
    let d = cfg.domain()?;
    match action {
        OtAction::Jstar { mu, method } => {
            let mu = match mu {
                Some(p) => load_measure(&d, p)?,
                None => ridge_dirac(&d),
            };
            let closed = match method {
                JStarMethod::Flow => None,
                _ => Some(j_star_closed(&mu)?),
            };
            let flow = match method {
                JStarMethod::Closed => None,
                _ => {
                    let (v, flux, sol) = j_star_flow(&mu)?;
                    save_flux(&flux, ctx.path("flux.csv"))?;
                    Some((v, sol))
                }
            };
            let value = flow.as_ref().map(|f| f.0).or(closed).expect("one method ran");
            Outcome::value(json!({
                "value": value,
                "closed": closed,
                "flow": flow.as_ref().map(|f| f.0),
                "gap": closed.zip(flow.as_ref().map(|f| f.0)).map(|(c, f)| (c - f).abs()),
                "augmentations": flow.as_ref().map(|f| f.1.augmentations),
                "duality_gap": flow.as_ref().map(|f| f.1.duality_gap()),
                "quantization_bound": flow.as_ref().map(|f| f.1.quantization_bound),
                "mass": mu.total_variation(),
            }))
        }
        OtAction::W1 { mu, rho } => {
            let v = w1(&load_measure(&d, mu)?, &load_measure(&d, rho)?)?;
            Outcome::value(json!({ "value": v }))
        }
        OtAction::Kr { mu, partial } => {
            let mu = load_measure(&d, mu)?;
            let v = if *partial { kr_partial_norm(&mu)? } else { kr_norm(&mu)? };
            Outcome::value(json!({ "value": v, "partial": partial }))
        }
        OtAction::Dualcheck { samples } => {
            let tol = 2.0 * d.h();
            let minimizers = dual_minimizer_check(&d, *samples, tol, cfg.seed)?;
            let duality = graph_duality_check(&d, cfg.seed)?;
            let pass = minimizers.pass && duality.pass;
            Outcome::check(json!({ "tol": tol, "minimizers": minimizers, "duality": duality, "pass": pass }), pass)
        }
    }
}
