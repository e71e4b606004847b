//! The four maximal-slope examples: tent, peak, square distance, mountain ridge.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::io::save_indicator_pgm;
use crate::domain::{rasterize, GridDomain, ScalarField, ShapeSpec};
use crate::error::Result;
use crate::lipcalc::{mountain_ridge, omega_max_grad, MollifierSchedule};
use crate::metric::distance_to_boundary;

/// Nodes per axis of every gallery domain.
pub const GALLERY_NODES: usize = 129;
/// Required agreement outside the dilated exceptional set.
pub const GALLERY_AGREEMENT: f64 = 0.99;

#[derive(Clone, Debug, Serialize)]
pub struct FigureReport {
    pub name: &'static str,
    pub caption: &'static str,
    pub nodes: usize,
    pub computed: usize,
    /// Interior nodes farther than the dilation from the exceptional set.
    pub evaluated: usize,
    pub agreement: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryReport {
    pub h: f64,
    pub delta: f64,
    pub dilation: f64,
    pub figures: Vec<FigureReport>,
    pub pass: bool,
}

struct Figure {
    name: &'static str,
    caption: &'static str,
    domain: Arc<GridDomain>,
    field: ScalarField,
    /// Distance to the analytic exceptional set.
    exceptional: fn([f64; 2]) -> f64,
    /// Analytic membership away from the exceptional set.
    member: bool,
    must_be_empty: bool,
}

fn figures() -> Result<Vec<Figure>> {
    let h = 2.0 / (GALLERY_NODES - 1) as f64;
    let interval = rasterize(&ShapeSpec::Interval { a: -1.0, b: 1.0 }, h)?;
    let square = rasterize(&ShapeSpec::Rectangle { ax: -1.0, ay: -1.0, bx: 1.0, by: 1.0 }, h)?;
    Ok(vec![
        Figure {
            name: "tent",
            caption: "Omega_max = Omega minus {0}",
            field: distance_to_boundary(&interval),
            domain: interval.clone(),
            exceptional: |x| x[0].abs(),
            member: true,
            must_be_empty: false,
        },
        Figure {
            name: "peak",
            caption: "Omega_max is empty",
            field: ScalarField::from_fn(interval.clone(), |x| 1.0 - 2.0 * x[0].abs() + x[0] * x[0]),
            domain: interval,
            exceptional: |_| f64::INFINITY,
            member: false,
            must_be_empty: true,
        },
        Figure {
            name: "square",
            caption: "Omega_max = Omega minus the diagonals",
            field: distance_to_boundary(&square),
            domain: square.clone(),
            exceptional: |x| (x[0].abs() - x[1].abs()).abs() / std::f64::consts::SQRT_2,
            member: true,
            must_be_empty: false,
        },
        Figure {
            name: "mountain-ridge",
            caption: "Omega_max lies on the segments x = 0, 1/2 < |y| < 1",
            field: ScalarField::zero_trace_from_fn(square.clone(), mountain_ridge),
            domain: square,
            exceptional: |x| x[0].hypot((0.5 - x[1].abs()).max(0.0)),
            member: false,
            must_be_empty: false,
        },
    ])
}

/// Computes the four sets and, when `out` is given, writes one indicator
/// PGM per example.
pub fn gallery(delta: f64, out: Option<&Path>) -> Result<GalleryReport> {
    let h = 2.0 / (GALLERY_NODES - 1) as f64;
    let schedule = MollifierSchedule::default_for(h);
    let dilation = 4.0 * h;
    let mut reports = Vec::new();
    for fig in figures()? {
        let rep = omega_max_grad(&fig.field, &schedule, delta)?;
        let mut inside = vec![false; fig.domain.len()];
        rep.nodes.iter().for_each(|&i| inside[i] = true);
        let (mut evaluated, mut agree) = (0usize, 0usize);
        for i in fig.domain.interior_nodes() {
            if (fig.exceptional)(fig.domain.position(i)) > dilation + 1e-12 {
                evaluated += 1;
                agree += usize::from(inside[i] == fig.member);
            }
        }
        let agreement = if evaluated == 0 { 1.0 } else { agree as f64 / evaluated as f64 };
        let pass = agreement >= GALLERY_AGREEMENT && (!fig.must_be_empty || rep.nodes.is_empty());
        if let Some(dir) = out {
            save_indicator_pgm(&fig.domain, &rep.nodes, dir.join(format!("omega_max_{}.pgm", fig.name)))?;
        }
        reports.push(FigureReport {
            name: fig.name,
            caption: fig.caption,
            nodes: fig.domain.interior_count(),
            computed: rep.nodes.len(),
            evaluated,
            agreement,
            pass,
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(GalleryReport { h, delta, dilation, figures: reports, pass })
}
