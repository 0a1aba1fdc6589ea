use std::f64::consts::PI;
use std::fmt::Write;

use super::Plan;
use crate::geometry::Configuration;
use crate::nmpc::SolverStatus;
use crate::routing::Field;
use crate::simulation::MissionLog;

pub const MISSION_CSV_HEADER: &str = "t,x,y,theta,v,omega,s_bar,status,iters,solve_ms";

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Converged => "converged",
        SolverStatus::MaxIterations => "max_iterations",
        SolverStatus::Infeasible => "infeasible",
    }
}

/// One row per control step. Solve times are wall-clock and differ
/// between runs; every other column is reproducible.
pub fn mission_csv(log: &MissionLog) -> String {
    let mut s = String::from(MISSION_CSV_HEADER);
    s.push('\n');
    for r in &log.steps {
        let status = if r.fallback { "fallback" } else { status_name(r.status) };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{:.3}",
            r.t,
            r.state.x(),
            r.state.y(),
            r.state.theta(),
            r.input.v,
            r.input.omega,
            r.s_bar,
            status,
            r.iterations,
            r.solve_time * 1e3
        )
        .unwrap();
    }
    s
}

/// Sampled reference, one row per point: leg index, arc length along the
/// leg, and the configuration.
pub fn reference_csv(legs: &[Vec<Configuration>]) -> String {
    let mut s = String::from("leg,arc,x,y,theta\n");
    for (i, leg) in legs.iter().enumerate() {
        let mut arc = 0.0;
        for (j, c) in leg.iter().enumerate() {
            if j > 0 {
                arc += leg[j - 1].distance(c);
            }
            writeln!(s, "{i},{arc},{},{},{}", c.x(), c.y(), c.theta()).unwrap();
        }
    }
    s
}

const WIDTH_PX: f64 = 800.0;
const MARGIN_M: f64 = 1.0;
const STAR_RADIUS_M: f64 = 0.15;
const TICK_M: f64 = 0.4;

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let (min_x, min_y) = (lo[0] - MARGIN_M, lo[1] - MARGIN_M);
        let (max_x, max_y) = (hi[0] + MARGIN_M, hi[1] + MARGIN_M);
        let scale = WIDTH_PX / (max_x - min_x).max(max_y - min_y);
        Frame {
            min_x,
            max_y,
            scale,
            width: (max_x - min_x) * scale,
            height: (max_y - min_y) * scale,
        }
    }

    // svg y grows downward
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.min_x) * self.scale, (self.max_y - y) * self.scale)
    }

    fn points(&self, pts: impl Iterator<Item = [f64; 2]>) -> String {
        pts.map(|p| {
            let (u, v) = self.px(p[0], p[1]);
            format!("{u:.2},{v:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
    }
}

fn star(center: [f64; 2]) -> impl Iterator<Item = [f64; 2]> {
    (0..10).map(move |i| {
        let r = if i % 2 == 0 { STAR_RADIUS_M } else { 0.4 * STAR_RADIUS_M };
        let a = PI / 2.0 + i as f64 * PI / 5.0;
        [center[0] + r * a.cos(), center[1] + r * a.sin()]
    })
}

/// Renders targets as stars, the planned reference with heading ticks at
/// each visited target, and optionally the flown trajectory.
pub fn render_svg(field: &Field, plan: &Plan, flown: Option<&MissionLog>) -> String {
    let legs = plan.polylines(field);
    let configs = plan.configurations(field);
    let trajectory: Vec<[f64; 2]> = flown
        .map(|log| {
            log.steps
                .iter()
                .map(|r| r.state.position())
                .chain(log.final_state.map(|c| c.position()))
                .collect()
        })
        .unwrap_or_default();
    let frame = Frame::new(
        field
            .targets()
            .iter()
            .copied()
            .chain(legs.iter().flatten().map(Configuration::position))
            .chain(trajectory.iter().copied()),
    );

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = frame.width,
        h = frame.height
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<g class="reference" fill="none" stroke="black" stroke-width="1.5">"#).unwrap();
    for leg in &legs {
        writeln!(s, r#"<polyline points="{}"/>"#, frame.points(leg.iter().map(Configuration::position))).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    if plan.tour.is_some() {
        writeln!(s, r#"<g class="heading" stroke="red" stroke-width="2">"#).unwrap();
        for c in &configs {
            let (x1, y1) = frame.px(c.x(), c.y());
            let (x2, y2) = frame.px(c.x() + TICK_M * c.theta().cos(), c.y() + TICK_M * c.theta().sin());
            writeln!(s, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    if !trajectory.is_empty() {
        writeln!(
            s,
            r#"<polyline class="trajectory" fill="none" stroke="blue" stroke-width="1" points="{}"/>"#,
            frame.points(trajectory.iter().copied())
        )
        .unwrap();
    }
    writeln!(s, r#"<g fill="green" stroke="darkgreen" stroke-width="0.5">"#).unwrap();
    for t in field.targets() {
        writeln!(s, r#"<polygon class="star" points="{}"/>"#, frame.points(star(*t))).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}
