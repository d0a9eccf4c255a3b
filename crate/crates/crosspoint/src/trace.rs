//! Trace emission: JSON-lines event records of refinement runs and optional
//! SVG renderings of chains and crossings. Purely observational; nothing
//! here feeds back into the algorithms.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::crossings::{RefinementRound, RefinementTrace};
use crate::gates::BallChain;
use crate::geom::{CenteredBall, Region};
use crate::rat::Rat;
use crate::reach::ReachEnclosure;

/// One reach refinement as a trace event.
pub fn reach_event(enc: &ReachEnclosure) -> Value {
    json!({
        "op": "refine_reach",
        "a": enc.a.to_string(),
        "r": enc.r.to_string(),
        "fuel_spent": enc.fuel_spent,
        "intervals": {
            "back_exit": [enc.back_exit_lo.to_string(), enc.back_exit_hi.to_string()],
            "back_stay": [enc.back_stay_lo.to_string(), enc.back_stay_hi.to_string()],
            "fwd_stay": [enc.fwd_stay_lo.to_string(), enc.fwd_stay_hi.to_string()],
            "fwd_exit": [enc.fwd_exit_lo.to_string(), enc.fwd_exit_hi.to_string()],
        },
    })
}

fn ball_json(b: &CenteredBall) -> Value {
    json!({
        "center": [b.center.x.to_string(), b.center.y.to_string()],
        "radius": b.radius.to_string(),
        "center_err": b.center_err.to_string(),
        "time": b.time.as_ref().map(|t| t.to_string()),
    })
}

fn region_json(r: &Region) -> Value {
    match r {
        Region::UnitSquareInterior => json!({ "kind": "unit_square" }),
        Region::Ball(b) => json!({ "kind": "ball", "ball": ball_json(b) }),
        Region::Lens(l) => json!({
            "kind": "lens",
            "b1": ball_json(&l.b1),
            "b2": ball_json(&l.b2),
        }),
    }
}

/// Chain construction as a trace event.
pub fn chain_event(chain: &BallChain) -> Value {
    json!({
        "op": "ball_chain",
        "scale": chain.s.to_string(),
        "sep_radius": chain.sep_radius.to_string(),
        "anchors": [chain.a_left.to_string(), chain.a_right.to_string()],
        "links": chain.links.iter().map(|l| json!({
            "a": l.a.to_string(),
            "b": l.b.to_string(),
            "stay_radius": l.stay_radius.to_string(),
            "gate_radius": l.gate_radius.to_string(),
        })).collect::<Vec<_>>(),
        "region": region_json(&chain.region),
    })
}

/// Refinement round as a trace event.
pub fn round_event(index: usize, round: &RefinementRound) -> Value {
    json!({
        "op": "refinement_round",
        "index": index,
        "diameter_ub": round.diameter_ub.to_string(),
        "region": region_json(&round.cert.meeting.v),
        "witness_times": [
            round.cert.meeting.c_f.to_string(),
            round.cert.meeting.c_g.to_string(),
        ],
        "chain_links": round.chain.links.len(),
    })
}

/// JSON-lines rendering of a full refinement trace.
pub fn trace_jsonl(trace: &RefinementTrace) -> String {
    let mut out = String::new();
    for (i, round) in trace.rounds.iter().enumerate() {
        out.push_str(&chain_event(&round.chain).to_string());
        out.push('\n');
        out.push_str(&round_event(i, round).to_string());
        out.push('\n');
    }
    if let Some((xlo, xhi, ylo, yhi)) = &trace.limit_box {
        let event = json!({
            "op": "limit_box",
            "box": [[xlo.to_string(), xhi.to_string()], [ylo.to_string(), yhi.to_string()]],
        });
        out.push_str(&event.to_string());
        out.push('\n');
    }
    out
}

const SVG_SCALE: f64 = 640.0;

fn svg_xy(x: &Rat, y: &Rat) -> (f64, f64) {
    (x.to_f64() * SVG_SCALE, (1.0 - y.to_f64()) * SVG_SCALE)
}

fn svg_circle(out: &mut String, b: &CenteredBall, stroke: &str) {
    let (cx, cy) = svg_xy(&b.center.x, &b.center.y);
    let r = b.radius.to_f64() * SVG_SCALE;
    let _ = writeln!(
        out,
        r#"  <circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="none" stroke="{stroke}" stroke-width="1"/>"#
    );
}

/// Renders one refinement round: the region, the chain balls, and the two
/// witness chords.
pub fn round_svg(round: &RefinementRound) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {s} {s}" width="{s}" height="{s}">"#,
        s = SVG_SCALE
    );
    let _ = writeln!(
        out,
        r#"  <rect x="0" y="0" width="{s}" height="{s}" fill="white" stroke="black"/>"#,
        s = SVG_SCALE
    );
    match &round.cert.meeting.v {
        Region::Ball(b) => svg_circle(&mut out, b, "#2266cc"),
        Region::Lens(l) => {
            svg_circle(&mut out, &l.b1, "#2266cc");
            svg_circle(&mut out, &l.b2, "#2266cc");
        }
        Region::UnitSquareInterior => {}
    }
    for link in &round.chain.links {
        svg_circle(&mut out, &link.ball, "#999999");
    }
    let chord = |out: &mut String, a: &crate::geom::Pt2, b: &crate::geom::Pt2, stroke: &str| {
        let (x1, y1) = svg_xy(&a.x, &a.y);
        let (x2, y2) = svg_xy(&b.x, &b.y);
        let _ = writeln!(
            out,
            r#"  <line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1.5" stroke-dasharray="4 3"/>"#
        );
    };
    let ((f1, f2), (g1, g2)) = round.cert.representative_chords();
    chord(&mut out, &f1, &f2, "#cc2222");
    chord(&mut out, &g1, &g2, "#22aa44");
    for b in [
        &round.cert.ball_f_back,
        &round.cert.ball_f_fwd,
        &round.cert.ball_g_back,
        &round.cert.ball_g_fwd,
    ] {
        svg_circle(&mut out, b, "#aa7700");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pt2;

    #[test]
    fn reach_event_shape() {
        let enc = crate::reach::refine_reach(
            &crate::path::diagonal_path(),
            &Rat::new(1, 2),
            &Rat::new(1, 4),
            500,
        );
        let v = reach_event(&enc);
        assert_eq!(v["op"], "refine_reach");
        assert!(v["intervals"]["fwd_stay"].is_array());
    }

    #[test]
    fn svg_contains_circles() {
        let b = CenteredBall::exact(Pt2::new(Rat::new(1, 2), Rat::new(1, 2)), Rat::new(1, 4));
        let mut out = String::new();
        svg_circle(&mut out, &b, "#000000");
        assert!(out.contains("<circle"));
    }
}
