//! Path file parsing and result serialization.
//!
//! All rationals travel as exact strings ("p/q", integers, or decimals);
//! nothing on disk is floating point. Parse errors name the position and
//! the reason.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::crossings::CertifiedPoint;
use crate::error::InputError;
use crate::geom::Pt2;
use crate::ivt::ZeroEnclosure;
use crate::path::{PathOracle, PolyPiece, PolylinePath, PwPolyPath};
use crate::rat::Rat;

/// A parsed path description.
#[derive(Debug)]
pub enum ParsedPath {
    Polyline(PolylinePath),
    PwPoly(PwPolyPath),
}

impl ParsedPath {
    pub fn into_oracle(self) -> Arc<dyn PathOracle> {
        match self {
            ParsedPath::Polyline(p) => Arc::new(p),
            ParsedPath::PwPoly(p) => Arc::new(p),
        }
    }

    pub fn as_polyline(&self) -> Option<&PolylinePath> {
        match self {
            ParsedPath::Polyline(p) => Some(p),
            ParsedPath::PwPoly(_) => None,
        }
    }
}

fn malformed(path: impl Into<String>, reason: impl Into<String>) -> InputError {
    InputError::Malformed {
        path: path.into(),
        reason: reason.into(),
    }
}

fn parse_rat_at(v: &Value, at: &str) -> Result<Rat, InputError> {
    let s = v
        .as_str()
        .ok_or_else(|| malformed(at, "expected a rational string"))?;
    Rat::parse(s).map_err(|e| malformed(at, format!("invalid rational {:?}: {}", s, e)))
}

/// Parses the textual path format.
///
/// ```json
/// { "type": "polyline",
///   "points": [["0","0"], ["1/2","3/4"], ["1","1"]],
///   "times": ["0", "1/2", "1"] }
/// ```
///
/// `times` is optional (defaults to an even spacing). The "pwpoly" variant
/// carries rational polynomial coefficients per piece:
///
/// ```json
/// { "type": "pwpoly",
///   "pieces": [ { "t0": "0", "t1": "1",
///                 "x": ["0","1"], "y": ["0","0","1"] } ] }
/// ```
pub fn parse_path_json(text: &str) -> Result<ParsedPath, InputError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| malformed("$", format!("JSON syntax error: {}", e)))?;
    let obj = root
        .as_object()
        .ok_or_else(|| malformed("$", "expected an object"))?;
    let ty = obj
        .get("type")
        .and_then(|v| v.as_str())
        .ok_or_else(|| malformed("type", "missing or non-string"))?;
    match ty {
        "polyline" => {
            let points = obj
                .get("points")
                .and_then(|v| v.as_array())
                .ok_or_else(|| malformed("points", "missing or not an array"))?;
            if points.len() < 2 {
                return Err(malformed("points", "need at least two points"));
            }
            let mut pts = Vec::with_capacity(points.len());
            for (i, p) in points.iter().enumerate() {
                let pair = p
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| malformed(format!("points[{}]", i), "expected [x, y]"))?;
                let x = parse_rat_at(&pair[0], &format!("points[{}][0]", i))?;
                let y = parse_rat_at(&pair[1], &format!("points[{}][1]", i))?;
                pts.push(Pt2::new(x, y));
            }
            let path = match obj.get("times") {
                None | Some(Value::Null) => PolylinePath::from_points(pts)
                    .map_err(|e| malformed("points", e))?,
                Some(times) => {
                    let times = times
                        .as_array()
                        .ok_or_else(|| malformed("times", "expected an array"))?;
                    if times.len() != pts.len() {
                        return Err(malformed(
                            "times",
                            format!("{} times for {} points", times.len(), pts.len()),
                        ));
                    }
                    let mut bps = Vec::with_capacity(pts.len());
                    for (i, (t, p)) in times.iter().zip(pts).enumerate() {
                        let t = parse_rat_at(t, &format!("times[{}]", i))?;
                        bps.push((t, p));
                    }
                    PolylinePath::new(bps).map_err(|e| malformed("times", e))?
                }
            };
            Ok(ParsedPath::Polyline(path))
        }
        "pwpoly" => {
            let pieces = obj
                .get("pieces")
                .and_then(|v| v.as_array())
                .ok_or_else(|| malformed("pieces", "missing or not an array"))?;
            let mut parsed = Vec::with_capacity(pieces.len());
            for (i, piece) in pieces.iter().enumerate() {
                let at = |field: &str| format!("pieces[{}].{}", i, field);
                let po = piece
                    .as_object()
                    .ok_or_else(|| malformed(format!("pieces[{}]", i), "expected an object"))?;
                let t0 = parse_rat_at(
                    po.get("t0").ok_or_else(|| malformed(at("t0"), "missing"))?,
                    &at("t0"),
                )?;
                let t1 = parse_rat_at(
                    po.get("t1").ok_or_else(|| malformed(at("t1"), "missing"))?,
                    &at("t1"),
                )?;
                let coeffs = |field: &'static str| -> Result<Vec<Rat>, InputError> {
                    let arr = po
                        .get(field)
                        .and_then(|v| v.as_array())
                        .ok_or_else(|| malformed(at(field), "missing coefficient array"))?;
                    arr.iter()
                        .enumerate()
                        .map(|(j, c)| parse_rat_at(c, &format!("{}[{}]", at(field), j)))
                        .collect()
                };
                parsed.push(PolyPiece {
                    t0,
                    t1,
                    x: coeffs("x")?,
                    y: coeffs("y")?,
                });
            }
            let path = PwPolyPath::new(parsed).map_err(|e| malformed("pieces", e))?;
            Ok(ParsedPath::PwPoly(path))
        }
        other => Err(malformed("type", format!("unknown path type {:?}", other))),
    }
}

/// Serializes a polyline back to the path file format.
pub fn polyline_json(path: &PolylinePath) -> Value {
    let points: Vec<Value> = path
        .breakpoints()
        .iter()
        .map(|(_, p)| json!([p.x.to_string(), p.y.to_string()]))
        .collect();
    let times: Vec<Value> = path
        .breakpoints()
        .iter()
        .map(|(t, _)| Value::String(t.to_string()))
        .collect();
    json!({ "type": "polyline", "points": points, "times": times })
}

/// Result document for an intersection run.
pub fn intersect_result_json(point: &CertifiedPoint, trace_file: Option<&str>) -> Value {
    json!({
        "box": [
            [point.box_x.0.to_string(), point.box_x.1.to_string()],
            [point.box_y.0.to_string(), point.box_y.1.to_string()],
        ],
        "diameter": point.diameter.to_string(),
        "precision_bits": point.precision_bits,
        "trace_file": trace_file,
    })
}

/// Result document for a zero-finding run.
pub fn ivt_result_json(zero: &ZeroEnclosure, bits: u32) -> Value {
    json!({
        "interval": [zero.interval.0.to_string(), zero.interval.1.to_string()],
        "residual_bound": zero.residual_bound.to_string(),
        "flat_flag": zero.flat_flag,
        "bits": bits,
    })
}

/// Result document for the injective special case: mirrors the intersection
/// document plus the parameter interval and the flat-branch flag.
pub fn jordan_result_json(
    beta_interval: &(Rat, Rat),
    image: Option<&crate::geom::PtEnc>,
    q1_flag: bool,
    bits: u32,
) -> Value {
    json!({
        "beta_interval": [beta_interval.0.to_string(), beta_interval.1.to_string()],
        "image": image.map(|e| json!({
            "point": [e.pt.x.to_string(), e.pt.y.to_string()],
            "err": e.err.to_string(),
        })),
        "q1_flag": q1_flag,
        "precision_bits": bits,
    })
}

/// Result document for an oracle check over two polylines.
pub fn oracle_result_json(result: &crate::oracle::OracleResult) -> Value {
    let points: Vec<Value> = result
        .points
        .iter()
        .map(|(p, params)| {
            json!({
                "point": [p.x.to_string(), p.y.to_string()],
                "parameters": params
                    .iter()
                    .map(|(tf, tg)| json!([tf.to_string(), tg.to_string()]))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    let overlaps: Vec<Value> = result
        .overlaps
        .iter()
        .map(|o| {
            json!({
                "f_interval": [o.f_interval.0.to_string(), o.f_interval.1.to_string()],
                "g_interval": [o.g_interval.0.to_string(), o.g_interval.1.to_string()],
                "endpoints": [
                    [o.endpoints.0.x.to_string(), o.endpoints.0.y.to_string()],
                    [o.endpoints.1.x.to_string(), o.endpoints.1.y.to_string()],
                ],
            })
        })
        .collect();
    json!({ "points": points, "overlaps": overlaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_polyline_roundtrip() {
        let text = r#"{ "type": "polyline",
                        "points": [["0","0"],["1/2","3/4"],["1","1"]] }"#;
        let parsed = parse_path_json(text).unwrap();
        let poly = parsed.as_polyline().unwrap();
        assert_eq!(poly.breakpoints().len(), 3);
        assert_eq!(poly.breakpoints()[1].1, Pt2::new(Rat::new(1, 2), Rat::new(3, 4)));

        let back = polyline_json(poly).to_string();
        let reparsed = parse_path_json(&back).unwrap();
        assert_eq!(
            reparsed.as_polyline().unwrap().breakpoints(),
            poly.breakpoints()
        );
    }

    #[test]
    fn parse_error_positions() {
        let text = r#"{ "type": "polyline", "points": [["0","0"],["x","1"]] }"#;
        let err = parse_path_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("points[1][0]"), "message was {:?}", msg);

        let text = r#"{ "type": "spline" }"#;
        let msg = parse_path_json(text).unwrap_err().to_string();
        assert!(msg.contains("unknown path type"));

        let text = r#"{ "type": "polyline", "points": [["0","0"],["1","1"]], "times": ["0"] }"#;
        let msg = parse_path_json(text).unwrap_err().to_string();
        assert!(msg.contains("1 times for 2 points"));
    }

    #[test]
    fn parse_pwpoly() {
        let text = r#"{ "type": "pwpoly",
                        "pieces": [ { "t0": "0", "t1": "1",
                                      "x": ["0","1"], "y": ["0","0","1"] } ] }"#;
        let parsed = parse_path_json(text).unwrap();
        let oracle = parsed.into_oracle();
        let e = oracle.eval(&Rat::new(1, 2), 10).unwrap();
        assert_eq!(e.pt, Pt2::new(Rat::new(1, 2), Rat::new(1, 4)));
    }

    #[test]
    fn rationals_serialize_exactly() {
        let z = ZeroEnclosure {
            interval: (Rat::new(1, 3), Rat::new(2, 3)),
            residual_bound: Rat::pow2(-30),
            flat_flag: false,
            fuel_spent: 7,
        };
        let doc = ivt_result_json(&z, 30);
        assert_eq!(doc["interval"][0], "1/3");
        assert_eq!(doc["residual_bound"], "1/1073741824");
    }
}
