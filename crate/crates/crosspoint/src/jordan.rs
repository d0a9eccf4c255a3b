//! Interior/exterior side tests on the closed curve formed by an injective
//! corner-to-corner path together with the square's left and top edges, and
//! the bisection that locates a parameter of the second path whose image
//! lands on the first path's range.

use crate::fuel::{FuelMeter, Semi, Starved};
use crate::geom::{Pt2, PtEnc};
use crate::oracle::winding_number;
use crate::path::PathOracle;
use crate::rat::Rat;
use crate::reach::image_enclosure;

/// Which side of the closed curve a point provably lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveSide {
    Interior,
    Exterior,
}

/// Side certificate: a winding number computed on a certified polygonal
/// enclosure of the curve, valid because the point clears the enclosure
/// tube.
#[derive(Clone, Debug)]
pub struct JordanSideCert {
    pub point: Pt2,
    pub side: CurveSide,
    pub winding_evidence: i32,
    /// Certified lower bound on the distance to the true curve.
    pub clearance: Rat,
}

/// Exact squared distance from a point to a segment.
fn segment_dist2(a: &Pt2, b: &Pt2, x: &Pt2) -> Rat {
    let d = b.sub(a);
    let len2 = d.norm2();
    if len2.is_zero() {
        return x.dist2(a);
    }
    let u = x.sub(a).dot(&d) / &len2;
    let u = u.max(Rat::zero()).min(Rat::one());
    x.dist2(&a.add(&d.scale(&u)))
}

/// Adaptive polygonal enclosure of the closed curve, refined only where the
/// query point is close: returns the polygon and a certified clearance of
/// the query point to the true curve, valid for the winding transfer.
fn adaptive_curve_polygon(
    f: &dyn PathOracle,
    x: &PtEnc,
    meter: &mut FuelMeter,
) -> Semi<(Vec<Pt2>, Rat)> {
    // Vertices sampled along f at adaptive times. Each cell records its
    // endpoint samples; the curve chunk over a cell stays within
    // spread(cell) + err of the chord, so the point must clear each chord by
    // that cell's own tube radius.
    let prec = 32;
    let eval = |t: &Rat, meter: &mut FuelMeter| -> Option<PtEnc> {
        if !meter.try_spend(1) {
            return None;
        }
        f.eval(t, prec).ok()
    };
    let Some(first) = eval(&Rat::zero(), meter) else {
        return Semi::Unknown(Starved::at("side_semitest:eval", meter));
    };
    let Some(last) = eval(&Rat::one(), meter) else {
        return Semi::Unknown(Starved::at("side_semitest:eval", meter));
    };
    let mut times: Vec<Rat> = vec![Rat::zero(), Rat::one()];
    let mut samples: Vec<PtEnc> = vec![first, last];

    // Refine until every cell's chord clears the point by twice its tube
    // radius (or the budget dies). Tube radius of a cell of half-width h:
    // image spread over h plus evaluation errors.
    loop {
        let mut worst: Option<usize> = None;
        let mut all_clear = true;
        let mut clearance: Option<Rat> = None;
        for i in 0..times.len() - 1 {
            let half = (&times[i + 1] - &times[i]).halve();
            let tube = crate::path::image_spread(f, &half)
                + &samples[i].err
                + &samples[i + 1].err;
            let d_lb =
                segment_dist2(&samples[i].pt, &samples[i + 1].pt, &x.pt).sqrt_lower(32)
                    - &x.err;
            if d_lb <= &tube * Rat::from_int(2) {
                all_clear = false;
                worst = Some(i);
                break;
            }
            let c = &d_lb - &tube;
            clearance = Some(match clearance {
                None => c,
                Some(m) => m.min(c),
            });
        }
        if all_clear {
            // The two exact square edges: (1,1)->(0,1)->(0,0). The point
            // must clear them too (they carry no tube).
            let corner = Pt2::from_ints(0, 1);
            let e1 = segment_dist2(&last_pt(&samples), &corner, &x.pt).sqrt_lower(32) - &x.err;
            let e2 = segment_dist2(&corner, &samples[0].pt, &x.pt).sqrt_lower(32) - &x.err;
            let edge_clear = e1.min(e2);
            if !edge_clear.is_positive() {
                return Semi::Unknown(Starved::at("side_semitest:edge", meter));
            }
            let clearance = clearance
                .unwrap_or_else(|| edge_clear.clone())
                .min(edge_clear)
                .max(Rat::zero());
            let mut polygon: Vec<Pt2> = samples.iter().map(|e| e.pt.clone()).collect();
            polygon.push(corner);
            return Semi::Accepted((polygon, clearance));
        }
        let Some(i) = worst else { unreachable!() };
        let mid = Rat::mid(&times[i], &times[i + 1]);
        if &mid - &times[i] < Rat::pow2(-60) {
            // The point is (numerically) on the curve.
            return Semi::Unknown(Starved::at("side_semitest:on-curve", meter));
        }
        let Some(sample) = eval(&mid, meter) else {
            return Semi::Unknown(Starved::at("side_semitest:refine", meter));
        };
        times.insert(i + 1, mid);
        samples.insert(i + 1, sample);
    }
}

fn last_pt(samples: &[PtEnc]) -> Pt2 {
    samples[samples.len() - 1].pt.clone()
}

/// Semi-decides the side of `x` relative to the closed curve: refines a
/// polygonal enclosure (adaptively, only near the point) until the point has
/// certified clearance, then decides by exact winding number. Points on or
/// too near the curve stay `unknown`.
pub fn side_semitest(f: &dyn PathOracle, x: &Pt2, fuel: u64) -> Semi<JordanSideCert> {
    let mut meter = FuelMeter::new(fuel);
    side_semitest_enc(f, &PtEnc::exact(x.clone()), &mut meter)
}

pub(crate) fn side_semitest_enc(
    f: &dyn PathOracle,
    x: &PtEnc,
    meter: &mut FuelMeter,
) -> Semi<JordanSideCert> {
    let (polygon, clearance) = match adaptive_curve_polygon(f, x, meter) {
        Semi::Accepted(p) => p,
        Semi::Unknown(s) => return Semi::Unknown(s),
    };
    let w = winding_number(&polygon, &x.pt);
    let side = match w {
        0 => CurveSide::Exterior,
        1 | -1 => CurveSide::Interior,
        _ => {
            // A Jordan curve cannot wind twice: the injectivity assumption
            // failed. Surface as starvation with a distinguished stage name.
            return Semi::Unknown(Starved {
                stage: format!("side_semitest:winding-anomaly({})", w),
                fuel_spent: meter.spent(),
            });
        }
    };
    Semi::Accepted(JordanSideCert {
        point: x.pt.clone(),
        side,
        winding_evidence: w,
        clearance,
    })
}

/// Certified parameter enclosure with the image landing on range(f).
#[derive(Clone, Debug)]
pub struct BetaCert {
    pub beta_interval: (Rat, Rat),
    /// Enclosure of g over the beta interval.
    pub image: PtEnc,
    /// The two bracketing side certificates.
    pub interior_witness: (Rat, JordanSideCert),
    pub exterior_witness: (Rat, JordanSideCert),
}

/// Candidate produced when g provably rides along range(f): a rational
/// parameter whose whole neighborhood image stays within the tolerance of
/// the range.
#[derive(Clone, Debug)]
pub struct RangeRideCert {
    pub beta: Rat,
    pub half_width: Rat,
    /// Certified upper bound on sup distance of the neighborhood image to
    /// range(f); at most `2^-n`.
    pub distance_bound: Rat,
}

#[derive(Debug)]
pub enum BetaOutcome {
    Found(Box<BetaCert>),
    /// The flat branch: g([c-d; c+d]) certified within `2^-n` of range(f).
    RangeRide(RangeRideCert),
    /// Two side certificates contradict each other: the injectivity
    /// precondition failed. Names the witnesses.
    Inconsistent {
        point: Pt2,
        first: CurveSide,
        second: CurveSide,
    },
    Starved(Starved),
}

/// Locates `beta` with g(beta) on range(f) by nested bisection between an
/// interior-certified and an exterior-certified parameter, dovetailed with
/// the flat-branch semi-test that fires when bisection stalls.
pub fn find_beta(f: &dyn PathOracle, g: &dyn PathOracle, n: u32, fuel: u64) -> BetaOutcome {
    let mut meter = FuelMeter::new(fuel);
    let target = Rat::pow2(-(n as i32));

    // Cache of classified probes for contradiction detection.
    let mut classified: Vec<(Rat, JordanSideCert)> = Vec::new();

    let classify = |t: &Rat, meter: &mut FuelMeter| -> Option<JordanSideCert> {
        let prec = 24 + n / 2;
        let e = g.eval(t, prec).ok()?;
        let quantum = (meter.remaining() / 8).max(2048).min(meter.remaining());
        let mut sub = FuelMeter::new(quantum);
        let out = side_semitest_enc(f, &e, &mut sub);
        let spent = sub.spent();
        let _ = meter.try_spend(spent);
        out.accepted()
    };

    // Bracket search over dyadic probes.
    let mut bracket: Option<((Rat, JordanSideCert), (Rat, JordanSideCert))> = None;
    'search: for level in 1u32..=12 {
        let cells = 1u64 << level;
        for i in 1..cells {
            if i % 2 == 0 {
                continue; // already probed at a coarser level
            }
            let t = Rat::new(i as i64, cells as i64);
            if meter.exhausted() {
                return BetaOutcome::Starved(Starved::at("find_beta:bracket", &meter));
            }
            let Some(cert) = classify(&t, &mut meter) else {
                continue;
            };
            // Contradiction check against earlier probes at the same time.
            for (pt, prev) in &classified {
                if pt == &t && prev.side != cert.side {
                    return BetaOutcome::Inconsistent {
                        point: cert.point,
                        first: prev.side,
                        second: cert.side,
                    };
                }
            }
            classified.push((t.clone(), cert.clone()));
            // Closest opposite-side pair so far.
            let mut best: Option<((Rat, JordanSideCert), (Rat, JordanSideCert))> = None;
            for (ta, ca) in &classified {
                for (tb, cb) in &classified {
                    if ta < tb && ca.side != cb.side {
                        let width = tb - ta;
                        let better = match &best {
                            None => true,
                            Some(((ba, _), (bb, _))) => width < bb - ba,
                        };
                        if better {
                            best = Some(((ta.clone(), ca.clone()), (tb.clone(), cb.clone())));
                        }
                    }
                }
            }
            if let Some(b) = best {
                bracket = Some(b);
                break 'search;
            }
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return BetaOutcome::Starved(Starved::at("find_beta:no-bracket", &meter));
    };

    // Nested bisection with a stall-triggered flat branch.
    let mut stall = 0u32;
    while &hi.0 - &lo.0 > target {
        if meter.exhausted() {
            return BetaOutcome::Starved(Starved::at("find_beta:bisect", &meter));
        }
        // Probe ladder around the midpoint.
        let span = &hi.0 - &lo.0;
        let mut progressed = false;
        for j in 1u32..=6 {
            let offsets = [
                Rat::mid(&lo.0, &hi.0),
                &lo.0 + &(&span * &Rat::new(1, 2 << j)),
                &hi.0 - &(&span * &Rat::new(1, 2 << j)),
            ];
            for t in offsets {
                if t <= lo.0 || t >= hi.0 {
                    continue;
                }
                if let Some(cert) = classify(&t, &mut meter) {
                    if cert.side == lo.1.side {
                        lo = (t, cert);
                    } else {
                        hi = (t, cert);
                    }
                    progressed = true;
                    break;
                }
            }
            if progressed {
                break;
            }
        }
        if !progressed {
            stall += 1;
            if stall >= 2 {
                // Flat branch: does g ride along range(f) inside the
                // bracket?
                if let Some(ride) =
                    range_ride_candidate(f, g, &lo.0, &hi.0, &target, &mut meter)
                {
                    return BetaOutcome::RangeRide(ride);
                }
            }
            if stall > 8 {
                return BetaOutcome::Starved(Starved::at("find_beta:stall", &meter));
            }
        } else {
            stall = 0;
        }
    }

    let prec = n + 6;
    let image = match image_enclosure(g, &(lo.0.clone(), hi.0.clone()), prec) {
        Some(img) => img,
        None => return BetaOutcome::Starved(Starved::at("find_beta:image", &meter)),
    };
    let (interior_witness, exterior_witness) = if lo.1.side == CurveSide::Interior {
        (lo.clone(), hi.clone())
    } else {
        (hi.clone(), lo.clone())
    };
    BetaOutcome::Found(Box::new(BetaCert {
        beta_interval: (lo.0, hi.0),
        image,
        interior_witness,
        exterior_witness,
    }))
}

/// Certifies that g([c-d; c+d]) stays within `tol` of range(f) for a
/// tolerance-scaled half-width `d` around the bracket midpoint: samples g on
/// a mesh whose drift stays below `tol/4` and bounds each sample's distance
/// to range(f) from above by an adaptively found witness point on f.
fn range_ride_candidate(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    lo: &Rat,
    hi: &Rat,
    tol: &Rat,
    meter: &mut FuelMeter,
) -> Option<RangeRideCert> {
    let c = Rat::mid(lo, hi);
    let span = hi - lo;
    let half = (tol * Rat::from_int(2)).min(span.halve());
    let a = (&c - &half).max(lo.clone());
    let b = (&c + &half).min(hi.clone());
    let quarter_tol = tol.halve().halve();
    let step = g.modulus(&quarter_tol);
    let prec = 32;

    let mut sup_bound = Rat::zero();
    let mut t = a.clone();
    loop {
        if !meter.try_spend(1) {
            return None;
        }
        let e = g.eval(&t, prec).ok()?;
        let witness = nearest_range_dist_ub(&e.pt, f, tol, meter)?;
        // Points of g within this mesh cell stay within quarter_tol of the
        // sample; the sample sits within witness + err of range(f).
        let cell_bound = witness + &e.err + &quarter_tol;
        if cell_bound > sup_bound {
            sup_bound = cell_bound;
        }
        if t >= b {
            break;
        }
        let next = &t + &step;
        t = if next > b { b.clone() } else { next };
    }
    if &sup_bound <= tol {
        Some(RangeRideCert {
            beta: c,
            half_width: &b - &a,
            distance_bound: sup_bound,
        })
    } else {
        None
    }
}

/// Upper bound on `d(x, range(f))` by adaptive descent: a coarse scan picks
/// the most promising time cell, then repeated local subdivision shrinks it.
/// Any evaluated point is a valid witness, so the bound is always sound;
/// descent merely tightens it.
fn nearest_range_dist_ub(
    x: &Pt2,
    f: &dyn PathOracle,
    tol: &Rat,
    meter: &mut FuelMeter,
) -> Option<Rat> {
    let prec = 32;
    let coarse = 64u64;
    let mut best: Option<(Rat, Rat)> = None; // (time, distance ub)
    for i in 0..=coarse {
        if !meter.try_spend(1) {
            return best.map(|(_, d)| d);
        }
        let t = Rat::new(i as i64, coarse as i64);
        let Ok(e) = f.eval(&t, prec) else {
            continue;
        };
        let d = e.pt.dist2(x).sqrt_upper(32) + &e.err;
        match &best {
            Some((_, bd)) if bd <= &d => {}
            _ => best = Some((t, d)),
        }
    }
    let (mut center, mut best_d) = best?;
    let mut radius = Rat::new(1, coarse as i64);
    let stop = f.modulus(&tol.halve());
    while radius > stop {
        radius = radius.halve();
        for t in [
            (&center - &radius).max(Rat::zero()),
            (&center + &radius).min(Rat::one()),
        ] {
            if !meter.try_spend(1) {
                return Some(best_d);
            }
            let Ok(e) = f.eval(&t, prec) else {
                continue;
            };
            let d = e.pt.dist2(x).sqrt_upper(32) + &e.err;
            if d < best_d {
                best_d = d;
                center = t;
            }
        }
    }
    Some(best_d)
}

/// Outcome of parameter inversion on the injective path.
#[derive(Debug)]
pub enum InvertOutcome {
    /// Parameter interval of width at most `2^-n`.
    Interval((Rat, Rat)),
    /// Without (or despite) an injectivity modulus the surviving parameter
    /// set stayed wider than requested; the union hull is returned flagged.
    WideUnion {
        hull: (Rat, Rat),
        cells: Vec<(Rat, Rat)>,
    },
    Starved(Starved),
}

/// Inverts the injective path on an image enclosure: returns a parameter
/// interval whose image provably meets the enclosure. With a caller-supplied
/// injectivity modulus (omega with |f(s)-f(t)| >= omega(|s-t|), increasing)
/// the surviving set provably shrinks to width `2^-n`; without it the union
/// of surviving cells is returned, possibly wider, flagged as such.
pub fn invert_on_range(
    f: &dyn PathOracle,
    y: &PtEnc,
    injectivity_modulus: Option<&dyn Fn(&Rat) -> Rat>,
    n: u32,
    fuel: u64,
) -> InvertOutcome {
    let mut meter = FuelMeter::new(fuel);
    let target = Rat::pow2(-(n as i32));

    let mut last_cells: Vec<(Rat, Rat)> = vec![(Rat::zero(), Rat::one())];
    for k in 2u32..36 {
        let cells = 1u64 << k;
        let step = Rat::pow2(-(k as i32));
        let prec = k + 4;
        let mut survivors: Vec<(Rat, Rat)> = Vec::new();
        let mut anchor: Option<(Rat, Rat)> = None; // (time, image distance ub)
        for i in 0..cells {
            let a = Rat::from_int(i as i64) * &step;
            let b = &a + &step;
            // Skip cells far outside the current survivor hull.
            if !last_cells.iter().any(|(lo, hi)| &a <= hi && &b >= lo) {
                continue;
            }
            if !meter.try_spend(1) {
                return InvertOutcome::Starved(Starved::at("invert:eliminate", &meter));
            }
            let Some(img) = image_enclosure(f, &(a.clone(), b.clone()), prec) else {
                continue;
            };
            let d_lb = img.pt.dist2(&y.pt).sqrt_lower(32) - &img.err - &y.err;
            if d_lb.is_positive() {
                continue; // provably misses the target
            }
            let d_ub = img.pt.dist2(&y.pt).sqrt_upper(32) + &img.err + &y.err;
            let mid = Rat::mid(&a, &b);
            match &anchor {
                Some((_, best)) if best <= &d_ub => {}
                _ => anchor = Some((mid, d_ub)),
            }
            match survivors.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => survivors.push((a, b)),
            }
        }
        if survivors.is_empty() {
            // The enclosure misses the range at this resolution entirely.
            return InvertOutcome::Starved(Starved::at("invert:no-survivors", &meter));
        }
        // Injectivity pruning around the anchor cell.
        if let (Some(omega), Some((t_star, d_star))) = (injectivity_modulus, &anchor) {
            let reach_bound = d_star + &(Rat::from_int(2) * &y.err) + &target;
            let mut radius = Rat::one();
            for _ in 0..60 {
                let half = radius.halve();
                if omega(&half) > reach_bound {
                    radius = half;
                } else {
                    break;
                }
            }
            let lo = t_star - &radius;
            let hi = t_star + &radius;
            survivors.retain(|(a, b)| b >= &lo && a <= &hi);
            for cell in &mut survivors {
                if cell.0 < lo {
                    cell.0 = lo.clone();
                }
                if cell.1 > hi {
                    cell.1 = hi.clone();
                }
            }
        }
        let hull = (
            survivors[0].0.clone(),
            survivors[survivors.len() - 1].1.clone(),
        );
        if &hull.1 - &hull.0 <= target {
            return InvertOutcome::Interval(hull);
        }
        last_cells = survivors.clone();
        if meter.exhausted() || (injectivity_modulus.is_none() && k >= 14) {
            return InvertOutcome::WideUnion {
                hull,
                cells: survivors,
            };
        }
    }
    InvertOutcome::Starved(Starved::at("invert:depth", &meter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{anti_diagonal_path, diagonal_path};

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn diagonal_side_examples() {
        // Curve = diagonal + left edge + top edge: upper-left triangle is
        // the interior.
        let f = diagonal_path();
        match side_semitest(&f, &Pt2::new(r(1, 4), r(3, 4)), 200_000) {
            Semi::Accepted(cert) => {
                assert_eq!(cert.side, CurveSide::Interior);
                assert!(cert.clearance >= r(1, 8), "clearance {}", cert.clearance);
                assert_eq!(cert.winding_evidence.abs(), 1);
            }
            Semi::Unknown(s) => panic!("starved: {}", s),
        }
        match side_semitest(&f, &Pt2::new(r(3, 4), r(1, 4)), 200_000) {
            Semi::Accepted(cert) => assert_eq!(cert.side, CurveSide::Exterior),
            Semi::Unknown(s) => panic!("starved: {}", s),
        }
        // On the curve: unknown at any fuel.
        assert!(!side_semitest(&f, &Pt2::new(r(1, 2), r(1, 2)), 100_000).is_accepted());
    }

    #[test]
    fn beta_for_diagonal_pair() {
        let f = diagonal_path();
        let g = anti_diagonal_path();
        match find_beta(&f, &g, 20, 4_000_000) {
            BetaOutcome::Found(cert) => {
                let (lo, hi) = &cert.beta_interval;
                assert!(hi - lo <= Rat::pow2(-20));
                assert!(lo <= &r(1, 2) && &r(1, 2) <= hi);
                // Image encloses (1/2, 1/2).
                let c = Pt2::new(r(1, 2), r(1, 2));
                assert!(cert.image.pt.dist2(&c).sqrt_upper(32) <= cert.image.err);
                assert_eq!(cert.interior_witness.1.side, CurveSide::Interior);
                assert_eq!(cert.exterior_witness.1.side, CurveSide::Exterior);
            }
            other => panic!("expected beta, got {:?}", other),
        }
    }

    #[test]
    fn invert_diagonal_at_center() {
        let f = diagonal_path();
        let y = PtEnc::new(Pt2::new(r(1, 2), r(1, 2)), Rat::pow2(-20));
        let omega = |d: &Rat| d.clone(); // |f(s)-f(t)| = sqrt(2) |s-t| >= |s-t|
        match invert_on_range(&f, &y, Some(&omega), 10, 2_000_000) {
            InvertOutcome::Interval((lo, hi)) => {
                assert!(&hi - &lo <= Rat::pow2(-10));
                assert!(lo <= r(1, 2) && r(1, 2) <= hi);
            }
            other => panic!("expected interval, got {:?}", other),
        }
    }

    #[test]
    fn invert_without_modulus_flags_widely() {
        // A path that pauses spatially: f(t) = (1/2,1/2) for t in [1/4;3/4].
        let f = crate::path::PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (r(1, 4), Pt2::new(r(1, 2), r(1, 2))),
            (r(3, 4), Pt2::new(r(1, 2), r(1, 2))),
            (Rat::one(), Pt2::from_ints(1, 1)),
        ])
        .unwrap();
        let y = PtEnc::new(Pt2::new(r(1, 2), r(1, 2)), Rat::pow2(-20));
        match invert_on_range(&f, &y, None, 12, 2_000_000) {
            InvertOutcome::WideUnion { hull, .. } => {
                // The flat stretch keeps the hull wide.
                assert!(&hull.1 - &hull.0 >= r(1, 3));
            }
            other => panic!("expected wide union, got {:?}", other),
        }
    }
}
