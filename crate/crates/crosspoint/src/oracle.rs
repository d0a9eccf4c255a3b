//! Brute-force exact ground truth over polyline data: all range
//! intersections, exact ball entry/exit times in the quadratic extension,
//! exact point-to-polyline distances, and exact winding numbers.
//!
//! Everything here is independent of the certified machinery it validates:
//! no covers, no enclosures, no fuel — just exact algebra.

use crate::geom::Pt2;
use crate::path::PolylinePath;
use crate::quad::QuadVal;
use crate::rat::Rat;

/// Exact intersection data of two polyline ranges.
#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Deduplicated intersection points in lexicographic order, each with
    /// every exact parameter pair (time on f, time on g) that realizes it.
    pub points: Vec<(Pt2, Vec<(Rat, Rat)>)>,
    /// Collinear overlap spans, reported as parameter intervals on f and g
    /// together with the shared segment endpoints.
    pub overlaps: Vec<OverlapSpan>,
}

#[derive(Clone, Debug)]
pub struct OverlapSpan {
    pub f_interval: (Rat, Rat),
    pub g_interval: (Rat, Rat),
    pub endpoints: (Pt2, Pt2),
}

impl OracleResult {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.overlaps.is_empty()
    }

    /// Does any intersection point (or overlap endpoint) lie in the closed
    /// box `[xlo;xhi] x [ylo;yhi]`?
    pub fn any_point_in_box(&self, xlo: &Rat, xhi: &Rat, ylo: &Rat, yhi: &Rat) -> bool {
        let inside = |p: &Pt2| {
            &p.x >= xlo && &p.x <= xhi && &p.y >= ylo && &p.y <= yhi
        };
        self.points.iter().any(|(p, _)| inside(p))
            || self
                .overlaps
                .iter()
                .any(|o| inside(&o.endpoints.0) || inside(&o.endpoints.1))
    }
}

/// Every intersection point of the two ranges by exact segment-pair solves.
pub fn polyline_intersections(f: &PolylinePath, g: &PolylinePath) -> OracleResult {
    let mut raw: Vec<(Pt2, Rat, Rat)> = Vec::new();
    let mut overlaps = Vec::new();

    for ((s0, p0), (s1, p1)) in f.segments() {
        for ((u0, q0), (u1, q1)) in g.segments() {
            segment_pair(
                (s0, p0, s1, p1),
                (u0, q0, u1, q1),
                &mut raw,
                &mut overlaps,
            );
        }
    }

    // Deduplicate by exact coordinates, lexicographic order.
    raw.sort_by(|a, b| {
        (&a.0.x, &a.0.y, &a.1, &a.2).cmp(&(&b.0.x, &b.0.y, &b.1, &b.2))
    });
    let mut points: Vec<(Pt2, Vec<(Rat, Rat)>)> = Vec::new();
    for (p, tf, tg) in raw {
        match points.last_mut() {
            Some((q, params)) if *q == p => {
                if !params.contains(&(tf.clone(), tg.clone())) {
                    params.push((tf, tg));
                }
            }
            _ => points.push((p, vec![(tf, tg)])),
        }
    }
    OracleResult { points, overlaps }
}

#[allow(clippy::type_complexity)]
fn segment_pair(
    (s0, p0, s1, p1): (&Rat, &Pt2, &Rat, &Pt2),
    (u0, q0, u1, q1): (&Rat, &Pt2, &Rat, &Pt2),
    out: &mut Vec<(Pt2, Rat, Rat)>,
    overlaps: &mut Vec<OverlapSpan>,
) {
    let d1 = p1.sub(p0);
    let d2 = q1.sub(q0);
    let denom = d1.cross(&d2);
    let w = q0.sub(p0);
    if !denom.is_zero() {
        let u = w.cross(&d2) / &denom;
        let v = w.cross(&d1) / &denom;
        let zero = Rat::zero();
        let one = Rat::one();
        if u >= zero && u <= one && v >= zero && v <= one {
            let point = p0.add(&d1.scale(&u));
            let tf = s0 + &u * (s1 - s0);
            let tg = u0 + &v * (u1 - u0);
            out.push((point, tf, tg));
        }
        return;
    }
    // Parallel. Disjoint lines unless collinear.
    if !w.cross(&d1).is_zero() {
        return;
    }
    // Collinear: project g's endpoints onto f's segment parameter.
    let len2 = d1.norm2();
    if len2.is_zero() {
        // Degenerate zero-length f segment: single point; check membership.
        if q0.sub(p0).cross(&d2).is_zero() {
            let t2 = d2.norm2();
            if !t2.is_zero() {
                let v = p0.sub(q0).dot(&d2) / &t2;
                if v >= Rat::zero() && v <= Rat::one() {
                    let tg = u0 + &v * (u1 - u0);
                    out.push((p0.clone(), s0.clone(), tg));
                }
            } else if p0 == q0 {
                out.push((p0.clone(), s0.clone(), u0.clone()));
            }
        }
        return;
    }
    let proj = |pt: &Pt2| pt.sub(p0).dot(&d1) / &len2;
    let (mut va, mut vb) = (proj(q0), proj(q1));
    let swapped = va > vb;
    if swapped {
        std::mem::swap(&mut va, &mut vb);
    }
    let lo = va.max(Rat::zero());
    let hi = vb.min(Rat::one());
    if lo > hi {
        return;
    }
    let at = |v: &Rat| p0.add(&d1.scale(v));
    let f_time = |v: &Rat| s0 + v * (s1 - s0);
    let g_time = |pt: &Pt2| -> Rat {
        let t2 = d2.norm2();
        if t2.is_zero() {
            u0.clone()
        } else {
            let v = pt.sub(q0).dot(&d2) / &t2;
            u0 + &v * (u1 - u0)
        }
    };
    if lo == hi {
        let pt = at(&lo);
        let tg = g_time(&pt);
        out.push((pt, f_time(&lo), tg));
        return;
    }
    let a_pt = at(&lo);
    let b_pt = at(&hi);
    let (ga, gb) = (g_time(&a_pt), g_time(&b_pt));
    overlaps.push(OverlapSpan {
        f_interval: (f_time(&lo), f_time(&hi)),
        g_interval: (ga.clone().min(gb.clone()), ga.max(gb)),
        endpoints: (a_pt, b_pt),
    });
}

/// Exact squared distance from `x` to the range of `f`.
pub fn min_distance_sq(x: &Pt2, f: &PolylinePath) -> Rat {
    let mut best: Option<Rat> = None;
    for ((_, p0), (_, p1)) in f.segments() {
        let d = p1.sub(p0);
        let len2 = d.norm2();
        let candidate = if len2.is_zero() {
            x.dist2(p0)
        } else {
            let u = x.sub(p0).dot(&d) / &len2;
            let u = u.max(Rat::zero()).min(Rat::one());
            x.dist2(&p0.add(&d.scale(&u)))
        };
        best = Some(match best {
            None => candidate,
            Some(b) => b.min(candidate),
        });
    }
    best.expect("polyline has at least one segment")
}

/// Exact stay and exit times of `f` for the ball `B(f(a), r)`: walking
/// forward from `a`, `fwd_stay` is the first time the open ball is left and
/// `fwd_exit` the first time the closed ball is left; `back_stay` and
/// `back_exit` mirror backward in time. Values live in the quadratic
/// extension.
#[derive(Clone, Debug)]
pub struct ExactReach {
    pub back_stay: QuadVal,
    pub fwd_stay: QuadVal,
    pub back_exit: QuadVal,
    pub fwd_exit: QuadVal,
}

pub fn exact_reach(f: &PolylinePath, a: &Rat, r: &Rat) -> ExactReach {
    let center = f.eval_exact(a);
    let r2 = r.square();
    let (q, q_prime) = forward_exits(f, a, &center, &r2);
    let rev = reverse_polyline(f);
    let ra = Rat::one() - a;
    let (pq, pq_prime) = forward_exits(&rev, &ra, &center, &r2);
    let one = Rat::one();
    let flip = |v: QuadVal| QuadVal::new(&one - &v.a, -&v.b, v.k);
    ExactReach {
        back_stay: flip(pq),
        fwd_stay: q,
        back_exit: flip(pq_prime),
        fwd_exit: q_prime,
    }
}

fn reverse_polyline(f: &PolylinePath) -> PolylinePath {
    let one = Rat::one();
    let mut bps: Vec<(Rat, Pt2)> = f
        .breakpoints()
        .iter()
        .map(|(t, p)| (&one - t, p.clone()))
        .collect();
    bps.reverse();
    PolylinePath::new(bps).expect("reversal preserves validity")
}

/// First times after `a` where the squared distance to `center` reaches
/// (`>=`, for the open-ball exit) and strictly exceeds (`>`, closed-ball
/// exit) `r2`. Returns rational 1 values when the path never exits.
fn forward_exits(f: &PolylinePath, a: &Rat, center: &Pt2, r2: &Rat) -> (QuadVal, QuadVal) {
    let mut open_exit: Option<QuadVal> = None;
    let mut closed_exit: Option<QuadVal> = None;

    for ((t0, p0), (t1, p1)) in f.segments() {
        if t1 <= a {
            continue;
        }
        let lo = if t0 >= a { t0.clone() } else { a.clone() };
        let dt = t1 - t0;
        let v = Pt2::new((&p1.x - &p0.x) / &dt, (&p1.y - &p0.y) / &dt);
        let w = p0.sub(center);
        // d^2(t) = A (t-t0)^2 + B (t-t0) + C
        let qa = v.norm2();
        let qb = Rat::from_int(2) * w.dot(&v);
        let qc = w.norm2();

        let d2_at = |t: &Rat| -> Rat {
            let tau = t - t0;
            &qa * tau.square() + &qb * &tau + &qc
        };
        let d2_lo = d2_at(&lo);

        if open_exit.is_none() {
            if d2_lo >= *r2 {
                open_exit = Some(QuadVal::rational(lo.clone()));
            } else if let Some(t) = first_reach(&qa, &qb, t0, &lo, t1, &(&qc - r2), false) {
                open_exit = Some(t);
            }
        }
        if closed_exit.is_none() {
            if d2_lo > *r2 {
                closed_exit = Some(QuadVal::rational(lo.clone()));
            } else if let Some(t) = first_reach(&qa, &qb, t0, &lo, t1, &(&qc - r2), true) {
                closed_exit = Some(t);
            }
        }
        if open_exit.is_some() && closed_exit.is_some() {
            break;
        }
    }
    let one = QuadVal::rational(Rat::one());
    (
        open_exit.unwrap_or_else(|| one.clone()),
        closed_exit.unwrap_or(one),
    )
}

/// Smallest `t` in `[lo; t1]` where the quadratic `qa*(t-t0)^2 + qb*(t-t0)
/// + c_shift` (with `c_shift = d^2(t0) - r^2`) reaches 0 from below — i.e.
/// the exit crossing — given that the value at `lo` is strictly below 0
/// (non-strict mode) or at most 0 (strict mode). Strict mode finds the
/// opening point of `{> 0}` and requires it before the segment end.
fn first_reach(
    qa: &Rat,
    qb: &Rat,
    t0: &Rat,
    lo: &Rat,
    t1: &Rat,
    c_shift: &Rat,
    strict: bool,
) -> Option<QuadVal> {
    if qa.is_zero() {
        if qb.is_positive() {
            // Linear growth: crosses at tau = -c_shift / qb.
            let t = t0 + &(-c_shift / qb);
            let upper = if strict { &t < t1 } else { &t <= t1 };
            if upper && &t >= lo {
                return Some(QuadVal::rational(t));
            }
        }
        return None;
    }
    // Upward parabola: the relevant crossing is the right root.
    let disc = qb.square() - Rat::from_int(4) * qa * c_shift;
    if disc.is_negative() {
        return None;
    }
    let two_a = Rat::from_int(2) * qa;
    let root = QuadVal::new(t0 - &(qb / &two_a), two_a.recip(), disc);
    let at_least_lo = root.cmp_rat(lo) != std::cmp::Ordering::Less;
    let within = if strict {
        root.cmp_rat(t1) == std::cmp::Ordering::Less
    } else {
        root.cmp_rat(t1) != std::cmp::Ordering::Greater
    };
    if at_least_lo && within {
        Some(root)
    } else {
        None
    }
}

/// Exact winding number of a closed rational polygon around `x`, which must
/// not lie on the polygon.
pub fn winding_number(polygon: &[Pt2], x: &Pt2) -> i32 {
    let n = polygon.len();
    let mut w = 0i32;
    for i in 0..n {
        let a = &polygon[i];
        let b = &polygon[(i + 1) % n];
        let orient = b.sub(a).cross(&x.sub(a)).signum();
        if a.y <= x.y {
            if b.y > x.y && orient > 0 {
                w += 1;
            }
        } else if b.y <= x.y && orient < 0 {
            w -= 1;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{anti_diagonal_path, diagonal_path};

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn diagonals_cross_at_center() {
        let res = polyline_intersections(&diagonal_path(), &anti_diagonal_path());
        assert_eq!(res.points.len(), 1);
        assert!(res.overlaps.is_empty());
        let (p, params) = &res.points[0];
        assert_eq!(*p, Pt2::new(r(1, 2), r(1, 2)));
        assert_eq!(params[0], (r(1, 2), r(1, 2)));
    }

    #[test]
    fn disjoint_polylines_empty() {
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (Rat::one(), Pt2::new(r(1, 4), r(0, 1))),
        ])
        .unwrap();
        let g = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(r(0, 1), r(1, 1))),
            (Rat::one(), Pt2::new(r(1, 4), r(1, 1))),
        ])
        .unwrap();
        assert!(polyline_intersections(&f, &g).is_empty());
    }

    #[test]
    fn collinear_overlap_reported() {
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (Rat::one(), Pt2::from_ints(1, 0)),
        ])
        .unwrap();
        let g = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(r(1, 2), Rat::zero())),
            (Rat::one(), Pt2::new(r(3, 2), Rat::zero())),
        ])
        .unwrap();
        let res = polyline_intersections(&f, &g);
        assert_eq!(res.overlaps.len(), 1);
        let o = &res.overlaps[0];
        assert_eq!(o.f_interval, (r(1, 2), Rat::one()));
        assert_eq!(o.endpoints.0, Pt2::new(r(1, 2), Rat::zero()));
        assert_eq!(o.endpoints.1, Pt2::new(Rat::one(), Rat::zero()));
    }

    #[test]
    fn permuting_segments_gives_identical_points() {
        // Same geometric range, different segment decomposition.
        let f1 = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (Rat::one(), Pt2::from_ints(1, 1)),
        ])
        .unwrap();
        let f2 = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (r(1, 3), Pt2::new(r(1, 3), r(1, 3))),
            (Rat::one(), Pt2::from_ints(1, 1)),
        ])
        .unwrap();
        let g = anti_diagonal_path();
        let a = polyline_intersections(&f1, &g);
        let b = polyline_intersections(&f2, &g);
        let pa: Vec<&Pt2> = a.points.iter().map(|(p, _)| p).collect();
        let pb: Vec<&Pt2> = b.points.iter().map(|(p, _)| p).collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn min_distance_examples() {
        assert_eq!(
            min_distance_sq(&Pt2::from_ints(0, 0), &anti_diagonal_path()),
            r(1, 2)
        );
        assert_eq!(
            min_distance_sq(&Pt2::new(r(1, 2), r(1, 2)), &anti_diagonal_path()),
            Rat::zero()
        );
        assert_eq!(
            min_distance_sq(&Pt2::from_ints(2, 0), &diagonal_path()),
            Rat::from_int(2)
        );
    }

    #[test]
    fn reach_on_unit_speed_horizontal() {
        // f(t) = (t, 1/2): unit speed, exits B(f(1/2), 1/8) at 1/2 +- 1/8.
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(Rat::zero(), r(1, 2))),
            (Rat::one(), Pt2::new(Rat::one(), r(1, 2))),
        ])
        .unwrap();
        let reach = exact_reach(&f, &r(1, 2), &r(1, 8));
        assert_eq!(reach.fwd_stay.cmp_rat(&r(5, 8)), std::cmp::Ordering::Equal);
        assert_eq!(reach.fwd_exit.cmp_rat(&r(5, 8)), std::cmp::Ordering::Equal);
        assert_eq!(reach.back_stay.cmp_rat(&r(3, 8)), std::cmp::Ordering::Equal);
        assert_eq!(reach.back_exit.cmp_rat(&r(3, 8)), std::cmp::Ordering::Equal);
    }

    /// Asserts `2 (v - 1/2)^2 = 1/16` and the requested side of 1/2: the
    /// exact defining equation of the diagonal's crossing times for the
    /// radius-1/4 ball at f(1/2), robust to the radicand representation.
    fn assert_diagonal_crossing(v: &QuadVal, above: bool) {
        // (a + b sqrt(k) - 1/2)^2 expanded over Q(sqrt k).
        let sh = &v.a - &r(1, 2);
        let rational_part = sh.square() + &v.b.square() * &v.k;
        let radical_part = Rat::from_int(2) * &sh * &v.b;
        assert_eq!(Rat::from_int(2) * rational_part, r(1, 16));
        assert!(radical_part.is_zero() || v.k.is_zero() || sh.is_zero());
        let side = v.cmp_rat(&r(1, 2));
        if above {
            assert_eq!(side, std::cmp::Ordering::Greater);
        } else {
            assert_eq!(side, std::cmp::Ordering::Less);
        }
    }

    #[test]
    fn reach_on_diagonal_is_quadratic() {
        // f(t) = (t,t): |f(t)-f(1/2)| = |t-1/2| sqrt(2) = 1/4 at
        // t = 1/2 +- sqrt(2)/8, i.e. exactly where 2 (t-1/2)^2 = 1/16.
        let reach = exact_reach(&diagonal_path(), &r(1, 2), &r(1, 4));
        assert_diagonal_crossing(&reach.fwd_stay, true);
        assert_diagonal_crossing(&reach.fwd_exit, true);
        assert_diagonal_crossing(&reach.back_stay, false);
        assert_diagonal_crossing(&reach.back_exit, false);
        // And the value is irrational: bracketing bounds stay strict.
        let (lo, hi) = reach.fwd_stay.rat_bounds(40);
        assert!(lo < hi);
        assert!(lo > r(5, 8) && hi < r(7, 10));
    }

    #[test]
    fn reach_first_exit_only() {
        // Path leaves the ball, comes back, leaves again: q stays the FIRST
        // exit. Ball B((0,1/2), 1/4) around f(a) with a = 0.
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(Rat::zero(), r(1, 2))),
            (r(1, 4), Pt2::new(r(1, 2), r(1, 2))),
            (r(1, 2), Pt2::new(Rat::zero(), r(1, 2))),
            (Rat::one(), Pt2::new(Rat::one(), r(1, 2))),
        ])
        .unwrap();
        let reach = exact_reach(&f, &Rat::zero(), &r(1, 4));
        // Speed on first segment is 2: exits at t = 1/8.
        assert_eq!(reach.fwd_stay.cmp_rat(&r(1, 8)), std::cmp::Ordering::Equal);
        assert_eq!(reach.fwd_exit.cmp_rat(&r(1, 8)), std::cmp::Ordering::Equal);
    }

    #[test]
    fn reach_tangential_touch_separates_open_closed() {
        // Path rises to touch the circle |.| = 1/4 at one point, then
        // retreats, then finally exits: open-ball exit at the touch, closed-
        // ball exit later.
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(r(1, 2), r(1, 2))),
            (r(1, 4), Pt2::new(r(3, 4), r(1, 2))), // touches boundary
            (r(1, 2), Pt2::new(r(5, 8), r(1, 2))), // back inside
            (Rat::one(), Pt2::new(Rat::one(), r(1, 2))),
        ])
        .unwrap();
        let reach = exact_reach(&f, &Rat::zero(), &r(1, 4));
        assert_eq!(reach.fwd_stay.cmp_rat(&r(1, 4)), std::cmp::Ordering::Equal);
        // Closed-ball exit happens on the last segment: 5/8 + 3/8 s = 3/4
        // at s = 1/3 of the way from t=1/2 to t=1: t = 2/3.
        assert_eq!(reach.fwd_exit.cmp_rat(&r(2, 3)), std::cmp::Ordering::Equal);
    }

    #[test]
    fn winding_numbers() {
        let square = vec![
            Pt2::from_ints(0, 0),
            Pt2::from_ints(1, 0),
            Pt2::from_ints(1, 1),
            Pt2::from_ints(0, 1),
        ];
        assert_eq!(winding_number(&square, &Pt2::new(r(1, 2), r(1, 2))), 1);
        assert_eq!(winding_number(&square, &Pt2::from_ints(2, 2)), 0);
        let reversed: Vec<Pt2> = square.iter().rev().cloned().collect();
        assert_eq!(winding_number(&reversed, &Pt2::new(r(1, 2), r(1, 2))), -1);
    }
}
