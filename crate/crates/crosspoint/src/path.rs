//! Path oracles: computable paths [0;1] -> [0;1]^2 presented through
//! evaluation-to-precision plus a modulus of continuity.
//!
//! Two backend classes exist. Exact backends (polylines, piecewise
//! polynomials with rational coefficients) return error-0 values at rational
//! times; approximate backends return enclosures with error at most `2^-n`.
//! Everything downstream is margin-correct for both.

use std::sync::Arc;

use crate::error::PathError;
use crate::fuel::{FuelMeter, Semi, Starved};
use crate::geom::{CenteredBall, Pt2, PtEnc};
use crate::rat::Rat;

/// Evaluation-with-precision plus modulus of continuity.
///
/// Contracts: `eval(t, n)` returns an enclosure with `err <= 2^-n`,
/// deterministic per `(t, n)`; `modulus(gamma)` returns `delta > 0` with
/// `|f(a) - f(b)| < gamma` whenever `|a - b| < delta`, non-decreasing in
/// `gamma`. Implementations must be usable from multiple threads.
pub trait PathOracle: Send + Sync {
    fn eval(&self, t: &Rat, n: u32) -> Result<PtEnc, PathError>;
    fn modulus(&self, gamma: &Rat) -> Rat;
}

fn check_domain(t: &Rat) -> Result<(), PathError> {
    if t.is_negative() || t > &Rat::one() {
        return Err(PathError::TimeOutOfDomain { t: t.to_string() });
    }
    Ok(())
}

/// Piecewise-linear path through rational breakpoints. Evaluation is exact.
#[derive(Clone, Debug)]
pub struct PolylinePath {
    breakpoints: Vec<(Rat, Pt2)>,
    /// Componentwise Lipschitz sum: an exact rational upper bound for the
    /// Euclidean speed.
    slope_bound: Rat,
}

impl PolylinePath {
    /// Breakpoints must start at time 0, end at time 1, with strictly
    /// increasing times.
    pub fn new(breakpoints: Vec<(Rat, Pt2)>) -> Result<Self, String> {
        if breakpoints.len() < 2 {
            return Err("polyline needs at least two breakpoints".into());
        }
        if !breakpoints[0].0.is_zero() {
            return Err("first breakpoint time must be 0".into());
        }
        if breakpoints[breakpoints.len() - 1].0 != Rat::one() {
            return Err("last breakpoint time must be 1".into());
        }
        for w in breakpoints.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(format!(
                    "breakpoint times must strictly increase ({} then {})",
                    w[0].0, w[1].0
                ));
            }
        }
        let mut slope = Rat::zero();
        for w in breakpoints.windows(2) {
            let dt = &w[1].0 - &w[0].0;
            let dx = (&w[1].1.x - &w[0].1.x).abs();
            let dy = (&w[1].1.y - &w[0].1.y).abs();
            let s = (dx + dy) / &dt;
            if s > slope {
                slope = s;
            }
        }
        Ok(PolylinePath {
            breakpoints,
            slope_bound: slope,
        })
    }

    /// Evenly spaced times over the given points.
    pub fn from_points(points: Vec<Pt2>) -> Result<Self, String> {
        let n = points.len();
        if n < 2 {
            return Err("polyline needs at least two points".into());
        }
        let last = Rat::from_int((n - 1) as i64);
        let bps = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| (Rat::from_int(i as i64) / &last, p))
            .collect();
        PolylinePath::new(bps)
    }

    pub fn breakpoints(&self) -> &[(Rat, Pt2)] {
        &self.breakpoints
    }

    pub fn eval_exact(&self, t: &Rat) -> Pt2 {
        debug_assert!(!t.is_negative() && t <= &Rat::one());
        let bps = &self.breakpoints;
        let mut i = match bps.binary_search_by(|(bt, _)| bt.cmp(t)) {
            Ok(i) => return bps[i].1.clone(),
            Err(i) => i,
        };
        // t strictly between bps[i-1] and bps[i].
        if i == 0 {
            i = 1;
        }
        if i == bps.len() {
            i = bps.len() - 1;
        }
        let (t0, p0) = &bps[i - 1];
        let (t1, p1) = &bps[i];
        let w = (t - t0) / (t1 - t0);
        p0.add(&p1.sub(p0).scale(&w))
    }

    pub fn segments(&self) -> impl Iterator<Item = (&(Rat, Pt2), &(Rat, Pt2))> {
        self.breakpoints.windows(2).map(|w| (&w[0], &w[1]))
    }
}

impl PathOracle for PolylinePath {
    fn eval(&self, t: &Rat, _n: u32) -> Result<PtEnc, PathError> {
        check_domain(t)?;
        Ok(PtEnc::exact(self.eval_exact(t)))
    }

    fn modulus(&self, gamma: &Rat) -> Rat {
        assert!(gamma.is_positive());
        if self.slope_bound.is_zero() {
            return Rat::one();
        }
        gamma / &self.slope_bound
    }
}

/// One polynomial piece evaluated by Horner's rule.
#[derive(Clone, Debug)]
pub struct PolyPiece {
    pub t0: Rat,
    pub t1: Rat,
    pub x: Vec<Rat>,
    pub y: Vec<Rat>,
}

fn horner(coeffs: &[Rat], t: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

fn derivative_bound(coeffs: &[Rat]) -> Rat {
    // |p'(t)| <= sum i*|c_i| on [0;1].
    let mut b = Rat::zero();
    for (i, c) in coeffs.iter().enumerate().skip(1) {
        b = b + Rat::from_int(i as i64) * c.abs();
    }
    b
}

/// Piecewise-polynomial path with rational coefficients; exact at rational
/// times. Pieces are evaluated in the global time variable, which must stay
/// within [0;1].
#[derive(Clone, Debug)]
pub struct PwPolyPath {
    pieces: Vec<PolyPiece>,
    slope_bound: Rat,
}

impl PwPolyPath {
    pub fn new(pieces: Vec<PolyPiece>) -> Result<Self, String> {
        if pieces.is_empty() {
            return Err("pwpoly needs at least one piece".into());
        }
        if !pieces[0].t0.is_zero() {
            return Err("first piece must start at time 0".into());
        }
        if pieces[pieces.len() - 1].t1 != Rat::one() {
            return Err("last piece must end at time 1".into());
        }
        for w in pieces.windows(2) {
            if w[0].t1 != w[1].t0 {
                return Err(format!(
                    "pieces must abut: {} != {}",
                    w[0].t1, w[1].t0
                ));
            }
        }
        let mut slope = Rat::zero();
        for p in &pieces {
            if p.t0 >= p.t1 {
                return Err("piece must have positive length".into());
            }
            let s = derivative_bound(&p.x) + derivative_bound(&p.y);
            if s > slope {
                slope = s;
            }
        }
        Ok(PwPolyPath {
            pieces,
            slope_bound: slope,
        })
    }

    fn eval_exact(&self, t: &Rat) -> Pt2 {
        let piece = self
            .pieces
            .iter()
            .find(|p| t <= &p.t1)
            .unwrap_or(&self.pieces[self.pieces.len() - 1]);
        Pt2::new(horner(&piece.x, t), horner(&piece.y, t))
    }
}

impl PathOracle for PwPolyPath {
    fn eval(&self, t: &Rat, _n: u32) -> Result<PtEnc, PathError> {
        check_domain(t)?;
        Ok(PtEnc::exact(self.eval_exact(t)))
    }

    fn modulus(&self, gamma: &Rat) -> Rat {
        assert!(gamma.is_positive());
        if self.slope_bound.is_zero() {
            return Rat::one();
        }
        gamma / &self.slope_bound
    }
}

/// Certified cover of a compact image `f[a;b]` by open balls.
#[derive(Clone, Debug)]
pub struct RangeCover {
    pub interval: (Rat, Rat),
    pub balls: Vec<CenteredBall>,
    /// Nominal radius of every cover ball (`2^-k`).
    pub mesh: Rat,
    /// Per-ball certified radius actually needed to cover the cell
    /// (`2^(-k-1) + eval error`); strictly below `mesh`.
    pub cell_radius: Vec<Rat>,
}

/// Covers `f[a;b]` with balls of radius `2^-k` centered at samples on a grid
/// of step `modulus(2^(-k-1))`, sampled at precision `k+2`.
pub fn range_cover(
    path: &dyn PathOracle,
    a: &Rat,
    b: &Rat,
    k: u32,
) -> Result<RangeCover, PathError> {
    assert!(a <= b, "empty interval");
    let gamma = Rat::pow2(-(k as i32) - 1);
    let step = path.modulus(&gamma);
    let prec = k + 2;
    let mesh = Rat::pow2(-(k as i32));

    let mut balls = Vec::new();
    let mut cell_radius = Vec::new();
    let mut t = a.clone();
    loop {
        let e = path.eval(&t, prec)?;
        let cr = &gamma + &e.err;
        balls.push(
            CenteredBall::with_err(e.pt, mesh.clone(), e.err).at_time(t.clone()),
        );
        cell_radius.push(cr);
        if &t >= b {
            break;
        }
        let next = &t + &step;
        t = if &next > b { b.clone() } else { next };
    }
    Ok(RangeCover {
        interval: (a.clone(), b.clone()),
        balls,
        mesh,
        cell_radius,
    })
}

/// Certified lower bound on the distance from `x` (an enclosure) to the
/// covered image `f[a;b]`; 0 when no positive bound is provable at this mesh.
pub fn not_in_cover_distance(x: &PtEnc, cover: &RangeCover) -> Rat {
    let bits = 32;
    let mut best: Option<Rat> = None;
    for (ball, cell_r) in cover.balls.iter().zip(&cover.cell_radius) {
        // Points of the image in this cell lie within cell_r of the nominal
        // center; the query point is within x.err of its nominal position.
        let d = ball.center.dist2(&x.pt).sqrt_lower(bits) - cell_r - &x.err;
        best = Some(match best {
            None => d,
            Some(m) => m.min(d),
        });
    }
    best.unwrap_or_else(Rat::zero).max(Rat::zero())
}

/// Semi-decides `x` (with enclosure error `err`) off the range of `path` by
/// adaptive subdivision: prunes time intervals whose coarse image enclosure
/// is already far, refines the rest.
///
/// Accepts only with a certified margin `m > 2*err` on the nominal point, so
/// every true point within `err` keeps a net distance above `err` to the
/// range; never accepts a point on the path.
pub fn not_in_range_semitest(
    x: &PtEnc,
    path: &dyn PathOracle,
    fuel: &mut FuelMeter,
) -> Semi<Rat> {
    let need = Rat::from_int(2) * &x.err;
    not_in_range_above(x, path, &need, fuel)
}

/// Like [`not_in_range_semitest`] but accepts only when the certified margin
/// strictly exceeds the caller's `need` (which must be at least `2*err` for
/// the standard soundness guarantee; larger values buy stronger separation).
pub fn not_in_range_above(
    x: &PtEnc,
    path: &dyn PathOracle,
    need: &Rat,
    fuel: &mut FuelMeter,
) -> Semi<Rat> {
    let bits = 32;
    let need = need.clone().max(Rat::from_int(2) * &x.err);
    // Round r examines enclosures at scale 2^-r and accepts as soon as the
    // certified distance clears the requirement.
    for round in 1u32..64 {
        let target = Rat::pow2(-(round as i32));
        match certified_far(x, path, &target, &need, bits, fuel) {
            FarOutcome::Far(lb) => {
                if lb > need {
                    return Semi::Accepted(lb);
                }
            }
            FarOutcome::Close => {} // refine further
            FarOutcome::Hopeless => {
                // A sampled path point sits closer than the requirement:
                // no refinement can certify the margin at this enclosure
                // error.
                return Semi::Unknown(Starved::at("not_in_range:too-close", fuel));
            }
            FarOutcome::Starved => {
                return Semi::Unknown(Starved::at("not_in_range_semitest", fuel));
            }
        }
    }
    Semi::Unknown(Starved::at("not_in_range_semitest:depth", fuel))
}

enum FarOutcome {
    Far(Rat),
    Close,
    /// A witness point of the range lies provably below the requirement.
    Hopeless,
    Starved,
}

/// Tries to certify `d(x_nominal, range(path)) >= target + need`; returns
/// the best certified lower bound on success.
fn certified_far(
    x: &PtEnc,
    path: &dyn PathOracle,
    target: &Rat,
    need: &Rat,
    bits: u32,
    fuel: &mut FuelMeter,
) -> FarOutcome {
    let goal = target + need;
    let mut stack = vec![(Rat::zero(), Rat::one())];
    let mut best: Option<Rat> = None;
    while let Some((u, v)) = stack.pop() {
        if !fuel.try_spend(1) {
            return FarOutcome::Starved;
        }
        let mid = Rat::mid(&u, &v);
        let half = (&v - &u).halve();
        // Image of [u;v] lies within gamma-of-half-length + eval error of f(mid).
        let e = match path.eval(&mid, bits) {
            Ok(e) => e,
            Err(_) => return FarOutcome::Close,
        };
        let d2 = e.pt.dist2(&x.pt);
        if d2.sqrt_upper(bits) + &e.err < *need {
            return FarOutcome::Hopeless;
        }
        let spread = image_spread(path, &half) + &e.err;
        let d_lb = d2.sqrt_lower(bits) - &spread;
        if d_lb >= goal {
            best = Some(match best {
                None => d_lb,
                Some(m) => m.min(d_lb),
            });
            continue;
        }
        if &spread * Rat::from_int(4) <= *target {
            // Cell already well below the working scale and still too
            // close: this scale cannot certify the distance.
            return FarOutcome::Close;
        }
        stack.push((u, mid.clone()));
        stack.push((mid, v));
    }
    match best {
        Some(lb) => FarOutcome::Far(lb),
        None => FarOutcome::Close,
    }
}

/// Small dyadic `gamma` whose modulus covers the given half-length; a
/// certified bound on how far the image can drift from the midpoint sample.
/// The search starts from a linearity-based estimate and adjusts by
/// doubling/halving, so it costs a handful of modulus calls at any depth.
pub(crate) fn image_spread(path: &dyn PathOracle, half_len: &Rat) -> Rat {
    if !half_len.is_positive() {
        // Point interval: only the evaluation error remains.
        return Rat::zero();
    }
    let m1 = path.modulus(&Rat::one());
    let mut gamma = if m1.is_positive() {
        (half_len / &m1).ceil_dyadic(96).max(Rat::pow2(-900)) * Rat::from_int(2)
    } else {
        Rat::from_int(4)
    };
    // Soundness direction first: grow until the modulus strictly covers.
    let mut grow = 0u32;
    while path.modulus(&gamma) <= *half_len {
        gamma = &gamma * Rat::from_int(2);
        grow += 1;
        if grow > 4096 {
            break;
        }
    }
    // Tighten while the covering survives.
    for _ in 0..4096 {
        let next = gamma.halve();
        if &path.modulus(&next) > half_len {
            gamma = next;
        } else {
            break;
        }
    }
    gamma
}

/// Endpoint-normalized form of a corner-to-corner path: extends the path
/// along the square diagonals and maps the tripled square back onto the unit
/// square. The middle third carries the original path scaled into
/// [1/3;2/3]^2; intersection points map back through `3x - (1,1)`.
#[derive(Clone)]
pub struct NormalizedPath {
    inner: Arc<dyn PathOracle>,
    /// Descending diagonal (g-like, corners (0,1) -> (1,0)) or ascending
    /// (f-like, corners (0,0) -> (1,1)).
    descending: bool,
}

impl NormalizedPath {
    fn ray(&self, u: &Rat) -> Pt2 {
        if self.descending {
            Pt2::new(u.clone(), Rat::one() - u)
        } else {
            Pt2::new(u.clone(), u.clone())
        }
    }
}

impl PathOracle for NormalizedPath {
    fn eval(&self, t: &Rat, n: u32) -> Result<PtEnc, PathError> {
        check_domain(t)?;
        let u = Rat::from_int(3) * t - Rat::one();
        let third = Rat::new(1, 3);
        if u.is_negative() || u > Rat::one() {
            // Diagonal ray extension, mapped: ((u,u) + (1,1))/3 = ((u+1)/3, ...).
            let p = self.ray(&u);
            let one = Rat::one();
            return Ok(PtEnc::exact(Pt2::new(
                (&p.x + &one) * &third,
                (&p.y + &one) * &third,
            )));
        }
        let e = self.inner.eval(&u, n + 2)?;
        let one = Rat::one();
        Ok(PtEnc::new(
            Pt2::new((&e.pt.x + &one) * &third, (&e.pt.y + &one) * &third),
            e.err * &third,
        ))
    }

    fn modulus(&self, gamma: &Rat) -> Rat {
        // Composite of the ray pieces (Lipschitz <= 2) and the inner path,
        // with a factor 3 time compression and 1/3 value scaling.
        let g3 = Rat::from_int(3) * gamma;
        let inner = self.inner.modulus(&g3.halve());
        let ray = g3.halve().halve().halve(); // 3*gamma/8 < (3*gamma/2)/2 (slope sqrt2)
        let delta_outer = inner.min(ray);
        delta_outer * Rat::new(1, 3)
    }
}

/// Checks the corner conditions of the raw pair (f from (0,0) to (1,1), g
/// from (0,1) to (1,0)) at precision 10 and wraps both paths in the
/// normalizing transform, after which both are interior except at corners.
pub fn normalize_endpoints(
    f: Arc<dyn PathOracle>,
    g: Arc<dyn PathOracle>,
) -> Result<(NormalizedPath, NormalizedPath), PathError> {
    let corners = [
        (&f, Rat::zero(), Pt2::from_ints(0, 0), "f(0)"),
        (&f, Rat::one(), Pt2::from_ints(1, 1), "f(1)"),
        (&g, Rat::zero(), Pt2::from_ints(0, 1), "g(0)"),
        (&g, Rat::one(), Pt2::from_ints(1, 0), "g(1)"),
    ];
    for (path, t, want, name) in corners {
        let e = path.eval(&t, 10)?;
        let tol = Rat::pow2(-10) + &e.err;
        if e.pt.dist2(&want) > tol.square() {
            return Err(PathError::CornerMismatch {
                which: name,
                expected: format!("({}, {})", want.x, want.y),
                got: format!("({}, {})", e.pt.x, e.pt.y),
            });
        }
    }
    Ok((
        NormalizedPath {
            inner: f,
            descending: false,
        },
        NormalizedPath {
            inner: g,
            descending: true,
        },
    ))
}

/// Maps a point of the normalized configuration back to the original square.
pub fn denormalize_point(p: &Pt2) -> Pt2 {
    let three = Rat::from_int(3);
    Pt2::new(&p.x * &three - Rat::one(), &p.y * &three - Rat::one())
}

/// The ascending unit diagonal (t, t).
pub fn diagonal_path() -> PolylinePath {
    PolylinePath::new(vec![
        (Rat::zero(), Pt2::from_ints(0, 0)),
        (Rat::one(), Pt2::from_ints(1, 1)),
    ])
    .expect("static polyline")
}

/// The descending unit anti-diagonal (t, 1-t).
pub fn anti_diagonal_path() -> PolylinePath {
    PolylinePath::new(vec![
        (Rat::zero(), Pt2::from_ints(0, 1)),
        (Rat::one(), Pt2::from_ints(1, 0)),
    ])
    .expect("static polyline")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn polyline_eval_examples() {
        let f = diagonal_path();
        let e = f.eval(&r(1, 3), 20).unwrap();
        assert!(e.is_exact());
        assert_eq!(e.pt, Pt2::new(r(1, 3), r(1, 3)));

        let g = anti_diagonal_path();
        let e = g.eval(&r(1, 4), 20).unwrap();
        assert_eq!(e.pt, Pt2::new(r(1, 4), r(3, 4)));

        let p = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (r(1, 2), Pt2::from_ints(1, 0)),
            (Rat::one(), Pt2::from_ints(1, 1)),
        ])
        .unwrap();
        let e = p.eval(&r(3, 4), 20).unwrap();
        assert_eq!(e.pt, Pt2::new(Rat::one(), r(1, 2)));

        assert!(p.eval(&r(3, 2), 20).is_err());
    }

    #[test]
    fn modulus_contract_on_polyline() {
        let p = PolylinePath::new(vec![
            (Rat::zero(), Pt2::from_ints(0, 0)),
            (r(1, 2), Pt2::from_ints(1, 0)),
            (Rat::one(), Pt2::from_ints(1, 1)),
        ])
        .unwrap();
        let gamma = r(1, 10);
        let delta = p.modulus(&gamma);
        assert!(delta.is_positive());
        // Sample pairs |a-b| < delta and check |f(a)-f(b)| < gamma exactly.
        let mut a = Rat::zero();
        let step = (&delta * &r(9, 10)).min(r(1, 50));
        while &a + &step <= Rat::one() {
            let b = &a + &step;
            let fa = p.eval_exact(&a);
            let fb = p.eval_exact(&b);
            assert!(fa.dist2(&fb) < gamma.square());
            a = b;
        }
        // Non-decreasing in gamma.
        assert!(p.modulus(&r(2, 10)) >= delta);
    }

    #[test]
    fn pwpoly_eval() {
        // x(t) = t, y(t) = t^2 on [0;1].
        let p = PwPolyPath::new(vec![PolyPiece {
            t0: Rat::zero(),
            t1: Rat::one(),
            x: vec![Rat::zero(), Rat::one()],
            y: vec![Rat::zero(), Rat::zero(), Rat::one()],
        }])
        .unwrap();
        let e = p.eval(&r(1, 3), 10).unwrap();
        assert_eq!(e.pt, Pt2::new(r(1, 3), r(1, 9)));
    }

    #[test]
    fn cover_contains_samples() {
        let p = diagonal_path();
        let cover = range_cover(&p, &Rat::zero(), &Rat::one(), 3).unwrap();
        assert!(!cover.balls.is_empty());
        // Random-ish samples: f(t) must lie strictly inside some ball.
        for i in 0..40 {
            let t = r(i, 40);
            let pt = p.eval_exact(&t);
            let inside = cover
                .balls
                .iter()
                .any(|b| b.center.dist2(&pt) < b.radius.square());
            assert!(inside, "sample at {} escapes the cover", t);
        }
        // Point image.
        let single = range_cover(&p, &r(1, 2), &r(1, 2), 4).unwrap();
        assert_eq!(single.balls.len(), 1);
        let c = &single.balls[0];
        assert!(c.center.dist2(&Pt2::new(r(1, 2), r(1, 2))) < c.radius.square());
    }

    #[test]
    fn cover_distance_bounds() {
        let g = anti_diagonal_path();
        let cover = range_cover(&g, &Rat::zero(), &Rat::one(), 5).unwrap();
        let lb = not_in_cover_distance(&PtEnc::exact(Pt2::from_ints(0, 0)), &cover);
        // True distance is sqrt(2)/2 ~ 0.707; the bound must reach 1/2 at
        // this mesh and stay below the true value.
        assert!(lb >= r(1, 2), "lb = {}", lb);
        assert!(lb.square() <= r(1, 2));

        let on_path = not_in_cover_distance(
            &PtEnc::exact(Pt2::new(r(1, 2), r(1, 2))),
            &cover,
        );
        assert!(on_path.is_zero());

        let far = not_in_cover_distance(&PtEnc::exact(Pt2::from_ints(2, 2)), &cover);
        assert!(far >= Rat::one());
    }

    #[test]
    fn semitest_accepts_far_rejects_near() {
        let g = anti_diagonal_path();
        let mut fuel = FuelMeter::new(10_000);
        match not_in_range_semitest(&PtEnc::exact(Pt2::from_ints(0, 0)), &g, &mut fuel) {
            Semi::Accepted(m) => assert!(m >= r(1, 2), "margin {}", m),
            Semi::Unknown(s) => panic!("unexpected starvation: {}", s),
        }

        let mut fuel = FuelMeter::new(2_000);
        let on_path = not_in_range_semitest(
            &PtEnc::exact(Pt2::new(r(1, 2), r(1, 2))),
            &g,
            &mut fuel,
        );
        assert!(!on_path.is_accepted());

        // Enclosure error exceeding any provable margin: never accepted.
        let mut fuel = FuelMeter::new(2_000);
        let fuzzy = not_in_range_semitest(
            &PtEnc::new(Pt2::from_ints(0, 0), r(3, 5)),
            &g,
            &mut fuel,
        );
        assert!(!fuzzy.is_accepted());
    }

    #[test]
    fn normalization_examples() {
        let f = Arc::new(diagonal_path());
        let g = Arc::new(anti_diagonal_path());
        let (f2, g2) = normalize_endpoints(f, g).unwrap();
        let e = f2.eval(&Rat::zero(), 10).unwrap();
        assert_eq!(e.pt, Pt2::from_ints(0, 0));
        let e = f2.eval(&Rat::one(), 10).unwrap();
        assert_eq!(e.pt, Pt2::from_ints(1, 1));
        let e = g2.eval(&Rat::zero(), 10).unwrap();
        assert_eq!(e.pt, Pt2::from_ints(0, 1));
        let e = g2.eval(&Rat::one(), 10).unwrap();
        assert_eq!(e.pt, Pt2::from_ints(1, 0));

        // The center is a fixed point of the denormalization map.
        let center = Pt2::new(r(1, 2), r(1, 2));
        assert_eq!(denormalize_point(&center), center);

        // Middle third is the original path scaled into [1/3;2/3]^2.
        let e = f2.eval(&r(1, 2), 10).unwrap();
        assert_eq!(e.pt, Pt2::new(r(1, 2), r(1, 2)));

        // Wrong corners are rejected, naming the corner.
        let bad = Arc::new(
            PolylinePath::new(vec![
                (Rat::zero(), Pt2::from_ints(0, 0)),
                (Rat::one(), Pt2::from_ints(1, 0)),
            ])
            .unwrap(),
        );
        let err = match normalize_endpoints(bad, Arc::new(anti_diagonal_path())) {
            Ok(_) => panic!("corner mismatch should be rejected"),
            Err(e) => e,
        };
        assert!(matches!(err, PathError::CornerMismatch { which: "f(1)", .. }));
    }

    #[test]
    fn normalized_modulus_contract() {
        let f = Arc::new(diagonal_path());
        let g = Arc::new(anti_diagonal_path());
        let (f2, _) = normalize_endpoints(f, g).unwrap();
        let gamma = r(1, 8);
        let delta = f2.modulus(&gamma);
        assert!(delta.is_positive());
        let mut a = Rat::zero();
        let step = (&delta * &r(9, 10)).min(r(1, 64));
        while &a + &step <= Rat::one() {
            let b = &a + &step;
            let fa = f2.eval(&a, 30).unwrap().pt;
            let fb = f2.eval(&b, 30).unwrap().pt;
            assert!(fa.dist2(&fb) < gamma.square());
            a = b;
        }
    }
}
