//! Exact planar geometry: points, balls with certified center error, lenses,
//! regions, and the decidable predicates the refinement machinery relies on.
//!
//! Every predicate here is three-valued where approximation is involved: a
//! `yes`/`no` answer is sound for *every* true center within `center_err` of
//! the nominal one; only `unknown` may be over-conservative. On exact inputs
//! (`center_err = 0`) the predicates are total decisions.

use crate::quad::{sign_with_sqrt, QuadVal};
use crate::rat::Rat;

/// Planar point with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pt2 {
    pub x: Rat,
    pub y: Rat,
}

impl Pt2 {
    pub fn new(x: Rat, y: Rat) -> Self {
        Pt2 { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Pt2::new(Rat::from_int(x), Rat::from_int(y))
    }

    pub fn origin() -> Self {
        Pt2::new(Rat::zero(), Rat::zero())
    }

    pub fn add(&self, o: &Pt2) -> Pt2 {
        Pt2::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &Pt2) -> Pt2 {
        Pt2::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn scale(&self, s: &Rat) -> Pt2 {
        Pt2::new(&self.x * s, &self.y * s)
    }

    pub fn dot(&self, o: &Pt2) -> Rat {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn cross(&self, o: &Pt2) -> Rat {
        &self.x * &o.y - &self.y * &o.x
    }

    /// CCW perpendicular (rotate by +90 degrees).
    pub fn perp(&self) -> Pt2 {
        Pt2::new(-&self.y, self.x.clone())
    }

    pub fn norm2(&self) -> Rat {
        self.dot(self)
    }

    pub fn dist2(&self, o: &Pt2) -> Rat {
        self.sub(o).norm2()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

impl std::fmt::Debug for Pt2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Point enclosure: the true point lies within `err` of `pt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtEnc {
    pub pt: Pt2,
    pub err: Rat,
}

impl PtEnc {
    pub fn exact(pt: Pt2) -> Self {
        PtEnc {
            pt,
            err: Rat::zero(),
        }
    }

    pub fn new(pt: Pt2, err: Rat) -> Self {
        assert!(!err.is_negative());
        PtEnc { pt, err }
    }

    pub fn is_exact(&self) -> bool {
        self.err.is_zero()
    }
}

/// Certified lower bound on the distance of the two true points.
pub fn dist_lb(a: &PtEnc, b: &PtEnc, bits: u32) -> Rat {
    let d = a.pt.dist2(&b.pt).sqrt_lower(bits) - &a.err - &b.err;
    d.max(Rat::zero())
}

/// Certified upper bound on the distance of the two true points.
pub fn dist_ub(a: &PtEnc, b: &PtEnc, bits: u32) -> Rat {
    a.pt.dist2(&b.pt).sqrt_upper(bits) + &a.err + &b.err
}

/// Three-valued answer of a margin-guarded predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trivalent {
    Yes,
    No,
    Unknown,
}

/// Open Euclidean ball with a nominal rational center and a certified bound
/// on how far the true center may be from it. Exact constructions have
/// `center_err = 0`. `time` optionally records the path parameter the center
/// was sampled at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenteredBall {
    pub center: Pt2,
    pub radius: Rat,
    pub center_err: Rat,
    pub time: Option<Rat>,
}

impl CenteredBall {
    pub fn exact(center: Pt2, radius: Rat) -> Self {
        Self::with_err(center, radius, Rat::zero())
    }

    pub fn with_err(center: Pt2, radius: Rat, center_err: Rat) -> Self {
        assert!(radius.is_positive(), "ball radius must be positive");
        assert!(!center_err.is_negative(), "center error must be >= 0");
        // A ball with center_err >= radius is uninformative but legal: every
        // predicate on it can only answer `unknown`.
        CenteredBall {
            center,
            radius,
            center_err,
            time: None,
        }
    }

    pub fn at_time(mut self, t: Rat) -> Self {
        self.time = Some(t);
        self
    }

    pub fn center_enc(&self) -> PtEnc {
        PtEnc::new(self.center.clone(), self.center_err.clone())
    }

    /// True point provably inside the true open ball.
    pub fn contains_enc(&self, p: &PtEnc, bits: u32) -> Trivalent {
        let bc = self.center_enc();
        if dist_ub(&bc, p, bits) < self.radius {
            Trivalent::Yes
        } else if dist_lb(&bc, p, bits) >= self.radius {
            Trivalent::No
        } else {
            Trivalent::Unknown
        }
    }

    /// True point provably outside the true closed ball.
    pub fn excludes_closure_enc(&self, p: &PtEnc, bits: u32) -> Trivalent {
        let bc = self.center_enc();
        if dist_lb(&bc, p, bits) > self.radius {
            Trivalent::Yes
        } else if dist_ub(&bc, p, bits) <= self.radius {
            Trivalent::No
        } else {
            Trivalent::Unknown
        }
    }
}

/// Closed-ball-inside-the-open-unit-square test.
///
/// `yes` only if the closure of the true ball is contained in (0;1)^2 with
/// margin exceeding the center error; `no` only if it provably is not.
pub fn ball_closure_in_unit_square(b: &CenteredBall) -> Trivalent {
    let one = Rat::one();
    let sides = [
        &b.center.x - &b.radius,
        &one - &b.center.x - &b.radius,
        &b.center.y - &b.radius,
        &one - &b.center.y - &b.radius,
    ];
    let mut margin = sides[0].clone();
    for s in &sides[1..] {
        if *s < margin {
            margin = s.clone();
        }
    }
    if margin > b.center_err {
        Trivalent::Yes
    } else if &margin + &b.center_err <= Rat::zero() {
        Trivalent::No
    } else {
        Trivalent::Unknown
    }
}

/// Strict intersection of two balls: neither contains the other and the open
/// intersection is nonempty, each certified with slack exceeding the summed
/// center errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lens {
    pub b1: CenteredBall,
    pub b2: CenteredBall,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MakeLens {
    Lens(Lens),
    NotStrict,
    Unknown,
}

pub fn make_lens(b1: &CenteredBall, b2: &CenteredBall) -> MakeLens {
    let err = &b1.center_err + &b2.center_err;
    let d2 = b1.center.dist2(&b2.center);
    let sum = &b1.radius + &b2.radius;
    let gap = (&b1.radius - &b2.radius).abs();

    // Strict with slack: |r1-r2| + err < d < r1+r2 - err.
    let hi = &sum - &err;
    let lo = &gap + &err;
    if hi.is_positive() && d2 < hi.square() && d2 > lo.square() {
        return MakeLens::Lens(Lens {
            b1: b1.clone(),
            b2: b2.clone(),
        });
    }
    // Provably violated for every admissible center pair.
    let far = &sum + &err;
    if d2 >= far.square() {
        return MakeLens::NotStrict; // open intersection empty (or touching point)
    }
    if &gap - &err >= Rat::zero() && d2 <= (&gap - &err).square() {
        return MakeLens::NotStrict; // one ball contained in the other
    }
    MakeLens::Unknown
}

impl Lens {
    pub fn total_center_err(&self) -> Rat {
        &self.b1.center_err + &self.b2.center_err
    }

    fn axis(&self) -> Pt2 {
        self.b2.center.sub(&self.b1.center)
    }

    fn axis_norm2(&self) -> Rat {
        self.axis().norm2()
    }

    /// Foot of the radical line on the center axis.
    fn foot(&self) -> Pt2 {
        let e = self.axis();
        let t = self.foot_param();
        self.b1.center.add(&e.scale(&t))
    }

    fn foot_param(&self) -> Rat {
        let d2 = self.axis_norm2();
        (&d2 + &self.b1.radius.square() - &self.b2.radius.square()) / (Rat::from_int(2) * &d2)
    }

    /// Radicand `k` such that the peaks are `foot +- sqrt(k) * perp(axis)`.
    fn peak_radicand(&self) -> Rat {
        let d2 = self.axis_norm2();
        let t = self.foot_param();
        let h2 = &self.b1.radius.square() - &t.square() * &d2;
        h2 / d2
    }

    /// Squared peak separation (a rational; the peaks live in Q(sqrt k)).
    pub fn peak_sep2(&self) -> Rat {
        let t = self.foot_param();
        let h2 = &self.b1.radius.square() - &t.square() * self.axis_norm2();
        Rat::from_int(4) * h2
    }

    /// x-coordinates of the requested peak as values in Q(sqrt k).
    fn peak_coords(&self, index: PeakIndex) -> (QuadVal, QuadVal) {
        let m = self.foot();
        let w = self.axis().perp();
        let k = self.peak_radicand();
        let (bx, by) = match index {
            PeakIndex::First => (w.x.clone(), w.y.clone()),
            PeakIndex::Second => (-&w.x, -&w.y),
        };
        (
            QuadVal::new(m.x, bx, k.clone()),
            QuadVal::new(m.y, by, k),
        )
    }

    /// Squared distance from a rational point to the requested peak, as a
    /// value `alpha + beta*sqrt(k)`.
    fn peak_dist2_to(&self, index: PeakIndex, p: &Pt2) -> QuadVal {
        let m = self.foot();
        let w = self.axis().perp();
        let k = self.peak_radicand();
        let mp = m.sub(p);
        let alpha = mp.norm2() + &k * w.norm2();
        let beta = match index {
            PeakIndex::First => Rat::from_int(2) * mp.dot(&w),
            PeakIndex::Second => Rat::from_int(-2) * mp.dot(&w),
        };
        QuadVal::new(alpha, beta, k)
    }
}

/// Which of the two boundary-circle intersection points is meant. The first
/// peak lies to the left of the directed segment from `b1`'s center to
/// `b2`'s center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeakIndex {
    First,
    Second,
}

/// Reference to a peak of a lens. Peaks are quadratic irrationals and are
/// never materialized as coordinates; predicates reduce to exact signs of
/// `alpha + beta*sqrt(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeakRef {
    pub lens: Lens,
    pub index: PeakIndex,
}

/// Is the peak inside the open ball `b`?
///
/// Exact when all center errors vanish; with nonzero errors the peak location
/// is not pinned down by the nominal data, so the answer is `unknown`.
pub fn peak_in_ball(p: &PeakRef, b: &CenteredBall) -> Trivalent {
    let total_err = p.lens.total_center_err() + &b.center_err;
    if total_err.is_positive() {
        return Trivalent::Unknown;
    }
    let d2 = p.lens.peak_dist2_to(p.index, &b.center);
    let r2 = b.radius.square();
    match d2.cmp_rat(&r2) {
        std::cmp::Ordering::Less => Trivalent::Yes,
        _ => Trivalent::No,
    }
}

fn orient(a: &Pt2, b: &Pt2, c: &Pt2) -> i32 {
    b.sub(a).cross(&c.sub(a)).signum()
}

fn on_segment(a: &Pt2, b: &Pt2, c: &Pt2) -> bool {
    // Assumes a, b, c collinear: is c within the closed box of [a, b]?
    let (xlo, xhi) = if a.x <= b.x {
        (&a.x, &b.x)
    } else {
        (&b.x, &a.x)
    };
    let (ylo, yhi) = if a.y <= b.y {
        (&a.y, &b.y)
    } else {
        (&b.y, &a.y)
    };
    xlo <= &c.x && &c.x <= xhi && ylo <= &c.y && &c.y <= yhi
}

/// Exact closed-segment intersection test. Endpoint touching and collinear
/// overlap count as intersection.
pub fn segments_intersect(p1: &Pt2, q1: &Pt2, p2: &Pt2, q2: &Pt2) -> bool {
    let d1 = orient(p2, q2, p1);
    let d2 = orient(p2, q2, q1);
    let d3 = orient(p1, q1, p2);
    let d4 = orient(p1, q1, q2);

    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(p2, q2, p1))
        || (d2 == 0 && on_segment(p2, q2, q1))
        || (d3 == 0 && on_segment(p1, q1, p2))
        || (d4 == 0 && on_segment(p1, q1, q2))
}

/// Region alternatives for passages, gates and meetings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    UnitSquareInterior,
    Ball(CenteredBall),
    Lens(Lens),
}

impl Region {
    pub fn total_center_err(&self) -> Rat {
        match self {
            Region::UnitSquareInterior => Rat::zero(),
            Region::Ball(b) => b.center_err.clone(),
            Region::Lens(l) => l.total_center_err(),
        }
    }

    /// Certified lower bound on the distance from the true point to the
    /// complement of the true region (how deep inside it provably is;
    /// 0 when nothing positive can be certified).
    pub fn clearance_lb(&self, p: &PtEnc, bits: u32) -> Rat {
        let zero = Rat::zero();
        match self {
            Region::UnitSquareInterior => {
                let one = Rat::one();
                let m = p
                    .pt
                    .x
                    .clone()
                    .min(&one - &p.pt.x)
                    .min(p.pt.y.clone())
                    .min(&one - &p.pt.y);
                (m - &p.err).max(zero)
            }
            Region::Ball(b) => {
                let d = dist_ub(&b.center_enc(), p, bits);
                (&b.radius - &d).max(zero)
            }
            Region::Lens(l) => {
                let c1 = Region::Ball(l.b1.clone()).clearance_lb(p, bits);
                let c2 = Region::Ball(l.b2.clone()).clearance_lb(p, bits);
                c1.min(c2)
            }
        }
    }

    /// Certified lower bound on the distance from the true point to the
    /// closure of the true region (0 when nothing positive can be certified).
    pub fn outside_margin_lb(&self, p: &PtEnc, bits: u32) -> Rat {
        let zero = Rat::zero();
        match self {
            Region::UnitSquareInterior => {
                let one = Rat::one();
                let m = (-&p.pt.x)
                    .max(&p.pt.x - &one)
                    .max(-&p.pt.y)
                    .max(&p.pt.y - &one);
                (m - &p.err).max(zero)
            }
            Region::Ball(b) => {
                let d = dist_lb(&b.center_enc(), p, bits);
                (&d - &b.radius).max(zero)
            }
            Region::Lens(l) => {
                let m1 = Region::Ball(l.b1.clone()).outside_margin_lb(p, bits);
                let m2 = Region::Ball(l.b2.clone()).outside_margin_lb(p, bits);
                m1.max(m2)
            }
        }
    }

    /// Sound upper bound on the diameter of the true region.
    pub fn diameter_ub(&self, bits: u32) -> Rat {
        match self {
            Region::UnitSquareInterior => Rat::from_int(2).sqrt_upper(bits),
            Region::Ball(b) => Rat::from_int(2) * &b.radius,
            Region::Lens(l) => {
                let two = Rat::from_int(2);
                (&two * &l.b1.radius).min(&two * &l.b2.radius)
            }
        }
    }

    /// Sound lower bound on the diameter of the true region.
    pub fn diameter_lb(&self, bits: u32) -> Rat {
        match self {
            Region::UnitSquareInterior => Rat::one(),
            Region::Ball(b) => Rat::from_int(2) * &b.radius - Rat::from_int(2) * &b.center_err,
            Region::Lens(l) => l.peak_sep2().sqrt_lower(bits) - Rat::from_int(2) * l.total_center_err(),
        }
        .max(Rat::zero())
    }

    /// Shrinks a ball or lens region by `gamma` (radii decrease); `None` when
    /// the result would be invalid or the region is the unit square.
    pub fn shrink(&self, gamma: &Rat) -> Option<Region> {
        if !gamma.is_positive() {
            return None;
        }
        match self {
            Region::UnitSquareInterior => None,
            Region::Ball(b) => {
                let r = &b.radius - gamma;
                if r > b.center_err && r.is_positive() {
                    let mut nb =
                        CenteredBall::with_err(b.center.clone(), r, b.center_err.clone());
                    nb.time = b.time.clone();
                    Some(Region::Ball(nb))
                } else {
                    None
                }
            }
            Region::Lens(l) => {
                let r1 = &l.b1.radius - gamma;
                let r2 = &l.b2.radius - gamma;
                if r1 <= l.b1.center_err || r2 <= l.b2.center_err {
                    return None;
                }
                let nb1 = CenteredBall::with_err(
                    l.b1.center.clone(),
                    r1,
                    l.b1.center_err.clone(),
                );
                let nb2 = CenteredBall::with_err(
                    l.b2.center.clone(),
                    r2,
                    l.b2.center_err.clone(),
                );
                match make_lens(&nb1, &nb2) {
                    MakeLens::Lens(nl) => Some(Region::Lens(nl)),
                    _ => None,
                }
            }
        }
    }

    /// Axis-aligned rational box certainly containing the true region.
    pub fn bounding_box(&self) -> (Rat, Rat, Rat, Rat) {
        match self {
            Region::UnitSquareInterior => (Rat::zero(), Rat::one(), Rat::zero(), Rat::one()),
            Region::Ball(b) => {
                let pad = &b.radius + &b.center_err;
                (
                    &b.center.x - &pad,
                    &b.center.x + &pad,
                    &b.center.y - &pad,
                    &b.center.y + &pad,
                )
            }
            Region::Lens(l) => {
                let (a1, b1, c1, d1) = Region::Ball(l.b1.clone()).bounding_box();
                let (a2, b2, c2, d2) = Region::Ball(l.b2.clone()).bounding_box();
                (a1.max(a2), b1.min(b2), c1.max(c2), d1.min(d2))
            }
        }
    }

    /// Certifies that the closure of the true ball `B(center, rho)` (center
    /// known within `center.err`) is contained in the true region.
    pub fn contains_closed_ball(&self, center: &PtEnc, rho: &Rat, bits: u32) -> Trivalent {
        if self.clearance_lb(center, bits) > *rho {
            Trivalent::Yes
        } else {
            Trivalent::Unknown
        }
    }
}

/// Certified containment of closures: `yes` only when the closure of the
/// true inner region is provably contained in the true outer region.
pub fn region_closure_inside(inner: &Region, outer: &Region, bits: u32) -> Trivalent {
    match (inner, outer) {
        (Region::UnitSquareInterior, Region::UnitSquareInterior) => Trivalent::Unknown,
        (Region::Ball(b), Region::UnitSquareInterior) => ball_closure_in_unit_square(b),
        (Region::Ball(b), _) => outer.contains_closed_ball(&b.center_enc(), &b.radius, bits),
        (Region::Lens(l), _) => {
            // The lens closure sits inside each constituent closed ball.
            let via1 =
                region_closure_inside(&Region::Ball(l.b1.clone()), outer, bits);
            if via1 == Trivalent::Yes {
                return Trivalent::Yes;
            }
            region_closure_inside(&Region::Ball(l.b2.clone()), outer, bits)
        }
        (Region::UnitSquareInterior, _) => Trivalent::Unknown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    F,
    G,
}

/// Half-plane index of `x` when sweeping counterclockwise starting at `s`:
/// 0 for angles in [0, pi), 1 for [pi, 2pi). `None` on a zero vector.
fn half_from(s: &Pt2, x: &Pt2) -> Option<u8> {
    if x.is_zero() {
        return None;
    }
    let cr = s.cross(x).signum();
    if cr > 0 {
        Some(0)
    } else if cr < 0 {
        Some(1)
    } else if s.dot(x).is_positive() {
        Some(0)
    } else {
        Some(1)
    }
}

fn angular_cmp(s: &Pt2, u: &Pt2, v: &Pt2) -> std::cmp::Ordering {
    let hu = half_from(s, u).expect("nonzero direction");
    let hv = half_from(s, v).expect("nonzero direction");
    if hu != hv {
        return hu.cmp(&hv);
    }
    match u.cross(v).signum() {
        1 => std::cmp::Ordering::Less,
        -1 => std::cmp::Ordering::Greater,
        _ => std::cmp::Ordering::Equal,
    }
}

fn tags_alternate(tags: &[Tag]) -> bool {
    let n = tags.len();
    (0..n).all(|i| tags[i] != tags[(i + 1) % n])
}

/// Do the four balls (first two carrying the `f` tag, last two the `g` tag)
/// alternate f,g,f,g along the boundary of `v`?
///
/// For a ball-shaped `v` the cyclic order of the direction vectors from the
/// region center decides; for a lens each ball is classified onto one of the
/// two boundary arcs or a peak neighborhood and the two arc orders are
/// concatenated along the boundary orientation. Ties and unclassifiable
/// balls yield `unknown`.
pub fn balls_alternate_on_boundary(
    v: &Region,
    bf1: &CenteredBall,
    bf2: &CenteredBall,
    bg1: &CenteredBall,
    bg2: &CenteredBall,
) -> Trivalent {
    let balls = [(bf1, Tag::F), (bf2, Tag::F), (bg1, Tag::G), (bg2, Tag::G)];
    let mut total_err = v.total_center_err();
    for (b, _) in &balls {
        total_err = total_err + &b.center_err;
    }
    if total_err.is_positive() {
        return Trivalent::Unknown;
    }
    match v {
        Region::UnitSquareInterior => Trivalent::Unknown,
        Region::Ball(vb) => alternate_on_circle(vb, &balls),
        Region::Lens(l) => alternate_on_lens(l, &balls),
    }
}

fn ball_meets_circle(b: &CenteredBall, circle_center: &Pt2, circle_r: &Rat) -> bool {
    // | |c - center| - R | < rad, decided on squares.
    let n2 = b.center.dist2(circle_center);
    let hi = (circle_r + &b.radius).square();
    if n2 >= hi {
        return false;
    }
    if circle_r > &b.radius {
        let lo = (circle_r - &b.radius).square();
        if n2 <= lo {
            return false;
        }
    }
    true
}

fn alternate_on_circle(vb: &CenteredBall, balls: &[(&CenteredBall, Tag); 4]) -> Trivalent {
    let mut dirs: Vec<(Pt2, Tag)> = Vec::with_capacity(4);
    for (b, tag) in balls {
        if !ball_meets_circle(b, &vb.center, &vb.radius) {
            return Trivalent::Unknown;
        }
        let u = b.center.sub(&vb.center);
        if u.is_zero() {
            return Trivalent::Unknown;
        }
        dirs.push((u, *tag));
    }
    // Collinear same-direction pairs are ties.
    for i in 0..4 {
        for j in (i + 1)..4 {
            if dirs[i].0.cross(&dirs[j].0).is_zero() && dirs[i].0.dot(&dirs[j].0).is_positive() {
                return Trivalent::Unknown;
            }
        }
    }
    let s = dirs[0].0.clone();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| angular_cmp(&s, &dirs[i].0, &dirs[j].0));
    let tags: Vec<Tag> = order.iter().map(|&i| dirs[i].1).collect();
    if tags_alternate(&tags) {
        Trivalent::Yes
    } else {
        Trivalent::No
    }
}

#[derive(Clone, Debug)]
enum LensPos {
    Peak1,
    Peak2,
    Arc1(Pt2),
    Arc2(Pt2),
}

fn closure_in_open_ball(inner: &CenteredBall, outer: &CenteredBall) -> bool {
    // Exact inputs only (errors checked by the caller).
    if inner.radius >= outer.radius {
        return false;
    }
    let d2 = inner.center.dist2(&outer.center);
    d2 < (&outer.radius - &inner.radius).square()
}

/// Angular comparison around a circle center where the sweep starts at a peak
/// direction (quadratic coordinates). `None` signals a tie with the start.
fn cmp_from_peak(
    sx: &QuadVal,
    sy: &QuadVal,
    u: &Pt2,
    v: &Pt2,
) -> Option<std::cmp::Ordering> {
    let half = |x: &Pt2| -> Option<u8> {
        // cross(s, x) = sx*x.y - sy*x.x, a value in Q(sqrt k).
        let cr = sign_with_sqrt(
            &(&sx.a * &x.y - &sy.a * &x.x),
            &(&sx.b * &x.y - &sy.b * &x.x),
            &sx.k,
        );
        if cr > 0 {
            Some(0)
        } else if cr < 0 {
            Some(1)
        } else {
            None // aligned with the peak direction: tie
        }
    };
    let hu = half(u)?;
    let hv = half(v)?;
    if hu != hv {
        return Some(hu.cmp(&hv));
    }
    match u.cross(v).signum() {
        1 => Some(std::cmp::Ordering::Less),
        -1 => Some(std::cmp::Ordering::Greater),
        _ => Some(std::cmp::Ordering::Equal),
    }
}

fn alternate_on_lens(l: &Lens, balls: &[(&CenteredBall, Tag); 4]) -> Trivalent {
    let peak1 = PeakRef {
        lens: l.clone(),
        index: PeakIndex::First,
    };
    let peak2 = PeakRef {
        lens: l.clone(),
        index: PeakIndex::Second,
    };

    let mut pos: Vec<(LensPos, Tag)> = Vec::with_capacity(4);
    for (b, tag) in balls {
        let in1 = peak_in_ball(&peak1, b);
        let in2 = peak_in_ball(&peak2, b);
        let p = match (in1, in2) {
            (Trivalent::Unknown, _) | (_, Trivalent::Unknown) => return Trivalent::Unknown,
            (Trivalent::Yes, Trivalent::Yes) => return Trivalent::Unknown,
            (Trivalent::Yes, _) => LensPos::Peak1,
            (_, Trivalent::Yes) => LensPos::Peak2,
            _ => {
                if closure_in_open_ball(b, &l.b2) {
                    if !ball_meets_circle(b, &l.b1.center, &l.b1.radius) {
                        return Trivalent::Unknown;
                    }
                    LensPos::Arc1(b.center.sub(&l.b1.center))
                } else if closure_in_open_ball(b, &l.b1) {
                    if !ball_meets_circle(b, &l.b2.center, &l.b2.radius) {
                        return Trivalent::Unknown;
                    }
                    LensPos::Arc2(b.center.sub(&l.b2.center))
                } else {
                    return Trivalent::Unknown;
                }
            }
        };
        pos.push((p, *tag));
    }

    // At most one ball per peak (they are pairwise disjoint if valid input).
    for peak in [0usize, 1] {
        let count = pos
            .iter()
            .filter(|(p, _)| matches!((peak, p), (0, LensPos::Peak1) | (1, LensPos::Peak2)))
            .count();
        if count > 1 {
            return Trivalent::Unknown;
        }
    }

    // Boundary traversal: peak2, then the arc on circle 1 swept CCW from the
    // peak-2 direction, then peak1, then the arc on circle 2 swept CCW from
    // the peak-1 direction.
    let (z2x, z2y) = l.peak_coords(PeakIndex::Second);
    let s1 = (
        QuadVal::new(&z2x.a - &l.b1.center.x, z2x.b.clone(), z2x.k.clone()),
        QuadVal::new(&z2y.a - &l.b1.center.y, z2y.b.clone(), z2y.k.clone()),
    );
    let (z1x, z1y) = l.peak_coords(PeakIndex::First);
    let s2 = (
        QuadVal::new(&z1x.a - &l.b2.center.x, z1x.b.clone(), z1x.k.clone()),
        QuadVal::new(&z1y.a - &l.b2.center.y, z1y.b.clone(), z1y.k.clone()),
    );

    let mut arc1: Vec<(Pt2, Tag)> = Vec::new();
    let mut arc2: Vec<(Pt2, Tag)> = Vec::new();
    let mut at_peak1: Vec<Tag> = Vec::new();
    let mut at_peak2: Vec<Tag> = Vec::new();
    for (p, tag) in &pos {
        match p {
            LensPos::Peak1 => at_peak1.push(*tag),
            LensPos::Peak2 => at_peak2.push(*tag),
            LensPos::Arc1(d) => arc1.push((d.clone(), *tag)),
            LensPos::Arc2(d) => arc2.push((d.clone(), *tag)),
        }
    }

    let sort_arc = |arc: &mut Vec<(Pt2, Tag)>, sx: &QuadVal, sy: &QuadVal| -> bool {
        //

        for i in 0..arc.len() {
            for j in (i + 1)..arc.len() {
                if arc[i].0.cross(&arc[j].0).is_zero() && arc[i].0.dot(&arc[j].0).is_positive() {
                    return false;
                }
            }
        }
        let mut tied = false;
        arc.sort_by(|a, b| match cmp_from_peak(sx, sy, &a.0, &b.0) {
            Some(o) => o,
            None => {
                tied = true;
                std::cmp::Ordering::Equal
            }
        });
        !tied
    };

    let mut arc1s = arc1;
    let mut arc2s = arc2;
    if !sort_arc(&mut arc1s, &s1.0, &s1.1) || !sort_arc(&mut arc2s, &s2.0, &s2.1) {
        return Trivalent::Unknown;
    }

    let mut tags: Vec<Tag> = Vec::with_capacity(4);
    tags.extend(at_peak2);
    tags.extend(arc1s.iter().map(|(_, t)| *t));
    tags.extend(at_peak1);
    tags.extend(arc2s.iter().map(|(_, t)| *t));
    debug_assert_eq!(tags.len(), 4);
    if tags_alternate(&tags) {
        Trivalent::Yes
    } else {
        Trivalent::No
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn pt(x: (i64, i64), y: (i64, i64)) -> Pt2 {
        Pt2::new(Rat::new(x.0, x.1), Rat::new(y.0, y.1))
    }

    #[test]
    fn ball_in_square_cases() {
        let b = CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 4));
        assert_eq!(ball_closure_in_unit_square(&b), Trivalent::Yes);

        let b = CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 2));
        assert_eq!(ball_closure_in_unit_square(&b), Trivalent::No);

        let b = CenteredBall::with_err(pt((1, 2), (1, 2)), r(1, 4), r(1, 3));
        assert_eq!(ball_closure_in_unit_square(&b), Trivalent::Unknown);
    }

    #[test]
    fn make_lens_cases() {
        let b1 = CenteredBall::exact(pt((0, 1), (0, 1)), r(1, 1));
        let b2 = CenteredBall::exact(pt((1, 1), (0, 1)), r(1, 1));
        assert!(matches!(make_lens(&b1, &b2), MakeLens::Lens(_)));

        let big = CenteredBall::exact(pt((0, 1), (0, 1)), r(2, 1));
        let small = CenteredBall::exact(pt((1, 4), (0, 1)), r(1, 2));
        assert_eq!(make_lens(&big, &small), MakeLens::NotStrict);

        let far = CenteredBall::exact(pt((2, 1), (0, 1)), r(1, 1));
        assert_eq!(make_lens(&b1, &far), MakeLens::NotStrict);
    }

    fn unit_lens() -> Lens {
        let b1 = CenteredBall::exact(pt((0, 1), (0, 1)), r(1, 1));
        let b2 = CenteredBall::exact(pt((1, 1), (0, 1)), r(1, 1));
        match make_lens(&b1, &b2) {
            MakeLens::Lens(l) => l,
            other => panic!("expected lens, got {:?}", other),
        }
    }

    #[test]
    fn peak_predicates() {
        let l = unit_lens();
        // First peak of the unit lens is (1/2, sqrt(3)/2).
        let peak = PeakRef {
            lens: l.clone(),
            index: PeakIndex::First,
        };
        // |z - (1/2,1)|^2 = 7/4 - sqrt(3) < 1/16... compare against (1/2)^2.
        let near_top = CenteredBall::exact(pt((1, 2), (1, 1)), r(1, 2));
        assert_eq!(peak_in_ball(&peak, &near_top), Trivalent::Yes);

        let at_origin = CenteredBall::exact(pt((0, 1), (0, 1)), r(1, 2));
        assert_eq!(peak_in_ball(&peak, &at_origin), Trivalent::No);

        // |z - (1/2,0)|^2 = 3/4 = 48/64 < 49/64 = (7/8)^2: inside.
        let below = CenteredBall::exact(pt((1, 2), (0, 1)), r(7, 8));
        assert_eq!(peak_in_ball(&peak, &below), Trivalent::Yes);

        // Errors force the conservative answer.
        let fuzzy = CenteredBall::with_err(pt((1, 2), (1, 1)), r(1, 2), r(1, 100));
        assert_eq!(peak_in_ball(&peak, &fuzzy), Trivalent::Unknown);
    }

    #[test]
    fn peak_sides_are_distinct() {
        let l = unit_lens();
        let upper = CenteredBall::exact(pt((1, 2), (3, 4)), r(1, 4));
        let lower = CenteredBall::exact(pt((1, 2), (-3, 4)), r(1, 4));
        let p1 = PeakRef {
            lens: l.clone(),
            index: PeakIndex::First,
        };
        let p2 = PeakRef {
            lens: l,
            index: PeakIndex::Second,
        };
        assert_eq!(peak_in_ball(&p1, &upper), Trivalent::Yes);
        assert_eq!(peak_in_ball(&p1, &lower), Trivalent::No);
        assert_eq!(peak_in_ball(&p2, &lower), Trivalent::Yes);
        assert_eq!(peak_in_ball(&p2, &upper), Trivalent::No);
    }

    #[test]
    fn segment_intersection_cases() {
        let a = Pt2::from_ints(0, 0);
        let b = Pt2::from_ints(1, 1);
        let c = Pt2::from_ints(0, 1);
        let d = Pt2::from_ints(1, 0);
        assert!(segments_intersect(&a, &b, &c, &d));

        let e = Pt2::from_ints(1, 0);
        assert!(!segments_intersect(
            &a,
            &e,
            &Pt2::from_ints(0, 1),
            &Pt2::from_ints(1, 1)
        ));

        // Shared endpoint, collinear touch.
        assert!(segments_intersect(
            &a,
            &e,
            &e,
            &Pt2::from_ints(2, 0)
        ));
    }

    #[test]
    fn alternation_on_ball() {
        let v = Region::Ball(CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 2)));
        let east = CenteredBall::exact(pt((15, 16), (1, 2)), r(1, 8));
        let north = CenteredBall::exact(pt((1, 2), (15, 16)), r(1, 8));
        let west = CenteredBall::exact(pt((1, 16), (1, 2)), r(1, 8));
        let south = CenteredBall::exact(pt((1, 2), (1, 16)), r(1, 8));

        // f at east/west, g at north/south: alternates.
        assert_eq!(
            balls_alternate_on_boundary(&v, &east, &west, &north, &south),
            Trivalent::Yes
        );
        // f at east/north, g at west/south: two f arcs adjacent.
        assert_eq!(
            balls_alternate_on_boundary(&v, &east, &north, &west, &south),
            Trivalent::No
        );
        // Exactly collinear directions tie.
        let east2 = CenteredBall::exact(pt((31, 32), (1, 2)), r(1, 16));
        assert_eq!(
            balls_alternate_on_boundary(&v, &east, &west, &east2, &south),
            Trivalent::Unknown
        );
    }

    #[test]
    fn alternation_on_lens() {
        let l = unit_lens();
        let v = Region::Lens(l);
        // Right bulge of the lens is the arc of circle 1 near (1,0) direction.
        let arc1_ball = CenteredBall::exact(pt((15, 16), (0, 1)), r(1, 4));
        let arc2_ball = CenteredBall::exact(pt((1, 16), (0, 1)), r(1, 4));
        let peak1_ball = CenteredBall::exact(pt((1, 2), (7, 8)), r(1, 4));
        let peak2_ball = CenteredBall::exact(pt((1, 2), (-7, 8)), r(1, 4));

        assert_eq!(
            balls_alternate_on_boundary(&v, &arc1_ball, &arc2_ball, &peak1_ball, &peak2_ball),
            Trivalent::Yes
        );
        assert_eq!(
            balls_alternate_on_boundary(&v, &arc1_ball, &peak1_ball, &arc2_ball, &peak2_ball),
            Trivalent::No
        );
    }

    #[test]
    fn region_probes() {
        let square = Region::UnitSquareInterior;
        let p = PtEnc::exact(pt((1, 2), (1, 4)));
        assert_eq!(square.clearance_lb(&p, 20), r(1, 4));

        let ball = Region::Ball(CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 4)));
        let inside = PtEnc::exact(pt((1, 2), (1, 2)));
        assert!(ball.clearance_lb(&inside, 20) > r(15, 64));
        let outside = PtEnc::exact(pt((0, 1), (0, 1)));
        assert!(ball.outside_margin_lb(&outside, 20) > r(2, 5));
    }

    #[test]
    fn region_nesting() {
        let outer = Region::Ball(CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 4)));
        let inner = Region::Ball(CenteredBall::exact(pt((1, 2), (1, 2)), r(1, 8)));
        assert_eq!(region_closure_inside(&inner, &outer, 20), Trivalent::Yes);
        assert_eq!(region_closure_inside(&outer, &inner, 20), Trivalent::Unknown);
        assert_eq!(
            region_closure_inside(&inner, &Region::UnitSquareInterior, 20),
            Trivalent::Yes
        );
    }
}
