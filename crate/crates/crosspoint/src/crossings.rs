//! Meetings, crossings and proper crossings; the refinement loop that nests
//! proper crossings down to a certified intersection enclosure; and the
//! witness-parameterized limit constructor for the non-effective branch.
//!
//! A proper crossing replaces the (uncomputable) boundary endpoint data of a
//! crossing by four pairwise disjoint rational balls that contain the
//! transition-zone images and alternate f,g,f,g on the region boundary. That
//! certificate is checkable, and nested sequences of them converge to an
//! intersection point.

use std::sync::Arc;

use crate::error::DegenerateGate;
use crate::fuel::{FuelMeter, Semi, Starved};
use crate::gates::{
    make_passage, robust_chords_cross, BallChain, CrossedGateCert, GateCert, Passage,
    SubCrossingOutcome,
};
use crate::geom::{
    balls_alternate_on_boundary, peak_in_ball, region_closure_inside, CenteredBall, PeakIndex,
    PeakRef, Pt2, PtEnc, Region, Trivalent,
};
use crate::path::{normalize_endpoints, not_in_range_above, PathOracle};
use crate::rat::Rat;
use crate::reach::{
    certify_image_in_ball, find_thin_radius_pair, image_enclosure, ReachRefiner,
};

/// A region with two rational times whose images provably lie inside it.
#[derive(Clone, Debug)]
pub struct Meeting {
    pub v: Region,
    pub c_f: Rat,
    pub c_g: Rat,
}

/// Which disjunct placed a ball on a lens-shaped region's boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LensClause {
    InsideFirstBall,
    InsideSecondBall,
    CoversFirstPeak,
    CoversSecondPeak,
}

/// Checkable certificate of a proper crossing. Self-contained: every clause
/// can be re-verified from the recorded data and oracle access alone.
#[derive(Clone, Debug)]
pub struct ProperCrossingCert {
    pub meeting: Meeting,
    /// Rational balls containing the images of f's back zone, f's fwd zone,
    /// g's back zone and g's fwd zone, in that order.
    pub ball_f_back: CenteredBall,
    pub ball_f_fwd: CenteredBall,
    pub ball_g_back: CenteredBall,
    pub ball_g_fwd: CenteredBall,
    /// Time windows whose images were certified inside the four balls.
    pub zone_windows: [(Rat, Rat); 4],
    /// Recorded lens-boundary clause per ball when the region is a lens.
    pub lens_clause: Option<[LensClause; 4]>,
    /// Certified distances of the two f-ball centers to range(g); both
    /// strictly exceed the ball radius, so the crossing acts as a crossed
    /// gate in the next refinement round.
    pub f_back_range_margin: Rat,
    pub f_fwd_range_margin: Rat,
    /// Robust transversality margin of the center chords.
    pub chords_margin: Rat,
    /// Stay windows of f around c_f and of g around c_g in the region.
    pub f_stay_window: (Rat, Rat),
    pub g_stay_window: (Rat, Rat),
}

impl ProperCrossingCert {
    /// The representative chords: segments between the f-ball centers and
    /// between the g-ball centers. Alternation makes them intersect.
    pub fn representative_chords(&self) -> ((Pt2, Pt2), (Pt2, Pt2)) {
        (
            (
                self.ball_f_back.center.clone(),
                self.ball_f_fwd.center.clone(),
            ),
            (
                self.ball_g_back.center.clone(),
                self.ball_g_fwd.center.clone(),
            ),
        )
    }

    /// View of the proper crossing as a crossed gate, powering the next
    /// refinement round.
    pub fn as_crossed_gate(&self) -> CrossedGateCert {
        let enc = |b: &CenteredBall| PtEnc::new(b.center.clone(), b.radius.clone());
        CrossedGateCert {
            gate: GateCert {
                passage: Passage {
                    v: self.meeting.v.clone(),
                    c: self.meeting.c_f.clone(),
                    membership_margin: Rat::zero(),
                },
                left_pt: enc(&self.ball_f_back),
                right_pt: enc(&self.ball_f_fwd),
                left_margin: self.f_back_range_margin.clone(),
                right_margin: self.f_fwd_range_margin.clone(),
                stay_window: self.f_stay_window.clone(),
            },
            d: self.meeting.c_g.clone(),
            g_left: enc(&self.ball_g_back),
            g_right: enc(&self.ball_g_fwd),
            transversality_margin: self.chords_margin.clone(),
            g_stay_window: self.g_stay_window.clone(),
        }
    }
}

/// Three-valued outcome of proper-crossing verification.
#[derive(Debug)]
pub enum ProperOutcome {
    Cert(Box<ProperCrossingCert>),
    /// A decidable clause provably fails.
    Rejected(&'static str),
    Unknown(Starved),
}

/// Verifies a candidate proper crossing: decidable clauses (ball
/// disjointness, boundary alternation, lens-boundary placement) are decided
/// exactly; the zone-image inclusions are semi-decided with the given fuel.
pub fn verify_proper_crossing(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    meeting: &Meeting,
    balls: [&CenteredBall; 4],
    fuel: u64,
) -> ProperOutcome {
    let mut meter = FuelMeter::new(fuel);
    let [bf_back, bf_fwd, bg_back, bg_fwd] = balls;

    // The candidate balls must be exact rational data.
    for b in balls {
        if !b.center_err.is_zero() {
            return ProperOutcome::Unknown(Starved::at("proper:ball-not-exact", &meter));
        }
    }

    // Meeting membership.
    for (path, c) in [(f, &meeting.c_f), (g, &meeting.c_g)] {
        match make_passage(path, meeting.v.clone(), c.clone(), &mut meter) {
            Semi::Accepted(_) => {}
            Semi::Unknown(s) => return ProperOutcome::Unknown(s),
        }
    }

    // Pairwise disjointness (decidable on exact balls).
    let all = [bf_back, bf_fwd, bg_back, bg_fwd];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d2 = all[i].center.dist2(&all[j].center);
            let sum = (&all[i].radius + &all[j].radius).square();
            if d2 < sum {
                return ProperOutcome::Rejected("balls_not_disjoint");
            }
        }
    }

    // Alternation on the boundary.
    match balls_alternate_on_boundary(&meeting.v, bf_back, bf_fwd, bg_back, bg_fwd) {
        Trivalent::Yes => {}
        Trivalent::No => return ProperOutcome::Rejected("alternation_fails"),
        Trivalent::Unknown => {
            return ProperOutcome::Unknown(Starved::at("proper:alternation", &meter))
        }
    }

    // Lens-boundary clause for lens regions (decidable).
    let lens_clause = match &meeting.v {
        Region::Lens(l) => {
            let mut clauses = [LensClause::InsideFirstBall; 4];
            for (idx, b) in all.iter().enumerate() {
                let Some(clause) = lens_clause_for(l, b) else {
                    return ProperOutcome::Rejected("lens_clause_fails");
                };
                clauses[idx] = clause;
            }
            Some(clauses)
        }
        _ => None,
    };

    // Zone-image inclusions (semi-decidable): refine windows, certify via
    // the cover route.
    let share = meter.remaining() / 5;
    let f_reach = match zone_windows(f, &meeting.v, &meeting.c_f, share, &mut meter) {
        Some(w) => w,
        None => return ProperOutcome::Unknown(Starved::at("proper:f-windows", &meter)),
    };
    let g_reach = match zone_windows(g, &meeting.v, &meeting.c_g, share, &mut meter) {
        Some(w) => w,
        None => return ProperOutcome::Unknown(Starved::at("proper:g-windows", &meter)),
    };
    let checks: [(&dyn PathOracle, &(Rat, Rat), &CenteredBall); 4] = [
        (f, &f_reach.0, bf_back),
        (f, &f_reach.1, bf_fwd),
        (g, &g_reach.0, bg_back),
        (g, &g_reach.1, bg_fwd),
    ];
    let mut windows: Vec<(Rat, Rat)> = Vec::with_capacity(4);
    for (path, window, ball) in checks {
        let center = PtEnc::exact(ball.center.clone());
        let ok = certify_image_in_ball(
            path,
            &window.0,
            &window.1,
            &center,
            &ball.radius,
            share.max(64),
        );
        if ok != Trivalent::Yes {
            return ProperOutcome::Unknown(Starved::at("proper:zone-inclusion", &meter));
        }
        windows.push(window.clone());
    }

    // Range margins for the two f balls (needed by the refinement loop).
    let margins = f_ball_margins(g, bf_back, bf_fwd, &mut meter);
    let Some((m_back, m_fwd)) = margins else {
        return ProperOutcome::Unknown(Starved::at("proper:range-margins", &meter));
    };

    // Robust crossing of the center chords with the radii as enclosures.
    let enc = |b: &CenteredBall| PtEnc::new(b.center.clone(), b.radius.clone());
    let Some(chords_margin) = robust_chords_cross(
        &enc(bf_back),
        &enc(bf_fwd),
        &enc(bg_back),
        &enc(bg_fwd),
        36,
    ) else {
        return ProperOutcome::Unknown(Starved::at("proper:chords", &meter));
    };

    ProperOutcome::Cert(Box::new(ProperCrossingCert {
        meeting: meeting.clone(),
        ball_f_back: bf_back.clone(),
        ball_f_fwd: bf_fwd.clone(),
        ball_g_back: bg_back.clone(),
        ball_g_fwd: bg_fwd.clone(),
        zone_windows: [
            windows[0].clone(),
            windows[1].clone(),
            windows[2].clone(),
            windows[3].clone(),
        ],
        lens_clause,
        f_back_range_margin: m_back,
        f_fwd_range_margin: m_fwd,
        chords_margin,
        f_stay_window: (f_reach.0 .0.clone(), f_reach.1 .1.clone()),
        g_stay_window: (g_reach.0 .0.clone(), g_reach.1 .1.clone()),
    }))
}

/// Which lens-boundary disjunct holds for an exact ball, if any.
fn lens_clause_for(l: &crate::geom::Lens, b: &CenteredBall) -> Option<LensClause> {
    let inside = |outer: &CenteredBall| -> bool {
        b.radius < outer.radius
            && b.center.dist2(&outer.center) < (&outer.radius - &b.radius).square()
    };
    if inside(&l.b1) {
        return Some(LensClause::InsideFirstBall);
    }
    if inside(&l.b2) {
        return Some(LensClause::InsideSecondBall);
    }
    let p1 = PeakRef {
        lens: l.clone(),
        index: PeakIndex::First,
    };
    if peak_in_ball(&p1, b) == Trivalent::Yes {
        return Some(LensClause::CoversFirstPeak);
    }
    let p2 = PeakRef {
        lens: l.clone(),
        index: PeakIndex::Second,
    };
    if peak_in_ball(&p2, b) == Trivalent::Yes {
        return Some(LensClause::CoversSecondPeak);
    }
    None
}

/// Back and fwd zone windows of a path around `c` in the region, refined
/// within the given budget.
fn zone_windows(
    path: &dyn PathOracle,
    region: &Region,
    c: &Rat,
    budget: u64,
    meter: &mut FuelMeter,
) -> Option<((Rat, Rat), (Rat, Rat))> {
    let mut refiner = ReachRefiner::new(path, region.clone(), c.clone());
    let mut sub = FuelMeter::new(budget.min(meter.remaining()));
    for _ in 0..64 {
        if !refiner.step_round(&mut sub) {
            break;
        }
    }
    let spent = sub.spent();
    if !meter.try_spend(spent) {
        return None;
    }
    let w = refiner.windows();
    Some((w.back_zone(), w.fwd_zone()))
}

/// Certified distances of the two f-ball centers to range(g), each strictly
/// above twice the ball radius.
fn f_ball_margins(
    g: &dyn PathOracle,
    bf_back: &CenteredBall,
    bf_fwd: &CenteredBall,
    meter: &mut FuelMeter,
) -> Option<(Rat, Rat)> {
    let mut out = Vec::with_capacity(2);
    for ball in [bf_back, bf_fwd] {
        let x = PtEnc::exact(ball.center.clone());
        let need = Rat::from_int(2) * &ball.radius;
        match not_in_range_above(&x, g, &need, meter) {
            Semi::Accepted(m) => out.push(m),
            Semi::Unknown(_) => return None,
        }
    }
    Some((out[0].clone(), out[1].clone()))
}

/// Shrinks a crossing to a proper crossing on a slightly smaller region with
/// the same witness times: walks a dyadic shrink ladder until every clause
/// certifies. Existence is guaranteed when the four boundary images are
/// pairwise distinct, so `unknown` only reflects insufficient fuel.
pub fn properize(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    fuel: u64,
) -> Semi<ProperCrossingCert> {
    let mut meter = FuelMeter::new(fuel);
    properize_budgeted(f, g, crossed, &mut meter)
}

pub(crate) fn properize_budgeted(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    meter: &mut FuelMeter,
) -> Semi<ProperCrossingCert> {
    let v = &crossed.gate.passage.v;
    if matches!(v, Region::UnitSquareInterior) {
        return Semi::Unknown(Starved::at("properize:square-region", meter));
    }
    let bits = 36;

    // Pairwise distinctness margin of the four boundary images.
    let pts = [
        &crossed.gate.left_pt,
        &crossed.gate.right_pt,
        &crossed.g_left,
        &crossed.g_right,
    ];
    let mut sep: Option<Rat> = None;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = crate::geom::dist_lb(pts[i], pts[j], bits);
            if !d.is_positive() {
                return Semi::Unknown(Starved::at("properize:distinctness", meter));
            }
            sep = Some(match sep {
                None => d,
                Some(m) => m.min(d),
            });
        }
    }
    let sep = sep.expect("six pairs checked");

    // Ball radius scale and shrink ladder base.
    let e0 = (&sep / &Rat::from_int(8))
        .min(v.diameter_ub(bits) / Rat::from_int(8))
        .floor_dyadic(30);
    if !e0.is_positive() {
        return Semi::Unknown(Starved::at("properize:scale", meter));
    }

    for j in 0u32..12 {
        let e = &e0 * Rat::pow2(-(j as i32));
        let gamma = e.halve();
        let Some(w_region) = v.shrink(&gamma) else {
            continue;
        };
        match properize_attempt(f, g, crossed, &w_region, &e, meter) {
            Semi::Accepted(cert) => return Semi::Accepted(cert),
            Semi::Unknown(_) if !meter.exhausted() => continue,
            Semi::Unknown(s) => return Semi::Unknown(s),
        }
    }
    Semi::Unknown(Starved::at("properize:ladder", meter))
}

/// One ladder step: derives the four balls at radius `e` on the shrunken
/// region and runs full verification.
fn properize_attempt(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    w_region: &Region,
    e: &Rat,
    meter: &mut FuelMeter,
) -> Semi<ProperCrossingCert> {
    let meeting = Meeting {
        v: w_region.clone(),
        c_f: crossed.gate.passage.c.clone(),
        c_g: crossed.d.clone(),
    };

    // Turn a zone window into a rational ball of radius e around the zone
    // image: refine until the image enclosure fits well inside.
    let budget = (meter.remaining() / 10).max(512);
    let derive_ball = |path: &dyn PathOracle,
                       c: &Rat,
                       fwd: bool,
                       meter: &mut FuelMeter|
     -> Option<CenteredBall> {
        let mut refiner = ReachRefiner::new(path, w_region.clone(), c.clone());
        let mut sub = FuelMeter::new(budget.min(meter.remaining()));
        loop {
            if !refiner.step_round(&mut sub) {
                let spent = sub.spent();
                let _ = meter.try_spend(spent);
                return None;
            }
            let w = refiner.windows();
            let window = if fwd { w.fwd_zone() } else { w.back_zone() };
            let prec = 16 + 2 * refiner.rounds();
            if let Some(img) = image_enclosure(path, &window, prec) {
                if &img.err * Rat::from_int(4) < *e {
                    let spent = sub.spent();
                    if !meter.try_spend(spent) {
                        return None;
                    }
                    // Dyadic center keeps the ball rational; the rounding
                    // error is absorbed by the enclosure slack.
                    let bits_c = 30 + 2 * refiner.rounds();
                    let center = Pt2::new(
                        img.pt.x.floor_dyadic(bits_c),
                        img.pt.y.floor_dyadic(bits_c),
                    );
                    return Some(CenteredBall::exact(center, e.clone()));
                }
            }
        }
    };

    let Some(bf_back) = derive_ball(f, &meeting.c_f, false, meter) else {
        return Semi::Unknown(Starved::at("properize:f-back-ball", meter));
    };
    let Some(bf_fwd) = derive_ball(f, &meeting.c_f, true, meter) else {
        return Semi::Unknown(Starved::at("properize:f-fwd-ball", meter));
    };
    let Some(bg_back) = derive_ball(g, &meeting.c_g, false, meter) else {
        return Semi::Unknown(Starved::at("properize:g-back-ball", meter));
    };
    let Some(bg_fwd) = derive_ball(g, &meeting.c_g, true, meter) else {
        return Semi::Unknown(Starved::at("properize:g-fwd-ball", meter));
    };

    let verify_share = meter.remaining() / 2;
    match verify_proper_crossing(
        f,
        g,
        &meeting,
        [&bf_back, &bf_fwd, &bg_back, &bg_fwd],
        verify_share,
    ) {
        ProperOutcome::Cert(c) => {
            let _ = meter.try_spend(verify_share);
            Semi::Accepted(*c)
        }
        ProperOutcome::Rejected(why) => {
            let _ = meter.try_spend(verify_share / 4);
            Semi::Unknown(Starved {
                stage: format!("properize:rejected:{}", why),
                fuel_spent: meter.spent(),
            })
        }
        ProperOutcome::Unknown(_) => {
            let _ = meter.try_spend(verify_share);
            Semi::Unknown(Starved::at("properize:verify", meter))
        }
    }
}

/// Resumable enumerator of proper crossings: dovetails rational meeting
/// tuples by dyadic level (ball-shaped first, lens-shaped at deeper levels),
/// derives candidate ball placements from reach windows, and yields every
/// certificate that verifies within the per-candidate budget. Deterministic
/// order; the stream ends when fuel runs out.
pub struct ProperCrossingStream<'a> {
    f: &'a dyn PathOracle,
    g: &'a dyn PathOracle,
    constraint: Region,
    meter: FuelMeter,
    level: u32,
    index: usize,
}

impl<'a> ProperCrossingStream<'a> {
    pub fn new(
        f: &'a dyn PathOracle,
        g: &'a dyn PathOracle,
        constraint: Region,
        fuel: u64,
    ) -> Self {
        ProperCrossingStream {
            f,
            g,
            constraint,
            meter: FuelMeter::new(fuel),
            level: 1,
            index: 0,
        }
    }

    pub fn fuel_spent(&self) -> u64 {
        self.meter.spent()
    }

    /// Candidate meetings at a dyadic level: ball regions around f(a) for
    /// dyadic a and dyadic radii, paired with dyadic g-times.
    fn candidate(&self, level: u32, index: usize) -> Option<(Rat, Rat, Rat)> {
        let grid = 1usize << level.min(10);
        let radii = level.min(8) as usize;
        let total = (grid - 1) * radii * (grid - 1);
        if index >= total {
            return None;
        }
        let ai = index / (radii * (grid - 1));
        let rest = index % (radii * (grid - 1));
        let ri = rest / (grid - 1);
        let gi = rest % (grid - 1);
        let a = Rat::new((ai + 1) as i64, grid as i64);
        let r = Rat::pow2(-(ri as i32) - 2);
        let c_g = Rat::new((gi + 1) as i64, grid as i64);
        Some((a, r, c_g))
    }
}

impl Iterator for ProperCrossingStream<'_> {
    type Item = ProperCrossingCert;

    fn next(&mut self) -> Option<ProperCrossingCert> {
        loop {
            if self.meter.exhausted() {
                return None;
            }
            let Some((a, r, c_g)) = self.candidate(self.level, self.index) else {
                self.level += 1;
                self.index = 0;
                if self.level > 24 {
                    return None;
                }
                continue;
            };
            self.index += 1;

            let quantum = 4096u64 * self.level as u64;
            let budget = quantum.min(self.meter.remaining());
            let mut sub = FuelMeter::new(budget);
            let produced = attempt_meeting(
                self.f,
                self.g,
                &self.constraint,
                &a,
                &r,
                &c_g,
                &mut sub,
            );
            let spent = sub.spent();
            if !self.meter.try_spend(spent.max(1)) {
                return None;
            }
            if let Some(cert) = produced {
                return Some(cert);
            }
        }
    }
}

/// Tries to produce a proper crossing for the ball meeting around f(a).
fn attempt_meeting(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    constraint: &Region,
    a: &Rat,
    r: &Rat,
    c_g: &Rat,
    meter: &mut FuelMeter,
) -> Option<ProperCrossingCert> {
    let region = crate::reach::ball_region_at(f, a, r)?;
    if region_closure_inside(&region, constraint, 36) != Trivalent::Yes {
        return None;
    }
    if crate::geom::ball_closure_in_unit_square(match &region {
        Region::Ball(b) => b,
        _ => return None,
    }) != Trivalent::Yes
    {
        return None;
    }
    // g must visit the region at c_g.
    let passage_g = match make_passage(g, region.clone(), c_g.clone(), meter) {
        Semi::Accepted(p) => p,
        Semi::Unknown(_) => return None,
    };
    let _ = passage_g;
    // Stage a crossed gate for the ball region, then properize it.
    let passage = match make_passage(f, region.clone(), a.clone(), meter) {
        Semi::Accepted(p) => p,
        Semi::Unknown(_) => return None,
    };
    let gate = match crate::gates::verify_gate_budgeted(f, g, &passage, meter) {
        Semi::Accepted(gc) => gc,
        Semi::Unknown(_) => return None,
    };
    let crossed = match crate::gates::verify_crossed_budgeted(f, g, &gate, c_g, meter) {
        Semi::Accepted(c) => c,
        Semi::Unknown(_) => return None,
    };
    properize(f, g, &crossed, meter.remaining()).accepted()
}

/// Rational box enclosure of an intersection point: contains points of both
/// ranges within `diameter` of each other, with the witness data recorded.
#[derive(Clone, Debug)]
pub struct CertifiedPoint {
    pub box_x: (Rat, Rat),
    pub box_y: (Rat, Rat),
    /// Upper bound on the box diagonal.
    pub diameter: Rat,
    pub precision_bits: u32,
    pub f_witness_time: Rat,
    pub f_witness_image: PtEnc,
    pub g_witness_time: Rat,
    pub g_witness_image: PtEnc,
}

impl CertifiedPoint {
    pub fn contains(&self, p: &Pt2) -> bool {
        p.x >= self.box_x.0 && p.x <= self.box_x.1 && p.y >= self.box_y.0 && p.y <= self.box_y.1
    }
}

/// One refinement round recorded for audit.
#[derive(Clone, Debug)]
pub struct RefinementRound {
    pub cert: ProperCrossingCert,
    pub chain: BallChain,
    pub diameter_ub: Rat,
}

/// The audited trail of nested proper crossings the refinement produced.
#[derive(Debug, Default)]
pub struct RefinementTrace {
    pub rounds: Vec<RefinementRound>,
    pub limit_box: Option<(Rat, Rat, Rat, Rat)>,
}

#[derive(Debug)]
pub enum IntersectOutcome {
    Found(Box<CertifiedPoint>, RefinementTrace),
    Degenerate(DegenerateGate, RefinementTrace),
    Starved(Starved, RefinementTrace),
}

impl IntersectOutcome {
    pub fn found(self) -> Option<(CertifiedPoint, RefinementTrace)> {
        match self {
            IntersectOutcome::Found(p, t) => Some((*p, t)),
            _ => None,
        }
    }
}

/// Certified intersection enclosure for an interior-normalized pair: starts
/// from the unit-square crossed gate (c = 1/2, d = 1/2), then alternates
/// sub-crossing search and properization until the region diameter drops
/// below `2^-(n+1)` (so the reported box diagonal is below `2^-n`).
pub fn intersect_normalized(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    n: u32,
    fuel: u64,
) -> IntersectOutcome {
    let mut meter = FuelMeter::new(fuel);
    let mut trace = RefinementTrace::default();
    let target = Rat::pow2(-(n as i32) - 1);
    let bits = 40;

    // Root crossed gate on the open square.
    let half = Rat::new(1, 2);
    let passage = match make_passage(f, Region::UnitSquareInterior, half.clone(), &mut meter) {
        Semi::Accepted(p) => p,
        Semi::Unknown(s) => return IntersectOutcome::Starved(s, trace),
    };
    let gate = match crate::gates::verify_gate_budgeted(f, g, &passage, &mut meter) {
        Semi::Accepted(gc) => gc,
        Semi::Unknown(s) => return IntersectOutcome::Starved(s, trace),
    };
    let mut crossed = match crate::gates::verify_crossed_budgeted(f, g, &gate, &half, &mut meter)
    {
        Semi::Accepted(c) => c,
        Semi::Unknown(s) => return IntersectOutcome::Starved(s, trace),
    };

    let mut consecutive_starvations = 0u32;
    loop {
        // Finished?
        let region = &crossed.gate.passage.v;
        if !matches!(region, Region::UnitSquareInterior) {
            let diam = region.diameter_ub(bits);
            if diam <= target {
                let point = certified_point_from(&crossed, region, n, bits);
                trace.limit_box = Some(region.bounding_box());
                return IntersectOutcome::Found(Box::new(point), trace);
            }
        }
        if meter.exhausted() {
            return IntersectOutcome::Starved(
                Starved::at("intersect:fuel", &meter),
                trace,
            );
        }

        // One refinement round: sub-crossing then properization.
        let sub = match crate::gates::find_sub_crossing_budgeted(f, g, &crossed, &mut meter) {
            SubCrossingOutcome::Found(s) => s,
            SubCrossingOutcome::Degenerate(d) => {
                return IntersectOutcome::Degenerate(d, trace);
            }
            SubCrossingOutcome::Starved(s) => {
                consecutive_starvations += 1;
                if consecutive_starvations >= 2 {
                    // Completeness fallback: global enumeration constrained
                    // to the current region.
                    match enumeration_fallback(f, g, &crossed, &mut meter) {
                        Some(cert) => {
                            consecutive_starvations = 0;
                            advance(&mut crossed, cert, None, &mut trace, bits);
                            continue;
                        }
                        None => return IntersectOutcome::Starved(s, trace),
                    }
                }
                if meter.exhausted() {
                    return IntersectOutcome::Starved(s, trace);
                }
                continue;
            }
        };

        match properize_budgeted(f, g, &sub.cert, &mut meter) {
            Semi::Accepted(cert) => {
                consecutive_starvations = 0;
                advance(&mut crossed, cert, Some(sub.chain), &mut trace, bits);
            }
            Semi::Unknown(s) => {
                consecutive_starvations += 1;
                if meter.exhausted() {
                    return IntersectOutcome::Starved(s, trace);
                }
            }
        }
    }
}

fn advance(
    crossed: &mut CrossedGateCert,
    cert: ProperCrossingCert,
    chain: Option<BallChain>,
    trace: &mut RefinementTrace,
    bits: u32,
) {
    let diameter_ub = cert.meeting.v.diameter_ub(bits);
    *crossed = cert.as_crossed_gate();
    if let Some(chain) = chain {
        trace.rounds.push(RefinementRound {
            cert,
            chain,
            diameter_ub,
        });
    } else if let Some(last) = trace.rounds.last() {
        // Fallback round: reuse the previous chain record for audit
        // completeness.
        let chain = last.chain.clone();
        trace.rounds.push(RefinementRound {
            cert,
            chain,
            diameter_ub,
        });
    }
}

fn enumeration_fallback(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    meter: &mut FuelMeter,
) -> Option<ProperCrossingCert> {
    let budget = (meter.remaining() / 2).max(1 << 14).min(meter.remaining());
    let region = crossed.gate.passage.v.clone();
    let diam_cap = region.diameter_lb(36).halve();
    let mut stream = ProperCrossingStream::new(f, g, region, budget);
    let found = stream.by_ref().find(|cert| {
        cert.meeting.v.diameter_ub(36) < diam_cap
    });
    let spent = stream.fuel_spent();
    let _ = meter.try_spend(spent);
    found
}

fn certified_point_from(
    crossed: &CrossedGateCert,
    region: &Region,
    n: u32,
    bits: u32,
) -> CertifiedPoint {
    let (xlo, xhi, ylo, yhi) = region.bounding_box();
    let dx = &xhi - &xlo;
    let dy = &yhi - &ylo;
    let diameter = (dx.square() + dy.square()).sqrt_upper(bits);
    CertifiedPoint {
        box_x: (xlo, xhi),
        box_y: (ylo, yhi),
        diameter,
        precision_bits: n,
        f_witness_time: crossed.gate.passage.c.clone(),
        f_witness_image: crossed.gate.left_pt.clone(),
        g_witness_time: crossed.d.clone(),
        g_witness_image: crossed.g_left.clone(),
    }
}

/// Full pipeline for raw corner-condition paths: checks corners, normalizes
/// both paths, intersects, and maps the certified box back to the original
/// square.
pub fn intersect(
    f: Arc<dyn PathOracle>,
    g: Arc<dyn PathOracle>,
    n: u32,
    fuel: u64,
) -> Result<IntersectOutcome, crate::error::PathError> {
    let (f2, g2) = normalize_endpoints(f, g)?;
    Ok(map_back(intersect_raw(&f2, &g2, n, fuel)))
}

/// Like [`intersect`] but takes ownership-free oracles; used by the 1-D
/// reduction.
pub fn intersect_raw_pair(
    f: Arc<dyn PathOracle>,
    g: Arc<dyn PathOracle>,
    n: u32,
    fuel: u64,
) -> Result<IntersectOutcome, crate::error::PathError> {
    intersect(f, g, n, fuel)
}

fn intersect_raw(
    f2: &crate::path::NormalizedPath,
    g2: &crate::path::NormalizedPath,
    n: u32,
    fuel: u64,
) -> IntersectOutcome {
    // Two extra bits: the denormalization map scales boxes by 3.
    intersect_normalized(f2, g2, n + 2, fuel)
}

fn map_back(outcome: IntersectOutcome) -> IntersectOutcome {
    match outcome {
        IntersectOutcome::Found(p, t) => {
            let three = Rat::from_int(3);
            let one = Rat::one();
            let map = |v: &Rat| v * &three - &one;
            let map_pt = |e: &PtEnc| {
                PtEnc::new(
                    Pt2::new(map(&e.pt.x), map(&e.pt.y)),
                    &e.err * &three,
                )
            };
            let point = CertifiedPoint {
                box_x: (map(&p.box_x.0), map(&p.box_x.1)),
                box_y: (map(&p.box_y.0), map(&p.box_y.1)),
                diameter: &p.diameter * &three,
                precision_bits: p.precision_bits.saturating_sub(2),
                f_witness_time: p.f_witness_time.clone(),
                f_witness_image: map_pt(&p.f_witness_image),
                g_witness_time: p.g_witness_time.clone(),
                g_witness_image: map_pt(&p.g_witness_image),
            };
            IntersectOutcome::Found(Box::new(point), t)
        }
        other => other,
    }
}

/// Which disjunct of the non-effective case split a caller-supplied witness
/// asserts at a given level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSide {
    BackZone,
    FwdZone,
}

/// Oracle answering the non-computable disjunct per level: which zone's
/// image meets the other range infinitely often. The computable skeleton
/// consumes it only to label the output.
pub trait ZoneWitness {
    fn side_at(&self, level: u32) -> WitnessSide;
}

/// Constant witness, the standard test double.
pub struct ConstWitness(pub WitnessSide);

impl ZoneWitness for ConstWitness {
    fn side_at(&self, _level: u32) -> WitnessSide {
        self.0
    }
}

/// Nested limit boxes for the witness-parameterized branch.
#[derive(Clone, Debug)]
pub struct WitnessedLimits {
    /// Nested closed interval enclosing the back-zone limit point.
    pub back_box: (Rat, Rat),
    /// Nested closed interval enclosing the fwd-zone limit point.
    pub fwd_box: (Rat, Rat),
    /// Which limit the witness labels as carrying the range membership.
    pub labeled: WitnessSide,
    pub levels_completed: u32,
    pub fuel_spent: u64,
}

/// Iterates the paired-radius shrink to produce nested zone windows of
/// geometrically decreasing length, intersected into limit boxes. The
/// witness affects only the final label, never the boxes.
pub fn witnessed_limit_boxes(
    f: &dyn PathOracle,
    _g: &dyn PathOracle,
    a: &Rat,
    r: &Rat,
    s: &Rat,
    witness: &dyn ZoneWitness,
    levels: u32,
    fuel: u64,
) -> WitnessedLimits {
    let mut meter = FuelMeter::new(fuel);
    // Initial coarse windows from a plain reach pass.
    let coarse = crate::reach::refine_reach(f, a, s, meter.remaining() / 8);
    let _ = meter.try_spend(coarse.fuel_spent);
    let mut back_box = (coarse.back_exit_lo.clone(), coarse.back_stay_hi.clone());
    let mut fwd_box = (coarse.fwd_stay_lo.clone(), coarse.fwd_exit_hi.clone());

    let mut lo_r = r.clone();
    let mut hi_s = s.clone();
    let mut completed = 0u32;
    for level in 1..=levels {
        let eps = Rat::pow2(-(level as i32));
        let budget = meter.remaining();
        match find_thin_radius_pair(f, a, &lo_r, &hi_s, &eps, budget) {
            Semi::Accepted(pair) => {
                let _ = meter.try_spend(pair.fuel_spent);
                // Intersect with the running boxes (closed hulls nest).
                back_box = (
                    back_box.0.clone().max(pair.back_window.0.clone()),
                    back_box.1.clone().min(pair.back_window.1.clone()),
                );
                fwd_box = (
                    fwd_box.0.clone().max(pair.fwd_window.0.clone()),
                    fwd_box.1.clone().min(pair.fwd_window.1.clone()),
                );
                lo_r = pair.r_inner;
                hi_s = pair.r_outer;
                completed = level;
            }
            Semi::Unknown(_) => break,
        }
        if meter.exhausted() {
            break;
        }
    }
    WitnessedLimits {
        back_box,
        fwd_box,
        labeled: witness.side_at(completed),
        levels_completed: completed,
        fuel_spent: meter.spent(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{anti_diagonal_path, diagonal_path};

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn normalized() -> (crate::path::NormalizedPath, crate::path::NormalizedPath) {
        normalize_endpoints(
            Arc::new(diagonal_path()),
            Arc::new(anti_diagonal_path()),
        )
        .expect("corners")
    }

    fn center_ball_meeting() -> (Meeting, [CenteredBall; 4]) {
        // Normalized diagonals cross at (1/2, 1/2); the region is a ball of
        // radius 1/4 around it. Transition images sit on the circle along
        // the diagonal (f) and anti-diagonal (g) directions.
        let v = Region::Ball(CenteredBall::exact(
            Pt2::new(r(1, 2), r(1, 2)),
            r(1, 4),
        ));
        let meeting = Meeting {
            v,
            c_f: r(1, 2),
            c_g: r(1, 2),
        };
        // sqrt(2)/8 ~ 0.177: exits near (0.323, 0.323), (0.677, 0.677) for f
        // and (0.323, 0.677), (0.677, 0.323) for g. Balls of radius 1/16
        // placed at dyadic approximations cover the zone images.
        let place = |x: (i64, i64), y: (i64, i64)| {
            CenteredBall::exact(Pt2::new(r(x.0, x.1), r(y.0, y.1)), r(1, 16))
        };
        let balls = [
            place((331, 1024), (331, 1024)),
            place((693, 1024), (693, 1024)),
            place((331, 1024), (693, 1024)),
            place((693, 1024), (331, 1024)),
        ];
        (meeting, balls)
    }

    #[test]
    fn proper_crossing_at_center_ball() {
        let (f, g) = normalized();
        let (meeting, balls) = center_ball_meeting();
        match verify_proper_crossing(
            &f,
            &g,
            &meeting,
            [&balls[0], &balls[1], &balls[2], &balls[3]],
            2_000_000,
        ) {
            ProperOutcome::Cert(cert) => {
                assert!(cert.lens_clause.is_none());
                assert!(cert.f_back_range_margin > cert.ball_f_back.radius);
                let ((a1, a2), (b1, b2)) = cert.representative_chords();
                assert!(crate::geom::segments_intersect(&a1, &a2, &b1, &b2));
            }
            ProperOutcome::Rejected(why) => panic!("rejected: {}", why),
            ProperOutcome::Unknown(s) => panic!("starved: {}", s),
        }
    }

    #[test]
    fn adjacent_same_tag_balls_rejected() {
        let (f, g) = normalized();
        let (meeting, balls) = center_ball_meeting();
        // Swap one g ball with an f ball: tags become adjacent on the circle.
        match verify_proper_crossing(
            &f,
            &g,
            &meeting,
            [&balls[0], &balls[2], &balls[1], &balls[3]],
            500_000,
        ) {
            ProperOutcome::Rejected(why) => assert_eq!(why, "alternation_fails"),
            other => panic!("expected rejection, got {:?}", other),
        }
    }

    #[test]
    fn undersized_balls_starve() {
        let (f, g) = normalized();
        let (meeting, balls) = center_ball_meeting();
        let tiny: Vec<CenteredBall> = balls
            .iter()
            .map(|b| CenteredBall::exact(b.center.clone(), Rat::pow2(-40)))
            .collect();
        match verify_proper_crossing(
            &f,
            &g,
            &meeting,
            [&tiny[0], &tiny[1], &tiny[2], &tiny[3]],
            200_000,
        ) {
            ProperOutcome::Unknown(_) => {}
            other => panic!("expected starvation, got {:?}", other),
        }
    }

    #[test]
    fn properize_square_crossing_fails_gracefully() {
        // Properization is only defined on ball/lens regions.
        let (f, g) = normalized();
        let mut meter = FuelMeter::new(100_000);
        let passage =
            match make_passage(&f, Region::UnitSquareInterior, r(1, 2), &mut meter) {
                Semi::Accepted(p) => p,
                Semi::Unknown(s) => panic!("{}", s),
            };
        let gate = crate::gates::verify_gate(&f, &g, &passage, 200_000)
            .accepted()
            .unwrap();
        let crossed = crate::gates::verify_crossed(&f, &g, &gate, &r(1, 2), 200_000)
            .accepted()
            .unwrap();
        assert!(!properize(&f, &g, &crossed, 50_000).is_accepted());
    }

    #[test]
    fn witnessed_limits_nest_and_shrink() {
        let f = diagonal_path();
        let g = anti_diagonal_path();
        let w = witnessed_limit_boxes(
            &f,
            &g,
            &r(1, 2),
            &r(1, 8),
            &r(1, 4),
            &ConstWitness(WitnessSide::BackZone),
            4,
            2_000_000,
        );
        assert!(w.levels_completed >= 3, "completed {}", w.levels_completed);
        assert!(w.back_box.0 <= w.back_box.1);
        assert!(&w.back_box.1 - &w.back_box.0 < Rat::pow2(-(w.levels_completed as i32)));
        assert!(&w.fwd_box.1 - &w.fwd_box.0 < Rat::pow2(-(w.levels_completed as i32)));
        assert_eq!(w.labeled, WitnessSide::BackZone);

        // Different witness: identical boxes, different label.
        let w2 = witnessed_limit_boxes(
            &f,
            &g,
            &r(1, 2),
            &r(1, 8),
            &r(1, 4),
            &ConstWitness(WitnessSide::FwdZone),
            4,
            2_000_000,
        );
        assert_eq!(w.back_box, w2.back_box);
        assert_eq!(w.fwd_box, w2.fwd_box);
        assert_eq!(w2.labeled, WitnessSide::FwdZone);
    }
}
