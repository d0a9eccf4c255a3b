//! Certified reach enclosures: where a path provably stays inside a region
//! and where it provably has left it.
//!
//! For a region V and a time c with f(c) in V, four times matter (all
//! semi-computable, none computable in general): walking backward/forward
//! from c, the last time still inside the open region (`back_stay`,
//! `fwd_stay`, the ends of the maximal open stay interval) and the first
//! time provably outside the closure (`back_exit`, `fwd_exit`). The ordering
//! is always `back_exit <= back_stay <= c <= fwd_stay <= fwd_exit`. The
//! *back zone* `[back_exit; back_stay]` and *fwd zone* `[fwd_stay; fwd_exit]`
//! are the transition windows whose images sit on the region boundary.
//!
//! Lower bounds for stay times come from stay-certificates (a walk that
//! certifies containment step by step); upper bounds come from
//! exit-certificates (single evaluations provably outside). There is no
//! bisection on uncertified data, so every returned enclosure is valid at
//! any fuel, merely loose when starved.

use crate::fuel::{FuelMeter, Semi, Starved};
use crate::geom::{CenteredBall, Pt2, PtEnc, Region, Trivalent};
use crate::path::{image_spread, not_in_range_semitest, range_cover, PathOracle};
use crate::rat::Rat;

/// Verified interval enclosures of the four reach times of a ball around
/// `f(a)`, plus the fuel actually consumed.
#[derive(Clone, Debug)]
pub struct ReachEnclosure {
    pub a: Rat,
    pub r: Rat,
    pub back_exit_lo: Rat,
    pub back_exit_hi: Rat,
    pub back_stay_lo: Rat,
    pub back_stay_hi: Rat,
    pub fwd_stay_lo: Rat,
    pub fwd_stay_hi: Rat,
    pub fwd_exit_lo: Rat,
    pub fwd_exit_hi: Rat,
    pub fuel_spent: u64,
}

impl ReachEnclosure {
    /// Window certainly containing the back transition zone.
    pub fn back_zone(&self) -> (Rat, Rat) {
        (self.back_exit_lo.clone(), self.back_stay_hi.clone())
    }

    /// Window certainly containing the fwd transition zone.
    pub fn fwd_zone(&self) -> (Rat, Rat) {
        (self.fwd_stay_lo.clone(), self.fwd_exit_hi.clone())
    }

    pub fn ordering_holds(&self) -> bool {
        self.back_exit_lo <= self.back_exit_hi
            && self.back_exit_hi <= self.back_stay_hi
            && self.back_stay_lo <= self.back_stay_hi
            && self.back_stay_hi <= self.a
            && self.a <= self.fwd_stay_lo
            && self.fwd_stay_lo <= self.fwd_stay_hi
            && self.fwd_stay_lo <= self.fwd_exit_lo
            && self.fwd_exit_lo <= self.fwd_exit_hi
    }
}

/// Generic region variant of the same enclosure, used for gates and
/// meetings (the region need not be a ball around a path point).
#[derive(Clone, Debug)]
pub struct RegionReach {
    pub c: Rat,
    pub back_exit_lo: Rat,
    pub back_exit_hi: Rat,
    pub back_stay_lo: Rat,
    pub back_stay_hi: Rat,
    pub fwd_stay_lo: Rat,
    pub fwd_stay_hi: Rat,
    pub fwd_exit_lo: Rat,
    pub fwd_exit_hi: Rat,
    pub fuel_spent: u64,
}

impl RegionReach {
    pub fn back_zone(&self) -> (Rat, Rat) {
        (self.back_exit_lo.clone(), self.back_stay_hi.clone())
    }

    pub fn fwd_zone(&self) -> (Rat, Rat) {
        (self.fwd_stay_lo.clone(), self.fwd_exit_hi.clone())
    }

    pub fn back_stay_window(&self) -> (Rat, Rat) {
        (self.back_stay_lo.clone(), self.back_stay_hi.clone())
    }

    pub fn fwd_stay_window(&self) -> (Rat, Rat) {
        (self.fwd_stay_lo.clone(), self.fwd_stay_hi.clone())
    }
}

#[derive(Clone, Debug)]
struct DirState {
    /// Certified stay bound in walk-local time: the path provably remains in
    /// the open region on [start; frontier].
    frontier: Rat,
    /// Certified upper bound for the open-stay end.
    open_hi: Rat,
    /// Certified upper bound for the closed-exit time.
    exit_hi: Rat,
}

impl DirState {
    fn new(start: Rat) -> Self {
        DirState {
            frontier: start,
            open_hi: Rat::one(),
            exit_hi: Rat::one(),
        }
    }
}

/// Resumable refinement engine for one (path, region, c) triple. Rounds are
/// deterministic; enclosures only ever shrink.
pub struct ReachRefiner<'a> {
    path: &'a dyn PathOracle,
    region: Region,
    c: Rat,
    fwd: DirState,
    bwd: DirState,
    round: u32,
    fuel_spent: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Fwd,
    Bwd,
}

impl<'a> ReachRefiner<'a> {
    pub fn new(path: &'a dyn PathOracle, region: Region, c: Rat) -> Self {
        let mirrored_c = Rat::one() - &c;
        ReachRefiner {
            path,
            region,
            c: c.clone(),
            fwd: DirState::new(c),
            bwd: DirState::new(mirrored_c),
            round: 0,
            fuel_spent: 0,
        }
    }

    /// Starts with certified exit bounds carried over from an enclosing
    /// region around the same time (sound: leaving the closure of a superset
    /// region implies leaving this one). Bounds are in global time.
    pub fn with_exit_seeds(
        path: &'a dyn PathOracle,
        region: Region,
        c: Rat,
        fwd_exit_hi: Rat,
        back_exit_lo: Rat,
    ) -> Self {
        let mut r = ReachRefiner::new(path, region, c.clone());
        if fwd_exit_hi >= c && fwd_exit_hi <= Rat::one() {
            r.fwd.exit_hi = fwd_exit_hi.clone();
            r.fwd.open_hi = fwd_exit_hi;
        }
        if back_exit_lo <= c && !back_exit_lo.is_negative() {
            let local = Rat::one() - &back_exit_lo;
            r.bwd.exit_hi = local.clone();
            r.bwd.open_hi = local;
        }
        r
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn rounds(&self) -> u32 {
        self.round
    }

    fn eval_local(&self, dir: Dir, t: &Rat, prec: u32) -> Option<PtEnc> {
        let global = match dir {
            Dir::Fwd => t.clone(),
            Dir::Bwd => Rat::one() - t,
        };
        self.path.eval(&global, prec).ok()
    }

    /// Runs one refinement round (a few stay-walk attempts and a probe
    /// ladder in each direction). Returns false when the meter starved
    /// mid-round or when the round could not consume any work (both
    /// directions fully converged); already-recorded progress remains valid.
    pub fn step_round(&mut self, meter: &mut FuelMeter) -> bool {
        self.round += 1;
        let k = self.round;
        let prec = 8 + k.min(120);
        let bits = prec + 4;
        let spent_before = self.fuel_spent;
        for dir in [Dir::Fwd, Dir::Bwd] {
            if !self.walk(dir, prec, bits, meter) {
                return false;
            }
            if !self.probe(dir, prec, bits, meter) {
                return false;
            }
        }
        self.fuel_spent > spent_before
    }

    fn state(&mut self, dir: Dir) -> &mut DirState {
        match dir {
            Dir::Fwd => &mut self.fwd,
            Dir::Bwd => &mut self.bwd,
        }
    }

    fn walk(&mut self, dir: Dir, prec: u32, bits: u32, meter: &mut FuelMeter) -> bool {
        for _ in 0..4 {
            let frontier = self.state(dir).frontier.clone();
            if frontier >= Rat::one() {
                break;
            }
            if !meter.try_spend(1) {
                return false;
            }
            self.fuel_spent += 1;
            let Some(e) = self.eval_local(dir, &frontier, prec) else {
                break;
            };
            let clearance = self.region.clearance_lb(&e, bits);
            if !clearance.is_positive() {
                break;
            }
            let rho = clearance.halve().floor_dyadic(bits);
            if !rho.is_positive() {
                break;
            }
            let delta = self.path.modulus(&rho).halve().floor_dyadic(bits);
            if !delta.is_positive() {
                break;
            }
            let next = (&frontier + &delta).min(Rat::one());
            self.state(dir).frontier = next;
        }
        true
    }

    fn probe(&mut self, dir: Dir, prec: u32, bits: u32, meter: &mut FuelMeter) -> bool {
        let depth = self.round.min(10);
        let all_exact = self.region.total_center_err().is_zero();
        for j in 1..=depth {
            let (frontier, exit_hi) = {
                let st = self.state(dir);
                (st.frontier.clone(), st.exit_hi.clone())
            };
            let gap = &exit_hi - &frontier;
            if !gap.is_positive() {
                break;
            }
            let b = &frontier + &gap * Rat::pow2(-(j as i32));
            if !meter.try_spend(1) {
                return false;
            }
            self.fuel_spent += 1;
            let Some(e) = self.eval_local(dir, &b, prec) else {
                continue;
            };
            if self.region.outside_margin_lb(&e, bits).is_positive() {
                let st = self.state(dir);
                if b < st.exit_hi {
                    st.exit_hi = b.clone();
                }
                if b < st.open_hi {
                    st.open_hi = b;
                }
                continue;
            }
            if all_exact && e.err.is_zero() {
                let (out_open, out_closed) = exact_outside(&self.region, &e.pt);
                let st = self.state(dir);
                if out_closed && b < st.exit_hi {
                    st.exit_hi = b.clone();
                }
                if out_open && b < st.open_hi {
                    st.open_hi = b;
                }
            }
        }
        // Keep open-stay bound consistent with the closed-exit bound.
        let st = self.state(dir);
        if st.exit_hi < st.open_hi {
            st.open_hi = st.exit_hi.clone();
        }
        true
    }

    pub fn windows(&self) -> RegionReach {
        let one = Rat::one();
        RegionReach {
            c: self.c.clone(),
            back_exit_lo: (&one - &self.bwd.exit_hi).max(Rat::zero()),
            back_exit_hi: &one - &self.bwd.frontier,
            back_stay_lo: &one - &self.bwd.open_hi,
            back_stay_hi: &one - &self.bwd.frontier,
            fwd_stay_lo: self.fwd.frontier.clone(),
            fwd_stay_hi: self.fwd.open_hi.clone(),
            fwd_exit_lo: self.fwd.frontier.clone(),
            fwd_exit_hi: self.fwd.exit_hi.clone(),
            fuel_spent: self.fuel_spent,
        }
    }

    /// Largest of the four window widths.
    pub fn max_window_width(&self) -> Rat {
        let w = self.windows();
        let widths = [
            &w.back_exit_hi - &w.back_exit_lo,
            &w.back_stay_hi - &w.back_stay_lo,
            &w.fwd_stay_hi - &w.fwd_stay_lo,
            &w.fwd_exit_hi - &w.fwd_exit_lo,
        ];
        let mut m = widths[0].clone();
        for x in &widths[1..] {
            if x > &m {
                m = x.clone();
            }
        }
        m
    }
}

/// Exact outside-tests for error-free data: (outside the open region,
/// outside the closed region).
fn exact_outside(region: &Region, pt: &Pt2) -> (bool, bool) {
    match region {
        Region::UnitSquareInterior => {
            let zero = Rat::zero();
            let one = Rat::one();
            let out_open = pt.x <= zero || pt.x >= one || pt.y <= zero || pt.y >= one;
            let out_closed = pt.x < zero || pt.x > one || pt.y < zero || pt.y > one;
            (out_open, out_closed)
        }
        Region::Ball(b) => {
            let d2 = pt.dist2(&b.center);
            let r2 = b.radius.square();
            (d2 >= r2, d2 > r2)
        }
        Region::Lens(l) => {
            let (o1, c1) = exact_outside(&Region::Ball(l.b1.clone()), pt);
            let (o2, c2) = exact_outside(&Region::Ball(l.b2.clone()), pt);
            (o1 || o2, c1 || c2)
        }
    }
}

/// Builds the ball region `B(f(a), r)` from an evaluation enclosure of the
/// center. `None` when the error cannot be pushed below the radius.
pub fn ball_region_at(path: &dyn PathOracle, a: &Rat, r: &Rat) -> Option<Region> {
    for prec in [12u32, 20, 32, 48, 64] {
        if let Ok(e) = path.eval(a, prec) {
            if e.err < *r {
                let ball = CenteredBall::with_err(e.pt, r.clone(), e.err).at_time(a.clone());
                return Some(Region::Ball(ball));
            }
        }
    }
    None
}

/// Refines enclosures of the four reach times of `B(f(a), r)`.
///
/// Monotone in fuel: a larger budget replays the same deterministic rounds
/// and then continues, so intervals only shrink. Fuel exhaustion returns the
/// current (valid, possibly loose) enclosure, never a wrong one.
pub fn refine_reach(path: &dyn PathOracle, a: &Rat, r: &Rat, fuel: u64) -> ReachEnclosure {
    let mut meter = FuelMeter::new(fuel);
    let trivial = |spent: u64| ReachEnclosure {
        a: a.clone(),
        r: r.clone(),
        back_exit_lo: Rat::zero(),
        back_exit_hi: a.clone(),
        back_stay_lo: Rat::zero(),
        back_stay_hi: a.clone(),
        fwd_stay_lo: a.clone(),
        fwd_stay_hi: Rat::one(),
        fwd_exit_lo: a.clone(),
        fwd_exit_hi: Rat::one(),
        fuel_spent: spent,
    };
    let Some(region) = ball_region_at(path, a, r) else {
        return trivial(meter.spent());
    };
    let mut refiner = ReachRefiner::new(path, region, a.clone());
    while !meter.exhausted() {
        if !refiner.step_round(&mut meter) {
            break;
        }
    }
    let w = refiner.windows();
    ReachEnclosure {
        a: a.clone(),
        r: r.clone(),
        back_exit_lo: w.back_exit_lo,
        back_exit_hi: w.back_exit_hi.min(w.back_stay_hi.clone()),
        back_stay_lo: w.back_stay_lo,
        back_stay_hi: w.back_stay_hi,
        fwd_stay_lo: w.fwd_stay_lo,
        fwd_stay_hi: w.fwd_stay_hi,
        fwd_exit_lo: w.fwd_exit_lo,
        fwd_exit_hi: w.fwd_exit_hi,
        fuel_spent: meter.spent(),
    }
}

/// Open rational windows certified to contain the back and fwd transition
/// zones, certified thin when both lengths are below `eps`.
#[derive(Clone, Debug)]
pub struct StayWindows {
    pub back: (Rat, Rat),
    pub fwd: (Rat, Rat),
    pub certified: bool,
    pub fuel_spent: u64,
}

/// Lemma-style window localization: refines until both zone windows are
/// shorter than `eps` (certified), or fuel runs out (best windows,
/// `certified = false`).
pub fn stay_exit_windows(
    path: &dyn PathOracle,
    a: &Rat,
    r: &Rat,
    eps: &Rat,
    fuel: u64,
) -> StayWindows {
    assert!(eps.is_positive());
    let mut meter = FuelMeter::new(fuel);
    let Some(region) = ball_region_at(path, a, r) else {
        return StayWindows {
            back: (Rat::zero(), Rat::one()),
            fwd: (Rat::zero(), Rat::one()),
            certified: false,
            fuel_spent: meter.spent(),
        };
    };
    let mut refiner = ReachRefiner::new(path, region, a.clone());
    loop {
        let w = refiner.windows();
        let back = (&w.back_stay_hi - &w.back_exit_lo).max(Rat::zero());
        let fwd = (&w.fwd_exit_hi - &w.fwd_stay_lo).max(Rat::zero());
        if &back < eps && &fwd < eps {
            // Widen into open windows while keeping both below eps.
            let pad_b = (eps - &back) * Rat::new(1, 3);
            let pad_f = (eps - &fwd) * Rat::new(1, 3);
            return StayWindows {
                back: (&w.back_exit_lo - &pad_b, &w.back_stay_hi + &pad_b),
                fwd: (&w.fwd_stay_lo - &pad_f, &w.fwd_exit_hi + &pad_f),
                certified: true,
                fuel_spent: meter.spent(),
            };
        }
        if meter.exhausted() || !refiner.step_round(&mut meter) {
            let pad = Rat::pow2(-30);
            return StayWindows {
                back: (&w.back_exit_lo - &pad, &w.back_stay_hi + &pad),
                fwd: (&w.fwd_stay_lo - &pad, &w.fwd_exit_hi + &pad),
                certified: false,
                fuel_spent: meter.spent(),
            };
        }
    }
}

/// Output of the paired-radius search: two radii strictly between the given
/// ones whose combined transition windows are thin.
#[derive(Clone, Debug)]
pub struct ThinRadiusPair {
    pub r_inner: Rat,
    pub r_outer: Rat,
    /// Open window containing both back zones (inner and outer radius).
    pub back_window: (Rat, Rat),
    /// Open window containing both fwd zones.
    pub fwd_window: (Rat, Rat),
    pub fuel_spent: u64,
}

/// Finds radii `r < r_inner < r_outer < s` whose back zones fit in one open
/// window shorter than `eps` and likewise for the fwd zones. Dovetails over
/// a dyadic radius ladder; existence is guaranteed, so `unknown` only
/// reflects insufficient fuel.
pub fn find_thin_radius_pair(
    path: &dyn PathOracle,
    a: &Rat,
    r: &Rat,
    s: &Rat,
    eps: &Rat,
    fuel: u64,
) -> Semi<ThinRadiusPair> {
    assert!(r.is_positive() && r < s);
    assert!(eps.is_positive());
    let mut meter = FuelMeter::new(fuel);
    let span = s - r;

    // Ladder climbing toward s: rung i sits at s - span/2^(i+1).
    let rung = |i: u32| -> Rat { s - &(&span * Rat::pow2(-(i as i32) - 1)) };

    let mut refiners: Vec<(Rat, Rat, Option<ReachRefiner>)> = Vec::new();
    let mut round: u32 = 0;
    loop {
        round += 1;
        let pairs = (round.min(12)) as usize;
        while refiners.len() < pairs {
            let i = refiners.len() as u32;
            let inner = rung(2 * i);
            let outer = rung(2 * i + 1);
            refiners.push((inner, outer, None));
        }
        for idx in 0..refiners.len() {
            let (inner, outer, _) = &refiners[idx];
            let inner = inner.clone();
            let outer = outer.clone();
            // Advance both radii of the pair one round and test.
            let mut done = true;
            let mut back_hull: Option<(Rat, Rat)> = None;
            let mut fwd_hull: Option<(Rat, Rat)> = None;
            for radius in [&inner, &outer] {
                let Some(region) = ball_region_at(path, a, radius) else {
                    done = false;
                    break;
                };
                let mut refiner = ReachRefiner::new(path, region, a.clone());
                for _ in 0..round {
                    if !refiner.step_round(&mut meter) {
                        return Semi::Unknown(Starved::at("find_thin_radius_pair", &meter));
                    }
                }
                let w = refiner.windows();
                let merge = |hull: &mut Option<(Rat, Rat)>, lo: Rat, hi: Rat| {
                    *hull = Some(match hull.take() {
                        None => (lo, hi),
                        Some((a0, b0)) => (a0.min(lo), b0.max(hi)),
                    });
                };
                merge(&mut back_hull, w.back_exit_lo.clone(), w.back_stay_hi.clone());
                merge(&mut fwd_hull, w.fwd_stay_lo.clone(), w.fwd_exit_hi.clone());
            }
            if !done {
                continue;
            }
            let (bl, bh) = back_hull.expect("two merges happened");
            let (fl, fh) = fwd_hull.expect("two merges happened");
            let back_len = &bh - &bl;
            let fwd_len = &fh - &fl;
            if &back_len < eps && &fwd_len < eps {
                let pad_b = (eps - &back_len) * Rat::new(1, 3);
                let pad_f = (eps - &fwd_len) * Rat::new(1, 3);
                return Semi::Accepted(ThinRadiusPair {
                    r_inner: inner,
                    r_outer: outer,
                    back_window: (&bl - &pad_b, &bh + &pad_b),
                    fwd_window: (&fl - &pad_f, &fh + &pad_f),
                    fuel_spent: meter.spent(),
                });
            }
        }
        if meter.exhausted() {
            return Semi::Unknown(Starved::at("find_thin_radius_pair", &meter));
        }
    }
}

/// Encloses the image of the path over a short time window: evaluates at the
/// midpoint and pads by the certified drift over the window plus the
/// evaluation error.
pub fn image_enclosure(path: &dyn PathOracle, window: &(Rat, Rat), prec: u32) -> Option<PtEnc> {
    let (lo, hi) = window;
    debug_assert!(lo <= hi);
    let mid = Rat::mid(lo, hi);
    let e = path.eval(&mid.max(Rat::zero()).min(Rat::one()), prec).ok()?;
    let width = hi - lo;
    let drift = image_spread(path, &width);
    Some(PtEnc::new(e.pt, &e.err + &drift))
}

/// Certificate for a gate radius: a radius whose back/fwd transition images
/// both provably avoid the other path's range.
#[derive(Clone, Debug)]
pub struct GateRadius {
    pub t: Rat,
    /// Enclosure of the image of the back-stay end and its certified
    /// distance margin to the other range.
    pub back_image: PtEnc,
    pub back_margin: Rat,
    pub fwd_image: PtEnc,
    pub fwd_margin: Rat,
    pub fuel_spent: u64,
}

/// Searches the open radius interval `(lo; hi)` for a rational `t` making
/// `B(f(a), t)` a gate against `other`: the images of both open-stay ends
/// provably avoid `range(other)`. Dovetails dyadic candidates with growing
/// budgets; deterministic first-accept-by-index.
pub fn gate_radius_search(
    path: &dyn PathOracle,
    other: &dyn PathOracle,
    a: &Rat,
    lo: &Rat,
    hi: &Rat,
    fuel: u64,
) -> Semi<GateRadius> {
    let mut meter = FuelMeter::new(fuel);
    gate_radius_search_budgeted(path, other, a, lo, hi, &mut meter)
}

pub(crate) fn gate_radius_search_budgeted(
    path: &dyn PathOracle,
    other: &dyn PathOracle,
    a: &Rat,
    lo: &Rat,
    hi: &Rat,
    meter: &mut FuelMeter,
) -> Semi<GateRadius> {
    gate_radius_search_seeded(path, other, a, lo, hi, None, meter)
}

/// Optional certified exit seeds (global time fwd upper bound, back lower
/// bound) from an enclosing ball around the same anchor.
pub(crate) fn gate_radius_search_seeded(
    path: &dyn PathOracle,
    other: &dyn PathOracle,
    a: &Rat,
    lo: &Rat,
    hi: &Rat,
    seeds: Option<(Rat, Rat)>,
    meter: &mut FuelMeter,
) -> Semi<GateRadius> {
    assert!(lo < hi);
    let span = hi - lo;

    // Dyadic midpoints of (lo, hi): level l contributes odd/2^l positions.
    let candidate = |index: usize| -> Rat {
        let mut level = 1u32;
        let mut count = 1usize;
        let mut idx = index;
        while idx >= count {
            idx -= count;
            level += 1;
            count *= 2;
        }
        let odd = 2 * idx as i64 + 1;
        lo + &(&span * &(Rat::new(odd, 1) * Rat::pow2(-(level as i32))))
    };

    // Candidate refiners persist across rounds: each round advances every
    // live candidate one step and retries certification. New candidates
    // join staggered so the first usually finishes alone; failed range
    // tests back off exponentially instead of re-burning their budget
    // every round.
    let mut states: Vec<Option<(ReachRefiner, u32)>> = Vec::new();
    for round in 1u32..=64 {
        let max_candidate = (1 + round as usize / 4).min(12);
        while states.len() < max_candidate {
            let t = candidate(states.len());
            let refiner = ball_region_at(path, a, &t).map(|region| {
                let r = match &seeds {
                    Some((fwd_hi, back_lo)) => ReachRefiner::with_exit_seeds(
                        path,
                        region,
                        a.clone(),
                        fwd_hi.clone(),
                        back_lo.clone(),
                    ),
                    None => ReachRefiner::new(path, region, a.clone()),
                };
                (r, 3u32)
            });
            states.push(refiner);
        }
        for state in states.iter_mut().take(max_candidate) {
            let Some((refiner, next_attempt)) = state else {
                continue;
            };
            if !refiner.step_round(meter) && meter.exhausted() {
                return Semi::Unknown(Starved::at("gate_radius:reach", meter));
            }
            if refiner.rounds() < *next_attempt {
                continue;
            }
            let radius = match refiner.region() {
                Region::Ball(b) => b.radius.clone(),
                _ => continue,
            };
            let w = refiner.windows();
            let prec = 12 + 2 * refiner.rounds().min(60);
            let (Some(back_img), Some(fwd_img)) = (
                image_enclosure(path, &w.back_stay_window(), prec),
                image_enclosure(path, &w.fwd_stay_window(), prec),
            ) else {
                continue;
            };
            // Only attempt the range tests once the images are localized at
            // the candidate's own scale.
            if &back_img.err * Rat::from_int(4) > radius
                || &fwd_img.err * Rat::from_int(4) > radius
            {
                continue;
            }
            let budget = 1024u64 * round as u64;
            let mut sub = FuelMeter::new(budget.min(meter.remaining()));
            let back = not_in_range_semitest(&back_img, other, &mut sub);
            let spent = sub.spent();
            let _ = meter.try_spend(spent);
            let Semi::Accepted(back_margin) = back else {
                *next_attempt = refiner.rounds() * 2;
                continue;
            };
            let mut sub = FuelMeter::new(budget.min(meter.remaining()));
            let fwd = not_in_range_semitest(&fwd_img, other, &mut sub);
            let spent = sub.spent();
            let _ = meter.try_spend(spent);
            let Semi::Accepted(fwd_margin) = fwd else {
                *next_attempt = refiner.rounds() * 2;
                continue;
            };
            return Semi::Accepted(GateRadius {
                t: radius,
                back_image: back_img,
                back_margin,
                fwd_image: fwd_img,
                fwd_margin,
                fuel_spent: meter.spent(),
            });
        }
        if meter.exhausted() {
            return Semi::Unknown(Starved::at("gate_radius_search", meter));
        }
    }
    Semi::Unknown(Starved::at("gate_radius_search:depth", meter))
}

/// Builds a range cover only when its sample count fits the remaining
/// budget, charging the meter for the samples. `None` otherwise.
pub(crate) fn budgeted_cover(
    path: &dyn PathOracle,
    a: &Rat,
    b: &Rat,
    k: u32,
    meter: &mut FuelMeter,
) -> Option<crate::path::RangeCover> {
    let step = path.modulus(&Rat::pow2(-(k as i32) - 1));
    if !step.is_positive() {
        return None;
    }
    // Estimated sample count; covers of more samples than fuel are refused
    // before any evaluation happens.
    let est = (b - a) / &step + Rat::from_int(2);
    if est > Rat::from_int(meter.remaining().min(i64::MAX as u64) as i64) {
        return None;
    }
    let cover = range_cover(path, a, b, k).ok()?;
    if !meter.try_spend(cover.balls.len() as u64) {
        return None;
    }
    Some(cover)
}

/// Adaptive certified upper bound on `sup_t |f(t) - center|` over `[lo;hi]`:
/// splits only the cell with the worst bound, so accuracy concentrates where
/// the image approaches the limit. Returns the bound once it drops below
/// `limit`, `None` on budget or depth exhaustion.
pub(crate) fn adaptive_sup_dist(
    path: &dyn PathOracle,
    lo: &Rat,
    hi: &Rat,
    center: &PtEnc,
    limit: &Rat,
    meter: &mut FuelMeter,
) -> Option<Rat> {
    let bits = 36;
    let prec = 48;
    struct Node {
        t0: Rat,
        t1: Rat,
        ub: Rat,
    }
    // A sampled point already at or beyond the limit refutes containment
    // outright.
    enum Probe {
        Node(Node),
        Refuted,
        Out,
    }
    let bound = |t0: &Rat, t1: &Rat, meter: &mut FuelMeter| -> Probe {
        if !meter.try_spend(1) {
            return Probe::Out;
        }
        let mid = Rat::mid(t0, t1);
        let Ok(e) = path.eval(&mid, prec) else {
            return Probe::Out;
        };
        let d2 = e.pt.dist2(&center.pt);
        let point_lb = d2.sqrt_lower(bits) - &e.err - &center.err;
        if &point_lb >= limit {
            return Probe::Refuted;
        }
        let spread = image_spread(path, &(t1 - t0).halve());
        let ub = d2.sqrt_upper(bits) + &e.err + &center.err + &spread;
        Probe::Node(Node {
            t0: t0.clone(),
            t1: t1.clone(),
            ub,
        })
    };
    let mut nodes = match bound(lo, hi, meter) {
        Probe::Node(n) => vec![n],
        _ => return None,
    };
    let floor = Rat::pow2(-800);
    loop {
        let (mut worst, mut worst_ub) = (0usize, nodes[0].ub.clone());
        for (i, n) in nodes.iter().enumerate().skip(1) {
            if n.ub > worst_ub {
                worst = i;
                worst_ub = n.ub.clone();
            }
        }
        if &worst_ub < limit {
            return Some(worst_ub);
        }
        let node = nodes.swap_remove(worst);
        if &node.t1 - &node.t0 < floor {
            return None;
        }
        let mid = Rat::mid(&node.t0, &node.t1);
        match bound(&node.t0, &mid, meter) {
            Probe::Node(n) => nodes.push(n),
            _ => return None,
        }
        match bound(&mid, &node.t1, meter) {
            Probe::Node(n) => nodes.push(n),
            _ => return None,
        }
    }
}

/// Independent re-verification that the image of `[t_lo; t_hi]` is contained
/// in the open ball around `center` (an enclosure) of radius `radius`, via
/// adaptively refined image bounds. This is the checking route; the
/// construction route uses stay-walks.
pub fn certify_image_in_ball(
    path: &dyn PathOracle,
    t_lo: &Rat,
    t_hi: &Rat,
    center: &PtEnc,
    radius: &Rat,
    fuel: u64,
) -> Trivalent {
    let mut meter = FuelMeter::new(fuel);
    match adaptive_sup_dist(path, t_lo, t_hi, center, radius, &mut meter) {
        Some(_) => Trivalent::Yes,
        None => Trivalent::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_reach;
    use crate::path::{diagonal_path, PolylinePath};
    use crate::quad::QuadVal;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn quad_in_window(v: &QuadVal, lo: &Rat, hi: &Rat) -> bool {
        v.cmp_rat(lo) != std::cmp::Ordering::Less && v.cmp_rat(hi) != std::cmp::Ordering::Greater
    }

    #[test]
    fn reach_on_diagonal_brackets_exact_times() {
        let f = diagonal_path();
        let a = r(1, 2);
        let rad = r(1, 4);
        let enc = refine_reach(&f, &a, &rad, 4000);
        assert!(enc.ordering_holds());
        let exact = exact_reach(&f, &a, &rad);
        assert!(quad_in_window(&exact.fwd_stay, &enc.fwd_stay_lo, &enc.fwd_stay_hi));
        assert!(quad_in_window(&exact.fwd_exit, &enc.fwd_exit_lo, &enc.fwd_exit_hi));
        assert!(quad_in_window(&exact.back_stay, &enc.back_stay_lo, &enc.back_stay_hi));
        assert!(quad_in_window(&exact.back_exit, &enc.back_exit_lo, &enc.back_exit_hi));
        // Windows should be reasonably tight by this budget.
        assert!(&enc.fwd_stay_hi - &enc.fwd_stay_lo <= Rat::pow2(-10));
        assert!(&enc.back_stay_hi - &enc.back_stay_lo <= Rat::pow2(-10));
    }

    #[test]
    fn reach_on_horizontal_unit_speed() {
        let f = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(Rat::zero(), r(1, 2))),
            (Rat::one(), Pt2::new(Rat::one(), r(1, 2))),
        ])
        .unwrap();
        let enc = refine_reach(&f, &r(1, 2), &r(1, 8), 4000);
        assert!(enc.fwd_stay_lo <= r(5, 8) && r(5, 8) <= enc.fwd_stay_hi);
        assert!(enc.back_stay_lo <= r(3, 8) && r(3, 8) <= enc.back_stay_hi);
        assert!(&enc.fwd_stay_hi - &enc.fwd_stay_lo <= Rat::pow2(-10));
    }

    #[test]
    fn zero_fuel_gives_trivial_enclosure() {
        let f = diagonal_path();
        let enc = refine_reach(&f, &r(1, 2), &r(1, 4), 0);
        assert!(enc.ordering_holds());
        assert_eq!(enc.back_exit_lo, Rat::zero());
        assert_eq!(enc.fwd_exit_hi, Rat::one());
    }

    #[test]
    fn monotone_in_fuel() {
        let f = diagonal_path();
        let small = refine_reach(&f, &r(1, 2), &r(1, 4), 300);
        let large = refine_reach(&f, &r(1, 2), &r(1, 4), 3000);
        assert!(large.fwd_stay_lo >= small.fwd_stay_lo);
        assert!(large.fwd_stay_hi <= small.fwd_stay_hi);
        assert!(large.back_stay_lo >= small.back_stay_lo);
        assert!(large.back_stay_hi <= small.back_stay_hi);
        assert!(large.fwd_exit_hi <= small.fwd_exit_hi);
        assert!(large.back_exit_lo >= small.back_exit_lo);
    }

    #[test]
    fn windows_certify_when_thin() {
        let f = diagonal_path();
        let w = stay_exit_windows(&f, &r(1, 2), &r(1, 4), &r(1, 16), 20_000);
        assert!(w.certified);
        assert!(&w.back.1 - &w.back.0 < r(1, 16));
        assert!(&w.fwd.1 - &w.fwd.0 < r(1, 16));
        let exact = exact_reach(&diagonal_path(), &r(1, 2), &r(1, 4));
        assert!(quad_in_window(&exact.fwd_stay, &w.fwd.0, &w.fwd.1));
        assert!(quad_in_window(&exact.fwd_exit, &w.fwd.0, &w.fwd.1));

        // Vacuous eps certifies immediately.
        let w = stay_exit_windows(&f, &r(1, 2), &r(1, 4), &Rat::from_int(2), 50);
        assert!(w.certified);

        // A path that pauses on the ball boundary never certifies small eps:
        // the fwd zone has genuine positive length.
        let pause = PolylinePath::new(vec![
            (Rat::zero(), Pt2::new(Rat::zero(), r(1, 2))),
            (r(1, 4), Pt2::new(r(1, 4), r(1, 2))), // on boundary of B(f(0),1/4)... circle through (1/4,1/2)
            (r(3, 4), Pt2::new(r(1, 4), r(17, 32))), // stays at distance >= 1/4? no: move along
            (Rat::one(), Pt2::new(Rat::one(), r(1, 2))),
        ])
        .unwrap();
        // Ball around f(0) = (0,1/2) with radius 1/4: the path reaches the
        // boundary at t=1/4 and wanders near it before leaving: the stay/exit
        // windows cannot both collapse below 2^-40 at tiny fuel.
        let w = stay_exit_windows(&pause, &Rat::zero(), &r(1, 4), &Rat::pow2(-40), 500);
        assert!(!w.certified);
    }

    #[test]
    fn thin_radius_pair_conditions() {
        let f = diagonal_path();
        let a = r(1, 2);
        let (lo, hi) = (r(1, 8), r(1, 4));
        match find_thin_radius_pair(&f, &a, &lo, &hi, &r(1, 8), 60_000) {
            Semi::Accepted(p) => {
                assert!(lo < p.r_inner && p.r_inner < p.r_outer && p.r_outer < hi);
                assert!(&p.back_window.1 - &p.back_window.0 < r(1, 8));
                assert!(&p.fwd_window.1 - &p.fwd_window.0 < r(1, 8));
                // Exact zones of both radii fit in the published windows.
                for rad in [&p.r_inner, &p.r_outer] {
                    let ex = exact_reach(&f, &a, rad);
                    assert!(quad_in_window(&ex.back_exit, &p.back_window.0, &p.back_window.1));
                    assert!(quad_in_window(&ex.back_stay, &p.back_window.0, &p.back_window.1));
                    assert!(quad_in_window(&ex.fwd_stay, &p.fwd_window.0, &p.fwd_window.1));
                    assert!(quad_in_window(&ex.fwd_exit, &p.fwd_window.0, &p.fwd_window.1));
                }
            }
            Semi::Unknown(s) => panic!("starved: {}", s),
        }

        // Vacuous bound succeeds fast; zero fuel starves.
        assert!(find_thin_radius_pair(&f, &a, &lo, &hi, &Rat::from_int(2), 20_000).is_accepted());
        assert!(!find_thin_radius_pair(&f, &a, &lo, &hi, &r(1, 8), 0).is_accepted());
    }

    #[test]
    fn gate_radius_on_diagonal_pair() {
        let f = diagonal_path();
        let g = crate::path::anti_diagonal_path();
        // Around a = 1/4 the diagonal's transition images sit far from the
        // anti-diagonal.
        match gate_radius_search(&f, &g, &r(1, 4), &r(1, 16), &r(1, 8), 200_000) {
            Semi::Accepted(gate) => {
                assert!(gate.t > r(1, 16) && gate.t < r(1, 8));
                assert!(gate.back_margin > gate.back_image.err);
                assert!(gate.fwd_margin > gate.fwd_image.err);
                // Oracle cross-check: true distance of both images to the
                // anti-diagonal is positive.
                let exact = exact_reach(&f, &r(1, 4), &gate.t);
                for v in [&exact.back_stay, &exact.fwd_stay] {
                    let (lo_t, hi_t) = v.rat_bounds(40);
                    let pt_lo = f.eval_exact(&lo_t.max(Rat::zero()));
                    let d2 = crate::oracle::min_distance_sq(&pt_lo, &g);
                    assert!(
                        d2 > Rat::pow2(-30),
                        "transition image suspiciously close to range(g)"
                    );
                    let _ = hi_t;
                }
            }
            Semi::Unknown(s) => panic!("starved: {}", s),
        }

        // a = 1/2 sits ON range(g), but the transition images are still off
        // the anti-diagonal.
        match gate_radius_search(&f, &g, &r(1, 2), &r(1, 16), &r(1, 8), 400_000) {
            Semi::Accepted(gate) => {
                assert!(gate.back_margin.is_positive() && gate.fwd_margin.is_positive());
            }
            Semi::Unknown(s) => panic!("starved at center crossing: {}", s),
        }

        // Zero fuel is an honest unknown.
        assert!(!gate_radius_search(&f, &g, &r(1, 4), &r(1, 16), &r(1, 8), 0).is_accepted());
    }

    #[test]
    fn image_in_ball_checking_route() {
        let f = diagonal_path();
        // f[0.4;0.6] has diameter 0.2*sqrt(2) < 0.3: fits in B(f(1/2), 0.3).
        let center = PtEnc::exact(Pt2::new(r(1, 2), r(1, 2)));
        assert_eq!(
            certify_image_in_ball(&f, &r(2, 5), &r(3, 5), &center, &r(3, 10), 50_000),
            Trivalent::Yes
        );
        // Too tight a ball is not certifiable.
        assert_eq!(
            certify_image_in_ball(&f, &r(2, 5), &r(3, 5), &center, &r(1, 10), 5_000),
            Trivalent::Unknown
        );
    }

    use crate::geom::Pt2;
}
