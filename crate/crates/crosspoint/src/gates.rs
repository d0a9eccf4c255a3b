//! Passages, gates, crossed gates, and the overlapping ball-chain
//! construction that squeezes a crossed gate down to a much smaller one.
//!
//! A *passage* is a region V with a rational time c such that f(c) lies in V.
//! It is a *gate* when the images of both ends of f's maximal stay interval
//! in V provably avoid range(g), and a gate is *crossed* by g via d when the
//! straight chords spanned by the two stay intervals' endpoint images
//! intersect robustly. A crossed gate is squeezed by covering f's transit
//! with a chain of small gate-balls whose consecutive lenses are gates too;
//! the chain works like a fence with posts, so g must cross one of its
//! members, and that member is a crossed gate of less than half the
//! diameter.

use crate::error::DegenerateGate;
use crate::fuel::{FuelMeter, Semi, Starved};
use crate::geom::{
    dist_lb, dist_ub, make_lens, CenteredBall, Lens, MakeLens, PtEnc, Region, Trivalent,
};
use crate::path::{not_in_range_semitest, PathOracle};
use crate::rat::Rat;
use crate::reach::{certify_image_in_ball, image_enclosure, GateRadius, ReachRefiner};

/// Region plus a rational time with certified membership of the image.
#[derive(Clone, Debug)]
pub struct Passage {
    pub v: Region,
    pub c: Rat,
    /// Certified clearance of f(c) inside V (exceeds the evaluation error).
    pub membership_margin: Rat,
}

/// Certifies `f(c)` inside `v` and wraps the passage.
pub fn make_passage(
    f: &dyn PathOracle,
    v: Region,
    c: Rat,
    fuel: &mut FuelMeter,
) -> Semi<Passage> {
    for prec in [12u32, 20, 32, 48] {
        if !fuel.try_spend(1) {
            return Semi::Unknown(Starved::at("make_passage", fuel));
        }
        let Ok(e) = f.eval(&c, prec) else {
            return Semi::Unknown(Starved::at("make_passage:eval", fuel));
        };
        let clearance = v.clearance_lb(&e, prec + 4);
        if clearance > e.err {
            return Semi::Accepted(Passage {
                v,
                c,
                membership_margin: clearance,
            });
        }
    }
    Semi::Unknown(Starved::at("make_passage:margin", fuel))
}

/// Gate certificate: endpoint image enclosures of the maximal stay interval
/// plus certified distance margins to the other path's range. Margins always
/// exceed the corresponding enclosure errors.
#[derive(Clone, Debug)]
pub struct GateCert {
    pub passage: Passage,
    pub left_pt: PtEnc,
    pub right_pt: PtEnc,
    pub left_margin: Rat,
    pub right_margin: Rat,
    /// Window certainly containing f's maximal stay interval in V.
    pub stay_window: (Rat, Rat),
}

/// Crossed-gate certificate: the g-side stay endpoint images and a robust
/// transversality margin for the two chords.
#[derive(Clone, Debug)]
pub struct CrossedGateCert {
    pub gate: GateCert,
    pub d: Rat,
    pub g_left: PtEnc,
    pub g_right: PtEnc,
    /// Certified determinant slack of the four orientation tests: every
    /// choice of true endpoints within the enclosures makes the chords cross.
    pub transversality_margin: Rat,
    /// Window certainly containing g's maximal stay interval in V.
    pub g_stay_window: (Rat, Rat),
}

/// Verifies a passage as a gate: localizes the stay-interval endpoint images
/// and certifies both off range(g).
pub fn verify_gate(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    passage: &Passage,
    fuel: u64,
) -> Semi<GateCert> {
    let mut meter = FuelMeter::new(fuel);
    verify_gate_budgeted(f, g, passage, &mut meter)
}

pub(crate) fn verify_gate_budgeted(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    passage: &Passage,
    meter: &mut FuelMeter,
) -> Semi<GateCert> {
    if matches!(passage.v, Region::UnitSquareInterior) {
        // For interior-normalized paths the maximal stay interval in the
        // open square is all of (0;1): the endpoint images are the corners.
        let prec = 24;
        if !meter.try_spend(2) {
            return Semi::Unknown(Starved::at("verify_gate:eval", meter));
        }
        let (Ok(left), Ok(right)) = (f.eval(&Rat::zero(), prec), f.eval(&Rat::one(), prec))
        else {
            return Semi::Unknown(Starved::at("verify_gate:eval", meter));
        };
        let Semi::Accepted(lm) = not_in_range_semitest(&left, g, meter) else {
            return Semi::Unknown(Starved::at("verify_gate:left", meter));
        };
        let Semi::Accepted(rm) = not_in_range_semitest(&right, g, meter) else {
            return Semi::Unknown(Starved::at("verify_gate:right", meter));
        };
        return Semi::Accepted(GateCert {
            passage: passage.clone(),
            left_pt: left,
            right_pt: right,
            left_margin: lm,
            right_margin: rm,
            stay_window: (Rat::zero(), Rat::one()),
        });
    }

    let mut refiner = ReachRefiner::new(f, passage.v.clone(), passage.c.clone());
    loop {
        if !refiner.step_round(meter) {
            return Semi::Unknown(Starved::at("verify_gate:reach", meter));
        }
        if refiner.rounds() < 3 {
            continue;
        }
        let w = refiner.windows();
        let prec = 10 + 2 * refiner.rounds().min(60);
        let (Some(left), Some(right)) = (
            image_enclosure(f, &w.back_stay_window(), prec),
            image_enclosure(f, &w.fwd_stay_window(), prec),
        ) else {
            continue;
        };
        let lm = match not_in_range_semitest(&left, g, meter) {
            Semi::Accepted(m) => m,
            Semi::Unknown(_) => {
                if meter.exhausted() {
                    return Semi::Unknown(Starved::at("verify_gate:left", meter));
                }
                continue;
            }
        };
        let rm = match not_in_range_semitest(&right, g, meter) {
            Semi::Accepted(m) => m,
            Semi::Unknown(_) => {
                if meter.exhausted() {
                    return Semi::Unknown(Starved::at("verify_gate:right", meter));
                }
                continue;
            }
        };
        return Semi::Accepted(GateCert {
            passage: passage.clone(),
            left_pt: left,
            right_pt: right,
            left_margin: lm,
            right_margin: rm,
            stay_window: (w.back_stay_lo.clone(), w.fwd_stay_hi.clone()),
        });
    }
}

/// Certified robust intersection of the chords `[a1;a2]` and `[b1;b2]` where
/// every endpoint is an enclosure: `Some(margin)` only when the chords cross
/// transversally for every choice of true endpoints.
pub fn robust_chords_cross(
    a1: &PtEnc,
    a2: &PtEnc,
    b1: &PtEnc,
    b2: &PtEnc,
    bits: u32,
) -> Option<Rat> {
    let tests: [(&PtEnc, &PtEnc, &PtEnc); 4] = [
        (b1, b2, a1),
        (b1, b2, a2),
        (a1, a2, b1),
        (a1, a2, b2),
    ];
    let mut signs = [0i32; 4];
    let mut slack: Option<Rat> = None;
    for (i, (p, q, x)) in tests.iter().enumerate() {
        let det = q.pt.sub(&p.pt).cross(&x.pt.sub(&p.pt));
        // Perturbation bound: moving each point within its error changes the
        // determinant by at most |q-p| (e_x+e_p) + |x-p| (e_q+e_p)
        // + (e_q+e_p)(e_x+e_p).
        let eqp = &q.err + &p.err;
        let exp = &x.err + &p.err;
        let qp = q.pt.dist2(&p.pt).sqrt_upper(bits);
        let xp = x.pt.dist2(&p.pt).sqrt_upper(bits);
        let bound = &qp * &exp + &xp * &eqp + &eqp * &exp;
        let margin = det.abs() - &bound;
        if !margin.is_positive() || det.is_zero() {
            return None;
        }
        signs[i] = det.signum();
        slack = Some(match slack {
            None => margin,
            Some(m) => m.min(margin),
        });
    }
    if signs[0] * signs[1] < 0 && signs[2] * signs[3] < 0 {
        slack
    } else {
        None
    }
}

/// Verifies that `g` crosses the gate via `d`: certifies g(d) in V, encloses
/// g's stay endpoint images, and checks robust chord transversality.
pub fn verify_crossed(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    gate: &GateCert,
    d: &Rat,
    fuel: u64,
) -> Semi<CrossedGateCert> {
    let mut meter = FuelMeter::new(fuel);
    verify_crossed_budgeted(f, g, gate, d, &mut meter)
}

pub(crate) fn verify_crossed_budgeted(
    _f: &dyn PathOracle,
    g: &dyn PathOracle,
    gate: &GateCert,
    d: &Rat,
    meter: &mut FuelMeter,
) -> Semi<CrossedGateCert> {
    // Membership of g(d) in V first.
    let mut member = false;
    for prec in [12u32, 20, 32, 48] {
        if !meter.try_spend(1) {
            return Semi::Unknown(Starved::at("verify_crossed:member", meter));
        }
        if let Ok(e) = g.eval(d, prec) {
            if gate.passage.v.clearance_lb(&e, prec + 4).is_positive() {
                member = true;
                break;
            }
        }
    }
    if !member {
        return Semi::Unknown(Starved::at("verify_crossed:membership", meter));
    }

    if matches!(gate.passage.v, Region::UnitSquareInterior) {
        // Interior-normalized paths stay in the open square on (0;1).
        let prec = 24;
        if !meter.try_spend(2) {
            return Semi::Unknown(Starved::at("verify_crossed:eval", meter));
        }
        let (Ok(left), Ok(right)) = (g.eval(&Rat::zero(), prec), g.eval(&Rat::one(), prec))
        else {
            return Semi::Unknown(Starved::at("verify_crossed:eval", meter));
        };
        let Some(margin) =
            robust_chords_cross(&gate.left_pt, &gate.right_pt, &left, &right, 32)
        else {
            return Semi::Unknown(Starved::at("verify_crossed:transversality", meter));
        };
        return Semi::Accepted(CrossedGateCert {
            gate: gate.clone(),
            d: d.clone(),
            g_left: left,
            g_right: right,
            transversality_margin: margin,
            g_stay_window: (Rat::zero(), Rat::one()),
        });
    }

    let mut refiner = ReachRefiner::new(g, gate.passage.v.clone(), d.clone());
    loop {
        if !refiner.step_round(meter) {
            return Semi::Unknown(Starved::at("verify_crossed:reach", meter));
        }
        if refiner.rounds() < 3 {
            continue;
        }
        let w = refiner.windows();
        let prec = 10 + 2 * refiner.rounds().min(60);
        let (Some(left), Some(right)) = (
            image_enclosure(g, &w.back_stay_window(), prec),
            image_enclosure(g, &w.fwd_stay_window(), prec),
        ) else {
            continue;
        };
        if let Some(margin) =
            robust_chords_cross(&gate.left_pt, &gate.right_pt, &left, &right, 32)
        {
            return Semi::Accepted(CrossedGateCert {
                gate: gate.clone(),
                d: d.clone(),
                g_left: left,
                g_right: right,
                transversality_margin: margin,
                g_stay_window: (w.back_stay_lo.clone(), w.fwd_stay_hi.clone()),
            });
        }
        if meter.exhausted() {
            return Semi::Unknown(Starved::at("verify_crossed:transversality", meter));
        }
    }
}

/// One link of the ball chain.
#[derive(Clone, Debug)]
pub struct ChainLink {
    /// Anchor time of this link's ball.
    pub a: Rat,
    /// Certified stay time just before the previous radius is exhausted.
    pub b: Rat,
    /// Radius certified to contain f[a; b] around f(a).
    pub stay_radius: Rat,
    /// Gate radius selected for this link (stay_radius < gate_radius).
    pub gate_radius: Rat,
    pub ball: CenteredBall,
    /// Gate evidence for (ball, a): transition images and range margins.
    pub gate: GateRadius,
}

/// The inductive ball-chain construction across a crossed gate: entry and
/// exit guard balls around the stay endpoint images, overlapping gate-balls
/// marching across, and the scale data the invariant checks need.
#[derive(Clone, Debug)]
pub struct BallChain {
    /// Inner scale: every link ball has radius below `s` and triple-scale
    /// clearance inside the gate region.
    pub s: Rat,
    /// Separation radius around the two endpoint images.
    pub sep_radius: Rat,
    pub a_left: Rat,
    pub a_right: Rat,
    /// Anchor time that ended the construction (at or beyond `a_right`).
    pub a_end: Rat,
    pub entry_ball: CenteredBall,
    pub exit_ball: CenteredBall,
    pub links: Vec<ChainLink>,
    /// The region the chain lives in.
    pub region: Region,
}

impl BallChain {
    /// Per-link drift allowance: `2^-(i+1) * s` for link index i (1-based).
    pub fn eps(&self, i: usize) -> Rat {
        &self.s * Rat::pow2(-(i as i32) - 1)
    }

    /// The lens between consecutive link balls (1-based index, up to
    /// `links.len() - 1`).
    pub fn lens(&self, i: usize) -> Option<Lens> {
        let b1 = &self.links[i - 1].ball;
        let b2 = &self.links[i].ball;
        match make_lens(b1, b2) {
            MakeLens::Lens(l) => Some(l),
            _ => None,
        }
    }
}

/// Outcome of the chain construction.
#[derive(Debug)]
pub enum ChainOutcome {
    Built(Box<BallChain>),
    /// The two stay endpoint images provably collapse: no separation radius
    /// can exist. Surfaced as a distinguished error.
    Degenerate(DegenerateGate),
    Starved(Starved),
}

/// Builds the full chain across a crossed gate. Fuel starvation reports the
/// stage that starved. `scale_cap` additionally caps the inner scale (used
/// by the sub-crossing search to enforce diameter contraction).
pub fn build_ball_chain(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    scale_cap: Option<&Rat>,
    fuel: u64,
) -> ChainOutcome {
    let mut meter = FuelMeter::new(fuel);
    build_ball_chain_budgeted(f, g, crossed, scale_cap, &mut meter)
}

pub(crate) fn build_ball_chain_budgeted(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    scale_cap: Option<&Rat>,
    meter: &mut FuelMeter,
) -> ChainOutcome {
    let gate = &crossed.gate;
    let region = &gate.passage.v;
    let bits = 36;

    // Separation radius: half the certified net margins, a fifth of the
    // endpoint distance, dyadically rounded down.
    let net_left = &gate.left_margin - &gate.left_pt.err;
    let net_right = &gate.right_margin - &gate.right_pt.err;
    let sep_lb = dist_lb(&gate.left_pt, &gate.right_pt, bits);
    if !sep_lb.is_positive() {
        // Can the endpoints be told apart at all?
        let sep_ub = dist_ub(&gate.left_pt, &gate.right_pt, bits);
        let tiny = (&gate.left_pt.err + &gate.right_pt.err) * Rat::from_int(4);
        if sep_ub <= tiny {
            return ChainOutcome::Degenerate(DegenerateGate {
                scale: sep_ub.to_string(),
            });
        }
        return ChainOutcome::Starved(Starved::at("chain:sep_radius", meter));
    }
    let sep_radius = net_left
        .min(net_right)
        .halve()
        .min(&sep_lb / &Rat::from_int(5))
        .floor_dyadic(24);
    if !sep_radius.is_positive() {
        return ChainOutcome::Starved(Starved::at("chain:sep_radius", meter));
    }

    // Anchor times a_left, a_right: first a minimal pair whose image
    // drifts stay within 3/8 of the separation radius, then each is pushed
    // inward as far as certified containment allows (shorter chains, larger
    // inner scale). Together with the scale cap below, guard-ball points
    // keep triple-scale containment: 3/8 + 3/5 < 1.
    let rho = &sep_radius * Rat::new(3, 8);
    let mut refiner = ReachRefiner::new(f, region.clone(), gate.passage.c.clone());
    let (a_left, a_right, stay_lo, stay_hi) = loop {
        if !refiner.step_round(meter) {
            return ChainOutcome::Starved(Starved::at("chain:anchors", meter));
        }
        let w = refiner.windows();
        let back_w = &w.back_stay_hi - &w.back_stay_lo;
        let fwd_w = &w.fwd_stay_hi - &w.fwd_stay_lo;
        let budget = f.modulus(&rho);
        if back_w < budget && fwd_w < budget {
            let h_back = (&budget - &back_w).halve().floor_dyadic(40);
            let h_fwd = (&budget - &fwd_w).halve().floor_dyadic(40);
            let al = &w.back_stay_hi + &h_back;
            let ar = &w.fwd_stay_lo - &h_fwd;
            if al < ar {
                break (al, ar, w.back_exit_lo.clone(), w.fwd_exit_hi.clone());
            }
        }
    };
    let mid = Rat::mid(&a_left, &a_right);
    let a_left = extend_anchor(
        f,
        &stay_lo,
        a_left,
        &mid,
        &gate.left_pt,
        &rho,
        true,
        meter,
    );
    let a_right = extend_anchor(
        f,
        &stay_hi,
        a_right,
        &mid,
        &gate.right_pt,
        &rho,
        false,
        meter,
    );

    // Inner scale s: at most sep_radius/8 so the entry/exit triple-scale
    // conditions hold outright, and small enough that every transit point
    // keeps triple-scale clearance inside the region.
    let clearance = match transit_clearance(f, &a_left, &a_right, region, meter) {
        Some(c) => c,
        None => return ChainOutcome::Starved(Starved::at("chain:inner_scale", meter)),
    };
    eprintln!("[chain dbg] a_l={:.5} a_r={:.5} sep={:.5} clearance={:.5} spent={}",
        a_left.to_f64_dbg(), a_right.to_f64_dbg(), sep_radius.to_f64_dbg(), clearance.to_f64_dbg(), meter.spent());
    let mut s = (&sep_radius / &Rat::from_int(5))
        .min(&clearance / &Rat::from_int(4))
        .floor_dyadic(24);
    if let Some(cap) = scale_cap {
        s = s.min(cap.clone());
    }
    if !s.is_positive() {
        return ChainOutcome::Starved(Starved::at("chain:inner_scale", meter));
    }

    // The inductive march. Termination bound: each step advances the anchor
    // by at least modulus(s/2).
    let min_step = f.modulus(&s.halve());
    let span = &a_right - &a_left;
    let max_links: u64 = {
        let ratio = &span / &min_step;
        if ratio > Rat::from_int(100_000) {
            return ChainOutcome::Starved(Starved::at("chain:too_many_links", meter));
        }
        let mut n = 2u64;
        let mut acc = Rat::zero();
        while acc < span {
            acc = acc + &min_step;
            n += 1;
        }
        n
    };

    let mut links: Vec<ChainLink> = Vec::new();
    let mut prev_radius = s.clone();
    let mut anchor = a_left.clone();
    let a_end = loop {
        if anchor >= a_right {
            break anchor;
        }
        if links.len() as u64 > max_links {
            return ChainOutcome::Starved(Starved::at("chain:too_many_links", meter));
        }
        let i = links.len() + 1;
        let eps_i = &s * Rat::pow2(-(i as i32) - 1);

        let Ok(center) = f.eval(&anchor, 48) else {
            return ChainOutcome::Starved(Starved::at("chain:eval", meter));
        };
        if center.err >= prev_radius {
            return ChainOutcome::Starved(Starved::at("chain:center_err", meter));
        }
        let link_region = Region::Ball(
            CenteredBall::with_err(center.pt.clone(), prev_radius.clone(), center.err.clone())
                .at_time(anchor.clone()),
        );

        // Refine the forward stay window of the previous-radius ball until
        // it is thinner than the drift budget, then pick the handover time,
        // backed off below the window so the stay radius keeps a
        // certifiable margin under the previous radius.
        let mut link_refiner = ReachRefiner::new(f, link_region, anchor.clone());
        let back_off = f.modulus(&(&eps_i / &Rat::from_int(4))).halve();
        let b_budget = back_off.halve();
        let b_i = loop {
            if !link_refiner.step_round(meter) {
                return ChainOutcome::Starved(Starved::at("chain:b_window", meter));
            }
            let w = link_refiner.windows();
            let width = &w.fwd_stay_hi - &w.fwd_stay_lo;
            if width < b_budget && &w.fwd_stay_lo - &back_off > anchor {
                break &w.fwd_stay_lo - &back_off;
            }
        };

        eprintln!("[chain dbg] link {} anchor={:.5} b_i={:.5} prev_r={:.6} spent={}",
            i, anchor.to_f64_dbg(), b_i.to_f64_dbg(), prev_radius.to_f64_dbg(), meter.spent());
        let dbg_b = meter.spent();
        let dbg_tb = std::time::Instant::now();
        // Certified stay radius over [a_i; b_i] via the cover route.
        let stay_radius = match certified_stay_radius(
            f,
            &anchor,
            &b_i,
            &center,
            &prev_radius,
            meter,
        ) {
            Some(rad) => rad,
            None => return ChainOutcome::Starved(Starved::at("chain:stay_radius", meter)),
        };

        let dbg_sr = meter.spent();
        let dbg_tsr = std::time::Instant::now();
        // Next anchor: tighten the same window further.
        let a_budget = f
            .modulus(&(&prev_radius - &stay_radius).halve())
            .min(f.modulus(&eps_i))
            .halve();
        let next_anchor = loop {
            let w = link_refiner.windows();
            let width = &w.fwd_stay_hi - &w.fwd_stay_lo;
            if width < a_budget && w.fwd_stay_lo >= b_i {
                break w.fwd_stay_lo;
            }
            if !link_refiner.step_round(meter) {
                return ChainOutcome::Starved(Starved::at("chain:next_anchor", meter));
            }
        };

        let dbg_na = meter.spent();
        let dbg_tna = std::time::Instant::now();
        // Gate radius strictly between the stay radius and the midpoint
        // toward the previous radius, seeded with the link ball's certified
        // exit bounds.
        let hi = Rat::mid(&stay_radius, &prev_radius);
        let lw = link_refiner.windows();
        let seeds = Some((lw.fwd_exit_hi.clone(), lw.back_exit_lo.clone()));
        let gate_r = match crate::reach::gate_radius_search_seeded(
            f, g, &anchor, &stay_radius, &hi, seeds, meter,
        ) {
            Semi::Accepted(gr) => gr,
            Semi::Unknown(_) => {
                return ChainOutcome::Starved(Starved::at("chain:gate_radius", meter));
            }
        };

        if i <= 6 || (40..=48).contains(&i) {
            eprintln!("[stage dbg] link {}: stay_rad={}u/{:?} next_anchor={}u/{:?} gate={}u/{:?}",
                i, dbg_sr - dbg_b, dbg_tsr - dbg_tb, dbg_na - dbg_sr, dbg_tna - dbg_tsr,
                meter.spent() - dbg_na, dbg_tna.elapsed());
        }
        let ball = CenteredBall::with_err(
            center.pt.clone(),
            gate_r.t.clone(),
            center.err.clone(),
        )
        .at_time(anchor.clone());
        links.push(ChainLink {
            a: anchor.clone(),
            b: b_i.clone(),
            stay_radius,
            gate_radius: gate_r.t.clone(),
            ball,
            gate: gate_r,
        });
        prev_radius = links.last().expect("just pushed").gate_radius.clone();
        anchor = next_anchor;
    };

    if links.is_empty() {
        return ChainOutcome::Starved(Starved::at("chain:empty", meter));
    }

    let entry_ball = CenteredBall::with_err(
        gate.left_pt.pt.clone(),
        sep_radius.clone(),
        gate.left_pt.err.clone(),
    );
    let exit_ball = CenteredBall::with_err(
        gate.right_pt.pt.clone(),
        sep_radius.clone(),
        gate.right_pt.err.clone(),
    );

    ChainOutcome::Built(Box::new(BallChain {
        s,
        sep_radius,
        a_left,
        a_right,
        a_end,
        entry_ball,
        exit_ball,
        links,
        region: region.clone(),
    }))
}

/// Pushes an anchor inward while the image between the stay boundary and
/// the candidate stays certifiably within `rho` of the endpoint image.
/// Doubling/halving candidate steps; any certified anchor is valid, so this
/// is purely an optimization for chain length.
#[allow(clippy::too_many_arguments)]
fn extend_anchor(
    f: &dyn PathOracle,
    boundary: &Rat,
    start: Rat,
    toward: &Rat,
    endpoint_image: &crate::geom::PtEnc,
    rho: &Rat,
    forward: bool,
    meter: &mut FuelMeter,
) -> Rat {
    let mut anchor = start;
    let mut step = (toward - &anchor).abs().halve();
    for _ in 0..12 {
        if !step.is_positive() {
            break;
        }
        let cand = if forward {
            &anchor + &step
        } else {
            &anchor - &step
        };
        let past_mid = if forward { &cand >= toward } else { &cand <= toward };
        if past_mid {
            step = step.halve();
            continue;
        }
        let (lo, hi) = if forward {
            (boundary.clone(), cand.clone())
        } else {
            (cand.clone(), boundary.clone())
        };
        let budget = (meter.remaining() / 16).max(256);
        let mut sub = FuelMeter::new(budget.min(meter.remaining()));
        let ok = crate::reach::adaptive_sup_dist(f, &lo, &hi, endpoint_image, rho, &mut sub)
            .is_some();
        let spent = sub.spent();
        let _ = meter.try_spend(spent);
        if ok {
            anchor = cand;
            step = &step * Rat::from_int(2);
        } else {
            step = step.halve();
        }
    }
    anchor
}

/// Certified lower bound on the clearance of `f[lo; hi]` inside the region.
fn transit_clearance(
    f: &dyn PathOracle,
    lo: &Rat,
    hi: &Rat,
    region: &Region,
    meter: &mut FuelMeter,
) -> Option<Rat> {
    let mut best: Option<Rat> = None;
    for k in 3u32..24 {
        let cover = crate::reach::budgeted_cover(f, lo, hi, k, meter)?;
        let mut worst: Option<Rat> = None;
        for (ball, cell_r) in cover.balls.iter().zip(&cover.cell_radius) {
            let c = region.clearance_lb(
                &PtEnc::new(ball.center.clone(), ball.center_err.clone()),
                36,
            ) - cell_r;
            worst = Some(match worst {
                None => c,
                Some(w) => w.min(c),
            });
        }
        let worst = worst?;
        if worst.is_positive() {
            match &best {
                // One more refinement makes the bound near-sharp; further
                // rounds stop paying for themselves.
                Some(b) if &worst <= &(b * Rat::new(5, 4)) => return Some(worst.max(b.clone())),
                _ => best = Some(worst),
            }
        } else if best.is_some() {
            return best;
        }
    }
    best
}

/// Certifiable radius with `f[lo; hi]` inside `B(center, radius)`, strictly
/// below `limit`, found by adaptive image bounds.
fn certified_stay_radius(
    f: &dyn PathOracle,
    lo: &Rat,
    hi: &Rat,
    center: &PtEnc,
    limit: &Rat,
    meter: &mut FuelMeter,
) -> Option<Rat> {
    crate::reach::adaptive_sup_dist(f, lo, hi, center, limit, meter)
}

/// Per-clause verification report for a chain.
#[derive(Clone, Debug)]
pub struct ChainReport {
    pub clauses: Vec<(String, Trivalent)>,
}

impl ChainReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|(_, t)| *t == Trivalent::Yes)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.clauses
            .iter()
            .filter(|(_, t)| *t != Trivalent::Yes)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// Re-verifies every chain invariant with exact arithmetic on enclosures,
/// through the independent cover route (never the construction's walks):
/// radii strictly decrease; stay radii stay above the drained scale;
/// per-link containments; inter-anchor distance bounds; minimum anchor
/// progress; nesting into the guard balls and the region; and the shared
/// membership of each handover time in the consecutive-ball lens.
pub fn check_chain_invariants(chain: &BallChain, f: &dyn PathOracle, fuel: u64) -> ChainReport {
    let mut meter = FuelMeter::new(fuel);
    let mut clauses: Vec<(String, Trivalent)> = Vec::new();
    let bits = 36;
    let n = chain.links.len();
    let share = fuel / (6 * n as u64 + 2).max(1);

    let eval48 = |t: &Rat, meter: &mut FuelMeter| -> Option<PtEnc> {
        if !meter.try_spend(1) {
            return None;
        }
        f.eval(t, 48).ok()
    };

    // Radius monotonicity (the inner scale plays radius number zero).
    {
        let mut ok = Trivalent::Yes;
        let mut prev = chain.s.clone();
        for link in &chain.links {
            if link.gate_radius >= prev {
                ok = Trivalent::No;
            }
            prev = link.gate_radius.clone();
        }
        clauses.push(("radii_strictly_decrease".into(), ok));
    }

    // Drain bound: s minus the summed drift allowances stays below every
    // stay radius.
    {
        let mut ok = Trivalent::Yes;
        let mut drained = chain.s.clone();
        for (i, link) in chain.links.iter().enumerate() {
            drained = drained - chain.eps(i + 1);
            if drained >= link.stay_radius {
                ok = Trivalent::No;
            }
        }
        clauses.push(("stay_radius_above_drain".into(), ok));
    }

    // f[a_i; b_i] inside the link's gate ball.
    for (i, link) in chain.links.iter().enumerate() {
        let t = match eval48(&link.a, &mut meter) {
            Some(e) => e,
            None => {
                clauses.push((format!("stay_in_gate_ball_{}", i + 1), Trivalent::Unknown));
                continue;
            }
        };
        let ok = certify_image_in_ball(f, &link.a, &link.b, &t, &link.gate_radius, share);
        clauses.push((format!("stay_in_gate_ball_{}", i + 1), ok));
    }

    // f[b_i; a_{i+1}] inside the half-scale ball around the next anchor.
    for i in 0..n {
        let next_a = if i + 1 < n {
            chain.links[i + 1].a.clone()
        } else {
            chain.a_end.clone()
        };
        let link = &chain.links[i];
        let t = match eval48(&next_a, &mut meter) {
            Some(e) => e,
            None => {
                clauses.push((format!("handover_in_next_ball_{}", i + 1), Trivalent::Unknown));
                continue;
            }
        };
        let ok = certify_image_in_ball(f, &link.b, &next_a, &t, &chain.s.halve(), share);
        clauses.push((format!("handover_in_next_ball_{}", i + 1), ok));
    }

    // gate_radius_i < |f(a_i) - f(a_{i+1})| < 3s/2.
    for i in 0..n {
        let next_a = if i + 1 < n {
            chain.links[i + 1].a.clone()
        } else {
            chain.a_end.clone()
        };
        let link = &chain.links[i];
        let (Some(pa), Some(pb)) = (eval48(&link.a, &mut meter), eval48(&next_a, &mut meter))
        else {
            clauses.push((format!("anchor_distance_{}", i + 1), Trivalent::Unknown));
            continue;
        };
        let lo = dist_lb(&pa, &pb, bits);
        let hi = dist_ub(&pa, &pb, bits);
        let three_halves_s = &chain.s * Rat::new(3, 2);
        let ok = if lo > link.gate_radius && hi < three_halves_s {
            Trivalent::Yes
        } else if hi <= link.gate_radius || lo >= three_halves_s {
            Trivalent::No
        } else {
            Trivalent::Unknown
        };
        clauses.push((format!("anchor_distance_{}", i + 1), ok));
    }

    // a_{i+1} >= a_i + modulus(s/2).
    {
        let min_step = f.modulus(&chain.s.halve());
        let mut ok = Trivalent::Yes;
        for i in 0..n {
            let next_a = if i + 1 < n {
                &chain.links[i + 1].a
            } else {
                &chain.a_end
            };
            if next_a < &(&chain.links[i].a + &min_step) {
                ok = Trivalent::No;
            }
        }
        clauses.push(("anchor_progress".into(), ok));
    }

    // Nesting: first ball inside the entry guard, last inside the exit guard.
    {
        let check = |inner: &CenteredBall, outer: &CenteredBall| -> Trivalent {
            let d = dist_ub(&inner.center_enc(), &outer.center_enc(), bits);
            if d + &inner.radius < outer.radius {
                Trivalent::Yes
            } else {
                Trivalent::Unknown
            }
        };
        clauses.push((
            "first_ball_in_entry_guard".into(),
            check(&chain.links[0].ball, &chain.entry_ball),
        ));
        clauses.push((
            "last_ball_in_exit_guard".into(),
            check(&chain.links[n - 1].ball, &chain.exit_ball),
        ));
    }

    // closure(ball_i) inside the scale ball inside the triple-scale ball
    // inside the region.
    for (i, link) in chain.links.iter().enumerate() {
        let ok = if link.gate_radius < chain.s {
            let c = link.ball.center_enc();
            let triple = Rat::from_int(3) * &chain.s;
            chain.region.contains_closed_ball(&c, &triple, bits)
        } else {
            Trivalent::No
        };
        clauses.push((format!("triple_scale_nesting_{}", i + 1), ok));
    }

    // Handover memberships: f(a_i) off the next ball, f(a_{i+1}) off the
    // current ball, f(b_i) inside both (the lens).
    for i in 0..n.saturating_sub(1) {
        let cur = &chain.links[i];
        let next = &chain.links[i + 1];
        let name = format!("handover_membership_{}", i + 1);
        let (Some(fa), Some(fa_next), Some(fb)) = (
            eval48(&cur.a, &mut meter),
            eval48(&next.a, &mut meter),
            eval48(&cur.b, &mut meter),
        ) else {
            clauses.push((name, Trivalent::Unknown));
            continue;
        };
        let a_off_next = dist_lb(&fa, &next.ball.center_enc(), bits) >= next.ball.radius;
        let next_off_cur = dist_lb(&fa_next, &cur.ball.center_enc(), bits) >= cur.ball.radius;
        let b_in_both = cur.ball.contains_enc(&fb, bits) == Trivalent::Yes
            && next.ball.contains_enc(&fb, bits) == Trivalent::Yes;
        let ok = if a_off_next && next_off_cur && b_in_both {
            Trivalent::Yes
        } else {
            Trivalent::Unknown
        };
        clauses.push((name, ok));
    }

    // Consecutive balls form strict lenses.
    for i in 1..n {
        let ok = match chain.lens(i) {
            Some(_) => Trivalent::Yes,
            None => Trivalent::No,
        };
        clauses.push((format!("consecutive_lens_{}", i), ok));
    }

    ChainReport { clauses }
}

/// A found sub-crossing: the certificate plus the chain that produced it.
#[derive(Debug)]
pub struct SubCrossing {
    pub cert: CrossedGateCert,
    pub chain: BallChain,
    /// Which chain member carries the crossing.
    pub member: ChainMember,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainMember {
    Ball(usize),
    Lens(usize),
}

#[derive(Debug)]
pub enum SubCrossingOutcome {
    Found(Box<SubCrossing>),
    Degenerate(DegenerateGate),
    Starved(Starved),
}

/// Finds a crossed sub-gate of less than half the diameter, with closure
/// inside the current region: builds the chain at a capped scale, then
/// dovetails crossing verification over the chain's ball and lens gates and
/// dyadic candidate times within g's stay window. The fence property
/// guarantees one member is crossed, so exhaustion is fuel-only.
pub fn find_sub_crossing(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    fuel: u64,
) -> SubCrossingOutcome {
    let mut meter = FuelMeter::new(fuel);
    find_sub_crossing_budgeted(f, g, crossed, &mut meter)
}

pub(crate) fn find_sub_crossing_budgeted(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    crossed: &CrossedGateCert,
    meter: &mut FuelMeter,
) -> SubCrossingOutcome {
    let region = &crossed.gate.passage.v;
    let bits = 36;

    // Scale cap enforcing diameter(V') < diameter(V)/2 for ball members
    // (diameter 2r <= 2s) and lens members (inside both balls).
    let diam_lb = region.diameter_lb(bits);
    let cap = (&diam_lb / &Rat::from_int(8)).floor_dyadic(24);
    if !cap.is_positive() {
        return SubCrossingOutcome::Starved(Starved::at("sub_crossing:diameter", meter));
    }

    let chain = match build_ball_chain_budgeted(f, g, crossed, Some(&cap), meter) {
        ChainOutcome::Built(c) => c,
        ChainOutcome::Degenerate(d) => return SubCrossingOutcome::Degenerate(d),
        ChainOutcome::Starved(s) => return SubCrossingOutcome::Starved(s),
    };

    // Candidate gates along the chain: ball 1, lens 1, ball 2, lens 2, ...
    let mut gates: Vec<(ChainMember, GateCert)> = Vec::new();
    let n = chain.links.len();
    for i in 0..n {
        let link = &chain.links[i];
        gates.push((
            ChainMember::Ball(i + 1),
            GateCert {
                passage: Passage {
                    v: Region::Ball(link.ball.clone()),
                    c: link.a.clone(),
                    membership_margin: &link.gate_radius - &link.ball.center_err,
                },
                left_pt: link.gate.back_image.clone(),
                right_pt: link.gate.fwd_image.clone(),
                left_margin: link.gate.back_margin.clone(),
                right_margin: link.gate.fwd_margin.clone(),
                stay_window: (link.a.clone(), link.b.clone()),
            },
        ));
        if i + 1 < n {
            if let Some(lens) = chain.lens(i + 1) {
                // Staged lens gate: its endpoint data is certified afresh
                // inside the verification path below.
                gates.push((
                    ChainMember::Lens(i + 1),
                    GateCert {
                        passage: Passage {
                            v: Region::Lens(lens),
                            c: link.b.clone(),
                            membership_margin: Rat::zero(),
                        },
                        left_pt: link.gate.fwd_image.clone(),
                        right_pt: chain.links[i + 1].gate.back_image.clone(),
                        left_margin: link.gate.fwd_margin.clone(),
                        right_margin: chain.links[i + 1].gate.back_margin.clone(),
                        stay_window: (link.a.clone(), chain.links[i + 1].b.clone()),
                    },
                ));
            }
        }
    }

    // Candidate times for g: dyadic points of g's stay window in V.
    let (g_lo, g_hi) = &crossed.g_stay_window;
    let g_span = g_hi - g_lo;
    let candidate_d = |index: usize| -> Rat {
        let mut level = 1u32;
        let mut count = 1usize;
        let mut idx = index;
        while idx >= count {
            idx -= count;
            level += 1;
            count *= 2;
        }
        let odd = 2 * idx as i64 + 1;
        g_lo + &(&g_span * &(Rat::new(odd, 1) * Rat::pow2(-(level as i32))))
    };

    for round in 1u32..=28 {
        let d_count = (round as usize).min(31);
        for (member, gate) in &gates {
            for di in 0..d_count {
                let d = candidate_d(di);
                let quantum = 512u64 * round as u64;
                let mut sub = FuelMeter::new(quantum.min(meter.remaining()));
                let attempt = if matches!(member, ChainMember::Lens(_)) {
                    verify_lens_sub_gate(f, g, gate, &d, &mut sub)
                } else {
                    verify_crossed_budgeted(f, g, gate, &d, &mut sub)
                };
                let spent = sub.spent();
                if !meter.try_spend(spent) {
                    return SubCrossingOutcome::Starved(Starved::at(
                        "sub_crossing:search",
                        &meter,
                    ));
                }
                if let Semi::Accepted(cert) = attempt {
                    return SubCrossingOutcome::Found(Box::new(SubCrossing {
                        cert,
                        chain: *chain,
                        member: *member,
                    }));
                }
                if meter.exhausted() {
                    return SubCrossingOutcome::Starved(Starved::at(
                        "sub_crossing:search",
                        &meter,
                    ));
                }
            }
        }
    }
    SubCrossingOutcome::Starved(Starved::at("sub_crossing:depth", meter))
}

/// Crossing verification for a staged lens gate: first re-certifies the
/// passage and the gate's endpoint margins against the lens stay interval
/// (they were inherited from the neighboring ball gates), then the usual
/// crossing check.
fn verify_lens_sub_gate(
    f: &dyn PathOracle,
    g: &dyn PathOracle,
    staged: &GateCert,
    d: &Rat,
    meter: &mut FuelMeter,
) -> Semi<CrossedGateCert> {
    let passage = match make_passage(f, staged.passage.v.clone(), staged.passage.c.clone(), meter)
    {
        Semi::Accepted(p) => p,
        Semi::Unknown(s) => return Semi::Unknown(s),
    };
    let gate = match verify_gate_budgeted(f, g, &passage, meter) {
        Semi::Accepted(gc) => gc,
        Semi::Unknown(s) => return Semi::Unknown(s),
    };
    verify_crossed_budgeted(f, g, &gate, d, meter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::region_closure_inside;
    use crate::path::{anti_diagonal_path, diagonal_path, normalize_endpoints, NormalizedPath};
    use std::sync::Arc;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    fn normalized_diagonals() -> (NormalizedPath, NormalizedPath) {
        normalize_endpoints(Arc::new(diagonal_path()), Arc::new(anti_diagonal_path()))
            .expect("corner conditions hold")
    }

    fn unit_square_gate(f: &dyn PathOracle, g: &dyn PathOracle) -> GateCert {
        let mut meter = FuelMeter::new(100_000);
        let passage = match make_passage(f, Region::UnitSquareInterior, r(1, 2), &mut meter) {
            Semi::Accepted(p) => p,
            Semi::Unknown(s) => panic!("passage starved: {}", s),
        };
        match verify_gate(f, g, &passage, 200_000) {
            Semi::Accepted(gc) => gc,
            Semi::Unknown(s) => panic!("gate starved: {}", s),
        }
    }

    #[test]
    fn unit_square_is_a_gate_for_diagonals() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        assert!(gate.left_margin > gate.left_pt.err);
        assert!(gate.right_margin > gate.right_pt.err);
        assert_eq!(gate.left_pt.pt, crate::geom::Pt2::from_ints(0, 0));
        assert_eq!(gate.right_pt.pt, crate::geom::Pt2::from_ints(1, 1));
    }

    #[test]
    fn identical_paths_never_gate() {
        let (f, _) = normalized_diagonals();
        let mut meter = FuelMeter::new(10_000);
        let passage = match make_passage(&f, Region::UnitSquareInterior, r(1, 2), &mut meter) {
            Semi::Accepted(p) => p,
            Semi::Unknown(s) => panic!("passage starved: {}", s),
        };
        // Endpoints of f lie on range(f): the semi-test must starve.
        assert!(!verify_gate(&f, &f, &passage, 30_000).is_accepted());
    }

    #[test]
    fn unit_square_gate_is_crossed_at_half() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        match verify_crossed(&f, &g, &gate, &r(1, 2), 200_000) {
            Semi::Accepted(c) => {
                assert!(c.transversality_margin.is_positive());
                assert_eq!(c.g_left.pt, crate::geom::Pt2::from_ints(0, 1));
                assert_eq!(c.g_right.pt, crate::geom::Pt2::from_ints(1, 0));
            }
            Semi::Unknown(s) => panic!("crossing starved: {}", s),
        }
    }

    #[test]
    fn robust_chords_need_margin() {
        let exact = |x: i64, y: i64| PtEnc::exact(crate::geom::Pt2::from_ints(x, y));
        assert!(robust_chords_cross(
            &exact(0, 0),
            &exact(1, 1),
            &exact(0, 1),
            &exact(1, 0),
            32
        )
        .is_some());
        assert!(robust_chords_cross(
            &exact(0, 0),
            &exact(1, 0),
            &exact(0, 1),
            &exact(1, 1),
            32
        )
        .is_none());
        // Fat enclosures kill the margin.
        let fat = PtEnc::new(crate::geom::Pt2::from_ints(0, 0), Rat::from_int(2));
        assert!(robust_chords_cross(
            &fat,
            &exact(1, 1),
            &exact(0, 1),
            &exact(1, 0),
            32
        )
        .is_none());
    }

    #[test]
    fn ball_chain_on_diagonals() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        let crossed = verify_crossed(&f, &g, &gate, &r(1, 2), 200_000)
            .accepted()
            .expect("crossed");
        match build_ball_chain(&f, &g, &crossed, None, 3_000_000) {
            ChainOutcome::Built(chain) => {
                assert!(!chain.links.is_empty());
                assert!(chain.a_left < chain.a_right);
                assert!(chain.a_end >= chain.a_right);
                let report = check_chain_invariants(&chain, &f, 2_000_000);
                assert!(report.all_pass(), "failing clauses: {:?}", report.failures());
            }
            ChainOutcome::Degenerate(d) => panic!("degenerate: {}", d),
            ChainOutcome::Starved(s) => panic!("starved: {}", s),
        }
    }

    #[test]
    fn chain_starves_at_zero_fuel() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        let crossed = verify_crossed(&f, &g, &gate, &r(1, 2), 200_000)
            .accepted()
            .expect("crossed");
        match build_ball_chain(&f, &g, &crossed, None, 0) {
            ChainOutcome::Starved(s) => assert!(s.stage.starts_with("chain:")),
            other => panic!("expected starvation, got {:?}", other),
        }
    }

    #[test]
    fn corrupted_chain_fails_invariants() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        let crossed = verify_crossed(&f, &g, &gate, &r(1, 2), 200_000)
            .accepted()
            .expect("crossed");
        let chain = match build_ball_chain(&f, &g, &crossed, None, 3_000_000) {
            ChainOutcome::Built(c) => *c,
            other => panic!("chain failed: {:?}", other),
        };
        if chain.links.len() >= 2 {
            // Inflate a middle gate radius above its predecessor.
            let mut bad = chain.clone();
            bad.links[1].gate_radius = &bad.links[0].gate_radius * Rat::from_int(2);
            let report = check_chain_invariants(&bad, &f, 500_000);
            assert!(report.failures().contains(&"radii_strictly_decrease"));

            // Violate minimum anchor progress.
            let mut bad = chain.clone();
            let min_step = f.modulus(&bad.s.halve());
            bad.links[1].a = &bad.links[0].a + &(&min_step * &r(1, 2));
            let report = check_chain_invariants(&bad, &f, 500_000);
            assert!(report.failures().contains(&"anchor_progress"));
        }
    }

    #[test]
    fn sub_crossing_contracts_diameter() {
        let (f, g) = normalized_diagonals();
        let gate = unit_square_gate(&f, &g);
        let crossed = verify_crossed(&f, &g, &gate, &r(1, 2), 200_000)
            .accepted()
            .expect("crossed");
        match find_sub_crossing(&f, &g, &crossed, 8_000_000) {
            SubCrossingOutcome::Found(sub) => {
                let v = &sub.cert.gate.passage.v;
                let diam = v.diameter_ub(36);
                let outer_lb = Region::UnitSquareInterior.diameter_lb(36);
                assert!(diam < outer_lb.halve(), "diam {} too large", diam);
                assert_eq!(
                    region_closure_inside(v, &Region::UnitSquareInterior, 36),
                    Trivalent::Yes
                );
                // The known intersection point (1/2,1/2) of the normalized
                // diagonals must lie in the crossed sub-gate's region.
                let center = PtEnc::exact(crate::geom::Pt2::new(r(1, 2), r(1, 2)));
                assert!(v.clearance_lb(&center, 36).is_positive());
            }
            SubCrossingOutcome::Degenerate(d) => panic!("degenerate: {}", d),
            SubCrossingOutcome::Starved(s) => panic!("starved: {}", s),
        }
    }
}
