//! Seeded fixture generation for the oracle-backed test suites.
//!
//! Determinism is part of the contract: the generator is a self-contained
//! splitmix64 stream, so identical seeds give byte-identical fixtures on
//! every platform.

use crate::geom::Pt2;
use crate::ivt::PiecewiseLinear1d;
use crate::oracle;
use crate::path::PolylinePath;
use crate::rat::Rat;

/// splitmix64 stream.
#[derive(Clone, Debug)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    /// Dyadic rational in the open interval (0;1) with denominator 2^bits.
    pub fn unit_open(&mut self, bits: u32) -> Rat {
        let denom = 1u64 << bits;
        let k = 1 + self.below(denom - 1);
        Rat::new(k as i64, denom as i64)
    }

    /// Strictly increasing dyadic values in (0;1).
    fn increasing(&mut self, count: usize, bits: u32) -> Vec<Rat> {
        let denom = 1u64 << bits;
        let mut picks: Vec<u64> = Vec::new();
        while picks.len() < count {
            let v = 1 + self.below(denom - 1);
            if !picks.contains(&v) {
                picks.push(v);
            }
        }
        picks.sort_unstable();
        picks
            .into_iter()
            .map(|v| Rat::new(v as i64, denom as i64))
            .collect()
    }
}

/// Strictly monotone staircase from (0,0) to (1,1): both coordinates
/// strictly increase, so every segment direction points into the open
/// north-east quadrant and the path is injective.
pub fn ascending_staircase(rng: &mut SeededRng, interior_points: usize) -> PolylinePath {
    let xs = rng.increasing(interior_points, 10);
    let ys = rng.increasing(interior_points, 10);
    let mut pts = vec![Pt2::from_ints(0, 0)];
    for (x, y) in xs.into_iter().zip(ys) {
        pts.push(Pt2::new(x, y));
    }
    pts.push(Pt2::from_ints(1, 1));
    PolylinePath::from_points(pts).expect("staircase is valid")
}

/// Strictly monotone staircase from (0,1) to (1,0): x increases, y strictly
/// decreases, so every segment points into the open south-east quadrant.
pub fn descending_staircase(rng: &mut SeededRng, interior_points: usize) -> PolylinePath {
    let xs = rng.increasing(interior_points, 10);
    let mut ys = rng.increasing(interior_points, 10);
    ys.reverse();
    let mut pts = vec![Pt2::from_ints(0, 1)];
    for (x, y) in xs.into_iter().zip(ys) {
        pts.push(Pt2::new(x, y));
    }
    pts.push(Pt2::from_ints(1, 0));
    PolylinePath::from_points(pts).expect("staircase is valid")
}

/// A corner-condition pair (f ascending, g descending) whose crossings are
/// transversal by construction: no f segment is ever parallel to a g
/// segment, and seeds where an intersection lands on a breakpoint time are
/// rejected and replaced deterministically.
pub fn corner_pair(seed: u64) -> (PolylinePath, PolylinePath) {
    for attempt in 0..64u64 {
        let mut rng = SeededRng::new(seed.wrapping_add(attempt.wrapping_mul(0x9e37)));
        let nf = 3 + rng.below(16) as usize; // at most 18 interior points
        let ng = 3 + rng.below(16) as usize;
        let f = ascending_staircase(&mut rng, nf);
        let g = descending_staircase(&mut rng, ng);
        if pair_is_clean(&f, &g) {
            return (f, g);
        }
    }
    // Deterministic fallback; structurally always clean.
    (
        crate::path::diagonal_path(),
        crate::path::anti_diagonal_path(),
    )
}

fn pair_is_clean(f: &PolylinePath, g: &PolylinePath) -> bool {
    let result = oracle::polyline_intersections(f, g);
    if result.points.is_empty() || !result.overlaps.is_empty() {
        return false;
    }
    let f_times: Vec<&Rat> = f.breakpoints().iter().map(|(t, _)| t).collect();
    let g_times: Vec<&Rat> = g.breakpoints().iter().map(|(t, _)| t).collect();
    for (_, params) in &result.points {
        for (tf, tg) in params {
            if f_times.contains(&tf) || g_times.contains(&tg) {
                return false;
            }
        }
    }
    true
}

/// Random polyline inside [1/8; 7/8]^2 for reach testing, plus a time and a
/// radius keeping the ball well inside the unit square.
pub fn reach_triple(seed: u64) -> (PolylinePath, Rat, Rat) {
    let mut rng = SeededRng::new(seed);
    let n = 2 + rng.below(8) as usize;
    let coord = |rng: &mut SeededRng| {
        // Dyadic in [1/8; 7/8].
        let v = rng.below(769); // 0..=768 of 1024ths -> 128..896
        Rat::new(128 + v as i64, 1024)
    };
    let mut pts = Vec::with_capacity(n + 2);
    for _ in 0..(n + 2) {
        pts.push(Pt2::new(coord(&mut rng), coord(&mut rng)));
    }
    // Drop consecutive duplicates; pad if needed.
    pts.dedup();
    if pts.len() < 2 {
        pts.push(Pt2::new(Rat::new(7, 8), Rat::new(7, 8)));
    }
    let path = PolylinePath::from_points(pts).expect("interior polyline");
    let a = rng.unit_open(8);
    let r = Rat::new(1 + rng.below(15) as i64, 256); // (0; 15/256]
    (path, a, r)
}

/// Piecewise-linear h with h(0) = -1, h(1) = 1 and nonzero interior
/// breakpoint values, sampled from a seeded stream.
pub fn pl_function(seed: u64) -> PiecewiseLinear1d {
    let mut rng = SeededRng::new(seed);
    let n = 1 + rng.below(8) as usize;
    let times = rng.increasing(n, 8);
    let mut bps = vec![(Rat::zero(), Rat::from_int(-1))];
    for t in times {
        // Values in [-1;1], nudged off zero.
        let raw = rng.below(511) as i64 - 255; // -255..=255
        let v = if raw == 0 { 1 } else { raw };
        bps.push((t, Rat::new(v, 256)));
    }
    bps.push((Rat::one(), Rat::one()));
    PiecewiseLinear1d::new(bps).expect("corpus function is valid")
}

/// Piecewise-linear h that is exactly 0 on [1/3; 2/3] (and only there).
pub fn flat_zero_function(seed: u64) -> PiecewiseLinear1d {
    let mut rng = SeededRng::new(seed);
    let dip = Rat::new(-(1 + rng.below(200) as i64), 256);
    PiecewiseLinear1d::new(vec![
        (Rat::zero(), Rat::from_int(-1)),
        (Rat::new(1, 4), dip),
        (Rat::new(1, 3), Rat::zero()),
        (Rat::new(2, 3), Rat::zero()),
        (Rat::one(), Rat::one()),
    ])
    .expect("flat corpus function is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism() {
        let (f1, g1) = corner_pair(42);
        let (f2, g2) = corner_pair(42);
        assert_eq!(f1.breakpoints(), f2.breakpoints());
        assert_eq!(g1.breakpoints(), g2.breakpoints());
        let (f3, _) = corner_pair(43);
        assert_ne!(f1.breakpoints(), f3.breakpoints());
    }

    #[test]
    fn corner_pairs_are_transversal() {
        for seed in 0..25 {
            let (f, g) = corner_pair(seed);
            let res = oracle::polyline_intersections(&f, &g);
            assert!(!res.points.is_empty(), "seed {} has no crossing", seed);
            assert!(res.overlaps.is_empty(), "seed {} has overlaps", seed);
        }
    }

    #[test]
    fn staircases_hit_corners() {
        let mut rng = SeededRng::new(7);
        let f = ascending_staircase(&mut rng, 5);
        assert_eq!(f.breakpoints()[0].1, Pt2::from_ints(0, 0));
        assert_eq!(f.breakpoints().last().unwrap().1, Pt2::from_ints(1, 1));
        let g = descending_staircase(&mut rng, 5);
        assert_eq!(g.breakpoints()[0].1, Pt2::from_ints(0, 1));
        assert_eq!(g.breakpoints().last().unwrap().1, Pt2::from_ints(1, 0));
    }
}
