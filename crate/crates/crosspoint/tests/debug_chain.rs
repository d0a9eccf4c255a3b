use crosspoint::fuel::{FuelMeter, Semi};
use crosspoint::gates::*;
use crosspoint::geom::Region;
use crosspoint::path::*;
use crosspoint::rat::Rat;
use std::sync::Arc;

#[test]
#[ignore]
fn debug_chain() {
    let (f, g) = normalize_endpoints(
        Arc::new(diagonal_path()),
        Arc::new(anti_diagonal_path()),
    )
    .unwrap();
    let mut meter = FuelMeter::new(100_000);
    let passage = match make_passage(&f, Region::UnitSquareInterior, Rat::new(1, 2), &mut meter) {
        Semi::Accepted(p) => p,
        Semi::Unknown(s) => panic!("{}", s),
    };
    let gate = verify_gate(&f, &g, &passage, 200_000).accepted().unwrap();
    eprintln!("gate margins: left {} right {}", gate.left_margin, gate.right_margin);
    let crossed = verify_crossed(&f, &g, &gate, &Rat::new(1, 2), 200_000)
        .accepted()
        .unwrap();
    let t0 = std::time::Instant::now();
    match build_ball_chain(&f, &g, &crossed, None, 3_000_000) {
        ChainOutcome::Built(chain) => {
            eprintln!(
                "chain: {} links  s={}  sep={}  a_l={} a_r={}  [{:?}]",
                chain.links.len(),
                chain.s.to_f64_dbg(),
                chain.sep_radius.to_f64_dbg(),
                chain.a_left.to_f64_dbg(),
                chain.a_right.to_f64_dbg(),
                t0.elapsed()
            );
        }
        other => panic!("{:?} after {:?}", other, t0.elapsed()),
    }
}
