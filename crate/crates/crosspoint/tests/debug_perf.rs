use crosspoint::fuel::FuelMeter;
use crosspoint::path::*;
use crosspoint::rat::Rat;
use crosspoint::geom::PtEnc;
use std::sync::Arc;
use std::time::Instant;

#[test]
#[ignore]
fn perf_probe() {
    let (f, _g) = normalize_endpoints(
        Arc::new(diagonal_path()),
        Arc::new(anti_diagonal_path()),
    )
    .unwrap();

    // Raw eval throughput at typical precisions.
    let t0 = Instant::now();
    let mut acc = Rat::zero();
    for i in 0..20_000u32 {
        let t = Rat::new((i % 1000 + 1) as i64, 1024);
        let e = f.eval(&t, 48).unwrap();
        acc = acc + &e.pt.x;
    }
    eprintln!("20k evals: {:?} (acc {})", t0.elapsed(), acc.to_f64_dbg());

    // Reach refinement throughput.
    let t0 = Instant::now();
    let enc = crosspoint::reach::refine_reach(&f, &Rat::new(1, 2), &Rat::new(1, 64), 20_000);
    eprintln!(
        "refine_reach 20k units: {:?} (window {})",
        t0.elapsed(),
        (&enc.fwd_stay_hi - &enc.fwd_stay_lo).to_f64_dbg()
    );

    // Semitest throughput.
    let t0 = Instant::now();
    let mut meter = FuelMeter::new(20_000);
    let x = PtEnc::exact(crosspoint::geom::Pt2::new(Rat::new(1, 8), Rat::new(7, 8)));
    let out = not_in_range_semitest(&x, &_g, &mut meter);
    eprintln!("semitest: {:?} spent {} ({:?})", t0.elapsed(), meter.spent(), out.is_accepted());
}
