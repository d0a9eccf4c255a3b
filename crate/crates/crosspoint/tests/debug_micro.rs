use crosspoint::geom::{PtEnc, Region, CenteredBall, Pt2};
use crosspoint::path::*;
use crosspoint::rat::Rat;
use std::sync::Arc;
use std::time::Instant;

#[test]
#[ignore]
fn micro() {
    let (f, _g) = normalize_endpoints(
        Arc::new(diagonal_path()),
        Arc::new(anti_diagonal_path()),
    )
    .unwrap();
    let region = Region::Ball(CenteredBall::exact(
        Pt2::new(Rat::new(1, 2), Rat::new(1, 2)),
        Rat::new(1, 64),
    ));

    // Typical probe body at deep precision.
    let prec = 88u32;
    let bits = prec + 4;
    let t = Rat::new(123456789, 1 << 30) + Rat::pow2(-60);
    let t0 = Instant::now();
    for _ in 0..5000 {
        let e = f.eval(&t, prec).unwrap();
        let _m = region.outside_margin_lb(&e, bits);
    }
    eprintln!("5k probe bodies (prec 88): {:?}", t0.elapsed());

    let t0 = Instant::now();
    for _ in 0..5000 {
        let e = f.eval(&t, 20).unwrap();
        let _m = region.outside_margin_lb(&e, 24);
    }
    eprintln!("5k probe bodies (prec 20): {:?}", t0.elapsed());

    // image_spread cost
    let t0 = Instant::now();
    let h = Rat::pow2(-40);
    for _ in 0..5000 {
        let _ = crosspoint::path::range_cover(&f, &Rat::new(1,4), &Rat::new(1,4), 3);
        let _ = h.clone();
    }
    eprintln!("5k tiny covers: {:?}", t0.elapsed());

    // modulus cost
    let t0 = Instant::now();
    let g40 = Rat::pow2(-40);
    for _ in 0..50_000 {
        let _ = f.modulus(&g40);
    }
    eprintln!("50k modulus: {:?}", t0.elapsed());
}
