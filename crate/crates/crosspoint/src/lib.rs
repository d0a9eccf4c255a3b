//! crosspoint: certified enclosures for intersections of computable paths.
//!
//! Two paths in the unit square that connect opposite corner pairs must
//! intersect; this crate computes arbitrarily precise *verified* enclosures
//! of such an intersection point from oracle access to the paths alone. All
//! arithmetic is exact rational (plus exact sign tests in single quadratic
//! extensions); approximation only ever enters through certified enclosures,
//! and every semi-decision either returns a self-contained certificate or an
//! honest starvation report.

pub mod corpus;
pub mod crossings;
pub mod error;
pub mod fuel;
pub mod gates;
pub mod geom;
pub mod io;
pub mod ivt;
pub mod jordan;
pub mod oracle;
pub mod path;
pub mod quad;
pub mod rat;
pub mod reach;
pub mod trace;

pub use error::{DegenerateGate, InputError, ParseRatError, PathError};
pub use fuel::{FuelMeter, Semi, Starved};
pub use geom::{
    ball_closure_in_unit_square, balls_alternate_on_boundary, make_lens, peak_in_ball,
    segments_intersect, CenteredBall, Lens, MakeLens, PeakIndex, PeakRef, Pt2, PtEnc, Region,
    Trivalent,
};
pub use path::{
    anti_diagonal_path, diagonal_path, normalize_endpoints, not_in_cover_distance,
    not_in_range_semitest, range_cover, denormalize_point, NormalizedPath, PathOracle,
    PolyPiece, PolylinePath, PwPolyPath, RangeCover,
};
pub use quad::QuadVal;
pub use rat::Rat;
