//! Symbolic dynamics of planar return maps: strips, Moser conditions, cone
//! fields, word realization, spiral intersections and entropy estimates.

mod cones;
mod entropy;
mod homoclinic;
mod spiral_map;
mod strips;
mod symbolic;

pub use cones::{certify_horseshoe, cone_certificate, ConeReport, ConeViolation, HorseshoeCertificate};
pub use entropy::{entropy_separated_sets, EntropyCell, EntropyEstimate, EntropyOptions};
pub use homoclinic::{detect_transverse_homoclinic, GraphArc, HomoclinicIntersection, HomoclinicReport};
pub use spiral_map::SpiralHorseshoe;
pub use strips::{
    detect_strips, verify_moser_conditions, MoserOptions, MoserReport, MoserWitness, Strip, StripAxis, StripOptions,
    StripSystem,
};
pub use symbolic::{
    periodic_point, realize_word, semiconjugacy_check, HorseshoeOrbits, PeriodicPoint, RealizedWord,
    SemiconjugacyReport,
};
