//! Normal forms near hyperbolic orbits, transition-map lifts with
//! logarithmic twist, composed-lift certificates and disk bookkeeping.

mod certificate;
mod lift;
mod normal_form;
mod schema;
mod spiral;

pub use certificate::{
    certify, compose_lifts, find_twist_periodic_points, CertificateOptions, TwistCertificate, TwistFixedPoint,
    TwistLevel, TwistSearchOptions,
};
pub use lift::{
    global_lift, local_exterior_lift, ComposedLift, FourierSeries, GlobalFitOptions, GlobalLift, LocalLift,
    TransitionLift,
};
pub use normal_form::{fit_normal_form, transit_drift, NormalFormChart, NormalFormOptions, SectionFrame, TransitReport};
pub use schema::{
    classify_branch, forwarding_map, iterate_disk_forwarding, BranchClass, BranchReport, Circle, DiskFamily,
    FoliationSchema, ForwardStep, ForwardingOracle, ForwardingTrace, TableOracle,
};
pub use spiral::{spiral_image, transit_time_check, PowerCurve, SpiralReport, TransitSample};
