//! Conley-Zehnder indices from the asymptotic operator, linking and
//! self-linking numbers.

mod linking;
mod selflink;
mod spectrum;

pub use linking::{
    crossing_linking, gauss_linking, linking_number, linking_number_checked, min_distance,
    LinkMethod, LinkRecord, P3,
};
pub use selflink::{self_linking, self_linking_of_orbit, SelfLinkOptions, SelfLinkRecord, SphereChart};
pub use spectrum::{
    asymptotic_spectrum, cz_index, cz_index_refined, fourier_differentiation, frame_generator,
    spectrum_from_generator, transverse_generator, winding_number, winding_structure_ok,
    AsymptoticSpectrum, CzReport, Eigenpair, RefinedIndex, SpectrumOptions, J0,
};
