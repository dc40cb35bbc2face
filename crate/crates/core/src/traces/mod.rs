//! Canonical and residue traces, zeta pole tables, heat coefficients and
//! the dimension spectrum, with their report serialization.

mod canonical;
mod heat;
mod report;
mod spectrum;
mod zeta;

pub use canonical::{canonical_trace, residue_trace, ResidueDensity, ResidueTrace};
pub use heat::{heat_coefficients, heat_leading_coefficient, HeatExpansion, HeatSample, HeatSettings};
pub use report::{poles_csv, TraceReport};
pub use spectrum::{derived_algebra, dimension_spectrum, DimensionSpectrum};
pub use zeta::{
    family_residue_check, fit_pole, multi_zeta, symbolic_zeta, zeta_pole_table, zeta_trace, FamilyResidueCheck, FitSettings,
    MeromorphicReport, PoleRecord, ZetaSettings, ZetaSlice,
};

#[cfg(test)]
mod tests;
