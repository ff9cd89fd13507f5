//! Resonances of the open quantum kicked rotator and their classical counterpart.
//!
//! The quantum side builds the truncated Floquet map of a rotator with an
//! absorbing strip in `q`, diagonalises it with an in-crate complex Schur
//! solver, and renders leading Schur subspaces as Husimi densities. The
//! classical side iterates the symmetrized standard map with the same
//! opening. [`weyl`] ties both to the scaling of long-lived resonance counts.

pub mod classical;
pub mod error;
pub mod fit;
pub mod gridfile;
pub mod husimi;
pub mod linalg;
pub mod rotor;
pub mod spectra;
pub mod weyl;

pub use classical::{EscapeZoneGrid, PhasePoint, SurvivalCurve};
pub use error::{Error, Result};
pub use husimi::{GridDims, HusimiGrid};
pub use linalg::{CMat, C64};
pub use rotor::{OpenMap, OpenMapSpec, Opening, SiteConvention};
pub use spectra::{ResonanceSet, SchurForm, SchurOrder};
pub use weyl::{PCurve, ScalingSeries};
