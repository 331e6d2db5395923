//! Negative-imaginary classification and graph-based formation stability.

mod graph;
mod sni;

pub use graph::{
    formation_stable, interconnect_stable, laplacian_from_incidence, max_eigenvalue,
    FormationVerdict, IncidenceMatrix,
};
pub use sni::{
    block_sni, is_ni, is_sni, ni_report, ni_report_on, positive_interconnection, NiReport,
    SniFailure, SniReport, ORIGIN_EXCLUSION, STRICTNESS,
};
