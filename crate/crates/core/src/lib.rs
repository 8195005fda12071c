//! Semi-linear response for driven mesoscopic systems.
//!
//! The crate computes energy-absorption (diffusion) coefficients from a
//! coupling matrix `X_nm = |V_nm|^2` and a level spectrum, contrasting the
//! linear-response algebraic average with the resistor-network average that
//! accounts for sparse, log-wide distributions of matrix elements.

pub mod averages;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod network;
pub mod response;
pub mod scan;
pub mod spectral;
pub mod svg;

pub use averages::{
    algebraic_average, algebraic_average_weighted, average_report, reference_averages,
    resistor_network_average, resistor_network_average_with, suppression_factor, AverageReport,
    NetworkAverage, ReferenceAverages,
};
pub use dynamics::{evolve_master, spreading_diffusion, SpreadingResult};
pub use error::{Error, Result};
pub use models::{
    build_ring, build_sparse_ensemble, drude_reference, wall_reference, EnsembleSpec, ModelOutput,
    RingSpec,
};
pub use network::{inverse_resistivity, inverse_resistivity_with, ConductanceNetwork, ProbePlacement};
pub use response::{
    conductance, fgr_rates, kubo_diffusion, slrt_diffusion, OccupationSpec, RateNetwork,
    ResponseResult,
};
pub use spectral::{
    band_profile, sparsity_measures, BandWindow, CouplingMatrix, LevelSet, LineShape,
    SparsityReport, SpectralWeight,
};
