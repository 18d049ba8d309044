//! Ground-truth engines: exhaustive clock-model enumeration for the
//! chessboard and subadditivity inequalities, and Gaussian-field sampling for
//! the harmonic and box-mass bounds.

mod clock;
mod events;
mod gaussian;
mod harmonic;

pub use clock::{
    chessboard_check, constrained_partition, enumerate_clock, subadditivity_check, ChessboardReport, ClassSums,
    ClockSetup, ClockSummary, EnergyLevel, Enumeration, PlacedEvent, Placement, SubadditivityReport, DEFAULT_BUDGET,
    INEQUALITY_SLACK,
};
pub use events::{EventExpr, EventSpec, TruthTable};
pub use gaussian::{gaussian_box_mass, mode_variances, GaussianBoxReport, MassiveField, ModeVariance};
pub use harmonic::{harmonic_constant, harmonic_error_scan, quadratic_form, HarmonicReport};
