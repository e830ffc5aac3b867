//! Hyperfine-resolved dynamic polarizabilities and tune-out wavelengths of
//! alkali ground states, together with the Kapitza-Dirac and absorption-image
//! analysis chain used to measure them.
//!
//! Module map:
//!
//! * [`atomic`]: species data files, hyperfine levels, Wigner symbols.
//! * [`stark`]: scalar, vector and tensor polarizabilities and the ac Stark shift.
//! * [`tuneout`]: tune-out roots, the linear lattice-depth model and the
//!   contribution ledger.
//! * [`kd`]: Kapitza-Dirac momentum populations, pulse shape and depth inversion.
//! * [`imaging`]: synthetic shots, reference-image composition, optical
//!   density, peak fitting and SNR.
//! * [`fit`]: weighted least squares and the physics fit models.
//! * [`pipeline`]: the synthetic scan chain from lattice depth to fitted tune-out wavelength.

pub mod atomic;
pub mod constants;
pub mod fit;
pub mod imaging;
pub mod kd;
pub mod pipeline;
pub mod stark;
pub mod tuneout;

pub use atomic::{HyperfineState, MatrixElements, SpeciesData, Spin};
pub use constants::{PhysicalConstants, CODATA2018};
pub use fit::{PolarizationFit, ScanPoint};
pub use imaging::{Frame, OdImage, ReferenceBasis};
pub use kd::MomentumPopulations;
pub use stark::{LightField, PolarizabilitySet, PolarizationParams, Toggles};
pub use tuneout::{ContributionLedger, Estimate, TuneoutResult};

