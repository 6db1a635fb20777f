//! Semiclassical analysis of spin-orbit coupling with a large spin.
//!
//! The library is organised around a hybrid system: an orbital degree of
//! freedom (position/momentum, quantised in a truncated Fock basis) coupled to
//! a spin-s degree of freedom through a Hamiltonian of the form
//!
//! ```text
//!     H(t) = H0(t, x, hbar D) (x) I  +  hbar * sum_k G_k(t, x, hbar D) (x) S_k
//! ```
//!
//! with the effective coupling strength kappa = hbar * s. The modules provide
//!
//! * [`spin`] / [`coherent`]: spin-s matrices in the Dicke basis, rotations,
//!   spin coherent states and their tangent-space decompositions,
//! * [`classical`]: the coupled classical flow (phase-space point, Bloch
//!   vector, actions, Gaussian width matrix) and perturbation diagnostics,
//! * [`fock`] / [`hamiltonian`] / [`propagate`]: exact quantum propagation in
//!   a truncated Fock (x) spin basis,
//! * [`ansatz`]: the semiclassical product ansatz built from a classical
//!   trajectory, along with error and residual scans,
//! * [`reduced`] / [`dicke`]: reduced orbital density matrices, purity and
//!   entropy, and closed-form decoherence kernels for Dicke-type couplings,
//! * [`io`]: deterministic CSV/JSON artifact writers.
//!
//! Basis convention used throughout: the Dicke basis index k = 0..N-1 labels
//! twice_m = 2k - twice_s, so k = 0 is the lowest-weight state (m = -s) and
//! all ladder coefficients are integer-exact before the final square root.

pub mod ansatz;
pub mod classical;
pub mod coherent;
pub mod dicke;
pub mod error;
pub mod field;
pub mod fit;
pub mod fock;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod propagate;
pub mod quad;
pub mod reduced;
pub mod scales;
pub mod sphere;
pub mod spin;

pub use coherent::SpinCoherentState;
pub use error::{Error, Result};
pub use field::CouplingField;
pub use fock::{FockTruncation, HybridState};
pub use linalg::{CMat, CVec, C64};
pub use scales::SimulationScales;
pub use sphere::SphereDirection;
pub use spin::{SpinQuantumNumber, SpinRepresentation};
