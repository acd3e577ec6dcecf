//! Warped convolutions, Rieffel products and their modular theory on
//! finite-dimensional covariant systems.
//!
//! Translations are given by commuting Hermitian generators; everything
//! deformed is computed in their joint eigenbasis, where the warped
//! convolution is a Schur multiplier by phases `e^{i x_k·Q x_l}`. The
//! oscillatory-integral definitions are evaluated independently in
//! [`quadrature`] and serve as the oracle for the closed forms.

pub mod covariant;
pub mod error;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod minkowski;
pub mod models;
pub mod modular;
pub mod quadrature;
pub mod rieffel;
pub mod suite;
pub mod warp;

pub use covariant::{build_system, generators_from_spectrum, CovariantSystem, SpectrumReport};
pub use error::{Error, Result};
pub use fock::{build_fock, exchange_phase, scattering_table, FockModel};
pub use linalg::{Antilinear, CMat, CVec, OperatorSpace, RMat, RVec, C64};
pub use minkowski::{
    check_admissible, classify_wedge_map, standard_q, BilinearForm, FormKind, PoincareElement, SkewMatrix, Vector,
    Wedge, WedgeRelation,
};
pub use modular::{commutant, tomita, warp_algebra, AlgebraSpec, ModularData};
pub use quadrature::{Mollifier, MollifierSpec, QuadratureGrid, QuadratureResult};
pub use rieffel::{product_exact, product_quadrature};
pub use suite::{run_suite, SuiteConfig, SuiteReport};
pub use warp::{warp_exact, warp_quadrature, Ordering, Symmetry};
