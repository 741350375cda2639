//! Numerical laboratory for sections of linear quotient maps over finite
//! sampled bases: exact fiber geometry, intrinsic Lipschitz functionals
//! with scale-indexed slope fields, weighted `L^q` norms, and a discrete
//! Cheeger-energy relaxation with minimal-relaxed-slope certificates.
//!
//! The crate is organized around the data flow
//! [`quotient::QuotientMap`] → [`section::Section`] → slope fields and
//! theorem checks → the relaxation solver, with brute-force oracles kept
//! on a separate code path for cross-validation.
//!
//! ```
//! use ilslab_core::{global_ils, slope_field, Instance, ScaleSchedule, SlopeVariant};
//!
//! let inst = Instance::fixture_f1();
//! let phi = inst.section("phi").unwrap();
//! let (ils, _witness) = global_ils(phi).unwrap();
//! assert!((ils - 5f64.sqrt()).abs() < 1e-12);
//!
//! let sched = ScaleSchedule::new(vec![1.5]).unwrap();
//! let field = slope_field(phi, &sched, SlopeVariant::Asymptotic).unwrap();
//! assert!((field.at(1, 0).unwrap() - ils).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]

pub mod checks;
pub mod cheeger;
pub mod error;
pub mod instance;
pub mod lp;
pub mod lq;
pub mod oracle;
pub mod quotient;
pub mod report;
pub mod section;
pub mod slope;
pub mod suite;

pub use checks::{TheoremReport, Witness};
pub use cheeger::{
    cheeger_energy, relax_energy, AdmissibleClass, RelaxationParams, RelaxationResult,
    RelaxedSlopeCertificate,
};
pub use error::{Error, Result};
pub use instance::{generate_instance, GenSpec, Instance};
pub use lq::{lq_distance, lq_norm, NormVariant, WeightedField};
pub use quotient::{NormTag, QuotientMap, SampledBase};
pub use section::{combine_sections, hadamard_product, scale_section, PlainField, Section};
pub use slope::{global_ils, slope_field, ScaleSchedule, SlopeField, SlopeVariant};
pub use suite::{run_suite, SuiteKind, SuiteOptions, SuiteReport};
