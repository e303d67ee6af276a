//! Exact computation of Bianchi orbifold data.
//!
//! For a Bianchi group PSL2(O_{-m}) with units {±1} this crate computes, in
//! exact arithmetic:
//!
//! - the floor of the Bianchi fundamental polyhedron (Swan's hemisphere
//!   sweep), with its cell structure, side pairings and cusps;
//! - the refined equivariant cell complex whose cell stabilisers fix cells
//!   pointwise, and the rational cohomology of the quotient space;
//! - the reduced 2- and 3-torsion subcomplexes, the conjugacy class counts
//!   lambda_4, lambda_4*, lambda_6, lambda_6* and the homeomorphism type
//!   (circle or edge) of each rotation-axis quotient;
//! - the Chen-Ruan orbifold cohomology dimensions assembled from these data,
//!   with degree-shift and obstruction-bundle checks;
//! - an independent Diophantine centraliser search used as a cross-check.
//!
//! The `bianchi` binary drives the pipeline and emits deterministic JSON or
//! text reports; results are cached per m.

pub mod chenruan;
pub mod complexes;
pub mod dioph;
pub mod exact;
pub mod geom;
pub mod moebius;
pub mod report;
pub mod swan;
pub mod torsion;

use thiserror::Error;

/// Error type shared by the whole pipeline.
#[derive(Debug, Error)]
pub enum BianchiError {
    #[error("invalid field parameter: {0}")]
    BadField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("not a finite Bianchi stabiliser: closure exceeds {0} elements")]
    NotFiniteStabiliser(usize),
    #[error("finite subgroup of unexpected shape: {0}")]
    BadSubgroup(String),
    #[error("floor computation did not stabilise below norm bound {0}")]
    NoStabilisation(u64),
    #[error("structural failure in {module}: {detail}")]
    Structure { module: String, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BianchiError {
    pub fn structure(module: &str, detail: impl Into<String>) -> Self {
        BianchiError::Structure {
            module: module.to_string(),
            detail: detail.into(),
        }
    }
}

pub use exact::{cmp_heights, ring_basis, OmegaCase, QuadElem, Rat, RingBasis, RingElem, UhsPoint};
pub use moebius::{FiniteGroupType, FiniteSubgroup, MoebiusElt};
