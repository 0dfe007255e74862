//! LP-type problem plugins: minimum enclosing ball, hard-margin SVM, bounded
//! LP (with the classification reduction) and bounded SDP (with the saddle
//! point reduction), plus brute-force reference oracles.

pub mod lp;
pub mod meb;
pub mod oracles;
pub mod scalar;
pub mod sdp;
pub mod simplex;
pub mod svm;

pub use lp::{
    classification_problem, classification_row, classification_to_lp, BoundedLpProblem, Constraint,
    RowLayout, RowNet,
};
pub use meb::{MebProblem, PointNet};
pub use sdp::{psd_violator, saddle_to_sdp, BoundedSdpProblem, SdpConstraint, SparseNet};
pub use svm::{Labeled, LabeledNet, SvmProblem};
