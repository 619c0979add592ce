//! Eigenvalue counting on rooms-and-passages domains.

pub mod bracketing;
pub mod domain;
pub mod error;
pub mod fd;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod singular;
pub mod skeleton;
pub mod skeleton_operator;
pub mod spectrum;
pub mod tail;

pub use bracketing::{assemble_bounds, second_term_constants, BoundaryCondition, BracketReport, Scope, SecondTermConstants};
pub use domain::{DomainParams, Family, Piece, PieceKind, RpDomain};
pub use error::{Error, Result};
pub use fd::{ExtrapolatedSpectrum, FdSpectrum, GridDomain, SandwichReport};
pub use report::{Check, Comparison, Report};
pub use singular::{rayleigh_report, RayleighReport};
pub use skeleton::{EdgeGroup, Skeleton, SkeletonEdge};
pub use skeleton_operator::{SkeletonFunction, SkeletonSpace, WeightedSlSystem};
pub use spectrum::{count_exact, eigen_1d, Bc1d, RectangleSpec};
pub use tail::{min_m_for_lambda, TailDepth, TailPolicy};
