//! Convex inner approximation of the energy-efficiency problem around an
//! expansion point.

pub mod expcone;
pub mod point;
pub mod subproblem;
pub mod surrogates;

pub use subproblem::{build_subproblem, BuildOptions, ExpansionPoint, ObjectiveMode, Subproblem, VarLayout};
pub use point::{NormChannels, ScaledPoint, Scheme, TowerPlan, ALPHA_MIN};
pub use expcone::{soc_exp_upper, SocApproxConfig};
pub use surrogates::{surrogate_f1, surrogate_f2, surrogate_f3, surrogate_f4_upper};
