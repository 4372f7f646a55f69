#![no_std]
extern crate alloc;

pub mod analyzer;
pub mod diff;
pub mod groebner;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod prolong;
pub mod randomize;
pub mod system;

pub use diff::PointAssignment;
pub use model::{Model, ModelError};
pub use poly::{DiffVar, Monomial, Poly, RatFunc, VarKind};
