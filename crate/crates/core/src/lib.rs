//! Exact desk-scale workbench for forbidden-agreement problems on codes in `[m]^n`.
//!
//! A family of codes is `(t-1)`-avoiding when no two members agree on exactly
//! `t - 1` coordinates. The modules here build such families, measure them
//! exactly, check the analytic and structural inequalities used to bound
//! them, and find the true extremal families on small boxes by exhaustive
//! search.

pub mod analysis;
pub mod bitset;
pub mod codes;
pub mod compression;
pub mod corpus;
pub mod error;
pub mod exact;
pub mod measure;
pub mod report;
pub mod search;
pub mod structure;

pub use codes::{agr, agr_on, Code, CodeBox, Family, RestrictMode, Restriction};
pub use error::{Error, Result};
pub use exact::Q;
pub use measure::{Gluing, ProductMeasure};
pub use report::Report;
