//! Enumeration and analysis of small chemical reaction networks.

pub mod cache;
pub mod concrete;
pub mod constraints;
pub mod crn;
pub mod dynamics;
pub mod enumerate;
pub mod equilibria;
pub mod error;
pub mod fm;
pub mod format;
pub mod linexpr;
pub mod par;
pub mod pwl;
pub mod search;
pub mod seesaw;

pub use constraints::ClassSpec;
pub use crn::{isomorphic, Crn, Reaction, SpeciesId, SpeciesMultiset};
pub use error::CrnError;
