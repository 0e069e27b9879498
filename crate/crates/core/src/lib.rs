pub mod billiard;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod invariants;
pub mod orbits;
pub mod quad;
pub mod roots;
pub mod special;
pub mod table;

pub use error::{Error, Result};
