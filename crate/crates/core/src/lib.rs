pub mod alexander;
pub mod cohomology;
pub mod deform;
pub mod error;
pub mod groupring;
pub mod knotio;
pub mod linalg;
pub mod metabel;

pub use error::{Error, Result};
pub use groupring::{FreeRingElement, GeneratorImages, Word};
pub use knotio::{PDCode, Presentation};
