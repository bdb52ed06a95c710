//! Persistent homology of grayscale images under the two cubical models.
pub mod complex;
pub mod cubical;
pub mod duality;
pub mod engine;
pub mod image;
pub mod persistence;
pub mod transform;
pub mod verify;
