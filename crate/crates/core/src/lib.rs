pub mod bench;
pub mod dense;
pub mod dist;
pub mod geometry;
pub mod hif;
pub mod krylov;
