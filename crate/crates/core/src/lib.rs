pub mod error;
pub mod statcore;
pub mod dgm;
pub mod missingness;
pub mod analysis;
pub mod impute;
pub mod harness;
