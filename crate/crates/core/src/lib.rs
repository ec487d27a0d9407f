pub mod cli;
pub mod complex;
pub mod diffph;
pub mod dynamics;
pub mod error;
pub mod persistence;
pub mod transport;
