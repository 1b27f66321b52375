pub mod analysis;
pub mod cli;
pub mod controller;
pub mod geometry;
pub mod sim;
