pub mod bench;
pub mod cab;
pub mod cli;
pub mod detector;
pub mod edge;
pub mod evaluation;
pub mod geometry;
pub mod pnm;
pub mod raster;
pub mod synth;
