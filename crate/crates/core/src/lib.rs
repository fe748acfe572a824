pub mod numerics;
pub mod uvc;
pub mod geometry;
pub mod engine;
pub mod strategies;
pub mod oracles;
pub mod harness;
