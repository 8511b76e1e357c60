pub mod encoding;
pub mod error;
pub mod fisher;
pub mod haar;
pub mod linalg;
pub mod rng;
pub mod state;
pub mod stats;
pub mod tolerance;
pub mod typicality;
