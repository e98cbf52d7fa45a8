pub mod annotate;
pub mod category;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod range;
pub mod render;
pub mod scene;
pub mod seed;
pub mod sim;
pub mod templates;

pub use category::ClothCategory;
pub use error::{Error, Result};
