pub mod api;
pub mod cli;
pub mod description;
pub mod error;
pub mod jobs;
pub mod ops;
pub mod store;
