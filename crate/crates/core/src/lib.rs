pub mod operator;
pub mod engine;
pub mod zoo;
pub mod coherent;
pub mod report;
