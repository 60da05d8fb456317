pub mod gen;
pub mod graph;
pub mod program;
pub mod pulltab;
pub mod represented;
pub mod rewrite;
pub mod strategy;
pub mod verify;
