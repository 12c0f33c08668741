pub mod graph;
pub mod treedec;
pub mod treenav;
