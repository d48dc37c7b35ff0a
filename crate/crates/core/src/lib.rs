pub mod cost_model;
pub mod gf;
pub mod ratio;
pub mod flow_graph;
pub mod tradeoff;
pub mod codec;
pub mod sim;
