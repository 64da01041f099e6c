pub mod algebra;
pub mod cluster;
pub mod cohort;
pub mod diagnosis;
pub mod encode;
pub mod pipeline;
pub mod rules;
pub mod segment;
pub mod synth;
pub mod traces;
