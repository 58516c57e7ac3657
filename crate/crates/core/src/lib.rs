pub mod batch;
pub mod blocks;
pub mod cli;
pub mod detect;
pub mod dom;
pub mod matching;
pub mod metrics;
pub mod mock;
pub mod model;
pub mod render;
pub mod synth;
pub mod winrate;
