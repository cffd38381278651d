pub mod align;
pub mod cli;
pub mod cluster;
pub mod engine;
pub mod scoring;
pub mod seqio;
pub mod striped;
pub mod topk;
