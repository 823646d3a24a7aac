pub mod analyzer;
pub mod blocks;
pub mod cli;
pub mod component;
pub mod diagram;
pub mod search;
pub mod simulator;
pub mod symbolic;
pub mod translator;
