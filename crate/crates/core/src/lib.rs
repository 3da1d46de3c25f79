//! Ruling strategies for repeated games: average distributions, ruling
//! vectors, relation detection, strategy synthesis and verification.

pub mod cli;
pub mod dynamics;
pub mod game;
pub mod linalg;
pub mod relation;
pub mod ruling;
pub mod schedule;
pub mod simulate;
pub mod strategy;
