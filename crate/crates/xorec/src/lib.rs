//! XOR-based Reed-Solomon erasure coding built on an optimizing compiler
//! for straight-line XOR programs.

pub mod codec;
pub mod compress;
pub mod exec;
pub mod fuse;
pub mod gf256;
pub mod schedule;
pub mod slp;
