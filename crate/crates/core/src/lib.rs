//! A moving-object database over linear-referenced road networks.
//!
//! Positions are expressed as measures along routes rather than planar
//! coordinates. The crate covers network construction with turn
//! restrictions, turn-aware shortest paths, the moving-point algebra, a
//! persistent store, a synthetic trip generator, and the MOQL query
//! language.

pub mod generator;
pub mod geometry;
pub mod moql;
pub mod motion;
pub mod network;
pub mod routing;
pub mod store;
