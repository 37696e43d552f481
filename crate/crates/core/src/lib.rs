//! Planar maps, matching pairs and site/bond duality with Monte Carlo
//! percolation on planar lattices, hyperbolic tilings, trees and ladders.

pub mod dsu;
pub mod duality;
pub mod experiments;
pub mod format;
pub mod graph;
pub mod map;
pub mod matching;
pub mod percolation;
pub mod rng;
pub mod tilings;

pub use map::{CombinatorialMap, DartId, EdgeId, Face, FaceId, Lift, MapError, MapParts, Surface, VertexId};
