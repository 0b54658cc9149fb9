//! Motion graph over free space, length-optimal A* paths, spatial
//! train/validation/test regions and the supervised dataset built from them.

mod astar;
mod dataset;
mod graph;
mod regions;

pub use astar::{astar, astar_with_stats, OptimalPath, Region, SearchStats};
pub use dataset::{decode_paths, encode_paths, label_dataset, load_paths, save_paths, Dataset, LabeledSample};
pub use graph::{build_graph, build_graph_in, MapGraph, MoveCost};
pub use regions::{partition_regions, sample_paths, RegionMap, TaskSampler, FLIGHT_LEVEL};
