//! Sampling of random interlacements in a window, coupled over levels.

mod dump;
mod levels;
mod occupancy;
mod soup;

pub use dump::{read_soups, write_soups, DUMP_VERSION};
pub use levels::{LevelMap, SoupSummary};
pub use occupancy::{
    cluster_report, occupancy_at_level, origin_reach, ClusterReport, OccupancyGrid,
};
pub use soup::{
    sample_soup, SoupConfig, SoupSampler, Trajectory, TrajectorySoup, DEFAULT_CAP_SAMPLES,
    DEFAULT_GUARD_FACTOR,
};
