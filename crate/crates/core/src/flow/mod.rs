//! Level-set flow with normal velocity `H − h` on uniform grids, the
//! avoidance monitor for fixed obstacles and flow of an `h`-mean-convex
//! region to its limit.

mod limit;
mod monitor;
mod state;

pub use limit::{
    flow_to_limit, rows_to_csv, FlowLimit, FlowOptions, FlowRow, HMeanConvexRegion, MEAN_CONVEX_REL,
};
pub use monitor::{avoidance_monitor, interface_distance, AvoidanceMonitor, AvoidanceReport};
pub use state::{FlowState, StepStats, BAND_CELLS};
