//! Reduced phase dynamics on the circle driven by a shared noise path.

pub mod path;
pub mod sde;
pub mod squeeze;
pub mod sync;

pub use path::{rescale_noise, rotate_pair, standard_normal, NoiseCursor, NoisePath};
pub use sde::{
    sync_time, simulate, simulate_steps, tangent_lyapunov_mc, torus_distance, wrap_unit,
    LyapunovEstimate, Scheme, SdeKernel, SyncOutcome, TorusEnsemble, Trajectory,
};
pub use squeeze::{controlled_squeeze, SqueezeOptions, SqueezeReport};
pub use sync::{sync_scaling_scan, SyncRow, SyncScan, SyncScanConfig};
