//! The iterative self-supervised protocol: scripted bootstrap collection,
//! alternating on-policy collection and warm-start retraining, and
//! waypoint-course evaluation.

mod bootstrap;
mod campaign;
mod config;
mod waypoints;

pub use bootstrap::{bootstrap_collect, home_position};
pub use campaign::{round_dir, run_campaign, Campaign, Collection, RoundReport};
pub use config::{BootstrapConfig, CampaignConfig};
pub use waypoints::{evaluate_waypoints, LegOutcome, WaypointReport};
