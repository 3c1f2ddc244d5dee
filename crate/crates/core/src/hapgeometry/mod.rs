//! Events of spacetimehap (time, space, hap), their separation classes,
//! causal graphs and world sections.

mod causal;
mod event;
mod worlds;

pub use causal::{build_causal_graph, transitive_reduction, CausalGraph};
pub use event::{classify, classify_is_lorentz_invariant_check, HapEvent};
pub use worlds::{
    nearest_counterfactual_worlds, same_world, synchronize, tag_event, world_section, Actuality,
    Euclidean, NearestWorlds, WorldDistance, WorldId, WorldLine, WORLD_TOLERANCE,
};
