//! Unit gadget, gadget chain, seeding variants and parameter validation.

mod chain;
mod params;
mod seeded;
mod unit;
mod validate;

pub use chain::{
    build_chain, build_chain_in, build_gadgets, place_gadget, Center, Gadget, Instance,
    SEED_I_FRACTION, SEED_J_GAP,
};
pub use params::{ConstructionParams, GadgetWeights, Variant, REFERENCE_DELTA, REFERENCE_LAMBDA};
pub use seeded::{
    build_chain_data_point_seeded, build_chain_data_point_seeded_in, check_seeded_reaches_morning,
    BaselineProjection,
};
pub use unit::{
    build_unit_gadget, epsilon_bound_terms, epsilon_upper_bound, growth_factor, next_radius,
    stretch, unit_heights, UnitGadget, CLUSTER_M, CLUSTER_N, CLUSTER_S, STRETCH_LABELS,
};
pub use validate::{
    validate_construction, validate_params, Check, CheckKind, DerivedValues, ValidationReport,
    IDENTITY_TOLERANCE, REFERENCE_OUTER_RADIUS,
};

/// Builds the instance for `params` in the requested variant.
pub fn build(params: &ConstructionParams, variant: Variant) -> crate::error::Result<Instance> {
    match variant {
        Variant::MorningMeans => build_chain(params),
        Variant::DataPoints => build_chain_data_point_seeded(params),
    }
}
