//! Clustered channel synthesis, array errors and rank diagnostics.

mod generate;
mod geometry;
mod impairments;
mod rank;

pub use generate::{
    generate_channel, ChannelParams, ChannelRealization, ClusterPowerLaw, Normalization,
    PathComponent, RealizationDocument, CENTER_RETRIES,
};
pub use geometry::{
    ula_response, uspa_response, uspa_y_factor, uspa_z_factor, ArrayGeometry, ArrayKind,
};
pub(crate) use geometry::{isqrt, linear_steering, planar_steering};
pub use impairments::{apply_impairments, impairment_profile, ArrayErrors, ImpairmentProfile};
pub use rank::energy_capture_rank;
