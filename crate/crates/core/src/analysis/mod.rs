//! Ground states, the strip energy curve, decay fits and splitting diagnostics.

pub mod decay;
pub mod diagnostics;
pub mod ground_state;
pub mod shooting;
pub mod theta;

pub use decay::{decay_fit, DecayFit};
pub use diagnostics::{
    brezis_lieb_defect, cube_mass_profile, embedding_constant, mass_lower_bound, norm_bound, sign_change,
    CubeProfile,
};
pub use ground_state::*;
pub use shooting::{shooting_ground_state, ShootingConfig, ShootingSolution};
pub use theta::{theta_curve, Monotonicity, ThetaConfig, ThetaCurve, ThetaSample};
