//! Margin estimation and oracles.

pub mod estimate;
pub mod gradient;
pub mod oracle;

pub use estimate::{estimate_margin, MarginConfig, MarginEstimate};
pub use gradient::{margin_grad_scalar, MarginGradient};
pub use oracle::{
    brute_force_margin, eps_star_of_rho, grid_max_loss, level_set_radius, level_set_radius_polished,
    linear_margin_analytic,
    BallGrid,
};
