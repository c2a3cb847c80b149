//! Path distributions, the matrices `G_N` / `G_tau` they induce, spectral
//! quantities, distribution design and SDP export.

mod design;
mod distribution;
mod sdpa;
mod spectral;

pub use design::{design_max_lambda2, design_max_sigma, Design, StepRule};
pub use distribution::{dist_inverse_lipschitz, dist_lipschitz_power, dist_uniform, PathDistribution};
pub use sdpa::{build_sdp, export_sdp, lambda2_feasible_point, sidecar_path, SdpKind, SdpaEntry, SdpaProblem};
pub use spectral::{
    assemble_g_tau, assemble_matrix, compute_sigma_g, g_path, lambda2, lambda2_pair, path_quadratic_form,
    sigma_g_pair, GTau,
};
