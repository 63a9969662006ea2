//! Grids, fields, and the cosine-spectral toolbox.
//!
//! The domain is a rectangle `Omega = (0,L1) x (0,L2)` (or an interval in 1-d)
//! and every field lives on the midpoint grid `x_i(j) = (j + 1/2) h_i` with
//! `h_i = L_i / n_i`. The natural basis for no-flux boundary conditions is the
//! tensor cosine family
//!
//! ```text
//! e_k(x) = prod_i norm_i(k_i) cos(k_i pi x_i / L_i),   k_i = 0..n_i-1,
//! ```
//!
//! which diagonalizes the Neumann Laplacian with eigenvalues
//! `lambda_k = sum_i (k_i pi / L_i)^2`. Fractional powers act per mode as
//! `lambda_k^sigma` with the `k = 0` mode annihilated.
//!
//! Normalization convention (fixed, documented here once): spectral
//! coefficients are taken against the *L2(Omega)-orthonormal* eigenfunctions,
//! i.e. `norm_i(0) = 1/sqrt(L_i)` and `norm_i(k) = sqrt(2/L_i)` for `k >= 1`.
//! With midpoint quadrature this makes every inner-product identity literal:
//! `(u, w)_h = sum_k u_hat_k w_hat_k` exactly for grid fields (discrete
//! Parseval), and the `k = 0` coefficient equals `mean(u) * sqrt(|Omega|)`.
//! Differentiation pairs each cosine mode with the matching orthonormal sine
//! mode `sqrt(2/L) sin(k pi x / L)`, so gradients and divergences are exact on
//! the span of the basis and adjoint to each other under the same quadrature.

mod grid;
mod ops;
mod transform;

pub use grid::{Grid, RealField, VectorField};
pub use ops::{
    apply_neg_laplacian_power, dealias, divergence, eigenfunction, eigenvalue, gradient,
    hs_seminorm, inner_product, l2_norm, lp_norm, mean, project_modes, two_thirds_cutoff,
};
pub(crate) use ops::{divergence_dealiased, for_each_mode};
pub use transform::{dct_forward, dct_inverse, SpectralCoeffs};
