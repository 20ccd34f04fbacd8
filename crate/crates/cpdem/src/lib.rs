//! Neural energy-minimization solver for elasticity with constitutive
//! parameters as network inputs.
//!
//! The solver trains a displacement network `u(X, eta)` that takes both
//! spatial coordinates and material parameters (Young's modulus, Poisson's
//! ratio, Mooney-Rivlin constants) and minimizes the expected total potential
//! energy over a bounded material-parameter box. A trained network answers
//! queries for unseen material realizations with a single forward pass and
//! can be fine-tuned for a specific realization with a few quasi-Newton
//! steps while the encoder weights stay frozen.
//!
//! Module map:
//! - [`autodiff`]: forward-mode tangent bundles nested inside a reverse-mode
//!   gradient tape; exact derivatives of energies that contain spatial
//!   derivatives of the network output.
//! - [`network`]: dual-encoder architecture (coordinate encoder, material
//!   encoder, manifold network), flat parameter vector, freeze masks.
//! - [`constitutive`]: small-strain and finite-strain kinematics, linear
//!   elastic / Neo-Hookean / Mooney-Rivlin energy densities, stress.
//! - [`domain`]: collocation grids, quadrature, boundary segments, hard
//!   Dirichlet enforcement by ansatz multiplication.
//! - [`loss`]: the potential-energy loss and its expectation over sampled
//!   material parameters.
//! - [`optim`]: Adam-then-L-BFGS training and fast fine-tuning.
//! - [`oracle`]: independent reference solvers (analytical bar, 1D/2D finite
//!   elements, Newton solver for the finite-strain bar) and error metrics.

pub mod autodiff;
pub mod constitutive;
pub mod domain;
pub mod loss;
pub mod network;
pub mod optim;
pub mod oracle;
