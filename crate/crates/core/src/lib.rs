//! Tabular representation-dynamics laboratory.
//!
//! Exact MDP machinery, continuous-time learning flows for values and
//! representations, spectral feature bases of transition operators, and
//! subspace geometry, plus scripted experiments that write reproducible
//! report bundles.
//!
//! ```
//! use repdyn::mdp::{build_chain_mdp, exact_value, induce, Policy};
//!
//! let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0).unwrap();
//! let chain = induce(&mdp, &Policy::uniform(30, 2), 0.9).unwrap();
//! let v = exact_value(&chain).unwrap();
//! assert_eq!(v.len(), 30);
//! ```

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod gridworld;
pub mod linalg;
pub mod mdp;
pub mod spectral;
pub mod svg;

pub use error::{Error, Result};
pub use mdp::{MarkovChain, Mdp, Policy, PolicyIterationTrace};
pub use spectral::{PrincipalAngles, SpectralDecomposition, Subspace};
