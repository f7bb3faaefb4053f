//! A double Dirichlet series built from quadratic twists of a holomorphic
//! newform, with its local parts given by the Chinta-Gunnells function of
//! type A3.
//!
//! Layers, bottom up:
//! - [`exact`]: rational functions in `z1, z2, z3, u` over Q, series expansion
//! - [`weyl_cg`]: the Weyl group action, `g_{A3}`, correction polynomials
//! - [`characters`] and [`special`]: quadratic characters, Dirichlet L, Gamma
//! - [`newforms`]: coefficient tables (two eta products built in, CSV input)
//! - [`lfuncs`]: twisted L-values, root numbers, symmetric square
//! - [`mds`]: three representations of `Z(s, w)`, scattering matrices, checks
//! - [`moment`]: the smoothed first moment and the least nonvanishing twist
//!
//! Sums run through [`Exec`], which is rayon-backed with the `parallel`
//! feature and sequential otherwise; both give identical floats.

pub mod characters;
pub mod exact;
pub mod lfuncs;
pub mod mds;
pub mod moment;
pub mod newforms;
pub mod par;
pub mod special;
pub mod weyl_cg;
pub use par::Exec;
