//! Wavelet frames on the n-sphere.
//!
//! The crate builds zonal and directional wavelet families from exponential
//! spectral profiles, computes their per-degree admissibility function
//! `beta(l)` both by scale quadrature and in closed form, discretizes the scale
//! parameter on a geometric grid and the rotation group SO(n+1) on nested
//! sphere partitions, and checks the resulting frame inequalities on random
//! band-limited fields.
//!
//! Module map:
//!
//! * [`special_functions`]: Gegenbauer polynomials, norms, Funk-Hecke
//!   constants, Gauss-Gegenbauer quadrature.
//! * [`harmonics`]: hyperspherical harmonics, product quadrature grids,
//!   analysis and synthesis.
//! * [`wavelet_spectra`]: spectral profiles, directional wavelets, `beta(l)`.
//! * [`scale_grid`]: geometric scale grids and the semi-continuous deviation.
//! * [`rotation_grid`]: sphere partitions and Euler-angle rotation grids.
//! * [`transform`]: the wavelet transform by quadrature and the energy oracle.
//! * [`frame_verify`]: end-to-end certification reports.
//! * [`output`]: CSV/JSON file formats.

pub mod error;
pub mod exec;
pub mod frame_verify;
pub mod harmonics;
pub mod output;
pub mod rotation_grid;
pub mod scale_grid;
pub mod special_functions;
pub mod transform;
pub mod wavelet_spectra;

pub use error::{Error, Result};
pub use exec::Exec;
pub use num_complex::Complex64;
