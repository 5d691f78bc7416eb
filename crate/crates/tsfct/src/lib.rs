//! Frequency-domain chirplet analysis of multicomponent signals whose group
//! delays cross.
//!
//! The transform lifts a spectrum into a (time, frequency, GDD) volume where
//! modes with crossing group delays separate along the GDD axis. On top of it
//! the crate provides reassignment operators that estimate group delay and
//! GDD per cell, time-reassigned synchrosqueezing, Rényi-entropy window
//! selection, ridge extraction, mode recovery by solving a small linear
//! system per frequency, and the quantities that bound each estimate.
//!
//! ```
//! use tsfct::{Benchmark, GammaGrid, GaussianWindow, fct_point};
//!
//! let x = Benchmark::PaperX.signal();
//! let w = GaussianWindow::new(25.0).unwrap();
//! let d = fct_point(&x, 0.2, 100.0, 2e-4, &w, 0);
//! assert!(d.norm() > 0.0);
//! # let _ = GammaGrid::for_record(&x).unwrap();
//! ```

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod fct;
pub mod fgsso;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod quadrature;
pub mod reassign;
pub mod ridges;
pub mod signals;
pub mod squeeze;
pub mod windows;

pub use error::{Error, Result};
pub use fct::{fct_grid, fct_point, BoundaryBand, FctOptions, FctPlan};
pub use grid::{Axis, FrequencyBins, GammaGrid, GridKind, TfgddGrid};
pub use pipeline::Analysis;
pub use reassign::{reference_functions, ReassignmentField};
pub use ridges::{extract_ridges, Ridge, RidgeOptions, RidgeSet};
pub use signals::{Benchmark, ModeSpec, SampledSignal, Spectrum};
pub use squeeze::{squeeze, squeeze_streaming, tsfct, TfrGrid, TsfctOptions};
pub use windows::GaussianWindow;
