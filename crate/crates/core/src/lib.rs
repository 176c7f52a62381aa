//! Simulation of classically entangled paraxial beams: a laser beam's
//! transverse mode, path and polarization treated as three coupled qubits.
//!
//! The crate reproduces the transfer of an arbitrary polarization state onto
//! the first-order transverse mode of the same beam, using a non-separable
//! path/transverse-mode state as the shared resource:
//!
//! - [`algebra`]: the eight-dimensional workspace, gates and projections
//! - [`elements`]: optical elements compiled into workspace operators
//! - [`bench`]: the `.bench` text format for optical-table layouts
//! - [`render`]: Laguerre-Gaussian fields on grids, overlaps, lobe orientation
//! - [`teleport`]: the protocol stages, output ports and polarization sweep
//! - [`verify`]: the self-check suite run by `spinorbit verify`
//!
//! Rendering and batch evaluation use rayon when the `parallel` feature is on
//! (the default); [`par::Execution`] selects the strategy per call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bench;
pub mod elements;
pub mod image_io;
pub mod par;
pub mod render;
pub mod report;
pub mod teleport;
pub mod verify;
