//! Reconstruction of 2D floorplans from streams of stereo support points.
//!
//! The pipeline turns per-frame sparse stereo measurements into a persistent
//! map of plane landmarks, then periodically selects a subset of candidate
//! wall segments that best explains the map, by solving a small binary linear
//! program over fitting, coverage, and complexity energies.
//!
//! Modules follow the data flow:
//!
//! * [`stereo`] — support points and disparity triangulation
//! * [`mesh`] — Delaunay triangulation of support points and 3D pruning
//! * [`extraction`] — per-frame plane features via clustering in plane
//!   parameter space ([`pps`], [`dbscan`]) and RANSAC fitting ([`ransac`])
//! * [`landmarks`] — plane landmark lifecycle, map maintenance, map merging
//! * [`floorplan`] — wall candidate generation and energy-based selection
//! * [`blp`] — the exact 0/1 branch-and-bound solver used for selection
//! * [`scenegen`] — synthetic scene and frame-stream generation
//! * [`eval`] — floorplan-versus-ground-truth error reporting
//! * [`pipeline`] — session orchestration shared by the CLI and tests
//! * [`io`], [`config`], [`svg`] — file formats

pub mod blp;
pub mod config;
pub mod dbscan;
pub mod eval;
pub mod extraction;
pub mod floorplan;
pub mod geometry;
pub mod io;
pub mod landmarks;
pub mod mesh;
pub mod pipeline;
pub mod pps;
pub mod ransac;
pub mod scenegen;
pub mod stereo;
pub mod svg;
