//! Paired clean/distorted through-water scene generator with sun-glint
//! masks, image quality metrics and DSM depth-bin evaluation.
//!
//! The pipeline samples scene parameters ([`params`]), builds a procedural
//! seabed ([`seabed`]) and a wave surface ([`waves`]), and ray traces both a
//! flat-water and a wavy-water view of the same scene ([`render`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bathy;
pub mod camera;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod glint;
pub mod metrics;
pub mod noise;
pub mod optics;
pub mod params;
pub mod render;
pub mod rng;
pub mod seabed;
pub mod waves;

pub use error::{Error, Result};
pub use params::{metadata_json, parse_metadata_json, sample_scene, GeneratorConfig, SceneParams};
pub use render::{render_pair, ImagePair, RenderOptions};
