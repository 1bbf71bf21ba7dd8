//! Automatic segmentation of moving objects from a pair of images taken from
//! different positions at different times.
//!
//! The pipeline restricts dense patch correspondences to salient regions,
//! factors the resulting motion vectors with a 2-column SVD to separate camera
//! motion from object motion, groups the dynamic points into `K` objects,
//! converts each group into an axis-aligned box via its convex hull and
//! minimum-area rectangle, and finally segments each object with GrabCut.

pub mod cluster;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod grabcut;
pub mod imageio;
pub mod maxflow;
pub mod motion;
pub mod correspondence;
pub mod pipeline;
pub mod saliency;
mod stats;

pub use error::{Error, Result};
pub use imageio::{BinaryMask, ImageLab, ImageRgb};
pub use correspondence::{CorrParams, CorrespondenceField, Match, MatchSet};
pub use evaluation::{generate_scene, jaccard, EvalReport, EvalRow, SceneSpec};
pub use geometry::{Aabb, OrientedRect, Polygon};
pub use grabcut::{run_grabcut, GrabCutParams};
pub use maxflow::{max_flow, CutResult, FlowNetwork};
pub use motion::MotionMatrix;
pub use pipeline::{run_pipeline, Outcome, PipelineConfig, PipelineOutput};
pub use saliency::{SaliencyMap, SaliencyParams};
pub use stats::{median, otsu_lowest_threshold, otsu_threshold};
