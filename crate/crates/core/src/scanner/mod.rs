//! Raster scanning of the probe over the sample.

mod geometry;
mod image;
mod report;
mod resolution;
mod scan;

pub use geometry::{sensing_position, Modality, ModalityKind, ProbeGeometry, SensingPoint};
pub use image::{ImageMetadata, ScanImage};
pub use report::{
    detectability_report, detectability_report_with, DetectabilityOptions, DetectabilityReport,
};
pub use resolution::lateral_resolution;
pub use scan::{pixel_coordinates, scan, Observable, ScanSpec};
