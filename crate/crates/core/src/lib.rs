//! Virtual ODMR scanning spin microscope.
//!
//! A photoluminescent nanoprobe sits at the apex of a scanning tip above a
//! sample of point spins. The sample's dipole fields shift the probe's
//! magnetic-resonance condition; the shift is read out optically as a change
//! of photoluminescence (PL) while either the permanent field or the rf
//! frequency is swept. This crate provides:
//!
//! * [`field`]: dipole fields, superposition and the Zeeman resonance relation,
//! * [`probe`]: the steady-state rate-equation model of the probe's PL,
//! * [`spectrum`] and [`fit`]: sweep synthesis, shot noise and Lorentzian fitting,
//! * [`scanner`]: raster scans, lateral resolution and detectability reports,
//! * [`scene`]: strict JSON scene configuration.
//!
//! All quantities are SI internally (meters, teslas, hertz, J/T).

pub mod constants;
pub mod error;
pub mod field;
pub mod fit;
pub(crate) mod linalg;
pub mod probe;
pub mod rng;
pub mod scanner;
pub mod scene;
pub mod spectrum;
pub mod vec3;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use field::{dipole_field, total_field, zeeman_frequency, Sample, SpinDipole};
pub use fit::{fit_lorentzian, resonance_shift, FitResult};
pub use probe::{
    odmr_contrast, pl_intensity, rf_mixing_rate, steady_state, LevelScheme, LinewidthPreset,
    OdmrLine, Populations, Probe,
};
pub use scanner::{
    detectability_report, detectability_report_with, lateral_resolution, scan, sensing_position,
    DetectabilityOptions, DetectabilityReport, Modality, ModalityKind, Observable, ProbeGeometry,
    ScanImage, ScanSpec, SensingPoint,
};
pub use scene::{parse_scene, parse_scene_file, Scene, SceneConfig, SceneError, Violation};
pub use spectrum::{add_shot_noise, sweep, NoiseSpec, Spectrum, SweepMode, SweepSpec};
pub use vec3::Vec3;
