//! JSON reports and the per-port rendering they describe. Every report
//! carries `schema: 1`. Image paths are file names relative to the report.

use serde::{Deserialize, Serialize};

use crate::algebra::{Pair, C64};
use crate::image_io::GrayImage;
use crate::par::{self, Execution};
use crate::render::{hg_orientation, render_transverse_with, BeamParams, FieldGrid, GridSpec, Orientation, RenderError};
use crate::teleport::{PortOutput, ProtocolRun, SweepPoint, WaveplateSettings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl From<&Pair> for PairJson {
    fn from(v: &Pair) -> Self {
        PairJson { re: [v[0].re, v[1].re], im: [v[0].im, v[1].im] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputJson {
    pub alpha: ComplexJson,
    pub beta: ComplexJson,
    pub bloch: [f64; 3],
    /// Plate angles in degrees that prepare this input from ê_H.
    pub qwp_deg: Option<f64>,
    pub hwp_deg: Option<f64>,
}

impl InputJson {
    pub fn new(run: &ProtocolRun, plates: Option<WaveplateSettings>) -> Self {
        InputJson {
            alpha: run.input.alpha.into(),
            beta: run.input.beta.into(),
            bloch: run.input.bloch(),
            qwp_deg: plates.map(|p| p.qwp.to_degrees()),
            hwp_deg: plates.map(|p| p.hwp.to_degrees()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortJson {
    pub port: String,
    pub correction: String,
    /// Unnormalized port amplitudes, overall ½ included.
    pub amplitude: PairJson,
    pub normalized: PairJson,
    pub weight: f64,
    pub corrected_fidelity: f64,
    pub uncorrected_fidelity: f64,
    /// `null` when the pattern has no defined lobe axis.
    pub orientation_deg: Option<f64>,
    pub power: f64,
    pub peak_intensity: f64,
    pub image: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportReport {
    pub schema: u32,
    pub command: String,
    /// `"built-in"` or the bench file the circuit came from.
    pub circuit: String,
    pub input: InputJson,
    pub grid: GridSpec,
    pub beam: BeamParams,
    pub ports: Vec<PortJson>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntryJson {
    pub index: usize,
    pub input: InputJson,
    pub port_0h: PortJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: u32,
    pub command: String,
    /// The inputs are a great-circle reconstruction through the H, D and L
    /// anchors, not measured plate settings.
    pub reconstructed_sweep: bool,
    pub grid: GridSpec,
    pub beam: BeamParams,
    pub points: Vec<SweepEntryJson>,
    pub montage: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormsJson {
    /// `|a+|² + |a−|²`.
    pub coefficients: f64,
    /// `∫∫ |field|²` on the grid.
    pub power: f64,
    pub peak_intensity: f64,
}

/// Written next to every image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub schema: u32,
    pub image: String,
    pub grid: GridSpec,
    pub beam: BeamParams,
    pub coefficients: PairJson,
    pub orientation_deg: Option<f64>,
    pub norms: NormsJson,
}

/// A rendered transverse field with its measurements.
#[derive(Debug, Clone)]
pub struct RenderedField {
    pub coefficients: Pair,
    pub grid: FieldGrid,
    pub orientation: Orientation,
    pub power: f64,
    pub peak_intensity: f64,
    pub image: GrayImage,
}

impl RenderedField {
    pub fn sidecar(&self, image: &str, spec: &GridSpec, beam: &BeamParams) -> ImageSidecar {
        ImageSidecar {
            schema: SCHEMA_VERSION,
            image: image.to_string(),
            grid: *spec,
            beam: *beam,
            coefficients: (&self.coefficients).into(),
            orientation_deg: self.orientation.degrees(),
            norms: NormsJson {
                coefficients: self.coefficients.norm_squared(),
                power: self.power,
                peak_intensity: self.peak_intensity,
            },
        }
    }
}

pub fn render_field(
    coefficients: &Pair,
    beam: &BeamParams,
    spec: &GridSpec,
    exec: Execution,
) -> Result<RenderedField, RenderError> {
    let grid = render_transverse_with(coefficients, beam, spec, exec)?;
    let intensity = grid.intensity();
    let peak_intensity = intensity.iter().copied().fold(0.0, f64::max);
    Ok(RenderedField {
        coefficients: *coefficients,
        orientation: hg_orientation(&grid),
        power: grid.power_with(exec),
        peak_intensity,
        image: GrayImage::from_intensity(grid.nx, grid.ny, &intensity),
        grid,
    })
}

/// Renders the four port fields (with their ½ amplitude) of a run.
pub fn render_ports(
    run: &ProtocolRun,
    beam: &BeamParams,
    spec: &GridSpec,
    exec: Execution,
) -> Result<Vec<RenderedField>, RenderError> {
    run.ports.iter().map(|p| render_field(&p.transverse, beam, spec, exec)).collect()
}

/// Renders port 0H for every sweep run. Points are spread over the pool
/// and each image is rendered sequentially.
pub fn render_sweep(
    runs: &[ProtocolRun],
    beam: &BeamParams,
    spec: &GridSpec,
    exec: Execution,
) -> Result<Vec<RenderedField>, RenderError> {
    par::map(runs, exec, |run| render_field(&run.ports[0].transverse, beam, spec, Execution::Sequential))
        .into_iter()
        .collect()
}

pub fn port_json(run: &ProtocolRun, k: usize, rendered: Option<&RenderedField>, image: Option<String>) -> PortJson {
    let port: &PortOutput = &run.ports[k];
    PortJson {
        port: port.port.to_string(),
        correction: port.correction.name().to_string(),
        amplitude: (&port.transverse).into(),
        normalized: (&port.normalized().unwrap_or_else(Pair::zeros)).into(),
        weight: port.weight,
        corrected_fidelity: run.corrected_fidelity[k],
        uncorrected_fidelity: run.uncorrected_fidelity[k],
        orientation_deg: rendered.and_then(|r| r.orientation.degrees()),
        power: rendered.map_or(0.0, |r| r.power),
        peak_intensity: rendered.map_or(0.0, |r| r.peak_intensity),
        image,
    }
}

pub fn sweep_entry(point: &SweepPoint, run: &ProtocolRun, plates: Option<WaveplateSettings>, rendered: Option<&RenderedField>, image: Option<String>) -> SweepEntryJson {
    SweepEntryJson { index: point.index, input: InputJson::new(run, plates), port_0h: port_json(run, 0, rendered, image) }
}
