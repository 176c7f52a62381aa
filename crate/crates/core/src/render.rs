//! First-order Laguerre-Gaussian fields sampled on transverse grids, plus
//! the measurements taken on those grids (overlaps and lobe orientation).
//!
//! Grid coordinates `(ξ, η)` are reduced: measured from the path axis in
//! units of the beam width `w(z̃)`. Pixel `(0, 0)` is the top-left corner,
//! storage is row-major, and η increases upward.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Pair, Path, Pol, Supermode, Transverse, C64};
use crate::par::{self, Execution};

/// Tolerance for quantities integrated on a grid.
pub const GRID_TOL: f64 = 1e-3;

/// Relative moment anisotropy below which a pattern has no defined axis.
pub const ISOTROPY_TOL: f64 = 1e-6;

/// Sign relating the reported lobe angle to the raw `(ξ, η)` moment angle.
/// Fixed so that a left-circular input shows its lobes at −45° on port 0H.
pub const ORIENTATION_HANDEDNESS: f64 = -1.0;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("grid must have at least one pixel in each direction (got {nx}x{ny})")]
    EmptyGrid { nx: usize, ny: usize },
    #[error("grid extent must be positive and finite (got {0})")]
    BadExtent(f64),
    #[error("path separation {d_reduced:.3} beam widths is below the non-overlap bound of {min}")]
    Overlap { d_reduced: f64, min: f64 },
    #[error("grids differ in size or coordinates")]
    GridMismatch,
    #[error("invalid beam parameter: {0}")]
    BadBeam(&'static str),
}

/// Which sign of orbital angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Charge {
    Plus,
    Minus,
}

/// `(2/√π)(ξ ± iη) exp(−[(ξ² + η²)(1 + i z̃) − i arctan z̃])`.
pub fn lg_field(charge: Charge, xi: f64, eta: f64, zt: f64) -> C64 {
    let sign = match charge {
        Charge::Plus => 1.0,
        Charge::Minus => -1.0,
    };
    let r2 = xi * xi + eta * eta;
    let exponent = C64::new(-r2, -r2 * zt + zt.atan());
    C64::new(2.0 / PI.sqrt(), 0.0) * C64::new(xi, sign * eta) * exponent.exp()
}

/// Minimum path separation, in beam widths, for the two paths not to overlap.
pub const MIN_SEPARATION: f64 = 8.0;

/// Physical beam parameters, all lengths in the same unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Beam waist.
    pub w0: f64,
    /// Rayleigh distance `k w0² / 2`.
    pub z0: f64,
    /// Evaluation plane.
    pub z: f64,
    /// Separation between the two path axes.
    pub d: f64,
}

impl BeamParams {
    pub fn new(w0: f64, z0: f64, z: f64, d: f64) -> Result<Self, RenderError> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(RenderError::BadBeam("waist must be positive"));
        }
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(RenderError::BadBeam("Rayleigh distance must be positive"));
        }
        if !z.is_finite() || !d.is_finite() {
            return Err(RenderError::BadBeam("z and d must be finite"));
        }
        Ok(BeamParams { w0, z0, z, d })
    }

    /// Rayleigh distance from the wavelength: `z0 = π w0² / λ`.
    pub fn from_wavelength(w0: f64, wavelength: f64, z: f64, d: f64) -> Result<Self, RenderError> {
        if !(wavelength > 0.0) {
            return Err(RenderError::BadBeam("wavelength must be positive"));
        }
        Self::new(w0, PI * w0 * w0 / wavelength, z, d)
    }

    pub fn z_reduced(&self) -> f64 {
        self.z / self.z0
    }

    /// `w(z̃) = w0 √(1 + z̃²)`.
    pub fn width(&self) -> f64 {
        let zt = self.z_reduced();
        self.w0 * (1.0 + zt * zt).sqrt()
    }

    pub fn gouy_phase(&self) -> f64 {
        self.z_reduced().atan()
    }

    /// Path separation in units of the local beam width.
    pub fn separation_reduced(&self) -> f64 {
        self.d / self.width()
    }
}

impl Default for BeamParams {
    /// 1 mm waist at 632.8 nm, observed at the waist, paths 10 mm apart.
    fn default() -> Self {
        BeamParams::from_wavelength(1e-3, 632.8e-9, 0.0, 1e-2).expect("valid defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Half-width of the grid in beam widths.
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nx: 512, ny: 512, extent: 4.0 }
    }
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, extent: f64) -> Self {
        GridSpec { nx, ny, extent }
    }

    fn check(&self) -> Result<(), RenderError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(RenderError::EmptyGrid { nx: self.nx, ny: self.ny });
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(RenderError::BadExtent(self.extent));
        }
        Ok(())
    }
}

/// Complex field sampled at pixel centres of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub values: Vec<C64>,
}

impl FieldGrid {
    fn blank(nx: usize, ny: usize, xi: (f64, f64), eta: (f64, f64)) -> Self {
        FieldGrid {
            nx,
            ny,
            xi_min: xi.0,
            xi_max: xi.1,
            eta_min: eta.0,
            eta_max: eta.1,
            values: vec![C64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn dxi(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.nx as f64
    }

    pub fn deta(&self) -> f64 {
        (self.eta_max - self.eta_min) / self.ny as f64
    }

    pub fn pixel_area(&self) -> f64 {
        self.dxi() * self.deta()
    }

    /// Reduced coordinates of the centre of pixel `(col, row)`.
    pub fn coords(&self, col: usize, row: usize) -> (f64, f64) {
        let xi = self.xi_min + (col as f64 + 0.5) * self.dxi();
        let eta = self.eta_max - (row as f64 + 0.5) * self.deta();
        (xi, eta)
    }

    pub fn at(&self, col: usize, row: usize) -> C64 {
        self.values[row * self.nx + col]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    fn same_layout(&self, other: &FieldGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.xi_min == other.xi_min
            && self.xi_max == other.xi_max
            && self.eta_min == other.eta_min
            && self.eta_max == other.eta_max
    }

    /// `∫∫ |f|² dξ dη` on the grid.
    pub fn power(&self) -> f64 {
        self.power_with(Execution::default())
    }

    pub fn power_with(&self, exec: Execution) -> f64 {
        let rows = par::map_rows(&self.values, self.nx, exec, |_, row| row.iter().map(|v| v.norm_sqr()).sum::<f64>());
        rows.iter().sum::<f64>() * self.pixel_area()
    }
}

/// Samples `a+ ψ+ + a− ψ−` on a grid centred on the path axis.
pub fn render_transverse(coeffs: &Pair, params: &BeamParams, spec: &GridSpec) -> Result<FieldGrid, RenderError> {
    render_transverse_with(coeffs, params, spec, Execution::default())
}

pub fn render_transverse_with(
    coeffs: &Pair,
    params: &BeamParams,
    spec: &GridSpec,
    exec: Execution,
) -> Result<FieldGrid, RenderError> {
    spec.check()?;
    let e = spec.extent;
    let mut grid = FieldGrid::blank(spec.nx, spec.ny, (-e, e), (-e, e));
    let zt = params.z_reduced();
    let (a_plus, a_minus) = (coeffs[0], coeffs[1]);
    let layout = grid.clone_layout();
    par::fill_rows(&mut grid.values, spec.nx, exec, |col, row| {
        let (xi, eta) = layout.coords(col, row);
        a_plus * lg_field(Charge::Plus, xi, eta, zt) + a_minus * lg_field(Charge::Minus, xi, eta, zt)
    });
    Ok(grid)
}

impl FieldGrid {
    fn clone_layout(&self) -> FieldGrid {
        FieldGrid { values: Vec::new(), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolFilter {
    H,
    V,
    None,
}

/// Both polarization components of a rendered field.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedGrid {
    pub h: FieldGrid,
    pub v: FieldGrid,
}

impl PolarizedGrid {
    pub fn intensity(&self) -> Vec<f64> {
        self.h.values.iter().zip(&self.v.values).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    pub fn power(&self) -> f64 {
        self.h.power() + self.v.power()
    }
}

/// Renders both paths side by side: path 0 centred at `(0, 0)`, path 1 at
/// `(d, 0)`. The grid covers `extent` beam widths around each axis and
/// keeps the pixel pitch of `spec`.
pub fn render_two_path(
    state: &Supermode,
    filter: PolFilter,
    params: &BeamParams,
    spec: &GridSpec,
) -> Result<PolarizedGrid, RenderError> {
    render_two_path_with(state, filter, params, spec, Execution::default())
}

pub fn render_two_path_with(
    state: &Supermode,
    filter: PolFilter,
    params: &BeamParams,
    spec: &GridSpec,
    exec: Execution,
) -> Result<PolarizedGrid, RenderError> {
    spec.check()?;
    let d = params.separation_reduced();
    if !(d >= MIN_SEPARATION) {
        return Err(RenderError::Overlap { d_reduced: d, min: MIN_SEPARATION });
    }
    let e = spec.extent;
    let span = d + 2.0 * e;
    let nx = ((spec.nx as f64) * span / (2.0 * e)).round().max(1.0) as usize;
    let zt = params.z_reduced();

    let render_pol = |pol: Pol, keep: bool| {
        let mut grid = FieldGrid::blank(nx, spec.ny, (-e, d + e), (-e, e));
        if keep {
            let coeff = |p: Path| Pair::new(state.amp(Transverse::Plus, p, pol), state.amp(Transverse::Minus, p, pol));
            let (c0, c1) = (coeff(Path::P0), coeff(Path::P1));
            let layout = grid.clone_layout();
            par::fill_rows(&mut grid.values, nx, exec, |col, row| {
                let (xi, eta) = layout.coords(col, row);
                let field = |c: &Pair, x: f64| {
                    c[0] * lg_field(Charge::Plus, x, eta, zt) + c[1] * lg_field(Charge::Minus, x, eta, zt)
                };
                field(&c0, xi) + field(&c1, xi - d)
            });
        }
        grid
    };
    let h = render_pol(Pol::H, filter != PolFilter::V);
    let v = render_pol(Pol::V, filter != PolFilter::H);
    Ok(PolarizedGrid { h, v })
}

/// Discrete `⟨f, g⟩ = Σ conj(f) g ΔA`.
pub fn grid_inner(f: &FieldGrid, g: &FieldGrid) -> Result<C64, RenderError> {
    grid_inner_with(f, g, Execution::default())
}

pub fn grid_inner_with(f: &FieldGrid, g: &FieldGrid, exec: Execution) -> Result<C64, RenderError> {
    if !f.same_layout(g) || f.values.len() != g.values.len() {
        return Err(RenderError::GridMismatch);
    }
    let nx = f.nx;
    let rows = par::map_rows(&f.values, nx, exec, |r, row| {
        let other = &g.values[r * nx..(r + 1) * nx];
        row.iter().zip(other).map(|(a, b)| a.conj() * b).sum::<C64>()
    });
    Ok(rows.iter().sum::<C64>() * f.pixel_area())
}

/// Lobe-axis orientation of a two-lobe pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    /// Degrees in `(−90, 90]`.
    Degrees(f64),
    /// The intensity has no preferred axis (e.g. a donut) or is zero.
    Undefined,
}

impl Orientation {
    pub fn degrees(&self) -> Option<f64> {
        match self {
            Orientation::Degrees(d) => Some(*d),
            Orientation::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m00: f64,
    pub xi_c: f64,
    pub eta_c: f64,
    pub mu20: f64,
    pub mu02: f64,
    pub mu11: f64,
}

/// Zeroth, first and central second moments of an intensity image.
pub fn intensity_moments(grid: &FieldGrid, intensity: &[f64]) -> Moments {
    let nx = grid.nx;
    let rows = par::map_rows(intensity, nx, Execution::default(), |r, row| {
        let mut acc = [0.0; 3];
        for (col, &i) in row.iter().enumerate() {
            let (x, y) = grid.coords(col, r);
            acc[0] += i;
            acc[1] += i * x;
            acc[2] += i * y;
        }
        acc
    });
    let raw = rows.iter().fold([0.0; 3], |a, r| [a[0] + r[0], a[1] + r[1], a[2] + r[2]]);
    let m00 = raw[0];
    let (xi_c, eta_c) = if m00 > 0.0 { (raw[1] / m00, raw[2] / m00) } else { (0.0, 0.0) };
    let rows = par::map_rows(intensity, nx, Execution::default(), |r, row| {
        let mut acc = [0.0; 3];
        for (col, &i) in row.iter().enumerate() {
            let (x, y) = grid.coords(col, r);
            let (dx, dy) = (x - xi_c, y - eta_c);
            acc[0] += i * dx * dx;
            acc[1] += i * dy * dy;
            acc[2] += i * dx * dy;
        }
        acc
    });
    let c = rows.iter().fold([0.0; 3], |a, r| [a[0] + r[0], a[1] + r[1], a[2] + r[2]]);
    Moments { m00, xi_c, eta_c, mu20: c[0], mu02: c[1], mu11: c[2] }
}

/// Orientation of the lobe axis from the second central moments of `|f|²`.
pub fn hg_orientation(f: &FieldGrid) -> Orientation {
    orientation_from_intensity(f, &f.intensity())
}

pub fn orientation_from_intensity(grid: &FieldGrid, intensity: &[f64]) -> Orientation {
    let m = intensity_moments(grid, intensity);
    let trace = m.mu20 + m.mu02;
    if !(m.m00 > 0.0) || !(trace > 0.0) {
        return Orientation::Undefined;
    }
    let diff = m.mu20 - m.mu02;
    let anisotropy = (diff * diff + 4.0 * m.mu11 * m.mu11).sqrt() / trace;
    if anisotropy < ISOTROPY_TOL {
        return Orientation::Undefined;
    }
    let raw = 0.5 * (2.0 * m.mu11).atan2(diff).to_degrees();
    let mut deg = ORIENTATION_HANDEDNESS * raw;
    if deg <= -90.0 {
        deg += 180.0;
    } else if deg > 90.0 {
        deg -= 180.0;
    }
    Orientation::Degrees(deg)
}
