//! 8-bit grayscale intensity images. Each image is scaled so its own peak is
//! 255; absolute intensities belong in the JSON sidecar.

use std::io::{self, Write};
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }
}

/// Row-major 8-bit grayscale image, pixel (0, 0) top-left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Quantizes an intensity map, peak → 255. An all-zero map stays black.
    pub fn from_intensity(width: usize, height: usize, intensity: &[f64]) -> Self {
        assert_eq!(intensity.len(), width * height, "intensity buffer size");
        let peak = intensity.iter().copied().fold(0.0, f64::max);
        let pixels = intensity
            .iter()
            .map(|&i| if peak > 0.0 { (255.0 * i / peak).round().clamp(0.0, 255.0) as u8 } else { 0 })
            .collect();
        GrayImage { width, height, pixels }
    }

    /// Binary PGM (P5).
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn encode_png(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(&self.pixels, self.width as u32, self.height as u32, ExtendedColorType::L8)
            .map_err(io::Error::other)?;
        Ok(out)
    }

    pub fn encode(&self, format: ImageFormat) -> io::Result<Vec<u8>> {
        match format {
            ImageFormat::Pgm => Ok(self.encode_pgm()),
            ImageFormat::Png => self.encode_png(),
        }
    }

    pub fn write(&self, path: &Path, format: ImageFormat) -> io::Result<()> {
        let bytes = self.encode(format)?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        f.sync_all()
    }

    /// Tiles equally sized images left to right, top to bottom, `gap` black
    /// pixels apart.
    pub fn montage(tiles: &[GrayImage], columns: usize, gap: usize) -> GrayImage {
        assert!(!tiles.is_empty() && columns > 0, "montage needs tiles and columns");
        let (tw, th) = (tiles[0].width, tiles[0].height);
        assert!(tiles.iter().all(|t| t.width == tw && t.height == th), "montage tiles differ in size");
        let cols = columns.min(tiles.len());
        let rows = tiles.len().div_ceil(cols);
        let width = cols * tw + (cols - 1) * gap;
        let height = rows * th + (rows - 1) * gap;
        let mut pixels = vec![0u8; width * height];
        for (k, tile) in tiles.iter().enumerate() {
            let (x0, y0) = ((k % cols) * (tw + gap), (k / cols) * (th + gap));
            for y in 0..th {
                let dst = (y0 + y) * width + x0;
                pixels[dst..dst + tw].copy_from_slice(&tile.pixels[y * tw..(y + 1) * tw]);
            }
        }
        GrayImage { width, height, pixels }
    }
}
