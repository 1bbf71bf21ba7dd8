//! Canonical rasters and their on-disk formats.
//!
//! Every stage works on [`ImageRgb`] (8-bit sRGB), [`ImageLab`] (CIELAB under
//! D65) or [`BinaryMask`]. PNG is the only output format; masks are written as
//! single-channel 8-bit PNGs holding exactly 0 (background) or 255
//! (foreground). JPEG is accepted on input only.

use std::path::Path;

use image::{GrayImage, ImageReader, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

/// Row-major 8-bit sRGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width >= 1 && height >= 1, "empty raster");
        Self {
            width,
            height,
            data: vec![rgb; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.data[y * self.width + x] = rgb;
    }
}

/// Row-major CIELAB raster, `L` in `[0, 100]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLab {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl ImageLab {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Row-major boolean raster; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        assert!(width >= 1 && height >= 1, "empty raster");
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width >= 1 && height >= 1, "empty raster");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "raster must be at least 1x1, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} raster needs {} samples, got {len}",
            width * height
        )));
    }
    Ok(())
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

fn encode_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    }
}

/// Decodes a PNG or JPEG file. Alpha, if present, is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let path = path.as_ref();
    let rgb = decode(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    ImageRgb::new(w, h, data)
}

/// Writes a 3-channel 8-bit PNG.
pub fn save_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = RgbImage::new(img.width as u32, img.height as u32);
    for (dst, src) in out.pixels_mut().zip(&img.data) {
        *dst = Rgb(*src);
    }
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Writes a single-channel 8-bit PNG with `true -> 255`, `false -> 0`.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = GrayImage::new(mask.width as u32, mask.height as u32);
    for (dst, &bit) in out.pixels_mut().zip(&mask.bits) {
        *dst = Luma([if bit { 255 } else { 0 }]);
    }
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Reads any decodable image as a mask: luma above 127 is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let gray = decode(path)?.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let bits = gray.pixels().map(|p| p.0[0] > 127).collect();
    BinaryMask::new(w, h, bits)
}

/// Writes values in `[0, 1]` as an 8-bit grayscale PNG (debug output).
pub fn save_gray(width: usize, height: usize, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_dims(width, height, values.len())?;
    let mut out = GrayImage::new(width as u32, height as u32);
    for (dst, &v) in out.pixels_mut().zip(values) {
        *dst = Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8]);
    }
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// D65 reference white, `Y` normalized to 1.
pub const D65_WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

// sRGB primaries to XYZ (D65).
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const LAB_DELTA: f64 = 6.0 / 29.0;

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * LAB_DELTA * LAB_DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > LAB_DELTA {
        t.powi(3)
    } else {
        3.0 * LAB_DELTA * LAB_DELTA * (t - 4.0 / 29.0)
    }
}

/// Converts one 8-bit sRGB triple to CIELAB (D65).
pub fn rgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| srgb_to_linear(c as f64 / 255.0));
    let mut xyz = [0.0; 3];
    for (row, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / D65_WHITE[0]);
    let fy = lab_f(xyz[1] / D65_WHITE[1]);
    let fz = lab_f(xyz[2] / D65_WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Converts CIELAB (D65) back to 8-bit sRGB, clamping out-of-gamut values.
pub fn lab_pixel_to_rgb(lab: [f64; 3]) -> [u8; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        D65_WHITE[0] * lab_f_inv(fx),
        D65_WHITE[1] * lab_f_inv(fy),
        D65_WHITE[2] * lab_f_inv(fz),
    ];
    let mut rgb = [0u8; 3];
    for (row, out) in XYZ_TO_RGB.iter().zip(rgb.iter_mut()) {
        let lin = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
        *out = (linear_to_srgb(lin.clamp(0.0, 1.0)) * 255.0).round() as u8;
    }
    rgb
}

/// sRGB to CIELAB under the D65 white point.
pub fn rgb_to_lab(img: &ImageRgb) -> ImageLab {
    ImageLab {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| rgb_pixel_to_lab(p)).collect(),
    }
}
