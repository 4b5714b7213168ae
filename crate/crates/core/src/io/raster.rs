//! PNG encoding for renders and PNG frame decoding.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::segmentation::LabelMap;

/// Segment colours; label `k >= 1` uses entry `(k - 1) % 12`.
pub const LABEL_PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [170, 110, 40],
];

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("png: {e}"))
}

fn encode(
    width: usize,
    height: usize,
    color: png::ColorType,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        if let Some(p) = palette {
            enc.set_palette(p);
        }
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(data).map_err(png_err)?;
    }
    Ok(out)
}

pub fn write_png_gray8(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Grayscale, None, pixels)
}

pub fn write_png_rgb8(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Rgb, None, pixels)
}

/// Decodes an 8-bit (or expanded lower-depth) grayscale PNG.
pub fn read_png_gray(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!(
            "png: expected 8-bit grayscale, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

/// Min–max normalised grayscale rendering; constant fields render black.
pub fn render_scalar_png(field: &ScalarField) -> Result<Vec<u8>> {
    let (lo, hi) = (field.min(), field.max());
    let span = hi - lo;
    let pixels: Vec<u8> = field
        .values()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    write_png_gray8(field.cols(), field.rows(), &pixels)
}

/// Indexed-colour rendering: index 0 (black) for label 0, then the palette.
pub fn render_labels_png(map: &LabelMap) -> Result<Vec<u8>> {
    let mut palette = vec![0u8, 0, 0];
    for c in LABEL_PALETTE {
        palette.extend_from_slice(&c);
    }
    let indices: Vec<u8> = map
        .labels()
        .iter()
        .map(|&l| if l == 0 { 0 } else { 1 + ((l - 1) % 12) as u8 })
        .collect();
    encode(
        map.cols(),
        map.rows(),
        png::ColorType::Indexed,
        Some(palette),
        &indices,
    )
}

/// Blends segment colours at 50% over a grayscale base image in `[0, 1]`.
pub fn render_overlay_png(
    width: usize,
    height: usize,
    base: &[f64],
    label_at: impl Fn(usize, usize) -> u32,
) -> Result<Vec<u8>> {
    const ALPHA: f64 = 0.5;
    let mut rgb = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let g = base[y * width + x].clamp(0.0, 1.0) * 255.0;
            match label_at(x, y) {
                0 => rgb.extend(std::iter::repeat_n(g.round() as u8, 3)),
                l => {
                    let c = LABEL_PALETTE[((l - 1) % 12) as usize];
                    rgb.extend(
                        c.iter()
                            .map(|&ch| ((1.0 - ALPHA) * g + ALPHA * ch as f64).round() as u8),
                    );
                }
            }
        }
    }
    write_png_rgb8(width, height, &rgb)
}
