//! Procedural seven-segment digit masks.
//!
//! The stock resolution-chart artwork is not redistributable, so the default
//! masks are rendered here at the simulation resolution.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

// segment order: a (top), b (upper right), c (lower right), d (bottom),
// e (lower left), f (upper left), g (middle)
const SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],
    [false, true, true, false, false, false, false],
    [true, true, false, true, true, false, true],
    [true, true, true, true, false, false, true],
    [false, true, true, false, false, true, true],
    [true, false, true, true, false, true, true],
    [true, false, true, true, true, true, true],
    [true, true, true, false, false, false, false],
    [true, true, true, true, true, true, true],
    [true, true, true, true, false, true, true],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlyphStyle {
    /// Canvas size in pixels.
    pub canvas: usize,
    pub width: usize,
    pub height: usize,
    pub stroke: usize,
}

impl Default for GlyphStyle {
    fn default() -> Self {
        Self {
            canvas: 256,
            width: 40,
            height: 64,
            stroke: 8,
        }
    }
}

/// White digit on black, centered on a square canvas.
pub fn digit(d: u8, style: GlyphStyle) -> Result<GrayImage> {
    let segs = SEGMENTS
        .get(d as usize)
        .ok_or_else(|| Error::invalid("mask", format!("no glyph for digit {d}")))?;
    let GlyphStyle {
        canvas,
        width,
        height,
        stroke,
    } = style;
    if width > canvas || height > canvas || 2 * stroke >= width || 3 * stroke >= height {
        return Err(Error::invalid("mask", format!("glyph {width}x{height}/{stroke} does not fit canvas {canvas}")));
    }
    let mut img = GrayImage::filled(canvas, canvas, 0);
    let x0 = (canvas - width) / 2;
    let y0 = (canvas - height) / 2;
    let mid = (height - stroke) / 2;
    let mut fill = |x: usize, y: usize, w: usize, h: usize| {
        for yy in y..y + h {
            for xx in x..x + w {
                img.pixels[(y0 + yy) * canvas + x0 + xx] = 255;
            }
        }
    };
    let upper = mid + stroke;
    let lower = height - mid;
    let rects = [
        (0, 0, width, stroke),
        (width - stroke, 0, stroke, upper),
        (width - stroke, mid, stroke, lower),
        (0, height - stroke, width, stroke),
        (0, mid, stroke, lower),
        (0, 0, stroke, upper),
        (0, mid, width, stroke),
    ];
    for (on, &(x, y, w, h)) in segs.iter().zip(&rects) {
        if *on {
            fill(x, y, w, h);
        }
    }
    Ok(img)
}
