//! Uniform BEV grid quantization.

use serde::{Deserialize, Serialize};

use crate::config::CodecConfig;
use crate::error::QuantError;
use crate::graph::Point2;

/// A grid cell: `xb` in `[0, x_bins)`, `yb` in `[0, y_bins)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantPoint {
    pub xb: u32,
    pub yb: u32,
}

impl QuantPoint {
    pub const fn new(xb: u32, yb: u32) -> Self {
        Self { xb, yb }
    }
}

fn bin(v: f64, lo: f64, hi: f64, bins: u32) -> u32 {
    let b = ((v - lo) / ((hi - lo) / f64::from(bins))).floor();
    // The float-to-int cast saturates, so far out-of-range values land on 0 or u32::MAX.
    (b.max(0.0) as u32).min(bins - 1)
}

/// Map a metric point to its grid cell, clamping out-of-range values to the border cells.
pub fn quantize(p: Point2, cfg: &CodecConfig) -> Result<QuantPoint, QuantError> {
    if !p.x.is_finite() || !p.y.is_finite() {
        return Err(QuantError::NonFiniteCoordinate(p.x, p.y));
    }
    Ok(QuantPoint {
        xb: bin(p.x, cfg.x_range[0], cfg.x_range[1], cfg.x_bins),
        yb: bin(p.y, cfg.y_range[0], cfg.y_range[1], cfg.y_bins),
    })
}

/// Center of a grid cell.
pub fn dequantize(q: QuantPoint, cfg: &CodecConfig) -> Result<Point2, QuantError> {
    if q.xb >= cfg.x_bins || q.yb >= cfg.y_bins {
        return Err(QuantError::BinOutOfRange(q.xb, q.yb));
    }
    Ok(Point2::new(
        cfg.x_range[0] + (f64::from(q.xb) + 0.5) * cfg.bin_width_x(),
        cfg.y_range[0] + (f64::from(q.yb) + 0.5) * cfg.bin_width_y(),
    ))
}
