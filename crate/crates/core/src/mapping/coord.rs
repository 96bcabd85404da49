//! Pixel and resolution-relative coordinates.
//!
//! Relative coordinates divide by `dimension - 1` so that both the first and
//! the last pixel index are exactly representable (0.0 and 1.0).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::MappingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub fn new(width: u32, height: u32) -> Result<Self, MappingError> {
        if width == 0 || height == 0 {
            return Err(MappingError::BadResolution { width, height });
        }
        Ok(Resolution { width, height })
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }
}

/// Parses `WIDTHxHEIGHT`, e.g. `800x600`.
impl std::str::FromStr for Resolution {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MappingError::Schema {
            line: None,
            message: format!("resolution {s:?} is not WIDTHxHEIGHT"),
        };
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        Resolution::new(w, h)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: u32,
    pub y: u32,
}

impl PixelCoord {
    pub const fn new(x: u32, y: u32) -> Self {
        PixelCoord { x, y }
    }
}

impl fmt::Display for PixelCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Position as fractions of the screen extent, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeCoord {
    rx: f64,
    ry: f64,
}

impl RelativeCoord {
    pub fn new(rx: f64, ry: f64) -> Option<Self> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        (ok(rx) && ok(ry)).then_some(RelativeCoord { rx, ry })
    }

    pub fn rx(&self) -> f64 {
        self.rx
    }

    pub fn ry(&self) -> f64 {
        self.ry
    }
}

fn fraction(index: u32, extent: u32) -> f64 {
    if extent <= 1 {
        0.0
    } else {
        index as f64 / (extent - 1) as f64
    }
}

/// `round(fraction * (extent - 1))`, halves rounding up, clamped to the last index.
fn index_of(fraction: f64, extent: u32) -> u32 {
    let max = extent.saturating_sub(1);
    let scaled = (fraction * max as f64 + 0.5).floor();
    (scaled.max(0.0) as u32).min(max)
}

pub fn to_relative(p: PixelCoord, reference: Resolution) -> Result<RelativeCoord, MappingError> {
    if !reference.contains(p) {
        return Err(MappingError::CoordOutOfRange {
            coord: p,
            resolution: reference,
        });
    }
    Ok(RelativeCoord {
        rx: fraction(p.x, reference.width),
        ry: fraction(p.y, reference.height),
    })
}

pub fn to_absolute(r: RelativeCoord, target: Resolution) -> PixelCoord {
    PixelCoord {
        x: index_of(r.rx, target.width),
        y: index_of(r.ry, target.height),
    }
}

/// Scales a horizontal pixel length authored at `reference` onto `target`.
pub(crate) fn scale_width(len: f64, reference: Resolution, target: Resolution) -> f64 {
    if reference.width <= 1 {
        return len;
    }
    len * (target.width.saturating_sub(1)) as f64 / (reference.width - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(w: u32, h: u32) -> Resolution {
        Resolution::new(w, h).unwrap()
    }

    #[test]
    fn parse_resolution() {
        assert_eq!("800x600".parse::<Resolution>().unwrap(), res(800, 600));
        assert_eq!(" 1920 X 1080 ".parse::<Resolution>().unwrap(), res(1920, 1080));
        assert!("800".parse::<Resolution>().is_err());
        assert!("0x10".parse::<Resolution>().is_err());
    }

    #[test]
    fn relative_examples() {
        let hd = res(1920, 1080);
        let origin = to_relative(PixelCoord::new(0, 0), hd).unwrap();
        assert_eq!((origin.rx(), origin.ry()), (0.0, 0.0));
        let corner = to_relative(PixelCoord::new(1919, 1079), hd).unwrap();
        assert_eq!((corner.rx(), corner.ry()), (1.0, 1.0));
        let mid = to_relative(PixelCoord::new(959, 539), hd).unwrap();
        assert_eq!(mid.rx(), 959.0 / 1919.0);
        assert_eq!(mid.ry(), 539.0 / 1079.0);
        assert!((mid.rx() - 0.49974).abs() < 1e-5);
        assert!((mid.ry() - 0.49954).abs() < 1e-5);
    }

    #[test]
    fn out_of_range_pixel() {
        assert!(matches!(
            to_relative(PixelCoord::new(1920, 0), res(1920, 1080)),
            Err(MappingError::CoordOutOfRange { .. })
        ));
    }

    #[test]
    fn single_pixel_extent_maps_to_zero() {
        let r = to_relative(PixelCoord::new(0, 0), res(1, 1)).unwrap();
        assert_eq!((r.rx(), r.ry()), (0.0, 0.0));
        assert_eq!(to_absolute(r, res(1, 1)), PixelCoord::new(0, 0));
    }

    #[test]
    fn absolute_examples() {
        let one = RelativeCoord::new(1.0, 1.0).unwrap();
        assert_eq!(to_absolute(one, res(800, 600)), PixelCoord::new(799, 599));
        let half = RelativeCoord::new(0.5, 0.5).unwrap();
        assert_eq!(to_absolute(half, res(801, 601)), PixelCoord::new(400, 300));
        // 0.5 * 799 = 399.5 rounds half up.
        assert_eq!(to_absolute(half, res(800, 600)), PixelCoord::new(400, 300));
    }

    #[test]
    fn relative_rejects_out_of_unit_range() {
        assert!(RelativeCoord::new(1.01, 0.0).is_none());
        assert!(RelativeCoord::new(0.0, -0.1).is_none());
        assert!(RelativeCoord::new(f64::NAN, 0.0).is_none());
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(Resolution::new(0, 10).is_err());
    }
}
