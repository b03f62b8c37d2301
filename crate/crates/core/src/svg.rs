//! Raster SVG export for plane and disk pictures.

use std::fmt::Write as _;

use crate::geometry::{Point, SpaceModel};

/// Default raster size.
pub const DEFAULT_PIXELS: usize = 600;

/// Area of the plane (or the closed unit disk) to draw.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub width: usize,
    pub height: usize,
}

impl Frame {
    pub fn disk(pixels: usize) -> Self {
        Frame {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
            width: pixels,
            height: pixels,
        }
    }

    /// Metric size of a pixel at `p`.
    pub fn pixel_size(&self, space: &SpaceModel, p: &Point) -> f64 {
        let e = (self.max[0] - self.min[0]) / self.width as f64;
        match (space, p) {
            (SpaceModel::PoincareDisk, Point::Disk { u, v }) => 2.0 * e / (1.0 - u * u - v * v),
            _ => e,
        }
    }
}

/// A categorical colour for tile `i`.
pub fn tile_color(i: usize) -> String {
    // Golden-angle hue walk keeps neighbouring indices apart.
    let hue = (i as f64 * 137.507_764) % 360.0;
    let sat = 55 + (i * 7 % 3) as u32 * 10;
    format!("hsl({hue:.1},{sat}%,62%)")
}

/// Rasterizes `paint`, which maps a pixel center to a fill colour (or nothing).
/// Runs of equal colour in a row become one `<rect>`.
pub fn render(space: &SpaceModel, frame: &Frame, paint: impl Fn(&Point, f64) -> Option<String>) -> String {
    let (w, h) = (frame.width, frame.height);
    let sx = (frame.max[0] - frame.min[0]) / w as f64;
    let sy = (frame.max[1] - frame.min[1]) / h as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    for row in 0..h {
        // Row 0 is the top of the picture.
        let y = frame.max[1] - (row as f64 + 0.5) * sy;
        let mut run: Option<(usize, String)> = None;
        for col in 0..=w {
            let color = (col < w)
                .then(|| {
                    let x = frame.min[0] + (col as f64 + 0.5) * sx;
                    let p = match space {
                        SpaceModel::PoincareDisk => {
                            if x.hypot(y) >= 1.0 - 1e-9 {
                                return None;
                            }
                            Point::disk(x, y)
                        }
                        _ => Point::plane(x, y),
                    };
                    if space.validate(&p).is_err() {
                        return None;
                    }
                    let px = frame.pixel_size(space, &p);
                    paint(&p, px)
                })
                .flatten();
            let same = matches!((&run, &color), (Some((_, a)), Some(b)) if a == b);
            if same {
                continue;
            }
            if let Some((start, fill)) = run.take() {
                let _ = writeln!(
                    out,
                    r#"<rect x="{start}" y="{row}" width="{}" height="1" fill="{fill}"/>"#,
                    col - start
                );
            }
            run = color.map(|c| (col, c));
        }
    }
    if matches!(space, SpaceModel::PoincareDisk) {
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        let _ = writeln!(
            out,
            r#"<circle cx="{cx}" cy="{cy}" r="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            cx.min(cy)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_are_merged() {
        let frame = Frame {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
            width: 10,
            height: 2,
        };
        let svg = render(&SpaceModel::plane(), &frame, |p, _| {
            Some(if p.coords().unwrap()[0] < 0.5 { "red".into() } else { "blue".into() })
        });
        assert_eq!(svg.matches("fill=\"red\"").count(), 2);
        assert_eq!(svg.matches("fill=\"blue\"").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn disk_frame_skips_outside() {
        let svg = render(&SpaceModel::PoincareDisk, &Frame::disk(8), |_, _| Some("red".into()));
        assert!(svg.contains("<circle"));
        assert!(!svg.contains(r#"x="0" y="0" width="8" height="1" fill="red""#));
    }
}
