//! Binary images of planar cross-sections.

use std::io::{self, Write};

use crate::slicer::PlaneSlice;

/// Default square world window `[-1.2, 1.2]^2` in (y, z).
pub const DEFAULT_WINDOW: Window = Window {
    min: [-1.2, -1.2],
    max: [1.2, 1.2],
};
pub const DEFAULT_RESOLUTION: usize = 256;
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Window {
    fn pixel_size(&self, resolution: usize, axis: usize) -> f64 {
        (self.max[axis] - self.min[axis]) / resolution as f64
    }

    /// World coordinate of pixel centre `i`. Written so that a window symmetric
    /// about zero has exactly antisymmetric centres.
    fn center(&self, resolution: usize, axis: usize, i: usize) -> f64 {
        let mid = 0.5 * (self.min[axis] + self.max[axis]);
        let half = 0.5 * self.pixel_size(resolution, axis);
        mid + (2.0 * i as f64 + 1.0 - resolution as f64) * half
    }
}

/// Row-major bitmap; columns follow y, rows follow z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Builds an image from a predicate on `(col, row)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut img = Self::new(width, height);
        for row in 0..height {
            for col in 0..width {
                img.bits[row * width + col] = f(col, row);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels as `(col, row)` in row-major order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Binary PGM (P5, maxval 255), top row = highest z.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let mut row_bytes = vec![0u8; self.width];
        for row in (0..self.height).rev() {
            for (col, byte) in row_bytes.iter_mut().enumerate() {
                *byte = if self.get(col, row) { 255 } else { 0 };
            }
            out.write_all(&row_bytes)?;
        }
        Ok(())
    }
}

/// Fills closed contours with the even-odd rule and strokes open chains.
/// Returns `None` when no pixel is set.
pub fn rasterize_slice(slice: &PlaneSlice, resolution: usize) -> Option<BinaryImage> {
    rasterize_slice_in(slice, resolution, &DEFAULT_WINDOW)
}

pub fn rasterize_slice_in(
    slice: &PlaneSlice,
    resolution: usize,
    window: &Window,
) -> Option<BinaryImage> {
    assert!(resolution >= MIN_RESOLUTION, "resolution below {MIN_RESOLUTION}");
    let n = resolution;
    let mut img = BinaryImage::new(n, n);
    let (hy, hz) = (window.pixel_size(n, 0), window.pixel_size(n, 1));

    // Scanline crossings per row, bucketed by the rows each edge spans.
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); n];
    for contour in slice.contours.iter().filter(|c| c.closed) {
        let pts = &contour.points;
        for k in 0..pts.len() {
            let (p, q) = (pts[k], pts[(k + 1) % pts.len()]);
            if p[1] == q[1] {
                continue;
            }
            let (lo, hi) = if p[1] < q[1] { (p[1], q[1]) } else { (q[1], p[1]) };
            let first = ((lo - window.min[1]) / hz - 0.5).floor().max(0.0) as usize;
            let last = (((hi - window.min[1]) / hz - 0.5).ceil().max(0.0) as usize).min(n - 1);
            for (row, row_crossings) in crossings.iter_mut().enumerate().take(last + 1).skip(first) {
                let zc = window.center(n, 1, row);
                // Half-open rule: an edge covers rows with lo <= zc < hi.
                if (p[1] <= zc) != (q[1] <= zc) {
                    row_crossings.push(p[0] + (zc - p[1]) * (q[0] - p[0]) / (q[1] - p[1]));
                }
            }
        }
    }
    for (row, xs) in crossings.iter_mut().enumerate() {
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            let (y0, y1) = (span[0], span[1]);
            let start = ((y0 - window.min[0]) / hy - 0.5).ceil().max(0.0) as usize;
            for col in start.saturating_sub(1)..n {
                let yc = window.center(n, 0, col);
                if yc >= y1 {
                    break;
                }
                if yc >= y0 {
                    img.set(col, row, true);
                }
            }
        }
    }

    for contour in slice.contours.iter().filter(|c| !c.closed) {
        for seg in contour.points.windows(2) {
            stroke(&mut img, window, seg[0], seg[1]);
        }
    }
    (!img.is_empty()).then_some(img)
}

fn stroke(img: &mut BinaryImage, window: &Window, a: [f64; 2], b: [f64; 2]) {
    let n = img.width;
    let h = window.pixel_size(n, 0).min(window.pixel_size(n, 1));
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let steps = (len / (0.25 * h)).ceil().max(1.0) as usize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let y = a[0] + (b[0] - a[0]) * t;
        let z = a[1] + (b[1] - a[1]) * t;
        let col = ((y - window.min[0]) / window.pixel_size(n, 0)).floor();
        let row = ((z - window.min[1]) / window.pixel_size(n, 1)).floor();
        if col >= 0.0 && row >= 0.0 && (col as usize) < n && (row as usize) < img.height {
            img.set(col as usize, row as usize, true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slicer::Contour;
    use std::f64::consts::PI;

    fn circle(radius: f64, segments: usize) -> Contour {
        Contour {
            points: (0..segments)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / segments as f64;
                    [radius * a.cos(), radius * a.sin()]
                })
                .collect(),
            closed: true,
        }
    }

    fn slice(contours: Vec<Contour>) -> PlaneSlice {
        PlaneSlice {
            x_position: 0.0,
            contours,
        }
    }

    #[test]
    fn pixel_centres_are_antisymmetric() {
        for i in 0..256 {
            assert_eq!(DEFAULT_WINDOW.center(256, 0, i), -DEFAULT_WINDOW.center(256, 0, 255 - i));
        }
    }

    #[test]
    fn filled_circle_matches_area() {
        let img = rasterize_slice(&slice(vec![circle(0.6, 720)]), 256).unwrap();
        let fraction = img.count() as f64 / (256.0 * 256.0);
        let expected = PI * 0.36 / (2.4 * 2.4);
        assert!((fraction / expected - 1.0).abs() < 0.02, "{fraction} vs {expected}");
    }

    #[test]
    fn filled_square_pixel_count() {
        let square = Contour {
            points: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]],
            closed: true,
        };
        for res in [64usize, 256] {
            let img = rasterize_slice(&slice(vec![square.clone()]), res).unwrap();
            let side = res as f64 / 2.4;
            let ring = 4.0 * side + 4.0;
            assert!((img.count() as f64 - side * side).abs() <= ring);
        }
    }

    #[test]
    fn annulus_leaves_hole_empty() {
        let img = rasterize_slice(&slice(vec![circle(0.8, 256), circle(0.4, 256)]), 128).unwrap();
        assert!(!img.get(64, 64));
        assert!(!img.get(70, 60));
        let ring_col = 64 + (0.6 / (2.4 / 128.0)) as usize;
        assert!(img.get(ring_col, 64));
        let expected = PI * (0.64 - 0.16) / (2.4 * 2.4) * 128.0 * 128.0;
        assert!((img.count() as f64 / expected - 1.0).abs() < 0.03);
    }

    #[test]
    fn open_chain_is_stroked() {
        let line = Contour {
            points: vec![[-0.5, 0.1], [0.5, 0.1]],
            closed: false,
        };
        let img = rasterize_slice(&slice(vec![line]), 64).unwrap();
        let cols = (0.5 / (2.4 / 64.0) * 2.0) as usize;
        assert!(img.count() >= cols && img.count() <= cols + 3);
    }

    #[test]
    fn empty_and_outside_slices() {
        assert!(rasterize_slice(&slice(vec![]), 32).is_none());
        let far = Contour {
            points: vec![[5.0, 5.0], [6.0, 5.0], [6.0, 6.0]],
            closed: true,
        };
        assert!(rasterize_slice(&slice(vec![far]), 32).is_none());
    }

    #[test]
    fn deterministic_output() {
        let s = slice(vec![circle(0.7, 33), circle(0.2, 17)]);
        assert_eq!(rasterize_slice(&s, 200), rasterize_slice(&s, 200));
    }

    #[test]
    fn pgm_header_and_size() {
        let img = BinaryImage::from_fn(20, 20, |c, r| c == 3 && r == 19);
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        let header = b"P5\n20 20\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 400);
        assert_eq!(buf[header.len() + 3], 255);
    }
}
