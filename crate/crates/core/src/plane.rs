//! Dense single-channel images and 2D points.

/// A 2D point in pixel coordinates (x to the right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Row-major single-channel image of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps row-major samples. Panics if `data.len() != width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane buffer size");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear sample at continuous pixel-center coordinates. Samples that
    /// fall outside the image read as `border`.
    pub fn sample_bilinear(&self, x: f64, y: f64, border: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let px = |xi: isize, yi: isize| -> f64 {
            if xi < 0 || yi < 0 || xi >= self.width as isize || yi >= self.height as isize {
                border
            } else {
                self.data[yi as usize * self.width + xi as usize]
            }
        };
        // Skip neighbours with zero weight so exact grid positions at the
        // last row/column don't mix in the border value.
        let mut acc = (1.0 - fx) * (1.0 - fy) * px(x0, y0);
        if fx > 0.0 {
            acc += fx * (1.0 - fy) * px(x0 + 1, y0);
        }
        if fy > 0.0 {
            acc += (1.0 - fx) * fy * px(x0, y0 + 1);
            if fx > 0.0 {
                acc += fx * fy * px(x0 + 1, y0 + 1);
            }
        }
        acc
    }

    /// Bilinear sample with coordinates clamped to the image extent.
    pub fn sample_bilinear_clamped(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = (x.floor() as usize).min(self.width - 1);
        let y0 = (y.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Resamples the rectangle `[x0, x1) × [y0, y1)` (pixel-edge coordinates)
    /// onto an `out_w × out_h` grid with clamped bilinear interpolation.
    pub fn resample_region(
        &self,
        (x0, y0, x1, y1): (f64, f64, f64, f64),
        out_w: usize,
        out_h: usize,
    ) -> Plane {
        let sx = (x1 - x0) / out_w as f64;
        let sy = (y1 - y0) / out_h as f64;
        Plane::from_fn(out_w, out_h, |c, r| {
            let x = x0 + (c as f64 + 0.5) * sx - 0.5;
            let y = y0 + (r as f64 + 0.5) * sy - 0.5;
            self.sample_bilinear_clamped(x, y)
        })
    }
}
