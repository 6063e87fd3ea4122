//! Row-major rasters shared by every stage of the toolkit.

use crate::error::{Error, Result};

/// Single-channel row-major raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Floating-point plane, the working type of filters and metrics.
pub type Plane = Raster<f64>;

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "raster of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_dims<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            })
        }
    }
}

/// Half-sample symmetric reflection of index `i` into `0..n`
/// (`... b a | a b c ... | c b ...`), valid for any offset.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

impl Plane {
    /// Extends the plane to `width x height` by symmetric reflection.
    pub fn padded_reflect(&self, width: usize, height: usize) -> Plane {
        Plane::from_fn(width, height, |x, y| {
            self.get(
                reflect_index(x as isize, self.width),
                reflect_index(y as isize, self.height),
            )
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Multi-channel image stored as one plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    planes: Vec<Plane>,
    bit_depth: u8,
}

impl Image {
    pub fn new(planes: Vec<Plane>, bit_depth: u8) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidParameter("image needs at least one plane".into()))?;
        for p in &planes[1..] {
            first.check_dims(p)?;
        }
        if !(1..=16).contains(&bit_depth) {
            return Err(Error::InvalidParameter(format!(
                "bit depth {bit_depth} outside 1..=16"
            )));
        }
        Ok(Image { planes, bit_depth })
    }

    pub fn gray(plane: Plane, bit_depth: u8) -> Result<Self> {
        Self::new(vec![plane], bit_depth)
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Peak sample value, `2^bit_depth - 1`.
    pub fn max_value(&self) -> f64 {
        ((1u32 << self.bit_depth) - 1) as f64
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &Plane {
        &self.planes[c]
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn map_planes(&self, mut f: impl FnMut(&Plane) -> Plane) -> Self {
        Image {
            planes: self.planes.iter().map(&mut f).collect(),
            bit_depth: self.bit_depth,
        }
    }

    /// Rounds every sample to the integer grid and clamps to `[0, MAX]`.
    pub fn quantized(&self) -> Self {
        let max = self.max_value();
        self.map_planes(|p| p.map(|v| v.round().clamp(0.0, max)))
    }
}
