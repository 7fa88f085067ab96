//! Dense n-dimensional arrays in row-major order.
//!
//! One tensor carries one uniform scalar precision, selected at construction
//! through the [`Scalar`] type parameter (`f32` for training speed, `f64` for
//! gradient checks). Image-rank tensors use `(height, width, channels)` axis
//! order, channel fastest-varying.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};

/// Element type a [`Tensor`] may hold: 32- or 64-bit IEEE float.
pub trait Scalar: num_traits::Float + Copy + Send + Sync + fmt::Debug + 'static {
    /// Human-readable precision tag used by the checkpoint format.
    const NAME: &'static str;
    /// Serialized width in bytes.
    const BYTES: usize;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    /// Reads one scalar from the front of `bytes`; callers guarantee length.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    const BYTES: usize = 4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    const BYTES: usize = 8;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}

/// Ordered list of positive extents.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidArgument("shape must have at least one axis".into()));
        }
        if let Some(&bad) = extents.iter().find(|&&e| e == 0) {
            return Err(Error::InvalidArgument(format!(
                "shape extent must be >= 1, got {bad} in {extents:?}"
            )));
        }
        Ok(Shape(extents.to_vec()))
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.0
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.0[axis]
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // extents are all >= 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Shape({self})")
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if shape.len() != data.len() {
            return Err(Error::LengthMismatch { expected: shape.len(), got: data.len() });
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_slice(extents: &[usize], data: &[T]) -> Result<Self> {
        Self::new(Shape::new(extents)?, data.to_vec())
    }

    pub fn zeros(extents: &[usize]) -> Self {
        let shape = Shape::new(extents).expect("zeros: invalid shape");
        let len = shape.len();
        Tensor { shape, data: vec![T::zero(); len] }
    }

    pub fn full(extents: &[usize], value: T) -> Self {
        let shape = Shape::new(extents).expect("full: invalid shape");
        let len = shape.len();
        Tensor { shape, data: vec![value; len] }
    }

    pub fn from_fn(extents: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let shape = Shape::new(extents).expect("from_fn: invalid shape");
        let data = (0..shape.len()).map(|i| f(i)).collect();
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Mutable element access. Read-only consumers must not hold this across
    /// concurrent use; parameter mutation belongs to the optimizer step.
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Flat offset of multi-axis coordinates, row-major.
    pub fn offset(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.rank());
        let mut off = 0;
        for (axis, &c) in coords.iter().enumerate() {
            debug_assert!(c < self.shape.extent(axis));
            off = off * self.shape.extent(axis) + c;
        }
        off
    }

    pub fn at(&self, coords: &[usize]) -> T {
        self.data[self.offset(coords)]
    }

    pub fn set(&mut self, coords: &[usize], value: T) {
        let off = self.offset(coords);
        self.data[off] = value;
    }

    /// Same data, new extents; element count must match.
    pub fn into_reshaped(self, extents: &[usize]) -> Result<Tensor<T>> {
        let shape = Shape::new(extents)?;
        if shape.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape.to_string(),
                rhs: shape.to_string(),
            });
        }
        Ok(Tensor { shape, data: self.data })
    }

    pub fn reshaped(&self, extents: &[usize]) -> Result<Tensor<T>> {
        self.clone().into_reshaped(extents)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                op: "elementwise",
                lhs: self.shape.to_string(),
                rhs: other.shape.to_string(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn hadamard(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: T) -> Tensor<T> {
        self.map(|v| v * factor)
    }

    /// In-place `self += alpha * rhs`; the optimizer's update primitive.
    pub fn axpy(&mut self, alpha: T, rhs: &Tensor<T>) -> Result<()> {
        if self.shape != rhs.shape {
            return Err(Error::ShapeMismatch {
                op: "axpy",
                lhs: self.shape.to_string(),
                rhs: rhs.shape.to_string(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + alpha * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: T) {
        self.data.fill(value);
    }

    /// Copies into the other precision.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    /// Axis-aligned sub-box copy; one half-open range per axis.
    pub fn slice(&self, ranges: &[Range<usize>]) -> Result<Tensor<T>> {
        if ranges.len() != self.rank() {
            return Err(Error::InvalidArgument(format!(
                "slice: {} ranges for rank-{} tensor",
                ranges.len(),
                self.rank()
            )));
        }
        let mut out_extents = Vec::with_capacity(ranges.len());
        for (axis, r) in ranges.iter().enumerate() {
            if r.start >= r.end || r.end > self.shape.extent(axis) {
                return Err(Error::InvalidArgument(format!(
                    "slice: range {}..{} out of bounds for axis {axis} of {}",
                    r.start, r.end, self.shape
                )));
            }
            out_extents.push(r.end - r.start);
        }
        let out_shape = Shape::new(&out_extents)?;
        let mut data = Vec::with_capacity(out_shape.len());
        let mut coords: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        'outer: loop {
            data.push(self.data[self.offset(&coords)]);
            // advance odometer over the sliced box
            for axis in (0..coords.len()).rev() {
                coords[axis] += 1;
                if coords[axis] < ranges[axis].end {
                    continue 'outer;
                }
                coords[axis] = ranges[axis].start;
            }
            break;
        }
        Tensor::new(out_shape, data)
    }

    /// Pads each axis with `(before, after)` copies of `fill`; the interior
    /// is unchanged.
    pub fn pad(&self, pad: &[(usize, usize)], fill: T) -> Result<Tensor<T>> {
        if pad.len() != self.rank() {
            return Err(Error::InvalidArgument(format!(
                "pad: {} pad pairs for rank-{} tensor",
                pad.len(),
                self.rank()
            )));
        }
        let out_extents: Vec<usize> = self
            .shape
            .extents()
            .iter()
            .zip(pad)
            .map(|(&e, &(b, a))| e + b + a)
            .collect();
        let mut out = Tensor::full(&out_extents, fill);
        let mut coords = vec![0usize; self.rank()];
        let mut out_coords = vec![0usize; self.rank()];
        'outer: loop {
            for axis in 0..self.rank() {
                out_coords[axis] = coords[axis] + pad[axis].0;
            }
            let off = out.offset(&out_coords);
            out.data[off] = self.data[self.offset(&coords)];
            for axis in (0..coords.len()).rev() {
                coords[axis] += 1;
                if coords[axis] < self.shape.extent(axis) {
                    continue 'outer;
                }
                coords[axis] = 0;
            }
            break;
        }
        Ok(out)
    }

    /// Pads the two leading (spatial) axes out to `target_h` x `target_w`,
    /// centering the content; a leftover odd pixel goes to the bottom/right.
    pub fn pad_spatial_to(&self, target_h: usize, target_w: usize, fill: T) -> Result<Tensor<T>> {
        if self.rank() < 2 {
            return Err(Error::InvalidArgument(
                "pad_spatial_to needs a tensor of rank >= 2".into(),
            ));
        }
        let (h, w) = (self.shape.extent(0), self.shape.extent(1));
        if target_h < h || target_w < w {
            return Err(Error::InvalidArgument(format!(
                "pad_spatial_to: target {target_h}x{target_w} smaller than {h}x{w}"
            )));
        }
        let top = (target_h - h) / 2;
        let left = (target_w - w) / 2;
        let mut pads = vec![(0usize, 0usize); self.rank()];
        pads[0] = (top, target_h - h - top);
        pads[1] = (left, target_w - w - left);
        self.pad(&pads, fill)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor<{}>({}, ", T::NAME, self.shape)?;
        if self.data.len() <= 8 {
            write!(f, "{:?})", self.data)
        } else {
            write!(f, "[{:?}, ... {} elements])", &self.data[..4], self.data.len())
        }
    }
}

/// Standard matrix-vector product: `w` is `rows x cols`, `x` has `cols`
/// elements, result has `rows`. Accumulation is strictly sequential per row.
pub fn matvec<T: Scalar>(w: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    if w.rank() != 2 || x.rank() != 1 {
        return Err(Error::ShapeMismatch {
            op: "matvec",
            lhs: w.shape().to_string(),
            rhs: x.shape().to_string(),
        });
    }
    let (rows, cols) = (w.shape().extent(0), w.shape().extent(1));
    if cols != x.len() {
        return Err(Error::ShapeMismatch {
            op: "matvec",
            lhs: w.shape().to_string(),
            rhs: x.shape().to_string(),
        });
    }
    let wd = w.data();
    let xd = x.data();
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &wd[r * cols..(r + 1) * cols];
        let mut acc = T::zero();
        for i in 0..cols {
            acc = acc + row[i] * xd[i];
        }
        out.push(acc);
    }
    Tensor::from_slice(&[rows], &out)
}
