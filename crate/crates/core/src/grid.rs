//! Uniform complex-plane grids, field sampling, and spectral Wirtinger
//! differentiation.
//!
//! A [`GridSpec`] describes an N×N sampling of the square box
//! `center ± half_width`; a [`ComplexField`] holds one complex sample per
//! cell center, row-major with the first index along the x axis. All
//! multiplier operators treat the box as a torus, so compactly supported
//! data is expected to live in the central quarter of the box (a padding
//! factor of four) to keep wrap-around below discretization error.

use crate::spectral;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("resolution {0} is not a power of two ≥ 16")]
    BadResolution(usize),
    #[error("half_width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("sampled function returned a non-finite value at {0}")]
    NonFiniteSample(Complex64),
    #[error("field data contains a non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("value buffer has length {got}, expected {expect}")]
    BadLength { got: usize, expect: usize },
    #[error("field specs differ: {0:?} vs {1:?}")]
    SpecMismatch(GridSpec, GridSpec),
    #[error("malformed field file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Geometry of a uniform N×N grid over `center ± half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Complex64,
    pub half_width: f64,
    pub resolution: usize,
}

/// Builds a grid spec, enforcing a power-of-two resolution ≥ 16.
pub fn make_grid(center: Complex64, half_width: f64, resolution: usize) -> Result<GridSpec, GridError> {
    if resolution < 16 || !resolution.is_power_of_two() {
        return Err(GridError::BadResolution(resolution));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(GridError::BadHalfWidth(half_width));
    }
    Ok(GridSpec { center, half_width, resolution })
}

impl GridSpec {
    /// Cell spacing h = 2·half_width / resolution.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// Period of the torus the multiplier operators act on.
    #[inline]
    pub fn period(&self) -> f64 {
        2.0 * self.half_width
    }

    /// Total number of cells, N².
    #[inline]
    pub fn num_cells(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Grid point (j, k) = center + h·(j − N/2, k − N/2).
    #[inline]
    pub fn point(&self, j: usize, k: usize) -> Complex64 {
        let n2 = (self.resolution / 2) as f64;
        let h = self.spacing();
        self.center + Complex64::new(h * (j as f64 - n2), h * (k as f64 - n2))
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.resolution + k
    }

    /// Index of the grid cell whose center is nearest to `z`.
    pub fn nearest_cell(&self, z: Complex64) -> (usize, usize) {
        let n = self.resolution;
        let n2 = (n / 2) as f64;
        let h = self.spacing();
        let clamp = |v: f64| (v.round().max(0.0) as usize).min(n - 1);
        let j = clamp((z.re - self.center.re) / h + n2);
        let k = clamp((z.im - self.center.im) / h + n2);
        (j, k)
    }

    /// True when `z` lies in the central quarter of the box (half-width/4
    /// in each coordinate), the support region safe from wrap-around.
    #[inline]
    pub fn in_central_quarter(&self, z: Complex64) -> bool {
        let q = self.half_width / 4.0;
        (z.re - self.center.re).abs() <= q && (z.im - self.center.im).abs() <= q
    }

    pub fn iter_points(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let n = self.resolution;
        (0..n).flat_map(move |j| (0..n).map(move |k| (j, k, self.point(j, k))))
    }
}

/// Complex samples on a [`GridSpec`], row-major (index = j·N + k).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    /// Wraps a value buffer, rejecting non-finite entries eagerly.
    pub fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != spec.num_cells() {
            return Err(GridError::BadLength { got: values.len(), expect: spec.num_cells() });
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(GridError::NonFiniteValue(i));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![Complex64::default(); spec.num_cells()] }
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.values[self.spec.index(j, k)]
    }

    pub fn same_spec(&self, other: &Self) -> Result<(), GridError> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(GridError::SpecMismatch(self.spec, other.spec))
        }
    }

    /// Pointwise map, preserving the spec.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics on spec mismatch; silent misaligned arithmetic is exactly the
    /// failure mode the spec equality check exists to prevent.
    pub fn zip<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Self {
        self.same_spec(other).expect("field arithmetic requires identical grid specs");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self { spec: self.spec, values }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| c * v)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Mean of the samples (the zero-frequency Fourier coefficient).
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Discrete L² norm: (Σ|f|² h²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let h2 = self.spec.spacing() * self.spec.spacing();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h2).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ⟨f, g⟩ = Σ f·conj(g)·h².
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.same_spec(other).expect("inner product requires identical grid specs");
        let h2 = self.spec.spacing() * self.spec.spacing();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * h2
    }

    /// Fraction of the total |f| mass outside the central quarter.
    pub fn mass_outside_central_quarter(&self) -> f64 {
        let mut total = 0.0;
        let mut outside = 0.0;
        for (j, k, z) in self.spec.iter_points() {
            let m = self.values[self.spec.index(j, k)].norm();
            total += m;
            if !self.spec.in_central_quarter(z) {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.values
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.num_cells());
        Self { spec, values }
    }
}

/// Samples a pointwise function at every cell center.
pub fn sample<F: Fn(Complex64) -> Complex64>(f: F, spec: GridSpec) -> Result<ComplexField, GridError> {
    let mut values = Vec::with_capacity(spec.num_cells());
    for (_, _, z) in spec.iter_points() {
        let v = f(z);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(GridError::NonFiniteSample(z));
        }
        values.push(v);
    }
    Ok(ComplexField::from_raw(spec, values))
}

/// Wirtinger derivatives (∂f, ∂̄f) by Fourier differentiation under
/// periodic extension.
pub fn wirtinger(field: &ComplexField) -> (ComplexField, ComplexField) {
    let spec = field.spec();
    let n = spec.resolution;
    let period = spec.period();
    let d = spectral::apply_multiplier(field.values(), n, period, spectral::d_symbol);
    let dbar = spectral::apply_multiplier(field.values(), n, period, spectral::dbar_symbol);
    (ComplexField::from_raw(spec, d), ComplexField::from_raw(spec, dbar))
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    center_re: f64,
    center_im: f64,
    half_width: f64,
    resolution: usize,
}

/// Writes a field in the CFLD1 format: one JSON header line, then N²·2
/// little-endian f64 values (re, im interleaved, row-major).
pub fn write_cfld<W: Write>(field: &ComplexField, w: &mut W) -> Result<(), GridError> {
    let spec = field.spec();
    let header = FieldHeader {
        center_re: spec.center.re,
        center_im: spec.center.im,
        half_width: spec.half_width,
        resolution: spec.resolution,
    };
    let mut line = serde_json::to_string(&header).expect("header serialization");
    line.push('\n');
    w.write_all(line.as_bytes())?;
    let mut buf = Vec::with_capacity(field.values().len() * 16);
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a field in the CFLD1 format.
pub fn read_cfld<R: Read>(r: &mut R) -> Result<ComplexField, GridError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| GridError::BadFile("missing header line".into()))?;
    let header: FieldHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| GridError::BadFile(format!("bad header: {e}")))?;
    let spec = make_grid(
        Complex64::new(header.center_re, header.center_im),
        header.half_width,
        header.resolution,
    )?;
    let body = &bytes[newline + 1..];
    let expect = spec.num_cells() * 16;
    if body.len() != expect {
        return Err(GridError::BadFile(format!(
            "payload has {} bytes, expected {expect}",
            body.len()
        )));
    }
    let mut values = Vec::with_capacity(spec.num_cells());
    for chunk in body.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    ComplexField::from_values(spec, values)
}

/// CSV export with columns j,k,x,y,re,im.
pub fn write_csv<W: Write>(field: &ComplexField, w: &mut W) -> Result<(), GridError> {
    writeln!(w, "j,k,x,y,re,im")?;
    let spec = field.spec();
    for (j, k, z) in spec.iter_points() {
        let v = field.at(j, k);
        writeln!(w, "{j},{k},{},{},{},{}", z.re, z.im, v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_grid_spacing() {
        let spec = make_grid(c(0.0, 0.0), 4.0, 256).unwrap();
        assert_relative_eq!(spec.spacing(), 0.03125);
        let spec = make_grid(c(1.0, 1.0), 2.0, 16).unwrap();
        assert_relative_eq!(spec.spacing(), 0.25);
        assert!(matches!(make_grid(c(0.0, 0.0), 1.0, 100), Err(GridError::BadResolution(100))));
        assert!(matches!(make_grid(c(0.0, 0.0), 1.0, 8), Err(GridError::BadResolution(8))));
        assert!(make_grid(c(0.0, 0.0), -1.0, 64).is_err());
    }

    #[test]
    fn sample_zero_and_identity() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 16).unwrap();
        let zero = sample(|_| c(0.0, 0.0), spec).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
        let ident = sample(|z| z, spec).unwrap();
        for (j, k, z) in spec.iter_points() {
            assert_eq!(ident.at(j, k), z);
        }
    }

    #[test]
    fn sample_rejects_non_finite() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 16).unwrap();
        let err = sample(|z| c(1.0 / (z.re - z.re), 0.0), spec);
        assert!(matches!(err, Err(GridError::NonFiniteSample(_))));
    }

    #[test]
    fn disk_mass_near_pi() {
        // χ_D on an 8-wide box: the Riemann sum of the disk area.
        let spec = make_grid(c(0.0, 0.0), 4.0, 1024).unwrap();
        let chi = sample(|z| if z.norm() < 1.0 { c(1.0, 0.0) } else { c(0.0, 0.0) }, spec).unwrap();
        let h2 = spec.spacing() * spec.spacing();
        let mass: f64 = chi.values().iter().map(|v| v.re).sum::<f64>() * h2;
        assert!((mass - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI);
    }

    #[test]
    fn wirtinger_of_constant_vanishes() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 32).unwrap();
        let f = sample(|_| c(2.5, -1.0), spec).unwrap();
        let (d, dbar) = wirtinger(&f);
        assert!(d.sup_norm() < 1e-12);
        assert!(dbar.sup_norm() < 1e-12);
    }

    #[test]
    fn wirtinger_single_mode_is_exact() {
        // A pure Fourier mode is an eigenfunction of both derivatives.
        let spec = make_grid(c(0.0, 0.0), 1.0, 64).unwrap();
        let period = spec.period();
        let (m1, m2) = (1.0, 2.0);
        let kx = 2.0 * std::f64::consts::PI * m1 / period;
        let ky = 2.0 * std::f64::consts::PI * m2 / period;
        let f = sample(|z| (Complex64::i() * (kx * z.re + ky * z.im)).exp(), spec).unwrap();
        let (d, dbar) = wirtinger(&f);
        let sd = spectral::d_symbol(kx, ky);
        let sdb = spectral::dbar_symbol(kx, ky);
        let d_err = d.sub(&f.scale(sd)).sup_norm();
        let db_err = dbar.sub(&f.scale(sdb)).sup_norm();
        assert!(d_err < 1e-10, "d_err = {d_err}");
        assert!(db_err < 1e-10, "db_err = {db_err}");
    }

    #[test]
    fn wirtinger_product_rule_on_window() {
        // f = w(z)·z̄ with w a numerically compactly supported Gaussian:
        // ∂̄f = w + z̄·∂̄w, with ∂̄w = −(z/σ²)·w.
        let spec = make_grid(c(0.0, 0.0), 2.0, 512).unwrap();
        let s2 = 0.35 * 0.35;
        let w = |z: Complex64| (-z.norm_sqr() / s2).exp();
        let f = sample(|z| c(w(z), 0.0) * z.conj(), spec).unwrap();
        let (_, dbar) = wirtinger(&f);
        let expect = sample(|z| c(w(z), 0.0) * (Complex64::new(1.0, 0.0) - z.conj() * z / s2), spec).unwrap();
        let mut worst = 0.0f64;
        for (j, k, z) in spec.iter_points() {
            if z.norm() < 0.35 {
                worst = worst.max((dbar.at(j, k) - expect.at(j, k)).norm());
            }
        }
        assert!(worst < 1e-10, "interior product-rule defect {worst}");
    }

    #[test]
    fn wirtinger_linearity_and_conjugation() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 32).unwrap();
        let f = sample(|z| (Complex64::i() * std::f64::consts::PI * z.re).exp(), spec).unwrap();
        let g = sample(|z| c((std::f64::consts::PI * z.im).cos(), 0.3), spec).unwrap();
        let (a, b) = (c(1.25, -0.5), c(0.0, 2.0));
        let lhs = wirtinger(&f.scale(a).add(&g.scale(b)));
        let (df, dbf) = wirtinger(&f);
        let (dg, dbg) = wirtinger(&g);
        assert!(lhs.0.sub(&df.scale(a).add(&dg.scale(b))).sup_norm() < 1e-12);
        assert!(lhs.1.sub(&dbf.scale(a).add(&dbg.scale(b))).sup_norm() < 1e-12);
        // ∂f = conj(∂̄ conj(f))
        let (_, db_conj) = wirtinger(&f.conj());
        assert!(df.sub(&db_conj.conj()).sup_norm() < 1e-12);
    }

    #[test]
    fn cfld_roundtrip() {
        let spec = make_grid(c(0.5, -0.25), 2.0, 16).unwrap();
        let f = sample(|z| z * z + c(0.1, 0.2), spec).unwrap();
        let mut buf = Vec::new();
        write_cfld(&f, &mut buf).unwrap();
        assert!(buf.starts_with(b"{"));
        let g = read_cfld(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn cfld_rejects_truncated_payload() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 16).unwrap();
        let f = ComplexField::zeros(spec);
        let mut buf = Vec::new();
        write_cfld(&f, &mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        assert!(matches!(read_cfld(&mut buf.as_slice()), Err(GridError::BadFile(_))));
    }

    #[test]
    fn csv_header_and_rows() {
        let spec = make_grid(c(0.0, 0.0), 1.0, 16).unwrap();
        let f = ComplexField::zeros(spec);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("j,k,x,y,re,im"));
        assert_eq!(lines.count(), 256);
    }
}
