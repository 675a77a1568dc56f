//! Square M-QAM with per-axis binary-reflected Gray labels.
//!
//! Point `index = i·√M + q` sits at in-phase level `i` and quadrature level
//! `q` (levels ascending from the most negative amplitude). Its label is the
//! Gray code of `i` followed by the Gray code of `q`, most significant bit
//! first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::bits_per_axis;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: u32,
    axis_bits: u32,
    /// Distance between adjacent levels divided by two.
    half_step: f64,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    /// Point index for every label value.
    by_label: Vec<u32>,
    symbol_variance: f64,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn new(order: u32, symbol_variance: f64) -> Result<Self> {
        let axis_bits = bits_per_axis(order).ok_or(Error::InvalidOrder(order))?;
        if !(symbol_variance.is_finite() && symbol_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "symbol variance must be positive, got {symbol_variance}"
            )));
        }
        let side = 1u32 << axis_bits;
        // Levels ±1, ±3, ... have mean energy per axis (side² − 1)/3.
        let raw_energy = 2.0 * (f64::from(side).powi(2) - 1.0) / 3.0;
        let half_step = (symbol_variance / raw_energy).sqrt();
        let level = |i: u32| (2.0 * f64::from(i) - f64::from(side - 1)) * half_step;

        let mut points = Vec::with_capacity(order as usize);
        let mut labels = Vec::with_capacity(order as usize);
        let mut by_label = vec![0u32; order as usize];
        for i in 0..side {
            for q in 0..side {
                let label = (gray(i) << axis_bits) | gray(q);
                by_label[label as usize] = points.len() as u32;
                points.push(Complex64::new(level(i), level(q)));
                labels.push(label);
            }
        }
        Ok(Self {
            order,
            axis_bits,
            half_step,
            points,
            labels,
            by_label,
            symbol_variance,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.axis_bits as usize
    }

    pub fn symbol_variance(&self) -> f64 {
        self.symbol_variance
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Minimum distance between two points.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.half_step
    }

    /// Integer label of point `index` (bit vector packed MSB first).
    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn bit_label(&self, index: usize) -> Vec<bool> {
        self.unpack(self.labels[index])
    }

    pub fn point_for_label(&self, label: u32) -> Complex64 {
        self.points[self.by_label[label as usize] as usize]
    }

    fn unpack(&self, label: u32) -> Vec<bool> {
        let n = self.bits_per_symbol();
        (0..n).map(|b| (label >> (n - 1 - b)) & 1 == 1).collect()
    }

    /// Maps `log2(M)` bits to their constellation point.
    pub fn map_bits(&self, bits: &[bool]) -> Result<Complex64> {
        let n = self.bits_per_symbol();
        if bits.len() != n {
            return Err(Error::BitLength {
                expected: n,
                got: bits.len(),
            });
        }
        let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        Ok(self.point_for_label(label))
    }

    fn slice_axis(&self, v: f64) -> u32 {
        let top = (1u32 << self.axis_bits) - 1;
        // Continuous level coordinate: level i sits at pos == i.
        let pos = (v / self.half_step + f64::from(top)) / 2.0;
        // Round half down so exact ties go to the lower level.
        let nearest = (pos - 0.5).ceil();
        if nearest <= 0.0 {
            0
        } else {
            (nearest as u32).min(top)
        }
    }

    /// Index of the nearest point. Ties resolve to the smaller index.
    pub fn nearest_index(&self, y: Complex64) -> usize {
        let i = self.slice_axis(y.re);
        let q = self.slice_axis(y.im);
        ((i << self.axis_bits) | q) as usize
    }

    /// Hard decision: label of the nearest point.
    pub fn demap_hard(&self, y: Complex64) -> Vec<bool> {
        self.unpack(self.labels[self.nearest_index(y)])
    }

    /// Number of differing bits between the labels of two points.
    pub fn bit_errors(&self, sent: usize, decided: usize) -> u32 {
        (self.labels[sent] ^ self.labels[decided]).count_ones()
    }
}

/// Builds the Gray-labelled square constellation of order `order` scaled to
/// average energy `symbol_variance`.
pub fn build_constellation(order: u32, symbol_variance: f64) -> Result<Constellation> {
    Constellation::new(order, symbol_variance)
}
