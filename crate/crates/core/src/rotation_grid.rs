//! Sphere partitions with diameter caps and the rotation grids built from them.
//!
//! A rotation is stored as the angle tuples `(x^n, x^{n-1}, …, x^1)` of points
//! `x^J ∈ S^J` and assembled as
//!
//! ```text
//! Υ = Υ^n(x^n) Υ^{n-1}(x^{n-1}) ⋯ Υ^1(x^1)
//! ```
//!
//! where `Υ^J` acts on the trailing coordinates `s..=n+1`, `s = n + 1 - J`,
//! and maps `e_s` to `x^J`:
//!
//! ```text
//! Υ^J(θ_1, …, θ_{J-1}, φ) = R_{s+J-1,s+J}(φ) ⋯ R_{s+1,s+2}(θ_2) R_{s,s+1}(θ_1)
//! ```
//!
//! with `R_{ι,ι+1}(θ)` the rotation taking `e_ι` to `cos θ e_ι + sin θ e_{ι+1}`.
//! Since `Υ e_1 = x^n` and each `Υ^J` is a section of `SO(J+1) → S^J`, the
//! invariant measure is the product of the sphere measures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::harmonics::{from_cartesian, to_cartesian};
use crate::special_functions::sphere_area;

/// Default bound on the number of rotations in a grid.
pub const DEFAULT_GRID_CAP: usize = 50_000_000;

/// One cell of a sphere partition, a box in angle coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub measure: f64,
    /// Certified upper bound on the geodesic diameter.
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePartition {
    pub dim: usize,
    pub delta: f64,
    pub cells: Vec<Cell>,
}

impl SpherePartition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }
}

/// `∫_a^b sin^m θ dθ`, exact.
pub fn sin_power_integral(m: usize, a: f64, b: f64) -> f64 {
    let antiderivative = |x: f64| -> f64 {
        // I_m = -sin^{m-1} cos / m + (m-1)/m I_{m-2}, I_0 = x, I_1 = -cos
        let (s, c) = x.sin_cos();
        let mut prev2 = x;
        let mut prev1 = -c;
        if m == 0 {
            return prev2;
        }
        for k in 2..=m {
            let kf = k as f64;
            let next = -s.powi(k as i32 - 1) * c / kf + (kf - 1.0) / kf * prev2;
            prev2 = prev1;
            prev1 = next;
        }
        prev1
    };
    antiderivative(b) - antiderivative(a)
}

fn pieces(span: f64, delta: f64) -> usize {
    ((span / delta) - 1e-12).ceil().max(1.0) as usize
}

fn partition_cells(dim: usize, delta: f64) -> Vec<Cell> {
    if dim == 1 {
        let k = pieces(2.0 * PI, delta);
        let w = 2.0 * PI / k as f64;
        return (0..k)
            .map(|i| {
                let (a, b) = (i as f64 * w, (i + 1) as f64 * w);
                Cell {
                    center: vec![0.5 * (a + b)],
                    lower: vec![a],
                    upper: vec![b],
                    measure: w,
                    diameter: w.min(PI),
                }
            })
            .collect();
    }
    if delta >= PI {
        let mut lower = vec![0.0; dim];
        let mut upper = vec![PI; dim];
        upper[dim - 1] = 2.0 * PI;
        lower[dim - 1] = 0.0;
        let center = lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect();
        return vec![Cell {
            center,
            lower,
            upper,
            measure: sphere_area(dim),
            diameter: PI,
        }];
    }
    // bands of height h <= δ/2 in θ_1, leaving (δ - h)/sup sin for the
    // sub-partition of S^{dim-1}
    let k = pieces(2.0 * PI, delta);
    let h = PI / k as f64;
    let mut cells = Vec::new();
    for i in 0..k {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let s_max = if a <= PI / 2.0 && PI / 2.0 <= b {
            1.0
        } else {
            a.sin().max(b.sin())
        };
        let band = sin_power_integral(dim - 1, a, b);
        for sub in partition_cells(dim - 1, (delta - h) / s_max) {
            let mut center = vec![0.5 * (a + b)];
            center.extend_from_slice(&sub.center);
            let mut lower = vec![a];
            lower.extend_from_slice(&sub.lower);
            let mut upper = vec![b];
            upper.extend_from_slice(&sub.upper);
            cells.push(Cell {
                center,
                lower,
                upper,
                measure: band * sub.measure,
                diameter: h + s_max * sub.diameter,
            });
        }
    }
    cells
}

/// Number of cells [`partition_sphere`] would produce, without building them.
pub fn partition_count(dim: usize, delta: f64) -> u128 {
    if dim == 1 {
        return pieces(2.0 * PI, delta) as u128;
    }
    if delta >= PI {
        return 1;
    }
    let k = pieces(2.0 * PI, delta);
    let h = PI / k as f64;
    (0..k)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let s_max = if a <= PI / 2.0 && PI / 2.0 <= b {
                1.0
            } else {
                a.sin().max(b.sin())
            };
            partition_count(dim - 1, (delta - h) / s_max)
        })
        .fold(0u128, u128::saturating_add)
}

/// Partition of `S^dim` into angle boxes of geodesic diameter at most `delta`.
///
/// On `S^1` the cells are `⌈2π/δ⌉` equal arcs. For `dim >= 2` and `δ < π`,
/// `θ_1` is cut into `⌈2π/δ⌉` bands of height `h <= δ/2` and each band carries
/// a partition of `S^{dim-1}` with cap `(δ - h)/max sin θ_1`; for `δ >= π` the
/// whole sphere is one cell.
pub fn partition_sphere(dim: usize, delta: f64) -> Result<SpherePartition> {
    if dim == 0 {
        return domain("sphere dimension must be >= 1");
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return domain(format!("diameter cap must be positive, got {delta}"));
    }
    Ok(SpherePartition {
        dim,
        delta,
        cells: partition_cells(dim, delta),
    })
}

/// Matrix of `R_{ι,ι+1}(θ)` (1-based plane index `ι`) on `R^size`.
pub fn planar_rotation(size: usize, iota: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(size, size);
    let (s, c) = theta.sin_cos();
    let (i, j) = (iota - 1, iota);
    m[(i, i)] = c;
    m[(j, i)] = s;
    m[(i, j)] = -s;
    m[(j, j)] = c;
    m
}

fn apply_planar(x: &mut [f64], iota: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    let (i, j) = (iota - 1, iota);
    let (a, b) = (x[i], x[j]);
    x[i] = c * a - s * b;
    x[j] = s * a + c * b;
}

/// Euler-angle tuple of a rotation of `S^n`: the angles of `x^n`, then `x^{n-1}`,
/// down to `x^1`, `n(n+1)/2` numbers in all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub n: usize,
    pub angles: Vec<f64>,
}

impl EulerAngles {
    pub fn new(n: usize, angles: Vec<f64>) -> Result<Self> {
        let expected = n * (n + 1) / 2;
        if angles.len() != expected {
            return Err(Error::Mismatch {
                what: "Euler angle count",
                expected,
                got: angles.len(),
            });
        }
        Ok(Self { n, angles })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            angles: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Angles of `x^J`.
    pub fn level(&self, j: usize) -> &[f64] {
        let n = self.n;
        // levels n, n-1, …, j+1 come first
        let start: usize = ((j + 1)..=n).sum();
        &self.angles[start..start + j]
    }

    /// The planar factors `(ι, θ)` of `Υ`, leftmost first.
    fn factors(&self) -> Vec<(usize, f64)> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.angles.len());
        for j in (1..=n).rev() {
            let s = n + 1 - j;
            // Υ^J = R_{s+J-1}(x_J) ⋯ R_s(x_1)
            for (k, &theta) in self.level(j).iter().enumerate().rev() {
                out.push((s + k, theta));
            }
        }
        out
    }

    /// `Υ x` for ambient `x`.
    pub fn rotate(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &(iota, theta) in self.factors().iter().rev() {
            apply_planar(&mut y, iota, theta);
        }
        y
    }

    /// `Υ^{-1} x`, applying the negated factors in reverse order.
    pub fn rotate_inverse(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &(iota, theta) in self.factors().iter() {
            apply_planar(&mut y, iota, -theta);
        }
        y
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let size = self.n + 1;
        self.factors()
            .iter()
            .fold(DMatrix::identity(size, size), |m, &(iota, theta)| {
                m * planar_rotation(size, iota, theta)
            })
    }
}

/// Image of an angle tuple under the rotation with the given Euler angles.
pub fn apply_rotation(n: usize, euler: &EulerAngles, point: &[f64]) -> Result<Vec<f64>> {
    if euler.n != n {
        return Err(Error::Mismatch {
            what: "rotation dimension",
            expected: n,
            got: euler.n,
        });
    }
    if point.len() != n {
        return Err(Error::Mismatch {
            what: "angle tuple length",
            expected: n,
            got: point.len(),
        });
    }
    Ok(from_cartesian(&euler.rotate(&to_cartesian(point))))
}

/// `Υ^{-1}` applied to an angle tuple.
pub fn apply_inverse_rotation(n: usize, euler: &EulerAngles, point: &[f64]) -> Result<Vec<f64>> {
    if euler.n != n || point.len() != n {
        return Err(Error::Mismatch {
            what: "rotation dimension",
            expected: n,
            got: euler.n,
        });
    }
    Ok(from_cartesian(&euler.rotate_inverse(&to_cartesian(point))))
}

/// Product of partitions of `S^n, …, S^1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationGrid {
    pub n: usize,
    /// `(δ_n, …, δ_1)`.
    pub deltas: Vec<f64>,
    /// Partitions of `S^n, …, S^1`.
    pub partitions: Vec<SpherePartition>,
}

/// One element of a rotation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRotation {
    /// `(α_n, …, α_1)`.
    pub indices: Vec<usize>,
    pub euler: EulerAngles,
    pub weight: f64,
}

pub fn build_rotation_grid(n: usize, deltas: &[f64]) -> Result<RotationGrid> {
    build_rotation_grid_capped(n, deltas, DEFAULT_GRID_CAP)
}

pub fn build_rotation_grid_capped(n: usize, deltas: &[f64], cap: usize) -> Result<RotationGrid> {
    if n < 2 {
        return domain(format!("sphere dimension must be >= 2, got {n}"));
    }
    if deltas.len() != n {
        return Err(Error::Mismatch {
            what: "diameter caps (one per sphere S^n..S^1)",
            expected: n,
            got: deltas.len(),
        });
    }
    if let Some(bad) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return domain(format!("diameter cap must be positive, got {bad}"));
    }
    let size = deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| partition_count(n - i, delta))
        .fold(1u128, u128::saturating_mul);
    if size > cap as u128 {
        return Err(Error::GridTooLarge { size, cap });
    }
    let partitions: Vec<SpherePartition> = deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| partition_sphere(n - i, delta))
        .collect::<Result<_>>()?;
    Ok(RotationGrid {
        n,
        deltas: deltas.to_vec(),
        partitions,
    })
}

impl RotationGrid {
    /// `K_n, …, K_1`.
    pub fn sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(SpherePartition::len).collect()
    }

    pub fn len(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `∏_J Σ_J`, the total invariant measure.
    pub fn total_measure(&self) -> f64 {
        (1..=self.n).map(sphere_area).product()
    }

    /// Multi-index of element `g`, `α_n` most significant.
    pub fn multi_index(&self, mut g: usize) -> Vec<usize> {
        let sizes = self.sizes();
        let mut idx = vec![0; sizes.len()];
        for (slot, &k) in idx.iter_mut().zip(&sizes).rev() {
            *slot = g % k;
            g /= k;
        }
        idx
    }

    pub fn element(&self, g: usize) -> GridRotation {
        let indices = self.multi_index(g);
        let mut angles = Vec::with_capacity(self.n * (self.n + 1) / 2);
        let mut weight = 1.0;
        for (p, &a) in self.partitions.iter().zip(&indices) {
            let cell = &p.cells[a];
            angles.extend_from_slice(&cell.center);
            weight *= cell.measure;
        }
        GridRotation {
            indices,
            euler: EulerAngles { n: self.n, angles },
            weight,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = GridRotation> + '_ {
        (0..self.len()).map(|g| self.element(g))
    }

    pub fn total_weight(&self) -> f64 {
        self.partitions.iter().map(SpherePartition::total_measure).product()
    }

    /// Grid with every cap halved.
    pub fn refined(&self, cap: usize) -> Result<RotationGrid> {
        let halved: Vec<f64> = self.deltas.iter().map(|d| d / 2.0).collect();
        build_rotation_grid_capped(self.n, &halved, cap)
    }
}

/// `Υ` applied to ambient vectors, as a dense matrix-vector product.
pub fn rotate_vector(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).iter().copied().collect()
}
