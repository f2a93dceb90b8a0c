//! Staggered (marker-and-cell) grid storage and the discrete operators shared
//! by the time stepper and the assimilation code.
//!
//! Layout for an `nx × ny` channel that is periodic in `x` with walls at
//! `y = 0` and `y = ly`:
//!
//! - cell centers (`Θ`, `p`): `nx × ny` values at `((i + ½)dx, (j + ½)dy)`
//! - vertical faces (`u`): `nx × ny` values at `(i·dx, (j + ½)dy)`; face `nx`
//!   is identified with face `0`
//! - horizontal faces (`v`): `nx × (ny + 1)` values at `((i + ½)dx, j·dy)`;
//!   rows `0` and `ny` lie on the walls
//!
//! Every field carries a one-cell halo. Halo columns hold the periodic wrap;
//! halo rows hold the wall reflection for the field's boundary condition.

use std::fmt;

use crate::error::{Error, Result};

/// Uniform channel discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::config(format!(
                "grid must have at least 4 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::config(format!(
                "domain lengths must be positive and finite, got lx={lx}, ly={ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// The 200 × 100 discretization of `[0, 2] × [0, 1]`.
    pub fn paper() -> Self {
        Self { nx: 200, ny: 100, lx: 2.0, ly: 1.0 }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Number of stored (interior) rows and columns for a field at `loc`.
    pub fn shape(&self, loc: Location) -> (usize, usize) {
        match loc {
            Location::Center | Location::UFace => (self.nx, self.ny),
            Location::VFace => (self.nx, self.ny + 1),
        }
    }

    /// Physical coordinates of native sample `(i, j)` of a field at `loc`.
    pub fn position(&self, loc: Location, i: usize, j: usize) -> (f64, f64) {
        let (dx, dy) = (self.dx(), self.dy());
        match loc {
            Location::Center => ((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy),
            Location::UFace => (i as f64 * dx, (j as f64 + 0.5) * dy),
            Location::VFace => ((i as f64 + 0.5) * dx, j as f64 * dy),
        }
    }
}

/// Where on the staggered grid a field lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Center,
    UFace,
    VFace,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Location::Center => "center",
            Location::UFace => "u-face",
            Location::VFace => "v-face",
        })
    }
}

/// Wall treatment applied to the halo rows of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallCondition {
    /// Zero value on the wall, realized by odd reflection (`ghost = −interior`).
    DirichletReflect,
    /// Zero normal derivative (`ghost = interior`); used for pressure.
    Neumann,
    /// Field is collocated on the wall and pinned to zero there.
    DirichletOnWall,
}

/// A staggered field with a one-cell halo.
#[derive(Clone, PartialEq)]
pub struct Field {
    loc: Location,
    cols: usize,
    rows: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("loc", &self.loc)
            .field("cols", &self.cols)
            .field("rows", &self.rows)
            .finish_non_exhaustive()
    }
}

impl Field {
    pub fn zeros(grid: &GridSpec, loc: Location) -> Self {
        let (cols, rows) = grid.shape(loc);
        Self { loc, cols, rows, data: vec![0.0; (cols + 2) * (rows + 2)] }
    }

    /// Fill the interior from `f(i, j)`; the halo is left at zero.
    pub fn from_fn(grid: &GridSpec, loc: Location, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(grid, loc);
        for j in 0..out.rows {
            for i in 0..out.cols {
                out[(i, j)] = f(i, j);
            }
        }
        out
    }

    /// Sample a function of physical position at the native locations.
    pub fn sample(grid: &GridSpec, loc: Location, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, loc, |i, j| {
            let (x, y) = grid.position(loc, i, j);
            f(x, y)
        })
    }

    /// Build from a row-major interior buffer (`rows` rows of `cols` values).
    pub fn from_interior(grid: &GridSpec, loc: Location, values: &[f64]) -> Result<Self> {
        let (cols, rows) = grid.shape(loc);
        if values.len() != cols * rows {
            return Err(Error::config(format!(
                "{loc} field needs {} values, got {}",
                cols * rows,
                values.len()
            )));
        }
        Ok(Self::from_fn(grid, loc, |i, j| values[j * cols + i]))
    }

    #[inline]
    pub fn location(&self) -> Location {
        self.loc
    }

    /// `(columns, rows)` of the interior.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    #[inline]
    fn offset(&self, i: isize, j: isize) -> usize {
        debug_assert!(i >= -1 && i <= self.cols as isize && j >= -1 && j <= self.rows as isize);
        ((j + 1) as usize) * (self.cols + 2) + (i + 1) as usize
    }

    /// Value including the halo, `-1 ≤ i ≤ cols`, `-1 ≤ j ≤ rows`.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: isize, j: isize) -> &mut f64 {
        let k = self.offset(i, j);
        &mut self.data[k]
    }

    /// Interior value with periodic wrap in `x` (any integer column).
    #[inline]
    pub fn wrap(&self, i: isize, j: usize) -> f64 {
        let i = i.rem_euclid(self.cols as isize) as usize;
        self[(i, j)]
    }

    /// Interior row `j` as a slice.
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        let start = (j + 1) * (self.cols + 2) + 1;
        &self.data[start..start + self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let start = (j + 1) * (self.cols + 2) + 1;
        &mut self.data[start..start + self.cols]
    }

    /// Interior values, row-major.
    pub fn interior(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).flat_map(move |j| self.row(j).iter().copied())
    }

    pub fn interior_vec(&self) -> Vec<f64> {
        self.interior().collect()
    }

    fn rows_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |j| self.row(j))
    }

    pub fn max_abs(&self) -> f64 {
        self.rows_iter()
            .map(|r| r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        // x·0 is NaN exactly for non-finite x
        self.rows_iter().all(|r| r.iter().fold(0.0, |acc, x| acc + x * 0.0) == 0.0)
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.rows_iter().map(|r| r.iter().sum::<f64>()).sum();
        total / (self.cols * self.rows) as f64
    }

    /// Euclidean norm over native interior locations.
    pub fn norm2(&self) -> f64 {
        self.rows_iter().map(|r| r.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
    }

    /// Plain (unweighted) inner product of the interiors.
    pub fn dot(&self, other: &Field) -> f64 {
        self.rows_iter()
            .zip(other.rows_iter())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    /// Euclidean norm of `self − other` without allocating.
    pub fn distance2(&self, other: &Field) -> f64 {
        self.rows_iter()
            .zip(other.rows_iter())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn fill(&mut self, value: f64) {
        for j in 0..self.rows {
            self.row_mut(j).fill(value);
        }
    }

    /// `self += a · other` on the interior.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        debug_assert_eq!(self.shape(), other.shape());
        for j in 0..self.rows {
            let src = other.row(j);
            for (d, s) in self.row_mut(j).iter_mut().zip(src) {
                *d += a * s;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for j in 0..self.rows {
            for d in self.row_mut(j) {
                *d *= a;
            }
        }
    }

    /// Interior difference `self − other`.
    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn check_matches(&self, grid: &GridSpec, loc: Location) -> Result<()> {
        let expected = grid.shape(loc);
        if self.loc != loc || self.shape() != expected {
            return Err(Error::config(format!(
                "expected a {loc} field of shape {:?}, got a {} field of shape {:?}",
                expected,
                self.loc,
                self.shape()
            )));
        }
        Ok(())
    }

    /// Refresh the halo: periodic columns, then wall rows according to `wall`.
    pub fn apply_bc(&mut self, wall: WallCondition) {
        let (cols, rows) = (self.cols as isize, self.rows as isize);
        if wall == WallCondition::DirichletOnWall {
            self.row_mut(0).fill(0.0);
            let top = self.rows - 1;
            self.row_mut(top).fill(0.0);
        }
        for j in 0..rows {
            *self.at_mut(-1, j) = self.at(cols - 1, j);
            *self.at_mut(cols, j) = self.at(0, j);
        }
        for i in -1..=cols {
            let (bottom, top) = match wall {
                WallCondition::DirichletReflect => (-self.at(i, 0), -self.at(i, rows - 1)),
                WallCondition::Neumann => (self.at(i, 0), self.at(i, rows - 1)),
                // Odd extension about the wall row.
                WallCondition::DirichletOnWall => (-self.at(i, 1), -self.at(i, rows - 2)),
            };
            *self.at_mut(i, -1) = bottom;
            *self.at_mut(i, rows) = top;
        }
    }
}

impl std::ops::Index<(usize, usize)> for Field {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[(j + 1) * (self.cols + 2) + i + 1]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Field {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[(j + 1) * (self.cols + 2) + i + 1]
    }
}

/// The prognostic variables on one grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub theta: Field,
    pub p: Field,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            u: Field::zeros(grid, Location::UFace),
            v: Field::zeros(grid, Location::VFace),
            theta: Field::zeros(grid, Location::Center),
            p: Field::zeros(grid, Location::Center),
            t: 0.0,
        }
    }

    pub fn check_matches(&self, grid: &GridSpec) -> Result<()> {
        self.u.check_matches(grid, Location::UFace)?;
        self.v.check_matches(grid, Location::VFace)?;
        self.theta.check_matches(grid, Location::Center)?;
        self.p.check_matches(grid, Location::Center)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.theta.is_finite() && self.p.is_finite()
    }

    /// Largest cell divergence relative to `max(1, max|u|, max|v|)`.
    pub fn scaled_divergence(&self, grid: &GridSpec) -> f64 {
        let scale = 1f64.max(self.u.max_abs()).max(self.v.max_abs());
        divergence(&self.u, &self.v, grid).max_abs() / scale
    }
}

/// Native wall condition of each prognostic variable.
pub fn wall_condition(loc: Location, is_pressure: bool) -> WallCondition {
    match (loc, is_pressure) {
        (Location::Center, true) => WallCondition::Neumann,
        (Location::VFace, _) => WallCondition::DirichletOnWall,
        _ => WallCondition::DirichletReflect,
    }
}

/// Periodic wrap in `x` for every field, no-slip and zero-anomaly reflection
/// at the walls for `u` and `Θ`, `v = 0` on the wall rows, and a zero-flux
/// halo for `p`.
pub fn apply_boundary_conditions(state: &mut State, grid: &GridSpec) -> Result<()> {
    state.check_matches(grid)?;
    state.u.apply_bc(WallCondition::DirichletReflect);
    state.v.apply_bc(WallCondition::DirichletOnWall);
    state.theta.apply_bc(WallCondition::DirichletReflect);
    state.p.apply_bc(WallCondition::Neumann);
    Ok(())
}

/// Cell-centered divergence `(u[i+1,j] − u[i,j])/dx + (v[i,j+1] − v[i,j])/dy`.
pub fn divergence(u: &Field, v: &Field, grid: &GridSpec) -> Field {
    let (idx, idy) = (1.0 / grid.dx(), 1.0 / grid.dy());
    let nx = grid.nx;
    let mut out = Field::zeros(grid, Location::Center);
    for j in 0..grid.ny {
        let (ur, vb, vt) = (u.row(j), v.row(j), v.row(j + 1));
        let orow = out.row_mut(j);
        for i in 0..nx {
            let east = if i + 1 == nx { ur[0] } else { ur[i + 1] };
            orow[i] = (east - ur[i]) * idx + (vt[i] - vb[i]) * idy;
        }
    }
    out
}

/// Face-located pressure gradient; the wall rows of the `v` component are zero.
pub fn gradient(p: &Field, grid: &GridSpec) -> (Field, Field) {
    let (idx, idy) = (1.0 / grid.dx(), 1.0 / grid.dy());
    let nx = grid.nx;
    let mut gx = Field::zeros(grid, Location::UFace);
    let mut gy = Field::zeros(grid, Location::VFace);
    for j in 0..grid.ny {
        let pr = p.row(j);
        let grow = gx.row_mut(j);
        for i in 0..nx {
            let west = if i == 0 { pr[nx - 1] } else { pr[i - 1] };
            grow[i] = (pr[i] - west) * idx;
        }
    }
    for j in 1..grid.ny {
        let (below, above) = (p.row(j - 1), p.row(j));
        for (i, g) in gy.row_mut(j).iter_mut().enumerate() {
            *g = (above[i] - below[i]) * idy;
        }
    }
    (gx, gy)
}

/// Two-point averages of the face velocities onto cell centers.
pub fn to_cell_centers(u: &Field, v: &Field, grid: &GridSpec) -> (Field, Field) {
    let nx = grid.nx;
    let uc = Field::from_fn(grid, Location::Center, |i, j| {
        0.5 * (u[(i, j)] + u[((i + 1) % nx, j)])
    });
    let vc = Field::from_fn(grid, Location::Center, |i, j| 0.5 * (v[(i, j)] + v[(i, j + 1)]));
    (uc, vc)
}

/// Five-point Laplacian of a cell-centered field with zero-flux walls and
/// periodic `x`; this is exactly `divergence ∘ gradient`.
pub fn laplacian_neumann(p: &Field, grid: &GridSpec) -> Field {
    let (idx2, idy2) = (1.0 / (grid.dx() * grid.dx()), 1.0 / (grid.dy() * grid.dy()));
    let ny = grid.ny;
    Field::from_fn(grid, Location::Center, |i, j| {
        let c = p[(i, j)];
        let xx = p.wrap(i as isize - 1, j) - 2.0 * c + p.wrap(i as isize + 1, j);
        let down = if j == 0 { 0.0 } else { p[(i, j - 1)] - c };
        let up = if j + 1 == ny { 0.0 } else { p[(i, j + 1)] - c };
        xx * idx2 + (down + up) * idy2
    })
}

/// Five-point Laplacian of `q` with its native boundary condition.
///
/// `u` and `Θ` use the odd wall reflection; `v` treats its wall rows as
/// fixed zeros and returns zero there.
pub fn laplacian(q: &Field, grid: &GridSpec) -> Field {
    let (idx2, idy2) = (1.0 / (grid.dx() * grid.dx()), 1.0 / (grid.dy() * grid.dy()));
    let loc = q.location();
    let rows = q.shape().1;
    Field::from_fn(grid, loc, |i, j| {
        let c = q[(i, j)];
        let xx = q.wrap(i as isize - 1, j) - 2.0 * c + q.wrap(i as isize + 1, j);
        match loc {
            Location::VFace => {
                if j == 0 || j + 1 == rows {
                    0.0
                } else {
                    xx * idx2 + (q[(i, j - 1)] - 2.0 * c + q[(i, j + 1)]) * idy2
                }
            }
            _ => {
                let down = if j == 0 { -c } else { q[(i, j - 1)] };
                let up = if j + 1 == rows { -c } else { q[(i, j + 1)] };
                xx * idx2 + (down - 2.0 * c + up) * idy2
            }
        }
    })
}
