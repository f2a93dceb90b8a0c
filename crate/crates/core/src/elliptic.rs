//! Direct solvers for the pressure Poisson problem and the backward-Euler
//! diffusion (Helmholtz) problems on the periodic channel.
//!
//! Each solve transforms every grid row to Fourier space in `x`, which
//! diagonalizes the periodic second difference, and then runs one
//! tridiagonal (Thomas) solve in `y` per wavenumber. Rows are real, so only
//! wavenumbers `0..=nx/2` are kept.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Location};

/// Relative bound on the rhs mean accepted by the Neumann Poisson solve.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;

/// Which elliptic operator a solve inverts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipticKind {
    /// `∇²p = f`, zero-flux walls, mean-zero gauge.
    PoissonNeumannY,
    /// `(I − γ∇²)q = f` for a field that vanishes on the walls by reflection (`u`, `Θ`).
    HelmholtzDirichletY,
    /// `(I − γ∇²)q = f` for a field collocated on the walls (`v`).
    HelmholtzWallRowsY,
}

/// A configured elliptic problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticProblem {
    pub kind: EllipticKind,
    pub gamma: f64,
    pub grid: GridSpec,
}

/// Reusable solver owning the FFT plans, cached factorizations and scratch
/// space for one grid.
pub struct EllipticSolver {
    grid: GridSpec,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    /// `Λ_k = (2/dx²)(1 − cos(2πk/nx))`, the symbol of `−∂²/∂x²`.
    symbol_x: Vec<f64>,
    /// Retained wavenumbers `0..=nx/2`.
    modes: usize,
    /// Row-major `(row, mode)` coefficients.
    spectrum: Vec<Complex64>,
    row: Vec<f64>,
    forward_scratch: Vec<Complex64>,
    inverse_scratch: Vec<Complex64>,
    factors: Vec<Factorization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FactorKey {
    Poisson,
    Reflected(u64),
    WallRows(u64),
}

/// Thomas factorization of the tridiagonal systems of every mode, stored
/// row-major like the spectrum so a sweep touches contiguous memory.
struct Factorization {
    key: FactorKey,
    off: f64,
    inv_denom: Vec<f64>,
    c_prime: Vec<f64>,
}

impl std::fmt::Debug for EllipticSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticSolver").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl Clone for EllipticSolver {
    fn clone(&self) -> Self {
        Self::new(&self.grid)
    }
}

impl EllipticSolver {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(grid.nx);
        let inverse = planner.plan_fft_inverse(grid.nx);
        let dx = grid.dx();
        let symbol_x = (0..grid.nx)
            .map(|k| 2.0 / (dx * dx) * (1.0 - (2.0 * PI * k as f64 / grid.nx as f64).cos()))
            .collect();
        let modes = grid.nx / 2 + 1;
        Self {
            grid: *grid,
            row: forward.make_input_vec(),
            forward_scratch: forward.make_scratch_vec(),
            inverse_scratch: inverse.make_scratch_vec(),
            forward,
            inverse,
            symbol_x,
            modes,
            spectrum: vec![Complex64::default(); modes * (grid.ny + 1)],
            factors: Vec::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Symbol of `−∂²/∂x²` for wavenumber index `k`.
    pub fn symbol_x(&self, k: usize) -> f64 {
        self.symbol_x[k]
    }

    fn transform_rows(&mut self, field: &Field, rows: std::ops::Range<usize>) {
        let m = self.modes;
        for (r, j) in rows.enumerate() {
            self.row.copy_from_slice(field.row(j));
            let dst = &mut self.spectrum[r * m..(r + 1) * m];
            self.forward
                .process_with_scratch(&mut self.row, dst, &mut self.forward_scratch)
                .expect("buffer sizes come from the plan");
        }
    }

    fn inverse_rows(&mut self, out: &mut Field, rows: std::ops::Range<usize>) {
        let m = self.modes;
        let nx = self.grid.nx;
        let norm = 1.0 / nx as f64;
        for (r, j) in rows.enumerate() {
            let src = &mut self.spectrum[r * m..(r + 1) * m];
            src[0].im = 0.0;
            if nx % 2 == 0 {
                src[m - 1].im = 0.0;
            }
            self.inverse
                .process_with_scratch(src, &mut self.row, &mut self.inverse_scratch)
                .expect("buffer sizes come from the plan");
            for (d, s) in out.row_mut(j).iter_mut().zip(&self.row) {
                *d = s * norm;
            }
        }
    }

    /// Index of the factorization for `key` over `n` rows, building it on
    /// first use. `diag(k, λ, j)` is the diagonal of mode `k`, row `j`.
    fn factorization(&mut self, key: FactorKey, n: usize, off: f64, diag: impl Fn(usize, f64, usize) -> f64) -> usize {
        if let Some(i) = self.factors.iter().position(|f| f.key == key) {
            return i;
        }
        let m = self.modes;
        let mut inv_denom = vec![0.0; n * m];
        let mut c_prime = vec![0.0; n * m];
        for k in 0..m {
            let lam = self.symbol_x[k];
            let mut prev_c = 0.0;
            for j in 0..n {
                let denom = diag(k, lam, j) - if j == 0 { 0.0 } else { off * prev_c };
                if denom == 0.0 {
                    // singular mode, handled separately by the caller
                    break;
                }
                inv_denom[j * m + k] = 1.0 / denom;
                prev_c = off / denom;
                c_prime[j * m + k] = prev_c;
            }
        }
        self.factors.push(Factorization { key, off, inv_denom, c_prime });
        self.factors.len() - 1
    }

    /// Tridiagonal sweep over the first `n` spectrum rows, all modes at once.
    fn sweep(&mut self, factor: usize, n: usize) {
        let m = self.modes;
        let f = &self.factors[factor];
        let s = &mut self.spectrum[..n * m];
        for (x, &d) in s[..m].iter_mut().zip(&f.inv_denom[..m]) {
            *x *= d;
        }
        for j in 1..n {
            let (done, rest) = s.split_at_mut(j * m);
            let prev = &done[(j - 1) * m..];
            let cur = &mut rest[..m];
            let inv = &f.inv_denom[j * m..(j + 1) * m];
            for k in 0..m {
                cur[k] = (cur[k] - prev[k] * f.off) * inv[k];
            }
        }
        for j in (0..n.saturating_sub(1)).rev() {
            let (head, tail) = s.split_at_mut((j + 1) * m);
            let cur = &mut head[j * m..];
            let next = &tail[..m];
            let c = &f.c_prime[j * m..(j + 1) * m];
            for k in 0..m {
                cur[k] -= next[k] * c[k];
            }
        }
    }

    /// Solve `∇²p = rhs` with zero-flux walls and periodic `x`; `mean(p) = 0`.
    ///
    /// The rhs mean must be below [`COMPATIBILITY_TOLERANCE`] times `max|rhs|`;
    /// the residual mean is removed before solving.
    pub fn solve_pressure_poisson(&mut self, rhs: &Field) -> Result<Field> {
        rhs.check_matches(&self.grid, Location::Center)?;
        let mean = rhs.mean();
        let tolerance = COMPATIBILITY_TOLERANCE * rhs.max_abs();
        if mean.abs() > tolerance {
            return Err(Error::Incompatible { mean, tolerance });
        }
        Ok(self.poisson_unchecked(rhs, mean))
    }

    /// Poisson solve after removing `mean` from the rhs, without the
    /// compatibility check.
    pub(crate) fn poisson_unchecked(&mut self, rhs: &Field, mean: f64) -> Field {
        let ny = self.grid.ny;
        let m = self.modes;
        let dy = self.grid.dy();
        let idy2 = 1.0 / (dy * dy);
        self.transform_rows(rhs, 0..ny);
        // Removing the mean only touches the k = 0 coefficient of each row.
        let shift = Complex64::new(mean * self.grid.nx as f64, 0.0);
        for j in 0..ny {
            self.spectrum[j * m] -= shift;
        }
        let zero_mode: Vec<Complex64> = (0..ny).map(|j| self.spectrum[j * m]).collect();
        let factor = self.factorization(FactorKey::Poisson, ny, idy2, |k, lam, j| {
            if k == 0 {
                return 0.0;
            }
            let walls = if j == 0 || j + 1 == ny { 1.0 } else { 2.0 };
            -walls * idy2 - lam
        });
        self.sweep(factor, ny);
        // Integrate the zero-flux k = 0 problem directly, then fix the gauge.
        let mut flux = Complex64::default();
        let mut p = Complex64::default();
        let mut sum = Complex64::default();
        let mut col = Vec::with_capacity(ny);
        for r in zero_mode {
            col.push(p);
            sum += p;
            flux += r * dy;
            p += flux * dy;
        }
        let avg = sum / ny as f64;
        for (j, c) in col.into_iter().enumerate() {
            self.spectrum[j * m] = c - avg;
        }
        let mut out = Field::zeros(&self.grid, Location::Center);
        self.inverse_rows(&mut out, 0..ny);
        out
    }

    /// Solve `(I − γ∇²)q = rhs` with the native boundary condition of the
    /// field's location (reflection for centers and `u`, wall rows fixed at
    /// zero for `v`).
    pub fn solve_helmholtz(&mut self, rhs: &Field, gamma: f64) -> Result<Field> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("implicit coefficient must be >= 0, got {gamma}")));
        }
        let loc = rhs.location();
        rhs.check_matches(&self.grid, loc)?;
        if gamma == 0.0 {
            let mut out = rhs.clone();
            if loc == Location::VFace {
                out.row_mut(0).fill(0.0);
                out.row_mut(self.grid.ny).fill(0.0);
            }
            return Ok(out);
        }
        let ny = self.grid.ny;
        let idy2 = 1.0 / (self.grid.dy() * self.grid.dy());
        let (rows, key) = match loc {
            Location::VFace => (1..ny, FactorKey::WallRows(gamma.to_bits())),
            _ => (0..ny, FactorKey::Reflected(gamma.to_bits())),
        };
        let n = rows.len();
        let reflect_walls = loc != Location::VFace;
        self.transform_rows(rhs, rows.clone());
        let factor = self.factorization(key, n, -gamma * idy2, |_, lam, j| {
            let walls = if reflect_walls && (j == 0 || j + 1 == n) { 3.0 } else { 2.0 };
            1.0 + gamma * (walls * idy2 + lam)
        });
        self.sweep(factor, n);
        let mut out = Field::zeros(&self.grid, loc);
        self.inverse_rows(&mut out, rows);
        Ok(out)
    }

    pub fn solve(&mut self, problem: &EllipticProblem, rhs: &Field) -> Result<Field> {
        if problem.grid != self.grid {
            return Err(Error::config("elliptic problem grid differs from solver grid"));
        }
        match problem.kind {
            EllipticKind::PoissonNeumannY => self.solve_pressure_poisson(rhs),
            EllipticKind::HelmholtzDirichletY => {
                if rhs.location() == Location::VFace {
                    return Err(Error::config("v-face field needs the wall-row Helmholtz problem"));
                }
                self.solve_helmholtz(rhs, problem.gamma)
            }
            EllipticKind::HelmholtzWallRowsY => {
                rhs.check_matches(&self.grid, Location::VFace)?;
                self.solve_helmholtz(rhs, problem.gamma)
            }
        }
    }
}

/// One-shot Neumann Poisson solve; see [`EllipticSolver::solve_pressure_poisson`].
pub fn solve_pressure_poisson(rhs: &Field, grid: &GridSpec) -> Result<Field> {
    EllipticSolver::new(grid).solve_pressure_poisson(rhs)
}

/// One-shot Helmholtz solve; see [`EllipticSolver::solve_helmholtz`].
pub fn solve_helmholtz(rhs: &Field, gamma: f64, grid: &GridSpec) -> Result<Field> {
    EllipticSolver::new(grid).solve_helmholtz(rhs, gamma)
}

/// `(I − γ∇²)q` with the native boundary condition of `q`.
pub fn apply_helmholtz(q: &Field, gamma: f64, grid: &GridSpec) -> Field {
    let mut out = crate::grid::laplacian(q, grid);
    out.scale(-gamma);
    out.axpy(1.0, q);
    if q.location() == Location::VFace {
        out.row_mut(0).fill(0.0);
        out.row_mut(grid.ny).fill(0.0);
    }
    out
}
