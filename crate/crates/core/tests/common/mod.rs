//! Dense reference implementations used as oracles. Everything here is
//! written from the stencil definitions with explicit index arithmetic and
//! dense linear algebra, sharing no code with the library's fast paths.
#![allow(dead_code)]

use benard_cda::grid::{Field, GridSpec, Location, State};
use nalgebra::{DMatrix, DVector};

pub fn grid16x8() -> GridSpec {
    GridSpec::new(16, 8, 2.0, 1.0).unwrap()
}

/// Deterministic pseudo-random values in `[-1, 1)`.
pub fn noise_field(grid: &GridSpec, loc: Location, seed: u64) -> Field {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    Field::from_fn(grid, loc, |_, _| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    })
}

pub fn to_vec(f: &Field) -> DVector<f64> {
    DVector::from_vec(f.interior_vec())
}

pub fn from_vec(grid: &GridSpec, loc: Location, v: &DVector<f64>) -> Field {
    Field::from_interior(grid, loc, v.as_slice()).unwrap()
}

pub fn max_diff(a: &Field, b: &Field) -> f64 {
    a.interior().zip(b.interior()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn idx(cols: usize, i: usize, j: usize) -> usize {
    j * cols + i
}

/// Dense 5-point Laplacian on cell centers or u faces with odd reflection
/// at the walls (ghost = −interior).
pub fn dense_laplacian_reflect(grid: &GridSpec) -> DMatrix<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ax, ay) = (1.0 / grid.dx().powi(2), 1.0 / grid.dy().powi(2));
    let n = nx * ny;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let r = idx(nx, i, j);
            m[(r, r)] -= 2.0 * ax + 2.0 * ay;
            m[(r, idx(nx, (i + nx - 1) % nx, j))] += ax;
            m[(r, idx(nx, (i + 1) % nx, j))] += ax;
            if j == 0 {
                m[(r, r)] -= ay;
            } else {
                m[(r, idx(nx, i, j - 1))] += ay;
            }
            if j == ny - 1 {
                m[(r, r)] -= ay;
            } else {
                m[(r, idx(nx, i, j + 1))] += ay;
            }
        }
    }
    m
}

/// Dense Laplacian on cell centers with zero-flux walls.
pub fn dense_laplacian_neumann(grid: &GridSpec) -> DMatrix<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ax, ay) = (1.0 / grid.dx().powi(2), 1.0 / grid.dy().powi(2));
    let n = nx * ny;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let r = idx(nx, i, j);
            m[(r, r)] -= 2.0 * ax;
            m[(r, idx(nx, (i + nx - 1) % nx, j))] += ax;
            m[(r, idx(nx, (i + 1) % nx, j))] += ax;
            if j > 0 {
                m[(r, r)] -= ay;
                m[(r, idx(nx, i, j - 1))] += ay;
            }
            if j < ny - 1 {
                m[(r, r)] -= ay;
                m[(r, idx(nx, i, j + 1))] += ay;
            }
        }
    }
    m
}

/// Dense Laplacian on the `ny − 1` interior v rows, zero on the wall rows.
pub fn dense_laplacian_v_interior(grid: &GridSpec) -> DMatrix<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let rows = ny - 1;
    let (ax, ay) = (1.0 / grid.dx().powi(2), 1.0 / grid.dy().powi(2));
    let n = nx * rows;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..rows {
        for i in 0..nx {
            let r = idx(nx, i, j);
            m[(r, r)] -= 2.0 * ax + 2.0 * ay;
            m[(r, idx(nx, (i + nx - 1) % nx, j))] += ax;
            m[(r, idx(nx, (i + 1) % nx, j))] += ax;
            if j > 0 {
                m[(r, idx(nx, i, j - 1))] += ay;
            }
            if j + 1 < rows {
                m[(r, idx(nx, i, j + 1))] += ay;
            }
        }
    }
    m
}

/// Dense solve of `(I − γ∇²)q = rhs` with the native wall treatment.
pub fn dense_helmholtz(grid: &GridSpec, rhs: &Field, gamma: f64) -> Field {
    let loc = rhs.location();
    match loc {
        Location::VFace => {
            let (nx, ny) = (grid.nx, grid.ny);
            let inner: Vec<f64> = (1..ny).flat_map(|j| rhs.row(j).to_vec()).collect();
            let a = DMatrix::identity(nx * (ny - 1), nx * (ny - 1)) - dense_laplacian_v_interior(grid) * gamma;
            let x = a.lu().solve(&DVector::from_vec(inner)).unwrap();
            Field::from_fn(grid, loc, |i, j| if j == 0 || j == ny { 0.0 } else { x[idx(nx, i, j - 1)] })
        }
        _ => {
            let n = grid.nx * grid.ny;
            let a = DMatrix::identity(n, n) - dense_laplacian_reflect(grid) * gamma;
            from_vec(grid, loc, &a.lu().solve(&to_vec(rhs)).unwrap())
        }
    }
}

/// Dense mean-zero solve of the Neumann Poisson problem via the bordered
/// system `[L 1; 1ᵀ 0]`. Returns the solution and the multiplier, which
/// absorbs any incompatible rhs component.
pub fn dense_poisson(grid: &GridSpec, rhs: &Field) -> (Field, f64) {
    let n = grid.nx * grid.ny;
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&dense_laplacian_neumann(grid));
    for k in 0..n {
        a[(k, n)] = 1.0;
        a[(n, k)] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from(&to_vec(rhs));
    let x = a.lu().solve(&b).unwrap();
    (from_vec(grid, Location::Center, &x.rows(0, n).into_owned()), x[n])
}

/// Ghost-aware accessors built directly from the boundary rules.
pub struct Halo<'a> {
    pub nx: usize,
    pub ny: usize,
    pub u: &'a Field,
    pub v: &'a Field,
    pub th: &'a Field,
}

impl<'a> Halo<'a> {
    pub fn new(grid: &GridSpec, s: &'a State) -> Self {
        Self { nx: grid.nx, ny: grid.ny, u: &s.u, v: &s.v, th: &s.theta }
    }

    fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.nx as isize) as usize
    }

    pub fn u(&self, i: isize, j: isize) -> f64 {
        let i = self.wrap(i);
        if j < 0 {
            -self.u[(i, 0)]
        } else if j >= self.ny as isize {
            -self.u[(i, self.ny - 1)]
        } else {
            self.u[(i, j as usize)]
        }
    }

    pub fn v(&self, i: isize, j: isize) -> f64 {
        let i = self.wrap(i);
        if j <= 0 || j >= self.ny as isize {
            0.0
        } else {
            self.v[(i, j as usize)]
        }
    }

    pub fn th(&self, i: isize, j: isize) -> f64 {
        let i = self.wrap(i);
        if j < 0 {
            -self.th[(i, 0)]
        } else if j >= self.ny as isize {
            -self.th[(i, self.ny - 1)]
        } else {
            self.th[(i, j as usize)]
        }
    }
}

/// `(u, v, Θ)` tendencies: conservative advection plus buoyancy and the
/// conduction source, evaluated point by point.
pub fn oracle_explicit(grid: &GridSpec, s: &State, pr: f64) -> (Field, Field, Field) {
    let h = Halo::new(grid, s);
    let (dx, dy) = (grid.dx(), grid.dy());
    let sq = |x: f64| x * x;
    let cu = Field::from_fn(grid, Location::UFace, |i, j| {
        let (i, j) = (i as isize, j as isize);
        let xflux = sq(0.5 * (h.u(i, j) + h.u(i + 1, j))) - sq(0.5 * (h.u(i - 1, j) + h.u(i, j)));
        let north = 0.5 * (h.u(i, j) + h.u(i, j + 1)) * 0.5 * (h.v(i - 1, j + 1) + h.v(i, j + 1));
        let south = 0.5 * (h.u(i, j - 1) + h.u(i, j)) * 0.5 * (h.v(i - 1, j) + h.v(i, j));
        -xflux / dx - (north - south) / dy
    });
    let cv = Field::from_fn(grid, Location::VFace, |i, j| {
        if j == 0 || j == grid.ny {
            return 0.0;
        }
        let (i, j) = (i as isize, j as isize);
        let east = 0.5 * (h.u(i + 1, j - 1) + h.u(i + 1, j)) * 0.5 * (h.v(i, j) + h.v(i + 1, j));
        let west = 0.5 * (h.u(i, j - 1) + h.u(i, j)) * 0.5 * (h.v(i - 1, j) + h.v(i, j));
        let yflux = sq(0.5 * (h.v(i, j) + h.v(i, j + 1))) - sq(0.5 * (h.v(i, j - 1) + h.v(i, j)));
        let buoyancy = pr * 0.5 * (h.th(i, j - 1) + h.th(i, j));
        -(east - west) / dx - yflux / dy + buoyancy
    });
    let ct = Field::from_fn(grid, Location::Center, |i, j| {
        let (i, j) = (i as isize, j as isize);
        let east = h.u(i + 1, j) * 0.5 * (h.th(i, j) + h.th(i + 1, j));
        let west = h.u(i, j) * 0.5 * (h.th(i - 1, j) + h.th(i, j));
        let north = h.v(i, j + 1) * 0.5 * (h.th(i, j) + h.th(i, j + 1));
        let south = h.v(i, j) * 0.5 * (h.th(i, j - 1) + h.th(i, j));
        let source = 0.5 * (h.v(i, j) + h.v(i, j + 1));
        -(east - west) / dx - (north - south) / dy + source
    });
    (cu, cv, ct)
}

/// Buoyancy and conduction source only.
pub fn oracle_linear(grid: &GridSpec, s: &State, pr: f64) -> (Field, Field, Field) {
    let h = Halo::new(grid, s);
    let lu = Field::zeros(grid, Location::UFace);
    let lv = Field::from_fn(grid, Location::VFace, |i, j| {
        if j == 0 || j == grid.ny {
            0.0
        } else {
            pr * 0.5 * (h.th(i as isize, j as isize - 1) + h.th(i as isize, j as isize))
        }
    });
    let lt = Field::from_fn(grid, Location::Center, |i, j| 0.5 * (h.v(i as isize, j as isize) + h.v(i as isize, j as isize + 1)));
    (lu, lv, lt)
}

fn minus(a: &(Field, Field, Field), b: &(Field, Field, Field)) -> (Field, Field, Field) {
    (a.0.sub(&b.0), a.1.sub(&b.1), a.2.sub(&b.2))
}

/// Straight-line dense version of one projection step. `previous` holds the
/// advective tendency of the previous step (AB2) or `None` (forward Euler).
/// Returns the new state and this step's advective tendency.
pub fn oracle_step(
    grid: &GridSpec,
    s: &State,
    ra: f64,
    pr: f64,
    dt: f64,
    previous: Option<&(Field, Field, Field)>,
    nudge: Option<(&Field, &Field, &Field)>,
) -> (State, (Field, Field, Field)) {
    let lin = oracle_linear(grid, s, pr);
    let adv = minus(&oracle_explicit(grid, s, pr), &lin);
    let (wn, wp) = if previous.is_some() { (1.5, -0.5) } else { (1.0, 0.0) };
    let star = |q: &Field, a: &Field, p: Option<&Field>, l: &Field, n: Option<&Field>| {
        Field::from_fn(grid, q.location(), |i, j| {
            let mut x = q[(i, j)] + dt * wn * a[(i, j)] + dt * l[(i, j)];
            if let Some(p) = p {
                x += dt * wp * p[(i, j)];
            }
            if let Some(n) = n {
                x += dt * n[(i, j)];
            }
            x
        })
    };
    let us = star(&s.u, &adv.0, previous.map(|p| &p.0), &lin.0, nudge.map(|n| n.0));
    let vs = star(&s.v, &adv.1, previous.map(|p| &p.1), &lin.1, nudge.map(|n| n.1));
    let ts = star(&s.theta, &adv.2, previous.map(|p| &p.2), &lin.2, nudge.map(|n| n.2));

    let gu = pr / ra.sqrt() * dt;
    let gt = dt / ra.sqrt();
    let u2 = dense_helmholtz(grid, &us, gu);
    let v2 = dense_helmholtz(grid, &vs, gu);
    let theta = dense_helmholtz(grid, &ts, gt);

    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut rhs = Field::from_fn(grid, Location::Center, |i, j| {
        ((u2[((i + 1) % nx, j)] - u2[(i, j)]) / dx + (v2[(i, j + 1)] - v2[(i, j)]) / dy) / dt
    });
    let mean = rhs.mean();
    rhs = Field::from_fn(grid, Location::Center, |i, j| rhs[(i, j)] - mean);
    let (p, _) = dense_poisson(grid, &rhs);
    let u = Field::from_fn(grid, Location::UFace, |i, j| {
        u2[(i, j)] - dt * (p[(i, j)] - p[((i + nx - 1) % nx, j)]) / dx
    });
    let v = Field::from_fn(grid, Location::VFace, |i, j| {
        if j == 0 || j == ny {
            0.0
        } else {
            v2[(i, j)] - dt * (p[(i, j)] - p[(i, j - 1)]) / dy
        }
    });
    (State { u, v, theta, p, t: s.t + dt }, adv)
}
