//! Interpolants mapping coarse lattice samples onto the fine native layout.
//!
//! All kinds are tensor products of 1D rules. Along `x` the coarse lattice
//! is periodic. Along `y` the lattice stops short of the walls; the smooth
//! kinds evaluate at the nearest lattice coordinate in that margin and use
//! one-sided data near the ends (linear extrapolation ghosts for the cubic,
//! natural end conditions for the spline).

use std::fmt;
use std::str::FromStr;

use super::observation::{CoarseSamples, Lattice};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterpolantKind {
    /// Each fine point takes the sample of the `stride × stride` block containing it.
    PiecewiseConstant,
    /// Each fine point takes the sample nearest to it (discontinuous).
    Nearest,
    /// Bilinear, `C⁰`.
    Linear,
    /// Local cubic convolution (Catmull–Rom), `C¹`.
    Cubic,
    /// Global cubic spline, `C²`.
    Spline,
}

impl InterpolantKind {
    pub const ALL: [InterpolantKind; 5] = [
        InterpolantKind::PiecewiseConstant,
        InterpolantKind::Nearest,
        InterpolantKind::Linear,
        InterpolantKind::Cubic,
        InterpolantKind::Spline,
    ];

    /// Minimum number of coarse points required per direction.
    pub fn min_points(self) -> usize {
        match self {
            InterpolantKind::PiecewiseConstant | InterpolantKind::Nearest => 1,
            InterpolantKind::Linear => 2,
            InterpolantKind::Cubic | InterpolantKind::Spline => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InterpolantKind::PiecewiseConstant => "piecewise_constant",
            InterpolantKind::Nearest => "nearest",
            InterpolantKind::Linear => "linear",
            InterpolantKind::Cubic => "cubic",
            InterpolantKind::Spline => "spline",
        }
    }
}

impl fmt::Display for InterpolantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InterpolantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        InterpolantKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown interpolant `{s}`"))
    }
}

/// Sparse 1D weights: for each fine index, `(coarse index, weight)` pairs.
type Weights = Vec<Vec<(usize, f64)>>;

/// One direction of the coarse lattice.
#[derive(Debug, Clone, Copy)]
struct Axis {
    fine: usize,
    coarse: usize,
    offset: usize,
    stride: usize,
    periodic: bool,
}

impl Axis {
    /// Lattice coordinate of fine index `f` (coarse node `k` sits at `k`).
    fn coordinate(&self, f: usize) -> f64 {
        let t = (f as f64 - self.offset as f64) / self.stride as f64;
        if self.periodic {
            t.rem_euclid(self.coarse as f64)
        } else {
            t.clamp(0.0, (self.coarse - 1) as f64)
        }
    }

    /// Interval start `k0` and fraction for coordinate `t`.
    fn interval(&self, t: f64) -> (usize, f64) {
        let k0 = if self.periodic {
            (t.floor() as usize).min(self.coarse - 1)
        } else {
            (t.floor() as usize).min(self.coarse.saturating_sub(2))
        };
        (k0, t - k0 as f64)
    }

    fn wrap(&self, k: isize) -> usize {
        k.rem_euclid(self.coarse as isize) as usize
    }
}

fn weights(kind: InterpolantKind, axis: &Axis) -> Weights {
    (0..axis.fine)
        .map(|f| match kind {
            InterpolantKind::PiecewiseConstant => {
                vec![((f / axis.stride).min(axis.coarse - 1), 1.0)]
            }
            InterpolantKind::Nearest => vec![(nearest(axis, f), 1.0)],
            InterpolantKind::Linear => {
                if axis.coarse == 1 {
                    return vec![(0, 1.0)];
                }
                let (k0, w) = axis.interval(axis.coordinate(f));
                let k1 = if axis.periodic { axis.wrap(k0 as isize + 1) } else { k0 + 1 };
                vec![(k0, 1.0 - w), (k1, w)]
            }
            InterpolantKind::Cubic => cubic_weights(axis, f),
            // Filled in by `spline_weights`.
            InterpolantKind::Spline => Vec::new(),
        })
        .collect()
}

fn nearest(axis: &Axis, f: usize) -> usize {
    let mut best = (f64::INFINITY, 0);
    for k in 0..axis.coarse {
        let c = (axis.offset + k * axis.stride) as f64;
        let mut d = (f as f64 - c).abs();
        if axis.periodic {
            d = d.min(axis.fine as f64 - d);
        }
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Catmull–Rom (Keys, a = −½) weights for nodes `k0 − 1 ..= k0 + 2`.
fn keys(w: f64) -> [f64; 4] {
    let (w2, w3) = (w * w, w * w * w);
    [
        0.5 * (-w3 + 2.0 * w2 - w),
        0.5 * (3.0 * w3 - 5.0 * w2 + 2.0),
        0.5 * (-3.0 * w3 + 4.0 * w2 + w),
        0.5 * (w3 - w2),
    ]
}

fn cubic_weights(axis: &Axis, f: usize) -> Vec<(usize, f64)> {
    let (k0, w) = axis.interval(axis.coordinate(f));
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
    let mut push = |k: usize, w: f64| match out.iter_mut().find(|(kk, _)| *kk == k) {
        Some(entry) => entry.1 += w,
        None => out.push((k, w)),
    };
    let n = axis.coarse as isize;
    for (d, wd) in keys(w).into_iter().enumerate() {
        let k = k0 as isize - 1 + d as isize;
        if axis.periodic {
            push(axis.wrap(k), wd);
        } else if k < 0 {
            // ghost q[-1] = 2 q[0] - q[1]
            push(0, 2.0 * wd);
            push(1, -wd);
        } else if k >= n {
            push((n - 1) as usize, 2.0 * wd);
            push((n - 2) as usize, -wd);
        } else {
            push(k as usize, wd);
        }
    }
    out
}

/// Dense cubic-spline weights: the spline through the `m`-th unit vector,
/// evaluated at every fine point, gives column `m`.
fn spline_weights(axis: &Axis) -> Weights {
    let n = axis.coarse;
    // Second derivatives solve A·M = 6·D·y, D the second difference.
    let mut a = vec![vec![0.0; n]; n];
    for k in 0..n {
        if axis.periodic {
            a[k][k] = 4.0;
            a[k][(k + n - 1) % n] += 1.0;
            a[k][(k + 1) % n] += 1.0;
        } else if k == 0 || k + 1 == n {
            a[k][k] = 1.0;
        } else {
            a[k][k] = 4.0;
            a[k][k - 1] = 1.0;
            a[k][k + 1] = 1.0;
        }
    }
    let a_inv = invert(a);
    // moments[m][k]: second derivative at node k of the spline through e_m.
    let moments: Vec<Vec<f64>> = (0..n)
        .map(|m| {
            let mut rhs = vec![0.0; n];
            for (k, r) in rhs.iter_mut().enumerate() {
                if !axis.periodic && (k == 0 || k + 1 == n) {
                    continue;
                }
                let at = |kk: usize| if kk == m { 1.0 } else { 0.0 };
                let (km, kp) = ((k + n - 1) % n, (k + 1) % n);
                *r = 6.0 * (at(km) - 2.0 * at(k) + at(kp));
            }
            (0..n).map(|k| (0..n).map(|l| a_inv[k][l] * rhs[l]).sum()).collect()
        })
        .collect();
    (0..axis.fine)
        .map(|f| {
            let (k0, w) = axis.interval(axis.coordinate(f));
            let k1 = if axis.periodic { (k0 + 1) % n } else { k0 + 1 };
            let v = 1.0 - w;
            (0..n)
                .map(|m| {
                    let y = |k: usize| if k == m { 1.0 } else { 0.0 };
                    let s = v * y(k0)
                        + w * y(k1)
                        + ((v * v * v - v) * moments[m][k0] + (w * w * w - w) * moments[m][k1]) / 6.0;
                    (m, s)
                })
                .collect()
        })
        .collect()
}

/// Gauss–Jordan inverse with partial pivoting of a small nonsingular matrix.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for j in 0..n {
                        a[row][j] -= factor * a[col][j];
                        inv[row][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// Precomputed tensor-product interpolation operator for one lattice.
#[derive(Debug, Clone)]
pub struct Interpolator {
    kind: InterpolantKind,
    lattice: Lattice,
    grid: GridSpec,
    wx: Weights,
    wy: Weights,
}

impl Interpolator {
    pub fn new(kind: InterpolantKind, lattice: &Lattice, grid: &GridSpec) -> Result<Self> {
        let (kx, ky) = (lattice.cols.len(), lattice.rows.len());
        let min = kind.min_points();
        if kx < min || ky < min {
            return Err(Error::config(format!(
                "{kind} interpolation needs at least {min} coarse points per direction, \
                 the stride-{} lattice has {kx} x {ky}",
                lattice.stride
            )));
        }
        let axis_x = Axis {
            fine: lattice.fine.0,
            coarse: kx,
            offset: lattice.offset(),
            stride: lattice.stride,
            periodic: true,
        };
        let axis_y = Axis {
            fine: lattice.fine.1,
            coarse: ky,
            offset: lattice.offset(),
            stride: lattice.stride,
            periodic: false,
        };
        let (wx, wy) = match kind {
            InterpolantKind::Spline => (spline_weights(&axis_x), spline_weights(&axis_y)),
            _ => (weights(kind, &axis_x), weights(kind, &axis_y)),
        };
        Ok(Self { kind, lattice: lattice.clone(), grid: *grid, wx, wy })
    }

    pub fn kind(&self) -> InterpolantKind {
        self.kind
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Interpolate row-major coarse `values` onto the fine layout.
    pub fn apply(&self, values: &[f64]) -> Result<Field> {
        let (kx, ky) = (self.lattice.cols.len(), self.lattice.rows.len());
        if values.len() != kx * ky {
            return Err(Error::config(format!(
                "expected {} coarse values, got {}",
                kx * ky,
                values.len()
            )));
        }
        let (nfx, nfy) = self.lattice.fine;
        // x pass: ky rows of nfx values
        let mut tmp = vec![0.0; ky * nfx];
        for r in 0..ky {
            let src = &values[r * kx..(r + 1) * kx];
            let dst = &mut tmp[r * nfx..(r + 1) * nfx];
            for (d, w) in dst.iter_mut().zip(&self.wx) {
                *d = w.iter().map(|&(k, c)| c * src[k]).sum();
            }
        }
        let mut out = Field::zeros(&self.grid, self.lattice.loc);
        for (j, w) in self.wy.iter().enumerate().take(nfy) {
            let row = out.row_mut(j);
            for &(r, c) in w {
                let src = &tmp[r * nfx..(r + 1) * nfx];
                for (d, s) in row.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        Ok(out)
    }
}

/// One-shot interpolation of coarse samples onto the fine grid.
pub fn interpolate(samples: &CoarseSamples, kind: InterpolantKind, grid: &GridSpec) -> Result<Field> {
    Interpolator::new(kind, &samples.lattice, grid)?.apply(&samples.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Location;

    fn lattice(g: &GridSpec, loc: Location, s: usize) -> Lattice {
        Lattice::new(g, loc, s).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let g = GridSpec::new(40, 20, 2.0, 1.0).unwrap();
        for loc in [Location::Center, Location::UFace, Location::VFace] {
            let lat = lattice(&g, loc, 5);
            for kind in InterpolantKind::ALL {
                let samples = CoarseSamples { lattice: lat.clone(), values: vec![2.75; lat.len()] };
                let f = interpolate(&samples, kind, &g).unwrap();
                for x in f.interior() {
                    assert!((x - 2.75).abs() <= 1e-13, "{kind} {loc}: {x}");
                }
            }
        }
    }

    #[test]
    fn piecewise_constant_fills_blocks() {
        let g = GridSpec::new(8, 4, 2.0, 1.0).unwrap();
        let lat = lattice(&g, Location::Center, 2);
        let values: Vec<f64> = (0..lat.len()).map(|k| k as f64).collect();
        let f = interpolate(&CoarseSamples { lattice: lat.clone(), values: values.clone() }, InterpolantKind::PiecewiseConstant, &g)
            .unwrap();
        for j in 0..4 {
            for i in 0..8 {
                assert_eq!(f[(i, j)], values[(j / 2) * 4 + i / 2]);
            }
        }
    }

    #[test]
    fn too_few_points_for_cubic() {
        let g = GridSpec::new(40, 20, 2.0, 1.0).unwrap();
        let lat = lattice(&g, Location::Center, 10);
        assert_eq!(lat.rows.len(), 2);
        let samples = CoarseSamples { lattice: lat.clone(), values: vec![0.0; lat.len()] };
        assert!(interpolate(&samples, InterpolantKind::Cubic, &g).is_err());
        assert!(interpolate(&samples, InterpolantKind::Spline, &g).is_err());
        assert!(interpolate(&samples, InterpolantKind::Linear, &g).is_ok());
    }

    #[test]
    fn linear_reproduces_affine_between_columns() {
        let g = GridSpec::new(40, 20, 2.0, 1.0).unwrap();
        let lat = lattice(&g, Location::Center, 4);
        let f = |i: usize, j: usize| 0.3 + 0.7 * i as f64 - 0.2 * j as f64;
        let values: Vec<f64> = lat.points().map(|(i, j)| f(i, j)).collect();
        let out = interpolate(&CoarseSamples { lattice: lat.clone(), values }, InterpolantKind::Linear, &g).unwrap();
        let (c0, c1) = (lat.cols[0], *lat.cols.last().unwrap());
        let (r0, r1) = (lat.rows[0], *lat.rows.last().unwrap());
        for j in r0..=r1 {
            for i in c0..=c1 {
                assert!((out[(i, j)] - f(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cubic_and_spline_reproduce_affine_in_y() {
        let g = GridSpec::new(40, 40, 1.0, 1.0).unwrap();
        let lat = lattice(&g, Location::Center, 5);
        let f = |_: usize, j: usize| 1.0 + 0.25 * j as f64;
        let values: Vec<f64> = lat.points().map(|(i, j)| f(i, j)).collect();
        for kind in [InterpolantKind::Cubic, InterpolantKind::Spline] {
            let out = interpolate(&CoarseSamples { lattice: lat.clone(), values: values.clone() }, kind, &g).unwrap();
            for j in lat.rows[0]..=*lat.rows.last().unwrap() {
                for i in 0..40 {
                    assert!((out[(i, j)] - f(i, j)).abs() <= 1e-12, "{kind} at {i},{j}");
                }
            }
        }
    }

    #[test]
    fn smooth_kinds_interpolate_the_samples() {
        let g = GridSpec::new(40, 20, 2.0, 1.0).unwrap();
        let lat = lattice(&g, Location::UFace, 5);
        let values: Vec<f64> = (0..lat.len()).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        for kind in InterpolantKind::ALL {
            let out = interpolate(&CoarseSamples { lattice: lat.clone(), values: values.clone() }, kind, &g).unwrap();
            for ((i, j), &x) in lat.points().zip(&values) {
                assert!((out[(i, j)] - x).abs() <= 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in InterpolantKind::ALL {
            assert_eq!(kind.name().parse::<InterpolantKind>().unwrap(), kind);
        }
        assert!("bicubic".parse::<InterpolantKind>().is_err());
    }
}
