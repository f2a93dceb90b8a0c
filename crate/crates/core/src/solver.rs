//! Time integration of the nondimensional Boussinesq equations
//!
//! ```text
//! ∂u/∂t + (u·∇)u + ∇p = (Pr/√Ra) ∇²u + Pr Θ e₂
//! ∂Θ/∂t + (u·∇)Θ     = (1/√Ra) ∇²Θ + u·e₂
//! ∇·u = 0
//! ```
//!
//! with a projection scheme: second-order Adams–Bashforth for the convective
//! terms, forward Euler for the linear coupling terms and any nudging
//! forcing, backward Euler for diffusion, then a pressure projection.

use crate::elliptic::{EllipticSolver, COMPATIBILITY_TOLERANCE};
use crate::error::{Error, Result, Stage};
use crate::grid::{self, apply_boundary_conditions, Field, GridSpec, Location, State};

/// Physical and temporal parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub ra: f64,
    pub pr: f64,
    pub dt: f64,
}

impl SolverParams {
    pub fn new(ra: f64, pr: f64, dt: f64) -> Result<Self> {
        for (name, value) in [("Ra", ra), ("Pr", pr), ("dt", dt)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(Self { ra, pr, dt })
    }

    /// Kinematic viscosity `Pr/√Ra`.
    pub fn viscosity(&self) -> f64 {
        self.pr / self.ra.sqrt()
    }

    /// Thermal diffusivity `1/√Ra`.
    pub fn diffusivity(&self) -> f64 {
        1.0 / self.ra.sqrt()
    }
}

/// Additive tendencies on the native layouts of `u`, `v` and `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub u: Field,
    pub v: Field,
    pub theta: Field,
}

/// Forcing injected by an assimilation scheme.
pub type NudgeTendency = Tendency;

impl Tendency {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            u: Field::zeros(grid, Location::UFace),
            v: Field::zeros(grid, Location::VFace),
            theta: Field::zeros(grid, Location::Center),
        }
    }

    pub fn check_matches(&self, grid: &GridSpec) -> Result<()> {
        self.u.check_matches(grid, Location::UFace)?;
        self.v.check_matches(grid, Location::VFace)?;
        self.theta.check_matches(grid, Location::Center)?;
        if !(self.u.is_finite() && self.v.is_finite() && self.theta.is_finite()) {
            return Err(Error::config("nudging tendency has non-finite entries"));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs()).max(self.theta.max_abs())
    }

    fn add(&mut self, other: &Tendency) {
        self.u.axpy(1.0, &other.u);
        self.v.axpy(1.0, &other.v);
        self.theta.axpy(1.0, &other.theta);
    }
}

/// Adams–Bashforth history: the convective tendency of the previous step.
/// `None` means the next step is the first and runs forward Euler.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepperMemory {
    previous: Option<Tendency>,
}

impl StepperMemory {
    pub fn is_first_step(&self) -> bool {
        self.previous.is_none()
    }

    pub fn previous(&self) -> Option<&Tendency> {
        self.previous.as_ref()
    }
}

/// Conservative-form advection `−∇·(q u)` for each variable, with two-point
/// averages onto the flux locations. Wall fluxes vanish because `v = 0` there.
pub fn convective_tendency(state: &State, grid: &GridSpec) -> Tendency {
    let (nx, ny) = (grid.nx, grid.ny);
    let (idx, idy) = (1.0 / grid.dx(), 1.0 / grid.dy());
    let (u, v, th) = (&state.u, &state.v, &state.theta);
    let west = |i: usize| if i == 0 { nx - 1 } else { i - 1 };
    let east = |i: usize| if i + 1 == nx { 0 } else { i + 1 };

    let mut cu = Field::zeros(grid, Location::UFace);
    for j in 0..ny {
        let (uc, vs, vn) = (u.row(j), v.row(j), v.row(j + 1));
        let us = if j > 0 { Some(u.row(j - 1)) } else { None };
        let un = if j + 1 < ny { Some(u.row(j + 1)) } else { None };
        let out = cu.row_mut(j);
        for i in 0..nx {
            let (iw, ie) = (west(i), east(i));
            let ue = 0.5 * (uc[i] + uc[ie]);
            let uw = 0.5 * (uc[iw] + uc[i]);
            let north = un.map_or(0.0, |un| 0.5 * (uc[i] + un[i]) * 0.5 * (vn[iw] + vn[i]));
            let south = us.map_or(0.0, |us| 0.5 * (us[i] + uc[i]) * 0.5 * (vs[iw] + vs[i]));
            out[i] = -(ue * ue - uw * uw) * idx - (north - south) * idy;
        }
    }

    let mut cv = Field::zeros(grid, Location::VFace);
    for j in 1..ny {
        let (ub, ua) = (u.row(j - 1), u.row(j));
        let (vs, vc, vn) = (v.row(j - 1), v.row(j), v.row(j + 1));
        let out = cv.row_mut(j);
        for i in 0..nx {
            let (iw, ie) = (west(i), east(i));
            let fe = 0.5 * (ub[ie] + ua[ie]) * 0.5 * (vc[i] + vc[ie]);
            let fw = 0.5 * (ub[i] + ua[i]) * 0.5 * (vc[iw] + vc[i]);
            let vnorth = 0.5 * (vc[i] + vn[i]);
            let vsouth = 0.5 * (vs[i] + vc[i]);
            out[i] = -(fe - fw) * idx - (vnorth * vnorth - vsouth * vsouth) * idy;
        }
    }

    let mut ct = Field::zeros(grid, Location::Center);
    for j in 0..ny {
        let (tc, uc, vs, vn) = (th.row(j), u.row(j), v.row(j), v.row(j + 1));
        let ts = if j > 0 { Some(th.row(j - 1)) } else { None };
        let tn = if j + 1 < ny { Some(th.row(j + 1)) } else { None };
        let out = ct.row_mut(j);
        for i in 0..nx {
            let (iw, ie) = (west(i), east(i));
            let c = tc[i];
            let fe = uc[ie] * 0.5 * (c + tc[ie]);
            let fw = uc[i] * 0.5 * (tc[iw] + c);
            let fnorth = tn.map_or(0.0, |tn| vn[i] * 0.5 * (c + tn[i]));
            let fsouth = ts.map_or(0.0, |ts| vs[i] * 0.5 * (ts[i] + c));
            out[i] = -(fe - fw) * idx - (fnorth - fsouth) * idy;
        }
    }
    Tendency { u: cu, v: cv, theta: ct }
}

/// Linear coupling: buoyancy `Pr Θ` averaged onto `v` faces and the
/// conduction source `v` averaged onto cell centers.
pub fn linear_tendency(state: &State, params: &SolverParams, grid: &GridSpec) -> Tendency {
    let (th, v) = (&state.theta, &state.v);
    let mut lv = Field::zeros(grid, Location::VFace);
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            lv[(i, j)] = params.pr * 0.5 * (th[(i, j - 1)] + th[(i, j)]);
        }
    }
    let lt = Field::from_fn(grid, Location::Center, |i, j| 0.5 * (v[(i, j)] + v[(i, j + 1)]));
    Tendency { u: Field::zeros(grid, Location::UFace), v: lv, theta: lt }
}

/// Every explicitly treated term: advection plus the linear coupling terms.
/// Pressure and diffusion are excluded.
pub fn explicit_tendency(state: &State, params: &SolverParams, grid: &GridSpec) -> Tendency {
    let mut t = convective_tendency(state, grid);
    t.add(&linear_tendency(state, params, grid));
    t
}

/// Owns the elliptic solver and advances states on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: GridSpec,
    params: SolverParams,
    elliptic: EllipticSolver,
}

impl Stepper {
    pub fn new(grid: &GridSpec, params: &SolverParams) -> Self {
        Self { grid: *grid, params: *params, elliptic: EllipticSolver::new(grid) }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Advance `state` by one time step. `step_index` only labels errors.
    pub fn step(
        &mut self,
        state: &mut State,
        memory: &mut StepperMemory,
        nudge: Option<&NudgeTendency>,
        step_index: usize,
    ) -> Result<()> {
        let grid = self.grid;
        let dt = self.params.dt;
        if let Some(n) = nudge {
            n.check_matches(&grid)?;
        }
        let blow_up = |stage| Error::BlowUp { stage, step: step_index };

        // (a) explicit substage
        let conv = convective_tendency(state, &grid);
        let lin = linear_tendency(state, &self.params, &grid);
        let (w_now, w_prev) = if memory.previous.is_some() { (1.5, -0.5) } else { (1.0, 0.0) };
        let mut star = [state.u.clone(), state.v.clone(), state.theta.clone()];
        for (k, q) in star.iter_mut().enumerate() {
            fn pick(t: &Tendency, k: usize) -> &Field {
                match k {
                    0 => &t.u,
                    1 => &t.v,
                    _ => &t.theta,
                }
            }
            let pick = |t| pick(t, k);
            q.axpy(dt * w_now, pick(&conv));
            if let Some(prev) = &memory.previous {
                q.axpy(dt * w_prev, pick(prev));
            }
            q.axpy(dt, pick(&lin));
            if let Some(n) = nudge {
                q.axpy(dt, pick(n));
            }
            if !q.is_finite() {
                return Err(blow_up(Stage::Explicit));
            }
        }
        let [u_star, v_star, theta_star] = star;

        // (b) backward-Euler diffusion
        let gamma_u = self.params.viscosity() * dt;
        let gamma_t = self.params.diffusivity() * dt;
        let u2 = self.elliptic.solve_helmholtz(&u_star, gamma_u)?;
        let v2 = self.elliptic.solve_helmholtz(&v_star, gamma_u)?;
        let theta = self.elliptic.solve_helmholtz(&theta_star, gamma_t)?;
        if !(u2.is_finite() && v2.is_finite() && theta.is_finite()) {
            return Err(blow_up(Stage::Diffusion));
        }

        // (c) projection
        let mut rhs = grid::divergence(&u2, &v2, &grid);
        rhs.scale(1.0 / dt);
        // The divergence telescopes to a zero mean; what is left is rounding
        // at the scale of the velocity differences, not of the divergence.
        let mean = rhs.mean();
        let scale = (u2.max_abs() / grid.dx() + v2.max_abs() / grid.dy()) / dt;
        let tolerance = COMPATIBILITY_TOLERANCE * scale.max(rhs.max_abs());
        if !mean.is_finite() {
            return Err(blow_up(Stage::Projection));
        }
        if mean.abs() > tolerance {
            return Err(Error::Incompatible { mean, tolerance });
        }
        let p = self.elliptic.poisson_unchecked(&rhs, mean);
        let (gx, gy) = grid::gradient(&p, &grid);
        let mut u = u2;
        let mut v = v2;
        u.axpy(-dt, &gx);
        v.axpy(-dt, &gy);
        if !(u.is_finite() && v.is_finite() && p.is_finite()) {
            return Err(blow_up(Stage::Projection));
        }

        // (d) boundary conditions
        state.u = u;
        state.v = v;
        state.theta = theta;
        state.p = p;
        state.t += dt;
        apply_boundary_conditions(state, &grid)?;
        memory.previous = Some(conv);
        Ok(())
    }
}

/// Integrate `nsteps` steps from `ic`.
///
/// `nudge(n, state)` supplies the forcing for step `n` (taking the state at
/// `t_n` to `t_{n+1}`); `record(n, state)` sees the state after step `n`.
pub fn simulate<N, R>(
    stepper: &mut Stepper,
    ic: State,
    nsteps: usize,
    mut nudge: N,
    mut record: R,
) -> Result<State>
where
    N: FnMut(usize, &State) -> Result<Option<NudgeTendency>>,
    R: FnMut(usize, &State),
{
    if nsteps == 0 {
        return Err(Error::config("nsteps must be at least 1"));
    }
    let grid = *stepper.grid();
    let mut state = ic;
    apply_boundary_conditions(&mut state, &grid)?;
    let mut memory = StepperMemory::default();
    for n in 0..nsteps {
        let forcing = nudge(n, &state)?;
        stepper.step(&mut state, &mut memory, forcing.as_ref(), n)?;
        record(n, &state);
    }
    Ok(state)
}
