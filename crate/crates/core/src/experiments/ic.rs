use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{apply_boundary_conditions, Field, GridSpec, Location, State};

/// Localized horizontal jet `u = amplitude · sin(2π y / wavelength)` on
/// `y_min ≤ y ≤ y_max`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearParams {
    pub amplitude: f64,
    pub wavelength: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for ShearParams {
    fn default() -> Self {
        Self { amplitude: 0.5, wavelength: 20.0, y_min: 0.4, y_max: 0.6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `Θ = sin(2πx + 2000πy)`, fluid at rest.
    Reference,
    Zero,
    Shear(ShearParams),
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Reference => "reference",
            InitialCondition::Zero => "zero",
            InitialCondition::Shear(_) => "shear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitialCondition::Shear(p) = self {
            if !(p.amplitude.is_finite() && p.wavelength.is_finite() && p.wavelength != 0.0) {
                return Err(Error::config("shear amplitude and wavelength must be finite, wavelength nonzero"));
            }
            if !(p.y_min <= p.y_max) {
                return Err(Error::config(format!("shear band [{}, {}] is empty", p.y_min, p.y_max)));
            }
        }
        Ok(())
    }

    pub fn build(&self, grid: &GridSpec) -> Result<State> {
        self.validate()?;
        let mut state = State::zeros(grid);
        match *self {
            InitialCondition::Zero => {}
            InitialCondition::Reference => {
                state.theta = Field::sample(grid, Location::Center, |x, y| {
                    (2.0 * PI * x + 2000.0 * PI * y).sin()
                });
            }
            InitialCondition::Shear(p) => {
                state.u = Field::sample(grid, Location::UFace, |_, y| {
                    if (p.y_min..=p.y_max).contains(&y) {
                        p.amplitude * (2.0 * PI / p.wavelength * y).sin()
                    } else {
                        0.0
                    }
                });
            }
        }
        apply_boundary_conditions(&mut state, grid)?;
        Ok(state)
    }
}
