//! Constitutive laws, grids, fluid states and the isolated-mass-group initial data.
//!
//! The gas is polytropic, `p(rho) = rho^gamma`, with density-dependent viscosity
//! `mu(rho) = rho^delta`. Both vanish at vacuum, which is what makes the
//! momentum equation degenerate there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raises a non-negative base to a real exponent, taking the exact integer
/// path when the exponent is a small whole number.
#[inline]
pub fn pow_real(base: f64, exponent: f64) -> f64 {
    if exponent == 2.0 {
        base * base
    } else if exponent == 3.0 {
        base * base * base
    } else if exponent == 1.0 {
        base
    } else if base == 0.0 {
        if exponent > 0.0 {
            0.0
        } else {
            base.powf(exponent)
        }
    } else {
        base.powf(exponent)
    }
}

/// Adiabatic exponent `gamma` and viscosity exponent `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    gamma: f64,
    delta: f64,
}

impl Parameters {
    /// Validates `gamma > 1`, `delta > 1` and `min(gamma, delta) <= 3`.
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::NonFiniteParameter("gamma"));
        }
        if !delta.is_finite() {
            return Err(Error::NonFiniteParameter("delta"));
        }
        if gamma <= 1.0 {
            return Err(Error::GammaOutOfRange(gamma));
        }
        if delta <= 1.0 {
            return Err(Error::DeltaOutOfRange(delta));
        }
        let smallest = gamma.min(delta);
        if smallest > 3.0 {
            return Err(Error::MinExponentTooLarge(smallest));
        }
        Ok(Self { gamma, delta })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub fn validate_parameters(gamma: f64, delta: f64) -> Result<Parameters> {
    Parameters::new(gamma, delta)
}

fn check_density(rho: f64) -> Result<()> {
    if rho < 0.0 || rho.is_nan() {
        Err(Error::NegativeDensity(rho))
    } else {
        Ok(())
    }
}

/// `p = rho^gamma`.
pub fn pressure(rho: f64, params: &Parameters) -> Result<f64> {
    check_density(rho)?;
    Ok(pow_real(rho, params.gamma))
}

/// `c = sqrt(gamma rho^(gamma - 1))`, zero at vacuum.
pub fn sound_speed(rho: f64, params: &Parameters) -> Result<f64> {
    check_density(rho)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    Ok((params.gamma * pow_real(rho, params.gamma - 1.0)).sqrt())
}

/// `mu = rho^delta`.
pub fn viscosity(rho: f64, params: &Parameters) -> Result<f64> {
    check_density(rho)?;
    Ok(pow_real(rho, params.delta))
}

/// Uniform cell-centered grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("non-finite extent".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min = {x_min} must be below x_max = {x_max}"
            )));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be positive".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_cells: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_cells)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// Position of face `f`, `0 <= f <= n_cells`; face `f` separates cells `f-1` and `f`.
    pub fn face(&self, f: usize) -> f64 {
        self.x_min + f as f64 * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

/// Density and velocity at cell centers at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// `rho < rho_vac`; velocity in these cells follows the pressureless law.
    pub vacuum: Vec<bool>,
}

impl FluidState {
    pub fn new(t: f64, grid: Grid, rho: Vec<f64>, u: Vec<f64>, rho_vac: f64) -> Result<Self> {
        let n = grid.n_cells();
        if rho.len() != n || u.len() != n {
            return Err(Error::InvalidGrid(format!(
                "field lengths {} / {} do not match {n} cells",
                rho.len(),
                u.len()
            )));
        }
        for (i, (&r, &v)) in rho.iter().zip(&u).enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFiniteValue {
                    field: "rho",
                    cell: i,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    field: "u",
                    cell: i,
                });
            }
            check_density(r)?;
        }
        let vacuum = rho.iter().map(|&r| r < rho_vac).collect();
        Ok(Self {
            t,
            grid,
            rho,
            u,
            vacuum,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_cells();
        Self {
            t: 0.0,
            grid,
            rho: vec![0.0; n],
            u: vec![0.0; n],
            vacuum: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn refresh_vacuum(&mut self, rho_vac: f64) {
        for (v, &r) in self.vacuum.iter_mut().zip(&self.rho) {
            *v = r < rho_vac;
        }
    }

    /// `sum rho_i dx`.
    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.dx()
    }

    /// `sum (rho u^2 / 2 + rho^gamma / (gamma - 1)) dx`.
    pub fn total_energy(&self, params: &Parameters) -> f64 {
        let g = params.gamma();
        self.rho
            .iter()
            .zip(&self.u)
            .map(|(&r, &v)| 0.5 * r * v * v + pow_real(r, g) / (g - 1.0))
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn max_density(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }
}

/// The explicit family `rho0 = (1+|x|)^-k1` off the annulus `c <= |x| <= c+1`,
/// `u0 = (1+|x|)^-k2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolatedMassGroupSpec {
    pub c: f64,
    pub k1: f64,
    pub k2: f64,
}

impl IsolatedMassGroupSpec {
    pub fn validate(&self, params: &Parameters) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "c = {} must be positive",
                self.c
            )));
        }
        let k1_min = 1.0_f64
            .max(1.0 / (params.gamma() - 1.0))
            .max(1.0 / (params.delta() - 1.0));
        if !(self.k1.is_finite() && self.k1 > k1_min) {
            return Err(Error::InvalidSpec(format!(
                "k1 = {} must exceed max(1, 1/(gamma-1), 1/(delta-1)) = {k1_min}",
                self.k1
            )));
        }
        if !(self.k2.is_finite() && self.k2 > 0.5) {
            return Err(Error::InvalidSpec(format!(
                "k2 = {} must exceed 1/2",
                self.k2
            )));
        }
        Ok(())
    }

    /// Left endpoint of the mass interval `A0 = (-c, c)`.
    pub fn a0(&self) -> f64 {
        -self.c
    }

    pub fn b0(&self) -> f64 {
        self.c
    }

    /// `|A0|`.
    pub fn area(&self) -> f64 {
        2.0 * self.c
    }

    /// Outer interval `B0 = (-c-1, c+1)`.
    pub fn outer(&self) -> (f64, f64) {
        (-self.c - 1.0, self.c + 1.0)
    }

    /// Common endpoint velocity `u0(a0) = u0(b0)`.
    pub fn endpoint_velocity(&self) -> f64 {
        self.velocity(self.c)
    }

    pub fn density(&self, x: f64) -> f64 {
        let r = x.abs();
        if r >= self.c && r <= self.c + 1.0 {
            0.0
        } else {
            (1.0 + r).powf(-self.k1)
        }
    }

    pub fn velocity(&self, x: f64) -> f64 {
        (1.0 + x.abs()).powf(-self.k2)
    }

    /// Half-width of a symmetric domain that keeps signals off the boundary
    /// up to `t_final`: `c + 1 + (max|u0| + max c(rho0)) t_final + 2`.
    pub fn required_half_width(&self, params: &Parameters, t_final: f64) -> f64 {
        // Both profiles peak at x = 0 with value 1.
        let max_speed = 1.0 + params.gamma().sqrt();
        self.c + 1.0 + max_speed * t_final.max(0.0) + 2.0
    }
}

/// Default vacuum threshold, `1e-10 max rho0` (or `1e-10` for identically zero data).
pub fn default_vacuum_threshold(max_density: f64) -> f64 {
    if max_density > 0.0 {
        1e-10 * max_density
    } else {
        1e-10
    }
}

/// Samples the isolated-mass-group profiles at cell centers.
///
/// The grid must cover `[-(c + 3), c + 3]`; longer runs should size the grid
/// with [`IsolatedMassGroupSpec::required_half_width`].
pub fn build_isolated_mass_group(
    spec: &IsolatedMassGroupSpec,
    grid: &Grid,
    params: &Parameters,
) -> Result<FluidState> {
    spec.validate(params)?;
    let required = spec.required_half_width(params, 0.0);
    let half_width = (-grid.x_min()).min(grid.x_max());
    if half_width < required {
        return Err(Error::DomainTooSmall {
            half_width,
            required,
        });
    }
    let centers = grid.centers();
    let rho: Vec<f64> = centers.iter().map(|&x| spec.density(x)).collect();
    let u: Vec<f64> = centers.iter().map(|&x| spec.velocity(x)).collect();
    let max_rho = rho.iter().copied().fold(0.0, f64::max);
    FluidState::new(0.0, *grid, rho, u, default_vacuum_threshold(max_rho))
}
