//! Particle paths `dy/dt = u(t, y)`, the cumulative momentum field
//! `xi(t, x) = int_{-inf}^x rho u dz`, and the a-priori density bound that
//! follows from `xi + rho^delta / delta` being non-increasing along paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pow_real, FluidState, Grid, Parameters};

fn out_of_domain(grid: &Grid, x: f64) -> Error {
    Error::OutOfDomain {
        x,
        x_min: grid.x_min(),
        x_max: grid.x_max(),
    }
}

/// Piecewise-linear interpolation of cell-centered values, constant in the
/// two outer half cells.
pub fn interpolate_cells(grid: &Grid, values: &[f64], x: f64) -> Result<f64> {
    if !(x >= grid.x_min() && x <= grid.x_max()) {
        return Err(out_of_domain(grid, x));
    }
    let n = values.len();
    let s = (x - grid.x_min()) / grid.dx() - 0.5;
    if s <= 0.0 {
        return Ok(values[0]);
    }
    let i = s.floor() as usize;
    if i + 1 >= n {
        return Ok(values[n - 1]);
    }
    let w = s - i as f64;
    Ok((1.0 - w) * values[i] + w * values[i + 1])
}

pub fn velocity_at(state: &FluidState, x: f64) -> Result<f64> {
    interpolate_cells(&state.grid, &state.u, x)
}

pub fn density_at(state: &FluidState, x: f64) -> Result<f64> {
    interpolate_cells(&state.grid, &state.rho, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathLabel {
    IntervalEndpoint,
    InteriorTracer,
}

/// A tracked trajectory. `position` is the current point; `samples` holds
/// `(t, y)` pairs recorded at diagnostic times.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePath {
    pub x0: f64,
    pub label: PathLabel,
    pub position: f64,
    pub samples: Vec<(f64, f64)>,
}

impl ParticlePath {
    pub fn new(x0: f64, label: PathLabel) -> Self {
        Self {
            x0,
            label,
            position: x0,
            samples: Vec::new(),
        }
    }

    pub fn record(&mut self, t: f64) {
        self.samples.push((t, self.position));
    }
}

/// The image `A(t) = (a(t), b(t))` of the initial mass interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowInterval {
    pub a: ParticlePath,
    pub b: ParticlePath,
}

impl FlowInterval {
    pub fn new(a0: f64, b0: f64) -> Self {
        Self {
            a: ParticlePath::new(a0, PathLabel::IntervalEndpoint),
            b: ParticlePath::new(b0, PathLabel::IntervalEndpoint),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a.position, self.b.position)
    }

    pub fn width(&self) -> f64 {
        self.b.position - self.a.position
    }
}

/// The two endpoints of `A0` followed by `interior` equally spaced tracers
/// strictly inside it.
pub fn seed_paths(a0: f64, b0: f64, interior: usize) -> Vec<ParticlePath> {
    let mut paths = vec![
        ParticlePath::new(a0, PathLabel::IntervalEndpoint),
        ParticlePath::new(b0, PathLabel::IntervalEndpoint),
    ];
    let h = (b0 - a0) / (interior + 1) as f64;
    paths.extend(
        (1..=interior).map(|j| ParticlePath::new(a0 + j as f64 * h, PathLabel::InteriorTracer)),
    );
    paths
}

/// Heun update of every path, using the two stage fields of the matching
/// fluid step.
pub fn advance_particles(
    paths: &mut [ParticlePath],
    state_n: &FluidState,
    state_star: &FluidState,
    dt: f64,
) -> Result<()> {
    for path in paths.iter_mut() {
        let y = path.position;
        let v1 = velocity_at(state_n, y)?;
        let predicted = y + dt * v1;
        let v2 = velocity_at(state_star, predicted)?;
        path.position = y + 0.5 * dt * (v1 + v2);
    }
    Ok(())
}

/// `xi` at the cell faces: `xi[0] = 0` at the left edge and
/// `xi[f] = sum_{i<f} rho_i u_i dx`.
pub fn xi_field(state: &FluidState) -> Vec<f64> {
    let dx = state.grid.dx();
    let mut xi = Vec::with_capacity(state.len() + 1);
    let mut acc = 0.0;
    xi.push(0.0);
    for (&r, &v) in state.rho.iter().zip(&state.u) {
        acc += r * v * dx;
        xi.push(acc);
    }
    xi
}

/// Evaluates face values of `xi` anywhere in the grid (exact for the
/// piecewise-constant momentum).
pub fn xi_at(grid: &Grid, xi_faces: &[f64], x: f64) -> Result<f64> {
    if !(x >= grid.x_min() && x <= grid.x_max()) {
        return Err(out_of_domain(grid, x));
    }
    let s = (x - grid.x_min()) / grid.dx();
    let f = (s.floor() as usize).min(xi_faces.len() - 2);
    let w = s - f as f64;
    Ok((1.0 - w) * xi_faces[f] + w * xi_faces[f + 1])
}

/// `xi(t, y) + rho(t, y)^delta / delta` at `position`.
pub fn monotone_quantity(
    state: &FluidState,
    xi_faces: &[f64],
    position: f64,
    params: &Parameters,
) -> Result<f64> {
    let xi = xi_at(&state.grid, xi_faces, position)?;
    let rho = density_at(state, position)?;
    Ok(xi + pow_real(rho, params.delta()) / params.delta())
}

/// Ingredients and value of the a-priori sup-density bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBound {
    /// `max_x (xi0 + rho0^delta / delta)`.
    pub s0: f64,
    /// Initial total energy.
    pub energy: f64,
    /// Initial total mass.
    pub mass: f64,
    /// `sqrt(2 E0 m)`, bounding `|xi|` for all time.
    pub xi_bound: f64,
    /// `(delta (s0 + xi_bound))^(1/delta)`.
    pub rho_sup: f64,
}

pub fn density_bound(initial: &FluidState, params: &Parameters) -> DensityBound {
    let grid = &initial.grid;
    let xi = xi_field(initial);
    let delta = params.delta();
    let mut s0 = f64::NEG_INFINITY;
    let centers = (0..initial.len()).map(|i| grid.center(i));
    let faces = (0..=initial.len()).map(|f| grid.face(f));
    for x in centers.chain(faces) {
        let q = monotone_quantity(initial, &xi, x, params).expect("grid point inside grid");
        s0 = s0.max(q);
    }
    let energy = initial.total_energy(params);
    let mass = initial.total_mass();
    let xi_bound = (2.0 * energy * mass).sqrt();
    let inner = delta * (s0 + xi_bound);
    let rho_sup = if inner > 0.0 {
        pow_real(inner, 1.0 / delta)
    } else {
        0.0
    };
    DensityBound {
        s0,
        energy,
        mass,
        xi_bound,
        rho_sup,
    }
}

/// Upper bound on `sup_x rho(t, x)` valid for all `t` before blow-up.
pub fn density_bound_constant(initial: &FluidState, params: &Parameters) -> f64 {
    density_bound(initial, params).rho_sup
}
