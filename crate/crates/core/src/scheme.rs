//! Explicit finite-volume stepper.
//!
//! Mass and momentum are updated conservatively with a Rusanov convective
//! flux and a central viscous face flux `mu_face (u_R - u_L) / dx`. Cells
//! below the vacuum threshold carry a velocity that follows the pressureless
//! Burgers law `u_t + u u_x = 0` (first-order upwind). Time integration is
//! Heun's method (SSP-RK2); both stages re-evaluate every flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pow_real, FluidState, Parameters};

/// How to treat faces at the ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Ghost cells fixed at `(rho, u) = (0, 0)`.
    Vacuum,
    /// Wrap-around; used by the manufactured-solution tests.
    Periodic,
}

/// What to do with negative densities produced by an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositivityPolicy {
    /// Reset to zero and book the removed negative mass in [`StepReport::mass_defect`].
    ClipAndAccount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub rho_vac: f64,
    /// Time step used when the state carries no signal at all.
    pub dt_max: f64,
    pub boundary: Boundary,
    pub positivity: PositivityPolicy,
}

impl SchemeConfig {
    pub fn new(cfl: f64, rho_vac: f64, dt_max: f64) -> Result<Self> {
        let config = Self {
            cfl,
            rho_vac,
            dt_max,
            boundary: Boundary::Vacuum,
            positivity: PositivityPolicy::ClipAndAccount,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidScheme(format!(
                "cfl = {} must lie in (0, 1]",
                self.cfl
            )));
        }
        if !(self.rho_vac > 0.0 && self.rho_vac.is_finite()) {
            return Err(Error::InvalidScheme(format!(
                "rho_vac = {} must be positive",
                self.rho_vac
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidScheme(format!(
                "dt_max = {} must be positive",
                self.dt_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub dt: f64,
    /// Mass added back by clipping negative densities (always >= 0).
    pub mass_defect: f64,
    /// Net mass carried out through the two outer faces during the step.
    pub boundary_outflow: f64,
    pub max_wave_speed: f64,
}

/// Conserved variables `(rho, rho u)` of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved {
    pub rho: f64,
    pub momentum: f64,
}

impl Conserved {
    pub fn new(rho: f64, momentum: f64) -> Self {
        Self { rho, momentum }
    }

    fn velocity(&self) -> f64 {
        if self.rho > 0.0 {
            self.momentum / self.rho
        } else {
            0.0
        }
    }
}

/// Rusanov flux `(mass flux, momentum flux)` between two cells.
pub fn convective_flux(
    left: Conserved,
    right: Conserved,
    params: &Parameters,
) -> Result<(f64, f64)> {
    if left.rho < 0.0 {
        return Err(Error::NegativeDensity(left.rho));
    }
    if right.rho < 0.0 {
        return Err(Error::NegativeDensity(right.rho));
    }
    let side = |s: Conserved| {
        let u = s.velocity();
        let p = pow_real(s.rho, params.gamma());
        let c = if s.rho > 0.0 {
            (params.gamma() * p / s.rho).sqrt()
        } else {
            0.0
        };
        (u, p, c)
    };
    let (ul, pl, cl) = side(left);
    let (ur, pr, cr) = side(right);
    Ok(rusanov(
        left.rho,
        left.momentum,
        ul,
        pl,
        cl,
        right.rho,
        right.momentum,
        ur,
        pr,
        cr,
    ))
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn rusanov(
    rl: f64,
    ml: f64,
    ul: f64,
    pl: f64,
    cl: f64,
    rr: f64,
    mr: f64,
    ur: f64,
    pr: f64,
    cr: f64,
) -> (f64, f64) {
    let s = (ul.abs() + cl).max(ur.abs() + cr);
    let mass = 0.5 * (ml + mr) - 0.5 * s * (rr - rl);
    let momentum = 0.5 * (ml * ul + pl + mr * ur + pr) - 0.5 * s * (mr - ml);
    (mass, momentum)
}

/// Viscous momentum flux `0.5 (rho_L^delta + rho_R^delta) (u_R - u_L) / dx`.
pub fn viscous_flux(
    rho_left: f64,
    rho_right: f64,
    u_left: f64,
    u_right: f64,
    dx: f64,
    params: &Parameters,
) -> Result<f64> {
    if rho_left < 0.0 {
        return Err(Error::NegativeDensity(rho_left));
    }
    if rho_right < 0.0 {
        return Err(Error::NegativeDensity(rho_right));
    }
    let mu = 0.5 * (pow_real(rho_left, params.delta()) + pow_real(rho_right, params.delta()));
    Ok(mu * (u_right - u_left) / dx)
}

fn max_signal(state: &FluidState, params: &Parameters) -> (f64, f64) {
    let g = params.gamma();
    let d = params.delta();
    let mut speed = 0.0_f64;
    let mut diffusivity = 0.0_f64;
    for (&r, &v) in state.rho.iter().zip(&state.u) {
        let c = if r > 0.0 {
            (g * pow_real(r, g - 1.0)).sqrt()
        } else {
            0.0
        };
        speed = speed.max(v.abs() + c);
        if r > 0.0 {
            diffusivity = diffusivity.max(pow_real(r, d - 1.0));
        }
    }
    (speed, diffusivity)
}

/// `cfl * min(dx / max(|u| + c), dx^2 / (2 max rho^(delta-1)))`, or `dt_max`
/// when both limits are void.
pub fn cfl_dt(state: &FluidState, config: &SchemeConfig, params: &Parameters) -> Result<f64> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let dx = state.grid.dx();
    let (speed, diffusivity) = max_signal(state, params);
    let mut limit = f64::INFINITY;
    if speed > 0.0 {
        limit = limit.min(dx / speed);
    }
    if diffusivity > 0.0 {
        limit = limit.min(dx * dx / (2.0 * diffusivity));
    }
    if limit.is_finite() {
        Ok(config.cfl * limit)
    } else {
        Ok(config.dt_max)
    }
}

/// Volumetric source `(S_rho, S_momentum)` added to the right-hand side.
pub trait SourceTerm {
    fn source(&self, t: f64, x: f64) -> (f64, f64);
}

/// Callbacks from [`Stepper::advance_to`].
pub trait StepObserver {
    /// After every accepted step. `stage` is the forward-Euler predictor at
    /// `next.t`, i.e. the first Heun stage.
    fn on_step(
        &mut self,
        _previous: &FluidState,
        _stage: &FluidState,
        _next: &FluidState,
        _report: &StepReport,
    ) -> Result<()> {
        Ok(())
    }

    /// When the state sits exactly on one of the requested sample times.
    fn on_sample(&mut self, _state: &FluidState) -> Result<()> {
        Ok(())
    }
}

impl StepObserver for () {}

/// Outcome of one Heun step, including the predictor stage.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FluidState,
    pub stage: FluidState,
    pub report: StepReport,
}

struct StageOutput {
    rho: Vec<f64>,
    momentum: Vec<f64>,
    u: Vec<f64>,
    clipped: f64,
    outflow_rate: f64,
}

pub struct Stepper<'a> {
    params: Parameters,
    config: SchemeConfig,
    source: Option<&'a dyn SourceTerm>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: Parameters, config: SchemeConfig) -> Self {
        Self {
            params,
            config,
            source: None,
        }
    }

    pub fn with_source(mut self, source: &'a dyn SourceTerm) -> Self {
        self.source = Some(source);
        self
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn cfl_dt(&self, state: &FluidState) -> Result<f64> {
        cfl_dt(state, &self.config, &self.params)
    }

    /// One forward-Euler evaluation of the semi-discrete operator.
    fn euler_stage(
        &self,
        t: f64,
        grid_state: &FluidState,
        rho: &[f64],
        u: &[f64],
        dt: f64,
    ) -> StageOutput {
        let n = rho.len();
        let grid = grid_state.grid;
        let dx = grid.dx();
        let g = self.params.gamma();
        let d = self.params.delta();
        let rho_vac = self.config.rho_vac;
        let periodic = self.config.boundary == Boundary::Periodic;

        let mut p = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut mu = vec![0.0; n];
        let mut m = vec![0.0; n];
        for i in 0..n {
            let r = rho[i];
            m[i] = r * u[i];
            if r > 0.0 {
                p[i] = pow_real(r, g);
                c[i] = (g * p[i] / r).sqrt();
                mu[i] = pow_real(r, d);
            }
        }

        // Face f sits between cells f-1 and f; ghosts are (0, 0) vacuum.
        let mut mass_flux = vec![0.0; n + 1];
        let mut mom_flux = vec![0.0; n + 1];
        for f in 0..=n {
            let (l, r) = if periodic {
                ((f + n - 1) % n, f % n)
            } else {
                (f.wrapping_sub(1), f)
            };
            let left_ok = l < n;
            let right_ok = r < n;
            let (rl, ml, ul, pl, cl, mul) = if left_ok {
                (rho[l], m[l], u[l], p[l], c[l], mu[l])
            } else {
                (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
            };
            let (rr, mr, ur, pr, cr, mur) = if right_ok {
                (rho[r], m[r], u[r], p[r], c[r], mu[r])
            } else {
                (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
            };
            let (fm, fp) = rusanov(rl, ml, ul, pl, cl, rr, mr, ur, pr, cr);
            let vac_l = rl < rho_vac;
            let vac_r = rr < rho_vac;
            // A face touching exactly one vacuum cell carries no viscous stress.
            let mu_face = if vac_l != vac_r {
                mul.min(mur)
            } else {
                0.5 * (mul + mur)
            };
            mass_flux[f] = fm;
            mom_flux[f] = fp - mu_face * (ur - ul) / dx;
        }

        let lambda = dt / dx;
        let mut new_rho = vec![0.0; n];
        let mut new_m = vec![0.0; n];
        let mut new_u = vec![0.0; n];
        let mut clipped = 0.0;
        for i in 0..n {
            let mut r = rho[i] - lambda * (mass_flux[i + 1] - mass_flux[i]);
            let mut mm = m[i] - lambda * (mom_flux[i + 1] - mom_flux[i]);
            if let Some(src) = self.source {
                let (sr, sm) = src.source(t, grid.center(i));
                r += dt * sr;
                mm += dt * sm;
            }
            if r < 0.0 {
                clipped -= r * dx;
                r = 0.0;
                mm = 0.0;
            }
            if r < rho_vac {
                // pressureless law, first-order upwind
                let ui = u[i];
                let neighbour = |j: Option<usize>| j.map_or(0.0, |j| u[j]);
                let left = if i > 0 {
                    Some(i - 1)
                } else if periodic {
                    Some(n - 1)
                } else {
                    None
                };
                let right = if i + 1 < n {
                    Some(i + 1)
                } else if periodic {
                    Some(0)
                } else {
                    None
                };
                let v = if ui >= 0.0 {
                    ui - lambda * ui * (ui - neighbour(left))
                } else {
                    ui - lambda * ui * (neighbour(right) - ui)
                };
                new_u[i] = v;
                mm = r * v;
            } else {
                new_u[i] = mm / r;
            }
            new_rho[i] = r;
            new_m[i] = mm;
        }
        let outflow_rate = if periodic {
            0.0
        } else {
            mass_flux[n] - mass_flux[0]
        };
        StageOutput {
            rho: new_rho,
            momentum: new_m,
            u: new_u,
            clipped,
            outflow_rate,
        }
    }

    fn make_state(
        &self,
        t: f64,
        template: &FluidState,
        rho: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<FluidState> {
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
        }
        let vacuum = rho.iter().map(|&r| r < self.config.rho_vac).collect();
        Ok(FluidState {
            t,
            grid: template.grid,
            rho,
            u,
            vacuum,
        })
    }

    /// Heun step without the stability check.
    pub fn step_unchecked(&self, state: &FluidState, dt: f64) -> Result<StepOutcome> {
        let (max_wave_speed, _) = max_signal(state, &self.params);
        let t_next = state.t + dt;
        let first = self.euler_stage(state.t, state, &state.rho, &state.u, dt);
        let stage = self.make_state(t_next, state, first.rho, first.u)?;
        let second = self.euler_stage(t_next, state, &stage.rho, &stage.u, dt);

        let n = state.len();
        let mut rho = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 0..n {
            let r = 0.5 * (state.rho[i] + second.rho[i]);
            rho[i] = r;
            u[i] = if r < self.config.rho_vac {
                0.5 * (state.u[i] + second.u[i])
            } else {
                0.5 * (state.rho[i] * state.u[i] + second.momentum[i]) / r
            };
        }
        let next = self.make_state(t_next, state, rho, u)?;
        let report = StepReport {
            dt,
            mass_defect: 0.5 * (first.clipped + second.clipped),
            boundary_outflow: 0.5 * dt * (first.outflow_rate + second.outflow_rate),
            max_wave_speed,
        };
        Ok(StepOutcome {
            state: next,
            stage,
            report,
        })
    }

    pub fn step(&self, state: &FluidState, dt: f64) -> Result<StepOutcome> {
        let limit = self.cfl_dt(state)?;
        if dt.is_nan() || dt <= 0.0 || dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        self.step_unchecked(state, dt)
    }

    /// Steps until `t_target`, landing exactly on every requested sample time.
    pub fn advance_to(
        &self,
        mut state: FluidState,
        t_target: f64,
        sample_times: &[f64],
        observer: &mut dyn StepObserver,
    ) -> Result<FluidState> {
        if t_target < state.t {
            return Err(Error::NonMonotoneTarget {
                target: t_target,
                current: state.t,
            });
        }
        let mut samples: Vec<f64> = sample_times
            .iter()
            .copied()
            .filter(|&s| s >= state.t && s <= t_target)
            .collect();
        samples.sort_by(f64::total_cmp);
        samples.dedup();
        let mut next_sample = 0;
        let eps = 1e-13 * t_target.abs().max(1.0);

        loop {
            while next_sample < samples.len() && (samples[next_sample] - state.t).abs() <= eps {
                observer.on_sample(&state)?;
                next_sample += 1;
            }
            if t_target - state.t <= eps {
                break;
            }
            let stop = samples
                .get(next_sample)
                .copied()
                .unwrap_or(t_target)
                .min(t_target);
            let mut dt = self.cfl_dt(&state)?;
            let land = stop - state.t <= dt * (1.0 + 1e-12);
            if land {
                dt = stop - state.t;
            }
            let outcome = self.step_unchecked(&state, dt)?;
            let StepOutcome {
                state: mut next,
                stage,
                report,
            } = outcome;
            if land {
                next.t = stop;
            }
            observer.on_step(&state, &stage, &next, &report)?;
            state = next;
        }
        Ok(state)
    }
}

/// One Heun step with the default (source-free) operator.
pub fn step(
    state: &FluidState,
    dt: f64,
    config: &SchemeConfig,
    params: &Parameters,
) -> Result<(FluidState, StepReport)> {
    let outcome = Stepper::new(*params, *config).step(state, dt)?;
    Ok((outcome.state, outcome.report))
}

pub fn advance_to(
    state: FluidState,
    t_target: f64,
    config: &SchemeConfig,
    params: &Parameters,
    sample_times: &[f64],
    observer: &mut dyn StepObserver,
) -> Result<FluidState> {
    Stepper::new(*params, *config).advance_to(state, t_target, sample_times, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(g: f64, d: f64) -> Parameters {
        Parameters::new(g, d).unwrap()
    }

    fn config() -> SchemeConfig {
        SchemeConfig::new(0.5, 1e-10, 0.01).unwrap()
    }

    #[test]
    fn convective_flux_examples() {
        let p = params(2.0, 2.0);
        let f = convective_flux(Conserved::new(1.0, 0.0), Conserved::new(1.0, 0.0), &p).unwrap();
        assert_eq!(f, (0.0, 1.0));
        let f = convective_flux(Conserved::new(1.0, 1.0), Conserved::new(1.0, 1.0), &p).unwrap();
        assert_eq!(f, (1.0, 2.0));
        let f = convective_flux(Conserved::new(1.0, 0.0), Conserved::new(0.0, 0.0), &p).unwrap();
        assert_relative_eq!(f.0, 2f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(f.1, 0.5, max_relative = 1e-15);
        assert!(convective_flux(Conserved::new(-1.0, 0.0), Conserved::new(0.0, 0.0), &p).is_err());
    }

    #[test]
    fn viscous_flux_examples() {
        let p = params(2.0, 2.0);
        assert_eq!(viscous_flux(1.0, 1.0, 0.0, 1.0, 0.5, &p).unwrap(), 2.0);
        assert_eq!(viscous_flux(0.0, 0.0, 3.0, -7.0, 0.1, &p).unwrap(), 0.0);
        assert_eq!(viscous_flux(2.0, 0.0, 0.0, 1.0, 1.0, &p).unwrap(), 2.0);
        assert!(viscous_flux(-1.0, 0.0, 0.0, 1.0, 1.0, &p).is_err());
    }

    fn uniform(n: usize, dx: f64, rho: f64, u: f64) -> FluidState {
        let grid = Grid::new(0.0, n as f64 * dx, n).unwrap();
        FluidState::new(0.0, grid, vec![rho; n], vec![u; n], 1e-10).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let s = uniform(10, 0.1, 1.0, 0.0);
        assert_relative_eq!(
            cfl_dt(&s, &config(), &params(2.0, 2.0)).unwrap(),
            0.0025,
            max_relative = 1e-14
        );
        let zero = FluidState::zeros(Grid::new(0.0, 1.0, 10).unwrap());
        assert_eq!(cfl_dt(&zero, &config(), &params(2.0, 2.0)).unwrap(), 0.01);
        let s = uniform(10, 1.0, 1.0, 3.0);
        let cfg = SchemeConfig::new(1.0, 1e-10, 0.01).unwrap();
        assert_relative_eq!(
            cfl_dt(&s, &cfg, &params(2.0, 3.0)).unwrap(),
            1.0 / (3.0 + 2f64.sqrt()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let zero = FluidState::zeros(Grid::new(-1.0, 1.0, 20).unwrap());
        let (next, report) = step(&zero, 0.01, &config(), &params(2.0, 2.0)).unwrap();
        assert!(next.rho.iter().all(|&r| r == 0.0));
        assert!(next.u.iter().all(|&v| v == 0.0));
        assert_eq!(report.mass_defect, 0.0);
        let out = advance_to(
            zero.clone(),
            0.3,
            &config(),
            &params(2.0, 2.0),
            &[],
            &mut (),
        )
        .unwrap();
        assert_eq!(out.rho, zero.rho);
        assert_eq!(out.u, zero.u);
        assert_eq!(out.t, 0.3);
    }

    #[test]
    fn advance_to_same_time_is_identity() {
        let s = uniform(8, 0.1, 1.0, 0.3);
        let out = advance_to(s.clone(), 0.0, &config(), &params(2.0, 2.0), &[], &mut ()).unwrap();
        assert_eq!(out, s);
        assert!(matches!(
            advance_to(s.clone(), -1.0, &config(), &params(2.0, 2.0), &[], &mut ()),
            Err(Error::NonMonotoneTarget { .. })
        ));
    }

    #[test]
    fn far_vacuum_cell_untouched() {
        let n = 40;
        let grid = Grid::new(0.0, 4.0, n).unwrap();
        let mut rho = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 2..6 {
            rho[i] = 1.0;
            u[i] = 0.2;
        }
        u[30] = 0.0;
        let s = FluidState::new(0.0, grid, rho, u, 1e-10).unwrap();
        let p = params(2.0, 2.0);
        let dt = cfl_dt(&s, &config(), &p).unwrap();
        let (next, _) = step(&s, dt, &config(), &p).unwrap();
        assert_eq!(next.rho[30], 0.0);
        assert_eq!(next.u[30], 0.0);
    }

    #[test]
    fn cfl_violation_rejected() {
        let s = uniform(8, 0.1, 1.0, 0.0);
        assert!(matches!(
            step(&s, 1.0, &config(), &params(2.0, 2.0)),
            Err(Error::CflViolation { .. })
        ));
    }

    /// Forward-Euler stage on a lone unit cell, computed by hand from the
    /// flux formulas: gamma = delta = 2, dx = 1, dt = 0.1.
    ///
    /// Faces around the cell see `U_L = (0,0)`, `U_R = (1,0)` on the left and
    /// the mirror image on the right. With `s = sqrt(2)`:
    /// left face mass flux `-sqrt(2)/2`, momentum flux `1/2`;
    /// right face mass flux `+sqrt(2)/2`, momentum flux `1/2`.
    /// Velocities are zero so the viscous flux vanishes.
    #[test]
    fn single_cell_euler_stage_by_hand() {
        let p = params(2.0, 2.0);
        let grid = Grid::new(0.0, 5.0, 5).unwrap();
        let mut rho = vec![0.0; 5];
        rho[2] = 1.0;
        let s = FluidState::new(0.0, grid, rho, vec![0.0; 5], 1e-10).unwrap();
        let cfg = SchemeConfig::new(1.0, 1e-10, 0.01).unwrap();
        let stepper = Stepper::new(p, cfg);
        let out = stepper.euler_stage(0.0, &s, &s.rho, &s.u, 0.1);
        let h = 2f64.sqrt() / 2.0;
        // center: rho = 1 - 0.1 (h - (-h)), momentum = 1 - 1 ... = 0
        assert_relative_eq!(out.rho[2], 1.0 - 0.2 * h, max_relative = 1e-15);
        assert_eq!(out.momentum[2], 0.0);
        // neighbours receive 0.1 h each, momentum -/+ 0.1 * 1/2
        assert_relative_eq!(out.rho[1], 0.1 * h, max_relative = 1e-15);
        assert_relative_eq!(out.rho[3], 0.1 * h, max_relative = 1e-15);
        assert_relative_eq!(out.momentum[1], -0.05, max_relative = 1e-15);
        assert_relative_eq!(out.momentum[3], 0.05, max_relative = 1e-15);
        assert_relative_eq!(out.u[1], -0.05 / (0.1 * h), max_relative = 1e-14);
        assert_eq!(out.rho[0], 0.0);
        assert_eq!(out.rho[4], 0.0);
        assert_eq!(out.clipped, 0.0);
        assert_eq!(out.outflow_rate, 0.0);
    }

    #[test]
    fn vacuum_velocity_follows_upwind_burgers() {
        let p = params(2.0, 2.0);
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let u: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let s = FluidState::new(0.0, grid, vec![0.0; 10], u.clone(), 1e-10).unwrap();
        let stepper = Stepper::new(p, config());
        let out = stepper.euler_stage(0.0, &s, &s.rho, &s.u, 0.05);
        let lambda = 0.05 / 0.1;
        for i in 1..10 {
            let expected = u[i] - lambda * u[i] * (u[i] - u[i - 1]);
            assert_relative_eq!(out.u[i], expected, max_relative = 1e-15);
            assert_eq!(out.rho[i], 0.0);
        }
    }

    fn random_state() -> impl Strategy<Value = FluidState> {
        (8usize..40)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], n),
                    prop::collection::vec(-1.5f64..1.5, n),
                )
            })
            .prop_map(|(n, rho, u)| {
                let grid = Grid::new(-1.0, 1.0, n).unwrap();
                FluidState::new(0.0, grid, rho, u, 1e-10).unwrap()
            })
    }

    proptest! {
        #[test]
        fn flux_is_consistent(rho in 0.0f64..5.0, u in -3.0f64..3.0, g in 1.1f64..3.0) {
            let p = params(g, 2.0);
            let s = Conserved::new(rho, rho * u);
            let (fm, fp) = convective_flux(s, s, &p).unwrap();
            let uu = s.velocity();
            prop_assert_eq!(fm, s.momentum);
            prop_assert!((fp - (s.momentum * uu + pow_real(rho, g))).abs() <= 1e-12 * (1.0 + fp.abs()));
        }

        #[test]
        fn step_conserves_mass_and_positivity(state in random_state(), g in 1.2f64..3.0, d in 1.1f64..3.0) {
            let p = params(g, d);
            let cfg = SchemeConfig::new(0.4, 1e-10, 0.01).unwrap();
            let m0 = state.total_mass();
            let dt = cfl_dt(&state, &cfg, &p).unwrap();
            let (next, report) = step(&state, dt, &cfg, &p).unwrap();
            prop_assert!(next.rho.iter().all(|&r| r >= 0.0));
            prop_assert!(report.mass_defect >= 0.0);
            let m1 = next.total_mass();
            let balance = m1 - m0 + report.boundary_outflow - report.mass_defect;
            prop_assert!(balance.abs() <= 1e-12 * m0.max(1.0), "balance {}", balance);
        }

        #[test]
        fn vacuum_faces_carry_no_viscous_stress(u1 in -2.0f64..2.0, u2 in -2.0f64..2.0, d in 1.1f64..3.0) {
            let p = params(2.0, d);
            prop_assert_eq!(viscous_flux(0.0, 0.0, u1, u2, 0.1, &p).unwrap(), 0.0);
        }
    }
}
