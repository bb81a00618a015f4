//! Verification: manufactured-solution residuals, the invariant suite run on
//! a full simulation, and refinement studies.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::lower_envelope;
use crate::lagrangian::PathLabel;
use crate::model::{pow_real, FluidState, Grid, Parameters};
use crate::scheme::{
    convective_flux, viscous_flux, Boundary, Conserved, SchemeConfig, SourceTerm, Stepper,
};
use crate::simulation::{run, RunConfig, RunOutput};

/// Closed-form fields with the partial derivatives needed to evaluate the
/// residual of the equations of motion.
pub trait ManufacturedSolution {
    fn rho(&self, t: f64, x: f64) -> f64;
    fn rho_t(&self, t: f64, x: f64) -> f64;
    fn rho_x(&self, t: f64, x: f64) -> f64;
    fn u(&self, t: f64, x: f64) -> f64;
    fn u_t(&self, t: f64, x: f64) -> f64;
    fn u_x(&self, t: f64, x: f64) -> f64;
    fn u_xx(&self, t: f64, x: f64) -> f64;

    /// All fields at once; override when they share expensive work.
    fn fields(&self, t: f64, x: f64) -> Fields {
        Fields {
            rho: self.rho(t, x),
            rho_t: self.rho_t(t, x),
            rho_x: self.rho_x(t, x),
            u: self.u(t, x),
            u_t: self.u_t(t, x),
            u_x: self.u_x(t, x),
            u_xx: self.u_xx(t, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub rho: f64,
    pub rho_t: f64,
    pub rho_x: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xx: f64,
}

/// `(rho_t + (rho u)_x, (rho u)_t + (rho u^2)_x + p_x - (rho^delta u_x)_x)`.
pub fn mms_residual(
    sol: &dyn ManufacturedSolution,
    t: f64,
    x: f64,
    params: &Parameters,
) -> (f64, f64) {
    let g = params.gamma();
    let d = params.delta();
    let f = sol.fields(t, x);
    let (r, rt, rx) = (f.rho, f.rho_t, f.rho_x);
    let (u, ut, ux, uxx) = (f.u, f.u_t, f.u_x, f.u_xx);
    let continuity = rt + rx * u + r * ux;
    let momentum_t = rt * u + r * ut;
    let convection = rx * u * u + 2.0 * r * u * ux;
    let pressure_x = if r > 0.0 {
        g * pow_real(r, g - 1.0) * rx
    } else {
        0.0
    };
    let viscous = if r > 0.0 {
        d * pow_real(r, d - 1.0) * rx * ux + pow_real(r, d) * uxx
    } else {
        0.0
    };
    (continuity, momentum_t + convection + pressure_x - viscous)
}

/// Uniform density at rest.
#[derive(Debug, Clone, Copy)]
pub struct StaticState {
    pub rho: f64,
}

impl ManufacturedSolution for StaticState {
    fn rho(&self, _: f64, _: f64) -> f64 {
        self.rho
    }
    fn rho_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn rho_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `rho = e^t`, `u = -x`: mass-consistent, driven by a momentum source.
#[derive(Debug, Clone, Copy)]
pub struct UniformCompression;

impl ManufacturedSolution for UniformCompression {
    fn rho(&self, t: f64, _: f64) -> f64 {
        t.exp()
    }
    fn rho_t(&self, t: f64, _: f64) -> f64 {
        t.exp()
    }
    fn rho_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u(&self, _: f64, x: f64) -> f64 {
        -x
    }
    fn u_t(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn u_x(&self, _: f64, _: f64) -> f64 {
        -1.0
    }
    fn u_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// Periodic waves on `[0, 1]`:
/// `rho = rho_mean + rho_amp sin(2 pi (x - rho_speed t))`,
/// `u = u_mean + u_amp cos(2 pi (x - u_speed t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWaves {
    pub rho_mean: f64,
    pub rho_amp: f64,
    pub rho_speed: f64,
    pub u_mean: f64,
    pub u_amp: f64,
    pub u_speed: f64,
}

impl Default for PeriodicWaves {
    fn default() -> Self {
        Self {
            rho_mean: 0.5,
            rho_amp: 0.1,
            rho_speed: 1.0,
            u_mean: 0.5,
            u_amp: 0.2,
            u_speed: 0.5,
        }
    }
}

impl ManufacturedSolution for PeriodicWaves {
    fn rho(&self, t: f64, x: f64) -> f64 {
        self.rho_mean + self.rho_amp * (TAU * (x - self.rho_speed * t)).sin()
    }
    fn rho_t(&self, t: f64, x: f64) -> f64 {
        -TAU * self.rho_speed * self.rho_amp * (TAU * (x - self.rho_speed * t)).cos()
    }
    fn rho_x(&self, t: f64, x: f64) -> f64 {
        TAU * self.rho_amp * (TAU * (x - self.rho_speed * t)).cos()
    }
    fn u(&self, t: f64, x: f64) -> f64 {
        self.u_mean + self.u_amp * (TAU * (x - self.u_speed * t)).cos()
    }
    fn u_t(&self, t: f64, x: f64) -> f64 {
        TAU * self.u_speed * self.u_amp * (TAU * (x - self.u_speed * t)).sin()
    }
    fn u_x(&self, t: f64, x: f64) -> f64 {
        -TAU * self.u_amp * (TAU * (x - self.u_speed * t)).sin()
    }
    fn u_xx(&self, t: f64, x: f64) -> f64 {
        -TAU * TAU * self.u_amp * (TAU * (x - self.u_speed * t)).cos()
    }
    fn fields(&self, t: f64, x: f64) -> Fields {
        let (sr, cr) = (TAU * (x - self.rho_speed * t)).sin_cos();
        let (su, cu) = (TAU * (x - self.u_speed * t)).sin_cos();
        Fields {
            rho: self.rho_mean + self.rho_amp * sr,
            rho_t: -TAU * self.rho_speed * self.rho_amp * cr,
            rho_x: TAU * self.rho_amp * cr,
            u: self.u_mean + self.u_amp * cu,
            u_t: TAU * self.u_speed * self.u_amp * su,
            u_x: -TAU * self.u_amp * su,
            u_xx: -TAU * TAU * self.u_amp * cu,
        }
    }
}

struct ResidualSource<'a> {
    sol: &'a dyn ManufacturedSolution,
    params: Parameters,
}

impl SourceTerm for ResidualSource<'_> {
    fn source(&self, t: f64, x: f64) -> (f64, f64) {
        mms_residual(self.sol, t, x, &self.params)
    }
}

/// Runs the forced scheme on a periodic unit interval and returns
/// `||rho - rho_exact||_1 + ||u - u_exact||_1` at `t_final`.
pub fn mms_l1_error(
    sol: &dyn ManufacturedSolution,
    n_cells: usize,
    t_final: f64,
    cfl: f64,
    params: &Parameters,
) -> Result<f64> {
    let grid = Grid::new(0.0, 1.0, n_cells)?;
    let xs = grid.centers();
    let rho: Vec<f64> = xs.iter().map(|&x| sol.rho(0.0, x)).collect();
    let u: Vec<f64> = xs.iter().map(|&x| sol.u(0.0, x)).collect();
    let config = SchemeConfig::new(cfl, 1e-10, 1e-2)?.with_boundary(Boundary::Periodic);
    let state = FluidState::new(0.0, grid, rho, u, config.rho_vac)?;
    let source = ResidualSource {
        sol,
        params: *params,
    };
    let stepper = Stepper::new(*params, config).with_source(&source);
    let end = stepper.advance_to(state, t_final, &[], &mut ())?;
    let dx = grid.dx();
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            (end.rho[i] - sol.rho(t_final, x)).abs() + (end.u[i] - sol.u(t_final, x)).abs()
        })
        .sum::<f64>()
        * dx)
}

/// Thresholds of the invariant suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub total_mass_rel: f64,
    pub interval_mass_rel: f64,
    /// Multiplies `(dx + dt) E0`.
    pub energy_balance: f64,
    pub sup_bound_slack: f64,
    /// Multiplies `dx`.
    pub monotone_increase: f64,
    pub volume_cells: f64,
    pub endpoint_cells: f64,
    pub representation_rel: f64,
    pub derivative_rel: f64,
    /// Multiplies `dx` in the relative slack of the lower envelope.
    pub jensen: f64,
    pub mms_order: f64,
    /// Admissible range of the energy-residual ratio between levels.
    pub energy_ratio: (f64, f64),
    /// Minimum ratio for residuals expected to halve.
    pub halving_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            total_mass_rel: 1e-8,
            interval_mass_rel: 1e-3,
            energy_balance: 5.0,
            sup_bound_slack: 1e-3,
            monotone_increase: 10.0,
            volume_cells: 2.0,
            endpoint_cells: 5.0,
            representation_rel: 1e-3,
            derivative_rel: 0.05,
            jensen: 10.0,
            mms_order: 0.8,
            energy_ratio: (1.5, 3.0),
            halving_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The identity or estimate being certified.
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    /// Passes when `measured >= tolerance`.
    pub fn at_least(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            tolerance,
            passed: measured >= tolerance,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} measured={:.6e} tolerance={:.6e} [{}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.anchor
        )
    }
}

/// Observed convergence between two refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub quantity: String,
    pub coarse_cells: usize,
    pub fine_cells: usize,
    pub coarse: f64,
    pub fine: f64,
    /// `coarse / fine`.
    pub ratio: f64,
    /// `log2(ratio)`.
    pub order: f64,
}

impl OrderEntry {
    fn new(quantity: &str, coarse_cells: usize, fine_cells: usize, coarse: f64, fine: f64) -> Self {
        let ratio = if fine == 0.0 && coarse == 0.0 {
            f64::INFINITY
        } else {
            coarse / fine
        };
        Self {
            quantity: quantity.into(),
            coarse_cells,
            fine_cells,
            coarse,
            fine,
            ratio,
            order: ratio.log2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub orders: Vec<OrderEntry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.orders.extend(other.orders);
    }

    /// One line per check, then one per order entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&c.line());
            out.push('\n');
        }
        for o in &self.orders {
            out.push_str(&format!(
                "ORDER {} {}->{} coarse={:.6e} fine={:.6e} ratio={:.4} order={:.4}\n",
                o.quantity, o.coarse_cells, o.fine_cells, o.coarse, o.fine, o.ratio, o.order
            ));
        }
        out
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale != 0.0 {
        diff.abs() / scale.abs()
    } else {
        diff.abs()
    }
}

/// Scalar residuals of one run that are expected to shrink under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResiduals {
    pub n_cells: usize,
    /// `max_t |E(t) - E0 + int_0^t int rho^delta u_x^2|`.
    pub energy_balance: f64,
    /// Max relative mismatch between the centered difference of `I` and its predicted derivative.
    pub derivative_mismatch: f64,
    /// Max over interior tracers of `|d/dt(xi + rho^delta/delta) + rho^gamma|` between samples.
    pub monotone_residual: f64,
    /// `max_t |I - I_alt| / I`.
    pub representation: f64,
    /// `max_t |m(t) - m(0)| / m(0)` on the tracked interval.
    pub interval_mass: f64,
}

/// Largest interior-sample relative mismatch of the derivative identity.
pub fn derivative_mismatch(out: &RunOutput) -> f64 {
    let s = &out.series;
    let mut worst = 0.0_f64;
    for k in 1..s.len().saturating_sub(1) {
        let fd = (s[k + 1].i - s[k - 1].i) / (s[k + 1].t - s[k - 1].t);
        worst = worst.max(relative(fd - s[k].didt_rhs, s[k].didt_rhs));
    }
    worst
}

/// Largest increase of `xi + rho^delta / delta` between consecutive samples, any path.
pub fn max_monotone_increase(out: &RunOutput) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for id in 0..out.n_paths() {
        let q: Vec<f64> = out.path(id).map(|p| p.monotone_q).collect();
        for w in q.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    if worst.is_finite() {
        worst
    } else {
        0.0
    }
}

/// Residual of `d/dt (xi + rho^delta/delta) + rho^gamma = 0` along interior tracers.
pub fn monotone_residual(out: &RunOutput) -> f64 {
    let mut worst = 0.0_f64;
    for id in 0..out.n_paths() {
        if out.path_labels[id] != PathLabel::InteriorTracer {
            continue;
        }
        let samples: Vec<_> = out.path(id).collect();
        for w in samples.windows(2) {
            let dt = w[1].t - w[0].t;
            let r = (w[1].monotone_q - w[0].monotone_q)
                + (w[1].pressure_integral - w[0].pressure_integral);
            worst = worst.max(r.abs() / dt);
        }
    }
    worst
}

pub fn residuals(out: &RunOutput) -> RunResiduals {
    let m0 = out.series[0].m;
    RunResiduals {
        n_cells: out.grid.n_cells(),
        energy_balance: out
            .series
            .iter()
            .map(|r| r.energy_residual.abs())
            .fold(0.0, f64::max),
        derivative_mismatch: derivative_mismatch(out),
        monotone_residual: monotone_residual(out),
        representation: out
            .series
            .iter()
            .map(|r| relative(r.i - r.i_alt, r.i))
            .fold(0.0, f64::max),
        interval_mass: out
            .series
            .iter()
            .map(|r| relative(r.m - m0, m0))
            .fold(0.0, f64::max),
    }
}

/// Evaluates every invariant on a finished run.
pub fn check_run(
    config: &RunConfig,
    out: &RunOutput,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let params = &config.params;
    let dx = out.dx();
    let dt = out.max_dt;
    let mut checks = Vec::new();

    // scheme
    let m_total0 = out.ledger[0].total_mass;
    let mass_drift = out
        .ledger
        .iter()
        .map(|l| relative(l.mass_imbalance(m_total0), m_total0))
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "total_mass_conservation",
        "int rho dx = int rho0 dx (clipping and boundary fluxes booked)",
        mass_drift,
        tol.total_mass_rel,
    ));
    checks.push(Check::at_least(
        "positivity",
        "rho >= 0 after every step",
        out.min_density.min(0.0),
        0.0,
    ));

    let last = &out.final_state;
    let mut flux_error = 0.0_f64;
    for (&r, &v) in last.rho.iter().zip(&last.u) {
        let s = Conserved::new(r, r * v);
        let (fm, fp) = convective_flux(s, s, params)?;
        let exact_p = if r > 0.0 {
            r * v * v + pow_real(r, params.gamma())
        } else {
            0.0
        };
        flux_error = flux_error
            .max((fm - s.momentum).abs())
            .max(relative(fp - exact_p, exact_p.max(1.0)));
    }
    checks.push(Check::at_most(
        "flux_consistency",
        "convective flux reduces to f(U) for equal states",
        flux_error,
        1e-12,
    ));

    let mut vacuum_stress = 0.0_f64;
    for i in 1..last.len() {
        if last.rho[i - 1] == 0.0 && last.rho[i] == 0.0 {
            let v = viscous_flux(0.0, 0.0, last.u[i - 1], last.u[i], dx, params)?;
            vacuum_stress = vacuum_stress.max(v.abs());
        }
    }
    checks.push(Check::at_most(
        "vacuum_viscous_degeneracy",
        "rho^delta u_x vanishes where rho = 0",
        vacuum_stress,
        0.0,
    ));

    let zero = FluidState::zeros(out.grid);
    let stepper = Stepper::new(*params, out.scheme);
    let stepped = stepper.step_unchecked(&zero, out.scheme.dt_max)?;
    let fixed_point_error = stepped
        .state
        .rho
        .iter()
        .chain(&stepped.state.u)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "zero_state_fixed_point",
        "the zero state is preserved by a step",
        fixed_point_error,
        0.0,
    ));

    // lagrangian
    checks.push(Check::at_most(
        "path_monotonicity",
        "xi + rho^delta/delta is non-increasing along particle paths",
        max_monotone_increase(out),
        tol.monotone_increase * dx,
    ));
    let sup_ratio = out
        .series
        .iter()
        .map(|r| {
            if r.rho_bound > 0.0 {
                r.sup_rho / r.rho_bound
            } else {
                r.sup_rho
            }
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "density_sup_bound",
        "sup rho(t) <= (delta (S0 + sqrt(2 E0 m)))^(1/delta)",
        sup_ratio,
        1.0 + tol.sup_bound_slack,
    ));

    let (a0, b0) = config.mass_interval();
    let ubar = out.initial.endpoint_velocity;
    let mut endpoint_error = 0.0_f64;
    let mut width_error = 0.0_f64;
    for (pa, pb) in out.path(0).zip(out.path(1)) {
        endpoint_error = endpoint_error
            .max((pa.x - (a0 + ubar * pa.t)).abs())
            .max((pb.x - (b0 + ubar * pb.t)).abs());
        width_error = width_error.max(((pb.x - pa.x) - (b0 - a0)).abs());
    }
    checks.push(Check::at_most(
        "endpoint_speed",
        "vacuum boundary of the mass group moves with the constant speed u0(a0) = u0(b0)",
        endpoint_error,
        tol.endpoint_cells * dx,
    ));
    checks.push(Check::at_most(
        "volume_invariance",
        "|A(t)| = |A0|",
        width_error,
        tol.volume_cells * dx,
    ));

    // functionals
    let res = residuals(out);
    checks.push(Check::at_most(
        "interval_mass_constancy",
        "m(t) = m(0) on the particle image of A0",
        res.interval_mass,
        tol.interval_mass_rel,
    ));
    checks.push(Check::at_most(
        "representation_identity",
        "M - 2(t+1)F + 2(t+1)^2 eps = int (x-(t+1)u)^2 rho + 2(t+1)^2/(gamma-1) int p",
        res.representation,
        tol.representation_rel,
    ));
    checks.push(Check::at_most(
        "derivative_identity",
        "dI/dt = 2(3-gamma)/(gamma-1)(t+1) int p + 2(t+1) int rho^delta u_x - 2(t+1)^2 int rho^delta u_x^2",
        res.derivative_mismatch,
        tol.derivative_rel,
    ));

    let area0 = out.initial.area_a0;
    let m0 = out.initial.m0;
    let mut jensen_excess = f64::NEG_INFINITY;
    let mut cauchy_excess = f64::NEG_INFINITY;
    for r in &out.series {
        let lower = if m0 > 0.0 {
            lower_envelope(r.t, area0, m0, params)
        } else {
            0.0
        };
        jensen_excess = jensen_excess.max(lower - r.i * (1.0 + tol.jensen * dx));
        let g = params.gamma();
        let pressure_term = 2.0 * (3.0 - g) / (g - 1.0) * (r.t + 1.0) * r.pressure;
        cauchy_excess = cauchy_excess.max(r.didt_rhs - (pressure_term + out.initial.m_const));
    }
    checks.push(Check::at_most(
        "jensen_lower_bound",
        "I(t) >= 2(1+t)^2/(gamma-1) |A0|^(1-gamma) m(0)^gamma",
        jensen_excess,
        0.0,
    ));
    checks.push(Check::at_most(
        "cauchy_step",
        "dI/dt <= 2(3-gamma)/(gamma-1)(t+1) int p + M with M = 2|A0| rho_sup^delta",
        cauchy_excess,
        1e-12 * out.initial.m_const.max(1.0),
    ));

    let e0 = out.ledger[0].total_energy;
    checks.push(Check::at_most(
        "energy_balance",
        "d/dt int (rho u^2/2 + rho^gamma/(gamma-1)) + int rho^delta u_x^2 = 0",
        res.energy_balance,
        tol.energy_balance * (dx + dt) * e0,
    ));
    let energy_rise = out
        .ledger
        .windows(2)
        .map(|w| w[1].total_energy - w[0].total_energy)
        .fold(0.0, f64::max);
    checks.push(Check::at_most(
        "energy_non_increasing",
        "total energy does not grow",
        energy_rise,
        1e-12 * e0.max(1.0),
    ));

    Ok(VerificationReport {
        checks,
        orders: Vec::new(),
    })
}

/// Runs `config` once and evaluates every invariant.
pub fn run_invariant_suite(
    config: &RunConfig,
    tol: &Tolerances,
) -> Result<(RunOutput, VerificationReport)> {
    let out = run(config)?;
    let report = check_run(config, &out, tol)?;
    Ok((out, report))
}

/// Evaluates `f` on every level on its own thread, keeping level order.
fn in_parallel<T, F>(levels: &[usize], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| {
                let f = &f;
                scope.spawn(move || f(n))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("refinement level panicked"))
            .collect()
    })
}

/// Refinement levels must number at least three and double successively.
pub fn validate_levels(levels: &[usize]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels(levels.len()));
    }
    if levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::NonDoublingLevels(levels.to_vec()));
    }
    Ok(())
}

/// Observed order of the forced periodic-wave problem at `t_final = 0.1`.
pub fn mms_order_study(
    levels: &[usize],
    params: &Parameters,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    validate_levels(levels)?;
    let sol = PeriodicWaves::default();
    let errors = in_parallel(levels, |n| mms_l1_error(&sol, n, 0.1, 0.4, params))?;
    let mut report = VerificationReport::default();
    for (w, e) in levels.windows(2).zip(errors.windows(2)) {
        let entry = OrderEntry::new("mms_l1_error", w[0], w[1], e[0], e[1]);
        report.checks.push(Check::at_least(
            &format!("mms_order_{}_{}", w[0], w[1]),
            "observed L1 order of the forced periodic problem",
            entry.order,
            tol.mms_order,
        ));
        report.orders.push(entry);
    }
    Ok(report)
}

/// Residual decay of the run identities across doubling levels.
pub fn identity_study(
    config: &RunConfig,
    levels: &[usize],
    tol: &Tolerances,
) -> Result<(Vec<RunResiduals>, VerificationReport)> {
    validate_levels(levels)?;
    let all = in_parallel(levels, |n| {
        run(&config.with_cells(n)).map(|out| residuals(&out))
    })?;
    let report = identity_decay(&all, tol);
    Ok((all, report))
}

/// Checks on the sequence of residuals from successively doubled grids.
pub fn identity_decay(levels: &[RunResiduals], tol: &Tolerances) -> VerificationReport {
    let mut report = VerificationReport::default();
    for w in levels.windows(2) {
        let (c, f) = (&w[0], &w[1]);
        let tag = format!("{}_{}", c.n_cells, f.n_cells);
        let energy = OrderEntry::new(
            "energy_balance",
            c.n_cells,
            f.n_cells,
            c.energy_balance,
            f.energy_balance,
        );
        let (lo, hi) = tol.energy_ratio;
        report.checks.push(Check {
            name: format!("energy_ratio_{tag}"),
            anchor: "energy balance residual is first order in dx".into(),
            measured: energy.ratio,
            tolerance: hi,
            passed: (energy.coarse == 0.0 && energy.fine == 0.0)
                || (energy.ratio >= lo && energy.ratio <= hi),
        });
        let derivative = OrderEntry::new(
            "derivative_mismatch",
            c.n_cells,
            f.n_cells,
            c.derivative_mismatch,
            f.derivative_mismatch,
        );
        report.checks.push(Check::at_least(
            &format!("derivative_decreasing_{tag}"),
            "mismatch of dI/dt decreases under refinement",
            derivative.ratio,
            1.0,
        ));
        let monotone = OrderEntry::new(
            "monotone_residual",
            c.n_cells,
            f.n_cells,
            c.monotone_residual,
            f.monotone_residual,
        );
        report.checks.push(Check::at_least(
            &format!("monotone_residual_halving_{tag}"),
            "residual of d/dt(xi + rho^delta/delta) + rho^gamma halves",
            monotone.ratio,
            tol.halving_ratio,
        ));
        report.orders.extend([energy, derivative, monotone]);
    }
    report
}

/// MMS order and identity-residual decay over the same doubling levels.
pub fn convergence_study(
    config: &RunConfig,
    levels: &[usize],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut report = mms_order_study(levels, &config.params, tol)?;
    let (_, identities) = identity_study(config, levels, tol)?;
    report.extend(identities);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::DataKind;
    use approx::assert_abs_diff_eq;

    fn params() -> Parameters {
        Parameters::new(2.0, 2.0).unwrap()
    }

    #[test]
    fn static_state_has_zero_residual() {
        let r = mms_residual(&StaticState { rho: 0.7 }, 0.3, 0.1, &params());
        assert_eq!(r, (0.0, 0.0));
    }

    #[test]
    fn compression_residual_is_momentum_only() {
        // rho_t + (rho u)_x = e^t - e^t = 0; (rho u)_t + (rho u^2)_x = -x e^t + 2 x e^t.
        let (c, m) = mms_residual(&UniformCompression, 0.5, 0.4, &params());
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m, 0.4 * 0.5_f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn wave_derivatives_match_differences() {
        let w = PeriodicWaves::default();
        let (t, x, h) = (0.37, 0.61, 1e-6);
        assert_abs_diff_eq!(
            w.rho_t(t, x),
            (w.rho(t + h, x) - w.rho(t - h, x)) / (2.0 * h),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            w.rho_x(t, x),
            (w.rho(t, x + h) - w.rho(t, x - h)) / (2.0 * h),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            w.u_t(t, x),
            (w.u(t + h, x) - w.u(t - h, x)) / (2.0 * h),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            w.u_x(t, x),
            (w.u(t, x + h) - w.u(t, x - h)) / (2.0 * h),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            w.u_xx(t, x),
            (w.u_x(t, x + h) - w.u_x(t, x - h)) / (2.0 * h),
            epsilon = 1e-6
        );
    }

    #[test]
    fn combined_fields_match_components() {
        let w = PeriodicWaves::default();
        let f = w.fields(0.21, 0.83);
        assert_abs_diff_eq!(f.rho, w.rho(0.21, 0.83), epsilon = 1e-15);
        assert_abs_diff_eq!(f.rho_t, w.rho_t(0.21, 0.83), epsilon = 1e-13);
        assert_abs_diff_eq!(f.u_t, w.u_t(0.21, 0.83), epsilon = 1e-13);
        assert_abs_diff_eq!(f.u_xx, w.u_xx(0.21, 0.83), epsilon = 1e-12);
    }

    #[test]
    fn levels_must_double() {
        assert!(matches!(
            validate_levels(&[100, 200]),
            Err(Error::InsufficientLevels(2))
        ));
        assert!(matches!(
            validate_levels(&[100, 200, 300]),
            Err(Error::NonDoublingLevels(_))
        ));
        assert!(validate_levels(&[100, 200, 400]).is_ok());
    }

    #[test]
    fn zero_data_suite_passes() {
        let config = RunConfig {
            data: DataKind::Zero,
            n_cells: 100,
            t_final: 0.1,
            n_samples: 5,
            ..RunConfig::default()
        };
        let (_, report) = run_invariant_suite(&config, &Tolerances::default()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn mass_injection_is_detected() {
        let config = RunConfig {
            n_cells: 200,
            t_final: 0.05,
            n_samples: 5,
            fault: Some(crate::simulation::MassInjection {
                time: 0.02,
                amount: 1e-3,
            }),
            ..RunConfig::default()
        };
        let (_, report) = run_invariant_suite(&config, &Tolerances::default()).unwrap();
        assert!(!report.check("total_mass_conservation").unwrap().passed);
    }

    #[test]
    fn suite_is_deterministic() {
        let config = RunConfig {
            n_cells: 200,
            t_final: 0.05,
            n_samples: 5,
            ..RunConfig::default()
        };
        let (a, ra) = run_invariant_suite(&config, &Tolerances::default()).unwrap();
        let (b, rb) = run_invariant_suite(&config, &Tolerances::default()).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(ra, rb);
    }

    #[test]
    fn zero_data_residuals_vanish_at_every_level() {
        let config = RunConfig {
            data: DataKind::Zero,
            t_final: 0.05,
            n_samples: 5,
            ..RunConfig::default()
        };
        let (all, report) =
            identity_study(&config, &[50, 100, 200], &Tolerances::default()).unwrap();
        for r in &all {
            assert_eq!(r.energy_balance, 0.0);
            assert_eq!(r.derivative_mismatch, 0.0);
            assert_eq!(r.monotone_residual, 0.0);
        }
        assert!(report.passed());
    }

    #[test]
    fn decay_checks_use_ratios() {
        let mk = |n, e, d, q| RunResiduals {
            n_cells: n,
            energy_balance: e,
            derivative_mismatch: d,
            monotone_residual: q,
            representation: 0.0,
            interval_mass: 0.0,
        };
        let report = identity_decay(
            &[mk(100, 4.0, 0.2, 0.4), mk(200, 2.0, 0.1, 0.2)],
            &Tolerances::default(),
        );
        assert!(report.passed());
        let report = identity_decay(
            &[mk(100, 4.0, 0.2, 0.4), mk(200, 1.0, 0.3, 0.3)],
            &Tolerances::default(),
        );
        assert!(!report.check("energy_ratio_100_200").unwrap().passed);
        assert!(
            !report
                .check("derivative_decreasing_100_200")
                .unwrap()
                .passed
        );
        assert!(
            !report
                .check("monotone_residual_halving_100_200")
                .unwrap()
                .passed
        );
    }
}
