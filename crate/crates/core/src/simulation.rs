//! Run orchestration: builds the initial state, advances it while following
//! the tracer paths, and samples every diagnostic at uniform times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{self, compute_diagnostics, global_dissipation, DiagnosticsRecord};
use crate::lagrangian::{
    self, advance_particles, seed_paths, xi_field, DensityBound, ParticlePath,
};
use crate::model::{
    build_isolated_mass_group, default_vacuum_threshold, pow_real, FluidState, Grid,
    IsolatedMassGroupSpec, Parameters,
};
use crate::scheme::{SchemeConfig, StepObserver, StepReport, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataKind {
    IsolatedMassGroup,
    /// Identically zero density and velocity; every quantity must stay zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Parameters,
    pub data: DataKind,
    pub spec: IsolatedMassGroupSpec,
    /// `None` sizes the domain from the data and `t_final`.
    pub half_width: Option<f64>,
    pub n_cells: usize,
    pub cfl: f64,
    /// `None` selects `1e-10 max rho0`.
    pub rho_vac: Option<f64>,
    pub dt_max: f64,
    pub t_final: f64,
    pub n_samples: usize,
    pub interior_tracers: usize,
    /// Keep a full snapshot every this many samples and at the final one
    /// (0 disables snapshots).
    pub snapshot_stride: usize,
    /// Search horizon of the envelope-crossing predictor.
    pub t_max: f64,
    /// Negative-control hook: mass added, unaccounted, at a given time.
    pub fault: Option<MassInjection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassInjection {
    pub time: f64,
    pub amount: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: Parameters::new(2.0, 2.0).expect("valid defaults"),
            data: DataKind::IsolatedMassGroup,
            spec: IsolatedMassGroupSpec {
                c: 1.0,
                k1: 3.0,
                k2: 1.0,
            },
            half_width: None,
            n_cells: 2000,
            cfl: 0.4,
            rho_vac: None,
            dt_max: 1e-2,
            t_final: 1.0,
            n_samples: 100,
            interior_tracers: 16,
            snapshot_stride: 10,
            t_max: 1e6,
            fault: None,
        }
    }
}

impl RunConfig {
    /// Re-checks every model and scheme constraint.
    pub fn validate(&self) -> Result<()> {
        Parameters::new(self.params.gamma(), self.params.delta())?;
        self.spec.validate(&self.params)?;
        if self.n_cells < 2 {
            return Err(Error::InvalidGrid("n_cells must be at least 2".into()));
        }
        if let Some(l) = self.half_width {
            let required = self.spec.required_half_width(&self.params, self.t_final);
            if l.is_nan() || l < required {
                return Err(Error::DomainTooSmall {
                    half_width: l,
                    required,
                });
            }
        }
        SchemeConfig::new(self.cfl, self.rho_vac.unwrap_or(1e-10), self.dt_max)?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidScheme(format!(
                "t_final = {} must be >= 0",
                self.t_final
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidScheme("n_samples must be positive".into()));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidBlowUpInput(format!("t_max = {}", self.t_max)));
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
            .unwrap_or_else(|| self.spec.required_half_width(&self.params, self.t_final))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::symmetric(self.half_width(), self.n_cells)
    }

    pub fn initial_state(&self) -> Result<FluidState> {
        let grid = self.grid()?;
        match self.data {
            DataKind::IsolatedMassGroup => {
                build_isolated_mass_group(&self.spec, &grid, &self.params)
            }
            DataKind::Zero => Ok(FluidState::zeros(grid)),
        }
    }

    pub fn scheme(&self, initial: &FluidState) -> Result<SchemeConfig> {
        let rho_vac = self
            .rho_vac
            .unwrap_or_else(|| default_vacuum_threshold(initial.max_density()));
        SchemeConfig::new(self.cfl, rho_vac, self.dt_max)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        if self.t_final == 0.0 {
            return vec![0.0];
        }
        (0..=self.n_samples)
            .map(|k| self.t_final * k as f64 / self.n_samples as f64)
            .collect()
    }

    /// Initial mass interval `A0`; degenerate at the origin for zero data.
    pub fn mass_interval(&self) -> (f64, f64) {
        match self.data {
            DataKind::IsolatedMassGroup => (self.spec.a0(), self.spec.b0()),
            DataKind::Zero => (0.0, 0.0),
        }
    }

    pub fn with_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }
}

/// One row of the trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub path_id: usize,
    pub x: f64,
    pub u: f64,
    pub xi: f64,
    pub monotone_q: f64,
    /// `int_0^t rho^gamma` along the path, the exact decrease of `monotone_q`.
    pub pressure_integral: f64,
}

/// Global mass and energy bookkeeping at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerSample {
    pub t: f64,
    pub total_mass: f64,
    pub clipped_mass: f64,
    pub boundary_outflow: f64,
    pub total_energy: f64,
    pub integrated_dissipation: f64,
}

impl LedgerSample {
    /// Mass change not explained by clipping or boundary fluxes.
    pub fn mass_imbalance(&self, initial_mass: f64) -> f64 {
        self.total_mass - initial_mass - self.clipped_mass + self.boundary_outflow
    }
}

/// Quantities of the initial state that feed the blow-up bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSummary {
    pub density: DensityBound,
    pub area_a0: f64,
    /// `m(0)` on the mass interval.
    pub m0: f64,
    pub i0: f64,
    pub endpoint_velocity: f64,
    pub m_const: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: Grid,
    pub scheme: SchemeConfig,
    pub initial: InitialSummary,
    pub series: Vec<DiagnosticsRecord>,
    pub ledger: Vec<LedgerSample>,
    pub paths: Vec<PathSample>,
    pub path_labels: Vec<lagrangian::PathLabel>,
    pub path_origins: Vec<f64>,
    pub snapshots: Vec<FluidState>,
    pub final_state: FluidState,
    pub steps: usize,
    pub max_dt: f64,
    pub min_density: f64,
}

impl RunOutput {
    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// Samples of a single path in time order.
    pub fn path(&self, id: usize) -> impl Iterator<Item = &PathSample> {
        self.paths.iter().filter(move |p| p.path_id == id)
    }

    pub fn n_paths(&self) -> usize {
        self.path_labels.len()
    }
}

struct Recorder {
    params: Parameters,
    initial_energy: f64,
    rho_bound: f64,
    snapshot_stride: usize,
    last_sample: usize,
    paths: Vec<ParticlePath>,
    pressure_integrals: Vec<f64>,
    clipped: f64,
    outflow: f64,
    dissipation_integral: f64,
    last_dissipation: f64,
    steps: usize,
    max_dt: f64,
    min_density: f64,
    sample_index: usize,
    series: Vec<DiagnosticsRecord>,
    ledger: Vec<LedgerSample>,
    rows: Vec<PathSample>,
    snapshots: Vec<FluidState>,
}

impl Recorder {
    fn path_pressures(&self, state: &FluidState) -> Result<Vec<f64>> {
        self.paths
            .iter()
            .map(|p| {
                Ok(pow_real(
                    lagrangian::density_at(state, p.position)?,
                    self.params.gamma(),
                ))
            })
            .collect()
    }
}

impl StepObserver for Recorder {
    fn on_step(
        &mut self,
        previous: &FluidState,
        stage: &FluidState,
        next: &FluidState,
        report: &StepReport,
    ) -> Result<()> {
        let dt = next.t - previous.t;
        let before = self.path_pressures(previous)?;
        advance_particles(&mut self.paths, previous, stage, dt)?;
        let after = self.path_pressures(next)?;
        for (acc, (b, a)) in self
            .pressure_integrals
            .iter_mut()
            .zip(before.iter().zip(&after))
        {
            *acc += 0.5 * dt * (b + a);
        }
        let d_next = global_dissipation(next, &self.params);
        self.dissipation_integral += 0.5 * dt * (self.last_dissipation + d_next);
        self.last_dissipation = d_next;
        self.clipped += report.mass_defect;
        self.outflow += report.boundary_outflow;
        self.steps += 1;
        self.max_dt = self.max_dt.max(report.dt);
        self.min_density = next.rho.iter().copied().fold(self.min_density, f64::min);
        Ok(())
    }

    fn on_sample(&mut self, state: &FluidState) -> Result<()> {
        let (lo, hi) = (self.paths[0].position, self.paths[1].position);
        let energy = state.total_energy(&self.params);
        let mut record = compute_diagnostics(state, lo, hi, state.t, &self.params)?;
        record.rho_bound = self.rho_bound;
        record.energy_residual = energy - self.initial_energy + self.dissipation_integral;
        self.series.push(record);
        self.ledger.push(LedgerSample {
            t: state.t,
            total_mass: state.total_mass(),
            clipped_mass: self.clipped,
            boundary_outflow: self.outflow,
            total_energy: energy,
            integrated_dissipation: self.dissipation_integral,
        });
        let xi = xi_field(state);
        for (id, path) in self.paths.iter_mut().enumerate() {
            path.record(state.t);
            let x = path.position;
            self.rows.push(PathSample {
                t: state.t,
                path_id: id,
                x,
                u: lagrangian::velocity_at(state, x)?,
                xi: lagrangian::xi_at(&state.grid, &xi, x)?,
                monotone_q: lagrangian::monotone_quantity(state, &xi, x, &self.params)?,
                pressure_integral: self.pressure_integrals[id],
            });
        }
        let on_stride =
            self.snapshot_stride > 0 && self.sample_index.is_multiple_of(self.snapshot_stride);
        if on_stride || (self.snapshot_stride > 0 && self.sample_index == self.last_sample) {
            self.snapshots.push(state.clone());
        }
        self.sample_index += 1;
        Ok(())
    }
}

/// Initial-state quantities entering the envelope constants.
pub fn initial_summary(config: &RunConfig, initial: &FluidState) -> Result<InitialSummary> {
    let params = &config.params;
    let density = lagrangian::density_bound(initial, params);
    let (a0, b0) = config.mass_interval();
    let record = compute_diagnostics(initial, a0, b0, 0.0, params)?;
    let area_a0 = b0 - a0;
    Ok(InitialSummary {
        density,
        area_a0,
        m0: record.m,
        i0: record.i,
        endpoint_velocity: match config.data {
            DataKind::IsolatedMassGroup => config.spec.endpoint_velocity(),
            DataKind::Zero => 0.0,
        },
        m_const: functionals::dissipation_bound(area_a0, density.rho_sup, params),
    })
}

/// Runs the configured simulation to `t_final`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let params = config.params;
    let initial = config.initial_state()?;
    let scheme = config.scheme(&initial)?;
    let summary = initial_summary(config, &initial)?;
    let stepper = Stepper::new(params, scheme);

    let mut recorder = Recorder {
        params,
        initial_energy: initial.total_energy(&params),
        rho_bound: summary.density.rho_sup,
        snapshot_stride: config.snapshot_stride,
        last_sample: config.sample_times().len() - 1,
        paths: {
            let (a0, b0) = config.mass_interval();
            seed_paths(a0, b0, config.interior_tracers)
        },
        pressure_integrals: vec![0.0; config.interior_tracers + 2],
        clipped: 0.0,
        outflow: 0.0,
        dissipation_integral: 0.0,
        last_dissipation: global_dissipation(&initial, &params),
        steps: 0,
        max_dt: 0.0,
        min_density: initial.rho.iter().copied().fold(f64::INFINITY, f64::min),
        sample_index: 0,
        series: Vec::new(),
        ledger: Vec::new(),
        rows: Vec::new(),
        snapshots: Vec::new(),
    };
    let path_labels = recorder.paths.iter().map(|p| p.label).collect();
    let path_origins = recorder.paths.iter().map(|p| p.x0).collect();

    let samples = config.sample_times();
    let final_state = match config.fault {
        Some(fault) if fault.time >= 0.0 && fault.time < config.t_final => {
            let before: Vec<f64> = samples
                .iter()
                .copied()
                .filter(|&s| s < fault.time)
                .collect();
            let after: Vec<f64> = samples
                .iter()
                .copied()
                .filter(|&s| s >= fault.time)
                .collect();
            let mut state = stepper.advance_to(initial, fault.time, &before, &mut recorder)?;
            let centre = state.len() / 2;
            state.rho[centre] += fault.amount / state.grid.dx();
            state.refresh_vacuum(scheme.rho_vac);
            stepper.advance_to(state, config.t_final, &after, &mut recorder)?
        }
        _ => stepper.advance_to(initial, config.t_final, &samples, &mut recorder)?,
    };

    Ok(RunOutput {
        grid: final_state.grid,
        scheme,
        initial: summary,
        series: recorder.series,
        ledger: recorder.ledger,
        paths: recorder.rows,
        path_labels,
        path_origins,
        snapshots: recorder.snapshots,
        final_state,
        steps: recorder.steps,
        max_dt: recorder.max_dt,
        min_density: recorder.min_density,
    })
}

/// Builds the initial state and derives the envelope-crossing bound without
/// time stepping.
pub fn predict(config: &RunConfig) -> Result<functionals::BlowUpReport> {
    config.validate()?;
    let initial = config.initial_state()?;
    let summary = initial_summary(config, &initial)?;
    functionals::predict_blowup_bound(
        summary.i0,
        summary.m_const,
        summary.area_a0,
        summary.m0,
        &config.params,
        config.t_max,
    )
}
