//! Integrals over the moving interval `A(t)` and the blow-up functional
//!
//! ```text
//! I(t) = M(t) - 2(t+1) F(t) + 2(t+1)^2 eps(t)
//!      = int (x - (t+1) u)^2 rho + 2 (t+1)^2 / (gamma-1) int p
//! ```
//!
//! together with its upper (Gronwall) and lower (Jensen) envelopes, whose
//! crossing time bounds the lifespan of a regular solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pow_real, FluidState, Parameters};

/// Midpoint rule over `[lo, hi]`: every cell is weighted by the length of its
/// overlap with the interval, so the two partial end cells get fractional
/// weights.
pub fn quadrature_between(
    state: &FluidState,
    lo: f64,
    hi: f64,
    integrand: impl Fn(usize) -> f64,
) -> Result<f64> {
    let grid = &state.grid;
    for x in [lo, hi] {
        if !(x >= grid.x_min() && x <= grid.x_max()) {
            return Err(Error::OutOfDomain {
                x,
                x_min: grid.x_min(),
                x_max: grid.x_max(),
            });
        }
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let dx = grid.dx();
    let n = grid.n_cells();
    let first = (((lo - grid.x_min()) / dx).floor() as usize).min(n - 1);
    let last = (((hi - grid.x_min()) / dx).ceil() as usize).clamp(first + 1, n);
    let mut sum = 0.0;
    for i in first..last {
        let left = grid.face(i).max(lo);
        let right = grid.face(i + 1).min(hi);
        if right > left {
            sum += (right - left) * integrand(i);
        }
    }
    Ok(sum)
}

pub fn interval_quadrature(
    state: &FluidState,
    interval: &crate::lagrangian::FlowInterval,
    integrand: impl Fn(usize) -> f64,
) -> Result<f64> {
    let (lo, hi) = interval.bounds();
    quadrature_between(state, lo, hi, integrand)
}

/// Cell-centered `u_x`.
///
/// Central differences between non-vacuum neighbours, one-sided toward the
/// fluid at vacuum interfaces, and zero in vacuum cells. When `interval` is
/// given, the cells holding its endpoints difference toward the interior.
pub fn velocity_gradient(state: &FluidState, interval: Option<(f64, f64)>) -> Vec<f64> {
    let n = state.len();
    let dx = state.grid.dx();
    let fluid = |j: usize| !state.vacuum[j];
    let mut ux = vec![0.0; n];
    for (i, g) in ux.iter_mut().enumerate() {
        if state.vacuum[i] {
            continue;
        }
        let left = i > 0 && fluid(i - 1);
        let right = i + 1 < n && fluid(i + 1);
        *g = match (left, right) {
            (true, true) => (state.u[i + 1] - state.u[i - 1]) / (2.0 * dx),
            (true, false) => (state.u[i] - state.u[i - 1]) / dx,
            (false, true) => (state.u[i + 1] - state.u[i]) / dx,
            (false, false) => 0.0,
        };
    }
    if let Some((lo, hi)) = interval {
        let cell_of = |x: f64| {
            let s = (x - state.grid.x_min()) / dx;
            (s.floor().max(0.0) as usize).min(n - 1)
        };
        let ia = cell_of(lo);
        let ib = cell_of(hi);
        if ia + 1 < n && !state.vacuum[ia] && fluid(ia + 1) && ib > ia {
            ux[ia] = (state.u[ia + 1] - state.u[ia]) / dx;
        }
        if ib > 0 && !state.vacuum[ib] && fluid(ib - 1) && ib > ia {
            ux[ib] = (state.u[ib] - state.u[ib - 1]) / dx;
        }
    }
    ux
}

/// `int rho^delta u_x^2` over the whole grid.
pub fn global_dissipation(state: &FluidState, params: &Parameters) -> f64 {
    let ux = velocity_gradient(state, None);
    let d = params.delta();
    state
        .rho
        .iter()
        .zip(&ux)
        .map(|(&r, &g)| pow_real(r, d) * g * g)
        .sum::<f64>()
        * state.grid.dx()
}

/// One time sample of the interval functionals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub m: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub eps: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "I_alt")]
    pub i_alt: f64,
    #[serde(rename = "dIdt_rhs")]
    pub didt_rhs: f64,
    pub sup_rho: f64,
    /// Filled in by the run driver.
    pub rho_bound: f64,
    pub area_a: f64,
    pub dissipation: f64,
    /// Filled in by the run driver; global energy change plus integrated
    /// dissipation since `t = 0`.
    pub energy_residual: f64,
    /// `int_{A(t)} p`; not a series column.
    #[serde(default)]
    pub pressure: f64,
}

/// Column order of the series CSV.
pub const SERIES_COLUMNS: [&str; 13] = [
    "t",
    "m",
    "M2",
    "F",
    "eps",
    "I",
    "I_alt",
    "dIdt_rhs",
    "sup_rho",
    "rho_bound",
    "area_A",
    "dissipation",
    "energy_residual",
];

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.m,
            self.m2,
            self.f,
            self.eps,
            self.i,
            self.i_alt,
            self.didt_rhs,
            self.sup_rho,
            self.rho_bound,
            self.area_a,
            self.dissipation,
            self.energy_residual,
        ]
    }
}

struct IntervalIntegrals {
    pressure: f64,
    viscous_stress: f64,
    dissipation: f64,
}

fn pressure_and_viscous(
    state: &FluidState,
    lo: f64,
    hi: f64,
    params: &Parameters,
) -> Result<IntervalIntegrals> {
    let ux = velocity_gradient(state, Some((lo, hi)));
    let g = params.gamma();
    let d = params.delta();
    let pressure = quadrature_between(state, lo, hi, |i| pow_real(state.rho[i], g))?;
    let viscous_stress = quadrature_between(state, lo, hi, |i| pow_real(state.rho[i], d) * ux[i])?;
    let dissipation =
        quadrature_between(state, lo, hi, |i| pow_real(state.rho[i], d) * ux[i] * ux[i])?;
    Ok(IntervalIntegrals {
        pressure,
        viscous_stress,
        dissipation,
    })
}

fn rhs_from(t: f64, integrals: &IntervalIntegrals, params: &Parameters) -> f64 {
    let g = params.gamma();
    let s = t + 1.0;
    2.0 * (3.0 - g) / (g - 1.0) * s * integrals.pressure + 2.0 * s * integrals.viscous_stress
        - 2.0 * s * s * integrals.dissipation
}

/// Time derivative of `I` predicted from the equations of motion:
/// `2(3-gamma)/(gamma-1) (t+1) int p + 2 (t+1) int rho^delta u_x - 2 (t+1)^2 int rho^delta u_x^2`.
pub fn didt_rhs(state: &FluidState, lo: f64, hi: f64, t: f64, params: &Parameters) -> Result<f64> {
    let integrals = pressure_and_viscous(state, lo, hi, params)?;
    Ok(rhs_from(t, &integrals, params))
}

/// All interval functionals of `state` on `[lo, hi]` at time `t`.
pub fn compute_diagnostics(
    state: &FluidState,
    lo: f64,
    hi: f64,
    t: f64,
    params: &Parameters,
) -> Result<DiagnosticsRecord> {
    let g = params.gamma();
    let rho = &state.rho;
    let u = &state.u;
    let x = |i: usize| state.grid.center(i);
    let s = t + 1.0;

    let m = quadrature_between(state, lo, hi, |i| rho[i])?;
    let m2 = quadrature_between(state, lo, hi, |i| rho[i] * x(i) * x(i))?;
    let f = quadrature_between(state, lo, hi, |i| rho[i] * u[i] * x(i))?;
    let kinetic = quadrature_between(state, lo, hi, |i| 0.5 * rho[i] * u[i] * u[i])?;
    let integrals = pressure_and_viscous(state, lo, hi, params)?;
    let eps = kinetic + integrals.pressure / (g - 1.0);
    let i_primary = m2 - 2.0 * s * f + 2.0 * s * s * eps;
    let spread = quadrature_between(state, lo, hi, |i| {
        let r = x(i) - s * u[i];
        r * r * rho[i]
    })?;
    let i_alt = spread + 2.0 * s * s / (g - 1.0) * integrals.pressure;

    Ok(DiagnosticsRecord {
        t,
        m,
        m2,
        f,
        eps,
        i: i_primary,
        i_alt,
        didt_rhs: rhs_from(t, &integrals, params),
        sup_rho: state.max_density(),
        rho_bound: 0.0,
        area_a: hi - lo,
        dissipation: integrals.dissipation,
        energy_residual: 0.0,
        pressure: integrals.pressure,
    })
}

/// `int_{A(t)} p` alone, used by the Cauchy-inequality check.
pub fn interval_pressure(state: &FluidState, lo: f64, hi: f64, params: &Parameters) -> Result<f64> {
    quadrature_between(state, lo, hi, |i| pow_real(state.rho[i], params.gamma()))
}

/// `2 |A0| rho_sup^delta`, which dominates `2 int_{A(t)} rho^delta`.
pub fn dissipation_bound(area_a0: f64, rho_sup_bound: f64, params: &Parameters) -> f64 {
    2.0 * area_a0 * pow_real(rho_sup_bound, params.delta())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaCase {
    /// `gamma >= 3`: the pressure term has a non-positive coefficient and
    /// `I` grows at most linearly.
    #[serde(rename = "gamma>=3")]
    AtLeastThree,
    /// `1 < gamma < 3`: `I (1+t)^-a` grows at most like `int (1+s)^-a`, `a = 3 - gamma`.
    #[serde(rename = "1<gamma<3")]
    BelowThree,
}

impl GammaCase {
    pub fn of(params: &Parameters) -> Self {
        if params.gamma() >= 3.0 {
            Self::AtLeastThree
        } else {
            Self::BelowThree
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::AtLeastThree => "gamma>=3",
            Self::BelowThree => "1<gamma<3",
        }
    }
}

/// `int_0^t (1+s)^-a ds`.
fn weight_integral(t: f64, a: f64) -> f64 {
    if (a - 1.0).abs() < 1e-12 {
        t.ln_1p()
    } else {
        ((1.0 + t).powf(1.0 - a) - 1.0) / (1.0 - a)
    }
}

/// Gronwall upper bound on `I(t)`.
pub fn upper_envelope(t: f64, i0: f64, m_const: f64, params: &Parameters) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(match GammaCase::of(params) {
        GammaCase::AtLeastThree => i0 + m_const * t,
        GammaCase::BelowThree => {
            let a = 3.0 - params.gamma();
            (1.0 + t).powf(a) * (i0 + m_const * weight_integral(t, a))
        }
    })
}

/// `2 |A0|^(1-gamma) m0^gamma / (gamma - 1)`.
pub fn lower_coefficient(area_a0: f64, m0: f64, params: &Parameters) -> f64 {
    let g = params.gamma();
    2.0 / (g - 1.0) * area_a0.powf(1.0 - g) * m0.powf(g)
}

/// Jensen lower bound `2 (1+t)^2 / (gamma-1) |A0|^(1-gamma) m0^gamma`.
pub fn lower_envelope(t: f64, area_a0: f64, m0: f64, params: &Parameters) -> f64 {
    (1.0 + t) * (1.0 + t) * lower_coefficient(area_a0, m0, params)
}

/// Smallest `t` in `[0, t_max]` with `lower(t) >= upper(t)`.
///
/// Returns `0` when the lower envelope already dominates at `t = 0`.
/// The bracket is found by a geometric scan and refined by bisection to a
/// relative width of `1e-10`.
pub fn find_crossing(
    lower: impl Fn(f64) -> f64,
    upper: impl Fn(f64) -> f64,
    t_max: f64,
) -> Result<f64> {
    let gap = |t: f64| lower(t) - upper(t);
    if gap(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = (1e-6 * t_max).min(1e-3);
    loop {
        if hi >= t_max {
            hi = t_max;
            if gap(hi) < 0.0 {
                return Err(Error::NoCrossing { t_max });
            }
            break;
        }
        if gap(hi) >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 1.05;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub gamma_case: GammaCase,
    pub gamma: f64,
    pub delta: f64,
    /// `3 - gamma` in the sub-cubic case.
    pub a: Option<f64>,
    #[serde(rename = "M_const")]
    pub m_const: f64,
    #[serde(rename = "I0")]
    pub i0: f64,
    pub area_a0: f64,
    pub m0: f64,
    pub lower_coeff: f64,
    pub t_max: f64,
    /// Upper bound on the maximal existence time.
    pub t_cross: f64,
}

pub fn predict_blowup_bound(
    i0: f64,
    m_const: f64,
    area_a0: f64,
    m0: f64,
    params: &Parameters,
    t_max: f64,
) -> Result<BlowUpReport> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !positive(i0)
        || !positive(area_a0)
        || !positive(m0)
        || !(m_const >= 0.0 && m_const.is_finite())
    {
        return Err(Error::InvalidBlowUpInput(format!(
            "I0 = {i0}, M = {m_const}, |A0| = {area_a0}, m0 = {m0}"
        )));
    }
    if !positive(t_max) {
        return Err(Error::InvalidBlowUpInput(format!("t_max = {t_max}")));
    }
    let t_cross = find_crossing(
        |t| lower_envelope(t, area_a0, m0, params),
        |t| upper_envelope(t, i0, m_const, params).expect("t >= 0"),
        t_max,
    )?;
    let gamma_case = GammaCase::of(params);
    Ok(BlowUpReport {
        gamma_case,
        gamma: params.gamma(),
        delta: params.delta(),
        a: match gamma_case {
            GammaCase::BelowThree => Some(3.0 - params.gamma()),
            GammaCase::AtLeastThree => None,
        },
        m_const,
        i0,
        area_a0,
        m0,
        lower_coeff: lower_coefficient(area_a0, m0, params),
        t_max,
        t_cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use approx::assert_relative_eq;

    fn params(g: f64, d: f64) -> Parameters {
        Parameters::new(g, d).unwrap()
    }

    /// `rho = 1`, `u = u(x)` on `[-1, 1]`, vacuum elsewhere on `[-3, 3]`.
    fn slab(n: usize, u: impl Fn(f64) -> f64) -> FluidState {
        let grid = Grid::new(-3.0, 3.0, n).unwrap();
        let xs = grid.centers();
        let rho = xs
            .iter()
            .map(|&x| if x.abs() < 1.0 { 1.0 } else { 0.0 })
            .collect();
        let vel = xs
            .iter()
            .map(|&x| if x.abs() < 1.0 { u(x) } else { 0.0 })
            .collect();
        FluidState::new(0.0, grid, rho, vel, 1e-10).unwrap()
    }

    #[test]
    fn quadrature_examples() {
        let s = slab(600, |_| 0.0);
        assert_relative_eq!(
            quadrature_between(&s, -1.0, 1.0, |_| 1.0).unwrap(),
            2.0,
            max_relative = 1e-13
        );
        // fractional end cells
        assert_relative_eq!(
            quadrature_between(&s, -0.996, 1.003, |_| 1.0).unwrap(),
            1.999,
            max_relative = 1e-12
        );
        assert_eq!(quadrature_between(&s, -1.0, 1.0, |_| 0.0).unwrap(), 0.0);
        let x2 = quadrature_between(&s, -1.0, 1.0, |i| s.grid.center(i).powi(2)).unwrap();
        let dx = s.grid.dx();
        assert!((x2 - 2.0 / 3.0).abs() <= dx * dx);
        assert!(quadrature_between(&s, -4.0, 1.0, |_| 1.0).is_err());
    }

    #[test]
    fn diagnostics_of_static_slab() {
        let s = slab(600, |_| 0.0);
        let p = params(2.0, 2.0);
        let d = compute_diagnostics(&s, -1.0, 1.0, 0.0, &p).unwrap();
        let tol = s.grid.dx().powi(2);
        assert_relative_eq!(d.m, 2.0, max_relative = 1e-13);
        assert!((d.m2 - 2.0 / 3.0).abs() <= tol);
        assert_eq!(d.f, 0.0);
        assert_relative_eq!(d.eps, 2.0, max_relative = 1e-13);
        assert!((d.i - 14.0 / 3.0).abs() <= tol);
        assert!((d.i_alt - 14.0 / 3.0).abs() <= tol);
        assert!((d.i - d.i_alt).abs() <= 1e-13);
        assert_relative_eq!(d.didt_rhs, 4.0, max_relative = 1e-13);
        // Jensen: 4 <= 14/3
        assert!(lower_envelope(0.0, 2.0, d.m, &p) <= d.i);
    }

    #[test]
    fn diagnostics_of_linear_velocity() {
        let s = slab(600, |x| x);
        let p = params(2.0, 2.0);
        let d = compute_diagnostics(&s, -1.0, 1.0, 0.0, &p).unwrap();
        let tol = s.grid.dx().powi(2);
        assert!((d.f - 2.0 / 3.0).abs() <= tol);
        assert!((d.eps - (1.0 / 3.0 + 2.0)).abs() <= tol);
        assert_relative_eq!(d.dissipation, 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.didt_rhs, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn rhs_without_motion() {
        let s = slab(600, |_| 0.0);
        assert_eq!(
            didt_rhs(&s, -1.0, 1.0, 0.0, &params(3.0, 2.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn dissipation_bound_examples() {
        assert_eq!(dissipation_bound(2.0, 1.0, &params(2.0, 2.0)), 4.0);
        assert_eq!(dissipation_bound(2.0, 0.0, &params(2.0, 2.0)), 0.0);
        assert_eq!(dissipation_bound(1.0, 2.0, &params(2.0, 3.0)), 16.0);
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(
            upper_envelope(3.0, 1.0, 2.0, &params(3.0, 2.0)).unwrap(),
            7.0
        );
        assert_relative_eq!(
            upper_envelope(3.0, 1.0, 0.0, &params(2.0, 2.0)).unwrap(),
            4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            upper_envelope(3.0, 0.0, 1.0, &params(1.5, 2.0)).unwrap(),
            8.0,
            max_relative = 1e-14
        );
        assert!(matches!(
            upper_envelope(-1.0, 1.0, 1.0, &params(2.0, 2.0)),
            Err(Error::NegativeTime(_))
        ));

        assert_eq!(lower_envelope(0.0, 2.0, 2.0, &params(2.0, 2.0)), 4.0);
        assert_eq!(lower_envelope(1.0, 1.0, 1.0, &params(3.0, 2.0)), 4.0);
    }

    #[test]
    fn upper_envelope_solves_the_differential_inequality_with_equality() {
        // d/dt U = a/(1+t) U + M for 1 < gamma < 3; d/dt U = M for gamma >= 3
        for &g in &[1.2, 1.5, 2.0, 2.5, 3.0, 4.0] {
            let p = params(g, 2.0);
            let (i0, m) = (1.3, 0.7);
            for &t in &[0.0, 0.5, 2.0, 10.0] {
                let h = 1e-5 * (1.0 + t);
                let du = (upper_envelope(t + h, i0, m, &p).unwrap()
                    - upper_envelope((t - h).max(0.0), i0, m, &p).unwrap())
                    / (t + h - (t - h).max(0.0));
                let u = upper_envelope(t, i0, m, &p).unwrap();
                let expected = if g >= 3.0 {
                    m
                } else {
                    (3.0 - g) / (1.0 + t) * u + m
                };
                assert!(
                    (du - expected).abs() < 1e-5 * expected.abs().max(1.0),
                    "g={g} t={t}"
                );
            }
        }
    }

    #[test]
    fn crossing_examples() {
        let t = find_crossing(|t| 2.0 * (1.0 + t).powi(2), |_| 8.0, 10.0).unwrap();
        assert!((t - 1.0).abs() <= 1e-9);
        let t = find_crossing(|t| 2.0 * (1.0 + t).powi(2), |_| 2.0, 10.0).unwrap();
        assert_eq!(t, 0.0);
        assert!(matches!(
            find_crossing(|t| 2.0 * (1.0 + t).powi(2), |_| 1e6, 10.0),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn report_branches() {
        // lower (1+t)^2 against linear upper 2 + 2t: crossing at t = 1
        let r = predict_blowup_bound(2.0, 2.0, 1.0, 1.0, &params(3.0, 2.0), 1e3).unwrap();
        assert_eq!(r.gamma_case, GammaCase::AtLeastThree);
        assert_eq!(r.a, None);
        assert_eq!(r.lower_coeff, 1.0);
        assert!((r.t_cross - 1.0).abs() <= 1e-9);

        let r = predict_blowup_bound(1.0, 14.0, 2.0, 0.75, &params(2.0, 2.0), 1e6).unwrap();
        assert_eq!(r.gamma_case, GammaCase::BelowThree);
        assert_eq!(r.a, Some(1.0));
        assert!(r.t_cross > 0.0 && r.t_cross.is_finite());
        assert!(predict_blowup_bound(0.0, 1.0, 1.0, 1.0, &params(2.0, 2.0), 10.0).is_err());
    }
}
