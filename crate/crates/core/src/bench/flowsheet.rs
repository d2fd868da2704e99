//! Reactor / separator / recycle flowsheet.
//!
//! Fresh A and B are compressed and heated, mixed with the recycle and fed
//! to a reactor running `A + B -> C`. The effluent is cooled and flashed:
//! the liquid leaves as product, a fraction `r` of the vapor is recompressed
//! and recycled, the rest is purged. All flows are mass flows and the
//! compositions are mass fractions, so `F_A + F_B = F_p + F_o` at steady
//! state.

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Gas constant, kJ/(kmol K).
pub const GAS_CONSTANT: f64 = 8.314;

/// Species A, B, C.
pub const SPECIES: usize = 3;

/// Operating conditions: reactor temperature (K) and pressure (kPa),
/// separator temperature (K) and pressure (kPa), recycle fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessInputs {
    pub reactor_temperature: f64,
    pub reactor_pressure: f64,
    pub separator_temperature: f64,
    pub separator_pressure: f64,
    pub recycle_fraction: f64,
}

impl ProcessInputs {
    pub fn domain() -> BoxDomain {
        BoxDomain::new(
            vec![673.0, 250.0, 288.0, 140.0, 0.5],
            vec![973.0, 450.0, 338.0, 170.0, 0.9],
        )
        .expect("static bounds are valid")
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != 5 {
            return Err(Error::shape(format!(
                "process inputs have 5 components, got {}",
                x.len()
            )));
        }
        Ok(Self {
            reactor_temperature: x[0],
            reactor_pressure: x[1],
            separator_temperature: x[2],
            separator_pressure: x[3],
            recycle_fraction: x[4],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.reactor_temperature,
            self.reactor_pressure,
            self.separator_temperature,
            self.separator_pressure,
            self.recycle_fraction,
        ]
    }
}

/// The 16 intermediate outputs of the flowsheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamVector {
    pub product_flow: f64,
    pub product_composition: [f64; SPECIES],
    pub purge_flow: f64,
    pub purge_composition: [f64; SPECIES],
    /// Feed A heater, feed B heater, recycle heater, reactor cooling,
    /// effluent cooler.
    pub heat_duties: [f64; 5],
    /// Feed A compressor, feed B compressor, recycle compressor.
    pub power_duties: [f64; 3],
}

impl StreamVector {
    pub const LEN: usize = 16;

    pub const NAMES: [&'static str; 16] = [
        "F_p", "psi_A", "psi_B", "psi_C", "F_o", "xi_A", "xi_B", "xi_C", "Q_1", "Q_2", "Q_3",
        "Q_4", "Q_5", "W_1", "W_2", "W_3",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.push(self.product_flow);
        v.extend(self.product_composition);
        v.push(self.purge_flow);
        v.extend(self.purge_composition);
        v.extend(self.heat_duties);
        v.extend(self.power_duties);
        v
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        if y.len() != Self::LEN {
            return Err(Error::shape(format!(
                "stream vector has {} components, got {}",
                Self::LEN,
                y.len()
            )));
        }
        Ok(Self {
            product_flow: y[0],
            product_composition: [y[1], y[2], y[3]],
            purge_flow: y[4],
            purge_composition: [y[5], y[6], y[7]],
            heat_duties: [y[8], y[9], y[10], y[11], y[12]],
            power_duties: [y[13], y[14], y[15]],
        })
    }

    /// Product flow of C, `ψ_C F_p`.
    pub fn product_c(&self) -> f64 {
        self.product_composition[2] * self.product_flow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kinetics {
    /// Rate constant times residence time at `t_ref`, `p_ref`.
    pub damkohler_ref: f64,
    pub activation_temperature: f64,
    /// Equilibrium constant at `t_ref`, `p_ref`.
    pub equilibrium_ref: f64,
    /// `-ΔH/R` of the exothermic reaction, K.
    pub reaction_temperature: f64,
    pub t_ref: f64,
    pub p_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separator {
    /// Vapor/liquid split ratio of each species at `t_ref`, `p_ref`.
    pub volatility: [f64; SPECIES],
    /// Per-kelvin growth of volatility.
    pub temperature_coefficient: f64,
    pub t_ref: f64,
    pub p_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

/// Physical coefficients of the flowsheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowsheetParams {
    /// Fresh feed mass flows of A and B, kg/s.
    pub feed: [f64; 2],
    pub feed_temperature: f64,
    pub feed_pressure: f64,
    /// kg/kmol; `M_C = M_A + M_B`.
    pub molar_mass: [f64; SPECIES],
    /// kJ/(kg K).
    pub heat_capacity: [f64; SPECIES],
    /// Heat released per kg of C formed, kJ/kg.
    pub reaction_heat: f64,
    pub kinetics: Kinetics,
    pub separator: Separator,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl FlowsheetParams {
    pub fn validate(&self) -> Result<()> {
        let m = self.molar_mass;
        if (m[0] + m[1] - m[2]).abs() > 1e-9 * m[2] {
            return Err(Error::config("molar masses must satisfy M_C = M_A + M_B"));
        }
        if self.feed.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::config("feed flows must be positive"));
        }
        let s = &self.solver;
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(Error::config("solver damping must lie in (0, 1]"));
        }
        if !(s.tolerance > 0.0) || s.max_iterations == 0 {
            return Err(Error::config("solver tolerance and iteration limit must be positive"));
        }
        if self.separator.volatility.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::config("volatilities must be positive"));
        }
        Ok(())
    }

    /// Per-pass approach to equilibrium times the equilibrium fraction.
    pub fn conversion(&self, temperature: f64, pressure: f64) -> f64 {
        let k = &self.kinetics;
        let inv = 1.0 / temperature - 1.0 / k.t_ref;
        let da = k.damkohler_ref * (-k.activation_temperature * inv).exp() * pressure / k.p_ref;
        let keq = k.equilibrium_ref * (k.reaction_temperature * inv).exp() * pressure / k.p_ref;
        (keq / (1.0 + keq)) * (1.0 - (-da).exp())
    }

    /// Fraction of each species leaving with the liquid.
    pub fn liquid_recovery(&self, temperature: f64, pressure: f64) -> [f64; SPECIES] {
        let s = &self.separator;
        let growth = (s.temperature_coefficient * (temperature - s.t_ref)).exp() * s.p_ref / pressure;
        s.volatility.map(|v| 1.0 / (1.0 + v * growth))
    }

    /// Reactor outlet for a given inlet (mass flows).
    pub fn react(&self, inlet: [f64; SPECIES], conversion: f64) -> [f64; SPECIES] {
        let m = self.molar_mass;
        let (na, nb) = (inlet[0] / m[0], inlet[1] / m[1]);
        let extent = if na + nb > 0.0 {
            conversion * na * nb / (na + nb)
        } else {
            0.0
        };
        [
            inlet[0] - extent * m[0],
            inlet[1] - extent * m[1],
            inlet[2] + extent * m[2],
        ]
    }
}

fn norm(v: &[f64; SPECIES]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Converged recycle state and the streams around it.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowsheetState {
    pub recycle: [f64; SPECIES],
    pub reactor_outlet: [f64; SPECIES],
    pub product: [f64; SPECIES],
    pub purge: [f64; SPECIES],
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Solve the recycle loop by damped fixed-point iteration.
pub fn solve_recycle(x: &ProcessInputs, params: &FlowsheetParams) -> Result<FlowsheetState> {
    params.validate()?;
    let conversion = params.conversion(x.reactor_temperature, x.reactor_pressure);
    let recovery = params.liquid_recovery(x.separator_temperature, x.separator_pressure);
    let r = x.recycle_fraction;
    let fresh = [params.feed[0], params.feed[1], 0.0];
    let loop_map = |recycle: &[f64; SPECIES]| {
        let inlet = [0, 1, 2].map(|i| fresh[i] + recycle[i]);
        let out = params.react(inlet, conversion);
        [0, 1, 2].map(|i| r * (1.0 - recovery[i]) * out[i])
    };
    let s = &params.solver;
    let scale = norm(&fresh).max(1.0);
    let mut recycle = [0.0; SPECIES];
    let mut history = Vec::new();
    for it in 1..=s.max_iterations {
        let mapped = loop_map(&recycle);
        let next = [0, 1, 2].map(|i| (1.0 - s.damping) * recycle[i] + s.damping * mapped[i]);
        let step = norm(&[0, 1, 2].map(|i| next[i] - recycle[i]));
        recycle = next;
        history.push(step);
        if !step.is_finite() {
            break;
        }
        if step <= s.tolerance * scale {
            let inlet = [0, 1, 2].map(|i| fresh[i] + recycle[i]);
            let out = params.react(inlet, conversion);
            let product = [0, 1, 2].map(|i| recovery[i] * out[i]);
            let vapor = [0, 1, 2].map(|i| (1.0 - recovery[i]) * out[i]);
            // close the balance on the converged recycle: purge = vapor - recycle
            let purge = [0, 1, 2].map(|i| vapor[i] - recycle[i]);
            return Ok(FlowsheetState {
                recycle,
                reactor_outlet: out,
                product,
                purge,
                iterations: it,
                residual_history: history,
            });
        }
    }
    Err(Error::Simulation {
        iterations: history.len(),
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        residual_history: history,
    })
}

fn composition(stream: &[f64; SPECIES]) -> (f64, [f64; SPECIES]) {
    let total: f64 = stream.iter().sum();
    if total > 0.0 {
        (total, stream.map(|v| v / total))
    } else {
        (0.0, [0.0; SPECIES])
    }
}

/// Steady-state stream vector at operating point `x`.
pub fn simulate_flowsheet(x: &ProcessInputs, params: &FlowsheetParams) -> Result<StreamVector> {
    let state = solve_recycle(x, params)?;
    let (product_flow, product_composition) = composition(&state.product);
    let (purge_flow, purge_composition) = composition(&state.purge);

    let cp = params.heat_capacity;
    let m = params.molar_mass;
    let [fa, fb] = params.feed;
    let t_feed = params.feed_temperature;
    let (tr, ts) = (x.reactor_temperature, x.separator_temperature);
    let sensible = |flows: &[f64; SPECIES], dt: f64| -> f64 {
        flows.iter().zip(&cp).map(|(f, c)| f * c).sum::<f64>() * dt
    };
    let c_formed = state.reactor_outlet[2] - state.recycle[2];
    let heat_duties = [
        cp[0] * fa * (tr - t_feed),
        cp[1] * fb * (tr - t_feed),
        sensible(&state.recycle, tr - ts),
        params.reaction_heat * c_formed,
        sensible(&state.reactor_outlet, tr - ts),
    ];
    // isothermal compression work, R T / M ln(P_out / P_in) per kg
    let compress = |flow: f64, molar_mass: f64, temperature: f64, p_in: f64| {
        flow * GAS_CONSTANT * temperature / molar_mass * (x.reactor_pressure / p_in).ln()
    };
    let recycle_work: f64 = (0..SPECIES)
        .map(|i| compress(state.recycle[i], m[i], ts, x.separator_pressure))
        .sum();
    let power_duties = [
        compress(fa, m[0], t_feed, params.feed_pressure),
        compress(fb, m[1], t_feed, params.feed_pressure),
        recycle_work,
    ];
    Ok(StreamVector {
        product_flow,
        product_composition,
        purge_flow,
        purge_composition,
        heat_duties,
        power_duties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::params::default_flowsheet;

    #[test]
    fn purge_falls_as_recycle_rises() {
        let (params, _) = default_flowsheet();
        let mut x = ProcessInputs::from_slice(&ProcessInputs::domain().midpoint()).unwrap();
        x.recycle_fraction = 0.5;
        let low = simulate_flowsheet(&x, &params).unwrap();
        x.recycle_fraction = 0.9;
        let high = simulate_flowsheet(&x, &params).unwrap();
        assert!(high.purge_flow < low.purge_flow);
    }

    #[test]
    fn overall_mass_balance_at_corners() {
        let (params, _) = default_flowsheet();
        let d = ProcessInputs::domain();
        for corner in [d.lower().to_vec(), d.upper().to_vec(), d.midpoint()] {
            let y = simulate_flowsheet(&ProcessInputs::from_slice(&corner).unwrap(), &params).unwrap();
            let feed = params.feed[0] + params.feed[1];
            assert!(((y.product_flow + y.purge_flow) - feed).abs() <= 1e-8 * feed);
        }
    }

    #[test]
    fn non_convergence_reports_history() {
        let (mut params, _) = default_flowsheet();
        params.solver.max_iterations = 3;
        let x = ProcessInputs::from_slice(&ProcessInputs::domain().midpoint()).unwrap();
        match simulate_flowsheet(&x, &params) {
            Err(Error::Simulation {
                iterations,
                residual_history,
                ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(residual_history.len(), 3);
            }
            other => panic!("expected simulation error, got {other:?}"),
        }
    }
}
