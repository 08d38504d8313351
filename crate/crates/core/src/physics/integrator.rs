use super::DynamicSystem;
use crate::error::{Error, Result};
use crate::series::{ExcitationRecord, SimulationOutput};

const DIVERGENCE_GUARD: f64 = 1e10;
const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    /// Output (measurement) sampling interval [s].
    pub output_dt: f64,
    /// Simulated duration [s]; `duration / output_dt` output samples are produced.
    pub duration: f64,
    /// Fixed RK4 step [s].
    pub dt_int: f64,
}

impl SimulationSettings {
    /// Integration step defaults to a tenth of the output interval.
    pub fn new(output_dt: f64, duration: f64) -> Self {
        SimulationSettings {
            output_dt,
            duration,
            dt_int: output_dt / 10.0,
        }
    }

    pub fn with_dt_int(mut self, dt_int: f64) -> Self {
        self.dt_int = dt_int;
        self
    }

    pub fn output_steps(&self) -> usize {
        (self.duration / self.output_dt).round() as usize
    }
}

fn substeps(interval: f64, h: f64, what: &str) -> Result<usize> {
    let n = (interval / h).round();
    if n < 1.0 || (n * h - interval).abs() > GRID_TOLERANCE * interval {
        return Err(Error::Domain {
            variant: "simulate",
            message: format!("integration step {h} s does not divide the {what} interval {interval} s"),
        });
    }
    Ok(n as usize)
}

/// One classical RK4 step with the input held constant.
pub fn rk4_step(system: &dyn DynamicSystem, state: &mut [f64], input: &[f64], h: f64, work: &mut [Vec<f64>; 5]) {
    let n = state.len();
    let [k1, k2, k3, k4, tmp] = work;
    system.derivative(state, input, k1);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k1[i];
    }
    system.derivative(tmp, input, k2);
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * h * k2[i];
    }
    system.derivative(tmp, input, k3);
    for i in 0..n {
        tmp[i] = state[i] + h * k3[i];
    }
    system.derivative(tmp, input, k4);
    for i in 0..n {
        state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Simulates from the system's initial (at-rest) state.
pub fn simulate(
    system: &dyn DynamicSystem,
    excitation: &ExcitationRecord,
    channels: &[String],
    settings: &SimulationSettings,
) -> Result<SimulationOutput> {
    simulate_from(system, system.initial_state(), excitation, channels, settings)
}

/// Fixed-step RK4 from `state`, sampling the selected channels every
/// `output_dt`. The excitation is zero-order held between its samples.
pub fn simulate_from(
    system: &dyn DynamicSystem,
    mut state: Vec<f64>,
    excitation: &ExcitationRecord,
    channels: &[String],
    settings: &SimulationSettings,
) -> Result<SimulationOutput> {
    if state.len() != system.state_dim() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, system expects {}",
            state.len(),
            system.state_dim()
        )));
    }
    if excitation.channel_count != system.input_channels() {
        return Err(Error::Dimension(format!(
            "excitation `{}` has {} channel(s), system expects {}",
            excitation.label,
            excitation.channel_count,
            system.input_channels()
        )));
    }
    if !(settings.dt_int > 0.0) || !(settings.output_dt > 0.0) {
        return Err(Error::Domain {
            variant: "simulate",
            message: "time steps must be positive".into(),
        });
    }
    let h = settings.dt_int;
    let per_output = substeps(settings.output_dt, h, "output")?;
    let per_input = substeps(excitation.dt, h, "excitation")?;
    let n_out = settings.output_steps();
    if n_out == 0 {
        return Err(Error::Domain {
            variant: "simulate",
            message: "duration shorter than one output interval".into(),
        });
    }
    if settings.duration > excitation.duration() * (1.0 + GRID_TOLERANCE) + GRID_TOLERANCE {
        return Err(Error::Domain {
            variant: "simulate",
            message: format!(
                "duration {} s exceeds record `{}` length {} s",
                settings.duration,
                excitation.label,
                excitation.duration()
            ),
        });
    }

    let available = system.channels();
    let selected = channels
        .iter()
        .map(|c| {
            available.iter().position(|a| a == c).ok_or_else(|| Error::Domain {
                variant: "simulate",
                message: format!("unknown output channel `{c}`; available: {}", available.join(", ")),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dim = state.len();
    let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut rate = vec![0.0; dim];
    let mut all = vec![0.0; available.len()];
    let mut values = Vec::with_capacity(n_out * selected.len());
    let total_steps = (n_out - 1) * per_output;

    for step in 0..=total_steps {
        let input = excitation.at(step / per_input);
        if step % per_output == 0 {
            system.derivative(&state, input, &mut rate);
            system.outputs(&state, &rate, input, &mut all);
            values.extend(selected.iter().map(|&i| all[i]));
        }
        if step == total_steps {
            break;
        }
        rk4_step(system, &mut state, input, h, &mut work);
        system.project(&mut state);
        if state.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_GUARD) {
            return Err(Error::Unstable {
                time: (step + 1) as f64 * h,
            });
        }
    }

    Ok(SimulationOutput {
        dt: settings.output_dt,
        values,
        channels: channels.to_vec(),
    })
}
