//! Lumped-mass structural models and their fixed-step time integration.

pub mod biaxial;
pub mod building;
pub mod excitation;
pub mod hysteresis;
pub mod isolator;
pub mod tmd;

mod integrator;

pub use biaxial::{BiaxialBase, BiaxialBaseModel, BiaxialDeviceParams, ElasticSlidingBearing, SteelDamper};
pub use building::{IsolatedBuilding, LinearChain, ShearBuildingModel, Tridiagonal};
pub use excitation::{add_measurement_noise, band_limited_noise, synthetic_ground_motion, wind_load, BandPass, GroundMotionSpec, GroundSpectrum};
pub use hysteresis::{biaxial_hysteresis_rates, boucwen_rate, BiaxialBoucWen, BoucWen};
pub use integrator::{rk4_step, simulate, simulate_from, SimulationSettings};
pub use isolator::{equivalent_linear_params, IsolatorLaw, IsolatorParams, IsolatorVariant};
pub use tmd::{tmd_force, TmdFrame, TmdFrameModel, TmdLaw};

pub type DynamicSystemBox = Box<dyn DynamicSystem>;

/// A first-order system `ẏ = f(y, u)` driven by a zero-order-held input.
pub trait DynamicSystem: Send + Sync {
    fn state_dim(&self) -> usize;

    /// Number of excitation channels read from the input slice.
    fn input_channels(&self) -> usize {
        1
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]);

    /// Projects a completed step back onto the admissible state set.
    fn project(&self, _state: &mut [f64]) {}

    /// Names of every output channel, in the order `outputs` writes them.
    fn channels(&self) -> Vec<String>;

    fn outputs(&self, state: &[f64], rate: &[f64], input: &[f64], out: &mut [f64]);

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }
}
