use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ChannelRange;
use crate::dataset::{Channel, SensorFrame};
use crate::numerics::Rng;

/// Coefficients of the synthetic growth response (cm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseWeights {
    /// Multiplies `tanh(k·z_tds)`: more nutrients, taller plants, saturating.
    pub tds: f64,
    /// Multiplies `−tanh²(k·z_hum)`: growth peaks at mid-band humidity.
    pub hum: f64,
    /// Multiplies the running light dose of the current day.
    pub light_dose: f64,
    /// Plain linear terms on each normalized channel, in channel order.
    pub linear: [f64; 6],
    /// Slope `k` inside the saturating terms.
    pub steepness: f64,
}

impl Default for ResponseWeights {
    fn default() -> Self {
        Self {
            tds: 0.15,
            hum: 0.3,
            light_dose: 0.1,
            linear: [0.01, 0.02, 0.0, 0.02, 0.0, 0.03],
            steepness: 2.0,
        }
    }
}

/// Ground truth behind a synthetic dataset.
///
/// With `zᶜ = 2·(valueᶜ − lowᶜ)/(highᶜ − lowᶜ) − 1` for each channel, the
/// growth of frame `k` is
///
/// ```text
/// clamp(base + trend·tₖ
///       + w_tds·tanh(s·z_tds) − w_hum·tanh²(s·z_hum)
///       + w_dose·doseₖ + Σ linᶜ·zᶜ + aₖ,  clamp_low, clamp_high)
/// ```
///
/// where `tₖ` is elapsed days since the first frame, `doseₖ` is the sum of
/// `z_light` over the frames of the same calendar day up to and including
/// `k`, divided by `day_minutes`, and `aₖ` is an AR(1) series
/// (`a₀ = σ·n₀`, `aₖ = ρ·aₖ₋₁ + σ·√(1−ρ²)·nₖ`) with `nₖ` standard normals
/// from `Rng::new(noise_seed)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentGrowthModel {
    pub base_height: f64,
    pub trend_per_day: f64,
    pub weights: ResponseWeights,
    pub noise_std: f64,
    pub noise_ar: f64,
    pub noise_seed: u64,
    pub channel_ranges: [ChannelRange; 6],
    pub day_minutes: f64,
    pub clamp_low: f64,
    pub clamp_high: f64,
}

impl LatentGrowthModel {
    pub fn normalized(&self, c: Channel, value: f64) -> f64 {
        let r = self.channel_ranges[c.index()];
        2.0 * (value - r.low) / (r.high - r.low) - 1.0
    }
}

/// Evaluates the latent model over chronologically ordered frames.
pub fn growth_truth(model: &LatentGrowthModel, frames: &[SensorFrame]) -> Vec<f64> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let t0 = first.timestamp;
    let w = &model.weights;
    let mut rng = Rng::new(model.noise_seed);
    let innovation = model.noise_std * (1.0 - model.noise_ar * model.noise_ar).sqrt();
    let mut ar = 0.0;
    let mut day: Option<NaiveDate> = None;
    let mut light_sum = 0.0;

    frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            ar = if k == 0 {
                model.noise_std * rng.standard_normal()
            } else {
                model.noise_ar * ar + innovation * rng.standard_normal()
            };
            let date = f.timestamp.date();
            if day != Some(date) {
                day = Some(date);
                light_sum = 0.0;
            }
            let z: [f64; 6] = Channel::ALL.map(|c| model.normalized(c, f.channel(c)));
            light_sum += z[Channel::Light.index()];
            let dose = light_sum / model.day_minutes;

            let elapsed_days = (f.timestamp - t0).num_minutes() as f64 / 1440.0;
            let tds = (w.steepness * z[Channel::Tds.index()]).tanh();
            let hum = (w.steepness * z[Channel::Hum.index()]).tanh();
            let linear: f64 = w.linear.iter().zip(&z).map(|(a, b)| a * b).sum();
            let g = model.base_height + model.trend_per_day * elapsed_days + w.tds * tds - w.hum * hum * hum
                + w.light_dose * dose
                + linear
                + ar;
            g.clamp(model.clamp_low, model.clamp_high)
        })
        .collect()
}
