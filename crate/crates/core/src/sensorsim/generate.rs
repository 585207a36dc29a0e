use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{growth_truth, LatentGrowthModel, ResponseWeights, SimError};
use crate::dataset::{Channel, SensorFrame};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub low: f64,
    pub high: f64,
}

impl ChannelRange {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn width(self) -> f64 {
        self.high - self.low
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    #[default]
    Spring,
}

impl std::str::FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spring" => Ok(Season::Spring),
            other => Err(format!("season `{other}` is not modelled (only `spring`)")),
        }
    }
}

/// Deterministic shape of one channel inside its band.
///
/// Band position `p = 0.5 + diurnal·(sin(π·u) − 0.5) + daily·sin(2π·d/period + phase)`
/// where `u ∈ [0, 1)` is the fraction of the daytime window elapsed and `d`
/// the day index. The value is `low + p·(high − low)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub diurnal: f64,
    pub daily: f64,
    pub period_days: f64,
    pub phase: f64,
}

impl ChannelProfile {
    pub fn band_position(&self, day: usize, day_fraction: f64) -> f64 {
        let s = (std::f64::consts::PI * day_fraction).sin();
        0.5 + self.diurnal * (s - 0.5)
            + self.daily * (std::f64::consts::TAU * day as f64 / self.period_days + self.phase).sin()
    }

    pub fn value(&self, range: ChannelRange, day: usize, day_fraction: f64) -> f64 {
        range.low + range.width() * self.band_position(day, day_fraction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub days: usize,
    /// Exact row count; extra days are generated and the tail truncated.
    pub rows: Option<usize>,
    pub start_date: NaiveDate,
    pub start_hour: u32,
    pub end_hour: u32,
    pub cadence_minutes: u32,
    pub season: Season,
    pub seed: u64,
    pub channel_ranges: [ChannelRange; 6],
    pub profiles: [ChannelProfile; 6],
    /// Spread of the channel noise in channel units.
    pub noise_scale: [f64; 6],
    /// Minute-to-minute autocorrelation of the channel noise.
    pub noise_ar: f64,
    pub n_positions: usize,
    pub base_height: f64,
    pub trend_per_day: f64,
    pub weights: ResponseWeights,
    pub growth_noise_std: f64,
    pub growth_noise_ar: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let channel_ranges = [
            ChannelRange::new(200.0, 2000.0),
            ChannelRange::new(400.0, 1000.0),
            ChannelRange::new(800.0, 1500.0),
            ChannelRange::new(15.0, 25.0),
            ChannelRange::new(40.0, 60.0),
            ChannelRange::new(10.0, 20.0),
        ];
        let profile = |diurnal, daily, period_days, phase| ChannelProfile {
            diurnal,
            daily,
            period_days,
            phase,
        };
        Self {
            days: 20,
            rows: None,
            start_date: NaiveDate::from_ymd_opt(2024, 4, 3).expect("valid date"),
            start_hour: 10,
            end_hour: 18,
            cadence_minutes: 1,
            season: Season::Spring,
            seed: 7,
            channel_ranges,
            profiles: [
                profile(0.6, 0.1, 7.0, 0.3),
                profile(-0.4, 0.15, 5.0, 1.1),
                profile(0.1, 0.25, 4.3, 2.0),
                profile(0.5, 0.1, 6.0, 0.5),
                profile(-0.4, 0.2, 3.7, 4.0),
                profile(0.3, 0.1, 8.0, 2.7),
            ],
            noise_scale: channel_ranges.map(|r| 0.1 * r.width()),
            noise_ar: 0.98,
            n_positions: 21,
            base_height: 3.75,
            trend_per_day: 0.03,
            weights: ResponseWeights::default(),
            growth_noise_std: 0.01,
            growth_noise_ar: 0.95,
        }
    }
}

impl SimConfig {
    pub fn frames_per_day(&self) -> usize {
        ((self.end_hour - self.start_hour) * 60 / self.cadence_minutes.max(1)) as usize
    }

    pub fn total_rows(&self) -> usize {
        self.rows.unwrap_or(self.days * self.frames_per_day())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.rows.is_none() && self.days == 0 {
            return Err(SimError::Config("days must be at least 1".into()));
        }
        if self.rows == Some(0) {
            return Err(SimError::Config("rows must be at least 1".into()));
        }
        if self.start_hour >= self.end_hour || self.end_hour > 24 {
            return Err(SimError::Config(format!(
                "daytime window {}:00–{}:00 is empty",
                self.start_hour, self.end_hour
            )));
        }
        if self.cadence_minutes == 0 || self.frames_per_day() == 0 {
            return Err(SimError::Config("cadence must be positive and fit the window".into()));
        }
        for (c, r) in Channel::ALL.iter().zip(&self.channel_ranges) {
            if !(r.low < r.high) {
                return Err(SimError::Config(format!(
                    "degenerate {} range [{}, {}]",
                    c.header(),
                    r.low,
                    r.high
                )));
            }
        }
        if self.noise_scale.iter().any(|s| !(*s >= 0.0)) {
            return Err(SimError::Config("noise scales must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.noise_ar) || !(0.0..1.0).contains(&self.growth_noise_ar) {
            return Err(SimError::Config("autocorrelation must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// The latent model this configuration generates labels with.
    pub fn latent_model(&self, noise_seed: u64) -> LatentGrowthModel {
        LatentGrowthModel {
            base_height: self.base_height,
            trend_per_day: self.trend_per_day,
            weights: self.weights.clone(),
            noise_std: self.growth_noise_std,
            noise_ar: self.growth_noise_ar,
            noise_seed,
            channel_ranges: self.channel_ranges,
            day_minutes: (self.frames_per_day() * self.cadence_minutes as usize) as f64,
            clamp_low: 3.0,
            clamp_high: 4.5,
        }
    }
}

/// Output of [`generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub frames: Vec<SensorFrame>,
    pub height_names: Vec<String>,
    pub truth: LatentGrowthModel,
}

/// Produces a seeded synthetic farm dataset.
///
/// Channel noise is an AR(1) process with unit marginal variance, truncated
/// to ±3 and scaled by `noise_scale`, so every value stays within three noise
/// scales of its band (and never below zero).
pub fn generate(config: &SimConfig) -> Result<SyntheticDataset, SimError> {
    config.validate()?;
    let per_day = config.frames_per_day();
    let total = config.total_rows();
    let days = total.div_ceil(per_day);

    let mut master = Rng::new(config.seed);
    let mut channel_rngs: Vec<Rng> = (0..6).map(|_| master.fork()).collect();
    let noise_seed = master.next_u64();
    let mut position_rng = master.fork();

    let innovation = (1.0 - config.noise_ar * config.noise_ar).sqrt();
    let mut eta: Vec<f64> = channel_rngs.iter_mut().map(|r| r.standard_normal()).collect();

    let mut frames = Vec::with_capacity(total);
    'days: for day in 0..days {
        let date = config.start_date + Duration::days(day as i64);
        let day_start = date.and_hms_opt(config.start_hour, 0, 0).expect("start hour validated");
        for step in 0..per_day {
            if frames.len() == total {
                break 'days;
            }
            if !frames.is_empty() {
                for (e, rng) in eta.iter_mut().zip(channel_rngs.iter_mut()) {
                    *e = config.noise_ar * *e + innovation * rng.standard_normal();
                }
            }
            let u = step as f64 / per_day as f64;
            let mut channels = [0.0; 6];
            for c in 0..6 {
                let clean = config.profiles[c].value(config.channel_ranges[c], day, u);
                let noise = config.noise_scale[c] * eta[c].clamp(-3.0, 3.0);
                channels[c] = (clean + noise).max(0.0);
            }
            frames.push(SensorFrame {
                timestamp: day_start + Duration::minutes((step as u32 * config.cadence_minutes) as i64),
                channels,
                heights: Vec::new(),
                growth_avg: 0.0,
            });
        }
    }

    let truth = config.latent_model(noise_seed);
    let growth = growth_truth(&truth, &frames);

    // Fixed per-position offsets with zero mean, so the mean height is the growth.
    let mut offsets = position_rng.normal_vec(config.n_positions, 0.0, 0.15);
    if !offsets.is_empty() {
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        offsets.iter_mut().for_each(|o| *o -= mean);
    }
    for (f, g) in frames.iter_mut().zip(growth) {
        f.heights = offsets.iter().map(|o| g + o).collect();
        f.growth_avg = if f.heights.is_empty() {
            g
        } else {
            f.heights.iter().sum::<f64>() / f.heights.len() as f64
        };
    }

    Ok(SyntheticDataset {
        frames,
        height_names: crate::dataset::position_names(config.n_positions),
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{write_csv, CsvOptions};
    use chrono::Timelike;

    fn small(days: usize) -> SimConfig {
        SimConfig {
            days,
            ..SimConfig::default()
        }
    }

    #[test]
    fn default_row_count() {
        assert_eq!(SimConfig::default().total_rows(), 9600);
        let ds = generate(&small(2)).unwrap();
        assert_eq!(ds.frames.len(), 960);
    }

    #[test]
    fn exact_rows_extend_into_another_day() {
        let cfg = SimConfig {
            days: 1,
            rows: Some(500),
            ..SimConfig::default()
        };
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.frames.len(), 500);
        assert_eq!(ds.frames[480].timestamp.hour(), 10);
    }

    #[test]
    fn zero_noise_is_closed_form() {
        let mut cfg = small(2);
        cfg.noise_scale = [0.0; 6];
        let ds = generate(&cfg).unwrap();
        for (k, f) in ds.frames.iter().enumerate() {
            let (day, step) = (k / 480, k % 480);
            for c in 0..6 {
                let expected = cfg.profiles[c].value(cfg.channel_ranges[c], day, step as f64 / 480.0);
                assert_eq!(f.channels[c], expected);
            }
        }
    }

    #[test]
    fn byte_identical_csv_for_same_seed() {
        let a = generate(&small(1)).unwrap();
        let b = generate(&small(1)).unwrap();
        let opts = CsvOptions::default();
        assert_eq!(
            write_csv(&a.frames, &a.height_names, opts),
            write_csv(&b.frames, &b.height_names, opts)
        );
    }

    #[test]
    fn degenerate_range_rejected() {
        let mut cfg = small(1);
        cfg.channel_ranges[2] = ChannelRange::new(5.0, 5.0);
        assert!(matches!(generate(&cfg), Err(SimError::Config(_))));
        assert!(generate(&small(0)).is_err());
    }

    #[test]
    fn values_stay_in_noisy_band() {
        let cfg = small(3);
        let ds = generate(&cfg).unwrap();
        for f in &ds.frames {
            for c in 0..6 {
                let r = cfg.channel_ranges[c];
                let s = cfg.noise_scale[c];
                let v = f.channels[c];
                assert!(v >= 0.0 && v >= r.low - 3.0 * s && v <= r.high + 3.0 * s);
            }
        }
    }

    #[test]
    fn timestamps_minute_spaced_in_daytime() {
        let ds = generate(&small(3)).unwrap();
        for w in ds.frames.windows(2) {
            assert!(w[1].timestamp > w[0].timestamp);
        }
        for f in &ds.frames {
            assert!((10..18).contains(&f.timestamp.hour()));
        }
        assert_eq!((ds.frames[1].timestamp - ds.frames[0].timestamp).num_minutes(), 1);
    }

    #[test]
    fn growth_is_mean_of_heights_and_in_band() {
        let ds = generate(&small(2)).unwrap();
        assert_eq!(ds.height_names.len(), 21);
        for f in &ds.frames {
            let mean = f.heights.iter().sum::<f64>() / f.heights.len() as f64;
            assert_eq!(mean, f.growth_avg);
            assert!((2.99..=4.51).contains(&f.growth_avg));
        }
    }
}
