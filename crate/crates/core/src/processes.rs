//! Seeded generators for the six base time-series processes, plus
//! reference-baseline sampling.
//!
//! Each feature channel is an independent realization of the configured
//! process, drawn from a child stream derived as
//! `derive_seed(spec.seed, ["channel"], [channel_index])`, so generation
//! is reproducible cell-for-cell and safe to parallelize.
//!
//! Time-indexed formulas (Harmonic, PseudoPeriodic) evaluate on the
//! normalized grid `t_k = k / t_steps`, giving a frequency-2 harmonic two
//! full cycles over the window.

use serde::{Deserialize, Serialize};

use crate::error::GenerateError;
use crate::matrix::Matrix;
use crate::rng::SeedStream;
use crate::series::TimeSeries;
use crate::{num, Scalar};

/// Steps discarded before emitting recurrent processes (AR, CAR, NARMA),
/// enough for AR(1) with `|phi| <= 0.95` to forget its zero start.
pub const BURN_IN_STEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoPeriodicParams {
    /// Per-step amplitude `A_t ~ N(amp_mean, amp_var)`.
    pub amp_mean: f64,
    pub amp_var: f64,
    /// Per-step frequency `f_t ~ N(freq_mean, freq_var)`.
    pub freq_mean: f64,
    pub freq_var: f64,
}

impl Default for PseudoPeriodicParams {
    fn default() -> Self {
        PseudoPeriodicParams { amp_mean: 0.0, amp_var: 0.5, freq_mean: 2.0, freq_var: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArParams {
    pub phi: f64,
}

impl Default for ArParams {
    fn default() -> Self {
        ArParams { phi: 0.9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarParams {
    pub phi: f64,
    pub sigma: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        CarParams { phi: 0.9, sigma: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NarmaParams {
    /// Recurrence order.
    pub order: usize,
    /// Driving input `U_t ~ Uniform(0, input_high)`.
    pub input_high: f64,
}

impl Default for NarmaParams {
    fn default() -> Self {
        NarmaParams { order: 10, input_high: 0.5 }
    }
}

/// The six base processes with their parameter records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProcessKind {
    /// `X_t = eps_t`, `eps_t ~ N(0, 1)`.
    Gaussian,
    /// `X(t) = sin(2 pi 2 t) + eps_t` on the unit-interval grid.
    Harmonic,
    /// `X(t) = A_t sin(2 pi f_t t) + eps_t`, amplitude and frequency
    /// redrawn each step.
    PseudoPeriodic(PseudoPeriodicParams),
    /// `X_t = phi X_{t-1} + eps_t`.
    Autoregressive(ArParams),
    /// `X_t = phi X_{t-1} + sigma (1 - phi)^2 eps'_t + eps_t` with an
    /// independent standard-normal `eps'`.
    ContinuousAutoregressive(CarParams),
    /// Order-`n` NARMA recurrence driven by uniform input, with standard
    /// normal observation noise added on the emitted values.
    Narma(NarmaParams),
}

impl ProcessKind {
    /// Canonical display name, used in dataset ids and filters.
    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::Gaussian => "Gaussian",
            ProcessKind::Harmonic => "Harmonic",
            ProcessKind::PseudoPeriodic(_) => "PseudoPeriodic",
            ProcessKind::Autoregressive(_) => "Autoregressive",
            ProcessKind::ContinuousAutoregressive(_) => "ContinuousAutoregressive",
            ProcessKind::Narma(_) => "Narma",
        }
    }

    /// Directory-friendly lowercase name.
    pub fn slug(&self) -> &'static str {
        match self {
            ProcessKind::Gaussian => "gaussian",
            ProcessKind::Harmonic => "harmonic",
            ProcessKind::PseudoPeriodic(_) => "pseudo_periodic",
            ProcessKind::Autoregressive(_) => "autoregressive",
            ProcessKind::ContinuousAutoregressive(_) => "car",
            ProcessKind::Narma(_) => "narma",
        }
    }

    /// The six processes at their documented default parameters.
    pub fn defaults() -> [ProcessKind; 6] {
        [
            ProcessKind::Gaussian,
            ProcessKind::Harmonic,
            ProcessKind::PseudoPeriodic(PseudoPeriodicParams::default()),
            ProcessKind::Autoregressive(ArParams::default()),
            ProcessKind::ContinuousAutoregressive(CarParams::default()),
            ProcessKind::Narma(NarmaParams::default()),
        ]
    }

    fn validate(&self) -> Result<(), GenerateError> {
        let phi = match self {
            ProcessKind::Autoregressive(p) => Some(p.phi),
            ProcessKind::ContinuousAutoregressive(p) => Some(p.phi),
            _ => None,
        };
        if let Some(phi) = phi {
            if phi.abs() >= 1.0 {
                return Err(GenerateError::NonStationaryParameter { phi: phi.abs() });
            }
        }
        if let ProcessKind::Narma(p) = self {
            if p.order == 0 {
                return Err(GenerateError::InvalidShape("NARMA order must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Everything needed to (re)generate one base draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub process: ProcessKind,
    pub seed: u64,
    pub t_steps: usize,
    pub n_features: usize,
}

impl GenerationSpec {
    pub fn new(process: ProcessKind, seed: u64, t_steps: usize, n_features: usize) -> Self {
        GenerationSpec { process, seed, t_steps, n_features }
    }

    /// Same spec pointed at a different stream.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), GenerateError> {
        if self.t_steps == 0 || self.n_features == 0 {
            return Err(GenerateError::InvalidShape(format!(
                "dimensions must be positive, got {} x {}",
                self.n_features, self.t_steps
            )));
        }
        self.process.validate()
    }
}

/// Generate one `N x T` draw: `N` independent channels of length `T`.
pub fn generate_base<F: Scalar>(spec: &GenerationSpec) -> Result<TimeSeries<F>, GenerateError> {
    spec.validate()?;
    let mut values = Matrix::<F>::zeros(spec.n_features, spec.t_steps);
    for channel in 0..spec.n_features {
        let mut stream = SeedStream::derived(spec.seed, &["channel"], &[channel as u64]);
        let path = simulate_channel::<F>(&spec.process, spec.t_steps, &mut stream);
        values.data_mut()[channel * spec.t_steps..(channel + 1) * spec.t_steps]
            .copy_from_slice(&path);
    }
    Ok(TimeSeries::new(values))
}

/// Draw an uninformative reference series from the same process, shaped
/// like the dataset's instances. The caller applies the owning dataset's
/// normalization before using it as a masking baseline.
pub fn sample_reference<F: Scalar>(
    spec: &GenerationSpec,
    shape: (usize, usize),
    seed: u64,
) -> Result<TimeSeries<F>, GenerateError> {
    if shape != (spec.n_features, spec.t_steps) {
        return Err(GenerateError::InvalidShape(format!(
            "requested {:?}, spec generates ({}, {})",
            shape, spec.n_features, spec.t_steps
        )));
    }
    generate_base(&spec.with_seed(seed))
}

fn simulate_channel<F: Scalar>(
    process: &ProcessKind,
    t_steps: usize,
    stream: &mut SeedStream,
) -> Vec<F> {
    match process {
        ProcessKind::Gaussian => (0..t_steps).map(|_| stream.standard_normal()).collect(),
        ProcessKind::Harmonic => (0..t_steps)
            .map(|k| {
                let t = k as f64 / t_steps as f64;
                let signal = (std::f64::consts::TAU * 2.0 * t).sin();
                num::<F>(signal) + stream.standard_normal()
            })
            .collect(),
        ProcessKind::PseudoPeriodic(p) => {
            let amp_sd = p.amp_var.sqrt();
            let freq_sd = p.freq_var.sqrt();
            (0..t_steps)
                .map(|k| {
                    let t = k as f64 / t_steps as f64;
                    let amp = p.amp_mean + amp_sd * stream.standard_normal::<f64>();
                    let freq = p.freq_mean + freq_sd * stream.standard_normal::<f64>();
                    let signal = amp * (std::f64::consts::TAU * freq * t).sin();
                    num::<F>(signal) + stream.standard_normal()
                })
                .collect()
        }
        ProcessKind::Autoregressive(p) => {
            let phi = num::<F>(p.phi);
            let mut x = F::zero();
            let mut out = Vec::with_capacity(t_steps);
            for step in 0..BURN_IN_STEPS + t_steps {
                x = phi * x + stream.standard_normal();
                if step >= BURN_IN_STEPS {
                    out.push(x);
                }
            }
            out
        }
        ProcessKind::ContinuousAutoregressive(p) => {
            let phi = num::<F>(p.phi);
            let drift = num::<F>(p.sigma * (1.0 - p.phi).powi(2));
            let mut x = F::zero();
            let mut out = Vec::with_capacity(t_steps);
            for step in 0..BURN_IN_STEPS + t_steps {
                // eps' drawn before eps_t, one pair per step.
                let extra: F = stream.standard_normal();
                x = phi * x + drift * extra + stream.standard_normal();
                if step >= BURN_IN_STEPS {
                    out.push(x);
                }
            }
            out
        }
        ProcessKind::Narma(p) => {
            // The recurrence runs noise-free (standard-normal feedback
            // diverges through the y * sum term); eps_t enters as
            // observation noise on the emitted value. Draw order per
            // step: U_t, then eps_t.
            let n = p.order;
            let total = BURN_IN_STEPS + t_steps;
            let mut inputs = vec![0.0f64; total];
            let mut state = vec![0.0f64; total];
            let mut out = Vec::with_capacity(t_steps);
            for t in 0..total {
                inputs[t] = stream.uniform(0.0, p.input_high);
                let y_prev = if t > 0 { state[t - 1] } else { 0.0 };
                let lag_sum: f64 =
                    (0..n).map(|i| if t >= 1 + i { state[t - 1 - i] } else { 0.0 }).sum();
                let u_lag = if t >= n - 1 { inputs[t - (n - 1)] } else { 0.0 };
                state[t] = 0.3 * y_prev + 0.05 * y_prev * lag_sum + 1.5 * u_lag * inputs[t] + 0.1;
                let noise: F = stream.standard_normal();
                if t >= BURN_IN_STEPS {
                    out.push(num::<F>(state[t]) + noise);
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(process: ProcessKind, seed: u64, t: usize, n: usize) -> GenerationSpec {
        GenerationSpec::new(process, seed, t, n)
    }

    #[test]
    fn identical_specs_yield_bit_identical_output() {
        let s = spec(ProcessKind::Narma(NarmaParams::default()), 99, 50, 3);
        let a: TimeSeries<f64> = generate_base(&s).unwrap();
        let b: TimeSeries<f64> = generate_base(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonstationary_phi_is_rejected() {
        let s = spec(ProcessKind::Autoregressive(ArParams { phi: 1.0 }), 1, 50, 1);
        assert!(matches!(
            generate_base::<f64>(&s),
            Err(GenerateError::NonStationaryParameter { .. })
        ));
        let s = spec(ProcessKind::ContinuousAutoregressive(CarParams { phi: -1.2, sigma: 0.1 }), 1, 50, 1);
        assert!(generate_base::<f64>(&s).is_err());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        let s = spec(ProcessKind::Gaussian, 1, 0, 1);
        assert!(matches!(generate_base::<f64>(&s), Err(GenerateError::InvalidShape(_))));
        let s = spec(ProcessKind::Gaussian, 1, 50, 0);
        assert!(generate_base::<f64>(&s).is_err());
    }

    #[test]
    fn gaussian_moments_match_standard_normal() {
        let s = spec(ProcessKind::Gaussian, 2101, 100_000, 1);
        let ts: TimeSeries<f64> = generate_base(&s).unwrap();
        let data = ts.values().data();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn ar1_long_run_matches_stationary_theory() {
        let s = spec(ProcessKind::Autoregressive(ArParams { phi: 0.9 }), 77, 100_000, 1);
        let ts: TimeSeries<f64> = generate_base(&s).unwrap();
        let x = ts.values().data();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        // Closed form: 1 / (1 - phi^2) = 5.2631...
        let expected = 1.0 / (1.0 - 0.81);
        assert!((var - expected).abs() / expected < 0.05, "var {var} vs {expected}");

        let lag1: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>()
            / ((x.len() - 1) as f64);
        let rho = lag1 / var;
        assert!((rho - 0.9).abs() < 0.02, "lag-1 autocorr {rho}");
    }

    #[test]
    fn harmonic_seed_average_recovers_the_sinusoid() {
        // Noise averages out across seeds; the deterministic part stays.
        let t_steps = 50;
        let probes = [3usize, 12, 31, 44];
        let n_seeds = 10_000u64;
        let mut sums = [0.0f64; 4];
        for seed in 0..n_seeds {
            let s = spec(ProcessKind::Harmonic, seed, t_steps, 1);
            let ts: TimeSeries<f64> = generate_base(&s).unwrap();
            for (slot, &k) in probes.iter().enumerate() {
                sums[slot] += ts.get(0, k);
            }
        }
        for (slot, &k) in probes.iter().enumerate() {
            let mean = sums[slot] / n_seeds as f64;
            let expected = (std::f64::consts::TAU * 2.0 * (k as f64 / t_steps as f64)).sin();
            assert!((mean - expected).abs() < 0.05, "step {k}: {mean} vs {expected}");
        }
    }

    #[test]
    fn gaussian_channels_are_uncorrelated() {
        let s = spec(ProcessKind::Gaussian, 5, 10_000, 2);
        let ts: TimeSeries<f64> = generate_base(&s).unwrap();
        let a = ts.values().row(0);
        let b = ts.values().row(1);
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / n;
        let vb = b.iter().map(|y| (y - mb) * (y - mb)).sum::<f64>() / n;
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.05, "cross-correlation {corr}");
    }

    #[test]
    fn narma_entries_obey_the_recurrence_on_replay() {
        // Independent re-simulation from the same innovation stream.
        let params = NarmaParams::default();
        let t_steps = 50;
        let s = spec(ProcessKind::Narma(params), 424_242, t_steps, 1);
        let ts: TimeSeries<f64> = generate_base(&s).unwrap();

        let mut stream = SeedStream::derived(s.seed, &["channel"], &[0]);
        let total = BURN_IN_STEPS + t_steps;
        let mut u = Vec::with_capacity(total);
        let mut y: Vec<f64> = Vec::with_capacity(total);
        let mut eps = Vec::with_capacity(total);
        for t in 0..total {
            u.push(stream.uniform(0.0, params.input_high));
            let y_prev = if t > 0 { y[t - 1] } else { 0.0 };
            let mut lag_sum = 0.0;
            for i in 0..params.order {
                if t >= 1 + i {
                    lag_sum += y[t - 1 - i];
                }
            }
            let u_lag = if t >= params.order - 1 { u[t - (params.order - 1)] } else { 0.0 };
            y.push(0.3 * y_prev + 0.05 * y_prev * lag_sum + 1.5 * u_lag * u[t] + 0.1);
            eps.push(stream.standard_normal::<f64>());
        }
        for k in 0..t_steps {
            let expected = y[BURN_IN_STEPS + k] + eps[BURN_IN_STEPS + k];
            assert_eq!(ts.get(0, k).to_bits(), expected.to_bits(), "step {k}");
        }
    }

    #[test]
    fn reference_sampling_checks_shape_and_replays() {
        let s = spec(ProcessKind::Gaussian, 10, 50, 1);
        assert!(matches!(
            sample_reference::<f64>(&s, (2, 50), 1),
            Err(GenerateError::InvalidShape(_))
        ));
        let a: TimeSeries<f64> = sample_reference(&s, (1, 50), 123).unwrap();
        let b: TimeSeries<f64> = sample_reference(&s, (1, 50), 123).unwrap();
        assert_eq!(a, b);
    }

    /// Asymptotic two-sample Kolmogorov-Smirnov p-value.
    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
            d = d.max(diff);
        }
        let ne = (n as f64 * m as f64) / (n + m) as f64;
        let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
        let mut p = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
            p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        }
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn reference_draws_are_distributionally_indistinguishable() {
        let s = spec(ProcessKind::Gaussian, 31, 50, 1);
        let mut base = Vec::new();
        let mut refs = Vec::new();
        for k in 0..20u64 {
            let b: TimeSeries<f64> = generate_base(&s.with_seed(1000 + k)).unwrap();
            base.extend_from_slice(b.values().data());
            let r: TimeSeries<f64> = sample_reference(&s, (1, 50), 2000 + k).unwrap();
            refs.extend_from_slice(r.values().data());
        }
        assert_eq!(base.len(), 1000);
        let p = ks_two_sample(base, refs);
        assert!(p > 0.01, "KS p-value {p}");
    }
}
