//! Quantities extracted from sampled states.

use crate::error::{invalid, Error, Result};
use crate::integrator::DensityState;
use crate::params::SimParams;
use crate::{CMatrix, C64};

/// Below this excited-state trace the validity ratio is not defined.
pub const EXCITED_TRACE_FLOOR: f64 = 1e-12;

/// A labelled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("series times and values differ in length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("series times must be strictly increasing"));
        }
        Ok(Self { label: label.into(), times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sub-series with `lo <= t <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> ObservableSeries {
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
            .unzip();
        ObservableSeries { label: self.label.clone(), times, values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution {
    /// `P(n)` for `n = -n_max..=n_max`.
    pub probs: Vec<f64>,
    /// Set when some `P(n)` is below `−10·atol`.
    pub positivity_warning: Option<f64>,
}

impl MomentumDistribution {
    pub fn n_max(&self) -> usize {
        self.probs.len() / 2
    }

    pub fn at(&self, n: i64) -> f64 {
        let i = n + self.n_max() as i64;
        self.probs[i as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Copy with negative entries clamped to zero, for display only.
    pub fn clamped(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.max(0.0)).collect()
    }
}

/// Diagonal of the centre-of-mass density matrix (internal states traced out).
pub fn momentum_distribution(state: &DensityState, atol: f64) -> MomentumDistribution {
    let m = &state.matrix;
    let probs: Vec<f64> = if state.has_internal {
        (0..state.com_dim()).map(|i| m[(2 * i, 2 * i)].re + m[(2 * i + 1, 2 * i + 1)].re).collect()
    } else {
        (0..state.com_dim()).map(|i| m[(i, i)].re).collect()
    };
    let worst = probs.iter().cloned().fold(f64::INFINITY, f64::min);
    MomentumDistribution { positivity_warning: (worst < -10.0 * atol).then_some(worst), probs }
}

/// `ρ_gg` (`internal = 0`) or `ρ_ee` (`internal = 1`) as a centre-of-mass operator.
pub fn internal_block(state: &DensityState, internal: usize) -> Result<CMatrix> {
    if !state.has_internal {
        return Err(invalid("state carries no internal factor"));
    }
    assert!(internal < 2);
    let n = state.com_dim();
    Ok(CMatrix::from_fn(n, n, |i, j| state.matrix[(2 * i + internal, 2 * j + internal)]))
}

/// Partial trace over the internal factor; identity for centre-of-mass states.
pub fn com_operator(state: &DensityState) -> CMatrix {
    if !state.has_internal {
        return state.matrix.clone();
    }
    let n = state.com_dim();
    CMatrix::from_fn(n, n, |i, j| state.matrix[(2 * i, 2 * j)] + state.matrix[(2 * i + 1, 2 * j + 1)])
}

/// `(Tr ρ_gg, Tr ρ_ee)`; `(Tr ρ, 0)` for centre-of-mass states.
pub fn internal_traces(state: &DensityState) -> (f64, f64) {
    if !state.has_internal {
        return (state.trace(), 0.0);
    }
    let m = &state.matrix;
    (0..state.com_dim()).fold((0.0, 0.0), |(g, e), i| (g + m[(2 * i, 2 * i)].re, e + m[(2 * i + 1, 2 * i + 1)].re))
}

/// `Tr[ρ_ee p²/2] / (Γ Tr ρ_ee)`: kinetic energy of the excited component
/// compared with the decay rate. Small values mean kinetic evolution of the
/// excited state is negligible during its lifetime.
pub fn validity_ratio(state: &DensityState, gamma: f64) -> Result<f64> {
    let ee = internal_block(state, 1)?;
    let n_max = (state.com_dim() / 2) as i64;
    let trace_ee: f64 = (0..ee.nrows()).map(|i| ee[(i, i)].re).sum();
    if trace_ee <= EXCITED_TRACE_FLOOR {
        return Err(Error::UndefinedRatio { trace_ee });
    }
    let kinetic: f64 = (0..ee.nrows())
        .map(|i| {
            let n = i as i64 - n_max;
            ee[(i, i)].re * (n * n) as f64 / 2.0
        })
        .sum();
    Ok(kinetic / (gamma * trace_ee))
}

/// Composite state implied by an adiabatic solution: `ρ_ee ≈ ΩρΩ†/4δ²`,
/// `ρ_gg = ρ − ρ_ee`, coherences dropped.
pub fn adiabatic_excited_estimate(state: &DensityState, omega: &CMatrix, delta: f64) -> Result<DensityState> {
    if state.has_internal {
        return Err(invalid("expected a centre-of-mass state"));
    }
    if omega.shape() != state.matrix.shape() {
        return Err(invalid("Rabi operator and state dimensions differ"));
    }
    let rho = &state.matrix;
    let ee = omega * rho * omega.adjoint() * C64::from(1.0 / (4.0 * delta * delta));
    let gg = rho - &ee;
    let n = rho.nrows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            m[(2 * i, 2 * j)] = gg[(i, j)];
            m[(2 * i + 1, 2 * j + 1)] = ee[(i, j)];
        }
    }
    DensityState::new(m, true, state.time)
}

/// Leading-order fluorescence rate `Γ Ω̄² / 4δ²` for an effective mean square
/// Rabi frequency `omega_sq_bar` (expected within `(0, Ω_max²]`).
pub fn fluorescence_estimate(params: &SimParams, omega_sq_bar: f64) -> f64 {
    params.gamma * omega_sq_bar / (4.0 * params.delta * params.delta)
}

/// Time-scale figures quoted alongside results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Rate with `Ω̄² = Ω_max²/2`, the spatial mean of `sin²`.
    pub rate_mean_square: f64,
    pub inter_emission_mean_square: f64,
    /// Rate with `Ω̄² = Ω_max²`.
    pub rate_peak: f64,
    /// Rate with `Ω̄² = Ω_max²/4`, the convention under which the
    /// inter-emission time at the default parameters is 2.
    pub rate_quarter: f64,
    /// Oscillation frequency scale near the potential minimum, `(Ω_max²/δ)^{1/2}`.
    pub omega_osc: f64,
}

pub fn rate_report(params: &SimParams) -> RateReport {
    let om2 = params.omega_max * params.omega_max;
    let rate_mean_square = fluorescence_estimate(params, om2 / 2.0);
    RateReport {
        rate_mean_square,
        inter_emission_mean_square: rate_mean_square.recip(),
        rate_peak: fluorescence_estimate(params, om2),
        rate_quarter: fluorescence_estimate(params, om2 / 4.0),
        omega_osc: (om2 / params.delta).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub max_abs_diff: f64,
    /// Time shift maximising the cross-correlation; positive when `a` leads `b`.
    pub lag: f64,
}

/// Largest pointwise difference and cross-correlation lag of two series on
/// the same uniform grid.
///
/// The lag maximises `Σ_i â_i b̂_{i+k}` over shifts `|k·dt| ≤ 0.5`, where hats
/// denote mean-removed values. The raw (unnormalised) sum is used, which
/// favours the correlation peak nearest zero shift. Ties go to the smaller
/// `|k|`.
pub fn series_compare(a: &ObservableSeries, b: &ObservableSeries) -> Result<Comparison> {
    const MAX_SHIFT: f64 = 0.5;
    if a.times.len() != b.times.len() {
        return Err(invalid("series have different lengths"));
    }
    if a.is_empty() {
        return Err(invalid("series are empty"));
    }
    let span = a.times.last().unwrap() - a.times[0];
    let tol = 1e-12 * span.abs().max(1.0);
    if a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > tol) {
        return Err(invalid("series are sampled on different grids"));
    }
    let max_abs_diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if a.len() < 2 {
        return Ok(Comparison { max_abs_diff, lag: 0.0 });
    }
    let dt = span / (a.len() - 1) as f64;
    if a.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(invalid("lag estimation needs a uniform grid"));
    }
    let centre = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let (ah, bh) = (centre(&a.values), centre(&b.values));
    let n = ah.len() as i64;
    let kmax = ((MAX_SHIFT / dt) + 1e-9).floor() as i64;
    let kmax = kmax.min(n - 1);
    let corr = |k: i64| -> f64 {
        let lo = 0.max(-k);
        let hi = n.min(n - k);
        (lo..hi).map(|i| ah[i as usize] * bh[(i + k) as usize]).sum()
    };
    let mut best = (0i64, corr(0));
    for m in 1..=kmax {
        for k in [m, -m] {
            let c = corr(k);
            if c > best.1 {
                best = (k, c);
            }
        }
    }
    Ok(Comparison { max_abs_diff, lag: best.0 as f64 * dt })
}

/// Decay rate `−d ln y / dt` from a least-squares line through `ln y`.
pub fn log_decay_rate(series: &ObservableSeries) -> Result<f64> {
    if series.values.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("log fit needs positive values"));
    }
    let logs: Vec<f64> = series.values.iter().map(|v| v.ln()).collect();
    Ok(-least_squares_slope(&series.times, &logs)?)
}

/// Growth rate `dy/dt` from a least-squares line through the series.
pub fn growth_rate(series: &ObservableSeries) -> Result<f64> {
    least_squares_slope(&series.times, &series.values)
}

fn least_squares_slope(ts: &[f64], ys: &[f64]) -> Result<f64> {
    if ts.len() < 2 {
        return Err(invalid("need at least two points for a fit"));
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm) * (t - tm);
    }
    Ok(sxy / sxx)
}

/// Mean peak heights of two series compared at matched phase.
///
/// Peaks are interior samples of `follower` that are maximal within
/// `±half_window`. For each one, `leader` contributes its maximum over the
/// same window moved earlier by `lag`. Returns `(leader_mean, follower_mean)`.
pub fn matched_peak_envelopes(
    leader: &ObservableSeries,
    follower: &ObservableSeries,
    lag: f64,
    half_window: f64,
) -> Result<(f64, f64)> {
    let dt = uniform_step(leader, follower)?;
    let n = follower.len() as i64;
    let w = (half_window / dt).round() as i64;
    let shift = (lag / dt).round() as i64;
    if w < 1 || 2 * w >= n {
        return Err(invalid("peak window does not fit the series"));
    }
    let window_max = |v: &[f64], lo: i64, hi: i64| -> f64 {
        let (lo, hi) = (lo.max(0) as usize, hi.min(n - 1) as usize);
        v[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let (mut sum_l, mut sum_f, mut count) = (0.0, 0.0, 0usize);
    for i in w..n - w {
        let v = follower.values[i as usize];
        if v < window_max(&follower.values, i - w, i + w) {
            continue;
        }
        let j = i - shift;
        if j - w < 0 || j + w >= n {
            continue;
        }
        sum_f += v;
        sum_l += window_max(&leader.values, j - w, j + w);
        count += 1;
    }
    if count == 0 {
        return Err(invalid("no interior peaks found"));
    }
    Ok((sum_l / count as f64, sum_f / count as f64))
}

fn uniform_step(a: &ObservableSeries, b: &ObservableSeries) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(invalid("series must share a grid of at least two points"));
    }
    let dt = (a.times[a.len() - 1] - a.times[0]) / (a.len() - 1) as f64;
    let same = a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() <= 1e-9 * dt);
    let uniform = a.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !same || !uniform {
        return Err(invalid("series must share one uniform grid"));
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{make_initial_state, InternalState};
    use crate::operators::{build_basis, kick_superoperator, kick_weights_from_w};

    #[test]
    fn distribution_of_initial_and_kicked_states() {
        let basis = build_basis(4).unwrap();
        let s = make_initial_state(&basis, InternalState::None);
        let p = momentum_distribution(&s, 1e-10);
        assert_eq!(p.at(0), 1.0);
        assert_eq!(p.total(), 1.0);
        assert!(p.positivity_warning.is_none());

        let kick = kick_superoperator(&basis, kick_weights_from_w()).unwrap();
        let kicked = DensityState::new(kick.apply(&s.matrix).unwrap(), false, 0.0).unwrap();
        let p = momentum_distribution(&kicked, 1e-10);
        assert!((p.at(1) - 0.2).abs() < 1e-15);
        assert!((p.at(-1) - 0.2).abs() < 1e-15);
        assert!((p.at(0) - 0.6).abs() < 1e-15);
        assert!((p.total() - kicked.trace()).abs() < 1e-15);
    }

    #[test]
    fn composite_distribution_traces_internal_states() {
        let basis = build_basis(2).unwrap();
        let mut s = make_initial_state(&basis, InternalState::Ground);
        s.matrix[(2 * 3 + 1, 2 * 3 + 1)] = C64::from(0.25);
        s.matrix[(4, 4)] = C64::from(0.75);
        let p = momentum_distribution(&s, 1e-10);
        assert_eq!(p.at(1), 0.25);
        assert_eq!(p.at(0), 0.75);
        let (g, e) = internal_traces(&s);
        assert_eq!((g, e), (0.75, 0.25));
        assert_eq!(com_operator(&s).trace().re, 1.0);
    }

    #[test]
    fn negative_population_is_flagged_not_clamped() {
        let basis = build_basis(1).unwrap();
        let mut s = make_initial_state(&basis, InternalState::None);
        s.matrix[(0, 0)] = C64::from(-1e-6);
        let p = momentum_distribution(&s, 1e-10);
        assert_eq!(p.positivity_warning, Some(-1e-6));
        assert_eq!(p.at(-1), -1e-6);
        assert_eq!(p.clamped()[0], 0.0);
    }

    fn excited_at(n: i64, weight: f64) -> DensityState {
        let basis = build_basis(5).unwrap();
        let d = 2 * basis.dim();
        let mut m = CMatrix::zeros(d, d);
        let i = basis.index_of(n).unwrap();
        m[(2 * i + 1, 2 * i + 1)] = C64::from(weight);
        m[(0, 0)] = C64::from(1.0 - weight);
        DensityState::new(m, true, 0.0).unwrap()
    }

    #[test]
    fn validity_ratio_examples() {
        assert_eq!(validity_ratio(&excited_at(0, 0.3), 200.0).unwrap(), 0.0);
        let r = validity_ratio(&excited_at(4, 0.3), 200.0).unwrap();
        assert!((r - 0.04).abs() < 1e-15);
        // scale invariance in ρ_ee
        let r2 = validity_ratio(&excited_at(4, 0.003), 200.0).unwrap();
        assert!((r - r2).abs() < 1e-15);
        assert!(matches!(validity_ratio(&excited_at(4, 0.0), 200.0), Err(Error::UndefinedRatio { .. })));
        let basis = build_basis(2).unwrap();
        assert!(validity_ratio(&make_initial_state(&basis, InternalState::None), 1.0).is_err());
    }

    #[test]
    fn fluorescence_rates() {
        let p = SimParams::default();
        let om2 = p.omega_max.powi(2);
        assert!((fluorescence_estimate(&p, om2) - 2.0).abs() < 1e-12);
        assert!((fluorescence_estimate(&p, om2 / 4.0).recip() - 2.0).abs() < 1e-12);
        assert!(fluorescence_estimate(&p, 1e-300) < 1e-300);
        let r = rate_report(&p);
        assert!((r.omega_osc - 20.0).abs() < 1e-12);
        assert!((r.inter_emission_mean_square - 1.0).abs() < 1e-12);
    }

    fn series(label: &str, f: impl Fn(f64) -> f64) -> ObservableSeries {
        let times: Vec<f64> = (0..401).map(|i| i as f64 * 0.005).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        ObservableSeries::new(label, times, values).unwrap()
    }

    #[test]
    fn compare_identical_series() {
        let a = series("a", |t| (7.0 * t).sin() + 0.3 * (3.0 * t).cos());
        let c = series_compare(&a, &a).unwrap();
        assert_eq!(c.max_abs_diff, 0.0);
        assert_eq!(c.lag, 0.0);
    }

    #[test]
    fn compare_recovers_shift() {
        // synthetic oracle: b is a delayed by 0.05, so a leads
        let f = |t: f64| (9.0 * t).sin() * (-0.2 * t).exp() + 0.5;
        let a = series("a", f);
        let b = series("b", |t| f(t - 0.05));
        let c = series_compare(&a, &b).unwrap();
        assert!((c.lag - 0.05).abs() <= 0.005 + 1e-12, "lag {}", c.lag);
        let c = series_compare(&b, &a).unwrap();
        assert!((c.lag + 0.05).abs() <= 0.005 + 1e-12, "lag {}", c.lag);
    }

    #[test]
    fn compare_constant_series() {
        let a = series("a", |_| 0.3);
        let b = series("b", |_| 0.7);
        let c = series_compare(&a, &b).unwrap();
        assert_eq!(c.lag, 0.0);
        assert!((c.max_abs_diff - 0.4).abs() < 1e-15);
    }

    #[test]
    fn compare_rejects_grid_mismatch() {
        let a = series("a", |t| t);
        let mut b = a.clone();
        b.times[3] += 1e-3;
        assert!(series_compare(&a, &b).is_err());
        let short = ObservableSeries::new("s", vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(series_compare(&a, &short).is_err());
    }

    #[test]
    fn decay_rate_fit() {
        let s = series("tr", |t| (-0.3 * t).exp());
        assert!((log_decay_rate(&s).unwrap() - 0.3).abs() < 1e-12);
        let line = series("p", |t| 2.0e-5 * t + 1e-3);
        assert!((growth_rate(&line).unwrap() - 2.0e-5).abs() < 1e-15);
    }

    #[test]
    fn matched_envelopes_of_shifted_sines() {
        // leader runs 0.03 ahead with a larger amplitude
        let lead = series("lead", |t| 0.5 + 0.3 * (20.0 * (t + 0.03)).sin());
        let follow = series("follow", |t| 0.5 + 0.2 * (20.0 * t).sin());
        let (l, f) = matched_peak_envelopes(&lead, &follow, 0.03, 0.05).unwrap();
        assert!((l - 0.8).abs() < 1e-3, "{l}");
        assert!((f - 0.7).abs() < 1e-3, "{f}");
        assert!(matched_peak_envelopes(&lead, &follow, 0.0, 5.0).is_err());
    }

    #[test]
    fn excited_estimate_preserves_trace() {
        let basis = build_basis(3).unwrap();
        let om = crate::operators::rabi_operator(&basis, 2000.0).unwrap().into_inner();
        let s = make_initial_state(&basis, InternalState::None);
        let est = adiabatic_excited_estimate(&s, &om, 1e4).unwrap();
        assert!((est.trace() - 1.0).abs() < 1e-15);
        let (_, ee) = internal_traces(&est);
        // ⟨0|Ω†Ω|0⟩/4δ² = Ω_max²/8δ²
        assert!((ee - 0.005).abs() < 1e-15);
    }
}
