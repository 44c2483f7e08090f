//! Adaptive propagation of density matrices under a [`Generator`].
//!
//! The default stepper is Dormand-Prince 5(4) with its 4th-order continuous
//! extension, so samples are interpolated onto the requested grid instead of
//! forcing step endpoints onto it. Step control uses the max-abs local error
//! against `atol + rtol·max|ρ|`. After each accepted step the state is
//! replaced by its Hermitian part and its trace is checked.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::equations::{Generator, GeneratorKind};
use crate::error::{invalid, Error, Result};
use crate::operators::MomentumBasis;
use crate::params::{validate_grid, SimParams};
use crate::{CMatrix, C64};

/// Slack above unit trace tolerated before a run is declared broken.
pub const TRACE_CEILING: f64 = 1e-9;

/// Largest state dimension accepted by [`integrate_expm`] (`n_max = 10` with internal states).
pub const EXPM_MAX_DIM: usize = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalState {
    /// Centre of mass only.
    None,
    Ground,
    Excited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub time: f64,
    /// Whether the matrix lives on `com ⊗ internal` (internal index fastest).
    pub has_internal: bool,
    pub matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix, has_internal: bool, time: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("density matrix must be square"));
        }
        if has_internal && !matrix.nrows().is_multiple_of(2) {
            return Err(invalid("composite state needs an even dimension"));
        }
        Ok(Self { time, has_internal, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of momentum levels.
    pub fn com_dim(&self) -> usize {
        if self.has_internal {
            self.dim() / 2
        } else {
            self.dim()
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `|0⟩⟨0|` on the centre of mass, optionally tensored with `|g⟩⟨g|` or `|e⟩⟨e|`.
pub fn make_initial_state(basis: &MomentumBasis, internal: InternalState) -> DensityState {
    let zero = basis.index_of(0).expect("ladder always contains n = 0");
    let (dim, index, has_internal) = match internal {
        InternalState::None => (basis.dim(), zero, false),
        InternalState::Ground => (2 * basis.dim(), 2 * zero, true),
        InternalState::Excited => (2 * basis.dim(), 2 * zero + 1, true),
    };
    let mut m = CMatrix::zeros(dim, dim);
    m[(index, index)] = C64::new(1.0, 0.0);
    DensityState { time: 0.0, has_internal, matrix: m }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: GeneratorKind,
    pub samples: Vec<DensityState>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &DensityState {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }
}

/// Integrates and keeps every sampled state.
pub fn integrate(gen: &Generator, rho0: &DensityState, params: &SimParams) -> Result<Trajectory> {
    let mut samples = Vec::with_capacity(params.t_samples.len());
    let stats = integrate_with(gen, rho0, params, |s| samples.push(s.clone()))?;
    Ok(Trajectory { kind: gen.kind(), samples, stats })
}

// Dormand-Prince 5(4) tableau
#[cfg(test)]
const C2: f64 = 1.0 / 5.0;
#[cfg(test)]
const C3: f64 = 3.0 / 10.0;
#[cfg(test)]
const C4: f64 = 4.0 / 5.0;
#[cfg(test)]
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn check_inputs(gen: &Generator, rho0: &DensityState, params: &SimParams) -> Result<()> {
    validate_grid(&params.t_samples)?;
    if rho0.dim() != gen.dim_state() || rho0.has_internal != gen.has_internal() {
        return Err(invalid(format!(
            "state of dimension {} does not fit the {} generator (dimension {})",
            rho0.dim(),
            gen.kind(),
            gen.dim_state()
        )));
    }
    if rho0.hermiticity_error() > 1e-12 {
        return Err(invalid("initial state is not Hermitian"));
    }
    if (rho0.trace() - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("initial state has trace {}", rho0.trace())));
    }
    for (name, v) in [("rtol", params.rtol), ("atol", params.atol), ("leak_budget", params.leak_budget)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    Ok(())
}

/// Replaces column-stacked `ρ` by `(ρ + ρ†)/2` and returns its trace.
fn symmetrize(v: &mut [C64], d: usize) -> f64 {
    let mut trace = 0.0;
    for j in 0..d {
        for i in 0..j {
            let avg = (v[i + d * j] + v[j + d * i].conj()) * 0.5;
            v[i + d * j] = avg;
            v[j + d * i] = avg.conj();
        }
        let diag = &mut v[j + d * j];
        diag.im = 0.0;
        trace += diag.re;
    }
    trace
}

fn check_trace(kind: GeneratorKind, time: f64, trace: f64, leak_budget: f64) -> Result<()> {
    let too_low = kind != GeneratorKind::Secular && trace < 1.0 - leak_budget;
    if too_low || trace > 1.0 + TRACE_CEILING || !trace.is_finite() {
        return Err(Error::Leakage { kind, time, trace });
    }
    Ok(())
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

struct Workspace {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

/// Integrates and hands each sampled state to `observer` as soon as it is
/// available, without retaining the trajectory.
#[allow(clippy::needless_range_loop)]
pub fn integrate_with<F>(gen: &Generator, rho0: &DensityState, params: &SimParams, mut observer: F) -> Result<StepStats>
where
    F: FnMut(&DensityState),
{
    check_inputs(gen, rho0, params)?;
    let start = Instant::now();
    let d = gen.dim_state();
    let n = d * d;
    let kind = gen.kind();
    let has_internal = gen.has_internal();
    let samples = &params.t_samples;
    let t_end = params.t_end();
    let emit = |observer: &mut F, t: f64, v: &[C64]| {
        observer(&DensityState { time: t, has_internal, matrix: CMatrix::from_column_slice(d, d, v) });
    };

    let mut y: Vec<C64> = rho0.matrix.as_slice().to_vec();
    symmetrize(&mut y, d);
    emit(&mut observer, 0.0, &y);
    let mut next = 1;

    let zero = C64::new(0.0, 0.0);
    let mut ws = Workspace {
        k: std::array::from_fn(|_| vec![zero; n]),
        tmp: vec![zero; n],
        y_new: vec![zero; n],
    };
    let mut stats = StepStats::default();
    let mut t = 0.0f64;
    let mut h = (0.1 / gen.stiffness_scale()).min(t_end);
    let mut fac_old = 1e-4f64;
    let mut last_rejected = false;

    gen.apply_vec(&y, &mut ws.k[0]);
    stats.evaluations += 1;

    while next < samples.len() {
        let remaining = t_end - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StiffnessFailure { kind, time: t, step: h });
        }
        dp_stages(gen, &y, h, &mut ws);
        stats.evaluations += 6;

        let Workspace { k, y_new, tmp } = &mut ws;
        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            err = err.max(e.re.abs().max(e.im.abs()));
        }
        let scale = params.atol + params.rtol * max_abs(&y).max(max_abs(y_new));
        let err = err / scale;

        let fac11 = err.powf(0.2 - 0.75 * BETA);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };

            // samples strictly inside the step come from the continuous extension
            while next < samples.len() && samples[next] < t_new {
                let theta = (samples[next] - t) / h;
                dense_output(&y, y_new, k, h, theta, tmp);
                symmetrize(tmp, d);
                emit(&mut observer, samples[next], tmp);
                next += 1;
            }
            let trace = symmetrize(y_new, d);
            check_trace(kind, t_new, trace, params.leak_budget)?;
            if next < samples.len() && samples[next] == t_new {
                emit(&mut observer, t_new, y_new);
                next += 1;
            }

            std::mem::swap(&mut y, y_new);
            k.swap(0, 6);
            t = t_new;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
    stats.wall = start.elapsed();
    Ok(stats)
}

/// Fills `k[1..7]` and `y_new` for one step; `k[0]` must hold `f(y)`.
fn dp_stages(gen: &Generator, y: &[C64], h: f64, ws: &mut Workspace) {
    let Workspace { k, tmp, y_new } = ws;
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (h * A21);
    }
    gen.apply_vec(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
    }
    gen.apply_vec(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
    }
    gen.apply_vec(tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
    }
    gen.apply_vec(tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
    }
    gen.apply_vec(tmp, k6);
    for i in 0..n {
        y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
    }
    gen.apply_vec(y_new, k7);
}

fn dense_output(y: &[C64], y_new: &[C64], k: &[Vec<C64>; 7], h: f64, theta: f64, out: &mut [C64]) {
    let theta1 = 1.0 - theta;
    for i in 0..y.len() {
        let diff = y_new[i] - y[i];
        let bspl = k[0][i] * h - diff;
        let r4 = diff - k[6][i] * h - bspl;
        let r5 = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
        out[i] = y[i] + (diff + (bspl + (r4 + r5 * theta1) * theta) * theta1) * theta;
    }
}

/// Propagates with exact dense propagators `exp(L Δt)` between consecutive
/// samples. Meant for cross-checks on small ladders only.
pub fn integrate_expm(gen: &Generator, rho0: &DensityState, params: &SimParams) -> Result<Trajectory> {
    check_inputs(gen, rho0, params)?;
    let d = gen.dim_state();
    if d > EXPM_MAX_DIM {
        return Err(invalid(format!(
            "matrix-exponential stepper limited to state dimension {EXPM_MAX_DIM}, got {d}"
        )));
    }
    let start = Instant::now();
    let dense = gen.matrix().to_dense();
    let mut cache: HashMap<u64, CMatrix> = HashMap::new();
    let mut y = nalgebra::DVector::from_column_slice(rho0.matrix.as_slice());
    symmetrize(y.as_mut_slice(), d);
    let mut samples = vec![DensityState { time: 0.0, has_internal: gen.has_internal(), matrix: rho0.matrix.clone() }];
    let mut stats = StepStats::default();
    for w in params.t_samples.windows(2) {
        let dt = w[1] - w[0];
        let prop = cache.entry(dt.to_bits()).or_insert_with(|| (&dense * C64::from(dt)).exp());
        y = &*prop * y;
        let trace = symmetrize(y.as_mut_slice(), d);
        check_trace(gen.kind(), w[1], trace, params.leak_budget)?;
        stats.accepted += 1;
        samples.push(DensityState {
            time: w[1],
            has_internal: gen.has_internal(),
            matrix: CMatrix::from_column_slice(d, d, y.as_slice()),
        });
    }
    stats.wall = start.elapsed();
    Ok(Trajectory { kind: gen.kind(), samples, stats })
}
