//! Named experiments and their output files.

use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use lindblad_atom::observables::{
    adiabatic_excited_estimate, growth_rate, internal_traces, log_decay_rate, rate_report,
};
use lindblad_atom::{
    build_basis, integrate_with, make_initial_state, momentum_distribution, rabi_operator, series_compare,
    validity_ratio, Generator, GeneratorKind, InternalState, ObservableSeries, SimParams, StepStats,
};

use crate::config::{Experiment, RunConfig};
use crate::output::{Cell, Table};

#[derive(Debug)]
pub enum RunError {
    Integration(lindblad_atom::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Integration(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "output: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<lindblad_atom::Error> for RunError {
    fn from(e: lindblad_atom::Error) -> Self {
        RunError::Integration(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Files written and human-readable summary lines.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Sampled observables of one integration.
struct SeriesRun {
    kind: GeneratorKind,
    times: Vec<f64>,
    probs: Vec<Vec<f64>>,
    trace: Vec<f64>,
    trace_ee: Vec<f64>,
    validity: Vec<Option<f64>>,
    positivity_warnings: usize,
    stats: StepStats,
    construct: Duration,
}

impl SeriesRun {
    fn level(&self, n: i64) -> ObservableSeries {
        let n_max = (self.probs[0].len() / 2) as i64;
        let values = self.probs.iter().map(|p| p[(n + n_max) as usize]).collect();
        ObservableSeries::new(format!("P({n})"), self.times.clone(), values).expect("sample grid is increasing")
    }
}

fn initial_internal(kind: GeneratorKind) -> InternalState {
    if kind.has_internal() {
        InternalState::Ground
    } else {
        InternalState::None
    }
}

fn run_series(kind: GeneratorKind, params: &SimParams, validity: bool) -> Result<SeriesRun, RunError> {
    let basis = build_basis(params.n_max)?;
    let start = Instant::now();
    let gen = Generator::build(kind, &basis, params)?;
    let construct = start.elapsed();
    let omega = rabi_operator(&basis, params.omega_max)?.into_inner();
    let rho0 = make_initial_state(&basis, initial_internal(kind));
    let mut run = SeriesRun {
        kind,
        times: Vec::new(),
        probs: Vec::new(),
        trace: Vec::new(),
        trace_ee: Vec::new(),
        validity: Vec::new(),
        positivity_warnings: 0,
        stats: StepStats::default(),
        construct,
    };
    let mut failure = None;
    run.stats = integrate_with(&gen, &rho0, params, |s| {
        let p = momentum_distribution(s, params.atol);
        if let Some(worst) = p.positivity_warning {
            if run.positivity_warnings == 0 {
                eprintln!("warning: {kind}: population {worst:e} at t = {} is below -10 atol", s.time);
            }
            run.positivity_warnings += 1;
        }
        run.times.push(s.time);
        run.trace.push(s.trace());
        run.probs.push(p.probs);
        run.trace_ee.push(internal_traces(s).1);
        if validity && failure.is_none() {
            let ratio = if kind.has_internal() {
                validity_ratio(s, params.gamma)
            } else {
                adiabatic_excited_estimate(s, &omega, params.delta).and_then(|e| validity_ratio(&e, params.gamma))
            };
            match ratio {
                Ok(r) => run.validity.push(Some(r)),
                Err(lindblad_atom::Error::UndefinedRatio { .. }) => run.validity.push(None),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    eprintln!(
        "{kind}: constructed in {:.3} s, {} steps accepted, {} rejected, integrated in {:.3} s",
        run.construct.as_secs_f64(),
        run.stats.accepted,
        run.stats.rejected,
        run.stats.wall.as_secs_f64()
    );
    Ok(run)
}

fn series_table(run: &SeriesRun, n_max: usize) -> Table {
    let n_max = n_max as i64;
    let mut columns = vec!["t".to_string()];
    columns.extend((-n_max..=n_max).map(|n| format!("p_{n}")));
    columns.push("trace".into());
    columns.push("trace_ee".into());
    let mut table = Table::new(columns);
    for i in 0..run.times.len() {
        let mut row = vec![Cell::Num(run.times[i])];
        row.extend(run.probs[i].iter().map(|&p| Cell::Num(p)));
        row.push(Cell::Num(run.trace[i]));
        row.push(if run.kind.has_internal() { Cell::Num(run.trace_ee[i]) } else { Cell::Empty });
        table.push(row);
    }
    table
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    outcome: Outcome,
}

impl Writer<'_> {
    fn write(&mut self, stem: &str, table: &Table) -> Result<(), RunError> {
        let path = self.cfg.out.join(format!("{stem}.{}", self.cfg.format.extension()));
        table.write(&path, self.cfg.format)?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.outcome.summary.push(line);
    }
}

/// Runs the configured experiment, writing results under `cfg.out`.
pub fn run_experiment(cfg: &RunConfig) -> Result<Outcome, RunError> {
    std::fs::create_dir_all(&cfg.out)?;
    let header = cfg.out.join("run_config.txt");
    std::fs::write(&header, cfg.header())?;
    let mut w = Writer { cfg, outcome: Outcome { files: vec![header], summary: Vec::new() } };
    match cfg.experiment {
        Experiment::ShortTime => short_time(&mut w)?,
        Experiment::LongTime => long_time(&mut w)?,
        Experiment::Benchmark => benchmark(&mut w)?,
        Experiment::Validity => validity(&mut w)?,
    }
    Ok(w.outcome)
}

fn short_time(w: &mut Writer) -> Result<(), RunError> {
    let params = w.cfg.params();
    let kinds = w.cfg.equation.kinds();
    let mut runs = Vec::new();
    for &kind in &kinds {
        let run = run_series(kind, &params, false)?;
        w.write(&format!("short_time_{kind}"), &series_table(&run, params.n_max))?;
        runs.push(run);
    }
    let find = |runs: &[SeriesRun], k: GeneratorKind| runs.iter().position(|r| r.kind == k);

    if let Some(d) = find(&runs, GeneratorKind::Dressed) {
        if find(&runs, GeneratorKind::SophisticatedAdiabatic).is_none() {
            runs.push(run_series(GeneratorKind::SophisticatedAdiabatic, &params, false)?);
        }
        let s = find(&runs, GeneratorKind::SophisticatedAdiabatic).unwrap();
        let diff = max_distribution_diff(&runs[d], &runs[s]);
        w.say(format!("dressed vs sophisticated: max |dP(n,t)| = {diff:e}"));
    }
    if let Some(f) = find(&runs, GeneratorKind::Full) {
        let reference = runs[f].level(0);
        for run in runs.iter().filter(|r| r.kind != GeneratorKind::Full) {
            let c = series_compare(&run.level(0), &reference)?;
            w.say(format!(
                "{} vs full: max |dP(0)| = {:.4e}, P(0) lag = {:+.4}",
                run.kind, c.max_abs_diff, c.lag
            ));
        }
    }
    Ok(())
}

fn max_distribution_diff(a: &SeriesRun, b: &SeriesRun) -> f64 {
    a.probs
        .iter()
        .zip(&b.probs)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn long_time(w: &mut Writer) -> Result<(), RunError> {
    let params = w.cfg.params();
    let n_max = params.n_max as i64;
    for kind in w.cfg.equation.kinds() {
        let run = run_series(kind, &params, false)?;
        w.write(&format!("long_time_{kind}"), &series_table(&run, params.n_max))?;

        let mut last = Table::new(vec!["n".into(), "p".into()]);
        for (n, p) in (-n_max..=n_max).zip(run.probs.last().unwrap()) {
            last.push(vec![Cell::Int(n), Cell::Num(*p)]);
        }
        w.write(&format!("long_time_{kind}_final"), &last)?;

        let trace = ObservableSeries::new("trace", run.times.clone(), run.trace.clone())?;
        let decay = log_decay_rate(&trace)?;
        let edge = growth_rate(&run.level(n_max))?;
        w.say(format!(
            "{kind}: trace(t_max) = {:.10}, trace decay rate = {decay:.4e}, P({n_max}) growth = {edge:.4e}",
            run.trace.last().unwrap()
        ));
    }
    Ok(())
}

fn benchmark(w: &mut Writer) -> Result<(), RunError> {
    let params = w.cfg.params();
    let basis = build_basis(params.n_max)?;
    let mut table = Table::new(
        ["equation", "construct_s", "integrate_s", "total_s", "accepted", "rejected", "evaluations"]
            .map(String::from)
            .to_vec(),
    );
    let mut totals = Vec::new();
    // sequential on purpose: each timing is a dedicated single-threaded run
    for kind in w.cfg.equation.kinds() {
        let start = Instant::now();
        let gen = Generator::build(kind, &basis, &params)?;
        let construct = start.elapsed().as_secs_f64();
        let rho0 = make_initial_state(&basis, initial_internal(kind));
        let stats = integrate_with(&gen, &rho0, &params, |_| {})?;
        let integrate = stats.wall.as_secs_f64();
        eprintln!("{kind}: {:.3} s", construct + integrate);
        table.push(vec![
            Cell::Text(kind.name().into()),
            Cell::Num(construct),
            Cell::Num(integrate),
            Cell::Num(construct + integrate),
            Cell::Int(stats.accepted as i64),
            Cell::Int(stats.rejected as i64),
            Cell::Int(stats.evaluations as i64),
        ]);
        totals.push((kind, construct + integrate));
    }
    w.write("benchmark", &table)?;

    let time_of = |k: GeneratorKind| totals.iter().find(|(kind, _)| *kind == k).map(|(_, t)| *t);
    for (kind, t) in &totals {
        w.say(format!("{kind:<14} {t:>10.3} s"));
    }
    if let (Some(std), Some(soph), Some(sec), Some(full)) = (
        time_of(GeneratorKind::StandardAdiabatic),
        time_of(GeneratorKind::SophisticatedAdiabatic),
        time_of(GeneratorKind::Secular),
        time_of(GeneratorKind::Full),
    ) {
        let adiabatic = 0.5 * (std + soph);
        let holds = std.max(soph) < sec && sec < full;
        w.say(format!(
            "ordering adiabatic < secular < full: {}; secular/adiabatic = {:.2}, full/adiabatic = {:.1}",
            if holds { "holds" } else { "violated" },
            sec / adiabatic,
            full / adiabatic
        ));
    }
    Ok(())
}

fn validity(w: &mut Writer) -> Result<(), RunError> {
    let params = w.cfg.params();
    for kind in w.cfg.equation.kinds() {
        let run = run_series(kind, &params, true)?;
        let mut table = Table::new(vec!["t".into(), "ratio".into(), "trace_ee".into()]);
        for ((t, r), ee) in run.times.iter().zip(&run.validity).zip(&run.trace_ee) {
            table.push(vec![Cell::Num(*t), r.map_or(Cell::Empty, Cell::Num), Cell::Num(*ee)]);
        }
        w.write(&format!("validity_{kind}"), &table)?;
        let late: Vec<f64> = run
            .times
            .iter()
            .zip(&run.validity)
            .filter(|(t, _)| **t >= 0.5)
            .filter_map(|(_, r)| *r)
            .collect();
        let source = if kind.has_internal() { "excited block" } else { "adiabatic excited estimate" };
        if late.is_empty() {
            w.say(format!("{kind}: no defined ratio for t >= 0.5"));
        } else {
            let mean = late.iter().sum::<f64>() / late.len() as f64;
            w.say(format!("{kind}: mean validity ratio over t >= 0.5 = {mean:.4} ({source}, {} samples)", late.len()));
        }
    }
    let r = rate_report(&params);
    w.say(format!(
        "fluorescence rate {:.4} (inter-emission time {:.4}) with mean-square Rabi frequency Omega_max^2/2; \
         {:.4} with Omega_max^2, {:.4} with Omega_max^2/4; oscillation frequency scale {:.4}",
        r.rate_mean_square, r.inter_emission_mean_square, r.rate_peak, r.rate_quarter, r.omega_osc
    ));
    Ok(())
}
