//! Sweep runner: seeds x schemes x one swept parameter, written as CSV,
//! plus gnuplot data and script stubs for the usual figures.
//!
//! Files in the output directory:
//! - `results.csv`: one [`ResultRow`] per `(scheme, value, seed)`.
//! - `aggregate.csv`: mean and sample standard deviation per `(scheme, value)`.
//! - `convergence.csv`: ADMM residual and objective per iteration.
//! - `run_meta.csv`: timestamps and wall times, the only non-deterministic file.
//! - `scenarios/`: every generated instance, replayable with [`Scenario::from_csv`].
//!
//! The first two start with `#` lines carrying the git revision, the
//! config digest, the swept axis and the seed list. The column holding the
//! swept value is named after the axis (`num_users`, `num_aps`,
//! `block_size` or `penalty_q`).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::baselines::{run_scheme, SchemeId};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::scenario::{generate_scenario, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    NumUsers,
    NumAps,
    /// `L^b` in bits.
    BlockSize,
    PenaltyQ,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [
        SweepAxis::NumUsers,
        SweepAxis::NumAps,
        SweepAxis::BlockSize,
        SweepAxis::PenaltyQ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NumUsers => "num_users",
            SweepAxis::NumAps => "num_aps",
            SweepAxis::BlockSize => "block_size",
            SweepAxis::PenaltyQ => "penalty_q",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepAxis::NumUsers | SweepAxis::NumAps)
    }

    /// `config` with the swept parameter set to `value`.
    pub fn apply(self, config: &Config, value: f64) -> Result<Config> {
        let mut out = config.clone();
        match self {
            SweepAxis::NumUsers => out.system.num_users = value as usize,
            SweepAxis::NumAps => out.system.num_aps = value as usize,
            SweepAxis::BlockSize => out.system.block_size = value,
            SweepAxis::PenaltyQ => out.admm.penalty_q = value,
        }
        out.system.validate()?;
        out.admm.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub config_path: PathBuf,
    pub axis: SweepAxis,
    /// Nonempty, strictly ascending.
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    /// Distinct.
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker count; `None` lets the pool decide.
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "at least one sweep value is required"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("values", "sweep values must be strictly ascending"));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::config("values", "sweep values must be positive and finite"));
        }
        if self.axis.integral() && self.values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::config("values", format!("{} takes whole numbers", self.axis)));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.is_empty() || seeds.len() != self.seeds.len() {
            return Err(Error::config("seeds", "seeds must be nonempty and distinct"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The scheme returned a decision but some user misses its deadline.
    Late,
    Error(String),
}

impl RowStatus {
    pub fn token(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::Late => "late".into(),
            RowStatus::Error(msg) => format!("error: {msg}"),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, RowStatus::Error(_))
    }
}

/// One run. Metrics are NaN when the scheme failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: SchemeId,
    pub value: f64,
    pub seed: u64,
    pub status: RowStatus,
    /// `D^o`, the mean user offloading delay (s).
    pub delay_offload: f64,
    pub delay_consensus: f64,
    pub delay_total: f64,
    /// `E^o` (J).
    pub energy_offload: f64,
    pub energy_consensus: f64,
    pub energy_total: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Kept out of `results.csv` so reruns are byte-identical.
    pub wall_time_s: f64,
}

const METRICS: [&str; 6] = ["d_o", "d_c", "d_a", "e_o", "e_c", "e_a"];

impl ResultRow {
    fn metrics(&self) -> [f64; 6] {
        [
            self.delay_offload,
            self.delay_consensus,
            self.delay_total,
            self.energy_offload,
            self.energy_consensus,
            self.energy_total,
        ]
    }

    fn header(axis: SweepAxis) -> Vec<String> {
        let mut h = vec!["scheme".to_string(), axis.to_string(), "seed".into(), "status".into()];
        h.extend(METRICS.iter().map(|s| s.to_string()));
        h.extend(["iterations".into(), "converged".into()]);
        h
    }

    fn record(&self) -> Vec<String> {
        let failed = self.status.is_error();
        let num = |x: f64| if failed { String::new() } else { x.to_string() };
        let mut r = vec![
            self.scheme.to_string(),
            self.value.to_string(),
            self.seed.to_string(),
            self.status.token(),
        ];
        r.extend(self.metrics().map(num));
        r.push(if failed { String::new() } else { self.iterations.to_string() });
        r.push(if failed { String::new() } else { self.converged.to_string() });
        r
    }
}

/// Mean and standard deviation of the successful runs of one `(scheme, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scheme: SchemeId,
    pub value: f64,
    pub runs: usize,
    pub late: usize,
    pub errors: usize,
    /// Order: d_o, d_c, d_a, e_o, e_c, e_a.
    pub mean: [f64; 6],
    pub sd: [f64; 6],
    pub iterations_mean: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by `(scheme, value)`; `rows` must already be sorted.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    for group in rows.chunk_by(|x, y| x.scheme == y.scheme && x.value == y.value) {
        let good: Vec<&ResultRow> = group.iter().filter(|r| !r.status.is_error()).collect();
        let mut mean = [0.0; 6];
        let mut sd = [0.0; 6];
        for k in 0..6 {
            let xs: Vec<f64> = good.iter().map(|r| r.metrics()[k]).collect();
            (mean[k], sd[k]) = mean_sd(&xs);
        }
        let its: Vec<f64> = good.iter().map(|r| r.iterations as f64).collect();
        out.push(AggregateRow {
            scheme: group[0].scheme,
            value: group[0].value,
            runs: good.len(),
            late: good.iter().filter(|r| r.status == RowStatus::Late).count(),
            errors: group.len() - good.len(),
            mean,
            sd,
            iterations_mean: mean_sd(&its).0,
        });
    }
    out
}

/// ADMM trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub scheme: SchemeId,
    pub value: f64,
    pub seed: u64,
    pub residuals: Vec<f64>,
    pub objectives: Vec<f64>,
}

/// Runs one scheme on one instance and never fails: errors become rows.
pub fn run_cell(
    base: &Config,
    axis: SweepAxis,
    value: f64,
    scheme: SchemeId,
    seed: u64,
) -> (ResultRow, Option<ConvergenceTrace>) {
    let start = Instant::now();
    let outcome = axis
        .apply(base, value)
        .and_then(|cfg| Ok((generate_scenario(&cfg.system, seed)?, cfg)))
        .and_then(|(s, cfg)| run_scheme(scheme, &s, &cfg.admm));
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut row = ResultRow {
        scheme,
        value,
        seed,
        status: RowStatus::Ok,
        delay_offload: f64::NAN,
        delay_consensus: f64::NAN,
        delay_total: f64::NAN,
        energy_offload: f64::NAN,
        energy_consensus: f64::NAN,
        energy_total: f64::NAN,
        iterations: 0,
        converged: false,
        wall_time_s,
    };
    match outcome {
        Err(e) => {
            row.status = RowStatus::Error(e.to_string());
            (row, None)
        }
        Ok(o) => {
            let ev = &o.evaluation;
            row.status = if o.feasible { RowStatus::Ok } else { RowStatus::Late };
            row.delay_offload = ev.delay.mean_offload();
            row.delay_consensus = ev.delay.consensus;
            row.delay_total = ev.delay.total();
            row.energy_offload = ev.energy.offloading();
            row.energy_consensus = ev.energy.consensus_total();
            row.energy_total = ev.energy.total;
            row.iterations = o.iterations;
            row.converged = o.converged;
            let trace = o.admm.map(|st| ConvergenceTrace {
                scheme,
                value,
                seed,
                residuals: st.residuals,
                objectives: st.objectives,
            });
            (row, trace)
        }
    }
}

/// What [`run_plan`] produced.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub rows: Vec<ResultRow>,
    pub aggregate: Vec<AggregateRow>,
    pub traces: Vec<ConvergenceTrace>,
    pub files: Vec<PathBuf>,
}

impl PlanReport {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.status.is_error()).count()
    }
}

fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_csv(path: &Path, meta: &str, header: &[String], records: &[Vec<String>]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(meta.as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(feature = "parallel")]
fn map_cells<T, F>(cells: &[(SchemeId, f64, u64)], threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&(SchemeId, f64, u64)) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(|| cells.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, F>(cells: &[(SchemeId, f64, u64)], _threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(&(SchemeId, f64, u64)) -> T,
{
    Ok(cells.iter().map(f).collect())
}

/// Runs every `(scheme, value, seed)` cell and writes the result files.
/// Scheme failures become error rows; only setup and I/O problems return
/// `Err`.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanReport> {
    plan.validate()?;
    let text = fs::read_to_string(&plan.config_path)?;
    let base = Config::from_toml_str(&text)?;
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
    let started = SystemTime::now();

    let mut cells = Vec::new();
    for &scheme in &plan.schemes {
        for &value in &plan.values {
            for &seed in &plan.seeds {
                cells.push((scheme, value, seed));
            }
        }
    }
    let admm_base = {
        // Cells already run concurrently; nested parallel subproblems only
        // add contention.
        let mut b = base.clone();
        b.admm.parallel = b.admm.parallel && cells.len() == 1;
        b
    };
    let results = map_cells(&cells, plan.threads, |&(scheme, value, seed)| {
        run_cell(&admm_base, plan.axis, value, scheme, seed)
    })?;
    let finished = SystemTime::now();

    let mut rows = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (row, trace) in results {
        rows.push(row);
        traces.extend(trace);
    }
    let key = |s: SchemeId, v: f64, seed: u64| (s, v.to_bits(), seed);
    rows.sort_by_key(|r| key(r.scheme, r.value, r.seed));
    traces.sort_by_key(|t| key(t.scheme, t.value, t.seed));
    let agg = aggregate(&rows);

    fs::create_dir_all(&plan.out_dir)?;
    let meta = format!(
        "# git: {}\n# config_sha256: {}\n# axis: {}\n# seeds: {}\n",
        git_revision(),
        digest,
        plan.axis,
        join(&plan.seeds)
    );
    let mut files = Vec::new();

    let path = plan.out_dir.join("results.csv");
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(&path, &meta, &ResultRow::header(plan.axis), &records)?;
    files.push(path);

    let path = plan.out_dir.join("aggregate.csv");
    let mut header = vec!["scheme".to_string(), plan.axis.to_string(), "runs".into(), "late".into(), "errors".into()];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_sd"));
    }
    header.push("iterations_mean".into());
    let records: Vec<Vec<String>> = agg
        .iter()
        .map(|a| {
            let mut r = vec![
                a.scheme.to_string(),
                a.value.to_string(),
                a.runs.to_string(),
                a.late.to_string(),
                a.errors.to_string(),
            ];
            for k in 0..6 {
                r.push(a.mean[k].to_string());
                r.push(a.sd[k].to_string());
            }
            r.push(a.iterations_mean.to_string());
            r
        })
        .collect();
    write_csv(&path, &meta, &header, &records)?;
    files.push(path);

    let path = plan.out_dir.join("convergence.csv");
    let header: Vec<String> = ["scheme", plan.axis.as_str(), "seed", "iteration", "residual", "objective_j"]
        .map(String::from)
        .to_vec();
    let mut records = Vec::new();
    for t in &traces {
        for (i, (r, o)) in t.residuals.iter().zip(&t.objectives).enumerate() {
            records.push(vec![
                t.scheme.to_string(),
                t.value.to_string(),
                t.seed.to_string(),
                (i + 1).to_string(),
                r.to_string(),
                o.to_string(),
            ]);
        }
    }
    write_csv(&path, &meta, &header, &records)?;
    files.push(path);

    let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let path = plan.out_dir.join("run_meta.csv");
    let run_meta = format!("# started_unix: {}\n# finished_unix: {}\n", unix(started), unix(finished));
    let header: Vec<String> = ["scheme", plan.axis.as_str(), "seed", "wall_time_s"].map(String::from).to_vec();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.scheme.to_string(), r.value.to_string(), r.seed.to_string(), r.wall_time_s.to_string()])
        .collect();
    write_csv(&path, &run_meta, &header, &records)?;
    files.push(path);

    let dir = plan.out_dir.join("scenarios");
    fs::create_dir_all(&dir)?;
    for &value in &plan.values {
        let Ok(cfg) = plan.axis.apply(&base, value) else { continue };
        for &seed in &plan.seeds {
            if let Ok(s) = generate_scenario(&cfg.system, seed) {
                let path = dir.join(format!("{}_{}_seed{}.csv", plan.axis, value, seed));
                fs::write(&path, s.to_csv())?;
                files.push(path);
            }
        }
    }

    Ok(PlanReport {
        rows,
        aggregate: agg,
        traces,
        files,
    })
}

/// Loads a scenario dump written by [`run_plan`].
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_csv(&fs::read_to_string(path)?)
}

/// A CSV table read back with its header.
struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r.records().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    }
}

struct Figure {
    stem: &'static str,
    xlabel: &'static str,
    ylabel: &'static str,
    /// Aggregate columns after the swept value; the first is plotted.
    columns: &'static [&'static str],
}

fn figures(axis: SweepAxis) -> Vec<Figure> {
    let energy = &["e_a_mean", "e_a_sd", "e_o_mean", "e_c_mean"][..];
    match axis {
        SweepAxis::NumUsers => vec![
            Figure {
                stem: "delay_vs_users",
                xlabel: "number of users N",
                ylabel: "total delay D^a (s)",
                columns: &["d_a_mean", "d_a_sd", "d_o_mean", "d_c_mean"],
            },
            Figure {
                stem: "energy_vs_users",
                xlabel: "number of users N",
                ylabel: "total energy E^a (J)",
                columns: energy,
            },
        ],
        SweepAxis::NumAps => vec![Figure {
            stem: "energy_vs_aps",
            xlabel: "number of APs M",
            ylabel: "total energy E^a (J)",
            columns: energy,
        }],
        SweepAxis::BlockSize => vec![Figure {
            stem: "energy_vs_block_size",
            xlabel: "block size L^b (bits)",
            ylabel: "total energy E^a (J)",
            columns: energy,
        }],
        SweepAxis::PenaltyQ => vec![Figure {
            stem: "iterations_vs_q",
            xlabel: "penalty q",
            ylabel: "ADMM iterations",
            columns: &["iterations_mean"],
        }],
    }
}

fn gnuplot_script(stem: &str, xlabel: &str, ylabel: &str, logy: bool, series: &[String]) -> String {
    let mut s = format!(
        "set terminal pngcairo size 800,500\nset output '{stem}.png'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset key outside\n"
    );
    if logy {
        s.push_str("set logscale y\n");
    }
    let plots: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(i, name)| format!("'{stem}.dat' index {i} using 1:2 with linespoints title '{name}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Writes gnuplot data files (`.dat`, one block per scheme) and script stubs
/// (`.gp`) next to the aggregate in `dir`. Every data line is one sweep value
/// of one scheme; convergence traces get one file per run with one line per
/// iteration.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let agg = Table::read(&dir.join("aggregate.csv"))?;
    let axis = SweepAxis::ALL
        .into_iter()
        .find(|a| agg.header.iter().any(|h| h == a.as_str()))
        .ok_or_else(|| Error::Schema("missing column `num_users|num_aps|block_size|penalty_q`".into()))?;
    let scheme_col = agg.col("scheme")?;
    let value_col = agg.col(axis.as_str())?;
    if agg.rows.is_empty() {
        return Err(Error::Schema("aggregate.csv has no rows".into()));
    }
    let mut files = Vec::new();
    for fig in figures(axis) {
        let cols = fig.columns.iter().map(|c| agg.col(c)).collect::<Result<Vec<_>>>()?;
        let mut data = format!("# {} {}\n", axis, fig.columns.join(" "));
        let mut series = Vec::new();
        for r in &agg.rows {
            let scheme = &r[scheme_col];
            if series.last() != Some(&scheme.to_string()) {
                if !series.is_empty() {
                    data.push_str("\n\n");
                }
                data.push_str(&format!("# {scheme}\n"));
                series.push(scheme.to_string());
            }
            let vals: Vec<&str> = cols.iter().map(|&c| &r[c]).collect();
            data.push_str(&format!("{} {}\n", &r[value_col], vals.join(" ")));
        }
        let dat = dir.join(format!("{}.dat", fig.stem));
        fs::write(&dat, data)?;
        let gp = dir.join(format!("{}.gp", fig.stem));
        let logy = fig.columns[0].starts_with('e');
        fs::write(&gp, gnuplot_script(fig.stem, fig.xlabel, fig.ylabel, logy, &series))?;
        files.extend([dat, gp]);
    }

    let conv_path = dir.join("convergence.csv");
    if conv_path.exists() {
        let conv = Table::read(&conv_path)?;
        let c = ["scheme", axis.as_str(), "seed", "iteration", "residual"]
            .iter()
            .map(|n| conv.col(n))
            .collect::<Result<Vec<_>>>()?;
        let out = dir.join("convergence");
        fs::create_dir_all(&out)?;
        let mut names: Vec<String> = Vec::new();
        let mut body = String::new();
        let mut flush = |name: &Option<String>, body: &mut String| -> Result<()> {
            if let Some(name) = name {
                let path = out.join(format!("{name}.dat"));
                fs::write(&path, std::mem::take(body))?;
                files.push(path);
            }
            Ok(())
        };
        let mut current: Option<String> = None;
        for r in &conv.rows {
            let name = format!("{}_{}_seed{}", &r[c[0]], &r[c[1]], &r[c[2]]);
            if current.as_deref() != Some(&name) {
                flush(&current, &mut body)?;
                names.push(name.clone());
                current = Some(name);
            }
            body.push_str(&format!("{} {}\n", &r[c[3]], &r[c[4]]));
        }
        flush(&current, &mut body)?;
        if !names.is_empty() {
            let plots: Vec<String> = names
                .iter()
                .map(|n| format!("'convergence/{n}.dat' using 1:2 with lines title '{n}'"))
                .collect();
            let script = format!(
                "set terminal pngcairo size 800,500\nset output 'convergence.png'\nset xlabel 'iteration'\nset ylabel '||A - Â||_2'\nset logscale y\nset key outside\nplot {}\n",
                plots.join(", \\\n     ")
            );
            let gp = dir.join("convergence.gp");
            fs::write(&gp, script)?;
            files.push(gp);
        }
    }
    Ok(files)
}
