mod output;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{Cell, Format, Report, Style};
use qcc_core::analytic::{classical_expected, classical_limit, ProtocolStats};
use qcc_core::blindbox::{
    classical_resources_with, resources_from_success, simulate_retry_until_correct, GameConfig, RewardLog,
};
use qcc_core::experiment::{
    apply_window, click_rates, estimate_from_click_rates, export, generate_synthetic, ingest_path, read_counts,
    table_report, window_search, LeakageProfile, RunMeta, TimeWindow, DEFAULT_BIN_PS, DEFAULT_GRID_STEP_PS,
};
use qcc_core::ideal::{ideal_distribution, sample_outcomes};
use qcc_core::montecarlo::{classical_collector_runs, mean_and_se, run_batch};
use qcc_core::optimize::{arithmetic_grid, crossover, optimal_intensity, sweep_intensity, GRID_MIN};
use qcc_core::{ChannelParams, CouponInstance};

/// Coherent-state quantum coupon collector: analysis, simulation and the
/// blind-box game service.
#[derive(Debug, Parser)]
#[command(name = "qcc", version, about)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
struct ParamArgs {
    /// Detection efficiency η.
    #[arg(long, default_value_t = 0.68)]
    eta: f64,
    /// Dark-count probability per gate.
    #[arg(long, default_value_t = 1e-8)]
    dark: f64,
    /// Interference visibility ν.
    #[arg(long, default_value_t = 0.99998)]
    vis: f64,
}

impl ParamArgs {
    fn params(&self) -> qcc_core::Result<ChannelParams> {
        ChannelParams::new(self.eta, self.dark, self.vis)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RewardArg {
    Natural,
    Binary,
}

impl From<RewardArg> for RewardLog {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Natural => RewardLog::Natural,
            RewardArg::Binary => RewardLog::Binary,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form statistics at one operating point.
    Analyze {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long)]
        intensity: f64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Statistics over evenly spaced intensities.
    Sweep {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = GRID_MIN)]
        i_min: f64,
        #[arg(long, default_value_t = 10.0)]
        i_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Intensity minimising the quantum cost subject to a correctness floor.
    Optimize {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 0.9)]
        constraint: f64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Optimised quantum cost against the classical cost over a range of n.
    Crossover {
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 0.9)]
        constraint: f64,
        /// start:stop:step, inclusive.
        #[arg(long, default_value = "1000:40000:1000", value_parser = parse_grid)]
        grid: Grid,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Monte Carlo periods on a seeded random instance.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        intensity: f64,
        #[arg(long, default_value_t = 100_000)]
        periods: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Classical coupon collector draws until all k coupons are seen.
    Classical {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Single-copy measurements of the ideal reference state.
    Ideal {
        #[arg(long)]
        n: usize,
        /// Comma-separated missing indices (1-based); drawn from the seed
        /// when omitted.
        #[arg(long, value_delimiter = ',')]
        missing: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Derived columns from per-size experiment counts.
    Table1 {
        #[arg(long)]
        counts: PathBuf,
        /// Print the derived columns at table precision instead of full
        /// values.
        #[arg(long)]
        printed: bool,
    },
    /// Synthetic time-tagged detector events plus a metadata sidecar.
    GenEvents {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        intensity: f64,
        #[arg(long, default_value_t = 10_000)]
        periods: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BIN_PS)]
        bin_ps: u32,
        /// Width of the leakage region at each bin edge; 0 for none.
        #[arg(long, default_value_t = 0)]
        leakage_edge_ps: u32,
        /// Extra visibility deficit carried by the leakage light.
        #[arg(long, default_value_t = 0.0)]
        leakage_deficit: f64,
        /// Event CSV to write; the sidecar goes to `<events>.meta.json`.
        #[arg(long)]
        events: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Best detection window for an event file, or stats for a given one.
    WindowSearch {
        #[arg(long)]
        events: PathBuf,
        /// Defaults to `<events>.meta.json`.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Evaluate only this window, start:end in ps.
        #[arg(long, value_parser = parse_window)]
        window: Option<(u32, u32)>,
        #[arg(long, default_value_t = DEFAULT_GRID_STEP_PS)]
        grid_step: u32,
        #[arg(long, default_value_t = 0.9)]
        constraint: f64,
        /// Dark-count probability per full bin, used by the estimate.
        #[arg(long, default_value_t = 1e-8)]
        dark: f64,
    },
    /// Blind-box economics: retry-until-correct spend, or resources from
    /// measured counts.
    BlindboxSim {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2.5)]
        intensity: f64,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "natural")]
        reward_log: RewardArg,
        /// Counts file (m,intensity,total_periods,m_clicks,correct,...) to
        /// turn into resource figures instead of simulating.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run the blind-box game service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8077)]
        port: u16,
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Clone)]
struct Grid(Vec<u64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    arithmetic_grid(num(a)?, num(b)?, num(c)?).map(Grid).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(':').ok_or("expected start:end")?;
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

/// Errors the user can fix by changing the invocation.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use qcc_core::Error as E;
    let core = |e: &E| match e {
        E::InvalidParameter { .. } | E::InvalidInstance(_) | E::Parse { .. } | E::GuessSize { .. } => 1,
        _ => 2,
    };
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return core(e);
        }
        if let Some(qcc_server::ServiceError::Game(e)) = cause.downcast_ref() {
            return core(e);
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(exit_code(&e));
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("QCC_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Usage(format!("QCC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let report = match cli.command {
        Command::Analyze { n, m, intensity, params } => analyze(n, m, intensity, params.params()?)?,
        Command::Sweep { n, m, i_min, i_max, steps, params } => {
            let mut r = Report::new(
                vec!["intensity", "efficiency", "correct_prob", "success_prob", "quantum_samples"],
                Style::Scientific,
            );
            check_sizes(n, m)?;
            for p in sweep_intensity(&params.params()?, n, m, i_min, i_max, steps)? {
                r.push(vec![
                    p.intensity.into(),
                    p.efficiency.into(),
                    p.correct_prob.into(),
                    p.success_prob.into(),
                    p.quantum_samples.into(),
                ]);
            }
            r
        }
        Command::Optimize { n, m, constraint, params } => {
            check_sizes(n, m)?;
            let o = optimal_intensity(&params.params()?, n, m, constraint)?;
            let p = o.point;
            Report::single(
                vec![
                    "n",
                    "m",
                    "constraint",
                    "intensity",
                    "efficiency",
                    "correct_prob",
                    "success_prob",
                    "quantum_samples",
                    "classical_samples",
                ],
                vec![
                    n.into(),
                    m.into(),
                    constraint.into(),
                    p.intensity.into(),
                    p.efficiency.into(),
                    p.correct_prob.into(),
                    p.success_prob.into(),
                    p.quantum_samples.into(),
                    classical_limit(n - m).into(),
                ],
                Style::Scientific,
            )
        }
        Command::Crossover { m, constraint, grid, params } => {
            let rep = crossover(&params.params()?, m, constraint, &grid.0)?;
            let mut r = Report::new(
                vec!["n", "intensity", "correct_prob", "success_prob", "quantum_samples", "classical_samples"],
                Style::Scientific,
            );
            for p in &rep.points {
                let o = p.optimum;
                r.push(vec![
                    p.n.into(),
                    o.map(|o| o.intensity).into(),
                    o.map(|o| o.correct_prob).into(),
                    o.map(|o| o.success_prob).into(),
                    o.map(|o| o.quantum_samples).into(),
                    p.classical_cost.into(),
                ]);
            }
            r.summary = vec![("crossover_n", rep.crossover_n.into()), ("half_cost_n", rep.half_cost_n.into())];
            r
        }
        Command::Simulate { n, m, intensity, periods, seed, params } => {
            let params = params.params()?;
            let inst = CouponInstance::seeded(n, m, seed)?;
            let b = run_batch(seed, &inst, &params, intensity, periods)?;
            let s = ProtocolStats::compute(&params, intensity, m as u64, (n - m) as u64)?;
            Report::single(
                vec![
                    "n",
                    "m",
                    "intensity",
                    "seed",
                    "periods",
                    "accepted",
                    "correct",
                    "efficiency_hat",
                    "correct_hat",
                    "success_hat",
                    "quantum_samples_hat",
                    "efficiency",
                    "correct_prob",
                    "success_prob",
                    "quantum_samples",
                ],
                vec![
                    n.into(),
                    m.into(),
                    intensity.into(),
                    seed.into(),
                    b.periods.into(),
                    b.accepted.into(),
                    b.correct.into(),
                    b.efficiency_hat.into(),
                    b.correct_hat.into(),
                    b.success_hat.into(),
                    b.quantum_samples_hat.into(),
                    s.efficiency.into(),
                    s.correct_prob.into(),
                    s.success_prob.into(),
                    s.quantum_samples.into(),
                ],
                Style::General,
            )
        }
        Command::Classical { k, runs, seed } => {
            let draws = classical_collector_runs(seed, k, runs)?;
            let (mean, se) = mean_and_se(&draws);
            Report::single(
                vec!["k", "runs", "seed", "mean_draws", "std_err", "expected_draws", "limit_draws"],
                vec![
                    k.into(),
                    runs.into(),
                    seed.into(),
                    mean.into(),
                    se.into(),
                    classical_expected(k).into(),
                    classical_limit(k).into(),
                ],
                Style::General,
            )
        }
        Command::Ideal { n, missing, m, samples, seed } => {
            let inst = match missing {
                Some(ms) => CouponInstance::from_missing(n, ms)?,
                None => CouponInstance::seeded(n, m, seed)?,
            };
            let dist = ideal_distribution(&inst);
            let c = sample_outcomes(seed, &inst, samples)?;
            let expected_conditional: f64 = inst.missing().iter().map(|&i| dist.conditional(i)).sum();
            Report::single(
                vec![
                    "n",
                    "m",
                    "missing",
                    "samples",
                    "outcome2",
                    "outcome2_freq",
                    "outcome2_prob",
                    "missing_hits",
                    "conditional_missing_freq",
                    "conditional_missing_prob",
                ],
                vec![
                    n.into(),
                    inst.m().into(),
                    join(inst.missing(), " ").into(),
                    c.samples.into(),
                    c.outcome2.into(),
                    (c.outcome2 as f64 / c.samples as f64).into(),
                    dist.p_outcome2.into(),
                    c.missing_hits.into(),
                    (c.outcome2 > 0).then(|| c.missing_hits as f64 / c.outcome2 as f64).into(),
                    expected_conditional.into(),
                ],
                Style::General,
            )
        }
        Command::Table1 { counts, printed } => table1(&counts, printed)?,
        Command::GenEvents {
            n,
            m,
            intensity,
            periods,
            seed,
            bin_ps,
            leakage_edge_ps,
            leakage_deficit,
            events,
            params,
        } => {
            let params = params.params()?;
            let inst = CouponInstance::seeded(n, m, seed)?;
            let profile = if leakage_edge_ps == 0 {
                if leakage_deficit != 0.0 {
                    bail!(Usage("--leakage-deficit needs --leakage-edge-ps".into()));
                }
                LeakageProfile::clean(bin_ps)?
            } else {
                LeakageProfile::edges(bin_ps, leakage_edge_ps, leakage_deficit)?
            };
            let log = generate_synthetic(seed, &inst, &params, intensity, periods, &profile, bin_ps)?;
            let meta_path = sidecar(&events);
            write_file(&events, &export(&log.records))?;
            write_file(&meta_path, &log.meta.to_json())?;
            Report::single(
                vec!["events", "periods", "n", "m", "missing"],
                vec![log.records.len().into(), periods.into(), n.into(), m.into(), join(inst.missing(), " ").into()],
                Style::General,
            )
        }
        Command::WindowSearch { events, meta, window, grid_step, constraint, dark } => {
            window_report(&events, meta.as_deref(), window, grid_step, constraint, dark)?
        }
        Command::BlindboxSim { n, m, intensity, runs, seed, reward_log, counts, params } => {
            let params = params.params()?;
            let config = GameConfig { n, m, params, reward_log: reward_log.into() };
            match counts {
                Some(path) => blindbox_counts(&path, n, reward_log.into())?,
                None => {
                    let s = simulate_retry_until_correct(seed, &config, intensity, runs)?;
                    Report::single(
                        vec![
                            "n",
                            "m",
                            "intensity",
                            "runs",
                            "seed",
                            "price",
                            "mean_plays",
                            "mean_spend",
                            "std_err_spend",
                            "expected_spend",
                            "reward",
                        ],
                        vec![
                            n.into(),
                            m.into(),
                            intensity.into(),
                            runs.into(),
                            seed.into(),
                            s.price.into(),
                            s.mean_plays.into(),
                            s.mean_spend.into(),
                            s.std_err_spend.into(),
                            s.expected_spend.into(),
                            s.reward.into(),
                        ],
                        Style::General,
                    )
                }
            }
        }
        Command::Serve { host, port, journal, cors_origin } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Usage(format!("bad address {host}:{port}: {e}")))?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(qcc_server::serve(addr, qcc_server::ServeOptions { journal, cors_origin }))?;
            return Ok(());
        }
    };
    emit(&report, cli.format, cli.output.as_deref())
}

fn check_sizes(n: u64, m: u64) -> anyhow::Result<()> {
    if m == 0 || m >= n {
        bail!(Usage(format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    Ok(())
}

fn join(xs: &[usize], sep: &str) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
}

fn sidecar(events: &Path) -> PathBuf {
    let mut s = events.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(report: &Report, format: Format, output: Option<&Path>) -> anyhow::Result<()> {
    let text = report.render(format);
    if format == Format::Csv && !report.summary.is_empty() {
        eprint!("{}", report.summary_lines());
    }
    match output {
        Some(p) => write_file(p, &text),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn analyze(n: u64, m: u64, intensity: f64, params: ChannelParams) -> anyhow::Result<Report> {
    check_sizes(n, m)?;
    let s = ProtocolStats::compute(&params, intensity, m, n - m)?;
    Ok(Report::single(
        vec![
            "n",
            "m",
            "intensity",
            "p_click_plus",
            "p_click_minus",
            "efficiency",
            "correct_prob",
            "success_prob",
            "quantum_samples",
            "classical_limit",
            "classical_expected",
        ],
        vec![
            n.into(),
            m.into(),
            intensity.into(),
            s.p_click_plus.into(),
            s.p_click_minus.into(),
            s.efficiency.into(),
            s.correct_prob.into(),
            s.success_prob.into(),
            s.quantum_samples.into(),
            classical_limit(n - m).into(),
            classical_expected(n - m).into(),
        ],
        Style::General,
    ))
}

fn table1(path: &Path, printed: bool) -> anyhow::Result<Report> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = table_report(&read_counts(file)?)?;
    let mut r = Report::new(
        vec![
            "L",
            "mu",
            "total_coupons",
            "detection_events",
            "single_clicks",
            "correct_clicks",
            "correct_prob",
            "efficiency",
            "success_prob",
            "classical_samples",
            "quantum_samples",
        ],
        Style::General,
    );
    for t in rows {
        let mut row: Vec<Cell> = vec![
            t.input_size.into(),
            t.mu.into(),
            t.total_coupons.into(),
            t.detection_events.into(),
            t.single_clicks.into(),
            t.correct_clicks.into(),
        ];
        if printed {
            let p = t.printed();
            row.extend([
                p.correct_prob.into(),
                p.efficiency.into(),
                p.success_prob.into(),
                p.classical_samples.into(),
                p.quantum_samples.into(),
            ]);
        } else {
            row.extend([
                t.correct_prob.into(),
                t.efficiency.into(),
                t.success_prob.into(),
                t.classical_samples.into(),
                t.quantum_samples.map_or(f64::INFINITY, |q| q).into(),
            ]);
        }
        r.push(row);
    }
    Ok(r)
}

fn window_report(
    events: &Path,
    meta: Option<&Path>,
    window: Option<(u32, u32)>,
    step: u32,
    constraint: f64,
    dark: f64,
) -> anyhow::Result<Report> {
    let meta_path = meta.map_or_else(|| sidecar(events), Path::to_path_buf);
    let meta = RunMeta::read(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
    let inst = meta.instance()?;
    let records = ingest_path(events, meta.n, meta.bin_ps)?;
    let (ws, r) = match window {
        Some((a, b)) => {
            let w = TimeWindow::new(a, b, meta.bin_ps)?;
            let ws = apply_window(&records, w, &inst, meta.periods, meta.intensity)?;
            (ws, ws.stats.quantum_samples_hat)
        }
        None => {
            let c = window_search(&records, &inst, meta.periods, meta.intensity, constraint, meta.bin_ps, step)?;
            (c.windowed, Some(c.quantum_samples))
        }
    };
    let rates = click_rates(&records, ws.window, &inst, meta.periods);
    let window_dark = dark * f64::from(ws.window.width()) / f64::from(meta.bin_ps);
    let est = estimate_from_click_rates(&rates, meta.intensity, window_dark).ok();
    let st = ws.stats;
    Ok(Report::single(
        vec![
            "window_start_ps",
            "window_end_ps",
            "detection_events",
            "periods",
            "accepted",
            "correct",
            "efficiency_hat",
            "correct_hat",
            "success_hat",
            "quantum_samples",
            "p_click_plus",
            "p_click_minus",
            "eta_eff",
            "vis_eff",
        ],
        vec![
            ws.window.start_ps.into(),
            ws.window.end_ps.into(),
            ws.detection_events.into(),
            st.periods.into(),
            st.accepted.into(),
            st.correct.into(),
            st.efficiency_hat.into(),
            st.correct_hat.into(),
            st.success_hat.into(),
            r.into(),
            est.map(|e| e.p_click_plus).into(),
            est.map(|e| e.p_click_minus).into(),
            est.map(|e| e.eta).into(),
            est.map(|e| e.visibility).into(),
        ],
        Style::General,
    ))
}

/// Resource figures from `m,intensity,total_periods,m_clicks,correct` rows.
fn blindbox_counts(path: &Path, n: usize, log: RewardLog) -> anyhow::Result<Report> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Usage(format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        cols.iter().position(|c| *c == name).ok_or_else(|| Usage(format!("missing column {name:?}")))
    };
    let (cm, ci, ct, cc) = (col("m")?, col("intensity")?, col("total_periods")?, col("correct")?);
    let mut r = Report::new(
        vec!["m", "intensity", "total_periods", "correct", "success_prob", "quantum_resources", "classical_resources"],
        Style::General,
    );
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| qcc_core::Error::Parse { line: i + 1, reason: format!("bad {what}") };
        let get = |c: usize| f.get(c).copied().unwrap_or("");
        let m: u64 = get(cm).parse().map_err(|_| bad("m"))?;
        let intensity: f64 = get(ci).parse().map_err(|_| bad("intensity"))?;
        let total: u64 = get(ct).parse().map_err(|_| bad("total_periods"))?;
        let correct: u64 = get(cc).parse().map_err(|_| bad("correct"))?;
        if total == 0 || correct > total {
            return Err(bad("counts").into());
        }
        let success = correct as f64 / total as f64;
        let q = resources_from_success(n as u64, intensity, success).ok();
        let c = classical_resources_with(n as u64, m, log)?;
        r.push(vec![
            m.into(),
            intensity.into(),
            total.into(),
            correct.into(),
            success.into(),
            q.map_or(f64::INFINITY, |q| q).into(),
            c.into(),
        ]);
    }
    Ok(r)
}
