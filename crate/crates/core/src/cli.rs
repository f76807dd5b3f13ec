//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{
    convergence_table, cosine_grid, decay_rate, duffy_quadrature, expand, expand_polynomial,
    write_convergence_csv, DECAY_WINDOW, NON_SPECTRAL_RATE,
};
use crate::basis::{dim, ParamTriple};
use crate::boundary_lift::{lift_mu, BoundaryTrace};
use crate::coupling::{build_itilde, ItildeTable};
use crate::diffmat::{
    assemble_with, max_rel_deviation, oracle_assemble, write_coords, Tables, Which,
};
use crate::error::Error;
use crate::evolve::evolve;
use crate::fast_apply::{apply_e, apply_f, apply_y, CoeffVector, FEFactors, OpCounter, YFactors};
use crate::registry::{matvec_strategy, test_function, TestFunction};

/// Largest level accepted on the command line.
pub const MAX_LEVEL: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "wtri", version, about = "W-system on the reference triangle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write X and Y in coordinate format.
    Assemble,
    /// Time and count fast against dense products.
    MatvecBench,
    /// Coefficient decay and grid errors of an expansion.
    Converge,
    /// Integrate a' = X a with RK4 and report the norm.
    Evolve,
    /// Sample the boundary lift on the cosine grid.
    Lift,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    #[arg(long, global = true, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, global = true, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, global = true, default_value_t = 2.0)]
    pub gamma: f64,
    /// Truncation level M.
    #[arg(long, global = true, default_value_t = 8)]
    pub level: usize,
    /// Expansion level; defaults to --level.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Quadrature nodes as N1xN2.
    #[arg(long, global = true, default_value = "64x64")]
    pub quad: String,
    /// Cosine grid parameter.
    #[arg(long, global = true, default_value_t = 4)]
    pub grid: usize,
    /// Output file, or directory for `assemble`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory holding cached coupling tables.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Run internal checks and exit with status 3 if any fails.
    #[arg(long, global = true)]
    pub verify: bool,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tfinal: f64,
    /// Test function or boundary data by name.
    #[arg(long, global = true)]
    pub function: Option<String>,
}

/// Failure of a command, mapped onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Verify(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verify(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("I/O error on {}: {e}", path.display()))
}

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ParamTriple,
    pub level: usize,
    pub nmax: usize,
    pub quad: (usize, usize),
    pub opts: Opts,
}

impl RunConfig {
    pub fn from_opts(opts: &Opts) -> CliResult<Self> {
        let params = ParamTriple::new(opts.alpha, opts.beta, opts.gamma)?;
        let nmax = opts.nmax.unwrap_or(opts.level);
        for (name, v) in [("level", opts.level), ("nmax", nmax)] {
            if v > MAX_LEVEL {
                return Err(CliError::Config(format!(
                    "--{name} {v} exceeds the limit {MAX_LEVEL}"
                )));
            }
        }
        if opts.grid == 0 {
            return Err(CliError::Config("--grid must be at least 1".into()));
        }
        Ok(Self {
            params,
            level: opts.level,
            nmax,
            quad: parse_quad(&opts.quad)?,
            opts: opts.clone(),
        })
    }

    fn function(&self, default: &str) -> CliResult<&'static dyn TestFunction> {
        let name = self.opts.function.as_deref().unwrap_or(default);
        test_function(name).ok_or_else(|| CliError::Config(format!("unknown function '{name}'")))
    }
}

pub fn parse_quad(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Config(format!("--quad expects N1xN2, got '{s}'"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    let n1: usize = a.parse().map_err(|_| bad())?;
    let n2: usize = b.parse().map_err(|_| bad())?;
    if n1 == 0 || n2 == 0 {
        return Err(bad());
    }
    Ok((n1, n2))
}

/// Output sink: the `--out` file, or standard output.
fn sink(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    match out {
        Some(p) => Ok(Box::new(BufWriter::new(
            File::create(p).map_err(io_err(p))?,
        ))),
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn out_name(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"))
}

/// Run a parsed command line, writing diagnostics to `log`.
pub fn run(cli: &Cli, log: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::from_opts(&cli.opts)?;
    match cli.command {
        Command::Assemble => cmd_assemble(&cfg, log),
        Command::MatvecBench => cmd_matvec_bench(&cfg, log),
        Command::Converge => cmd_converge(&cfg, log),
        Command::Evolve => cmd_evolve(&cfg, log),
        Command::Lift => cmd_lift(&cfg, log),
    }
}

fn cache_file(dir: &Path, p: &ParamTriple, m: usize) -> PathBuf {
    dir.join(format!(
        "itilde_a{}_b{}_g{}_m{m}.bin",
        p.alpha, p.beta, p.gamma
    ))
}

/// `Ĩ` for `(p, m)`, read from the cache directory when a current entry exists.
pub fn cached_tables(
    cache: Option<&Path>,
    p: &ParamTriple,
    m: usize,
    log: &mut dyn Write,
) -> CliResult<Tables> {
    let Some(dir) = cache else {
        return Ok(Tables::new(m, p));
    };
    let path = cache_file(dir, p, m);
    if path.exists() {
        match ItildeTable::open(&path) {
            Ok(t) if t.m == m && t.params == *p => {
                let _ = writeln!(log, "cache hit {}", path.display());
                return Ok(Tables::with_itilde(t));
            }
            Ok(_) => {
                let _ = writeln!(
                    log,
                    "cache entry {} does not match, rebuilding",
                    path.display()
                );
            }
            Err(Error::Io { source, .. }) => {
                return Err(CliError::Io(format!(
                    "I/O error on {}: {source}",
                    path.display()
                )))
            }
            Err(e) => {
                let _ = writeln!(log, "ignoring stale cache {}: {e}", path.display());
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let t = build_itilde(m, p);
    t.save(&path)?;
    Ok(Tables::with_itilde(t))
}

pub fn cmd_assemble(cfg: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let (m, p) = (cfg.level, &cfg.params);
    let tables = cached_tables(cfg.opts.cache.as_deref(), p, m, log)?;
    let dir = cfg.opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let _ = writeln!(log, "D={}", dim(m));
    let mut failures = Vec::new();
    for which in [Which::X, Which::Y] {
        let op = assemble_with(which, &tables);
        let path = dir.join(format!("{}.txt", which.name()));
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        write_coords(&op.dense, &mut w).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        let skew = op.skew_residual();
        let _ = writeln!(
            log,
            "{} skew_residual={skew:e} -> {}",
            which.name(),
            path.display()
        );
        if cfg.opts.verify {
            if skew != 0.0 {
                failures.push(format!("{} is not exactly skew", which.name()));
            }
            let oracle = oracle_assemble(which, m, p)?;
            let dev = max_rel_deviation(&op.dense, &oracle);
            let _ = writeln!(log, "{} oracle max_rel_dev={dev:e}", which.name());
            if dev > 1e-9 {
                failures.push(format!(
                    "{} deviates from the quadrature oracle by {dev:e}",
                    which.name()
                ));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failures.join("; ")))
    }
}

/// Levels benchmarked by `matvec-bench`: powers of two up to `level`, then `level`.
pub fn bench_levels(level: usize) -> Vec<usize> {
    let mut ms: Vec<usize> = std::iter::successors(Some(2usize), |m| Some(m * 2))
        .take_while(|&m| m <= level)
        .collect();
    if ms.last() != Some(&level) && level >= 1 {
        ms.push(level);
    }
    ms
}

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

pub fn cmd_matvec_bench(cfg: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    const REPS: usize = 10;
    let p = &cfg.params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.opts.seed);
    let (fast, dense) = (
        matvec_strategy("fast").unwrap(),
        matvec_strategy("dense").unwrap(),
    );
    let mut w = sink(&cfg.opts.out)?;
    let name = out_name(&cfg.opts.out);
    writeln!(
        w,
        "M,D,flops_F,flops_E,flops_Y,wall_time_fast,wall_time_dense,max_rel_err_vs_dense"
    )
    .map_err(io_err(&name))?;
    let mut worst = 0.0f64;
    for m in bench_levels(cfg.level) {
        let tables = cached_tables(cfg.opts.cache.as_deref(), p, m, log)?;
        let ops = [
            assemble_with(Which::X, &tables),
            assemble_with(Which::Y, &tables),
        ];
        let fe = FEFactors::new(m, p);
        let yf = YFactors::new(m, p);
        let vecs: Vec<CoeffVector> = (0..REPS)
            .map(|_| CoeffVector {
                m,
                data: (0..dim(m)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();

        let (mut cf, mut ce, mut cy) = (OpCounter::new(), OpCounter::new(), OpCounter::new());
        apply_f(&fe, &vecs[0], &mut cf)?;
        apply_e(&fe, &vecs[0], &mut ce)?;
        apply_y(&yf, &vecs[0], &mut cy)?;

        let mut err = 0.0f64;
        let mut ctr = OpCounter::new();
        let t0 = Instant::now();
        let mut fast_out = Vec::new();
        for op in &ops {
            for v in &vecs {
                fast_out.push(fast.apply(op, v, &mut ctr)?);
            }
        }
        let t_fast = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let mut dense_out = Vec::new();
        for op in &ops {
            for v in &vecs {
                dense_out.push(dense.apply(op, v, &mut ctr)?);
            }
        }
        let t_dense = t0.elapsed().as_secs_f64();
        for (a, b) in fast_out.iter().zip(&dense_out) {
            err = err.max(max_rel_err(&a.data, &b.data));
        }
        worst = worst.max(err);
        writeln!(
            w,
            "{m},{},{},{},{},{:.16e},{:.16e},{:.16e}",
            dim(m),
            cf.ops(),
            ce.ops(),
            cy.ops(),
            t_fast,
            t_dense,
            err
        )
        .map_err(io_err(&name))?;
    }
    w.flush().map_err(io_err(&name))?;
    if cfg.opts.verify && worst > 1e-11 {
        return Err(CliError::Verify(format!(
            "fast product deviates from dense by {worst:e}"
        )));
    }
    Ok(())
}

const CONVERGE_FUNCTIONS: [&str; 3] = ["ex1_sqrt", "ex3_sine", "custom"];

pub fn cmd_converge(cfg: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let f = cfg.function("ex1_sqrt")?;
    if !CONVERGE_FUNCTIONS.contains(&f.name()) {
        return Err(CliError::Config(format!(
            "converge accepts {CONVERGE_FUNCTIONS:?}, got '{}'",
            f.name()
        )));
    }
    let p = &cfg.params;
    let quad = duffy_quadrature(cfg.quad.0, cfg.quad.1)?;
    let fx = |x: f64, y: f64| f.eval(x, y);
    let res = expand(fx, cfg.nmax, p, &quad)?;
    let rows = convergence_table(fx, &res, cfg.opts.grid)?;
    let name = out_name(&cfg.opts.out);
    let mut w = sink(&cfg.opts.out)?;
    write_convergence_csv(&rows, &mut w).map_err(io_err(&name))?;
    w.flush().map_err(io_err(&name))?;

    let last = rows.last().expect("at least one coefficient");
    let rho = decay_rate(&res.coeffs.data, DECAY_WINDOW);
    let _ = writeln!(
        log,
        "function={} N={} e_inf={:e} e_2={:e} decay_rate={rho:.4}",
        f.name(),
        last.n,
        last.e_inf,
        last.e_2
    );
    if rho >= NON_SPECTRAL_RATE {
        let _ = writeln!(
            log,
            "NON-SPECTRAL coefficient decay (rate {rho:.4} >= {NON_SPECTRAL_RATE})"
        );
    }
    let mut failed = Vec::new();
    let unit = |v: f64| v == 1.0;
    if f.name() == "ex1_sqrt" && unit(p.alpha) && unit(p.beta) && unit(p.gamma) {
        let ok = last.e_2 <= 1e-8 && last.coef_abs <= 1e-8;
        let verdict = if ok { "PASS" } else { "FAIL" };
        let _ = writeln!(
            log,
            "{verdict}: final e_2 {:e} and last coefficient {:e} against 1e-8",
            last.e_2, last.coef_abs
        );
        if !ok {
            failed.push("spectral accuracy of ex1_sqrt".to_string());
        }
    }
    if f.name() == "ex3_sine" {
        let poly = expand_polynomial(fx, cfg.nmax, p, &quad)?;
        let prow = convergence_table(fx, &poly, cfg.opts.grid)?;
        let pl = prow.last().unwrap();
        let ok = last.e_2 <= pl.e_2;
        let verdict = if ok { "PASS" } else { "FAIL" };
        let _ = writeln!(
            log,
            "{verdict}: W-system e_2 {:e} vs polynomial e_2 {:e} at N={}",
            last.e_2, pl.e_2, pl.n
        );
        if !ok {
            failed.push("W-system against polynomial comparison".to_string());
        }
    }
    if cfg.opts.verify && !failed.is_empty() {
        return Err(CliError::Verify(failed.join("; ")));
    }
    Ok(())
}

pub fn cmd_evolve(cfg: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    if !(cfg.opts.dt > 0.0) {
        return Err(CliError::Config(format!(
            "--dt must be positive, got {}",
            cfg.opts.dt
        )));
    }
    let f = cfg.function("ex3_sine")?;
    let (m, p) = (cfg.level, &cfg.params);
    let quad = duffy_quadrature(cfg.quad.0, cfg.quad.1)?;
    let a0 = expand(|x, y| f.eval(x, y), m, p, &quad)?.coeffs;
    let tables = cached_tables(cfg.opts.cache.as_deref(), p, m, log)?;
    let op = assemble_with(Which::X, &tables);
    let fast = matvec_strategy("fast").unwrap();
    if cfg.opts.verify {
        let mut c = OpCounter::new();
        let a = fast.apply(&op, &a0, &mut c)?;
        let b = op.apply_dense(&a0)?;
        let err = max_rel_err(&a.data, &b.data);
        if err > 1e-11 || op.skew_residual() != 0.0 {
            return Err(CliError::Verify(format!(
                "operator check failed: fast/dense {err:e}"
            )));
        }
    }
    let traj = evolve(&op, fast, &a0, cfg.opts.dt, cfg.opts.tfinal)?;
    let name = out_name(&cfg.opts.out);
    let mut w = sink(&cfg.opts.out)?;
    writeln!(w, "t,norm").map_err(io_err(&name))?;
    for (t, n) in &traj.norms {
        writeln!(w, "{t:.16e},{n:.16e}").map_err(io_err(&name))?;
    }
    w.flush().map_err(io_err(&name))?;
    let _ = writeln!(
        log,
        "drift={:e} relative_drift={:e}",
        traj.drift(),
        traj.relative_drift()
    );
    Ok(())
}

pub fn cmd_lift(cfg: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let f = cfg.function("exp_cos")?;
    let tr = BoundaryTrace::from_ambient(move |x, y| f.eval(x, y))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let name = out_name(&cfg.opts.out);
    let mut w = sink(&cfg.opts.out)?;
    writeln!(w, "x,y,mu").map_err(io_err(&name))?;
    let mut worst = 0.0f64;
    for pt in cosine_grid(cfg.opts.grid)? {
        let mu = lift_mu(&tr, pt.x, pt.y)?;
        if !pt.is_interior() {
            worst = worst.max((mu - tr.at(pt)).abs());
        }
        writeln!(w, "{:.16e},{:.16e},{:.16e}", pt.x, pt.y, mu).map_err(io_err(&name))?;
    }
    w.flush().map_err(io_err(&name))?;
    let _ = writeln!(log, "function={} boundary_max_dev={worst:e}", f.name());
    if cfg.opts.verify && worst > 1e-12 {
        return Err(CliError::Verify(format!(
            "lift misses the trace by {worst:e}"
        )));
    }
    Ok(())
}

/// Parse `args`, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    main_with_log(args, &mut io::stderr())
}

/// As [`main_with_args`], with diagnostics sent to `log`.
pub fn main_with_log<I, T>(args: I, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(log, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, log) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(log, "wtri: {e}");
            e.exit_code()
        }
    }
}
