//! Command-line front end. Every command renders its whole output into a
//! string first, so a failing run writes nothing.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde_json::json;

use crate::arith::{leading_constant, prime_log_sum, primes_up_to, Sign};
use crate::census::lfun::{
    estimate_c, l_values, quad_count_over, quad_count_q, smoothed_l, verify_char_sum, QuadSpec,
    ZETA2,
};
use crate::census::{
    asymptotic, fit_report, report_hyperbola, report_oracle, CensusReport, GlobalSpec, HitCache,
    Runner, P_MAX,
};
use crate::localalg::{mu_sigma_2i, tables2};
use crate::quadfield::QuadraticField;
use crate::Error;

#[derive(Parser, Debug)]
#[command(
    name = "d4cond",
    version,
    about = "Count quartic D4 fields by conductor"
)]
pub struct Cli {
    /// Worker threads for per-field enumeration.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Directory for the per-field hit cache (JSON Lines).
    #[arg(long, global = true, env = "D4COND_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Write the output here instead of stdout (replaced atomically).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Oracle,
    Hyperbola,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count D4 fields with conductor <= X.
    Count {
        #[arg(long)]
        x: u64,
        #[arg(long, value_enum, default_value = "hyperbola")]
        method: MethodArg,
        /// Local conditions (JSON); unconstrained when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Include c X in the secondary term, estimating c with this cutoff.
        #[arg(long)]
        with_c: Option<u64>,
        #[arg(long)]
        csv: bool,
    },
    /// The four 2-adic weight tables.
    Tables2 {
        #[arg(long, value_enum, default_value = "both")]
        format: TableFormat,
    },
    /// Named constants with error bounds.
    Constants {
        #[arg(long, default_value_t = P_MAX)]
        p_max: u64,
        /// Cutoff for the c estimate; 0 skips it.
        #[arg(long, default_value_t = 100_000)]
        t: u64,
    },
    /// Count quadratic extensions against the residue prediction.
    Quadcount {
        #[arg(long)]
        x: u64,
        /// Quadratic-field spec (JSON) for counts over Q.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Count over Q(sqrt D) instead of Q (complete spec only).
        #[arg(long, allow_hyphen_values = true)]
        over: Option<i64>,
    },
    /// Counts on a grid of X against main and secondary terms.
    Fit {
        /// Comma-separated ascending X values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Cutoff for the c estimate; 0 leaves c out.
        #[arg(long, default_value_t = 100_000)]
        t: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Empirical checks of the smoothed L-value and character-sum estimates.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        x: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Text,
    Both,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Schema(_) => 1,
        Error::ResourceCap(_) => 3,
        Error::Degenerate(_) | Error::Precision(_) | Error::Invariant(_) => 2,
    }
}

fn load_json(path: &Path) -> Result<serde_json::Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Schema(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn load_spec(path: Option<&PathBuf>) -> Result<GlobalSpec, Error> {
    match path {
        None => Ok(GlobalSpec::complete()),
        Some(p) => GlobalSpec::from_json(&load_json(p)?).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", p.display())),
            other => other,
        }),
    }
}

fn warn_modulus(spec: &GlobalSpec, x: u64) {
    let m = spec.modulus() as u128;
    if m.pow(4) > x as u128 {
        eprintln!("warning: constrained modulus m = {m} has m^4 > X = {x}; the asymptotic terms need m small against X^(1/4)");
    }
}

fn check_x(x: u64) -> Result<(), Error> {
    if x == 0 {
        return Err(Error::InvalidInput("X must be at least 1".into()));
    }
    Ok(())
}

/// Text and CSV renderings of the four tables.
pub fn render_tables2(format: TableFormat) -> String {
    let titles = [
        "D_K = 1 mod 8",
        "D_K = 5 mod 8",
        "D_K = 4 mod 8",
        "D_K = 0 mod 8",
    ];
    let tables = tables2();
    let mut out = String::new();
    if format != TableFormat::Text {
        out.push_str("table,d_k_mod8,v2_rel,v2_flip,weight\n");
        for (i, t) in tables.iter().enumerate() {
            for (&(a, b), w) in t {
                out.push_str(&format!("{},{},{a},{b},{w}\n", i + 1, &titles[i][6..7]));
            }
        }
    }
    if format == TableFormat::Both {
        out.push('\n');
    }
    if format != TableFormat::Csv {
        for (i, t) in tables.iter().enumerate() {
            let rows: BTreeSet<u32> = t
                .iter()
                .filter(|(_, w)| **w != Rational64::from(0))
                .map(|(k, _)| k.0)
                .collect();
            let cols: BTreeSet<u32> = t
                .iter()
                .filter(|(_, w)| **w != Rational64::from(0))
                .map(|(k, _)| k.1)
                .collect();
            out.push_str(&format!(
                "Table {}: v2(D_L/K) by v2(D_flip), {}\n",
                i + 1,
                titles[i]
            ));
            out.push_str(&format!("{:>8}", "rel\\flip"));
            for c in &cols {
                out.push_str(&format!("{c:>7}"));
            }
            out.push('\n');
            for r in &rows {
                out.push_str(&format!("{r:>8}"));
                for c in &cols {
                    let w = t.get(&(*r, *c)).copied().unwrap_or_default();
                    out.push_str(&format!("{:>7}", w.to_string()));
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

fn render_count(
    cli: &Cli,
    x: u64,
    method: MethodArg,
    spec: Option<&PathBuf>,
    with_c: Option<u64>,
    csv: bool,
) -> Result<(String, i32), Error> {
    check_x(x)?;
    let spec = load_spec(spec)?;
    warn_modulus(&spec, x);
    let c = match with_c {
        Some(t) if spec.is_complete() => Some(estimate_c(t, Sign::Both)?),
        Some(_) => {
            return Err(Error::InvalidInput(
                "--with-c needs the complete spec".into(),
            ))
        }
        None => None,
    };
    let cache = cli.cache_dir.as_deref().map(HitCache::open).transpose()?;
    let mut runner = Runner::new(cli.workers);
    if let Some(c) = &cache {
        runner = runner.with_cache(c);
    }
    let mut reports: Vec<CensusReport> = Vec::new();
    if method != MethodArg::Hyperbola {
        reports.push(report_oracle(x, &spec, &runner, c.as_ref())?);
    }
    if method != MethodArg::Oracle {
        reports.push(report_hyperbola(x, &spec, &runner, c.as_ref())?);
    }
    let mut out = String::new();
    if csv {
        out.push_str(CensusReport::CSV_HEADER);
        out.push('\n');
    }
    for r in &reports {
        out.push_str(&if csv { r.csv_row() } else { r.to_json() });
        out.push('\n');
    }
    let code = if reports.len() == 2 && reports[0].n_exact != reports[1].n_exact {
        eprintln!(
            "error: oracle {} and hyperbola {} disagree",
            reports[0].n_exact, reports[1].n_exact
        );
        2
    } else {
        0
    };
    Ok((out, code))
}

fn render_constants(p_max: u64, t: u64) -> Result<String, Error> {
    if p_max < 2 {
        return Err(Error::InvalidInput("--p-max must be at least 2".into()));
    }
    let primes = primes_up_to(p_max);
    let (a, a_err) = leading_constant(&primes, p_max);
    let (ls, ls_err) = prime_log_sum(&primes, p_max);
    let mu2: Rational64 = (0..=3).map(mu_sigma_2i).sum();
    let imu2: Rational64 = (0..=3)
        .map(|i| Rational64::from(i as i64) * mu_sigma_2i(i))
        .sum();
    let spec = GlobalSpec::complete();
    let asym = asymptotic(&spec, p_max);
    // the 2-adic log coefficient as assembled from masses, net of the p = 2
    // term 2/10 of the prime sum
    let two_adic = Rational64::from(2) * imu2 / mu2 - Rational64::new(2, 10);
    let mut lines = vec![
        format!(
            "A = {a:.15} +- {a_err:.3e} in [{:.15}, {:.15}]",
            a - a_err,
            a + a_err
        ),
        format!("prime_log_sum = {ls:.15} +- {ls_err:.3e}"),
        format!(
            "main_coefficient = 3/8 A = {:.15} +- {:.3e}",
            asym.main_coeff, asym.main_coeff_err
        ),
        format!("sum_i mu(Sigma_2^2i) = {mu2}"),
        format!("sum_i i mu(Sigma_2^2i) = {imu2}"),
        format!("two_adic_log2_coefficient = {two_adic}"),
        format!(
            "secondary_coefficient_without_c = {:.15} +- {:.3e}",
            asym.secondary_coeff, asym.secondary_coeff_err
        ),
    ];
    if t > 0 {
        let c = estimate_c(t, Sign::Both)?;
        lines.push(format!(
            "c = c+ + c-/2 = {:.9} +- {:.3e} (quadrature {:.3e}, tail {:.3e}, T = {t})",
            c.value, c.uncertainty, c.quadrature_err, c.tail_err
        ));
        if let (Some(p), Some(m)) = (&c.plus, &c.minus) {
            lines.push(format!(
                "c+ = {:.9} +- {:.3e}",
                p.value,
                p.quadrature_err + p.tail_err
            ));
            lines.push(format!(
                "c- = {:.9} +- {:.3e}",
                m.value,
                m.quadrature_err + m.tail_err
            ));
        }
        lines.push(format!(
            "c / zeta(2) = {:.9} +- {:.3e}",
            c.value / ZETA2,
            c.uncertainty / ZETA2
        ));
    }
    Ok(lines.join("\n") + "\n")
}

fn render_quadcount(x: u64, spec: Option<&PathBuf>, over: Option<i64>) -> Result<String, Error> {
    check_x(x)?;
    let report = match over {
        Some(d) => {
            if spec.is_some() {
                return Err(Error::InvalidInput(
                    "--over supports the complete spec only".into(),
                ));
            }
            quad_count_over(&QuadraticField::new(d)?, x)?
        }
        None => {
            let s = match spec {
                Some(p) => QuadSpec::from_json(&load_json(p)?)?,
                None => QuadSpec::default(),
            };
            quad_count_q(&s, x)?
        }
    };
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["ratio"] = json!(report.ratio());
    Ok(v.to_string() + "\n")
}

fn render_fit(
    cli: &Cli,
    grid: &[u64],
    spec: Option<&PathBuf>,
    t: u64,
    csv: bool,
) -> Result<String, Error> {
    for &x in grid {
        check_x(x)?;
    }
    let spec = load_spec(spec)?;
    if let Some(&x) = grid.first() {
        warn_modulus(&spec, x);
    }
    let c = if t > 0 && spec.is_complete() {
        Some(estimate_c(t, Sign::Both)?)
    } else {
        None
    };
    let cache = cli.cache_dir.as_deref().map(HitCache::open).transpose()?;
    let mut runner = Runner::new(cli.workers);
    if let Some(c) = &cache {
        runner = runner.with_cache(c);
    }
    let report = fit_report(grid, &spec, &runner, c)?;
    if csv {
        let mut out = String::from("x,n_exact,main,secondary,residual,ratio_main,ratio_full\n");
        for r in &report.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.9},{:.9}\n",
                r.x, r.n_exact, r.main, r.secondary, r.residual, r.ratio_main, r.ratio_full
            ));
        }
        Ok(out)
    } else {
        Ok(serde_json::to_string(&report).expect("report serializes") + "\n")
    }
}

fn render_verify(x: u64) -> Result<String, Error> {
    check_x(x)?;
    let mut out = String::new();
    for (d, n) in [(-4i64, 1e4), (5, 1e4), (5, 4e4), (-3, 1e4), (8, 1e4)] {
        let s = smoothed_l(d, n);
        let l1 = l_values(d).0;
        let line =
            json!({"check": "smoothed_L", "D": d, "N": n, "value": s, "L1": l1, "error": s - l1});
        out.push_str(&(line.to_string() + "\n"));
    }
    for (n, d, a) in [
        (1u64, 1u64, None),
        (4, 1, None),
        (9, 1, None),
        (1, 3, None),
        (1, 1, Some(1u8)),
        (1, 1, Some(5)),
        (1, 1, Some(4)),
        (1, 1, Some(0)),
        (3, 1, None),
        (5, 1, None),
        (7, 3, None),
    ] {
        let r = verify_char_sum(n, d, a, x)?;
        let mut v = serde_json::to_value(&r).expect("report serializes");
        v["check"] = json!("char_sum");
        out.push_str(&(v.to_string() + "\n"));
    }
    Ok(out)
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Error> {
    let tmp = path.with_extension("tmp-d4cond");
    std::fs::write(&tmp, text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Run with already-parsed arguments; returns the exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Count {
            x,
            method,
            spec,
            with_c,
            csv,
        } => render_count(cli, *x, *method, spec.as_ref(), *with_c, *csv),
        Command::Tables2 { format } => Ok((render_tables2(*format), 0)),
        Command::Constants { p_max, t } => render_constants(*p_max, *t).map(|s| (s, 0)),
        Command::Quadcount { x, spec, over } => {
            render_quadcount(*x, spec.as_ref(), *over).map(|s| (s, 0))
        }
        Command::Fit { grid, spec, t, csv } => {
            render_fit(cli, grid, spec.as_ref(), *t, *csv).map(|s| (s, 0))
        }
        Command::Verify { x } => render_verify(*x).map(|s| (s, 0)),
    };
    match result {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(p) => write_atomic(p, &text),
                None => stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::InvalidInput(e.to_string())),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parse and run; usage errors exit with 1, help and version with 0.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, stdout),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
