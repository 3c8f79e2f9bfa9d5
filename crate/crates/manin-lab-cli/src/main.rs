//! Batch front end: every pipeline stage as a subcommand, driven by a JSON
//! instance description, emitting CSVs meant for downstream plotting.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 cap exhaustion,
//! 64 usage errors, 1 anything else.  Every failure prints a single
//! `error: …` line to stderr.  Reruns with identical config and seeds
//! produce byte-identical CSV bodies (nothing here timestamps anything).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use manin_lab::arch::{oscillatory_j, slab_sigma_inf, ArchError};
use manin_lab::arith::primes_upto;
use manin_lab::assemble::{
    check_hypotheses, constant_csv, counts_csv, density_inf_csv, density_p_csv,
    end_to_end_report, peyre_constant, AssembleError, RegimeDiagnostics, DEFAULT_EPS,
};
use manin_lab::config::InstanceConfig;
use manin_lab::counting::{
    beta_pair, count_points, histogram, CountError, CountReport,
};
use manin_lab::hypersum::{
    direct_sum, fit_blogb, scheme_sum, split_identity, SummandSource, SummationInstance,
};
use manin_lab::num::bigint::BigInt;
use manin_lab::num::rational::BigRational;
use manin_lab::padic::{local_density_table, singular_series};
use manin_lab::toric::{Block, DivisorClass};

#[derive(Parser)]
#[command(
    name = "manin-lab",
    version,
    about = "Exact counts, local densities, and the predicted leading constant \
             for hypersurfaces in rank-2 smooth toric varieties",
    disable_help_subcommand = true
)]
struct Cli {
    /// JSON instance description
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSVs (default: $MANIN_LAB_OUT, then ./out)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (results are worker-count invariant)
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    workers: usize,

    /// Override the Monte-Carlo seed from the config
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,

    /// Override the |x|-cap from the config
    #[arg(long = "cap-x", global = true, value_name = "N")]
    cap_x: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the fan (rays, blocks, divisor classes) and write fan.csv
    Fan,
    /// Enumerate the monomial basis of bidegree (d1, d2); write monomials.csv
    Monomials,
    /// Exact bounded-height counts over the B-grid; write counts.csv
    Count,
    /// Solution histogram over the box implied by B_max; write histogram.csv
    Histogram,
    /// p-adic density tables for p <= p_max; write density_p.csv
    DensityP,
    /// Archimedean slab estimate (plus the oscillatory cross-check when
    /// the dimension allows); write density_inf.csv
    DensityInf,
    /// Hyperbola summation over the B-grid: direct, split, and dyadic
    /// scheme totals; write hypersum.csv
    Hypersum,
    /// Assemble the predicted constant both ways; write constant.csv
    Constant,
    /// Full pipeline: counts, fit, densities, constant, diagnostics
    Report,
    /// Evaluate the asymptotic theorem's thresholds on this instance
    Check,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.config.is_none() {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(64);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Exit code for a failure: 2 for configuration problems, 3 when a cap is
/// exhausted or required, 1 otherwise.
fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CountError>() {
            return match c {
                CountError::CapRequired(_) | CountError::BoundTooLarge(_) => 3,
                _ => 1,
            };
        }
        if let Some(a) = cause.downcast_ref::<AssembleError>() {
            return match a {
                AssembleError::Config(_) => 2,
                AssembleError::Count(CountError::CapRequired(_))
                | AssembleError::Count(CountError::BoundTooLarge(_)) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<manin_lab::config::ConfigError>().is_some() {
            return 2;
        }
        if cause.is::<MemoryAdvisory>() {
            return 3;
        }
    }
    1
}

#[derive(Debug, thiserror::Error)]
#[error("histogram box {p1} x {p2} exceeds the memory advisory of {limit_mb} MB")]
struct MemoryAdvisory {
    p1: u64,
    p2: u64,
    limit_mb: u64,
}

fn run(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().expect("checked in main");
    let mut cfg = InstanceConfig::from_path(path)
        .with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = cli.seed {
        cfg.density.seed = s;
    }
    if let Some(x) = cli.cap_x {
        cfg.caps.x_cap = Some(x);
    }

    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("MANIN_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    match cli.cmd {
        Cmd::Fan => cmd_fan(&cfg, &out),
        Cmd::Monomials => cmd_monomials(&cfg, &out),
        Cmd::Count => cmd_count(&cfg, &out, cli.workers),
        Cmd::Histogram => cmd_histogram(&cfg, &out, cli.workers),
        Cmd::DensityP => cmd_density_p(&cfg, &out),
        Cmd::DensityInf => cmd_density_inf(&cfg, &out, cli.workers),
        Cmd::Hypersum => cmd_hypersum(&cfg, &out),
        Cmd::Constant => cmd_constant(&cfg, &out, cli.workers),
        Cmd::Report => cmd_report(&cfg, &out, cli.workers),
        Cmd::Check => cmd_check(&cfg),
    }
}

fn write_csv(out: &Path, name: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn block_name(b: Block) -> &'static str {
    match b {
        Block::X => "x",
        Block::Y => "y",
        Block::Z => "z",
    }
}

fn cmd_fan(cfg: &InstanceConfig, out: &Path) -> Result<()> {
    let fan = cfg.fan()?;
    let (nx, ny, nz) = fan.block_sizes();
    println!(
        "fan({}, {}, {}): blocks x/y/z of sizes {}/{}/{}, {} rays, {} maximal cones",
        fan.n(),
        fan.r(),
        fan.m(),
        nx,
        ny,
        nz,
        fan.rays().len(),
        fan.max_cones().len()
    );
    let ac = fan.anticanonical_class();
    println!("anticanonical class: ({}, {})", ac.a, ac.b);

    let mut csv = String::from("var,name,block,class_a,class_b,ray\n");
    for v in 0..fan.num_vars() {
        let cls = fan.picard_class(v);
        let ray: Vec<String> = fan.rays()[v].iter().map(|c| c.to_string()).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v,
            fan.var_name(v),
            block_name(fan.block_of(v)),
            cls.a,
            cls.b,
            ray.join(" ")
        ));
    }
    write_csv(out, "fan.csv", &csv)
}

fn cmd_monomials(cfg: &InstanceConfig, out: &Path) -> Result<()> {
    let fan = cfg.fan()?;
    let class = DivisorClass::new(cfg.d1 as i64, cfg.d2 as i64);
    let points = fan.section_polytope(class);
    let mut exps: Vec<Vec<u32>> = points
        .iter()
        .map(|u| {
            fan.monomial_of(class, u)
                .expect("polytope points give monomials")
        })
        .collect();
    exps.sort();
    println!(
        "bidegree ({}, {}) on fan({}, {}, {}): {} monomials",
        cfg.d1,
        cfg.d2,
        fan.n(),
        fan.r(),
        fan.m(),
        exps.len()
    );

    let header: Vec<String> = (0..fan.num_vars()).map(|v| format!("e{v}")).collect();
    let mut csv = header.join(",");
    csv.push('\n');
    for e in &exps {
        let row: Vec<String> = e.iter().map(|x| x.to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_csv(out, "monomials.csv", &csv)
}

fn grid_counts(
    cfg: &InstanceConfig,
    workers: usize,
) -> Result<(Vec<u64>, Vec<CountReport>)> {
    cfg.validate()?;
    let form = cfg.build_form()?;
    let openset = cfg.openset()?;
    let caps = cfg.count_caps(workers);
    let grid = cfg.b_grid_values();
    let mut counts = Vec::with_capacity(grid.len());
    for &b in &grid {
        let bound = BigRational::from_integer(BigInt::from(b));
        counts.push(count_points(&form, &bound, openset, &caps)?);
    }
    Ok((grid, counts))
}

fn cmd_count(cfg: &InstanceConfig, out: &Path, workers: usize) -> Result<()> {
    let (grid, counts) = grid_counts(cfg, workers)?;
    let openset = cfg.openset()?;
    for (b, c) in grid.iter().zip(&counts) {
        println!(
            "B = {} -> {} points ({} tuples{})",
            b,
            c.count,
            c.raw,
            if c.cap_hit { ", cap hit" } else { "" }
        );
    }
    write_csv(out, "counts.csv", &counts_csv(&grid, &counts, openset))
}

/// Largest t with t^e <= b.
fn nth_root_floor(b: u64, e: u32) -> u64 {
    if e <= 1 {
        return b;
    }
    let mut t = (b as f64).powf(1.0 / e as f64).round() as u64 + 1;
    while t > 0 && t.checked_pow(e).is_none_or(|v| v > b) {
        t -= 1;
    }
    t
}

fn cmd_histogram(cfg: &InstanceConfig, out: &Path, workers: usize) -> Result<()> {
    cfg.validate()?;
    let form = cfg.build_form()?;
    let openset = cfg.openset()?;
    let caps = cfg.count_caps(workers);
    let (b1, b2) = beta_pair(&form)?;
    let bmax = cfg.b_grid.b_max;
    let p1 = nth_root_floor(bmax, b1);
    let p2 = nth_root_floor(bmax, b2);
    if let Some(limit_mb) = cfg.caps.memory_mb {
        // worst case: every cell of the box occupied, ~48 B per map entry
        let bytes = p1.saturating_mul(p2).saturating_mul(48);
        if bytes > limit_mb.saturating_mul(1 << 20) {
            return Err(MemoryAdvisory { p1, p2, limit_mb }.into());
        }
    }
    let hist = histogram(&form, 1, p1, p2, openset, &caps)?;
    println!(
        "histogram over 1 <= k <= {}, 0 <= l <= {}: {} tuples in {} occupied cells",
        p1,
        p2,
        hist.total_raw(),
        hist.cells.len() + hist.zero_row.len()
    );

    let mut csv = String::from("k,l,count\n");
    for (&k, &h) in &hist.zero_row {
        csv.push_str(&format!("{},0,{}\n", k, h));
    }
    for (&(k, l), &h) in &hist.cells {
        csv.push_str(&format!("{},{},{}\n", k, l, h));
    }
    write_csv(out, "histogram.csv", &csv)
}

fn cmd_density_p(cfg: &InstanceConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let form = cfg.build_form()?;
    let dens = &cfg.density;
    let mut tables = Vec::new();
    for p in primes_upto(dens.p_max) {
        let t = local_density_table(&form, p, dens.n_max)?;
        println!(
            "sigma'_{} = {}{}",
            t.p,
            t.last_density(),
            if t.stabilized { " (stabilized)" } else { "" }
        );
        tables.push(t);
    }
    let series = singular_series(&form, dens.p_max, dens.n_max)?;
    println!(
        "euler products (p <= {}, N = {}): plain = {}, weighted = {}",
        dens.p_max,
        dens.n_max,
        series.product.value_f64(),
        series.weighted.value_f64()
    );
    write_csv(out, "density_p.csv", &density_p_csv(&tables))
}

fn cmd_density_inf(cfg: &InstanceConfig, out: &Path, workers: usize) -> Result<()> {
    cfg.validate()?;
    let form = cfg.build_form()?;
    let dens = &cfg.density;
    let slab = slab_sigma_inf(&form, dens.eps, dens.samples, dens.seed, workers)?;
    for level in &slab.levels {
        println!(
            "slab eps = {}: {} +/- {}",
            level.eps, level.estimate, level.stderr
        );
    }
    match oscillatory_j(&form, 4.0, 128, 16) {
        Ok(j) => println!("oscillatory J = {} +/- {} (phi = {})", j.value, j.err(), j.phi),
        Err(ArchError::DimensionCap(nv)) => {
            println!("oscillatory J: skipped ({nv} variables exceed the grid cap)")
        }
        Err(e) => return Err(e.into()),
    }
    write_csv(out, "density_inf.csv", &density_inf_csv(&slab))
}

fn cmd_hypersum(cfg: &InstanceConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let form = cfg.build_form()?;
    let (b1, b2) = beta_pair(&form)?;
    // μ must satisfy 0 < β₁μ < ½; the midpoint is the default
    let mu = 0.25 / b1 as f64;
    let inst = SummationInstance::new(SummandSource::Ones, b1, b2, 1, mu)?;

    let mut csv = String::from("P,direct,wing_l,wing_k,boxed,t1,t2,scheme_total,theta\n");
    let mut series = Vec::new();
    for &p in &cfg.b_grid_values() {
        let pr = BigRational::from_integer(BigInt::from(p));
        let direct = direct_sum(&inst, &pr);
        let parts = split_identity(&inst, &pr);
        series.push((p as f64, direct));
        let scheme = scheme_sum(&inst, &pr, 16);
        let (t1, t2, total, theta) = match &scheme {
            Ok(s) => (
                s.t1.to_string(),
                s.t2.to_string(),
                s.total.to_string(),
                s.theta.to_string(),
            ),
            Err(_) => (String::new(), String::new(), String::new(), String::new()),
        };
        println!(
            "P = {}: direct = {}, split = {}, scheme = {}",
            p,
            direct,
            parts.total(),
            if total.is_empty() { "n/a" } else { &total }
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p, direct, parts.wing_l, parts.wing_k, parts.boxed, t1, t2, total, theta
        ));
    }
    match fit_blogb(&series) {
        Ok(f) => println!(
            "fit: C_hat = {} (linear {}, rms {})",
            f.c_hat, f.linear, f.rms
        ),
        Err(e) => println!("fit: not fitted: {e}"),
    }
    write_csv(out, "hypersum.csv", &csv)
}

fn cmd_constant(cfg: &InstanceConfig, out: &Path, workers: usize) -> Result<()> {
    cfg.validate()?;
    let fan = cfg.fan()?;
    let form = cfg.build_form()?;
    let dens = &cfg.density;
    let series = singular_series(&form, dens.p_max, dens.n_max)?;
    let slab = slab_sigma_inf(&form, dens.eps, dens.samples, dens.seed, workers)?;
    let b = peyre_constant(&slab.estimate(), &series.factors, &fan, cfg.d1, cfg.d2)?;
    println!("alpha = {}, beta = {}", b.alpha, b.beta_cohom);
    println!("J = {} (slab estimate)", b.j_est.value_f64());
    println!(
        "local product over {} primes (p <= {}): {}",
        b.n_factors, b.p_max, b.local_product
    );
    println!(
        "sigma: route1 = {}, route2 = {}, agree = {}",
        b.sigma_route1, b.sigma_route2, b.agree
    );
    write_csv(out, "constant.csv", &constant_csv(&b))
}

fn cmd_report(cfg: &InstanceConfig, out: &Path, workers: usize) -> Result<()> {
    let rep = end_to_end_report(cfg, workers)?;
    print!("{}", rep.summary);
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))?;
    for (name, body) in &rep.csv {
        let path = out.join(name);
        std::fs::write(&path, body)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    let path = out.join("report.txt");
    std::fs::write(&path, &rep.summary)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_check(d: &RegimeDiagnostics) {
    println!(
        "thresholds: m1 = {} (b1 = {}), m2 = {} (u1 = {}), m_required = {} in [{}, {}]",
        d.m1, d.b1, d.m2, d.u1, d.m_required, d.m_lower, d.m_upper_bound
    );
    println!(
        "exponents: mu = {}, lambda = {}, D = {}, upsilon = {}, alpha_exp = {}",
        d.mu, d.lambda, d.big_d, d.upsilon, d.alpha_exp
    );
    println!(
        "capacities: K = {}, K1 = {}, K2 = {} (eps = {}, delta = {})",
        d.k, d.k1, d.k2, d.eps, d.delta
    );
    let flag = |ok: bool| if ok { "ok" } else { "FAIL" };
    println!(
        "checks: degrees {}, m-window {}, head {}, r-threshold {}",
        flag(d.degrees_ok),
        flag(d.m_lower_ok),
        flag(d.head_ok),
        flag(d.r_ok)
    );
    println!("applies = {}", d.applies);
    if !d.failing.is_empty() {
        println!("failing: {}", d.failing.join("; "));
    }
}

fn cmd_check(cfg: &InstanceConfig) -> Result<()> {
    let fan = cfg.fan()?;
    println!(
        "instance: fan({}, {}, {}), bidegree ({}, {}), d_tilde = {}",
        cfg.n,
        cfg.r,
        cfg.m,
        cfg.d1,
        cfg.d2,
        (cfg.d1 + cfg.d2).saturating_sub(2)
    );
    let d = check_hypotheses(&fan, cfg.d1, cfg.d2, 0, 0, DEFAULT_EPS);
    print_check(&d);
    Ok(())
}
