//! Command line front end: substitution validation, Fourier-matrix
//! evaluation, Mahler measures, cocycle exponents, the criterion
//! report and finite-patch simulation.
//!
//! Outputs are deterministic for a fixed configuration and seed; every
//! file starts with a comment header carrying the tool version and the
//! resolved configuration. Exit status 1 signals validation or
//! numerical failure (with an error JSON on stderr), status 2 a
//! resource-cap violation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use sadic_core::{
    criterion_margin, diffraction_dft_grid, forward_growth_rate, fourier_matrix,
    inverse_cocycle_pair, mahler_jensen_1d, mahler_monte_carlo, mahler_quadrature,
    pair_correlations, q_polynomials, renormalization_residual, supertile, BlockSubstitution,
    CocycleRunConfig, DirectiveSource, Error, LaurentPolynomial, Letter, MahlerEstimate, Patch,
    Result, DEFAULT_MAX_CELLS, DEFAULT_MAX_GRID_POINTS, DEFAULT_SEED,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "sadic",
    version,
    about = "Block substitutions, cocycle exponents and diffraction diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a substitution definition file and report violations.
    Validate {
        /// Path to the JSON definition (or a built-in name).
        sub: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Fourier matrix on a uniform grid of wave vectors.
    FourierEval {
        /// Substitution file or built-in name.
        #[arg(long)]
        sub: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Logarithmic Mahler measure of a polynomial.
    Mahler {
        /// `substitution:<name>` (the q-difference of a binary rule),
        /// `coeffs:c0,c1,...` (one variable) or
        /// `terms:c@e1,..,ed;c@...` (several variables).
        #[arg(long)]
        poly: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Jensen)]
        method: MethodArg,
        /// Quadrature grid per axis.
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate cocycle exponents along a directive source.
    Lyapunov {
        /// Comma-separated substitution files or built-in names.
        #[arg(long)]
        subs: String,
        /// Directive spec, e.g. `bernoulli:0.5,0.5` or `word:12`.
        #[arg(long)]
        directive: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 100)]
        t_samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Which cocycle to run: the forward Fourier products or the
        /// inverse torus-matrix pair.
        #[arg(long, value_enum, default_value_t = CocycleArg::Forward)]
        cocycle: CocycleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the spectral criterion report as JSON.
    Criterion {
        #[arg(long)]
        subs: String,
        #[arg(long)]
        directive: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 100)]
        t_samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a supertile patch and emit its statistics.
    Simulate {
        #[arg(long)]
        subs: String,
        #[arg(long)]
        directive: String,
        /// Number of substitution levels.
        #[arg(long)]
        level: usize,
        /// Seed letter of the supertile.
        #[arg(long, default_value_t = 1)]
        seed_letter: Letter,
        /// Scattering weight per letter, e.g. `1,-1` or `0.5:0.5,1`.
        #[arg(long, default_value = "1,-1")]
        weights: String,
        /// Pair-correlation window radius.
        #[arg(long, default_value_t = 32)]
        radius: i64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_GRID_POINTS)]
        max_grid: usize,
        /// Output path prefix (four files are written).
        #[arg(long)]
        out: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Jensen,
    Quad,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CocycleArg {
    Forward,
    Inverse,
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            let code = if err.is_resource_cap() { 2 } else { 1 };
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": { "kind": err.kind(), "message": err.to_string() }
                })
            );
            std::process::exit(code);
        }
    }
}

/// Resolves a substitution argument: an existing path, a path with
/// `.json` appended, a built-in name, or a file under `data/`.
fn resolve_substitution(spec: &str) -> Result<BlockSubstitution> {
    let path = Path::new(spec);
    if path.is_file() {
        return BlockSubstitution::from_json_file(path);
    }
    let with_ext = PathBuf::from(format!("{spec}.json"));
    if with_ext.is_file() {
        return BlockSubstitution::from_json_file(with_ext);
    }
    match spec.replace('-', "_").as_str() {
        "thue_morse" => return Ok(BlockSubstitution::thue_morse()),
        "period_doubling" => return Ok(BlockSubstitution::period_doubling()),
        "block_4x3" => return Ok(BlockSubstitution::block_4x3()),
        _ => {}
    }
    let in_data = PathBuf::from("data").join(format!("{spec}.json"));
    if in_data.is_file() {
        return BlockSubstitution::from_json_file(in_data);
    }
    Err(Error::BadParameter(format!(
        "cannot resolve substitution `{spec}`"
    )))
}

fn resolve_family(specs: &str) -> Result<Vec<BlockSubstitution>> {
    specs.split(',').map(resolve_substitution).collect()
}

fn parse_poly(spec: &str) -> Result<LaurentPolynomial> {
    let bad = |msg: String| Error::BadParameter(msg);
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| bad(format!("missing `:` in poly spec `{spec}`")))?;
    match head {
        "substitution" | "sub" => {
            let sub = resolve_substitution(rest)?;
            let diff = q_polynomials(&sub)?.difference();
            if diff.is_zero() {
                return Err(Error::SingularFourierFamily);
            }
            Ok(diff)
        }
        "coeffs" => {
            let mut p = LaurentPolynomial::zero(1);
            for (e, c) in rest.split(',').enumerate() {
                let c: i64 = c
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad coefficient `{c}`")))?;
                p.add_term(&[e as i64], c);
            }
            if p.is_zero() {
                return Err(Error::ZeroPolynomial);
            }
            Ok(p)
        }
        "terms" => {
            let mut p: Option<LaurentPolynomial> = None;
            for term in rest.split(';') {
                let (c, exps) = term
                    .split_once('@')
                    .ok_or_else(|| bad(format!("expected c@e1,..,ed in `{term}`")))?;
                let c: i64 = c
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad coefficient `{c}`")))?;
                let exps: Vec<i64> = exps
                    .split(',')
                    .map(|e| e.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("bad exponents `{exps}`")))?;
                let poly = p.get_or_insert_with(|| LaurentPolynomial::zero(exps.len()));
                if exps.len() != poly.dim() {
                    return Err(bad("inconsistent exponent dimensions".into()));
                }
                poly.add_term(&exps, c);
            }
            let p = p.ok_or_else(|| bad("empty term list".into()))?;
            if p.is_zero() {
                return Err(Error::ZeroPolynomial);
            }
            Ok(p)
        }
        other => Err(bad(format!("unknown poly spec kind `{other}`"))),
    }
}

fn parse_weights(spec: &str) -> Result<Vec<Complex64>> {
    spec.split(',')
        .map(|w| {
            let w = w.trim();
            let (re, im) = match w.split_once(':') {
                Some((re, im)) => (re, im),
                None => (w, "0"),
            };
            let re: f64 = re
                .parse()
                .map_err(|_| Error::BadParameter(format!("bad weight `{w}`")))?;
            let im: f64 = im
                .parse()
                .map_err(|_| Error::BadParameter(format!("bad weight `{w}`")))?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

fn header(command: &str, config: &serde_json::Value) -> String {
    format!("# sadic v{VERSION} {command} config={config}\n")
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Validate { sub, out } => cmd_validate(&sub, &out),
        Command::FourierEval { sub, grid, out } => cmd_fourier_eval(&sub, grid, &out),
        Command::Mahler {
            poly,
            method,
            grid,
            seed,
            out,
        } => cmd_mahler(&poly, method, grid, seed, &out),
        Command::Lyapunov {
            subs,
            directive,
            steps,
            t_samples,
            seed,
            threads,
            cocycle,
            out,
        } => cmd_lyapunov(&subs, &directive, steps, t_samples, seed, threads, cocycle, &out),
        Command::Criterion {
            subs,
            directive,
            steps,
            t_samples,
            seed,
            threads,
            out,
        } => cmd_criterion(&subs, &directive, steps, t_samples, seed, threads, &out),
        Command::Simulate {
            subs,
            directive,
            level,
            seed_letter,
            weights,
            radius,
            seed,
            max_cells,
            max_grid,
            out,
        } => cmd_simulate(
            &subs,
            &directive,
            level,
            seed_letter,
            &weights,
            radius,
            seed,
            max_cells,
            max_grid,
            &out,
        ),
    }
}

fn cmd_validate(spec: &str, out: &Option<PathBuf>) -> Result<i32> {
    // load without the validity gate so that the report is emitted
    let path = if Path::new(spec).is_file() {
        PathBuf::from(spec)
    } else {
        PathBuf::from(format!("{spec}.json"))
    };
    let report = if path.is_file() {
        let text = std::fs::read_to_string(&path)?;
        match BlockSubstitution::from_json_str(&text) {
            Ok(sub) => sub.validate(),
            Err(Error::InvalidSubstitution { violations, .. }) => {
                sadic_core::ValidationReport { violations }
            }
            Err(other) => return Err(other),
        }
    } else {
        resolve_substitution(spec)?.validate()
    };
    let config = serde_json::json!({ "sub": spec });
    let body = serde_json::json!({
        "meta": { "version": VERSION, "config": config },
        "valid": report.is_valid(),
        "violations": report.violations,
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&body)?))?;
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn cmd_fourier_eval(spec: &str, grid: usize, out: &Option<PathBuf>) -> Result<i32> {
    if grid == 0 {
        return Err(Error::BadParameter("grid must be positive".into()));
    }
    let sub = resolve_substitution(spec)?;
    let d = sub.dim();
    let n = sub.alphabet_size();
    let total = grid.pow(d as u32);
    let config = serde_json::json!({ "sub": spec, "grid": grid });
    let mut text = header("fourier-eval", &config);
    let mut cols: Vec<String> = (0..d).map(|c| format!("t{c}")).collect();
    for k in 1..=n {
        for j in 1..=n {
            cols.push(format!("re_{k}_{j}"));
            cols.push(format!("im_{k}_{j}"));
        }
    }
    writeln!(text, "# {}", cols.join(",")).unwrap();
    let mut index = vec![0usize; d];
    for _ in 0..total {
        let t: Vec<f64> = index.iter().map(|&i| i as f64 / grid as f64).collect();
        let b = fourier_matrix(&sub, &t);
        let mut row: Vec<String> = t.iter().map(|x| format!("{x}")).collect();
        for k in 0..n {
            for j in 0..n {
                let z = b.get(k, j);
                row.push(format!("{}", z.re));
                row.push(format!("{}", z.im));
            }
        }
        writeln!(text, "{}", row.join(",")).unwrap();
        for c in (0..d).rev() {
            index[c] += 1;
            if index[c] < grid {
                break;
            }
            index[c] = 0;
        }
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_mahler(
    poly_spec: &str,
    method: MethodArg,
    grid: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let poly = parse_poly(poly_spec)?;
    let est: MahlerEstimate = match method {
        MethodArg::Jensen => {
            if poly.dim() != 1 {
                return Err(Error::BadParameter(
                    "jensen method requires a one-variable polynomial".into(),
                ));
            }
            mahler_jensen_1d(&poly)?
        }
        MethodArg::Quad => mahler_quadrature(&poly, grid, seed)?,
        MethodArg::Mc => mahler_monte_carlo(&poly, grid.pow(poly.dim() as u32), seed)?,
    };
    let config = serde_json::json!({
        "poly": poly_spec,
        "method": serde_json::to_value(est.method)?,
        "grid": grid,
        "seed": seed,
    });
    let mut text = header("mahler", &config);
    text.push_str("# value,stderr,method,samples,excluded_cells\n");
    writeln!(
        text,
        "{},{},{},{},{}",
        est.value,
        est.standard_error,
        serde_json::to_value(est.method)?.as_str().unwrap(),
        est.samples,
        est.excluded_cells
    )
    .unwrap();
    emit(out, &text)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_lyapunov(
    subs_spec: &str,
    directive: &str,
    steps: usize,
    t_samples: usize,
    seed: u64,
    threads: usize,
    cocycle: CocycleArg,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let subs = resolve_family(subs_spec)?;
    let src = DirectiveSource::parse(directive, seed)?;
    let mut cfg = CocycleRunConfig::new(steps, t_samples, seed);
    cfg.threads = threads;
    let config = serde_json::json!({
        "subs": subs_spec, "directive": directive, "steps": steps,
        "t_samples": t_samples, "seed": seed, "threads": threads,
        "cocycle": match cocycle { CocycleArg::Forward => "forward", CocycleArg::Inverse => "inverse" },
    });
    let mut text = header("lyapunov", &config);
    let d = subs[0].dim();
    let t_cols: Vec<String> = (0..d).map(|c| format!("t{c}")).collect();
    match cocycle {
        CocycleArg::Forward => {
            let run = forward_growth_rate(&subs, &src, &cfg)?;
            writeln!(
                text,
                "# row,{},chi,volume_rate,margin,tail_min_margin",
                t_cols.join(",")
            )
            .unwrap();
            for s in &run.samples {
                let t: Vec<String> = s.t.iter().map(|x| format!("{x}")).collect();
                writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    s.index,
                    t.join(","),
                    s.chi,
                    s.volume_rate,
                    s.margin,
                    s.tail_min_margin
                )
                .unwrap();
            }
            let zeros = vec!["".to_string(); d];
            writeln!(
                text,
                "summary,{},{},{},{},",
                zeros.join(","),
                run.estimate.chi,
                run.estimate.stderr,
                run.estimate
                    .closed_form
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            )
            .unwrap();
        }
        CocycleArg::Inverse => {
            let run = inverse_cocycle_pair(&subs, &src, &cfg)?;
            writeln!(
                text,
                "# row,{},chi_plus,chi_minus,vector_rate,det_rate,resamples",
                t_cols.join(",")
            )
            .unwrap();
            for s in &run.samples {
                let t: Vec<String> = s.t.iter().map(|x| format!("{x}")).collect();
                writeln!(
                    text,
                    "{},{},{},{},{},{},{}",
                    s.index,
                    t.join(","),
                    s.chi_plus,
                    s.chi_minus,
                    s.vector_rate,
                    s.det_rate,
                    s.resamples
                )
                .unwrap();
            }
            let zeros = vec!["".to_string(); d];
            writeln!(
                text,
                "summary,{},{},{},{},{},{}",
                zeros.join(","),
                run.chi_plus.chi,
                run.chi_minus.chi,
                run.vector_rate,
                run.det_rate,
                run.dropped_samples
            )
            .unwrap();
        }
    }
    emit(out, &text)?;
    Ok(0)
}

fn cmd_criterion(
    subs_spec: &str,
    directive: &str,
    steps: usize,
    t_samples: usize,
    seed: u64,
    threads: usize,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let subs = resolve_family(subs_spec)?;
    let src = DirectiveSource::parse(directive, seed)?;
    let mut cfg = CocycleRunConfig::new(steps, t_samples, seed);
    cfg.threads = threads;
    let report = criterion_margin(&subs, &src, &cfg)?;
    let config = serde_json::json!({
        "subs": subs_spec, "directive": directive, "steps": steps,
        "t_samples": t_samples, "seed": seed, "threads": threads,
    });
    let body = serde_json::json!({
        "meta": { "version": VERSION, "config": config },
        "report": report,
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&body)?))?;
    Ok(0)
}

/// FNV-1a, used only to key the optional supertile cache.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn cache_key(subs: &[BlockSubstitution], word: &[Letter], seed_letter: Letter) -> u64 {
    let mut buf = Vec::new();
    for s in subs {
        buf.extend_from_slice(s.name().as_bytes());
        buf.push(0xff);
        for &e in s.expansion() {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        for j in 1..=s.alphabet_size() as Letter {
            buf.extend_from_slice(s.block(j));
            buf.push(0xfe);
        }
    }
    buf.push(0xfd);
    buf.extend_from_slice(word);
    buf.push(seed_letter);
    fnv1a(&buf)
}

const PATCH_MAGIC: &[u8; 8] = b"SADICPT1";

fn cache_load(dir: &Path, key: u64) -> Option<Patch> {
    let path = dir.join(format!("patch-{key:016x}.bin"));
    let bytes = std::fs::read(path).ok()?;
    if bytes.len() < 24 || &bytes[0..8] != PATCH_MAGIC {
        return None;
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().ok()?) as usize;
    let n_letters = u64::from_le_bytes(bytes[16..24].try_into().ok()?) as usize;
    let mut off = 24;
    let mut extent = Vec::with_capacity(dim);
    for _ in 0..dim {
        extent.push(i64::from_le_bytes(bytes.get(off..off + 8)?.try_into().ok()?));
        off += 8;
    }
    let volume: usize = extent.iter().map(|&e| e as usize).product();
    let cells = bytes.get(off..off + volume)?.to_vec();
    Some(Patch::from_cells(extent, cells).with_n_letters(n_letters))
}

fn cache_store(dir: &Path, key: u64, patch: &Patch) {
    if std::fs::create_dir_all(dir).is_err() {
        return;
    }
    let mut bytes = Vec::with_capacity(24 + patch.len());
    bytes.extend_from_slice(PATCH_MAGIC);
    bytes.extend_from_slice(&(patch.dim() as u64).to_le_bytes());
    bytes.extend_from_slice(&(patch.n_letters() as u64).to_le_bytes());
    for &e in patch.extent() {
        bytes.extend_from_slice(&e.to_le_bytes());
    }
    bytes.extend_from_slice(patch.cells());
    let _ = std::fs::write(dir.join(format!("patch-{key:016x}.bin")), bytes);
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    subs_spec: &str,
    directive: &str,
    level: usize,
    seed_letter: Letter,
    weights_spec: &str,
    radius: i64,
    seed: u64,
    max_cells: usize,
    max_grid: usize,
    prefix: &str,
) -> Result<i32> {
    let subs = resolve_family(subs_spec)?;
    let mut src = DirectiveSource::parse(directive, seed)?;
    let weights = parse_weights(weights_spec)?;
    let word: Vec<Letter> = (0..level).map(|_| src.next_symbol()).collect();

    let cache_dir = std::env::var_os("SADIC_CACHE_DIR").map(PathBuf::from);
    let key = cache_key(&subs, &word, seed_letter);
    let patch = match cache_dir.as_deref().and_then(|d| cache_load(d, key)) {
        Some(p) => p,
        None => {
            let p = supertile(&subs, &word, seed_letter, max_cells)?;
            if let Some(dir) = cache_dir.as_deref() {
                cache_store(dir, key, &p);
            }
            p
        }
    };

    let config = serde_json::json!({
        "subs": subs_spec, "directive": directive, "level": level,
        "seed_letter": seed_letter, "weights": weights_spec, "radius": radius,
        "seed": seed, "max_cells": max_cells, "max_grid": max_grid,
        "word": word.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(""),
    });

    // patch text
    let mut patch_text = header("simulate", &config);
    writeln!(
        patch_text,
        "# extent={} letters={}",
        patch
            .extent()
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("x"),
        patch.n_letters()
    )
    .unwrap();
    patch_text.push_str(&patch.to_rle());
    std::fs::write(format!("{prefix}.patch.txt"), &patch_text)?;

    // pair correlations
    let table = pair_correlations(&patch, radius)?;
    let d = patch.dim();
    let mut corr_text = header("simulate", &config);
    let z_cols: Vec<String> = (0..d).map(|c| format!("z{c}")).collect();
    writeln!(corr_text, "# i,j,{},count,freq", z_cols.join(",")).unwrap();
    for i in 1..=patch.n_letters() as Letter {
        for j in 1..=patch.n_letters() as Letter {
            for z in table.displacements() {
                let zs: Vec<String> = z.iter().map(|v| v.to_string()).collect();
                writeln!(
                    corr_text,
                    "{},{},{},{},{}",
                    i,
                    j,
                    zs.join(","),
                    table.count(i, j, &z),
                    table.frequency(i, j, &z)
                )
                .unwrap();
            }
        }
    }
    std::fs::write(format!("{prefix}.correlations.csv"), &corr_text)?;

    // diffraction on the aligned grid
    let grid = diffraction_dft_grid(&patch, &weights, max_grid)?;
    let mut diff_text = header("simulate", &config);
    let t_cols: Vec<String> = (0..d).map(|c| format!("t{c}")).collect();
    writeln!(diff_text, "# {},intensity", t_cols.join(",")).unwrap();
    for (t, &i) in grid.points.iter().zip(&grid.intensity) {
        let ts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
        writeln!(diff_text, "{},{}", ts.join(","), i).unwrap();
    }
    std::fs::write(format!("{prefix}.diffraction.csv"), &diff_text)?;

    // plot script
    let mut plot = String::new();
    writeln!(plot, "# gnuplot script generated by sadic v{VERSION}").unwrap();
    writeln!(plot, "set datafile separator ','").unwrap();
    writeln!(plot, "set datafile commentschars '#'").unwrap();
    if d == 1 {
        writeln!(plot, "set xlabel 't'").unwrap();
        writeln!(plot, "set ylabel 'intensity'").unwrap();
        writeln!(
            plot,
            "plot '{prefix}.diffraction.csv' using 1:2 with impulses notitle"
        )
        .unwrap();
    } else {
        writeln!(plot, "set xlabel 't0'").unwrap();
        writeln!(plot, "set ylabel 't1'").unwrap();
        writeln!(plot, "set view map").unwrap();
        writeln!(
            plot,
            "splot '{prefix}.diffraction.csv' using 1:2:3 with points pointtype 5 palette notitle"
        )
        .unwrap();
    }
    writeln!(plot, "pause -1").unwrap();
    std::fs::write(format!("{prefix}.plot.gp"), &plot)?;

    // a short summary on stdout
    let freqs = sadic_core::letter_frequencies(&patch);
    let residual = if level >= 2 {
        Some(renormalization_residual(
            &subs, &word, seed_letter, radius, max_cells,
        )?)
    } else {
        None
    };
    println!(
        "{}",
        serde_json::json!({
            "cells": patch.len(),
            "extent": patch.extent(),
            "letter_frequencies": freqs,
            "renormalization_residual": residual,
            "files": [
                format!("{prefix}.patch.txt"),
                format!("{prefix}.correlations.csv"),
                format!("{prefix}.diffraction.csv"),
                format!("{prefix}.plot.gp"),
            ],
        })
    );
    Ok(0)
}
