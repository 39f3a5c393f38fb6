//! One function per subcommand. Each returns its rendered payload.

use std::fmt::Write as _;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use spinchain::permops::{
    commutator, to_matrix, transposition_product, OperatorMatrix, Permutation,
};
use spinchain::perturb::{evolve_perturbed_with, Expansion, PerturbationSpec, SuperpositionReport};
use spinchain::sampling::{self as sampling, reconstruction_sweep, sinc, test_grid};
use spinchain::spectral::{
    bch_verify_with, chain_hamiltonian, clockwise_phase, cogwheel_hamiltonian, KappaPlacement,
    SpectralDecomposition, VerificationReport,
};
use spinchain::statespace::{make_basis, SpinConfig};
use spinchain::verify::{verify_all as run_criteria, CriterionResult};

use crate::render::{csv, float, json};
use crate::{execute, Cli, CliError, Format, Outcome};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_config(s: &str) -> Result<SpinConfig, CliError> {
    s.trim()
        .parse()
        .map_err(|e| usage(format!("configuration '{s}': {e}")))
}

#[derive(Debug, Args)]
pub struct OpsArgs {
    /// Number of spins.
    #[arg(long)]
    pub n: usize,
    /// Comma-separated transpositions in operator order, e.g. "P12,P23".
    #[arg(long)]
    pub gens: String,
}

/// Parses "P12,P23" into index pairs. Indices above 9 use an underscore: "P1_10".
pub fn parse_generators(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let mut pairs = Vec::new();
    let mut offset = 0;
    for token in text.split(',') {
        let start = offset + (token.len() - token.trim_start().len());
        let t = token.trim();
        let fail = |pos: usize, msg: &str| {
            usage(format!("generator list '{text}', position {pos}: {msg}"))
        };
        if t.is_empty() {
            return Err(fail(start, "empty generator"));
        }
        if t == "Id" {
            offset += token.len() + 1;
            continue;
        }
        let Some(body) = t.strip_prefix('P') else {
            return Err(fail(start, "expected 'P' followed by two spin indices"));
        };
        let (a, b) = if let Some((a, b)) = body.split_once('_') {
            (a, b)
        } else if body.len() == 2 && body.is_ascii() {
            body.split_at(1)
        } else {
            return Err(fail(
                start + 1,
                "expected two digits, or two indices joined by '_'",
            ));
        };
        let index = |s: &str, pos: usize| {
            s.parse::<usize>()
                .map_err(|_| fail(pos, &format!("'{s}' is not a spin index")))
        };
        let i = index(a, start + 1)?;
        let j = index(b, start + 1 + a.len())?;
        if i == j {
            return Err(fail(start, "a transposition needs two distinct spins"));
        }
        pairs.push((i.min(j), i.max(j)));
        offset += token.len() + 1;
    }
    Ok(pairs)
}

fn cycle_order(p: &Permutation) -> usize {
    let sites = p.sites();
    let mut seen = vec![false; sites.len()];
    let mut order = 1;
    for start in 0..sites.len() {
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = sites[k];
            len += 1;
        }
        if len > 0 {
            order = lcm(order, len);
        }
    }
    order
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Serialize)]
struct CommutatorRow {
    a: String,
    b: String,
    frobenius: f64,
}

#[derive(Serialize)]
struct OpsReport<'a> {
    n: usize,
    generators: Vec<String>,
    product: String,
    matrix: &'a OperatorMatrix,
    involution: bool,
    order: usize,
    power_is_identity: bool,
    cycle_notation: String,
    commutators: Vec<CommutatorRow>,
}

pub fn ops(args: &OpsArgs, format: Format) -> Result<Outcome, CliError> {
    let pairs = parse_generators(&args.gens)?;
    let ordering = make_basis(args.n)?;
    let product = transposition_product(&pairs, args.n)?;
    let matrix = to_matrix(&product, &ordering)?;
    let order = cycle_order(&product);
    let power_is_identity = matrix.pow(order as u32) == OperatorMatrix::identity(matrix.dim());
    let involution = order <= 2;
    let names: Vec<String> = pairs.iter().map(|(i, j)| name(*i, *j)).collect();
    let mut commutators = Vec::new();
    let mut distinct: Vec<(usize, usize)> = Vec::new();
    for pair in &pairs {
        if !distinct.contains(pair) {
            distinct.push(*pair);
        }
    }
    for (k, a) in distinct.iter().enumerate() {
        for b in &distinct[k + 1..] {
            let ma = to_matrix(&transposition_product(&[*a], args.n)?, &ordering)?;
            let mb = to_matrix(&transposition_product(&[*b], args.n)?, &ordering)?;
            commutators.push(CommutatorRow {
                a: name(a.0, a.1),
                b: name(b.0, b.1),
                frobenius: commutator(&ma, &mb)?.frobenius_norm(),
            });
        }
    }
    let report = OpsReport {
        n: args.n,
        generators: names,
        product: product.to_string(),
        matrix: &matrix,
        involution,
        order,
        power_is_identity,
        cycle_notation: product.cycle_notation(&ordering)?,
        commutators,
    };
    let payload = match format {
        Format::Json => json(&report)?,
        Format::Csv => {
            let rows = matrix
                .entries()
                .row_iter()
                .enumerate()
                .flat_map(|(r, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, z)| vec![r.to_string(), c.to_string(), float(z.re), float(z.im)])
                        .collect::<Vec<_>>()
                });
            csv(&["row", "col", "re", "im"], rows)?
        }
        Format::Text => {
            let flags = matrix.flags();
            let mut s = String::new();
            let _ = writeln!(
                s,
                "operator: {} (n = {}, dim = {})",
                report.product,
                args.n,
                matrix.dim()
            );
            let _ = writeln!(s, "{}", matrix.to_grid_text());
            let _ = writeln!(s, "unitary: {}", flags.unitary);
            let _ = writeln!(s, "hermitian: {}", flags.hermitian);
            let _ = writeln!(s, "permutation: {}", flags.permutation);
            let _ = writeln!(s, "involution: {involution}");
            let _ = writeln!(s, "order: {order} (U^{order} = Id: {power_is_identity})");
            let cycles = if report.cycle_notation.is_empty() {
                "()"
            } else {
                &report.cycle_notation
            };
            let _ = writeln!(s, "cycles: {cycles}");
            for c in &report.commutators {
                let _ = writeln!(s, "||[{},{}]||_F = {}", c.a, c.b, float(c.frobenius));
            }
            s
        }
    };
    Ok(Outcome {
        success: power_is_identity,
        ..Outcome::ok(payload)
    })
}

fn name(i: usize, j: usize) -> String {
    if i < 10 && j < 10 {
        format!("P{i}{j}")
    } else {
        format!("P{i}_{j}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Chain,
    Cogwheel,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "chain")]
    pub model: Model,
    /// Number of cogwheel states.
    #[arg(long, default_value_t = 3)]
    pub states: usize,
    /// Time step T of one tick.
    #[arg(long, default_value_t = 1.0)]
    pub timestep: f64,
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    re: f64,
    im: f64,
    phase: f64,
    energy: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    model: &'static str,
    states: usize,
    timestep: f64,
    residual: f64,
    eigenvalues: Vec<EigenRow>,
    eigenvectors: Vec<Vec<[f64; 2]>>,
}

pub fn spectrum(args: &SpectrumArgs, format: Format) -> Result<Outcome, CliError> {
    let (model, dec, energies): (&'static str, SpectralDecomposition, Vec<f64>) = match args.model {
        Model::Chain => {
            let h = chain_hamiltonian(args.timestep)?;
            let e = (0..8)
                .map(|k| h.diagonal.matrix().entries()[(k, k)].re)
                .collect();
            ("chain", h.spectrum, e)
        }
        Model::Cogwheel => {
            let h = cogwheel_hamiltonian(args.states, args.timestep)?;
            let n = args.states;
            let e = (0..n)
                .map(|k| h.diagonal.matrix().entries()[(k, k)].re)
                .collect();
            ("cogwheel", h.spectrum, e)
        }
    };
    let rows: Vec<EigenRow> = dec
        .eigenvalues
        .iter()
        .zip(&energies)
        .enumerate()
        .map(|(k, (z, e))| EigenRow {
            index: k + 1,
            re: z.re,
            im: z.im,
            phase: clockwise_phase(*z),
            energy: *e,
        })
        .collect();
    let report = SpectrumReport {
        model,
        states: dec.dim(),
        timestep: args.timestep,
        residual: dec.residual,
        eigenvectors: (0..dec.dim())
            .map(|k| {
                dec.eigenvectors
                    .column(k)
                    .iter()
                    .map(|z| [z.re, z.im])
                    .collect()
            })
            .collect(),
        eigenvalues: rows,
    };
    let payload = match format {
        Format::Json => json(&report)?,
        Format::Csv => csv(
            &["index", "re", "im", "phase", "energy"],
            report.eigenvalues.iter().map(|r| {
                vec![
                    r.index.to_string(),
                    float(r.re),
                    float(r.im),
                    float(r.phase),
                    float(r.energy),
                ]
            }),
        )?,
        Format::Text => {
            let mut s = format!(
                "{} spectrum, {} states, T = {}\n",
                model, report.states, args.timestep
            );
            for r in &report.eigenvalues {
                let _ = writeln!(
                    s,
                    "v{:<3} lambda = {:+.12} {:+.12}i  phase = {:+.12}  E = {:.12}",
                    r.index, r.re, r.im, r.phase, r.energy
                );
            }
            let _ = writeln!(s, "residual: {}", float(report.residual));
            s
        }
    };
    Ok(Outcome {
        success: dec.residual <= spinchain::spectral::RESIDUAL_TOLERANCE,
        ..Outcome::ok(payload)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KappaArg {
    /// κ* on P13P23 and κ on P23P13.
    Printed,
    /// κ on P13P23 and κ* on P23P13.
    Swapped,
}

#[derive(Debug, Args)]
pub struct BchArgs {
    /// Frobenius tolerance for every residual.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "printed")]
    pub kappa: KappaArg,
}

pub fn bch(args: &BchArgs, format: Format) -> Result<Outcome, CliError> {
    let placement = match args.kappa {
        KappaArg::Printed => KappaPlacement::Printed,
        KappaArg::Swapped => KappaPlacement::Swapped,
    };
    let report = bch_verify_with(args.tol, placement)?;
    let payload = match format {
        Format::Json => json(&report)?,
        Format::Csv => bch_csv(&report)?,
        Format::Text => {
            let mut s = format!("{}\n", report.identity_name);
            for (k, v) in &report.residuals {
                let verdict = if *v <= report.tolerance { "ok" } else { "FAIL" };
                let _ = writeln!(s, "  {k:<14} {}  {verdict}", float(*v));
            }
            for (k, v) in &report.diagnostics {
                let _ = writeln!(s, "  ({k}) {}", float(*v));
            }
            let _ = writeln!(
                s,
                "tolerance {}: {}",
                float(report.tolerance),
                if report.pass { "PASS" } else { "FAIL" }
            );
            s
        }
    };
    Ok(Outcome {
        success: report.pass,
        ..Outcome::ok(payload)
    })
}

fn bch_csv(report: &VerificationReport) -> Result<String, CliError> {
    let mut header = vec!["identity_name"];
    let mut row = vec![report.identity_name.clone()];
    for (k, v) in &report.residuals {
        header.push(k);
        row.push(float(*v));
    }
    header.extend(["tolerance", "pass"]);
    row.extend([float(report.tolerance), report.pass.to_string()]);
    csv(&header, [row])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    /// −exp(−iπ/2·P12(1+ε))·exp(−iπ/2·P23(1+ε)).
    OperatorExact,
    /// Û − i(π/2)ε(P12 + P23).
    OperatorFirstOrder,
    /// exp(−iĤT(1+ε)) by matrix exponential.
    HamiltonianExact,
    /// Û − i(2π/3)ε(Û + κP12P13 + κ*Id).
    HamiltonianFirstOrder,
    /// exp(−iĤT(1+ε)) assembled from the perturbed eigenvalues.
    ExactHamiltonian,
    /// Ĥ + diag{c₁,…,c₈}; needs --c.
    Diagonal,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    /// Eight comma-separated complex shifts ("0.1", "0.1+0.05i") for the diagonal scheme.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<String>>,
    /// Time step T for the diagonal scheme.
    #[arg(long, default_value_t = 1.0)]
    pub timestep: f64,
    /// Accept |ε| > 1.
    #[arg(long)]
    pub unchecked: bool,
}

fn parse_shifts(items: &[String]) -> Result<Vec<Complex64>, CliError> {
    items
        .iter()
        .enumerate()
        .map(|(k, s)| {
            s.trim().parse::<Complex64>().map_err(|_| {
                usage(format!(
                    "--c entry {} ('{s}') is not a complex number",
                    k + 1
                ))
            })
        })
        .collect()
}

fn build_spec(args: &SchemeArgs, epsilon: Option<f64>) -> Result<PerturbationSpec, CliError> {
    if args.scheme == Scheme::Diagonal {
        let c = args
            .c
            .as_ref()
            .ok_or_else(|| usage("the diagonal scheme needs --c with eight entries"))?;
        return Ok(PerturbationSpec::diagonal(
            &parse_shifts(c)?,
            args.timestep,
        )?);
    }
    if args.c.is_some() {
        return Err(usage("--c only applies to the diagonal scheme"));
    }
    let epsilon = epsilon.ok_or_else(|| usage("this scheme needs --eps"))?;
    if args.unchecked {
        if !epsilon.is_finite() {
            return Err(usage("epsilon must be finite"));
        }
        return Ok(match args.scheme {
            Scheme::OperatorExact => PerturbationSpec::OperatorLevel {
                epsilon,
                expansion: Expansion::Exact,
            },
            Scheme::OperatorFirstOrder => PerturbationSpec::OperatorLevel {
                epsilon,
                expansion: Expansion::FirstOrder,
            },
            Scheme::HamiltonianExact => PerturbationSpec::HamiltonianLevel {
                epsilon,
                expansion: Expansion::Exact,
            },
            Scheme::HamiltonianFirstOrder => PerturbationSpec::HamiltonianLevel {
                epsilon,
                expansion: Expansion::FirstOrder,
            },
            Scheme::ExactHamiltonian | Scheme::Diagonal => {
                PerturbationSpec::ExactExponentScale { epsilon }
            }
        });
    }
    Ok(match args.scheme {
        Scheme::OperatorExact => PerturbationSpec::operator_level(epsilon, Expansion::Exact)?,
        Scheme::OperatorFirstOrder => {
            PerturbationSpec::operator_level(epsilon, Expansion::FirstOrder)?
        }
        Scheme::HamiltonianExact => PerturbationSpec::hamiltonian_level(epsilon, Expansion::Exact)?,
        Scheme::HamiltonianFirstOrder => {
            PerturbationSpec::hamiltonian_level(epsilon, Expansion::FirstOrder)?
        }
        Scheme::ExactHamiltonian | Scheme::Diagonal => {
            PerturbationSpec::exact_exponent_scale(epsilon)?
        }
    })
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Input configuration, e.g. "uud".
    #[arg(long = "in")]
    pub input: String,
    /// Tolerance on 1 − max probability for a classical verdict.
    #[arg(long, default_value_t = spinchain::perturb::DEFAULT_CLASSICALITY_THRESHOLD)]
    pub threshold: f64,
}

pub fn perturb(args: &PerturbArgs, format: Format) -> Result<Outcome, CliError> {
    let spec = build_spec(&args.scheme, args.eps)?;
    let input = parse_config(&args.input)?;
    let report = evolve_perturbed_with(&input, &spec, args.threshold)?;
    let payload = match format {
        Format::Json => json(&report)?,
        Format::Csv => csv(
            &["config_out", "re", "im", "prob"],
            report.amplitudes.iter().map(|a| {
                vec![
                    a.config.to_string(),
                    float(a.re),
                    float(a.im),
                    float(a.prob),
                ]
            }),
        )?,
        Format::Text => perturb_text(&report),
    };
    Ok(Outcome {
        warnings: report.warnings.clone(),
        ..Outcome::ok(payload)
    })
}

fn perturb_text(report: &SuperpositionReport) -> String {
    let mut s = format!("{} applied to {}\n", report.scheme, report.input);
    for a in &report.amplitudes {
        let _ = writeln!(
            s,
            "  {}  {:+.15} {:+.15}i  p = {:.15}",
            a.config, a.re, a.im, a.prob
        );
    }
    let _ = writeln!(
        s,
        "max probability {:.15} on {}: {}",
        report.max_prob,
        report.dominant,
        if report.classical {
            "ontological"
        } else {
            "superposition"
        }
    );
    s
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Vec<f64>,
    /// Comma-separated input configurations.
    #[arg(long = "in", value_delimiter = ',', required = true)]
    pub inputs: Vec<String>,
}

#[derive(Serialize)]
struct SweepLine {
    epsilon: Option<f64>,
    config_in: String,
    config_out: String,
    re: f64,
    im: f64,
    prob: f64,
}

pub fn sweep(args: &SweepArgs, format: Format) -> Result<Outcome, CliError> {
    let inputs: Vec<SpinConfig> = args
        .inputs
        .iter()
        .map(|s| parse_config(s))
        .collect::<Result<_, _>>()?;
    let epsilons: Vec<Option<f64>> = if args.scheme.scheme == Scheme::Diagonal {
        if !args.eps.is_empty() {
            return Err(usage("the diagonal scheme takes --c, not --eps"));
        }
        vec![None]
    } else {
        if args.eps.is_empty() {
            return Err(usage("--eps needs at least one value"));
        }
        args.eps.iter().map(|e| Some(*e)).collect()
    };
    let mut lines = Vec::new();
    for eps in epsilons {
        let spec = build_spec(&args.scheme, eps)?;
        for input in &inputs {
            let report = evolve_perturbed_with(
                input,
                &spec,
                spinchain::perturb::DEFAULT_CLASSICALITY_THRESHOLD,
            )?;
            lines.extend(report.amplitudes.iter().map(|a| SweepLine {
                epsilon: eps,
                config_in: input.to_string(),
                config_out: a.config.to_string(),
                re: a.re,
                im: a.im,
                prob: a.prob,
            }));
        }
    }
    let payload = match format {
        Format::Json => json(&lines)?,
        Format::Csv | Format::Text => csv(
            &["epsilon", "config_in", "config_out", "re", "im", "prob"],
            lines.iter().map(|l| {
                vec![
                    l.epsilon.map(float).unwrap_or_default(),
                    l.config_in.clone(),
                    l.config_out.clone(),
                    float(l.re),
                    float(l.im),
                    float(l.prob),
                ]
            }),
        )?,
    };
    Ok(Outcome::ok(payload))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Signal {
    /// cos(ω₀t)
    Cos,
    /// sin(ω₀t)
    Sin,
    /// exp(iω₀t)
    Exp,
    /// sin(ω₀t)/(ω₀t)
    Sinc,
    /// 1
    One,
}

impl Signal {
    fn eval(self, omega0: f64, t: f64) -> Complex64 {
        match self {
            Signal::Cos => Complex64::new((omega0 * t).cos(), 0.0),
            Signal::Sin => Complex64::new((omega0 * t).sin(), 0.0),
            Signal::Exp => Complex64::from_polar(1.0, omega0 * t),
            Signal::Sinc => Complex64::new(sinc(omega0 * t), 0.0),
            Signal::One => Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SampleArgs {
    /// Bandwidth ω_max; samples are spaced π/ω_max apart.
    #[arg(long)]
    pub omega_max: f64,
    #[arg(long, value_enum, default_value = "cos")]
    pub signal: Signal,
    /// Signal frequency ω₀.
    #[arg(long, default_value_t = 1.0)]
    pub omega0: f64,
    /// Samples are taken for |n| ≤ window.
    #[arg(long, default_value_t = 50)]
    pub window: i64,
    /// Reconstruct on "a:b:count" evenly spaced points instead of listing samples.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Reconstruct at these comma-separated times instead of listing samples.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Option<Vec<f64>>,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || usage(format!("--grid '{text}' must look like a:b:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok(test_grid(a, b, n, 0.0))
}

#[derive(Serialize)]
struct SampleReport<'a, T: Serialize> {
    signal: &'a str,
    omega0: f64,
    omega_max: f64,
    spacing: f64,
    window: (i64, i64),
    aliased: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_error: Option<f64>,
    rows: T,
}

pub fn sample(args: &SampleArgs, format: Format) -> Result<Outcome, CliError> {
    if args.window < 0 {
        return Err(usage("--window must be non-negative"));
    }
    let (signal, omega0) = (args.signal, args.omega0);
    let f = move |t: f64| signal.eval(omega0, t);
    let sampled = sampling::sample(f, args.omega_max, -args.window..=args.window)?;
    let aliased = signal != Signal::One && omega0.abs() > args.omega_max;
    let mut warnings = Vec::new();
    if aliased {
        warnings.push(format!(
            "signal frequency {omega0} exceeds omega_max {}; off-node reconstruction will not converge",
            args.omega_max
        ));
    }
    let name = format!("{:?}", args.signal).to_lowercase();
    let grid = match (&args.grid, &args.at) {
        (Some(_), Some(_)) => return Err(usage("use either --grid or --at")),
        (Some(g), None) => Some(parse_grid(g)?),
        (None, Some(at)) => Some(at.clone()),
        (None, None) => None,
    };
    let payload = match grid {
        None => {
            let rows = sampled.rows();
            match format {
                Format::Json => json(&SampleReport {
                    signal: &name,
                    omega0,
                    omega_max: args.omega_max,
                    spacing: sampled.spacing(),
                    window: sampled.index_range(),
                    aliased,
                    max_abs_error: None,
                    rows: &rows,
                })?,
                _ => csv(
                    &["n", "t_n", "re", "im"],
                    rows.iter()
                        .map(|r| vec![r.n.to_string(), float(r.t_n), float(r.re), float(r.im)]),
                )?,
            }
        }
        Some(points) => {
            let oracle = &f as &dyn Fn(f64) -> Complex64;
            let sweep = reconstruction_sweep(&sampled, &points, Some(oracle));
            let max_err = sweep.iter().filter_map(|p| p.abs_error).fold(0.0, f64::max);
            match format {
                Format::Json => json(&SampleReport {
                    signal: &name,
                    omega0,
                    omega_max: args.omega_max,
                    spacing: sampled.spacing(),
                    window: sampled.index_range(),
                    aliased,
                    max_abs_error: Some(max_err),
                    rows: &sweep,
                })?,
                _ => csv(
                    &["t", "re", "im", "abs_error"],
                    sweep.iter().map(|p| {
                        vec![
                            float(p.t),
                            float(p.re),
                            float(p.im),
                            p.abs_error.map(float).unwrap_or_default(),
                        ]
                    }),
                )?,
            }
        }
    };
    Ok(Outcome {
        warnings,
        ..Outcome::ok(payload)
    })
}

/// Command lines whose payloads are compared across repeated runs.
pub const DETERMINISM_PROBES: [&[&str]; 5] = [
    &["ops", "--n", "3", "--gens", "P12,P23", "--format", "json"],
    &["spectrum", "--model", "chain"],
    &["bch", "--tol", "1e-10"],
    &[
        "sweep",
        "--scheme",
        "exact-hamiltonian",
        "--eps",
        "0.01,0.05,0.1",
        "--in",
        "uud,udu",
    ],
    &[
        "sample",
        "--omega-max",
        "2",
        "--window",
        "20",
        "--grid",
        "-3:3:7",
    ],
];

/// Renders a command line in-process.
pub fn render_probe(args: &[&str]) -> Result<String, String> {
    let cli = <Cli as clap::Parser>::try_parse_from(
        std::iter::once("spinchain").chain(args.iter().copied()),
    )
    .map_err(|e| e.to_string())?;
    execute(&cli).map(|o| o.payload).map_err(|e| e.to_string())
}

fn in_process_determinism() -> Result<(), String> {
    for probe in DETERMINISM_PROBES {
        if render_probe(probe)? != render_probe(probe)? {
            return Err(format!(
                "payload of '{}' differs between runs",
                probe.join(" ")
            ));
        }
    }
    Ok(())
}

pub fn verify_all(format: Format) -> Result<Outcome, CliError> {
    let results = run_criteria(Some(&in_process_determinism));
    let success = results.iter().all(|r| r.pass);
    let payload = match format {
        Format::Json => json(&results)?,
        Format::Csv => csv(
            &[
                "id",
                "title",
                "pass",
                "check",
                "value",
                "bound",
                "check_pass",
            ],
            results.iter().flat_map(|r| {
                r.checks.iter().map(move |c| {
                    vec![
                        r.id.to_string(),
                        r.title.to_string(),
                        r.pass.to_string(),
                        c.name.clone(),
                        float(c.value),
                        c.bound.clone(),
                        c.pass.to_string(),
                    ]
                })
            }),
        )?,
        Format::Text => summary_table(&results),
    };
    Ok(Outcome {
        success,
        ..Outcome::ok(payload)
    })
}

/// One line per criterion, indented notes, and a closing count.
pub fn summary_table(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(s, "{r}");
        for note in &r.notes {
            for line in note.lines() {
                let _ = writeln!(s, "        {line}");
            }
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let _ = writeln!(s, "{passed}/{} criteria passed", results.len());
    s
}
