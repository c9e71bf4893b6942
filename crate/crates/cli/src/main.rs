use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use schottky::forms::{sample_points, BersPoles};
use schottky::schottky_core::read_params;
use schottky::variational::{run_identity_suite, CheckConfig, FiniteDiffConfig};
use schottky::voa_correlators::{lattice_partition, CorrelatorKind, CorrelatorRecord, CorrelatorRequest, LatticeSpec};
use schottky::zhu_matrix::heisenberg_partition;
use schottky::{Error, SchottkyParams, SurfaceFunctionSet, TruncationPolicy};

mod checks;

#[derive(Parser, Debug)]
#[command(name = "schottky", version, about = "Forms, periods and correlators on Schottky uniformized surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Parameter file (key = value lines or JSON)
    #[arg(long)]
    params: PathBuf,
    /// Maximal word length of the Poincaré sums
    #[arg(long = "L")]
    word_length: Option<usize>,
    /// Mode cutoff of the Zhu matrices
    #[arg(long = "M")]
    mode_cutoff: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Upper bound on worker threads
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormKind {
    Nu,
    Omega,
    S,
    Psi1,
    Psi2,
    Bers,
    Lambda,
    Theta,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    Heisenberg,
    Virasoro1,
    Virasoro2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that the discs are disjoint and report the pair margins
    Validate(Common),
    /// Period matrix with its error budget
    Periods(Common),
    /// Evaluate forms at points
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        form: FormKind,
        /// Point x as `re,im`; repeatable
        #[arg(long = "x", allow_hyphen_values = true)]
        xs: Vec<String>,
        /// Second point y as `re,im`
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        /// Evaluate at this many points spread over the fundamental domain
        #[arg(long)]
        grid: Option<usize>,
        /// Weight N of Λ_N, Ψ_N or Θ
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Restrict ν or Θ to one handle
        #[arg(long)]
        a: Option<usize>,
    },
    /// Heisenberg partition function, or a lattice partition function
    Partition {
        #[command(flatten)]
        common: Common,
        /// Lattice JSON `{"rank": d, "gram": [[...]]}`
        #[arg(long)]
        lattice: Option<PathBuf>,
    },
    /// Heisenberg or Virasoro correlation functions
    Correlator {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Number of insertion points placed automatically
        #[arg(long)]
        n: Option<usize>,
        /// Insertion points `re,im;re,im;...`
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Run the identity suite
    Check {
        #[command(flatten)]
        common: Common,
        /// Finite-difference step
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        /// Relative residual tolerance of the differential identities
        #[arg(long, default_value_t = 1e-3)]
        identity_tol: f64,
    },
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Input(String),
    Compute(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CmdResult = std::result::Result<Output, Failure>;

/// What a command produced: JSON, the CSV rendering and the exit status.
struct Output {
    json: Value,
    csv: String,
    status: u8,
    table: Option<String>,
}

impl Output {
    fn ok(json: Value, csv: String) -> Self {
        Output {
            json,
            csv,
            status: 0,
            table: None,
        }
    }
}

fn parse_point(s: &str) -> std::result::Result<C64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Failure::Input(format!("cannot read point `{s}`")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Failure::Input(format!("point `{s}` must be `re,im`"))),
    }
}

fn c_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn policy(common: &Common) -> std::result::Result<TruncationPolicy, Failure> {
    let mut p = match common.word_length {
        Some(l) => TruncationPolicy::with_word_length(l),
        None => TruncationPolicy::default(),
    };
    if let Some(m) = common.mode_cutoff {
        p.mode_cutoff = m;
    }
    if let Some(t) = common.tol {
        p.tol = t;
    }
    p.validate().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(p)
}

fn load(common: &Common) -> std::result::Result<SchottkyParams, Failure> {
    read_params(&common.params).map_err(|e| Failure::Input(e.to_string()))
}

/// Parameters and truncation, refusing invalid surfaces before any computation.
fn surface(common: &Common) -> std::result::Result<SurfaceFunctionSet, Failure> {
    let sp = load(common)?;
    let p = policy(common)?;
    sp.ensure_valid().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(SurfaceFunctionSet::new(sp, p)?)
}

fn cmd_validate(common: &Common) -> CmdResult {
    let sp = load(common)?;
    let r = sp.validate();
    let mut csv = csv_line(&["a", "b", "distance", "radius_sum", "margin"].map(String::from));
    for p in &r.pairs {
        csv += &csv_line(&[
            p.a.to_string(),
            p.b.to_string(),
            format!("{:?}", p.distance),
            format!("{:?}", p.radius_sum),
            format!("{:?}", p.margin),
        ]);
    }
    let json = serde_json::to_value(&r).expect("report serializes");
    let mut out = Output::ok(json, csv);
    if !r.valid {
        out.status = 1;
        let names: Vec<String> = r.violations.iter().map(|p| format!("({}, {})", p.a, p.b)).collect();
        out.table = Some(format!("invalid: overlapping discs {}\n", names.join(", ")));
    }
    Ok(out)
}

fn cmd_periods(common: &Common) -> CmdResult {
    let set = surface(common)?;
    let pm = set.period_matrix()?;
    let g = pm.genus();
    let mut csv = csv_line(&["a", "b", "re", "im"].map(String::from));
    for a in 1..=g {
        for b in 1..=g {
            let v = pm.get(a, b);
            csv += &csv_line(&[a.to_string(), b.to_string(), format!("{:?}", v.re), format!("{:?}", v.im)]);
        }
    }
    let json = json!({
        "genus": g,
        "omega": pm.omega.iter().map(|r| r.iter().map(|z| c_json(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "im_positive_definite": pm.im_positive_definite,
        "asymmetry": pm.asymmetry,
        "tail_estimate": pm.tail_estimate,
        "quadrature_error": pm.quadrature_error,
        "integer_shift": pm.integer_shift,
    });
    Ok(Output::ok(json, csv))
}

#[derive(Serialize)]
struct EvalRecord {
    form: String,
    x: [f64; 2],
    y: Option<[f64; 2]>,
    a: Option<usize>,
    ell: Option<usize>,
    value: [f64; 2],
    tail_estimate: f64,
}

fn cmd_eval(
    common: &Common,
    form: FormKind,
    xs: &[String],
    y: &Option<String>,
    grid: Option<usize>,
    n: u32,
    a: Option<usize>,
) -> CmdResult {
    let set = surface(common)?;
    let sp = set.params().clone();
    let mut points: Vec<C64> = xs.iter().map(|s| parse_point(s)).collect::<std::result::Result<_, _>>()?;
    if let Some(k) = grid {
        points.extend(sample_points(&sp, k, 1.5));
    }
    if points.is_empty() {
        return Err(Failure::Input("give --x or --grid".into()));
    }
    let y = match y {
        Some(s) => parse_point(s)?,
        None => {
            // a point of the domain away from every x
            let cands = sample_points(&sp, points.len() + 8, 2.0);
            *cands
                .iter()
                .max_by(|p, q| {
                    let d = |z: &C64| points.iter().map(|x| (x - z).norm()).fold(f64::INFINITY, f64::min);
                    d(p).total_cmp(&d(q))
                })
                .expect("candidates")
        }
    };
    let handles: Vec<usize> = match a {
        Some(a) => vec![a],
        None => (1..=sp.genus()).collect(),
    };
    let mut recs = Vec::new();
    let pt = |z: C64| [z.re, z.im];
    for &x in &points {
        let mut push = |name: &str, yv: Option<C64>, a: Option<usize>, ell: Option<usize>, v: C64, t: f64| {
            recs.push(EvalRecord {
                form: name.to_string(),
                x: pt(x),
                y: yv.map(pt),
                a,
                ell,
                value: [v.re, v.im],
                tail_estimate: t,
            })
        };
        match form {
            FormKind::Nu => {
                for &h in &handles {
                    let v = set.holomorphic_one_form(h, x)?;
                    push("nu", None, Some(h), None, v.value, v.tail_estimate);
                }
            }
            FormKind::Omega => {
                let v = set.bidifferential_omega(x, y)?;
                push("omega", Some(y), None, None, v.value, v.tail_estimate);
            }
            FormKind::S => {
                let v = set.projective_connection(x)?;
                push("s", None, None, None, v.value, v.tail_estimate);
            }
            FormKind::Psi1 => {
                let v = set.psi1_third_kind(x, y)?;
                push("psi1", Some(y), None, None, v.value, v.tail_estimate);
            }
            FormKind::Psi2 | FormKind::Bers => {
                let v = set.psi_n_bers(x, y, n)?;
                push("bers", Some(y), None, None, v.value, v.tail_estimate);
            }
            FormKind::Lambda => {
                let v = set.lambda_n(x, y, n)?;
                push("lambda", Some(y), None, None, v.value, v.tail_estimate);
            }
            FormKind::Theta => {
                let th = set.theta_set(n, x, &BersPoles::FixedPoints)?;
                for &h in &handles {
                    for ell in 0..(2 * n as usize - 1) {
                        let t = th.tail_estimates[h - 1][ell] + th.quadrature_errors[h - 1][ell];
                        push("theta", None, Some(h), Some(ell), th.get(h, ell), t);
                    }
                }
            }
        }
    }
    let opt = |v: Option<usize>| v.map(|k| k.to_string()).unwrap_or_default();
    let mut csv = csv_line(
        &["form", "x_re", "x_im", "y_re", "y_im", "a", "ell", "value_re", "value_im", "tail_estimate"].map(String::from),
    );
    for r in &recs {
        let (yr, yi) = r.y.map(|p| (format!("{:?}", p[0]), format!("{:?}", p[1]))).unwrap_or_default();
        csv += &csv_line(&[
            r.form.clone(),
            format!("{:?}", r.x[0]),
            format!("{:?}", r.x[1]),
            yr,
            yi,
            opt(r.a),
            opt(r.ell),
            format!("{:?}", r.value[0]),
            format!("{:?}", r.value[1]),
            format!("{:?}", r.tail_estimate),
        ]);
    }
    Ok(Output::ok(json!({ "records": recs }), csv))
}

fn cmd_partition(common: &Common, lattice: &Option<PathBuf>) -> CmdResult {
    let set = surface(common)?;
    let m = set.policy().mode_cutoff;
    let mut csv = csv_line(&["quantity", "value_re", "value_im", "tail_estimate"].map(String::from));
    let row = |name: &str, v: C64, t: f64| csv_line(&[name.into(), format!("{:?}", v.re), format!("{:?}", v.im), format!("{t:?}")]);
    match lattice {
        None => {
            let z = heisenberg_partition(set.params(), m)?;
            csv += &row("Z_M", z.value, z.tail_estimate);
            Ok(Output::ok(
                json!({
                    "Z_M": c_json(z.value),
                    "tail_estimate": z.tail_estimate,
                    "mode_cutoff": z.cutoff,
                    "spectral_radius": z.spectral_radius,
                }),
                csv,
            ))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let lat = LatticeSpec::from_json(&text).map_err(|e| Failure::Input(e.to_string()))?;
            let lp = lattice_partition(&set, &lat)?;
            csv += &row("Z_M", lp.heisenberg.value, lp.heisenberg.tail_estimate);
            csv += &row("theta", lp.theta.value, lp.theta.tail_bound);
            csv += &row("Z_L", lp.value, lp.tail_estimate);
            Ok(Output::ok(
                json!({
                    "lattice": lat,
                    "Z_L": c_json(lp.value),
                    "tail_estimate": lp.tail_estimate,
                    "theta": c_json(lp.theta.value),
                    "theta_tail_bound": lp.theta.tail_bound,
                    "theta_radius": lp.theta.radius,
                    "theta_terms": lp.theta.terms,
                    "Z_M": c_json(lp.heisenberg.value),
                    "Z_M_tail_estimate": lp.heisenberg.tail_estimate,
                    "omega": lp.omega.iter().map(|r| r.iter().map(|z| c_json(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                }),
                csv,
            ))
        }
    }
}

fn cmd_correlator(common: &Common, kind: KindArg, n: Option<usize>, points: &Option<String>) -> CmdResult {
    let set = surface(common)?;
    let kind = match kind {
        KindArg::Heisenberg => CorrelatorKind::Heisenberg,
        KindArg::Virasoro1 => CorrelatorKind::Virasoro1,
        KindArg::Virasoro2 => CorrelatorKind::Virasoro2,
    };
    let pts: Vec<C64> = match (points, n) {
        (Some(s), _) => s.split(';').filter(|t| !t.trim().is_empty()).map(parse_point).collect::<std::result::Result<_, _>>()?,
        (None, Some(k)) => sample_points(set.params(), k, 2.0),
        (None, None) => match kind {
            CorrelatorKind::Virasoro1 => sample_points(set.params(), 1, 2.0),
            CorrelatorKind::Virasoro2 => sample_points(set.params(), 2, 2.0),
            CorrelatorKind::Heisenberg => return Err(Failure::Input("give --n or --points".into())),
        },
    };
    let req = CorrelatorRequest { kind, points: pts };
    req.validate(&set).map_err(|e| match e {
        Error::InvalidParameter(m) | Error::Domain(m) => Failure::Input(m),
        other => Failure::Compute(other),
    })?;
    let v = req.evaluate(&set)?;
    let rec = CorrelatorRecord::new(&req.points, &v);
    let kind_name = serde_json::to_value(kind).expect("kind serializes");
    let pts_csv: Vec<String> = rec.points.iter().map(|p| format!("{:?} {:?}", p[0], p[1])).collect();
    let csv = csv_line(&["kind", "points", "value_re", "value_im", "tail_estimate"].map(String::from))
        + &csv_line(&[
            kind_name.as_str().unwrap_or_default().to_string(),
            pts_csv.join(";"),
            format!("{:?}", rec.value_re),
            format!("{:?}", rec.value_im),
            format!("{:?}", rec.tail_estimate),
        ]);
    let mut json = serde_json::to_value(&rec).expect("record serializes");
    json["kind"] = kind_name;
    Ok(Output::ok(json, csv))
}

fn cmd_check(common: &Common, step: f64, identity_tol: f64) -> CmdResult {
    let set = surface(common)?;
    let mut cfg = CheckConfig::for_surface(&set);
    cfg.fd = FiniteDiffConfig::new(step).map_err(|e| Failure::Input(e.to_string()))?;
    cfg.tolerance = identity_tol;
    let mut rows: Vec<checks::Row> = checks::forms_invariants(&set);
    match run_identity_suite(&set, &cfg) {
        Ok(reps) => rows.extend(reps.into_iter().map(checks::Row::from_report)),
        Err(e) => rows.push(checks::Row::from_error("identity-suite", &e)),
    }
    let all_pass = rows.iter().all(|r| r.passed);
    let failing: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{} ({})", r.identity, r.classification)).collect();
    let mut csv = csv_line(
        &["identity", "passed", "classification", "max_residual", "tolerance", "truncation_floor"].map(String::from),
    );
    for r in &rows {
        csv += &csv_line(&[
            r.identity.clone(),
            r.passed.to_string(),
            r.classification.clone(),
            format!("{:?}", r.max_residual),
            format!("{:?}", r.tolerance),
            format!("{:?}", r.truncation_floor),
        ]);
    }
    let table = checks::table(&rows);
    let json = json!({ "passed": all_pass, "failing": failing, "identities": rows });
    let mut out = Output::ok(json, csv);
    out.table = Some(table);
    if !all_pass {
        out.status = 1;
    }
    Ok(out)
}

fn emit(common: &Common, out: &Output) -> std::result::Result<(), Failure> {
    let body = match common.format {
        Format::Json => serde_json::to_string_pretty(&out.json).expect("json serializes") + "\n",
        Format::Csv => out.csv.clone(),
    };
    match &common.out {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Validate(c) | Command::Periods(c) => c,
        Command::Eval { common, .. }
        | Command::Partition { common, .. }
        | Command::Correlator { common, .. }
        | Command::Check { common, .. } => common,
    }
}

fn run(cli: &Cli) -> std::result::Result<u8, Failure> {
    let c = common(&cli.command);
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out = match &cli.command {
        Command::Validate(c) => cmd_validate(c)?,
        Command::Periods(c) => cmd_periods(c)?,
        Command::Eval {
            common,
            form,
            xs,
            y,
            grid,
            n,
            a,
        } => cmd_eval(common, *form, xs, y, *grid, *n, *a)?,
        Command::Partition { common, lattice } => cmd_partition(common, lattice)?,
        Command::Correlator { common, kind, n, points } => cmd_correlator(common, *kind, *n, points)?,
        Command::Check {
            common,
            step,
            identity_tol,
        } => cmd_check(common, *step, *identity_tol)?,
    };
    if let Some(t) = &out.table {
        eprint!("{t}");
    }
    emit(c, &out)?;
    Ok(out.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status),
        Err(Failure::Input(m)) => {
            eprintln!("error: input: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: io: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
