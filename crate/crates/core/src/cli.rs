//! Command-line front end. Every command prints JSON (or CSV with
//! `--csv`); exit code 0 on success, 1 when a check fails, 2 on bad input.

use crate::field::{fmt_q, parse_q, Q};
use crate::grassmannian::{block_gram, SplitFrame};
use crate::km_polynomials::{km_poly, exp_laplacian_check, twist_poly, CountVector, KmMode};
use crate::lift::{
    eliminate_coefficients, gauge_chart, gauge_isometry, positive_dual_vectors, CheckMode, GaugeSetting, GaugeTable,
    Lift, LiftRequest, QuadParams, YMethod,
};
use crate::linalg::Mat;
use crate::theta::{p_alpha, siegel_theta, CuspFormData, ThetaRequest};
use crate::verify::{load_corpus, run_criterion, LatticeFile, Prepared, Record, RunConfig, CRITERIA};
use crate::weil_rep::{relation_defects, weil_generators, word_matrix, GeneratorWord};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "kmlift", version, about = "Siegel theta functions and the unfolded Kudla-Millson lift")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lattice data
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Weil representation generators and relation defects
    Weil {
        lattice: PathBuf,
        /// word in S, T, s = S⁻¹, t = T⁻¹, e.g. "ST^3s"
        #[arg(long)]
        word: Option<String>,
    },
    /// Kudla–Millson polynomials
    Poly {
        #[arg(long)]
        alpha: String,
        #[arg(long, value_enum, default_value_t = PolyMode::P)]
        mode: PolyMode,
        /// add a twist count vector β
        #[arg(long)]
        twist: Option<String>,
    },
    /// One component vector of the Siegel theta function
    Theta {
        lattice: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        radius: Option<f64>,
        #[arg(long)]
        frame: Option<PathBuf>,
    },
    /// Defining integrals of the lift
    Lift {
        #[command(subcommand)]
        cmd: LiftCmd,
    },
    /// Run the acceptance suite on a corpus directory
    Verify {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// restrict to these criteria
        #[arg(long, value_delimiter = ',')]
        criterion: Vec<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    Info { lattice: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolyMode {
    P,
    Q,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Bessel,
    Quadrature,
}

impl From<MethodArg> for YMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bessel => YMethod::Bessel,
            MethodArg::Quadrature => YMethod::Quadrature,
        }
    }
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long)]
    pub cusp_form: PathBuf,
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub frame: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub ell: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Bessel)]
    pub method: MethodArg,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Subcommand, Debug)]
pub enum LiftCmd {
    /// Fourier coefficient c_λ(g)
    Fourier {
        #[command(flatten)]
        args: LiftArgs,
        /// λ ∈ K′ in K coordinates
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Series value against the strip quadrature
    VerifyStrip {
        #[command(flatten)]
        args: LiftArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        torus: Option<usize>,
    },
    /// Pairing and splitting residuals of the integrand at τ
    SplitCheck {
        #[command(flatten)]
        args: LiftArgs,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// the coefficients come from a genuine modular form
        #[arg(long)]
        modular: bool,
    },
    /// Gauge frame for α₁ and its polynomial report
    Gauge {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        alpha1: usize,
        #[arg(long, default_value_t = 0)]
        ell: u32,
    },
    /// Fourier-coefficient tables at the gauge frames
    Tables {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        cusp_form: PathBuf,
        #[arg(long, default_value = "3")]
        cutoff: String,
        #[arg(long, default_value_t = 4)]
        bound: i64,
        #[arg(long, default_value_t = 0)]
        ell: u32,
    },
    /// Recover c(f_γ, n) from gauge tables
    Eliminate {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long, default_value = "3")]
        cutoff: String,
        #[arg(long)]
        csv: bool,
    },
}

/// Frame file: an explicit chart, a random generic frame, or a gauge.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFile {
    Chart(Mat<f64>),
    Seed(u64),
    Gauge(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableEntry {
    pub lambda: Vec<String>,
    pub c: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFile {
    pub alpha1: usize,
    pub values: Vec<TableEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TablesFile {
    pub ell: u32,
    pub tables: Vec<TableFile>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

struct Output {
    body: String,
    ok: bool,
}

fn json_out(v: &Value) -> Output {
    Output { body: serde_json::to_string_pretty(v).expect("json") + "\n", ok: true }
}

/// Runs the command line and returns the exit code.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(o) => {
            let _ = out.write_all(o.body.as_bytes());
            if o.ok {
                0
            } else {
                1
            }
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(CliError::Failed(m)) => {
            let _ = writeln!(err, "failed: {m}");
            1
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(p: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn load_lattice(p: &Path) -> CliResult<Prepared> {
    Prepared::new(read_json::<LatticeFile>(p)?).map_err(usage)
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> CliResult<Vec<T>> {
    s.split(',').map(|t| f(t.trim())).collect::<std::result::Result<Vec<_>, _>>().map_err(usage)
}

fn parse_tau(s: &str) -> CliResult<C64> {
    let v = parse_list(s, |t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))?;
    match v[..] {
        [x, y] if y > 0.0 => Ok(C64::new(x, y)),
        _ => Err(usage(format!("tau must be x,y with y > 0, got {s:?}"))),
    }
}

fn qstrings(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_q).collect()
}

fn frame_for(pr: &Prepared, file: Option<&Path>) -> CliResult<SplitFrame<f64>> {
    let sd = pr.split.as_ref().ok_or_else(|| usage(format!("{}: no u, u_prime given", pr.name())))?;
    let ff = match file {
        Some(p) => Some(read_json::<FrameFile>(p)?),
        None => None,
    };
    match ff {
        None => SplitFrame::from_chart(&pr.lattice, pr.chart(), &sd.u, &sd.u_prime).map_err(usage),
        Some(FrameFile::Chart(a)) => SplitFrame::from_chart(&pr.lattice, a, &sd.u, &sd.u_prime).map_err(usage),
        Some(FrameFile::Seed(s)) => pr.random_frame(s).map_err(usage),
        Some(FrameFile::Gauge(a1)) => {
            let blocks = pr.blocks.as_ref().ok_or_else(|| usage("a gauge frame needs blocks"))?;
            let chart = gauge_chart(blocks, a1).map_err(usage)?;
            Ok(SplitFrame::from_chart(&pr.lattice, chart, &sd.u, &sd.u_prime).map_err(usage)?.to_f64())
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<Output> {
    match cmd {
        Command::Lattice { cmd: LatticeCmd::Info { lattice } } => lattice_info(&lattice),
        Command::Weil { lattice, word } => weil(&lattice, word.as_deref()),
        Command::Poly { alpha, mode, twist } => poly(&alpha, mode, twist.as_deref()),
        Command::Theta { lattice, tau, alpha, radius, frame } => theta(&lattice, &tau, &alpha, radius, frame.as_deref()),
        Command::Lift { cmd } => lift(cmd),
        Command::Verify { corpus, config, criterion, out, csv } => verify(&corpus, config.as_deref(), &criterion, out.as_deref(), csv),
    }
}

fn lattice_info(path: &Path) -> CliResult<Output> {
    let pr = load_lattice(path)?;
    let (p, qq) = pr.lattice.signature();
    let cosets: Vec<Value> = (0..pr.disc.len())
        .map(|i| json!({ "rep": qstrings(pr.disc.rep(i)), "q_mod_1": fmt_q(pr.disc.q_mod1(i)) }))
        .collect();
    let mut v = json!({
        "name": pr.name(),
        "rank": pr.lattice.rank(),
        "signature": [p, qq],
        "det": fmt_q(&pr.lattice.det()),
        "discriminant": { "order": pr.disc.len(), "trivial": pr.disc.len() == 1, "cosets": cosets },
    });
    if let Some(sd) = &pr.split {
        v["split"] = json!({
            "n": sd.n,
            "k_rank": sd.k_rank(),
            "k_gram": sd.k_lattice.gram(),
            "k_discriminant_order": sd.k_disc.len(),
        });
    }
    Ok(json_out(&v))
}

fn cmat_json(m: &[Vec<C64>]) -> Value {
    json!(m.iter().map(|r| r.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn weil(path: &Path, word: Option<&str>) -> CliResult<Output> {
    let pr = load_lattice(path)?;
    let rep = weil_generators(&pr.lattice, &pr.disc);
    let (rel, comm, unit) = relation_defects(&rep);
    let mut v = json!({
        "rho_t": rep.rho_t.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "rho_s": cmat_json(&rep.rho_s),
        "residuals": { "st_cubed_vs_s_squared": rel, "s_squared_commutes_with_t": comm, "unitarity": unit },
    });
    if let Some(w) = word {
        let w: GeneratorWord = w.parse().map_err(usage)?;
        v["word"] = json!(w.to_string());
        v["matrix"] = cmat_json(&word_matrix(&rep, &w));
    }
    Ok(json_out(&v))
}

fn parse_count(s: &str) -> CliResult<CountVector> {
    CountVector::parse(s).map_err(usage)
}

fn poly(alpha: &str, mode: PolyMode, twist: Option<&str>) -> CliResult<Output> {
    let a = parse_count(alpha)?;
    let m = match mode {
        PolyMode::P => KmMode::P,
        PolyMode::Q => KmMode::Q,
    };
    let mut v = json!({
        "alpha": a.to_string(),
        "poly": km_poly(&a, m).to_string(),
        "residuals": { "exp_laplacian_identity_holds": exp_laplacian_check(&a) },
    });
    if let Some(t) = twist {
        let b = parse_count(t)?;
        if b.p() != a.p() {
            return Err(usage("twist and alpha have different lengths"));
        }
        let (g, pq, label) = twist_poly(&a, &b);
        v["twist"] = json!({ "gamma": g.to_string(), "q_poly": pq.to_string(), "label": label });
    }
    Ok(json_out(&v))
}

fn theta(path: &Path, tau: &str, alpha: &str, radius: Option<f64>, frame: Option<&Path>) -> CliResult<Output> {
    if let Some(r) = radius {
        if !(r > 0.0) {
            return Err(usage(format!("radius must be positive, got {r}")));
        }
    }
    let pr = load_lattice(path)?;
    let tau = parse_tau(tau)?;
    let a = parse_count(alpha)?;
    let (p, qq) = pr.lattice.signature();
    if a.p() != p || a.norm() as usize != qq {
        return Err(usage(format!("alpha must have length {p} and sum {qq}")));
    }
    let n = p + qq;
    let chart = match frame {
        Some(f) if pr.split.is_some() => frame_for(&pr, Some(f))?.chart,
        Some(f) => match read_json::<FrameFile>(f)? {
            FrameFile::Chart(c) => c,
            _ => return Err(usage("this lattice has no split; give an explicit chart")),
        },
        None => pr.chart(),
    };
    let base = ThetaRequest {
        lattice: &pr.lattice,
        disc: &pr.disc,
        tau,
        delta: vec![0.0; n],
        nu: vec![0.0; n],
        chart,
        poly: p_alpha(&a, n),
        radius: 1.0,
    };
    let r = match radius {
        Some(r) => r,
        None => base.kernel().map_err(usage)?.radius_for(tau.im, 1e-12).map_err(usage)?,
    };
    let th = siegel_theta(&ThetaRequest { radius: r, ..base }).map_err(|e| CliError::Failed(e.to_string()))?;
    let comps: Vec<Value> = th
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| json!({ "coset": qstrings(pr.disc.rep(i)), "value": [c.re, c.im] }))
        .collect();
    Ok(json_out(&json!({ "tau": [tau.re, tau.im], "alpha": a.to_string(), "radius": r, "components": comps, "residuals": { "tail_bound": th.tail_bound } })))
}

struct LiftInputs {
    pr: Prepared,
    frame: SplitFrame<f64>,
    form: CuspFormData,
}

fn lift_inputs(a: &LiftArgs) -> CliResult<LiftInputs> {
    let pr = load_lattice(&a.lattice)?;
    let frame = frame_for(&pr, a.frame.as_deref())?;
    let form: CuspFormData = read_json(&a.cusp_form)?;
    Ok(LiftInputs { pr, frame, form })
}

fn make_request<'a>(inp: &'a LiftInputs, a: &LiftArgs, modular: bool) -> CliResult<LiftRequest<'a>> {
    let sd = inp.pr.split.as_ref().expect("frame implies split");
    let table = inp.form.table(&inp.pr.disc).map_err(usage)?;
    let mut req = LiftRequest::new(&inp.pr.lattice, &inp.pr.disc, sd, &inp.frame, table, parse_count(&a.alpha)?, a.ell);
    req.weight = parse_q(&inp.form.weight).map_err(usage)?;
    req.modular = modular;
    req.validate().map_err(usage)?;
    Ok(req)
}

fn parse_lambda(s: &str) -> CliResult<Vec<Q>> {
    parse_list(s, parse_q)
}

fn csv_out(header: &str, rows: Vec<String>) -> Output {
    let mut body = String::from(header);
    body.push('\n');
    for r in rows {
        body.push_str(&r);
        body.push('\n');
    }
    Output { body, ok: true }
}

fn lift(cmd: LiftCmd) -> CliResult<Output> {
    match cmd {
        LiftCmd::Fourier { args, lambda } => {
            let inp = lift_inputs(&args)?;
            let req = make_request(&inp, &args, false)?;
            let lift = Lift::new(&req).map_err(usage)?;
            let lam = parse_lambda(&lambda)?;
            let r = lift.fourier_coefficient(&lam, args.method.into()).map_err(|e| CliError::Failed(e.to_string()))?;
            if args.csv {
                let rows = r.pieces.iter().map(|p| format!("{},{},{:e},{:e}", p.t, p.h, p.value[0], p.value[1])).collect();
                return Ok(csv_out("t,h,re,im", rows));
            }
            let sum: C64 = r.pieces.iter().map(|p| C64::new(p.value[0], p.value[1])).sum();
            Ok(json_out(&json!({
                "lambda": qstrings(&r.lam),
                "alpha": req.alpha.to_string(),
                "method": r.method,
                "value": [r.value.re, r.value.im],
                "negative_norm": r.negative_norm,
                "pieces": r.pieces,
                "residuals": { "value_minus_sum_of_pieces": (sum - r.value).norm() },
            })))
        }
        LiftCmd::VerifyStrip { args, lambda, nx, torus } => {
            let inp = lift_inputs(&args)?;
            let mut req = make_request(&inp, &args, false)?;
            let d = QuadParams::default();
            req.quad = QuadParams { nx: nx.unwrap_or(d.nx), torus: torus.unwrap_or(d.torus), ..d };
            let lift = Lift::new(&req).map_err(usage)?;
            let lam = parse_lambda(&lambda)?;
            let sc = lift.strip_integral_check(&lam, args.method.into()).map_err(|e| CliError::Failed(e.to_string()))?;
            if args.csv {
                let row = format!("{:e},{:e},{:e},{:e},{:e},{:e}", sc.series[0], sc.series[1], sc.quadrature[0], sc.quadrature[1], sc.residual, sc.quad_error);
                return Ok(csv_out("series_re,series_im,quad_re,quad_im,residual,quad_error", vec![row]));
            }
            Ok(json_out(&json!({
                "lambda": qstrings(&lam),
                "alpha": req.alpha.to_string(),
                "series": sc.series,
                "quadrature": sc.quadrature,
                "residuals": { "difference": sc.residual, "quadrature_error": sc.quad_error },
            })))
        }
        LiftCmd::SplitCheck { args, tau, modular } => {
            let inp = lift_inputs(&args)?;
            let req = make_request(&inp, &args, modular)?;
            let lift = Lift::new(&req).map_err(usage)?;
            let mode = if modular { CheckMode::Modular } else { CheckMode::Formal };
            let chk = lift.integrand_split_check(parse_tau(&tau)?, mode).map_err(|e| CliError::Failed(e.to_string()))?;
            Ok(json_out(&json!({ "mode": format!("{mode:?}").to_lowercase(), "residuals": chk })))
        }
        LiftCmd::Gauge { lattice, alpha1, ell } => {
            let pr = load_lattice(&lattice)?;
            let blocks = pr.blocks.as_ref().ok_or_else(|| usage("the gauge needs a block decomposition"))?;
            let rep = gauge_isometry(blocks, alpha1, ell).map_err(usage)?;
            let ok = rep.ok;
            let mut o = json_out(&json!(rep));
            o.ok = ok;
            Ok(o)
        }
        LiftCmd::Tables { lattice, cusp_form, cutoff, bound, ell } => {
            let pr = load_lattice(&lattice)?;
            let (sd, blocks) = gauge_inputs(&pr)?;
            let form: CuspFormData = read_json(&cusp_form)?;
            let f = form.table(&pr.disc).map_err(usage)?;
            let cutoff = parse_q(&cutoff).map_err(usage)?;
            let set = GaugeSetting { lattice: &pr.lattice, disc: &pr.disc, sd, blocks, ell };
            let lams = positive_dual_vectors(sd, &cutoff, bound);
            let (p, _) = pr.lattice.signature();
            let alpha1s: Vec<usize> = (1..p).collect();
            let tabs = set.tables(&f, &alpha1s, &lams).map_err(|e| CliError::Failed(e.to_string()))?;
            let file = TablesFile {
                ell,
                tables: tabs
                    .iter()
                    .map(|t| TableFile {
                        alpha1: t.alpha1,
                        values: t.values.iter().map(|(l, c)| TableEntry { lambda: qstrings(l), c: [c.re, c.im] }).collect(),
                    })
                    .collect(),
            };
            Ok(json_out(&json!(file)))
        }
        LiftCmd::Eliminate { lattice, tables, cutoff, csv } => {
            let pr = load_lattice(&lattice)?;
            let (sd, blocks) = gauge_inputs(&pr)?;
            let tf: TablesFile = read_json(&tables)?;
            let cutoff = parse_q(&cutoff).map_err(usage)?;
            let mut tabs = Vec::new();
            for t in &tf.tables {
                let mut values = BTreeMap::new();
                for e in &t.values {
                    values.insert(parse_lambda(&e.lambda.join(","))?, C64::new(e.c[0], e.c[1]));
                }
                tabs.push(GaugeTable { alpha1: t.alpha1, values });
            }
            let set = GaugeSetting { lattice: &pr.lattice, disc: &pr.disc, sd, blocks, ell: tf.ell };
            let el = eliminate_coefficients(&set, &tabs, &cutoff).map_err(|e| CliError::Failed(e.to_string()))?;
            let rec: Vec<Value> = el
                .recovered
                .iter()
                .map(|((li, n), c)| json!({ "coset": qstrings(pr.disc.rep(*li)), "n": fmt_q(n), "c": [c.re, c.im] }))
                .collect();
            let unres: Vec<Value> = el
                .unresolved
                .iter()
                .map(|(li, n)| json!({ "coset": qstrings(pr.disc.rep(*li)), "n": fmt_q(n) }))
                .collect();
            if csv {
                let mut rows: Vec<String> = el
                    .recovered
                    .iter()
                    .map(|((li, n), c)| format!("{},{},{:e},{:e},resolved", qstrings(pr.disc.rep(*li)).join(" "), fmt_q(n), c.re, c.im))
                    .collect();
                rows.extend(el.unresolved.iter().map(|(li, n)| format!("{},{},,,unresolved", qstrings(pr.disc.rep(*li)).join(" "), fmt_q(n))));
                return Ok(csv_out("coset,n,re,im,status", rows));
            }
            Ok(json_out(&json!({ "recovered": rec, "unresolved": unres })))
        }
    }
}

fn gauge_inputs(pr: &Prepared) -> CliResult<(&crate::lattice_core::SplitData, &[crate::grassmannian::Block])> {
    let sd = pr.split.as_ref().ok_or_else(|| usage(format!("{}: no u, u_prime given", pr.name())))?;
    let blocks = pr.blocks.as_deref().ok_or_else(|| usage("gauge frames need a block decomposition"))?;
    if block_gram(blocks) != pr.file.gram {
        return Err(usage("blocks do not match the Gram matrix"));
    }
    Ok((sd, blocks))
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    records: &'a [Record],
    passed: usize,
    failed: usize,
}

fn verify(corpus: &Path, config: Option<&Path>, only: &[u8], out: Option<&Path>, csv: bool) -> CliResult<Output> {
    let cfg: RunConfig = match config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    let cfg = cfg.with_env().map_err(usage)?;
    cfg.validate().map_err(usage)?;
    let corpus = load_corpus(corpus).map_err(usage)?;
    let mut records = Vec::new();
    for (id, _, _) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        records.extend(run_criterion(id, &corpus, &cfg).map_err(|e| CliError::Failed(e.to_string()))?);
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    let body = if csv {
        let mut s = String::from("criterion,check,lattice,params,value,tolerance,pass\n");
        for r in &records {
            s.push_str(&format!(
                "{},{},{},\"{}\",{:e},{:e},{}\n",
                r.criterion, r.check, r.lattice, r.params, r.value, r.tolerance, r.pass
            ));
        }
        s
    } else {
        let rep = Report { config: &cfg, records: &records, passed: records.len() - failed, failed };
        serde_json::to_string_pretty(&rep).expect("json") + "\n"
    };
    let body = match out {
        Some(p) => {
            std::fs::write(p, &body).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            format!("{} checks, {failed} failed; report written to {}\n", records.len(), p.display())
        }
        None => body,
    };
    Ok(Output { body, ok: failed == 0 })
}
