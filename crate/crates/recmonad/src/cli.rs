//! Command-line front end: argument parsing, file loading, dispatch to the
//! library and report rendering with stable exit codes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::case_studies::counterexamples::{refute_own_algebra, sweep, Counterexample};
use crate::case_studies::fixtures;
use crate::case_studies::noncases::NonCase;
use crate::case_studies::studies::{run_case, CaseOptions, StudyError, CASES};
use crate::finite_algebra::{parse_algebra, AlgebraError, FiniteAlgebra};
use crate::monad_props::{
    check_distributive_law_axioms, check_mult_cartesian, check_unit_cartesian, check_weak_pullback_preservation,
    detect_local_finiteness, find_malcev_term, malcev_obstruction, DistLawBounds, Finiteness, MultBounds, MultProbe,
    PropsError, SpanInstance,
};
use crate::presentation::{parse_presentation, LetterMap, Presentation, PresentationError};
use crate::recognition::{
    direct_image_bruteforce, direct_image_locally_finite, direct_image_malcev, direct_image_powerset,
    parse_language, CrossCheck, LanguageSpec, RecognitionError, RecognizedLanguage,
};
use crate::report::{Format, Outcome, Record, Report};
use crate::term_engine::{BoundedFreeAlgebra, EngineError, EqVerdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Parser, Debug)]
#[command(
    name = "recmonad",
    version,
    about = "Bounded workbench for monads presented by equational theories",
    after_help = "Exit codes: 0 verified, 1 refuted, 2 unknown (bound exhausted), 64 usage, 65 data.\n\
                  Files are read from disk, or from the built-in data directory by name (e.g. group.thy).\n\
                  RECMONAD_MAX_NODES caps the free-algebra node budget."
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text, global = true)]
    format: FormatArg,
    /// Treat refutation as success: exit 0 when every record is refuted.
    #[arg(long, value_enum, global = true)]
    expect: Option<ExpectArg>,
    /// Worker threads for sweeps; output does not depend on it.
    #[arg(long, default_value_t = 1, global = true, value_parser = clap::value_parser!(u32).range(1..=256))]
    jobs: u32,
    /// Append wall-clock timings after the deterministic report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Jsonl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExpectArg {
    Refuted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Powerset,
    Malcev,
    Locfin,
    Brute,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropCheck {
    Wpb,
    Eta,
    Mu,
    Distlaw,
    Malcev,
    Locfin,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the bounded free algebra over an alphabet.
    Free(FreeArgs),
    /// Decide equality of two terms in the bounded free algebra.
    Eq(EqArgs),
    /// Check a finite algebra against its equations.
    CheckAlgebra(CheckAlgebraArgs),
    /// Direct image of a recognized language along a letter map.
    DirectImage(DirectImageArgs),
    /// Bounded checks of monad properties.
    Props(PropsArgs),
    /// Run a named study end to end.
    Case(CaseArgs),
    /// Refute candidate recognizers for a counterexample image.
    Refute(RefuteArgs),
    /// Run a study whose image is not recognizable.
    Noncase(CaseArgs),
}

#[derive(Args, Debug)]
struct FreeArgs {
    #[arg(long)]
    theory: String,
    /// Comma-separated letters.
    #[arg(long)]
    alphabet: String,
    /// Largest number of operation nodes.
    #[arg(long, default_value_t = 7)]
    bound: usize,
    /// List class representatives.
    #[arg(long)]
    classes: bool,
}

#[derive(Args, Debug)]
struct EqArgs {
    #[arg(long)]
    theory: String,
    /// Comma-separated letters; defaults to the letters of both terms.
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long, default_value_t = 7)]
    bound: usize,
    lhs: String,
    rhs: String,
}

#[derive(Args, Debug)]
struct CheckAlgebraArgs {
    #[arg(long)]
    algebra: String,
    /// Also try every single-cell change of every table.
    #[arg(long)]
    mutations: bool,
}

#[derive(Args, Debug)]
struct DirectImageArgs {
    /// Must match the theory of the language's algebra when given.
    #[arg(long)]
    theory: Option<String>,
    #[arg(long)]
    lang: String,
    /// Letter map such as `a->c,b->c`.
    #[arg(long)]
    map: String,
    /// Comma-separated target alphabet; defaults to the image of the map.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Powerset)]
    method: Method,
    /// Target terms up to this size are cross-checked.
    #[arg(long, default_value_t = 7)]
    bound: usize,
    /// Extra size allowed for preimages in the cross-check.
    #[arg(long, default_value_t = 2)]
    margin: usize,
    /// Mal'cev term over ?x ?y ?z; searched for when absent.
    #[arg(long)]
    malcev_term: Option<String>,
}

#[derive(Args, Debug)]
struct PropsArgs {
    #[arg(long)]
    theory: String,
    #[arg(long, value_enum)]
    check: PropCheck,
    /// Span file for `wpb`.
    #[arg(long)]
    span: Option<String>,
    /// Letter map for `eta` and `mu`.
    #[arg(long)]
    map: Option<String>,
    /// Comma-separated target alphabet for the map.
    #[arg(long)]
    target: Option<String>,
    /// Reject maps that are not onto.
    #[arg(long)]
    epi_only: bool,
    /// Term bound; each check has its own default.
    #[arg(long)]
    bound: Option<usize>,
    /// Witness bound for `wpb`.
    #[arg(long)]
    witness_bound: Option<usize>,
    /// Alphabet X for `distlaw`.
    #[arg(long, default_value = "a,b")]
    alphabet: String,
    /// Outer term size for `mu`.
    #[arg(long, default_value_t = 1)]
    outer_size: usize,
    /// Handles for `mu`.
    #[arg(long, default_value_t = 2)]
    handles: usize,
    /// Outer term of a `mu` probe.
    #[arg(long)]
    probe_outer: Option<String>,
    /// Handle bindings of a `mu` probe, as `h1=term`.
    #[arg(long = "bind")]
    binds: Vec<String>,
    /// Source term of a `mu` probe.
    #[arg(long)]
    probe_term: Option<String>,
    /// Search depth for `malcev`.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Generators for `locfin`.
    #[arg(long, default_value_t = 2)]
    generators: usize,
    /// Comma-separated bounds for `locfin`.
    #[arg(long, default_value = "2,3,4,5")]
    schedule: String,
}

#[derive(Args, Debug)]
struct CaseArgs {
    name: String,
    /// Largest candidate size in recognizer sweeps.
    #[arg(long)]
    sweep_size: Option<usize>,
}

#[derive(Args, Debug)]
struct RefuteArgs {
    /// marked_words, balanced_assoc, not_quite_malcev, bag_kleisli or seminearring.
    name: String,
    /// Sweep every model up to this size.
    #[arg(long, default_value_t = 2)]
    size: usize,
    /// Also refute the shipped source recognizer.
    #[arg(long)]
    own: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Budget(String),
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::UnknownCase(_) => CliError::Usage(e.to_string()),
            StudyError::Recognition(r) => r.into(),
            StudyError::Props(p) => p.into(),
            StudyError::Engine(x) => x.into(),
            StudyError::Algebra(x) => x.into(),
            StudyError::Presentation(x) => x.into(),
        }
    }
}

impl From<RecognitionError> for CliError {
    fn from(e: RecognitionError) -> Self {
        match e {
            RecognitionError::Budget(_) | RecognitionError::NotSaturated(_) => CliError::Budget(e.to_string()),
            RecognitionError::Engine(x) => x.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PropsError> for CliError {
    fn from(e: PropsError) -> Self {
        match e {
            PropsError::Engine(x) => x.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Budget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::Budget(_) => CliError::Budget(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PresentationError> for CliError {
    fn from(e: PresentationError) -> Self {
        CliError::Data(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses `argv` (program name first), runs the command and writes the
/// report to `out` and diagnostics to `err`; returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((report, scripted)) => {
            let format = match cli.format {
                FormatArg::Text => Format::Text,
                FormatArg::Jsonl => Format::Jsonl,
            };
            let _ = write!(out, "{}", report.render(format, cli.timings));
            exit_code(&report, scripted, cli.expect.is_some())
        }
        Err(e) => {
            let (code, msg) = match e {
                CliError::Usage(m) => (EXIT_USAGE, m),
                CliError::Data(m) => (EXIT_DATA, m),
                CliError::Budget(m) => (EXIT_UNKNOWN, m),
            };
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

/// For scripted studies (`case`, `noncase`) records carry their own
/// expectations; otherwise the worst outcome decides, with `--expect
/// refuted` asking for every record to be refuted.
fn exit_code(report: &Report, scripted: bool, expect_refuted: bool) -> i32 {
    let any = |o: Outcome| report.records.iter().any(|r| r.outcome == o);
    if scripted || expect_refuted {
        if report.all_as_expected() {
            EXIT_OK
        } else if any(Outcome::Unknown) {
            EXIT_UNKNOWN
        } else {
            EXIT_REFUTED
        }
    } else if any(Outcome::Refuted) {
        EXIT_REFUTED
    } else if any(Outcome::Unknown) {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    }
}

fn dispatch(cli: &Cli) -> Result<(Report, bool)> {
    let jobs = cli.jobs as usize;
    let (mut report, scripted) = match &cli.command {
        Command::Free(a) => (free(a)?, false),
        Command::Eq(a) => (eq(a)?, false),
        Command::CheckAlgebra(a) => (check_algebra(a)?, false),
        Command::DirectImage(a) => (direct_image(a)?, false),
        Command::Props(a) => (props(a)?, false),
        Command::Refute(a) => (refute(a, jobs)?, false),
        Command::Case(a) => {
            if !CASES.contains(&a.name.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown case `{}`; expected one of {}",
                    a.name,
                    CASES.join(", ")
                )));
            }
            (study(a, jobs)?, true)
        }
        Command::Noncase(a) => {
            if NonCase::parse(&a.name).is_none() {
                return Err(CliError::Usage(format!(
                    "unknown non-case `{}`; expected bag_kleisli or seminearring",
                    a.name
                )));
            }
            (study(a, jobs)?, true)
        }
    };
    if cli.expect.is_some() && !scripted {
        for r in &mut report.records {
            r.expected = Some(Outcome::Refuted);
        }
    }
    Ok((report, scripted))
}

fn study(a: &CaseArgs, jobs: usize) -> Result<Report> {
    let opts = CaseOptions {
        sweep_size: a.sweep_size,
        jobs,
    };
    Ok(run_case(&a.name, &opts)?)
}

fn read(spec: &str, table: &[(&str, &str)], ext: &str) -> Result<(String, Option<PathBuf>)> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{spec}: {e}")))?;
        return Ok((text, path.parent().map(Path::to_path_buf)));
    }
    let name = spec.rsplit('/').next().unwrap_or(spec);
    let name = name.strip_suffix(ext).unwrap_or(name);
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| (t.to_string(), None))
        .ok_or_else(|| CliError::Data(format!("{spec}: no such file or built-in {ext} fixture")))
}

fn resolve(dir: &Option<PathBuf>, name: &str) -> String {
    match dir {
        Some(d) if d.join(name).is_file() => d.join(name).to_string_lossy().into_owned(),
        _ => name.to_string(),
    }
}

fn load_theory(spec: &str) -> Result<Presentation> {
    let (text, _) = read(spec, fixtures::THEORIES, ".thy")?;
    parse_presentation(&text).map_err(|e| CliError::Data(format!("{spec}:{e}")))
}

fn load_algebra(spec: &str) -> Result<FiniteAlgebra> {
    let (text, dir) = read(spec, fixtures::ALGEBRAS, ".alg")?;
    let theory = |name: &str| load_theory(&resolve(&dir, name)).ok();
    parse_algebra(&text, &theory).map_err(|e| CliError::Data(format!("{spec}: {e}")))
}

fn load_language(spec: &str) -> Result<RecognizedLanguage> {
    let (text, dir) = read(spec, fixtures::LANGUAGES, ".lang")?;
    let load = |name: &str| load_algebra(&resolve(&dir, name)).map_err(|e| format!("{e:?}"));
    parse_language(&text, &load)
        .map(|(_, l)| l)
        .map_err(|e| CliError::Data(format!("{spec}: {e}")))
}

fn load_span(spec: &str) -> Result<SpanInstance> {
    let (text, _) = read(spec, fixtures::SPANS, ".span")?;
    SpanInstance::parse(&text).map_err(|e| CliError::Data(format!("{spec}: {e}")))
}

fn letters(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

fn letter_map(map: &str, target: &Option<String>) -> Result<LetterMap> {
    let t = target.as_deref().map(letters);
    Ok(LetterMap::parse(map, t.as_deref())?)
}

fn build(p: &Presentation, alphabet: &[String], bound: usize) -> Result<BoundedFreeAlgebra> {
    let refs: Vec<&str> = alphabet.iter().map(String::as_str).collect();
    Ok(BoundedFreeAlgebra::build(p, &refs, bound)?)
}

fn timed<T>(report: &mut Report, label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.time(label, start.elapsed());
    out
}

fn free(a: &FreeArgs) -> Result<Report> {
    let p = load_theory(&a.theory)?;
    let alphabet = letters(&a.alphabet);
    let mut report = Report::new(format!("free {} over {{{}}}", a.theory, alphabet.join(",")));
    let fa = timed(&mut report, "build", || build(&p, &alphabet, a.bound))?;
    let mut rec = Record::new("bounded free algebra", Outcome::Verified)
        .bound("bound", a.bound)
        .bound("classes", fa.num_classes())
        .bound("nodes", fa.num_nodes())
        .bound("rounds", fa.rounds())
        .bound("saturated", usize::from(fa.saturated()));
    if fa.saturated() {
        rec = rec.note("saturated: the classes are exactly the free algebra");
    }
    if a.classes {
        for c in fa.classes() {
            rec = rec.term(&format!("class{c}"), &fa.representative(c));
        }
    }
    report.push(rec);
    Ok(report)
}

fn eq(a: &EqArgs) -> Result<Report> {
    let p = load_theory(&a.theory)?;
    let lhs = p.parse_term(&a.lhs)?;
    let rhs = p.parse_term(&a.rhs)?;
    let alphabet = match &a.alphabet {
        Some(s) => letters(s),
        None => lhs.letters().union(&rhs.letters()).cloned().collect(),
    };
    let mut report = Report::new(format!("eq in {}", a.theory));
    let fa = timed(&mut report, "build", || build(&p, &alphabet, a.bound))?;
    let v = fa.decide_equal(&lhs, &rhs)?;
    let outcome = match v {
        EqVerdict::Equal => Outcome::Verified,
        EqVerdict::NotProvenEqual { definitive: true, .. } => Outcome::Refuted,
        EqVerdict::NotProvenEqual { .. } => Outcome::Unknown,
    };
    let mut rec = Record::new("terms are equal", outcome)
        .bound("bound", a.bound)
        .bound("saturated", usize::from(fa.saturated()))
        .term("lhs", &lhs)
        .term("rhs", &rhs);
    if outcome == Outcome::Unknown {
        rec = rec.note("not proven equal within the bound");
    }
    report.push(rec);
    Ok(report)
}

fn check_algebra(a: &CheckAlgebraArgs) -> Result<Report> {
    let alg = load_algebra(&a.algebra)?;
    let mut report = Report::new(format!("check-algebra {}", a.algebra));
    let sat = timed(&mut report, "satisfaction", || alg.check_satisfies());
    let mut rec = Record::claim("algebra satisfies every equation", sat.is_ok())
        .bound("size", alg.size)
        .bound("equations", alg.presentation.equations.len());
    if let Err(v) = &sat {
        let assignment: Vec<String> = v.assignment.iter().map(|(x, e)| format!("?{x}={}", alg.name(*e))).collect();
        rec = rec.note(format!("fails {}", v.text)).note(format!(
            "assignment {} gives lhs {} and rhs {}",
            assignment.join(" "),
            alg.name(v.lhs),
            alg.name(v.rhs)
        ));
    }
    report.push(rec);
    if a.mutations {
        let m = timed(&mut report, "mutations", || alg.mutation_sweep());
        let mut rec = Record::claim("every single-cell mutation breaks an equation", m.survivors.is_empty())
            .bound("mutations", m.mutations)
            .bound("survivors", m.survivors.len());
        for s in m.survivors.iter().take(5) {
            let args: Vec<String> = s.args.iter().map(|&x| alg.name(x)).collect();
            rec = rec.note(format!("{}({}) := {} survives", s.op, args.join(","), alg.name(s.value)));
        }
        report.push(rec);
    }
    Ok(report)
}

fn direct_image(a: &DirectImageArgs) -> Result<Report> {
    let l = load_language(&a.lang)?;
    let p = l.algebra.presentation.clone();
    if let Some(t) = &a.theory {
        if load_theory(t)? != p {
            return Err(CliError::Data(format!("{t}: the language's algebra has a different theory")));
        }
    }
    let f = letter_map(&a.map, &a.target)?;
    let cc = CrossCheck {
        margin: a.margin,
        ..CrossCheck::new(a.bound)
    };
    let method = format!("{:?}", a.method).to_lowercase();
    let mut report = Report::new(format!("direct-image {} along {} ({method})", a.lang, a.map));
    let rec = match a.method {
        Method::Powerset | Method::Malcev => {
            let img = match a.method {
                Method::Powerset => timed(&mut report, "image", || direct_image_powerset(&l, &f, &cc))?,
                _ => {
                    let term = match &a.malcev_term {
                        Some(t) => Some(p.parse_open_term(t)?),
                        None => find_malcev_term(&p, 3, 4)?,
                    };
                    timed(&mut report, "image", || direct_image_malcev(&l, &f, term.as_ref(), &cc))?
                }
            };
            let mut rec = Record::from_outcome("image recognizer matches brute force", &img.outcome);
            if let Some(lang) = &img.language {
                rec = rec.bound("recognizer_size", lang.algebra.size);
            }
            if img.theory_backed {
                rec = rec.note("construction backed by a verified Mal'cev term");
            }
            rec
        }
        Method::Locfin | Method::Brute => {
            let fs = timed(&mut report, "source", || build(&p, &f.source, a.bound))?;
            let fg = timed(&mut report, "target", || build(&p, &f.target, a.bound))?;
            let spec = LanguageSpec::Recognized(&l);
            if matches!(a.method, Method::Locfin) {
                let img = direct_image_locally_finite(&spec, &f, &fs, &fg)?;
                let accepted: Vec<String> = img.accept.iter().map(|&c| fg.representative(c).to_string()).collect();
                Record::new("exact image in the finite free algebra", Outcome::Verified)
                    .bound("bound", a.bound)
                    .bound("recognizer_size", img.algebra.size)
                    .bound("image_classes", img.accept.len())
                    .note(format!("image classes {}", accepted.join(" ")))
            } else {
                let img = direct_image_bruteforce(&spec, &f, &fs, &fg)?;
                let outcome = if img.complete {
                    Outcome::Verified
                } else {
                    Outcome::Unknown
                };
                let mut rec = Record::new("brute-force image", outcome)
                    .bound("bound", a.bound)
                    .bound("image_classes", img.classes.len());
                for c in img.classes.iter().take(20) {
                    rec = rec.term(&format!("class{c}"), &fg.representative(*c));
                }
                if !img.complete {
                    rec = rec.note("free algebras not saturated: the image is exact only within the bound");
                }
                rec
            }
        }
    };
    report.push(rec);
    Ok(report)
}

fn props(a: &PropsArgs) -> Result<Report> {
    let p = load_theory(&a.theory)?;
    let check = format!("{:?}", a.check).to_lowercase();
    let mut report = Report::new(format!("props {} {check}", a.theory));
    let need_map = || -> Result<LetterMap> {
        let m = a
            .map
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("--check {check} needs --map")))?;
        letter_map(m, &a.target)
    };
    match a.check {
        PropCheck::Wpb => {
            let span_name = a
                .span
                .as_deref()
                .ok_or_else(|| CliError::Usage("--check wpb needs --span".into()))?;
            let span = load_span(span_name)?;
            let tb = a.bound.unwrap_or(3);
            let wb = a.witness_bound.unwrap_or(tb);
            let o = timed(&mut report, "wpb", || check_weak_pullback_preservation(&p, &span, tb, wb))?;
            report.push(
                Record::from_outcome("weak pullbacks are preserved", &o)
                    .bound("term_bound", tb)
                    .bound("witness_bound", wb),
            );
        }
        PropCheck::Eta => {
            let f = need_map()?;
            let b = a.bound.unwrap_or(5);
            let o = timed(&mut report, "eta", || check_unit_cartesian(&p, &f, a.epi_only, b))?;
            report.push(Record::from_outcome("unit is cartesian", &o).bound("bound", b));
        }
        PropCheck::Mu => {
            let f = need_map()?;
            let bounds = MultBounds {
                term_bound: a.bound.unwrap_or(4),
                outer_size: a.outer_size,
                handles: a.handles,
            };
            let mut probes = Vec::new();
            if let (Some(outer), Some(t)) = (&a.probe_outer, &a.probe_term) {
                let mut binding = BTreeMap::new();
                for b in &a.binds {
                    let (h, term) = b
                        .split_once('=')
                        .ok_or_else(|| CliError::Usage(format!("--bind expects h=term, got `{b}`")))?;
                    binding.insert(h.trim().to_string(), p.parse_term(term.trim())?);
                }
                probes.push(MultProbe {
                    outer: p.parse_term(outer)?,
                    binding,
                    t: p.parse_term(t)?,
                });
            } else if a.probe_outer.is_some() || a.probe_term.is_some() {
                return Err(CliError::Usage("--probe-outer and --probe-term go together".into()));
            }
            let o = timed(&mut report, "mu", || check_mult_cartesian(&p, &f, a.epi_only, &bounds, &probes))?;
            report.push(
                Record::from_outcome("multiplication is cartesian", &o)
                    .bound("term_bound", bounds.term_bound)
                    .bound("outer_size", bounds.outer_size)
                    .bound("handles", bounds.handles),
            );
        }
        PropCheck::Distlaw => {
            let x = letters(&a.alphabet);
            let mut bounds = DistLawBounds::default();
            if let Some(b) = a.bound {
                bounds.bound = b;
            }
            let r = timed(&mut report, "distlaw", || check_distributive_law_axioms(&p, &x, &bounds))?;
            for (name, o) in &r.axioms {
                report.push(Record::from_outcome(format!("axiom {name}"), o).bound("bound", bounds.bound));
            }
            report.push(Record::from_outcome("monotone", &r.monotone).bound("bound", bounds.bound));
        }
        PropCheck::Malcev => {
            let b = a.bound.unwrap_or(4);
            let found = timed(&mut report, "malcev", || find_malcev_term(&p, a.depth, b))?;
            let rec = match found {
                Some(t) => Record::new("Mal'cev term exists", Outcome::Verified).term("term", &t),
                None => {
                    let mut rec = Record::new("Mal'cev term exists", Outcome::Refuted)
                        .note(format!("no Mal'cev term up to depth {}", a.depth));
                    if let Some(o) = malcev_obstruction(&p, 3) {
                        rec = rec.note(o);
                    }
                    rec
                }
            };
            report.push(rec.bound("depth", a.depth).bound("bound", b));
        }
        PropCheck::Locfin => {
            let schedule: Vec<usize> = a
                .schedule
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad schedule entry `{s}`"))))
                .collect::<Result<_>>()?;
            let r = timed(&mut report, "locfin", || detect_local_finiteness(&p, a.generators, &schedule))?;
            let rec = match r {
                Finiteness::Finite(n) => Record::new("locally finite", Outcome::Verified).bound("elements", n),
                Finiteness::Unknown(counts) => {
                    let c: Vec<String> = counts.iter().map(|(b, n)| format!("{b}:{n}")).collect();
                    Record::new("locally finite", Outcome::Unknown).note(format!("classes per bound {}", c.join(" ")))
                }
            };
            report.push(rec.bound("generators", a.generators));
        }
    }
    Ok(report)
}

fn refute(a: &RefuteArgs, jobs: usize) -> Result<Report> {
    let mut report = Report::new(format!("refute {}", a.name));
    let sweep_record = |size: usize, s: crate::case_studies::counterexamples::SweepReport| {
        let outcome = if s.all_refuted() {
            Outcome::Refuted
        } else {
            Outcome::Unknown
        };
        let mut rec = Record::new(format!("some algebra of size {size} recognizes the image"), outcome)
            .bound("models", s.models as usize)
            .bound("candidates", s.candidates as usize)
            .bound("refuted", s.refuted as usize);
        if let Some(w) = &s.first {
            rec = rec
                .term("t_in", &w.t_in)
                .term("t_out", &w.t_out)
                .note(format!("first candidate collides at n={} m={}", w.n, w.m));
        }
        rec
    };
    if let Some(ce) = Counterexample::parse(&a.name) {
        let refuter = ce.refuter(a.size + 1)?;
        for size in 1..=a.size {
            let s = timed(&mut report, &format!("size {size}"), || sweep(ce, &refuter, size, jobs))?;
            report.push(sweep_record(size, s));
        }
        if a.own {
            let own = refute_own_algebra(ce)?;
            let mut rec = Record::new("the source recognizer recognizes the image", Outcome::Refuted)
                .bound("assignments", own.len());
            if let Some(w) = own.first() {
                rec = rec.term("t_in", &w.t_in).term("t_out", &w.t_out);
            }
            report.push(rec);
        }
    } else if let Some(nc) = NonCase::parse(&a.name) {
        if a.own {
            return Err(CliError::Usage(format!("`{}` has no shipped recognizer to refute", a.name)));
        }
        for size in 1..=a.size {
            let s = timed(&mut report, &format!("size {size}"), || nc.sweep(size, jobs))?;
            report.push(sweep_record(size, s));
        }
    } else {
        return Err(CliError::Usage(format!("no refutation family for `{}`", a.name)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("recmonad").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run_str(&["free", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["case", "nope"]).0, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let (code, _, err) = run_str(&["free", "--theory", "/nonexistent.thy", "--alphabet", "a"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("/nonexistent.thy"));
    }

    #[test]
    fn group_wpb_is_refuted() {
        let args = ["props", "--theory", "group.thy", "--check", "wpb", "--span", "empty-ab-c.span"];
        let (code, out, _) = run_str(&args);
        assert_eq!(code, EXIT_REFUTED, "{out}");
        assert!(out.contains("t = e"), "{out}");
        assert!(out.contains("r = (dot a (inv b))"), "{out}");
        let mut flipped = args.to_vec();
        flipped.extend(["--expect", "refuted"]);
        let (code, out, _) = run_str(&flipped);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("(expected refuted)"));
    }

    #[test]
    fn eq_in_monoid() {
        let (code, out, _) = run_str(&["eq", "--theory", "monoid", "--bound", "4", "(dot a (dot b e))", "(dot a b)"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, _, _) = run_str(&["eq", "--theory", "monoid", "--bound", "4", "(dot a b)", "(dot b a)"]);
        assert_eq!(code, EXIT_UNKNOWN);
    }

    #[test]
    fn check_algebra_fixture() {
        let (code, out, _) = run_str(&["check-algebra", "--algebra", "marked_words.alg", "--format", "jsonl"]);
        assert_eq!(code, EXIT_OK);
        let r: Record = serde_json::from_str(out.lines().next().unwrap()).unwrap();
        assert_eq!(r.outcome, Outcome::Verified);
    }
}
