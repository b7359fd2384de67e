//! `dicat`: load an instance, run structural validation and the axiom suite,
//! and emit a report.
//!
//! Exit codes: 0 pass (or mutation detected), 1 check failure (or mutation
//! undetected), 2 malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use dicat_cocycle::{build_cocycle_instance, preset_order, CocycleFile, CocycleInstance, GROUP_PRESETS};
use dicat_core::dicat::{missing_entries, validate_structure, DicatData};
use dicat_core::engine::expr::{builtin_axiom_text, AxiomDef, GenTable};
use dicat_core::engine::mutate::{mutate_and_check, MutationReport, MutationSpec, ProbeSelect};
use dicat_core::engine::suite::{render_text, run_suite, CheckReport, SuiteOptions};
use dicat_core::fincat::FincatBundle;
use dicat_core::findicat::{DicatFile, FinDicat};
use dicat_core::oracle::InstanceOracle;
use dicat_morita::{MoritaConfig, MoritaFile, MoritaOracle, DEFAULT_PROBE_CAP, PRESETS};

#[derive(Parser)]
#[command(name = "dicat", version, about = "Check dicategory objects against their coherence axioms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Structural validation, fibration checks and the axiom suite.
    Check(CheckArgs),
    /// Rescale one transformation and report whether the suite notices.
    Mutate(MutateArgs),
    /// Schema and structural validation of a file, without axioms.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Morita,
    Cocycle,
}

#[derive(Args)]
struct InstanceArgs {
    /// Built-in instance.
    #[arg(long, value_enum, conflicts_with = "file")]
    instance: Option<Builtin>,
    /// Instance file (`morita/v1`, `cocycle/v1` or `dicat/v1`).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Group preset of the cocycle instance.
    #[arg(long, default_value = "z2")]
    group: String,
    /// Cochain preset of the cocycle instance: `trivial` or `nontrivial`.
    #[arg(long, default_value = "trivial")]
    omega: String,
    /// Shift ω at `g,h,k` (element names) by `ζ^s`, written `g,h,k` or `g,h,k:s` (default s = 1).
    #[arg(long)]
    tamper: Vec<String>,
    /// Probe preset of the Morita instance.
    #[arg(long, default_value = "default")]
    probes: String,
    /// Most probes per axiom.
    #[arg(long)]
    probe_cap: Option<usize>,
    /// Change every quotient basis of the Morita instance by a seeded invertible matrix.
    #[arg(long)]
    scramble: bool,
    /// Axiom ids or globs, comma separated (for example `D3-1*,D3-17`).
    #[arg(long, value_delimiter = ',')]
    axioms: Vec<String>,
    #[arg(long, default_value_t = dicat_core::linalg::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inst: InstanceArgs,
}

#[derive(Args)]
struct MutateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Transformation to rescale, for example `D2-12`.
    #[arg(long)]
    target: String,
    /// Scale factor `re` or `re,im`.
    #[arg(long, default_value = "0,1")]
    scale: String,
    /// Components to rescale: `all`, `seeded`, or a probe index.
    #[arg(long, default_value = "all")]
    at: String,
}

/// Input errors exit with 2; everything else is a verdict.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

enum Instance {
    Morita(DicatData<MoritaOracle>),
    Fin(DicatData<FinDicat>),
}

/// Runs `$body` with `$d` bound to the loaded instance, whatever its oracle.
macro_rules! with_instance {
    ($inst:expr, $d:ident => $body:expr) => {
        match $inst {
            Instance::Morita($d) => $body,
            Instance::Fin($d) => $body,
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let verdict = match cli.cmd {
        Cmd::Check(a) => cmd_check(&a),
        Cmd::Mutate(a) => cmd_mutate(&a),
        Cmd::Validate { path, format } => cmd_validate(&path, format),
    };
    match verdict {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("DICAT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("DICAT_THREADS={v} is not a thread count"))?;
    if n == 0 {
        bail!("DICAT_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

// ---------------------------------------------------------------- loading

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn schema_of(text: &str, path: &Path) -> Result<String> {
    let v: serde_json::Value = serde_json::from_str(text).with_context(|| format!("{} is not JSON", path.display()))?;
    v.get("schema").and_then(|s| s.as_str()).map(str::to_string).ok_or_else(|| anyhow!("{} has no schema field", path.display()))
}

fn parse_tamper(c: &CocycleInstance, spec: &str) -> Result<([usize; 3], u32)> {
    let (pos, shift) = match spec.split_once(':') {
        Some((p, s)) => (p, s.trim().parse::<u32>().with_context(|| format!("bad tamper shift in {spec}"))?),
        None => (spec, 1),
    };
    let ix = |name: &str| {
        c.group.elements.iter().position(|e| e == name.trim()).ok_or_else(|| anyhow!("tamper {spec}: {} is not an element of the group", name.trim()))
    };
    let parts: Vec<&str> = pos.split(',').collect();
    let [g, h, k] = parts.as_slice() else { bail!("tamper {spec}: expected three elements g,h,k") };
    Ok(([ix(g)?, ix(h)?, ix(k)?], shift))
}

fn cocycle_instance(a: &InstanceArgs, mut c: CocycleInstance) -> Result<Instance> {
    for t in &a.tamper {
        let (at, shift) = parse_tamper(&c, t)?;
        c.tamper(at, shift)?;
    }
    let mut d = build_cocycle_instance(&c)?;
    if let Some(cap) = a.probe_cap {
        d.oracle.probe_cap = cap;
    }
    Ok(Instance::Fin(d))
}

fn cocycle_preset(a: &InstanceArgs) -> Result<Instance> {
    if preset_order(&a.group).is_none() {
        bail!("unknown group {} (known: {})", a.group, GROUP_PRESETS.join(", "));
    }
    cocycle_instance(a, dicat_cocycle::preset(&a.group, &a.omega)?)
}

fn morita_preset(a: &InstanceArgs) -> Result<Instance> {
    if !PRESETS.contains(&a.probes.as_str()) {
        bail!("unknown probe preset {} (known: {})", a.probes, PRESETS.join(", "));
    }
    let cfg = MoritaConfig { preset: a.probes.clone(), scramble: a.scramble, seed: a.seed, probe_cap: a.probe_cap.unwrap_or(DEFAULT_PROBE_CAP) };
    Ok(Instance::Morita(dicat_morita::build_instance(&cfg)?))
}

fn load_instance(a: &InstanceArgs) -> Result<Instance> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        bail!("tolerance must be positive, got {}", a.tol);
    }
    let Some(path) = &a.file else {
        return match a.instance.unwrap_or(Builtin::Morita) {
            Builtin::Morita => morita_preset(a),
            Builtin::Cocycle => cocycle_preset(a),
        };
    };
    let text = read(path)?;
    match schema_of(&text, path)?.as_str() {
        "morita/v1" => {
            let f = MoritaFile::parse(&text)?;
            let o = f.build_oracle(a.scramble, a.seed, a.probe_cap.unwrap_or(DEFAULT_PROBE_CAP))?;
            Ok(Instance::Morita(DicatData::new(o)))
        }
        "cocycle/v1" => cocycle_instance(a, CocycleFile::parse(&text)?),
        "dicat/v1" => {
            let f = DicatFile::parse(&text)?;
            match f.builtin.as_deref() {
                Some("cocycle") => cocycle_preset(a),
                Some("morita") => morita_preset(a),
                Some(b) => bail!("unknown builtin instance {b}"),
                None => {
                    let mut o = f.load()?;
                    if let Some(cap) = a.probe_cap {
                        o.probe_cap = cap;
                    }
                    Ok(Instance::Fin(DicatData::with_table(o, f.table()?)))
                }
            }
        }
        s => bail!("{}: unsupported schema {s}", path.display()),
    }
}

/// The bundled axioms, restricted to the requested ids and globs.
fn select_axioms(table: &GenTable, patterns: &[String]) -> Result<Vec<AxiomDef>> {
    let all = table.parse_axioms(builtin_axiom_text())?;
    if patterns.is_empty() {
        return Ok(all);
    }
    let pats = patterns
        .iter()
        .map(|p| glob::Pattern::new(p.trim()).with_context(|| format!("bad axiom pattern {p}")))
        .collect::<Result<Vec<_>>>()?;
    for (p, raw) in pats.iter().zip(patterns) {
        if !all.iter().any(|a| p.matches(&a.id)) {
            bail!("no axiom matches {raw}");
        }
    }
    Ok(all.into_iter().filter(|a| pats.iter().any(|p| p.matches(&a.id))).collect())
}

fn emit(text: &str, report: Option<&Path>) -> Result<()> {
    match report {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- commands

fn render(r: &CheckReport, f: Format) -> String {
    match f {
        Format::Json => r.to_json() + "\n",
        Format::Text => render_text(r),
    }
}

fn cmd_check(a: &CheckArgs) -> Result<bool, InputError> {
    let inst = load_instance(&a.inst)?;
    let r: CheckReport = with_instance!(&inst, d => {
        let axioms = select_axioms(&d.table, &a.inst.axioms)?;
        run_suite(d, &axioms, SuiteOptions::new(a.inst.tol, a.inst.seed))
    });
    emit(&render(&r, a.inst.format), a.inst.report.as_deref())?;
    if a.inst.report.is_some() {
        println!("{}", if r.pass { "pass" } else { "FAIL" });
    }
    Ok(r.pass)
}

fn parse_scale(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().with_context(|| format!("bad scale {s}"));
    let z = match parts.as_slice() {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => bail!("scale is `re` or `re,im`, got {s}"),
    };
    if !z.is_finite() || z.norm() == 0.0 {
        bail!("scale must be finite and nonzero, got {s}");
    }
    Ok(z)
}

fn parse_at(s: &str) -> Result<ProbeSelect> {
    Ok(match s {
        "all" => ProbeSelect::All,
        "seeded" => ProbeSelect::Seeded,
        n => ProbeSelect::Index(n.parse().with_context(|| format!("--at is all, seeded or a probe index, got {n}"))?),
    })
}

fn render_mutation(m: &MutationReport, f: Format) -> String {
    match f {
        Format::Json => serde_json::to_string_pretty(m).expect("reports serialize") + "\n",
        Format::Text => {
            let mut s = format!("mutation {} × ({}{:+}i) at {}: ", m.target, m.scale[0], m.scale[1], m.probe);
            if m.detected {
                s += &format!("detected by {}\n", m.new_failures.join(", "));
            } else {
                s += "mutation undetected\n";
            }
            s + &render_text(&m.report)
        }
    }
}

fn cmd_mutate(a: &MutateArgs) -> Result<bool, InputError> {
    let inst = load_instance(&a.inst)?;
    let spec = MutationSpec { target: a.target.clone(), scale: parse_scale(&a.scale)?, select: parse_at(&a.at)? };
    let m: MutationReport = with_instance!(&inst, d => {
        let axioms = select_axioms(&d.table, &a.inst.axioms)?;
        mutate_and_check(d, &axioms, &spec, SuiteOptions::new(a.inst.tol, a.inst.seed))?
    });
    emit(&render_mutation(&m, a.inst.format), a.inst.report.as_deref())?;
    if !m.detected {
        eprintln!("mutation undetected");
    }
    Ok(m.detected)
}

/// Structural findings of a loaded instance: missing tables first, then failing checks.
fn structure_findings<O: InstanceOracle>(d: &DicatData<O>, tol: f64) -> Vec<String> {
    let missing = missing_entries(d);
    if !missing.is_empty() {
        return missing;
    }
    let s = validate_structure(d, tol, 0);
    s.rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{}: {} failing probes{}", r.id, r.failures + r.errors, r.detail.as_ref().map(|d| format!(" ({d})")).unwrap_or_default()))
        .collect()
}

fn validation_findings(path: &Path) -> Result<(String, Vec<String>)> {
    let text = read(path)?;
    let schema = schema_of(&text, path)?;
    let tol = dicat_core::linalg::DEFAULT_TOL;
    let findings = match schema.as_str() {
        "fincat/v1" => FincatBundle::parse(&text)?.load()?.validate().0,
        "dicat/v1" => {
            let f = DicatFile::parse(&text)?;
            if f.builtin.is_some() {
                bail!("{} names a builtin instance; use check", path.display());
            }
            structure_findings(&DicatData::with_table(f.load()?, f.table()?), tol)
        }
        "morita/v1" => {
            let o = MoritaFile::parse(&text)?.build_oracle(false, 0, DEFAULT_PROBE_CAP)?;
            structure_findings(&DicatData::new(o), tol)
        }
        "cocycle/v1" => {
            let c = CocycleFile::parse(&text)?;
            structure_findings(&build_cocycle_instance(&c)?, tol)
        }
        s => bail!("{}: unsupported schema {s}", path.display()),
    };
    Ok((schema, findings))
}

fn cmd_validate(path: &Path, format: Format) -> Result<bool, InputError> {
    let (schema, findings) = validation_findings(path)?;
    let ok = findings.is_empty();
    let out = match format {
        Format::Json => {
            let v = serde_json::json!({ "schema": "validation/v1", "file_schema": schema, "pass": ok, "findings": findings });
            serde_json::to_string_pretty(&v).expect("reports serialize") + "\n"
        }
        Format::Text => {
            let mut s = format!("{} ({schema}): {}\n", path.display(), if ok { "valid" } else { "INVALID" });
            for f in &findings {
                s += &format!("FAIL  {f}\n");
            }
            s
        }
    };
    print!("{out}");
    Ok(ok)
}
