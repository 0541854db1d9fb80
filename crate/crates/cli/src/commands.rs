use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use phdae_core::analyze::{
    check_dh_equivalence, dh_canonicalize, index, index2_staircase, regularity, verify_structured_index_law,
    wong_sequences, DHVariant, Pencil,
};
use phdae_core::condense::{
    dirac_condense, extended_condense, lagrange_condense, monotone_condense, ExtendedCondensed, ExtendedVariant,
};
use phdae_core::convert::{
    adjoint, dh_to_monotone, to_gradient, to_klq, to_poisson, to_symplectic, to_x_representation, with_multipliers,
};
use phdae_core::models::{build, BuiltSystem, ModelKind, ModelSpec};
use phdae_core::numkernel::spectral_norm;
use phdae_core::oracle::{
    predicted_dirac, predicted_lagrange, random_dh, random_dirac, random_extended_regular, random_lagrange,
    random_weierstrass, shuffle_index,
};
use phdae_core::structures::{validate, Frame, StructureKind};
use phdae_core::TolerancePolicy;

use crate::input::{load, load_vector, write_matrix_market, LoadedSystem, MatrixSource, SystemFile, SystemKind};
use crate::report::{CliError, Report, Status, EXIT_OK, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "phdae", version, about = "Structured analysis of port-Hamiltonian descriptor systems")]
struct Cli {
    /// Relative rank tolerance, overriding the file and the default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural invariants of a system file.
    Validate { file: PathBuf },
    /// Compute a condensed form.
    Condense {
        file: PathBuf,
        #[arg(long, value_enum)]
        form: Form,
    },
    /// Regularity, differentiation index and finite spectrum of the pencil.
    Index { file: PathBuf },
    /// Decide whether the pencil is equivalent to a dissipative Hamiltonian pencil.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        variant: Variant,
    },
    /// Translate an extended system into another representation.
    Convert {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Evaluate the Hamiltonian at a vector.
    Hamiltonian {
        file: PathBuf,
        #[arg(long)]
        at: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameArg::Z)]
        frame: FrameArg,
    },
    /// Build a physical fixture and write it as a system file.
    Model {
        kind: String,
        /// Parameter assignment `name=value`; repeatable.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Store each matrix as a Matrix Market file next to the manifest.
        #[arg(long)]
        mm: bool,
    },
    /// Randomized consistency checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Form {
    Lagrange,
    Dirac,
    ExtendedLagrange,
    ExtendedDirac,
    Monotone,
    #[value(name = "index2-staircase")]
    Index2Staircase,
    DhCanonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Variant {
    WithQ,
    QIdentity,
    Lossless,
}

impl From<Variant> for DHVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::WithQ => DHVariant::WithQ,
            Variant::QIdentity => DHVariant::QIdentity,
            Variant::Lossless => DHVariant::Lossless,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    X,
    Klq,
    Poisson,
    Gradient,
    Symplectic,
    Adjoint,
    Monotone,
    Multipliers,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FrameArg {
    Z,
    X,
    E,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Z => Frame::Z,
            FrameArg::X => Frame::X,
            FrameArg::E => Frame::E,
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Condense { .. } => "condense",
            Command::Index { .. } => "index",
            Command::Check { .. } => "check",
            Command::Convert { .. } => "convert",
            Command::Hamiltonian { .. } => "hamiltonian",
            Command::Model { .. } => "model",
            Command::Selftest { .. } => "selftest",
        }
    }

    fn input(&self) -> Option<String> {
        match self {
            Command::Validate { file }
            | Command::Condense { file, .. }
            | Command::Index { file }
            | Command::Check { file, .. }
            | Command::Convert { file, .. }
            | Command::Hamiltonian { file, .. } => Some(file.display().to_string()),
            Command::Model { kind, .. } => Some(kind.clone()),
            Command::Selftest { .. } => None,
        }
    }
}

/// Parse `argv`, run one subcommand, print its report and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let report = execute(&cli);
    match cli.format {
        Format::Json => print!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    if report.verdict.status == Status::UsageError || report.verdict.status == Status::NumericalFailure {
        eprintln!("phdae: {}", report.verdict.summary);
    }
    report.exit_code()
}

fn execute(cli: &Cli) -> Report {
    let name = cli.command.name();
    let input = cli.command.input();
    let mut tol = TolerancePolicy::default();
    let res = (|| -> Result<Report, CliError> {
        let sys = match &cli.command {
            Command::Validate { file }
            | Command::Condense { file, .. }
            | Command::Index { file }
            | Command::Check { file, .. }
            | Command::Convert { file, .. }
            | Command::Hamiltonian { file, .. } => Some(load(file)?),
            _ => None,
        };
        if let Some(s) = &sys {
            tol = s.tolerances.apply(tol);
        }
        if let Some(t) = cli.tol {
            tol.relative_rank_tol = Some(t);
        }
        tol.validate()?;
        let mut r = Report::new(name, input.clone(), tol);
        match &cli.command {
            Command::Validate { .. } => cmd_validate(&mut r, sys.as_ref().unwrap(), &tol)?,
            Command::Condense { form, .. } => cmd_condense(&mut r, sys.as_ref().unwrap(), *form, &tol)?,
            Command::Index { .. } => cmd_index(&mut r, sys.as_ref().unwrap(), &tol)?,
            Command::Check { variant, .. } => cmd_check(&mut r, sys.as_ref().unwrap(), *variant, &tol)?,
            Command::Convert { to, .. } => cmd_convert(&mut r, sys.as_ref().unwrap(), *to, &tol)?,
            Command::Hamiltonian { at, frame, .. } => {
                cmd_hamiltonian(&mut r, sys.as_ref().unwrap(), at, *frame, &tol)?
            }
            Command::Model { kind, params, variant, out, mm } => {
                cmd_model(&mut r, kind, params, variant.as_deref(), out, *mm)?
            }
            Command::Selftest { seed, trials } => cmd_selftest(&mut r, *seed, *trials)?,
        }
        Ok(r)
    })();
    res.unwrap_or_else(|e| Report::failure(name, input, tol, &e))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn cmd_validate(r: &mut Report, sys: &LoadedSystem, tol: &TolerancePolicy) -> Result<(), CliError> {
    let SystemKind::Structure(kind) = sys.kind else {
        let p = sys.pencil()?;
        let reg = regularity(&p, tol)?;
        r.result(&reg);
        if reg.regular {
            r.verdict(Status::Ok, format!("{}x{} pencil, regular", p.n(), p.n()));
        } else {
            r.verdict(Status::Negative, format!("{}x{} pencil, singular", p.n(), p.n()));
            r.reason("pencil is not regular");
        }
        return Ok(());
    };
    let rep = validate(kind, &sys.matrices, tol)?;
    for c in &rep.checks {
        r.residual(&c.invariant, c.value);
        let mark = if c.passed { "ok  " } else { "FAIL" };
        r.detail(format!("{mark} {}: {:.3e} (threshold {:.3e})", c.invariant, c.value, c.threshold));
    }
    for c in rep.violations() {
        r.reason(format!("{}: {:.3e} exceeds {:.3e}", c.invariant, c.value, c.threshold));
    }
    if rep.valid {
        r.verdict(Status::Ok, format!("valid {kind}"));
    } else {
        r.verdict(Status::Negative, format!("not a valid {kind}"));
    }
    r.result(&rep);
    Ok(())
}

/// Residuals far above the structure tolerance mean the canonical pattern was
/// not reached.
fn pattern_verdict(r: &mut Report, residuals: &[(&str, f64)], scale: f64, tol: &TolerancePolicy, what: &str) {
    let bound = tol.structure_abs(scale);
    let mut ok = true;
    for &(name, v) in residuals {
        r.residual(name, v);
        if !(v <= bound) {
            ok = false;
            r.reason(format!("{name} residual {v:.3e} exceeds {bound:.3e}"));
        }
    }
    if ok {
        r.verdict(Status::Ok, what.to_string());
    } else {
        r.verdict(Status::NumericalFailure, format!("{what}: canonical pattern not reached"));
    }
}

fn extended_report(r: &mut Report, c: &ExtendedCondensed, scale: f64, tol: &TolerancePolicy) {
    r.warnings.extend(c.warnings.iter().cloned());
    r.detail(format!("blocks: n1={} n2={}", c.n1, c.n2));
    r.matrix("first", &c.first);
    r.matrix("second", &c.second);
    r.matrix("P", &c.p);
    r.matrix("S", &c.s);
    pattern_verdict(r, &[("pattern", c.residual)], scale, tol, "condensed");
    for ch in c.checks.iter().filter(|ch| !ch.passed) {
        r.reason(format!("{}: {:.3e} exceeds {:.3e}", ch.invariant, ch.value, ch.threshold));
        r.verdict(Status::Negative, "condensed form violates a structural invariant");
    }
    r.result(c);
}

fn cmd_condense(r: &mut Report, sys: &LoadedSystem, form: Form, tol: &TolerancePolicy) -> Result<(), CliError> {
    match form {
        Form::Lagrange => {
            let lp = sys.lagrange()?;
            let c = lagrange_condense(&lp, tol)?;
            let b = c.blocks;
            r.detail(format!("blocks: m1={} m2={} m3={} m4={} n5={}", b.m1, b.m2, b.m3, b.m4, b.n5));
            r.matrix("V^-1 P W", &c.p_form);
            r.matrix("V^T S W", &c.s_form);
            r.warnings.extend(c.warnings.iter().cloned());
            let scale = lp.p.norm().max(lp.s.norm());
            pattern_verdict(r, &[("p", c.residual_p), ("s", c.residual_s)], scale, tol, "condensed");
            r.result(&c);
        }
        Form::Dirac => {
            let dp = sys.dirac()?;
            let c = dirac_condense(&dp, tol)?;
            let b = c.blocks;
            r.detail(format!("blocks: l1={} l3={} l4={} n5={}", b.l1, b.l3, b.l4, b.n5));
            r.matrix("U^T K V", &c.k_form);
            r.matrix("U^T L V^-T", &c.l_form);
            r.warnings.extend(c.warnings.iter().cloned());
            let scale = dp.k.norm().max(dp.l.norm());
            pattern_verdict(r, &[("k", c.residual_k), ("l", c.residual_l)], scale, tol, "condensed");
            r.result(&c);
        }
        Form::ExtendedLagrange | Form::ExtendedDirac => {
            let sys = sys.extended()?;
            let variant =
                if form == Form::ExtendedLagrange { ExtendedVariant::LagrangeFirst } else { ExtendedVariant::DiracFirst };
            let c = extended_condense(&sys, variant, tol)?;
            let scale = sys.k.norm().max(sys.l.norm()).max(sys.p.norm()).max(sys.s.norm());
            extended_report(r, &c, scale, tol);
        }
        Form::Monotone => {
            let sys = sys.monotone_system()?;
            let c = monotone_condense(&sys, tol)?;
            let scale = sys.c.norm().max(sys.d.norm()).max(sys.p.norm()).max(sys.s.norm());
            extended_report(r, &c, scale, tol);
        }
        Form::Index2Staircase => {
            let p = sys.pencil()?;
            let st = index2_staircase(&p, tol)?;
            let [n1, n2, n3, n4] = st.blocks;
            r.detail(format!("blocks: n1={n1} n2={n2} n3={n3} n4={n4}"));
            r.matrix("U^T E V", &st.e);
            r.matrix("U^T A V", &st.a);
            pattern_verdict(r, &[("pattern", st.pattern_residual)], p.scale(), tol, "staircase");
            r.result(&st);
        }
        Form::DhCanonical => {
            let p = sys.pencil()?;
            let c = dh_canonicalize(&p, tol)?;
            let [h1, h2, h3, h4] = c.blocks;
            r.detail(format!("blocks: h1={h1} h2={h2} h3={h3} h4={h4}"));
            r.matrix("E33", &c.e33);
            r.matrix("J33", &c.j33);
            r.matrix("R33", &c.r33);
            pattern_verdict(r, &[("e", c.residual_e), ("a", c.residual_a)], p.scale(), tol, "canonical dH form");
            r.result(&c);
        }
    }
    Ok(())
}

fn cmd_index(r: &mut Report, sys: &LoadedSystem, tol: &TolerancePolicy) -> Result<(), CliError> {
    let p = sys.pencil()?;
    let reg = regularity(&p, tol)?;
    if !reg.agree {
        r.warnings.push("Wong limits and shift test disagree on regularity".into());
    }
    if !reg.regular {
        r.verdict(Status::Negative, "pencil is not regular");
        r.reason(format!("dim V* + dim W* = {} + {} for n = {}", reg.dim_v_star, reg.dim_w_star, p.n()));
        r.result(&reg);
        return Ok(());
    }
    let rep = index(&p, tol)?;
    r.residual("decision_margin_decades", rep.decision_margin);
    r.detail(format!("index: {}", rep.index));
    r.detail(format!("infinite block dimension: {}", rep.infinite_block_dim));
    for ev in &rep.finite_eigenvalues {
        r.detail(format!(
            "eigenvalue {:+.6e} {:+.6e}i  algebraic {} geometric {} largest block {}",
            ev.re, ev.im, ev.algebraic, ev.geometric, ev.largest_block
        ));
    }
    if let SystemKind::Structure(StructureKind::Extended) = sys.kind {
        let law = verify_structured_index_law(&sys.extended()?, tol)?;
        r.detail(format!("P singular: {}  index law holds: {}", law.p_singular, law.law_holds));
    }
    if rep.borderline {
        r.verdict(Status::NumericalFailure, format!("index {} (rank decision within one decade of the threshold)", rep.index));
        r.reason(format!("decision margin {:.2} decades", rep.decision_margin));
    } else {
        r.verdict(Status::Ok, format!("index {}", rep.index));
    }
    r.result(&rep);
    Ok(())
}

fn cmd_check(r: &mut Report, sys: &LoadedSystem, variant: Variant, tol: &TolerancePolicy) -> Result<(), CliError> {
    let v = check_dh_equivalence(&sys.pencil()?, variant.into(), tol)?;
    for c in &v.failed_conditions {
        r.reason(c.clone());
    }
    r.warnings.extend(v.side_conditions.iter().cloned());
    r.detail(format!("index: {}", v.index));
    if v.equivalent {
        r.verdict(Status::Ok, "equivalent to a dH pencil");
    } else {
        r.verdict(Status::Negative, "not equivalent to a dH pencil");
    }
    r.result(&v);
    Ok(())
}

fn cmd_convert(r: &mut Report, sys: &LoadedSystem, to: Target, tol: &TolerancePolicy) -> Result<(), CliError> {
    if to == Target::Monotone {
        let m = match sys.kind {
            SystemKind::Structure(StructureKind::Dh) => dh_to_monotone(&sys.dh()?, tol)?,
            _ => return Err(usage("--to monotone needs a dh system")),
        };
        for (n, x) in [("C", &m.c), ("D", &m.d), ("P", &m.p), ("S", &m.s)] {
            r.matrix(n, x);
        }
        let rep = m.validate(tol)?;
        for c in &rep.checks {
            r.residual(&c.invariant, c.value);
        }
        if rep.valid {
            r.verdict(Status::Ok, "monotone annihilator system");
        } else {
            r.verdict(Status::NumericalFailure, "converted system fails validation");
        }
        r.result(&m);
        return Ok(());
    }
    let ext = sys.extended()?;
    match to {
        Target::X => {
            let x = to_x_representation(&ext, tol)?;
            r.matrix("Ex", &x.ex);
            r.matrix("Ax", &x.ax);
            r.verdict(Status::Ok, "x-representation");
            r.result(&x);
        }
        Target::Klq => {
            let f = to_klq(&ext, tol)?;
            r.matrix("K", &f.k);
            r.matrix("L", &f.l);
            r.matrix("Q", &f.q);
            r.residual("symmetry", f.symmetry_residual);
            r.warnings.extend(f.warnings.iter().cloned());
            r.verdict(Status::Ok, "(K, L, Q) form");
            r.result(&f);
        }
        Target::Poisson => {
            let f = to_poisson(&ext, tol)?;
            r.matrix("J", &f.j);
            r.matrix("Q", &f.q);
            r.residual("skew", f.skew_residual);
            r.residual("symmetry", f.symmetry_residual);
            r.warnings.extend(f.warnings.iter().cloned());
            r.verdict(Status::Ok, "Poisson form");
            r.result(&f);
        }
        Target::Gradient => {
            let f = to_gradient(&ext, tol)?;
            r.matrix("J", &f.j);
            r.matrix("Ex", &f.ex);
            r.matrix("Ax", &f.ax);
            r.residual("skew", f.skew_residual);
            r.warnings.extend(f.warnings.iter().cloned());
            r.verdict(Status::Ok, "gradient form");
            r.result(&f);
        }
        Target::Symplectic => {
            let f = to_symplectic(&ext, tol)?;
            r.matrix("J", &f.j);
            r.matrix("Q", &f.q);
            r.residual("skew", f.skew_residual);
            r.residual("symmetry", f.symmetry_residual);
            r.warnings.extend(f.warnings.iter().cloned());
            r.verdict(Status::Ok, "symplectic form");
            r.result(&f);
        }
        Target::Adjoint => {
            let a = adjoint(&ext);
            r.matrix("Ex", &a.ex);
            r.matrix("Ax", &a.ax);
            r.verdict(Status::Ok, "adjoint system");
            r.result(&a);
        }
        Target::Multipliers => {
            let m = with_multipliers(&ext, tol)?;
            r.detail(format!("blocks: n1={} n2={}", m.n1, m.n2));
            r.matrix("E", &m.e);
            r.matrix("A", &m.a);
            r.residual("v_orthogonality", m.v_orthogonality);
            r.verdict(Status::Ok, "system with Lagrange multipliers");
            r.result(&m);
        }
        Target::Monotone => unreachable!(),
    }
    Ok(())
}

fn cmd_hamiltonian(
    r: &mut Report,
    sys: &LoadedSystem,
    at: &Path,
    frame: FrameArg,
    tol: &TolerancePolicy,
) -> Result<(), CliError> {
    let v = load_vector(at)?;
    let frame: Frame = frame.into();
    let h = match sys.kind {
        SystemKind::Structure(StructureKind::Dh) => sys.dh()?.hamiltonian(&v, frame, tol)?,
        SystemKind::Structure(StructureKind::Lagrange | StructureKind::Extended | StructureKind::MonotoneAnnihilator) => {
            sys.lagrange()?.hamiltonian(&v, frame, tol)?
        }
        _ => return Err(usage("hamiltonian needs a lagrange, extended, monotone-annihilator or dh system")),
    };
    r.detail(format!("H = {h:.16e}"));
    r.verdict(Status::Ok, format!("H = {h:.6e}"));
    r.result(&json!({ "frame": frame, "value": h }));
    Ok(())
}

fn cmd_model(
    r: &mut Report,
    kind: &str,
    params: &[String],
    variant: Option<&str>,
    out: &Path,
    mm: bool,
) -> Result<(), CliError> {
    let mk: ModelKind = kind.parse()?;
    let mut spec = ModelSpec::new(mk);
    for p in params {
        let (k, v) = p.split_once('=').ok_or_else(|| usage(format!("--param '{p}' is not name=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| usage(format!("--param '{p}': bad number")))?;
        spec = spec.param(k.trim(), v);
    }
    if let Some(v) = variant {
        spec = spec.variant(v);
    }
    let model = build(&spec)?;
    let mut file = match &model.system {
        BuiltSystem::Dh(s) => SystemFile::inline("dh", &[("E", &s.e), ("J", &s.j), ("R", &s.r), ("Q", &s.q)]),
        BuiltSystem::Extended(s) => {
            SystemFile::inline("extended", &[("K", &s.k), ("L", &s.l), ("P", &s.p), ("S", &s.s)])
        }
    };
    file.parameters = spec.parameters.clone();
    file.variables = Some(model.variables.clone());
    if mm {
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("system").to_string();
        let dir = out.parent().unwrap_or(Path::new(""));
        for (name, src) in file.matrices.iter_mut() {
            let MatrixSource::Inline(m) = src else { continue };
            let rel = format!("{stem}.{name}.mtx");
            let m = m.to_mat().map_err(CliError::Core)?;
            fs::write(dir.join(&rel), write_matrix_market(&m))
                .map_err(|e| usage(format!("cannot write {rel}: {e}")))?;
            *src = MatrixSource::File(rel);
        }
    }
    fs::write(out, crate::report::to_json(&file)).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    r.detail(format!("variables: {}", model.variables.join(" ")));
    if let Some(i) = model.facts.index {
        r.detail(format!("expected index: {i}"));
    }
    for n in &model.facts.notes {
        r.detail(n.clone());
    }
    r.verdict(Status::Ok, format!("wrote {} ({} system, n = {})", out.display(), file.kind, model.variables.len()));
    r.result(&json!({ "out": out.display().to_string(), "model": model }));
    Ok(())
}

#[derive(Default)]
struct Tally {
    run: usize,
    failed: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.run += 1;
        if !ok {
            self.failed.push(what());
        }
    }
}

fn cmd_selftest(r: &mut Report, seed: u64, trials: usize) -> Result<(), CliError> {
    let tol = TolerancePolicy::with_rank_tol(1e-9);
    r.tolerances = tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut t = Tally::default();
    for i in 0..trials {
        let n = rng.random_range(1..=10);

        let lp = random_lagrange(&mut rng, n);
        let c = lagrange_condense(&lp, &tol)?;
        let scale = lp.p.norm().max(lp.s.norm());
        worst = worst.max(c.residual_p.max(c.residual_s) / scale);
        t.check(c.blocks == predicted_lagrange(&lp, &tol)?, || format!("trial {i}: Lagrange blocks differ from oracle"));

        let dp = random_dirac(&mut rng, n);
        let c = dirac_condense(&dp, &tol)?;
        let scale = dp.k.norm().max(dp.l.norm());
        worst = worst.max(c.residual_k.max(c.residual_l) / scale);
        t.check(c.blocks == predicted_dirac(&dp, &tol)?, || format!("trial {i}: Dirac blocks differ from oracle"));

        let sys = random_extended_regular(&mut rng, n);
        let law = verify_structured_index_law(&sys, &tol)?;
        t.check(law.law_holds, || format!("trial {i}: index law fails (index {})", law.index));

        let w = random_weierstrass(&mut rng, n, 3);
        let wong = wong_sequences(&w.pencil, &tol)?.index();
        let shuffle = shuffle_index(&w.pencil, &tol)?;
        t.check(wong == shuffle && wong == w.index(), || {
            format!("trial {i}: Wong {wong}, shuffle {shuffle}, constructed {}", w.index())
        });

        let dh = random_dh(&mut rng, n);
        let z = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let bound = 1e-12 * z.norm_squared() * spectral_norm(&dh.r) * spectral_norm(&dh.q).powi(2);
        t.check(dh.energy_rate(&z) <= bound, || format!("trial {i}: dH energy increases"));

        let p = Pencil::try_from(&sys)?;
        t.check(index(&p, &tol)?.index == shuffle_index(&p, &tol)?, || format!("trial {i}: index differs from shuffle"));
    }
    r.residual("worst_relative_condense_residual", worst);
    r.detail(format!("seed {seed}, {trials} trials, {} checks", t.run));
    if worst > 1e-10 {
        t.failed.push(format!("condensed-form residual {worst:.3e} exceeds 1e-10"));
    }
    for f in &t.failed {
        r.reason(f.clone());
    }
    if t.failed.is_empty() {
        r.verdict(Status::Ok, format!("{} checks passed", t.run));
    } else {
        r.verdict(Status::Negative, format!("{} of {} checks failed", t.failed.len(), t.run));
    }
    r.result(&json!({ "seed": seed, "trials": trials, "checks": t.run, "failures": t.failed }));
    Ok(())
}
