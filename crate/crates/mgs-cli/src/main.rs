use clap::{Parser, Subcommand};
use mgs::integrability::{decide_with, DecideOptions, Status, Verdict, VerdictError};
use mgs::lie_catalog::{entry, representative_ids, AlgebraEntry, GroupId};
use mgs::spencer::{analyze, HomSpace};
use mgs::structures::Scene;
use mgs::tensor_core::{canonical_case, fmt_num, Mat3};
use serde_json::json;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

// stdout may be a closed pipe (`mgs catalog | head`); drop the rest quietly
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

const INPUT_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "mgs", version, about = "Local integrability of material G-structures in 3D")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide integrability of the structure in a scene file
    Analyze {
        path: PathBuf,
        /// grid points per axis (overrides the scene)
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        grid: Option<u64>,
        /// residual tolerance (overrides the scene)
        #[arg(long, value_parser = positive)]
        tol: Option<f64>,
        #[arg(long)]
        json: bool,
        /// include the residual at every grid point
        #[arg(long)]
        report_obstructions: bool,
    },
    /// Show a catalog entry, or list all of them
    Catalog {
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Spencer operator analysis of a group's Lie algebra
    Spencer {
        #[arg(long)]
        group: String,
        #[arg(long)]
        json: bool,
    },
    /// Canonical form of a 3x3 matrix (row-major; read from stdin when absent)
    ClassifyTensor {
        #[arg(allow_negative_numbers = true)]
        entries: Vec<f64>,
        #[arg(long, default_value_t = 1e-9, value_parser = positive)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

struct Fail(u8, String);

fn input<E: ToString>(e: E) -> Fail {
    Fail(INPUT_ERROR, e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are malformed input; --help and --version are not errors
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { 0 });
        }
    };
    if let Some(n) = std::env::var("MGS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // ignore failure: the pool may already exist
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let res = match cli.cmd {
        Cmd::Analyze { path, grid, tol, json, report_obstructions } => {
            run_analyze(&path, grid, tol, json, report_obstructions)
        }
        Cmd::Catalog { group, json } => run_catalog(group.as_deref(), json).map(|_| 0),
        Cmd::Spencer { group, json } => run_spencer(&group, json).map(|_| 0),
        Cmd::ClassifyTensor { entries, tol, json } => run_classify(entries, tol, json).map(|_| 0),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run_analyze(path: &PathBuf, grid: Option<u64>, tol: Option<f64>, json: bool, report: bool) -> Result<u8, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let mut scene = Scene::from_toml(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if let Some(n) = grid {
        scene.options.grid = Some(n as usize);
    }
    if let Some(t) = tol {
        scene.options.tol = Some(t);
    }
    let ms = scene.build().map_err(|e| input(format!("{}: {e}", path.display())))?;
    let opts = DecideOptions { tol: scene.tol(), report_obstructions: report };
    let v = decide_with(&ms, &opts).map_err(|e: VerdictError| {
        let code = if e.is_input_error() { INPUT_ERROR } else { RUNTIME_ERROR };
        Fail(code, format!("{}: {e}", path.display()))
    })?;
    if json {
        out!("{}", serde_json::to_string_pretty(&v).expect("verdict serializes"));
    } else {
        print_verdict(&v);
    }
    Ok(v.status.exit_code() as u8)
}

fn point(p: &[f64; 3]) -> String {
    format!("({}, {}, {})", fmt_num(p[0]), fmt_num(p[1]), fmt_num(p[2]))
}

fn print_verdict(v: &Verdict) {
    out!("group {}: {:?}", v.group, v.status);
    let width = v.conditions.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &v.conditions {
        let mark = if c.pass { "pass" } else { "FAIL" };
        out!("  {mark}  {:width$}  residual {:.3e}  at {}", c.name, c.residual, point(&c.witness));
        if let Some(pts) = &c.points {
            for (p, r) in pts.iter().filter(|(_, r)| r.is_nan() || *r > c.tol) {
                out!("        {:.3e} at {}", r, point(p));
            }
        }
    }
    for n in &v.notes {
        out!("note: {n}");
    }
    if v.status == Status::Integrable && v.conditions.is_empty() {
        out!("  (no conditions: every such structure is integrable)");
    }
}

fn parse_group(s: &str) -> Result<(GroupId, AlgebraEntry), Fail> {
    let id: GroupId = s.parse().map_err(input)?;
    let ent = entry(&id).map_err(input)?;
    Ok((id, ent))
}

fn rows(m: &Mat3) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn entry_json(e: &AlgebraEntry) -> serde_json::Value {
    json!({
        "group": e.id,
        "dim": e.dim,
        "material_class": e.material_class,
        "rule": e.rule,
        "description": e.description,
        "invariants": e.invariants,
        "basis": e.basis.iter().map(rows).collect::<Vec<_>>(),
    })
}

fn run_catalog(group: Option<&str>, json: bool) -> Result<(), Fail> {
    let entries: Vec<AlgebraEntry> = match group {
        Some(g) => vec![parse_group(g)?.1],
        None => representative_ids().iter().map(|id| entry(id).map_err(input)).collect::<Result<_, _>>()?,
    };
    if json {
        let v: Vec<_> = entries.iter().map(entry_json).collect();
        let doc = if group.is_some() { v[0].clone() } else { serde_json::Value::Array(v) };
        out!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(());
    }
    if group.is_none() {
        out!("{:<12} {:>3}  {:<32} rule", "group", "dim", "class");
        for e in &entries {
            let class = serde_json::to_value(e.material_class).expect("json");
            out!("{:<12} {:>3}  {:<32} {}", e.id.to_string(), e.dim, class.as_str().unwrap_or(""), e.rule.id);
        }
        return Ok(());
    }
    let e = &entries[0];
    out!("group {}", e.id);
    out!("dim {}", e.dim);
    out!("class {}", serde_json::to_value(e.material_class).expect("json").as_str().unwrap_or(""));
    out!("rule {} ({})", e.rule.id, serde_json::to_value(e.rule.kind).expect("json").as_str().unwrap_or(""));
    out!("{}", e.description);
    for (k, b) in e.basis.iter().enumerate() {
        let r = rows(b);
        let fmt = |row: &[f64; 3]| row.iter().map(|x| format!("{:>3}", fmt_num(*x))).collect::<Vec<_>>().join(" ");
        out!("  H{} = [{}; {}; {}]", k + 1, fmt(&r[0]), fmt(&r[1]), fmt(&r[2]));
    }
    Ok(())
}

fn run_spencer(group: &str, json: bool) -> Result<(), Fail> {
    let (id, e) = parse_group(group)?;
    let space = HomSpace::from_mat3(&e.basis).map_err(|err| Fail(RUNTIME_ERROR, err.to_string()))?;
    let r = analyze(&space);
    if json {
        let mut v = serde_json::to_value(&r).expect("json");
        v["group"] = json!(id);
        out!("{}", serde_json::to_string_pretty(&v).expect("json"));
        return Ok(());
    }
    out!("group {id}");
    out!("dim_algebra {}", r.dim_algebra);
    out!("dim_domain {}", r.dim_domain);
    out!("dim_codomain {}", r.dim_codomain);
    out!("dim_kernel {}", r.dim_kernel);
    out!("dim_image {}", r.dim_image);
    out!("injective {}", r.injective);
    out!("surjective {}", r.surjective);
    for (k, c) in r.kernel_basis.iter().enumerate() {
        let s: Vec<String> = c.iter().map(|x| fmt_num(*x)).collect();
        out!("  kernel {}: [{}]", k + 1, s.join(", "));
    }
    Ok(())
}

fn run_classify(mut entries: Vec<f64>, tol: f64, json: bool) -> Result<(), Fail> {
    if entries.is_empty() {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(input)?;
        entries = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| input(format!("not a number: '{t}'"))))
            .collect::<Result<_, _>>()?;
    }
    if entries.len() != 9 || entries.iter().any(|x| !x.is_finite()) {
        return Err(input(format!("expected 9 finite reals, got {}", entries.len())));
    }
    let m = Mat3::from_row_slice(&entries);
    let c = canonical_case(&m, tol).map_err(|e| Fail(RUNTIME_ERROR, e.to_string()))?;
    if json {
        out!("{}", serde_json::to_string_pretty(&c).expect("json"));
    } else {
        out!("{c}");
    }
    Ok(())
}
