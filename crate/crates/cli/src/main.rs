use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hexdiv::element::{geometry_report, At1Mode, SpaceSpec};
use hexdiv::geometry::Hexahedron;
use hexdiv::mesh::{Mesh, MeshFamily};
use hexdiv::solver::{study_row, SolverOptions, StudyResult, StudyRow};
use hexdiv::verify::{run_suite, DEFAULT_SEED, SUITES};

#[derive(Parser, Debug)]
#[command(
    name = "hexdiv",
    version,
    about = "Mixed H(div) elements on cuboidal hexahedra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convergence study of the hybrid mixed method on a mesh sequence.
    Study(StudyArgs),
    /// Shape diagnostics of a single element given as JSON (`{"vertices": [[x,y,z]; 8]}`).
    CheckElement { path: PathBuf },
    /// Run an invariant suite: supplements, spaces, projection, lemma51 or appendix.
    Verify { suite: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeshArg {
    Cube,
    Trapezoid,
    Pillar,
    File,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(clap::Args, Debug)]
struct StudyArgs {
    #[arg(long, value_enum)]
    mesh: MeshArg,
    /// Mesh JSON files, one per row (with `--mesh file`).
    #[arg(long = "mesh-file", value_delimiter = ',')]
    mesh_files: Vec<PathBuf>,
    /// Subdivisions per axis, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// at0, at0g, at1, at1red, atr:<r>, atrred:<r>, rt0, rt1, bddf1
    #[arg(long)]
    space: String,
    #[arg(long = "at1-mode", default_value = "auto")]
    at1_mode: String,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative residual for conjugate gradients.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

type MeshSource = (usize, Box<dyn Fn() -> Result<Mesh, Failure>>);

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn numerical(msg: impl ToString) -> Failure {
    Failure::Numerical(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Study(a) => cmd_study(a),
        Command::CheckElement { path } => cmd_check_element(&path),
        Command::Verify { suite } => cmd_verify(&suite),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_study(a: StudyArgs) -> Result<(), Failure> {
    let mode: At1Mode = a.at1_mode.parse().map_err(usage)?;
    let spec = SpaceSpec::parse(&a.space, mode).map_err(usage)?;
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let meshes: Vec<MeshSource> = match a.mesh {
        MeshArg::File => {
            if a.mesh_files.is_empty() {
                return Err(usage("--mesh file needs --mesh-file"));
            }
            let ns: Vec<usize> = if a.n.is_empty() {
                Vec::new()
            } else if a.n.len() == a.mesh_files.len() {
                a.n.clone()
            } else {
                return Err(usage("--n must list one value per mesh file"));
            };
            let mut out: Vec<MeshSource> = Vec::new();
            for (k, p) in a.mesh_files.iter().enumerate() {
                let mesh = Mesh::from_json(&read(p)?)
                    .map_err(|e| numerical(format!("{}: {e}", p.display())))?;
                let n = ns
                    .get(k)
                    .copied()
                    .unwrap_or_else(|| (mesh.num_cells() as f64).cbrt().round() as usize);
                out.push((n, Box::new(move || Ok(mesh.clone()))));
            }
            out
        }
        fam => {
            let family = match fam {
                MeshArg::Cube => MeshFamily::Cube,
                MeshArg::Trapezoid => MeshFamily::Trapezoid,
                _ => MeshFamily::Pillar,
            };
            if a.n.is_empty() {
                return Err(usage("--n is required"));
            }
            if family != MeshFamily::Cube {
                if let Some(n) = a.n.iter().find(|&&n| n % 2 == 1) {
                    return Err(usage(format!(
                        "n = {n} must be even for {} meshes",
                        family.name()
                    )));
                }
            }
            a.n.iter()
                .map(|&n| {
                    (
                        n,
                        Box::new(move || Mesh::generate(family, n).map_err(numerical))
                            as Box<dyn Fn() -> _>,
                    )
                })
                .collect()
        }
    };
    if meshes.iter().any(|(n, _)| *n == 0) || meshes.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(usage("n values must be positive and strictly increasing"));
    }
    let opts = SolverOptions {
        tol: a.tol,
        ..Default::default()
    };
    let mut rows: Vec<StudyRow> = Vec::new();
    for (n, make) in &meshes {
        let t0 = Instant::now();
        let mesh = make()?;
        let row = study_row(&mesh, *n, spec, &opts, rows.last(), t0).map_err(numerical)?;
        eprintln!("n = {n}: {} cells, {:.2} s", row.cells, row.seconds);
        rows.push(row);
    }
    let name = match a.mesh {
        MeshArg::Cube => "cube",
        MeshArg::Trapezoid => "trapezoid",
        MeshArg::Pillar => "pillar",
        MeshArg::File => "file",
    };
    let result = StudyResult {
        mesh: name.into(),
        space: spec.name(),
        rows,
    };
    let text = match a.format {
        Format::Md => result.to_markdown(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(StudyResult::CSV_HEADER).map_err(numerical)?;
            for r in result.csv_records() {
                w.write_record(&r).map_err(numerical)?;
            }
            String::from_utf8(w.into_inner().map_err(numerical)?).map_err(numerical)?
        }
    };
    write_out(a.out.as_deref(), &text)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| numerical(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(numerical),
    }
}

fn cmd_check_element(path: &Path) -> Result<(), Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| numerical(format!("{}: {e}", path.display())))?;
    let hex = Hexahedron::from_json(&text).map_err(numerical)?;
    let r = geometry_report(&hex).map_err(numerical)?;
    println!("parallel face pairs: {}", r.parallel_pairs);
    println!("truncated pillar: {}", r.truncated_pillar);
    let m = &r.h_minors;
    println!("H minors 1x1: {:.6e} {:.6e} {:.6e}", m[0], m[1], m[2]);
    println!("H minors 2x2: {:.6e} {:.6e} {:.6e}", m[3], m[4], m[5]);
    println!("det H: {:.6e}", m[6]);
    println!("det(C∘H): {:.6e}", r.det_c_h);
    println!("relative det(C∘H): {:.6e}", r.rel_det_c_h);
    println!("cond(C∘H): {:.6e}", r.cond_c_h);
    println!(
        "recommended AT1 mode: {}",
        if r.recommend_symmetric {
            "symmetric"
        } else {
            "nonsymmetric"
        }
    );
    Ok(())
}

fn cmd_verify(suite: &str) -> Result<(), Failure> {
    let seed = match std::env::var("HEXDIV_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("HEXDIV_SEED={s} is not an integer")))?,
        Err(_) => DEFAULT_SEED,
    };
    let report = run_suite(suite, seed).ok_or_else(|| {
        usage(format!(
            "unknown suite {suite:?}; expected one of {}",
            SUITES.join(", ")
        ))
    })?;
    print!("{report}");
    let failed: usize = report.properties.iter().map(|p| p.total - p.passed).sum();
    println!("{failed} failures");
    if report.ok() {
        Ok(())
    } else {
        Err(numerical(format!("suite {suite}: {failed} failures")))
    }
}
