use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use swimkit::cover::{lift_samples, verdict, VerdictOptions};
use swimkit::scenario::{self, RunStatus, Scenario};

#[derive(Parser)]
#[command(name = "swimkit", version, about = "Simulate shape-changing swimmers and check boundedness of their strokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios (files or builtin names) concurrently.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
    },
    /// Lift a `t,s` series and report whether its lift stays bounded.
    Verdict {
        csv: PathBuf,
        /// Treat the shape as an angle on the circle.
        #[arg(long)]
        circle: bool,
        /// Column holding the shape; defaults to the second column.
        #[arg(long, default_value_t = 1)]
        column: usize,
    },
    /// List builtin scenarios.
    ListScenarios,
    /// Write the panel mesh of a scenario's swimmer (and obstacle) as CSV to stdout.
    ExportMesh {
        config: String,
        /// Stroke offset from the rest opening.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        stroke: f64,
    },
}

fn load(arg: &str) -> Result<Scenario, String> {
    let path = Path::new(arg);
    if path.is_file() {
        return scenario::load_config(path).map_err(|e| format!("{arg}:\n{e}"));
    }
    scenario::builtin(arg).ok_or_else(|| format!("{arg}: no such file or builtin scenario"))
}

fn run(configs: &[String]) -> Result<u8, String> {
    let scenarios = configs.iter().map(|c| load(c)).collect::<Result<Vec<_>, _>>()?;
    let mut code = 0u8;
    for (sc, res) in scenarios.iter().zip(scenario::run_batch(&scenarios)) {
        match res {
            Ok(out) => {
                for f in &out.files {
                    println!("{}: wrote {}", sc.name, f.display());
                }
                if out.status == RunStatus::CollisionStop {
                    println!("{}: collision stop at t = {}", sc.name, out.summary["end_time"]);
                    code = code.max(out.status.exit_code() as u8);
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", sc.name);
                code = code.max(1);
            }
        }
    }
    Ok(code)
}

fn verdict_cmd(csv: &Path, circle: bool, column: usize) -> Result<u8, String> {
    let text = std::fs::read_to_string(csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    let (mut t, mut s) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.first().and_then(|x| x.parse::<f64>().ok()), cols.get(column).and_then(|x| x.parse::<f64>().ok()));
        match parsed {
            (Some(a), Some(b)) => {
                t.push(a);
                s.push(b);
            }
            _ if i == 0 || line.trim().is_empty() => {}
            _ => return Err(format!("{}:{}: expected numbers in columns 0 and {column}", csv.display(), i + 1)),
        }
    }
    if s.is_empty() {
        return Err(format!("{}: no samples", csv.display()));
    }
    let lp = lift_samples(&t, &s, circle, s[0]).map_err(|e| e.to_string())?;
    print!("{}", verdict(&lp, &VerdictOptions::default()).report());
    Ok(0)
}

fn export_mesh(config: &str, stroke: f64) -> Result<u8, String> {
    let sc = load(config)?;
    let geom = sc.model.geometry().ok_or("the synthetic model has no geometry")?;
    let mut body = swimkit::geometry::build_scallop(&geom.with_alpha(sc.model.rest() + stroke))
        .map_err(|e| e.to_string())?
        .transformed(&sc.initial);
    let obstacle = match &sc.model {
        scenario::Model::HighReObstacle { obstacle, .. } => Some(obstacle),
        scenario::Model::LowRe { wall, .. } => wall.as_ref(),
        _ => None,
    };
    if let Some(o) = obstacle {
        body = body.merged_with(&o.boundary().map_err(|e| e.to_string())?);
    }
    print!("{}", body.to_csv());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { configs } => run(&configs),
        Command::Verdict { csv, circle, column } => verdict_cmd(&csv, circle, column),
        Command::ListScenarios => {
            for n in scenario::builtin_names() {
                let sc = scenario::builtin(n).expect("builtin parses");
                println!("{n}\t{}\t{}", sc.model.kind(), sc.stroke);
            }
            Ok(0)
        }
        Command::ExportMesh { config, stroke } => export_mesh(&config, stroke),
    };
    match res {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
