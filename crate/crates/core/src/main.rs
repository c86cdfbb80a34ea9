use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mdim_core::estimators::{
    stage_d_conditional, stage_d_measure, stage_d_unconditional, stage_fiber, stage_n_eps, stage_wdim,
    ConvergenceTrace, Quantity, StageReport,
};
use mdim_core::group::Window;
use mdim_core::harness::{self, audit_path, experiment::boxed, Experiment, Format};
use mdim_core::rational;
use mdim_core::tiling::{greedy_quasi_tile, TileFamily};
use mdim_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mdim", version, about = "Finite-stage conditional mean dimension experiments")]
struct Cli {
    /// Worker threads for the checks and the solver.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Svg,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
            OutFormat::Svg => Format::Svg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    D,
    DConditional,
    Fiber,
    Measure,
    Wdim,
    NEps,
    Mesh,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of an experiment and write its artifact directory.
    Run {
        file: PathBuf,
        /// Artifact directory; defaults to the file's `output` or `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep only the first N stages of the schedule.
        #[arg(long)]
        stages: Option<usize>,
        /// Replace the schedule's resolutions by this one.
        #[arg(long)]
        resolution: Option<u32>,
        /// Trace formats to write (repeatable).
        #[arg(long, value_enum, default_values_t = [OutFormat::Csv, OutFormat::Svg])]
        format: Vec<OutFormat>,
    },
    /// Re-verify witness dumps (a file, or every dump below a directory).
    Audit { path: PathBuf },
    /// Greedy quasi-tiling of a box `A`, given by its sides as `8` or `8x8`.
    Tile {
        window: String,
        /// Tile boxes separated by commas, e.g. `2,4` or `2x2,4x4`.
        #[arg(long)]
        tiles: String,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        /// Sides of the box `K`; the identity alone by default.
        #[arg(long)]
        k: Option<String>,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
    },
    /// Print one quantity along the schedule of an experiment.
    Estimate {
        #[arg(value_enum)]
        quantity: QuantityArg,
        file: PathBuf,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Base vertex for `fiber`.
        #[arg(long, default_value_t = 0)]
        base: usize,
        /// Measure name for `measure`; the first declared by default.
        #[arg(long)]
        measure: Option<String>,
    },
    /// Print the canonical form of an experiment file.
    Echo { file: PathBuf },
}

fn sides(spec: &str) -> Result<Vec<i64>> {
    spec.split('x')
        .map(|s| s.trim().parse::<i64>().map_err(|_| Error::InvalidParameter(format!("bad box side {s:?}"))))
        .collect()
}

fn load(file: &PathBuf, stages: Option<usize>, resolution: Option<u32>) -> Result<Experiment> {
    let mut exp = Experiment::load(file)?;
    if let Some(n) = stages {
        exp.truncate_stages(n);
    }
    if let Some(r) = resolution {
        exp.override_resolution(r);
        exp.validate()?;
    }
    Ok(exp)
}

fn tile(window: &str, tiles: &str, epsilon: &str, k: Option<&str>, format: OutFormat) -> Result<String> {
    let a_sides = sides(window)?;
    let d = a_sides.len();
    let a = boxed(d, &a_sides)?;
    let tiles = tiles.split(',').map(|t| boxed(d, &sides(t)?)).collect::<Result<Vec<Window>>>()?;
    let eps = rational::parse(epsilon).ok_or_else(|| Error::InvalidParameter(format!("bad epsilon {epsilon:?}")))?;
    let k = match k {
        Some(k) => boxed(d, &sides(k)?)?,
        None => boxed(d, &vec![1; d])?,
    };
    let outcome = greedy_quasi_tile(&TileFamily::new(tiles, eps, k)?, &a)?;
    Ok(match format {
        OutFormat::Csv => {
            let mut s = String::from("tile,center,size\n");
            let q = match &outcome {
                mdim_core::tiling::TilingOutcome::Tiled(q) => q,
                mdim_core::tiling::TilingOutcome::Failed(f) => &f.partial,
            };
            for (j, c, t) in q.translates() {
                let c: Vec<String> = c.coords().iter().map(i64::to_string).collect();
                s.push_str(&format!("{j},{},{}\n", c.join(" "), t.len()));
            }
            s.push_str(&format!("# uncovered fraction {}\n", outcome.uncovered_fraction()));
            s
        }
        _ => serde_json::to_string_pretty(&outcome).map_err(|e| Error::Io(e.to_string()))? + "\n",
    })
}

fn estimate(q: QuantityArg, exp: &Experiment, format: OutFormat, base: usize, measure: Option<&str>) -> Result<String> {
    let sys = exp.system()?;
    let u = exp.seed_cover(&sys)?;
    let opts = exp.solve_options();
    let metric = exp.metric();
    let mut out = String::new();
    let eps_list: Vec<Option<f64>> = match q {
        QuantityArg::Wdim | QuantityArg::NEps | QuantityArg::Mesh => {
            if exp.schedule.epsilons.is_empty() {
                return Err(Error::Experiment("this quantity needs schedule.epsilons".into()));
            }
            exp.schedule.epsilons.iter().map(|&e| Some(e)).collect()
        }
        _ => vec![None],
    };
    let nu = match q {
        QuantityArg::Measure => Some(
            exp.measures
                .iter()
                .find(|m| measure.is_none_or(|n| n == m.name))
                .ok_or_else(|| Error::Experiment("no such measure".into()))?,
        ),
        _ => None,
    };
    for r in exp.resolutions() {
        for eps in &eps_list {
            let mut stages: Vec<StageReport> = Vec::new();
            for f in exp.windows()? {
                let s = match (q, eps) {
                    (QuantityArg::D, _) => stage_d_unconditional(&sys, &u, &f, r, &opts)?,
                    (QuantityArg::DConditional, _) => stage_d_conditional(&sys, &u, &f, r, &opts)?,
                    (QuantityArg::Fiber, _) => stage_fiber(&sys, &u, &f, base, r, &opts)?,
                    (QuantityArg::Measure, _) => stage_d_measure(&sys, &nu.expect("measure").atoms, &u, &f, r, &opts)?,
                    (QuantityArg::Wdim, Some(e)) => stage_wdim(&sys, *e, &f, r, &metric, &opts)?,
                    (QuantityArg::NEps, Some(e)) => stage_n_eps(&sys, *e, &f, r, &metric, exp.schedule.packing_budget)?.n,
                    (QuantityArg::Mesh, Some(e)) => {
                        stage_n_eps(&sys, *e, &f, r, &metric, exp.schedule.packing_budget)?.mesh
                    }
                    _ => unreachable!("metric quantities carry epsilon"),
                };
                stages.push(s);
            }
            let t = ConvergenceTrace::new(stages);
            let mut title = format!("{:?}", quantity_of(q));
            if let Some(r) = r {
                title.push_str(&format!(" r={r}"));
            }
            if let Some(e) = eps {
                title.push_str(&format!(" eps={e}"));
            }
            match format {
                OutFormat::Csv => {
                    out.push_str(&format!("# {title}\n"));
                    out.push_str(&t.to_csv(""));
                }
                OutFormat::Json => {
                    out.push_str(&serde_json::to_string_pretty(&t).map_err(|e| Error::Io(e.to_string()))?);
                    out.push('\n');
                }
                OutFormat::Svg => out.push_str(&t.to_svg(&title)),
            }
        }
    }
    Ok(out)
}

fn quantity_of(q: QuantityArg) -> Quantity {
    match q {
        QuantityArg::D => Quantity::D,
        QuantityArg::DConditional => Quantity::DConditional,
        QuantityArg::Fiber => Quantity::Fiber,
        QuantityArg::Measure => Quantity::Measure,
        QuantityArg::Wdim => Quantity::Wdim,
        QuantityArg::NEps => Quantity::NEps,
        QuantityArg::Mesh => Quantity::Mesh,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result: Result<u8> = match cli.command {
        Command::Run { file, out, stages, resolution, format } => load(&file, stages, resolution).and_then(|exp| {
            let dir = out
                .or_else(|| exp.output.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&exp.name));
            let formats: Vec<Format> = format.into_iter().map(Format::from).collect();
            let outcome = harness::run(&exp, &dir, &formats)?;
            print!("{}", harness::summary(&outcome.verdict));
            println!("artifacts: {}", outcome.directory.display());
            Ok(outcome.verdict.exit_code as u8)
        }),
        Command::Audit { path } => audit_path(&path).map(|lines| {
            let mut bad = 0;
            for l in &lines {
                if l.ok() {
                    println!("ok    {} ({} claims)", l.file, l.claims);
                } else {
                    bad += 1;
                    println!("FAIL  {}", l.file);
                    for e in &l.errors {
                        println!("      {e}");
                    }
                }
            }
            println!("{} of {} dumps verified", lines.len() - bad, lines.len());
            u8::from(bad > 0)
        }),
        Command::Tile { window, tiles, epsilon, k, format } => tile(&window, &tiles, &epsilon, k.as_deref(), format).map(|s| {
            print!("{s}");
            0
        }),
        Command::Estimate { quantity, file, stages, resolution, format, base, measure } => {
            load(&file, stages, resolution).and_then(|exp| estimate(quantity, &exp, format, base, measure.as_deref())).map(|s| {
                print!("{s}");
                0
            })
        }
        Command::Echo { file } => Experiment::load(&file).and_then(|e| e.canonical()).map(|s| {
            print!("{s}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
