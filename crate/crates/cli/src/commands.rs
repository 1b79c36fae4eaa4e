use std::fs;
use std::path::{Path, PathBuf};

use numetric::numetric::{self as nm, NormalizedPlant};
use numetric::plants::{parse_plant, random_plant, PlantModel};
use numetric::{Config, Error};

use crate::output::{self, Report};
use crate::{exit, AxiomsArgs, Cli, Command, SweepArgs};

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() || matches!(e, Error::DimensionMismatch(_) | Error::Unsupported(_)) {
            exit::INPUT
        } else if e.is_unresolved() {
            exit::UNRESOLVED
        } else {
            exit::OTHER
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(message: String) -> Failure {
    Failure {
        code: exit::INPUT,
        message,
    }
}

pub fn run(cli: &Cli) -> u8 {
    let result = cli
        .global
        .config()
        .map_err(input_failure)
        .and_then(|cfg| dispatch(&cli.command, &cfg, cli.global.seed));
    match result {
        Ok((report, code)) => {
            print!("{}", output::render(&report, cli.global.format));
            code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<PlantModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_failure(format!("cannot read {}: {e}", path.display())))?;
    parse_plant(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            message: format!("{}: {}", path.display(), f.message),
            ..f
        }
    })
}

fn normalized(path: &Path, cfg: &Config) -> Result<NormalizedPlant, Failure> {
    Ok(nm::normalize(&load(path)?, cfg)?)
}

fn dispatch(cmd: &Command, cfg: &Config, seed: u64) -> Result<(Report, u8), Failure> {
    match cmd {
        Command::Dist { plant1, plant2 } => {
            let r = nm::nu_between(&normalized(plant1, cfg)?, &normalized(plant2, cfg)?, cfg)?;
            Ok((Report::Dist(r), exit::OK))
        }
        Command::Margin { plant, controller } => {
            let r = nm::margin_between(&normalized(plant, cfg)?, &normalized(controller, cfg)?, cfg)?;
            Ok((Report::Margin(r), exit::OK))
        }
        Command::Stabilizes { plant, controller } => {
            let r = nm::stabilizes_between(&normalized(plant, cfg)?, &normalized(controller, cfg)?, cfg)?;
            let code = if r.stabilizes { exit::OK } else { exit::NEGATIVE };
            Ok((Report::Stabilizes(r), code))
        }
        Command::Certify {
            nominal,
            controller,
            plant,
        } => {
            let (p0, c, p1) = (
                normalized(nominal, cfg)?,
                normalized(controller, cfg)?,
                normalized(plant, cfg)?,
            );
            let r = nm::certify_between(&p0, &c, &p1, cfg)?;
            let code = if r.certified { exit::OK } else { exit::NEGATIVE };
            Ok((Report::Certify(r), code))
        }
        Command::Axioms(args) => axioms(args, cfg, seed),
        Command::Sweep(args) => sweep(args, cfg),
    }
}

fn plant_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| input_failure(format!("cannot list {}: {e}", p.display())))?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Seed of the `i`-th random plant of a run.
fn plant_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

fn axioms(args: &AxiomsArgs, cfg: &Config, seed: u64) -> Result<(Report, u8), Failure> {
    let plants = match args.random {
        Some(n) => {
            if args.outputs == 0 || args.inputs == 0 {
                return Err(input_failure("random plants need positive dimensions".into()));
            }
            (0..n)
                .map(|i| random_plant(args.outputs, args.inputs, i % (args.max_order + 1), plant_seed(seed, i)))
                .collect()
        }
        None => plant_files(&args.paths)?
            .iter()
            .map(|p| load(p))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let r = nm::metric_axiom_suite(&plants, cfg, cfg.tolerances.axiom)?;
    let code = if r.passed { exit::OK } else { exit::NEGATIVE };
    Ok((Report::Axioms(r), code))
}

fn parameters(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    let values = match (args.from, args.to, args.steps) {
        (None, None, None) => args.values.clone(),
        (Some(a), Some(b), Some(n)) if args.values.is_empty() => match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        },
        _ => {
            return Err(input_failure(
                "give either --values or all of --from, --to and --steps".into(),
            ))
        }
    };
    if values.is_empty() {
        return Err(input_failure("empty parameter range".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input_failure("parameters must be finite".into()));
    }
    Ok(values)
}

fn sweep(args: &SweepArgs, cfg: &Config) -> Result<(Report, u8), Failure> {
    let params = parameters(args)?;
    let nominal = normalized(&args.nominal, cfg)?;
    let base = match &args.base {
        Some(p) => load(p)?,
        None => PlantModel::constant(1.0),
    };
    let controller = match &args.controller {
        Some(p) => load(p)?,
        None => PlantModel::gain(numetric::linalg::CMat::zeros(base.m, base.p))?,
    };
    let controller = nm::normalize(&controller, cfg)?;
    let mut rows = Vec::with_capacity(params.len());
    for &k in &params {
        let plant = nm::normalize(&base.scaled(k)?, cfg)?;
        let d = nm::nu_between(&nominal, &plant, cfg)?;
        let mu = nm::margin_between(&plant, &controller, cfg)?;
        rows.push(output::SweepRow {
            param: k,
            d_nu: d.value,
            mu: mu.mu,
            branch: d.branch,
        });
    }
    Ok((Report::Sweep(rows), exit::OK))
}
