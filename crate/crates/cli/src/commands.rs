use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nukc::approx::{charikar_kcwo_search, solve_guess_q, solve_kcwo, solve_two_radii, KcwoResult};
use nukc::enumerate::enum_solve;
use nukc::gadgets::{hardness_gadget, random_euclidean, random_layered_tree, random_metric};
use nukc::metric::gonzalez_kcenter;
use nukc::model::{
    build_nukc_lp, compress_radii, lift_compressed_solution, min_feasible_dilation,
    validate_solution, NukcInstance, NukcSolution, RadiusClass,
};
use nukc::oracle::exact_nukc;
use rayon::prelude::*;

use crate::files::{self, InstanceFile, Meta, SolutionFile};
use crate::{Algo, CliError, Kind};

pub struct GenerateParams {
    pub kind: Kind,
    pub n: usize,
    pub dim: usize,
    pub depth: usize,
    pub branching: usize,
    pub c: u64,
    pub classes: Option<String>,
    pub seed: u64,
}

/// Parses `k:r,k:r,...`.
pub fn parse_classes(text: &str) -> Result<Vec<RadiusClass>, CliError> {
    text.split(',')
        .map(|item| {
            let bad = || CliError::usage(format!("bad class `{item}`, expected k:r"));
            let (k, r) = item.trim().split_once(':').ok_or_else(bad)?;
            Ok(RadiusClass::new(
                k.parse().map_err(|_| bad())?,
                r.parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

/// Returns the text of the generated file.
pub fn generate(params: &GenerateParams) -> Result<String, CliError> {
    let classes = |default: &str| parse_classes(params.classes.as_deref().unwrap_or(default));
    let instance = match params.kind {
        Kind::Euclidean => NukcInstance::with_levels(
            random_euclidean(params.n, params.dim, params.seed)?,
            classes("1:4,2:2")?,
        )?,
        Kind::RandomMetric => {
            NukcInstance::with_levels(random_metric(params.n, params.seed)?, classes("1:8,2:4")?)?
        }
        Kind::HardnessGadget => {
            let tree = random_layered_tree(params.depth, params.branching, params.seed)?;
            hardness_gadget(&tree, params.c)?.instance
        }
        Kind::LayeredTree => {
            return Ok(random_layered_tree(params.depth, params.branching, params.seed)?.dump());
        }
    };
    Ok(files::to_json(&InstanceFile::from_instance(&instance)))
}

/// Result of one algorithm on one instance.
pub struct AlgoOutput {
    pub solution: NukcSolution,
    pub outliers: Vec<usize>,
}

fn kcwo_shape(instance: &NukcInstance) -> Result<(usize, usize), CliError> {
    let classes = instance.classes();
    match classes {
        [c] => Ok((c.multiplicity, 0)),
        [c, o] if o.radius == 0.0 => Ok((c.multiplicity, o.multiplicity)),
        _ => Err(CliError::usage(
            "k-center with outliers needs classes (k, r) or (k, r), (l, 0)",
        )),
    }
}

fn kcwo_output(instance: &NukcInstance, res: KcwoResult) -> AlgoOutput {
    let mut solution = NukcSolution::default();
    for &c in &res.centers {
        solution.push(c, 0, res.radius_used);
    }
    let loc = instance.space().locations();
    let spots: BTreeSet<usize> = res.outliers.iter().map(|&p| loc[p]).collect();
    for p in spots {
        solution.push(p, 1, 0.0);
    }
    AlgoOutput {
        solution,
        outliers: res.outliers,
    }
}

pub fn run_algo(algo: Algo, instance: &NukcInstance, q: usize) -> Result<AlgoOutput, CliError> {
    let plain = |solution| {
        Ok(AlgoOutput {
            solution,
            outliers: Vec::new(),
        })
    };
    match algo {
        Algo::Exact => plain(exact_nukc(instance)?.1),
        Algo::Kcenter => {
            let (centers, radius) = gonzalez_kcenter(instance.space(), instance.total_balls())?;
            let slots: Vec<usize> = (0..instance.num_classes())
                .flat_map(|t| std::iter::repeat_n(t, instance.multiplicity(t)))
                .collect();
            let mut solution = NukcSolution::default();
            for (i, &c) in centers.iter().enumerate() {
                solution.push(c, slots[i], radius);
            }
            plain(solution)
        }
        Algo::Kcwo | Algo::KcwoGreedy => {
            let (k, l) = kcwo_shape(instance)?;
            let res = if algo == Algo::Kcwo {
                solve_kcwo(instance.space(), k, l)?
            } else {
                charikar_kcwo_search(instance.space(), k, l)?
            };
            Ok(kcwo_output(instance, res))
        }
        Algo::TwoRadii => match instance.classes() {
            [a, b] => plain(solve_two_radii(instance.space(), *a, *b)?),
            _ => Err(CliError::usage(format!(
                "two-radii needs exactly 2 classes, the instance has {}",
                instance.num_classes()
            ))),
        },
        Algo::GuessQ => {
            let compressed = compress_radii(instance);
            let res = solve_guess_q(&compressed, q)?;
            plain(lift_compressed_solution(&res.solution, instance))
        }
        Algo::Bicriteria => plain(enum_solve(instance)?.solution),
    }
}

fn algo_name(algo: Algo) -> String {
    clap::ValueEnum::to_possible_value(&algo)
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

pub fn solve(
    algo: Algo,
    input: &Path,
    q: usize,
    out: &Path,
    dump_lp: Option<&Path>,
) -> Result<(), CliError> {
    let instance = files::load_instance(input)?;
    let start = Instant::now();
    let output = run_algo(algo, &instance, q)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let (lower, _) = min_feasible_dilation(&instance)?;
    if let Some(path) = dump_lp {
        files::write(path, &build_nukc_lp(&instance, lower, None).to_lp_text())?;
    }
    let mut file = SolutionFile::from_solution(&output.solution, output.outliers);
    let dilation = output.solution.radius_factor(&instance);
    file.dilation = Some(dilation);
    file.class_counts = Some(output.solution.class_counts(instance.num_classes()));
    file.lower_bound = Some(lower);
    file.meta = Some(Meta {
        algo: algo_name(algo),
        elapsed_ms,
    });
    log::info!(
        "{} on {}: dilation {dilation}, lower bound {lower}",
        algo_name(algo),
        input.display()
    );
    files::write(out, &files::to_json(&file))
}

pub fn validate(
    instance: &Path,
    solution: &Path,
    count_factor: f64,
    radius_factor: Option<f64>,
) -> Result<(), CliError> {
    let inst = files::load_instance(instance)?;
    let file = files::load_solution(solution)?;
    let radius_factor = radius_factor.or(file.dilation).unwrap_or(1.0);
    let report = validate_solution(&inst, &file.to_solution(), count_factor, radius_factor);
    if report.is_clean() {
        println!("valid at count factor {count_factor}, radius factor {radius_factor}");
        Ok(())
    } else {
        println!("{report}");
        Err(CliError::runtime(format!(
            "solution is invalid at count factor {count_factor}, radius factor {radius_factor}"
        )))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        (Some(0.0), Some(_)) => Some(1.0),
        _ => None,
    }
}

pub const CSV_HEADER: &str =
    "instance,algo,status,dilation,lower_bound,ratio_to_lower,exact,ratio_to_exact,count_factor";

/// One CSV row per (instance, algorithm), in file-name then argument order.
pub fn compare(dir: &Path, algos: &[Algo], q: usize, out: &Path) -> Result<(), CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let loaded: Vec<(String, NukcInstance, Option<f64>, Option<f64>)> = paths
        .par_iter()
        .map(|p| {
            let inst = files::load_instance(p)?;
            let lower = min_feasible_dilation(&inst).ok().map(|r| r.0);
            let exact = exact_nukc(&inst).ok().map(|r| r.0);
            let name = p
                .file_name()
                .expect("listed files have names")
                .to_string_lossy()
                .into_owned();
            Ok((name, inst, lower, exact))
        })
        .collect::<Result<_, CliError>>()?;
    let jobs: Vec<(usize, Algo)> = (0..loaded.len())
        .flat_map(|i| algos.iter().map(move |&a| (i, a)))
        .collect();
    let rows: Vec<String> = jobs
        .par_iter()
        .map(|&(i, algo)| {
            let (name, inst, lower, exact) = &loaded[i];
            let (status, dilation, count) = match run_algo(algo, inst, q) {
                Ok(o) => (
                    "ok".to_string(),
                    Some(o.solution.radius_factor(inst)),
                    Some(o.solution.count_factor(inst)),
                ),
                Err(e) => (format!("error {}: {}", e.code, e.message), None, None),
            };
            [
                csv_field(name),
                algo_name(algo),
                csv_field(&status),
                num(dilation),
                num(*lower),
                num(ratio(dilation, *lower)),
                num(*exact),
                num(ratio(dilation, *exact)),
                num(count),
            ]
            .join(",")
        })
        .collect();
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    files::write(out, &text)
}
