use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use strategize_core::control::{self, CertificateKind, SearchOptions};
use strategize_core::learners::audit;
use strategize_core::simulation::{self, ResultRow};
use strategize_core::{Game, RewardTrace};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::Format;

/// Largest grid the `--verify` oracle will enumerate.
const VERIFY_MAX_POINTS: u128 = 2_000_000;
const VERIFY_MAX_RESOLUTION: usize = 1000;
pub const VERIFY_TOL: f64 = 1e-2;
/// Violations listed on stdout before truncating.
const LIST_LIMIT: usize = 10;

pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
}

impl Output {
    fn path(&self, stem: &str, ext: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(CliError::io(&self.dir))?;
        Ok(self.dir.join(format!("{stem}.{ext}")))
    }

    fn create(&self, stem: &str, ext: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.path(stem, ext)?;
        let file = File::create(&path).map_err(CliError::io(&path))?;
        Ok((path, BufWriter::new(file)))
    }

    fn write_json<T: Serialize>(&self, stem: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(stem, "json")?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(path)
    }
}

/// Formats a value for display, folding float noise around zero.
fn num(x: f64) -> String {
    if x.abs() < 5e-10 {
        "0".into()
    } else {
        let s = format!("{:.6}", x);
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn load_game(path: &Path) -> Result<Game, CliError> {
    Game::load(path).map_err(|source| CliError::LoadGame { path: path.to_path_buf(), source })
}

pub fn parse_shape(shape: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Argument(format!("expected a shape like 3x3, got {shape:?}"));
    let (m, n) = shape.split_once(['x', 'X']).ok_or_else(bad)?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(bad());
    }
    Ok((m, n))
}

pub fn gen_random(out: &Output, shape: &str, max_abs: i32, seed: u64) -> Result<(Game, PathBuf), CliError> {
    let (m, n) = parse_shape(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let game = Game::random_integer(m, n, max_abs, &mut rng)?;
    let path = out.write_json(&format!("random_{m}x{n}_seed{seed}"), &game)?;
    Ok((game, path))
}

pub fn cmd_gen_random(out: &Output, shape: &str, max_abs: i32, seed: u64) -> Result<(), CliError> {
    let (game, path) = gen_random(out, shape, max_abs, seed)?;
    println!(
        "generated {}x{} game (seed {seed}) -> {}",
        game.num_optimizer_actions(),
        game.num_learner_actions(),
        path.display()
    );
    Ok(())
}

/// Finest grid step with at most [`VERIFY_MAX_POINTS`] points on the simplex.
fn verify_resolution(dim: usize) -> usize {
    let points = |r: usize| -> u128 {
        // C(r + dim - 1, dim - 1), stopping early once past the cap.
        let mut c: u128 = 1;
        for i in 1..dim as u128 {
            c = c * (r as u128 + i) / i;
            if c > VERIFY_MAX_POINTS {
                return c;
            }
        }
        c
    };
    let mut r = VERIFY_MAX_RESOLUTION;
    while r > 1 && points(r) > VERIFY_MAX_POINTS {
        r -= 1;
    }
    r
}

pub struct StackelbergArgs<'a> {
    pub game: Option<&'a Path>,
    pub gen_random: Option<&'a str>,
    pub max_abs: i32,
    pub verify: bool,
    pub seed: u64,
}

pub fn cmd_stackelberg(out: &Output, args: StackelbergArgs<'_>) -> Result<(), CliError> {
    let game = match (args.game, args.gen_random) {
        (Some(path), None) => load_game(path)?,
        (None, Some(shape)) => {
            let (game, path) = gen_random(out, shape, args.max_abs, args.seed)?;
            println!("generated game -> {}", path.display());
            game
        }
        _ => return Err(CliError::Argument("give a game file or --gen-random, not both".into())),
    };

    let mut dominated = Vec::new();
    if game.num_learner_actions() >= 2 {
        for (j, name) in game.learner_actions().iter().enumerate() {
            if game.is_weakly_dominated(j)? {
                eprintln!("warning: learner action {name} is weakly dominated");
                dominated.push(name.clone());
            }
        }
    }

    let solution = game.stackelberg()?;
    let response_name = &game.learner_actions()[solution.response];
    let commitment: Vec<String> = game
        .optimizer_actions()
        .iter()
        .zip(solution.commitment.probs())
        .map(|(a, p)| format!("{a}={}", num(*p)))
        .collect();
    println!("commitment: {}", commitment.join(", "));
    println!("response: {response_name}");
    println!("value: {}", num(solution.value));

    let mut grid = None;
    if args.verify {
        let resolution = verify_resolution(game.num_optimizer_actions());
        let grid_value = game.stackelberg_grid_value(resolution);
        let gap = (solution.value - grid_value).abs();
        println!("verify: grid 1/{resolution} value {} gap {:.3e}", num(grid_value), gap);
        if gap > VERIFY_TOL {
            return Err(CliError::Verify(format!(
                "LP value {} and grid value {} differ by {gap:.3e} > {VERIFY_TOL}",
                solution.value, grid_value
            )));
        }
        grid = Some((resolution, grid_value));
    }

    let path = match out.format {
        Format::Json => out.write_json(
            "stackelberg",
            &json!({
                "commitment": solution.commitment,
                "response": solution.response,
                "response_name": response_name,
                "value": solution.value,
                "dominated": dominated,
                "grid_resolution": grid.map(|g| g.0),
                "grid_value": grid.map(|g| g.1),
            }),
        )?,
        Format::Csv => {
            let (path, file) = out.create("stackelberg", "csv")?;
            let mut w = csv::Writer::from_writer(file);
            let mut header = vec!["response".to_string(), "response_name".into(), "value".into()];
            header.extend(game.optimizer_actions().iter().map(|a| format!("p_{a}")));
            w.write_record(&header)?;
            let mut row = vec![solution.response.to_string(), response_name.clone(), solution.value.to_string()];
            row.extend(solution.commitment.probs().iter().map(|p| p.to_string()));
            w.write_record(&row)?;
            w.flush().map_err(CliError::io(&path))?;
            path
        }
    };
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_control_search(out: &Output, game_path: &Path, max_steps: usize, resolution: usize) -> Result<(), CliError> {
    let game = load_game(game_path)?;
    let stackelberg = game.stackelberg()?;
    let result = control::search_with(&game, &SearchOptions::new(max_steps, resolution))?;
    let kind = match result.kind {
        CertificateKind::Path => "path",
        CertificateKind::Cycle => "cycle",
    };
    println!("Stackelberg value: {}", num(stackelberg.value));
    println!("control value: {} ({kind}, {} step(s))", num(result.value), result.policy.len());
    let labels: Vec<&str> = result
        .labels
        .iter()
        .map(|&j| game.learner_actions()[j].as_str())
        .collect();
    println!("regions: {}", labels.join(" -> "));
    if result.kind == CertificateKind::Cycle {
        println!("cycle ratio: {}", num(result.lambda));
    }

    let path = match out.format {
        Format::Json => out.write_json(
            "control_search",
            &json!({
                "value": result.value,
                "kind": result.kind,
                "policy": result.policy,
                "waypoints": result.waypoints,
                "labels": result.labels,
                "start": result.start,
                "lambda": result.lambda,
                "stackelberg_value": stackelberg.value,
            }),
        )?,
        Format::Csv => {
            let (path, file) = out.create("control_search", "csv")?;
            let mut w = csv::Writer::from_writer(file);
            let mut header = vec!["step".to_string(), "t".into(), "label".into(), "label_name".into()];
            header.extend(game.optimizer_actions().iter().map(|a| format!("p_{a}")));
            w.write_record(&header)?;
            for (i, (step, &label)) in result.policy.steps().iter().zip(&result.labels).enumerate() {
                let mut row = vec![
                    (i + 1).to_string(),
                    step.duration.to_string(),
                    label.to_string(),
                    game.learner_actions()[label].clone(),
                ];
                row.extend(step.alpha.probs().iter().map(|p| p.to_string()));
                w.write_record(&row)?;
            }
            w.flush().map_err(CliError::io(&path))?;
            path
        }
    };
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_audit(out: &Output, trace_path: &Path, gamma: f64) -> Result<(), CliError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CliError::Argument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let trace = RewardTrace::load_csv(trace_path)
        .map_err(|source| CliError::LoadTrace { path: trace_path.to_path_buf(), source })?;
    let report = audit::mean_based_audit(&trace, gamma)?;
    let regret = audit::regret(&trace);
    let (swap, _) = audit::swap_regret(&trace);
    let expected = match trace.distributions() {
        Some(_) => Some((audit::expected_regret(&trace)?, audit::expected_swap_regret(&trace)?.0)),
        None => None,
    };

    println!("{} violations (gamma {gamma}, T = {})", report.violations.len(), trace.len());
    for v in report.violations.iter().take(LIST_LIMIT) {
        println!(
            "  round {} arm {}: prob {:.6} while trailing by {:.6}",
            v.round, v.arm, v.prob, v.deficit
        );
    }
    if report.violations.len() > LIST_LIMIT {
        println!("  ... {} more", report.violations.len() - LIST_LIMIT);
    }
    println!("regret: {}", num(regret));
    println!("swap regret: {}", num(swap));
    if let Some((er, es)) = expected {
        println!("expected regret: {}", num(er));
        println!("expected swap regret: {}", num(es));
    }

    let path = match out.format {
        Format::Json => out.write_json(
            "audit",
            &json!({
                "trace": trace_path,
                "gamma": gamma,
                "rounds": trace.len(),
                "violations": report.violations,
                "regret": regret,
                "swap_regret": swap,
                "expected_regret": expected.map(|e| e.0),
                "expected_swap_regret": expected.map(|e| e.1),
            }),
        )?,
        Format::Csv => {
            let (path, file) = out.create("audit", "csv")?;
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["round", "arm", "prob", "deficit"])?;
            for v in &report.violations {
                w.serialize(v)?;
            }
            w.flush().map_err(CliError::io(&path))?;
            path
        }
    };
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_simulate(out_dir: Option<PathBuf>, format: Format, config: &ExperimentConfig) -> Result<(), CliError> {
    let experiment = config.resolve()?;
    let out = Output {
        dir: out_dir
            .or_else(|| experiment.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        format,
    };
    let stackelberg = experiment.game.stackelberg()?;
    let matches = experiment.matches()?;
    let results = simulation::sweep(&matches);

    println!(
        "{}: {} vs {} on {}, T = {}, {} seed(s)",
        experiment.id,
        optimizer_label(&experiment.optimizer),
        experiment.learner.algorithm.label(),
        experiment.game_path.display(),
        experiment.rounds,
        experiment.seeds.len()
    );
    let mut rows = Vec::with_capacity(results.len());
    for (&seed, result) in experiment.seeds.iter().zip(results) {
        let result = result?;
        println!(
            "  seed {seed}: optimizer avg {}, regret {}, swap regret {}",
            num(result.optimizer_average),
            num(result.regret),
            num(result.swap_regret)
        );
        if experiment.traces {
            let trace = result.trace.as_ref().expect("full trace level keeps the trace");
            let (path, file) = out.create(&format!("trace_{}_seed{seed}", experiment.id), "csv")?;
            trace.write_csv(file)?;
            println!("  wrote {}", path.display());
        }
        rows.push(ResultRow::new(experiment.id.clone(), seed, &result));
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    println!(
        "mean optimizer avg {} vs Stackelberg value {}",
        num(mean(|r| r.optimizer_avg)),
        num(stackelberg.value)
    );
    println!("mean regret {}, mean swap regret {}", num(mean(|r| r.regret)), num(mean(|r| r.swap_regret)));

    let (path, file) = out.create("results", "csv")?;
    simulation::write_results_csv(file, &rows)?;
    println!("wrote {}", path.display());
    if format == Format::Json {
        let path = out.write_json(
            "results",
            &json!({
                "config": config,
                "stackelberg_value": stackelberg.value,
                "results": rows,
            }),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn optimizer_label(optimizer: &crate::config::Optimizer) -> String {
    use crate::config::Optimizer;
    match optimizer {
        Optimizer::Policy(p) => format!("{}-step policy", p.len()),
        Optimizer::Exploit(_) => "exploit".into(),
        Optimizer::Commitment(d) if *d == 0.0 => "Stackelberg commitment".into(),
        Optimizer::Commitment(d) => format!("commitment (delta {d})"),
    }
}
