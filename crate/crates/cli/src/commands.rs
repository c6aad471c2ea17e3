use std::fmt;
use std::fs;
use std::path::Path;

use gcs_walks::io::{load_instance, read_json, save_instance, write_json};
use gcs_walks::library::{replay_pwa, InstanceSpec};
use gcs_walks::oracle::{exact_best_walk, OracleSettings};
use gcs_walks::search::{greedy_search_traced, reoptimize_trajectory, shortcut_cycles, SearchSettings, TraceEvent};
use gcs_walks::sets::SetSampler;
use gcs_walks::synthesis::{
    synthesize as run_synthesis, verify_bounds_sampled, LowerBoundSet, ObjectiveSpec, SynthesisSettings,
};
use gcs_walks::walk::check_solution;
use gcs_walks::{Gcs, GcsError, WalkSolution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{svg, ObjectiveKind, OracleArgs, SolveArgs, SynthesizeArgs};

/// A failed command and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GcsError> for Failure {
    fn from(e: GcsError) -> Self {
        let code = match &e {
            GcsError::Solver(_) | GcsError::Sampling(_) => 3,
            GcsError::Io(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn instance_with_epsilon(path: &Path, epsilon: Option<f64>) -> Result<Gcs, Failure> {
    let g = load_instance(path)?;
    Ok(match epsilon {
        Some(eps) => g.apply_epsilon_edge_costs(eps).map_err(|e| Failure::usage(e.to_string()))?,
        None => g,
    })
}

pub fn validate(instance: &Path) -> CmdResult {
    let g = load_instance(instance)?;
    println!("ok: {} vertices, {} edges, hash {}", g.num_vertices(), g.num_edges(), g.content_hash());
    Ok(())
}

pub fn build(spec: &Path, out: &Path) -> CmdResult {
    let spec: InstanceSpec = read_json(spec)?;
    let g = spec.build()?;
    save_instance(out, &g)?;
    println!("wrote {} ({} vertices, {} edges)", out.display(), g.num_vertices(), g.num_edges());
    Ok(())
}

pub fn synthesize(a: &SynthesizeArgs) -> CmdResult {
    let g = instance_with_epsilon(&a.instance, a.epsilon)?;
    let objective = match a.objective {
        ObjectiveKind::Source => ObjectiveSpec::SourceValue,
        ObjectiveKind::Sampled => ObjectiveSpec::sampled_average(&g)?,
    };
    let settings = SynthesisSettings { pairwise_products: !a.no_pairwise, ..SynthesisSettings::default() };
    let b = run_synthesis(&g, &objective, &settings)?;
    b.save(&a.out)?;
    println!(
        "objective {:.9}  J_s(x_s) {:.9}  iterations {}  time {:.3}s",
        b.report.objective_value,
        b.source_value(&g),
        b.report.iterations,
        b.report.solve_time.as_secs_f64()
    );
    if let Some(n) = a.verify {
        let r = verify_bounds_sampled(&g, &b, n, a.seed)?;
        println!(
            "verify: {} pairs per edge, worst Bellman slack {:.3e}, worst J on vertices {:.3e}",
            n, r.worst_bellman_slack, r.worst_nonnegativity
        );
        if !r.passed() {
            return Err(Failure::domain("sampled verification found violations"));
        }
    }
    Ok(())
}

fn source_sample(g: &Gcs, seed: u64) -> Result<Vec<f64>, Failure> {
    let v = g.vertex(g.source());
    let mut sampler = SetSampler::new(&v.set, &v.id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng)?)
}

pub fn solve(a: &SolveArgs) -> CmdResult {
    if a.lookahead == 0 {
        return Err(Failure::usage("--lookahead must be at least 1"));
    }
    if a.budget == Some(0) {
        return Err(Failure::usage("--budget must be at least 1"));
    }
    let mut g = instance_with_epsilon(&a.instance, a.epsilon)?;
    let bounds = LowerBoundSet::load(&a.bounds, &g)?;
    if a.random_source {
        let p = source_sample(&g, a.seed)?;
        g = g.with_source_point(p)?;
    }
    let settings = SearchSettings {
        lookahead: a.lookahead,
        budget: a.budget,
        backtrack_limit: a.backtrack_limit,
        ..SearchSettings::default()
    };
    let mut events = Vec::new();
    let searched = greedy_search_traced(&g, &bounds, &settings, &mut events);
    if let Some(p) = &a.trace {
        fs::write(p, TraceEvent::to_json_lines(&events)).map_err(GcsError::from)?;
    }
    let out = searched.map_err(|e| match e {
        GcsError::SearchFailed(reason) => {
            let hint = match &a.trace {
                Some(p) => format!("; trace in {}", p.display()),
                None => "; rerun with --trace to record the search".into(),
            };
            Failure::domain(format!("search failed: {reason}{hint}"))
        }
        e => e.into(),
    })?;
    let greedy = out.solution;
    let sol = if a.raw {
        greedy.clone()
    } else {
        let r = reoptimize_trajectory(&g, &greedy, &settings.solver)?;
        shortcut_cycles(&g, &r, settings.cost_tol, &settings.solver)?
    };
    check_solution(&g, &sol)?;
    write_json(&a.out, &sol)?;
    let lb = bounds.source_value(&g);
    println!("walk {}", sol.walk.join(" "));
    println!(
        "cost {:.9}  K {}  greedy cost {:.9}  steps {}  backtracks {}",
        sol.cost, sol.k, greedy.cost, out.iterations, out.backtracks
    );
    println!("lower bound {:.9}  gap {:.9}", lb, sol.cost - lb);
    if let Some(p) = &a.emit_csv {
        write_csv(p, &sol)?;
    }
    if let Some(p) = &a.emit_svg {
        match svg::render(&g, &sol)? {
            Some(text) => fs::write(p, text).map_err(GcsError::from)?,
            None => eprintln!("warning: SVG output needs 2-D vertex points; skipped"),
        }
    }
    let mut ok = true;
    if let Some(spec) = &a.replay {
        let InstanceSpec::Pwa(spec) = read_json::<InstanceSpec>(spec)? else {
            return Err(Failure::usage("--replay expects a PWA spec"));
        };
        let r = replay_pwa(&spec, &sol)?;
        let pass = r.max_residual <= 1e-6 && r.states_in_modes;
        println!(
            "replay: {} steps, max residual {:.3e}, states in modes {}: {}",
            r.steps,
            r.max_residual,
            r.states_in_modes,
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
    }
    if a.oracle_check {
        let r = exact_best_walk(&g, &OracleSettings::new(a.oracle_k_max))?;
        match r.best {
            Some(best) => {
                let ratio = sol.cost / best.cost;
                let pass = ratio <= 1.05;
                println!(
                    "oracle check: optimum {:.9} at K {}, ratio {:.4}: {}",
                    best.cost,
                    best.k,
                    ratio,
                    if pass { "PASS" } else { "FAIL" }
                );
                ok &= pass;
            }
            None => println!("oracle check: no walk of up to {} edges", a.oracle_k_max),
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::domain("solution checks failed"))
    }
}

fn write_csv(path: &Path, sol: &WalkSolution) -> Result<(), Failure> {
    let width = sol.trajectory.iter().map(Vec::len).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::usage(e.to_string()))?;
    let mut header = vec!["step".to_string(), "vertex".to_string()];
    header.extend((0..width).map(|i| format!("x{i}")));
    let rows = sol.trajectory.iter().zip(&sol.walk).enumerate().map(|(i, (x, v))| {
        let mut row = vec![i.to_string(), v.clone()];
        row.extend((0..width).map(|j| x.get(j).map(|c| c.to_string()).unwrap_or_default()));
        row
    });
    std::iter::once(header)
        .chain(rows)
        .try_for_each(|r| w.write_record(&r))
        .and_then(|_| w.flush().map_err(csv::Error::from))
        .map_err(|e| Failure::usage(e.to_string()))
}

pub fn oracle(a: &OracleArgs) -> CmdResult {
    let g = instance_with_epsilon(&a.instance, a.epsilon)?;
    let settings = OracleSettings { cap: a.cap, ..OracleSettings::new(a.k_max) };
    let r = exact_best_walk(&g, &settings).map_err(|e| match e {
        GcsError::EnumerationCap { .. } => Failure::domain(format!("{e}; lower --k-max or raise --cap")),
        e => e.into(),
    })?;
    println!("{:>3}  {:>10}  {:>10}  {:>16}  walk", "K", "walks", "feasible", "best cost");
    for p in &r.per_k {
        let (cost, walk) = match &p.best {
            Some(b) => (format!("{:.9}", b.cost), b.walk.join(" ")),
            None => ("-".into(), String::new()),
        };
        println!("{:>3}  {:>10}  {:>10}  {:>16}  {}", p.k, p.walks, p.feasible, cost, walk);
    }
    match &r.best {
        Some(b) => println!("best {:.9} at K {}", b.cost, b.k),
        None => println!("no walk of up to {} edges", a.k_max),
    }
    println!("strictly decreasing {}  stabilized {}", r.strictly_decreasing, r.stabilized);
    if let Some(p) = &a.out {
        write_json(p, &r)?;
    }
    Ok(())
}
