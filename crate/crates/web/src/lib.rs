//! Browser bindings: generate an instance, solve it, validate a plan.
//! Every call takes and returns text so the page stays a thin shell over
//! the native file formats. Workers are capped at one because the page
//! runs on a single thread.

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use parcbs::grid::GridMap;
use parcbs::harness::{
    parse_plan, serialize_plan, validate_solution, AlgoConfig, Algorithm, BenchRecord, Plan,
};
use parcbs::path::makespan;
use parcbs::scenario::{
    gen_random_obstacle_map, gen_uniform_random, parse_scen, serialize_scen, Instance,
};

#[derive(Serialize)]
struct Generated {
    map: String,
    scen: String,
}

#[derive(Serialize)]
struct Solved {
    record: BenchRecord,
    /// Plan file text; empty when unsolved.
    plan: String,
    paths: Vec<Vec<(u32, u32)>>,
}

fn instance(map: &str, scen: &str) -> Result<Instance, String> {
    let map = Arc::new(GridMap::parse(map).map_err(|e| format!("map: {e}"))?);
    let pairs = parse_scen(scen, &map).map_err(|e| format!("scen: {e}"))?;
    Instance::from_pairs(map, &pairs).map_err(|e| e.to_string())
}

/// Random-obstacle map plus uniformly drawn starts and goals, as
/// `{"map": <.map text>, "scen": <.scen text>}`.
pub fn generate_json(
    width: u32,
    height: u32,
    density: f64,
    map_seed: u64,
    agents: usize,
    seed: u64,
) -> Result<String, String> {
    if width == 0 || height == 0 || width > 256 || height > 256 {
        return Err("map sides must be within 1..=256".into());
    }
    if !(0.0..0.9).contains(&density) {
        return Err("density must be in [0, 0.9)".into());
    }
    let map = Arc::new(gen_random_obstacle_map(width, height, density, map_seed));
    let inst = gen_uniform_random(Arc::clone(&map), agents, seed).map_err(|e| e.to_string())?;
    let out = Generated {
        map: map.to_map_string(),
        scen: serialize_scen(&inst.to_scen_entries("demo.map")),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Runs one planner and returns `{"record", "plan", "paths"}`.
pub fn solve_json(
    map: &str,
    scen: &str,
    algo: &str,
    w: f64,
    timeout_ms: u32,
    seed: u64,
) -> Result<String, String> {
    let algo: Algorithm = algo.parse()?;
    if w.is_nan() || w < 1.0 {
        return Err("w must be at least 1".into());
    }
    let inst = instance(map, scen)?;
    let cfg = AlgoConfig::new(algo);
    let timeout = Duration::from_millis(timeout_ms.max(1).into());
    let params = cfg.params(w, timeout, seed);
    let outcome = cfg.run(&inst, &params).map_err(|e| e.to_string())?;
    let record = BenchRecord::from_outcome("demo", seed, &cfg, w, timeout, &inst, &outcome, false);
    let (plan, paths) = match &outcome.solution {
        Some(sol) => {
            let mut plan = Plan::from_paths(inst.map(), sol);
            plan.meta.insert("algorithm".into(), algo.to_string());
            plan.meta.insert("w".into(), w.to_string());
            plan.meta
                .insert("soc".into(), outcome.soc.unwrap_or_default().to_string());
            plan.meta
                .insert("makespan".into(), makespan(sol).to_string());
            (serialize_plan(&plan), plan.paths)
        }
        None => (String::new(), Vec::new()),
    };
    serde_json::to_string(&Solved {
        record,
        plan,
        paths,
    })
    .map_err(|e| e.to_string())
}

/// Checks a plan file against the instance; returns the validation report.
pub fn validate_json(map: &str, scen: &str, plan: &str) -> Result<String, String> {
    let inst = instance(map, scen)?;
    let plan = parse_plan(plan).map_err(|e| format!("plan: {e}"))?;
    let paths = plan
        .to_paths(inst.map())
        .map_err(|e| format!("plan: {e}"))?;
    let report = validate_solution(&inst, &paths).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn generate(
    width: u32,
    height: u32,
    density: f64,
    map_seed: u32,
    agents: u32,
    seed: u32,
) -> Result<String, JsError> {
    generate_json(
        width,
        height,
        density,
        map_seed.into(),
        agents as usize,
        seed.into(),
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(
    map: &str,
    scen: &str,
    algo: &str,
    w: f64,
    timeout_ms: u32,
    seed: u32,
) -> Result<String, JsError> {
    solve_json(map, scen, algo, w, timeout_ms, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn validate(map: &str, scen: &str, plan: &str) -> Result<String, JsError> {
    validate_json(map, scen, plan).map_err(|e| JsError::new(&e))
}
