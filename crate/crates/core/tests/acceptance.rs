//! Acceptance run: one PASS/FAIL/INFO line per criterion. Correctness
//! criteria fail the run; hardware-dependent throughput criteria are
//! reported as INFO and never fail it.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parcbs::cbs::{
    detect_conflicts_brute, detect_conflicts_windowed, find_disjoint_conflicts, partition_windows,
    recount_after_replan, Conflict,
};
use parcbs::dpecbs::{solve_dp, DistributionStrategy};
use parcbs::ecbs::{solve_ecbs, solve_ecbs_traced, SearchEvent, SolveOutcome, SolveParams};
use parcbs::grid::{GridMap, Vertex};
use parcbs::harness::{
    oracle_optimal_soc, parse_plan, read_records, serialize_plan, soc_lower_bound,
    validate_solution, write_records,
};
use parcbs::path::{makespan, Path};
use parcbs::pbecbs::{solve_pb, PbParams};
use parcbs::scenario::{
    gen_random_obstacle_map, gen_uniform_random, parse_scen, parse_scen_entries, serialize_scen,
    Instance,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn fixture_map() -> Arc<GridMap> {
    let text = std::fs::read_to_string(fixture("random-32-32-20.map")).unwrap();
    Arc::new(GridMap::parse(&text).unwrap())
}

fn params(w: f64, timeout_s: f64, seed: u64) -> SolveParams {
    SolveParams {
        w,
        timeout: Duration::from_secs_f64(timeout_s),
        bypass: true,
        seed,
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    Info,
}

/// Collects the criterion lines and the certificate check that every
/// solved outcome goes through.
#[derive(Default)]
struct Report {
    failed: Vec<u32>,
    certified: usize,
    cert_failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: u32, verdict: Verdict, text: String) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        };
        if verdict == Verdict::Fail {
            self.failed.push(id);
        }
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "criterion {id:>2} {tag}: {text}");
        let _ = out.flush();
    }

    fn check(&mut self, id: u32, ok: bool, text: String) {
        self.line(id, if ok { Verdict::Pass } else { Verdict::Fail }, text);
    }

    /// soc <= w * soc_lb and a clean validator report for solved outcomes.
    fn certify(&mut self, label: &str, instance: &Instance, w: f64, out: &SolveOutcome) {
        let (Some(sol), Some(soc)) = (&out.solution, out.soc) else {
            return;
        };
        self.certified += 1;
        if soc as f64 > w * out.soc_lb as f64 {
            self.cert_failures
                .push(format!("{label}: soc {soc} > {w} * lb {}", out.soc_lb));
        }
        match validate_solution(instance, sol) {
            Ok(rep) if rep.ok && rep.soc == soc => {}
            Ok(rep) => self.cert_failures.push(format!(
                "{label}: validator ok={} soc={} violations={}",
                rep.ok,
                rep.soc,
                rep.violations.len()
            )),
            Err(e) => self.cert_failures.push(format!("{label}: {e}")),
        }
    }
}

enum Solver {
    Ecbs,
    Dp(usize, DistributionStrategy),
    Pb(usize),
}

impl Solver {
    fn label(&self) -> String {
        match self {
            Solver::Ecbs => "ecbs".into(),
            Solver::Dp(n, s) => format!("dp-ecbs/{n}/{}", s.as_str()),
            Solver::Pb(n) => format!("pb-ecbs/{n}"),
        }
    }

    fn run(&self, instance: &Instance, p: &SolveParams) -> SolveOutcome {
        match *self {
            Solver::Ecbs => solve_ecbs(instance, p),
            Solver::Dp(n, s) => solve_dp(instance, p, n, s),
            Solver::Pb(n) => solve_pb(instance, &PbParams::new(p.clone(), n)),
        }
        .unwrap()
    }
}

fn tiny_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let density = [0.0, 0.1, 0.2, 0.25][rng.random_range(0..4)];
        let map = Arc::new(gen_random_obstacle_map(4, 4, density, rng.random()));
        let n = rng.random_range(2..=3);
        if let Ok(i) = gen_uniform_random(map, n, rng.random()) {
            return i;
        }
    }
}

fn oracle_bound(report: &mut Report) {
    let mut solvers = vec![Solver::Ecbs];
    for n in [1, 2, 4, 8] {
        for s in [
            DistributionStrategy::Deterministic,
            DistributionStrategy::Random,
        ] {
            solvers.push(Solver::Dp(n, s));
        }
    }
    solvers.push(Solver::Pb(2));
    solvers.push(Solver::Pb(4));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut certified, mut checked, mut unsolved) = (0, 0, 0);
    let mut breaches = Vec::new();
    for k in 0..200u64 {
        let instance = tiny_instance(&mut rng);
        let Some(oracle) = oracle_optimal_soc(&instance, 12) else {
            continue;
        };
        if !oracle.soc_certified {
            continue;
        }
        certified += 1;
        for w in [1.0, 1.5, 2.0] {
            for s in &solvers {
                let out = s.run(&instance, &params(w, 10.0, k));
                report.certify(&format!("c1 #{k} {} w={w}", s.label()), &instance, w, &out);
                match out.soc {
                    Some(soc) => {
                        checked += 1;
                        if soc as f64 > w * oracle.cost as f64 {
                            breaches.push(format!(
                                "#{k} {} w={w}: soc {soc} > w * {}",
                                s.label(),
                                oracle.cost
                            ));
                        }
                    }
                    None => unsolved += 1,
                }
            }
        }
    }
    report.check(
        1,
        breaches.is_empty() && unsolved == 0,
        format!(
            "{certified}/200 instances certified by the oracle, {checked} solved outcomes checked, \
             {} above w * optimum, {unsolved} unsolved{}",
            breaches.len(),
            breaches.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    );
}

fn random_walk(rng: &mut ChaCha8Rng, map: &GridMap, len: usize) -> Path {
    let cells = map.passable_cells();
    let mut v = cells[rng.random_range(0..cells.len())];
    let mut out = vec![v];
    for _ in 1..len {
        let mut options = vec![v];
        map.for_each_neighbor(v, |u| options.push(u));
        v = options[rng.random_range(0..options.len())];
        out.push(v);
    }
    Path::new(out)
}

fn sorted(mut v: Vec<Conflict>) -> Vec<Conflict> {
    v.sort_unstable();
    v
}

fn conflict_counting(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut mismatches, mut total) = (Vec::new(), 0usize);
    for case in 0..500 {
        let side = rng.random_range(2..=5);
        let map = GridMap::empty(side, side);
        let n = rng.random_range(1..=10);
        let mut paths: Vec<Path> = (0..n)
            .map(|_| {
                let len = rng.random_range(1..=41);
                random_walk(&mut rng, &map, len)
            })
            .collect();
        let brute = sorted(detect_conflicts_brute(&paths));
        total += brute.len();
        let k = rng.random_range(1..=8);
        let windowed: Vec<Conflict> = partition_windows(makespan(&paths), k)
            .into_iter()
            .flat_map(|(lo, hi)| detect_conflicts_windowed(&paths, lo, hi))
            .collect();
        if sorted(windowed) != brute {
            mismatches.push(format!("case {case}: windowed k={k}"));
        }
        let agent = rng.random_range(0..n);
        let len = rng.random_range(1..=41);
        paths[agent] = random_walk(&mut rng, &map, len);
        let recount = sorted(recount_after_replan(&brute, &paths, agent));
        if recount != sorted(detect_conflicts_brute(&paths)) {
            mismatches.push(format!("case {case}: recount agent {agent}"));
        }
    }
    report.check(
        3,
        mismatches.is_empty(),
        format!(
            "500 fuzzed path sets ({total} conflicts), {} mismatches{}",
            mismatches.len(),
            mismatches
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    );
}

fn disjoint_contract(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = Vec::new();
    for case in 0..500 {
        let n = rng.random_range(2..=10);
        let len = rng.random_range(0..=30);
        let input: Vec<Conflict> = (0..len)
            .map(|_| {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let t = rng.random_range(0..40);
                let v = Vertex(rng.random_range(0..25));
                if rng.random_bool(0.5) {
                    Conflict::vertex(a, b, v, t.max(1))
                } else {
                    Conflict::edge(a, b, v, Vertex(v.0 + 1), t.max(1))
                }
            })
            .collect();
        let out = find_disjoint_conflicts(&input);
        let disjoint = out.iter().enumerate().all(|(i, c)| {
            out[i + 1..]
                .iter()
                .all(|d| c.a1 != d.a1 && c.a1 != d.a2 && c.a2 != d.a1 && c.a2 != d.a2)
        });
        let maximal = input
            .iter()
            .all(|c| out.iter().any(|d| d.involves(c.a1) || d.involves(c.a2)));
        // Chosen conflicts appear in input order.
        let mut pos = 0;
        let ordered = out
            .iter()
            .all(|d| match input[pos..].iter().position(|c| c == d) {
                Some(i) => {
                    pos += i + 1;
                    true
                }
                None => false,
            });
        if !(disjoint && maximal && ordered) {
            bad.push(case);
        }
    }
    report.check(
        4,
        bad.is_empty(),
        format!(
            "500 fuzzed conflict lists, {} violations {:?}",
            bad.len(),
            bad
        ),
    );
}

fn monotone_lb(report: &mut Report) {
    let map = fixture_map();
    let (mut lb_events, mut children, mut solved) = (0usize, 0usize, 0);
    let mut bad = Vec::new();
    for seed in 0..50u64 {
        let instance = gen_uniform_random(Arc::clone(&map), 40, seed).unwrap();
        for bypass in [true, false] {
            let mut p = params(2.0, 30.0, seed);
            p.bypass = bypass;
            let mut last = 0u64;
            let mut ok = true;
            let out = solve_ecbs_traced(&instance, &p, &mut |e| match e {
                SearchEvent::SocLb(lb) => {
                    lb_events += 1;
                    ok &= lb >= last;
                    last = lb;
                }
                SearchEvent::Child {
                    parent_lb,
                    child_lb,
                } => {
                    children += 1;
                    ok &= child_lb >= parent_lb;
                }
                SearchEvent::Expanded { .. } => {}
            })
            .unwrap();
            report.certify(
                &format!("c5 seed {seed} bypass={bypass}"),
                &instance,
                2.0,
                &out,
            );
            solved += usize::from(out.is_solved());
            if !ok {
                bad.push((seed, bypass));
            }
        }
    }
    report.check(
        5,
        bad.is_empty(),
        format!(
            "100 serial runs (50 seeds, with and without bypass), {solved} solved, \
             {lb_events} bound updates, {children} children, violations {bad:?}"
        ),
    );
}

fn dp_accounting(report: &mut Report) {
    let map = fixture_map();
    let mut bad = Vec::new();
    let (mut expanded, mut solved) = (0u64, 0);
    for seed in 0..50u64 {
        let n = 100 + 10 * (seed % 6) as usize;
        let instance = gen_uniform_random(Arc::clone(&map), n, seed).unwrap();
        let strategy = if seed % 2 == 0 {
            DistributionStrategy::Deterministic
        } else {
            DistributionStrategy::Random
        };
        let out = solve_dp(&instance, &params(2.0, 5.0, seed), 8, strategy).unwrap();
        report.certify(&format!("c6 seed {seed}"), &instance, 2.0, &out);
        expanded += out.expansions;
        solved += usize::from(out.is_solved());
        if out.generated != out.expansions + out.residual + out.pruned {
            bad.push(format!(
                "seed {seed}: {} != {} + {} + {}",
                out.generated, out.expansions, out.residual, out.pruned
            ));
        }
    }
    report.check(
        6,
        bad.is_empty(),
        format!(
            "50 runs with 8 workers ({solved} solved, {expanded} expansions), \
             generated = expanded + residual + pruned broken in {}{}",
            bad.len(),
            bad.first()
                .map(|b| format!(" (first: {b})"))
                .unwrap_or_default()
        ),
    );
}

fn rate(out: &SolveOutcome) -> f64 {
    out.expansions as f64 / out.wall_time.as_secs_f64().max(1e-9)
}

fn throughput(report: &mut Report) {
    let map = fixture_map();
    let (mut serial, mut parallel) = (Vec::new(), Vec::new());
    let mut tried = 0;
    for seed in 0..30u64 {
        if serial.len() == 20 {
            break;
        }
        tried += 1;
        let instance = gen_uniform_random(Arc::clone(&map), 280, seed).unwrap();
        let p = params(2.0, 3.0, seed);
        let s = solve_ecbs(&instance, &p).unwrap();
        report.certify(&format!("c7 seed {seed} serial"), &instance, 2.0, &s);
        if s.wall_time < Duration::from_secs(2) {
            continue;
        }
        let d = solve_dp(&instance, &p, 8, DistributionStrategy::Deterministic).unwrap();
        report.certify(&format!("c7 seed {seed} dp"), &instance, 2.0, &d);
        serial.push(rate(&s));
        parallel.push(rate(&d));
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (Some(s), Some(p)) = (median(serial.clone()), median(parallel)) else {
        report.line(
            7,
            Verdict::Info,
            format!("FAIL: no instance needed 2 s serially in {tried} tries"),
        );
        return;
    };
    let speedup = p / s;
    report.line(
        7,
        Verdict::Info,
        format!(
            "{} ({} instances of {tried}, 280 robots): median serial {s:.0} nodes/s, \
             8 workers {p:.0} nodes/s, {speedup:.2}x vs 2x target on {threads} hardware thread(s)",
            if speedup >= 2.0 { "PASS" } else { "FAIL" },
            serial.len(),
        ),
    );
}

fn pb_speedup(report: &mut Report) {
    let map = Arc::new(gen_random_obstacle_map(128, 128, 0.1, 128));
    let (mut ratios, mut worst_subopt, mut unsolved) = (Vec::new(), 0.0f64, 0);
    for seed in 0..10u64 {
        let instance = gen_uniform_random(Arc::clone(&map), 600, seed).unwrap();
        let p = params(2.0, 60.0, seed);
        let shortest = soc_lower_bound(&instance).unwrap() as f64;
        let e = solve_ecbs(&instance, &p).unwrap();
        let b = solve_pb(&instance, &PbParams::new(p.clone(), 4)).unwrap();
        report.certify(&format!("c8 seed {seed} ecbs"), &instance, 2.0, &e);
        report.certify(&format!("c8 seed {seed} pb"), &instance, 2.0, &b);
        match b.soc {
            Some(soc) => worst_subopt = worst_subopt.max(soc as f64 / shortest),
            None => unsolved += 1,
        }
        ratios.push(b.wall_time.as_secs_f64() / e.wall_time.as_secs_f64());
    }
    let m = median(ratios).unwrap();
    report.check(
        8,
        worst_subopt <= 1.2 && unsolved == 0,
        format!(
            "PB-ECBS suboptimality over 10 instances (128x128, 600 robots): worst {worst_subopt:.4} \
             (bound 1.2), {unsolved} unsolved"
        ),
    );
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    report.line(
        8,
        Verdict::Info,
        format!(
            "{}: median PB-ECBS/ECBS wall time {m:.3} (target <= 0.8) on {threads} hardware thread(s)",
            if m <= 0.8 { "PASS" } else { "FAIL" }
        ),
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_parcbs"))
        .args(args)
        .output()
        .expect("running the cli")
}

fn determinism(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    let mut runs = 0;
    let cases = [
        ("random-32-32-20", 60, "ecbs", vec![]),
        ("random-32-32-20", 60, "dp-ecbs", vec!["--workers", "1"]),
        (
            "random-32-32-20",
            60,
            "dp-ecbs",
            vec!["--workers", "1", "--strategy", "random"],
        ),
        ("corner-16", 20, "ecbs", vec!["--no-bypass"]),
        ("corner-16", 20, "dp-ecbs", vec!["--workers", "1"]),
    ];
    for (i, (name, agents, algo, extra)) in cases.iter().enumerate() {
        let map = fixture(&format!("{name}.map"));
        let scen = fixture(&format!("{name}.scen"));
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let stats = dir.path().join(format!("{i}-{rep}.json"));
            let plan = dir.path().join(format!("{i}-{rep}.plan"));
            let agents = agents.to_string();
            let mut args = vec![
                "solve",
                "--map",
                map.to_str().unwrap(),
                "--scen",
                scen.to_str().unwrap(),
                "--agents",
                &agents,
                "--algo",
                algo,
                "--seed",
                "3",
                "--omit-timing",
                "--out",
                plan.to_str().unwrap(),
                "--stats",
                stats.to_str().unwrap(),
            ];
            args.extend(extra.iter().copied());
            let out = run_cli(&args);
            runs += 1;
            if !out.status.success() {
                bad.push(format!("{name} {algo}: exit {:?}", out.status.code()));
            }
            outputs.push(std::fs::read(&stats).unwrap_or_default());
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            bad.push(format!("{name} {algo} {extra:?}: stats differ"));
        }
    }
    report.check(
        9,
        bad.is_empty(),
        format!(
            "{runs} CLI runs in {} pairs, stats JSON byte-identical; problems {bad:?}",
            cases.len()
        ),
    );
}

fn format_fidelity(report: &mut Report) {
    let mut bad = Vec::new();
    let read = |name: &str| std::fs::read_to_string(fixture(name)).unwrap();
    for name in ["random-32-32-20.map", "corner-16.map"] {
        let text = read(name);
        match GridMap::parse(&text) {
            Ok(m) if m.to_map_string() == text => {}
            Ok(_) => bad.push(format!("{name}: text differs")),
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    for (scen, map) in [
        ("random-32-32-20.scen", "random-32-32-20.map"),
        ("corner-16.scen", "corner-16.map"),
    ] {
        let text = read(scen);
        let grid = GridMap::parse(&read(map)).unwrap();
        match parse_scen_entries(&text) {
            Ok(e) if serialize_scen(&e) == text && parse_scen(&text, &grid).is_ok() => {}
            Ok(_) => bad.push(format!("{scen}: text differs or cells invalid")),
            Err(e) => bad.push(format!("{scen}: {e}")),
        }
    }
    let plan_text = read("random-32-32-20-n30.plan");
    match parse_plan(&plan_text) {
        Ok(plan) if serialize_plan(&plan) == plan_text => {
            let grid = GridMap::parse(&read("random-32-32-20.map")).unwrap();
            let pairs = parse_scen(&read("random-32-32-20.scen"), &grid).unwrap();
            let instance = Instance::from_pairs(Arc::new(grid.clone()), &pairs[..30]).unwrap();
            let paths = plan.to_paths(&grid).unwrap();
            if !validate_solution(&instance, &paths).unwrap().ok {
                bad.push("plan fixture no longer valid".into());
            }
        }
        Ok(_) => bad.push("plan: text differs".into()),
        Err(e) => bad.push(format!("plan: {e}")),
    }
    let csv_text = std::fs::read(fixture("small-suite.csv")).unwrap();
    match read_records(csv_text.as_slice()) {
        Ok(records) => {
            let mut again = Vec::new();
            write_records(&mut again, &records).unwrap();
            if again != csv_text {
                bad.push("bench csv: bytes differ".into());
            }
            if read_records(again.as_slice()).ok().as_ref() != Some(&records) {
                bad.push("bench csv: records differ".into());
            }
        }
        Err(e) => bad.push(format!("bench csv: {e}")),
    }
    report.check(
        10,
        bad.is_empty(),
        format!("2 maps, 2 scens, 1 plan, 1 bench csv round-tripped; problems {bad:?}"),
    );
}

fn main() {
    // Accept and ignore libtest flags so `cargo test` can pass its own.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let wanted = |id: u32| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());

    let mut report = Report::default();
    if wanted(1) {
        oracle_bound(&mut report);
    }
    if wanted(3) {
        conflict_counting(&mut report);
    }
    if wanted(4) {
        disjoint_contract(&mut report);
    }
    if wanted(5) {
        monotone_lb(&mut report);
    }
    if wanted(6) {
        dp_accounting(&mut report);
    }
    if wanted(7) {
        throughput(&mut report);
    }
    if wanted(8) {
        pb_speedup(&mut report);
    }
    if wanted(9) {
        determinism(&mut report);
    }
    if wanted(10) {
        format_fidelity(&mut report);
    }
    let failures = std::mem::take(&mut report.cert_failures);
    report.check(
        2,
        failures.is_empty(),
        format!(
            "{} solved outcomes from the runs above: soc <= w * soc_lb and validator ok, {} failures{}",
            report.certified,
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
    if !report.failed.is_empty() {
        eprintln!("failed criteria: {:?}", report.failed);
        std::process::exit(1);
    }
}
