//! Acceptance suite: one PASS/FAIL line per criterion. Set
//! `BOOKCELL_ACCEPT=<n,m,...>` to run a subset.

use std::time::{Duration, Instant};

use bookcell::appendix::{fixed_point_iterate, fixed_point_limit, iterate_decay, mean_waiting_time, stochastic_energy};
use bookcell::config::{FieldRates, SimConfig};
use bookcell::energetics::eat_gain;
use bookcell::engine::snapshot::snapshot;
use bookcell::experiment::{run_experiment, ExperimentSpec};
use bookcell::genome::{classify_action, encode_payload, find_read_position, read_step, ExpansionPayload, PayloadLayout};
use bookcell::mechanics::{birth_length, check_break, try_connect, MechParams};
use bookcell::metrics::to_csv;
use bookcell::neurocell::{hebb_update, NetShape};
use bookcell::{ActionKind, Genome, Rng, Simulation};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(limit: Duration, elapsed: Duration, msg: String) -> Outcome {
    ensure(elapsed < limit, format!("{msg}; {:.2?} (limit {:?})", elapsed, limit))
}

fn decay_law() -> Outcome {
    let t = Instant::now();
    let e = iterate_decay(100.0, 0.25, 10.0, 1_000_000).map_err(|e| e.to_string())?;
    let exact = 100.0 * (-2.5f64).exp();
    let rel = (e - exact).abs() / exact;
    let el = t.elapsed();
    ensure(rel < 1e-4, format!("relative error {rel:.3e}"))?;
    within(Duration::from_secs(1), el, format!("relative error {rel:.3e}"))
}

fn fixed_point() -> Outcome {
    let t = Instant::now();
    let f = fixed_point_iterate(0.5, 1.0, 1.0, 1000);
    // 1 / (1 - e^{-1/2}) from its decimal expansion.
    let oracle = 1.0 / (1.0 - 0.606_530_659_712_633_4);
    let limit = fixed_point_limit(0.5, 1.0, 1.0);
    let err = (f - oracle).abs();
    let el = t.elapsed();
    ensure(err < 1e-9 && (limit - oracle).abs() < 1e-12, format!("f = {f:.10}, limit {oracle:.10}, error {err:.1e}"))?;
    within(Duration::from_secs(1), el, format!("f = {f:.10}, limit {oracle:.10}"))
}

fn stochastic_e_infinity() -> Outcome {
    let t = Instant::now();
    let p = 0.2;
    let mut rng = Rng::from_key(2024);
    let wait = mean_waiting_time(p, 100_000, &mut rng);
    let u = 0.002;
    let mean = stochastic_energy(p, u, 1.0, 100_000, &mut rng);
    let e_inf = 1.0 / (1.0 - (-u / p).exp());
    let wait_err = (wait - 1.0 / p).abs() * p;
    let e_err = (mean - e_inf).abs() / e_inf;
    let el = t.elapsed();
    let msg = format!("mean wait {wait:.4} (err {wait_err:.2e}), mean E {mean:.3} vs E∞ {e_inf:.3} (err {e_err:.2e})");
    ensure(wait_err < 0.01 && e_err < 0.02, msg.clone())?;
    within(Duration::from_secs(10), el, msg)
}

fn genome_golden() -> Outcome {
    let layout = PayloadLayout::new(NetShape::new(6, 8), 8);
    let expansion_book = |prefix: &str, action: u8, tail: &str| {
        let mut b = prefix.as_bytes().to_vec();
        b.push(action);
        b.extend(encode_payload(&ExpansionPayload::neutral(&layout), &layout).unwrap());
        b.extend_from_slice(tail.as_bytes());
        b
    };
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let book = b"ABCDEFGHIJKLMN";
    check("read position follows bookmarker", find_read_position(book, b"EF").map(|i| book[i]) == Some(b'G'));
    check("G is expansion", classify_action(b'G') == Ok(ActionKind::Expansion));
    check("Q is connection", classify_action(b'Q') == Ok(ActionKind::Connection));
    check("g is disconnection", classify_action(b'g') == Ok(ActionKind::Disconnection));
    check("w is transition", classify_action(b'w') == Ok(ActionKind::Transition));

    let g = Genome::new(expansion_book("ABCDEF", b'G', "defg"), "EF", "A").unwrap();
    let out = read_step(&g, &layout).unwrap().unwrap();
    check("expansion carries payload", out.action == ActionKind::Expansion && out.payload.is_some());
    check("new bookmarker df", out.next_bookmarker == b"df");
    for (sym, kind, name) in [
        (b'Q', ActionKind::Connection, "connection read"),
        (b'g', ActionKind::Disconnection, "disconnection read"),
        (b'w', ActionKind::Transition, "transition read"),
    ] {
        let mut b = b"ABCDEF".to_vec();
        b.push(sym);
        b.extend_from_slice(b"defgxyz");
        let out = read_step(&Genome::new(b, "EF", "A").unwrap(), &layout).unwrap().unwrap();
        check(name, out.action == kind && out.payload.is_none() && out.next_bookmarker == b"df");
    }
    let rep = expansion_book("CDEF", b'A', "EeFghi");
    let out = read_step(&Genome::new(rep.clone(), "EF", "A").unwrap(), &layout).unwrap().unwrap();
    check("self-loop with advance A", out.next_bookmarker == b"EF" && out.next_advance == b"g");
    let out = read_step(&Genome::new(rep, "EF", "C").unwrap(), &layout).unwrap().unwrap();
    check("advance 2 gives Fh", out.next_bookmarker == b"Fh");
    check("new advance i", out.next_advance == b"i");
    ensure(failures.is_empty(), if failures.is_empty() { "all read examples exact".into() } else { format!("failed: {}", failures.join(", ")) })
}

fn property_suites() -> Outcome {
    let cases = 10_000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let mut report = Vec::new();

    let eat = runner.run(&(-1.0f64..2.0, 0usize..7, 0usize..7, 0.0f64..100.0, 0.0f64..4.0), |(d, ne, np, e, k)| {
        let g = eat_gain(d, ne, np, 6, e);
        if ne <= np || d <= 0.0 || e == 0.0 {
            prop_assert_eq!(g, 0.0);
        }
        prop_assert!((0.0..=e).contains(&g));
        let frac = (d.max(0.0) * ne.saturating_sub(np) as f64 / 6.0).min(1.0);
        prop_assert!((g - frac * e).abs() <= 1e-12 * e.max(1.0));
        let scaled = eat_gain(d, ne, np, 6, k * e);
        prop_assert!((scaled - k * g).abs() <= 1e-9 * (k * e).max(1.0));
        Ok(())
    });
    report.push(("eat", eat.map_err(|e| e.to_string())));

    let m = MechParams::default();
    let geo = runner.run(&(0.0f64..0.6, 0.02f64..0.16, 0.02f64..0.16, 0.0f64..0.6), |(dist, ra, rb, stretch)| {
        let r = ra.min(rb);
        match try_connect(dist, ra, rb, &m) {
            Some(len) => {
                prop_assert!(dist <= 1.95 * r);
                prop_assert!(len <= 1.10 * r && len >= m.min_length_factor * r);
                prop_assert!(len == dist.min(1.10 * r).max(m.min_length_factor * r));
            }
            None => prop_assert!(dist > 1.95 * r),
        }
        let len = birth_length(ra + rb, ra, rb, &m);
        prop_assert!(len <= 1.10 * r);
        prop_assert_eq!(check_break(stretch, len, &m), stretch > 2.0 * len);
        Ok(())
    });
    report.push(("geometry", geo.map_err(|e| e.to_string())));

    let hebb = runner.run(&(-10.0f64..10.0, -1.0f64..1.0, 0.0f64..1.0), |(s, x, ds)| {
        prop_assert_eq!(hebb_update(s, x, ds), s + ds * x);
        prop_assert_eq!(hebb_update(s, x, 0.0), s);
        prop_assert_eq!(hebb_update(s, -x, ds) - s, -(hebb_update(s, x, ds) - s));
        Ok(())
    });
    report.push(("hebb", hebb.map_err(|e| e.to_string())));

    let failed: Vec<String> = report.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    ensure(failed.is_empty(), if failed.is_empty() { format!("3 suites x {cases} cases, zero failures") } else { failed.join("; ") })
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let mut c = SimConfig::default();
    c.seed = 42;
    c.population.count = 10;
    c.adaptive.target = 120;
    c.epoch = 2500;
    let run = |parallel: bool| -> Result<(Vec<String>, Vec<u8>), String> {
        let mut sim = Simulation::with_population(c.clone()).map_err(|e| e.to_string())?;
        sim.set_parallel(parallel);
        sim.run(10_000).map_err(|e| e.to_string())?;
        let csv = sim.fields_mut().iter_mut().map(|f| to_csv(&f.drain_rows())).collect();
        Ok((csv, snapshot(&sim)))
    };
    let a = run(true)?;
    let b = run(true)?;
    let s = run(false)?;
    let el = t.elapsed();
    let cells: usize = a.0.iter().map(|csv| csv.lines().last().and_then(|l| l.split(',').nth(1)).and_then(|n| n.parse::<usize>().ok()).unwrap_or(0)).sum();
    let msg = format!("3 runs of 4 fields x 10^4 steps ({cells} cells at end)");
    ensure(a == b, format!("{msg}: repeated runs differ"))?;
    ensure(a == s, format!("{msg}: parallel and serial differ"))?;
    within(Duration::from_secs(120), el, format!("{msg}, identical CSVs and snapshots"))
}

fn tetrahedron_replication() -> Outcome {
    let spec = ExperimentSpec::from_toml(
        "kind = \"replicate\"\ngenomes = [\"tetrahedron\"]\nsteps = 50000\ninterval = 500\ncount = 2\n\
         [overrides]\nfixed_a = 4.0\nflat = true\n\
         [config]\nfields = [{ alpha = 0.0, beta = 0.0 }]\n",
    )
    .map_err(|e| e.to_string())?;
    let r = run_experiment(&spec).map_err(|e| e.to_string())?;
    let best = r.samples.iter().map(|s| s.b as usize).max().unwrap_or(0);
    let first = r.samples.iter().find(|s| s.b >= 3.0).map(|s| s.step);
    ensure(best >= 3, format!("max four-cell components {best} (first >= 3 at step {first:?}); final sizes {:?}", r.final_components))
}

fn population_control() -> Outcome {
    let mut c = SimConfig::default();
    c.fields = vec![FieldRates { alpha: 0.0, beta: 0.0 }];
    c.population.genome = "fecund".into();
    c.output.metrics_interval = 100;
    let target = c.adaptive.target as f64;
    let steps = 100_000;
    let mut sim = Simulation::with_population(c).map_err(|e| e.to_string())?;
    sim.run(steps).map_err(|e| e.to_string())?;
    let rows = sim.fields_mut()[0].drain_rows();
    let tail: Vec<_> = rows.iter().filter(|r| r.step >= steps / 2).collect();
    let lo = tail.iter().map(|r| r.cells).min().unwrap_or(0);
    let hi = tail.iter().map(|r| r.cells).max().unwrap_or(0);
    let a_lo = tail.iter().map(|r| r.a).fold(f64::INFINITY, f64::min);
    let a_hi = tail.iter().map(|r| r.a).fold(0.0, f64::max);
    let ok = !tail.is_empty() && (lo as f64) >= 0.9 * target && (hi as f64) <= 1.1 * target;
    ensure(ok, format!("cells in [{lo}, {hi}] over steps {}..{steps} (A in [{a_lo:.3}, {a_hi:.3}])", steps / 2))
}

fn hebb_ablation() -> Outcome {
    let size = |ds: f64| -> Result<(f64, f64), String> {
        let spec = ExperimentSpec::from_toml(&format!(
            "kind = \"fixed-feed\"\ngenomes = [\"sharing\"]\nsteps = 5000\ninterval = 100\n\
             [overrides]\ndelta_s = {ds}\nfixed_a = 2.0\n\
             [config]\nfields = [{{ alpha = 0.0, beta = 0.0 }}]\n"
        ))
        .map_err(|e| e.to_string())?;
        Ok(run_experiment(&spec).map_err(|e| e.to_string())?.equilibrium())
    };
    let (with, ext_with) = size(0.1)?;
    let (without, ext_without) = size(0.0)?;
    ensure(
        with > without,
        format!("network size {with:.2} (extent {ext_with:.3}) at 0.1 vs {without:.2} (extent {ext_without:.3}) at 0"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "decay law", decay_law),
        (2, "fixed point", fixed_point),
        (3, "stochastic E-infinity", stochastic_e_infinity),
        (4, "genome golden suite", genome_golden),
        (5, "eat/connection/Hebb properties", property_suites),
        (6, "determinism", determinism),
        (7, "tetrahedron self-replication", tetrahedron_replication),
        (8, "population control", population_control),
        (9, "hebbian rate ablation", hebb_ablation),
    ];
    let only: Option<Vec<u32>> = std::env::var("BOOKCELL_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} criterion {n} {name}: {msg} [{:.1?}]", t.elapsed());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
