//! Acceptance gate. Prints one PASS/FAIL line per criterion on stderr
//! (bypassing the test harness capture) and fails if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use qbilateral::cauchy::{
    check_finite_identity, replay_1psi1, replay_6psi6, sample_family_params, FamilyId, FiniteIdentityFamily,
    ProofTrace, StepData, StepKind, DEFAULT_NS,
};
use qbilateral::cli;
use qbilateral::identities::{
    lhs, sample_valid_instance, verify, IdentityId, IdentityInstance, Mode, Verdict,
};
use qbilateral::numerics::{rat, PrecisionContext, Rational};
use qbilateral::qfactorial::QBase;
use qbilateral::series::TruncationPolicy;
use qbilateral::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: u32, title: &str, elapsed: Duration, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {n}: {title} ({:.1}s) {}\n", elapsed.as_secs_f64(), o.detail);
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn base(n: i64, d: i64) -> QBase {
    QBase::new(rat(n, d)).unwrap()
}

fn defaults() -> (TruncationPolicy, PrecisionContext) {
    (TruncationPolicy::default(), PrecisionContext::default())
}

/// Runs `sweep` through the CLI; checks exit code, count, verdicts and mode.
fn sweep(args: &str, count: usize, mode: &str) -> std::result::Result<(), String> {
    let out = cli::run(["qbilateral", "sweep"].into_iter().chain(args.split_whitespace()));
    let lines: Vec<serde_json::Value> = out
        .stdout
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| format!("{args}: bad json {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let (summary, reports) = lines.split_last().ok_or(format!("{args}: no output"))?;
    if out.code != 0 {
        return Err(format!("{args}: exit {} {}", out.code, summary));
    }
    if reports.len() != count || summary["summary"]["pass"] != count {
        return Err(format!("{args}: {summary}"));
    }
    if let Some(r) = reports.iter().find(|r| r["verdict"] != "Pass" || r["mode"] != mode) {
        return Err(format!("{args}: {r}"));
    }
    Ok(())
}

fn sweeps(jobs: &[(&str, usize)], mode: &str) -> Outcome {
    let errors: Vec<String> = jobs.iter().filter_map(|(a, c)| sweep(a, *c, mode).err()).collect();
    let total: usize = jobs.iter().map(|j| j.1).sum();
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() { format!("{total} instances, all Pass ({mode})") } else { errors.join("; ") },
    }
}

fn criterion_1() -> Outcome {
    sweeps(
        &[("I3 --count 200", 200), ("I4 --count 200", 200), ("I6 --count 100", 100), ("I7 --count 100", 100)],
        "Exact",
    )
}

fn criterion_2() -> Outcome {
    let b = base(1, 2);
    let jobs: Vec<(FamilyId, u64)> = FamilyId::ALL.iter().flat_map(|&f| (0..=5).map(move |n| (f, n))).collect();
    let results: Vec<std::result::Result<usize, String>> = jobs
        .par_iter()
        .map(|&(id, n)| {
            let (mut ok, mut seed) = (0, 0u64);
            while ok < 20 {
                if seed >= 400 {
                    return Err(format!("{id} n={n}: ran out of regular points"));
                }
                let p = sample_family_params(id, 10_000 + seed * 11 + n, &b);
                seed += 1;
                let fam = FiniteIdentityFamily::new(id, n, p, b.clone()).map_err(|e| e.to_string())?;
                match check_finite_identity(&fam) {
                    Ok(step) if step.pass => ok += 1,
                    Ok(step) => return Err(format!("{id} n={n}: residual {}", step.residual)),
                    Err(Error::InvalidInstance(_)) => {}
                    Err(e) => return Err(format!("{id} n={n}: {e}")),
                }
            }
            Ok(ok)
        })
        .collect();
    let errors: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    let checked: usize = results.iter().filter_map(|r| r.clone().ok()).sum();
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() {
            format!("{checked} family points, residual exactly 0")
        } else {
            errors.join("; ")
        },
    }
}

fn criterion_3() -> Outcome {
    sweeps(
        &[
            ("I1 --count 100 --q 1/10", 100),
            ("I1 --count 100 --q 1/2", 100),
            ("I2 --count 100", 100),
            ("I5 --count 100", 100),
            ("I8 --count 50", 50),
            ("I9 --count 25", 25),
        ],
        "Certified",
    )
}

fn six_from_i2(inst: &IdentityInstance) -> BTreeMap<String, Rational> {
    // I2's (b, c, d, e) are the derivation's (c, d, e, f)
    [("a", "a"), ("c", "b"), ("d", "c"), ("e", "d"), ("f", "e")]
        .into_iter()
        .map(|(to, from)| (to.to_string(), inst.get(from).clone()))
        .collect()
}

fn replays() -> Vec<std::result::Result<ProofTrace, String>> {
    let (pol, ctx) = defaults();
    let (b1, b6) = (base(1, 10), base(1, 2));
    (0..20u64)
        .into_par_iter()
        .map(|i| {
            let seed = 500 + i / 2;
            if i % 2 == 0 {
                let inst = sample_valid_instance(IdentityId::I1, seed, &b1).map_err(|e| e.to_string())?;
                replay_1psi1(inst.params(), &b1, &pol, &ctx, &DEFAULT_NS).map_err(|e| format!("1psi1 seed {seed}: {e}"))
            } else {
                let inst = sample_valid_instance(IdentityId::I2, seed, &b6).map_err(|e| e.to_string())?;
                replay_6psi6(&six_from_i2(&inst), &b6, &pol, &ctx, &DEFAULT_NS)
                    .map_err(|e| format!("6psi6 seed {seed}: {e}"))
            }
        })
        .collect()
}

fn criterion_4(traces: &[std::result::Result<ProofTrace, String>]) -> Outcome {
    let mut errors = Vec::new();
    for t in traces {
        let t = match t {
            Ok(t) => t,
            Err(e) => {
                errors.push(e.clone());
                continue;
            }
        };
        if t.verdict != Verdict::Pass {
            let bad: Vec<String> = t.steps.iter().filter(|s| !s.pass).map(|s| s.description.clone()).collect();
            errors.push(format!("{}: {}", t.target, bad.join(" | ")));
        }
        if t.target == IdentityId::I2 {
            let last = t.steps.last().unwrap();
            let one = match &last.data {
                StepData::Terminal { value } => value.value().to_rational().is_one() && value.err().is_zero(),
                _ => false,
            };
            if last.kind != StepKind::Specialize || !one || !last.description.contains("terminal series = 1") {
                errors.push(format!("6psi6 specialize step: {}", last.description));
            }
        }
    }
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() {
            "10 x 1psi1 + 10 x 6psi6 traces Pass, terminal series = 1 ± 0".into()
        } else {
            errors.join("; ")
        },
    }
}

fn criterion_5(traces: &[std::result::Result<ProofTrace, String>]) -> Outcome {
    let slack = rat(3, 2);
    let mut errors = Vec::new();
    let mut worst = 0f64;
    for t in traces.iter().flatten() {
        let Some(step) = t.steps.iter().find(|s| s.kind == StepKind::TanneryLimit) else {
            errors.push(format!("{}: no limit step", t.target));
            continue;
        };
        let StepData::Deviations { ns, deviations, ratio } = &step.data else {
            errors.push(format!("{}: no deviations", t.target));
            continue;
        };
        if ns.as_slice() != DEFAULT_NS {
            errors.push(format!("{}: ns {ns:?}", t.target));
            continue;
        }
        let q = if t.target == IdentityId::I1 { rat(1, 10) } else { rat(1, 2) };
        let r = ratio.clone().max(q);
        for i in 1..ns.len() {
            let (prev, cur) = (&deviations[i - 1], &deviations[i]);
            let dn = (ns[i] - ns[i - 1]) as i32;
            let bound = &slack * num_traits::pow(r.clone(), dn as usize);
            if cur >= prev || cur > &(&bound * prev) {
                errors.push(format!("{}: dev(n={}) = {} vs dev(n={}) = {}", t.target, ns[i], f(cur), ns[i - 1], f(prev)));
            } else if !prev.is_zero() {
                worst = worst.max(f(cur) / (f(prev) * f(&bound)));
            }
        }
    }
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() {
            format!("20 traces strictly decreasing; largest shrink / bound = {worst:.3}")
        } else {
            errors.join("; ")
        },
    }
}

fn f(x: &Rational) -> f64 {
    if x.is_zero() {
        0.0
    } else {
        qbilateral::numerics::log2_abs(x).exp2()
    }
}

fn criterion_6() -> Outcome {
    let b = base(1, 2);
    let first = (TruncationPolicy::new(10_000, rat(1, 10).pow(30), None).unwrap(), PrecisionContext::new(256, rat(1, 10).pow(30)).unwrap());
    let second = (TruncationPolicy::new(10_000, rat(1, 10).pow(32), None).unwrap(), PrecisionContext::new(512, rat(1, 10).pow(32)).unwrap());
    let results: Vec<std::result::Result<(), String>> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let id = [IdentityId::I1, IdentityId::I2, IdentityId::I5][(i % 3) as usize];
            let inst = sample_valid_instance(id, 900 + i, &b).map_err(|e| e.to_string())?;
            let v1 = lhs(&inst, &first.0, &first.1).map_err(|e| e.to_string())?.to_approx(256);
            let v2 = lhs(&inst, &second.0, &second.1).map_err(|e| e.to_string())?.to_approx(512);
            let d = v1.distance(&v2);
            if d <= v1.err().to_rational() {
                Ok(())
            } else {
                Err(format!("{id} seed {}: moved {} beyond err {}", 900 + i, f(&d), f(&v1.err().to_rational())))
            }
        })
        .collect();
    let errors: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() { "50 evaluations (I1, I2, I5 left sides) within first err".into() } else { errors.join("; ") },
    }
}

fn criterion_7() -> Outcome {
    let (pol, ctx) = defaults();
    let mut errors = Vec::new();

    // I8's left side does not involve b
    let b = base(1, 2);
    let (mut done, mut seed) = (0, 0u64);
    while done < 20 && seed < 200 {
        let s = sample_valid_instance(IdentityId::I8, 3_000 + seed, &b).unwrap();
        seed += 1;
        let mut params = s.params().clone();
        params.insert("b".into(), s.get("b") * rat(3, 5));
        let t = IdentityInstance::new(IdentityId::I8, params, None, b.clone()).unwrap();
        let rt = verify(&t, &pol, &ctx);
        if rt.verdict == Verdict::Invalid {
            continue;
        }
        let rs = verify(&s, &pol, &ctx);
        if rs.lhs != rt.lhs || rs.verdict != Verdict::Pass || rt.verdict != Verdict::Pass {
            errors.push(format!("I8 b-independence seed {}", 3_000 + seed - 1));
        }
        done += 1;
    }
    if done < 20 {
        errors.push(format!("I8 b-independence: only {done} points"));
    }

    // I7 at b = aq/c is I6 at (a, d, e, f)
    let (mut done, mut seed) = (0, 0u64);
    while done < 20 && seed < 400 {
        let s = sample_valid_instance(IdentityId::I7, 4_000 + seed, &b).unwrap();
        seed += 1;
        let p = |k: &str| s.get(k).clone();
        let i7 = IdentityInstance::from_pairs(
            IdentityId::I7,
            &[("a", p("a")), ("b", p("a") * b.q() / p("c")), ("c", p("c")), ("d", p("d")), ("e", p("e")), ("f", p("f"))],
            s.n(),
            b.clone(),
        )
        .unwrap();
        let i6 = IdentityInstance::from_pairs(IdentityId::I6, &[("a", p("a")), ("b", p("d")), ("c", p("e")), ("d", p("f"))], s.n(), b.clone())
            .unwrap();
        let (r7, r6) = (verify(&i7, &pol, &ctx), verify(&i6, &pol, &ctx));
        if r7.verdict == Verdict::Invalid || r6.verdict == Verdict::Invalid {
            continue;
        }
        let exact = r7.mode == Mode::Exact && r6.mode == Mode::Exact;
        if !exact || r7.verdict != Verdict::Pass || r6.verdict != Verdict::Pass || r7.lhs != r6.lhs {
            errors.push(format!("I7/I6 seed {}", 4_000 + seed - 1));
        }
        done += 1;
    }
    if done < 20 {
        errors.push(format!("I7/I6: only {done} points"));
    }

    // I8 at b = aq/cd: λ = a, prefactor 1, both sides the same series
    let b10 = base(1, 10);
    for seed in 0..10u64 {
        let s = sample_valid_instance(IdentityId::I8, 5_000 + seed, &b10).unwrap();
        let mut params = s.params().clone();
        params.insert("b".into(), s.get("a") * b10.q() / (s.get("c") * s.get("d")));
        let i = IdentityInstance::new(IdentityId::I8, params, None, b10.clone()).unwrap();
        let r = verify(&i, &pol, &ctx);
        if r.verdict != Verdict::Pass || r.residual.as_ref().is_none_or(|x| !x.is_zero()) || i.lambda().as_ref() != Some(i.get("a")) {
            errors.push(format!("I8 trivial case seed {}", 5_000 + seed));
        }
    }
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() {
            "I8 lhs b-free at 20 points; I7|b=aq/c = I6 at 20 points (Exact); I8|b=aq/cd residual 0 at 10 points".into()
        } else {
            errors.join("; ")
        },
    }
}

#[test]
fn acceptance() {
    let mut all = true;
    let mut run = |n: u32, title: &str, body: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = body();
        report(n, title, t.elapsed(), &o);
        all &= o.pass;
    };
    run(1, "exact terminating sweeps I3/I4/I6/I7", &criterion_1);
    run(2, "finite displays, 4 families, n = 0..5, 20 points", &criterion_2);
    run(3, "bilateral sweeps I1/I2/I5/I8/I9 at 256 bits", &criterion_3);
    let t = Instant::now();
    let traces = replays();
    let spent = t.elapsed();
    run(4, "derivation replays 1psi1 and 6psi6", &|| {
        let o = criterion_4(&traces);
        Outcome { detail: format!("{} (replays took {:.1}s)", o.detail, spent.as_secs_f64()), ..o }
    });
    run(5, "limit step deviations shrink geometrically", &|| criterion_5(&traces));
    run(6, "error bounds survive re-evaluation at 512 bits, eps/100", &criterion_6);
    run(7, "structural checks", &criterion_7);
    assert!(all, "some acceptance criteria failed");
}

#[test]
fn sampled_replay_params_are_regular() {
    // guards the acceptance sampler: both derivations need |arg| < 1 room
    let inst = sample_valid_instance(IdentityId::I2, 500, &base(1, 2)).unwrap();
    let p = six_from_i2(&inst);
    let arg = rat(1, 2) * p["a"].clone() * p["a"].clone() / (&p["c"] * &p["d"] * &p["e"] * &p["f"]);
    assert!(arg.abs() < Rational::one());
}
