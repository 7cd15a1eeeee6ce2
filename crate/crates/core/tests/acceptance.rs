//! Acceptance criteria: one PASS/FAIL line each, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use hexdiv::element::{build_space, At1Mode, Dof, SpaceSpec};
use hexdiv::geometry::Hexahedron;
use hexdiv::mesh::MeshFamily;
use hexdiv::solver::{run_study, SolverOptions, StudyResult};
use hexdiv::verify::{self, random_cells, DEFAULT_SEED};

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {msg}", if ok { "ok  " } else { "MISS" }));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn study(fam: MeshFamily, spec: SpaceSpec, ns: &[usize]) -> StudyResult {
    run_study(fam, spec, ns, &SolverOptions::default())
        .unwrap_or_else(|e| panic!("{} on {}: {e}", spec.name(), fam.name()))
}

fn at1(reduced: bool) -> SpaceSpec {
    SpaceSpec::At1 {
        mode: At1Mode::Auto,
        reduced,
    }
}

fn errors_within(
    o: &mut Outcome,
    r: &StudyResult,
    what: &str,
    want: &[f64],
    pick: fn(&hexdiv::solver::ErrorNorms) -> f64,
) {
    for (row, &w) in r.rows.iter().zip(want) {
        let got = pick(&row.errors);
        o.check(
            rel(got, w) <= 0.01,
            format!(
                "{} n={} {what} {got:.4e} vs {w:.3e} ({:+.2}%)",
                r.space,
                row.n,
                100.0 * (got - w) / w
            ),
        );
    }
}

fn criterion1() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let r = study(MeshFamily::Cube, SpaceSpec::At0Simple, &[2, 6, 12]);
    errors_within(
        &mut o,
        &r,
        "|p-p_h|",
        &[2.417e-1, 9.110e-2, 4.609e-2],
        |e| e.p,
    );
    errors_within(&mut o, &r, "|u-u_h|", &[1.136e0, 4.078e-1, 2.052e-1], |e| {
        e.u
    });
    errors_within(
        &mut o,
        &r,
        "|div(u-u_h)|",
        &[7.156e0, 2.697e0, 1.365e0],
        |e| e.div,
    );
    let s = t.elapsed().as_secs_f64();
    o.check(s < 60.0, format!("runtime {s:.1} s < 60 s"));
    o
}

fn criterion2() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let r = study(MeshFamily::Cube, at1(false), &[2, 6, 12]);
    errors_within(
        &mut o,
        &r,
        "|p-p_h|",
        &[1.171e-1, 1.505e-2, 3.814e-3],
        |e| e.p,
    );
    for (row, want) in r.rows[1..].iter().zip([1.94, 1.99]) {
        let got = row.orders.unwrap().p;
        o.check(
            (got - want).abs() <= 0.05,
            format!("AT1 n={} p order {got:.3} vs {want} ± 0.05", row.n),
        );
    }
    let s = t.elapsed().as_secs_f64();
    o.check(s < 300.0, format!("runtime {s:.1} s < 300 s"));
    o
}

fn criterion3() -> Outcome {
    let mut o = Outcome::new();
    let a = study(MeshFamily::Cube, SpaceSpec::Bddf1, &[2, 6]);
    let b = study(MeshFamily::Cube, at1(true), &[2, 6]);
    errors_within(&mut o, &a, "|u-u_h|", &[5.611e-1, 8.601e-2], |e| e.u);
    errors_within(&mut o, &b, "|u-u_h|", &[5.611e-1, 8.601e-2], |e| e.u);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let d = [
            rel(x.errors.p, y.errors.p),
            rel(x.errors.u, y.errors.u),
            rel(x.errors.div, y.errors.div),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        o.check(
            d <= 1e-8 && x.mult_dofs == y.mult_dofs,
            format!(
                "n={} BDDF1 vs AT1red max relative difference {d:.2e} <= 1e-8",
                x.n
            ),
        );
    }
    o
}

fn criterion4() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let ns = [2, 6, 12, 24];
    let last = |r: &StudyResult| r.rows.last().unwrap().orders.unwrap();
    let r = study(MeshFamily::Pillar, SpaceSpec::At0Simple, &ns);
    let l = last(&r);
    for (name, v) in [("p", l.p), ("u", l.u), ("div", l.div)] {
        o.check(
            (0.9..=1.1).contains(&v),
            format!("AT0 12->24 {name} order {v:.3} in [0.9, 1.1]"),
        );
    }
    let r = study(MeshFamily::Pillar, at1(false), &ns);
    let l = last(&r);
    for (name, v) in [("p", l.p), ("u", l.u), ("div", l.div)] {
        o.check(
            (1.9..=2.1).contains(&v),
            format!("AT1 12->24 {name} order {v:.3} in [1.9, 2.1]"),
        );
    }
    let r = study(MeshFamily::Pillar, SpaceSpec::Rt { r: 0 }, &ns);
    let divs: Vec<f64> = r.rows[1..].iter().map(|x| x.orders.unwrap().div).collect();
    let dec = divs.windows(2).all(|w| w[1] < w[0]);
    o.check(
        *divs.last().unwrap() <= 0.7 && dec,
        format!("RT0 div orders {divs:.2?}: last <= 0.7 and decreasing"),
    );
    let r = study(MeshFamily::Pillar, SpaceSpec::Rt { r: 1 }, &ns);
    let v = last(&r).div;
    o.check(v <= 1.2, format!("RT1 12->24 div order {v:.3} <= 1.2"));
    let r = study(MeshFamily::Pillar, SpaceSpec::Bddf1, &ns);
    let v = last(&r).u;
    o.check(v <= 1.5, format!("BDDF1 12->24 u order {v:.3} <= 1.5"));
    let r = study(MeshFamily::Pillar, at1(true), &ns);
    let v = last(&r).u;
    o.check(v >= 1.9, format!("AT1red 12->24 u order {v:.3} >= 1.9"));
    let s = t.elapsed().as_secs_f64();
    o.check(s < 900.0, format!("runtime {s:.1} s < 900 s"));
    o
}

fn suite_lines(o: &mut Outcome, r: &verify::SuiteReport, names: &[&str]) {
    for p in &r.properties {
        if names.is_empty() || names.contains(&p.name.as_str()) {
            o.check(
                p.ok() && p.total > 0,
                format!(
                    "{}: {}/{} (worst {:.2e})",
                    p.name, p.passed, p.total, p.worst
                ),
            );
        }
    }
}

fn criterion5() -> Outcome {
    let mut o = Outcome::new();
    let r = verify::supplements(DEFAULT_SEED, 100);
    suite_lines(&mut o, &r, &[]);
    o
}

fn criterion6() -> Outcome {
    let mut o = Outcome::new();
    suite_lines(
        &mut o,
        &verify::spaces(DEFAULT_SEED, 100),
        &["M N^T = 0 (AT0 general)", "S phi = 0 (AT0 general)"],
    );
    let l = verify::lemma51(DEFAULT_SEED, 1000);
    suite_lines(&mut o, &l, &[]);
    o.check(
        l.properties[0].passed == 1000,
        "lemma51 randomized suite 1000/1000".into(),
    );
    suite_lines(
        &mut o,
        &verify::projection(DEFAULT_SEED, 30),
        &["commuting-diagram residual < 1e-10"],
    );
    suite_lines(
        &mut o,
        &verify::appendix(DEFAULT_SEED, 100),
        &["C∘H = I on the unit cube", "a - b identity"],
    );
    o
}

fn criterion7() -> Outcome {
    let mut o = Outcome::new();
    let mut cells = vec![Hexahedron::unit_cube()];
    cells.extend(random_cells(DEFAULT_SEED, 3));
    let table = [
        (SpaceSpec::At0Simple, 6, 1),
        (SpaceSpec::At0General, 6, 1),
        (at1(false), 21, 4),
        (at1(true), 18, 1),
        (SpaceSpec::Rt { r: 0 }, 6, 1),
        (SpaceSpec::Rt { r: 1 }, 36, 8),
        (SpaceSpec::Bddf1, 18, 1),
    ];
    for (spec, dv, dw) in table {
        let mut ok = true;
        let mut extra = String::new();
        for h in &cells {
            let s = build_space::<f64>(h, spec).unwrap();
            ok &= s.dim() == dv && s.w_dim() == dw && s.dofs.len() == dv;
            if matches!(spec, SpaceSpec::At0Simple | SpaceSpec::At0General) {
                let flux = s
                    .dofs
                    .iter()
                    .filter(|d| matches!(d, Dof::Flux { .. }))
                    .count();
                ok &= s.n_supplements == 2 && flux == 6 && s.basis.len() - s.n_supplements == 4;
                extra = format!(
                    " (4 polynomial + {} supplements, {flux} flux DOFs)",
                    s.n_supplements
                );
            }
        }
        o.check(ok, format!("{} dim {dv} + {dw}{extra}", spec.name()));
    }
    o
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 AT0 errors on cube meshes", criterion1),
        ("2 AT1 errors and orders on cube meshes", criterion2),
        ("3 BDDF1 = AT1red on cube meshes", criterion3),
        ("4 orders on pillar meshes", criterion4),
        ("5 supplement exactness", criterion5),
        ("6 structural checks", criterion6),
        ("7 dimensions", criterion7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let out = run();
        for l in &out.lines {
            println!("    {l}");
        }
        println!(
            "criterion {name}: {} ({:.1} s)",
            if out.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} of 7 criteria pass", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
