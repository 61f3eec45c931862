use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use spinshape::branching::{dim_spin, level_matrices, level_report, plancherel_spin, spin_vertices, NazarovLabel};
use spinshape::curves::{
    density_uniform_case, density_uniform_report, f_alpha, r_transform_evolved, r_transform_from_cumulants,
    r_transform_uniform_closed, series_agree, shape_from_moments, tau_v_moment, tau_v_moment_bounds,
    tau_v_moment_numeric, thoma_moments, uniform_case_edge, uniform_grid, vershik, vershik_cumulant, vershik_growth_constant, vkls, CurveFn,
    DrivingMeasure, ThomaAlpha, evolved_driving_cumulants,
};
use spinshape::dynamics::{
    a_factor, concentration_report, pde_residual, predicted_moments_formal, simulate, stationary_residual,
    AFactorEngine, InitialSampler, PausingSpec, SimulationConfig,
};
use spinshape::freeprob::{cumulants_to_moments, evolve_formal, free_compress, free_convolve, CumulantVector};
use spinshape::measures::{
    balance_failures, corner_weight_check, rayleigh_to_cumulants, transition_measure, FiniteMeasure,
};
use spinshape::series::{fmt_f64, fmt_rational, int, parse_rational, rat, to_f64, Poly, Rational};
use spinshape::spcore::{
    addable_boxes, count_strict_partitions, count_syt_bruteforce, doubled_profile, enumerate_strict_partitions,
    factorial, g_hook, StrictPartition,
};
use spinshape::twisted::{character_table, fmt_complex, jm_square_identity, uniform_ensemble_sum, verify_trace_formula};

use crate::output::{Report, Table};
use crate::{
    AfactorArgs, ChartableArgs, Command, CliError, DensityArgs, EvolveArgs, PausingArgs, PdeCheckArgs, ShapeArgs,
    SimulateArgs, ThomaArgs, VerifyJmArgs, VershikArgs,
};

type Outcome = Result<Report, CliError>;

pub fn run(command: &Command, seed: u64) -> Outcome {
    match command {
        Command::Enumerate(a) => enumerate(a.n),
        Command::Gcheck(a) => gcheck(a.nmax),
        Command::Tmeasure(a) => tmeasure(&a.lambda, a.rescale),
        Command::CornerWeights(a) => corner_weights(a.nmax),
        Command::Balance(a) => balance(a.nmax),
        Command::Graph(a) => graph(a.levels),
        Command::Plancherel(a) => plancherel(a.n),
        Command::Chartable(a) => chartable(a),
        Command::VerifyJm(a) => verify_jm(a),
        Command::Afactor(a) => afactor(a),
        Command::Simulate(a) => run_simulation(a, seed),
        Command::Evolve(a) => evolve(a),
        Command::PdeCheck(a) => pde_check(a, seed),
        Command::Vershik(a) => vershik_cmd(a),
        Command::Thoma(a) => thoma(a),
        Command::Density(a) => density(a),
        Command::Shape(a) => shape(a),
    }
}

fn parse_rationals(s: &str) -> Result<Vec<Rational>, CliError> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| parse_rational(x).ok_or_else(|| CliError::Config(format!("not a rational: '{x}'"))))
        .collect()
}

fn pausing(a: &PausingArgs) -> Result<PausingSpec, CliError> {
    Ok(PausingSpec::from_family(&a.psi_family, &a.psi_params, a.m, a.psi_edges.clone(), a.psi_weights.clone())?)
}

fn enumerate(n: u32) -> Outcome {
    let mut report = Report::default();
    let mut t = Table::new(&["lambda", "length", "class", "g", "labels", "dim"]);
    let partitions = enumerate_strict_partitions(n);
    for lambda in &partitions {
        let labels = NazarovLabel::all_of(lambda);
        t.push(vec![
            lambda.to_string(),
            lambda.len().to_string(),
            if lambda.is_even_class() { "even" } else { "odd" }.into(),
            g_hook(lambda)?.to_string(),
            labels.len().to_string(),
            dim_spin(&labels[0]).to_string(),
        ]);
    }
    report.table(t);
    report.check(
        "count",
        partitions.len() as u64 == count_strict_partitions(n),
        format!("{} strict partitions of {n}", partitions.len()),
    );
    let total: num_bigint::BigUint = spin_vertices(n).iter().map(|l| dim_spin(l).pow(2)).sum();
    report.check("dimension-squares", total == factorial(n), format!("sum of dim^2 over spin labels = {total}"));
    Ok(report)
}

fn gcheck(nmax: u32) -> Outcome {
    let start = Instant::now();
    let mut report = Report::default();
    let mut t = Table::new(&["n", "lambda", "g_hook", "bruteforce"]);
    let mut mismatches = 0;
    let mut total = 0;
    for n in 1..=nmax {
        for lambda in enumerate_strict_partitions(n) {
            let hook = g_hook(&lambda)?;
            let brute = count_syt_bruteforce(&lambda)?;
            mismatches += usize::from(hook != brute.into());
            total += 1;
            t.push(vec![n.to_string(), lambda.to_string(), hook.to_string(), brute.to_string()]);
        }
    }
    report.table(t);
    report.note(format!("elapsed {:.2} s", start.elapsed().as_secs_f64()));
    report.check("hook-formula", mismatches == 0, format!("{total} shapes up to n = {nmax}, {mismatches} mismatches"));
    Ok(report)
}

fn tmeasure(lambda: &str, rescale: bool) -> Outcome {
    let lambda: StrictPartition = lambda.parse()?;
    let n = lambda.n();
    let d = doubled_profile(&lambda);
    let m = transition_measure(&d);
    let scale = (2.0 * n as f64).sqrt();
    let mut report = Report::default();
    let mut columns = vec!["location", "mass", "mass_decimal"];
    if rescale {
        columns.push("location_rescaled");
    }
    let mut t = Table::new(&columns);
    for (x, w) in m.atoms() {
        let mut row = vec![fmt_rational(x), fmt_rational(w), fmt_f64(to_f64(w))];
        if rescale {
            row.push(fmt_f64(to_f64(x) / scale));
        }
        t.push(row);
    }
    report.table(t);
    let moments: Vec<String> = (1..=6).map(|k| format!("M_{k} = {}", fmt_rational(&m.moment(k)))).collect();
    report.note(format!("{lambda}: {}", moments.join(", ")));
    report.check("probability", m.is_probability(), format!("total mass {}", fmt_rational(&m.total_mass())));
    let second = m.moment(2);
    report.check("second-moment", second == int(2 * n as i64), format!("M_2 = {} (2n = {})", fmt_rational(&second), 2 * n));
    report.summary = Some(json!({ "profile": d, "area": d.area(), "measure": m.to_json() }));
    Ok(report)
}

fn corner_weights(nmax: u32) -> Outcome {
    let mut report = Report::default();
    let mut t = Table::new(&["lambda", "mu", "content", "lhs", "rhs"]);
    let mut bad = 0;
    for n in 0..=nmax {
        for lambda in enumerate_strict_partitions(n) {
            for (mu, c) in addable_boxes(&lambda) {
                let (lhs, rhs) = corner_weight_check(&lambda, &mu)?;
                bad += usize::from(lhs != rhs);
                t.push(vec![lambda.to_string(), mu.to_string(), c.to_string(), fmt_rational(&lhs), fmt_rational(&rhs)]);
            }
        }
    }
    let edges = t.rows.len();
    report.table(t);
    report.check("corner-weights", bad == 0, format!("{edges} edges with |lambda| <= {nmax}, {bad} mismatches"));
    Ok(report)
}

fn balance(nmax: u32) -> Outcome {
    let mut report = Report::default();
    let mut t = Table::new(&["lambda", "failing_valleys"]);
    let mut bad = 0;
    for n in 1..=nmax {
        for lambda in enumerate_strict_partitions(n) {
            let failures = balance_failures(&lambda);
            bad += failures.len();
            let list: Vec<String> = failures.iter().map(i64::to_string).collect();
            t.push(vec![lambda.to_string(), list.join(";")]);
        }
    }
    let shapes = t.rows.len();
    report.table(t);
    report.check("balance", bad == 0, format!("{shapes} shapes with |lambda| <= {nmax}, {bad} failing valleys"));
    Ok(report)
}

fn graph(levels: u32) -> Outcome {
    let mut report = Report::default();
    let mut edges = Table::new(&["level", "lambda", "gamma", "lambda_lower", "gamma_lower", "p_down", "p_up"]);
    let mut identities =
        Table::new(&["level", "restriction", "induction", "stochastic", "detailed_balance", "up_invariance", "plancherel_total"])
            .named("levels");
    let mut failing = Vec::new();
    for n in 2..=levels {
        let lm = level_matrices(n)?;
        for (i, u) in lm.upper.iter().enumerate() {
            for (j, l) in lm.lower.iter().enumerate() {
                if !lm.p_down[i][j].is_zero() {
                    edges.push(vec![
                        n.to_string(),
                        u.lambda.to_string(),
                        u.gamma.sign().to_string(),
                        l.lambda.to_string(),
                        l.gamma.sign().to_string(),
                        fmt_rational(&lm.p_down[i][j]),
                        fmt_rational(&lm.p_up[j][i]),
                    ]);
                }
            }
        }
        let r = level_report(n)?;
        if !r.all_hold() {
            failing.push(n);
        }
        identities.push(
            [r.restriction, r.induction, r.stochastic, r.detailed_balance, r.up_invariance, r.plancherel_total]
                .iter()
                .map(bool::to_string)
                .fold(vec![n.to_string()], |mut v, s| {
                    v.push(s);
                    v
                }),
        );
    }
    report.table(edges);
    report.table(identities);
    report.check("level-identities", failing.is_empty(), format!("levels 2..={levels}, failing {failing:?}"));
    Ok(report)
}

fn plancherel(n: u32) -> Outcome {
    let mut report = Report::default();
    let mut t = Table::new(&["label", "dim", "weight", "weight_decimal"]);
    let mut total = Rational::zero();
    for (label, w) in plancherel_spin(n) {
        total += &w;
        t.push(vec![label.to_string(), dim_spin(&label).to_string(), fmt_rational(&w), fmt_f64(to_f64(&w))]);
    }
    report.table(t);
    report.check("normalization", total.is_one(), format!("total weight {}", fmt_rational(&total)));
    Ok(report)
}

fn chartable(a: &ChartableArgs) -> Outcome {
    let table = character_table(a.n)?;
    let mut report = Report::default();
    let mut columns = vec!["label".to_string(), "spin".into(), "dim".into()];
    columns.extend(table.classes.iter().map(|c| c.label()));
    let mut chars = Table { name: None, columns, rows: Vec::new() };
    for row in &table.rows {
        let mut cells = vec![
            row.label.as_ref().map_or("ordinary".into(), NazarovLabel::to_string),
            row.spin.to_string(),
            format!("{:.0}", row.dim),
        ];
        cells.extend(row.values.iter().map(|v| fmt_complex(*v)));
        chars.push(cells);
    }
    report.table(chars);
    let mut classes = Table::new(&["class", "cycle_type", "split", "size"]).named("classes");
    for c in &table.classes {
        let ct: Vec<String> = c.cycle_type.iter().map(u32::to_string).collect();
        classes.push(vec![c.label(), ct.join(" "), c.is_split().to_string(), c.size().to_string()]);
    }
    report.table(classes);

    let order: f64 = table.classes.iter().map(|c| c.size() as f64).sum();
    let dims: f64 = table.rows.iter().map(|r| r.dim * r.dim).sum();
    report.check("dimension-squares", (dims - order).abs() < 1e-6, format!("sum dim^2 = {dims:.0}, group order {order:.0}"));
    let mut worst = 0.0f64;
    for (i, r) in table.rows.iter().enumerate() {
        for (j, s) in table.rows.iter().enumerate() {
            let inner: num_complex::Complex64 =
                table.classes.iter().zip(r.values.iter().zip(&s.values)).map(|(c, (x, y))| x * y.conj() * c.size() as f64).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner / order - target).norm());
        }
    }
    report.check("orthogonality", worst < 1e-9, format!("max deviation {worst:.3e}"));
    let mut leak = 0.0f64;
    for row in table.spin_rows() {
        for (c, v) in table.classes.iter().zip(&row.values) {
            if !c.is_split() {
                leak = leak.max(v.norm());
            }
        }
    }
    report.check("spin-vanishing", leak < 1e-9, format!("max |chi| of spin rows on non-split classes {leak:.3e}"));
    if let Some(k) = a.ensemble_k {
        let value = uniform_ensemble_sum(a.n, k)?;
        report.note(format!("uniform ensemble sum (n = {}, k = {k}) = {}", a.n, fmt_f64(value)));
    }
    Ok(report)
}

fn verify_jm(a: &VerifyJmArgs) -> Outcome {
    let rows = verify_trace_formula(a.n, a.k)?;
    let mut report = Report::default();
    let mut t = Table::new(&["label", "lhs", "rhs", "rhs_decimal", "deviation"]);
    for r in &rows {
        t.push(vec![r.label.to_string(), fmt_complex(r.lhs), fmt_rational(&r.rhs), fmt_f64(to_f64(&r.rhs)), format!("{:.3e}", r.deviation)]);
    }
    report.table(t);
    let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    report.check(
        "trace-formula",
        worst <= a.tol,
        format!("n = {}, k = {}, {} labels, max deviation {worst:.3e}", a.n, a.k, rows.len()),
    );
    let m = a.n + 1;
    if m >= 3 {
        report.check("jm-square", jm_square_identity(m)?, format!("square of the Jucys-Murphy element in class sums, n = {m}"));
    }
    Ok(report)
}

fn afactor(a: &AfactorArgs) -> Outcome {
    let psi = pausing(&a.pausing)?;
    let mut report = Report::default();
    if !psi.meets_integrability() {
        report.note("pausing law fails the integrability hypothesis; convergence is not guaranteed");
    }
    let mut t = Table::new(&["k", "value", "limit", "deviation", "engine", "tail_mass", "grid_step"]);
    for &k in &a.k {
        let r = a_factor(k, a.t, a.n, &psi, a.j_max)?;
        let engine = serde_json::to_value(r.engine).expect("engine serializes");
        t.push(vec![
            k.to_string(),
            fmt_f64(r.value),
            fmt_f64(r.limit),
            format!("{:.3e}", r.deviation),
            engine.as_str().unwrap_or_default().to_string(),
            format!("{:.3e}", r.tail_mass),
            r.grid_step.map_or(String::new(), fmt_f64),
        ]);
        if let Some(w) = &r.warning {
            report.note(format!("k = {k}: {w}"));
        }
        let exact = r.engine == AFactorEngine::ClosedForm;
        let detail = format!("k = {k}, n = {}, value {}, deviation {:.3e}", a.n, fmt_f64(r.value), r.deviation);
        report.check(&format!("a-factor-k{k}"), if exact { r.value == r.limit } else { r.deviation <= a.tol }, detail);
    }
    report.table(t);
    Ok(report)
}

fn run_simulation(a: &SimulateArgs, seed: u64) -> Outcome {
    let cfg = SimulationConfig {
        n: a.n,
        t: a.t,
        pausing: pausing(&a.pausing)?,
        initial: a.initial.parse()?,
        replicas: a.replicas,
        seed,
    };
    let start = Instant::now();
    let records = simulate(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = Report::default();
    let mut t = Table::new(&["replica", "lambda", "gamma", "jumps", "m2", "m4", "m6"]);
    for r in &records {
        t.push(vec![
            r.replica.to_string(),
            r.label.lambda.to_string(),
            r.label.gamma.sign().to_string(),
            r.jumps.to_string(),
            fmt_f64(r.moments[0]),
            fmt_f64(r.moments[1]),
            fmt_f64(r.moments[2]),
        ]);
    }
    report.table(t);
    let r0 = matches!(cfg.initial, InitialSampler::Plancherel).then(|| CumulantVector::semicircle(int(1), 6));
    let rows = concentration_report(&records, r0.as_ref(), cfg.t, cfg.pausing.mean())?;
    for row in &rows {
        if let Some(p) = row.predicted {
            let tol = if row.order == 2 { 0.05 } else if row.order == 4 { 0.10 } else { continue };
            let rel = (row.mean - p).abs() / p.abs();
            report.check(
                &format!("moment-{}", row.order),
                rel <= tol,
                format!("mean {} vs {} (relative {rel:.3e}, tolerance {tol})", fmt_f64(row.mean), fmt_f64(p)),
            );
        }
    }
    report.note(format!("{} replicas in {elapsed:.2} s", records.len()));
    report.summary = Some(json!({ "config": cfg, "concentration": rows }));
    Ok(report)
}

fn evolve(a: &EvolveArgs) -> Outcome {
    let mut values = parse_rationals(&a.cumulants)?;
    if a.order == 0 {
        return Err(CliError::Config("order must be positive".into()));
    }
    values.resize(a.order, Rational::zero());
    let r0 = CumulantVector::new(values);
    let evolved = evolve_formal(&r0)?;
    let moments = predicted_moments_formal(&r0)?;
    let q = (-a.t / a.m).exp();
    let mut report = Report::default();
    let mut t = Table::new(&["k", "cumulant", "moment", "cumulant_at_t", "moment_at_t"]);
    for k in 1..=a.order {
        let r = evolved.get(k);
        t.push(vec![k.to_string(), r.to_string(), moments[k].to_string(), fmt_f64(r.eval_f64(q)), fmt_f64(moments[k].eval_f64(q))]);
    }
    report.table(t);
    let one_minus_q = Poly::one() - Poly::q();
    let split = free_convolve(&free_compress(&r0.lift(), &Poly::q())?, &CumulantVector::semicircle(one_minus_q, a.order));
    let agree = (1..=a.order).all(|k| evolved.get(k) == split.get(k));
    report.check("compress-plus-semicircle", agree, format!("order {}, q symbolic", a.order));
    report.summary = Some(json!({ "initial": r0.to_json("rational"), "evolved": evolved.to_json("symbolic") }));
    Ok(report)
}

fn random_even_cumulants(rng: &mut ChaCha8Rng, order: usize) -> CumulantVector<Rational> {
    CumulantVector::new(
        (1..=order)
            .map(|k| match k {
                2 => int(1),
                k if k % 2 == 0 => rat(rng.gen_range(-4..=4), rng.gen_range(1..=5)),
                _ => Rational::zero(),
            })
            .collect(),
    )
}

fn pde_check(a: &PdeCheckArgs, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = a.order.max(2);
    let mut cases = vec![("semicircle".to_string(), CumulantVector::semicircle(int(1), order))];
    for i in 0..a.random {
        cases.push((format!("random-{}", i + 1), random_even_cumulants(&mut rng, order)));
    }
    let mut report = Report::default();
    let mut t = Table::new(&["case", "initial_cumulants", "power", "coefficient"]);
    let mut failing = Vec::new();
    for (name, r0) in &cases {
        let residual = pde_residual(r0, order)?;
        let init: Vec<String> = r0.values().iter().map(fmt_rational).collect();
        for (j, c) in residual.coefficients.iter().enumerate() {
            t.push(vec![name.clone(), init.join(" "), j.to_string(), c.to_string()]);
        }
        if !residual.vanishes() {
            failing.push(format!("{name} at z^-{}", residual.first_nonzero().unwrap_or_default()));
        }
    }
    report.table(t);
    report.check(
        "evolution-equation",
        failing.is_empty(),
        format!("{} cases through z^-{order}, nonzero: {failing:?}", cases.len()),
    );
    let stationary_order = 12;
    let moments = cumulants_to_moments(&CumulantVector::semicircle(int(1), stationary_order + 2));
    let residual = stationary_residual(&moments, stationary_order);
    report.check(
        "stationary-equation",
        residual.iter().all(Zero::is_zero),
        format!("semicircle through z^-{stationary_order}"),
    );
    Ok(report)
}

fn vershik_cmd(a: &VershikArgs) -> Outcome {
    let mut report = Report::default();
    let tau: Vec<Rational> = (1..=a.kmax).map(tau_v_moment).collect();
    let pipeline = rayleigh_to_cumulants(&tau);
    let mut t = Table::new(&["k", "moment", "moment_decimal", "moment_numeric", "lower", "upper", "cumulant", "cumulant_pipeline"]);
    let mut bounds_ok = true;
    let mut paths_ok = true;
    for k in 1..=a.kmax {
        let exact = tau_v_moment(k);
        let (lo, hi) = tau_v_moment_bounds(k);
        let x = to_f64(&exact);
        bounds_ok &= lo <= x && x <= hi;
        let closed = vershik_cumulant(k);
        let piped = &pipeline[k as usize - 1];
        paths_ok &= &closed == piped;
        t.push(vec![
            k.to_string(),
            fmt_rational(&exact),
            fmt_f64(x),
            fmt_f64(tau_v_moment_numeric(k)),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_rational(&closed),
            fmt_rational(piped),
        ]);
    }
    report.table(t);
    let grid = uniform_grid(-4.0, 4.0, a.points.max(2));
    let mut curve = Table::new(&["x", "vershik", "vkls"]).named("curve");
    for &x in &grid {
        curve.push(vec![fmt_f64(x), fmt_f64(vershik(x)), fmt_f64(vkls(x))]);
    }
    report.table(curve);
    report.note(format!("growth constant max |R_2k|^(1/2k) / 2k for k <= {}: {}", a.kmax, fmt_f64(vershik_growth_constant(a.kmax))));
    let profile = CurveFn::vershik(&grid);
    report.check(
        "curve-admissible",
        profile.lipschitz_excess() <= 1e-12 && profile.below_abs_excess() <= 1e-12,
        format!("slope excess {:.3e}, max of |x| - omega {:.3e}", profile.lipschitz_excess(), profile.below_abs_excess()),
    );
    let mut quad_worst = 0.0f64;
    for k in 1..=a.kmax.min(2) {
        quad_worst = quad_worst.max((tau_v_moment_numeric(k) - to_f64(&tau_v_moment(k))).abs());
    }
    report.check("low-moments", tau_v_moment(1) == int(2) && tau_v_moment(2) == rat(84, 5), "M_2 = 2, M_4 = 84/5");
    report.check("quadrature", quad_worst <= 1e-9, format!("max deviation {quad_worst:.3e} for k <= {}", a.kmax.min(2)));
    report.check("cumulant-paths", paths_ok, format!("closed form = moment pipeline for k <= {}", a.kmax));
    report.check("moment-bounds", bounds_ok, format!("k <= {}", a.kmax));
    Ok(report)
}

fn parse_driving(s: &str) -> Result<DrivingMeasure, CliError> {
    let bad = || CliError::Config(format!("driving measure must be uniform:r or pair:c, got '{s}'"));
    let (kind, value) = s.split_once(':').ok_or_else(bad)?;
    let value = parse_rational(value).filter(|v| *v > Rational::zero()).ok_or_else(bad)?;
    match kind {
        "uniform" => Ok(DrivingMeasure::Uniform(value)),
        "pair" => Ok(DrivingMeasure::Finite(FiniteMeasure::symmetric_pair(value))),
        _ => Err(bad()),
    }
}

fn thoma(a: &ThomaArgs) -> Outcome {
    let mut report = Report::default();
    let alpha = match (&a.alpha, &a.geometric) {
        (Some(s), _) => Some(ThomaAlpha::finite(parse_rationals(s)?)?),
        (None, Some(q)) => Some(ThomaAlpha::geometric(parse_rational(q).ok_or_else(|| CliError::Config(format!("bad q '{q}'")))?)?),
        (None, None) => None,
    };
    if let Some(alpha) = alpha {
        let mut t = Table::new(&["k", "moment", "f_odd_cycle"]).named("parameters");
        for k in 1..=a.kmax {
            t.push(vec![(2 * k).to_string(), fmt_rational(&thoma_moments(&alpha, k)), fmt_rational(&f_alpha(&alpha, 2 * k + 1)?)]);
        }
        report.table(t);
    }
    let nu = parse_driving(&a.nu)?;
    let evolved = r_transform_evolved(&nu, a.order);
    let via_cumulants = r_transform_from_cumulants(&evolved_driving_cumulants(&nu, a.order + 1)?, a.order);
    let closed = match &nu {
        DrivingMeasure::Uniform(r) => Some(r_transform_uniform_closed(r, a.order)),
        DrivingMeasure::Finite(_) => None,
    };
    let mut t = Table::new(&["power", "r_transform", "from_cumulants", "closed_form"]);
    for k in 0..=a.order {
        t.push(vec![
            k.to_string(),
            evolved[k].to_string(),
            via_cumulants[k].to_string(),
            closed.as_ref().map_or(String::new(), |c| c[k].to_string()),
        ]);
    }
    report.table(t);
    report.check("r-transform-evolution", series_agree(&evolved, &via_cumulants, a.order), format!("through zeta^{}", a.order));
    if let Some(c) = &closed {
        report.check("uniform-closed-form", series_agree(&evolved, c, a.order), format!("through zeta^{}", a.order));
    }
    Ok(report)
}

fn density(a: &DensityArgs) -> Outcome {
    let edge = uniform_case_edge();
    let mut report = Report::default();
    let mut t = Table::new(&["x", "density"]);
    for x in uniform_grid(-edge - 0.25, edge + 0.25, a.points.max(2)) {
        t.push(vec![fmt_f64(x), fmt_f64(density_uniform_case(x))]);
    }
    report.table(t);
    let r = density_uniform_report();
    report.check("mass", (r.mass - 1.0).abs() <= 1e-6, format!("{} (by layers {})", fmt_f64(r.mass), fmt_f64(r.mass_by_layers)));
    report.check(
        "second-moment",
        (r.second_moment - r.second_moment_exact).abs() <= 1e-6,
        format!("{} vs {}", fmt_f64(r.second_moment), fmt_f64(r.second_moment_exact)),
    );
    report.summary = Some(serde_json::to_value(&r).expect("report serializes"));
    Ok(report)
}

fn shape(a: &ShapeArgs) -> Outcome {
    let order = a.order.max(2);
    let (cumulants, reference): (Vec<Rational>, Option<fn(f64) -> f64>) = match a.source.as_str() {
        "semicircle" => ((1..=order).map(|k| if k == 2 { int(1) } else { Rational::zero() }).collect(), Some(vkls)),
        "vershik" => {
            ((1..=order as u32).map(|k| if k % 2 == 0 { vershik_cumulant(k / 2) } else { Rational::zero() }).collect(), Some(vershik))
        }
        other => {
            let body = other
                .strip_prefix("cumulants:")
                .ok_or_else(|| CliError::Config(format!("unknown shape source '{other}'")))?;
            let mut v = parse_rationals(body)?;
            v.resize(order, Rational::zero());
            (v, None)
        }
    };
    let moments: Vec<f64> = cumulants_to_moments(&CumulantVector::new(cumulants)).iter().map(to_f64).collect();
    let grid = uniform_grid(-5.0, 5.0, a.points.max(2));
    let shape = shape_from_moments(&moments, &grid)?;
    let mut report = Report::default();
    let mut t = Table::new(&["x", "omega", "reference"]);
    for (x, v) in shape.curve.grid.iter().zip(&shape.curve.values) {
        t.push(vec![fmt_f64(*x), fmt_f64(*v), reference.map_or(String::new(), |f| fmt_f64(f(*x)))]);
    }
    report.table(t);
    if let Some(f) = reference {
        report.note(format!("diagnostic sup distance to reference on [-3, 3]: {:.3e}", shape.curve.sup_distance_on(-3.0, 3.0, f)));
    }
    report.note(format!("continued fraction depth {}, condition {:.3e}", shape.depth, shape.condition));
    let excess = shape.curve.lipschitz_excess();
    report.check("lipschitz", excess <= 1e-9, format!("max slope excess {excess:.3e}"));
    let below = shape.curve.below_abs_excess();
    report.check("above-abs", below <= 1e-9, format!("max of |x| - omega {below:.3e}"));
    Ok(report)
}
