use oscswap_core::protocol::tabulate_protocol;
use oscswap_core::quantum::{verify_protocol, VerificationReport, VerifyConfig};
use oscswap_core::report::{curve_table, fmt_num, protocol_json, protocol_table, to_rounded_json, Table};
use oscswap_core::tuner::{lambda_min_vs_tf, perfect_lambda_from_scan, scan_b, smallest_perfect_lambda};
use oscswap_core::{Error, FockLabel, ProtocolSpec, TuneTarget, TunerConfig};
use serde_json::{json, Value};

use crate::args::{window, DesignArgs, PropagationArgs, TableArgs, TuneArgs, VerifyArgs};
use crate::output::Sink;
use crate::CliError;

fn config<T: serde::Serialize>(args: &T) -> Result<Value, CliError> {
    serde_json::to_value(args).map_err(|e| CliError::Io(e.to_string()))
}

fn finish(sink: &Sink) {
    for path in sink.written() {
        println!("wrote {}", path.display());
    }
}

pub fn design(args: &DesignArgs) -> Result<(), CliError> {
    let spec = ProtocolSpec::new(args.w1, args.w2, args.tf, args.lambda, args.gamma)?;
    let table = tabulate_protocol(&spec, args.samples).map_err(|e| e.at_lambda(args.lambda))?;
    let mut sink = Sink::new("design", config(args)?, &args.output)?;

    sink.csv("protocol", &protocol_table(&table))?;
    sink.json("protocol", protocol_json(&table))?;

    let theta_dot = table.theta_dot();
    let mut curves = Table::new(["t", "theta", "theta_dot", "M12", "omega1_sq", "omega2_sq"]);
    for (s, td) in table.samples.iter().zip(&theta_dot) {
        curves.push(vec![s.t, s.frame.theta, *td, s.m.a12, s.frame.omega1_sq, s.frame.omega2_sq]);
    }
    sink.table("curves", &curves)?;

    // semi-axes of the unit-energy equipotential V = 1/2; ω1 lies along (cos θ, sin θ)
    let mut ellipses = Table::new(["t", "theta", "omega1", "omega2", "semi_axis_1", "semi_axis_2"]);
    let n = args.snapshots;
    for i in 0..n {
        let t = if n == 1 { 0.0 } else { args.tf * i as f64 / (n - 1) as f64 };
        let nearest = ((t / args.tf) * (table.len() - 1) as f64).round() as usize;
        let hint = table.samples[nearest.min(table.len() - 1)].frame.theta;
        let f = spec.frame_at(t, hint).map_err(|e| e.at_lambda(args.lambda))?;
        let (o1, o2) = (f.omega1().unwrap_or(f64::NAN), f.omega2().unwrap_or(f64::NAN));
        ellipses.push(vec![t, f.theta, o1, o2, 1.0 / o1, 1.0 / o2]);
    }
    sink.table("ellipses", &ellipses)?;

    let last = table.samples.last().expect("at least two samples");
    println!(
        "theta(tf) = {}  min |omega1^2 - omega2^2| = {}",
        fmt_num(last.frame.theta),
        fmt_num(table.min_frequency_gap())
    );
    finish(&sink);
    Ok(())
}

pub fn tune(args: &TuneArgs) -> Result<(), CliError> {
    let cfg = TunerConfig {
        scan_steps: args.scan_steps,
        refine_steps: args.steps,
        window: window(&args.lambda_window),
        scan_step: args.scan_step,
        ..TunerConfig::default()
    };
    let target = TuneTarget {
        w1: args.w1,
        w2: args.w2,
        tf: args.tf,
        gamma: args.gamma,
    };
    target.spec(0.0)?;
    let mut sink = Sink::new("tune", config(args)?, &args.output)?;

    let curve = scan_b(&target, cfg.window, cfg.scan_step, &cfg)?;
    sink.table("tune_scan", &curve_table(&curve))?;
    let found = perfect_lambda_from_scan(&target, &curve, cfg.window, &cfg);
    let scan_info = json!({
        "candidates": curve.candidates,
        "gaps": to_rounded_json(&curve.gaps)?,
    });

    if !args.tf_values.is_empty() {
        let lmin = lambda_min_vs_tf(args.w1, args.w2, args.gamma, &args.tf_values, &cfg)?;
        sink.table("lambda_min", &curve_table(&lmin))?;
        for gap in &lmin.gaps {
            eprintln!("tf = {}: {}", gap.x, gap.reason);
        }
    }

    match found {
        Ok(p) => {
            sink.json_always(
                "tune",
                json!({
                    "status": "perfect",
                    "lambda_star": p.lambda_star,
                    "b_at_star": p.b_at_star,
                    "bracket": [p.bracket.0, p.bracket.1],
                    "scan": scan_info,
                }),
            )?;
            println!("lambda* = {}", fmt_num(p.lambda_star));
            println!("b(lambda*) = {}", fmt_num(p.b_at_star));
            finish(&sink);
            Ok(())
        }
        Err(
            e @ Error::NoPerfectTransfer {
                lambda_at_min, b_min, ..
            },
        ) => {
            sink.json_always(
                "tune",
                json!({
                    "status": "no_perfect_transfer",
                    "lambda_at_min": lambda_at_min,
                    "b_min": b_min,
                    "scan": scan_info,
                }),
            )?;
            finish(&sink);
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn verify_config(p: &PropagationArgs, tf: f64, transient: Option<usize>) -> Result<VerifyConfig, CliError> {
    Ok(VerifyConfig {
        grid_points: p.grid,
        split_steps: p.split_steps(tf).map_err(CliError::Usage)?,
        rk4_steps: p.rk4_steps,
        wigner_nodes: p.nodes,
        cutoff: p.cutoff,
        transient_intervals: transient,
        run_split: true,
        run_wigner: !p.no_wigner,
    })
}

fn report_label_errors(report: &VerificationReport) {
    for l in &report.labels {
        for e in &l.errors {
            eprintln!("label {}: {e}", l.label);
        }
    }
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

pub fn table(args: &TableArgs) -> Result<(), CliError> {
    let spec = ProtocolSpec::new(args.w1, args.w2, args.tf, args.lambda, args.gamma)?;
    let labels = if args.labels.is_empty() {
        FockLabel::table_labels()
    } else {
        args.labels.clone()
    };
    let cfg = verify_config(&args.propagation, args.tf, None)?;
    let mut sink = Sink::new("table", config(args)?, &args.output)?;
    let report = verify_protocol(&spec, &labels, &cfg).map_err(|e| e.at_lambda(args.lambda))?;

    let mut rows = Table::new([
        "n",
        "k",
        "E0",
        "delta_predicted",
        "delta_split",
        "delta_wigner",
        "split_minus_predicted",
        "wigner_minus_predicted",
        "split_minus_wigner",
    ]);
    for l in &report.labels {
        let split = opt(l.split.as_ref().map(|s| s.delta));
        let wig = opt(l.wigner.map(|w| w.delta));
        rows.push(vec![
            l.label.n as f64,
            l.label.k as f64,
            l.initial_energy,
            l.predicted_delta,
            split,
            wig,
            split - l.predicted_delta,
            wig - l.predicted_delta,
            split - wig,
        ]);
        println!(
            "{:>5}  E0 {:>8}  predicted {:>10}  split {:>10}  wigner {:>10}",
            format!("({})", l.label),
            fmt(l.initial_energy, 6),
            fmt(l.predicted_delta, 6),
            fmt(split, 6),
            fmt(wig, 6)
        );
    }
    sink.table("table", &rows)?;
    sink.json("table_report", to_rounded_json(&report)?)?;
    report_label_errors(&report);
    finish(&sink);
    if report.has_errors() {
        return Err(CliError::Quality(format!(
            "{} label(s) failed quality checks",
            report.labels.iter().filter(|l| !l.errors.is_empty()).count()
        )));
    }
    Ok(())
}

fn fmt(x: f64, decimals: usize) -> String {
    if x.is_finite() {
        format!("{x:.decimals$}")
    } else {
        "-".into()
    }
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let target = TuneTarget {
        w1: args.w1,
        w2: args.w2,
        tf: args.tf,
        gamma: args.gamma,
    };
    let (lambda, tuned) = match args.lambda {
        Some(l) => (l, None),
        None => {
            let cfg = TunerConfig {
                window: window(&args.lambda_window),
                ..TunerConfig::default()
            };
            let (p, _) = smallest_perfect_lambda(&target, cfg.window, &cfg)?;
            println!("tuned lambda* = {}", fmt_num(p.lambda_star));
            (p.lambda_star, Some(p))
        }
    };
    let spec = target.spec(lambda)?;
    let transient = (args.snapshots > 0).then_some(args.snapshots);
    let cfg = verify_config(&args.propagation, args.tf, transient)?;
    let mut sink = Sink::new("verify", config(args)?, &args.output)?;
    let report = verify_protocol(&spec, &args.states, &cfg).map_err(|e| e.at_lambda(lambda))?;

    let mut summary = Table::new([
        "n",
        "k",
        "fidelity",
        "E0",
        "E_predicted",
        "E_split",
        "E_wigner",
        "population_tv",
        "leakage",
        "phase_error",
    ]);
    for l in &report.labels {
        let s = l.split.as_ref();
        let fidelity = opt(s.map(|s| s.fidelity));
        summary.push(vec![
            l.label.n as f64,
            l.label.k as f64,
            fidelity,
            l.initial_energy,
            l.predicted_energy,
            opt(s.map(|s| s.energy)),
            opt(l.wigner.map(|w| w.energy)),
            opt(s.map(|s| s.population_tv)),
            opt(s.map(|s| s.leakage)),
            opt(l.phase_error()),
        ]);
        println!(
            "({}) -> |{},{}>_f  fidelity {}  energy {} (predicted {})",
            l.label,
            l.label.k,
            l.label.n,
            fmt(fidelity, 8),
            fmt(opt(s.map(|s| s.energy)), 6),
            fmt(l.predicted_energy, 6)
        );
    }
    sink.table("verify", &summary)?;

    if !report.transient.is_empty() {
        let mut columns = vec!["t".to_string()];
        for l in &args.states {
            columns.push(format!("E_{}_{}", l.n, l.k));
            columns.push(format!("level_{}_{}", l.n, l.k));
            columns.push(format!("level_{}_{}", l.k, l.n));
        }
        let mut curve = Table::new(columns);
        for p in &report.transient {
            let mut row = vec![p.t];
            for i in 0..args.states.len() {
                row.extend([p.energies[i], opt(p.levels[i]), opt(p.swapped_levels[i])]);
            }
            curve.push(row);
        }
        sink.table("transient", &curve)?;
    }

    let mut body = to_rounded_json(&report)?;
    if let (Some(p), Value::Object(m)) = (tuned, &mut body) {
        m.insert("tuned".into(), to_rounded_json(&p)?);
    }
    sink.json("verify_report", body)?;
    report_label_errors(&report);
    finish(&sink);
    if report.has_errors() {
        return Err(CliError::Quality("verification quality checks failed".into()));
    }
    Ok(())
}
