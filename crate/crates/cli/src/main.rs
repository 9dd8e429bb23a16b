mod args;
mod format;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use shiftshap::experiments::{
    convergence_study, fivevar_environment, fivevar_run, gaussian_datasets, gaussian_sweep,
    ConvergenceConfig,
};
use shiftshap::oracle::{
    discrete_attributions, discrete_values, gaussian_attr, gaussian_graph, gaussian_kl_baseline,
    gaussian_perf, DiscreteScm, Env, FiveVarShift,
};
use shiftshap::shapley::{attribute_files, load_graph};
use shiftshap::{Coalition, Error, MetricKind, Result, ValueFunction};

use args::{
    AttributeArgs, Cli, Command, ConvergenceArgs, OracleArgs, ScenarioArg, SettingArg,
    SyntheticArgs,
};
use format::{report_table, sig6, table};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Attribute(a) => cmd_attribute(&a),
        Command::Synthetic(a) => cmd_synthetic(&a),
        Command::Convergence(a) => cmd_convergence(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn write_document(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn to_pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("document serializes")
}

fn cmd_attribute(a: &AttributeArgs) -> Result<()> {
    let mut graph = load_graph(&a.graph)?;
    if a.reverse_graph {
        graph = graph.reversed();
    }
    let settings = a.game.settings(&a.estimator, a.split_fraction);
    let report = attribute_files(&a.source, &a.target, &graph, &a.metric(), &settings)?;
    print!("{}", report_table(&report));
    write_document(a.out.as_deref(), &report.to_json())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn emit_files(
    dir: &Path,
    source: &shiftshap::TabularDataset,
    target: &shiftshap::TabularDataset,
    graph: &shiftshap::CausalGraph,
) -> Result<()> {
    create_dir(dir)?;
    source.write_csv(&dir.join("source.csv"))?;
    target.write_csv(&dir.join("target.csv"))?;
    write_document(Some(&dir.join("graph.json")), &graph.to_json())
}

fn cmd_synthetic(a: &SyntheticArgs) -> Result<()> {
    let settings = a.game.settings(&a.estimator, a.split_fraction);
    match a.scenario {
        ScenarioArg::Gaussian => {
            let n = a.n.unwrap_or(10_000);
            let base = a.gaussian.scenario(a.gaussian.mu2[0], a.gaussian.theta2[0]);
            base.validate()?;
            if let Some(dir) = &a.emit_dir {
                for &mu2 in &a.gaussian.mu2 {
                    for &theta2 in &a.gaussian.theta2 {
                        let s = base.with_target(mu2, theta2);
                        let (source, target) = gaussian_datasets(&s, n, settings.seed)?;
                        let sub = dir.join(format!("mu2_{mu2}_theta2_{theta2}"));
                        emit_files(&sub, &source, &target, &gaussian_graph(a.reverse_graph))?;
                    }
                }
            }
            let rows = gaussian_sweep(
                &base,
                &a.gaussian.mu2,
                &a.gaussian.theta2,
                n,
                a.reverse_graph,
                &settings,
            )?;
            let names = rows[0].mechanisms.clone();
            let emp = |i: usize| format!("emp {}", names[i]);
            let header = [
                "mu2".to_string(),
                "theta2".into(),
                emp(0),
                "exact X".into(),
                emp(1),
                "exact Y|X".into(),
                "KL X".into(),
                "KL Y|X".into(),
            ];
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        sig6(r.mu2),
                        sig6(r.theta2),
                        sig6(r.empirical[0]),
                        sig6(r.exact_x),
                        sig6(r.empirical[1]),
                        sig6(r.exact_y_given_x),
                        sig6(r.kl_x),
                        sig6(r.kl_y_given_x),
                    ]
                })
                .collect();
            let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            print!("{}", table(&header, &cells));
            let doc = json!({ "scenario": "gaussian", "n": n, "settings": settings, "rows": rows });
            write_document(a.out.as_deref(), &to_pretty(&doc))
        }
        ScenarioArg::Fivevar => {
            let n = a.n.unwrap_or(20_000);
            let shift = match (a.setting, a.value) {
                (SettingArg::A, v) => FiveVarShift::Label(v.unwrap_or(0.5)),
                (SettingArg::B, v) => FiveVarShift::Group(v.unwrap_or(0.0)),
                (SettingArg::C, v) => FiveVarShift::LabelAndX1(v.unwrap_or(0.5)),
                (SettingArg::D, v) => FiveVarShift::LabelAndX3(v.unwrap_or(0.5)),
            };
            let metric: MetricKind = a.metric.into();
            if let Some(dir) = &a.emit_dir {
                let env = fivevar_environment(shift, n, settings.seed, metric)?;
                let graph = if a.reverse_graph { env.graph.reversed() } else { env.graph };
                emit_files(dir, &env.source, &env.target, &graph)?;
            }
            let run = fivevar_run(shift, n, metric, a.reverse_graph, &settings)?;
            print!("{}", report_table(&run.report));
            let truth: Vec<&str> = shift.shifted_nodes().to_vec();
            println!(
                "\nsetting ({}): top mechanism {}, shifted node(s) {}{}",
                shift.letter(),
                run.report.mechanisms[run.top],
                truth.join(", "),
                if run.hit { "" } else { " (missed)" }
            );
            let doc = json!({ "scenario": "fivevar", "shift": shift, "n": n, "run": run });
            write_document(a.out.as_deref(), &to_pretty(&doc))
        }
    }
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<()> {
    let config = ConvergenceConfig {
        estimator: a.estimator.config(),
        split_fraction: a.split_fraction,
        ..ConvergenceConfig::default()
    };
    let cells = convergence_study(&a.ns, a.reps, a.seed, &config)?;
    let pm = |s: &shiftshap::experiments::Summary| format!("{} ± {}", sig6(s.mean), sig6(s.std));
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.n.to_string(),
                pm(&c.mse_w_x),
                pm(&c.mse_w_y_given_x),
                pm(&c.mse_attr_x),
                pm(&c.mse_attr_y_given_x),
            ]
        })
        .collect();
    print!(
        "{}",
        table(&["n", "MSE(w_X)", "MSE(w_Y|X)", "MSE(Attr_X)", "MSE(Attr_Y|X)"], &rows)
    );
    let doc = json!({ "reps": a.reps, "seed": a.seed, "config": config, "cells": cells });
    write_document(a.out.as_deref(), &to_pretty(&doc))
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    if let Some(path) = &a.scm {
        let scm = DiscreteScm::load(path)?;
        let table_game = discrete_values(&scm)?;
        let attr = discrete_attributions(&scm)?;
        let names: Vec<String> = scm.nodes.iter().map(|n| n.name.clone()).collect();
        let rows: Vec<Vec<String>> = (0..1u64 << names.len())
            .map(|b| {
                let c = Coalition::from_bits(b);
                let members: Vec<&str> = c.members().map(|i| names[i].as_str()).collect();
                vec![format!("{{{}}}", members.join(",")), sig6(table_game.value(c))]
            })
            .collect();
        print!("{}", table(&["coalition", "value"], &rows));
        println!();
        let rows: Vec<Vec<String>> = names
            .iter()
            .zip(&attr)
            .map(|(n, v)| vec![n.clone(), sig6(*v)])
            .collect();
        print!("{}", table(&["mechanism", "attribution"], &rows));
        let doc = json!({ "mechanisms": names, "values": table_game.values(), "attributions": attr });
        return write_document(a.out.as_deref(), &to_pretty(&doc));
    }
    let s = shiftshap::oracle::GaussianScenario {
        mu1: a.mu1,
        mu2: a.mu2,
        theta1: a.theta1,
        theta2: a.theta2,
        sigma_x2: a.sigma_x2,
        sigma_y2: a.sigma_y2,
        phi: a.phi,
    };
    s.validate()?;
    let ps = gaussian_perf(&s, Env::Source);
    let pt = gaussian_perf(&s, Env::Target);
    let (ax, ay) = gaussian_attr(&s);
    let (kx, ky) = gaussian_kl_baseline(&s);
    let lines = [
        ("Perf(source)", ps),
        ("Perf(target)", pt),
        ("Delta", pt - ps),
        ("Attr_X", ax),
        ("Attr_Y|X", ay),
        ("KL_X", kx),
        ("KL_Y|X", ky),
    ];
    let rows: Vec<Vec<String>> = lines.iter().map(|(k, v)| vec![k.to_string(), sig6(*v)]).collect();
    print!("{}", table(&["quantity", "value"], &rows));
    let doc = json!({
        "scenario": s,
        "perf_source": ps,
        "perf_target": pt,
        "delta": pt - ps,
        "attr_x": ax,
        "attr_y_given_x": ay,
        "kl_x": kx,
        "kl_y_given_x": ky,
    });
    write_document(a.out.as_deref(), &to_pretty(&doc))
}
