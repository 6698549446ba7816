//! JSON and flat CSV emission of experiment reports.

use std::path::{Path, PathBuf};

use super::experiment::MetricsReport;
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report into `dir`; file names carry the config hash, and
/// per-seed raw tables also the seed. Returns the paths written.
pub fn write_report(dir: &Path, report: &MetricsReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let h = &report.config_hash;
    let mut out = Vec::new();

    let json = dir.join(format!("report-{h}.json"));
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    out.push(json);

    let table = dir.join(format!("table-{h}.csv"));
    let rows = report
        .summary
        .iter()
        .map(|c| {
            vec![
                c.density.to_string(),
                c.method.to_string(),
                c.n_runs.to_string(),
                c.failures.to_string(),
                opt(c.rmse_mean),
                opt(c.rmse_std),
                opt(c.mae_mean),
                opt(c.mae_std),
            ]
        })
        .collect();
    write_csv(&table, &["density", "method", "n_runs", "failures", "rmse_mean", "rmse_std", "mae_mean", "mae_std"], rows)?;
    out.push(table);

    for &seed in &report.config.seeds {
        let raw = dir.join(format!("raw-{h}-seed{seed}.csv"));
        let rows = report
            .cells
            .iter()
            .filter(|c| c.seed == seed)
            .map(|c| {
                vec![
                    c.density.to_string(),
                    c.method.to_string(),
                    c.n_train.to_string(),
                    c.n_test.to_string(),
                    opt(c.rmse),
                    opt(c.mae),
                    c.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(&raw, &["density", "method", "n_train", "n_test", "rmse", "mae", "error"], rows)?;
        out.push(raw);
    }

    if !report.long_tail.is_empty() {
        let p = dir.join(format!("longtail-{h}.csv"));
        let rows = report
            .long_tail
            .iter()
            .map(|r| vec![r.density.to_string(), r.bucket.clone(), r.method.to_string(), r.n_runs.to_string(), r.rmse_mean.to_string()])
            .collect();
        write_csv(&p, &["density", "bucket", "method", "n_runs", "rmse_mean"], rows)?;
        out.push(p);
    }

    let alpha_rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .flat_map(|c| {
            c.alphas.iter().enumerate().map(move |(t, a)| {
                let prefix = c.prefix_rmse.get(t).copied().flatten();
                vec![c.density.to_string(), c.seed.to_string(), c.method.to_string(), (t + 1).to_string(), a.to_string(), opt(prefix)]
            })
        })
        .collect();
    if !alpha_rows.is_empty() {
        let p = dir.join(format!("rounds-{h}.csv"));
        write_csv(&p, &["density", "seed", "method", "round", "alpha", "prefix_rmse"], alpha_rows)?;
        out.push(p);
    }

    if let Some(sw) = &report.sweep {
        let p = dir.join(format!("sweep-{h}.csv"));
        let param = serde_json::to_value(sw.param)?.as_str().unwrap_or_default().to_string();
        let rows = sw
            .rows
            .iter()
            .map(|r| {
                vec![
                    param.clone(),
                    r.value.to_string(),
                    r.density.to_string(),
                    r.method.to_string(),
                    r.n_runs.to_string(),
                    opt(r.rmse_mean),
                    opt(r.rmse_std),
                ]
            })
            .collect();
        write_csv(&p, &["param", "value", "density", "method", "n_runs", "rmse_mean", "rmse_std"], rows)?;
        out.push(p);
        if !sw.alpha_traces.is_empty() {
            let p = dir.join(format!("sweep-alpha-{h}.csv"));
            let rows = sw
                .alpha_traces
                .iter()
                .flat_map(|a| {
                    a.alphas.iter().enumerate().map(move |(t, x)| {
                        vec![a.density.to_string(), a.seed.to_string(), a.method.to_string(), (t + 1).to_string(), x.to_string()]
                    })
                })
                .collect();
            write_csv(&p, &["density", "seed", "method", "round", "alpha"], rows)?;
            out.push(p);
        }
    }
    Ok(out)
}
