//! Aggregation of result files into plot-ready CSV tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::exec::Outcome;

pub const SUMMARY_CSV: &str = "summary.csv";
pub const VK_ROOTS_CSV: &str = "vk_roots.csv";
pub const BIFURCATION_CSV: &str = "bifurcation.csv";

fn is_vk(v: &Value) -> bool {
    v.get("command").is_none() && v.get("k").is_some() && v.get("mean").is_some() && v.get("method").is_some()
}

fn command(v: &Value) -> Option<&str> {
    if is_vk(v) {
        Some("vk-estimate")
    } else {
        v.get("command")?.as_str()
    }
}

fn num(v: &Value, key: &str) -> String {
    match v.get(key) {
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Bool(b)) => b.to_string(),
        _ => String::new(),
    }
}

fn f(v: &Value, key: &str) -> Option<f64> {
    v.get(key)?.as_f64()
}

struct Row {
    file: String,
    command: String,
    k: String,
    lambda: String,
    alpha: String,
    value: String,
    std_error: String,
    exact: String,
}

fn summary_row(file: &str, cmd: &str, v: &Value) -> Row {
    let mut row = Row {
        file: file.to_string(),
        command: cmd.to_string(),
        k: String::new(),
        lambda: num(v, "lambda"),
        alpha: num(v, "alpha"),
        value: String::new(),
        std_error: String::new(),
        exact: num(v, "exact"),
    };
    match cmd {
        "vk-estimate" => {
            row.k = num(v, "k");
            row.value = num(v, "mean");
            row.std_error = num(v, "std_error");
        }
        "delta-bound" => {
            row.k = num(v, "k_used");
            row.value = num(v, "value");
        }
        "threshold" => {
            row.value = num(v, "threshold");
            row.std_error = num(v, "threshold_std_error");
        }
        "fixed-point" => row.value = num(v, "z_star"),
        "contraction" => {
            let worst = v["checks"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|c| Some(f(c, "lhs")? / f(c, "rhs")?))
                .fold(0.0, f64::max);
            row.value = worst.to_string();
        }
        "sample-gibbs" => {
            row.value = num(v, "log_z");
            row.std_error = num(v, "log_z_std_error");
        }
        "verify" => {
            row.lambda = num(&v["scenario"], "lambda");
            row.value = num(v, "pass");
        }
        _ => {}
    }
    row
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn result_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|_| CliError::NoResults(dir.to_path_buf()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().is_some_and(|e| e == "json")
                && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".manifest.json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Reads every result JSON in `dir` and builds `summary.csv`,
/// `vk_roots.csv` and `bifurcation.csv`.
pub fn aggregate(dir: &Path) -> CliResult<Outcome> {
    let mut rows = Vec::new();
    // (k, root / C_phi, se, n_samples, method)
    let mut roots: Vec<(u64, f64, f64, u64, String)> = Vec::new();
    // (alpha, branch, z, y = z C_phi, classification)
    let mut branches: Vec<(f64, &'static str, f64, f64, String)> = Vec::new();
    let mut skipped = Vec::new();

    for path in result_files(dir)? {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let parsed = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<Value>(&t).ok());
        let Some(value) = parsed else {
            skipped.push(name);
            continue;
        };
        let items = match value {
            Value::Array(a) => a,
            v => vec![v],
        };
        let mut used = false;
        for item in &items {
            let Some(cmd) = command(item) else { continue };
            used = true;
            rows.push(summary_row(&name, cmd, item));
            match cmd {
                "vk-estimate" => {
                    let (Some(k), Some(root), Some(c)) =
                        (item["k"].as_u64(), f(item, "delta_root"), f(item, "c_phi"))
                    else {
                        continue;
                    };
                    let se = f(item, "delta_root_std_error").unwrap_or(0.0) / c;
                    let n = item["n_samples"].as_u64().unwrap_or(0);
                    let method = item["method"].as_str().unwrap_or_default().to_string();
                    match roots.iter_mut().find(|r| r.0 == k) {
                        Some(r) if n > r.3 => *r = (k, root / c, se, n, method),
                        Some(_) => {}
                        None => roots.push((k, root / c, se, n, method)),
                    }
                }
                "fixed-point" => {
                    let (Some(alpha), Some(z), Some(c)) = (f(item, "alpha"), f(item, "z_star"), f(item, "c_phi")) else {
                        continue;
                    };
                    let class = item["classification"].as_str().unwrap_or_default().to_string();
                    branches.push((alpha, "fixed", z, z * c, class.clone()));
                    if let Some([z1, z2]) = item["cycle"].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<_>>()).as_deref() {
                        branches.push((alpha, "cycle_low", *z1, z1 * c, class.clone()));
                        branches.push((alpha, "cycle_high", *z2, z2 * c, class));
                    }
                }
                _ => {}
            }
        }
        if !used {
            skipped.push(name);
        }
    }
    if rows.is_empty() {
        return Err(CliError::NoResults(dir.to_path_buf()));
    }

    let mut summary = String::from("file,command,k,lambda,alpha,value,std_error,exact\n");
    for r in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.file),
            r.command,
            r.k,
            r.lambda,
            r.alpha,
            r.value,
            r.std_error,
            r.exact
        );
    }
    roots.sort_by_key(|r| r.0);
    let mut vk = String::from("k,root_over_c_phi,std_error,n_samples,method\n");
    for (k, root, se, n, method) in &roots {
        let _ = writeln!(vk, "{k},{root},{se},{n},{method}");
    }
    branches.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    let mut bif = String::from("alpha,branch,z,y,classification\n");
    for (alpha, branch, z, y, class) in &branches {
        let _ = writeln!(bif, "{alpha},{branch},{z},{y},{class}");
    }

    let mut text = format!("{} runs aggregated", rows.len());
    if !skipped.is_empty() {
        let _ = write!(text, ", {} files skipped ({})", skipped.len(), skipped.join(", "));
    }
    text.push('\n');
    let mut table = format!("{:>4}  {:>16}  {:>12}\n", "k", "root/C_phi", "std_error");
    for (k, root, se, ..) in &roots {
        let _ = writeln!(table, "{k:>4}  {root:>16.10}  {se:>12.3e}");
    }
    if !roots.is_empty() {
        text.push_str(&table);
    }
    Ok(Outcome {
        result: json!({
            "command": "report",
            "dir": dir,
            "runs": rows.len(),
            "vk_rows": roots.len(),
            "bifurcation_rows": branches.len(),
            "skipped": skipped,
            "exact": true,
        }),
        text,
        files: vec![
            (SUMMARY_CSV.into(), summary),
            (VK_ROOTS_CSV.into(), vk),
            (BIFURCATION_CSV.into(), bif),
        ],
        ..Outcome::default()
    })
}
