//! Output directory layout and flat CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};

use crate::experiment::{criterion_name, ExperimentReport, MeanSem};

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Table {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn ms(v: &MeanSem) -> [String; 2] {
    [num(v.mean), num(v.sem)]
}

fn set(v: &[usize], names: &[String]) -> String {
    let parts: Vec<&str> = v.iter().map(|&i| names.get(i).map(String::as_str).unwrap_or("?")).collect();
    parts.join(";")
}

/// Flat tables for every section present in the report.
pub fn report_tables(report: &ExperimentReport) -> Result<Vec<Table>> {
    let names = &report.variables;
    let mut tables = Vec::new();

    let mut runs = Table::new("runs", &["run", "seed", "status", "stage", "message"]);
    for r in &report.runs {
        let (status, stage, msg) = match &r.failure {
            None => ("ok", String::new(), String::new()),
            Some(f) => ("failed", f.stage.clone(), f.message.replace([',', '\n'], " ")),
        };
        runs.rows.push(vec![r.run.to_string(), r.seed.0.to_string(), status.into(), stage, msg]);
    }
    tables.push(runs);

    if report.experiment.is_sweep() {
        if report.sweep.is_empty() && report.completed > 0 {
            bail!("report for sweep experiment {} has no sweep section", report.experiment);
        }
        let mut t = Table::new(
            "sweep",
            &[
                "kind", "value", "sigma", "dist", "units", "mi_x1", "mi_x1_sem", "mi_x2", "mi_x2_sem", "cmi_x1_given_x2",
                "cmi_x1_given_x2_sem", "cmi_x2_given_x1", "cmi_x2_given_x1_sem", "mi_joint", "mi_joint_sem", "unq_x1",
                "unq_x1_sem", "unq_x2", "unq_x2_sem", "shd", "shd_sem", "syn", "syn_sem",
            ],
        );
        for s in &report.sweep {
            let mut row = vec![
                s.kind.clone(),
                num(s.value),
                num(s.sigma),
                s.dist.map(|d| format!("{d:?}").to_lowercase()).unwrap_or_default(),
                report.pid_units.as_str().into(),
            ];
            for m in [&s.mi_x1, &s.mi_x2, &s.cmi_x1_given_x2, &s.cmi_x2_given_x1, &s.mi_joint, &s.unq_x1, &s.unq_x2, &s.shd, &s.syn] {
                row.extend(ms(m));
            }
            t.rows.push(row);
        }
        tables.push(t);
        return Ok(tables);
    }

    let mut conf = Table::new(
        "confusion",
        &["criterion", "estimator", "tp", "tn", "fp", "fn", "runs", "modal_set", "modal_count", "set_size", "mae", "mae_sem"],
    );
    let mut freq = Table::new("frequency", &["criterion", "variable", "name", "count"]);
    let mut thr = Table::new("thresholds", &["criterion", "units", "step", "runs", "score", "score_sem", "threshold", "threshold_sem", "p_value"]);
    for c in &report.criteria {
        let k = c.confusion;
        conf.rows.push(vec![
            criterion_name(c.criterion).into(),
            format!("{:?}", c.estimator).to_lowercase(),
            opt(k.tp),
            opt(k.tn),
            opt(k.fp),
            opt(k.fn_),
            k.runs.to_string(),
            set(&c.modal_set, names),
            c.modal_count.to_string(),
            num(c.set_size.mean),
            opt(c.mae.map(|m| m.mean)),
            opt(c.mae.map(|m| m.sem)),
        ]);
        for v in &c.frequency {
            freq.rows.push(vec![criterion_name(c.criterion).into(), v.variable.to_string(), v.name.clone(), v.count.to_string()]);
        }
        for s in &c.steps {
            let mut row = vec![criterion_name(c.criterion).into(), c.units.as_str().into(), s.step.to_string(), s.runs.to_string()];
            row.extend(ms(&s.score));
            row.extend(ms(&s.threshold));
            row.push(num(s.p_value.mean));
            thr.rows.push(row);
        }
    }

    let mut sel = Table::new(
        "selections",
        &["run", "criterion", "rank", "variable", "name", "score", "p_value", "threshold", "pruned", "mae"],
    );
    for r in &report.runs {
        for s in &r.selections {
            for (rank, step) in s.result.steps.iter().filter(|st| st.significant).enumerate() {
                sel.rows.push(vec![
                    r.run.to_string(),
                    criterion_name(s.criterion).into(),
                    (rank + 1).to_string(),
                    step.winner.to_string(),
                    names.get(step.winner).cloned().unwrap_or_default(),
                    num(step.score),
                    num(step.p_value),
                    num(step.threshold),
                    s.result.pruned.contains(&step.winner).to_string(),
                    opt(s.mae),
                ]);
            }
        }
    }
    tables.extend([conf, freq, thr, sel]);

    if !report.pid.is_empty() {
        let mut t = Table::new(
            "pid",
            &["feature", "name", "units", "unq_feature", "unq_feature_sem", "unq_rest", "unq_rest_sem", "shd", "shd_sem", "syn", "syn_sem"],
        );
        for p in &report.pid {
            let mut row = vec![p.feature.to_string(), p.name.clone(), report.pid_units.as_str().into()];
            for m in [&p.unq_feature, &p.unq_rest, &p.shd, &p.syn] {
                row.extend(ms(m));
            }
            t.rows.push(row);
        }
        tables.push(t);
    }
    if let Some(c) = report.correlation {
        let mut t = Table::new("correlation", &["experiment", "pearson", "pearson_sem", "runs"]);
        t.rows.push(vec![report.experiment.to_string(), num(c.mean), num(c.sem), c.n.to_string()]);
        tables.push(t);
    }
    Ok(tables)
}

pub fn write_tables(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut paths = Vec::new();
    for t in report_tables(report)? {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv()).with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

/// `<root>/<experiment>-<unix seconds>`, with a numeric suffix if taken.
pub fn experiment_dir(root: &Path, report: &ExperimentReport) -> PathBuf {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let base = format!("{}-{stamp}", report.experiment);
    let mut dir = root.join(&base);
    let mut i = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{i}"));
        i += 1;
    }
    dir
}

/// Writes config.json, report.json and tables/*.csv under a fresh directory.
pub fn write_experiment(report: &ExperimentReport, root: &Path) -> Result<PathBuf> {
    let dir = experiment_dir(root, report);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&report.config)? + "\n")?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    write_tables(report, &dir.join("tables"))?;
    Ok(dir)
}

/// Human-readable summary for the terminal.
pub fn summary_text(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: {} runs completed, {} failed", report.experiment, report.completed, report.failed);
    for c in &report.criteria {
        let k = c.confusion;
        let _ = writeln!(
            s,
            "  {}: TP {} FP {} modal set {{{}}} ({}/{})",
            criterion_name(c.criterion),
            k.tp.map(|v| format!("{v:.1}")).unwrap_or("n/a".into()),
            k.fp.map(|v| format!("{v:.1}")).unwrap_or("n/a".into()),
            set(&c.modal_set, &report.variables).replace(';', ", "),
            c.modal_count,
            k.runs
        );
    }
    for p in &report.pid {
        let _ = writeln!(
            s,
            "  PID {} vs rest ({}): unq {:.3} / {:.3}, shd {:.3}, syn {:.3}",
            p.name,
            report.pid_units.as_str(),
            p.unq_feature.mean,
            p.unq_rest.mean,
            p.shd.mean,
            p.syn.mean
        );
    }
    for w in &report.sweep {
        let _ = writeln!(
            s,
            "  {} value={} sigma={}: I(X1;Y) {:.3}, I(X2;Y) {:.3}, I(X1;Y|X2) {:.3}, shd {:.3}, syn {:.3}",
            w.kind, w.value, w.sigma, w.mi_x1.mean, w.mi_x2.mean, w.cmi_x1_given_x2.mean, w.shd.mean, w.syn.mean
        );
    }
    s
}
