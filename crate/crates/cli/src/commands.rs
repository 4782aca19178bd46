use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dba_core::data::write_csv;
use dba_core::datagen::{gen_airis_tab, gen_moons, AIRIS_FEATURES, AIRIS_RANGES};
use dba_core::dba_att::{label_stability, probability_stability};
use dba_core::dba_tab::{explain_from_detection, RTrial};
use dba_core::evaluation::{curves_csv, evaluate_run, report_table_csv, run_method, EvaluationReport, MethodRun, Prepared};
use dba_core::{linalg, Dataset, Error, Method, SeedStream};
use serde::Serialize;

use crate::config::RunConfig;
use crate::setup::World;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Writes artifacts into one directory, refusing to overwrite unless forced.
pub struct Outputs {
    dir: PathBuf,
    force: bool,
    pub written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>, force: bool) -> anyhow::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs {
            dir,
            force,
            written: vec![],
        })
    }

    fn target(&self, name: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        check_writable(&path, self.force)?;
        Ok(path)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.target(name)?;
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    /// CSV whose first line is a `#` comment carrying the resolved config.
    pub fn csv_with_config(&mut self, name: &str, cfg: &RunConfig, body: &str) -> anyhow::Result<PathBuf> {
        let header = format!("# config: {}\n", serde_json::to_string(cfg)?);
        self.text(name, &(header + body))
    }
}

fn check_writable(path: &Path, force: bool) -> anyhow::Result<()> {
    if path.exists() && !force {
        bail!("{} already exists (use --force to overwrite)", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn envelope<'a, T: Serialize>(command: &'static str, config: &'a RunConfig, body: T) -> Envelope<'a, T> {
    Envelope {
        schema_version: OUTPUT_SCHEMA_VERSION,
        command,
        config,
        body,
    }
}

// ---------------------------------------------------------------- generation

#[derive(Serialize)]
struct Sidecar {
    schema_version: u32,
    generator: &'static str,
    seed: u64,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranges: Option<BTreeMap<String, [f64; 2]>>,
    /// Share of rows labelled +1.
    class_balance: f64,
    columns: Vec<String>,
    label_values: BTreeMap<&'static str, &'static str>,
    csv: String,
}

fn write_generated(
    out: &Path,
    force: bool,
    data: &Dataset<f64>,
    ann: Option<&dba_core::Annotations>,
    mut sidecar: Sidecar,
) -> anyhow::Result<Vec<PathBuf>> {
    let meta = out.with_extension("json");
    check_writable(out, force)?;
    check_writable(&meta, force)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_csv(out, data, ann)?;
    let mut columns = data.feature_names.clone();
    columns.push("label".into());
    if let Some(a) = ann {
        columns.extend(a.names.iter().map(|n| format!("attr_{n}")));
    }
    sidecar.columns = columns;
    sidecar.csv = out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    std::fs::write(&meta, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(vec![out.to_path_buf(), meta])
}

fn label_values(positive: &'static str, negative: &'static str) -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([("1", positive), ("-1", negative)])
}

pub fn gen_moons_cmd(n: usize, noise: f64, seed: u64, out: &Path, force: bool) -> anyhow::Result<Vec<PathBuf>> {
    let data = gen_moons::<f64>(n, noise, seed)?;
    let sidecar = Sidecar {
        schema_version: OUTPUT_SCHEMA_VERSION,
        generator: "moons",
        seed,
        n,
        noise: Some(noise),
        ranges: None,
        class_balance: data.positive_share(),
        columns: vec![],
        label_values: label_values("upper moon (cos t, sin t)", "lower moon (1 - cos t, 0.5 - sin t)"),
        csv: String::new(),
    };
    write_generated(out, force, &data, None, sidecar)
}

pub fn gen_airis_cmd(n: usize, seed: u64, out: &Path, force: bool) -> anyhow::Result<Vec<PathBuf>> {
    let (data, ann) = gen_airis_tab::<f64>(n, seed)?;
    let ranges = AIRIS_FEATURES
        .iter()
        .zip(AIRIS_RANGES)
        .map(|(name, (lo, hi))| (name.to_string(), [lo, hi]))
        .collect();
    let sidecar = Sidecar {
        schema_version: OUTPUT_SCHEMA_VERSION,
        generator: "airis-tab",
        seed,
        n,
        noise: None,
        ranges: Some(ranges),
        class_balance: data.positive_share(),
        columns: vec![],
        label_values: label_values("class A", "class B"),
        csv: String::new(),
    };
    write_generated(out, force, &data, Some(&ann), sidecar)
}

// ---------------------------------------------------------------- explain

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Ok,
    Refused,
    Failed,
}

#[derive(Serialize)]
struct ExplainDoc<'a> {
    method: Method,
    point: usize,
    x0: &'a [f64],
    /// `x0` in the units of the input data.
    x0_raw: Vec<f64>,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<MethodRun<f64>>,
}

fn point_seed(cfg: &RunConfig, point: usize) -> SeedStream {
    SeedStream::new(cfg.seed).child("points").index(point as u64)
}

/// One JSON per point and method. Returns the number of hard failures.
pub fn explain_cmd(cfg: &RunConfig, out: &mut Outputs, dump_sample: bool) -> anyhow::Result<usize> {
    let world = World::build(cfg)?;
    let setup = world.eval_setup(cfg)?;
    let prep = Prepared::new(&setup)?;
    let points = world.points(cfg)?;
    let mut failures = 0;
    for &p in &points {
        let x0 = &world.test.points[p];
        for &method in &cfg.methods {
            let seed = point_seed(cfg, p);
            let (status, error, result) = match run_method(&prep, method, x0, &cfg.dba, &cfg.lime, None, seed) {
                Ok(run) => (Status::Ok, None, Some(run)),
                Err(e @ Error::LabelUnstable { .. }) => (Status::Refused, Some(e.to_string()), None),
                Err(e @ Error::Subprocess(_)) => return Err(e.into()),
                Err(e) => {
                    failures += 1;
                    log::error!("{method} on point {p}: {e}");
                    (Status::Failed, Some(e.to_string()), None)
                }
            };
            if dump_sample && method == Method::DbaTab {
                if let Some(det) = result.as_ref().and_then(|r| r.detection.clone()) {
                    let stream = seed.child(method.as_str());
                    let again = explain_from_detection(&prep.refs, det, x0, setup.classifier, &cfg.dba, stream)?;
                    if let Some(s) = again.sample {
                        let mut body = world.train.feature_names.join(",") + ",label\n";
                        for (x, l) in s.points.iter().zip(&s.labels) {
                            let cells: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                            let _ = writeln!(body, "{},{}", cells.join(","), i8::from(*l));
                        }
                        out.csv_with_config(&format!("explain-{method}-{p}-sample.csv"), cfg, &body)?;
                    }
                }
            }
            let doc = ExplainDoc {
                method,
                point: p,
                x0,
                x0_raw: world.standardizer.invert(x0)?,
                status,
                error,
                result,
            };
            out.json(&format!("explain-{method}-{p}.json"), &envelope("explain", cfg, doc))?;
        }
    }
    Ok(failures)
}

// ---------------------------------------------------------------- evaluate

#[derive(Serialize)]
struct ReportBody<'a> {
    report: &'a EvaluationReport<f64>,
}

pub fn evaluate_cmd(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<EvaluationReport<f64>> {
    let world = World::build(cfg)?;
    let setup = world.eval_setup(cfg)?;
    let prep = Prepared::new(&setup)?;
    let points = world.points(cfg)?;
    let report = evaluate_run(&prep, &world.test, &points, &cfg.eval_config())?;
    out.json("report.json", &envelope("evaluate", cfg, ReportBody { report: &report }))?;
    out.csv_with_config("table.csv", cfg, &report_table_csv(&report))?;
    let curves = curves_csv(&prep, &report, cfg.curve_step, cfg.curve_max_distance)?;
    let (header, rows) = curves.split_once('\n').unwrap_or((&curves, ""));
    for &method in &cfg.methods {
        let prefix = format!("{method},");
        let mut body = format!("{header}\n");
        for line in rows.lines().filter(|l| l.starts_with(&prefix)) {
            body.push_str(line);
            body.push('\n');
        }
        out.csv_with_config(&format!("curves-{method}.csv"), cfg, &body)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------- sweep-r

#[derive(Serialize)]
struct SweepRow {
    point: usize,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    trials: Vec<RTrial<f64>>,
}

#[derive(Serialize)]
struct SweepBody {
    rows: Vec<SweepRow>,
}

/// Per-radius boundary distances and class balances of the DBA methods.
pub fn sweep_cmd(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let methods: Vec<Method> = cfg.methods.iter().copied().filter(|m| m.is_dba()).collect();
    if methods.is_empty() {
        bail!("sweep-r needs dba-tab or dba-att among the methods");
    }
    let world = World::build(cfg)?;
    let setup = world.eval_setup(cfg)?;
    let prep = Prepared::new(&setup)?;
    let mut rows = vec![];
    for p in world.points(cfg)? {
        for &method in &methods {
            let run = run_method(&prep, method, &world.test.points[p], &cfg.dba, &cfg.lime, None, point_seed(cfg, p));
            rows.push(match run {
                Ok(r) => SweepRow {
                    point: p,
                    method,
                    chosen_r: r.explanation.chosen_r,
                    error: None,
                    trials: r.trials,
                },
                Err(e @ Error::Subprocess(_)) => return Err(e.into()),
                Err(e) => SweepRow {
                    point: p,
                    method,
                    chosen_r: None,
                    error: Some(e.to_string()),
                    trials: vec![],
                },
            });
        }
    }
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut body = String::from("point,method,r,status,distance,class_balance,chosen\n");
    for row in &rows {
        for t in &row.trials {
            let status = serde_json::to_value(&t.status)?;
            let status = status.as_str().map(str::to_string).unwrap_or_else(|| "fit_failed".into());
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{}",
                row.point,
                row.method,
                t.r,
                status,
                opt(t.distance),
                opt(t.class_balance),
                row.chosen_r == Some(t.r)
            );
        }
    }
    out.json("sweep.json", &envelope("sweep-r", cfg, SweepBody { rows }))?;
    out.csv_with_config("sweep.csv", cfg, &body)?;
    Ok(())
}

// ---------------------------------------------------------------- stability

#[derive(Serialize)]
struct StabilityBody {
    codec: String,
    rows: usize,
    label_stability: f64,
    /// Mean absolute probability change; absent for label-only models.
    probability_stability: Option<f64>,
    mean_reconstruction_error: f64,
    /// Selected test points whose label changes under the round trip.
    unstable_points: Vec<usize>,
    points: Vec<usize>,
}

/// Codec diagnostics on the test set.
pub fn stability_cmd(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let world = World::build(cfg)?;
    let codec = world.codec.as_ref();
    let f = world.classifier.as_ref();
    let rows = &world.test.points;
    let label = label_stability(codec, f, rows)?;
    let prob = match probability_stability(codec, f, rows) {
        Ok(v) => Some(v),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut recon = 0.0;
    for x in rows {
        recon += linalg::distance(x, &codec.round_trip(x)?);
    }
    let points = world.points(cfg)?;
    let mut unstable = vec![];
    for &p in &points {
        let x = &rows[p];
        if f.label(x)? != f.label(&codec.round_trip(x)?)? {
            unstable.push(p);
        }
    }
    let body = StabilityBody {
        codec: codec.name(),
        rows: rows.len(),
        label_stability: label,
        probability_stability: prob,
        mean_reconstruction_error: recon / rows.len() as f64,
        unstable_points: unstable,
        points,
    };
    out.json("stability.json", &envelope("stability", cfg, body))?;
    Ok(())
}
