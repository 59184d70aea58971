//! Text file formats: datasets (CSV), source bundles (JSON), draw directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::config::hex_digest;
use crate::data::{Dataset, SourceEstimate};
use crate::draws::{PosteriorDraws, PosteriorSummary};
use crate::error::{Error, Result};
use crate::sampler::ParamDiagnostic;

/// Name of the response column in dataset files.
pub const RESPONSE_COLUMN: &str = "y";
pub const DRAWS_MANIFEST: &str = "manifest.json";

/// Formats a value with 17 significant digits, enough for exact `f64` round trips.
pub fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a `x1,...,xp,y` CSV file. Covariate column order is preserved and
/// the response column may sit anywhere in the header.
pub fn load_dataset(path: impl AsRef<Path>, has_intercept: bool) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
    parse_dataset(&text, has_intercept).map_err(|e| match e {
        Error::Invalid(msg) => Error::load(path, msg),
        other => other,
    })
}

pub fn parse_dataset(text: &str, has_intercept: bool) -> Result<Dataset<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::invalid("no rows"));
    }
    let y_col = header
        .iter()
        .position(|h| h == RESPONSE_COLUMN)
        .ok_or_else(|| Error::invalid(format!("missing \"{RESPONSE_COLUMN}\" column")))?;
    let width = header.len();
    let p = width - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != width {
            return Err(Error::invalid(format!(
                "ragged row {row}: expected {width} fields, found {}",
                record.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::invalid(format!(
                    "malformed number {field:?} at row {row}, column {} ({})",
                    c + 1,
                    &header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value at row {row}, column {} ({})",
                    c + 1,
                    &header[c]
                )));
            }
            if c == y_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(Error::invalid("no rows"));
    }
    if p == 0 {
        return Err(Error::invalid("no covariate columns"));
    }
    let n = ys.len();
    let x = Array2::from_shape_vec((n, p), xs).expect("row-major fill");
    Dataset::new(x, Array1::from(ys), has_intercept)
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push(RESPONSE_COLUMN.to_string());
    w.write_record(&header)?;
    for (row, y) in data.x().rows().into_iter().zip(data.y()) {
        let mut rec: Vec<String> = row.iter().map(|v| fmt_exact(*v)).collect();
        rec.push(fmt_exact(*y));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceRecord {
    id: String,
    omega_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intercept_hat: Option<f64>,
}

pub fn load_sources(path: impl AsRef<Path>) -> Result<Vec<SourceEstimate<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
    parse_sources(&text).map_err(|e| match e {
        Error::Invalid(msg) | Error::ZeroNorm(msg) => Error::load(path, msg),
        Error::Json(j) => Error::load(path, j.to_string()),
        other => other,
    })
}

/// Parses a source bundle. All vectors must share one length.
pub fn parse_sources(text: &str) -> Result<Vec<SourceEstimate<f64>>> {
    let records: Vec<SourceRecord> = serde_json::from_str(text)?;
    let mut out: Vec<SourceEstimate<f64>> = Vec::with_capacity(records.len());
    for rec in records {
        if let Some(first) = out.first() {
            if rec.omega_hat.len() != first.p() {
                return Err(Error::invalid(format!("length mismatch: {}", rec.id)));
            }
        }
        if out.iter().any(|s| s.id == rec.id) {
            return Err(Error::invalid(format!("duplicate source id: {}", rec.id)));
        }
        out.push(SourceEstimate::new(
            rec.id,
            Array1::from(rec.omega_hat),
            rec.intercept_hat,
        )?);
    }
    Ok(out)
}

pub fn sources_to_json(sources: &[SourceEstimate<f64>]) -> Result<String> {
    let records: Vec<SourceRecord> = sources
        .iter()
        .map(|s| SourceRecord {
            id: s.id.clone(),
            omega_hat: s.omega_hat.to_vec(),
            intercept_hat: s.intercept_hat,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainEntry {
    chain_id: usize,
    file: String,
    n_draws: usize,
    seed: u64,
    sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DrawsManifest {
    tau: f64,
    seed: u64,
    config_digest: String,
    p: usize,
    n_weights: usize,
    has_intercept: bool,
    chains: Vec<ChainEntry>,
}

/// Draws read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedDraws {
    pub chains: Vec<PosteriorDraws<f64>>,
    /// Set when the stored config digest differs from the expected one.
    pub digest_mismatch: bool,
}

fn chain_header(p: usize, k1: usize, intercept: bool) -> Vec<String> {
    let mut h = vec!["draw".to_string()];
    h.extend((1..=p).map(|j| format!("beta_{j}")));
    if intercept {
        h.push("intercept".into());
    }
    h.push("sigma2".into());
    h.extend((1..=p).map(|j| format!("lambda_{j}")));
    h.extend((1..=k1).map(|k| format!("eta_{k}")));
    h
}

fn chain_csv(d: &PosteriorDraws<f64>) -> String {
    let mut out = chain_header(d.p(), d.n_weights(), d.intercept.is_some()).join(",");
    out.push('\n');
    for s in 0..d.n_draws() {
        let mut rec = vec![s.to_string()];
        rec.extend(d.beta.row(s).iter().map(|v| fmt_exact(*v)));
        if let Some(a) = &d.intercept {
            rec.push(fmt_exact(a[s]));
        }
        rec.push(fmt_exact(d.sigma2[s]));
        rec.extend(d.lambda.row(s).iter().map(|v| fmt_exact(*v)));
        rec.extend(d.eta.row(s).iter().map(|v| fmt_exact(*v)));
        out.push_str(&rec.join(","));
        out.push('\n');
    }
    out
}

/// Writes one CSV per chain plus a manifest into `dir` (created if needed).
pub fn save_draws(chains: &[PosteriorDraws<f64>], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let first = chains
        .first()
        .ok_or_else(|| Error::invalid("no chains to save"))?;
    for d in chains {
        d.validate()?;
        if d.p() != first.p()
            || d.n_weights() != first.n_weights()
            || d.intercept.is_some() != first.intercept.is_some()
        {
            return Err(Error::invalid("chains disagree on dimensions"));
        }
    }
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for d in chains {
        let file = format!("chain_{}.csv", d.chain_id);
        let body = chain_csv(d);
        fs::write(dir.join(&file), &body)?;
        entries.push(ChainEntry {
            chain_id: d.chain_id,
            file,
            n_draws: d.n_draws(),
            seed: d.seed,
            sha256: hex_digest(body.as_bytes()),
        });
    }
    let manifest = DrawsManifest {
        tau: first.tau,
        seed: first.seed,
        config_digest: first.config_digest.clone(),
        p: first.p(),
        n_weights: first.n_weights(),
        has_intercept: first.intercept.is_some(),
        chains: entries,
    };
    let mut f = fs::File::create(dir.join(DRAWS_MANIFEST))?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(())
}

/// Loads a draw directory. Content that does not match the manifest is a
/// corruption error; a differing config digest only sets a flag.
pub fn load_draws(dir: impl AsRef<Path>, expected_digest: Option<&str>) -> Result<LoadedDraws> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(DRAWS_MANIFEST);
    let corrupt = |path: &PathBuf, message: String| Error::Corrupt {
        path: path.clone(),
        message,
    };
    let manifest: DrawsManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| corrupt(&manifest_path, e.to_string()))?;
    let mut chains = Vec::new();
    for entry in &manifest.chains {
        let path = dir.join(&entry.file);
        let body = fs::read_to_string(&path)?;
        if hex_digest(body.as_bytes()) != entry.sha256 {
            return Err(corrupt(&path, "content digest mismatch".into()));
        }
        let d = parse_chain(&body, &manifest, entry).map_err(|m| corrupt(&path, m))?;
        chains.push(d);
    }
    let digest_mismatch = expected_digest.is_some_and(|d| d != manifest.config_digest);
    if digest_mismatch {
        log::warn!(
            "draws in {} were produced by config {}, expected {}",
            dir.display(),
            manifest.config_digest,
            expected_digest.unwrap_or_default()
        );
    }
    Ok(LoadedDraws {
        chains,
        digest_mismatch,
    })
}

fn parse_chain(
    body: &str,
    m: &DrawsManifest,
    entry: &ChainEntry,
) -> std::result::Result<PosteriorDraws<f64>, String> {
    let (p, k1) = (m.p, m.n_weights);
    let mut lines = body.lines();
    let header = lines.next().ok_or("empty chain file")?;
    if header != chain_header(p, k1, m.has_intercept).join(",") {
        return Err("unexpected header".into());
    }
    let width = 1 + 2 * p + usize::from(m.has_intercept) + 1 + k1;
    let s = entry.n_draws;
    let mut beta = Array2::zeros((s, p));
    let mut lambda = Array2::zeros((s, p));
    let mut eta = Array2::zeros((s, k1));
    let mut sigma2 = Array1::zeros(s);
    let mut intercept = m.has_intercept.then(|| Array1::zeros(s));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if i >= s {
            return Err("more rows than recorded".into());
        }
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|_| format!("bad number at row {}", i + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() + 1 != width {
            return Err(format!("row {} has {} fields", i + 1, vals.len() + 1));
        }
        let mut it = vals.into_iter();
        for j in 0..p {
            beta[[i, j]] = it.next().unwrap();
        }
        if let Some(a) = intercept.as_mut() {
            a[i] = it.next().unwrap();
        }
        sigma2[i] = it.next().unwrap();
        for j in 0..p {
            lambda[[i, j]] = it.next().unwrap();
        }
        for k in 0..k1 {
            eta[[i, k]] = it.next().unwrap();
        }
        rows += 1;
    }
    if rows != s {
        return Err(format!("truncated: {rows} of {s} rows"));
    }
    Ok(PosteriorDraws {
        beta,
        intercept,
        sigma2,
        lambda,
        eta,
        tau: m.tau,
        chain_id: entry.chain_id,
        seed: entry.seed,
        config_digest: m.config_digest.clone(),
    })
}

pub fn write_summary(path: impl AsRef<Path>, summary: &PosteriorSummary<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["coef", "mean", "median", "lower", "upper", "selected"])?;
    for (j, c) in summary.coefficients.iter().enumerate() {
        w.write_record([
            format!("beta_{}", j + 1),
            fmt_exact(c.mean),
            fmt_exact(c.median),
            fmt_exact(c.lower),
            fmt_exact(c.upper),
            c.selected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `parameter,rhat,ess,flagged`; R-hat is left empty for a single chain.
pub fn write_diagnostics(path: impl AsRef<Path>, diags: &[ParamDiagnostic]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "rhat", "ess", "flagged"])?;
    for d in diags {
        w.write_record([
            d.parameter.clone(),
            d.rhat.map(fmt_exact).unwrap_or_default(),
            fmt_exact(d.ess),
            d.flagged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
