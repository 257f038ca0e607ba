use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use consilience::critical;
use consilience::dataio::{parse_dataset, ParseOptions, DEFAULT_MAX_ROWS};
use consilience::decomposition::decompose;
use consilience::nullmodels::{self, Clip, ComponentSummary, EnumerationMeans};
use consilience::weighting::WeightTable;
use consilience::{Config, Dataset, NullKind, NullSpec};

use crate::args::{
    AnalyzeArgs, CompareArgs, CriticalArgs, DataArgs, EnumerateArgs, Format, NullArgs, PlotArgs,
};
use crate::error::{CliError, CliResult};
use crate::format::{sig6, Table};
use crate::plot;
use crate::report::{self, AnalysisReport, Provenance};

pub const SEED_ENV: &str = "CONSILIENCE_SEED";
pub const DEFAULT_REPLICATES: usize = 1000;

/// A parsed dataset with its effective configuration and input digest.
pub struct Loaded {
    pub dataset: Dataset,
    pub config: Config,
    pub sha256: String,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn load(data: &DataArgs) -> CliResult<Loaded> {
    let mut config = match &data.config {
        Some(p) => {
            let text = String::from_utf8_lossy(&read(p)?).into_owned();
            Config::from_json(&text)?
        }
        None => Config::default(),
    };
    if let Some(s) = data.scalar {
        config.scalar = Some(s);
    }
    if let Some(r) = data.max_rows {
        config.max_rows = Some(r);
    }
    let bytes = read(&data.input)?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let options = ParseOptions {
        max_rows: config.max_rows.unwrap_or(DEFAULT_MAX_ROWS),
    };
    let dataset = config.apply(parse_dataset(bytes.as_slice(), &options)?)?;
    Ok(Loaded {
        dataset,
        config,
        sha256,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut loaded = load(&args.data)?;
    if !args.alpha.is_empty() {
        loaded.config.alphas = Some(args.alpha.clone());
    }
    let report = report::analyze(&loaded.dataset, &loaded.config, loaded.sha256)?;
    let (json, text) = (report.to_json(), report.render_text());
    if let Some(dir) = &args.out_dir {
        write_file(dir, "report.json", &json)?;
        write_file(dir, "report.txt", &text)?;
    }
    emit(
        out,
        if args.format == Format::Json {
            &json
        } else {
            &text
        },
    )
}

pub fn compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let loaded = load(&args.data)?;
    let report = report::compare(&loaded.dataset, &loaded.config, loaded.sha256)?;
    let (json, text) = (report.to_json(), report.render_text());
    if let Some(dir) = &args.out_dir {
        write_file(dir, "compare.json", &json)?;
        write_file(dir, "compare.txt", &text)?;
    }
    emit(
        out,
        if args.format == Format::Json {
            &json
        } else {
            &text
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Flag,
    Config,
    Environment,
    Generated,
}

impl SeedSource {
    pub fn label(self) -> &'static str {
        match self {
            SeedSource::Flag => "flag",
            SeedSource::Config => "config",
            SeedSource::Environment => "environment",
            SeedSource::Generated => "generated",
        }
    }
}

/// Flag, then config, then environment, then a fresh seed that is recorded.
pub fn resolve_seed(
    flag: Option<u64>,
    config: Option<u64>,
    env: Option<&str>,
) -> CliResult<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Some(s) = config {
        return Ok((s, SeedSource::Config));
    }
    if let Some(v) = env {
        let s = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}='{v}' is not an unsigned integer")))?;
        return Ok((s, SeedSource::Environment));
    }
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    if let Ok(t) = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH) {
        h.write_u128(t.as_nanos());
    }
    h.write_u32(std::process::id());
    Ok((h.finish(), SeedSource::Generated))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub provenance: Provenance,
    pub kind: NullKind,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub replicates: usize,
    pub clip: Clip,
    pub mean_c: f64,
    pub sd_c: f64,
    pub standard_error: f64,
    /// (p, quantile) pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub components: Vec<ComponentSummary>,
    pub observed_c: f64,
    /// Fraction of replicates with C at least the observed value.
    pub empirical_p: f64,
}

const NULL_QUANTILES: [f64; 6] = [0.5, 0.75, 0.9, 0.95, 0.99, 0.999];

pub fn null(args: &NullArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut loaded = load(&args.data)?;
    let env = std::env::var(SEED_ENV).ok();
    let (seed, seed_source) = resolve_seed(args.seed, loaded.config.seed, env.as_deref())?;
    let replicates = args
        .reps
        .or(loaded.config.replicates)
        .unwrap_or(DEFAULT_REPLICATES);
    loaded.config.seed = Some(seed);
    loaded.config.replicates = Some(replicates);

    let ds = &loaded.dataset;
    ds.check_analyzable()?;
    let kind = loaded.config.scalar_kind();
    let weights = WeightTable::build(ds, loaded.config.overlap_policy.unwrap_or_default())?;
    let observed = ds
        .series
        .iter()
        .map(|s| {
            decompose(&s.usable_pairs(), kind)
                .map(|p| p.c)
                .map_err(|e| e.in_series(&s.name))
        })
        .collect::<consilience::Result<Vec<f64>>>()?;
    let observed_c = weights.joint_c(&observed);

    let clip = Clip {
        mode: args.clip.into(),
        ..Clip::default()
    };
    let spec = NullSpec::new(args.kind, replicates, seed).with_clip(clip);
    let dist = nullmodels::null_distribution_weighted(ds, &spec, kind, &weights)?;

    let summary = NullSummary {
        provenance: Provenance::new(loaded.sha256.clone(), loaded.config.clone(), Some(seed)),
        kind: args.kind,
        seed,
        seed_source,
        replicates,
        clip,
        mean_c: dist.mean_c,
        sd_c: dist.sd_c,
        standard_error: dist.standard_error(),
        quantiles: NULL_QUANTILES
            .iter()
            .map(|&p| (p, dist.quantile(p)))
            .collect(),
        components: dist.components.clone(),
        observed_c,
        empirical_p: dist.upper_tail(observed_c),
    };
    let json = to_json(&summary);
    if let Some(dir) = &args.out_dir {
        let mut csv = String::from("c\n");
        for v in &dist.c_values {
            csv.push_str(&format!("{v}\n"));
        }
        write_file(dir, "null_c.csv", &csv)?;
        write_file(dir, "null.json", &json)?;
    }
    let text = if args.format == Format::Json {
        json
    } else {
        render_null(&summary)
    };
    emit(out, &text)
}

fn render_null(s: &NullSummary) -> String {
    let kind = match s.kind {
        NullKind::RandMix => "randmix",
        NullKind::RandNorm => "randnorm",
    };
    let mut out = format!(
        "null model {kind}, {} replicates, seed {} ({})\nmean C {}  sd {}  se {}\n\n",
        s.replicates,
        s.seed,
        s.seed_source.label(),
        sig6(s.mean_c),
        sig6(s.sd_c),
        sig6(s.standard_error)
    );
    let mut t = Table::new(["quantile", "C"]);
    for (p, v) in &s.quantiles {
        t.row(vec![sig6(*p), sig6(*v)]);
    }
    out.push_str(&t.render());
    out.push_str(&format!(
        "\nobserved C {}  fraction of replicates >= observed: {}\n",
        sig6(s.observed_c),
        sig6(s.empirical_p)
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationEntry {
    pub series: String,
    pub means: EnumerationMeans,
}

pub fn enumerate(args: &EnumerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let loaded = load(&args.data)?;
    let kind = loaded.config.scalar_kind();
    let chosen: Vec<_> = match &args.series {
        Some(name) => {
            let s = loaded
                .dataset
                .series
                .iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| CliError::Usage(format!("no series named '{name}'")))?;
            vec![s]
        }
        None => loaded.dataset.series.iter().collect(),
    };
    let entries = chosen
        .iter()
        .map(|s| {
            nullmodels::enumerate_randmix(&s.observed(), kind)
                .map(|means| EnumerationEntry {
                    series: s.name.clone(),
                    means,
                })
                .map_err(|e| e.in_series(&s.name))
        })
        .collect::<consilience::Result<Vec<_>>>()?;
    if args.format == Format::Json {
        return emit(out, &to_json(&entries));
    }
    let mut t = Table::new([
        "series", "n", "pairings", "MSEsys", "MSEran", "MSEtot", "C", "R2",
    ]);
    for e in &entries {
        let m = &e.means;
        t.row(vec![
            e.series.clone(),
            m.n.to_string(),
            m.permutations.to_string(),
            sig6(m.mse_sys),
            sig6(m.mse_ran),
            sig6(m.mse_tot),
            sig6(m.c),
            sig6(m.rsq),
        ]);
    }
    let mut text = t.render();
    for e in &entries {
        text.push_str(&format!("{}: mean C = {}\n", e.series, sig6(e.means.c)));
        if e.means.has_ties {
            text.push_str(&format!(
                "{}: observed values contain ties; closed-form expectations assume distinct values\n",
                e.series
            ));
        }
    }
    emit(out, &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalOutput {
    pub m_effn: f64,
    pub levels: Vec<(f64, f64)>,
}

pub fn critical_cmd(args: &CriticalArgs, out: &mut dyn Write) -> CliResult<()> {
    if let Some(path) = &args.nomogram {
        let rows = critical::nomogram(args.lo, args.hi, args.points)?;
        let csv = critical::nomogram_csv(&rows);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, csv).map_err(|e| CliError::io(path, e))?;
    }
    let m_effn = match (args.mn, args.m, args.effn) {
        (Some(mn), _, _) => mn,
        (None, Some(m), Some(effn)) => m as f64 * effn,
        _ if args.nomogram.is_some() => return Ok(()),
        _ => return Err(CliError::Usage("give --mn or both --m and --effn".into())),
    };
    let alphas = if args.alpha.is_empty() {
        critical::ALPHAS.to_vec()
    } else {
        args.alpha.clone()
    };
    let levels = alphas
        .iter()
        .map(|&a| critical::critical_c_mn(a, m_effn).map(|v| (a, v)))
        .collect::<consilience::Result<Vec<_>>>()?;
    let result = CriticalOutput { m_effn, levels };
    if args.format == Format::Json {
        return emit(out, &to_json(&result));
    }
    let mut t = Table::new(["alpha", "critical C"]);
    for (a, v) in &result.levels {
        t.row(vec![sig6(*a), sig6(*v)]);
    }
    emit(out, &format!("M·effN = {}\n{}", sig6(m_effn), t.render()))
}

pub fn plot_cmd(args: &PlotArgs, out: &mut dyn Write) -> CliResult<()> {
    let bytes = read(&args.report)?;
    let report: AnalysisReport =
        serde_json::from_slice(&bytes).map_err(|source| CliError::Report {
            path: args.report.clone(),
            source,
        })?;
    let mut written = Vec::new();
    for s in &report.series {
        let name = format!("scatter_{}.svg", file_stem(&s.name));
        written.push(write_file(&args.out_dir, &name, &plot::scatter_svg(s))?);
    }
    let points = plot::report_points(&report);
    written.push(write_file(
        &args.out_dir,
        "nomogram.svg",
        &plot::nomogram_svg(&points),
    )?);
    let mut text = String::new();
    for p in written {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    emit(out, &text)
}

/// Series names made safe for file names.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
