use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use ssdpp::baselines::listify;
use ssdpp::data::{parse_schema_override, SchemaOverride};
use ssdpp::synth::{generate_planted, PlantedSpec};
use ssdpp::{
    load_csv, seq_cover_miner, ssd_plus_plus, summarize, topk_miner, BaselineConfig, Dataset,
    Encoder, EvaluationReport, Execution, GainMode, ModelDocument, SearchConfig, SubgroupList,
    TargetColumn,
};

use crate::args::{
    Algorithm, CompareArgs, DataArgs, EvaluateArgs, Format, GainArg, MineArgs, SearchArgs,
    SynthArgs,
};
use crate::Failure;

type CmdResult = Result<u8, Failure>;

fn target_column(target: &Option<String>) -> TargetColumn {
    match target {
        Some(name) => TargetColumn::Named(name.clone()),
        None => TargetColumn::Last,
    }
}

fn read_schema(path: &Option<PathBuf>) -> Result<Option<SchemaOverride>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read schema {}: {e}", path.display())))?;
    Ok(Some(parse_schema_override(&text)?))
}

fn load(input: &Path, target: &Option<String>, schema: &Option<PathBuf>) -> Result<Dataset, Failure> {
    let schema = read_schema(schema)?;
    Ok(load_csv(input, &target_column(target), schema.as_ref())?)
}

fn load_data(args: &DataArgs) -> Result<Dataset, Failure> {
    load(&args.input, &args.target, &args.schema)
}

/// Writes through a sibling temp file and renames, so readers never see a
/// partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Usage(format!("invalid output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error| Failure::Data(format!("cannot write {}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn search_config(args: &SearchArgs, gain: GainMode) -> SearchConfig {
    SearchConfig {
        beam_width: args.beam_width,
        max_depth: args.max_depth,
        n_cut: args.n_cut,
        min_usage: args.min_usage,
        gain_mode: gain,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    }
}

fn single_gain(gain: GainArg) -> Result<GainMode, Failure> {
    match gain {
        GainArg::Normalized => Ok(GainMode::Normalized),
        GainArg::Absolute => Ok(GainMode::Absolute),
        GainArg::Both => Err(Failure::Usage("--gain both is only valid for compare".into())),
    }
}

struct Mined {
    model: SubgroupList,
    seconds: f64,
}

/// Runs one miner and returns its list. Top-k output is ordered into a list
/// by score; its `k` defaults to the length of an SSD++ list on the same data.
fn run_algorithm(
    algorithm: Algorithm,
    dataset: &Dataset,
    encoder: &Encoder<'_>,
    args: &SearchArgs,
    search: &SearchConfig,
) -> Result<Mined, Failure> {
    let start = Instant::now();
    let model = match algorithm {
        Algorithm::Ssdpp => ssd_plus_plus(dataset, search)?,
        Algorithm::Seqcover => seq_cover_miner(
            dataset,
            &BaselineConfig {
                k: 1,
                search: search.clone(),
                min_coverage: args.min_coverage,
            },
        )?,
        Algorithm::Topk => {
            let k = match args.k {
                Some(k) => k,
                None => ssd_plus_plus(dataset, search)?.len().max(1),
            };
            let config = BaselineConfig {
                k,
                search: search.clone(),
                min_coverage: args.min_coverage,
            };
            let start = Instant::now();
            let ranked = topk_miner(dataset, &config)?;
            let model = listify(&ranked, encoder, search.min_usage)?;
            return Ok(Mined {
                model,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    };
    Ok(Mined {
        model,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Serialize)]
struct MineOutput<'a> {
    model: &'a ModelDocument,
    report: &'a EvaluationReport,
}

fn report_csv(report: &EvaluationReport) -> String {
    format!(
        "{}\n{}\n",
        EvaluationReport::COLUMNS.join(","),
        report.values().join(",")
    )
}

pub fn mine(args: &MineArgs) -> CmdResult {
    let search = search_config(&args.search, single_gain(args.search.gain)?);
    search.validate()?;
    let dataset = load_data(&args.data)?;
    let encoder = Encoder::for_dataset(&dataset, search.n_cut);
    let mined = run_algorithm(args.algorithm, &dataset, &encoder, &args.search, &search)?;
    let report = summarize(&mined.model, &encoder, mined.seconds);
    let doc = ModelDocument::from_model(&mined.model, &encoder, args.algorithm.name());
    if let Some(path) = &args.output {
        write_atomic(path, format!("{}\n", doc.to_json()?).as_bytes())?;
    }
    let text = match args.format {
        Format::Json => {
            let out = MineOutput {
                model: &doc,
                report: &report,
            };
            format!(
                "{}\n",
                serde_json::to_string_pretty(&out).context("serializing output")?
            )
        }
        Format::Table => format!(
            "{}\n{}",
            mined.model.render_table(&dataset),
            report.render_table()
        ),
        Format::Csv => report_csv(&report),
    };
    emit(None, &text)?;
    Ok(0)
}

pub fn evaluate(args: &EvaluateArgs) -> CmdResult {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", args.model.display())))?;
    let doc = ModelDocument::from_json(&text)?;
    let dataset = load_data(&args.data)?;
    if dataset.target_name() != doc.target {
        return Err(Failure::Data(format!(
            "model target '{}' does not match dataset target '{}'",
            doc.target,
            dataset.target_name()
        )));
    }
    let start = Instant::now();
    let encoder = Encoder::for_dataset(&dataset, doc.n_cut);
    let model = doc.to_model(&encoder)?;
    let report = summarize(&model, &encoder, start.elapsed().as_secs_f64());
    let out = match args.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).context("serializing report")?
        ),
        Format::Table => format!("{}\n{}", model.render_table(&dataset), report.render_table()),
        Format::Csv => report_csv(&report),
    };
    emit(args.output.as_deref(), &out)?;
    Ok(0)
}

fn truth_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synth".into());
    csv.with_file_name(format!("{stem}.truth.json"))
}

pub fn synth(args: &SynthArgs) -> CmdResult {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<PlantedSpec>(&text)
                .map_err(|e| Failure::Data(format!("invalid spec {}: {e}", path.display())))?
        }
        None => PlantedSpec::preset(args.rows, args.planted, args.seed),
    };
    let (dataset, truth) = generate_planted(&spec)?;
    let mut csv = Vec::new();
    dataset.write_csv(&mut csv)?;
    write_atomic(&args.output, &csv)?;
    let truth_json = serde_json::to_string_pretty(&truth).context("serializing ground truth")?;
    write_atomic(&truth_path(&args.output), format!("{truth_json}\n").as_bytes())?;
    Ok(0)
}

const COMPARE_HEADER: [&str; 3] = ["dataset", "algorithm", "gain"];

fn dataset_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn gain_name(gain: GainMode) -> &'static str {
    match gain {
        GainMode::Normalized => "normalized",
        GainMode::Absolute => "absolute",
    }
}

enum SweepParam {
    Depth,
    Cuts,
    Beam,
}

impl SweepParam {
    fn name(&self) -> &'static str {
        match self {
            SweepParam::Depth => "depth",
            SweepParam::Cuts => "cuts",
            SweepParam::Beam => "beam",
        }
    }

    fn apply(&self, search: &SearchConfig, value: usize) -> SearchConfig {
        let mut s = search.clone();
        match self {
            SweepParam::Depth => s.max_depth = value,
            SweepParam::Cuts => s.n_cut = value,
            SweepParam::Beam => s.beam_width = value,
        }
        s
    }
}

fn parse_sweep(raw: &[String]) -> Result<(SweepParam, Vec<usize>), Failure> {
    let param = match raw[0].as_str() {
        "depth" => SweepParam::Depth,
        "cuts" => SweepParam::Cuts,
        "beam" => SweepParam::Beam,
        other => {
            return Err(Failure::Usage(format!(
                "unknown sweep parameter '{other}' (expected depth, cuts or beam)"
            )))
        }
    };
    let values = raw[1]
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&x| x > 0)
                .ok_or_else(|| Failure::Usage(format!("invalid sweep value '{v}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((param, values))
}

fn csv_line(cells: &[String]) -> String {
    let mut w = Vec::new();
    {
        let mut writer = csv::WriterBuilder::new().from_writer(&mut w);
        let _ = writer.write_record(cells);
    }
    String::from_utf8_lossy(&w).into_owned()
}

/// Emits one row per dataset and miner (report columns including compression
/// ratio), or per dataset and sweep value, or the side-by-side gain table.
/// Datasets that fail are reported and skipped; the exit code is then 2.
pub fn compare(args: &CompareArgs) -> CmdResult {
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    let base = search_config(&args.search, GainMode::Normalized);
    base.validate()?;
    if matches!(args.search.gain, GainArg::Both) && sweep.is_some() {
        return Err(Failure::Usage("--sweep cannot be combined with --gain both".into()));
    }

    let mut out = String::new();
    match (&sweep, args.search.gain) {
        (Some(_), _) => {
            let mut header: Vec<String> = ["dataset", "algorithm", "gain", "parameter", "value"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            header.extend(EvaluationReport::COLUMNS.iter().map(|s| s.to_string()));
            out.push_str(&csv_line(&header));
        }
        (None, GainArg::Both) => {
            let mut header = vec!["dataset".to_string()];
            for g in ["normalized", "absolute"] {
                for c in ["compression_ratio", "swkl_per_row", "num_subgroups", "runtime_seconds"] {
                    header.push(format!("{c}_{g}"));
                }
            }
            out.push_str(&csv_line(&header));
        }
        (None, _) => {
            let mut header: Vec<String> = COMPARE_HEADER.iter().map(|s| s.to_string()).collect();
            header.extend(EvaluationReport::COLUMNS.iter().map(|s| s.to_string()));
            out.push_str(&csv_line(&header));
        }
    }

    let mut failed = false;
    for input in &args.inputs {
        let label = dataset_label(input);
        let rows = compare_one(args, &base, sweep.as_ref(), input, &label);
        match rows {
            Ok(rows) => rows.iter().for_each(|r| out.push_str(&csv_line(r))),
            Err(f) => {
                eprintln!("error: {}: {}", input.display(), f.message());
                failed = true;
            }
        }
    }
    emit(args.output.as_deref(), &out)?;
    Ok(if failed { 2 } else { 0 })
}

fn compare_one(
    args: &CompareArgs,
    base: &SearchConfig,
    sweep: Option<&(SweepParam, Vec<usize>)>,
    input: &Path,
    label: &str,
) -> Result<Vec<Vec<String>>, Failure> {
    let dataset = load(input, &args.target, &args.schema)?;
    let mut rows = Vec::new();
    let evaluate = |algorithm: Algorithm, search: &SearchConfig| -> Result<EvaluationReport, Failure> {
        search.validate()?;
        let encoder = Encoder::for_dataset(&dataset, search.n_cut);
        let mined = run_algorithm(algorithm, &dataset, &encoder, &args.search, search)?;
        Ok(summarize(&mined.model, &encoder, mined.seconds))
    };
    match (sweep, args.search.gain) {
        (Some((param, values)), gain) => {
            let gain = single_gain(gain)?;
            for &v in values {
                let mut search = param.apply(base, v);
                search.gain_mode = gain;
                let report = evaluate(Algorithm::Ssdpp, &search)?;
                let mut row = vec![
                    label.to_string(),
                    Algorithm::Ssdpp.name().to_string(),
                    gain_name(gain).to_string(),
                    param.name().to_string(),
                    v.to_string(),
                ];
                row.extend(report.values());
                rows.push(row);
            }
        }
        (None, GainArg::Both) => {
            let mut row = vec![label.to_string()];
            for gain in [GainMode::Normalized, GainMode::Absolute] {
                let mut search = base.clone();
                search.gain_mode = gain;
                let r = evaluate(Algorithm::Ssdpp, &search)?;
                let v = r.values();
                // compression_ratio, swkl_per_row, num_subgroups, runtime
                row.extend([v[6].clone(), v[0].clone(), v[2].clone(), v[7].clone()]);
            }
            rows.push(row);
        }
        (None, gain) => {
            let gain = single_gain(gain)?;
            let mut search = base.clone();
            search.gain_mode = gain;
            for algorithm in [Algorithm::Ssdpp, Algorithm::Topk, Algorithm::Seqcover] {
                let report = evaluate(algorithm, &search)?;
                let mut row = vec![
                    label.to_string(),
                    algorithm.name().to_string(),
                    gain_name(gain).to_string(),
                ];
                row.extend(report.values());
                rows.push(row);
            }
        }
    }
    Ok(rows)
}
