//! The `ssnd` command-line tool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ssnd_core::criteria::AssignMethod;
use ssnd_core::diarpost::{decide, tuning_sweep, PostProcessConfig};
use ssnd_core::dsp::{self, StftConfig};
use ssnd_core::metrics::{cpwer, der};
use ssnd_core::simulate::{generate_synthetic_session, SessionSpec};
use ssnd_core::ssnd::{
    assign_streams, build_embedding_sequences, plan_segments, SpeakerEmbedding,
};
use ssnd_core::types::{FrameGrid, PosteriorMatrix};

use crate::config::PipelineConfig;
use crate::io::manifest::{read_manifest, write_manifest, ManifestRecord};
use crate::io::matrix::{read_matrix, write_matrix, MatrixKind};
use crate::io::rttm::{read_rttm, write_rttm};
use crate::io::session::{load_session, parse_noise_kind, save_session};
use crate::io::wav::{read_wav, write_mono, WavEncoding};
use crate::model::{make_diarizer, make_separator};
use crate::pipeline::run_pipeline;
use crate::report;
use crate::{PipelineError, Result};

#[derive(Parser)]
#[command(
    name = "ssnd",
    version,
    about = "Diarization-driven speaker separation toolkit: simulation, features, decisions, stream assignment, and scoring"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded meeting-style session into a directory.
    Simulate(SimulateArgs),
    /// Compute features (log-mel, splicing, IPD) from a WAV file.
    Featurize(FeaturizeArgs),
    /// Turn posteriors into speech-activity intervals (RTTM).
    Decide(DecideArgs),
    /// Assign RTTM intervals to two streams; optionally build embedding sequences.
    Assign(AssignArgs),
    /// Print the stitch-free segment plan for a session length.
    Plan(PlanArgs),
    /// Score diarization error rate between two RTTM files.
    ScoreDer(ScoreDerArgs),
    /// Score concatenated minimum-permutation WER between two manifests.
    ScoreCpwer(ScoreCpwerArgs),
    /// Threshold/frame-shift tuning sweep producing a CSV table.
    Sweep(SweepArgs),
    /// Run the end-to-end pipeline on a session.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Recipe {
    Diarization,
    Separation,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Recipe::Diarization)]
    recipe: Recipe,
    /// Override the recipe's speaker count.
    #[arg(long)]
    speakers: Option<usize>,
    /// Noise kind: none, uncorrelated, or diffuse:<directions>.
    #[arg(long)]
    noise: Option<String>,
    /// Session name used in emitted files (default: session<seed>).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StftPreset {
    /// 25 ms window / 10 ms shift.
    Diarization,
    /// 32 ms window / 10 ms shift.
    Sep10,
    /// 32 ms window / 16 ms shift.
    Sep16,
}

impl StftPreset {
    fn config(self) -> StftConfig {
        match self {
            StftPreset::Diarization => StftConfig::diarization(),
            StftPreset::Sep10 => StftConfig::separation_hop10(),
            StftPreset::Sep16 => StftConfig::separation_hop16(),
        }
    }
}

#[derive(Args)]
struct FeaturizeArgs {
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = StftPreset::Diarization)]
    stft: StftPreset,
    #[arg(long, default_value_t = 23)]
    mels: usize,
    /// Splice each frame with +-7 neighbors.
    #[arg(long)]
    splice: bool,
    /// Standardize columns to zero mean, unit variance.
    #[arg(long)]
    normalize: bool,
    /// Also write inter-channel phase differences (needs >= 2 channels).
    #[arg(long)]
    ipd: bool,
    /// Keep every N-th frame.
    #[arg(long, default_value_t = 1)]
    subsample: usize,
    /// Also write spectral and spatial features concatenated per frame
    /// (spectral columns first; implies --ipd).
    #[arg(long)]
    fuse: bool,
}

#[derive(Args)]
struct DecideArgs {
    /// Posterior matrix dump (with grid header).
    posteriors: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 31)]
    median: usize,
    #[arg(long, default_value = "session")]
    session: String,
}

#[derive(Args)]
struct AssignArgs {
    /// Diarized intervals.
    rttm: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Per-speaker embedding matrix (rows follow the sorted speaker names).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    frame_shift_ms: u32,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    len_s: f64,
    #[arg(long, default_value_t = 30.0)]
    size_s: f64,
    #[arg(long, default_value_t = 27.0)]
    shift_s: f64,
}

#[derive(Args)]
struct ScoreDerArgs {
    reference: PathBuf,
    hypothesis: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    collar_s: f64,
    #[arg(long, default_value_t = 10)]
    resolution_ms: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapMethod {
    Hungarian,
    Brute,
}

#[derive(Args)]
struct ScoreCpwerArgs {
    reference: PathBuf,
    hypothesis: PathBuf,
    #[arg(long, value_enum, default_value_t = MapMethod::Hungarian)]
    method: MapMethod,
    /// Skip lowercasing/punctuation-stripping of the transcripts.
    #[arg(long)]
    keep_raw_text: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Reference RTTM.
    #[arg(long)]
    reference: PathBuf,
    /// Posterior dumps, one per frame shift.
    #[arg(long = "posteriors", required = true)]
    posteriors: Vec<PathBuf>,
    /// Comma-separated thresholds.
    #[arg(long, default_value = "0.3,0.5")]
    taus: String,
    #[arg(long, default_value_t = 31)]
    median: usize,
    #[arg(long, default_value_t = 10)]
    resolution_ms: u32,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Load a saved session directory instead of simulating.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["seed", "recipe"])]
    session: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Recipe::Diarization)]
    recipe: Recipe,
    /// Noise kind override for simulated sessions.
    #[arg(long)]
    noise: Option<String>,
    /// Pipeline configuration file (TOML; else SSND_CONFIG, else defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Force ground-truth oracle models regardless of the config.
    #[arg(long)]
    oracle: bool,
    /// Write streams, decisions, and the report here.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ssnd: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => run_simulate(args, cli.json),
        Command::Featurize(args) => run_featurize(args, cli.json),
        Command::Decide(args) => run_decide(args, cli.json),
        Command::Assign(args) => run_assign(args, cli.json),
        Command::Plan(args) => run_plan(args, cli.json),
        Command::ScoreDer(args) => run_score_der(args, cli.json),
        Command::ScoreCpwer(args) => run_score_cpwer(args, cli.json),
        Command::Sweep(args) => run_sweep(args, cli.json),
        Command::Pipeline(args) => run_pipeline_cmd(args, cli.json),
    }
}

fn build_spec(recipe: Recipe, seed: u64, speakers: Option<usize>, noise: &Option<String>) -> Result<SessionSpec> {
    let mut spec = match recipe {
        Recipe::Diarization => SessionSpec::diarization(seed),
        Recipe::Separation => SessionSpec::separation(seed),
    };
    if let Some(n) = speakers {
        spec.n_speakers = n;
    }
    if let Some(name) = noise {
        spec.noise = parse_noise_kind(name)
            .ok_or_else(|| PipelineError::Config(format!("unknown noise kind {name:?}")))?;
    }
    Ok(spec)
}

fn run_simulate(args: SimulateArgs, json: bool) -> Result<()> {
    let spec = build_spec(args.recipe, args.seed, args.speakers, &args.noise)?;
    let session = generate_synthetic_session(&spec)
        .map_err(|e| PipelineError::stage("simulate", e))?;
    let name = args.name.unwrap_or_else(|| format!("session{}", args.seed));
    save_session(&session, &name, &args.out)?;
    let summary = json!({
        "session": name,
        "out": args.out,
        "seed": args.seed,
        "speakers": session.speakers.len(),
        "utterances": session.intervals.len(),
        "duration_s": session.len_ms() as f64 / 1000.0,
        "measured_overlap": session.measured_overlap,
        "snr_db": session.snr_db,
    });
    if json {
        println!("{summary}");
    } else {
        println!(
            "wrote {name} to {}: {} utterances, {:.1} s, overlap {:.3}",
            args.out.display(),
            session.intervals.len(),
            session.len_ms() as f64 / 1000.0,
            session.measured_overlap
        );
    }
    Ok(())
}

fn run_featurize(args: FeaturizeArgs, json: bool) -> Result<()> {
    let audio = read_wav(&args.input)?;
    let cfg = args.stft.config();
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| PipelineError::io(&args.out_dir, e))?;
    let stage = |e: dsp::DspError| PipelineError::stage("featurize", e);

    let spec = dsp::stft(audio.reference(), cfg).map_err(stage)?;
    let mut features = dsp::logmel(&spec, args.mels);
    let mut kind = MatrixKind::LogMel;
    if args.splice {
        features = dsp::splice(&features, 7, 7);
        kind = MatrixKind::Spliced;
    }
    if args.normalize {
        features = dsp::normalize(&features).0;
    }
    if args.subsample > 1 {
        features = features.subsample(args.subsample);
    }
    let grid = FrameGrid {
        shift_ms: cfg.shift_ms * args.subsample as u32,
        window_ms: cfg.window_ms,
        n_frames: features.n_frames(),
    };
    let spectral_path = args.out_dir.join("spectral.bin");
    write_matrix(&spectral_path, &features.values, kind, Some(grid))?;

    let mut ipd_info = None;
    let mut fused_info = None;
    if args.ipd || args.fuse {
        if audio.n_channels() < 2 {
            return Err(PipelineError::stage("featurize", "IPD needs at least two channels"));
        }
        let mut specs = Vec::with_capacity(audio.n_channels());
        for c in 0..audio.n_channels() {
            let mut s = dsp::stft(audio.channel(c), cfg).map_err(stage)?;
            s.channel = c;
            specs.push(s);
        }
        let mut ipd = dsp::ipd(&specs, audio.ref_channel).map_err(stage)?;
        if args.subsample > 1 {
            ipd = ipd.subsample(args.subsample);
        }
        let ipd_path = args.out_dir.join("ipd.bin");
        write_matrix(&ipd_path, &ipd.values, MatrixKind::Ipd, Some(grid))?;
        if args.fuse {
            let fused = dsp::fuse(&features, &ipd).map_err(stage)?;
            let fused_path = args.out_dir.join("fused.bin");
            write_matrix(&fused_path, &fused.values, MatrixKind::Fused, Some(grid))?;
            fused_info = Some((fused_path, fused.dim()));
        }
        ipd_info = Some((ipd_path, ipd.dim()));
    }

    let summary = json!({
        "spectral": spectral_path,
        "frames": features.n_frames(),
        "dim": features.dim(),
        "ipd": ipd_info.as_ref().map(|(p, d)| json!({ "path": p, "dim": d })),
        "fused": fused_info.as_ref().map(|(p, d)| json!({ "path": p, "dim": d })),
    });
    if json {
        println!("{summary}");
    } else {
        println!(
            "wrote {} ({} x {})",
            spectral_path.display(),
            features.n_frames(),
            features.dim()
        );
        for (path, dim) in ipd_info.iter().chain(&fused_info) {
            println!("wrote {} ({} x {})", path.display(), features.n_frames(), dim);
        }
    }
    Ok(())
}

fn load_posteriors(path: &Path) -> Result<PosteriorMatrix> {
    let (values, _, grid) = read_matrix(path)?;
    let grid = grid.ok_or_else(|| PipelineError::Format {
        path: path.into(),
        message: "posterior dump carries no frame grid".into(),
    })?;
    if values.data().iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(PipelineError::Format {
            path: path.into(),
            message: "posteriors out of [0, 1]".into(),
        });
    }
    let speakers = (0..values.cols()).map(|c| format!("spk{c}")).collect();
    Ok(PosteriorMatrix::new(grid, values, speakers))
}

fn run_decide(args: DecideArgs, json: bool) -> Result<()> {
    let posteriors = load_posteriors(&args.posteriors)?;
    let config = PostProcessConfig {
        threshold: args.tau,
        median_len: args.median,
        frame_shift_ms: posteriors.grid.shift_ms,
    };
    let intervals = decide(&posteriors, &config).map_err(|e| PipelineError::stage("decide", e))?;
    write_rttm(&intervals, &args.session, &args.out)?;
    if json {
        println!(
            "{}",
            json!({ "out": args.out, "intervals": intervals.len(), "tau": args.tau })
        );
    } else {
        println!("wrote {} intervals to {}", intervals.len(), args.out.display());
    }
    Ok(())
}

fn run_assign(args: AssignArgs, json: bool) -> Result<()> {
    let mut intervals = read_rttm(&args.rttm)?;
    intervals.sort_by_key(|iv| (iv.start_ms, iv.end_ms, iv.speaker.clone()));
    let assignment =
        assign_streams(&intervals).map_err(|e| PipelineError::stage("assign", e))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| PipelineError::io(&args.out_dir, e))?;

    let mut dump = String::from("# interval speaker start_s end_s stream\n");
    for &(idx, stream) in &assignment.entries {
        let iv = &intervals[idx];
        dump.push_str(&format!(
            "{idx} {} {:.3} {:.3} {stream}\n",
            iv.speaker,
            iv.start_s(),
            iv.end_s()
        ));
    }
    let dump_path = args.out_dir.join("assignment.txt");
    std::fs::write(&dump_path, dump).map_err(|e| PipelineError::io(&dump_path, e))?;

    let mut sequence_paths = Vec::new();
    if let Some(emb_path) = &args.embeddings {
        let (matrix, _, _) = read_matrix(emb_path)?;
        let mut names: Vec<String> = intervals.iter().map(|iv| iv.speaker.clone()).collect();
        names.sort();
        names.dedup();
        if names.len() != matrix.rows() {
            return Err(PipelineError::Format {
                path: emb_path.clone(),
                message: format!(
                    "{} embedding rows for {} speakers",
                    matrix.rows(),
                    names.len()
                ),
            });
        }
        let embeddings: BTreeMap<String, SpeakerEmbedding> = names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                (
                    name.clone(),
                    SpeakerEmbedding {
                        vector: matrix.row(i).to_vec(),
                        speaker: name.clone(),
                        n_frames: 1,
                    },
                )
            })
            .collect();
        let end = intervals.iter().map(|iv| iv.end_ms).max().unwrap_or(0);
        let grid = FrameGrid::covering(end, args.frame_shift_ms);
        let sequences = build_embedding_sequences(&assignment, &embeddings, &intervals, grid)
            .map_err(|e| PipelineError::stage("assign", e))?;
        for (i, sequence) in sequences.iter().enumerate() {
            let path = args.out_dir.join(format!("sequence{i}.bin"));
            write_matrix(&path, &sequence.values, MatrixKind::Embeddings, Some(grid))?;
            sequence_paths.push(path);
        }
    }

    if json {
        println!(
            "{}",
            json!({
                "assignment": dump_path,
                "intervals": intervals.len(),
                "sequences": sequence_paths,
            })
        );
    } else {
        println!("wrote {} ({} intervals)", dump_path.display(), intervals.len());
        for p in sequence_paths {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn run_plan(args: PlanArgs, json: bool) -> Result<()> {
    if args.shift_s <= 0.0 || args.size_s < args.shift_s || args.len_s < 0.0 {
        return Err(PipelineError::Config("plan needs len >= 0 and size >= shift > 0".into()));
    }
    let plan = plan_segments(
        (args.len_s * 1000.0).round() as u64,
        (args.size_s * 1000.0).round() as u64,
        (args.shift_s * 1000.0).round() as u64,
    );
    if json {
        let windows: Vec<_> = plan
            .windows
            .iter()
            .map(|w| {
                json!({
                    "start_s": w.start_ms as f64 / 1000.0,
                    "end_s": w.end_ms as f64 / 1000.0,
                    "emit_start_s": w.emit_start_ms as f64 / 1000.0,
                    "emit_end_s": w.emit_end_ms as f64 / 1000.0,
                })
            })
            .collect();
        println!("{}", json!({ "windows": windows }));
    } else {
        println!("window_start_s window_end_s emit_start_s emit_end_s");
        for w in &plan.windows {
            println!(
                "{:.3} {:.3} {:.3} {:.3}",
                w.start_ms as f64 / 1000.0,
                w.end_ms as f64 / 1000.0,
                w.emit_start_ms as f64 / 1000.0,
                w.emit_end_ms as f64 / 1000.0
            );
        }
    }
    Ok(())
}

fn run_score_der(args: ScoreDerArgs, json: bool) -> Result<()> {
    let reference = read_rttm(&args.reference)?;
    let hypothesis = read_rttm(&args.hypothesis)?;
    let report = der(&reference, &hypothesis, args.collar_s, args.resolution_ms);
    if json {
        println!("{}", report::der_json(&report));
    } else {
        println!(
            "DER {:.4}  MI {:.4}  FA {:.4}  CF {:.4}  (scored {:.1} s)",
            report.der, report.missed, report.false_alarm, report.confusion, report.scored_time_s
        );
    }
    Ok(())
}

fn run_score_cpwer(args: ScoreCpwerArgs, json: bool) -> Result<()> {
    let normalize = !args.keep_raw_text;
    let to_segments = |records: Vec<ManifestRecord>| {
        records.iter().map(|r| r.to_segment(normalize)).collect::<Vec<_>>()
    };
    let reference = to_segments(read_manifest(&args.reference)?);
    let hypothesis = to_segments(read_manifest(&args.hypothesis)?);
    let method = match args.method {
        MapMethod::Hungarian => AssignMethod::Hungarian,
        MapMethod::Brute => AssignMethod::BruteForce,
    };
    let (report, mapping) = cpwer(&reference, &hypothesis, method)
        .map_err(|e| PipelineError::stage("score-cpwer", e))?;
    if json {
        let mut value = report::wer_json(&report);
        value["mapping"] = json!(mapping
            .iter()
            .map(|(r, h)| json!({ "reference": r, "hypothesis": h }))
            .collect::<Vec<_>>());
        println!("{value}");
    } else {
        println!(
            "cpWER {:.4}  S {}  D {}  I {}  ({} reference words)",
            report.wer(),
            report.substitutions,
            report.deletions,
            report.insertions,
            report.n_ref_words
        );
    }
    Ok(())
}

fn run_sweep(args: SweepArgs, json: bool) -> Result<()> {
    let reference = read_rttm(&args.reference)?;
    let mut posteriors = Vec::with_capacity(args.posteriors.len());
    for path in &args.posteriors {
        posteriors.push(load_posteriors(path)?);
    }
    let taus: Vec<f64> = args
        .taus
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| PipelineError::Config(format!("bad threshold {t:?}")))
        })
        .collect::<Result<_>>()?;
    let rows = tuning_sweep(&posteriors, &reference, &taus, args.median, args.resolution_ms)
        .map_err(|e| PipelineError::stage("sweep", e))?;
    let csv = report::sweep_csv(&rows);
    if let Some(path) = &args.out {
        std::fs::write(path, &csv).map_err(|e| PipelineError::io(path, e))?;
    }
    if json {
        let value: Vec<_> = rows
            .iter()
            .map(|r| {
                json!({
                    "shift_ms": r.frame_shift_ms,
                    "tau": r.threshold,
                    "der": r.report.der,
                    "mi": r.report.missed,
                    "fa": r.report.false_alarm,
                    "cf": r.report.confusion,
                })
            })
            .collect();
        println!("{}", json!({ "rows": value, "csv": args.out }));
    } else {
        print!("{csv}");
    }
    Ok(())
}

fn run_pipeline_cmd(args: PipelineArgs, json: bool) -> Result<()> {
    let mut config = PipelineConfig::load(args.config.as_deref())?;
    if args.oracle {
        config.models.diarizer = "oracle".into();
        config.models.separator = "oracle".into();
    }
    let session = match &args.session {
        Some(dir) => load_session(dir)?,
        None => {
            let spec = build_spec(args.recipe, args.seed, None, &args.noise)?;
            generate_synthetic_session(&spec).map_err(|e| PipelineError::stage("simulate", e))?
        }
    };
    let diarizer = make_diarizer(&config.models.diarizer, &session)?;
    let separator = make_separator(&config.models.separator, &session)?;
    let report = run_pipeline(&config, &session, diarizer.as_ref(), separator.as_ref())?;

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let sr = session.mixture.sample_rate;
        for (i, stream) in report.streams.iter().enumerate() {
            write_mono(stream, sr, dir.join(format!("stream{i}.wav")), WavEncoding::Float32)?;
        }
        write_rttm(&report.decided, "decided", dir.join("decided.rttm"))?;
        let hyp_records: Vec<ManifestRecord> = report
            .hyp_transcripts
            .iter()
            .map(|t| ManifestRecord {
                session: "decided".into(),
                speaker: t.speaker.clone(),
                start_ms: t.start_ms,
                end_ms: t.end_ms,
                text: t.words.join(" "),
            })
            .collect();
        write_manifest(&hyp_records, dir.join("hyp_transcripts.tsv"))?;
        let report_path = dir.join("report.json");
        std::fs::write(
            &report_path,
            serde_json::to_string_pretty(&report::pipeline_json(&report)).expect("valid json"),
        )
        .map_err(|e| PipelineError::io(&report_path, e))?;
    }

    if json {
        println!("{}", report::pipeline_json_with_timings(&report));
    } else {
        println!(
            "DER {:.4} (MI {:.4} FA {:.4} CF {:.4})",
            report.der.der, report.der.missed, report.der.false_alarm, report.der.confusion
        );
        match &report.cpwer {
            Some(w) => println!("cpWER {:.4} over {} words", w.wer(), w.n_ref_words),
            None => println!("cpWER n/a (no reference words)"),
        }
        if let Some(err) = report.reconstruction_max_err {
            println!("stream reconstruction max |err| {err:.3e}");
        }
        for (stage, ms) in &report.timings_ms {
            println!("  {stage:<12} {ms:9.2} ms");
        }
    }
    Ok(())
}
