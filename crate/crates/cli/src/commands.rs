use std::env;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use phasemotion::frame_io::{mapping_sidecar_path, write_atomic};
use phasemotion::synthetic::motion_sequence;
use phasemotion::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Stage};
use crate::output::OutputDir;
use crate::rawio::subband_bytes;
use crate::*;

pub fn dispatch(command: Command) -> CliResult<()> {
    let command = absolutized(command)?;
    let config = RunConfig::new(command.clone());
    match command {
        Command::Decompose(a) => decompose_cmd(&a, &config),
        Command::Phasediff(a) => phasediff_cmd(&a, &config),
        Command::Flow(a) => flow_cmd(&a, &config),
        Command::Corrupt(a) => corrupt_cmd(&a, &config),
        Command::Ccc(a) => ccc_cmd(&a),
        Command::Bench(a) => bench_cmd(&a, &config),
        Command::Sweep(a) => sweep_cmd(&a, &config),
        Command::Replay(a) => replay_cmd(&a),
    }
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    Ok(env::current_dir().stage("resolve paths")?.join(path))
}

/// Pins every path so the recorded config does not depend on the working
/// directory.
fn absolutized(command: Command) -> CliResult<Command> {
    Ok(match command {
        Command::Decompose(mut a) => {
            a.input = absolute(&a.input)?;
            a.out = absolute(&a.out)?;
            Command::Decompose(a)
        }
        Command::Phasediff(mut a) => {
            a.input = absolute(&a.input)?;
            a.out = absolute(&a.out)?;
            Command::Phasediff(a)
        }
        Command::Flow(mut a) => {
            a.input = absolute(&a.input)?;
            a.out = absolute(&a.out)?;
            Command::Flow(a)
        }
        Command::Corrupt(mut a) => {
            a.input = absolute(&a.input)?;
            a.out = absolute(&a.out)?;
            Command::Corrupt(a)
        }
        Command::Bench(mut a) => {
            a.out = a.out.as_deref().map(absolute).transpose()?;
            Command::Bench(a)
        }
        Command::Sweep(mut a) => {
            a.input = a.input.as_deref().map(absolute).transpose()?;
            a.out = absolute(&a.out)?;
            Command::Sweep(a)
        }
        other => other,
    })
}

fn load_frames(input: &Path) -> CliResult<FrameSequence> {
    read_frames(input).stage("read frames")
}

fn decompose_cmd(args: &DecomposeArgs, config: &RunConfig) -> CliResult<()> {
    let seq = load_frames(&args.input)?;
    let spec = PyramidSpec::new(args.scales, args.orients).stage("build filter bank")?;
    let (w, h) = seq.dims();
    let bank = build_filter_bank(w, h, &spec).stage("build filter bank")?;
    let mut out = OutputDir::create(&args.out)?;
    bank.save(out.file("bank.cspb"))
        .stage("write filter bank")?;
    let decomposer = Decomposer::new(&bank);
    for (i, frame) in seq.frames().iter().enumerate() {
        let coeffs = decomposer.decompose(frame).stage("decompose")?;
        let amps = amplitude(&coeffs);
        let phases = phase(&coeffs);
        for (s, o, band) in coeffs.bands.iter() {
            let stem = format!("f{i:04}_s{s}_o{o}");
            let amp = amps.get(s, o);
            let peak = amp.max_abs();
            let img = GrayImage::from_plane(amp.map(|a| if peak > 0.0 { a / peak } else { 0.0 }))
                .stage("write amplitude")?;
            write_image(&img, out.file(format!("{stem}_amp.png"))).stage("write amplitude")?;
            let phase_png = out.file_with(format!("{stem}_phase.png"), mapping_sidecar_path);
            write_signed_field(&phases.get(s, o).phase, phase_png).stage("write phase")?;
            write_atomic(out.file(format!("{stem}.cplx")), &subband_bytes(band))
                .stage("write coefficients")?;
        }
    }
    config.write(&mut out)?;
    println!(
        "decomposed {} frames into {}x{} sub-bands in {}",
        seq.len(),
        args.scales,
        args.orients,
        out.root().display()
    );
    out.commit();
    Ok(())
}

fn phasediff_cmd(args: &PhaseDiffArgs, config: &RunConfig) -> CliResult<()> {
    if args.length < 2 {
        return Err(CliError::new(
            "window frames",
            "--length must be at least 2",
        ));
    }
    let mut seq = load_frames(&args.input)?;
    if !args.no_resize {
        seq = seq
            .map_frames(|f| resize_bilinear(f, args.size, args.size))
            .stage("resize frames")?;
    }
    let n_snippets = (seq.len().max(1) - 1) / (args.length - 1);
    if n_snippets == 0 {
        return Err(CliError::new(
            "window frames",
            format!(
                "{} frames cannot fill a {}-frame snippet",
                seq.len(),
                args.length
            ),
        ));
    }
    let spec = PyramidSpec::new(args.scales, args.orients).stage("build filter bank")?;
    let (w, h) = seq.dims();
    let bank = build_filter_bank(w, h, &spec).stage("build filter bank")?;
    let cfg = PhaseDiffConfig {
        sigma: args.sigma,
        remove_rigid_motion: !args.keep_rigid_motion,
    };
    let mut out = OutputDir::create(&args.out)?;
    for k in 0..n_snippets {
        let start = k * (args.length - 1);
        let window = &seq.frames()[start..start + args.length];
        let fields = snippet_phase_diffs(window, &bank, &cfg).stage("phase difference")?;
        let tensors = pack_snippet(&fields).stage("pack snippet")?;
        write_snippets(&tensors, out.file(format!("snippet_{k:04}.snip")))
            .stage("write snippet")?;
        for (t, pair) in fields.iter().enumerate() {
            for (s, o, field) in pair.iter() {
                let name = format!("snippet_{k:04}_pair{t:02}_s{s}_o{o}.png");
                let path = out.file_with(name, mapping_sidecar_path);
                write_signed_field(&field.values, path).stage("write phase image")?;
            }
        }
    }
    let used = n_snippets * (args.length - 1) + 1;
    if used < seq.len() {
        eprintln!(
            "note: last {} frames do not fill a snippet and were skipped",
            seq.len() - used
        );
    }
    config.write(&mut out)?;
    println!(
        "wrote {n_snippets} snippets of {} pairs to {}",
        args.length - 1,
        out.root().display()
    );
    out.commit();
    Ok(())
}

fn flow_cmd(args: &FlowArgs, config: &RunConfig) -> CliResult<()> {
    let seq = load_frames(&args.input)?;
    seq.ensure_motion_ready().stage("read frames")?;
    let params = HornSchunckParams {
        alpha: args.alpha,
        iterations: args.iters,
    };
    let mut out = OutputDir::create(&args.out)?;
    let mut medians = Vec::new();
    for (i, pair) in seq.frames().windows(2).enumerate() {
        let flow = horn_schunck(&pair[0], &pair[1], &params).stage("optical flow")?;
        medians.push(flow_magnitude_stats(&flow).median);
        write_flo(&flow, out.file(format!("flow_{i:04}.flo"))).stage("write flow")?;
    }
    config.write(&mut out)?;
    println!(
        "wrote {} flow fields to {} (median |flow| per pair: {:.4})",
        medians.len(),
        out.root().display(),
        median(&mut medians)
    );
    out.commit();
    Ok(())
}

fn corrupt_cmd(args: &CorruptArgs, config: &RunConfig) -> CliResult<()> {
    let spec = GammaJitterSpec::new(args.beta, args.seed).stage("gamma jitter")?;
    let seq = load_frames(&args.input)?;
    let corrupted = gamma_corrupt_sequence(&seq, &spec).stage("gamma jitter")?;
    let mut out = OutputDir::create(&args.out)?;
    for (i, frame) in corrupted.frames().iter().enumerate() {
        write_image(frame, out.file(format!("frame_{i:04}.png"))).stage("write frames")?;
    }
    let mut table = String::from("index,gamma\n");
    for (i, g) in spec.gammas(seq.len()).iter().enumerate() {
        table.push_str(&format!("{i},{g}\n"));
    }
    write_atomic(out.file("gammas.csv"), table.as_bytes()).stage("write gammas")?;
    config.write(&mut out)?;
    println!(
        "wrote {} corrupted frames to {}",
        corrupted.len(),
        out.root().display()
    );
    out.commit();
    Ok(())
}

/// Numeric columns of a CSV. A first row that does not parse is taken as a
/// header.
pub fn read_columns(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .stage("read series")?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.stage("read series")?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(CliError::new(
                    "read series",
                    format!("{} row {}: {e}", path.display(), row + 1),
                ))
            }
        };
        if columns.is_empty() {
            columns = vec![Vec::new(); values.len()];
        }
        if values.len() != columns.len() {
            return Err(CliError::new(
                "read series",
                format!(
                    "{} row {}: expected {} columns",
                    path.display(),
                    row + 1,
                    columns.len()
                ),
            ));
        }
        for (c, v) in columns.iter_mut().zip(values) {
            c.push(v);
        }
    }
    Ok(columns)
}

fn first_column(path: &Path) -> CliResult<Vec<f64>> {
    read_columns(path)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::new("read series", format!("{} has no data", path.display())))
}

fn ccc_cmd(args: &CccArgs) -> CliResult<()> {
    let (pred, truth) = match &args.truth {
        Some(truth) => (first_column(&args.pred)?, first_column(truth)?),
        None => {
            let mut cols = read_columns(&args.pred)?;
            if cols.len() < 2 {
                return Err(CliError::new(
                    "read series",
                    "a single file needs prediction and truth columns",
                ));
            }
            let truth = cols.swap_remove(1);
            (cols.swap_remove(0), truth)
        }
    };
    let pair = SeriesPair::new(&pred, &truth).stage("validate series")?;
    let c = ccc(&pair).stage("ccc")?;
    println!("n\t{}", pair.len());
    println!("ccc\t{c}");
    println!("pearson\t{}", pearson(&pair));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub size: usize,
    pub pairs: usize,
    pub repeats: usize,
    pub threads: usize,
    /// Median over repeats of the mean time per frame pair.
    pub phase_diff_ms_per_pair: f64,
    pub flow_ms_per_pair: f64,
    /// Flow time over phase-difference time.
    pub ratio: f64,
    pub phase_diff_runs_ms: Vec<f64>,
    pub flow_runs_ms: Vec<f64>,
}

impl BenchReport {
    pub fn table(&self) -> String {
        format!(
            "size {0}x{0}, {1} pairs, {2} repeats, {3} threads\n\
             pipeline     ms/pair (median)\n\
             phase_diff   {4:>12.3}\n\
             flow         {5:>12.3}\n\
             flow / phase_diff = {6:.2}x\n",
            self.size,
            self.pairs,
            self.repeats,
            self.threads,
            self.phase_diff_ms_per_pair,
            self.flow_ms_per_pair,
            self.ratio
        )
    }
}

fn per_pair_ms(total: Duration, pairs: usize) -> f64 {
    total.as_secs_f64() * 1e3 / pairs as f64
}

/// Times both pipelines on the same synthetic frames. Only computation is
/// timed; the filter bank is built once beforehand.
pub fn run_bench(args: &BenchArgs) -> CliResult<BenchReport> {
    if args.pairs == 0 || args.repeats == 0 {
        return Err(CliError::new(
            "benchmark",
            "--pairs and --repeats must be at least 1",
        ));
    }
    let seq = motion_sequence(args.size, args.size, args.pairs + 1, args.seed);
    let frames = seq.frames();
    let bank = build_filter_bank(args.size, args.size, &PyramidSpec::default())
        .stage("build filter bank")?;
    let decomposer = Decomposer::new(&bank);
    let cfg = PhaseDiffConfig::default();
    let params = HornSchunckParams::default();
    let (mut phase_runs, mut flow_runs) = (Vec::new(), Vec::new());
    for _ in 0..args.repeats {
        let start = Instant::now();
        for pair in frames.windows(2) {
            let fields =
                pair_phase_diff(&decomposer, &pair[0], &pair[1], &cfg).stage("phase difference")?;
            std::hint::black_box(fields);
        }
        phase_runs.push(per_pair_ms(start.elapsed(), args.pairs));
        let start = Instant::now();
        for pair in frames.windows(2) {
            let flow = horn_schunck(&pair[0], &pair[1], &params).stage("optical flow")?;
            std::hint::black_box(flow);
        }
        flow_runs.push(per_pair_ms(start.elapsed(), args.pairs));
    }
    let (p, f) = (
        median(&mut phase_runs.clone()),
        median(&mut flow_runs.clone()),
    );
    Ok(BenchReport {
        size: args.size,
        pairs: args.pairs,
        repeats: args.repeats,
        threads: rayon::current_num_threads(),
        phase_diff_ms_per_pair: p,
        flow_ms_per_pair: f,
        ratio: f / p,
        phase_diff_runs_ms: phase_runs,
        flow_runs_ms: flow_runs,
    })
}

fn bench_cmd(args: &BenchArgs, config: &RunConfig) -> CliResult<()> {
    let report = run_bench(args)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if args.json {
        print!("{json}");
    } else {
        print!("{}", report.table());
    }
    if let Some(dir) = &args.out {
        let mut out = OutputDir::create(dir)?;
        write_atomic(out.file("bench.json"), json.as_bytes()).stage("write report")?;
        config.write(&mut out)?;
        out.commit();
    }
    Ok(())
}

fn sweep_cmd(args: &SweepArgs, config: &RunConfig) -> CliResult<()> {
    let pipelines = args
        .pipelines
        .iter()
        .map(|p| p.parse::<MotionPipeline>())
        .collect::<Result<Vec<_>>>()
        .stage("parse pipelines")?;
    let seq = match &args.input {
        Some(path) => load_frames(path)?,
        None => motion_sequence(args.size, args.size, args.frames, args.sequence_seed),
    };
    let rows = robustness_sweep(
        &seq,
        &args.betas,
        &args.seeds,
        &pipelines,
        &SweepSettings::default(),
    )
    .stage("robustness sweep")?;
    let mut out = OutputDir::create(&args.out)?;
    write_atomic(out.file("sweep.csv"), sweep_csv(&rows).as_bytes()).stage("write sweep report")?;
    config.write(&mut out)?;
    println!(
        "beta    {}",
        pipelines
            .iter()
            .map(|p| format!("{:>12}", p.name()))
            .collect::<String>()
    );
    for &beta in &args.betas {
        let cells: String = pipelines
            .iter()
            .map(|&p| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.pipeline == p && r.beta == beta)
                    .map(|r| r.normalized_dev)
                    .collect();
                format!("{:>12.4}", v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        println!("{beta:<8}{cells}");
    }
    println!(
        "(mean normalized deviation over {} seeds; rows in {})",
        args.seeds.len(),
        out.root().display()
    );
    out.commit();
    Ok(())
}

fn replay_cmd(args: &ReplayArgs) -> CliResult<()> {
    let mut config = RunConfig::load(&args.sidecar)?;
    if config.version != phasemotion::VERSION {
        eprintln!(
            "note: recorded with version {}, running {}",
            config.version,
            phasemotion::VERSION
        );
    }
    if let Some(out) = &args.out {
        match &mut config.command {
            Command::Decompose(a) => a.out = out.clone(),
            Command::Phasediff(a) => a.out = out.clone(),
            Command::Flow(a) => a.out = out.clone(),
            Command::Corrupt(a) => a.out = out.clone(),
            Command::Sweep(a) => a.out = out.clone(),
            Command::Bench(a) => a.out = Some(out.clone()),
            Command::Ccc(_) | Command::Replay(_) => {}
        }
    }
    dispatch(config.command)
}
