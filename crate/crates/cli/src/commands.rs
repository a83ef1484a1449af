use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;

use baton_core::analysis::{classify_extraneous, compare_to_reference, ClassificationReport};
use baton_core::capture::source::ImuSourceKind;
use baton_core::capture::synth::{static_imu, SynthTiming};
use baton_core::capture::{
    calibrate_control, generate_with, load_session, replay_session, Config, PerturbationSpec, SourceDescriptor,
    SourceEvent, StreamMessage,
};
use baton_core::pipeline::{
    average_sequences, bar_length_s, bars_from_sequence, read_capture_csv, segment_bars, write_capture_csv,
    AverageTrajectory, BarSegment, CaptureSequence, DownbeatAnchor, LengthUnit, SequenceMeta,
};
use baton_core::geometry::ControlFrame;
use baton_core::{MovementClass, Rotation};

use crate::{CliResult, Failure};

/// Tempo, meter and point count after applying command-line overrides.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub tempo_bpm: f64,
    pub beats_per_bar: usize,
    pub n_points: usize,
}

pub fn layout(config: &Config, args: crate::BarArgs) -> CliResult<Layout> {
    let merged = Config {
        tempo_bpm: args.tempo.unwrap_or(config.tempo_bpm),
        beats_per_bar: args.beats.unwrap_or(config.beats_per_bar),
        n_points: args.n_points.unwrap_or(config.n_points),
        ..*config
    };
    merged.validate()?;
    Ok(Layout {
        tempo_bpm: merged.tempo_bpm,
        beats_per_bar: merged.beats_per_bar,
        n_points: merged.n_points,
    })
}

fn meta(l: &Layout) -> SequenceMeta<f64> {
    SequenceMeta {
        tempo_bpm: l.tempo_bpm,
        beats_per_bar: l.beats_per_bar,
        label: None,
        start_anchor_t: None,
    }
}

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string(v).expect("output serializes"));
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::runtime)
}

fn read_capture(l: &Layout, path: &Path) -> CliResult<CaptureSequence<f64>> {
    read_capture_csv(path, meta(l)).map_err(|e| {
        let f: Failure = e.into();
        Failure {
            error: f.error.context(path.display().to_string()),
            ..f
        }
    })
}

pub fn calibrate(
    config: &Config,
    source: &str,
    palm: Option<&str>,
    rate: Option<f64>,
    seconds: f64,
    out: &Path,
) -> CliResult {
    let rate = rate.unwrap_or(config.rate_hz);
    let desc = SourceDescriptor::parse(source, palm, rate)?;
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Failure::validation(anyhow!("--seconds must be positive")));
    }
    let wanted = (seconds * rate).round() as usize;
    let samples = match desc.imu {
        // the mock baton is held still, pointing up
        ImuSourceKind::Mock { .. } => static_imu(&Rotation::identity(), rate, wanted, 0.0),
        _ => {
            let mut src = desc.open(config.tempo_bpm, config.beats_per_bar)?;
            let mut samples = Vec::with_capacity(wanted);
            while samples.len() < wanted {
                match src.next_event()? {
                    Some(SourceEvent::Imu(s)) => samples.push(s),
                    Some(SourceEvent::Palm(_)) => {}
                    None => break,
                }
            }
            samples
        }
    };
    let control = calibrate_control(&samples, config.tilt_gain)?;
    let text = serde_json::to_string_pretty(&control).expect("control frame serializes");
    std::fs::write(out, text + "\n")
        .with_context(|| format!("writing {}", out.display()))
        .map_err(Failure::runtime)?;
    print_json(&serde_json::json!({ "samples": control.sample_count, "out": out }));
    Ok(())
}

pub struct GenerateArgs {
    pub class: MovementClass,
    pub bars: usize,
    pub tempo: Option<f64>,
    pub beats: Option<usize>,
    pub seed: u64,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
    pub noise: Option<f64>,
    pub rate: Option<f64>,
    pub unit: String,
}

pub fn generate(config: &Config, a: GenerateArgs, out: &Path) -> CliResult {
    let unit: LengthUnit = a.unit.parse()?;
    let timing = SynthTiming {
        rate_hz: a.rate.unwrap_or(config.rate_hz),
        ..SynthTiming::new(
            a.tempo.unwrap_or(config.tempo_bpm),
            a.beats.unwrap_or(config.beats_per_bar),
            a.bars,
        )
    };
    let mut spec = PerturbationSpec::default_for(a.class, a.seed, timing.tempo_bpm, timing.beats_per_bar);
    if let Some(v) = a.amplitude {
        spec.amplitude_m = v;
    }
    if let Some(v) = a.frequency {
        spec.frequency_hz = v;
    }
    if let Some(v) = a.noise {
        spec.noise_sigma_m = v;
    }
    let seq = generate_with(&timing, &spec)?;
    let mut w = create(out)?;
    write_capture_csv(&mut w, seq.frames(), unit)?;
    print_json(&serde_json::json!({
        "class": a.class,
        "frames": seq.len(),
        "bars": a.bars,
        "out": out,
    }));
    Ok(())
}

pub fn import(l: &Layout, path: &Path) -> CliResult {
    let seq = read_capture(l, path)?;
    let frames = seq.frames();
    let bars = segment_bars(&seq)?;
    let usable = bars_from_sequence(&seq, l.n_points, DownbeatAnchor::Auto)?;
    print_json(&serde_json::json!({
        "frames": frames.len(),
        "duration_s": frames[frames.len() - 1].t - frames[0].t,
        "bar_length_s": bar_length_s(l.tempo_bpm, l.beats_per_bar),
        "complete_bars": bars.len(),
        "resampled_bars": usable.len(),
        "n_points": l.n_points,
    }));
    Ok(())
}

pub fn average(l: &Layout, inputs: &[PathBuf], label: MovementClass, out: &Path) -> CliResult {
    let seqs = inputs.iter().map(|p| read_capture(l, p)).collect::<CliResult<Vec<_>>>()?;
    let avg = average_sequences(&seqs, label, l.n_points)?;
    avg.save(out)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(Failure::runtime)?;
    print_json(&serde_json::json!({
        "label": label,
        "sample_bars": avg.sample_bars(),
        "n": avg.n(),
        "out": out,
    }));
    Ok(())
}

fn selected_bars(l: &Layout, path: &Path, index: Option<usize>) -> CliResult<Vec<(String, BarSegment<f64>)>> {
    let seq = read_capture(l, path)?;
    let bars = bars_from_sequence(&seq, l.n_points, DownbeatAnchor::Auto)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let named = |(k, b): (usize, BarSegment<f64>)| (format!("{stem}#{k}"), b);
    match index {
        None => Ok(bars.into_iter().enumerate().map(named).collect()),
        Some(k) if k < bars.len() => Ok(vec![named((k, bars[k].clone()))]),
        Some(k) => Err(Failure::validation(anyhow!(
            "{} has {} complete bars; bar {k} does not exist",
            path.display(),
            bars.len()
        ))),
    }
}

fn load_reference(path: &Path) -> CliResult<AverageTrajectory<f64>> {
    AverageTrajectory::load(path).map_err(|e| {
        let f: Failure = e.into();
        Failure {
            error: f.error.context(path.display().to_string()),
            ..f
        }
    })
}

/// Every `.json` reference in a directory, in file-name order.
pub fn load_reference_dir(dir: &Path) -> CliResult<Vec<AverageTrajectory<f64>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .map_err(Failure::runtime)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::validation(anyhow!("no reference files in {}", dir.display())));
    }
    paths.iter().map(|p| load_reference(p)).collect()
}

/// Control orientation as written by `calibrate`.
pub fn load_control(path: &Path) -> CliResult<ControlFrame<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::runtime)?;
    serde_json::from_str(&text)
        .with_context(|| format!("control file {}", path.display()))
        .map_err(Failure::validation)
}

pub fn compare(l: &Layout, bar: &Path, index: Option<usize>, reference: &Path) -> CliResult {
    let reference = load_reference(reference)?;
    for (bar_id, b) in selected_bars(l, bar, index)? {
        let c = compare_to_reference(&b, &reference)?;
        print_json(&serde_json::json!({
            "bar_id": bar_id,
            "reference": reference.label,
            "mean_m": c.profile.mean_m,
            "max_m": c.profile.max_m,
            "per_beat_m": c.profile.per_beat_mean_m,
            "shift": c.shift,
        }));
    }
    Ok(())
}

pub fn classify(l: &Layout, bar: &Path, index: Option<usize>, refs: &Path) -> CliResult {
    let refs = load_reference_dir(refs)?;
    for (bar_id, b) in selected_bars(l, bar, index)? {
        let result = classify_extraneous(&b, &refs)?;
        print_json(&ClassificationReport { bar_id, result });
    }
    Ok(())
}

pub fn replay(path: &Path) -> CliResult {
    let record = load_session(path)?;
    let messages = replay_session(&record)?;
    let mut tip = Vec::new();
    let mut bars = Vec::new();
    for m in messages {
        match m {
            StreamMessage::Pose { t, tip: p, .. } => tip.push(baton_core::pipeline::CaptureFrame::new(t, p)),
            StreamMessage::BarAnalysis { bar_index, result } => bars.push((bar_index, result)),
            StreamMessage::Status { .. } => {}
        }
    }
    let tip_matches = tip == record.tip;
    let bars_match = bars == record.bars;
    print_json(&serde_json::json!({
        "samples": record.events.len(),
        "poses": tip.len(),
        "bars": bars.len(),
        "tip_matches": tip_matches,
        "bars_match": bars_match,
        "chosen": bars.iter().map(|(_, r)| r.chosen()).collect::<Vec<_>>(),
    }));
    if tip_matches && bars_match {
        Ok(())
    } else {
        Err(Failure::runtime(anyhow!("replay diverged from the recorded session")))
    }
}
