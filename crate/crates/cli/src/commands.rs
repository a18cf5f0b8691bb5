use std::fmt::Write as _;
use std::path::Path;

use irlink_core::controller::stability_region;
use irlink_core::scenario::{link_test, run_scenario, stability_sweep, AudioReport, StabilityReport};
use irlink_core::signal_chain::{design_bandpass, discretize_with, write_wav};
use irlink_core::tf::{frequency_response, group_delay, log_space};
use irlink_core::{ExperimentConfig, Result};

use crate::artifacts::OutDir;
use crate::Verb;

/// Runs `verb`, writes its artifacts under `out` and returns a summary for
/// stdout.
pub fn execute(verb: Verb, cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<String> {
    let dir = OutDir::create(out)?;
    match verb {
        Verb::Simulate => simulate(cfg, &dir),
        Verb::SweepStability => sweep(cfg, &dir, jobs),
        Verb::StabilityMap => map(cfg, &dir),
        Verb::FilterResponse => filter_response(cfg, &dir),
        Verb::LinkTest => link(cfg, &dir, jobs),
    }
}

fn deg(rad: f64) -> f64 {
    rad.to_degrees()
}

fn stability_lines(prefix: &str, r: &StabilityReport) -> String {
    let steady = r.steady_angle.map_or("none".to_string(), |a| deg(a).to_string());
    format!(
        "{prefix}set_angle_deg = {}\n{prefix}classification = {}\n{prefix}steady_angle_deg = {steady}\n{prefix}oscillation_amplitude_deg = {}\n",
        deg(r.set_angle),
        r.classification.name(),
        deg(r.oscillation_amplitude)
    )
}

fn audio_lines(prefix: &str, r: &AudioReport) -> String {
    format!(
        "{prefix}classification = {}\n{prefix}dropout_fraction = {}\n{prefix}mean_frame_correlation = {}\n{prefix}snr_db = {}\n{prefix}lag_samples = {}\n",
        r.classification.name(),
        r.dropout_fraction,
        r.mean_frame_correlation,
        r.snr_db,
        r.lag
    )
}

fn simulate(cfg: &ExperimentConfig, dir: &OutDir) -> Result<String> {
    const FILES: [&str; 3] = ["timeseries.csv", "received.wav", "report.txt"];
    let scenario = cfg.scenario()?;
    dir.write_manifest(Verb::Simulate.name(), cfg, &FILES)?;
    let r = run_scenario(&scenario)?;
    dir.write(FILES[0], r.series.to_csv().as_bytes())?;
    dir.write_with(FILES[1], |p| write_wav(p, &r.received, scenario.amp_clip))?;
    let mut report = format!("aborted = {}\n", r.aborted);
    report.push_str(&stability_lines("stability.", &r.stability));
    report.push_str(&audio_lines("audio.", &r.audio));
    dir.write(FILES[2], report.as_bytes())?;
    Ok(report)
}

fn sweep(cfg: &ExperimentConfig, dir: &OutDir, jobs: usize) -> Result<String> {
    const FILE: &str = "sweep_stability.csv";
    let base = cfg.sweep_scenario()?;
    let angles = cfg.sweep_angles()?;
    dir.write_manifest(Verb::SweepStability.name(), cfg, &[FILE])?;
    let reports = stability_sweep(&base, &angles, jobs)?;
    let mut csv = String::from("set_angle_deg,classification,steady_angle_deg,oscillation_amplitude_deg\n");
    let mut table = format!("{:>10}  {:<18}  {:>10}  {:>9}\n", "set (deg)", "classification", "steady", "amp (deg)");
    for r in &reports {
        let steady = r.steady_angle.map(deg);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            deg(r.set_angle),
            r.classification.name(),
            steady.map_or(String::new(), |s| s.to_string()),
            deg(r.oscillation_amplitude)
        );
        let _ = writeln!(
            table,
            "{:>10.1}  {:<18}  {:>10}  {:>9.2}",
            deg(r.set_angle),
            r.classification.name(),
            steady.map_or("-".into(), |s| format!("{s:.2}")),
            deg(r.oscillation_amplitude)
        );
    }
    dir.write(FILE, csv.as_bytes())?;
    Ok(table)
}

fn map(cfg: &ExperimentConfig, dir: &OutDir) -> Result<String> {
    const FILE: &str = "stability_map.csv";
    let params = cfg.pendulum()?;
    dir.write_manifest(Verb::StabilityMap.name(), cfg, &[FILE])?;
    let m = stability_region(
        &params,
        (cfg.map_kp_min, cfg.map_kp_max),
        (cfg.map_kd_min, cfg.map_kd_max),
        cfg.map_grid_n,
    )?;
    dir.write(FILE, m.to_csv().as_bytes())?;
    let stable = m.stable.iter().filter(|&&s| s).count();
    Ok(format!("stable cells: {stable} of {}\n", m.stable.len()))
}

fn response_csv(rows: impl Iterator<Item = (f64, f64, f64)>) -> String {
    let mut csv = String::from("freq_hz,mag_db,phase_rad\n");
    for (f, m, p) in rows {
        let _ = writeln!(csv, "{f},{m},{p}");
    }
    csv
}

fn filter_response(cfg: &ExperimentConfig, dir: &OutDir) -> Result<String> {
    const FILES: [&str; 3] = ["filter_response.csv", "filter_response_digital.csv", "filter_report.txt"];
    let tf = design_bandpass(&cfg.filter())?;
    let digital = discretize_with(&tf, cfg.audio_rate_hz, cfg.prewarp)?;
    let freqs = log_space(cfg.response_f_min, cfg.response_f_max, cfg.response_points)?;
    dir.write_manifest(Verb::FilterResponse.name(), cfg, &FILES)?;

    let analog = frequency_response(&tf, &freqs)?;
    dir.write(
        FILES[0],
        response_csv(analog.iter().map(|p| (p.freq_hz, p.mag_db, p.phase_rad))).as_bytes(),
    )?;
    let nyquist = cfg.audio_rate_hz / 2.0;
    let dig = freqs.iter().filter(|&&f| f < nyquist).map(|&f| {
        let h = digital.response(f);
        (f, 20.0 * h.norm().log10(), h.arg())
    });
    dir.write(FILES[1], response_csv(dig).as_bytes())?;

    let delay = group_delay(&tf, cfg.delay_freq)?;
    let (peak_f, peak_db) = analog
        .iter()
        .map(|p| (p.freq_hz, p.mag_db))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let band: Vec<f64> = analog
        .iter()
        .filter(|p| p.mag_db >= peak_db - 3.0)
        .map(|p| p.freq_hz)
        .collect();
    let report = format!(
        "order = {}\ngroup_delay_s = {delay}\ngroup_delay_freq_hz = {}\npeak_gain_db = {peak_db}\npeak_freq_hz = {peak_f}\nband_3db_low_hz = {}\nband_3db_high_hz = {}\n",
        tf.order(),
        cfg.delay_freq,
        band.first().copied().unwrap_or(f64::NAN),
        band.last().copied().unwrap_or(f64::NAN),
    );
    dir.write(FILES[2], report.as_bytes())?;
    Ok(report)
}

fn link(cfg: &ExperimentConfig, dir: &OutDir, jobs: usize) -> Result<String> {
    const FILE: &str = "link_test.csv";
    let base = cfg.scenario()?;
    let profiles = cfg.link_profiles()?;
    dir.write_manifest(Verb::LinkTest.name(), cfg, &[FILE])?;
    let rows = link_test(&base, &profiles, jobs)?;
    let mut csv = String::from(
        "vibration,controller,classification,dropout_fraction,mean_frame_correlation,snr_db,lag_samples\n",
    );
    let mut table = format!("{:<13}  {:<20}  {:<20}\n", "vibration", "controller on", "controller off");
    for row in &rows {
        for (state, r) in [("on", &row.on), ("off", &row.off)] {
            let _ = writeln!(
                csv,
                "{},{state},{},{},{},{},{}",
                row.vibration.kind.name(),
                r.classification.name(),
                r.dropout_fraction,
                r.mean_frame_correlation,
                r.snr_db,
                r.lag
            );
        }
        let _ = writeln!(
            table,
            "{:<13}  {:<20}  {:<20}",
            row.vibration.kind.name(),
            row.on.classification.name(),
            row.off.classification.name()
        );
    }
    dir.write(FILE, csv.as_bytes())?;
    Ok(table)
}
