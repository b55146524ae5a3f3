//! Before/after trim plots: one CSV and one SVG per arm.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::episode::Episode;
use super::trim::displacements;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotFiles {
    pub csv: PathBuf,
    pub svg_left: PathBuf,
    pub svg_right: PathBuf,
}

/// Number of leading steps of `before` that `after` no longer has.
fn trimmed_prefix(before: &Episode, after: &Episode) -> io::Result<usize> {
    let offset = before.len().checked_sub(after.len());
    match offset {
        Some(k) if before.timestamps_ns[k..] == after.timestamps_ns[..] => Ok(k),
        _ => Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "`after` is not a suffix of `before`",
        )),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Writes `<prefix>_displacement.csv`, `<prefix>_left.svg` and `<prefix>_right.svg`.
///
/// CSV rows are `step,dl,dr,kept` for steps 1..T of `before`.
pub fn emit_trim_plot(
    before: &Episode,
    after: &Episode,
    prefix: impl AsRef<Path>,
) -> io::Result<PlotFiles> {
    let prefix = prefix.as_ref();
    let dropped = trimmed_prefix(before, after)?;
    let d_before = displacements(before);
    let d_after = displacements(after);

    let mut csv = String::from("step,dl,dr,kept\n");
    for (i, [l, r]) in d_before.iter().enumerate() {
        let step = i + 1;
        let _ = writeln!(csv, "{step},{l:e},{r:e},{}", u8::from(step >= dropped));
    }
    let files = PlotFiles {
        csv: with_suffix(prefix, "_displacement.csv"),
        svg_left: with_suffix(prefix, "_left.svg"),
        svg_right: with_suffix(prefix, "_right.svg"),
    };
    fs::write(&files.csv, csv)?;
    for (arm, (name, path)) in [("left", &files.svg_left), ("right", &files.svg_right)]
        .into_iter()
        .enumerate()
    {
        let svg = render_svg(name, before.len(), &d_before, &d_after, dropped, arm);
        fs::write(path, svg)?;
    }
    Ok(files)
}

const W: f64 = 720.0;
const H: f64 = 260.0;
const PAD: f64 = 40.0;

fn render_svg(
    arm: &str,
    steps: usize,
    before: &[[f64; 2]],
    after: &[[f64; 2]],
    dropped: usize,
    k: usize,
) -> String {
    let x_max = steps.saturating_sub(1).max(1) as f64;
    let y_max = before.iter().map(|d| d[k]).fold(0.0, f64::max).max(1e-9);
    let sx = |step: f64| PAD + step / x_max * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - v / y_max * (H - 2.0 * PAD);
    let points = |series: &[[f64; 2]], shift: usize| {
        series
            .iter()
            .enumerate()
            .map(|(i, d)| format!("{:.2},{:.2}", sx((i + 1 + shift) as f64), sy(d[k])))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<title>{arm} end-effector displacement per step</title>"#
    );
    let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<g stroke="#444" stroke-width="1"><line x1="{PAD}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{y0}"/></g>"##,
        y0 = H - PAD,
        x1 = W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="12">{arm}: |dp| per step (max {y_max:.3e} m)</text>"#
    );
    let _ = writeln!(
        s,
        r##"<polyline class="before" fill="none" stroke="#999999" stroke-width="3" points="{}"/>"##,
        points(before, 0)
    );
    let _ = writeln!(
        s,
        r##"<polyline class="after" fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points(after, dropped)
    );
    if dropped > 0 {
        let x = sx(dropped as f64);
        let _ = writeln!(
            s,
            r##"<line class="trim-marker" x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{y0}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
            y0 = H - PAD
        );
    }
    s.push_str("</svg>\n");
    s
}
