use std::fmt::Write as _;

use super::{MethodStats, ResultRow};

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 13] = [
    "image",
    "kernel",
    "radius",
    "alpha",
    "sigma",
    "q",
    "g",
    "method",
    "seed_count",
    "psnr_mean_db",
    "psnr_std_db",
    "iters_mean",
    "wall_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Formats `v` with `digits` significant digits in fixed notation, or in
/// exponent notation when it is very small or very large.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.999995 -> 10.00000).
    if s.trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, str::len)
        > (exp + 1).max(1) as usize
        && decimals > 0
    {
        return format!("{:.*}", decimals - 1, v);
    }
    s
}

fn stat_fields(m: &MethodStats) -> [String; 5] {
    match &m.stats {
        Some(s) => [
            s.seed_count.to_string(),
            format_sig(s.psnr_mean_db, 6),
            format_sig(s.psnr_std_db, 6),
            format_sig(s.iters_mean, 6),
            format_sig(s.wall_s, 6),
        ],
        None => {
            let marker = if m.skipped { "skipped" } else { "failed" };
            [
                "0".into(),
                marker.into(),
                marker.into(),
                marker.into(),
                marker.into(),
            ]
        }
    }
}

fn emit_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for row in rows {
        for m in row.lines() {
            let p = &row.noise;
            let mut rec = vec![
                row.image.clone(),
                row.kernel.to_string(),
                format_sig(row.kernel.radius(), 6),
                format_sig(p.alpha, 6),
                format_sig(p.sigma, 6),
                format_sig(p.q, 6),
                format_sig(p.g, 6),
                m.method.clone(),
            ];
            rec.extend(stat_fields(m));
            w.write_record(&rec).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn method_label(name: &str) -> &str {
    match name {
        "input" => "Input",
        "awgn-tv" => "AWGN+TV",
        "prop-tv" => "Prop.+TV",
        "prop-external" => "Prop.+external",
        other => other,
    }
}

/// Published-table layout: one block per noise setting, one column per
/// (image, kernel) cell and one line per method.
fn emit_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|g| g[0].noise == row.noise) {
            Some(g) => g.push(row),
            None => groups.push(vec![row]),
        }
    }
    if groups.is_empty() {
        out.push_str("| alpha | sigma | quantized | method |\n|---|---|---|---|\n");
        return out;
    }
    for (gi, group) in groups.iter().enumerate() {
        if gi > 0 {
            out.push('\n');
        }
        let p = group[0].noise;
        out.push_str("| alpha | sigma | quantized | method |");
        for row in group {
            let kernel = match row.kernel.radius() {
                r if r > 0.0 => format!("r={r}"),
                _ => row.kernel.to_string(),
            };
            let _ = write!(out, " {} {} |", row.image, kernel);
        }
        out.push_str("\n|---|---|---|---|");
        out.push_str(&"---|".repeat(group.len()));
        out.push('\n');
        let mut names: Vec<&str> = Vec::new();
        for row in group {
            for m in row.lines() {
                if !names.contains(&m.method.as_str()) {
                    names.push(&m.method);
                }
            }
        }
        for name in names {
            let q = if p.is_quantized() { "yes" } else { "no" };
            let _ = write!(
                out,
                "| {} | {} | {q} | {} |",
                format_sig(p.alpha, 6),
                format_sig(p.sigma, 6),
                method_label(name)
            );
            for row in group {
                let cell = row.lines().find(|m| m.method == name);
                let text = match cell {
                    Some(MethodStats { stats: Some(s), .. }) => format!("{:.2}", s.psnr_mean_db),
                    Some(MethodStats { skipped: true, .. }) => "skipped".into(),
                    Some(_) => "failed".into(),
                    None => "".into(),
                };
                let _ = write!(out, " {text} |");
            }
            out.push('\n');
        }
    }
    out
}

/// Renders result rows. CSV has one line per (row, method), the input
/// measurement first; numeric fields carry 6 significant digits.
pub fn emit_table(rows: &[ResultRow], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(rows),
        TableFormat::Markdown => emit_markdown(rows),
    }
}
