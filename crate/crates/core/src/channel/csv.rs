//! Detection-matrix CSV.
//!
//! ```text
//! # dim=<d> protocol=<tag> mode=<analytic|sampled> shots=<n> seed=<s>
//! # contexts=<id>:<complete|partial>:<ncols>;<id>:...
//! state,<id>:<label>,<id>:<label>,...
//! <row label>,<p>,<p>,...
//! ```
//!
//! Tags use `[A-Za-z0-9_+-.]` only, so `,`, `:`, `;`, `=` and spaces are
//! unambiguous separators. Probabilities are written with Rust's shortest
//! round-trip float formatting. Analytic matrices record `shots=0 seed=0`.

use std::fs;
use std::path::Path;

use super::detection::valid_tag;
use super::{ContextColumns, DetectionMatrix, SamplingMode};
use crate::error::{Error, Result};

pub fn to_csv(dm: &DetectionMatrix) -> String {
    let (mode, shots, seed) = match dm.mode() {
        SamplingMode::Analytic => ("analytic", 0, 0),
        SamplingMode::Sampled { shots, seed } => ("sampled", shots, seed),
    };
    let mut out = format!(
        "# dim={} protocol={} mode={mode} shots={shots} seed={seed}\n",
        dm.dim(),
        dm.protocol()
    );
    let ctx: Vec<String> = dm
        .contexts()
        .iter()
        .map(|c| {
            format!(
                "{}:{}:{}",
                c.id,
                if c.complete { "complete" } else { "partial" },
                c.labels.len()
            )
        })
        .collect();
    out.push_str(&format!("# contexts={}\n", ctx.join(";")));
    out.push_str("state");
    for c in dm.contexts() {
        for l in &c.labels {
            out.push_str(&format!(",{}:{}", c.id, l));
        }
    }
    out.push('\n');
    for (label, row) in dm.row_labels().iter().zip(dm.rows()) {
        out.push_str(label);
        for p in row {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(dm: &DetectionMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(dm))?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DetectionMatrix> {
    parse_csv(&fs::read_to_string(path)?)
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits `key=value` fields of a `# ` metadata line, checking keys in order.
/// Returns values with their 1-based column.
fn metadata<'a>(line_no: usize, line: &'a str, keys: &[&str]) -> Result<Vec<(&'a str, usize)>> {
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| perr(line_no, 1, "expected metadata line starting with `# `"))?;
    let fields: Vec<&str> = body.split(' ').collect();
    if fields.len() != keys.len() {
        return Err(perr(
            line_no,
            3,
            format!("expected {} fields ({}), found {}", keys.len(), keys.join(" "), fields.len()),
        ));
    }
    let mut col = 3;
    let mut out = Vec::new();
    for (field, key) in fields.iter().zip(keys) {
        let value = field
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| perr(line_no, col, format!("expected `{key}=`, found `{field}`")))?;
        out.push((value, col + key.len() + 1));
        col += field.len() + 1;
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(line: usize, col: usize, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| perr(line, col, format!("invalid {what} `{s}`")))
}

pub fn parse_csv(text: &str) -> Result<DetectionMatrix> {
    let lines: Vec<&str> = text.lines().collect();
    let get = |i: usize, what: &str| -> Result<&str> {
        lines
            .get(i)
            .copied()
            .ok_or_else(|| perr(i + 1, 1, format!("missing {what}")))
    };

    let l1 = get(0, "metadata header")?;
    if !l1.starts_with("# ") {
        return Err(perr(1, 1, "missing metadata header `# dim=...`"));
    }
    let meta = metadata(1, l1, &["dim", "protocol", "mode", "shots", "seed"])?;
    let dim: usize = parse_num(1, meta[0].1, "dim", meta[0].0)?;
    let protocol = meta[1].0;
    if !valid_tag(protocol) {
        return Err(perr(1, meta[1].1, format!("invalid protocol tag `{protocol}`")));
    }
    let shots: u64 = parse_num(1, meta[3].1, "shots", meta[3].0)?;
    let seed: u64 = parse_num(1, meta[4].1, "seed", meta[4].0)?;
    let mode = match meta[2].0 {
        "analytic" if shots == 0 && seed == 0 => SamplingMode::Analytic,
        "analytic" => return Err(perr(1, meta[3].1, "analytic mode requires shots=0 seed=0")),
        "sampled" => SamplingMode::Sampled { shots, seed },
        other => return Err(perr(1, meta[2].1, format!("unknown mode `{other}`"))),
    };

    let l2 = get(1, "context map")?;
    let cmeta = metadata(2, l2, &["contexts"])?;
    let mut contexts: Vec<ContextColumns> = Vec::new();
    let mut col = cmeta[0].1;
    for part in cmeta[0].0.split(';') {
        let pieces: Vec<&str> = part.split(':').collect();
        if pieces.len() != 3 {
            return Err(perr(2, col, format!("context entry `{part}` must be <id>:<complete|partial>:<ncols>")));
        }
        if !valid_tag(pieces[0]) {
            return Err(perr(2, col, format!("invalid context id `{}`", pieces[0])));
        }
        let complete = match pieces[1] {
            "complete" => true,
            "partial" => false,
            other => return Err(perr(2, col + pieces[0].len() + 1, format!("unknown completeness `{other}`"))),
        };
        let ncols: usize = parse_num(2, col + pieces[0].len() + pieces[1].len() + 2, "column count", pieces[2])?;
        if ncols == 0 {
            return Err(perr(2, col, format!("context `{}` has zero columns", pieces[0])));
        }
        if contexts.iter().any(|c| c.id == pieces[0]) {
            return Err(perr(2, col, format!("duplicate context `{}`", pieces[0])));
        }
        contexts.push(ContextColumns {
            id: pieces[0].to_string(),
            labels: vec![String::new(); ncols],
            complete,
        });
        col += part.len() + 1;
    }

    let l3 = get(2, "column header")?;
    let cells: Vec<&str> = l3.split(',').collect();
    if cells[0] != "state" {
        return Err(perr(3, 1, format!("column header must start with `state`, found `{}`", cells[0])));
    }
    let n_cols: usize = contexts.iter().map(|c| c.labels.len()).sum();
    if cells.len() - 1 != n_cols {
        return Err(perr(3, 1, format!("context map declares {n_cols} columns, header has {}", cells.len() - 1)));
    }
    let mut col = cells[0].len() + 2;
    let mut idx = 1;
    for ctx in contexts.iter_mut() {
        for slot in ctx.labels.iter_mut() {
            let cell = cells[idx];
            let (id, label) = cell
                .split_once(':')
                .ok_or_else(|| perr(3, col, format!("column `{cell}` must be <context>:<label>")))?;
            if id != ctx.id {
                return Err(perr(3, col, format!("unknown context tag `{id}` (expected `{}`)", ctx.id)));
            }
            if !valid_tag(label) {
                return Err(perr(3, col + id.len() + 1, format!("invalid column label `{label}`")));
            }
            *slot = label.to_string();
            col += cell.len() + 1;
            idx += 1;
        }
    }

    let mut row_labels = Vec::new();
    let mut entries = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(3) {
        let line_no = i + 1;
        if line.is_empty() {
            return Err(perr(line_no, 1, "empty line"));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_cols + 1 {
            return Err(perr(line_no, 1, format!("expected {} fields, found {}", n_cols + 1, cells.len())));
        }
        if !valid_tag(cells[0]) {
            return Err(perr(line_no, 1, format!("invalid row label `{}`", cells[0])));
        }
        let mut col = cells[0].len() + 2;
        let mut row = Vec::with_capacity(n_cols);
        for cell in &cells[1..] {
            let p: f64 = parse_num(line_no, col, "probability", cell)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(perr(line_no, col, format!("probability {p} outside [0, 1]")));
            }
            row.push(p);
            col += cell.len() + 1;
        }
        row_labels.push(cells[0].to_string());
        entries.push(row);
    }
    if entries.is_empty() {
        return Err(perr(4, 1, "no data rows"));
    }
    DetectionMatrix::new(dim, protocol, mode, row_labels, contexts, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(seed: u64) -> DetectionMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let contexts = vec![
            ContextColumns { id: "z".into(), labels: vec!["0".into(), "1".into(), "2".into()], complete: true },
            ContextColumns { id: "0-1".into(), labels: vec!["+".into(), "-".into()], complete: false },
        ];
        let mut entries = Vec::new();
        for _ in 0..5 {
            let a: f64 = rng.gen_range(0.0..0.5);
            let b: f64 = rng.gen_range(0.0..0.5);
            let x: f64 = rng.gen();
            let y: f64 = rng.gen_range(0.0..(1.0 - x));
            entries.push(vec![a, b, 1.0 - a - b, x, y]);
        }
        DetectionMatrix::new(
            3,
            "test",
            SamplingMode::Sampled { shots: 100, seed },
            (0..5).map(|i| format!("r{i}")).collect(),
            contexts,
            entries,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for seed in 0..10 {
            let dm = random_matrix(seed);
            let back = parse_csv(&to_csv(&dm)).unwrap();
            assert_eq!(back, dm);
            for (r1, r2) in back.rows().iter().zip(dm.rows()) {
                for (a, b) in r1.iter().zip(r2) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let dm = random_matrix(99);
        let dir = std::env::temp_dir().join(format!("hdqkd-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dm.csv");
        save_csv(&dm, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap(), dm);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_header_names_line_one() {
        let text = to_csv(&random_matrix(1));
        let without: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        match parse_csv(&without) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn unknown_context_tag_is_named() {
        let text = to_csv(&random_matrix(2)).replacen(",0-1:+", ",q:+", 1);
        let err = parse_csv(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(err.to_string().contains("`q`"), "{err}");
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let good = to_csv(&random_matrix(3));
        let cases = [
            good.replacen("mode=sampled", "mode=guess", 1),
            good.replacen("shots=100", "shots=x", 1),
            good.replacen("z:complete:3", "z:full:3", 1),
            good.replacen("z:complete:3", "z:complete:4", 1),
            good.replacen("r2,", "r2,0.1,", 1),
            good.replacen("r3,", "r 3,", 1),
            good.replacen("state,", "label,", 1),
            format!("{good}\n"),
        ];
        for (i, case) in cases.iter().enumerate() {
            assert!(matches!(parse_csv(case), Err(Error::Parse { .. })), "case {i}: {:?}", parse_csv(case));
        }
        let bad_prob = good.replacen("r0,", "r0,1.5,", 1);
        assert!(parse_csv(&bad_prob).is_err());
    }
}
