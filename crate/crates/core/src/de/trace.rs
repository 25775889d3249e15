//! Trace files: header `eval_index,best_so_far`, one row per evaluation,
//! 1-based index.

use std::path::Path;

use super::{DeError, VariantId};

pub fn trace_file_name(variant: VariantId, scenario: u32, seed: u64) -> String {
    format!("{variant}_{scenario}_{seed}.csv")
}

pub fn write_trace_csv(path: &Path, best_so_far: &[f64]) -> Result<(), DeError> {
    let mut out = String::with_capacity(24 * (best_so_far.len() + 1));
    out.push_str("eval_index,best_so_far\n");
    for (i, v) in best_so_far.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<f64>, DeError> {
    let bad = |message: String| DeError::Trace {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "eval_index,best_so_far" => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let mut values = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {}: expected two columns", k + 2)))?;
        let idx: usize = idx.trim().parse().map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
        if idx != values.len() + 1 {
            return Err(bad(format!("line {}: eval_index {idx} out of sequence", k + 2)));
        }
        let v: f64 = val.trim().parse().map_err(|e| bad(format!("line {}: {e}", k + 2)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(values)
}
