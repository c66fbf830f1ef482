use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use super::{Implicant, Lit, Minterms};
use crate::error::{CsgError, Result};

/// PLA text with one row per inside minterm. Column `i` is `vars[i]`.
pub fn emit_pla(m: &Minterms) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".i {}", m.n());
    let _ = writeln!(out, ".o 1");
    for &on in &m.on {
        let row: String = (0..m.n()).map(|i| if on >> i & 1 == 1 { '1' } else { '0' }).collect();
        let _ = writeln!(out, "{row} 1");
    }
    let _ = writeln!(out, ".e");
    out
}

/// Reads the rows with output `1`; `-` marks an absent literal.
pub fn parse_pla(text: &str) -> Result<Vec<Implicant>> {
    let mut inputs: Option<usize> = None;
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix(".i ") {
            inputs = Some(rest.trim().parse().map_err(|_| CsgError::Parse(format!("bad .i line: {line}")))?);
            continue;
        }
        if line == ".e" || line == ".end" {
            break;
        }
        if line.starts_with('.') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(cube), Some(output)) = (fields.next(), fields.next()) else {
            return Err(CsgError::Parse(format!("bad PLA row: {line}")));
        };
        let n = inputs.ok_or_else(|| CsgError::Parse("PLA row before .i".into()))?;
        if cube.len() != n {
            return Err(CsgError::Parse(format!("row has {} inputs, expected {n}", cube.len())));
        }
        if output != "1" {
            continue;
        }
        let lits = cube
            .chars()
            .map(|c| match c {
                '1' => Ok(Lit::Positive),
                '0' => Ok(Lit::Negated),
                '-' => Ok(Lit::Absent),
                other => Err(CsgError::Parse(format!("bad PLA character {other:?}"))),
            })
            .collect::<Result<Vec<Lit>>>()?;
        out.push(Implicant::from_lits(&lits));
    }
    Ok(out)
}

/// Writes the inside minterms to a temporary PLA file, runs `binary` on it
/// and parses the cover it prints.
pub fn run_external_minimizer(binary: &Path, m: &Minterms) -> Result<Vec<Implicant>> {
    let dir = std::env::temp_dir().join(format!("csgopt-pla-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let input = dir.join(format!("remaining-{:x}.pla", m.on.iter().fold(0u128, |a, b| a.wrapping_mul(31) ^ b)));
    std::fs::write(&input, emit_pla(m))?;
    let output = Command::new(binary)
        .arg(&input)
        .output()
        .map_err(|e| CsgError::External(format!("cannot run {}: {e}", binary.display())));
    let _ = std::fs::remove_file(&input);
    let output = output?;
    if !output.status.success() {
        return Err(CsgError::External(format!("{} exited with {}", binary.display(), output.status)));
    }
    parse_pla(&String::from_utf8_lossy(&output.stdout))
}
