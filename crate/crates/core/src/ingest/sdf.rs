//! CTfile V2000 molfile / SD file reader.
//!
//! Only the pieces the featurizer needs are kept: element symbols, formal
//! charges (atom block or `M  CHG`), the hydrogen count query field, bonds with
//! their order, and SD data items.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub symbol: String,
    pub charge: i32,
    /// Raw `hhh` field of the atom line (hydrogen count query, 0 = unset).
    pub hydrogen_query: u8,
}

/// Bond between 1-based atom indices `u` and `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
    /// 1 single, 2 double, 3 triple, 4 aromatic.
    pub order: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MolRecord {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// SD data items (`> <NAME>` blocks).
    pub data: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct SdfError {
    pub line: usize,
    pub kind: SdfErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdfErrorKind {
    #[error("record truncated: {0}")]
    Truncated(String),
    #[error("malformed counts line")]
    MalformedCounts,
    #[error("unsupported CTfile version {0:?}, only V2000 is read")]
    UnsupportedVersion(String),
    #[error("malformed atom line")]
    MalformedAtom,
    #[error("invalid charge code {0}")]
    InvalidChargeCode(i32),
    #[error("malformed bond line")]
    MalformedBond,
    #[error("bond {0}-{1} references a missing atom")]
    BondOutOfRange(usize, usize),
    #[error("duplicate bond {0}-{1}")]
    DuplicateBond(usize, usize),
    #[error("unsupported bond type {0}")]
    UnsupportedBondType(u8),
    #[error("malformed property line")]
    MalformedProperty,
}

/// Parses every record in an SD stream. A bad record yields an error carrying
/// the offending line number and parsing resumes at the next `$$$$`.
pub fn parse_sdf<R: BufRead>(input: R) -> std::io::Result<Vec<Result<MolRecord, SdfError>>> {
    let mut out = Vec::new();
    let mut block: Vec<String> = Vec::new();
    let mut start = 1;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim_end() == "$$$$" {
            out.push(parse_record(&block, start));
            block.clear();
            start = i + 2;
        } else {
            block.push(line);
        }
    }
    if block.iter().any(|l| !l.trim().is_empty()) {
        out.push(parse_record(&block, start));
    }
    Ok(out)
}

pub fn parse_sdf_str(input: &str) -> Vec<Result<MolRecord, SdfError>> {
    parse_sdf(input.as_bytes()).expect("reading from memory cannot fail")
}

fn field(line: &str, from: usize, to: usize) -> &str {
    let end = to.min(line.len());
    if from >= end {
        return "";
    }
    line.get(from..end).unwrap_or("").trim()
}

fn charge_from_code(code: i32) -> Result<(i32, bool), SdfErrorKind> {
    Ok(match code {
        0 => (0, false),
        1 => (3, false),
        2 => (2, false),
        3 => (1, false),
        4 => (0, true),
        5 => (-1, false),
        6 => (-2, false),
        7 => (-3, false),
        other => return Err(SdfErrorKind::InvalidChargeCode(other)),
    })
}

fn parse_record(lines: &[String], start: usize) -> Result<MolRecord, SdfError> {
    let err = |offset: usize, kind| SdfError { line: start + offset, kind };
    if lines.len() < 4 {
        return Err(err(lines.len(), SdfErrorKind::Truncated("missing header or counts line".into())));
    }
    let mut rec = MolRecord { name: lines[0].trim().to_string(), ..Default::default() };

    let counts = &lines[3];
    let version = field(counts, 33, 39);
    if !version.is_empty() && version != "V2000" {
        return Err(err(3, SdfErrorKind::UnsupportedVersion(version.to_string())));
    }
    let (na, nb) = match (field(counts, 0, 3).parse::<usize>(), field(counts, 3, 6).parse::<usize>()) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(err(3, SdfErrorKind::MalformedCounts)),
    };

    let atom_lines = 4..4 + na;
    if lines.len() < atom_lines.end {
        return Err(err(lines.len(), SdfErrorKind::Truncated(format!("expected {na} atom lines"))));
    }
    for idx in atom_lines {
        let atom = parse_atom(&lines[idx]).map_err(|k| err(idx, k))?;
        if atom.1 {
            rec.warnings.push(format!(
                "line {}: radical charge code 4 on {} read as charge 0",
                start + idx,
                atom.0.symbol
            ));
        }
        rec.atoms.push(atom.0);
    }

    let bond_start = 4 + na;
    if lines.len() < bond_start + nb {
        return Err(err(lines.len(), SdfErrorKind::Truncated(format!("expected {nb} bond lines"))));
    }
    let mut seen = HashSet::new();
    for (idx, line) in lines.iter().enumerate().skip(bond_start).take(nb) {
        let bond = parse_bond(line).map_err(|k| err(idx, k))?;
        if bond.u == 0 || bond.v == 0 || bond.u > na || bond.v > na || bond.u == bond.v {
            return Err(err(idx, SdfErrorKind::BondOutOfRange(bond.u, bond.v)));
        }
        if !seen.insert((bond.u.min(bond.v), bond.u.max(bond.v))) {
            return Err(err(idx, SdfErrorKind::DuplicateBond(bond.u, bond.v)));
        }
        rec.bonds.push(bond);
    }

    let mut idx = bond_start + nb;
    let mut chg_seen = false;
    while idx < lines.len() {
        let line = &lines[idx];
        if line.starts_with("M  END") {
            idx += 1;
            break;
        }
        if let Some(rest) = line.strip_prefix("M  CHG") {
            if !chg_seen {
                // M  CHG supersedes every atom-block charge.
                for a in &mut rec.atoms {
                    a.charge = 0;
                }
                chg_seen = true;
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let n: usize = toks.first().and_then(|t| t.parse().ok()).ok_or(err(idx, SdfErrorKind::MalformedProperty))?;
            if toks.len() < 1 + 2 * n {
                return Err(err(idx, SdfErrorKind::MalformedProperty));
            }
            for pair in toks[1..1 + 2 * n].chunks(2) {
                let (a, c) = match (pair[0].parse::<usize>(), pair[1].parse::<i32>()) {
                    (Ok(a), Ok(c)) if a >= 1 && a <= na => (a, c),
                    _ => return Err(err(idx, SdfErrorKind::MalformedProperty)),
                };
                rec.atoms[a - 1].charge = c;
            }
        }
        idx += 1;
    }

    // SD data items
    while idx < lines.len() {
        let line = lines[idx].trim_end();
        idx += 1;
        if let Some(rest) = line.strip_prefix('>') {
            let name = match (rest.find('<'), rest.rfind('>')) {
                (Some(a), Some(b)) if b > a => rest[a + 1..b].to_string(),
                _ => continue,
            };
            let mut value = Vec::new();
            while idx < lines.len() && !lines[idx].trim().is_empty() {
                value.push(lines[idx].trim_end().to_string());
                idx += 1;
            }
            rec.data.insert(name, value.join("\n"));
        }
    }
    Ok(rec)
}

/// Returns the atom and whether a radical charge code was folded to zero.
fn parse_atom(line: &str) -> Result<(Atom, bool), SdfErrorKind> {
    let fixed_symbol = field(line, 31, 34);
    let columns_ok = !fixed_symbol.is_empty()
        && fixed_symbol.chars().all(|c| c.is_ascii_alphabetic() || c == '*')
        && field(line, 0, 10).parse::<f64>().is_ok();
    let (symbol, code, hq) = if columns_ok {
        let code = match field(line, 36, 39) {
            "" => 0,
            s => s.parse::<i32>().map_err(|_| SdfErrorKind::MalformedAtom)?,
        };
        let hq = field(line, 42, 45).parse::<u8>().unwrap_or(0);
        (fixed_symbol.to_string(), code, hq)
    } else {
        // Whitespace-separated fallback for writers that do not align columns.
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 4 || toks[..3].iter().any(|t| t.parse::<f64>().is_err()) {
            return Err(SdfErrorKind::MalformedAtom);
        }
        let code = toks.get(5).map(|t| t.parse::<i32>()).transpose().map_err(|_| SdfErrorKind::MalformedAtom)?;
        let hq = toks.get(7).and_then(|t| t.parse::<u8>().ok()).unwrap_or(0);
        (toks[3].to_string(), code.unwrap_or(0), hq)
    };
    let (charge, radical) = charge_from_code(code)?;
    Ok((Atom { symbol: normalize_symbol(&symbol), charge, hydrogen_query: hq }, radical))
}

fn normalize_symbol(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + &chars.as_str().to_ascii_lowercase(),
        None => String::new(),
    }
}

fn parse_bond(line: &str) -> Result<Bond, SdfErrorKind> {
    let fixed = (
        field(line, 0, 3).parse::<usize>(),
        field(line, 3, 6).parse::<usize>(),
        field(line, 6, 9).parse::<u8>(),
    );
    let (u, v, order) = match fixed {
        (Ok(u), Ok(v), Ok(t)) => (u, v, t),
        _ => {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match (
                toks.first().and_then(|t| t.parse().ok()),
                toks.get(1).and_then(|t| t.parse().ok()),
                toks.get(2).and_then(|t| t.parse().ok()),
            ) {
                (Some(u), Some(v), Some(t)) => (u, v, t),
                _ => return Err(SdfErrorKind::MalformedBond),
            }
        }
    };
    if !(1..=4).contains(&order) {
        return Err(SdfErrorKind::UnsupportedBondType(order));
    }
    Ok(Bond { u, v, order })
}
