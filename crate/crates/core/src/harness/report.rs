use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::metrics::to_db;
use super::sweep::{CellSummary, CSV_HEADER};
use crate::{Error, Result};

/// Reads an aggregate CSV written by a sweep.
pub fn read_cells(path: &Path) -> Result<Vec<CellSummary>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cells(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn parse_cells(text: &str) -> std::result::Result<Vec<CellSummary>, String> {
    let header = text.lines().next().unwrap_or_default();
    if header.trim_end() != CSV_HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .map(|row| row.map_err(|e| e.to_string()))
        .collect()
}

/// Plain-text comparison tables, one per `N_d`: rows are SNR points,
/// columns are estimators, and each non-reference column also reports its
/// gain over `reference` in dB.
pub fn comparison_table(cells: &[CellSummary], reference: &str) -> String {
    let mut variants: Vec<&str> = Vec::new();
    for c in cells {
        if !variants.contains(&c.variant.as_str()) {
            variants.push(&c.variant);
        }
    }
    let n_ds: BTreeSet<usize> = cells.iter().map(|c| c.n_d).collect();
    let mut snrs: Vec<f64> = cells.iter().map(|c| c.snr_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();

    let find = |v: &str, s: f64, n: usize| {
        cells
            .iter()
            .find(|c| c.variant == v && c.snr_db == s && c.n_d == n)
    };

    let mut out = String::new();
    for n_d in n_ds {
        writeln!(out, "N_d = {n_d}").unwrap();
        write!(out, "{:>8}", "SNR[dB]").unwrap();
        for v in &variants {
            write!(out, " {v:>14}").unwrap();
            if *v != reference {
                write!(out, " {:>8}", "gain[dB]").unwrap();
            }
        }
        out.push('\n');
        for &s in &snrs {
            write!(out, "{s:>8}").unwrap();
            let base = find(reference, s, n_d).map(|c| c.nmse_mean);
            for v in &variants {
                match find(v, s, n_d) {
                    Some(c) => write!(out, " {:>14.6}", c.nmse_mean).unwrap(),
                    None => write!(out, " {:>14}", "-").unwrap(),
                }
                if *v != reference {
                    let gain = match (base, find(v, s, n_d)) {
                        (Some(b), Some(c)) => format!("{:.2}", to_db(b) - to_db(c.nmse_mean)),
                        _ => "-".into(),
                    };
                    write!(out, " {gain:>8}").unwrap();
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "variant,snr_db,n_d,trials,nmse_mean,nmse_stderr,divergences,mean_tstar
dm,0,100,2,1.0000000000e-1,1.0e-3,0,50.0000
gramdiff,0,100,2,1.0000000000e-2,1.0e-3,0,50.0000
";

    #[test]
    fn parses_and_tabulates() {
        let cells = parse_cells(SAMPLE).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[1].variant, "gramdiff");
        let table = comparison_table(&cells, "dm");
        assert!(table.contains("N_d = 100"));
        assert!(table.contains("10.00"), "{table}");
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(parse_cells("a,b\n1,2\n").is_err());
    }
}
