//! Plain-text plot data from a finished artifact directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::table::{fmt_f64, Table};
use crate::error::{Error, Result};

/// Files read by [`export_plots`], with the stage that writes each.
pub const PLOT_INPUTS: [(&str, &str); 3] = [
    ("boundary_layer", "boundary_layer/decay.csv"),
    ("boundary_layer", "boundary_layer/cbl.csv"),
    ("dns", "dns/errors.csv"),
];

fn write_series(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut s = format!("# {header}\n");
    for r in rows {
        let line: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn columns(t: &Table, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let cols = names.iter().map(|n| t.get(n)).collect::<Result<Vec<_>>>()?;
    Ok((0..t.rows.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

/// Writes `plots/decay_curves.dat`, `plots/cbl_vs_x1.dat` and
/// `plots/eps_convergence.dat` under `dir`.
pub fn export_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let missing: Vec<(&str, &str)> = PLOT_INPUTS
        .iter()
        .copied()
        .filter(|(_, f)| !dir.join(f).exists())
        .collect();
    if !missing.is_empty() {
        let mut stages: Vec<&str> = missing.iter().map(|m| m.0).collect();
        stages.dedup();
        return Err(Error::MissingArtifact {
            stage: stages.join(", "),
            expected: missing.iter().map(|m| m.1.to_string()).collect(),
        });
    }
    let out = dir.join("plots");
    std::fs::create_dir_all(&out)?;

    // Zero norms (a layer with no forcing) have no place on a log axis.
    let decay = Table::read(&dir.join("boundary_layer/decay.csv"))?;
    let rows: Vec<Vec<f64>> = columns(&decay, &["x1", "depth", "grad_norm"])?
        .into_iter()
        .filter(|r| r[2] > 0.0)
        .collect();
    let decay_path = out.join("decay_curves.dat");
    write_series(&decay_path, "x1 depth grad_norm", &rows)?;

    let cbl = Table::read(&dir.join("boundary_layer/cbl.csv"))?;
    let cbl_path = out.join("cbl_vs_x1.dat");
    write_series(
        &cbl_path,
        "x1 Cbl1 Cbl2 Cbl_omega",
        &columns(&cbl, &["x1", "Cbl1", "Cbl2", "Cbl_omega"])?,
    )?;

    let err = Table::read(&dir.join("dns/errors.csv"))?;
    let names: Vec<&str> = err
        .header
        .iter()
        .map(String::as_str)
        .filter(|h| h.starts_with("err_") || *h == "mass_error" || *h == "u_L2_O2eps" || *h == "darcy_gap")
        .collect();
    let mut head = vec!["eps"];
    head.extend(&names);
    let conv_path = out.join("eps_convergence.dat");
    write_series(&conv_path, &head.join(" "), &columns(&err, &head)?)?;
    Ok(vec![decay_path, cbl_path, conv_path])
}
