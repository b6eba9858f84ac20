//! CSV and JSON artifact writers. Every CSV starts with a comment line
//! naming the units and the hash of the generating configuration, then the
//! column header. Comma delimiter, decimal point, UTF-8.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use plapsim_core::estimates::TrajectorySeries;
use plapsim_core::solver::Trajectory;
use plapsim_core::Basis64;

/// FNV-1a hash of the raw configuration bytes.
pub fn config_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn hash_line(hash: u64, units: &str) -> String {
    format!("# plapsim config_hash={hash:016x} units: {units}\n")
}

/// Rows `(t, mode_index..., coefficient)` for every snapshot and mode.
pub fn trajectory_csv(traj: &Trajectory<f64>, basis: &Basis64, hash: u64) -> String {
    let dim = basis.dim();
    let mut out = hash_line(
        hash,
        "t=time, m*=mode index, coefficient in the orthonormal eigenbasis",
    );
    let comps = traj
        .snapshots
        .first()
        .map(|(_, c)| c.comps())
        .unwrap_or(1);
    let mode_cols = (0..dim)
        .map(|d| format!("m{}", d + 1))
        .collect::<Vec<_>>()
        .join(",");
    if comps > 1 {
        out.push_str(&format!("t,{mode_cols},comp,coefficient\n"));
    } else {
        out.push_str(&format!("t,{mode_cols},coefficient\n"));
    }
    for (t, c) in &traj.snapshots {
        for (j, mode) in basis.modes().iter().enumerate() {
            let mode_str = mode
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",");
            for comp in 0..comps {
                let v = c.values()[[j, comp]];
                if comps > 1 {
                    out.push_str(&format!("{t},{mode_str},{comp},{v}\n"));
                } else {
                    out.push_str(&format!("{t},{mode_str},{v}\n"));
                }
            }
        }
    }
    out
}

/// Norm-trace table: `t, L2, Linf, grad_Lp, ut_L2, ut_Lq, hessian_Lp`.
pub fn norm_series_csv(series: &TrajectorySeries<f64>, q: f64, hash: u64) -> String {
    let mut out = hash_line(
        hash,
        &format!("t=time, norms of u / grad u / D2 u / u_t on the quadrature grid (q={q})"),
    );
    out.push_str("t,L2,Linf,grad_Lp,ut_L2,ut_Lq,hessian_Lp\n");
    let ut_lq = series
        .ut_lq
        .iter()
        .find(|(qq, _)| (*qq - q).abs() < 1e-12)
        .map(|(_, s)| s.values())
        .unwrap_or_else(|| series.ut_l2.values());
    for (i, &t) in series.l2.times().iter().enumerate() {
        let ut_l2 = series.ut_l2.values().get(i).copied().unwrap_or(f64::NAN);
        let ut_q = ut_lq.get(i).copied().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{t},{},{},{},{ut_l2},{ut_q},{}\n",
            series.l2.values()[i],
            series.linf.values()[i],
            series.grad_lp.values()[i],
            series.hess_lp.values()[i],
        ));
    }
    out
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating output directory {}", parent.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
