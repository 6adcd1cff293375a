//! CSV emission for every external file format, plus the binary reference
//! cache. All CSVs use `,` separators, `.` decimals, LF endings and a header
//! row.

use crate::adjoint::AdjointTrajectory;
use crate::analysis::ConvergenceReport;
use crate::control::ControlFunction;
use crate::error::{Error, Result};
use crate::forward::StateTrajectory;
use crate::reference::{ReferenceConfig, ReferenceSolution};
use crate::time::TimeGrid;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

fn writer(path: &Path) -> Result<BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

/// Particle snapshots: `t,i,phi,omega,alpha`, one row per particle per step.
pub fn write_state_snapshots(path: &Path, traj: &StateTrajectory) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,i,phi,omega,alpha")?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let t = traj.grid.node(k);
        for i in 0..snap.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                t,
                i,
                snap.positions()[i],
                snap.weights()[i],
                snap.amplitudes()[i]
            )?;
        }
    }
    Ok(())
}

/// Adjoint snapshots: same schema with `beta` in place of `alpha`.
pub fn write_adjoint_snapshots(path: &Path, adj: &AdjointTrajectory) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,i,phi,omega,beta")?;
    for (k, snap) in adj.snapshots.iter().enumerate() {
        let t = adj.grid.node(k);
        for i in 0..snap.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                t,
                i,
                snap.positions()[i],
                snap.weights()[i],
                snap.amplitudes()[i]
            )?;
        }
    }
    Ok(())
}

/// Control values: `t,u`.
pub fn write_control(path: &Path, u: &ControlFunction) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,u")?;
    for k in 0..u.grid.n_nodes() {
        writeln!(w, "{},{}", u.grid.node(k), u.values[k])?;
    }
    Ok(())
}

/// Read a `t,u` CSV back onto the given grid.
pub fn read_control(path: &Path, grid: TimeGrid, bounds: (f64, f64)) -> Result<ControlFunction> {
    let f = std::fs::File::open(path)?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty control CSV".into()))??;
    if header.trim() != "t,u" {
        return Err(Error::Config(format!("unexpected control header {header:?}")));
    }
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let _t = parts.next();
        let u: f64 = parts
            .next()
            .ok_or_else(|| Error::Config("missing u column".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("bad control value: {e}")))?;
        values.push(u);
    }
    ControlFunction::new(grid, values, bounds)
}

/// Optimizer iteration log: `iter,cost,grad_norm_rel,step,backtracks`.
pub fn write_iteration_log<S>(
    path: &Path,
    result: &crate::optimize::OptimizationResult<S>,
) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "iter,cost,grad_norm_rel,step,backtracks")?;
    let g0 = result.grad_norm_history.first().copied().unwrap_or(1.0);
    let g0 = if g0 > 0.0 { g0 } else { 1.0 };
    for i in 0..result.cost_history.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i,
            result.cost_history[i],
            result.grad_norm_history[i] / g0,
            result.steps[i],
            result.armijo_backtracks[i]
        )?;
    }
    Ok(())
}

/// Reference dump: `t,x,y[,p]`.
pub fn write_reference(path: &Path, sol: &ReferenceSolution) -> Result<()> {
    let mut w = writer(path)?;
    match &sol.adjoint {
        Some(adj) => {
            writeln!(w, "t,x,y,p")?;
            for (k, state) in sol.states.iter().enumerate() {
                let t = sol.grid.node(k);
                for (i, &x) in sol.x.iter().enumerate() {
                    writeln!(w, "{},{},{},{}", t, x, state[i], adj[k][i])?;
                }
            }
        }
        None => {
            writeln!(w, "t,x,y")?;
            for (k, state) in sol.states.iter().enumerate() {
                let t = sol.grid.node(k);
                for (i, &x) in sol.x.iter().enumerate() {
                    writeln!(w, "{},{},{}", t, x, state[i])?;
                }
            }
        }
    }
    Ok(())
}

/// Convergence report: `h,epsilon,err_y_L2V,err_u_H1,runtime_s` plus a footer
/// comment with the fitted slopes.
pub fn write_convergence(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "h,epsilon,err_y_L2V,err_u_H1,runtime_s")?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.h, r.epsilon, r.err_y_l2v, r.err_u_h1, r.runtime_s
        )?;
    }
    writeln!(w, "# slope_y={} slope_u={}", report.slope_y, report.slope_u)?;
    Ok(())
}

const CACHE_MAGIC: &[u8; 8] = b"refsol01";

/// Binary cache of a reference solution (states + optimal control). Layout:
/// magic, then u64 counts, then little-endian f64 arrays.
pub fn write_reference_cache(path: &Path, sol: &ReferenceSolution) -> Result<()> {
    let control = sol
        .control
        .as_ref()
        .ok_or_else(|| Error::Config("reference cache requires an optimal control".into()))?;
    let mut w = writer(path)?;
    w.write_all(CACHE_MAGIC)?;
    let nx = sol.x.len() as u64;
    let nt = sol.grid.n_steps as u64;
    w.write_all(&nx.to_le_bytes())?;
    w.write_all(&nt.to_le_bytes())?;
    for v in [
        sol.config.domain_l,
        sol.config.h_ref,
        sol.config.nu,
        sol.grid.t_final,
        control.bounds.0,
        control.bounds.1,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for state in &sol.states {
        for v in state {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for v in &control.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_reference_cache(path: &Path) -> Result<ReferenceSolution> {
    let mut f = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Config("bad reference cache magic".into()));
    }
    let mut b8 = [0u8; 8];
    let mut read_u64 = |f: &mut BufReader<std::fs::File>| -> Result<u64> {
        f.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nx = read_u64(&mut f)? as usize;
    let nt = read_u64(&mut f)? as usize;
    let mut c8 = [0u8; 8];
    let mut read_f64 = |f: &mut BufReader<std::fs::File>| -> Result<f64> {
        f.read_exact(&mut c8)?;
        Ok(f64::from_le_bytes(c8))
    };
    let domain_l = read_f64(&mut f)?;
    let h_ref = read_f64(&mut f)?;
    let nu = read_f64(&mut f)?;
    let t_final = read_f64(&mut f)?;
    let lo = read_f64(&mut f)?;
    let hi = read_f64(&mut f)?;
    let grid = TimeGrid::new(t_final, nt)?;
    let config = ReferenceConfig {
        domain_l,
        h_ref,
        nu,
    };
    let mut states = Vec::with_capacity(nt + 1);
    let mut buf = vec![0u8; nx * 8];
    for _ in 0..=nt {
        f.read_exact(&mut buf)?;
        states.push(
            buf.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        );
    }
    let mut ubuf = vec![0u8; (nt + 1) * 8];
    f.read_exact(&mut ubuf)?;
    let values: Vec<f64> = ubuf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let control = ControlFunction::new(grid, values, (lo, hi))?;
    Ok(ReferenceSolution {
        config,
        x: config.x_grid(),
        grid,
        states,
        adjoint: None,
        control: Some(control),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeGrid;

    #[test]
    fn control_roundtrip() {
        let dir = std::env::temp_dir().join("bc_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("control.csv");
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let u = ControlFunction::new(
            grid,
            (0..9).map(|k| k as f64 * 1.5).collect(),
            (0.0, 100.0),
        )
        .unwrap();
        write_control(&path, &u).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,u\n"));
        assert!(!text.contains('\r'));
        let back = read_control(&path, grid, (0.0, 100.0)).unwrap();
        assert_eq!(back.values, u.values);
    }
}
