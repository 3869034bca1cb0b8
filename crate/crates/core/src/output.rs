//! Norms and step logs as CSV, and field snapshots.
//!
//! A text snapshot starts with the line `nx ny dx dy time`, followed by one
//! row per cell in row-major order (x fastest). Each row holds the 16
//! conserved values `D m_x m_y m_z E` (ions, then electrons), `B_x B_y B_z`
//! and `E_x E_y E_z`, then the 10 primitives `rho u_x u_y u_z p` (ions, then
//! electrons). The binary form stores the same numbers, header included, as
//! little-endian 64-bit floats.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::DivergenceReport;
use crate::grid::{FieldArray, Grid2D};
use crate::state::{Cell, BX, ELECTRON, ION};
use crate::stepper::StepReport;

pub const CONSERVED_COLUMNS: usize = 16;
pub const PRIMITIVE_COLUMNS: usize = 10;
pub const SNAPSHOT_COLUMNS: usize = CONSERVED_COLUMNS + PRIMITIVE_COLUMNS;

pub const NORMS_HEADER: &str = "step,time,dt,divB_L1,divB_L2,divEres_L1,divEres_L2,total_entropy";

pub struct NormsWriter {
    out: BufWriter<File>,
    with_psi: bool,
}

impl NormsWriter {
    pub fn create(path: &Path, with_psi: bool) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        if with_psi {
            writeln!(out, "{NORMS_HEADER},psi_flux")?;
        } else {
            writeln!(out, "{NORMS_HEADER}")?;
        }
        Ok(NormsWriter { out, with_psi })
    }

    pub fn write(&mut self, r: &DivergenceReport) -> io::Result<()> {
        write!(
            self.out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step, r.time, r.dt, r.div_b_l1, r.div_b_l2, r.div_e_res_l1, r.div_e_res_l2, r.total_entropy
        )?;
        if self.with_psi {
            write!(self.out, ",{:.16e}", r.psi_flux.unwrap_or(f64::NAN))?;
        }
        writeln!(self.out)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub struct StepLog {
    out: BufWriter<File>,
}

impl StepLog {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "step,time,dt,max_speed_x,max_speed_y,newton_total,newton_max")?;
        Ok(StepLog { out })
    }

    pub fn write(&mut self, r: &StepReport) -> io::Result<()> {
        writeln!(
            self.out,
            "{},{:.16e},{:.16e},{:.6e},{:.6e},{},{}",
            r.step, r.time, r.dt, r.max_speed.0, r.max_speed.1, r.newton_total, r.newton_max
        )
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn row(u: &Cell, w: &Cell) -> [f64; SNAPSHOT_COLUMNS] {
    let mut r = [0.0; SNAPSHOT_COLUMNS];
    r[..CONSERVED_COLUMNS].copy_from_slice(&u[..BX + 6]);
    r[16..21].copy_from_slice(&w[ION..ION + 5]);
    r[21..26].copy_from_slice(&w[ELECTRON..ELECTRON + 5]);
    r
}

/// Writes `u` and its primitives `prim` as a text snapshot, and a binary
/// copy next to it (extension `bin`) when asked.
pub fn write_snapshot(path: &Path, grid: &Grid2D, time: f64, u: &FieldArray<Cell>, prim: &FieldArray<Cell>, binary: bool) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{} {} {:.16e} {:.16e} {:.16e}", grid.nx, grid.ny, grid.dx, grid.dy, time)?;
    let mut bin = Vec::new();
    if binary {
        for h in [grid.nx as f64, grid.ny as f64, grid.dx, grid.dy, time] {
            bin.extend_from_slice(&h.to_le_bytes());
        }
    }
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let r = row(u.get(i, j), prim.get(i, j));
            let line: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
            if binary {
                for x in r {
                    bin.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    out.flush()?;
    if binary {
        std::fs::write(path.with_extension("bin"), bin)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub time: f64,
    pub rows: Vec<[f64; SNAPSHOT_COLUMNS]>,
}

fn bad(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

fn check_header(nx: f64, ny: f64) -> io::Result<(usize, usize)> {
    if !(nx >= 1.0 && ny >= 1.0 && nx.fract() == 0.0 && ny.fract() == 0.0) {
        return Err(bad(format!("bad grid size {nx} x {ny}")));
    }
    Ok((nx as usize, ny as usize))
}

impl Snapshot {
    pub fn read_text(path: &Path) -> io::Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines.next().ok_or_else(|| bad("empty snapshot".into()))??;
        let h: Vec<f64> = header
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("header: {e}"))))
            .collect::<io::Result<_>>()?;
        if h.len() != 5 {
            return Err(bad(format!("header has {} fields, expected 5", h.len())));
        }
        let (nx, ny) = check_header(h[0], h[1])?;
        let mut rows = Vec::with_capacity(nx * ny);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut r = [0.0; SNAPSHOT_COLUMNS];
            let mut n = 0;
            for t in line.split_whitespace() {
                if n == SNAPSHOT_COLUMNS {
                    return Err(bad(format!("row {} has too many columns", k + 1)));
                }
                r[n] = t.parse().map_err(|e| bad(format!("row {}: {e}", k + 1)))?;
                n += 1;
            }
            if n != SNAPSHOT_COLUMNS {
                return Err(bad(format!("row {} has {n} columns, expected {SNAPSHOT_COLUMNS}", k + 1)));
            }
            rows.push(r);
        }
        if rows.len() != nx * ny {
            return Err(bad(format!("{} rows for a {nx} x {ny} grid", rows.len())));
        }
        Ok(Snapshot {
            nx,
            ny,
            dx: h[2],
            dy: h[3],
            time: h[4],
            rows,
        })
    }

    pub fn read_binary(path: &Path) -> io::Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 || bytes.len() < 40 {
            return Err(bad("truncated binary snapshot".into()));
        }
        let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        let (nx, ny) = check_header(vals[0], vals[1])?;
        let body = &vals[5..];
        if body.len() != nx * ny * SNAPSHOT_COLUMNS {
            return Err(bad(format!("{} values for a {nx} x {ny} grid", body.len())));
        }
        let rows = body.chunks_exact(SNAPSHOT_COLUMNS).map(|c| c.try_into().expect("full row")).collect();
        Ok(Snapshot {
            nx,
            ny,
            dx: vals[2],
            dy: vals[3],
            time: vals[4],
            rows,
        })
    }

    /// Reads either format, choosing binary for a `.bin` extension.
    pub fn read(path: &Path) -> io::Result<Self> {
        if path.extension().is_some_and(|e| e == "bin") {
            Self::read_binary(path)
        } else {
            Self::read_text(path)
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64; SNAPSHOT_COLUMNS] {
        &self.rows[j * self.nx + i]
    }

    /// Magnetic divergence norms over the vertices whose four neighbours are
    /// all stored, normalized like the run diagnostics by `nx ny`.
    pub fn interior_div_b(&self) -> (f64, f64) {
        let (bx, by) = (10, 11);
        let (mut l1, mut l2) = (0.0, 0.0);
        for b in 1..self.ny {
            for a in 1..self.nx {
                let (sw, se) = (self.cell(a - 1, b - 1), self.cell(a, b - 1));
                let (nw, ne) = (self.cell(a - 1, b), self.cell(a, b));
                let d = ((ne[bx] - nw[bx]) + (se[bx] - sw[bx])) / (2.0 * self.dx) + ((ne[by] - se[by]) + (nw[by] - sw[by])) / (2.0 * self.dy);
                l1 += d.abs();
                l2 += d * d;
            }
        }
        let n = (self.nx * self.ny) as f64;
        (l1 / n, (l2 / n).sqrt())
    }

    /// Minimum and maximum of one column.
    pub fn range(&self, col: usize) -> (f64, f64) {
        self.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[col]), hi.max(r[col])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::state::NCOMP;

    #[test]
    fn snapshot_round_trip_text_and_binary() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(3, 2, (0.0, 1.0), (0.0, 2.0), Boundary::Periodic, Boundary::Neumann).unwrap();
        let mut u = FieldArray::new(&g, [0.0; NCOMP]);
        let mut w = FieldArray::new(&g, [0.0; NCOMP]);
        u.map_interior(|i, j, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = (k as f64 + 0.1) * (1.0 + i as f64) - j as f64 / 3.0;
            }
        });
        w.map_interior(|i, j, c| c.iter_mut().for_each(|x| *x = (i * 10 + j) as f64 + 0.5));
        let path = dir.path().join("s.txt");
        write_snapshot(&path, &g, 0.25, &u, &w, true).unwrap();
        let t = Snapshot::read(&path).unwrap();
        let b = Snapshot::read(&dir.path().join("s.bin")).unwrap();
        assert_eq!(t, b);
        assert_eq!((t.nx, t.ny, t.time), (3, 2, 0.25));
        let c = t.cell(2, 1);
        assert_eq!(c[0], u.get(2, 1)[0]);
        assert_eq!(c[15], u.get(2, 1)[15]);
        assert_eq!(c[16], 20.0 + 1.5);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        std::fs::write(&p, "2 1 0.5 1 0\n1 2 3\n").unwrap();
        assert!(Snapshot::read(&p).unwrap_err().to_string().contains("columns"));
        std::fs::write(&p, "2 1 0.5\n").unwrap();
        assert!(Snapshot::read(&p).is_err());
    }

    #[test]
    fn norms_header_and_psi_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        let mut w = NormsWriter::create(&p, true).unwrap();
        let r = DivergenceReport {
            step: 3,
            time: 0.5,
            dt: 0.1,
            div_b_l1: 0.0,
            div_b_l2: 0.0,
            div_e_res_l1: 1e-15,
            div_e_res_l2: 2e-15,
            total_entropy: -4.0,
            psi_flux: Some(0.1),
        };
        w.write(&r).unwrap();
        w.flush().unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("{NORMS_HEADER},psi_flux"));
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields, vec![3.0, 0.5, 0.1, 0.0, 0.0, 1e-15, 2e-15, -4.0, 0.1]);
    }
}
