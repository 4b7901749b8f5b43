//! File formats: the energy time series, legacy VTK snapshots, the raw
//! binary snapshot and the run manifest.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use viscoflow::grid::cell_velocity;
use viscoflow::monitor::{BudgetResidual, EnergyBudget};
use viscoflow::spd::lambda_min;
use viscoflow::stepper::{SimState, StepReport};

/// Step-report columns following the budget fields. Wall-clock time is left
/// out so the table is reproducible bit for bit.
pub const STEP_COLUMNS: [&str; 12] = [
    "dt",
    "cfl",
    "poisson_iterations",
    "diffusion_iterations",
    "viscous_iterations",
    "min_lambda",
    "min_lambda_i",
    "min_lambda_j",
    "min_lambda_k",
    "min_det",
    "max_b_norm",
    "max_divergence",
];

pub fn csv_header() -> String {
    let mut cols = vec!["step"];
    cols.extend(EnergyBudget::FIELDS);
    cols.extend(STEP_COLUMNS);
    cols.push("residual_positive");
    cols.join(",")
}

pub struct EnergyCsv<W: Write> {
    out: W,
}

impl EnergyCsv<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> EnergyCsv<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        write!(out, "{}\r\n", csv_header())?;
        Ok(Self { out })
    }

    pub fn row(
        &mut self,
        step: u64,
        b: &EnergyBudget,
        r: &StepReport,
        res: &BudgetResidual,
    ) -> io::Result<()> {
        let mut line = step.to_string();
        for v in b.values() {
            line.push_str(&format!(",{v:e}"));
        }
        let c = r.min_lambda_cell;
        line.push_str(&format!(
            ",{:e},{:e},{},{},{},{:e},{},{},{},{:e},{:e},{:e},{:e}",
            r.dt,
            r.cfl,
            r.poisson_iterations,
            r.diffusion_iterations,
            r.viscous_iterations,
            r.min_lambda,
            c[0],
            c[1],
            c[2],
            r.min_det,
            r.max_b_norm,
            r.max_divergence,
            res.positive
        ));
        write!(self.out, "{line}\r\n")
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub const TENSOR_NAMES: [&str; 6] = ["B_xx", "B_yy", "B_zz", "B_xy", "B_xz", "B_yz"];

/// Legacy VTK structured points, one point per cell center.
pub fn write_vtk(path: &Path, s: &SimState) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = &s.grid;
    let n = g.n;
    let count = n[0] * n[1] * n[2];
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "viscoflow step {} t {:e}", s.step, s.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", n[0], n[1], n[2])?;
    writeln!(
        w,
        "ORIGIN {:e} {:e} {:e}",
        0.5 * g.h[0],
        0.5 * g.h[1],
        0.5 * g.h[2]
    )?;
    writeln!(w, "SPACING {:e} {:e} {:e}", g.h[0], g.h[1], g.h[2])?;
    writeln!(w, "POINT_DATA {count}")?;
    for (k, name) in TENSOR_NAMES.iter().enumerate() {
        writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for p in s.b.interior() {
            writeln!(w, "{:e}", s.b.at(p).to_array()[k])?;
        }
    }
    writeln!(w, "SCALARS lambda_min double 1\nLOOKUP_TABLE default")?;
    for p in s.b.interior() {
        writeln!(w, "{:e}", lambda_min(&s.b.at(p)))?;
    }
    writeln!(w, "VECTORS velocity double")?;
    for p in s.b.interior() {
        let v = cell_velocity(&s.v, p);
        writeln!(w, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
    }
    w.flush()
}

pub const RAW_MAGIC: &[u8; 8] = b"VFLOWRAW";
pub const RAW_VERSION: u32 = 1;

/// Raw little-endian snapshot:
///
/// ```text
/// magic "VFLOWRAW" | u32 version | u64 nx ny nz | f64 t | u64 step
/// | dtype "f64le\0\0\0" | u32 field count
/// then per field: 16-byte NUL-padded name, nx·ny·nz f64 values (x fastest)
/// ```
pub fn write_raw(path: &Path, s: &SimState) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = s.grid.n;
    w.write_all(RAW_MAGIC)?;
    w.write_all(&RAW_VERSION.to_le_bytes())?;
    for d in n {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&s.t.to_le_bytes())?;
    w.write_all(&s.step.to_le_bytes())?;
    w.write_all(b"f64le\0\0\0")?;
    w.write_all(&10u32.to_le_bytes())?;
    let field =
        |w: &mut BufWriter<File>, name: &str, f: &dyn Fn([usize; 3]) -> f64| -> io::Result<()> {
            let mut tag = [0u8; 16];
            tag[..name.len()].copy_from_slice(name.as_bytes());
            w.write_all(&tag)?;
            for p in s.b.interior() {
                w.write_all(&f(p).to_le_bytes())?;
            }
            Ok(())
        };
    for (k, name) in TENSOR_NAMES.iter().enumerate() {
        field(&mut w, name, &|p| s.b.at(p).to_array()[k])?;
    }
    field(&mut w, "lambda_min", &|p| lambda_min(&s.b.at(p)))?;
    for (c, name) in ["v_x", "v_y", "v_z"].iter().enumerate() {
        field(&mut w, name, &|p| cell_velocity(&s.v, p)[c])?;
    }
    w.flush()
}

/// Key/value lines of the manifest, followed by the canonical config.
pub struct Manifest {
    pub lines: Vec<(String, String)>,
    pub config: String,
}

impl Manifest {
    pub fn new(config: String) -> Self {
        let mut m = Self {
            lines: Vec::new(),
            config,
        };
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.lines.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.lines.push((key.to_string(), value)),
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (k, v) in &self.lines {
            writeln!(w, "{k} = {v}")?;
        }
        writeln!(w, "\n# configuration")?;
        w.write_all(self.config.as_bytes())?;
        w.flush()
    }
}
