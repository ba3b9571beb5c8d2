//! Text formats: CSV tables with a header row, JSON sidecars, and the grid
//! solution file (one JSON header line followed by a `s,theta,u` CSV block).

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::{LevelCurve, RadialGraphSample};
use crate::nonlinearity::NonlinearityDesc;
use crate::pde::SolveRoute;
use crate::{DiskProfile, DomainSpec, GridSolution, ModelProfile, TauCurve};

pub const GRID_FORMAT: &str = "sphere-oep/grid-solution";
pub const FORMAT_VERSION: u32 = 1;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn desc(f: &crate::Nonlinearity) -> Result<NonlinearityDesc> {
    NonlinearityDesc::of(f).ok_or_else(|| Error::Format(format!("{} has no text description", f.label())))
}

/// `r,U,dU,Z,dZ,G` for every tabulated row.
pub fn write_profile_csv<W: Write>(profile: &ModelProfile, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["r", "U", "dU", "Z", "dZ", "G"]).map_err(csv_err)?;
    for row in profile.samples() {
        out.serialize((row.r, row.u, row.du, row.z, row.dz, row.g)).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ProfileSidecar {
    pub R: f64,
    pub M: f64,
    pub r1: f64,
    pub r2: f64,
    pub tol: f64,
    pub f: NonlinearityDesc,
}

pub fn profile_sidecar(profile: &ModelProfile) -> Result<ProfileSidecar> {
    Ok(ProfileSidecar {
        R: profile.height(),
        M: profile.max_value(),
        r1: profile.r1(),
        r2: profile.r2(),
        tol: profile.options().zero_tol,
        f: desc(profile.nonlinearity())?,
    })
}

/// `s,V,dV`.
pub fn write_disk_csv<W: Write>(disk: &DiskProfile, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["s", "V", "dV"]).map_err(csv_err)?;
    for row in disk.samples() {
        out.serialize((row.s, row.v, row.dv)).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

/// `R,tau1,tau2`.
pub fn write_tau_csv<W: Write>(curve: &TauCurve, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["R", "tau1", "tau2"]).map_err(csv_err)?;
    for ((r, t1), t2) in curve.grid().iter().zip(curve.tau1()).zip(curve.tau2()) {
        out.serialize((r, t1, t2)).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    pub domain: DomainSpec,
    pub n_s: usize,
    pub n_theta: usize,
    /// Nonlinearity the discrete equation holds with.
    pub f: NonlinearityDesc,
    pub route: SolveRoute,
    pub residual: f64,
    pub iterations: usize,
    pub u_max: f64,
}

/// JSON header line, then `s,theta,u` rows with `s` outer.
pub fn write_grid_solution<W: Write>(solution: &GridSolution, mut w: W) -> Result<()> {
    let d = solution.domain();
    let header = GridHeader {
        format: GRID_FORMAT.into(),
        version: FORMAT_VERSION,
        domain: d.clone(),
        n_s: d.n_s,
        n_theta: d.n_theta,
        f: desc(solution.nonlinearity())?,
        route: solution.route(),
        residual: solution.residual(),
        iterations: solution.iterations(),
        u_max: solution.node_max(),
    };
    serde_json::to_writer(&mut w, &header).map_err(json_err)?;
    writeln!(w).map_err(io_err)?;
    let mut out = writer(w);
    out.write_record(["s", "theta", "u"]).map_err(csv_err)?;
    for i in 0..=d.n_s {
        for j in 0..d.n_theta {
            out.serialize((solution.s(i, j), solution.theta(j), solution.value(i, j))).map_err(csv_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Reads a file written by [`write_grid_solution`]. The metric and the
/// residual are recomputed from the domain and the values.
pub fn read_grid_solution<R: Read>(r: R) -> Result<(GridHeader, GridSolution)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line).map_err(io_err)?;
    let header: GridHeader = serde_json::from_str(line.trim()).map_err(json_err)?;
    if header.format != GRID_FORMAT {
        return Err(Error::Format(format!("not a grid solution file: format {:?}", header.format)));
    }
    let mut rows = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut values = Vec::with_capacity((header.n_s + 1) * header.n_theta);
    for rec in rows.deserialize::<(f64, f64, f64)>() {
        values.push(rec.map_err(csv_err)?.2);
    }
    let sol = GridSolution::from_values(header.domain.clone(), header.f.build(), values, header.iterations, header.route)?;
    Ok((header, sol))
}

/// `s,theta` vertices of one curve.
pub fn write_level_curve_csv<W: Write>(curve: &LevelCurve<f64>, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["s", "theta"]).map_err(csv_err)?;
    for v in &curve.vertices {
        out.serialize(v).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurveEntry {
    pub file: String,
    pub level: f64,
    pub closed: bool,
    pub vertices: usize,
    pub length: f64,
    pub winding: i32,
    pub min_curvature: f64,
    pub max_curvature: f64,
}

pub fn level_curve_entry(curve: &LevelCurve<f64>, file: impl Into<String>) -> LevelCurveEntry {
    LevelCurveEntry {
        file: file.into(),
        level: curve.level,
        closed: curve.closed,
        vertices: curve.len(),
        length: curve.length,
        winding: curve.winding,
        min_curvature: curve.min_curvature(),
        max_curvature: curve.max_curvature(),
    }
}

/// `x,y,z,nx,ny,nz,contact` plus the sample kind.
pub fn write_radial_graph_csv<W: Write>(graph: &RadialGraphSample<f64>, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["x", "y", "z", "nx", "ny", "nz", "contact", "kind"]).map_err(csv_err)?;
    for p in &graph.points {
        let kind = match p.kind {
            crate::levelset::SampleKind::MaxCurve => "max",
            crate::levelset::SampleKind::Boundary(b) => {
                if b.index() == 1 {
                    "boundary1"
                } else {
                    "boundary2"
                }
            }
        };
        let [x, y, z] = p.point;
        let [nx, ny, nz] = p.normal;
        out.serialize((x, y, z, nx, ny, nz, p.contact, kind)).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::solve_annulus_profile;
    use crate::Nonlinearity;

    #[test]
    fn grid_solution_round_trip() {
        let f = Nonlinearity::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.2, 1.0, 1e-12).unwrap();
        let sol = GridSolution::from_profile(&p, 16, 8).unwrap();
        let mut buf = Vec::new();
        write_grid_solution(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap() == "s,theta,u");
        let (header, back) = read_grid_solution(&buf[..]).unwrap();
        assert_eq!(header.n_s, 16);
        assert_eq!(back.values(), sol.values());
        assert_eq!(back.residual(), sol.residual());
    }

    #[test]
    fn profile_csv_has_header_and_rows() {
        let f = Nonlinearity::linear(2.0);
        let p = solve_annulus_profile(&f, 0.0, 1.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "r,U,dU,Z,dZ,G");
        assert_eq!(text.lines().count(), p.samples().len() + 1);
        let side = profile_sidecar(&p).unwrap();
        assert!((side.r2 - 0.83356).abs() < 1e-4);
        let json = serde_json::to_string(&side).unwrap();
        assert!(json.contains("\"R\":0.0") && json.contains("\"kind\":\"affine\""));
    }
}
