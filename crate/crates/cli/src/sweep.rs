//! Parameter sweeps over the cheap subcommands.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use sphere_oep::profiles::{solve_annulus_profile, solve_disk_profile, Branch};
use sphere_oep::tau::{build_tau_curve, default_grid};
use sphere_oep::NonlinearityDesc;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCommand {
    Profile,
    Disk,
    Tau,
}

impl SweepCommand {
    pub fn parse(name: &str) -> CliResult<Self> {
        match name {
            "profile" => Ok(Self::Profile),
            "disk" => Ok(Self::Disk),
            "tau" => Ok(Self::Tau),
            other => Err(CliError(format!("unknown subcommand {other:?} for sweep (profile, disk, tau)"))),
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Self::Profile => &["R", "M"],
            Self::Disk | Self::Tau => &["M"],
        }
    }

    fn outputs(self) -> &'static [&'static str] {
        match self {
            Self::Profile => &["r1", "r2", "g1", "g2"],
            Self::Disk => &["s_M", "h"],
            Self::Tau => &["tau0", "h", "monotone"],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    /// Empty on success.
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub command: SweepCommand,
    pub params: Vec<String>,
    pub outputs: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.error.is_empty()).count()
    }

    /// Grid columns, then outputs, then `error`.
    pub fn write_csv<W: Write>(&self, w: W) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<&str> = self.params.iter().chain(&self.outputs).map(String::as_str).chain(["error"]).collect();
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.params.iter().map(f64::to_string).collect();
            if row.error.is_empty() {
                rec.extend(row.values.iter().map(f64::to_string));
            } else {
                rec.extend(self.outputs.iter().map(|_| String::new()));
            }
            rec.push(row.error.clone());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn run_point(cmd: SweepCommand, f: &NonlinearityDesc, r: f64, m: f64, tol: f64) -> Result<Vec<f64>, sphere_oep::Error> {
    let f = f.build::<f64>();
    Ok(match cmd {
        SweepCommand::Profile => {
            let p = solve_annulus_profile(&f, r, m, tol)?;
            vec![p.r1(), p.r2(), p.boundary_gradient(Branch::Lower), p.boundary_gradient(Branch::Upper)]
        }
        SweepCommand::Disk => {
            let d = solve_disk_profile(&f, m, tol)?;
            vec![d.s_m(), d.h()]
        }
        SweepCommand::Tau => {
            let c = build_tau_curve(&f, m, &default_grid())?;
            vec![c.tau0(), c.h(), if c.is_monotone() { 1.0 } else { 0.0 }]
        }
    })
}

/// Runs `template` at every point of the cartesian product of `grid` in
/// parallel. Parameters not given default to `R = 0`, `M = 1`; a failing
/// point fills the `error` column of its row.
pub fn run_sweep(template: &str, f: &NonlinearityDesc, grid: &[(String, Vec<f64>)], tol: f64) -> CliResult<SweepTable> {
    let cmd = SweepCommand::parse(template)?;
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(CliError("sweep grid is empty".into()));
    }
    for (name, _) in grid {
        if !cmd.params().contains(&name.as_str()) {
            return Err(CliError(format!("{template} takes parameters {:?}, not {name:?}", cmd.params())));
        }
    }
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for (_, values) in grid {
        points = points.into_iter().flat_map(|p| values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    let lookup = |p: &[f64], name: &str, default: f64| grid.iter().position(|(n, _)| n == name).map_or(default, |k| p[k]);
    let rows = points
        .par_iter()
        .map(|p| {
            let (r, m) = (lookup(p, "R", 0.0), lookup(p, "M", 1.0));
            match run_point(cmd, f, r, m, tol) {
                Ok(values) => SweepRow { params: p.clone(), values, error: String::new() },
                Err(e) => SweepRow { params: p.clone(), values: vec![], error: e.to_string() },
            }
        })
        .collect();
    Ok(SweepTable {
        command: cmd,
        params: grid.iter().map(|(n, _)| n.clone()).collect(),
        outputs: cmd.outputs().iter().map(|s| s.to_string()).collect(),
        rows,
    })
}
