//! CSV artifacts. Floats are written in Rust's shortest round-trip form, so
//! every file parses back to the same bits; no timestamps are written.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::moments::{FunctionalSeries, MomentEstimate, PhaseCell, PhaseVerdict};
use crate::ode::BlowupVerdict;
use crate::spde::FieldState;

pub const SNAPSHOT_HEADER: [&str; 3] = ["t", "x", "u"];
pub const MOMENT_HEADER: [&str; 6] = ["t", "probe_x", "p", "mean", "std_error", "n_alive"];
pub const FUNCTIONAL_HEADER: [&str; 5] = ["t", "F_hat", "F_se", "G_hat", "G_se"];
pub const PHASE_HEADER: [&str; 6] = ["alpha", "excess", "kappa", "fraction_blown", "verdict", "median_t_blow"];
pub const ODE_HEADER: [&str; 2] = ["t", "y"];

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn rows<R: Read>(r: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(reader.records().collect::<std::result::Result<Vec<_>, _>>()?)
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = row
        .get(i)
        .ok_or_else(|| Error::Format(format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Format(format!("column {name}: cannot parse {raw:?}")))
}

pub fn write_snapshots<W: Write>(w: W, grid: &Grid, snapshots: &[FieldState]) -> Result<()> {
    let mut out = writer(w, &SNAPSHOT_HEADER)?;
    for s in snapshots {
        if s.values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                actual: s.values.len(),
            });
        }
        for (j, u) in s.values.iter().enumerate() {
            out.write_record([s.t.to_string(), grid.x(j).to_string(), u.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows are grouped into snapshots by consecutive equal `t`.
pub fn read_snapshots<R: Read>(r: R) -> Result<Vec<FieldState>> {
    let mut out: Vec<FieldState> = Vec::new();
    for row in rows(r, &SNAPSHOT_HEADER)? {
        let t: f64 = field(&row, 0, "t")?;
        let u: f64 = field(&row, 2, "u")?;
        match out.last_mut() {
            Some(s) if s.t.to_bits() == t.to_bits() => s.values.push(u),
            _ => out.push(FieldState { t, values: vec![u] }),
        }
    }
    Ok(out)
}

pub fn write_moments<W: Write>(w: W, estimates: &[MomentEstimate]) -> Result<()> {
    let mut out = writer(w, &MOMENT_HEADER)?;
    for e in estimates {
        out.write_record([
            e.t.to_string(),
            e.probe_x.to_string(),
            e.p.to_string(),
            e.mean.to_string(),
            e.std_error.to_string(),
            e.n_alive.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// The probe index is recovered from `probe_x` on `grid`.
pub fn read_moments<R: Read>(r: R, grid: &Grid) -> Result<Vec<MomentEstimate>> {
    rows(r, &MOMENT_HEADER)?
        .iter()
        .map(|row| {
            let probe_x: f64 = field(row, 1, "probe_x")?;
            Ok(MomentEstimate {
                t: field(row, 0, "t")?,
                probe: grid.index_of(probe_x),
                probe_x,
                p: field(row, 2, "p")?,
                mean: field(row, 3, "mean")?,
                std_error: field(row, 4, "std_error")?,
                n_alive: field(row, 5, "n_alive")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalRow {
    pub t: f64,
    pub f_hat: f64,
    pub f_se: f64,
    pub g_hat: f64,
    pub g_se: f64,
}

pub fn functional_rows(series: &FunctionalSeries) -> Vec<FunctionalRow> {
    series
        .times
        .iter()
        .zip(series.f_hat.iter().zip(&series.g_hat))
        .map(|(&t, (&(f_hat, f_se), &(g_hat, g_se)))| FunctionalRow {
            t,
            f_hat,
            f_se,
            g_hat,
            g_se,
        })
        .collect()
}

pub fn write_functionals<W: Write>(w: W, rows_in: &[FunctionalRow]) -> Result<()> {
    let mut out = writer(w, &FUNCTIONAL_HEADER)?;
    for r in rows_in {
        out.write_record([
            r.t.to_string(),
            r.f_hat.to_string(),
            r.f_se.to_string(),
            r.g_hat.to_string(),
            r.g_se.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_functionals<R: Read>(r: R) -> Result<Vec<FunctionalRow>> {
    rows(r, &FUNCTIONAL_HEADER)?
        .iter()
        .map(|row| {
            Ok(FunctionalRow {
                t: field(row, 0, "t")?,
                f_hat: field(row, 1, "F_hat")?,
                f_se: field(row, 2, "F_se")?,
                g_hat: field(row, 3, "G_hat")?,
                g_se: field(row, 4, "G_se")?,
            })
        })
        .collect()
}

/// A survived cell stores its horizon in the `median_t_blow` column.
pub fn write_phase<W: Write>(w: W, cells: &[PhaseCell]) -> Result<()> {
    let mut out = writer(w, &PHASE_HEADER)?;
    for c in cells {
        let (verdict, time) = match c.verdict {
            PhaseVerdict::BlewUp { median_t_blow } => ("blew_up", median_t_blow),
            PhaseVerdict::Survived { horizon } => ("survived", horizon),
        };
        out.write_record([
            c.alpha.to_string(),
            c.excess.to_string(),
            c.kappa.to_string(),
            c.fraction_blown.to_string(),
            verdict.to_string(),
            time.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_phase<R: Read>(r: R) -> Result<Vec<PhaseCell>> {
    rows(r, &PHASE_HEADER)?
        .iter()
        .map(|row| {
            let time: f64 = field(row, 5, "median_t_blow")?;
            let verdict = match row.get(4).map(str::trim) {
                Some("blew_up") => PhaseVerdict::BlewUp { median_t_blow: time },
                Some("survived") => PhaseVerdict::Survived { horizon: time },
                other => return Err(Error::Format(format!("column verdict: unknown value {other:?}"))),
            };
            Ok(PhaseCell {
                alpha: field(row, 0, "alpha")?,
                excess: field(row, 1, "excess")?,
                kappa: field(row, 2, "kappa")?,
                fraction_blown: field(row, 3, "fraction_blown")?,
                verdict,
            })
        })
        .collect()
}

pub fn write_ode_trajectory<W: Write>(w: W, trajectory: &[(f64, f64)]) -> Result<()> {
    let mut out = writer(w, &ODE_HEADER)?;
    for (t, y) in trajectory {
        out.write_record([t.to_string(), y.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ode_trajectory<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    rows(r, &ODE_HEADER)?
        .iter()
        .map(|row| Ok((field(row, 0, "t")?, field(row, 1, "y")?)))
        .collect()
}

/// `blows_up=true,t_star=2.718281828459045`, with `asymptote=` in place
/// of `t_star=` for bounded solutions.
pub fn format_verdict(v: &BlowupVerdict) -> String {
    let mut line = format!("blows_up={}", v.blows_up);
    if let Some(t) = v.t_star {
        line.push_str(&format!(",t_star={t}"));
    }
    if let Some(y) = v.asymptote {
        line.push_str(&format!(",asymptote={y}"));
    }
    line
}

pub fn parse_verdict(line: &str) -> Result<BlowupVerdict> {
    let mut verdict = BlowupVerdict {
        blows_up: false,
        t_star: None,
        asymptote: None,
    };
    let mut seen = false;
    for part in line.trim().split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("verdict: expected key=value, found {part:?}")))?;
        let bad = || Error::Format(format!("verdict: cannot parse {part:?}"));
        match key {
            "blows_up" => {
                verdict.blows_up = value.parse().map_err(|_| bad())?;
                seen = true;
            }
            "t_star" => verdict.t_star = Some(value.parse().map_err(|_| bad())?),
            "asymptote" => verdict.asymptote = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::Format(format!("verdict: unknown key {key:?}"))),
        }
    }
    if !seen {
        return Err(Error::Format("verdict: missing blows_up".into()));
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots_round_trip_bits() {
        let grid = Grid::new(1.0, 4).unwrap();
        let snaps = vec![
            FieldState {
                t: 0.0,
                values: vec![0.1, 1.0 / 3.0, -2.5e-300, f64::NAN],
            },
            FieldState {
                t: 0.1 + 0.2,
                values: vec![1e10, 0.0, -0.0, 7.0],
            },
        ];
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &grid, &snaps).unwrap();
        let back = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in snaps.iter().zip(&back) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.values), bits(&b.values));
        }
    }

    #[test]
    fn phase_round_trip() {
        let cells = vec![
            PhaseCell {
                kappa: 10.0,
                excess: 0.5,
                alpha: 2.0,
                verdict: PhaseVerdict::BlewUp { median_t_blow: 0.0123 },
                fraction_blown: 1.0,
            },
            PhaseCell {
                kappa: 0.01,
                excess: 0.5,
                alpha: 1.5,
                verdict: PhaseVerdict::Survived { horizon: 1.0 },
                fraction_blown: 0.25,
            },
        ];
        let mut buf = Vec::new();
        write_phase(&mut buf, &cells).unwrap();
        assert_eq!(read_phase(buf.as_slice()).unwrap(), cells);
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let text = "t,y,z\n1,2,3\n";
        assert!(matches!(read_snapshots(text.as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_ode_trajectory("t,y\n1,x\n".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn verdict_lines() {
        let v = BlowupVerdict {
            blows_up: true,
            t_star: Some(std::f64::consts::E),
            asymptote: None,
        };
        let line = format_verdict(&v);
        assert_eq!(line, "blows_up=true,t_star=2.718281828459045");
        assert_eq!(parse_verdict(&line).unwrap(), v);
        let bounded = BlowupVerdict {
            blows_up: false,
            t_star: None,
            asymptote: Some(1.0),
        };
        assert_eq!(parse_verdict(&format_verdict(&bounded)).unwrap(), bounded);
        assert!(parse_verdict("t_star=1").is_err());
    }
}
