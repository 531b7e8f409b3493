//! CSV persistence.
//!
//! - ODE trajectories: `k,t,u_1,...,u_m`, one row per time node.
//! - Split runs: `k,t,j,x,u,v`, one row per (snapshot, node).
//! - Initial data: `j,u,v`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use posflow_core::{Field1D, Grid1D, SplitState, StateVec, TimeGrid, Trajectory};

use crate::error::{CliError, Result};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn bad_data(path: &Path, msg: String) -> CliError {
    CliError::Csv {
        path: path.to_path_buf(),
        source: csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, msg)),
    }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(csv_err(path))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| bad_data(path, format!("missing column `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| bad_data(path, format!("column `{name}`: cannot parse `{raw}`")))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[String]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err(path))?;
    if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(bad_data(
            path,
            format!("header {:?}, expected {:?}", header.iter().collect::<Vec<_>>(), expected),
        ));
    }
    Ok(())
}

fn flush(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_ode_csv(path: &Path, tr: &Trajectory) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((1..=tr.dim()).map(|i| format!("u_{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (k, (t, s)) in tr.grid().times().zip(tr.states()).enumerate() {
        let mut row = vec![k.to_string(), fmt_f64(t)];
        row.extend(s.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    flush(path, w)
}

pub fn read_ode_csv(path: &Path) -> Result<Trajectory> {
    let mut rdr = open(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    let dim = header.len().saturating_sub(2);
    if dim == 0 {
        return Err(bad_data(path, "need columns k,t,u_1,...".into()));
    }
    let mut expected = vec!["k".to_string(), "t".to_string()];
    expected.extend((1..=dim).map(|i| format!("u_{i}")));
    check_header(path, &mut rdr, &expected)?;

    let mut times = Vec::new();
    let mut states = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let k: usize = field(path, &rec, 0, "k")?;
        if k != row {
            return Err(bad_data(path, format!("row {row} has k = {k}")));
        }
        times.push(field::<f64>(path, &rec, 1, "t")?);
        let s = (0..dim)
            .map(|i| field(path, &rec, i + 2, &expected[i + 2]))
            .collect::<Result<Vec<f64>>>()?;
        states.push(StateVec::new(s));
    }
    if times.len() < 2 {
        return Err(bad_data(path, "trajectory needs at least two rows".into()));
    }
    let grid = TimeGrid::new(times[1], times.len())?;
    if let Some(r) = (0..times.len()).find(|&r| grid.time(r) != times[r]) {
        return Err(bad_data(path, format!("row {r}: t is not k * dt")));
    }
    Ok(Trajectory::new(grid, states)?)
}

const PDE_HEADER: [&str; 6] = ["k", "t", "j", "x", "u", "v"];

/// Streams split-run snapshots to a CSV file.
pub struct PdeCsvWriter {
    path: PathBuf,
    grid: Grid1D,
    inner: csv::Writer<BufWriter<File>>,
}

impl PdeCsvWriter {
    pub fn create(path: &Path, grid: Grid1D) -> Result<Self> {
        let mut inner = create(path)?;
        inner.write_record(PDE_HEADER).map_err(csv_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            grid,
            inner,
        })
    }

    pub fn write(&mut self, s: &SplitState) -> Result<()> {
        let (k, t) = (s.k.to_string(), fmt_f64(s.t));
        for (j, (&u, &v)) in s.u.iter().zip(s.v.iter()).enumerate() {
            self.inner
                .write_record([
                    k.as_str(),
                    t.as_str(),
                    &j.to_string(),
                    &fmt_f64(self.grid.x(j)),
                    &fmt_f64(u),
                    &fmt_f64(v),
                ])
                .map_err(csv_err(&self.path))?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        flush(&self.path, self.inner)
    }
}

pub fn write_pde_csv(path: &Path, grid: Grid1D, snapshots: &[SplitState]) -> Result<()> {
    let mut w = PdeCsvWriter::create(path, grid)?;
    for s in snapshots {
        w.write(s)?;
    }
    w.finish()
}

/// Reads snapshots written by [`write_pde_csv`]. The `x` column is not used.
pub fn read_pde_csv(path: &Path) -> Result<Vec<SplitState>> {
    let mut rdr = open(path)?;
    let expected: Vec<String> = PDE_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(path, &mut rdr, &expected)?;
    // (k, t, u, v) per snapshot
    let mut rows: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let k: usize = field(path, &rec, 0, "k")?;
        let t: f64 = field(path, &rec, 1, "t")?;
        let j: usize = field(path, &rec, 2, "j")?;
        if j == 0 {
            rows.push((k, t, Vec::new(), Vec::new()));
        }
        match rows.last_mut() {
            Some((sk, st, u, v)) if *sk == k && st.to_bits() == t.to_bits() && u.len() == j => {
                u.push(field(path, &rec, 4, "u")?);
                v.push(field(path, &rec, 5, "v")?);
            }
            _ => return Err(bad_data(path, format!("row (k = {k}, j = {j}) out of sequence"))),
        }
    }
    Ok(rows
        .into_iter()
        .map(|(k, t, u, v)| SplitState { u: u.into(), v: v.into(), k, t })
        .collect())
}

/// Reads `j,u,v` initial data; `j` must run `0, 1, 2, ...`.
pub fn read_initial_csv(path: &Path) -> Result<(Field1D, Field1D)> {
    let mut rdr = open(path)?;
    check_header(path, &mut rdr, &["j".into(), "u".into(), "v".into()])?;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let j: usize = field(path, &rec, 0, "j")?;
        if j != row {
            return Err(bad_data(path, format!("row {row} has j = {j}")));
        }
        u.push(field(path, &rec, 1, "u")?);
        v.push(field(path, &rec, 2, "v")?);
    }
    Ok((u.into(), v.into()))
}

pub fn write_initial_csv(path: &Path, u: &[f64], v: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["j", "u", "v"]).map_err(csv_err(path))?;
    for (j, (&a, &b)) in u.iter().zip(v).enumerate() {
        w.write_record([j.to_string(), fmt_f64(a), fmt_f64(b)])
            .map_err(csv_err(path))?;
    }
    flush(path, w)
}

/// Two-column `quantity,value` table.
pub fn write_key_values(path: &Path, rows: &[(&str, f64)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["quantity", "value"]).map_err(csv_err(path))?;
    for (name, value) in rows {
        w.write_record([name.to_string(), fmt_f64(*value)])
            .map_err(csv_err(path))?;
    }
    flush(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use posflow_core::Boundary;
    use proptest::prelude::*;

    #[test]
    fn ode_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ode.csv");
        let grid = TimeGrid::new(0.1, 3).unwrap();
        let tr = Trajectory::new(
            grid,
            vec![
                vec![0.5, 1e-300].into(),
                vec![1.0 / 3.0, 2.0e-4].into(),
                vec![0.1 + 0.2, 123456.789].into(),
            ],
        )
        .unwrap();
        write_ode_csv(&path, &tr).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,t,u_1,u_2\n0,0.0,0.5,1e-300\n"), "{text}");
        assert_eq!(read_ode_csv(&path).unwrap(), tr);
    }

    #[test]
    fn pde_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pde.csv");
        let grid = Grid1D::new(1.0, 3, Boundary::Neumann).unwrap();
        let snaps = vec![
            SplitState { u: vec![0.1, 0.2, 0.3, 0.4].into(), v: vec![0.5; 4].into(), k: 0, t: 0.0 },
            SplitState { u: vec![0.7; 4].into(), v: vec![1.0 / 7.0; 4].into(), k: 5, t: 5.0 * 4.95e-5 },
        ];
        write_pde_csv(&path, grid, &snaps).unwrap();
        assert_eq!(read_pde_csv(&path).unwrap(), snaps);
    }

    #[test]
    fn initial_csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.csv");
        write_initial_csv(&path, &[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6]).unwrap();
        let (u, v) = read_initial_csv(&path).unwrap();
        assert_eq!(&*u, &[0.1, 0.2, 0.3]);
        assert_eq!(&*v, &[0.4, 0.5, 0.6]);
        std::fs::write(&path, "j,u,v\n0,0.1,0.2\n2,0.1,0.2\n").unwrap();
        assert!(read_initial_csv(&path).is_err());
        std::fs::write(&path, "j,u,w\n0,0.1,0.2\n").unwrap();
        assert!(read_initial_csv(&path).is_err());
        assert!(read_initial_csv(&dir.path().join("missing.csv")).is_err());
    }

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
