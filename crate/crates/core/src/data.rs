//! Dataset containers and their CSV ingestion.
//!
//! All containers are immutable once validated. Cell ids are contiguous from
//! 0, so every cell-indexed array (forecasts, panels, bases, fields) is
//! indexed by cell id. Stations are addressed by their position in file order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{self, LonLat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: u32,
    pub pos: LonLat,
}

/// Forecast grid: the index set of the spectral bases.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    cells: Vec<Cell>,
    spacing: f64,
    by_id: Vec<usize>,
}

impl GridSpec {
    pub fn new(cells: Vec<Cell>, spacing: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Validation("grid must contain at least 1 cell".into()));
        }
        let n = cells.len();
        let mut by_id = vec![usize::MAX; n];
        for (k, c) in cells.iter().enumerate() {
            if !(c.pos.lon.is_finite() && c.pos.lat.is_finite()) {
                return Err(Error::Validation(format!("cell {} has non-finite coordinates", c.id)));
            }
            let id = c.id as usize;
            if id >= n {
                return Err(Error::Validation(format!(
                    "cell ids must be contiguous from 0; found id {} in a grid of {n} cells",
                    c.id
                )));
            }
            if by_id[id] != usize::MAX {
                return Err(Error::Validation(format!("duplicate cell id {}", c.id)));
            }
            by_id[id] = k;
        }
        Ok(Self { cells, spacing, by_id })
    }

    /// Regular `nx * ny` lattice, row-major from the south-west corner.
    pub fn regular(nx: usize, ny: usize, lon0: f64, lat0: f64, spacing: f64) -> Result<Self> {
        let mut cells = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                cells.push(Cell {
                    id: (iy * nx + ix) as u32,
                    pos: LonLat::new(lon0 + ix as f64 * spacing, lat0 + iy as f64 * spacing),
                });
            }
        }
        Self::new(cells, spacing)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinates indexed by cell id.
    pub fn coords(&self) -> Vec<LonLat> {
        self.by_id.iter().map(|&k| self.cells[k].pos).collect()
    }

    pub fn coord_of(&self, id: usize) -> LonLat {
        self.cells[self.by_id[id]].pos
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.by_id.get(id as usize).copied()
    }

    /// Sub-grid made of the given cell ids, re-numbered from 0.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let cells = ids
            .iter()
            .enumerate()
            .map(|(k, &id)| Cell { id: k as u32, pos: self.coord_of(id) })
            .collect();
        Self::new(cells, self.spacing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub id: u32,
    pub pos: LonLat,
}

/// Observation sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSet {
    stations: Vec<Station>,
}

impl StationSet {
    pub fn new(stations: Vec<Station>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &stations {
            if !(s.pos.lon.is_finite() && s.pos.lat.is_finite()) {
                return Err(Error::Validation(format!("station {} has non-finite coordinates", s.id)));
            }
            if !seen.insert(s.id) {
                return Err(Error::Validation(format!("duplicate station id {}", s.id)));
            }
        }
        Ok(Self { stations })
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn ids(&self) -> Vec<u32> {
        self.stations.iter().map(|s| s.id).collect()
    }

    pub fn coords(&self) -> Vec<LonLat> {
        self.stations.iter().map(|s| s.pos).collect()
    }

    pub fn position_of(&self, id: u32) -> Option<usize> {
        self.stations.iter().position(|s| s.id == id)
    }
}

/// Raw ensemble forecasts, `day x member x cell id`; `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastArchive {
    days: usize,
    members: usize,
    cells: usize,
    values: Vec<f64>,
}

impl ForecastArchive {
    pub fn new(days: usize, members: usize, cells: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != days * members * cells {
            return Err(Error::LengthMismatch { expected: days * members * cells, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_nan() && !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!("forecast value {v} is not a finite amount >= 0")));
        }
        Ok(Self { days, members, cells, values })
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    fn index(&self, day: usize, member: usize, cell: usize) -> usize {
        (day * self.members + member) * self.cells + cell
    }

    pub fn get(&self, day: usize, member: usize, cell: usize) -> Option<f64> {
        let v = self.values[self.index(day, member, cell)];
        (!v.is_nan()).then_some(v)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    #[cfg(test)]
    pub(crate) fn raw(&self) -> &[f64] {
        &self.values
    }
}

/// Forecast maps on the unit Fréchet scale, stored map-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetPanel {
    n_maps: usize,
    n_cells: usize,
    values: Vec<f64>,
}

impl FrechetPanel {
    pub fn new(n_maps: usize, n_cells: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_maps * n_cells {
            return Err(Error::LengthMismatch { expected: n_maps * n_cells, got: values.len() });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation("panel values must be finite and >= 0".into()));
        }
        Ok(Self { n_maps, n_cells, values })
    }

    /// Panel from a list of maps of equal length.
    pub fn from_maps(maps: &[Vec<f64>]) -> Result<Self> {
        let n_cells = maps.first().map_or(0, Vec::len);
        if let Some(m) = maps.iter().find(|m| m.len() != n_cells) {
            return Err(Error::LengthMismatch { expected: n_cells, got: m.len() });
        }
        Self::new(maps.len(), n_cells, maps.concat())
    }

    pub fn n_maps(&self) -> usize {
        self.n_maps
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn map(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }

    pub fn maps(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cells.max(1)).take(self.n_maps)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Block maxima, `block x station`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaMatrix {
    values: Vec<f64>,
    n_blocks: usize,
    n_stations: usize,
    block_length: usize,
}

impl MaximaMatrix {
    pub fn new(n_blocks: usize, n_stations: usize, values: Vec<f64>, block_length: usize) -> Result<Self> {
        if values.len() != n_blocks * n_stations {
            return Err(Error::LengthMismatch { expected: n_blocks * n_stations, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Validation(format!("block maxima must be finite and > 0, found {v}")));
        }
        Ok(Self { values, n_blocks, n_stations, block_length })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn get(&self, block: usize, station: usize) -> f64 {
        self.values[block * self.n_stations + station]
    }

    pub fn row(&self, block: usize) -> &[f64] {
        &self.values[block * self.n_stations..(block + 1) * self.n_stations]
    }

    pub fn column(&self, station: usize) -> Vec<f64> {
        (0..self.n_blocks).map(|b| self.get(b, station)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Nearest grid cell id (by great-circle distance) for every station, in
/// station order. Ties go to the smaller cell id.
pub fn map_stations_to_cells(stations: &StationSet, grid: &GridSpec) -> Result<Vec<usize>> {
    if stations.is_empty() {
        return Err(Error::Validation("no stations to map".into()));
    }
    Ok(stations
        .stations()
        .iter()
        .map(|s| {
            geo::nearest(s.pos, grid.cells().iter().map(|c| (c.id, c.pos))).expect("grid is never empty") as usize
        })
        .collect())
}

// ---------------------------------------------------------------------------
// CSV ingestion

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header {}, found {}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn records(path: &Path, expected: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, path, expected)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != expected.len() {
            return Err(parse_err(path, line, format!("expected {} fields, got {}", expected.len(), rec.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, k: usize, name: &str) -> Result<T> {
    rec[k]
        .parse::<T>()
        .map_err(|_| parse_err(path, line, format!("cannot parse {name} from {:?}", &rec[k])))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridSpec> {
    let path = path.as_ref();
    let mut cells = Vec::new();
    for (line, rec) in records(path, &["cell_id", "lon", "lat"])? {
        cells.push(Cell {
            id: field(path, line, &rec, 0, "cell_id")?,
            pos: LonLat::new(field(path, line, &rec, 1, "lon")?, field(path, line, &rec, 2, "lat")?),
        });
    }
    let spacing = infer_spacing(&cells);
    GridSpec::new(cells, spacing)
}

fn infer_spacing(cells: &[Cell]) -> f64 {
    let mut best = f64::INFINITY;
    for w in cells.windows(2) {
        for d in [(w[1].pos.lon - w[0].pos.lon).abs(), (w[1].pos.lat - w[0].pos.lat).abs()] {
            if d > 1e-12 && d < best {
                best = d;
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

pub fn read_stations(path: impl AsRef<Path>) -> Result<StationSet> {
    let path = path.as_ref();
    let mut stations = Vec::new();
    for (line, rec) in records(path, &["station_id", "lon", "lat"])? {
        stations.push(Station {
            id: field(path, line, &rec, 0, "station_id")?,
            pos: LonLat::new(field(path, line, &rec, 1, "lon")?, field(path, line, &rec, 2, "lat")?),
        });
    }
    StationSet::new(stations)
}

/// Forecast archive in long format. Days and members are 0-based; the archive
/// spans `0..=max` of each. Absent rows and empty values are both missing.
pub fn read_forecasts(path: impl AsRef<Path>, grid: &GridSpec) -> Result<ForecastArchive> {
    let path = path.as_ref();
    let rows = records(path, &["day", "member", "cell_id", "value"])?;
    let mut parsed = Vec::with_capacity(rows.len());
    let (mut days, mut members) = (0usize, 0usize);
    for (line, rec) in &rows {
        let day: usize = field(path, *line, rec, 0, "day")?;
        let member: usize = field(path, *line, rec, 1, "member")?;
        let cell_id: u32 = field(path, *line, rec, 2, "cell_id")?;
        if grid.position_of(cell_id).is_none() {
            return Err(Error::Validation(format!("line {line}: cell_id {cell_id} not in grid")));
        }
        let cell = cell_id as usize;
        let value = if rec[3].is_empty() { f64::NAN } else { field(path, *line, rec, 3, "value")? };
        days = days.max(day + 1);
        members = members.max(member + 1);
        parsed.push((day, member, cell, value));
    }
    let cells = grid.len();
    let mut values = vec![f64::NAN; days * members * cells];
    for (day, member, cell, value) in parsed {
        values[(day * members + member) * cells + cell] = value;
    }
    ForecastArchive::new(days, members, cells, values)
}

/// Block maxima in long format; every block must list every station.
pub fn read_maxima(path: impl AsRef<Path>, stations: &StationSet) -> Result<MaximaMatrix> {
    read_maxima_for_ids(path, &stations.ids())
}

/// Station ids of a maxima file, in order of first appearance.
pub fn maxima_station_ids(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, rec) in records(path, &["block", "station_id", "value"])? {
        let sid: u32 = field(path, line, &rec, 1, "station_id")?;
        if seen.insert(sid) {
            ids.push(sid);
        }
    }
    Ok(ids)
}

/// As [`read_maxima`], with columns in the order of `ids`.
pub fn read_maxima_for_ids(path: impl AsRef<Path>, ids: &[u32]) -> Result<MaximaMatrix> {
    let path = path.as_ref();
    let index: HashMap<u32, usize> = ids.iter().copied().enumerate().map(|(k, id)| (id, k)).collect();
    let mut blocks: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (line, rec) in records(path, &["block", "station_id", "value"])? {
        let block: usize = field(path, line, &rec, 0, "block")?;
        let sid: u32 = field(path, line, &rec, 1, "station_id")?;
        let value: f64 = field(path, line, &rec, 2, "value")?;
        let k = *index
            .get(&sid)
            .ok_or_else(|| Error::Validation(format!("line {line}: station_id {sid} not in station set")))?;
        let row = blocks.entry(block).or_insert_with(|| vec![f64::NAN; ids.len()]);
        row[k] = value;
    }
    let n_blocks = blocks.len();
    let mut values = Vec::with_capacity(n_blocks * ids.len());
    for (b, row) in blocks {
        if let Some(k) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::Validation(format!("block {b} has no value for station {}", ids[k])));
        }
        values.extend(row);
    }
    MaximaMatrix::new(n_blocks, ids.len(), values, 0)
}

// ---------------------------------------------------------------------------
// CSV output

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Write lines to `path`; rows are produced by `body`.
pub(crate) fn write_lines(
    path: &Path,
    header: &str,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    let res = writeln!(w, "{header}").and_then(|_| body(&mut w)).and_then(|_| w.flush());
    res.map_err(|e| Error::io(path, e))
}

pub fn write_grid(path: impl AsRef<Path>, grid: &GridSpec) -> Result<()> {
    write_lines(path.as_ref(), "cell_id,lon,lat", |w| {
        for c in grid.cells() {
            writeln!(w, "{},{},{}", c.id, c.pos.lon, c.pos.lat)?;
        }
        Ok(())
    })
}

pub fn write_stations(path: impl AsRef<Path>, stations: &StationSet) -> Result<()> {
    write_lines(path.as_ref(), "station_id,lon,lat", |w| {
        for s in stations.stations() {
            writeln!(w, "{},{},{}", s.id, s.pos.lon, s.pos.lat)?;
        }
        Ok(())
    })
}

pub fn write_forecasts(path: impl AsRef<Path>, grid: &GridSpec, archive: &ForecastArchive) -> Result<()> {
    write_lines(path.as_ref(), "day,member,cell_id,value", |w| {
        for d in 0..archive.days() {
            for m in 0..archive.members() {
                for c in 0..grid.len() {
                    match archive.get(d, m, c) {
                        Some(v) => writeln!(w, "{d},{m},{c},{v}")?,
                        None => writeln!(w, "{d},{m},{c},")?,
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn write_maxima(path: impl AsRef<Path>, stations: &StationSet, maxima: &MaximaMatrix) -> Result<()> {
    write_lines(path.as_ref(), "block,station_id,value", |w| {
        for b in 0..maxima.n_blocks() {
            for (k, s) in stations.stations().iter().enumerate() {
                writeln!(w, "{b},{},{}", s.id, maxima.get(b, k))?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_three_cell_grid() {
        let f = tmp_file("cell_id,lon,lat\n0,3.0,43.0\n1,3.1,43.0\n2,3.2,43.0\n");
        let g = read_grid(f.path()).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g.spacing() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn rejects_duplicate_and_empty_grids() {
        let f = tmp_file("cell_id,lon,lat\n0,3.0,43.0\n1,3.1,43.0\n1,3.2,43.0\n");
        assert!(matches!(read_grid(f.path()), Err(Error::Validation(_))));
        let f = tmp_file("cell_id,lon,lat\n");
        match read_grid(f.path()) {
            Err(Error::Validation(msg)) => assert!(msg.contains("at least 1 cell")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let f = tmp_file("cell_id,lon,lat\n0,3.0,43.0\n1,abc,43.0\n");
        match read_grid(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_forecast_value_is_missing() {
        let g = tmp_file("cell_id,lon,lat\n0,3.0,43.0\n1,3.1,43.0\n");
        let grid = read_grid(g.path()).unwrap();
        let f = tmp_file("day,member,cell_id,value\n0,0,0,1.5\n0,0,1,\n1,0,0,0\n1,0,1,2\n");
        let a = read_forecasts(f.path(), &grid).unwrap();
        assert_eq!((a.days(), a.members(), a.cells()), (2, 1, 2));
        assert_eq!(a.missing_count(), 1);
        assert_eq!(a.get(0, 0, 1), None);
        assert_eq!(a.get(1, 0, 0), Some(0.0));
    }

    #[test]
    fn forecast_cell_outside_grid_is_rejected() {
        let g = tmp_file("cell_id,lon,lat\n0,3.0,43.0\n");
        let grid = read_grid(g.path()).unwrap();
        let f = tmp_file("day,member,cell_id,value\n0,0,5,1.0\n");
        assert!(matches!(read_forecasts(f.path(), &grid), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_maximum_is_rejected() {
        let s = tmp_file("station_id,lon,lat\n10,3.0,43.0\n11,3.5,43.5\n");
        let stations = read_stations(s.path()).unwrap();
        let m = tmp_file("block,station_id,value\n0,10,1.0\n0,11,0.0\n");
        assert!(matches!(read_maxima(m.path(), &stations), Err(Error::Validation(_))));
    }

    #[test]
    fn maxima_shape_follows_station_file() {
        let stations = StationSet::new(
            (0..39).map(|k| Station { id: 100 + k, pos: LonLat::new(3.0 + 0.1 * k as f64, 43.5) }).collect(),
        )
        .unwrap();
        let values: Vec<f64> = (0..190 * 39).map(|k| 1.0 + (k % 17) as f64).collect();
        let mm = MaximaMatrix::new(190, 39, values, 18).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("stations.csv");
        let mp = dir.path().join("maxima.csv");
        write_stations(&sp, &stations).unwrap();
        write_maxima(&mp, &stations, &mm).unwrap();
        let back = read_maxima(&mp, &read_stations(&sp).unwrap()).unwrap();
        assert_eq!((back.n_blocks(), back.n_stations()), (190, 39));
        assert_eq!(back.values(), mm.values());
    }

    #[test]
    fn station_on_cell_centre_and_ties() {
        let grid = GridSpec::regular(10, 1, 3.0, 43.0, 0.1).unwrap();
        let on = StationSet::new(vec![Station { id: 1, pos: LonLat::new(3.3, 43.0) }]).unwrap();
        assert_eq!(map_stations_to_cells(&on, &grid).unwrap(), vec![3]);

        // equidistant between cells 4 and 7 of a hand-built grid
        let cells = (0..8)
            .map(|k| {
                let lon = match k {
                    4 => 1.0,
                    7 => -1.0,
                    _ => 10.0 + k as f64,
                };
                Cell { id: k, pos: LonLat::new(lon, 0.0) }
            })
            .collect();
        let grid = GridSpec::new(cells, 1.0).unwrap();
        let mid = StationSet::new(vec![Station { id: 1, pos: LonLat::new(0.0, 0.0) }]).unwrap();
        assert_eq!(map_stations_to_cells(&mid, &grid).unwrap(), vec![4]);
    }

    #[test]
    fn nearest_cell_matches_brute_force_scan() {
        let grid = GridSpec::regular(30, 30, 2.5, 42.5, 0.1).unwrap();
        let p = LonLat::new(3.95, 43.61);
        let st = StationSet::new(vec![Station { id: 0, pos: p }]).unwrap();
        let got = map_stations_to_cells(&st, &grid).unwrap()[0];
        let mut best = (f64::INFINITY, 0);
        for (k, c) in grid.cells().iter().enumerate() {
            let d = geo::haversine_km(p, c.pos);
            if d < best.0 {
                best = (d, k);
            }
        }
        assert_eq!(got, best.1);
        let c = grid.cells()[got].pos;
        assert!((c.lon - 3.9).abs() < 0.051 || (c.lon - 4.0).abs() < 0.051);
        assert!((c.lat - 43.6).abs() < 0.051 || (c.lat - 43.7).abs() < 0.051);
    }

    #[test]
    fn grid_and_forecast_round_trip() {
        let grid = GridSpec::regular(3, 2, 3.05, 43.15, 0.1).unwrap();
        let values: Vec<f64> = (0..2 * 2 * 6)
            .map(|k| if k == 5 { f64::NAN } else { 0.1 * k as f64 + 1e-7 })
            .collect();
        let archive = ForecastArchive::new(2, 2, 6, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_grid(dir.path().join("g.csv"), &grid).unwrap();
        write_forecasts(dir.path().join("f.csv"), &grid, &archive).unwrap();
        let g2 = read_grid(dir.path().join("g.csv")).unwrap();
        assert_eq!(g2.cells(), grid.cells());
        let a2 = read_forecasts(dir.path().join("f.csv"), &g2).unwrap();
        assert_eq!(a2.missing_count(), 1);
        for (x, y) in a2.raw().iter().zip(archive.raw()) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }
}
