//! Load and temperature ingestion: CSV and grid parsing, temporal and
//! spatial interpolation, timestamp alignment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Instant, STEP_MINUTES};

/// Half-hourly substation load in MW.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadSeries {
    pub station_id: String,
    /// Strictly increasing, every `load_mw > 0`.
    pub points: Vec<(Instant, f64)>,
    /// Missing instants inside the covered range, ascending.
    pub gaps: Vec<Instant>,
}

impl LoadSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<Instant> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Index of the point at `t`, if present.
    pub fn index_of(&self, t: Instant) -> Option<usize> {
        self.points.binary_search_by_key(&t, |p| p.0).ok()
    }
}

/// Point temperature series in °C.
#[derive(Clone, Debug, PartialEq)]
pub struct TempSeries {
    /// `(lat, lon)` in degrees when known.
    pub location: Option<(f64, f64)>,
    pub points: Vec<(Instant, f64)>,
}

impl TempSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> Vec<Instant> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn index_of(&self, t: Instant) -> Option<usize> {
        self.points.binary_search_by_key(&t, |p| p.0).ok()
    }
}

/// Gridded temperature, `values[time][lat][lon]` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TempGrid {
    lat_axis: Vec<f64>,
    lon_axis: Vec<f64>,
    times: Vec<Instant>,
    values: Vec<f64>,
}

impl TempGrid {
    pub fn new(
        lat_axis: Vec<f64>,
        lon_axis: Vec<f64>,
        times: Vec<Instant>,
        values: Vec<f64>,
    ) -> Result<Self> {
        for (name, axis) in [("lat", &lat_axis), ("lon", &lon_axis)] {
            if axis.is_empty() {
                return Err(Error::Shape(format!("{name} axis is empty")));
            }
            if axis.windows(2).any(|w| !(w[0] < w[1])) || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("{name} axis must be strictly ascending")));
            }
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("grid times must be strictly increasing".into()));
        }
        let expected = times.len() * lat_axis.len() * lon_axis.len();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "grid holds {} values, axes require {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("grid contains non-finite values".into()));
        }
        Ok(TempGrid { lat_axis, lon_axis, times, values })
    }

    pub fn lat_axis(&self) -> &[f64] {
        &self.lat_axis
    }

    pub fn lon_axis(&self) -> &[f64] {
        &self.lon_axis
    }

    pub fn times(&self) -> &[Instant] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn plane(&self) -> usize {
        self.lat_axis.len() * self.lon_axis.len()
    }

    pub fn get(&self, time: usize, lat: usize, lon: usize) -> f64 {
        self.values[time * self.plane() + lat * self.lon_axis.len() + lon]
    }

    fn slice_at(&self, time: usize) -> &[f64] {
        let p = self.plane();
        &self.values[time * p..(time + 1) * p]
    }
}

/// Station coordinates and optional regional factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    #[serde(rename = "id")]
    pub station_id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub region_factors: BTreeMap<String, f64>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn check_header(path: &Path, header: Option<(usize, &str)>, expected: &str) -> Result<()> {
    let Some((line, header)) = header else {
        return Err(Error::EmptyFile(path.to_path_buf()));
    };
    let header = header.trim_start_matches('\u{feff}').trim();
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    let want: Vec<&str> = expected.split(',').collect();
    if fields != want {
        return Err(parse_err(path, line, format!("expected header `{expected}`, found `{header}`")));
    }
    Ok(())
}

fn parse_timestamp(path: &Path, line: usize, text: &str) -> Result<Instant> {
    let t = Instant::parse(text)
        .ok_or_else(|| parse_err(path, line, format!("bad timestamp `{}`", text.trim())))?;
    if !t.is_on_grid() {
        return Err(parse_err(path, line, format!("timestamp {t} is not on the 30-minute grid")));
    }
    Ok(t)
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Sort rows by time and reject duplicates, reporting the later line.
fn sort_unique(path: &Path, mut rows: Vec<(Instant, usize, Option<f64>)>) -> Result<Vec<(Instant, usize, Option<f64>)>> {
    rows.sort_by_key(|r| (r.0, r.1));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateTimestamp {
            path: path.to_path_buf(),
            line: w[1].1,
            timestamp: w[1].0.to_string(),
        });
    }
    Ok(rows)
}

/// Parse `timestamp,load_mw` text. Missing or non-positive loads become gaps,
/// as do instants absent between the first and last row.
pub fn parse_load_str(text: &str, path: &Path, station_id: &str) -> Result<LoadSeries> {
    let mut lines = numbered_lines(text);
    check_header(path, lines.next(), "timestamp,load_mw")?;

    let mut rows = Vec::new();
    for (line, raw) in lines {
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", fields.len())));
        }
        let t = parse_timestamp(path, line, fields[0])?;
        let field = fields[1].trim();
        let load = if field.is_empty() || field.eq_ignore_ascii_case("nan") {
            None
        } else {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad load value `{field}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("bad load value `{field}`")));
            }
            Some(v)
        };
        rows.push((t, line, load));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let rows = sort_unique(path, rows)?;

    let mut points = Vec::with_capacity(rows.len());
    let mut gaps = Vec::new();
    let mut prev: Option<Instant> = None;
    for (t, _, load) in rows {
        if let Some(p) = prev {
            let mut missing = p.plus_steps(1);
            while missing < t {
                gaps.push(missing);
                missing = missing.plus_steps(1);
            }
        }
        prev = Some(t);
        match load {
            Some(v) if v > 0.0 => points.push((t, v)),
            _ => gaps.push(t),
        }
    }
    gaps.sort();
    Ok(LoadSeries { station_id: station_id.to_string(), points, gaps })
}

pub fn parse_load_csv(path: impl AsRef<Path>, station_id: &str) -> Result<LoadSeries> {
    let path = path.as_ref();
    parse_load_str(&read_text(path)?, path, station_id)
}

/// Parse a pre-extracted `timestamp,temp_c` series.
pub fn parse_temp_str(text: &str, path: &Path) -> Result<TempSeries> {
    let mut lines = numbered_lines(text);
    check_header(path, lines.next(), "timestamp,temp_c")?;
    let mut rows = Vec::new();
    for (line, raw) in lines {
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", fields.len())));
        }
        let t = parse_timestamp(path, line, fields[0])?;
        let field = fields[1].trim();
        let v: f64 = field
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(path, line, format!("bad temperature `{field}`")))?;
        rows.push((t, line, Some(v)));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let rows = sort_unique(path, rows)?;
    Ok(TempSeries {
        location: None,
        points: rows.into_iter().map(|(t, _, v)| (t, v.unwrap())).collect(),
    })
}

pub fn parse_temp_csv(path: impl AsRef<Path>) -> Result<TempSeries> {
    let path = path.as_ref();
    parse_temp_str(&read_text(path)?, path)
}

/// Parse the text grid format:
///
/// ```text
/// lats: -37.0 -36.75
/// lons: 142.0 142.25 142.5
/// times: 2016-01-01T00:00 2016-01-01T01:00
/// <values, row-major over time, lat, lon>
/// ```
///
/// Lines starting with `#` are ignored.
pub fn parse_temp_grid_str(text: &str, path: &Path) -> Result<TempGrid> {
    let mut lats = None;
    let mut lons = None;
    let mut times = None;
    let mut values = Vec::new();

    for (line, raw) in numbered_lines(text) {
        let raw = raw.trim();
        if raw.starts_with('#') {
            continue;
        }
        if let Some((key, rest)) = raw.split_once(':').filter(|(k, _)| {
            matches!(k.trim(), "lats" | "lons" | "times")
        }) {
            match key.trim() {
                "lats" | "lons" => {
                    let axis = rest
                        .split_whitespace()
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| parse_err(path, line, format!("bad {} axis", key.trim())))?;
                    if key.trim() == "lats" {
                        lats = Some(axis);
                    } else {
                        lons = Some(axis);
                    }
                }
                _ => {
                    let ts = rest
                        .split_whitespace()
                        .map(|v| parse_timestamp_any(path, line, v))
                        .collect::<Result<Vec<_>>>()?;
                    times = Some(ts);
                }
            }
            continue;
        }
        for token in raw.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad grid value `{token}`")))?;
            values.push(v);
        }
    }
    let missing = |what: &str| parse_err(path, 0, format!("missing `{what}:` header"));
    let lats = lats.ok_or_else(|| missing("lats"))?;
    let lons = lons.ok_or_else(|| missing("lons"))?;
    let times = times.ok_or_else(|| missing("times"))?;
    if values.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    TempGrid::new(lats, lons, times, values)
}

// Grid times may sit at native (hourly) resolution; any minute is accepted.
fn parse_timestamp_any(path: &Path, line: usize, text: &str) -> Result<Instant> {
    Instant::parse(text).ok_or_else(|| parse_err(path, line, format!("bad timestamp `{text}`")))
}

pub fn parse_temp_grid(path: impl AsRef<Path>) -> Result<TempGrid> {
    let path = path.as_ref();
    parse_temp_grid_str(&read_text(path)?, path)
}

#[derive(Deserialize)]
struct StationFile {
    #[serde(default)]
    station: Vec<StationEntryRaw>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StationEntryRaw {
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    factors: BTreeMap<String, f64>,
}

/// Parse a station metadata TOML file with `[[station]]` tables carrying
/// `id`, `lat`, `lon` and an optional `factors` table.
pub fn parse_station_meta_str(text: &str, path: &Path) -> Result<Vec<StationMeta>> {
    let file: StationFile =
        toml::from_str(text).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok(file
        .station
        .into_iter()
        .map(|s| StationMeta { station_id: s.id, lat: s.lat, lon: s.lon, region_factors: s.factors })
        .collect())
}

pub fn parse_station_meta(path: impl AsRef<Path>) -> Result<Vec<StationMeta>> {
    let path = path.as_ref();
    parse_station_meta_str(&read_text(path)?, path)
}

/// Linearly interpolate the grid onto a finer time step. Original slices are
/// copied untouched.
pub fn interpolate_temporal(grid: &TempGrid, target_step_minutes: i64) -> Result<TempGrid> {
    if target_step_minutes <= 0 {
        return Err(Error::Invalid("target step must be positive".into()));
    }
    if grid.times.len() < 2 {
        return Err(Error::InsufficientData("temporal interpolation needs at least 2 time steps".into()));
    }
    let plane = grid.plane();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in 0..grid.times.len() - 1 {
        let (t0, t1) = (grid.times[i], grid.times[i + 1]);
        let span = t1.epoch_minutes() - t0.epoch_minutes();
        if span % target_step_minutes != 0 {
            return Err(Error::Invalid(format!(
                "native step of {span} min at {t0} is not a multiple of {target_step_minutes} min"
            )));
        }
        let parts = span / target_step_minutes;
        let (a, b) = (grid.slice_at(i), grid.slice_at(i + 1));
        times.push(t0);
        values.extend_from_slice(a);
        for k in 1..parts {
            let w = k as f64 / parts as f64;
            times.push(t0.plus_minutes(k * target_step_minutes));
            values.extend((0..plane).map(|j| a[j] + (b[j] - a[j]) * w));
        }
    }
    let last = grid.times.len() - 1;
    times.push(grid.times[last]);
    values.extend_from_slice(grid.slice_at(last));
    TempGrid::new(grid.lat_axis.clone(), grid.lon_axis.clone(), times, values)
}

/// Lower node index and fractional offset of `x` on an ascending axis.
fn bracket(axis: &[f64], x: f64) -> Option<(usize, usize, f64)> {
    let (first, last) = (axis[0], *axis.last()?);
    if !(x >= first && x <= last) {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0, 0.0));
    }
    let hi = axis.partition_point(|&v| v <= x).clamp(1, axis.len() - 1);
    let lo = hi - 1;
    let frac = (x - axis[lo]) / (axis[hi] - axis[lo]);
    Some((lo, hi, frac))
}

/// Bilinear temperature at `(lat, lon)` for every grid time step.
pub fn extract_point_series(grid: &TempGrid, lat: f64, lon: f64) -> Result<TempSeries> {
    let (i0, i1, fy) = bracket(&grid.lat_axis, lat).ok_or(Error::OutOfBounds { lat, lon })?;
    let (j0, j1, fx) = bracket(&grid.lon_axis, lon).ok_or(Error::OutOfBounds { lat, lon })?;
    let points = (0..grid.times.len())
        .map(|t| {
            let v00 = grid.get(t, i0, j0);
            let v01 = grid.get(t, i0, j1);
            let v10 = grid.get(t, i1, j0);
            let v11 = grid.get(t, i1, j1);
            let v = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
            (grid.times[t], v)
        })
        .collect();
    Ok(TempSeries { location: Some((lat, lon)), points })
}

/// Restrict both series to their common timestamps.
pub fn align_series(load: &LoadSeries, temp: &TempSeries) -> Result<(LoadSeries, TempSeries)> {
    let (mut i, mut j) = (0, 0);
    let mut lp = Vec::new();
    let mut tp = Vec::new();
    while i < load.points.len() && j < temp.points.len() {
        let (a, b) = (load.points[i].0, temp.points[j].0);
        match a.cmp(&b) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                lp.push(load.points[i]);
                tp.push(temp.points[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if lp.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let (first, last) = (lp[0].0, lp[lp.len() - 1].0);
    let gaps = load.gaps.iter().copied().filter(|g| *g > first && *g < last).collect();
    Ok((
        LoadSeries { station_id: load.station_id.clone(), points: lp, gaps },
        TempSeries { location: temp.location, points: tp },
    ))
}

/// Linearly fill runs of at most `max_run` consecutive missing samples.
/// Longer runs stay listed in `gaps`.
pub fn fill_short_gaps(load: &LoadSeries, max_run: usize) -> LoadSeries {
    let mut points = Vec::with_capacity(load.points.len() + load.gaps.len());
    for (k, &(t, v)) in load.points.iter().enumerate() {
        if let Some(&(tp, vp)) = k.checked_sub(1).map(|p| &load.points[p]) {
            let steps = (t.epoch_minutes() - tp.epoch_minutes()) / STEP_MINUTES;
            let missing = (steps - 1) as usize;
            if missing >= 1 && missing <= max_run {
                for s in 1..steps {
                    let w = s as f64 / steps as f64;
                    points.push((tp.plus_steps(s), vp + (v - vp) * w));
                }
            }
        }
        points.push((t, v));
    }
    let gaps = load
        .gaps
        .iter()
        .copied()
        .filter(|g| points.binary_search_by_key(g, |p| p.0).is_err())
        .collect();
    LoadSeries { station_id: load.station_id.clone(), points, gaps }
}

pub fn write_load_csv(path: &Path, load: &LoadSeries) -> Result<()> {
    let mut out = String::from("timestamp,load_mw\n");
    for (t, v) in &load.points {
        let _ = writeln!(out, "{t},{v}");
    }
    write_file(path, &out)
}

pub fn write_temp_csv(path: &Path, temp: &TempSeries) -> Result<()> {
    let mut out = String::from("timestamp,temp_c\n");
    for (t, v) in &temp.points {
        let _ = writeln!(out, "{t},{v}");
    }
    write_file(path, &out)
}

pub fn write_temp_grid(path: &Path, grid: &TempGrid) -> Result<()> {
    let join = |xs: &[f64]| xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "lats: {}", join(&grid.lat_axis));
    let _ = writeln!(out, "lons: {}", join(&grid.lon_axis));
    let times: Vec<String> = grid.times.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(out, "times: {}", times.join(" "));
    for t in 0..grid.times.len() {
        for row in grid.slice_at(t).chunks(grid.lon_axis.len()) {
            let _ = writeln!(out, "{}", join(row));
        }
    }
    write_file(path, &out)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Resolved inputs for one station.
#[derive(Clone, Debug)]
pub struct StationData {
    pub meta: StationMeta,
    pub load: LoadSeries,
    pub temp: TempSeries,
}

/// Where a station's temperature comes from.
#[derive(Clone, Debug)]
pub enum TempSource {
    PointCsv(PathBuf),
    Grid(PathBuf),
}

/// Parse, gap-fill and align a station's load and temperature.
pub fn load_station(meta: StationMeta, load_path: &Path, temp: &TempSource) -> Result<StationData> {
    let load = parse_load_csv(load_path, &meta.station_id)?;
    let load = fill_short_gaps(&load, 2);
    let temp = match temp {
        TempSource::PointCsv(p) => {
            let mut t = parse_temp_csv(p)?;
            t.location = Some((meta.lat, meta.lon));
            t
        }
        TempSource::Grid(p) => {
            let grid = interpolate_temporal(&parse_temp_grid(p)?, STEP_MINUTES)?;
            extract_point_series(&grid, meta.lat, meta.lon)?
        }
    };
    let (load, temp) = align_series(&load, &temp)?;
    Ok(StationData { meta, load, temp })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.csv")
    }

    fn hourly(n: usize) -> Vec<Instant> {
        (0..n).map(|k| Instant::from_ymd_hm(2016, 1, 1, 0, 0).plus_minutes(60 * k as i64)).collect()
    }

    #[test]
    fn two_valid_rows() {
        let s = parse_load_str("timestamp,load_mw\n2016-01-01T00:00,10.5\n2016-01-01T00:30,11\n", p(), "a")
            .unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.gaps.is_empty());
        assert_eq!(s.points[1].1, 11.0);
    }

    #[test]
    fn non_positive_and_missing_loads_become_gaps() {
        let s = parse_load_str(
            "timestamp,load_mw\n2016-01-01T00:00,10\n2016-01-01T00:30,-1.0\n2016-01-01T01:00,\n2016-01-01T01:30,9\n",
            p(),
            "a",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            s.gaps,
            vec![Instant::parse("2016-01-01T00:30").unwrap(), Instant::parse("2016-01-01T01:00").unwrap()]
        );
    }

    #[test]
    fn unordered_rows_match_sorted_file() {
        let sorted = "timestamp,load_mw\n2016-01-01T00:00,1\n2016-01-01T00:30,2\n2016-01-01T01:00,3\n";
        let shuffled = "timestamp,load_mw\n2016-01-01T01:00,3\n2016-01-01T00:00,1\n2016-01-01T00:30,2\n";
        assert_eq!(parse_load_str(sorted, p(), "a").unwrap(), parse_load_str(shuffled, p(), "a").unwrap());
    }

    #[test]
    fn load_errors() {
        let dup = "timestamp,load_mw\n2016-01-01T00:00,1\n2016-01-01T00:00,2\n";
        assert!(matches!(parse_load_str(dup, p(), "a"), Err(Error::DuplicateTimestamp { line: 3, .. })));
        let bad = "timestamp,load_mw\n2016-01-01T00:00,1\n2016-01-01T00:30,abc\n";
        assert!(matches!(parse_load_str(bad, p(), "a"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_load_str("timestamp,load_mw\n", p(), "a"), Err(Error::EmptyFile(_))));
        assert!(matches!(parse_load_str("", p(), "a"), Err(Error::EmptyFile(_))));
        assert!(matches!(parse_load_str("time,mw\n", p(), "a"), Err(Error::Parse { line: 1, .. })));
        let off_grid = "timestamp,load_mw\n2016-01-01T00:10,1\n";
        assert!(matches!(parse_load_str(off_grid, p(), "a"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn absent_rows_are_gaps_and_short_ones_fill() {
        let s = parse_load_str(
            "timestamp,load_mw\n2016-01-01T00:00,10\n2016-01-01T01:30,16\n2016-01-01T04:00,1\n",
            p(),
            "a",
        )
        .unwrap();
        assert_eq!(s.gaps.len(), 2 + 4);
        let filled = fill_short_gaps(&s, 2);
        assert_eq!(filled.gaps.len(), 4);
        assert_eq!(filled.points[1].1, 12.0);
        assert_eq!(filled.points[2].1, 14.0);
        assert_eq!(filled.len(), 5);
    }

    fn grid_1x1(vals: &[f64]) -> TempGrid {
        TempGrid::new(vec![0.0], vec![0.0], hourly(vals.len()), vals.to_vec()).unwrap()
    }

    #[test]
    fn temporal_midpoint() {
        let g = interpolate_temporal(&grid_1x1(&[10.0, 12.0]), 30).unwrap();
        assert_eq!(g.values(), &[10.0, 11.0, 12.0]);
        assert_eq!(g.times()[1].to_string(), "2016-01-01T00:30");
    }

    #[test]
    fn temporal_hand_values() {
        let g = interpolate_temporal(&grid_1x1(&[10.0, 14.0, 12.0]), 30).unwrap();
        assert_eq!(g.values(), &[10.0, 12.0, 14.0, 13.0, 12.0]);
    }

    #[test]
    fn temporal_constant_and_idempotent() {
        let g = TempGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], hourly(3), vec![20.0; 12]).unwrap();
        let once = interpolate_temporal(&g, 30).unwrap();
        assert!(once.values().iter().all(|&v| v == 20.0));
        assert_eq!(interpolate_temporal(&once, 30).unwrap(), once);
    }

    #[test]
    fn temporal_errors() {
        assert!(matches!(interpolate_temporal(&grid_1x1(&[1.0]), 30), Err(Error::InsufficientData(_))));
        assert!(matches!(interpolate_temporal(&grid_1x1(&[1.0, 2.0]), 25), Err(Error::Invalid(_))));
    }

    fn square(v: [f64; 4]) -> TempGrid {
        // lat rows [0, 1], lon cols [0, 1]
        TempGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], hourly(1), v.to_vec()).unwrap()
    }

    #[test]
    fn bilinear_cases() {
        let g = square([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(extract_point_series(&g, 1.0, 0.0).unwrap().points[0].1, 3.0);
        assert_eq!(extract_point_series(&g, 0.0, 1.0).unwrap().points[0].1, 2.0);
        let c = square([20.0; 4]);
        assert_eq!(extract_point_series(&c, 0.3, 0.7).unwrap().points[0].1, 20.0);
        // varies only with lat: lat=0 row is 0, lat=1 row is 10
        let lat_only = square([0.0, 0.0, 10.0, 10.0]);
        assert_eq!(extract_point_series(&lat_only, 0.5, 0.25).unwrap().points[0].1, 5.0);
        assert!(matches!(extract_point_series(&g, 1.5, 0.0), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn align_cases() {
        let t = hourly(3);
        let load = LoadSeries { station_id: "a".into(), points: t.iter().map(|&t| (t, 1.0)).collect(), gaps: vec![] };
        let temp = TempSeries { location: None, points: t.iter().map(|&t| (t, 2.0)).collect() };
        let (l2, t2) = align_series(&load, &temp).unwrap();
        assert_eq!(l2, load);
        assert_eq!(t2, temp);

        let mut short = load.clone();
        short.points.remove(1);
        let (l3, t3) = align_series(&short, &temp).unwrap();
        assert_eq!(l3.times(), t3.times());
        assert_eq!(t3.len(), 2);

        let far = TempSeries {
            location: None,
            points: vec![(Instant::from_ymd_hm(2020, 1, 1, 0, 0), 1.0)],
        };
        assert!(matches!(align_series(&load, &far), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn grid_text_round_trip() {
        let g = TempGrid::new(vec![-37.0, -36.75], vec![142.0, 142.25, 142.5], hourly(2), (0..12).map(f64::from).collect())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.txt");
        write_temp_grid(&path, &g).unwrap();
        assert_eq!(parse_temp_grid(&path).unwrap(), g);
    }

    #[test]
    fn station_meta_file() {
        let text = "[[station]]\nid = \"horsham\"\nlat = -36.71\nlon = 142.2\nfactors = { poverty_rate = 0.14 }\n\n[[station]]\nid = \"geelong\"\nlat = -38.15\nlon = 144.36\n";
        let s = parse_station_meta_str(text, p()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].region_factors["poverty_rate"], 0.14);
        assert!(s[1].region_factors.is_empty());
    }
}
