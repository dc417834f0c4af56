//! DSM comparison toolkit: depth-bin cell counts and depth-error statistics.
//!
//! Rasters are read from a small binary `.dsm` format or imported from ESRI
//! ASCII grids. Depths are negative below the water line.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

pub const DSM_MAGIC: &[u8; 4] = b"SUDM";
/// magic + w + h + cell + origin x/y + nodata
pub const DSM_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8 + 4;

/// Row-major depth grid. `origin` is the upper-left corner in world meters;
/// rows run towards decreasing y.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmRaster {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
    pub origin: [f64; 2],
    pub values: Vec<f32>,
    pub nodata: f32,
}

impl DsmRaster {
    pub fn new(width: usize, height: usize, cell_size_m: f64, values: Vec<f32>, nodata: f32) -> Result<Self> {
        let r = Self {
            width,
            height,
            cell_size_m,
            origin: [0.0, 0.0],
            values,
            nodata,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            cell_size_m: 0.25,
            origin: [0.0, 0.0],
            values: vec![value; width * height],
            nodata: -9999.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} raster holds {} values",
                self.width,
                self.height,
                self.values.len()
            )));
        }
        if !(self.cell_size_m > 0.0 && self.cell_size_m.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell size {} must be positive",
                self.cell_size_m
            )));
        }
        Ok(())
    }

    /// True for cells carrying a finite, non-nodata value.
    #[inline]
    pub fn is_valid(&self, v: f32) -> bool {
        v.is_finite() && v != self.nodata
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| self.is_valid(v)).count()
    }

    pub fn same_grid(&self, other: &DsmRaster) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.cell_size_m == other.cell_size_m
            && self.origin == other.origin
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DSM_HEADER_LEN + self.values.len() * 4);
        out.extend_from_slice(DSM_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.cell_size_m.to_le_bytes());
        out.extend_from_slice(&self.origin[0].to_le_bytes());
        out.extend_from_slice(&self.origin[1].to_le_bytes());
        out.extend_from_slice(&self.nodata.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < DSM_HEADER_LEN || &bytes[..4] != DSM_MAGIC {
            return Err("missing SUDM header".into());
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let width = u32_at(4) as usize;
        let height = u32_at(8) as usize;
        let cell_size_m = f64_at(12);
        let origin = [f64_at(20), f64_at(28)];
        let nodata = f32::from_le_bytes(bytes[36..40].try_into().unwrap());
        let n = width
            .checked_mul(height)
            .ok_or_else(|| "raster dimensions overflow".to_string())?;
        if bytes.len() != DSM_HEADER_LEN + n * 4 {
            return Err(format!(
                "payload is {} bytes, expected {}",
                bytes.len(),
                DSM_HEADER_LEN + n * 4
            ));
        }
        let values = bytes[DSM_HEADER_LEN..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let r = DsmRaster {
            width,
            height,
            cell_size_m,
            origin,
            values,
            nodata,
        };
        r.validate().map_err(|e| e.to_string())?;
        Ok(r)
    }

    /// ESRI ASCII grid text with a lower-left corner header.
    pub fn to_ascii_grid(&self) -> String {
        let mut s = format!(
            "ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\nNODATA_value {}\n",
            self.width,
            self.height,
            self.origin[0],
            self.origin[1] - self.height as f64 * self.cell_size_m,
            self.cell_size_m,
            self.nodata
        );
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Writes `.asc`/`.txt` as an ESRI ASCII grid and anything else as `.dsm`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = if is_ascii_path(path) {
            self.to_ascii_grid().into_bytes()
        } else {
            self.to_bytes()
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Reads a `.dsm` file, or an ESRI ASCII grid for `.asc`/`.txt`.
    pub fn read(path: &Path) -> Result<Self> {
        if is_ascii_path(path) {
            return read_ascii_grid(path);
        }
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|m| Error::format(path, m))
    }
}

fn is_ascii_path(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
    matches!(ext.as_deref(), Some("asc") | Some("txt"))
}

/// Imports an ESRI ASCII grid (`ncols`, `nrows`, `xllcorner`/`xllcenter`,
/// `yllcorner`/`yllcenter`, `cellsize`, optional `NODATA_value`).
pub fn read_ascii_grid(path: &Path) -> Result<DsmRaster> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(BufReader::new(file)).map_err(|m| match m {
        AsciiError::Io(e) => Error::io(path, e),
        AsciiError::Format(m) => Error::format(path, m),
    })
}

enum AsciiError {
    Io(std::io::Error),
    Format(String),
}

fn parse_ascii_grid(reader: impl BufRead) -> std::result::Result<DsmRaster, AsciiError> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut centered = false;
    let mut cell = None;
    let mut nodata = -9999.0f32;
    let mut values = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(AsciiError::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = trimmed.split_whitespace().next().unwrap();
        if first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && values.is_empty() {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap().to_ascii_lowercase();
            let val = parts
                .next()
                .ok_or_else(|| AsciiError::Format(format!("header '{key}' has no value")))?;
            let num: f64 = val
                .parse()
                .map_err(|_| AsciiError::Format(format!("bad header value '{val}' for {key}")))?;
            match key.as_str() {
                "ncols" => ncols = Some(num as usize),
                "nrows" => nrows = Some(num as usize),
                "xllcorner" => xll = Some(num),
                "yllcorner" => yll = Some(num),
                "xllcenter" => {
                    xll = Some(num);
                    centered = true
                }
                "yllcenter" => {
                    yll = Some(num);
                    centered = true
                }
                "cellsize" => cell = Some(num),
                "nodata_value" => nodata = num as f32,
                _ => return Err(AsciiError::Format(format!("unknown header key '{key}'"))),
            }
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v: f32 = tok
                .parse()
                .map_err(|_| AsciiError::Format(format!("bad cell value '{tok}'")))?;
            values.push(v);
        }
    }
    let missing = |k: &str| AsciiError::Format(format!("missing header '{k}'"));
    let width = ncols.ok_or_else(|| missing("ncols"))?;
    let height = nrows.ok_or_else(|| missing("nrows"))?;
    let cell_size_m = cell.ok_or_else(|| missing("cellsize"))?;
    let mut x0 = xll.ok_or_else(|| missing("xllcorner"))?;
    let mut y0 = yll.ok_or_else(|| missing("yllcorner"))?;
    if centered {
        x0 -= 0.5 * cell_size_m;
        y0 -= 0.5 * cell_size_m;
    }
    if values.len() != width * height {
        return Err(AsciiError::Format(format!(
            "{width}x{height} grid holds {} values",
            values.len()
        )));
    }
    let r = DsmRaster {
        width,
        height,
        cell_size_m,
        origin: [x0, y0 + height as f64 * cell_size_m],
        values,
        nodata,
    };
    r.validate().map_err(|e| AsciiError::Format(e.to_string()))?;
    Ok(r)
}

/// Descending depth-bin edges; bin `i` holds `edges[i] >= depth > edges[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    pub edges: Vec<f64>,
}

impl Default for BinSpec {
    /// `0, −2, …, −20` m.
    fn default() -> Self {
        Self {
            edges: (0..=10).map(|i| -2.0 * i as f64).collect(),
        }
    }
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidArgument("at least two bin edges are required".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("bin edges must be finite and strictly descending".into()));
        }
        Ok(Self { edges })
    }

    /// Uniform bins from `top` down to `bottom` in steps of `step`.
    pub fn uniform(top: f64, bottom: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(top > bottom) {
            return Err(Error::InvalidArgument("uniform bins need top > bottom and step > 0".into()));
        }
        let n = ((top - bottom) / step).round() as usize;
        if ((top - bottom) - n as f64 * step).abs() > 1e-9 * step {
            return Err(Error::InvalidArgument("bin range is not a multiple of the step".into()));
        }
        Self::new((0..=n).map(|i| top - step * i as f64).collect())
    }

    /// Parses `top:bottom:step` or a comma-separated edge list.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |_| Error::InvalidArgument(format!("cannot parse bins '{s}'"));
        if s.contains(':') {
            let parts: Vec<f64> = s
                .split(':')
                .map(|p| p.trim().parse::<f64>().map_err(bad))
                .collect::<Result<_>>()?;
            if parts.len() != 3 {
                return Err(Error::InvalidArgument(format!("bins '{s}' must be top:bottom:step")));
            }
            Self::uniform(parts[0], parts[1], parts[2])
        } else {
            Self::new(
                s.split(',')
                    .map(|p| p.trim().parse::<f64>().map_err(bad))
                    .collect::<Result<_>>()?,
            )
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin index of `depth`; a depth equal to an inner edge belongs to the deeper bin.
    pub fn bin_of(&self, depth: f64) -> Option<usize> {
        let top = self.edges[0];
        let bottom = *self.edges.last().unwrap();
        if !(depth <= top && depth > bottom) {
            return None;
        }
        // first edge strictly below the depth closes the bin
        let idx = self.edges.partition_point(|&e| e >= depth);
        Some(idx - 1)
    }

    pub fn label(&self, i: usize) -> String {
        format!("{} to {}", fmt_edge(self.edges[i]), fmt_edge(self.edges[i + 1]))
    }
}

fn fmt_edge(e: f64) -> String {
    if e == 0.0 {
        "0".into()
    } else if e.fract() == 0.0 {
        format!("{}", e as i64)
    } else {
        format!("{e}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinCounts {
    pub counts: Vec<u64>,
    pub out_of_range: u64,
    pub nodata: u64,
}

impl BinCounts {
    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn bin_counts(dsm: &DsmRaster, bins: &BinSpec) -> BinCounts {
    let mut out = BinCounts {
        counts: vec![0; bins.len()],
        out_of_range: 0,
        nodata: 0,
    };
    for &v in &dsm.values {
        if !dsm.is_valid(v) {
            out.nodata += 1;
            continue;
        }
        match bins.bin_of(v as f64) {
            Some(i) => out.counts[i] += 1,
            None => out.out_of_range += 1,
        }
    }
    out
}

/// Depth-error statistics of `pred − ref` over cells valid in both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub rmse_m: f64,
    pub mae_m: f64,
    pub std_m: f64,
    /// Mean signed error.
    pub bias_m: f64,
    pub n: u64,
}

impl ErrorStats {
    pub fn mse_m2(&self) -> f64 {
        self.rmse_m * self.rmse_m
    }
}

/// Kahan–Babuška compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn depth_errors(pred: &DsmRaster, reference: &DsmRaster) -> Result<ErrorStats> {
    if !pred.same_grid(reference) {
        return Err(Error::DimensionMismatch(format!(
            "prediction grid {}x{} @ {} {:?} differs from reference {}x{} @ {} {:?}",
            pred.width,
            pred.height,
            pred.cell_size_m,
            pred.origin,
            reference.width,
            reference.height,
            reference.cell_size_m,
            reference.origin
        )));
    }
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    let mut sum_abs = CompensatedSum::default();
    let mut n = 0u64;
    for (&p, &r) in pred.values.iter().zip(&reference.values) {
        if !(pred.is_valid(p) && reference.is_valid(r)) {
            continue;
        }
        let e = p as f64 - r as f64;
        sum.add(e);
        sum_sq.add(e * e);
        sum_abs.add(e.abs());
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoOverlap);
    }
    let nf = n as f64;
    let mean = sum.value() / nf;
    let mean_sq = sum_sq.value() / nf;
    Ok(ErrorStats {
        rmse_m: mean_sq.sqrt(),
        mae_m: sum_abs.value() / nf,
        std_m: (mean_sq - mean * mean).max(0.0).sqrt(),
        bias_m: mean,
        n,
    })
}

/// Depth-bin table with one column per raster.
#[derive(Debug, Clone, PartialEq)]
pub struct BinReport {
    pub bins: BinSpec,
    pub names: Vec<String>,
    pub columns: Vec<BinCounts>,
}

pub fn bin_report(rasters: &[(String, DsmRaster)], bins: &BinSpec) -> BinReport {
    BinReport {
        bins: bins.clone(),
        names: rasters.iter().map(|(n, _)| n.clone()).collect(),
        columns: rasters.iter().map(|(_, r)| bin_counts(r, bins)).collect(),
    }
}

impl BinReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("depth_bin_m");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for i in 0..self.bins.len() {
            s.push_str(&self.bins.label(i));
            for c in &self.columns {
                let _ = write!(s, ",{}", c.counts[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let label_w = (0..self.bins.len())
            .map(|i| self.bins.label(i).len())
            .chain(["Depth Bin (m)".len(), "Total".len()])
            .max()
            .unwrap_or(0);
        let col_w: Vec<usize> = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| n.len().max(c.in_range().to_string().len()).max(8))
            .collect();
        let mut s = format!("{:<label_w$}", "Depth Bin (m)");
        for (n, w) in self.names.iter().zip(&col_w) {
            let _ = write!(s, "  {n:>w$}");
        }
        s.push('\n');
        for i in 0..self.bins.len() {
            let _ = write!(s, "{:<label_w$}", self.bins.label(i));
            for (c, w) in self.columns.iter().zip(&col_w) {
                let _ = write!(s, "  {:>w$}", c.counts[i]);
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<label_w$}", "Total");
        for (c, w) in self.columns.iter().zip(&col_w) {
            let _ = write!(s, "  {:>w$}", c.in_range());
        }
        s.push('\n');
        s
    }
}

/// Text block in the layout of a depth-accuracy table.
pub fn error_table(stats: &[(String, ErrorStats)]) -> String {
    let mut s = String::from("Method                RMSE (m)  MAE (m)  STD (m)        N\n");
    for (name, e) in stats {
        let _ = writeln!(s, "{name:<20}  {:>8.3}  {:>7.3}  {:>7.3}  {:>7}", e.rmse_m, e.mae_m, e.std_m, e.n);
    }
    s
}

pub fn error_csv(stats: &[(String, ErrorStats)]) -> String {
    let mut s = String::from("name,rmse_m,mae_m,std_m,mse_m2,bias_m,n\n");
    for (name, e) in stats {
        let _ = writeln!(s, "{name},{},{},{},{},{},{}", e.rmse_m, e.mae_m, e.std_m, e.mse_m2(), e.bias_m, e.n);
    }
    s
}
