//! Field files: the `MCF1` raw container, CSV, and lossless 8-bit rasters.
//!
//! Raw container layout (little endian):
//! `"MCF1"`, `u32 M`, `u32 N`, `u32 extent[M]`, `f64 spacing`, then the samples
//! as `f32` in C order with the channel index fastest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::MultiChannelField;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MCF1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Raw,
    Csv,
    Image,
}

impl FieldFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "mcf" | "raw" | "bin" => Some(Self::Raw),
            "csv" => Some(Self::Csv),
            "png" => Some(Self::Image),
            _ => None,
        }
    }
}

pub fn load_field(path: &Path, format: FieldFormat) -> Result<MultiChannelField> {
    match format {
        FieldFormat::Raw => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_raw(&bytes)
        }
        FieldFormat::Csv => {
            let text = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_csv(&text)
        }
        FieldFormat::Image => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let img = image::load_from_memory(&bytes)?.to_rgb8();
            let (w, h) = img.dimensions();
            let data = img.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
            MultiChannelField::new(vec![h as usize, w as usize], 3, data)
        }
    }
}

pub fn save_field(field: &MultiChannelField, path: &Path, format: FieldFormat) -> Result<()> {
    match format {
        FieldFormat::Raw => fs::write(path, encode_raw(field)).map_err(|e| Error::io(path, e)),
        FieldFormat::Csv => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut out = BufWriter::new(file);
            write_csv(field, &mut out).map_err(|e| Error::io(path, e))
        }
        FieldFormat::Image => {
            if field.coord_dim() != 2 || !matches!(field.channel_dim(), 1 | 3) {
                return Err(Error::DimMismatch(format!(
                    "raster export needs M = 2 and N in {{1, 3}}, field has M = {}, N = {}",
                    field.coord_dim(),
                    field.channel_dim()
                )));
            }
            let (h, w) = (field.extent()[0] as u32, field.extent()[1] as u32);
            let bytes: Vec<u8> = field
                .data()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            if field.channel_dim() == 3 {
                image::RgbImage::from_raw(w, h, bytes)
                    .expect("buffer sized from extent")
                    .save(path)?;
            } else {
                image::GrayImage::from_raw(w, h, bytes)
                    .expect("buffer sized from extent")
                    .save(path)?;
            }
            Ok(())
        }
    }
}

pub(crate) fn encode_raw(field: &MultiChannelField) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * field.coord_dim() + 4 * field.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(field.coord_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(field.channel_dim() as u32).to_le_bytes());
    for &e in field.extent() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    out.extend_from_slice(&field.spacing().to_le_bytes());
    for &v in field.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::ParseAt {
                offset: self.pos as u64,
                msg: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub(crate) fn decode_raw(bytes: &[u8]) -> Result<MultiChannelField> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::ParseAt {
            offset: 0,
            msg: "missing MCF1 magic".into(),
        });
    }
    let m = cur.u32("M")? as usize;
    let n = cur.u32("N")? as usize;
    if m == 0 || n == 0 || m > 16 {
        return Err(Error::DimMismatch(format!("implausible header M = {m}, N = {n}")));
    }
    let mut extent = Vec::with_capacity(m);
    for i in 0..m {
        extent.push(cur.u32(&format!("extent[{i}]"))? as usize);
    }
    let spacing = f64::from_le_bytes(cur.take(8, "spacing")?.try_into().unwrap());
    let count = extent.iter().try_fold(n, |acc, &e| acc.checked_mul(e)).ok_or_else(|| {
        Error::DimMismatch(format!("extent {extent:?} overflows"))
    })?;
    let remaining = bytes.len() - cur.pos;
    if remaining != count * 4 {
        return Err(Error::DimMismatch(format!(
            "header promises {count} values but {remaining} data bytes follow (offset {})",
            cur.pos
        )));
    }
    let data = cur
        .take(count * 4, "data")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    MultiChannelField::with_spacing(extent, n, spacing, data)
}

fn write_csv<W: Write>(field: &MultiChannelField, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec![field.coord_dim().to_string(), field.channel_dim().to_string()];
    header.extend(field.extent().iter().map(|e| e.to_string()));
    w.write_record(&header)?;
    for s in 0..field.num_samples() {
        w.write_record(field.sample(s).iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()
}

pub(crate) fn decode_csv(text: &[u8]) -> Result<MultiChannelField> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text);
    let parse_err = |e: csv::Error| {
        let offset = e.position().map(|p| p.byte()).unwrap_or(0);
        Error::ParseAt {
            offset,
            msg: e.to_string(),
        }
    };
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or(Error::ParseAt {
            offset: 0,
            msg: "empty CSV".into(),
        })?
        .map_err(parse_err)?;
    let header_offset = header.position().map(|p| p.byte()).unwrap_or(0);
    let ints: Vec<usize> = header
        .iter()
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ParseAt {
            offset: header_offset,
            msg: format!("header must be integers: {e}"),
        })?;
    if ints.len() < 2 || ints.len() != 2 + ints[0] {
        return Err(Error::DimMismatch(format!(
            "header \"{}\" does not match M,N,extent[M]",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (m, n) = (ints[0], ints[1]);
    let extent = ints[2..2 + m].to_vec();
    let samples: usize = extent.iter().product();
    let mut data = Vec::with_capacity(samples * n);
    for rec in records {
        let rec = rec.map_err(parse_err)?;
        let offset = rec.position().map(|p| p.byte()).unwrap_or(0);
        if rec.len() != n {
            return Err(Error::DimMismatch(format!(
                "row at byte {offset} has {} values, header says N = {n}",
                rec.len()
            )));
        }
        for tok in rec.iter() {
            let v = tok.trim().parse::<f64>().map_err(|e| Error::ParseAt {
                offset,
                msg: format!("bad value {tok:?}: {e}"),
            })?;
            data.push(v);
        }
    }
    if data.len() != samples * n {
        return Err(Error::DimMismatch(format!(
            "header promises {samples} samples, found {}",
            data.len() / n.max(1)
        )));
    }
    MultiChannelField::new(extent, n, data)
}
