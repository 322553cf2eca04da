//! Binary PPM/PGM I/O, ground-truth loading, the cost-volume dump format
//! and dataset manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{ColorImage, GrayImage};
use crate::volume::{CostVolume, DisparityMap};

/// Raw 8-bit netpbm raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

/// Parses a binary P5 or P6 file with `maxval <= 255`.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<Pnm> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::malformed(path, "empty file"))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::malformed(
                path,
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos)
            .ok_or_else(|| Error::malformed(path, format!("missing {name}")))?;
        *slot = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::malformed(path, format!("bad {name}")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::malformed(path, "zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::malformed(
            path,
            format!("unsupported maxval {maxval}, only 8-bit files are read"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::malformed(path, "missing raster"));
    }
    pos += 1;
    let need = width * height * channels;
    if bytes.len() - pos < need {
        return Err(Error::malformed(
            path,
            format!("truncated raster: need {need} bytes, found {}", bytes.len() - pos),
        ));
    }
    Ok(Pnm {
        width,
        height,
        channels,
        maxval: maxval as u16,
        pixels: bytes[pos..pos + need].to_vec(),
    })
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

pub fn read_pnm(path: &Path) -> Result<Pnm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes, path)
}

pub fn encode_pnm(pnm: &Pnm) -> Vec<u8> {
    let magic = if pnm.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n{}\n", pnm.width, pnm.height, pnm.maxval).into_bytes();
    out.extend_from_slice(&pnm.pixels);
    out
}

pub fn write_pnm(pnm: &Pnm, path: &Path) -> Result<()> {
    fs::write(path, encode_pnm(pnm)).map_err(|e| Error::io(path, e))
}

/// Loads an 8-bit P6 or P5 image; gray files are replicated to three channels.
pub fn load_image(path: &Path) -> Result<ColorImage> {
    let pnm = read_pnm(path)?;
    if pnm.maxval != 255 {
        return Err(Error::malformed(
            path,
            format!("unsupported maxval {}, expected 255", pnm.maxval),
        ));
    }
    let data: Vec<f32> = if pnm.channels == 3 {
        pnm.pixels.iter().map(|&b| b as f32 / 255.0).collect()
    } else {
        pnm.pixels
            .iter()
            .flat_map(|&b| [b as f32 / 255.0; 3])
            .collect()
    };
    ColorImage::new(pnm.width, pnm.height, data)
}

/// Writes a color image as P6, quantizing to 8 bits.
pub fn save_image(img: &ColorImage, path: &Path) -> Result<()> {
    let pixels = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    write_pnm(
        &Pnm {
            width: img.width(),
            height: img.height(),
            channels: 3,
            maxval: 255,
            pixels,
        },
        path,
    )
}

pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let pixels = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    write_pnm(
        &Pnm {
            width: img.width(),
            height: img.height(),
            channels: 1,
            maxval: 255,
            pixels,
        },
        path,
    )
}

/// Pixels that take part in evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl EvalMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn all(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// One stereo pair with its ground truth. Paths are resolved relative to the
/// manifest that declared them.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub name: String,
    pub left_path: PathBuf,
    pub right_path: PathBuf,
    pub gt_path: PathBuf,
    pub nonocc_mask_path: Option<PathBuf>,
    pub max_disparity: usize,
    pub gt_scale: f32,
}

impl DatasetEntry {
    pub fn validate(&self) -> Result<()> {
        if self.max_disparity < 1 {
            return Err(Error::InvalidParameter(format!(
                "{}: max_disparity must be >= 1",
                self.name
            )));
        }
        if !(self.gt_scale > 0.0 && self.gt_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{}: gt_scale must be > 0",
                self.name
            )));
        }
        let paths = [&self.left_path, &self.right_path, &self.gt_path];
        for p in paths.into_iter().chain(self.nonocc_mask_path.as_ref()) {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found"),
                ));
            }
        }
        Ok(())
    }
}

/// Parses a manifest: one entry per line,
/// `name left right gt mask|- max_disparity gt_scale`, `#` starts a comment.
/// Entries are not validated here; see [`load_manifest`].
pub fn parse_manifest(text: &str, base: &Path, origin: &Path) -> Result<Vec<DatasetEntry>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |reason: String| Error::malformed(origin, format!("line {}: {reason}", lineno + 1));
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", fields.len())));
        }
        let max_disparity = fields[5]
            .parse()
            .map_err(|_| bad(format!("bad max_disparity {:?}", fields[5])))?;
        let gt_scale = fields[6]
            .parse()
            .map_err(|_| bad(format!("bad gt_scale {:?}", fields[6])))?;
        entries.push(DatasetEntry {
            name: fields[0].to_string(),
            left_path: base.join(fields[1]),
            right_path: base.join(fields[2]),
            gt_path: base.join(fields[3]),
            nonocc_mask_path: (fields[4] != "-").then(|| base.join(fields[4])),
            max_disparity,
            gt_scale,
        });
    }
    Ok(entries)
}

/// Reads a manifest and checks that every entry's files exist.
pub fn load_manifest(path: &Path) -> Result<Vec<DatasetEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let entries = parse_manifest(&text, base, path)?;
    for e in &entries {
        e.validate()?;
    }
    Ok(entries)
}

/// Loads ground truth as `stored / gt_scale`. Stored zeros are unknown and
/// masked out; the optional non-occlusion mask (nonzero = evaluate) is
/// intersected in.
pub fn load_gt_disparity(entry: &DatasetEntry) -> Result<(DisparityMap, EvalMask)> {
    if entry.gt_scale.is_nan() || entry.gt_scale <= 0.0 {
        return Err(Error::InvalidParameter("gt_scale must be > 0".into()));
    }
    let gt = read_pnm(&entry.gt_path)?;
    if gt.channels != 1 {
        return Err(Error::malformed(&entry.gt_path, "ground truth must be a P5 file"));
    }
    let disp = gt.pixels.iter().map(|&v| v as f32 / entry.gt_scale).collect();
    let mut mask: Vec<bool> = gt.pixels.iter().map(|&v| v != 0).collect();
    if let Some(mask_path) = &entry.nonocc_mask_path {
        let m = read_pnm(mask_path)?;
        if (m.width, m.height) != (gt.width, gt.height) {
            return Err(Error::Dimension(format!(
                "mask {}x{} does not match ground truth {}x{}",
                m.width, m.height, gt.width, gt.height
            )));
        }
        for (keep, px) in mask.iter_mut().zip(m.pixels.chunks_exact(m.channels)) {
            *keep &= px[0] != 0;
        }
    }
    Ok((
        DisparityMap::new(gt.width, gt.height, disp)?,
        EvalMask::new(gt.width, gt.height, mask)?,
    ))
}

/// Encodes a disparity map as 8-bit gray with `stored = disparity * scale`.
pub fn encode_disparity(map: &DisparityMap, scale: f32) -> Result<Pnm> {
    let pixels = map
        .data()
        .iter()
        .map(|&d| {
            let v = (d as f64 * scale as f64).round();
            if v > 255.0 {
                Err(Error::Overflow { value: v })
            } else {
                Ok(v as u8)
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(Pnm {
        width: map.width(),
        height: map.height(),
        channels: 1,
        maxval: 255,
        pixels,
    })
}

pub fn save_disparity(map: &DisparityMap, scale: f32, path: &Path) -> Result<()> {
    write_pnm(&encode_disparity(map, scale)?, path)
}

const DUMP_HEADER: usize = 12;

/// Little-endian dump: `u32 width, u32 height, u32 levels`, then the costs
/// as `f32` with the disparity axis fastest.
pub fn encode_cost_volume(vol: &CostVolume) -> Vec<u8> {
    let mut out = Vec::with_capacity(DUMP_HEADER + vol.data().len() * 4);
    for d in [vol.width(), vol.height(), vol.levels()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in vol.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_cost_volume(bytes: &[u8], path: &Path) -> Result<CostVolume> {
    if bytes.len() < DUMP_HEADER {
        return Err(Error::malformed(path, "cost volume header truncated"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (w, h, l) = (dim(0), dim(1), dim(2));
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(l))
        .ok_or_else(|| Error::malformed(path, "dimension overflow"))?;
    let payload = &bytes[DUMP_HEADER..];
    if payload.len() != count * 4 {
        return Err(Error::malformed(
            path,
            format!(
                "header declares {count} costs ({} bytes), payload has {} bytes",
                count * 4,
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    CostVolume::new(w, h, l, data).map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn dump_cost_volume(vol: &CostVolume, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_cost_volume(vol))
        .map_err(|e| Error::io(path, e))
}

pub fn load_cost_volume(path: &Path) -> Result<CostVolume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cost_volume(&bytes, path)
}
