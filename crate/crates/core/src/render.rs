//! Basin pictures of the dynamical plane and type maps of the period-two
//! parameter slice, written as PPM, PNG and binary label grids.

use crate::classify::{classify_grid, label_components, LabelGrid, PixelTarget, Region, TypeLabel};
use crate::error::{Error, Result};
use crate::graph::RayGraph;
use crate::newton::MapRep;
use crate::sphere::SpherePoint;
use serde::Serialize;

/// Basin colours by root index, cycled for more than eight roots.
pub const ROOT_PALETTE: [[u8; 3]; 8] = [
    [222, 84, 72],
    [72, 140, 222],
    [96, 184, 96],
    [236, 196, 64],
    [168, 96, 200],
    [64, 196, 196],
    [232, 136, 56],
    [150, 150, 150],
];

/// Colours for free-cycle basins, indexed by cycle point over all cycles.
pub const CYCLE_PALETTE: [[u8; 3]; 6] = [
    [40, 40, 120],
    [120, 40, 90],
    [30, 100, 90],
    [110, 90, 30],
    [70, 30, 120],
    [30, 70, 40],
];

pub const UNRESOLVED: [u8; 3] = [0, 0, 0];
pub const OVERLAY: [u8; 3] = [255, 255, 255];

/// Colour of each type label, in [`TypeLabel::ALL`] order.
pub const TYPE_PALETTE: [[u8; 3]; 8] = [
    [230, 80, 60],   // A
    [250, 170, 40],  // B
    [240, 230, 90],  // C
    [70, 170, 90],   // D
    [60, 110, 200],  // IE
    [150, 90, 200],  // FE1
    [90, 200, 210],  // FE2
    [20, 20, 20],    // unresolved
];

/// An RGB raster, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, rgb: vec![0; width * height * 3] }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        self.to_ppm_with(None)
    }

    /// PPM with an optional one-line comment after the magic number.
    pub fn to_ppm_with(&self, note: Option<&str>) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        if let Some(n) = note {
            out.extend_from_slice(format!("# {}\n", n.replace(['\n', '\r'], " ")).as_bytes());
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        self.to_png_with(None)
    }

    /// PNG with an optional `config` text chunk.
    pub fn to_png_with(&self, note: Option<&str>) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            if let Some(n) = note {
                enc.add_text_chunk("config".into(), n.into()).map_err(|e| Error::numerical(format!("png: {e}")))?;
            }
            let mut w = enc.write_header().map_err(|e| Error::numerical(format!("png: {e}")))?;
            w.write_image_data(&self.rgb).map_err(|e| Error::numerical(format!("png: {e}")))?;
        }
        Ok(out)
    }

    /// Draw the segment between two pixel positions (clipped).
    fn line(&mut self, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
        let n = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).clamp(1, 1 << 16);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            if x >= 0.0 && y >= 0.0 && (x as usize) < self.width && (y as usize) < self.height {
                self.put(x as usize, y as usize, c);
            }
        }
    }
}

fn shade(c: [u8; 3], f: f64) -> [u8; 3] {
    c.map(|v| (v as f64 * f).round() as u8)
}

/// Colour of a labelled pixel: immediate components at full strength,
/// other components of the same basin dimmed.
fn basin_colour(grid: &LabelGrid, offsets: &[usize], imm: &[Option<u32>], i: usize) -> [u8; 3] {
    let l = grid.labels[i];
    let (base, slot) = match l.target {
        PixelTarget::Root { index } => (ROOT_PALETTE[index % ROOT_PALETTE.len()], index),
        PixelTarget::Cycle { id, phase } => {
            let k = offsets[id] + phase;
            (CYCLE_PALETTE[k % CYCLE_PALETTE.len()], grid.root_points.len() + k)
        }
        PixelTarget::Unresolved => return UNRESOLVED,
    };
    if imm[slot] == Some(l.component) {
        base
    } else {
        shade(base, 0.62)
    }
}

/// Basin picture with the rays of `overlays` drawn on top.
pub fn render_dynamical(
    m: &MapRep,
    region: Region,
    res: (usize, usize),
    overlays: &[RayGraph],
    budget: usize,
) -> Result<(Image, LabelGrid)> {
    let grid = label_components(m, region, res, budget)?;
    let mut offsets = Vec::new();
    let mut total = 0;
    for c in &grid.cycles {
        offsets.push(total);
        total += c.period;
    }
    let mut imm: Vec<Option<u32>> =
        (0..grid.root_points.len()).map(|index| grid.immediate_component(PixelTarget::Root { index })).collect();
    for (id, c) in grid.cycles.iter().enumerate() {
        for phase in 0..c.period {
            imm.push(grid.immediate_component(PixelTarget::Cycle { id, phase }));
        }
    }
    let mut img = Image::new(res.0, res.1);
    for i in 0..grid.labels.len() {
        img.put(i % res.0, i / res.0, basin_colour(&grid, &offsets, &imm, i));
    }
    let to_px = |p: SpherePoint| {
        p.finite().map(|z| {
            let x = (z.re - (region.center.re - region.width / 2.0)) / region.width * res.0 as f64;
            let y = ((region.center.im + region.height / 2.0) - z.im) / region.height * res.1 as f64;
            (x, y)
        })
    };
    for g in overlays {
        for ray in &g.rays {
            let pl = ray.polyline();
            for w in pl.windows(2) {
                if let (Some(a), Some(b)) = (to_px(w[0]), to_px(w[1])) {
                    // Skip segments that leave the view by far (rays to ∞).
                    if (a.0 - b.0).abs() + (a.1 - b.1).abs() < 4.0 * (res.0 + res.1) as f64 {
                        img.line(a, b, OVERLAY);
                    }
                }
            }
        }
    }
    Ok((img, grid))
}

/// Per-pixel types over a region of the `c`-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeGrid {
    pub region: Region,
    pub resolution: (usize, usize),
    pub budget: usize,
    pub labels: Vec<TypeLabel>,
}

#[derive(Serialize)]
struct GridHeader<'a> {
    region: &'a Region,
    resolution: (usize, usize),
    budget: usize,
    legend: Vec<(u8, String, [u8; 3])>,
}

pub const LABEL_MAGIC: &[u8; 8] = b"NRLABEL1";

impl TypeGrid {
    pub fn count(&self, l: TypeLabel) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn legend() -> Vec<(u8, String, [u8; 3])> {
        TypeLabel::ALL.iter().map(|&l| (l.code(), l.to_string(), TYPE_PALETTE[l.code() as usize])).collect()
    }

    /// `NRLABEL1`, a little-endian `u32` header length, the JSON header and
    /// one code byte per pixel in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&GridHeader {
            region: &self.region,
            resolution: self.resolution,
            budget: self.budget,
            legend: TypeGrid::legend(),
        })
        .expect("header serializes");
        let mut out = LABEL_MAGIC.to_vec();
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend(self.labels.iter().map(|l| l.code()));
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<TypeGrid> {
        let bad = || Error::invalid("not a label grid");
        if b.len() < 12 || &b[..8] != LABEL_MAGIC {
            return Err(bad());
        }
        let n = u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(b.get(12..12 + n).ok_or_else(bad)?).map_err(|_| bad())?;
        let region: Region = serde_json::from_value(header["region"].clone()).map_err(|_| bad())?;
        let resolution: (usize, usize) = serde_json::from_value(header["resolution"].clone()).map_err(|_| bad())?;
        let budget = header["budget"].as_u64().ok_or_else(bad)? as usize;
        let body = &b[12 + n..];
        if body.len() != resolution.0 * resolution.1 {
            return Err(bad());
        }
        let labels = body.iter().map(|&c| TypeLabel::from_code(c).ok_or_else(bad)).collect::<Result<_>>()?;
        Ok(TypeGrid { region, resolution, budget, labels })
    }

    pub fn image(&self) -> Image {
        let mut img = Image::new(self.resolution.0, self.resolution.1);
        for (i, l) in self.labels.iter().enumerate() {
            img.put(i % self.resolution.0, i / self.resolution.0, TYPE_PALETTE[l.code() as usize]);
        }
        img
    }
}

/// Type map of the period-two slice.
pub fn render_parameter(region: Region, res: (usize, usize), budget: usize) -> Result<(Image, TypeGrid)> {
    if res.0 == 0 || res.1 == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let grid = TypeGrid { region, resolution: res, budget, labels: classify_grid(region, res, budget) };
    Ok((grid.image(), grid))
}
