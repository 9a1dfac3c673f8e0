use image::RgbImage;

use crate::geometry::BoundingBox;

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.set(x, y, f(x, y));
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.data[(y * self.width + x) as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn invert(&mut self) {
        self.data.iter_mut().for_each(|v| *v = !*v);
    }
}

/// Integer Rec. 601 luma.
pub fn luminance(p: [u8; 3]) -> u8 {
    ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8
}

/// Threshold `t` maximising between-class variance when the histogram is split
/// into `[0, t]` and `(t, 255]`. `None` when fewer than two levels are present.
pub fn otsu_threshold(histogram: &[u64; 256]) -> Option<u8> {
    let total: u64 = histogram.iter().sum();
    let weighted: f64 = histogram
        .iter()
        .enumerate()
        .map(|(i, &n)| i as f64 * n as f64)
        .sum();
    let mut below = 0u64;
    let mut below_sum = 0.0;
    let mut best: Option<(u8, f64)> = None;
    for (t, &n) in histogram.iter().enumerate() {
        below += n;
        below_sum += t as f64 * n as f64;
        let above = total - below;
        if below == 0 {
            continue;
        }
        if above == 0 {
            break;
        }
        let mean_below = below_sum / below as f64;
        let mean_above = (weighted - below_sum) / above as f64;
        let between = below as f64 * above as f64 * (mean_below - mean_above).powi(2);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t as u8, between));
        }
    }
    best.map(|(t, _)| t)
}

/// Pixels brighter than the Otsu threshold of the luminance histogram. The
/// foreground is taken to be the minority class, so the mask is flipped when
/// it would cover more than half the image. A single-level image yields an
/// empty mask.
pub fn segment_foreground(image: &RgbImage) -> Mask {
    let (w, h) = image.dimensions();
    let luma: Vec<u8> = image.pixels().map(|p| luminance(p.0)).collect();
    let mut histogram = [0u64; 256];
    for &l in &luma {
        histogram[l as usize] += 1;
    }
    let mut mask = Mask::new(w, h);
    let Some(t) = otsu_threshold(&histogram) else {
        return mask;
    };
    for (slot, &l) in mask.data.iter_mut().zip(&luma) {
        *slot = l > t;
    }
    if mask.count() * 2 > luma.len() {
        mask.invert();
    }
    mask
}

/// A labelled 8-connected region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub bbox: BoundingBox,
    pub area: usize,
    /// Label value in [`Labeling::labels`].
    pub id: u32,
}

/// Per-pixel component labels (`0` = background) and the surviving components.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl Labeling {
    pub fn label_at(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }
}

/// 8-connected labelling. Components smaller than `min_area` are dropped (their
/// pixels are relabelled 0); the rest are ordered by top-left corner, row-major.
pub fn label_components(mask: &Mask, min_area: usize) -> Labeling {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; mask.data.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    let mut next = 1u32;
    for start in 0..mask.data.len() {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        let id = next;
        next += 1;
        labels[start] = id;
        stack.push(start);
        let mut pixels = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        while let Some(idx) = stack.pop() {
            pixels.push(idx);
            let (x, y) = ((idx as u32) % w, (idx as u32) / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let n = (ny * w + nx) as usize;
                    if mask.data[n] && labels[n] == 0 {
                        labels[n] = id;
                        stack.push(n);
                    }
                }
            }
        }
        if pixels.len() < min_area {
            pixels.into_iter().for_each(|i| labels[i] = 0);
        } else {
            components.push(Component {
                bbox: BoundingBox::from_corners(x0, y0, x1, y1),
                area: pixels.len(),
                id,
            });
        }
    }
    components.sort_by_key(|c| (c.bbox.y, c.bbox.x));
    Labeling {
        width: w,
        height: h,
        labels,
        components,
    }
}

/// Boxes of the 8-connected components with at least `min_area` pixels,
/// sorted row-major by top-left corner.
pub fn connected_components(mask: &Mask, min_area: usize) -> Vec<BoundingBox> {
    label_components(mask, min_area)
        .components
        .into_iter()
        .map(|c| c.bbox)
        .collect()
}
