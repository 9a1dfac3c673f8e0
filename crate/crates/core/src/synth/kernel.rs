use std::f64::consts::{PI, TAU};

use image::{Rgb, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;
use crate::label::KernelLabel;

pub const BACKGROUND: [u8; 3] = [30, 30, 30];
pub(crate) const TIP_WHITE: [u8; 3] = [248, 244, 228];
pub(crate) const GLOSS_WHITE: [u8; 3] = [255, 252, 236];
pub(crate) const CRACK_COLOR: [u8; 3] = [58, 40, 26];
/// Exposed starchy interior along a broken edge.
pub(crate) const FRACTURE_COLOR: [u8; 3] = [196, 200, 192];
pub(crate) const WRINKLE_COLOR: [u8; 3] = [150, 146, 160];
pub(crate) const GREEN_BLOTCH: [u8; 3] = [104, 166, 58];
pub(crate) const BLACK_BLOTCH: [u8; 3] = [34, 28, 22];

/// Smallest defect area any single defect on an Abnormal kernel may have,
/// as a fraction of the kernel's ellipse area.
pub const MIN_SINGLE_DEFECT_FRACTION: f64 = 0.02;

/// Width of the fracture band around a missing chunk, as a fraction of the
/// semi-minor axis.
const FRACTURE_RIM: f64 = 0.2;

/// Generator tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettings {
    /// Minimum total defect area on an Abnormal kernel, as a fraction of its
    /// ellipse area. Larger is easier to learn.
    pub min_defect_fraction: f64,
}

impl GeneratorSettings {
    pub const EASY: Self = Self {
        min_defect_fraction: 0.08,
    };
    pub const HARD: Self = Self {
        min_defect_fraction: MIN_SINGLE_DEFECT_FRACTION,
    };
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        Self::EASY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectKind {
    Crack,
    MissingChunk,
    Wrinkle,
    DarkBlotch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlotchColor {
    Green,
    Black,
}

/// Defect geometry in the kernel's local frame: `u` along the major axis,
/// `v` along the minor axis, both normalised by the corresponding semi-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Defect {
    /// Dark polyline through the interior; `width` in pixels.
    Crack { points: [(f64, f64); 3], width: f64 },
    /// Bite out of the rim at parametric angle `at`, edged by a band of
    /// exposed pale interior; radius as a fraction of the semi-minor axis.
    MissingChunk { at: f64, radius: f64 },
    /// Grey-violet ridges over part of the surface.
    Wrinkle {
        direction: f64,
        frequency: f64,
        phase: f64,
        side: f64,
    },
    /// Union of discs `(u, v, radius / semi-minor)`.
    DarkBlotch {
        discs: Vec<(f64, f64, f64)>,
        color: BlotchColor,
    },
}

impl Defect {
    pub fn kind(&self) -> DefectKind {
        match self {
            Defect::Crack { .. } => DefectKind::Crack,
            Defect::MissingChunk { .. } => DefectKind::MissingChunk,
            Defect::Wrinkle { .. } => DefectKind::Wrinkle,
            Defect::DarkBlotch { .. } => DefectKind::DarkBlotch,
        }
    }
}

/// Everything needed to paint one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAppearance {
    pub center: (f64, f64),
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis, radians.
    pub angle: f64,
    pub base_color: [u8; 3],
    /// `+1` or `-1`: which end of the major axis carries the white tip.
    pub tip_side: f64,
    /// Gloss highlight centre in normalised local coordinates.
    pub gloss: (f64, f64),
    pub defects: Vec<Defect>,
}

/// Outcome of painting a single pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Paint {
    Outside,
    /// Inside the ellipse but bitten away; shows background.
    Gap(usize),
    Body([u8; 3]),
    Defect(usize, [u8; 3]),
}

/// Pixel statistics of a kernel rasterised at its placement.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStats {
    /// Pixels whose centre lies inside the ellipse.
    pub ellipse_area: usize,
    /// Pixels attributed to each defect, in `defects` order.
    pub defect_area: Vec<usize>,
    /// Tight box of painted (non-gap) pixels.
    pub painted_box: Option<BoundingBox>,
}

impl RenderStats {
    pub fn total_defect_area(&self) -> usize {
        self.defect_area.iter().sum()
    }

    pub fn largest_defect_fraction(&self) -> f64 {
        let max = self.defect_area.iter().copied().max().unwrap_or(0);
        max as f64 / self.ellipse_area.max(1) as f64
    }

    pub fn defect_fraction(&self) -> f64 {
        self.total_defect_area() as f64 / self.ellipse_area.max(1) as f64
    }
}

impl KernelAppearance {
    pub fn label(&self) -> KernelLabel {
        if self.defects.is_empty() {
            KernelLabel::Normal
        } else {
            KernelLabel::Abnormal
        }
    }

    /// Pixel-space local coordinates of a point.
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (s, c) = self.angle.sin_cos();
        (dx * c + dy * s, -dx * s + dy * c)
    }

    /// Whether the pixel centre `(x + 0.5, y + 0.5)` lies inside the ellipse.
    pub fn contains_pixel(&self, x: u32, y: u32) -> bool {
        let (u, v) = self.local(x as f64 + 0.5, y as f64 + 0.5);
        (u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2) <= 1.0
    }

    /// Radius of a circle around `center` that encloses the kernel.
    pub fn bounding_radius(&self) -> f64 {
        self.semi_major.max(self.semi_minor)
    }

    pub(crate) fn paint(&self, x: u32, y: u32) -> Paint {
        let (u, v) = self.local(x as f64 + 0.5, y as f64 + 0.5);
        let (a, b) = (self.semi_major, self.semi_minor);
        let (un, vn) = (u / a, v / b);
        let r2 = un * un + vn * vn;
        if r2 > 1.0 {
            return Paint::Outside;
        }

        for (i, defect) in self.defects.iter().enumerate() {
            if let Defect::MissingChunk { at, radius } = defect {
                let (cu, cv) = (a * at.cos(), b * at.sin());
                if (u - cu).hypot(v - cv) <= radius * b {
                    return Paint::Gap(i);
                }
            }
        }

        let mut hit = None;
        for (i, defect) in self.defects.iter().enumerate() {
            let color = match defect {
                Defect::MissingChunk { at, radius } => {
                    // Fractured edge left around the bite.
                    let (cu, cv) = (a * at.cos(), b * at.sin());
                    let rim = (FRACTURE_RIM * b).max(1.5);
                    ((u - cu).hypot(v - cv) <= radius * b + rim).then_some(FRACTURE_COLOR)
                }
                Defect::Crack { points, width } => {
                    let p = |k: usize| (points[k].0 * a, points[k].1 * b);
                    let d = segment_distance((u, v), p(0), p(1)).min(segment_distance(
                        (u, v),
                        p(1),
                        p(2),
                    ));
                    (d <= width / 2.0).then_some(CRACK_COLOR)
                }
                Defect::Wrinkle {
                    direction,
                    frequency,
                    phase,
                    side,
                } => {
                    let t = un * direction.cos() + vn * direction.sin();
                    let ridge = (TAU * frequency * t + phase).sin() > 0.55;
                    (ridge && side * un > -0.2).then_some(WRINKLE_COLOR)
                }
                Defect::DarkBlotch { discs, color } => discs
                    .iter()
                    .any(|&(du, dv, r)| (u - du * a).hypot(v - dv * b) <= r * b)
                    .then_some(match color {
                        BlotchColor::Green => GREEN_BLOTCH,
                        BlotchColor::Black => BLACK_BLOTCH,
                    }),
            };
            if let Some(c) = color {
                hit = Some((i, c));
            }
        }
        if let Some((i, c)) = hit {
            return Paint::Defect(i, c);
        }

        // Healthy surface: shaded base colour, white tip, glossy highlight.
        let shade = 1.0 - 0.12 * r2;
        let mut rgb = self.base_color.map(|c| c as f64 * shade);
        let tip = smoothstep((self.tip_side * un - 0.62) / 0.3);
        blend(&mut rgb, TIP_WHITE, tip);
        let g = ((un - self.gloss.0).hypot(vn - self.gloss.1) / 0.25).min(1.0);
        blend(&mut rgb, GLOSS_WHITE, 0.7 * (1.0 - g).powi(2));
        Paint::Body(rgb.map(|c| c.round().clamp(0.0, 255.0) as u8))
    }

    /// Visit every pixel of a `width × height` canvas the kernel may touch.
    pub(crate) fn rasterize(&self, width: u32, height: u32, mut f: impl FnMut(u32, u32, Paint)) {
        let r = self.bounding_radius() + 1.0;
        let clamp = |v: f64, hi: u32| v.max(0.0).min(hi as f64) as u32;
        let (x0, x1) = (
            clamp(self.center.0 - r, width),
            clamp(self.center.0 + r + 1.0, width),
        );
        let (y0, y1) = (
            clamp(self.center.1 - r, height),
            clamp(self.center.1 + r + 1.0, height),
        );
        for y in y0..y1 {
            for x in x0..x1 {
                let p = self.paint(x, y);
                if p != Paint::Outside {
                    f(x, y, p);
                }
            }
        }
    }

    pub fn stats(&self, width: u32, height: u32) -> RenderStats {
        let mut ellipse_area = 0;
        let mut defect_area = vec![0; self.defects.len()];
        let mut corners: Option<(u32, u32, u32, u32)> = None;
        self.rasterize(width, height, |x, y, p| {
            ellipse_area += 1;
            match p {
                Paint::Gap(i) => defect_area[i] += 1,
                Paint::Defect(i, _) => defect_area[i] += 1,
                _ => {}
            }
            if !matches!(p, Paint::Gap(_)) {
                corners = Some(match corners {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
        });
        RenderStats {
            ellipse_area,
            defect_area,
            painted_box: corners.map(|(a, b, c, d)| BoundingBox::from_corners(a, b, c, d)),
        }
    }

    /// Paint onto `canvas`; gaps are filled with the background colour.
    pub fn render_into(&self, canvas: &mut RgbImage) {
        let (w, h) = canvas.dimensions();
        self.rasterize(w, h, |x, y, p| {
            let c = match p {
                Paint::Body(c) | Paint::Defect(_, c) => c,
                Paint::Gap(_) => BACKGROUND,
                Paint::Outside => return,
            };
            canvas.put_pixel(x, y, Rgb(c));
        });
    }
}

/// Draw a kernel of the requested class centred at `center`, sized by its
/// semi-major axis, on a canvas of `canvas` dimensions.
pub(crate) fn sample_appearance<R: Rng>(
    label: KernelLabel,
    center: (f64, f64),
    semi_major: f64,
    canvas: (u32, u32),
    settings: &GeneratorSettings,
    rng: &mut R,
) -> KernelAppearance {
    let yellow = [238.0, 196.0, 52.0];
    let orange = [232.0, 152.0, 34.0];
    let t: f64 = rng.random_range(0.0..1.0);
    let base_color = [0, 1, 2].map(|i| (yellow[i] * (1.0 - t) + orange[i] * t).round() as u8);

    let mut kernel = KernelAppearance {
        center,
        semi_major,
        semi_minor: semi_major * rng.random_range(0.62..0.82),
        angle: rng.random_range(0.0..PI),
        base_color,
        tip_side: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        gloss: (rng.random_range(-0.4..0.2), rng.random_range(-0.45..0.0)),
        defects: Vec::new(),
    };
    if label == KernelLabel::Normal {
        return kernel;
    }

    let target = settings.min_defect_fraction.max(MIN_SINGLE_DEFECT_FRACTION);
    for _ in 0..6 {
        let defect = sample_defect(&kernel, rng);
        kernel.defects.push(defect);
        let stats = kernel.stats(canvas.0, canvas.1);
        if stats.defect_fraction() >= target
            && stats.largest_defect_fraction() >= MIN_SINGLE_DEFECT_FRACTION
        {
            return kernel;
        }
    }
    // Rare fallback: a large central blotch always satisfies the area bound.
    kernel.defects.push(Defect::DarkBlotch {
        discs: vec![(0.0, 0.0, 0.55)],
        color: BlotchColor::Green,
    });
    kernel
}

fn sample_defect<R: Rng>(kernel: &KernelAppearance, rng: &mut R) -> Defect {
    match rng.random_range(0..4u8) {
        0 => {
            let dir: f64 = rng.random_range(0.0..PI);
            let half = rng.random_range(0.45..0.6);
            let (c, s) = (dir.cos(), dir.sin());
            let kink = rng.random_range(-0.12..0.12);
            Defect::Crack {
                points: [
                    (-half * c, -half * s),
                    (-kink * s, kink * c),
                    (half * c, half * s),
                ],
                width: (kernel.semi_minor * rng.random_range(0.1..0.16)).max(1.5),
            }
        }
        1 => Defect::MissingChunk {
            at: rng.random_range(0.0..TAU),
            radius: rng.random_range(0.4..0.6),
        },
        2 => Defect::Wrinkle {
            direction: rng.random_range(0.0..PI),
            frequency: rng.random_range(2.5..4.0),
            phase: rng.random_range(0.0..TAU),
            side: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        },
        _ => {
            let count = rng.random_range(2..=4);
            let cu = rng.random_range(-0.35..0.35);
            let cv = rng.random_range(-0.25..0.25);
            let discs = (0..count)
                .map(|_| {
                    (
                        cu + rng.random_range(-0.2..0.2),
                        cv + rng.random_range(-0.2..0.2),
                        rng.random_range(0.18..0.3),
                    )
                })
                .collect();
            let color = if rng.random_bool(0.5) {
                BlotchColor::Green
            } else {
                BlotchColor::Black
            };
            Defect::DarkBlotch { discs, color }
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * abx).hypot(p.1 - a.1 - t * aby)
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

fn blend(rgb: &mut [f64; 3], toward: [u8; 3], t: f64) {
    for (c, &w) in rgb.iter_mut().zip(&toward) {
        *c = *c * (1.0 - t) + w as f64 * t;
    }
}
