use image::{Rgb, RgbImage};

use crate::geometry::BoundingBox;
use crate::label::KernelLabel;
use crate::report::InspectionReport;

const NORMAL_COLOR: Rgb<u8> = Rgb([40, 220, 60]);
const ABNORMAL_COLOR: Rgb<u8> = Rgb([235, 40, 40]);
const GLYPH_SCALE: u32 = 2;

/// 3×5 bitmaps, one row per entry, MSB = leftmost column.
fn glyph(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        _ => return None,
    })
}

/// Copy of `image` with each row's box outlined (green Normal, red Abnormal)
/// and its calculation value printed above the box, or inside it when the box
/// touches the top edge.
pub fn annotate(image: &RgbImage, report: &InspectionReport) -> RgbImage {
    let mut out = image.clone();
    for row in &report.rows {
        let Some(bbox) = row.bbox else { continue };
        let color = match row.predict {
            KernelLabel::Normal => NORMAL_COLOR,
            KernelLabel::Abnormal => ABNORMAL_COLOR,
        };
        outline(&mut out, &bbox, color);
        let text = format!("{:.3}", row.calculation);
        let text_h = 5 * GLYPH_SCALE;
        let y = if bbox.y >= text_h + 2 {
            bbox.y - text_h - 2
        } else {
            bbox.y + 2
        };
        draw_text(&mut out, bbox.x, y, &text, color);
    }
    out
}

fn put(img: &mut RgbImage, x: u32, y: u32, color: Rgb<u8>) {
    if x < img.width() && y < img.height() {
        img.put_pixel(x, y, color);
    }
}

fn outline(img: &mut RgbImage, b: &BoundingBox, color: Rgb<u8>) {
    // Two pixels thick, drawn just outside the box so kernel pixels stay visible.
    for t in 1..=2u32 {
        let x0 = b.x.saturating_sub(t);
        let y0 = b.y.saturating_sub(t);
        let x1 = b.right() - 1 + t;
        let y1 = b.bottom() - 1 + t;
        for x in x0..=x1 {
            put(img, x, y0, color);
            put(img, x, y1, color);
        }
        for y in y0..=y1 {
            put(img, x0, y, color);
            put(img, x1, y, color);
        }
    }
}

fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, color: Rgb<u8>) {
    let mut cursor = x;
    for c in text.chars() {
        if let Some(rows) = glyph(c) {
            for (dy, bits) in rows.iter().enumerate() {
                for dx in 0..3u32 {
                    if bits & (0b100 >> dx) != 0 {
                        for sy in 0..GLYPH_SCALE {
                            for sx in 0..GLYPH_SCALE {
                                put(
                                    img,
                                    cursor + dx * GLYPH_SCALE + sx,
                                    y + dy as u32 * GLYPH_SCALE + sy,
                                    color,
                                );
                            }
                        }
                    }
                }
            }
        }
        cursor += 4 * GLYPH_SCALE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::ReportRow;

    #[test]
    fn draws_box_and_digits() {
        let img = RgbImage::from_pixel(60, 60, Rgb([0, 0, 0]));
        let row =
            ReportRow::new("Z-1", None, 0.857, Some(BoundingBox::new(20, 25, 10, 10))).unwrap();
        let out = annotate(&img, &InspectionReport::from_rows(vec![row]));
        assert_eq!(*out.get_pixel(19, 30), NORMAL_COLOR);
        assert_eq!(*out.get_pixel(25, 30), Rgb([0, 0, 0]));
        let text_pixels = (10..23)
            .flat_map(|y| (20..60).map(move |x| (x, y)))
            .filter(|&(x, y)| *out.get_pixel(x, y) == NORMAL_COLOR)
            .count();
        assert!(text_pixels > 20);
    }

    #[test]
    fn box_at_image_corner_does_not_panic() {
        let img = RgbImage::from_pixel(12, 12, Rgb([0, 0, 0]));
        let row = ReportRow::new("Z-1", None, 0.1, Some(BoundingBox::new(0, 0, 12, 12))).unwrap();
        let out = annotate(&img, &InspectionReport::from_rows(vec![row]));
        assert_eq!(*out.get_pixel(5, 5), ABNORMAL_COLOR);
    }
}
