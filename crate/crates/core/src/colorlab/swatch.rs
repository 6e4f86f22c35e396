use std::io::Write;

use super::{lch_to_srgb, Palette};

pub const SWATCH_STRIPE_WIDTH: usize = 100;
pub const SWATCH_HEIGHT: usize = 100;

/// SVG with one equal-width rectangle per color, left to right.
pub fn write_svg<W: Write>(palette: &Palette, mut out: W) -> std::io::Result<()> {
    let width = SWATCH_STRIPE_WIDTH * palette.len();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{SWATCH_HEIGHT}" viewBox="0 0 {width} {SWATCH_HEIGHT}">"#
    )?;
    for (i, hex) in palette.hex().iter().enumerate() {
        writeln!(
            out,
            r#"  <rect x="{}" y="0" width="{SWATCH_STRIPE_WIDTH}" height="{SWATCH_HEIGHT}" fill="{hex}"/>"#,
            i * SWATCH_STRIPE_WIDTH
        )?;
    }
    writeln!(out, "</svg>")
}

/// Binary PPM (P6) with the same stripe layout as [`write_svg`].
pub fn write_ppm<W: Write>(palette: &Palette, mut out: W) -> std::io::Result<()> {
    let width = SWATCH_STRIPE_WIDTH * palette.len();
    write!(out, "P6\n{width} {SWATCH_HEIGHT}\n255\n")?;
    let rgb: Vec<[u8; 3]> = palette
        .colors()
        .iter()
        .map(|&c| {
            let (p, _) = lch_to_srgb(c);
            [p.r, p.g, p.b]
        })
        .collect();
    let mut row = Vec::with_capacity(width * 3);
    for px in &rgb {
        for _ in 0..SWATCH_STRIPE_WIDTH {
            row.extend_from_slice(px);
        }
    }
    for _ in 0..SWATCH_HEIGHT {
        out.write_all(&row)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_layout() {
        let p = Palette::from_hex(&["#FF0000", "#00FF00", "#0000FF"]).unwrap();
        let mut buf = Vec::new();
        write_ppm(&p, &mut buf).unwrap();
        let header = b"P6\n300 100\n255\n";
        assert_eq!(&buf[..header.len()], header);
        let body = &buf[header.len()..];
        assert_eq!(body.len(), 300 * 100 * 3);
        assert_eq!(&body[..3], &[255, 0, 0]);
        assert_eq!(&body[150 * 3..150 * 3 + 3], &[0, 255, 0]);
        assert_eq!(&body[299 * 3..300 * 3], &[0, 0, 255]);
    }

    #[test]
    fn svg_has_one_rect_per_color() {
        let p = Palette::from_hex(&["#FF0000", "#00FF00", "#0000FF", "#101010"]).unwrap();
        let mut buf = Vec::new();
        write_svg(&p, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.matches("<rect").count(), 4);
        assert!(s.contains(r##"x="300" y="0" width="100" height="100" fill="#101010""##));
    }
}
