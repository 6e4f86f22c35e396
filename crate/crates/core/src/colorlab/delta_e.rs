//! CIEDE2000 color difference with unit parametric factors.

use super::{LabColor, LchColor};
use crate::autograd::Real;

const POW25_7: f64 = 6_103_515_625.0;

fn hue_degrees<S: Real>(b: S, a: S) -> S {
    if a.val() == 0.0 && b.val() == 0.0 {
        return a.lift(0.0);
    }
    let h = b.atan2(a) * (180.0 / std::f64::consts::PI);
    if h.val() < 0.0 {
        h + 360.0
    } else {
        h
    }
}

/// ΔE00 between two Lab colors given as `(L, a, b)` triples.
///
/// Written against [`Real`] so the same formula serves evaluation and
/// training. Hue-branch selections are piecewise constant; the function is
/// differentiable away from those seams and away from zero difference.
pub fn ciede2000_generic<S: Real>(lab1: [S; 3], lab2: [S; 3]) -> S {
    let [l1, a1, b1] = lab1;
    let [l2, a2, b2] = lab2;
    let deg = std::f64::consts::PI / 180.0;

    let c1 = (a1 * a1 + b1 * b1).sqrt();
    let c2 = (a2 * a2 + b2 * b2).sqrt();
    let c_bar7 = ((c1 + c2) * 0.5).powi(7);
    let g = (-(c_bar7 / (c_bar7 + POW25_7)).sqrt() + 1.0) * 0.5;

    let a1p = a1 * (g + 1.0);
    let a2p = a2 * (g + 1.0);
    let c1p = (a1p * a1p + b1 * b1).sqrt();
    let c2p = (a2p * a2p + b2 * b2).sqrt();
    let h1p = hue_degrees(b1, a1p);
    let h2p = hue_degrees(b2, a2p);

    let dl = l2 - l1;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;
    let achromatic = chroma_product.val() == 0.0;

    let dh = if achromatic {
        l1.lift(0.0)
    } else {
        let d = h2p - h1p;
        if d.val().abs() <= 180.0 {
            d
        } else if d.val() > 180.0 {
            d - 360.0
        } else {
            d + 360.0
        }
    };
    let d_big_h = chroma_product.sqrt() * (dh * (deg * 0.5)).sin() * 2.0;

    let l_bar = (l1 + l2) * 0.5;
    let c_bar_p = (c1p + c2p) * 0.5;
    let h_sum = h1p + h2p;
    let h_bar = if achromatic {
        h_sum
    } else if (h1p - h2p).val().abs() <= 180.0 {
        h_sum * 0.5
    } else if h_sum.val() < 360.0 {
        (h_sum + 360.0) * 0.5
    } else {
        (h_sum - 360.0) * 0.5
    };

    let hr = h_bar * deg;
    let t = -((hr - 30.0 * deg).cos() * 0.17) + 1.0 + (hr * 2.0).cos() * 0.24
        + (hr * 3.0 + 6.0 * deg).cos() * 0.32
        - (hr * 4.0 - 63.0 * deg).cos() * 0.20;

    let l50 = (l_bar - 50.0) * (l_bar - 50.0);
    let sl = l50 * 0.015 / (l50 + 20.0).sqrt() + 1.0;
    let sc = c_bar_p * 0.045 + 1.0;
    let sh = c_bar_p * t * 0.015 + 1.0;

    let theta = ((h_bar - 275.0) / 25.0).powi(2);
    let d_theta = (-theta).exp() * 30.0;
    let c_bar_p7 = c_bar_p.powi(7);
    let rc = (c_bar_p7 / (c_bar_p7 + POW25_7)).sqrt() * 2.0;
    let rt = -((d_theta * (2.0 * deg)).sin() * rc);

    let tl = dl / sl;
    let tc = dc / sc;
    let th = d_big_h / sh;
    (tl * tl + tc * tc + th * th + rt * tc * th).sqrt()
}

pub fn ciede2000_lab(c1: LabColor, c2: LabColor) -> f64 {
    ciede2000_generic([c1.l, c1.a, c1.b], [c2.l, c2.a, c2.b])
}

/// ΔE00 between two LCh colors.
pub fn ciede2000(c1: LchColor, c2: LchColor) -> f64 {
    if c1 == c2 {
        return 0.0;
    }
    ciede2000_lab(c1.to_lab(), c2.to_lab())
}
