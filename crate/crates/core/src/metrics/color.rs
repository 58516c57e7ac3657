use serde::{Deserialize, Serialize};

use crate::blocks::Rgb;

/// CIE L*a*b* under the D65 illuminant, 2° observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub fn new(l: f64, a: f64, b: f64) -> Self {
        LabColor { l, a, b }
    }
}

const D65: [f64; 3] = [0.95047, 1.0, 1.08883];

fn srgb_to_linear(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c > 0.04045 {
        ((c + 0.055) / 1.055).powf(2.4)
    } else {
        c / 12.92
    }
}

fn lab_f(t: f64) -> f64 {
    if t > 0.008856 {
        t.cbrt()
    } else {
        7.787 * t + 16.0 / 116.0
    }
}

impl From<Rgb> for LabColor {
    fn from(rgb: Rgb) -> Self {
        let [r, g, b] = rgb.0.map(srgb_to_linear);
        let x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
        let y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
        let z = 0.019334 * r + 0.119193 * g + 0.950227 * b;
        let fx = lab_f(x / D65[0]);
        let fy = lab_f(y / D65[1]);
        let fz = lab_f(z / D65[2]);
        LabColor {
            l: 116.0 * fy - 16.0,
            a: 500.0 * (fx - fy),
            b: 200.0 * (fy - fz),
        }
    }
}

/// CIEDE2000 color difference with unit weighting factors.
pub fn ciede2000(c1: LabColor, c2: LabColor) -> f64 {
    use std::f64::consts::PI;
    let deg = |r: f64| r * 180.0 / PI;
    let rad = |d: f64| d * PI / 180.0;

    let c1_ab = c1.a.hypot(c1.b);
    let c2_ab = c2.a.hypot(c2.b);
    let c_bar7 = ((c1_ab + c2_ab) / 2.0).powi(7);
    let g = 0.5 * (1.0 - (c_bar7 / (c_bar7 + 25f64.powi(7))).sqrt());
    let a1 = (1.0 + g) * c1.a;
    let a2 = (1.0 + g) * c2.a;
    let cp1 = a1.hypot(c1.b);
    let cp2 = a2.hypot(c2.b);
    let hue = |b: f64, a: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            deg(b.atan2(a)).rem_euclid(360.0)
        }
    };
    let hp1 = hue(c1.b, a1);
    let hp2 = hue(c2.b, a2);

    let dl = c2.l - c1.l;
    let dc = cp2 - cp1;
    let chroma_product = cp1 * cp2;
    let dh = if chroma_product == 0.0 {
        0.0
    } else {
        let d = hp2 - hp1;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dh_big = 2.0 * chroma_product.sqrt() * rad(dh / 2.0).sin();

    let l_bar = (c1.l + c2.l) / 2.0;
    let c_bar = (cp1 + cp2) / 2.0;
    let h_bar = if chroma_product == 0.0 {
        hp1 + hp2
    } else if (hp1 - hp2).abs() <= 180.0 {
        (hp1 + hp2) / 2.0
    } else if hp1 + hp2 < 360.0 {
        (hp1 + hp2 + 360.0) / 2.0
    } else {
        (hp1 + hp2 - 360.0) / 2.0
    };

    let t = 1.0 - 0.17 * rad(h_bar - 30.0).cos() + 0.24 * rad(2.0 * h_bar).cos()
        + 0.32 * rad(3.0 * h_bar + 6.0).cos()
        - 0.20 * rad(4.0 * h_bar - 63.0).cos();
    let d_theta = 30.0 * (-((h_bar - 275.0) / 25.0).powi(2)).exp();
    let c_bar7 = c_bar.powi(7);
    let rc = 2.0 * (c_bar7 / (c_bar7 + 25f64.powi(7))).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * c_bar;
    let sh = 1.0 + 0.015 * c_bar * t;
    let rt = -rad(2.0 * d_theta).sin() * rc;

    let tl = dl / sl;
    let tc = dc / sc;
    let th = dh_big / sh;
    (tl * tl + tc * tc + th * th + rt * tc * th).sqrt()
}

/// Similarity in `[0, 1]` derived from ΔE00 on a 100-point scale.
pub fn color_similarity(a: Rgb, b: Rgb) -> f64 {
    (1.0 - ciede2000(a.into(), b.into()) / 100.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIRS: &str = include_str!("../../tests/data/ciede2000_pairs.txt");

    fn reference_pairs() -> Vec<(LabColor, LabColor, f64)> {
        PAIRS
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
                (
                    LabColor::new(v[0], v[1], v[2]),
                    LabColor::new(v[3], v[4], v[5]),
                    v[6],
                )
            })
            .collect()
    }

    #[test]
    fn reference_dataset() {
        let pairs = reference_pairs();
        assert_eq!(pairs.len(), 34);
        for (c1, c2, expected) in pairs {
            let got = ciede2000(c1, c2);
            assert!((got - expected).abs() <= 1e-4, "{c1:?} {c2:?}: {got} vs {expected}");
            assert!((ciede2000(c2, c1) - got).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_is_zero() {
        let c = LabColor::new(42.0, 10.0, -3.0);
        assert_eq!(ciede2000(c, c), 0.0);
    }

    #[test]
    fn srgb_to_lab_reference_values() {
        // Values from scikit-image rgb2lab.
        let cases = [
            (Rgb([255, 0, 0]), (53.2406, 80.0923, 67.2028)),
            (Rgb([0, 128, 255]), (54.7145, 18.7735, -70.9138)),
            (Rgb([18, 52, 86]), (21.0416, 1.0523, -24.0992)),
            (Rgb::WHITE, (100.0, -0.0025, 0.0047)),
            (Rgb::BLACK, (0.0, 0.0, 0.0)),
        ];
        for (rgb, (l, a, b)) in cases {
            let lab = LabColor::from(rgb);
            assert!((lab.l - l).abs() < 1e-3, "{rgb:?} {lab:?}");
            assert!((lab.a - a).abs() < 1e-3, "{rgb:?} {lab:?}");
            assert!((lab.b - b).abs() < 1e-3, "{rgb:?} {lab:?}");
        }
    }

    #[test]
    fn black_white_saturates() {
        let d = ciede2000(Rgb::BLACK.into(), Rgb::WHITE.into());
        assert!((d - 100.0).abs() < 1e-4);
        assert_eq!(color_similarity(Rgb::BLACK, Rgb::WHITE), 0.0);
        assert_eq!(color_similarity(Rgb([10, 20, 30]), Rgb([10, 20, 30])), 1.0);
    }
}
