//! CIEDE2000 between colors given as hex, and the color similarity score
//! derived from it.
//!
//! cargo run --example color_difference -- ff0000 fe0505

use pagefidelity::blocks::Rgb;
use pagefidelity::metrics::{ciede2000, color_similarity, LabColor};

fn hex(s: &str) -> Result<Rgb, Box<dyn std::error::Error>> {
    let s = s.trim_start_matches('#');
    if s.len() != 6 {
        return Err(format!("bad color {s}").into());
    }
    let v = u32::from_str_radix(s, 16)?;
    Ok(Rgb([(v >> 16) as u8, (v >> 8) as u8, v as u8]))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs: Vec<(String, String)> = if args.len() >= 2 {
        args.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0].clone(), c[1].clone())).collect()
    } else {
        [("000000", "ffffff"), ("ff0000", "fe0505"), ("336699", "336699"), ("2b4c7e", "567ebf")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    };
    println!("{:<8} {:<8} {:>8} {:>8} {:>8}", "a", "b", "L* of a", "dE00", "sim");
    for (a, b) in pairs {
        let (ca, cb) = (hex(&a)?, hex(&b)?);
        let (la, lb) = (LabColor::from(ca), LabColor::from(cb));
        println!("{a:<8} {b:<8} {:>8.3} {:>8.4} {:>8.4}", la.l, ciede2000(la, lb), color_similarity(ca, cb));
    }
    Ok(())
}
