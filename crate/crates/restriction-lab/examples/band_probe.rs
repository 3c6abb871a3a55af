// temporary probe
use restriction_lab::surface::*;

fn main() {
    let s = surface_measure_factors(ProfileFunction::cylinder(64).unwrap(), 2).unwrap();
    for &count in &[24usize, 48, 96] {
        for &q in &[4.5f64, 5.0, 6.0] {
            let mut line = format!("count={count:3} q={q}: ");
            for m in 3..=8u32 {
                let fam = BesselWeightedFamily::spread_for_block(m, count, 64, 2).unwrap();
                let lhs = claim_block_integral(&fam, &s, q, m);
                let mm = (1u64 << m) as f64;
                let rhs = fam.mass(s.z_grid()).powf(0.5 * q);
                let scaled = lhs / (mm.powf(0.5 * (4.0 - q)) * rhs);
                line += &format!("{scaled:.5} ");
            }
            println!("{line}");
        }
    }
    // fixed-order family independent of M
    println!("--- fixed orders [4,16], 24 of them:");
    for &q in &[4.5f64, 5.0, 6.0] {
        let orders: Vec<f64> = (0..24).map(|i| 4.0 + 12.0 * i as f64 / 23.0).collect();
        let fam = BesselWeightedFamily::new(orders, vec![vec![1.0; 64]; 24], 2).unwrap();
        let mut line = format!("q={q}: ");
        for m in 3..=8u32 {
            let lhs = claim_block_integral(&fam, &s, q, m);
            let mm = (1u64 << m) as f64;
            let rhs = fam.mass(s.z_grid()).powf(0.5 * q);
            line += &format!("{:.5} ", lhs / (mm.powf(0.5 * (4.0 - q)) * rhs));
        }
        println!("{line}");
    }
}
