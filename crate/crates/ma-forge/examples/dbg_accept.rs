use std::time::Instant;

use ma_forge::{analysis, geometry, legendre, solver};

fn main() {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(81);
    let eps: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.2);

    let omega = geometry::preset("tetrahedron", 3).unwrap();
    let mut pcfg = solver::PipelineConfig::defaults(3);
    pcfg.m = m;
    pcfg.epsilon = eps;
    let t0 = Instant::now();
    let result = solver::polytope_pipeline(&omega, &pcfg).unwrap();
    println!("solve: {:.1}s sweeps={}", t0.elapsed().as_secs_f64(), result.sweeps);

    let grid = result.u_star.grid;
    let h = grid.h();
    let tol_c = analysis::contact_tol(h, pcfg.tol_r);
    let set = analysis::contact_set(&result.u_star, &result.psi, &omega, tol_c).unwrap();
    let delta = result.params.delta.unwrap();

    println!("pieces={}", set.pieces.len());
    let vols: Vec<f64> = set.pieces.iter().map(|p| p.volume).collect();
    let vmin = vols.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = vols.iter().cloned().fold(0.0f64, f64::max);
    let vmean = vols.iter().sum::<f64>() / vols.len() as f64;
    println!("piece volumes {vols:?} spread={:.4}", (vmax - vmin) / vmean);
    for mt in &set.meetings {
        println!(
            "meeting {:?}: nodes={} stratum={} ball={:?}",
            mt.vertices,
            mt.nodes.len(),
            mt.stratum_nodes.len(),
            mt.ball_node.is_some()
        );
    }
    let mut clearance = f64::INFINITY;
    for &f in &set.nodes {
        let p = grid.point(f);
        clearance = clearance.min(analysis::forbidden_stratum_distance(&omega, &p[..3]).unwrap());
    }
    println!("clearance={clearance:.4} vs 2h={:.4}", 2.0 * h);

    let skeleton = analysis::polytope_skeleton(&omega, delta);
    let lip = set
        .nodes
        .iter()
        .map(|&f| {
            let p = grid.point(f);
            p[..3].iter().map(|c| c * c).sum::<f64>().sqrt()
        })
        .fold(0.0f64, f64::max);
    let max_u = analysis::skeleton_value_max(&result.u_star, &skeleton, 33);
    println!("skeleton max|u|={max_u:.3e} vs 5h*lip={:.3e}", 5.0 * h * lip);

    // Dual side.
    for m_dual in [129usize] {
        let t1 = Instant::now();
        let conj = legendre::conjugate(&result.u_star, m_dual).unwrap();
        let dual = conj.field.grid;
        println!(
            "conjugate m_dual={m_dual}: {:.1}s dual_hw={:.3} h_dual={:.4}",
            t1.elapsed().as_secs_f64(),
            dual.half_width,
            dual.h()
        );
        for m_raster in [257usize, 385] {
            for block_half in [4usize, 5] {
                let t2 = Instant::now();
                match analysis::unit_density_check(
                    &conj.field,
                    &skeleton,
                    block_half,
                    4.0 * dual.h(),
                    m_raster,
                ) {
                    Ok(d) => println!(
                        "density m_raster={m_raster} bh={block_half}: err={:.4} [{:.3},{:.3}] blocks={} {:.1}s",
                        d.max_err, d.min_density, d.max_density, d.blocks,
                        t2.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("density m_raster={m_raster} bh={block_half}: ERR {e}"),
                }
            }
            let dirac_sum: f64 = analysis::dirac_coefficients(&set).iter().map(|&(_, v)| v).sum();
            for radius in [2.0f64, 2.2, 2.5] {
                let t3 = Instant::now();
                match analysis::mass_accounting(&conj.field, radius, dirac_sum, m_raster) {
                    Ok(a) => println!(
                        "mass m_raster={m_raster} r={radius}: rel_defect={:.4} measured={:.3} ball={:.3} atoms={:.3} {:.1}s",
                        a.relative_defect, a.measured, a.ball_volume, a.dirac_sum,
                        t3.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("mass m_raster={m_raster} r={radius}: ERR {e}"),
                }
            }
        }
    }

    for (lo, hi) in [(2.2f64, 3.2f64), (2.0, 3.4)] {
        match analysis::asymptotic_fit(&result.u_star, lo, hi) {
            Ok(f) => println!(
                "fit [{lo},{hi}]: slope={:.3} kappa={:.4} samples={} indet={}",
                f.slope, f.kappa, f.samples, f.indeterminate
            ),
            Err(e) => println!("fit [{lo},{hi}]: ERR {e}"),
        }
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
