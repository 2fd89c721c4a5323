use ma_forge::{analysis, config, geometry, solver};

fn main() {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(65);
    let eps_list: Vec<f64> = args.map(|s| s.parse().unwrap()).collect();
    let eps_list = if eps_list.is_empty() { vec![0.65, 0.8, 1.0] } else { eps_list };
    for eps in eps_list {
        let mut cfg = config::RunConfig::defaults(3);
        cfg.m = m;
        cfg.epsilon = eps;
        let omega = geometry::preset("tetrahedron", 3).unwrap();
        let pcfg = solver::PipelineConfig {
            n: cfg.n,
            half_width: cfg.half_width,
            m: cfg.m,
            epsilon: cfg.epsilon,
            boundary_offset: cfg.boundary_offset,
            tol_r: cfg.tol_r,
            max_sweeps: cfg.max_sweeps,
            mode: cfg.sweep,
            cascadic: cfg.cascadic,
        };
        let result = solver::polytope_pipeline(&omega, &pcfg).unwrap();
        let grid = result.u_star.grid;
        let h = grid.h();
        let tol_c = analysis::contact_tol(h, cfg.tol_r);
        let set = analysis::contact_set(&result.u_star, &result.psi, &omega, tol_c).unwrap();
        let mut minc = f64::INFINITY;
        for &f in &set.nodes {
            let p = grid.point(f);
            let d = analysis::forbidden_stratum_distance(&omega, &p[..3]).unwrap();
            minc = minc.min(d);
        }
        println!(
            "m={m} h={h:.4} eps={eps} delta={:.4} contact={} min_clearance={minc:.4}",
            result.params.delta.unwrap(),
            set.nodes.len()
        );
        // gap along the diagonal ray -(1,1,1)/sqrt(3): nodes (-a,-a,-a)
        print!("  ray gap:");
        let c = (grid.m / 2) as i64;
        for k in 1..=((grid.m as i64 / 2).min((1.5 / h) as i64)) {
            let idx = [(c - k) as usize, (c - k) as usize, (c - k) as usize, 0];
            let f = grid.flat(idx);
            let gap = result.u_star.data[f] - result.psi.data[f];
            print!(" {:.2}:{:.1e}", k as f64 * h * 3f64.sqrt(), gap);
        }
        println!();
    }
}
