use ma_forge::{analysis, geometry, solver};

fn run(preset: &str, m: usize, eps: f64) {
    let omega = geometry::preset(preset, 3).unwrap();
    let mut cfg = solver::PipelineConfig::defaults(3);
    cfg.m = m;
    cfg.epsilon = eps;
    let result = solver::polytope_pipeline(&omega, &cfg).unwrap();
    let grid = result.u_star.grid;
    let h = grid.h();
    let tol_c = analysis::contact_tol(h, cfg.tol_r);
    let set = analysis::contact_set(&result.u_star, &result.psi, &omega, tol_c).unwrap();
    println!(
        "== {preset} m={m} eps={eps} delta={:.4} tol_c={:.2e} contact={} pieces={} meetings={}",
        result.params.delta.unwrap(),
        tol_c,
        set.nodes.len(),
        set.pieces.len(),
        set.meetings.len()
    );
    for mt in &set.meetings {
        println!(
            "  meeting {:?}: nodes={} stratum={} ball={}",
            mt.vertices,
            mt.nodes.len(),
            mt.stratum_nodes.len(),
            mt.ball_node.is_some()
        );
    }
    // Gap profile across the wall between the first two vertices:
    // rows indexed by s = <q1 - q2, x> / (h * step), restricted to nodes
    // whose best two support values are the pair (so we stay on that wall,
    // away from other cones) and |x| <= 1.6.
    let q: Vec<Vec<f64>> = omega.vertices.clone();
    let dq: Vec<f64> = q[0].iter().zip(&q[1]).map(|(a, b)| a - b).collect();
    let step: f64 = dq.iter().map(|c| c * c).sum::<f64>();
    let mut rows: std::collections::BTreeMap<i64, (f64, usize, usize)> =
        std::collections::BTreeMap::new();
    for flat in 0..grid.len() {
        let p = grid.point(flat);
        let x = &p[..3];
        let r: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1.6 {
            continue;
        }
        let vals: Vec<f64> = q.iter().map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        let s: f64 = dq.iter().zip(x).map(|(a, b)| a * b).sum();
        let others = (2..q.len())
            .map(|i| vals[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if vals[0].min(vals[1]) + 0.3 * step.sqrt() * h <= others {
            continue;
        }
        let row = (s / (h * step)).round() as i64;
        if row.abs() > 4 {
            continue;
        }
        let gap = result.u_star.data[flat] - result.psi.data[flat];
        let e = rows.entry(row).or_insert((f64::INFINITY, 0, 0));
        e.0 = e.0.min(gap);
        e.1 += 1;
        if set.mask[flat] {
            e.2 += 1;
        }
    }
    for (row, (gap, total, contact)) in rows {
        println!("  row {row:+}: min_gap={gap:.3e} contact {contact}/{total}");
    }
}

fn main() {
    let mut args = std::env::args().skip(1);
    let which: String = args.next().unwrap_or_else(|| "all".into());
    if which == "all" || which == "seg" {
        run("segment", 65, 0.1);
    }
    if which == "all" || which == "tetra-small" {
        run("tetrahedron", 65, 0.1);
    }
    if which == "all" || which == "tetra-big" {
        run("tetrahedron", 81, 1.2);
    }
}
