// Debug: why acceleration doesn't fire on run 79 / master 1234
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use num_complex::Complex64;
use wpt_codebook::channel::*;
use wpt_codebook::model::*;
use wpt_codebook::saa::*;

fn main() {
    let params = RectennaParams::default();
    let mut seeder = ChaCha12Rng::seed_from_u64(1234);
    for run in 0..100usize {
        let m = seeder.gen_range(1..=2usize);
        let n_choices = [1usize, 2, 4, 8];
        let n = n_choices[seeder.gen_range(0..4)];
        let q = seeder.gen_range(1..=2usize);
        let t0 = seeder.gen_range(1..=50usize);
        let dims = SystemDims::new(m, n, q).unwrap();
        let cfg = ChannelConfig::defaults(dims, seeder.gen());
        if run != 79 { continue; }
        println!("run 79: M={m} N={n} Q={q} T0={t0}");
        let sample = draw_sample(&cfg, t0).unwrap();
        let weights = vec![1.0; q];
        let p = 3.98107 / m as f64;
        let s0 = default_initial_point(&sample.realizations()[0], p).unwrap();
        // manual loop with acceleration diagnostics
        let mut s_prev = s0.weights().clone();
        let mut t_prev = compute_t(sample.realizations(), &s_prev, &dims).unwrap();
        let mut drift_prev: Option<(f64, nalgebra::DVector<Complex64>)> = None;
        for l in 1..=120 {
            let a1 = build_a1(sample.realizations(), &t_prev, &weights, &params, &dims).unwrap();
            let (_, u) = min_eigpair(&a1).unwrap();
            let s_plain = u * Complex64::new(p.sqrt(), 0.0);
            let t_plain = compute_t(sample.realizations(), &s_plain, &dims).unwrap();
            let obj_plain = objective_from_t(&t_plain, &weights, &params);
            let cross = s_prev.dotc(&s_plain);
            let aligned = &s_plain * (cross.conj() / cross.norm());
            let drift = &aligned - &s_prev;
            let dn = drift.norm();
            if let Some((pn, pd)) = &drift_prev {
                let ratio = dn / pn.max(1e-300);
                // cosine between successive drift directions
                let cosang = pd.dotc(&drift).norm() / (pd.norm() * dn).max(1e-300);
                if l % 10 == 0 {
                    println!("iter {l}: drift={dn:.3e} ratio={ratio:.4} cos(angle)={cosang:.4} obj={obj_plain:.9e}");
                }
            }
            drift_prev = Some((dn, drift));
            s_prev = s_plain;
            t_prev = t_plain;
        }
    }
}
