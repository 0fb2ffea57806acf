use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rendezvous_core::hcw::{
    in_plane_dynamics, in_plane_input, inverse_transform_matrix, transform_matrix, zeta_dynamics, zeta_input,
};

fn product<const R: usize, const K: usize, const C: usize>(a: &[[f64; K]; R], b: &[[f64; C]; K]) -> [[f64; C]; R] {
    let mut out = [[0.0; C]; R];
    for i in 0..R {
        for j in 0..C {
            out[i][j] = (0..K).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn worst<const R: usize, const C: usize>(a: &[[f64; C]; R], b: &[[f64; C]; R]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn transform_identities_for_random_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut eye = [[0.0; 4]; 4];
    for (i, row) in eye.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let n = rng.gen_range(1e-4..1e-2);
        let (t, ti) = (transform_matrix(n), inverse_transform_matrix(n));
        assert!(worst(&product(&t, &ti), &eye) <= 1e-12, "T T^-1 at n={n}");
        assert!(worst(&product(&ti, &t), &eye) <= 1e-12, "T^-1 T at n={n}");
        let a = product(&product(&t, &in_plane_dynamics(n)), &ti);
        assert!(worst(&a, &zeta_dynamics(n)) <= 1e-12, "T A0 T^-1 at n={n}");
        assert!(worst(&product(&t, &in_plane_input()), &zeta_input(n)) <= 1e-12, "T B0 at n={n}");
    }
}
