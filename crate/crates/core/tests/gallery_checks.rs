use edgelab::chain::REDUCIBILITY_LABEL;
use edgelab::edgeworth::{kolmogorov_distance, StepCdf};
use edgelab::gallery::{
    cantor_eval, gallery_chain, make_coin_chain, standard_gallery, BaseExpansion, CantorParams, GALLERY,
};
use edgelab::io::{read_chain_file, write_chain_file};
use edgelab::numerics::normal_cdf;
use edgelab::transfer::{char_fn, lattice_distribution};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

#[test]
fn every_gallery_chain_is_elliptic_and_labelled() {
    for e in standard_gallery().unwrap() {
        let report = e.chain.validate_ellipticity().unwrap();
        assert!(report.eps0 > 0.0, "{}", e.name);
        assert!(e.f.labels().contains_key(REDUCIBILITY_LABEL), "{}", e.name);
        let want = GALLERY.iter().find(|(n, _)| *n == e.name).unwrap().1;
        assert_eq!(e.chain.n_steps(), want);
    }
}

#[test]
fn unknown_gallery_name_lists_known_ones() {
    let msg = gallery_chain("no-such-chain", None).unwrap_err().to_string();
    assert!(msg.contains("random-m4-s42") && msg.contains("coin-half"));
}

#[test]
fn gallery_chains_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("edgelab-gallery-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (name, _) in GALLERY {
        let e = gallery_chain(name, Some(64)).unwrap();
        let path = dir.join(format!("{name}.json"));
        write_chain_file(&path, &e.chain, Some(&e.f), None).unwrap();
        let (chain, f) = read_chain_file(&path).unwrap();
        let f = f.unwrap();
        let xi = [0.1, 0.7, 2.0];
        assert_eq!(
            char_fn(&chain, &f, &xi).unwrap(),
            char_fn(&e.chain, &e.f, &xi).unwrap(),
            "{name}"
        );
        assert_eq!(f.lattice().map(|l| l.l), e.f.lattice().map(|l| l.l));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

/// For a symmetric binomial law the sup distance to the normal law is
/// attained at a jump and is close to half the central atom.
#[test]
fn kolmogorov_distance_of_coin_sum() {
    let n = 400;
    let (chain, f) = make_coin_chain(n, 1, 2).unwrap();
    let pmf = lattice_distribution(&chain, &f, true).unwrap();
    let sigma = (n as f64).sqrt() / 2.0;
    let cdf = pmf.normalized_cdf(0.0, sigma).unwrap();
    let grid: Vec<f64> = (0..=1600).map(|i| -8.0 + 0.01 * i as f64).collect();
    let d = kolmogorov_distance(&cdf, normal_cdf, &grid);
    // brute force over the atoms
    let mut acc = 0.0;
    let mut brute = 0.0_f64;
    for (k, p) in pmf.atoms() {
        let x = k as f64 / 2.0 / sigma;
        brute = brute.max((acc - normal_cdf(x)).abs());
        acc += p;
        brute = brute.max((acc - normal_cdf(x)).abs());
    }
    assert!((d - brute).abs() < 1e-14);
    assert!((d - cdf.max_jump() / 2.0).abs() < 0.1 * d);
}

#[test]
fn step_cdf_from_atoms_merges_and_sorts() {
    let c = StepCdf::from_atoms(vec![1.0, -1.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    assert_eq!(c.points(), &[-1.0, 1.0]);
    assert_eq!(c.eval(0.0), 0.5);
    assert_eq!(c.eval(1.0), 1.0);
    assert_eq!(c.max_jump(), 0.5);
}

fn digits_strategy(base: u32) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0..base, 1..10)
}

proptest! {
    #[test]
    fn cantor_function_is_monotone(a in digits_strategy(4), b in digits_strategy(4)) {
        let params = CantorParams::new(3, 1).unwrap();
        let (x, y) = (BaseExpansion::fraction(a), BaseExpansion::fraction(b));
        let (fx, fy) = (cantor_eval(&params, &x).unwrap(), cantor_eval(&params, &y).unwrap());
        prop_assert!(fx >= BigRational::zero());
        if x.value(4) <= y.value(4) {
            prop_assert!(fx <= fy);
        } else {
            prop_assert!(fx >= fy);
        }
    }
}
