//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line and asserting the stated tolerance exactly.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use qmoments::algebra::{ModelSpec, MomentQuery, OpExpr, OpSymbol, OpWord};
use qmoments::diagrams::{
    catalan_number, pairing_count, q_wick_moment, scalar_recursion_moment, FeynmanDiagram,
};
use qmoments::engine::{
    moment, moment_equal_check, vacuum_expectation, EvalConfig, MomentEquality,
};
use qmoments::exactmath::{QPoly, QRational};
use qmoments::fockoracle::{
    apply_annihilation, apply_creation, numeric_moment, q_inner, FockModel, FockState, TensorWord,
};

fn r(n: i64, d: i64) -> QRational {
    QRational::from((n, d))
}

fn query(sigma: &[usize]) -> MomentQuery {
    MomentQuery::new(sigma.to_vec()).unwrap()
}

/// Every index word over `1..=d` of the given length, lexicographic.
fn all_words(d: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut sigma = vec![1usize; len];
    loop {
        out.push(sigma.clone());
        let mut pos = len;
        while pos > 0 {
            if sigma[pos - 1] < d {
                sigma[pos - 1] += 1;
                break;
            }
            sigma[pos - 1] = 1;
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
    }
}

fn random_rational(rng: &mut StdRng) -> QRational {
    let mut num = rng.gen_range(-9i64..=9);
    if num == 0 {
        num = 1;
    }
    r(num, rng.gen_range(1i64..=4))
}

/// Random covariance matrix, deliberately not symmetric.
fn random_cov(rng: &mut StdRng, d: usize) -> Vec<Vec<QRational>> {
    (0..d)
        .map(|_| (0..d).map(|_| random_rational(rng)).collect())
        .collect()
}

/// Random symmetric positive-semidefinite covariance, built as L L^T for a
/// rational lower-triangular L with positive diagonal.
fn random_psd_cov(rng: &mut StdRng, d: usize) -> Vec<Vec<QRational>> {
    let l: Vec<Vec<QRational>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if j < i {
                        random_rational(rng)
                    } else if j == i {
                        r(rng.gen_range(1i64..=4), rng.gen_range(1i64..=2))
                    } else {
                        QRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    (0..d)
                        .map(|k| &l[i][k] * &l[j][k])
                        .fold(QRational::zero(), |acc, x| acc + x)
                })
                .collect()
        })
        .collect()
}

/// Criterion 1: covariance, third and fourth moments match the closed
/// fixtures for effectively symbolic covariances over d = 2. The fourth
/// moment is at most quadratic in each covariance entry, so agreement on
/// the full grid {0,1,2}^4 of entry assignments proves the polynomial
/// identity itself.
#[test]
fn acceptance_01_paper_fixtures() {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut grid = vec![0i64; 4];
    loop {
        let cov = vec![
            vec![r(grid[0], 1), r(grid[1], 1)],
            vec![r(grid[2], 1), r(grid[3], 1)],
        ];
        let spec = ModelSpec::centered(cov).unwrap();
        for sigma in all_words(2, 2) {
            let got = moment(&spec, &query(&sigma)).unwrap();
            assert_eq!(
                got,
                QPoly::constant(spec.cov(sigma[0], sigma[1]).clone()),
                "covariance fixture at sigma={sigma:?}, cov grid {grid:?}"
            );
            checked += 1;
        }
        for sigma in all_words(2, 3) {
            assert!(
                moment(&spec, &query(&sigma)).unwrap().is_zero(),
                "third moment fixture at sigma={sigma:?}, cov grid {grid:?}"
            );
            checked += 1;
        }
        for sigma in all_words(2, 4) {
            let got = moment(&spec, &query(&sigma)).unwrap();
            let c = |a: usize, b: usize| spec.cov(sigma[a - 1], sigma[b - 1]).clone();
            let expected = &(&QPoly::constant(&c(1, 2) * &c(3, 4))
                + &QPoly::constant(&c(2, 3) * &c(1, 4)))
                + &QPoly::monomial(&c(2, 4) * &c(1, 3), 1);
            assert_eq!(
                got, expected,
                "fourth moment fixture at sigma={sigma:?}, cov grid {grid:?}"
            );
            checked += 1;
        }
        let mut pos = 4;
        while pos > 0 {
            if grid[pos - 1] < 2 {
                grid[pos - 1] += 1;
                break;
            }
            grid[pos - 1] = 0;
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "runtime budget: {elapsed:?}"
    );
    println!("ACCEPTANCE 01 paper-fixtures: PASS ({checked} moments over the covariance grid, {elapsed:?})");
}

/// Criterion 2: the worked crossing example, individually queryable.
#[test]
fn acceptance_02_crossing_fixture() {
    let d: FeynmanDiagram = "(1,3)(2,7)(4,8)(5,6)".parse().unwrap();
    assert_eq!(d.left_crossings((2, 7)), 1);
    assert_eq!(d.left_crossings((4, 8)), 1);
    assert_eq!(d.crossing_number(), 2);
    println!("ACCEPTANCE 02 crossing-fixture: PASS (c_l(2,7)=1, c_l(4,8)=1, c=2)");
}

/// Criterion 3: rewriting engine, crossing-weighted pairing sum, and
/// pair-removal recursion agree as exact polynomials on every word of
/// length <= 8 over d = 3 for five randomized rational covariances.
#[test]
fn acceptance_03_three_route_agreement() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x0303);
    let words: Vec<Vec<usize>> = (1..=8).flat_map(|len| all_words(3, len)).collect();
    let mut compared = 0usize;
    for trial in 0..5 {
        let spec = ModelSpec::centered(random_cov(&mut rng, 3)).unwrap();
        words.par_iter().for_each(|sigma| {
            let q = query(sigma);
            let via_engine = moment(&spec, &q).unwrap();
            let via_wick = q_wick_moment(&spec, &q).unwrap();
            let via_recursion = scalar_recursion_moment(&spec, &q).unwrap();
            assert_eq!(
                via_engine, via_wick,
                "engine vs pairing sum at sigma={sigma:?}, trial {trial}"
            );
            assert_eq!(
                via_engine, via_recursion,
                "engine vs recursion at sigma={sigma:?}, trial {trial}"
            );
        });
        compared += words.len();
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "runtime budget: {elapsed:?}"
    );
    println!("ACCEPTANCE 03 three-route-agreement: PASS ({compared} words x 3 routes, exact, {elapsed:?})");
}

/// Criterion 4: every odd moment up to length 9 vanishes exactly for
/// centered models, d <= 3.
#[test]
fn acceptance_04_odd_vanishing() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x0404);
    let mut checked = 0usize;
    for d in 1..=3usize {
        let spec = ModelSpec::centered(random_cov(&mut rng, d)).unwrap();
        for len in [1usize, 3, 5, 7, 9] {
            let words = all_words(d, len);
            words.par_iter().for_each(|sigma| {
                assert!(
                    moment(&spec, &query(sigma)).unwrap().is_zero(),
                    "odd moment nonzero at d={d}, sigma={sigma:?}"
                );
            });
            checked += words.len();
        }
    }
    let elapsed = start.elapsed();
    println!(
        "ACCEPTANCE 04 odd-vanishing: PASS ({checked} odd words, all exactly zero, {elapsed:?})"
    );
}

/// Criterion 5: q = 1 reproduces the classical pairing sum (Isserlis) on
/// fourth moments; with d = 1, c = 1 the 2n-th moment at q = 0 is the n-th
/// Catalan number and at q = 1 the double factorial (2n-1)!!, n <= 7.
#[test]
fn acceptance_05_specializations() {
    let mut rng = StdRng::seed_from_u64(0x0505);
    let spec = ModelSpec::centered(random_cov(&mut rng, 2)).unwrap();
    let one = QRational::one();
    for sigma in all_words(2, 4) {
        let m = moment(&spec, &query(&sigma)).unwrap();
        let c = |a: usize, b: usize| spec.cov(sigma[a - 1], sigma[b - 1]).clone();
        let isserlis = &(&c(1, 2) * &c(3, 4)) + &(&(&c(2, 3) * &c(1, 4)) + &(&c(2, 4) * &c(1, 3)));
        assert_eq!(m.eval(&one), isserlis, "Isserlis sum at sigma={sigma:?}");
    }
    let scalar = ModelSpec::scalar(r(1, 1));
    let zero = QRational::zero();
    for n in 1..=7usize {
        let m = q_wick_moment(&scalar, &query(&vec![1; 2 * n])).unwrap();
        assert_eq!(
            m.eval(&zero),
            QRational::from(catalan_number(n) as i64),
            "Catalan specialization at n={n}"
        );
        assert_eq!(
            m.eval(&one),
            QRational::from(pairing_count(2 * n) as i64),
            "double factorial specialization at n={n}"
        );
        if n <= 4 {
            assert_eq!(m, moment(&scalar, &query(&vec![1; 2 * n])).unwrap());
        }
    }
    println!("ACCEPTANCE 05 specializations: PASS (q=1 Isserlis x16, q=0 Catalan and q=1 (2n-1)!! for n<=7)");
}

/// Independent brute-force oracle for criterion 6: enumerates perfect
/// matchings of `{0, .., n2-1}` through a partner array with backtracking
/// (a different scheme than the library's free-list stream) and counts
/// crossings by scanning all pairs of pairs.
fn brute_force_crossing_counts(n2: usize) -> Vec<u64> {
    fn recurse(partner: &mut Vec<Option<usize>>, counts: &mut Vec<u64>) {
        let Some(first) = partner.iter().position(Option::is_none) else {
            let mut pairs = Vec::new();
            for (a, p) in partner.iter().enumerate() {
                let b = p.unwrap();
                if a < b {
                    pairs.push((a, b));
                }
            }
            let mut crossings = 0usize;
            for &(a, b) in &pairs {
                for &(c, d) in &pairs {
                    if a < c && c < b && b < d {
                        crossings += 1;
                    }
                }
            }
            if counts.len() <= crossings {
                counts.resize(crossings + 1, 0);
            }
            counts[crossings] += 1;
            return;
        };
        for mate in first + 1..partner.len() {
            if partner[mate].is_none() {
                partner[first] = Some(mate);
                partner[mate] = Some(first);
                recurse(partner, counts);
                partner[first] = None;
                partner[mate] = None;
            }
        }
    }
    let mut counts = Vec::new();
    recurse(&mut vec![None; n2], &mut counts);
    counts
}

/// Criterion 6: the sixth moment of the standard scalar model is
/// 5 + 6q + 3q^2 + q^3, first confirmed by the independent brute-force
/// pairing/crossing counter, then by all three production routes.
#[test]
fn acceptance_06_touchard_riordan_spot_check() {
    let frozen = QPoly::from_i64_coeffs(&[5, 6, 3, 1]);
    let brute: Vec<i64> = brute_force_crossing_counts(6)
        .into_iter()
        .map(|c| c as i64)
        .collect();
    assert_eq!(QPoly::from_i64_coeffs(&brute), frozen, "brute-force oracle");
    let spec = ModelSpec::scalar(r(1, 1));
    let sigma = query(&[1; 6]);
    assert_eq!(moment(&spec, &sigma).unwrap(), frozen, "engine route");
    assert_eq!(
        q_wick_moment(&spec, &sigma).unwrap(),
        frozen,
        "pairing route"
    );
    assert_eq!(
        scalar_recursion_moment(&spec, &sigma).unwrap(),
        frozen,
        "recursion route"
    );
    println!("ACCEPTANCE 06 touchard-riordan: PASS (5 + 6q + 3q^2 + q^3 on all four routes)");
}

/// Criterion 7: the truncated Fock realization matches the symbolic moments
/// within 1e-9 relative at five q points for three random PSD covariances,
/// and satisfies adjointness and the defining commutation relation within
/// 1e-10 on random truncated states.
#[test]
fn acceptance_07_fock_oracle() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x0707);
    let q_points = [r(-9, 10), r(-1, 2), r(0, 1), r(1, 2), r(9, 10)];
    let mut agreements = 0usize;
    for d in 1..=2usize {
        for _ in 0..3 {
            let spec = ModelSpec::centered(random_psd_cov(&mut rng, d)).unwrap();
            let words: Vec<Vec<usize>> = (1..=6).flat_map(|len| all_words(d, len)).collect();
            let symbolic: Vec<QPoly> = words
                .par_iter()
                .map(|sigma| moment(&spec, &query(sigma)).unwrap())
                .collect();
            for q0 in &q_points {
                let qf = q0.to_f64();
                let model = FockModel::new(&spec, qf, 6).unwrap();
                for (sigma, sym) in words.iter().zip(&symbolic) {
                    let numeric = numeric_moment(&model, &query(sigma)).unwrap();
                    let exact = sym.eval(q0).to_f64();
                    let rel = (numeric - exact).abs() / exact.abs().max(1.0);
                    assert!(
                        rel <= 1e-9,
                        "oracle mismatch d={d} q={q0} sigma={sigma:?}: {numeric} vs {exact}"
                    );
                    agreements += 1;
                }
            }
            // Adjointness and commutation residuals on random states.
            let model = FockModel::new(&spec, 0.37, 4).unwrap();
            let mut random_state = || {
                let mut s = FockState::zero(4);
                for _ in 0..6 {
                    let level = rng.gen_range(0..=3usize);
                    let letters = (0..level)
                        .map(|_| rng.gen_range(1..=d) as u8)
                        .collect::<Vec<_>>();
                    s.add(TensorWord::new(letters), rng.gen_range(-1.0..1.0));
                }
                s
            };
            for _ in 0..4 {
                let u = random_state();
                let v = random_state();
                for i in 1..=d {
                    let lhs = q_inner(&model, &apply_creation(&model, i, &u).unwrap(), &v);
                    let rhs = q_inner(&model, &u, &apply_annihilation(&model, i, &v));
                    assert!(
                        (lhs - rhs).abs() <= 1e-10,
                        "adjointness residual {} at i={i}",
                        (lhs - rhs).abs()
                    );
                    for j in 1..=d {
                        let ca =
                            apply_annihilation(&model, i, &apply_creation(&model, j, &u).unwrap());
                        let ac =
                            apply_creation(&model, j, &apply_annihilation(&model, i, &u)).unwrap();
                        let mut words: Vec<TensorWord> = ca
                            .terms()
                            .chain(ac.terms())
                            .chain(u.terms())
                            .map(|(w, _)| w.clone())
                            .collect();
                        words.sort();
                        words.dedup();
                        for w in words {
                            let got = ca.amplitude(&w) - model.q() * ac.amplitude(&w);
                            let want = model.pair_inner(i, j) * u.amplitude(&w);
                            assert!(
                                (got - want).abs() <= 1e-10,
                                "commutation residual {} at i={i}, j={j}",
                                (got - want).abs()
                            );
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "runtime budget: {elapsed:?}"
    );
    println!("ACCEPTANCE 07 fock-oracle: PASS ({agreements} numeric agreements at 1e-9, residuals at 1e-10, {elapsed:?})");
}

/// Criterion 8: a pure annihilation/creation word has nonzero vacuum
/// expectation only when its sign sequence is Catalan; exhaustive over all
/// sign sequences of length <= 8.
#[test]
fn acceptance_08_vanishing_criterion() {
    use qmoments::diagrams::CatalanSeq;
    let spec = ModelSpec::scalar(r(1, 1));
    let cfg = EvalConfig::default();
    let mut nonzero = 0usize;
    let mut total = 0usize;
    for len in 1..=8usize {
        for bits in 0..(1u32 << len) {
            let signs: Vec<i64> = (0..len)
                .map(|k| if bits & (1 << k) != 0 { 1 } else { -1 })
                .collect();
            let word = OpWord::new(
                signs
                    .iter()
                    .map(|&s| {
                        if s < 0 {
                            OpSymbol::ann(1)
                        } else {
                            OpSymbol::cre(1)
                        }
                    })
                    .collect(),
            );
            let value = vacuum_expectation(&spec, &OpExpr::from_word(word), &cfg).unwrap();
            total += 1;
            if len % 2 == 1 {
                assert!(value.is_zero(), "odd sign word {signs:?} must vanish");
                continue;
            }
            if !value.is_zero() {
                nonzero += 1;
                let catalan = CatalanSeq::from_values(&signs)
                    .unwrap()
                    .is_catalan()
                    .unwrap();
                assert!(
                    catalan,
                    "nonzero expectation at non-Catalan sign sequence {signs:?}"
                );
            }
        }
    }
    println!("ACCEPTANCE 08 vanishing-criterion: PASS ({total} sign words, {nonzero} nonzero, all Catalan)");
}

/// Criterion 9: equal commutator data passes the moment-equality check to
/// order 6 over d = 2, and perturbing any single covariance entry fails
/// with a counterexample word of length 2.
#[test]
fn acceptance_09_moment_equality() {
    let mut rng = StdRng::seed_from_u64(0x0909);
    let cov = random_cov(&mut rng, 2);
    let mean = vec![random_rational(&mut rng), random_rational(&mut rng)];
    let spec_a = ModelSpec::new(cov.clone(), mean.clone()).unwrap();
    let spec_b = ModelSpec::new(cov.clone(), mean).unwrap();
    assert!(
        moment_equal_check(&spec_a, &spec_b, 6).unwrap().is_equal(),
        "equal data must be moment equal to order 6"
    );
    for i in 0..2 {
        for j in 0..2 {
            let mut perturbed = cov.clone();
            perturbed[i][j] = &perturbed[i][j] + &QRational::one();
            let spec_c = ModelSpec::new(perturbed, spec_a.means().to_vec()).unwrap();
            match moment_equal_check(&spec_a, &spec_c, 6).unwrap() {
                MomentEquality::Differs { sigma, .. } => {
                    assert_eq!(
                        sigma.indices(),
                        &[i + 1, j + 1],
                        "expected the covariance word itself as counterexample"
                    );
                }
                MomentEquality::Equal => {
                    panic!(
                        "perturbing cov({},{}) must break moment equality",
                        i + 1,
                        j + 1
                    )
                }
            }
        }
    }
    println!("ACCEPTANCE 09 moment-equality: PASS (order 6 equal; 4 perturbations each caught at length 2)");
}

/// Criterion 10: every 2n-moment has q-degree at most n(n-1)/2 and scales
/// by t^n when the covariance is scaled by t, for n <= 4.
#[test]
fn acceptance_10_degree_and_homogeneity() {
    let mut rng = StdRng::seed_from_u64(0x0A0A);
    let cov = random_cov(&mut rng, 2);
    let t = random_rational(&mut rng);
    let scaled: Vec<Vec<QRational>> = cov
        .iter()
        .map(|row| row.iter().map(|x| x * &t).collect())
        .collect();
    let spec = ModelSpec::centered(cov).unwrap();
    let scaled_spec = ModelSpec::centered(scaled).unwrap();
    let mut checked = 0usize;
    for n in 1..=4usize {
        let mut t_power = QRational::one();
        for _ in 0..n {
            t_power *= &t;
        }
        for sigma in all_words(2, 2 * n) {
            let q = query(&sigma);
            let m = moment(&spec, &q).unwrap();
            if let Some(deg) = m.degree() {
                assert!(
                    deg <= n * (n - 1) / 2,
                    "degree {deg} exceeds bound at sigma={sigma:?}"
                );
            }
            let scaled_m = moment(&scaled_spec, &q).unwrap();
            assert_eq!(
                scaled_m,
                m.scale(&t_power),
                "homogeneity at sigma={sigma:?}"
            );
            checked += 1;
        }
    }
    println!("ACCEPTANCE 10 degree-homogeneity: PASS ({checked} even words, t = {t})");
}
