use super::*;

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn parse_round_trips() {
    let s = Scenario::parse("tetrahedron(0.5),N=40").unwrap();
    assert_eq!(s.generator, Generator::Tetrahedron { r: 0.5 });
    assert_eq!((s.n_vars, s.n_samples), (3, 40));
    assert_eq!(Scenario::parse(&s.id).unwrap(), s);
    let b = Scenario::parse("bernoulli,n=5,family=total,indep=1").unwrap();
    assert_eq!(b.family, Family::Total);
    assert!(b.independent && b.h0());
    assert_eq!(Scenario::parse("coins(9)").unwrap().n_vars, 9);
    assert_eq!(Scenario::parse("srb2").unwrap().dim, 5);
    for bad in ["dice", "tetrahedron,n=4", "coins(5)", "normal,q=1", "srb1a(1.5)", "normal,family=m9"] {
        assert!(matches!(Scenario::parse(bad), Err(Error::Config(_))), "{bad}");
    }
    assert_eq!(StudyMethod::parse("pearson:biased:limit:raw").unwrap().label(), "pearson:biased:limit:raw");
    assert_eq!(StudyMethod::parse("eigenvalue").unwrap().label(), "eigenvalue:normalized");
    assert!(StudyMethod::parse("pearson:fast").is_err());
}

#[test]
fn generation_is_deterministic() {
    for text in ["mixed", "tetrahedron(0.5)", "srb3", "coins(6)", "mv_block(0.4)", "student_t(1)"] {
        let s = Scenario::parse(text).unwrap();
        let a = s.generate(&mut replicate_rng(7, 3)).unwrap();
        let b = s.generate(&mut replicate_rng(7, 3)).unwrap();
        let c = s.generate(&mut replicate_rng(7, 4)).unwrap();
        for i in 0..s.n_vars {
            assert_eq!(a.blocks()[i], b.blocks()[i]);
        }
        assert!((0..s.n_vars).any(|i| a.blocks()[i] != c.blocks()[i]));
        assert_eq!(a.n_samples(), 100);
        assert_eq!(a.blocks()[0].dim(), s.dim);
    }
}

#[test]
fn marginals_match_targets() {
    let draws = 10_000;
    let check = |text: &str, targets: &[(f64, f64)]| {
        let s = Scenario::parse(&format!("{text},N={draws}")).unwrap();
        let data = s.generate(&mut replicate_rng(8, 0)).unwrap();
        for (i, (mu, var)) in targets.iter().enumerate() {
            let (m, v) = mean_var(data.blocks()[i].values());
            let se = (var / draws as f64).sqrt();
            assert!((m - mu).abs() < 3.0 * se, "{text} var {i}: mean {m} vs {mu}");
            assert!((v / var - 1.0).abs() < 0.06, "{text} var {i}: variance {v} vs {var}");
        }
    };
    check("bernoulli", &[(0.5, 0.25), (0.5, 0.25)]);
    check("uniform", &[(0.5, 1.0 / 12.0), (0.5, 1.0 / 12.0)]);
    check("normal", &[(0.0, 1.0), (0.0, 1.0)]);
    check("mixed", &[(1.0, 1.0), (0.0, 1.0), (0.5, 0.25), (0.5, 1.0 / 12.0), (1.0, 1.0), (5.0, 2.5)]);
    check("tetrahedron(0.5)", &[(0.5, 0.5), (0.5, 0.5), (0.5, 0.5)]);
    check("coins(3)", &[(0.5, 0.25), (0.5, 0.25), (0.5, 0.25)]);
}

#[test]
fn discrete_generators_are_pairwise_independent() {
    // Tetrahedron: each face has probability 1/4.
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for a in [0.0, 1.0] {
            for b in [0.0, 1.0] {
                let p = TETRAHEDRON_FACES.iter().filter(|f| f[i] == a && f[j] == b).count() as f64 / 4.0;
                assert_eq!(p, 0.25);
            }
        }
    }
    let triple = TETRAHEDRON_FACES.iter().filter(|f| f.iter().all(|v| *v == 1.0)).count() as f64 / 4.0;
    assert_ne!(triple, 0.125);
    // Coins: the four outcomes of (a, b) are equally likely.
    let outcomes: Vec<[bool; 3]> = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(a, b)| [a, b, a ^ b])
        .collect();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for a in [false, true] {
            for b in [false, true] {
                let n = outcomes.iter().filter(|o| o[i] == a && o[j] == b).count();
                assert_eq!(n, 1);
            }
        }
    }
    assert!(outcomes.iter().all(|o| o[2] == (o[0] ^ o[1])));
}

#[test]
fn srb2_is_a_product_of_normals() {
    let s = Scenario::parse("srb2,N=2000").unwrap();
    let data = s.generate(&mut replicate_rng(9, 0)).unwrap();
    let ratio: Vec<f64> = data.blocks()[1]
        .values()
        .iter()
        .zip(data.blocks()[0].values())
        .map(|(x2, y)| x2 / y)
        .collect();
    let (m, v) = mean_var(&ratio);
    let se = (1.0 / ratio.len() as f64).sqrt();
    assert!(m.abs() < 3.0 * se);
    assert!((v - 1.0).abs() < 0.1);
    let s3 = Scenario::parse("srb3,N=50").unwrap();
    let d3 = s3.generate(&mut replicate_rng(9, 1)).unwrap();
    for (x2, y) in d3.blocks()[1].values().iter().zip(d3.blocks()[0].values()) {
        assert!((x2 - (y * y).ln()).abs() < 1e-12);
    }
}

#[test]
fn metric_rules() {
    let b = vec![0.5, 0.1, 0.0005, 0.03];
    assert_eq!(relative_mse(&b, &b), 0.0);
    // skip rule, zero rule, cap
    assert_eq!(relative_mse(&[0.9], &[0.3]), 0.0);
    assert_eq!(relative_mse(&[0.0002], &[0.0008]), 0.0);
    assert_eq!(relative_mse(&[0.9], &[0.1]), 1.0);
    assert!((relative_mse(&[0.12], &[0.1]) - 0.04).abs() < 1e-12);
    // margin min(0.05, b/2)
    assert_eq!(violation_rate(&[0.049, 0.051], &[0.1, 0.1]), 0.5);
    assert_eq!(violation_rate(&[0.004, 0.006], &[0.01, 0.01]), 0.5);
    assert_eq!(rejection_rate(&[0.01, 0.2, 0.04, 0.05], 0.05), 0.5);
}

#[test]
fn study_errors_and_determinism() {
    let s = vec![Scenario::parse("bernoulli,N=30").unwrap()];
    let m = vec![StudyMethod::new(Method::Classical), StudyMethod::parse("pearson:raw").unwrap()];
    let cfg = StudyConfig { reps: 20, benchmark_samples: 100, seed: 4, level: 0.05 };
    assert!(matches!(run_study(&s, &[], &cfg), Err(Error::Config(_))));
    assert!(run_study(&s, &m, &StudyConfig { reps: 0, ..cfg }).is_err());
    let a = run_study(&s, &m, &cfg).unwrap();
    assert_eq!(a, run_study(&s, &m, &cfg).unwrap());
    let rows = a.rows();
    assert_eq!(rows.len(), 2 * 4 + 2);
    assert!(rows.iter().all(|r| r.metric != "size" || (0.0..=1.0).contains(&r.value)));
}

#[test]
fn montecarlo_against_its_own_benchmark() {
    // With the benchmark's own statistics as "p-values", the error is zero.
    let s = Scenario::parse("normal,N=20").unwrap();
    let spec = TestSpec { kind: s.kind(true), ..TestSpec::default() };
    let bench = montecarlo_benchmark(|rng| s.generate(rng), &spec, 300).unwrap();
    let p: Vec<f64> = bench.statistics().iter().map(|x| bench.pvalue(*x)).collect();
    assert_eq!(relative_mse(&p, &p), 0.0);
    assert_eq!(violation_rate(&p, &p), 0.0);
}

#[test]
fn classical_is_not_liberal_on_bernoulli() {
    let s = vec![Scenario::parse("bernoulli,N=100").unwrap()];
    let m = vec![StudyMethod::parse("classical:raw").unwrap()];
    let cfg = StudyConfig { reps: 500, benchmark_samples: 2000, seed: 1, level: 0.05 };
    let r = run_study(&s, &m, &cfg).unwrap();
    assert!(r.cells[0].violation_rate < LIBERAL_SHARE, "{}", r.cells[0].violation_rate);
    assert!(r.liberal_cells().is_empty());
}

#[test]
fn pure_tetrahedron_is_pairwise_but_not_jointly_independent() {
    let reps = 200;
    let pair = Scenario::parse("tetrahedron(0),N=100,family=m2").unwrap();
    let joint = Scenario::parse("tetrahedron(0),N=100").unwrap();
    assert!(pair.h0() && !joint.h0());
    let pvals = |s: &Scenario| -> Vec<f64> {
        (0..reps)
            .into_par_iter()
            .map(|i| {
                let data = s.generate(&mut replicate_rng(10, i as u64)).unwrap();
                run_test(&data, &TestSpec { kind: s.kind(true), ..TestSpec::default() }).unwrap().p
            })
            .collect()
    };
    let p2 = pvals(&pair);
    let (m2, _) = mean_var(&p2);
    assert!((0.35..0.7).contains(&m2), "m2 mean p {m2}");
    assert!(rejection_rate(&p2, 0.05) <= 0.08);
    let p3 = pvals(&joint);
    assert!(rejection_rate(&p3, 0.01) > 0.95);
}

#[test]
fn tetrahedron_power_ordering_over_sample_sizes() {
    let methods: Vec<StudyMethod> =
        [Method::Pearson, Method::Variance, Method::Classical].into_iter().map(StudyMethod::new).collect();
    for n in [20, 60, 100] {
        let s = vec![Scenario::parse(&format!("tetrahedron(0.5),N={n}")).unwrap()];
        let cfg = StudyConfig { reps: 300, benchmark_samples: 500, seed: 2, level: 0.05 };
        let r = run_study(&s, &methods, &cfg).unwrap();
        let power: Vec<f64> = r.cells.iter().map(|c| c.rejection_rate).collect();
        assert!(power[0] >= power[1] && power[1] >= power[2], "N={n}: {power:?}");
    }
}
