use num_bigint::BigInt;

use padiq::arith::{valuation, ValN};
use padiq::ball::{
    ball_compare, minimal_outer_ball, residual_balls, residual_count, split_cheese, union_cheeses, Ball, BallRelation,
    SwissCheese,
};
use padiq::formula::Literal;
use padiq::normalize::{
    merge_congruences, one_sided_valuations, reduce_bounds, split_prime_part, unify_coefficient, Bound, CongruenceLit,
    PrimeBounds, ValExpr,
};
use padiq::qe::{decide_sentence, eliminate_quantifiers, recognize_subgroup, solve_grounded_1v, QeConfig, Subgroup};
use padiq::zmodel::{brute_force_sat_1v, eval_qf, eval_with_quantifiers, period_bound, SatResult};
use padiq::{canonicalize, parse, render, to_nnf, Assignment, Atom, Formula, PrimeSet, Term};

fn primes(ps: &[u64]) -> PrimeSet {
    PrimeSet::new(ps.to_vec()).unwrap()
}

fn f(s: &str) -> Formula {
    parse(s, &primes(&[2, 3])).unwrap()
}

fn env(pairs: &[(&str, i64)]) -> Assignment {
    pairs.iter().map(|(v, x)| (v.to_string(), BigInt::from(*x))).collect()
}

/// Agreement of two quantifier-free formulas on every assignment of `vars`
/// drawn from `[-r, r]`.
fn assert_equiv(a: &Formula, b: &Formula, vars: &[&str], r: i64) {
    let mut values = vec![-r; vars.len()];
    loop {
        let e: Assignment = vars
            .iter()
            .zip(&values)
            .map(|(v, x)| (v.to_string(), BigInt::from(*x)))
            .collect();
        assert_eq!(
            eval_qf(a, &e).unwrap(),
            eval_qf(b, &e).unwrap(),
            "{} vs {} at {values:?}",
            render(a),
            render(b)
        );
        let mut i = 0;
        loop {
            if i == values.len() {
                return;
            }
            values[i] += 1;
            if values[i] <= r {
                break;
            }
            values[i] = -r;
            i += 1;
        }
    }
}

fn ball(p: u64, c: i64, r: u64) -> Ball {
    Ball::finite(p, c, r)
}

#[test]
fn parse_and_render() {
    assert_eq!(f("D3(x)"), Formula::Atom(Atom::div(3, Term::var("x"))));
    assert_eq!(
        f("v2(x) <= v2(y)"),
        Formula::Atom(Atom::val_le(2, 0, Term::var("x"), Term::var("y")))
    );
    let lower = f("E x. v2(x - y) >= 2");
    match &lower {
        Formula::Exists(_, body) => assert_eq!(
            **body,
            Formula::Atom(Atom::val_le(2, 2, Term::one(), &Term::var("x") - &Term::var("y")))
        ),
        other => panic!("{other:?}"),
    }
    assert_eq!(render(&f("D3(x)")), "D3(x)");
    assert_eq!(render(&f("v2(x) <= v2(y)")), "v2(x) <= v2(y)");
    let chain = f("(D3(x) || D5(y)) && true && D7(x + y)");
    assert_eq!(render(&chain), "D7(x + y) && (D3(x) || D5(y))");
    assert_eq!(f(&render(&chain)), chain);
}

#[test]
fn parse_errors() {
    let ps = primes(&[2, 3]);
    assert!(parse("D0(x)", &ps).is_err());
    assert!(parse("v5(x) >= 1", &ps).is_err());
    let err = parse("D3(x) &&", &ps).unwrap_err().to_string();
    assert!(err.contains("1:9"), "{err}");
}

#[test]
fn substitution() {
    let x3 = Term::monomial("x", 3);
    assert_eq!(f("v2(x) >= 1").substitute("x", &x3).unwrap(), f("v2(3x) >= 1"));
    let y4 = &Term::var("y") + &Term::constant(4);
    let moved = canonicalize(&f("D3(x - 1)").substitute("x", &y4).unwrap());
    assert_equiv(&moved, &f("D3(y + 3)"), &["y"], 12);
    assert_eq!(
        canonicalize(&f("x = 0").substitute("x", &Term::constant(6)).unwrap()),
        Formula::False
    );
}

#[test]
fn negation_normal_form() {
    let a = f("D3(x)");
    let b = f("v2(y) >= 1");
    let dm = to_nnf(&Formula::not(Formula::And(vec![a.clone(), b.clone()])));
    assert_equiv(&dm, &f("!D3(x) || !(v2(y) >= 1)"), &["x", "y"], 8);
    assert!(matches!(dm, Formula::Or(_)));

    let neg = to_nnf(&f("!(v2(x) <= v2(y))"));
    assert_equiv(&neg, &f("!(v2(x) <= v2(y))"), &["x", "y"], 20);
    assert_equiv(&neg, &f("v2(y) + 1 <= v2(x) && y != 0"), &["x", "y"], 20);

    let dual = to_nnf(&f("!(E x. D2(x + y))"));
    assert!(matches!(dual, Formula::Forall(..)), "{}", render(&dual));
}

#[test]
fn oracle_examples() {
    assert_eq!(valuation(2, &BigInt::from(12)), ValN::Fin(2));
    assert_eq!(valuation(2, &BigInt::from(0)), ValN::Infinity);
    assert_eq!(valuation(3, &BigInt::from(-9)), ValN::Fin(2));

    assert!(eval_qf(&f("v2(x - 1) >= 2"), &env(&[("x", 5)])).unwrap());
    assert!(!eval_qf(&f("v2(x - 1) >= 2"), &env(&[("x", 3)])).unwrap());
    assert!(!eval_qf(&f("D8(x) && !(v2(x) >= 3)"), &env(&[("x", 8)])).unwrap());
    assert!(eval_qf(&f("D3(x)"), &Assignment::new()).is_err());

    for (s, m, d) in [
        ("D3(x) && v2(x - 1) >= 2", 12, 0),
        ("v2(x) >= 3", 8, 0),
        ("D3(x) && x != 5", 3, 1),
    ] {
        let g = f(s);
        assert_eq!(period_bound(&g, "x").unwrap(), (BigInt::from(m), d), "{s}");
        if d == 0 {
            for x in 0..2 * m {
                let at = |v: i64| eval_qf(&g, &env(&[("x", v)])).unwrap();
                assert_eq!(at(x), at(x + m), "{s} at {x}");
            }
        }
    }

    let sat = |s: &str| brute_force_sat_1v(&f(s), "x").unwrap();
    assert_eq!(sat("v2(x - 1) >= 2 && x != 1"), SatResult::Sat(BigInt::from(5)));
    assert_eq!(sat("v2(x) >= 1 && !D2(x)"), SatResult::Unsat);
    assert_eq!(sat("x = 4 && D8(x)"), SatResult::Unsat);
}

#[test]
fn ball_examples() {
    assert_eq!(
        ball_compare(&ball(2, 4, 3), &ball(2, 0, 2)).unwrap(),
        BallRelation::FirstInsideSecond
    );
    assert_eq!(
        ball_compare(&ball(2, 0, 1), &ball(2, 1, 1)).unwrap(),
        BallRelation::Disjoint
    );
    assert_eq!(
        ball_compare(&ball(2, 2, 1), &ball(2, 0, 1)).unwrap(),
        BallRelation::Equal
    );
    assert_eq!(
        ball_compare(&ball(2, 0, 1), &ball(2, 4, 3)).unwrap(),
        BallRelation::SecondInsideFirst
    );

    let cheese = SwissCheese::new(ball(2, 0, 1), vec![ball(2, 2, 2)]).unwrap();
    assert!(cheese.member(&BigInt::from(4)));
    assert!(!cheese.member(&BigInt::from(6)));
    assert!(!cheese.member(&BigInt::from(3)));

    let whole = SwissCheese::ball(ball(2, 0, 1));
    assert_eq!(
        split_cheese(&whole, 1).unwrap(),
        vec![SwissCheese::ball(ball(2, 0, 2)), SwissCheese::ball(ball(2, 2, 2))]
    );
    assert_eq!(
        split_cheese(&cheese, 1).unwrap(),
        vec![SwissCheese::ball(ball(2, 0, 2))]
    );
    assert_eq!(split_cheese(&cheese, 0).unwrap(), vec![cheese.clone()]);

    let deep = SwissCheese::new(ball(2, 0, 1), vec![ball(2, 2, 3)]).unwrap();
    assert_eq!(
        union_cheeses(&deep, &SwissCheese::ball(ball(2, 0, 2))).unwrap(),
        Some(deep.clone())
    );
    assert_eq!(
        union_cheeses(&SwissCheese::ball(ball(2, 0, 2)), &SwissCheese::ball(ball(2, 2, 2))).unwrap(),
        None
    );
    assert_eq!(union_cheeses(&cheese, &cheese).unwrap(), Some(cheese.clone()));

    assert_eq!(minimal_outer_ball(&cheese).unwrap(), ball(2, 0, 2));
    let shallow = SwissCheese::new(ball(2, 0, 1), vec![ball(2, 4, 3)]).unwrap();
    assert_eq!(minimal_outer_ball(&shallow).unwrap(), ball(2, 0, 1));
    assert_eq!(
        minimal_outer_ball(&SwissCheese::ball(ball(3, 5, 2))).unwrap(),
        ball(3, 5, 2)
    );

    let unit = ball(2, 0, 0);
    let holes = [ball(2, 1, 1), ball(2, 2, 2)];
    assert_eq!(residual_balls(&unit, &holes).unwrap(), vec![ball(2, 0, 2)]);
    assert_eq!(residual_count(2, &[1, 2]), BigInt::from(1));
    let tiling = [ball(2, 1, 1), ball(2, 0, 2), ball(2, 2, 2)];
    assert_eq!(residual_balls(&unit, &tiling).unwrap(), vec![]);
    assert_eq!(residual_count(2, &[1, 2, 2]), BigInt::from(0));
    assert_eq!(
        residual_balls(&ball(3, 0, 0), &[ball(3, 1, 1)]).unwrap(),
        vec![ball(3, 0, 1), ball(3, 2, 1)]
    );
    assert_eq!(residual_count(3, &[1]), BigInt::from(2));
}

fn cong(m: i64, positive: bool, shift: i64) -> CongruenceLit {
    CongruenceLit {
        modulus: BigInt::from(m),
        positive,
        coeff: BigInt::from(1),
        shift: Term::constant(shift),
    }
}

fn merged(lits: &[CongruenceLit]) -> Formula {
    let cases = merge_congruences(lits, 360).unwrap();
    canonicalize(&Formula::Or(
        cases
            .into_iter()
            .map(|g| Formula::And(vec![g.guard, g.body.to_formula("x")]))
            .chain([Formula::False])
            .collect(),
    ))
}

#[test]
fn congruence_passes() {
    assert_equiv(
        &merged(&[cong(2, true, 0), cong(3, true, -1)]),
        &f("D6(x - 4)"),
        &["x"],
        30,
    );
    assert_equiv(&merged(&[cong(2, false, 0)]), &f("D2(x - 1)"), &["x"], 10);
    assert_eq!(merged(&[cong(2, true, 0), cong(2, true, -1)]), Formula::False);

    let split = |m: i64, r: i64| split_prime_part(&BigInt::from(m), &BigInt::from(r), "x", 2);
    assert_equiv(&split(12, 5), &f("D3(x - 2) && v2(x - 1) >= 2"), &["x"], 40);
    assert_equiv(&split(8, 0), &f("v2(x) >= 3"), &["x"], 40);
    assert_eq!(split(3, 0), f("D3(x)"));
}

#[test]
fn valuation_passes() {
    let x = Term::var("x");
    let a = Atom::val_le(2, 1, x.clone(), &x - &Term::constant(4));
    let one = one_sided_valuations(&a, "x");
    assert_equiv(&one, &Formula::Atom(a), &["x"], 40);
    assert_equiv(&one, &f("v2(x - 4) >= 3"), &["x"], 40);

    let xa = &x - &Term::var("a");
    let self_bound = Atom::val_le(2, 0, xa.clone(), xa);
    assert_eq!(canonicalize(&one_sided_valuations(&self_bound, "x")), Formula::True);
    assert_equiv(&f("v2(x - a) < v2(x - a) + 1"), &f("x != a"), &["x", "a"], 12);

    let lits = |s: &str| -> Vec<Literal> {
        match f(s) {
            Formula::And(parts) => parts.iter().map(|p| Literal::from_formula(p).unwrap()).collect(),
            g => vec![Literal::from_formula(&g).unwrap()],
        }
    };
    let ps = primes(&[2, 3]);
    let scaled_exists = |ls: &[Literal], s: &str, n: i64| {
        let (scale, ylits) = unify_coefficient(ls, "x").unwrap();
        assert_eq!(scale, BigInt::from(n), "{s}");
        let conj = Formula::and(ylits.iter().map(|l| l.to_formula("y")).collect());
        (
            parse(&format!("E x. {s}"), &ps).unwrap(),
            Formula::exists("y", canonicalize(&conj)),
        )
    };
    let s = "v2(2x - a) >= 3 && v2(3x - b) >= 1";
    let (orig, scaled) = scaled_exists(&lits(s), s, 6);
    for a in -8..=8 {
        for b in -8..=8 {
            let e = env(&[("a", a), ("b", b)]);
            assert_eq!(
                eval_with_quantifiers(&orig, &e, 160).unwrap(),
                eval_with_quantifiers(&scaled, &e, 160).unwrap(),
                "a={a} b={b}"
            );
        }
    }
    let raw = [Literal::pos(Atom::val_le(3, 2, Term::one(), Term::monomial("x", 3)))];
    for (ls, s, n) in [(lits("D5(x - 2)"), "D5(x - 2)", 1), (raw.to_vec(), "v3(3x) >= 2", 3)] {
        let (orig, scaled) = scaled_exists(&ls, s, n);
        assert_eq!(
            eval_with_quantifiers(&orig, &Assignment::new(), 160).unwrap(),
            eval_with_quantifiers(&scaled, &Assignment::new(), 160).unwrap(),
            "{s}"
        );
    }
}

fn lower(c: i64, k: i64) -> Bound {
    Bound::new(Term::constant(c), ValExpr::constant(k))
}

#[test]
fn bound_reduction() {
    let reduced = |pb: PrimeBounds| reduce_bounds(2, &pb);
    let cases = reduced(PrimeBounds {
        lowers: vec![lower(0, 2), lower(4, 1)],
        uppers: vec![],
    });
    let live: Vec<_> = cases.iter().filter(|g| g.guard == Formula::True).collect();
    assert_eq!(live.len(), 1);
    let body = live[0].body.as_ref().unwrap();
    assert_eq!((body.lower.clone(), body.uppers.len()), (lower(0, 2), 0));

    let cases = reduced(PrimeBounds {
        lowers: vec![lower(0, 2)],
        uppers: vec![lower(1, 1)],
    });
    let bodies: Vec<_> = cases.iter().filter_map(|g| g.body.as_ref()).collect();
    assert_eq!(bodies.len(), 1);
    assert!(bodies[0].uppers.is_empty());

    let cases = reduced(PrimeBounds {
        lowers: vec![lower(0, 2)],
        uppers: vec![lower(4, 2)],
    });
    assert!(cases.iter().all(|g| g.body.is_none()));
}

#[test]
fn elimination_examples() {
    let ps = primes(&[2]);
    let cfg = QeConfig::new(ps.clone());
    let g = eliminate_quantifiers(&parse("E x. v2(x - a) >= 1 && v2(x) >= 1", &ps).unwrap(), &cfg).unwrap();
    assert_eq!(render(&g), "D2(a)");
    for a in -20..=20 {
        let inst = parse(&format!("v2(x - {a}) >= 1 && v2(x) >= 1").replace("- -", "+ "), &ps).unwrap();
        let want = brute_force_sat_1v(&inst, "x").unwrap().is_sat();
        assert_eq!(eval_qf(&g, &env(&[("a", a)])).unwrap(), want, "a = {a}");
    }

    let cfg = QeConfig::new(primes(&[2, 3]));
    let qe = |s: &str| eliminate_quantifiers(&f(s), &cfg).unwrap();
    assert_eq!(
        qe("E x. v2(x) >= 1 && !(v2(x) >= 2) && !(v2(x - 2) >= 2)"),
        Formula::False
    );
    assert_eq!(qe("E x. D3(x - 1) && v2(x) >= 2"), Formula::True);
    assert_eq!(qe("A x. D2(x) -> D2(x + 2)"), Formula::True);
    assert_eq!(
        qe("D3(y + 3) && v2(y) <= v2(z)"),
        canonicalize(&f("D3(y + 3) && v2(y) <= v2(z)"))
    );
    let dense = qe("E x. v2(x - y) >= 2 && D3(x)");
    for y in -30..=30 {
        assert!(eval_qf(&dense, &env(&[("y", y)])).unwrap(), "y = {y}");
    }

    for (s, want) in [
        ("E x. v2(x) = 3 && D3(x)", true),
        ("A x. A y. v2(x) <= v2(y) -> v2(x) <= v2(x + y)", true),
        ("E x. D2(x) && !D2(x)", false),
    ] {
        assert_eq!(decide_sentence(&f(s), &cfg).unwrap(), want, "{s}");
    }
}

#[test]
fn solving_examples() {
    let cfg = QeConfig::new(primes(&[2, 3]));
    let solve = |s: &str| solve_grounded_1v(&f(s), &cfg).unwrap();
    let nine = solve("v2(x - 1) >= 2 && D3(x)");
    assert_eq!(nine.result, SatResult::Sat(BigInt::from(9)));
    assert!(nine.certificate.is_some());
    assert_eq!(
        solve("v2(x) >= 1 && !(v2(x) >= 2) && !(v2(x - 2) >= 2)").result,
        SatResult::Unsat
    );
    assert_eq!(solve("x != 0 && v2(x) >= 5").result, SatResult::Sat(BigInt::from(32)));
    for s in [
        "D7(x - 3) && v3(x + 1) = 2",
        "v2(x - 5) >= 4 && x != 5 && x != 21",
        "D5(x) && !(v2(x) <= 1)",
    ] {
        let SatResult::Sat(w) = solve(s).result else {
            panic!("{s}")
        };
        assert!(brute_force_sat_1v(&f(s), "x").unwrap().is_sat(), "{s}");
        assert!(
            eval_qf(&f(s), &[("x".to_string(), w.clone())].into_iter().collect()).unwrap(),
            "{s} at {w}"
        );
    }
}

#[test]
fn subgroup_examples() {
    let ps = primes(&[2]);
    let cfg = QeConfig::new(ps.clone());
    match recognize_subgroup(&parse("D6(x)", &ps).unwrap(), &cfg).unwrap() {
        Some(Subgroup::Multiples { n_prime, gammas }) => {
            assert_eq!(n_prime, BigInt::from(3));
            assert_eq!(gammas.get(&2), Some(&1));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(
        recognize_subgroup(&parse("D2(x - 1)", &ps).unwrap(), &cfg).unwrap(),
        None
    );
    assert_eq!(
        recognize_subgroup(&parse("x = 0", &ps).unwrap(), &cfg).unwrap(),
        Some(Subgroup::Zero)
    );
}
