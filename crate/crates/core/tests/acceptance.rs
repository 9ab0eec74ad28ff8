use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use padiq::arith::{valuation, ValN};
use padiq::ball::{minimal_outer_ball, offsets, residual_balls, residual_count, Ball, SwissCheese};
use padiq::fuzz::{check, round_trip, CheckConfig, CheckReport, Status};
use padiq::qe::{decide_sentence, recognize_subgroup, QeConfig, Subgroup};
use padiq::{parse, PrimeSet};

// Independent integer oracles.

fn naive_val(p: i64, x: i64) -> Option<u64> {
    if x == 0 {
        return None;
    }
    let (mut x, mut v) = (x, 0);
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

fn ipow(p: i64, e: u64) -> i64 {
    p.pow(e as u32)
}

fn in_ball(p: i64, center: i64, radius: u64, y: i64) -> bool {
    (y - center).rem_euclid(ipow(p, radius)) == 0
}

fn val(p: u64, x: i64) -> ValN {
    valuation(p, &BigInt::from(x))
}

fn center(b: &Ball) -> i64 {
    b.center().to_i64().unwrap()
}

fn radius(b: &Ball) -> u64 {
    b.radius().finite().unwrap()
}

#[test]
fn axiom_suite() {
    const R: i64 = 1000;
    for p in [2u64, 3, 5] {
        let table: Vec<ValN> = (-2 * R..=2 * R).map(|x| val(p, x)).collect();
        let v = |x: i64| table[(x + 2 * R) as usize];
        for x in -2 * R..=2 * R {
            match (v(x), naive_val(p as i64, x)) {
                (ValN::Infinity, None) => {}
                (ValN::Fin(a), Some(b)) => assert_eq!(a, b, "v_{p}({x})"),
                (got, want) => panic!("v_{p}({x}) = {got}, expected {want:?}"),
            }
            assert_eq!(v(x) == ValN::Infinity, x == 0);
        }
        for a in -R..=R {
            for b in -R..=R {
                let (va, vb, vs) = (v(a), v(b), v(a + b));
                assert!(vs >= va.min(vb), "ultrametric fails at p={p}, a={a}, b={b}");
                if va != vb {
                    assert_eq!(vs, va.min(vb), "strict ultrametric fails at p={p}, a={a}, b={b}");
                }
            }
        }
        for n in (-50i64..=50).filter(|&n| n != 0) {
            let vn = v(n).finite().unwrap();
            for x in -R..=R {
                let want = match v(x) {
                    ValN::Fin(k) => ValN::Fin(k + vn),
                    ValN::Infinity => ValN::Infinity,
                };
                assert_eq!(val(p, n * x), want, "v_{p}({n} * {x})");
            }
        }
        assert_eq!(val(p, p as i64), ValN::Fin(1));

        let pi = p as i64;
        for gamma in 0..=4u64 {
            for k in 0..=3u64 {
                let modulus = ipow(pi, gamma + k);
                for c in 0..ipow(pi, gamma).min(8) {
                    let ball = Ball::finite(p, c, gamma);
                    let parts = ball.subdivide(k).unwrap();
                    assert_eq!(parts.len() as i64, ipow(pi, k));
                    for y in 0..modulus {
                        let holders = parts.iter().filter(|b| in_ball(pi, center(b), radius(b), y)).count();
                        assert!(parts.iter().all(|b| radius(b) == gamma + k));
                        let inside = in_ball(pi, c, gamma, y);
                        assert_eq!(holders, usize::from(inside), "p={p} B({c},{gamma}) k={k} y={y}");
                    }
                }
            }
        }
    }
}

/// Random antichain of at most `max_holes` holes inside `outer`, each at
/// depth offset at most `max_offset`.
fn random_holes(rng: &mut ChaCha8Rng, outer: &Ball, max_holes: usize, max_offset: u64) -> Vec<Ball> {
    let p = outer.prime() as i64;
    let (c, gamma) = (center(outer), radius(outer));
    let want = rng.random_range(0..=max_holes);
    let mut holes: Vec<Ball> = Vec::new();
    for _ in 0..want * 4 {
        if holes.len() == want {
            break;
        }
        let k = rng.random_range(0..=max_offset);
        let hc = c + ipow(p, gamma) * rng.random_range(0..ipow(p, k));
        let h = Ball::finite(outer.prime(), hc, gamma + k);
        if holes.iter().all(|o| !o.meets(&h)) {
            holes.push(h);
        }
    }
    holes
}

fn brute_residual(outer: &Ball, holes: &[Ball], depth: u64) -> Vec<i64> {
    let p = outer.prime() as i64;
    (0..ipow(p, depth))
        .filter(|&y| in_ball(p, center(outer), radius(outer), y))
        .filter(|&y| holes.iter().all(|h| !in_ball(p, center(h), radius(h), y)))
        .collect()
}

#[test]
fn residual_count_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut instances = 0;
    while instances < 2500 {
        let p = if rng.random_bool(0.5) { 2u64 } else { 3 };
        let gamma = rng.random_range(0..=3u64);
        let outer = Ball::finite(p, rng.random_range(0..ipow(p as i64, gamma)), gamma);
        let holes = random_holes(&mut rng, &outer, 4, 4);
        let offs = offsets(&outer, &holes).unwrap();
        let kn = offs.iter().copied().max().unwrap_or(0);
        let brute = brute_residual(&outer, &holes, gamma + kn);
        let balls = residual_balls(&outer, &holes).unwrap();
        assert_eq!(balls.len(), brute.len(), "{outer} minus {holes:?}");
        assert_eq!(residual_count(p, &offs), BigInt::from(brute.len()));
        let mut centers: Vec<i64> = balls
            .iter()
            .map(|b| {
                assert_eq!(radius(b), gamma + kn);
                center(b).rem_euclid(ipow(p as i64, gamma + kn))
            })
            .collect();
        centers.sort();
        assert_eq!(centers, brute);
        instances += 1;
    }
}

/// Every tiling of the unit ball by at most `budget` disjoint balls, as the
/// list of tiles. A tiling is either the ball itself or a tiling of each of
/// its `p` children.
fn tilings(p: i64, c: i64, depth: u64, budget: usize) -> Vec<Vec<(i64, u64)>> {
    let mut out = vec![vec![(c, depth)]];
    if budget < p as usize {
        return out;
    }
    let mut partial: Vec<Vec<(i64, u64)>> = vec![Vec::new()];
    for j in 0..p {
        let mut next = Vec::new();
        for done in &partial {
            let left = budget - done.len() - (p - 1 - j) as usize;
            for sub in tilings(p, c + j * ipow(p, depth), depth + 1, left) {
                let mut t = done.clone();
                t.extend(sub);
                next.push(t);
            }
        }
        partial = next;
    }
    out.extend(partial);
    out
}

fn all_balls(p: i64, max_depth: u64) -> Vec<(i64, u64)> {
    (0..=max_depth)
        .flat_map(|d| (0..ipow(p, d)).map(move |c| (c, d)))
        .collect()
}

fn ball_of(p: i64, (c, d): (i64, u64)) -> Ball {
    Ball::finite(p as u64, c, d)
}

/// Exhaustive walk over antichains of at most `n` balls drawn from `pool`.
fn antichains(
    p: i64,
    pool: &[(i64, u64)],
    n: usize,
    start: usize,
    cur: &mut Vec<Ball>,
    visit: &mut impl FnMut(&[Ball]),
) {
    visit(cur);
    if cur.len() == n {
        return;
    }
    for i in start..pool.len() {
        let b = ball_of(p, pool[i]);
        if cur.iter().all(|h| !h.meets(&b)) {
            cur.push(b);
            antichains(p, pool, n, i + 1, cur, visit);
            cur.pop();
        }
    }
}

#[test]
fn tiling_depth() {
    for p in [2i64, 3] {
        let unit = Ball::finite(p as u64, 0, 0);
        for n in 1..=6usize {
            let mut exact = 0;
            for t in tilings(p, 0, 0, n) {
                let holes: Vec<Ball> = t.iter().map(|&b| ball_of(p, b)).collect();
                assert!(residual_balls(&unit, &holes).unwrap().is_empty());
                let deepest = t.iter().map(|&(_, d)| d).max().unwrap();
                assert!(deepest as usize <= t.len() - 1, "tiling {t:?} too deep");
                exact += usize::from(t.len() == n);
            }
            // Tilings exist only for n = 1 + j(p - 1).
            assert_eq!(exact > 0, (n - 1) % (p as usize - 1) == 0, "p={p} n={n}");
        }
    }
    // Exhaustive over antichains: emptiness coincides with a tiling and
    // every instance with an offset of at least n leaves a residue.
    for (p, n) in [(2i64, 4usize), (3, 3)] {
        let unit = Ball::finite(p as u64, 0, 0);
        let pool = all_balls(p, n as u64 + 1);
        let mut empties = 0;
        let mut seen = 0;
        antichains(p, &pool, n, 0, &mut Vec::new(), &mut |holes| {
            seen += 1;
            let offs = offsets(&unit, holes).unwrap();
            let empty = residual_balls(&unit, holes).unwrap().is_empty();
            let brute = brute_residual(&unit, holes, n as u64 + 1).is_empty();
            assert_eq!(empty, brute, "{holes:?}");
            if empty {
                empties += 1;
                assert!(offs.iter().all(|&k| k as usize <= holes.len() - 1), "{holes:?}");
            }
            if offs.iter().any(|&k| k as usize >= holes.len()) {
                assert!(!empty, "{holes:?}");
            }
        });
        let tiles = tilings(p, 0, 0, n).len();
        assert_eq!(empties, tiles, "p={p} n={n}: {seen} antichains");
    }
}

#[test]
fn minimal_outer_ball_is_least() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut instances = 0;
    while instances < 500 {
        let p = if rng.random_bool(0.5) { 2u64 } else { 3 };
        let pi = p as i64;
        let gamma = rng.random_range(0..=3u64);
        let outer = Ball::finite(p, rng.random_range(0..ipow(pi, gamma)), gamma);
        let holes = random_holes(&mut rng, &outer, 4, 5 - gamma);
        let members = brute_residual(&outer, &holes, 6);
        if members.is_empty() {
            continue;
        }
        let cheese = SwissCheese::new(outer.clone(), holes.clone()).unwrap();
        let m = minimal_outer_ball(&cheese).unwrap();
        let (mc, mr) = (center(&m), radius(&m));
        assert!(outer.contains_ball(&m));
        assert!(
            members.iter().all(|&y| in_ball(pi, mc, mr, y)),
            "{m} misses a member of {outer} - {holes:?}"
        );
        for j in 0..pi {
            let cc = mc + j * ipow(pi, mr);
            assert!(
                members.iter().any(|&y| !in_ball(pi, cc, mr + 1, y)),
                "child B({cc}, {}) of {m} holds all of {outer} - {holes:?}",
                mr + 1
            );
        }
        instances += 1;
    }
}

fn default_primes() -> PrimeSet {
    PrimeSet::new(vec![2, 3]).unwrap()
}

fn fuzz_report() -> &'static CheckReport {
    static REPORT: OnceLock<CheckReport> = OnceLock::new();
    REPORT.get_or_init(|| check(&CheckConfig::new(default_primes(), 500, 20240501)).unwrap())
}

#[test]
fn qe_differential() {
    let report = fuzz_report();
    assert_eq!(report.trials.len(), 500);
    let failures: Vec<String> = report.failures().map(|t| t.to_string()).collect();
    assert!(failures.is_empty(), "{}\n{}", report.summary(), failures.join("\n"));
    assert_eq!(report.agreements(), 500);
}

#[test]
fn round_trip_idempotence() {
    let cfg = QeConfig::new(default_primes());
    let mut checked = 0;
    for trial in &fuzz_report().trials {
        let Some(text) = &trial.output else { continue };
        let output = parse(text, &cfg.primes).unwrap();
        assert_eq!(
            round_trip(&output, &cfg).unwrap(),
            None,
            "trial {}: {text}",
            trial.index
        );
        checked += 1;
    }
    assert_eq!(checked, 500);
    assert!(fuzz_report()
        .trials
        .iter()
        .all(|t| !matches!(&t.status, Status::Mismatch(why) if why.contains("differs"))));
}

#[test]
fn sentence_golden_list() {
    let mut golden: Vec<(String, bool)> = Vec::new();
    for p in [2, 3] {
        for c in 0..=6 {
            golden.push((format!("E x. v{p}(x) = {c}"), true));
        }
    }
    let fixed = [
        ("E x. v2(x) = 3 && D3(x)", true),
        ("A x. A y. v2(x) <= v2(y) -> v2(x) <= v2(x + y)", true),
        ("E x. D2(x) && !D2(x)", false),
        ("E x. v2(x) >= 1 && !(v2(x) >= 2) && !(v2(x - 2) >= 2)", false),
        ("A x. D2(x) -> D2(x + 2)", true),
        ("A x. E y. x = 2y || x = 2y + 1", true),
        ("E x. v3(x) = 2 && v2(x + 1) >= 3", true),
        ("A x. v2(x) >= 1 || v2(x + 1) >= 1", true),
        ("E x. v2(x) = 0 && v2(x + 1) = 0", false),
        ("A x. E y. D3(y) && v2(y - x) >= 5", true),
        ("E x. D4(x) && !D2(x)", false),
        ("A x. x = 0 <-> v2(x) >= 50", false),
        ("A x. x != 0 -> v2(6x) = v2(x) + 1", true),
        ("E x. v2(x - 1) >= 2 && v2(x - 3) >= 2", false),
        ("E x. v3(x - 1) >= 1 && v3(x - 2) >= 1", false),
        ("A x. E y. v2(y) = 0 && v3(y - x) >= 2", true),
        ("E x. v2(x) > v2(x + 2)", true),
        ("A x. v2(x) < v2(x + 4) -> v2(x) = 2", true),
        ("E x. x = 5 && D5(x) && !D25(x)", true),
        ("A x. E y. v3(x - 3y) >= 1", false),
        ("E x. E y. v2(x) = 1 && v2(y) = 1 && v2(x + y) = 1", false),
    ];
    golden.extend(fixed.iter().map(|&(s, t)| (s.to_string(), t)));
    assert!(golden.len() >= 20);
    let cfg = QeConfig::new(default_primes());
    let wrong: Vec<String> = golden
        .iter()
        .filter_map(|(s, want)| {
            let f = parse(s, &cfg.primes).unwrap();
            let got = decide_sentence(&f, &cfg).unwrap();
            (got != *want).then(|| format!("{s}: got {got}, expected {want}"))
        })
        .collect();
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}

#[test]
fn subgroup_recognition() {
    let cfg = QeConfig::new(default_primes());
    for m in 1u64..=60 {
        let f = parse(&format!("D{m}(x)"), &cfg.primes).unwrap();
        let mut rest = m;
        let mut gammas = BTreeMap::new();
        for p in [2u64, 3] {
            let mut g = 0;
            while rest % p == 0 {
                rest /= p;
                g += 1;
            }
            gammas.insert(p, g);
        }
        match recognize_subgroup(&f, &cfg).unwrap() {
            Some(Subgroup::Multiples { n_prime, gammas: got }) => {
                assert_eq!(n_prime, BigInt::from(rest), "D{m}");
                for (p, g) in &gammas {
                    assert_eq!(got.get(p).copied().unwrap_or(0), *g, "D{m}: gamma_{p}");
                }
            }
            other => panic!("D{m}: {other:?}"),
        }
    }
    let non_subgroups = [
        "D2(x - 1)",
        "v2(x - 1) >= 1",
        "x != 0",
        "x = 1",
        "v2(x) = 3",
        "D2(x) || D3(x)",
        "v2(x) >= 1 || v3(x) >= 1",
        "!D2(x)",
        "x = 0 || x = 1",
        "v2(x) <= 2",
        "D4(x) || x = 2",
        "D6(x) || D10(x)",
        "!(v3(x) = 1)",
        "x != 5",
        "v2(x - 4) >= 3",
        "D5(x) && x != 10",
        "E y. x = 2y + 1",
        "v2(x) >= 2 || D9(x)",
        "D3(x) && !D9(x)",
        "x = 0 || v2(x) = 0",
    ];
    assert_eq!(non_subgroups.len(), 20);
    for s in non_subgroups {
        let f = parse(s, &cfg.primes).unwrap();
        assert_eq!(recognize_subgroup(&f, &cfg).unwrap(), None, "{s}");
    }
}
